import math

import numpy as np
import pytest

from webest._validation import check_p, check_smooth_kind, wrap_phase
from webest.waveform import (
    CorrelationSet,
    PhaseConstraint,
    WaveformSet,
    WeightVector,
    alphabet_index,
    as_weights,
    frobenius_delta,
    random_mpsk_init,
    sidelobe_indices,
    sidelobe_mask,
)


def test_wrap_phase_range():
    phi = np.array([-3 * math.pi, -math.pi, 0.0, math.pi, 3 * math.pi, 7.0, -7.0])
    out = wrap_phase(phi)
    assert np.all(out > -math.pi) and np.all(out <= math.pi)
    assert out[1] == math.pi and out[3] == math.pi
    assert np.allclose(np.exp(1j * out), np.exp(1j * phi))


def test_wrap_phase_identity_inside_range():
    phi = np.linspace(-math.pi + 1e-9, math.pi, 101)
    assert np.array_equal(wrap_phase(phi), phi)


def test_phase_constraint_parse():
    assert PhaseConstraint.parse("inf").L is None
    assert PhaseConstraint.parse("8").L == 8
    assert PhaseConstraint.parse(4) == PhaseConstraint(4)
    assert str(PhaseConstraint(16)) == "16"
    assert str(PhaseConstraint()) == "inf"
    for bad in (1, 0, "x", 2.5):
        with pytest.raises(ValueError):
            PhaseConstraint.parse(bad)


def test_waveform_set_is_unimodular_and_read_only():
    X = random_mpsk_init(3, 10, None, seed=1)
    assert np.allclose(np.abs(X.x), 1.0)
    with pytest.raises(ValueError):
        X.phases[0, 0] = 1.0


def test_waveform_set_rejects_bad_shapes_and_values():
    with pytest.raises(ValueError):
        WaveformSet(np.zeros((2, 1)))
    with pytest.raises(ValueError):
        WaveformSet(np.array([[0.0, np.nan]]))
    with pytest.raises(ValueError, match="row 0, column 1"):
        WaveformSet(np.array([[0.0, 0.1]]), PhaseConstraint(4))


def test_from_complex_checks_modulus():
    x = np.exp(1j * np.array([[0.1, 0.2, 0.3]]))
    assert np.allclose(WaveformSet.from_complex(x).phases, [[0.1, 0.2, 0.3]])
    x[0, 1] *= 1.01
    with pytest.raises(ValueError, match="modulus"):
        WaveformSet.from_complex(x)


def test_discrete_phases_snapped_to_canonical_alphabet():
    L = 8
    X = WaveformSet(np.array([[2 * math.pi * 5 / L, -math.pi, 0.0]]), PhaseConstraint(L))
    assert X.phases[0, 1] == math.pi
    assert np.array_equal(alphabet_index(X.phases, L), [[5, 4, 0]])


def test_mpsk_init_binary_alphabet():
    X = random_mpsk_init(3, 40, 2, seed=0)
    assert set(np.round(np.abs(X.phases), 12).ravel()) <= {0.0, round(math.pi, 12)}


def test_mpsk_init_deterministic():
    a = random_mpsk_init(4, 64, 8, seed=5)
    b = random_mpsk_init(4, 64, 8, seed=5)
    assert a == b
    assert a != random_mpsk_init(4, 64, 8, seed=6)


def test_mpsk_init_histogram_roughly_uniform():
    X = random_mpsk_init(4, 64, 8, seed=3)
    counts = np.bincount(alphabet_index(X.phases, 8).ravel(), minlength=8)
    expected = X.phases.size / 8
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    # 7 degrees of freedom; 24.3 is the 0.999 quantile
    assert chi2 < 24.3


def test_weight_vector_validation_and_band():
    w = WeightVector.band(512, -51, 51)
    k = w.lags
    assert np.array_equal(w.w == 1.0, np.abs(k) <= 51)
    assert w.at(-51) == 1.0 and w.at(52) == 0.0
    with pytest.raises(ValueError):
        WeightVector.band(8, -8, 0)
    with pytest.raises(ValueError, match="outside"):
        WeightVector(np.array([0.5, 1.5, 0.5]))
    with pytest.raises(ValueError):
        WeightVector(np.ones(4))
    with pytest.raises(ValueError):
        as_weights(np.ones(5), 4)


def test_sidelobe_index_set_cardinality():
    M, N = 3, 5
    assert sum(1 for _ in sidelobe_indices(M, N)) == M * M * (2 * N - 1) - M
    assert sidelobe_mask(M, N).sum() == M * M * (2 * N - 1) - M


def test_correlation_set_lag_accessor():
    r = np.arange(2 * 2 * 5, dtype=complex).reshape(2, 2, 5)
    cs = CorrelationSet(r)
    assert cs.M == 2 and cs.N == 3
    assert cs.lag(1, 0, -2) == r[1, 0, 0]


def test_frobenius_delta_matches_entrywise_sum():
    X = random_mpsk_init(2, 6, None, seed=1)
    Y = random_mpsk_init(2, 6, None, seed=2)
    direct = math.sqrt(sum(abs(a - b) ** 2 for a, b in zip(X.x.ravel(), Y.x.ravel())))
    assert frobenius_delta(X, Y) == pytest.approx(direct, rel=1e-14)


def test_validation_helpers():
    assert check_p(2) == 2.0
    for bad in (0, -1, float("nan"), float("inf")):
        with pytest.raises(ValueError):
            check_p(bad)
    with pytest.raises(ValueError):
        check_smooth_kind(1, 1.5)
    with pytest.raises(ValueError):
        check_smooth_kind(4, 0.5)
    assert check_smooth_kind(2, 3.0) == 2
