import numpy as np
import pytest
from hypothesis import given, strategies as st

from emac.errors import DegeneratePoles, OrderTooLarge, RankDeficient
from emac.retrieval import fit_amplitudes, frequency_error, match_modes, matrix_pencil_1d
from emac.signal import Mode, SpectralSignal, synthesize


def line(n, modes):
    return synthesize(SpectralSignal((n, 1), tuple(modes))).values[:, 0]


def test_single_mode():
    est = matrix_pencil_1d(line(16, [Mode((0.25,), 1.0)]), r=1, k=8)
    assert est.poles[0] == pytest.approx(1j, abs=1e-8)
    assert est.freqs[0] == pytest.approx(0.25, abs=1e-8)
    assert est.dampings[0] == pytest.approx(1.0, abs=1e-8)
    assert est.amplitudes[0] == pytest.approx(1.0, abs=1e-8)


def test_damped_pair_default_pencil():
    x = line(127, [Mode((0.1,), 1.0, (0.99,)), Mode((0.6,), 0.5j)])
    est = matrix_pencil_1d(x, r=2)
    truth = np.array([0.99 * np.exp(2j * np.pi * 0.1), np.exp(2j * np.pi * 0.6)])
    np.testing.assert_allclose(est.poles, truth, atol=1e-6)
    np.testing.assert_allclose(est.amplitudes, [1.0, 0.5j], atol=1e-6)


def test_overestimated_order_is_rank_deficient():
    x = line(32, [Mode((0.1,), 1.0), Mode((0.3,), 1.0)])
    with pytest.raises(RankDeficient):
        matrix_pencil_1d(x, r=3)


def test_order_limits():
    with pytest.raises(OrderTooLarge):
        matrix_pencil_1d(np.ones(2), r=1)
    with pytest.raises(OrderTooLarge):
        matrix_pencil_1d(np.ones(10), r=5)
    with pytest.raises(OrderTooLarge):
        matrix_pencil_1d(np.ones(10), r=1, k=11)


def test_fit_amplitudes_examples():
    pole = np.exp(2j * np.pi * 0.2)
    d, res = fit_amplitudes((3 + 4j) * pole ** np.arange(10), [pole])
    assert d[0] == pytest.approx(3 + 4j)
    assert res <= 1e-10
    d, res = fit_amplitudes(np.zeros(6), [pole])
    assert d[0] == 0 and res == 0
    x = line(12, [Mode((0.1,), 1.0), Mode((0.7,), 2.0)])
    _, res = fit_amplitudes(x, np.exp(2j * np.pi * np.array([0.1, 0.7])))
    assert res <= 1e-10
    with pytest.raises(DegeneratePoles):
        fit_amplitudes(x, [pole, pole + 1e-12])


@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_round_trip(seed, r):
    rng = np.random.default_rng(seed)
    n = max(4 * r, 8) + int(rng.integers(0, 20))
    # well separated so the Vandermonde system is well conditioned
    base = rng.random()
    freqs = (base + np.arange(r) / r + rng.uniform(0, 0.3 / r, r)) % 1.0
    modes = [Mode((f,), complex(*rng.standard_normal(2)) + 0.5, (rng.uniform(0.95, 1.0),)) for f in freqs]
    x = line(n, modes)
    est = matrix_pencil_1d(x, r)
    assert np.all((est.freqs >= 0) & (est.freqs < 1))
    assert match_modes(est.freqs, freqs, tol=1e-6)
    back = synthesize(est.to_signal(n)).values[:, 0]
    assert np.linalg.norm(back - x) <= 1e-8 * np.linalg.norm(x)


def test_match_modes_is_order_free():
    assert match_modes([0.9, 0.1], [0.1, 0.9])
    assert match_modes([0.9999999999], [0.0], tol=1e-6)
    assert not match_modes([0.1, 0.1], [0.1, 0.2])
    assert not match_modes([0.1], [0.1, 0.2])
    assert frequency_error([0.1, 0.205], [0.2, 0.1]) == pytest.approx(0.005)


def test_to_dict_fields():
    d = matrix_pencil_1d(line(16, [Mode((0.25,), 1.0)]), 1).to_dict()
    assert set(d) == {"poles", "freqs", "dampings", "amplitudes", "residual"}
