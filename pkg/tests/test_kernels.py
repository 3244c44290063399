"""Agreement between the compiled kernels and their vectorized numpy twins."""

import numpy as np
import pytest

from rcassoc import kernels
from rcassoc._numba import USE_NUMBA

CODES = range(4)
PAIRS = [(a, b) for a in CODES for b in CODES]
FAMS = [(0.0, True), (-0.5, False), (0.7, False), (2.0, False)]


def _tables(rng, shape, n):
    pis = rng.dirichlet(np.ones(shape[0] * shape[1]), size=n).reshape(n, *shape)
    pis = pis + 0.02 / (shape[0] * shape[1])
    return pis / pis.sum(axis=(1, 2), keepdims=True)


def test_gamma_twins_agree():
    rng = np.random.default_rng(21)
    for shape in [(3, 3), (4, 5), (5, 4)]:
        pis = _tables(rng, shape, 40)
        for c1, c2 in PAIRS:
            for lam, is_kl in FAMS:
                batch_np = kernels._gamma_np(pis, c1, c2, lam, is_kl)
                for k in range(0, 40, 7):
                    single = kernels.gamma_values(pis[k], c1, c2, lam, is_kl)
                    np.testing.assert_allclose(single, batch_np[k], atol=2e-13)


def test_lor_twins_agree():
    rng = np.random.default_rng(22)
    pis = _tables(rng, (4, 4), 60)
    for c1, c2 in PAIRS:
        batch_np = kernels._lor_np(pis, c1, c2)
        batch = kernels.lor_values_batch(pis, c1, c2)
        np.testing.assert_allclose(batch, batch_np, atol=2e-13)
        single = kernels.lor_values(pis[3], c1, c2)
        np.testing.assert_allclose(single, batch_np[3], atol=2e-13)


def test_jacobian_twins_agree():
    rng = np.random.default_rng(23)
    pis = _tables(rng, (4, 3), 10)
    for c1, c2 in [(0, 0), (1, 1), (2, 2), (3, 3), (0, 1), (2, 1), (3, 0)]:
        for lam, is_kl in FAMS:
            for pi in pis[:4]:
                jac = kernels.gamma_jacobian_values(pi, c1, c2, lam, is_kl)
                jac_np = kernels._gamma_jacobian_np(pi, c1, c2, lam, is_kl)
                np.testing.assert_allclose(jac, jac_np, atol=5e-12)


@pytest.mark.skipif(not USE_NUMBA, reason="compiled path disabled by environment")
def test_interpreted_kernel_matches_compiled():
    # the njit dispatcher and its pure-python source must agree exactly
    rng = np.random.default_rng(24)
    pi = _tables(rng, (4, 4), 1)[0]
    for c1, c2 in [(0, 0), (1, 1), (1, 2), (3, 1)]:
        compiled = kernels._gamma_nb(pi, c1, c2, 0.5, False)
        interpreted = kernels._gamma_nb.py_func(pi, c1, c2, 0.5, False)
        np.testing.assert_allclose(compiled, interpreted, atol=1e-15)


def test_event_bounds_match_event_sets():
    # bounds are 0-based half-open; EventSet is 1-based inclusive
    for size in (3, 5, 8):
        for code in CODES:
            for x in range(1, size):
                for b in (0, 1):
                    lo, hi = kernels.event_bounds(x, b, code, size)
                    assert 0 <= lo < hi <= size
                    idx = tuple(range(lo + 1, hi + 1))
                    assert len(idx) >= 1


def test_marginal_logit_values_by_hand():
    m = np.array([0.2, 0.3, 0.5])
    np.testing.assert_allclose(
        kernels.marginal_logit_values(m, 1),  # global
        [np.log(0.8 / 0.2), np.log(0.5 / 0.5)],
        atol=1e-14,
    )
    np.testing.assert_allclose(
        kernels.marginal_logit_values(m, 2),  # continuation
        [np.log(0.8 / 0.2), np.log(0.5 / 0.3)],
        atol=1e-14,
    )
    np.testing.assert_allclose(
        kernels.marginal_logit_values(m, 0),  # local
        [np.log(0.3 / 0.2), np.log(0.5 / 0.3)],
        atol=1e-14,
    )


def test_marginal_logit_jacobian_fd():
    rng = np.random.default_rng(25)
    for code in CODES:
        m = rng.dirichlet(np.ones(5)) + 0.02
        m = m / m.sum()
        jac = kernels.marginal_logit_jacobian(m, code)
        eps = 1e-7
        for k in range(5):
            dm = np.zeros(5)
            dm[k] = eps
            fd = (
                kernels.marginal_logit_values(m + dm, code)
                - kernels.marginal_logit_values(m - dm, code)
            ) / (2 * eps)
            np.testing.assert_allclose(jac[:, k], fd, atol=1e-5)


def test_quadrant_prob_value_matches_sum():
    rng = np.random.default_rng(26)
    pi = _tables(rng, (4, 5), 1)[0]
    for c1, c2 in PAIRS:
        for i in range(1, 4):
            for j in range(1, 5):
                for u in (0, 1):
                    for v in (0, 1):
                        lo1, hi1 = kernels.event_bounds(i, u, c1, 4)
                        lo2, hi2 = kernels.event_bounds(j, v, c2, 5)
                        want = pi[lo1:hi1, lo2:hi2].sum()
                        got = kernels.quadrant_prob_value(pi, i, j, u, v, c1, c2)
                        assert got == pytest.approx(want, abs=1e-14)
