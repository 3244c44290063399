"""Hot numeric kernels: quadrant sums, scaled interactions, log-odds ratios.

Every public function here dispatches between a numba ``@njit`` loop kernel
and a vectorized numpy twin, selected once at import time (see ``_numba``).
The two paths are exercised against each other in the test suite.

Logit types are encoded as small integers (L=0, G=1, C=2, R=3) and the
divergence scale as the pair ``(lam, is_kl)``; the object-level wrappers
live in ``table``, ``divergence`` and ``interactions``.

All event sets are contiguous index ranges, so a joint probability over a
pair of events is an inclusion-exclusion of four entries of the padded
2-D prefix-sum table.  Cut points are 1-based; the returned bounds are
0-based half-open ranges.
"""

import numpy as np

from ._numba import USE_NUMBA, njit

LOGIT_L = 0
LOGIT_G = 1
LOGIT_C = 2
LOGIT_R = 3


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _bounds(x, b, code, size):
    # 0-based half-open range of the event at cut x (1-based).
    if b == 0:
        if code == LOGIT_L or code == LOGIT_C:
            return x - 1, x
        return 0, x
    if code == LOGIT_L or code == LOGIT_R:
        return x, x + 1
    return x, size


@njit(cache=True)
def _padded_cumsum2(pi):
    i1, i2 = pi.shape
    s = np.zeros((i1 + 1, i2 + 1))
    for h in range(i1):
        acc = 0.0
        for k in range(i2):
            acc += pi[h, k]
            s[h + 1, k + 1] = s[h, k + 1] + acc
    return s


@njit(cache=True)
def _flink(u, lam, is_kl):
    if is_kl:
        return np.log(u)
    return (u ** lam - 1.0) / lam


@njit(cache=True)
def _gamma_nb(pi, c1, c2, lam, is_kl):
    i1, i2 = pi.shape
    s = _padded_cumsum2(pi)
    out = np.empty((i1 - 1, i2 - 1))
    for i in range(1, i1):
        for j in range(1, i2):
            acc = 0.0
            for u in range(2):
                lo1, hi1 = _bounds(i, u, c1, i1)
                p1 = s[hi1, i2] - s[lo1, i2]
                for v in range(2):
                    lo2, hi2 = _bounds(j, v, c2, i2)
                    p2 = s[i1, hi2] - s[i1, lo2]
                    p = s[hi1, hi2] - s[lo1, hi2] - s[hi1, lo2] + s[lo1, lo2]
                    rho = p / (p1 * p2)
                    sgn = 1.0 if u == v else -1.0
                    acc += sgn * _flink(rho, lam, is_kl)
            out[i - 1, j - 1] = acc
    return out


@njit(cache=True)
def _lor_nb(pi, c1, c2):
    i1, i2 = pi.shape
    s = _padded_cumsum2(pi)
    out = np.empty((i1 - 1, i2 - 1))
    for i in range(1, i1):
        for j in range(1, i2):
            acc = 0.0
            for u in range(2):
                lo1, hi1 = _bounds(i, u, c1, i1)
                for v in range(2):
                    lo2, hi2 = _bounds(j, v, c2, i2)
                    p = s[hi1, hi2] - s[lo1, hi2] - s[hi1, lo2] + s[lo1, lo2]
                    sgn = 1.0 if u == v else -1.0
                    acc += sgn * np.log(p)
            out[i - 1, j - 1] = acc
    return out


@njit(cache=True)
def _gamma_batch_nb(pis, c1, c2, lam, is_kl):
    n, i1, i2 = pis.shape
    out = np.empty((n, i1 - 1, i2 - 1))
    for t in range(n):
        out[t] = _gamma_nb(pis[t], c1, c2, lam, is_kl)
    return out


@njit(cache=True)
def _lor_batch_nb(pis, c1, c2):
    n, i1, i2 = pis.shape
    out = np.empty((n, i1 - 1, i2 - 1))
    for t in range(n):
        out[t] = _lor_nb(pis[t], c1, c2)
    return out


@njit(cache=True)
def _gamma_jacobian_nb(pi, c1, c2, lam, is_kl):
    # d vec(gamma) / d vec(pi), both raveled in C order.
    i1, i2 = pi.shape
    s = _padded_cumsum2(pi)
    jac = np.zeros(((i1 - 1) * (i2 - 1), i1 * i2))
    for i in range(1, i1):
        for j in range(1, i2):
            row = (i - 1) * (i2 - 1) + (j - 1)
            for u in range(2):
                lo1, hi1 = _bounds(i, u, c1, i1)
                p1 = s[hi1, i2] - s[lo1, i2]
                for v in range(2):
                    lo2, hi2 = _bounds(j, v, c2, i2)
                    p2 = s[i1, hi2] - s[i1, lo2]
                    p = s[hi1, hi2] - s[lo1, hi2] - s[hi1, lo2] + s[lo1, lo2]
                    rho = p / (p1 * p2)
                    sgn = 1.0 if u == v else -1.0
                    # chain rule through log rho: F'(rho) * rho
                    w = sgn if is_kl else sgn * rho ** lam
                    wp = w / p
                    w1 = w / p1
                    w2 = w / p2
                    for h in range(lo1, hi1):
                        base = h * i2
                        for k in range(lo2, hi2):
                            jac[row, base + k] += wp
                        for k in range(i2):
                            jac[row, base + k] -= w1
                    for k in range(lo2, hi2):
                        for h in range(i1):
                            jac[row, h * i2 + k] -= w2
    return jac


# ---------------------------------------------------------------------------
# numpy twins
# ---------------------------------------------------------------------------


def _bounds_arrays(size, code):
    """Per-cut event bounds, stacked: (lo0, hi0, lo1, hi1) arrays of length size-1."""
    x = np.arange(1, size)
    if code in (LOGIT_L, LOGIT_C):
        lo0, hi0 = x - 1, x
    else:
        lo0, hi0 = np.zeros(size - 1, dtype=np.int64), x
    if code in (LOGIT_L, LOGIT_R):
        lo1, hi1 = x, x + 1
    else:
        lo1, hi1 = x, np.full(size - 1, size, dtype=np.int64)
    return lo0, hi0, lo1, hi1


def _padded_cumsum2_np(pis):
    head = pis.shape[:-2]
    i1, i2 = pis.shape[-2:]
    s = np.zeros(head + (i1 + 1, i2 + 1))
    s[..., 1:, 1:] = pis.cumsum(axis=-2).cumsum(axis=-1)
    return s


def _flink_np(u, lam, is_kl):
    if is_kl:
        return np.log(u)
    return (u ** lam - 1.0) / lam


def _quadrants_np(pis, c1, c2):
    """Joint, row and column event sums for every cut pair and (u, v).

    Returns ``(p, p1, p2)`` with shapes ``(..., 2, 2, i1-1, i2-1)``,
    ``(..., 2, i1-1)`` and ``(..., 2, i2-1)``.
    """
    i1, i2 = pis.shape[-2:]
    s = _padded_cumsum2_np(pis)
    b1 = _bounds_arrays(i1, c1)
    b2 = _bounds_arrays(i2, c2)
    rowm = s[..., :, i2]
    colm = s[..., i1, :]
    head = pis.shape[:-2]
    p = np.empty(head + (2, 2, i1 - 1, i2 - 1))
    p1 = np.empty(head + (2, i1 - 1))
    p2 = np.empty(head + (2, i2 - 1))
    for u in (0, 1):
        lo1, hi1 = b1[2 * u], b1[2 * u + 1]
        p1[..., u, :] = rowm[..., hi1] - rowm[..., lo1]
        for v in (0, 1):
            lo2, hi2 = b2[2 * v], b2[2 * v + 1]
            if u == 0:
                p2[..., v, :] = colm[..., hi2] - colm[..., lo2]
            p[..., u, v, :, :] = (
                s[..., hi1[:, None], hi2[None, :]]
                - s[..., lo1[:, None], hi2[None, :]]
                - s[..., hi1[:, None], lo2[None, :]]
                + s[..., lo1[:, None], lo2[None, :]]
            )
    return p, p1, p2


def _gamma_np(pis, c1, c2, lam, is_kl):
    p, p1, p2 = _quadrants_np(pis, c1, c2)
    out = 0.0
    for u in (0, 1):
        for v in (0, 1):
            rho = p[..., u, v, :, :] / (p1[..., u, :, None] * p2[..., v, None, :])
            sgn = 1.0 if u == v else -1.0
            out = out + sgn * _flink_np(rho, lam, is_kl)
    return out


def _lor_np(pis, c1, c2):
    p, _, _ = _quadrants_np(pis, c1, c2)
    lp = np.log(p)
    return (
        lp[..., 1, 1, :, :]
        - lp[..., 1, 0, :, :]
        - lp[..., 0, 1, :, :]
        + lp[..., 0, 0, :, :]
    )


def _event_indicators(size, code):
    """Boolean (2, size-1, size) masks: cell membership per (b, cut)."""
    lo0, hi0, lo1, hi1 = _bounds_arrays(size, code)
    cells = np.arange(size)
    r0 = (cells >= lo0[:, None]) & (cells < hi0[:, None])
    r1 = (cells >= lo1[:, None]) & (cells < hi1[:, None])
    return np.stack([r0, r1]).astype(float)


def _gamma_jacobian_np(pi, c1, c2, lam, is_kl):
    i1, i2 = pi.shape
    p, p1, p2 = _quadrants_np(pi, c1, c2)
    r1 = _event_indicators(i1, c1)
    r2 = _event_indicators(i2, c2)
    jac = np.zeros((i1 - 1, i2 - 1, i1, i2))
    for u in (0, 1):
        for v in (0, 1):
            puv = p[u, v]
            rho = puv / (p1[u][:, None] * p2[v][None, :])
            sgn = 1.0 if u == v else -1.0
            w = np.full_like(rho, sgn) if is_kl else sgn * rho ** lam
            jac += np.einsum("ij,ih,jk->ijhk", w / puv, r1[u], r2[v])
            jac -= np.einsum("ij,ih->ijh", w / p1[u][:, None], r1[u])[..., None]
            jac -= np.einsum("ij,jk->ijk", w / p2[v][None, :], r2[v])[:, :, None, :]
    return jac.reshape((i1 - 1) * (i2 - 1), i1 * i2)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _as_table(pi):
    pi = np.ascontiguousarray(pi, dtype=np.float64)
    if pi.ndim != 2:
        raise ValueError(f"expected a 2-d probability table, got shape {pi.shape}")
    return pi


def _as_batch(pis):
    pis = np.ascontiguousarray(pis, dtype=np.float64)
    if pis.ndim != 3:
        raise ValueError(f"expected a stack of tables, got shape {pis.shape}")
    return pis


def gamma_values(pi, c1, c2, lam, is_kl):
    """Scaled interaction matrix of one table; shape (I1-1, I2-1)."""
    pi = _as_table(pi)
    if USE_NUMBA:
        return _gamma_nb(pi, c1, c2, float(lam), is_kl)
    return _gamma_np(pi, c1, c2, float(lam), is_kl)


def lor_values(pi, c1, c2):
    """Log-odds-ratio matrix of one table; shape (I1-1, I2-1)."""
    pi = _as_table(pi)
    if USE_NUMBA:
        return _lor_nb(pi, c1, c2)
    return _lor_np(pi, c1, c2)


def gamma_values_batch(pis, c1, c2, lam, is_kl):
    """Scaled interactions for a stack of tables; shape (n, I1-1, I2-1)."""
    pis = _as_batch(pis)
    if USE_NUMBA:
        return _gamma_batch_nb(pis, c1, c2, float(lam), is_kl)
    return _gamma_np(pis, c1, c2, float(lam), is_kl)


def lor_values_batch(pis, c1, c2):
    """Log-odds ratios for a stack of tables; shape (n, I1-1, I2-1)."""
    pis = _as_batch(pis)
    if USE_NUMBA:
        return _lor_batch_nb(pis, c1, c2)
    return _lor_np(pis, c1, c2)


def gamma_jacobian_values(pi, c1, c2, lam, is_kl):
    """d vec(gamma) / d vec(pi) in C order; shape ((I1-1)(I2-1), I1*I2)."""
    pi = _as_table(pi)
    if USE_NUMBA:
        return _gamma_jacobian_nb(pi, c1, c2, float(lam), is_kl)
    return _gamma_jacobian_np(pi, c1, c2, float(lam), is_kl)


def event_bounds(x, b, code, size):
    """0-based half-open range [lo, hi) of the event at 1-based cut ``x``."""
    return _bounds(x, b, code, size)


def quadrant_prob_value(pi, i, j, u, v, c1, c2):
    """Joint probability of the (u, v) event pair at cut (i, j)."""
    pi = _as_table(pi)
    i1, i2 = pi.shape
    lo1, hi1 = _bounds(i, u, c1, i1)
    lo2, hi2 = _bounds(j, v, c2, i2)
    return float(pi[lo1:hi1, lo2:hi2].sum())


def marginal_event_sum(margin, x, b, code):
    """Probability of the event at cut ``x`` under a marginal distribution."""
    lo, hi = _bounds(x, b, code, margin.shape[0])
    return float(margin[lo:hi].sum())


def marginal_logit_values(margin, code):
    """Marginal logits of one margin; shape (I-1,)."""
    margin = np.asarray(margin, dtype=np.float64)
    size = margin.shape[0]
    cum = np.concatenate(([0.0], np.cumsum(margin)))
    lo0, hi0, lo1, hi1 = _bounds_arrays(size, code)
    return np.log(cum[hi1] - cum[lo1]) - np.log(cum[hi0] - cum[lo0])


def marginal_logit_jacobian(margin, code):
    """d logits / d margin; shape (I-1, I)."""
    margin = np.asarray(margin, dtype=np.float64)
    size = margin.shape[0]
    cum = np.concatenate(([0.0], np.cumsum(margin)))
    lo0, hi0, lo1, hi1 = _bounds_arrays(size, code)
    p0 = cum[hi0] - cum[lo0]
    p1 = cum[hi1] - cum[lo1]
    ind = _event_indicators(size, code)
    return ind[1] / p1[:, None] - ind[0] / p0[:, None]
