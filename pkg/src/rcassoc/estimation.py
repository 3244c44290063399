"""Constrained maximum likelihood by the Aitchison-Silvey regression method.

The model is a multinomial over the table cells, parametrized canonically
(log pi = basis theta - log-sum-exp), subject to the nonlinear constraint
vector h(theta) = 0 stacking

* the rank-K deflation residual of the scaled interaction matrix, and
* optional linear restrictions on the invariant vector
  [row marginal logits; column marginal logits; vec gamma].

Each iteration maximizes a quadratic approximation of the log-likelihood
subject to the linearized constraints.  With score s0, information F0,
constraint value h0 and constraint gradients H0 (columns are gradients),
the step direction is v - u where u is the minimum-norm solution of
H0' u = h0, X spans the null space of H0', and

    v = X (X' F0 X)^-1 X' F0 (u + F0^-1 s0).

A cubic line search on f(t) = y' log pi(t) / n - h(t)' h(t) / 2 picks the
step length.  Deflation pivots are frozen for the duration of one outer
iteration so h stays smooth along the search path.
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
from scipy.stats import chi2

from . import kernels
from .divergence import DivergenceFamily, LinkDomainError
from .rank import PivotError, apply_plan, rank_residual, rank_residual_jacobian
from .table import ContingencyTable, LogitType

__all__ = [
    "ModelSpec",
    "CanonicalParam",
    "FitResult",
    "LinearConstraint",
    "MarginalHomogeneity",
    "MarginalShift",
    "EqualRowSpacing",
    "EqualColumnSpacing",
    "Custom",
    "RedundantConstraintWarning",
    "constraint_from_name",
    "canonical_to_prob",
    "theta_from_prob",
    "score_info",
    "constraint_eval",
    "as_step",
    "line_search",
    "fit",
    "deviance_dof",
]


class RedundantConstraintWarning(UserWarning):
    """Stacked constraint gradients are linearly dependent; dropping rows."""


# ---------------------------------------------------------------------------
# linear constraints on [eta_row; eta_col; vec gamma]
# ---------------------------------------------------------------------------


def _first_difference(m):
    return np.eye(m - 1, m) - np.eye(m - 1, m, k=1)


class LinearConstraint:
    """Linear restriction A [eta_row; eta_col; vec gamma] = offset."""

    name = "custom"

    def validate(self, shape, spec):
        pass

    def coefficients(self, shape):
        """(A_row, A_col, A_gamma, offset) blocks for a table of ``shape``."""
        raise NotImplementedError


def _require_square_same_logits(shape, spec, name):
    if shape[0] != shape[1]:
        raise ValueError(f"{name} requires a square table, got {shape[0]}x{shape[1]}")
    if spec is not None and spec.pair[0] != spec.pair[1]:
        raise ValueError(f"{name} requires identical row and column logit types")


@dataclass(frozen=True)
class MarginalHomogeneity(LinearConstraint):
    """Row and column marginal logits coincide: eta_row(i) = eta_col(i)."""

    name = "marginal-homogeneity"

    def validate(self, shape, spec):
        _require_square_same_logits(shape, spec, self.name)

    def coefficients(self, shape):
        m = shape[0] - 1
        eye = np.eye(m)
        zeros = np.zeros((m, (shape[0] - 1) * (shape[1] - 1)))
        return eye, -eye, zeros, np.zeros(m)


@dataclass(frozen=True)
class MarginalShift(LinearConstraint):
    """eta_row - eta_col is a constant shift: its differences vanish."""

    name = "marginal-shift"

    def validate(self, shape, spec):
        _require_square_same_logits(shape, spec, self.name)
        if shape[0] < 3:
            raise ValueError(f"{self.name} needs at least 3 categories")

    def coefficients(self, shape):
        d = _first_difference(shape[0] - 1)
        zeros = np.zeros((d.shape[0], (shape[0] - 1) * (shape[1] - 1)))
        return d, -d, zeros, np.zeros(d.shape[0])


@dataclass(frozen=True)
class EqualRowSpacing(LinearConstraint):
    """Adjacent rows of gamma coincide (the "R" model)."""

    name = "equal-row-spacing"

    def validate(self, shape, spec):
        if shape[0] < 3:
            raise ValueError(f"{self.name} needs at least 3 row categories")

    def coefficients(self, shape):
        m1, m2 = shape[0] - 1, shape[1] - 1
        a = np.kron(_first_difference(m1), np.eye(m2))
        k = a.shape[0]
        return np.zeros((k, m1)), np.zeros((k, m2)), a, np.zeros(k)


@dataclass(frozen=True)
class EqualColumnSpacing(LinearConstraint):
    """Adjacent columns of gamma coincide (the "C" model)."""

    name = "equal-column-spacing"

    def validate(self, shape, spec):
        if shape[1] < 3:
            raise ValueError(f"{self.name} needs at least 3 column categories")

    def coefficients(self, shape):
        m1, m2 = shape[0] - 1, shape[1] - 1
        a = np.kron(np.eye(m1), _first_difference(m2))
        k = a.shape[0]
        return np.zeros((k, m1)), np.zeros((k, m2)), a, np.zeros(k)


@dataclass(frozen=True)
class Custom(LinearConstraint):
    """A @ [eta_row; eta_col; vec gamma] = offset for a user matrix A."""

    matrix: np.ndarray
    offset: np.ndarray | None = None

    name = "custom"

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.matrix, dtype=np.float64))
        off = (
            np.zeros(a.shape[0])
            if self.offset is None
            else np.asarray(self.offset, dtype=np.float64).reshape(-1)
        )
        if off.shape[0] != a.shape[0]:
            raise ValueError("offset length must match the number of rows of A")
        a.setflags(write=False)
        off.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "offset", off)

    def validate(self, shape, spec):
        width = (shape[0] - 1) + (shape[1] - 1) + (shape[0] - 1) * (shape[1] - 1)
        if self.matrix.shape[1] != width:
            raise ValueError(
                f"custom constraint matrix has {self.matrix.shape[1]} columns, "
                f"expected {width} for a {shape[0]}x{shape[1]} table"
            )

    def coefficients(self, shape):
        m1, m2 = shape[0] - 1, shape[1] - 1
        a = self.matrix
        return a[:, :m1], a[:, m1 : m1 + m2], a[:, m1 + m2 :], self.offset


_CONSTRAINT_NAMES = {
    "marginal-homogeneity": MarginalHomogeneity,
    "marginal-shift": MarginalShift,
    "equal-row-spacing": EqualRowSpacing,
    "equal-column-spacing": EqualColumnSpacing,
}


def constraint_names():
    """Names accepted by constraint_from_name."""
    return tuple(sorted(_CONSTRAINT_NAMES))


def constraint_from_name(name):
    """Instantiate a named linear constraint (CLI spelling, lowercase)."""
    key = str(name).strip().lower()
    try:
        return _CONSTRAINT_NAMES[key]()
    except KeyError:
        raise ValueError(
            f"unknown constraint {name!r}; expected one of {sorted(_CONSTRAINT_NAMES)}"
        ) from None


# ---------------------------------------------------------------------------
# model specification and canonical parametrization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    """A model: logit pair, divergence family, rank bound, linear restrictions."""

    pair: tuple[LogitType, LogitType]
    family: DivergenceFamily
    rank: int
    linear_constraints: tuple = ()
    identifiability: str = "weighted"

    def __post_init__(self):
        object.__setattr__(
            self, "pair", (LogitType.parse(self.pair[0]), LogitType.parse(self.pair[1]))
        )
        object.__setattr__(self, "rank", int(self.rank))
        object.__setattr__(self, "linear_constraints", tuple(self.linear_constraints))
        if self.rank < 0:
            raise ValueError("rank must be non-negative")
        for c in self.linear_constraints:
            if not isinstance(c, LinearConstraint):
                raise TypeError(f"not a linear constraint: {c!r}")

    @property
    def K(self):
        return self.rank

    def validate_shape(self, shape):
        kmax = min(shape) - 1
        if self.rank > kmax:
            raise ValueError(f"rank {self.rank} exceeds the maximum {kmax} for shape {shape}")
        for c in self.linear_constraints:
            c.validate(shape, self)

    def rank_block_active(self, shape):
        """Whether the deflation residual contributes equations.

        The block is vacuous at the maximal rank, and structurally redundant
        when a spacing constraint is present with K >= 1: equal rows (or
        columns) of gamma force rank(gamma) <= 1, so keeping the nonlinear
        residual would make the stacked system irregular at the solution.
        """
        if self.rank >= min(shape) - 1:
            return False
        if self.rank >= 1 and any(
            isinstance(c, (EqualRowSpacing, EqualColumnSpacing))
            for c in self.linear_constraints
        ):
            return False
        return True

    def describe(self):
        cons = ",".join(c.name for c in self.linear_constraints) or "none"
        return (
            f"{self.pair[0].value}{self.pair[1].value} "
            f"{self.family} K={self.rank} constraints={cons}"
        )


def _standard_basis(ncells):
    basis = np.zeros((ncells, ncells - 1))
    basis[: ncells - 1, :] = np.eye(ncells - 1)
    return basis


@dataclass(frozen=True)
class CanonicalParam:
    """Multinomial canonical parameters: log pi = basis theta - log-sum-exp."""

    theta: np.ndarray
    basis: np.ndarray
    shape: tuple[int, int]

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        basis = np.asarray(self.basis, dtype=np.float64)
        if basis.shape != (theta.shape[0] + 1, theta.shape[0]):
            raise ValueError(
                f"basis shape {basis.shape} does not match theta length {theta.shape[0]}"
            )
        if basis.shape[0] != self.shape[0] * self.shape[1]:
            raise ValueError("basis rows must equal the number of table cells")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "basis", basis)

    @classmethod
    def standard(cls, theta, shape):
        """Cell-indicator contrasts relative to the last cell."""
        theta = np.asarray(theta, dtype=np.float64).reshape(-1)
        return cls(theta, _standard_basis(theta.shape[0] + 1), tuple(shape))


def canonical_to_prob(p):
    """Strictly positive probability matrix of a CanonicalParam."""
    z = p.basis @ p.theta
    z = z - z.max()
    e = np.exp(z)
    return (e / e.sum()).reshape(p.shape)


def theta_from_prob(pi, basis=None):
    """Invert canonical_to_prob for a strictly positive table.

    Solves log pi = basis theta + c 1 jointly in (theta, c) by least
    squares; exactly solvable for any full-rank basis, and for the standard
    basis it reduces to theta_i = log(pi_i / pi_last).
    """
    pi = np.asarray(pi, dtype=np.float64)
    if np.any(pi <= 0):
        raise ValueError("theta_from_prob needs a strictly positive table")
    logp = np.log(pi.reshape(-1))
    if basis is None:
        return logp[:-1] - logp[-1]
    design = np.column_stack([basis, np.ones(basis.shape[0])])
    sol, *_ = np.linalg.lstsq(design, logp, rcond=None)
    return sol[:-1]


# ---------------------------------------------------------------------------
# per-point workspace
# ---------------------------------------------------------------------------


class _Workspace:
    """All quantities needed at one theta: pi, invariants, jacobians."""

    def __init__(self, theta, spec, shape):
        self.theta = np.asarray(theta, dtype=np.float64)
        self.spec = spec
        self.shape = shape
        i1, i2 = shape
        ncells = i1 * i2
        z = np.append(self.theta, 0.0)
        z -= z.max()
        e = np.exp(z)
        self.pi = e / e.sum()
        self.pi2d = self.pi.reshape(shape)
        cov = np.diag(self.pi) - np.outer(self.pi, self.pi)
        self.dpi_dtheta = cov[:, :-1]
        fam = spec.family
        lam = 0.0 if fam.is_kl else fam.lam
        c1, c2 = spec.pair[0].code, spec.pair[1].code
        self.gamma = kernels.gamma_values(self.pi2d, c1, c2, lam, fam.is_kl)
        self.gamma_jac_pi = kernels.gamma_jacobian_values(self.pi2d, c1, c2, lam, fam.is_kl)
        rowm = self.pi2d.sum(axis=1)
        colm = self.pi2d.sum(axis=0)
        self.eta_row = kernels.marginal_logit_values(rowm, c1)
        self.eta_col = kernels.marginal_logit_values(colm, c2)
        self.eta_row_jac_pi = np.repeat(
            kernels.marginal_logit_jacobian(rowm, c1), i2, axis=1
        )
        self.eta_col_jac_pi = np.tile(kernels.marginal_logit_jacobian(colm, c2), (1, i1))

    def constraints(self, plan=None):
        """(h, jac_theta, plan); selects deflation pivots when plan is None."""
        spec, shape = self.spec, self.shape
        parts_h, parts_j = [], []
        if spec.rank_block_active(shape):
            if plan is None:
                resid, plan = rank_residual(self.gamma, spec.rank)
            else:
                resid = apply_plan(self.gamma, plan)
            parts_h.append(resid)
            parts_j.append(rank_residual_jacobian(self.gamma, plan) @ self.gamma_jac_pi)
        for c in spec.linear_constraints:
            a_r, a_c, a_g, off = c.coefficients(shape)
            parts_h.append(a_r @ self.eta_row + a_c @ self.eta_col + a_g @ self.gamma.ravel() - off)
            parts_j.append(
                a_r @ self.eta_row_jac_pi + a_c @ self.eta_col_jac_pi + a_g @ self.gamma_jac_pi
            )
        d = self.theta.shape[0]
        if not parts_h:
            return np.zeros(0), np.zeros((0, d)), plan
        h = np.concatenate(parts_h)
        jac = np.vstack(parts_j) @ self.dpi_dtheta
        return h, jac, plan

    def constraint_values(self, plan):
        """h only, with a frozen plan (line-search path)."""
        spec, shape = self.spec, self.shape
        parts = []
        if spec.rank_block_active(shape):
            parts.append(apply_plan(self.gamma, plan))
        for c in spec.linear_constraints:
            a_r, a_c, a_g, off = c.coefficients(shape)
            parts.append(a_r @ self.eta_row + a_c @ self.eta_col + a_g @ self.gamma.ravel() - off)
        return np.concatenate(parts) if parts else np.zeros(0)

    def score_info(self, y):
        s = (y - y.sum() * self.pi)[:-1]
        info = y.sum() * (np.diag(self.pi) - np.outer(self.pi, self.pi))[:-1, :-1]
        return s, info

    def loglik(self, y):
        return float(y @ np.log(self.pi))


def _param_workspace(p, spec):
    pi = canonical_to_prob(p)
    theta = theta_from_prob(pi)
    return _Workspace(theta, spec, p.shape)


# ---------------------------------------------------------------------------
# public operations on CanonicalParam
# ---------------------------------------------------------------------------


def score_info(p, y):
    """Score basis'(y - n pi) and information n basis'(diag pi - pi pi')basis."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    pi = canonical_to_prob(p).reshape(-1)
    n = y.sum()
    resid = y - n * pi
    cov = np.diag(pi) - np.outer(pi, pi)
    return p.basis.T @ resid, n * (p.basis.T @ cov @ p.basis)


def constraint_eval(p, spec, plan=None):
    """Constraint residual h and gradient matrix H (columns are gradients).

    H is d-by-k with k the number of stacked equations, i.e. the transpose
    of dh/dtheta.  Pass ``plan`` to freeze the deflation pivots.
    """
    spec.validate_shape(p.shape)
    ws = _param_workspace(p, spec)
    h, jac, _ = ws.constraints(plan)
    return h, jac.T


def _reduce_rows(h, jac, warn):
    """Drop linearly dependent constraint rows via pivoted QR."""
    k = jac.shape[0]
    if k == 0:
        return h, jac
    r = np.linalg.matrix_rank(jac)
    if r == k:
        return h, jac
    if warn:
        warnings.warn(
            f"{k - r} of {k} constraint equations are redundant; dropping dependent rows",
            RedundantConstraintWarning,
            stacklevel=3,
        )
    _, _, piv = scipy.linalg.qr(jac.T, mode="economic", pivoting=True)
    keep = np.sort(piv[:r])
    return h[keep], jac[keep]


def _null_space(jac, d):
    if jac.shape[0] == 0:
        return np.eye(d)
    return scipy.linalg.null_space(jac)


def _direction(ws, y, h, jac, warn_redundant):
    """Aitchison-Silvey direction v - u and its pieces at one workspace."""
    s, info = ws.score_info(y)
    d = ws.theta.shape[0]
    h_red, jac_red = _reduce_rows(h, jac, warn_redundant)
    if jac_red.shape[0] == 0:
        u = np.zeros(d)
        v = np.linalg.solve(info, s)
        return v - u, v, u, s, info
    u, *_ = np.linalg.lstsq(jac_red, h_red, rcond=None)
    x = _null_space(jac_red, d)
    if x.shape[1] == 0:
        return -u, np.zeros(d), u, s, info
    rhs = x.T @ (info @ u + s)
    v = x @ np.linalg.solve(x.T @ info @ x, rhs)
    return v - u, v, u, s, info


def as_step(p, y, spec, plan=None):
    """One regression step: (v, h0, H0) with update path theta + t (v - u).

    u is the minimum-norm solution of H0' u = h0; redundant constraint rows
    are dropped (with a warning) before the least-squares algebra.
    """
    spec.validate_shape(p.shape)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    ws = _param_workspace(p, spec)
    h, jac, _ = ws.constraints(plan)
    _, v, _, _, _ = _direction(ws, y, h, jac, warn_redundant=True)
    return v, h, jac.T


def _cubic_local_max(f0, fp0, f14, f12):
    """Interior local maximizer of the cubic through f(0), f'(0), f(1/4), f(1/2).

    Returns None when the fitted cubic has no local maximum at t > 0.
    """
    if not np.all(np.isfinite([f0, fp0, f14, f12])):
        return None
    rhs = np.array([f14 - f0 - fp0 / 4.0, f12 - f0 - fp0 / 2.0])
    m = np.array([[1.0 / 64.0, 1.0 / 16.0], [1.0 / 8.0, 1.0 / 4.0]])
    a, b = np.linalg.solve(m, rhs)
    if abs(a) < 1e-12 * max(1.0, abs(b), abs(fp0)):
        # effectively quadratic
        if b >= 0:
            return None
        t = -fp0 / (2.0 * b)
        return t if t > 0 else None
    disc = b * b - 3.0 * a * fp0
    if disc < 0:
        return None
    root = np.sqrt(disc)
    # local max where the second derivative 6 a t + 2 b is negative
    t = (-b - root) / (3.0 * a) if a > 0 else (-b + root) / (3.0 * a)
    return t if t > 0 else None


def _objective(theta, y, spec, shape, plan):
    try:
        ws = _Workspace(theta, spec, shape)
        h = ws.constraint_values(plan)
    except (LinkDomainError, PivotError, FloatingPointError, ZeroDivisionError):
        return -np.inf
    val = ws.loglik(y) / y.sum() - 0.5 * float(h @ h)
    return val if np.isfinite(val) else -np.inf


def line_search(p, direction, y, spec, plan=None):
    """Step length in (0, 1] increasing f(t) = y'log pi(t)/n - h'h/2.

    Prefers the interior local maximum of the cubic fitted through f(0),
    f'(0), f(1/4), f(1/2), clipped to 1; falls back to halving from t = 1.
    Returns None when no step improves f (stall / convergence signal).
    """
    direction = np.asarray(direction, dtype=np.float64).reshape(-1)
    if not np.any(direction):
        return None
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    spec.validate_shape(p.shape)
    ws0 = _param_workspace(p, spec)
    theta0 = ws0.theta
    h0, jac, plan = ws0.constraints(plan)
    s0, _ = ws0.score_info(y)
    f0 = ws0.loglik(y) / y.sum() - 0.5 * float(h0 @ h0)
    fp0 = float(s0 @ direction) / y.sum() - float(h0 @ (jac @ direction))

    def feval(t):
        return _objective(theta0 + t * direction, y, spec, p.shape, plan)

    return _search(f0, fp0, feval)


# ---------------------------------------------------------------------------
# the fitter
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    """Outcome of one constrained fit."""

    theta_hat: np.ndarray
    pi_hat: np.ndarray
    deviance: float
    dof: int
    p_value: float
    constraint_norm: float
    iterations: int
    converged: bool
    loglik: float
    spec: ModelSpec
    message: str = ""
    scores: object = None

    def with_scores(self, scores):
        return replace(self, scores=scores)


def _deviance(y2d, pi2d):
    n = y2d.sum()
    mask = y2d > 0
    return float(2.0 * np.sum(y2d[mask] * np.log(y2d[mask] / (n * pi2d[mask]))))


def _as_counts(y, spec):
    if isinstance(y, ContingencyTable):
        if y.counts is None:
            raise ValueError("fit needs observed counts, not a probability table")
        return np.asarray(y.counts, dtype=np.float64)
    y2d = np.asarray(y, dtype=np.float64)
    if y2d.ndim != 2:
        raise ValueError(f"counts must be a 2-d array, got shape {y2d.shape}")
    if np.any(y2d < 0):
        raise ValueError("counts must be non-negative")
    if y2d.sum() <= 0:
        raise ValueError("counts must have a positive total")
    return y2d


def fit(y, spec, tol_h=1e-7, tol_rel=1e-9, tol_score=1e-6, max_iter=500):
    """Constrained maximum likelihood fit of ``spec`` to counts ``y``.

    Starts from the smoothed empirical table (y + 1/2) / (n + cells / 2)
    and iterates regression steps with cubic line search until the
    constraint norm falls below ``tol_h``, the relative log-likelihood
    change below ``tol_rel`` and the projected score below
    ``tol_score * n``, or ``max_iter`` is reached.
    """
    y2d = _as_counts(y, spec)
    shape = y2d.shape
    spec.validate_shape(shape)
    yv = y2d.reshape(-1)
    n = yv.sum()
    smoothed = (y2d + 0.5) / (n + y2d.size / 2.0)
    theta = theta_from_prob(smoothed)

    prev_ll = None
    converged = False
    message = "maximum iterations reached"
    iterations = 0
    for iterations in range(1, max_iter + 1):
        ws = _Workspace(theta, spec, shape)
        try:
            h, jac, plan = ws.constraints()
        except PivotError as exc:
            message = f"deflation pivot failure: {exc}"
            break
        ll = ws.loglik(yv)
        hnorm = float(np.abs(h).max()) if h.size else 0.0
        if hnorm <= tol_h and prev_ll is not None and abs(ll - prev_ll) <= tol_rel * (abs(prev_ll) + 1.0):
            x = _null_space(_reduced_jac(h, jac), ws.theta.shape[0])
            s0, _ = ws.score_info(yv)
            proj = float(np.abs(x.T @ s0).max()) if x.shape[1] else 0.0
            if proj <= tol_score * n:
                converged = True
                message = "converged"
                break
        direction, _, u, s0, _ = _direction(ws, yv, h, jac, warn_redundant=(iterations == 1))
        theta0 = ws.theta
        f0 = ll / n - 0.5 * float(h @ h)
        fp0 = float(s0 @ direction) / n - float(h @ (jac @ direction))

        def feval(t):
            return _objective(theta0 + t * direction, yv, spec, shape, plan)

        t = _search(f0, fp0, feval)
        if t is None:
            if hnorm <= tol_h:
                converged = True
                message = "converged (stationary)"
                break
            # Near the optimum the penalized objective can decrease along the
            # restoration component even though feasibility improves, so the
            # search stalls while h is still above tolerance.  Polish with
            # damped Newton steps on the constraints alone.
            t_r = _restoration_step(theta0, u, yv, spec, shape, plan, hnorm)
            if t_r is None:
                message = "line search stalled away from feasibility"
                break
            theta = theta0 - t_r * u
            prev_ll = ll
            continue
        theta = theta0 + t * direction
        prev_ll = ll

    ws = _Workspace(theta, spec, shape)
    try:
        h, jac, _ = ws.constraints()
    except PivotError:
        h, jac = np.zeros(0), np.zeros((0, theta.shape[0]))
    dof = int(np.linalg.matrix_rank(jac)) if jac.size else 0
    dev = _deviance(y2d, ws.pi2d)
    pval = float(chi2.sf(dev, dof)) if dof > 0 else float("nan")
    return FitResult(
        theta_hat=theta,
        pi_hat=ws.pi2d.copy(),
        deviance=dev,
        dof=dof,
        p_value=pval,
        constraint_norm=float(np.abs(h).max()) if h.size else 0.0,
        iterations=iterations,
        converged=converged,
        loglik=float(yv @ np.log(ws.pi)),
        spec=spec,
        message=message,
    )


def _reduced_jac(h, jac):
    _, jac_red = _reduce_rows(h, jac, warn=False)
    return jac_red


def _restoration_step(theta0, u, yv, spec, shape, plan, hnorm):
    """Largest damped Newton step on h alone that clearly shrinks its norm."""
    if not np.any(u):
        return None
    t = 1.0
    while t > 2.0**-20:
        try:
            ws = _Workspace(theta0 - t * u, spec, shape)
            trial = ws.constraint_values(plan)
        except (LinkDomainError, PivotError, FloatingPointError, ZeroDivisionError):
            trial = None
        if trial is not None and np.all(np.isfinite(trial)):
            if float(np.abs(trial).max()) <= 0.9 * hnorm:
                return t
        t *= 0.5
    return None


def _search(f0, fp0, feval):
    t_cubic = _cubic_local_max(f0, fp0, feval(0.25), feval(0.5))
    if t_cubic is not None:
        t_cubic = min(t_cubic, 1.0)
        if feval(t_cubic) > f0:
            return t_cubic
    t = 1.0
    while t > 2.0**-40:
        if feval(t) > f0:
            return t
        t *= 0.5
    return None


def deviance_dof(result, y):
    """(deviance, dof) of a fit against counts ``y``; recomputed from pi_hat."""
    y2d = _as_counts(y, result.spec)
    return _deviance(y2d, result.pi_hat), result.dof
