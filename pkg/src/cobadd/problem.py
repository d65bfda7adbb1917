"""Decomposable convex instances and their local dual oracles.

An instance couples ``n`` scalar decision variables, each confined to a
compact box ``X_i = [lo_i, hi_i]``, through one scalar inequality
``sum_i g_i(x_i) <= 0`` and one linear matrix inequality
``A0 + sum_i A_i x_i >= 0`` (PSD order, dimension ``d``; ``d = 0`` means
the LMI is absent).  The cost ``f(x) = sum_i f_i(x_i)`` is separable, so
for fixed multipliers ``(mu, G)`` the Lagrangian splits into ``n``
independent one-dimensional convex minimizations

    L_i(x, mu, G) = f_i(x) + mu g_i(x) - tr[(A0/n + A_i x) G],

which this module solves in closed form for the linear / negative-log /
affine function kinds and by golden-section search otherwise.  All
closed-form node functions reduce to

    value(x) = -C log(1 + x) + S x + T,      C >= 0,

and the box minimizer of that expression is an endpoint (C = 0), the
upper endpoint (C > 0, S <= 0), or the clipped stationary point
``C/S - 1``.  Ties always resolve to the lower endpoint so that runs are
reproducible.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import ConfigurationError, MalformedInstanceError

# Numerical tolerance for "positive semidefinite" checks on dual matrices.
PSD_TOL = 1e-9

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# scalar functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalarFunction:
    """One-dimensional convex function of a supported kind.

    ==========  =======================================
    kind        value(x)
    ==========  =======================================
    linear      a * x
    neg_log     -c * log(1 + x)  with c >= 0
    affine      a * x + b
    custom      fn(x), declared convex by the caller
    ==========  =======================================

    ``derivative`` is an optional closed-form derivative for custom
    functions; the solvers do not require it, but callers may use it to
    certify their own bound computations.
    """

    kind: str
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    fn: Callable[[float], float] | None = None
    derivative: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "neg_log", "affine", "custom"):
            raise ValueError(f"unknown function kind {self.kind!r}")
        if self.kind == "neg_log" and self.c < 0:
            raise ValueError("neg_log coefficient must be nonnegative for convexity")
        if self.kind == "custom" and self.fn is None:
            raise ValueError("custom functions need a callable")

    @staticmethod
    def linear(slope: float) -> "ScalarFunction":
        return ScalarFunction("linear", a=float(slope))

    @staticmethod
    def neg_log(coef: float) -> "ScalarFunction":
        """-coef * log(1 + x); requires coef >= 0."""
        return ScalarFunction("neg_log", c=float(coef))

    @staticmethod
    def affine(a: float, b: float) -> "ScalarFunction":
        return ScalarFunction("affine", a=float(a), b=float(b))

    @staticmethod
    def custom(fn: Callable[[float], float],
               derivative: Callable[[float], float] | None = None) -> "ScalarFunction":
        return ScalarFunction("custom", fn=fn, derivative=derivative)

    @property
    def closed_form(self) -> bool:
        return self.kind != "custom"

    def __call__(self, x):
        if self.kind == "custom":
            return self.fn(x)
        if self.c != 0.0:
            return self.a * x + self.b - self.c * np.log1p(x)
        return self.a * x + self.b

    def coefficients(self) -> tuple[float, float, float]:
        """(C, a, b) such that value(x) = -C*log(1+x) + a*x + b.

        Only valid for closed-form kinds.
        """
        if not self.closed_form:
            raise ValueError("custom functions have no closed-form coefficients")
        return self.c, self.a, self.b


# ---------------------------------------------------------------------------
# instance types
# ---------------------------------------------------------------------------

def _as_symmetric(A: np.ndarray, what: str) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise MalformedInstanceError(f"{what} must be a square matrix, got shape {A.shape}")
    if A.size and np.max(np.abs(A - A.T)) > 1e-12:
        raise MalformedInstanceError(f"{what} is not symmetric")
    A = (A + A.T) / 2.0
    A.flags.writeable = False
    return A


@dataclass(frozen=True)
class NodeSpec:
    """Per-node data: cost f, constraint g, LMI block A, and box [lo, hi]."""

    f: ScalarFunction
    g: ScalarFunction
    A: np.ndarray
    box: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "A", _as_symmetric(self.A, "node matrix A"))
        lo, hi = float(self.box[0]), float(self.box[1])
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
            raise MalformedInstanceError(f"box [{lo}, {hi}] must be nonempty and bounded")
        object.__setattr__(self, "box", (lo, hi))
        with np.errstate(divide="ignore", invalid="ignore"):
            for name, fun in (("f", self.f), ("g", self.g)):
                for x in (lo, (lo + hi) / 2.0, hi):
                    v = fun(x)
                    if not np.isfinite(v):
                        raise MalformedInstanceError(
                            f"{name} evaluates to {v} at x={x} inside the box")

    @property
    def lo(self) -> float:
        return self.box[0]

    @property
    def hi(self) -> float:
        return self.box[1]


@dataclass(frozen=True)
class DualPoint:
    """A dual pair (mu, G): mu >= 0 scalar, G symmetric PSD matrix.

    ``G`` may be omitted for instances without an LMI (d = 0).
    PSD is enforced numerically: lambda_min(G) >= -PSD_TOL.
    """

    mu: float
    G: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        mu = float(self.mu)
        if not math.isfinite(mu) or mu < 0.0:
            raise ValueError(f"dual scalar mu must be finite and >= 0, got {mu}")
        object.__setattr__(self, "mu", mu)
        G = np.zeros((0, 0)) if self.G is None else self.G
        G = _as_symmetric(G, "dual matrix G")
        if G.size and np.linalg.eigvalsh(G)[0] < -PSD_TOL:
            raise ValueError("dual matrix G is not PSD within tolerance")
        object.__setattr__(self, "G", G)

    @property
    def d(self) -> int:
        return self.G.shape[0]


@dataclass
class ProblemInstance:
    """A decomposable instance: nodes, shared LMI constant A0, dimension d."""

    nodes: tuple[NodeSpec, ...]
    A0: np.ndarray = None  # type: ignore[assignment]
    d: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = tuple(self.nodes)
        if len(self.nodes) < 1:
            raise MalformedInstanceError("an instance needs at least one node")
        d = int(self.d)
        A0 = np.zeros((d, d)) if self.A0 is None else self.A0
        A0 = _as_symmetric(A0, "A0")
        if A0.shape != (d, d):
            raise MalformedInstanceError(f"A0 has shape {A0.shape}, expected ({d}, {d})")
        for i, node in enumerate(self.nodes):
            if node.A.shape != (d, d):
                raise MalformedInstanceError(
                    f"node {i} matrix has shape {node.A.shape}, expected ({d}, {d})")
        self.A0 = A0
        self.d = d

    @property
    def n(self) -> int:
        return len(self.nodes)

    @cached_property
    def boxes(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([nd.lo for nd in self.nodes])
        hi = np.array([nd.hi for nd in self.nodes])
        lo.flags.writeable = False
        hi.flags.writeable = False
        return lo, hi

    @cached_property
    def A_stack(self) -> np.ndarray:
        A = np.stack([nd.A for nd in self.nodes]) if self.d else np.zeros((self.n, 0, 0))
        A.flags.writeable = False
        return A

    @cached_property
    def _closed(self) -> "_ClosedFormArrays | None":
        if not all(nd.f.closed_form and nd.g.closed_form for nd in self.nodes):
            return None
        cf, af, bf = zip(*(nd.f.coefficients() for nd in self.nodes))
        cg, ag, bg = zip(*(nd.g.coefficients() for nd in self.nodes))
        return _ClosedFormArrays(
            np.array(cf), np.array(af), np.array(bf),
            np.array(cg), np.array(ag), np.array(bg))

    def lmi_matrix(self, x: np.ndarray) -> np.ndarray:
        """A0 + sum_i A_i x_i."""
        if self.d == 0:
            return self.A0
        return self.A0 + np.tensordot(np.asarray(x, dtype=float), self.A_stack, axes=1)


@dataclass(frozen=True)
class _ClosedFormArrays:
    c_f: np.ndarray
    a_f: np.ndarray
    b_f: np.ndarray
    c_g: np.ndarray
    a_g: np.ndarray
    b_g: np.ndarray


@dataclass(frozen=True)
class SlaterCertificate:
    """A strictly feasible point with its feasibility margin gamma.

    gamma = min{ sum_i -g_i(xbar_i), lambda_min(A0 + sum_i A_i xbar_i) }
    (the first term alone when d = 0); fxbar = f(xbar).
    """

    xbar: np.ndarray
    gamma: float
    fxbar: float


@dataclass(frozen=True)
class DualSetSpec:
    """Radii of the compact dual projection sets.

    Both sets share the radius ``(fxbar - q(probe))/gamma + r``; the
    scalar dual is projected onto [0, Lambda] and the matrix dual onto
    {G PSD : ||G||_F <= Gamma}.
    """

    Lambda: float
    Gamma: float
    r: float

    def __post_init__(self):
        if not (self.r > 0.0):
            raise ConfigurationError("r must be positive")
        if not (self.Lambda > 0.0 and self.Gamma > 0.0):
            raise ConfigurationError("projection radii must be positive")
        if self.Lambda != self.Gamma:
            raise ConfigurationError("the two radii are equal by construction")
        # radius = threshold + r with r >= threshold implies radius <= 2 r
        if self.Lambda > 2.0 * self.r * (1.0 + 1e-12):
            raise ConfigurationError(
                "r below the admissible threshold implied by the radius")


@dataclass(frozen=True)
class SubgradientBounds:
    """Uniform subgradient bounds: |g_i| <= L, ||-A0/n - A_i x||_F <= Q."""

    L: float
    Q: float

    @property
    def M(self) -> float:
        return self.L + self.Q


# ---------------------------------------------------------------------------
# local dual oracles
# ---------------------------------------------------------------------------

def _closed_form_minimize(C, S, T, lo, hi):
    """Box minimizer and minimum of -C*log(1+x) + S*x + T, elementwise.

    C == 0 gives an affine objective whose minimizer is an endpoint (the
    lower one on ties); C > 0 gives a strictly convex objective minimized
    at the clipped stationary point C/S - 1 when S > 0 and at the upper
    endpoint otherwise.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        stationary = C / S - 1.0
    x_convex = np.where(S > 0.0, np.clip(stationary, lo, hi), hi)
    x = np.where(C > 0.0, x_convex, np.where(S < 0.0, hi, lo))
    with np.errstate(invalid="ignore"):
        log_term = np.where(C > 0.0, np.log1p(np.where(C > 0.0, x, 0.0)), 0.0)
    value = -C * log_term + S * x + T
    return x, value


def _lmi_terms(instance: ProblemInstance, Gs: np.ndarray | None):
    """Per-node linear and constant Lagrangian contributions of the LMI.

    -tr[(A0/n + A_i x) G_i] = (-tr[A_i G_i]) x + (-tr[A0 G_i]/n).
    """
    n = instance.n
    if instance.d == 0 or Gs is None:
        return np.zeros(n), np.zeros(n)
    lin = -np.sum(instance.A_stack * Gs, axis=(1, 2))
    const = -np.sum(instance.A0 * Gs, axis=(1, 2)) / n
    return lin, const


def minimize_node_lagrangians(instance: ProblemInstance, mus: np.ndarray,
                              Gs: np.ndarray | None = None,
                              tol: float = 1e-10):
    """Solve every node's Lagrangian minimization at its own dual point.

    Parameters
    ----------
    instance : ProblemInstance
    mus : ndarray, shape (n,)
        Per-node scalar duals.
    Gs : ndarray, shape (n, d, d), optional
        Per-node matrix duals; ignored when d = 0.
    tol : float
        Interval tolerance for the golden-section fallback.

    Returns
    -------
    x_tilde, q : ndarray, shape (n,)
        Box minimizers and attained local dual values
        q_i = min_x L_i(x, mu_i, G_i).
    """
    mus = np.asarray(mus, dtype=float)
    lin, const = _lmi_terms(instance, Gs)
    cf = instance._closed
    lo, hi = instance.boxes
    if cf is not None:
        C = cf.c_f + mus * cf.c_g
        S = cf.a_f + mus * cf.a_g + lin
        T = cf.b_f + mus * cf.b_g + const
        x, q = _closed_form_minimize(C, S, T, lo, hi)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(q))):
            raise MalformedInstanceError("non-finite Lagrangian evaluation inside a box")
        return x, q
    x = np.empty(instance.n)
    q = np.empty(instance.n)
    for i, node in enumerate(instance.nodes):
        x[i], q[i] = _minimize_single(node, mus[i], lin[i], const[i], tol)
    return x, q


def _minimize_single(node: NodeSpec, mu: float, lmi_lin: float, lmi_const: float,
                     tol: float):
    if node.f.closed_form and node.g.closed_form:
        cf, af, bf = node.f.coefficients()
        cg, ag, bg = node.g.coefficients()
        x, q = _closed_form_minimize(
            np.array(cf + mu * cg), np.array(af + mu * ag + lmi_lin),
            np.array(bf + mu * bg + lmi_const), node.lo, node.hi)
        if not (np.isfinite(x) and np.isfinite(q)):
            raise MalformedInstanceError("non-finite Lagrangian evaluation inside a box")
        return float(x), float(q)

    def objective(x):
        v = float(node.f(x)) + mu * float(node.g(x)) + lmi_lin * x + lmi_const
        if not math.isfinite(v):
            raise MalformedInstanceError(
                f"non-finite Lagrangian evaluation at x={x} inside the box")
        return v

    x = _golden_section(objective, node.lo, node.hi, tol)
    # lower-endpoint tie-break: a flat stretch adjoining lo wins
    if objective(node.lo) <= objective(x):
        x = node.lo
    return x, objective(x)


def _golden_section(fun, lo: float, hi: float, tol: float, max_iter: int = 200):
    """Golden-section search for the minimizer of a unimodal function."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    a, b = lo, hi
    if b - a <= tol:
        return a if fun(a) <= fun(b) else b
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    x = 0.5 * (a + b)
    return min((a, b, c, d, x), key=fun)


def local_dual_oracle(node: NodeSpec, dual: DualPoint, n: int,
                      tol: float = 1e-10,
                      A0: np.ndarray | None = None) -> tuple[float, float]:
    """Minimize one node's Lagrangian L_i(x, mu, G) over its box.

    L_i(x, mu, G) = f_i(x) + mu g_i(x) - tr[(A0/n + A_i x) G].

    Returns ``(qi, xi_tilde)``: the attained minimum and the minimizer.
    Linear, negative-log and affine kinds are solved in closed form;
    custom kinds by golden-section search with the given interval
    tolerance.  Flat objectives resolve to the lower box endpoint.
    ``A0`` defaults to zero; it only shifts qi by the constant
    -tr[A0 G]/n and never moves the minimizer.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lmi_lin = -float(np.sum(node.A * dual.G)) if node.A.size else 0.0
    lmi_const = -float(np.sum(A0 * dual.G)) / n if A0 is not None and dual.G.size else 0.0
    x, q = _minimize_single(node, dual.mu, lmi_lin, lmi_const, tol)
    return q, x


def oracle_sweep(instance: ProblemInstance, duals: "list[DualPoint] | DualPoint",
                 tol: float = 1e-10):
    """Run every node's local oracle, each at its own dual point.

    ``duals`` is either one shared DualPoint or a per-node list.  Returns
    ``(q, x_tilde)`` arrays of shape (n,); the q values include the
    -tr[A0 G_i]/n share of the LMI constant, so ``q.sum()`` is the dual
    function value when all nodes share one dual point.
    """
    n = instance.n
    if isinstance(duals, DualPoint):
        duals = [duals] * n
    if len(duals) != n:
        raise ValueError(f"expected {n} dual points, got {len(duals)}")
    mus = np.array([z.mu for z in duals])
    Gs = np.stack([z.G for z in duals]) if instance.d else None
    x, q = minimize_node_lagrangians(instance, mus, Gs, tol)
    return q, x


def dual_function_value(instance: ProblemInstance, dual: DualPoint,
                        tol: float = 1e-10) -> float:
    """q(mu, G) = sum_i min_x L_i(x, mu, G)."""
    q, _ = oracle_sweep(instance, dual, tol)
    return float(q.sum())


def dual_function_values(instance: ProblemInstance, mus: np.ndarray,
                         Gs: np.ndarray | None = None,
                         tol: float = 1e-10) -> np.ndarray:
    """q evaluated at m dual points at once.

    ``mus`` has shape (m,) and ``Gs`` shape (m, d, d) (None when d = 0).
    Closed-form instances evaluate all m*n node minimizations as one
    broadcasted expression; otherwise each point falls back to the
    per-node path.
    """
    mus = np.asarray(mus, dtype=float)
    m, n = mus.shape[0], instance.n
    cf = instance._closed
    lo, hi = instance.boxes
    if cf is not None:
        if instance.d and Gs is not None:
            lin = -np.einsum("jkl,ikl->ij", instance.A_stack, Gs)
            const = (-np.sum(instance.A0 * Gs, axis=(1, 2)) / n)[:, None]
        else:
            lin = 0.0
            const = 0.0
        C = cf.c_f[None, :] + mus[:, None] * cf.c_g[None, :]
        S = cf.a_f[None, :] + mus[:, None] * cf.a_g[None, :] + lin
        T = cf.b_f[None, :] + mus[:, None] * cf.b_g[None, :] + const
        _, vals = _closed_form_minimize(C, S, T, lo[None, :], hi[None, :])
        return vals.sum(axis=1)
    out = np.empty(m)
    for i in range(m):
        Gi = None if Gs is None else np.broadcast_to(Gs[i], (n,) + Gs[i].shape)
        _, q = minimize_node_lagrangians(instance, np.full(n, mus[i]), Gi, tol)
        out[i] = q.sum()
    return out


def node_subgradient(node: NodeSpec, xi_tilde: float, n: int,
                     A0: np.ndarray | None = None):
    """Subgradient components contributed by one node at its minimizer.

    Returns ``(h, Qmat)`` with h = g_i(xi_tilde) and
    Qmat = -A0/n - A_i * xi_tilde (a zero-size matrix when d = 0).
    """
    lo, hi = node.box
    if not (lo - 1e-12 <= xi_tilde <= hi + 1e-12):
        raise ValueError(f"xi_tilde={xi_tilde} outside the box [{lo}, {hi}]")
    h = float(node.g(xi_tilde))
    if A0 is None:
        A0 = np.zeros_like(node.A)
    Qmat = -A0 / n - node.A * xi_tilde
    return h, Qmat


def constraint_values(instance: ProblemInstance, x_tilde: np.ndarray):
    """Vectorized per-node subgradients at the minimizers.

    Returns ``(h, Qmats)``: h[i] = g_i(x_i) and
    Qmats[i] = -A0/n - A_i x_i with shape (n, d, d).
    """
    x_tilde = np.asarray(x_tilde, dtype=float)
    cf = instance._closed
    if cf is not None:
        h = -cf.c_g * _safe_log1p(x_tilde, cf.c_g) + cf.a_g * x_tilde + cf.b_g
    else:
        h = np.array([float(nd.g(x)) for nd, x in zip(instance.nodes, x_tilde)])
    Qmats = -instance.A0 / instance.n - instance.A_stack * x_tilde[:, None, None]
    return h, Qmats


def _safe_log1p(x, coef):
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(coef != 0.0, np.log1p(np.where(coef != 0.0, x, 0.0)), 0.0)


# ---------------------------------------------------------------------------
# bounds, dual sets, primal evaluation
# ---------------------------------------------------------------------------

def subgradient_bounds(instance: ProblemInstance, grid: int = 10001) -> SubgradientBounds:
    """Uniform bounds L and Q on the per-node subgradient components.

    For closed-form kinds both |g_i| and the Frobenius norm of the affine
    matrix path are maximized at box endpoints (the functions are
    monotone or convex in x); custom constraint functions are maximized
    on a dense grid of ``grid`` points.
    """
    if grid < 2:
        raise ValueError("grid must have at least 2 points")
    L = 0.0
    Q = 0.0
    for node in instance.nodes:
        lo, hi = node.box
        if node.g.closed_form:
            gmax = max(abs(float(node.g(lo))), abs(float(node.g(hi))))
        else:
            xs = np.linspace(lo, hi, grid)
            gmax = float(np.max(np.abs([node.g(x) for x in xs])))
        L = max(L, gmax)
        if instance.d:
            for x in (lo, hi):
                Q = max(Q, float(np.linalg.norm(-instance.A0 / instance.n - node.A * x)))
    return SubgradientBounds(L, Q)


def slater_certificate(instance: ProblemInstance, xbar) -> SlaterCertificate:
    """Validate a strictly feasible point and compute its margin gamma."""
    xbar = np.asarray(xbar, dtype=float)
    lo, hi = instance.boxes
    if xbar.shape != (instance.n,):
        raise ConfigurationError(f"xbar must have length {instance.n}")
    if np.any(xbar < lo - 1e-12) or np.any(xbar > hi + 1e-12):
        raise ConfigurationError("Slater vector leaves the boxes")
    sum_g = float(sum(nd.g(x) for nd, x in zip(instance.nodes, xbar)))
    if not sum_g < 0.0:
        raise ConfigurationError(
            f"Slater vector is not strictly feasible: sum g = {sum_g} >= 0")
    if instance.d:
        lam_min = float(np.linalg.eigvalsh(instance.lmi_matrix(xbar))[0])
        if not lam_min > 0.0:
            raise ConfigurationError(
                f"Slater vector is not strictly feasible: lambda_min = {lam_min} <= 0")
        gamma = min(-sum_g, lam_min)
    else:
        gamma = -sum_g
    fxbar = float(sum(nd.f(x) for nd, x in zip(instance.nodes, xbar)))
    return SlaterCertificate(xbar, gamma, fxbar)


def build_dual_sets(instance: ProblemInstance, slater: SlaterCertificate,
                    probe: DualPoint, r: float) -> DualSetSpec:
    """Compact dual projection sets from a Slater point and a probe dual.

    The shared radius is ``(fxbar - q(probe))/gamma + r`` and the
    convergence theory requires ``r >= (fxbar - q(probe))/gamma``; an r
    below that threshold raises a ConfigurationError naming the minimum
    admissible value.
    """
    q_probe = dual_function_value(instance, probe)
    threshold = (slater.fxbar - q_probe) / slater.gamma
    if r < threshold - 1e-12:
        raise ConfigurationError(
            f"r={r} below the minimum admissible value {threshold}")
    radius = threshold + r
    return DualSetSpec(radius, radius, r)


def dual_set_threshold(instance: ProblemInstance, slater: SlaterCertificate,
                       probe: DualPoint) -> float:
    """(fxbar - q(probe))/gamma, the smallest admissible r."""
    q_probe = dual_function_value(instance, probe)
    return (slater.fxbar - q_probe) / slater.gamma


def evaluate_primal(instance: ProblemInstance, x) -> tuple[float, float, float]:
    """Cost and constraint violations at a box-feasible point.

    Returns ``(f, violation_ineq, violation_lmi)`` with
    violation_ineq = max(0, sum g_i(x_i)) and
    violation_lmi = max(0, -lambda_min(A0 + sum A_i x_i)).
    """
    x = np.asarray(x, dtype=float)
    lo, hi = instance.boxes
    if np.any(x < lo - 1e-9) or np.any(x > hi + 1e-9):
        raise ValueError("point leaves the boxes")
    f = float(sum(nd.f(v) for nd, v in zip(instance.nodes, x)))
    sum_g = float(sum(nd.g(v) for nd, v in zip(instance.nodes, x)))
    viol_ineq = max(0.0, sum_g)
    if instance.d:
        lam_min = float(np.linalg.eigvalsh(instance.lmi_matrix(x))[0])
        viol_lmi = max(0.0, -lam_min)
    else:
        viol_lmi = 0.0
    return f, viol_ineq, viol_lmi


# ---------------------------------------------------------------------------
# sample instances
# ---------------------------------------------------------------------------

def make_sample_num_instance(n: int, seed: int) -> ProblemInstance:
    """Network-utility style instance with one scalar budget constraint.

    The first round(n/3) nodes carry linear costs -sigma_i x, the rest
    -sigma_i log(1 + x), with sigma_i drawn uniformly from [0, 1) by a
    seeded generator.  The shared budget of 10 is split evenly across
    nodes: g_i(x) = sigma_i x - 10/n, so that sum_i g_i(x) reproduces
    sum_i sigma_i x_i - 10.  Boxes are [0, 1] and there is no LMI.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.default_rng(seed)
    sigma = rng.uniform(0.0, 1.0, size=n)
    n_linear = max(1, round(n / 3))
    nodes = []
    for i in range(n):
        if i < n_linear:
            f = ScalarFunction.linear(-sigma[i])
        else:
            f = ScalarFunction.neg_log(sigma[i])
        g = ScalarFunction.affine(sigma[i], -10.0 / n)
        nodes.append(NodeSpec(f, g, np.zeros((0, 0)), (0.0, 1.0)))
    meta = {"builtin": "num", "n": n, "seed": int(seed),
            "n_linear": n_linear, "sigma": sigma.tolist()}
    return ProblemInstance(tuple(nodes), np.zeros((0, 0)), 0, meta)


def make_sample_lmi_instance() -> ProblemInstance:
    """Tiny fixed two-node instance exercising the matrix constraint.

    f_i(x) = x, g_i(x) = x - 1, boxes [0, 1],
    A0 = diag(1.5, 1.5), A1 = diag(-1, 0), A2 = diag(0, -1);
    strictly feasible at x = (0, 0).
    """
    g = ScalarFunction.affine(1.0, -1.0)
    f = ScalarFunction.linear(1.0)
    nodes = (
        NodeSpec(f, g, np.diag([-1.0, 0.0]), (0.0, 1.0)),
        NodeSpec(f, g, np.diag([0.0, -1.0]), (0.0, 1.0)),
    )
    return ProblemInstance(nodes, np.diag([1.5, 1.5]), 2, {"builtin": "lmi"})


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def instance_to_json(instance: ProblemInstance) -> dict:
    """JSON document for an instance (closed-form kinds only)."""
    nodes = []
    for nd in instance.nodes:
        for fun in (nd.f, nd.g):
            if not fun.closed_form:
                raise ValueError("custom functions are not serializable")
        nodes.append({
            "f": _fun_to_json(nd.f),
            "g": _fun_to_json(nd.g),
            "A": nd.A.reshape(-1).tolist(),
            "box": [nd.lo, nd.hi],
        })
    return {
        "d": instance.d,
        "A0": instance.A0.reshape(-1).tolist(),
        "nodes": nodes,
        "meta": instance.meta,
    }


def instance_from_json(doc: dict) -> ProblemInstance:
    d = int(doc["d"])
    A0 = np.array(doc["A0"], dtype=float).reshape(d, d)
    nodes = []
    for nd in doc["nodes"]:
        nodes.append(NodeSpec(
            _fun_from_json(nd["f"]), _fun_from_json(nd["g"]),
            np.array(nd["A"], dtype=float).reshape(d, d),
            (nd["box"][0], nd["box"][1])))
    return ProblemInstance(tuple(nodes), A0, d, dict(doc.get("meta", {})))


def _fun_to_json(fun: ScalarFunction) -> dict:
    if fun.kind == "linear":
        return {"kind": "linear", "a": fun.a}
    if fun.kind == "neg_log":
        return {"kind": "neg_log", "c": fun.c}
    return {"kind": "affine", "a": fun.a, "b": fun.b}


def _fun_from_json(doc: dict) -> ScalarFunction:
    kind = doc["kind"]
    if kind == "linear":
        return ScalarFunction.linear(doc["a"])
    if kind == "neg_log":
        return ScalarFunction.neg_log(doc["c"])
    if kind == "affine":
        return ScalarFunction.affine(doc["a"], doc["b"])
    raise ValueError(f"unknown function kind {kind!r}")


def instance_hash(instance: ProblemInstance) -> str:
    """Stable content hash, used to key cached oracle results."""
    doc = instance_to_json(instance)
    doc.pop("meta", None)
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
