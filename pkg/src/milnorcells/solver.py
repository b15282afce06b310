"""Total-degree homotopy continuation for square polynomial systems.

Paths are tracked in projective space: the target is homogenised with an
extra coordinate w and every path lives on a random affine chart
``a . (z, w) = 1``, so paths heading to infinity stay bounded and show up as
w -> 0 instead of overflowing.  All paths are advanced together as numpy
batches, each with its own arclength parameter and step size, which keeps
the result independent of any scheduling order.

Only finite endpoints are refined.  Nothing is done at infinity: the number
of solutions there is always obtained by subtracting the finite count from
the Bezout number.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .poly import CriticalSystem, LinearProduct, MultiPoly, homogenize_poly

log = logging.getLogger(__name__)

FINITE = "finite"
AT_INFINITY = "at_infinity"
FAILED = "failed"

# a path stalled beyond _NEAR_END whose affine norm keeps growing (by _GROWTH,
# measured over decades of 1 - s) is heading to infinity
_NEAR_END = 0.99
_GROWTH = 1.5
_MAX_ITERS = 200_000
# Newton steps (relative to 1 + |x|) below this count as noise once they stop shrinking
_STEP_FLOOR = 1e-6
# largest first corrector step (relative) that still accepts a predictor step,
# and the rounding-floor pair that accepts a corrector which stops improving
_PREDICT_TOL = 1e-3
_FLOOR_FIRST = 1e-5
_FLOOR_LAST = 1e-7


@dataclass(frozen=True)
class TrackerOptions:
    seed: int = 0
    step_init: float = 0.02
    step_min: float = 1e-13
    newton_tol: float = 1e-10
    divergence_norm: float = 1e8
    dedup_tol: float = 1e-6
    max_retries: int = 2
    step_max: float = 0.1
    corrector_tol: float = 1e-9

    def __post_init__(self):
        if not 0 < self.step_min < self.step_init:
            raise ValueError("need 0 < step_min < step_init")
        for name in ("newton_tol", "divergence_norm", "dedup_tol", "corrector_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")


@dataclass
class PathResult:
    start_index: int
    status: str
    endpoint: np.ndarray | None
    residual: float
    steps: int
    s_final: float = 1.0
    attempts: int = 1


@dataclass
class SolutionSet:
    solutions: np.ndarray  # (k, nvars) deduplicated finite endpoints
    cluster_sizes: list
    bezout: int
    n_finite: int
    n_diverged: int
    n_failed: int
    jacobian_min_singular_value: list
    residuals: list
    paths: list = field(default_factory=list, repr=False)

    @property
    def max_norm(self) -> float:
        if len(self.solutions) == 0:
            return 0.0
        return float(np.max(np.abs(self.solutions)))

    def __len__(self):
        return len(self.solutions)


# --- compiled batch evaluation -----------------------------------------------

class CompiledPolys:
    """Values and Jacobians of a list of polynomials at a batch of points."""

    def __init__(self, polys, nvars):
        monos = {}

        def idx(e):
            if e not in monos:
                monos[e] = len(monos)
            return monos[e]

        entries_v, entries_j = [], []
        for j, p in enumerate(polys):
            for e, c in p.terms.items():
                c = complex(c) if not isinstance(c, complex) else c
                entries_v.append((idx(e), j, c))
                for v in range(nvars):
                    if e[v]:
                        f = list(e)
                        f[v] -= 1
                        entries_j.append((idx(tuple(f)), j * nvars + v, c * e[v]))
        self.nvars = nvars
        self.neqs = len(polys)
        m = max(len(monos), 1)
        self.exps = np.zeros((m, nvars), dtype=int)
        for e, i in monos.items():
            self.exps[i] = e
        self.maxdeg = int(self.exps.max()) if monos else 0
        self.cval = np.zeros((m, self.neqs), dtype=complex)
        self.cjac = np.zeros((m, self.neqs * nvars), dtype=complex)
        for i, j, c in entries_v:
            self.cval[i, j] += c
        for i, j, c in entries_j:
            self.cjac[i, j] += c

    def _monomials(self, X):
        P = X.shape[0]
        pw = np.empty((self.maxdeg + 1, P, self.nvars), dtype=complex)
        pw[0] = 1.0
        for k in range(1, self.maxdeg + 1):
            pw[k] = pw[k - 1] * X
        mon = np.ones((P, self.exps.shape[0]), dtype=complex)
        for v in range(self.nvars):
            mon *= pw[self.exps[:, v], :, v].T
        return mon

    def values(self, X):
        return self._monomials(X) @ self.cval

    def scaled_residual(self, X):
        """max_i |f_i(x)| / (1 + sum over terms |c| |x^e|), a backward-error measure."""
        mon = self._monomials(X)
        return np.max(np.abs(mon @ self.cval) / (1.0 + np.abs(mon) @ np.abs(self.cval)), axis=-1)

    def values_and_jacobian(self, X):
        mon = self._monomials(X)
        return mon @ self.cval, (mon @ self.cjac).reshape(X.shape[0], self.neqs, self.nvars)


# --- public helpers ------------------------------------------------------------

def bezout_number(sys: CriticalSystem) -> int:
    return sys.bezout


@dataclass
class NewtonResult:
    point: np.ndarray
    residual: float
    min_singular_value: float
    converged: bool
    singular: bool
    iterations: int


def _equations(sys):
    return list(sys.equations) if isinstance(sys, CriticalSystem) else list(sys)


def newton_refine(point, sys, tol: float = 1e-10, max_iter: int = 20) -> NewtonResult:
    """Newton's method on the affine system.

    The residual is the largest |f_i| divided by 1 + the sum of the absolute
    values of f_i's terms at the point, so it is insensitive to the scale of
    coefficients and of the solution.  Because terms can cancel heavily, a
    small residual alone does not pin the point down: iteration continues
    until the Newton step reaches rounding level, and convergence also
    requires the last step to be small.

    ``sys`` is a :class:`CriticalSystem` or a sequence of square-system
    polynomials.  A critical system that carries its factors is evaluated in
    factored form for the Newton steps.
    """
    eqs = _equations(sys)
    nv = eqs[0].nvars
    comp = CompiledPolys(eqs, nv)
    if isinstance(sys, CriticalSystem) and sys.factors is not None:
        def evaluate(x):
            vals, jac = sys.values_and_jacobian(x[0])
            return vals[None], jac[None]
    else:
        evaluate = comp.values_and_jacobian
    x = np.array(point, dtype=complex).reshape(1, nv)
    singular = False
    it = 0
    step = prev = np.inf
    for it in range(1, max_iter + 1):
        vals, jac = evaluate(x)
        if not np.all(np.isfinite(vals)):
            break
        sv = np.linalg.svd(jac[0], compute_uv=False)
        if sv[-1] <= 1e-14 * max(sv[0], 1e-300):
            singular = True
            break
        dx = np.linalg.solve(jac[0], -vals[0])
        x = x + dx
        step = float(np.linalg.norm(dx)) / (1 + float(np.linalg.norm(x)))
        if step <= 1e-15 or (step <= _STEP_FLOOR and step > 0.5 * prev):
            break  # steps stopped shrinking: at the rounding floor
        prev = step
    if np.all(np.isfinite(x)):
        _, jac = evaluate(x)
        sv = np.linalg.svd(jac[0], compute_uv=False)
        smin, smax = float(sv[-1]), float(sv[0])
        res = float(comp.scaled_residual(x)[0])
    else:
        smin, smax, res = 0.0, 0.0, float("inf")
    converged = res <= tol and step <= _STEP_FLOOR
    singular = singular or smin <= 1e-8 * smax
    return NewtonResult(x[0], res, smin, converged and not singular, singular, it)


# --- tracking ------------------------------------------------------------------

class _FactoredTarget:
    """Homogenised critical system from the product of linear forms, in w = M^-1 z.

    M = V S^-1 from the SVD A = U S V^T of the form matrix, so the forms in w
    are orthonormal columns and solutions have |w| of order sqrt(n) however
    badly the frame is conditioned.  The partials dQ/dz_1..dQ/dz_{k-1} are
    replaced by an orthonormal basis B of the same span in terms of grad_w Q,
    which has the same zero set.
    """

    def __init__(self, sys: CriticalSystem, M):
        A = np.array([[float(c) for c in r] for r in sys.factors])
        k = A.shape[1]
        self.M = M
        self.prod = LinearProduct(A @ M)
        self.n = A.shape[0]
        self.level = complex(sys.level)
        # grad_z = M^-T grad_w; keep the first k - 1 rows, orthonormalised
        q, _ = np.linalg.qr(np.linalg.inv(M).T[:k - 1].T)
        self.B = q.T

    @staticmethod
    def frame(sys: CriticalSystem):
        """M for the factors of sys, or None when they do not span (non-essential stage)."""
        A = np.array([[float(c) for c in r] for r in sys.factors])
        _, sv, vh = np.linalg.svd(A, full_matrices=False)
        if sv[-1] <= 1e-12 * sv[0]:
            return None
        return vh.T / sv

    def values_and_jacobian(self, X):
        W, x0 = X[:, :-1], X[:, -1]
        k = W.shape[1]
        value, grad, hess = self.prod.batch_derivatives(W)
        vals = np.empty((X.shape[0], k), dtype=complex)
        vals[:, 0] = value - self.level * x0 ** self.n
        vals[:, 1:] = grad @ self.B.T
        jac = np.zeros((X.shape[0], k, k + 1), dtype=complex)
        jac[:, 0, :k] = grad
        jac[:, 0, k] = -self.n * self.level * x0 ** (self.n - 1)
        jac[:, 1:, :k] = self.B @ hess
        return vals, jac


class _Homotopy:
    """H(x, s) = (1 - s) gamma G(x) + s F(x) on the chart a . x = 1."""

    def __init__(self, target, start_h, gamma, chart, nvars):
        self.target = target
        self.start = CompiledPolys(list(start_h), nvars)
        self.gamma = gamma
        self.chart = chart
        self.nvars = nvars
        self.m = nvars - 1

    def evaluate(self, X, s):
        F, JF = self.target.values_and_jacobian(X)
        G, JG = self.start.values_and_jacobian(X)
        s_ = s[:, None]
        H = np.empty((X.shape[0], self.nvars), dtype=complex)
        H[:, :self.m] = (1 - s_) * self.gamma * G + s_ * F
        H[:, self.m] = X @ self.chart - 1.0
        Hx = np.empty((X.shape[0], self.nvars, self.nvars), dtype=complex)
        Hx[:, :self.m] = (1 - s_)[:, :, None] * self.gamma * JG + s_[:, :, None] * JF
        Hx[:, self.m] = self.chart
        Hs = np.zeros_like(H)
        Hs[:, :self.m] = F - self.gamma * G
        return H, Hx, Hs


def _solve(A, b):
    """Batched solve; rows whose matrix is singular come back as NaN."""
    try:
        return np.linalg.solve(A, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.full_like(b, np.nan)
        for i in range(A.shape[0]):
            try:
                out[i] = np.linalg.solve(A[i], b[i])
            except np.linalg.LinAlgError:
                pass
        return out


def _affine_norm(X):
    w = np.abs(X[:, -1])
    z = np.max(np.abs(X[:, :-1]), axis=1)
    with np.errstate(divide="ignore"):
        return np.where(w > 0, z / np.maximum(w, 1e-300), np.inf)


def _track(hom: _Homotopy, X0, opts: TrackerOptions, step_min: float):
    """Track a batch of start points from s = 0 to s = 1.

    Returns final points, final s, step counts, reached flags and, per path,
    whether the affine norm grew by _GROWTH since s = _NEAR_END or over the
    last two decades of 1 - s.
    """
    P = X0.shape[0]
    X = X0.copy()
    s = np.zeros(P)
    h = np.full(P, opts.step_init)
    succ = np.zeros(P, dtype=int)
    steps = np.zeros(P, dtype=int)
    # affine norm sampled each time 1 - s shrinks tenfold (last two samples kept)
    ck_gap = np.full(P, 0.1)
    ck_prev = np.full(P, np.inf)
    ck_prev2 = np.full(P, np.inf)
    anchor = np.full(P, np.inf)
    active = np.ones(P, dtype=bool)
    stalled = np.zeros(P, dtype=bool)

    def velocity(Y, t):
        _, Hx, Hs = hom.evaluate(Y, t)
        return -_solve(Hx, Hs)

    for _ in range(_MAX_ITERS):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        x, t = X[idx], s[idx]
        dt = np.minimum(h[idx], 1.0 - t)
        k1 = velocity(x, t)
        k2 = velocity(x + 0.5 * dt[:, None] * k1, t + 0.5 * dt)
        k3 = velocity(x + 0.5 * dt[:, None] * k2, t + 0.5 * dt)
        k4 = velocity(x + dt[:, None] * k3, t + dt)
        y = x + dt[:, None] / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t1 = t + dt
        scale = 1.0 + np.linalg.norm(x, axis=1)
        ok = np.all(np.isfinite(y), axis=1)
        first = None
        last = np.zeros(idx.size)
        for it in range(3):
            H, Hx, _ = hom.evaluate(np.where(ok[:, None], y, 0), t1)
            dx = _solve(Hx, -H)
            nrm = np.linalg.norm(dx, axis=1)
            ok &= np.isfinite(nrm)
            y = np.where(ok[:, None], y + np.nan_to_num(dx), y)
            if first is None:
                first = nrm
            last = nrm
            if np.all(~ok | (nrm <= opts.corrector_tol * scale)):
                break
        # near-singular endpoints put a rounding floor under Newton; an accurate
        # predictor plus a stalled corrector at that floor is still on the path
        floor = (first <= _FLOOR_FIRST * scale) & (last <= _FLOOR_LAST * scale)
        accept = ok & (first <= _PREDICT_TOL * scale) & ((last <= opts.corrector_tol * scale) | floor)

        a_idx = idx[accept]
        X[a_idx] = y[accept]
        s[a_idx] = np.where(1.0 - t1[accept] <= 1e-15, 1.0, t1[accept])
        steps[a_idx] += 1
        gap = 1.0 - s[a_idx]
        ck = a_idx[gap <= ck_gap[a_idx]]
        if ck.size:
            ck_prev2[ck] = ck_prev[ck]
            ck_prev[ck] = _affine_norm(X[ck])
            first = ck[np.isinf(anchor[ck]) & (1.0 - s[ck] <= 1.0 - _NEAR_END)]
            anchor[first] = ck_prev[first]
            ck_gap[ck] = np.maximum(1.0 - s[ck], 1e-300) / 10
        succ[a_idx] += 1
        dbl = a_idx[succ[a_idx] >= 4]
        h[dbl] = np.minimum(2 * h[dbl], opts.step_max)
        succ[dbl] = 0

        r_idx = idx[~accept]
        h[r_idx] /= 2
        succ[r_idx] = 0

        done = s >= 1.0
        small = (h < step_min) & active & ~done
        stalled |= small
        active &= ~done & ~small
    reached = s >= 1.0
    growing = _affine_norm(X) > _GROWTH * np.minimum(ck_prev2, anchor)
    return X, s, steps, reached, growing


def _start_points(degrees, phases, chart):
    grids = [phases[i] ** (1.0 / d) * np.exp(2j * np.pi * np.arange(d) / d)
             for i, d in enumerate(degrees)]
    mesh = np.meshgrid(*grids, indexing="ij")
    Z = np.stack([m.ravel() for m in mesh], axis=1)
    X = np.concatenate([Z, np.ones((Z.shape[0], 1))], axis=1)
    return X / (X @ chart)[:, None]


def _start_system(degrees, phases):
    ell = len(degrees)
    out = []
    for i, d in enumerate(degrees):
        e1 = [0] * (ell + 1)
        e1[i] = d
        e2 = [0] * (ell + 1)
        e2[ell] = d
        out.append(MultiPoly(ell + 1, {tuple(e1): 1 + 0j, tuple(e2): -complex(phases[i])}))
    return out


def _random_unit(rng, size=None):
    return np.exp(2j * np.pi * rng.random(size))


def _classify_endpoints(X, s, reached, grow, affine, opts, M):
    """Status, affine endpoint and residual for each tracked path (X is in w = M^-1 z)."""
    out = []
    X = np.concatenate([X[:, :-1] @ M.T, X[:, -1:]], axis=1)
    anorm = _affine_norm(X)
    for i in range(X.shape[0]):
        growing = bool(grow[i])
        if anorm[i] > opts.divergence_norm:
            out.append((AT_INFINITY, None, float("inf")))
            continue
        if not reached[i]:
            if s[i] >= _NEAR_END and growing:
                out.append((AT_INFINITY, None, float("inf")))
            else:
                out.append((FAILED, None, float("inf")))
            continue
        z = X[i, :-1] / X[i, -1]
        nr = newton_refine(z, affine, opts.newton_tol)
        close = np.linalg.norm(nr.point - z) <= 1e-4 * (1 + np.linalg.norm(z))
        if nr.converged and close:
            out.append((FINITE, nr.point, nr.residual))
        elif growing:
            out.append((AT_INFINITY, None, float("inf")))
        else:
            out.append((FAILED, None, nr.residual))
    return out


def _variable_scale(p: MultiPoly) -> float:
    """lam that balances the top-degree part of p against its constant term.

    Scaling only the equations would shrink the constant of Q - 1 below the
    tracker's tolerance when Q has large coefficients, and the singular locus
    of Q = 0 would then pass for a solution set.
    """
    const = abs(complex(p.terms.get((0,) * p.nvars, 0)))
    d = p.degree
    top = max((abs(complex(c)) for e, c in p.terms.items() if sum(e) == d), default=0.0)
    if const == 0 or top == 0 or d <= 0:
        return 1.0
    return (const / top) ** (1.0 / d)


def _rescaled(p: MultiPoly, lam: float) -> MultiPoly:
    """p(lam w) divided by its largest coefficient."""
    terms = {e: complex(c) * lam ** sum(e) for e, c in p.terms.items()}
    big = max(abs(c) for c in terms.values())
    return MultiPoly(p.nvars, {e: c / big for e, c in terms.items()})


def solve(sys: CriticalSystem, opts: TrackerOptions | None = None) -> SolutionSet:
    """All isolated finite solutions of a square system by total-degree homotopy."""
    opts = opts or TrackerOptions()
    affine = sys  # endpoints are refined against this (factored when possible)
    eqs = list(sys.equations)
    ell = eqs[0].nvars
    degrees = tuple(sys.degrees)
    if len(eqs) != ell or len(degrees) != ell:
        raise ValueError("system must be square")
    # tracking runs in w = M^-1 z; endpoints are mapped back and refined on the raw system
    M = _FactoredTarget.frame(sys) if getattr(sys, "factors", None) is not None else None
    if M is not None:
        # expanded Q cancels badly at large |z|; track on the product instead
        target = _FactoredTarget(sys, M)
    else:
        lam = _variable_scale(eqs[0])
        M = lam * np.eye(ell)
        target = CompiledPolys([homogenize_poly(_rescaled(p, lam), d) for p, d in zip(eqs, degrees)],
                               ell + 1)
    bezout = int(np.prod(degrees))

    rng = np.random.default_rng(opts.seed)
    gamma = _random_unit(rng)
    phases = _random_unit(rng, ell)
    chart = rng.normal(size=ell + 1) + 1j * rng.normal(size=ell + 1)
    chart /= np.linalg.norm(chart)
    start_h = _start_system(degrees, phases)
    X0 = _start_points(degrees, phases, chart)

    hom = _Homotopy(target, start_h, gamma, chart, ell + 1)
    X, s, steps, reached, grow = _track(hom, X0, opts, opts.step_min)
    status = _classify_endpoints(X, s, reached, grow, affine, opts, M)
    results = [PathResult(i, st, pt, res, int(steps[i]), float(s[i]))
               for i, (st, pt, res) in enumerate(status)]

    for attempt in range(1, opts.max_retries + 1):
        redo = [r.start_index for r in results if r.status == FAILED]
        if not redo:
            break
        if attempt == 1:
            h2, step_min = hom, opts.step_min / 10
        else:
            prng = np.random.default_rng([opts.seed, attempt])
            h2 = _Homotopy(target, start_h, _random_unit(prng), chart, ell + 1)
            step_min = opts.step_min
        Xr, sr, str_, rr, gr = _track(h2, X0[redo], opts, step_min)
        known = [r.endpoint for r in results if r.status == FINITE]
        for j, (st, pt, res) in enumerate(_classify_endpoints(Xr, sr, rr, gr, affine, opts, M)):
            if attempt > 1 and st == FINITE and _near_any(pt, known, opts.dedup_tol):
                # a fresh gamma pairs start points with endpoints differently
                st, pt = FAILED, None
            results[redo[j]] = PathResult(redo[j], st, pt, res, int(str_[j]), float(sr[j]),
                                          attempts=attempt + 1)
        log.debug("retry %d: %d paths", attempt, len(redo))

    n_fin = sum(r.status == FINITE for r in results)
    n_div = sum(r.status == AT_INFINITY for r in results)
    n_fail = sum(r.status == FAILED for r in results)
    if n_fail == bezout:
        raise RuntimeError("every path failed")
    if n_fail:
        log.warning("%d of %d paths failed after retries", n_fail, bezout)

    sols, sizes = _cluster([r.endpoint for r in results if r.status == FINITE], opts.dedup_tol)
    smins, resids = [], []
    for z in sols:
        nr = newton_refine(z, affine, opts.newton_tol)
        smins.append(nr.min_singular_value)
        resids.append(nr.residual)
    return SolutionSet(sols, sizes, bezout, n_fin, n_div, n_fail, smins, resids, results)


def _near_any(p, points, tol):
    return any(np.linalg.norm(p - q) <= tol * (1 + max(np.linalg.norm(p), np.linalg.norm(q)))
               for q in points)


def _sort_key(z):
    return tuple(v for c in z for v in (round(c.real, 7) + 0.0, round(c.imag, 7) + 0.0))


def _cluster(points, tol):
    reps, sizes = [], []
    for p in points:
        for k, q in enumerate(reps):
            if np.linalg.norm(p - q) <= tol * (1 + max(np.linalg.norm(p), np.linalg.norm(q))):
                sizes[k] += 1
                break
        else:
            reps.append(p)
            sizes.append(1)
    order = sorted(range(len(reps)), key=lambda k: _sort_key(reps[k]))
    if not reps:
        return np.zeros((0, len(points[0]) if points else 0), dtype=complex), []
    return np.array([reps[k] for k in order]), [sizes[k] for k in order]


@dataclass(frozen=True)
class InfinityAccount:
    bezout: int
    finite: int
    at_infinity: int
    reliable: bool
    expected_generic: int | None = None
    matches_generic: bool | None = None


def classify(ss: SolutionSet, n: int, ell: int, generic: bool = False) -> InfinityAccount:
    """Solutions at infinity, counted with multiplicity, as Bezout minus finite."""
    at_inf = ss.bezout - ss.n_finite
    expected = n * comb(n, 2) if (generic and ell == 3) else None
    return InfinityAccount(ss.bezout, ss.n_finite, at_inf, ss.n_failed == 0, expected,
                           None if expected is None else expected == at_inf)


def format_trace(ss: SolutionSet) -> str:
    lines = []
    for r in ss.paths:
        end = "" if r.endpoint is None else " ".join(f"{c:.6g}" for c in r.endpoint)
        lines.append(f"path {r.start_index:4d} {r.status:11s} s={r.s_final:.12f} "
                     f"steps={r.steps} tries={r.attempts} res={r.residual:.2e} {end}")
    return "\n".join(lines)
