"""Stage-by-stage numerical check of the minimal cell counts.

For a generic frame, stage k counts the critical points of |z_k| on the
Milnor fiber of the stage-k section; each one is a (k-1)-cell.  The counts
are compared against n * b_{k-1}(M*) read off the intersection lattice,
together with the deck-group symmetry, the Morse indices and the Euler
characteristic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .arrangement import Arrangement, ArrangementError, fmt_rational, parse_rational
from .frame import choose_frame, restrict_stage, stage_one_coefficients
from .lattice import CellCounts, PoincareData, build_lattice, poincare, predict_cells, poly_eval
from .poly import CriticalSystem, critical_system
from .solver import CompiledPolys, SolutionSet, TrackerOptions, solve

log = logging.getLogger(__name__)

INDEX_STEP = 1e-5
INDEX_BAND = 1e-6
ORBIT_TOL = 1e-8


@dataclass(frozen=True)
class EquivarianceReport:
    zeta: complex
    orbits: tuple  # tuples of solution indices, each closed under z -> zeta z
    passed: bool

    def to_dict(self):
        return {"zeta": [self.zeta.real, self.zeta.imag],
                "orbits": [list(o) for o in self.orbits], "pass": self.passed}

    @classmethod
    def from_dict(cls, d):
        return cls(complex(*d["zeta"]), tuple(tuple(o) for o in d["orbits"]), d["pass"])


@dataclass(frozen=True)
class StageReport:
    stage_dim: int
    predicted: int
    found: int
    bezout: int
    diverged: int
    failed: int
    max_solution_norm: float
    match: bool
    # numerical detail kept for callers, left out of serialised reports
    solutions: np.ndarray = field(default=None, compare=False, repr=False)
    indices: tuple = field(default=(), compare=False, repr=False)
    equivariance: EquivarianceReport = field(default=None, compare=False, repr=False)
    solution_set: SolutionSet = field(default=None, compare=False, repr=False)

    _FIELDS = ("stage_dim", "predicted", "found", "bezout", "diverged", "failed",
               "max_solution_norm", "match")

    def to_dict(self):
        return {k: getattr(self, k) for k in self._FIELDS}

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in cls._FIELDS})


@dataclass(frozen=True)
class MinimalityReport:
    cell_counts: CellCounts
    stages: tuple  # StageReport for k = l, l-1, ..., 1
    euler_ok: bool
    equivariance: EquivarianceReport
    indices_ok: bool
    frame_seed: int
    frame: tuple = field(default=None, compare=False)

    @property
    def passed(self) -> bool:
        return (all(s.match for s in self.stages) and self.euler_ok
                and self.equivariance.passed and self.indices_ok)

    def found(self) -> tuple:
        """Found cell counts (c_0, c_1, ..., c_{l-1})."""
        return tuple(s.found for s in sorted(self.stages, key=lambda s: s.stage_dim))

    def stage(self, k) -> StageReport:
        return next(s for s in self.stages if s.stage_dim == k)

    def to_dict(self):
        return {"cell_counts": self.cell_counts.to_dict(),
                "stages": [s.to_dict() for s in self.stages],
                "euler_ok": self.euler_ok,
                "equivariance": self.equivariance.to_dict(),
                "indices_ok": self.indices_ok,
                "frame_seed": self.frame_seed,
                "pass": self.passed}

    @classmethod
    def from_dict(cls, d):
        return cls(CellCounts.from_dict(d["cell_counts"]),
                   tuple(StageReport.from_dict(s) for s in d["stages"]),
                   d["euler_ok"], EquivarianceReport.from_dict(d["equivariance"]),
                   d["indices_ok"], d["frame_seed"])


# --- checks ----------------------------------------------------------------------

def equivariance_check(solutions, n: int, tol: float = ORBIT_TOL) -> EquivarianceReport:
    """Split solutions into orbits of z -> zeta z, zeta = exp(2 pi i / n)."""
    zeta = complex(np.exp(2j * np.pi / n))
    sols = np.asarray(solutions, dtype=complex)
    if sols.size == 0:
        return EquivarianceReport(zeta, (), True)
    unassigned = set(range(len(sols)))
    orbits = []
    ok = True
    for i in range(len(sols)):
        if i not in unassigned:
            continue
        orbit = [i]
        unassigned.discard(i)
        z = sols[i]
        for j in range(1, n):
            target = zeta ** j * z
            d = np.linalg.norm(sols - target, axis=1)
            hit = int(np.argmin(d))
            if d[hit] > tol * (1 + np.linalg.norm(z)) or hit in orbit:
                ok = False
                continue
            orbit.append(hit)
            unassigned.discard(hit)
        orbits.append(tuple(sorted(orbit)))
        if len(set(orbit)) != n:
            ok = False
    return EquivarianceReport(zeta, tuple(orbits), ok and len(sols) % n == 0)


def _gradient_function(sys: CriticalSystem):
    """z -> complex gradient of Q, factored when the system allows it."""
    prod = sys.product()
    if prod is not None:
        return lambda z: prod.derivatives(z)[1]
    Qc = CompiledPolys([sys.Q.to_complex()], sys.nvars)
    return lambda z: Qc.values_and_jacobian(z.reshape(1, -1))[1][0, 0]


def _constraint_jacobian(grad_q, u, k):
    """Real Jacobian of (Re Q, Im Q) in coordinates (Re z, Im z), by Cauchy-Riemann."""
    g = grad_q(u[:k] + 1j * u[k:])
    J = np.empty((2, 2 * k))
    J[0, :k], J[0, k:] = g.real, -g.imag
    J[1, :k], J[1, k:] = g.imag, g.real
    return J


def _distance_gradient(u, k):
    x, y = u[k - 1], u[2 * k - 1]
    r = np.hypot(x, y)
    g = np.zeros(2 * k)
    g[k - 1], g[2 * k - 1] = x / r, y / r
    return g


def constrained_hessian(point, sys: CriticalSystem, step: float = INDEX_STEP):
    """Hessian of |z_k| restricted to F at a critical point, in a tangent basis.

    Returns (reduced Hessian, tangent basis, Lagrange-residual norm).
    """
    k = sys.nvars
    grad_q = _gradient_function(sys)
    z = np.asarray(point, dtype=complex)
    u0 = np.concatenate([z.real, z.imag])
    J = _constraint_jacobian(grad_q, u0, k)
    grad_f = _distance_gradient(u0, k)
    lam, *_ = np.linalg.lstsq(J.T, grad_f, rcond=None)
    stationarity = float(np.linalg.norm(grad_f - J.T @ lam))

    def lagrangian_grad(u):
        Ju = _constraint_jacobian(grad_q, u, k)
        return _distance_gradient(u, k) - Ju.T @ lam

    m = 2 * k
    H = np.empty((m, m))
    for i in range(m):
        e = np.zeros(m)
        e[i] = step
        H[:, i] = (lagrangian_grad(u0 + e) - lagrangian_grad(u0 - e)) / (2 * step)
    H = 0.5 * (H + H.T)
    _, sv, vt = np.linalg.svd(J)
    tangent = vt[2:].T  # orthonormal basis of ker J, dimension 2(k - 1)
    return tangent.T @ H @ tangent, tangent, stationarity


def morse_index(point, sys: CriticalSystem):
    """Number of negative eigenvalues of the constrained Hessian, or None if borderline."""
    Hr, _, _ = constrained_hessian(point, sys)
    eig = np.linalg.eigvalsh(Hr)
    if np.any(np.abs(eig) <= INDEX_BAND):
        return None
    return int(np.sum(eig < -INDEX_BAND))


def euler_check(report: MinimalityReport, pd: PoincareData, n: int) -> bool:
    found = sum((-1) ** (s.stage_dim - 1) * s.found for s in report.stages)
    return found == n * poly_eval(list(pd.p_Mstar), -1)


# --- orchestration ---------------------------------------------------------------

def _stage_one(arr, U, pd, n):
    coeffs = stage_one_coefficients(arr, U)
    c = Fraction(1)
    for a in coeffs:
        c *= a
    root_norm = float(abs(c)) ** (-1.0 / n)
    predicted = n * pd.betti_Mstar[0]
    return StageReport(1, predicted, n, n, 0, 0, root_norm, predicted == n,
                       indices=(0,) * n)


def solve_stage(arr, U, k, pd, opts) -> StageReport:
    """Solve the stage-k critical system in frame U and compare with n * b_{k-1}(M*)."""
    n = arr.n
    stage = restrict_stage(arr, U, k)
    sys = critical_system(stage)
    ss = solve(sys, opts)
    predicted = n * pd.betti_Mstar[k - 1]
    found = len(ss.solutions)
    indices = tuple(morse_index(z, sys) for z in ss.solutions)
    eq = equivariance_check(ss.solutions, n)
    report = StageReport(k, predicted, found, ss.bezout, ss.n_diverged, ss.n_failed,
                         ss.max_norm, predicted == found and ss.n_failed == 0,
                         solutions=ss.solutions, indices=indices, equivariance=eq,
                         solution_set=ss)
    if opts.divergence_norm and ss.max_norm > 0.01 * opts.divergence_norm:
        log.warning("stage %d: solution norm %.3g is within 1%% of the divergence "
                    "threshold %.3g; raise divergence_norm", k, ss.max_norm, opts.divergence_norm)
    return report


def _merge_equivariance(stages, n):
    zeta = complex(np.exp(2j * np.pi / n))
    orbits, offset, ok = [], 0, True
    for s in stages:
        if s.equivariance is None:
            continue
        orbits.extend(tuple(offset + i for i in o) for o in s.equivariance.orbits)
        offset += s.found
        ok &= s.equivariance.passed
    return EquivarianceReport(zeta, tuple(orbits), ok)


def _run(arr, U, frame_seed, pd, cells, opts):
    n, ell = arr.n, arr.dim
    stages = [solve_stage(arr, U, k, pd, opts) for k in range(ell, 1, -1)]
    stages.append(_stage_one(arr, U, pd, n))
    indices_ok = all(i == s.stage_dim - 1 for s in stages for i in s.indices)
    report = MinimalityReport(cells, tuple(stages), False, _merge_equivariance(stages, n),
                              indices_ok, frame_seed, U)
    return MinimalityReport(cells, report.stages, euler_check(report, pd, n),
                            report.equivariance, indices_ok, frame_seed, U)


def analyze(arr: Arrangement, opts: TrackerOptions | None = None,
            frame_seed: int | None = None) -> MinimalityReport:
    """Choose a generic frame, solve every stage and compare with the lattice."""
    opts = opts or TrackerOptions()
    if arr.is_parametric:
        raise ValueError("evaluate the family parameter first (see family_scan)")
    frame_seed = opts.seed if frame_seed is None else frame_seed
    pd = poincare(build_lattice(arr))
    cells = predict_cells(pd, arr.n)
    U = choose_frame(arr, frame_seed)
    report = _run(arr, U, frame_seed, pd, cells, opts)
    if not all(s.match for s in report.stages):
        # counts off: one fresh random frame before reporting the mismatch
        retry_seed = frame_seed + 1
        U2 = choose_frame(arr, retry_seed, try_identity=False)
        log.info("stage mismatch in frame seed %d, retrying with seed %d", frame_seed, retry_seed)
        report = _run(arr, U2, retry_seed, pd, cells, opts)
    return report


# --- families ----------------------------------------------------------------------

@dataclass(frozen=True)
class FamilyRow:
    t: Fraction
    stages: tuple = ()
    max_solution_norm: float = 0.0
    passed: bool = False
    norm_warning: bool = False
    error: str | None = None
    report: MinimalityReport = field(default=None, compare=False, repr=False)

    @property
    def top(self) -> StageReport | None:
        return self.stages[0] if self.stages else None

    def to_dict(self):
        return {"t": fmt_rational(self.t), "stages": [s.to_dict() for s in self.stages],
                "max_solution_norm": self.max_solution_norm, "pass": self.passed,
                "norm_warning": self.norm_warning, "error": self.error}

    @classmethod
    def from_dict(cls, d):
        return cls(parse_rational(d["t"]), tuple(StageReport.from_dict(s) for s in d["stages"]),
                   d["max_solution_norm"], d["pass"], d["norm_warning"], d["error"])


@dataclass(frozen=True)
class FamilyReport:
    rows: tuple

    def to_dict(self):
        return {"rows": [r.to_dict() for r in self.rows]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(FamilyRow.from_dict(r) for r in d["rows"]))


def family_scan(arr: Arrangement, t_values, opts: TrackerOptions | None = None,
                frame_seed: int | None = None) -> FamilyReport:
    """Independent analyses of a one-parameter family at each rational t."""
    opts = opts or TrackerOptions()
    if not arr.is_parametric and arr.param_name is None:
        raise ValueError("family_scan needs an arrangement with a parameter")
    t_values = [Fraction(t) for t in t_values]
    if not t_values:
        raise ValueError("no parameter values given")
    rows = []
    for t in t_values:
        try:
            rep = analyze(arr.at(t), opts, frame_seed)
        except ArrangementError as e:
            rows.append(FamilyRow(t, error=str(e)))
            continue
        top = rep.stages[0]
        warn = top.max_solution_norm > 0.01 * opts.divergence_norm
        rows.append(FamilyRow(t, rep.stages, top.max_solution_norm, rep.passed, warn,
                              None, rep))
    return FamilyReport(tuple(rows))
