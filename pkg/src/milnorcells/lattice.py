"""Intersection lattice, Moebius function and the cell-count predictions.

Everything here is exact: flats are identified by their member sets and
ranks come from rational row reduction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ._rational import in_span, rank
from .arrangement import Arrangement, LinearForm


@dataclass(frozen=True)
class Flat:
    members: frozenset
    rank: int
    mobius: int

    @property
    def codim(self) -> int:
        return self.rank


@dataclass(frozen=True)
class IntersectionLattice:
    dim: int
    n: int
    flats: tuple  # sorted by (rank, sorted members)

    def by_rank(self):
        out = [[] for _ in range(self.dim + 1)]
        for f in self.flats:
            out[f.rank].append(f)
        return out

    def rank_profile(self):
        return tuple(len(level) for level in self.by_rank() if level)

    def leq(self, x: Flat, y: Flat) -> bool:
        """x <= y in the lattice order (reverse inclusion of subspaces)."""
        return x.members <= y.members

    def characteristic(self) -> list:
        """chi(t) as integer coefficients, index k = coefficient of t^k."""
        chi = [0] * (self.dim + 1)
        for f in self.flats:
            chi[self.dim - f.rank] += f.mobius
        return chi

    def to_dict(self):
        return {
            "dim": self.dim,
            "n": self.n,
            "flats": [{"members": sorted(f.members), "rank": f.rank, "mobius": f.mobius}
                      for f in self.flats],
            "chi": self.characteristic(),
        }


def _closure(members, rows):
    span = [rows[i] for i in members]
    return frozenset(i for i, r in enumerate(rows) if i in members or in_span(r, span))


def build_lattice(arr: Arrangement) -> IntersectionLattice:
    if arr.is_parametric:
        raise ValueError("evaluate the family parameter before building the lattice")
    rows = arr.rows()
    found = {frozenset(): 0}
    frontier = [frozenset()]
    while frontier:
        nxt = []
        for x in frontier:
            for i in range(arr.n):
                if i in x:
                    continue
                y = _closure(x | {i}, rows)
                if y not in found:
                    found[y] = rank([rows[j] for j in y])
                    nxt.append(y)
        frontier = nxt
    order = sorted(found, key=lambda m: (found[m], sorted(m)))
    mu = {}
    for x in order:
        if not x:
            mu[x] = 1
        else:
            mu[x] = -sum(mu[y] for y in mu if y < x)
    flats = tuple(Flat(x, found[x], mu[x]) for x in order)
    return IntersectionLattice(arr.dim, arr.n, flats)


# --- polynomial helpers on integer coefficient lists (index = power) -------

def _trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def poly_eval(p, x):
    v = 0
    for c in reversed(p):
        v = v * x + c
    return v


def divide_one_plus_t(p):
    """Exact quotient p / (1 + t); raises ArithmeticError if not exact."""
    p = list(p)
    q = [0] * max(len(p) - 1, 1)
    r = p[:]
    for k in range(len(p) - 1, 0, -1):
        c = r[k]
        q[k - 1] = c
        r[k] -= c
        r[k - 1] -= c
    if any(r):
        raise ArithmeticError("P(M) is not divisible by (1+t)")
    return _trim(q)


@dataclass(frozen=True)
class PoincareData:
    chi: tuple
    p_M: tuple
    p_Mstar: tuple
    betti_M: tuple
    betti_Mstar: tuple

    def to_dict(self):
        return {k: list(getattr(self, k)) for k in ("chi", "p_M", "p_Mstar", "betti_M", "betti_Mstar")}

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: tuple(d[k]) for k in ("chi", "p_M", "p_Mstar", "betti_M", "betti_Mstar")})


def poincare(lattice: IntersectionLattice) -> PoincareData:
    ell = lattice.dim
    chi = lattice.characteristic()
    p_m = [0] * (ell + 1)
    for f in lattice.flats:
        p_m[f.rank] += f.mobius * (-1) ** f.rank
    p_star = divide_one_plus_t(p_m)
    betti_m = tuple(p_m)
    betti_star = tuple(p_star + [0] * (ell - len(p_star)))
    return PoincareData(tuple(chi), tuple(_trim(p_m)), tuple(p_star), betti_m, betti_star)


@dataclass(frozen=True)
class CellCounts:
    c_F: tuple
    c_Mstar: tuple
    c_M: tuple
    euler_F: int
    euler_Mstar: int

    def to_dict(self):
        return {"c_F": list(self.c_F), "c_Mstar": list(self.c_Mstar), "c_M": list(self.c_M),
                "euler_F": self.euler_F, "euler_Mstar": self.euler_Mstar}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["c_F"]), tuple(d["c_Mstar"]), tuple(d["c_M"]),
                   d["euler_F"], d["euler_Mstar"])


def predict_cells(pd: PoincareData, n: int) -> CellCounts:
    star = list(pd.betti_Mstar)
    c_f = tuple(n * b for b in star)
    c_m = tuple((star[p] if p < len(star) else 0) + (star[p - 1] if p >= 1 else 0)
                for p in range(len(star) + 1))
    euler_star = sum((-1) ** p * b for p, b in enumerate(star))
    euler_f = sum((-1) ** p * c for p, c in enumerate(c_f))
    return CellCounts(c_f, tuple(star), c_m, euler_f, euler_star)


# --- genericity --------------------------------------------------------------

def _as_vector(L):
    if isinstance(L, LinearForm):
        return L.vector()
    return tuple(Fraction(c) for c in L)


def nongeneric_flat(L, arr: Arrangement, lattice: IntersectionLattice | None = None):
    """First flat of positive dimension lying inside {L = 0}, or None."""
    vec = _as_vector(L)
    if all(c == 0 for c in vec):
        raise ValueError("L is the zero form")
    if len(vec) != arr.dim:
        raise ValueError("L has the wrong number of coefficients")
    lattice = lattice or build_lattice(arr)
    rows = arr.rows()
    for f in lattice.flats:
        if f.rank == 0 or f.rank >= arr.dim:
            continue
        if in_span(vec, [rows[i] for i in f.members]):
            return f
    return None


def is_generic(L, arr: Arrangement, lattice: IntersectionLattice | None = None) -> bool:
    """True iff no flat of positive dimension is contained in the hyperplane L = 0."""
    return nongeneric_flat(L, arr, lattice) is None
