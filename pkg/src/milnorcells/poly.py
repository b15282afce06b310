"""Sparse multivariate polynomials and the critical-point systems built from Q.

Coefficients are either exact ``Fraction`` values or Python ``complex``.
Terms are kept in graded-lex order (highest total degree first) so printing
and iteration are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .arrangement import DegenerateFormError


def _grlex_key(exps):
    return (-sum(exps), tuple(-e for e in exps))


class MultiPoly:
    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms=None):
        self.nvars = nvars
        clean = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars:
                raise ValueError("exponent vector has the wrong length")
            if c != 0:
                clean[exps] = clean.get(exps, 0) + c
                if clean[exps] == 0:
                    del clean[exps]
        self.terms = dict(sorted(clean.items(), key=lambda kv: _grlex_key(kv[0])))

    # construction
    @classmethod
    def constant(cls, nvars, c):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars, i):
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): Fraction(1)})

    @classmethod
    def linear(cls, coeffs):
        nv = len(coeffs)
        return cls(nv, {tuple(int(j == i) for j in range(nv)): Fraction(c)
                        for i, c in enumerate(coeffs)})

    # arithmetic
    def __add__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.constant(self.nvars, other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0) + c
        return MultiPoly(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, MultiPoly):
            return MultiPoly(self.nvars, {e: c * other for e, c in self.terms.items()})
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0) + c1 * c2
        return MultiPoly(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = MultiPoly.constant(self.nvars, Fraction(1))
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            other = MultiPoly.constant(self.nvars, other)
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, tuple(self.terms.items())))

    # queries
    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def is_homogeneous(self, d: Optional[int] = None) -> bool:
        degs = {sum(e) for e in self.terms}
        if not degs:
            return True
        return len(degs) == 1 and (d is None or degs == {d})

    def is_exact(self) -> bool:
        return all(isinstance(c, (int, Fraction)) for c in self.terms.values())

    def coefficient_norm(self) -> float:
        return float(sum(abs(complex(c)) for c in self.terms.values()))

    def to_complex(self) -> "MultiPoly":
        return MultiPoly(self.nvars, {e: _to_complex(c) for e, c in self.terms.items()})

    def substitute_linear(self, matrix) -> "MultiPoly":
        """p(M z) for an nvars x m matrix M (rows index old variables)."""
        m = len(matrix[0])
        images = [MultiPoly.linear(row) for row in matrix]
        out = MultiPoly(m)
        for e, c in self.terms.items():
            term = MultiPoly.constant(m, c)
            for img, k in zip(images, e):
                if k:
                    term = term * img ** k
            out = out + term
        return out

    def format(self, names=None) -> str:
        names = names or [f"z{i + 1}" for i in range(self.nvars)]
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms.items():
            mono = "*".join(n if k == 1 else f"{n}^{k}" for n, k in zip(names, e) if k)
            if isinstance(c, complex):
                cs = f"({c.real:.6g}{c.imag:+.6g}j)"
                parts.append(("+", cs + ("*" + mono if mono else "")))
                continue
            c = Fraction(c)
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}*{mono}"
            parts.append((sign, body))
        s = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    def __repr__(self):
        return f"MultiPoly({self.format()})"


def _to_complex(c):
    if isinstance(c, complex):
        return c
    if isinstance(c, Fraction):
        return complex(c.numerator / c.denominator)
    return complex(c)


def differentiate(p: MultiPoly, i: int) -> MultiPoly:
    if not 0 <= i < p.nvars:
        raise IndexError(f"variable index {i} out of range")
    terms = {}
    for e, c in p.terms.items():
        if e[i]:
            f = list(e)
            f[i] -= 1
            terms[tuple(f)] = c * e[i]
    return MultiPoly(p.nvars, terms)


def evaluate(p: MultiPoly, point) -> complex:
    """Direct term-by-term evaluation at a complex point."""
    point = np.asarray(point, dtype=complex)
    if point.shape != (p.nvars,):
        raise ValueError("point length does not match the number of variables")
    total = 0j
    for e, c in p.terms.items():
        total += _to_complex(c) * np.prod(point ** np.array(e))
    return complex(total)


def expand_product(forms, t=None) -> MultiPoly:
    """Expand Q = prod alpha_i exactly.

    ``forms`` are :class:`~milnorcells.arrangement.LinearForm` values or plain
    coefficient rows.  A parametric form is evaluated at ``t`` first.
    """
    forms = list(forms)
    if not forms:
        raise ValueError("empty product")
    rows = []
    for i, f in enumerate(forms):
        vec = f.vector(t) if hasattr(f, "vector") else tuple(Fraction(c) for c in f)
        if all(c == 0 for c in vec):
            raise DegenerateFormError(i, t)
        rows.append(vec)
    q = MultiPoly.linear(rows[0])
    for r in rows[1:]:
        q = q * MultiPoly.linear(r)
    return q


class LinearProduct:
    """Q = prod_i (a_i . z) evaluated in factored form, with gradient and Hessian.

    Expanding Q into monomials loses digits to cancellation once |z| is
    large; the factored form keeps full relative accuracy at points where no
    factor is tiny, which includes every point of Q = 1 away from infinity.
    """

    def __init__(self, rows):
        self.A = np.array([[_to_complex(c) for c in r] for r in rows], dtype=complex)
        n = self.A.shape[0]
        eye = np.eye(n, dtype=bool)
        self._drop1 = ~eye                                   # [i, k]: k != i
        self._drop2 = ~(eye[:, None, :] | eye[None, :, :])   # [i, m, k]: k != i, m

    @property
    def nvars(self) -> int:
        return self.A.shape[1]

    def derivatives(self, z):
        """(Q, grad Q, Hessian of Q) at a single complex point."""
        alpha = self.A @ np.asarray(z, dtype=complex)
        value = np.prod(alpha)
        p1 = np.prod(np.where(self._drop1, alpha, 1.0), axis=1)
        p2 = np.prod(np.where(self._drop2, alpha, 1.0), axis=2)
        np.fill_diagonal(p2, 0.0)
        grad = p1 @ self.A
        hess = self.A.T @ p2 @ self.A
        return value, grad, hess

    def batch_derivatives(self, Z):
        """Q, gradients and Hessians at the rows of Z: shapes (P,), (P, l), (P, l, l)."""
        alpha = np.asarray(Z, dtype=complex) @ self.A.T
        value = np.prod(alpha, axis=1)
        p1 = np.prod(np.where(self._drop1, alpha[:, None, :], 1.0), axis=2)
        p2 = np.prod(np.where(self._drop2, alpha[:, None, None, :], 1.0), axis=3)
        n = self.A.shape[0]
        p2[:, np.arange(n), np.arange(n)] = 0.0
        return value, p1 @ self.A, self.A.T @ p2 @ self.A


@dataclass(frozen=True)
class CriticalSystem:
    """Q - 1, dQ/dz_1, ..., dQ/dz_{l-1}: critical points of |z_l| on F = Q^{-1}(1).

    ``factors`` optionally keeps the coefficient rows of the linear forms
    whose product is Q, for accurate evaluation near solutions.
    """

    equations: tuple
    degrees: tuple
    Q: MultiPoly = field(compare=False)
    level: Fraction = Fraction(1)
    factors: Optional[tuple] = field(default=None, compare=False, repr=False)

    @property
    def nvars(self) -> int:
        return self.Q.nvars

    @property
    def bezout(self) -> int:
        out = 1
        for d in self.degrees:
            out *= d
        return out

    def product(self) -> Optional[LinearProduct]:
        return None if self.factors is None else LinearProduct(self.factors)

    def values_and_jacobian(self, z):
        """Values and Jacobian of the system from the factored Q (needs ``factors``)."""
        value, grad, hess = self.product().derivatives(z)
        k = self.nvars
        vals = np.concatenate([[value - complex(self.level)], grad[:k - 1]])
        jac = np.vstack([grad[None, :], hess[:k - 1]])
        return vals, jac


def build_critical_system(Q: MultiPoly, level=Fraction(1), factors=None) -> CriticalSystem:
    ell = Q.nvars
    n = Q.degree
    if n < 1:
        raise ValueError("Q must have positive degree")
    eqs = [Q - level] + [differentiate(Q, i) for i in range(ell - 1)]
    for k, e in enumerate(eqs[1:], start=1):
        if e.is_zero():
            raise ValueError(f"dQ/dz_{k} vanishes identically; the frame is degenerate")
    degrees = (n,) + (n - 1,) * (ell - 1)
    if factors is not None:
        factors = tuple(tuple(Fraction(c) for c in r) for r in factors)
        if expand_product(factors) != Q:
            raise ValueError("factors do not multiply out to Q")
    return CriticalSystem(tuple(eqs), degrees, Q, Fraction(level), factors)


def critical_system(arr, t=None) -> CriticalSystem:
    """The critical system of an arrangement, keeping its factored form."""
    rows = [f.vector(t) for f in arr.forms]
    return build_critical_system(expand_product(arr.forms, t), factors=rows)


@dataclass(frozen=True)
class ProjectiveSystem:
    """Homogenised system Q = w^n, partials = 0 in variables (z_1..z_l, w)."""

    equations: tuple
    degrees: tuple

    @property
    def nvars(self) -> int:
        return self.equations[0].nvars

    def dehomogenize(self) -> tuple:
        """Set w = 1, recovering the affine equations."""
        out = []
        for eq in self.equations:
            terms = {}
            for e, c in eq.terms.items():
                key = e[:-1]
                terms[key] = terms.get(key, 0) + c
            out.append(MultiPoly(eq.nvars - 1, terms))
        return tuple(out)


def homogenize_poly(p: MultiPoly, d: int) -> MultiPoly:
    if p.degree > d:
        raise ValueError("degree exceeds the homogenising degree")
    return MultiPoly(p.nvars + 1, {e + (d - sum(e),): c for e, c in p.terms.items()})


def homogenize(sys: CriticalSystem) -> ProjectiveSystem:
    eqs = tuple(homogenize_poly(e, d) for e, d in zip(sys.equations, sys.degrees))
    return ProjectiveSystem(eqs, sys.degrees)
