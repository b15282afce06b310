"""Central hyperplane arrangements given by rational linear forms.

A form is stored as one coefficient per variable.  Each coefficient is a
polynomial in an optional family parameter ``t``, kept as a tuple of
:class:`~fractions.Fraction` (constant term first, trailing zeros trimmed,
the zero polynomial is ``()``).  Parameter-free arrangements only ever carry
constant coefficients.

The text format is line oriented::

    # Q = x(x-y)(x+y-z)
    vars: x y z
    form: x
    form: x - y
    form: x + y - z

with an optional ``param: t`` line, after which coefficients may carry
``t`` or ``t^k`` (k <= 4), e.g. ``form: x - y + t z``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from ._rational import proportional, rank

MAX_PARAM_DEGREE = 4
_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*")


class ArrangementError(ValueError):
    """Base class for invalid arrangement input."""


class ArrangementSyntaxError(ArrangementError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}" + (f", col {col}" if col is not None else "") + ": "
        super().__init__(where + message)


class ProportionalFormsError(ArrangementError):
    def __init__(self, i, j):
        self.pair = (i, j)
        super().__init__(f"forms {i} and {j} are proportional (Q is not reduced)")


class DegenerateFormError(ArrangementError):
    def __init__(self, i, t=None):
        self.index = i
        self.t = t
        at = f" at t={fmt_rational(t)}" if t is not None else ""
        super().__init__(f"form {i} vanishes identically{at}")


def fmt_rational(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def parse_rational(text: str) -> Fraction:
    """Parse ``p`` or ``p/q``; decimals are refused to keep everything exact."""
    text = text.strip()
    if not re.fullmatch(r"[+-]?\d+(/\d+)?", text):
        raise ValueError(f"not a rational of the form p or p/q: {text!r}")
    return Fraction(text)


def _trim(coeffs) -> tuple:
    c = [Fraction(x) for x in coeffs]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class LinearForm:
    """Linear form sum_j coeffs[j] * z_j with coefficients polynomial in t."""

    coeffs: tuple

    def __post_init__(self):
        entries = tuple(_trim(e) if isinstance(e, (tuple, list)) else _trim((e,))
                        for e in self.coeffs)
        object.__setattr__(self, "coeffs", entries)
        if not entries:
            raise ArrangementError("a linear form needs at least one variable")
        if all(len(e) == 0 for e in entries):
            raise DegenerateFormError(None)
        if any(len(e) > MAX_PARAM_DEGREE + 1 for e in entries):
            raise ArrangementError(f"parameter degree above {MAX_PARAM_DEGREE}")

    @classmethod
    def from_vector(cls, vec) -> "LinearForm":
        return cls(tuple((Fraction(v),) for v in vec))

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    @property
    def is_parametric(self) -> bool:
        return any(len(e) > 1 for e in self.coeffs)

    def vector(self, t=None) -> tuple:
        """Coefficient vector, evaluating the parameter at ``t`` if needed."""
        if self.is_parametric and t is None:
            raise ValueError("parametric form needs a value for the parameter")
        t = Fraction(t) if t is not None else Fraction(0)
        out = []
        for e in self.coeffs:
            v = Fraction(0)
            for c in reversed(e):
                v = v * t + c
            out.append(v)
        return tuple(out)


@dataclass(frozen=True)
class Arrangement:
    dim: int
    forms: tuple
    var_names: tuple
    param_name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "forms", tuple(self.forms))
        object.__setattr__(self, "var_names", tuple(self.var_names))
        if self.dim < 1:
            raise ArrangementError("dimension must be at least 1")
        if len(self.forms) < 1:
            raise ArrangementError("an arrangement needs at least one form")
        if len(self.var_names) != self.dim or len(set(self.var_names)) != self.dim:
            raise ArrangementError("need exactly dim distinct variable names")
        for f in self.forms:
            if f.dim != self.dim:
                raise ArrangementError("form length does not match dimension")
        if self.param_name is None and any(f.is_parametric for f in self.forms):
            raise ArrangementError("parametric coefficients without a declared parameter")
        if not self.is_parametric:
            _check_reduced([f.vector() for f in self.forms])

    @classmethod
    def from_rows(cls, rows, var_names=None) -> "Arrangement":
        rows = [tuple(Fraction(c) for c in r) for r in rows]
        dim = len(rows[0])
        if var_names is None:
            var_names = default_var_names(dim)
        return cls(dim, tuple(LinearForm.from_vector(r) for r in rows), tuple(var_names))

    @property
    def n(self) -> int:
        return len(self.forms)

    @property
    def is_parametric(self) -> bool:
        return any(f.is_parametric for f in self.forms)

    def rows(self) -> list:
        """Exact coefficient rows of a parameter-free arrangement."""
        return [f.vector() for f in self.forms]

    def at(self, t) -> "Arrangement":
        """Evaluate the family parameter; raises on zero or proportional forms."""
        t = Fraction(t)
        rows = []
        for i, f in enumerate(self.forms):
            v = f.vector(t)
            if all(c == 0 for c in v):
                raise DegenerateFormError(i, t)
            rows.append(v)
        return Arrangement.from_rows(rows, self.var_names)

    def is_essential(self) -> bool:
        return rank(self.rows()) == self.dim

    def to_text(self) -> str:
        lines = ["vars: " + " ".join(self.var_names)]
        if self.param_name:
            lines.append(f"param: {self.param_name}")
        for f in self.forms:
            lines.append("form: " + format_form(f, self.var_names, self.param_name))
        return "\n".join(lines) + "\n"


def default_var_names(dim):
    if dim <= 3:
        return ("x", "y", "z")[:dim]
    return tuple(f"z{i + 1}" for i in range(dim))


def _check_reduced(rows):
    for i, r in enumerate(rows):
        if all(c == 0 for c in r):
            raise DegenerateFormError(i)
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            if proportional(rows[i], rows[j]):
                raise ProportionalFormsError(i, j)


def format_form(form: LinearForm, var_names, param_name=None) -> str:
    pieces = []
    for name, entry in zip(var_names, form.coeffs):
        if not entry:
            continue
        if len(entry) == 1:
            c = entry[0]
            mag = abs(c)
            coef = "" if mag == 1 else fmt_rational(mag) + " "
            pieces.append(("-" if c < 0 else "+", coef + name))
        else:
            for k, c in enumerate(entry):
                if c == 0:
                    continue
                mag = abs(c)
                tp = "" if k == 0 else (param_name if k == 1 else f"{param_name}^{k}")
                coef = "" if mag == 1 and k > 0 else fmt_rational(mag)
                pieces.append(("-" if c < 0 else "+", " ".join(p for p in (coef, tp, name) if p)))
    out = ""
    for k, (sign, body) in enumerate(pieces):
        if k == 0:
            out = body if sign == "+" else "-" + body
        else:
            out += f" {sign} {body}"
    return out


# --- parsing ---------------------------------------------------------------

_TOKEN = re.compile(r"(?P<num>\d+)|(?P<ident>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^−])")


def _tokenize(expr, line, col0):
    toks = []
    pos = 0
    while True:
        while pos < len(expr) and expr[pos].isspace():
            pos += 1
        if pos >= len(expr):
            return toks
        m = _TOKEN.match(expr, pos)
        if not m:
            raise ArrangementSyntaxError(f"unexpected character {expr[pos]!r}", line, col0 + pos)
        val = m.group()
        toks.append((m.lastgroup, "-" if val == "−" else val, col0 + pos))
        pos = m.end()


def _parse_form(expr, var_names, param, line, col0):
    toks = _tokenize(expr, line, col0)
    entries = [[Fraction(0)] * (MAX_PARAM_DEGREE + 1) for _ in var_names]
    i = 0
    end_col = col0 + len(expr)

    def peek():
        return toks[i] if i < len(toks) else (None, None, end_col)

    if not toks:
        raise ArrangementSyntaxError("empty form", line, col0)
    first = True
    while i < len(toks):
        sign = 1
        kind, val, col = peek()
        if kind == "op" and val in "+-":
            sign = -1 if val == "-" else 1
            i += 1
        elif not first:
            raise ArrangementSyntaxError(f"expected '+' or '-' before {val!r}", line, col)
        first = False
        coef = Fraction(1)
        kind, val, col = peek()
        if kind == "num":
            num = int(val)
            i += 1
            if peek()[0] == "op" and peek()[1] == "/":
                i += 1
                kind, val, col = peek()
                if kind != "num":
                    raise ArrangementSyntaxError("expected denominator", line, col)
                if int(val) == 0:
                    raise ArrangementSyntaxError("zero denominator", line, col)
                coef = Fraction(num, int(val))
                i += 1
            else:
                coef = Fraction(num)
            if peek()[0] == "op" and peek()[1] == "*":
                i += 1
        power = 0
        kind, val, col = peek()
        if kind == "ident" and param is not None and val == param:
            power = 1
            i += 1
            if peek()[0] == "op" and peek()[1] == "^":
                i += 1
                kind, val, col = peek()
                if kind != "num":
                    raise ArrangementSyntaxError("expected exponent after '^'", line, col)
                power = int(val)
                if power > MAX_PARAM_DEGREE:
                    raise ArrangementSyntaxError(f"parameter power above {MAX_PARAM_DEGREE}", line, col)
                i += 1
            if peek()[0] == "op" and peek()[1] == "*":
                i += 1
        kind, val, col = peek()
        if kind is None:
            raise ArrangementSyntaxError("constant term (forms must be homogeneous linear)", line, col)
        if kind != "ident":
            raise ArrangementSyntaxError(f"expected a variable, got {val!r}", line, col)
        if val not in var_names:
            if val == param:
                raise ArrangementSyntaxError("constant term (forms must be homogeneous linear)",
                                             line, col)
            raise ArrangementSyntaxError(f"unknown variable {val!r}", line, col)
        i += 1
        entries[var_names.index(val)][power] += sign * coef
        kind, val, col = peek()
        if kind == "ident" or kind == "num" or (kind == "op" and val in "*/^"):
            raise ArrangementSyntaxError(f"unexpected {val!r} after variable", line, col)
    return LinearForm(tuple(tuple(e) for e in entries))


def parse_arrangement(text: str) -> Arrangement:
    """Parse the line-oriented arrangement format.

    Errors carry line and column; proportional forms raise
    :class:`ProportionalFormsError` for parameter-free input.
    """
    var_names = None
    param = None
    forms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, rest = stripped.partition(":")
        col0 = raw.index(":") + 2 if sep else 1
        key = key.strip()
        if not sep:
            raise ArrangementSyntaxError("expected 'key: value'", lineno, 1)
        if key == "vars":
            if var_names is not None:
                raise ArrangementSyntaxError("'vars' given twice", lineno, 1)
            if forms:
                raise ArrangementSyntaxError("'vars' must precede every form", lineno, 1)
            names = rest.split()
            if not names:
                raise ArrangementSyntaxError("no variables declared", lineno, col0)
            for nm in names:
                if not _IDENT.fullmatch(nm):
                    raise ArrangementSyntaxError(f"bad identifier {nm!r}", lineno, raw.index(nm) + 1)
            if len(set(names)) != len(names):
                raise ArrangementSyntaxError("duplicate variable name", lineno, col0)
            var_names = names
        elif key == "param":
            names = rest.split()
            if param is not None or len(names) > 1:
                raise ArrangementSyntaxError("at most one parameter is allowed", lineno, col0)
            if len(names) != 1 or not _IDENT.fullmatch(names[0]):
                raise ArrangementSyntaxError("bad parameter name", lineno, col0)
            if forms:
                raise ArrangementSyntaxError("'param' must precede every form", lineno, 1)
            param = names[0]
        elif key == "form":
            if var_names is None:
                raise ArrangementSyntaxError("'vars' must come before any form", lineno, 1)
            forms.append((lineno, rest, col0))
        else:
            raise ArrangementSyntaxError(f"unknown key {key!r}", lineno, 1)
    if var_names is None:
        raise ArrangementSyntaxError("missing 'vars' line")
    if param is not None and param in var_names:
        raise ArrangementSyntaxError(f"parameter {param!r} clashes with a variable")
    if not forms:
        raise ArrangementSyntaxError("no forms given")
    parsed = []
    for lineno, rest, col0 in forms:
        try:
            parsed.append(_parse_form(rest, var_names, param, lineno, col0))
        except DegenerateFormError:
            raise ArrangementSyntaxError("form is identically zero", lineno, col0) from None
    return Arrangement(len(var_names), tuple(parsed), tuple(var_names), param)


def load_arrangement(path) -> Arrangement:
    with open(path, encoding="utf-8") as fh:
        return parse_arrangement(fh.read())
