"""Coordinate frames in which every linear section z_k = 0 is generic.

A frame is a unimodular integer matrix U.  Writing z = U z', a form with
coefficient row a becomes a U, so the whole arrangement transforms as
A -> A U.  Stage k keeps the first k new coordinates and sets the rest to 0.
"""

from __future__ import annotations

import random
from fractions import Fraction

import numpy as np

from itertools import combinations

from .arrangement import Arrangement, ArrangementError, default_var_names
from ._rational import in_span, proportional, rank

FRAME_RETRIES = 128
OPS_GROWTH = 4
# generic frames collected before keeping the best conditioned one
FRAME_CANDIDATES = 8


class FrameError(ArrangementError):
    """A frame is not generic for some stage."""

    def __init__(self, message, stage=None, flat=None):
        self.stage = stage
        self.flat = flat  # member indices of the offending flat, if any
        super().__init__(message)


class FrameSearchError(FrameError):
    pass


def identity(ell):
    return tuple(tuple(int(i == j) for j in range(ell)) for i in range(ell))


def transform_rows(rows, U):
    ell = len(U)
    return [tuple(sum(Fraction(r[i]) * U[i][j] for i in range(ell)) for j in range(ell))
            for r in rows]


def restrict_stage(arr: Arrangement, U, k: int) -> Arrangement:
    """The stage-k arrangement: forms in the U frame restricted to z_{k+1} = ... = 0."""
    if not 2 <= k <= arr.dim:
        raise ValueError(f"stage must lie in 2..{arr.dim}, got {k}")
    rows = [r[:k] for r in transform_rows(arr.rows(), U)]
    for i, r in enumerate(rows):
        if all(c == 0 for c in r):
            raise FrameError(f"form {i} vanishes on the stage-{k} section", stage=k)
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            if proportional(rows[i], rows[j]):
                raise FrameError(f"forms {i} and {j} become proportional at stage {k}", stage=k)
    names = arr.var_names[:k] if U == identity(arr.dim) else default_var_names(arr.dim)[:k]
    return Arrangement.from_rows(rows, names)


def stage_one_coefficients(arr: Arrangement, U):
    """Coefficient of z_1 in each form after the frame change (stage 1)."""
    return [r[0] for r in transform_rows(arr.rows(), U)]


def axis_flat(rows, k):
    """Members of a flat of rank < k lying in z_k = 0, or None.

    Such a flat exists iff e_k is in the span of some independent set of at
    most k - 1 rows; the closure of that set is the flat.  Checking small
    subsets avoids building the whole intersection lattice per candidate.
    """
    axis = [0] * k
    axis[k - 1] = 1
    for size in range(1, k):
        for S in combinations(range(len(rows)), size):
            span = [rows[i] for i in S]
            if rank(span) == size and in_span(axis, span):
                return frozenset(i for i, r in enumerate(rows) if in_span(r, span))
    return None


def frame_defect(arr: Arrangement, U):
    """None if U is generic at every stage, else (stage, flat members or None, message)."""
    ell = arr.dim
    for k in range(ell, 1, -1):
        try:
            stage = restrict_stage(arr, U, k)
        except FrameError as e:
            return k, None, str(e)
        bad = axis_flat(stage.rows(), k)
        if bad is not None:
            return k, bad, f"z_{k} = 0 contains the flat {sorted(bad)} at stage {k}"
    if any(c == 0 for c in stage_one_coefficients(arr, U)):
        return 1, None, "a form vanishes on the stage-1 line"
    return None


def random_unimodular(ell, rng: random.Random, n_ops=None):
    """Signed column permutation followed by ``n_ops`` random column operations
    col_i += +-col_j (default 2 * ell).

    Unit multipliers keep frames close to the coordinate axes, which keeps the
    stage systems well conditioned; more operations reach more frames.
    """
    if ell == 1:
        return identity(1)
    perm = list(range(ell))
    rng.shuffle(perm)
    U = [[(rng.choice((-1, 1)) if perm[i] == j else 0) for j in range(ell)] for i in range(ell)]
    for _ in range(2 * ell if n_ops is None else n_ops):
        i, j = rng.sample(range(ell), 2)
        c = rng.choice((-1, 1))
        for r in range(ell):
            U[r][i] += c * U[r][j]
    return tuple(tuple(r) for r in U)


def frame_condition(U) -> float:
    """2-norm condition number of U; large values put critical points near infinity."""
    return float(np.linalg.cond(np.array(U, dtype=float)))


def choose_frame(arr: Arrangement, seed: int = 0, retries: int = FRAME_RETRIES,
                 try_identity: bool = True, candidates: int = FRAME_CANDIDATES):
    """Deterministic search for a generic frame.

    The identity is kept whenever it is generic.  Otherwise random frames are
    drawn until ``candidates`` generic ones are found (or ``retries`` run
    out) and the best conditioned one wins, earliest first on ties.
    """
    if arr.is_parametric:
        raise ValueError("evaluate the family parameter before choosing a frame")
    rng = random.Random(seed)
    last = None
    if try_identity:
        U = identity(arr.dim)
        last = frame_defect(arr, U)
        if last is None:
            return U
    found = []
    for attempt in range(retries):
        # simple frames first; every OPS_GROWTH attempts allow one more operation
        U = random_unimodular(arr.dim, rng, 2 * arr.dim + attempt // OPS_GROWTH)
        last = frame_defect(arr, U)
        if last is None:
            found.append(U)
            if len(found) >= candidates:
                break
    if found:
        return min(found, key=frame_condition)
    stage, flat, msg = last
    raise FrameSearchError(f"no generic frame after {retries} attempts; last failure: {msg}",
                           stage=stage, flat=flat)
