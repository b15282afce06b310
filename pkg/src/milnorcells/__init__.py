"""Minimal cell counts of hyperplane arrangement complements and Milnor fibers.

The combinatorial side (lattice, Poincare polynomials, predicted counts) is
exact.  The numerical side counts critical points of |z_k| on Q^{-1}(1) for
each linear section of a generic frame, using homotopy continuation.
"""

from .arrangement import (
    Arrangement,
    ArrangementError,
    ArrangementSyntaxError,
    DegenerateFormError,
    LinearForm,
    ProportionalFormsError,
    load_arrangement,
    parse_arrangement,
)
from .lattice import (
    CellCounts,
    Flat,
    IntersectionLattice,
    PoincareData,
    build_lattice,
    is_generic,
    poincare,
    predict_cells,
)
from .frame import FrameError, FrameSearchError, choose_frame, restrict_stage
from .poly import (
    CriticalSystem,
    LinearProduct,
    MultiPoly,
    build_critical_system,
    critical_system,
    expand_product,
    homogenize,
)
from .solver import SolutionSet, TrackerOptions, classify, newton_refine, solve
from .analysis import (
    EquivarianceReport,
    FamilyReport,
    MinimalityReport,
    StageReport,
    analyze,
    equivariance_check,
    euler_check,
    family_scan,
    morse_index,
    solve_stage,
)

__version__ = "0.1.0"
