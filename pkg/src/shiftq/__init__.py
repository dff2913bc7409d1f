"""Exact desk-scale checks for the argument shift method and its L-infinity deformation."""
from .errors import DomainError, HypothesisError, ResourceError, ShiftqError, StructuralError
from .exact import HbarPoly, Polynomial, degree_cap_set
from .hochschild import (
    PolyDiffOp,
    StarProduct,
    gerstenhaber_bracket,
    hkr,
    hochschild_delta,
    mc_defect_star,
    moyal,
    star_commutator,
    star_mul,
)
from .linfty import (
    DefectReport,
    FiniteSpace,
    GradedMap,
    LInftyAlgebra,
    LInftyDerivation,
    LInftyMorphism,
    MCElement,
    Vec,
    derivation_defect,
    dpoly_dgla,
    exp_derivation,
    homotopy_defect,
    jacobi_defect,
    koszul_sign,
    mc_defect,
    morphism_defect,
    nijenhuis_defects,
    push_mc,
    tpoly_dgla,
    twist_morphism,
    twist_structure,
    unshuffles,
    x_of_pi,
    x_pi,
)
from .polyvector import (
    PoissonStructure,
    Polyvector,
    d_pi,
    lie_derivative,
    nijenhuis_defect,
    poisson_bracket,
    schouten,
    wedge,
)
from .shift import (
    BinaryOpModel,
    ShiftFamily,
    binary_shift_check,
    classical_shift,
    lift_classical,
    quantum_shift,
    scan_strong_nijenhuis,
)

__all__ = [
    "DomainError",
    "HypothesisError",
    "ResourceError",
    "ShiftqError",
    "StructuralError",
    "HbarPoly",
    "Polynomial",
    "degree_cap_set",
    "PolyDiffOp",
    "StarProduct",
    "gerstenhaber_bracket",
    "hkr",
    "hochschild_delta",
    "mc_defect_star",
    "moyal",
    "star_commutator",
    "star_mul",
    "DefectReport",
    "FiniteSpace",
    "GradedMap",
    "LInftyAlgebra",
    "LInftyDerivation",
    "LInftyMorphism",
    "MCElement",
    "Vec",
    "derivation_defect",
    "dpoly_dgla",
    "exp_derivation",
    "homotopy_defect",
    "jacobi_defect",
    "koszul_sign",
    "mc_defect",
    "morphism_defect",
    "nijenhuis_defects",
    "push_mc",
    "tpoly_dgla",
    "twist_morphism",
    "twist_structure",
    "unshuffles",
    "x_of_pi",
    "x_pi",
    "PoissonStructure",
    "Polyvector",
    "d_pi",
    "lie_derivative",
    "nijenhuis_defect",
    "poisson_bracket",
    "schouten",
    "wedge",
    "BinaryOpModel",
    "ShiftFamily",
    "binary_shift_check",
    "classical_shift",
    "lift_classical",
    "quantum_shift",
    "scan_strong_nijenhuis",
]

__version__ = "0.1.0"
