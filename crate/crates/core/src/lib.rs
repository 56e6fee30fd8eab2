//! Exact symbolic engine for 5-dimensional real hypersurfaces in C^3 at
//! 2-nondegenerate points where the Levi form has non-uniform rank zero.
//!
//! The engine classifies admissible hypersurface jets into six normalization
//! branches, computes complete normal forms to a chosen truncation order by
//! an equivariant moving-frame reduction, reproduces the associated
//! recurrence relations symbolically, and decides origin-preserving
//! biholomorphic equivalence.

pub mod error;
pub mod jets;
pub mod linsolve;
pub mod normal_form;
pub mod poly;
pub mod prolongation;
pub mod recurrence;
pub mod scalar;
pub mod transform;

pub use error::AlgebraError;
pub use jets::{
    parse_defining_function, AdmissibilityReport, CubicPencil, JetError, JetSeries, LeviData,
    NondegeneracyReport, PencilClass,
};
pub use normal_form::{classify, BranchTag, NormalizeError};
pub use poly::{Monomial, Poly, Var};
pub use recurrence::{
    invariantize, recurrence, relative_invariant_defect, restrict_to_fiber, standard_ledger,
    FrameError, Horizontal, Ledger, LedgerEntry, LiftedPoly, MCExpr, MCFamily, MCSymbol, RealPart,
    SolvedState,
};
pub use transform::{
    apply, apply_poly, random_map, restore_normal_coordinates, HoloMapJet, TransformError,
    TransformedSeries,
};
pub use scalar::{
    Backend, BigComplex, ExactScalar, FloatScalar, GaussianRational, Scalar,
    DEFAULT_PRECISION_BITS, MIN_PRECISION_BITS,
};
