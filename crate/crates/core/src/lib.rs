//! Self-correction of nearly line-preserving maps between finite projective
//! spaces.
//!
//! Given an injection `f: P^n(F_q) → P^n(F_q)` that sends most lines to lines,
//! [`corrector::correct_map`] rebuilds, point by point, a map that sends every
//! line to a line by majority vote over pairs of pointed lines, and
//! [`corrector::reconstruct_semilinear`] recovers the field automorphism and
//! matrix behind a line-preserving map. [`bounds`] evaluates the error budget
//! under which the majority vote is guaranteed to succeed, in exact rational
//! arithmetic.

pub mod bounds;
pub mod corrector;
pub mod error;
pub mod field;
pub mod gadgets;
pub mod harness;
pub mod linalg;
pub mod projspace;

pub use bounds::{BoundReport, Rational};
pub use corrector::{CorrectionMode, CorrectionOutcome, CorrectionReport, SemilinearMap};
pub use error::{Error, Result};
pub use field::{Elem, FieldElement, FieldSpec, Frobenius, GaloisField};
pub use gadgets::{AddGadget, DesarguesConfig, MarkedLine, MultGadget};
pub use harness::{ExperimentSpec, TrialResult};
pub use projspace::{LineMeet, PointMap, PointedLine, ProjLine, ProjPoint, ProjSpace};
