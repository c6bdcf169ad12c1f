//! Energy constants of finite metric spaces.
//!
//! For a finite metric space `X` and a signed measure `mu` on its points the
//! energy is `I(mu) = sum_ij d(x_i, x_j) mu_i mu_j`, and `M(X)` is the supremum
//! of `I` over measures of total mass one. This crate classifies spaces by the
//! (strict) quasihypermetric property, decides whether `M(X)` is finite,
//! computes it together with a maximal measure, and predicts the constant of
//! spaces glued from two components.

pub mod classify;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod io;
pub mod msolver;
pub mod space;
pub mod tolerance;

pub use classify::{centered_form, classify, kernel_flat_values, Classification, FlatValue, Verdict};
pub use energy::{energy, energy_bilinear, inner_extended, inner_zero, potential, seminorm_zero, SignedMeasure};
pub use error::{QhmError, Result};
pub use msolver::{
    ascent_oracle, glued_invariant, glued_m_predict, invariant_measure, m_constant, sequence_diagnostics,
    verify_maximal, GluedPrediction, InvariantOutcome, InvariantSolve, MDecision, MStatus,
};
pub use space::{
    ball_discretization, diameter, euclidean_cloud, glue, interval_grid, random_metric, regular_polygon_arc, subspace,
    validate_metric, FiniteMetricSpace, GlueSpec,
};
pub use tolerance::Tolerances;
