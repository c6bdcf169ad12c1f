//! Numerical tolerances shared by the solvers.
//!
//! All thresholds are explicit so a caller (or the `QHM_DEFAULT_TOL`
//! environment variable on the command line) can tighten or relax them.

use serde::{Deserialize, Serialize};

/// Relative slack on the triangle inequality, multiplied by the diameter.
pub const DEFAULT_TRIANGLE_REL: f64 = 1e-9;
/// Absolute slack on "mass zero" / "mass one" preconditions.
pub const DEFAULT_MASS_TOL: f64 = 1e-9;
/// Relative eigenvalue threshold of the spectral classification.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-9;
/// Absolute potential-flatness threshold, multiplied by `1 + diameter`.
pub const DEFAULT_FLATNESS_TOL: f64 = 1e-8;
/// Relative rank and residual threshold of the invariant-measure solve.
pub const DEFAULT_SOLVE_TOL: f64 = 1e-9;
/// Divergence threshold of the ascent oracle, multiplied by the diameter.
pub const DEFAULT_BLOWUP_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub mass: f64,
    pub classify: f64,
    pub flatness: f64,
    pub solve: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mass: DEFAULT_MASS_TOL,
            classify: DEFAULT_CLASSIFY_TOL,
            flatness: DEFAULT_FLATNESS_TOL,
            solve: DEFAULT_SOLVE_TOL,
        }
    }
}

impl Tolerances {
    /// Same defaults with a different classification threshold.
    pub fn with_classify(tol: f64) -> Self {
        Tolerances { classify: tol, ..Default::default() }
    }

    /// Flatness threshold for a space of the given diameter.
    pub fn flatness_for(&self, diameter: f64) -> f64 {
        self.flatness * (1.0 + diameter)
    }
}
