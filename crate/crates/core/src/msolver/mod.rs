//! Invariant measures and the constant `M(X)`.
//!
//! On a quasihypermetric space a mass-one measure is maximal exactly when its
//! potential is constant, and that constant is `M(X)`. Finding one amounts to
//! the linear system
//!
//! ```text
//! [ D   -1 ] [ w ]   [ 0 ]
//! [ 1^T  0 ] [ c ] = [ 1 ]
//! ```
//!
//! which is nonsingular for strictly quasihypermetric spaces. Degenerate
//! directions make it singular; it stays consistent iff their (constant)
//! potentials vanish, otherwise `M(X)` is infinite.

mod glued;
mod oracle;
mod sequence;

pub use glued::{glued_invariant, glued_m_predict, GluedPrediction};
pub use oracle::{
    ascent_oracle, spectral_radius, verify_maximal, AscentOptions, AscentTrace, MaximalityReport, TracePoint,
};
pub use sequence::{sequence_diagnostics, ChainLevel, LevelRow, SequenceReport, StepRow};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::classify::{classify, kernel_flat_values, Verdict};
use crate::energy::{deviation_from, potential_of, spread, SignedMeasure};
use crate::error::{QhmError, Result};
use crate::space::{diameter, FiniteMetricSpace};
use crate::tolerance::Tolerances;

/// A mass-one measure with (numerically) constant potential.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantSolve {
    pub measure: SignedMeasure,
    pub value: f64,
    /// `max_i |d_mu(x_i) - value|`.
    pub residual: f64,
    /// False when the system is singular and the minimum-norm solution was taken.
    pub unique: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "outcome")]
pub enum InvariantOutcome {
    Solved(InvariantSolve),
    /// The system is inconsistent: no mass-one measure has constant potential.
    NoSolution {
        residual: f64,
    },
}

impl InvariantOutcome {
    pub fn solved(self) -> Option<InvariantSolve> {
        match self {
            InvariantOutcome::Solved(s) => Some(s),
            InvariantOutcome::NoSolution { .. } => None,
        }
    }
}

/// Solves for a mass-one invariant measure; eigenvalues below `tol` times the
/// largest are treated as zero.
pub fn invariant_measure(x: &FiniteMetricSpace, tol: f64) -> Result<InvariantOutcome> {
    let n = x.len();
    if n == 1 {
        return Ok(InvariantOutcome::Solved(InvariantSolve {
            measure: SignedMeasure::dirac(x, 0),
            value: 0.0,
            residual: 0.0,
            unique: true,
        }));
    }
    // Symmetric form of the system with unknowns (w, -c/s); the constraint
    // row and column are scaled to the size of the distances so the
    // spectrum is not skewed by the unit entries.
    let s = diameter(x);
    let mut k = DMatrix::zeros(n + 1, n + 1);
    k.view_mut((0, 0), (n, n)).copy_from(x.dist());
    for i in 0..n {
        k[(i, n)] = s;
        k[(n, i)] = s;
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = s;

    // Minimum-norm pseudo-inverse from the eigendecomposition. The general
    // SVD in nalgebra can return an inaccurate factorization for this matrix.
    let eig = SymmetricEigen::try_new(k.clone(), f64::EPSILON, 0)
        .ok_or_else(|| QhmError::SolverBreakdown("eigendecomposition did not converge".into()))?;
    let s_max = eig.eigenvalues.amax();
    if !s_max.is_finite() {
        return Err(QhmError::SolverBreakdown("non-finite eigenvalues".into()));
    }
    let cutoff = tol * s_max;
    let mut sol = DVector::zeros(n + 1);
    let mut rank = 0;
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() > cutoff {
            rank += 1;
            let v = eig.eigenvectors.column(j);
            sol += v * (v.dot(&rhs) / lambda);
        }
    }
    sol[n] = -sol[n];
    let mut signed = k;
    for i in 0..n {
        signed[(i, n)] = -s;
    }

    let system_residual = (&signed * &sol - &rhs).amax();
    if system_residual > tol * s_max.max(s) {
        return Ok(InvariantOutcome::NoSolution { residual: system_residual });
    }
    let weights: Vec<f64> = sol.rows(0, n).iter().copied().collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(QhmError::SolverBreakdown("non-finite solution".into()));
    }
    let value = sol[n] * s;
    let p = potential_of(x, &weights);
    Ok(InvariantOutcome::Solved(InvariantSolve {
        measure: SignedMeasure { space: x.name().to_string(), weights },
        value,
        residual: deviation_from(&p, value),
        unique: rank == n + 1,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MStatus {
    Finite,
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InfiniteReason {
    NotQuasihypermetric,
    /// A degenerate mass-zero direction has a nonzero constant potential.
    NonzeroFlatKernel,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub verdict: Verdict,
    pub margin: f64,
    pub eigen_tol: f64,
    pub kernel_dim: usize,
    /// Constant potentials of the kernel basis vectors.
    pub flat_values: Vec<f64>,
    /// `sup - inf` of the maximal measure's potential.
    pub flatness: Option<f64>,
    /// `max |potential - value|` of the maximal measure.
    pub residual: Option<f64>,
    pub unique: Option<bool>,
}

/// Outcome of the finiteness decision for `M(X)`.
#[derive(Debug, Clone, Serialize)]
pub struct MDecision {
    pub status: MStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub maximal_measure: Option<SignedMeasure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<InfiniteReason>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<SignedMeasure>,
    pub diagnostics: Diagnostics,
}

impl MDecision {
    pub fn is_finite(&self) -> bool {
        self.status == MStatus::Finite
    }
}

/// Decides whether `M(X)` is finite and, if so, returns it with a maximal measure.
///
/// Non-quasihypermetric spaces have `M = inf`. On non-strict spaces every
/// degenerate direction has constant potential; a nonzero constant also
/// forces `M = inf`. Otherwise the invariant-measure system must be
/// consistent, and its solution is maximal.
pub fn m_constant(x: &FiniteMetricSpace, tol: &Tolerances) -> Result<MDecision> {
    let cls = classify(x, tol.classify)?;
    let flat_tol = tol.flatness_for(diameter(x));
    let mut diagnostics = Diagnostics {
        verdict: cls.verdict,
        margin: cls.margin,
        eigen_tol: cls.tol_used,
        kernel_dim: cls.kernel_basis.len(),
        flat_values: vec![],
        flatness: None,
        residual: None,
        unique: None,
    };

    if cls.verdict == Verdict::NotQuasihypermetric {
        return Ok(MDecision {
            status: MStatus::Infinite,
            value: None,
            maximal_measure: None,
            reason: Some(InfiniteReason::NotQuasihypermetric),
            witness: cls.witness,
            diagnostics,
        });
    }

    if cls.verdict == Verdict::NonStrict {
        let flats = kernel_flat_values(x, &cls, flat_tol)?;
        diagnostics.flat_values = flats.iter().map(|f| f.value).collect();
        // The constant potential is linear on the kernel; the combination
        // sum_i m_i f_i / |m| has the largest constant among unit vectors.
        let norm = diagnostics.flat_values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > flat_tol {
            let mut w = vec![0.0; x.len()];
            for f in &flats {
                for (wi, bi) in w.iter_mut().zip(&f.basis.weights) {
                    *wi += f.value / norm * bi;
                }
            }
            return Ok(MDecision {
                status: MStatus::Infinite,
                value: None,
                maximal_measure: None,
                reason: Some(InfiniteReason::NonzeroFlatKernel),
                witness: Some(SignedMeasure { space: x.name().to_string(), weights: w }),
                diagnostics,
            });
        }
    }

    let solve = match invariant_measure(x, tol.solve)? {
        InvariantOutcome::Solved(s) => s,
        InvariantOutcome::NoSolution { residual } => {
            return Err(QhmError::Inconsistency(format!(
                "{} space has no invariant measure (system residual {residual:e}, margin {:e})",
                cls.verdict, cls.margin
            )))
        }
    };
    let mass = solve.measure.mass();
    if (mass - 1.0).abs() > tol.mass {
        return Err(QhmError::Inconsistency(format!("invariant measure has mass {mass}")));
    }
    if solve.residual > flat_tol {
        return Err(QhmError::Inconsistency(format!(
            "invariant measure potential deviates by {:e} > {flat_tol:e}",
            solve.residual
        )));
    }
    let p = potential_of(x, &solve.measure.weights);
    diagnostics.flatness = Some(spread(&p));
    diagnostics.residual = Some(solve.residual);
    diagnostics.unique = Some(solve.unique);
    Ok(MDecision {
        status: MStatus::Finite,
        value: Some(solve.value),
        maximal_measure: Some(solve.measure),
        reason: None,
        witness: None,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{energy, potential};
    use crate::space::{glue, interval_grid, regular_polygon_arc, two_point, uniform_space, GlueSpec};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn flat_kernel() -> FiniteMetricSpace {
        glue(&GlueSpec::new(two_point(1.0).unwrap(), uniform_space(3, 0.8).unwrap(), 31.0 / 60.0)).unwrap()
    }

    fn non_qhm() -> FiniteMetricSpace {
        glue(&GlueSpec::new(two_point(2.0).unwrap(), uniform_space(3, 2.0).unwrap(), 1.0)).unwrap()
    }

    #[test]
    fn invariant_uniform_three_point() {
        let s = invariant_measure(&uniform_space(3, 2.0).unwrap(), 1e-9).unwrap().solved().unwrap();
        for w in &s.measure.weights {
            assert_abs_diff_eq!(*w, 1.0 / 3.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(s.value, 4.0 / 3.0, epsilon = 1e-14);
        assert!(s.unique);
    }

    #[test]
    fn invariant_two_point() {
        for d in [0.3, 1.0, 7.5] {
            let s = invariant_measure(&two_point(d).unwrap(), 1e-9).unwrap().solved().unwrap();
            assert_abs_diff_eq!(s.measure.weights[0], 0.5, epsilon = 1e-14);
            assert_abs_diff_eq!(s.measure.weights[1], 0.5, epsilon = 1e-14);
            assert_abs_diff_eq!(s.value, d / 2.0, epsilon = 1e-13 * d);
        }
    }

    #[test]
    fn invariant_four_point_circle_is_not_unique() {
        let s = invariant_measure(&regular_polygon_arc(4).unwrap(), 1e-9).unwrap().solved().unwrap();
        assert_abs_diff_eq!(s.value, PI / 2.0, epsilon = 1e-12);
        assert!(!s.unique);
        // minimum-norm representative is uniform
        for w in &s.measure.weights {
            assert_abs_diff_eq!(*w, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn invariant_inconsistent_on_flat_kernel() {
        assert!(matches!(invariant_measure(&flat_kernel(), 1e-9).unwrap(), InvariantOutcome::NoSolution { .. }));
    }

    #[test]
    fn well_conditioned_random_metric_solves() {
        // Once tripped an inaccurate SVD.
        let x = crate::space::random_metric(5, 19).unwrap();
        let d = m_constant(&x, &Tolerances::default()).unwrap();
        assert!(d.is_finite());
        assert!(d.diagnostics.residual.unwrap() < 1e-12);
    }

    #[test]
    fn single_point() {
        let x = uniform_space(1, 1.0).unwrap();
        let d = m_constant(&x, &Tolerances::default()).unwrap();
        assert_eq!(d.value, Some(0.0));
        assert_eq!(d.maximal_measure.unwrap().weights, vec![1.0]);
    }

    #[test]
    fn decision_on_glued_fixtures() {
        let d = m_constant(&flat_kernel(), &Tolerances::default()).unwrap();
        assert_eq!(d.status, MStatus::Infinite);
        assert_eq!(d.reason, Some(InfiniteReason::NonzeroFlatKernel));
        let z = flat_kernel();
        let w = d.witness.unwrap();
        assert!(w.mass().abs() < 1e-9);
        let p = potential(&z, &w).unwrap();
        assert!(p[0].abs() > 1e-3);
        assert!(deviation_from(&p, p[0]) < 1e-10);

        let d = m_constant(&non_qhm(), &Tolerances::default()).unwrap();
        assert_eq!(d.reason, Some(InfiniteReason::NotQuasihypermetric));
        assert!(energy(&non_qhm(), &d.witness.unwrap()).unwrap() > 0.0);
    }

    #[test]
    fn interval_constant() {
        for n in [2, 3, 5, 9] {
            let d = m_constant(&interval_grid(0.0, 1.0, n).unwrap(), &Tolerances::default()).unwrap();
            assert_abs_diff_eq!(d.value.unwrap(), 0.5, epsilon = 1e-9);
            let w = d.maximal_measure.unwrap().weights;
            assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-9);
            assert_abs_diff_eq!(w[n - 1], 0.5, epsilon = 1e-9);
            assert!(w[1..n - 1].iter().all(|v| v.abs() <= 1e-9));
        }
    }

    #[test]
    fn circle_constant() {
        for m in [1, 2, 3, 4, 8] {
            let d = m_constant(&regular_polygon_arc(2 * m).unwrap(), &Tolerances::default()).unwrap();
            assert_abs_diff_eq!(d.value.unwrap(), PI / 2.0, epsilon = 1e-9);
        }
    }
}
