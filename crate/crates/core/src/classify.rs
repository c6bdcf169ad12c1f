//! Spectral test of the (strict) quasihypermetric property.
//!
//! The quadratic form `alpha -> -alpha^T D alpha` restricted to the mass-zero
//! hyperplane is represented by the centered matrix `A = -P D P` with
//! `P = I - J/n`. A space is quasihypermetric iff `A` is positive
//! semidefinite on `1^perp`, and strictly so iff it is positive definite
//! there. Eigenvalues are computed in an orthonormal basis of `1^perp` so the
//! trivial all-ones direction never mixes with the kernel.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::energy::{potential, SignedMeasure};
use crate::error::{QhmError, Result};
use crate::space::FiniteMetricSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    NotQuasihypermetric,
    Strict,
    NonStrict,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::NotQuasihypermetric => "NotQuasihypermetric",
            Verdict::Strict => "Strict",
            Verdict::NonStrict => "NonStrict",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    /// Mass-zero, unit euclidean norm, positive energy. Present iff not quasihypermetric.
    pub witness: Option<SignedMeasure>,
    /// Euclidean-orthonormal mass-zero measures of zero energy. Non-empty iff non-strict.
    pub kernel_basis: Vec<SignedMeasure>,
    /// Spectrum of the centered form in ascending order, including the zero
    /// eigenvalue of the all-ones direction.
    pub eigenvalues: Vec<f64>,
    /// Smallest eigenvalue on `1^perp` divided by the spectral radius.
    pub margin: f64,
    /// Absolute eigenvalue threshold that was applied.
    pub tol_used: f64,
}

/// `-P D P` with `P = I - J/n`.
pub fn centered_form(x: &FiniteMetricSpace) -> DMatrix<f64> {
    let n = x.len();
    let d = x.dist();
    let row_means: Vec<f64> = (0..n).map(|i| d.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut a = DMatrix::from_fn(n, n, |i, j| -(d[(i, j)] - row_means[i] - row_means[j] + grand));
    // Symmetric by construction up to rounding in the means; make it exact.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// Orthonormal basis of the complement of the all-ones vector, as the
/// trailing `n - 1` columns of the Householder reflection sending `e_0` to
/// `1/sqrt(n)`.
pub(crate) fn ones_complement_basis(n: usize) -> DMatrix<f64> {
    let u = 1.0 / (n as f64).sqrt();
    let mut v = DVector::from_element(n, -u);
    v[0] += 1.0;
    let vv = v.dot(&v);
    DMatrix::from_fn(n, n - 1, |i, j| {
        let col = j + 1;
        let id = if i == col { 1.0 } else { 0.0 };
        id - 2.0 * v[i] * v[col] / vv
    })
}

/// Deterministic sign: the entry of largest magnitude (lowest index on ties) is positive.
fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    if v.get(best).copied().unwrap_or(0.0) < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn unit_measure(x: &FiniteMetricSpace, mut v: Vec<f64>) -> SignedMeasure {
    // Remove residual mass left by rounding, then renormalise.
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|w| *w -= mean);
    let norm = v.iter().map(|w| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|w| *w /= norm);
    }
    canonical_sign(&mut v);
    SignedMeasure { space: x.name().to_string(), weights: v }
}

/// Classifies `x` with eigenvalue threshold `tol * spectral_radius`.
pub fn classify(x: &FiniteMetricSpace, tol: f64) -> Result<Classification> {
    let n = x.len();
    if n == 1 {
        return Ok(Classification {
            verdict: Verdict::Strict,
            witness: None,
            kernel_basis: vec![],
            eigenvalues: vec![0.0],
            margin: 1.0,
            tol_used: 0.0,
        });
    }
    let q = ones_complement_basis(n);
    let dq = x.dist() * &q;
    let mut b = -(q.transpose() * dq);
    for i in 0..(n - 1) {
        for j in (i + 1)..(n - 1) {
            let v = 0.5 * (b[(i, j)] + b[(j, i)]);
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::try_new(b, f64::EPSILON, 0)
        .ok_or(QhmError::EigendecompositionFailure { condition: f64::INFINITY })?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(QhmError::EigendecompositionFailure { condition: f64::NAN });
    }

    let mut order: Vec<usize> = (0..n - 1).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let radius = eig.eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tau = tol * radius;

    let lifted = |k: usize| -> Vec<f64> { (&q * eig.eigenvectors.column(k)).iter().copied().collect() };

    let lowest = order[0];
    let margin = if radius > 0.0 { eig.eigenvalues[lowest] / radius + 0.0 } else { 0.0 };
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().chain(std::iter::once(0.0)).collect();
    eigenvalues.sort_by(f64::total_cmp);

    if eig.eigenvalues[lowest] < -tau {
        return Ok(Classification {
            verdict: Verdict::NotQuasihypermetric,
            witness: Some(unit_measure(x, lifted(lowest))),
            kernel_basis: vec![],
            eigenvalues,
            margin,
            tol_used: tau,
        });
    }

    let kernel_basis: Vec<SignedMeasure> = order
        .iter()
        .copied()
        .filter(|&k| eig.eigenvalues[k].abs() <= tau)
        .map(|k| unit_measure(x, lifted(k)))
        .collect();
    let verdict = if kernel_basis.is_empty() { Verdict::Strict } else { Verdict::NonStrict };
    Ok(Classification { verdict, witness: None, kernel_basis, eigenvalues, margin, tol_used: tau })
}

/// Potential of a degenerate direction: its mean value and the largest departure from it.
#[derive(Debug, Clone, Serialize)]
pub struct FlatValue {
    pub basis: SignedMeasure,
    pub value: f64,
    pub deviation: f64,
}

/// Evaluates the (necessarily constant) potential of every kernel vector.
pub fn kernel_flat_values(x: &FiniteMetricSpace, cls: &Classification, flatness_tol: f64) -> Result<Vec<FlatValue>> {
    if cls.verdict != Verdict::NonStrict {
        return Err(QhmError::NotApplicable { verdict: cls.verdict.to_string() });
    }
    cls.kernel_basis
        .iter()
        .enumerate()
        .map(|(index, f)| {
            let p = potential(x, f)?;
            let value = p.iter().sum::<f64>() / p.len() as f64;
            let deviation = p.iter().map(|v| (v - value).abs()).fold(0.0, f64::max);
            if deviation > flatness_tol {
                return Err(QhmError::FlatnessViolation { index, deviation, tol: flatness_tol });
            }
            Ok(FlatValue { basis: f.clone(), value, deviation })
        })
        .collect()
}
