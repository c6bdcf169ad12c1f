//! Energy functionals of finitely supported signed measures.
//!
//! For a measure with weights `w` on a space with distance matrix `D`:
//! `I(mu, nu) = sum_ij D_ij mu_i nu_j`, `I(mu) = I(mu, mu)` and the potential
//! `d_mu(x_i) = sum_j D_ij mu_j`.

use serde::{Deserialize, Serialize};

use crate::error::{QhmError, Result};
use crate::space::FiniteMetricSpace;
use crate::tolerance::DEFAULT_MASS_TOL;

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::default();
    values.into_iter().for_each(|v| acc.add(v));
    acc.value()
}

/// Weights over the points of a named space. Total mass is computed on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedMeasure {
    pub space: String,
    pub weights: Vec<f64>,
}

impl SignedMeasure {
    /// Attaches `weights` to `x`, checking length and finiteness.
    pub fn on(x: &FiniteMetricSpace, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != x.len() {
            return Err(QhmError::SpaceMismatch { space: x.name().to_string(), weights: weights.len(), n: x.len() });
        }
        if let Some(index) = weights.iter().position(|w| !w.is_finite()) {
            return Err(QhmError::NonFiniteWeight { index });
        }
        Ok(SignedMeasure { space: x.name().to_string(), weights })
    }

    pub fn zero(x: &FiniteMetricSpace) -> Self {
        SignedMeasure { space: x.name().to_string(), weights: vec![0.0; x.len()] }
    }

    /// Unit point mass at point `i`.
    pub fn dirac(x: &FiniteMetricSpace, i: usize) -> Self {
        let mut m = Self::zero(x);
        m.weights[i] = 1.0;
        m
    }

    /// Mass `1/n` at every point.
    pub fn uniform(x: &FiniteMetricSpace) -> Self {
        let n = x.len();
        SignedMeasure { space: x.name().to_string(), weights: vec![1.0 / n as f64; n] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mass(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }

    pub fn scaled(&self, a: f64) -> Self {
        SignedMeasure { space: self.space.clone(), weights: self.weights.iter().map(|w| a * w).collect() }
    }

    /// `a * self + b * other`; both must have the same length.
    pub fn combine(&self, a: f64, other: &SignedMeasure, b: f64) -> Self {
        assert_eq!(self.len(), other.len(), "measures on different spaces");
        SignedMeasure {
            space: self.space.clone(),
            weights: self.weights.iter().zip(&other.weights).map(|(u, v)| a * u + b * v).collect(),
        }
    }

    /// Euclidean norm of the weight vector.
    pub fn euclidean_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Pushes the measure forward along `embedding` into a space of `n` points.
    pub fn extend_by_zero(&self, embedding: &[usize], n: usize, space: &str) -> Result<Self> {
        if embedding.len() != self.len() {
            return Err(QhmError::InvalidInput(format!(
                "embedding has {} indices for a measure of {} weights",
                embedding.len(),
                self.len()
            )));
        }
        let mut weights = vec![0.0; n];
        for (&i, &w) in embedding.iter().zip(&self.weights) {
            if i >= n {
                return Err(QhmError::IndexOutOfRange { index: i, n });
            }
            weights[i] = w;
        }
        Ok(SignedMeasure { space: space.to_string(), weights })
    }
}

fn check_on(x: &FiniteMetricSpace, mu: &SignedMeasure) -> Result<()> {
    if mu.len() != x.len() || (!mu.space.is_empty() && mu.space != x.name()) {
        return Err(QhmError::SpaceMismatch { space: x.name().to_string(), weights: mu.len(), n: x.len() });
    }
    Ok(())
}

fn bilinear_unchecked(x: &FiniteMetricSpace, mu: &[f64], nu: &[f64]) -> f64 {
    let n = x.len();
    let d = x.dist();
    let mut acc = CompensatedSum::default();
    for i in 0..n {
        if mu[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            acc.add(d[(i, j)] * mu[i] * nu[j]);
        }
    }
    acc.value()
}

/// `I(mu, nu)`.
pub fn energy_bilinear(x: &FiniteMetricSpace, mu: &SignedMeasure, nu: &SignedMeasure) -> Result<f64> {
    check_on(x, mu)?;
    check_on(x, nu)?;
    Ok(bilinear_unchecked(x, &mu.weights, &nu.weights))
}

/// `I(mu) = I(mu, mu)`.
pub fn energy(x: &FiniteMetricSpace, mu: &SignedMeasure) -> Result<f64> {
    energy_bilinear(x, mu, mu)
}

/// The potential `d_mu` evaluated at every point.
pub fn potential(x: &FiniteMetricSpace, mu: &SignedMeasure) -> Result<Vec<f64>> {
    check_on(x, mu)?;
    Ok(potential_of(x, &mu.weights))
}

pub(crate) fn potential_of(x: &FiniteMetricSpace, w: &[f64]) -> Vec<f64> {
    let d = x.dist();
    (0..x.len()).map(|i| compensated_sum((0..x.len()).map(|j| d[(i, j)] * w[j]))).collect()
}

/// `sup - inf` of a potential vector.
pub fn spread(values: &[f64]) -> f64 {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if values.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Largest `|potential_i - c|`.
pub fn deviation_from(values: &[f64], c: f64) -> f64 {
    values.iter().map(|v| (v - c).abs()).fold(0.0, f64::max)
}

/// Value of the seminorm on a mass-zero measure with the raw radicand kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Seminorm {
    pub value: f64,
    /// `-I(mu)` before clamping at zero.
    pub radicand: f64,
    /// Set when the radicand is below `-tol`: the space is not quasihypermetric.
    pub negative_square: bool,
}

fn require_mass_zero(mu: &SignedMeasure, mass_tol: f64) -> Result<()> {
    let mass = mu.mass();
    if mass.abs() > mass_tol {
        return Err(QhmError::NonzeroMass { mass, tol: mass_tol });
    }
    Ok(())
}

/// `sqrt(-I(mu))` on mass-zero measures, clamping roundoff below zero.
pub fn seminorm_zero_detailed(x: &FiniteMetricSpace, mu: &SignedMeasure, mass_tol: f64, tol: f64) -> Result<Seminorm> {
    require_mass_zero(mu, mass_tol)?;
    let radicand = -energy(x, mu)?;
    Ok(Seminorm { value: radicand.max(0.0).sqrt(), radicand, negative_square: radicand < -tol })
}

pub fn seminorm_zero(x: &FiniteMetricSpace, mu: &SignedMeasure) -> Result<f64> {
    Ok(seminorm_zero_detailed(x, mu, DEFAULT_MASS_TOL, 1e-9)?.value)
}

/// `(mu | nu) = -I(mu, nu)` on mass-zero measures.
pub fn inner_zero(x: &FiniteMetricSpace, mu: &SignedMeasure, nu: &SignedMeasure) -> Result<f64> {
    inner_zero_with(x, mu, nu, DEFAULT_MASS_TOL)
}

pub fn inner_zero_with(x: &FiniteMetricSpace, mu: &SignedMeasure, nu: &SignedMeasure, mass_tol: f64) -> Result<f64> {
    require_mass_zero(mu, mass_tol)?;
    require_mass_zero(nu, mass_tol)?;
    Ok(-energy_bilinear(x, mu, nu)?)
}

/// `(mu | nu) = (M + 1) mu(X) nu(X) - I(mu, nu)` for a finite constant `m_value`.
pub fn inner_extended(x: &FiniteMetricSpace, m_value: f64, mu: &SignedMeasure, nu: &SignedMeasure) -> Result<f64> {
    let cross = energy_bilinear(x, mu, nu)?;
    Ok((m_value + 1.0) * mu.mass() * nu.mass() - cross)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{glue, interval_grid, two_point, uniform_space, GlueSpec};
    use approx::assert_abs_diff_eq;

    fn non_qhm() -> FiniteMetricSpace {
        glue(&GlueSpec::new(two_point(2.0).unwrap(), uniform_space(3, 2.0).unwrap(), 1.0)).unwrap()
    }

    fn flat_kernel() -> FiniteMetricSpace {
        glue(&GlueSpec::new(two_point(1.0).unwrap(), uniform_space(3, 0.8).unwrap(), 31.0 / 60.0)).unwrap()
    }

    #[test]
    fn bilinear_examples() {
        let x = two_point(1.0).unwrap();
        let e = energy_bilinear(&x, &SignedMeasure::dirac(&x, 0), &SignedMeasure::dirac(&x, 1)).unwrap();
        assert_eq!(e, 1.0);

        let z = non_qhm();
        let mu1 = SignedMeasure::on(&z, vec![0.5, 0.5, 0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(energy_bilinear(&z, &mu1, &SignedMeasure::dirac(&z, 2)).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(energy_bilinear(&z, &SignedMeasure::zero(&z), &mu1).unwrap(), 0.0);
    }

    #[test]
    fn energy_examples() {
        let x = two_point(1.0).unwrap();
        assert_abs_diff_eq!(energy(&x, &SignedMeasure::uniform(&x)).unwrap(), 0.5, epsilon = 1e-15);
        let y = uniform_space(3, 2.0).unwrap();
        assert_abs_diff_eq!(energy(&y, &SignedMeasure::uniform(&y)).unwrap(), 4.0 / 3.0, epsilon = 1e-15);
        assert_eq!(energy(&y, &SignedMeasure::dirac(&y, 1)).unwrap(), 0.0);
    }

    #[test]
    fn potential_examples() {
        let z = non_qhm();
        let mu1 = SignedMeasure::on(&z, vec![0.5, 0.5, 0.0, 0.0, 0.0]).unwrap();
        for p in potential(&z, &mu1).unwrap() {
            assert_abs_diff_eq!(p, 1.0, epsilon = 1e-15);
        }
        let g = interval_grid(0.0, 1.0, 3).unwrap();
        assert_eq!(potential(&g, &SignedMeasure::dirac(&g, 1)).unwrap(), vec![0.5, 0.0, 0.5]);
        let mu = SignedMeasure::on(&g, vec![0.5, 0.0, 0.5]).unwrap();
        assert_eq!(potential(&g, &mu).unwrap(), vec![0.5, 0.5, 0.5]);
    }

    #[test]
    fn space_mismatch() {
        let x = two_point(1.0).unwrap();
        let y = uniform_space(3, 1.0).unwrap();
        let mu = SignedMeasure::uniform(&y);
        assert!(matches!(energy(&x, &mu), Err(QhmError::SpaceMismatch { .. })));
        assert!(matches!(SignedMeasure::on(&x, vec![1.0]), Err(QhmError::SpaceMismatch { .. })));
        assert!(matches!(SignedMeasure::on(&x, vec![1.0, f64::NAN]), Err(QhmError::NonFiniteWeight { index: 1 })));
    }

    #[test]
    fn seminorm_examples() {
        let x = two_point(1.0).unwrap();
        let mu = SignedMeasure::on(&x, vec![1.0, -1.0]).unwrap();
        // I(mu) = 2 * (1)(-1)(1) = -2
        assert_abs_diff_eq!(seminorm_zero(&x, &mu).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(seminorm_zero(&x, &SignedMeasure::zero(&x)).unwrap(), 0.0);

        let z = flat_kernel();
        let t = 1.0 / 3.0;
        let f = SignedMeasure::on(&z, vec![0.5, 0.5, -t, -t, -t]).unwrap();
        let s = seminorm_zero_detailed(&z, &f, 1e-9, 1e-9).unwrap();
        assert!(s.value < 1e-7, "{s:?}");
        assert!(!s.negative_square);

        let err = seminorm_zero(&x, &SignedMeasure::dirac(&x, 0)).unwrap_err();
        assert!(matches!(err, QhmError::NonzeroMass { .. }));
    }

    #[test]
    fn negative_square_flagged_on_non_qhm_space() {
        let z = non_qhm();
        let t = 1.0 / 3.0;
        // I((1/2,1/2,-1/3,-1/3,-1/3)) = 1 + 4/3 - 2 = 1/3 > 0
        let f = SignedMeasure::on(&z, vec![0.5, 0.5, -t, -t, -t]).unwrap();
        let s = seminorm_zero_detailed(&z, &f, 1e-9, 1e-9).unwrap();
        assert!(s.negative_square);
        assert_eq!(s.value, 0.0);
        assert_abs_diff_eq!(s.radicand, -1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn inner_products() {
        let x = two_point(1.0).unwrap();
        let mu = SignedMeasure::on(&x, vec![1.0, -1.0]).unwrap();
        assert_abs_diff_eq!(inner_zero(&x, &mu, &mu).unwrap(), 2.0, epsilon = 1e-15);
        assert_eq!(inner_zero(&x, &mu, &SignedMeasure::zero(&x)).unwrap(), 0.0);

        let z = flat_kernel();
        let mu = SignedMeasure::on(&z, vec![1.0, -1.0, 0.0, 0.0, 0.0]).unwrap();
        let nu = SignedMeasure::on(&z, vec![0.0, 0.0, 1.0, -1.0, 0.0]).unwrap();
        let lhs = inner_zero(&z, &mu, &nu).unwrap();
        let plus = seminorm_zero(&z, &mu.combine(1.0, &nu, 1.0)).unwrap();
        let minus = seminorm_zero(&z, &mu.combine(1.0, &nu, -1.0)).unwrap();
        assert_abs_diff_eq!(lhs, (plus * plus - minus * minus) / 4.0, epsilon = 1e-14);
    }

    #[test]
    fn extended_inner_product() {
        let x = two_point(1.0).unwrap();
        let mu = SignedMeasure::uniform(&x);
        assert_abs_diff_eq!(inner_extended(&x, 0.5, &mu, &mu).unwrap(), 1.0, epsilon = 1e-15);

        let a = SignedMeasure::on(&x, vec![1.0, -1.0]).unwrap();
        let b = SignedMeasure::on(&x, vec![-0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(inner_extended(&x, 0.5, &a, &b).unwrap(), inner_zero(&x, &a, &b).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(v), 2.0);
    }
}
