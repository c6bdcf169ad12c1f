//! Independent checks on the linear-algebra route: projected gradient
//! ascent on the mass-one slice, and randomized maximality verification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::{deviation_from, energy, inner_extended, potential, potential_of, SignedMeasure};
use crate::error::{QhmError, Result};
use crate::space::{diameter, FiniteMetricSpace};
use crate::tolerance::DEFAULT_BLOWUP_FACTOR;

/// Largest absolute eigenvalue of the distance matrix.
pub fn spectral_radius(x: &FiniteMetricSpace) -> f64 {
    x.dist().clone().symmetric_eigenvalues().iter().map(|v| v.abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct AscentOptions {
    pub iterations: usize,
    /// Defaults to `1 / (2 * spectral_radius(D))`.
    pub step: Option<f64>,
    pub seed: u64,
    /// Defaults to `1e6 * diameter`.
    pub blowup: Option<f64>,
}

impl AscentOptions {
    pub fn new(iterations: usize, seed: u64) -> Self {
        AscentOptions { iterations, step: None, seed, blowup: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub best_value: f64,
    pub measure: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AscentTrace {
    /// Best-so-far snapshots at iteration 0, powers of two, and the last iteration.
    pub points: Vec<TracePoint>,
    pub best_value: f64,
    pub best_measure: SignedMeasure,
    pub iterations_run: usize,
    pub step: f64,
    /// Set when the best value exceeded the blowup threshold.
    pub diverged: bool,
}

/// Projected gradient ascent of `I` over mass-one measures.
///
/// Starts from the uniform measure plus a seeded mass-zero perturbation and
/// iterates `mu <- mu + step * P (2 d_mu)` where `P` removes the mean.
pub fn ascent_oracle(x: &FiniteMetricSpace, opts: &AscentOptions) -> AscentTrace {
    let n = x.len();
    let step = opts.step.unwrap_or_else(|| {
        let r = spectral_radius(x);
        if r > 0.0 {
            1.0 / (2.0 * r)
        } else {
            0.0
        }
    });
    let blowup = opts.blowup.unwrap_or(DEFAULT_BLOWUP_FACTOR * diameter(x));

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut mu: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5) / n as f64).collect();
    let shift = mu.iter().sum::<f64>() / n as f64;
    mu.iter_mut().for_each(|w| *w += 1.0 / n as f64 - shift);

    let mut best_value = f64::NEG_INFINITY;
    let mut best = mu.clone();
    let mut points = Vec::new();
    let mut diverged = false;
    let mut iteration = 0;
    loop {
        let p = potential_of(x, &mu);
        let value: f64 = p.iter().zip(&mu).map(|(a, b)| a * b).sum();
        if value > best_value {
            best_value = value;
            best.clone_from(&mu);
        }
        if best_value > blowup {
            diverged = true;
        }
        let last = iteration == opts.iterations || diverged;
        if iteration == 0 || iteration.is_power_of_two() || last {
            points.push(TracePoint { iteration, best_value, measure: best.clone() });
        }
        if last {
            break;
        }
        let mean = p.iter().sum::<f64>() / n as f64;
        for (w, pi) in mu.iter_mut().zip(&p) {
            *w += step * 2.0 * (pi - mean);
        }
        iteration += 1;
    }
    AscentTrace {
        points,
        best_value,
        best_measure: SignedMeasure { space: x.name().to_string(), weights: best },
        iterations_run: iteration,
        step,
        diverged,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MaximalityReport {
    /// `max_x |d_mu(x) - m_value|`.
    pub flatness: f64,
    pub trials: usize,
    /// Random mass-one measures whose energy exceeds `m_value + tol`.
    pub dominance_violations: usize,
    pub max_trial_energy: f64,
    /// `(mu | mu)` in the extended inner product; equals one for a maximal measure.
    pub norm_squared: f64,
    pub identity_gap: f64,
}

impl MaximalityReport {
    pub fn passes(&self, flatness_tol: f64, identity_tol: f64) -> bool {
        self.flatness <= flatness_tol && self.dominance_violations == 0 && self.identity_gap <= identity_tol
    }
}

/// Checks that `mu` behaves like a maximal measure with value `m_value`.
pub fn verify_maximal(
    x: &FiniteMetricSpace,
    mu: &SignedMeasure,
    m_value: f64,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<MaximalityReport> {
    let mass = mu.mass();
    if (mass - 1.0).abs() > tol.max(1e-9) {
        return Err(QhmError::NotUnitMass { mass, tol });
    }
    let flatness = deviation_from(&potential(x, mu)?, m_value);
    let n = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let threshold = m_value + tol * (1.0 + m_value.abs());
    let mut violations = 0;
    let mut max_trial = f64::NEG_INFINITY;
    for _ in 0..trials {
        let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let shift = (1.0 - w.iter().sum::<f64>()) / n as f64;
        w.iter_mut().for_each(|v| *v += shift);
        let e = energy(x, &SignedMeasure { space: mu.space.clone(), weights: w })?;
        max_trial = max_trial.max(e);
        if e > threshold {
            violations += 1;
        }
    }
    let norm_squared = inner_extended(x, m_value, mu, mu)?;
    Ok(MaximalityReport {
        flatness,
        trials,
        dominance_violations: violations,
        max_trial_energy: max_trial,
        norm_squared,
        identity_gap: (norm_squared - 1.0).abs(),
    })
}
