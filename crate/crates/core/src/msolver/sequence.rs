//! Trend diagnostics for maximal measures along a nested chain of subspaces.

use serde::Serialize;

use crate::energy::{energy, potential, seminorm_zero_detailed, spread, SignedMeasure};
use crate::error::{QhmError, Result};
use crate::space::{diameter, FiniteMetricSpace};

/// One member of a chain: a space together with its position inside the top space.
#[derive(Debug, Clone)]
pub struct ChainLevel {
    pub space: FiniteMetricSpace,
    pub embedding: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelRow {
    pub k: usize,
    pub n_k: usize,
    /// `I(mu_k)`.
    pub energy: f64,
    /// `sup - inf` of `d_{mu_k}` over every point of the top space.
    pub flatness: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRow {
    /// Step from level `k` to level `k + 1`.
    pub k: usize,
    /// `||mu_{k+1} - mu_k||` on the top space.
    pub seminorm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SequenceReport {
    pub rows: Vec<LevelRow>,
    pub steps: Vec<StepRow>,
}

impl SequenceReport {
    pub fn energy_nondecreasing(&self, slack: f64) -> bool {
        self.rows.windows(2).all(|w| w[1].energy >= w[0].energy - slack)
    }
}

/// Tabulates energy, potential flatness and seminorm steps of `measures`
/// (each a mass-one measure on `top`, supported on its level).
pub fn sequence_diagnostics(
    top: &FiniteMetricSpace,
    levels: &[ChainLevel],
    measures: &[SignedMeasure],
    mass_tol: f64,
) -> Result<SequenceReport> {
    if levels.len() != measures.len() {
        return Err(QhmError::InvalidInput(format!("{} levels but {} measures", levels.len(), measures.len())));
    }
    let match_tol = 1e-12 * diameter(top).max(f64::MIN_POSITIVE);
    let mut prev_members: Option<Vec<bool>> = None;
    for (level, (lv, mu)) in levels.iter().zip(measures).enumerate() {
        let mismatch = |detail: String| QhmError::ChainMismatch { level, detail };
        if lv.embedding.len() != lv.space.len() {
            return Err(mismatch("embedding length differs from point count".into()));
        }
        let mut members = vec![false; top.len()];
        for &i in &lv.embedding {
            if i >= top.len() || std::mem::replace(&mut members[i], true) {
                return Err(mismatch(format!("bad embedding index {i}")));
            }
        }
        for (a, &ia) in lv.embedding.iter().enumerate() {
            for (b, &ib) in lv.embedding.iter().enumerate() {
                if (lv.space.d(a, b) - top.d(ia, ib)).abs() > match_tol {
                    return Err(mismatch(format!("distance ({a},{b}) differs from top ({ia},{ib})")));
                }
            }
        }
        if let Some(prev) = &prev_members {
            if prev.iter().zip(&members).any(|(&p, &m)| p && !m) {
                return Err(mismatch("level does not contain the previous level".into()));
            }
        }
        if mu.len() != top.len() {
            return Err(QhmError::SpaceMismatch { space: top.name().to_string(), weights: mu.len(), n: top.len() });
        }
        if let Some(i) = (0..top.len()).find(|&i| !members[i] && mu.weights[i].abs() > mass_tol) {
            return Err(mismatch(format!("measure has weight outside the level at point {i}")));
        }
        let mass = mu.mass();
        if (mass - 1.0).abs() > mass_tol {
            return Err(QhmError::NotUnitMass { mass, tol: mass_tol });
        }
        prev_members = Some(members);
    }

    let rows = levels
        .iter()
        .zip(measures)
        .enumerate()
        .map(|(k, (lv, mu))| {
            Ok(LevelRow { k, n_k: lv.space.len(), energy: energy(top, mu)?, flatness: spread(&potential(top, mu)?) })
        })
        .collect::<Result<Vec<_>>>()?;
    let steps = measures
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let diff = w[1].combine(1.0, &w[0], -1.0);
            let s = seminorm_zero_detailed(top, &diff, 2.0 * mass_tol, 0.0)?;
            Ok(StepRow { k, seminorm: s.value })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SequenceReport { rows, steps })
}
