use serde::Serialize;

use crate::energy::{deviation_from, potential, SignedMeasure};
use crate::error::{QhmError, Result};
use crate::space::{glue, FiniteMetricSpace, GlueSpec};

/// Predicted constant of a glued space from the constants of its components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value")]
pub enum GluedPrediction {
    Finite(f64),
    Infinite,
    /// `2c = m_x = m_y`: the glued space is non-strict but `M` stays finite.
    Boundary(f64),
}

/// Closed form for `M` of `glue(X, Y, c)` given `m_x = M(X)`, `m_y = M(Y)`.
///
/// Boundary equalities (`2c = m_x + m_y`, `m_x = m_y`) are tested with
/// relative tolerance `rel_tol`.
pub fn glued_m_predict(m_x: f64, m_y: f64, c: f64, rel_tol: f64) -> Result<GluedPrediction> {
    for (name, v) in [("m_x", m_x), ("m_y", m_y)] {
        if !v.is_finite() || v < 0.0 {
            return Err(QhmError::InvalidInput(format!("{name} = {v} must be finite and non-negative")));
        }
    }
    if !c.is_finite() || c <= 0.0 {
        return Err(QhmError::InvalidInput(format!("c = {c} must be finite and positive")));
    }
    let sum = m_x + m_y;
    let gap = 2.0 * c - sum;
    let scale = 1.0 + sum + 2.0 * c;
    if gap.abs() <= rel_tol * scale {
        if (m_x - m_y).abs() <= rel_tol * (1.0 + m_x + m_y) {
            return Ok(GluedPrediction::Boundary(0.5 * sum));
        }
        return Ok(GluedPrediction::Infinite);
    }
    if gap < 0.0 {
        return Ok(GluedPrediction::Infinite);
    }
    Ok(GluedPrediction::Finite((c * c - m_x * m_y) / gap))
}

/// The invariant measure `(m_y - c) mu1 + (m_x - c) mu2` on `glue(X, Y, c)`.
///
/// Its potential is constant with value `m_x m_y - c^2` and its mass is
/// `m_x + m_y - 2c`. Both inputs must be invariant with the stated values.
#[allow(clippy::too_many_arguments)]
pub fn glued_invariant(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
    mu1: &SignedMeasure,
    mu2: &SignedMeasure,
    m_x: f64,
    m_y: f64,
    c: f64,
    flatness_tol: f64,
) -> Result<SignedMeasure> {
    let dev1 = deviation_from(&potential(x, mu1)?, m_x);
    if dev1 > flatness_tol {
        return Err(QhmError::NotInvariantInput { which: "mu1", deviation: dev1, tol: flatness_tol });
    }
    let dev2 = deviation_from(&potential(y, mu2)?, m_y);
    if dev2 > flatness_tol {
        return Err(QhmError::NotInvariantInput { which: "mu2", deviation: dev2, tol: flatness_tol });
    }
    let z = glue(&GlueSpec::new(x.clone(), y.clone(), c))?;
    let weights = mu1.weights.iter().map(|w| (m_y - c) * w).chain(mu2.weights.iter().map(|w| (m_x - c) * w)).collect();
    SignedMeasure::on(&z, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{two_point, uniform_space};
    use approx::assert_abs_diff_eq;

    #[test]
    fn predictions() {
        assert_eq!(glued_m_predict(0.5, 8.0 / 15.0, 31.0 / 60.0, 1e-12).unwrap(), GluedPrediction::Infinite);
        match glued_m_predict(1.0, 1.0, 2.0, 1e-12).unwrap() {
            GluedPrediction::Finite(v) => assert_abs_diff_eq!(v, 1.5, epsilon = 1e-15),
            other => panic!("{other:?}"),
        }
        for c in [0.1, 1.0, 3.0] {
            match glued_m_predict(0.0, 0.0, c, 1e-12).unwrap() {
                GluedPrediction::Finite(v) => assert_abs_diff_eq!(v, c / 2.0, epsilon = 1e-15),
                other => panic!("{other:?}"),
            }
        }
        assert_eq!(glued_m_predict(1.0, 1.0, 0.9, 1e-12).unwrap(), GluedPrediction::Infinite);
        assert_eq!(glued_m_predict(0.7, 0.7, 0.7, 1e-12).unwrap(), GluedPrediction::Boundary(0.7));
    }

    #[test]
    fn prediction_rejects_bad_input() {
        assert!(glued_m_predict(-1.0, 1.0, 1.0, 1e-12).is_err());
        assert!(glued_m_predict(1.0, f64::INFINITY, 1.0, 1e-12).is_err());
        assert!(glued_m_predict(1.0, 1.0, 0.0, 1e-12).is_err());
    }

    #[test]
    fn glued_invariant_on_flat_kernel_example() {
        let x = two_point(1.0).unwrap();
        let y = uniform_space(3, 0.8).unwrap();
        let c = 31.0 / 60.0;
        let mu = glued_invariant(
            &x,
            &y,
            &SignedMeasure::uniform(&x),
            &SignedMeasure::uniform(&y),
            0.5,
            8.0 / 15.0,
            c,
            1e-12,
        )
        .unwrap();
        let t = 1.0 / 3.0;
        for (w, e) in mu.weights.iter().zip([0.5, 0.5, -t, -t, -t]) {
            assert_abs_diff_eq!(*w, e / 60.0, epsilon = 1e-15);
        }
        assert!(mu.mass().abs() < 1e-15);
        let z = glue(&GlueSpec::new(x, y, c)).unwrap();
        for p in potential(&z, &mu).unwrap() {
            assert_abs_diff_eq!(p, -1.0 / 3600.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn glued_invariant_singletons_and_uniform() {
        let one = uniform_space(1, 1.0).unwrap();
        let d = SignedMeasure::dirac(&one, 0);
        let mu = glued_invariant(&one, &one, &d, &d, 0.0, 0.0, 1.0, 1e-12).unwrap();
        assert_eq!(mu.weights, vec![-1.0, -1.0]);
        let z = glue(&GlueSpec::new(one.clone(), one, 1.0)).unwrap();
        assert_eq!(potential(&z, &mu).unwrap(), vec![-1.0, -1.0]);

        let x = two_point(2.0).unwrap();
        let mu =
            glued_invariant(&x, &x, &SignedMeasure::uniform(&x), &SignedMeasure::uniform(&x), 1.0, 1.0, 2.0, 1e-12)
                .unwrap();
        assert_abs_diff_eq!(mu.mass(), -2.0, epsilon = 1e-15);
        let z = glue(&GlueSpec::new(x.clone(), x, 2.0)).unwrap();
        let p = potential(&z, &mu).unwrap();
        assert!(p.iter().all(|v| (v + 3.0).abs() < 1e-15));
        let normalized = mu.scaled(-0.5);
        assert!(potential(&z, &normalized).unwrap().iter().all(|v| (v - 1.5).abs() < 1e-15));
    }

    #[test]
    fn glued_invariant_rejects_non_invariant_input() {
        let x = interval_grid_3();
        let err =
            glued_invariant(&x, &x, &SignedMeasure::uniform(&x), &SignedMeasure::uniform(&x), 0.5, 0.5, 1.0, 1e-9)
                .unwrap_err();
        assert!(matches!(err, QhmError::NotInvariantInput { which: "mu1", .. }));
    }

    fn interval_grid_3() -> FiniteMetricSpace {
        crate::space::interval_grid(0.0, 1.0, 3).unwrap()
    }
}
