//! Catalogue of reference spaces with known answers.

use std::f64::consts::PI;

use serde::Serialize;

use crate::classify::{classify, Verdict};
use crate::error::{QhmError, Result};
use crate::msolver::{m_constant, InfiniteReason, MStatus};
use crate::space::{
    ball_discretization, glue, interval_grid, regular_polygon_arc, two_point, uniform_space, FiniteMetricSpace,
    GlueSpec,
};
use crate::tolerance::Tolerances;

/// Points per shell used by the `ball3-<k>` fixtures and experiments.
pub const BALL_POINTS_PER_SHELL: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value")]
pub enum ExpectedM {
    Finite(f64),
    Infinite(InfiniteReason),
    /// Finite and strictly below the bound.
    FiniteBelow(f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct Expected {
    pub verdict: Option<Verdict>,
    pub m: ExpectedM,
    /// Known maximal (or invariant) measure.
    pub measure: Option<Vec<f64>>,
    pub provenance: String,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub key: String,
    pub space: FiniteMetricSpace,
    pub expected: Option<Expected>,
}

pub const FIXTURE_PATTERNS: &[&str] =
    &["nw-thm2.9", "nw-thm2.9a", "interval-<n>", "circle-<n>", "fourpoint-antipodal", "ball3-<k>"];

/// Two points at distance 1 glued to three points at mutual distance 4/5 with c = 31/60.
pub fn flat_kernel_space() -> FiniteMetricSpace {
    glue(&GlueSpec::new(two_point(1.0).unwrap(), uniform_space(3, 0.8).unwrap(), 31.0 / 60.0))
        .unwrap()
        .with_name("nw-thm2.9")
}

/// Two points at distance 2 glued to three points at mutual distance 2 with c = 1.
pub fn non_qhm_space() -> FiniteMetricSpace {
    glue(&GlueSpec::new(two_point(2.0).unwrap(), uniform_space(3, 2.0).unwrap(), 1.0)).unwrap().with_name("nw-thm2.9a")
}

fn unknown(key: &str) -> QhmError {
    QhmError::UnknownFixture { key: key.to_string(), available: FIXTURE_PATTERNS.join(", ") }
}

fn suffix(key: &str, prefix: &str) -> Option<usize> {
    key.strip_prefix(prefix)?.parse().ok()
}

pub fn fixture(key: &str) -> Result<Fixture> {
    let (space, expected) = match key {
        "nw-thm2.9" => (
            flat_kernel_space(),
            Expected {
                verdict: Some(Verdict::NonStrict),
                m: ExpectedM::Infinite(InfiniteReason::NonzeroFlatKernel),
                measure: None,
                provenance: "5-point glued space at 2c = M(X) + M(Y) with unequal components; \
                             the mass-zero direction (1/2,1/2,-1/3,-1/3,-1/3) has potential -1/60"
                    .into(),
            },
        ),
        "nw-thm2.9a" => (
            non_qhm_space(),
            Expected {
                verdict: Some(Verdict::NotQuasihypermetric),
                m: ExpectedM::Infinite(InfiniteReason::NotQuasihypermetric),
                measure: Some(vec![0.5, 0.5, 0.0, 0.0, 0.0]),
                provenance: "5-point glued space with 2c < M(X) + M(Y); (1/2,1/2,0,0,0) is \
                             invariant with value 1 although the space is not quasihypermetric"
                    .into(),
            },
        ),
        "fourpoint-antipodal" => (
            regular_polygon_arc(4)?.with_name("fourpoint-antipodal"),
            Expected {
                verdict: Some(Verdict::NonStrict),
                m: ExpectedM::Finite(PI / 2.0),
                measure: None,
                provenance: "two antipodal pairs on the unit circle, arc-length metric".into(),
            },
        ),
        _ => {
            if let Some(n) = suffix(key, "interval-") {
                let x = interval_grid(0.0, 1.0, n).map_err(|_| unknown(key))?;
                let mut w = vec![0.0; n];
                w[0] = 0.5;
                w[n - 1] = 0.5;
                (
                    x.with_name(key),
                    Expected {
                        verdict: Some(Verdict::Strict),
                        m: ExpectedM::Finite(0.5),
                        measure: Some(w),
                        provenance: "equally spaced points of [0,1]: M = (b-a)/2 attained by the endpoint measure"
                            .into(),
                    },
                )
            } else if let Some(n) = suffix(key, "circle-") {
                let x = regular_polygon_arc(n).map_err(|_| unknown(key))?;
                let verdict = match n {
                    2 => Some(Verdict::Strict),
                    _ if n % 2 == 0 => Some(Verdict::NonStrict),
                    _ => None,
                };
                // Uniform measure is invariant on a regular polygon, with value
                // the mean arc distance from a vertex (pi/2 for even n).
                let mean = (0..n).map(|j| x.d(0, j)).sum::<f64>() / n as f64;
                (
                    x.with_name(key),
                    Expected {
                        verdict,
                        m: ExpectedM::Finite(if n % 2 == 0 { PI / 2.0 } else { mean }),
                        measure: None,
                        provenance: "regular polygon on the unit circle, arc-length metric: M = pi/2 \
                                     for an even number of vertices"
                            .into(),
                    },
                )
            } else if let Some(k) = suffix(key, "ball3-") {
                let x = ball_discretization(k, BALL_POINTS_PER_SHELL).map_err(|_| unknown(key))?;
                (
                    x.with_name(key),
                    Expected {
                        verdict: Some(Verdict::Strict),
                        m: ExpectedM::FiniteBelow(2.0),
                        measure: None,
                        provenance: "finite subset of the closed unit ball in R^3, whose constant is 2 and \
                                     not attained"
                            .into(),
                    },
                )
            } else {
                return Err(unknown(key));
            }
        }
    };
    Ok(Fixture { key: key.to_string(), space, expected: Some(expected) })
}

/// Keys of a representative instance of every catalogue entry.
pub fn catalogue_keys() -> Vec<String> {
    ["nw-thm2.9", "nw-thm2.9a", "interval-3", "interval-9", "circle-4", "circle-8", "fourpoint-antipodal", "ball3-1"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FixtureCheck {
    pub key: String,
    pub passed: bool,
    pub verdict: Verdict,
    pub status: MStatus,
    pub value: Option<f64>,
    pub failures: Vec<String>,
}

/// Runs classify and m_constant on a fixture and compares with its expectation.
pub fn check_fixture(f: &Fixture, tol: &Tolerances, value_tol: f64) -> Result<FixtureCheck> {
    let cls = classify(&f.space, tol.classify)?;
    let dec = m_constant(&f.space, tol)?;
    let mut failures = vec![];
    if let Some(e) = &f.expected {
        if let Some(v) = e.verdict {
            if v != cls.verdict {
                failures.push(format!("verdict {} != expected {v}", cls.verdict));
            }
        }
        match (e.m, dec.status, dec.value) {
            (ExpectedM::Finite(m), MStatus::Finite, Some(v)) if (v - m).abs() <= value_tol * (1.0 + m.abs()) => {}
            (ExpectedM::FiniteBelow(b), MStatus::Finite, Some(v)) if v < b => {}
            (ExpectedM::Infinite(r), MStatus::Infinite, _) if dec.reason == Some(r) => {}
            (m, s, v) => failures.push(format!("M expected {m:?}, got {s:?} {v:?}")),
        }
        if let (Some(w), ExpectedM::Finite(_), Some(mu)) = (&e.measure, e.m, &dec.maximal_measure) {
            let dev = w.iter().zip(&mu.weights).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if dev > value_tol {
                failures.push(format!("maximal measure deviates by {dev:e}"));
            }
        }
    }
    Ok(FixtureCheck {
        key: f.key.clone(),
        passed: failures.is_empty(),
        verdict: cls.verdict,
        status: dec.status,
        value: dec.value,
        failures,
    })
}
