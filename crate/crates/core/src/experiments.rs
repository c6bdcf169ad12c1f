//! Discretization experiments with CSV output.
//!
//! Every experiment is deterministic given its parameters; only the
//! `elapsed_ms` column varies between runs.

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::classify::{classify, Verdict};
use crate::energy::SignedMeasure;
use crate::error::{QhmError, Result};
use crate::fixtures::BALL_POINTS_PER_SHELL;
use crate::msolver::{glued_m_predict, m_constant, sequence_diagnostics, ChainLevel, GluedPrediction, MStatus};
use crate::space::{
    ball_discretization, ball_embedding, euclidean_cloud, glue, interval_grid, regular_polygon_arc,
    regular_polygon_points, subspace, two_point, FiniteMetricSpace, GlueSpec,
};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub experiment: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub parameters: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult<R> {
    pub metadata: Metadata,
    /// Ordered by size ascending.
    pub rows: Vec<R>,
    pub checks: Vec<Check>,
}

impl<R: Serialize> ExperimentResult<R> {
    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        for r in &self.rows {
            w.serialize(r).map_err(|e| QhmError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| QhmError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| QhmError::Io(e.to_string()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| QhmError::Io(format!("{}: {e}", path.display())))
    }
}

fn check(name: &str, passed: bool) -> Check {
    Check { name: name.to_string(), passed }
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Interval,
    Circle,
    /// Shell counts at a fixed number of points per shell.
    Ball3 {
        points_per_shell: usize,
    },
}

impl FromStr for Family {
    type Err = QhmError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interval" => Ok(Family::Interval),
            "circle" => Ok(Family::Circle),
            "ball3" => Ok(Family::Ball3 { points_per_shell: BALL_POINTS_PER_SHELL }),
            _ => Err(QhmError::InvalidInput(format!("unknown family '{s}' (interval|circle|ball3)"))),
        }
    }
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Interval => "interval",
            Family::Circle => "circle",
            Family::Ball3 { .. } => "ball3",
        }
    }

    /// Member of the family for a size parameter (points for interval and
    /// circle, shells for ball3).
    pub fn build(&self, size: usize) -> Result<FiniteMetricSpace> {
        match *self {
            Family::Interval => interval_grid(0.0, 1.0, size),
            Family::Circle => regular_polygon_arc(size),
            Family::Ball3 { points_per_shell } => ball_discretization(size, points_per_shell),
        }
    }

    /// Position of member `size` inside member `top`, when they nest.
    pub fn embedding(&self, size: usize, top: usize) -> Option<Vec<usize>> {
        match *self {
            Family::Interval => (size >= 2 && (top - 1).is_multiple_of(size - 1))
                .then(|| (0..size).map(|i| i * (top - 1) / (size - 1)).collect()),
            Family::Circle => {
                (size >= 1 && top.is_multiple_of(size)).then(|| (0..size).map(|i| i * (top / size)).collect())
            }
            Family::Ball3 { points_per_shell } => ball_embedding(size, top, points_per_shell).ok(),
        }
    }
}

/// Builds the nested chain of `sizes` inside its largest member.
pub fn nested_chain(family: Family, sizes: &[usize]) -> Result<(FiniteMetricSpace, Vec<ChainLevel>)> {
    let top_size = *sizes.last().ok_or_else(|| QhmError::InvalidInput("no sizes".into()))?;
    let top = family.build(top_size)?;
    let levels = sizes
        .iter()
        .map(|&s| {
            let embedding = family
                .embedding(s, top_size)
                .ok_or_else(|| QhmError::InvalidInput(format!("size {s} does not nest in {top_size}")))?;
            Ok(ChainLevel { space: family.build(s)?, embedding })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((top, levels))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergeRow {
    pub k: usize,
    pub size: usize,
    pub n_k: usize,
    pub status: String,
    pub m_value: Option<f64>,
    #[serde(rename = "I_mu")]
    pub i_mu: Option<f64>,
    pub flatness: Option<f64>,
    pub seminorm_step: Option<f64>,
    pub error: Option<String>,
    pub elapsed_ms: f64,
}

fn require_ascending(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QhmError::InvalidInput(format!("sizes must be non-empty and strictly ascending: {sizes:?}")));
    }
    Ok(())
}

/// Solves `M` for each member of a family; nested sizes also get sequence diagnostics.
pub fn run_converge(
    family: Family,
    sizes: &[usize],
    seed: u64,
    tol: &Tolerances,
) -> Result<ExperimentResult<ConvergeRow>> {
    require_ascending(sizes)?;
    let mut rows = vec![];
    let mut maximal: Vec<Option<SignedMeasure>> = vec![];
    for (k, &size) in sizes.iter().enumerate() {
        let t = Instant::now();
        let outcome = family.build(size).and_then(|x| Ok((x.len(), m_constant(&x, tol)?)));
        let mut row = ConvergeRow {
            k,
            size,
            n_k: 0,
            status: "Failed".into(),
            m_value: None,
            i_mu: None,
            flatness: None,
            seminorm_step: None,
            error: None,
            elapsed_ms: 0.0,
        };
        match outcome {
            Ok((n, d)) => {
                row.n_k = n;
                row.status = format!("{:?}", d.status);
                row.m_value = d.value;
                maximal.push(d.maximal_measure);
            }
            Err(e) => {
                row.error = Some(e.to_string());
                maximal.push(None);
            }
        }
        row.elapsed_ms = elapsed_ms(t);
        rows.push(row);
    }

    // Trend columns need every member solved and nested in the largest one.
    let chain = nested_chain(family, sizes).ok();
    let mut trend_ok = None;
    if let (Some((top, levels)), true) = (chain, maximal.iter().all(Option::is_some)) {
        let measures = levels
            .iter()
            .zip(&maximal)
            .map(|(lv, mu)| mu.as_ref().unwrap().extend_by_zero(&lv.embedding, top.len(), top.name()))
            .collect::<Result<Vec<_>>>()?;
        let report = sequence_diagnostics(&top, &levels, &measures, tol.mass.max(1e-9))?;
        for (row, lr) in rows.iter_mut().zip(&report.rows) {
            row.i_mu = Some(lr.energy);
            row.flatness = Some(lr.flatness);
        }
        for step in &report.steps {
            rows[step.k + 1].seminorm_step = Some(step.seminorm);
        }
        trend_ok = Some(report.energy_nondecreasing(1e-9));
    }

    let values: Vec<f64> = rows.iter().filter_map(|r| r.m_value).collect();
    let mut checks = vec![check("all rows finite", rows.iter().all(|r| r.status == "Finite"))];
    if let Some(ok) = trend_ok {
        checks.push(check("nested M nondecreasing", ok && values.windows(2).all(|w| w[1] >= w[0] - 1e-9)));
    }
    Ok(ExperimentResult {
        metadata: Metadata {
            experiment: format!("converge-{}", family.name()),
            seed,
            tolerances: *tol,
            parameters: format!("sizes={sizes:?}"),
        },
        rows,
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GlueDivergeRow {
    pub k: usize,
    pub shells: usize,
    pub n_k: usize,
    pub m_x: Option<f64>,
    pub verdict_z: Option<String>,
    pub m_z: Option<f64>,
    pub predicted: Option<f64>,
    pub rel_error: Option<f64>,
    pub error: Option<String>,
    pub elapsed_ms: f64,
}

/// Relative agreement required between the glued solve and the closed form.
pub const GLUE_AGREEMENT_TOL: f64 = 1e-6;

/// Glues growing ball discretizations `X_k` to two points at distance 2 with
/// `c = 3/2`; `M(Z_k) = (9/4 - M_k) / (2 - M_k)` grows without bound as
/// `M_k -> 2`.
pub fn run_glue_diverge(
    shells: &[usize],
    points_per_shell: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ExperimentResult<GlueDivergeRow>> {
    require_ascending(shells)?;
    let y = two_point(2.0)?;
    let c = 1.5;
    let m_y = 1.0;
    let mut rows = vec![];
    for (k, &s) in shells.iter().enumerate() {
        let t = Instant::now();
        let mut row = GlueDivergeRow {
            k,
            shells: s,
            n_k: 0,
            m_x: None,
            verdict_z: None,
            m_z: None,
            predicted: None,
            rel_error: None,
            error: None,
            elapsed_ms: 0.0,
        };
        let result = (|| -> Result<()> {
            let x = ball_discretization(s, points_per_shell)?;
            row.n_k = x.len();
            let dx = m_constant(&x, tol)?;
            let m_x = dx.value.ok_or_else(|| QhmError::Inconsistency("ball discretization has M = inf".into()))?;
            row.m_x = Some(m_x);
            let z = glue(&GlueSpec::new(x, y.clone(), c))?;
            row.verdict_z = Some(classify(&z, tol.classify)?.verdict.to_string());
            let dz = m_constant(&z, tol)?;
            let m_z = dz.value.ok_or_else(|| QhmError::Inconsistency("glued space has M = inf".into()))?;
            row.m_z = Some(m_z);
            let predicted = match glued_m_predict(m_x, m_y, c, 1e-12)? {
                GluedPrediction::Finite(v) => v,
                other => return Err(QhmError::Inconsistency(format!("unexpected prediction {other:?}"))),
            };
            row.predicted = Some(predicted);
            let rel = (m_z - predicted).abs() / predicted.abs();
            row.rel_error = Some(rel);
            if rel > GLUE_AGREEMENT_TOL {
                return Err(QhmError::PredictionMismatch { size: s, predicted, solved: m_z });
            }
            Ok(())
        })();
        if let Err(e) = result {
            row.error = Some(e.to_string());
        }
        row.elapsed_ms = elapsed_ms(t);
        rows.push(row);
    }
    let m_z: Vec<Option<f64>> = rows.iter().map(|r| r.m_z).collect();
    let checks = vec![
        check("no failed rows", rows.iter().all(|r| r.error.is_none())),
        check("every glued space strict", rows.iter().all(|r| r.verdict_z.as_deref() == Some("Strict"))),
        check(
            "M(Z_k) strictly increasing",
            m_z.windows(2).all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if b > a)),
        ),
    ];
    Ok(ExperimentResult {
        metadata: Metadata {
            experiment: "glue-diverge".into(),
            seed,
            tolerances: *tol,
            parameters: format!("shells={shells:?} points_per_shell={points_per_shell} c=1.5"),
        },
        rows,
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EqualGlueRow {
    /// Deleted vertex of the first copy, or none for the full glued space.
    pub deleted: Option<usize>,
    pub n_z: usize,
    pub m_component: f64,
    pub verdict_z: String,
    pub m_z: Option<f64>,
    pub elapsed_ms: f64,
}

/// Two regular `n`-gons (chord metric) glued at `c = M`: the glued space is
/// non-strict with `M(Z) = M`, while deleting any one vertex lowers the
/// component constant and makes the glued space strict.
pub fn run_equal_glue_demo(n_polygon: usize, tol: &Tolerances) -> Result<ExperimentResult<EqualGlueRow>> {
    if n_polygon < 3 {
        return Err(QhmError::TooFewPoints { min: 3, got: n_polygon });
    }
    let x = euclidean_cloud(&regular_polygon_points(n_polygon))?.with_name(format!("polygon/{n_polygon}"));
    let m = m_constant(&x, tol)?.value.ok_or_else(|| QhmError::Inconsistency("polygon has M = inf".into()))?;
    let c = m;
    let mut rows = vec![];
    for i in 0..n_polygon {
        let t = Instant::now();
        let keep: Vec<usize> = (0..n_polygon).filter(|&j| j != i).collect();
        let xp = subspace(&x, &keep)?;
        let m_sub =
            m_constant(&xp, tol)?.value.ok_or_else(|| QhmError::Inconsistency("polygon subset has M = inf".into()))?;
        let z = glue(&GlueSpec::new(xp, x.clone(), c))?;
        let dz = m_constant(&z, tol)?;
        rows.push(EqualGlueRow {
            deleted: Some(i),
            n_z: z.len(),
            m_component: m_sub,
            verdict_z: dz.diagnostics.verdict.to_string(),
            m_z: dz.value,
            elapsed_ms: elapsed_ms(t),
        });
    }
    let t = Instant::now();
    let z = glue(&GlueSpec::new(x.clone(), x.clone(), c))?;
    let dz = m_constant(&z, tol)?;
    rows.push(EqualGlueRow {
        deleted: None,
        n_z: z.len(),
        m_component: m,
        verdict_z: dz.diagnostics.verdict.to_string(),
        m_z: dz.value,
        elapsed_ms: elapsed_ms(t),
    });

    let full = rows.last().unwrap();
    let proper = &rows[..rows.len() - 1];
    let checks = vec![
        check("component strict", classify(&x, tol.classify)?.verdict == Verdict::Strict),
        check("glued space non-strict", full.verdict_z == Verdict::NonStrict.to_string()),
        check(
            "glued M equals component M",
            dz.status == MStatus::Finite && full.m_z.is_some_and(|v| (v - m).abs() <= 1e-9 * (1.0 + m)),
        ),
        check("deleting a vertex lowers M", proper.iter().all(|r| r.m_component < m)),
        check("glued proper subsets strict", proper.iter().all(|r| r.verdict_z == Verdict::Strict.to_string())),
    ];
    Ok(ExperimentResult {
        metadata: Metadata {
            experiment: "equal-glue-demo".into(),
            seed: 0,
            tolerances: *tol,
            parameters: format!("n_polygon={n_polygon} c={c}"),
        },
        rows,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn converge_interval() {
        let r = run_converge(Family::Interval, &[2, 3, 5, 9], 0, &Tolerances::default()).unwrap();
        assert!(r.all_checks_pass());
        for row in &r.rows {
            assert!((row.m_value.unwrap() - 0.5).abs() <= 1e-9);
            assert!(row.flatness.unwrap() <= 1e-12);
        }
        assert!(r.rows[1..].iter().all(|row| row.seminorm_step.unwrap() <= 1e-9));
    }

    #[test]
    fn converge_circle() {
        let r = run_converge(Family::Circle, &[4, 8, 16], 0, &Tolerances::default()).unwrap();
        assert!(r.all_checks_pass());
        for row in &r.rows {
            assert!((row.m_value.unwrap() - PI / 2.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn converge_rejects_unsorted_sizes() {
        assert!(run_converge(Family::Interval, &[5, 3], 0, &Tolerances::default()).is_err());
        assert!(run_converge(Family::Interval, &[], 0, &Tolerances::default()).is_err());
    }

    #[test]
    fn failed_row_does_not_abort() {
        let r = run_converge(Family::Interval, &[1, 3], 0, &Tolerances::default()).unwrap();
        assert_eq!(r.rows[0].status, "Failed");
        assert!(r.rows[0].error.is_some());
        assert_eq!(r.rows[1].status, "Finite");
        assert!(!r.all_checks_pass());
    }

    #[test]
    fn csv_is_deterministic_apart_from_timing() {
        let strip =
            |s: String| -> Vec<String> { s.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect() };
        let a = run_converge(Family::Circle, &[4, 8], 1, &Tolerances::default()).unwrap().to_csv().unwrap();
        let b = run_converge(Family::Circle, &[4, 8], 1, &Tolerances::default()).unwrap().to_csv().unwrap();
        assert!(a.starts_with("k,size,n_k,status,m_value,I_mu,flatness,seminorm_step,error,elapsed_ms"));
        assert_eq!(strip(a), strip(b));
    }

    #[test]
    fn equal_glue_triangle() {
        let r = run_equal_glue_demo(3, &Tolerances::default()).unwrap();
        for c in &r.checks {
            assert!(c.passed, "{}", c.name);
        }
        assert_eq!(r.rows.len(), 4);
        assert_eq!(r.rows.last().unwrap().n_z, 6);
        // M of the triangle with side sqrt(3) is (2/3) sqrt(3)
        let m = r.rows.last().unwrap().m_component;
        assert!((m - 2.0 * 3f64.sqrt() / 3.0).abs() < 1e-12);
    }

    #[test]
    fn glue_diverge_closed_form_at_m_one() {
        // X = two points at distance 2 has M = 1; prediction (9/4 - 1)/(2 - 1).
        let z = glue(&GlueSpec::new(two_point(2.0).unwrap(), two_point(2.0).unwrap(), 1.5)).unwrap();
        let m = m_constant(&z, &Tolerances::default()).unwrap().value.unwrap();
        assert!((m - 1.25).abs() < 1e-12);
        assert_eq!(glued_m_predict(1.0, 1.0, 1.5, 1e-12).unwrap(), GluedPrediction::Finite(1.25));
    }

    #[test]
    fn glue_diverge_small() {
        let r = run_glue_diverge(&[1, 2], 16, 0, &Tolerances::default()).unwrap();
        assert!(r.all_checks_pass(), "{:?}", r.rows);
    }
}
