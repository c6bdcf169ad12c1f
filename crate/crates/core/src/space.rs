//! Finite metric spaces: validation, builders, restriction and gluing.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QhmError, Result};
use crate::tolerance::DEFAULT_TRIANGLE_REL;

/// A finite set of labelled points with a validated distance matrix.
///
/// Instances are only produced by [`validate_metric`] and the builders in this
/// module, so the matrix is always exactly symmetric with a zero diagonal and
/// positive off-diagonal entries satisfying the triangle inequality up to the
/// tolerance that was used at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    name: String,
    labels: Vec<String>,
    dist: DMatrix<f64>,
}

impl FiniteMetricSpace {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.dist.nrows()
    }

    /// Always false: a validated space has at least one point.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dist(&self) -> &DMatrix<f64> {
        &self.dist
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[(i, j)]
    }

    /// Rows of the distance matrix as nested vectors.
    pub fn matrix_rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| (0..self.len()).map(|j| self.dist[(i, j)]).collect()).collect()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Multiplies every distance by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(QhmError::InvalidInput(format!("scale factor {factor} must be positive")));
        }
        Ok(FiniteMetricSpace {
            name: format!("{}*{}", self.name, factor),
            labels: self.labels.clone(),
            dist: &self.dist * factor,
        })
    }

    /// Default triangle tolerance for this space.
    pub fn default_triangle_tol(&self) -> f64 {
        DEFAULT_TRIANGLE_REL * diameter(self)
    }
}

/// Validates a square matrix as a metric and wraps it in a [`FiniteMetricSpace`].
///
/// Entry pairs `(i,j)`, `(j,i)` that differ by at most `tol_triangle` are
/// replaced by their average; larger differences are rejected.
pub fn validate_metric(
    matrix: &[Vec<f64>],
    labels: Option<Vec<String>>,
    tol_triangle: f64,
) -> Result<FiniteMetricSpace> {
    let n = matrix.len();
    if n == 0 {
        return Err(QhmError::EmptyMatrix);
    }
    for (row, r) in matrix.iter().enumerate() {
        if r.len() != n {
            return Err(QhmError::NonSquare { row, len: r.len(), n });
        }
    }
    let labels = match labels {
        Some(l) if l.len() != n => return Err(QhmError::LabelCount { labels: l.len(), n }),
        Some(l) => l,
        None => default_labels("p", n),
    };
    let mut dist = DMatrix::zeros(n, n);
    for (i, row) in matrix.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(QhmError::NegativeEntry { i, j, value: v });
            }
        }
        if row[i] != 0.0 {
            return Err(QhmError::NonzeroDiagonal { i, value: row[i] });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (matrix[i][j], matrix[j][i]);
            let diff = (a - b).abs();
            if diff > tol_triangle {
                return Err(QhmError::AsymmetryExceedsTolerance { i, j, diff, tol: tol_triangle });
            }
            let v = if a == b { a } else { 0.5 * (a + b) };
            if v <= 0.0 {
                return Err(QhmError::CoincidentPoints { i, j });
            }
            dist[(i, j)] = v;
            dist[(j, i)] = v;
        }
    }
    check_triangle(&dist, tol_triangle)?;
    Ok(FiniteMetricSpace { name: "space".into(), labels, dist })
}

/// Reports the worst violated triple, if any exceeds `tol`.
fn check_triangle(dist: &DMatrix<f64>, tol: f64) -> Result<()> {
    let n = dist.nrows();
    let mut worst: Option<(f64, usize, usize, usize)> = None;
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = dist[(i, j)];
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let excess = dij - (dist[(i, k)] + dist[(k, j)]);
                if excess > tol && worst.is_none_or(|w| excess > w.0) {
                    worst = Some((excess, i, j, k));
                }
            }
        }
    }
    match worst {
        None => Ok(()),
        Some((_, i, j, k)) => {
            Err(QhmError::TriangleViolation { i, j, k, lhs: dist[(i, j)], rhs: dist[(i, k)] + dist[(k, j)] })
        }
    }
}

fn default_labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Largest pairwise distance.
pub fn diameter(x: &FiniteMetricSpace) -> f64 {
    x.dist.iter().copied().fold(0.0, f64::max)
}

/// Restriction of `x` to the points `indices`, in the given order.
pub fn subspace(x: &FiniteMetricSpace, indices: &[usize]) -> Result<FiniteMetricSpace> {
    if indices.is_empty() {
        return Err(QhmError::EmptySelection);
    }
    let n = x.len();
    let mut seen = vec![false; n];
    for &index in indices {
        if index >= n {
            return Err(QhmError::IndexOutOfRange { index, n });
        }
        if std::mem::replace(&mut seen[index], true) {
            return Err(QhmError::DuplicateIndex { index });
        }
    }
    let m = indices.len();
    let dist = DMatrix::from_fn(m, m, |a, b| x.dist[(indices[a], indices[b])]);
    Ok(FiniteMetricSpace {
        name: format!("{}[{}]", x.name, m),
        labels: indices.iter().map(|&i| x.labels[i].clone()).collect(),
        dist,
    })
}

/// Two spaces joined by a single cross distance.
#[derive(Debug, Clone)]
pub struct GlueSpec {
    pub x: FiniteMetricSpace,
    pub y: FiniteMetricSpace,
    pub c: f64,
}

impl GlueSpec {
    pub fn new(x: FiniteMetricSpace, y: FiniteMetricSpace, c: f64) -> Self {
        GlueSpec { x, y, c }
    }

    /// Checks `2c >= max(diameter(x), diameter(y))`.
    pub fn check(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(QhmError::InvalidInput(format!("cross distance {} must be positive", self.c)));
        }
        let two_c = 2.0 * self.c;
        let (dx, dy) = (diameter(&self.x), diameter(&self.y));
        if two_c < dx {
            return Err(QhmError::CrossDistanceTooSmall { two_c, bound: dx, component: "X" });
        }
        if two_c < dy {
            return Err(QhmError::CrossDistanceTooSmall { two_c, bound: dy, component: "Y" });
        }
        Ok(())
    }
}

/// The disjoint union of `spec.x` and `spec.y` with every cross distance equal to `spec.c`.
///
/// Points of `x` come first (labels `x0..`), then points of `y` (labels `y0..`).
pub fn glue(spec: &GlueSpec) -> Result<FiniteMetricSpace> {
    spec.check()?;
    let (nx, ny) = (spec.x.len(), spec.y.len());
    let n = nx + ny;
    let dist = DMatrix::from_fn(n, n, |i, j| match (i < nx, j < nx) {
        (true, true) => spec.x.dist[(i, j)],
        (false, false) => spec.y.dist[(i - nx, j - nx)],
        _ => spec.c,
    });
    let mut labels = default_labels("x", nx);
    labels.extend(default_labels("y", ny));
    Ok(FiniteMetricSpace { name: format!("glue({},{};{})", spec.x.name, spec.y.name, spec.c), labels, dist })
}

/// Two points at distance `d`.
pub fn two_point(d: f64) -> Result<FiniteMetricSpace> {
    uniform_space(2, d)
}

/// `n` points with all mutual distances equal to `d`.
pub fn uniform_space(n: usize, d: f64) -> Result<FiniteMetricSpace> {
    if n == 0 {
        return Err(QhmError::TooFewPoints { min: 1, got: 0 });
    }
    let m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { d }).collect()).collect();
    Ok(validate_metric(&m, None, 0.0)?.with_name(format!("uniform({n},{d})")))
}

/// Lowers entries of a gap-indexed distance table until
/// `t[a + b] <= t[a] + t[b]` holds in floating point (indices mod `n` when
/// `cyclic`). Rounding in the closed forms can break it by an ulp; the
/// adjustments are of that size.
fn close_gaps(t: &mut [f64], cyclic: bool) {
    let n = t.len();
    loop {
        let mut changed = false;
        for a in 1..n {
            for b in a..n {
                let c = if cyclic {
                    (a + b) % n
                } else if a + b < n {
                    a + b
                } else {
                    break;
                };
                if c == 0 {
                    continue;
                }
                let s = t[a] + t[b];
                if t[c] > s {
                    t[c] = s;
                    if cyclic {
                        t[n - c] = s;
                    }
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// `n` equally spaced points of `[a, b]` with the absolute-difference metric.
pub fn interval_grid(a: f64, b: f64, n: usize) -> Result<FiniteMetricSpace> {
    if a >= b || !a.is_finite() || !b.is_finite() {
        return Err(QhmError::DegenerateInterval { a, b });
    }
    if n < 2 {
        return Err(QhmError::TooFewPoints { min: 2, got: n });
    }
    let steps = (n - 1) as f64;
    let mut gaps: Vec<f64> = (0..n).map(|g| (b - a) * g as f64 / steps).collect();
    close_gaps(&mut gaps, false);
    let dist = DMatrix::from_fn(n, n, |i, j| gaps[i.abs_diff(j)]);
    Ok(FiniteMetricSpace { name: format!("interval[{a},{b}]/{n}"), labels: default_labels("t", n), dist })
}

/// `n` equally spaced points on the unit circle with the arc-length metric.
pub fn regular_polygon_arc(n: usize) -> Result<FiniteMetricSpace> {
    if n < 2 {
        return Err(QhmError::TooFewPoints { min: 2, got: n });
    }
    // Arc length depends only on the index gap, so compute it once per gap.
    let mut arc: Vec<f64> = (0..n)
        .map(|gap| {
            let g = gap.min(n - gap);
            2.0 * PI * g as f64 / n as f64
        })
        .collect();
    close_gaps(&mut arc, true);
    let dist = DMatrix::from_fn(n, n, |i, j| arc[i.abs_diff(j)]);
    Ok(FiniteMetricSpace { name: format!("circle-arc/{n}"), labels: default_labels("a", n), dist })
}

/// Vertices of the regular `n`-gon inscribed in the unit circle, as planar points.
pub fn regular_polygon_points(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            vec![t.cos(), t.sin()]
        })
        .collect()
}

/// Pairwise euclidean distances of a point cloud.
pub fn euclidean_cloud(coords: &[Vec<f64>]) -> Result<FiniteMetricSpace> {
    if coords.is_empty() {
        return Err(QhmError::TooFewPoints { min: 1, got: 0 });
    }
    let dim = coords[0].len();
    let mut scale: f64 = 0.0;
    for (i, p) in coords.iter().enumerate() {
        if p.len() != dim {
            return Err(QhmError::DimensionMismatch { i, got: p.len(), expected: dim });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(QhmError::NonFiniteCoordinate { i });
        }
        scale = scale.max(p.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    let n = coords.len();
    let dup_tol = 1e-12 * (1.0 + scale);
    let mut dist = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = coords[i].iter().zip(&coords[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if d <= dup_tol {
                return Err(QhmError::DuplicatePoint { i, j });
            }
            dist[(i, j)] = d;
            dist[(j, i)] = d;
        }
    }
    let space = FiniteMetricSpace { name: format!("cloud/{n}"), labels: default_labels("p", n), dist };
    check_triangle(&space.dist, 1e-12 * diameter(&space))?;
    Ok(space)
}

/// Fibonacci lattice of `n` points on the unit sphere in R^3.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden_angle * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Point coordinates of [`ball_discretization`]: the origin, then shell `k`
/// (radius `k/shells`) for `k = 1..=shells`, each a scaled copy of the same
/// Fibonacci lattice.
pub fn ball_points(shells: usize, points_per_shell: usize) -> Vec<Vec<f64>> {
    let lattice = fibonacci_sphere(points_per_shell);
    let mut pts = Vec::with_capacity(1 + shells * points_per_shell);
    pts.push(vec![0.0; 3]);
    for k in 1..=shells {
        let r = k as f64 / shells as f64;
        pts.extend(lattice.iter().map(|p| vec![r * p[0], r * p[1], r * p[2]]));
    }
    pts
}

/// Deterministic finite subset of the closed unit ball in R^3.
///
/// Because every shell reuses the same lattice, the output for `shells = s`
/// is a subset of the output for any multiple of `s` (see [`ball_embedding`]).
pub fn ball_discretization(shells: usize, points_per_shell: usize) -> Result<FiniteMetricSpace> {
    if shells < 1 {
        return Err(QhmError::TooFewPoints { min: 1, got: shells });
    }
    if points_per_shell < 4 {
        return Err(QhmError::TooFewPoints { min: 4, got: points_per_shell });
    }
    let space = euclidean_cloud(&ball_points(shells, points_per_shell))?;
    Ok(space.with_name(format!("ball3/{shells}x{points_per_shell}")))
}

/// Indices of `ball_discretization(shells, pps)` inside
/// `ball_discretization(top_shells, pps)`; `top_shells` must be a multiple of `shells`.
pub fn ball_embedding(shells: usize, top_shells: usize, points_per_shell: usize) -> Result<Vec<usize>> {
    if shells == 0 || !top_shells.is_multiple_of(shells) {
        return Err(QhmError::InvalidInput(format!("{shells} shells do not nest inside {top_shells} shells")));
    }
    let q = top_shells / shells;
    let mut idx = vec![0];
    for k in 1..=shells {
        let base = 1 + (k * q - 1) * points_per_shell;
        idx.extend(base..base + points_per_shell);
    }
    Ok(idx)
}

/// Random metric with off-diagonal entries uniform in `[1, 2]`.
pub fn random_metric(n: usize, seed: u64) -> Result<FiniteMetricSpace> {
    if n == 0 {
        return Err(QhmError::TooFewPoints { min: 1, got: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dist = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.gen_range(1.0..=2.0);
            dist[(i, j)] = v;
            dist[(j, i)] = v;
        }
    }
    Ok(FiniteMetricSpace { name: format!("random({n},{seed})"), labels: default_labels("p", n), dist })
}

/// Uniformly random points in the unit cube `[0,1]^dim`.
pub fn random_cloud(n: usize, dim: usize, seed: u64) -> Result<FiniteMetricSpace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect();
    Ok(euclidean_cloud(&coords)?.with_name(format!("cloud({n},{dim},{seed})")))
}
