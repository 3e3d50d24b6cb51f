//! B-spline curves: evaluation, sampling and the geometric property checks.

use std::io::Write;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::basis::{basis_unchecked, make_integer_knots, BasisConvention, KnotVector};
use crate::error::{Error, Result};

pub type ControlPoint = Point3<f64>;

/// Tolerance for half-plane and segment containment tests.
pub const HULL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BSplineCurve {
    degree: usize,
    knots: KnotVector,
    control_points: Vec<ControlPoint>,
}

impl BSplineCurve {
    pub fn new(degree: usize, knots: KnotVector, control_points: Vec<ControlPoint>) -> Result<Self> {
        let n = control_points.len();
        if n < degree + 1 {
            return Err(Error::InvalidCurve(format!(
                "degree {degree} needs at least {} control points, got {n}",
                degree + 1
            )));
        }
        if knots.len() != n + degree + 1 {
            return Err(Error::InvalidCurve(format!(
                "expected {} knots for {n} control points of degree {degree}, got {}",
                n + degree + 1,
                knots.len()
            )));
        }
        if let Some(i) = control_points
            .iter()
            .position(|p| !p.coords.iter().all(|c| c.is_finite()))
        {
            return Err(Error::InvalidCurve(format!("control point {i} is not finite")));
        }
        if knots[degree] >= knots[n] {
            return Err(Error::InvalidCurve(format!(
                "empty parameter domain [{}, {}]",
                knots[degree], knots[n]
            )));
        }
        Ok(Self {
            degree,
            knots,
            control_points,
        })
    }

    /// Uniform periodic curve: the first `degree` points are appended again
    /// after the last, over integer knots. Domain is `[degree, len + degree]`.
    pub fn closed_uniform(degree: usize, points: &[ControlPoint]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::TooFewPoints { needed: 1, got: 0 });
        }
        let wrapped: Vec<ControlPoint> = points
            .iter()
            .chain(points.iter().cycle().take(degree))
            .copied()
            .collect();
        let knots = make_integer_knots(wrapped.len() + degree + 1)?;
        Self::new(degree, knots, wrapped)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn control_points(&self) -> &[ControlPoint] {
        &self.control_points
    }

    /// Parameter domain `[ts_n, ts_N]`.
    pub fn domain(&self) -> (f64, f64) {
        (self.knots[self.degree], self.knots[self.control_points.len()])
    }

    pub fn with_control_points(&self, control_points: Vec<ControlPoint>) -> Result<Self> {
        Self::new(self.degree, self.knots.clone(), control_points)
    }

    fn check_domain(&self, ts: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if !ts.is_finite() || ts < lo || ts > hi {
            return Err(Error::OutOfDomain { ts, lo, hi });
        }
        Ok(())
    }

    /// Point on the curve, summing every basis function against its control
    /// point.
    pub fn evaluate(&self, ts: f64) -> Result<ControlPoint> {
        let mut evaluations = 0;
        self.evaluate_counted(ts, &mut evaluations)
    }

    /// Like [`evaluate`](Self::evaluate), adding the number of basis
    /// function evaluations performed to `counter`.
    pub fn evaluate_counted(&self, ts: f64, counter: &mut usize) -> Result<ControlPoint> {
        self.check_domain(ts)?;
        let mut acc = Vector3::zeros();
        for (k, cp) in self.control_points.iter().enumerate() {
            let w = basis_unchecked(&self.knots, k, self.degree, ts, BasisConvention::CLOSED);
            *counter += 1;
            acc += cp.coords * w;
        }
        Ok(Point3::from(acc))
    }

    /// All basis weights of the curve at `ts`.
    pub fn basis_weights(&self, ts: f64) -> Result<Vec<f64>> {
        self.check_domain(ts)?;
        Ok((0..self.control_points.len())
            .map(|k| basis_unchecked(&self.knots, k, self.degree, ts, BasisConvention::CLOSED))
            .collect())
    }

    /// `count` equally spaced samples over the full domain.
    pub fn sample(&self, count: usize) -> Result<CurveSet> {
        if count < 2 {
            return Err(Error::InvalidArgument(format!(
                "sample count must be at least 2, got {count}"
            )));
        }
        let (lo, hi) = self.domain();
        let step = (hi - lo) / (count - 1) as f64;
        let mut basis_evaluations = 0;
        let mut samples = Vec::with_capacity(count);
        for i in 0..count {
            let ts = if i == count - 1 { hi } else { lo + i as f64 * step };
            let p = self.evaluate_counted(ts, &mut basis_evaluations)?;
            samples.push((ts, p));
        }
        Ok(CurveSet {
            samples,
            basis_evaluations,
        })
    }

    /// 2D containment of sampled points in the hull of the control points.
    pub fn convex_hull_contains(&self, pts: &CurveSet) -> Result<bool> {
        let z0 = self.control_points[0].z;
        if self.control_points.iter().any(|p| p.z != z0) {
            return Err(Error::NonPlanar);
        }
        let hull = ConvexHull2::new(self.control_points.iter().map(|p| [p.x, p.y]));
        Ok(pts
            .samples
            .iter()
            .all(|(_, p)| hull.contains([p.x, p.y], HULL_TOLERANCE)))
    }

    /// Runs of at least `degree` identical adjacent control points, each
    /// paired with a parameter at which the curve passes through the point.
    ///
    /// Candidates are the knots and span midpoints where only the run's
    /// basis functions can be nonzero. Runs for which no candidate lands on
    /// the point within 1e-9 are left out.
    pub fn multiplicity_interpolation_check(&self) -> Vec<(ControlPoint, f64)> {
        let n = self.degree;
        let run_min = n.max(1);
        let cps = &self.control_points;
        let (lo, hi) = self.domain();
        let mut found = Vec::new();
        let mut a = 0;
        while a < cps.len() {
            let mut b = a;
            while b + 1 < cps.len() && cps[b + 1] == cps[a] {
                b += 1;
            }
            if b - a + 1 >= run_min {
                let t = self.knots.values();
                let mut candidates = Vec::new();
                for j in (a + n)..=(b + 1).min(t.len() - 1) {
                    candidates.push(t[j]);
                    if j <= b && j + 1 < t.len() {
                        candidates.push(0.5 * (t[j] + t[j + 1]));
                    }
                }
                let hit = candidates
                    .into_iter()
                    .filter(|ts| (lo..=hi).contains(ts))
                    .find(|&ts| {
                        self.evaluate(ts)
                            .map(|p| (p - cps[a]).norm() <= HULL_TOLERANCE)
                            .unwrap_or(false)
                    });
                if let Some(ts) = hit {
                    found.push((cps[a], ts));
                }
            }
            a = b + 1;
        }
        found
    }
}

/// Ordered samples `(ts, point)` of a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet {
    pub samples: Vec<(f64, ControlPoint)>,
    /// Basis evaluations spent producing the samples.
    pub basis_evaluations: usize,
}

impl CurveSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = &ControlPoint> {
        self.samples.iter().map(|(_, p)| p)
    }

    /// CSV with header `ts,x,y,z`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["ts", "x", "y", "z"])?;
        for (ts, p) in &self.samples {
            w.serialize((ts, p.x, p.y, p.z))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// JSON curve description `{ "degree", "knots", "control_points" }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub degree: usize,
    pub knots: Vec<f64>,
    pub control_points: Vec<[f64; 3]>,
}

impl TryFrom<CurveSpec> for BSplineCurve {
    type Error = Error;

    fn try_from(spec: CurveSpec) -> Result<Self> {
        let knots = KnotVector::new(spec.knots)?;
        let cps = spec
            .control_points
            .into_iter()
            .map(|[x, y, z]| Point3::new(x, y, z))
            .collect();
        BSplineCurve::new(spec.degree, knots, cps)
    }
}

impl From<&BSplineCurve> for CurveSpec {
    fn from(c: &BSplineCurve) -> Self {
        CurveSpec {
            degree: c.degree,
            knots: c.knots.values().to_vec(),
            control_points: c.control_points.iter().map(|p| [p.x, p.y, p.z]).collect(),
        }
    }
}

/// Convex hull of a planar point set (Andrew's monotone chain), kept in
/// counter-clockwise order.
#[derive(Debug, Clone)]
pub struct ConvexHull2 {
    vertices: Vec<[f64; 2]>,
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1]];
    d[0].hypot(d[1])
}

impl ConvexHull2 {
    pub fn new(points: impl IntoIterator<Item = [f64; 2]>) -> Self {
        let mut pts: Vec<[f64; 2]> = points.into_iter().collect();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.dedup();
        if pts.len() < 3 {
            return Self { vertices: pts };
        }
        let mut lower: Vec<[f64; 2]> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<[f64; 2]> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Self { vertices: lower }
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Inside or within `tol` of the hull. Degenerate hulls (a point or a
    /// segment) test distance to that point or segment.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        let v = &self.vertices;
        match v.len() {
            0 => false,
            1 => (p[0] - v[0][0]).hypot(p[1] - v[0][1]) <= tol,
            2 => segment_distance(p, v[0], v[1]) <= tol,
            n => (0..n).all(|i| {
                let a = v[i];
                let b = v[(i + 1) % n];
                let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                cross(a, b, p) / len >= -tol
            }),
        }
    }
}
