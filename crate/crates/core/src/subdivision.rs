//! Stationary subdivision of control polygons.
//!
//! A refinement mask `c / scale` refines a polygon `p` into
//! `q_m = sum_j c[m - 2j + h] p_j / scale`, with `h` the mask centre. The
//! `(1, 4, 6, 4, 1) / 8` mask produces vertex points
//! `(p_{i-1} + 6 p_i + p_{i+1}) / 8` and edge points `(p_i + p_{i+1}) / 2`,
//! which converge to the uniform cubic B-spline of the original polygon.

use std::io::Write;

use nalgebra::{Point3, Vector3};

use crate::basis::{basis_unchecked, make_integer_knots, BasisConvention};
use crate::curve::{BSplineCurve, ControlPoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementMask {
    coefficients: Vec<f64>,
    scale: f64,
}

impl RefinementMask {
    /// Mask with an odd number of coefficients whose even and odd parity
    /// classes each sum to `scale`.
    pub fn new(coefficients: Vec<f64>, scale: f64) -> Result<Self> {
        if coefficients.len().is_multiple_of(2) || coefficients.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "mask needs an odd number (>= 3) of coefficients, got {}",
                coefficients.len()
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidArgument(format!("mask scale {scale} must be positive")));
        }
        let mask = Self {
            coefficients,
            scale,
        };
        let (even, odd) = mask.parity_sums();
        if (even - 1.0).abs() > 1e-12 || (odd - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "mask parity sums must each be 1, got {even} and {odd}"
            )));
        }
        Ok(mask)
    }

    /// `(1, 2, 1) / 2`, piecewise-linear refinement.
    pub fn linear() -> Self {
        Self {
            coefficients: vec![1.0, 2.0, 1.0],
            scale: 2.0,
        }
    }

    /// `(1, 4, 6, 4, 1) / 8`, uniform cubic refinement.
    pub fn cubic() -> Self {
        Self {
            coefficients: vec![1.0, 4.0, 6.0, 4.0, 1.0],
            scale: 8.0,
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Scaled sums of the even-index and odd-index coefficients.
    pub fn parity_sums(&self) -> (f64, f64) {
        let even: f64 = self.coefficients.iter().step_by(2).sum();
        let odd: f64 = self.coefficients.iter().skip(1).step_by(2).sum();
        (even / self.scale, odd / self.scale)
    }

    fn centre(&self) -> usize {
        (self.coefficients.len() - 1) / 2
    }

    /// Minimum points for an open polygon: every interior output must have
    /// its full stencil available.
    fn open_minimum(&self) -> usize {
        self.coefficients.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlPolygon {
    pub points: Vec<ControlPoint>,
    pub closed: bool,
}

impl ControlPolygon {
    pub fn new(points: Vec<ControlPoint>, closed: bool) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                got: points.len(),
            });
        }
        Ok(Self { points, closed })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// CSV with header `x,y,z`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "z"])?;
        for p in &self.points {
            w.serialize((p.x, p.y, p.z))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `(lhs, rhs)` of the two-scale relation
/// `B_0^n(ts) = 2^{-n} sum_{j=0}^{n+1} C(n+1, j) B_0^n(2 ts - j)` on integer
/// knots, `n` in 0..=3.
pub fn two_scale_eval(n: usize, ts: f64) -> Result<(f64, f64)> {
    if n > 3 {
        return Err(Error::UnsupportedDegree {
            degree: n,
            reason: "two-scale evaluation supports degrees 0 to 3",
        });
    }
    if !ts.is_finite() {
        return Err(Error::NonFinite(format!("two-scale parameter {ts}")));
    }
    let knots = make_integer_knots(n + 2)?;
    let b = |x: f64| basis_unchecked(&knots, 0, n, x, BasisConvention::HALF_OPEN);
    let lhs = b(ts);
    let mut binom = 1.0;
    let mut rhs = 0.0;
    for j in 0..=n + 1 {
        rhs += binom * b(2.0 * ts - j as f64);
        binom = binom * (n + 1 - j) as f64 / (j + 1) as f64;
    }
    rhs /= (1u32 << n) as f64;
    Ok((lhs, rhs))
}

/// One refinement step.
///
/// Closed polygons are indexed cyclically and double in length. Open
/// polygons keep both end points fixed and apply only stencils that fit
/// inside the polygon, giving `2 len - 1` points for the cubic mask.
pub fn subdivide_once(poly: &ControlPolygon, mask: &RefinementMask) -> Result<ControlPolygon> {
    let len = poly.points.len();
    let h = mask.centre() as isize;
    let c = &mask.coefficients;
    let stencil = |m: isize| -> Option<Vector3<f64>> {
        // q_m = sum_j c[m - 2j + h] p_j for j with 0 <= m - 2j + h < c.len()
        let mut acc = Vector3::zeros();
        let jmax = (m + h).div_euclid(2);
        let jmin = (m + h - c.len() as isize + 1 + 1).div_euclid(2);
        for j in jmin..=jmax {
            let ci = m - 2 * j + h;
            if ci < 0 || ci >= c.len() as isize {
                continue;
            }
            let idx = if poly.closed {
                j.rem_euclid(len as isize) as usize
            } else if j < 0 || j >= len as isize {
                return None;
            } else {
                j as usize
            };
            acc += poly.points[idx].coords * c[ci as usize];
        }
        Some(acc / mask.scale)
    };

    let points = if poly.closed {
        (0..2 * len as isize)
            .map(|m| Point3::from(stencil(m).expect("cyclic stencil is total")))
            .collect()
    } else {
        if len < mask.open_minimum() {
            return Err(Error::TooFewPoints {
                needed: mask.open_minimum(),
                got: len,
            });
        }
        let last = 2 * (len as isize - 1);
        let mut out = Vec::with_capacity(2 * len - 1);
        out.push(poly.points[0]);
        out.extend((1..last).filter_map(stencil).map(Point3::from));
        out.push(poly.points[len - 1]);
        out
    };
    ControlPolygon::new(points, poly.closed)
}

pub fn subdivide_to_depth(
    poly: &ControlPolygon,
    mask: &RefinementMask,
    depth: usize,
) -> Result<ControlPolygon> {
    let mut current = poly.clone();
    for _ in 0..depth {
        current = subdivide_once(&current, mask)?;
    }
    Ok(current)
}

/// Uniform cubic B-spline on integer knots with the polygon points as
/// control points (wrapped when closed): the limit of cubic subdivision.
pub fn limit_curve(poly: &ControlPolygon) -> Result<BSplineCurve> {
    if poly.closed {
        BSplineCurve::closed_uniform(3, &poly.points)
    } else {
        if poly.points.len() < 4 {
            return Err(Error::TooFewPoints {
                needed: 4,
                got: poly.points.len(),
            });
        }
        let knots = make_integer_knots(poly.points.len() + 4)?;
        BSplineCurve::new(3, knots, poly.points.clone())
    }
}

/// Samples used for the dense limit-curve polyline.
pub const LIMIT_SAMPLES: usize = 10_000;

fn point_segment_distance(p: &ControlPoint, a: &ControlPoint, b: &ControlPoint) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm()
}

/// Max distance from each subdivided polygon to the limit cubic.
///
/// The limit curve is sampled densely (at least [`LIMIT_SAMPLES`] points)
/// and distance is taken to the polyline through those samples.
pub fn convergence_report(
    poly: &ControlPolygon,
    mask: &RefinementMask,
    depths: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if depths.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("depths must be sorted ascending".into()));
    }
    let limit = limit_curve(poly)?;
    let spans = limit.control_points().len() - 3;
    let dense = limit.sample(LIMIT_SAMPLES.max(spans * 256))?;
    let dense: Vec<ControlPoint> = dense.points().copied().collect();

    let mut report = Vec::with_capacity(depths.len());
    let mut current = poly.clone();
    let mut level = 0;
    for &d in depths {
        while level < d {
            current = subdivide_once(&current, mask)?;
            level += 1;
        }
        let worst = current
            .points
            .iter()
            .map(|q| {
                dense
                    .windows(2)
                    .map(|w| point_segment_distance(q, &w[0], &w[1]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        report.push((d, worst));
    }
    Ok(report)
}
