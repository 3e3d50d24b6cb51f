//! Tensor-product surfaces lofted through compatible cross-section curves.
//!
//! Sections are first brought onto a common knot vector (the elementwise
//! mean of their own) and refitted to their original samples. The k-th
//! control points of all sections then form a column that is fitted by a
//! second curve family in the stacking direction; the fitted columns make up
//! the control net.

use std::io::Write;

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use crate::basis::{basis_unchecked, BasisConvention, KnotVector};
use crate::curve::{BSplineCurve, ControlPoint};
use crate::error::{Error, Result};
use crate::fitting::{
    average_knot_vectors, fit_knots, fit_open_curve, fit_periodic, parameterize_chord_length,
    parameterize_closed, periodic_knots, solve_least_squares, FitProblem, Parameterization,
};

/// A cross-section curve together with the samples it was fitted to.
#[derive(Debug, Clone)]
pub struct SectionFit {
    pub id: String,
    pub curve: BSplineCurve,
    pub data: Vec<ControlPoint>,
    pub parameters: Vec<f64>,
    /// Closed curve stored with wrapped control points.
    pub periodic: bool,
    /// Number of distinct (unwrapped) control points.
    pub num_control: usize,
    pub residual_rms: f64,
}

impl SectionFit {
    pub fn fit_closed(
        id: impl Into<String>,
        points: Vec<ControlPoint>,
        degree: usize,
        num_control: usize,
        scheme: Parameterization,
    ) -> Result<Self> {
        let parameters = parameterize_closed(&points, scheme)?;
        let knots = periodic_knots(&parameters, degree, num_control)?;
        let (curve, sol) = fit_periodic(&points, &parameters, degree, num_control, &knots)?;
        Ok(Self {
            id: id.into(),
            curve,
            data: points,
            parameters,
            periodic: true,
            num_control,
            residual_rms: sol.residual_rms,
        })
    }

    pub fn fit_open(
        id: impl Into<String>,
        points: Vec<ControlPoint>,
        degree: usize,
        num_control: usize,
        scheme: Parameterization,
    ) -> Result<Self> {
        let (curve, sol, parameters) = fit_open_curve(&points, degree, num_control, scheme)?;
        Ok(Self {
            id: id.into(),
            curve,
            data: points,
            parameters,
            periodic: false,
            num_control,
            residual_rms: sol.residual_rms,
        })
    }

    /// Refit the stored samples under a different knot vector.
    pub fn refit(&self, knots: &KnotVector) -> Result<Self> {
        let degree = self.curve.degree();
        let (curve, residual_rms) = if self.periodic {
            let (c, s) = fit_periodic(&self.data, &self.parameters, degree, self.num_control, knots)?;
            (c, s.residual_rms)
        } else {
            let problem = FitProblem::new(
                self.data.clone(),
                self.parameters.clone(),
                degree,
                knots.clone(),
                self.num_control,
            )?;
            let s = solve_least_squares(&problem)?;
            (BSplineCurve::new(degree, knots.clone(), s.control_points)?, s.residual_rms)
        };
        Ok(Self {
            curve,
            residual_rms,
            ..self.clone()
        })
    }
}

/// Put every section on the mean knot vector and refit it.
pub fn make_sections_compatible(sections: &[SectionFit]) -> Result<Vec<SectionFit>> {
    let first = sections
        .first()
        .ok_or_else(|| Error::InvalidArgument("no sections".into()))?;
    for s in sections {
        if s.curve.degree() != first.curve.degree() {
            return Err(Error::Mismatch(format!(
                "section {} has degree {}, expected {}",
                s.id,
                s.curve.degree(),
                first.curve.degree()
            )));
        }
        if s.curve.control_points().len() != first.curve.control_points().len()
            || s.periodic != first.periodic
        {
            return Err(Error::Mismatch(format!(
                "section {} has {} control points, expected {}",
                s.id,
                s.curve.control_points().len(),
                first.curve.control_points().len()
            )));
        }
    }
    let knots: Vec<KnotVector> = sections.iter().map(|s| s.curve.knots().clone()).collect();
    let common = average_knot_vectors(&knots)?;
    sections
        .par_iter()
        .map(|s| {
            if s.curve.knots() == &common {
                Ok(s.clone())
            } else {
                s.refit(&common)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorSurface {
    degree_u: usize,
    degree_v: usize,
    knots_u: KnotVector,
    knots_v: KnotVector,
    /// `rows x cols`, rows follow v and columns follow u.
    control_net: Vec<Vec<ControlPoint>>,
}

impl TensorSurface {
    pub fn new(
        degree_u: usize,
        degree_v: usize,
        knots_u: KnotVector,
        knots_v: KnotVector,
        control_net: Vec<Vec<ControlPoint>>,
    ) -> Result<Self> {
        let rows = control_net.len();
        let cols = control_net.first().map_or(0, Vec::len);
        if rows < degree_v + 1 || cols < degree_u + 1 {
            return Err(Error::InvalidSurface(format!(
                "control net {rows}x{cols} too small for degrees ({degree_u}, {degree_v})"
            )));
        }
        if control_net.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidSurface("control net rows differ in length".into()));
        }
        if knots_v.len() != rows + degree_v + 1 || knots_u.len() != cols + degree_u + 1 {
            return Err(Error::InvalidSurface(format!(
                "knot counts ({}, {}) do not match net {rows}x{cols}",
                knots_u.len(),
                knots_v.len()
            )));
        }
        if control_net
            .iter()
            .flatten()
            .any(|p| !p.coords.iter().all(|c| c.is_finite()))
        {
            return Err(Error::InvalidSurface("control net has non-finite entries".into()));
        }
        if knots_u[degree_u] >= knots_u[cols] || knots_v[degree_v] >= knots_v[rows] {
            return Err(Error::InvalidSurface("empty parameter domain".into()));
        }
        Ok(Self {
            degree_u,
            degree_v,
            knots_u,
            knots_v,
            control_net,
        })
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.degree_u, self.degree_v)
    }

    pub fn knots_u(&self) -> &KnotVector {
        &self.knots_u
    }

    pub fn knots_v(&self) -> &KnotVector {
        &self.knots_v
    }

    pub fn control_net(&self) -> &[Vec<ControlPoint>] {
        &self.control_net
    }

    pub fn domain_u(&self) -> (f64, f64) {
        (self.knots_u[self.degree_u], self.knots_u[self.control_net[0].len()])
    }

    pub fn domain_v(&self) -> (f64, f64) {
        (self.knots_v[self.degree_v], self.knots_v[self.control_net.len()])
    }

    fn check(&self, u: f64, v: f64) -> Result<()> {
        let (ulo, uhi) = self.domain_u();
        let (vlo, vhi) = self.domain_v();
        if !u.is_finite() || u < ulo || u > uhi {
            return Err(Error::OutOfDomain { ts: u, lo: ulo, hi: uhi });
        }
        if !v.is_finite() || v < vlo || v > vhi {
            return Err(Error::OutOfDomain { ts: v, lo: vlo, hi: vhi });
        }
        Ok(())
    }

    fn weights_1d(knots: &KnotVector, degree: usize, count: usize, t: f64) -> Vec<f64> {
        (0..count)
            .map(|k| basis_unchecked(knots, k, degree, t, BasisConvention::CLOSED))
            .collect()
    }

    /// Product weights `B_i(v) B_j(u)` over the control net.
    pub fn basis_weights(&self, u: f64, v: f64) -> Result<Vec<Vec<f64>>> {
        self.check(u, v)?;
        let wu = Self::weights_1d(&self.knots_u, self.degree_u, self.control_net[0].len(), u);
        let wv = Self::weights_1d(&self.knots_v, self.degree_v, self.control_net.len(), v);
        Ok(wv.iter().map(|a| wu.iter().map(|b| a * b).collect()).collect())
    }

    pub fn evaluate(&self, u: f64, v: f64) -> Result<ControlPoint> {
        self.check(u, v)?;
        let wu = Self::weights_1d(&self.knots_u, self.degree_u, self.control_net[0].len(), u);
        let wv = Self::weights_1d(&self.knots_v, self.degree_v, self.control_net.len(), v);
        let mut acc = Vector3::zeros();
        for (row, a) in self.control_net.iter().zip(&wv) {
            if *a == 0.0 {
                continue;
            }
            let mut inner = Vector3::zeros();
            for (p, b) in row.iter().zip(&wu) {
                inner += p.coords * *b;
            }
            acc += inner * *a;
        }
        Ok(Point3::from(acc))
    }

    /// `res_u x res_v` grid of surface points with quad connectivity.
    /// Vertices are ordered row-major: v outer, u inner.
    pub fn tessellate(&self, res_u: usize, res_v: usize) -> Result<QuadMesh> {
        if res_u < 2 || res_v < 2 {
            return Err(Error::InvalidArgument(format!(
                "tessellation resolution must be at least 2x2, got {res_u}x{res_v}"
            )));
        }
        let grid = |(lo, hi): (f64, f64), n: usize, i: usize| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        };
        let (du, dv) = (self.domain_u(), self.domain_v());
        let rows: Vec<Vec<ControlPoint>> = (0..res_v)
            .into_par_iter()
            .map(|iv| {
                let v = grid(dv, res_v, iv);
                (0..res_u)
                    .map(|iu| self.evaluate(grid(du, res_u, iu), v))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let vertices: Vec<ControlPoint> = rows.into_iter().flatten().collect();
        let mut quads = Vec::with_capacity((res_u - 1) * (res_v - 1));
        for iv in 0..res_v - 1 {
            for iu in 0..res_u - 1 {
                let a = iv * res_u + iu;
                quads.push([a, a + 1, a + res_u + 1, a + res_u]);
            }
        }
        let mesh = QuadMesh {
            vertices,
            quads,
            res_u,
            res_v,
        };
        if mesh.is_degenerate() {
            log::warn!("tessellated surface is degenerate: all vertices coincide");
        }
        Ok(mesh)
    }
}

/// Result of [`loft`]: the surface and the v-parameter of each section.
#[derive(Debug, Clone)]
pub struct Loft {
    pub surface: TensorSurface,
    pub section_params: Vec<f64>,
}

fn mean_point(points: &[ControlPoint]) -> ControlPoint {
    let sum = points.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords);
    Point3::from(sum / points.len() as f64)
}

/// Default number of control points in the stacking direction: every
/// section when exactly `degree_v + 1` are given, otherwise about half of
/// the sections so the column fits approximate.
pub fn default_v_controls(sections: usize, degree_v: usize) -> usize {
    if sections <= degree_v + 1 {
        sections
    } else {
        sections.div_ceil(2).max(degree_v + 1)
    }
}

/// Loft compatible sections into a tensor-product surface.
///
/// Sections are parameterized in v by chord length between the centroids
/// of their control points. Each control-point column is fitted with a
/// degree `degree_v` curve with `num_control_v` control points (interpolating
/// when that equals the number of sections).
pub fn loft(sections: &[BSplineCurve], degree_v: usize, num_control_v: Option<usize>) -> Result<Loft> {
    if sections.len() < degree_v + 1 {
        return Err(Error::TooFewPoints {
            needed: degree_v + 1,
            got: sections.len(),
        });
    }
    let first = &sections[0];
    if let Some(bad) = sections.iter().position(|s| {
        s.degree() != first.degree()
            || s.knots() != first.knots()
            || s.control_points().len() != first.control_points().len()
    }) {
        return Err(Error::Mismatch(format!(
            "section {bad} is not compatible with section 0"
        )));
    }
    let num_control_v = num_control_v.unwrap_or_else(|| default_v_controls(sections.len(), degree_v));
    if num_control_v < degree_v + 1 || num_control_v > sections.len() {
        return Err(Error::InvalidArgument(format!(
            "num_control_v ({num_control_v}) must lie in [{}, {}]",
            degree_v + 1,
            sections.len()
        )));
    }
    let centroids: Vec<ControlPoint> = sections.iter().map(|s| mean_point(s.control_points())).collect();
    let params = parameterize_chord_length(&centroids, (0.0, 1.0))?;
    let knots_v = fit_knots(&params, degree_v, num_control_v)?;
    let cols = first.control_points().len();
    let columns: Vec<Vec<ControlPoint>> = (0..cols)
        .into_par_iter()
        .map(|k| {
            let data: Vec<ControlPoint> = sections.iter().map(|s| s.control_points()[k]).collect();
            let problem = FitProblem::new(data, params.clone(), degree_v, knots_v.clone(), num_control_v)?;
            Ok(solve_least_squares(&problem)?.control_points)
        })
        .collect::<Result<_>>()?;
    let net: Vec<Vec<ControlPoint>> = (0..num_control_v)
        .map(|r| columns.iter().map(|col| col[r]).collect())
        .collect();
    let surface = TensorSurface::new(first.degree(), degree_v, first.knots().clone(), knots_v, net)?;
    Ok(Loft {
        surface,
        section_params: params,
    })
}

/// Mean absolute angle (radians) between the seam points of adjacent
/// sections, measured about each section's control-point centroid in the
/// xy-plane.
pub fn twist_metric(sections: &[BSplineCurve]) -> Result<f64> {
    if sections.len() < 2 {
        return Ok(0.0);
    }
    let angles: Vec<f64> = sections
        .iter()
        .map(|s| {
            let c = mean_point(s.control_points());
            let seam = s.evaluate(s.domain().0)?;
            Ok((seam.y - c.y).atan2(seam.x - c.x))
        })
        .collect::<Result<_>>()?;
    let total: f64 = angles
        .windows(2)
        .map(|w| {
            let d = (w[1] - w[0]).rem_euclid(std::f64::consts::TAU);
            d.min(std::f64::consts::TAU - d)
        })
        .sum();
    Ok(total / (angles.len() - 1) as f64)
}

/// Grid mesh of quads; indices are 0-based into `vertices`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadMesh {
    pub vertices: Vec<ControlPoint>,
    pub quads: Vec<[usize; 4]>,
    pub res_u: usize,
    pub res_v: usize,
}

impl QuadMesh {
    pub fn is_degenerate(&self) -> bool {
        self.vertices.windows(2).all(|w| w[0] == w[1])
    }

    /// ASCII OBJ: `v x y z` lines then one `f` line per quad (1-based), or
    /// two triangles per quad when `triangles` is set.
    pub fn write_obj<W: Write>(&self, mut out: W, triangles: bool) -> Result<()> {
        for p in &self.vertices {
            writeln!(out, "v {} {} {}", p.x, p.y, p.z)?;
        }
        for q in &self.quads {
            let [a, b, c, d] = q.map(|i| i + 1);
            if triangles {
                writeln!(out, "f {a} {b} {c}")?;
                writeln!(out, "f {a} {c} {d}")?;
            } else {
                writeln!(out, "f {a} {b} {c} {d}")?;
            }
        }
        out.flush()?;
        Ok(())
    }
}
