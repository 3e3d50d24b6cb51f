//! Least-squares B-spline fitting of ordered point sequences.
//!
//! The collocation matrix `A[i][k] = B_k(t_i)` relates the unknown control
//! points to the data, `D = A P`. The system is solved per axis through a
//! singular value decomposition of `A`, which also provides the rank test.

use std::io::Write;

use nalgebra::{DMatrix, Point3};
use serde::Serialize;

use crate::basis::{basis_unchecked, BasisConvention, KnotVector};
use crate::curve::{BSplineCurve, ControlPoint};
use crate::error::{Error, Result};

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Default number of distinct control points for contour cross-sections.
pub const DEFAULT_SECTION_CONTROLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parameterization {
    #[default]
    ChordLength,
    Uniform,
}

/// Cumulative chord lengths rescaled to `[lo, hi]`.
///
/// Falls back to uniform spacing when every point coincides.
pub fn parameterize_chord_length(points: &[ControlPoint], domain: (f64, f64)) -> Result<Vec<f64>> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    let mut cumulative = Vec::with_capacity(points.len());
    let mut total = 0.0;
    cumulative.push(0.0);
    for w in points.windows(2) {
        total += (w[1] - w[0]).norm();
        cumulative.push(total);
    }
    if total == 0.0 {
        return parameterize_uniform(points.len(), domain);
    }
    let (lo, hi) = domain;
    let last = cumulative.len() - 1;
    Ok(cumulative
        .into_iter()
        .enumerate()
        .map(|(i, c)| if i == last { hi } else { lo + (hi - lo) * c / total })
        .collect())
}

pub fn parameterize_uniform(count: usize, domain: (f64, f64)) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: count,
        });
    }
    let (lo, hi) = domain;
    Ok((0..count)
        .map(|i| {
            if i == count - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (count - 1) as f64
            }
        })
        .collect())
}

/// Parameters for the given scheme.
pub fn parameterize(
    points: &[ControlPoint],
    scheme: Parameterization,
    domain: (f64, f64),
) -> Result<Vec<f64>> {
    match scheme {
        Parameterization::ChordLength => parameterize_chord_length(points, domain),
        Parameterization::Uniform => parameterize_uniform(points.len(), domain),
    }
}

/// Clamped knots over `[params[0], params[last]]` with interior knots placed
/// at averaged parameter quantiles.
///
/// Square systems use the running average of `degree` consecutive parameters;
/// overdetermined ones interpolate the parameter sequence at evenly spaced
/// fractional indices so every span holds data.
pub fn fit_knots(params: &[f64], degree: usize, num_control: usize) -> Result<KnotVector> {
    let m = params.len();
    if num_control < degree + 1 {
        return Err(Error::InvalidArgument(format!(
            "num_control ({num_control}) must exceed the degree ({degree})"
        )));
    }
    if m < num_control {
        return Err(Error::TooFewPoints {
            needed: num_control,
            got: m,
        });
    }
    let lo = params[0];
    let hi = params[m - 1];
    let interior = num_control - degree - 1;
    let mut knots = Vec::with_capacity(num_control + degree + 1);
    knots.extend(std::iter::repeat_n(lo, degree + 1));
    if m == num_control {
        for j in 1..=interior {
            let s: f64 = params[j..j + degree].iter().sum();
            knots.push(s / degree as f64);
        }
    } else {
        let d = m as f64 / (num_control - degree) as f64;
        for j in 1..=interior {
            let x = j as f64 * d;
            let i = x.floor() as usize;
            let alpha = x - i as f64;
            knots.push((1.0 - alpha) * params[i - 1] + alpha * params[i]);
        }
    }
    knots.extend(std::iter::repeat_n(hi, degree + 1));
    KnotVector::new(knots)
}

/// Periodic knots for `num_control` distinct control points of a closed
/// curve with domain `[0, 1]`.
///
/// One period of knots is read off the closed parameter sequence (`params`
/// in `[0, 1)`, with an implicit closing value 1) at evenly spaced fractional
/// indices, then extended by one period on each side. The wrapped curve has
/// `num_control + degree` control points.
pub fn periodic_knots(params: &[f64], degree: usize, num_control: usize) -> Result<KnotVector> {
    let m = params.len();
    if num_control == 0 || m < num_control {
        return Err(Error::TooFewPoints {
            needed: num_control.max(1),
            got: m,
        });
    }
    let closed_param = |i: usize| if i >= m { 1.0 } else { params[i] };
    let period: Vec<f64> = (0..num_control)
        .map(|j| {
            let x = j as f64 * m as f64 / num_control as f64;
            let i = x.floor() as usize;
            let alpha = x - i as f64;
            if alpha == 0.0 {
                closed_param(i)
            } else {
                (1.0 - alpha) * closed_param(i) + alpha * closed_param(i + 1)
            }
        })
        .collect();
    let knot = |idx: isize| -> f64 {
        let q = idx.div_euclid(num_control as isize);
        let r = idx.rem_euclid(num_control as isize) as usize;
        period[r] + q as f64
    };
    let total = num_control + 2 * degree + 1;
    KnotVector::new(
        (0..total)
            .map(|i| knot(i as isize - degree as isize))
            .collect(),
    )
}

/// A least-squares fitting problem `D = A P`.
#[derive(Debug, Clone)]
pub struct FitProblem {
    pub data_points: Vec<ControlPoint>,
    pub parameters: Vec<f64>,
    pub degree: usize,
    pub knots: KnotVector,
    pub num_control: usize,
}

impl FitProblem {
    pub fn new(
        data_points: Vec<ControlPoint>,
        parameters: Vec<f64>,
        degree: usize,
        knots: KnotVector,
        num_control: usize,
    ) -> Result<Self> {
        if parameters.len() != data_points.len() {
            return Err(Error::Mismatch(format!(
                "{} parameters for {} data points",
                parameters.len(),
                data_points.len()
            )));
        }
        if num_control < degree + 1 {
            return Err(Error::InvalidArgument(format!(
                "num_control ({num_control}) must exceed the degree ({degree})"
            )));
        }
        if data_points.len() < num_control {
            return Err(Error::TooFewPoints {
                needed: num_control,
                got: data_points.len(),
            });
        }
        if knots.len() != num_control + degree + 1 {
            return Err(Error::Mismatch(format!(
                "expected {} knots, got {}",
                num_control + degree + 1,
                knots.len()
            )));
        }
        if parameters.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("parameters must be nondecreasing".into()));
        }
        let lo = knots[degree];
        let hi = knots[num_control];
        if let Some(&t) = parameters.iter().find(|&&t| !(lo..=hi).contains(&t)) {
            return Err(Error::OutOfDomain { ts: t, lo, hi });
        }
        Ok(Self {
            data_points,
            parameters,
            degree,
            knots,
            num_control,
        })
    }

    fn data_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.data_points.len(), 3, |i, j| self.data_points[i][j])
    }
}

/// Fitted control points and the RMS distance from data to the fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSolution {
    pub control_points: Vec<ControlPoint>,
    pub residual_rms: f64,
}

/// Collocation matrix, one row per data parameter.
pub fn build_collocation(problem: &FitProblem) -> DMatrix<f64> {
    DMatrix::from_fn(problem.parameters.len(), problem.num_control, |i, k| {
        basis_unchecked(
            &problem.knots,
            k,
            problem.degree,
            problem.parameters[i],
            BasisConvention::CLOSED,
        )
    })
}

/// Solve `min ||A P - D||` per axis for a collocation matrix with full
/// column rank.
pub fn solve_collocation(a: &DMatrix<f64>, data: &DMatrix<f64>) -> Result<ControlSolution> {
    let columns = a.ncols();
    let svd = a.clone().svd(true, true);
    let largest = svd.singular_values.max();
    let smallest = svd.singular_values.min();
    let cutoff = RANK_TOLERANCE * largest;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    if rank < columns || largest == 0.0 {
        return Err(Error::RankDeficient {
            rank,
            columns,
            smallest,
            largest,
        });
    }
    let solution = svd
        .solve(data, cutoff)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let residual = a * &solution - data;
    let residual_rms = (residual.norm_squared() / data.nrows() as f64).sqrt();
    let control_points = (0..columns)
        .map(|k| Point3::new(solution[(k, 0)], solution[(k, 1)], solution[(k, 2)]))
        .collect();
    Ok(ControlSolution {
        control_points,
        residual_rms,
    })
}

pub fn solve_least_squares(problem: &FitProblem) -> Result<ControlSolution> {
    solve_collocation(&build_collocation(problem), &problem.data_matrix())
}

/// Elementwise mean of equally long knot vectors.
pub fn average_knot_vectors(knot_vectors: &[KnotVector]) -> Result<KnotVector> {
    let first = knot_vectors
        .first()
        .ok_or_else(|| Error::InvalidArgument("no knot vectors to average".into()))?;
    if let Some(k) = knot_vectors.iter().find(|k| k.len() != first.len()) {
        return Err(Error::Mismatch(format!(
            "knot vector lengths differ: {} vs {}",
            first.len(),
            k.len()
        )));
    }
    let n = knot_vectors.len() as f64;
    // offsets from the first vector keep identical inputs bit-exact
    let mean = (0..first.len())
        .map(|i| first[i] + knot_vectors.iter().map(|k| k[i] - first[i]).sum::<f64>() / n)
        .collect();
    KnotVector::new(mean)
}

/// Fit an open curve through ordered points with clamped knots.
pub fn fit_open_curve(
    points: &[ControlPoint],
    degree: usize,
    num_control: usize,
    scheme: Parameterization,
) -> Result<(BSplineCurve, ControlSolution, Vec<f64>)> {
    let params = parameterize(points, scheme, (0.0, 1.0))?;
    let knots = fit_knots(&params, degree, num_control)?;
    let problem = FitProblem::new(points.to_vec(), params.clone(), degree, knots.clone(), num_control)?;
    let solution = solve_least_squares(&problem)?;
    let curve = BSplineCurve::new(degree, knots, solution.control_points.clone())?;
    Ok((curve, solution, params))
}

/// Closed-curve parameters in `[0, 1)`: chord length including the closing
/// chord back to the first point.
pub fn parameterize_closed(points: &[ControlPoint], scheme: Parameterization) -> Result<Vec<f64>> {
    let mut ring = points.to_vec();
    ring.push(points[0]);
    let mut params = parameterize(&ring, scheme, (0.0, 1.0))?;
    params.pop();
    Ok(params)
}

/// Least-squares fit of a closed curve in the wrapped representation.
///
/// The unknowns are `num_control` distinct control points; wrapped control
/// point `k` aliases distinct point `k mod num_control`, so its basis column
/// is folded onto that unknown. `knots` must have `num_control + 2 degree + 1`
/// entries with domain `[0, 1]`.
pub fn fit_periodic(
    points: &[ControlPoint],
    params: &[f64],
    degree: usize,
    num_control: usize,
    knots: &KnotVector,
) -> Result<(BSplineCurve, ControlSolution)> {
    let wrapped = num_control + degree;
    if knots.len() != wrapped + degree + 1 {
        return Err(Error::Mismatch(format!(
            "periodic fit expects {} knots, got {}",
            wrapped + degree + 1,
            knots.len()
        )));
    }
    if params.len() != points.len() {
        return Err(Error::Mismatch(format!(
            "{} parameters for {} data points",
            params.len(),
            points.len()
        )));
    }
    if points.len() < num_control {
        return Err(Error::TooFewPoints {
            needed: num_control,
            got: points.len(),
        });
    }
    let mut a = DMatrix::zeros(points.len(), num_control);
    for (i, &t) in params.iter().enumerate() {
        for k in 0..wrapped {
            a[(i, k % num_control)] += basis_unchecked(knots, k, degree, t, BasisConvention::CLOSED);
        }
    }
    let data = DMatrix::from_fn(points.len(), 3, |i, j| points[i][j]);
    let solution = solve_collocation(&a, &data)?;
    let cps: Vec<ControlPoint> = (0..wrapped)
        .map(|k| solution.control_points[k % num_control])
        .collect();
    let curve = BSplineCurve::new(degree, knots.clone(), cps)?;
    Ok((curve, solution))
}

/// One row of the fit report CSV.
#[derive(Debug, Clone, Serialize)]
pub struct FitReportRow {
    pub section_id: String,
    pub num_control: usize,
    pub residual_rms: f64,
}

/// CSV with header `section_id,num_control,residual_rms`.
pub fn write_fit_report<W: Write>(rows: &[FitReportRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["section_id", "num_control", "residual_rms"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
