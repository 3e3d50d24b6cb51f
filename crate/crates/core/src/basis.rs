//! Knot vectors and B-spline basis functions.
//!
//! Basis functions are evaluated with the Cox-de Boor recursion. The
//! degree-0 functions are indicators of half-open knot spans `[t_k, t_{k+1})`;
//! with [`BasisConvention::right_end_closed`] the last nonempty span is also
//! closed on the right so that partition of unity holds at the final knot.

use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};

/// Nondecreasing sequence of parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct KnotVector {
    values: Vec<f64>,
    last_span: Option<usize>,
}

impl KnotVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidKnots(format!(
                "need at least 2 knots, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidKnots(format!("knot {i} is not finite")));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidKnots(format!(
                "knots decrease at index {} ({} < {})",
                i + 1,
                values[i + 1],
                values[i]
            )));
        }
        let last_span = values.windows(2).rposition(|w| w[0] < w[1]);
        Ok(Self { values, last_span })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Index of the last span `[t_j, t_{j+1}]` with nonzero length.
    pub fn last_nonempty_span(&self) -> Option<usize> {
        self.last_span
    }
}

impl std::ops::Index<usize> for KnotVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl TryFrom<Vec<f64>> for KnotVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<KnotVector> for Vec<f64> {
    fn from(k: KnotVector) -> Self {
        k.values
    }
}

/// Segment index and degree of a single basis function `B_k^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisIndex {
    pub k: usize,
    pub degree: usize,
}

impl BasisIndex {
    pub fn new(k: usize, degree: usize) -> Self {
        Self { k, degree }
    }

    fn check(&self, knots: &KnotVector) -> Result<()> {
        let needed = self.k + self.degree + 2;
        if needed > knots.len() {
            return Err(Error::IndexOutOfRange {
                k: self.k,
                degree: self.degree,
                needed,
                available: knots.len(),
            });
        }
        Ok(())
    }
}

/// Endpoint rule for the degree-0 indicator functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BasisConvention {
    /// Close the last nonempty knot span on the right.
    pub right_end_closed: bool,
}

impl BasisConvention {
    pub const HALF_OPEN: Self = Self {
        right_end_closed: false,
    };
    pub const CLOSED: Self = Self {
        right_end_closed: true,
    };
}

/// Literal unit step: 1 for strictly positive arguments, 0 otherwise.
pub fn unit_step(ts: f64) -> Result<f64> {
    if !ts.is_finite() {
        return Err(Error::NonFinite(format!("unit_step argument {ts}")));
    }
    Ok(if ts > 0.0 { 1.0 } else { 0.0 })
}

/// Indicator of the `k`-th knot span.
pub fn basis_degree0(knots: &KnotVector, k: usize, ts: f64, conv: BasisConvention) -> Result<f64> {
    BasisIndex::new(k, 0).check(knots)?;
    if !ts.is_finite() {
        return Err(Error::NonFinite(format!("basis parameter {ts}")));
    }
    Ok(span_indicator(knots, k, ts, conv))
}

#[inline]
fn span_indicator(knots: &KnotVector, k: usize, ts: f64, conv: BasisConvention) -> f64 {
    let lo = knots[k];
    let hi = knots[k + 1];
    if lo >= hi {
        return 0.0;
    }
    if lo <= ts && ts < hi {
        return 1.0;
    }
    if conv.right_end_closed && ts == hi && knots.last_span == Some(k) {
        return 1.0;
    }
    0.0
}

#[inline]
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Value of `B_k^n(ts)` by the Cox-de Boor recursion.
///
/// Intermediate values are memoized in a triangular table over `(k, n)`, so
/// the cost is quadratic in the degree. Terms with a zero denominator
/// contribute 0.
pub fn basis(knots: &KnotVector, idx: BasisIndex, ts: f64, conv: BasisConvention) -> Result<f64> {
    idx.check(knots)?;
    if !ts.is_finite() {
        return Err(Error::NonFinite(format!("basis parameter {ts}")));
    }
    Ok(basis_unchecked(knots, idx.k, idx.degree, ts, conv))
}

pub(crate) fn basis_unchecked(
    knots: &KnotVector,
    k: usize,
    degree: usize,
    ts: f64,
    conv: BasisConvention,
) -> f64 {
    if ts < knots[k] || ts > knots[k + degree + 1] {
        return 0.0;
    }
    let t = knots.values();
    // table[j] holds B_{k+j}^{d} for the current degree d
    let mut table: SmallVec<[f64; 8]> = smallvec![0.0; degree + 1];
    for j in 0..=degree {
        table[j] = span_indicator(knots, k + j, ts, conv);
    }
    for d in 1..=degree {
        for j in 0..=(degree - d) {
            let i = k + j;
            let left = ratio(ts - t[i], t[i + d] - t[i]) * table[j];
            let right = ratio(t[i + d + 1] - ts, t[i + d + 1] - t[i + 1]) * table[j + 1];
            table[j] = left + right;
        }
    }
    table[0]
}

/// Closed-form uniform blending polynomial `B_0^n(ts)` on integer knots,
/// `n` in 1..=3.
///
/// Pieces are selected on half-open unit intervals `[j, j+1)`.
pub fn uniform_basis_closed_form(n: usize, ts: f64) -> Result<f64> {
    if !ts.is_finite() {
        return Err(Error::NonFinite(format!("closed-form parameter {ts}")));
    }
    if !(1..=3).contains(&n) {
        return Err(Error::UnsupportedDegree {
            degree: n,
            reason: "closed forms exist for degrees 1, 2 and 3",
        });
    }
    if ts < 0.0 || ts >= (n + 1) as f64 {
        return Ok(0.0);
    }
    let piece = ts.floor() as usize;
    let t = ts;
    let v = match (n, piece) {
        (1, 0) => t,
        (1, _) => 2.0 - t,
        (2, 0) => 0.5 * t * t,
        (2, 1) => 0.5 * (t * (2.0 - t) + (3.0 - t) * (t - 1.0)),
        (2, _) => 0.5 * (3.0 - t) * (3.0 - t),
        (3, 0) => t * t * t / 6.0,
        (3, 1) => {
            (t * t * (2.0 - t) + t * (t - 1.0) * (3.0 - t) + (t - 1.0) * (t - 1.0) * (4.0 - t))
                / 6.0
        }
        (3, 2) => {
            (t * (3.0 - t) * (3.0 - t)
                + (t - 1.0) * (3.0 - t) * (4.0 - t)
                + (t - 2.0) * (4.0 - t) * (4.0 - t))
                / 6.0
        }
        (_, _) => (4.0 - t).powi(3) / 6.0,
    };
    Ok(v)
}

/// Clamped uniform knot vector of length `num_control + order`.
///
/// The first `order` knots are 0, interior knots step by 1 and the final
/// `order` knots repeat the maximum `num_control - order + 1`.
pub fn make_clamped_knots(num_control: usize, order: usize) -> Result<KnotVector> {
    if order == 0 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    if num_control < order {
        return Err(Error::InvalidArgument(format!(
            "num_control ({num_control}) must be at least the order ({order})"
        )));
    }
    let top = (num_control - order + 1) as f64;
    let mut values = Vec::with_capacity(num_control + order);
    values.extend(std::iter::repeat_n(0.0, order));
    values.extend((1..=num_control - order).map(|i| i as f64));
    values.extend(std::iter::repeat_n(top, order));
    KnotVector::new(values)
}

/// Integer knots `{0, 1, ..., count - 1}`.
pub fn make_integer_knots(count: usize) -> Result<KnotVector> {
    if count < 2 {
        return Err(Error::InvalidArgument(format!(
            "integer knot vector needs at least 2 knots, got {count}"
        )));
    }
    KnotVector::new((0..count).map(|i| i as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn kv(v: &[f64]) -> KnotVector {
        KnotVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn knot_vector_rejects_bad_input() {
        assert!(KnotVector::new(vec![0.0]).is_err());
        assert!(KnotVector::new(vec![0.0, 2.0, 1.0]).is_err());
        assert!(KnotVector::new(vec![0.0, f64::NAN]).is_err());
        assert!(KnotVector::new(vec![1.0, 1.0]).is_ok());
    }

    #[test]
    fn unit_step_values() {
        assert_eq!(unit_step(0.5).unwrap(), 1.0);
        assert_eq!(unit_step(0.0).unwrap(), 0.0);
        assert_eq!(unit_step(-3.0).unwrap(), 0.0);
        assert!(unit_step(f64::INFINITY).is_err());
    }

    #[test]
    fn degree_zero_indicator() {
        let k = kv(&[0.0, 1.0, 2.0]);
        let c = BasisConvention::default();
        assert_eq!(basis_degree0(&k, 0, 0.5, c).unwrap(), 1.0);
        assert_eq!(basis_degree0(&k, 0, 1.5, c).unwrap(), 0.0);
        assert_eq!(basis_degree0(&k, 0, 1.0, c).unwrap(), 0.0);
        assert_eq!(basis_degree0(&k, 1, 1.0, c).unwrap(), 1.0);
        assert_eq!(basis_degree0(&k, 1, 2.0, c).unwrap(), 0.0);
        assert_eq!(basis_degree0(&k, 1, 2.0, BasisConvention::CLOSED).unwrap(), 1.0);
        assert!(basis_degree0(&k, 2, 0.5, c).is_err());
    }

    #[test]
    fn zero_length_span_vanishes() {
        // Eq. 4 literally: us(ts - 0) * us(0 - ts) needs ts > 0 and ts < 0
        let k = kv(&[0.0, 0.0, 1.0]);
        for ts in [-1.0, 0.0, 0.5, 1.0] {
            for c in [BasisConvention::HALF_OPEN, BasisConvention::CLOSED] {
                assert_eq!(basis_degree0(&k, 0, ts, c).unwrap(), 0.0);
                let literal = unit_step(ts - 0.0).unwrap() * unit_step(0.0 - ts).unwrap();
                assert_eq!(literal, 0.0);
            }
        }
    }

    #[test]
    fn cubic_on_integer_knots_at_two() {
        let k = make_integer_knots(6).unwrap();
        let v = basis(&k, BasisIndex::new(0, 3), 2.0, BasisConvention::default()).unwrap();
        assert_abs_diff_eq!(v, 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn hat_apex_is_one() {
        let k = make_integer_knots(4).unwrap();
        let c = BasisConvention::default();
        assert_eq!(basis(&k, BasisIndex::new(0, 1), 1.0, c).unwrap(), 1.0);
        // partition of unity at the knot: B_0^1(1) + B_1^1(1)
        let sum = basis(&k, BasisIndex::new(0, 1), 1.0, c).unwrap()
            + basis(&k, BasisIndex::new(1, 1), 1.0, c).unwrap();
        assert_eq!(sum, 1.0);
    }

    #[test]
    fn basis_zero_outside_support() {
        let k = kv(&[0.0, 0.5, 1.5, 2.0, 4.0, 7.0]);
        for ts in [-1.0, -1e-12, 4.0 + 1e-9, 100.0] {
            assert_eq!(basis(&k, BasisIndex::new(0, 3), ts, BasisConvention::CLOSED).unwrap(), 0.0);
        }
    }

    #[test]
    fn basis_errors() {
        let k = make_integer_knots(4).unwrap();
        assert!(basis(&k, BasisIndex::new(0, 3), 0.5, BasisConvention::default()).is_err());
        assert!(basis(&k, BasisIndex::new(0, 2), f64::NAN, BasisConvention::default()).is_err());
    }

    #[test]
    fn closed_form_examples() {
        assert_abs_diff_eq!(uniform_basis_closed_form(2, 1.5).unwrap(), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(
            uniform_basis_closed_form(3, 1.5).unwrap(),
            2.875 / 6.0,
            epsilon = 1e-15
        );
        assert_eq!(uniform_basis_closed_form(3, 5.0).unwrap(), 0.0);
        assert!(uniform_basis_closed_form(4, 1.0).is_err());
        assert!(uniform_basis_closed_form(0, 1.0).is_err());
    }

    #[test]
    fn clamped_knot_examples() {
        assert_eq!(
            make_clamped_knots(4, 4).unwrap().values(),
            &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]
        );
        assert_eq!(
            make_clamped_knots(5, 4).unwrap().values(),
            &[0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 2.0, 2.0, 2.0]
        );
        assert_eq!(make_clamped_knots(1, 1).unwrap().values(), &[0.0, 1.0]);
        assert!(make_clamped_knots(3, 4).is_err());
    }

    #[test]
    fn clamped_five_four_partition() {
        let k = make_clamped_knots(5, 4).unwrap();
        for i in 0..=200 {
            let ts = 2.0 * i as f64 / 200.0;
            let s: f64 = (0..5)
                .map(|j| basis(&k, BasisIndex::new(j, 3), ts, BasisConvention::CLOSED).unwrap())
                .sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn integer_knot_examples() {
        assert_eq!(make_integer_knots(2).unwrap().values(), &[0.0, 1.0]);
        assert_eq!(
            make_integer_knots(6).unwrap().values(),
            &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
        );
        assert!(make_integer_knots(0).is_err());
    }

    #[test]
    fn knot_vector_serde_validates() {
        let k: KnotVector = serde_json::from_str("[0, 0, 1, 1]").unwrap();
        assert_eq!(k.last_nonempty_span(), Some(1));
        assert!(serde_json::from_str::<KnotVector>("[1, 0]").is_err());
    }
}
