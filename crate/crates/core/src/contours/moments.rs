//! Region moments of simple polygons by Green's theorem.

use crate::error::{Error, Result};

/// Area, centroid and central moments up to order 3 of a polygon region.
///
/// Moments are taken over the enclosed region and normalized to positive
/// area, so clockwise and counter-clockwise vertex orders agree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralMoments {
    pub area: f64,
    pub centroid: [f64; 2],
    pub mu20: f64,
    pub mu11: f64,
    pub mu02: f64,
    pub mu30: f64,
    pub mu21: f64,
    pub mu12: f64,
    pub mu03: f64,
}

/// Raw moments `m_pq` (p + q <= 3) of the polygon, signed by orientation.
fn raw_moments(points: &[[f64; 2]]) -> [f64; 10] {
    // [m00, m10, m01, m20, m11, m02, m30, m21, m12, m03]
    let mut m = [0.0; 10];
    let n = points.len();
    for i in 0..n {
        let [x0, y0] = points[i];
        let [x1, y1] = points[(i + 1) % n];
        let a = x0 * y1 - x1 * y0;
        m[0] += a;
        m[1] += a * (x0 + x1);
        m[2] += a * (y0 + y1);
        m[3] += a * (x0 * x0 + x0 * x1 + x1 * x1);
        m[4] += a * (2.0 * x0 * y0 + x0 * y1 + x1 * y0 + 2.0 * x1 * y1);
        m[5] += a * (y0 * y0 + y0 * y1 + y1 * y1);
        m[6] += a * (x0 * x0 * x0 + x0 * x0 * x1 + x0 * x1 * x1 + x1 * x1 * x1);
        m[7] += a * (x0 * x0 * (3.0 * y0 + y1) + 2.0 * x0 * x1 * (y0 + y1) + x1 * x1 * (y0 + 3.0 * y1));
        m[8] += a * (y0 * y0 * (3.0 * x0 + x1) + 2.0 * y0 * y1 * (x0 + x1) + y1 * y1 * (x0 + 3.0 * x1));
        m[9] += a * (y0 * y0 * y0 + y0 * y0 * y1 + y0 * y1 * y1 + y1 * y1 * y1);
    }
    let scale = [2.0, 6.0, 6.0, 12.0, 24.0, 12.0, 20.0, 60.0, 60.0, 20.0];
    for (v, s) in m.iter_mut().zip(scale) {
        *v /= s;
    }
    m
}

pub fn contour_moments(points: &[[f64; 2]]) -> Result<CentralMoments> {
    if points.len() < 3 {
        return Err(Error::DegenerateContour(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateContour("non-finite coordinate".into()));
    }
    // integrate about the vertex mean: far-off coordinates would cancel
    let n = points.len() as f64;
    let origin = points
        .iter()
        .fold([0.0, 0.0], |acc, p| [acc[0] + p[0] / n, acc[1] + p[1] / n]);
    let local: Vec<[f64; 2]> = points.iter().map(|p| [p[0] - origin[0], p[1] - origin[1]]).collect();
    let first = raw_moments(&local);
    let area = first[0].abs();
    let scale = local
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    if area <= 1e-14 * scale * scale {
        return Err(Error::DegenerateContour("zero enclosed area".into()));
    }
    let offset = [first[1] / first[0], first[2] / first[0]];
    let centroid = [origin[0] + offset[0], origin[1] + offset[1]];
    // central moments from the polygon translated to its centroid
    let shifted: Vec<[f64; 2]> = local
        .iter()
        .map(|p| [p[0] - offset[0], p[1] - offset[1]])
        .collect();
    let m = raw_moments(&shifted);
    let sign = first[0].signum();
    Ok(CentralMoments {
        area,
        centroid,
        mu20: sign * m[3],
        mu11: sign * m[4],
        mu02: sign * m[5],
        mu30: sign * m[6],
        mu21: sign * m[7],
        mu12: sign * m[8],
        mu03: sign * m[9],
    })
}

/// The seven Hu invariants of the normalized central moments
/// `eta_pq = mu_pq / mu00^(1 + (p+q)/2)`.
pub fn hu_moments(m: &CentralMoments) -> Result<[f64; 7]> {
    if !(m.area > 0.0 && m.area.is_finite()) {
        return Err(Error::DegenerateContour(format!("area {}", m.area)));
    }
    let a2 = m.area * m.area;
    let a25 = a2 * m.area.sqrt();
    let n20 = m.mu20 / a2;
    let n11 = m.mu11 / a2;
    let n02 = m.mu02 / a2;
    let n30 = m.mu30 / a25;
    let n21 = m.mu21 / a25;
    let n12 = m.mu12 / a25;
    let n03 = m.mu03 / a25;

    let s1 = n30 + n12;
    let s2 = n21 + n03;
    let d1 = n30 - 3.0 * n12;
    let d2 = 3.0 * n21 - n03;

    let h1 = n20 + n02;
    let h2 = (n20 - n02).powi(2) + 4.0 * n11 * n11;
    let h3 = d1 * d1 + d2 * d2;
    let h4 = s1 * s1 + s2 * s2;
    let h5 = d1 * s1 * (s1 * s1 - 3.0 * s2 * s2) + d2 * s2 * (3.0 * s1 * s1 - s2 * s2);
    let h6 = (n20 - n02) * (s1 * s1 - s2 * s2) + 4.0 * n11 * s1 * s2;
    let h7 = d2 * s1 * (s1 * s1 - 3.0 * s2 * s2) - d1 * s2 * (3.0 * s1 * s1 - s2 * s2);
    Ok([h1, h2, h3, h4, h5, h6, h7])
}

/// Signed log magnitude `sign(h) log10(|h| + 1e-30)`.
pub fn log_map(h: f64) -> f64 {
    h.signum() * (h.abs() + 1e-30).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{PI, TAU};

    fn unit_square() -> Vec<[f64; 2]> {
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    }

    fn disk(n: usize) -> Vec<[f64; 2]> {
        (0..n)
            .map(|i| {
                let a = TAU * i as f64 / n as f64;
                [a.cos(), a.sin()]
            })
            .collect()
    }

    #[test]
    fn square_area_and_centroid() {
        let m = contour_moments(&unit_square()).unwrap();
        assert_abs_diff_eq!(m.area, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.centroid[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m.centroid[1], 0.5, epsilon = 1e-15);
        // mu20 = integral of (x - 1/2)^2 over the square = 1/12
        assert_abs_diff_eq!(m.mu20, 1.0 / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.mu02, 1.0 / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.mu11, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn orientation_does_not_matter() {
        let mut cw = unit_square();
        cw.reverse();
        assert_eq!(contour_moments(&cw).unwrap(), contour_moments(&unit_square()).unwrap());
    }

    #[test]
    fn translation_keeps_central_moments() {
        let a = contour_moments(&unit_square()).unwrap();
        let moved: Vec<_> = unit_square().iter().map(|p| [p[0] + 5.0, p[1] + 7.0]).collect();
        let b = contour_moments(&moved).unwrap();
        for (x, y) in [(a.mu20, b.mu20), (a.mu11, b.mu11), (a.mu02, b.mu02), (a.mu30, b.mu30), (a.mu03, b.mu03)] {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(b.centroid[0], 5.5, epsilon = 1e-12);
    }

    #[test]
    fn disk_second_moments() {
        let m = contour_moments(&disk(256)).unwrap();
        assert_abs_diff_eq!(m.mu20, PI / 4.0, epsilon = 1e-3);
        assert_abs_diff_eq!(m.mu02, PI / 4.0, epsilon = 1e-3);
    }

    #[test]
    fn disk_hu_values() {
        let h = hu_moments(&contour_moments(&disk(256)).unwrap()).unwrap();
        assert_abs_diff_eq!(h[0], 1.0 / TAU, epsilon = 1e-3);
        for v in &h[1..] {
            assert!(v.abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn degenerate_contours() {
        assert!(contour_moments(&[[0.0, 0.0], [1.0, 1.0]]).is_err());
        assert!(matches!(
            contour_moments(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]),
            Err(Error::DegenerateContour(_))
        ));
    }

    #[test]
    fn third_order_moments_against_grid_integration() {
        // L-shaped polygon, integrated on a fine midpoint grid
        let poly = vec![[0.0, 0.0], [3.0, 0.0], [3.0, 1.0], [1.0, 1.0], [1.0, 2.5], [0.0, 2.5]];
        let m = contour_moments(&poly).unwrap();
        let inside = |x: f64, y: f64| (y < 1.0 && x < 3.0) || (x < 1.0 && y < 2.5);
        let n = 1500;
        let (hx, hy) = (3.0 / n as f64, 2.5 / n as f64);
        let mut acc = [0.0; 5];
        for i in 0..n {
            for j in 0..n {
                let x = (i as f64 + 0.5) * hx;
                let y = (j as f64 + 0.5) * hy;
                if inside(x, y) {
                    let dx = x - m.centroid[0];
                    let dy = y - m.centroid[1];
                    acc[0] += 1.0;
                    acc[1] += dx * dx * dx;
                    acc[2] += dx * dx * dy;
                    acc[3] += dx * dy * dy;
                    acc[4] += dy * dy * dy;
                }
            }
        }
        let w = hx * hy;
        assert_abs_diff_eq!(acc[0] * w, m.area, epsilon = 1e-6);
        assert_abs_diff_eq!(acc[1] * w, m.mu30, epsilon = 1e-4);
        assert_abs_diff_eq!(acc[2] * w, m.mu21, epsilon = 1e-4);
        assert_abs_diff_eq!(acc[3] * w, m.mu12, epsilon = 1e-4);
        assert_abs_diff_eq!(acc[4] * w, m.mu03, epsilon = 1e-4);
    }

    #[test]
    fn log_map_signs() {
        assert_abs_diff_eq!(log_map(1e-3), -3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(log_map(-1e-3), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(log_map(0.0), -30.0, epsilon = 1e-12);
    }
}
