//! Synthetic contour datasets with known ground truth.
//!
//! Every generator is driven by a single seed; identical parameters give
//! identical datasets. Contour ids are `s{slice:03}_{family}`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::contours::Contour;
use crate::error::{Error, Result};

/// Label given to region-of-interest contours in the sidecar.
pub const ROI_LABEL: &str = "roi";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    /// Circles of constant radius on every slice.
    Cylinder,
    /// Elliptical sections of an ellipsoid.
    EllipsoidStack,
    /// A right-lung RoI family with left-lung, aorta, spine and rib
    /// distractors on every slice.
    LungWithDistractors,
}

impl FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cylinder" => Ok(Self::Cylinder),
            "ellipsoid-stack" => Ok(Self::EllipsoidStack),
            "lung-like+distractors" | "lung" => Ok(Self::LungWithDistractors),
            other => Err(Error::InvalidArgument(format!(
                "unknown phantom kind '{other}' (expected cylinder, ellipsoid-stack or lung-like+distractors)"
            ))),
        }
    }
}

impl fmt::Display for PhantomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Cylinder => "cylinder",
            Self::EllipsoidStack => "ellipsoid-stack",
            Self::LungWithDistractors => "lung-like+distractors",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomParams {
    pub slices: usize,
    pub points_per_contour: usize,
    /// Cylinder radius, or the largest equatorial semi-axis of the ellipsoid.
    pub radius: f64,
    /// Standard deviation of the per-vertex Gaussian jitter.
    pub noise: f64,
    pub seed: u64,
}

impl Default for PhantomParams {
    fn default() -> Self {
        Self {
            slices: 10,
            points_per_contour: 64,
            radius: 10.0,
            noise: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelRow {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub contours: Vec<Contour>,
    pub labels: Vec<LabelRow>,
}

impl Phantom {
    pub fn is_roi(&self, id: &str) -> Option<bool> {
        self.labels.iter().find(|l| l.id == id).map(|l| l.label == ROI_LABEL)
    }

    /// CSV with header `id,label`.
    pub fn write_labels<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for l in &self.labels {
            w.serialize(l)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Builder {
    rng: ChaCha8Rng,
    jitter: Normal<f64>,
    count: usize,
    phantom: Phantom,
}

impl Builder {
    fn new(params: &PhantomParams) -> Result<Self> {
        let jitter = Normal::new(0.0, params.noise)
            .map_err(|e| Error::InvalidArgument(format!("noise {}: {e}", params.noise)))?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            jitter,
            count: params.points_per_contour,
            phantom: Phantom {
                contours: Vec::new(),
                labels: Vec::new(),
            },
        })
    }

    fn gauss(&mut self, sigma: f64) -> f64 {
        sigma * Normal::new(0.0, 1.0).expect("unit normal").sample(&mut self.rng)
    }

    /// Star-shaped contour `centre + r(theta) (cos, sin)` rotated by `tilt`.
    fn push(
        &mut self,
        slice: usize,
        family: &str,
        label: &str,
        centre: [f64; 2],
        tilt: f64,
        radius: impl Fn(f64) -> [f64; 2],
    ) {
        let (s, c) = tilt.sin_cos();
        let points = (0..self.count)
            .map(|i| {
                let theta = TAU * i as f64 / self.count as f64;
                let [x, y] = radius(theta);
                let jx = self.jitter.sample(&mut self.rng);
                let jy = self.jitter.sample(&mut self.rng);
                [centre[0] + c * x - s * y + jx, centre[1] + s * x + c * y + jy]
            })
            .collect();
        let id = format!("s{slice:03}_{family}");
        self.phantom.labels.push(LabelRow {
            id: id.clone(),
            label: label.to_string(),
        });
        self.phantom.contours.push(Contour {
            id,
            slice_index: slice as i64,
            points,
        });
    }
}

fn ellipse(a: f64, b: f64) -> impl Fn(f64) -> [f64; 2] {
    move |t| [a * t.cos(), b * t.sin()]
}

/// Ellipse with a smooth inward dent centred at angle `at`.
fn dented(a: f64, b: f64, depth: f64, at: f64) -> impl Fn(f64) -> [f64; 2] {
    move |t| {
        let d = (t - at + PI).rem_euclid(TAU) - PI;
        let f = 1.0 - depth * (-(d / 0.6).powi(2)).exp();
        [f * a * t.cos(), f * b * t.sin()]
    }
}

pub fn generate(kind: PhantomKind, params: &PhantomParams) -> Result<Phantom> {
    if params.slices == 0 {
        return Err(Error::InvalidArgument("slices must be at least 1".into()));
    }
    if params.points_per_contour < 3 {
        return Err(Error::InvalidArgument("contours need at least 3 points".into()));
    }
    if !(params.radius > 0.0 && params.radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius {} must be positive", params.radius)));
    }
    if !(params.noise >= 0.0 && params.noise.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise {} must be nonnegative", params.noise)));
    }
    let mut b = Builder::new(params)?;
    let n = params.slices;
    let r = params.radius;
    match kind {
        PhantomKind::Cylinder => {
            for s in 0..n {
                b.push(s, "c0", ROI_LABEL, [0.0, 0.0], 0.0, ellipse(r, r));
            }
        }
        PhantomKind::EllipsoidStack => {
            for s in 0..n {
                // sections strictly inside the poles so none collapses
                let z = -1.0 + (2.0 * s as f64 + 1.0) / n as f64;
                let f = (1.0 - z * z).sqrt();
                b.push(s, "c0", ROI_LABEL, [0.0, 0.0], 0.0, ellipse(r * f, 0.7 * r * f));
            }
        }
        PhantomKind::LungWithDistractors => {
            for s in 0..n {
                let t = if n > 1 { s as f64 / (n - 1) as f64 } else { 0.5 };
                let grow = 0.6 + 0.4 * (PI * t).sin();
                let j: Vec<f64> = (0..14).map(|_| b.gauss(1.0)).collect();
                let size = 1.0 + 0.03 * j[2];
                let shape = dented(32.0 * grow * size, 55.0 * grow * size, 0.18, 0.0);
                b.push(s, "c0", ROI_LABEL, [-60.0 + j[0], 5.0 + j[1]], 0.05 * j[3], shape);
                let size = 1.0 + 0.03 * j[6];
                let shape = dented(28.0 * grow * size, 52.0 * grow * size, 0.25, PI);
                b.push(s, "c1", "left_lung", [58.0 + j[4], 2.0 + j[5]], 0.05 * j[7], shape);
                let centre = [12.0 + 0.8 * j[8], 25.0 + 0.8 * j[9]];
                b.push(s, "c2", "aorta", centre, 0.3 * j[10], ellipse(10.0, 12.5));
                let centre = [0.8 * j[11], 72.0 + 0.8 * j[12]];
                b.push(s, "c3", "spine", centre, 0.1 * j[13], ellipse(20.0, 14.0));
                let ry = -30.0 + 25.0 * (0.7 * s as f64).sin() + b.gauss(2.0);
                let rx = -108.0 + b.gauss(1.5);
                let tilt = 1.3 + b.gauss(0.1);
                b.push(s, "c4", "rib", [rx, ry], tilt, ellipse(22.0, 3.5));
            }
        }
    }
    Ok(b.phantom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contours::FeatureVector;

    #[test]
    fn cylinder_construction() {
        let p = generate(PhantomKind::Cylinder, &PhantomParams::default()).unwrap();
        assert_eq!(p.contours.len(), 10);
        assert!(p.contours.iter().all(|c| c.points.len() == 64));
        assert!(p.labels.iter().all(|l| l.label == ROI_LABEL));
        assert_eq!(p.contours[3].id, "s003_c0");
        for c in &p.contours {
            for q in &c.points {
                assert!(((q[0] * q[0] + q[1] * q[1]).sqrt() - 10.0).abs() < 0.1);
            }
        }
    }

    #[test]
    fn same_seed_same_data() {
        let params = PhantomParams {
            seed: 5,
            slices: 20,
            ..Default::default()
        };
        let a = generate(PhantomKind::LungWithDistractors, &params).unwrap();
        let b = generate(PhantomKind::LungWithDistractors, &params).unwrap();
        assert_eq!(a, b);
        let c = generate(PhantomKind::LungWithDistractors, &PhantomParams { seed: 6, ..params }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn lung_families_separate_in_feature_space() {
        let params = PhantomParams {
            slices: 50,
            ..Default::default()
        };
        let p = generate(PhantomKind::LungWithDistractors, &params).unwrap();
        assert_eq!(p.contours.len(), 250);
        // the RoI family must stay apart from each distractor in at least
        // one of {cx, cy, phi2}
        let feats: Vec<(bool, FeatureVector)> = p
            .contours
            .iter()
            .map(|c| (p.is_roi(&c.id).unwrap(), FeatureVector::from_contour(c).unwrap()))
            .collect();
        let roi: Vec<_> = feats.iter().filter(|f| f.0).map(|f| f.1).collect();
        let other: Vec<_> = feats.iter().filter(|f| !f.0).map(|f| f.1).collect();
        let spread = |f: &dyn Fn(&FeatureVector) -> f64, v: &[FeatureVector]| {
            v.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
        };
        let (cx_lo, cx_hi) = spread(&|f| f.cx, &roi);
        let (p2_lo, p2_hi) = spread(&|f| f.hu[1], &roi);
        for o in &other {
            let apart = o.cx < cx_lo - 5.0 || o.cx > cx_hi + 5.0 || o.hu[1] < p2_lo - 0.2 || o.hu[1] > p2_hi + 0.2;
            assert!(apart, "{o:?} overlaps the RoI family");
        }
    }

    #[test]
    fn ellipsoid_sections_shrink_towards_poles() {
        let p = generate(PhantomKind::EllipsoidStack, &PhantomParams { noise: 0.0, ..Default::default() }).unwrap();
        let width = |c: &Contour| c.points.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max);
        assert!(width(&p.contours[0]) < width(&p.contours[4]));
        assert!((width(&p.contours[0]) - width(&p.contours[9])).abs() < 1e-12);
    }

    #[test]
    fn bad_params() {
        let bad = PhantomParams {
            points_per_contour: 2,
            ..Default::default()
        };
        assert!(generate(PhantomKind::Cylinder, &bad).is_err());
        assert!(generate(PhantomKind::Cylinder, &PhantomParams { noise: -1.0, ..Default::default() }).is_err());
        assert!("torus".parse::<PhantomKind>().is_err());
        assert_eq!("lung-like+distractors".parse::<PhantomKind>().unwrap().to_string(), "lung-like+distractors");
    }
}
