//! Contour descriptors and region-of-interest classification.
//!
//! Each contour is described by its region centroid and log-mapped Hu
//! invariants. A selected subset of those features is z-score normalized,
//! clustered with k-means, and new contours are assigned to the nearest
//! centroid; the RoI cluster is the one nearest a user-chosen exemplar.

mod kmeans;
mod moments;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use kmeans::{kmeans, KMeansFit, CONVERGENCE_SHIFT, MAX_ITERATIONS};
pub use moments::{contour_moments, hu_moments, log_map, CentralMoments};

/// A closed planar contour on one slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub id: String,
    #[serde(rename = "slice")]
    pub slice_index: i64,
    pub points: Vec<[f64; 2]>,
}

impl Contour {
    pub fn moments(&self) -> Result<CentralMoments> {
        contour_moments(&self.points).map_err(|e| match e {
            Error::DegenerateContour(msg) => Error::DegenerateContour(format!("{}: {msg}", self.id)),
            other => other,
        })
    }
}

/// Parse a JSON array of `{ "id", "slice", "points" }` objects.
pub fn read_contours<R: std::io::Read>(reader: R) -> Result<Vec<Contour>> {
    Ok(serde_json::from_reader(reader)?)
}

pub fn write_contours<W: Write>(contours: &[Contour], mut out: W) -> Result<()> {
    serde_json::to_writer(&mut out, contours)?;
    writeln!(out)?;
    Ok(())
}

/// Centroid and log-mapped Hu invariants of a contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub cx: f64,
    pub cy: f64,
    pub hu: [f64; 7],
}

impl FeatureVector {
    pub fn from_contour(c: &Contour) -> Result<Self> {
        let m = c.moments()?;
        let hu = hu_moments(&m)?.map(log_map);
        Ok(Self {
            cx: m.centroid[0],
            cy: m.centroid[1],
            hu,
        })
    }
}

/// Which features enter clustering. Hu orders are 1-based (`2` is the
/// second invariant).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSelection {
    pub centroid: bool,
    pub hu_orders: Vec<usize>,
}

impl Default for FeatureSelection {
    /// Centroid plus the second Hu invariant.
    fn default() -> Self {
        Self {
            centroid: true,
            hu_orders: vec![2],
        }
    }
}

impl FeatureSelection {
    pub fn all() -> Self {
        Self {
            centroid: true,
            hu_orders: (1..=7).collect(),
        }
    }

    pub fn new(centroid: bool, hu_orders: Vec<usize>) -> Result<Self> {
        if let Some(&o) = hu_orders.iter().find(|&&o| !(1..=7).contains(&o)) {
            return Err(Error::InvalidArgument(format!("Hu moment order {o} is not in 1..=7")));
        }
        if !centroid && hu_orders.is_empty() {
            return Err(Error::InvalidArgument("no features selected".into()));
        }
        Ok(Self { centroid, hu_orders })
    }

    pub fn dims(&self) -> usize {
        2 * usize::from(self.centroid) + self.hu_orders.len()
    }

    pub fn select(&self, f: &FeatureVector) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dims());
        if self.centroid {
            v.push(f.cx);
            v.push(f.cy);
        }
        v.extend(self.hu_orders.iter().map(|&o| f.hu[o - 1]));
        v
    }
}

/// Per-dimension z-score normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

impl Normalization {
    pub fn fit(features: &[Vec<f64>]) -> Result<Self> {
        let first = features
            .first()
            .ok_or_else(|| Error::InvalidArgument("no feature vectors".into()))?;
        let dim = first.len();
        let n = features.len() as f64;
        let mut mean = vec![0.0; dim];
        for f in features {
            if f.len() != dim {
                return Err(Error::Mismatch("feature vectors differ in length".into()));
            }
            for (m, v) in mean.iter_mut().zip(f) {
                *m += v / n;
            }
        }
        let mut stddev = vec![0.0; dim];
        for f in features {
            for ((s, v), m) in stddev.iter_mut().zip(f).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        for (d, s) in stddev.iter_mut().enumerate() {
            *s = s.sqrt();
            if !(*s > 0.0 && s.is_finite()) {
                return Err(Error::ConstantDimension(d));
            }
        }
        Ok(Self { mean, stddev })
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        f.iter()
            .zip(self.mean.iter().zip(&self.stddev))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.mean.iter().zip(&self.stddev))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }
}

/// Fitted clustering of normalized contour features.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub normalization: Normalization,
    pub selection: FeatureSelection,
    pub roi_cluster: usize,
}

/// Features of every contour, computed in parallel, in input order.
pub fn extract_features(contours: &[Contour]) -> Result<Vec<FeatureVector>> {
    contours.par_iter().map(FeatureVector::from_contour).collect()
}

impl ClusterModel {
    /// Normalize the selected features, cluster them, and mark the cluster
    /// nearest to `exemplar` as the RoI.
    pub fn fit(
        features: &[FeatureVector],
        selection: FeatureSelection,
        k: usize,
        seed: u64,
        exemplar: &FeatureVector,
    ) -> Result<Self> {
        let raw: Vec<Vec<f64>> = features.iter().map(|f| selection.select(f)).collect();
        let normalization = Normalization::fit(&raw)?;
        let normalized: Vec<Vec<f64>> = raw.iter().map(|f| normalization.apply(f)).collect();
        let fit = kmeans(&normalized, k, seed)?;
        let ex = normalization.apply(&selection.select(exemplar));
        let (roi_cluster, _) = kmeans::nearest(&ex, &fit.centroids);
        Ok(Self {
            k,
            centroids: fit.centroids,
            normalization,
            selection,
            roi_cluster,
        })
    }

    /// Nearest cluster and Euclidean distance to it in normalized space.
    pub fn assign(&self, f: &FeatureVector) -> (usize, f64) {
        let z = self.normalization.apply(&self.selection.select(f));
        let (i, d2) = kmeans::nearest(&z, &self.centroids);
        (i, d2.sqrt())
    }

    pub fn classify_features(&self, f: &FeatureVector) -> (bool, f64) {
        let (i, d) = self.assign(f);
        (i == self.roi_cluster, d)
    }
}

/// `(is_roi, distance)` for a contour.
pub fn classify_roi(model: &ClusterModel, c: &Contour) -> Result<(bool, f64)> {
    let f = FeatureVector::from_contour(c)?;
    Ok(model.classify_features(&f))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub id: String,
    pub slice: i64,
    pub is_roi: bool,
    pub distance: f64,
}

/// CSV with header `id,slice,is_roi,distance`.
pub fn write_classification<W: Write>(rows: &[Classification], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["id", "slice", "is_roi", "distance"])?;
    }
    w.flush()?;
    Ok(())
}
