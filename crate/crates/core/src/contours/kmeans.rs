//! Seeded k-means (Lloyd iterations from k-means++ seeding).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 300;
pub const CONVERGENCE_SHIFT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

impl KMeansFit {
    pub fn inertia(&self) -> f64 {
        *self.inertia_history.last().unwrap_or(&0.0)
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and squared distance of the nearest centroid; ties go to the lower
/// index.
pub(crate) fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn plus_plus_seed(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = d2.iter().rposition(|&d| d > 0.0).unwrap_or(0);
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // every point already coincides with a centroid
            rng.random_range(0..points.len())
        };
        let c = points[next].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Cluster `points` into `k` groups.
///
/// Stops when no centroid moves more than [`CONVERGENCE_SHIFT`] or after
/// [`MAX_ITERATIONS`]. A cluster left empty is re-seeded with the point
/// farthest from its own centroid.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansFit> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if points.len() < k {
        return Err(Error::InvalidArgument(format!(
            "k ({k}) exceeds the number of points ({})",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Mismatch("feature vectors differ in length".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("feature value".into()));
    }
    if points.len() > 1 {
        for d in 0..dim {
            let first = points[0][d];
            if points.iter().all(|p| p[d] == first) {
                return Err(Error::ConstantDimension(d));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_seed(points, k, &mut rng);
    let mut assignments = vec![0; points.len()];
    let mut inertia_history = Vec::new();
    let mut iterations = 0;

    loop {
        let mut inertia = 0.0;
        for (a, p) in assignments.iter_mut().zip(points) {
            let (i, d) = nearest(p, &centroids);
            *a = i;
            inertia += d;
        }
        inertia_history.push(inertia);
        if iterations == MAX_ITERATIONS {
            break;
        }
        iterations += 1;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assignments.iter().zip(points) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut updated: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .zip(&centroids)
            .map(|((s, &n), old)| {
                if n == 0 {
                    old.clone()
                } else {
                    s.into_iter().map(|v| v / n as f64).collect()
                }
            })
            .collect();
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..points.len())
                .max_by(|&i, &j| {
                    let di = squared_distance(&points[i], &updated[assignments[i]]);
                    let dj = squared_distance(&points[j], &updated[assignments[j]]);
                    di.total_cmp(&dj).then(j.cmp(&i))
                })
                .expect("points is nonempty");
            let src = assignments[far];
            updated[c] = points[far].clone();
            assignments[far] = c;
            counts[c] = 1;
            counts[src] -= 1;
        }
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        if shift < CONVERGENCE_SHIFT {
            let mut inertia = 0.0;
            for (a, p) in assignments.iter_mut().zip(points) {
                let (i, d) = nearest(p, &centroids);
                *a = i;
                inertia += d;
            }
            inertia_history.push(inertia);
            break;
        }
    }

    Ok(KMeansFit {
        centroids,
        assignments,
        inertia_history,
        iterations,
    })
}
