//! K-means clustering of flow samples in scaled (x, v) space.

use crate::error::{Error, Result};
use crate::util::rng::CounterRng;

use super::{fit_affine_field, FlowField};

#[derive(Debug, Clone)]
pub struct ClusterOpts {
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ClusterOpts {
    fn default() -> Self {
        ClusterOpts { seed: 0, max_iter: 100, tol: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct Cluster {
    /// Sample indices, ascending.
    pub members: Vec<usize>,
    /// Center in original pixel units.
    pub center_x: [f64; 2],
    /// Center velocity in px/frame.
    pub center_v: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct Clustering {
    pub clusters: Vec<Cluster>,
    /// Weighted within-cluster sum of squares in the normalized space.
    pub wcss: f64,
    pub sigma_x: f64,
    pub sigma_v: f64,
    pub iterations: usize,
    /// Per-sample cluster assignment.
    pub labels: Vec<usize>,
}

fn pooled_std(values: impl Iterator<Item = [f64; 2]> + Clone) -> f64 {
    let mut n = 0usize;
    let mut mean = [0.0f64; 2];
    for v in values.clone() {
        mean[0] += v[0];
        mean[1] += v[1];
        n += 1;
    }
    if n == 0 {
        return 1.0;
    }
    mean[0] /= n as f64;
    mean[1] /= n as f64;
    let mut acc = 0.0;
    for v in values {
        acc += (v[0] - mean[0]).powi(2) + (v[1] - mean[1]).powi(2);
    }
    let sigma = (acc / (2.0 * n as f64)).sqrt();
    if sigma > 1e-12 {
        sigma
    } else {
        1.0
    }
}

/// Lloyd's iterations on 4-vectors (x/σ_x, v/σ_v), k-means++ seeded by the
/// deterministic counter generator. Assignment ties break to the lowest
/// center index; empty clusters keep their previous center.
pub fn kinematic_cluster(field: &FlowField, k: usize, opts: &ClusterOpts) -> Result<Clustering> {
    let n = field.samples.len();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, samples: n });
    }
    let sigma_x = pooled_std(field.samples.iter().map(|s| s.x));
    let sigma_v = pooled_std(field.samples.iter().map(|s| s.v));
    let feats: Vec<[f64; 4]> = field
        .samples
        .iter()
        .map(|s| {
            [s.x[0] / sigma_x, s.x[1] / sigma_x, s.v[0] / sigma_v, s.v[1] / sigma_v]
        })
        .collect();
    let weights: Vec<f64> = field.samples.iter().map(|s| s.w).collect();

    let dist2 = |a: &[f64; 4], b: &[f64; 4]| -> f64 {
        (0..4).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum()
    };

    // k-means++ seeding.
    let mut rng = CounterRng::new(opts.seed);
    let mut centers: Vec<[f64; 4]> = Vec::with_capacity(k);
    centers.push(feats[rng.next_index(n)]);
    while centers.len() < k {
        let d2: Vec<f64> = feats
            .iter()
            .map(|f| centers.iter().map(|c| dist2(f, c)).fold(f64::MAX, f64::min))
            .collect();
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // All mass already covered (duplicate samples): lowest index.
            0
        } else {
            let mut target = rng.next_uniform() * total;
            let mut chosen = 0;
            for (i, &d) in d2.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centers.push(feats[next]);
    }

    let mut labels = vec![0usize; n];
    let mut iterations = 0;
    for iter in 0..opts.max_iter {
        iterations = iter + 1;
        // Assignment: strict improvement keeps the lowest index on ties.
        for (i, f) in feats.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = dist2(f, &centers[0]);
            for (c, center) in centers.iter().enumerate().skip(1) {
                let d = dist2(f, center);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            labels[i] = best;
        }
        // Update.
        let mut motion = 0.0f64;
        for (c, center) in centers.iter_mut().enumerate() {
            let mut acc = [0.0f64; 4];
            let mut wsum = 0.0;
            for i in 0..n {
                if labels[i] == c {
                    for d in 0..4 {
                        acc[d] += weights[i] * feats[i][d];
                    }
                    wsum += weights[i];
                }
            }
            if wsum > 0.0 {
                let new = [acc[0] / wsum, acc[1] / wsum, acc[2] / wsum, acc[3] / wsum];
                motion = motion.max(dist2(center, &new).sqrt());
                *center = new;
            }
        }
        if motion < opts.tol {
            break;
        }
    }

    let mut wcss = 0.0;
    for i in 0..n {
        wcss += weights[i] * dist2(&feats[i], &centers[labels[i]]);
    }

    let clusters = centers
        .iter()
        .enumerate()
        .map(|(c, center)| Cluster {
            members: (0..n).filter(|&i| labels[i] == c).collect(),
            center_x: [center[0] * sigma_x, center[1] * sigma_x],
            center_v: [center[2] * sigma_v, center[3] * sigma_v],
        })
        .collect();

    Ok(Clustering { clusters, wcss, sigma_x, sigma_v, iterations, labels })
}

/// WCSS for k = 1..=kmax, for elbow inspection. No automatic choice of k
/// is made.
pub fn elbow_scan(field: &FlowField, kmax: usize, opts: &ClusterOpts) -> Result<Vec<(usize, f64)>> {
    let top = kmax.min(field.samples.len());
    (1..=top).map(|k| kinematic_cluster(field, k, opts).map(|c| (k, c.wcss))).collect()
}

/// Drop members whose velocity deviates from the cluster's affine fit by
/// more than nsigma·rms, never going below 3 members. Degenerate fits
/// leave the cluster unchanged.
pub fn remove_outliers(members: &[usize], field: &FlowField, nsigma: f64) -> Vec<usize> {
    if members.len() <= 3 {
        return members.to_vec();
    }
    let samples: Vec<_> = members.iter().map(|&i| field.samples[i].clone()).collect();
    let fit = match fit_affine_field(&samples) {
        Ok(f) => f,
        Err(_) => return members.to_vec(),
    };
    if fit.rms <= 0.0 {
        return members.to_vec();
    }
    let mut scored: Vec<(usize, f64)> = members
        .iter()
        .map(|&i| {
            let s = &field.samples[i];
            let px = fit.a[(0, 0)] * s.x[0] + fit.a[(0, 1)] * s.x[1] + fit.b[0];
            let py = fit.a[(1, 0)] * s.x[0] + fit.a[(1, 1)] * s.x[1] + fit.b[1];
            (i, (s.v[0] - px).hypot(s.v[1] - py))
        })
        .collect();
    let threshold = nsigma * fit.rms;
    // Worst offenders first so the floor keeps the best-fitting members.
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite residuals"));
    let mut keep: Vec<usize> = Vec::with_capacity(members.len());
    let mut budget = members.len().saturating_sub(3);
    for (i, r) in scored {
        if r > threshold && budget > 0 {
            budget -= 1;
        } else {
            keep.push(i);
        }
    }
    keep.sort_unstable();
    keep
}
