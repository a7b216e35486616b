//! Centroid trajectories across frames: matching plus cubic interpolation.

use serde::{Deserialize, Serialize};

use super::region::KinematicRegion;
use crate::error::{Error, Result};

/// Matched regions must keep their area ratio inside [1/2, 2].
const AREA_RATIO_MIN: f64 = 0.5;
const AREA_RATIO_MAX: f64 = 2.0;
/// Two match candidates closer than this are indistinguishable.
const AMBIGUITY_PX: f64 = 1.0;

/// A per-region cubic trajectory through the matched centroids.
///
/// The interpolant is the Catmull-Rom cubic: Hermite segments with
/// central-difference tangents at interior knots and one-sided
/// quadratic-exact tangents at the ends, so it passes through every knot
/// and reproduces quadratic motion exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CentroidTrack {
    /// Region id in each frame.
    pub region_ids: Vec<usize>,
    /// Centroid per frame (the knots).
    pub knots: Vec<[f64; 2]>,
    /// Analytic first derivative at each knot, px/frame.
    pub velocities: Vec<[f64; 2]>,
    /// Analytic second derivative at each knot, px/frame².
    pub accelerations: Vec<[f64; 2]>,
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn knot_tangents(knots: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let n = knots.len();
    let mut t = Vec::with_capacity(n);
    for j in 0..n {
        let tj = if j == 0 {
            [
                0.5 * (-3.0 * knots[0][0] + 4.0 * knots[1][0] - knots[2][0]),
                0.5 * (-3.0 * knots[0][1] + 4.0 * knots[1][1] - knots[2][1]),
            ]
        } else if j == n - 1 {
            [
                0.5 * (3.0 * knots[n - 1][0] - 4.0 * knots[n - 2][0] + knots[n - 3][0]),
                0.5 * (3.0 * knots[n - 1][1] - 4.0 * knots[n - 2][1] + knots[n - 3][1]),
            ]
        } else {
            [0.5 * (knots[j + 1][0] - knots[j - 1][0]), 0.5 * (knots[j + 1][1] - knots[j - 1][1])]
        };
        t.push(tj);
    }
    t
}

impl CentroidTrack {
    fn from_knots(region_ids: Vec<usize>, knots: Vec<[f64; 2]>) -> Self {
        let n = knots.len();
        let tangents = knot_tangents(&knots);
        let mut accelerations = Vec::with_capacity(n);
        for j in 0..n {
            let acc = if j < n - 1 {
                // Right segment at s = 0: 6(P₁−P₀) − 4T₀ − 2T₁.
                let d = sub(knots[j + 1], knots[j]);
                [
                    6.0 * d[0] - 4.0 * tangents[j][0] - 2.0 * tangents[j + 1][0],
                    6.0 * d[1] - 4.0 * tangents[j][1] - 2.0 * tangents[j + 1][1],
                ]
            } else {
                // Left segment at s = 1: −6(P₁−P₀) + 2T₀ + 4T₁.
                let d = sub(knots[j], knots[j - 1]);
                [
                    -6.0 * d[0] + 2.0 * tangents[j - 1][0] + 4.0 * tangents[j][0],
                    -6.0 * d[1] + 2.0 * tangents[j - 1][1] + 4.0 * tangents[j][1],
                ]
            };
            accelerations.push(acc);
        }
        CentroidTrack { region_ids, knots, velocities: tangents, accelerations }
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    fn segment(&self, t: f64) -> (usize, f64) {
        let last = self.knots.len() - 1;
        let j = (t.floor() as usize).min(last.saturating_sub(1));
        (j, t - j as f64)
    }

    /// Position on the interpolant at fractional frame t ∈ [0, n−1].
    pub fn position_at(&self, t: f64) -> [f64; 2] {
        let (j, s) = self.segment(t);
        let tg = knot_tangents(&self.knots);
        let (p0, p1, t0, t1) = (self.knots[j], self.knots[j + 1], tg[j], tg[j + 1]);
        let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
        let h10 = s * s * s - 2.0 * s * s + s;
        let h01 = -2.0 * s * s * s + 3.0 * s * s;
        let h11 = s * s * s - s * s;
        [
            h00 * p0[0] + h10 * t0[0] + h01 * p1[0] + h11 * t1[0],
            h00 * p0[1] + h10 * t0[1] + h01 * p1[1] + h11 * t1[1],
        ]
    }

    pub fn velocity_at(&self, t: f64) -> [f64; 2] {
        let (j, s) = self.segment(t);
        let tg = knot_tangents(&self.knots);
        let (p0, p1, t0, t1) = (self.knots[j], self.knots[j + 1], tg[j], tg[j + 1]);
        let h00 = 6.0 * s * s - 6.0 * s;
        let h10 = 3.0 * s * s - 4.0 * s + 1.0;
        let h01 = -6.0 * s * s + 6.0 * s;
        let h11 = 3.0 * s * s - 2.0 * s;
        [
            h00 * p0[0] + h10 * t0[0] + h01 * p1[0] + h11 * t1[0],
            h00 * p0[1] + h10 * t0[1] + h01 * p1[1] + h11 * t1[1],
        ]
    }

    pub fn acceleration_at(&self, t: f64) -> [f64; 2] {
        let (j, s) = self.segment(t);
        let tg = knot_tangents(&self.knots);
        let (p0, p1, t0, t1) = (self.knots[j], self.knots[j + 1], tg[j], tg[j + 1]);
        let h00 = 12.0 * s - 6.0;
        let h10 = 6.0 * s - 4.0;
        let h01 = -12.0 * s + 6.0;
        let h11 = 6.0 * s - 2.0;
        [
            h00 * p0[0] + h10 * t0[0] + h01 * p1[0] + h11 * t1[0],
            h00 * p0[1] + h10 * t0[1] + h01 * p1[1] + h11 * t1[1],
        ]
    }

    /// Kinematics at the trajectory's parameter midpoint.
    pub fn midpoint_state(&self) -> ([f64; 2], [f64; 2], [f64; 2]) {
        let t = 0.5 * (self.knots.len() - 1) as f64;
        (self.position_at(t), self.velocity_at(t), self.acceleration_at(t))
    }
}

/// Match one region forward: nearest centroid among the area-gated
/// candidates; an error if the best two are within 1 px of each other.
fn match_forward(
    region: &KinematicRegion,
    next: &[KinematicRegion],
    frame: usize,
) -> Result<Option<usize>> {
    let mut candidates: Vec<(usize, f64)> = next
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            let ratio = r.area / region.area;
            (AREA_RATIO_MIN..=AREA_RATIO_MAX).contains(&ratio)
        })
        .map(|(i, r)| {
            let d = (r.centroid[0] - region.centroid[0]).hypot(r.centroid[1] - region.centroid[1]);
            (i, d)
        })
        .collect();
    if candidates.is_empty() {
        return Ok(None);
    }
    candidates.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite distances"));
    if candidates.len() >= 2 && (candidates[1].1 - candidates[0].1).abs() < AMBIGUITY_PX {
        return Err(Error::AmbiguousTrack { frame, d1: candidates[0].1, d2: candidates[1].1 });
    }
    Ok(Some(candidates[0].0))
}

/// Chain regions across ≥ 4 frames and fit a cubic through each chain of
/// centroids. Chains that lose their match before spanning four frames
/// are dropped.
pub fn track_centroids(frames: &[Vec<KinematicRegion>]) -> Result<Vec<CentroidTrack>> {
    if frames.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "{} frames, need at least 4 for a cubic trajectory",
            frames.len()
        )));
    }
    let mut tracks = Vec::new();
    for start in &frames[0] {
        let mut ids = vec![start.id];
        let mut knots = vec![start.centroid];
        let mut current = start.clone();
        for (f, frame) in frames.iter().enumerate().skip(1) {
            match match_forward(&current, frame, f)? {
                Some(idx) => {
                    current = frame[idx].clone();
                    ids.push(current.id);
                    knots.push(current.centroid);
                }
                None => break,
            }
        }
        if knots.len() >= 4 {
            tracks.push(CentroidTrack::from_knots(ids, knots));
        }
    }
    Ok(tracks)
}
