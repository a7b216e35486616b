//! Tracked planar regions and their Newtonian invariants.

use serde::{Deserialize, Serialize};

use super::geom::{convex_hull, polygon_area, polygon_centroid};
use super::FlowField;
use crate::error::{Error, Result};

/// Weights of magnitude below this count as background and are nulled.
pub const DEFAULT_NULL_WEIGHT_THRESHOLD: f64 = 1e-3;

/// A clustered evolving planar region with its kinematic invariants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KinematicRegion {
    pub id: usize,
    pub members: Vec<usize>,
    /// Convex hull vertices, counter-clockwise.
    pub hull: Vec<[f64; 2]>,
    pub centroid: [f64; 2],
    /// Hull area in px², stored positive.
    pub area: f64,
    /// Orientation of the stored hull traversal.
    pub ccw: bool,
    /// Weighted mean member velocity, px/frame.
    pub velocity: [f64; 2],
    /// Log area ratio against the previous frame; 0 without history or
    /// below the background threshold.
    pub weight: f64,
    pub linear_momentum: [f64; 2],
    pub angular_momentum: f64,
    pub kinetic_energy: f64,
}

/// The single source of the momentum formulas: linear momentum w·v,
/// angular momentum w·(g ∧ v), kinetic energy ½·w·‖v‖².
pub fn momenta(w: f64, g: [f64; 2], v: [f64; 2]) -> ([f64; 2], f64, f64) {
    let linear = [w * v[0], w * v[1]];
    let angular = w * (g[0] * v[1] - g[1] * v[0]);
    let kinetic = 0.5 * w * (v[0] * v[0] + v[1] * v[1]);
    (linear, angular, kinetic)
}

/// Build a region from cluster members with the default background
/// threshold.
pub fn build_region(
    id: usize,
    members: &[usize],
    field: &FlowField,
    prev: Option<&KinematicRegion>,
) -> Result<KinematicRegion> {
    build_region_with(id, members, field, prev, DEFAULT_NULL_WEIGHT_THRESHOLD)
}

pub fn build_region_with(
    id: usize,
    members: &[usize],
    field: &FlowField,
    prev: Option<&KinematicRegion>,
    null_weight_threshold: f64,
) -> Result<KinematicRegion> {
    if members.len() < 3 {
        return Err(Error::DegenerateHull(format!(
            "{} members, need at least 3 for a hull",
            members.len()
        )));
    }
    for &i in members {
        if i >= field.samples.len() {
            return Err(Error::InvalidInput(format!("member index {i} out of range")));
        }
    }
    let positions: Vec<[f64; 2]> = members.iter().map(|&i| field.samples[i].x).collect();
    let hull = convex_hull(&positions)?;
    let area = polygon_area(&hull);
    debug_assert!(area > 0.0, "monotone chain emits CCW hulls");
    let centroid = polygon_centroid(&hull);

    let mut v = [0.0f64; 2];
    let mut wsum = 0.0;
    for &i in members {
        let s = &field.samples[i];
        v[0] += s.w * s.v[0];
        v[1] += s.w * s.v[1];
        wsum += s.w;
    }
    if wsum > 0.0 {
        v[0] /= wsum;
        v[1] /= wsum;
    }

    let mut weight = match prev {
        Some(p) if p.area > 0.0 => (area / p.area).ln(),
        _ => 0.0,
    };
    if weight.abs() < null_weight_threshold {
        weight = 0.0;
    }

    let (linear_momentum, angular_momentum, kinetic_energy) = momenta(weight, centroid, v);
    Ok(KinematicRegion {
        id,
        members: members.to_vec(),
        hull,
        centroid,
        area,
        ccw: true,
        velocity: v,
        weight,
        linear_momentum,
        angular_momentum,
        kinetic_energy,
    })
}
