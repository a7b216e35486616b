//! Line pencils: vanishing-point estimation and topological classification.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::{fit_affine_field, FlowSample};
use crate::error::{Error, Result};

/// Speed below which a sample counts as static background.
pub const DEFAULT_SPEED_FLOOR: f64 = 1e-3;
/// Normal-matrix condition number beyond which the pencil is parallel
/// (vanishing point at infinite distance).
pub const DEFAULT_CONDITION_THRESHOLD: f64 = 1e6;
/// Eigenvalue magnitude below which the affine part counts as zero.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-6;

/// Topological type of a pencil of flow lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PencilKind {
    Source,
    Sink,
    Saddle,
    /// Lines share a direction θ ∈ [0, π) instead of a finite point.
    Parallel { theta: f64 },
    Rotational,
}

impl PencilKind {
    pub fn name(&self) -> &'static str {
        match self {
            PencilKind::Source => "source",
            PencilKind::Sink => "sink",
            PencilKind::Saddle => "saddle",
            PencilKind::Parallel { .. } => "parallel",
            PencilKind::Rotational => "rotational",
        }
    }
}

/// A pencil of lines fitted to flow samples, with its vanishing point in
/// normalized homogeneous coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinePencil {
    /// Indices of the samples that contributed to the fit.
    pub members: Vec<usize>,
    /// Unit homogeneous 3-vector: (x, y, w) with w ≠ 0 for a finite point,
    /// (dx, dy, 0) for a direction.
    pub vp: [f64; 3],
    pub kind: PencilKind,
    /// Weighted RMS distance (px) of the member lines from the point.
    pub fit_residual: f64,
}

impl LinePencil {
    /// Dehomogenized pixel coordinates when the point is finite.
    pub fn vp_point(&self) -> Option<[f64; 2]> {
        if self.vp[2].abs() > 1e-12 {
            Some([self.vp[0] / self.vp[2], self.vp[1] / self.vp[2]])
        } else {
            None
        }
    }
}

/// Classify a fitted affine velocity field by its eigenstructure.
///
/// `Parallel` from this routine carries θ = 0; only the vanishing-point
/// pipeline knows the actual direction and overrides it.
pub fn classify_pencil(a: &Matrix2<f64>, tol: f64) -> PencilKind {
    let frob = (a[(0, 0)].powi(2) + a[(0, 1)].powi(2) + a[(1, 0)].powi(2) + a[(1, 1)].powi(2))
        .sqrt();
    if frob <= tol {
        return PencilKind::Parallel { theta: 0.0 };
    }
    let half_tr = 0.5 * (a[(0, 0)] + a[(1, 1)]);
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let disc = half_tr * half_tr - det;
    // A complex pair counts as rotational only when the imaginary part
    // clears the tolerance; repeated real eigenvalues land at disc ≈ 0.
    if disc < 0.0 && (-disc).sqrt() > tol {
        return PencilKind::Rotational;
    }
    let root = disc.max(0.0).sqrt();
    let l1 = half_tr + root;
    let l2 = half_tr - root;
    if l1 > tol && l2 > tol {
        PencilKind::Source
    } else if l1 < -tol && l2 < -tol {
        PencilKind::Sink
    } else if l1 > tol && l2 < -tol {
        PencilKind::Saddle
    } else {
        // Degenerate spectrum (a near-zero eigenvalue): no isolated
        // critical point, treat as parallel behavior.
        PencilKind::Parallel { theta: 0.0 }
    }
}

/// Fit the common point of the lines (xᵢ, direction vᵢ) by weighted least
/// squares, with the documented defaults.
pub fn estimate_vanishing_point(samples: &[FlowSample]) -> Result<LinePencil> {
    estimate_vanishing_point_with(
        samples,
        DEFAULT_SPEED_FLOOR,
        DEFAULT_CONDITION_THRESHOLD,
        DEFAULT_CLASSIFY_TOL,
    )
}

pub fn estimate_vanishing_point_with(
    samples: &[FlowSample],
    speed_floor: f64,
    condition_threshold: f64,
    classify_tol: f64,
) -> Result<LinePencil> {
    let members: Vec<usize> = samples
        .iter()
        .enumerate()
        .filter(|(_, s)| (s.v[0].hypot(s.v[1])) > speed_floor)
        .map(|(i, _)| i)
        .collect();
    if members.len() < 2 {
        return Err(Error::NoMotion);
    }

    // Normal equations for c minimizing Σ wᵢ (n̂ᵢ·(c − xᵢ))², where n̂ᵢ is
    // the unit normal of the line through xᵢ along vᵢ.
    let mut normal = Matrix2::<f64>::zeros();
    let mut rhs = Vector2::<f64>::zeros();
    let mut weight_sum = 0.0;
    for &i in &members {
        let s = &samples[i];
        let speed = s.v[0].hypot(s.v[1]);
        let n = Vector2::new(-s.v[1] / speed, s.v[0] / speed);
        let w = s.w;
        normal += n * n.transpose() * w;
        rhs += n * (n.dot(&Vector2::new(s.x[0], s.x[1]))) * w;
        weight_sum += w;
    }
    if weight_sum <= 0.0 {
        return Err(Error::NoMotion);
    }

    // Closed-form eigenvalues of the symmetric 2x2 normal matrix.
    let half_tr = 0.5 * (normal[(0, 0)] + normal[(1, 1)]);
    let det = normal.determinant();
    let disc = (half_tr * half_tr - det).max(0.0).sqrt();
    let lmax = half_tr + disc;
    let lmin = half_tr - disc;
    let condition = if lmin <= 0.0 { f64::INFINITY } else { lmax / lmin };

    let member_samples: Vec<FlowSample> = members.iter().map(|&i| samples[i].clone()).collect();

    if condition > condition_threshold {
        let theta = weighted_mean_direction(&member_samples);
        return Ok(LinePencil {
            members,
            vp: [theta.cos(), theta.sin(), 0.0],
            kind: PencilKind::Parallel { theta },
            fit_residual: parallel_residual(&member_samples, theta),
        });
    }

    let c = normal
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::RankDeficient("vanishing-point normal matrix".into()))?;

    let mut residual2 = 0.0;
    for s in &member_samples {
        let speed = s.v[0].hypot(s.v[1]);
        let n = Vector2::new(-s.v[1] / speed, s.v[0] / speed);
        let d = n.dot(&(c - Vector2::new(s.x[0], s.x[1])));
        residual2 += s.w * d * d;
    }
    let fit_residual = (residual2 / weight_sum).sqrt();

    let kind = match fit_affine_field(&member_samples) {
        Ok(fit) => classify_pencil(&fit.a, classify_tol),
        Err(_) => {
            // Too few samples for an affine fit: fall back to the sign of
            // the radial alignment around the fitted point.
            let mut s_rad = 0.0;
            for s in &member_samples {
                s_rad += s.w * ((s.x[0] - c[0]) * s.v[0] + (s.x[1] - c[1]) * s.v[1]);
            }
            if s_rad > 0.0 {
                PencilKind::Source
            } else if s_rad < 0.0 {
                PencilKind::Sink
            } else {
                PencilKind::Saddle
            }
        }
    };

    let norm = (c[0] * c[0] + c[1] * c[1] + 1.0).sqrt();
    Ok(LinePencil {
        members,
        vp: [c[0] / norm, c[1] / norm, 1.0 / norm],
        kind,
        fit_residual,
    })
}

/// Weighted mean of directions modulo π, via angle doubling.
fn weighted_mean_direction(samples: &[FlowSample]) -> f64 {
    let mut cx = 0.0;
    let mut sx = 0.0;
    for s in samples {
        let theta = s.v[1].atan2(s.v[0]);
        cx += s.w * (2.0 * theta).cos();
        sx += s.w * (2.0 * theta).sin();
    }
    let mut theta = 0.5 * sx.atan2(cx);
    if theta < 0.0 {
        theta += std::f64::consts::PI;
    }
    if theta >= std::f64::consts::PI {
        theta -= std::f64::consts::PI;
    }
    theta
}

/// RMS perpendicular spread of velocities around a shared direction.
fn parallel_residual(samples: &[FlowSample], theta: f64) -> f64 {
    let n = Vector2::new(-theta.sin(), theta.cos());
    let mut acc = 0.0;
    let mut wsum = 0.0;
    for s in samples {
        let d = n.dot(&Vector2::new(s.v[0], s.v[1]));
        acc += s.w * d * d;
        wsum += s.w;
    }
    if wsum > 0.0 {
        (acc / wsum).sqrt()
    } else {
        0.0
    }
}
