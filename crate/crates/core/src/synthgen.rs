//! Synthetic ground truth: pinhole projection of rigid 3D motions into
//! sparse flow fields with known vanishing points, labels, and centroids.
//!
//! Conventions: world-to-camera X_c = R·X + t, flow is the exact two-frame
//! displacement, noise is counter-seeded so outputs are byte-stable.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow_analysis::{FlowField, FlowSample};
use crate::util::rng::CounterRng;

const MIN_DEPTH: f64 = 1e-6;

/// A pinhole camera pose and intrinsics.
#[derive(Debug, Clone)]
pub struct CameraPose {
    r: Matrix3<f64>,
    t: Vector3<f64>,
    pub focal: f64,
    pub principal_point: Vector2<f64>,
}

impl CameraPose {
    pub fn new(
        r: Matrix3<f64>,
        t: Vector3<f64>,
        focal: f64,
        principal_point: Vector2<f64>,
    ) -> Result<Self> {
        let defect = (r.transpose() * r - Matrix3::identity()).norm();
        if defect > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "rotation is not orthogonal (defect {defect:.3e})"
            )));
        }
        if (r.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput("rotation must have determinant +1".into()));
        }
        if !(focal > 0.0) {
            return Err(Error::InvalidInput("focal length must be positive".into()));
        }
        Ok(CameraPose { r, t, focal, principal_point })
    }

    /// Axis-aligned camera at world position `center`, looking along +z.
    pub fn at(center: Vector3<f64>, focal: f64, principal_point: Vector2<f64>) -> Result<Self> {
        Self::new(Matrix3::identity(), -center, focal, principal_point)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.r
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.t
    }

    /// Camera center in world coordinates: C = −Rᵀ·t.
    pub fn center(&self) -> Vector3<f64> {
        -self.r.transpose() * self.t
    }
}

/// Project a world point through the camera; errors when the camera-frame
/// depth is at or behind the image plane.
pub fn project(pose: &CameraPose, x: &Vector3<f64>) -> Result<Vector2<f64>> {
    let xc = pose.r * x + pose.t;
    if xc[2] <= MIN_DEPTH {
        return Err(Error::Cheirality { depth: xc[2] });
    }
    Ok(Vector2::new(
        pose.focal * xc[0] / xc[2] + pose.principal_point[0],
        pose.focal * xc[1] / xc[2] + pose.principal_point[1],
    ))
}

/// A rigid body: points moving with a shared constant velocity.
#[derive(Debug, Clone)]
pub struct SceneBody {
    pub points: Vec<Vector3<f64>>,
    /// Scene units per frame.
    pub velocity: Vector3<f64>,
    pub label: usize,
}

impl SceneBody {
    pub fn new(points: Vec<Vector3<f64>>, velocity: Vector3<f64>, label: usize) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::InvalidInput(format!(
                "body {label} has {} points, need at least 4",
                points.len()
            )));
        }
        Ok(SceneBody { points, velocity, label })
    }
}

/// Ground-truth vanishing point of one body in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TruthVp {
    /// Finite image point, px.
    Point([f64; 2]),
    /// Direction θ ∈ [0, π) for motion parallel to the image plane.
    Parallel(f64),
}

/// Everything the generator knows that an estimator must recover.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Body label per sample (same ordering in every frame).
    pub labels: Vec<usize>,
    /// Per frame, per body: the vanishing point of that body's apparent
    /// translation.
    pub vps: Vec<Vec<TruthVp>>,
    /// Per frame, per body: mean projected position.
    pub centroids: Vec<Vec<[f64; 2]>>,
}

/// Vanishing point of the relative motion d (camera frame): the
/// projection of its point at infinity.
fn vp_of_direction(d: &Vector3<f64>, focal: f64, pp: &Vector2<f64>) -> TruthVp {
    if d[2].abs() <= 1e-12 * d.norm().max(1e-300) {
        let mut theta = d[1].atan2(d[0]);
        if theta < 0.0 {
            theta += std::f64::consts::PI;
        }
        if theta >= std::f64::consts::PI {
            theta -= std::f64::consts::PI;
        }
        TruthVp::Parallel(theta)
    } else {
        TruthVp::Point([focal * d[0] / d[2] + pp[0], focal * d[1] / d[2] + pp[1]])
    }
}

/// Generate `frames` flow fields from bodies observed along a pose path.
/// `poses` must cover frames+1 instants since flow needs the next frame.
pub fn generate_sequence(
    bodies: &[SceneBody],
    poses: &[CameraPose],
    frames: usize,
) -> Result<(Vec<FlowField>, GroundTruth)> {
    if frames == 0 {
        return Err(Error::InvalidInput("need at least one frame".into()));
    }
    if poses.len() < frames + 1 {
        return Err(Error::InvalidInput(format!(
            "{} poses for {frames} frames; flow needs one extra pose",
            poses.len()
        )));
    }
    if bodies.is_empty() {
        return Err(Error::InvalidInput("no bodies to project".into()));
    }
    let labels: Vec<usize> =
        bodies.iter().flat_map(|b| std::iter::repeat(b.label).take(b.points.len())).collect();

    let mut fields = Vec::with_capacity(frames);
    let mut vps = Vec::with_capacity(frames);
    let mut centroids = Vec::with_capacity(frames);
    for f in 0..frames {
        let pose = &poses[f];
        let pose_next = &poses[f + 1];
        let camera_step = pose_next.center() - pose.center();
        let mut samples = Vec::with_capacity(labels.len());
        let mut frame_vps = Vec::with_capacity(bodies.len());
        let mut frame_centroids = Vec::with_capacity(bodies.len());
        for body in bodies {
            let mut centroid = Vector2::zeros();
            for point in &body.points {
                let world = point + body.velocity * f as f64;
                let now = project(pose, &world).map_err(|_| Error::PartialSequence { frame: f })?;
                let next = project(pose_next, &(world + body.velocity))
                    .map_err(|_| Error::PartialSequence { frame: f })?;
                centroid += now;
                samples.push(FlowSample::new([now[0], now[1]], [next[0] - now[0], next[1] - now[1]]));
            }
            centroid /= body.points.len() as f64;
            frame_centroids.push([centroid[0], centroid[1]]);
            // Apparent per-frame displacement direction in the camera frame.
            let d = pose.r * (body.velocity - camera_step);
            frame_vps.push(vp_of_direction(&d, pose.focal, &pose.principal_point));
        }
        fields.push(FlowField::new(f as i64, samples));
        vps.push(frame_vps);
        centroids.push(frame_centroids);
    }
    Ok((fields, GroundTruth { labels, vps, centroids }))
}

/// Add isotropic Gaussian noise to the velocities only; deterministic per
/// (seed, frame, sample index).
pub fn add_noise(field: &FlowField, sigma: f64, seed: u64) -> FlowField {
    if sigma == 0.0 {
        return field.clone();
    }
    let samples = field
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = CounterRng::substream(seed ^ (field.t as u64).wrapping_mul(0x9e37), i as u64);
            let (n1, n2) = rng.next_gaussian_pair();
            FlowSample::weighted(s.x, [s.v[0] + sigma * n1, s.v[1] + sigma * n2], s.w)
        })
        .collect();
    FlowField::new(field.t, samples)
}

/// A static cloud of points uniform in a box, counter-seeded.
pub fn random_cloud(
    n: usize,
    x_range: (f64, f64),
    y_range: (f64, f64),
    z_range: (f64, f64),
    seed: u64,
) -> Vec<Vector3<f64>> {
    let mut rng = CounterRng::new(seed);
    (0..n)
        .map(|_| {
            Vector3::new(
                rng.next_range(x_range.0, x_range.1),
                rng.next_range(y_range.0, y_range.1),
                rng.next_range(z_range.0, z_range.1),
            )
        })
        .collect()
}

/// Built-in scenarios shared by the CLI and the verification suite.
pub mod scenarios {
    use super::*;

    pub const FOCAL: f64 = 500.0;
    pub const PRINCIPAL_POINT: [f64; 2] = [320.0, 240.0];

    fn pp() -> Vector2<f64> {
        Vector2::new(PRINCIPAL_POINT[0], PRINCIPAL_POINT[1])
    }

    fn static_poses(count: usize) -> Result<Vec<CameraPose>> {
        (0..count).map(|_| CameraPose::at(Vector3::zeros(), FOCAL, pp())).collect()
    }

    /// Camera advancing along its optical axis through a static cloud:
    /// one source pencil with the focus of expansion at the principal
    /// point.
    pub fn forward_dolly(
        samples: usize,
        frames: usize,
        seed: u64,
    ) -> Result<(Vec<FlowField>, GroundTruth)> {
        let cloud = random_cloud(samples, (-2.0, 2.0), (-1.5, 1.5), (4.0, 12.0), seed);
        let body = SceneBody::new(cloud, Vector3::zeros(), 0)?;
        let poses = (0..=frames)
            .map(|t| CameraPose::at(Vector3::new(0.0, 0.0, 0.2 * t as f64), FOCAL, pp()))
            .collect::<Result<Vec<_>>>()?;
        generate_sequence(&[body], &poses, frames)
    }

    /// Two approaching bodies drifting apart laterally: apparent velocity
    /// separation of about 2 px/frame in x, both hulls growing.
    pub fn two_bodies(frames: usize, seed: u64) -> Result<(Vec<FlowField>, GroundTruth)> {
        let a = SceneBody::new(
            random_cloud(100, (-2.2, -0.8), (-0.7, 0.7), (7.0, 9.0), seed),
            Vector3::new(0.016, 0.0, -0.03),
            0,
        )?;
        let b = SceneBody::new(
            random_cloud(100, (0.8, 2.2), (-0.7, 0.7), (7.0, 9.0), seed.wrapping_add(1)),
            Vector3::new(-0.016, 0.0, -0.03),
            1,
        )?;
        let poses = static_poses(frames + 1)?;
        generate_sequence(&[a, b], &poses, frames)
    }

    /// Camera translating parallel to the image plane across a static
    /// scene: one parallel pencil along the horizontal direction.
    pub fn parallel_pan(
        samples: usize,
        frames: usize,
        seed: u64,
    ) -> Result<(Vec<FlowField>, GroundTruth)> {
        let cloud = random_cloud(samples, (-2.0, 2.0), (-1.5, 1.5), (5.0, 10.0), seed);
        let body = SceneBody::new(cloud, Vector3::zeros(), 0)?;
        let poses = (0..=frames)
            .map(|t| CameraPose::at(Vector3::new(0.05 * t as f64, 0.0, 0.0), FOCAL, pp()))
            .collect::<Result<Vec<_>>>()?;
        generate_sequence(&[body], &poses, frames)
    }
}
