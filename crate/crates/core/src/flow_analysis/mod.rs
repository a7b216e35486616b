//! Sparse image-flow analysis: affine fits and their differential
//! invariants, vanishing-point pencils, kinematic clustering, region
//! tracking with Newtonian invariants, and energy summaries.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{all_finite, jacobi, pairwise_sum};

pub mod cluster;
pub mod geom;
pub mod pencil;
pub mod region;
pub mod track;

pub use cluster::{elbow_scan, kinematic_cluster, remove_outliers, Cluster, ClusterOpts, Clustering};
pub use pencil::{
    classify_pencil, estimate_vanishing_point, estimate_vanishing_point_with, LinePencil,
    PencilKind, DEFAULT_CONDITION_THRESHOLD, DEFAULT_SPEED_FLOOR,
};
pub use region::{build_region, build_region_with, momenta, KinematicRegion};
pub use track::{track_centroids, CentroidTrack};

fn default_weight() -> f64 {
    1.0
}

/// One sparse flow observation: position, displacement, weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSample {
    /// Position in px.
    pub x: [f64; 2],
    /// Displacement in px/frame.
    pub v: [f64; 2],
    /// Nonnegative sample weight, 1 by default.
    #[serde(default = "default_weight")]
    pub w: f64,
}

impl FlowSample {
    pub fn new(x: [f64; 2], v: [f64; 2]) -> Self {
        FlowSample { x, v, w: 1.0 }
    }

    pub fn weighted(x: [f64; 2], v: [f64; 2], w: f64) -> Self {
        FlowSample { x, v, w }
    }

    pub fn speed(&self) -> f64 {
        self.v[0].hypot(self.v[1])
    }
}

/// A timestamped set of sparse flow samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowField {
    /// Frame index.
    pub t: i64,
    pub samples: Vec<FlowSample>,
}

impl FlowField {
    pub fn new(t: i64, samples: Vec<FlowSample>) -> Self {
        FlowField { t, samples }
    }

    /// Check the analysis preconditions: at least one sample, finite
    /// entries, nonnegative weights, unique positions within 1e-9.
    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::InvalidInput("flow field has no samples".into()));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if !all_finite(&s.x) || !all_finite(&s.v) || !s.w.is_finite() {
                return Err(Error::Numeric(format!("non-finite entries in sample {i}")));
            }
            if s.w < 0.0 {
                return Err(Error::InvalidInput(format!("negative weight in sample {i}")));
            }
        }
        for i in 0..self.samples.len() {
            for j in i + 1..self.samples.len() {
                let (a, b) = (&self.samples[i].x, &self.samples[j].x);
                if (a[0] - b[0]).abs() <= 1e-9 && (a[1] - b[1]).abs() <= 1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "samples {i} and {j} share a position"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Least-squares affine model v ≈ A·x + b of a velocity field.
#[derive(Debug, Clone)]
pub struct AffineFit {
    pub a: Matrix2<f64>,
    pub b: Vector2<f64>,
    /// Root-mean-square residual speed, px/frame.
    pub rms: f64,
}

/// Fit v = A·x + b by least squares on centered, scaled positions.
/// Needs at least 3 non-collinear sample positions.
pub fn fit_affine_field(samples: &[FlowSample]) -> Result<AffineFit> {
    if samples.len() < 3 {
        return Err(Error::RankDeficient(format!(
            "{} samples, need at least 3 for an affine fit",
            samples.len()
        )));
    }
    // Center and scale positions for a well-conditioned normal matrix.
    let n = samples.len() as f64;
    let mut mean = Vector2::zeros();
    for s in samples {
        mean += Vector2::new(s.x[0], s.x[1]);
    }
    mean /= n;
    let mut spread = 0.0;
    for s in samples {
        spread += (Vector2::new(s.x[0], s.x[1]) - mean).norm_squared();
    }
    let scale = (spread / (2.0 * n)).sqrt().max(1e-12);

    let mut normal = Matrix3::<f64>::zeros();
    let mut rhs_x = Vector3::<f64>::zeros();
    let mut rhs_y = Vector3::<f64>::zeros();
    for s in samples {
        let u = (Vector2::new(s.x[0], s.x[1]) - mean) / scale;
        let d = Vector3::new(u[0], u[1], 1.0);
        normal += d * d.transpose();
        rhs_x += d * s.v[0];
        rhs_y += d * s.v[1];
    }
    let eig = jacobi::symmetric_eigenvalues(&DMatrix::from_fn(3, 3, |i, j| normal[(i, j)]));
    let lmax = eig[0].max(1e-300);
    if eig[2] <= 1e-10 * lmax {
        return Err(Error::RankDeficient(
            "sample positions are collinear or coincident".into(),
        ));
    }
    let lu = normal.lu();
    let sol_x = lu
        .solve(&rhs_x)
        .ok_or_else(|| Error::RankDeficient("singular affine design matrix".into()))?;
    let sol_y = lu
        .solve(&rhs_y)
        .ok_or_else(|| Error::RankDeficient("singular affine design matrix".into()))?;

    // Un-scale: v = A'u + b' with u = (x − μ)/σ gives A = A'/σ, b = b' − A·μ.
    let a = Matrix2::new(sol_x[0], sol_x[1], sol_y[0], sol_y[1]) / scale;
    let b = Vector2::new(sol_x[2], sol_y[2]) - a * mean;

    let mut res2 = 0.0;
    for s in samples {
        let pred = a * Vector2::new(s.x[0], s.x[1]) + b;
        res2 += (Vector2::new(s.v[0], s.v[1]) - pred).norm_squared();
    }
    let rms = (res2 / n).sqrt();
    Ok(AffineFit { a, b, rms })
}

/// First-order differential invariants of an affine velocity field
/// A = [[uₓ, u_y], [vₓ, v_y]].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderInvariants {
    /// Isotropic expansion uₓ + v_y.
    pub div: f64,
    /// Vorticity −(u_y − vₓ).
    pub curl: f64,
    /// Deformation magnitude, ≥ 0.
    pub def_magnitude: f64,
    /// Deformation axis angle, stored as 2μ.
    pub def_angle: f64,
}

pub fn first_order_invariants(a: &Matrix2<f64>) -> FirstOrderInvariants {
    let (ux, uy, vx, vy) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    let def_cos = ux - vy;
    let def_sin = uy + vx;
    FirstOrderInvariants {
        div: ux + vy,
        curl: -(uy - vx),
        def_magnitude: def_cos.hypot(def_sin),
        def_angle: def_sin.atan2(def_cos),
    }
}

/// Apparent kinetic energy ½ Σ wᵢ ‖vᵢ‖², pairwise-summed.
pub fn apparent_kinetic_energy(field: &FlowField) -> f64 {
    let terms: Vec<f64> =
        field.samples.iter().map(|s| 0.5 * s.w * (s.v[0] * s.v[0] + s.v[1] * s.v[1])).collect();
    pairwise_sum(&terms)
}

/// Potential, kinetic, and total energy of weighted regions at given
/// heights: E_pot = Σ wᵢhᵢ (gravitational constant dropped),
/// E_kin = ½ Σ wᵢ‖vᵢ‖².
pub fn total_energy(regions: &[KinematicRegion], heights: &[f64]) -> Result<(f64, f64, f64)> {
    if regions.len() != heights.len() {
        return Err(Error::InvalidInput(format!(
            "{} regions but {} heights",
            regions.len(),
            heights.len()
        )));
    }
    let pot: Vec<f64> = regions.iter().zip(heights).map(|(r, h)| r.weight * h).collect();
    let kin: Vec<f64> = regions
        .iter()
        .map(|r| 0.5 * r.weight * (r.velocity[0].powi(2) + r.velocity[1].powi(2)))
        .collect();
    let e_pot = pairwise_sum(&pot);
    let e_kin = pairwise_sum(&kin);
    Ok((e_pot, e_kin, e_pot + e_kin))
}

/// Relative speeds ν = p / s_b against the background speed s_b.
pub fn relative_speeds(p: &[f64; 3], s_b: f64) -> Result<[f64; 3]> {
    if s_b == 0.0 {
        return Err(Error::DivisionByZero(
            "background speed is zero; re-segment before normalizing".into(),
        ));
    }
    Ok([p[0] / s_b, p[1] / s_b, p[2] / s_b])
}

/// Gradient data of a scalar lifted to the 4D phase space (q₁, q₂, p₁, p₂).
#[derive(Debug, Clone)]
pub struct LiftedGradient {
    pub grad: [f64; 4],
    /// J·∇G with J = [[0, I], [−I, 0]].
    pub symplectic_grad: [f64; 4],
    /// ‖J∇G‖ ≤ tol. Since J is orthogonal this equals ‖∇G‖ ≤ tol.
    pub is_critical: bool,
}

/// Central-difference gradient and symplectic gradient of a lifted
/// intensity G on phase space, with a criticality flag at tolerance tol.
pub fn lifted_intensity_gradient<G>(g: G, z: &[f64; 4], tol: f64) -> Result<LiftedGradient>
where
    G: Fn(&[f64; 4]) -> f64,
{
    let mag = z.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let h = crate::util::diff_step(mag);
    let mut grad = [0.0f64; 4];
    for i in 0..4 {
        let mut plus = *z;
        let mut minus = *z;
        plus[i] += h;
        minus[i] -= h;
        grad[i] = (g(&plus) - g(&minus)) / (2.0 * h);
    }
    if !all_finite(&grad) {
        return Err(Error::Numeric("non-finite lifted gradient".into()));
    }
    let symplectic_grad = [grad[2], grad[3], -grad[0], -grad[1]];
    let norm = DVector::from_row_slice(&symplectic_grad).norm();
    Ok(LiftedGradient { grad, symplectic_grad, is_critical: norm <= tol })
}
