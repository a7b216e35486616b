//! Coulomb-style dynamics of agents around massive signed vanishing-point
//! charges: accelerations, the signed Hamiltonian, orthocenter masses, and
//! leapfrog simulation with conservation reporting.

use nalgebra::{DVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_space::{integrate, Hamiltonian, Method, PhasePoint, PhaseTrajectory};

/// Attractive charges pull agents toward the center; repulsive push away.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Attractive,
    Repulsive,
}

impl Sign {
    pub fn factor(&self) -> f64 {
        match self {
            Sign::Attractive => 1.0,
            Sign::Repulsive => -1.0,
        }
    }
}

/// A massive signed charge at a vanishing point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChargeCenter {
    pub position: [f64; 2],
    pub mass: f64,
    pub sign: Sign,
}

impl ChargeCenter {
    pub fn new(position: [f64; 2], mass: f64, sign: Sign) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidInput(format!("mass {mass} must be positive")));
        }
        if !position.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite center position".into()));
        }
        Ok(ChargeCenter { position, mass, sign })
    }
}

/// A set of charges with Plummer softening ε (px). ε = 0 keeps the exact
/// point-charge potential.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChargeSystem {
    pub centers: Vec<ChargeCenter>,
    pub softening: f64,
}

impl ChargeSystem {
    pub fn new(centers: Vec<ChargeCenter>, softening: f64) -> Result<Self> {
        if softening < 0.0 || !softening.is_finite() {
            return Err(Error::InvalidInput(format!("softening {softening} must be >= 0")));
        }
        Ok(ChargeSystem { centers, softening })
    }

    /// Build the three charges of a perspective triangle: masses are the
    /// inverse distances to the orthocenter.
    pub fn from_triangle(
        vertices: [[f64; 2]; 3],
        signs: [Sign; 3],
        softening: f64,
    ) -> Result<Self> {
        let (_, masses) = orthocenter_masses(vertices[0], vertices[1], vertices[2])?;
        let centers = (0..3)
            .map(|i| ChargeCenter::new(vertices[i], masses[i], signs[i]))
            .collect::<Result<Vec<_>>>()?;
        ChargeSystem::new(centers, softening)
    }

    /// The signed Hamiltonian as a separable phase-space observable with
    /// its analytic gradient.
    pub fn hamiltonian(&self) -> Hamiltonian {
        let sys = self.clone();
        let sys_grad = self.clone();
        Hamiltonian::with_gradient(
            2,
            move |z: &PhasePoint| {
                signed_hamiltonian_parts(&sys, &Vector2::new(z.q()[0], z.q()[1]))
                    .map(|pot| 0.5 * z.p().norm_squared() + pot)
                    .unwrap_or(f64::NAN)
            },
            move |z: &PhasePoint| {
                let q = Vector2::new(z.q()[0], z.q()[1]);
                match acceleration_vec(&sys_grad, &q) {
                    // ∂H/∂q = −q̈, ∂H/∂p = p.
                    Ok(acc) => {
                        DVector::from_row_slice(&[-acc[0], -acc[1], z.p()[0], z.p()[1]])
                    }
                    Err(_) => DVector::from_element(4, f64::NAN),
                }
            },
        )
        .separable()
    }
}

/// Orthocenter of the triangle ⟨V₁, V₂, V₃⟩ and the inverse-distance
/// masses m_j = 1/‖V_j − orthocenter‖.
pub fn orthocenter_masses(
    v1: [f64; 2],
    v2: [f64; 2],
    v3: [f64; 2],
) -> Result<([f64; 2], [f64; 3])> {
    let a = Vector2::new(v1[0], v1[1]);
    let b = Vector2::new(v2[0], v2[1]);
    let c = Vector2::new(v3[0], v3[1]);
    let area = 0.5 * ((b - a).x * (c - a).y - (b - a).y * (c - a).x).abs();
    if area <= 1e-9 {
        return Err(Error::CollinearTriangle { area });
    }
    // Altitude from V₁ is ⟂ to V₂V₃, altitude from V₂ is ⟂ to V₁V₃:
    //   (H − V₁)·(V₃ − V₂) = 0,  (H − V₂)·(V₃ − V₁) = 0.
    let d1 = c - b;
    let d2 = c - a;
    let m = nalgebra::Matrix2::new(d1.x, d1.y, d2.x, d2.y);
    let rhs = Vector2::new(a.dot(&d1), b.dot(&d2));
    let h = m
        .lu()
        .solve(&rhs)
        .ok_or(Error::CollinearTriangle { area })?;

    let scale = (b - a).norm().max((c - a).norm()).max((c - b).norm());
    let mut masses = [0.0f64; 3];
    for (i, v) in [a, b, c].iter().enumerate() {
        let d = (v - h).norm();
        if d <= 1e-9 * scale.max(1.0) {
            // Right triangle: the orthocenter sits on this vertex.
            return Err(Error::InfiniteMass { vertex: i + 1 });
        }
        masses[i] = 1.0 / d;
    }
    Ok(([h.x, h.y], masses))
}

fn acceleration_vec(system: &ChargeSystem, q: &Vector2<f64>) -> Result<Vector2<f64>> {
    let eps2 = system.softening * system.softening;
    let mut acc = Vector2::zeros();
    for (i, c) in system.centers.iter().enumerate() {
        let d = Vector2::new(c.position[0], c.position[1]) - q;
        let r2 = d.norm_squared() + eps2;
        if r2 <= 0.0 || (system.softening == 0.0 && d.norm_squared() < 1e-300) {
            return Err(Error::Singularity { center: i });
        }
        acc += d * (c.sign.factor() * c.mass / r2.powf(1.5));
    }
    Ok(acc)
}

/// Agent acceleration q̈ = Σⱼ sⱼ·mⱼ·(Vⱼ − q)/(‖Vⱼ − q‖² + ε²)^{3/2}.
pub fn acceleration(q: [f64; 2], system: &ChargeSystem) -> Result<[f64; 2]> {
    let acc = acceleration_vec(system, &Vector2::new(q[0], q[1]))?;
    Ok([acc[0], acc[1]])
}

fn signed_hamiltonian_parts(system: &ChargeSystem, q: &Vector2<f64>) -> Result<f64> {
    let eps2 = system.softening * system.softening;
    let mut pot = 0.0;
    for (i, c) in system.centers.iter().enumerate() {
        let d = Vector2::new(c.position[0], c.position[1]) - q;
        let r2 = d.norm_squared() + eps2;
        if r2 <= 0.0 || (system.softening == 0.0 && d.norm_squared() < 1e-300) {
            return Err(Error::Singularity { center: i });
        }
        pot -= c.sign.factor() * c.mass / r2.sqrt();
    }
    Ok(pot)
}

/// The signed Hamiltonian H = ½‖p‖² − Σⱼ sⱼ·mⱼ/(‖Vⱼ − q‖² + ε²)^{1/2}.
pub fn signed_hamiltonian(z: &PhasePoint, system: &ChargeSystem) -> Result<f64> {
    if z.dof() != 2 {
        return Err(Error::InvalidInput("charge dynamics lives in the 2D image plane".into()));
    }
    let q = Vector2::new(z.q()[0], z.q()[1]);
    Ok(0.5 * z.p().norm_squared() + signed_hamiltonian_parts(system, &q)?)
}

/// A close approach recorded during simulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CloseEncounter {
    pub step: usize,
    pub center: usize,
    pub distance: f64,
}

#[derive(Debug)]
pub struct SimulationResult {
    pub trajectory: PhaseTrajectory,
    /// max |H(z_k) − H(z₀)| over the run.
    pub energy_drift: f64,
    /// First pass within 10ε of a center, when softening is active.
    pub close_encounter: Option<CloseEncounter>,
}

/// Integrate the signed Hamiltonian with leapfrog and report conservation.
pub fn simulate(
    system: &ChargeSystem,
    z0: &PhasePoint,
    dt: f64,
    n: usize,
) -> Result<SimulationResult> {
    simulate_with(system, z0, dt, n, Method::Leapfrog)
}

pub fn simulate_with(
    system: &ChargeSystem,
    z0: &PhasePoint,
    dt: f64,
    n: usize,
    method: Method,
) -> Result<SimulationResult> {
    let h = system.hamiltonian();
    let trajectory = integrate(&h, z0, dt, n, method)?;
    let e0 = h.value(&trajectory.states()[0]);
    let mut energy_drift = 0.0f64;
    let mut close_encounter = None;
    let warn_radius = 10.0 * system.softening;
    for (k, state) in trajectory.states().iter().enumerate() {
        let e = h.value(state);
        if !e.is_finite() {
            return Err(Error::Numeric(format!("non-finite energy at step {k}")));
        }
        energy_drift = energy_drift.max((e - e0).abs());
        if close_encounter.is_none() && system.softening > 0.0 {
            for (ci, c) in system.centers.iter().enumerate() {
                let d = (state.q()[0] - c.position[0]).hypot(state.q()[1] - c.position[1]);
                if d < warn_radius {
                    close_encounter = Some(CloseEncounter { step: k, center: ci, distance: d });
                    break;
                }
            }
        }
    }
    Ok(SimulationResult { trajectory, energy_drift, close_encounter })
}

/// Round-trip reversal residual: run n steps, flip momenta, run n more,
/// flip again, and measure the distance back to the start. Zero for an
/// exactly reversible integrator.
pub fn time_reversal_residual(
    system: &ChargeSystem,
    z0: &PhasePoint,
    dt: f64,
    n: usize,
) -> Result<f64> {
    let h = system.hamiltonian();
    let forward = integrate(&h, z0, dt, n, Method::Leapfrog)?;
    let end = forward.last();
    let flipped = PhasePoint::new(end.q().clone(), -end.p())?;
    let back = integrate(&h, &flipped, dt, n, Method::Leapfrog)?;
    let ret = back.last();
    let dq = (ret.q() - z0.q()).amax();
    let dp = (-ret.p() - z0.p()).amax();
    Ok(dq.max(dp))
}

/// Evaluate the printed first-integral expression for motion around the
/// mobile pair (V₁, V₂), the third vanishing point being fixed.
///
/// Conventions: the 2D wedge a∧b = aₓb_y − a_y bₓ is a scalar, ⟨·,·⟩ is
/// the product of the resulting scalars, q_{Vⱼ} is the displacement
/// Vⱼ − q, and each wedge applies to the parenthesized difference
/// following it. Under that uniform parse the final term contains
/// q_{V₂} − q_{V₂} and vanishes identically; no conservation is claimed.
pub fn evaluate_m_expression(z: &PhasePoint, system: &ChargeSystem) -> Result<f64> {
    if z.dof() != 2 {
        return Err(Error::InvalidInput("charge dynamics lives in the 2D image plane".into()));
    }
    if system.centers.len() < 2 {
        return Err(Error::InvalidInput(
            "the expression needs the two mobile centers V1 and V2".into(),
        ));
    }
    let wedge = |a: &Vector2<f64>, b: &Vector2<f64>| a.x * b.y - a.y * b.x;
    let q = Vector2::new(z.q()[0], z.q()[1]);
    let v = Vector2::new(z.p()[0], z.p()[1]);
    let c1 = &system.centers[0];
    let c2 = &system.centers[1];
    let d1 = Vector2::new(c1.position[0], c1.position[1]) - q;
    let d2 = Vector2::new(c2.position[0], c2.position[1]) - q;
    let eps2 = system.softening * system.softening;
    let r1 = (d1.norm_squared() + eps2).sqrt();
    let r2 = (d2.norm_squared() + eps2).sqrt();
    if r1 < 1e-300 {
        return Err(Error::Singularity { center: 0 });
    }
    if r2 < 1e-300 {
        return Err(Error::Singularity { center: 1 });
    }

    let term0 = wedge(&d1, &v) * wedge(&d2, &v);
    let diff12 = d1 - d2;
    let term1 = c1.sign.factor() * (c1.mass / r1) * wedge(&d1, &diff12) * wedge(&d2, &diff12);
    let diff22 = d2 - d2;
    let diff21 = d2 - d1;
    let term2 = c2.sign.factor() * (c2.mass / r2) * wedge(&d1, &diff22) * wedge(&d1, &diff21);
    let m = term0 + term1 + term2;
    if !m.is_finite() {
        return Err(Error::Numeric("non-finite first-integral value".into()));
    }
    Ok(m)
}
