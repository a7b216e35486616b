//! Canonical symplectic mechanics on the phase space of (q, p) pairs.
//!
//! Conventions locked here and verified by tests:
//! - gradient ordering is (∂/∂q₁..∂/∂qₘ, ∂/∂p₁..∂/∂pₘ)
//! - J = [[0, I], [-I, 0]], so the Hamiltonian field X_H = J∇H = (∂H/∂p, -∂H/∂q)
//! - {qᵢ, pⱼ} = δᵢⱼ

use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::util::{all_finite, diff_step};

/// A point (q, p) in a 2m-dimensional phase space.
#[derive(Clone, PartialEq)]
pub struct PhasePoint {
    q: DVector<f64>,
    p: DVector<f64>,
}

impl fmt::Debug for PhasePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhasePoint {{ q: {:?}, p: {:?} }}", self.q.as_slice(), self.p.as_slice())
    }
}

impl PhasePoint {
    pub fn new(q: DVector<f64>, p: DVector<f64>) -> Result<Self> {
        if q.len() != p.len() || q.is_empty() {
            return Err(Error::InvalidDimension(format!(
                "q has length {}, p has length {}; need equal lengths >= 1",
                q.len(),
                p.len()
            )));
        }
        if !all_finite(q.as_slice()) || !all_finite(p.as_slice()) {
            return Err(Error::Numeric("non-finite phase point entry".into()));
        }
        Ok(PhasePoint { q, p })
    }

    pub fn from_slices(q: &[f64], p: &[f64]) -> Result<Self> {
        Self::new(DVector::from_row_slice(q), DVector::from_row_slice(p))
    }

    /// Number of position coordinates m (the phase space has dimension 2m).
    pub fn dof(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn p(&self) -> &DVector<f64> {
        &self.p
    }

    /// Stacked (q, p) as a single 2m-vector.
    pub fn to_vector(&self) -> DVector<f64> {
        let m = self.dof();
        DVector::from_fn(2 * m, |i, _| if i < m { self.q[i] } else { self.p[i - m] })
    }

    pub fn from_vector(z: &DVector<f64>) -> Result<Self> {
        if z.len() % 2 != 0 || z.is_empty() {
            return Err(Error::InvalidDimension(format!(
                "phase vector length {} is not an even positive number",
                z.len()
            )));
        }
        let m = z.len() / 2;
        Self::new(z.rows(0, m).into_owned(), z.rows(m, m).into_owned())
    }
}

/// An observable H: P → ℝ with an optional analytic gradient.
///
/// Without an analytic gradient, central differences are used with
/// step h = max(1e-6, 1e-8·‖z‖∞).
#[derive(Clone)]
pub struct Hamiltonian {
    m: usize,
    separable: bool,
    eval: Arc<dyn Fn(&PhasePoint) -> f64 + Send + Sync>,
    grad: Option<Arc<dyn Fn(&PhasePoint) -> DVector<f64> + Send + Sync>>,
}

impl fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hamiltonian")
            .field("m", &self.m)
            .field("separable", &self.separable)
            .field("analytic_gradient", &self.grad.is_some())
            .finish()
    }
}

impl Hamiltonian {
    pub fn new<F>(m: usize, eval: F) -> Self
    where
        F: Fn(&PhasePoint) -> f64 + Send + Sync + 'static,
    {
        Hamiltonian { m, separable: false, eval: Arc::new(eval), grad: None }
    }

    pub fn with_gradient<F, G>(m: usize, eval: F, grad: G) -> Self
    where
        F: Fn(&PhasePoint) -> f64 + Send + Sync + 'static,
        G: Fn(&PhasePoint) -> DVector<f64> + Send + Sync + 'static,
    {
        Hamiltonian { m, separable: false, eval: Arc::new(eval), grad: Some(Arc::new(grad)) }
    }

    /// Mark this Hamiltonian as separable, H(q, p) = T(p) + V(q), which
    /// makes it eligible for leapfrog integration.
    pub fn separable(mut self) -> Self {
        self.separable = true;
        self
    }

    pub fn is_separable(&self) -> bool {
        self.separable
    }

    pub fn dof(&self) -> usize {
        self.m
    }

    pub fn value(&self, z: &PhasePoint) -> f64 {
        (self.eval)(z)
    }

    /// Gradient (∂H/∂q, ∂H/∂p) of length 2m.
    pub fn gradient(&self, z: &PhasePoint) -> Result<DVector<f64>> {
        if z.dof() != self.m {
            return Err(Error::InvalidInput(format!(
                "phase point has {} dof, Hamiltonian expects {}",
                z.dof(),
                self.m
            )));
        }
        let g = match &self.grad {
            Some(grad) => grad(z),
            None => self.numeric_gradient(z),
        };
        if g.len() != 2 * self.m {
            return Err(Error::InvalidInput(format!(
                "gradient length {} != {}",
                g.len(),
                2 * self.m
            )));
        }
        if !all_finite(g.as_slice()) {
            return Err(Error::Numeric("non-finite Hamiltonian gradient".into()));
        }
        Ok(g)
    }

    fn numeric_gradient(&self, z: &PhasePoint) -> DVector<f64> {
        let v = z.to_vector();
        let h = diff_step(v.amax());
        let n = v.len();
        DVector::from_fn(n, |i, _| {
            let mut plus = v.clone();
            let mut minus = v.clone();
            plus[i] += h;
            minus[i] -= h;
            let zp = PhasePoint::from_vector(&plus).expect("perturbed point stays valid");
            let zm = PhasePoint::from_vector(&minus).expect("perturbed point stays valid");
            ((self.eval)(&zp) - (self.eval)(&zm)) / (2.0 * h)
        })
    }

    /// H = ½(‖q‖² + ‖p‖²), the harmonic oscillator. Analytic gradient.
    pub fn harmonic(m: usize) -> Self {
        Hamiltonian::with_gradient(
            m,
            |z: &PhasePoint| 0.5 * (z.q().norm_squared() + z.p().norm_squared()),
            |z: &PhasePoint| {
                let m = z.dof();
                DVector::from_fn(2 * m, |i, _| if i < m { z.q()[i] } else { z.p()[i - m] })
            },
        )
        .separable()
    }

    /// H = ½‖p‖², the free particle. Analytic gradient.
    pub fn free_particle(m: usize) -> Self {
        Hamiltonian::with_gradient(
            m,
            |z: &PhasePoint| 0.5 * z.p().norm_squared(),
            |z: &PhasePoint| {
                let m = z.dof();
                DVector::from_fn(2 * m, |i, _| if i < m { 0.0 } else { z.p()[i - m] })
            },
        )
        .separable()
    }
}

/// The canonical symplectic matrix J = [[0, I], [-I, 0]] of size 2m x 2m.
pub fn canonical_j(m: usize) -> Result<DMatrix<f64>> {
    if m == 0 {
        return Err(Error::InvalidDimension("m = 0 has no phase space".into()));
    }
    let mut j = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        j[(i, m + i)] = 1.0;
        j[(m + i, i)] = -1.0;
    }
    Ok(j)
}

/// ∇_S H = J·∇H, the symplectic gradient.
pub fn symplectic_gradient(h: &Hamiltonian, z: &PhasePoint) -> Result<DVector<f64>> {
    let g = h.gradient(z)?;
    let m = h.dof();
    // Row i of J has a single ±1 entry, so apply it directly.
    Ok(DVector::from_fn(2 * m, |i, _| if i < m { g[m + i] } else { -g[i - m] }))
}

/// {F, G}(z) = Σᵢ ∂F/∂qᵢ ∂G/∂pᵢ − ∂F/∂pᵢ ∂G/∂qᵢ.
pub fn poisson_bracket(f: &Hamiltonian, g: &Hamiltonian, z: &PhasePoint) -> Result<f64> {
    if f.dof() != g.dof() {
        return Err(Error::InvalidInput(format!(
            "arity mismatch: {} vs {}",
            f.dof(),
            g.dof()
        )));
    }
    let gf = f.gradient(z)?;
    let gg = g.gradient(z)?;
    let m = f.dof();
    let mut acc = 0.0;
    for i in 0..m {
        acc += gf[i] * gg[m + i] - gf[m + i] * gg[i];
    }
    Ok(acc)
}

/// Time evolution rate of the observable F under the flow of H: Ḟ = {F, H}.
pub fn observable_rate(f: &Hamiltonian, h: &Hamiltonian, z: &PhasePoint) -> Result<f64> {
    poisson_bracket(f, h, z)
}

/// The Hamiltonian vector field z ↦ (∂H/∂p, −∂H/∂q).
///
/// Equals `symplectic_gradient` entry by entry; both exist so the sign
/// convention stays locked by a test rather than by memory.
pub fn hamiltonian_field(h: &Hamiltonian) -> impl Fn(&PhasePoint) -> Result<DVector<f64>> + '_ {
    move |z: &PhasePoint| {
        let g = h.gradient(z)?;
        let m = h.dof();
        Ok(DVector::from_fn(2 * m, |i, _| if i < m { g[m + i] } else { -g[i - m] }))
    }
}

/// Integration methods. Leapfrog needs a separable Hamiltonian; implicit
/// midpoint handles any smooth H via fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Leapfrog,
    ImplicitMidpoint,
}

/// A discrete trajectory with a fixed step.
#[derive(Debug, Clone)]
pub struct PhaseTrajectory {
    dt: f64,
    states: Vec<PhasePoint>,
    /// Momentum rates ṗ along the trajectory, when available.
    r: Option<Vec<DVector<f64>>>,
}

impl PhaseTrajectory {
    pub fn new(dt: f64, states: Vec<PhasePoint>, r: Option<Vec<DVector<f64>>>) -> Result<Self> {
        if dt <= 0.0 || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("step dt = {dt} must be positive")));
        }
        if states.is_empty() {
            return Err(Error::InvalidInput("trajectory needs at least one state".into()));
        }
        let m = states[0].dof();
        if states.iter().any(|s| s.dof() != m) {
            return Err(Error::InvalidInput("trajectory states have mixed dimensions".into()));
        }
        if let Some(rates) = &r {
            if rates.len() != states.len() || rates.iter().any(|v| v.len() != m) {
                return Err(Error::InvalidInput("rate list does not match states".into()));
            }
        }
        Ok(PhaseTrajectory { dt, states, r })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn states(&self) -> &[PhasePoint] {
        &self.states
    }

    pub fn rates(&self) -> Option<&[DVector<f64>]> {
        self.r.as_deref()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &PhasePoint {
        self.states.last().expect("non-empty by construction")
    }
}

const MIDPOINT_TOL: f64 = 1e-12;
const MIDPOINT_MAX_ITER: usize = 100;

fn field_vector(h: &Hamiltonian, z: &DVector<f64>) -> Result<DVector<f64>> {
    let zp = PhasePoint::from_vector(z)?;
    symplectic_gradient(h, &zp)
}

fn midpoint_step(h: &Hamiltonian, z: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
    // Fixed point of z' = z + dt·f((z + z')/2), seeded by forward Euler.
    let f0 = field_vector(h, z)?;
    let mut znext = z + &f0 * dt;
    for _ in 0..MIDPOINT_MAX_ITER {
        let mid = (z + &znext) * 0.5;
        let fmid = field_vector(h, &mid)?;
        let candidate = z + fmid * dt;
        let delta = (&candidate - &znext).amax();
        znext = candidate;
        if delta <= MIDPOINT_TOL {
            return Ok(znext);
        }
    }
    let mid = (z + &znext) * 0.5;
    let fmid = field_vector(h, &mid)?;
    let residual = (&znext - z - fmid * dt).amax();
    Err(Error::Convergence { iterations: MIDPOINT_MAX_ITER, residual })
}

fn leapfrog_step(h: &Hamiltonian, z: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
    let m = h.dof();
    let grad_q = |q: &DVector<f64>, p: &DVector<f64>| -> Result<DVector<f64>> {
        let g = h.gradient(&PhasePoint::new(q.clone(), p.clone())?)?;
        Ok(g.rows(0, m).into_owned())
    };
    let grad_p = |q: &DVector<f64>, p: &DVector<f64>| -> Result<DVector<f64>> {
        let g = h.gradient(&PhasePoint::new(q.clone(), p.clone())?)?;
        Ok(g.rows(m, m).into_owned())
    };
    let q = z.rows(0, m).into_owned();
    let p = z.rows(m, m).into_owned();
    // Kick-drift-kick. Separability means ∂H/∂q ignores p and vice versa.
    let p_half = &p - grad_q(&q, &p)? * (0.5 * dt);
    let q_new = &q + grad_p(&q, &p_half)? * dt;
    let p_new = &p_half - grad_q(&q_new, &p_half)? * (0.5 * dt);
    let mut out = DVector::zeros(2 * m);
    out.rows_mut(0, m).copy_from(&q_new);
    out.rows_mut(m, m).copy_from(&p_new);
    Ok(out)
}

/// Integrate ż = J∇H from z0 for n steps of size dt.
///
/// The returned trajectory carries ṗ = −∂H/∂q at every state, so contact
/// residuals of both orders can be formed from it.
pub fn integrate(
    h: &Hamiltonian,
    z0: &PhasePoint,
    dt: f64,
    n: usize,
    method: Method,
) -> Result<PhaseTrajectory> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("step dt = {dt} must be positive")));
    }
    if z0.dof() != h.dof() {
        return Err(Error::InvalidInput("initial state does not match Hamiltonian arity".into()));
    }
    if method == Method::Leapfrog && !h.is_separable() {
        return Err(Error::InvalidMethod(
            "leapfrog requires a separable Hamiltonian T(p) + V(q)".into(),
        ));
    }
    let m = h.dof();
    let mut states = Vec::with_capacity(n + 1);
    let mut rates = Vec::with_capacity(n + 1);
    let mut z = z0.to_vector();
    for step in 0..=n {
        let point = PhasePoint::from_vector(&z)?;
        let g = h.gradient(&point)?;
        rates.push(-g.rows(0, m).into_owned());
        states.push(point);
        if step == n {
            break;
        }
        z = match method {
            Method::Leapfrog => leapfrog_step(h, &z, dt)?,
            Method::ImplicitMidpoint => midpoint_step(h, &z, dt)?,
        };
        if !all_finite(z.as_slice()) {
            return Err(Error::Numeric(format!("non-finite state at step {}", step + 1)));
        }
    }
    PhaseTrajectory::new(dt, states, Some(rates))
}

/// Contact residuals of a trajectory under trapezoidal discretization:
/// first order (q_{k+1} − q_k) − ½(p_k + p_{k+1})dt, second order
/// (p_{k+1} − p_k) − ½(r_k + r_{k+1})dt.
pub struct ContactResiduals {
    pub first: Vec<DVector<f64>>,
    pub second: Vec<DVector<f64>>,
}

pub fn contact_residuals(traj: &PhaseTrajectory) -> Result<ContactResiduals> {
    let states = traj.states();
    if states.len() < 2 {
        return Err(Error::InvalidInput("need at least two states for residuals".into()));
    }
    let rates = traj
        .rates()
        .ok_or_else(|| Error::MissingData("trajectory has no momentum rates r".into()))?;
    let dt = traj.dt();
    let mut first = Vec::with_capacity(states.len() - 1);
    let mut second = Vec::with_capacity(states.len() - 1);
    for k in 0..states.len() - 1 {
        let (a, b) = (&states[k], &states[k + 1]);
        first.push(b.q() - a.q() - (a.p() + b.p()) * (0.5 * dt));
        second.push(b.p() - a.p() - (&rates[k] + &rates[k + 1]) * (0.5 * dt));
    }
    Ok(ContactResiduals { first, second })
}

/// First-order residuals only, for trajectories without rates.
pub fn contact_residuals_first(traj: &PhaseTrajectory) -> Result<Vec<DVector<f64>>> {
    let states = traj.states();
    if states.len() < 2 {
        return Err(Error::InvalidInput("need at least two states for residuals".into()));
    }
    let dt = traj.dt();
    Ok((0..states.len() - 1)
        .map(|k| {
            let (a, b) = (&states[k], &states[k + 1]);
            b.q() - a.q() - (a.p() + b.p()) * (0.5 * dt)
        })
        .collect())
}

/// Jacobian of a vector field by central differences.
fn field_jacobian<F>(field: &F, z: &DVector<f64>) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = z.len();
    let h = diff_step(z.amax());
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut plus = z.clone();
        let mut minus = z.clone();
        plus[j] += h;
        minus[j] -= h;
        let col = (field(&plus)? - field(&minus)?) / (2.0 * h);
        jac.set_column(j, &col);
    }
    Ok(jac)
}

/// Volume drift |det M_n| − 1 of an arbitrary flow ż = f(z), where M is
/// the tangent (variational) flow propagated alongside with the implicit
/// midpoint Cayley update. Negative drift means contraction.
pub fn flow_volume_drift<F>(field: F, z0: &DVector<f64>, dt: f64, n: usize) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("step dt = {dt} must be positive")));
    }
    let dim = z0.len();
    let identity = DMatrix::<f64>::identity(dim, dim);
    let mut z = z0.clone();
    let mut tangent = identity.clone();
    for _ in 0..n {
        // Implicit midpoint state update via fixed point.
        let f0 = field(&z)?;
        let mut znext = &z + &f0 * dt;
        let mut converged = false;
        for _ in 0..MIDPOINT_MAX_ITER {
            let mid = (&z + &znext) * 0.5;
            let fmid = field(&mid)?;
            let candidate = &z + fmid * dt;
            let delta = (&candidate - &znext).amax();
            znext = candidate;
            if delta <= MIDPOINT_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence { iterations: MIDPOINT_MAX_ITER, residual: f64::NAN });
        }
        // Tangent update: M ← (I − dt/2·A)⁻¹ (I + dt/2·A) M with A = Df at the midpoint.
        let mid = (&z + &znext) * 0.5;
        let a = field_jacobian(&field, &mid)?;
        let lhs = &identity - &a * (0.5 * dt);
        let rhs = (&identity + &a * (0.5 * dt)) * &tangent;
        tangent = lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numeric("singular variational update".into()))?;
        z = znext;
    }
    Ok(tangent.determinant().abs() - 1.0)
}

/// Volume drift of the Hamiltonian flow of H, propagating the variational
/// equation with the same method used for the state.
pub fn liouville_check(
    h: &Hamiltonian,
    z0: &PhasePoint,
    dt: f64,
    n: usize,
    method: Method,
) -> Result<f64> {
    match method {
        Method::ImplicitMidpoint => {
            let z = z0.to_vector();
            flow_volume_drift(|v| field_vector(h, v), &z, dt, n)
        }
        Method::Leapfrog => leapfrog_volume_drift(h, z0, dt, n),
    }
}

/// Hessian blocks of H by central differences of the gradient.
fn hessian_blocks(h: &Hamiltonian, z: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let m = h.dof();
    let step = diff_step(z.amax());
    let grad_at = |v: &DVector<f64>| -> Result<DVector<f64>> {
        h.gradient(&PhasePoint::from_vector(v)?)
    };
    let mut hqq = DMatrix::zeros(m, m);
    let mut hpp = DMatrix::zeros(m, m);
    for j in 0..m {
        let mut plus = z.clone();
        let mut minus = z.clone();
        plus[j] += step;
        minus[j] -= step;
        let col = (grad_at(&plus)? - grad_at(&minus)?) / (2.0 * step);
        hqq.set_column(j, &col.rows(0, m).into_owned());

        let mut plus = z.clone();
        let mut minus = z.clone();
        plus[m + j] += step;
        minus[m + j] -= step;
        let col = (grad_at(&plus)? - grad_at(&minus)?) / (2.0 * step);
        hpp.set_column(j, &col.rows(m, m).into_owned());
    }
    Ok((hqq, hpp))
}

fn leapfrog_volume_drift(h: &Hamiltonian, z0: &PhasePoint, dt: f64, n: usize) -> Result<f64> {
    if !h.is_separable() {
        return Err(Error::InvalidMethod(
            "leapfrog requires a separable Hamiltonian T(p) + V(q)".into(),
        ));
    }
    let m = h.dof();
    let kick = |hqq: &DMatrix<f64>, half_dt: f64| {
        // [[I, 0], [−half_dt·Hqq, I]], a unit-determinant shear.
        let mut s = DMatrix::<f64>::identity(2 * m, 2 * m);
        s.view_mut((m, 0), (m, m)).copy_from(&(-hqq * half_dt));
        s
    };
    let drift = |hpp: &DMatrix<f64>| {
        // [[I, dt·Hpp], [0, I]].
        let mut s = DMatrix::<f64>::identity(2 * m, 2 * m);
        s.view_mut((0, m), (m, m)).copy_from(&(hpp * dt));
        s
    };
    let mut z = z0.to_vector();
    let mut tangent = DMatrix::<f64>::identity(2 * m, 2 * m);
    for _ in 0..n {
        let (hqq, _) = hessian_blocks(h, &z)?;
        tangent = kick(&hqq, 0.5 * dt) * tangent;

        let z_half = {
            let q = z.rows(0, m).into_owned();
            let p = z.rows(m, m).into_owned();
            let g = h.gradient(&PhasePoint::new(q.clone(), p.clone())?)?;
            let p_half = &p - g.rows(0, m) * (0.5 * dt);
            let mut v = z.clone();
            v.rows_mut(m, m).copy_from(&p_half);
            v
        };
        let (_, hpp_half) = hessian_blocks(h, &z_half)?;
        tangent = drift(&hpp_half) * tangent;

        z = leapfrog_step(h, &z, dt)?;
        let (hqq1, _) = hessian_blocks(h, &z)?;
        tangent = kick(&hqq1, 0.5 * dt) * tangent;
    }
    Ok(tangent.determinant().abs() - 1.0)
}
