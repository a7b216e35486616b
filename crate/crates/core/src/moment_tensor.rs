//! Motion structure tensors from intensity gradients, anticipation and
//! compensation Gram matrices, moment maps of cotangent-lifted classical
//! group actions, and small Lie-algebra helpers.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase_space::PhasePoint;
use crate::util::jacobi::symmetric_eigenvalues;

/// Default relative rank tolerance.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Spatiotemporal intensity derivatives at one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientSample {
    pub ix: f64,
    pub iy: f64,
    pub it: f64,
}

impl GradientSample {
    pub fn new(ix: f64, iy: f64, it: f64) -> Self {
        GradientSample { ix, iy, it }
    }
}

/// A symmetric matrix with its spectrum and numeric rank.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetricTensorReport {
    /// Row-major entries of the n×n matrix.
    pub matrix: Vec<Vec<f64>>,
    /// Eigenvalues sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Count of eigenvalues above tolerance·max(1, λ_max).
    pub rank: usize,
    pub tolerance: f64,
}

impl SymmetricTensorReport {
    pub fn new(matrix: &DMatrix<f64>, tolerance: f64) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() {
            return Err(Error::InvalidInput("tensor report needs a square matrix".into()));
        }
        let scale = matrix.amax().max(1.0);
        let asym = (matrix - matrix.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::InvalidInput(format!(
                "matrix is not symmetric (defect {asym:.3e})"
            )));
        }
        let eigenvalues = symmetric_eigenvalues(matrix);
        let lmax = eigenvalues.first().copied().unwrap_or(0.0);
        let threshold = tolerance * lmax.max(1.0);
        let rank = eigenvalues.iter().filter(|&&l| l > threshold).count();
        let rows = (0..n).map(|i| (0..n).map(|j| matrix[(i, j)]).collect()).collect();
        Ok(SymmetricTensorReport { matrix: rows, eigenvalues, rank, tolerance })
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.matrix.len();
        DMatrix::from_fn(n, n, |i, j| self.matrix[i][j])
    }
}

/// Third-order raw moments (1/N)Σ gᵢgⱼg_k, optional companion of the
/// structure tensor.
pub type ThirdOrderMoments = [[[f64; 3]; 3]; 3];

/// Motion structure tensor (1/N) Σ ∇I·∇Iᵀ over g = (Ix, Iy, It).
pub fn motion_structure_tensor(samples: &[GradientSample]) -> Result<SymmetricTensorReport> {
    motion_structure_tensor_with(samples, DEFAULT_RANK_TOL, false).map(|(r, _)| r)
}

pub fn motion_structure_tensor_with(
    samples: &[GradientSample],
    rank_tol: f64,
    third_order: bool,
) -> Result<(SymmetricTensorReport, Option<ThirdOrderMoments>)> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no gradient samples".into()));
    }
    let n = samples.len() as f64;
    let mut m = Matrix3::<f64>::zeros();
    for s in samples {
        let g = Vector3::new(s.ix, s.iy, s.it);
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("non-finite gradient sample".into()));
        }
        m += g * g.transpose();
    }
    m /= n;
    let report =
        SymmetricTensorReport::new(&DMatrix::from_fn(3, 3, |i, j| m[(i, j)]), rank_tol)?;
    let moments = if third_order {
        let mut t = [[[0.0f64; 3]; 3]; 3];
        for s in samples {
            let g = [s.ix, s.iy, s.it];
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        t[i][j][k] += g[i] * g[j] * g[k];
                    }
                }
            }
        }
        for plane in &mut t {
            for row in plane.iter_mut() {
                for v in row.iter_mut() {
                    *v /= n;
                }
            }
        }
        Some(t)
    } else {
        None
    };
    Ok((report, moments))
}

/// Anticipation Gram matrix JᵀJ (q×q for a p×q Jacobian).
pub fn anticipation(jm: &DMatrix<f64>) -> Result<SymmetricTensorReport> {
    let m = jm.transpose() * jm;
    SymmetricTensorReport::new(&m, DEFAULT_RANK_TOL)
}

/// Compensation Gram matrix JJᵀ (p×p for a p×q Jacobian).
pub fn compensation(jm: &DMatrix<f64>) -> Result<SymmetricTensorReport> {
    let m = jm * jm.transpose();
    SymmetricTensorReport::new(&m, DEFAULT_RANK_TOL)
}

/// Cotangent-lifted group actions with their standard moment maps.
#[derive(Debug, Clone)]
pub enum GroupAction {
    /// Translations of ℝᵐ: μ = p.
    Translation,
    /// Planar rotations: μ = q ∧ p.
    RotationSo2,
    /// Spatial rotations: μ = q × p.
    RotationSo3,
    /// One linear generator X: μ_X = p·(X q).
    Linear(DMatrix<f64>),
}

/// The value of a moment map component.
#[derive(Debug, Clone, PartialEq)]
pub enum MomentValue {
    Covector(DVector<f64>),
    Scalar(f64),
    Axial([f64; 3]),
}

pub fn moment_map(action: &GroupAction, z: &PhasePoint) -> Result<MomentValue> {
    match action {
        GroupAction::Translation => Ok(MomentValue::Covector(z.p().clone())),
        GroupAction::RotationSo2 => {
            if z.dof() != 2 {
                return Err(Error::InvalidInput("so(2) action needs a planar phase point".into()));
            }
            Ok(MomentValue::Scalar(z.q()[0] * z.p()[1] - z.q()[1] * z.p()[0]))
        }
        GroupAction::RotationSo3 => {
            if z.dof() != 3 {
                return Err(Error::InvalidInput("so(3) action needs a spatial phase point".into()));
            }
            let q = Vector3::new(z.q()[0], z.q()[1], z.q()[2]);
            let p = Vector3::new(z.p()[0], z.p()[1], z.p()[2]);
            let l = q.cross(&p);
            Ok(MomentValue::Axial([l[0], l[1], l[2]]))
        }
        GroupAction::Linear(x) => {
            let m = z.dof();
            if x.nrows() != m || x.ncols() != m {
                return Err(Error::InvalidInput(format!(
                    "generator is {}x{}, phase point has {m} positions",
                    x.nrows(),
                    x.ncols()
                )));
            }
            Ok(MomentValue::Scalar(z.p().dot(&(x * z.q()))))
        }
    }
}

/// Linear momentum μ = p of the translation action.
pub fn moment_translation(z: &PhasePoint) -> DVector<f64> {
    z.p().clone()
}

/// Angular momentum q × p of the so(3) action.
pub fn moment_so3(z: &PhasePoint) -> Result<[f64; 3]> {
    match moment_map(&GroupAction::RotationSo3, z)? {
        MomentValue::Axial(l) => Ok(l),
        _ => unreachable!("so3 action returns an axial vector"),
    }
}

/// Planar angular momentum q ∧ p of the so(2) action.
pub fn moment_so2(z: &PhasePoint) -> Result<f64> {
    match moment_map(&GroupAction::RotationSo2, z)? {
        MomentValue::Scalar(s) => Ok(s),
        _ => unreachable!("so2 action returns a scalar"),
    }
}

/// Max over the given rotations of ‖μ(gq, gp) − g·μ(q, p)‖; the adjoint
/// action of SO(3) on its algebra is the rotation itself.
pub fn so3_equivariance_deviation(rotations: &[Matrix3<f64>], z: &PhasePoint) -> Result<f64> {
    if z.dof() != 3 {
        return Err(Error::InvalidInput("equivariance check needs a spatial phase point".into()));
    }
    let q = Vector3::new(z.q()[0], z.q()[1], z.q()[2]);
    let p = Vector3::new(z.p()[0], z.p()[1], z.p()[2]);
    let mu = q.cross(&p);
    let mut worst = 0.0f64;
    for g in rotations {
        let rotated = (g * q).cross(&(g * p));
        worst = worst.max((rotated - g * mu).norm());
    }
    Ok(worst)
}

/// Supported matrix Lie algebras.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgebraTag {
    So2,
    So3,
    /// Trace-free matrices of the given dimension.
    Sl,
    /// Hamiltonian matrices: J·X symmetric, dimension 2m.
    Sp,
}

/// A validated element of one of the supported algebras.
#[derive(Debug, Clone)]
pub struct LieAlgebraElement {
    pub algebra: AlgebraTag,
    pub matrix: DMatrix<f64>,
}

impl LieAlgebraElement {
    pub fn new(algebra: AlgebraTag, matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n != matrix.ncols() {
            return Err(Error::InvalidInput("algebra elements are square matrices".into()));
        }
        let scale = matrix.amax().max(1.0);
        match algebra {
            AlgebraTag::So2 | AlgebraTag::So3 => {
                let expected = if algebra == AlgebraTag::So2 { 2 } else { 3 };
                if n != expected {
                    return Err(Error::InvalidInput(format!(
                        "so({expected})-elements are {expected}x{expected}, got {n}x{n}"
                    )));
                }
                let defect = (&matrix + matrix.transpose()).amax();
                if defect > 1e-12 * scale {
                    return Err(Error::InvalidInput(format!(
                        "not skew-symmetric (defect {defect:.3e})"
                    )));
                }
            }
            AlgebraTag::Sl => {
                let trace: f64 = (0..n).map(|i| matrix[(i, i)]).sum();
                if trace.abs() > 1e-12 * scale {
                    return Err(Error::InvalidInput(format!("trace {trace:.3e} is not zero")));
                }
            }
            AlgebraTag::Sp => {
                if n % 2 != 0 {
                    return Err(Error::InvalidInput("sp(2m) elements have even dimension".into()));
                }
                let j = crate::phase_space::canonical_j(n / 2)?;
                let jx = &j * &matrix;
                let defect = (&jx - jx.transpose()).amax();
                if defect > 1e-12 * scale {
                    return Err(Error::InvalidInput(format!(
                        "J·X is not symmetric (defect {defect:.3e})"
                    )));
                }
            }
        }
        Ok(LieAlgebraElement { algebra, matrix })
    }
}

/// Skew matrix of an axis-angle vector.
fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0)
}

/// Exponential of an so(2) or so(3) element, by Rodrigues' formula.
pub fn lie_exp(x: &LieAlgebraElement) -> Result<DMatrix<f64>> {
    match x.algebra {
        AlgebraTag::So2 => {
            let theta = x.matrix[(1, 0)];
            Ok(DMatrix::from_row_slice(
                2,
                2,
                &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()],
            ))
        }
        AlgebraTag::So3 => {
            let w = Vector3::new(x.matrix[(2, 1)], x.matrix[(0, 2)], x.matrix[(1, 0)]);
            let theta = w.norm();
            let k = hat(&w);
            let r = if theta < 1e-8 {
                // Second-order series keeps exp(0) = I exact.
                Matrix3::identity() + k + k * k * 0.5
            } else {
                Matrix3::identity()
                    + k * (theta.sin() / theta)
                    + k * k * ((1.0 - theta.cos()) / (theta * theta))
            };
            Ok(DMatrix::from_fn(3, 3, |i, j| r[(i, j)]))
        }
        other => Err(Error::InvalidMethod(format!(
            "exponential map implemented for so(2)/so(3) only, got {other:?}"
        ))),
    }
}

/// Logarithm of a rotation matrix back into its algebra. Rotations by an
/// angle within 1e-9 of π have an ambiguous axis and are rejected.
pub fn lie_log(r: &DMatrix<f64>) -> Result<LieAlgebraElement> {
    let n = r.nrows();
    if n != r.ncols() || !(n == 2 || n == 3) {
        return Err(Error::InvalidInput("logarithm expects a 2x2 or 3x3 rotation".into()));
    }
    let defect = (r.transpose() * r - DMatrix::identity(n, n)).amax();
    if defect > 1e-9 {
        return Err(Error::InvalidInput(format!("not orthogonal (defect {defect:.3e})")));
    }
    if (r.determinant() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("determinant must be +1".into()));
    }
    if n == 2 {
        let theta = r[(1, 0)].atan2(r[(0, 0)]);
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -theta, theta, 0.0]);
        return LieAlgebraElement::new(AlgebraTag::So2, m);
    }
    let trace = r[(0, 0)] + r[(1, 1)] + r[(2, 2)];
    if trace <= -1.0 + 1e-9 {
        return Err(Error::InvalidInput(
            "rotation angle at pi: axis is ambiguous".into(),
        ));
    }
    let cos_theta = ((trace - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    let skew_part = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    );
    let w = if theta < 1e-8 {
        skew_part * 0.5
    } else {
        skew_part * (theta / (2.0 * theta.sin()))
    };
    let k = hat(&w);
    LieAlgebraElement::new(AlgebraTag::So3, DMatrix::from_fn(3, 3, |i, j| k[(i, j)]))
}

/// Orthogonal (Frobenius) projection onto the tagged algebra:
/// sl: M − (tr M/n)·I; so: (M − Mᵀ)/2; sp: Jᵀ·sym(J·M).
pub fn project(algebra: AlgebraTag, m: &DMatrix<f64>) -> Result<LieAlgebraElement> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidInput("projection expects a square matrix".into()));
    }
    let projected = match algebra {
        AlgebraTag::So2 | AlgebraTag::So3 => {
            let expected = if algebra == AlgebraTag::So2 { 2 } else { 3 };
            if n != expected {
                return Err(Error::InvalidInput(format!(
                    "so({expected}) projection needs a {expected}x{expected} matrix"
                )));
            }
            (m - m.transpose()) * 0.5
        }
        AlgebraTag::Sl => {
            let trace: f64 = (0..n).map(|i| m[(i, i)]).sum();
            m - DMatrix::identity(n, n) * (trace / n as f64)
        }
        AlgebraTag::Sp => {
            if n % 2 != 0 {
                return Err(Error::InvalidInput("sp projection needs even dimension".into()));
            }
            let j = crate::phase_space::canonical_j(n / 2)?;
            let jm = &j * m;
            let sym = (&jm + jm.transpose()) * 0.5;
            // J⁻¹ = Jᵀ, so X = Jᵀ·sym(JM) has J·X symmetric by construction.
            j.transpose() * sym
        }
    };
    LieAlgebraElement::new(algebra, projected)
}
