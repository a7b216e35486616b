//! Exterior calculus on ℝⁿ for small n (2..=6): wedge products, exterior
//! derivatives, contractions, Lie derivatives by Cartan's formula and by
//! flow pullback, and Lie brackets of vector fields.
//!
//! Forms are extensional: a degree-k form is a callable returning its
//! C(n, k) coefficients over lexicographically ordered multi-indices.
//! Coefficient callables must be side-effect free.

use nalgebra::DMatrix;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::util::all_finite;

mod multi_index;
pub use multi_index::{combinations, merge_sign};

pub const MAX_DIM: usize = 6;
pub const MIN_DIM: usize = 2;

type CoeffFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type FieldFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Differentiation step for coefficient functions.
fn form_step(point: &[f64]) -> f64 {
    let mag = point.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    1e-5 * mag.max(1.0)
}

/// A degree-k differential form on ℝⁿ.
#[derive(Clone)]
pub struct FormField {
    dim: usize,
    degree: usize,
    coeffs: CoeffFn,
}

impl fmt::Debug for FormField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormField")
            .field("dim", &self.dim)
            .field("degree", &self.degree)
            .finish()
    }
}

impl FormField {
    pub fn new<F>(dim: usize, degree: usize, coeffs: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        if !(MIN_DIM..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidDimension(format!(
                "dimension {dim} outside supported range {MIN_DIM}..={MAX_DIM}"
            )));
        }
        if degree > dim {
            return Err(Error::DegreeOverflow { degree, dim });
        }
        Ok(FormField { dim, degree, coeffs: Arc::new(coeffs) })
    }

    /// A 0-form (scalar field).
    pub fn scalar<F>(dim: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(dim, 0, move |x| vec![f(x)])
    }

    /// Constant-coefficient form.
    pub fn constant(dim: usize, degree: usize, values: Vec<f64>) -> Result<Self> {
        let expected = combinations(dim, degree).len();
        if values.len() != expected {
            return Err(Error::InvalidInput(format!(
                "expected {expected} coefficients, got {}",
                values.len()
            )));
        }
        Self::new(dim, degree, move |_| values.clone())
    }

    /// The basis form dx_{i₁} ∧ … ∧ dx_{i_k} for a sorted multi-index.
    pub fn basis(dim: usize, index: &[usize]) -> Result<Self> {
        let degree = index.len();
        let combs = combinations(dim, degree);
        let pos = combs
            .iter()
            .position(|c| c.as_slice() == index)
            .ok_or_else(|| Error::InvalidInput(format!("invalid multi-index {index:?}")))?;
        let len = combs.len();
        Self::new(dim, degree, move |_| {
            let mut v = vec![0.0; len];
            v[pos] = 1.0;
            v
        })
    }

    pub fn zero(dim: usize, degree: usize) -> Result<Self> {
        let len = combinations(dim, degree).len();
        Self::new(dim, degree, move |_| vec![0.0; len])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficient vector at a point, validated for length and finiteness.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "point has dimension {}, form lives on ℝ^{}",
                x.len(),
                self.dim
            )));
        }
        let v = (self.coeffs)(x);
        let expected = combinations(self.dim, self.degree).len();
        if v.len() != expected {
            return Err(Error::InvalidInput(format!(
                "coefficient callable returned {} values, expected {expected}",
                v.len()
            )));
        }
        if !all_finite(&v) {
            return Err(Error::Numeric("non-finite form coefficient".into()));
        }
        Ok(v)
    }

    /// Pointwise linear combination a + s·b.
    pub fn axpy(a: &FormField, s: f64, b: &FormField) -> Result<FormField> {
        if a.dim != b.dim || a.degree != b.degree {
            return Err(Error::InvalidInput("mismatched forms in linear combination".into()));
        }
        let (fa, fb) = (a.coeffs.clone(), b.coeffs.clone());
        FormField::new(a.dim, a.degree, move |x| {
            let va = fa(x);
            let vb = fb(x);
            va.iter().zip(&vb).map(|(u, w)| u + s * w).collect()
        })
    }
}

/// A vector field on ℝⁿ.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    eval: FieldFn,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField").field("dim", &self.dim).finish()
    }
}

impl VectorField {
    pub fn new<F>(dim: usize, eval: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        if !(MIN_DIM..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidDimension(format!(
                "dimension {dim} outside supported range {MIN_DIM}..={MAX_DIM}"
            )));
        }
        Ok(VectorField { dim, eval: Arc::new(eval) })
    }

    /// The coordinate field ∂/∂xᵢ.
    pub fn coordinate(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::InvalidInput(format!("axis {i} out of range for dimension {dim}")));
        }
        Self::new(dim, move |_| {
            let mut v = vec![0.0; dim];
            v[i] = 1.0;
            v
        })
    }

    pub fn constant(values: Vec<f64>) -> Result<Self> {
        let dim = values.len();
        Self::new(dim, move |_| values.clone())
    }

    /// The linear field x ↦ A·x.
    pub fn linear(a: DMatrix<f64>) -> Result<Self> {
        let dim = a.nrows();
        if a.ncols() != dim {
            return Err(Error::InvalidInput("linear field needs a square matrix".into()));
        }
        Self::new(dim, move |x| {
            (0..dim).map(|i| (0..dim).map(|j| a[(i, j)] * x[j]).sum()).collect()
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "point has dimension {}, field lives on ℝ^{}",
                x.len(),
                self.dim
            )));
        }
        let v = (self.eval)(x);
        if v.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "field returned {} components, expected {}",
                v.len(),
                self.dim
            )));
        }
        if !all_finite(&v) {
            return Err(Error::Numeric("non-finite vector field value".into()));
        }
        Ok(v)
    }
}

/// Wedge product a ∧ b with shuffle signs.
pub fn wedge(a: &FormField, b: &FormField) -> Result<FormField> {
    if a.dim != b.dim {
        return Err(Error::InvalidInput("wedge of forms on different spaces".into()));
    }
    let n = a.dim;
    let (k, l) = (a.degree, b.degree);
    if k + l > n {
        return Err(Error::DegreeOverflow { degree: k + l, dim: n });
    }
    let combs_a = combinations(n, k);
    let combs_b = combinations(n, l);
    let combs_out = combinations(n, k + l);
    // (source a index, source b index, target index, sign), built once.
    let mut table = Vec::new();
    for (ia, ca) in combs_a.iter().enumerate() {
        for (ib, cb) in combs_b.iter().enumerate() {
            if let Some((merged, sign)) = merge_sign(ca, cb) {
                let target = combs_out
                    .binary_search(&merged)
                    .expect("merged multi-index is always valid");
                table.push((ia, ib, target, sign));
            }
        }
    }
    let out_len = combs_out.len();
    let (fa, fb) = (a.coeffs.clone(), b.coeffs.clone());
    FormField::new(n, k + l, move |x| {
        let va = fa(x);
        let vb = fb(x);
        let mut out = vec![0.0; out_len];
        for &(ia, ib, target, sign) in &table {
            out[target] += sign * va[ia] * vb[ib];
        }
        out
    })
}

/// Exterior derivative d by central differences on the coefficients.
pub fn exterior_derivative(a: &FormField) -> Result<FormField> {
    let n = a.dim;
    let k = a.degree;
    if k == n {
        return Err(Error::DegreeOverflow { degree: k + 1, dim: n });
    }
    let combs_in = combinations(n, k);
    let combs_out = combinations(n, k + 1);
    // (target index, source index, axis, sign): (da)_K = Σ_j (−1)^j ∂_{K[j]} a_{K\K[j]}.
    let mut table = Vec::new();
    for (it, target) in combs_out.iter().enumerate() {
        for (j, &axis) in target.iter().enumerate() {
            let mut source: Vec<usize> = target.clone();
            source.remove(j);
            let is = combs_in.binary_search(&source).expect("sub-index is valid");
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            table.push((it, is, axis, sign));
        }
    }
    let out_len = combs_out.len();
    let f = a.coeffs.clone();
    FormField::new(n, k + 1, move |x| {
        let h = form_step(x);
        // All partials of the whole coefficient vector, one pair of
        // evaluations per axis.
        let mut partials = Vec::with_capacity(n);
        for d in 0..n {
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[d] += h;
            minus[d] -= h;
            let vp = f(&plus);
            let vm = f(&minus);
            partials.push(
                vp.iter().zip(&vm).map(|(p, m)| (p - m) / (2.0 * h)).collect::<Vec<f64>>(),
            );
        }
        let mut out = vec![0.0; out_len];
        for &(it, is, axis, sign) in &table {
            out[it] += sign * partials[axis][is];
        }
        out
    })
}

/// Contraction (interior product) i_X a.
pub fn contract(x_field: &VectorField, a: &FormField) -> Result<FormField> {
    if x_field.dim != a.dim {
        return Err(Error::InvalidInput("contraction across different spaces".into()));
    }
    if a.degree == 0 {
        return Err(Error::DegreeUnderflow);
    }
    let n = a.dim;
    let k = a.degree;
    let combs_in = combinations(n, k);
    let combs_out = combinations(n, k - 1);
    // i_X(dx_I) = Σ_j (−1)^j X_{I[j]} dx_{I\I[j]}.
    let mut table = Vec::new();
    for (is, source) in combs_in.iter().enumerate() {
        for (j, &axis) in source.iter().enumerate() {
            let mut target: Vec<usize> = source.clone();
            target.remove(j);
            let it = combs_out.binary_search(&target).expect("sub-index is valid");
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            table.push((is, it, axis, sign));
        }
    }
    let out_len = combs_out.len();
    let f = a.coeffs.clone();
    let xf = x_field.eval.clone();
    FormField::new(n, k - 1, move |pt| {
        let va = f(pt);
        let vx = xf(pt);
        let mut out = vec![0.0; out_len];
        for &(is, it, axis, sign) in &table {
            out[it] += sign * vx[axis] * va[is];
        }
        out
    })
}

/// Lie derivative via Cartan's identity 𝓛_X = i_X∘d + d∘i_X.
/// For 0-forms only the first term exists and gives the directional
/// derivative X(f).
pub fn lie_derivative_cartan(x_field: &VectorField, a: &FormField) -> Result<FormField> {
    if x_field.dim != a.dim {
        return Err(Error::InvalidInput("Lie derivative across different spaces".into()));
    }
    if a.degree == a.dim {
        // da = 0 identically in top degree, so only the second term remains.
        return exterior_derivative(&contract(x_field, a)?);
    }
    let first = contract(x_field, &exterior_derivative(a)?)?;
    if a.degree == 0 {
        return Ok(first);
    }
    let second = exterior_derivative(&contract(x_field, a)?)?;
    FormField::axpy(&first, 1.0, &second)
}

fn rk4_flow(field: &FieldFn, x: &[f64], t: f64, steps: usize) -> Vec<f64> {
    let dt = t / steps as f64;
    let n = x.len();
    let mut y = x.to_vec();
    for _ in 0..steps {
        let k1 = field(&y);
        let y2: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * dt * k1[i]).collect();
        let k2 = field(&y2);
        let y3: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * dt * k2[i]).collect();
        let k3 = field(&y3);
        let y4: Vec<f64> = (0..n).map(|i| y[i] + dt * k3[i]).collect();
        let k4 = field(&y4);
        for i in 0..n {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

/// Lie derivative approximated by the flow pullback difference
/// (φ*_t a − a)/t, with φ_t integrated by RK4. Agrees with the Cartan
/// route up to O(t) + O(h).
pub fn lie_derivative_flow(x_field: &VectorField, a: &FormField, t: f64) -> Result<FormField> {
    if x_field.dim != a.dim {
        return Err(Error::InvalidInput("Lie derivative across different spaces".into()));
    }
    if !(1e-6..=1e-2).contains(&t.abs()) {
        return Err(Error::InvalidInput(format!("|t| = {} outside [1e-6, 1e-2]", t.abs())));
    }
    let n = a.dim;
    let k = a.degree;
    let steps = ((t.abs() / 1e-3).ceil() as usize).max(1);
    let combs_in = combinations(n, k);
    let combs_idx: Vec<Vec<usize>> = combs_in.clone();
    let out_len = combs_in.len();
    let f = a.coeffs.clone();
    let xf = x_field.eval.clone();
    FormField::new(n, k, move |x| {
        let y = rk4_flow(&xf, x, t, steps);
        if !all_finite(&y) {
            return vec![f64::NAN; out_len];
        }
        let base = f(x);
        if k == 0 {
            let pulled = f(&y);
            return vec![(pulled[0] - base[0]) / t];
        }
        // Jacobian of the flow map by central differences.
        let h = form_step(x);
        let mut dphi = DMatrix::zeros(n, n);
        for d in 0..n {
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[d] += h;
            minus[d] -= h;
            let yp = rk4_flow(&xf, &plus, t, steps);
            let ym = rk4_flow(&xf, &minus, t, steps);
            for r in 0..n {
                dphi[(r, d)] = (yp[r] - ym[r]) / (2.0 * h);
            }
        }
        let at_y = f(&y);
        // (φ*a)_I = Σ_J a_J(φ(x)) det(Dφ[J rows, I cols]).
        let mut out = vec![0.0; out_len];
        for (ii, cols) in combs_idx.iter().enumerate() {
            let mut acc = 0.0;
            for (jj, rows) in combs_idx.iter().enumerate() {
                let minor = DMatrix::from_fn(k, k, |r, c| dphi[(rows[r], cols[c])]);
                acc += at_y[jj] * minor.determinant();
            }
            out[ii] = (acc - base[ii]) / t;
        }
        out
    })
}

/// Lie bracket [X, Y](z) = DY(z)·X(z) − DX(z)·Y(z), Jacobians by central
/// differences.
pub fn lie_bracket(x_field: &VectorField, y_field: &VectorField) -> Result<VectorField> {
    if x_field.dim != y_field.dim {
        return Err(Error::InvalidInput("bracket of fields on different spaces".into()));
    }
    let n = x_field.dim;
    let xf = x_field.eval.clone();
    let yf = y_field.eval.clone();
    VectorField::new(n, move |z| {
        let h = form_step(z);
        let xv = xf(z);
        let yv = yf(z);
        let mut out = vec![0.0; n];
        for d in 0..n {
            let mut plus = z.to_vec();
            let mut minus = z.to_vec();
            plus[d] += h;
            minus[d] -= h;
            let yp = yf(&plus);
            let ym = yf(&minus);
            let xp = xf(&plus);
            let xm = xf(&minus);
            for r in 0..n {
                let dy_rd = (yp[r] - ym[r]) / (2.0 * h);
                let dx_rd = (xp[r] - xm[r]) / (2.0 * h);
                out[r] += dy_rd * xv[d] - dx_rd * yv[d];
            }
        }
        out
    })
}

#[cfg(test)]
mod tests;
