use super::*;
use crate::util::rng::CounterRng;
use approx::assert_relative_eq;

fn assert_form_eq(a: &FormField, b: &FormField, points: &[Vec<f64>], tol: f64) {
    for pt in points {
        let va = a.evaluate(pt).unwrap();
        let vb = b.evaluate(pt).unwrap();
        for (x, y) in va.iter().zip(&vb) {
            assert!((x - y).abs() <= tol, "at {pt:?}: {va:?} vs {vb:?}");
        }
    }
}

fn grid2() -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for &x in &[-1.5, -0.3, 0.0, 0.7, 2.0] {
        for &y in &[-1.0, 0.2, 1.3] {
            pts.push(vec![x, y]);
        }
    }
    pts
}

#[test]
fn wedge_of_coordinate_one_forms_is_area_form() {
    let dx = FormField::basis(2, &[0]).unwrap();
    let dy = FormField::basis(2, &[1]).unwrap();
    let area = wedge(&dx, &dy).unwrap();
    assert_eq!(area.degree(), 2);
    assert_eq!(area.evaluate(&[0.3, -2.0]).unwrap(), vec![1.0]);
}

#[test]
fn wedge_of_one_form_with_itself_vanishes() {
    let a = FormField::new(2, 1, |x: &[f64]| vec![x[0] * x[1], x[0] - 2.0 * x[1]]).unwrap();
    let aa = wedge(&a, &a).unwrap();
    for pt in grid2() {
        assert_relative_eq!(aa.evaluate(&pt).unwrap()[0], 0.0, epsilon = 1e-14);
    }
}

#[test]
fn wedge_matches_symbolic_expansion() {
    // (x dy) ∧ (y dx) = −xy dx∧dy, so −6 at (2, 3).
    let x_dy = FormField::new(2, 1, |p: &[f64]| vec![0.0, p[0]]).unwrap();
    let y_dx = FormField::new(2, 1, |p: &[f64]| vec![p[1], 0.0]).unwrap();
    let w = wedge(&x_dy, &y_dx).unwrap();
    assert_relative_eq!(w.evaluate(&[2.0, 3.0]).unwrap()[0], -6.0, epsilon = 1e-12);
}

#[test]
fn wedge_is_graded_commutative() {
    let mut rng = CounterRng::new(41);
    for n in [3usize, 4] {
        for k in 0..=2usize {
            for l in 0..=2usize {
                if k + l > n {
                    continue;
                }
                let ca: Vec<f64> =
                    (0..combinations(n, k).len()).map(|_| rng.next_range(-2.0, 2.0)).collect();
                let cb: Vec<f64> =
                    (0..combinations(n, l).len()).map(|_| rng.next_range(-2.0, 2.0)).collect();
                let a = FormField::constant(n, k, ca).unwrap();
                let b = FormField::constant(n, l, cb).unwrap();
                let ab = wedge(&a, &b).unwrap();
                let ba = wedge(&b, &a).unwrap();
                let sign = if (k * l) % 2 == 0 { 1.0 } else { -1.0 };
                let pt = vec![0.1; n];
                let vab = ab.evaluate(&pt).unwrap();
                let vba = ba.evaluate(&pt).unwrap();
                for (u, v) in vab.iter().zip(&vba) {
                    assert_relative_eq!(*u, sign * v, epsilon = 1e-13);
                }
            }
        }
    }
}

#[test]
fn wedge_rejects_degree_overflow() {
    let a = FormField::basis(2, &[0, 1]).unwrap();
    let b = FormField::basis(2, &[0]).unwrap();
    assert!(matches!(wedge(&a, &b), Err(Error::DegreeOverflow { .. })));
}

#[test]
fn derivative_of_product_scalar() {
    // d(xy) = y dx + x dy.
    let f = FormField::scalar(2, |p: &[f64]| p[0] * p[1]).unwrap();
    let df = exterior_derivative(&f).unwrap();
    for pt in grid2() {
        let v = df.evaluate(&pt).unwrap();
        assert_relative_eq!(v[0], pt[1], epsilon = 1e-9);
        assert_relative_eq!(v[1], pt[0], epsilon = 1e-9);
    }
}

#[test]
fn derivative_of_rotational_one_form() {
    // d(−y dx + x dy) = 2 dx∧dy.
    let a = FormField::new(2, 1, |p: &[f64]| vec![-p[1], p[0]]).unwrap();
    let da = exterior_derivative(&a).unwrap();
    for pt in grid2() {
        assert_relative_eq!(da.evaluate(&pt).unwrap()[0], 2.0, epsilon = 1e-9);
    }
}

#[test]
fn symplectic_form_is_closed_and_exact() {
    // On ℝ⁴ with coordinates (q₁, q₂, p₁, p₂): ω = dq₁∧dp₁ + dq₂∧dp₂ has
    // dω = 0, and the tautological form α = Σ pᵢ dqᵢ satisfies dα = −ω.
    let pairs = combinations(4, 2);
    let coeff_of = |i: usize, j: usize| pairs.binary_search(&vec![i, j]).unwrap();
    let mut omega_coeffs = vec![0.0; pairs.len()];
    omega_coeffs[coeff_of(0, 2)] = 1.0;
    omega_coeffs[coeff_of(1, 3)] = 1.0;
    let omega = FormField::constant(4, 2, omega_coeffs.clone()).unwrap();
    let domega = exterior_derivative(&omega).unwrap();
    let pt = vec![0.4, -0.2, 1.1, 0.9];
    for c in domega.evaluate(&pt).unwrap() {
        assert_relative_eq!(c, 0.0, epsilon = 1e-9);
    }

    let alpha = FormField::new(4, 1, |z: &[f64]| vec![z[2], z[3], 0.0, 0.0]).unwrap();
    let dalpha = exterior_derivative(&alpha).unwrap();
    let v = dalpha.evaluate(&pt).unwrap();
    for (idx, c) in v.iter().enumerate() {
        assert_relative_eq!(*c, -omega_coeffs[idx], epsilon = 1e-9);
    }
}

#[test]
fn derivative_rejects_top_degree() {
    let top = FormField::basis(2, &[0, 1]).unwrap();
    assert!(matches!(exterior_derivative(&top), Err(Error::DegreeOverflow { .. })));
}

#[test]
fn contraction_of_area_form_along_x_axis() {
    let area = FormField::basis(2, &[0, 1]).unwrap();
    let ex = VectorField::coordinate(2, 0).unwrap();
    let c = contract(&ex, &area).unwrap();
    // i_∂x(dx∧dy) = dy.
    assert_eq!(c.evaluate(&[0.7, -0.1]).unwrap(), vec![0.0, 1.0]);
}

#[test]
fn contraction_of_unrelated_one_form_vanishes() {
    let dy = FormField::basis(2, &[1]).unwrap();
    let ex = VectorField::coordinate(2, 0).unwrap();
    let c = contract(&ex, &dy).unwrap();
    assert_eq!(c.evaluate(&[0.7, -0.1]).unwrap(), vec![0.0]);
}

#[test]
fn contraction_matches_symbolic_oracle() {
    // i_{(y,−x)}(dx∧dy) = y dy + x dx: coefficients (x, y) on (dx, dy).
    let area = FormField::basis(2, &[0, 1]).unwrap();
    let field = VectorField::new(2, |p: &[f64]| vec![p[1], -p[0]]).unwrap();
    let c = contract(&field, &area).unwrap();
    let v = c.evaluate(&[1.0, 2.0]).unwrap();
    assert_relative_eq!(v[0], 1.0, epsilon = 1e-14);
    assert_relative_eq!(v[1], 2.0, epsilon = 1e-14);
}

#[test]
fn contraction_rejects_zero_forms() {
    let f = FormField::scalar(2, |_| 1.0).unwrap();
    let ex = VectorField::coordinate(2, 0).unwrap();
    assert!(matches!(contract(&ex, &f), Err(Error::DegreeUnderflow)));
}

#[test]
fn contraction_is_an_antiderivation() {
    // i_X(a∧b) = (i_X a)∧b + (−1)^k a∧(i_X b) on polynomial forms; the
    // algebra is exact, so the tolerance is machine-level.
    let n = 3;
    let a = FormField::new(n, 1, |p: &[f64]| vec![p[0] * p[1], p[2], p[0] - p[1]]).unwrap();
    let b = FormField::new(n, 1, |p: &[f64]| vec![p[2] * p[2], p[0], 1.0 + p[1]]).unwrap();
    let x = VectorField::new(n, |p: &[f64]| vec![p[1], -p[0], 0.5 * p[2]]).unwrap();

    let lhs = contract(&x, &wedge(&a, &b).unwrap()).unwrap();
    let term1 = wedge(&contract(&x, &a).unwrap(), &b).unwrap();
    let term2 = wedge(&a, &contract(&x, &b).unwrap()).unwrap();
    let rhs = FormField::axpy(&term1, -1.0, &term2).unwrap(); // (−1)^1 = −1
    let pts: Vec<Vec<f64>> =
        vec![vec![0.3, -0.7, 1.2], vec![1.0, 1.0, 1.0], vec![-2.0, 0.4, 0.1]];
    assert_form_eq(&lhs, &rhs, &pts, 1e-8);
}

#[test]
fn contraction_is_function_linear_in_the_field() {
    // i_{fX} a = f·(i_X a).
    let n = 2;
    let a = FormField::basis(n, &[0, 1]).unwrap();
    let x = VectorField::new(n, |p: &[f64]| vec![p[1], 1.0]).unwrap();
    let fx = VectorField::new(n, |p: &[f64]| {
        let f = p[0] * p[0] - p[1];
        vec![f * p[1], f]
    })
    .unwrap();
    let scaled = contract(&fx, &a).unwrap();
    let base = contract(&x, &a).unwrap();
    for pt in grid2() {
        let f = pt[0] * pt[0] - pt[1];
        let vs = scaled.evaluate(&pt).unwrap();
        let vb = base.evaluate(&pt).unwrap();
        for (s, b) in vs.iter().zip(&vb) {
            assert_relative_eq!(*s, f * b, epsilon = 1e-12);
        }
    }
}

#[test]
fn cartan_derivative_of_translated_one_form() {
    // X = ∂x, a = y dx: i_X da = −dy, d i_X a = dy, sum 0.
    let x = VectorField::coordinate(2, 0).unwrap();
    let a = FormField::new(2, 1, |p: &[f64]| vec![p[1], 0.0]).unwrap();
    let lie = lie_derivative_cartan(&x, &a).unwrap();
    for pt in grid2() {
        let v = lie.evaluate(&pt).unwrap();
        assert_relative_eq!(v[0], 0.0, epsilon = 1e-9);
        assert_relative_eq!(v[1], 0.0, epsilon = 1e-9);
    }
}

#[test]
fn cartan_on_scalars_is_the_directional_derivative() {
    let x = VectorField::coordinate(2, 0).unwrap();
    let f = FormField::scalar(2, |p: &[f64]| p[0] * p[0]).unwrap();
    let lie = lie_derivative_cartan(&x, &f).unwrap();
    for pt in grid2() {
        assert_relative_eq!(lie.evaluate(&pt).unwrap()[0], 2.0 * pt[0], epsilon = 1e-9);
    }
}

#[test]
fn cartan_degree_zero_equals_contracted_differential_exactly() {
    // For 0-forms the Cartan route is literally i_X(df); both must agree
    // bitwise since they share only d and contract.
    let x = VectorField::new(2, |p: &[f64]| vec![p[1] + 0.3, p[0] * p[0]]).unwrap();
    let f = FormField::scalar(2, |p: &[f64]| (p[0] - p[1]).powi(3)).unwrap();
    let via_cartan = lie_derivative_cartan(&x, &f).unwrap();
    let direct = contract(&x, &exterior_derivative(&f).unwrap()).unwrap();
    for pt in grid2() {
        assert_eq!(via_cartan.evaluate(&pt).unwrap(), direct.evaluate(&pt).unwrap());
    }
}

#[test]
fn rotation_preserves_the_area_form() {
    let rot = VectorField::new(2, |p: &[f64]| vec![-p[1], p[0]]).unwrap();
    let area = FormField::basis(2, &[0, 1]).unwrap();
    let lie = lie_derivative_cartan(&rot, &area).unwrap();
    for pt in grid2() {
        assert_relative_eq!(lie.evaluate(&pt).unwrap()[0], 0.0, epsilon = 1e-9);
    }
}

#[test]
fn flow_derivative_of_zero_field_is_zero() {
    let zero = VectorField::constant(vec![0.0, 0.0]).unwrap();
    let a = FormField::new(2, 1, |p: &[f64]| vec![p[0], p[1] * p[1]]).unwrap();
    let lie = lie_derivative_flow(&zero, &a, 1e-3).unwrap();
    // The flow Jacobian is formed numerically, so "zero" carries the
    // rounding of (x+h)−(x−h) divided by t.
    for pt in grid2() {
        let v = lie.evaluate(&pt).unwrap();
        assert_relative_eq!(v[0], 0.0, epsilon = 1e-7);
        assert_relative_eq!(v[1], 0.0, epsilon = 1e-7);
    }
}

#[test]
fn flow_derivative_matches_symbolic_value() {
    // 𝓛_∂x(x dx) = dx.
    let x = VectorField::coordinate(2, 0).unwrap();
    let a = FormField::new(2, 1, |p: &[f64]| vec![p[0], 0.0]).unwrap();
    let lie = lie_derivative_flow(&x, &a, 1e-3).unwrap();
    let v = lie.evaluate(&[0.4, -0.9]).unwrap();
    assert!((v[0] - 1.0).abs() <= 1e-2, "coefficient {}", v[0]);
    assert!(v[1].abs() <= 1e-2);
}

#[test]
fn flow_derivative_rejects_out_of_range_t() {
    let x = VectorField::coordinate(2, 0).unwrap();
    let a = FormField::basis(2, &[0]).unwrap();
    assert!(lie_derivative_flow(&x, &a, 1e-7).is_err());
    assert!(lie_derivative_flow(&x, &a, 0.5).is_err());
}

#[test]
fn cartan_and_flow_routes_agree_on_randomized_suite() {
    let mut rng = CounterRng::new(53);
    let mut cases = 0;
    for n in [2usize, 3] {
        for _ in 0..10 {
            // Linear field and a polynomial 1-form with modest coefficients.
            let a_mat = DMatrix::from_fn(n, n, |_, _| rng.next_range(-1.0, 1.0));
            let field = VectorField::linear(a_mat).unwrap();
            let coef: Vec<f64> = (0..3 * n).map(|_| rng.next_range(-1.0, 1.0)).collect();
            let nn = n;
            let form = FormField::new(n, 1, move |p: &[f64]| {
                (0..nn)
                    .map(|i| {
                        coef[3 * i]
                            + coef[3 * i + 1] * p[i % nn]
                            + coef[3 * i + 2] * p[(i + 1) % nn] * p[i % nn]
                    })
                    .collect()
            })
            .unwrap();
            let cartan = lie_derivative_cartan(&field, &form).unwrap();
            let flow = lie_derivative_flow(&field, &form, 1e-3).unwrap();
            let pt: Vec<f64> = (0..n).map(|_| rng.next_range(-1.0, 1.0)).collect();
            let vc = cartan.evaluate(&pt).unwrap();
            let vf = flow.evaluate(&pt).unwrap();
            for (c, f) in vc.iter().zip(&vf) {
                assert!((c - f).abs() <= 5e-3, "cartan {c} vs flow {f}");
            }
            cases += 1;
        }
    }
    assert_eq!(cases, 20);
}

#[test]
fn coordinate_fields_commute() {
    let ex = VectorField::coordinate(2, 0).unwrap();
    let ey = VectorField::coordinate(2, 1).unwrap();
    let b = lie_bracket(&ex, &ey).unwrap();
    for pt in grid2() {
        let v = b.evaluate(&pt).unwrap();
        assert_relative_eq!(v[0], 0.0, epsilon = 1e-10);
        assert_relative_eq!(v[1], 0.0, epsilon = 1e-10);
    }
}

#[test]
fn bracket_of_rotation_with_translation() {
    // X = (−y, x), Y = (1, 0): [X, Y] = DY·X − DX·Y = −DX·(1,0) = (0, −1).
    let x = VectorField::new(2, |p: &[f64]| vec![-p[1], p[0]]).unwrap();
    let y = VectorField::constant(vec![1.0, 0.0]).unwrap();
    let b = lie_bracket(&x, &y).unwrap();
    let v = b.evaluate(&[0.3, 0.8]).unwrap();
    assert_relative_eq!(v[0], 0.0, epsilon = 1e-9);
    assert_relative_eq!(v[1], -1.0, epsilon = 1e-9);
}

#[test]
fn bracket_is_antisymmetric_on_linear_fields() {
    let mut rng = CounterRng::new(61);
    for _ in 0..10 {
        let n = 2;
        let a = DMatrix::from_fn(n, n, |_, _| rng.next_range(-2.0, 2.0));
        let b = DMatrix::from_fn(n, n, |_, _| rng.next_range(-2.0, 2.0));
        let x = VectorField::linear(a).unwrap();
        let y = VectorField::linear(b).unwrap();
        let xy = lie_bracket(&x, &y).unwrap();
        let yx = lie_bracket(&y, &x).unwrap();
        let pt = vec![rng.next_range(-1.0, 1.0), rng.next_range(-1.0, 1.0)];
        let vxy = xy.evaluate(&pt).unwrap();
        let vyx = yx.evaluate(&pt).unwrap();
        for (u, v) in vxy.iter().zip(&vyx) {
            assert!((u + v).abs() <= 1e-8, "antisymmetry violated: {u} vs {v}");
        }
    }
}

#[test]
fn bracket_jacobi_identity_for_linear_fields() {
    // [X,[Y,Z]] + [Y,[Z,X]] + [Z,[X,Y]] = 0; for linear fields the bracket
    // is again linear so nested numeric differentiation stays accurate.
    let mut rng = CounterRng::new(67);
    let n = 2;
    let mk = |rng: &mut CounterRng| {
        VectorField::linear(DMatrix::from_fn(n, n, |_, _| rng.next_range(-1.0, 1.0))).unwrap()
    };
    let x = mk(&mut rng);
    let y = mk(&mut rng);
    let z = mk(&mut rng);
    let total_at = |pt: &[f64]| -> Vec<f64> {
        let t1 = lie_bracket(&x, &lie_bracket(&y, &z).unwrap()).unwrap();
        let t2 = lie_bracket(&y, &lie_bracket(&z, &x).unwrap()).unwrap();
        let t3 = lie_bracket(&z, &lie_bracket(&x, &y).unwrap()).unwrap();
        let v1 = t1.evaluate(pt).unwrap();
        let v2 = t2.evaluate(pt).unwrap();
        let v3 = t3.evaluate(pt).unwrap();
        (0..n).map(|i| v1[i] + v2[i] + v3[i]).collect()
    };
    for _ in 0..5 {
        let pt = vec![rng.next_range(-1.0, 1.0), rng.next_range(-1.0, 1.0)];
        for c in total_at(&pt) {
            assert!(c.abs() <= 1e-6, "Jacobi residual {c}");
        }
    }
}

#[test]
fn double_derivative_vanishes_for_polynomial_forms() {
    // d² = 0 within 1e−4 for polynomial coefficients, degrees 0 and 1, n ≤ 4.
    for n in [2usize, 3, 4] {
        let f = FormField::scalar(n, |p: &[f64]| {
            p.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v * v * v).sum::<f64>()
        })
        .unwrap();
        let ddf = exterior_derivative(&exterior_derivative(&f).unwrap()).unwrap();
        let pt = vec![0.5; n];
        for c in ddf.evaluate(&pt).unwrap() {
            assert!(c.abs() <= 1e-4, "d² residual {c}");
        }
        if n >= 3 {
            let nn = n;
            let a = FormField::new(n, 1, move |p: &[f64]| {
                (0..nn).map(|i| p[(i + 1) % nn] * p[i] + p[i]).collect()
            })
            .unwrap();
            let dda = exterior_derivative(&exterior_derivative(&a).unwrap()).unwrap();
            for c in dda.evaluate(&pt).unwrap() {
                assert!(c.abs() <= 1e-4, "d² residual {c}");
            }
        }
    }
}

#[test]
fn form_dimension_cap_is_enforced() {
    assert!(FormField::scalar(1, |_| 0.0).is_err());
    assert!(FormField::scalar(7, |_| 0.0).is_err());
    assert!(FormField::new(3, 4, |_| vec![]).is_err());
}
