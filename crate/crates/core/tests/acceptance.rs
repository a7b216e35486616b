//! End-to-end acceptance checks. Each test prints one pass/fail line with
//! the measured quantity; run with `--nocapture` to see the lines for
//! passing criteria too.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector3};

use kineflow_core::flow_analysis::{
    build_region, estimate_vanishing_point, first_order_invariants, kinematic_cluster, momenta,
    ClusterOpts, FlowField, FlowSample, PencilKind,
};
use kineflow_core::moment_tensor::{
    anticipation, compensation, lie_exp, moment_so3, moment_translation,
    motion_structure_tensor, so3_equivariance_deviation, AlgebraTag, GradientSample,
    LieAlgebraElement,
};
use kineflow_core::phase_space::{
    integrate, liouville_check, poisson_bracket, Hamiltonian, Method, PhasePoint,
};
use kineflow_core::synthgen::{add_noise, scenarios};
use kineflow_core::util::rng::CounterRng;
use kineflow_core::vp_dynamics::{
    simulate, time_reversal_residual, ChargeCenter, ChargeSystem, Sign,
};
use kineflow_core::exterior::{
    exterior_derivative, lie_derivative_cartan, lie_derivative_flow, FormField, VectorField,
};

fn report(name: &str, started: Instant, ok: bool, detail: &str) {
    let verdict = if ok { "[PASS]" } else { "[FAIL]" };
    println!("{verdict} {name}: {detail} ({:.3}s)", started.elapsed().as_secs_f64());
    assert!(ok, "{name}: {detail}");
}

fn random_point(m: usize, rng: &mut CounterRng) -> PhasePoint {
    PhasePoint::new(
        DVector::from_fn(m, |_, _| rng.next_range(-3.0, 3.0)),
        DVector::from_fn(m, |_, _| rng.next_range(-3.0, 3.0)),
    )
    .unwrap()
}

#[test]
fn acceptance_01_canonical_relations() {
    let started = Instant::now();
    let mut rng = CounterRng::new(101);
    let mut worst = 0.0f64;
    for m in 1..=3usize {
        let coords: Vec<Hamiltonian> = (0..m)
            .map(|i| Hamiltonian::new(m, move |z: &PhasePoint| z.q()[i]))
            .collect();
        let momenta_fns: Vec<Hamiltonian> = (0..m)
            .map(|i| Hamiltonian::new(m, move |z: &PhasePoint| z.p()[i]))
            .collect();
        for _ in 0..100 {
            let z = random_point(m, &mut rng);
            for i in 0..m {
                for j in 0..m {
                    let qp = poisson_bracket(&coords[i], &momenta_fns[j], &z).unwrap();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((qp - expected).abs());
                    let qq = poisson_bracket(&coords[i], &coords[j], &z).unwrap();
                    let pp = poisson_bracket(&momenta_fns[i], &momenta_fns[j], &z).unwrap();
                    worst = worst.max(qq.abs()).max(pp.abs());
                }
            }
        }
    }
    report(
        "01 canonical relations",
        started,
        worst <= 1e-9,
        &format!("max deviation {worst:.3e} (tolerance 1e-9)"),
    );
}

#[test]
fn acceptance_02_energy_and_volume() {
    let started = Instant::now();
    let h = Hamiltonian::harmonic(1);
    let z0 = PhasePoint::from_slices(&[1.0], &[0.0]).unwrap();
    let traj = integrate(&h, &z0, 0.01, 10_000, Method::ImplicitMidpoint).unwrap();
    let e0 = h.value(&traj.states()[0]);
    let drift_e = traj.states().iter().map(|s| (h.value(s) - e0).abs()).fold(0.0, f64::max);
    let drift_v = liouville_check(&h, &z0, 0.01, 10_000, Method::ImplicitMidpoint).unwrap();
    report(
        "02 energy and volume",
        started,
        drift_e <= 1e-8 && drift_v.abs() <= 1e-8,
        &format!("|dH| {drift_e:.3e}, volume drift {drift_v:.3e} (tolerances 1e-8)"),
    );
}

#[test]
fn acceptance_03_cartan_identity() {
    let started = Instant::now();
    let mut rng = CounterRng::new(303);
    let mut worst_pair = 0.0f64;
    for n in [2usize, 3] {
        for _ in 0..10 {
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
            for _ in 0..3 {
                let pt: Vec<f64> = (0..n).map(|_| rng.next_range(-1.0, 1.0)).collect();
                let vc = cartan.evaluate(&pt).unwrap();
                let vf = flow.evaluate(&pt).unwrap();
                for (c, f) in vc.iter().zip(&vf) {
                    worst_pair = worst_pair.max((c - f).abs());
                }
            }
        }
    }
    // d² = 0 on polynomial scalar and 1-form coefficients.
    let mut worst_dd = 0.0f64;
    for n in [2usize, 3, 4] {
        let f = FormField::scalar(n, |p: &[f64]| {
            p.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * v * v * v).sum::<f64>()
        })
        .unwrap();
        let ddf = exterior_derivative(&exterior_derivative(&f).unwrap()).unwrap();
        let pt = vec![0.4; n];
        for c in ddf.evaluate(&pt).unwrap() {
            worst_dd = worst_dd.max(c.abs());
        }
    }
    report(
        "03 cartan identity",
        started,
        worst_pair <= 5e-3 && worst_dd <= 1e-4,
        &format!("route gap {worst_pair:.3e} (tol 5e-3), d*d {worst_dd:.3e} (tol 1e-4)"),
    );
}

#[test]
fn acceptance_04_vanishing_point_recovery() {
    let started = Instant::now();
    let (fields, _) = scenarios::forward_dolly(200, 1, 42).unwrap();
    let pp = scenarios::PRINCIPAL_POINT;

    let clean = estimate_vanishing_point(&fields[0].samples).unwrap();
    let clean_vp = clean.vp_point().expect("finite vanishing point");
    let clean_err = (clean_vp[0] - pp[0]).hypot(clean_vp[1] - pp[1]);

    let noisy_field = add_noise(&fields[0], 0.1, 7);
    let noisy = estimate_vanishing_point(&noisy_field.samples).unwrap();
    let noisy_vp = noisy.vp_point().expect("finite vanishing point");
    let noisy_err = (noisy_vp[0] - pp[0]).hypot(noisy_vp[1] - pp[1]);

    let ok = clean_err <= 1e-6
        && noisy_err <= 2.0
        && clean.kind == PencilKind::Source
        && noisy.kind == PencilKind::Source;
    report(
        "04 vanishing-point recovery",
        started,
        ok,
        &format!(
            "clean error {clean_err:.3e} px (tol 1e-6), noisy error {noisy_err:.3} px (tol 2), kinds {:?}/{:?}",
            clean.kind, noisy.kind
        ),
    );
}

#[test]
fn acceptance_05_segmentation_oracle() {
    let started = Instant::now();
    // Apparent velocity separation is ~2 px/frame, so sigma = 0.2 puts the
    // bodies ten noise deviations apart.
    let sigma = 0.2;
    let mut min_agreement = 1.0f64;
    for seed in 0..10u64 {
        let (fields, truth) = scenarios::two_bodies(1, 1000 + seed).unwrap();
        let noisy = add_noise(&fields[0], sigma, seed);
        let clustering = kinematic_cluster(&noisy, 2, &ClusterOpts { seed, ..Default::default() })
            .unwrap();
        let n = truth.labels.len();
        let as_is =
            clustering.labels.iter().zip(&truth.labels).filter(|(a, b)| a == b).count();
        let agreement = as_is.max(n - as_is) as f64 / n as f64;
        min_agreement = min_agreement.min(agreement);
    }
    report(
        "05 segmentation oracle",
        started,
        min_agreement >= 0.99,
        &format!("min label agreement over 10 seeds {min_agreement:.4} (tol 0.99)"),
    );
}

#[test]
fn acceptance_06_region_invariants() {
    let started = Instant::now();
    let square = |side: f64, v: [f64; 2]| {
        FlowField::new(
            0,
            vec![
                FlowSample::new([0.0, 0.0], v),
                FlowSample::new([side, 0.0], v),
                FlowSample::new([side, side], v),
                FlowSample::new([0.0, side], v),
            ],
        )
    };
    let prev_field = square(2.0, [0.0, 0.0]);
    let prev = build_region(0, &[0, 1, 2, 3], &prev_field, None).unwrap();
    let field = square(2.0, [3.0, -1.5]);
    let region = build_region(0, &[0, 1, 2, 3], &field, Some(&prev)).unwrap();

    let null_ok = region.weight == 0.0
        && region.linear_momentum == [0.0, 0.0]
        && region.angular_momentum == 0.0
        && region.kinetic_energy == 0.0;

    // Bit-for-bit recomputation from the stored (w, g, v) triple.
    let grown = square(5.0, [0.7, 0.9]);
    let moving = build_region(1, &[0, 1, 2, 3], &grown, Some(&prev)).unwrap();
    let (lin, ang, kin) = momenta(moving.weight, moving.centroid, moving.velocity);
    let bits_ok = lin[0].to_bits() == moving.linear_momentum[0].to_bits()
        && lin[1].to_bits() == moving.linear_momentum[1].to_bits()
        && ang.to_bits() == moving.angular_momentum.to_bits()
        && kin.to_bits() == moving.kinetic_energy.to_bits();

    report(
        "06 region invariants",
        started,
        null_ok && bits_ok,
        &format!("null-weight momenta zero: {null_ok}, recompute bit-for-bit: {bits_ok}"),
    );
}

#[test]
fn acceptance_07_vp_dynamics() {
    let started = Instant::now();
    let system = ChargeSystem::new(
        vec![ChargeCenter::new([0.0, 0.0], 1.0, Sign::Attractive).unwrap()],
        0.0,
    )
    .unwrap();
    let z0 = PhasePoint::from_slices(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
    let result = simulate(&system, &z0, 1e-3, 100_000).unwrap();
    let mut r_min = f64::MAX;
    let mut r_max = f64::MIN;
    for s in result.trajectory.states() {
        let r = s.q().norm();
        r_min = r_min.min(r);
        r_max = r_max.max(r);
    }
    let excursion = (r_max - 1.0).abs().max((r_min - 1.0).abs());
    let reversal = time_reversal_residual(&system, &z0, 1e-3, 100_000).unwrap();
    let ok = result.energy_drift <= 1e-6 && excursion <= 1e-3 && reversal <= 1e-9;
    report(
        "07 vanishing-point dynamics",
        started,
        ok,
        &format!(
            "energy drift {:.3e} (tol 1e-6), radius excursion {excursion:.3e} (tol 1e-3), reversal {reversal:.3e} (tol 1e-9)",
            result.energy_drift
        ),
    );
}

#[test]
fn acceptance_08_moment_map_conservation() {
    let started = Instant::now();
    let h = Hamiltonian::free_particle(3);
    let z0 = PhasePoint::from_slices(&[1.0, -2.0, 0.5], &[0.3, 0.4, -0.1]).unwrap();
    let traj = integrate(&h, &z0, 0.01, 2000, Method::Leapfrog).unwrap();
    let p0 = moment_translation(&traj.states()[0]);
    let l0 = moment_so3(&traj.states()[0]).unwrap();
    let mut worst = 0.0f64;
    for s in traj.states() {
        worst = worst.max((moment_translation(s) - &p0).amax());
        let l = moment_so3(s).unwrap();
        for i in 0..3 {
            worst = worst.max((l[i] - l0[i]).abs());
        }
    }

    let mut rng = CounterRng::new(808);
    let rotations: Vec<Matrix3<f64>> = (0..100)
        .map(|_| {
            let axis = Vector3::new(
                rng.next_range(-1.0, 1.0),
                rng.next_range(-1.0, 1.0),
                rng.next_range(-1.0, 1.0),
            );
            let angle = rng.next_range(-3.0, 3.0);
            let w = if axis.norm() > 1e-9 { axis.normalize() * angle } else { Vector3::x() };
            let k = DMatrix::from_row_slice(
                3,
                3,
                &[0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0],
            );
            let el = LieAlgebraElement::new(AlgebraTag::So3, k).unwrap();
            let r = lie_exp(&el).unwrap();
            Matrix3::from_fn(|i, j| r[(i, j)])
        })
        .collect();
    let z = PhasePoint::from_slices(&[0.7, -1.2, 0.4], &[1.1, 0.3, -0.8]).unwrap();
    let deviation = so3_equivariance_deviation(&rotations, &z).unwrap();

    report(
        "08 moment-map conservation",
        started,
        worst <= 1e-8 && deviation <= 1e-10,
        &format!(
            "conservation drift {worst:.3e} (tol 1e-8), equivariance deviation {deviation:.3e} (tol 1e-10)"
        ),
    );
}

#[test]
fn acceptance_09_tensor_spectra() {
    let started = Instant::now();
    let mut rng = CounterRng::new(909);
    let mut worst_gap = 0.0f64;
    for _ in 0..100 {
        let jm = DMatrix::from_fn(3, 4, |_, _| rng.next_range(-1.0, 1.0));
        let a = anticipation(&jm).unwrap();
        let c = compensation(&jm).unwrap();
        for i in 0..3 {
            worst_gap = worst_gap.max((a.eigenvalues[i] - c.eigenvalues[i]).abs());
        }
    }
    let mut worst_min_eig = 0.0f64;
    for _ in 0..50 {
        let samples: Vec<GradientSample> = (0..20)
            .map(|_| {
                GradientSample::new(
                    rng.next_range(-2.0, 2.0),
                    rng.next_range(-2.0, 2.0),
                    rng.next_range(-2.0, 2.0),
                )
            })
            .collect();
        let report = motion_structure_tensor(&samples).unwrap();
        worst_min_eig = worst_min_eig.min(*report.eigenvalues.last().unwrap());
    }
    report(
        "09 tensor spectra",
        started,
        worst_gap <= 1e-9 && worst_min_eig >= -1e-12,
        &format!(
            "spectrum gap {worst_gap:.3e} (tol 1e-9), min eigenvalue {worst_min_eig:.3e} (floor -1e-12)"
        ),
    );
}

#[test]
fn acceptance_10_differential_invariants() {
    let started = Instant::now();
    let id = first_order_invariants(&Matrix2::identity());
    let rot = first_order_invariants(&Matrix2::new(0.0, -1.0, 1.0, 0.0));
    let def = first_order_invariants(&Matrix2::new(1.0, 0.0, 0.0, -1.0));
    let errors = [
        (id.div - 2.0).abs(),
        id.curl.abs(),
        id.def_magnitude.abs(),
        rot.div.abs(),
        (rot.curl - 2.0).abs(),
        rot.def_magnitude.abs(),
        def.div.abs(),
        def.curl.abs(),
        (def.def_magnitude - 2.0).abs(),
    ];
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    report(
        "10 differential invariants",
        started,
        worst <= 1e-12,
        &format!("max identity error {worst:.3e} (tol 1e-12)"),
    );
}
