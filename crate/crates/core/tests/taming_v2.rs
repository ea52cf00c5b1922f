//! Energy assembly, the coercivity potential V₂, the FD oracle matrix, and
//! the partition estimator.

use carnot_core::exec::substream;
use carnot_core::fd_sublaplacian;
use carnot_core::group::GeneralizedHeisenbergParams;
use carnot_core::norms::NormSpec;
use carnot_core::taming::{partition_estimate, EnergyModel, OuterFunction, TamingSpec};
use carnot_core::{Error, GroupPoint, Step2Group};
use rand::Rng;

fn heis_model(taming: TamingSpec, p: f64) -> EnergyModel {
    EnergyModel::new(Step2Group::heisenberg(), NormSpec::type2(16.0), taming, OuterFunction::power(p))
        .unwrap()
}

fn random_point(g: &Step2Group, rng: &mut impl Rng, min_x: f64, max_norm: f64) -> GroupPoint {
    loop {
        let p = GroupPoint::new(
            (0..g.horizontal_dim()).map(|_| rng.random_range(-2.0..2.0)).collect(),
            (0..g.center_dim()).map(|_| rng.random_range(-2.0..2.0)).collect(),
        );
        if p.x_norm() >= min_x && p.euclid_norm() <= max_norm {
            return p;
        }
    }
}

#[test]
fn xi_bundle_examples() {
    // |x|^{-σ} at σ = 1, n = 2, |x| = 1: value 1, |∇ξ| = 1, Δξ = 1.
    let t = TamingSpec::AdditivePower { sigma: 1.0, beta: 1.0 };
    let b = t.xi_bundle(2, &[1.0, 0.0]).unwrap();
    assert!((b.value - 1.0).abs() < 1e-15);
    assert!((b.grad_norm() - 1.0).abs() < 1e-15);
    assert!((b.laplacian - 1.0).abs() < 1e-15);

    // log(1/|x|) at n = 2, |x| = 1: value 0, |∇ξ| = 1, Δξ = −(n−2) = 0.
    let t = TamingSpec::AdditiveLog { beta: 1.0 };
    let b = t.xi_bundle(2, &[0.0, 1.0]).unwrap();
    assert!(b.value.abs() < 1e-15);
    assert!((b.grad_norm() - 1.0).abs() < 1e-15);
    assert!(b.laplacian.abs() < 1e-15);

    assert!(matches!(t.xi_bundle(2, &[0.0, 0.0]), Err(Error::OriginSingularity)));
}

#[test]
fn mult2_seam_value_continuous_gradient_jump_matches_formula() {
    let l = 0.5;
    let t = TamingSpec::MultiplicativeTwo { l, alpha: 0.5 };
    let eps = 1e-9;
    let inner = t.xi_bundle(2, &[1.0 - eps, 0.0]).unwrap();
    let outer = t.xi_bundle(2, &[1.0 + eps, 0.0]).unwrap();

    // Value continuous at |x| = 1 with ξ̃(1) = log(e + 1).
    let seam_value = (std::f64::consts::E + 1.0).ln();
    assert!((inner.value - seam_value).abs() <= 1e-8);
    assert!((outer.value - seam_value).abs() <= 1e-8);

    // The radial derivative jumps by q'(1)·ξ(1) = 2·log(e+1)/(1−l): the
    // matching factor is C⁰ but not C¹, and the bundle reports that honestly.
    let jump = outer.grad[0] - inner.grad[0];
    let expect = 2.0 * seam_value / (1.0 - l);
    assert!(
        (jump - expect).abs() <= 1e-6 * expect,
        "gradient jump {jump} vs analytic {expect}"
    );
    // The Laplacian jumps as well; record that it is nonzero.
    assert!((outer.laplacian - inner.laplacian).abs() > 1.0);
}

#[test]
fn energy_bundle_examples() {
    // Untamed V(s) = s² at ((1,0),0): U = 1, |∇U| = 2, ΔU = 8.
    let model = heis_model(TamingSpec::None, 2.0);
    let p = GroupPoint::new(vec![1.0, 0.0], vec![0.0]);
    let b = model.energy_bundle(&p).unwrap();
    assert!((b.value - 1.0).abs() < 1e-14);
    assert!((b.grad_norm() - 2.0).abs() < 1e-12);
    assert!((b.laplacian - 8.0).abs() < 1e-12);

    // Additive σ = β = 1 with V(s) = s: the gradient cancels exactly at
    // the ring |x| = 1, z = 0 (the locus the scan hunts for).
    let model = heis_model(TamingSpec::AdditivePower { sigma: 1.0, beta: 1.0 }, 1.0);
    let b = model.energy_bundle(&p).unwrap();
    assert!((b.value - 2.0).abs() < 1e-14);
    assert!(b.grad_norm() < 1e-14, "gradient should cancel, got {}", b.grad_norm());
}

#[test]
fn v2_closed_examples() {
    // Untamed square energy: V₂ = |x|²(N²−4)/N²; zero on the center, −3 at
    // the unit horizontal point.
    let model = heis_model(TamingSpec::None, 2.0);
    let center = GroupPoint::new(vec![0.0, 0.0], vec![0.9]);
    assert!(model.v2_closed(&center).unwrap().abs() <= 1e-12);
    let p = GroupPoint::new(vec![1.0, 0.0], vec![0.0]);
    assert!((model.v2_closed(&p).unwrap() + 3.0).abs() <= 1e-12);

    // Tamed V₂ blows up toward the tube along {N = 1}.
    let model = heis_model(TamingSpec::AdditivePower { sigma: 1.0, beta: 1.0 }, 8.0);
    let mut last = f64::NEG_INFINITY;
    for r in [1e-1f64, 1e-2, 1e-3] {
        let z = (1.0 - r * r * r * r).max(0.0).sqrt() / 4.0;
        let p = GroupPoint::new(vec![r, 0.0], vec![z]);
        let v2 = model.v2_closed(&p).unwrap();
        assert!(v2 > last, "V₂ should increase toward the tube: {v2} after {last}");
        last = v2;
    }
    assert!(last > 1e10);
}

fn v2_cells() -> Vec<EnergyModel> {
    let heis = Step2Group::heisenberg();
    let ghg = Step2Group::generalized_heisenberg(
        GeneralizedHeisenbergParams::new(vec![1.0, 1.0]).unwrap(),
    )
    .unwrap();
    let tamings = [
        TamingSpec::None,
        TamingSpec::AdditivePower { sigma: 1.0, beta: 1.0 },
        TamingSpec::AdditiveLog { beta: 1.0 },
        TamingSpec::MultiplicativePower { sigma: 1.0 },
        TamingSpec::MultiplicativeTwo { l: 0.5, alpha: 0.5 },
    ];
    let mut cells = Vec::new();
    for taming in &tamings {
        for p in [2.0, 8.0] {
            for norm in [NormSpec::type2(16.0), NormSpec::type2_augmented(16.0)] {
                cells.push(
                    EnergyModel::new(heis.clone(), norm, taming.clone(), OuterFunction::power(p))
                        .unwrap(),
                );
            }
            cells.push(
                EnergyModel::new(
                    ghg.clone(),
                    NormSpec::kaplan_gh(vec![1.0, 1.0]),
                    taming.clone(),
                    OuterFunction::power(p),
                )
                .unwrap(),
            );
        }
    }
    cells
}

#[test]
fn v2_fd_oracle_matrix_subset() {
    // A 50-point slice of the acceptance matrix (the full 1000-point run
    // lives in the acceptance suite).
    for (idx, model) in v2_cells().into_iter().enumerate() {
        let mut rng = substream(60, idx as u64);
        let mut checked = 0;
        while checked < 50 {
            let p = random_point(&model.group, &mut rng, 0.15, 10.0);
            let h = 1e-4;
            // Keep clear of the matching seam where ΔU is discontinuous.
            if matches!(model.taming, TamingSpec::MultiplicativeTwo { .. })
                && (p.x_norm() - 1.0).abs() < 20.0 * h
            {
                continue;
            }
            let closed = model.v2_closed(&p).unwrap();
            let fd = model.v2_fd_oracle(&p, h).unwrap();
            let scale = closed.abs().max(fd.abs()).max(1.0);
            assert!(
                (closed - fd).abs() <= 1e-3 * scale,
                "cell {idx} ({}, {}): closed {closed} vs fd {fd} at {p:?}",
                model.taming.label(),
                model.norm.label()
            );
            checked += 1;
        }
    }
}

#[test]
fn v2_fd_halving_convergence() {
    // Median error-reduction factor when h → h/2 sits near 4 (second order).
    let model = heis_model(TamingSpec::AdditivePower { sigma: 1.0, beta: 1.0 }, 2.0);
    let mut rng = substream(61, 0);
    let mut factors = Vec::new();
    while factors.len() < 60 {
        let p = random_point(&model.group, &mut rng, 0.3, 6.0);
        let closed = model.v2_closed(&p).unwrap();
        let h = 2e-3;
        let e1 = (model.v2_fd_oracle(&p, h).unwrap() - closed).abs();
        let e2 = (model.v2_fd_oracle(&p, h / 2.0).unwrap() - closed).abs();
        if e1 > 1e-10 && e2 > 1e-12 {
            factors.push(e1 / e2);
        }
    }
    factors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = factors[factors.len() / 2];
    assert!((3.5..=4.5).contains(&median), "median halving factor {median}");
}

#[test]
fn ground_state_identity() {
    // Δe^{−U/2} = V₂·e^{−U/2}, probed by the FD sub-Laplacian.
    for model in [
        heis_model(TamingSpec::None, 2.0),
        heis_model(TamingSpec::AdditivePower { sigma: 1.0, beta: 1.0 }, 2.0),
    ] {
        let mut rng = substream(62, 1);
        for _ in 0..20 {
            let p = random_point(&model.group, &mut rng, 0.4, 3.0);
            let field = |q: &GroupPoint| model.energy(q).map(|u| (-0.5 * u).exp());
            let lhs = fd_sublaplacian(&model.group, &field, &p, 1e-4).unwrap();
            let rhs = model.v2_closed(&p).unwrap() * (-0.5 * model.energy(&p).unwrap()).exp();
            assert!(
                (lhs - rhs).abs() <= 2e-3 * rhs.abs().max(1e-3),
                "Δe^(-U/2) = {lhs} vs V₂e^(-U/2) = {rhs} at {p:?}"
            );
        }
    }
}

#[test]
fn mult2_energy_fd_match_on_both_branches() {
    let model = heis_model(TamingSpec::MultiplicativeTwo { l: 0.5, alpha: 0.5 }, 2.0);
    let mut rng = substream(63, 2);
    for &(lo, hi) in &[(0.2, 0.8), (1.2, 2.0)] {
        for _ in 0..25 {
            let r = rng.random_range(lo..hi);
            let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let p = GroupPoint::new(
                vec![r * angle.cos(), r * angle.sin()],
                vec![rng.random_range(-0.5..0.5f64)],
            );
            let closed = model.v2_closed(&p).unwrap();
            let fd = model.v2_fd_oracle(&p, 5e-5).unwrap();
            assert!(
                (closed - fd).abs() <= 1e-3 * closed.abs().max(1.0),
                "branch ({lo},{hi}): {closed} vs {fd}"
            );
        }
    }
}

#[test]
fn additive_taming_increases_energy_pointwise() {
    let untamed = heis_model(TamingSpec::None, 2.0);
    let tamed = heis_model(TamingSpec::AdditivePower { sigma: 1.0, beta: 1.0 }, 2.0);
    let mut rng = substream(64, 3);
    for _ in 0..100 {
        let p = random_point(&untamed.group, &mut rng, 1e-6, 10.0);
        let u0 = untamed.energy(&p).unwrap();
        let u1 = tamed.energy(&p).unwrap();
        assert!(u1 >= u0, "taming must increase U: {u1} < {u0}");
    }
}

#[test]
fn partition_estimates() {
    let untamed = heis_model(TamingSpec::None, 2.0);
    let est0 = partition_estimate(&untamed, 60_000, 77).unwrap();
    assert!(est0.finite, "untamed square energy is integrable: {est0:?}");
    assert!(est0.z_hat > 0.0);

    let tamed = heis_model(TamingSpec::AdditivePower { sigma: 1.0, beta: 1.0 }, 2.0);
    let est1 = partition_estimate(&tamed, 60_000, 77).unwrap();
    assert!(est1.finite);
    // Same proposal stream and e^{-ξ} ≤ 1 make the ordering hold samplewise.
    assert!(est1.z_hat <= est0.z_hat);

    let flat = heis_model(TamingSpec::None, 0.0);
    let est2 = partition_estimate(&flat, 60_000, 77).unwrap();
    assert!(!est2.finite, "constant energy is not normalizable: {est2:?}");

    assert!(matches!(
        partition_estimate(&untamed, 100, 77),
        Err(Error::BudgetTooSmall { .. })
    ));
}

#[test]
fn singular_set_conventions() {
    let tamed = heis_model(TamingSpec::AdditivePower { sigma: 1.0, beta: 1.0 }, 2.0);
    let tube = GroupPoint::new(vec![0.0, 0.0], vec![0.5]);
    assert_eq!(tamed.energy(&tube).unwrap(), f64::INFINITY);
    assert!(matches!(tamed.energy_bundle(&tube), Err(Error::OriginSingularity)));
    assert_eq!(tamed.v2_or_infinity(&tube), f64::INFINITY);
    assert!(tamed.v2_fd_oracle(&GroupPoint::new(vec![1e-5, 0.0], vec![0.0]), 1e-4).is_err());
}

#[test]
fn outer_function_domain() {
    let v = OuterFunction::power(2.5);
    assert!(matches!(v.eval2(-1.0), Err(Error::OuterSingularity { .. })));
    assert!(v.eval2(2.0).is_ok());
    let flat = OuterFunction::power(0.0);
    assert_eq!(flat.eval2(5.0).unwrap(), (1.0, 0.0, 0.0));
    assert!(OuterFunction::power(-1.0).validate().is_err());
}
