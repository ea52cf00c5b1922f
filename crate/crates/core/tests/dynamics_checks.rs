//! Chain sampler correctness, empirical functional-inequality diagnostics,
//! and the grid Hamiltonian against the classical box oracle.

use carnot_core::dynamics::{
    assemble_hamiltonian, bottom_spectrum, chain_norm_chi_square, empirical_logsobolev,
    empirical_poincare, ground_state_vector, langevin_chain, norm_marginal_bins,
    rayleigh_quotient, ChainConfig, SpectrumConfig, TestFunction,
};
use carnot_core::norms::NormSpec;
use carnot_core::taming::{EnergyModel, OuterFunction, TamingSpec};
use carnot_core::{Error, GroupPoint, Step2Group};

fn tamed_p8() -> EnergyModel {
    EnergyModel::new(
        Step2Group::heisenberg(),
        NormSpec::type2(16.0),
        TamingSpec::AdditivePower { sigma: 1.0, beta: 1.0 },
        OuterFunction::power(8.0),
    )
    .unwrap()
}

fn untamed_p2() -> EnergyModel {
    EnergyModel::new(
        Step2Group::heisenberg(),
        NormSpec::type2(16.0),
        TamingSpec::None,
        OuterFunction::power(2.0),
    )
    .unwrap()
}

fn chain_cfg(steps: usize, burn_in: usize, thin: usize, seed: u64) -> ChainConfig {
    ChainConfig {
        step: 0.05,
        steps,
        burn_in,
        seed,
        start: GroupPoint::new(vec![1.0, 0.0], vec![0.0]),
        auto_tune: true,
        thin,
    }
}

#[test]
fn chain_tunes_into_acceptance_band() {
    let model = tamed_p8();
    let samples = langevin_chain(&model, &chain_cfg(60_000, 20_000, 20, 7)).unwrap();
    assert!(
        (0.2..=0.8).contains(&samples.acceptance),
        "acceptance {} outside band",
        samples.acceptance
    );
    assert!(samples.len() >= 1_000);
}

#[test]
fn chain_marginal_matches_quadrature() {
    let model = tamed_p8();
    let samples = langevin_chain(&model, &chain_cfg(320_000, 20_000, 100, 11)).unwrap();
    let bins = norm_marginal_bins(&model, 20, 4096, 13).unwrap();
    let report = chain_norm_chi_square(&model, &samples, &bins).unwrap();
    assert!(
        report.p_value > 0.01,
        "chi-square p = {} (stat {}, observed {:?})",
        report.p_value,
        report.statistic,
        report.observed
    );
}

#[test]
fn chain_error_paths() {
    let model = tamed_p8();
    let mut cfg = chain_cfg(1000, 100, 1, 3);
    cfg.start = GroupPoint::new(vec![0.0, 0.0], vec![0.5]);
    assert!(matches!(langevin_chain(&model, &cfg), Err(Error::StartOnSingularSet)));

    let mut cfg = chain_cfg(1000, 100, 1, 3);
    cfg.step = -1.0;
    assert!(matches!(langevin_chain(&model, &cfg), Err(Error::InvalidParameter { .. })));

    // steps == burn_in: a legal run that yields no samples, which the
    // diagnostics then refuse.
    let cfg = chain_cfg(500, 500, 1, 3);
    let samples = langevin_chain(&model, &cfg).unwrap();
    assert!(samples.is_empty());
    let fns = TestFunction::default_set(2, 1);
    assert!(matches!(
        empirical_poincare(&model, &samples, &fns),
        Err(Error::EmptySample { .. })
    ));
}

#[test]
fn chain_is_deterministic() {
    let model = tamed_p8();
    let a = langevin_chain(&model, &chain_cfg(20_000, 5_000, 10, 99)).unwrap();
    let b = langevin_chain(&model, &chain_cfg(20_000, 5_000, 10, 99)).unwrap();
    assert_eq!(a.len(), b.len());
    assert_eq!(a.acceptance.to_bits(), b.acceptance.to_bits());
    for i in 0..a.len() {
        assert_eq!(a.point(i), b.point(i));
    }
}

#[test]
fn poincare_report_shapes() {
    let model = tamed_p8();
    let samples = langevin_chain(&model, &chain_cfg(80_000, 20_000, 20, 21)).unwrap();
    let fns = TestFunction::default_set(2, 1);
    let rep = empirical_poincare(&model, &samples, &fns).unwrap();
    let constant = rep.rows.iter().find(|r| r.name == "constant").unwrap();
    assert!(constant.skipped);
    assert!(rep.worst_ratio.is_finite() && rep.worst_ratio > 0.0);

    // Stability across three seeds within ±30% of the mean.
    let mut worsts = vec![rep.worst_ratio];
    for seed in [22u64, 23] {
        let s = langevin_chain(&model, &chain_cfg(80_000, 20_000, 20, seed)).unwrap();
        worsts.push(empirical_poincare(&model, &s, &fns).unwrap().worst_ratio);
    }
    let mean = worsts.iter().sum::<f64>() / worsts.len() as f64;
    for w in &worsts {
        assert!((w - mean).abs() <= 0.3 * mean, "poincare ratios unstable: {worsts:?}");
    }
}

#[test]
fn poincare_untamed_coordinate_is_finite() {
    let model = untamed_p2();
    let samples = langevin_chain(&model, &chain_cfg(80_000, 20_000, 20, 31)).unwrap();
    let fns = vec![TestFunction::HorizontalCoord { i: 0 }];
    let rep = empirical_poincare(&model, &samples, &fns).unwrap();
    assert!(rep.worst_ratio.is_finite());
    assert!(rep.worst_ratio > 0.01 && rep.worst_ratio < 20.0, "ratio = {}", rep.worst_ratio);
}

#[test]
fn logsobolev_report_and_dilating_trend() {
    let model = tamed_p8();
    let samples = langevin_chain(&model, &chain_cfg(80_000, 20_000, 20, 41)).unwrap();
    let fns = TestFunction::default_set(2, 1);
    let rep = empirical_logsobolev(&model, &samples, &fns).unwrap();
    let constant = rep.rows.iter().find(|r| r.name == "constant").unwrap();
    assert!(constant.skipped, "entropy of a constant is zero");
    assert!(rep.worst_ratio.is_finite());

    // Untamed baseline: the dilating family exp(tN²/2) pushes the entropy
    // ratio upward with t, the direction of log-Sobolev failure.
    let model = untamed_p2();
    let samples = langevin_chain(&model, &chain_cfg(120_000, 20_000, 20, 42)).unwrap();
    let mut ratios = Vec::new();
    for t in [0.1, 0.3, 0.5] {
        let fns = vec![TestFunction::DilatedExpNormSq { t, cap: 24.0 }];
        let rep = empirical_logsobolev(&model, &samples, &fns).unwrap();
        ratios.push(rep.worst_ratio);
    }
    assert!(
        ratios[0] < ratios[1] && ratios[1] < ratios[2],
        "dilating ratios should grow: {ratios:?}"
    );
}

#[test]
fn hamiltonian_is_exactly_symmetric() {
    let model = tamed_p8();
    let cfg = SpectrumConfig {
        grid: vec![12, 12, 12],
        half_widths: vec![2.0, 2.0, 1.0],
        k: 3,
        tol: 1e-6,
        v_clamp: 1e6,
        max_matvecs: 20_000,
    };
    let (h, info) = assemble_hamiltonian(&model, &cfg).unwrap();
    assert_eq!(h.asymmetry(), 0.0);
    assert!(info.clamped_nodes > 0, "singular taming must clamp tube nodes");
}

#[test]
fn abelian_box_oracle() {
    // No center, constant energy: H is the distributed Dirichlet Laplacian on
    // a 2-by-1.4 box; eigenvalues π²(k²/a² + l²/b²) to within 2% at 64².
    let model = EnergyModel::new(
        Step2Group::abelian(2).unwrap(),
        NormSpec::type2(1.0),
        TamingSpec::None,
        OuterFunction::power(0.0),
    )
    .unwrap();
    let cfg = SpectrumConfig {
        grid: vec![64, 64],
        half_widths: vec![1.0, 0.7],
        k: 4,
        tol: 1e-8,
        v_clamp: 1e6,
        max_matvecs: 40_000,
    };
    let (h, info) = assemble_hamiltonian(&model, &cfg).unwrap();
    assert_eq!(info.clamped_nodes, 0);
    let pairs = bottom_spectrum(&h, 4, 1e-8, 40_000).unwrap();
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let (a2, b2) = (4.0f64, 1.96f64);
    let mut exact: Vec<f64> = (1..=4)
        .flat_map(|k| (1..=4).map(move |l| pi2 * ((k * k) as f64 / a2 + (l * l) as f64 / b2)))
        .collect();
    exact.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for (i, v) in pairs.values.iter().enumerate() {
        let rel = (v - exact[i]).abs() / exact[i];
        assert!(rel <= 0.02, "eigenvalue {i}: {v} vs {} (rel {rel})", exact[i]);
    }
}

#[test]
fn tamed_spectrum_has_gap_and_ground_state_bound() {
    // Small-grid sanity: positive gap, residuals within tolerance, injected
    // e^{−U/2} Rayleigh quotient below λ₂. The refinement study lives in the
    // acceptance suite.
    let model = EnergyModel::new(
        Step2Group::heisenberg(),
        NormSpec::type2(16.0),
        TamingSpec::AdditivePower { sigma: 1.0, beta: 1.0 },
        OuterFunction::power(2.0),
    )
    .unwrap();
    let cfg = SpectrumConfig {
        grid: vec![24, 24, 24],
        half_widths: vec![2.0, 2.0, 1.0],
        k: 4,
        tol: 1e-6,
        v_clamp: 1e6,
        max_matvecs: 60_000,
    };
    let (h, info) = assemble_hamiltonian(&model, &cfg).unwrap();
    let pairs = bottom_spectrum(&h, 4, 1e-6, 60_000).unwrap();
    assert!(pairs.values[1] > pairs.values[0], "gap must be positive: {:?}", pairs.values);
    for (v, r) in pairs.values.iter().zip(&pairs.residuals) {
        assert!(r <= &(1e-5 * v.abs().max(1.0)), "residual {r} too large for {v}");
    }
    let ground = ground_state_vector(&model, &info.grid);
    let rq = rayleigh_quotient(&h, &ground);
    assert!(rq < pairs.values[1], "Rayleigh {rq} should sit below λ₂ = {}", pairs.values[1]);
}

#[test]
fn spectrum_config_validation() {
    let model = tamed_p8();
    let mut cfg = SpectrumConfig {
        grid: vec![4, 12, 12],
        half_widths: vec![2.0, 2.0, 1.0],
        k: 3,
        tol: 1e-6,
        v_clamp: 1e6,
        max_matvecs: 100,
    };
    assert!(matches!(assemble_hamiltonian(&model, &cfg), Err(Error::GridTooCoarse { .. })));
    cfg.grid = vec![12, 12];
    assert!(matches!(assemble_hamiltonian(&model, &cfg), Err(Error::DimensionMismatch { .. })));
    cfg.grid = vec![12, 12, 12];
    cfg.k = 1;
    assert!(matches!(assemble_hamiltonian(&model, &cfg), Err(Error::InvalidParameter { .. })));
}
