//! Temporary numeric probe (ignored by default).

use carnot_core::dynamics::{
    assemble_hamiltonian, bottom_spectrum, ground_state_vector, rayleigh_quotient, SpectrumConfig,
};
use carnot_core::norms::NormSpec;
use carnot_core::taming::{EnergyModel, OuterFunction, TamingSpec};
use carnot_core::Step2Group;

#[test]
#[ignore]
fn probe_spectrum_refinement() {
    let model = EnergyModel::new(
        Step2Group::heisenberg(),
        NormSpec::type2(16.0),
        TamingSpec::AdditivePower { sigma: 1.0, beta: 1.0 },
        OuterFunction::power(2.0),
    )
    .unwrap();
    for g in [24usize, 32, 48] {
        let cfg = SpectrumConfig {
            grid: vec![g, g, g],
            half_widths: vec![2.6, 2.6, 1.3],
            k: 6,
            tol: 1e-6,
            v_clamp: 1e6,
            max_matvecs: 120_000,
        };
        let t0 = std::time::Instant::now();
        let (h, info) = assemble_hamiltonian(&model, &cfg).unwrap();
        let pairs = bottom_spectrum(&h, 6, 1e-6, 120_000).unwrap();
        let ground = ground_state_vector(&model, &info.grid);
        let rq = rayleigh_quotient(&h, &ground);
        println!(
            "g={g}: eig={:?} rq={rq:.4} clamped={} nnz={} matvecs={} time={:?}",
            pairs.values.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
            info.clamped_nodes,
            info.nnz,
            pairs.matvecs,
            t0.elapsed()
        );
    }
}
