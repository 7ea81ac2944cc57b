use proptest::prelude::*;
use sqz_core::dynamics::{step_em, Integrator, StepConfig};
use sqz_core::noise::WienerPath;
use sqz_core::oracle::{
    collective_projection, equivalence_check, full_sme_step, FullDensityMatrix, OracleModel,
};
use sqz_core::{derive_params, DerivedParams, PhysicalParams};
use std::f64::consts::PI;

fn params(n: usize, vartheta_pi: f64, gamma_scale: f64) -> DerivedParams {
    let mut p = PhysicalParams::reference();
    p.n_atoms = n;
    p.vartheta = vartheta_pi * PI;
    p.gamma *= gamma_scale;
    derive_params(&p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trajectories_agree(
        n in 2usize..=3,
        vartheta in 0.0f64..0.5,
        theta in 0.0f64..PI,
        phi in -PI..PI,
        seed in any::<u64>(),
    ) {
        let d = params(n, vartheta, 1.0);
        let cfg = StepConfig { dt: 1e-4, t_end: 0.1, ..StepConfig::default() };
        let rep = equivalence_check(&d, &cfg, theta, phi, &WienerPath::seeded(seed, 1000)).unwrap();
        prop_assert_eq!(rep.steps, 1000);
        prop_assert!(rep.passed(1e-8), "{:?}", rep);
        prop_assert!(rep.max_permutation_residual < 1e-12);
    }

    #[test]
    fn projection_commutes_with_one_step(
        n in 2usize..=4,
        vartheta in 0.0f64..0.5,
        gamma_scale in 0.0f64..20.0,
        theta in 0.0f64..PI,
        phi in -PI..PI,
        z in -4.0f64..4.0,
        seed in any::<u64>(),
    ) {
        let dt: f64 = 1e-4;
        let d = params(n, vartheta, gamma_scale);
        let model = OracleModel::new(&d, n).unwrap();
        // Move away from the product state first so coherences of all orders are populated.
        let mut rho = FullDensityMatrix::css(theta, phi, n).unwrap();
        for &zz in WienerPath::seeded(seed, 20).draws() {
            rho = full_sme_step(&rho, &model, 1e-3, zz * 1e-3f64.sqrt()).unwrap();
        }
        let s = collective_projection(&rho).unwrap();
        let dw = z * dt.sqrt();
        let oracle = collective_projection(&full_sme_step(&rho, &model, dt, dw).unwrap()).unwrap();
        let collective = step_em(&s, &d, dt, dw).unwrap();
        prop_assert!(oracle.max_abs_diff(&collective) < 1e-8 * dt);

        let mut fused = s.clone();
        Integrator::new(d.clone(), dt, 1).step_dw(&mut fused, dw).unwrap();
        prop_assert!(oracle.max_abs_diff(&fused) < 1e-8 * dt);
    }
}

#[test]
fn shared_noise_file_drives_both_solvers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.txt");
    WienerPath::seeded(2024, 1000).write_file(&path).unwrap();
    let noise = WienerPath::read_file(&path).unwrap();
    let cfg = StepConfig {
        dt: 1e-4,
        t_end: 0.1,
        ..StepConfig::default()
    };
    for n in [2, 3] {
        let rep = equivalence_check(&params(n, 0.0, 1.0), &cfg, 0.5 * PI, 0.0, &noise).unwrap();
        assert!(rep.passed(1e-8), "{rep:?}");
    }
}
