use sqz_core::dynamics::{run_trajectory, StepConfig};
use sqz_core::noise::WienerPath;
use sqz_core::{derive_params, PhysicalParams};

fn ideal(n: usize) -> PhysicalParams {
    PhysicalParams {
        n_atoms: n,
        gamma: 0.0,
        vartheta: 0.0,
        ..PhysicalParams::reference()
    }
}

#[test]
fn negated_noise_mirrors_jz() {
    let p = ideal(20);
    let cfg = StepConfig {
        t_end: 0.3,
        record_every: 100,
        ..StepConfig::default()
    };
    let noise = WienerPath::seeded(31, cfg.n_steps());
    let a = run_trajectory(&p, &cfg, &noise).unwrap();
    let b = run_trajectory(&p, &cfg, &noise.negated()).unwrap();
    for k in 0..a.len() {
        assert!(
            (a.jz[k] + b.jz[k]).abs() < 1e-9,
            "t={}: {} vs {}",
            a.times[k],
            a.jz[k],
            b.jz[k]
        );
        assert!((a.jx[k] - b.jx[k]).abs() < 1e-9);
        assert!((a.xi2_z[k] - b.xi2_z[k]).abs() < 1e-9);
    }
    assert!(a.jz.last().unwrap().abs() > 1e-3);
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// At vartheta = 0 only the lower-level operator is probed, so the mean
/// photocurrent falls as J_z rises.
#[test]
fn time_averaged_photocurrent_tracks_jz() {
    let p = PhysicalParams {
        n_atoms: 10,
        ..PhysicalParams::reference()
    };
    let d = derive_params(&p).unwrap();
    assert_eq!(d.xi_dn.norm(), 0.0);
    let cfg = StepConfig {
        t_end: 0.5,
        record_every: 50,
        ..StepConfig::default()
    };
    let (mut current, mut jz) = (Vec::new(), Vec::new());
    for seed in 0..120 {
        let rec = run_trajectory(&p, &cfg, &WienerPath::seeded(seed, cfg.n_steps())).unwrap();
        let i = &rec.photocurrent[1..];
        current.push(i.iter().sum::<f64>() / i.len() as f64);
        jz.push(*rec.jz.last().unwrap());
    }
    let r = pearson(&current, &jz) * d.xi_up.re.signum();
    assert!(r < -0.5, "correlation {r}");
}
