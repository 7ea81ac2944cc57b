//! Fixtures shared by the criterion benches.

use sqz_core::dynamics::Integrator;
use sqz_core::noise::WienerPath;
use sqz_core::{css_init, derive_params, CollectiveState, PhysicalParams};

pub const DT: f64 = 1e-4;

/// Integrator, coherent spin state along x and `steps` noise draws for `n` atoms
/// at the reference parameters.
pub fn fixture(n: usize, steps: usize) -> (Integrator, CollectiveState, WienerPath) {
    let p = PhysicalParams {
        n_atoms: n,
        ..PhysicalParams::reference()
    };
    let d = derive_params(&p).expect("reference parameters are valid");
    let s = css_init(p.theta, p.phi, n).expect("valid state");
    (Integrator::new(d, DT, 1), s, WienerPath::seeded(1, steps))
}
