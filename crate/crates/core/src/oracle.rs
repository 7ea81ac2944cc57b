//! Brute-force reference: the effective two-level master equation on the full
//! `2^N x 2^N` product-basis density matrix, for `N <= 4`.
//!
//! Basis state `i` has atom `k` in `g_up` iff bit `k` of `i` is set.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use serde::Serialize;

use crate::dynamics::{Integrator, StepConfig};
use crate::error::{Error, Result};
use crate::index::MultiIndex;
use crate::noise::WienerPath;
use crate::observables::{spin_moments, SpinMoments};
use crate::params::DerivedParams;
use crate::state::{css_init, CollectiveState};

pub const MAX_ORACLE_ATOMS: usize = 4;
const SYMMETRY_TOL: f64 = 1e-10;

type Mat = DMatrix<C64>;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn check_n(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::Domain("oracle needs at least one atom".into()));
    }
    if n > MAX_ORACLE_ATOMS {
        return Err(Error::Capacity(format!(
            "oracle supports N <= {MAX_ORACLE_ATOMS}, got {n}"
        )));
    }
    Ok(1 << n)
}

/// Single-atom operator `|to><from|` on atom `k` (levels: 1 = up, 0 = down).
fn single_atom(n: usize, k: usize, to: usize, from: usize) -> Mat {
    let dim = 1 << n;
    let mut m = Mat::zeros(dim, dim);
    for col in 0..dim {
        if (col >> k) & 1 == from {
            let row = (col & !(1 << k)) | (to << k);
            m[(row, col)] = one();
        }
    }
    m
}

/// `sum_k |lvl><lvl|_k`.
fn level_count(n: usize, lvl: usize) -> Mat {
    let dim = 1 << n;
    let mut m = Mat::zeros(dim, dim);
    for i in 0..dim {
        let ups = (i as u32).count_ones() as usize;
        let c = if lvl == 1 { ups } else { n - ups };
        m[(i, i)] = C64::new(c as f64, 0.0);
    }
    m
}

/// Collective numbers of the element `rho[beta][alpha]`: ket label from `alpha`,
/// bra label from `beta`.
fn pair_counts(n: usize, beta: usize, alpha: usize) -> MultiIndex {
    let mut c = [0usize; 4];
    for k in 0..n {
        let a = (alpha >> k) & 1;
        let b = (beta >> k) & 1;
        let slot = match (a, b) {
            (1, 1) => 0,
            (1, 0) => 1,
            (0, 1) => 2,
            _ => 3,
        };
        c[slot] += 1;
    }
    MultiIndex::new(c[0], c[1], c[2], c[3])
}

/// Representative `(beta, alpha)` pair: atoms ordered uu, ud, du, dd.
fn representative(m: &MultiIndex) -> (usize, usize) {
    let (mut alpha, mut beta) = (0usize, 0usize);
    let mut k = 0;
    for (slot, &cnt) in m.as_array().iter().enumerate() {
        let (a, b) = match slot {
            0 => (1, 1),
            1 => (1, 0),
            2 => (0, 1),
            _ => (0, 0),
        };
        for _ in 0..cnt {
            alpha |= a << k;
            beta |= b << k;
            k += 1;
        }
    }
    (beta, alpha)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullDensityMatrix {
    n_atoms: usize,
    rho: Mat,
}

impl FullDensityMatrix {
    pub fn new(n: usize, rho: Mat) -> Result<Self> {
        let dim = check_n(n)?;
        if rho.nrows() != dim || rho.ncols() != dim {
            return Err(Error::Domain(format!(
                "density matrix for N = {n} must be {dim}x{dim}"
            )));
        }
        Ok(Self { n_atoms: n, rho })
    }

    /// Product state whose collective elements equal `prod (d_a d_b^*)^{n_ab}`.
    pub fn css(theta: f64, phi: f64, n: usize) -> Result<Self> {
        let dim = check_n(n)?;
        let d = [
            C64::new((0.5 * theta).cos(), 0.0),
            C64::from_polar((0.5 * theta).sin(), phi),
        ];
        let amp = |i: usize| (0..n).fold(one(), |p, k| p * d[(i >> k) & 1]);
        let v: Vec<C64> = (0..dim).map(amp).collect();
        let rho = Mat::from_fn(dim, dim, |beta, alpha| v[alpha] * v[beta].conj());
        Ok(Self { n_atoms: n, rho })
    }

    /// Fill every element from its collective counterpart.
    pub fn expand(s: &CollectiveState) -> Result<Self> {
        let n = s.n_atoms();
        let dim = check_n(n)?;
        let space = s.space();
        let mut rho = Mat::zeros(dim, dim);
        for beta in 0..dim {
            for alpha in 0..dim {
                let m = pair_counts(n, beta, alpha);
                rho[(beta, alpha)] = s.amplitudes()[space.flat_index(&m)?.0];
            }
        }
        Ok(Self { n_atoms: n, rho })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn matrix(&self) -> &Mat {
        &self.rho
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn hermitian_residual(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).camax()
    }

    /// Largest spread among elements that share collective numbers.
    pub fn permutation_residual(&self) -> f64 {
        let n = self.n_atoms;
        let dim = 1 << n;
        let mut worst = 0.0f64;
        for beta in 0..dim {
            for alpha in 0..dim {
                let (rb, ra) = representative(&pair_counts(n, beta, alpha));
                worst = worst.max((self.rho[(beta, alpha)] - self.rho[(rb, ra)]).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().min()
    }
}

/// Operators of the effective master equation for fixed parameters.
#[derive(Clone, Debug)]
pub struct OracleModel {
    n_atoms: usize,
    hamiltonian: Mat,
    /// `(rate, o, o^dagger o)` for each dissipator `rate * D[o]`.
    dissipators: Vec<(f64, Mat, Mat)>,
    bm: Mat,
    jx: Mat,
    jy: Mat,
    jz: Mat,
}

impl OracleModel {
    pub fn new(d: &DerivedParams, n: usize) -> Result<Self> {
        check_n(n)?;
        let p = &d.physical;
        let s_up = level_count(n, 1);
        let s_dn = level_count(n, 0);
        let c = |x: f64| C64::new(x, 0.0);

        // Light shift of each level plus the co-rotating frame.
        let hamiltonian = &s_dn * c(-2.0 * p.delta_up * d.chi_up)
            + &s_up * c(-2.0 * p.delta_dn * d.chi_dn)
            - &s_up * c(d.frame_shift);

        let mut dissipators = Vec::new();
        let mut push = |rate: f64, o: Mat| {
            if rate != 0.0 {
                let od_o = o.adjoint() * &o;
                dissipators.push((rate, o, od_o));
            }
        };
        // alpha = up carries chi_dn, alpha = down carries chi_up.
        for (lvl, chi_bar) in [(1usize, d.chi_dn), (0usize, d.chi_up)] {
            let rate = p.gamma * chi_bar;
            for k in 0..n {
                push(rate * 2.0 / 3.0, single_atom(n, k, lvl, lvl));
                push(rate / 3.0, single_atom(n, k, 1 - lvl, lvl));
            }
            let coll = 4.0 * p.g * p.g / p.kappa * chi_bar;
            push(coll, level_count(n, lvl));
        }

        let bm = &s_up * d.xi_dn + &s_dn * d.xi_up;

        let mut jx = Mat::zeros(1 << n, 1 << n);
        let mut jy = jx.clone();
        for k in 0..n {
            let lower = single_atom(n, k, 0, 1);
            let raise = single_atom(n, k, 1, 0);
            jx += (&lower + &raise) * c(0.5);
            jy += (&lower - &raise) * C64::new(0.0, 0.5);
        }
        let jz = (&s_up - &s_dn) * c(0.5);

        Ok(Self {
            n_atoms: n,
            hamiltonian,
            dissipators,
            bm,
            jx,
            jy,
            jz,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn bm(&self) -> &Mat {
        &self.bm
    }

    /// Deterministic generator: `-i[H, rho] - sum rate D[o] rho`.
    pub fn drift(&self, rho: &Mat) -> Mat {
        let h = &self.hamiltonian;
        let mut out = (h * rho - rho * h) * C64::new(0.0, -1.0);
        for (rate, o, od_o) in &self.dissipators {
            let anti = (od_o * rho + rho * od_o) * C64::new(0.5, 0.0);
            let jump = o * rho * o.adjoint();
            out -= (anti - jump) * C64::new(*rate, 0.0);
        }
        out
    }

    /// `b rho + rho b^dagger - <b + b^dagger> rho`.
    pub fn backaction(&self, rho: &Mat) -> Mat {
        let b = &self.bm;
        let mean = (b * rho).trace() + (rho * b.adjoint()).trace();
        b * rho + rho * b.adjoint() - rho * mean
    }

    pub fn bm_expectation(&self, rho: &FullDensityMatrix) -> C64 {
        (&self.bm * &rho.rho).trace()
    }
}

/// Euler-Maruyama step followed by trace renormalization.
pub fn full_sme_step(
    rho: &FullDensityMatrix,
    model: &OracleModel,
    dt: f64,
    dw: f64,
) -> Result<FullDensityMatrix> {
    if rho.n_atoms != model.n_atoms {
        return Err(Error::Domain("oracle model and state disagree on N".into()));
    }
    let r = &rho.rho;
    let mut next = r + model.drift(r) * C64::new(dt, 0.0);
    if dw != 0.0 {
        next += model.backaction(r) * C64::new(dw, 0.0);
    }
    let tr = next.trace().re;
    if !(tr.is_finite() && tr > 0.0) {
        return Err(Error::Integration {
            step: 0,
            time: f64::NAN,
            reason: format!("oracle trace is {tr}"),
        });
    }
    next /= C64::new(tr, 0.0);
    Ok(FullDensityMatrix {
        n_atoms: rho.n_atoms,
        rho: next,
    })
}

/// Copy one representative element per collective tuple, after checking that
/// every permutation-equivalent element agrees.
pub fn collective_projection(rho: &FullDensityMatrix) -> Result<CollectiveState> {
    let n = rho.n_atoms;
    let residual = rho.permutation_residual();
    if residual > SYMMETRY_TOL {
        return Err(Error::OracleIntegrity(format!(
            "permutation symmetry broken by {residual:.3e}"
        )));
    }
    let mut s = CollectiveState::zeros(n)?;
    let space = s.space().clone();
    for (amp, m) in s.amplitudes_mut().iter_mut().zip(space.iter()) {
        let (beta, alpha) = representative(&m);
        *amp = rho.rho[(beta, alpha)];
    }
    Ok(s)
}

pub fn oracle_observables(rho: &FullDensityMatrix, model: &OracleModel) -> SpinMoments {
    let r = &rho.rho;
    let ev = |op: &Mat| (op * r).trace().re;
    let first = [ev(&model.jx), ev(&model.jy), ev(&model.jz)];
    let second = [
        ev(&(&model.jx * &model.jx)),
        ev(&(&model.jy * &model.jy)),
        ev(&(&model.jz * &model.jz)),
    ];
    SpinMoments::from_moments(first, second)
}

/// Largest deviations seen while stepping the collective solver and the
/// full-space oracle side by side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub n_atoms: usize,
    pub steps: usize,
    pub max_element_diff: f64,
    pub max_observable_diff: f64,
    pub max_permutation_residual: f64,
}

impl EquivalenceReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_element_diff < tol && self.max_observable_diff < tol
    }
}

/// Step a coherent spin state with both solvers on the same noise path and
/// compare them after every step. The trace is renormalized every step.
pub fn equivalence_check(
    d: &DerivedParams,
    cfg: &StepConfig,
    theta: f64,
    phi: f64,
    noise: &WienerPath,
) -> Result<EquivalenceReport> {
    let e = cfg.effective_params(d);
    let n = e.n_atoms();
    let model = OracleModel::new(&e, n)?;
    let steps = cfg.n_steps();
    noise.require(steps)?;
    let mut integ = Integrator::new(e, cfg.dt, 1);
    let mut s = css_init(theta, phi, n)?;
    let mut rho = FullDensityMatrix::css(theta, phi, n)?;
    let mut rep = EquivalenceReport {
        n_atoms: n,
        steps,
        max_element_diff: 0.0,
        max_observable_diff: 0.0,
        max_permutation_residual: 0.0,
    };
    for &z in &noise.draws()[..steps] {
        let dw = z * cfg.dt.sqrt();
        integ.step_dw(&mut s, dw)?;
        rho = full_sme_step(&rho, &model, cfg.dt, dw)?;
        rep.max_permutation_residual = rep.max_permutation_residual.max(rho.permutation_residual());
        let proj = collective_projection(&rho)?;
        rep.max_element_diff = rep.max_element_diff.max(proj.max_abs_diff(&s));
        let (a, b) = (spin_moments(&s), oracle_observables(&rho, &model));
        let diffs = [
            a.jx - b.jx,
            a.jy - b.jy,
            a.jz - b.jz,
            a.jx2 - b.jx2,
            a.jy2 - b.jy2,
            a.jz2 - b.jz2,
        ];
        let scale = (n * n) as f64;
        for x in diffs {
            rep.max_observable_diff = rep.max_observable_diff.max(x.abs() / scale);
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    #[test]
    fn equivalence_check_small_systems() {
        use crate::params::{derive_params, PhysicalParams};
        for n in [1, 3] {
            let p = PhysicalParams {
                n_atoms: n,
                vartheta: 0.15 * std::f64::consts::PI,
                ..PhysicalParams::reference()
            };
            let cfg = StepConfig {
                t_end: 0.02,
                ..StepConfig::default()
            };
            let d = derive_params(&p).unwrap();
            let rep = equivalence_check(&d, &cfg, 1.1, 0.3, &WienerPath::seeded(2, 200)).unwrap();
            assert_eq!(rep.steps, 200);
            assert!(rep.passed(1e-10), "{rep:?}");
        }
    }

    use super::*;
    use crate::params::{derive_params, PhysicalParams};
    use crate::state::css_init;
    use std::f64::consts::PI;

    fn params(n: usize) -> DerivedParams {
        derive_params(&PhysicalParams {
            n_atoms: n,
            ..PhysicalParams::reference()
        })
        .unwrap()
    }

    #[test]
    fn rejects_large_n() {
        assert!(matches!(
            FullDensityMatrix::css(0.3, 0.0, 5),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(
            OracleModel::new(&params(5), 5),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn css_projection_matches_product_formula() {
        for n in 1..=4 {
            let full = FullDensityMatrix::css(1.2, 0.9, n).unwrap();
            let proj = collective_projection(&full).unwrap();
            let direct = css_init(1.2, 0.9, n).unwrap();
            assert!(proj.max_abs_diff(&direct) < 1e-15, "n={n}");
            let back = FullDensityMatrix::expand(&direct).unwrap();
            assert!((back.matrix() - full.matrix()).camax() < 1e-15);
        }
    }

    #[test]
    fn pole_projection() {
        let mut rho = Mat::zeros(4, 4);
        rho[(3, 3)] = one();
        let full = FullDensityMatrix::new(2, rho).unwrap();
        let s = collective_projection(&full).unwrap();
        assert_eq!(s.get(&MultiIndex::new(2, 0, 0, 0)).unwrap(), one());
        let m = oracle_observables(&full, &OracleModel::new(&params(2), 2).unwrap());
        assert_eq!(m.jz, 1.0);
    }

    #[test]
    fn equatorial_css_moments() {
        let full = FullDensityMatrix::css(0.5 * PI, 0.0, 2).unwrap();
        let m = oracle_observables(&full, &OracleModel::new(&params(2), 2).unwrap());
        assert!((m.jx - 1.0).abs() < 1e-15);
        assert!((m.dz - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn no_drive_no_noise_is_stationary() {
        let mut p = PhysicalParams::reference();
        p.beta_in = 0.0;
        p.n_atoms = 3;
        let d = derive_params(&p).unwrap();
        let model = OracleModel::new(&d, 3).unwrap();
        let rho = FullDensityMatrix::css(0.7, 0.2, 3).unwrap();
        let next = full_sme_step(&rho, &model, 1e-3, 0.0).unwrap();
        assert!((next.matrix() - rho.matrix()).camax() < 1e-15);
    }

    #[test]
    fn single_atom_pumping_rate() {
        let d = params(1);
        let model = OracleModel::new(&d, 1).unwrap();
        let mut rho = Mat::zeros(2, 2);
        rho[(1, 1)] = one();
        // Fully pumped atom is stationary.
        let drift = model.drift(&rho);
        assert!(drift.camax() < 1e-15);
        rho[(1, 1)] = C64::new(0.0, 0.0);
        rho[(0, 0)] = one();
        let drift = model.drift(&rho);
        assert!((drift[(1, 1)].re - d.rate_pump).abs() < 1e-12 * d.rate_pump);
        assert!((drift[(0, 0)].re + d.rate_pump).abs() < 1e-12 * d.rate_pump);
    }

    #[test]
    fn evolution_keeps_symmetry_and_positivity() {
        let d = params(3);
        let model = OracleModel::new(&d, 3).unwrap();
        let mut rho = FullDensityMatrix::css(0.5 * PI, 0.0, 3).unwrap();
        let dt: f64 = 1e-4;
        for k in 0..1000 {
            let dw = if k % 3 == 0 {
                dt.sqrt()
            } else {
                -0.5 * dt.sqrt()
            };
            rho = full_sme_step(&rho, &model, dt, dw).unwrap();
        }
        assert!(rho.permutation_residual() < 1e-10);
        assert!(rho.hermitian_residual() < 1e-12);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(rho.min_eigenvalue() > -1e-8);
    }

    #[test]
    fn broken_symmetry_is_reported() {
        let mut rho = Mat::zeros(4, 4);
        rho[(1, 1)] = one();
        let full = FullDensityMatrix::new(2, rho).unwrap();
        assert!(matches!(
            collective_projection(&full),
            Err(Error::OracleIntegrity(_))
        ));
    }
}
