//! Fused step over contiguous rows of the flat layout.
//!
//! For fixed `(n_dd, n_du)` the elements with `n_ud = 0..=R` (`R = N - n_dd - n_du`)
//! are contiguous, and so are their pump sources in row `(n_dd + 1, n_du)` and
//! decay sources in row `(n_dd - 1, n_du)`, at the same position `n_ud`.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::{flush, Coefficients, StepConfig, StepKernel};
use crate::error::{Error, Result};
use crate::index::IndexSpace;
use crate::observables::bm_expectation;
use crate::params::DerivedParams;
use crate::state::CollectiveState;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    /// Trace of the stepped state before it was rescaled.
    pub trace: f64,
    /// `Re <b_m> + dW / dt` evaluated on the pre-step state.
    pub photocurrent: f64,
}

#[derive(Clone, Debug)]
pub struct Integrator {
    params: DerivedParams,
    coeffs: Coefficients,
    dt: f64,
    sqrt_dt: f64,
    renormalize_every: usize,
    steps: usize,
    scratch: Vec<C64>,
}

impl Integrator {
    /// `params` are used as given; see [`StepConfig::effective_params`].
    pub fn new(params: DerivedParams, dt: f64, renormalize_every: usize) -> Self {
        Self {
            coeffs: Coefficients::new(&params),
            params,
            dt,
            sqrt_dt: dt.sqrt(),
            renormalize_every: renormalize_every.max(1),
            steps: 0,
            scratch: Vec::new(),
        }
    }

    pub fn from_config(d: &DerivedParams, cfg: &StepConfig) -> Self {
        let e = cfg.effective_params(d);
        let phase_per_step = e.residual_rotation().abs() * e.n_atoms() as f64 * cfg.dt;
        if phase_per_step > 0.1 {
            log::warn!(
                "residual rotation advances coherences by {phase_per_step:.3} rad per step; \
                 explicit stepping amplifies them, reduce dt"
            );
        }
        Self::new(e, cfg.dt, cfg.renormalize_every)
    }

    pub fn params(&self) -> &DerivedParams {
        &self.params
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    /// Advance by one step driven by the standard-normal draw `z`.
    pub fn step(&mut self, s: &mut CollectiveState, z: f64) -> Result<StepInfo> {
        self.step_dw(s, z * self.sqrt_dt)
    }

    pub fn step_dw(&mut self, s: &mut CollectiveState, dw: f64) -> Result<StepInfo> {
        let fail = |reason: String| Error::Integration {
            step: self.steps + 1,
            time: (self.steps + 1) as f64 * self.dt,
            reason,
        };
        let tr = s.trace();
        let bm = bm_expectation(s, &self.params).re / tr;
        let k = self.coeffs.for_step(self.dt, dw, 2.0 * bm);

        let new_trace = stepped_trace(&k, s);
        let mut scale = 1.0;
        if (self.steps + 1).is_multiple_of(self.renormalize_every) {
            if !(new_trace.is_finite() && new_trace > 0.0) {
                return Err(fail(format!("trace became {new_trace}; reduce dt")));
            }
            scale = 1.0 / new_trace;
        }

        let space = s.space().clone();
        let old = s.amplitudes();
        self.scratch.resize(old.len(), C64::new(0.0, 0.0));
        let n = space.n_atoms();
        let mut blocks = Vec::with_capacity(n + 1);
        let mut rest = self.scratch.as_mut_slice();
        for d in 0..=n {
            let m = n - d;
            let (head, tail) = rest.split_at_mut((m + 1) * (m + 2) / 2);
            blocks.push((d, head));
            rest = tail;
        }
        let finite: Vec<bool> = blocks
            .into_par_iter()
            .map(|(d, out)| advance_block(&k, &space, old, out, d, scale))
            .collect();
        if !finite.iter().all(|&f| f) {
            return Err(fail("non-finite amplitude".into()));
        }
        s.replace_amplitudes(&mut self.scratch);
        self.steps += 1;
        Ok(StepInfo {
            trace: new_trace,
            photocurrent: bm + dw / self.dt,
        })
    }
}

/// Trace of the stepped state, from the `N + 1` diagonal elements alone.
fn stepped_trace(k: &StepKernel, s: &CollectiveState) -> f64 {
    let space = s.space();
    let old = s.amplitudes();
    let n = space.n_atoms();
    let b = s.binomials();
    (0..=n)
        .map(|l| {
            let d = n - l;
            let here = old[space.row_start(d, 0)];
            let pump = (l >= 1).then(|| old[space.row_start(d + 1, 0)]);
            let decay = (d >= 1).then(|| old[space.row_start(d - 1, 0)]);
            let z = k.advance([l as f64, 0.0, 0.0, d as f64], here, pump, decay);
            b.weigh_re(l, z.re)
        })
        .sum()
}

fn advance_block(
    k: &StepKernel,
    space: &IndexSpace,
    old: &[C64],
    out: &mut [C64],
    d: usize,
    scale: f64,
) -> bool {
    let n = space.n_atoms();
    let m = n - d;
    let ddf = d as f64;
    let mut finite = true;
    let mut off = 0;
    for u in 0..=m {
        let r = m - u;
        let rs = space.row_start(d, u);
        let here = &old[rs..=rs + r];
        let dst = &mut out[off..=off + r];
        let duf = u as f64;
        // Counts are small integers, so stepping them in floating point is exact.
        let (mut uu, mut ud) = (r as f64, 0.0);
        let mut fin = 0.0;
        // Every element but the last has a pump source.
        let ps = if r >= 1 { space.row_start(d + 1, u) } else { 0 };
        let pump = &old[ps..ps + r];
        if d >= 1 {
            let ds = space.row_start(d - 1, u);
            let decay = &old[ds..=ds + r];
            for ((z, h), (p, q)) in dst[..r]
                .iter_mut()
                .zip(&here[..r])
                .zip(pump.iter().zip(&decay[..r]))
            {
                *z = flush(k.advance([uu, ud, duf, ddf], *h, Some(*p), Some(*q)) * scale);
                fin += z.re + z.im;
                uu -= 1.0;
                ud += 1.0;
            }
            dst[r] = flush(k.advance([uu, ud, duf, ddf], here[r], None, Some(decay[r])) * scale);
        } else {
            for ((z, h), p) in dst[..r].iter_mut().zip(&here[..r]).zip(pump) {
                *z = flush(k.advance([uu, ud, duf, ddf], *h, Some(*p), None) * scale);
                fin += z.re + z.im;
                uu -= 1.0;
                ud += 1.0;
            }
            dst[r] = flush(k.advance([uu, ud, duf, ddf], here[r], None, None) * scale);
        }
        fin += dst[r].re + dst[r].im;
        // NaN and infinities survive the sum; finite overflow of the sum is caught too.
        finite &= fin.is_finite();
        off += r + 1;
    }
    finite
}

#[cfg(test)]
mod tests {
    use super::super::step_em;
    use super::*;
    use crate::noise::WienerPath;
    use crate::params::{derive_params, PhysicalParams};
    use crate::state::css_init;
    use std::f64::consts::PI;

    fn params(n: usize, gamma_scale: f64) -> DerivedParams {
        let mut p = PhysicalParams::reference();
        p.n_atoms = n;
        p.gamma *= gamma_scale;
        p.vartheta = 0.1 * PI;
        derive_params(&p).unwrap()
    }

    #[test]
    fn fused_step_matches_reference_bitwise() {
        for n in [1, 2, 5, 17] {
            let d = params(n, 30.0);
            let d = d.clone().with_frame_shift(d.light_shift() - 0.7);
            let mut s = css_init(1.3, 0.4, n).unwrap();
            let mut r = s.clone();
            let mut integ = Integrator::new(d.clone(), 1e-3, 1);
            let noise = WienerPath::seeded(5, 50);
            for &z in noise.draws() {
                integ.step(&mut s, z).unwrap();
                r = step_em(&r, &d, 1e-3, z * 1e-3f64.sqrt()).unwrap();
            }
            assert_eq!(s, r, "n={n}");
            assert_eq!(s.hermitian_residual(), 0.0);
        }
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let d = params(30, 1.0);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                let mut s = css_init(0.5 * PI, 0.0, 30).unwrap();
                let mut integ = Integrator::new(d.clone(), 1e-4, 1);
                for &z in WienerPath::seeded(9, 200).draws() {
                    integ.step(&mut s, z).unwrap();
                }
                s
            })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn trace_drift_without_measurement_is_tiny() {
        let d = params(20, 1.0).without_measurement();
        let mut s = css_init(0.5 * PI, 0.0, 20).unwrap();
        let mut integ = Integrator::new(d, 1e-4, 1);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let info = integ.step(&mut s, 0.0).unwrap();
            worst = worst.max((info.trace - 1.0).abs());
        }
        assert!(worst < 1e-9, "worst trace drift {worst}");
    }

    #[test]
    fn deferred_renormalization_only_rescales() {
        let d = params(6, 1.0);
        let noise = WienerPath::seeded(2, 40);
        let mut every = css_init(0.5 * PI, 0.0, 6).unwrap();
        let mut deferred = every.clone();
        let mut a = Integrator::new(d.clone(), 1e-4, 1);
        let mut b = Integrator::new(d, 1e-4, 4);
        for &z in noise.draws() {
            a.step(&mut every, z).unwrap();
            b.step(&mut deferred, z).unwrap();
        }
        assert!(every.max_abs_diff(&deferred) < 1e-12);
    }
}
