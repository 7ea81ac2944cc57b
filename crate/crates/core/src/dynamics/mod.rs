//! Time evolution of the collective density matrix.
//!
//! Every element obeys
//! `d<n> = [lambda(n) <n> + inflow] dt + (mu(n) - <b_m + b_m^dagger>) <n> dW`,
//! integrated with Euler-Maruyama and renormalized by the trace.

mod kernel;
mod trajectory;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{FlatIndex, MultiIndex, Shift};
use crate::observables::bm_expectation;
use crate::params::DerivedParams;
use crate::state::CollectiveState;

pub use kernel::{Integrator, StepInfo};
pub use trajectory::{run_trajectory, run_trajectory_from, TrajectoryRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    /// Step (us).
    pub dt: f64,
    /// Final time (us).
    pub t_end: f64,
    pub renormalize_every: usize,
    /// Replaces the default rotating-frame frequency (rad/us).
    pub frame_shift_override: Option<f64>,
    pub record_every: usize,
    /// Times (us) at which diagonal snapshots are taken.
    pub snapshot_times: Vec<f64>,
    pub measurement_on: bool,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_end: 1.0,
            renormalize_every: 1,
            frame_shift_override: None,
            record_every: 100,
            snapshot_times: Vec::new(),
            measurement_on: true,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Domain(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(Error::Domain(format!(
                "t_end = {} must be at least dt = {}",
                self.t_end, self.dt
            )));
        }
        if self.renormalize_every == 0 || self.record_every == 0 {
            return Err(Error::Domain(
                "renormalize_every and record_every must be >= 1".into(),
            ));
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| t.is_nan() || **t < 0.0) {
            return Err(Error::Domain(format!(
                "snapshot time {t} is negative or NaN"
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Parameters as seen by the integrator: frame override and measurement toggle applied.
    pub fn effective_params(&self, d: &DerivedParams) -> DerivedParams {
        let mut e = d.clone();
        if let Some(f) = self.frame_shift_override {
            e.frame_shift = f;
        }
        if !self.measurement_on {
            e = e.without_measurement();
        }
        e
    }
}

/// Per-element coefficients shared by the reference and the fused paths.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Coefficients {
    rot: f64,
    g_dec: f64,
    g_pump: f64,
    g_dec3: f64,
    g_pump3: f64,
    coll: f64,
    xr_up: f64,
    xr_dn: f64,
    xi_im: f64,
}

impl Coefficients {
    pub(crate) fn new(d: &DerivedParams) -> Self {
        let p = &d.physical;
        let g_dec = p.gamma * d.chi_dn;
        let g_pump = p.gamma * d.chi_up;
        Self {
            rot: d.residual_rotation(),
            g_dec,
            g_pump,
            g_dec3: g_dec / 3.0,
            g_pump3: g_pump / 3.0,
            coll: 2.0 * p.g * p.g / p.kappa * (d.chi_up + d.chi_dn),
            xr_up: d.xi_up.re,
            xr_dn: d.xi_dn.re,
            xi_im: d.xi_dn.im - d.xi_up.im,
        }
    }

    /// Deterministic derivative of one element. `pump` is `<n_uu - 1, n_dd + 1>`,
    /// `decay` is `<n_uu + 1, n_dd - 1>`; zero when outside the domain.
    #[inline(always)]
    pub(crate) fn drift(&self, m: [f64; 4], old: C64, pump: C64, decay: C64) -> C64 {
        let [uu, ud, du, dd] = m;
        let s = 0.5 * (ud + du);
        let a = ud - du;
        let lam = C64::new(
            -self.g_dec * (s + uu / 3.0) - self.g_pump * (s + dd / 3.0) - self.coll * a * a,
            self.rot * a,
        );
        lam * old + pump * (self.g_pump3 * uu) + decay * (self.g_dec3 * dd)
    }

    /// `mu(n) - B`, real part symmetric and imaginary part antisymmetric in `ud <-> du`.
    #[inline(always)]
    pub(crate) fn backaction(&self, m: [f64; 4], bias: f64) -> C64 {
        let [uu, ud, du, dd] = m;
        C64::new(
            self.xr_dn * (2.0 * uu + ud + du) + self.xr_up * (2.0 * dd + ud + du) - bias,
            self.xi_im * (du - ud),
        )
    }

    /// Fold `dt`, `dW` and the backaction bias into per-step constants.
    pub(crate) fn for_step(&self, dt: f64, dw: f64, bias: f64) -> StepKernel {
        StepKernel {
            k0: 1.0 - dw * bias,
            k_uu: 2.0 * dw * self.xr_dn - dt * self.g_dec3,
            k_dd: 2.0 * dw * self.xr_up - dt * self.g_pump3,
            k_s: 2.0 * dw * (self.xr_dn + self.xr_up) - dt * (self.g_dec + self.g_pump),
            k_a2: dt * self.coll,
            k_im: dt * self.rot - dw * self.xi_im,
            k_pump: dt * self.g_pump3,
            k_decay: dt * self.g_dec3,
        }
    }
}

/// One Euler-Maruyama update written as `F(n) <n> + pump + decay` with
/// `F = 1 + dt lambda(n) + dW (mu(n) - B)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct StepKernel {
    k0: f64,
    k_uu: f64,
    k_dd: f64,
    k_s: f64,
    k_a2: f64,
    k_im: f64,
    k_pump: f64,
    k_decay: f64,
}

impl StepKernel {
    /// Missing sources (outside the domain) contribute nothing.
    #[inline(always)]
    pub(crate) fn advance(
        &self,
        m: [f64; 4],
        old: C64,
        pump: Option<C64>,
        decay: Option<C64>,
    ) -> C64 {
        let [uu, ud, du, dd] = m;
        let s = 0.5 * (ud + du);
        let a = ud - du;
        let f = C64::new(
            self.k0 + self.k_uu * uu + self.k_dd * dd + self.k_s * s - self.k_a2 * (a * a),
            self.k_im * a,
        );
        let mut z = f * old;
        if let Some(p) = pump {
            z += p * (self.k_pump * uu);
        }
        if let Some(q) = decay {
            z += q * (self.k_decay * dd);
        }
        z
    }
}

/// Magnitude below which stepped amplitudes are set to zero. Far below any
/// contribution to observables, and keeps arithmetic out of the subnormal range.
pub const FLUSH_THRESHOLD: f64 = 1e-280;

#[inline(always)]
pub(crate) fn flush(z: C64) -> C64 {
    let f = |x: f64| if x.abs() < FLUSH_THRESHOLD { 0.0 } else { x };
    C64::new(f(z.re), f(z.im))
}

fn counts(m: &MultiIndex) -> [f64; 4] {
    m.as_array().map(|c| c as f64)
}

const PUMP: Shift = Shift::new(-1, 0, 0, 1);
const DECAY: Shift = Shift::new(1, 0, 0, -1);

fn neighbours(s: &CollectiveState, m: &MultiIndex, i: usize) -> (Option<C64>, Option<C64>) {
    let space = s.space();
    let amps = s.amplitudes();
    let fetch = |delta| space.shift_from(m, FlatIndex(i), delta).map(|j| amps[j.0]);
    (fetch(PUMP), fetch(DECAY))
}

/// `<b_m + b_m^dagger>` of the trace-normalized state.
pub fn backaction_bias(s: &CollectiveState, d: &DerivedParams) -> f64 {
    let tr = s.trace();
    2.0 * bm_expectation(s, d).re / tr
}

/// Deterministic derivative of every element, shifted elements fetched through the index map.
pub fn drift_deterministic(s: &CollectiveState, d: &DerivedParams) -> Vec<C64> {
    let c = Coefficients::new(d);
    let amps = s.amplitudes();
    s.space()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let (pump, decay) = neighbours(s, &m, i);
            let zero = C64::new(0.0, 0.0);
            c.drift(
                counts(&m),
                amps[i],
                pump.unwrap_or(zero),
                decay.unwrap_or(zero),
            )
        })
        .collect()
}

/// Stochastic increment `dW <n> (mu(n) - <b_m + b_m^dagger>)` per element.
pub fn measurement_term(s: &CollectiveState, d: &DerivedParams, dw: f64) -> Vec<C64> {
    let c = Coefficients::new(d);
    let bias = backaction_bias(s, d);
    s.space()
        .iter()
        .zip(s.amplitudes())
        .map(|(m, &old)| c.backaction(counts(&m), bias) * dw * old)
        .collect()
}

/// One Euler-Maruyama step followed by renormalization, element by element.
pub fn step_em(
    s: &CollectiveState,
    d: &DerivedParams,
    dt: f64,
    dw: f64,
) -> Result<CollectiveState> {
    let k = Coefficients::new(d).for_step(dt, dw, backaction_bias(s, d));
    let amps = s.amplitudes();
    let next: Vec<C64> = s
        .space()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let (pump, decay) = neighbours(s, &m, i);
            k.advance(counts(&m), amps[i], pump, decay)
        })
        .collect();
    let out = CollectiveState::from_amplitudes(s.n_atoms(), next)?;
    if !out.is_finite() {
        return Err(Error::Integration {
            step: 0,
            time: f64::NAN,
            reason: "non-finite amplitude".into(),
        });
    }
    let mut out = out.renormalized()?;
    for z in out.amplitudes_mut() {
        *z = flush(*z);
    }
    Ok(out)
}

/// `Re <b_m> + dW / dt`.
pub fn photocurrent_sample(s: &CollectiveState, d: &DerivedParams, dw: f64, dt: f64) -> f64 {
    bm_expectation(s, d).re / s.trace() + dw / dt
}
