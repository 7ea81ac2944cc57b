use serde::{Deserialize, Serialize};

use super::{Integrator, StepConfig};
use crate::error::{Error, Result};
use crate::noise::WienerPath;
use crate::observables::{
    distribution_snapshot, spin_moments, squeezing_from_moments, Axis, DistributionSnapshot,
};
use crate::params::{derive_params, DerivedParams, PhysicalParams};
use crate::state::{css_init, CollectiveState};

/// Recorded series on a common time grid.
///
/// `photocurrent[k]` is the mean of the per-step samples since the previous
/// record (NaN at `t = 0`); `trace_err` is the largest `|trace - 1|` seen before
/// rescaling over the same interval.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub label: String,
    pub n_atoms: usize,
    pub times: Vec<f64>,
    pub jx: Vec<f64>,
    pub jy: Vec<f64>,
    pub jz: Vec<f64>,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dz: Vec<f64>,
    pub xi2_z: Vec<f64>,
    pub photocurrent: Vec<f64>,
    pub trace_err: Vec<f64>,
    pub herm_err: Vec<f64>,
    pub snapshots: Vec<DistributionSnapshot>,
}

impl TrajectoryRecord {
    pub fn new(label: impl Into<String>, n_atoms: usize) -> Self {
        Self {
            label: label.into(),
            n_atoms,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Row `k` in CSV column order.
    pub fn row(&self, k: usize) -> [f64; 11] {
        [
            self.times[k],
            self.jx[k],
            self.jy[k],
            self.jz[k],
            self.dx[k],
            self.dy[k],
            self.dz[k],
            self.xi2_z[k],
            self.photocurrent[k],
            self.trace_err[k],
            self.herm_err[k],
        ]
    }

    pub fn push_row(&mut self, r: [f64; 11]) {
        self.times.push(r[0]);
        self.jx.push(r[1]);
        self.jy.push(r[2]);
        self.jz.push(r[3]);
        self.dx.push(r[4]);
        self.dy.push(r[5]);
        self.dz.push(r[6]);
        self.xi2_z.push(r[7]);
        self.photocurrent.push(r[8]);
        self.trace_err.push(r[9]);
        self.herm_err.push(r[10]);
    }

    fn record(&mut self, s: &CollectiveState, t: f64, current: f64, trace_err: f64) {
        let m = spin_moments(s);
        let xi = squeezing_from_moments(&m, s.n_atoms(), Axis::Z);
        self.push_row([
            t,
            m.jx,
            m.jy,
            m.jz,
            m.dx,
            m.dy,
            m.dz,
            xi.value,
            current,
            trace_err,
            s.hermitian_residual(),
        ]);
    }
}

/// Evolve a coherent spin state built from `p` and record observables.
pub fn run_trajectory(
    p: &PhysicalParams,
    cfg: &StepConfig,
    noise: &WienerPath,
) -> Result<TrajectoryRecord> {
    let d = derive_params(p)?;
    let s = css_init(p.theta, p.phi, p.n_atoms)?;
    run_trajectory_from(s, &d, cfg, noise).map(|(rec, _)| rec)
}

/// Evolve an arbitrary initial state; returns the record and the final state.
pub fn run_trajectory_from(
    mut s: CollectiveState,
    d: &DerivedParams,
    cfg: &StepConfig,
    noise: &WienerPath,
) -> Result<(TrajectoryRecord, CollectiveState)> {
    cfg.validate()?;
    if s.n_atoms() != d.n_atoms() {
        return Err(Error::Domain(format!(
            "state has N = {} but parameters N = {}",
            s.n_atoms(),
            d.n_atoms()
        )));
    }
    let n_steps = cfg.n_steps();
    noise.require(n_steps)?;
    let mut integ = Integrator::from_config(d, cfg);
    let mut rec = TrajectoryRecord::new(noise.source().to_string(), s.n_atoms());

    let mut snaps: Vec<(usize, f64)> = cfg
        .snapshot_times
        .iter()
        .map(|&t| (((t / cfg.dt).round() as usize).min(n_steps), t))
        .collect();
    snaps.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut next_snap = 0;
    let mut take_snaps = |k: usize, s: &CollectiveState, rec: &mut TrajectoryRecord| {
        while next_snap < snaps.len() && snaps[next_snap].0 == k {
            rec.snapshots
                .push(distribution_snapshot(s, snaps[next_snap].1));
            next_snap += 1;
        }
    };

    rec.record(&s, 0.0, f64::NAN, (s.trace() - 1.0).abs());
    take_snaps(0, &s, &mut rec);

    let (mut current_sum, mut current_count, mut trace_worst) = (0.0, 0usize, 0.0f64);
    for k in 1..=n_steps {
        let info = integ.step(&mut s, noise.draws()[k - 1])?;
        current_sum += info.photocurrent;
        current_count += 1;
        trace_worst = trace_worst.max((info.trace - 1.0).abs());
        if k % cfg.record_every == 0 || k == n_steps {
            let t = k as f64 * cfg.dt;
            rec.record(&s, t, current_sum / current_count as f64, trace_worst);
            current_sum = 0.0;
            current_count = 0;
            trace_worst = 0.0;
        }
        take_snaps(k, &s, &mut rec);
    }
    Ok((rec, s))
}
