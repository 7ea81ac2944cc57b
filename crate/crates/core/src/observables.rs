//! Spin moments, squeezing, measured-field expectation and diagonal snapshots.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::params::DerivedParams;
use crate::state::CollectiveState;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpinMoments {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub jx2: f64,
    pub jy2: f64,
    pub jz2: f64,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl SpinMoments {
    pub fn from_moments(first: [f64; 3], second: [f64; 3]) -> Self {
        let sd = |m2: f64, m: f64| (m2 - m * m).max(0.0).sqrt();
        Self {
            jx: first[0],
            jy: first[1],
            jz: first[2],
            jx2: second[0],
            jy2: second[1],
            jz2: second[2],
            dx: sd(second[0], first[0]),
            dy: sd(second[1], first[1]),
            dz: sd(second[2], first[2]),
        }
    }

    pub fn mean(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.jx,
            Axis::Y => self.jy,
            Axis::Z => self.jz,
        }
    }

    pub fn variance(&self, axis: Axis) -> f64 {
        let (m2, m) = match axis {
            Axis::X => (self.jx2, self.jx),
            Axis::Y => (self.jy2, self.jy),
            Axis::Z => (self.jz2, self.jz),
        };
        m2 - m * m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// The two axes spanning the plane orthogonal to `self`.
    pub fn others(self) -> (Axis, Axis) {
        match self {
            Axis::X => (Axis::Y, Axis::Z),
            Axis::Y => (Axis::Z, Axis::X),
            Axis::Z => (Axis::X, Axis::Y),
        }
    }
}

/// Squeezing parameter with an explicit flag for a vanishing denominator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Squeezing {
    pub value: f64,
    pub defined: bool,
}

impl Squeezing {
    pub fn get(self) -> Option<f64> {
        self.defined.then_some(self.value)
    }
}

/// `(jx, jy, jz)` read from the single-coherence and diagonal sectors.
pub fn spin_expectations(s: &CollectiveState) -> (f64, f64, f64) {
    let n = s.n_atoms();
    let b = s.binomials();
    let mut coh = C64::new(0.0, 0.0);
    let mut jz = 0.0;
    for l in 0..=n {
        if l >= 1 {
            let z = s
                .sector(l as isize - 1, 0, 1, (n - l) as isize)
                .unwrap_or_default();
            coh += b.weigh(l, z * l as f64);
        }
        jz += b.weigh_re(l, 0.5 * (2.0 * l as f64 - n as f64) * s.diagonal(l).re);
    }
    (coh.re, -coh.im, jz)
}

/// `(<Jx^2>, <Jy^2>, <Jz^2>)`.
pub fn spin_second_moments(s: &CollectiveState) -> (f64, f64, f64) {
    let n = s.n_atoms();
    let nf = n as f64;
    let b = s.binomials();
    let zero = C64::new(0.0, 0.0);
    let (mut x2, mut y2, mut z2) = (0.0, 0.0, 0.0);
    for l in 0..=n {
        let li = l as isize;
        let lf = l as f64;
        let rest = n - l;
        let diag = s.diagonal(l);
        // Two lowering coherences, two raising coherences, and one of each.
        let lo2 = if l >= 2 {
            s.sector(li - 2, 0, 2, rest as isize).unwrap_or(zero) * (lf * (lf - 1.0))
        } else {
            zero
        };
        let hi2 = if rest >= 2 {
            s.sector(li, 2, 0, rest as isize - 2).unwrap_or(zero)
                * ((rest as f64) * (rest as f64 - 1.0))
        } else {
            zero
        };
        let mixed = if l >= 1 && rest >= 1 {
            s.sector(li - 1, 1, 1, rest as isize - 1).unwrap_or(zero) * (2.0 * lf * rest as f64)
        } else {
            zero
        };
        let pop = diag * nf;
        x2 += 0.25 * b.weigh(l, lo2 + pop + mixed + hi2).re;
        y2 -= 0.25 * b.weigh(l, lo2 - pop - mixed + hi2).re;
        let m = 2.0 * lf - nf;
        z2 += 0.25 * b.weigh_re(l, m * m * diag.re);
    }
    (x2, y2, z2)
}

pub fn spin_moments(s: &CollectiveState) -> SpinMoments {
    let (jx, jy, jz) = spin_expectations(s);
    let (x2, y2, z2) = spin_second_moments(s);
    SpinMoments::from_moments([jx, jy, jz], [x2, y2, z2])
}

/// `N (dJ_axis)^2 / (<J_a>^2 + <J_b>^2)` over the two remaining axes.
pub fn squeezing_from_moments(m: &SpinMoments, n_atoms: usize, axis: Axis) -> Squeezing {
    let (a, b) = axis.others();
    let den = m.mean(a).powi(2) + m.mean(b).powi(2);
    let var = match axis {
        Axis::X => m.dx * m.dx,
        Axis::Y => m.dy * m.dy,
        Axis::Z => m.dz * m.dz,
    };
    if den > 0.0 && den.is_finite() {
        Squeezing {
            value: n_atoms as f64 * var / den,
            defined: true,
        }
    } else {
        Squeezing {
            value: f64::NAN,
            defined: false,
        }
    }
}

pub fn squeezing_parameter(s: &CollectiveState, axis: Axis) -> Squeezing {
    squeezing_from_moments(&spin_moments(s), s.n_atoms(), axis)
}

/// `<b_m> = sum_l C(N, l) [xi_up (N - l) + xi_dn l] <l, 0; 0, N - l>`.
pub fn bm_expectation(s: &CollectiveState, d: &DerivedParams) -> C64 {
    let n = s.n_atoms();
    let b = s.binomials();
    (0..=n)
        .map(|l| {
            let c = d.xi_up * (n - l) as f64 + d.xi_dn * l as f64;
            b.weigh(l, c * s.diagonal(l))
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weight {
    One,
    Linear,
    Quadratic,
}

/// Bare diagonal elements `<l, 0; 0, N - l>` times `1`, `l - N/2` and `(l - N/2)^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionSnapshot {
    pub time: f64,
    pub weight1: Vec<f64>,
    pub weight_l: Vec<f64>,
    pub weight_l2: Vec<f64>,
}

impl DistributionSnapshot {
    pub fn values(&self, w: Weight) -> &[f64] {
        match w {
            Weight::One => &self.weight1,
            Weight::Linear => &self.weight_l,
            Weight::Quadratic => &self.weight_l2,
        }
    }

    pub fn len(&self) -> usize {
        self.weight1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weight1.is_empty()
    }
}

pub fn distribution_snapshot(s: &CollectiveState, time: f64) -> DistributionSnapshot {
    let n = s.n_atoms();
    let half = 0.5 * n as f64;
    let base: Vec<f64> = (0..=n).map(|l| s.diagonal(l).re).collect();
    let shifted = |p: i32| -> Vec<f64> {
        base.iter()
            .enumerate()
            .map(|(l, v)| (l as f64 - half).powi(p) * v)
            .collect()
    };
    let (weight_l, weight_l2) = (shifted(1), shifted(2));
    DistributionSnapshot {
        time,
        weight1: base,
        weight_l,
        weight_l2,
    }
}

/// Probability of `l` atoms up: `C(N, l) <l, 0; 0, N - l>`.
pub fn population_distribution(s: &CollectiveState) -> Vec<f64> {
    let b = s.binomials();
    (0..=s.n_atoms())
        .map(|l| b.weigh_re(l, s.diagonal(l).re))
        .collect()
}
