//! The collective density matrix `<n>` stored densely in flat-index order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::binomial::LogBinomial;
use crate::error::{Error, Result};
use crate::index::{FlatIndex, IndexSpace, MultiIndex};

const DUMP_MAGIC: &[u8; 4] = b"CDMS";
const DUMP_VERSION: u32 = 1;
/// Above this atom number the product formula is evaluated in log space.
const LOG_SPACE_THRESHOLD: usize = 64;

#[derive(Clone, Debug)]
pub struct CollectiveState {
    space: IndexSpace,
    binom: LogBinomial,
    amps: Vec<C64>,
}

impl PartialEq for CollectiveState {
    fn eq(&self, other: &Self) -> bool {
        self.n_atoms() == other.n_atoms() && self.amps == other.amps
    }
}

impl CollectiveState {
    pub fn zeros(n: usize) -> Result<Self> {
        let space = IndexSpace::new(n)?;
        let amps = vec![C64::new(0.0, 0.0); space.len()];
        Ok(Self {
            binom: LogBinomial::new(n),
            space,
            amps,
        })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self> {
        let mut s = Self::zeros(n)?;
        if amps.len() != s.amps.len() {
            return Err(Error::Domain(format!(
                "expected {} amplitudes for N = {}, got {}",
                s.amps.len(),
                n,
                amps.len()
            )));
        }
        s.amps = amps;
        Ok(s)
    }

    /// Single collective element set to `value`, everything else zero.
    pub fn basis(n: usize, m: MultiIndex, value: C64) -> Result<Self> {
        let mut s = Self::zeros(n)?;
        let i = s.space.flat_index(&m)?;
        s.amps[i.0] = value;
        Ok(s)
    }

    pub fn n_atoms(&self) -> usize {
        self.space.n_atoms()
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn space(&self) -> &IndexSpace {
        &self.space
    }

    pub fn binomials(&self) -> &LogBinomial {
        &self.binom
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn get(&self, m: &MultiIndex) -> Result<C64> {
        Ok(self.amps[self.space.flat_index(m)?.0])
    }

    pub fn set(&mut self, m: &MultiIndex, value: C64) -> Result<()> {
        let i = self.space.flat_index(m)?;
        self.amps[i.0] = value;
        Ok(())
    }

    /// Element `<l, 0; 0, N - l>`.
    #[inline]
    pub fn diagonal(&self, l: usize) -> C64 {
        let n = self.n_atoms();
        self.amps[self.space.row_start(n - l, 0)]
    }

    /// Element `<l - k, j; k, N - l - j>`, `None` outside the domain.
    pub fn sector(&self, n_uu: isize, n_ud: usize, n_du: usize, n_dd: isize) -> Option<C64> {
        if n_uu < 0 || n_dd < 0 {
            return None;
        }
        let m = MultiIndex::new(n_uu as usize, n_ud, n_du, n_dd as usize);
        self.space.flat_index(&m).ok().map(|i| self.amps[i.0])
    }

    pub(crate) fn replace_amplitudes(&mut self, amps: &mut Vec<C64>) {
        std::mem::swap(&mut self.amps, amps);
    }

    /// `sum_l C(N, l) Re <l, 0; 0, N - l>`.
    pub fn trace(&self) -> f64 {
        let n = self.n_atoms();
        (0..=n)
            .map(|l| self.binom.weigh_re(l, self.diagonal(l).re))
            .sum()
    }

    /// Imaginary part of the weighted diagonal sum; zero for a hermitian state.
    pub fn trace_imag_residue(&self) -> f64 {
        let n = self.n_atoms();
        (0..=n)
            .map(|l| self.binom.weigh_re(l, self.diagonal(l).im))
            .sum()
    }

    /// Divide every amplitude by the trace. Returns the trace before scaling.
    pub fn renormalize(&mut self) -> Result<f64> {
        let tr = self.trace();
        if !(tr.is_finite() && tr > 0.0) {
            return Err(Error::Integration {
                step: 0,
                time: f64::NAN,
                reason: format!("trace is {tr}; reduce dt"),
            });
        }
        let inv = 1.0 / tr;
        self.amps.par_iter_mut().for_each(|z| *z *= inv);
        Ok(tr)
    }

    pub fn renormalized(mut self) -> Result<Self> {
        self.renormalize()?;
        Ok(self)
    }

    /// `max |<n_uu, n_ud; n_du, n_dd> - conj <n_uu, n_du; n_ud, n_dd>|`.
    pub fn hermitian_residual(&self) -> f64 {
        let space = &self.space;
        space
            .iter()
            .enumerate()
            .filter(|(_, m)| m.n_ud < m.n_du)
            .map(|(i, m)| {
                let j = space.row_start(m.n_dd, m.n_ud) + m.n_du;
                (self.amps[i] - self.amps[j].conj()).norm()
            })
            .chain((0..=self.n_atoms()).map(|l| self.diagonal(l).im.abs() * 2.0))
            .fold(0.0, f64::max)
    }

    /// Overwrite every element with `n_ud > n_du` by the conjugate of its partner
    /// and drop imaginary parts on the diagonal.
    pub fn mirror_lower_coherences(&mut self) {
        let space = self.space.clone();
        for (i, m) in space.iter().enumerate() {
            if m.n_ud > m.n_du {
                let j = space.row_start(m.n_dd, m.n_ud) + m.n_du;
                self.amps[i] = self.amps[j].conj();
            } else if m.n_ud == 0 && m.n_du == 0 {
                self.amps[i].im = 0.0;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.amps
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn write_dump(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        let n = u32::try_from(self.n_atoms())
            .map_err(|_| Error::Capacity("N does not fit the dump header".into()))?;
        let mut buf = Vec::with_capacity(16 + 16 * self.amps.len());
        buf.extend_from_slice(DUMP_MAGIC);
        buf.extend_from_slice(&DUMP_VERSION.to_le_bytes());
        buf.extend_from_slice(&n.to_le_bytes());
        buf.extend_from_slice(&0u32.to_le_bytes());
        for z in &self.amps {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_dump(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut bytes = Vec::new();
        BufReader::new(f)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
        let bad = |msg: &str| Error::Parse {
            path: path.to_path_buf(),
            msg: msg.to_string(),
        };
        if bytes.len() < 16 || &bytes[0..4] != DUMP_MAGIC {
            return Err(bad("missing CDMS header"));
        }
        let word = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().unwrap());
        if word(4) != DUMP_VERSION {
            return Err(bad(&format!("unsupported dump version {}", word(4))));
        }
        let n = word(8) as usize;
        let count = crate::index::state_count(n)?;
        if bytes.len() != 16 + 16 * count {
            return Err(bad(&format!(
                "payload holds {} bytes, expected {}",
                bytes.len() - 16,
                16 * count
            )));
        }
        let amps = bytes[16..]
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            })
            .collect();
        Self::from_amplitudes(n, amps)
    }
}

/// Coherent spin state `prod_k (cos(theta/2)|dn> + sin(theta/2) e^{i phi}|up>)`
/// mapped to collective elements `prod_ab (d_a d_b^*)^{n_ab}`.
pub fn css_init(theta: f64, phi: f64, n: usize) -> Result<CollectiveState> {
    let mut s = CollectiveState::zeros(n)?;
    let d_up = C64::from_polar((0.5 * theta).sin(), phi);
    let d_dn = C64::new((0.5 * theta).cos(), 0.0);
    // Order (uu, ud, du, dd): first label from the ket, second from the bra.
    let factors = [
        d_up * d_up.conj(),
        d_up * d_dn.conj(),
        d_dn * d_up.conj(),
        d_dn * d_dn.conj(),
    ];
    let log_space = n > LOG_SPACE_THRESHOLD;
    let logs = factors.map(|f| {
        if f == C64::new(0.0, 0.0) {
            None
        } else {
            Some(f.ln())
        }
    });

    let space = s.space.clone();
    for (amp, m) in s.amps.iter_mut().zip(space.iter()) {
        let counts = m.as_array();
        *amp = if log_space {
            let mut acc = C64::new(0.0, 0.0);
            let mut zero = false;
            for k in 0..4 {
                if counts[k] == 0 {
                    continue;
                }
                match logs[k] {
                    Some(lf) => acc += lf * counts[k] as f64,
                    None => zero = true,
                }
            }
            if zero {
                C64::new(0.0, 0.0)
            } else {
                acc.exp()
            }
        } else {
            (0..4).fold(C64::new(1.0, 0.0), |p, k| {
                p * factors[k].powu(counts[k] as u32)
            })
        };
    }
    s.mirror_lower_coherences();
    Ok(s)
}

/// Convenience lookup used by tests and diagnostics.
pub fn element(s: &CollectiveState, i: FlatIndex) -> C64 {
    s.amps[i.0]
}
