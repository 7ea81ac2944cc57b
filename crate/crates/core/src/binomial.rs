//! Log-space binomial weights.
//!
//! `C(N, l)` overflows a double near `N = 1030` while the matching collective
//! element underflows, so weighted sums pair the two in log space.

use num_complex::Complex64 as C64;

#[derive(Clone, Debug)]
pub struct LogBinomial {
    ln_c: Vec<f64>,
}

impl LogBinomial {
    /// Table of `ln C(n, l)` for `l = 0..=n`.
    pub fn new(n: usize) -> Self {
        let mut ln_fact = Vec::with_capacity(n + 1);
        let mut acc = 0.0f64;
        ln_fact.push(0.0);
        for k in 1..=n {
            acc += (k as f64).ln();
            ln_fact.push(acc);
        }
        let ln_c = (0..=n)
            .map(|l| {
                if l == 0 || l == n {
                    0.0
                } else {
                    ln_fact[n] - ln_fact[l] - ln_fact[n - l]
                }
            })
            .collect();
        Self { ln_c }
    }

    pub fn n(&self) -> usize {
        self.ln_c.len() - 1
    }

    #[inline]
    pub fn ln(&self, l: usize) -> f64 {
        self.ln_c[l]
    }

    pub fn value(&self, l: usize) -> f64 {
        self.ln_c[l].exp()
    }

    /// `C(N, l) * z` evaluated as `exp(ln C + ln|z|) * z / |z|`.
    #[inline]
    pub fn weigh(&self, l: usize, z: C64) -> C64 {
        weigh_ln(self.ln_c[l], z)
    }

    /// Real-valued variant of [`weigh`](Self::weigh).
    #[inline]
    pub fn weigh_re(&self, l: usize, x: f64) -> f64 {
        weigh_ln_re(self.ln_c[l], x)
    }
}

#[inline]
pub fn weigh_ln(ln_c: f64, z: C64) -> C64 {
    let r = z.norm();
    if r == 0.0 || !r.is_finite() {
        return z * ln_c.exp();
    }
    let unit = z / r;
    unit * (ln_c + r.ln()).exp()
}

#[inline]
pub fn weigh_ln_re(ln_c: f64, x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x * ln_c.exp();
    }
    x.signum() * (ln_c + x.abs().ln()).exp()
}
