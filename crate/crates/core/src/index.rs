//! Flat addressing of the collective quantum numbers `{n_uu, n_ud, n_du, n_dd}`.
//!
//! Tuples are enumerated by three nested loops: `n_dd` outermost, then `n_du`,
//! then `n_ud`, with `n_uu` taking whatever is left of `N`. The flat index of a
//! tuple is its zero-based position in that enumeration. For fixed
//! `(n_dd, n_du)` the tuples form a contiguous *row* indexed by `n_ud`, and for
//! fixed `n_dd` the rows form a contiguous *block*.
//!
//! Only the columns `k <= 3` of Pascal's triangle are ever needed, so the
//! binomial tables are tiny and exact.

use std::fmt;

use crate::error::{Error, Result};

/// Occurrence counts of (ket, bra) level pairs over the `N` atoms.
///
/// `n_ud` counts atoms whose ket label is up and bra label is down, and so on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    pub n_uu: usize,
    pub n_ud: usize,
    pub n_du: usize,
    pub n_dd: usize,
}

impl MultiIndex {
    pub const fn new(n_uu: usize, n_ud: usize, n_du: usize, n_dd: usize) -> Self {
        Self {
            n_uu,
            n_ud,
            n_du,
            n_dd,
        }
    }

    /// Diagonal element `<l, 0; 0, N - l>`.
    pub const fn diagonal(l: usize, n: usize) -> Self {
        Self::new(l, 0, 0, n - l)
    }

    pub const fn total(&self) -> usize {
        self.n_uu + self.n_ud + self.n_du + self.n_dd
    }

    /// The tuple labelling the complex-conjugate element (`n_ud <-> n_du`).
    pub const fn conjugate(&self) -> Self {
        Self::new(self.n_uu, self.n_du, self.n_ud, self.n_dd)
    }

    pub const fn as_array(&self) -> [usize; 4] {
        [self.n_uu, self.n_ud, self.n_du, self.n_dd]
    }

    /// Add a signed shift, `None` when a component would go negative.
    pub fn checked_add(&self, delta: Shift) -> Option<Self> {
        let a = self.as_array();
        let mut out = [0usize; 4];
        for k in 0..4 {
            let v = a[k] as i64 + delta.0[k];
            if v < 0 {
                return None;
            }
            out[k] = v as usize;
        }
        Some(Self::new(out[0], out[1], out[2], out[3]))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "<{} {}; {} {}>",
            self.n_uu, self.n_ud, self.n_du, self.n_dd
        )
    }
}

/// Offset into the flat state array.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlatIndex(pub usize);

impl FlatIndex {
    pub const fn value(self) -> usize {
        self.0
    }
}

/// Signed change of the four collective numbers, ordered `(uu, ud, du, dd)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shift(pub [i64; 4]);

impl Shift {
    pub const ZERO: Shift = Shift([0; 4]);

    pub const fn new(d_uu: i64, d_ud: i64, d_du: i64, d_dd: i64) -> Self {
        Shift([d_uu, d_ud, d_du, d_dd])
    }

    fn sum(&self) -> i64 {
        self.0.iter().sum()
    }
}

/// Number of tuples `{n_ab}` summing to `n`, i.e. `C(n + 3, 3)`.
pub fn state_count(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::Domain("atom count must be at least 1".into()));
    }
    let n = n as u128;
    let count = (n + 1)
        .checked_mul(n + 2)
        .and_then(|v| v.checked_mul(n + 3))
        .map(|v| v / 6)
        .ok_or_else(|| Error::Capacity(format!("C({}+3, 3) overflows", n)))?;
    usize::try_from(count)
        .map_err(|_| Error::Capacity(format!("C({}+3, 3) = {} exceeds usize", n, count)))
}

/// Index space for a fixed atom number.
#[derive(Clone, Debug)]
pub struct IndexSpace {
    n: usize,
    count: usize,
    /// `c2[x] = C(x + 2, 2)`
    c2: Vec<usize>,
    /// `c3[x] = C(x + 3, 3)`
    c3: Vec<usize>,
}

impl IndexSpace {
    pub fn new(n: usize) -> Result<Self> {
        let count = state_count(n)?;
        let mut c2 = Vec::with_capacity(n + 1);
        let mut c3 = Vec::with_capacity(n + 1);
        c2.push(1usize);
        c3.push(1usize);
        for x in 1..=n {
            let t2 = c2[x - 1]
                .checked_add(x + 1)
                .ok_or_else(|| Error::Capacity("binomial table overflow".into()))?;
            let t3 = c3[x - 1]
                .checked_add(t2)
                .ok_or_else(|| Error::Capacity("binomial table overflow".into()))?;
            c2.push(t2);
            c3.push(t3);
        }
        debug_assert_eq!(c3[n], count);
        Ok(Self { n, count, c2, c3 })
    }

    pub fn n_atoms(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// First flat offset of the block with the given `n_dd`.
    #[inline]
    pub fn block_start(&self, n_dd: usize) -> usize {
        debug_assert!(n_dd <= self.n + 1);
        if n_dd > self.n {
            return self.count;
        }
        self.count - self.c3[self.n - n_dd]
    }

    /// First flat offset of the row `(n_dd, n_du)`; the row has
    /// `N - n_dd - n_du + 1` entries indexed by `n_ud`.
    #[inline]
    pub fn row_start(&self, n_dd: usize, n_du: usize) -> usize {
        let m = self.n - n_dd;
        debug_assert!(n_du <= m);
        self.block_start(n_dd) + self.c2[m] - self.c2[m - n_du]
    }

    pub fn is_valid(&self, m: &MultiIndex) -> bool {
        m.total() == self.n
    }

    pub fn flat_index(&self, m: &MultiIndex) -> Result<FlatIndex> {
        if !self.is_valid(m) {
            return Err(Error::Domain(format!(
                "tuple {} does not sum to N = {}",
                m, self.n
            )));
        }
        Ok(FlatIndex(self.row_start(m.n_dd, m.n_du) + m.n_ud))
    }

    pub fn multi_index(&self, i: FlatIndex) -> Result<MultiIndex> {
        let i = i.0;
        if i >= self.count {
            return Err(Error::Domain(format!(
                "flat index {} out of range [0, {})",
                i, self.count
            )));
        }
        // Largest n_dd whose block starts at or before i.
        let n_dd = partition_last(self.n + 1, |d| self.block_start(d) <= i);
        let m = self.n - n_dd;
        let rel = i - self.block_start(n_dd);
        let n_du = partition_last(m + 1, |u| self.c2[m] - self.c2[m - u] <= rel);
        let n_ud = rel - (self.c2[m] - self.c2[m - n_du]);
        let n_uu = m - n_du - n_ud;
        Ok(MultiIndex::new(n_uu, n_ud, n_du, n_dd))
    }

    /// Shift a flat index by `delta` using table differences only; `None`
    /// marks a shifted tuple outside the domain.
    pub fn shift_index(&self, i: FlatIndex, delta: Shift) -> Option<FlatIndex> {
        let m = self.multi_index(i).ok()?;
        self.shift_from(&m, i, delta)
    }

    /// Same as [`shift_index`](Self::shift_index) when the caller already
    /// knows the tuple at `i`.
    pub fn shift_from(&self, m: &MultiIndex, i: FlatIndex, delta: Shift) -> Option<FlatIndex> {
        if delta.sum() != 0 {
            return None;
        }
        let t = m.checked_add(delta)?;
        let (d0, u0) = (m.n_dd, m.n_du);
        let (d1, u1) = (t.n_dd, t.n_du);
        let (m0, m1) = (self.n - d0, self.n - d1);
        // block: c3 shrinks with n_dd; row: c2 differences within the block.
        let block = self.c3[m0] as i64 - self.c3[m1] as i64;
        let row = (self.c2[m1] as i64 - self.c2[m1 - u1] as i64)
            - (self.c2[m0] as i64 - self.c2[m0 - u0] as i64);
        let col = t.n_ud as i64 - m.n_ud as i64;
        let j = i.0 as i64 + block + row + col;
        debug_assert!(j >= 0 && (j as usize) < self.count);
        Some(FlatIndex(j as usize))
    }

    /// All tuples in canonical loop order.
    pub fn iter(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        let n = self.n;
        (0..=n).flat_map(move |n_dd| {
            (0..=n - n_dd).flat_map(move |n_du| {
                let rest = n - n_dd - n_du;
                (0..=rest).map(move |n_ud| MultiIndex::new(rest - n_ud, n_ud, n_du, n_dd))
            })
        })
    }
}

/// Largest `k` in `[0, len)` with `pred(k)` true, for `pred` true on a prefix
/// that contains 0.
fn partition_last(len: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0usize, len);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
