//! Standard-normal draws driving the measurement record.

use std::fmt::Write as _;
use std::path::Path;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Standard normals from a seeded ChaCha20 stream, one 64-bit word per draw,
/// mapped through the inverse normal CDF.
pub struct NormalStream {
    rng: ChaCha20Rng,
    normal: Normal,
}

impl NormalStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            normal: Normal::standard(),
        }
    }
}

impl Iterator for NormalStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let x = self.rng.next_u64();
        // Midpoint of one of 2^53 equal cells, never 0 or 1.
        let u = ((x >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        Some(self.normal.inverse_cdf(u))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NoiseSource {
    Seed(u64),
    File(String),
    Derived(String),
}

impl std::fmt::Display for NoiseSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NoiseSource::Seed(s) => write!(f, "seed:{s}"),
            NoiseSource::File(p) => write!(f, "file:{p}"),
            NoiseSource::Derived(d) => write!(f, "derived:{d}"),
        }
    }
}

/// Finite sequence of standard-normal draws `z_k`; `dW_k = z_k sqrt(dt)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WienerPath {
    source: NoiseSource,
    draws: Vec<f64>,
}

impl WienerPath {
    pub fn seeded(seed: u64, count: usize) -> Self {
        Self {
            source: NoiseSource::Seed(seed),
            draws: NormalStream::new(seed).take(count).collect(),
        }
    }

    pub fn from_draws(label: impl Into<String>, draws: Vec<f64>) -> Self {
        Self {
            source: NoiseSource::Derived(label.into()),
            draws,
        }
    }

    pub fn source(&self) -> &NoiseSource {
        &self.source
    }

    pub fn draws(&self) -> &[f64] {
        &self.draws
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn draw(&self, k: usize) -> Result<f64> {
        self.draws.get(k).copied().ok_or(Error::NoiseExhausted {
            needed: k + 1,
            available: self.draws.len(),
        })
    }

    pub fn require(&self, count: usize) -> Result<()> {
        if count > self.draws.len() {
            return Err(Error::NoiseExhausted {
                needed: count,
                available: self.draws.len(),
            });
        }
        Ok(())
    }

    /// Same path on a grid of twice the step: `(z_{2k} + z_{2k+1}) / sqrt 2`.
    pub fn coarsened(&self) -> Self {
        let draws = self
            .draws
            .chunks_exact(2)
            .map(|p| (p[0] + p[1]) * std::f64::consts::FRAC_1_SQRT_2)
            .collect();
        Self {
            source: NoiseSource::Derived(format!("coarsened {}", self.source)),
            draws,
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            source: NoiseSource::Derived(format!("negated {}", self.source)),
            draws: self.draws.iter().map(|z| -z).collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let seed = match &self.source {
            NoiseSource::Seed(s) => s.to_string(),
            _ => "none".to_string(),
        };
        let mut out = String::with_capacity(24 * (self.draws.len() + 1));
        let _ = writeln!(out, "# wiener v1 count={} seed={}", self.draws.len(), seed);
        for z in &self.draws {
            let _ = writeln!(out, "{z:.16e}");
        }
        out
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bad = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            msg,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| bad("empty noise file".into()))?;
        let rest = header
            .strip_prefix("# wiener v1")
            .ok_or_else(|| bad(format!("bad header `{header}`")))?;
        let count: usize = rest
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix("count="))
            .ok_or_else(|| bad("header lacks count=".into()))?
            .parse()
            .map_err(|e| bad(format!("bad count: {e}")))?;
        let mut draws = Vec::with_capacity(count);
        for (no, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let z: f64 = line
                .parse()
                .map_err(|e| bad(format!("line {}: {e}", no + 1)))?;
            if !z.is_finite() {
                return Err(bad(format!("line {}: non-finite draw", no + 1)));
            }
            draws.push(z);
        }
        if draws.len() != count {
            return Err(bad(format!(
                "header announces {count} draws, found {}",
                draws.len()
            )));
        }
        Ok(Self {
            source: NoiseSource::File(path.display().to_string()),
            draws,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_is_reproducible_and_standard() {
        let a = WienerPath::seeded(7, 200_000);
        assert_eq!(a, WienerPath::seeded(7, 200_000));
        assert_ne!(a.draws()[..8], WienerPath::seeded(8, 8).draws()[..]);
        let n = a.len() as f64;
        let mean = a.draws().iter().sum::<f64>() / n;
        let var = a.draws().iter().map(|z| (z - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 5.0 / n.sqrt());
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn file_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.txt");
        let w = WienerPath::seeded(3, 1000);
        w.write_file(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# wiener v1 count=1000 seed=3\n"));
        let back = WienerPath::read_file(&path).unwrap();
        assert_eq!(back.draws(), w.draws());
    }

    #[test]
    fn file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.txt");
        std::fs::write(&path, "# wiener v1 count=3 seed=1\n0.1\n0.2\n").unwrap();
        assert!(matches!(
            WienerPath::read_file(&path),
            Err(Error::Parse { .. })
        ));
        std::fs::write(&path, "hello\n").unwrap();
        assert!(matches!(
            WienerPath::read_file(&path),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn coarsening_preserves_variance_and_sums() {
        let w = WienerPath::seeded(11, 10);
        let c = w.coarsened();
        assert_eq!(c.len(), 5);
        let fine: f64 = w.draws()[..2].iter().sum();
        assert!((c.draws()[0] * std::f64::consts::SQRT_2 - fine).abs() < 1e-15);
        assert!(matches!(
            w.draw(10),
            Err(Error::NoiseExhausted {
                needed: 11,
                available: 10
            })
        ));
    }
}
