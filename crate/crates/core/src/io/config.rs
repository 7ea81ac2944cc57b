use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::dynamics::StepConfig;
use crate::error::{Error, Result};
use crate::params::{mhz, PhysicalParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Probe polarization in units of pi.
    Vartheta,
    BetaIn,
    Eta,
    /// Spontaneous emission rate in MHz.
    Gamma,
    NAtoms,
}

impl SweepParameter {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "vartheta" => Self::Vartheta,
            "beta_in" => Self::BetaIn,
            "eta" => Self::Eta,
            "gamma" => Self::Gamma,
            "n_atoms" => Self::NAtoms,
            _ => return None,
        })
    }

    pub fn apply(self, p: &mut PhysicalParams, value: f64) -> Result<()> {
        let bad = |msg: String| Err(Error::config("sweep.values", msg));
        match self {
            Self::Vartheta => p.vartheta = value * std::f64::consts::PI,
            Self::BetaIn if value < 0.0 => return bad(format!("beta_in {value} < 0")),
            Self::BetaIn => p.beta_in = value,
            Self::Eta if !(0.0..=1.0).contains(&value) => {
                return bad(format!("eta {value} outside [0, 1]"))
            }
            Self::Eta => p.eta = value,
            Self::Gamma if value < 0.0 => return bad(format!("gamma {value} < 0")),
            Self::Gamma => p.gamma = mhz(value),
            Self::NAtoms if value < 1.0 || value.fract() != 0.0 => {
                return bad(format!("n_atoms {value} is not a positive integer"))
            }
            Self::NAtoms => p.n_atoms = value as usize,
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub physical: PhysicalParams,
    pub step: StepConfig,
    pub seeds: Vec<u64>,
    pub noise_files: Vec<PathBuf>,
    /// Worker threads; 0 picks the number of available cores.
    pub workers: usize,
    pub sweep: Option<Sweep>,
    pub output_dir: PathBuf,
    /// SHA-256 of the configuration text.
    pub hash: String,
}

impl RunConfig {
    /// Physical parameters for each sweep point (a single point without a sweep).
    pub fn sweep_points(&self) -> Result<Vec<(Option<f64>, PhysicalParams)>> {
        match &self.sweep {
            None => Ok(vec![(None, self.physical.clone())]),
            Some(s) => s
                .values
                .iter()
                .map(|&v| {
                    let mut p = self.physical.clone();
                    s.parameter.apply(&mut p, v)?;
                    Ok((Some(v), p))
                })
                .collect(),
        }
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text).map_err(|e| match e {
        Error::Parse { msg, .. } => Error::Parse {
            path: path.to_path_buf(),
            msg,
        },
        other => other,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    for f in &mut cfg.noise_files {
        if f.is_relative() {
            *f = base.join(&*f);
        }
    }
    if cfg.output_dir.is_relative() {
        cfg.output_dir = base.join(&cfg.output_dir);
    }
    Ok(cfg)
}

fn flatten(prefix: &str, table: &Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::config(key, format!("expected a number, got {v}"))),
    }
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(Error::config(
            key,
            format!("expected a non-negative integer, got {v}"),
        )),
    }
}

fn as_array<'a>(key: &str, v: &'a Value) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| Error::config(key, format!("expected an array, got {v}")))
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| Error::config(key, format!("expected a string, got {v}")))
}

/// Parse configuration text. Missing keys keep their reference defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
        path: PathBuf::from("<config>"),
        msg: e.to_string(),
    })?;
    let mut entries = Vec::new();
    flatten("", &table, &mut entries);

    let mut p = PhysicalParams::reference();
    let mut step = StepConfig::default();
    let mut seeds = None;
    let mut noise_files = Vec::new();
    let mut workers = 0;
    let mut sweep_param = None;
    let mut sweep_values = None;
    let mut output_dir = PathBuf::from("out");
    let pi = std::f64::consts::PI;

    for (key, v) in &entries {
        let k = key.as_str();
        let num = || as_f64(k, v);
        match k {
            "physical.omega_ud_mhz" => p.omega_ud = mhz(num()?),
            "physical.delta_up_mhz" => p.delta_up = mhz(num()?),
            "physical.delta_dn_mhz" => p.delta_dn = mhz(num()?),
            "physical.kappa_mhz" => p.kappa = mhz(num()?),
            "physical.g_mhz" => p.g = mhz(num()?),
            "physical.gamma_mhz" => p.gamma = mhz(num()?),
            "physical.eta" => p.eta = num()?,
            "physical.beta_in" => p.beta_in = num()?,
            "physical.vartheta_pi" => p.vartheta = num()? * pi,
            "physical.n_atoms" => p.n_atoms = as_usize(k, v)?,
            "physical.theta_pi" => p.theta = num()? * pi,
            "physical.phi_pi" => p.phi = num()? * pi,
            "step.dt_us" => step.dt = num()?,
            "step.t_end_us" => step.t_end = num()?,
            "step.renormalize_every" => step.renormalize_every = as_usize(k, v)?,
            "step.frame_shift_mhz" => step.frame_shift_override = Some(mhz(num()?)),
            "step.record_every" => step.record_every = as_usize(k, v)?,
            "step.measurement_on" => {
                step.measurement_on = v
                    .as_bool()
                    .ok_or_else(|| Error::config(k, format!("expected true or false, got {v}")))?
            }
            "run.seeds" => {
                seeds = Some(
                    as_array(k, v)?
                        .iter()
                        .map(|s| match s {
                            Value::Integer(i) if *i >= 0 => Ok(*i as u64),
                            _ => Err(Error::config(k, format!("seed {s} is not a u64"))),
                        })
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            "run.noise_files" => {
                noise_files = as_array(k, v)?
                    .iter()
                    .map(|f| as_str(k, f).map(PathBuf::from))
                    .collect::<Result<_>>()?
            }
            "run.workers" => workers = as_usize(k, v)?,
            "sweep.parameter" => {
                let name = as_str(k, v)?;
                sweep_param = Some(SweepParameter::parse(name).ok_or_else(|| {
                    Error::config(
                        k,
                        format!("unknown sweep parameter `{name}` (vartheta, beta_in, eta, gamma, n_atoms)"),
                    )
                })?)
            }
            "sweep.values" => {
                sweep_values = Some(
                    as_array(k, v)?
                        .iter()
                        .map(|x| as_f64(k, x))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
            "output.dir" => output_dir = PathBuf::from(as_str(k, v)?),
            "output.snapshot_times_us" => {
                step.snapshot_times = as_array(k, v)?
                    .iter()
                    .map(|x| as_f64(k, x))
                    .collect::<Result<_>>()?
            }
            _ => return Err(Error::config(k, "unknown key")),
        }
    }

    let checks: [(&str, bool, &str); 8] = [
        ("physical.kappa_mhz", p.kappa > 0.0, "must be > 0"),
        ("physical.gamma_mhz", p.gamma >= 0.0, "must be >= 0"),
        ("physical.g_mhz", p.g >= 0.0, "must be >= 0"),
        (
            "physical.eta",
            (0.0..=1.0).contains(&p.eta),
            "must lie in [0, 1]",
        ),
        ("physical.beta_in", p.beta_in >= 0.0, "must be >= 0"),
        ("physical.n_atoms", p.n_atoms >= 1, "must be >= 1"),
        ("step.dt_us", step.dt > 0.0, "must be > 0"),
        ("step.t_end_us", step.t_end >= step.dt, "must be >= dt_us"),
    ];
    if let Some((key, _, msg)) = checks.iter().find(|c| !c.1) {
        return Err(Error::config(*key, *msg));
    }
    p.validate()
        .map_err(|e| Error::config("physical", e.to_string()))?;
    step.validate()
        .map_err(|e| Error::config("step", e.to_string()))?;

    let seeds = match seeds {
        Some(s) => s,
        None if noise_files.is_empty() => vec![1],
        None => Vec::new(),
    };
    if seeds.is_empty() && noise_files.is_empty() {
        return Err(Error::config(
            "run.seeds",
            "need at least one seed or noise file",
        ));
    }

    let sweep = match (sweep_param, sweep_values) {
        (None, None) => None,
        (Some(parameter), Some(values)) if !values.is_empty() => {
            let s = Sweep { parameter, values };
            for &v in &s.values {
                s.parameter.apply(&mut p.clone(), v)?;
            }
            Some(s)
        }
        (Some(_), _) => {
            return Err(Error::config(
                "sweep.values",
                "sweep needs a non-empty value list",
            ))
        }
        (None, Some(_)) => {
            return Err(Error::config(
                "sweep.parameter",
                "sweep values given without a parameter",
            ))
        }
    };

    Ok(RunConfig {
        physical: p,
        step,
        seeds,
        noise_files,
        workers,
        sweep,
        output_dir,
        hash: hex::encode(Sha256::digest(text.as_bytes())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_reference() {
        let c = parse_config("").unwrap();
        assert_eq!(c.physical, PhysicalParams::reference());
        assert_eq!(c.step, StepConfig::default());
        assert_eq!(c.seeds, vec![1]);
        assert!(c.sweep.is_none());
        assert_eq!(c.hash.len(), 64);
    }

    #[test]
    fn dotted_and_sectioned_keys_agree() {
        let a = parse_config("physical.g_mhz = 2.0\nstep.dt_us = 5e-5\n").unwrap();
        let b = parse_config("[physical]\ng_mhz = 2\n[step]\ndt_us = 5e-5\n").unwrap();
        assert_eq!(a.physical, b.physical);
        assert_eq!(a.physical.g, mhz(2.0));
        assert_eq!(a.step.dt, 5e-5);
    }

    #[test]
    fn rejects_bad_eta_and_unknown_keys() {
        let e = parse_config("physical.eta = 1.5").unwrap_err();
        assert!(
            matches!(&e, Error::Config { key, .. } if key == "physical.eta"),
            "{e}"
        );
        let e = parse_config("physical.etta = 0.5").unwrap_err();
        assert!(
            matches!(&e, Error::Config { key, .. } if key == "physical.etta"),
            "{e}"
        );
        let e = parse_config("physical.n_atoms = 2.5").unwrap_err();
        assert!(matches!(&e, Error::Config { key, .. } if key == "physical.n_atoms"));
        assert!(matches!(
            parse_config("physical = ["),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn polarization_sweep() {
        let c = parse_config(
            "sweep.parameter = \"vartheta\"\nsweep.values = [0, 0.05, 0.25, 0.45, 0.5]\nrun.noise_files = [\"w.txt\"]\n",
        )
        .unwrap();
        let pts = c.sweep_points().unwrap();
        assert_eq!(pts.len(), 5);
        assert!((pts[2].1.vartheta - 0.25 * std::f64::consts::PI).abs() < 1e-15);
        assert!(c.seeds.is_empty());
        assert_eq!(c.noise_files, vec![PathBuf::from("w.txt")]);
        let e = parse_config("sweep.parameter = \"kappa\"\nsweep.values = [1]").unwrap_err();
        assert!(matches!(e, Error::Config { .. }));
    }
}
