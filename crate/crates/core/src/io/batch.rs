use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{RunConfig, Sweep};
use super::csv::{emit_csv, emit_ensemble_csv, EnsembleMean};
use crate::dynamics::{run_trajectory, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::noise::WienerPath;
use crate::params::PhysicalParams;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JobOutcome {
    pub sweep_index: usize,
    pub sweep_value: Option<f64>,
    pub run_index: usize,
    pub noise: String,
    /// Output directory relative to the batch root.
    pub dir: String,
    pub ok: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub version: String,
    pub config_sha256: String,
    pub sweep: Option<Sweep>,
    pub seeds: Vec<u64>,
    pub noise_files: Vec<String>,
    pub jobs: Vec<JobOutcome>,
    pub failures: usize,
}

#[derive(Clone, Debug)]
pub struct BatchSummary {
    pub manifest: Manifest,
    /// One entry per job in manifest order; `None` for failed jobs.
    pub records: Vec<Option<TrajectoryRecord>>,
    /// One entry per sweep point.
    pub ensembles: Vec<EnsembleMean>,
}

impl BatchSummary {
    pub fn all_failed(&self) -> bool {
        self.manifest.failures == self.manifest.jobs.len()
    }
}

#[derive(Clone, Copy)]
enum Noise<'a> {
    Seed(u64),
    File(&'a Path),
}

struct Job<'a> {
    sweep_index: usize,
    sweep_value: Option<f64>,
    run_index: usize,
    params: &'a PhysicalParams,
    noise: Noise<'a>,
}

impl Job<'_> {
    fn dir(&self) -> String {
        format!("s{}_r{}", self.sweep_index, self.run_index)
    }

    fn run(&self, cfg: &RunConfig, root: &Path) -> Result<TrajectoryRecord> {
        let noise = match self.noise {
            Noise::Seed(s) => WienerPath::seeded(s, cfg.step.n_steps()),
            Noise::File(p) => WienerPath::read_file(p)?,
        };
        let rec = run_trajectory(self.params, &cfg.step, &noise)?;
        let dir = root.join(self.dir());
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        emit_csv(&rec, &dir.join("trajectory.csv"))?;
        Ok(rec)
    }
}

/// Run every (sweep point, noise source) pair on a pool of `cfg.workers`
/// threads and write per-trajectory CSVs, per-point ensemble means and a
/// manifest. Failing trajectories are logged in the manifest; the rest of the
/// batch still runs.
pub fn run_batch(cfg: &RunConfig) -> Result<BatchSummary> {
    let points = cfg.sweep_points()?;
    let root = &cfg.output_dir;
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;

    let noises: Vec<Noise> = cfg
        .seeds
        .iter()
        .map(|&s| Noise::Seed(s))
        .chain(cfg.noise_files.iter().map(|p| Noise::File(p)))
        .collect();
    let mut jobs = Vec::with_capacity(points.len() * noises.len());
    for (si, (value, p)) in points.iter().enumerate() {
        for (ri, n) in noises.iter().enumerate() {
            jobs.push(Job {
                sweep_index: si,
                sweep_value: *value,
                run_index: ri,
                params: p,
                noise: *n,
            });
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::config("run.workers", e.to_string()))?;
    let results: Vec<Result<TrajectoryRecord>> =
        pool.install(|| jobs.par_iter().map(|j| j.run(cfg, root)).collect());

    let mut outcomes = Vec::with_capacity(jobs.len());
    let mut records = Vec::with_capacity(jobs.len());
    for (job, res) in jobs.iter().zip(results) {
        let noise = match job.noise {
            Noise::Seed(s) => format!("seed:{s}"),
            Noise::File(p) => format!("file:{}", file_label(p)),
        };
        let error = res.as_ref().err().map(|e| e.to_string());
        if let Some(e) = &error {
            log::error!("trajectory {} failed: {e}", job.dir());
        }
        outcomes.push(JobOutcome {
            sweep_index: job.sweep_index,
            sweep_value: job.sweep_value,
            run_index: job.run_index,
            noise,
            dir: job.dir(),
            ok: error.is_none(),
            error,
        });
        records.push(res.ok());
    }

    let mut ensembles = Vec::with_capacity(points.len());
    for si in 0..points.len() {
        let mean = EnsembleMean::from_records(
            jobs.iter()
                .zip(&records)
                .filter(|(j, _)| j.sweep_index == si)
                .filter_map(|(_, r)| r.as_ref()),
        );
        if mean.count > 0 {
            emit_ensemble_csv(&mean, &root.join(format!("ensemble_s{si}.csv")))?;
        }
        ensembles.push(mean);
    }

    let failures = outcomes.iter().filter(|o| !o.ok).count();
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: cfg.hash.clone(),
        sweep: cfg.sweep.clone(),
        seeds: cfg.seeds.clone(),
        noise_files: cfg.noise_files.iter().map(|p| file_label(p)).collect(),
        jobs: outcomes,
        failures,
    };
    let path = root.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(BatchSummary {
        manifest,
        records,
        ensembles,
    })
}

fn file_label(p: &Path) -> String {
    p.file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_config;

    fn config(dir: &Path, extra: &str) -> RunConfig {
        let mut c = parse_config(&format!(
            "physical.n_atoms = 6\nstep.t_end_us = 0.002\nstep.record_every = 5\n{extra}"
        ))
        .unwrap();
        c.output_dir = dir.to_path_buf();
        c
    }

    #[test]
    fn writes_layout_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let c = config(
            dir.path(),
            "run.seeds = [1, 2]\nsweep.parameter = \"eta\"\nsweep.values = [0.3, 0.9]\noutput.snapshot_times_us = [0.001]\n",
        );
        let s = run_batch(&c).unwrap();
        assert_eq!(s.manifest.jobs.len(), 4);
        assert_eq!(s.manifest.failures, 0);
        assert!(dir.path().join("s1_r1/trajectory.csv").exists());
        assert!(dir.path().join("s0_r0/snapshot_t0.001.csv").exists());
        assert!(dir.path().join("ensemble_s1.csv").exists());
        let m = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(m.contains(&c.hash));
        assert_eq!(s.ensembles[0].count, 2);
    }

    #[test]
    fn short_noise_file_fails_alone() {
        let dir = tempfile::tempdir().unwrap();
        let short = dir.path().join("short.txt");
        WienerPath::seeded(9, 3).write_file(&short).unwrap();
        let mut c = config(&dir.path().join("out"), "run.seeds = [4]\n");
        c.noise_files = vec![short];
        let s = run_batch(&c).unwrap();
        assert_eq!(s.manifest.failures, 1);
        assert!(!s.all_failed());
        assert!(s.manifest.jobs[1]
            .error
            .as_deref()
            .unwrap()
            .contains("exhausted"));
        assert!(s.records[0].is_some() && s.records[1].is_none());
    }
}
