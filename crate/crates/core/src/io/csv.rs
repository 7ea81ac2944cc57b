use std::path::Path;

use serde::Serialize;

use crate::dynamics::TrajectoryRecord;
use crate::error::{Error, Result};
use crate::observables::DistributionSnapshot;

const HEADER: [&str; 11] = [
    "t",
    "jx",
    "jy",
    "jz",
    "djx",
    "djy",
    "djz",
    "xi2z",
    "photocurrent",
    "trace_err",
    "herm_err",
];
const SNAPSHOT_HEADER: [&str; 4] = ["l", "weight1", "weightL", "weightL2"];
const ENSEMBLE_HEADER: [&str; 7] = ["t", "jx", "jy", "jz", "xi2z", "jz_sem", "count"];

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            msg: format!("{other:?}"),
        },
    }
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn snapshot_file_name(time: f64) -> String {
    format!("snapshot_t{time}.csv")
}

/// Write the trajectory series to `path` and each distribution snapshot to
/// `snapshot_t<time>.csv` next to it.
pub fn emit_csv(record: &TrajectoryRecord, path: &Path) -> Result<()> {
    write_rows(
        path,
        &HEADER,
        (0..record.len()).map(|k| record.row(k).map(num)),
    )?;
    let dir = path.parent().unwrap_or(Path::new("."));
    for snap in &record.snapshots {
        write_snapshot(snap, &dir.join(snapshot_file_name(snap.time)))?;
    }
    Ok(())
}

fn write_snapshot(snap: &DistributionSnapshot, path: &Path) -> Result<()> {
    write_rows(
        path,
        &SNAPSHOT_HEADER,
        (0..snap.len()).map(|l| {
            [
                l.to_string(),
                num(snap.weight1[l]),
                num(snap.weight_l[l]),
                num(snap.weight_l2[l]),
            ]
        }),
    )
}

/// Read back the series written by [`emit_csv`] (snapshots are not loaded).
pub fn read_csv(path: &Path) -> Result<TrajectoryRecord> {
    let bad = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        msg,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?;
    if header.iter().ne(HEADER) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rec = TrajectoryRecord::new(path.display().to_string(), 0);
    for (i, row) in r.records().enumerate() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let mut vals = [0.0; 11];
        for (v, field) in vals.iter_mut().zip(row.iter()) {
            *v = field
                .parse()
                .map_err(|e| bad(format!("row {}: `{field}`: {e}", i + 1)))?;
        }
        rec.push_row(vals);
    }
    Ok(rec)
}

/// Pointwise ensemble average over records sharing one time grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EnsembleMean {
    pub times: Vec<f64>,
    pub jx: Vec<f64>,
    pub jy: Vec<f64>,
    pub jz: Vec<f64>,
    pub xi2_z: Vec<f64>,
    /// Standard error of the `jz` mean.
    pub jz_sem: Vec<f64>,
    pub count: usize,
}

impl EnsembleMean {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a TrajectoryRecord>) -> Self {
        let recs: Vec<&TrajectoryRecord> = records.into_iter().collect();
        let Some(first) = recs.first() else {
            return Self::default();
        };
        let len = recs.iter().map(|r| r.len()).min().unwrap_or(0);
        let n = recs.len() as f64;
        let mean = |f: &dyn Fn(&TrajectoryRecord) -> &Vec<f64>, k: usize| {
            recs.iter().map(|r| f(r)[k]).sum::<f64>() / n
        };
        let mut out = Self {
            times: first.times[..len].to_vec(),
            count: recs.len(),
            ..Self::default()
        };
        for k in 0..len {
            out.jx.push(mean(&|r| &r.jx, k));
            out.jy.push(mean(&|r| &r.jy, k));
            let jz = mean(&|r| &r.jz, k);
            out.jz.push(jz);
            out.xi2_z.push(mean(&|r| &r.xi2_z, k));
            let sem = if recs.len() > 1 {
                let var = recs.iter().map(|r| (r.jz[k] - jz).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                f64::NAN
            };
            out.jz_sem.push(sem);
        }
        out
    }
}

pub fn emit_ensemble_csv(mean: &EnsembleMean, path: &Path) -> Result<()> {
    write_rows(
        path,
        &ENSEMBLE_HEADER,
        (0..mean.times.len()).map(|k| {
            [
                num(mean.times[k]),
                num(mean.jx[k]),
                num(mean.jy[k]),
                num(mean.jz[k]),
                num(mean.xi2_z[k]),
                num(mean.jz_sem[k]),
                mean.count.to_string(),
            ]
        }),
    )
}
