use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig, SweepSpec};
use super::run::{mean, run_single, stderr, RunRecord};
use crate::envs::EnvKind;
use crate::error::{Error, Result};

/// One `(cell, run, checkpoint)` row of the raw results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRow {
    pub config_id: usize,
    pub algorithm: Algorithm,
    pub env: EnvKind,
    pub alpha_v_raw: f64,
    pub alpha_w_raw: f64,
    pub alpha_u_raw: f64,
    pub tau: f64,
    pub lambda: f64,
    pub run: usize,
    pub checkpoint: usize,
    pub mean_return: f64,
    pub stderr_return: f64,
    pub diverged: bool,
}

impl RawRow {
    pub fn from_record(cfg: &ExperimentConfig, rec: &RunRecord) -> Self {
        Self {
            config_id: cfg.config_id,
            algorithm: cfg.algorithm,
            env: cfg.env,
            alpha_v_raw: cfg.alpha_v,
            alpha_w_raw: cfg.alpha_w,
            alpha_u_raw: cfg.alpha_u,
            tau: cfg.tau,
            lambda: cfg.lambda,
            run: rec.run,
            checkpoint: rec.checkpoint,
            mean_return: rec.mean_return,
            stderr_return: rec.stderr_return(),
            diverged: rec.diverged,
        }
    }
}

/// Across-run statistics of one `(cell, checkpoint)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub config_id: usize,
    pub algorithm: Algorithm,
    pub env: EnvKind,
    pub alpha_v_raw: f64,
    pub alpha_w_raw: f64,
    pub alpha_u_raw: f64,
    pub tau: f64,
    pub lambda: f64,
    pub checkpoint: usize,
    pub mean_return: f64,
    pub stderr_return: f64,
    pub num_runs: usize,
    pub diverged_runs: usize,
}

pub fn aggregate(rows: &[RawRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(usize, usize), Vec<&RawRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.config_id, r.checkpoint)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|g| {
            let first = g[0];
            let returns: Vec<f64> = g.iter().map(|r| r.mean_return).collect();
            AggregateRow {
                config_id: first.config_id,
                algorithm: first.algorithm,
                env: first.env,
                alpha_v_raw: first.alpha_v_raw,
                alpha_w_raw: first.alpha_w_raw,
                alpha_u_raw: first.alpha_u_raw,
                tau: first.tau,
                lambda: first.lambda,
                checkpoint: first.checkpoint,
                mean_return: mean(&returns),
                stderr_return: stderr(&returns),
                num_runs: g.len(),
                diverged_runs: g.iter().filter(|r| r.diverged).count(),
            }
        })
        .collect()
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_raw_csv<R: Read>(reader: R) -> Result<Vec<RawRow>> {
    let rows = csv::Reader::from_reader(reader)
        .deserialize()
        .collect::<std::result::Result<Vec<RawRow>, _>>()?;
    Ok(rows)
}

pub fn read_raw_csv_file(path: &Path) -> Result<Vec<RawRow>> {
    read_raw_csv(std::fs::File::open(path)?)
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<RawRow>,
    /// `(config_id, run, error message)` for runs that could not execute.
    pub failures: Vec<(usize, usize, String)>,
}

/// Runs every `(cell, run)` pair of the grid on a pool of `parallelism`
/// threads. Rows come back in `(config_id, run, checkpoint)` order
/// regardless of scheduling. With `out_dir`, writes `raw.csv` and
/// `aggregate.csv` there.
pub fn run_sweep(spec: &SweepSpec, parallelism: usize, out_dir: Option<&Path>) -> Result<SweepOutcome> {
    spec.validate()?;
    run_cells(&spec.cells(), parallelism, out_dir)
}

/// [`run_sweep`] over an explicit list of cells.
pub fn run_cells(cells: &[ExperimentConfig], parallelism: usize, out_dir: Option<&Path>) -> Result<SweepOutcome> {
    if cells.is_empty() {
        return Err(Error::Empty("sweep grid"));
    }
    for c in cells {
        c.validate()?;
    }
    let tasks: Vec<(&ExperimentConfig, usize)> =
        cells.iter().flat_map(|c| (0..c.num_runs).map(move |r| (c, r))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<(usize, usize, Result<Vec<RawRow>>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(cfg, run)| {
                let rows = run_single(cfg, run).map(|recs| recs.iter().map(|r| RawRow::from_record(cfg, r)).collect());
                (cfg.config_id, run, rows)
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (config_id, run, res) in results {
        match res {
            Ok(r) => rows.extend(r),
            Err(e) => failures.push((config_id, run, e.to_string())),
        }
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        write_csv(&rows, std::fs::File::create(dir.join("raw.csv"))?)?;
        write_csv(&aggregate(&rows), std::fs::File::create(dir.join("aggregate.csv"))?)?;
    }
    Ok(SweepOutcome { rows, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(config_id: usize, run: usize, checkpoint: usize, mean_return: f64) -> RawRow {
        RawRow {
            config_id,
            algorithm: Algorithm::Offpac,
            env: EnvKind::GridWorld,
            alpha_v_raw: 0.1,
            alpha_w_raw: 0.0,
            alpha_u_raw: 0.01,
            tau: 0.0,
            lambda: 0.4,
            run,
            checkpoint,
            mean_return,
            stderr_return: 0.0,
            diverged: false,
        }
    }

    #[test]
    fn aggregate_means_over_runs() {
        let rows = vec![row(0, 0, 1, -10.0), row(0, 1, 1, -20.0), row(0, 0, 2, -5.0), row(0, 1, 2, -5.0)];
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].mean_return, -15.0);
        assert!((agg[0].stderr_return - 5.0).abs() < 1e-12);
        assert_eq!(agg[1].stderr_return, 0.0);
    }

    #[test]
    fn csv_round_trip_keeps_nan() {
        let mut rows = vec![row(3, 0, 1, -1.5)];
        rows.push(RawRow { mean_return: f64::NAN, diverged: true, ..row(3, 0, 2, 0.0) });
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "config_id,algorithm,env,alpha_v_raw,alpha_w_raw,alpha_u_raw,tau,lambda,run,checkpoint,mean_return,stderr_return,diverged\n"
        ));
        let back = read_raw_csv(&buf[..]).unwrap();
        assert_eq!(back[0], rows[0]);
        assert!(back[1].mean_return.is_nan() && back[1].diverged);
    }

    #[test]
    fn one_cell_sweep_equals_single_runs() {
        let base = ExperimentConfig {
            env: EnvKind::MountainCar,
            algorithm: Algorithm::Offpac,
            num_episodes: 2,
            num_runs: 2,
            eval_points: 1,
            eval_episodes: 1,
            max_steps: 200,
            ..Default::default()
        };
        let spec = SweepSpec {
            base: base.clone(),
            algorithms: vec![Algorithm::Offpac],
            alpha_v: vec![0.5],
            alpha_w: vec![0.0],
            alpha_u: vec![0.5],
            tau: vec![1.0],
            lambda: vec![0.0],
        };
        let out = run_sweep(&spec, 2, None).unwrap();
        assert!(out.failures.is_empty());
        let cell = &spec.cells()[0];
        let direct: Vec<RawRow> = (0..2)
            .flat_map(|r| run_single(cell, r).unwrap().into_iter().map(|rec| RawRow::from_record(cell, &rec)).collect::<Vec<_>>())
            .collect();
        assert_eq!(out.rows, direct);
    }
}
