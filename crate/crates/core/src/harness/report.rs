use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::Algorithm;
use super::run::{mean, stderr};
use super::sweep::{write_csv, RawRow};
use crate::envs::EnvKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Mean over the last 10% of checkpoints.
    Final,
    /// Mean over all checkpoints.
    Overall,
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Final => "final",
            Criterion::Overall => "overall",
        }
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "final" => Ok(Criterion::Final),
            "overall" => Ok(Criterion::Overall),
            _ => Err(Error::Config(format!("unknown criterion '{s}' (final or overall)"))),
        }
    }
}

/// Score of one cell under a criterion, with its across-run standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct CellScore {
    pub config_id: usize,
    pub algorithm: Algorithm,
    pub env: EnvKind,
    pub alpha_v_raw: f64,
    pub alpha_w_raw: f64,
    pub alpha_u_raw: f64,
    pub tau: f64,
    pub lambda: f64,
    pub score: f64,
    pub stderr: f64,
    pub num_runs: usize,
}

/// Number of trailing checkpoints in the "final" window.
pub fn final_window(num_checkpoints: usize) -> usize {
    num_checkpoints.div_ceil(10).max(1)
}

fn run_score(mut run: Vec<(usize, f64)>, criterion: Criterion) -> f64 {
    run.sort_by_key(|&(c, _)| c);
    let values: Vec<f64> = run.into_iter().map(|(_, v)| v).collect();
    let window = match criterion {
        Criterion::Final => &values[values.len() - final_window(values.len())..],
        Criterion::Overall => &values[..],
    };
    mean(window)
}

/// Scores every cell in `rows` (ordered by config id).
pub fn score_cells(rows: &[RawRow], criterion: Criterion) -> Vec<CellScore> {
    let mut cells: BTreeMap<usize, BTreeMap<usize, Vec<(usize, f64)>>> = BTreeMap::new();
    let mut meta: BTreeMap<usize, &RawRow> = BTreeMap::new();
    for r in rows {
        cells.entry(r.config_id).or_default().entry(r.run).or_default().push((r.checkpoint, r.mean_return));
        meta.entry(r.config_id).or_insert(r);
    }
    cells
        .into_iter()
        .map(|(id, runs)| {
            let m = meta[&id];
            let per_run: Vec<f64> = runs.into_values().map(|run| run_score(run, criterion)).collect();
            CellScore {
                config_id: id,
                algorithm: m.algorithm,
                env: m.env,
                alpha_v_raw: m.alpha_v_raw,
                alpha_w_raw: m.alpha_w_raw,
                alpha_u_raw: m.alpha_u_raw,
                tau: m.tau,
                lambda: m.lambda,
                score: mean(&per_run),
                stderr: stderr(&per_run),
                num_runs: per_run.len(),
            }
        })
        .collect()
}

fn rank_key(score: f64) -> f64 {
    if score.is_nan() {
        f64::NEG_INFINITY
    } else {
        score
    }
}

/// Best cell by the given criterion; NaN scores (diverged before any
/// evaluation) rank below everything, ties go to the lowest id.
pub fn select_best(rows: &[RawRow], criterion: Criterion) -> Result<CellScore> {
    let mut best: Option<CellScore> = None;
    for c in score_cells(rows, criterion) {
        if best.as_ref().is_none_or(|b| rank_key(c.score) > rank_key(b.score)) {
            best = Some(c);
        }
    }
    best.ok_or(Error::Empty("results"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub criterion: Criterion,
    pub env: EnvKind,
    pub algorithm: Algorithm,
    pub config_id: usize,
    pub alpha_w: f64,
    /// `alpha_u` for the actor-critic, `tau` for softmax targets.
    pub alpha_u_or_tau: f64,
    pub alpha_v: f64,
    pub lambda: f64,
    pub reward: f64,
    pub stderr: f64,
    pub num_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub criterion: Criterion,
    pub env: EnvKind,
    pub algorithm: Algorithm,
    pub config_id: usize,
    pub checkpoint: usize,
    pub mean_return: f64,
    pub stderr_return: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: Vec<SummaryRow>,
    pub curves: Vec<CurveRow>,
}

/// Best cell per `(env, algorithm)` for both criteria, plus the learning
/// curve of every selected cell.
pub fn build_report(rows: &[RawRow]) -> Result<Report> {
    if rows.is_empty() {
        return Err(Error::Empty("results"));
    }
    let mut groups: BTreeMap<(EnvKind, Algorithm), Vec<RawRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.env, r.algorithm)).or_default().push(r.clone());
    }
    let mut summary = Vec::new();
    let mut curves = Vec::new();
    for criterion in [Criterion::Final, Criterion::Overall] {
        for ((env, algorithm), group) in &groups {
            let best = select_best(group, criterion)?;
            let alpha_u_or_tau = if algorithm.uses_tau() { best.tau } else { best.alpha_u_raw };
            summary.push(SummaryRow {
                criterion,
                env: *env,
                algorithm: *algorithm,
                config_id: best.config_id,
                alpha_w: best.alpha_w_raw,
                alpha_u_or_tau,
                alpha_v: best.alpha_v_raw,
                lambda: best.lambda,
                reward: best.score,
                stderr: best.stderr,
                num_runs: best.num_runs,
            });
            let mut by_checkpoint: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            for r in group.iter().filter(|r| r.config_id == best.config_id) {
                by_checkpoint.entry(r.checkpoint).or_default().push(r.mean_return);
            }
            for (checkpoint, values) in by_checkpoint {
                curves.push(CurveRow {
                    criterion,
                    env: *env,
                    algorithm: *algorithm,
                    config_id: best.config_id,
                    checkpoint,
                    mean_return: mean(&values),
                    stderr_return: stderr(&values),
                });
            }
        }
    }
    Ok(Report { summary, curves })
}

/// Writes `summary.csv` and `learning_curves.csv` into `out_dir`.
pub fn emit_report(rows: &[RawRow], out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let report = build_report(rows)?;
    std::fs::create_dir_all(out_dir)?;
    let summary = out_dir.join("summary.csv");
    let curves = out_dir.join("learning_curves.csv");
    write_csv(&report.summary, std::fs::File::create(&summary)?)?;
    write_csv(&report.curves, std::fs::File::create(&curves)?)?;
    Ok((summary, curves))
}

/// Plain-text rendering of the summary rows.
pub fn render_summary(summary: &[SummaryRow]) -> String {
    let mut out = format!(
        "{:<8} {:<13} {:<11} {:>9} {:>11} {:>9} {:>6} {:>22}\n",
        "crit", "env", "algorithm", "alpha_w", "alpha_u/tau", "alpha_v", "lambda", "reward"
    );
    for r in summary {
        out.push_str(&format!(
            "{:<8} {:<13} {:<11} {:>9} {:>11} {:>9} {:>6} {:>22}\n",
            r.criterion.name(),
            r.env.name(),
            r.algorithm.name(),
            r.alpha_w,
            r.alpha_u_or_tau,
            r.alpha_v,
            r.lambda,
            format!("{:.1} ± {:.1}", r.reward, r.stderr),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows_for(config_id: usize, returns: &[f64]) -> Vec<RawRow> {
        returns
            .iter()
            .enumerate()
            .map(|(k, &v)| RawRow {
                config_id,
                algorithm: Algorithm::Offpac,
                env: EnvKind::MountainCar,
                alpha_v_raw: 0.1 * config_id as f64,
                alpha_w_raw: 0.0,
                alpha_u_raw: 1.0,
                tau: 0.0,
                lambda: 0.0,
                run: 0,
                checkpoint: k + 1,
                mean_return: v,
                stderr_return: 0.0,
                diverged: false,
            })
            .collect()
    }

    #[test]
    fn final_window_is_ten_percent() {
        assert_eq!(final_window(20), 2);
        assert_eq!(final_window(10), 1);
        assert_eq!(final_window(3), 1);
        assert_eq!(final_window(25), 3);
    }

    #[test]
    fn single_cell_wins_both() {
        let rows = rows_for(4, &[-10.0, -5.0]);
        assert_eq!(select_best(&rows, Criterion::Final).unwrap().config_id, 4);
        assert_eq!(select_best(&rows, Criterion::Overall).unwrap().config_id, 4);
    }

    #[test]
    fn criteria_can_disagree() {
        // Cell 1: last 10% -100, overall -500. Cell 2: -200 and -300.
        let mut rows = rows_for(1, &[-900.0, -900.0, -900.0, -900.0, -900.0, -900.0, -900.0, -900.0, -100.0, -100.0]);
        rows.extend(rows_for(2, &[-311.1111111111111; 9].iter().copied().chain([-200.0]).collect::<Vec<_>>()));
        let f1 = score_cells(&rows, Criterion::Final);
        assert_eq!(f1[0].score, -100.0);
        assert!((f1[1].score + 200.0).abs() < 1e-9);
        let o = score_cells(&rows, Criterion::Overall);
        assert!((o[0].score + 740.0).abs() < 1e-9);
        assert!((o[1].score + 300.0).abs() < 1e-9);
        assert_eq!(select_best(&rows, Criterion::Final).unwrap().config_id, 1);
        assert_eq!(select_best(&rows, Criterion::Overall).unwrap().config_id, 2);
    }

    #[test]
    fn nan_ranks_last() {
        let mut rows = rows_for(0, &[f64::NAN, f64::NAN]);
        rows.extend(rows_for(1, &[-4000.0, -4000.0]));
        assert_eq!(select_best(&rows, Criterion::Final).unwrap().config_id, 1);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(select_best(&[], Criterion::Final).is_err());
        assert!(build_report(&[]).is_err());
    }

    #[test]
    fn zero_variance_gives_zero_stderr() {
        let mut rows = rows_for(0, &[-3.0, -3.0]);
        rows.extend(rows_for(0, &[-3.0, -3.0]).into_iter().map(|r| RawRow { run: 1, ..r }));
        let report = build_report(&rows).unwrap();
        assert!(report.summary.iter().all(|s| s.stderr == 0.0 && s.num_runs == 2));
        assert!(report.curves.iter().all(|c| c.stderr_return == 0.0));
    }

    #[test]
    fn report_is_byte_identical() {
        let mut rows = rows_for(0, &[-50.0, -40.0, -30.0]);
        rows.extend(rows_for(1, &[-60.0, -20.0, -25.0]));
        let dir = tempfile::tempdir().unwrap();
        let (s1, c1) = emit_report(&rows, dir.path()).unwrap();
        let (a, b) = (std::fs::read(&s1).unwrap(), std::fs::read(&c1).unwrap());
        emit_report(&rows, dir.path()).unwrap();
        assert_eq!(a, std::fs::read(&s1).unwrap());
        assert_eq!(b, std::fs::read(&c1).unwrap());
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("criterion,env,algorithm,config_id,alpha_w,alpha_u_or_tau,alpha_v,lambda,reward,stderr"));
    }
}
