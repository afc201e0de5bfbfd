use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Mode};
use super::peak::{detect_peak, Peak};
use super::svg::{line_plot, Series};
use crate::error::{Error, Result};
use crate::models::{build_dense, build_ff_model, total_x, Family, FfModel, FfVariant, ModelSpec, PauliSum};
use crate::susceptibility::{chi_f_exact_sum, prepare_chi_f, prepare_chi_f_ff, PipelineOptions, PreparedEstimate};

/// Column order of sweep CSV files.
pub const SWEEP_HEADER: &str = "lambda,seed,chi_f_exact,chi_f_hat,abs_err,queries_total,grover_applications,status";

/// One `(lambda, seed)` result. Empty optional fields are left blank in CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub seed: u64,
    pub chi_f_exact: Option<f64>,
    pub chi_f_hat: Option<f64>,
    pub abs_err: Option<f64>,
    pub queries_total: Option<u64>,
    pub grover_applications: Option<u64>,
    /// `ok`, or the error code of a failed point.
    pub status: String,
}

impl SweepRow {
    fn failed(lambda: f64, seed: u64, e: &Error) -> Self {
        Self {
            lambda,
            seed,
            chi_f_exact: None,
            chi_f_hat: None,
            abs_err: None,
            queries_total: None,
            grover_applications: None,
            status: e.code().to_string(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Frustration-free form of a model: the projector chain at `lambda = 0`.
pub fn ff_model_for(spec: &ModelSpec) -> Result<(FfModel, PauliSum)> {
    if spec.family != Family::FfProjectorChain || spec.lambda != 0.0 {
        return Err(Error::NotFrustrationFree);
    }
    let model = build_ff_model(spec.n_qubits, FfVariant::Chain)?;
    let driving = spec.driving.clone().unwrap_or_else(|| total_x(spec.n_qubits));
    Ok((model, driving))
}

/// The quantum pipeline a sweep runs at one model point: general, or the
/// frustration-free one in `ff` mode.
pub fn prepare_point(cfg: &ExperimentConfig, spec: &ModelSpec) -> Result<PreparedEstimate> {
    let opts = PipelineOptions { skip_finite_difference: true, ..PipelineOptions::default() };
    match cfg.mode {
        Mode::Ff => {
            let (model, driving) = ff_model_for(spec)?;
            prepare_chi_f_ff(&model, &driving, cfg.eps, &opts)
        }
        _ => prepare_chi_f(spec, cfg.eps, &opts),
    }
}

fn point(cfg: &ExperimentConfig, lambda: f64) -> Vec<SweepRow> {
    let spec = cfg.model.with_lambda(lambda);
    let fail = |e: Error| cfg.seeds.iter().map(|&s| SweepRow::failed(lambda, s, &e)).collect();
    if cfg.mode == Mode::ExactOnly {
        let exact = match build_dense(&spec).and_then(|(h, hi)| chi_f_exact_sum(&h, &hi)) {
            Ok(v) => v,
            Err(e) => return fail(e),
        };
        return cfg
            .seeds
            .iter()
            .map(|&seed| SweepRow {
                lambda,
                seed,
                chi_f_exact: Some(exact),
                chi_f_hat: None,
                abs_err: None,
                queries_total: None,
                grover_applications: None,
                status: "ok".into(),
            })
            .collect();
    }
    let prepared = match prepare_point(cfg, &spec) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    cfg.seeds
        .iter()
        .map(|&seed| match prepared.run_with(cfg.n_runs, seed) {
            Ok(r) => {
                let exact = match cfg.mode {
                    Mode::Quantum => None,
                    _ => r.oracle("sum_over_states"),
                };
                SweepRow {
                    lambda,
                    seed,
                    chi_f_exact: exact,
                    chi_f_hat: Some(r.chi_f_hat),
                    abs_err: exact.map(|x| (r.chi_f_hat - x).abs()),
                    queries_total: Some(r.total_queries()),
                    grover_applications: Some(r.grover_applications),
                    status: "ok".into(),
                }
            }
            Err(e) => SweepRow::failed(lambda, seed, &e),
        })
        .collect()
}

/// Rows in grid order, one per `(lambda, seed)`. Failed points become rows
/// with an error status and the sweep continues.
pub fn sweep_rows(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let lambdas = cfg.lambdas()?;
    let rows: Vec<Vec<SweepRow>> = lambdas.par_iter().map(|&l| point(cfg, l)).collect();
    Ok(rows.into_iter().flatten().collect())
}

fn opt_f(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn opt_u(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `# generated <unix seconds>` unless `deterministic`.
pub fn timestamp_line(deterministic: bool) -> String {
    if deterministic {
        return String::new();
    }
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# generated {secs}\n")
}

pub fn rows_to_csv(rows: &[SweepRow], deterministic: bool) -> String {
    let mut out = timestamp_line(deterministic);
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{:.16e},{},{},{},{},{},{},{}",
            r.lambda,
            r.seed,
            opt_f(r.chi_f_exact),
            opt_f(r.chi_f_hat),
            opt_f(r.abs_err),
            opt_u(r.queries_total),
            opt_u(r.grover_applications),
            r.status
        );
    }
    out
}

pub fn rows_from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Validation(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != SWEEP_HEADER {
        return Err(Error::Validation(format!("unexpected sweep header `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    rdr.deserialize().map(|r| r.map_err(|e| Error::Validation(e.to_string()))).collect()
}

/// `(lambda, value)` per grid point: the exact column when present,
/// otherwise the mean estimate over seeds.
pub fn curve(rows: &[SweepRow]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, usize)> = Vec::new();
    for r in rows.iter().filter(|r| r.is_ok()) {
        let v = match r.chi_f_exact.or(r.chi_f_hat) {
            Some(v) => v,
            None => continue,
        };
        match out.last_mut() {
            Some(last) if last.0 == r.lambda => {
                if r.chi_f_exact.is_none() {
                    last.1 += v;
                    last.2 += 1;
                }
            }
            _ => out.push((r.lambda, v, 1)),
        }
    }
    out.into_iter().map(|(l, s, n)| (l, s / n as f64)).collect()
}

pub fn sweep_svg(rows: &[SweepRow]) -> String {
    let mut exact: Vec<(f64, f64)> = Vec::new();
    let mut est: Vec<(f64, f64, usize)> = Vec::new();
    for r in rows.iter().filter(|r| r.is_ok()) {
        if let Some(v) = r.chi_f_exact {
            if exact.last().map(|p| p.0) != Some(r.lambda) {
                exact.push((r.lambda, v));
            }
        }
        if let Some(v) = r.chi_f_hat {
            match est.last_mut() {
                Some(last) if last.0 == r.lambda => {
                    last.1 += v;
                    last.2 += 1;
                }
                _ => est.push((r.lambda, v, 1)),
            }
        }
    }
    let mut series = Vec::new();
    if !exact.is_empty() {
        series.push(Series { label: "exact".into(), points: exact });
    }
    if !est.is_empty() {
        let points = est.into_iter().map(|(l, s, n)| (l, s / n as f64)).collect();
        series.push(Series { label: "estimate (seed mean)".into(), points });
    }
    line_plot("fidelity susceptibility", "lambda", "chi_F", &series)
}

/// Files written by [`run_sweep`].
#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub csv: PathBuf,
    pub svg: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub peak: Option<Peak>,
}

/// Runs the sweep and writes the configured outputs into `out_dir`.
pub fn run_sweep(cfg: &ExperimentConfig, out_dir: &Path, deterministic: bool) -> Result<SweepOutcome> {
    let rows = sweep_rows(cfg)?;
    std::fs::create_dir_all(out_dir)?;
    let csv = out_dir.join(&cfg.outputs.csv);
    std::fs::write(&csv, rows_to_csv(&rows, deterministic))?;
    let svg = match &cfg.outputs.svg {
        Some(name) => {
            let p = out_dir.join(name);
            std::fs::write(&p, sweep_svg(&rows))?;
            Some(p)
        }
        None => None,
    };
    let json = match &cfg.outputs.json {
        Some(name) => {
            let p = out_dir.join(name);
            std::fs::write(&p, serde_json::to_string_pretty(&rows).expect("rows serialize"))?;
            Some(p)
        }
        None => None,
    };
    let peak = detect_peak(&curve(&rows)).ok();
    Ok(SweepOutcome { rows, csv, svg, json, peak })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::Grid;

    fn tfim_cfg(n: usize, mode: Mode, grid: Vec<f64>) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(ModelSpec::tfim(n, 1.0));
        cfg.mode = mode;
        cfg.grid = Some(Grid::from_values(grid));
        cfg
    }

    #[test]
    fn single_point_grid_gives_one_row() {
        let rows = sweep_rows(&tfim_cfg(3, Mode::ExactOnly, vec![0.9])).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].chi_f_exact.unwrap() > 0.0);
    }

    #[test]
    fn degenerate_points_become_error_rows() {
        let mut cfg = tfim_cfg(3, Mode::ExactOnly, vec![0.0, 0.5]);
        cfg.seeds = vec![4, 5];
        let rows = sweep_rows(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].status, "degenerate");
        assert_eq!(rows[1].seed, 5);
        assert!(rows[2].is_ok() && rows[3].is_ok());
    }

    #[test]
    fn csv_roundtrip_and_determinism() {
        let mut cfg = tfim_cfg(2, Mode::Both, vec![0.6, 1.0, 1.4]);
        cfg.seeds = vec![0, 1];
        let rows = sweep_rows(&cfg).unwrap();
        let text = rows_to_csv(&rows, true);
        assert_eq!(text, rows_to_csv(&sweep_rows(&cfg).unwrap(), true));
        assert!(text.starts_with(SWEEP_HEADER));
        let back = rows_from_csv(&text).unwrap();
        assert_eq!(back, rows);
        for r in &rows {
            assert_eq!(r.abs_err.unwrap(), (r.chi_f_hat.unwrap() - r.chi_f_exact.unwrap()).abs());
        }
        let stamped = rows_to_csv(&rows, false);
        assert!(stamped.starts_with("# generated "));
        assert_eq!(rows_from_csv(&stamped).unwrap(), rows);
    }

    #[test]
    fn quantum_mode_has_no_exact_column() {
        let rows = sweep_rows(&tfim_cfg(2, Mode::Quantum, vec![1.0])).unwrap();
        assert!(rows[0].chi_f_exact.is_none() && rows[0].abs_err.is_none());
        assert!(rows[0].chi_f_hat.is_some() && rows[0].queries_total.unwrap() > 0);
    }

    #[test]
    fn ff_mode() {
        let mut cfg = ExperimentConfig::new(ModelSpec::new(Family::FfProjectorChain, 2, 0.0));
        cfg.mode = Mode::Ff;
        cfg.grid = Some(Grid::from_values(vec![0.0, 0.3]));
        let rows = sweep_rows(&cfg).unwrap();
        assert!(rows[0].is_ok());
        assert!(rows[0].abs_err.unwrap() <= cfg.eps);
        assert_eq!(rows[1].status, "not_frustration_free");
    }

    #[test]
    fn run_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tfim_cfg(4, Mode::ExactOnly, vec![]);
        cfg.grid = Some(Grid::range(0.2, 1.6, 0.1));
        cfg.outputs.svg = Some("plot.svg".into());
        cfg.outputs.json = Some("rows.json".into());
        let out = run_sweep(&cfg, dir.path(), true).unwrap();
        assert_eq!(out.rows.len(), 15);
        let svg = std::fs::read_to_string(out.svg.unwrap()).unwrap();
        roxmltree::Document::parse(&svg).unwrap();
        let again = run_sweep(&cfg, dir.path(), true).unwrap();
        assert_eq!(std::fs::read_to_string(&again.csv).unwrap(), rows_to_csv(&out.rows, true));
        assert_eq!(std::fs::read_to_string(again.svg.unwrap()).unwrap(), svg);
        assert!(!out.peak.unwrap().at_boundary);
    }
}
