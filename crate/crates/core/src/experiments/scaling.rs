use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ScalingKind, ScalingSpec};
use super::stats::loglog_slope;
use super::sweep::timestamp_line;
use crate::block_encoding::encode_matrix;
use crate::error::{Error, Result};
use crate::operator::DenseOperator;
use crate::polynomial::{fit_ff_inverse, fit_inverse, FitOptions};
use crate::qsvt::{pseudoinverse_encoding_with, QsvtOptions};
use crate::susceptibility::{prepare_chi_f, PipelineOptions};

pub const SCALING_HEADER: &str = "series,x,y";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub series: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub kind: ScalingKind,
    pub x_label: String,
    pub y_label: String,
    pub rows: Vec<ScalingRow>,
    pub fits: BTreeMap<String, Fit>,
}

impl ScalingResult {
    pub fn slope(&self, series: &str) -> Option<f64> {
        self.fits.get(series).map(|f| f.slope)
    }

    pub fn series(&self, name: &str) -> Vec<(f64, f64)> {
        self.rows.iter().filter(|r| r.series == name).map(|r| (r.x, r.y)).collect()
    }

    pub fn to_csv(&self, deterministic: bool) -> String {
        let mut out = timestamp_line(deterministic);
        let _ = writeln!(out, "# x = {}, y = {}", self.x_label, self.y_label);
        out.push_str(SCALING_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{:.16e},{:.16e}", r.series, r.x, r.y);
        }
        for (name, f) in &self.fits {
            let _ = writeln!(out, "# fit series={name} slope={:.16e} intercept={:.16e}", f.slope, f.intercept);
        }
        out
    }
}

fn need_three<T>(v: &[T], what: &str) -> Result<()> {
    if v.len() < 3 {
        return Err(Error::InsufficientData(format!("{what} needs at least 3 values, got {}", v.len())));
    }
    Ok(())
}

fn finish(
    kind: ScalingKind,
    x_label: &str,
    y_label: &str,
    rows: Vec<ScalingRow>,
) -> Result<ScalingResult> {
    let mut names: Vec<String> = rows.iter().map(|r| r.series.clone()).collect();
    names.dedup();
    let mut fits = BTreeMap::new();
    for name in names {
        let (xs, ys): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.series == name).map(|r| (r.x, r.y)).unzip();
        let (slope, intercept) = loglog_slope(&xs, &ys)?;
        fits.insert(name, Fit { slope, intercept });
    }
    Ok(ScalingResult { kind, x_label: x_label.into(), y_label: y_label.into(), rows, fits })
}

/// Synthetic Hamiltonian `diag(0, gap, 1, 1)` with `||H|| = 1`.
fn synthetic(gap: f64) -> Result<DenseOperator> {
    DenseOperator::from_real_diagonal(&[0.0, gap, 1.0, 1.0])
}

/// Runs one scaling study.
///
/// * `heisenberg`: Grover applications and oracle queries of the general
///   pipeline on `cfg.model` against `1/eps`.
/// * `gap_general`: pseudoinverse degree on `diag(0, gap, 1, 1)` against
///   `1/gap`, at polynomial accuracy `cfg.eps`.
/// * `gap_ff`: frustration-free inverse degree against `1/gap` at `r = 4`
///   (or the first configured `r`), at polynomial accuracy `cfg.eps`.
/// * `ff_vs_general`: both inverse degrees on the projector chain with `r`
///   sites (gap 1, `||H_F|| = r`) against `r`, at encoding error `cfg.eps`.
pub fn run_scaling_study(spec: &ScalingSpec, cfg: &ExperimentConfig) -> Result<ScalingResult> {
    let eps = cfg.eps;
    let fit = FitOptions::default();
    match spec.kind {
        ScalingKind::Heisenberg => {
            let epss = spec.eps_values.clone().unwrap_or_else(|| vec![0.1, 0.05, 0.025, 0.0125]);
            need_three(&epss, "heisenberg")?;
            let opts = PipelineOptions { skip_finite_difference: true, ..PipelineOptions::default() };
            let per: Vec<Result<(f64, f64, f64)>> = epss
                .par_iter()
                .map(|&e| {
                    let p = prepare_chi_f(&cfg.model, e, &opts)?;
                    let seed = cfg.seeds.first().copied().unwrap_or(0);
                    let r = p.run_with(cfg.n_runs, seed)?;
                    Ok((1.0 / e, r.grover_applications as f64, r.total_queries() as f64))
                })
                .collect();
            let mut rows = Vec::new();
            let mut oracle = Vec::new();
            for item in per {
                let (x, g, q) = item?;
                rows.push(ScalingRow { series: "grover".into(), x, y: g });
                oracle.push(ScalingRow { series: "oracle_queries".into(), x, y: q });
            }
            rows.extend(oracle);
            finish(spec.kind, "1/eps", "queries", rows)
        }
        ScalingKind::GapGeneral => {
            let gaps = spec.gaps.clone().unwrap_or_else(|| vec![0.5, 0.25, 0.125, 0.0625]);
            need_three(&gaps, "gap_general")?;
            let opts = QsvtOptions::default();
            let per: Vec<Result<ScalingRow>> = gaps
                .par_iter()
                .map(|&gap| {
                    let u_h = encode_matrix(&synthetic(gap)?, 1.0)?;
                    // Encoding error eps * alpha' keeps the polynomial accuracy at eps.
                    let alpha = 4.0 / (3.0 * gap);
                    let enc = pseudoinverse_encoding_with(&u_h, gap, eps * alpha, &opts)?;
                    Ok(ScalingRow { series: "inverse_degree".into(), x: 1.0 / gap, y: enc.poly.degree() as f64 })
                })
                .collect();
            let rows = per.into_iter().collect::<Result<Vec<_>>>()?;
            finish(spec.kind, "1/gap", "polynomial degree", rows)
        }
        ScalingKind::GapFf => {
            let gaps = spec.gaps.clone().unwrap_or_else(|| vec![0.5, 0.25, 0.125, 0.0625]);
            need_three(&gaps, "gap_ff")?;
            let r = spec.r_values.as_ref().and_then(|v| v.first().copied()).unwrap_or(4);
            let per: Vec<Result<ScalingRow>> = gaps
                .par_iter()
                .map(|&gap| {
                    let k = crate::polynomial::ff_normalization(gap);
                    let p = fit_ff_inverse(r, gap, eps * k, &fit)?;
                    Ok(ScalingRow { series: "ff_degree".into(), x: 1.0 / gap, y: p.degree() as f64 })
                })
                .collect();
            let rows = per.into_iter().collect::<Result<Vec<_>>>()?;
            finish(spec.kind, "1/gap", "polynomial degree", rows)
        }
        ScalingKind::FfVsGeneral => {
            let rs = spec.r_values.clone().unwrap_or_else(|| vec![2, 4, 8, 16]);
            need_three(&rs, "ff_vs_general")?;
            let per: Vec<Result<(ScalingRow, ScalingRow)>> = rs
                .par_iter()
                .map(|&r| {
                    let r_pad = r.next_power_of_two();
                    let ff = fit_ff_inverse(r_pad, 1.0, eps, &fit)?;
                    // General inversion: delta = gap / ||H_F|| = 1 / r, tolerance eps / alpha'.
                    let general = fit_inverse(1.0 / r as f64, eps * 0.75, &fit)?;
                    Ok((
                        ScalingRow { series: "ff".into(), x: r as f64, y: ff.degree() as f64 },
                        ScalingRow { series: "general".into(), x: r as f64, y: general.degree() as f64 },
                    ))
                })
                .collect();
            let mut ff = Vec::new();
            let mut general = Vec::new();
            for item in per {
                let (a, b) = item?;
                ff.push(a);
                general.push(b);
            }
            ff.extend(general);
            finish(spec.kind, "r", "polynomial degree", ff)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;

    #[test]
    fn too_few_points() {
        let cfg = ExperimentConfig::new(ModelSpec::tfim(2, 1.0));
        let spec = ScalingSpec { gaps: Some(vec![0.5, 0.25]), ..ScalingSpec::new(ScalingKind::GapGeneral) };
        assert!(matches!(run_scaling_study(&spec, &cfg), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn heisenberg_slope() {
        let cfg = ExperimentConfig::new(ModelSpec::tfim(2, 1.0));
        let res = run_scaling_study(&ScalingSpec::new(ScalingKind::Heisenberg), &cfg).unwrap();
        let s = res.slope("grover").unwrap();
        assert!((s - 1.0).abs() <= 0.1, "slope {s}");
        let csv = res.to_csv(true);
        assert!(csv.contains("# fit series=grover slope="));
        assert_eq!(csv.lines().filter(|l| l.starts_with("grover,")).count(), 4);
    }

    #[test]
    fn gap_studies() {
        let mut cfg = ExperimentConfig::new(ModelSpec::tfim(2, 1.0));
        cfg.eps = 1e-3;
        let general = run_scaling_study(&ScalingSpec::new(ScalingKind::GapGeneral), &cfg).unwrap();
        let s = general.slope("inverse_degree").unwrap();
        assert!((s - 1.0).abs() <= 0.15, "general slope {s}");
        let ff = run_scaling_study(&ScalingSpec::new(ScalingKind::GapFf), &cfg).unwrap();
        let s = ff.slope("ff_degree").unwrap();
        assert!((s - 0.5).abs() <= 0.15, "ff slope {s}");
    }

    #[test]
    fn ff_versus_general() {
        let mut cfg = ExperimentConfig::new(ModelSpec::tfim(2, 1.0));
        cfg.eps = 1e-3;
        let res = run_scaling_study(&ScalingSpec::new(ScalingKind::FfVsGeneral), &cfg).unwrap();
        let ff = res.slope("ff").unwrap();
        let general = res.slope("general").unwrap();
        assert!((ff - 0.5).abs() <= 0.15, "ff slope {ff}");
        assert!((general - 1.0).abs() <= 0.15, "general slope {general}");
    }
}
