//! `fidsus`: sweeps, scaling studies and single estimates from a TOML config.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fidsus_core::experiments::{
    encoding_checks, ff_encoding_checks, prepare_point, run_scaling_study, run_sweep, sweep::ff_model_for,
    EncodingCheck, ExperimentConfig, Mode, ScalingKind, ScalingSpec,
};
use fidsus_core::models::build_dense;
use fidsus_core::polynomial::{check_polynomial, fit_ff_inverse, fit_inverse, fit_sqrt_inverse, ff_normalization, FitOptions};
use fidsus_core::susceptibility::oracle_values;
use fidsus_core::{Error, Result};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "fidsus", version, about = "Fidelity susceptibility estimation experiments")]
struct Cli {
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "FIDSUS_OUT_DIR", default_value = "fidsus-out")]
    out: PathBuf,
    /// Replace the configured seeds with this one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Omit the timestamp line from CSV output.
    #[arg(long, global = true)]
    deterministic: bool,
    /// exact_only, quantum, both or ff.
    #[arg(long, global = true)]
    mode: Option<String>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate every grid point and write CSV (plus SVG/JSON if configured).
    Sweep,
    /// Run a scaling study and write its rows and fitted slopes.
    Scaling {
        /// heisenberg, gap_general, gap_ff or ff_vs_general; overrides `[scaling] kind`.
        #[arg(long)]
        kind: Option<String>,
    },
    /// Estimate at one model point and print the report as JSON.
    Estimate {
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Fit an inverse polynomial and check its bound, parity and accuracy.
    PolyCheck {
        #[arg(long, value_enum)]
        kind: PolyKind,
        /// Lower edge of the domain for inverse and sqrt.
        #[arg(long)]
        delta: Option<f64>,
        /// Spectral gap for the frustration-free inverse.
        #[arg(long, default_value_t = 1.0)]
        gap: f64,
        /// Padded projector count for the frustration-free inverse.
        #[arg(long, default_value_t = 4)]
        r: usize,
    },
    /// Compare every block encoding built for the model with its dense target.
    VerifyEncodings {
        #[arg(long)]
        lambda: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolyKind {
    Inverse,
    Ff,
    Sqrt,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seeds = vec![s];
    }
    if let Some(m) = &cli.mode {
        cfg.mode = m.parse()?;
    }
    if let Some(e) = cli.eps {
        cfg.eps = e;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("values serialize") + "\n"
}

fn sweep(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    let out = run_sweep(&cfg, &cli.out, cli.deterministic)?;
    for p in [Some(&out.csv), out.svg.as_ref(), out.json.as_ref()].into_iter().flatten() {
        eprintln!("wrote {}", p.display());
    }
    let failed = out.rows.iter().filter(|r| !r.is_ok()).count();
    println!("{} rows, {failed} failed", out.rows.len());
    match out.peak {
        Some(p) if p.at_boundary => println!("peak at grid boundary, lambda = {:.6}", p.lambda_c),
        Some(p) => println!("peak lambda_c = {:.6}, chi_F = {:.6e}, curvature = {:.6e}", p.lambda_c, p.value, p.curvature),
        None => println!("no peak (fewer than 5 successful points)"),
    }
    Ok(true)
}

fn scaling(cli: &Cli, kind: Option<&str>) -> Result<bool> {
    let cfg = load_config(cli)?;
    let spec = match (kind, &cfg.scaling) {
        (Some(k), Some(s)) => ScalingSpec { kind: k.parse()?, ..s.clone() },
        (Some(k), None) => ScalingSpec::new(k.parse()?),
        (None, Some(s)) => s.clone(),
        (None, None) => return Err(Error::Config("no scaling study given (use --kind or a [scaling] table)".into())),
    };
    let res = run_scaling_study(&spec, &cfg)?;
    let name = kind_name(spec.kind);
    write(&cli.out.join(format!("scaling_{name}.csv")), &res.to_csv(cli.deterministic))?;
    write(&cli.out.join(format!("scaling_{name}.json")), &pretty(&res))?;
    for (series, fit) in &res.fits {
        println!("{series}: slope {:.4}", fit.slope);
    }
    Ok(true)
}

fn kind_name(k: ScalingKind) -> String {
    serde_json::to_value(k).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

fn estimate(cli: &Cli, lambda: Option<f64>) -> Result<bool> {
    let cfg = load_config(cli)?;
    let spec = cfg.model.with_lambda(lambda.unwrap_or(cfg.model.lambda));
    let seed = cfg.seeds[0];
    let text = if cfg.mode == Mode::ExactOnly {
        let (h, h_i) = build_dense(&spec)?;
        pretty(&json!({ "lambda": spec.lambda, "oracle_values": oracle_values(&h, &h_i, true)? }))
    } else {
        let report = prepare_point(&cfg, &spec)?.run_with(cfg.n_runs, seed)?;
        pretty(&report)
    };
    write(&cli.out.join("estimate.json"), &text)?;
    print!("{text}");
    Ok(true)
}

fn poly_check(cli: &Cli, kind: PolyKind, delta: Option<f64>, gap: f64, r: usize) -> Result<bool> {
    let eps = cli.eps.unwrap_or(1e-3);
    let fit = FitOptions::default();
    let need_delta = || delta.ok_or_else(|| Error::Config("--delta is required for this kind".into()));
    let p = match kind {
        PolyKind::Inverse => fit_inverse(need_delta()?, eps, &fit)?,
        PolyKind::Sqrt => fit_sqrt_inverse(need_delta()?, eps, &fit)?,
        PolyKind::Ff => fit_ff_inverse(r, gap, eps * ff_normalization(gap), &fit)?,
    };
    let c = check_polynomial(&p)?;
    let tol = if matches!(kind, PolyKind::Ff) { eps * ff_normalization(gap) } else { eps };
    let ok = c.bounded && c.parity_defect <= 1e-12 && c.sup_error.is_some_and(|e| e <= tol);
    print!("{}", pretty(&json!({ "eps": tol, "check": c, "passed": ok })));
    Ok(ok)
}

fn verify_encodings(cli: &Cli, lambda: Option<f64>) -> Result<bool> {
    let cfg = load_config(cli)?;
    let spec = cfg.model.with_lambda(lambda.unwrap_or(cfg.model.lambda));
    let checks: Vec<EncodingCheck> = if cfg.mode == Mode::Ff {
        let (model, _) = ff_model_for(&spec)?;
        ff_encoding_checks(&model, cfg.eps)?
    } else {
        encoding_checks(&spec, cfg.eps)?
    };
    println!("{:<32} {:>12} {:>4} {:>12} {:>12}  status", "encoding", "alpha", "anc", "declared", "error");
    for c in &checks {
        println!(
            "{:<32} {:>12.5e} {:>4} {:>12.3e} {:>12.3e}  {}",
            c.name,
            c.alpha,
            c.ancillas,
            c.declared_eps,
            c.error,
            if c.passed { "ok" } else { "FAIL" }
        );
    }
    write(&cli.out.join("verify.json"), &pretty(&checks))?;
    Ok(checks.iter().all(|c| c.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Sweep => sweep(&cli),
        Command::Scaling { kind } => scaling(&cli, kind.as_deref()),
        Command::Estimate { lambda } => estimate(&cli, *lambda),
        Command::PolyCheck { kind, delta, gap, r } => poly_check(&cli, *kind, *delta, *gap, *r),
        Command::VerifyEncodings { lambda } => verify_encodings(&cli, *lambda),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
