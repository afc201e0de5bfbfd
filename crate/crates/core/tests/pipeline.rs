use fidsus_core::experiments::{rows_from_csv, rows_to_csv, run_sweep, ExperimentConfig, SweepRow};
use fidsus_core::models::{build_dense, pauli_to_dense, total_z, Family, ModelSpec};
use fidsus_core::susceptibility::{
    estimate_chi_f, static_susceptibility_estimate, static_susceptibility_exact, EstimationReport,
};
use proptest::prelude::*;

#[test]
fn tfim_estimates_land_within_eps() {
    let eps = 0.05;
    for l in [0.7, 1.1] {
        let spec = ModelSpec::tfim(3, l);
        let hits = (0..12)
            .filter(|&s| {
                let r = estimate_chi_f(&spec, eps, s).unwrap();
                (r.chi_f_hat - r.oracle("sum_over_states").unwrap()).abs() <= eps
            })
            .count();
        assert!(hits >= 10, "lambda {l}: {hits}/12");
    }
}

#[test]
fn report_json_roundtrip() {
    let r = estimate_chi_f(&ModelSpec::new(Family::Xxz, 2, 0.5), 0.1, 4).unwrap();
    let text = serde_json::to_string(&r).unwrap();
    let back: EstimationReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
    for key in ["sum_over_states", "resolvent", "finite_difference"] {
        assert!(back.oracle(key).is_some(), "{key}");
    }
}

#[test]
fn static_estimate() {
    let spec = ModelSpec::tfim(2, 0.9);
    let (h, _) = build_dense(&spec).unwrap();
    let o = pauli_to_dense(&total_z(2)).unwrap();
    let exact = static_susceptibility_exact(&h, &o).unwrap();
    let eps = 0.05;
    let hits = (0..10)
        .filter(|&s| (static_susceptibility_estimate(&spec, &o, eps, s).unwrap().chi_f_hat - exact).abs() <= eps)
        .count();
    assert!(hits >= 8, "{hits}/10");
}

#[test]
fn sweep_files() {
    let cfg = ExperimentConfig::from_toml(
        r#"
seeds = [0, 1]
mode = "both"
eps = 0.1

[model]
family = "tfim"
n_qubits = 2

[grid]
values = [0.5, 0.75, 1.0, 1.25, 1.5]

[outputs]
csv = "s.csv"
svg = "s.svg"
json = "s.json"
"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = run_sweep(&cfg, dir.path(), true).unwrap();
    let csv = std::fs::read_to_string(&out.csv).unwrap();
    assert_eq!(rows_from_csv(&csv).unwrap(), out.rows);
    let json: Vec<SweepRow> = serde_json::from_str(&std::fs::read_to_string(out.json.unwrap()).unwrap()).unwrap();
    assert_eq!(json, out.rows);
    let svg = std::fs::read_to_string(out.svg.unwrap()).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert_eq!(out.rows.len(), 10);
}

fn opt_f() -> impl Strategy<Value = Option<f64>> {
    proptest::option::of(-1e6f64..1e6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_rows_roundtrip(
        rows in proptest::collection::vec(
            (-5.0f64..5.0, any::<u64>(), opt_f(), opt_f(), proptest::option::of(any::<u64>()), any::<bool>()),
            1..20,
        )
    ) {
        let rows: Vec<SweepRow> = rows
            .into_iter()
            .map(|(lambda, seed, exact, hat, q, ok)| SweepRow {
                lambda,
                seed,
                chi_f_exact: exact,
                chi_f_hat: hat,
                abs_err: exact.zip(hat).map(|(a, b)| (a - b).abs()),
                queries_total: q,
                grover_applications: q.map(|x| x / 2),
                status: if ok { "ok".into() } else { "degenerate".into() },
            })
            .collect();
        prop_assert_eq!(rows_from_csv(&rows_to_csv(&rows, true)).unwrap(), rows);
    }
}
