use mnr::sim::{self, ExperimentConfig, ExperimentId};

fn small(id: ExperimentId, grid: Vec<usize>, replicates: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::scaled(id);
    cfg.n_grid = grid;
    cfg.replicates = replicates;
    cfg.master_seed = 21;
    cfg
}

#[test]
fn single_replicate_is_byte_identical() {
    let cfg = small(ExperimentId::Fig3, vec![150], 1);
    let a = sim::run(&cfg).unwrap();
    let b = sim::run(&cfg).unwrap();
    assert_eq!(a.to_csv_string(), b.to_csv_string());
    assert_eq!(a.provenance, b.provenance);
    let mut other = cfg.clone();
    other.master_seed = 22;
    assert_ne!(sim::run(&other).unwrap().to_csv_string(), a.to_csv_string());
}

#[test]
fn noiseless_fig3_matches_true_regressors() {
    let mut cfg = small(ExperimentId::Fig3, vec![200], 3);
    cfg.noiseless = true;
    let t = sim::run(&cfg).unwrap();
    let gap = (t.value_at(200, "mse_sub").unwrap() - t.value_at(200, "mse_true").unwrap()).abs();
    assert!(gap < 1e-8, "gap {gap}");
}

#[test]
fn tiny_lambda_skips_are_counted() {
    let mut cfg = small(ExperimentId::Fig4, vec![100, 150], 3);
    cfg.lambda_schedule.base = 1e-3;
    let t = sim::run(&cfg).unwrap();
    let completed = t.column("completed").unwrap();
    let skipped = t.column("skipped").unwrap();
    for (c, s) in completed.iter().zip(&skipped) {
        assert_eq!(c + s, 3.0);
        assert_eq!(*s, 3.0);
    }
    assert_eq!(t.skipped, 6);
    assert!(t.column("mse_pred").unwrap().iter().all(|v| v.is_nan()));
}

#[test]
fn fig4_accounting_with_connected_graphs() {
    let t = sim::run(&small(ExperimentId::Fig4, vec![300], 4)).unwrap();
    let row = &t.rows[0];
    assert_eq!(row[3] + row[4], 4.0);
    assert_eq!(t.columns, ["n", "lambda", "mse_pred", "completed", "skipped"]);
}

#[test]
fn null_slope_powers_near_level() {
    let mut cfg = small(ExperimentId::Fig5, vec![150], 100);
    cfg.model.beta = 0.0;
    let t = sim::run(&cfg).unwrap();
    let completed = t.value_at(150, "completed").unwrap();
    let band = 3.0 * (cfg.level * (1.0 - cfg.level) / completed).sqrt();
    for col in ["power_true", "power_hat"] {
        let p = t.value_at(150, col).unwrap();
        assert!((p - cfg.level).abs() <= band, "{col} = {p}, band {band}");
    }
}

#[test]
fn zero_gamma_collapses_to_naive() {
    let mut cfg = small(ExperimentId::Fig8, vec![150], 3);
    cfg.pilot_replicates = 0;
    let t = sim::run(&cfg).unwrap();
    assert_eq!(t.column("se_adj_sigma"), t.column("se_naive"));
}

#[test]
fn replicates_are_isolated() {
    let mut cfg = small(ExperimentId::Fig8, vec![150], 3);
    cfg.pilot_replicates = 4;
    let three = sim::run(&cfg).unwrap();
    cfg.replicates = 5;
    let five = sim::run(&cfg).unwrap();
    assert_eq!(three.rows[..], five.rows[..3]);
}

#[test]
fn tables_written_atomically_with_sidecar() {
    let dir = tempfile::TempDir::new().unwrap();
    let t = sim::run(&small(ExperimentId::Fig3, vec![120], 1)).unwrap();
    let path = dir.path().join("t.csv");
    t.write(&path).unwrap();
    let back = sim::ResultTable::from_csv_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back.rows, t.rows);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(sim::sidecar_path(&path)).unwrap()).unwrap();
    assert_eq!(meta["config_hash"], t.provenance.config_hash.as_str());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}
