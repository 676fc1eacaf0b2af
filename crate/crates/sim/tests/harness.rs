//! End-to-end harness behaviour: configuration layering, determinism across
//! worker counts and CSV output.

use cfota_sim::config::{read_table, resolve};
use cfota_sim::{run_experiment, Experiment};

fn small(exp: Experiment, extra: &[&str]) -> cfota_sim::RunConfig {
    let mut overrides: Vec<String> = ["L=6", "K=3", "tau_p=3", "tau_u=2", "drops=2", "ewhw_mode=analytic"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    overrides.extend(extra.iter().map(|s| s.to_string()));
    resolve(&exp.preset(), None, &overrides).unwrap()
}

#[test]
fn output_is_identical_across_worker_counts() {
    for (exp, extra) in [
        (Experiment::Fig2Nmse, vec!["trials=100", "grid=[0.5, 2.0]"]),
        (Experiment::Fig3Ser, vec!["trials=130", "grid=[90, 110]", "target_errors=5"]),
        (Experiment::Fig9SerOds, vec!["trials=70", "grid=[100]"]),
    ] {
        let csv = |w: usize| {
            let mut e = extra.clone();
            let wk = format!("workers={w}");
            e.push(&wk);
            run_experiment(exp, &small(exp, &e)).unwrap().to_csv_string().unwrap()
        };
        let one = csv(1);
        assert_eq!(one, csv(3), "{}", exp.name());
        assert!(one.lines().count() > 1);
    }
}

#[test]
fn ser_points_stop_at_batch_boundaries() {
    let cfg = small(Experiment::Fig3Ser, &["trials=1000", "grid=[70]", "target_errors=1"]);
    let t = run_experiment(Experiment::Fig3Ser, &cfg).unwrap();
    // Symbols per trial are K * tau_u = 6; one batch of 64 trials suffices at 70 dB.
    for s in t.column("wired_symbols").unwrap() {
        assert_eq!(s, 64.0 * 6.0);
    }
}

#[test]
fn config_file_layers_under_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "P_max = 2.5\ntrials = 30\nworkers = 2\n").unwrap();
    let file = read_table(&path).unwrap();
    let cfg = resolve(&Experiment::Fig3Ser.preset(), Some(&file), &["trials=31".into()]).unwrap();
    assert_eq!(cfg.scenario.p_max, 2.5);
    assert_eq!(cfg.scenario.trials, 31);
    assert_eq!(cfg.scenario.drops, 20);
    assert_eq!(cfg.harness.workers, Some(2));

    std::fs::write(&path, "not_a_field = 1\n").unwrap();
    let bad = read_table(&path).unwrap();
    assert!(resolve(&Experiment::Fig3Ser.preset(), Some(&bad), &[]).is_err());
}

#[test]
fn every_experiment_has_a_valid_preset_and_grid() {
    for exp in Experiment::ALL {
        assert_eq!(Experiment::from_name(exp.name()), Some(exp));
        resolve(&exp.preset(), None, &[]).unwrap();
        cfota_sim::config::check_grid(&exp.default_grid()).unwrap();
    }
}

#[test]
fn channel_use_tables_have_constant_ota_column() {
    let cfg = small(Experiment::Fig7bCuVsL, &["trials=20", "grid=[4, 8]"]);
    let t = run_experiment(Experiment::Fig7bCuVsL, &cfg).unwrap();
    let ota = t.column("ota").unwrap();
    assert!(ota.iter().all(|&v| v == ota[0]));
    let ods = t.column("ods_nb8").unwrap();
    assert!(ods[1] > ods[0]);
}
