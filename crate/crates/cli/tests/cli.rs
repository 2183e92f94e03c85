use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use clap::CommandFactory;
use voltsec_cli::Cli;

fn voltsec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voltsec"))
        .args(args)
        .env_remove("VOLTSEC_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_lists_every_flag() {
    let cmd = Cli::command();
    for sub in cmd.get_subcommands() {
        let name = sub.get_name();
        let out = voltsec(&[name, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{name} --help");
        let text = String::from_utf8(out.stdout).unwrap();
        for arg in sub.get_arguments() {
            if let Some(long) = arg.get_long() {
                assert!(text.contains(&format!("--{long}")), "{name} --help misses --{long}");
            }
        }
    }
}

#[test]
fn missing_required_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("pv.csv");
    let out = voltsec(&["pv-curve", "--case", "nine_bus", "--out", path(&out_csv)]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("--bus"));
}

#[test]
fn islanding_outage_is_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("pv.csv");
    let out = voltsec(&[
        "pv-curve", "--case", "nine_bus", "--bus", "5", "--outage", "1-4", "--out", path(&out_csv),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("disconnects"), "{}", stderr(&out));
}

#[test]
fn empty_configuration_list_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let list = dir.path().join("configs.txt");
    fs::write(&list, "# nothing here\n\n").unwrap();
    let out = voltsec(&[
        "screen", "--case", "nine_bus", "--configs", path(&list), "--out", path(&dir.path().join("r.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn unreadable_input_is_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = voltsec(&["case-validate", "--case", path(&dir.path().join("missing.case"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("cannot read case"));
}

#[test]
fn case_validate_summarizes_bundled_cases() {
    let out = voltsec(&["case-validate", "--case", "nets_nyps_68"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("ok: 68 buses, 83 branches, 16 generators"), "{text}");
}

#[test]
fn data_dir_resolves_relative_inputs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.case"), voltsec::grid::cases::TWO_BUS).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_voltsec"))
        .args(["case-validate", "--case", "small.case"])
        .env("VOLTSEC_DATA_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn pv_curve_writes_both_curves() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("pv.csv");
    let out = voltsec(&[
        "pv-curve", "--case", "nine_bus", "--bus", "5", "--step", "0.05", "--outage", "4-5", "--out", path(&csv),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("base: nose_scale=") && stdout.contains("4-5: nose_scale="));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("curve,load_scale,v_mag\nbase,1,"));
    assert!(text.lines().any(|l| l.starts_with("4-5,")));
}

#[test]
fn screen_ranks_configurations() {
    let dir = tempfile::tempdir().unwrap();
    let list = dir.path().join("configs.txt");
    fs::write(&list, "base\n4-5\n6-7\n8-9\n").unwrap();
    let report = dir.path().join("rank.csv");
    let out = voltsec(&["screen", "--case", "nine_bus", "--configs", path(&list), "--out", path(&report)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&report).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    // the self-configuration ranks last with zero index
    assert!(rows[3].starts_with("4,base,0.000000,"), "{text}");
    assert!(rows[3].contains("Negligible"));
}

fn gen_dataset(dir: &Path, name: &str, seed: &str, tc_fraction: &str) -> Output {
    voltsec(&[
        "gen-dataset",
        "--case", "nine_bus",
        "--n", "10",
        "--seed", seed,
        "--tc-fraction", tc_fraction,
        "--tc", "5-6,7-8",
        "--csc", "4-5,6-7,8-9",
        "--scale-max", "1.6",
        "--out", path(&dir.join(name)),
    ])
}

#[test]
fn gen_dataset_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        let out = gen_dataset(dir.path(), name, "7", "0.3");
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let read = |n: &str| fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a.csv.meta"), read("b.csv.meta"));
    let text = String::from_utf8(read("a.csv")).unwrap();
    assert_eq!(text.lines().count(), 11);
    let meta = String::from_utf8(read("a.csv.meta")).unwrap();
    assert_eq!(meta.lines().filter(|l| l.starts_with("sample.") && !l.ends_with("tc:none")).count(), 3);
}

#[test]
fn gen_dataset_needs_contingencies_for_custom_cases() {
    let dir = tempfile::tempdir().unwrap();
    let out = voltsec(&["gen-dataset", "--case", "nine_bus", "--n", "2", "--seed", "0", "--out", path(&dir.path().join("x.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_then_report() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gen_dataset(dir.path(), "init.csv", "1", "0").status.code(), Some(0));
    assert_eq!(gen_dataset(dir.path(), "update.csv", "500", "0.3").status.code(), Some(0));
    let config = dir.path().join("exp.toml");
    fs::write(
        &config,
        "init_dataset = \"init.csv\"\nupdate_dataset = \"update.csv\"\ninit_epochs = 4\nupdate_epochs = 8\neval_every = 2\nhidden = [6]\n",
    )
    .unwrap();
    let logs = dir.path().join("logs");
    let out = voltsec(&["train", "--config", path(&config), "--out", path(&logs)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let logs_written = fs::read_dir(&logs)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".log.csv"))
        .count();
    assert_eq!(logs_written, 7);

    let out = voltsec(&["report", "--logs", path(&logs), "--metric", "test"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "algorithm,init@2,init@4,update@2,update@4,update@6,update@8");
    assert_eq!(lines.len(), 8);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 7));
    assert_eq!(table, fs::read_to_string(logs.join("summary_test.csv")).unwrap());
}

#[test]
fn empty_experiment_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    fs::write(&config, "").unwrap();
    let out = voltsec(&["train", "--config", path(&config), "--out", path(&dir.path().join("o"))]);
    assert_ne!(out.status.code(), Some(0));
    assert!(!stderr(&out).is_empty());
}

#[test]
fn two_bus_nose_and_repeat_runs_match() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let csv = dir.path().join(name);
        let out = voltsec(&["pv-curve", "--case", "two_bus", "--bus", "2", "--step", "0.05", "--out", path(&csv)]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let stdout = String::from_utf8(out.stdout).unwrap();
        let nose: f64 = stdout.trim().strip_prefix("base: nose_scale=").unwrap().parse().unwrap();
        assert!((nose - 5.0).abs() <= 0.05 + 1e-9, "{nose}");
        outputs.push(fs::read(&csv).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}
