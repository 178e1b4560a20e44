//! End-to-end runs of the `shiftwave` binary: exit codes, CSV contents,
//! determinism and the acceptance summary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("acceptance")
        .join(name)
}

fn shiftwave(cmd: &str, config: &Path, out: &Path, overrides: &[&str]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_shiftwave"));
    c.arg(cmd).arg("--config").arg(config).arg("--out").arg(out);
    for o in overrides {
        c.arg("--override").arg(o);
    }
    c.env("SHIFTWAVE_THREADS", "2");
    c.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scenario.ini");
    fs::write(&p, text).unwrap();
    p
}

/// `name -> (value, reason)` from `speeds.csv`.
fn read_speeds(path: &Path) -> Vec<(String, String, String)> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[0].to_string(), rec[1].to_string(), rec[3].to_string())
        })
        .collect()
}

#[test]
fn local_speeds_match_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[model]\nmode = local\na = 0.4\nb = 2\ns = 1\n");
    let o = shiftwave("speeds", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_speeds(&dir.path().join("speeds.csv"));
    let value = |name: &str| -> f64 {
        rows.iter()
            .find(|r| r.0 == name)
            .unwrap()
            .1
            .parse()
            .unwrap()
    };
    assert_eq!(value("s_star_prey"), 2.0);
    assert_eq!(value("s_star_pred"), 2.0);
    assert!((value("s_dstar_prey") - 2.0 * 0.6f64.sqrt()).abs() < 1e-10);
    assert!((value("s_dstar_pred") - 2.0 * 0.2f64.sqrt()).abs() < 1e-10);
}

#[test]
fn balanced_predation_reports_undefined_speed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[model]\nmode = local\na = 0.5\nb = 2\ns = 1\n");
    let o = shiftwave("speeds", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_speeds(&dir.path().join("speeds.csv"));
    let row = rows.iter().find(|r| r.0 == "s_dstar_pred").unwrap();
    assert_eq!(row.1, "NA");
    assert!(row.2.contains("rate nonpositive"), "{row:?}");
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[model]\na = 0.4\nb = 2\na = 0.3\ns = 1\n");
    let o = shiftwave("speeds", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lines 2 and 4"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), "[model]\na = 0.4\nb = 2\ns = -1\n");
    let o = shiftwave("speeds", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("climate speed must be positive"),
        "{}",
        stderr(&o)
    );

    let o = shiftwave("speeds", &dir.path().join("missing.ini"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn front_wave_converges_with_front_tails() {
    let dir = tempfile::tempdir().unwrap();
    let o = shiftwave(
        "wave",
        &bundled("c3_front.ini"),
        dir.path(),
        &["scenario.method=monotone"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("tail=Front"), "{}", stdout(&o));
    let summary = fs::read_to_string(dir.path().join("wave_summary.csv")).unwrap();
    let residual: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("monotone_residual,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!(residual < 1e-6, "{residual}");
    assert!(dir.path().join("wave_profile_monotone.csv").exists());
}

#[test]
fn mixed_wave_below_predator_speed_is_a_regime_error() {
    let dir = tempfile::tempdir().unwrap();
    // The predator speed for this model is about 0.58.
    let o = shiftwave(
        "wave",
        &bundled("c4_mixed.ini"),
        dir.path(),
        &["model.s=0.38"],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(
        stderr(&o).contains("does not have any positive solution"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn sweep_separates_the_three_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let o = shiftwave(
        "sweep",
        &bundled("c6_local.ini"),
        dir.path(),
        &["scenario.s_list=0.5,1.5,1.5,2.5"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(
        stderr(&o).contains("duplicate climate speed"),
        "{}",
        stderr(&o)
    );
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let verdicts: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    assert_eq!(verdicts, ["Coexistence", "PreyOnlySaturated", "Extinct"]);
}

#[test]
fn empty_sweep_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = shiftwave("sweep", &bundled("c6_local.ini"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = bundled("c9_orders.ini");
    let snaps = ["sim.snapshots=0,2.5,5"];
    for out in [a.path(), b.path()] {
        assert_eq!(
            shiftwave("simulate", &cfg, out, &snaps).status.code(),
            Some(0)
        );
        assert_eq!(
            shiftwave("classify", &cfg, out, &snaps).status.code(),
            Some(0)
        );
        assert_eq!(
            shiftwave("speeds", &cfg, out, &snaps).status.code(),
            Some(0)
        );
    }
    for file in ["probes.csv", "snapshots.csv", "outcome.csv", "speeds.csv"] {
        let x = fs::read(a.path().join(file)).unwrap();
        let y = fs::read(b.path().join(file)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file} differs");
        assert!(!x.contains(&b'\r'));
    }
    // results.csv is append-only: a header plus one row per command.
    let results = fs::read_to_string(a.path().join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 4);
    let hashes: Vec<&str> = results
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    assert!(hashes.iter().all(|h| h.len() == 16 && *h == hashes[0]));
}

#[test]
fn accept_reports_a_broken_config_and_keeps_going() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite");
    fs::create_dir(&suite).unwrap();
    for f in ["c1_dispersion.ini", "c2_delta_roots.ini"] {
        fs::copy(bundled(f), suite.join(f)).unwrap();
    }
    fs::write(
        suite.join("c1_dispersion.ini"),
        "[model]\na = 0.4\nb = 2\ns = 0.5\n[kernel.prey]\nfamily = table\nfile = bad.txt\n",
    )
    .unwrap();
    fs::write(suite.join("bad.txt"), "-1 0.5\n0 oops\n1 0.5\n").unwrap();
    let o = shiftwave("accept", &suite, dir.path(), &["accept.only=1,2"]);
    assert_eq!(o.status.code(), Some(3));
    let text = stdout(&o);
    assert!(
        text.contains("[FAIL] 1") && text.contains("error:"),
        "{text}"
    );
    assert!(text.contains("[PASS] 2"), "{text}");
    let table = fs::read_to_string(dir.path().join("accept.csv")).unwrap();
    assert!(table.starts_with("criterion,check,pass,measured,target,seconds\n"));
}

#[test]
fn tightened_dispersion_tolerance_still_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = shiftwave(
        "accept",
        &bundled(""),
        dir.path(),
        &["accept.only=1", "accept.tol_scale=0.1"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}
