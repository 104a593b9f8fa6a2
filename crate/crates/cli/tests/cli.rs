use std::process::{Command, Output};

fn fasris(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fasris"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn asc_prints_closed_form_value() {
    let o = fasris(&["asc", "--u-l", "32", "--u-p", "32"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    let v: f64 = line.trim().strip_prefix("asc_analytical=").unwrap().parse().unwrap();
    assert!(v > 0.0 && v < 10.0);
}

#[test]
fn sop_with_mc_reports_interval() {
    let o = fasris(&["sop", "--mc", "--trials", "2000", "--u-l", "32", "--u-p", "32", "--snr-r-db", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("sop_analytical="));
    assert!(out.contains("sop_mc="));
    assert!(out.contains("sop_mc_ci95=["));
}

#[test]
fn direct_link_scenario_falls_back_to_simulation() {
    let o = fasris(&["sop", "--scenario", "no_ris", "--trials", "1000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(!out.contains("analytical"));
    assert!(out.contains("sop_mc="));
}

#[test]
fn invalid_field_is_a_structured_error() {
    let o = fasris(&["asc", "--elements", "0"]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.starts_with("error:"), "{err}");
    assert!(err.contains("elements"), "{err}");

    let o = fasris(&["asc", "--mode", "bogus"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn unknown_flag_exits_nonzero_with_error_prefix() {
    let o = fasris(&["asc", "--no-such-flag"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn config_file_then_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small run\nn_ports = 4\naperture = 0\nu_l = 16\nu_p = 16\n").unwrap();
    let o = fasris(&["fit-blocks", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("blocks (B): 1"));
    assert!(stdout(&o).contains("block sizes: [4]"));

    let o = fasris(&["fit-blocks", "--config", cfg.to_str().unwrap(), "--aperture", "5"]);
    assert!(o.status.success());
    assert!(!stdout(&o).contains("block sizes: [4]"));

    std::fs::write(&cfg, "n_ports = 4\nwat = 1\n").unwrap();
    let o = fasris(&["asc", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn fit_blocks_writes_spectrum_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spectrum.csv");
    let o = fasris(&["fit-blocks", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,eigenvalue"));
    assert_eq!(lines.count(), 20);
}

#[test]
fn sweep_writes_ordered_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = fasris(&[
        "sweep", "--var", "snr_r_db", "--values", "0:10:5", "--outputs", "asc_analytical,sop_mc",
        "--scenarios", "fas_ris,no_fas", "--trials", "1000", "--u-l", "32", "--u-p", "32",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3 * 2 * 2);
    let values: Vec<&str> = rows.iter().map(|r| r[1]).collect();
    assert_eq!(values, ["0", "0", "0", "0", "5", "5", "5", "5", "10", "10", "10", "10"]);
    assert!(rows.iter().all(|r| r[7].is_empty()));
    assert!(rows.iter().filter(|r| r[3] == "asc_analytical").all(|r| r[5].is_empty()));
    assert!(rows.iter().filter(|r| r[3] == "sop_mc").all(|r| !r[5].is_empty()));
}

#[test]
fn sweep_rejects_nonmonotone_values() {
    let o = fasris(&["sweep", "--var", "M", "--values", "10,5,20", "--analytical-only"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("monotone"));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = fasris(&["simulate", "--trials", "500", "--seed", "42", "--out", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(a, b);
    assert!(String::from_utf8(a).unwrap().starts_with("trial,gamma_r_star,gamma_e_star,c_s\n"));
}

#[test]
fn validate_prints_report() {
    let o = fasris(&["validate", "--trials", "3000", "--u-l", "32", "--u-p", "32"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("rho0_constant"));
    assert!(out.contains("mode comparison:"));
    assert!(out.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count() >= 10);
}
