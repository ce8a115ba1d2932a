use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sqfock::closed_forms::{amp_single_crystal_11, four_crystal_null_r3, four_crystal_phi0_null_r1};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sqfock"))
}

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn config(name: &str) -> PathBuf {
    manifest().join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// `key=value` fields of an `amp` line.
fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in {line}"))
        .parse()
        .unwrap()
}

fn amp(cfg: &str, extra: &[&str]) -> String {
    let path = config(cfg);
    let mut args = vec!["amp", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    stdout(&o)
}

// Figure sweeps: config, first axis, optional second axis.
const FIGURES: [(&str, &str, Option<&str>); 6] = [
    ("fig1b", "r=0:2:201", None),
    ("fig2b", "r=0.2,1.0,2.0", Some("phi=0:6.283185307179586:361")),
    ("fig3b", "phi1=0:2pi:73", Some("phi2=0:2pi:73")),
    ("fig3c", "phi1=0:2pi:73", Some("phi2=0:2pi:73")),
    ("fig4b", "r1=0:1.5:41", Some("r3=0:1.5:41")),
    ("fig4c", "r1=0:2.5:41", Some("r3=0:1.25:41")),
];

fn sweep_to(fig: &str, out: &Path, threads: Option<&str>) {
    let (_, vary, vary2) = FIGURES.iter().find(|f| f.0 == fig).unwrap();
    let cfg = config(&format!("{fig}.cfg"));
    let mut cmd = bin();
    cmd.args([
        "sweep",
        cfg.to_str().unwrap(),
        "--vary",
        vary,
        "--out",
        out.to_str().unwrap(),
    ]);
    if let Some(v) = vary2 {
        cmd.args(["--vary2", v]);
    }
    if let Some(t) = threads {
        cmd.env("RAYON_NUM_THREADS", t);
    }
    let o = cmd.output().unwrap();
    assert!(o.status.success(), "{fig}: {}", stderr(&o));
}

fn golden(fig: &str) -> PathBuf {
    manifest().join("tests/golden").join(format!("{fig}.csv"))
}

/// Regenerate with `SQFOCK_BLESS=1 cargo test -p sqfock-cli --test cli`.
fn check_golden(fig: &str) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    sweep_to(fig, &out, None);
    let got = std::fs::read(&out).unwrap();
    if std::env::var_os("SQFOCK_BLESS").is_some() {
        std::fs::write(golden(fig), &got).unwrap();
        return;
    }
    let want = std::fs::read(golden(fig)).unwrap();
    if got != want {
        let (g, w) = (String::from_utf8_lossy(&got), String::from_utf8_lossy(&want));
        let first = g.lines().zip(w.lines()).position(|(a, b)| a != b);
        panic!(
            "{fig}: output differs from golden ({} vs {} lines, first difference at line {:?})",
            g.lines().count(),
            w.lines().count(),
            first.map(|i| i + 1)
        );
    }
}

#[test]
fn golden_fig1b() {
    check_golden("fig1b");
}

#[test]
fn golden_fig2b() {
    check_golden("fig2b");
}

#[test]
fn golden_fig3b() {
    check_golden("fig3b");
}

#[test]
fn golden_fig3c() {
    check_golden("fig3c");
}

#[test]
fn golden_fig4b() {
    check_golden("fig4b");
}

#[test]
fn golden_fig4c() {
    check_golden("fig4c");
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn read(fig: &str) -> Table {
        let mut r = csv::Reader::from_path(golden(fig)).unwrap();
        let header = r.headers().unwrap().iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
            .collect();
        Table { header, rows }
    }

    fn col(&self, name: &str) -> usize {
        self.header.iter().position(|h| h == name).unwrap()
    }
}

fn argmin<'a>(rows: impl Iterator<Item = &'a Vec<f64>>, col: usize) -> &'a Vec<f64> {
    rows.min_by(|a, b| a[col].total_cmp(&b[col])).unwrap()
}

#[test]
fn golden_headers_and_formatting() {
    let t = Table::read("fig4c");
    assert_eq!(t.header, ["r1", "r3", "re", "im", "prob", "tail_bound"]);
    assert_eq!(t.rows.len(), 41 * 41);
    let text = std::fs::read_to_string(golden("fig1b")).unwrap();
    let second = text.lines().nth(2).unwrap();
    assert_eq!(second.split(',').next().unwrap(), "1.0000000000000000e-2");
}

#[test]
fn fig1b_single_null_at_asinh_one() {
    let t = Table::read("fig1b");
    let (r, p) = (t.col("r"), t.col("prob"));
    let best = argmin(t.rows.iter(), p);
    assert!((best[r] - 1f64.asinh()).abs() <= 0.005, "minimum at r={}", best[r]);
    // Only one local minimum below 1e-4.
    let dips = t
        .rows
        .windows(3)
        .filter(|w| w[1][p] < w[0][p] && w[1][p] < w[2][p] && w[1][p] < 1e-4)
        .count();
    assert_eq!(dips, 1);
}

#[test]
fn fig2b_dips_narrow_with_gain() {
    let t = Table::read("fig2b");
    let (r, phi, p) = (t.col("r"), t.col("phi"), t.col("prob"));
    // Distance from the null at phi = pi to the maximum flanking it.
    let mut widths = Vec::new();
    for rv in [0.2, 1.0, 2.0] {
        let rows: Vec<&Vec<f64>> = t.rows.iter().filter(|row| row[r] == rv && row[phi] <= PI).collect();
        let null = argmin(rows.iter().copied(), p);
        assert!((null[phi] - PI).abs() < 1e-12 && null[p] < 1e-20, "r={rv}: {null:?}");
        let peak = rows.iter().max_by(|a, b| a[p].total_cmp(&b[p])).unwrap();
        widths.push(PI - peak[phi]);
    }
    assert!(widths[0] > widths[1] && widths[1] > widths[2], "{widths:?}");
}

#[test]
fn fig4b_null_follows_symmetric_condition() {
    let t = Table::read("fig4b");
    let (r1, r3, p) = (t.col("r1"), t.col("r3"), t.col("prob"));
    let step = 1.5 / 40.0;
    for i in 4..41 {
        let x = i as f64 * step;
        let best = argmin(t.rows.iter().filter(|row| (row[r1] - x).abs() < 1e-12), p);
        let want = four_crystal_null_r3(x).unwrap();
        assert!(
            (best[r3] - want).abs() <= step,
            "r1={x}: minimum at r3={}, null at {want}",
            best[r3]
        );
    }
}

#[test]
fn fig4c_null_follows_asymmetric_condition() {
    let t = Table::read("fig4c");
    let (r1, r3, p) = (t.col("r1"), t.col("r3"), t.col("prob"));
    let step = 2.5 / 40.0;
    let mut checked = 0;
    for j in 0..41 {
        let y = j as f64 * 1.25 / 40.0;
        let Some(want) = (y > 0.0)
            .then(|| four_crystal_phi0_null_r1(y, 2.0 * y).unwrap())
            .flatten()
        else {
            continue;
        };
        if want > 2.5 - step {
            continue;
        }
        let best = argmin(t.rows.iter().filter(|row| (row[r3] - y).abs() < 1e-12), p);
        assert!(
            (best[r1] - want).abs() <= step,
            "r3={y}: minimum at r1={}, null at {want}",
            best[r1]
        );
        checked += 1;
    }
    assert!(checked >= 5, "only {checked} columns with a null in range");
}

#[test]
fn sweeps_are_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    sweep_to("fig2b", &a, Some("1"));
    sweep_to("fig2b", &b, Some("3"));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn sweep_to_stdout_with_list_axis() {
    let cfg = config("fig2b.cfg");
    let o = run(&[
        "sweep",
        cfg.to_str().unwrap(),
        "--vary",
        "phi=0,0.5pi,pi",
        "--set",
        "r=0.3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "phi,re,im,prob,tail_bound");
    assert_eq!(lines.len(), 4);
    let prob_pi: f64 = lines[3].split(',').nth(3).unwrap().parse().unwrap();
    assert!(prob_pi < 1e-28, "{prob_pi}");
}

#[test]
fn amp_without_squeezing_is_identity() {
    let line = amp("fig1b.cfg", &["--set", "r=0"]);
    assert_eq!(
        line.trim(),
        "re=1.0000000000000000e0 im=0.0000000000000000e0 abs=1.0000000000000000e0 \
         prob=1.0000000000000000e0 tail_bound=0.0000000000000000e0"
    );
}

#[test]
fn amp_vanishes_at_asinh_one() {
    let line = amp("fig1b.cfg", &["--set", "r=asinh(1)"]);
    assert!(field(&line, "abs") < 1e-10, "{line}");
    // Six digits of asinh(1) leave a residual set by the slope at the null.
    let line = amp("fig1b.cfg", &["--set", "r=0.881374"]);
    let want = amp_single_crystal_11(0.881374).norm();
    assert!((field(&line, "abs") - want).abs() < 1e-15, "{line}");
    assert!(want > 4e-7 && want < 5e-7);
}

#[test]
fn amp_four_crystal_null_config() {
    let line = amp("four_crystal_pi.cfg", &[]);
    assert!(field(&line, "abs") < 1e-9, "{line}");
    let line = amp("four_crystal_pi.cfg", &["--pattern", "1,1,0,0"]);
    assert!(field(&line, "abs") > 1e-3, "{line}");
}

#[test]
fn amp_explicit_elements_match_standard_kind() {
    let explicit = amp("explicit_two_crystal.cfg", &[]);
    let standard = amp("fig2b.cfg", &["--set", "r=0.8", "--set", "phi=0.25pi"]);
    assert!((field(&explicit, "re") - field(&standard, "re")).abs() < 1e-12);
    assert!((field(&explicit, "im") - field(&standard, "im")).abs() < 1e-12);
}

#[test]
fn zeros_three_crystal() {
    let o = run(&["zeros", "--solve", "three_crystal", "1.0", "0.5", "0.6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "{text}");
    for l in lines {
        assert!(l.starts_with("phi1="));
        assert!(field(l, "residual") < 1e-9, "{l}");
    }
}

#[test]
fn zeros_four_crystal_pi() {
    let o = run(&["zeros", "--solve", "four_crystal_pi", "0.6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let r3 = field(&text, "r3=r4");
    assert!((r3 - 0.5 * 1.2f64.tanh().asinh()).abs() < 1e-15, "{text}");
    assert!(field(&text, "residual") < 1e-9);
}

#[test]
fn zeros_report_infeasible_constraints() {
    let o = run(&["zeros", "--solve", "four_crystal_phi0", "0.2", "0.9"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(
        text.starts_with("infeasible: |r3 - r4| = 6.9999999999999996e-1 must exceed asinh(1)"),
        "{text}"
    );
    let o = run(&["zeros", "--solve", "three_crystal", "1", "0.2", "0.1"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("infeasible: tanh(r3)"));
    let o = run(&["zeros", "--solve", "four_crystal_phi0", "0.3", "1.5"]);
    assert!(o.status.success());
    assert!(field(&stdout(&o), "residual") < 1e-9);
}

#[test]
fn zeros_rejects_bad_parameters() {
    let o = run(&["zeros", "--solve", "four_crystal_pi", "0.6", "0.7"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["zeros", "--solve", "three_crystal", "1", "-0.5", "0.6"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn validate_closedform_and_series() {
    let o = run(&["validate", "--suite", "closedform", "--tol", "1e-9"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 5);
    let o = run(&["validate", "--suite", "series", "--tol", "1e-10"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn validate_oracle() {
    let o = run(&["validate", "--suite", "oracle", "--tol", "1e-8"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn validate_fails_with_exit_two() {
    let o = run(&["validate", "--suite", "closedform", "--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn parse_errors_name_file_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "kind = two_crystal\nr1 = 1 +\nr2 = 1\nphi = 0\n").unwrap();
    let o = run(&["amp", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(
        err.contains(&format!("{}:2:9: unexpected end of expression", path.display())),
        "{err}"
    );
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    let cfg = config("fig1b.cfg");
    let o = run(&["sweep", cfg.to_str().unwrap(), "--vary", "q=0:1:3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("'q' is not a variable"));
    let o = run(&["amp", cfg.to_str().unwrap(), "--pattern", "1,x"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run(&["amp", "/nonexistent.cfg"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn numerical_failures_exit_three() {
    let o = run(&["amp", config("fig1b.cfg").to_str().unwrap(), "--set", "r=20"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.cfg");
    std::fs::write(
        &path,
        "kind = single_seeded\nr = 1\npolicy.photon_cap = 400\npolicy.k_max = 3\n",
    )
    .unwrap();
    let o = run(&["amp", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("k_max"));
}
