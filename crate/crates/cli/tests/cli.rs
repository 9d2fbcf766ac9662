use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dmdkit::c64;
use dmdkit::membrane::GridDomain;
use dmdkit::oracle::{analytic_frequency, analytic_mode_field};
use dmdkit::snapshot::{read_fields, write_fields, FieldStack};
use tempfile::TempDir;

fn dmdkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dmdkit"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = dmdkit(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str]) -> String {
    let out = dmdkit(dir, args);
    assert!(!out.status.success(), "{args:?} should fail");
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error: "), "{err:?}");
    assert_eq!(err.trim_end().lines().count(), 1, "{err:?}");
    err
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn simulate_defaults() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["simulate"]);
    let s = read_fields(tmp.path().join("snapshots.dmds")).unwrap();
    assert_eq!((s.rows(), s.cols()), (1521, 1000));
    assert!((s.dt() - 10.0 / 999.0).abs() < 1e-15);
    let obs = csv_rows(&tmp.path().join("observable.csv"));
    assert_eq!(obs.len(), 1000);
    assert_eq!(num(&obs[0][0]), 0.0);
    let first: f64 = s.column(0).iter().sum();
    assert!((num(&obs[0][1]) - first).abs() <= 1e-12 * first.abs());
}

#[test]
fn zero_amplitude_gives_zero_payload() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &[
            "simulate",
            "--amplitude",
            "0",
            "--grid",
            "11",
            "--samples",
            "20",
        ],
    );
    let s = read_fields(tmp.path().join("snapshots.dmds")).unwrap();
    assert!(s.data().iter().all(|&v| v == 0.0));
}

#[test]
fn usage_errors_are_single_lines() {
    let tmp = TempDir::new().unwrap();
    let p = tmp.path();
    fails(p, &["simulate", "--samples", "1"]);
    fails(p, &["simulate", "--c", "-1"]);
    fails(p, &["simulate", "--gamma", "-0.5"]);
    fails(p, &["dmd", "x.dmds", "--rank", "0"]);
    fails(p, &["dmd", "x.dmds", "--rank", "3", "--energy", "0.9"]);
    fails(p, &["dmd", "missing.dmds"]);
    fails(p, &["render", "missing.dmds", "--out", "a.pgm"]);
    fails(p, &["bogus"]);
    fails(p, &[]);
}

#[test]
fn simulate_refines_step_and_names_bad_flags() {
    // a long sampling interval is split into several solver steps
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &["simulate", "--grid", "9", "--samples", "3", "--t-end", "2"],
    );
    let err = fails(tmp.path(), &["simulate", "--grid", "9", "--sigma", "0"]);
    assert!(err.contains("--sigma"));
}

#[test]
fn constant_field_has_only_the_background_mode() {
    let tmp = TempDir::new().unwrap();
    let cols: Vec<Vec<f64>> = (0..12).map(|_| vec![1.0, 2.0, -0.5, 4.0]).collect();
    write_fields(
        &FieldStack::from_columns(0.1, &cols).unwrap(),
        tmp.path().join("c.dmds"),
    )
    .unwrap();
    ok(tmp.path(), &["dmd", "c.dmds"]);
    let rows = csv_rows(&tmp.path().join("spectrum.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(num(&rows[0][1]), 0.0);
    assert!((num(&rows[0][4]) - 1.0).abs() <= 1e-9);
    assert_eq!(rows[0][6], "");
    assert!(tmp.path().join("mode_000_abs.dmds").exists());
    assert_eq!(
        read_fields(tmp.path().join("mode_000_reim.dmds"))
            .unwrap()
            .cols(),
        2
    );
}

#[test]
fn csv_input_needs_dt() {
    let tmp = TempDir::new().unwrap();
    let text: String = (0..30)
        .map(|k| {
            let t = k as f64 * 0.05;
            format!("{},{},{}\n", (3.0 * t).cos(), (3.0 * t).sin(), 0.5)
        })
        .collect();
    fs::write(tmp.path().join("s.csv"), text).unwrap();
    fails(tmp.path(), &["dmd", "s.csv"]);
    ok(tmp.path(), &["dmd", "s.csv", "--dt", "0.05"]);
    let rows = csv_rows(&tmp.path().join("spectrum.csv"));
    assert_eq!(rows.len(), 3);
    let top = rows.iter().map(|r| num(&r[1]).abs()).fold(0.0, f64::max);
    assert!((top - 3.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-9);
}

#[test]
fn power_floor_limits_mode_files() {
    let tmp = TempDir::new().unwrap();
    let cols: Vec<Vec<f64>> = (0..30)
        .map(|k| {
            vec![
                1.0 + 0.01 * 0.8f64.powi(k),
                2.0 - 0.01 * 0.8f64.powi(k),
                0.5,
            ]
        })
        .collect();
    write_fields(
        &FieldStack::from_columns(0.1, &cols).unwrap(),
        tmp.path().join("s.dmds"),
    )
    .unwrap();
    ok(tmp.path(), &["dmd", "s.dmds", "--power-floor", "0.1"]);
    let rows = csv_rows(&tmp.path().join("spectrum.csv"));
    assert_eq!(rows.len(), 2);
    assert!(tmp.path().join("mode_000_abs.dmds").exists());
    assert!(!tmp.path().join("mode_001_abs.dmds").exists());
}

fn write_single_mode(dir: &Path, grid: usize, m: u32, n: u32) {
    let d = GridDomain::square(grid).unwrap();
    let field = analytic_mode_field(m, n, &d).unwrap();
    let nu = analytic_frequency(m, n, 1.0);
    let dt = 0.01;
    let cols: Vec<Vec<f64>> = (0..200)
        .map(|k| {
            field
                .iter()
                .map(|v| v * (2.0 * std::f64::consts::PI * nu * k as f64 * dt).cos())
                .collect()
        })
        .collect();
    write_fields(
        &FieldStack::from_columns(dt, &cols).unwrap(),
        dir.join("s.dmds"),
    )
    .unwrap();
}

#[test]
fn verify_single_synthetic_mode() {
    let tmp = TempDir::new().unwrap();
    write_single_mode(tmp.path(), 21, 2, 3);
    ok(
        tmp.path(),
        &["dmd", "s.dmds", "--stack", "1", "--out-dir", "d"],
    );
    ok(
        tmp.path(),
        &["verify", "d", "--grid", "21", "--max-freq", "2.5"],
    );
    let rows = csv_rows(&tmp.path().join("match.csv"));
    let matched: Vec<_> = rows.iter().filter(|r| r[7] == "matched").collect();
    assert_eq!(matched.len(), 1);
    assert_eq!((matched[0][0].as_str(), matched[0][1].as_str()), ("2", "3"));
    assert!(num(&matched[0][4]) <= 1e-6);
    assert!(num(&matched[0][5]) <= 0.1);
    assert!(rows.iter().all(|r| r[7] != "spurious"));
}

#[test]
fn verify_rejects_a_wrong_grid() {
    let tmp = TempDir::new().unwrap();
    write_single_mode(tmp.path(), 21, 1, 1);
    ok(tmp.path(), &["dmd", "s.dmds", "--stack", "1"]);
    let err = fails(tmp.path(), &["verify", ".", "--grid", "11"]);
    assert!(err.contains("interior nodes"));
}

#[test]
fn verify_empty_spectrum() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("spectrum.csv"),
        "index,frequency_hz,eigenvalue_re,eigenvalue_im,magnitude,power,paired_with\n",
    )
    .unwrap();
    ok(tmp.path(), &["verify", ".", "--max-freq", "2"]);
    let rows = csv_rows(&tmp.path().join("match.csv"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[7] == "undetected"));
}

fn pgm_payload(path: &Path, nodes: usize) -> Vec<u8> {
    let bytes = fs::read(path).unwrap();
    bytes[bytes.len() - nodes..].to_vec()
}

#[test]
fn render_images() {
    let tmp = TempDir::new().unwrap();
    let p = tmp.path();
    let d = GridDomain::square(41).unwrap();

    write_fields(
        &FieldStack::new(1521, 1, 1.0, vec![0.0; 1521]).unwrap(),
        p.join("zero.dmds"),
    )
    .unwrap();
    ok(p, &["render", "zero.dmds", "--out", "zero.pgm"]);
    let bytes = fs::read(p.join("zero.pgm")).unwrap();
    assert!(bytes.starts_with(b"P5\n41 41\n255\n"));
    assert!(pgm_payload(&p.join("zero.pgm"), 1681)
        .iter()
        .all(|&b| b == 0));

    let mut one = vec![0.0; 1521];
    one[100] = 0.3;
    write_fields(
        &FieldStack::new(1521, 1, 1.0, one).unwrap(),
        p.join("one.dmds"),
    )
    .unwrap();
    ok(p, &["render", "one.dmds", "--out", "one.pgm"]);
    let px = pgm_payload(&p.join("one.pgm"), 1681);
    assert_eq!(px[d.interior()[100]], 255);
    assert_eq!(px.iter().filter(|&&b| b > 0).count(), 1);

    let field = analytic_mode_field(1, 1, &d).unwrap();
    write_fields(
        &FieldStack::new(1521, 1, 1.0, field).unwrap(),
        p.join("m11.dmds"),
    )
    .unwrap();
    ok(p, &["render", "m11.dmds", "--out", "m11.pgm"]);
    let px = pgm_payload(&p.join("m11.pgm"), 1681);
    let argmax = (0..px.len())
        .max_by_key(|&k| (px[k], std::cmp::Reverse(k)))
        .unwrap();
    assert_eq!(argmax, 20 * 41 + 20);

    let err = fails(p, &["render", "m11.dmds", "--grid", "21", "--out", "x.pgm"]);
    assert!(err.contains("interior nodes"));
    fails(
        p,
        &["render", "m11.dmds", "--column", "1", "--out", "x.pgm"],
    );
}

#[test]
fn render_with_mask() {
    let tmp = TempDir::new().unwrap();
    let p = tmp.path();
    fs::write(p.join("m.mask"), "......\n.####.\n.##...\n......\n").unwrap();
    ok(
        p,
        &[
            "simulate",
            "--mask",
            "m.mask",
            "--samples",
            "5",
            "--t-end",
            "0.1",
            "--center",
            "0.4,0.4",
        ],
    );
    ok(
        p,
        &[
            "render",
            "snapshots.dmds",
            "--mask",
            "m.mask",
            "--column",
            "4",
            "--out",
            "f.pgm",
        ],
    );
    let bytes = fs::read(p.join("f.pgm")).unwrap();
    assert!(bytes.starts_with(b"P5\n6 4\n255\n"));
}

fn pipeline(dir: &Path) {
    ok(
        dir,
        &[
            "simulate",
            "--grid",
            "15",
            "--samples",
            "120",
            "--t-end",
            "6",
            "--gamma",
            "0.2",
        ],
    );
    ok(
        dir,
        &["dmd", "snapshots.dmds", "--stack", "3", "--out-dir", "d"],
    );
    ok(
        dir,
        &[
            "verify",
            "d",
            "--grid",
            "15",
            "--max-freq",
            "3",
            "--out-dir",
            "d",
        ],
    );
    ok(
        dir,
        &[
            "render",
            "d/mode_000_abs.dmds",
            "--grid",
            "15",
            "--out",
            "d/m0.pgm",
        ],
    );
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    pipeline(a.path());
    pipeline(b.path());
    let mut names: Vec<_> = fs::read_dir(a.path().join("d"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() > 4);
    for name in names {
        let x = fs::read(a.path().join("d").join(&name)).unwrap();
        let y = fs::read(b.path().join("d").join(&name)).unwrap();
        assert!(x == y, "{name:?} differs");
    }
    for f in ["snapshots.dmds", "observable.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap()
        );
    }
    let powers: Vec<f64> = csv_rows(&a.path().join("d/spectrum.csv"))
        .iter()
        .map(|r| num(&r[5]))
        .collect();
    assert!(powers.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn square_membrane_end_to_end() {
    let tmp = TempDir::new().unwrap();
    let p = tmp.path();
    ok(p, &["simulate"]);
    ok(
        p,
        &[
            "dmd",
            "snapshots.dmds",
            "--stack",
            "10",
            "--power-floor",
            "0.01",
            "--out-dir",
            "d",
        ],
    );
    ok(p, &["verify", "d", "--max-freq", "5", "--out-dir", "d"]);

    let spectrum = csv_rows(&p.join("d/spectrum.csv"));
    let positive: Vec<f64> = spectrum
        .iter()
        .map(|r| num(&r[1]))
        .filter(|&f| f > 0.0)
        .collect();
    let near = |target: f64| {
        positive[..4]
            .iter()
            .any(|f| (f - target).abs() < 0.01 * target)
    };
    assert!(near(0.5 * 2f64.sqrt()) && near(0.5 * 5f64.sqrt()));

    let rows = csv_rows(&p.join("d/match.csv"));
    let good = rows
        .iter()
        .filter(|r| r[7] == "matched" && num(&r[4]) < 0.01)
        .count();
    assert!(good >= 10, "{good} matched rows under 1%");

    let reim = read_fields(p.join("d/mode_000_reim.dmds")).unwrap();
    let peak = reim
        .column(0)
        .iter()
        .zip(reim.column(1))
        .map(|(&re, &im)| c64::new(re, im).norm())
        .fold(0.0, f64::max);
    let abs = read_fields(p.join("d/mode_000_abs.dmds")).unwrap();
    assert!((abs.column(0).iter().copied().fold(0.0, f64::max) - peak).abs() < 1e-15);
}
