use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stochcell::intensity::{
    curve_3gpp_closed, default_fit_grid, default_x_max, multiball_objective,
};
use stochcell::{ChannelParams, MultiBallParams};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stochcell"))
}

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn simulate_writes_41_rows_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&[
        "simulate",
        "--iterations",
        "300",
        "--seed",
        "5",
        "--out",
        out,
    ]);
    ok(&o);
    let csv = read(dir.path().join("coverage.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("threshold_db,coverage,ci_halfwidth"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 41);
    assert!(rows[0].starts_with("-10,"));
    assert!(rows[40].starts_with("30,"));
    let meta = read(dir.path().join("coverage.meta"));
    assert!(meta.contains("seed=5") && meta.contains("iterations=300"));
    let resolved = read(dir.path().join("resolved.conf"));
    assert!(resolved.contains("sim.seed = 5"));
    let hash = meta
        .lines()
        .find_map(|l| l.strip_prefix("config_hash="))
        .unwrap();
    assert!(resolved.starts_with(&format!("# config_hash = {hash}")));
}

#[test]
fn results_do_not_depend_on_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = assets().join("simulate_3gpp.conf");
    for (dir, w) in [(&a, "1"), (&b, "3")] {
        ok(&run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--iterations",
            "500",
            "--workers",
            w,
            "--out",
            dir.path().to_str().unwrap(),
        ]));
    }
    assert_eq!(
        read(a.path().join("coverage.csv")),
        read(b.path().join("coverage.csv"))
    );
}

#[test]
fn missing_footprint_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        "--set",
        "buildings.file=/definitely/missing/city.txt",
        "--set",
        "blockage.model=empirical",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("/definitely/missing/city.txt"), "{err}");
    assert_eq!(err.trim().lines().count(), 1);
    assert!(!dir.path().join("coverage.csv").exists());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    std::fs::write(&cfg, "sim.seed = 3\nchannel.alpha = 3\n").unwrap();
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("bad.conf:2: unknown key `channel.alpha`"),
        "{err}"
    );

    let o = run(&[
        "simulate",
        "--set",
        "blockage.model=empirical",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("buildings.file"));
}

#[test]
fn gen_city_is_deterministic_and_on_target() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        ok(&run(&[
            "gen-city",
            "--seed",
            "17",
            "--out",
            d.path().to_str().unwrap(),
        ]));
    }
    let text = read(a.path().join("city.txt"));
    assert_eq!(text.as_bytes(), read(b.path().join("city.txt")).as_bytes());

    // shoelace areas of the written polygons
    let mut built = 0.0;
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        let n = v.len() / 2;
        let mut s = 0.0;
        for i in 0..n {
            let j = (i + 1) % n;
            s += v[2 * i] * v[2 * j + 1] - v[2 * j] * v[2 * i + 1];
        }
        built += 0.5 * s.abs();
    }
    let frac = built / 4e6;
    assert!((0.549..=0.569).contains(&frac), "{frac}");
}

#[test]
fn zero_fraction_city_is_empty() {
    let d = tempfile::tempdir().unwrap();
    ok(&run(&[
        "gen-city",
        "--set",
        "city.built_fraction=0",
        "--out",
        d.path().to_str().unwrap(),
    ]));
    let text = read(d.path().join("city.txt"));
    assert!(text.lines().all(|l| l.starts_with('#')));
}

#[test]
fn generated_city_feeds_los_estimation() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().to_str().unwrap();
    ok(&run(&[
        "gen-city",
        "--set",
        "region.x_max=500",
        "--set",
        "region.y_max=500",
        "--set",
        "city.built_fraction=0.3",
        "--out",
        out,
    ]));
    let city = d.path().join("city.txt");
    ok(&run(&[
        "estimate-los",
        "--set",
        &format!("buildings.file={}", city.display()),
        "--set",
        "region.x_max=500",
        "--set",
        "region.y_max=500",
        "--set",
        "los.trials=50",
        "--set",
        "los.m_t=300",
        "--out",
        out,
    ]));
    let csv = read(d.path().join("los_histogram.csv"));
    assert_eq!(csv.lines().next(), Some("r_m,p_los,n_samples"));
    assert_eq!(csv.lines().count(), 301);

    ok(&run(&[
        "fit-multiball",
        "--set",
        "fit.source=histogram",
        "--set",
        &format!(
            "fit.histogram={}",
            d.path().join("los_histogram.csv").display()
        ),
        "--set",
        "fit.range_m=300",
        "--set",
        "fit.restarts=2",
        "--set",
        "fit.n_balls=2",
        "--out",
        out,
    ]));
    assert!(read(d.path().join("multiball.params")).contains("q_los_3="));
}

#[test]
fn fit_multiball_bundled_config_beats_published_row() {
    let d = tempfile::tempdir().unwrap();
    let cfg = assets().join("fit_multiball_3gpp.conf");
    let o = run(&[
        "fit-multiball",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        d.path().to_str().unwrap(),
    ]);
    ok(&o);
    assert!(String::from_utf8_lossy(&o.stdout).contains("objective"));
    let params = read(d.path().join("multiball.params"));
    assert!(params.contains("n_balls=3") && params.contains("d_3=") && params.contains("q_los_4="));
    let objective: f64 = params
        .lines()
        .find_map(|l| l.strip_prefix("objective="))
        .unwrap()
        .parse()
        .unwrap();

    let ch = ChannelParams::urban_default();
    let actual = curve_3gpp_closed(&ch, 1e-4, &default_fit_grid(&ch)).unwrap();
    let published = multiball_objective(
        &actual,
        &ch,
        &MultiBallParams::three_gpp_fit(),
        default_x_max(&ch),
    )
    .unwrap();
    assert!(objective <= published, "{objective} > {published}");
}

#[test]
fn fit_multilobe_bundled_config() {
    let d = tempfile::tempdir().unwrap();
    let cfg = assets().join("fit_multilobe_3gpp.conf");
    ok(&run(&[
        "fit-multilobe",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        d.path().to_str().unwrap(),
    ]));
    let params = read(d.path().join("multilobe.params"));
    assert!(params.contains("k_lobes=4") && params.contains("theta_deg_3="));
}

#[test]
fn single_bs_config_matches_noise_limited_formula() {
    let d = tempfile::tempdir().unwrap();
    let cfg = assets().join("single_bs_noise_limited.conf");
    ok(&run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        d.path().to_str().unwrap(),
    ]));
    let ch = ChannelParams::urban_default();
    let noise = stochcell::channel::noise_power_watts(20e6, 10.0);
    let n = 100_000.0;
    for row in read(d.path().join("coverage.csv")).lines().skip(1) {
        let f: Vec<f64> = row.split(',').map(|t| t.parse().unwrap()).collect();
        let t = 10f64.powf(f[0] / 10.0);
        let want = (-t * noise * ch.nlos.kappa * 200f64.powf(3.5)).exp();
        let se = (want * (1.0 - want) / n).sqrt();
        assert!(
            (f[1] - want).abs() <= 3.0 * se,
            "T={} dB: {} vs {want}",
            f[0],
            f[1]
        );
    }
}

#[test]
fn suite_runs_bundled_comparison() {
    let d = tempfile::tempdir().unwrap();
    let cfg = assets().join("blockage_comparison_suite.conf");
    ok(&run(&[
        "suite",
        "--config",
        cfg.to_str().unwrap(),
        "--iterations",
        "400",
        "--out",
        d.path().to_str().unwrap(),
    ]));
    let index = read(d.path().join("suite.csv"));
    assert!(
        index.contains("\"PPP, 1-State (N), Omni\"") && index.contains("\"PPP, Empirical, Omni\"")
    );
    assert_eq!(index.lines().count(), 3);
}

#[test]
fn fixed_bs_file_outside_region_is_data_error() {
    let d = tempfile::tempdir().unwrap();
    let bs = d.path().join("bs.csv");
    std::fs::write(&bs, "id,x,y\n0,10,10\n1,5000,10\n").unwrap();
    let o = run(&[
        "simulate",
        "--set",
        "bs.placement=file",
        "--set",
        &format!("bs.file={}", bs.display()),
        "--out",
        d.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}
