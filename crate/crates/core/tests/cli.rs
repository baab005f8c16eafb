use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_pdc-noise");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env_remove("PDC_NOISE_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn simulate(dir: &Path, seed: &str) -> Output {
    run(
        dir,
        &["simulate", "--powers", "10,20,50,100,200,500,1000,1500,2000", "--duration", "0.5", "--seed", seed, "-o", "."],
    )
}

#[test]
fn simulate_is_reproducible_from_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&simulate(a.path(), "11")), 0);
    assert_eq!(code(&simulate(b.path(), "11")), 0);
    let ca = fs::read(a.path().join("sweep.csv")).unwrap();
    assert_eq!(ca, fs::read(b.path().join("sweep.csv")).unwrap());
    let text = String::from_utf8(ca.clone()).unwrap();
    assert!(text.starts_with("power_uW,duration_s,gate_ns,singles_s,singles_i,coincidences\n"));

    assert_eq!(code(&simulate(b.path(), "12")), 0);
    assert_ne!(ca, fs::read(b.path().join("sweep.csv")).unwrap());
}

#[test]
fn entropy_seed_is_echoed_and_replays() {
    let a = tempfile::tempdir().unwrap();
    let o = run(a.path(), &["simulate", "--powers", "100,1000", "--duration", "0.2", "-o", "."]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cfg = fs::read_to_string(a.path().join("sweep.cfg")).unwrap();
    let seed = cfg
        .lines()
        .find_map(|l| l.strip_prefix("run.seed = "))
        .expect("seed recorded")
        .to_string();
    assert!(String::from_utf8_lossy(&o.stdout).contains(&seed));

    // the recorded configuration alone reproduces the run
    let b = tempfile::tempdir().unwrap();
    fs::copy(a.path().join("sweep.cfg"), b.path().join("run.cfg")).unwrap();
    let o = run(b.path(), &["simulate", "--config", "run.cfg", "-o", "."]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        fs::read(a.path().join("sweep.csv")).unwrap(),
        fs::read(b.path().join("sweep.csv")).unwrap()
    );
}

#[test]
fn zero_duration_is_rejected_before_writing() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["simulate", "--duration", "0", "--seed", "1", "-o", "."]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("duration"));
    assert_eq!(fs::read_dir(d.path()).unwrap().count(), 0);
}

#[test]
fn usage_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(d.path(), &["frobnicate"])), 2);
    assert_eq!(code(&run(d.path(), &["fit"])), 2);
    assert_eq!(code(&run(d.path(), &["fit", "x.csv", "--model", "bogus"])), 2);
    assert_eq!(code(&run(d.path(), &["--help"])), 0);
}

#[test]
fn bad_config_reports_line() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("bad.cfg"), "# comment\nsweep.duration_s = 1\nsource.xi = banana\n").unwrap();
    let o = run(d.path(), &["simulate", "--config", "bad.cfg", "--seed", "1", "-o", "."]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("bad.cfg:3:"), "{}", stderr(&o));
}

#[test]
fn fit_writes_reports_and_honours_mask() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        d.path(),
        &["simulate", "--powers", "10,20,50,100,200,500,1000,1500,2000", "--duration", "5", "--seed", "5", "-o", "."],
    );
    assert_eq!(code(&o), 0);
    let o = run(d.path(), &["fit", "sweep.csv", "--model", "saturation", "--seed", "1", "-o", "."]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["fit.txt", "fit_params.csv", "fit_summary.csv", "fit_residuals.csv"] {
        assert!(d.path().join(f).exists(), "{f}");
    }
    let full = fs::read_to_string(d.path().join("fit_residuals.csv")).unwrap().lines().count();

    let o = run(
        d.path(),
        &["fit", "sweep.csv", "--model", "saturation", "--mask", "2000", "--name", "masked", "--seed", "1", "-o", "."],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let masked = fs::read_to_string(d.path().join("masked_residuals.csv")).unwrap().lines().count();
    assert_eq!(full - masked, 3);

    // parameters feed straight into predict
    let o = run(d.path(), &["predict", "--fit", "fit_params.csv", "--pl-scale", "1,0.1", "--points", "7", "-o", "."]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let curve = fs::read_to_string(d.path().join("car_curve.csv")).unwrap();
    assert!(curve.starts_with("power_uW,pl_scale,car\n"));
    assert_eq!(curve.lines().count(), 1 + 14);
}

#[test]
fn fit_data_errors_exit_3() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["fit", "missing.csv", "--model", "none"]);
    assert_eq!(code(&o), 3);

    fs::write(
        d.path().join("s.csv"),
        "power_uW,duration_s,gate_ns,singles_s,singles_i,coincidences\n10,1,0,5,5,1\n20,1,0,x,5,1\n",
    )
    .unwrap();
    let o = run(d.path(), &["fit", "s.csv", "--model", "none"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("s.csv:3"), "{}", stderr(&o));

    // two points cannot determine four free parameters
    fs::write(
        d.path().join("short.csv"),
        "power_uW,duration_s,gate_ns,singles_s,singles_i,coincidences\n10,1,0,500,400,1\n20,1,0,1000,800,3\n",
    )
    .unwrap();
    let o = run(d.path(), &["fit", "short.csv", "--model", "none", "-o", "."]);
    assert_eq!(code(&o), 3);
    assert!(!d.path().join("fit.txt").exists());
}

#[test]
fn predict_lists_missing_parameters() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("p.cfg"), "source.xi = 5e5\nsource.eta_s = 2e-4\nsource.noise = powerlaw\n").unwrap();
    let o = run(d.path(), &["predict", "--params", "p.cfg", "-o", "."]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("source.eta_i") && err.contains("source.gamma_p"), "{err}");

    let o = run(d.path(), &["predict", "--params", "p.cfg", "--points", "0", "-o", "."]);
    assert_eq!(code(&o), 2);
}

#[test]
fn lorentzian_fit_and_curve() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("gen.csv"),
        "lambda_nm,a,a_stderr\n760,1800,300\n763,1130,150\n775,360,50\n800,87,13\n850,27,10\n",
    )
    .unwrap();
    let o = run(d.path(), &["fit", "gen.csv", "--model", "lorentzian", "--name", "lor", "--seed", "3", "-o", "."]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(d.path(), &["predict", "--fit", "lor_params.csv", "--points", "11", "-o", "."]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(d.path().join("lorentzian_curve.csv")).unwrap();
    assert!(text.starts_with("lambda_nm,A\n"));
    let o = run(d.path(), &["design", "--resonance", "lor_params.csv", "--seed", "3", "-o", "."]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn design_and_output_dir_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("results");
    let o = Command::new(BIN)
        .args(["design", "--seed", "9"])
        .current_dir(d.path())
        .env("PDC_NOISE_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(out.join("design.csv")).unwrap();
    assert!(text.starts_with("quantity,value\n"));
    assert!(text.contains("pl_reduction_total,"));

    let o = run(d.path(), &["design", "--chain", "lens=0.7,broken=0", "-o", "."]);
    assert_eq!(code(&o), 2);
}

#[test]
fn timestamps_are_written_per_point() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        d.path(),
        &["simulate", "--powers", "100,200", "--duration", "0.05", "--timestamps", "--seed", "2", "-o", "."],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let bytes = fs::read(d.path().join("timestamps_001_idler.bin")).unwrap();
    assert_eq!(&bytes[..8], b"PDCTIME1");
    assert_eq!((bytes.len() - 16) % 8, 0);
}
