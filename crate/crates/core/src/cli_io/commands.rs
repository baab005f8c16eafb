//! The `simulate`, `fit`, `predict` and `design` commands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use super::config::RunConfig;
use super::fs::{output_dir, write_atomic};
use super::report::{fit_table, params_csv, read_params_csv, residuals_csv, summary_csv};
use super::sweep_csv::{read_sweep_file, write_sweep_file};
use super::timestamps::write_timestamps;
use crate::design::{
    combine_reductions, equal_car_power, onchip_rate, pl_reduction_composition, pl_reduction_wavelength,
    predict_car_curve, CouplingChain, DesignScenario,
};
use crate::error::{invalid, Error, Result};
use crate::estimation::{
    fit_lorentzian, fit_offset_power_law, fit_rate_model, fitted_lorentzian, source_from_vector, FitProblem,
    FitResult, RatePoint, RateModelKind, Weighting, LORENTZIAN,
};
use crate::model::{energy_to_wavelength, lorentzian_rate, wavelength_to_energy, LorentzianParams, NoiseModel, SourceParams};
use crate::montecarlo::{PumpMode, Simulator};
use crate::presets::{log_powers, Condition, FITTED_RESONANCE, REP_PERIOD};

#[derive(Debug, Parser)]
#[command(name = "pdc-noise", version, about = "Photon-pair source rates with photoluminescence noise")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo power sweep written as sweep.csv.
    Simulate(SimulateArgs),
    /// Fit a rate model, an offset power law or a Lorentzian.
    Fit(FitArgs),
    /// CAR-versus-power or resonance curves from fitted parameters.
    Predict(PredictArgs),
    /// Noise reduction and on-chip pair-rate estimates.
    Design(DesignArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct Common {
    /// Master seed; drawn from system entropy and reported when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: $PDC_NOISE_OUT, else the working directory].
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    NoFilterPulsed,
    Bandpass40Pulsed,
    NoFilterCw,
}

impl From<PresetArg> for Condition {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::NoFilterPulsed => Condition::NoFilterPulsed,
            PresetArg::Bandpass40Pulsed => Condition::Bandpass40Pulsed,
            PresetArg::NoFilterCw => Condition::NoFilterCw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    None,
    Powerlaw,
    Saturation,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Run configuration file (flat `section.key = value`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Parameter set used for anything the configuration leaves open.
    #[arg(long, value_enum, default_value = "no-filter-pulsed")]
    pub preset: PresetArg,
    /// Noise law of the preset.
    #[arg(long, value_enum, default_value = "saturation")]
    pub noise: NoiseArg,
    /// Comma-separated pump powers (µW).
    #[arg(long, value_delimiter = ',')]
    pub powers: Option<Vec<f64>>,
    /// Lowest power of a log-spaced sweep (µW) [default: 10]
    #[arg(long)]
    pub power_min: Option<f64>,
    /// Highest power of a log-spaced sweep (µW) [default: 2000]
    #[arg(long)]
    pub power_max: Option<f64>,
    /// Number of log-spaced powers [default: 12]
    #[arg(long)]
    pub points: Option<u64>,
    /// Acquisition time per point (s) [default: 1].
    #[arg(long)]
    pub duration: Option<f64>,
    /// Detection gate width (ns) on both channels.
    #[arg(long)]
    pub gate_ns: Option<f64>,
    /// Also write the raw detection times of every point.
    #[arg(long)]
    pub timestamps: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    None,
    Powerlaw,
    Saturation,
    OffsetPowerlaw,
    Lorentzian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    Poisson,
    Observed,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelArg {
    Signal,
    Idler,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// sweep.csv, or for `--model lorentzian` a `lambda_nm,a,a_stderr` table.
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Hold a parameter fixed, `name=value`; repeatable.
    #[arg(long = "fix", value_parser = parse_assignment)]
    pub fixed: Vec<(String, f64)>,
    /// Starting value, `name=value`; repeatable.
    #[arg(long = "guess", value_parser = parse_assignment)]
    pub guesses: Vec<(String, f64)>,
    /// Comma-separated powers (µW) or wavelengths (nm) to leave out.
    #[arg(long, value_delimiter = ',')]
    pub mask: Vec<f64>,
    #[arg(long, value_enum, default_value = "poisson")]
    pub weighting: WeightingArg,
    /// Coincidence window used when the sweep was counted (ns)
    /// [default: one 76.2 MHz period].
    #[arg(long)]
    pub tau_c_ns: Option<f64>,
    /// Singles channel for `--model offset-powerlaw`.
    #[arg(long, value_enum, default_value = "signal")]
    pub channel: ChannelArg,
    /// Stem of the output files.
    #[arg(long, default_value = "fit")]
    pub name: String,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    /// Parameter CSV written by `fit`.
    #[arg(long, conflicts_with = "params")]
    pub fit: Option<PathBuf>,
    /// Configuration file with a `source` and/or `lorentzian` section.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Comma-separated multipliers on the photoluminescence term.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub pl_scale: Vec<f64>,
    /// Gate width (ns) replacing the coincidence window.
    #[arg(long)]
    pub gate_ns: Option<f64>,
    /// Lowest power of the CAR curve (µW)
    #[arg(long, default_value_t = 1.0)]
    pub power_min: f64,
    #[arg(long, default_value_t = 1e4)]
    pub power_max: f64,
    /// Curve resolution.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long, default_value_t = 740.0)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 860.0)]
    pub lambda_max: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    /// Lorentzian parameter CSV from `fit --model lorentzian`
    /// [default: the fit of the built-in off-resonant data].
    #[arg(long)]
    pub resonance: Option<PathBuf>,
    #[arg(long, default_value_t = 767.0)]
    pub from_nm: f64,
    #[arg(long, default_value_t = 780.0)]
    pub to_nm: f64,
    #[arg(long, default_value_t = 0.20)]
    pub x_from: f64,
    #[arg(long, default_value_t = 0.22)]
    pub x_to: f64,
    /// Measured pair coefficient (pairs/s/µW).
    #[arg(long, default_value_t = 0.5e6)]
    pub xi: f64,
    /// Coupling chain, `name=transmission` pairs separated by commas.
    #[arg(long, value_delimiter = ',', value_parser = parse_assignment,
          default_value = "lens=0.70,in-coupling=0.35,mode=0.04")]
    pub chain: Vec<(String, f64)>,
    /// Laser power in front of the chip (µW).
    #[arg(long, default_value_t = 1000.0)]
    pub internal_power: f64,
    /// Photoluminescence multiplier of the improved device.
    #[arg(long, default_value_t = 0.1)]
    pub pl_scale: f64,
    /// Power (µW) whose CAR the improved device should match.
    #[arg(long, default_value_t = 100.0)]
    pub reference_power: f64,
    #[arg(long, value_enum, default_value = "no-filter-pulsed")]
    pub preset: PresetArg,
    #[arg(long, value_enum, default_value = "saturation")]
    pub noise: NoiseArg,
    #[command(flatten)]
    pub common: Common,
}

fn parse_assignment(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("'{v}' is not a number"))?;
    Ok((k.trim().to_string(), v))
}

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Text for standard output.
    pub message: String,
    /// False when a fit hit its iteration cap; reports are still written.
    pub converged: bool,
    pub seed: u64,
}

/// 2 for malformed requests, 3 for unusable data, 4 for fits that did not converge.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter(_) | Error::MissingParameters(_) => 2,
        Error::DivergedFit(_) => 4,
        _ => 3,
    }
}

/// Explicit seed, else configured seed, else fresh entropy. The flag tells
/// whether entropy was used.
pub fn resolve_seed(explicit: Option<u64>, configured: Option<u64>) -> (u64, bool) {
    match explicit.or(configured) {
        Some(s) => (s, false),
        None => (rand::rng().random(), true),
    }
}

fn seed_line(seed: u64, entropy: bool) -> String {
    if entropy {
        format!("seed {seed} (from entropy; pass --seed {seed} to reproduce)\n")
    } else {
        format!("seed {seed}\n")
    }
}

fn meta_text(command: &str, seed: u64, extra: &[(&str, String)]) -> String {
    let mut s = format!("command = {command}\nrun.seed = {seed}\nversion = {}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in extra {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

fn preset_source(preset: PresetArg, noise: NoiseArg) -> SourceParams {
    let c: Condition = preset.into();
    match noise {
        NoiseArg::None => c.noise_free(),
        NoiseArg::Powerlaw => c.power_law(),
        NoiseArg::Saturation => c.saturation(),
    }
}

fn source_entries(p: &SourceParams) -> Vec<(&'static str, String)> {
    let mut v = vec![
        ("source.xi", p.xi.to_string()),
        ("source.eta_s", p.eta_s.to_string()),
        ("source.eta_i", p.eta_i.to_string()),
        ("source.r_bg_hz", p.r_bg.to_string()),
        ("source.tau_c_ns", (p.tau_c * 1e9).to_string()),
    ];
    match p.noise {
        NoiseModel::None => v.push(("source.noise", "none".into())),
        NoiseModel::PowerLaw { gamma_p, alpha } => v.extend([
            ("source.noise", "powerlaw".into()),
            ("source.gamma_p", gamma_p.to_string()),
            ("source.alpha", alpha.to_string()),
        ]),
        NoiseModel::Saturation { gamma_s, beta } => v.extend([
            ("source.noise", "saturation".into()),
            ("source.gamma_s", gamma_s.to_string()),
            ("source.beta_ns", (beta * 1e9).to_string()),
        ]),
    }
    v
}

/// Power sweep of the configured (or preset) source. Writes `sweep.csv`,
/// `sweep.cfg` (the fully resolved configuration, seed included) and with
/// `--timestamps` two binary files per point.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<Outcome> {
    let file_cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::new(),
    };
    let mut cfg = RunConfig::new();
    let preset: Condition = args.preset.into();
    if !file_cfg.has_section("source") {
        for (k, v) in source_entries(&preset_source(args.preset, args.noise)) {
            cfg.set(k, &v)?;
        }
    }
    if !file_cfg.contains("pump.mode") {
        cfg.set("pump.mode", if preset.is_pulsed() { "pulsed" } else { "cw" })?;
    }
    cfg.merge(&file_cfg);
    if let Some(p) = &args.powers {
        let list: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        cfg.set("sweep.powers_uw", &list.join(","))?;
    }
    for (key, value) in [
        ("sweep.power_min_uw", args.power_min),
        ("sweep.power_max_uw", args.power_max),
        ("sweep.duration_s", args.duration),
        ("detector.gate_width_ns", args.gate_ns),
    ] {
        if let Some(v) = value {
            cfg.set(key, &v.to_string())?;
        }
    }
    if let Some(n) = args.points {
        cfg.set("sweep.points", &n.to_string())?;
    }
    if !cfg.contains("sweep.duration_s") {
        cfg.set("sweep.duration_s", "1")?;
    }
    if !cfg.contains("sweep.powers_uw") && !cfg.has_section("sweep") || cfg.powers()?.is_none() {
        let list: Vec<String> = log_powers(10.0, 2000.0, 12).iter().map(|x| x.to_string()).collect();
        cfg.set("sweep.powers_uw", &list.join(","))?;
    }

    let pump = cfg.pump(PumpMode::Pulsed);
    let det = cfg.detector(&pump)?;
    let source = cfg.source(&pump)?;
    let sim = Simulator::new(pump, source, det, det).with_options(cfg.sim_options()?);
    sim.validate()?;
    let powers = cfg.powers()?.expect("set above");
    let duration = cfg.f64("sweep.duration_s").expect("set above");
    let (seed, entropy) = resolve_seed(args.common.seed, file_cfg.seed());
    cfg.set("run.seed", &seed.to_string())?;
    let dir = output_dir(args.common.out.as_deref().or(file_cfg.output_dir().as_deref()));

    let records = sim.sweep(&powers, &[duration], seed)?;
    let mut files = Vec::new();
    if args.timestamps {
        for (k, &p) in powers.iter().enumerate() {
            let (s, i) = sim.point_streams(p, duration, seed, k)?;
            for (stream, tag) in [(s, "signal"), (i, "idler")] {
                let path = dir.join(format!("timestamps_{k:03}_{tag}.bin"));
                write_timestamps(&path, &stream)?;
                files.push(path);
            }
        }
    }
    let csv_path = dir.join("sweep.csv");
    write_sweep_file(&csv_path, &records)?;
    files.push(csv_path.clone());
    let cfg_path = dir.join("sweep.cfg");
    write_atomic(&cfg_path, cfg.to_text().as_bytes())?;
    files.push(cfg_path);

    let mut message = seed_line(seed, entropy);
    let _ = writeln!(message, "{} points x {duration} s -> {}", records.len(), csv_path.display());
    Ok(Outcome {
        files,
        message,
        converged: true,
        seed,
    })
}

fn read_generation_table(path: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let origin = path.display().to_string();
    let perr = |line: usize, msg: String| Error::Parse {
        path: origin.clone(),
        line,
        msg,
    };
    let mut rd = csv::Reader::from_path(path).map_err(|e| perr(0, e.to_string()))?;
    let header = rd.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    if header.iter().ne(["lambda_nm", "a", "a_stderr"]) {
        return Err(perr(1, "expected header 'lambda_nm,a,a_stderr'".to_string()));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(|e| perr(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let mut v = [0.0; 3];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = row[k]
                .trim()
                .parse()
                .map_err(|_| perr(line, format!("'{}' is not a number", &row[k])))?;
        }
        if !(v[0] > 0.0) {
            return Err(perr(line, format!("wavelength {} must be positive", v[0])));
        }
        out.push((v[0], v[1], v[2]));
    }
    Ok(out)
}

fn masked(x: f64, mask: &[f64]) -> bool {
    mask.iter().any(|m| (x - m).abs() <= 1e-9 * m.abs().max(1e-12))
}

/// Runs a fit and writes `<name>.txt`, `<name>_params.csv`,
/// `<name>_summary.csv` and `<name>_residuals.csv`. A fit that hits the
/// iteration cap still writes its reports and sets `converged = false`.
pub fn cmd_fit(args: &FitArgs) -> Result<Outcome> {
    let (seed, entropy) = resolve_seed(args.common.seed, None);
    let tau_c = args.tau_c_ns.map_or(REP_PERIOD, |t| t * 1e-9);
    if !(tau_c > 0.0) {
        return Err(invalid("--tau-c-ns must be positive"));
    }
    let fit: FitResult = match args.model {
        ModelArg::Lorentzian => {
            let rows: Vec<(f64, f64, f64)> = read_generation_table(&args.input)?
                .into_iter()
                .filter(|r| !masked(r.0, &args.mask))
                .map(|(l, a, s)| (wavelength_to_energy(l), a, s))
                .collect();
            fit_lorentzian(&rows)?
        }
        ModelArg::OffsetPowerlaw => {
            let data: Vec<RatePoint> = read_sweep_file(&args.input, tau_c)?
                .into_iter()
                .filter(|r| !masked(r.power, &args.mask))
                .map(|r| {
                    let counts = match args.channel {
                        ChannelArg::Signal => r.singles_s,
                        ChannelArg::Idler => r.singles_i,
                    };
                    RatePoint {
                        power: r.power,
                        rate: counts as f64 / r.duration,
                        counts,
                    }
                })
                .collect();
            fit_offset_power_law(&data, None)?
        }
        rate => {
            let kind = match rate {
                ModelArg::None => RateModelKind::NoNoise,
                ModelArg::Powerlaw => RateModelKind::PowerLaw,
                _ => RateModelKind::Saturation,
            };
            let data: Vec<_> = read_sweep_file(&args.input, tau_c)?
                .into_iter()
                .filter(|r| !masked(r.power, &args.mask))
                .collect();
            let mut problem = FitProblem::new(data, kind).weighting(match args.weighting {
                WeightingArg::Poisson => Weighting::Poisson,
                WeightingArg::Observed => Weighting::Observed,
                WeightingArg::Uniform => Weighting::Uniform,
            });
            problem.fixed = args.fixed.clone();
            problem.guesses = args.guesses.clone();
            fit_rate_model(&problem)?
        }
    };

    let dir = output_dir(args.common.out.as_deref());
    let stem = &args.name;
    let table = fit_table(&fit, seed);
    let outputs = [
        (format!("{stem}.txt"), table.clone()),
        (format!("{stem}_params.csv"), params_csv(&fit)),
        (format!("{stem}_summary.csv"), summary_csv(&fit, seed)),
        (format!("{stem}_residuals.csv"), residuals_csv(&fit)),
    ];
    let mut files = Vec::new();
    for (name, text) in outputs {
        let path = dir.join(name);
        write_atomic(&path, text.as_bytes())?;
        files.push(path);
    }
    Ok(Outcome {
        files,
        message: format!("{}{table}", seed_line(seed, entropy)),
        converged: fit.converged,
        seed,
    })
}

enum Loaded {
    Source(SourceParams),
    Resonance(LorentzianParams),
}

fn load_fit_params(path: &Path) -> Result<Loaded> {
    let (model, params) = read_params_csv(path)?;
    let lookup = |names: &[&str]| -> Result<Vec<f64>> {
        let missing: Vec<String> = names
            .iter()
            .filter(|n| !params.iter().any(|(p, _)| p == *n))
            .map(|n| n.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingParameters(missing));
        }
        Ok(names
            .iter()
            .map(|n| params.iter().find(|(p, _)| p == n).expect("checked").1)
            .collect())
    };
    if model == LORENTZIAN {
        let v = lookup(&["n", "sigma", "e_g"])?;
        return Ok(Loaded::Resonance(LorentzianParams {
            n: v[0],
            sigma: v[1],
            e_g: v[2],
        }));
    }
    let kind = RateModelKind::ALL
        .into_iter()
        .find(|k| k.name() == model)
        .ok_or_else(|| invalid(format!("cannot predict from a '{model}' fit")))?;
    let theta = lookup(&kind.param_names())?;
    Ok(Loaded::Source(source_from_vector(kind, &theta)))
}

/// CAR curves (`car_curve.csv`: `power_uW,pl_scale,car`) for a source, or
/// the resonance curve (`lorentzian_curve.csv`: `lambda_nm,A`).
pub fn cmd_predict(args: &PredictArgs) -> Result<Outcome> {
    let (seed, entropy) = resolve_seed(args.common.seed, None);
    let mut loaded = Vec::new();
    match (&args.fit, &args.params) {
        (Some(f), _) => loaded.push(load_fit_params(f)?),
        (None, Some(p)) => {
            let cfg = RunConfig::load(p)?;
            let (has_src, has_lor) = (cfg.has_section("source"), cfg.has_section("lorentzian"));
            if !has_src && !has_lor {
                return Err(Error::MissingParameters(vec!["source.*".into(), "lorentzian.*".into()]));
            }
            if has_src {
                loaded.push(Loaded::Source(cfg.source(&cfg.pump(PumpMode::Pulsed))?));
            }
            if has_lor {
                loaded.push(Loaded::Resonance(cfg.lorentzian()?));
            }
        }
        (None, None) => return Err(invalid("one of --fit or --params is required")),
    }
    if args.points == 0 {
        return Err(invalid("zero-length curve requested"));
    }
    let dir = output_dir(args.common.out.as_deref());
    let mut files = Vec::new();
    let mut message = seed_line(seed, entropy);
    for item in loaded {
        match item {
            Loaded::Source(base) => {
                if !(0.0 < args.power_min && args.power_min <= args.power_max) {
                    return Err(invalid("need 0 < power-min <= power-max"));
                }
                let powers = log_powers(args.power_min, args.power_max, args.points);
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["power_uW", "pl_scale", "car"]).expect("memory");
                for &scale in &args.pl_scale {
                    let mut sc = DesignScenario::new(base, format!("pl x{scale}")).with_pl_scale(scale);
                    if let Some(g) = args.gate_ns {
                        sc = sc.with_gate(g * 1e-9);
                    }
                    for (p, c) in predict_car_curve(&sc, &powers)? {
                        w.write_record([p.to_string(), scale.to_string(), c.to_string()]).expect("memory");
                    }
                }
                let path = dir.join("car_curve.csv");
                write_atomic(&path, &w.into_inner().expect("flush"))?;
                let _ = writeln!(message, "{} CAR curve(s) -> {}", args.pl_scale.len(), path.display());
                files.push(path);
            }
            Loaded::Resonance(lor) => {
                lor.validate()?;
                if !(0.0 < args.lambda_min && args.lambda_min <= args.lambda_max) {
                    return Err(invalid("need 0 < lambda-min <= lambda-max"));
                }
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["lambda_nm", "A"]).expect("memory");
                let n = args.points;
                for k in 0..n {
                    let l = if n == 1 {
                        args.lambda_min
                    } else {
                        args.lambda_min + (args.lambda_max - args.lambda_min) * k as f64 / (n - 1) as f64
                    };
                    w.write_record([l.to_string(), lorentzian_rate(&lor, wavelength_to_energy(l)).to_string()])
                        .expect("memory");
                }
                let path = dir.join("lorentzian_curve.csv");
                write_atomic(&path, &w.into_inner().expect("flush"))?;
                let _ = writeln!(
                    message,
                    "resonance at {:.4} eV ({:.1} nm) -> {}",
                    lor.e_g,
                    energy_to_wavelength(lor.e_g),
                    path.display()
                );
                files.push(path);
            }
        }
    }
    Ok(Outcome {
        files,
        message,
        converged: true,
        seed,
    })
}

/// Wavelength and composition noise reductions, the on-chip pair rate and
/// the power at which a cleaner device matches the reference CAR. Writes
/// `design.csv` (`quantity,value`).
pub fn cmd_design(args: &DesignArgs) -> Result<Outcome> {
    let (seed, entropy) = resolve_seed(args.common.seed, None);
    let lor = match &args.resonance {
        Some(p) => match load_fit_params(p)? {
            Loaded::Resonance(l) => l,
            Loaded::Source(_) => return Err(invalid("--resonance needs a Lorentzian fit")),
        },
        None => FITTED_RESONANCE,
    };
    let by_wavelength = pl_reduction_wavelength(&lor, args.from_nm, args.to_nm)?;
    let by_composition = pl_reduction_composition(&lor, args.x_from, args.x_to, args.to_nm)?;
    let total = combine_reductions(&[by_wavelength, by_composition]);
    let chain = CouplingChain {
        stages: args.chain.clone(),
    };
    let onchip = onchip_rate(args.xi, &chain, args.internal_power)?;
    let base = DesignScenario::new(preset_source(args.preset, args.noise), "baseline");
    let better = base.clone().with_pl_scale(args.pl_scale);
    let equal = equal_car_power(&base, &better, args.reference_power)?;

    let rows: Vec<(String, f64)> = vec![
        ("pl_reduction_wavelength".into(), by_wavelength),
        ("pl_reduction_composition".into(), by_composition),
        ("pl_reduction_total".into(), total),
        ("chain_transmission".into(), chain.transmission()),
        ("xi_true_pairs_per_s_uW".into(), onchip.xi_true),
        ("pair_rate_per_s".into(), onchip.pair_rate),
        ("equal_car_power_uW".into(), equal.unwrap_or(f64::NAN)),
    ];
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["quantity", "value"]).expect("memory");
    let mut message = seed_line(seed, entropy);
    for (k, v) in &rows {
        w.write_record([k.clone(), v.to_string()]).expect("memory");
        let _ = writeln!(message, "{k:<28} {v:.6e}");
    }
    let dir = output_dir(args.common.out.as_deref());
    let path = dir.join("design.csv");
    write_atomic(&path, &w.into_inner().expect("flush"))?;
    let meta = dir.join("design.meta");
    write_atomic(&meta, meta_text("design", seed, &[]).as_bytes())?;
    Ok(Outcome {
        files: vec![path, meta],
        message,
        converged: true,
        seed,
    })
}

/// Resonance fitted to a `lambda_nm,a,a_stderr` table.
pub fn resonance_from_table(path: &Path) -> Result<LorentzianParams> {
    let rows: Vec<(f64, f64, f64)> = read_generation_table(path)?
        .into_iter()
        .map(|(l, a, s)| (wavelength_to_energy(l), a, s))
        .collect();
    fitted_lorentzian(&fit_lorentzian(&rows)?)
}

/// Dispatches a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Design(a) => cmd_design(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(exit_code(&Error::InvalidParameter("x".into())), 2);
        assert_eq!(exit_code(&Error::MissingParameters(vec!["a".into()])), 2);
        assert_eq!(exit_code(&Error::DivergedFit("x".into())), 4);
        assert_eq!(exit_code(&Error::InsufficientData { points: 1, params: 2 }), 3);
        assert_eq!(exit_code(&Error::SingularJacobian { params: vec![] }), 3);
        assert_eq!(exit_code(&Error::Parse { path: "a".into(), line: 1, msg: "b".into() }), 3);
        assert_eq!(exit_code(&std::io::Error::other("x").into()), 3);
    }

    #[test]
    fn explicit_seed_wins_and_entropy_is_flagged() {
        assert_eq!(resolve_seed(Some(1), Some(2)), (1, false));
        assert_eq!(resolve_seed(None, Some(2)), (2, false));
        assert!(resolve_seed(None, None).1);
    }
}
