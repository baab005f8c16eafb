//! Flat `section.key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! pump.mode = pulsed
//! source.noise = saturation
//! source.beta_ns = 8
//! sweep.powers_uw = 10, 20, 50
//! ```
//!
//! Keys are fixed; unknown or repeated keys and out-of-range values are
//! reported with their line number.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{LorentzianParams, NoiseModel, SourceParams, DEFAULT_DARK_RATE};
use crate::montecarlo::{DetectorConfig, Gate, PumpConfig, PumpMode, SimOptions};

#[derive(Debug, Clone, Copy)]
enum Kind {
    Positive,
    NonNegative,
    Fraction,
    Integer,
    Text,
    Choice(&'static [&'static str]),
    PositiveList,
    NonNegativeList,
}

const KEYS: &[(&str, Kind)] = &[
    ("run.seed", Kind::Integer),
    ("run.output_dir", Kind::Text),
    ("pump.mode", Kind::Choice(&["pulsed", "cw"])),
    ("pump.rep_rate_hz", Kind::Positive),
    ("pump.wavelength_nm", Kind::Positive),
    ("detector.dark_rate_hz", Kind::NonNegative),
    ("detector.dead_time_ns", Kind::NonNegative),
    ("detector.gate_width_ns", Kind::Positive),
    ("detector.gate_offset_ns", Kind::NonNegative),
    ("source.xi", Kind::NonNegative),
    ("source.eta_s", Kind::Fraction),
    ("source.eta_i", Kind::Fraction),
    ("source.r_bg_hz", Kind::NonNegative),
    ("source.tau_c_ns", Kind::Positive),
    ("source.noise", Kind::Choice(&["none", "powerlaw", "saturation"])),
    ("source.gamma_p", Kind::NonNegative),
    ("source.alpha", Kind::Positive),
    ("source.gamma_s", Kind::NonNegative),
    ("source.beta_ns", Kind::NonNegative),
    ("sweep.powers_uw", Kind::PositiveList),
    ("sweep.power_min_uw", Kind::Positive),
    ("sweep.power_max_uw", Kind::Positive),
    ("sweep.points", Kind::Integer),
    ("sweep.duration_s", Kind::Positive),
    ("sim.emitters", Kind::Integer),
    ("sim.pl_lifetime_ns", Kind::NonNegative),
    ("scenario.pl_scale", Kind::NonNegativeList),
    ("scenario.gate_ns", Kind::Positive),
    ("scenario.label", Kind::Text),
    ("lorentzian.n", Kind::Positive),
    ("lorentzian.sigma_ev", Kind::Positive),
    ("lorentzian.e_g_ev", Kind::Positive),
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    /// 0 for values set programmatically.
    line: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    origin: String,
    entries: BTreeMap<String, Entry>,
}

fn check_value(kind: Kind, value: &str) -> std::result::Result<(), String> {
    let num = |v: &str| -> std::result::Result<f64, String> {
        let x: f64 = v.trim().parse().map_err(|_| format!("'{v}' is not a number"))?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(format!("'{v}' is not finite"))
        }
    };
    match kind {
        Kind::Positive => (num(value)? > 0.0).then_some(()).ok_or_else(|| format!("{value} must be > 0")),
        Kind::NonNegative => (num(value)? >= 0.0).then_some(()).ok_or_else(|| format!("{value} must be >= 0")),
        Kind::Fraction => (0.0..=1.0)
            .contains(&num(value)?)
            .then_some(())
            .ok_or_else(|| format!("{value} must lie in [0, 1]")),
        Kind::Integer => value.parse::<u64>().map(|_| ()).map_err(|_| format!("'{value}' is not a non-negative integer")),
        Kind::Text => (!value.is_empty()).then_some(()).ok_or_else(|| "empty value".to_string()),
        Kind::Choice(options) => options
            .contains(&value)
            .then_some(())
            .ok_or_else(|| format!("'{value}' is not one of {}", options.join(", "))),
        Kind::PositiveList | Kind::NonNegativeList => {
            let strict = matches!(kind, Kind::PositiveList);
            let items: Vec<&str> = value.split(',').map(str::trim).collect();
            if items.iter().any(|s| s.is_empty()) {
                return Err("empty list item".to_string());
            }
            for item in items {
                let x = num(item)?;
                if (strict && x <= 0.0) || x < 0.0 {
                    return Err(format!("list item {item} out of range"));
                }
            }
            Ok(())
        }
    }
}

impl RunConfig {
    pub fn new() -> Self {
        RunConfig {
            origin: "<command line>".to_string(),
            entries: BTreeMap::new(),
        }
    }

    pub fn parse_str(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = RunConfig {
            origin: origin.to_string(),
            entries: BTreeMap::new(),
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse {
                path: origin.to_string(),
                line,
                msg,
            };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| perr(format!("expected 'section.key = value', found '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let kind = KEYS
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, kind)| *kind)
                .ok_or_else(|| perr(format!("unknown key '{key}'")))?;
            if let Some(prev) = cfg.entries.get(key) {
                return Err(perr(format!("'{key}' already set on line {}", prev.line)));
            }
            check_value(kind, value).map_err(|m| perr(format!("{key}: {m}")))?;
            cfg.entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text, &path.display().to_string())
    }

    /// Sets or replaces a value, validating it like a file entry. A bad
    /// value here is a usage error rather than a file error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let perr = |msg: String| Error::InvalidParameter(msg);
        let kind = KEYS
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, kind)| *kind)
            .ok_or_else(|| perr(format!("unknown key '{key}'")))?;
        check_value(kind, value).map_err(|m| perr(format!("{key}: {m}")))?;
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line: 0,
            },
        );
        Ok(())
    }

    /// Copies every entry of `other` over this one.
    pub fn merge(&mut self, other: &RunConfig) {
        for (k, e) in &other.entries {
            self.entries.insert(k.clone(), e.clone());
        }
    }

    /// `key = value` lines in key order; parses back to the same entries.
    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, e)| format!("{k} = {}\n", e.value)).collect()
    }

    pub fn origin(&self) -> &str {
        &self.origin
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn has_section(&self, section: &str) -> bool {
        let prefix = format!("{section}.");
        self.entries.keys().any(|k| k.starts_with(&prefix))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    /// Line of a key in the source file (0 when set programmatically).
    pub fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    // values were validated on insertion
    pub fn f64(&self, key: &str) -> Option<f64> {
        self.get(key).map(|v| v.parse().expect("validated number"))
    }

    pub fn u64(&self, key: &str) -> Option<u64> {
        self.get(key).map(|v| v.parse().expect("validated integer"))
    }

    pub fn list(&self, key: &str) -> Option<Vec<f64>> {
        self.get(key)
            .map(|v| v.split(',').map(|s| s.trim().parse().expect("validated number")).collect())
    }

    fn semantic(&self, key: &str, msg: String) -> Error {
        Error::Parse {
            path: self.origin.clone(),
            line: self.line(key).unwrap_or(0),
            msg,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        self.u64("run.seed")
    }

    pub fn output_dir(&self) -> Option<PathBuf> {
        self.get("run.output_dir").map(PathBuf::from)
    }

    pub fn pump(&self, default_mode: PumpMode) -> PumpConfig {
        let mode = match self.get("pump.mode") {
            Some("cw") => PumpMode::Cw,
            Some(_) => PumpMode::Pulsed,
            None => default_mode,
        };
        let mut pump = PumpConfig::pulsed(0.0);
        pump.mode = mode;
        if let Some(r) = self.f64("pump.rep_rate_hz") {
            pump.rep_rate = r;
        }
        if let Some(w) = self.f64("pump.wavelength_nm") {
            pump.wavelength = w;
        }
        pump
    }

    pub fn detector(&self, pump: &PumpConfig) -> Result<DetectorConfig> {
        let gate = self.f64("detector.gate_width_ns").map(|w| Gate {
            offset: self.f64("detector.gate_offset_ns").unwrap_or(0.0) * 1e-9,
            width: w * 1e-9,
        });
        if gate.is_none() && self.contains("detector.gate_offset_ns") {
            return Err(self.semantic("detector.gate_offset_ns", "gate offset given without a gate width".into()));
        }
        let det = DetectorConfig {
            dark_rate: self.f64("detector.dark_rate_hz").unwrap_or(DEFAULT_DARK_RATE),
            dead_time: self.f64("detector.dead_time_ns").unwrap_or(0.0) * 1e-9,
            gate,
        };
        det.validate(pump)
            .map_err(|e| self.semantic("detector.gate_width_ns", e.to_string()))?;
        Ok(det)
    }

    pub fn sim_options(&self) -> Result<SimOptions> {
        let mut o = SimOptions::default();
        if let Some(m) = self.u64("sim.emitters") {
            o.emitters = m as usize;
        }
        if let Some(l) = self.f64("sim.pl_lifetime_ns") {
            o.pl_lifetime = l * 1e-9;
        }
        o.validate().map_err(|e| self.semantic("sim.emitters", e.to_string()))?;
        Ok(o)
    }

    /// Source parameters from the `source` section; the window defaults to
    /// one pulse period of `pump`, the background to the dark rate.
    pub fn source(&self, pump: &PumpConfig) -> Result<SourceParams> {
        let mut missing = Vec::new();
        let mut need = |key: &str| -> f64 {
            self.f64(key).unwrap_or_else(|| {
                missing.push(key.to_string());
                f64::NAN
            })
        };
        let xi = need("source.xi");
        let eta_s = need("source.eta_s");
        let eta_i = need("source.eta_i");
        let noise = match self.get("source.noise").unwrap_or("none") {
            "powerlaw" => NoiseModel::PowerLaw {
                gamma_p: need("source.gamma_p"),
                alpha: need("source.alpha"),
            },
            "saturation" => NoiseModel::Saturation {
                gamma_s: need("source.gamma_s"),
                beta: need("source.beta_ns") * 1e-9,
            },
            _ => NoiseModel::None,
        };
        if !missing.is_empty() {
            return Err(Error::MissingParameters(missing));
        }
        let params = SourceParams {
            xi,
            eta_s,
            eta_i,
            r_bg: self.f64("source.r_bg_hz").unwrap_or(DEFAULT_DARK_RATE),
            tau_c: self
                .f64("source.tau_c_ns")
                .map(|t| t * 1e-9)
                .unwrap_or(1.0 / pump.rep_rate),
            noise,
        };
        params.validate().map_err(|e| self.semantic("source.noise", e.to_string()))?;
        Ok(params)
    }

    pub fn lorentzian(&self) -> Result<LorentzianParams> {
        let keys = ["lorentzian.n", "lorentzian.sigma_ev", "lorentzian.e_g_ev"];
        let missing: Vec<String> = keys.iter().filter(|k| !self.contains(k)).map(|k| k.to_string()).collect();
        if !missing.is_empty() {
            return Err(Error::MissingParameters(missing));
        }
        Ok(LorentzianParams {
            n: self.f64(keys[0]).expect("present"),
            sigma: self.f64(keys[1]).expect("present"),
            e_g: self.f64(keys[2]).expect("present"),
        })
    }

    /// Explicit power list, else a log-spaced range, else `None`.
    pub fn powers(&self) -> Result<Option<Vec<f64>>> {
        if let Some(list) = self.list("sweep.powers_uw") {
            return Ok(Some(list));
        }
        match (self.f64("sweep.power_min_uw"), self.f64("sweep.power_max_uw"), self.u64("sweep.points")) {
            (None, None, None) => Ok(None),
            (Some(lo), Some(hi), Some(n)) => {
                if !(lo < hi) || n < 2 {
                    return Err(self.semantic("sweep.points", "need power_min_uw < power_max_uw and at least 2 points".into()));
                }
                Ok(Some(crate::presets::log_powers(lo, hi, n as usize)))
            }
            _ => Err(Error::MissingParameters(
                ["sweep.power_min_uw", "sweep.power_max_uw", "sweep.points"]
                    .iter()
                    .filter(|k| !self.contains(k))
                    .map(|k| k.to_string())
                    .collect(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# pulsed saturation source
pump.mode = pulsed
source.xi = 0.78e6      # pairs/s/uW
source.eta_s = 1.9e-4
source.eta_i = 1.5e-4
source.noise = saturation
source.gamma_s = 0.4e6
source.beta_ns = 8

sweep.powers_uw = 10, 100, 1000
sweep.duration_s = 2
run.seed = 7
";

    #[test]
    fn parses_sample() {
        let cfg = RunConfig::parse_str(SAMPLE, "s.cfg").unwrap();
        let pump = cfg.pump(PumpMode::Cw);
        assert_eq!(pump.mode, PumpMode::Pulsed);
        let src = cfg.source(&pump).unwrap();
        assert_eq!(src.xi, 0.78e6);
        assert_eq!(src.noise, NoiseModel::Saturation { gamma_s: 0.4e6, beta: 8e-9 });
        assert_eq!(src.r_bg, 300.0);
        assert_eq!(src.tau_c, 1.0 / 76.2e6);
        assert_eq!(cfg.powers().unwrap().unwrap(), vec![10.0, 100.0, 1000.0]);
        assert_eq!(cfg.seed(), Some(7));
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = RunConfig::parse_str("pump.mode = cw\n\nsource.colour = red\n", "bad.cfg").unwrap_err();
        match err {
            Error::Parse { line, msg, path } => {
                assert_eq!(line, 3);
                assert_eq!(path, "bad.cfg");
                assert!(msg.contains("source.colour"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn invalid_values_report_line() {
        for (text, line) in [
            ("sweep.duration_s = 0\n", 1),
            ("pump.mode = pulsed\nsource.eta_s = 1.5\n", 2),
            ("pump.mode = laser\n", 1),
            ("sweep.powers_uw = 1, , 3\n", 1),
            ("source.xi 5\n", 1),
            ("run.seed = 1\nrun.seed = 2\n", 2),
        ] {
            match RunConfig::parse_str(text, "x") {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn missing_source_parameters_are_named() {
        let cfg = RunConfig::parse_str("source.noise = powerlaw\nsource.xi = 1\n", "x").unwrap();
        match cfg.source(&PumpConfig::pulsed(0.0)).unwrap_err() {
            Error::MissingParameters(names) => {
                assert_eq!(names, vec!["source.eta_s", "source.eta_i", "source.gamma_p", "source.alpha"]);
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn gate_in_cw_mode_is_reported() {
        let cfg = RunConfig::parse_str("pump.mode = cw\ndetector.gate_width_ns = 1.13\n", "x").unwrap();
        let pump = cfg.pump(PumpMode::Pulsed);
        assert!(matches!(cfg.detector(&pump), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn log_range_powers() {
        let cfg = RunConfig::parse_str("sweep.power_min_uw = 10\nsweep.power_max_uw = 1000\nsweep.points = 3\n", "x").unwrap();
        let p = cfg.powers().unwrap().unwrap();
        assert_eq!(p.len(), 3);
        assert!((p[1] - 100.0).abs() < 1e-9);
        let partial = RunConfig::parse_str("sweep.points = 3\n", "x").unwrap();
        assert!(matches!(partial.powers(), Err(Error::MissingParameters(_))));
    }
}
