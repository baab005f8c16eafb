use rayon::prelude::*;

use super::coincidence::{CoincidenceCounter, PairingRule};
use super::config::{DetectorConfig, PumpConfig, SimOptions};
use super::sources::{emitter_ensemble, substream, Emitted, PoissonSource, Routing, Source};
use super::stream::{in_gate, DeadTimeFilter, EventStream};
use crate::error::{invalid, Result};
use crate::model::{noise_rate, singles_with_noise, Channel, NoiseModel, SourceParams};

const PAIR_ID: u64 = 0;
const DARK_S_ID: u64 = 1;
const DARK_I_ID: u64 = 2;
const POWER_LAW_ID: u64 = 3;
const EMITTER_BASE_ID: u64 = 16;

/// Counts of one power-sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    /// Average pump power (µW).
    pub power: f64,
    /// Acquisition time (s).
    pub duration: f64,
    /// Detection gate width (s), `None` when ungated.
    pub gate: Option<f64>,
    /// Coincidence window used for counting (s).
    pub tau_c: f64,
    pub singles_s: u64,
    pub singles_i: u64,
    pub coincidences: u64,
}

impl SweepRecord {
    pub fn r_s(&self) -> f64 {
        self.singles_s as f64 / self.duration
    }

    pub fn r_i(&self) -> f64 {
        self.singles_i as f64 / self.duration
    }

    pub fn r_c(&self) -> f64 {
        self.coincidences as f64 / self.duration
    }
}

/// Physical configuration of a simulated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulator {
    pub pump: PumpConfig,
    pub source: SourceParams,
    pub det_s: DetectorConfig,
    pub det_i: DetectorConfig,
    pub options: SimOptions,
}

/// Generates the two merged, filtered detection sequences in time blocks.
struct BlockDriver {
    sources: Vec<Box<dyn Source>>,
    pending: Emitted,
    slack: f64,
    period: Option<f64>,
    dead_s: DeadTimeFilter,
    dead_i: DeadTimeFilter,
    det_s: DetectorConfig,
    det_i: DetectorConfig,
}

impl BlockDriver {
    /// Fills `s` and `i` with the sorted, filtered events in `[start, end)`.
    fn next_block(&mut self, end: f64, s: &mut Vec<f64>, i: &mut Vec<f64>) {
        let horizon = end + self.slack;
        for src in self.sources.iter_mut() {
            src.advance(horizon, &mut self.pending);
        }
        s.clear();
        i.clear();
        split_before(&mut self.pending.signal, end, s);
        split_before(&mut self.pending.idler, end, i);
        // each source emits in time order, so the block is a handful of
        // sorted runs; the stable sort merges runs
        s.sort_by(f64::total_cmp);
        i.sort_by(f64::total_cmp);
        self.dead_s.retain(s);
        self.dead_i.retain(i);
        if let Some(period) = self.period {
            if let Some(g) = self.det_s.gate {
                s.retain(|&t| in_gate(t, &g, period));
            }
            if let Some(g) = self.det_i.gate {
                i.retain(|&t| in_gate(t, &g, period));
            }
        }
    }
}

/// Moves every element below `end` into `out`; negative times are dropped.
fn split_before(pending: &mut Vec<f64>, end: f64, out: &mut Vec<f64>) {
    pending.retain(|&t| {
        if t < end {
            if t >= 0.0 {
                out.push(t);
            }
            false
        } else {
            true
        }
    });
}

impl Simulator {
    pub fn new(pump: PumpConfig, source: SourceParams, det_s: DetectorConfig, det_i: DetectorConfig) -> Self {
        Simulator {
            pump,
            source,
            det_s,
            det_i,
            options: SimOptions::default(),
        }
    }

    pub fn with_options(mut self, options: SimOptions) -> Self {
        self.options = options;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.pump.validate()?;
        self.source.validate()?;
        self.det_s.validate(&self.pump)?;
        self.det_i.validate(&self.pump)?;
        self.options.validate()?;
        if self.source.eta_s + self.source.eta_i > 1.0 {
            return Err(invalid(
                "eta_s + eta_i must not exceed 1: a noise photon reaches at most one detector",
            ));
        }
        Ok(())
    }

    fn sources(&self, power: f64, seed: u64, point: usize) -> Vec<Box<dyn Source>> {
        let src = &self.source;
        let snap = self.pump.period();
        let mut out: Vec<Box<dyn Source>> = Vec::new();

        let (pair_routing, p_pair) = Routing::pair(src.eta_s, src.eta_i);
        out.push(Box::new(PoissonSource::new(
            substream(seed, point, PAIR_ID),
            src.xi * power * p_pair,
            pair_routing,
            snap,
            0.0,
        )));
        out.push(Box::new(PoissonSource::new(
            substream(seed, point, DARK_S_ID),
            self.det_s.dark_rate,
            Routing::signal_only(),
            None,
            0.0,
        )));
        out.push(Box::new(PoissonSource::new(
            substream(seed, point, DARK_I_ID),
            self.det_i.dark_rate,
            Routing::idler_only(),
            None,
            0.0,
        )));

        let (pl_routing, p_pl) = Routing::single(src.eta_s, src.eta_i);
        match src.noise {
            NoiseModel::None => {}
            NoiseModel::PowerLaw { .. } => out.push(Box::new(PoissonSource::new(
                substream(seed, point, POWER_LAW_ID),
                noise_rate(&src.noise, power) * p_pl,
                pl_routing,
                snap,
                self.options.pl_lifetime,
            ))),
            NoiseModel::Saturation { gamma_s, beta } => out.extend(emitter_ensemble(
                seed,
                point,
                EMITTER_BASE_ID,
                self.options.emitters,
                gamma_s * power,
                beta,
                pl_routing,
                p_pl,
                snap,
            )),
        }
        out
    }

    fn driver(&self, power: f64, seed: u64, point: usize) -> BlockDriver {
        BlockDriver {
            sources: self.sources(power, seed, point),
            pending: Emitted::default(),
            slack: self.pump.period().unwrap_or(0.0),
            period: self.pump.period(),
            dead_s: DeadTimeFilter::new(self.det_s.dead_time),
            dead_i: DeadTimeFilter::new(self.det_i.dead_time),
            det_s: self.det_s,
            det_i: self.det_i,
        }
    }

    fn block_length(&self, power: f64, duration: f64) -> f64 {
        let f = noise_rate(&self.source.noise, power);
        let expected = singles_with_noise(&self.source, Channel::Signal, power, f)
            + singles_with_noise(&self.source, Channel::Idler, power, f)
            + self.det_s.dark_rate
            + self.det_i.dark_rate;
        let min_len = 1000.0 * self.pump.period().unwrap_or(1e-8);
        (self.options.block_events as f64 / expected.max(1e-300))
            .max(min_len)
            .min(duration)
    }

    /// Full detection streams of both channels at the pump's average power.
    pub fn streams(&self, duration: f64, seed: u64) -> Result<(EventStream, EventStream)> {
        self.point_streams(self.pump.average_power, duration, seed, 0)
    }

    /// The streams behind sweep point `point`: the same realisation that
    /// [`Simulator::count_point`] counts for the same arguments.
    pub fn point_streams(&self, power: f64, duration: f64, seed: u64, point: usize) -> Result<(EventStream, EventStream)> {
        self.validate()?;
        check_duration(duration)?;
        if !(power >= 0.0 && power.is_finite()) {
            return Err(invalid(format!("power must be >= 0, got {power}")));
        }
        let mut drv = self.driver(power, seed, point);
        let step = self.block_length(power, duration);
        let (mut all_s, mut all_i) = (Vec::new(), Vec::new());
        let (mut s, mut i) = (Vec::new(), Vec::new());
        let mut end = 0.0;
        while end < duration {
            end = (end + step).min(duration);
            drv.next_block(end, &mut s, &mut i);
            all_s.extend_from_slice(&s);
            all_i.extend_from_slice(&i);
        }
        Ok((
            EventStream::new(Channel::Signal, duration, all_s),
            EventStream::new(Channel::Idler, duration, all_i),
        ))
    }

    /// Singles and coincidence counts at `power` without keeping the streams.
    /// Coincidences are counted with [`PairingRule::AllPairs`].
    pub fn count_point(&self, power: f64, duration: f64, seed: u64, point: usize) -> Result<SweepRecord> {
        check_duration(duration)?;
        if !(power >= 0.0 && power.is_finite()) {
            return Err(invalid(format!("power must be >= 0, got {power}")));
        }
        let mut drv = self.driver(power, seed, point);
        let step = self.block_length(power, duration);
        let mut counter = CoincidenceCounter::with_rule(self.source.tau_c, 0.0, PairingRule::AllPairs);
        let (mut s, mut i) = (Vec::new(), Vec::new());
        let (mut ns, mut ni) = (0u64, 0u64);
        let mut end = 0.0;
        while end < duration {
            end = (end + step).min(duration);
            drv.next_block(end, &mut s, &mut i);
            ns += s.len() as u64;
            ni += i.len() as u64;
            counter.push(&s, &i);
        }
        Ok(SweepRecord {
            power,
            duration,
            gate: self.det_s.gate.map(|g| g.width),
            tau_c: self.source.tau_c,
            singles_s: ns,
            singles_i: ni,
            coincidences: counter.count(),
        })
    }

    /// One record per power, each point on its own RNG substream derived
    /// from `seed` and the point index. `durations` holds either one value
    /// for all points or one per point.
    pub fn sweep(&self, powers: &[f64], durations: &[f64], seed: u64) -> Result<Vec<SweepRecord>> {
        self.validate()?;
        if powers.is_empty() {
            return Err(invalid("power list is empty"));
        }
        let dur = |k: usize| -> Result<f64> {
            match durations.len() {
                1 => Ok(durations[0]),
                n if n == powers.len() => Ok(durations[k]),
                n => Err(invalid(format!(
                    "{n} durations given for {} powers",
                    powers.len()
                ))),
            }
        };
        let jobs: Vec<(usize, f64, f64)> = powers
            .iter()
            .enumerate()
            .map(|(k, &p)| dur(k).map(|d| (k, p, d)))
            .collect::<Result<_>>()?;
        jobs.into_par_iter()
            .map(|(k, p, d)| self.count_point(p, d, seed, k))
            .collect()
    }
}

fn check_duration(duration: f64) -> Result<()> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(invalid(format!("duration must be > 0, got {duration}")));
    }
    Ok(())
}

/// Detection streams of both channels; see [`Simulator::streams`].
pub fn simulate_streams(
    pump: &PumpConfig,
    source: &SourceParams,
    det_s: &DetectorConfig,
    det_i: &DetectorConfig,
    duration: f64,
    seed: u64,
) -> Result<(EventStream, EventStream)> {
    Simulator::new(*pump, *source, *det_s, *det_i).streams(duration, seed)
}

/// Power sweep; see [`Simulator::sweep`].
pub fn simulate_sweep(
    pump: &PumpConfig,
    source: &SourceParams,
    det_s: &DetectorConfig,
    det_i: &DetectorConfig,
    powers: &[f64],
    durations: &[f64],
    seed: u64,
) -> Result<Vec<SweepRecord>> {
    Simulator::new(*pump, *source, *det_s, *det_i).sweep(powers, durations, seed)
}
