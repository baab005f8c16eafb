//! Event generators for the individual light and noise sources.
//!
//! Every generator produces events in non-decreasing *release* time and
//! guarantees that a timestamp never precedes its release time by more than
//! one pump period. The block driver relies on that bound to emit complete,
//! sorted chunks without holding whole streams in memory.
//!
//! Only detected photons are generated. Undetected pairs and emissions are
//! skipped analytically by thinning, so the cost scales with the number of
//! detector clicks rather than with the photon flux inside the waveguide.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};

use super::stream::pulse_floor;

/// Per-channel output buffers of one generation step.
#[derive(Debug, Default)]
pub(crate) struct Emitted {
    pub signal: Vec<f64>,
    pub idler: Vec<f64>,
}

pub(crate) trait Source: Send {
    /// Generates every event released before `horizon`.
    fn advance(&mut self, horizon: f64, out: &mut Emitted);
}

/// Independent RNG substream for one source of one sweep point.
pub(crate) fn substream(seed: u64, point: usize, source_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((point as u64) << 24) | source_id);
    rng
}

fn exp(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    let x: f64 = Exp1.sample(rng);
    x * mean
}

/// Where a detected photon (or pair) ends up.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Routing {
    /// Cumulative probabilities of {both, signal only}; the rest is idler only.
    both: f64,
    both_or_signal: f64,
}

impl Routing {
    pub fn signal_only() -> Self {
        Routing { both: 0.0, both_or_signal: 1.0 }
    }

    pub fn idler_only() -> Self {
        Routing { both: 0.0, both_or_signal: 0.0 }
    }

    /// Detection of a pair: each photon independently with its efficiency.
    /// Returns the routing conditioned on at least one detection and the
    /// probability of that condition.
    pub fn pair(eta_s: f64, eta_i: f64) -> (Self, f64) {
        let p_any = 1.0 - (1.0 - eta_s) * (1.0 - eta_i);
        if p_any <= 0.0 {
            return (Routing::signal_only(), 0.0);
        }
        let both = eta_s * eta_i / p_any;
        let signal = eta_s * (1.0 - eta_i) / p_any;
        (Routing { both, both_or_signal: both + signal }, p_any)
    }

    /// A single uncorrelated photon reaches the signal detector with
    /// `eta_s`, the idler detector with `eta_i`, never both.
    pub fn single(eta_s: f64, eta_i: f64) -> (Self, f64) {
        let p_any = (eta_s + eta_i).min(1.0);
        if p_any <= 0.0 {
            return (Routing::signal_only(), 0.0);
        }
        (Routing { both: 0.0, both_or_signal: eta_s / (eta_s + eta_i) }, p_any)
    }

    fn route(&self, rng: &mut ChaCha8Rng, t: f64, out: &mut Emitted) {
        let u: f64 = rng.random();
        if u < self.both {
            out.signal.push(t);
            out.idler.push(t);
        } else if u < self.both_or_signal {
            out.signal.push(t);
        } else {
            out.idler.push(t);
        }
    }
}

/// Homogeneous Poisson process of detected events.
///
/// With `snap` set, the event is realised at the preceding pump pulse; a
/// Poisson process snapped to the pulse grid has independent Poisson counts
/// per pulse, which is exactly the pulsed multi-pair statistics. An optional
/// exponential delay models radiative decay after excitation.
pub(crate) struct PoissonSource {
    rng: ChaCha8Rng,
    mean_gap: f64,
    next: f64,
    routing: Routing,
    snap: Option<f64>,
    mean_delay: f64,
}

impl PoissonSource {
    pub fn new(
        mut rng: ChaCha8Rng,
        rate: f64,
        routing: Routing,
        snap: Option<f64>,
        mean_delay: f64,
    ) -> Self {
        let (mean_gap, next) = if rate > 0.0 {
            let gap = 1.0 / rate;
            (gap, exp(&mut rng, gap))
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        PoissonSource {
            rng,
            mean_gap,
            next,
            routing,
            snap,
            mean_delay,
        }
    }
}

impl Source for PoissonSource {
    fn advance(&mut self, horizon: f64, out: &mut Emitted) {
        while self.next < horizon {
            let excitation = match self.snap {
                Some(period) => pulse_floor(self.next, period),
                None => self.next,
            };
            let t = if self.mean_delay > 0.0 {
                excitation + exp(&mut self.rng, self.mean_delay)
            } else {
                excitation
            };
            self.routing.route(&mut self.rng, t, out);
            self.next += exp(&mut self.rng, self.mean_gap);
        }
    }
}

/// One saturable emitter of a photoluminescence ensemble.
///
/// The emitter cycles through idle (excitation attempts at `rate`), excited
/// (radiative delay ~ Exp(`lifetime`), then emission) and blocked (fixed
/// `block` after emission). Attempts while excited or blocked are lost. An
/// ensemble of `M` such emitters, each driven at `λ/M` with
/// `block = (M − 1)·lifetime`, emits at exactly `λ / (1 + λ·lifetime)`.
///
/// Emissions are thinned with detection probability `q` by drawing the
/// number of cycles to the next detected one from a geometric law and the
/// summed idle and delay times from gamma laws.
pub(crate) struct SaturableEmitter {
    rng: ChaCha8Rng,
    rate: f64,
    lifetime: f64,
    block: f64,
    detect: f64,
    routing: Routing,
    snap: Option<f64>,
    /// `ln(1 - q)` for drawing geometric cycle counts; `None` when `q = 1`.
    log_miss: Option<f64>,
    /// Next detected emission: (emission time, excitation time).
    next: (f64, f64),
}

impl SaturableEmitter {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rng: ChaCha8Rng,
        rate: f64,
        lifetime: f64,
        block: f64,
        detect: f64,
        routing: Routing,
        snap: Option<f64>,
    ) -> Self {
        let log_miss = (detect > 0.0 && detect < 1.0).then(|| (-detect).ln_1p());
        let mut em = SaturableEmitter {
            rng,
            rate,
            lifetime,
            block,
            detect,
            routing,
            snap,
            log_miss,
            next: (f64::INFINITY, f64::INFINITY),
        };
        if rate > 0.0 && detect > 0.0 {
            let first = em.stationary_first_emission();
            em.next = if em.detect >= 1.0 || em.rng.random::<f64>() < em.detect {
                first
            } else {
                em.next_detected_after(first.0)
            };
        }
        em
    }

    /// First emission after t = 0 with the emitter in its stationary state.
    fn stationary_first_emission(&mut self) -> (f64, f64) {
        let idle_mean = 1.0 / self.rate;
        let cycle = self.block + idle_mean + self.lifetime;
        let u = self.rng.random::<f64>() * cycle;
        if u < self.block {
            // blocked; the residual block time is uniform
            let a = self.block - u + exp(&mut self.rng, idle_mean);
            (a + exp(&mut self.rng, self.lifetime), a)
        } else if u < self.block + idle_mean {
            let a = exp(&mut self.rng, idle_mean);
            (a + exp(&mut self.rng, self.lifetime), a)
        } else {
            // excited: age and residual delay are independent exponentials
            let age = exp(&mut self.rng, self.lifetime);
            (exp(&mut self.rng, self.lifetime), -age)
        }
    }

    fn gamma(&mut self, shape: u64, scale: f64) -> f64 {
        match shape {
            0 => 0.0,
            1 => exp(&mut self.rng, scale),
            n if scale > 0.0 => Gamma::new(n as f64, scale)
                .expect("positive shape and scale")
                .sample(&mut self.rng),
            _ => 0.0,
        }
    }

    fn next_detected_after(&mut self, emission: f64) -> (f64, f64) {
        // failures before the first detection, by inversion
        let n = match self.log_miss {
            Some(lm) => {
                let u: f64 = 1.0 - self.rng.random::<f64>();
                (u.ln() / lm).floor().min(u64::MAX as f64 / 2.0) as u64 + 1
            }
            None => 1,
        };
        let idle = self.gamma(n, 1.0 / self.rate);
        let earlier_delays = self.gamma(n - 1, self.lifetime);
        let delay = if self.lifetime > 0.0 {
            exp(&mut self.rng, self.lifetime)
        } else {
            0.0
        };
        let e = emission + n as f64 * self.block + idle + earlier_delays + delay;
        (e, e - delay)
    }
}

impl Source for SaturableEmitter {
    fn advance(&mut self, horizon: f64, out: &mut Emitted) {
        while self.next.0 < horizon {
            let (e, a) = self.next;
            let t = match self.snap {
                Some(period) => pulse_floor(a, period) + (e - a),
                None => e,
            };
            self.routing.route(&mut self.rng, t, out);
            self.next = self.next_detected_after(e);
        }
    }
}

/// Builds an ensemble of `emitters` saturable emitters sharing the total
/// excitation rate `rate` with effective lifetime `lifetime`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn emitter_ensemble(
    seed: u64,
    point: usize,
    first_source_id: u64,
    emitters: usize,
    rate: f64,
    lifetime: f64,
    routing: Routing,
    detect: f64,
    snap: Option<f64>,
) -> Vec<Box<dyn Source>> {
    let m = emitters.max(1);
    let per_rate = rate / m as f64;
    let block = (m - 1) as f64 * lifetime;
    (0..m)
        .map(|k| {
            Box::new(SaturableEmitter::new(
                substream(seed, point, first_source_id + k as u64),
                per_rate,
                lifetime,
                block,
                detect,
                routing,
                snap,
            )) as Box<dyn Source>
        })
        .collect()
}

/// Every emission (undetected ones included) of a saturable-emitter
/// ensemble in `[0, duration)`, sorted.
///
/// Useful to check the throughput law directly; the detector simulation
/// uses the thinned form.
pub fn saturable_emission_times(
    excitation_rate: f64,
    lifetime: f64,
    emitters: usize,
    duration: f64,
    seed: u64,
) -> Vec<f64> {
    let mut sources = emitter_ensemble(
        seed,
        0,
        0,
        emitters,
        excitation_rate,
        lifetime,
        Routing::signal_only(),
        1.0,
        None,
    );
    let mut out = Emitted::default();
    for s in sources.iter_mut() {
        s.advance(duration, &mut out);
    }
    let mut ts = out.signal;
    ts.retain(|&t| (0.0..duration).contains(&t));
    ts.sort_by(f64::total_cmp);
    ts
}
