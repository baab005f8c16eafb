use std::collections::VecDeque;

use super::stream::EventStream;

/// How events within the window are paired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingRule {
    /// Earliest match; every event takes part in at most one coincidence.
    Greedy,
    /// Every signal/idler pair within the window counts, as when a
    /// cross-correlation histogram is summed over the window. Keeps the
    /// accidental count at `window * R_s * R_i` per unit time at any rate,
    /// where greedy matching falls short by roughly `R * window`.
    AllPairs,
}

/// Coincidence counter over two sorted event sequences that may be fed in
/// chunks.
///
/// A signal event at `t_s` and an idler event at `t_i` coincide when
/// `|t_s - (t_i + delay)| <= window / 2`. Chunked input gives the same
/// count as one pass over the complete streams.
#[derive(Debug, Clone)]
pub struct CoincidenceCounter {
    half_window: f64,
    delay: f64,
    rule: PairingRule,
    signal: VecDeque<f64>,
    idler: VecDeque<f64>,
    count: u64,
}

impl CoincidenceCounter {
    /// Greedy counter.
    pub fn new(window: f64, delay: f64) -> Self {
        Self::with_rule(window, delay, PairingRule::Greedy)
    }

    pub fn with_rule(window: f64, delay: f64, rule: PairingRule) -> Self {
        CoincidenceCounter {
            half_window: 0.5 * window,
            delay,
            rule,
            signal: VecDeque::new(),
            idler: VecDeque::new(),
            count: 0,
        }
    }

    /// Appends sorted chunks; every timestamp must not precede those already
    /// pushed on the same channel.
    pub fn push(&mut self, signal: &[f64], idler: &[f64]) {
        self.signal.extend(signal.iter().copied());
        self.idler.extend(idler.iter().map(|t| t + self.delay));
        match self.rule {
            PairingRule::Greedy => self.drain_greedy(),
            PairingRule::AllPairs => self.drain_all_pairs(),
        }
    }

    /// Each decision only looks at the two oldest unmatched events.
    fn drain_greedy(&mut self) {
        let h = self.half_window;
        while let (Some(&s), Some(&i)) = (self.signal.front(), self.idler.front()) {
            let d = s - i;
            if d > h {
                self.idler.pop_front();
            } else if d < -h {
                self.signal.pop_front();
            } else {
                self.count += 1;
                self.signal.pop_front();
                self.idler.pop_front();
            }
        }
    }

    /// A signal event is settled once an idler event beyond its window has
    /// arrived.
    fn drain_all_pairs(&mut self) {
        let h = self.half_window;
        while let Some(&s) = self.signal.front() {
            while self.idler.front().is_some_and(|&i| i < s - h) {
                self.idler.pop_front();
            }
            match self.idler.back() {
                Some(&last) if last > s + h => {
                    self.count += self.idler.iter().take_while(|&&i| i <= s + h).count() as u64;
                    self.signal.pop_front();
                }
                _ => break,
            }
        }
    }

    /// Coincidences so far. Under [`PairingRule::AllPairs`] signal events
    /// still waiting for later idler data count against what has arrived.
    pub fn count(&self) -> u64 {
        if self.rule == PairingRule::Greedy {
            return self.count;
        }
        let h = self.half_window;
        let pending: usize = self
            .signal
            .iter()
            .map(|&s| self.idler.iter().filter(|&&i| (i - s).abs() <= h).count())
            .sum();
        self.count + pending as u64
    }
}

/// Greedy coincidence count between two sorted streams in `O(N_s + N_i)`.
pub fn count_coincidences(s: &EventStream, i: &EventStream, tau_c: f64, delay: f64) -> u64 {
    count_with_rule(s, i, tau_c, delay, PairingRule::Greedy)
}

pub fn count_with_rule(s: &EventStream, i: &EventStream, tau_c: f64, delay: f64, rule: PairingRule) -> u64 {
    let mut c = CoincidenceCounter::with_rule(tau_c, delay, rule);
    c.push(&s.timestamps, &i.timestamps);
    c.count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Channel;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp};

    fn poisson(rate: f64, duration: f64, rng: &mut ChaCha8Rng, ch: Channel) -> EventStream {
        let exp = Exp::new(rate).unwrap();
        let mut t = 0.0;
        let mut ts = Vec::new();
        loop {
            t += exp.sample(rng);
            if t > duration {
                break;
            }
            ts.push(t);
        }
        EventStream::new(ch, duration, ts)
    }

    #[test]
    fn identical_streams_fully_coincide() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = poisson(1e5, 0.1, &mut rng, Channel::Signal);
        let i = EventStream { channel: Channel::Idler, ..s.clone() };
        assert_eq!(count_coincidences(&s, &i, 1e-9, 0.0), s.len() as u64);
    }

    #[test]
    fn empty_stream_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = poisson(1e4, 0.1, &mut rng, Channel::Signal);
        let e = EventStream::new(Channel::Idler, 0.1, vec![]);
        assert_eq!(count_coincidences(&s, &e, 1e-8, 0.0), 0);
        assert_eq!(count_coincidences(&e, &s, 1e-8, 0.0), 0);
    }

    #[test]
    fn independent_streams_give_accidentals() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (rs, ri, tau, dur) = (2e5, 1.5e5, 13.1e-9, 20.0);
        let s = poisson(rs, dur, &mut rng, Channel::Signal);
        let i = poisson(ri, dur, &mut rng, Channel::Idler);
        let n = count_coincidences(&s, &i, tau, 0.0) as f64;
        let expected = tau * s.rate() * i.rate() * dur;
        assert!((n - expected).abs() < 3.0 * expected.sqrt(), "{n} vs {expected}");
    }

    #[test]
    fn delay_shifts_idler() {
        let s = EventStream::new(Channel::Signal, 1.0, vec![1e-6, 2e-6]);
        let i = EventStream::new(Channel::Idler, 1.0, vec![0.5e-6, 1.5e-6]);
        assert_eq!(count_coincidences(&s, &i, 1e-9, 0.0), 0);
        assert_eq!(count_coincidences(&s, &i, 1e-9, 0.5e-6), 2);
    }

    #[test]
    fn every_pair_in_window_counts() {
        let s = EventStream::new(Channel::Signal, 1.0, vec![1.0e-6, 1.2e-6]);
        let i = EventStream::new(Channel::Idler, 1.0, vec![1.1e-6, 1.15e-6, 5e-6]);
        assert_eq!(count_with_rule(&s, &i, 0.35e-6, 0.0, PairingRule::AllPairs), 4);
        assert_eq!(count_with_rule(&s, &i, 0.15e-6, 0.0, PairingRule::AllPairs), 1);
        assert_eq!(count_coincidences(&s, &i, 0.35e-6, 0.0), 2);
    }

    #[test]
    fn dense_accidentals_keep_window_law() {
        // R * tau near 0.05, where one-to-one matching would fall short
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let (rs, ri, tau, dur) = (4e6, 3e6, 13.1e-9, 0.5);
        let s = poisson(rs, dur, &mut rng, Channel::Signal);
        let i = poisson(ri, dur, &mut rng, Channel::Idler);
        let n = count_with_rule(&s, &i, tau, 0.0, PairingRule::AllPairs) as f64;
        let expected = tau * s.rate() * i.rate() * dur;
        assert!((n - expected).abs() < 4.0 * expected.sqrt(), "{n} vs {expected}");
        let greedy = count_coincidences(&s, &i, tau, 0.0) as f64;
        assert!(greedy < expected - 5.0 * expected.sqrt(), "{greedy} vs {expected}");
    }

    fn greedy_scan(s: &[f64], i: &[f64], h: f64) -> u64 {
        let (mut p, mut q, mut n) = (0, 0, 0);
        while p < s.len() && q < i.len() {
            if s[p] - i[q] > h {
                q += 1;
            } else if i[q] - s[p] > h {
                p += 1;
            } else {
                n += 1;
                p += 1;
                q += 1;
            }
        }
        n
    }

    fn brute_force(s: &[f64], i: &[f64], h: f64) -> u64 {
        let mut n = 0;
        for a in s {
            for b in i {
                if (a - b).abs() <= h {
                    n += 1;
                }
            }
        }
        n
    }

    proptest! {
        #[test]
        fn chunked_equals_whole(seed in 0u64..1000, chunk in 1usize..50) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s: Vec<f64> = (0..300).map(|_| rng.random::<f64>()).collect();
            let mut i: Vec<f64> = (0..250).map(|_| rng.random::<f64>()).collect();
            s.sort_by(f64::total_cmp);
            i.sort_by(f64::total_cmp);
            let w = 4e-3;
            for rule in [PairingRule::Greedy, PairingRule::AllPairs] {
                let mut c = CoincidenceCounter::with_rule(w, 0.0, rule);
                let (mut a, mut b) = (0, 0);
                while a < s.len() || b < i.len() {
                    let ea = (a + chunk).min(s.len());
                    let eb = (b + chunk / 2 + 1).min(i.len());
                    c.push(&s[a..ea], &i[b..eb]);
                    a = ea;
                    b = eb;
                }
                let expected = match rule {
                    PairingRule::Greedy => greedy_scan(&s, &i, w / 2.0),
                    PairingRule::AllPairs => brute_force(&s, &i, w / 2.0),
                };
                prop_assert_eq!(c.count(), expected);
            }
        }

        #[test]
        fn greedy_bounded_by_shorter_stream(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = poisson(1e3, 1.0, &mut rng, Channel::Signal);
            let i = poisson(3e3, 1.0, &mut rng, Channel::Idler);
            let n = count_coincidences(&s, &i, 1e-3, 0.0) as usize;
            prop_assert!(n <= s.len().min(i.len()));
        }

        #[test]
        fn all_pairs_symmetric_in_channels(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = poisson(1e3, 1.0, &mut rng, Channel::Signal);
            let i = poisson(3e3, 1.0, &mut rng, Channel::Idler);
            let rule = PairingRule::AllPairs;
            prop_assert_eq!(count_with_rule(&s, &i, 1e-3, 0.0, rule), count_with_rule(&i, &s, 1e-3, 0.0, rule));
        }
    }
}
