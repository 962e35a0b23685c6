//! Monte Carlo model of a framed random access channel with successive
//! interference cancellation at the receiver.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use thiserror::Error;

use crate::design::{self, DesignError};
use crate::pattern::{Codebook, Pattern, singleton_mask};

/// Frames simulated per work unit; merged results do not depend on it.
const CHUNK: u64 = 4096;
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("lambda must be positive and finite, got {0}")]
    BadLambda(f64),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("codebook is empty")]
    EmptyCode,
    #[error("activation count {count} exceeds the {available} available patterns")]
    CountTooLarge { count: usize, available: usize },
    #[error("no packets were transmitted in {frames} frames; PER is undefined")]
    NoPackets { frames: u64 },
    #[error(transparent)]
    Design(#[from] DesignError),
}

/// Where active users take their access patterns from.
#[derive(Clone, Debug)]
pub enum Source {
    /// D-CRDSA: each user owns a distinct codeword.
    Deterministic(Codebook),
    /// CRDSA: each user draws a weight-`k` pattern uniformly, with replacement.
    Random { n: usize, k: usize },
}

impl Source {
    pub fn mode(&self) -> &'static str {
        match self {
            Source::Deterministic(_) => "deterministic",
            Source::Random { .. } => "random",
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Source::Deterministic(c) => c.n(),
            Source::Random { n, .. } => *n,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub source: Source,
    /// Expected active users per slot; a frame sees Poisson(lambda * n).
    pub lambda: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Per-frame counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameOutcome {
    pub activated: usize,
    pub decoded: usize,
    /// Activation draw exceeded the codebook size and was clipped.
    pub truncated: bool,
}

impl FrameOutcome {
    pub fn lost(&self) -> usize {
        self.activated - self.decoded
    }
}

/// Totals for the frames that had a given number of active users.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ActivationStats {
    pub frames: u64,
    pub packets: u64,
    pub lost: u64,
}

impl ActivationStats {
    pub fn per(&self) -> Option<f64> {
        (self.packets > 0).then(|| self.lost as f64 / self.packets as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub per: f64,
    pub ci95: (f64, f64),
    pub frames: u64,
    pub packets: u64,
    pub lost: u64,
    /// Frames whose Poisson draw was clipped to the codebook size.
    pub truncated: u64,
    pub per_by_activation: BTreeMap<usize, ActivationStats>,
}

/// Indices of the patterns recovered by peeling. Every pattern that owns a
/// singleton slot in a round is decoded in that round.
pub fn sic_decode(active: &[Pattern]) -> Vec<usize> {
    let mut live: Vec<usize> = (0..active.len()).collect();
    let mut decoded = Vec::new();
    loop {
        let single = singleton_mask(live.iter().map(|&i| &active[i]));
        if single == 0 {
            break;
        }
        live.retain(|&i| {
            if active[i].bits() & single != 0 {
                decoded.push(i);
                false
            } else {
                true
            }
        });
    }
    decoded.sort_unstable();
    decoded
}

/// Peeling that removes one packet at a time: the first slot in
/// `slot_order` holding exactly one live packet is resolved, then the scan
/// restarts.
pub fn sic_decode_ordered(active: &[Pattern], slot_order: &[usize]) -> Vec<usize> {
    let mut live = vec![true; active.len()];
    let mut decoded = Vec::new();
    'outer: loop {
        for &slot in slot_order {
            let mut owner = None;
            let mut count = 0;
            for (i, p) in active.iter().enumerate() {
                if live[i] && p.contains(slot) {
                    count += 1;
                    owner = Some(i);
                    if count > 1 {
                        break;
                    }
                }
            }
            if count == 1 {
                let i = owner.unwrap();
                live[i] = false;
                decoded.push(i);
                continue 'outer;
            }
        }
        break;
    }
    decoded.sort_unstable();
    decoded
}

/// Validated, ready-to-sample form of a [`SimConfig`].
pub struct Sampler {
    pool: Vec<Pattern>,
    deterministic: bool,
    mean: f64,
    poisson: Option<Poisson<f64>>,
}

impl Sampler {
    pub fn new(config: &SimConfig) -> Result<Self, SimError> {
        if !(config.lambda > 0.0 && config.lambda.is_finite()) {
            return Err(SimError::BadLambda(config.lambda));
        }
        if config.trials == 0 {
            return Err(SimError::NoTrials);
        }
        Self::for_source(&config.source, config.lambda)
    }

    fn for_source(source: &Source, lambda: f64) -> Result<Self, SimError> {
        let (pool, deterministic) = match source {
            Source::Deterministic(code) => {
                if code.is_empty() {
                    return Err(SimError::EmptyCode);
                }
                (code.patterns().to_vec(), true)
            }
            Source::Random { n, k } => {
                (design::enumerate_constant_weight(*n, *k, design::DEFAULT_ENUM_CAP)?.into_patterns(), false)
            }
        };
        let mean = lambda * source.n() as f64;
        let poisson =
            if mean > 0.0 { Some(Poisson::new(mean).map_err(|_| SimError::BadLambda(lambda))?) } else { None };
        Ok(Self { pool, deterministic, mean, poisson })
    }

    /// Expected activations per frame.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Draws one frame: the activation count, then the active patterns.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> (Vec<Pattern>, bool) {
        let a = self.poisson.as_ref().map_or(0, |p| p.sample(rng) as usize);
        if self.deterministic && a > self.pool.len() {
            return (self.pick(rng, self.pool.len()), true);
        }
        (self.pick(rng, a), false)
    }

    /// Exactly `count` active users.
    pub fn pick<R: Rng>(&self, rng: &mut R, count: usize) -> Vec<Pattern> {
        if self.deterministic {
            index::sample(rng, self.pool.len(), count).into_iter().map(|i| self.pool[i]).collect()
        } else {
            (0..count).map(|_| self.pool[rng.random_range(0..self.pool.len())]).collect()
        }
    }
}

/// One frame's patterns, as [`simulate_per`] would draw them for frame 0.
pub fn draw_activations(config: &SimConfig) -> Result<Vec<Pattern>, SimError> {
    let sampler = Sampler::new(config)?;
    Ok(sampler.draw(&mut frame_rng(config.seed, 0)).0)
}

/// Independent stream for every (seed, frame) pair.
pub fn frame_rng(seed: u64, frame: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame);
    rng
}

/// Seed for the `index`-th point of a sweep.
pub fn point_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Default)]
struct Tally {
    frames: u64,
    truncated: u64,
    by_a: Vec<ActivationStats>,
}

impl Tally {
    fn add(&mut self, out: FrameOutcome) {
        self.frames += 1;
        self.truncated += out.truncated as u64;
        if self.by_a.len() <= out.activated {
            self.by_a.resize(out.activated + 1, ActivationStats::default());
        }
        let s = &mut self.by_a[out.activated];
        s.frames += 1;
        s.packets += out.activated as u64;
        s.lost += out.lost() as u64;
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.frames += other.frames;
        self.truncated += other.truncated;
        if self.by_a.len() < other.by_a.len() {
            self.by_a.resize(other.by_a.len(), ActivationStats::default());
        }
        for (s, o) in self.by_a.iter_mut().zip(other.by_a) {
            s.frames += o.frames;
            s.packets += o.packets;
            s.lost += o.lost;
        }
        self
    }

    fn finish(self) -> Result<SimResult, SimError> {
        let packets: u64 = self.by_a.iter().map(|s| s.packets).sum();
        let lost: u64 = self.by_a.iter().map(|s| s.lost).sum();
        if packets == 0 {
            return Err(SimError::NoPackets { frames: self.frames });
        }
        let per_by_activation =
            self.by_a.into_iter().enumerate().filter(|(_, s)| s.frames > 0).collect::<BTreeMap<_, _>>();
        Ok(SimResult {
            per: lost as f64 / packets as f64,
            ci95: wilson(lost, packets),
            frames: self.frames,
            packets,
            lost,
            truncated: self.truncated,
            per_by_activation,
        })
    }
}

fn run_frames(trials: u64, seed: u64, frame: impl Fn(&mut ChaCha8Rng) -> FrameOutcome + Sync) -> Tally {
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut t = Tally::default();
            for f in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                t.add(frame(&mut frame_rng(seed, f)));
            }
            t
        })
        .reduce(Tally::default, Tally::merge)
}

/// Packet error rate over `config.trials` independent frames.
pub fn simulate_per(config: &SimConfig) -> Result<SimResult, SimError> {
    let sampler = Sampler::new(config)?;
    run_frames(config.trials, config.seed, |rng| {
        let (active, truncated) = sampler.draw(rng);
        FrameOutcome { activated: active.len(), decoded: sic_decode(&active).len(), truncated }
    })
    .finish()
}

/// Like [`simulate_per`] with the activation count fixed at `count` in
/// every frame instead of drawn from the Poisson law.
pub fn simulate_given_count(source: &Source, count: usize, trials: u64, seed: u64) -> Result<SimResult, SimError> {
    if trials == 0 {
        return Err(SimError::NoTrials);
    }
    let sampler = Sampler::for_source(source, 1.0)?;
    if sampler.deterministic && count > sampler.pool.len() {
        return Err(SimError::CountTooLarge { count, available: sampler.pool.len() });
    }
    run_frames(trials, seed, |rng| {
        let active = sampler.pick(rng, count);
        FrameOutcome { activated: count, decoded: sic_decode(&active).len(), truncated: false }
    })
    .finish()
}

/// `points` intensities spaced evenly in log scale over [0.01, 1], rounded
/// to six significant digits.
pub fn log_grid(points: u32) -> Vec<f64> {
    let last = f64::from(points.max(2) - 1);
    (0..points)
        .map(|i| {
            let x = 10f64.powf(-2.0 + 2.0 * f64::from(i) / last);
            format!("{x:.5e}").parse().expect("formatted float parses")
        })
        .collect()
}

/// Wilson score interval at 95% for `k` failures in `n` trials.
pub fn wilson(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (kf, nf) = (k as f64, n as f64);
    let p = kf / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // the endpoints are exact at k = 0 and k = n
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::parse_pattern;

    fn pats(strs: &[&str]) -> Vec<Pattern> {
        strs.iter().map(|s| parse_pattern(s, s.len()).unwrap()).collect()
    }

    #[test]
    fn decode_examples() {
        assert_eq!(sic_decode(&pats(&["0110", "1000"])), vec![0, 1]);
        assert!(sic_decode(&pats(&["010", "100", "110"])).is_empty());
        assert!(sic_decode(&pats(&["100", "010", "001", "111"])).is_empty());
        assert_eq!(sic_decode(&pats(&["100", "010", "111"])), vec![0, 1, 2]);
        // duplicates never resolve each other
        assert_eq!(sic_decode(&pats(&["110", "110", "001"])), vec![2]);
        assert!(sic_decode(&[]).is_empty());
    }

    #[test]
    fn ordered_decode_matches() {
        let p = pats(&["1100", "0110", "0011", "1001", "1111"]);
        let ord = sic_decode_ordered(&p, &[3, 2, 1, 0]);
        assert_eq!(ord, sic_decode(&p));
    }

    #[test]
    fn grid_spans_unit_interval() {
        let g = log_grid(12);
        assert_eq!(g.len(), 12);
        assert_eq!((g[0], g[11]), (0.01, 1.0));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson(5, 1000);
        assert!(lo < 0.005 && 0.005 < hi);
        assert_eq!(wilson(0, 10).0, 0.0);
        assert!(wilson(0, 10).1 > 0.0);
        assert_eq!(wilson(10, 10).1, 1.0);
    }

    #[test]
    fn rejects_bad_configs() {
        let src = Source::Random { n: 6, k: 2 };
        let cfg = |lambda, trials| SimConfig { source: src.clone(), lambda, trials, seed: 1 };
        assert!(matches!(simulate_per(&cfg(0.0, 10)), Err(SimError::BadLambda(_))));
        assert!(matches!(simulate_per(&cfg(f64::NAN, 10)), Err(SimError::BadLambda(_))));
        assert!(matches!(simulate_per(&cfg(0.1, 0)), Err(SimError::NoTrials)));
        let bad = Source::Random { n: 6, k: 7 };
        assert!(simulate_per(&SimConfig { source: bad, lambda: 0.1, trials: 1, seed: 0 }).is_err());
    }

    #[test]
    fn deterministic_truncates_at_codebook_size() {
        let code = Codebook::new(3, pats(&["100", "010", "001"])).unwrap();
        let cfg = SimConfig { source: Source::Deterministic(code), lambda: 5.0, trials: 200, seed: 3 };
        let r = simulate_per(&cfg).unwrap();
        assert!(r.truncated > 150);
        assert!(r.per_by_activation.keys().all(|&a| a <= 3));
        assert_eq!(r.lost, 0);
    }

    #[test]
    fn result_is_reproducible() {
        let cfg = SimConfig { source: Source::Random { n: 12, k: 3 }, lambda: 0.4, trials: 10_000, seed: 42 };
        let a = simulate_per(&cfg).unwrap();
        let b = simulate_per(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.ci95.0 <= a.per && a.per <= a.ci95.1);
        let lost: u64 = a.per_by_activation.values().map(|s| s.lost).sum();
        assert_eq!(lost, a.lost);
    }
}
