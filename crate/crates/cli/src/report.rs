use std::collections::BTreeSet;

use anyhow::Result;
use rach_core::sim::{self, SimConfig, SimError, SimResult, Source};
use rach_core::weight_profile;

use crate::artifact::Provenance;

/// One PER curve: a pattern source swept over intensities.
pub struct Curve {
    pub mode: &'static str,
    pub n: usize,
    pub k_or_profile: String,
    pub trials: u64,
    /// `None` where no packet was sent at all (PER undefined).
    pub points: Vec<(f64, Option<SimResult>)>,
}

impl Curve {
    /// Point `i` uses the seed derived from `(seed, i)`.
    pub fn run(source: &Source, lambdas: &[f64], trials: u64, seed: u64) -> Result<Curve> {
        let k_or_profile = match source {
            Source::Random { k, .. } => k.to_string(),
            Source::Deterministic(code) => {
                let wp = weight_profile(code);
                match wp.uniform_column_weight() {
                    Some(k) => k.to_string(),
                    None => format!("w{}-{}", wp.min_column_weight(), wp.max_column_weight()),
                }
            }
        };
        let mut points = Vec::with_capacity(lambdas.len());
        for (i, &lambda) in lambdas.iter().enumerate() {
            let cfg = SimConfig { source: source.clone(), lambda, trials, seed: sim::point_seed(seed, i as u64) };
            match sim::simulate_per(&cfg) {
                Ok(r) => points.push((lambda, Some(r))),
                Err(SimError::NoPackets { .. }) => points.push((lambda, None)),
                Err(e) => return Err(e.into()),
            }
        }
        Ok(Curve { mode: source.mode(), n: source.n(), k_or_profile, trials, points })
    }
}

/// CSV with the provenance header, one row per (curve, intensity) and one
/// `per_given_a=<a>` column per activation count observed anywhere.
pub fn sim_csv(prov: &Provenance, curves: &[Curve]) -> String {
    let mut counts = BTreeSet::new();
    let mut notes = Vec::new();
    for c in curves {
        for (lambda, r) in &c.points {
            match r {
                Some(r) => {
                    counts.extend(r.per_by_activation.keys().copied().filter(|&a| a > 0));
                    if r.truncated > 0 {
                        notes.push(format!(
                            "truncated: {} frames at lambda={lambda} had more activations than codewords",
                            r.truncated
                        ));
                    }
                }
                None => notes.push(format!("no packets at lambda={lambda}; PER undefined")),
            }
        }
    }
    let mut out = prov.comment_block(&notes);
    out.push_str("lambda,mode,n,k_or_profile,trials,packets,per,ci_low,ci_high");
    for a in &counts {
        out.push_str(&format!(",per_given_a={a}"));
    }
    out.push('\n');
    for c in curves {
        for (lambda, r) in &c.points {
            out.push_str(&format!("{lambda},{},{},{},{}", c.mode, c.n, c.k_or_profile, c.trials));
            match r {
                Some(r) => {
                    out.push_str(&format!(",{},{},{},{}", r.packets, r.per, r.ci95.0, r.ci95.1));
                    for a in &counts {
                        out.push(',');
                        if let Some(p) = r.per_by_activation.get(a).and_then(|s| s.per()) {
                            out.push_str(&p.to_string());
                        }
                    }
                }
                None => {
                    out.push_str(",0,,,");
                    out.push_str(&",".repeat(counts.len()));
                }
            }
            out.push('\n');
        }
    }
    out
}
