use rach_core::design;
use rach_core::search::{SearchOptions, search_max_3ic};
use rach_core::sim::{self, Sampler, SimConfig, Source, simulate_given_count, simulate_per};

fn random_cfg(n: usize, k: usize, lambda: f64, trials: u64, seed: u64) -> SimConfig {
    SimConfig { source: Source::Random { n, k }, lambda, trials, seed }
}

#[test]
fn activation_mean_matches_intensity() {
    let cfg = random_cfg(24, 3, 0.5, 100_000, 9);
    let sampler = Sampler::new(&cfg).unwrap();
    let total: usize = (0..cfg.trials).map(|f| sampler.draw(&mut sim::frame_rng(cfg.seed, f)).0.len()).sum();
    let mean = total as f64 / cfg.trials as f64;
    assert!((mean - 12.0).abs() < 0.12, "mean {mean}");
}

#[test]
fn random_mode_duplicate_rate() {
    // two users pick the same weight-3 pattern with probability 1/C(24,3)
    let sampler = Sampler::new(&random_cfg(24, 3, 1.0, 1, 0)).unwrap();
    let frames = 2_000_000u64;
    let dup = (0..frames)
        .filter(|&f| {
            let p = sampler.pick(&mut sim::frame_rng(5, f), 2);
            p[0] == p[1]
        })
        .count() as f64;
    let expected = frames as f64 / 2024.0;
    assert!((dup - expected).abs() < 5.0 * expected.sqrt(), "{dup} vs {expected}");
}

#[test]
fn distinct_patterns_never_lose_pairs() {
    let code = design::enumerate_constant_weight(10, 4, design::DEFAULT_ENUM_CAP).unwrap();
    let src = Source::Deterministic(code);
    for a in 1..=2 {
        let r = simulate_given_count(&src, a, 50_000, 4).unwrap();
        assert_eq!(r.lost, 0, "a={a}");
        assert_eq!(r.packets, 50_000 * a as u64);
    }
    // random mode can collide with itself
    let r = simulate_given_count(&Source::Random { n: 6, k: 2 }, 2, 50_000, 4).unwrap();
    assert!(r.lost > 0);
}

#[test]
fn three_ic_code_is_lossless_up_to_three() {
    let code = search_max_3ic(6, &SearchOptions::default()).unwrap().code;
    let src = Source::Deterministic(code);
    for a in 1..=3 {
        assert_eq!(simulate_given_count(&src, a, 20_000, a as u64).unwrap().lost, 0);
    }
    let r = simulate_per(&SimConfig { source: src.clone(), lambda: 0.3, trials: 50_000, seed: 1 }).unwrap();
    for (a, s) in &r.per_by_activation {
        if *a <= 3 {
            assert_eq!(s.lost, 0, "a={a}");
        }
    }
    assert!(r.lost > 0, "4 or more users can stall");
    assert!(simulate_given_count(&src, 19, 10, 0).is_err());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = random_cfg(16, 3, 0.4, 30_000, 77);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| simulate_per(&cfg).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, simulate_per(&cfg).unwrap());
}

#[test]
fn deterministic_assignment_beats_random_at_low_load() {
    let code = design::enumerate_constant_weight(12, 3, design::DEFAULT_ENUM_CAP).unwrap();
    let d = simulate_per(&SimConfig { source: Source::Deterministic(code), lambda: 0.2, trials: 200_000, seed: 3 })
        .unwrap();
    let r = simulate_per(&random_cfg(12, 3, 0.2, 200_000, 3)).unwrap();
    assert!(d.per <= r.per || d.ci95.1 >= r.ci95.0, "{} vs {}", d.per, r.per);
}

#[test]
fn conditional_per_grows_with_load() {
    let code = design::enumerate_constant_weight(12, 3, design::DEFAULT_ENUM_CAP).unwrap();
    let r = simulate_per(&SimConfig { source: Source::Deterministic(code), lambda: 0.5, trials: 100_000, seed: 8 })
        .unwrap();
    let rows: Vec<_> = r.per_by_activation.iter().filter(|(a, s)| **a > 0 && s.frames >= 2_000).collect();
    assert!(rows.len() > 5);
    for w in rows.windows(2) {
        let (lo, hi) = (w[0].1, w[1].1);
        let (p, q) = (lo.per().unwrap(), hi.per().unwrap());
        let slack = sim::wilson(lo.lost, lo.packets).1.max(sim::wilson(hi.lost, hi.packets).1) - p.min(q);
        assert!(q + slack >= p, "a={} -> {}: {p} > {q}", w[0].0, w[1].0);
    }
}

#[test]
fn per_is_consistent_with_counts() {
    let r = simulate_per(&random_cfg(24, 4, 0.3, 20_000, 2)).unwrap();
    assert_eq!(r.frames, 20_000);
    assert_eq!(r.per, r.lost as f64 / r.packets as f64);
    assert!(r.ci95.0 <= r.per && r.per <= r.ci95.1);
    let packets: u64 = r.per_by_activation.values().map(|s| s.packets).sum();
    assert_eq!(packets, r.packets);
    let frames: u64 = r.per_by_activation.values().map(|s| s.frames).sum();
    assert_eq!(frames, r.frames);
}

#[test]
fn zero_packets_is_an_error() {
    let code = design::enumerate_constant_weight(4, 1, design::DEFAULT_ENUM_CAP).unwrap();
    let cfg = SimConfig { source: Source::Deterministic(code), lambda: 1e-9, trials: 10, seed: 0 };
    assert!(matches!(simulate_per(&cfg), Err(sim::SimError::NoPackets { frames: 10 })));
}
