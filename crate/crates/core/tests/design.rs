use rach_core::design::{self, BlockDesign, ExtensionBudget, bundled};
use rach_core::search::{SearchOptions, search_max_3ic};
use rach_core::verify::{self, DEFAULT_BUDGET};
use rach_core::{Codebook, Pattern};

/// Brute-force pair coverage, independent of `verify_steiner`.
fn covers_pairs_once(d: &BlockDesign) -> bool {
    let n = d.n();
    let mut count = vec![0u32; n * n];
    for b in d.blocks() {
        for (i, &x) in b.iter().enumerate() {
            for &y in &b[i + 1..] {
                count[x * n + y] += 1;
            }
        }
    }
    (0..n).all(|x| (x + 1..n).all(|y| count[x * n + y] == 1))
}

#[test]
fn triple_systems_have_expected_sizes() {
    let bose = design::steiner_triple(27).unwrap();
    assert_eq!(bose.blocks().len(), 117);
    assert!(covers_pairs_once(&bose));
    assert!(design::verify_steiner(&bose).holds);
    let skolem = design::steiner_triple(67).unwrap();
    assert_eq!(skolem.blocks().len(), 737);
    assert!(covers_pairs_once(&skolem));
    let nine = design::steiner_triple(9).unwrap();
    assert_eq!(nine.blocks().len(), 12);
    for n in (7..=99).filter(|n| n % 6 == 1 || n % 6 == 3) {
        assert!(covers_pairs_once(&design::steiner_triple(n).unwrap()), "n={n}");
    }
}

#[test]
fn triple_system_codes_meet_rc() {
    let code = design::design_to_codebook(&design::steiner_triple(27).unwrap()).unwrap();
    let rc = verify::rc_condition(&code);
    assert!(rc.holds);
    assert_eq!(rc.max_intersection, 1);
    assert_eq!(verify::prop1_order(&code).unwrap(), Some(3));
}

#[test]
fn steiner_26_contrasts_rc_and_3ic() {
    let code = design::design_to_codebook(&bundled::steiner_3_5_26()).unwrap();
    assert_eq!(code.size(), 260);
    let rc = verify::rc_condition(&code);
    assert!(!rc.holds);
    assert_eq!(rc.max_intersection, 2);
    assert_eq!(verify::prop1_order(&code).unwrap(), Some(3));
    assert!(verify::is_m_ic(&code, 3, DEFAULT_BUDGET).unwrap().is_m_ic());
    assert!(verify::is_covering_free(&code, 3, DEFAULT_BUDGET).unwrap().verdict.holds());
}

#[test]
fn steiner_65_loads() {
    let d = bundled::steiner_3_5_65();
    assert_eq!(d.blocks().len(), 4368);
    let code = design::design_to_codebook(&d).unwrap();
    assert_eq!(rach_core::weight_profile(&code).max_pairwise_intersection, 2);
}

#[test]
fn corrupted_design_is_rejected() {
    let d = bundled::steiner_3_5_26();
    let mut blocks = d.blocks().to_vec();
    blocks[5] = blocks[4].clone();
    let broken = BlockDesign::new(3, 5, 26, blocks).unwrap();
    let r = design::verify_steiner(&broken);
    assert!(!r.holds);
    assert!(matches!(r.violation, Some((_, 0 | 2))));
    assert!(design::design_to_codebook(&broken).is_err());
}

#[test]
fn design_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sts13.txt");
    let d = design::steiner_triple(13).unwrap();
    std::fs::write(&path, d.to_text()).unwrap();
    assert_eq!(design::load_block_design(&path).unwrap(), d);
    assert!(design::load_block_design(dir.path().join("missing")).is_err());
}

#[test]
fn lifting_keeps_3ic_and_meets_bound() {
    let mut sizes = Vec::new();
    for n in 1..=6 {
        let base = search_max_3ic(n, &SearchOptions::default()).unwrap().code;
        let ext = design::busschbach_extend(&base, ExtensionBudget::default()).unwrap();
        assert_eq!(ext.code.n(), n + 3);
        assert!(ext.extra >= 1);
        assert_eq!(ext.code.size(), 3 * (base.size() + 1) + ext.extra);
        assert!(verify::is_m_ic(&ext.code, 3, DEFAULT_BUDGET).unwrap().is_m_ic(), "n={n}");
        sizes.push(ext.code.size());
    }
    // lifting {1} reaches the optimum for n = 4
    assert_eq!(sizes[0], 7);
}

/// Re-checks the greedy acceptance rule one pattern at a time.
#[test]
fn lifting_accepts_exactly_the_safe_candidates() {
    let base = Codebook::new(
        3,
        ["001", "010", "100", "111"].iter().map(|s| rach_core::parse_pattern(s, 3).unwrap()).collect(),
    )
    .unwrap();
    let ext = design::busschbach_extend(&base, ExtensionBudget::default()).unwrap();
    let fixed = 3 * (base.size() + 1);
    let mut code: Vec<Pattern> = ext.code.patterns()[..fixed].to_vec();
    for a in 0u128..8 {
        let bits = (0..3).fold(0u128, |acc, s| if a >> (2 - s) & 1 == 1 { acc | 1 << s } else { acc });
        let cand = rach_core::parse_pattern("111", 3).unwrap().concat(&Pattern::from_bits(bits, 3).unwrap()).unwrap();
        let mut with = code.clone();
        with.push(cand);
        let ok = verify::is_m_ic(&Codebook::new(6, with.clone()).unwrap(), 3, DEFAULT_BUDGET).unwrap().is_m_ic();
        assert_eq!(ok, ext.code.patterns().contains(&cand), "candidate {cand}");
        if ok {
            code = with;
        }
    }
    assert_eq!(code.len(), ext.code.size());
}
