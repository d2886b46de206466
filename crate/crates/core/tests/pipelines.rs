use hiergap::cosets::{build_h2, select_lasserre_predicates, CosetPredicate};
use hiergap::csp::{build_nearest_codeword, CspInstance};
use hiergap::ensembles::{sample_hypergraph, sample_ldpc, Hypergraph, ParityCheckGraph};
use hiergap::exactlp::LinearProgram;
use hiergap::lashier::hvc_lasserre;
use hiergap::local::{LocalDistributionFamily, MomentMatrix};
use hiergap::pidist::{select_sa_predicates, weight_class_program, AtomDistribution, PredicateKind};
use hiergap::rational::{parse_rational, ratio};
use hiergap::report::{construct_lasserre, construct_sa, decode_report, inject_errors, GapReport, Hierarchy};
use proptest::prelude::*;

#[test]
fn alist_round_trip() {
    for seed in 0..20 {
        let g = sample_ldpc(30, 3, 5, seed).unwrap();
        let back = ParityCheckGraph::parse_alist(&g.to_alist()).unwrap();
        assert_eq!(back.checks, g.checks);
        assert_eq!(back.to_alist(), g.to_alist());
    }
}

#[test]
fn json_round_trips() {
    let g = sample_ldpc(15, 3, 9, 71).unwrap();
    let inst = build_nearest_codeword(&g, &inject_errors(15, 3, 1).unwrap()).unwrap();
    assert_eq!(CspInstance::from_json(&inst.to_json()).unwrap().to_json(), inst.to_json());

    let c = build_h2(4).unwrap();
    assert_eq!(CosetPredicate::from_json(&c.to_json()).unwrap().to_json(), c.to_json());

    let d = select_sa_predicates(5).unwrap().entries[0].dist.to_atoms().unwrap();
    assert_eq!(AtomDistribution::from_json(&d.to_json()).unwrap().to_json(), d.to_json());

    let (lp, _) = weight_class_program(5, 4, PredicateKind::Odd);
    assert_eq!(LinearProgram::from_json(&lp.to_json()).unwrap().to_json(), lp.to_json());

    let h = sample_hypergraph(12, &ratio(1, 1), 3, 2).unwrap();
    assert_eq!(Hypergraph::from_json(&h.to_json()).unwrap().to_json(), h.to_json());

    let c = construct_lasserre(&g, &[0; 15], 1, 71).unwrap();
    let mm = &c.collapsed;
    assert_eq!(MomentMatrix::from_json(&mm.to_json()).unwrap().to_json(), mm.to_json());
    let fam = &mm.family;
    assert_eq!(LocalDistributionFamily::from_json(&fam.to_json()).unwrap().to_json(), fam.to_json());
    assert_eq!(GapReport::from_json(&c.gap.to_json()).unwrap(), c.gap);
}

#[test]
fn sa_pipeline_on_expanding_code() {
    let g = sample_ldpc(30, 3, 5, 417204).unwrap();
    let e = inject_errors(30, 16, 9).unwrap();
    let c = construct_sa(&g, &e, 3, 30).unwrap();
    assert!(c.ok());
    assert_eq!(c.gap.hierarchy, Hierarchy::Sa);
    assert_eq!(c.gap.value_absolute, ratio(15, 1));
    assert!(c.gap.decoder_fails && c.gap.verified && c.gap.consistent());
}

#[test]
fn lasserre_pipeline_on_small_code() {
    let g = sample_ldpc(15, 3, 9, 74).unwrap();
    let c = construct_lasserre(&g, &[0; 15], 2, 74).unwrap();
    assert!(c.ok(), "{:?}", c.report);
    assert_eq!(c.collapsed_report.normalized_value, ratio(1, 2));
    assert_eq!(c.coset_instance.q, select_lasserre_predicates(9).unwrap().q);
}

#[test]
fn lp_decoding_corrects_a_codeword_offset() {
    let g = sample_ldpc(30, 3, 5, 417204).unwrap();
    let (d, gap) = decode_report(&g, &[0; 30]).unwrap();
    assert!(d.success());
    assert!(!gap.decoder_fails);
}

#[test]
fn hvc_on_sparse_hypergraph() {
    let h = sample_hypergraph(12, &ratio(1, 2), 3, 0).unwrap();
    let s = hvc_lasserre(&h, 1, 0).unwrap();
    assert!(s.report.ok());
    assert_eq!(s.normalized_value, ratio(1, 2));
}

/// Feeds a checked-in fuzz seed, or a mutation of it, to the parser its
/// directory names, with the same round-trip checks as the fuzz targets.
fn feed(target: &str, text: &str) {
    match target {
        "parse_alist" => {
            if let Ok(g) = ParityCheckGraph::parse_alist(text) {
                assert_eq!(ParityCheckGraph::parse_alist(&g.to_alist()).unwrap().checks, g.checks);
            }
        }
        "parse_rational" => {
            if let Ok(r) = parse_rational(text) {
                assert_eq!(parse_rational(&hiergap::rational::format_rational(&r)).unwrap(), r);
            }
        }
        "instance_json" => {
            if let Ok(i) = CspInstance::from_json(text) {
                assert_eq!(CspInstance::from_json(&i.to_json()).unwrap().to_json(), i.to_json());
            }
        }
        "coset_json" => {
            if let Ok(c) = CosetPredicate::from_json(text) {
                CosetPredicate::from_json(&c.to_json()).unwrap();
            }
        }
        "distribution_json" => {
            if let Ok(d) = AtomDistribution::from_json(text) {
                assert_eq!(AtomDistribution::from_json(&d.to_json()).unwrap().to_json(), d.to_json());
            }
        }
        "lp_json" => {
            let _ = LinearProgram::from_json(text);
        }
        "hypergraph_json" => {
            if let Ok(h) = Hypergraph::from_json(text) {
                Hypergraph::from_json(&h.to_json()).unwrap();
            }
        }
        "family_json" => {
            if let Ok(f) = LocalDistributionFamily::from_json(text) {
                LocalDistributionFamily::from_json(&f.to_json()).unwrap();
            }
        }
        "moment_json" => {
            let _ = MomentMatrix::from_json(text);
        }
        "gap_report_json" => {
            if let Ok(r) = GapReport::from_json(text) {
                assert_eq!(GapReport::from_json(&r.to_json()).unwrap(), r);
            }
        }
        other => panic!("corpus directory without a target: {other}"),
    }
}

fn corpus() -> Vec<(String, String)> {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    let mut out = Vec::new();
    for dir in std::fs::read_dir(root).unwrap() {
        let dir = dir.unwrap().path();
        let target = dir.file_name().unwrap().to_string_lossy().into_owned();
        for f in std::fs::read_dir(&dir).unwrap() {
            out.push((target.clone(), std::fs::read_to_string(f.unwrap().path()).unwrap()));
        }
    }
    out.sort();
    out
}

#[test]
fn corpus_seeds_parse() {
    let seeds = corpus();
    assert!(seeds.len() >= 20);
    for (target, text) in &seeds {
        feed(target, text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 3000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn corpus_mutations_never_panic(pick in any::<prop::sample::Index>(), edits in prop::collection::vec((any::<prop::sample::Index>(), 0u8..4, prop::sample::select(vec!['0', '1', '2', '3', '9', '-', '/', ',', '"', '[', ']', 'x'])), 1..4)) {
        let seeds = corpus();
        let (target, text) = &seeds[pick.index(seeds.len())];
        let mut chars: Vec<char> = text.chars().collect();
        for (at, op, c) in edits {
            if chars.is_empty() {
                break;
            }
            let i = at.index(chars.len());
            match op {
                0 => chars[i] = c,
                1 => { chars.remove(i); }
                2 => chars.insert(i, c),
                _ => chars.truncate(i),
            }
        }
        feed(target, &chars.into_iter().collect::<String>());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn parsers_never_panic(text in "\\PC{0,200}") {
        let _ = ParityCheckGraph::parse_alist(&text);
        let _ = parse_rational(&text);
        let _ = CspInstance::from_json(&text);
        let _ = CosetPredicate::from_json(&text);
        let _ = AtomDistribution::from_json(&text);
        let _ = LinearProgram::from_json(&text);
        let _ = Hypergraph::from_json(&text);
        let _ = LocalDistributionFamily::from_json(&text);
        let _ = MomentMatrix::from_json(&text);
        let _ = GapReport::from_json(&text);
    }

    #[test]
    fn alist_parser_survives_numeric_noise(nums in prop::collection::vec(0usize..40, 0..60)) {
        let text: String = nums.chunks(5).map(|c| c.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(" ") + "\n").collect();
        let _ = ParityCheckGraph::parse_alist(&text);
    }

    #[test]
    fn rationals_round_trip(n in -1000i64..1000, d in 1i64..1000) {
        let r = ratio(n, d);
        prop_assert_eq!(parse_rational(&hiergap::rational::format_rational(&r)).unwrap(), r);
    }
}
