use std::time::Instant;

use archspec::ModelConfig;
use oracle::check::{run_equivalence, run_fidelity, EquivalenceOptions, Fault};
use oracle::{chunked_ssd, mimo_sequential, HeadShape, OpCounter, SsdInput};

#[test]
fn default_equivalence_corpus_passes() {
    let t = Instant::now();
    let rep = run_equivalence(&EquivalenceOptions::default());
    eprintln!("equivalence: {:?}", t.elapsed());
    assert_eq!(rep.instances, 1000);
    for f in &rep.families {
        assert_eq!(f.cases, 1000);
        assert!(f.passed(), "{} worst {} at {}", f.name, f.worst, f.worst_shape);
    }
}

#[test]
fn degenerate_lengths_pass() {
    let rep = run_equivalence(&EquivalenceOptions {
        instances: 50,
        lengths: vec![1],
        ..EquivalenceOptions::default()
    });
    assert!(rep.passed());
}

#[test]
fn injected_faults_fail_by_name() {
    for (fault, family) in [(Fault::Pscan, "pscan"), (Fault::Ssd, "ssd q=1")] {
        let rep = run_equivalence(&EquivalenceOptions {
            instances: 5,
            fault: Some(fault),
            ..EquivalenceOptions::default()
        });
        let f = rep.families.iter().find(|f| f.name == family).unwrap();
        assert!(!f.passed());
    }
    let cases = run_fidelity(0, &[], Some(Fault::Count)).unwrap();
    assert!(cases.iter().any(|c| !c.passed()));
}

#[test]
fn counts_match_the_analytic_model() {
    let cases = run_fidelity(0, &[], None).unwrap();
    assert!(cases.len() >= 40);
    for c in &cases {
        assert!(c.passed(), "{c}");
        if c.formulation == archspec::Formulation::Sequential {
            assert_eq!(c.analytic, c.instrumented as f64, "{c}");
        }
    }
}

#[test]
fn rank_scales_the_rank_one_terms() {
    // H=2, P=4, N=8: the input outer products and the readout are R× the
    // rank-1 work; the per-element decay multiply is not.
    let count = |r: usize| {
        let shape = HeadShape { heads: 2, head_dim: 4, d_state: 8, rank: r };
        let inp = oracle::corpus::ssd_input(&mut oracle::corpus::rng(1), 16, shape);
        let mut c = OpCounter::new();
        mimo_sequential(&inp, &mut c).unwrap();
        c.weighted(1) - (16 * shape.state_elems()) as u64
    };
    assert_eq!(count(4), 4 * count(1));
}

#[test]
fn rank_one_is_the_mamba2_case() {
    let cfg = ModelConfig::mamba3(4, 1, 8, 4, 1);
    let m2 = ModelConfig::mamba2(4, 1, 8, 4);
    for f in [archspec::Formulation::Sequential, archspec::Formulation::Ssd] {
        let a = oracle::check::instrumented_ops(&cfg, f, 10, 4, 3).unwrap();
        let b = oracle::check::instrumented_ops(&m2, f, 10, 4, 3).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn boundary_chunkings() {
    let shape = HeadShape { heads: 2, head_dim: 3, d_state: 2, rank: 2 };
    let inp: SsdInput = oracle::corpus::ssd_input(&mut oracle::corpus::rng(9), 37, shape);
    let reference = mimo_sequential(&inp, &mut OpCounter::new()).unwrap();
    for q in [1, 5, 37, 64] {
        let out = chunked_ssd(&inp, q, &mut OpCounter::new()).unwrap();
        assert!(oracle::check::deviation(&out, &reference) < 1e-10, "q={q}");
    }
    assert!(chunked_ssd(&inp, 0, &mut OpCounter::new()).is_err());
}
