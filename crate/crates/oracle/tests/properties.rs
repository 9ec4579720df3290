use oracle::check::deviation;
use oracle::{
    blelloch_pscan, chunked_ssd, mimo_sequential, selective_scan, sequential_scan, HeadShape,
    OpCounter, ScanInput, ScanMethod,
};
use proptest::prelude::*;

fn scan_case() -> impl Strategy<Value = ScanInput> {
    (1usize..=64, 1usize..=4).prop_flat_map(|(len, w)| {
        (
            prop::collection::vec(0.3f64..1.0, len * w),
            prop::collection::vec(-1.0f64..1.0, len * w),
            prop::collection::vec(-1.0f64..1.0, w),
        )
            .prop_map(|(a, b, h0)| ScanInput::with_h0(a, b, h0).unwrap())
    })
}

proptest! {
    #[test]
    fn pscan_equals_sequential(inp in scan_case()) {
        let seq = sequential_scan(&inp, &mut OpCounter::new());
        let par = blelloch_pscan(&inp, &mut OpCounter::new());
        prop_assert!(deviation(&par, &seq) < 1e-12);
    }

    #[test]
    fn pscan_count_is_closed_form(inp in scan_case()) {
        let mut c = OpCounter::new();
        blelloch_pscan(&inp, &mut c);
        let (s, p) = (inp.width as u64, inp.len.next_power_of_two() as u64);
        prop_assert_eq!(c.weighted(1), 2 * s + 6 * s * (p - 1));
    }

    #[test]
    fn scan_is_linear_in_b_and_h0(inp in scan_case(), k in -3.0f64..3.0) {
        // scan(a, b1 + k·b2, h1 + k·h2) = scan(a, b1, h1) + k·scan(a, b2, h2)
        let other = ScanInput::with_h0(
            inp.a.clone(),
            inp.b.iter().map(|x| 0.5 - x).collect(),
            inp.h0.iter().map(|x| x * x).collect(),
        ).unwrap();
        let mixed = ScanInput::with_h0(
            inp.a.clone(),
            inp.b.iter().zip(&other.b).map(|(x, y)| x + k * y).collect(),
            inp.h0.iter().zip(&other.h0).map(|(x, y)| x + k * y).collect(),
        ).unwrap();
        let c = &mut OpCounter::new();
        let (y1, y2, ym) = (sequential_scan(&inp, c), sequential_scan(&other, c), sequential_scan(&mixed, c));
        let sum: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a + k * b).collect();
        prop_assert!(deviation(&ym, &sum) < 1e-12);
    }

    #[test]
    fn ssd_equals_sequential(
        len in 1usize..=40,
        q in 1usize..=48,
        heads in 1usize..=2,
        head_dim in 1usize..=3,
        d_state in 1usize..=3,
        rank in 1usize..=4,
        seed in any::<u64>(),
    ) {
        let shape = HeadShape { heads, head_dim, d_state, rank };
        let inp = oracle::corpus::ssd_input(&mut oracle::corpus::rng(seed), len, shape);
        let reference = mimo_sequential(&inp, &mut OpCounter::new()).unwrap();
        let out = chunked_ssd(&inp, q, &mut OpCounter::new()).unwrap();
        prop_assert!(deviation(&out, &reference) < 1e-10);
    }

    #[test]
    fn selective_formulations_agree(len in 1usize..=32, di in 1usize..=4, n in 1usize..=4, seed in any::<u64>()) {
        let inp = oracle::corpus::selective_input(&mut oracle::corpus::rng(seed), len, di, n);
        let a = selective_scan(&inp, ScanMethod::Sequential, &mut OpCounter::new()).unwrap();
        let b = selective_scan(&inp, ScanMethod::Blelloch, &mut OpCounter::new()).unwrap();
        prop_assert!(deviation(&b, &a) < 1e-12);
    }

    #[test]
    fn corpus_is_deterministic(seed in any::<u64>()) {
        let g = |s| oracle::corpus::scan_input(&mut oracle::corpus::rng(s), 8, 3);
        prop_assert_eq!(g(seed), g(seed));
    }
}
