use archspec::{Formulation, ModelConfig, VariantKind};
use opgraph::WorkloadSpec;
use perf::{
    evaluate, log_sizes, roofline_estimate, sweep_batch, sweep_model_size, traffic_per_token,
    Bound, Composition, ComputeMapping, HardwareConfig, RooflineOptions, SweepOptions,
};
use proptest::prelude::*;

fn variant() -> impl Strategy<Value = VariantKind> {
    prop_oneof![
        Just(VariantKind::Mamba1),
        Just(VariantKind::Mamba2),
        Just(VariantKind::Mamba3)
    ]
}

fn config() -> impl Strategy<Value = ModelConfig> {
    (variant(), 1u64..=24, 1u64..=6, prop_oneof![Just(0u64), Just(1000u64)]).prop_map(
        |(v, units, l, vocab)| {
            let d = units * if v == VariantKind::Mamba1 { 16 } else { 32 };
            ModelConfig::template(v, d, l).with_vocab(vocab)
        },
    )
}

fn workload(cfg: &ModelConfig) -> impl Strategy<Value = WorkloadSpec> {
    let par = Formulation::parallel_for(cfg.variant);
    prop_oneof![
        (1u64..=512, prop_oneof![Just(Formulation::Sequential), Just(par)])
            .prop_map(|(l, f)| WorkloadSpec::prefill(f, l).with_chunk(16)),
        (1u64..=4096).prop_map(|b| WorkloadSpec::decode(b, 1024)),
    ]
}

fn case() -> impl Strategy<Value = (ModelConfig, WorkloadSpec)> {
    config().prop_flat_map(|c| {
        let w = workload(&c);
        (Just(c), w)
    })
}

fn options() -> impl Strategy<Value = RooflineOptions> {
    (
        prop_oneof![Just(ComputeMapping::Unified), Just(ComputeMapping::PerArray)],
        prop_oneof![Just(Composition::WholeModel), Just(Composition::Serial)],
        0.0f64..0.9,
    )
        .prop_map(|(mapping, composition, sram_reserve)| RooflineOptions {
            mapping,
            composition,
            sram_reserve,
        })
}

fn hardware() -> impl Strategy<Value = HardwareConfig> {
    (1u64..=4096, 1u64..=256, 1e8f64..1e9, 1u64..=(8 << 20), 1e9f64..1e11).prop_map(
        |(mac, lanes, clk, sram, bw)| HardwareConfig {
            mac_units: mac,
            simd_lanes: lanes,
            clock_hz: clk,
            sram_bytes: sram,
            dram_bw_bytes_per_s: bw,
            ..HardwareConfig::default()
        },
    )
}

proptest! {
    #[test]
    fn roofline_dominance((cfg, wl) in case(), hw in hardware(), opts in options()) {
        let e = evaluate(&cfg, &wl, &hw, &opts).unwrap();
        let lat = e.latency_s_per_token;
        prop_assert!(lat >= e.compute_s * (1.0 - 1e-12));
        prop_assert!(lat >= e.memory_s * (1.0 - 1e-12));
        if opts.composition == Composition::WholeModel {
            prop_assert_eq!(lat, e.compute_s.max(e.memory_s));
        }
        prop_assert!((e.throughput_tok_per_s * lat - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bound_flips_at_the_ridge((cfg, wl) in case(), hw in hardware(), opts in options()) {
        let e = evaluate(&cfg, &wl, &hw, &opts).unwrap();
        let by_oi = e.oi_ops_per_byte >= e.ridge_point;
        let by_time = e.bound == Bound::ComputeBound;
        // Floating-point ties aside, both classifications agree.
        let tie = (e.compute_s / e.memory_s - 1.0).abs() < 1e-9;
        prop_assert!(tie || by_oi == by_time);
        if opts.mapping == ComputeMapping::Unified {
            prop_assert!((e.ridge_point / hw.ridge_point() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_is_additive((cfg, wl) in case(), hw in hardware(), opts in options()) {
        let e = evaluate(&cfg, &wl, &hw, &opts).unwrap();
        let ops = e.ops_per_token * 1e9;
        let bits = e.traffic.total() * 8.0;
        let expected = (ops * hw.e_op_pj + bits * hw.e_mem_pj_per_bit) * 1e-9;
        prop_assert!((e.energy_mj_per_token - expected).abs() <= 1e-12 * expected.max(1e-300));
        let hot = HardwareConfig { e_mem_pj_per_bit: 2.0 * hw.e_mem_pj_per_bit, ..hw.clone() };
        let e2 = evaluate(&cfg, &wl, &hot, &opts).unwrap();
        let mem = bits * hw.e_mem_pj_per_bit * 1e-9;
        prop_assert!((e2.energy_mj_per_token - e.energy_mj_per_token - mem).abs() <= 1e-9 * expected);
    }

    #[test]
    fn throughput_monotone_in_hardware(
        (cfg, wl) in case(),
        hw in hardware(),
        opts in options(),
        which in 0usize..4,
        factor in 1.0f64..4.0,
    ) {
        let base = evaluate(&cfg, &wl, &hw, &opts).unwrap();
        let mut up = hw.clone();
        match which {
            0 => up.mac_units = (hw.mac_units as f64 * factor).ceil() as u64,
            1 => up.simd_lanes = (hw.simd_lanes as f64 * factor).ceil() as u64,
            2 => up.clock_hz *= factor,
            _ => up.dram_bw_bytes_per_s *= factor,
        }
        let better = evaluate(&cfg, &wl, &up, &opts).unwrap();
        prop_assert!(better.throughput_tok_per_s >= base.throughput_tok_per_s * (1.0 - 1e-12));
    }

    #[test]
    fn batch_throughput_is_non_decreasing(cfg in config(), hw in hardware(), opts in options()) {
        let pts = sweep_batch(&cfg, &[1, 2, 8, 64, 1024, 1 << 16], &hw, &opts).unwrap();
        for w in pts.windows(2) {
            prop_assert!(w[1].estimate.throughput_tok_per_s >= w[0].estimate.throughput_tok_per_s * (1.0 - 1e-12));
        }
    }

    #[test]
    fn decode_traffic_approaches_state_bytes(cfg in config()) {
        let hw = HardwareConfig::default();
        let opts = RooflineOptions::default();
        let wl = WorkloadSpec::decode(1 << 40, 1024);
        let t = opgraph::totals(&cfg, &wl).unwrap();
        let tr = traffic_per_token(&t, &hw, &opts);
        prop_assert_eq!(tr.activations, 0.0);
        prop_assert!(tr.weights <= t.weight_bytes_total / (1u64 << 40) as f64 * (1.0 + 1e-12));
        prop_assert_eq!(tr.state, t.state_bytes_per_token);
        roofline_estimate(&t, &hw, &opts).unwrap();
    }
}

#[test]
fn scaling_law_amplification() {
    // State-update share of the work rises as matched models shrink.
    let sweep = sweep_model_size(
        &log_sizes(15e6, 880e6, 8),
        &VariantKind::ALL,
        &HardwareConfig::default(),
        &SweepOptions::default(),
    )
    .unwrap();
    for v in VariantKind::ALL {
        let share: Vec<f64> = sweep
            .rows
            .iter()
            .map(|r| {
                let e = &r.point(v).unwrap().estimate;
                e.state_update_ops / e.ops_per_token
            })
            .collect();
        for w in share.windows(2) {
            assert!(w[0] > w[1], "{v}: {share:?}");
        }
    }
}

#[test]
fn size_sweep_penalty_grows_as_models_shrink() {
    let sweep = sweep_model_size(
        &log_sizes(15e6, 880e6, 8),
        &VariantKind::ALL,
        &HardwareConfig::default(),
        &SweepOptions::default(),
    )
    .unwrap();
    let pen: Vec<f64> = sweep
        .rows
        .iter()
        .map(|r| r.point(VariantKind::Mamba3).unwrap().normalized_latency - 1.0)
        .collect();
    for w in pen.windows(2) {
        assert!(w[0] > w[1], "{pen:?}");
    }
    assert!(pen[0] / pen[pen.len() - 1] > 1.5);
    for r in &sweep.rows {
        assert_eq!(r.point(VariantKind::Mamba2).unwrap().normalized_latency, 1.0);
    }
}
