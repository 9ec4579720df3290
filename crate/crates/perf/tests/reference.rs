//! The shipped configurations against the reference performance table.

use std::path::PathBuf;

use archspec::{Formulation, ModelConfig, VariantKind};
use perf::calibration::{self, deltas, reference_rows, REFERENCE_ROWS};
use perf::{regime_series, HardwareConfig, Scenario};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn shipped() -> Vec<ModelConfig> {
    ["mamba1", "mamba2", "mamba3"]
        .iter()
        .map(|n| ModelConfig::load(root().join(format!("configs/{n}-880m"))).unwrap())
        .collect()
}

fn hw() -> HardwareConfig {
    HardwareConfig::load(root().join("hw/edge-asic-default")).unwrap()
}

#[test]
fn shipped_hardware_is_the_default() {
    assert_eq!(hw(), HardwareConfig::default());
    assert_eq!(hw().matmul_peak(), 512e9);
    assert_eq!(hw().ridge_point(), 512e9 / 34e9);
}

#[test]
fn every_row_is_in_band() {
    let rows = reference_rows(&shipped(), &hw()).unwrap();
    assert_eq!(rows.len(), REFERENCE_ROWS.len());
    for (row, t) in rows.iter().zip(REFERENCE_ROWS.iter()) {
        assert_eq!((row.variant, row.formulation), (t.variant, t.formulation));
        assert!(row.margin().unwrap() > 0.0, "{:?} {:?}", row.variant, row.formulation);
    }
    let d = deltas(&rows).unwrap();
    assert!(d.margin() > 0.0, "{d:?}");
    assert!(d.throughput_delta < 0.0);
    let (lo, hi) = calibration::ENERGY_RATIO_BAND;
    assert!((lo..=hi).contains(&d.energy_ratio), "{d:?}");
}

#[test]
fn throughput_is_peak_over_ops() {
    // Every reference row is compute bound, so tok/s = 512 GOps/s / GOps.
    for row in reference_rows(&shipped(), &hw()).unwrap() {
        let e = &row.estimate;
        assert_eq!(e.bound, perf::Bound::ComputeBound);
        let expected = 512.0 / e.ops_per_token;
        assert!((e.throughput_tok_per_s / expected - 1.0).abs() < 1e-12);
    }
}

#[test]
fn mamba1_state_update_oi_by_hand() {
    // 8·D_i·N ops over the scan boundary 2·(4·D_i + 2N) bytes, per layer.
    let cfg = &shipped()[0];
    let (di, n) = (cfg.d_inner() as f64, cfg.d_state as f64);
    let expected = 8.0 * di * n / (2.0 * (4.0 * di + 2.0 * n));
    let rows = reference_rows(std::slice::from_ref(cfg), &hw()).unwrap();
    let seq = rows.iter().find(|r| r.formulation == Formulation::Sequential).unwrap();
    assert!((seq.estimate.state_update_oi.unwrap() / expected - 1.0).abs() < 1e-12);
}

#[test]
fn calibration_reproduces_the_shipped_configs() {
    let c = calibration::calibrate(&hw(), &Default::default()).unwrap();
    assert_eq!(c.configs.to_vec(), shipped());
    assert!(c.mamba1_margin > 0.0 && c.mamba23_margin > 0.0);
}

#[test]
fn regime_orderings() {
    let cfgs = shipped();
    let edge = regime_series(&cfgs, Scenario::EdgePrefill, &hw()).unwrap();
    assert_eq!(edge[0].normalized, 1.0);
    assert!(edge[0].throughput_tok_per_s > edge[1].throughput_tok_per_s);
    assert!(edge[1].throughput_tok_per_s > edge[2].throughput_tok_per_s);
    let dec = regime_series(&cfgs, Scenario::HyperscaleDecode, &hw()).unwrap();
    assert_eq!(dec[0].normalized, 1.0);
    assert!(dec[2].throughput_tok_per_s > dec[1].throughput_tok_per_s);
    assert!(dec[1].throughput_tok_per_s > dec[0].throughput_tok_per_s);
    let ratio = dec[2].oi / dec[1].oi;
    assert!((3.2..=4.8).contains(&ratio), "{ratio}");
}

#[test]
fn decode_oi_ratio_is_rank_at_equal_shapes() {
    // Same N and P: the rank-R update and readout multiply ops by about R.
    let m2 = ModelConfig::mamba2(1024, 4, 64, 64);
    let m3 = ModelConfig::mamba3(1024, 4, 64, 64, 4);
    let pts = regime_series(&[m2, m3], Scenario::HyperscaleDecode, &hw()).unwrap();
    let ratio = pts[1].oi / pts[0].oi;
    assert!((ratio / 4.0 - 1.0).abs() <= 0.2, "{ratio}");
    assert_eq!(pts[0].variant, VariantKind::Mamba2);
}
