//! Seeded random toy instances.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scan::ScanInput;
use crate::selective::SelectiveInput;
use crate::ssd::{HeadShape, MimoInput, SsdInput};

/// Deterministic generator; the same seed yields the same corpus.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn fill(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Decays in `[0.3, 1)`, inputs and initial state in `[−1, 1)`.
pub fn scan_input(rng: &mut impl Rng, len: usize, width: usize) -> ScanInput {
    let a = fill(rng, len * width, 0.3, 1.0);
    let b = fill(rng, len * width, -1.0, 1.0);
    let h0 = fill(rng, width, -1.0, 1.0);
    ScanInput::with_h0(a, b, h0).expect("generated shapes are consistent")
}

pub fn selective_input(
    rng: &mut impl Rng,
    len: usize,
    d_inner: usize,
    d_state: usize,
) -> SelectiveInput {
    SelectiveInput {
        len,
        d_inner,
        d_state,
        x: fill(rng, len * d_inner, -1.0, 1.0),
        delta: fill(rng, len * d_inner, 0.01, 1.0),
        a: fill(rng, d_inner * d_state, -2.0, -0.1),
        b: fill(rng, len * d_state, -1.0, 1.0),
        c: fill(rng, len * d_state, -1.0, 1.0),
        h0: fill(rng, d_inner * d_state, -1.0, 1.0),
    }
}

pub fn ssd_input(rng: &mut impl Rng, len: usize, shape: HeadShape) -> SsdInput {
    let bc = len * shape.rank * shape.d_state;
    SsdInput {
        len,
        shape,
        a: fill(rng, len * shape.heads, 0.3, 1.0),
        u: fill(rng, len * shape.x_width(), -1.0, 1.0),
        b: fill(rng, bc, -1.0, 1.0),
        c: fill(rng, bc, -1.0, 1.0),
        h0: fill(rng, shape.state_elems(), -1.0, 1.0),
    }
}

pub fn mimo_input(rng: &mut impl Rng, len: usize, shape: HeadShape) -> MimoInput {
    let bc = len * shape.rank * shape.d_state;
    MimoInput {
        len,
        shape,
        dt: fill(rng, len * shape.heads, 0.01, 1.0),
        a_log: fill(rng, shape.heads, -2.0, -0.1),
        x: fill(rng, len * shape.x_width(), -1.0, 1.0),
        b: fill(rng, bc, -1.0, 1.0),
        c: fill(rng, bc, -1.0, 1.0),
        h0: fill(rng, shape.state_elems(), -1.0, 1.0),
    }
}

/// Small head shape with rank drawn from {1, 2, 4}.
pub fn head_shape(rng: &mut impl Rng) -> HeadShape {
    HeadShape {
        heads: rng.gen_range(1..=2),
        head_dim: rng.gen_range(1..=3),
        d_state: rng.gen_range(1..=3),
        rank: [1, 2, 4][rng.gen_range(0..3)],
    }
}
