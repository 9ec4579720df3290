use crate::{OpCounter, OracleError};

/// Toy shape of a scalar-decay (Mamba-2/3) layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadShape {
    pub heads: usize,
    pub head_dim: usize,
    pub d_state: usize,
    pub rank: usize,
}

impl HeadShape {
    pub fn state_elems(&self) -> usize {
        self.heads * self.head_dim * self.d_state
    }

    /// Width of one token's `x`, all heads and ranks.
    pub fn x_width(&self) -> usize {
        self.heads * self.rank * self.head_dim
    }

    fn bc_width(&self) -> usize {
        self.rank * self.d_state
    }
}

/// Recurrence inputs after discretization:
///
/// `h[t] = a[t]·h[t−1] + Σ_r u[t,r] ⊗ B[t,r]`, `y[t,r] = h[t]·C[t,r]`
/// per head, with B and C shared by all heads.
#[derive(Debug, Clone, PartialEq)]
pub struct SsdInput {
    pub len: usize,
    pub shape: HeadShape,
    /// `len × heads`.
    pub a: Vec<f64>,
    /// `len × heads × rank × head_dim`.
    pub u: Vec<f64>,
    /// `len × rank × d_state`.
    pub b: Vec<f64>,
    /// `len × rank × d_state`.
    pub c: Vec<f64>,
    /// `heads × head_dim × d_state`.
    pub h0: Vec<f64>,
}

fn check(name: &str, got: usize, want: usize) -> Result<(), OracleError> {
    if got == want {
        Ok(())
    } else {
        Err(OracleError::Shape(format!(
            "{name} has {got} elements, expected {want}"
        )))
    }
}

fn check_shape(s: &HeadShape) -> Result<(), OracleError> {
    if s.heads == 0 || s.head_dim == 0 || s.d_state == 0 || s.rank == 0 {
        return Err(OracleError::Shape("heads, head_dim, d_state and rank must be positive".into()));
    }
    Ok(())
}

impl SsdInput {
    pub fn validate(&self) -> Result<(), OracleError> {
        let s = &self.shape;
        check_shape(s)?;
        check("a", self.a.len(), self.len * s.heads)?;
        check("u", self.u.len(), self.len * s.x_width())?;
        check("b", self.b.len(), self.len * s.bc_width())?;
        check("c", self.c.len(), self.len * s.bc_width())?;
        check("h0", self.h0.len(), s.state_elems())
    }
}

/// Raw Mamba-2/3 layer inputs before the per-head decay and `x·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoInput {
    pub len: usize,
    pub shape: HeadShape,
    /// `len × heads`, already positive.
    pub dt: Vec<f64>,
    /// `heads`, negative.
    pub a_log: Vec<f64>,
    /// `len × heads × rank × head_dim`.
    pub x: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub h0: Vec<f64>,
}

/// Which algorithm evaluates the scalar-decay recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MimoMethod {
    Sequential,
    Chunked(usize),
}

/// `decay = exp(dt·A)` per head (one multiply, one exp) and `u = x·dt` per
/// element.
pub fn discretize(input: &MimoInput, c: &mut OpCounter) -> Result<SsdInput, OracleError> {
    let s = input.shape;
    check_shape(&s)?;
    check("dt", input.dt.len(), input.len * s.heads)?;
    check("a_log", input.a_log.len(), s.heads)?;
    check("x", input.x.len(), input.len * s.x_width())?;
    let per_head = s.rank * s.head_dim;
    let mut a = Vec::with_capacity(input.len * s.heads);
    let mut u = Vec::with_capacity(input.x.len());
    for t in 0..input.len {
        for h in 0..s.heads {
            let dt = input.dt[t * s.heads + h];
            let e = c.mul(dt, input.a_log[h]);
            a.push(c.exp(e));
            let base = (t * s.heads + h) * per_head;
            for &x in &input.x[base..base + per_head] {
                u.push(c.mul(x, dt));
            }
        }
    }
    let out = SsdInput {
        len: input.len,
        shape: s,
        a,
        u,
        b: input.b.clone(),
        c: input.c.clone(),
        h0: input.h0.clone(),
    };
    out.validate()?;
    Ok(out)
}

/// Full layer: discretize, then evaluate with `method`.
pub fn mimo_scan(
    input: &MimoInput,
    method: MimoMethod,
    c: &mut OpCounter,
) -> Result<Vec<f64>, OracleError> {
    let inner = discretize(input, c)?;
    match method {
        MimoMethod::Sequential => mimo_sequential(&inner, c),
        MimoMethod::Chunked(q) => chunked_ssd(&inner, q, c),
    }
}

/// Step-by-step reference. Returns `y` (`len × heads × rank × head_dim`).
pub fn mimo_sequential(input: &SsdInput, c: &mut OpCounter) -> Result<Vec<f64>, OracleError> {
    input.validate()?;
    let s = input.shape;
    let (hh, pp, nn, rr) = (s.heads, s.head_dim, s.d_state, s.rank);
    let mut h = input.h0.clone();
    let mut y = Vec::with_capacity(input.len * s.x_width());
    for t in 0..input.len {
        let bt = &input.b[t * rr * nn..(t + 1) * rr * nn];
        let ct = &input.c[t * rr * nn..(t + 1) * rr * nn];
        for hd in 0..hh {
            let a = input.a[t * hh + hd];
            let ut = &input.u[(t * hh + hd) * rr * pp..(t * hh + hd + 1) * rr * pp];
            let hs = &mut h[hd * pp * nn..(hd + 1) * pp * nn];
            for p in 0..pp {
                for n in 0..nn {
                    let mut v = c.mul(a, hs[p * nn + n]);
                    for r in 0..rr {
                        v = c.mac(v, ut[r * pp + p], bt[r * nn + n]);
                    }
                    hs[p * nn + n] = v;
                }
            }
            for r in 0..rr {
                for p in 0..pp {
                    let mut acc = 0.0;
                    for n in 0..nn {
                        acc = c.mac(acc, ct[r * nn + n], hs[p * nn + n]);
                    }
                    y.push(acc);
                }
            }
        }
    }
    Ok(y)
}

/// Chunked block formulation with chunk size `q`.
///
/// Per head and chunk: segment decays `L[i][j] = Π_{j<k≤i} a[k]` built row
/// by row, prefixes `p[i] = L[i][0]·a[0]`, the full `(q·R)²` score block
/// `C·Bᵀ` masked by `L`, the intra-chunk product with `u`, inputs scaled by
/// their decay to the chunk end, the chunk state, state passing
/// `h ← p[q−1]·h + h_chunk`, and the contribution `p[i]·(C·h_prev)` of the
/// carried state. The sequence is padded to whole chunks with `a = 1` and
/// zero `u`, B and C; padded outputs are dropped.
pub fn chunked_ssd(input: &SsdInput, q: usize, c: &mut OpCounter) -> Result<Vec<f64>, OracleError> {
    input.validate()?;
    if q == 0 {
        return Err(OracleError::Shape("chunk size must be positive".into()));
    }
    let s = input.shape;
    let (hh, pp, nn, rr) = (s.heads, s.head_dim, s.d_state, s.rank);
    let len = input.len;
    let chunks = len.div_ceil(q);
    let xw = s.x_width();
    let mut y = vec![0.0; len * xw];
    let mut h = input.h0.clone();
    let qr = q * rr;

    for ch in 0..chunks {
        let t0 = ch * q;
        for hd in 0..hh {
            let a: Vec<f64> = (0..q)
                .map(|i| if t0 + i < len { input.a[(t0 + i) * hh + hd] } else { 1.0 })
                .collect();
            // Chunk-local u[(i·R + r)·P + p] and B, C[(i·R + r)·N + n],
            // zero past the end of the sequence.
            let mut uq = vec![0.0; qr * pp];
            let mut bq = vec![0.0; qr * nn];
            let mut cq = vec![0.0; qr * nn];
            for i in 0..q.min(len - t0) {
                let t = t0 + i;
                let src = t * xw + hd * rr * pp;
                uq[i * rr * pp..(i + 1) * rr * pp].copy_from_slice(&input.u[src..src + rr * pp]);
                let bc = t * rr * nn;
                bq[i * rr * nn..(i + 1) * rr * nn].copy_from_slice(&input.b[bc..bc + rr * nn]);
                cq[i * rr * nn..(i + 1) * rr * nn].copy_from_slice(&input.c[bc..bc + rr * nn]);
            }

            let mut lmask = vec![0.0; q * q];
            for i in 0..q {
                for j in 0..i {
                    lmask[i * q + j] = c.mul(lmask[(i - 1) * q + j], a[i]);
                }
                lmask[i * q + i] = 1.0;
            }
            let mut pref = vec![a[0]; q];
            for i in 1..q {
                pref[i] = c.mul(lmask[i * q], a[0]);
            }

            let mut m = vec![0.0; qr * qr];
            for row in 0..qr {
                let ci = &cq[row * nn..(row + 1) * nn];
                for col in 0..qr {
                    let bj = &bq[col * nn..(col + 1) * nn];
                    let mut g = 0.0;
                    for n in 0..nn {
                        g = c.mac(g, ci[n], bj[n]);
                    }
                    m[row * qr + col] = c.mul(g, lmask[(row / rr) * q + col / rr]);
                }
            }
            let mut intra = vec![0.0; qr * pp];
            for row in 0..qr {
                for p in 0..pp {
                    let mut acc = 0.0;
                    for col in 0..qr {
                        acc = c.mac(acc, m[row * qr + col], uq[col * pp + p]);
                    }
                    intra[row * pp + p] = acc;
                }
            }

            let mut ux = vec![0.0; qr * pp];
            for k in 0..qr * pp {
                ux[k] = c.mul(uq[k], lmask[(q - 1) * q + k / (rr * pp)]);
            }
            let mut hc = vec![0.0; pp * nn];
            for p in 0..pp {
                for n in 0..nn {
                    let mut acc = 0.0;
                    for col in 0..qr {
                        acc = c.mac(acc, ux[col * pp + p], bq[col * nn + n]);
                    }
                    hc[p * nn + n] = acc;
                }
            }

            let hs = &mut h[hd * pp * nn..(hd + 1) * pp * nn];
            for i in 0..q {
                for r in 0..rr {
                    for p in 0..pp {
                        let mut acc = 0.0;
                        for n in 0..nn {
                            acc = c.mac(acc, cq[(i * rr + r) * nn + n], hs[p * nn + n]);
                        }
                        let scaled = c.mul(acc, pref[i]);
                        let v = c.add(intra[(i * rr + r) * pp + p], scaled);
                        if t0 + i < len {
                            y[(t0 + i) * xw + (hd * rr + r) * pp + p] = v;
                        }
                    }
                }
            }
            for k in 0..pp * nn {
                hs[k] = c.mac(hc[k], pref[q - 1], hs[k]);
            }
        }
    }
    Ok(y)
}
