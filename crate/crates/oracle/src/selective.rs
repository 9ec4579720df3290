use crate::scan::{blelloch_pscan, sequential_scan, ScanInput};
use crate::{OpCounter, OracleError};

/// Which scan evaluates the Mamba-1 recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMethod {
    Sequential,
    Blelloch,
}

/// One Mamba-1 selective scan over `len` tokens with `d_inner` channels and
/// `d_state` states per channel. Activations are row-major by token.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectiveInput {
    pub len: usize,
    pub d_inner: usize,
    pub d_state: usize,
    /// `len × d_inner`.
    pub x: Vec<f64>,
    /// `len × d_inner`, already positive.
    pub delta: Vec<f64>,
    /// `d_inner × d_state`, negative.
    pub a: Vec<f64>,
    /// `len × d_state`.
    pub b: Vec<f64>,
    /// `len × d_state`.
    pub c: Vec<f64>,
    /// `d_inner × d_state`.
    pub h0: Vec<f64>,
}

impl SelectiveInput {
    pub fn validate(&self) -> Result<(), OracleError> {
        let (l, di, n) = (self.len, self.d_inner, self.d_state);
        let checks = [
            ("x", self.x.len(), l * di),
            ("delta", self.delta.len(), l * di),
            ("a", self.a.len(), di * n),
            ("b", self.b.len(), l * n),
            ("c", self.c.len(), l * n),
            ("h0", self.h0.len(), di * n),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(OracleError::Shape(format!(
                    "{name} has {got} elements, expected {want}"
                )));
            }
        }
        if di == 0 || n == 0 {
            return Err(OracleError::Shape("d_inner and d_state must be positive".into()));
        }
        Ok(())
    }
}

/// Discretize, scan and read out. Returns `y` (`len × d_inner`).
///
/// Per state element: `Ā = exp(Δ·A)` and `B̄x = Δ·B·x` (three multiplies,
/// one exp), the recurrence, and `y = Σ C·h` accumulated from zero.
pub fn selective_scan(
    input: &SelectiveInput,
    method: ScanMethod,
    c: &mut OpCounter,
) -> Result<Vec<f64>, OracleError> {
    input.validate()?;
    let (l, di, n) = (input.len, input.d_inner, input.d_state);
    let s = di * n;
    let mut abar = Vec::with_capacity(l * s);
    let mut bx = Vec::with_capacity(l * s);
    for t in 0..l {
        for i in 0..di {
            let dt = input.delta[t * di + i];
            let xi = input.x[t * di + i];
            for k in 0..n {
                let e = c.mul(dt, input.a[i * n + k]);
                abar.push(c.exp(e));
                let db = c.mul(dt, input.b[t * n + k]);
                bx.push(c.mul(db, xi));
            }
        }
    }
    let scan = ScanInput::with_h0(abar, bx, input.h0.clone())?;
    let h = match method {
        ScanMethod::Sequential => sequential_scan(&scan, c),
        ScanMethod::Blelloch => blelloch_pscan(&scan, c),
    };
    let mut y = Vec::with_capacity(l * di);
    for t in 0..l {
        for i in 0..di {
            let mut acc = 0.0;
            for k in 0..n {
                acc = c.mac(acc, input.c[t * n + k], h[t * s + i * n + k]);
            }
            y.push(acc);
        }
    }
    Ok(y)
}
