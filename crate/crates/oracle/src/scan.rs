use crate::{OpCounter, OracleError};

/// Diagonal linear recurrence `h[t] = a[t] ⊙ h[t−1] + b[t]`.
///
/// `a` and `b` hold `len` rows of `width` elements, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanInput {
    pub len: usize,
    pub width: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub h0: Vec<f64>,
}

impl ScanInput {
    /// Zero initial state.
    pub fn new(width: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self, OracleError> {
        let h0 = vec![0.0; width];
        Self::with_h0(a, b, h0)
    }

    pub fn with_h0(a: Vec<f64>, b: Vec<f64>, h0: Vec<f64>) -> Result<Self, OracleError> {
        let width = h0.len();
        if width == 0 {
            return Err(OracleError::Shape("state width must be positive".into()));
        }
        if a.len() != b.len() || !a.len().is_multiple_of(width) {
            return Err(OracleError::Shape(format!(
                "a has {} and b has {} elements; both must be len × {width}",
                a.len(),
                b.len()
            )));
        }
        Ok(Self {
            len: a.len() / width,
            width,
            a,
            b,
            h0,
        })
    }

    pub fn row<'a>(&self, v: &'a [f64], t: usize) -> &'a [f64] {
        &v[t * self.width..(t + 1) * self.width]
    }
}

/// Step-by-step recurrence. Returns `h[1..=len]` row-major.
pub fn sequential_scan(input: &ScanInput, c: &mut OpCounter) -> Vec<f64> {
    let w = input.width;
    let mut out = Vec::with_capacity(input.len * w);
    let mut h = input.h0.clone();
    for t in 0..input.len {
        let (a, b) = (input.row(&input.a, t), input.row(&input.b, t));
        for i in 0..w {
            h[i] = c.mac(b[i], a[i], h[i]);
        }
        out.extend_from_slice(&h);
    }
    out
}

/// `(a1, b1) ∘ (a2, b2) = (a1·a2, a2·b1 + b2)`: apply the left step first.
fn combine(
    c: &mut OpCounter,
    (a1, b1): (&[f64], &[f64]),
    (a2, b2): (&[f64], &[f64]),
) -> (Vec<f64>, Vec<f64>) {
    let a: Vec<f64> = a1.iter().zip(a2).map(|(&x, &y)| c.mul(x, y)).collect();
    let b = b1
        .iter()
        .zip(a2.iter().zip(b2))
        .map(|(&p, (&q, &r))| c.mac(r, q, p))
        .collect();
    (a, b)
}

/// Work-efficient Blelloch scan over `P = next_pow2(len)` padded elements.
///
/// The initial state is folded into element 0 (`b0 ← a0·h0 + b0`), then an
/// up-sweep and a down-sweep of `P−1` combines each produce the exclusive
/// prefix. The inclusive prefix is the exclusive one shifted left with the
/// saved root as its last entry, so no further combines are needed.
pub fn blelloch_pscan(input: &ScanInput, c: &mut OpCounter) -> Vec<f64> {
    let (n, w) = (input.len, input.width);
    if n == 0 {
        return Vec::new();
    }
    let p = n.next_power_of_two();
    let mut a: Vec<Vec<f64>> = (0..p)
        .map(|t| {
            if t < n {
                input.row(&input.a, t).to_vec()
            } else {
                vec![1.0; w]
            }
        })
        .collect();
    let mut b: Vec<Vec<f64>> = (0..p)
        .map(|t| {
            if t < n {
                input.row(&input.b, t).to_vec()
            } else {
                vec![0.0; w]
            }
        })
        .collect();
    for i in 0..w {
        b[0][i] = c.mac(b[0][i], a[0][i], input.h0[i]);
    }

    let mut stride = 1;
    while stride < p {
        let mut k = 2 * stride - 1;
        while k < p {
            let l = k - stride;
            let (na, nb) = combine(c, (&a[l], &b[l]), (&a[k], &b[k]));
            a[k] = na;
            b[k] = nb;
            k += 2 * stride;
        }
        stride *= 2;
    }

    let root = b[p - 1].clone();
    a[p - 1] = vec![1.0; w];
    b[p - 1] = vec![0.0; w];
    stride = p / 2;
    while stride >= 1 {
        let mut k = 2 * stride - 1;
        while k < p {
            let l = k - stride;
            let (la, lb) = (a[l].clone(), b[l].clone());
            a[l] = a[k].clone();
            b[l] = b[k].clone();
            let (na, nb) = combine(c, (&a[k], &b[k]), (&la, &lb));
            a[k] = na;
            b[k] = nb;
            k += 2 * stride;
        }
        stride /= 2;
    }

    let mut out = Vec::with_capacity(n * w);
    for t in 0..n {
        if t + 1 < p {
            out.extend_from_slice(&b[t + 1]);
        } else {
            out.extend_from_slice(&root);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_dynamics_keep_h0() {
        let inp = ScanInput::with_h0(vec![1.0; 6], vec![0.0; 6], vec![3.0, -2.0]).unwrap();
        let mut c = OpCounter::new();
        assert_eq!(sequential_scan(&inp, &mut c), vec![3.0, -2.0, 3.0, -2.0, 3.0, -2.0]);
        assert_eq!(blelloch_pscan(&inp, &mut c), vec![3.0, -2.0, 3.0, -2.0, 3.0, -2.0]);
    }

    #[test]
    fn zero_decay_is_memoryless() {
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let inp = ScanInput::with_h0(vec![0.0; 4], b.clone(), vec![9.0, 9.0]).unwrap();
        assert_eq!(sequential_scan(&inp, &mut OpCounter::new()), b);
    }

    #[test]
    fn single_element_has_no_combines() {
        let inp = ScanInput::with_h0(vec![0.5, 0.25], vec![1.0, 1.0], vec![2.0, 4.0]).unwrap();
        let (mut cs, mut cp) = (OpCounter::new(), OpCounter::new());
        assert_eq!(sequential_scan(&inp, &mut cs), blelloch_pscan(&inp, &mut cp));
        assert_eq!(cs, cp);
    }

    #[test]
    fn shape_errors() {
        assert!(ScanInput::new(2, vec![1.0; 3], vec![1.0; 3]).is_err());
        assert!(ScanInput::new(2, vec![1.0; 4], vec![1.0; 2]).is_err());
        assert!(ScanInput::with_h0(vec![], vec![], vec![]).is_err());
    }
}
