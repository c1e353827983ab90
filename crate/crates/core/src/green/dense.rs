//! Direct banded Cholesky factorization of the Dirichlet operator.
//!
//! With row-major linearization the half bandwidth is `(2R + 1)^{d-1}`, so
//! the factor needs `n * (bw + 1)` doubles and `O(n bw^2)` flops.

use crate::error::{Error, Result};
use crate::lattice::CoefficientField;

/// Largest system the dense oracle accepts.
pub const DENSE_SITE_CAP: usize = 10_000;

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    /// Row `i` stores `L[i][i - bw ..= i]`; entries left of column 0 stay zero.
    l: Vec<f64>,
}

impl BandedCholesky {
    /// Factors `L` for `field`, refusing systems above [`DENSE_SITE_CAP`].
    pub fn factor(field: &CoefficientField) -> Result<Self> {
        let domain = field.domain();
        let n = domain.len();
        if n > DENSE_SITE_CAP {
            return Err(Error::TooLarge { sites: n, cap: DENSE_SITE_CAP });
        }
        let bw = domain.stride(0);
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        let op = field.operator();
        for i in 0..n {
            l[i * w + bw] = op.diagonal()[i];
            for (m, b) in op.neighbors(i) {
                if let Some(m) = m {
                    if m < i {
                        l[i * w + bw - (i - m)] = -b;
                    }
                }
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = l[i * w + bw - (i - j)];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= l[i * w + bw - (i - k)] * l[j * w + bw - (j - k)];
                }
                if j == i {
                    if s <= 0.0 {
                        return Err(crate::error::invalid("field", "operator is not positive definite"));
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + bw - (i - j)] = s / l[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, l })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + bw - (i - k)] * y[k];
            }
            y[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l[k * w + bw - (k - i)] * y[k];
            }
            y[i] = s / self.l[i * w + bw];
        }
        y
    }
}
