//! Leading-order asymptotics of the averaged Green's function, the lattice
//! symbol of the free Laplacian and the transition kernel `T` built from a
//! finitely supported correction kernel `K`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_traits::{FromPrimitive, Num};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};

/// `κ_d = ½ π^{-d/2} Γ(d/2 - 1)`.
pub fn kappa(dim: usize) -> Result<f64> {
    if dim < 3 {
        return Err(Error::Dimension(dim));
    }
    let d = dim as f64;
    Ok(0.5 * std::f64::consts::PI.powf(-d / 2.0) * gamma(d / 2.0 - 1.0))
}

/// `m_0(θ) = 2 Σ_j (1 - cos θ_j)`.
pub fn free_symbol(theta: &[f64]) -> f64 {
    2.0 * theta.iter().map(|t| 1.0 - t.cos()).sum::<f64>()
}

/// Serializable description of a model: dimension and row-major `K̂(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub dim: usize,
    pub k0_hat: Vec<f64>,
}

/// `Q = I + K̂(0)`, `σ = det(Q)^{1/(2d)}` and `x̃ = σ Q^{-1/2} x`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticModel {
    dim: usize,
    k0_hat: DMatrix<f64>,
    q: DMatrix<f64>,
    q_inv_sqrt: DMatrix<f64>,
    sigma: f64,
    kappa: f64,
}

impl AsymptoticModel {
    /// The model with `K̂(0) = 0`.
    pub fn free(dim: usize) -> Result<Self> {
        Self::new(dim, DMatrix::zeros(dim, dim))
    }

    /// Isotropic model `Q = q I`.
    pub fn isotropic(dim: usize, q: f64) -> Result<Self> {
        Self::new(dim, DMatrix::identity(dim, dim) * (q - 1.0))
    }

    pub fn new(dim: usize, k0_hat: DMatrix<f64>) -> Result<Self> {
        let kappa = kappa(dim)?;
        if k0_hat.nrows() != dim || k0_hat.ncols() != dim {
            return Err(invalid("k0_hat", format!("expected a {dim}x{dim} matrix")));
        }
        if (&k0_hat - k0_hat.transpose()).amax() > 1e-12 * k0_hat.amax().max(1.0) {
            return Err(invalid("k0_hat", "matrix is not symmetric"));
        }
        let k_eig = SymmetricEigen::new(k0_hat.clone());
        if k_eig.eigenvalues.amax() >= 1.0 {
            return Err(invalid("k0_hat", "spectral norm must be below 1"));
        }
        let q = DMatrix::identity(dim, dim) + &k0_hat;
        let eig = SymmetricEigen::new(q.clone());
        if eig.eigenvalues.min() <= 0.0 {
            return Err(invalid("k0_hat", "Q = I + K is not positive definite"));
        }
        let inv_sqrt = DVector::from_iterator(dim, eig.eigenvalues.iter().map(|l| l.powf(-0.5)));
        let q_inv_sqrt = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
        let sigma = eig.eigenvalues.iter().product::<f64>().powf(1.0 / (2.0 * dim as f64));
        Ok(Self { dim, k0_hat, q, q_inv_sqrt, sigma, kappa })
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        if spec.k0_hat.len() != spec.dim * spec.dim {
            return Err(invalid("k0_hat", "row-major matrix has the wrong length"));
        }
        Self::new(spec.dim, DMatrix::from_row_slice(spec.dim, spec.dim, &spec.k0_hat))
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec { dim: self.dim, k0_hat: self.k0_hat.transpose().iter().copied().collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Smallest eigenvalue of `Q`; positivity controls `c² + s²` near `θ = 0`.
    pub fn q_min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.q.clone()).eigenvalues.min()
    }

    pub fn tilde(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.q_inv_sqrt * DVector::from_column_slice(x) * self.sigma;
        v.iter().copied().collect()
    }

    fn check_point(&self, x: &[i64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(invalid("x", format!("expected {} coordinates", self.dim)));
        }
        if x.iter().all(|&c| c == 0) {
            return Err(invalid("x", "the asymptotic is not defined at the origin"));
        }
        Ok(x.iter().map(|&c| c as f64).collect())
    }

    /// Leading term `κ_d / (2σ²) · |x̃|^{2-d}` of the Green's function of
    /// `Σ_y b(x,y)(f(x) - f(y))` with symbol `≈ θ^T Q θ`.
    pub fn leading_asymptotic(&self, x: &[i64]) -> Result<f64> {
        let xt = self.tilde(&self.check_point(x)?);
        let n = xt.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(self.kappa / (2.0 * self.sigma * self.sigma) * n.powf(2.0 - self.dim as f64))
    }

    /// `s (2-d)/2 · κ_d/σ² · |x̃|^{1-d} <x̃, ẽ_j> / |x̃|` with `ẽ_j = σ Q^{-1/2} e_j`;
    /// the derivative of [`Self::leading_asymptotic`] along `s e_j`.
    pub fn gradient_leading(&self, x: &[i64], j: usize, s: i32) -> Result<f64> {
        if j >= self.dim {
            return Err(invalid("j", format!("direction {j} out of range")));
        }
        if s != 1 && s != -1 {
            return Err(invalid("s", "orientation must be +1 or -1"));
        }
        let xt = self.tilde(&self.check_point(x)?);
        let mut e = vec![0.0; self.dim];
        e[j] = 1.0;
        let et = self.tilde(&e);
        let n = xt.iter().map(|v| v * v).sum::<f64>().sqrt();
        let proj = xt.iter().zip(&et).map(|(a, b)| a * b).sum::<f64>() / n;
        let d = self.dim as f64;
        Ok(s as f64 * (2.0 - d) / 2.0 * self.kappa / (self.sigma * self.sigma) * n.powf(1.0 - d) * proj)
    }
}

/// Finitely supported kernel `K_{j,k}(x)` (0-based `j`, `k`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionKernel<T> {
    pub dim: usize,
    pub entries: Vec<KernelEntry<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEntry<T> {
    pub x: Vec<i64>,
    pub j: usize,
    pub k: usize,
    pub value: T,
}

impl<T> CorrectionKernel<T> {
    pub fn zero(dim: usize) -> Self {
        Self { dim, entries: Vec::new() }
    }
}

/// Transition kernel `T(x)` with its support.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel<T> {
    pub dim: usize,
    pub values: BTreeMap<Vec<i64>, T>,
}

impl<T: Num + Clone + FromPrimitive> TransitionKernel<T> {
    pub fn get(&self, x: &[i64]) -> T {
        self.values.get(x).cloned().unwrap_or_else(T::zero)
    }

    pub fn total(&self) -> T {
        self.values.values().cloned().fold(T::zero(), |a, b| a + b)
    }

    /// `Σ_x x T(x)`, one entry per coordinate.
    pub fn first_moment(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.dim];
        for (x, v) in &self.values {
            for (mi, &c) in m.iter_mut().zip(x) {
                let c = T::from_i64(c).expect("lattice coordinate fits the scalar type");
                *mi = mi.clone() + c * v.clone();
            }
        }
        m
    }
}

/// `T(x) = ½ δ_0 + (1/4d) δ_{|x|=1} + (1/4d) Σ_{j,k} (-K_jk(x) + K_jk(x-e_j) + K_jk(x-e_k) - K_jk(x-e_j-e_k))`.
///
/// The kernel must satisfy `K_jk(x) = K_kj(-x)`.
pub fn build_t<T>(kernel: &CorrectionKernel<T>) -> Result<TransitionKernel<T>>
where
    T: Num + Clone + FromPrimitive + PartialEq + std::fmt::Debug,
{
    let d = kernel.dim;
    if d < 3 {
        return Err(Error::Dimension(d));
    }
    let mut k_map: BTreeMap<(Vec<i64>, usize, usize), T> = BTreeMap::new();
    for e in &kernel.entries {
        if e.x.len() != d || e.j >= d || e.k >= d {
            return Err(invalid("kernel", format!("entry {:?} does not fit dimension {d}", (&e.x, e.j, e.k))));
        }
        let slot = k_map.entry((e.x.clone(), e.j, e.k)).or_insert_with(T::zero);
        *slot = slot.clone() + e.value.clone();
    }
    for ((x, j, k), v) in &k_map {
        let neg: Vec<i64> = x.iter().map(|c| -c).collect();
        let mirror = k_map.get(&(neg.clone(), *k, *j)).cloned().unwrap_or_else(T::zero);
        if mirror != *v {
            return Err(Error::KernelAsymmetry(format!("K_{j}{k}({x:?}) = {v:?} but K_{k}{j}({neg:?}) = {mirror:?}")));
        }
    }
    let quarter_d = T::from_usize(4 * d).expect("small integer");
    let mut values: BTreeMap<Vec<i64>, T> = BTreeMap::new();
    let mut add = |x: Vec<i64>, v: T| {
        let slot = values.entry(x).or_insert_with(T::zero);
        *slot = slot.clone() + v;
    };
    add(vec![0; d], T::one() / T::from_u8(2).expect("2"));
    for j in 0..d {
        for s in [-1i64, 1] {
            let mut x = vec![0; d];
            x[j] = s;
            add(x, T::one() / quarter_d.clone());
        }
    }
    for ((y, j, k), v) in &k_map {
        let v = v.clone() / quarter_d.clone();
        let shift = |dj: i64, dk: i64| {
            let mut x = y.clone();
            x[*j] += dj;
            x[*k] += dk;
            x
        };
        add(shift(0, 0), T::zero() - v.clone());
        add(shift(1, 0), v.clone());
        add(shift(0, 1), v.clone());
        add(shift(1, 1), T::zero() - v);
    }
    values.retain(|_, v| *v != T::zero());
    Ok(TransitionKernel { dim: d, values })
}

impl TransitionKernel<f64> {
    /// `min_{|x|_∞ <= r} T(x)` (zero off the support counts) and the sites where `T < 0`.
    pub fn positivity_probe(&self, ball_radius: i64) -> (f64, Vec<Vec<i64>>) {
        let mut min = f64::INFINITY;
        let mut inside = 0usize;
        let mut negative = Vec::new();
        for (x, &v) in &self.values {
            if x.iter().all(|c| c.abs() <= ball_radius) {
                inside += 1;
                min = min.min(v);
                if v < 0.0 {
                    negative.push(x.clone());
                }
            }
        }
        if inside < (2 * ball_radius as usize + 1).pow(self.dim as u32) {
            min = min.min(0.0);
        }
        (min, negative)
    }

    /// `c(θ) = Σ T(x)(1 - cos θ·x)` and `s(θ) = Σ T(x) sin θ·x`.
    pub fn cs(&self, theta: &[f64]) -> (f64, f64) {
        let (mut c, mut s) = (0.0, 0.0);
        for (x, &v) in &self.values {
            let phase: f64 = x.iter().zip(theta).map(|(&a, b)| a as f64 * b).sum();
            c += v * (1.0 - phase.cos());
            s += v * phase.sin();
        }
        (c, s)
    }

    /// Minimum of `c² + s²` over the grid `θ_i = -π + 2πi/n`, skipping `|θ| < exclude`.
    pub fn cs_positivity(&self, n: usize, exclude: f64) -> CsReport {
        let mut idx = vec![0usize; self.dim];
        let mut best = CsReport { min: f64::INFINITY, theta: vec![], points: 0 };
        let step = 2.0 * std::f64::consts::PI / n as f64;
        loop {
            let theta: Vec<f64> = idx.iter().map(|&i| -std::f64::consts::PI + step * i as f64).collect();
            if theta.iter().map(|t| t * t).sum::<f64>().sqrt() >= exclude {
                let (c, s) = self.cs(&theta);
                let v = c * c + s * s;
                best.points += 1;
                if v < best.min {
                    best.min = v;
                    best.theta = theta;
                }
            }
            let mut j = self.dim;
            loop {
                if j == 0 {
                    return best;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < n {
                    break;
                }
                idx[j] = 0;
            }
        }
    }
}

/// Result of [`TransitionKernel::cs_positivity`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsReport {
    pub min: f64,
    pub theta: Vec<f64>,
    pub points: usize,
}

/// Origin-ball exclusion radius for the grid check.
pub const DEFAULT_CS_EXCLUSION: f64 = 0.3;
