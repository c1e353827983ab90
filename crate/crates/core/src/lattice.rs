//! Finite boxes of Z^d, nearest-neighbour conductance fields and the operator
//! `L f(x) = sum_y b(x,y) (f(x) - f(y))` with zero (Dirichlet) extension
//! outside the box.
//!
//! Sites are linearized row-major over `(x_1, ..., x_d)`: `x_d` varies fastest.
//! A field stores one conductance for every undirected edge that touches the
//! box, so boundary sites keep their full degree and the walk generated by
//! `L` is killed when it steps outside.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::vertex_rng;

/// The box `{x in Z^d : |x_i| <= R}` centred at the origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxDomain {
    dim: usize,
    radius: usize,
    side: usize,
    len: usize,
    strides: Vec<usize>,
}

impl BoxDomain {
    pub fn new(dim: usize, radius: usize) -> Result<Self> {
        if dim < 3 {
            return Err(Error::Dimension(dim));
        }
        if radius == 0 {
            return Err(invalid("radius", "box radius must be at least 1"));
        }
        let side = 2 * radius + 1;
        let len = side
            .checked_pow(dim as u32)
            .filter(|&n| n < u32::MAX as usize)
            .ok_or_else(|| invalid("radius", format!("box of side {side} in d={dim} is too large")))?;
        let mut strides = vec![1usize; dim];
        for j in (0..dim - 1).rev() {
            strides[j] = strides[j + 1] * side;
        }
        Ok(Self { dim, radius, side, len, strides })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Number of sites, `(2R + 1)^d`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn stride(&self, j: usize) -> usize {
        self.strides[j]
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.dim && x.iter().all(|&c| c.unsigned_abs() as usize <= self.radius)
    }

    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let r = self.radius as i64;
        Some(x.iter().zip(&self.strides).map(|(&c, &s)| (c + r) as usize * s).sum())
    }

    /// Coordinate `j` of site `idx`.
    pub fn coord(&self, idx: usize, j: usize) -> i64 {
        ((idx / self.strides[j]) % self.side) as i64 - self.radius as i64
    }

    pub fn point(&self, idx: usize) -> Vec<i64> {
        (0..self.dim).map(|j| self.coord(idx, j)).collect()
    }

    /// Neighbour `x ± e_j` of site `idx`, or `None` when it leaves the box.
    pub fn neighbor(&self, idx: usize, j: usize, forward: bool) -> Option<usize> {
        let c = self.coord(idx, j);
        let r = self.radius as i64;
        match forward {
            true if c < r => Some(idx + self.strides[j]),
            false if c > -r => Some(idx - self.strides[j]),
            _ => None,
        }
    }

    /// Sites whose 2d neighbours all lie in the box.
    pub fn is_interior(&self, idx: usize) -> bool {
        let r = self.radius as i64;
        (0..self.dim).all(|j| self.coord(idx, j).abs() < r)
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len).map(move |i| self.point(i))
    }

    pub fn ensure_same(&self, other: &BoxDomain) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::DomainMismatch {
                expected_dim: self.dim,
                expected_radius: self.radius,
                dim: other.dim,
                radius: other.radius,
            })
        }
    }
}

/// Euclidean norm of a lattice point.
pub fn norm(x: &[i64]) -> f64 {
    x.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt()
}

/// Mean-zero law of the per-vertex variable `omega_x` in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Rademacher,
    Uniform,
}

impl Distribution {
    pub fn sample<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            Distribution::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Distribution::Uniform => rng.random_range(-1.0..=1.0),
        }
    }

    pub fn std_dev(self) -> f64 {
        match self {
            Distribution::Rademacher => 1.0,
            Distribution::Uniform => 1.0 / 3f64.sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Distribution::Rademacher => "rademacher",
            Distribution::Uniform => "uniform",
        }
    }
}

impl std::str::FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rademacher" => Ok(Self::Rademacher),
            "uniform" => Ok(Self::Uniform),
            other => Err(invalid("dist", format!("unknown distribution `{other}`"))),
        }
    }
}

/// How a field's conductances were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldSource {
    Constant { value: f64 },
    Iid { delta: f64, dist: Distribution, seed: u64 },
    Explicit,
}

/// Conductances `a(e)` on every edge touching a box.
///
/// `forward[idx * d + j]` holds `a([x, x + e_j])` for the site `x` at `idx`.
/// `lower[idx * d + j]` holds `a([x - e_j, x])` and is only meaningful on the
/// face `x_j = -R`, where the owning vertex `x - e_j` lies outside the box.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    domain: BoxDomain,
    lambda: f64,
    source: FieldSource,
    forward: Vec<f64>,
    lower: Vec<f64>,
    ellipticity: f64,
}

impl CoefficientField {
    /// Every edge carries `value`. `lambda` defaults to `min(value, 1/value)`.
    pub fn constant(domain: BoxDomain, value: f64, lambda: Option<f64>) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(invalid("value", format!("conductance must be positive, got {value}")));
        }
        let lambda = lambda.unwrap_or_else(|| value.min(1.0 / value));
        Self::from_edge_fn(domain, lambda, FieldSource::Constant { value }, |_, _| value)
    }

    /// The free Laplacian.
    pub fn free(domain: BoxDomain) -> Self {
        Self::constant(domain, 1.0, Some(1.0)).expect("unit conductances are admissible")
    }

    /// `a([x, x + e_j]) = 1 + delta * omega_x` with one variate per vertex,
    /// shared by the d forward edges of that vertex.
    pub fn iid(domain: BoxDomain, delta: f64, dist: Distribution, seed: u64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
        }
        let source = FieldSource::Iid { delta, dist, seed };
        Self::from_vertex_fn(domain, 1.0 - delta, source, |x| 1.0 + delta * dist.sample(&mut vertex_rng(seed, x)))
    }

    fn from_vertex_fn(
        domain: BoxDomain,
        lambda: f64,
        source: FieldSource,
        owner: impl Fn(&[i64]) -> f64,
    ) -> Result<Self> {
        let d = domain.dim();
        let n = domain.len();
        let mut forward = vec![0.0; n * d];
        let mut lower = vec![0.0; n * d];
        let mut x = vec![0i64; d];
        for idx in 0..n {
            for (j, c) in x.iter_mut().enumerate() {
                *c = domain.coord(idx, j);
            }
            let a = owner(&x);
            forward[idx * d..(idx + 1) * d].fill(a);
            for j in 0..d {
                if x[j] == -(domain.radius() as i64) {
                    x[j] -= 1;
                    lower[idx * d + j] = owner(&x);
                    x[j] += 1;
                }
            }
        }
        Self::assemble(domain, lambda, source, forward, lower)
    }

    /// Builds a field from `edge(x, j) = a([x, x + e_j])`, evaluated on every
    /// edge touching the box.
    pub fn from_edge_fn(
        domain: BoxDomain,
        lambda: f64,
        source: FieldSource,
        edge: impl Fn(&[i64], usize) -> f64,
    ) -> Result<Self> {
        let d = domain.dim();
        let n = domain.len();
        let mut forward = vec![0.0; n * d];
        let mut lower = vec![0.0; n * d];
        let mut x = vec![0i64; d];
        for idx in 0..n {
            for (j, c) in x.iter_mut().enumerate() {
                *c = domain.coord(idx, j);
            }
            for j in 0..d {
                forward[idx * d + j] = edge(&x, j);
                if x[j] == -(domain.radius() as i64) {
                    x[j] -= 1;
                    lower[idx * d + j] = edge(&x, j);
                    x[j] += 1;
                }
            }
        }
        Self::assemble(domain, lambda, source, forward, lower)
    }

    /// Field from raw arrays in the documented layout.
    pub fn explicit(domain: BoxDomain, lambda: f64, forward: Vec<f64>, lower: Vec<f64>) -> Result<Self> {
        let expected = domain.len() * domain.dim();
        if forward.len() != expected || lower.len() != expected {
            return Err(invalid(
                "values",
                format!("expected {expected} forward and lower entries, got {} and {}", forward.len(), lower.len()),
            ));
        }
        Self::assemble(domain, lambda, FieldSource::Explicit, forward, lower)
    }

    pub(crate) fn from_parts(
        domain: BoxDomain,
        lambda: f64,
        source: FieldSource,
        forward: Vec<f64>,
        lower: Vec<f64>,
    ) -> Result<Self> {
        Self::assemble(domain, lambda, source, forward, lower)
    }

    fn assemble(
        domain: BoxDomain,
        lambda: f64,
        source: FieldSource,
        forward: Vec<f64>,
        mut lower: Vec<f64>,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(invalid("lambda", format!("must lie in (0, 1], got {lambda}")));
        }
        let d = domain.dim();
        let r = domain.radius() as i64;
        // Slack for values such as 1 + delta * omega that land on the bound up to rounding.
        let lo = lambda * (1.0 - 1e-12);
        let hi = (1.0 + 1e-12) / lambda;
        for idx in 0..domain.len() {
            for j in 0..d {
                let a = forward[idx * d + j];
                if !(a >= lo && a <= hi) {
                    return Err(invalid(
                        "values",
                        format!(
                            "edge ({:?}, e_{}) has a = {a}, outside [{lambda}, {}]",
                            domain.point(idx),
                            j + 1,
                            1.0 / lambda
                        ),
                    ));
                }
                if domain.coord(idx, j) == -r {
                    let b = lower[idx * d + j];
                    if !(b >= lo && b <= hi) {
                        return Err(invalid(
                            "values",
                            format!("inbound edge at {:?} along e_{} has a = {b}", domain.point(idx), j + 1),
                        ));
                    }
                } else {
                    lower[idx * d + j] = 0.0;
                }
            }
        }
        let mut field = Self { domain, lambda, source, forward, lower, ellipticity: 0.0 };
        field.ellipticity = field.compute_ellipticity();
        Ok(field)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn source(&self) -> &FieldSource {
        &self.source
    }

    /// The constant `E = min b(x,y) / deg(x)` over box vertices and their edges.
    pub fn ellipticity(&self) -> f64 {
        self.ellipticity
    }

    pub fn forward_values(&self) -> &[f64] {
        &self.forward
    }

    pub fn lower_values(&self) -> &[f64] {
        &self.lower
    }

    /// Conductance between site `idx` and `x ± e_j` (which may lie outside the box).
    pub fn conductance(&self, idx: usize, j: usize, forward: bool) -> f64 {
        let d = self.domain.dim();
        if forward {
            self.forward[idx * d + j]
        } else {
            match self.domain.neighbor(idx, j, false) {
                Some(prev) => self.forward[prev * d + j],
                None => self.lower[idx * d + j],
            }
        }
    }

    pub fn degree(&self, idx: usize) -> f64 {
        (0..self.domain.dim()).map(|j| self.conductance(idx, j, true) + self.conductance(idx, j, false)).sum()
    }

    /// `a([x, x + e_j])` if the edge touches the box.
    pub fn edge(&self, x: &[i64], j: usize) -> Option<f64> {
        let d = self.domain.dim();
        if let Some(idx) = self.domain.index_of(x) {
            return Some(self.forward[idx * d + j]);
        }
        let mut y = x.to_vec();
        y[j] += 1;
        let idx = self.domain.index_of(&y)?;
        Some(self.conductance(idx, j, false))
    }

    /// Copy with the single edge `[x, x + e_j]` replaced by `value`.
    pub fn with_edge(&self, x: &[i64], j: usize, value: f64) -> Result<Self> {
        let d = self.domain.dim();
        let mut forward = self.forward.clone();
        let mut lower = self.lower.clone();
        if let Some(idx) = self.domain.index_of(x) {
            forward[idx * d + j] = value;
        } else {
            let mut y = x.to_vec();
            y[j] += 1;
            let idx = self.domain.index_of(&y).ok_or_else(|| Error::OutsideBox(x.to_vec()))?;
            lower[idx * d + j] = value;
        }
        let lambda = self.lambda.min(value).min(1.0 / value);
        Self::assemble(self.domain.clone(), lambda, FieldSource::Explicit, forward, lower)
    }

    /// Copy with every conductance multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(invalid("scale", "must be positive"));
        }
        let forward: Vec<f64> = self.forward.iter().map(|a| a * c).collect();
        let lower: Vec<f64> = self.lower.iter().map(|a| a * c).collect();
        let (lo, hi) = forward
            .iter()
            .chain(lower.iter().filter(|&&a| a > 0.0))
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &a| (lo.min(a), hi.max(a)));
        let lambda = lo.min(1.0 / hi).min(1.0);
        Self::assemble(self.domain.clone(), lambda, FieldSource::Explicit, forward, lower)
    }

    fn compute_ellipticity(&self) -> f64 {
        let d = self.domain.dim();
        let mut e = f64::INFINITY;
        for idx in 0..self.domain.len() {
            let deg = self.degree(idx);
            for j in 0..d {
                let m = self.conductance(idx, j, true).min(self.conductance(idx, j, false));
                e = e.min(m / deg);
            }
        }
        e
    }

    /// Matrix-free stencil of `L` restricted to the box.
    pub fn operator(&self) -> DirichletOperator {
        DirichletOperator::new(self)
    }

    pub fn apply(&self, f: &LatticeFunction) -> Result<LatticeFunction> {
        self.domain.ensure_same(&f.domain)?;
        let op = self.operator();
        let mut out = vec![0.0; self.domain.len()];
        op.apply(&f.values, &mut out);
        Ok(LatticeFunction::new(self.domain.clone(), out))
    }

    /// `Q(f) = sum over ordered pairs (x, y) of b(x,y) (f(x) - f(y))^2`, with `f`
    /// extended by zero.
    pub fn dirichlet_energy(&self, f: &LatticeFunction) -> Result<f64> {
        self.domain.ensure_same(&f.domain)?;
        let d = self.domain.dim();
        let mut q = 0.0;
        for idx in 0..self.domain.len() {
            let fx = f.values[idx];
            for j in 0..d {
                let fy = self.domain.neighbor(idx, j, true).map_or(0.0, |n| f.values[n]);
                q += self.forward[idx * d + j] * (fx - fy).powi(2);
                if self.domain.neighbor(idx, j, false).is_none() {
                    q += self.lower[idx * d + j] * fx * fx;
                }
            }
        }
        Ok(2.0 * q)
    }
}

/// Sparse stencil form of `L` on the box: `(Lf)_i = diag_i f_i - sum_k w_ik f_{nbr_ik}`.
#[derive(Debug, Clone)]
pub struct DirichletOperator {
    n: usize,
    arity: usize,
    diag: Vec<f64>,
    nbr: Vec<u32>,
    weight: Vec<f64>,
}

pub(crate) const NO_SITE: u32 = u32::MAX;

impl DirichletOperator {
    #[allow(clippy::needless_range_loop)]
    fn new(field: &CoefficientField) -> Self {
        let domain = field.domain();
        let d = domain.dim();
        let arity = 2 * d;
        let n = domain.len();
        let mut diag = vec![0.0; n];
        let mut nbr = vec![NO_SITE; n * arity];
        let mut weight = vec![0.0; n * arity];
        for idx in 0..n {
            let mut deg = 0.0;
            for j in 0..d {
                for (s, fwd) in [(0, true), (1, false)] {
                    let b = field.conductance(idx, j, fwd);
                    deg += b;
                    let k = idx * arity + 2 * j + s;
                    weight[k] = b;
                    if let Some(m) = domain.neighbor(idx, j, fwd) {
                        nbr[k] = m as u32;
                    }
                }
            }
            diag[idx] = deg;
        }
        Self { n, arity, diag, nbr, weight }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Degrees, i.e. the diagonal of `L`.
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Neighbour slots of site `i` as `(neighbour index or None, conductance)`,
    /// ordered `+e_1, -e_1, +e_2, ...`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (Option<usize>, f64)> + '_ {
        let base = i * self.arity;
        (0..self.arity).map(move |k| {
            let m = self.nbr[base + k];
            ((m != NO_SITE).then_some(m as usize), self.weight[base + k])
        })
    }

    pub fn apply(&self, f: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let base = i * self.arity;
            let mut acc = self.diag[i] * f[i];
            for k in base..base + self.arity {
                let m = self.nbr[k];
                if m != NO_SITE {
                    acc -= self.weight[k] * f[m as usize];
                }
            }
            out[i] = acc;
        }
    }
}

/// Real values on a box, extended by zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeFunction {
    domain: BoxDomain,
    values: Vec<f64>,
}

impl LatticeFunction {
    pub fn new(domain: BoxDomain, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), domain.len(), "value count must match the box");
        Self { domain, values }
    }

    pub fn zeros(domain: BoxDomain) -> Self {
        let n = domain.len();
        Self::new(domain, vec![0.0; n])
    }

    /// The indicator `1_x`.
    pub fn indicator(domain: BoxDomain, x: &[i64]) -> Result<Self> {
        let idx = domain.index_of(x).ok_or_else(|| Error::OutsideBox(x.to_vec()))?;
        let mut f = Self::zeros(domain);
        f.values[idx] = 1.0;
        Ok(f)
    }

    pub fn from_fn(domain: BoxDomain, f: impl Fn(&[i64]) -> f64) -> Self {
        let values = domain.points().map(|x| f(&x)).collect();
        Self::new(domain, values)
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at `x`, zero outside the box.
    pub fn get(&self, x: &[i64]) -> f64 {
        self.domain.index_of(x).map_or(0.0, |i| self.values[i])
    }

    pub fn dot(&self, other: &LatticeFunction) -> Result<f64> {
        self.domain.ensure_same(&other.domain)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum())
    }
}
