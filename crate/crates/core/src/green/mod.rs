//! Dirichlet Green's functions on boxes and their oracles.

mod bessel;
mod cg;
mod dense;
mod walk;

pub use bessel::{free_green_quadrature, heat_kernel, scaled_bessel_i, Quadrature};
pub use cg::CgOutcome;
pub use dense::{BandedCholesky, DENSE_SITE_CAP};
pub use walk::{random_walk_green, WalkEstimate, WALKERS_PER_CHUNK};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{norm, BoxDomain, CoefficientField, LatticeFunction};

/// Settings of the iterative solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target relative residual `||1_o - L G|| / ||1_o||`.
    pub tol: f64,
    /// Iteration cap; `None` means `50 (2 R_box + 1)`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: None }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, max_iter: None }
    }

    pub fn max_iter_for(&self, domain: &BoxDomain) -> usize {
        self.max_iter.unwrap_or(50 * domain.side())
    }
}

/// `G(o, ·)` on the box of `field`.
#[derive(Debug, Clone)]
pub struct GreenField<'a> {
    field: &'a CoefficientField,
    pole: Vec<i64>,
    values: LatticeFunction,
    residual: f64,
    iterations: usize,
}

impl<'a> GreenField<'a> {
    /// Wraps externally computed values (for example an extrapolated field).
    pub fn from_values(
        field: &'a CoefficientField,
        pole: &[i64],
        values: LatticeFunction,
        residual: f64,
    ) -> Result<Self> {
        field.domain().ensure_same(values.domain())?;
        if !field.domain().contains(pole) {
            return Err(Error::OutsideBox(pole.to_vec()));
        }
        Ok(Self { field, pole: pole.to_vec(), values, residual, iterations: 0 })
    }

    pub fn field(&self) -> &'a CoefficientField {
        self.field
    }

    pub fn domain(&self) -> &BoxDomain {
        self.field.domain()
    }

    pub fn pole(&self) -> &[i64] {
        &self.pole
    }

    pub fn values(&self) -> &LatticeFunction {
        &self.values
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn box_radius(&self) -> usize {
        self.field.domain().radius()
    }

    /// `G(x)`, zero outside the box.
    pub fn get(&self, x: &[i64]) -> f64 {
        self.values.get(x)
    }

    /// `∇G([x, x + e_j]) = G(x + e_j) - G(x)`.
    pub fn gradient(&self, x: &[i64], j: usize) -> f64 {
        let mut y = x.to_vec();
        y[j] += 1;
        self.get(&y) - self.get(x)
    }

    /// Checks positivity, the pole equation, interior harmonicity and the
    /// neighbour comparison `G(x) >= E G(y)`.
    pub fn check_invariants(&self) -> Result<GreenInvariants> {
        let domain = self.domain();
        let g = self.values.values();
        if let Some(i) = g.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::NonPositiveGreen(domain.point(i)));
        }
        let op = self.field.operator();
        let mut lg = vec![0.0; g.len()];
        op.apply(g, &mut lg);
        let pole = domain.index_of(&self.pole).expect("pole lies in the box");
        let tolerance = (10.0 * self.residual).max(1e-10);
        let pole_residual = (lg[pole] - 1.0).abs();
        let mut harmonic_residual = 0.0f64;
        for (i, &v) in lg.iter().enumerate() {
            if i != pole && domain.is_interior(i) {
                harmonic_residual = harmonic_residual.max(v.abs());
            }
        }
        let e = self.field.ellipticity();
        let mut comparison_violations = 0;
        let mut min_comparison_ratio = f64::INFINITY;
        for i in 0..g.len() {
            if !domain.is_interior(i) {
                continue;
            }
            for (m, _) in op.neighbors(i) {
                let m = m.expect("interior sites have all neighbours");
                let ratio = g[i] / g[m];
                min_comparison_ratio = min_comparison_ratio.min(ratio);
                if g[i] < e * g[m] * (1.0 - tolerance) {
                    comparison_violations += 1;
                }
            }
        }
        Ok(GreenInvariants {
            tolerance,
            pole_residual,
            harmonic_residual,
            min_value: g.iter().copied().fold(f64::INFINITY, f64::min),
            ellipticity: e,
            min_comparison_ratio,
            comparison_violations,
        })
    }
}

/// Outcome of [`GreenField::check_invariants`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenInvariants {
    pub tolerance: f64,
    pub pole_residual: f64,
    pub harmonic_residual: f64,
    pub min_value: f64,
    pub ellipticity: f64,
    /// `min G(x)/G(y)` over interior edges; Lemma-type bound says `>= E`.
    pub min_comparison_ratio: f64,
    pub comparison_violations: usize,
}

impl GreenInvariants {
    pub fn holds(&self) -> bool {
        self.pole_residual <= self.tolerance
            && self.harmonic_residual <= self.tolerance
            && self.min_value > 0.0
            && self.comparison_violations == 0
    }
}

/// Solves `L G = 1_pole` on the box of `field` by preconditioned CG.
pub fn solve_green<'a>(field: &'a CoefficientField, pole: &[i64], opts: SolverOptions) -> Result<GreenField<'a>> {
    if !(opts.tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let domain = field.domain();
    let p = domain.index_of(pole).ok_or_else(|| Error::OutsideBox(pole.to_vec()))?;
    let op = field.operator();
    let mut b = vec![0.0; op.len()];
    b[p] = 1.0;
    let mut x = vec![0.0; op.len()];
    let out = cg::solve(&op, &b, &mut x, opts.tol, opts.max_iter_for(domain))?;
    Ok(GreenField {
        field,
        pole: pole.to_vec(),
        values: LatticeFunction::new(domain.clone(), x),
        residual: out.residual,
        iterations: out.iterations,
    })
}

/// Direct solve of the same Dirichlet system, for boxes of at most
/// [`DENSE_SITE_CAP`] sites.
pub fn dense_green_oracle<'a>(field: &'a CoefficientField, pole: &[i64]) -> Result<GreenField<'a>> {
    let chol = BandedCholesky::factor(field)?;
    dense_solve_with(field, &chol, pole)
}

/// Reuses a factorization for several poles.
pub fn dense_solve_with<'a>(
    field: &'a CoefficientField,
    chol: &BandedCholesky,
    pole: &[i64],
) -> Result<GreenField<'a>> {
    let domain = field.domain();
    let p = domain.index_of(pole).ok_or_else(|| Error::OutsideBox(pole.to_vec()))?;
    if chol.len() != domain.len() {
        return Err(invalid("factor", "factorization belongs to another box"));
    }
    let mut b = vec![0.0; domain.len()];
    b[p] = 1.0;
    let x = chol.solve(&b);
    let op = field.operator();
    let mut r = vec![0.0; x.len()];
    op.apply(&x, &mut r);
    r[p] -= 1.0;
    let residual = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(GreenField {
        field,
        pole: pole.to_vec(),
        values: LatticeFunction::new(domain.clone(), x),
        residual,
        iterations: 0,
    })
}

/// Sites with `r - 1/2 <= |x| < r + 1/2`.
pub fn shell_sites(domain: &BoxDomain, r: f64) -> Vec<Vec<i64>> {
    domain
        .points()
        .filter(|x| {
            let n = norm(x);
            n >= r - 0.5 && n < r + 0.5
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AronsonShell {
    pub radius: f64,
    pub sites: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
}

/// Extremes of `G(x) (1 + |x|)^{d-2}` per shell and overall.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AronsonReport {
    pub shells: Vec<AronsonShell>,
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `max(ratio_max, 1 / ratio_min)`.
    pub constant: f64,
}

impl AronsonReport {
    pub fn radii(&self) -> Vec<f64> {
        self.shells.iter().map(|s| s.radius).collect()
    }
}

/// Shells must satisfy `r + 1/2 <= R_box / 2`.
pub fn aronson_report(green: &GreenField<'_>, shell_radii: &[f64]) -> Result<AronsonReport> {
    let domain = green.domain();
    let d = domain.dim() as i32;
    let limit = domain.radius() as f64 / 2.0;
    let mut shells = Vec::with_capacity(shell_radii.len());
    for &r in shell_radii {
        if r + 0.5 > limit {
            return Err(Error::RegionOutsideBox(format!("shell |x| = {r} reaches beyond R_box/2 = {limit}")));
        }
        let sites = shell_sites(domain, r);
        if sites.is_empty() {
            return Err(Error::EmptyRegion(format!("shell |x| = {r}")));
        }
        let (lo, hi) = sites.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), x| {
            let v = green.get(x) * (1.0 + norm(x)).powi(d - 2);
            (lo.min(v), hi.max(v))
        });
        shells.push(AronsonShell { radius: r, sites: sites.len(), ratio_min: lo, ratio_max: hi });
    }
    if shells.is_empty() {
        return Err(Error::EmptyRegion("no shells requested".into()));
    }
    let ratio_min = shells.iter().map(|s| s.ratio_min).fold(f64::INFINITY, f64::min);
    let ratio_max = shells.iter().map(|s| s.ratio_max).fold(0.0, f64::max);
    Ok(AronsonReport { shells, ratio_min, ratio_max, constant: ratio_max.max(1.0 / ratio_min) })
}

/// Fit of `G_R(x) = G_∞(x) - c R^{2-d}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extrapolation {
    pub g_inf: f64,
    pub c: f64,
    /// Root mean square deviation of the fit.
    pub fit_residual: f64,
    pub radii: Vec<usize>,
    pub values: Vec<f64>,
}

/// Least-squares fit of `values[i] = g_inf - c * radii[i]^{2-d}`.
pub fn fit_truncation(dim: usize, radii: &[usize], values: &[f64]) -> Result<Extrapolation> {
    if radii.len() < 3 || radii.len() != values.len() {
        return Err(invalid("radii", "need at least three radii with one value each"));
    }
    let u: Vec<f64> = radii.iter().map(|&r| (r as f64).powf(2.0 - dim as f64)).collect();
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = values.iter().sum::<f64>() / n;
    let suu: f64 = u.iter().map(|a| (a - mu).powi(2)).sum();
    let suv: f64 = u.iter().zip(values).map(|(a, b)| (a - mu) * (b - mv)).sum();
    let slope = suv / suu;
    let g_inf = mv - slope * mu;
    let fit_residual = (u.iter().zip(values).map(|(a, b)| (b - g_inf - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    if !g_inf.is_finite() || !slope.is_finite() {
        return Err(Error::NonFiniteFit("truncation model".into()));
    }
    Ok(Extrapolation { g_inf, c: -slope, fit_residual, radii: radii.to_vec(), values: values.to_vec() })
}

/// Solves on every radius with fields from `make_field` (which must agree on
/// overlaps), checks monotonicity in the radius and fits the truncation model
/// at `x`.
pub fn truncation_extrapolate(
    radii: &[usize],
    make_field: impl Fn(usize) -> Result<CoefficientField>,
    pole: &[i64],
    x: &[i64],
    opts: SolverOptions,
) -> Result<Extrapolation> {
    let fields: Vec<CoefficientField> = radii.iter().map(|&r| make_field(r)).collect::<Result<_>>()?;
    let values = radii_values(&fields, pole, std::slice::from_ref(&x.to_vec()), opts)?;
    let dim = fields.first().map_or(3, |f| f.domain().dim());
    let column: Vec<f64> = values.iter().map(|v| v[0]).collect();
    fit_truncation(dim, radii, &column)
}

fn radii_values(
    fields: &[CoefficientField],
    pole: &[i64],
    sites: &[Vec<i64>],
    opts: SolverOptions,
) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(fields.len());
    let mut prev_radius = 0;
    for field in fields {
        let r = field.domain().radius();
        if r <= prev_radius {
            return Err(invalid("radii", "radii must be strictly increasing"));
        }
        prev_radius = r;
        for x in sites {
            if !field.domain().contains(x) {
                return Err(Error::OutsideBox(x.clone()));
            }
        }
        let g = solve_green(field, pole, opts)?;
        let row: Vec<f64> = sites.iter().map(|x| g.get(x)).collect();
        if let Some(last) = out.last() {
            for (k, (&a, &b)) in last.iter().zip(&row).enumerate() {
                if b < a - 10.0 * opts.tol * a.abs().max(1.0) {
                    return Err(Error::NonMonotoneTruncation(sites[k].clone()));
                }
            }
        }
        out.push(row);
    }
    Ok(out)
}

/// Sitewise truncation extrapolation of a whole field: every site of the
/// smallest box is fitted separately. `fields` must be ordered by radius.
pub fn extrapolate_field(fields: &[CoefficientField], pole: &[i64], opts: SolverOptions) -> Result<LatticeFunction> {
    let first = fields.first().ok_or_else(|| invalid("radii", "no fields"))?;
    let domain = first.domain().clone();
    let sites: Vec<Vec<i64>> = domain.points().collect();
    let values = radii_values(fields, pole, &sites, opts)?;
    let radii: Vec<usize> = fields.iter().map(|f| f.domain().radius()).collect();
    let mut out = Vec::with_capacity(sites.len());
    for k in 0..sites.len() {
        let column: Vec<f64> = values.iter().map(|v| v[k]).collect();
        out.push(fit_truncation(domain.dim(), &radii, &column)?.g_inf);
    }
    Ok(LatticeFunction::new(domain, out))
}
