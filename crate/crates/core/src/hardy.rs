//! The Hardy weight `w_G(x) = 1_o(x) + G(x)^{-1} Σ_y b(x,y) (√G(x) - √G(y))²`,
//! its two-sided bounds, region statistics over annuli and sectors, and the
//! Rellich weights built from it.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::green::GreenField;
use crate::lattice::{norm, BoxDomain, CoefficientField, LatticeFunction};

/// Default outer multiplier for annuli and sectors.
pub const DEFAULT_ELL: f64 = 4.0;
/// Default sector opening.
pub const DEFAULT_SECTOR_ALPHA: f64 = 0.5;

/// `w_G` with its pointwise bounds.
///
/// Values are computed at interior sites (all 2d neighbours in the box) and
/// are zero elsewhere; [`HardyWeightField::is_computed`] tells them apart.
/// The bounds use the neighbour comparison `G(y) <= G(x)/E`:
/// `w_upper = 1_o + G^{-2} Σ b (G(x)-G(y))²` and
/// `w_lower = 1_o + (1 + E^{-1/2})^{-2} G^{-2} Σ b (G(x)-G(y))²`.
#[derive(Debug, Clone)]
pub struct HardyWeightField<'g, 'a> {
    green: &'g GreenField<'a>,
    w: LatticeFunction,
    upper: LatticeFunction,
    lower: LatticeFunction,
    computed: Vec<bool>,
}

pub fn hardy_weight<'g, 'a>(green: &'g GreenField<'a>) -> Result<HardyWeightField<'g, 'a>> {
    let domain = green.domain().clone();
    let g = green.values().values();
    if let Some(i) = g.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NonPositiveGreen(domain.point(i)));
    }
    let op = green.field().operator();
    let e = green.field().ellipticity();
    let lower_factor = (1.0 + e.powf(-0.5)).powi(-2);
    let pole = domain.index_of(green.pole()).expect("pole lies in the box");
    let n = domain.len();
    let (mut w, mut upper, mut lower) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut computed = vec![false; n];
    for i in 0..n {
        if !domain.is_interior(i) {
            continue;
        }
        computed[i] = true;
        let gx = g[i];
        let sx = gx.sqrt();
        let (mut root, mut plain) = (0.0, 0.0);
        for (m, b) in op.neighbors(i) {
            let gy = g[m.expect("interior site")];
            root += b * (sx - gy.sqrt()).powi(2);
            plain += b * (gx - gy).powi(2);
        }
        let indicator = if i == pole { 1.0 } else { 0.0 };
        w[i] = indicator + root / gx;
        upper[i] = indicator + plain / (gx * gx);
        lower[i] = indicator + lower_factor * plain / (gx * gx);
    }
    Ok(HardyWeightField {
        green,
        w: LatticeFunction::new(domain.clone(), w),
        upper: LatticeFunction::new(domain.clone(), upper),
        lower: LatticeFunction::new(domain, lower),
        computed,
    })
}

impl<'g, 'a> HardyWeightField<'g, 'a> {
    pub fn green(&self) -> &'g GreenField<'a> {
        self.green
    }

    pub fn domain(&self) -> &BoxDomain {
        self.w.domain()
    }

    pub fn w(&self) -> &LatticeFunction {
        &self.w
    }

    pub fn upper(&self) -> &LatticeFunction {
        &self.upper
    }

    pub fn lower(&self) -> &LatticeFunction {
        &self.lower
    }

    pub fn is_computed(&self, idx: usize) -> bool {
        self.computed[idx]
    }

    pub fn computed_mask(&self) -> &[bool] {
        &self.computed
    }

    /// Computed sites where `w_G` vanishes.
    pub fn zero_sites(&self) -> usize {
        self.computed.iter().zip(self.w.values()).filter(|(&c, &v)| c && v == 0.0).count()
    }

    /// Largest relative violation of `w_lower <= w <= w_upper`; zero when the
    /// sandwich holds.
    pub fn sandwich_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.computed.len() {
            if !self.computed[i] {
                continue;
            }
            let (w, lo, hi) = (self.w.values()[i], self.lower.values()[i], self.upper.values()[i]);
            let scale = hi.abs().max(f64::MIN_POSITIVE);
            worst = worst.max((lo - w) / scale).max((w - hi) / scale);
        }
        worst.max(0.0)
    }

    /// `c · w_G` as a plain function.
    pub fn scaled(&self, c: f64) -> LatticeFunction {
        let values = self.w.values().iter().map(|v| c * v).collect();
        LatticeFunction::new(self.domain().clone(), values)
    }
}

/// Annulus `{R <= |x| <= ℓR}` or sector `{x_j > (1-α)|x|, R <= |x| <= ℓR}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RegionSpec {
    Annulus {
        r: f64,
        ell: f64,
    },
    /// `direction` is a 0-based coordinate index.
    Sector {
        r: f64,
        ell: f64,
        direction: usize,
        alpha: f64,
    },
}

impl RegionSpec {
    pub fn annulus(r: f64, ell: f64) -> Result<Self> {
        check_radii(r, ell)?;
        Ok(Self::Annulus { r, ell })
    }

    pub fn sector(r: f64, ell: f64, direction: usize, alpha: f64) -> Result<Self> {
        check_radii(r, ell)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", format!("sector opening must lie in (0, 1), got {alpha}")));
        }
        Ok(Self::Sector { r, ell, direction, alpha })
    }

    pub fn inner(&self) -> f64 {
        match *self {
            Self::Annulus { r, .. } | Self::Sector { r, .. } => r,
        }
    }

    pub fn ell(&self) -> f64 {
        match *self {
            Self::Annulus { ell, .. } | Self::Sector { ell, .. } => ell,
        }
    }

    pub fn outer(&self) -> f64 {
        self.inner() * self.ell()
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Annulus { .. } => "annulus",
            Self::Sector { .. } => "sector",
        }
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        let n2: f64 = x.iter().map(|&c| (c * c) as f64).sum();
        let (r, outer) = (self.inner(), self.outer());
        if n2 < r * r || n2 > outer * outer {
            return false;
        }
        match *self {
            Self::Annulus { .. } => true,
            Self::Sector { direction, alpha, .. } => x[direction] as f64 > (1.0 - alpha) * n2.sqrt(),
        }
    }

    /// Lattice points of the region in `Z^dim`, in row-major order.
    pub fn sites(&self, dim: usize) -> Vec<Vec<i64>> {
        let m = self.outer().floor() as i64;
        let mut out = Vec::new();
        let mut x = vec![-m; dim];
        loop {
            if self.contains(&x) {
                out.push(x.clone());
            }
            let mut j = dim;
            loop {
                if j == 0 {
                    return out;
                }
                j -= 1;
                if x[j] < m {
                    x[j] += 1;
                    break;
                }
                x[j] = -m;
            }
        }
    }
}

fn check_radii(r: f64, ell: f64) -> Result<()> {
    if !(r > 0.0) {
        return Err(invalid("r", "inner radius must be positive"));
    }
    if !(ell >= 1.0) {
        return Err(invalid("ell", format!("outer multiplier must be at least 1, got {ell}")));
    }
    Ok(())
}

/// How a region relates to the truncation box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryPolicy {
    /// The region must lie within `|x| <= R_box / 2`.
    InnerHalf,
    /// Every site must be an interior site of the box.
    Interior,
    /// Sites outside the box (or without a computed weight) contribute zero.
    ZeroExtended,
}

fn check_region(domain: &BoxDomain, region: &RegionSpec, sites: &[Vec<i64>], policy: BoundaryPolicy) -> Result<()> {
    if sites.is_empty() {
        return Err(Error::EmptyRegion(format!("{region:?}")));
    }
    match policy {
        BoundaryPolicy::InnerHalf => {
            let limit = domain.radius() as f64 / 2.0;
            if region.outer() > limit {
                return Err(Error::RegionOutsideBox(format!(
                    "outer radius {} exceeds R_box/2 = {limit}",
                    region.outer()
                )));
            }
        }
        BoundaryPolicy::Interior => {
            for x in sites {
                if !domain.index_of(x).is_some_and(|i| domain.is_interior(i)) {
                    return Err(Error::RegionOutsideBox(format!("site {x:?} is not interior to the box")));
                }
            }
        }
        BoundaryPolicy::ZeroExtended => {}
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionSum {
    /// `R^{-d} Σ_{x ∈ region} w_G(x)`.
    pub normalized_sum: f64,
    pub count: usize,
    /// Region sites that contributed zero because no weight was available.
    pub missing: usize,
    /// Region sites with a computed weight equal to zero.
    pub zero_weight: usize,
}

pub fn region_average(w: &HardyWeightField<'_, '_>, region: &RegionSpec, policy: BoundaryPolicy) -> Result<RegionSum> {
    let domain = w.domain();
    let sites = region.sites(domain.dim());
    check_region(domain, region, &sites, policy)?;
    let mut sum = 0.0;
    let (mut missing, mut zero_weight) = (0, 0);
    for x in &sites {
        match domain.index_of(x) {
            Some(i) if w.is_computed(i) => {
                let v = w.w().values()[i];
                if v == 0.0 {
                    zero_weight += 1;
                }
                sum += v;
            }
            _ => missing += 1,
        }
    }
    Ok(RegionSum {
        normalized_sum: sum / region.inner().powi(domain.dim() as i32),
        count: sites.len(),
        missing,
        zero_weight,
    })
}

/// `R^{-d} Σ_{x ∈ S} |G(x) - G(x + e_j)|²` over a sector, with `G` extended by zero.
pub fn sector_gradient_energy(green: &GreenField<'_>, region: &RegionSpec, policy: BoundaryPolicy) -> Result<f64> {
    let RegionSpec::Sector { direction, .. } = *region else {
        return Err(invalid("region", "directional energy needs a sector"));
    };
    let domain = green.domain();
    if direction >= domain.dim() {
        return Err(invalid("direction", format!("axis {direction} out of range")));
    }
    let sites = region.sites(domain.dim());
    check_region(domain, region, &sites, policy)?;
    let sum: f64 = sites.iter().map(|x| green.gradient(x, direction).powi(2)).sum();
    Ok(sum / region.inner().powi(domain.dim() as i32))
}

/// The cuboid `{c_in R <= x_j <= x_out, |x_i| <= h for i != j}` inscribed in a sector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cuboid {
    pub direction: usize,
    /// Position of the inner face, `c_in R` with `c_in = 1`.
    pub inner: i64,
    /// Position of the outer face, `floor(ℓR / 2)`.
    pub outer: i64,
    /// Half width `h` in the orthogonal directions (`c_orth α R`).
    pub half_width: i64,
}

impl Cuboid {
    /// Largest cuboid of this shape inside the sector; the orthogonal half
    /// width is the largest `h` whose corner points satisfy the sector constraints.
    pub fn inscribed(region: &RegionSpec, dim: usize) -> Result<Self> {
        let RegionSpec::Sector { r, ell, direction, alpha } = *region else {
            return Err(invalid("region", "cuboids are inscribed in sectors"));
        };
        let inner = r.ceil() as i64;
        let outer = (ell * r / 2.0).floor() as i64;
        if outer <= inner {
            return Err(Error::EmptyRegion(format!("cuboid faces {inner} and {outer} do not separate")));
        }
        let fits = |h: i64| {
            let orth = (dim as f64 - 1.0) * (h * h) as f64;
            let near = ((inner * inner) as f64 + orth).sqrt();
            let far = ((outer * outer) as f64 + orth).sqrt();
            (inner as f64) > (1.0 - alpha) * near && far <= ell * r
        };
        if !fits(0) {
            return Err(Error::EmptyRegion("no cuboid fits in the sector".into()));
        }
        let mut h = 0;
        while fits(h + 1) {
            h += 1;
        }
        Ok(Self { direction, inner, outer, half_width: h })
    }

    pub fn sites(&self, dim: usize) -> Vec<Vec<i64>> {
        let h = self.half_width;
        let mut out = Vec::new();
        for t in self.inner..=self.outer {
            for_each_face_point(dim, self.direction, t, h, |x| out.push(x.to_vec()));
        }
        out
    }

    pub fn inner_face(&self, dim: usize) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        for_each_face_point(dim, self.direction, self.inner, self.half_width, |x| out.push(x.to_vec()));
        out
    }
}

fn for_each_face_point(dim: usize, direction: usize, t: i64, h: i64, mut f: impl FnMut(&[i64])) {
    let mut x = vec![-h; dim];
    x[direction] = t;
    loop {
        f(&x);
        let mut j = dim;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            if j == direction {
                continue;
            }
            if x[j] < h {
                x[j] += 1;
                break;
            }
            x[j] = -h;
        }
    }
}

/// Face gaps and the telescoping Cauchy-Schwarz chain on an inscribed cuboid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TelescopingCheck {
    pub face_sites: usize,
    /// `min_{x ∈ F_in} G(x) - G(x + (outer - inner) e_j)`.
    pub min_face_gap: f64,
    /// `Σ_{x ∈ F_in} (G(x) - G(x + (outer - inner) e_j))`.
    pub gap_sum: f64,
    /// `sqrt(|F_in| (outer - inner)) · sqrt(Σ_{Cub} |G(x) - G(x + e_j)|²)`.
    pub cauchy_schwarz_bound: f64,
}

impl TelescopingCheck {
    pub fn holds(&self) -> bool {
        self.min_face_gap > 0.0 && self.gap_sum <= self.cauchy_schwarz_bound * (1.0 + 1e-12)
    }
}

pub fn cuboid_telescoping(green: &GreenField<'_>, cuboid: &Cuboid) -> TelescopingCheck {
    let dim = green.domain().dim();
    let j = cuboid.direction;
    let span = cuboid.outer - cuboid.inner;
    let face = cuboid.inner_face(dim);
    let mut min_face_gap = f64::INFINITY;
    let mut gap_sum = 0.0;
    let mut energy = 0.0;
    for x in &face {
        let mut y = x.clone();
        y[j] += span;
        let gap = green.get(x) - green.get(&y);
        min_face_gap = min_face_gap.min(gap);
        gap_sum += gap;
        let mut z = x.clone();
        for _ in 0..span {
            energy += green.gradient(&z, j).powi(2);
            z[j] += 1;
        }
    }
    TelescopingCheck {
        face_sites: face.len(),
        min_face_gap,
        gap_sum,
        cauchy_schwarz_bound: ((face.len() as f64) * span as f64).sqrt() * energy.sqrt(),
    }
}

/// Mean of `f` over the shell `r - 1/2 <= |x| < r + 1/2`, restricted to `mask`.
pub fn shell_mean(f: &LatticeFunction, mask: Option<&[bool]>, r: f64) -> Option<f64> {
    let domain = f.domain();
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 0..domain.len() {
        if mask.is_some_and(|m| !m[i]) {
            continue;
        }
        let n = norm(&domain.point(i));
        if n >= r - 0.5 && n < r + 0.5 {
            sum += f.values()[i];
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Constants of the Rellich inequality generated by `w_G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RellichParams {
    pub alpha: f64,
    pub gamma: f64,
    /// `E = λ² / (2d)`.
    pub ellipticity: f64,
}

/// `γ = ((1 - E^{α/2}) / (1 - E^{1/2}))²` with `E = λ²/(2d)`.
pub fn rellich_params(lambda: f64, dim: usize, alpha: f64) -> Result<RellichParams> {
    if dim < 3 {
        return Err(Error::Dimension(dim));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(invalid("lambda", format!("must lie in (0, 1], got {lambda}")));
    }
    let e = lambda * lambda / (2.0 * dim as f64);
    let gamma = ((1.0 - e.powf(alpha / 2.0)) / (1.0 - e.sqrt())).powi(2);
    Ok(RellichParams { alpha, gamma, ellipticity: e })
}

/// Weights `G^α / w_G` and `G^α w_G` on `W = supp w_G`.
#[derive(Debug, Clone)]
pub struct RellichWeights {
    pub alpha: f64,
    pub lhs: LatticeFunction,
    pub rhs: LatticeFunction,
    /// Membership in `W` (computed sites with `w_G > 0`).
    pub support: Vec<bool>,
    /// Computed sites excluded because `w_G = 0`.
    pub excluded: usize,
}

/// Accepts any `α > 0`; the inequality itself needs `α ∈ (0, 1)` (see [`rellich_params`]).
pub fn rellich_weights(w: &HardyWeightField<'_, '_>, alpha: f64) -> Result<RellichWeights> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(invalid("alpha", "Rellich exponent must be positive"));
    }
    let domain = w.domain().clone();
    let g = w.green().values().values();
    let n = domain.len();
    let (mut lhs, mut rhs, mut support) = (vec![0.0; n], vec![0.0; n], vec![false; n]);
    let mut excluded = 0;
    for i in 0..n {
        if !w.is_computed(i) {
            continue;
        }
        let wi = w.w().values()[i];
        if wi > 0.0 {
            let ga = g[i].powf(alpha);
            lhs[i] = ga / wi;
            rhs[i] = ga * wi;
            support[i] = true;
        } else {
            excluded += 1;
        }
    }
    Ok(RellichWeights {
        alpha,
        lhs: LatticeFunction::new(domain.clone(), lhs),
        rhs: LatticeFunction::new(domain, rhs),
        support,
        excluded,
    })
}

/// Second-order operator inside the Rellich norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RellichOperator {
    /// The free Laplacian `Σ_{y~x} (φ(x) - φ(y))`.
    Free,
    /// The operator `L` of the coefficient field.
    Elliptic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RellichCheck {
    /// `‖1_φ Aφ‖_{G^α/w_G}`.
    pub lhs: f64,
    /// `‖φ‖_{G^α w_G}`.
    pub rhs: f64,
    /// `lhs - (1 - γ) rhs`.
    pub residual: f64,
}

/// Evaluates both sides of the Rellich inequality for `phi` supported in `W`.
pub fn rellich_residual(
    field: &CoefficientField,
    weights: &RellichWeights,
    gamma: f64,
    phi: &LatticeFunction,
    operator: RellichOperator,
) -> Result<RellichCheck> {
    let domain = field.domain();
    domain.ensure_same(phi.domain())?;
    domain.ensure_same(weights.lhs.domain())?;
    for (i, &v) in phi.values().iter().enumerate() {
        if v != 0.0 && !weights.support[i] {
            return Err(invalid("phi", format!("test function is nonzero off W at {:?}", domain.point(i))));
        }
    }
    let a_phi = match operator {
        RellichOperator::Elliptic => field.apply(phi)?,
        RellichOperator::Free => CoefficientField::free(domain.clone()).apply(phi)?,
    };
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for (i, &v) in phi.values().iter().enumerate() {
        if v != 0.0 {
            lhs += weights.lhs.values()[i] * a_phi.values()[i].powi(2);
            rhs += weights.rhs.values()[i] * v * v;
        }
    }
    let (lhs, rhs) = (lhs.sqrt(), rhs.sqrt());
    Ok(RellichCheck { lhs, rhs, residual: lhs - (1.0 - gamma) * rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::{solve_green, SolverOptions};
    use crate::lattice::Distribution;

    #[test]
    fn region_membership() {
        let a = RegionSpec::annulus(2.0, 2.0).unwrap();
        assert!(a.contains(&[2, 0, 0]));
        assert!(a.contains(&[4, 0, 0]));
        assert!(!a.contains(&[1, 1, 0]));
        assert!(!a.contains(&[4, 1, 0]));
        let s = RegionSpec::sector(2.0, 2.0, 0, 0.5).unwrap();
        assert!(s.contains(&[3, 1, 0]));
        assert!(!s.contains(&[-3, 1, 0]));
        assert!(s.contains(&[2, 2, 0]));
        assert!(!s.contains(&[1, 2, 0]));
        assert!(RegionSpec::sector(2.0, 2.0, 0, 1.0).is_err());
        assert!(RegionSpec::annulus(2.0, 0.5).is_err());
        let sites = a.sites(3);
        assert!(sites.iter().all(|x| a.contains(x)));
        let brute = (-4..=4i64)
            .flat_map(|i| (-4..=4i64).flat_map(move |j| (-4..=4i64).map(move |k| [i, j, k])))
            .filter(|x| a.contains(x))
            .count();
        assert_eq!(sites.len(), brute);
    }

    #[test]
    fn cuboid_lies_in_sector() {
        for (r, ell, alpha) in [(8.0, 4.0, 0.5), (12.0, 4.0, 0.3), (5.0, 3.0, 0.9)] {
            let s = RegionSpec::sector(r, ell, 0, alpha).unwrap();
            let c = Cuboid::inscribed(&s, 3).unwrap();
            assert!(c.half_width >= 1, "{r} {ell} {alpha}");
            for x in c.sites(3) {
                assert!(s.contains(&x), "{x:?}");
            }
        }
    }

    #[test]
    fn rellich_gamma_limits() {
        let p = rellich_params(1.0, 5, 2.0 / 3.0).unwrap();
        assert!((p.ellipticity - 0.1).abs() < 1e-15);
        assert!(p.gamma > 0.0 && p.gamma < 1.0);
        assert!(rellich_params(1.0, 5, 1.0 - 1e-9).unwrap().gamma > 1.0 - 1e-8);
        assert!(rellich_params(1.0, 5, 1e-9).unwrap().gamma < 1e-8);
        assert!(rellich_params(1.0, 5, 1.0).is_err());
        assert!(rellich_params(1.0, 5, 0.0).is_err());
        assert!(rellich_params(1.5, 5, 0.5).is_err());
    }

    #[test]
    fn weight_at_pole_and_sandwich() {
        let f = CoefficientField::iid(BoxDomain::new(3, 5).unwrap(), 0.4, Distribution::Uniform, 3).unwrap();
        let g = solve_green(&f, &[0, 0, 0], SolverOptions::default()).unwrap();
        let w = hardy_weight(&g).unwrap();
        assert!(w.w().get(&[0, 0, 0]) >= 1.0);
        assert_eq!(w.sandwich_violation(), 0.0);
        assert!(w.w().values().iter().all(|&v| v >= 0.0));
        assert!(!w.is_computed(0));
    }

    #[test]
    fn interior_policy_rejects_boundary_regions() {
        let f = CoefficientField::free(BoxDomain::new(3, 12).unwrap());
        let g = solve_green(&f, &[0, 0, 0], SolverOptions::default()).unwrap();
        let w = hardy_weight(&g).unwrap();
        let a = RegionSpec::annulus(3.0, 2.0).unwrap();
        assert!(region_average(&w, &a, BoundaryPolicy::InnerHalf).is_ok());
        assert!(region_average(&w, &a, BoundaryPolicy::Interior).is_ok());
        let b = RegionSpec::annulus(3.0, 5.0).unwrap();
        assert!(region_average(&w, &b, BoundaryPolicy::InnerHalf).is_err());
        assert!(region_average(&w, &b, BoundaryPolicy::Interior).is_err());
        let z = region_average(&w, &b, BoundaryPolicy::ZeroExtended).unwrap();
        assert!(z.missing > 0);
    }
}
