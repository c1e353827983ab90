//! Monte Carlo ensembles over i.i.d. coefficient fields.
//!
//! Realization `i` uses the field seed `derive_seed(master_seed, i)`.
//! Realizations run in parallel and are collected in index order, and every
//! statistic is reduced sequentially afterwards, so results do not depend on
//! the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fourier::kappa;
use crate::green::{free_green_quadrature, solve_green, SolverOptions};
use crate::hardy::hardy_weight;
use crate::lattice::{norm, BoxDomain, CoefficientField, Distribution};
use crate::rng::derive_seed;
use crate::stats::{bootstrap_indices, bootstrap_mean_ci, log_log_fit, mean, variance, LineFit};

/// Below this many realizations confidence intervals are flagged.
pub const LOW_CONFIDENCE_REALIZATIONS: usize = 16;

const BOOTSTRAP_STREAM: u64 = 0xb007_5742;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub dim: usize,
    pub box_radius: usize,
    /// `0` gives the degenerate ensemble of free fields.
    pub delta: f64,
    pub dist: Distribution,
    pub realizations: usize,
    pub master_seed: u64,
    /// Shell radii; each contributes `r e_j` for every axis and one diagonal site.
    pub probe_shells: Vec<f64>,
    /// Exponents `p > 1/2` of the moments `<w_G(x)^p>`.
    pub moments: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Constant `c` of the exceedance events `{w_G(x) > c (1+|x|)^{-2}}`.
    #[serde(default = "default_exceedance")]
    pub exceedance_c: f64,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    /// Multiply probe values by the free-field factor `G_0,∞ / G_0,box`.
    #[serde(default = "default_true")]
    pub truncation_correction: bool,
    /// Larger radius for the two-radius check of the correction on 4 realizations.
    #[serde(default)]
    pub spot_check_radius: Option<usize>,
    /// Accumulate `<w_G>` and `<G>` on the whole box.
    #[serde(default)]
    pub track_field: bool,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_exceedance() -> f64 {
    0.1
}

fn default_bootstrap() -> usize {
    1000
}

fn default_true() -> bool {
    true
}

impl EnsembleSpec {
    pub fn new(dim: usize, box_radius: usize, delta: f64, realizations: usize, master_seed: u64) -> Self {
        Self {
            dim,
            box_radius,
            delta,
            dist: Distribution::Rademacher,
            realizations,
            master_seed,
            probe_shells: vec![6.0, 9.0, 12.0, 16.0],
            moments: vec![1.0, 2.0],
            tol: default_tol(),
            exceedance_c: default_exceedance(),
            bootstrap: default_bootstrap(),
            truncation_correction: true,
            spot_check_radius: None,
            track_field: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let domain = BoxDomain::new(self.dim, self.box_radius)?;
        if self.realizations < 2 {
            return Err(invalid("realizations", "need at least two realizations"));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(invalid("delta", format!("must lie in [0, 1), got {}", self.delta)));
        }
        if let Some(p) = self.moments.iter().find(|&&p| !(p > 0.5)) {
            return Err(invalid("moments", format!("exponent {p} is not above 1/2")));
        }
        if !self.moments.contains(&1.0) || !self.moments.contains(&2.0) {
            return Err(invalid("moments", "moments must include p = 1 and p = 2"));
        }
        if self.probe_shells.is_empty() {
            return Err(invalid("probe_shells", "no probe shells"));
        }
        let limit = domain.radius() as f64 / 2.0;
        for site in self.probe_sites() {
            if site.norm > limit {
                return Err(Error::RegionOutsideBox(format!(
                    "probe site {:?} lies outside the inner half-box",
                    site.x
                )));
            }
        }
        if let Some(r) = self.spot_check_radius {
            if r <= self.box_radius {
                return Err(invalid("spot_check_radius", "must exceed the box radius"));
            }
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        Ok(())
    }

    /// Probe sites: `r e_j` for each axis and the diagonal `round(r/√d) (1, ..., 1)`.
    pub fn probe_sites(&self) -> Vec<ProbeSite> {
        let d = self.dim;
        let mut out = Vec::new();
        for &r in &self.probe_shells {
            let ri = r.round() as i64;
            for j in 0..d {
                let mut x = vec![0; d];
                x[j] = ri;
                out.push(ProbeSite::new(r, x));
            }
            let m = (r / (d as f64).sqrt()).round() as i64;
            out.push(ProbeSite::new(r, vec![m; d]));
        }
        out
    }

    fn field(&self, radius: usize, index: usize) -> Result<CoefficientField> {
        let domain = BoxDomain::new(self.dim, radius)?;
        if self.delta == 0.0 {
            Ok(CoefficientField::free(domain))
        } else {
            CoefficientField::iid(domain, self.delta, self.dist, self.seed(index))
        }
    }

    pub fn seed(&self, index: usize) -> u64 {
        derive_seed(self.master_seed, index as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeSite {
    pub shell: f64,
    pub x: Vec<i64>,
    pub norm: f64,
}

impl ProbeSite {
    fn new(shell: f64, x: Vec<i64>) -> Self {
        let norm = norm(&x);
        Self { shell, x, norm }
    }
}

/// Probe values of one realization (after the truncation correction).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationSample {
    pub index: usize,
    pub seed: u64,
    pub residual: f64,
    pub iterations: usize,
    pub g: Vec<f64>,
    pub w: Vec<f64>,
    pub w_lower: Vec<f64>,
    pub w_upper: Vec<f64>,
}

/// Moment `<w^p>` at one site with its percentile bootstrap interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub p: f64,
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub lower_bound_moment: f64,
    pub upper_bound_moment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteStats {
    pub site: ProbeSite,
    pub mean_g: f64,
    pub mean_g_ci: (f64, f64),
    pub var_g: f64,
    pub moments: Vec<MomentEstimate>,
    /// Empirical `P(w_G(x) > c (1+|x|)^{-2})`.
    pub exceedance: f64,
    pub correction_g: f64,
    pub correction_w: f64,
}

impl SiteStats {
    pub fn moment(&self, p: f64) -> Option<&MomentEstimate> {
        self.moments.iter().find(|m| m.p == p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentFit {
    /// `"w^p"` or `"G"`.
    pub quantity: String,
    pub p: f64,
    pub fit: LineFit,
}

/// Two-radius validation of the truncation correction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpotCheck {
    pub radius: usize,
    pub realizations: usize,
    /// Largest `|G_corr,R / G_corr,R' - 1|` over probe sites.
    pub max_rel_diff_g: f64,
    pub max_rel_diff_w: f64,
    /// Same comparison without the correction.
    pub max_rel_diff_g_raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub spec: EnsembleSpec,
    pub sites: Vec<SiteStats>,
    pub fits: Vec<ExponentFit>,
    pub samples: Vec<RealizationSample>,
    pub low_confidence: bool,
    pub spot_check: Option<SpotCheck>,
    /// Whole-box `<w_G>` (zero where not computed) when tracking was requested.
    pub field_mean_w: Option<Vec<f64>>,
    pub field_mean_g: Option<Vec<f64>>,
    /// Smallest shell radius from which every probe site has `<w_G(x)> >= c (1+|x|)^{-2}`.
    pub empirical_r0: Option<f64>,
}

impl EnsembleStats {
    pub fn seeds(&self) -> Vec<u64> {
        self.samples.iter().map(|s| s.seed).collect()
    }

    /// Shell radii in input order, each with its representative sites.
    pub fn shells(&self) -> Vec<(f64, Vec<&SiteStats>)> {
        let mut out: Vec<(f64, Vec<&SiteStats>)> = Vec::new();
        for s in &self.sites {
            match out.iter_mut().find(|(r, _)| *r == s.site.shell) {
                Some((_, v)) => v.push(s),
                None => out.push((s.site.shell, vec![s])),
            }
        }
        out
    }

    pub fn fit(&self, quantity: &str, p: f64) -> Option<&LineFit> {
        self.fits.iter().find(|f| f.quantity == quantity && f.p == p).map(|f| &f.fit)
    }
}

struct Correction {
    g: Vec<f64>,
    w: Vec<f64>,
}

fn free_weight_from(g: impl Fn(&[i64]) -> f64, x: &[i64]) -> f64 {
    let gx = g(x);
    let mut sum = 0.0;
    for j in 0..x.len() {
        for s in [-1, 1] {
            let mut y = x.to_vec();
            y[j] += s;
            sum += (gx.sqrt() - g(&y).sqrt()).powi(2);
        }
    }
    sum / gx
}

/// Free-field factors `G_0,∞(x) / G_0,box(x)` and the analogue for `w`.
fn truncation_correction(dim: usize, radius: usize, sites: &[ProbeSite], tol: f64) -> Result<Correction> {
    let free = CoefficientField::free(BoxDomain::new(dim, radius)?);
    let g_box = solve_green(&free, &vec![0; dim], SolverOptions::with_tol(tol.min(1e-12)))?;
    let quad = |x: &[i64]| -> f64 { free_green_quadrature(x, 1e-12).expect("dimension already validated").value };
    let factors: Vec<(f64, f64)> = sites
        .par_iter()
        .map(|s| {
            let fg = quad(&s.x) / g_box.get(&s.x);
            let w_inf = free_weight_from(quad, &s.x);
            let w_box = free_weight_from(|y| g_box.get(y), &s.x);
            (fg, w_inf / w_box)
        })
        .collect();
    Ok(Correction { g: factors.iter().map(|f| f.0).collect(), w: factors.iter().map(|f| f.1).collect() })
}

struct RawSample {
    sample: RealizationSample,
    field_w: Option<Vec<f64>>,
    field_g: Option<Vec<f64>>,
}

fn run_realization(
    spec: &EnsembleSpec,
    radius: usize,
    index: usize,
    sites: &[ProbeSite],
    track: bool,
) -> Result<RawSample> {
    let seed = spec.seed(index);
    let wrap = |e: Error| Error::Realization { index, seed, source: Box::new(e) };
    let field = spec.field(radius, index).map_err(wrap)?;
    let green = solve_green(&field, &vec![0; spec.dim], SolverOptions::with_tol(spec.tol)).map_err(wrap)?;
    let w = hardy_weight(&green).map_err(wrap)?;
    let at = |f: &crate::lattice::LatticeFunction| sites.iter().map(|s| f.get(&s.x)).collect::<Vec<_>>();
    Ok(RawSample {
        sample: RealizationSample {
            index,
            seed: if spec.delta == 0.0 { 0 } else { seed },
            residual: green.residual(),
            iterations: green.iterations(),
            g: at(green.values()),
            w: at(w.w()),
            w_lower: at(w.lower()),
            w_upper: at(w.upper()),
        },
        field_w: track.then(|| w.w().values().to_vec()),
        field_g: track.then(|| green.values().values().to_vec()),
    })
}

pub fn run_ensemble(spec: &EnsembleSpec) -> Result<EnsembleStats> {
    spec.validate()?;
    let sites = spec.probe_sites();
    let n_sites = sites.len();
    let correction = if spec.truncation_correction {
        Some(truncation_correction(spec.dim, spec.box_radius, &sites, spec.tol)?)
    } else {
        None
    };

    let raw: Vec<RawSample> = (0..spec.realizations)
        .into_par_iter()
        .map(|i| run_realization(spec, spec.box_radius, i, &sites, spec.track_field))
        .collect::<Result<_>>()?;

    let (cg, cw) = match &correction {
        Some(c) => (c.g.clone(), c.w.clone()),
        None => (vec![1.0; n_sites], vec![1.0; n_sites]),
    };
    let mut field_mean_w: Option<Vec<f64>> = None;
    let mut field_mean_g: Option<Vec<f64>> = None;
    let mut samples = Vec::with_capacity(raw.len());
    for r in raw {
        if let Some(fw) = r.field_w {
            let acc = field_mean_w.get_or_insert_with(|| vec![0.0; fw.len()]);
            acc.iter_mut().zip(&fw).for_each(|(a, b)| *a += b);
        }
        if let Some(fg) = r.field_g {
            let acc = field_mean_g.get_or_insert_with(|| vec![0.0; fg.len()]);
            acc.iter_mut().zip(&fg).for_each(|(a, b)| *a += b);
        }
        let mut s = r.sample;
        for k in 0..n_sites {
            s.g[k] *= cg[k];
            s.w[k] *= cw[k];
            s.w_lower[k] *= cw[k];
            s.w_upper[k] *= cw[k];
        }
        samples.push(s);
    }
    let n = spec.realizations as f64;
    for acc in [&mut field_mean_w, &mut field_mean_g].into_iter().flatten() {
        acc.iter_mut().for_each(|v| *v /= n);
    }

    let resamples = bootstrap_indices(samples.len(), spec.bootstrap, derive_seed(spec.master_seed, BOOTSTRAP_STREAM));
    let d = spec.dim as i32;
    let mut site_stats = Vec::with_capacity(n_sites);
    for (k, site) in sites.iter().enumerate() {
        let g: Vec<f64> = samples.iter().map(|s| s.g[k]).collect();
        let w: Vec<f64> = samples.iter().map(|s| s.w[k]).collect();
        let lo: Vec<f64> = samples.iter().map(|s| s.w_lower[k]).collect();
        let hi: Vec<f64> = samples.iter().map(|s| s.w_upper[k]).collect();
        let mut moments = Vec::new();
        for &p in &spec.moments {
            let wp: Vec<f64> = w.iter().map(|v| v.powf(p)).collect();
            let (ci_lo, ci_hi) = ci(&wp, &resamples);
            moments.push(MomentEstimate {
                p,
                value: mean(&wp),
                ci_lo,
                ci_hi,
                lower_bound_moment: mean(&lo.iter().map(|v| v.powf(p)).collect::<Vec<_>>()),
                upper_bound_moment: mean(&hi.iter().map(|v| v.powf(p)).collect::<Vec<_>>()),
            });
        }
        let threshold = spec.exceedance_c * (1.0 + site.norm).powi(-2);
        let _ = d;
        site_stats.push(SiteStats {
            site: site.clone(),
            mean_g: mean(&g),
            mean_g_ci: ci(&g, &resamples),
            var_g: variance(&g),
            moments,
            exceedance: w.iter().filter(|&&v| v > threshold).count() as f64 / n,
            correction_g: cg[k],
            correction_w: cw[k],
        });
    }

    let mut stats = EnsembleStats {
        spec: spec.clone(),
        sites: site_stats,
        fits: Vec::new(),
        samples,
        low_confidence: spec.realizations < LOW_CONFIDENCE_REALIZATIONS,
        spot_check: None,
        field_mean_w,
        field_mean_g,
        empirical_r0: None,
    };
    stats.fits = exponent_fits(&stats)?;
    stats.empirical_r0 = empirical_r0(&stats);
    if let Some(r2) = spec.spot_check_radius {
        stats.spot_check = Some(spot_check(spec, &sites, &stats, r2)?);
    }
    Ok(stats)
}

/// Percentile interval, collapsed to the point estimate for constant data.
fn ci(values: &[f64], resamples: &[Vec<usize>]) -> (f64, f64) {
    if resamples.is_empty() {
        let m = mean(values);
        return (m, m);
    }
    let (lo, hi) = bootstrap_mean_ci(values, resamples, 0.025);
    let m = mean(values);
    (lo.min(m), hi.max(m))
}

/// Log-log slopes of shell averages of `<w^p>` and `<G>` against the mean `|x|` of each shell.
fn exponent_fits(stats: &EnsembleStats) -> Result<Vec<ExponentFit>> {
    let shells = stats.shells();
    if shells.len() < 2 {
        return Ok(Vec::new());
    }
    let radii: Vec<f64> =
        shells.iter().map(|(_, s)| s.iter().map(|x| x.site.norm).sum::<f64>() / s.len() as f64).collect();
    let mut out = Vec::new();
    for &p in &stats.spec.moments {
        let y: Vec<f64> = shells
            .iter()
            .map(|(_, s)| s.iter().map(|x| x.moment(p).map_or(0.0, |m| m.value)).sum::<f64>() / s.len() as f64)
            .collect();
        out.push(ExponentFit { quantity: "w^p".into(), p, fit: log_log_fit(&radii, &y)? });
    }
    let y: Vec<f64> = shells.iter().map(|(_, s)| s.iter().map(|x| x.mean_g).sum::<f64>() / s.len() as f64).collect();
    out.push(ExponentFit { quantity: "G".into(), p: 1.0, fit: log_log_fit(&radii, &y)? });
    Ok(out)
}

fn empirical_r0(stats: &EnsembleStats) -> Option<f64> {
    let c = stats.spec.exceedance_c;
    let shells = stats.shells();
    let ok: Vec<bool> = shells
        .iter()
        .map(|(_, s)| s.iter().all(|x| x.moment(1.0).is_some_and(|m| m.value >= c * (1.0 + x.site.norm).powi(-2))))
        .collect();
    let mut r0 = None;
    for (k, (r, _)) in shells.iter().enumerate().rev() {
        if ok[k] {
            r0 = Some(*r);
        } else {
            break;
        }
    }
    r0
}

fn spot_check(spec: &EnsembleSpec, sites: &[ProbeSite], stats: &EnsembleStats, radius: usize) -> Result<SpotCheck> {
    let count = spec.realizations.min(4);
    let far =
        if spec.truncation_correction { Some(truncation_correction(spec.dim, radius, sites, spec.tol)?) } else { None };
    let raw: Vec<RawSample> =
        (0..count).into_par_iter().map(|i| run_realization(spec, radius, i, sites, false)).collect::<Result<_>>()?;
    let mut check =
        SpotCheck { radius, realizations: count, max_rel_diff_g: 0.0, max_rel_diff_w: 0.0, max_rel_diff_g_raw: 0.0 };
    for (near, far_sample) in stats.samples.iter().zip(&raw) {
        for k in 0..sites.len() {
            let (fg, fw) = far.as_ref().map_or((1.0, 1.0), |c| (c.g[k], c.w[k]));
            let g_far = far_sample.sample.g[k];
            let near_raw = near.g[k] / stats.sites[k].correction_g;
            check.max_rel_diff_g = check.max_rel_diff_g.max((near.g[k] / (g_far * fg) - 1.0).abs());
            check.max_rel_diff_w = check.max_rel_diff_w.max((near.w[k] / (far_sample.sample.w[k] * fw) - 1.0).abs());
            check.max_rel_diff_g_raw = check.max_rel_diff_g_raw.max((near_raw / g_far - 1.0).abs());
        }
    }
    Ok(check)
}

/// Per-site Paley-Zygmund comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaleyZygmund {
    pub site: ProbeSite,
    /// Empirical `P(w > ½ <w>)` with the sample mean.
    pub empirical: f64,
    /// `¼ <w>² / <w²>` from sample moments.
    pub floor: f64,
    /// Binomial standard error of `empirical`.
    pub stderr: f64,
    pub holds: bool,
}

pub fn paley_zygmund_check(stats: &EnsembleStats) -> Result<Vec<PaleyZygmund>> {
    let n = stats.samples.len() as f64;
    stats
        .sites
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let m1 = s.moment(1.0).ok_or_else(|| invalid("moments", "p = 1 missing"))?.value;
            let m2 = s.moment(2.0).ok_or_else(|| invalid("moments", "p = 2 missing"))?.value;
            let hits = stats.samples.iter().filter(|r| r.w[k] > 0.5 * m1).count() as f64;
            let empirical = hits / n;
            let floor = if m2 > 0.0 { 0.25 * m1 * m1 / m2 } else { 0.0 };
            let stderr = (empirical * (1.0 - empirical) / n).sqrt();
            Ok(PaleyZygmund {
                site: s.site.clone(),
                empirical,
                floor,
                stderr,
                holds: empirical >= floor - 2.0 * stderr,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveQ {
    pub q: f64,
    pub stderr: f64,
    /// Per-site `q̂(x) = (κ_d/2) |x|^{d-2} / <G(x)>`.
    pub per_site: Vec<f64>,
    pub weighted: bool,
}

/// Weighted least-squares constant fit of `q̂(x)` over probe sites with `|x| >= 6`.
pub fn estimate_effective_q(stats: &EnsembleStats) -> Result<EffectiveQ> {
    let d = stats.spec.dim;
    let leading = kappa(d)? / 2.0;
    let usable: Vec<&SiteStats> = stats.sites.iter().filter(|s| s.site.norm >= 6.0).collect();
    let shells = usable.iter().map(|s| s.site.shell).fold(Vec::<f64>::new(), |mut acc, r| {
        if !acc.contains(&r) {
            acc.push(r);
        }
        acc
    });
    if shells.len() < 3 {
        return Err(invalid("probe_shells", "need at least three shells with |x| >= 6"));
    }
    let n = stats.samples.len() as f64;
    let q: Vec<f64> = usable.iter().map(|s| leading * s.site.norm.powi(2 - d as i32) / s.mean_g).collect();
    let var: Vec<f64> = usable.iter().zip(&q).map(|(s, qi)| qi * qi * (s.var_g / n) / (s.mean_g * s.mean_g)).collect();
    let weighted = var.iter().all(|&v| v > 0.0);
    let weights: Vec<f64> = if weighted { var.iter().map(|v| 1.0 / v).collect() } else { vec![1.0; q.len()] };
    let sw: f64 = weights.iter().sum();
    let qhat = q.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>() / sw;
    let m = q.len() as f64;
    let scatter = (q.iter().zip(&weights).map(|(a, b)| b * (a - qhat).powi(2)).sum::<f64>() / ((m - 1.0) * sw)).sqrt();
    let stderr = if weighted { scatter.max(sw.powf(-0.5)) } else { scatter };
    if !qhat.is_finite() || !stderr.is_finite() {
        return Err(Error::NonFiniteFit("effective q".into()));
    }
    Ok(EffectiveQ { q: qhat, stderr, per_site: q, weighted })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Concentration {
    /// `(shell, mean |x|, shell average of std(G(x)) (1+|x|)^{d-1})`.
    pub shells: Vec<(f64, f64, f64)>,
    /// Log-log slope of the normalized fluctuation; `None` when it vanishes.
    pub slope: Option<LineFit>,
    pub eps: f64,
    pub holds: bool,
}

pub fn concentration_check(stats: &EnsembleStats, eps: f64) -> Result<Concentration> {
    let d = stats.spec.dim as i32;
    let shells: Vec<(f64, f64, f64)> = stats
        .shells()
        .into_iter()
        .map(|(r, s)| {
            let k = s.len() as f64;
            let norm = s.iter().map(|x| x.site.norm).sum::<f64>() / k;
            let fl = s.iter().map(|x| x.var_g.sqrt() * (1.0 + x.site.norm).powi(d - 1)).sum::<f64>() / k;
            (r, norm, fl)
        })
        .collect();
    let slope = if shells.iter().all(|s| s.2 > 0.0) && shells.len() >= 2 {
        let x: Vec<f64> = shells.iter().map(|s| s.1).collect();
        let y: Vec<f64> = shells.iter().map(|s| s.2).collect();
        Some(log_log_fit(&x, &y)?)
    } else {
        None
    };
    let holds = slope.is_none_or(|f| f.slope <= eps);
    Ok(Concentration { shells, slope, eps, holds })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(delta: f64) -> EnsembleSpec {
        let mut spec = EnsembleSpec::new(3, 14, delta, 4, 11);
        spec.probe_shells = vec![2.0, 3.0, 4.0, 5.0];
        spec.bootstrap = 50;
        spec.truncation_correction = false;
        spec
    }

    #[test]
    fn effective_q_of_the_free_field_is_one() {
        let mut spec = EnsembleSpec::new(3, 18, 0.0, 2, 1);
        spec.probe_shells = vec![6.0, 7.0, 8.0];
        spec.bootstrap = 10;
        let q = estimate_effective_q(&run_ensemble(&spec).unwrap()).unwrap();
        assert!((q.q - 1.0).abs() < 1e-2, "{q:?}");
    }

    #[test]
    fn validation() {
        assert!(small_spec(0.2).validate().is_ok());
        let mut s = small_spec(0.2);
        s.realizations = 1;
        assert!(s.validate().is_err());
        let mut s = small_spec(0.2);
        s.moments = vec![0.5, 1.0, 2.0];
        assert!(s.validate().is_err());
        let mut s = small_spec(0.2);
        s.probe_shells = vec![8.0];
        assert!(matches!(s.validate(), Err(Error::RegionOutsideBox(_))));
        assert!(small_spec(1.0).validate().is_err());
    }

    #[test]
    fn probe_sites_cover_axes_and_diagonal() {
        let s = small_spec(0.2);
        let sites = s.probe_sites();
        assert_eq!(sites.len(), 4 * 4);
        assert_eq!(sites[0].x, vec![2, 0, 0]);
        assert_eq!(sites[3].x, vec![1, 1, 1]);
    }

    #[test]
    fn degenerate_ensemble() {
        let stats = run_ensemble(&small_spec(0.0)).unwrap();
        for s in &stats.sites {
            assert_eq!(s.var_g, 0.0);
        }
        for pz in paley_zygmund_check(&stats).unwrap() {
            assert!((pz.floor - 0.25).abs() < 1e-12);
            assert_eq!(pz.empirical, 1.0);
        }
        let c = concentration_check(&stats, 0.3).unwrap();
        assert!(c.slope.is_none() && c.holds);
        assert!(stats.low_confidence);
    }
}
