use std::path::Path;

use anyhow::{bail, Context, Result};
use hardy_core::ensemble::{
    concentration_check, estimate_effective_q, paley_zygmund_check, run_ensemble, EnsembleSpec,
};
use hardy_core::fourier::{build_t, AsymptoticModel, CorrectionKernel, DEFAULT_CS_EXCLUSION};
use hardy_core::green::{
    aronson_report, extrapolate_field, free_green_quadrature, solve_green, truncation_extrapolate, GreenField,
};
use hardy_core::hardy::{
    hardy_weight, region_average, rellich_params, rellich_residual, rellich_weights, sector_gradient_energy,
    shell_mean, RegionSpec, RellichOperator, DEFAULT_ELL, DEFAULT_SECTOR_ALPHA,
};
use hardy_core::lattice::{BoxDomain, CoefficientField, LatticeFunction};
use hardy_core::report::{
    write_aronson_csv, write_ensemble_csv, write_green_csv, write_json, write_region_csv, write_weight_csv,
    GreenSidecar, RegionRow,
};
use hardy_core::rng::task_rng;
use hardy_core::spectral::certify_hardy;
use hardy_core::stats::log_log_fit;
use rand::Rng;
use serde_json::json;

use crate::manifest::RunOutput;
use crate::settings::{Policy, ReportKind, Settings};

const CERTIFY_TOL: f64 = 1e-8;
const RELLICH_TEST_FUNCTIONS: usize = 20;

pub fn green(s: &Settings, dir: &Path) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let x = s.point()?;
    if s.oracle.is_some() {
        let q = free_green_quadrature(&x, s.tol.unwrap_or(1e-10))?;
        println!("G_0({x:?}) = {:?} (error bound {:.1e})", q.value, q.error);
        out.write_file(dir, "oracle.json", |w| write_json(&json!({"x": x, "quadrature": q}), w))?;
        return Ok(out);
    }
    let field = s.field_on(s.radius())?;
    out.seeds.extend(s.field_seed());
    let solver = s.solver();
    let g = solve_green(&field, &s.origin(), solver)?;
    out.stage("solve_green", g.residual(), solver.tol, g.iterations());
    let inv = g.check_invariants()?;
    if !inv.holds() {
        out.fail(format!("Green's function invariants: {inv:?}"));
    }
    out.write_file(dir, "green.csv", |w| write_green_csv(&g, w))?;
    let sidecar = GreenSidecar {
        dim: s.dim(),
        radius: s.radius(),
        pole: s.origin(),
        residual: g.residual(),
        iterations: g.iterations(),
        seed: s.field_seed(),
        tol: solver.tol,
        max_iter: solver.max_iter_for(field.domain()),
    };
    out.write_file(dir, "green.json", |w| write_json(&json!({"green": sidecar, "invariants": inv}), w))?;

    let shells: Vec<f64> = (1..).map(f64::from).take_while(|r| r + 0.5 <= s.radius() as f64 / 2.0).collect();
    if !shells.is_empty() {
        let report = aronson_report(&g, &shells)?;
        out.write_file(dir, "aronson.csv", |w| write_aronson_csv(&report, w))?;
    }
    if let Some(radii) = &s.extrapolate {
        let ex = truncation_extrapolate(radii, |r| s.field_on(r).map_err(to_core), &s.origin(), &x, solver)?;
        out.write_file(dir, "extrapolation.json", |w| write_json(&json!({"x": x, "extrapolation": ex}), w))?;
    }
    Ok(out)
}

fn to_core(e: anyhow::Error) -> hardy_core::Error {
    match e.downcast::<hardy_core::Error>() {
        Ok(e) => e,
        Err(e) => hardy_core::Error::InvalidParameter { name: "field", reason: e.to_string() },
    }
}

pub fn hardy(s: &Settings, dir: &Path) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let field = s.field_on(s.radius())?;
    out.seeds.extend(s.field_seed());
    let solver = s.solver();
    let g = solve_green(&field, &s.origin(), solver)?;
    out.stage("solve_green", g.residual(), solver.tol, g.iterations());
    let raw_w = hardy_weight(&g)?;
    let report_field = report_field(s, &field, &mut out)?;
    let rg = match &report_field {
        Some((f, values)) => GreenField::from_values(f, &s.origin(), values.clone(), g.residual())?,
        None => g.clone(),
    };
    let w = hardy_weight(&rg)?;
    for (name, weight) in [("box", &raw_w), ("report", &w)] {
        if weight.sandwich_violation() > 1e-12 {
            out.fail(format!("{name} weight sandwich violated by {:.3e}", weight.sandwich_violation()));
        }
    }
    out.write_file(dir, "weight.csv", |wr| write_weight_csv(&w, wr))?;

    let ell = s.ell.unwrap_or(DEFAULT_ELL);
    let policy = s.policy.unwrap_or(Policy::InnerHalf);
    let radii = match &s.region_radii {
        Some(r) => r.clone(),
        None => default_region_radii(s.radius(), ell, policy),
    };
    if radii.is_empty() {
        eprintln!("note: no region radius fits in the box; regions.csv holds only the shell fit");
    }
    let kind = s.report.unwrap_or(ReportKind::Annuli);
    let direction = match s.direction {
        Some(0) => bail!("--direction is 1-based"),
        Some(j) => j - 1,
        None => 0,
    };
    let mut rows = Vec::new();
    let mut energies = Vec::new();
    for &r in &radii {
        let region = match kind {
            ReportKind::Annuli => RegionSpec::annulus(r, ell)?,
            ReportKind::Sectors => {
                RegionSpec::sector(r, ell, direction, s.alpha_sector.unwrap_or(DEFAULT_SECTOR_ALPHA))?
            }
        };
        let sum = region_average(&w, &region, policy.into())?;
        if kind == ReportKind::Sectors {
            energies.push(sector_gradient_energy(&rg, &region, policy.into())?);
        }
        rows.push(RegionRow { region, sum });
    }
    let mut fits = Vec::new();
    if radii.len() >= 2 {
        let sums: Vec<f64> = rows.iter().map(|r| r.sum.normalized_sum).collect();
        fits.push(("normalized_sum", log_log_fit(&radii, &sums)?));
        if !energies.is_empty() {
            fits.push(("gradient_energy", log_log_fit(&radii, &energies)?));
        }
    }
    let shells = fit_shells(w.domain().radius());
    if shells.len() >= 2 {
        let means: Vec<f64> = shells
            .iter()
            .map(|&r| shell_mean(w.w(), Some(w.computed_mask()), r).context("empty shell"))
            .collect::<Result<_>>()?;
        fits.push(("shell_mean", log_log_fit(&shells, &means)?));
    }
    out.write_file(dir, "regions.csv", |wr| write_region_csv(&rows, &fits, wr))?;

    if s.certify.unwrap_or(false) {
        let scale = s.weight_scale.unwrap_or(1.0);
        let cert = certify_hardy(&field, &raw_w.scaled(scale), CERTIFY_TOL)?;
        out.stage("certify_hardy", cert.residual, CERTIFY_TOL, cert.iterations);
        if !cert.certified {
            out.fail(format!(
                "Hardy certificate at radius {} with weight scale {scale}: min eigenvalue {:.3e}",
                s.radius(),
                cert.min_eigenvalue
            ));
        }
        let body = json!({"radius": s.radius(), "weight_scale": scale, "certificate": cert});
        out.write_file(dir, "certificate.json", |wr| write_json(&body, wr))?;
    }
    Ok(out)
}

/// Extrapolated `G` on the smallest of the extrapolation boxes, unless `--raw-green`.
fn report_field(
    s: &Settings,
    field: &CoefficientField,
    out: &mut RunOutput,
) -> Result<Option<(CoefficientField, LatticeFunction)>> {
    if s.raw_green.unwrap_or(false) {
        return Ok(None);
    }
    let radii = s.extrapolation_radii();
    let fields: Vec<CoefficientField> = radii.iter().map(|&r| s.field_on(r)).collect::<Result<_>>()?;
    let values = extrapolate_field(&fields, &s.origin(), s.solver())?;
    out.stage(format!("extrapolate_field {radii:?}"), 0.0, s.tol(), 0);
    let first = fields.into_iter().next().context("no extrapolation radii")?;
    if first.domain() != field.domain() {
        bail!("the smallest extrapolation radius must equal --radius");
    }
    Ok(Some((first, values)))
}

/// Dyadic shells `8, 16, ...` up to half the box, or integer shells from a
/// quarter to half the box when fewer than two dyadic shells fit.
fn fit_shells(radius: usize) -> Vec<f64> {
    let half = radius as f64 / 2.0;
    let dyadic: Vec<f64> = (3..).map(|k| f64::from(1u32 << k)).take_while(|&r| r <= half).collect();
    if dyadic.len() >= 2 {
        return dyadic;
    }
    let lo = (radius / 4).max(2);
    (lo..=radius / 2).map(|r| r as f64).collect()
}

/// Integer radii from 2 up to the largest one the boundary policy admits.
fn default_region_radii(radius: usize, ell: f64, policy: Policy) -> Vec<f64> {
    let reach = match policy {
        Policy::InnerHalf => radius as f64 / 2.0,
        Policy::Interior => radius as f64 - 1.0,
        Policy::ZeroExtended => radius as f64,
    };
    (2..).map(f64::from).take_while(|r| r * ell <= reach).collect()
}

/// Default probe shells are those of `EnsembleSpec::new` that fit in the inner half box.
fn ensemble_spec(s: &Settings) -> Result<EnsembleSpec> {
    let defaults = EnsembleSpec::new(s.dim(), s.radius(), s.delta(), s.realizations.unwrap_or(16), s.seed());
    let probe_shells = match &s.probe_shells {
        Some(shells) => shells.clone(),
        None => {
            let half = s.radius() as f64 / 2.0;
            let fit: Vec<f64> = defaults.probe_shells.iter().copied().filter(|&r| r + 1.0 <= half).collect();
            if fit.len() < 2 {
                bail!("fewer than two default probe shells fit in radius {}; pass --probe-shells", s.radius());
            }
            fit
        }
    };
    Ok(EnsembleSpec {
        dist: s.dist(),
        probe_shells,
        moments: s.moments.clone().unwrap_or(defaults.moments.clone()),
        tol: s.tol(),
        bootstrap: s.bootstrap.unwrap_or(defaults.bootstrap),
        spot_check_radius: s.spot_check_radius,
        ..defaults
    })
}

pub fn ensemble(s: &Settings, dir: &Path) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let spec = ensemble_spec(s)?;
    let stats = run_ensemble(&spec)?;
    out.seeds = stats.seeds();
    for r in &stats.samples {
        out.stage(format!("realization {}", r.index), r.residual, spec.tol, r.iterations);
    }
    out.write_file(dir, "ensemble.csv", |w| write_ensemble_csv(&stats, w))?;
    let pz = paley_zygmund_check(&stats)?;
    let q = estimate_effective_q(&stats).map_err(|e| e.to_string());
    let conc = concentration_check(&stats, 0.3)?;
    let sites: Vec<_> = stats
        .sites
        .iter()
        .map(|s| {
            json!({
                "x": s.site.x, "shell": s.site.shell, "mean_g": s.mean_g, "var_g": s.var_g,
                "exceedance": s.exceedance, "correction_g": s.correction_g, "correction_w": s.correction_w,
                "moments": s.moments,
            })
        })
        .collect();
    let body = json!({
        "spec": spec,
        "low_confidence": stats.low_confidence,
        "sites": sites,
        "fits": stats.fits,
        "paley_zygmund": pz,
        "effective_q": q,
        "concentration": conc,
        "spot_check": stats.spot_check,
        "empirical_r0": stats.empirical_r0,
    });
    out.write_file(dir, "ensemble.json", |w| write_json(&body, w))?;
    if stats.low_confidence {
        eprintln!("note: {} realizations, confidence intervals are low-confidence", spec.realizations);
    }
    Ok(out)
}

pub fn rellich(s: &Settings, dir: &Path) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let d = s.dim();
    let field = s.field_on(s.radius())?;
    out.seeds.extend(s.field_seed());
    let solver = s.solver();
    let g = solve_green(&field, &s.origin(), solver)?;
    out.stage("solve_green", g.residual(), solver.tol, g.iterations());
    let report_field = report_field(s, &field, &mut out)?;
    let rg = match &report_field {
        Some((f, values)) => GreenField::from_values(f, &s.origin(), values.clone(), g.residual())?,
        None => g.clone(),
    };
    let rw = hardy_weight(&rg)?;
    let alpha = s.alpha_rellich.unwrap_or(2.0 / (d as f64 - 2.0));
    let weights = rellich_weights(&rw, alpha)?;

    let half = s.radius() / 2;
    let mut shells = Vec::new();
    for r in 1..=half {
        let r = r as f64;
        let lhs = shell_mean(&weights.lhs, Some(&weights.support), r);
        let rhs = shell_mean(&weights.rhs, Some(&weights.support), r);
        if let (Some(lhs), Some(rhs)) = (lhs, rhs) {
            shells.push((r, lhs, rhs));
        }
    }
    out.write_file(dir, "rellich.csv", |wr| {
        let mut c = csv::Writer::from_writer(wr);
        c.write_record(["shell", "lhs_weight", "rhs_weight"])?;
        for (r, a, b) in &shells {
            c.write_record([format!("{r:?}"), format!("{a:?}"), format!("{b:?}")])?;
        }
        c.flush()?;
        Ok(())
    })?;
    let fit_range: Vec<&(f64, f64, f64)> =
        shells.iter().filter(|sh| sh.0 >= (s.radius() as f64 / 4.0).max(2.0)).collect();
    let fit = |col: fn(&(f64, f64, f64)) -> f64| -> Result<Option<_>> {
        if fit_range.len() < 2 {
            return Ok(None);
        }
        let x: Vec<f64> = fit_range.iter().map(|sh| sh.0).collect();
        let y: Vec<f64> = fit_range.iter().map(|sh| col(sh)).collect();
        Ok(Some(log_log_fit(&x, &y)?))
    };
    let lhs_fit = fit(|sh| sh.1)?;
    let rhs_fit = fit(|sh| sh.2)?;

    let check_alpha = if alpha > 0.0 && alpha < 1.0 { alpha } else { 0.5 };
    let params = rellich_params(field.lambda(), d, check_alpha)?;
    let w = hardy_weight(&g)?;
    let check_weights = rellich_weights(&w, check_alpha)?;
    let mut checks = Vec::new();
    for k in 0..RELLICH_TEST_FUNCTIONS {
        let phi = test_function(k, &check_weights.support, field.domain());
        for op in [RellichOperator::Free, RellichOperator::Elliptic] {
            let c = rellich_residual(&field, &check_weights, params.gamma, &phi, op)?;
            if c.residual < 0.0 {
                out.fail(format!("Rellich residual {:.3e} for test function {k} ({op:?})", c.residual));
            }
            checks.push(json!({"test_function": k, "operator": op, "check": c}));
        }
    }
    let body = json!({
        "alpha": alpha,
        "excluded_sites": weights.excluded,
        "lhs_weight_fit": lhs_fit,
        "rhs_weight_fit": rhs_fit,
        "inequality": {"params": params, "checks": checks},
    });
    out.write_file(dir, "rellich.json", |wr| write_json(&body, wr))?;
    Ok(out)
}

/// Seeded test functions supported in `support` at least two sites from the
/// boundary: Gaussian bumps, balls,
/// modulated bumps and random values.
fn test_function(k: usize, support: &[bool], domain: &BoxDomain) -> LatticeFunction {
    let mut rng = task_rng(0x7e57, k as u64);
    let reach = (domain.radius() as i64 / 2).max(1);
    let center: Vec<i64> = (0..domain.dim()).map(|_| rng.random_range(-reach..=reach)).collect();
    let width = 1.0 + rng.random::<f64>() * reach as f64;
    let inner = domain.radius() as i64 - 2;
    LatticeFunction::from_fn(domain.clone(), |x| {
        let i = domain.index_of(x).expect("box point");
        if !support[i] || x.iter().any(|c| c.abs() > inner) {
            return 0.0;
        }
        let d2: f64 = x.iter().zip(&center).map(|(a, b)| ((a - b) * (a - b)) as f64).sum();
        match k % 4 {
            0 => (-d2 / (2.0 * width * width)).exp(),
            1 => f64::from(u8::from(d2.sqrt() <= width)),
            2 => (x[0] as f64 * width).cos() * (-d2 / (4.0 * width * width)).exp(),
            _ if d2 <= 4.0 * width * width => task_rng(k as u64, i as u64).random::<f64>() - 0.5,
            _ => 0.0,
        }
    })
}

pub fn fourier(s: &Settings, dir: &Path) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    let d = s.dim();
    let kernel: CorrectionKernel<f64> = match s.kernel.as_deref() {
        None | Some("zero") => CorrectionKernel::zero(d),
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading kernel {path}"))?;
            serde_json::from_str(&text).with_context(|| format!("parsing kernel {path}"))?
        }
    };
    if kernel.dim != d {
        bail!("kernel dimension {} does not match --dim {d}", kernel.dim);
    }
    let t = build_t(&kernel)?;
    let mut body = serde_json::Map::new();
    body.insert("kernel".into(), json!(kernel));
    if s.probe_t.unwrap_or(false) {
        let total = t.total();
        let moment = t.first_moment();
        if (total - 1.0).abs() > 1e-12 {
            out.fail(format!("T sums to {total}"));
        }
        if moment.iter().any(|m| m.abs() > 1e-12) {
            out.fail(format!("T has first moment {moment:?}"));
        }
        let (min, negative) = t.positivity_probe(2);
        out.write_file(dir, "t_kernel.csv", |w| {
            let mut c = csv::Writer::from_writer(w);
            let mut header: Vec<String> = (1..=d).map(|j| format!("x_{j}")).collect();
            header.push("T".into());
            c.write_record(&header)?;
            for (x, v) in &t.values {
                let mut row: Vec<String> = x.iter().map(i64::to_string).collect();
                row.push(format!("{v:?}"));
                c.write_record(&row)?;
            }
            c.flush()?;
            Ok(())
        })?;
        body.insert(
            "t".into(),
            json!({"total": total, "first_moment": moment, "ball_min": min, "negative_sites": negative}),
        );
    }
    if let Some(n) = s.cs_grid {
        let report = t.cs_positivity(n, DEFAULT_CS_EXCLUSION);
        if !(report.min > 0.0) {
            out.fail(format!("c^2 + s^2 vanishes on the grid at {:?}", report.theta));
        }
        body.insert("cs_grid".into(), json!({"n": n, "exclusion": DEFAULT_CS_EXCLUSION, "report": report}));
    }
    if s.x.is_some() {
        let x = s.point()?;
        let model = AsymptoticModel::free(d)?;
        let gradients: Vec<_> = (0..d).map(|j| model.gradient_leading(&x, j, 1)).collect::<hardy_core::Result<_>>()?;
        body.insert(
            "asymptotics".into(),
            json!({"x": x, "model": model.spec(), "leading": model.leading_asymptotic(&x)?, "gradient_leading": gradients}),
        );
    }
    out.write_file(dir, "fourier.json", |w| write_json(&body, w))?;
    Ok(out)
}
