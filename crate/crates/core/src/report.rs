//! CSV and JSON exports. Floats are written in shortest round-trip form, so
//! identical inputs give identical bytes.

use std::io::Write;

use serde::Serialize;

use crate::ensemble::EnsembleStats;
use crate::error::Result;
use crate::green::{AronsonReport, GreenField};
use crate::hardy::{HardyWeightField, RegionSpec, RegionSum};
use crate::lattice::norm;
use crate::stats::LineFit;

fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Columns `x_1..x_d, G, shell` over the whole box.
pub fn write_green_csv<W: Write>(green: &GreenField<'_>, out: W) -> Result<()> {
    let domain = green.domain();
    let d = domain.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=d).map(|j| format!("x_{j}")).collect();
    header.extend(["G".into(), "shell".into()]);
    w.write_record(&header)?;
    for (idx, x) in domain.points().enumerate() {
        let mut row: Vec<String> = x.iter().map(i64::to_string).collect();
        row.push(num(green.values().values()[idx]));
        row.push(num(norm(&x)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct GreenSidecar {
    pub dim: usize,
    pub radius: usize,
    pub pole: Vec<i64>,
    pub residual: f64,
    pub iterations: usize,
    pub seed: Option<u64>,
    pub tol: f64,
    pub max_iter: usize,
}

/// Columns `x_1..x_d, w, lower, upper, computed, shell`.
pub fn write_weight_csv<W: Write>(weight: &HardyWeightField<'_, '_>, out: W) -> Result<()> {
    let domain = weight.domain();
    let d = domain.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=d).map(|j| format!("x_{j}")).collect();
    header.extend(["w", "lower", "upper", "computed", "shell"].map(String::from));
    w.write_record(&header)?;
    for (idx, x) in domain.points().enumerate() {
        let mut row: Vec<String> = x.iter().map(i64::to_string).collect();
        row.push(num(weight.w().values()[idx]));
        row.push(num(weight.lower().values()[idx]));
        row.push(num(weight.upper().values()[idx]));
        row.push(u8::from(weight.is_computed(idx)).to_string());
        row.push(num(norm(&x)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aronson_csv<W: Write>(report: &AronsonReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["shell", "sites", "ratio_min", "ratio_max"])?;
    for s in &report.shells {
        w.write_record([num(s.radius), s.sites.to_string(), num(s.ratio_min), num(s.ratio_max)])?;
    }
    w.flush()?;
    Ok(())
}

/// One region of a region report.
#[derive(Debug, Clone, Serialize)]
pub struct RegionRow {
    pub region: RegionSpec,
    pub sum: RegionSum,
}

/// Columns `R, ell, kind, normalized_sum, count, missing`, then one row per fit.
pub fn write_region_csv<W: Write>(rows: &[RegionRow], fits: &[(&str, LineFit)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["R", "ell", "kind", "normalized_sum", "count", "missing", "slope", "slope_stderr"])?;
    for r in rows {
        w.write_record([
            num(r.region.inner()),
            num(r.region.ell()),
            r.region.kind().to_string(),
            num(r.sum.normalized_sum),
            r.sum.count.to_string(),
            r.sum.missing.to_string(),
            String::new(),
            String::new(),
        ])?;
    }
    for (name, fit) in fits {
        w.write_record([
            String::new(),
            String::new(),
            format!("fit:{name}"),
            String::new(),
            fit.points.to_string(),
            String::new(),
            num(fit.slope),
            num(fit.slope_stderr),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `site, shell, p, moment, CI_lo, CI_hi`; `site` is the probe point
/// joined with `;`. Exponent fits follow as rows with `site = fit:<quantity>`,
/// `moment = slope` and the interval `slope ± 2 stderr`.
pub fn write_ensemble_csv<W: Write>(stats: &EnsembleStats, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["site", "shell", "p", "moment", "CI_lo", "CI_hi"])?;
    for s in &stats.sites {
        let site = s.site.x.iter().map(i64::to_string).collect::<Vec<_>>().join(";");
        for m in &s.moments {
            w.write_record([site.clone(), num(s.site.shell), num(m.p), num(m.value), num(m.ci_lo), num(m.ci_hi)])?;
        }
        w.write_record([
            site.clone(),
            num(s.site.shell),
            "G".into(),
            num(s.mean_g),
            num(s.mean_g_ci.0),
            num(s.mean_g_ci.1),
        ])?;
    }
    for f in &stats.fits {
        let e = 2.0 * f.fit.slope_stderr;
        w.write_record([
            format!("fit:{}", f.quantity),
            String::new(),
            num(f.p),
            num(f.fit.slope),
            num(f.fit.slope - e),
            num(f.fit.slope + e),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(value: &T, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, value)?;
    Ok(())
}
