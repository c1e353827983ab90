//! Run settings shared by all subcommands. A `--config` JSON file supplies the
//! same keys as the flags; flags given on the command line win.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use hardy_core::lattice::{BoxDomain, CoefficientField, Distribution};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Free,
    Constant,
    Iid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    Annuli,
    Sectors,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Oracle {
    Bessel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    InnerHalf,
    Interior,
    ZeroExtended,
}

impl From<Policy> for hardy_core::hardy::BoundaryPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::InnerHalf => Self::InnerHalf,
            Policy::Interior => Self::Interior,
            Policy::ZeroExtended => Self::ZeroExtended,
        }
    }
}

fn parse_dist(s: &str) -> Result<Distribution, String> {
    s.parse().map_err(|e: hardy_core::Error| e.to_string())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// JSON file with any of the settings below (snake_case keys).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[arg(long)]
    pub dim: Option<usize>,
    /// Half side of the box `{|x_i| <= R}`.
    #[arg(long)]
    pub radius: Option<usize>,
    #[arg(long, value_enum)]
    pub field: Option<FieldKind>,
    /// Conductance of the constant field.
    #[arg(long)]
    pub value: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_parser = parse_dist)]
    pub dist: Option<Distribution>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub realizations: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,

    #[arg(long, value_enum)]
    pub report: Option<ReportKind>,
    #[arg(long)]
    pub ell: Option<f64>,
    #[arg(long)]
    pub alpha_sector: Option<f64>,
    /// Sector axis, 1-based.
    #[arg(long)]
    pub direction: Option<usize>,
    /// Inner radii of the reported regions.
    #[arg(long, value_delimiter = ',')]
    pub region_radii: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub policy: Option<Policy>,
    #[arg(long, alias = "alpha")]
    pub alpha_rellich: Option<f64>,

    #[arg(long, value_delimiter = ',')]
    pub probe_shells: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub moments: Option<Vec<f64>>,
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Radius of the two-radius truncation spot check.
    #[arg(long)]
    pub spot_check_radius: Option<usize>,

    #[arg(long, value_enum)]
    pub oracle: Option<Oracle>,
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub x: Option<Vec<i64>>,
    /// Box radii for truncation extrapolation of `G`.
    #[arg(long, value_delimiter = ',')]
    pub extrapolate: Option<Vec<usize>>,
    /// Use the box Green's function for weights and reports, without extrapolation.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub raw_green: Option<bool>,

    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub certify: Option<bool>,
    #[arg(long)]
    pub weight_scale: Option<f64>,

    /// `zero` or a JSON file holding a correction kernel.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub probe_t: Option<bool>,
    #[arg(long)]
    pub cs_grid: Option<usize>,

    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )*
    };
}

impl Settings {
    /// Fills unset flags from the `--config` file, if any.
    pub fn resolve(mut self) -> Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = load(&path)?;
        merge_fields!(self, file;
            dim, radius, field, value, delta, dist, seed, realizations, tol, max_iter,
            report, ell, alpha_sector, direction, region_radii, policy, alpha_rellich,
            probe_shells, moments, bootstrap, spot_check_radius, oracle, x, extrapolate, raw_green,
            certify, weight_scale, kernel, probe_t, cs_grid, threads, output_dir,
        );
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim.unwrap_or(3)
    }

    pub fn radius(&self) -> usize {
        self.radius.unwrap_or(16)
    }

    pub fn field_kind(&self) -> FieldKind {
        self.field.unwrap_or(FieldKind::Free)
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(0.2)
    }

    pub fn dist(&self) -> Distribution {
        self.dist.unwrap_or(Distribution::Rademacher)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(1e-10)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn origin(&self) -> Vec<i64> {
        vec![0; self.dim()]
    }

    /// `--x`, checked against the dimension; defaults to the origin.
    pub fn point(&self) -> Result<Vec<i64>> {
        match &self.x {
            Some(x) if x.len() != self.dim() => bail!("--x has {} coordinates but --dim is {}", x.len(), self.dim()),
            Some(x) => Ok(x.clone()),
            None => Ok(self.origin()),
        }
    }

    pub fn solver(&self) -> hardy_core::green::SolverOptions {
        hardy_core::green::SolverOptions { tol: self.tol(), max_iter: self.max_iter }
    }

    pub fn field_on(&self, radius: usize) -> Result<CoefficientField> {
        let domain = BoxDomain::new(self.dim(), radius)?;
        Ok(match self.field_kind() {
            FieldKind::Free => CoefficientField::free(domain),
            FieldKind::Constant => CoefficientField::constant(domain, self.value.unwrap_or(1.0), None)?,
            FieldKind::Iid => CoefficientField::iid(domain, self.delta(), self.dist(), self.seed())?,
        })
    }

    /// Radii for extrapolated reports: `--extrapolate`, or `R, 5R/4, 3R/2`.
    pub fn extrapolation_radii(&self) -> Vec<usize> {
        let r = self.radius();
        self.extrapolate.clone().unwrap_or_else(|| vec![r, r + r / 4, r + r / 2])
    }

    pub fn field_seed(&self) -> Option<u64> {
        (self.field_kind() == FieldKind::Iid).then(|| self.seed())
    }
}

fn load(path: &Path) -> Result<Settings> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text)
        .map_err(|e| anyhow::anyhow!("config {}: line {} column {}: {e}", path.display(), e.line(), e.column()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"dim": 4, "radius": 9, "delta": 0.3}"#).unwrap();
        let s = Settings { config: Some(path), radius: Some(5), ..Default::default() }.resolve().unwrap();
        assert_eq!((s.dim(), s.radius(), s.delta()), (4, 5, 0.3));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, "{\n  \"dim\": 3,\n  \"radios\": 9\n}").unwrap();
        let err = Settings { config: Some(path), ..Default::default() }.resolve().unwrap_err().to_string();
        assert!(err.contains("radios") && err.contains("line 3"), "{err}");
    }
}
