//! Run configuration: flags plus an optional JSON file, flags winning.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use gflow_core::flows::System;
use gflow_core::gauge::Mu;
use gflow_core::grid::{Boundary, Grid2D, StencilOrder};

/// How the initial state is built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitSpec {
    /// Degree-n self-dual soliton data.
    Soliton { n: u32 },
    /// Smooth bump map pushed through the map/gauge dictionary.
    Bump { amp: f64 },
    /// The N = 1 self-dual Chern-Simons vortex.
    JackiwPi,
    /// Load a snapshot file.
    File { path: PathBuf },
}

impl InitSpec {
    pub fn parse(s: &str) -> Result<Self> {

        if s == "jackiw_pi" {
            return Ok(InitSpec::JackiwPi);
        }
        if let Some(rest) = s.strip_prefix("soliton:") {
            let n = rest
                .strip_prefix("n=")
                .ok_or_else(|| anyhow!("expected soliton:n=<int>, got `{s}`"))?
                .parse()
                .context("soliton degree")?;
            return Ok(InitSpec::Soliton { n });
        }
        if let Some(rest) = s.strip_prefix("bump:") {
            let amp = rest
                .strip_prefix("amp=")
                .ok_or_else(|| anyhow!("expected bump:amp=<float>, got `{s}`"))?
                .parse()
                .context("bump amplitude")?;
            return Ok(InitSpec::Bump { amp });
        }
        if let Some(rest) = s.strip_prefix("file:") {
            return Ok(InitSpec::File { path: rest.into() });
        }
        bail!("unknown init spec `{s}` (want soliton:n=…, bump:amp=…, jackiw_pi, or file:…)")
    }

    #[cfg(test)]
    pub fn describe(&self) -> String {
        match self {
            InitSpec::Soliton { n } => format!("soliton:n={n}"),
            InitSpec::Bump { amp } => format!("bump:amp={amp}"),
            InitSpec::JackiwPi => "jackiw_pi".into(),
            InitSpec::File { path } => format!("file:{}", path.display()),
        }
    }
}

/// Which gauge the evolution output is reported in.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GaugeChoice {
    Temporal,
    CoulombReproject,
}

impl GaugeChoice {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "temporal" => Ok(GaugeChoice::Temporal),
            "coulomb_reproject" => Ok(GaugeChoice::CoulombReproject),
            other => bail!("unknown gauge `{other}` (want temporal or coulomb_reproject)"),
        }
    }
}

/// Fully resolved run parameters; serialized as `config.echo.json` next to
/// the outputs for provenance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub system: String,
    pub half_width: f64,
    pub n: usize,
    pub boundary: String,
    pub mu: i8,
    pub dt: f64,
    pub t_final: f64,
    pub diag_every: usize,
    pub order: u8,
    pub init: String,
    pub gauge: String,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub snap_every: usize,
}

impl RunConfig {
    pub fn system(&self) -> Result<System> {
        Ok(self.system.parse::<System>()?)
    }

    pub fn grid(&self) -> Result<Grid2D> {
        let boundary: Boundary = self.boundary.parse()?;
        Ok(Grid2D::new(self.half_width, self.n, boundary)?)
    }

    pub fn mu(&self) -> Result<Mu> {
        Ok(Mu::from_sign(self.mu)?)
    }

    pub fn order(&self) -> Result<StencilOrder> {
        Ok(self.order.to_string().parse()?)
    }

    pub fn init(&self) -> Result<InitSpec> {
        InitSpec::parse(&self.init)
    }

    pub fn gauge(&self) -> Result<GaugeChoice> {
        GaugeChoice::parse(&self.gauge)
    }

    pub fn echo_to(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join("config.echo.json"), text)?;
        Ok(())
    }
}

/// JSON-file config: every field optional; flags override.
#[derive(Default, Deserialize)]
pub struct FileConfig {
    pub system: Option<String>,
    pub half_width: Option<f64>,
    pub n: Option<usize>,
    pub boundary: Option<String>,
    pub mu: Option<i8>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub diag_every: Option<usize>,
    pub order: Option<u8>,
    pub init: Option<String>,
    pub gauge: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub snap_every: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Ok(serde_json::from_str(&text).context("parsing config json")?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_specs_round_trip() {
        for s in ["soliton:n=2", "bump:amp=0.5", "jackiw_pi", "file:x/y.gf"] {
            let spec = InitSpec::parse(s).unwrap();
            assert_eq!(spec.describe(), s);
        }
        assert!(InitSpec::parse("soliton:2").is_err());
        assert!(InitSpec::parse("wave").is_err());
    }
}
