//! Run configuration: a TOML file whose every field can be overridden from
//! the command line.
//!
//! ```toml
//! [params]
//! x = 0.5
//! t = 0.45
//! mu = 2.0
//! genus = 2
//!
//! [seeds]
//! genus0 = [[0.8, 0.7]]
//! genus2 = [[1.0128, 0.1854], [-0.3502, 0.9123], [-1.0390, 0.4003]]
//!
//! [sweep]
//! param = "mu"
//! lo = 1.0
//! hi = 3.0
//! step = 0.01
//!
//! [tolerances]
//! newton = 1e-10
//!
//! [output]
//! dir = "out"
//! formats = ["csv", "json"]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::continuation::{Method, SweepParam};
use crate::error::{Result, RhpError};
use crate::fixtures;
use crate::modulation::seed_from_config;
use crate::params::{ProblemParams, Tolerances};
use crate::radical::BranchpointSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    Sweep,
    Compare,
    CheckSigns,
    DetectGenus,
    Selftest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub x: Option<f64>,
    pub t: Option<f64>,
    pub mu: Option<f64>,
    pub genus: Option<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedsSection {
    pub genus0: Option<Vec<[f64; 2]>>,
    pub genus2: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub param: SweepParam,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub step: f64,
    pub method: Option<Method>,
    /// Newton polish of the ODE path every `k` steps; 0 disables it.
    pub polish_every: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { param: SweepParam::Mu, lo: None, hi: None, step: 1e-2, method: None, polish_every: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// File stem of the artifacts; defaults to the command name.
    pub name: Option<String>,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: None, name: None, formats: vec![Format::Csv, Format::Json] }
    }
}

/// Configuration as read from file, before flag overrides and validation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Name of a built-in fixture (`pre-break`, `post-break`) supplying
    /// parameters and seeds not given explicitly.
    pub fixture: Option<String>,
    pub params: ParamsSection,
    pub seeds: SeedsSection,
    pub sweep: SweepSection,
    pub tolerances: Tolerances,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| RhpError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RhpError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| RhpError::Config(e.to_string()))
    }

    /// Resolves fixtures and defaults into a validated [`Run`].
    pub fn resolve(&self, command: Command) -> Result<Run> {
        let fx = match self.fixture.as_deref() {
            None => None,
            Some("pre-break") => Some(fixtures::pre_break()),
            Some("post-break") => Some(fixtures::post_break()),
            Some(other) => {
                return Err(RhpError::Config(format!("unknown fixture `{other}` (expected pre-break or post-break)")))
            }
        };
        let pick = |v: Option<f64>, from_fx: fn(&ProblemParams) -> f64, name: &str| -> Result<f64> {
            v.or(fx.as_ref().map(|f| from_fx(&f.params)))
                .ok_or_else(|| RhpError::Config(format!("missing parameter `{name}` (give it or choose a fixture)")))
        };
        let x = pick(self.params.x, |p| p.x, "x")?;
        let t = pick(self.params.t, |p| p.t, "t")?;
        let mu = pick(self.params.mu, |p| p.mu, "mu")?;
        let genus = self.params.genus.or(fx.as_ref().map(|f| f.params.genus)).unwrap_or(0);
        let params = ProblemParams::new(x, t, mu, genus).map_err(|e| RhpError::Config(e.to_string()))?;

        let mut seeds = BTreeMap::new();
        for (g, given) in [(0u32, &self.seeds.genus0), (2u32, &self.seeds.genus2)] {
            if let Some(s) = given {
                seeds.insert(g, seed_from_config(g, s).map_err(|e| RhpError::Config(format!("genus-{g} seeds: {e}")))?);
            }
        }
        if let Some(f) = &fx {
            seeds.entry(f.params.genus).or_insert_with(|| f.seed.clone());
            if f.params.genus == 2 {
                seeds.entry(0).or_insert_with(fixtures::post_break_genus_zero_seed);
            }
        }
        let needs_seed = !matches!(command, Command::Selftest);
        if needs_seed && command != Command::DetectGenus && !seeds.contains_key(&genus) {
            return Err(RhpError::Config(format!("no seeds for genus {genus}")));
        }
        if command == Command::DetectGenus && seeds.is_empty() {
            return Err(RhpError::Config("detect-genus needs seeds for at least one genus".into()));
        }

        let s = &self.sweep;
        let here = s.param.value(&params);
        let (lo, hi) = (s.lo.unwrap_or(here), s.hi.unwrap_or(here));
        if matches!(command, Command::Sweep | Command::Compare) {
            if !(lo < hi) {
                return Err(RhpError::Config(format!("sweep needs lo < hi, got [{lo}, {hi}]")));
            }
            if !(s.step > 0.0) || !s.step.is_finite() {
                return Err(RhpError::Config(format!("sweep step must be positive, got {}", s.step)));
            }
        }
        let method = match command {
            Command::Compare => Method::Both,
            _ => s.method.unwrap_or(Method::Ode),
        };

        let t = &self.tolerances;
        if !(t.newton > 0.0 && t.quad > 0.0 && t.degeneracy > 0.0 && t.realness > 0.0) {
            return Err(RhpError::Config("tolerances must be positive".into()));
        }
        if let Some(dir) = &self.output.dir {
            writable_dir(dir)?;
        }
        Ok(Run {
            command,
            params,
            seeds,
            param: s.param,
            lo,
            hi,
            step: s.step,
            method,
            polish_every: (s.polish_every > 0).then_some(s.polish_every),
            tolerances: *t,
            out_dir: self.output.dir.clone(),
            name: self.output.name.clone().unwrap_or_else(|| command_name(command).to_string()),
            formats: self.output.formats.clone(),
        })
    }
}

fn writable_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| RhpError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let meta = std::fs::metadata(dir).map_err(|e| RhpError::Config(format!("{}: {e}", dir.display())))?;
    if meta.permissions().readonly() {
        return Err(RhpError::Config(format!("output directory {} is read-only", dir.display())));
    }
    Ok(())
}

pub fn command_name(c: Command) -> &'static str {
    match c {
        Command::Solve => "solve",
        Command::Sweep => "sweep",
        Command::Compare => "compare",
        Command::CheckSigns => "check-signs",
        Command::DetectGenus => "detect-genus",
        Command::Selftest => "selftest",
    }
}

/// Fully resolved run.
#[derive(Clone, Debug)]
pub struct Run {
    pub command: Command,
    pub params: ProblemParams,
    pub seeds: BTreeMap<u32, BranchpointSet>,
    pub param: SweepParam,
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub method: Method,
    pub polish_every: Option<usize>,
    pub tolerances: Tolerances,
    pub out_dir: Option<PathBuf>,
    pub name: String,
    pub formats: Vec<Format>,
}

impl Run {
    pub fn seed(&self) -> Result<&BranchpointSet> {
        self.seeds
            .get(&self.params.genus)
            .ok_or_else(|| RhpError::Config(format!("no seeds for genus {}", self.params.genus)))
    }
}
