use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use fwrde::rde::{Method, OrderingSolver};
use fwrde::solvers::{SfwPreset, SolverConfig, SolverKind, StepRule};
use serde::Deserialize;

/// Settings shared by `attribute` and `bench-solvers`, loadable from a JSON file.
/// Relative paths in the file resolve against the file's directory.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<PathBuf>,
    pub image: Option<PathBuf>,
    pub noise: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub method: Option<Method>,
    pub rate: Option<usize>,
    pub rates: Option<Vec<usize>>,
    pub solver: Option<String>,
    pub preset: Option<SfwPreset>,
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
    pub gap_tol: Option<f64>,
    pub step_rule: Option<StepRule>,
    pub lazy_accuracy: Option<f64>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub samples: Option<usize>,
    pub grid_points: Option<usize>,
}

#[derive(Debug, Default, Clone, Args)]
pub struct RunFlags {
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Network JSON.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Input to explain: `.pgm` or CSV.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Noise model JSON (see `fit-noise`).
    #[arg(long)]
    pub noise: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// rc, mr, ord or sensitivity.
    #[arg(long)]
    pub method: Option<Method>,
    /// Rate k for rc.
    #[arg(long)]
    pub rate: Option<usize>,
    /// Comma-separated rate set for mr.
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<usize>>,
    /// fw, afw, lcg, lafw or sfw (sfw only for ord). Comma-separated for bench-solvers.
    #[arg(long)]
    pub solver: Option<String>,
    /// SFW preset letter A-F.
    #[arg(long)]
    pub preset: Option<SfwPreset>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub gap_tol: Option<f64>,
    /// Heatmap width (defaults to the input's shape).
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Noise samples per rate in the ordering test (default 512).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Points on the rate grid in the ordering test (default 64).
    #[arg(long)]
    pub grid_points: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.model, &mut cfg.image, &mut cfg.noise, &mut cfg.out]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Config file (if any) overlaid with the flags.
    pub fn resolve(flags: &RunFlags) -> Result<Self> {
        let file = match &flags.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        Ok(Self {
            model: flags.model.clone().or(file.model),
            image: flags.image.clone().or(file.image),
            noise: flags.noise.clone().or(file.noise),
            out: flags.out.clone().or(file.out),
            method: flags.method.or(file.method),
            rate: flags.rate.or(file.rate),
            rates: flags.rates.clone().or(file.rates),
            solver: flags.solver.clone().or(file.solver),
            preset: flags.preset.or(file.preset),
            seed: flags.seed.or(file.seed),
            max_iter: flags.max_iter.or(file.max_iter),
            gap_tol: flags.gap_tol.or(file.gap_tol),
            step_rule: file.step_rule,
            lazy_accuracy: file.lazy_accuracy,
            width: flags.width.or(file.width),
            height: flags.height.or(file.height),
            samples: flags.samples.or(file.samples),
            grid_points: flags.grid_points.or(file.grid_points),
        })
    }

    pub fn require<'a, T>(value: &'a Option<T>, name: &str) -> Result<&'a T> {
        match value {
            Some(v) => Ok(v),
            None => bail!("missing required setting '{name}'"),
        }
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let defaults = SolverConfig::default();
        let config = SolverConfig {
            max_iterations: self.max_iter.unwrap_or(defaults.max_iterations),
            gap_tolerance: self.gap_tol.unwrap_or(defaults.gap_tolerance),
            step_rule: self.step_rule.unwrap_or(defaults.step_rule),
            lazy_accuracy: self.lazy_accuracy.unwrap_or(defaults.lazy_accuracy),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Solver names, split on commas. Defaults to `fw`.
    pub fn solver_names(&self) -> Vec<String> {
        match &self.solver {
            Some(s) => s.split(',').map(|p| p.trim().to_ascii_lowercase()).collect(),
            None => vec!["fw".to_string()],
        }
    }

    pub fn ordering_solver(&self, name: &str) -> Result<OrderingSolver> {
        if name == "sfw" {
            let preset = self.preset.unwrap_or(SfwPreset::A);
            return Ok(OrderingSolver::Stochastic(preset.config(self.seed())));
        }
        Ok(OrderingSolver::Deterministic(name.parse()?))
    }

    pub fn deterministic_solver(name: &str) -> Result<SolverKind> {
        if name == "sfw" {
            bail!("sfw is only available for the ordering method");
        }
        Ok(name.parse()?)
    }
}
