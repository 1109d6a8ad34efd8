//! Command-line flags. Every flag overrides the matching config key.

use std::path::PathBuf;

use clap::Parser;

use crate::config::{AlphaChoice, ExperimentConfig, Family, Format, KChoice, PotentialChoice, Shape, Source, Spacing};
use crate::error::CliResult;
use crate::run::Subcommand;

#[derive(Debug, Parser)]
#[command(name = "grushin", version, about = "Frequency diagnostics for Grushin-type operators")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Subcommand,

    /// TOML configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub overrides: Overrides,
}

fn parse_alpha(s: &str) -> Result<AlphaChoice, String> {
    AlphaChoice::parse(s).map_err(|e| e.to_string())
}

fn parse_k(s: &str) -> Result<KChoice, String> {
    KChoice::parse(s).map_err(|e| e.to_string())
}

fn value_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown value `{s}`"))
}

#[derive(Debug, Default, clap::Args)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,

    /// identity | perturbed | t-block-violating
    #[arg(long, value_parser = value_enum::<Family>)]
    pub family: Option<Family>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    /// ones | identity | random
    #[arg(long, value_parser = value_enum::<Shape>)]
    pub shape: Option<Shape>,
    #[arg(long)]
    pub shape_seed: Option<u64>,

    /// exact | none | angle-quadratic
    #[arg(long, value_parser = value_enum::<PotentialChoice>)]
    pub potential: Option<PotentialChoice>,
    #[arg(long, allow_hyphen_values = true)]
    pub potential_shift: Option<f64>,

    /// Manufactured solution, e.g. `gaussian_modulated:t1`.
    #[arg(long)]
    pub solution: Option<String>,
    /// manufactured | fd | grid
    #[arg(long, value_parser = value_enum::<Source>)]
    pub source: Option<Source>,
    #[arg(long)]
    pub grid_file: Option<PathBuf>,

    /// A number or `sqrtK`.
    #[arg(long, value_parser = parse_alpha)]
    pub alpha: Option<AlphaChoice>,
    /// A number or `certified`.
    #[arg(long, value_parser = parse_k)]
    pub k_bound: Option<KChoice>,
    /// Comma-separated radii; replaces the radius grid.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    #[arg(long)]
    pub radii_lo: Option<f64>,
    #[arg(long)]
    pub radii_hi: Option<f64>,
    #[arg(long)]
    pub radii_count: Option<usize>,
    /// geometric | linear
    #[arg(long, value_parser = value_enum::<Spacing>)]
    pub radii_spacing: Option<Spacing>,
    #[arg(long)]
    pub working_radius: Option<f64>,

    /// Quadrature points per replicate.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub sup_samples: Option<usize>,

    /// Directory for report.json, profile.csv and grid.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// table | json | csv
    #[arg(long, value_parser = value_enum::<Format>)]
    pub format: Option<Format>,

    #[arg(long)]
    pub geometry_samples: Option<usize>,
    #[arg(long)]
    pub hypothesis_samples: Option<usize>,
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long)]
    pub potential_samples: Option<usize>,
    #[arg(long)]
    pub residual_points: Option<usize>,
    #[arg(long)]
    pub residual_step: Option<f64>,
    /// Comma-separated nodes per axis for the solver study.
    #[arg(long, value_delimiter = ',')]
    pub nodes: Option<Vec<usize>>,
    #[arg(long)]
    pub r1: Option<f64>,
    #[arg(long)]
    pub r2: Option<f64>,
    #[arg(long)]
    pub r3: Option<f64>,
    #[arg(long)]
    pub cbar: Option<f64>,
    #[arg(long)]
    pub vanishing_count: Option<usize>,
    #[arg(long)]
    pub vanishing_samples: Option<usize>,
}

macro_rules! set {
    ($src:expr => $dst:expr) => {
        if let Some(v) = $src.clone() {
            $dst = v;
        }
    };
}

impl Overrides {
    pub fn apply(&self, c: &mut ExperimentConfig) {
        set!(self.seed => c.seed);
        set!(self.m => c.m);
        set!(self.k => c.k);
        set!(self.beta => c.beta);
        set!(self.family => c.family);
        set!(self.eps => c.eps);
        set!(self.shape => c.shape);
        set!(self.shape_seed => c.shape_seed);
        set!(self.potential => c.potential);
        set!(self.potential_shift => c.potential_shift);
        set!(self.solution => c.solution);
        set!(self.source => c.source);
        if self.grid_file.is_some() {
            c.grid_file = self.grid_file.clone();
        }
        set!(self.alpha => c.alpha);
        set!(self.k_bound => c.k_bound);
        set!(self.radii => c.radii);
        set!(self.radii_lo => c.radii_lo);
        set!(self.radii_hi => c.radii_hi);
        set!(self.radii_count => c.radii_count);
        set!(self.radii_spacing => c.radii_spacing);
        set!(self.working_radius => c.working_radius);
        set!(self.points => c.points);
        set!(self.replicates => c.replicates);
        set!(self.sup_samples => c.sup_samples);
        if self.out.is_some() {
            c.out = self.out.clone();
        }
        set!(self.format => c.format);
        set!(self.geometry_samples => c.geometry.samples);
        set!(self.hypothesis_samples => c.hypothesis.samples);
        set!(self.budget => c.hypothesis.budget);
        set!(self.potential_samples => c.potential_check.samples);
        set!(self.residual_points => c.residual.points);
        set!(self.residual_step => c.residual.step);
        set!(self.nodes => c.solve.nodes);
        set!(self.r1 => c.threeball.r1);
        set!(self.r2 => c.threeball.r2);
        set!(self.r3 => c.threeball.r3);
        set!(self.cbar => c.threeball.cbar);
        set!(self.vanishing_count => c.vanishing.count);
        set!(self.vanishing_samples => c.vanishing.samples);
    }
}

impl Cli {
    /// The config file (or defaults) with the flags applied.
    pub fn config(&self) -> CliResult<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        self.overrides.apply(&mut c);
        Ok(c)
    }
}
