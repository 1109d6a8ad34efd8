//! Experiment configuration: a flat TOML schema with one section per
//! subcommand. Every key has a default, so an empty file is a valid config.

use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Identity,
    Perturbed,
    /// Perturbs only the t-t block; violates the structural hypothesis.
    TBlockViolating,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Ones,
    Identity,
    /// Symmetric with entries uniform in [-1, 1], drawn from `shape_seed`.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialChoice {
    /// The potential attached to the manufactured solution.
    Exact,
    None,
    /// `(rho^2 - potential_shift) psi`.
    AngleQuadratic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Manufactured,
    /// Finite-difference solve with boundary data from the manufactured solution.
    Fd,
    /// A grid file written by `solve`.
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Geometric,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Table,
    Json,
    Csv,
}

/// A number, or the string `sqrtK`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaChoice {
    SqrtK,
    Value(f64),
}

/// A number, or the string `certified`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KChoice {
    Certified,
    Value(f64),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrWord {
    Number(f64),
    Word(String),
}

impl AlphaChoice {
    pub fn parse(s: &str) -> CliResult<Self> {
        if s.eq_ignore_ascii_case("sqrtk") {
            return Ok(AlphaChoice::SqrtK);
        }
        s.parse()
            .map(AlphaChoice::Value)
            .map_err(|_| CliError::config("alpha", format!("expected a number or `sqrtK`, got `{s}`")))
    }
}

impl KChoice {
    pub fn parse(s: &str) -> CliResult<Self> {
        if s.eq_ignore_ascii_case("certified") {
            return Ok(KChoice::Certified);
        }
        s.parse()
            .map(KChoice::Value)
            .map_err(|_| CliError::config("k_bound", format!("expected a number or `certified`, got `{s}`")))
    }
}

impl<'de> Deserialize<'de> for AlphaChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match NumberOrWord::deserialize(d)? {
            NumberOrWord::Number(v) => Ok(AlphaChoice::Value(v)),
            NumberOrWord::Word(w) => AlphaChoice::parse(&w).map_err(serde::de::Error::custom),
        }
    }
}

impl Serialize for AlphaChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            AlphaChoice::SqrtK => s.serialize_str("sqrtK"),
            AlphaChoice::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for KChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match NumberOrWord::deserialize(d)? {
            NumberOrWord::Number(v) => Ok(KChoice::Value(v)),
            NumberOrWord::Word(w) => KChoice::parse(&w).map_err(serde::de::Error::custom),
        }
    }
}

impl Serialize for KChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            KChoice::Certified => s.serialize_str("certified"),
            KChoice::Value(v) => s.serialize_f64(*v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub samples: usize,
    /// Base sample count of the fitted estimates (refined to 4n and 16n).
    pub estimate_samples: usize,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection {
            samples: 10_000,
            estimate_samples: 625,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HypothesisSection {
    pub samples: usize,
    pub budget: f64,
    pub radius: f64,
}

impl Default for HypothesisSection {
    fn default() -> Self {
        HypothesisSection {
            samples: 625,
            budget: 1.0,
            radius: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSection {
    pub samples: usize,
}

impl Default for PotentialSection {
    fn default() -> Self {
        PotentialSection { samples: 625 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualSection {
    pub points: usize,
    pub step: f64,
    pub tolerance: f64,
}

impl Default for ResidualSection {
    fn default() -> Self {
        ResidualSection {
            points: 1000,
            step: 1e-3,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    /// Nodes per axis of each grid in the convergence study; the last one is
    /// used when `source = "fd"`.
    pub nodes: Vec<usize>,
    pub z_half: f64,
    pub t_half: f64,
    /// Radii at which grid and manufactured frequencies are compared.
    pub compare_radii: Vec<f64>,
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection {
            nodes: vec![17, 33, 65],
            z_half: 1.0,
            t_half: 0.5,
            compare_radii: vec![0.3, 0.5],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThreeBallSection {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub cbar: f64,
}

impl Default for ThreeBallSection {
    fn default() -> Self {
        ThreeBallSection {
            r1: 0.1,
            r2: 0.2,
            r3: 0.9,
            cbar: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VanishingSection {
    pub count: usize,
    pub samples: usize,
}

impl Default for VanishingSection {
    fn default() -> Self {
        VanishingSection {
            count: 13,
            samples: 4096,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub m: usize,
    pub k: usize,
    pub beta: f64,

    pub family: Family,
    pub eps: f64,
    pub shape: Shape,
    pub shape_seed: u64,

    pub potential: PotentialChoice,
    pub potential_shift: f64,

    pub solution: String,
    pub source: Source,
    pub grid_file: Option<PathBuf>,

    pub alpha: AlphaChoice,
    pub k_bound: KChoice,
    /// Explicit radii; when empty the grid below is used.
    pub radii: Vec<f64>,
    pub radii_lo: f64,
    pub radii_hi: f64,
    pub radii_count: usize,
    pub radii_spacing: Spacing,
    pub working_radius: f64,

    pub points: usize,
    pub replicates: usize,
    pub sup_samples: usize,

    pub out: Option<PathBuf>,
    pub format: Format,

    pub geometry: GeometrySection,
    pub hypothesis: HypothesisSection,
    #[serde(rename = "potential-check")]
    pub potential_check: PotentialSection,
    pub residual: ResidualSection,
    pub solve: SolveSection,
    pub threeball: ThreeBallSection,
    pub vanishing: VanishingSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            m: 2,
            k: 1,
            beta: 1.0,
            family: Family::Identity,
            eps: 0.05,
            shape: Shape::Ones,
            shape_seed: 1,
            potential: PotentialChoice::Exact,
            potential_shift: 4.0,
            solution: "gaussian_modulated:coordinate_z".into(),
            source: Source::Manufactured,
            grid_file: None,
            alpha: AlphaChoice::SqrtK,
            k_bound: KChoice::Certified,
            radii: Vec::new(),
            radii_lo: 0.1,
            radii_hi: 0.9,
            radii_count: 30,
            radii_spacing: Spacing::Geometric,
            working_radius: 1.0,
            points: grushin_core::quadrature::DEFAULT_POINTS,
            replicates: grushin_core::quadrature::DEFAULT_REPLICATES,
            sup_samples: grushin_core::frequency::DEFAULT_SUP_SAMPLES,
            out: None,
            format: Format::Table,
            geometry: GeometrySection::default(),
            hypothesis: HypothesisSection::default(),
            potential_check: PotentialSection::default(),
            residual: ResidualSection::default(),
            solve: SolveSection::default(),
            threeball: ThreeBallSection::default(),
            vanishing: VanishingSection::default(),
        }
    }
}

fn require(ok: bool, field: &str, msg: impl FnOnce() -> String) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(field, msg()))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Schema(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable in TOML")
    }

    /// Checks every field that serde cannot; messages name the offending key.
    pub fn validate(&self) -> CliResult<()> {
        require(self.m >= 1, "m", || format!("must be at least 1, got {}", self.m))?;
        require(self.beta > 0.0 && self.beta.is_finite(), "beta", || {
            format!("must be positive, got {}", self.beta)
        })?;
        require(self.eps.is_finite(), "eps", || format!("must be finite, got {}", self.eps))?;
        require(self.potential_shift.is_finite(), "potential_shift", || "must be finite".into())?;
        if let AlphaChoice::Value(a) = self.alpha {
            require(a >= 0.0 && a.is_finite(), "alpha", || format!("must be >= 0, got {a}"))?;
        }
        if let KChoice::Value(k) = self.k_bound {
            require(k >= 1.0 && k.is_finite(), "k_bound", || format!("must be >= 1, got {k}"))?;
        }
        require(
            self.working_radius > 0.0 && self.working_radius <= 1.0,
            "working_radius",
            || format!("must lie in (0, 1], got {}", self.working_radius),
        )?;
        if self.radii.is_empty() {
            require(
                self.radii_lo > 0.0 && self.radii_hi > self.radii_lo,
                "radii_lo",
                || format!("need 0 < radii_lo < radii_hi, got {} and {}", self.radii_lo, self.radii_hi),
            )?;
            require(self.radii_hi <= self.working_radius, "radii_hi", || {
                format!("{} exceeds working_radius {}", self.radii_hi, self.working_radius)
            })?;
            require(self.radii_count >= 2, "radii_count", || {
                format!("need at least 2 radii, got {}", self.radii_count)
            })?;
        } else {
            require(self.radii.windows(2).all(|w| w[1] > w[0]), "radii", || {
                "must be strictly increasing".into()
            })?;
            require(
                self.radii[0] > 0.0 && self.radii[self.radii.len() - 1] <= self.working_radius,
                "radii",
                || format!("must lie in (0, working_radius = {}]", self.working_radius),
            )?;
        }
        require(self.points >= 64, "points", || format!("need at least 64, got {}", self.points))?;
        require(self.replicates >= 2, "replicates", || {
            format!("need at least 2, got {}", self.replicates)
        })?;
        require(self.sup_samples >= 1, "sup_samples", || "must be positive".into())?;
        if self.source == Source::Grid {
            require(self.grid_file.is_some(), "grid_file", || "required when source = \"grid\"".into())?;
        }
        require(self.geometry.samples >= 1, "geometry.samples", || "must be positive".into())?;
        require(self.geometry.estimate_samples >= 1, "geometry.estimate_samples", || {
            "must be positive".into()
        })?;
        require(self.hypothesis.samples >= 1, "hypothesis.samples", || "must be positive".into())?;
        require(self.hypothesis.budget > 0.0, "hypothesis.budget", || "must be positive".into())?;
        require(
            self.hypothesis.radius > 0.0 && self.hypothesis.radius <= 1.0,
            "hypothesis.radius",
            || "must lie in (0, 1]".into(),
        )?;
        require(self.potential_check.samples >= 1, "potential-check.samples", || {
            "must be positive".into()
        })?;
        require(self.residual.points >= 1, "residual.points", || "must be positive".into())?;
        require(self.residual.step > 0.0 && self.residual.step < 0.1, "residual.step", || {
            format!("must lie in (0, 0.1), got {}", self.residual.step)
        })?;
        require(!self.solve.nodes.is_empty(), "solve.nodes", || "must not be empty".into())?;
        require(self.solve.nodes.iter().all(|&n| n >= 3), "solve.nodes", || {
            "every grid needs at least 3 nodes per axis".into()
        })?;
        require(self.solve.nodes.windows(2).all(|w| w[1] > w[0]), "solve.nodes", || {
            "must be strictly increasing".into()
        })?;
        require(self.solve.z_half > 0.0 && self.solve.t_half > 0.0, "solve.z_half", || {
            "box half-widths must be positive".into()
        })?;
        require(self.vanishing.count >= 3, "vanishing.count", || "need at least 3 radii".into())?;
        require(self.vanishing.samples >= 1, "vanishing.samples", || "must be positive".into())?;
        Ok(())
    }

    /// The radii of the frequency profile.
    pub fn profile_radii(&self) -> CliResult<Vec<f64>> {
        if !self.radii.is_empty() {
            return Ok(self.radii.clone());
        }
        match self.radii_spacing {
            Spacing::Geometric => Ok(grushin_core::frequency::geometric_radii(
                self.radii_lo,
                self.radii_hi,
                self.radii_count,
            )?),
            Spacing::Linear => {
                let n = self.radii_count;
                let step = (self.radii_hi - self.radii_lo) / (n - 1) as f64;
                Ok((0..n)
                    .map(|i| if i == n - 1 { self.radii_hi } else { self.radii_lo + step * i as f64 })
                    .collect())
            }
        }
    }
}
