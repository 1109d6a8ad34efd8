use std::fmt;
use std::str::FromStr;

use crate::config::{ExperimentConfig, Format};
use crate::error::{CliError, CliResult};
use crate::experiment::Experiment;
use crate::report::{write_artifacts, Report, SuiteOutput};
use crate::suites;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    GeometryCheck,
    HypothesisCheck,
    PotentialCheck,
    ResidualCheck,
    Solve,
    Frequency,
    Monotonicity,
    Threeball,
    VanishingOrder,
    All,
}

impl Subcommand {
    pub const ALL: [Subcommand; 10] = [
        Subcommand::GeometryCheck,
        Subcommand::HypothesisCheck,
        Subcommand::PotentialCheck,
        Subcommand::ResidualCheck,
        Subcommand::Solve,
        Subcommand::Frequency,
        Subcommand::Monotonicity,
        Subcommand::Threeball,
        Subcommand::VanishingOrder,
        Subcommand::All,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::GeometryCheck => "geometry-check",
            Subcommand::HypothesisCheck => "hypothesis-check",
            Subcommand::PotentialCheck => "potential-check",
            Subcommand::ResidualCheck => "residual-check",
            Subcommand::Solve => "solve",
            Subcommand::Frequency => "frequency",
            Subcommand::Monotonicity => "monotonicity",
            Subcommand::Threeball => "threeball",
            Subcommand::VanishingOrder => "vanishing-order",
            Subcommand::All => "all",
        }
    }

    pub fn execute(&self, exp: &Experiment) -> CliResult<SuiteOutput> {
        match self {
            Subcommand::GeometryCheck => suites::geometry_check(exp),
            Subcommand::HypothesisCheck => suites::hypothesis_check(exp),
            Subcommand::PotentialCheck => suites::potential_check(exp),
            Subcommand::ResidualCheck => suites::residual_check(exp),
            Subcommand::Solve => suites::solve(exp),
            Subcommand::Frequency => suites::frequency_suite(exp),
            Subcommand::Monotonicity => suites::monotonicity_suite(exp),
            Subcommand::Threeball => suites::threeball(exp),
            Subcommand::VanishingOrder => suites::vanishing(exp),
            Subcommand::All => suites::all(exp),
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::config("subcommand", format!("unknown subcommand `{s}`")))
    }
}

/// What a run produced: the report, its suite output, and the text for stdout.
pub struct RunOutcome {
    pub report: Report,
    pub output: SuiteOutput,
    pub stdout: String,
}

/// Executes `cmd` and writes artifacts when `out` is configured.
pub fn run(cmd: Subcommand, config: ExperimentConfig) -> CliResult<RunOutcome> {
    let exp = Experiment::new(config)?;
    let output = cmd.execute(&exp)?;
    let report = Report::new(cmd.name(), &exp.config, &output);
    if let Some(dir) = &exp.config.out {
        write_artifacts(dir, &report, &output)?;
    }
    let stdout = match exp.config.format {
        Format::Table => report.to_table(),
        Format::Json => report.to_json(),
        Format::Csv => output.profile_csv.clone().unwrap_or_else(|| report.to_table()),
    };
    Ok(RunOutcome { report, output, stdout })
}
