//! Turns a configuration into coefficient, potential and solution objects.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use grushin_core::fields::{check_potential, make_perturbed, Identity, TBlockViolating};
use grushin_core::frequency::FrequencyConfig;
use grushin_core::quadrature::QuadConfig;
use grushin_core::solutions::{grid_to_field, manufactured, solve_fd, GridSolution, GridSpec, Manufactured};
use grushin_core::{CoefficientField, Dims, MatN, Potential, SolutionField};

use crate::config::{AlphaChoice, ExperimentConfig, Family, KChoice, PotentialChoice, Shape, Source};
use crate::error::{CliError, CliResult};

pub struct Experiment {
    pub config: ExperimentConfig,
    pub dims: Dims,
    pub coefficient: Box<dyn CoefficientField>,
    /// The manufactured solution named by `solution`: boundary data for `fd`
    /// and the source of the `exact` potential.
    pub truth: Manufactured,
    pub potential: Potential,
}

fn shape_matrix(shape: Shape, n: usize, seed: u64) -> MatN {
    match shape {
        Shape::Ones => MatN::filled(n, 1.0),
        Shape::Identity => MatN::identity(n),
        Shape::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut s = MatN::zeros(n);
            for i in 0..n {
                for j in i..n {
                    let v = rng.gen_range(-1.0..1.0);
                    s.set(i, j, v);
                    s.set(j, i, v);
                }
            }
            s
        }
    }
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> CliResult<Self> {
        config.validate()?;
        let dims = Dims::new(config.m, config.k, config.beta)
            .map_err(|e| CliError::config("m", e.to_string()))?;
        let coefficient: Box<dyn CoefficientField> = match config.family {
            Family::Identity => Box::new(Identity(dims)),
            Family::Perturbed => {
                let s = shape_matrix(config.shape, dims.n(), config.shape_seed);
                Box::new(make_perturbed(config.eps, s, dims).map_err(|e| CliError::config("eps", e.to_string()))?)
            }
            Family::TBlockViolating => {
                if !(config.eps.abs() < 1.0) {
                    return Err(CliError::config("eps", "must satisfy |eps| < 1 for ellipticity"));
                }
                Box::new(TBlockViolating { dims, eps: config.eps })
            }
        };
        let truth: Manufactured = config
            .solution
            .parse()
            .and_then(|kind| manufactured(kind, dims))
            .map_err(|e| CliError::config("solution", e.to_string()))?;
        let potential = match config.potential {
            PotentialChoice::None => Potential::zero(dims),
            PotentialChoice::AngleQuadratic => Potential::angle_quadratic(dims, config.potential_shift),
            PotentialChoice::Exact => truth.exact_potential().unwrap_or_else(|| Potential::zero(dims)),
        };
        Ok(Experiment {
            config,
            dims,
            coefficient,
            truth,
            potential,
        })
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn quad(&self) -> QuadConfig {
        QuadConfig::with_budget(self.config.points, self.config.replicates, self.config.seed)
    }

    pub fn grid_spec(&self, nodes: usize) -> CliResult<GridSpec> {
        Ok(GridSpec::staggered_box(
            self.dims,
            self.config.solve.z_half,
            self.config.solve.t_half,
            nodes,
        )?)
    }

    /// Solves the Dirichlet problem with the manufactured solution as boundary data.
    pub fn solve(&self, nodes: usize) -> CliResult<GridSolution> {
        let spec = self.grid_spec(nodes)?;
        Ok(solve_fd(&*self.coefficient, &self.potential, &spec, &self.truth)?)
    }

    /// The solution the frequency diagnostics run on.
    pub fn solution(&self) -> CliResult<Box<dyn SolutionField>> {
        match self.config.source {
            Source::Manufactured => Ok(Box::new(self.truth.clone())),
            Source::Fd => {
                let nodes = *self.config.solve.nodes.last().expect("validated non-empty");
                Ok(Box::new(grid_to_field(self.solve(nodes)?)))
            }
            Source::Grid => {
                let path = self.config.grid_file.as_ref().expect("validated present");
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                let grid = GridSolution::from_text(&text)?;
                if grid.spec.dims != self.dims {
                    return Err(CliError::config("grid_file", "grid dimensions differ from m, k, beta"));
                }
                Ok(Box::new(grid_to_field(grid)))
            }
        }
    }

    /// Potential constant K: the configured value, the closed form, or the
    /// sampled certificate, in that order.
    pub fn k_bound(&self) -> CliResult<f64> {
        if let KChoice::Value(k) = self.config.k_bound {
            return Ok(k);
        }
        let r1 = self.config.working_radius;
        if let Some(k) = self.potential.closed_form_k(&*self.coefficient, r1) {
            return Ok(k);
        }
        let rep = check_potential(
            &self.potential,
            &*self.coefficient,
            r1,
            self.config.potential_check.samples,
            self.config.seed,
        )?;
        Ok(rep.k_hat)
    }

    pub fn frequency_config(&self, k: f64) -> CliResult<FrequencyConfig> {
        let mut cfg = FrequencyConfig::new(k, self.config.profile_radii()?)?
            .with_r1(self.config.working_radius)
            .with_quad(self.quad());
        if let AlphaChoice::Value(a) = self.config.alpha {
            cfg = cfg.with_alpha(a);
        }
        cfg.sup_samples = self.config.sup_samples;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Identity coefficients with zero potential, where the frequency
    /// identities hold without correction terms.
    pub fn is_unperturbed(&self) -> bool {
        self.coefficient.is_identity() && self.potential.is_zero()
    }
}
