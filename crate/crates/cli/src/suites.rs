//! One function per subcommand. Each returns check rows plus the structured
//! reports behind them.

use std::sync::Arc;

use rayon::prelude::*;

use grushin_core::check::relative_change;
use grushin_core::estimates::{field_estimates, geometry_estimates, FittedEstimate};
use grushin_core::fields::{check_potential, check_structural_with, f_apply, StructuralCheck};
use grushin_core::frequency::{
    cauchy_schwarz_check, comparison_fit, default_vanishing_radii, doubling_check, frequency, h_sup_check,
    monotonicity_fit, radial_profile, three_ball_slack, vanishing_order, variation_residuals, ProfileCheck,
    RadialProfile, ThreeBallRadii, CONSTANT_GRID_MAX, MIN_RADII, MONOTONE_TOLERANCE,
};
use grushin_core::geometry::{
    angle_psi, euler_apply, euler_vector, gauge, gauge_xgrad, sample_ball, xgrad_apply, AngleField, GaugeField,
};
use grushin_core::solutions::{builtin_kinds, grid_to_field, manufactured, residual_extrapolated, COLLAR_STEPS};
use grushin_core::{fields::Identity, CheckRow, CheckStatus, Dims, FnField, Point, SolutionField, VecN};

use crate::config::{Source, Spacing};
use crate::error::CliResult;
use crate::experiment::Experiment;
use crate::report::SuiteOutput;

/// Points closer than this to `z = 0` are left out of the identity checks.
const IDENTITY_COLLAR: f64 = 1e-3;
const EULER_TOLERANCE: f64 = 1e-8;
const GRADIENT_TOLERANCE: f64 = 1e-10;
const DIVERGENCE_TOLERANCE: f64 = 1e-6;
const COMMUTATOR_TOLERANCE: f64 = 1e-6;
const F_TOLERANCE: f64 = 1e-10;
const K_TOLERANCE: f64 = 1e-2;
const FLUX_TOLERANCE: f64 = 1e-2;
const FREQUENCY_TOLERANCE: f64 = 1e-2;
const VARIATION_TOLERANCE: f64 = 2e-2;
const SLOPE_TOLERANCE: f64 = 5e-2;
const GRID_FREQUENCY_TOLERANCE: f64 = 5e-2;
/// Coarser radius grids let stencil truncation dominate the variation residuals.
const VARIATION_MAX_LOG_STEP: f64 = 0.08;

fn row(name: &str, anchor: &str, points: usize, value: f64, tolerance: f64) -> CheckRow {
    CheckRow::bounded(name, anchor, points, value, tolerance)
}

fn with_status(mut r: CheckRow, status: CheckStatus) -> CheckRow {
    r.status = status;
    r
}

fn estimate_row(e: &FittedEstimate) -> CheckRow {
    CheckRow {
        name: e.name.clone(),
        anchor: e.anchor.clone(),
        points: e.points,
        max_violation: e.constant,
        tolerance: e.limit.unwrap_or(f64::INFINITY),
        status: e.status,
    }
}

fn profile_check_row(c: &ProfileCheck, anchor: &str, points: usize) -> CheckRow {
    CheckRow {
        name: c.name.clone(),
        anchor: anchor.into(),
        points,
        max_violation: c.max_violation,
        tolerance: c.tolerance,
        status: c.status,
    }
}

/// The first `n` seeded points of B_1 with `|z| >= collar`.
fn clear_points(n: usize, collar: f64, seed: u64, d: &Dims) -> CliResult<Vec<Point>> {
    let mut draw = 2 * n + 16;
    loop {
        let pts: Vec<Point> = sample_ball(1.0, draw, seed, d)?
            .into_iter()
            .filter(|p| p.z_norm() >= collar)
            .take(n)
            .collect();
        if pts.len() == n {
            return Ok(pts);
        }
        draw *= 2;
    }
}

fn par_max(pts: &[Point], f: impl Fn(&Point) -> CliResult<f64> + Sync) -> CliResult<f64> {
    let vals: Vec<f64> = pts.par_iter().map(&f).collect::<CliResult<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// Polynomial test fields with closed-form gradients.
fn test_polynomials(d: Dims) -> Vec<Arc<FnField>> {
    let m = d.m();
    let t0 = move |p: &Point| if d.k() > 0 { p.t()[0] } else { 0.0 };
    let z1 = move |p: &Point| if m > 1 { p.z()[1] } else { 0.0 };
    let first = FnField::new(d, move |p| p.z()[0] * p.z()[0] * t0(p) + z1(p).powi(3)).with_gradient(move |p| {
        let mut g = VecN::zeros(d.n());
        g[0] = 2.0 * p.z()[0] * t0(p);
        if m > 1 {
            g[1] = 3.0 * z1(p) * z1(p);
        }
        if d.k() > 0 {
            g[m] = p.z()[0] * p.z()[0];
        }
        g
    });
    let second = FnField::new(d, move |p| t0(p) * t0(p) - p.z()[0] * z1(p) + p.z()[0].powi(4) * t0(p)).with_gradient(
        move |p| {
            let mut g = VecN::zeros(d.n());
            g[0] = -z1(p) + 4.0 * p.z()[0].powi(3) * t0(p);
            if m > 1 {
                g[1] = -p.z()[0];
            }
            if d.k() > 0 {
                g[m] = 2.0 * t0(p) + p.z()[0].powi(4);
            }
            g
        },
    );
    vec![Arc::new(first), Arc::new(second)]
}

/// `max_i |X_i (Z f) - Z (X_i f) - X_i f|` at p, derivatives of the
/// composite fields by finite differences.
fn commutator_defect(f: &Arc<FnField>, p: &Point, d: Dims) -> CliResult<f64> {
    let g = f.clone();
    let zf = FnField::new(d, move |q| euler_apply(&*g, q, &d).unwrap_or(f64::NAN));
    let x_of_zf = xgrad_apply(&zf, p, &d)?;
    let xf = xgrad_apply(&**f, p, &d)?;
    let mut worst: f64 = 0.0;
    for i in 0..d.n() {
        let g = f.clone();
        let xif = FnField::new(d, move |q| xgrad_apply(&*g, q, &d).map(|v| v.components()[i]).unwrap_or(f64::NAN));
        let z_of_xif = euler_apply(&xif, p, &d)?;
        worst = worst.max((x_of_zf.components()[i] - z_of_xif - xf.components()[i]).abs());
    }
    Ok(worst)
}

pub fn geometry_check(exp: &Experiment) -> CliResult<SuiteOutput> {
    let d = exp.dims;
    let cfg = &exp.config.geometry;
    let pts = clear_points(cfg.samples, IDENTITY_COLLAR, exp.seed(), &d)?;
    let n = pts.len();
    let mut out = SuiteOutput::default();

    let zrho = par_max(&pts, |p| Ok((euler_apply(&GaugeField(d), p, &d)? - gauge(p, &d)).abs()))?;
    out.rows.push(row("euler-gauge", "z-rho-equals-rho", n, zrho, EULER_TOLERANCE));
    let zpsi = par_max(&pts, |p| Ok(euler_apply(&AngleField(d), p, &d)?.abs()))?;
    out.rows.push(row("euler-angle", "z-psi-vanishes", n, zpsi, EULER_TOLERANCE));
    let xrho = par_max(&pts, |p| Ok((gauge_xgrad(p, &d)?.norm_sq() - angle_psi(p, &d)?).abs()))?;
    out.rows.push(row("gauge-gradient-length", "x-rho-squared-equals-psi", n, xrho, GRADIENT_TOLERANCE));

    let div = par_max(&pts, |p| {
        let h = 1e-5;
        let mut s = 0.0;
        for a in 0..d.n() {
            let (mut plus, mut minus) = (*p, *p);
            plus.coords_mut()[a] += h;
            minus.coords_mut()[a] -= h;
            s += (euler_vector(&plus, &d)[a] - euler_vector(&minus, &d)[a]) / (2.0 * h);
        }
        Ok((s - d.q()).abs())
    })?;
    out.rows.push(row("euler-divergence", "div-z-equals-q", n, div, DIVERGENCE_TOLERANCE));

    let polys = test_polynomials(d);
    let comm = par_max(&pts, |p| {
        let mut w: f64 = 0.0;
        for f in &polys {
            w = w.max(commutator_defect(f, p, d)?);
        }
        Ok(w)
    })?;
    out.rows.push(row("commutator", "x-z-commutator", n, comm, COMMUTATOR_TOLERANCE));

    let estimates = geometry_estimates(&d, 1.0, cfg.estimate_samples, exp.seed())?;
    out.rows.extend(estimates.iter().map(estimate_row));
    out.detail("geometry_estimates", &estimates);
    Ok(out)
}

/// F from its defining formula `(rho / mu) sum a_ij X_j rho X_i` for A = I,
/// in coordinates.
fn f_by_definition(p: &Point, d: &Dims) -> CliResult<VecN> {
    let xr = gauge_xgrad(p, d)?;
    let psi = angle_psi(p, d)?;
    let rho = gauge(p, d);
    let zb = p.z_norm().powf(d.beta());
    let mut v = VecN::zeros(d.n());
    for a in 0..d.n() {
        let w = if a < d.m() { 1.0 } else { zb };
        v[a] = rho / psi * xr.components()[a] * w;
    }
    Ok(v)
}

pub fn hypothesis_check(exp: &Experiment) -> CliResult<SuiteOutput> {
    let d = exp.dims;
    let cfg = &exp.config.hypothesis;
    let a = &*exp.coefficient;
    let mut out = SuiteOutput::default();
    let rep = check_structural_with(
        a,
        StructuralCheck {
            radius: cfg.radius,
            n: cfg.samples,
            seed: exp.seed(),
            budget: cfg.budget,
        },
    )?;
    out.rows.push(with_status(
        row("lambda-hat", "structural-hypothesis", rep.points, rep.lambda_hat, cfg.budget),
        rep.status,
    ));
    let change = relative_change(rep.level_lambda[1], rep.level_lambda[2]);
    out.rows.push(row(
        "lambda-stable",
        "refinement-stability",
        rep.points,
        change,
        grushin_core::check::STABILITY,
    ));

    let pts = clear_points(16 * cfg.samples, IDENTITY_COLLAR, exp.seed(), &d)?;
    let fz = par_max(&pts, |p| Ok(f_by_definition(p, &d)?.max_abs_diff(&euler_vector(p, &d))))?;
    out.rows.push(row("f-equals-z", "f-reduces-to-z", pts.len(), fz, F_TOLERANCE));

    // families without a closed-form extension of F skip points near z = 0
    let values: Vec<Option<f64>> = pts
        .par_iter()
        .map(|p| match f_apply(a, &GaugeField(d), p) {
            Ok(v) => Ok(Some((v - gauge(p, &d)).abs())),
            Err(grushin_core::Error::Conditioning(_)) => Ok(None),
            Err(e) => Err(e.into()),
        })
        .collect::<CliResult<_>>()?;
    let used = values.iter().flatten().count();
    let frho = values.iter().flatten().fold(0.0f64, |m, v| m.max(*v));
    out.rows.push(row("f-of-gauge", "f-rho-equals-rho", used, frho, F_TOLERANCE));

    // the estimates need F across z = 0, which families violating the hypothesis lack
    if !a.is_identity() && rep.status != CheckStatus::Fail {
        let estimates = field_estimates(a, cfg.radius, cfg.samples, exp.seed())?;
        out.rows.extend(estimates.iter().map(estimate_row));
        out.detail("field_estimates", &estimates);
    }
    out.detail("hypothesis", &rep);
    Ok(out)
}

pub fn potential_check(exp: &Experiment) -> CliResult<SuiteOutput> {
    let r1 = exp.config.working_radius;
    let rep = check_potential(
        &exp.potential,
        &*exp.coefficient,
        r1,
        exp.config.potential_check.samples,
        exp.seed(),
    )?;
    let mut out = SuiteOutput::default();
    if let Some(k) = rep.closed_form_k {
        let r = row("potential-k", "potential-bound", rep.points, (rep.k_hat - k).abs() / k, K_TOLERANCE);
        let status = r.status.combine(rep.status);
        out.rows.push(with_status(r, status));
    } else {
        out.rows.push(with_status(
            row("potential-k", "potential-bound", rep.points, rep.k_hat, f64::INFINITY),
            rep.status,
        ));
    }
    out.rows.push(row(
        "potential-k-stable",
        "refinement-stability",
        rep.points,
        relative_change(rep.level_k[1], rep.level_k[2]),
        grushin_core::check::STABILITY,
    ));
    out.detail("potential", &rep);
    Ok(out)
}

/// Every built-in manufactured pair under the identity operator.
pub fn residual_check(exp: &Experiment) -> CliResult<SuiteOutput> {
    let d = exp.dims;
    let cfg = &exp.config.residual;
    let pts = clear_points(cfg.points, COLLAR_STEPS * cfg.step, exp.seed(), &d)?;
    let a = Identity(d);
    let mut out = SuiteOutput::default();
    let mut worst = serde_json::Map::new();
    for kind in builtin_kinds(&d) {
        let u = manufactured(kind.clone(), d)?;
        let v = u.exact_potential().expect("manufactured solutions carry their potential");
        let res = par_max(&pts, |p| Ok(residual_extrapolated(&u, &v, &a, p, cfg.step)?.abs()))?;
        worst.insert(kind.to_string(), res.into());
        out.rows.push(row(
            &format!("residual:{kind}"),
            "manufactured-equation",
            pts.len(),
            res,
            cfg.tolerance,
        ));
    }
    out.detail("residual_max", worst);
    Ok(out)
}

/// Convergence of the finite-difference solver against the manufactured
/// truth, and the frequency of the finest grid solution.
pub fn solve(exp: &Experiment) -> CliResult<SuiteOutput> {
    let truth = &exp.truth;
    let cfg = &exp.config.solve;
    let mut out = SuiteOutput::default();
    let mut errors = Vec::new();
    let mut spacings = Vec::new();
    let mut finest = None;
    for &nodes in &cfg.nodes {
        let grid = exp.solve(nodes)?;
        errors.push(grid.max_error(truth)?);
        spacings.push(grid.spec.max_spacing());
        finest = Some(grid);
    }
    let finest = finest.expect("validated non-empty");
    let points = finest.values.len();
    if errors.len() >= 2 {
        let increase = errors.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        out.rows.push(row("solve-convergence", "fd-error-decreasing", points, increase, 0.0));
        let order = errors
            .windows(2)
            .zip(spacings.windows(2))
            .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
            .fold(f64::INFINITY, f64::min);
        out.rows.push(row("solve-order", "fd-observed-order", points, 1.0 - order, 0.0));
        out.detail("observed_order", order);
    }
    out.detail("grid_nodes", &cfg.nodes);
    out.detail("grid_max_error", &errors);

    let k = exp.k_bound()?;
    let alpha = exp.frequency_config(k)?.alpha;
    let field = grid_to_field(finest.clone());
    let mut worst: f64 = 0.0;
    let mut compared = Vec::new();
    for &r in &cfg.compare_radii {
        let nt = frequency(truth, &*exp.coefficient, &exp.potential, r, alpha, exp.quad())?.value;
        let ng = frequency(&field, &*exp.coefficient, &exp.potential, r, alpha, exp.quad())?.value;
        worst = worst.max((ng - nt).abs() / nt.abs());
        compared.push(serde_json::json!({ "r": r, "grid": ng, "manufactured": nt }));
    }
    if !compared.is_empty() {
        out.rows.push(row(
            "solve-frequency",
            "grid-frequency-matches",
            compared.len(),
            worst,
            GRID_FREQUENCY_TOLERANCE,
        ));
        out.detail("grid_frequency", compared);
    }
    out.grid_text = Some(finest.to_text());
    Ok(out)
}

/// Computes the profile of the configured solution.
pub fn profile(exp: &Experiment) -> CliResult<(RadialProfile, Box<dyn SolutionField>)> {
    let u = exp.solution()?;
    let k = exp.k_bound()?;
    let cfg = exp.frequency_config(k)?;
    let p = radial_profile(&*u, &*exp.coefficient, &exp.potential, &cfg)?;
    Ok((p, u))
}

pub fn frequency_checks(exp: &Experiment, profile: &RadialProfile, u: &dyn SolutionField) -> CliResult<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let n = profile.rows.len();
    let usable: Vec<_> = profile.rows.iter().filter(|r| !r.flags.degenerate).collect();
    let gap = usable
        .iter()
        .map(|r| (r.energy - r.flux).abs() / r.energy.abs().max(r.height))
        .fold(0.0, f64::max);
    let flux_row = row("flux-energy", "flux-equals-energy", usable.len(), gap, FLUX_TOLERANCE);
    let status = if usable.is_empty() || profile.rows.iter().any(|r| r.flags.inconclusive) {
        flux_row.status.combine(CheckStatus::Inconclusive)
    } else {
        flux_row.status
    };
    out.rows.push(with_status(flux_row, status));
    out.rows.push(profile_check_row(&cauchy_schwarz_check(profile), "cauchy-schwarz", n));
    out.rows.push(profile_check_row(&doubling_check(profile), "doubling", n));
    out.rows.push(profile_check_row(&h_sup_check(profile), "height-sup-bound", n));

    let homogeneous = exp.config.source == Source::Manufactured && exp.truth.is_homogeneous();
    if exp.is_unperturbed() && homogeneous {
        let kappa = u.kappa().expect("manufactured solutions know their degree");
        let expect = 2.0 * (profile.alpha + 1.0) * kappa;
        let freqs = profile.frequencies();
        let dev = freqs.iter().map(|v| (v - expect).abs() / expect).fold(0.0, f64::max);
        out.rows.push(row("homogeneous-frequency", "frequency-equals-degree", n, dev, FREQUENCY_TOLERANCE));
        let (lo, hi) = freqs.iter().fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(*v), h.max(*v)));
        out.rows.push(row("frequency-spread", "frequency-constant", n, (hi - lo) / lo.abs(), FREQUENCY_TOLERANCE));
        out.detail("homogeneous_frequency", expect);
    }

    if exp.config.radii.is_empty() && exp.config.radii_spacing == Spacing::Geometric && n >= MIN_RADII {
        let v = variation_residuals(profile)?;
        let radii = profile.radii();
        let coarse = (radii[1] / radii[0]).ln() > VARIATION_MAX_LOG_STEP;
        let (names, values, tol) = if exp.is_unperturbed() {
            (["variation-height", "variation-energy"], [v.max_rel_h, v.max_rel_i], VARIATION_TOLERANCE)
        } else {
            (
                ["variation-height-constant", "variation-energy-constant"],
                [v.h_constant, v.i_constant],
                CONSTANT_GRID_MAX,
            )
        };
        for (name, value) in names.iter().zip(values) {
            let r = row(name, "first-variation", v.rows.len(), value, tol);
            let status = if (v.noisy || coarse) && r.status == CheckStatus::Fail {
                CheckStatus::Inconclusive
            } else {
                r.status
            };
            out.rows.push(with_status(r, status));
        }
        out.detail("variation", &v);
    }
    out.detail("profile", profile);
    out.profile_csv = Some(profile.to_csv());
    Ok(out)
}

pub fn frequency_suite(exp: &Experiment) -> CliResult<SuiteOutput> {
    let (p, u) = profile(exp)?;
    frequency_checks(exp, &p, &*u)
}

fn max_relative_decrease(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| (w[0] - w[1]) / w[0].abs())
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn monotonicity_checks(exp: &Experiment, profile: &RadialProfile) -> CliResult<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let n = profile.rows.len();
    let m = monotonicity_fit(profile);
    let (c1, c2) = (
        m.c1_fit.unwrap_or(CONSTANT_GRID_MAX),
        m.c2_fit.unwrap_or(CONSTANT_GRID_MAX),
    );
    let adjusted = profile.clone().with_adjustment(c1, c2);
    let drop = max_relative_decrease(&adjusted.rows.iter().map(|r| r.adjusted).collect::<Vec<_>>());
    out.rows.push(with_status(
        row("monotonicity", "adjusted-frequency-nondecreasing", n, drop, MONOTONE_TOLERANCE),
        m.status,
    ));
    if exp.is_unperturbed() {
        out.rows.push(row(
            "monotonicity-unadjusted",
            "frequency-nondecreasing",
            n,
            m.max_relative_violation,
            MONOTONE_TOLERANCE,
        ));
    }
    if m.status == CheckStatus::Pass {
        let c = comparison_fit(&adjusted);
        out.rows.push(with_status(
            row("comparison", "frequency-comparison", n, c.cbar.unwrap_or(f64::NAN), CONSTANT_GRID_MAX),
            c.status,
        ));
        out.detail("comparison", &c);
    }
    out.detail("monotonicity", &m);
    out.profile_csv = Some(adjusted.to_csv());
    Ok(out)
}

pub fn monotonicity_suite(exp: &Experiment) -> CliResult<SuiteOutput> {
    let (p, _) = profile(exp)?;
    monotonicity_checks(exp, &p)
}

pub fn threeball(exp: &Experiment) -> CliResult<SuiteOutput> {
    let cfg = &exp.config.threeball;
    let radii = ThreeBallRadii::new(cfg.r1, cfg.r2, cfg.r3)
        .map_err(|e| crate::error::CliError::config("threeball", e.to_string()))?;
    let u = exp.solution()?;
    let k = exp.k_bound()?;
    let rep = three_ball_slack(&*u, &*exp.coefficient, radii, k, cfg.cbar, exp.quad())?;
    let (c, c2) = (
        rep.c_fit.unwrap_or(CONSTANT_GRID_MAX),
        rep.c2_fit.unwrap_or(CONSTANT_GRID_MAX),
    );
    let slack = rep.slack_at_zero + c2 * k.sqrt() * rep.alpha0 + c;
    let mut out = SuiteOutput::default();
    out.rows.push(with_status(
        row("three-ball", "three-ball-inequality", 3, -slack, 0.0),
        rep.status,
    ));
    out.detail("three_ball", &rep);
    Ok(out)
}

pub fn vanishing(exp: &Experiment) -> CliResult<SuiteOutput> {
    let cfg = &exp.config.vanishing;
    let r1 = exp.config.working_radius;
    let radii = default_vanishing_radii(r1, cfg.count)?;
    let u = exp.solution()?;
    let k = exp.k_bound()?;
    let rep = vanishing_order(&*u, &radii, r1, k, cfg.samples, exp.seed())?;
    let mut out = SuiteOutput::default();
    let n = radii.len();
    let slope = rep.slope.unwrap_or(f64::NAN);
    let exponent = rep.exponent.unwrap_or(f64::NAN);
    out.rows.push(with_status(
        row("vanishing-exponent", "vanishing-order-bound", n, slope - exponent, 0.0),
        rep.status,
    ));
    if exp.config.source == Source::Manufactured {
        if let Some(kappa) = u.kappa() {
            let dev = (slope - kappa).abs() / kappa.max(1.0);
            let r = row("vanishing-slope", "vanishing-order-matches", n, dev, SLOPE_TOLERANCE);
            let status = if rep.flagged { CheckStatus::Inconclusive } else { r.status };
            out.rows.push(with_status(r, status));
        }
    }
    out.detail("vanishing", &rep);
    Ok(out)
}

/// Every suite; the profile is computed once and shared.
pub fn all(exp: &Experiment) -> CliResult<SuiteOutput> {
    let mut out = geometry_check(exp)?;
    out.merge(hypothesis_check(exp)?);
    out.merge(potential_check(exp)?);
    out.merge(residual_check(exp)?);
    out.merge(solve(exp)?);
    let (p, u) = profile(exp)?;
    out.merge(monotonicity_checks(exp, &p)?);
    // the raw profile, not the adjusted one, is the artifact of `all`
    out.merge(frequency_checks(exp, &p, &*u)?);
    out.merge(threeball(exp)?);
    out.merge(vanishing(exp)?);
    Ok(out)
}
