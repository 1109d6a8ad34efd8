use grushin_core::fields::{make_perturbed, Identity};
use grushin_core::frequency::*;
use grushin_core::quadrature::{integrate_ball, omega, QuadConfig, WeightFactor, WeightSpec};
use grushin_core::solutions::{grid_to_field, manufactured, solve_fd, GridSpec, Manufactured, SolutionField};
use grushin_core::{CheckStatus, Constant, Dims, Error, FnField, MatN, Potential};
use proptest::prelude::*;

fn quad(seed: u64) -> QuadConfig {
    QuadConfig::with_budget(32_768, 8, seed)
}

fn desk() -> (Dims, Identity) {
    let d = Dims::desk();
    (d, Identity(d))
}

fn kind(name: &str, d: Dims) -> Manufactured {
    manufactured(name.parse().unwrap(), d).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn height_of_one_scales_like_the_volume() {
    let (d, a) = desk();
    let one = Constant { dims: d, value: 1.0 };
    let h1 = height(&one, &a, 1.0, 0.0, quad(1)).unwrap();
    let h2 = height(&one, &a, 0.5, 0.0, quad(1)).unwrap();
    assert!(rel(h2.value / h1.value, 2f64.powf(-d.q())) < 1e-3);
    // H(1) = omega, computed by the quadrature module with a different seed
    let w = omega(&d, quad(2)).unwrap();
    assert!((h1.value - w.value).abs() < 4.0 * (h1.err_est + w.err_est), "{h1:?} vs {w:?}");
}

#[test]
fn height_of_coordinate_scales_with_degree_two() {
    let (d, a) = desk();
    let u = kind("coordinate_z", d);
    let lo = height(&u, &a, 0.3, 0.0, quad(3)).unwrap().value;
    let hi = height(&u, &a, 0.6, 0.0, quad(3)).unwrap().value;
    assert!(rel((hi / lo).log2(), d.q() + 2.0) < 1e-2);
}

#[test]
fn height_of_zero_is_zero() {
    let (d, a) = desk();
    let zero = Constant { dims: d, value: 0.0 };
    assert_eq!(height(&zero, &a, 0.5, 1.0, quad(4)).unwrap().value, 0.0);
    assert!(matches!(
        frequency(&zero, &a, &Potential::zero(d), 0.5, 1.0, quad(4)),
        Err(Error::Degenerate(_))
    ));
}

#[test]
fn constants_have_no_energy_or_flux() {
    let (d, a) = desk();
    let one = Constant { dims: d, value: 1.0 };
    assert_eq!(energy(&one, &a, &Potential::zero(d), 0.7, 1.0, quad(5)).unwrap().value, 0.0);
    assert_eq!(flux(&one, &a, 0.7, 1.0, quad(5)).unwrap().value, 0.0);
}

#[test]
fn energy_of_coordinate_matches_weighted_volume() {
    // |X z_1|^2 = 1, so I(r) = int_{B_r} (r^2 - rho^2)^(alpha+1)
    let (d, a) = desk();
    let u = kind("coordinate_z", d);
    let one = Constant { dims: d, value: 1.0 };
    for alpha in [0.0, 1.0] {
        let e = energy(&u, &a, &Potential::zero(d), 0.6, alpha, quad(6)).unwrap().value;
        let f = flux(&u, &a, 0.6, alpha, quad(6)).unwrap().value;
        let w = WeightSpec::new(alpha + 1.0, WeightFactor::None).unwrap();
        let oracle = integrate_ball(&one, 0.6, w, &a, quad(7)).unwrap().value;
        assert!(rel(e, oracle) < 1e-2, "alpha {alpha}: {e} vs {oracle}");
        assert!(rel(f, oracle) < 1e-2, "alpha {alpha}: {f} vs {oracle}");
    }
}

#[test]
fn energy_and_flux_agree_for_gaussians() {
    let (d, a) = desk();
    for name in ["gaussian_radial", "gaussian_modulated:coordinate_t"] {
        let u = kind(name, d);
        let v = u.exact_potential().unwrap();
        let n = frequency(&u, &a, &v, 0.5, 1.0, quad(8)).unwrap();
        let gap = (n.energy.value - n.flux.value).abs();
        assert!(gap < 1e-2 * n.energy.value.abs().max(n.height.value), "{name}: {n:?}");
    }
}

#[test]
fn homogeneous_frequencies() {
    // N = 2 (alpha+1) kappa for V = 0, A = I
    let (d, a) = desk();
    let zero = Potential::zero(d);
    for (name, alpha, expect) in [
        ("coordinate_z", 0.0, 2.0),
        ("coordinate_t", 0.0, 4.0),
        ("coordinate_t", 1.0, 8.0),
        ("planar_harmonic:3", 0.0, 6.0),
    ] {
        let u = kind(name, d);
        let n = frequency(&u, &a, &zero, 0.5, alpha, quad(9)).unwrap();
        assert!(rel(n.value, expect) < 1e-2, "{name} alpha {alpha}: {}", n.value);
        assert!(rel(n.flux.value / n.height.value, expect) < 1e-2);
    }
}

#[test]
fn frequency_of_coordinate_t_at_other_exponents() {
    let d = Dims::new(2, 1, 2.0).unwrap();
    let a = Identity(d);
    let u = kind("coordinate_t", d);
    let n = frequency(&u, &a, &Potential::zero(d), 0.4, 0.5, quad(10)).unwrap();
    assert!(rel(n.value, 2.0 * 1.5 * 3.0) < 1e-2, "{}", n.value);
}

#[test]
fn profile_of_homogeneous_solution() {
    let (d, a) = desk();
    let u = kind("coordinate_t", d);
    let alpha = 1.0;
    let cfg = FrequencyConfig::new(1.0, geometric_radii(0.2, 0.8, 9).unwrap())
        .unwrap()
        .with_alpha(alpha)
        .with_quad(quad(11));
    let p = radial_profile(&u, &a, &Potential::zero(d), &cfg).unwrap();
    let n = p.frequencies();
    let (lo, hi) = n.iter().fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(*v), h.max(*v)));
    assert!((hi - lo) / lo < 1e-2);
    assert!(rel(n[0], 8.0) < 1e-2);
    for w in p.rows.windows(2) {
        assert!(w[1].h >= w[0].h);
    }
    // H ~ r^(Q + 2 kappa + 2 alpha)
    let (first, last) = (&p.rows[0], &p.rows[p.rows.len() - 1]);
    let exponent = (last.height / first.height).ln() / (last.r / first.r).ln();
    assert!(rel(exponent, d.q() + 2.0 * 2.0 + 2.0 * alpha) < 2e-2, "{exponent}");
    assert!(!p.any_flagged());
}

#[test]
fn zero_solution_rows_are_flagged() {
    let (d, a) = desk();
    let zero = Constant { dims: d, value: 0.0 };
    let cfg = FrequencyConfig::new(1.0, vec![0.3, 0.6]).unwrap().with_quad(quad(12));
    let p = radial_profile(&zero, &a, &Potential::zero(d), &cfg).unwrap();
    assert!(p.rows.iter().all(|r| r.flags.degenerate));
    assert!(p.to_csv().contains("degenerate"));
}

#[test]
fn config_is_validated() {
    assert!(FrequencyConfig::new(0.5, vec![0.1, 0.2]).is_err());
    assert!(FrequencyConfig::new(1.0, vec![0.2, 0.1]).is_err());
    assert!(FrequencyConfig::new(1.0, vec![0.2, 1.5]).is_err());
    assert!(FrequencyConfig::new(1.0, vec![]).is_err());
    let cfg = FrequencyConfig::new(4.0, vec![0.5]).unwrap();
    assert_eq!(cfg.alpha, 2.0);
    assert!(cfg.clone().with_alpha(-1.0).validate().is_err());
    assert!(cfg.with_r1(0.4).validate().is_err());
}

#[test]
fn variation_residuals_vanish_without_perturbation() {
    let (d, a) = desk();
    let radii = geometric_radii(0.5, 0.9, 30).unwrap();
    let cfg = FrequencyConfig::new(1.0, radii).unwrap().with_quad(quad(13));
    let u = kind("coordinate_z", d);
    let v = variation_residuals(&radial_profile(&u, &a, &Potential::zero(d), &cfg).unwrap()).unwrap();
    assert!(v.max_rel_h < 1e-2 && v.max_rel_i < 2e-2, "{} {}", v.max_rel_h, v.max_rel_i);
    assert!(!v.noisy);
    let one = Constant { dims: d, value: 1.0 };
    let v = variation_residuals(&radial_profile(&one, &a, &Potential::zero(d), &cfg).unwrap()).unwrap();
    assert!(v.max_rel_h < 1e-2);
}

#[test]
fn variation_residuals_under_perturbation_are_order_one() {
    let d = Dims::desk();
    let a = make_perturbed(0.05, MatN::filled(3, 1.0), d).unwrap();
    let radii = geometric_radii(0.3, 0.9, 12).unwrap();
    let cfg = FrequencyConfig::new(1.0, radii).unwrap().with_quad(quad(14));
    let u = kind("coordinate_z", d);
    let v = variation_residuals(&radial_profile(&u, &a, &Potential::zero(d), &cfg).unwrap()).unwrap();
    assert!(v.h_constant <= 1.0, "{}", v.h_constant);
}

#[test]
fn variation_needs_enough_geometric_radii() {
    let (d, a) = desk();
    let u = kind("coordinate_z", d);
    let cfg = FrequencyConfig::new(1.0, geometric_radii(0.3, 0.9, 8).unwrap())
        .unwrap()
        .with_quad(quad(15));
    let p = radial_profile(&u, &a, &Potential::zero(d), &cfg).unwrap();
    assert!(variation_residuals(&p).is_err());
    let cfg = FrequencyConfig::new(1.0, (1..=9).map(|i| 0.1 * i as f64).collect())
        .unwrap()
        .with_quad(quad(15));
    let p = radial_profile(&u, &a, &Potential::zero(d), &cfg).unwrap();
    assert!(variation_residuals(&p).is_err());
}

#[test]
fn monotonicity_of_exact_and_gaussian_solutions() {
    let (d, a) = desk();
    let radii = geometric_radii(0.1, 0.9, 15).unwrap();
    let u = kind("coordinate_z", d);
    let cfg = FrequencyConfig::new(1.0, radii.clone()).unwrap().with_quad(quad(16));
    let m = monotonicity_fit(&radial_profile(&u, &a, &Potential::zero(d), &cfg).unwrap());
    assert_eq!((m.c1_fit, m.c2_fit), (Some(0.0), Some(0.0)));

    let u = kind("gaussian_radial", d);
    let v = u.exact_potential().unwrap();
    let k = v.closed_form_k(&a, 1.0).unwrap();
    assert_eq!(k, d.q());
    let cfg = FrequencyConfig::new(k, radii).unwrap().with_quad(quad(16));
    let p = radial_profile(&u, &a, &v, &cfg).unwrap();
    let m = monotonicity_fit(&p);
    assert_eq!(m.status, CheckStatus::Pass);
    assert!(m.c1_fit.unwrap() <= 10.0 && m.c2_fit.unwrap() <= 10.0);
    let adjusted = p.with_adjustment(m.c1_fit.unwrap(), m.c2_fit.unwrap());
    for w in adjusted.rows.windows(2) {
        assert!(w[1].adjusted - w[0].adjusted >= -MONOTONE_TOLERANCE * w[0].adjusted.abs());
    }
    assert_eq!(comparison_fit(&adjusted).status, CheckStatus::Pass);
}

#[test]
fn monotonicity_of_grid_solution_with_perturbed_coefficients() {
    let d = Dims::desk();
    let a = make_perturbed(0.05, MatN::filled(3, 1.0), d).unwrap();
    let truth = kind("gaussian_modulated:coordinate_z", d);
    let v = truth.exact_potential().unwrap();
    let spec = GridSpec::staggered_box(d, 1.0, 0.5, 17).unwrap();
    let u = grid_to_field(solve_fd(&a, &v, &spec, &truth).unwrap());
    let cfg = FrequencyConfig::new(6.0, geometric_radii(0.2, 0.9, 10).unwrap())
        .unwrap()
        .with_quad(quad(17));
    let m = monotonicity_fit(&radial_profile(&u, &a, &v, &cfg).unwrap());
    assert_eq!(m.status, CheckStatus::Pass, "{m:?}");
}

#[test]
fn inequality_checks_on_profiles() {
    let (d, a) = desk();
    let cfg = FrequencyConfig::new(1.0, geometric_radii(0.2, 0.9, 8).unwrap())
        .unwrap()
        .with_quad(quad(18));
    for name in ["coordinate_z", "coordinate_t", "planar_harmonic:3"] {
        let u = kind(name, d);
        let p = radial_profile(&u, &a, &Potential::zero(d), &cfg).unwrap();
        assert_eq!(doubling_check(&p).status, CheckStatus::Pass, "{name}");
        assert_eq!(h_sup_check(&p).status, CheckStatus::Pass, "{name}");
        assert_eq!(cauchy_schwarz_check(&p).status, CheckStatus::Pass, "{name}");
    }
    // a constant attains the sup bound with equality under A = I
    let one = Constant { dims: d, value: 1.0 };
    let p = radial_profile(&one, &a, &Potential::zero(d), &cfg).unwrap();
    let c = h_sup_check(&p);
    assert_eq!(c.status, CheckStatus::Pass);
    assert!(c.max_violation > -1e-2, "{}", c.max_violation);
}

#[test]
fn csv_layout_and_determinism() {
    let (d, a) = desk();
    let u = kind("gaussian_modulated:coordinate_z", d);
    let v = u.exact_potential().unwrap();
    let cfg = FrequencyConfig::new(6.0, vec![0.3, 0.5, 0.7]).unwrap().with_quad(quad(19));
    let run = || radial_profile(&u, &a, &v, &cfg).unwrap().to_csv();
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(run);
    let parallel = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(run);
    assert_eq!(serial, parallel);
    let mut lines = serial.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), CSV_HEADER.split(',').count());
    assert_eq!(row[0], "3.000000000000e-1");
}

#[test]
fn three_ball_for_homogeneous_and_modulated_solutions() {
    let (d, a) = desk();
    let radii = ThreeBallRadii::new(0.1, 0.2, 0.9).unwrap();
    let u = kind("coordinate_z", d);
    let rep = three_ball_slack(&u, &a, radii, 1.0, 1.0, quad(20)).unwrap();
    assert_eq!(rep.status, CheckStatus::Pass);
    assert!(rep.c_fit.unwrap() <= 5.0 && rep.c2_fit.unwrap() <= 5.0);
    let one = Constant { dims: d, value: 1.0 };
    assert_eq!(three_ball_slack(&one, &a, radii, 1.0, 1.0, quad(20)).unwrap().status, CheckStatus::Pass);
    let u = kind("gaussian_modulated:planar_harmonic:3", d);
    let rep = three_ball_slack(&u, &a, radii, d.q() + 6.0, 1.0, quad(20)).unwrap();
    assert_eq!(rep.status, CheckStatus::Pass);
    assert!(rep.c2_fit.unwrap() <= 20.0);
}

#[test]
fn vanishing_orders_of_modulated_gaussians() {
    let (d, _) = desk();
    let radii = default_vanishing_radii(1.0, 13).unwrap();
    for (name, expect, k) in [
        ("gaussian_modulated:coordinate_z", 1.0, 6.0),
        ("gaussian_modulated:coordinate_t", 2.0, 8.0),
        ("gaussian_modulated:planar_harmonic:3", 3.0, 10.0),
    ] {
        let u = kind(name, d);
        let rep = vanishing_order(&u, &radii, 1.0, k, 2048, 1).unwrap();
        let slope = rep.slope.unwrap();
        assert!(rel(slope, expect) < 5e-2, "{name}: {slope}");
        assert!(rep.dominates && rep.exponent.unwrap() >= slope);
        assert_eq!(rep.status, CheckStatus::Pass);
    }
    let u = kind("gaussian_radial", d);
    let rep = vanishing_order(&u, &radii, 1.0, 4.0, 2048, 1).unwrap();
    assert!(rep.slope.unwrap().abs() < 0.05);
}

#[test]
fn vanishing_order_edge_cases() {
    let (d, _) = desk();
    let zero = Constant { dims: d, value: 0.0 };
    let radii = default_vanishing_radii(1.0, 5).unwrap();
    let rep = vanishing_order(&zero, &radii, 1.0, 1.0, 256, 1).unwrap();
    assert!(rep.flagged && rep.slope.is_none());
    assert_eq!(rep.status, CheckStatus::Inconclusive);
    let u = kind("coordinate_z", d);
    assert!(vanishing_order(&u, &[0.1, 0.5], 1.0, 1.0, 256, 1).is_err());
}

#[test]
fn grid_solution_frequency_tracks_the_manufactured_one() {
    let (d, a) = desk();
    let truth = kind("gaussian_modulated:coordinate_z", d);
    let v = truth.exact_potential().unwrap();
    let spec = GridSpec::staggered_box(d, 1.0, 0.5, 33).unwrap();
    let u = grid_to_field(solve_fd(&a, &v, &spec, &truth).unwrap());
    for r in [0.3, 0.5] {
        let nt = frequency(&truth, &a, &v, r, 2.0, quad(21)).unwrap().value;
        let ng = frequency(&u, &a, &v, r, 2.0, quad(21)).unwrap().value;
        assert!(rel(ng, nt) < 5e-2, "r {r}: {ng} vs {nt}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn cauchy_schwarz_holds_for_any_polynomial(c in prop::collection::vec(-2.0f64..2.0, 6), eps in 0.0f64..0.1) {
        let d = Dims::desk();
        let a = make_perturbed(eps, MatN::filled(3, 1.0), d).unwrap();
        let u = FnField::new(d, move |p| {
            let (z, t) = (p.z(), p.t());
            c[0] + c[1] * z[0] + c[2] * z[1] * z[1] + c[3] * t[0] + c[4] * z[0] * t[0] + c[5] * z[1].powi(3)
        });
        let cfg = FrequencyConfig::new(2.0, vec![0.3, 0.6, 0.9]).unwrap().with_quad(QuadConfig::with_budget(4096, 4, 9));
        let p = radial_profile(&u, &a, &Potential::zero(d), &cfg).unwrap();
        prop_assert_eq!(cauchy_schwarz_check(&p).status, CheckStatus::Pass);
        for w in p.rows.windows(2) {
            prop_assert!(w[1].h >= w[0].h);
        }
    }
}
