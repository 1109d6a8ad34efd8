//! Sampled verification of the structural hypothesis on `B = A - I`:
//!
//! ```text
//! |b_ij| <= Lambda rho                              (i, j <= m)
//! |b_ij| <= Lambda psi^(1/2 + 1/(2 beta)) rho        (otherwise)
//! |X_k b_ij| <= Lambda                              (k, i, j <= m)
//! |X_k b_ij| <= Lambda psi^(1/2)                    (otherwise)
//! ```

use serde::Serialize;

use super::coefficient::CoefficientField;
use crate::check::{decade_scan, refined_maxima, CheckStatus, DecadeScan, SampledMax};
use crate::error::Result;
use crate::geometry::{Frame, Point};
use crate::linalg::MatN;

pub const BOUND_NAMES: [&str; 4] = [
    "horizontal-block",
    "cross-block",
    "horizontal-derivative",
    "other-derivative",
];

/// Slack on the declared ellipticity constant before a point counts as a violation.
const ELLIPTICITY_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub family: String,
    pub radius: f64,
    /// Max of the four bound ratios at the finest level.
    pub lambda_hat: f64,
    pub bounds: Vec<BoundMax>,
    pub level_sizes: [usize; 3],
    pub level_lambda: [f64; 3],
    pub points: usize,
    pub max_asymmetry: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Symmetry or ellipticity failed somewhere on the sample.
    pub structural_failure: bool,
    pub decade_scan: DecadeScan,
    pub budget: f64,
    pub status: CheckStatus,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundMax {
    pub name: &'static str,
    #[serde(flatten)]
    pub max: SampledMax,
}

impl HypothesisReport {
    pub fn pass(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

/// The four bound ratios at p; the caller keeps p off the characteristic set.
pub fn bound_ratios(a: &dyn CoefficientField, p: &Point) -> Result<[f64; 4]> {
    let d = a.dims();
    let fr = Frame::new(p, &d)?;
    let (m, n) = (d.m(), d.n());
    let b = a.matrix(p).sub(&MatN::identity(n));
    let cross_scale = fr.psi.powf(0.5 + 0.5 / d.beta()) * fr.rho;
    let sqrt_psi = fr.psi.sqrt();
    let mut out = [0.0f64; 4];
    for i in 0..n {
        for j in 0..n {
            let v = b.get(i, j).abs();
            if i < m && j < m {
                out[0] = out[0].max(v / fr.rho);
            } else {
                out[1] = out[1].max(v / cross_scale);
            }
        }
    }
    for l in 0..n {
        let xb = a.xderiv(l, p);
        for i in 0..n {
            for j in 0..n {
                let v = xb.get(i, j).abs();
                if l < m && i < m && j < m {
                    out[2] = out[2].max(v);
                } else {
                    out[3] = out[3].max(v / sqrt_psi);
                }
            }
        }
    }
    Ok(out)
}

/// Options for [`check_structural_with`].
#[derive(Clone, Copy, Debug)]
pub struct StructuralCheck {
    pub radius: f64,
    pub n: usize,
    pub seed: u64,
    /// Declared Lambda the estimate must not exceed.
    pub budget: f64,
}

/// [`check_structural_with`] at budget Lambda = 1.
pub fn check_structural(
    a: &dyn CoefficientField,
    radius: f64,
    n: usize,
    seed: u64,
) -> Result<HypothesisReport> {
    check_structural_with(
        a,
        StructuralCheck {
            radius,
            n,
            seed,
            budget: 1.0,
        },
    )
}

pub fn check_structural_with(a: &dyn CoefficientField, opts: StructuralCheck) -> Result<HypothesisReport> {
    let d = a.dims();
    let lambda = a.lambda();
    // ratios 0..4 are the bounds; 4 is asymmetry, 5 is -min eigenvalue, 6 is max eigenvalue
    let maxima = refined_maxima::<7, _>(opts.radius, opts.n, opts.seed, &d, |p| {
        let r = bound_ratios(a, p)?;
        let am = a.matrix(p);
        let (lo, hi) = am.symmetric_eigen_range();
        Ok([r[0], r[1], r[2], r[3], am.max_asymmetry(), -lo, hi])
    })?;
    let lambda_of = |lvl: &[f64; 7]| lvl[..4].iter().cloned().fold(0.0, f64::max);
    let level_lambda = [
        lambda_of(&maxima.per_level[0]),
        lambda_of(&maxima.per_level[1]),
        lambda_of(&maxima.per_level[2]),
    ];
    let finest = maxima.finest_values();
    let min_eig = -finest[5];
    let max_eig = finest[6];
    let structural_failure = finest[4] > 1e-12
        || min_eig < lambda - ELLIPTICITY_SLACK
        || max_eig > 1.0 / lambda + ELLIPTICITY_SLACK;

    let scan = decade_scan(0.5 * opts.radius, &d, |p| {
        Ok(bound_ratios(a, p)?.iter().cloned().fold(0.0, f64::max))
    })?;

    let lambda_hat = level_lambda[2];
    let stable = crate::check::relative_change(level_lambda[1], level_lambda[2]) <= crate::check::STABILITY;
    let status = if structural_failure || scan.diverges || !lambda_hat.is_finite() || lambda_hat > opts.budget {
        CheckStatus::Fail
    } else if !stable {
        CheckStatus::Inconclusive
    } else {
        CheckStatus::Pass
    };

    let bounds = BOUND_NAMES
        .iter()
        .zip(maxima.finest.iter())
        .map(|(name, max)| BoundMax {
            name,
            max: max.clone(),
        })
        .collect();
    Ok(HypothesisReport {
        family: a.name(),
        radius: opts.radius,
        lambda_hat,
        bounds,
        level_sizes: maxima.level_sizes,
        level_lambda,
        points: maxima.points,
        max_asymmetry: finest[4],
        min_eigenvalue: min_eig,
        max_eigenvalue: max_eig,
        structural_failure,
        decade_scan: scan,
        budget: opts.budget,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::coefficient::{make_perturbed, Identity, TBlockViolating};
    use crate::geometry::Dims;

    #[test]
    fn identity_has_zero_lambda() {
        let d = Dims::desk();
        let rep = check_structural(&Identity(d), 1.0, 200, 1).unwrap();
        assert_eq!(rep.lambda_hat, 0.0);
        assert!(rep.pass());
        assert!(!rep.structural_failure);
    }

    #[test]
    fn perturbed_family_passes() {
        let d = Dims::desk();
        let a = make_perturbed(0.05, MatN::filled(3, 1.0), d).unwrap();
        let rep = check_structural(&a, 1.0, 500, 2).unwrap();
        assert!(rep.pass(), "{rep:?}");
        assert!(rep.lambda_hat <= 10.0 * 0.05);
        assert!(rep.lambda_hat > 0.0);
        assert!(!rep.decade_scan.diverges);
    }

    #[test]
    fn violating_family_fails_by_divergence() {
        let d = Dims::desk();
        let a = TBlockViolating { dims: d, eps: 0.05 };
        let rep = check_structural(&a, 1.0, 500, 3).unwrap();
        assert_eq!(rep.status, CheckStatus::Fail);
        assert!(!rep.structural_failure);
        assert!(rep.decade_scan.diverges);
        for g in &rep.decade_scan.growth {
            assert!(*g >= 10.0 * (1.0 - 1e-9), "growth {g}");
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(12))]
        #[test]
        fn lambda_hat_is_monotone_in_eps(eps in 0.001f64..0.08, seed in 0u64..1000) {
            let d = Dims::desk();
            let s = MatN::filled(3, 1.0);
            let one = check_structural(&make_perturbed(eps, s, d).unwrap(), 1.0, 50, seed).unwrap();
            let two = check_structural(&make_perturbed(2.0 * eps, s, d).unwrap(), 1.0, 50, seed).unwrap();
            proptest::prop_assert!(two.lambda_hat >= one.lambda_hat);
        }
    }

    struct Skewed(Dims);

    impl CoefficientField for Skewed {
        fn dims(&self) -> Dims {
            self.0
        }
        fn name(&self) -> String {
            "skewed".into()
        }
        fn matrix(&self, p: &Point) -> MatN {
            let mut a = MatN::identity(3);
            a.set(0, 1, 0.01 * crate::geometry::gauge(p, &self.0));
            a
        }
        fn lambda(&self) -> f64 {
            0.9
        }
    }

    #[test]
    fn asymmetry_is_a_structural_failure() {
        let rep = check_structural(&Skewed(Dims::desk()), 1.0, 100, 4).unwrap();
        assert!(rep.structural_failure);
        assert_eq!(rep.status, CheckStatus::Fail);
        assert!(rep.lambda_hat < 1.0);
    }
}
