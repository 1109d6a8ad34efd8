//! Shared plumbing for sampled checks: pass/fail/inconclusive status, report
//! rows, and maxima certified over nested refinement levels.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::{gauge, sample_ball, Dims, Point};

/// Points with `|z| < COLLAR * rho` are left out of pointwise estimates.
pub const COLLAR: f64 = 1e-3;

/// Relative change allowed between the last two refinement levels.
pub const STABILITY: f64 = 0.05;

/// Growth per psi-decade above which a ratio is declared divergent.
pub const DIVERGENCE_GROWTH: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

impl CheckStatus {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        }
    }

    /// Fail dominates inconclusive, which dominates pass.
    pub fn combine(self, other: CheckStatus) -> CheckStatus {
        use CheckStatus::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One line of a check report.
#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub name: String,
    /// Short identifier of the property being checked.
    pub anchor: String,
    pub points: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub status: CheckStatus,
}

impl CheckRow {
    /// Row for a quantity that must not exceed `tolerance`.
    pub fn bounded(name: &str, anchor: &str, points: usize, value: f64, tolerance: f64) -> Self {
        CheckRow {
            name: name.into(),
            anchor: anchor.into(),
            points,
            max_violation: value,
            tolerance,
            status: CheckStatus::from_bool(value.is_finite() && value <= tolerance),
        }
    }
}

/// Running maximum of a sampled ratio, with its location.
#[derive(Clone, Debug, Serialize)]
pub struct SampledMax {
    pub value: f64,
    pub worst_point: Option<Vec<f64>>,
}

impl Default for SampledMax {
    fn default() -> Self {
        SampledMax {
            value: f64::NEG_INFINITY,
            worst_point: None,
        }
    }
}

impl SampledMax {
    fn offer(&mut self, v: f64, p: &Point) {
        if v > self.value || (v.is_nan() && !self.value.is_nan()) {
            self.value = v;
            self.worst_point = Some(p.coords().to_vec());
        }
    }
}

/// Maxima of `K` ratios over three nested sample sizes n, 4n, 16n.
#[derive(Clone, Debug)]
pub struct RefinedMaxima<const K: usize> {
    pub level_sizes: [usize; 3],
    /// `per_level[l][i]` is the max of ratio i over the first `level_sizes[l]` raw draws.
    pub per_level: [[f64; K]; 3],
    /// Final-level maxima with their worst points.
    pub finest: [SampledMax; K],
    /// Points actually evaluated at the finest level (collar excluded).
    pub points: usize,
}

impl<const K: usize> RefinedMaxima<K> {
    pub fn finest_values(&self) -> [f64; K] {
        self.per_level[2]
    }

    /// Whether ratio `i` changed by at most [`STABILITY`] between the last two levels.
    pub fn is_stable(&self, i: usize) -> bool {
        relative_change(self.per_level[1][i], self.per_level[2][i]) <= STABILITY
    }

    pub fn all_stable(&self) -> bool {
        (0..K).all(|i| self.is_stable(i))
    }
}

pub fn relative_change(coarse: f64, fine: f64) -> f64 {
    let scale = coarse.abs().max(fine.abs());
    if scale < 1e-300 {
        0.0
    } else {
        (fine - coarse).abs() / scale
    }
}

/// Evaluates `ratios` on 16n seeded samples of B_r (collar excluded) and
/// records the maxima on the nested prefixes of sizes n, 4n and 16n.
pub fn refined_maxima<const K: usize, F>(
    r: f64,
    n: usize,
    seed: u64,
    d: &Dims,
    ratios: F,
) -> Result<RefinedMaxima<K>>
where
    F: Fn(&Point) -> Result<[f64; K]> + Sync,
{
    if n == 0 {
        return Err(crate::error::Error::invalid("sample count must be at least 1"));
    }
    let sizes = [n, 4 * n, 16 * n];
    let pts = sample_ball(r, sizes[2], seed, d)?;
    let vals: Vec<Option<[f64; K]>> = pts
        .par_iter()
        .map(|p| {
            if outside_collar(p, d) {
                ratios(p).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;

    let mut finest: [SampledMax; K] = std::array::from_fn(|_| SampledMax::default());
    let mut per_level = [[0.0; K]; 3];
    let mut level = 0;
    let mut used = 0;
    for (idx, (p, v)) in pts.iter().zip(&vals).enumerate() {
        if let Some(v) = v {
            used += 1;
            for i in 0..K {
                finest[i].offer(v[i], p);
            }
        }
        if idx + 1 == sizes[level] {
            for i in 0..K {
                per_level[level][i] = finest[i].value;
            }
            level += 1;
        }
    }
    Ok(RefinedMaxima {
        level_sizes: sizes,
        per_level,
        finest,
        points: used,
    })
}

pub fn outside_collar(p: &Point, d: &Dims) -> bool {
    let rho = gauge(p, d);
    rho > 0.0 && p.z_norm() >= COLLAR * rho
}

/// A ratio evaluated along a sequence of decreasing angles at fixed gauge.
#[derive(Clone, Debug, Serialize)]
pub struct DecadeScan {
    pub psi: Vec<f64>,
    pub ratio: Vec<f64>,
    /// `ratio[i+1] / ratio[i]`.
    pub growth: Vec<f64>,
    pub diverges: bool,
}

/// Evaluates `ratio` at gauge `rho` and psi = 10^-1, ..., 10^-5.
pub fn decade_scan<F>(rho: f64, d: &Dims, ratio: F) -> Result<DecadeScan>
where
    F: Fn(&Point) -> Result<f64>,
{
    let psi: Vec<f64> = (1..=5).map(|e| 10f64.powi(-e)).collect();
    let mut values = Vec::with_capacity(psi.len());
    for &s in &psi {
        let p = crate::geometry::point_with_angle(rho, s, d)?;
        values.push(ratio(&p)?);
    }
    let growth: Vec<f64> = values
        .windows(2)
        .map(|w| if w[0].abs() < 1e-300 { 1.0 } else { w[1].abs() / w[0].abs() })
        .collect();
    let tail = &growth[growth.len() - 2..];
    let diverges = tail.iter().all(|&g| g >= DIVERGENCE_GROWTH) || values.iter().any(|v| !v.is_finite());
    Ok(DecadeScan {
        psi,
        ratio: values,
        growth,
        diverges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combine_ordering() {
        use CheckStatus::*;
        assert_eq!(Pass.combine(Pass), Pass);
        assert_eq!(Pass.combine(Inconclusive), Inconclusive);
        assert_eq!(Inconclusive.combine(Fail), Fail);
    }

    #[test]
    fn nested_levels_are_monotone() {
        let d = Dims::desk();
        let r = refined_maxima(1.0, 100, 5, &d, |p| Ok([gauge(p, &d), -gauge(p, &d)])).unwrap();
        assert!(r.per_level[0][0] <= r.per_level[1][0] && r.per_level[1][0] <= r.per_level[2][0]);
        assert!(r.per_level[2][0] < 1.0 && r.per_level[2][0] > 0.9);
        assert!(r.points <= 1600 && r.points > 1500);
        assert!(r.finest[0].worst_point.is_some());
    }

    #[test]
    fn scan_detects_growth() {
        let d = Dims::desk();
        let s = decade_scan(0.5, &d, |p| Ok(1.0 / crate::geometry::angle_psi(p, &d)?)).unwrap();
        assert!(s.diverges);
        assert!(s.growth.iter().all(|g| (g - 10.0).abs() < 1e-6));
        let s = decade_scan(0.5, &d, |p| Ok(gauge(p, &d))).unwrap();
        assert!(!s.diverges);
    }
}
