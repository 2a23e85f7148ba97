//! Analytics for the two-site neighbourhood (`m = 2`).
//!
//! With `q2 = (1 - p1) / p2`, the partition functions `Z_n` have the
//! rational generating function
//!
//! ```text
//! sum_n Z_n x^n = (2 - x - p1 x) p2 / (p2 - p2 (1 + p1) x - p1 (1 - p1 - p2) x^2)
//! ```
//!
//! (with the conventions `Z_0 = 2`, `Z_1 = 1 + p1`), the occupied-site sums
//! `Z_n pi(site 1 occupied)` have
//!
//! ```text
//! p1 x (1 - x + q2 x) / ((1 - x)(1 - p1 x) - p1 q2 x^2),
//! ```
//!
//! and the free energy is `-ln x_+`, where `x_+` is the root of the first
//! denominator closest to the origin.

use serde::Serialize;

use crate::closed_forms::partition_formula;
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Half-width of the band around `p1 + p2 = 1` where the free energy takes
/// its limiting value.
pub const REMOVABLE_SINGULARITY_WINDOW: f64 = 1e-9;

fn check_rates(p1: f64, p2: f64) -> Result<()> {
    ModelParams::new(2, 2, p1, p2).map(|_| ())
}

fn on_reversible_line(p1: f64, p2: f64) -> bool {
    (p1 + p2 - 1.0).abs() < REMOVABLE_SINGULARITY_WINDOW
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    PartitionFunction,
    OccupiedSite,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesCoefficients {
    pub kind: SeriesKind,
    pub p1: f64,
    pub p2: f64,
    pub coeffs: Vec<f64>,
}

/// `Z_0 ..= Z_{n_max}` from the three-term recurrence, seeded with
/// `Z_0 = 2`, `Z_1 = 1 + p1` and `Z_2` from the signature sum.
pub fn z2_recurrence(n_max: usize, p1: f64, p2: f64) -> Result<Vec<f64>> {
    check_rates(p1, p2)?;
    if n_max < 2 {
        return Err(Error::Domain(format!("n_max = {n_max} must be at least 2")));
    }
    let mut z = Vec::with_capacity(n_max + 1);
    z.push(2.0);
    z.push(1.0 + p1);
    z.push(partition_formula(&ModelParams::new(2, 2, p1, p2)?));
    let a = p1 * (1.0 - p1 - p2) / p2;
    let b = 1.0 + p1;
    for n in 1..n_max - 1 {
        z.push(a * z[n] + b * z[n + 1]);
    }
    Ok(z)
}

/// `ln Z_0 ..= ln Z_{n_max}` from the same recurrence, renormalising at each
/// step so that large rings do not overflow.
pub fn z2_log_recurrence(n_max: usize, p1: f64, p2: f64) -> Result<Vec<f64>> {
    let seeds = z2_recurrence(2, p1, p2)?;
    if n_max < 2 {
        return Err(Error::Domain(format!("n_max = {n_max} must be at least 2")));
    }
    let a = p1 * (1.0 - p1 - p2) / p2;
    let b = 1.0 + p1;
    let mut logs: Vec<f64> = seeds.iter().map(|z| z.ln()).collect();
    // (prev, cur) = (Z_{n}, Z_{n+1}) / e^{scale}
    let mut scale = logs[2];
    let mut prev = seeds[1] / scale.exp();
    let mut cur = 1.0;
    for _ in 3..=n_max {
        let next = a * prev + b * cur;
        prev = cur / next;
        scale += next.ln();
        cur = 1.0;
        logs.push(scale);
    }
    Ok(logs)
}

/// Power-series coefficients of `numerator / denominator` up to `x^n_max`
/// by long division, with compensated summation.
pub fn series_expand(numerator: &[f64], denominator: &[f64], n_max: usize) -> Result<Vec<f64>> {
    let lead = *denominator
        .first()
        .ok_or_else(|| Error::Domain("empty denominator".into()))?;
    if lead == 0.0 {
        return Err(Error::Domain("denominator vanishes at x = 0".into()));
    }
    let mut coeffs: Vec<f64> = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut sum = numerator.get(n).copied().unwrap_or(0.0);
        let mut compensation = 0.0;
        for (j, d) in denominator.iter().enumerate().skip(1).take_while(|(j, _)| *j <= n) {
            let term = -d * coeffs[n - j];
            // Neumaier summation
            let t = sum + term;
            if sum.abs() >= term.abs() {
                compensation += (sum - t) + term;
            } else {
                compensation += (term - t) + sum;
            }
            sum = t;
        }
        coeffs.push((sum + compensation) / lead);
    }
    Ok(coeffs)
}

pub fn z2_series(n_max: usize, p1: f64, p2: f64) -> Result<SeriesCoefficients> {
    check_rates(p1, p2)?;
    let numerator = [2.0 * p2, -(1.0 + p1) * p2];
    let denominator = [p2, -p2 * (1.0 + p1), -p1 * (1.0 - p1 - p2)];
    Ok(SeriesCoefficients {
        kind: SeriesKind::PartitionFunction,
        p1,
        p2,
        coeffs: series_expand(&numerator, &denominator, n_max)?,
    })
}

/// Coefficients of the generating function of `Z_n * pi(site 1 occupied)`.
pub fn density_series(n_max: usize, p1: f64, p2: f64) -> Result<SeriesCoefficients> {
    check_rates(p1, p2)?;
    let q2 = (1.0 - p1) / p2;
    let numerator = [0.0, p1, p1 * (q2 - 1.0)];
    let denominator = [1.0, -(1.0 + p1), p1 * (1.0 - q2)];
    Ok(SeriesCoefficients {
        kind: SeriesKind::OccupiedSite,
        p1,
        p2,
        coeffs: series_expand(&numerator, &denominator, n_max)?,
    })
}

pub fn free_energy(p1: f64, p2: f64) -> Result<f64> {
    check_rates(p1, p2)?;
    if on_reversible_line(p1, p2) {
        return Ok((1.0 + p1).ln());
    }
    let radicand = p2 * (1.0 - p1) * (4.0 * p1 + p2 - p1 * p2);
    if radicand < 0.0 {
        return Err(Error::Domain(format!(
            "negative radicand {radicand:e} at p1 = {p1}, p2 = {p2}"
        )));
    }
    let root = (-p2 * (1.0 + p1) + radicand.sqrt()) / (2.0 * p1 * (1.0 - p1 - p2));
    Ok(-root.ln())
}

/// Roots of the partition-function denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoleData {
    pub x_plus: f64,
    pub x_minus: f64,
    pub q2: f64,
}

pub fn pole_data(p1: f64, p2: f64) -> Result<PoleData> {
    check_rates(p1, p2)?;
    if on_reversible_line(p1, p2) {
        return Err(Error::DegenerateDenominator);
    }
    let q2 = (1.0 - p1) / p2;
    let disc = ((1.0 - p1).powi(2) + 4.0 * p1 * q2).sqrt();
    let denom = 2.0 * p1 * (q2 - 1.0);
    Ok(PoleData {
        x_plus: (-(1.0 + p1) + disc) / denom,
        x_minus: (-(1.0 + p1) - disc) / denom,
        q2,
    })
}

impl PoleData {
    /// The partition-function denominator `p2 - p2 (1+p1) x - p1 (1-p1-p2) x^2`.
    pub fn denominator_at(p1: f64, p2: f64, x: f64) -> f64 {
        p2 - p2 * x * (1.0 + p1) - x * x * p1 * (1.0 - p1 - p2)
    }
}

/// Leading-pole asymptotic for `Z_n`, off the line `p1 + p2 = 1`.
pub fn asymptotic_z2(n: usize, p1: f64, p2: f64) -> Result<f64> {
    let poles = pole_data(p1, p2)?;
    let x = poles.x_plus;
    let numerator = (x + p1 * x - 2.0) / (p1 * (poles.q2 - 1.0));
    Ok(numerator / (x * (poles.x_minus - x)) * x.powf(-(n as f64)))
}

/// Exact `Z_n` on the line `p1 + p2 = 1`, where the chain factorises over
/// sites: `(1 + p1)^n`.
pub fn z2_on_reversible_line(n: usize, p1: f64) -> f64 {
    (1.0 + p1).powi(n as i32)
}
