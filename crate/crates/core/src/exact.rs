//! Brute-force oracle over all `2^n` configurations.
//!
//! The dense transition matrix is tabulated from
//! [`transition_prob`](crate::model::transition_prob), the stationary vector
//! comes from a direct linear solve, and the balance/detailed-balance checks
//! are exhaustive. Everything is generic over [`Scalar`], so the same code
//! runs in `f64` or in exact rationals.

use serde::Serialize;

use crate::closed_forms::stationary_weight;
use crate::error::{Error, Result};
use crate::model::{transition_prob_from_windows, windows, Configuration, ModelParams};
use crate::par;
use crate::scalar::Scalar;

/// Absolute threshold below which a float detailed-balance violation counts
/// as zero.
pub const DETAILED_BALANCE_ZERO: f64 = 1e-12;

/// Row-sum tolerance for float matrices.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Dense row-major `P[alpha -> beta]`, rows and columns in ascending
/// integer-encoding order.
#[derive(Debug, Clone)]
pub struct TransitionMatrix<T = f64> {
    params: ModelParams<T>,
    n_states: usize,
    entries: Vec<T>,
}

pub fn build_matrix<T: Scalar>(params: &ModelParams<T>) -> Result<TransitionMatrix<T>> {
    build_matrix_capped(params, T::DEFAULT_SITE_CAP)
}

pub fn build_matrix_capped<T: Scalar>(params: &ModelParams<T>, cap: usize) -> Result<TransitionMatrix<T>> {
    let n = params.n();
    if n > cap {
        return Err(Error::BudgetExceeded { n, cap });
    }
    let n_states = 1usize << n;
    let rows = par::map_indexed(n_states, |a| {
        let alpha = Configuration::from_bits_unchecked(a as u64, n);
        let classes = windows(&alpha, params);
        Configuration::all(n)
            .expect("n within cap")
            .map(|beta| transition_prob_from_windows(&classes, &beta, params))
            .collect::<Vec<T>>()
    });
    Ok(TransitionMatrix {
        params: params.clone(),
        n_states,
        entries: rows.into_iter().flatten().collect(),
    })
}

impl<T: Scalar> TransitionMatrix<T> {
    /// Wraps hand-built entries, checking shape, range and row sums.
    pub fn from_entries(params: ModelParams<T>, entries: Vec<T>) -> Result<Self> {
        let n_states = 1usize << params.n();
        if entries.len() != n_states * n_states {
            return Err(Error::DimensionMismatch {
                expected: n_states * n_states,
                got: entries.len(),
            });
        }
        if entries.iter().any(|p| *p < T::zero() || *p > T::one()) {
            return Err(Error::Domain("transition probabilities must lie in [0, 1]".into()));
        }
        let matrix = Self {
            params,
            n_states,
            entries,
        };
        let defect = matrix.row_sum_defect();
        if (T::EXACT && !defect.is_zero()) || defect.to_f64() > ROW_SUM_TOLERANCE {
            return Err(Error::Domain(format!("rows are not stochastic (defect {defect:?})")));
        }
        Ok(matrix)
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn get(&self, alpha: usize, beta: usize) -> &T {
        &self.entries[alpha * self.n_states + beta]
    }

    pub fn prob(&self, alpha: &Configuration, beta: &Configuration) -> &T {
        self.get(alpha.bits() as usize, beta.bits() as usize)
    }

    pub fn row(&self, alpha: usize) -> &[T] {
        &self.entries[alpha * self.n_states..(alpha + 1) * self.n_states]
    }

    /// `max_alpha |sum_beta P[alpha -> beta] - 1|`.
    pub fn row_sum_defect(&self) -> T {
        (0..self.n_states)
            .map(|a| {
                let s = self.row(a).iter().fold(T::zero(), |acc, p| acc + p.clone());
                (s - T::one()).abs()
            })
            .fold(T::zero(), max_of)
    }

    /// Nonzero transitions as `(alpha, beta, probability)`.
    pub fn edges(&self) -> Vec<(Configuration, Configuration, T)> {
        let n = self.params.n();
        let mut out = Vec::new();
        for a in 0..self.n_states {
            for (b, p) in self.row(a).iter().enumerate() {
                if !p.is_zero() {
                    out.push((
                        Configuration::from_bits_unchecked(a as u64, n),
                        Configuration::from_bits_unchecked(b as u64, n),
                        p.clone(),
                    ));
                }
            }
        }
        out
    }

    /// One step of `nu -> nu P`.
    pub fn push_forward(&self, nu: &[T]) -> Vec<T> {
        assert_eq!(nu.len(), self.n_states);
        let mut out = vec![T::zero(); self.n_states];
        for (a, weight) in nu.iter().enumerate() {
            if weight.is_zero() {
                continue;
            }
            for (slot, p) in out.iter_mut().zip(self.row(a)) {
                if !p.is_zero() {
                    *slot = slot.clone() + weight.clone() * p.clone();
                }
            }
        }
        out
    }
}

fn max_of<T: Scalar>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Solver,
    Formula,
}

/// A full stationary distribution indexed by configuration encoding.
#[derive(Debug, Clone)]
pub struct StationaryTable<T = f64> {
    pub params: ModelParams<T>,
    pub source: Source,
    pub probs: Vec<T>,
}

#[derive(Serialize)]
struct TableRecord<'a> {
    n: usize,
    m: usize,
    p1: f64,
    p2: f64,
    source: Source,
    probs: &'a [f64],
}

impl<T: Scalar> StationaryTable<T> {
    pub fn prob(&self, beta: &Configuration) -> &T {
        &self.probs[beta.bits() as usize]
    }

    pub fn to_f64(&self) -> StationaryTable<f64> {
        StationaryTable {
            params: self.params.to_f64(),
            source: self.source,
            probs: self.probs.iter().map(Scalar::to_f64).collect(),
        }
    }

    /// `max_beta |self(beta) - other(beta)|`.
    pub fn sup_distance(&self, other: &StationaryTable<T>) -> T {
        assert_eq!(self.probs.len(), other.probs.len());
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a.clone() - b.clone()).abs())
            .fold(T::zero(), max_of)
    }
}

impl StationaryTable<f64> {
    /// `{"n","m","p1","p2","source","probs"}`, probabilities in ascending
    /// encoding order.
    pub fn to_json(&self) -> String {
        let (p1, p2) = self.params.rates();
        let record = TableRecord {
            n: self.params.n(),
            m: self.params.m(),
            p1,
            p2,
            source: self.source,
            probs: &self.probs,
        };
        serde_json::to_string(&record).expect("plain numbers serialize")
    }
}

/// Solves `pi (P - I) = 0`, `sum(pi) = 1` by Gaussian elimination with the
/// last balance equation replaced by the normalisation row.
pub fn solve_stationary<T: Scalar>(matrix: &TransitionMatrix<T>) -> Result<StationaryTable<T>> {
    let size = matrix.n_states();
    // a[beta][alpha] = P[alpha -> beta] - delta
    let mut a = vec![T::zero(); size * size];
    for alpha in 0..size {
        for (beta, p) in matrix.row(alpha).iter().enumerate() {
            a[beta * size + alpha] = p.clone();
        }
    }
    for i in 0..size {
        a[i * size + i] = a[i * size + i].clone() - T::one();
    }
    for j in 0..size {
        a[(size - 1) * size + j] = T::one();
    }
    let mut rhs = vec![T::zero(); size];
    rhs[size - 1] = T::one();

    let probs = gaussian_solve(a, rhs, size)?;
    Ok(StationaryTable {
        params: matrix.params().clone(),
        source: Source::Solver,
        probs,
    })
}

fn gaussian_solve<T: Scalar>(mut a: Vec<T>, mut b: Vec<T>, size: usize) -> Result<Vec<T>> {
    const PIVOT_FLOOR: f64 = 1e-13;
    for col in 0..size {
        let pivot_row = if T::EXACT {
            (col..size).find(|&r| !a[r * size + col].is_zero())
        } else {
            (col..size).max_by(|&r, &s| {
                a[r * size + col]
                    .abs()
                    .partial_cmp(&a[s * size + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        };
        let pivot_row = match pivot_row {
            Some(r) if !a[r * size + col].is_zero() => r,
            _ => return Err(Error::SolveFailed(format!("zero pivot in column {col}"))),
        };
        if !T::EXACT && a[pivot_row * size + col].abs().to_f64() < PIVOT_FLOOR {
            return Err(Error::SolveFailed(format!(
                "pivot below {PIVOT_FLOOR:e} in column {col}"
            )));
        }
        if pivot_row != col {
            for j in 0..size {
                a.swap(col * size + j, pivot_row * size + j);
            }
            b.swap(col, pivot_row);
        }
        let (upper, lower) = a.split_at_mut((col + 1) * size);
        let pivot = &upper[col * size..];
        let pivot_val = pivot[col].clone();
        for (offset, row) in lower.chunks_mut(size).enumerate() {
            if row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone() / pivot_val.clone();
            row[col] = T::zero();
            for j in col + 1..size {
                if !pivot[j].is_zero() {
                    row[j] = row[j].clone() - factor.clone() * pivot[j].clone();
                }
            }
            let r = col + 1 + offset;
            b[r] = b[r].clone() - factor * b[col].clone();
        }
    }
    let mut x = vec![T::zero(); size];
    for i in (0..size).rev() {
        let mut acc = b[i].clone();
        for j in i + 1..size {
            if !a[i * size + j].is_zero() {
                acc = acc - a[i * size + j].clone() * x[j].clone();
            }
        }
        x[i] = acc / a[i * size + i].clone();
    }
    Ok(x)
}

/// The ergodicity certificate: `0^n` reaches every state in one step,
/// every state reaches `0^n` in one step, and `0^n` has a self-loop.
pub fn check_irreducible_aperiodic<T: Scalar>(matrix: &TransitionMatrix<T>) -> bool {
    let positive = |p: &T| *p > T::zero();
    let size = matrix.n_states();
    matrix.row(0).iter().all(positive) && (0..size).all(|a| positive(matrix.get(a, 0)))
}

/// `max_beta |sum_alpha P[alpha -> beta] pi(alpha) - pi(beta)|`.
pub fn balance_residual<T: Scalar>(table: &StationaryTable<T>, matrix: &TransitionMatrix<T>) -> T {
    assert_eq!(table.probs.len(), matrix.n_states(), "table and matrix sizes differ");
    matrix
        .push_forward(&table.probs)
        .into_iter()
        .zip(&table.probs)
        .map(|(pushed, pi)| (pushed - pi.clone()).abs())
        .fold(T::zero(), max_of)
}

#[derive(Debug, Clone)]
pub struct BalanceAudit<T = f64> {
    /// Largest `|pi(a) P[a -> b] - pi(b) P[b -> a]|`.
    pub max_violation: T,
    /// A pair attaining `max_violation`.
    pub witness: (Configuration, Configuration),
    /// The largest-flux pair with `P[a -> b] > 0` and `P[b -> a] = 0`, if any.
    pub one_way_witness: Option<(Configuration, Configuration)>,
}

impl BalanceAudit<f64> {
    pub fn is_reversible(&self) -> bool {
        self.max_violation < DETAILED_BALANCE_ZERO
    }
}

pub fn audit_detailed_balance<T: Scalar>(table: &StationaryTable<T>, matrix: &TransitionMatrix<T>) -> BalanceAudit<T> {
    assert_eq!(table.probs.len(), matrix.n_states(), "table and matrix sizes differ");
    let n = matrix.params().n();
    let cfg = |i: usize| Configuration::from_bits_unchecked(i as u64, n);
    let size = matrix.n_states();
    let mut max_violation = T::zero();
    let mut witness = (0, 0);
    let mut one_way: Option<(usize, usize, T)> = None;
    for a in 0..size {
        for b in a..size {
            let forward = table.probs[a].clone() * matrix.get(a, b).clone();
            let backward = table.probs[b].clone() * matrix.get(b, a).clone();
            let violation = (forward.clone() - backward.clone()).abs();
            if violation > max_violation {
                max_violation = violation;
                witness = (a, b);
            }
            let directed = match (matrix.get(a, b).is_zero(), matrix.get(b, a).is_zero()) {
                (false, true) => Some((a, b, forward)),
                (true, false) => Some((b, a, backward)),
                _ => None,
            };
            if let Some((from, to, flux)) = directed {
                if one_way.as_ref().is_none_or(|(_, _, best)| flux > *best) {
                    one_way = Some((from, to, flux));
                }
            }
        }
    }
    BalanceAudit {
        max_violation,
        witness: (cfg(witness.0), cfg(witness.1)),
        one_way_witness: one_way.map(|(a, b, _)| (cfg(a), cfg(b))),
    }
}

/// Both evaluations of `pi(a) P[a -> b] / (pi(b) P[b -> a])` for `m = 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReversibilityRatio {
    pub direct: f64,
    pub closed_form: f64,
    /// `|Pos_{10,01}| - |Pos_{01,10}|`.
    pub exponent: i64,
}

/// Number of sites `i` with `(a_i, a_{i+1}) = first` and
/// `(b_i, b_{i+1}) = second`.
fn joint_pair_positions(alpha: &Configuration, beta: &Configuration, first: (u8, u8), second: (u8, u8)) -> i64 {
    let n = alpha.len();
    (1..=n)
        .filter(|&i| {
            (alpha.site_wrapped(i, 0), alpha.site_wrapped(i, 1)) == first
                && (beta.site_wrapped(i, 0), beta.site_wrapped(i, 1)) == second
        })
        .count() as i64
}

pub fn reversibility_ratio(
    alpha: &Configuration,
    beta: &Configuration,
    params: &ModelParams,
) -> Result<ReversibilityRatio> {
    if params.m() != 2 {
        return Err(Error::Domain(format!(
            "position-set ratio needs m = 2, got m = {}",
            params.m()
        )));
    }
    let reverse = crate::model::transition_prob(beta, alpha, params);
    if reverse == 0.0 {
        return Err(Error::Domain(format!("no transition {beta} -> {alpha}")));
    }
    let forward = crate::model::transition_prob(alpha, beta, params);
    let direct = stationary_weight(alpha, params) * forward / (stationary_weight(beta, params) * reverse);

    let (p1, p2) = params.rates();
    let exponent =
        joint_pair_positions(alpha, beta, (1, 0), (0, 1)) - joint_pair_positions(alpha, beta, (0, 1), (1, 0));
    let base = p1 * p2 / ((1.0 - p1) * (1.0 - p2));
    let closed_form = if exponent == 0 { 1.0 } else { base.powi(exponent as i32) };

    let agree = if direct.is_finite() && closed_form.is_finite() {
        (direct - closed_form).abs() <= 1e-9 * closed_form.abs().max(1.0)
    } else {
        direct == closed_form
    };
    if !agree {
        return Err(Error::Domain(format!(
            "ratio routes disagree for {alpha} -> {beta}: direct {direct:e}, position sets {closed_form:e}"
        )));
    }
    Ok(ReversibilityRatio {
        direct,
        closed_form,
        exponent,
    })
}

/// Total-variation distance between two probability vectors.
pub fn tv_distance_vec(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
