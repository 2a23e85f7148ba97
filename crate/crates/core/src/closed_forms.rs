//! Product-form stationary weights, the partition function and the density.
//!
//! The stationary weight of `beta` is
//!
//! ```text
//! p1^{N_1} (1 - p1)^{sum_r r N_{10^r1} + (m-1) N_{0^{m-1}1}} p2^{-N_{0^{m-1}1}}
//! ```
//!
//! and the partition function groups configurations by their signature
//! `(k, x_1..x_{m-2}, N)`: `k` ones, `x_s` gaps of exactly `s` zeros between
//! consecutive ones, and `N` runs of at least `m - 1` zeros ending in a one.
//! Each signature contributes `multiplicity * p1^k (1-p1)^{M + (m-1)N} p2^{-N}`
//! with `M = sum_s s x_s`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{Source, StationaryTable};
use crate::model::{count_patterns, Configuration, ModelParams};
use crate::par;
use crate::scalar::Scalar;

/// Largest ring for which a full formula table is materialised.
pub const FORMULA_TABLE_SITE_CAP: usize = 20;

/// Unnormalised stationary weight.
pub fn stationary_weight<T: Scalar>(beta: &Configuration, params: &ModelParams<T>) -> T {
    let counts = count_patterns(beta, params);
    let p1 = params.p1().clone();
    let vacancy = T::one() - p1.clone();
    let numerator = num_traits::pow(p1, counts.n1) * num_traits::pow(vacancy, counts.vacancy_exponent(params.m()));
    numerator / num_traits::pow(params.p2().clone(), counts.n0m1)
}

/// Sum of [`stationary_weight`] over all `2^n` configurations.
pub fn partition_brute_force<T: Scalar>(params: &ModelParams<T>) -> Result<T> {
    check_table_budget(params.n())?;
    Ok(Configuration::all(params.n())?
        .map(|beta| stationary_weight(&beta, params))
        .fold(T::zero(), |acc, w| acc + w))
}

fn check_table_budget(n: usize) -> Result<()> {
    if n > FORMULA_TABLE_SITE_CAP {
        return Err(Error::BudgetExceeded {
            n,
            cap: FORMULA_TABLE_SITE_CAP,
        });
    }
    Ok(())
}

/// Weights of all configurations normalised by their sum.
pub fn stationary_table_formula<T: Scalar>(params: &ModelParams<T>) -> Result<StationaryTable<T>> {
    check_table_budget(params.n())?;
    let n = params.n();
    let weights = par::map_indexed(1usize << n, |b| {
        stationary_weight(&Configuration::new(b as u64, n).expect("within budget"), params)
    });
    let z = weights.iter().fold(T::zero(), |acc, w| acc + w.clone());
    let probs = weights.into_iter().map(|w| w / z.clone()).collect();
    Ok(StationaryTable {
        params: params.clone(),
        source: Source::Formula,
        probs,
    })
}

/// The admissible `(M, N)` pairs for `k` ones on `n` sites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexPairSet {
    pub pairs: Vec<(usize, usize)>,
}

/// `M` ranges over `{0, .., n-k-m+1} ∪ {n-k}` (the first range is empty when
/// `n - k < m - 1`), `0 <= N <= floor((n-k-M)/(m-1))`, and `N = 0` exactly
/// when `M = n - k`.
pub fn enumerate_index_pairs(n: usize, m: usize, k: usize) -> IndexPairSet {
    assert!(k >= 1 && k <= n, "k = {k} outside 1..={n}");
    assert!(m >= 2);
    let free = n - k;
    let mut totals: Vec<usize> = match (free + 1).checked_sub(m) {
        Some(top) => (0..=top).collect(),
        None => Vec::new(),
    };
    if totals.last() != Some(&free) {
        totals.push(free);
    }
    let mut pairs = Vec::new();
    for total in totals {
        let max_runs = (free - total) / (m - 1);
        for runs in 0..=max_runs {
            if (runs == 0) == (total == free) {
                pairs.push((total, runs));
            }
        }
    }
    IndexPairSet { pairs }
}

/// Tuples `(x_1, .., x_{m-2})` with `0 <= x_s <= k` and `sum_s s x_s = M`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompositionSet {
    pub tuples: Vec<Vec<usize>>,
}

pub fn enumerate_compositions(total: usize, k: usize, m: usize) -> CompositionSet {
    assert!(m >= 2);
    let mut tuples = Vec::new();
    let mut current = vec![0usize; m - 2];
    fill_compositions(0, total, k, &mut current, &mut tuples);
    CompositionSet { tuples }
}

fn fill_compositions(slot: usize, remaining: usize, cap: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if slot == current.len() {
        if remaining == 0 {
            out.push(current.clone());
        }
        return;
    }
    let size = slot + 1;
    for x in 0..=cap.min(remaining / size) {
        current[slot] = x;
        fill_compositions(slot + 1, remaining - x * size, cap, current, out);
    }
    current[slot] = 0;
}

/// One signature class of the partition-function sum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightTerm {
    /// Number of ones.
    pub k: usize,
    /// `M = sum_s s x_s`, zeros sitting in short gaps.
    pub gap_total: usize,
    /// `N`, runs `0^{m-1}1` (each run at least `m - 1` zeros long).
    pub runs: usize,
    /// `x_s` for `s = 1..=m-2`.
    pub gaps: Vec<usize>,
    /// Configurations with this signature: `(n/k) * core`.
    pub multiplicity: BigUint,
    /// Configurations with this signature and site 1 occupied:
    /// multinomial times binomial.
    pub core: BigUint,
    pub p1_exponent: usize,
    pub vacancy_exponent: usize,
    /// Power of `p2` (always `-N`).
    pub p2_exponent: i64,
}

/// `binom(a, b)` with `binom(-1, -1) = 1` and zero for every other negative
/// or out-of-range argument.
pub fn binomial(a: i64, b: i64) -> BigUint {
    if a == -1 && b == -1 {
        return BigUint::one();
    }
    if a < 0 || b < 0 || b > a {
        return BigUint::zero();
    }
    let b = b.min(a - b) as u64;
    let a = a as u64;
    let mut acc = BigUint::one();
    for i in 0..b {
        acc = acc * BigUint::from(a - i) / BigUint::from(i + 1);
    }
    acc
}

/// `k! / prod(parts!)`, zero unless the parts are nonnegative and sum to `k`.
pub fn multinomial(k: usize, parts: &[i64]) -> BigUint {
    if parts.iter().any(|&p| p < 0) || parts.iter().sum::<i64>() != k as i64 {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    let mut placed = 0i64;
    for &p in parts {
        acc *= binomial(placed + p, p);
        placed += p;
    }
    acc
}

/// Every nonzero signature term for ring size `n` (the `k = 0` term, the
/// empty ring, is excluded).
pub fn weight_terms(n: usize, m: usize) -> Vec<WeightTerm> {
    assert!(m >= 2 && m <= n);
    let per_k = par::map_indexed(n, |i| terms_with_ones(n, m, i + 1));
    per_k.into_iter().flatten().collect()
}

fn terms_with_ones(n: usize, m: usize, k: usize) -> Vec<WeightTerm> {
    let mut out = Vec::new();
    for (gap_total, runs) in enumerate_index_pairs(n, m, k).pairs {
        for gaps in enumerate_compositions(gap_total, k, m).tuples {
            let short_gaps: usize = gaps.iter().sum();
            let mut parts: Vec<i64> = gaps.iter().map(|&x| x as i64).collect();
            parts.push(runs as i64);
            parts.push(k as i64 - runs as i64 - short_gaps as i64);
            let top = n as i64 - k as i64 - gap_total as i64 - (m as i64 - 2) * runs as i64 - 1;
            let core = multinomial(k, &parts) * binomial(top, runs as i64 - 1);
            if core.is_zero() {
                continue;
            }
            let (multiplicity, rem) = (BigUint::from(n) * &core).div_rem(&BigUint::from(k));
            debug_assert!(rem.is_zero(), "non-integral class size for n={n} m={m} k={k}");
            out.push(WeightTerm {
                k,
                gap_total,
                runs,
                gaps,
                multiplicity,
                core,
                p1_exponent: k,
                vacancy_exponent: gap_total + (m - 1) * runs,
                p2_exponent: -(runs as i64),
            });
        }
    }
    out
}

fn ln_biguint(x: &BigUint) -> f64 {
    let shift = x.bits().saturating_sub(64);
    let head = (x >> shift).to_f64().expect("64-bit head fits in f64");
    head.ln() + shift as f64 * std::f64::consts::LN_2
}

fn ln_monomial(term: &WeightTerm, params: &ModelParams) -> f64 {
    let (p1, p2) = params.rates();
    term.p1_exponent as f64 * p1.ln()
        + term.vacancy_exponent as f64 * (1.0 - p1).ln()
        + term.p2_exponent as f64 * p2.ln()
}

/// Partition function from the signature sum. Each term is evaluated as
/// `exp(ln multiplicity + ln monomial)` so large multiplicities never
/// overflow on their own.
pub fn partition_formula(params: &ModelParams) -> f64 {
    1.0 + weight_terms(params.n(), params.m())
        .iter()
        .map(|t| (ln_biguint(&t.multiplicity) + ln_monomial(t, params)).exp())
        .sum::<f64>()
}

/// Stationary probability that site 1 is occupied.
pub fn density_formula(params: &ModelParams) -> f64 {
    let occupied = weight_terms(params.n(), params.m())
        .iter()
        .map(|t| (ln_biguint(&t.core) + ln_monomial(t, params)).exp())
        .sum::<f64>();
    occupied / partition_formula(params)
}

fn exact_monomial(term: &WeightTerm, params: &ModelParams<BigRational>) -> BigRational {
    let p1 = params.p1().clone();
    let vacancy = BigRational::one() - p1.clone();
    num_traits::pow(p1, term.p1_exponent) * num_traits::pow(vacancy, term.vacancy_exponent)
        / num_traits::pow(params.p2().clone(), term.runs)
}

fn to_rational(x: &BigUint) -> BigRational {
    BigRational::from_integer(x.clone().into())
}

pub fn partition_formula_exact(params: &ModelParams<BigRational>) -> BigRational {
    weight_terms(params.n(), params.m())
        .iter()
        .fold(BigRational::one(), |acc, t| {
            acc + to_rational(&t.multiplicity) * exact_monomial(t, params)
        })
}

pub fn density_formula_exact(params: &ModelParams<BigRational>) -> BigRational {
    let occupied = weight_terms(params.n(), params.m())
        .iter()
        .fold(BigRational::zero(), |acc, t| {
            acc + to_rational(&t.core) * exact_monomial(t, params)
        });
    occupied / partition_formula_exact(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn binomial_conventions() {
        assert_eq!(binomial(-1, -1), BigUint::one());
        assert_eq!(binomial(3, -1), BigUint::zero());
        assert_eq!(binomial(0, -1), BigUint::zero());
        assert_eq!(binomial(2, 3), BigUint::zero());
        assert_eq!(binomial(-2, 1), BigUint::zero());
        assert_eq!(binomial(0, 0), BigUint::one());
        assert_eq!(binomial(10, 3), BigUint::from(120u32));
        assert_eq!(multinomial(4, &[1, 1, 2]), BigUint::from(12u32));
        assert_eq!(multinomial(2, &[3, -1]), BigUint::zero());
    }

    #[test]
    fn weights_of_example_configurations() {
        let p = ModelParams::new(3, 2, 0.3, 0.6).unwrap();
        assert_eq!(stationary_weight(&Configuration::zeros(3).unwrap(), &p), 1.0);
        assert!((stationary_weight(&Configuration::ones(3).unwrap(), &p) - 0.027).abs() < 1e-15);
        let p = ModelParams::new(5, 3, 0.3, 0.6).unwrap();
        let w = stationary_weight(&Configuration::from_binary("10010").unwrap(), &p);
        assert!((w - 0.09 * 0.343 / 0.6).abs() < 1e-15);
    }

    #[test]
    fn index_pairs_boundary_and_small_cases() {
        assert_eq!(enumerate_index_pairs(3, 2, 3).pairs, vec![(0, 0)]);
        assert_eq!(
            enumerate_index_pairs(3, 2, 1).pairs,
            vec![(0, 1), (0, 2), (1, 1), (2, 0)]
        );
        // n - k = m - 1: zero still belongs to the range
        assert_eq!(enumerate_index_pairs(2, 2, 1).pairs, vec![(0, 1), (1, 0)]);
        // n - k < m - 1: only M = n - k
        assert_eq!(enumerate_index_pairs(5, 4, 4).pairs, vec![(1, 0)]);
    }

    #[test]
    fn index_pairs_match_brute_force_filter() {
        let (n, m, k) = (5, 3, 2);
        let free = n - k;
        let mut expected = Vec::new();
        for total in 0..=free {
            for runs in 0..=free {
                let total_ok = total + m <= free + 1 || total == free;
                let runs_ok = runs <= (free - total) / (m - 1);
                let zero_ok = (runs == 0) == (total == free);
                if total_ok && runs_ok && zero_ok {
                    expected.push((total, runs));
                }
            }
        }
        assert_eq!(enumerate_index_pairs(n, m, k).pairs, expected);
    }

    #[test]
    fn compositions() {
        assert_eq!(enumerate_compositions(0, 3, 2).tuples, vec![Vec::<usize>::new()]);
        assert!(enumerate_compositions(2, 3, 2).tuples.is_empty());
        assert_eq!(enumerate_compositions(3, 2, 4).tuples, vec![vec![1, 1]]);
        assert_eq!(enumerate_compositions(2, 5, 3).tuples, vec![vec![2]]);
        for tuple in enumerate_compositions(7, 3, 5).tuples {
            assert_eq!(tuple.iter().enumerate().map(|(i, x)| (i + 1) * x).sum::<usize>(), 7);
            assert!(tuple.iter().all(|&x| x <= 3));
        }
    }

    #[test]
    fn three_site_partition_function_factorises_exactly() {
        for (p1, p2) in [(q(1, 2), q(1, 3)), (q(2, 7), q(5, 9)), (q(3, 4), q(1, 1))] {
            let params = ModelParams::new(3, 2, p1.clone(), p2.clone()).unwrap();
            let one = BigRational::one();
            let three = q(3, 1);
            let factored = (one.clone() + p1.clone())
                * (three.clone() * p1.clone() - three * p1.clone() * p1.clone() + p2.clone() - p1.clone() * p2.clone()
                    + p1.clone() * p1.clone() * p2.clone())
                / p2.clone();
            assert_eq!(partition_formula_exact(&params), factored);
            assert_eq!(partition_brute_force(&params).unwrap(), factored);
        }
    }

    #[test]
    fn reversible_line_is_a_product_measure() {
        // With p1 + p2 = 1 every weight reduces to p1^{N_1}.
        let p1 = q(2, 5);
        let params = ModelParams::new(5, 2, p1.clone(), BigRational::one() - p1.clone()).unwrap();
        assert_eq!(
            partition_formula_exact(&params),
            num_traits::pow(BigRational::one() + p1, 5)
        );
    }

    #[test]
    fn density_is_small_for_tiny_deposition() {
        let p = ModelParams::new(8, 3, 1e-6, 0.5).unwrap();
        assert!(density_formula(&p) < 1e-5);
    }

    #[test]
    fn large_ring_partition_function_is_finite() {
        let p = ModelParams::new(30, 3, 0.4, 0.3).unwrap();
        let z = partition_formula(&p);
        assert!(z.is_finite() && z > 1.0);
    }
}
