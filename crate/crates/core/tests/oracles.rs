//! Worked examples checked against independent reference computations:
//! string-based rule evaluation, exhaustive enumeration, dense linear
//! algebra and hand-derived values.

use approx::assert_relative_eq;
use nedpca::closed_forms::{
    density_formula, enumerate_compositions, enumerate_index_pairs, partition_brute_force, partition_formula,
    stationary_table_formula, stationary_weight, weight_terms,
};
use nedpca::exact::{
    audit_detailed_balance, balance_residual, build_matrix, check_irreducible_aperiodic, reversibility_ratio,
    solve_stationary, StationaryTable,
};
use nedpca::m2::{
    asymptotic_z2, density_series, free_energy, pole_data, z2_log_recurrence, z2_recurrence, z2_series, PoleData,
};
use nedpca::model::{count_patterns, transition_prob};
use nedpca::montecarlo::{run, tv_distance, SimulationPlan};
use nedpca::scalar::parse_rational;
use nedpca::{Configuration, ModelParams};
use num_rational::BigRational;
use std::collections::HashMap;

fn cfg(s: &str) -> Configuration {
    Configuration::from_binary(s).unwrap()
}

fn params(n: usize, m: usize, p1: f64, p2: f64) -> ModelParams {
    ModelParams::new(n, m, p1, p2).unwrap()
}

/// Cyclic occurrences of `pattern` in `text`.
fn cyclic_occurrences(text: &str, pattern: &str) -> usize {
    let t: Vec<char> = text.chars().collect();
    let p: Vec<char> = pattern.chars().collect();
    (0..t.len())
        .filter(|&i| p.iter().enumerate().all(|(j, c)| t[(i + j) % t.len()] == *c))
        .count()
}

/// One-step probability from the three local rules, read off strings.
fn rule_probability(alpha: &str, beta: &str, m: usize, p1: f64, p2: f64) -> f64 {
    let a: Vec<u8> = alpha.bytes().map(|b| b - b'0').collect();
    let b: Vec<u8> = beta.bytes().map(|b| b - b'0').collect();
    let n = a.len();
    let mut prob = 1.0;
    for i in 0..n {
        let window: Vec<u8> = (0..m).map(|j| a[(i + j) % n]).collect();
        let head_empty = window[..m - 1].iter().all(|&x| x == 0);
        let fire = if head_empty && window[m - 1] == 0 {
            p1
        } else if head_empty {
            1.0 - p2
        } else {
            0.0
        };
        prob *= if b[i] == 1 { fire } else { 1.0 - fire };
    }
    prob
}

// core model

#[test]
fn pattern_counts_match_substring_counts() {
    for n in 3..=9 {
        for m in 2..=n.min(5) {
            let p = params(n, m, 0.3, 0.5);
            for beta in Configuration::all(n).unwrap() {
                let s = beta.to_binary();
                let counts = count_patterns(&beta, &p);
                assert_eq!(counts.n1, cyclic_occurrences(&s, "1"));
                for r in 1..=m - 2 {
                    let pat = format!("1{}1", "0".repeat(r));
                    assert_eq!(counts.gap(r), cyclic_occurrences(&s, &pat), "{s} r={r}");
                }
                let pat = format!("{}1", "0".repeat(m - 1));
                assert_eq!(counts.n0m1, cyclic_occurrences(&s, &pat), "{s}");
            }
        }
    }
}

#[test]
fn pattern_count_examples() {
    let c = count_patterns(&cfg("011"), &params(3, 2, 0.3, 0.5));
    assert_eq!((c.n1, c.n0m1), (2, 1));
    let c = count_patterns(&cfg("10010"), &params(5, 3, 0.3, 0.5));
    assert_eq!((c.n1, c.gap(1), c.n0m1), (2, 1, 1));
}

#[test]
fn transition_probabilities_match_rules() {
    for (n, m, p1, p2) in [
        (3, 2, 0.3, 0.5),
        (4, 2, 0.7, 1.0),
        (5, 3, 0.2, 0.9),
        (6, 4, 0.6, 0.3),
        (5, 5, 0.4, 0.4),
    ] {
        let p = params(n, m, p1, p2);
        let states: Vec<Configuration> = Configuration::all(n).unwrap().collect();
        for a in &states {
            for b in &states {
                let expected = rule_probability(&a.to_binary(), &b.to_binary(), m, p1, p2);
                let got = transition_prob(a, b, &p);
                assert!((got - expected).abs() < 1e-15, "{a} -> {b}: {got} vs {expected}");
            }
        }
    }
}

#[test]
fn transition_probability_examples() {
    let (p1, p2) = (0.3, 0.5);
    for n in 2..=7 {
        let zeros = Configuration::zeros(n).unwrap();
        assert_relative_eq!(
            transition_prob(&zeros, &zeros, &params(n, 2, p1, p2)),
            (1.0 - p1).powi(n as i32)
        );
    }
    assert_relative_eq!(
        transition_prob(&cfg("011"), &cfg("100"), &params(3, 2, p1, p2)),
        1.0 - p2
    );
    assert_eq!(transition_prob(&cfg("11"), &cfg("11"), &params(2, 2, p1, p2)), 0.0);
}

// exact solver

#[test]
fn three_site_empty_row() {
    let (p1, p2) = (0.3, 0.5);
    let matrix = build_matrix(&params(3, 2, p1, p2)).unwrap();
    assert_relative_eq!(*matrix.prob(&cfg("000"), &cfg("000")), (1.0 - p1).powi(3));
    assert_relative_eq!(*matrix.prob(&cfg("000"), &cfg("111")), p1.powi(3));
    let row: f64 = matrix.row(0).iter().sum();
    assert!((row - 1.0).abs() < 1e-15);
}

#[test]
fn two_site_full_row_is_point_mass() {
    let matrix = build_matrix(&params(2, 2, 0.3, 0.5)).unwrap();
    assert_eq!(matrix.row(0b11), &[1.0, 0.0, 0.0, 0.0]);
}

#[test]
fn solver_matches_formula_tables() {
    for (n, m, p1, p2) in [(4, 3, 0.3, 0.7), (6, 4, 0.4, 0.8), (7, 2, 0.9, 0.2), (8, 5, 0.5, 1.0)] {
        let p = params(n, m, p1, p2);
        let solved = solve_stationary(&build_matrix(&p).unwrap()).unwrap();
        assert!(
            stationary_table_formula(&p).unwrap().sup_distance(&solved) < 1e-10,
            "n={n} m={m}"
        );
    }
}

#[test]
fn three_site_vector_proportions() {
    let (p1, p2) = (0.5, 0.5);
    let solved = solve_stationary(&build_matrix(&params(3, 2, p1, p2)).unwrap()).unwrap();
    let q = (1.0 - p1) * p1 / p2;
    let weights = [1.0, q, q, q * p1, q, q * p1, q * p1, p1.powi(3)];
    let z: f64 = weights.iter().sum();
    for (i, s) in ["000", "001", "010", "011", "100", "101", "110", "111"]
        .iter()
        .enumerate()
    {
        assert_relative_eq!(*solved.prob(&cfg(s)), weights[i] / z, max_relative = 1e-13);
    }
}

#[test]
fn formula_tables_satisfy_balance_equation() {
    for n in 2..=9 {
        for m in 2..=n.min(4) {
            for (p1, p2) in [(0.1, 0.2), (0.5, 0.6), (0.9, 1.0), (0.3, 0.8)] {
                let p = params(n, m, p1, p2);
                let matrix = build_matrix(&p).unwrap();
                let table = stationary_table_formula(&p).unwrap();
                assert!(balance_residual(&table, &matrix) < 1e-10, "n={n} m={m} ({p1},{p2})");
            }
        }
    }
}

#[test]
fn uniform_distribution_is_not_stationary() {
    let p = params(3, 2, 0.5, 0.5);
    let matrix = build_matrix(&p).unwrap();
    let uniform = StationaryTable {
        params: p,
        source: nedpca::exact::Source::Formula,
        probs: vec![0.125; 8],
    };
    assert!(balance_residual(&uniform, &matrix) > 1e-2);
}

#[test]
fn certificate_at_blocking_probability_one() {
    assert!(check_irreducible_aperiodic(
        &build_matrix(&params(3, 2, 0.4, 1.0)).unwrap()
    ));
}

#[test]
fn detailed_balance_examples() {
    let audit_for = |n, m, p1, p2| {
        let p = params(n, m, p1, p2);
        let matrix = build_matrix(&p).unwrap();
        audit_detailed_balance(&solve_stationary(&matrix).unwrap(), &matrix)
    };
    assert!(audit_for(5, 2, 0.3, 0.7).max_violation < 1e-12);
    assert!(audit_for(5, 2, 0.3, 0.5).max_violation > 1e-8);
    for (p1, p2) in [(0.3, 0.5), (0.8, 0.2), (0.5, 1.0)] {
        let audit = audit_for(4, 3, p1, p2);
        let (a, b) = audit.one_way_witness.expect("one-way pair");
        let p = params(4, 3, p1, p2);
        assert!(transition_prob(&a, &b, &p) > 0.0);
        assert_eq!(transition_prob(&b, &a, &p), 0.0);
    }
}

#[test]
fn three_site_window_on_three_sites_is_reversible_without_blocking() {
    // With p2 = 1 the window 001 never deposits, and for n = m = 3 every
    // positive transition has a positive reverse.
    for p1 in ["1/10", "1/3", "9/10"] {
        let p = ModelParams::new(3, 3, parse_rational(p1).unwrap(), parse_rational("1").unwrap()).unwrap();
        let matrix = build_matrix(&p).unwrap();
        let audit = audit_detailed_balance(&solve_stationary(&matrix).unwrap(), &matrix);
        assert_eq!(audit.max_violation, BigRational::from_integer(0.into()), "p1={p1}");
        assert!(audit.one_way_witness.is_none());
    }
    let p = ModelParams::new(3, 3, parse_rational("1/3").unwrap(), parse_rational("1/2").unwrap()).unwrap();
    let matrix = build_matrix(&p).unwrap();
    assert!(audit_detailed_balance(&solve_stationary(&matrix).unwrap(), &matrix).one_way_witness.is_some());
}

#[test]
fn two_site_ring_is_reversible_everywhere() {
    for (p1, p2) in [(0.1, 0.2), (0.3, 0.5), (0.9, 1.0), (0.6, 0.9)] {
        let p = params(2, 2, p1, p2);
        let matrix = build_matrix(&p).unwrap();
        assert!(audit_detailed_balance(&solve_stationary(&matrix).unwrap(), &matrix).max_violation < 1e-12);
    }
}

#[test]
fn reversibility_ratio_examples() {
    let p = params(4, 2, 0.3, 0.5);
    let r = reversibility_ratio(&cfg("0101"), &cfg("1010"), &p).unwrap();
    assert!((r.direct - r.closed_form).abs() < 1e-12 * r.closed_form.abs());
    let same = reversibility_ratio(&cfg("0000"), &cfg("0000"), &p).unwrap();
    assert!((same.direct - 1.0).abs() < 1e-12);
    let line = params(5, 2, 0.35, 0.65);
    let states: Vec<Configuration> = Configuration::all(5).unwrap().collect();
    for a in &states {
        for b in &states {
            if transition_prob(a, b, &line) > 0.0 && transition_prob(b, a, &line) > 0.0 {
                let r = reversibility_ratio(a, b, &line).unwrap();
                assert!((r.direct - 1.0).abs() < 1e-12, "{a} {b} {}", r.direct);
            }
        }
    }
}

// closed forms

#[test]
fn stationary_weight_examples() {
    let (p1, p2) = (0.3, 0.5);
    assert_eq!(
        stationary_weight(&Configuration::zeros(5).unwrap(), &params(5, 3, p1, p2)),
        1.0
    );
    assert_relative_eq!(stationary_weight(&cfg("111"), &params(3, 2, p1, p2)), p1.powi(3));
    assert_relative_eq!(
        stationary_weight(&cfg("10010"), &params(5, 3, p1, p2)),
        p1 * p1 * (1.0 - p1).powi(3) / p2
    );
}

#[test]
fn index_pairs_match_filtered_box() {
    for n in 2..=12 {
        for m in 2..=n {
            for k in 1..=n {
                let free = n - k;
                let mut expected = Vec::new();
                for total in 0..=free {
                    let in_range = total + m <= free + 1 || total == free;
                    for runs in 0..=free {
                        if in_range && runs * (m - 1) <= free - total && ((runs == 0) == (total == free)) {
                            expected.push((total, runs));
                        }
                    }
                }
                assert_eq!(enumerate_index_pairs(n, m, k).pairs, expected, "n={n} m={m} k={k}");
            }
        }
    }
}

#[test]
fn index_pair_examples() {
    assert_eq!(enumerate_index_pairs(3, 2, 3).pairs, vec![(0, 0)]);
    assert_eq!(
        enumerate_index_pairs(3, 2, 1).pairs,
        vec![(0, 1), (0, 2), (1, 1), (2, 0)]
    );
    for (total, runs) in enumerate_index_pairs(5, 3, 2).pairs {
        assert!(runs * 2 <= 3 - total);
        assert_eq!(runs == 0, total == 3);
    }
}

#[test]
fn composition_examples() {
    assert_eq!(enumerate_compositions(0, 3, 2).tuples, vec![Vec::<usize>::new()]);
    assert!(enumerate_compositions(2, 3, 2).tuples.is_empty());
    assert_eq!(enumerate_compositions(3, 2, 4).tuples, vec![vec![1, 1]]);
    assert_eq!(enumerate_compositions(2, 5, 3).tuples, vec![vec![2]]);
}

/// `(k, short gap counts, long gap count)` of a nonempty configuration.
fn signature(beta: &Configuration, m: usize) -> (usize, Vec<usize>, usize) {
    let p = ModelParams::new(beta.len(), m, 0.5, 0.5).unwrap();
    let c = count_patterns(beta, &p);
    (c.n1, c.n10r1, c.n0m1)
}

#[test]
fn term_multiplicities_count_configurations() {
    for n in 2..=10 {
        for m in 2..=n.min(5) {
            let mut classes: HashMap<(usize, Vec<usize>, usize), (u64, u64)> = HashMap::new();
            for beta in Configuration::all(n).unwrap().skip(1) {
                let entry = classes.entry(signature(&beta, m)).or_default();
                entry.0 += 1;
                entry.1 += beta.site(1) as u64;
            }
            let terms = weight_terms(n, m);
            assert_eq!(terms.len(), classes.len(), "n={n} m={m}");
            for t in terms {
                let (all, occupied) = classes[&(t.k, t.gaps.clone(), t.runs)];
                assert_eq!(t.multiplicity, all.into(), "n={n} m={m} {t:?}");
                assert_eq!(t.core, occupied.into(), "n={n} m={m} {t:?}");
            }
        }
    }
}

#[test]
fn partition_function_examples() {
    let p = params(12, 5, 0.3, 0.6);
    assert_relative_eq!(
        partition_formula(&p),
        partition_brute_force(&p).unwrap(),
        max_relative = 1e-9
    );
    for (p1, p2) in [(0.3f64, 0.5), (0.8, 1.0)] {
        let z3 = 1.0 + 3.0 * p1 * (1.0 - p1) / p2 * (1.0 + p1) + p1.powi(3);
        let factored = (1.0 + p1) * (3.0 * p1 - 3.0 * p1 * p1 + p2 - p1 * p2 + p1 * p1 * p2) / p2;
        assert_relative_eq!(z3, factored, max_relative = 1e-14);
        assert_relative_eq!(partition_formula(&params(3, 2, p1, p2)), factored, max_relative = 1e-13);
    }
}

#[test]
fn partition_function_on_reversible_line() {
    for p1 in [0.2, 0.5, 0.75] {
        let p = params(5, 2, p1, 1.0 - p1);
        assert_relative_eq!(
            partition_formula(&p),
            partition_brute_force(&p).unwrap(),
            max_relative = 1e-13
        );
        assert_relative_eq!(partition_formula(&p), (1.0 + p1).powi(5), max_relative = 1e-13);
    }
}

#[test]
fn density_matches_site_and_mean_sums() {
    for n in 2..=12 {
        for m in 2..=n.min(5) {
            let p = params(n, m, 0.35, 0.45);
            let table = stationary_table_formula(&p).unwrap();
            let site_one: f64 = (0..table.probs.len())
                .filter(|b| b & 1 == 1)
                .map(|b| table.probs[b])
                .sum();
            let mean: f64 = table
                .probs
                .iter()
                .enumerate()
                .map(|(b, q)| (b as u64).count_ones() as f64 * q)
                .sum::<f64>()
                / n as f64;
            let rho = density_formula(&p);
            assert!(
                (rho - site_one).abs() < 1e-10 && (rho - mean).abs() < 1e-10,
                "n={n} m={m}"
            );
        }
    }
    assert!(density_formula(&params(8, 3, 1e-6, 0.5)) < 1e-5);
}

// m = 2 analytics

#[test]
fn recurrence_matches_signature_sum() {
    for (p1, p2) in [(0.1, 0.2), (0.5, 0.5), (0.7, 1.0), (0.9, 0.4)] {
        let z = z2_recurrence(12, p1, p2).unwrap();
        for n in 2..=12 {
            assert_relative_eq!(z[n], partition_formula(&params(n, 2, p1, p2)), max_relative = 1e-9);
        }
        let s = z2_series(50, p1, p2).unwrap();
        let z = z2_recurrence(50, p1, p2).unwrap();
        for n in 0..=50 {
            assert_relative_eq!(s.coeffs[n], z[n], max_relative = 1e-8);
        }
    }
}

#[test]
fn recurrence_holds_on_signature_sums() {
    for (p1, p2) in [(0.2, 0.3), (0.6, 0.9), (0.4, 0.6)] {
        let z: Vec<f64> = (2..=12).map(|n| partition_formula(&params(n, 2, p1, p2))).collect();
        for i in 0..z.len() - 2 {
            let lhs = p1 * (1.0 - p1 - p2) * z[i] + p2 * (1.0 + p1) * z[i + 1] - p2 * z[i + 2];
            assert!(lhs.abs() < 1e-8 * p2 * z[i + 2], "n={}", i + 2);
        }
    }
}

#[test]
fn density_series_ratios() {
    for (p1, p2) in [(0.3, 0.5), (0.9, 0.2), (0.1, 1.0)] {
        let d = density_series(40, p1, p2).unwrap();
        let z = z2_series(40, p1, p2).unwrap();
        assert!((d.coeffs[1] - p1).abs() < 1e-15);
        for n in 1..=40 {
            let ratio = d.coeffs[n] / z.coeffs[n];
            assert!(ratio > 0.0 && ratio < 1.0);
            if (2..=12).contains(&n) {
                assert!((ratio - density_formula(&params(n, 2, p1, p2))).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn free_energy_examples() {
    assert_relative_eq!(free_energy(0.4, 0.6).unwrap(), 1.4f64.ln());
    let f = free_energy(0.3, 0.5).unwrap();
    assert!((f + pole_data(0.3, 0.5).unwrap().x_plus.ln()).abs() < 1e-12);
    let logs = z2_log_recurrence(400, 0.3, 0.5).unwrap();
    assert!((logs[400] / 400.0 - f).abs() < 2e-2);
    assert!((logs[201] - logs[200] - f).abs() < 1e-8);
}

#[test]
fn free_energy_is_continuous_across_the_line() {
    for p1 in [0.1, 0.4, 0.8] {
        for eps in [1e-6, -1e-6] {
            assert!((free_energy(p1, 1.0 - p1 + eps).unwrap() - (1.0 + p1).ln()).abs() < 1e-4);
        }
    }
}

#[test]
fn poles_on_a_nine_by_nine_grid() {
    for i in 1..=9 {
        for j in 1..=9 {
            let (p1, p2) = (i as f64 / 10.0, j as f64 / 9.0);
            if (p1 + p2 - 1.0).abs() < 1e-9 {
                continue;
            }
            let poles = pole_data(p1, p2).unwrap();
            assert!(poles.x_plus.abs() < poles.x_minus.abs(), "({p1},{p2})");
            for x in [poles.x_plus, poles.x_minus] {
                // x_- grows without bound near the line, so compare with the
                // size of the terms being cancelled
                let scale = p2 + p2 * x.abs() * (1.0 + p1) + x * x * p1 * (1.0 - p1 - p2).abs();
                assert!(
                    PoleData::denominator_at(p1, p2, x).abs() < 1e-12 * scale.max(1.0),
                    "({p1},{p2}) {x}"
                );
            }
        }
    }
}

#[test]
fn leading_pole_tends_to_the_linear_root() {
    for p1 in [0.2, 0.5, 0.7] {
        for q2 in [1.0 + 1e-6, 1.0 - 1e-6] {
            let p2 = (1.0 - p1) / q2;
            let poles = pole_data(p1, p2).unwrap();
            assert!((poles.x_plus - 1.0 / (1.0 + p1)).abs() < 1e-5, "p1={p1} q2={q2}");
        }
    }
}

#[test]
fn asymptotic_examples() {
    let z = z2_recurrence(50, 0.3, 0.5).unwrap();
    assert!((asymptotic_z2(50, 0.3, 0.5).unwrap() / z[50] - 1.0).abs() < 1e-6);
    let z = z2_recurrence(40, 0.9, 1.0).unwrap();
    let err = |n: usize| (asymptotic_z2(n, 0.9, 1.0).unwrap() / z[n] - 1.0).abs();
    assert!(err(10) > err(20) && err(20) > err(40));
}

// Monte Carlo

fn plan(n: usize, m: usize, p1: f64, p2: f64, seed: u64) -> SimulationPlan {
    let mut plan = SimulationPlan::new(params(n, m, p1, p2));
    plan.seed = seed;
    plan.chains = 4;
    plan.samples = 250_000;
    plan
}

#[test]
fn simulated_density_matches_formula() {
    let plan = plan(8, 2, 0.3, 0.5, 11);
    let s = run(&plan).unwrap();
    let rho = density_formula(&plan.params);
    assert!((s.density_mean.unwrap() - rho).abs() < 4.0 * s.density_stderr.unwrap());
}

#[test]
fn simulated_histogram_matches_exact_table() {
    let mut plan = plan(6, 3, 0.4, 0.8, 12);
    plan.histogram = true;
    let s = run(&plan).unwrap();
    assert_eq!(s.histogram.as_ref().unwrap().iter().sum::<u64>(), 1_000_000);
    assert!(tv_distance(&s, &stationary_table_formula(&plan.params).unwrap()).unwrap() < 0.01);
}

#[test]
fn simulation_from_full_ring_converges() {
    let mut plan = plan(6, 2, 0.6, 0.3, 13);
    plan.initial = Some(Configuration::ones(6).unwrap());
    plan.histogram = true;
    let s = run(&plan).unwrap();
    assert!(tv_distance(&s, &stationary_table_formula(&plan.params).unwrap()).unwrap() < 0.01);
}

#[test]
fn tv_distance_guards() {
    let mut plan = plan(4, 2, 0.3, 0.5, 1);
    plan.samples = 100;
    let no_hist = run(&plan).unwrap();
    let table = stationary_table_formula(&plan.params).unwrap();
    assert!(tv_distance(&no_hist, &table).is_err());
    plan.histogram = true;
    let s = run(&plan).unwrap();
    let other = stationary_table_formula(&params(5, 2, 0.3, 0.5)).unwrap();
    assert!(matches!(
        tv_distance(&s, &other),
        Err(nedpca::Error::DimensionMismatch { .. })
    ));
}
