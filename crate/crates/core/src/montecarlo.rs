//! Seeded multi-chain simulation.
//!
//! Chain `c` draws from stream `c` of the plan seed, so a run is a pure
//! function of the plan. Chains run in parallel (feature `parallel`) and are
//! reduced in chain order; every accumulator is an integer count, so the
//! summary does not depend on the thread count.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{tv_distance_vec, StationaryTable};
use crate::kernel::{BitKernel, ScalarKernel, StepKernel};
use crate::model::{ring_mask, rotate_toward_one, zero_run_mask, Configuration, ModelParams, MAX_SITES};
use crate::par;
use crate::rng::ChainRng;

/// Number of batches for batch-means error bars.
pub const BATCHES: usize = 32;

/// Default burn-in. Empirical: no mixing-time bound is known, and 10^4
/// steps is far beyond the observed relaxation for rings up to 64 sites.
pub const DEFAULT_BURN_IN: u64 = 10_000;

/// Histograms are only kept for rings up to this size.
pub const HISTOGRAM_SITE_CAP: usize = 16;

/// Trace output is truncated after this many configurations.
pub const TRACE_LINE_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    #[default]
    BitParallel,
    Scalar,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationPlan {
    pub params: ModelParams,
    pub seed: u64,
    pub chains: usize,
    pub burn_in: u64,
    /// Recorded samples per chain.
    pub samples: u64,
    /// Steps between recorded samples.
    pub thin: u64,
    /// Start state of every chain; `0^n` when unset.
    pub initial: Option<Configuration>,
    pub histogram: bool,
    pub kernel: KernelChoice,
}

impl SimulationPlan {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            seed: 0,
            chains: 1,
            burn_in: DEFAULT_BURN_IN,
            samples: 100_000,
            thin: 1,
            initial: None,
            histogram: false,
            kernel: KernelChoice::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.params.n();
        if n > MAX_SITES {
            return Err(Error::InvalidPlan(format!("n = {n} exceeds the {MAX_SITES}-site word")));
        }
        if self.chains == 0 {
            return Err(Error::InvalidPlan("chains must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::InvalidPlan("thin must be at least 1".into()));
        }
        if self.histogram && n > HISTOGRAM_SITE_CAP {
            return Err(Error::InvalidPlan(format!(
                "histogram needs n <= {HISTOGRAM_SITE_CAP}, got {n}"
            )));
        }
        if let Some(start) = &self.initial {
            if start.len() != n {
                return Err(Error::InvalidPlan(format!(
                    "initial state has {} sites, expected {n}",
                    start.len()
                )));
            }
        }
        Ok(())
    }

    fn start(&self) -> Configuration {
        self.initial
            .unwrap_or_else(|| Configuration::from_bits_unchecked(0, self.params.n()))
    }
}

/// Per-site averages of the pattern statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternMeans {
    pub n1: f64,
    /// `n10r1[r - 1]` is the mean of `N_{10^r1} / n`.
    pub n10r1: Vec<f64>,
    pub n0m1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSummary {
    pub n: usize,
    pub m: usize,
    pub p1: f64,
    pub p2: f64,
    pub seed: u64,
    pub chains: usize,
    pub burn_in: u64,
    pub thin: u64,
    pub samples_per_chain: u64,
    pub total_samples: u64,
    /// `None` when nothing was recorded.
    pub density_mean: Option<f64>,
    /// `None` unless every one of the [`BATCHES`] batches is nonempty.
    pub density_stderr: Option<f64>,
    pub pattern_means: Option<PatternMeans>,
    pub histogram: Option<Vec<u64>>,
    /// Wall-clock throughput; the only field that varies between runs.
    pub steps_per_second: f64,
}

impl EmpiricalSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    /// Visit frequencies, if a histogram was kept and anything was recorded.
    pub fn empirical_distribution(&self) -> Option<Vec<f64>> {
        let hist = self.histogram.as_ref()?;
        if self.total_samples == 0 {
            return None;
        }
        let total = self.total_samples as f64;
        Some(hist.iter().map(|&c| c as f64 / total).collect())
    }

    /// Equality ignoring the throughput measurement.
    pub fn same_statistics(&self, other: &EmpiricalSummary) -> bool {
        let mut a = self.clone();
        a.steps_per_second = other.steps_per_second;
        a == *other
    }
}

#[derive(Debug, Clone)]
struct ChainTally {
    batch_ones: [u64; BATCHES],
    batch_samples: [u64; BATCHES],
    ones: u64,
    gaps: Vec<u64>,
    runs: u64,
    histogram: Option<Vec<u64>>,
}

impl ChainTally {
    fn new(m: usize, hist_size: Option<usize>) -> Self {
        Self {
            batch_ones: [0; BATCHES],
            batch_samples: [0; BATCHES],
            ones: 0,
            gaps: vec![0; m - 2],
            runs: 0,
            histogram: hist_size.map(|s| vec![0; s]),
        }
    }

    fn record(&mut self, x: u64, n: usize, m: usize, batch: usize) {
        let ones = x.count_ones() as u64;
        self.ones += ones;
        self.batch_ones[batch] += ones;
        self.batch_samples[batch] += 1;
        let mut gap = x;
        for (r, slot) in self.gaps.iter_mut().enumerate() {
            let r = r + 1;
            gap &= !rotate_toward_one(x, r, n);
            *slot += (gap & rotate_toward_one(x, r + 1, n)).count_ones() as u64;
        }
        self.runs += (zero_run_mask(x, m - 1, n) & rotate_toward_one(x, m - 1, n)).count_ones() as u64;
        if let Some(h) = self.histogram.as_mut() {
            h[x as usize] += 1;
        }
    }
}

fn run_chain<K: StepKernel>(kernel: &K, plan: &SimulationPlan, chain: usize) -> ChainTally {
    let n = plan.params.n();
    let m = plan.params.m();
    let hist = plan.histogram.then(|| 1usize << n);
    let mut tally = ChainTally::new(m, hist);
    let mut rng = ChainRng::with_stream(plan.seed, chain as u64);
    let mut state = plan.start();
    for _ in 0..plan.burn_in {
        state = kernel.step(state, &mut rng);
    }
    let samples = plan.samples;
    for j in 0..samples {
        for _ in 0..plan.thin {
            state = kernel.step(state, &mut rng);
        }
        let batch = ((j as u128 * BATCHES as u128) / samples as u128) as usize;
        tally.record(state.bits(), n, m, batch);
    }
    debug_assert_eq!(state.bits() & !ring_mask(n), 0);
    tally
}

/// Runs every chain of the plan, in parallel when the `parallel` feature is
/// enabled.
pub fn run(plan: &SimulationPlan) -> Result<EmpiricalSummary> {
    execute(plan, false)
}

/// Same result as [`run`], always on the calling thread.
pub fn run_sequential(plan: &SimulationPlan) -> Result<EmpiricalSummary> {
    execute(plan, true)
}

fn execute(plan: &SimulationPlan, sequential: bool) -> Result<EmpiricalSummary> {
    plan.validate()?;
    let started = Instant::now();
    let tallies = match plan.kernel {
        KernelChoice::BitParallel => {
            let kernel = BitKernel::new(&plan.params)?;
            run_chains(plan, sequential, |c| run_chain(&kernel, plan, c))
        }
        KernelChoice::Scalar => {
            let kernel = ScalarKernel::new(&plan.params)?;
            run_chains(plan, sequential, |c| run_chain(&kernel, plan, c))
        }
    };
    let elapsed = started.elapsed().as_secs_f64();
    let steps = plan.chains as f64 * (plan.burn_in + plan.samples * plan.thin) as f64;
    Ok(summarise(
        plan,
        &tallies,
        if elapsed > 0.0 { steps / elapsed } else { 0.0 },
    ))
}

fn run_chains<F>(plan: &SimulationPlan, sequential: bool, f: F) -> Vec<ChainTally>
where
    F: Fn(usize) -> ChainTally + Sync + Send,
{
    if sequential {
        par::map_indexed_sequential(plan.chains, f)
    } else {
        par::map_indexed(plan.chains, f)
    }
}

fn summarise(plan: &SimulationPlan, tallies: &[ChainTally], steps_per_second: f64) -> EmpiricalSummary {
    let n = plan.params.n();
    let m = plan.params.m();
    let (p1, p2) = plan.params.rates();
    let total_samples = plan.samples * plan.chains as u64;
    let per_site = |count: u64| count as f64 / (n as f64 * total_samples as f64);

    let mut batch_ones = [0u64; BATCHES];
    let mut batch_samples = [0u64; BATCHES];
    let mut ones = 0u64;
    let mut gaps = vec![0u64; m - 2];
    let mut runs = 0u64;
    let mut histogram = plan.histogram.then(|| vec![0u64; 1 << n]);
    for t in tallies {
        for b in 0..BATCHES {
            batch_ones[b] += t.batch_ones[b];
            batch_samples[b] += t.batch_samples[b];
        }
        ones += t.ones;
        for (acc, g) in gaps.iter_mut().zip(&t.gaps) {
            *acc += g;
        }
        runs += t.runs;
        if let (Some(acc), Some(h)) = (histogram.as_mut(), t.histogram.as_ref()) {
            for (a, c) in acc.iter_mut().zip(h) {
                *a += c;
            }
        }
    }

    let (density_mean, pattern_means) = if total_samples == 0 {
        (None, None)
    } else {
        (
            Some(per_site(ones)),
            Some(PatternMeans {
                n1: per_site(ones),
                n10r1: gaps.iter().map(|&g| per_site(g)).collect(),
                n0m1: per_site(runs),
            }),
        )
    };
    let density_stderr = if batch_samples.iter().all(|&s| s > 0) {
        let means: Vec<f64> = batch_ones
            .iter()
            .zip(&batch_samples)
            .map(|(&o, &s)| o as f64 / (n as f64 * s as f64))
            .collect();
        let mean = means.iter().sum::<f64>() / BATCHES as f64;
        let var = means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
        Some((var / BATCHES as f64).sqrt())
    } else {
        None
    };

    EmpiricalSummary {
        n,
        m,
        p1,
        p2,
        seed: plan.seed,
        chains: plan.chains,
        burn_in: plan.burn_in,
        thin: plan.thin,
        samples_per_chain: plan.samples,
        total_samples,
        density_mean,
        density_stderr,
        pattern_means,
        histogram,
        steps_per_second,
    }
}

/// Total-variation distance between the visit frequencies and `table`.
pub fn tv_distance(summary: &EmpiricalSummary, table: &StationaryTable) -> Result<f64> {
    let hist = summary
        .histogram
        .as_ref()
        .ok_or_else(|| Error::Domain("summary was collected without a histogram".into()))?;
    if hist.len() != table.probs.len() {
        return Err(Error::DimensionMismatch {
            expected: table.probs.len(),
            got: hist.len(),
        });
    }
    let empirical = summary
        .empirical_distribution()
        .ok_or_else(|| Error::Domain("summary holds no samples".into()))?;
    Ok(tv_distance_vec(&empirical, &table.probs))
}

/// Successive states of a single chain (stream 0 of `seed`), starting with
/// `start` itself.
pub struct Trajectory {
    kernel: BitKernel,
    rng: ChainRng,
    state: Configuration,
}

impl Trajectory {
    pub fn new(params: &ModelParams, seed: u64, start: Configuration) -> Result<Self> {
        if start.len() != params.n() {
            return Err(Error::InvalidPlan(format!(
                "start has {} sites, expected {}",
                start.len(),
                params.n()
            )));
        }
        Ok(Self {
            kernel: BitKernel::new(params)?,
            rng: ChainRng::new(seed),
            state: start,
        })
    }
}

impl Iterator for Trajectory {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        let current = self.state;
        self.state = self.kernel.step(current, &mut self.rng);
        Some(current)
    }
}
