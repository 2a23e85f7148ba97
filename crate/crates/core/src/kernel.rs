//! Step kernels.
//!
//! [`BitKernel`] classifies all `n` windows at once with shifted AND/OR
//! word operations and assembles the next state from per-site Bernoulli
//! decisions. It consumes the random stream exactly like
//! [`model::step_sample`](crate::model::step_sample) (one draw per site, in
//! site order, same thresholds), so both kernels produce identical
//! trajectories from the same stream.

use crate::error::{Error, Result};
use crate::model::{ring_mask, rotate_toward_one, step_sample, zero_run_mask, Configuration, ModelParams, MAX_SITES};
use crate::rng::{bernoulli_threshold, ChainRng};

/// A single synchronous update of the whole ring.
pub trait StepKernel: Sync {
    fn params(&self) -> &ModelParams;

    fn step(&self, state: Configuration, rng: &mut ChainRng) -> Configuration;
}

/// Site-by-site reference kernel.
#[derive(Debug, Clone)]
pub struct ScalarKernel {
    params: ModelParams,
}

impl ScalarKernel {
    pub fn new(params: &ModelParams) -> Result<Self> {
        check_width(params)?;
        Ok(Self { params: *params })
    }
}

impl StepKernel for ScalarKernel {
    fn params(&self) -> &ModelParams {
        &self.params
    }

    fn step(&self, state: Configuration, rng: &mut ChainRng) -> Configuration {
        step_sample(&state, &self.params, rng)
    }
}

fn check_width(params: &ModelParams) -> Result<()> {
    if params.n() > MAX_SITES {
        return Err(Error::BudgetExceeded {
            n: params.n(),
            cap: MAX_SITES,
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct BitKernel {
    params: ModelParams,
    n: usize,
    m: usize,
    mask: u64,
    open_threshold: u64,
    blocked_threshold: u64,
    avx2: bool,
}

impl BitKernel {
    pub fn new(params: &ModelParams) -> Result<Self> {
        check_width(params)?;
        let (p1, p2) = params.rates();
        Ok(Self {
            params: *params,
            n: params.n(),
            m: params.m(),
            mask: ring_mask(params.n()),
            open_threshold: bernoulli_threshold(p1),
            blocked_threshold: bernoulli_threshold(1.0 - p2),
            avx2: detect_avx2(),
        })
    }

    /// `(open, blocked)` site masks for the windows of `x`.
    #[inline]
    pub fn window_masks(&self, x: u64) -> (u64, u64) {
        let n = self.n;
        match self.m {
            2 => {
                let next = rotate_toward_one(x, 1, n);
                let empty = !x & self.mask;
                (empty & !next, empty & next)
            }
            3 => {
                let next = rotate_toward_one(x, 1, n);
                let after = rotate_toward_one(x, 2, n);
                let empty = !(x | next) & self.mask;
                (empty & !after, empty & after)
            }
            m => {
                let empty = zero_run_mask(x, m - 1, n);
                let last = rotate_toward_one(x, m - 1, n);
                (empty & !last, empty & last)
            }
        }
    }

    #[inline]
    pub fn step_bits(&self, x: u64, rng: &mut ChainRng) -> u64 {
        let (open, blocked) = self.window_masks(x);
        let mut draws = [0u64; MAX_SITES];
        rng.fill_draws(&mut draws[..self.n]);
        #[cfg(target_arch = "x86_64")]
        if self.avx2 {
            // SAFETY: the CPU supports AVX2, checked when the kernel was built.
            return unsafe { decide_avx2(&draws, open, blocked, self.open_threshold, self.blocked_threshold) };
        }
        decide(&draws, open, blocked, self.open_threshold, self.blocked_threshold)
    }
}

fn detect_avx2() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::arch::is_x86_feature_detected!("avx2")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

/// Next state from one draw per site: a site fires when its draw falls
/// under the threshold of its window class. Thresholds are zero at forced
/// sites and past the ring; both operands stay below 2^53, so the sign bit
/// of the difference is the outcome.
#[inline(always)]
fn decide(draws: &[u64; MAX_SITES], open: u64, blocked: u64, open_threshold: u64, blocked_threshold: u64) -> u64 {
    let mut next = 0u64;
    for (i, d) in draws.iter().enumerate() {
        let threshold = (((open >> i) & 1).wrapping_neg() & open_threshold)
            | (((blocked >> i) & 1).wrapping_neg() & blocked_threshold);
        next |= ((d >> 11).wrapping_sub(threshold) >> 63) << i;
    }
    next
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn decide_avx2(
    draws: &[u64; MAX_SITES],
    open: u64,
    blocked: u64,
    open_threshold: u64,
    blocked_threshold: u64,
) -> u64 {
    decide(draws, open, blocked, open_threshold, blocked_threshold)
}

impl StepKernel for BitKernel {
    fn params(&self) -> &ModelParams {
        &self.params
    }

    #[inline]
    fn step(&self, state: Configuration, rng: &mut ChainRng) -> Configuration {
        Configuration::from_bits_unchecked(self.step_bits(state.bits(), rng), self.n)
    }
}
