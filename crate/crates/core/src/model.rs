//! Configurations, parameters and the local update law.
//!
//! Sites are numbered `1..=n` in the public API. Internally site `i` lives in
//! bit `i - 1` of a `u64`, so site 1 is the least significant bit. Every
//! window wraps around the ring: the site after `n` is `1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{accepts, bernoulli_threshold, ChainRng};
use crate::scalar::Scalar;

/// Largest ring a [`Configuration`] can hold (one machine word).
pub const MAX_SITES: usize = 64;

/// Validated model parameters.
///
/// `2 <= m <= n`, `0 < p1 < 1` and `0 < p2 <= 1`. The probability type is
/// `f64` unless the exact oracle is being driven with rationals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams<T = f64> {
    n: usize,
    m: usize,
    p1: T,
    p2: T,
}

impl<T: Scalar> ModelParams<T> {
    pub fn new(n: usize, m: usize, p1: T, p2: T) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidParams(format!(
                "neighbourhood size m = {m} must be at least 2"
            )));
        }
        if m > n {
            return Err(Error::InvalidParams(format!(
                "neighbourhood size m = {m} exceeds ring size n = {n}"
            )));
        }
        if !(p1 > T::zero() && p1 < T::one()) {
            return Err(Error::InvalidParams(format!("p1 = {p1:?} must lie in (0, 1)")));
        }
        if !(p2 > T::zero() && p2 <= T::one()) {
            return Err(Error::InvalidParams(format!("p2 = {p2:?} must lie in (0, 1]")));
        }
        Ok(Self { n, m, p1, p2 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p1(&self) -> &T {
        &self.p1
    }

    pub fn p2(&self) -> &T {
        &self.p2
    }

    /// Same rates on a ring of a different size.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(n, self.m, self.p1.clone(), self.p2.clone())
    }

    pub fn to_f64(&self) -> ModelParams<f64> {
        ModelParams {
            n: self.n,
            m: self.m,
            p1: self.p1.to_f64(),
            p2: self.p2.to_f64(),
        }
    }
}

impl ModelParams<f64> {
    pub fn rates(&self) -> (f64, f64) {
        (self.p1, self.p2)
    }
}

/// An occupation state of the ring, site 1 in the least significant bit.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    bits: u64,
    n: u8,
}

#[inline]
pub(crate) fn ring_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Bit `i` of the result is bit `(i + k) mod n` of `x`: the ring seen from
/// `k` sites further on.
#[inline]
pub(crate) fn rotate_toward_one(x: u64, k: usize, n: usize) -> u64 {
    let k = k % n;
    if k == 0 {
        x
    } else {
        ((x >> k) | (x << (n - k))) & ring_mask(n)
    }
}

impl Configuration {
    pub fn new(bits: u64, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_SITES {
            return Err(Error::InvalidConfiguration(format!(
                "ring size {n} outside 1..={MAX_SITES}"
            )));
        }
        if bits & !ring_mask(n) != 0 {
            return Err(Error::InvalidConfiguration(format!(
                "encoding {bits} does not fit in {n} sites"
            )));
        }
        Ok(Self { bits, n: n as u8 })
    }

    pub(crate) fn from_bits_unchecked(bits: u64, n: usize) -> Self {
        debug_assert!((1..=MAX_SITES).contains(&n) && bits & !ring_mask(n) == 0);
        Self { bits, n: n as u8 }
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(0, n)
    }

    pub fn ones(n: usize) -> Result<Self> {
        Self::new(ring_mask(n.clamp(1, MAX_SITES)), n)
    }

    /// Reads a binary string with site 1 leftmost, e.g. `"0110"`.
    pub fn from_binary(text: &str) -> Result<Self> {
        let text = text.trim();
        let n = text.len();
        let mut bits = 0u64;
        for (i, c) in text.chars().enumerate() {
            match c {
                '0' => {}
                '1' if i < 64 => bits |= 1 << i,
                _ => {
                    return Err(Error::InvalidConfiguration(format!(
                        "{text:?} is not a binary string over {{0,1}}"
                    )))
                }
            }
        }
        Self::new(bits, n)
    }

    /// Accepts either form: a length-`n` string over `{0,1}` is read as a
    /// binary string (site 1 leftmost); anything else is read as the
    /// unsigned integer encoding.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let text = text.trim();
        if text.len() == n && text.chars().all(|c| c == '0' || c == '1') {
            return Self::from_binary(text);
        }
        let bits: u64 = text.parse().map_err(|_| {
            Error::InvalidConfiguration(format!("{text:?} is neither a {n}-site binary string nor an integer"))
        })?;
        Self::new(bits, n)
    }

    pub fn len(&self) -> usize {
        self.n as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    /// Integer encoding.
    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// State of site `site` (1-based).
    pub fn site(&self, site: usize) -> u8 {
        assert!(site >= 1 && site <= self.len(), "site {site} outside 1..={}", self.n);
        ((self.bits >> (site - 1)) & 1) as u8
    }

    /// State of the site `offset` positions after `site`, wrapping.
    pub fn site_wrapped(&self, site: usize, offset: usize) -> u8 {
        let n = self.len();
        let idx = (site - 1 + offset) % n;
        ((self.bits >> idx) & 1) as u8
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones() as usize
    }

    /// Cyclic shift by `k`: `(b_1, .., b_n) -> (b_{1+k}, .., b_{n+k})`.
    pub fn rotate(&self, k: usize) -> Self {
        Self {
            bits: rotate_toward_one(self.bits, k, self.len()),
            n: self.n,
        }
    }

    pub fn to_binary(&self) -> String {
        (1..=self.len())
            .map(|i| if self.site(i) == 1 { '1' } else { '0' })
            .collect()
    }

    /// All `2^n` configurations in ascending integer order.
    pub fn all(n: usize) -> Result<impl Iterator<Item = Configuration>> {
        if n == 0 || n >= MAX_SITES {
            return Err(Error::InvalidConfiguration(format!(
                "cannot enumerate 2^{n} configurations"
            )));
        }
        Ok((0..(1u64 << n)).map(move |bits| Configuration::from_bits_unchecked(bits, n)))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_binary())
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration({})", self.to_binary())
    }
}

impl Serialize for Configuration {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_binary())
    }
}

impl<'de> Deserialize<'de> for Configuration {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Configuration::from_binary(&s).map_err(serde::de::Error::custom)
    }
}

/// Cyclic pattern statistics of a configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatternCounts {
    /// Number of 1s.
    pub n1: usize,
    /// `n10r1[r - 1]` counts occurrences of `1 0^r 1`, for `r` in `1..=m-2`.
    pub n10r1: Vec<usize>,
    /// Occurrences of `0^{m-1} 1`.
    pub n0m1: usize,
}

impl PatternCounts {
    /// Occurrences of `1 0^r 1` (`r` is 1-based).
    pub fn gap(&self, r: usize) -> usize {
        self.n10r1[r - 1]
    }

    /// Exponent of `1 - p1` in the stationary weight.
    pub fn vacancy_exponent(&self, m: usize) -> usize {
        self.n10r1.iter().enumerate().map(|(i, c)| (i + 1) * c).sum::<usize>() + (m - 1) * self.n0m1
    }
}

/// Mask of sites `i` with sites `i, .., i + len - 1` all empty.
#[inline]
pub(crate) fn zero_run_mask(x: u64, len: usize, n: usize) -> u64 {
    let mut acc = ring_mask(n);
    for k in 0..len {
        acc &= !rotate_toward_one(x, k, n);
    }
    acc
}

pub fn count_patterns<T: Scalar>(beta: &Configuration, params: &ModelParams<T>) -> PatternCounts {
    assert_eq!(beta.len(), params.n(), "configuration length does not match n");
    count_patterns_raw(beta.bits(), params.n(), params.m())
}

pub(crate) fn count_patterns_raw(x: u64, n: usize, m: usize) -> PatternCounts {
    let n1 = x.count_ones() as usize;
    let mut n10r1 = Vec::with_capacity(m.saturating_sub(2));
    // zeros after the leading 1, grown one offset at a time
    let mut gap = x;
    for r in 1..m - 1 {
        gap &= !rotate_toward_one(x, r, n);
        n10r1.push((gap & rotate_toward_one(x, r + 1, n)).count_ones() as usize);
    }
    let n0m1 = (zero_run_mask(x, m - 1, n) & rotate_toward_one(x, m - 1, n)).count_ones() as usize;
    PatternCounts { n1, n10r1, n0m1 }
}

/// Class of the window `(a_i, .., a_{i+m-1})` that drives site `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SiteWindow {
    /// `0^m`: deposit with probability `p1`.
    OpenVacancy,
    /// `0^{m-1} 1`: deposit with probability `1 - p2`.
    BlockedVacancy,
    /// Anything else: the site is empty next step.
    Forced,
}

pub fn classify_window<T: Scalar>(alpha: &Configuration, site: usize, params: &ModelParams<T>) -> SiteWindow {
    assert_eq!(alpha.len(), params.n(), "configuration length does not match n");
    assert!(
        site >= 1 && site <= params.n(),
        "site {site} outside 1..={}",
        params.n()
    );
    let m = params.m();
    if (0..m - 1).any(|j| alpha.site_wrapped(site, j) == 1) {
        return SiteWindow::Forced;
    }
    if alpha.site_wrapped(site, m - 1) == 0 {
        SiteWindow::OpenVacancy
    } else {
        SiteWindow::BlockedVacancy
    }
}

/// Probability that a site driven by `window` holds `new_bit` next step.
pub fn site_update_prob<T: Scalar>(window: SiteWindow, new_bit: u8, params: &ModelParams<T>) -> T {
    let occupied = new_bit != 0;
    match (window, occupied) {
        (SiteWindow::OpenVacancy, true) => params.p1().clone(),
        (SiteWindow::OpenVacancy, false) => T::one() - params.p1().clone(),
        (SiteWindow::BlockedVacancy, true) => T::one() - params.p2().clone(),
        (SiteWindow::BlockedVacancy, false) => params.p2().clone(),
        (SiteWindow::Forced, true) => T::zero(),
        (SiteWindow::Forced, false) => T::one(),
    }
}

pub(crate) fn windows<T: Scalar>(alpha: &Configuration, params: &ModelParams<T>) -> Vec<SiteWindow> {
    (1..=params.n()).map(|i| classify_window(alpha, i, params)).collect()
}

pub(crate) fn transition_prob_from_windows<T: Scalar>(
    windows: &[SiteWindow],
    beta: &Configuration,
    params: &ModelParams<T>,
) -> T {
    let mut prob = T::one();
    for (i, w) in windows.iter().enumerate() {
        let factor = site_update_prob(*w, beta.site(i + 1), params);
        if factor.is_zero() {
            return T::zero();
        }
        prob = prob * factor;
    }
    prob
}

/// One-step transition probability: the product of the independent site
/// factors.
pub fn transition_prob<T: Scalar>(alpha: &Configuration, beta: &Configuration, params: &ModelParams<T>) -> T {
    assert_eq!(beta.len(), params.n(), "configuration length does not match n");
    transition_prob_from_windows(&windows(alpha, params), beta, params)
}

/// Samples the next configuration with the scalar reference rule.
///
/// All windows are classified against `alpha` before any site is written.
/// Exactly one draw is consumed per site, in site order, including sites
/// whose window is forced.
pub fn step_sample(alpha: &Configuration, params: &ModelParams<f64>, rng: &mut ChainRng) -> Configuration {
    let classes = windows(alpha, params);
    let mut bits = 0u64;
    for (i, w) in classes.iter().enumerate() {
        let draw = rng.next_draw();
        let p_occupied = site_update_prob(*w, 1, params);
        if accepts(draw, bernoulli_threshold(p_occupied)) {
            bits |= 1 << i;
        }
    }
    Configuration::from_bits_unchecked(bits, params.n())
}
