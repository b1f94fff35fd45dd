//! Expected tests per person for the four pooling schemes.
//!
//! All costs assume independent infections with a common prevalence and a
//! perfect, dilution-free test. Sizes follow one convention throughout: for
//! the square array the size is the array order `n` (cohort `n²`); for the
//! other schemes it is the pool size `N`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Infection probability `p` together with its complement `q = 1 - p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prevalence {
    p: f64,
    q: f64,
}

impl Prevalence {
    pub fn from_p(p: f64) -> Result<Self> {
        if p > 0.0 && p < 1.0 {
            Ok(Prevalence { p, q: 1.0 - p })
        } else {
            Err(Error::Prevalence(p))
        }
    }

    /// Builds from `q`, keeping `q` exact and deriving `p = 1 - q`.
    pub fn from_q(q: f64) -> Result<Self> {
        if q > 0.0 && q < 1.0 {
            Ok(Prevalence { p: 1.0 - q, q })
        } else {
            Err(Error::Prevalence(1.0 - q))
        }
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    /// `q^x` via `exp(x ln q)`.
    #[inline]
    pub fn q_pow(&self, x: f64) -> f64 {
        (x * self.q.ln()).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    A2,
    Dorfman,
    Sterrett,
    Halving,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::A2,
        Scheme::Dorfman,
        Scheme::Sterrett,
        Scheme::Halving,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::A2 => "a2",
            Scheme::Dorfman => "dorfman",
            Scheme::Sterrett => "sterrett",
            Scheme::Halving => "halving",
        }
    }

    /// Smallest admissible size on the given scale.
    pub fn min_size(&self, scale: Scale) -> f64 {
        match (self, scale) {
            (Scheme::A2, _) => 2.0,
            _ => 1.0,
        }
    }

    /// Number of individuals covered by a configuration of this size.
    pub fn cohort(&self, size: f64) -> f64 {
        match self {
            Scheme::A2 => size * size,
            _ => size,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a2" | "array" | "square" => Ok(Scheme::A2),
            "d" | "dorfman" => Ok(Scheme::Dorfman),
            "s" | "sterrett" => Ok(Scheme::Sterrett),
            "h" | "halving" => Ok(Scheme::Halving),
            other => Err(Error::Invalid(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Integer,
    Continuous,
}

/// A scheme together with its size parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeSize {
    pub scheme: Scheme,
    pub size: f64,
    pub scale: Scale,
}

impl SchemeSize {
    pub fn integer(scheme: Scheme, size: u64) -> Result<Self> {
        let s = SchemeSize {
            scheme,
            size: size as f64,
            scale: Scale::Integer,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn continuous(scheme: Scheme, size: f64) -> Result<Self> {
        let s = SchemeSize {
            scheme,
            size,
            scale: Scale::Continuous,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        let min = self.scheme.min_size(self.scale);
        if !(self.size >= min) || !self.size.is_finite() {
            return Err(Error::Size {
                scheme: self.scheme,
                size: self.size,
                min,
            });
        }
        if self.scale == Scale::Integer && self.size.fract() != 0.0 {
            return Err(Error::Invalid(format!(
                "integer size expected, got {}",
                self.size
            )));
        }
        if self.scale == Scale::Continuous && matches!(self.scheme, Scheme::Halving) {
            return Err(Error::Invalid(
                "halving cost is defined on integer sizes only".into(),
            ));
        }
        Ok(())
    }
}

/// Cost summary of one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationPoint {
    pub prevalence: Prevalence,
    pub config: SchemeSize,
    /// Expected tests per person.
    pub t: f64,
    /// Excess over individual testing, `t - 1`.
    pub g: f64,
    /// Tests saved per person, `1 - t`.
    pub gain: f64,
    /// Expected total number of tests over the cohort.
    pub expected_total: f64,
}

fn check_size(scheme: Scheme, size: f64, min: f64) -> Result<()> {
    if size >= min && size.is_finite() {
        Ok(())
    } else {
        Err(Error::Size { scheme, size, min })
    }
}

/// Square-array tests per person, `2/n + 1 - 2qⁿ + q^(2n-1)`.
pub fn a2_t(prev: Prevalence, n: f64) -> Result<f64> {
    check_size(Scheme::A2, n, 2.0)?;
    Ok(a2_t_unchecked(prev, n))
}

/// [`a2_t`] without the domain check, for inner loops over `n > 2`.
#[inline]
pub fn a2_t_unchecked(prev: Prevalence, n: f64) -> f64 {
    2.0 / n + 1.0 - 2.0 * prev.q_pow(n) + prev.q_pow(2.0 * n - 1.0)
}

/// `g(q, n) = t(q, n) - 1`.
#[inline]
pub fn a2_g(prev: Prevalence, n: f64) -> f64 {
    2.0 / n - 2.0 * prev.q_pow(n) + prev.q_pow(2.0 * n - 1.0)
}

/// `∂g/∂n = -2/n² - 2qⁿ ln q + 2q^(2n-1) ln q`.
#[inline]
pub fn a2_dg_dn(prev: Prevalence, n: f64) -> f64 {
    let lnq = prev.q().ln();
    -2.0 / (n * n) - 2.0 * prev.q_pow(n) * lnq + 2.0 * prev.q_pow(2.0 * n - 1.0) * lnq
}

/// Expected total tests on an `n × n` array: `2n + n²(1 - 2qⁿ + q^(2n-1))`.
pub fn a2_expected_total(prev: Prevalence, n: u64) -> Result<f64> {
    let nf = n as f64;
    check_size(Scheme::A2, nf, 2.0)?;
    Ok(2.0 * nf + nf * nf * (1.0 - 2.0 * prev.q_pow(nf) + prev.q_pow(2.0 * nf - 1.0)))
}

/// Dorfman tests per person, `1/N + 1 - q^N`.
pub fn dorfman_t(prev: Prevalence, size: f64) -> Result<f64> {
    check_size(Scheme::Dorfman, size, 1.0)?;
    Ok(1.0 / size + 1.0 - prev.q_pow(size))
}

/// Expected extra tests `D(m)` for a pool of size `m` known to be positive,
/// for every `m` in `0..=max`, under the Sterrett procedure.
///
/// Individuals are retested one at a time until the first positive; the
/// remaining tail is then pooled again. A known-positive singleton needs no
/// test, and when the first `m - 1` members are negative the last is
/// inferred positive.
fn sterrett_known_positive(prev: Prevalence, max: usize) -> Vec<f64> {
    let (p, q) = (prev.p(), prev.q());
    let mut q_pow = Vec::with_capacity(max + 1);
    let mut acc = 1.0;
    for _ in 0..=max {
        q_pow.push(acc);
        acc *= q;
    }
    let mut d = vec![0.0; max + 1];
    for m in 2..=max {
        let mut s = 0.0;
        for k in 1..m {
            let tail = m - k;
            s += q_pow[k - 1] * p * ((k + 1) as f64 + (1.0 - q_pow[tail]) * d[tail]);
        }
        s += q_pow[m - 1] * p * (m - 1) as f64;
        d[m] = s / (1.0 - q_pow[m]);
    }
    d
}

/// Sterrett tests per person, computed by the exact dynamic program over
/// known-positive pool sizes. Cost is `O(N²)`.
pub fn sterrett_t(prev: Prevalence, size: u64) -> Result<f64> {
    check_size(Scheme::Sterrett, size as f64, 1.0)?;
    if size == 1 {
        // A lone member is pooled and then confirmed individually, as in
        // Dorfman.
        return Ok(1.0 + prev.p());
    }
    let n = size as usize;
    let d = sterrett_known_positive(prev, n);
    let e = 1.0 + (1.0 - prev.q_pow(size as f64)) * d[n];
    Ok(e / size as f64)
}

/// Closed form of the Sterrett cost for `N >= 2`:
/// `E[T_N] = 2N - 1 - (N-1)q - (q² - q^(N+1))/p`, divided by `N`.
///
/// Agrees with the dynamic program on every integer `N >= 2` and extends it
/// to a continuous argument. At `N = 1` it returns the individual-test cost
/// `1` rather than the pooled `2 - q`.
pub fn sterrett_t_closed(prev: Prevalence, size: f64) -> Result<f64> {
    check_size(Scheme::Sterrett, size, 1.0)?;
    Ok(sterrett_t_closed_unchecked(prev, size))
}

#[inline]
pub(crate) fn sterrett_t_closed_unchecked(prev: Prevalence, size: f64) -> f64 {
    let (p, q) = (prev.p(), prev.q());
    let e = 2.0 * size - 1.0 - (size - 1.0) * q - (q * q - prev.q_pow(size + 1.0)) / p;
    e / size
}

/// Sterrett tests per person on integers, `O(1)` per size: the pooled
/// `2 - q` at `N = 1`, the closed form above otherwise.
#[inline]
pub(crate) fn sterrett_t_fast(prev: Prevalence, size: u64) -> f64 {
    if size == 1 {
        1.0 + prev.p()
    } else {
        sterrett_t_closed_unchecked(prev, size as f64)
    }
}

/// Expected tests `f(N)` of halving applied to a pool of `N`, via
/// `f(1) = 1`, `f(N) = 1 + f(⌈N/2⌉) + f(⌊N/2⌋) - 2q^N`.
fn halving_total(prev: Prevalence, size: u64, memo: &mut HashMap<u64, f64>) -> f64 {
    if size <= 1 {
        return 1.0;
    }
    if let Some(&v) = memo.get(&size) {
        return v;
    }
    let first = size.div_ceil(2);
    let second = size / 2;
    let v = 1.0 + halving_total(prev, first, memo) + halving_total(prev, second, memo)
        - 2.0 * prev.q_pow(size as f64);
    memo.insert(size, v);
    v
}

/// Halving tests per person. The first half receives `⌈N/2⌉` members.
pub fn halving_t(prev: Prevalence, size: u64) -> Result<f64> {
    check_size(Scheme::Halving, size as f64, 1.0)?;
    let mut memo = HashMap::new();
    Ok(halving_total(prev, size, &mut memo) / size as f64)
}

/// Halving totals `f(1..=max)` computed bottom-up, for exhaustive scans.
#[derive(Debug, Clone)]
pub struct HalvingTable {
    totals: Vec<f64>,
}

impl HalvingTable {
    pub fn new(prev: Prevalence, max: u64) -> Self {
        let max = max.max(1) as usize;
        let mut totals = vec![0.0; max + 1];
        totals[1] = 1.0;
        let q = prev.q();
        let mut q_pow = q;
        for n in 2..=max {
            q_pow *= q;
            totals[n] = 1.0 + totals[n.div_ceil(2)] + totals[n / 2] - 2.0 * q_pow;
        }
        HalvingTable { totals }
    }

    pub fn max_size(&self) -> u64 {
        (self.totals.len() - 1) as u64
    }

    /// Tests per person at `size`, `1 <= size <= max_size()`.
    pub fn t(&self, size: u64) -> f64 {
        self.totals[size as usize] / size as f64
    }
}

/// Tests per person for any scheme and scale.
///
/// Continuous Sterrett sizes use [`sterrett_t_closed`]; halving is integer
/// only.
pub fn tests_per_person(prev: Prevalence, config: SchemeSize) -> Result<f64> {
    config.validate()?;
    match (config.scheme, config.scale) {
        (Scheme::A2, _) => a2_t(prev, config.size),
        (Scheme::Dorfman, _) => dorfman_t(prev, config.size),
        (Scheme::Sterrett, Scale::Integer) => sterrett_t(prev, config.size as u64),
        (Scheme::Sterrett, Scale::Continuous) => sterrett_t_closed(prev, config.size),
        (Scheme::Halving, _) => halving_t(prev, config.size as u64),
    }
}

/// Tests saved per person relative to individual testing, `1 - t`.
pub fn gain(prev: Prevalence, config: SchemeSize) -> Result<f64> {
    Ok(1.0 - tests_per_person(prev, config)?)
}

pub fn evaluate(prev: Prevalence, config: SchemeSize) -> Result<EvaluationPoint> {
    let t = tests_per_person(prev, config)?;
    Ok(EvaluationPoint {
        prevalence: prev,
        config,
        t,
        g: t - 1.0,
        gain: 1.0 - t,
        expected_total: config.scheme.cohort(config.size) * t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(q: f64) -> Prevalence {
        Prevalence::from_q(q).unwrap()
    }

    #[test]
    fn prevalence_domain() {
        assert!(Prevalence::from_p(0.0).is_err());
        assert!(Prevalence::from_p(1.0).is_err());
        assert!(Prevalence::from_p(f64::NAN).is_err());
        let pr = Prevalence::from_p(0.1).unwrap();
        assert_eq!(pr.q(), 1.0 - 0.1);
    }

    #[test]
    fn a2_limits() {
        assert!((a2_t(q(1.0 - 1e-12), 5.0).unwrap() - 0.4).abs() < 1e-9);
        assert!((a2_t(q(1e-12), 5.0).unwrap() - 1.4).abs() < 1e-9);
        assert!((a2_t(q(0.9), 5.0).unwrap() - 0.606440).abs() < 1e-5);
        assert!(a2_t(q(0.9), 1.9).is_err());
    }

    #[test]
    fn a2_total() {
        assert!((a2_expected_total(q(1.0 - 1e-13), 5).unwrap() - 10.0).abs() < 1e-9);
        assert!((a2_expected_total(q(0.9), 5).unwrap() - 15.1610).abs() < 3e-4);
        assert!(a2_expected_total(q(0.9), 1).is_err());
    }

    #[test]
    fn dorfman_values() {
        let pr = q(0.37);
        assert!((dorfman_t(pr, 1.0).unwrap() - (2.0 - 0.37)).abs() < 1e-15);
        assert!((dorfman_t(q(0.9), 2.0).unwrap() - 0.69).abs() < 1e-12);
        assert!((dorfman_t(q(0.99), 11.0).unwrap() - 0.195570).abs() < 1e-5);
        assert!(dorfman_t(pr, 0.5).is_err());
    }

    #[test]
    fn sterrett_small_sizes() {
        let pr = q(0.6);
        assert!((sterrett_t(pr, 1).unwrap() - (2.0 - 0.6)).abs() < 1e-15);
        assert!((sterrett_t(q(0.9), 2).unwrap() - 0.645).abs() < 1e-12);
        assert!(sterrett_t(pr, 0).is_err());
    }

    #[test]
    fn sterrett_closed_form_matches_dp() {
        for &qq in &[0.5, 0.75, 0.9, 0.99, 0.999] {
            let pr = q(qq);
            for n in 2..=120u64 {
                let dp = sterrett_t(pr, n).unwrap();
                let closed = sterrett_t_closed(pr, n as f64).unwrap();
                assert!(
                    (dp - closed).abs() < 1e-12,
                    "q={qq} n={n}: {dp} vs {closed}"
                );
                assert!((sterrett_t_fast(pr, n) - dp).abs() < 1e-12);
            }
            assert!((sterrett_t_fast(pr, 1) - sterrett_t(pr, 1).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn halving_small_sizes() {
        assert_eq!(halving_t(q(0.3), 1).unwrap(), 1.0);
        assert!((halving_t(q(0.9), 2).unwrap() - 0.69).abs() < 1e-12);
    }

    #[test]
    fn halving_table_matches_memo() {
        let pr = q(0.97);
        let table = HalvingTable::new(pr, 300);
        for n in 1..=300 {
            assert!((table.t(n) - halving_t(pr, n).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn gain_is_one_minus_t() {
        let pr = q(0.99);
        let cfg = SchemeSize::integer(Scheme::Dorfman, 11).unwrap();
        assert!((gain(pr, cfg).unwrap() - 0.804430).abs() < 1e-5);
        let a2 = SchemeSize::continuous(Scheme::A2, 5.0).unwrap();
        assert!((gain(q(1.0 - 1e-13), a2).unwrap() - 0.6).abs() < 1e-9);
    }

    #[test]
    fn evaluation_point_fields() {
        let pr = q(0.9);
        let ev = evaluate(pr, SchemeSize::integer(Scheme::A2, 5).unwrap()).unwrap();
        assert_eq!(ev.g, ev.t - 1.0);
        assert_eq!(ev.gain, -ev.g);
        assert!((ev.expected_total - a2_expected_total(pr, 5).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn scheme_size_validation() {
        assert!(SchemeSize::integer(Scheme::A2, 1).is_err());
        assert!(SchemeSize::integer(Scheme::Dorfman, 1).is_ok());
        assert!(SchemeSize::continuous(Scheme::A2, 2.5).is_ok());
        assert!(SchemeSize::continuous(Scheme::Halving, 2.5).is_err());
        assert!(SchemeSize::continuous(Scheme::Dorfman, f64::INFINITY).is_err());
    }

    #[test]
    fn scheme_parse() {
        assert_eq!("A2".parse::<Scheme>().unwrap(), Scheme::A2);
        assert_eq!("halving".parse::<Scheme>().unwrap(), Scheme::Halving);
        assert!("bogus".parse::<Scheme>().is_err());
    }
}
