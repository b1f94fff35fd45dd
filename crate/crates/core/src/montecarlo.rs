//! Executable schemes on concrete cohorts.
//!
//! Each executor runs the testing procedure against known statuses, counts
//! the tests it spends and reports whom it classified as infected. These
//! are the independent oracle for the analytic and recursive cost formulas:
//! exhaustive enumeration over all status patterns for small sizes, and
//! seeded simulation beyond that.
//!
//! Randomness comes from ChaCha8 seeded with `seed`, with the trial index
//! selecting the stream, so trial `i` draws the same cohort regardless of
//! how many trials run or in what order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::schemes::{tests_per_person, Prevalence, Scheme, SchemeSize};

/// Enumeration is limited to cohorts of at most this many people.
pub const MAX_ENUMERATION: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    /// `true` marks an infected member.
    pub statuses: Vec<bool>,
    pub seed: u64,
    pub prevalence: Prevalence,
}

impl Cohort {
    /// Draws `len` independent statuses for trial `trial` of `seed`.
    pub fn sample(prevalence: Prevalence, len: usize, seed: u64, trial: u64) -> Self {
        let mut rng = trial_rng(seed, trial);
        let statuses = (0..len)
            .map(|_| rng.gen::<f64>() < prevalence.p())
            .collect();
        Cohort {
            statuses,
            seed,
            prevalence,
        }
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub tests: u64,
    /// Classification per member, `true` for infected.
    pub identified: Vec<bool>,
}

/// Tests a pool: positive iff any member is infected.
fn pool(statuses: &[bool], tests: &mut u64) -> bool {
    *tests += 1;
    statuses.iter().any(|&s| s)
}

/// Square array: all `n` row pools and `n` column pools, then every cell
/// lying on a positive row and a positive column.
pub fn run_a2(statuses: &[bool]) -> Result<Outcome> {
    let len = statuses.len();
    let n = (len as f64).sqrt().round() as usize;
    if n < 2 || n * n != len {
        return Err(Error::Shape {
            scheme: Scheme::A2,
            len,
            expected: "a perfect square n² with n >= 2".into(),
        });
    }
    let mut tests = 0;
    let cell = |r: usize, c: usize| statuses[r * n + c];
    let rows: Vec<bool> = (0..n)
        .map(|r| {
            tests += 1;
            (0..n).any(|c| cell(r, c))
        })
        .collect();
    let cols: Vec<bool> = (0..n)
        .map(|c| {
            tests += 1;
            (0..n).any(|r| cell(r, c))
        })
        .collect();

    let mut identified = vec![false; len];
    for r in (0..n).filter(|&r| rows[r]) {
        for c in (0..n).filter(|&c| cols[c]) {
            tests += 1;
            identified[r * n + c] = cell(r, c);
        }
    }
    Ok(Outcome { tests, identified })
}

/// Dorfman: one pool, then everybody individually if it is positive.
pub fn run_dorfman(statuses: &[bool]) -> Result<Outcome> {
    non_empty(Scheme::Dorfman, statuses)?;
    let mut tests = 0;
    if !pool(statuses, &mut tests) {
        return Ok(Outcome {
            tests,
            identified: vec![false; statuses.len()],
        });
    }
    tests += statuses.len() as u64;
    Ok(Outcome {
        tests,
        identified: statuses.to_vec(),
    })
}

/// Sterrett: test one pool; if positive, test members one at a time until
/// the first positive, then pool the untested tail and repeat on it while
/// it is positive.
///
/// Inference: in a pool known to be positive the last untested member is
/// positive whenever everyone before it tested negative, so it is never
/// tested. A tail of one is tested once as a pool, which resolves it.
pub fn run_sterrett(statuses: &[bool]) -> Result<Outcome> {
    non_empty(Scheme::Sterrett, statuses)?;
    let mut tests = 0;
    let mut identified = vec![false; statuses.len()];
    if pool(statuses, &mut tests) {
        if statuses.len() == 1 {
            // Confirmed individually, matching the Dorfman cost at N = 1.
            tests += 1;
            identified[0] = true;
            return Ok(Outcome { tests, identified });
        }
        resolve_known_positive(statuses, 0, &mut tests, &mut identified);
    }
    Ok(Outcome { tests, identified })
}

fn resolve_known_positive(statuses: &[bool], offset: usize, tests: &mut u64, out: &mut [bool]) {
    let m = statuses.len();
    for i in 0..m - 1 {
        *tests += 1;
        if statuses[i] {
            out[offset + i] = true;
            let tail = &statuses[i + 1..];
            if pool(tail, tests) {
                if tail.len() == 1 {
                    out[offset + i + 1] = true;
                } else {
                    resolve_known_positive(tail, offset + i + 1, tests, out);
                }
            }
            return;
        }
    }
    out[offset + m - 1] = true;
}

/// Halving: test the pool; if positive split into `⌈N/2⌉` and `⌊N/2⌋` and
/// recurse on both halves. A pool of one is an individual test.
pub fn run_halving(statuses: &[bool]) -> Result<Outcome> {
    non_empty(Scheme::Halving, statuses)?;
    let mut tests = 0;
    let mut identified = vec![false; statuses.len()];
    halve(statuses, 0, &mut tests, &mut identified);
    Ok(Outcome { tests, identified })
}

fn halve(statuses: &[bool], offset: usize, tests: &mut u64, out: &mut [bool]) {
    if !pool(statuses, tests) {
        return;
    }
    if statuses.len() == 1 {
        out[offset] = true;
        return;
    }
    let mid = statuses.len().div_ceil(2);
    halve(&statuses[..mid], offset, tests, out);
    halve(&statuses[mid..], offset + mid, tests, out);
}

fn non_empty(scheme: Scheme, statuses: &[bool]) -> Result<()> {
    if statuses.is_empty() {
        Err(Error::Shape {
            scheme,
            len: 0,
            expected: "a nonempty cohort".into(),
        })
    } else {
        Ok(())
    }
}

/// Runs `scheme` on `statuses`.
pub fn run(scheme: Scheme, statuses: &[bool]) -> Result<Outcome> {
    match scheme {
        Scheme::A2 => run_a2(statuses),
        Scheme::Dorfman => run_dorfman(statuses),
        Scheme::Sterrett => run_sterrett(statuses),
        Scheme::Halving => run_halving(statuses),
    }
}

/// Number of people covered by one application of `scheme` at `size`.
pub fn cohort_len(scheme: Scheme, size: u64) -> usize {
    match scheme {
        Scheme::A2 => (size * size) as usize,
        _ => size as usize,
    }
}

/// Exact expected tests per person: the probability-weighted mean of the
/// executor's test count over all `2^len` status patterns.
pub fn exact_expected_tests(prev: Prevalence, scheme: Scheme, size: u64) -> Result<f64> {
    SchemeSize::integer(scheme, size)?;
    let len = cohort_len(scheme, size);
    if len > MAX_ENUMERATION {
        return Err(Error::Invalid(format!(
            "enumeration over {len} people exceeds the limit of {MAX_ENUMERATION}"
        )));
    }
    let (p, q) = (prev.p(), prev.q());
    let mut statuses = vec![false; len];
    let mut total = 0.0;
    for mask in 0u32..(1 << len) {
        let mut weight = 1.0;
        for (i, s) in statuses.iter_mut().enumerate() {
            *s = mask >> i & 1 == 1;
            weight *= if *s { p } else { q };
        }
        total += weight * run(scheme, &statuses)?.tests as f64;
    }
    Ok(total / len as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub scheme: Scheme,
    pub size: u64,
    pub trials: u64,
    pub mean_tests_per_person: f64,
    /// Sample standard deviation over `√trials`; zero when `trials == 1`.
    pub std_error: f64,
    /// Set when a single trial leaves the standard error undefined.
    pub std_error_undefined: bool,
    pub seed: u64,
    /// Trials in which some member was misclassified.
    pub misclassified: u64,
}

impl SimulationReport {
    /// `(mean - reference) / std_error`, or `None` without a standard error.
    pub fn z_score(&self, reference: f64) -> Option<f64> {
        if self.std_error_undefined || self.std_error == 0.0 {
            None
        } else {
            Some((self.mean_tests_per_person - reference) / self.std_error)
        }
    }
}

/// Simulates `trials` cohorts and reports the mean tests per person.
///
/// Test counts are accumulated as integers, so the report is bit-identical
/// for identical arguments.
pub fn estimate_t(
    prev: Prevalence,
    scheme: Scheme,
    size: u64,
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(Error::Invalid("trials must be at least 1".into()));
    }
    SchemeSize::integer(scheme, size)?;
    let len = cohort_len(scheme, size);
    let (mut sum, mut sum_sq, mut misclassified) = (0u128, 0u128, 0u64);
    for trial in 0..trials {
        let cohort = Cohort::sample(prev, len, seed, trial);
        let outcome = run(scheme, &cohort.statuses)?;
        if outcome.identified != cohort.statuses {
            misclassified += 1;
        }
        sum += outcome.tests as u128;
        sum_sq += (outcome.tests as u128).pow(2);
    }

    let n = trials as f64;
    let per = len as f64;
    let mean = sum as f64 / n;
    let std_error = if trials > 1 {
        // Integer sums keep the variance numerator exact until the final
        // conversion.
        let num = trials as u128 * sum_sq - sum * sum;
        let var = num as f64 / (n * (n - 1.0));
        var.sqrt() / n.sqrt() / per
    } else {
        0.0
    };
    Ok(SimulationReport {
        scheme,
        size,
        trials,
        mean_tests_per_person: mean / per,
        std_error,
        std_error_undefined: trials == 1,
        seed,
        misclassified,
    })
}

/// Analytic tests per person for an integer configuration.
pub fn analytic_t(prev: Prevalence, scheme: Scheme, size: u64) -> Result<f64> {
    tests_per_person(prev, SchemeSize::integer(scheme, size)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '+').collect()
    }

    #[test]
    fn a2_counts() {
        assert_eq!(run_a2(&[false; 25]).unwrap().tests, 10);
        assert_eq!(run_a2(&[true; 25]).unwrap().tests, 35);
        let mut one = vec![false; 25];
        one[7] = true;
        let out = run_a2(&one).unwrap();
        assert_eq!(out.tests, 11);
        assert_eq!(out.identified, one);
        assert!(run_a2(&[false; 24]).is_err());
        assert!(run_a2(&[false; 1]).is_err());
    }

    #[test]
    fn dorfman_counts() {
        assert_eq!(run_dorfman(&[false; 10]).unwrap().tests, 1);
        let mut one = vec![false; 10];
        one[3] = true;
        assert_eq!(run_dorfman(&one).unwrap().tests, 11);
        assert_eq!(run_dorfman(&[true]).unwrap().tests, 2);
        assert!(run_dorfman(&[]).is_err());
    }

    #[test]
    fn sterrett_traces() {
        assert_eq!(run_sterrett(&[false; 5]).unwrap().tests, 1);
        assert_eq!(run_sterrett(&bits("+-")).unwrap().tests, 3);
        assert_eq!(run_sterrett(&bits("-+")).unwrap().tests, 2);
        assert_eq!(run_sterrett(&bits("++")).unwrap().tests, 3);
        // pool, 1-, 2+, tail {3,4} +, 3-, 4 inferred
        let out = run_sterrett(&bits("-+-+")).unwrap();
        assert_eq!(out.tests, 5);
        assert_eq!(out.identified, bits("-+-+"));
    }

    #[test]
    fn halving_traces() {
        assert_eq!(run_halving(&[false; 13]).unwrap().tests, 1);
        for s in ["+-", "-+", "++"] {
            assert_eq!(run_halving(&bits(s)).unwrap().tests, 3);
        }
        assert_eq!(run_halving(&[true]).unwrap().tests, 1);
        assert_eq!(run_halving(&[false]).unwrap().tests, 1);
        // pool, {1,2}+ -> 1-, 2+, {3} -
        assert_eq!(run_halving(&bits("-+-")).unwrap().tests, 5);
    }

    #[test]
    fn enumeration_matches_small_formulas() {
        let prev = Prevalence::from_p(0.2).unwrap();
        let e = exact_expected_tests(prev, Scheme::Dorfman, 3).unwrap();
        assert!((e - (1.0 / 3.0 + 1.0 - 0.8f64.powi(3))).abs() < 1e-14);
        let e = exact_expected_tests(prev, Scheme::Halving, 2).unwrap();
        assert!((e - (3.0 - 2.0 * 0.64) / 2.0).abs() < 1e-14);
        assert!(exact_expected_tests(prev, Scheme::A2, 5).is_err());
    }

    #[test]
    fn single_trial_report() {
        let prev = Prevalence::from_p(0.3).unwrap();
        let r = estimate_t(prev, Scheme::Dorfman, 4, 1, 11).unwrap();
        assert!(r.std_error_undefined);
        assert_eq!(r.std_error, 0.0);
        let c = Cohort::sample(prev, 4, 11, 0);
        let tests = run_dorfman(&c.statuses).unwrap().tests;
        assert_eq!(r.mean_tests_per_person, tests as f64 / 4.0);
        assert!(estimate_t(prev, Scheme::Dorfman, 4, 0, 11).is_err());
    }

    #[test]
    fn streams_are_order_independent() {
        let prev = Prevalence::from_p(0.5).unwrap();
        let a = Cohort::sample(prev, 16, 3, 5);
        let _ = Cohort::sample(prev, 16, 3, 4);
        let b = Cohort::sample(prev, 16, 3, 5);
        assert_eq!(a, b);
        assert_ne!(a.statuses, Cohort::sample(prev, 16, 3, 6).statuses);
    }
}
