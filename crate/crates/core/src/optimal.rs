//! Optimal configurations.
//!
//! For the square array this covers the root curve `n ↦ q_n` of
//! `g(q, n) = 0`, its minimum (the critical pair), the efficiency interval
//! `(n_L, n_U)` on which `t < 1`, the continuous minimizer and maximizer of
//! `n ↦ t(q, n)`, and the integer optimum with its three-element candidate
//! window. The Dorfman, Sterrett and Halving optima are computed alongside,
//! each cross-checked by an exhaustive integer scan.
//!
//! Integer argmins break ties towards the smaller size.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::numerics::{find_root, minimize_unimodal, Bracket, Tolerance};
use crate::schemes::{
    a2_dg_dn, a2_g, a2_t_unchecked, dorfman_t, sterrett_t_closed_unchecked, sterrett_t_fast,
    HalvingTable, Prevalence, Scheme,
};

/// Minimum of the root curve `n ↦ q_n`: below `q_star` the array never
/// beats individual testing, at any real order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPair {
    pub q_star: f64,
    pub n_star: f64,
}

impl CriticalPair {
    /// Residuals of the two defining equations
    /// `ln q = n qⁿ (1 - q^(n-1)/2) ln q` and
    /// `n ln q = -(1 - q^(n-1)/2) / (1 - q^(n-1))`.
    pub fn residuals(&self) -> (f64, f64) {
        let (q, n) = (self.q_star, self.n_star);
        let lnq = q.ln();
        let qn1 = q.powf(n - 1.0);
        let first = lnq - n * q.powf(n) * (1.0 - qn1 / 2.0) * lnq;
        let second = n * lnq + (1.0 - qn1 / 2.0) / (1.0 - qn1);
        (first, second)
    }
}

/// Orders `n` with `t(q, n) < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyInterval {
    pub n_lower: f64,
    pub n_upper: f64,
}

impl EfficiencyInterval {
    pub fn contains(&self, n: f64) -> bool {
        self.n_lower < n && n < self.n_upper
    }
}

/// The three consecutive orders guaranteed to contain the integer optimum
/// for `q > q_5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateWindow {
    /// `p^(-2/3) + p^(-1/3)/2 + 0.2 + 3p²`.
    pub base: f64,
    /// `n_min - base`, when the continuous minimizer exists.
    pub offset_t: Option<f64>,
    pub candidates: [u64; 3],
}

impl CandidateWindow {
    pub fn new(prev: Prevalence) -> Self {
        let base = window_base(prev);
        let lo = base.floor() as u64;
        CandidateWindow {
            base,
            offset_t: None,
            candidates: [lo, lo + 1, lo + 2],
        }
    }

    /// `n(q, t) = base + t`.
    pub fn n_at(&self, t: f64) -> f64 {
        self.base + t
    }

    pub fn with_minimizer(mut self, n_min: f64) -> Self {
        self.offset_t = Some(n_min - self.base);
        self
    }
}

/// `p^(-2/3) + p^(-1/3)/2 + 0.2 + 3p²`.
pub fn window_base(prev: Prevalence) -> f64 {
    let p = prev.p();
    p.powf(-2.0 / 3.0) + 0.5 * p.powf(-1.0 / 3.0) + 0.2 + 3.0 * p * p
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousOptimum {
    pub size: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegerOptimum {
    pub size: u64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSummary {
    /// Largest size included in the scan.
    pub cap: u64,
    pub best: IntegerOptimum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalConfiguration {
    pub scheme: Scheme,
    pub continuous_opt: Option<ContinuousOptimum>,
    /// The exhaustive-scan argmin when a scan was run, otherwise the
    /// candidate-set argmin.
    pub integer_opt: IntegerOptimum,
    /// Published candidate set for the integer optimum.
    pub candidates: Vec<u64>,
    pub candidate_opt: IntegerOptimum,
    pub scan: Option<ScanSummary>,
    pub efficiency: Option<EfficiencyInterval>,
    /// Set when no admissible size beats individual testing (`t >= 1`).
    pub individual_testing_preferred: bool,
}

impl OptimalConfiguration {
    pub fn candidates_contain_optimum(&self) -> bool {
        self.candidates.contains(&self.integer_opt.size)
    }

    /// True when both the scan and the candidate set were evaluated and
    /// they pick the same size.
    pub fn scan_agrees(&self) -> Option<bool> {
        self.scan.map(|s| s.best.size == self.candidate_opt.size)
    }
}

/// Ascending argmin with ties to the smaller size.
fn argmin<I: IntoIterator<Item = (u64, f64)>>(values: I) -> Option<IntegerOptimum> {
    let mut best: Option<IntegerOptimum> = None;
    for (size, t) in values {
        match best {
            Some(b) if !(t < b.t) => {}
            _ => best = Some(IntegerOptimum { size, t }),
        }
    }
    best
}

fn root_tol() -> Tolerance {
    Tolerance {
        abs_x: 1e-15,
        abs_f: 0.0,
        max_iter: 400,
    }
}

/// The unique `q ∈ (0, 1)` with `g(q, n) = 0`, for `n > 2`.
pub fn a2_q_n(n: f64) -> Result<f64> {
    if !(n > 2.0) || !n.is_finite() {
        return Err(Error::Size {
            scheme: Scheme::A2,
            size: n,
            min: 2.0,
        });
    }
    let g = |q: f64| a2_g(Prevalence::from_q(q).expect("q in (0,1)"), n);
    let lo = f64::MIN_POSITIVE;
    let hi = 1.0 - f64::EPSILON / 2.0;
    find_root(g, Bracket::new(g, lo, hi)?, root_tol())
}

/// Minimum `(q*, n*)` of the root curve `n ↦ q_n`, cached after the first
/// call.
pub fn a2_critical_pair() -> Result<CriticalPair> {
    static PAIR: OnceLock<std::result::Result<CriticalPair, Error>> = OnceLock::new();
    PAIR.get_or_init(compute_critical_pair).clone()
}

fn compute_critical_pair() -> Result<CriticalPair> {
    let curve = |n: f64| a2_q_n(n).unwrap_or(f64::INFINITY);
    let (n_golden, _) = minimize_unimodal(curve, 2.5, 10.0, Tolerance::with_abs_x(1e-10))?;

    // Along the curve dq_n/dn has the sign of ∂g/∂n, so the minimum is the
    // root of ∂g/∂n(q_n, n). Polish the golden-section estimate with it.
    let slope = |n: f64| match a2_q_n(n) {
        Ok(q) => a2_dg_dn(Prevalence::from_q(q).expect("q in (0,1)"), n),
        Err(_) => f64::NAN,
    };
    let bracket = Bracket::new(slope, n_golden - 0.25, n_golden + 0.25)?;
    let n_star = if bracket.has_sign_change() {
        find_root(slope, bracket, root_tol())?
    } else {
        n_golden
    };
    Ok(CriticalPair {
        q_star: a2_q_n(n_star)?,
        n_star,
    })
}

/// `q_5`, the root of `g(q, 5) = 0`, cached.
pub fn a2_q5() -> f64 {
    static Q5: OnceLock<f64> = OnceLock::new();
    *Q5.get_or_init(|| a2_q_n(5.0).expect("q_5 is well defined"))
}

fn require_above_critical(prev: Prevalence, what: &'static str) -> Result<CriticalPair> {
    let pair = a2_critical_pair()?;
    if prev.q() <= pair.q_star {
        return Err(Error::Region {
            q: prev.q(),
            what,
            region: format!("q > q* = {:.9}", pair.q_star),
        });
    }
    Ok(pair)
}

/// The two roots `n_L < n* < n_U` of `n ↦ g(q, n)` for `q > q*`.
pub fn a2_efficiency_interval(prev: Prevalence) -> Result<EfficiencyInterval> {
    let pair = require_above_critical(prev, "the efficiency interval")?;
    let g = |n: f64| a2_g(prev, n);

    let mut delta = 0.5 * (pair.n_star - 2.0);
    let mut left = 2.0 + delta;
    for _ in 0..1100 {
        if g(left) > 0.0 {
            break;
        }
        delta *= 0.5;
        left = 2.0 + delta;
    }
    let n_lower = find_root(g, Bracket::new(g, left, pair.n_star)?, root_tol())?;

    let mut right = 2.0 * pair.n_star;
    while g(right) <= 0.0 {
        right *= 2.0;
        if !right.is_finite() {
            return Err(Error::NoConvergence {
                method: "efficiency interval expansion",
                max_iter: 1024,
            });
        }
    }
    let n_upper = find_root(g, Bracket::new(g, pair.n_star, right)?, root_tol())?;
    Ok(EfficiencyInterval { n_lower, n_upper })
}

/// Continuous minimizer `n_min` of `n ↦ t(q, n)` and the value there.
pub fn a2_continuous_minimizer(prev: Prevalence) -> Result<(f64, f64)> {
    let interval = a2_efficiency_interval(prev)?;
    minimizer_in(prev, &interval)
}

fn minimizer_in(prev: Prevalence, interval: &EfficiencyInterval) -> Result<(f64, f64)> {
    let t = |n: f64| a2_t_unchecked(prev, n);
    let (n_golden, _) = minimize_unimodal(
        t,
        interval.n_lower,
        interval.n_upper,
        Tolerance::with_abs_x(1e-9),
    )?;
    let n_min = polish_critical_point(prev, n_golden, interval.n_lower, interval.n_upper);
    Ok((n_min, t(n_min)))
}

/// Refines a golden-section estimate by root-finding `∂t/∂n` on a small
/// bracket around it; falls back to the estimate when no sign change is
/// seen.
fn polish_critical_point(prev: Prevalence, n0: f64, lo: f64, hi: f64) -> f64 {
    let d = |n: f64| a2_dg_dn(prev, n);
    let half = (1e-4 * n0).max(1e-6);
    let (a, b) = ((n0 - half).max(lo), (n0 + half).min(hi));
    match Bracket::new(d, a, b) {
        Ok(br) if br.has_sign_change() => find_root(d, br, root_tol()).unwrap_or(n0),
        _ => n0,
    }
}

/// The global maximizer of `n ↦ t(q, n)`, located beyond `n_U`.
pub fn a2_continuous_maximizer(prev: Prevalence) -> Result<(f64, f64)> {
    let interval = a2_efficiency_interval(prev)?;
    let d = |n: f64| a2_dg_dn(prev, n);
    // t rises from n_U; double the cap until it is falling again.
    let mut cap = 2.0 * interval.n_upper;
    while d(cap) >= 0.0 {
        cap *= 2.0;
        if !cap.is_finite() {
            return Err(Error::NoConvergence {
                method: "maximizer enclosure",
                max_iter: 1024,
            });
        }
    }
    let neg_t = |n: f64| -a2_t_unchecked(prev, n);
    let (n_golden, _) =
        minimize_unimodal(neg_t, interval.n_upper, cap, Tolerance::with_abs_x(1e-9))?;
    let n_max = polish_critical_point(prev, n_golden, interval.n_upper, cap);
    Ok((n_max, a2_t_unchecked(prev, n_max)))
}

/// Exhaustive-scan cap for the array order: `max(64, ⌈4(base + 2)⌉)`.
pub fn a2_scan_cap(prev: Prevalence) -> u64 {
    let cap = (4.0 * (window_base(prev) + 2.0)).ceil();
    (cap as u64).max(64)
}

/// Exhaustive-scan cap for pool sizes: `⌈8/p⌉`.
pub fn linear_scan_cap(prev: Prevalence) -> u64 {
    ((8.0 / prev.p()).ceil() as u64).max(2)
}

/// Exhaustive integer argmin of `t(q, n)` over `n ∈ {2, …, cap}`.
pub fn a2_integer_scan(prev: Prevalence) -> ScanSummary {
    let cap = a2_scan_cap(prev);
    let best =
        argmin((2..=cap).map(|n| (n, a2_t_unchecked(prev, n as f64)))).expect("nonempty scan");
    ScanSummary { cap, best }
}

/// The integer rule `n_opt(q)` alone: the candidate-window argmin for
/// `q > q_5`, the exhaustive scan otherwise. Cheap enough for inner loops.
pub fn a2_integer_rule(prev: Prevalence) -> IntegerOptimum {
    if prev.q() > a2_q5() {
        let lo = window_base(prev).floor() as u64;
        argmin((lo.max(2)..=lo + 2).map(|n| (n, a2_t_unchecked(prev, n as f64))))
            .expect("nonempty window")
    } else {
        a2_integer_scan(prev).best
    }
}

/// Integer array order minimizing `t(q, n)`.
///
/// For `q > q_5` only the three candidates of the window are evaluated.
/// Otherwise an exhaustive scan is run and, since no order then beats
/// individual testing, `individual_testing_preferred` is set.
pub fn a2_integer_optimum(prev: Prevalence) -> Result<OptimalConfiguration> {
    let window = CandidateWindow::new(prev);
    let candidates = window.candidates.to_vec();
    let candidate_opt = argmin(
        candidates
            .iter()
            .filter(|&&n| n >= 2)
            .map(|&n| (n, a2_t_unchecked(prev, n as f64))),
    )
    .ok_or_else(|| Error::Invalid("empty candidate set".into()))?;

    let above_critical = prev.q() > a2_critical_pair()?.q_star;
    let efficiency = if above_critical {
        Some(a2_efficiency_interval(prev)?)
    } else {
        None
    };
    let continuous_opt = match &efficiency {
        Some(iv) => {
            let (size, t) = minimizer_in(prev, iv)?;
            Some(ContinuousOptimum { size, t })
        }
        None => None,
    };

    let (integer_opt, scan) = if prev.q() > a2_q5() {
        (candidate_opt, None)
    } else {
        let scan = a2_integer_scan(prev);
        (scan.best, Some(scan))
    };

    Ok(OptimalConfiguration {
        scheme: Scheme::A2,
        continuous_opt,
        integer_opt,
        candidates,
        candidate_opt,
        scan,
        efficiency,
        individual_testing_preferred: integer_opt.t >= 1.0,
    })
}

/// The candidate window with `t* = n_min - base` filled in.
pub fn a2_candidate_window(prev: Prevalence) -> Result<CandidateWindow> {
    let (n_min, _) = a2_continuous_minimizer(prev)?;
    Ok(CandidateWindow::new(prev).with_minimizer(n_min))
}

/// Root of `1/N² = -q^N ln q`, the minimizer of `N ↦ 1/N + 1 - q^N`, or
/// `None` when the cost has no interior minimum.
pub fn dorfman_continuous(prev: Prevalence) -> Result<Option<ContinuousOptimum>> {
    let lnq = prev.q().ln();
    let stationary = |n: f64| 1.0 / (n * n) + prev.q_pow(n) * lnq;

    // stationary(1) = 1 + q ln q > 0. Walk right until it turns negative;
    // the first sign change is the minimizer.
    let mut right = 1.25;
    let cap = 64.0 / prev.p().sqrt() + 64.0;
    while stationary(right) >= 0.0 && right < cap {
        right *= 1.25;
    }
    if stationary(right) < 0.0 {
        let n = find_root(
            stationary,
            Bracket::new(stationary, 1.0, right)?,
            root_tol(),
        )?;
        Ok(Some(ContinuousOptimum {
            size: n,
            t: dorfman_t(prev, n)?,
        }))
    } else {
        Ok(None)
    }
}

/// Dorfman: continuous optimum from `1/N² = -q^N ln q`, integer optimum by
/// exhaustive scan; the candidates are `1 + ⌊p^(-1/2)⌋` and `2 + ⌊p^(-1/2)⌋`.
pub fn dorfman_optimum(prev: Prevalence) -> Result<OptimalConfiguration> {
    let continuous_opt = dorfman_continuous(prev)?;

    let k = prev.p().powf(-0.5).floor() as u64;
    let candidates = vec![1 + k, 2 + k];
    let eval = |n: u64| 1.0 / n as f64 + 1.0 - prev.q_pow(n as f64);
    let candidate_opt = argmin(candidates.iter().map(|&n| (n, eval(n)))).expect("two candidates");
    let cap = linear_scan_cap(prev);
    let scan = ScanSummary {
        cap,
        best: argmin((1..=cap).map(|n| (n, eval(n)))).expect("nonempty"),
    };

    Ok(OptimalConfiguration {
        scheme: Scheme::Dorfman,
        continuous_opt,
        integer_opt: scan.best,
        candidates,
        candidate_opt,
        scan: Some(scan),
        efficiency: None,
        individual_testing_preferred: scan.best.t >= 1.0,
    })
}

/// Minimizer of the closed-form Sterrett cost, searched within `√(2/p) ± 2`.
pub fn sterrett_continuous(prev: Prevalence) -> Result<ContinuousOptimum> {
    let root2p = (2.0 / prev.p()).sqrt();
    let (size, t) = minimize_unimodal(
        |n| sterrett_t_closed_unchecked(prev, n),
        (root2p - 2.0).max(1.0),
        root2p + 2.0,
        Tolerance::with_abs_x(1e-10),
    )?;
    Ok(ContinuousOptimum { size, t })
}

const STERRETT_P_MAX: f64 = 0.381_966_011_250_105_1; // (3 - √5) / 2

/// Sterrett: integer optimum by exhaustive scan (candidates
/// `⌊√(2/p)⌋ + {0, 1, 2}`), continuous optimum of the closed form searched
/// within `√(2/p) ± 2`.
pub fn sterrett_optimum(prev: Prevalence) -> Result<OptimalConfiguration> {
    if prev.p() >= STERRETT_P_MAX {
        return Err(Error::Region {
            q: prev.q(),
            what: "the Sterrett candidate set",
            region: format!("p < (3 - √5)/2 = {STERRETT_P_MAX:.6}"),
        });
    }
    let continuous = sterrett_continuous(prev)?;
    let root2p = (2.0 / prev.p()).sqrt();
    let k = root2p.floor() as u64;
    let candidates = vec![k, k + 1, k + 2];
    let candidate_opt = argmin(candidates.iter().map(|&n| (n, sterrett_t_fast(prev, n))))
        .expect("three candidates");
    let cap = linear_scan_cap(prev);
    let scan = ScanSummary {
        cap,
        best: argmin((1..=cap).map(|n| (n, sterrett_t_fast(prev, n)))).expect("nonempty"),
    };

    Ok(OptimalConfiguration {
        scheme: Scheme::Sterrett,
        continuous_opt: Some(continuous),
        integer_opt: scan.best,
        candidates,
        candidate_opt,
        scan: Some(scan),
        efficiency: None,
        individual_testing_preferred: scan.best.t >= 1.0,
    })
}

/// `1 / (2 log₂(1/q))`, the pool size below which doubling a halving pool
/// lowers its cost.
pub fn halving_threshold(prev: Prevalence) -> f64 {
    1.0 / (2.0 * (1.0 / prev.q()).log2())
}

/// Continuous-scale halving surrogate `1/N + 2p log₂ N`, the level-count
/// bound on the halving cost.
pub fn halving_surrogate_t(prev: Prevalence, size: f64) -> f64 {
    1.0 / size + 2.0 * prev.p() * size.log2()
}

/// Halving: integer optimum by exhaustive scan of the exact recursion; the
/// candidates are `⌊1/(2 log₂(1/q))⌋` and its successor, clamped to `>= 1`.
/// The continuous optimum is the doubling threshold with the surrogate cost.
pub fn halving_optimum(prev: Prevalence) -> Result<OptimalConfiguration> {
    let x0 = halving_threshold(prev);
    let k = x0.floor() as u64;
    let mut candidates = vec![k.max(1), (k + 1).max(1)];
    candidates.dedup();

    let cap = linear_scan_cap(prev);
    let table = HalvingTable::new(prev, cap);
    let candidate_opt = argmin(candidates.iter().map(|&n| (n, table.t(n)))).expect("nonempty");
    let scan = ScanSummary {
        cap,
        best: argmin((1..=cap).map(|n| (n, table.t(n)))).expect("nonempty"),
    };

    let size = x0.max(1.0);
    Ok(OptimalConfiguration {
        scheme: Scheme::Halving,
        continuous_opt: Some(ContinuousOptimum {
            size,
            t: halving_surrogate_t(prev, size),
        }),
        integer_opt: scan.best,
        candidates,
        candidate_opt,
        scan: Some(scan),
        efficiency: None,
        individual_testing_preferred: scan.best.t >= 1.0,
    })
}

/// Optimal configuration of any scheme.
pub fn optimum(scheme: Scheme, prev: Prevalence) -> Result<OptimalConfiguration> {
    match scheme {
        Scheme::A2 => a2_integer_optimum(prev),
        Scheme::Dorfman => dorfman_optimum(prev),
        Scheme::Sterrett => sterrett_optimum(prev),
        Scheme::Halving => halving_optimum(prev),
    }
}

/// Unrounded optimum on the comparison scale: `n_min` for the array (total
/// cohort `n_min²`), `N*` for the pooling schemes.
pub fn continuous_optimum(scheme: Scheme, prev: Prevalence) -> Result<ContinuousOptimum> {
    match scheme {
        Scheme::A2 => {
            let (size, t) = a2_continuous_minimizer(prev)?;
            Ok(ContinuousOptimum { size, t })
        }
        Scheme::Halving => {
            let size = halving_threshold(prev).max(1.0);
            Ok(ContinuousOptimum {
                size,
                t: halving_surrogate_t(prev, size),
            })
        }
        Scheme::Dorfman => dorfman_continuous(prev)?.ok_or(Error::Region {
            q: prev.q(),
            what: "the continuous Dorfman optimum",
            region: "p below ~0.3066".into(),
        }),
        Scheme::Sterrett => sterrett_continuous(prev),
    }
}
