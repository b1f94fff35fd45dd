//! Numerical verification of the array's optimality structure.
//!
//! Each check evaluates an inequality or identity over a grid and reports
//! the worst residual. For inequalities of the form `x < 0` the residual is
//! the largest `x` seen, so a check passes iff its residual is negative;
//! for equalities the residual is the largest absolute error and the check
//! passes iff it stays within the stated tolerance.

use std::fmt;

use crate::error::Result;
use crate::montecarlo::exact_expected_tests;
use crate::numerics::{find_root, Bracket, Tolerance};
use crate::optimal::{a2_critical_pair, a2_efficiency_interval, a2_q5, window_base, CriticalPair};
use crate::schemes::{a2_dg_dn, a2_g, tests_per_person, Prevalence, Scheme, SchemeSize};

/// Published critical pair.
pub const CRITICAL_PAIR_REFERENCE: (f64, f64) = (0.748416, 4.453524);
pub const CRITICAL_PAIR_TOL: f64 = 1e-5;
/// Published `q_5`.
pub const Q5_REFERENCE: f64 = 0.750209961;
pub const Q5_TOL: f64 = 1e-8;
/// Published landmark values at `q = 0.755`: `g(q, n(q, 0))`,
/// `g(q, n(q, 1))`, `h(0, q)` and `h(1, q)`.
pub const LANDMARKS: [f64; 4] = [-0.002258, -0.013690, -0.2645889, 0.081749];
pub const LANDMARK_TOL: f64 = 1e-6;
pub const ENUMERATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub check: String,
    pub grid: String,
    pub worst_residual: f64,
    pub pass: bool,
}

impl VerificationReport {
    fn new(check: &str, grid: impl Into<String>, worst_residual: f64, pass: bool) -> Self {
        VerificationReport {
            check: check.into(),
            grid: grid.into(),
            worst_residual,
            pass,
        }
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "check={} grid=\"{}\" worst_residual={:.6e} pass={}",
            self.check, self.grid, self.worst_residual, self.pass
        )
    }
}

/// Quantities of the `x = qⁿ` substitution at one `(q, n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProofProbe {
    /// `1/(2q)`.
    pub c: f64,
    /// `qⁿ`.
    pub x: f64,
    /// Root of `-ln x = (1 - cx)/(1 - 2cx)` on `(0, q)`.
    pub x0: f64,
    /// `-(x - cx²) ln x`.
    pub h_of_x: f64,
}

impl ProofProbe {
    pub fn new(prev: Prevalence, n: f64) -> Result<Self> {
        let c = 1.0 / (2.0 * prev.q());
        let x = prev.q_pow(n);
        Ok(ProofProbe {
            c,
            x,
            x0: solve_x0(prev)?,
            h_of_x: h_of_x(c, x),
        })
    }
}

/// `-(x - cx²) ln x`.
pub fn h_of_x(c: f64, x: f64) -> f64 {
    -(x - c * x * x) * x.ln()
}

fn dh_dx(c: f64, x: f64) -> f64 {
    -(1.0 - 2.0 * c * x) * x.ln() - (1.0 - c * x)
}

/// `n(q, t) = p^(-2/3) + p^(-1/3)/2 + 0.2 + 3p² + t`.
pub fn n_of(prev: Prevalence, t: f64) -> f64 {
    window_base(prev) + t
}

/// `h(t, q) = -n² qⁿ ln q (1 - q^(n-1)) - 1` at `n = n(q, t)`.
pub fn h_tq(t: f64, prev: Prevalence) -> f64 {
    let n = n_of(prev, t);
    -n * n * prev.q_pow(n) * prev.q().ln() * (1.0 - prev.q_pow(n - 1.0)) - 1.0
}

/// The maximizer `x0` of `h(x)` on `(0, q)`.
pub fn solve_x0(prev: Prevalence) -> Result<f64> {
    let q = prev.q();
    let c = 1.0 / (2.0 * q);
    let f = |x: f64| -x.ln() - (1.0 - c * x) / (1.0 - 2.0 * c * x);
    let lo = f64::MIN_POSITIVE;
    let hi = q * (1.0 - 1e-15);
    find_root(
        f,
        Bracket::new(f, lo, hi)?,
        Tolerance {
            abs_x: 1e-16,
            abs_f: 0.0,
            max_iter: 400,
        },
    )
}

/// `q` grid `lo, lo + step, …, hi` built from integer steps.
pub fn q_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=count).map(|k| lo + k as f64 * step).collect()
}

fn grid_label(lo: f64, hi: f64, step: f64) -> String {
    format!("q in [{lo}, {hi}] step {step}")
}

/// The two default grids: the whole range and a refinement near its
/// lower end.
pub fn default_q_grids() -> Vec<(String, Vec<f64>)> {
    vec![
        (grid_label(0.755, 0.999, 1e-3), q_grid(0.755, 0.999, 1e-3)),
        (grid_label(0.755, 0.765, 1e-5), q_grid(0.755, 0.765, 1e-5)),
    ]
}

/// `∂g/∂q < 0` by central differences, plus the endpoint limits
/// `g(0+, n) = 2/n` and `g(1-, n) = 2/n - 1`.
///
/// The difference is taken of `-2qⁿ + q^(2n-1)` alone: the constant `2/n`
/// does not affect the derivative but would swamp it in rounding when `qⁿ`
/// is tiny.
pub fn check_g_decreasing_in_q(n_grid: &[f64], q_grid: &[f64]) -> VerificationReport {
    let phi = |q: f64, n: f64| -2.0 * q.powf(n) + q.powf(2.0 * n - 1.0);
    let mut worst = f64::NEG_INFINITY;
    let mut endpoint_err: f64 = 0.0;
    for &n in n_grid {
        for &q in q_grid {
            let h = 1e-6 * q.abs();
            let d = (phi(q + h, n) - phi(q - h, n)) / (2.0 * h);
            worst = worst.max(d);
        }
        let g_lo = a2_g(Prevalence::from_q(1e-9).expect("valid q"), n);
        let g_hi = a2_g(Prevalence::from_q(1.0 - 1e-9).expect("valid q"), n);
        endpoint_err = endpoint_err
            .max((g_lo - 2.0 / n).abs())
            .max((g_hi - (2.0 / n - 1.0)).abs());
    }
    let pass = worst < 0.0 && endpoint_err <= 1e-6;
    VerificationReport::new(
        "g_decreasing_in_q",
        format!(
            "{} n values x {} q values; endpoint error {:.3e}",
            n_grid.len(),
            q_grid.len(),
            endpoint_err
        ),
        worst,
        pass,
    )
}

/// `x0` solves its equation, `h` rises before it and falls after it,
/// `x0` increases with `q` (decreases with `c`), and `h(x0) > -ln q`.
pub fn check_x0(q_values: &[f64]) -> Result<VerificationReport> {
    let mut worst_eq: f64 = 0.0;
    let mut pass = true;
    let mut last: Option<f64> = None;
    for &q in q_values {
        let prev = Prevalence::from_q(q)?;
        let c = 1.0 / (2.0 * q);
        let x0 = solve_x0(prev)?;
        worst_eq = worst_eq.max((-x0.ln() - (1.0 - c * x0) / (1.0 - 2.0 * c * x0)).abs());
        pass &= x0 > 0.0 && x0 < q && 1.0 - 2.0 * c * x0 > 0.0;
        pass &= dh_dx(c, 0.5 * x0) > 0.0 && dh_dx(c, 0.5 * (x0 + q)) < 0.0;
        pass &= h_of_x(c, x0) > -q.ln();
        if let Some(prev_x0) = last {
            pass &= x0 > prev_x0;
        }
        last = Some(x0);
    }
    pass &= worst_eq < 1e-10;
    Ok(VerificationReport::new(
        "x0_root",
        format!("{} q values", q_values.len()),
        worst_eq,
        pass,
    ))
}

/// `max(g(q, n(q, 0)), g(q, n(q, 1))) < 0` on the grid.
pub fn check_window_ends_efficient(q_grid: &[f64], label: &str) -> Result<VerificationReport> {
    let mut worst = f64::NEG_INFINITY;
    for &q in q_grid {
        let prev = Prevalence::from_q(q)?;
        worst = worst
            .max(a2_g(prev, n_of(prev, 0.0)))
            .max(a2_g(prev, n_of(prev, 1.0)));
    }
    Ok(VerificationReport::new(
        "window_ends_efficient",
        label,
        worst,
        worst < 0.0,
    ))
}

/// `h(0, q) < 0 < h(1, q)` on the grid. The residual is the largest of
/// `h(0, q)` and `-h(1, q)`.
pub fn check_window_brackets_minimizer(q_grid: &[f64], label: &str) -> Result<VerificationReport> {
    let mut worst = f64::NEG_INFINITY;
    for &q in q_grid {
        let prev = Prevalence::from_q(q)?;
        worst = worst.max(h_tq(0.0, prev)).max(-h_tq(1.0, prev));
    }
    Ok(VerificationReport::new(
        "window_brackets_minimizer",
        label,
        worst,
        worst < 0.0,
    ))
}

/// `g(1/2, n) > 0`, i.e. `2ⁿ > n(1 - 2⁻ⁿ)`. The residual is the smallest
/// `g(1/2, n)`.
pub fn check_half_bound(n_grid: &[f64]) -> VerificationReport {
    let half = Prevalence::from_q(0.5).expect("valid q");
    let worst = n_grid
        .iter()
        .map(|&n| a2_g(half, n))
        .fold(f64::INFINITY, f64::min);
    VerificationReport::new(
        "half_lower_bound",
        format!("{} n values in (2, 200]", n_grid.len()),
        worst,
        worst > 0.0 && n_grid.iter().all(|&n| n > 2.0 && n <= 200.0),
    )
}

/// Sign changes of `∂t/∂n` on `(2, cap)`, located on a log-spaced grid.
pub fn critical_points(prev: Prevalence, points: usize) -> Vec<(f64, bool)> {
    // Beyond qⁿ = e^-60 the derivative is -2/n² to working precision.
    let cap = (60.0 / -prev.q().ln()).max(50.0);
    let (a, b) = ((2.0 + 1e-9f64).ln(), cap.ln());
    let mut out = Vec::new();
    let mut prev_n = (a).exp();
    let mut prev_d = a2_dg_dn(prev, prev_n);
    for i in 1..=points {
        let n = (a + (b - a) * i as f64 / points as f64).exp();
        let d = a2_dg_dn(prev, n);
        if prev_d.signum() != d.signum() && d != 0.0 {
            let f = |x: f64| a2_dg_dn(prev, x);
            let root = Bracket::new(f, prev_n, n)
                .and_then(|br| find_root(f, br, Tolerance::with_abs_x(1e-10)))
                .unwrap_or(0.5 * (prev_n + n));
            // true marks a minimum (derivative turning positive).
            out.push((root, d > 0.0));
        }
        prev_n = n;
        prev_d = d;
    }
    out
}

/// Exactly two critical points: a minimum inside `(n_L, n_U)` and a
/// maximum beyond `n_U`.
pub fn check_two_critical_points(prev: Prevalence) -> Result<VerificationReport> {
    let interval = a2_efficiency_interval(prev)?;
    let cps = critical_points(prev, 200_000);
    let pass = cps.len() == 2
        && cps[0].1
        && interval.contains(cps[0].0)
        && !cps[1].1
        && cps[1].0 > interval.n_upper;
    let residual = if cps.len() == 2 {
        (cps[1].0 - interval.n_upper).min(cps[0].0 - interval.n_lower)
    } else {
        f64::NAN
    };
    Ok(VerificationReport::new(
        "two_critical_points",
        format!("q = {}; {} sign changes on (2, cap)", prev.q(), cps.len()),
        residual,
        pass,
    ))
}

/// Residuals of the critical pair against the published values, plus the
/// defining equations.
pub fn check_critical_pair() -> Result<(CriticalPair, VerificationReport)> {
    let pair = a2_critical_pair()?;
    let (r1, r2) = pair.residuals();
    let dq = (pair.q_star - CRITICAL_PAIR_REFERENCE.0).abs();
    let dn = (pair.n_star - CRITICAL_PAIR_REFERENCE.1).abs();
    let worst = dq.max(dn);
    let pass = worst <= CRITICAL_PAIR_TOL && r1.abs() < 1e-9 && r2.abs() < 1e-6;
    Ok((
        pair,
        VerificationReport::new(
            "critical_pair",
            format!(
                "q*={:.9} n*={:.9} vs (0.748416, 4.453524); equation residuals {:.3e}, {:.3e}",
                pair.q_star, pair.n_star, r1, r2
            ),
            worst,
            pass,
        ),
    ))
}

pub fn check_q5() -> VerificationReport {
    let q5 = a2_q5();
    let r = (q5 - Q5_REFERENCE).abs();
    VerificationReport::new("q5", format!("q_5={q5:.12} vs 0.750209961"), r, r <= Q5_TOL)
}

/// The four landmark values at `q = 0.755`, computed.
pub fn landmarks() -> [f64; 4] {
    let prev = Prevalence::from_q(0.755).expect("valid q");
    [
        a2_g(prev, n_of(prev, 0.0)),
        a2_g(prev, n_of(prev, 1.0)),
        h_tq(0.0, prev),
        h_tq(1.0, prev),
    ]
}

pub fn check_landmarks() -> VerificationReport {
    let values = landmarks();
    let worst = values
        .iter()
        .zip(LANDMARKS)
        .map(|(v, r)| (v - r).abs())
        .fold(0.0, f64::max);
    VerificationReport::new(
        "landmarks_0.755",
        format!(
            "computed {:.7} {:.7} {:.7} {:.7}",
            values[0], values[1], values[2], values[3]
        ),
        worst,
        worst <= LANDMARK_TOL,
    )
}

/// Enumeration over all status patterns against the cost formulas, for
/// every scheme at sizes up to 12 (array orders 2 and 3).
pub fn check_enumeration(p_values: &[f64]) -> Result<VerificationReport> {
    let mut worst: f64 = 0.0;
    for &p in p_values {
        let prev = Prevalence::from_p(p)?;
        for scheme in Scheme::ALL {
            let sizes: Vec<u64> = match scheme {
                Scheme::A2 => vec![2, 3],
                _ => (1..=12).collect(),
            };
            for size in sizes {
                let exact = exact_expected_tests(prev, scheme, size)?;
                let formula = tests_per_person(prev, SchemeSize::integer(scheme, size)?)?;
                worst = worst.max((exact - formula).abs());
            }
        }
    }
    Ok(VerificationReport::new(
        "enumeration_equivalence",
        format!("all schemes, sizes <= 12 (array n <= 3), p in {p_values:?}"),
        worst,
        worst <= ENUMERATION_TOL,
    ))
}

/// The full suite with default grids.
pub fn default_suite() -> Result<Vec<VerificationReport>> {
    let mut reports = vec![check_critical_pair()?.1, check_q5(), check_landmarks()];

    let n_grid: Vec<f64> = (0..=35).map(|k| 2.5 + 0.5 * k as f64).collect();
    let q_dense: Vec<f64> = (1..=99).map(|k| k as f64 / 100.0).collect();
    reports.push(check_g_decreasing_in_q(&n_grid, &q_dense));

    let half_grid: Vec<f64> = (0..=1980)
        .map(|k| 2.01 + 0.1 * k as f64)
        .filter(|&n| n <= 200.0)
        .collect();
    reports.push(check_half_bound(&half_grid));

    let x0_qs = q_grid(0.75, 0.999, 1e-3);
    reports.push(check_x0(&x0_qs)?);

    for (label, grid) in default_q_grids() {
        reports.push(check_window_ends_efficient(&grid, &label)?);
        reports.push(check_window_brackets_minimizer(&grid, &label)?);
    }

    for q in [0.76, 0.8, 0.86, 0.9, 0.95, 0.99, 0.999] {
        reports.push(check_two_critical_points(Prevalence::from_q(q)?)?);
    }

    reports.push(check_enumeration(&[0.01, 0.1, 0.3])?);
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn landmarks_match() {
        let v = landmarks();
        for (x, r) in v.iter().zip(LANDMARKS) {
            assert!((x - r).abs() <= LANDMARK_TOL, "{x} vs {r}");
        }
    }

    #[test]
    fn g_endpoints_and_slope() {
        let qs: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        assert!(check_g_decreasing_in_q(&[3.0], &qs).pass);
        let g = a2_g(Prevalence::from_q(1e-9).unwrap(), 4.0);
        assert!((g - 0.5).abs() < 1e-6);
        let g = a2_g(Prevalence::from_q(1.0 - 1e-9).unwrap(), 4.0);
        assert!((g + 0.5).abs() < 1e-6);
    }

    #[test]
    fn x0_properties() {
        let prev = Prevalence::from_q(0.86).unwrap();
        let x0 = solve_x0(prev).unwrap();
        assert!(x0 > 0.0 && x0 < 0.86);
        let c = 1.0 / (2.0 * 0.86);
        assert!((-x0.ln() - (1.0 - c * x0) / (1.0 - 2.0 * c * x0)).abs() < 1e-10);
        let prev = Prevalence::from_q(0.9).unwrap();
        let x0 = solve_x0(prev).unwrap();
        assert!(h_of_x(1.0 / 1.8, x0) > -(0.9f64).ln());
        assert!(check_x0(&[0.8, 0.85, 0.9, 0.95]).unwrap().pass);
    }

    #[test]
    fn substitution_identity() {
        for &(q, n) in &[(0.8, 3.5), (0.9, 7.0), (0.99, 40.0), (0.76, 4.45)] {
            let prev = Prevalence::from_q(q).unwrap();
            let probe = ProofProbe::new(prev, n).unwrap();
            let c = 1.0 / (2.0 * q);
            let qn = q.powf(n);
            let direct = -(qn.ln()) * (qn - c * q.powf(2.0 * n));
            assert!((probe.h_of_x - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn window_end_signs() {
        let prev = Prevalence::from_q(0.99).unwrap();
        assert!(a2_g(prev, n_of(prev, 0.0)) < 0.0);
        assert!(a2_g(prev, n_of(prev, 1.0)) < 0.0);
        let prev = Prevalence::from_q(1.0 - 1e-4).unwrap();
        assert!(h_tq(0.0, prev) < 0.0);
        assert!(h_tq(1.0, prev) > 0.0);
    }

    #[test]
    fn half_bound() {
        assert!(check_half_bound(&[2.01, 3.0, 10.0, 200.0]).pass);
        let half = Prevalence::from_q(0.5).unwrap();
        // 2^3 = 8 > 3 (1 - 1/8) = 2.625
        assert!((a2_g(half, 3.0) - (2.0 / 3.0) * (1.0 - 2.625 / 8.0)).abs() < 1e-15);
    }

    #[test]
    fn two_critical_points_at_point_nine() {
        let prev = Prevalence::from_q(0.9).unwrap();
        let r = check_two_critical_points(prev).unwrap();
        assert!(r.pass, "{r}");
    }
}
