//! Choosing the array order when prevalence is unknown.
//!
//! The loss of order `n` at `q` is the excess over the integer optimum,
//! `L(q, n) = t(q, n) - t(q, n_opt(q))`. Two rules pick a single order
//! from it: minimax over an explicit grid of `q`, and minimization of the
//! expected squared loss under a uniform prior on `q`.
//!
//! As `q → 1` the loss tends to `2/n`, so the supremum for small orders is
//! set by how close to 1 the grid reaches. The minimax grid is therefore
//! always explicit and part of the result.

use std::fmt;
use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::numerics::{integrate, Tolerance};
use crate::optimal::{a2_integer_rule, a2_q5};
use crate::schemes::{a2_t_unchecked, Prevalence};

/// Default orders considered: `{2, 3, 4}` never win above `q_5`.
pub const DEFAULT_N_RANGE: RangeInclusive<u64> = 5..=64;

/// Default prior support on the `q` scale.
pub const DEFAULT_PRIOR: (f64, f64) = (0.750210, 1.0);

/// Offset of the first minimax grid point above `q_5`.
pub const GRID_START_OFFSET: f64 = 1e-4;

/// Loss against the integer rule. Defined for `q > q_5` only.
pub fn loss(prev: Prevalence, n: u64) -> Result<f64> {
    if prev.q() <= a2_q5() {
        return Err(Error::Region {
            q: prev.q(),
            what: "the loss against the integer rule",
            region: format!("q > q_5 = {:.9}", a2_q5()),
        });
    }
    if n < 2 {
        return Err(Error::Invalid(format!("array order {n} is below 2")));
    }
    Ok(loss_unchecked(prev, n, a2_integer_rule(prev).t))
}

#[inline]
fn loss_unchecked(prev: Prevalence, n: u64, t_opt: f64) -> f64 {
    a2_t_unchecked(prev, n as f64) - t_opt
}

/// Grid of `q` values for the minimax rule.
#[derive(Debug, Clone, PartialEq)]
pub struct QGrid {
    points: Vec<f64>,
    /// Also take the `q → 1` limit `L = 2/n` into the supremum.
    include_limit: bool,
    description: String,
}

impl QGrid {
    /// `lo, lo + step, …` up to `hi`, with `hi` itself appended.
    pub fn stepped(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && lo <= hi && lo > 0.0 && hi < 1.0) {
            return Err(Error::Invalid(format!(
                "grid needs 0 < lo <= hi < 1 and step > 0, got lo={lo} hi={hi} step={step}"
            )));
        }
        let mut points: Vec<f64> = (0..)
            .map(|k| lo + k as f64 * step)
            .take_while(|&q| q <= hi + 1e-12 * step)
            .map(|q| q.min(hi))
            .collect();
        if points.last().is_some_and(|&last| hi - last > 1e-12) {
            points.push(hi);
        }
        Ok(QGrid {
            points,
            include_limit: false,
            description: format!("q from {lo:.6} to {hi:.6} step {step}"),
        })
    }

    /// The default bounded grid: `q_5 + 1e-4` to `q_max` in steps of `step`.
    pub fn default_bounded(q_max: f64, step: f64) -> Result<Self> {
        Self::stepped(a2_q5() + GRID_START_OFFSET, q_max, step)
    }

    /// The bounded grid to `0.999`, a log-spaced tail to `1 - 1e-9`, and
    /// the `q → 1` limit. This approximates the supremum over all of
    /// `(q_5, 1)`.
    pub fn full_range(step: f64) -> Result<Self> {
        let mut grid = Self::default_bounded(0.999, step)?;
        for k in 1..=60 {
            let p = 1e-3 * 10f64.powf(-6.0 * k as f64 / 60.0);
            grid.points.push(1.0 - p);
        }
        grid.include_limit = true;
        grid.description = format!(
            "q from {:.6} to 0.999 step {step}, log tail to 1-1e-9, and the q->1 limit",
            a2_q5() + GRID_START_OFFSET
        );
        Ok(grid)
    }

    /// A single point, mostly for degenerate checks.
    pub fn single(q: f64) -> Result<Self> {
        Self::stepped(q, q, 1.0)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

/// The uniform prior on `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub lo: f64,
    pub hi: f64,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec {
            lo: DEFAULT_PRIOR.0,
            hi: DEFAULT_PRIOR.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Minimax,
    BayesSquared,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Minimax => "minimax",
            Criterion::BayesSquared => "bayes_sq",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustChoice {
    pub chosen_n: u64,
    pub criterion_value: f64,
    pub criterion: Criterion,
    /// Grid or quadrature settings used.
    pub grid: String,
    /// Criterion per order, ascending in `n`.
    pub per_n: Vec<(u64, f64)>,
}

impl RobustChoice {
    /// Criterion at `n`, if `n` was evaluated.
    pub fn value_at(&self, n: u64) -> Option<f64> {
        self.per_n.iter().find(|(m, _)| *m == n).map(|&(_, v)| v)
    }
}

fn check_range(n_range: &RangeInclusive<u64>) -> Result<()> {
    if n_range.is_empty() || *n_range.start() < 2 {
        return Err(Error::Invalid(format!(
            "order range {}..={} must be nonempty and start at 2 or above",
            n_range.start(),
            n_range.end()
        )));
    }
    Ok(())
}

fn pick(per_n: Vec<(u64, f64)>, criterion: Criterion, grid: String) -> RobustChoice {
    let &(chosen_n, criterion_value) = per_n
        .iter()
        .fold(None, |best: Option<&(u64, f64)>, cur| match best {
            Some(b) if !(cur.1 < b.1) => Some(b),
            _ => Some(cur),
        })
        .expect("nonempty range");
    RobustChoice {
        chosen_n,
        criterion_value,
        criterion,
        grid,
        per_n,
    }
}

/// Order minimizing `sup_grid L(q, n)`; ties go to the smaller order.
pub fn minimax_choice(grid: &QGrid, n_range: RangeInclusive<u64>) -> Result<RobustChoice> {
    check_range(&n_range)?;
    if grid.points.is_empty() {
        return Err(Error::Invalid("empty q grid".into()));
    }
    let mut sup: Vec<(u64, f64)> = n_range
        .clone()
        .map(|n| {
            (
                n,
                if grid.include_limit {
                    2.0 / n as f64
                } else {
                    f64::NEG_INFINITY
                },
            )
        })
        .collect();
    for &q in &grid.points {
        let prev = Prevalence::from_q(q)?;
        if q <= a2_q5() {
            return Err(Error::Region {
                q,
                what: "the minimax grid",
                region: format!("q > q_5 = {:.9}", a2_q5()),
            });
        }
        let t_opt = a2_integer_rule(prev).t;
        for (n, s) in sup.iter_mut() {
            *s = s.max(loss_unchecked(prev, *n, t_opt));
        }
    }
    Ok(pick(sup, Criterion::Minimax, grid.description.clone()))
}

/// Outcome of scanning `q_max` over a band for a target minimax order.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub target_n: u64,
    /// `(q_max, chosen n)` for every scanned value.
    pub scanned: Vec<(f64, u64)>,
    /// The smallest scanned `q_max` yielding the target, if any.
    pub q_max: Option<f64>,
}

/// Scans `q_max` over `band` in steps of `q_step`, each time running the
/// default bounded minimax grid with `grid_step`.
pub fn calibrate_minimax_q_max(
    target_n: u64,
    band: (f64, f64),
    q_step: f64,
    grid_step: f64,
    n_range: RangeInclusive<u64>,
) -> Result<Calibration> {
    let (lo, hi) = band;
    let mut scanned = Vec::new();
    let mut k = 0;
    loop {
        let q_max = (lo + k as f64 * q_step).min(hi);
        let grid = QGrid::default_bounded(q_max, grid_step)?;
        scanned.push((q_max, minimax_choice(&grid, n_range.clone())?.chosen_n));
        if q_max >= hi {
            break;
        }
        k += 1;
    }
    let q_max = scanned
        .iter()
        .find(|(_, n)| *n == target_n)
        .map(|&(q, _)| q);
    Ok(Calibration {
        target_n,
        scanned,
        q_max,
    })
}

/// Settings for the Bayesian rule's quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesSettings {
    /// Absolute tolerance per unit length passed to adaptive Simpson.
    pub quad_tol: f64,
    /// Integration stops at `1 - tail`; the remainder uses `L = 2/n`.
    pub tail: f64,
}

impl Default for BayesSettings {
    fn default() -> Self {
        BayesSettings {
            quad_tol: 1e-8,
            tail: 1e-6,
        }
    }
}

/// Intervals of `q` on which the integer rule is constant, as
/// `(lo, hi, n_opt)`. Breakpoints are located by bisection on the rule.
pub fn rule_segments(lo: f64, hi: f64) -> Result<Vec<(f64, f64, u64)>> {
    if !(lo < hi) {
        return Err(Error::Invalid(format!("empty segment range ({lo}, {hi})")));
    }
    let rule = |q: f64| Prevalence::from_q(q).map(|p| a2_integer_rule(p).size);
    let mut segments = Vec::new();
    let mut start = lo;
    let mut n = rule(lo)?;
    let n_hi = rule(hi)?;
    while n < n_hi {
        // Smallest q where the rule exceeds n, bracketed by (a, b].
        let (mut a, mut b) = (start, hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if rule(mid)? > n {
                b = mid;
            } else {
                a = mid;
            }
        }
        segments.push((start, b, n));
        start = b;
        n = rule(b)?;
    }
    segments.push((start, hi, n));
    Ok(segments)
}

/// Order minimizing `E_π[L(q, n)²]` under the uniform prior.
///
/// The integrand is smooth between breakpoints of the integer rule, so the
/// support is split there and each piece integrated separately. Near
/// `q = 1` the breakpoints crowd together; above `1 - tail` the loss is
/// replaced by its limit `2/n`.
pub fn bayes_choice(
    prior: PriorSpec,
    n_range: RangeInclusive<u64>,
    settings: BayesSettings,
) -> Result<RobustChoice> {
    check_range(&n_range)?;
    if !(prior.lo > a2_q5() && prior.lo < prior.hi && prior.hi <= 1.0) {
        return Err(Error::Invalid(format!(
            "prior support ({}, {}) must satisfy q_5 < lo < hi <= 1",
            prior.lo, prior.hi
        )));
    }
    let cut = prior.hi.min(1.0 - settings.tail);
    let segments = if prior.lo < cut {
        rule_segments(prior.lo, cut)?
    } else {
        Vec::new()
    };
    let tol = Tolerance::with_abs_x(settings.quad_tol);
    let width = prior.hi - prior.lo;

    let mut per_n = Vec::new();
    for n in n_range {
        let mut total = 0.0;
        for &(a, b, k) in &segments {
            let sq_loss = |q: f64| {
                let prev = Prevalence::from_q(q).expect("q inside the prior support");
                let l = a2_t_unchecked(prev, n as f64) - a2_t_unchecked(prev, k as f64);
                l * l
            };
            total += integrate(sq_loss, a, b, tol)?;
        }
        let limit = 2.0 / n as f64;
        total += (prior.hi - cut.max(prior.lo)) * limit * limit;
        per_n.push((n, total / width));
    }
    let grid = format!(
        "uniform q on ({}, {}), adaptive Simpson tol {:e}, split at {} rule breakpoints, 2/n continuation above 1-{:e}",
        prior.lo,
        prior.hi,
        settings.quad_tol,
        segments.len().saturating_sub(1),
        settings.tail
    );
    Ok(pick(per_n, Criterion::BayesSquared, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimal::a2_integer_scan;

    #[test]
    fn loss_zero_at_rule_and_positive_elsewhere() {
        let prev = Prevalence::from_q(0.8).unwrap();
        let best = a2_integer_scan(prev).best;
        assert_eq!(loss(prev, best.size).unwrap(), 0.0);
        assert!(loss(prev, 5).unwrap() >= 0.0);
        for n in 2..40 {
            assert!(loss(prev, n).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn loss_limit_near_one() {
        let prev = Prevalence::from_q(1.0 - 1e-12).unwrap();
        assert!((loss(prev, 10).unwrap() - 0.2).abs() < 1e-3);
    }

    #[test]
    fn loss_region() {
        let prev = Prevalence::from_q(0.7).unwrap();
        assert!(matches!(loss(prev, 5), Err(Error::Region { .. })));
    }

    #[test]
    fn single_point_grid() {
        let q = 0.9;
        let grid = QGrid::single(q).unwrap();
        let choice = minimax_choice(&grid, DEFAULT_N_RANGE).unwrap();
        let n_opt = a2_integer_rule(Prevalence::from_q(q).unwrap()).size;
        assert_eq!(choice.chosen_n, n_opt);
        assert_eq!(choice.criterion_value, 0.0);
    }

    #[test]
    fn narrow_grid_picks_five() {
        let grid = QGrid::default_bounded(0.76, 1e-3).unwrap();
        assert_eq!(minimax_choice(&grid, DEFAULT_N_RANGE).unwrap().chosen_n, 5);
    }

    #[test]
    fn stepped_grid_includes_endpoint() {
        let g = QGrid::stepped(0.8, 0.8105, 1e-3).unwrap();
        assert_eq!(g.points().len(), 12);
        assert_eq!(*g.points().last().unwrap(), 0.8105);
        assert!(QGrid::stepped(0.9, 0.8, 1e-3).is_err());
    }

    #[test]
    fn refinement_never_lowers_sup() {
        let coarse = QGrid::stepped(0.76, 0.98, 2e-3).unwrap();
        let fine = QGrid::stepped(0.76, 0.98, 1e-3).unwrap();
        let a = minimax_choice(&coarse, 5..=30).unwrap();
        let b = minimax_choice(&fine, 5..=30).unwrap();
        for ((_, x), (_, y)) in a.per_n.iter().zip(&b.per_n) {
            assert!(y >= x);
        }
    }

    #[test]
    fn segments_cover_support() {
        let segs = rule_segments(0.8, 0.99).unwrap();
        assert_eq!(segs.first().unwrap().0, 0.8);
        assert_eq!(segs.last().unwrap().1, 0.99);
        for w in segs.windows(2) {
            assert_eq!(w[0].1, w[1].0);
            assert!(w[0].2 < w[1].2);
        }
        for &(a, b, k) in &segs {
            let mid = Prevalence::from_q(0.5 * (a + b)).unwrap();
            assert_eq!(a2_integer_rule(mid).size, k);
        }
    }

    #[test]
    fn bayes_zero_on_constant_rule_interval() {
        let segs = rule_segments(0.9, 0.95).unwrap();
        let (a, b, k) = segs[1];
        let prior = PriorSpec {
            lo: a + 1e-9,
            hi: b - 1e-9,
        };
        let c = bayes_choice(prior, k..=k + 1, BayesSettings::default()).unwrap();
        assert_eq!(c.chosen_n, k);
        assert!(c.criterion_value.abs() < 1e-15);
    }
}
