//! Cross-scheme comparison on the continuous scale.
//!
//! Each scheme is represented by its unrounded optimum (see
//! [`continuous_optimum`]) and the gain `G = 1 - t` there. This module finds
//! where gains cross, where the array's advantage peaks, where the maximal
//! tested pool sizes cross, and the log-log growth rate of optimal sizes.

use crate::error::{Error, Result};
use crate::numerics::{find_root, minimize_unimodal, Bracket, Tolerance};
use crate::optimal::{a2_q5, continuous_optimum, halving_threshold};
use crate::schemes::{Prevalence, Scheme};

/// Upper end of the prevalence range where the array is worth using,
/// `1 - q_5`.
pub fn a2_p_limit() -> f64 {
    1.0 - a2_q5()
}

/// Gain at the unrounded optimum.
pub fn continuous_gain(scheme: Scheme, p: f64) -> Result<f64> {
    let prev = Prevalence::from_p(p)?;
    Ok(1.0 - continuous_optimum(scheme, prev)?.t)
}

/// Total unrounded optimal cohort: `n_min²` for the array, `N*` otherwise.
pub fn optimal_cohort(scheme: Scheme, p: f64) -> Result<f64> {
    let opt = continuous_optimum(scheme, Prevalence::from_p(p)?)?;
    Ok(scheme.cohort(opt.size))
}

/// Largest pool that is ever tested as one specimen at the unrounded
/// optimum: a row or column (`n_min`) for the array, `N*` otherwise.
pub fn max_tested_pool(scheme: Scheme, p: f64) -> Result<f64> {
    Ok(continuous_optimum(scheme, Prevalence::from_p(p)?)?.size)
}

fn gain_difference(a: Scheme, b: Scheme, p: f64) -> f64 {
    match (continuous_gain(a, p), continuous_gain(b, p)) {
        (Ok(ga), Ok(gb)) => ga - gb,
        _ => f64::NAN,
    }
}

/// Root of `p ↦ G_a(p) - G_b(p)` on `[p_lo, p_hi]`.
pub fn find_gain_crossing(a: Scheme, b: Scheme, p_lo: f64, p_hi: f64) -> Result<f64> {
    let f = |p: f64| gain_difference(a, b, p);
    find_root(
        f,
        Bracket::new(f, p_lo, p_hi)?,
        Tolerance::with_abs_x(1e-10),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainGap {
    pub p_at: f64,
    /// `100 (G_a - G_b)` at `p_at`: tests saved per hundred people.
    pub gap_per_100: f64,
}

/// Maximum of `100 (G_a - G_b)` over `region`, seeded by a coarse grid.
pub fn max_gain_gap(a: Scheme, b: Scheme, region: (f64, f64)) -> Result<GainGap> {
    let (lo, hi) = region;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::Invalid(format!("bad region ({lo}, {hi})")));
    }
    const COARSE: usize = 200;
    let step = (hi - lo) / COARSE as f64;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 1..COARSE {
        let p = lo + i as f64 * step;
        let v = gain_difference(a, b, p);
        if v > best.1 {
            best = (p, v);
        }
    }
    let (a_lo, a_hi) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    let (p_at, neg) = minimize_unimodal(
        |p| -gain_difference(a, b, p),
        a_lo,
        a_hi,
        Tolerance::with_abs_x(1e-9),
    )?;
    Ok(GainGap {
        p_at,
        gap_per_100: -100.0 * neg,
    })
}

/// Prevalence at which the array's row length `n_min` equals the halving
/// optimum `N*`.
pub fn max_pool_crossing() -> Result<f64> {
    let f = |p: f64| match (max_tested_pool(Scheme::A2, p), Prevalence::from_p(p)) {
        (Ok(n), Ok(prev)) => n - halving_threshold(prev),
        _ => f64::NAN,
    };
    find_root(f, Bracket::new(f, 0.01, 0.1)?, Tolerance::with_abs_x(1e-12))
}

/// Least-squares slope of `ln N*(p)` against `-ln p` over `points`
/// log-spaced prevalences in `[p_lo, p_hi]`. The array uses the total
/// cohort `n_min²`.
pub fn log_slope_check(scheme: Scheme, p_lo: f64, p_hi: f64, points: usize) -> Result<f64> {
    if !(p_lo > 0.0 && p_lo < p_hi && points >= 2) {
        return Err(Error::Invalid(
            "log_slope_check needs 0 < p_lo < p_hi and >= 2 points".into(),
        ));
    }
    let (a, b) = (p_lo.ln(), p_hi.ln());
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    for i in 0..points {
        let p = (a + (b - a) * i as f64 / (points - 1) as f64).exp();
        xs.push(-p.ln());
        ys.push(optimal_cohort(scheme, p)?.ln());
    }
    let n = points as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Crossing points and peak advantages of the array over the other
/// schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSummary {
    pub p_limit: f64,
    pub crossing_a2_dorfman: f64,
    pub crossing_a2_sterrett: f64,
    pub crossing_a2_halving_lower: f64,
    pub crossing_a2_halving_upper: f64,
    pub gap_a2_dorfman: GainGap,
    pub gap_a2_sterrett: GainGap,
    pub gap_a2_halving: GainGap,
    pub max_pool_crossing: f64,
    pub slope_a2: f64,
    pub slope_dorfman: f64,
    pub slope_sterrett: f64,
    pub slope_halving: f64,
}

impl ComparisonSummary {
    pub fn compute() -> Result<Self> {
        let p_limit = a2_p_limit();
        let crossing_a2_dorfman = find_gain_crossing(Scheme::A2, Scheme::Dorfman, 0.001, 0.24)?;
        let crossing_a2_sterrett = find_gain_crossing(Scheme::A2, Scheme::Sterrett, 0.001, 0.1)?;
        let crossing_a2_halving_lower =
            find_gain_crossing(Scheme::A2, Scheme::Halving, 0.001, 0.1)?;
        let crossing_a2_halving_upper = find_gain_crossing(Scheme::A2, Scheme::Halving, 0.1, 0.24)?;
        let tiny = 1e-5;
        let gap_a2_dorfman =
            max_gain_gap(Scheme::A2, Scheme::Dorfman, (tiny, crossing_a2_dorfman))?;
        let gap_a2_sterrett =
            max_gain_gap(Scheme::A2, Scheme::Sterrett, (tiny, crossing_a2_sterrett))?;
        let gap_a2_halving = max_gain_gap(
            Scheme::A2,
            Scheme::Halving,
            (crossing_a2_halving_lower, crossing_a2_halving_upper),
        )?;
        let slope = |s| log_slope_check(s, 1e-5, 1e-3, 41);
        Ok(ComparisonSummary {
            p_limit,
            crossing_a2_dorfman,
            crossing_a2_sterrett,
            crossing_a2_halving_lower,
            crossing_a2_halving_upper,
            gap_a2_dorfman,
            gap_a2_sterrett,
            gap_a2_halving,
            max_pool_crossing: max_pool_crossing()?,
            slope_a2: slope(Scheme::A2)?,
            slope_dorfman: slope(Scheme::Dorfman)?,
            slope_sterrett: slope(Scheme::Sterrett)?,
            slope_halving: slope(Scheme::Halving)?,
        })
    }
}

/// One prevalence of the size/gain plot series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub p: f64,
    /// Optimal total cohort per scheme, in [`Scheme::ALL`] order.
    pub cohort: [f64; 4],
    /// Largest pool tested as one specimen per scheme.
    pub max_pool: [f64; 4],
    pub gain: [f64; 4],
}

/// Plot series over `ps`.
pub fn series(ps: &[f64]) -> Result<Vec<SeriesPoint>> {
    ps.iter()
        .map(|&p| {
            let prev = Prevalence::from_p(p)?;
            let mut point = SeriesPoint {
                p,
                cohort: [0.0; 4],
                max_pool: [0.0; 4],
                gain: [0.0; 4],
            };
            for (i, scheme) in Scheme::ALL.iter().enumerate() {
                let opt = continuous_optimum(*scheme, prev)?;
                point.cohort[i] = scheme.cohort(opt.size);
                point.max_pool[i] = opt.size;
                point.gain[i] = 1.0 - opt.t;
            }
            Ok(point)
        })
        .collect()
}
