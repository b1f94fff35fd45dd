use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use arraypool_core::compare::{a2_p_limit, series, ComparisonSummary, GainGap};
use arraypool_core::montecarlo::{analytic_t, estimate_t};
use arraypool_core::optimal::{
    a2_candidate_window, a2_integer_rule, dorfman_optimum, halving_optimum, optimum,
    sterrett_optimum,
};
use arraypool_core::robust::{
    bayes_choice, calibrate_minimax_q_max, minimax_choice, BayesSettings, PriorSpec, QGrid,
    RobustChoice,
};
use arraypool_core::verify::default_suite;
use arraypool_core::{evaluate, Error, Prevalence, Scheme, SchemeSize};

use crate::args::{
    BayesArgs, CompareArgs, EvalArgs, MinimaxArgs, OptimizeArgs, RobustArgs, RobustRule,
    SimulateArgs, TableArgs,
};

/// Failure of a command, mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Verification,
    Io(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Verification => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn io_err(context: &str, e: io::Error) -> Failure {
    Failure::Io(format!("{context}: {e}"))
}

type Outcome = Result<String, Failure>;

/// Fixed six-decimal formatting used for every reported number.
fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key}={value}");
}

fn prevalence(p: f64) -> Result<Prevalence, Failure> {
    Ok(Prevalence::from_p(p)?)
}

pub fn eval(args: &EvalArgs) -> Outcome {
    let prev = prevalence(args.p)?;
    let config = if args.size.fract() == 0.0 && args.size >= 1.0 {
        SchemeSize::integer(args.scheme, args.size as u64)?
    } else {
        SchemeSize::continuous(args.scheme, args.size)?
    };
    let pt = evaluate(prev, config)?;
    let mut out = String::new();
    kv(&mut out, "scheme", args.scheme);
    kv(&mut out, "p", f6(args.p));
    kv(&mut out, "size", args.size);
    kv(&mut out, "t", f6(pt.t));
    kv(&mut out, "g", f6(pt.g));
    kv(&mut out, "gain", f6(pt.gain));
    kv(&mut out, "expected_total", f6(pt.expected_total));
    if pt.t > 1.0 {
        let what = if args.scheme == Scheme::A2 {
            "the array"
        } else {
            "this pool"
        };
        kv(
            &mut out,
            "warning",
            format!("{what} needs more tests than individual testing here"),
        );
    }
    Ok(out)
}

fn join(sizes: &[u64]) -> String {
    sizes
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

pub fn optimize(args: &OptimizeArgs) -> Outcome {
    let prev = prevalence(args.p)?;
    let opt = match optimum(args.scheme, prev) {
        Ok(opt) => opt,
        Err(Error::Region { region, what, .. }) => {
            return Err(Failure::Usage(format!("{what} needs {region}")));
        }
        Err(e) => return Err(e.into()),
    };
    let mut out = String::new();
    kv(&mut out, "scheme", args.scheme);
    kv(&mut out, "p", f6(args.p));
    kv(&mut out, "candidates", join(&opt.candidates));
    kv(&mut out, "candidate_opt", opt.candidate_opt.size);
    kv(&mut out, "integer_opt", opt.integer_opt.size);
    kv(&mut out, "t_integer", f6(opt.integer_opt.t));
    kv(&mut out, "gain_integer", f6(1.0 - opt.integer_opt.t));
    if let Some(scan) = opt.scan {
        kv(&mut out, "scan_cap", scan.cap);
        kv(
            &mut out,
            "candidates_contain_scan_opt",
            opt.candidates_contain_optimum(),
        );
    }
    kv(&mut out, "tie_rule", "smaller size");
    match opt.continuous_opt {
        Some(c) => {
            kv(&mut out, "continuous_opt", f6(c.size));
            kv(&mut out, "t_continuous", f6(c.t));
        }
        None => kv(&mut out, "continuous_opt", "none"),
    }
    if args.scheme == Scheme::A2 {
        if let Some(iv) = opt.efficiency {
            kv(&mut out, "n_lower", f6(iv.n_lower));
            kv(&mut out, "n_upper", f6(iv.n_upper));
            if let Ok(w) = a2_candidate_window(prev) {
                kv(&mut out, "window_base", f6(w.base));
                if let Some(t) = w.offset_t {
                    kv(&mut out, "t_star", f6(t));
                }
            }
        } else {
            kv(&mut out, "efficiency_interval", "empty");
        }
        if args.p >= a2_p_limit() || opt.individual_testing_preferred {
            kv(&mut out, "individual_testing_preferred", true);
            kv(&mut out, "note", "individual testing preferred");
        } else {
            kv(&mut out, "individual_testing_preferred", false);
        }
    }
    Ok(out)
}

pub const TABLE_HEADER: &str =
    "p,n_opt_a2,t_a2,gain_a2,N_opt_d,t_d,gain_d,N_opt_s,t_s,gain_s,N_opt_h,t_h,gain_h";

fn table_row(p_text: &str) -> Result<String, Failure> {
    // Evaluate at the printed prevalence so the row round-trips exactly.
    let p: f64 = p_text
        .parse()
        .map_err(|_| Failure::Usage(format!("bad p {p_text}")))?;
    let prev = prevalence(p)?;
    let a2 = a2_integer_rule(prev);
    let d = dorfman_optimum(prev)?.integer_opt;
    let s = sterrett_optimum(prev)?.integer_opt;
    let h = halving_optimum(prev)?.integer_opt;
    let mut row = p_text.to_string();
    for (size, t) in [(a2.size, a2.t), (d.size, d.t), (s.size, s.t), (h.size, h.t)] {
        let _ = write!(row, ",{size},{},{}", f6(t), f6(1.0 - t));
    }
    Ok(row)
}

pub fn table(args: &TableArgs) -> Outcome {
    let limit = a2_p_limit();
    if !(args.p_min > 0.0 && args.p_min < args.p_max && args.p_max <= limit) {
        return Err(Failure::Usage(format!(
            "need 0 < p-min < p-max <= {limit:.6}, got p-min={} p-max={}",
            args.p_min, args.p_max
        )));
    }
    if !(args.step > 0.0) {
        return Err(Failure::Usage(format!(
            "step must be positive, got {}",
            args.step
        )));
    }
    if let Some(path) = &args.out {
        if path.exists() && !args.force {
            return Err(Failure::Usage(format!(
                "{} exists; pass --force to overwrite",
                path.display()
            )));
        }
    }

    let mut csv = String::from(TABLE_HEADER);
    csv.push('\n');
    let count = ((args.p_max - args.p_min) / args.step + 1e-9).floor() as u64;
    for k in 0..=count {
        let p = args.p_min + k as f64 * args.step;
        csv.push_str(&table_row(&f6(p))?);
        csv.push('\n');
    }

    match &args.out {
        Some(path) => {
            fs::write(path, &csv).map_err(|e| io_err(&path.display().to_string(), e))?;
            let mut out = String::new();
            kv(&mut out, "rows", count + 1);
            kv(&mut out, "out", path.display());
            Ok(out)
        }
        None => Ok(csv),
    }
}

fn gap_kv(out: &mut String, name: &str, g: &GainGap) {
    kv(out, &format!("max_gap_{name}_per_100"), f6(g.gap_per_100));
    kv(out, &format!("max_gap_{name}_p"), f6(g.p_at));
}

fn summary_text(s: &ComparisonSummary) -> String {
    let mut out = String::new();
    kv(&mut out, "p_limit", f6(s.p_limit));
    kv(&mut out, "crossing_a2_dorfman", f6(s.crossing_a2_dorfman));
    kv(&mut out, "crossing_a2_sterrett", f6(s.crossing_a2_sterrett));
    kv(
        &mut out,
        "crossing_a2_halving_lower",
        f6(s.crossing_a2_halving_lower),
    );
    kv(
        &mut out,
        "crossing_a2_halving_upper",
        f6(s.crossing_a2_halving_upper),
    );
    gap_kv(&mut out, "a2_dorfman", &s.gap_a2_dorfman);
    gap_kv(&mut out, "a2_sterrett", &s.gap_a2_sterrett);
    gap_kv(&mut out, "a2_halving", &s.gap_a2_halving);
    kv(&mut out, "max_pool_crossing", f6(s.max_pool_crossing));
    kv(&mut out, "slope_a2_total", f6(s.slope_a2));
    kv(&mut out, "slope_dorfman", f6(s.slope_dorfman));
    kv(&mut out, "slope_sterrett", f6(s.slope_sterrett));
    kv(&mut out, "slope_halving", f6(s.slope_halving));
    out
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| io_err(&path.display().to_string(), e))
}

pub fn compare(args: &CompareArgs) -> Outcome {
    let summary = ComparisonSummary::compute()?;
    let text = summary_text(&summary);
    if !args.emit_plot_data {
        return Ok(text);
    }
    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(|e| io_err(&dir.display().to_string(), e))?;

    let ps: Vec<f64> = (1..=499)
        .map(|k| k as f64 * 0.0005)
        .filter(|&p| p < summary.p_limit)
        .collect();
    let points = series(&ps)?;
    let mut sizes =
        String::from("p,cohort_a2,cohort_d,cohort_s,cohort_h,gain_a2,gain_d,gain_s,gain_h\n");
    let mut pools = String::from("p,n_min_a2,N_d,N_s,N_h\n");
    for pt in &points {
        let _ = write!(sizes, "{}", f6(pt.p));
        for v in pt.cohort.iter().chain(&pt.gain) {
            let _ = write!(sizes, ",{}", f6(*v));
        }
        sizes.push('\n');
        let _ = write!(pools, "{}", f6(pt.p));
        for v in &pt.max_pool {
            let _ = write!(pools, ",{}", f6(*v));
        }
        pools.push('\n');
    }

    let log_ps: Vec<f64> = (0..=80)
        .map(|k| 10f64.powf(-5.0 + 4.0 * k as f64 / 80.0))
        .collect();
    let log_points = series(&log_ps)?;
    let mut loglog =
        String::from("log10_inv_p,log10_cohort_a2,log10_cohort_d,log10_cohort_s,log10_cohort_h\n");
    for pt in &log_points {
        let _ = write!(loglog, "{}", f6(-pt.p.log10()));
        for v in &pt.cohort {
            let _ = write!(loglog, ",{}", f6(v.log10()));
        }
        loglog.push('\n');
    }

    write_file(dir, "sizes_gains.csv", &sizes)?;
    write_file(dir, "max_pool.csv", &pools)?;
    write_file(dir, "loglog_sizes.csv", &loglog)?;
    write_file(dir, "summary.txt", &text)?;

    let mut out = text;
    kv(&mut out, "out_dir", dir.display());
    kv(
        &mut out,
        "files",
        "sizes_gains.csv,max_pool.csv,loglog_sizes.csv,summary.txt",
    );
    Ok(out)
}

fn choice_text(out: &mut String, c: &RobustChoice) {
    kv(out, "criterion", c.criterion);
    kv(out, "chosen_n", c.chosen_n);
    kv(out, "N", c.chosen_n * c.chosen_n);
    kv(out, "criterion_value", format!("{:.6e}", c.criterion_value));
    kv(out, "grid", &c.grid);
}

pub fn robust(args: &RobustArgs) -> Outcome {
    if args.n_min < 2 || args.n_min > args.n_max {
        return Err(Failure::Usage(format!(
            "need 2 <= n-min <= n-max, got {}..{}",
            args.n_min, args.n_max
        )));
    }
    let range = args.n_min..=args.n_max;
    let mut out = String::new();
    kv(
        &mut out,
        "n_range",
        format!("{}..{}", args.n_min, args.n_max),
    );
    match &args.rule {
        RobustRule::Minimax(m) => minimax(m, range, out),
        RobustRule::Bayes(b) => bayes(b, range, out),
    }
}

fn minimax(m: &MinimaxArgs, range: std::ops::RangeInclusive<u64>, mut out: String) -> Outcome {
    if !(m.grid_step > 0.0) {
        return Err(Failure::Usage(format!(
            "grid-step must be positive, got {}",
            m.grid_step
        )));
    }
    if let Some(target) = m.calibrate {
        let cal = calibrate_minimax_q_max(target, (0.995, 0.998), 1e-4, m.grid_step, range)?;
        kv(&mut out, "calibration_target_n", target);
        kv(&mut out, "calibration_band", "0.995..0.998 step 0.0001");
        for (q, n) in &cal.scanned {
            kv(&mut out, &format!("q_max_{q:.4}"), n);
        }
        match cal.q_max {
            Some(q) => kv(&mut out, "calibrated_q_max", format!("{q:.4}")),
            None => {
                kv(&mut out, "calibrated_q_max", "none");
                kv(
                    &mut out,
                    "discrepancy",
                    format!("no q_max in the band yields n={target}"),
                );
            }
        }
        return Ok(out);
    }
    let q5 = arraypool_core::a2_q5();
    let grid = if m.full_range {
        QGrid::full_range(m.grid_step)?
    } else {
        if !(m.q_max > q5 + 1e-4 && m.q_max < 1.0) {
            return Err(Failure::Usage(format!(
                "q-max must lie in ({:.6}, 1), got {}",
                q5 + 1e-4,
                m.q_max
            )));
        }
        kv(&mut out, "q_max", f6(m.q_max));
        QGrid::default_bounded(m.q_max, m.grid_step)?
    };
    kv(&mut out, "grid_step", m.grid_step);
    kv(&mut out, "grid_points", grid.points().len());
    choice_text(&mut out, &minimax_choice(&grid, range)?);
    Ok(out)
}

fn bayes(b: &BayesArgs, range: std::ops::RangeInclusive<u64>, mut out: String) -> Outcome {
    if !(b.prior_lo < b.prior_hi) {
        return Err(Failure::Usage(format!(
            "prior-lo must be below prior-hi, got {} and {}",
            b.prior_lo, b.prior_hi
        )));
    }
    if !(b.quad_tol > 0.0) {
        return Err(Failure::Usage(format!(
            "quad-tol must be positive, got {}",
            b.quad_tol
        )));
    }
    let settings = BayesSettings {
        quad_tol: b.quad_tol,
        ..BayesSettings::default()
    };
    let prior = PriorSpec {
        lo: b.prior_lo,
        hi: b.prior_hi,
    };
    kv(
        &mut out,
        "prior",
        format!("uniform({}, {})", b.prior_lo, b.prior_hi),
    );
    choice_text(&mut out, &bayes_choice(prior, range, settings)?);
    Ok(out)
}

pub fn verify() -> Outcome {
    let reports = default_suite()?;
    let mut out = String::new();
    for r in &reports {
        let _ = writeln!(out, "{r}");
    }
    let all = reports.iter().all(|r| r.pass);
    kv(&mut out, "all_pass", all);
    if all {
        Ok(out)
    } else {
        print!("{out}");
        Err(Failure::Verification)
    }
}

pub fn simulate(args: &SimulateArgs) -> Outcome {
    let prev = prevalence(args.p)?;
    let r = estimate_t(prev, args.scheme, args.size, args.trials, args.seed)?;
    let reference = analytic_t(prev, args.scheme, args.size)?;
    let mut out = String::new();
    kv(&mut out, "scheme", r.scheme);
    kv(&mut out, "p", f6(args.p));
    kv(&mut out, "size", r.size);
    kv(&mut out, "trials", r.trials);
    kv(&mut out, "seed", r.seed);
    kv(&mut out, "rng", "chacha8, stream = trial index");
    kv(
        &mut out,
        "mean_tests_per_person",
        f6(r.mean_tests_per_person),
    );
    if r.std_error_undefined {
        kv(&mut out, "std_error", "undefined");
    } else {
        kv(&mut out, "std_error", f6(r.std_error));
    }
    kv(&mut out, "analytic_t", f6(reference));
    match r.z_score(reference) {
        Some(z) => kv(&mut out, "z", f6(z)),
        None => kv(&mut out, "z", "undefined"),
    }
    kv(&mut out, "misclassified", r.misclassified);
    Ok(out)
}

pub fn emit(text: &str) -> Result<(), Failure> {
    let mut stdout = io::stdout().lock();
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| io_err("stdout", e))?;
    stdout.flush().map_err(|e| io_err("stdout", e))
}
