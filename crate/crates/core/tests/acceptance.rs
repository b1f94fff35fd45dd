//! Acceptance criteria, one test each. Every test prints a single
//! `criterion NN PASS|FAIL ...` line before asserting, so
//! `cargo test --test acceptance -- --nocapture --test-threads=1` gives a
//! readable report even when some criteria fail.

use std::time::{Duration, Instant};

use arraypool_core::compare::{
    find_gain_crossing, log_slope_check, max_gain_gap, max_pool_crossing,
};
use arraypool_core::montecarlo::{analytic_t, estimate_t, exact_expected_tests};
use arraypool_core::optimal::{
    a2_critical_pair, a2_integer_scan, a2_q5, dorfman_optimum, halving_optimum, sterrett_optimum,
    CandidateWindow,
};
use arraypool_core::robust::{
    bayes_choice, calibrate_minimax_q_max, minimax_choice, BayesSettings, PriorSpec, QGrid,
    DEFAULT_N_RANGE,
};
use arraypool_core::verify::{
    check_window_brackets_minimizer, check_window_ends_efficient, default_q_grids, landmarks,
};
use arraypool_core::{Prevalence, Scheme};
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, pass: bool, limit: Duration, started: Instant, detail: &str) {
    let elapsed = started.elapsed();
    let in_time = elapsed < limit;
    let verdict = if pass && in_time { "PASS" } else { "FAIL" };
    println!(
        "criterion {id:02} {verdict} {name}: {detail} [{:.2}s, limit {}s{}]",
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { ", over time" }
    );
    assert!(pass, "criterion {id} failed: {detail}");
    assert!(in_time, "criterion {id} exceeded {limit:?}: {elapsed:?}");
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

#[test]
fn criterion_01_critical_pair() {
    let t0 = Instant::now();
    let pair = a2_critical_pair().unwrap();
    let dq = (pair.q_star - 0.748416).abs();
    let dn = (pair.n_star - 4.453524).abs();
    let detail = format!(
        "q*={:.7} n*={:.7} (|dq|={dq:.1e}, |dn|={dn:.1e}, tol 1e-5)",
        pair.q_star, pair.n_star
    );
    report(
        1,
        "critical pair",
        dq <= 1e-5 && dn <= 1e-5,
        secs(1),
        t0,
        &detail,
    );
}

#[test]
fn criterion_02_q5() {
    let t0 = Instant::now();
    let q5 = a2_q5();
    let d = (q5 - 0.750209961).abs();
    report(
        2,
        "q_5",
        d <= 1e-8,
        secs(1),
        t0,
        &format!("q_5={q5:.10} (|d|={d:.1e}, tol 1e-8)"),
    );
}

#[test]
fn criterion_03_candidate_set_soundness() {
    let t0 = Instant::now();
    let q5 = a2_q5();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut misses = Vec::new();
    for _ in 0..1000 {
        let q = rng.gen_range(q5..1.0);
        if q <= q5 {
            continue;
        }
        let prev = Prevalence::from_q(q).unwrap();
        let best = a2_integer_scan(prev).best.size;
        let window = CandidateWindow::new(prev);
        if !window.candidates.contains(&best) || best <= 4 {
            misses.push((q, best, window.candidates));
        }
    }
    let detail = format!(
        "1000 samples of q in (q_5, 1), {} outside the window {:?}",
        misses.len(),
        misses.first()
    );
    report(
        3,
        "candidate window soundness",
        misses.is_empty(),
        secs(30),
        t0,
        &detail,
    );
}

#[test]
fn criterion_04_gain_crossings() {
    let t0 = Instant::now();
    let d = find_gain_crossing(Scheme::A2, Scheme::Dorfman, 0.001, 0.24).unwrap();
    let s = find_gain_crossing(Scheme::A2, Scheme::Sterrett, 0.001, 0.1).unwrap();
    let h1 = find_gain_crossing(Scheme::A2, Scheme::Halving, 0.001, 0.1).unwrap();
    let h2 = find_gain_crossing(Scheme::A2, Scheme::Halving, 0.1, 0.24).unwrap();
    let pairs = [(d, 0.115589), (s, 0.028071), (h1, 0.012936), (h2, 0.220788)];
    let worst = pairs.iter().map(|(x, r)| (x - r).abs()).fold(0.0, f64::max);
    let detail =
        format!("A2/D={d:.6} A2/S={s:.6} A2/H={h1:.6},{h2:.6} (worst {worst:.1e}, tol 1e-4)");
    report(4, "gain crossings", worst <= 1e-4, secs(10), t0, &detail);
}

#[test]
fn criterion_05_max_gain_gaps() {
    let t0 = Instant::now();
    let d = find_gain_crossing(Scheme::A2, Scheme::Dorfman, 0.001, 0.24).unwrap();
    let s = find_gain_crossing(Scheme::A2, Scheme::Sterrett, 0.001, 0.1).unwrap();
    let h1 = find_gain_crossing(Scheme::A2, Scheme::Halving, 0.001, 0.1).unwrap();
    let h2 = find_gain_crossing(Scheme::A2, Scheme::Halving, 0.1, 0.24).unwrap();
    let gaps = [
        (
            max_gain_gap(Scheme::A2, Scheme::Dorfman, (1e-5, d)).unwrap(),
            6.2179,
            0.017128,
        ),
        (
            max_gain_gap(Scheme::A2, Scheme::Sterrett, (1e-5, s)).unwrap(),
            1.9342,
            0.003984,
        ),
        (
            max_gain_gap(Scheme::A2, Scheme::Halving, (h1, h2)).unwrap(),
            6.5951,
            0.104908,
        ),
    ];
    let pass = gaps
        .iter()
        .all(|(g, v, p)| (g.gap_per_100 - v).abs() <= 0.01 && (g.p_at - p).abs() <= 5e-4);
    let detail = gaps
        .iter()
        .map(|(g, _, _)| format!("{:.4}@{:.6}", g.gap_per_100, g.p_at))
        .collect::<Vec<_>>()
        .join(" ");
    report(5, "max gain gaps (D, S, H)", pass, secs(10), t0, &detail);
}

#[test]
fn criterion_06_max_pool_crossing() {
    let t0 = Instant::now();
    let p = max_pool_crossing().unwrap();
    let pass = (0.023178 - 1e-5..=0.023179 + 1e-5).contains(&p);
    report(
        6,
        "maximal pool crossing",
        pass,
        secs(5),
        t0,
        &format!("p={p:.7} (target [0.023178, 0.023179] +- 1e-5)"),
    );
}

#[test]
fn criterion_07_landmarks() {
    let t0 = Instant::now();
    let v = landmarks();
    let refs = [-0.002258, -0.013690, -0.2645889, 0.081749];
    let worst = v
        .iter()
        .zip(refs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let detail = format!(
        "{:.7} {:.7} {:.7} {:.7} (worst {worst:.1e}, tol 1e-6)",
        v[0], v[1], v[2], v[3]
    );
    report(
        7,
        "landmarks at q=0.755",
        worst <= 1e-6,
        secs(1),
        t0,
        &detail,
    );
}

#[test]
fn criterion_08_window_sign_suite() {
    let t0 = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, grid) in default_q_grids() {
        let a = check_window_ends_efficient(&grid, &label).unwrap();
        let b = check_window_brackets_minimizer(&grid, &label).unwrap();
        pass &= a.pass && b.pass;
        parts.push(format!(
            "{label}: a={:.3e} b={:.3e}",
            a.worst_residual, b.worst_residual
        ));
    }
    report(
        8,
        "window sign suite",
        pass,
        secs(10),
        t0,
        &parts.join("; "),
    );
}

#[test]
fn criterion_09_bayes_choice() {
    let t0 = Instant::now();
    let c = bayes_choice(
        PriorSpec::default(),
        DEFAULT_N_RANGE,
        BayesSettings::default(),
    )
    .unwrap();
    let detail = format!(
        "n={} N={} criterion={:.6e}",
        c.chosen_n,
        c.chosen_n * c.chosen_n,
        c.criterion_value
    );
    report(9, "bayes choice", c.chosen_n == 7, secs(60), t0, &detail);
}

#[test]
fn criterion_10_minimax_choice() {
    let t0 = Instant::now();
    let cal = calibrate_minimax_q_max(12, (0.995, 0.998), 1e-4, 1e-3, DEFAULT_N_RANGE).unwrap();
    let seen: Vec<String> = cal
        .scanned
        .iter()
        .map(|(q, n)| format!("{q:.4}->{n}"))
        .collect();
    let detail = match cal.q_max {
        Some(q) => {
            let grid = QGrid::default_bounded(q, 1e-3).unwrap();
            let c = minimax_choice(&grid, DEFAULT_N_RANGE).unwrap();
            format!("calibrated q_max={q:.4}: n={} ({})", c.chosen_n, grid.description())
        }
        None => format!(
            "discrepancy: no q_max in [0.995, 0.998] yields n=12 on the step-1e-3 grid from q_5+1e-4; scanned {}",
            seen.join(" ")
        ),
    };
    report(
        10,
        "minimax choice",
        cal.q_max.is_some(),
        secs(60),
        t0,
        &detail,
    );
}

#[test]
fn criterion_11_oracle_equivalence() {
    let t0 = Instant::now();

    // Exhaustive enumeration, property-based over p.
    let mut runner = TestRunner::new(Config {
        cases: 24,
        failure_persistence: None,
        ..Config::default()
    });
    let mut worst = 0.0f64;
    let enumeration = runner.run(&(0.001f64..0.6), |p| {
        let prev = Prevalence::from_p(p).unwrap();
        for scheme in Scheme::ALL {
            let sizes: Vec<u64> = if scheme == Scheme::A2 {
                vec![2, 3]
            } else {
                (1..=12).collect()
            };
            for size in sizes {
                let exact = exact_expected_tests(prev, scheme, size).unwrap();
                let formula = analytic_t(prev, scheme, size).unwrap();
                let err = (exact - formula).abs();
                if err > 1e-12 {
                    return Err(TestCaseError::fail(format!(
                        "{scheme} size {size} p={p}: {exact} vs {formula}"
                    )));
                }
            }
        }
        Ok(())
    });
    for p in [0.01, 0.1, 0.3] {
        let prev = Prevalence::from_p(p).unwrap();
        for scheme in Scheme::ALL {
            let sizes: Vec<u64> = if scheme == Scheme::A2 {
                vec![2, 3]
            } else {
                (1..=12).collect()
            };
            for size in sizes {
                let e = exact_expected_tests(prev, scheme, size).unwrap();
                worst = worst.max((e - analytic_t(prev, scheme, size).unwrap()).abs());
            }
        }
    }

    // Monte Carlo on a 12-point grid.
    let grid: [(Scheme, f64, u64); 12] = [
        (Scheme::A2, 0.1, 5),
        (Scheme::A2, 0.01, 25),
        (Scheme::A2, 0.05, 10),
        (Scheme::Dorfman, 0.01, 11),
        (Scheme::Dorfman, 0.1, 4),
        (Scheme::Dorfman, 0.05, 5),
        (Scheme::Sterrett, 0.01, 15),
        (Scheme::Sterrett, 0.1, 5),
        (Scheme::Sterrett, 0.05, 7),
        (Scheme::Halving, 0.1, 8),
        (Scheme::Halving, 0.05, 16),
        (Scheme::Halving, 0.01, 34),
    ];
    let mut worst_z = 0.0f64;
    for (i, &(scheme, p, size)) in grid.iter().enumerate() {
        let prev = Prevalence::from_p(p).unwrap();
        let r = estimate_t(prev, scheme, size, 100_000, 1000 + i as u64).unwrap();
        let z = r.z_score(analytic_t(prev, scheme, size).unwrap()).unwrap();
        worst_z = worst_z.max(z.abs());
    }

    let pass = enumeration.is_ok() && worst <= 1e-12 && worst_z < 4.0;
    let detail = format!(
        "enumeration {} (fixed-grid worst {worst:.1e}); Monte Carlo worst |z|={worst_z:.2} over 12 points",
        if enumeration.is_ok() { "ok on 24 random p".to_string() } else { format!("{enumeration:?}") }
    );
    report(11, "oracle equivalence", pass, secs(120), t0, &detail);
}

#[test]
fn criterion_12_asymptotic_slopes() {
    let t0 = Instant::now();
    let fit = |s| log_slope_check(s, 1e-5, 1e-3, 41).unwrap();
    let (a, d, s, h) = (
        fit(Scheme::A2),
        fit(Scheme::Dorfman),
        fit(Scheme::Sterrett),
        fit(Scheme::Halving),
    );
    let pass = (d - 0.5).abs() <= 0.05
        && (s - 0.5).abs() <= 0.05
        && (h - 1.0).abs() <= 0.05
        && (a - 4.0 / 3.0).abs() <= 0.05;
    let detail = format!("D={d:.4} S={s:.4} H={h:.4} A2={a:.4} (tol 0.05)");
    report(12, "asymptotic slopes", pass, secs(10), t0, &detail);
}

#[test]
fn criterion_13_linear_candidate_sets() {
    let t0 = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, f) in [
        ("Dorfman", dorfman_optimum as fn(Prevalence) -> _),
        ("Sterrett", sterrett_optimum),
        ("Halving", halving_optimum),
    ] {
        let mut misses = Vec::new();
        for p in [0.001, 0.005, 0.01, 0.02, 0.05, 0.1] {
            let opt = f(Prevalence::from_p(p).unwrap()).unwrap();
            if !opt.candidates_contain_optimum() {
                misses.push(format!(
                    "p={p}: scan {} not in {:?}",
                    opt.integer_opt.size, opt.candidates
                ));
            }
        }
        pass &= misses.is_empty();
        lines.push(if misses.is_empty() {
            format!("{name} ok")
        } else {
            format!("{name} {}", misses.join(", "))
        });
    }
    report(
        13,
        "linear-scheme candidate sets",
        pass,
        secs(10),
        t0,
        &lines.join("; "),
    );
}
