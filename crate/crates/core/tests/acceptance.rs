//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::time::{Duration, Instant};

use layercake_core::assignment::{brute_force_assign, tum_assign, WeightMatrix};
use layercake_core::cake::{int, rat, Rational};
use layercake_core::chessboard::{act, decode, equal_size_demo, grid_search, ChessboardPoint, Group, RookPlacement};
use layercake_core::field::{PreferenceField, Square, TargetGeometry, Vertex};
use layercake_core::fptas::{
    grid_resolution, oracle_budget, solve_one_layer, solve_two_layer, ORACLE_BUDGET_CONSTANT,
};
use layercake_core::generate::{random_instance, InstanceShape};
use layercake_core::proportional::solve_proportional;
use layercake_core::valuation::{lipschitz_bound, top_layer, Instance};
use layercake_core::verifier::{check_eps_envy_free_all_birthday, check_proportional, SizeBounds};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn shape(agents: usize, layers: usize) -> InstanceShape {
    InstanceShape { agents, layers, segments: 4, max_density: 5 }
}

/// ε-envy-freeness for every birthday choice on random two-layer instances.
fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = Vec::new();
    let mut runs = 0;
    let mut slowest = Duration::ZERO;
    for &n in &[3usize, 4, 5, 7, 10] {
        for eps in [rat(1, 10), rat(1, 100)] {
            for _ in 0..50 {
                let inst = random_instance(&mut rng, &shape(n, 2)).unwrap();
                let start = Instant::now();
                let res = solve_two_layer(&inst, &eps);
                let elapsed = start.elapsed();
                slowest = slowest.max(elapsed);
                runs += 1;
                match res {
                    Ok(sol) => {
                        let report = check_eps_envy_free_all_birthday(
                            &inst,
                            &sol.division,
                            &sol.assignments,
                            &eps,
                            &SizeBounds::Balanced,
                        )
                        .unwrap();
                        if !report.passed() {
                            failures.push(format!("n={n} ε={eps}: {:?}", report.failures));
                        }
                    }
                    Err(e) => failures.push(format!("n={n} ε={eps}: {e}")),
                }
                if elapsed > Duration::from_secs(1) {
                    failures.push(format!("n={n} ε={eps}: took {elapsed:?}"));
                }
            }
        }
    }
    outcome(failures.is_empty(), format!("{runs} runs, slowest {slowest:?}, failures {failures:?}"))
}

fn median_time(inst: &Instance, eps: &Rational, reps: usize) -> Duration {
    let mut times: Vec<Duration> = (0..reps)
        .map(|_| {
            let start = Instant::now();
            solve_two_layer(inst, eps).unwrap();
            start.elapsed()
        })
        .collect();
    times.sort();
    times[reps / 2]
}

/// Oracle-call budget with one constant, and wall-clock growth in `log(1/ε)`.
fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_ratio = 0f64;
    let mut failures = Vec::new();
    for &n in &[3usize, 4, 5, 7, 10] {
        for e in 1..=6u32 {
            let eps = Rational::new(1.into(), 10u64.pow(e).into());
            for _ in 0..5 {
                let inst = random_instance(&mut rng, &shape(n, 2)).unwrap();
                let sol = solve_two_layer(&inst, &eps).unwrap();
                let k = lipschitz_bound(&inst).unwrap();
                let grid = grid_resolution(&k, &eps, 6).unwrap();
                let budget = oracle_budget(n, grid);
                worst_ratio = worst_ratio.max(sol.oracle_call_count as f64 / budget as f64 * ORACLE_BUDGET_CONSTANT as f64);
                if sol.oracle_call_count > budget {
                    failures.push(format!("n={n} ε={eps}: {} calls > {budget}", sol.oracle_call_count));
                }
            }
        }
    }

    let inst = random_instance(&mut rng, &shape(5, 2)).unwrap();
    let k = lipschitz_bound(&inst).unwrap();
    let (coarse, fine) = (rat(1, 10), Rational::new(1.into(), 1_000_000.into()));
    let log_sq = |eps: &Rational| {
        let g = grid_resolution(&k, eps, 6).unwrap() as f64;
        (g.log2().ceil() + 1.0).powi(2)
    };
    let expected = log_sq(&fine) / log_sq(&coarse);
    let t_coarse = median_time(&inst, &coarse, 21);
    let t_fine = median_time(&inst, &fine, 21);
    let growth = t_fine.as_secs_f64() / t_coarse.as_secs_f64();
    if growth > 3.0 * expected {
        failures.push(format!("time grew {growth:.2}x, allowed {:.2}x", 3.0 * expected));
    }
    outcome(
        failures.is_empty(),
        format!(
            "max calls/(n(log N+1)^2) = {worst_ratio:.2} ≤ C = {ORACLE_BUDGET_CONSTANT}; time {t_coarse:?} -> {t_fine:?} \
             (growth {growth:.2}x vs log² ratio {expected:.2}x); failures {failures:?}"
        ),
    )
}

fn compositions(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in 1..n {
        for b in 1..n - a {
            out.push([a, b, n - a - b]);
        }
    }
    out
}

/// One layer, every composition of `n` into three group sizes.
fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    let mut runs = 0;
    for n in 3..=10usize {
        for k in compositions(n) {
            for eps in [rat(1, 10), rat(1, 100)] {
                let inst = random_instance(&mut rng, &shape(n, 1)).unwrap();
                runs += 1;
                match solve_one_layer(&inst, &eps, k) {
                    Ok(sol) => {
                        let report = check_eps_envy_free_all_birthday(
                            &inst,
                            &sol.division,
                            &sol.assignments,
                            &eps,
                            &SizeBounds::Exact(k.to_vec()),
                        )
                        .unwrap();
                        if !report.passed() {
                            failures.push(format!("n={n} k={k:?} ε={eps}: {:?}", report.failures));
                        }
                    }
                    Err(e) => failures.push(format!("n={n} k={k:?} ε={eps}: {e}")),
                }
            }
        }
    }
    outcome(failures.is_empty(), format!("{runs} runs, failures {failures:?}"))
}

struct Probe {
    inst: Instance,
    coloring: Vec<usize>,
    top: usize,
    grid: u64,
}

fn probe(rng: &mut ChaCha8Rng, n: usize) -> Probe {
    let inst = random_instance(rng, &shape(n, 2)).unwrap();
    let coloring = inst.non_birthday();
    let top = top_layer(&inst).unwrap();
    let grid = rng.gen_range(1..=24);
    Probe { inst, coloring, top, grid }
}

/// Structural invariants of the preference field, 1000 probes each.
fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let probes = 1000;
    let mut failures: Vec<String> = Vec::new();
    let mut counts = [0usize; 5];
    for _ in 0..probes {
        let n = rng.gen_range(3..=30);
        let p = probe(&mut rng, n);
        let field =
            PreferenceField::new(&p.inst, p.coloring.clone(), p.top, p.grid, TargetGeometry::two_layer(n - 1)).unwrap();
        let level = field.geometry().level();
        let (i, k) = (rng.gen_range(0..=p.grid), rng.gen_range(0..=p.grid));

        // vertical monotonicity along a random basic line
        let column: Vec<Rational> = (0..=p.grid).map(|r| field.fbar(Vertex::new(i, r)).unwrap().0[0].clone()).collect();
        if column.windows(2).any(|w| w[1] < w[0]) {
            failures.push(format!("monotonicity n={n} N={} x={i}", p.grid));
        }
        counts[0] += 1;

        // boundary symmetry at a random height
        let left = field.fbar(Vertex::new(0, k)).unwrap();
        let right = field.fbar(Vertex::new(p.grid, k)).unwrap();
        if left.0[0] != right.0[0] || left.0[1] != right.0[2] || left.0[2] != right.0[1] {
            failures.push(format!("symmetry n={n} N={} y={k}: {left} vs {right}", p.grid));
        }
        counts[1] += 1;

        // no vertex on the perturbed line, and same side as the unperturbed one
        let z = field.fbar(Vertex::new(i, k)).unwrap();
        let third = rat(1, 3);
        if z.0[0] == level || ((z.0[0] > level) != (z.0[0] >= third)) {
            failures.push(format!("perturbation n={n} vertex ({i},{k}) z1={}", z.0[0]));
        }
        counts[2] += 1;

        // crossings on a random basic square boundary
        if p.grid >= 1 {
            let sq = Square { i: rng.gen_range(0..p.grid), k: rng.gen_range(0..p.grid) };
            let crossings = field.segment_crossings(&sq.boundary()).unwrap();
            let distinct = {
                let mut e: Vec<_> = crossings.iter().map(|c| c.edge).collect();
                e.dedup();
                e.len() == crossings.len()
            };
            if !(crossings.is_empty() || (crossings.len() == 2 && distinct)) {
                failures.push(format!("square parity n={n} ({},{}) {} crossings", sq.i, sq.k, crossings.len()));
            }
            counts[3] += 1;
        }

        // exactly one crossing edge on the basic line
        let crossing_edges = column.windows(2).filter(|w| (w[0] < level) != (w[1] < level)).count();
        if crossing_edges != 1 {
            failures.push(format!("unique crossing n={n} x={i}: {crossing_edges} edges"));
        }
        let lc = field.line_crossing(i).unwrap();
        if !(column[lc.row as usize] < level && column[lc.row as usize + 1] > level) {
            failures.push(format!("line search n={n} x={i} returned row {}", lc.row));
        }
        counts[4] += 1;
    }
    failures.truncate(10);
    outcome(
        failures.is_empty(),
        format!(
            "probes: monotone {}, symmetry {}, perturbation {}, square parity {}, unique crossing {}; failures {failures:?}",
            counts[0], counts[1], counts[2], counts[3], counts[4]
        ),
    )
}

fn random_weights(rng: &mut ChaCha8Rng, rows: usize) -> WeightMatrix {
    let w = (0..rows)
        .map(|_| loop {
            let raw: Vec<i64> = (0..3).map(|_| if rng.gen_bool(0.35) { 0 } else { rng.gen_range(1..=6) }).collect();
            let total: i64 = raw.iter().sum();
            if total > 0 {
                break raw.iter().map(|&x| rat(x, total)).collect::<Vec<_>>();
            }
        })
        .collect();
    WeightMatrix::from_rows(w, 3).unwrap()
}

/// Flow rounding agrees with exhaustive enumeration.
fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut checked, mut failures) = (0, Vec::new());
    for _ in 0..400 {
        let rows = rng.gen_range(1..=8);
        let w = random_weights(&mut rng, rows);
        for jstar in 0..3 {
            let all = brute_force_assign(&w, jstar).unwrap();
            checked += 1;
            match tum_assign(&w, jstar) {
                Ok(g) if all.contains(&g) => {}
                Ok(g) => failures.push(format!("{:?} j*={jstar}: {:?} not enumerated", w.a(), g.bundle_of)),
                Err(e) => failures.push(format!("{:?} j*={jstar}: {e}", w.a())),
            }
        }
    }
    outcome(failures.is_empty(), format!("{checked} matrices × j*, failures {failures:?}"))
}

fn random_point(rng: &mut ChaCha8Rng, q: usize) -> ChessboardPoint {
    let mut rows: Vec<usize> = (0..2 * q - 1).collect();
    rows.shuffle(rng);
    rows.truncate(q);
    let raw: Vec<i64> = (0..q).map(|_| if rng.gen_bool(0.25) { 0 } else { rng.gen_range(1..=20) }).collect();
    let total: i64 = raw.iter().sum::<i64>().max(1);
    let mut coords: Vec<Rational> = raw.iter().map(|&x| rat(x, total)).collect();
    if raw.iter().all(|&x| x == 0) {
        coords[0] = int(1);
    }
    ChessboardPoint::new(RookPlacement::new(rows).unwrap(), coords).unwrap()
}

/// Exact equivariance under the group action and representation consistency.
fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    let (mut equiv, mut repr) = (0, 0);
    for q in [2usize, 3, 4] {
        let group = Group::new(q).unwrap();
        for _ in 0..200 {
            let m = rng.gen_range(1..=q);
            let x = random_point(&mut rng, q);
            let d = decode(&group, &x, m).unwrap();
            for g in group.elements() {
                let dg = decode(&group, &act(&group, &g, &x), m).unwrap();
                for j in 0..q {
                    let target = group.eta_inv(&group.add(&g, &group.eta(j).unwrap()));
                    if d.bundle(j) != dg.bundle(target) {
                        failures.push(format!("equivariance q={q} g={:?} j={j}", g.0));
                    }
                }
                equiv += 1;
            }

            // move the zero-weight rooks to other free rows
            let zero_cols: Vec<usize> = (0..q).filter(|&j| x.coords()[j] == int(0)).collect();
            if zero_cols.is_empty() {
                continue;
            }
            let kept: Vec<usize> =
                (0..q).filter(|j| !zero_cols.contains(j)).map(|j| x.placement().rows()[j]).collect();
            let mut free: Vec<usize> = (0..2 * q - 1).filter(|r| !kept.contains(r)).collect();
            free.shuffle(&mut rng);
            let mut rows = x.placement().rows().to_vec();
            for (c, r) in zero_cols.iter().zip(free) {
                rows[*c] = r;
            }
            let y = ChessboardPoint::new(RookPlacement::new(rows).unwrap(), x.coords().to_vec()).unwrap();
            let dy = decode(&group, &y, m).unwrap();
            for j in 0..q {
                if d.bundle(j).without_degenerate() != dy.bundle(j).without_degenerate() {
                    failures.push(format!("representation q={q} j={j}"));
                }
            }
            repr += 1;
        }
    }
    outcome(failures.is_empty(), format!("{equiv} equivariance checks, {repr} representation checks, failures {failures:?}"))
}

/// Grid search reaches balanced popularity and small envy on most instances.
fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let r = 60usize;
    let configs: Vec<(usize, usize)> = [1usize, 2, 3].iter().flat_map(|&m| [(m, 3usize), (m, 6)]).collect();
    let mut passed = 0;
    let mut misses = Vec::new();
    let total = 100;
    for t in 0..total {
        let (m, n) = configs[t % configs.len()];
        let inst = random_instance(&mut rng, &shape(n, m)).unwrap();
        let k = lipschitz_bound(&inst).unwrap();
        let bound = int(6) * &k / int(r as i64);
        let res = grid_search(&inst, 3, r).unwrap();
        let report = check_eps_envy_free_all_birthday(&inst, &res.division, &res.assignments, &bound, &SizeBounds::Balanced)
            .unwrap();
        let ok = res.balance_distance <= rat(1, 30) && report.passed();
        if ok {
            passed += 1;
        } else {
            misses.push(format!(
                "m={m} n={n}: balance {} tolerance {} envy {} (bound {bound})",
                res.balance_distance,
                res.tolerance,
                report.max_envy()
            ));
        }
    }
    outcome(passed * 100 >= 95 * total, format!("{passed}/{total} instances within bounds; misses {misses:?}"))
}

/// Proportional shares up to ε with balanced group sizes.
fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let eps = rat(1, 10);
    let mut failures = Vec::new();
    let mut runs = 0;
    let mut slowest = Duration::ZERO;
    for q in [2usize, 3, 4, 6, 8, 9] {
        let max_m = if q.is_power_of_two() { q } else { 2 };
        for m in 1..=max_m {
            for n in q..=q + 4 {
                let inst = random_instance(&mut rng, &shape(n, m)).unwrap();
                let start = Instant::now();
                let res = solve_proportional(&inst, q, &eps);
                let elapsed = start.elapsed();
                slowest = slowest.max(elapsed);
                runs += 1;
                match res {
                    Ok(sol) => {
                        let report = check_proportional(&inst, &sol.division, &sol.bundle_of, q, &eps).unwrap();
                        if !report.passed() {
                            failures.push(format!("q={q} m={m} n={n}: {:?}", report.failures));
                        }
                    }
                    Err(e) => failures.push(format!("q={q} m={m} n={n}: {e}")),
                }
                if elapsed > Duration::from_secs(5) {
                    failures.push(format!("q={q} m={m} n={n}: took {elapsed:?}"));
                }
            }
        }
    }
    outcome(failures.is_empty(), format!("{runs} runs, slowest {slowest:?}, failures {failures:?}"))
}

/// Equal-size subintervals per bundle and small envy.
fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = Vec::new();
    let mut runs = 0;
    for (q, r) in [(2usize, 64usize), (3, 30)] {
        for _ in 0..10 {
            let n = rng.gen_range(2..=4);
            let inst = random_instance(&mut rng, &shape(n, 1)).unwrap();
            let k = lipschitz_bound(&inst).unwrap();
            let bound = int(6) * &k / int(r as i64);
            let res = equal_size_demo(&inst, q, r).unwrap();
            runs += 1;
            let profile = res.length_profile(0);
            if (1..q).any(|j| res.length_profile(j) != profile) {
                failures.push(format!("q={q}: length profiles differ"));
            }
            if res.subintervals.iter().any(|s| s.len() != q) {
                failures.push(format!("q={q}: a bundle is not made of {q} subintervals"));
            }
            let report =
                check_eps_envy_free_all_birthday(&inst, &res.division, &res.search.assignments, &bound, &SizeBounds::Balanced)
                    .unwrap();
            if !report.passed() {
                failures.push(format!("q={q} n={n}: {:?}", report.failures));
            }
        }
    }
    outcome(failures.is_empty(), format!("{runs} runs, failures {failures:?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 envy-free for every birthday choice", criterion_1),
        ("2 oracle budget and runtime scaling", criterion_2),
        ("3 one layer, arbitrary group sizes", criterion_3),
        ("4 preference-field invariants", criterion_4),
        ("5 flow rounding vs enumeration", criterion_5),
        ("6 chessboard equivariance", criterion_6),
        ("7 grid search balance", criterion_7),
        ("8 proportionality", criterion_8),
        ("9 equal-size pieces", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.starts_with(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {name}: {status} ({:.1?}) {}", start.elapsed(), o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
