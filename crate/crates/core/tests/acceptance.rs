//! Acceptance suite. Run with `cargo test --release --test acceptance`;
//! pass criterion numbers after `--` to run a subset.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bimodal_inventory::ccg::{
    allocation_objective, solve_two_stage, worst_case_value, CcgOptions, SolveReport, Termination,
};
use bimodal_inventory::formulations::{AlliedChannels, Allocation, BioConfig};
use bimodal_inventory::instance::{load_instance, walkin_instance, Instance};
use bimodal_inventory::reference::{
    load_reference_config, load_reference_fixture, ReferenceFixture,
};
use bimodal_inventory::simulator::{run_rolling_horizon, SimulationResult};
use bimodal_inventory::tuning::{
    closed_form_single_location, score_allocation, superpose, tune_lambda, verify_superposition,
    ScoringObjective, TuneMethod,
};
use bimodal_inventory::uncertainty::{
    enumerate_discrete_points, enumerate_vertices, is_integral, load_means, load_uncertainty_set,
    sample_poisson, sample_uniform, Channel, ChannelBounds, UncertaintySet,
};
use common::{all_points, brute_worst, integer_orders, point_count, rng, small_instance, Shape};
use num_rational::BigRational;
use rand::Rng;

const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
const OBJ_TOL: f64 = 1e-6;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn err(e: bimodal_inventory::Error) -> String {
    e.to_string()
}

fn solve(inst: &Instance, set: &UncertaintySet, cfg: &BioConfig) -> Result<SolveReport, String> {
    solve_two_stage(inst, set, cfg, &CcgOptions::default()).map_err(err)
}

fn example1() -> (Instance, UncertaintySet) {
    (
        load_instance(format!("{DATA}/example1/instance.json")).unwrap(),
        load_uncertainty_set(format!("{DATA}/example1/set.json")).unwrap(),
    )
}

// Continuous three-store table: (p, b) setting, λ, reference allocation
// and objective.
const TABLE: [((f64, f64), f64, [f64; 3], f64); 15] = [
    ((0.0, 160.0), 0.0, [3.0, 3.0, 3.0], -360.0),
    ((0.0, 160.0), 1.0, [1.0, 0.0, 0.0], -40.0),
    ((0.0, 160.0), 0.25, [2.5, 2.25, 2.25], -280.0),
    ((0.0, 160.0), 0.5, [2.0, 1.5, 1.5], -200.0),
    ((0.0, 160.0), 0.75, [1.5, 0.75, 0.75], -120.0),
    ((160.0, 0.0), 0.0, [1.0, 1.0, 1.0], 40.0),
    ((160.0, 0.0), 1.0, [3.0, 3.0, 0.0], 720.0),
    ((160.0, 0.0), 0.25, [1.5, 1.5, 0.75], 210.0),
    ((160.0, 0.0), 0.5, [2.0, 2.0, 0.5], 380.0),
    ((160.0, 0.0), 0.75, [2.5, 2.5, 0.25], 550.0),
    ((80.0, 80.0), 0.0, [1.75, 1.75, 1.75], -130.0),
    ((80.0, 80.0), 1.0, [3.0, 3.0, 0.0], 240.0),
    ((80.0, 80.0), 0.25, [2.0625, 2.0625, 1.3125], -37.5),
    ((80.0, 80.0), 0.5, [2.375, 2.375, 0.875], 55.0),
    ((80.0, 80.0), 0.75, [2.6875, 2.6875, 0.4375], 147.5),
];

fn c1_table() -> Outcome {
    let mut failed = Vec::new();
    for &((p, b), lambda, alloc, expected) in &TABLE {
        let (inst, set) = common::three_store_example(p, b);
        let cfg = BioConfig::with_lambda(lambda);
        let r = solve(&inst, &set, &cfg)?;
        let ours = allocation_objective(&inst, &set, &r.allocation, &cfg).map_err(err)?;
        let theirs = allocation_objective(&inst, &set, &Allocation::first_period(1, &alloc), &cfg)
            .map_err(err)?;
        ensure(close(ours, r.objective, OBJ_TOL), || {
            format!(
                "p={p} b={b} λ={lambda}: returned allocation re-scores to {ours}, not {}",
                r.objective
            )
        })?;
        if !close(r.objective, expected, OBJ_TOL) {
            failed.push(format!(
                "p={p} b={b} λ={lambda}: got {:.4} at {:?}, table {expected} (table allocation re-scores to {theirs:.4})",
                r.objective, r.allocation.x[0]
            ));
        }
    }
    if failed.is_empty() {
        Ok("15/15 rows".into())
    } else {
        Err(format!(
            "{}/15 rows differ: {}",
            failed.len(),
            failed.join("; ")
        ))
    }
}

fn c2_integer_example() -> Outcome {
    let (inst, set) = example1();
    let mut out = Vec::new();
    for (lambda, x, z) in [(0.0, 3.0, -360.0), (0.5, 2.0, -240.0)] {
        let cfg = BioConfig {
            integer_allocations: true,
            ..BioConfig::with_lambda(lambda)
        };
        let r = solve(&inst, &set, &cfg)?;
        ensure(close(r.objective, z, OBJ_TOL), || {
            format!("λ={lambda}: objective {} not {z}", r.objective)
        })?;
        ensure(r.allocation.x[0] == vec![x; 3], || {
            format!("λ={lambda}: allocation {:?}", r.allocation.x[0])
        })?;
        out.push(format!("λ={lambda}: {z} at [{x};3]"));
    }
    let (worst, _) =
        worst_case_value(&inst, &set, &Allocation::first_period(1, &[2.0; 3])).map_err(err)?;
    ensure(close(worst, -560.0, OBJ_TOL), || {
        format!("worst case of [2,2,2] is {worst}")
    })?;
    out.push("worst case of [2,2,2] -560".into());
    Ok(out.join(", "))
}

fn c3_superposition() -> Outcome {
    let mut g = rng(3);
    let shape = Shape {
        max_stores: 3,
        max_zones: 2,
        max_periods: 2,
        max_upper: 3,
        zero_inventory: true,
    };
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let (inst, set) = small_instance(&mut g, shape);
        for lambda in [0.25, 0.5, 0.75] {
            let rep = verify_superposition(
                &inst,
                &set,
                lambda,
                &BioConfig {
                    allied_channels: AlliedChannels::Both,
                    ..BioConfig::default()
                },
                &CcgOptions::default(),
            )
            .map_err(err)?;
            ensure(rep.all_converged, || {
                format!("instance {i} λ={lambda}: not converged")
            })?;
            let rel = rep.residual / (1.0 + rep.z_lambda.abs());
            worst = worst.max(rel);
            ensure(rel <= OBJ_TOL, || {
                format!(
                    "instance {i} λ={lambda}: Z0={} Z1={} Zλ={} residual {}",
                    rep.z0, rep.z1, rep.z_lambda, rep.residual
                )
            })?;
        }
    }
    Ok(format!("150 solves, max scaled residual {worst:.2e}"))
}

/// Gaussian-elimination rank of a small integer matrix.
fn rank(mut rows: Vec<Vec<f64>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| rows[i][c].abs() > 1e-9) else {
            continue;
        };
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r {
                let f = rows[i][c] / rows[r][c];
                for k in 0..cols {
                    rows[i][k] -= f * rows[r][k];
                }
            }
        }
        r += 1;
    }
    r
}

/// Integer points whose tight constraints have full rank. When every vertex
/// is integral this is exactly the vertex set.
fn integer_vertices(b: &ChannelBounds) -> Vec<Vec<u32>> {
    let n = b.width();
    let set = UncertaintySet {
        walkin: b.clone(),
        online: ChannelBounds::zero(1, 0),
    };
    let pts = enumerate_discrete_points(&set, Channel::Walkin, 0).unwrap();
    pts.into_iter()
        .filter(|x| {
            let mut tight = Vec::new();
            for k in 0..n {
                if x[k] == b.lower[0][k] || x[k] == b.upper[0][k] {
                    let mut e = vec![0.0; n];
                    e[k] = 1.0;
                    tight.push(e);
                }
            }
            let s: u32 = x.iter().sum();
            if s == b.budget_lower[0] || s == b.budget_upper[0] {
                tight.push(vec![1.0; n]);
            }
            rank(tight) == n
        })
        .collect()
}

fn c4_integral_vertices() -> Outcome {
    let mut g = rng(4);
    let mut total = 0;
    for i in 0..100 {
        let n = g.random_range(1..=4usize);
        let mut b = ChannelBounds::zero(1, n);
        for k in 0..n {
            let lo = g.random_range(0..=5u32);
            b.lower[0][k] = lo;
            b.upper[0][k] = g.random_range(lo..=5);
        }
        let (sl, su): (u32, u32) = (b.lower[0].iter().sum(), b.upper[0].iter().sum());
        let lo = g.random_range(sl..=su);
        b.budget_lower[0] = lo;
        b.budget_upper[0] = g.random_range(lo..=su);
        let set = UncertaintySet {
            walkin: b.clone(),
            online: ChannelBounds::zero(1, 0),
        };
        let verts = enumerate_vertices(&set, Channel::Walkin, 0).map_err(err)?;
        ensure(verts.iter().all(|v| is_integral(v)), || {
            format!("set {i}: fractional vertex in {verts:?}")
        })?;
        let mut ours: Vec<Vec<BigRational>> = verts;
        ours.sort();
        let mut oracle: Vec<Vec<BigRational>> = integer_vertices(&b)
            .into_iter()
            .map(|x| {
                x.into_iter()
                    .map(|v| BigRational::from_integer(v.into()))
                    .collect()
            })
            .collect();
        oracle.sort();
        ensure(ours == oracle, || {
            format!(
                "set {i}: {} vertices, oracle finds {}",
                ours.len(),
                oracle.len()
            )
        })?;
        total += ours.len();
    }
    Ok(format!(
        "100 sets, {total} vertices, all integral and matching"
    ))
}

fn random_orders(g: &mut rand_chacha::ChaCha8Rng, inst: &Instance) -> Allocation {
    let mut a = Allocation::zeros(inst.horizon, inst.num_nodes());
    for row in &mut a.x {
        for v in row {
            *v = f64::from(g.random_range(0..=3u32));
        }
    }
    a
}

fn c5_subproblem_exact() -> Outcome {
    let mut g = rng(5);
    let shape = Shape {
        max_stores: 3,
        max_zones: 2,
        max_periods: 2,
        max_upper: 4,
        zero_inventory: false,
    };
    let mut done = 0;
    let mut points = 0;
    while done < 50 {
        let (inst, set) = small_instance(&mut g, shape);
        let count = point_count(&set);
        if !(100..=20_000).contains(&count) {
            continue;
        }
        let alloc = random_orders(&mut g, &inst);
        let (mip, _) = worst_case_value(&inst, &set, &alloc).map_err(err)?;
        let pts = all_points(&set);
        let brute = brute_worst(&inst, &alloc, &pts);
        ensure(close(mip, brute, OBJ_TOL), || {
            format!("instance {done}: subproblem {mip}, enumeration {brute}")
        })?;
        done += 1;
        points += pts.len();
    }
    Ok(format!("50 instances, {points} demand points enumerated"))
}

fn c6_ccg_global() -> Outcome {
    let mut g = rng(6);
    let shape = Shape {
        max_stores: 3,
        max_zones: 1,
        max_periods: 2,
        max_upper: 2,
        zero_inventory: false,
    };
    let options = CcgOptions::default();
    let mut done = 0;
    let (mut iters, mut evaluated) = (0, 0);
    while done < 50 {
        let (inst, set) = small_instance(&mut g, shape);
        let cap = set.max_total_demand();
        let cells = inst.horizon * inst.num_nodes();
        if !(2..=3).contains(&cells) || !(3.0..=4.0).contains(&cap) || point_count(&set) > 200 {
            continue;
        }
        let cfg = BioConfig {
            integer_allocations: true,
            ..BioConfig::default()
        };
        let r = solve_two_stage(&inst, &set, &cfg, &options).map_err(err)?;
        let pts = all_points(&set);
        let grid = integer_orders(inst.horizon, inst.num_nodes(), cap as u32);
        evaluated += grid.len() * pts.len();
        let best = grid
            .iter()
            .map(|x| brute_worst(&inst, x, &pts))
            .fold(f64::NEG_INFINITY, f64::max);
        ensure(close(r.objective, best, OBJ_TOL), || {
            format!(
                "instance {done}: two-stage {} vs exhaustive {best}",
                r.objective
            )
        })?;
        ensure(r.termination == Termination::Converged, || {
            format!("instance {done}: {:?}", r.termination)
        })?;
        ensure(r.gap() <= options.epsilon, || {
            format!("instance {done}: gap {}", r.gap())
        })?;
        for w in r.trace.windows(2) {
            ensure(
                w[1].lower_bound >= w[0].lower_bound - 1e-9
                    && w[1].upper_bound <= w[0].upper_bound + 1e-9,
                || {
                    format!(
                        "instance {done}: bounds not monotone at iteration {}",
                        w[1].iteration
                    )
                },
            )?;
        }
        done += 1;
        iters += r.iterations;
    }
    Ok(format!(
        "50 instances, {iters} iterations, {evaluated} order-scenario pairs enumerated"
    ))
}

/// Profit of ordering `x` at one store when demand is `d`.
fn newsvendor(p: f64, b: f64, h: f64, c: f64, x: f64, d: f64) -> f64 {
    p * x.min(d) - b * (d - x).max(0.0) - h * (x - d).max(0.0) - c * x
}

fn c7_single_location() -> Outcome {
    let mut g = rng(7);
    for i in 0..100 {
        let c: f64 = g.random_range(1.0..60.0);
        let p: f64 = g.random_range(0.0..150.0);
        let b: f64 = g.random_range((c - p).max(0.0)..150.0);
        let h: f64 = g.random_range(0.0..10.0);
        let dmin = g.random_range(0..=5u32);
        let dmax = g.random_range(dmin..=9);
        let (lo, hi) = (f64::from(dmin), f64::from(dmax));
        let inst = walkin_instance(1, p, b, h, c);
        let set = UncertaintySet {
            walkin: ChannelBounds::uniform(1, &[dmin], &[dmax], (dmin, dmax)),
            online: ChannelBounds::zero(1, 0),
        };
        let cf = closed_form_single_location(p, b, h, c, lo, hi).map_err(err)?;
        let tag = format!("draw {i} (p={p:.3} b={b:.3} h={h:.3} c={c:.3} d=[{dmin},{dmax}])");

        // Grid oracles on x: worst case at a demand endpoint, best case anywhere.
        let worst = |x: f64| newsvendor(p, b, h, c, x, lo).min(newsvendor(p, b, h, c, x, hi));
        let best = |x: f64| newsvendor(p, b, h, c, x, x.clamp(lo, hi));
        let grid: Vec<f64> = (0..=4000).map(|k| hi * 1.5 * k as f64 / 4000.0).collect();
        let g0 = grid
            .iter()
            .map(|&x| worst(x))
            .fold(f64::NEG_INFINITY, f64::max);
        let g1 = grid
            .iter()
            .map(|&x| best(x))
            .fold(f64::NEG_INFINITY, f64::max);
        ensure(
            close(worst(cf.x_bio0), cf.z_bio0, 1e-6) && g0 <= cf.z_bio0 + 1e-6,
            || format!("{tag}: closed form BIO-0 {} vs grid {g0}", cf.z_bio0),
        )?;
        ensure(
            close(best(cf.x_bio1), cf.z_bio1, 1e-6) && g1 <= cf.z_bio1 + 1e-6,
            || format!("{tag}: closed form BIO-1 {} vs grid {g1}", cf.z_bio1),
        )?;

        for (lambda, x, z) in [(0.0, cf.x_bio0, cf.z_bio0), (1.0, cf.x_bio1, cf.z_bio1)] {
            let r = solve(&inst, &set, &BioConfig::with_lambda(lambda))?;
            let got = r.allocation.x[0][0];
            ensure(close(r.objective, z, 1e-6 * (1.0 + z.abs())), || {
                format!("{tag} λ={lambda}: objective {} vs {z}", r.objective)
            })?;
            ensure(close(got, x, 1e-6 * (1.0 + x.abs())), || {
                format!("{tag} λ={lambda}: order {got} vs {x}")
            })?;
        }
    }
    Ok("100 draws, BIO-0 and BIO-1".into())
}

/// Best sample-average profit over free orders for a one-period walk-in
/// network without transfers: each store is its own newsvendor, optimal at
/// zero or at a sampled demand.
fn saa_oracle(inst: &Instance, samples: &[bimodal_inventory::uncertainty::DemandScenario]) -> f64 {
    let e = &inst.econ;
    (0..inst.num_nodes())
        .map(|l| {
            let (p, b, h, c) = (
                e.walkin_price[0][l],
                e.walkin_penalty[0][l],
                e.holding[l],
                e.purchase_cost[l],
            );
            std::iter::once(0.0)
                .chain(samples.iter().map(|s| s.walkin[0][l]))
                .map(|x| {
                    samples
                        .iter()
                        .map(|s| newsvendor(p, b, h, c, x, s.walkin[0][l]))
                        .sum::<f64>()
                        / samples.len() as f64
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum()
}

fn c8_bisection() -> Outcome {
    let mut g = rng(8);
    let mut cases: Vec<(String, Instance, UncertaintySet)> =
        [(0.0, 160.0), (160.0, 0.0), (80.0, 80.0)]
            .iter()
            .map(|&(p, b)| {
                let (i, s) = common::three_store_example(p, b);
                (format!("three-store p={p} b={b}"), i, s)
            })
            .collect();
    for k in 0..5 {
        let n = g.random_range(1..=3usize);
        let mut inst = walkin_instance(n, 0.0, 0.0, 0.0, 0.0);
        for l in 0..n {
            inst.econ.purchase_cost[l] = g.random_range(5.0..50.0);
            inst.econ.walkin_price[0][l] = g.random_range(0.0..120.0);
            inst.econ.walkin_penalty[0][l] = g.random_range(0.0..120.0);
            inst.econ.holding[l] = g.random_range(0.0..5.0);
        }
        let upper: Vec<u32> = (0..n).map(|_| g.random_range(1..=5)).collect();
        let su: u32 = upper.iter().sum();
        let set = UncertaintySet {
            walkin: ChannelBounds::uniform(1, &vec![0; n], &upper, (1.min(su), su)),
            online: ChannelBounds::zero(1, 0),
        };
        cases.push((format!("random walk-in network {k}"), inst, set));
    }

    let mut mismatches = Vec::new();
    for (name, inst, set) in &cases {
        let samples = sample_uniform(set, 1000, 88).map_err(err)?;
        let t = tune_lambda(
            inst,
            set,
            &samples,
            &[],
            &ScoringObjective::Mean,
            &TuneMethod::Bisection,
            &BioConfig::default(),
            &CcgOptions::default(),
        )
        .map_err(err)?;
        let oracle = saa_oracle(inst, &samples);
        if (t.score - oracle).abs() > 1e-6 * (1.0 + oracle.abs()) {
            mismatches.push(format!(
                "{name}: λ={:.4} scores {:.4}, free SAA optimum {oracle:.4}",
                t.lambda, t.score
            ));
        }

        // Concavity of the score along the segment.
        let x0 = solve(inst, set, &BioConfig::with_lambda(0.0))?.allocation;
        let x1 = solve(inst, set, &BioConfig::with_lambda(1.0))?.allocation;
        let few = &samples[..200];
        let score = |lam: f64| -> Result<f64, String> {
            let a = superpose(&x0.orders_only(), &x1.orders_only(), lam).map_err(err)?;
            score_allocation(inst, &a, few, &ScoringObjective::Mean).map_err(err)
        };
        for _ in 0..100 / cases.len() + 1 {
            let a: f64 = g.random_range(0.0..1.0);
            let b: f64 = g.random_range(0.0..1.0);
            let (sa, sb, sm) = (score(a)?, score(b)?, score((a + b) / 2.0)?);
            ensure(sm >= (sa + sb) / 2.0 - 1e-9 * (1.0 + sm.abs()), || {
                format!(
                    "{name}: midpoint of λ={a:.3},{b:.3} scores {sm} < {}",
                    (sa + sb) / 2.0
                )
            })?;
        }
    }
    if mismatches.is_empty() {
        Ok(format!("{} instances, concavity holds", cases.len()))
    } else {
        Err(format!(
            "concavity holds; {}/{} bisection scores miss the free SAA optimum: {}",
            mismatches.len(),
            cases.len(),
            mismatches.join("; ")
        ))
    }
}

fn c9_monte_carlo() -> Outcome {
    let (inst, _) = example1();
    let cfg = load_reference_config(format!("{DATA}/reference/config.json")).map_err(err)?;
    let means = load_means(format!("{DATA}/example1/means.json")).map_err(err)?;
    let samples =
        sample_poisson(&means, cfg.monte_carlo.samples, cfg.monte_carlo.seed).map_err(err)?;
    let mut out = Vec::new();
    for (x, target) in [(3.0, -372.32), (2.0, -291.04)] {
        let alloc = Allocation::first_period(1, &[x; 3]);
        let mean =
            score_allocation(&inst, &alloc, &samples, &ScoringObjective::Mean).map_err(err)?;
        let rel = (mean - target).abs() / target.abs();
        ensure(rel <= 0.02, || {
            format!("[{x};3]: mean {mean:.2} vs {target} ({:.2}%)", rel * 100.0)
        })?;
        out.push(format!(
            "[{x};3] {mean:.2} ({:+.2}%)",
            (mean - target) / target.abs() * 100.0
        ));
    }
    Ok(out.join(", "))
}

fn check_conservation(res: &SimulationResult, inst: &Instance) -> Result<(), String> {
    let n = inst.num_nodes();
    let weeks = res.config.weeks;
    let days = res.config.days_per_week;
    for rep in &res.replications {
        let tag = format!("{} rep {}", res.policy, rep.replication);
        ensure(rep.failures.is_empty(), || {
            format!("{tag}: {:?}", rep.failures)
        })?;
        ensure(rep.trace.len() == weeks * days * n, || {
            format!("{tag}: trace length")
        })?;
        let mut prev_end: Vec<f64> = (0..n).map(|l| inst.initial_on_hand(l)).collect();
        let (mut sold, mut shipped, mut arrived) = (0.0, 0.0, 0.0);
        for (i, r) in rep.trace.iter().enumerate() {
            ensure(
                r.week == i / (days * n) && r.day == i / n % days && r.node == i % n,
                || format!("{tag}: trace out of order at {i}"),
            )?;
            ensure(r.start >= 0.0 && r.end >= 0.0, || {
                format!("{tag}: negative stock {r:?}")
            })?;
            ensure(
                r.end == r.start + r.arrivals - r.walkin_sales - r.shipments,
                || format!("{tag}: flow balance {r:?}"),
            )?;
            ensure(r.start == prev_end[r.node], || {
                format!("{tag}: day continuity {r:?}")
            })?;
            prev_end[r.node] = r.end;
            sold += r.walkin_sales;
            shipped += r.shipments;
            arrived += r.arrivals;
        }
        let k = &rep.kpi;
        let ordered: f64 = rep.orders.iter().flatten().sum();
        let pipeline: f64 = (0..n)
            .map(|l| inst.inventory.pipeline[l].iter().skip(1).sum::<f64>())
            .sum();
        ensure(arrived <= ordered + pipeline, || {
            format!("{tag}: more arrivals than orders")
        })?;
        ensure(k.replenish_qty == ordered, || {
            format!("{tag}: replenishment total")
        })?;
        ensure(k.walkin_sales_qty == sold, || {
            format!("{tag}: walk-in sales total")
        })?;
        ensure(k.total_sales_qty == sold + shipped, || {
            format!("{tag}: total sales")
        })?;
        let purchase: f64 = rep
            .orders
            .iter()
            .map(|w| {
                w.iter()
                    .enumerate()
                    .map(|(l, q)| inst.econ.purchase_cost[l] * q)
                    .sum::<f64>()
            })
            .sum();
        ensure(
            close(k.purchase_cost, purchase, 1e-9 * (1.0 + purchase)),
            || format!("{tag}: purchase cost"),
        )?;
        ensure(
            k.realized_profit == k.satisfied_revenue - k.shipping_cost - k.purchase_cost,
            || format!("{tag}: realized profit identity"),
        )?;
        ensure(
            k.penalized_profit == k.realized_profit - rep.penalty,
            || format!("{tag}: penalized profit identity"),
        )?;
        ensure(
            rep.penalty >= 0.0 && rep.lost_walkin >= 0.0 && rep.lost_online >= 0.0,
            || format!("{tag}: negative losses"),
        )?;
    }
    Ok(())
}

fn c10_simulator() -> Outcome {
    let cfg = load_reference_config(format!("{DATA}/reference/config.json")).map_err(err)?;
    let syn = cfg.rolling.instance().map_err(err)?;
    ensure(
        syn.instance.num_nodes() == 7
            && syn.instance.network.warehouses.len() == 2
            && syn.instance.num_zones() == 3,
        || "reference instance is not 5 stores, 2 DCs, 3 zones".into(),
    )?;
    let mut sim = cfg.rolling.simulation;
    sim.record_trace = true;
    ensure(sim.replications == 30, || {
        "reference run is not 30 replications".into()
    })?;
    let run = || -> Result<Vec<SimulationResult>, String> {
        cfg.rolling
            .policies
            .iter()
            .map(|p| run_rolling_horizon(&syn.instance, &syn.weekly_means, p, &sim).map_err(err))
            .collect()
    };
    let first = run()?;
    for res in &first {
        check_conservation(res, &syn.instance)?;
    }
    ensure(first == run()?, || {
        "second run with the same seed differs".into()
    })?;

    let fixture = ReferenceFixture::from_results(&first).map_err(err)?;
    let shipped = load_reference_fixture(format!("{DATA}/reference/fixture.json")).map_err(err)?;
    ensure(fixture == shipped, || {
        "reference run no longer matches the shipped fixture".into()
    })?;
    let ro = &fixture.policies[0];
    let bio = &fixture.policies[1];
    Ok(format!(
        "{} policies × 30 replications conserve stock; {} {:.2} vs {} {:.2} matches fixture",
        first.len(),
        bio.policy,
        bio.realized_profit,
        ro.policy,
        ro.realized_profit
    ))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "three-store table",
            limit: Duration::from_secs(10),
            run: c1_table,
        },
        Criterion {
            id: 2,
            name: "integer example",
            limit: Duration::from_secs(30),
            run: c2_integer_example,
        },
        Criterion {
            id: 3,
            name: "superposition",
            limit: Duration::from_secs(300),
            run: c3_superposition,
        },
        Criterion {
            id: 4,
            name: "integral vertices",
            limit: Duration::from_secs(60),
            run: c4_integral_vertices,
        },
        Criterion {
            id: 5,
            name: "subproblem exactness",
            limit: Duration::from_secs(600),
            run: c5_subproblem_exact,
        },
        Criterion {
            id: 6,
            name: "two-stage global optimum",
            limit: Duration::from_secs(600),
            run: c6_ccg_global,
        },
        Criterion {
            id: 7,
            name: "single-location closed form",
            limit: Duration::from_secs(120),
            run: c7_single_location,
        },
        Criterion {
            id: 8,
            name: "bisection and concavity",
            limit: Duration::from_secs(300),
            run: c8_bisection,
        },
        Criterion {
            id: 9,
            name: "Monte-Carlo means",
            limit: Duration::from_secs(120),
            run: c9_monte_carlo,
        },
        Criterion {
            id: 10,
            name: "simulator conservation",
            limit: Duration::from_secs(600),
            run: c10_simulator,
        },
    ];
    let only: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failures = 0;
    for c in criteria
        .iter()
        .filter(|c| only.is_empty() || only.contains(&c.id))
    {
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= c.limit => (true, d),
            Ok(d) => (false, format!("{d}; over the {:?} limit", c.limit)),
            Err(d) => (false, d),
        };
        if !ok {
            failures += 1;
        }
        println!(
            "criterion {:>2} {:<28} {} {:>8.2}s  {detail}",
            c.id,
            c.name,
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
