use super::*;
use proptest::prelude::*;

fn lp(sense: ObjectiveSense) -> LinearModel {
    LinearModel::new(sense)
}

#[test]
fn bounded_max() {
    let mut m = lp(ObjectiveSense::Maximize);
    let x = m.continuous("x", 0.0, f64::INFINITY);
    m.set_objective_coeff(x, 1.0);
    m.add_constraint("c", vec![(x, 1.0)], Sense::Le, 3.0);
    let s = solve(&m).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!((s.objective - 3.0).abs() < 1e-9);
    assert!((s.duals[0] - 1.0).abs() < 1e-9);
}

#[test]
fn infeasible_row() {
    let mut m = lp(ObjectiveSense::Minimize);
    let x = m.continuous("x", 0.0, f64::INFINITY);
    m.add_constraint("c", vec![(x, 1.0)], Sense::Le, -1.0);
    assert_eq!(solve(&m).unwrap().status, Status::Infeasible);
}

#[test]
fn unbounded_detected() {
    let mut m = lp(ObjectiveSense::Maximize);
    let x = m.continuous("x", 0.0, f64::INFINITY);
    let y = m.continuous("y", 0.0, f64::INFINITY);
    m.set_objective_coeff(x, 1.0);
    m.add_constraint("c", vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
    assert_eq!(solve(&m).unwrap().status, Status::Unbounded);
}

#[test]
fn equality_and_ge_rows() {
    // min x + 2y  s.t. x + y = 4, x - y >= 1, x <= 3
    let mut m = lp(ObjectiveSense::Minimize);
    let x = m.continuous("x", 0.0, 3.0);
    let y = m.continuous("y", 0.0, f64::INFINITY);
    m.set_objective_coeff(x, 1.0);
    m.set_objective_coeff(y, 2.0);
    m.add_constraint("e", vec![(x, 1.0), (y, 1.0)], Sense::Eq, 4.0);
    m.add_constraint("g", vec![(x, 1.0), (y, -1.0)], Sense::Ge, 1.0);
    let s = solve(&m).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!((s.objective - 5.0).abs() < 1e-9, "{}", s.objective);
    assert!((s.value(x) - 3.0).abs() < 1e-9);
    // raising the equality rhs by one costs 2 (y absorbs it)
    assert!((s.duals[0] - 2.0).abs() < 1e-9, "{:?}", s.duals);
}

#[test]
fn free_variable() {
    let mut m = lp(ObjectiveSense::Minimize);
    let x = m.continuous("x", f64::NEG_INFINITY, f64::INFINITY);
    m.set_objective_coeff(x, 1.0);
    m.add_constraint("c", vec![(x, 1.0)], Sense::Ge, -2.5);
    let s = solve(&m).unwrap();
    assert!((s.objective + 2.5).abs() < 1e-9);
}

#[test]
fn binary_knapsack() {
    let mut m = lp(ObjectiveSense::Maximize);
    let a = m.binary("a");
    let b = m.binary("b");
    m.set_objective_coeff(a, 1.0);
    m.set_objective_coeff(b, 1.0);
    m.add_constraint("cap", vec![(a, 2.0), (b, 2.0)], Sense::Le, 3.0);
    let s = solve(&m).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!((s.objective - 1.0).abs() < 1e-9);
}

#[test]
fn general_integer_rounding() {
    // max 3x + 2y, 2x + 2y <= 7, x <= 2.5, integers
    let mut m = lp(ObjectiveSense::Maximize);
    let x = m.add_var("x", 0.0, 2.5, VarKind::Integer);
    let y = m.add_var("y", 0.0, 10.0, VarKind::Integer);
    m.set_objective_coeff(x, 3.0);
    m.set_objective_coeff(y, 2.0);
    m.add_constraint("c", vec![(x, 2.0), (y, 2.0)], Sense::Le, 7.0);
    let s = solve(&m).unwrap();
    assert!((s.objective - 8.0).abs() < 1e-9, "{}", s.objective);
}

#[test]
fn incumbent_injection_is_kept_when_optimal() {
    let mut m = lp(ObjectiveSense::Maximize);
    let a = m.binary("a");
    m.set_objective_coeff(a, 1.0);
    let opts = SolveOptions {
        incumbent: Some(vec![1.0]),
        ..Default::default()
    };
    let s = solve_with(&m, &opts).unwrap();
    assert_eq!(s.value(a), 1.0);
}

#[test]
fn lp_dump_mentions_all_parts() {
    let mut m = lp(ObjectiveSense::Minimize);
    let x = m.add_var("x", 0.0, 4.0, VarKind::Integer);
    m.set_objective_coeff(x, 1.0);
    m.add_constraint("r", vec![(x, 1.0)], Sense::Ge, 1.0);
    let s = lp_format::to_lp_string(&m);
    for part in ["Minimize", "Subject To", "Bounds", "General", "End"] {
        assert!(s.contains(part));
    }
}

/// Exhaustive search over a small pure-integer box.
fn brute_force(m: &LinearModel) -> Option<f64> {
    let n = m.num_vars();
    let ranges: Vec<(i64, i64)> = m
        .variables
        .iter()
        .map(|v| (v.lower.ceil() as i64, v.upper.floor() as i64))
        .collect();
    let mut best: Option<f64> = None;
    let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        let vals: Vec<f64> = cur.iter().map(|&v| v as f64).collect();
        if m.max_violation(&vals) <= 1e-9 {
            let o = m.evaluate(&vals);
            best = Some(best.map_or(o, |b: f64| b.max(o)));
        }
        let mut k = 0;
        loop {
            if k == n {
                return best;
            }
            cur[k] += 1;
            if cur[k] <= ranges[k].1 {
                break;
            }
            cur[k] = ranges[k].0;
            k += 1;
        }
    }
}

fn random_model(
    obj: Vec<i32>,
    rows: Vec<(Vec<i32>, i32, u8)>,
    ub: Vec<u8>,
    integer: bool,
) -> LinearModel {
    let mut m = lp(ObjectiveSense::Maximize);
    let kind = if integer {
        VarKind::Integer
    } else {
        VarKind::Continuous
    };
    let vars: Vec<VarId> = ub
        .iter()
        .enumerate()
        .map(|(j, &u)| m.add_var(format!("x{j}"), 0.0, u as f64, kind))
        .collect();
    for (v, &c) in vars.iter().zip(&obj) {
        m.set_objective_coeff(*v, c as f64);
    }
    for (i, (coeffs, rhs, s)) in rows.into_iter().enumerate() {
        let sense = match s % 3 {
            0 => Sense::Le,
            1 => Sense::Ge,
            _ => Sense::Eq,
        };
        let terms = vars
            .iter()
            .zip(&coeffs)
            .map(|(v, &a)| (*v, a as f64))
            .collect();
        m.add_constraint(format!("r{i}"), terms, sense, rhs as f64);
    }
    m
}

fn model_strategy(integer: bool) -> impl Strategy<Value = LinearModel> {
    (2usize..=4).prop_flat_map(move |n| {
        (
            prop::collection::vec(-5i32..=5, n),
            prop::collection::vec(
                (prop::collection::vec(-4i32..=4, n), -6i32..=12, 0u8..6),
                1..=4,
            ),
            prop::collection::vec(0u8..=4, n),
        )
            .prop_map(move |(o, r, u)| random_model(o, r, u, integer))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn mip_matches_enumeration(m in model_strategy(true)) {
        let s = solve(&m).unwrap();
        match brute_force(&m) {
            None => prop_assert_eq!(s.status, Status::Infeasible),
            Some(best) => {
                prop_assert_eq!(s.status, Status::Optimal);
                prop_assert!((s.objective - best).abs() <= 1e-6 * best.abs().max(1.0),
                    "bb {} brute {}", s.objective, best);
                prop_assert!(m.max_violation(&s.values) <= 1e-6);
            }
        }
    }

    #[test]
    fn lp_bounds_mip_and_satisfies_duality(m in model_strategy(false)) {
        let s = solve(&m).unwrap();
        if s.status == Status::Optimal {
            prop_assert!(m.max_violation(&s.values) <= 1e-7);
            // dual objective: b'pi + sum over variables of bound terms equals primal
            let mut reduced: Vec<f64> = vec![0.0; m.num_vars()];
            for &(v, c) in &m.objective { reduced[v.0] += c; }
            for (row, pi) in m.constraints.iter().zip(&s.duals) {
                for &(v, a) in &row.coeffs { reduced[v.0] -= pi * a; }
                // sign feasibility for a maximization
                match row.sense {
                    Sense::Le => prop_assert!(*pi >= -1e-7),
                    Sense::Ge => prop_assert!(*pi <= 1e-7),
                    Sense::Eq => {}
                }
            }
            let mut dual_obj: f64 = m.constraints.iter().zip(&s.duals).map(|(r, pi)| r.rhs * pi).sum();
            for (j, v) in m.variables.iter().enumerate() {
                let r = reduced[j];
                dual_obj += if r > 0.0 { r * v.upper } else { r * v.lower };
            }
            prop_assert!((dual_obj - s.objective).abs() <= 1e-6 * s.objective.abs().max(1.0),
                "dual {} primal {}", dual_obj, s.objective);
            let mut int_model = m.clone();
            for v in &mut int_model.variables { v.kind = VarKind::Integer; }
            if let Some(best) = brute_force(&int_model) {
                prop_assert!(s.objective >= best - 1e-7);
            }
        }
    }
}
