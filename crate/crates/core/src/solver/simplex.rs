//! Dense bounded-variable simplex.
//!
//! The tableau keeps `B^-1 A` explicitly together with the basic values and
//! reduced costs. Every row gets a slack column with coefficient +1 whose
//! bounds encode the row sense (`<=`: `[0, inf)`, `>=`: `(-inf, 0]`, `=`:
//! `[0, 0]`), so the initial basis is the identity. Rows whose slack would
//! start out of bounds receive an artificial column and are handled by a
//! phase-one pass.
//!
//! The tableau is `Clone` so branch-and-bound can re-optimize children from a
//! parent's final basis with the dual simplex.

use super::model::{LinearModel, ObjectiveSense, Sense};

pub(crate) const PIVOT_TOL: f64 = 1e-9;
pub(crate) const OPT_TOL: f64 = 1e-9;
pub(crate) const FEAS_TOL: f64 = 1e-9;
const ZERO_TOL: f64 = 1e-13;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_SWITCH: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pos {
    Basic(usize),
    Lower,
    Upper,
    /// Free nonbasic variable sitting at zero.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct Tableau {
    m: usize,
    n: usize,
    n_struct: usize,
    a: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<Pos>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    /// Phase-two costs, always in minimization form.
    cost: Vec<f64>,
    d: Vec<f64>,
    /// Original rows (structural part) for recomputing basic values.
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    /// Column of the artificial attached to each row, if any.
    artificial: Vec<Option<usize>>,
    /// Sign applied to each stored row (-1 only for artificial rows whose
    /// slack started below its lower bound).
    row_sign: Vec<f64>,
    bland: bool,
    degenerate_run: usize,
    pub(crate) iterations: usize,
    iteration_cap: usize,
}

impl Tableau {
    pub(crate) fn new(model: &LinearModel) -> Self {
        let m = model.constraints.len();
        let n_struct = model.variables.len();
        let sign = match model.sense {
            ObjectiveSense::Minimize => 1.0,
            ObjectiveSense::Maximize => -1.0,
        };

        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for c in &model.constraints {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(c.coeffs.len());
            for &(v, a) in &c.coeffs {
                if a == 0.0 {
                    continue;
                }
                if let Some(e) = row.iter_mut().find(|e| e.0 == v.0) {
                    e.1 += a;
                } else {
                    row.push((v.0, a));
                }
            }
            rows.push(row);
            rhs.push(c.rhs);
        }

        let mut lb: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
        let mut ub: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
        for c in &model.constraints {
            let (l, u) = match c.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lb.push(l);
            ub.push(u);
        }

        let mut pos: Vec<Pos> = Vec::with_capacity(n_struct + m);
        for j in 0..n_struct {
            pos.push(initial_pos(lb[j], ub[j]));
        }
        let value = |j: usize, p: Pos, lb: &[f64], ub: &[f64]| match p {
            Pos::Lower => lb[j],
            Pos::Upper => ub[j],
            _ => 0.0,
        };

        // Slack values with structurals at their starting bounds.
        let mut slack_val = vec![0.0; m];
        for i in 0..m {
            let mut s = rhs[i];
            for &(j, a) in &rows[i] {
                s -= a * value(j, pos[j], &lb, &ub);
            }
            slack_val[i] = s;
        }

        // Decide which rows need artificials.
        let mut artificial = vec![None; m];
        let mut row_sign = vec![1.0; m];
        let mut n = n_struct + m;
        let mut art_value = vec![0.0; m];
        for i in 0..m {
            let k = n_struct + i;
            let s = slack_val[i];
            if s > ub[k] + FEAS_TOL {
                row_sign[i] = 1.0;
                art_value[i] = s - ub[k];
                artificial[i] = Some(n);
                n += 1;
            } else if s < lb[k] - FEAS_TOL {
                row_sign[i] = -1.0;
                art_value[i] = lb[k] - s;
                artificial[i] = Some(n);
                n += 1;
            }
        }
        for i in 0..m {
            if artificial[i].is_some() {
                pos.push(if row_sign[i] > 0.0 {
                    Pos::Upper
                } else {
                    Pos::Lower
                });
            } else {
                pos.push(Pos::Basic(i));
            }
        }
        for i in 0..m {
            if artificial[i].is_some() {
                lb.push(0.0);
                ub.push(f64::INFINITY);
                pos.push(Pos::Basic(i));
            }
        }

        let mut a = vec![0.0; m * n];
        let mut basis = vec![0; m];
        let mut beta = vec![0.0; m];
        for i in 0..m {
            // Artificial rows are stored multiplied by the row sign so that the
            // artificial has coefficient +1.
            let sgn = if artificial[i].is_some() {
                row_sign[i]
            } else {
                1.0
            };
            let row = &mut a[i * n..(i + 1) * n];
            for &(j, v) in &rows[i] {
                row[j] = sgn * v;
            }
            row[n_struct + i] = sgn;
            if let Some(col) = artificial[i] {
                row[col] = 1.0;
                basis[i] = col;
                beta[i] = art_value[i];
            } else {
                basis[i] = n_struct + i;
                beta[i] = slack_val[i];
            }
        }

        let mut cost = vec![0.0; n];
        for &(v, c) in &model.objective {
            cost[v.0] += sign * c;
        }

        Self {
            m,
            n,
            n_struct,
            a,
            beta,
            basis,
            pos,
            lb,
            ub,
            cost,
            d: vec![0.0; n],
            rows,
            rhs,
            artificial,
            row_sign,
            bland: false,
            degenerate_run: 0,
            iterations: 0,
            iteration_cap: 20_000 + 50 * (n + m),
        }
    }

    fn has_artificials(&self) -> bool {
        self.artificial.iter().any(|a| a.is_some())
    }

    #[inline]
    fn value(&self, j: usize) -> f64 {
        match self.pos[j] {
            Pos::Basic(r) => self.beta[r],
            Pos::Lower => self.lb[j],
            Pos::Upper => self.ub[j],
            Pos::Zero => 0.0,
        }
    }

    fn compute_reduced_costs(&mut self, costs: &[f64]) {
        let n = self.n;
        self.d.copy_from_slice(costs);
        for i in 0..self.m {
            let cb = costs[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.a[i * n..(i + 1) * n];
            for (dj, &aij) in self.d.iter_mut().zip(row) {
                *dj -= cb * aij;
            }
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
    }

    /// Recompute basic values from the nonbasic ones through the slack
    /// columns of the tableau (which hold `B^-1` up to row signs).
    fn recompute_basic_values(&mut self) {
        let m = self.m;
        let mut r = vec![0.0; m];
        for i in 0..m {
            let mut s = self.rhs[i];
            for &(j, a) in &self.rows[i] {
                if !matches!(self.pos[j], Pos::Basic(_)) {
                    s -= a * self.value(j);
                }
            }
            let slack = self.n_struct + i;
            if !matches!(self.pos[slack], Pos::Basic(_)) {
                s -= self.value(slack);
            }
            if let Some(col) = self.artificial[i] {
                if !matches!(self.pos[col], Pos::Basic(_)) {
                    // artificial coefficient in the unsigned row equals the row sign,
                    // which equals the stored slack coefficient
                    let sgn = self.a_slack_sign(i);
                    s -= sgn * self.value(col);
                }
            }
            r[i] = s;
        }
        // B^-1 e_i = T[:, slack_i] / sign_i and the signed residual is sign_i * r_i.
        for k in 0..m {
            let mut v = 0.0;
            let row = &self.a[k * self.n..(k + 1) * self.n];
            for i in 0..m {
                v += row[self.n_struct + i] * r[i];
            }
            self.beta[k] = v;
        }
    }

    fn a_slack_sign(&self, i: usize) -> f64 {
        self.row_sign[i]
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.n;
        let piv = self.a[r * n + q];
        let inv = 1.0 / piv;
        {
            let row = &mut self.a[r * n..(r + 1) * n];
            for v in row.iter_mut() {
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < ZERO_TOL {
                        *v = 0.0;
                    }
                }
            }
            row[q] = 1.0;
        }
        let nz: Vec<usize> = (0..n).filter(|&k| self.a[r * n + k] != 0.0).collect();
        let pivot_row: Vec<f64> = nz.iter().map(|&k| self.a[r * n + k]).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * n + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * n..(i + 1) * n];
            for (&k, &pv) in nz.iter().zip(&pivot_row) {
                let v = row[k] - f * pv;
                row[k] = if v.abs() < ZERO_TOL { 0.0 } else { v };
            }
            row[q] = 0.0;
        }
        let f = self.d[q];
        if f != 0.0 {
            for (&k, &pv) in nz.iter().zip(&pivot_row) {
                self.d[k] -= f * pv;
            }
            self.d[q] = 0.0;
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.ub[j] - self.lb[j] <= 0.0
    }

    /// Pick an entering column. Dantzig's largest reduced cost normally,
    /// lowest index (Bland) after a run of degenerate pivots.
    fn price(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.n {
            let dj = self.d[j];
            let dir = match self.pos[j] {
                Pos::Basic(_) => continue,
                Pos::Lower => {
                    if dj < -OPT_TOL && !self.is_fixed(j) {
                        1.0
                    } else {
                        continue;
                    }
                }
                Pos::Upper => {
                    if dj > OPT_TOL && !self.is_fixed(j) {
                        -1.0
                    } else {
                        continue;
                    }
                }
                Pos::Zero => {
                    if dj.abs() > OPT_TOL {
                        -dj.signum()
                    } else {
                        continue;
                    }
                }
            };
            if self.bland {
                return Some((j, dir));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    pub(crate) fn primal(&mut self, costs: &[f64]) -> LpOutcome {
        self.compute_reduced_costs(costs);
        self.bland = false;
        self.degenerate_run = 0;
        let n = self.n;
        loop {
            if self.iterations >= self.iteration_cap {
                return LpOutcome::IterationLimit;
            }
            let Some((q, dir)) = self.price() else {
                return LpOutcome::Optimal;
            };
            self.iterations += 1;

            let mut theta = self.ub[q] - self.lb[q];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_alpha = 0.0;
            for i in 0..self.m {
                let alpha = self.a[i * n + q];
                if alpha.abs() < PIVOT_TOL {
                    continue;
                }
                let delta = -dir * alpha;
                let k = self.basis[i];
                let t = if delta < 0.0 {
                    if !self.lb[k].is_finite() {
                        continue;
                    }
                    (self.beta[i] - self.lb[k]) / (-delta)
                } else {
                    if !self.ub[k].is_finite() {
                        continue;
                    }
                    (self.ub[k] - self.beta[i]) / delta
                };
                let t = t.max(0.0);
                let take = match leave {
                    None => t < theta,
                    Some((r, _)) => {
                        t < theta - 1e-12
                            || (t <= theta + 1e-12
                                && if self.bland {
                                    k < self.basis[r]
                                } else {
                                    alpha.abs() > leave_alpha
                                })
                    }
                };
                if take {
                    theta = t;
                    leave = Some((i, delta < 0.0));
                    leave_alpha = alpha.abs();
                }
            }
            if !theta.is_finite() {
                return LpOutcome::Unbounded;
            }

            if theta <= 1e-12 {
                self.degenerate_run += 1;
                if self.degenerate_run > DEGENERATE_SWITCH {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
                self.bland = false;
            }

            if theta > 0.0 {
                for i in 0..self.m {
                    let alpha = self.a[i * n + q];
                    if alpha != 0.0 {
                        self.beta[i] -= dir * alpha * theta;
                    }
                }
            }
            match leave {
                None => {
                    self.pos[q] = if dir > 0.0 { Pos::Upper } else { Pos::Lower };
                }
                Some((r, hits_lower)) => {
                    let entering_value = self.value(q) + dir * theta;
                    let k = self.basis[r];
                    self.pos[k] = if hits_lower { Pos::Lower } else { Pos::Upper };
                    if self.lb[k] == self.ub[k] {
                        self.pos[k] = Pos::Lower;
                    }
                    self.beta[r] = entering_value;
                    self.basis[r] = q;
                    self.pos[q] = Pos::Basic(r);
                    self.pivot(r, q);
                }
            }
        }
    }

    /// Dual simplex from a dual-feasible basis.
    pub(crate) fn dual(&mut self) -> LpOutcome {
        let n = self.n;
        loop {
            if self.iterations >= self.iteration_cap {
                return LpOutcome::IterationLimit;
            }
            // leaving row: largest bound violation
            let mut leave: Option<(usize, f64)> = None;
            let mut worst = FEAS_TOL;
            for i in 0..self.m {
                let k = self.basis[i];
                let v = self.beta[i];
                let viol = (self.lb[k] - v).max(v - self.ub[k]);
                if viol > worst {
                    worst = viol;
                    let target = if v < self.lb[k] {
                        self.lb[k]
                    } else {
                        self.ub[k]
                    };
                    leave = Some((i, target));
                }
            }
            let Some((r, target)) = leave else {
                return LpOutcome::Optimal;
            };
            self.iterations += 1;
            let increase = target > self.beta[r];

            let mut enter: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            let mut best_alpha = 0.0;
            for j in 0..n {
                let alpha = self.a[r * n + j];
                if alpha.abs() < PIVOT_TOL {
                    continue;
                }
                let eligible = match self.pos[j] {
                    Pos::Basic(_) => false,
                    Pos::Lower => {
                        !self.is_fixed(j) && (if increase { alpha < 0.0 } else { alpha > 0.0 })
                    }
                    Pos::Upper => {
                        !self.is_fixed(j) && (if increase { alpha > 0.0 } else { alpha < 0.0 })
                    }
                    Pos::Zero => true,
                };
                if !eligible {
                    continue;
                }
                let ratio = self.d[j].abs() / alpha.abs();
                if ratio < best_ratio - 1e-12
                    || (ratio <= best_ratio + 1e-12 && alpha.abs() > best_alpha)
                {
                    best_ratio = ratio;
                    best_alpha = alpha.abs();
                    enter = Some(j);
                }
            }
            let Some(q) = enter else {
                return LpOutcome::Infeasible;
            };
            let alpha_rq = self.a[r * n + q];
            let step = (self.beta[r] - target) / alpha_rq;
            let entering_value = self.value(q) + step;
            for i in 0..self.m {
                let alpha = self.a[i * n + q];
                if alpha != 0.0 {
                    self.beta[i] -= alpha * step;
                }
            }
            let k = self.basis[r];
            self.pos[k] = if increase { Pos::Lower } else { Pos::Upper };
            if self.lb[k] == self.ub[k] {
                self.pos[k] = Pos::Lower;
            }
            self.beta[r] = entering_value;
            self.basis[r] = q;
            self.pos[q] = Pos::Basic(r);
            self.pivot(r, q);
        }
    }

    /// Full two-phase solve from the slack basis.
    pub(crate) fn solve_from_scratch(&mut self) -> LpOutcome {
        if self.has_artificials() {
            let mut phase1 = vec![0.0; self.n];
            for col in self.artificial.iter().flatten() {
                phase1[*col] = 1.0;
            }
            match self.primal(&phase1) {
                LpOutcome::Optimal => {}
                LpOutcome::Unbounded => return LpOutcome::Infeasible,
                other => return other,
            }
            self.recompute_basic_values();
            let infeas: f64 = self
                .artificial
                .iter()
                .flatten()
                .map(|&c| self.value(c).max(0.0))
                .sum();
            let scale = 1.0 + self.rhs.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if infeas > 1e-8 * scale {
                return LpOutcome::Infeasible;
            }
            self.retire_artificials();
        }
        self.reoptimize()
    }

    fn retire_artificials(&mut self) {
        let n = self.n;
        let cols: Vec<usize> = self.artificial.iter().flatten().copied().collect();
        for &c in &cols {
            self.lb[c] = 0.0;
            self.ub[c] = 0.0;
            match self.pos[c] {
                Pos::Basic(r) => {
                    // try to pivot it out with any non-artificial column
                    let mut best: Option<usize> = None;
                    let mut best_abs = PIVOT_TOL * 1e3;
                    for j in 0..n {
                        if matches!(self.pos[j], Pos::Basic(_)) || cols.contains(&j) {
                            continue;
                        }
                        let v = self.a[r * n + j].abs();
                        if v > best_abs {
                            best_abs = v;
                            best = Some(j);
                        }
                    }
                    if let Some(q) = best {
                        let entering_value = self.value(q);
                        self.pos[c] = Pos::Lower;
                        self.beta[r] = entering_value;
                        self.basis[r] = q;
                        self.pos[q] = Pos::Basic(r);
                        self.pivot(r, q);
                    }
                }
                _ => self.pos[c] = Pos::Lower,
            }
        }
        self.recompute_basic_values();
    }

    /// Phase-two primal iterations with cleanup of small infeasibilities.
    pub(crate) fn reoptimize(&mut self) -> LpOutcome {
        let costs = self.cost.clone();
        for _ in 0..4 {
            match self.primal(&costs) {
                LpOutcome::Optimal => {}
                other => return other,
            }
            self.recompute_basic_values();
            if self.max_basic_violation() <= 1e-9 {
                return LpOutcome::Optimal;
            }
            match self.dual() {
                LpOutcome::Optimal => {}
                other => return other,
            }
        }
        if self.max_basic_violation() <= 1e-7 {
            LpOutcome::Optimal
        } else {
            LpOutcome::IterationLimit
        }
    }

    fn max_basic_violation(&self) -> f64 {
        (0..self.m)
            .map(|i| {
                let k = self.basis[i];
                (self.lb[k] - self.beta[i])
                    .max(self.beta[i] - self.ub[k])
                    .max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// Dual simplex followed by a primal cleanup. Used after bound changes
    /// on an optimal tableau.
    pub(crate) fn resolve_after_bound_change(&mut self) -> LpOutcome {
        let costs = self.cost.clone();
        self.compute_reduced_costs(&costs);
        match self.dual() {
            LpOutcome::Optimal => {}
            other => return other,
        }
        self.reoptimize()
    }

    /// Tighten the bounds of a structural variable in place.
    pub(crate) fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        let old = self.value(j);
        self.lb[j] = lower;
        self.ub[j] = upper;
        match self.pos[j] {
            Pos::Basic(_) => {}
            _ => {
                let p = if self.pos[j] == Pos::Upper && upper.is_finite() {
                    Pos::Upper
                } else if lower.is_finite() {
                    Pos::Lower
                } else if upper.is_finite() {
                    Pos::Upper
                } else {
                    Pos::Zero
                };
                self.pos[j] = p;
                let delta = self.value(j) - old;
                if delta != 0.0 {
                    let n = self.n;
                    for i in 0..self.m {
                        let alpha = self.a[i * n + j];
                        if alpha != 0.0 {
                            self.beta[i] -= alpha * delta;
                        }
                    }
                }
            }
        }
    }

    pub(crate) fn structural_values(&self) -> Vec<f64> {
        (0..self.n_struct).map(|j| self.value(j)).collect()
    }

    /// Row duals in the caller's objective sense: the rate of change of the
    /// optimal objective per unit increase of each right-hand side.
    pub(crate) fn row_duals(&self, sense: ObjectiveSense) -> Vec<f64> {
        let costs = &self.cost;
        let mut d = costs.clone();
        for i in 0..self.m {
            let cb = costs[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.a[i * self.n..(i + 1) * self.n];
            for k in 0..self.m {
                d[self.n_struct + k] -= cb * row[self.n_struct + k];
            }
        }
        let sign = match sense {
            ObjectiveSense::Minimize => 1.0,
            ObjectiveSense::Maximize => -1.0,
        };
        (0..self.m)
            .map(|i| {
                // the stored row is sign_i times the original, so the row sign
                // cancels: pi_i = -d_slack_i
                -d[self.n_struct + i] * sign
            })
            .collect()
    }

    pub(crate) fn memory_bytes(&self) -> usize {
        self.a.len() * 8 + self.n * 40
    }
}

fn initial_pos(lb: f64, ub: f64) -> Pos {
    if lb.is_finite() {
        Pos::Lower
    } else if ub.is_finite() {
        Pos::Upper
    } else {
        Pos::Zero
    }
}
