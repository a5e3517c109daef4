//! Box-plus-budget demand uncertainty sets, their discrete points and
//! vertices, and Monte-Carlo scenario sampling.

use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Discrete, DiscreteCDF};

use crate::error::{Error, Result};
use crate::instance::{read_json, write_json, Instance};

/// Cap on the number of box points visited by discrete enumeration.
pub const DISCRETE_POINT_CAP: u128 = 10_000_000;
/// Draws allowed per scenario before uniform rejection sampling gives up.
pub const REJECTION_CAP: usize = 10_000;
const VERTEX_LOCATION_CAP: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Walkin,
    Online,
}

/// Bounds for one channel, indexed `[t][location]` and `[t]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelBounds {
    pub lower: Vec<Vec<u32>>,
    pub upper: Vec<Vec<u32>>,
    pub budget_lower: Vec<u32>,
    pub budget_upper: Vec<u32>,
}

impl ChannelBounds {
    /// Bounds whose only point is zero demand.
    pub fn zero(periods: usize, width: usize) -> Self {
        Self {
            lower: vec![vec![0; width]; periods],
            upper: vec![vec![0; width]; periods],
            budget_lower: vec![0; periods],
            budget_upper: vec![0; periods],
        }
    }

    /// The same box and budget in every period.
    pub fn uniform(periods: usize, lower: &[u32], upper: &[u32], budget: (u32, u32)) -> Self {
        Self {
            lower: vec![lower.to_vec(); periods],
            upper: vec![upper.to_vec(); periods],
            budget_lower: vec![budget.0; periods],
            budget_upper: vec![budget.1; periods],
        }
    }

    pub fn periods(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self) -> usize {
        self.lower.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintySet {
    pub walkin: ChannelBounds,
    pub online: ChannelBounds,
}

/// One demand realization: `walkin[t][l]`, `online[t][z]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandScenario {
    pub walkin: Vec<Vec<f64>>,
    pub online: Vec<Vec<f64>>,
}

impl DemandScenario {
    pub fn zeros(periods: usize, nodes: usize, zones: usize) -> Self {
        Self {
            walkin: vec![vec![0.0; nodes]; periods],
            online: vec![vec![0.0; zones]; periods],
        }
    }

    pub fn channel(&self, c: Channel) -> &Vec<Vec<f64>> {
        match c {
            Channel::Walkin => &self.walkin,
            Channel::Online => &self.online,
        }
    }

    pub fn channel_mut(&mut self, c: Channel) -> &mut Vec<Vec<f64>> {
        match c {
            Channel::Walkin => &mut self.walkin,
            Channel::Online => &mut self.online,
        }
    }
}

/// Mean demand per cell, same layout as [`DemandScenario`].
pub type MeanDemand = DemandScenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleFamily {
    Poisson,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBatch {
    pub seed: u64,
    pub family: SampleFamily,
    pub scenarios: Vec<DemandScenario>,
}

impl UncertaintySet {
    pub fn channel(&self, c: Channel) -> &ChannelBounds {
        match c {
            Channel::Walkin => &self.walkin,
            Channel::Online => &self.online,
        }
    }

    pub fn periods(&self) -> usize {
        self.walkin.periods()
    }

    /// Dimension and ordering checks: `lower <= upper`, and the budget is
    /// reachable from the box.
    pub fn check(&self) -> Result<()> {
        for c in [Channel::Walkin, Channel::Online] {
            let b = self.channel(c);
            let t = b.periods();
            if b.upper.len() != t || b.budget_lower.len() != t || b.budget_upper.len() != t {
                return Err(Error::Dimension(format!(
                    "{c:?} bounds have inconsistent period counts"
                )));
            }
            let w = b.width();
            for p in 0..t {
                if b.lower[p].len() != w || b.upper[p].len() != w {
                    return Err(Error::Dimension(format!(
                        "{c:?} bounds in period {p} have ragged widths"
                    )));
                }
                for k in 0..w {
                    if b.lower[p][k] > b.upper[p][k] {
                        return Err(Error::InvalidArgument(format!(
                            "{c:?} period {p} cell {k}: lower {} above upper {}",
                            b.lower[p][k], b.upper[p][k]
                        )));
                    }
                }
                let lo: u64 = b.lower[p].iter().map(|&v| v as u64).sum();
                let hi: u64 = b.upper[p].iter().map(|&v| v as u64).sum();
                if b.budget_lower[p] > b.budget_upper[p]
                    || lo > b.budget_upper[p] as u64
                    || hi < b.budget_lower[p] as u64
                {
                    return Err(Error::InvalidArgument(format!(
                        "{c:?} period {p}: empty box/budget intersection"
                    )));
                }
            }
        }
        if self.walkin.periods() != self.online.periods() {
            return Err(Error::Dimension(
                "walk-in and online period counts differ".into(),
            ));
        }
        Ok(())
    }

    pub fn check_against(&self, inst: &Instance) -> Result<()> {
        self.check()?;
        if self.periods() != inst.horizon
            || self.walkin.width() != inst.num_nodes()
            || self.online.width() != inst.num_zones()
        {
            return Err(Error::Dimension(format!(
                "uncertainty set is {}x{}/{} but instance is {}x{}/{}",
                self.periods(),
                self.walkin.width(),
                self.online.width(),
                inst.horizon,
                inst.num_nodes(),
                inst.num_zones()
            )));
        }
        Ok(())
    }

    /// Scenario at the box lower bounds, raised in index order until each
    /// budget lower bound holds.
    pub fn lower_point(&self) -> DemandScenario {
        let fill = |b: &ChannelBounds| -> Vec<Vec<f64>> {
            (0..b.periods())
                .map(|t| {
                    let mut v: Vec<u32> = b.lower[t].clone();
                    let mut total: u32 = v.iter().sum();
                    for k in 0..v.len() {
                        if total >= b.budget_lower[t] {
                            break;
                        }
                        let add = (b.upper[t][k] - v[k]).min(b.budget_lower[t] - total);
                        v[k] += add;
                        total += add;
                    }
                    v.into_iter().map(f64::from).collect()
                })
                .collect()
        };
        DemandScenario {
            walkin: fill(&self.walkin),
            online: fill(&self.online),
        }
    }

    /// Scenario at the box upper bounds, lowered from the last index until
    /// each budget upper bound holds.
    pub fn upper_point(&self) -> DemandScenario {
        let fill = |b: &ChannelBounds| -> Vec<Vec<f64>> {
            (0..b.periods())
                .map(|t| {
                    let mut v: Vec<u32> = b.upper[t].clone();
                    let mut total: u32 = v.iter().sum();
                    for k in (0..v.len()).rev() {
                        if total <= b.budget_upper[t] {
                            break;
                        }
                        let cut = (v[k] - b.lower[t][k]).min(total - b.budget_upper[t]);
                        v[k] -= cut;
                        total -= cut;
                    }
                    v.into_iter().map(f64::from).collect()
                })
                .collect()
        };
        DemandScenario {
            walkin: fill(&self.walkin),
            online: fill(&self.online),
        }
    }

    /// Largest total demand over the horizon, both channels.
    pub fn max_total_demand(&self) -> f64 {
        let side = |b: &ChannelBounds| -> f64 {
            (0..b.periods())
                .map(|t| {
                    let hi: u64 = b.upper[t].iter().map(|&v| v as u64).sum();
                    hi.min(b.budget_upper[t] as u64) as f64
                })
                .sum()
        };
        side(&self.walkin) + side(&self.online)
    }
}

pub fn load_uncertainty_set(path: impl AsRef<Path>) -> Result<UncertaintySet> {
    let set: UncertaintySet = read_json(path.as_ref())?;
    set.check()?;
    Ok(set)
}

pub fn save_uncertainty_set(set: &UncertaintySet, path: impl AsRef<Path>) -> Result<()> {
    write_json(set, path.as_ref())
}

/// Mean demand file, same layout as a scenario.
pub fn load_means(path: impl AsRef<Path>) -> Result<MeanDemand> {
    let means: MeanDemand = read_json(path.as_ref())?;
    let cells = means.walkin.iter().chain(&means.online).flatten();
    if cells.clone().any(|&m| !(m >= 0.0) || !m.is_finite()) {
        return Err(Error::InvalidArgument(
            "means must be finite and nonnegative".into(),
        ));
    }
    Ok(means)
}

pub fn load_scenarios(path: impl AsRef<Path>) -> Result<ScenarioBatch> {
    read_json(path.as_ref())
}

pub fn save_scenarios(batch: &ScenarioBatch, path: impl AsRef<Path>) -> Result<()> {
    write_json(batch, path.as_ref())
}

const MEMBERSHIP_TOL: f64 = 1e-9;

/// Whether `scenario` satisfies every box and budget inequality of `set`.
pub fn contains(set: &UncertaintySet, scenario: &DemandScenario) -> Result<bool> {
    for c in [Channel::Walkin, Channel::Online] {
        let b = set.channel(c);
        let d = scenario.channel(c);
        if d.len() != b.periods() {
            return Err(Error::Dimension(format!(
                "{c:?}: scenario has {} periods, set has {}",
                d.len(),
                b.periods()
            )));
        }
        for (t, row) in d.iter().enumerate() {
            if row.len() != b.width() {
                return Err(Error::Dimension(format!(
                    "{c:?} period {t}: scenario width {} vs {}",
                    row.len(),
                    b.width()
                )));
            }
            let mut total = 0.0;
            for (k, &v) in row.iter().enumerate() {
                if v < b.lower[t][k] as f64 - MEMBERSHIP_TOL
                    || v > b.upper[t][k] as f64 + MEMBERSHIP_TOL
                {
                    return Ok(false);
                }
                total += v;
            }
            if total < b.budget_lower[t] as f64 - MEMBERSHIP_TOL
                || total > b.budget_upper[t] as f64 + MEMBERSHIP_TOL
            {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Integral points of one channel-period in lexicographic order.
pub fn enumerate_discrete_points(
    set: &UncertaintySet,
    channel: Channel,
    period: usize,
) -> Result<Vec<Vec<u32>>> {
    let b = set.channel(channel);
    if period >= b.periods() {
        return Err(Error::Dimension(format!("period {period} out of range")));
    }
    let lo = &b.lower[period];
    let hi = &b.upper[period];
    let size: u128 = lo
        .iter()
        .zip(hi)
        .try_fold(1u128, |acc, (&l, &h)| acc.checked_mul((h - l) as u128 + 1))
        .unwrap_or(u128::MAX);
    if size > DISCRETE_POINT_CAP {
        return Err(Error::CapExceeded {
            what: format!("{channel:?} period {period} box"),
            size,
            cap: DISCRETE_POINT_CAP,
        });
    }
    let (bl, bu) = (b.budget_lower[period], b.budget_upper[period]);
    let n = lo.len();
    let mut out = Vec::new();
    let mut cur = lo.clone();
    // suffix sums of lower/upper bounds for pruning
    let mut suf_lo = vec![0u32; n + 1];
    let mut suf_hi = vec![0u32; n + 1];
    for k in (0..n).rev() {
        suf_lo[k] = suf_lo[k + 1] + lo[k];
        suf_hi[k] = suf_hi[k + 1] + hi[k];
    }
    fn rec(
        k: usize,
        sum: u32,
        cur: &mut Vec<u32>,
        lo: &[u32],
        hi: &[u32],
        suf_lo: &[u32],
        suf_hi: &[u32],
        bl: u32,
        bu: u32,
        out: &mut Vec<Vec<u32>>,
    ) {
        if k == cur.len() {
            if sum >= bl && sum <= bu {
                out.push(cur.clone());
            }
            return;
        }
        for v in lo[k]..=hi[k] {
            let s = sum + v;
            if s + suf_lo[k + 1] > bu {
                break;
            }
            if s + suf_hi[k + 1] < bl {
                continue;
            }
            cur[k] = v;
            rec(k + 1, s, cur, lo, hi, suf_lo, suf_hi, bl, bu, out);
        }
        cur[k] = lo[k];
    }
    rec(0, 0, &mut cur, lo, hi, &suf_lo, &suf_hi, bl, bu, &mut out);
    Ok(out)
}

fn rat(v: u32) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Solve a square rational system; `None` when singular.
fn solve_exact(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].recip();
        for k in col..n {
            a[col][k] = &a[col][k] * &inv;
        }
        b[col] = &b[col] * &inv;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for k in col..n {
                    let v = &a[col][k] * &f;
                    a[r][k] -= v;
                }
                let v = &b[col] * &f;
                b[r] -= v;
            }
        }
    }
    Some(b)
}

/// Extreme points of one channel-period polytope, computed exactly by basis
/// enumeration over the `2n + 2` defining inequalities.
pub fn enumerate_vertices(
    set: &UncertaintySet,
    channel: Channel,
    period: usize,
) -> Result<Vec<Vec<BigRational>>> {
    let b = set.channel(channel);
    if period >= b.periods() {
        return Err(Error::Dimension(format!("period {period} out of range")));
    }
    let n = b.width();
    if n > VERTEX_LOCATION_CAP {
        return Err(Error::CapExceeded {
            what: format!("vertex enumeration over {n} locations"),
            size: n as u128,
            cap: VERTEX_LOCATION_CAP as u128,
        });
    }
    let lo = &b.lower[period];
    let hi = &b.upper[period];
    // Inequalities as (coefficients, rhs) meaning a.x <= rhs.
    let mut rows: Vec<(Vec<BigRational>, BigRational)> = Vec::new();
    for k in 0..n {
        let mut a = vec![BigRational::zero(); n];
        a[k] = -BigRational::one();
        rows.push((a.clone(), -rat(lo[k])));
        a[k] = BigRational::one();
        rows.push((a, rat(hi[k])));
    }
    rows.push((vec![-BigRational::one(); n], -rat(b.budget_lower[period])));
    rows.push((vec![BigRational::one(); n], rat(b.budget_upper[period])));

    let feasible = |x: &[BigRational]| {
        rows.iter()
            .all(|(a, r)| a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<BigRational>() <= *r)
    };

    let mut out: Vec<Vec<BigRational>> = Vec::new();
    if n == 0 {
        if feasible(&[]) {
            out.push(vec![]);
        }
        return Ok(out);
    }
    let m = rows.len();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a: Vec<Vec<BigRational>> = idx.iter().map(|&i| rows[i].0.clone()).collect();
        let r: Vec<BigRational> = idx.iter().map(|&i| rows[i].1.clone()).collect();
        if let Some(x) = solve_exact(a, r) {
            if feasible(&x) && !out.contains(&x) {
                out.push(x);
            }
        }
        // next combination
        let mut k = n;
        loop {
            if k == 0 {
                out.sort();
                return Ok(out);
            }
            k -= 1;
            if idx[k] < m - n + k {
                idx[k] += 1;
                for j in k + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

pub fn is_integral(v: &[BigRational]) -> bool {
    v.iter().all(|x| x.is_integer())
}

pub fn to_f64(v: &[BigRational]) -> Vec<f64> {
    v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
}

fn scenario_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn poisson_draw(rng: &mut ChaCha8Rng, mean: f64) -> Result<f64> {
    if mean < 0.0 || !mean.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "negative or non-finite mean {mean}"
        )));
    }
    if mean == 0.0 {
        return Ok(0.0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(d.sample(rng))
}

/// Independent Poisson draws per cell; not truncated to any set.
pub fn sample_poisson(means: &MeanDemand, count: usize, seed: u64) -> Result<Vec<DemandScenario>> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "scenario count must be at least 1".into(),
        ));
    }
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = scenario_rng(seed, i);
            let mut s = means.clone();
            for c in [Channel::Walkin, Channel::Online] {
                for row in s.channel_mut(c) {
                    for v in row.iter_mut() {
                        *v = poisson_draw(&mut rng, *v)?;
                    }
                }
            }
            Ok(s)
        })
        .collect()
}

/// Integer-uniform draws on each box, resampled per channel-period until the
/// budget holds.
pub fn sample_uniform(
    set: &UncertaintySet,
    count: usize,
    seed: u64,
) -> Result<Vec<DemandScenario>> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "scenario count must be at least 1".into(),
        ));
    }
    set.check()?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = scenario_rng(seed, i);
            let mut s =
                DemandScenario::zeros(set.periods(), set.walkin.width(), set.online.width());
            for c in [Channel::Walkin, Channel::Online] {
                let b = set.channel(c);
                for t in 0..b.periods() {
                    let mut attempts = 0;
                    loop {
                        attempts += 1;
                        if attempts > REJECTION_CAP {
                            return Err(Error::RejectionCap {
                                attempts: REJECTION_CAP,
                                detail: format!(
                                    "{c:?} period {t} budget [{}, {}]",
                                    b.budget_lower[t], b.budget_upper[t]
                                ),
                            });
                        }
                        let draw: Vec<u32> = (0..b.width())
                            .map(|k| rng.random_range(b.lower[t][k]..=b.upper[t][k]))
                            .collect();
                        let total: u32 = draw.iter().sum();
                        if total >= b.budget_lower[t] && total <= b.budget_upper[t] {
                            s.channel_mut(c)[t] = draw.into_iter().map(f64::from).collect();
                            break;
                        }
                    }
                }
            }
            Ok(s)
        })
        .collect()
}

pub fn sample_scenarios(
    means: &MeanDemand,
    set: &UncertaintySet,
    count: usize,
    seed: u64,
    family: SampleFamily,
) -> Result<ScenarioBatch> {
    let scenarios = match family {
        SampleFamily::Poisson => sample_poisson(means, count, seed)?,
        SampleFamily::Uniform => sample_uniform(set, count, seed)?,
    };
    Ok(ScenarioBatch {
        seed,
        family,
        scenarios,
    })
}

/// Every combination of per-channel-period vertices, in the scenario layout.
/// A concave function of demand attains its minimum over the set at one of
/// these.
pub fn enumerate_vertex_scenarios(set: &UncertaintySet) -> Result<Vec<DemandScenario>> {
    set.check()?;
    let periods = set.periods();
    let mut blocks = Vec::new();
    let mut size: u128 = 1;
    for c in [Channel::Walkin, Channel::Online] {
        for t in 0..periods {
            let pts: Vec<Vec<f64>> = enumerate_vertices(set, c, t)?
                .iter()
                .map(|v| to_f64(v))
                .collect();
            size = size.saturating_mul(pts.len() as u128);
            blocks.push((c, t, pts));
        }
    }
    if size > DISCRETE_POINT_CAP {
        return Err(Error::CapExceeded {
            what: "vertex scenarios".into(),
            size,
            cap: DISCRETE_POINT_CAP,
        });
    }
    let mut out = vec![DemandScenario::zeros(
        periods,
        set.walkin.width(),
        set.online.width(),
    )];
    for (c, t, pts) in &blocks {
        out = out
            .iter()
            .flat_map(|s| {
                pts.iter().map(move |p| {
                    let mut s = s.clone();
                    s.channel_mut(*c)[*t] = p.clone();
                    s
                })
            })
            .collect();
    }
    Ok(out)
}

/// Smallest `k` with `P(X <= k) >= q` for `X ~ Poisson(mean)`.
pub fn poisson_quantile(mean: f64, q: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    let d = statrs::distribution::Poisson::new(mean).expect("positive mean");
    let mut k: u64 = 0;
    let mut cdf = d.pmf(0);
    while cdf < q {
        k += 1;
        cdf = d.cdf(k);
    }
    k as u32
}

/// Box bounds from per-cell Poisson quantiles; budgets from the quantiles of
/// the summed mean per channel-period.
pub fn quantile_bounds_from_means(
    means: &MeanDemand,
    lower_q: f64,
    upper_q: f64,
) -> Result<UncertaintySet> {
    if !(0.0..=1.0).contains(&lower_q) || !(0.0..=1.0).contains(&upper_q) || lower_q > upper_q {
        return Err(Error::InvalidArgument(format!(
            "quantiles {lower_q}, {upper_q}"
        )));
    }
    let side = |rows: &Vec<Vec<f64>>| -> Result<ChannelBounds> {
        let mut b = ChannelBounds {
            lower: vec![],
            upper: vec![],
            budget_lower: vec![],
            budget_upper: vec![],
        };
        for row in rows {
            if row.iter().any(|&m| !(m >= 0.0)) {
                return Err(Error::InvalidArgument("means must be nonnegative".into()));
            }
            b.lower
                .push(row.iter().map(|&m| poisson_quantile(m, lower_q)).collect());
            b.upper
                .push(row.iter().map(|&m| poisson_quantile(m, upper_q)).collect());
            let total: f64 = row.iter().sum();
            b.budget_lower.push(poisson_quantile(total, lower_q));
            b.budget_upper.push(poisson_quantile(total, upper_q));
        }
        Ok(b)
    };
    Ok(UncertaintySet {
        walkin: side(&means.walkin)?,
        online: side(&means.online)?,
    })
}
