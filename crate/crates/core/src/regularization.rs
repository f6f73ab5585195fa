//! Negligible-function calculus on sampled scalings, and exact multi-copy classical hypothesis
//! testing used as the oracle for per-copy rate estimates.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::GateBudget;
use crate::error::{Error, Result};
use crate::exact::{check_distribution, RATIO_TIE_TOL};
use crate::nats::{log_add_exp, log_sum_exp, Nats, Witness};
use crate::types::{log_class_prob, type_classes, TYPE_CLASS_CAP};

/// Estimates at or below this are negligible.
pub const NEGLIGIBLE_THRESHOLD: f64 = 0.5;
/// Log-estimates at or above this are superpolynomial on the default grid.
pub const SUPERPOLY_LOG_THRESHOLD: f64 = 25.0;

/// `2^lo, …, 2^hi`.
pub fn power_grid(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(|k| 2f64.powi(k as i32)).collect()
}

/// `2^4, …, 2^20`.
pub fn default_grid() -> Vec<f64> {
    power_grid(4, 20)
}

/// Samples of `f : N -> R`, stored as sign and `log|f|` so that `2^n` at `n = 2^20` is representable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSamples {
    grid: Vec<f64>,
    sign: Vec<i8>,
    log_abs: Vec<f64>,
}

impl ScalingSamples {
    pub fn from_log(grid: Vec<f64>, sign: Vec<i8>, log_abs: Vec<f64>) -> Result<Self> {
        if sign.len() != grid.len() || log_abs.len() != grid.len() {
            return Err(Error::DimMismatch(grid.len(), sign.len().min(log_abs.len())));
        }
        if grid.len() < 4 {
            return Err(Error::InvalidArgument(format!("grid has {} points, need at least 4", grid.len())));
        }
        if grid[0] <= 1.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("grid must be strictly increasing and above 1".into()));
        }
        let sign = sign
            .into_iter()
            .zip(&log_abs)
            .map(|(s, &l)| if l == f64::NEG_INFINITY { 0 } else { s.signum() })
            .collect();
        Ok(Self { grid, sign, log_abs })
    }

    pub fn from_values(grid: Vec<f64>, values: &[f64]) -> Result<Self> {
        let sign = values.iter().map(|v| if *v > 0.0 { 1 } else if *v < 0.0 { -1 } else { 0 }).collect();
        let log_abs = values.iter().map(|v| v.abs().ln()).collect();
        Self::from_log(grid, sign, log_abs)
    }

    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = grid.iter().map(|&n| f(n)).collect();
        Self::from_values(grid, &values)
    }

    /// `f` returns `(sign, log|value|)`.
    pub fn from_log_fn(grid: Vec<f64>, f: impl Fn(f64) -> (i8, f64)) -> Result<Self> {
        let (sign, log_abs) = grid.iter().map(|&n| f(n)).unzip();
        Self::from_log(grid, sign, log_abs)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn value(&self, i: usize) -> f64 {
        self.sign[i] as f64 * self.log_abs[i].exp()
    }

    pub fn log_abs(&self) -> &[f64] {
        &self.log_abs
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ScalingSamples) -> Result<ScalingSamples> {
        same_grid(self, other)?;
        let sign = self.sign.iter().zip(&other.sign).map(|(a, b)| a * b).collect();
        let log_abs = self.log_abs.iter().zip(&other.log_abs).map(|(a, b)| a + b).collect();
        Self::from_log(self.grid.clone(), sign, log_abs)
    }

    /// Identically zero on `grid`.
    pub fn zero(grid: Vec<f64>) -> Result<ScalingSamples> {
        let n = grid.len();
        Self::from_log(grid, vec![0; n], vec![f64::NEG_INFINITY; n])
    }

    /// `log|f(n_i) - g(n_i)|`, `-∞` on exact equality.
    fn log_abs_diff(&self, other: &ScalingSamples, i: usize) -> f64 {
        let (sa, la) = (self.sign[i], self.log_abs[i]);
        let (sb, lb) = (other.sign[i], other.log_abs[i]);
        if sa == 0 {
            return lb;
        }
        if sb == 0 {
            return la;
        }
        if sa != sb {
            return log_add_exp(la, lb);
        }
        if la == lb {
            return f64::NEG_INFINITY;
        }
        let (hi, lo) = if la > lb { (la, lb) } else { (lb, la) };
        hi + (-(lo - hi).exp()).ln_1p()
    }
}

fn same_grid(f: &ScalingSamples, g: &ScalingSamples) -> Result<()> {
    if f.grid != g.grid {
        return Err(Error::InvalidArgument("samples live on different grids".into()));
    }
    Ok(())
}

fn top_quartile(len: usize) -> std::ops::Range<usize> {
    len - len.div_ceil(4)..len
}

/// `max_i log|f - g|(n_i) / ln n_i` over the top quartile of the grid; `-∞` if all equal there.
fn log_estimate(f: &ScalingSamples, g: &ScalingSamples) -> f64 {
    top_quartile(f.len())
        .map(|i| f.log_abs_diff(g, i) / f.grid[i].ln())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Finite-grid estimate of `limsup |f(n) - g(n)|^{1/log n}`.
pub fn scaling_pseudometric(f: &ScalingSamples, g: &ScalingSamples) -> Result<f64> {
    same_grid(f, g)?;
    Ok(log_estimate(f, g).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "tag")]
pub enum ScalingTag {
    Negligible,
    Poly { degree: i64 },
    Superpoly,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingClass {
    pub tag: ScalingTag,
    /// Estimate of `d(f, 0)`; `+∞` when it overflows.
    pub d_estimate: f64,
}

impl ScalingClass {
    /// Polynomially bounded with a decaying estimate (`d < 1`).
    pub fn is_poly_decaying(&self) -> bool {
        matches!(self.tag, ScalingTag::Poly { .. }) && self.d_estimate < 1.0
    }
}

pub fn classify_scaling(f: &ScalingSamples) -> Result<ScalingClass> {
    if f.len() < 8 {
        return Err(Error::InvalidArgument(format!("classification needs at least 8 grid points, got {}", f.len())));
    }
    if f.log_abs.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
        return Err(Error::InvalidArgument("non-finite samples".into()));
    }
    let zero = ScalingSamples::zero(f.grid.clone())?;
    let l = log_estimate(f, &zero);
    let tag = if l < NEGLIGIBLE_THRESHOLD.ln() {
        ScalingTag::Negligible
    } else if l < SUPERPOLY_LOG_THRESHOLD {
        ScalingTag::Poly { degree: l.round() as i64 }
    } else {
        ScalingTag::Superpoly
    };
    Ok(ScalingClass { tag, d_estimate: l.exp() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MulticopyDh {
    pub value: Nats,
    /// `value / m`; `+∞` with an infinite value.
    pub per_copy_rate: f64,
}

/// Exact `D_h^ε(p^{⊗m} ‖ q^{⊗m})` via the method of types.
pub fn classical_multicopy_dh(p: &[f64], q: &[f64], eps: f64, m: usize) -> Result<MulticopyDh> {
    check_distribution(p)?;
    check_distribution(q)?;
    if p.len() != q.len() {
        return Err(Error::DimMismatch(p.len(), q.len()));
    }
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps = {eps} outside [0,1)")));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one copy".into()));
    }
    let classes = type_classes(m, p.len(), TYPE_CLASS_CAP)?;
    // (llr, p-mass, log q-mass) for classes that p can produce.
    let mut items: Vec<(f64, f64, f64)> = classes
        .iter()
        .filter_map(|c| {
            let lp = log_class_prob(c, p);
            if lp == f64::NEG_INFINITY {
                return None;
            }
            let lq = log_class_prob(c, q);
            let llr = if lq == f64::NEG_INFINITY { f64::INFINITY } else { lp - lq };
            Some((llr, lp.exp(), lq))
        })
        .collect();
    items.sort_by(|a, b| b.0.total_cmp(&a.0));

    let target = 1.0 - eps;
    let mut got = 0.0;
    let mut log_beta = f64::NEG_INFINITY;
    let mut k = 0;
    while k < items.len() {
        let head = items[k].0;
        let tol = RATIO_TIE_TOL * head.abs().max(1.0);
        let mut end = k;
        let (mut gp, mut glq) = (0.0, Vec::new());
        while end < items.len() && (items[end].0 == head || (head - items[end].0).abs() <= tol) {
            gp += items[end].1;
            glq.push(items[end].2);
            end += 1;
        }
        let lq = log_sum_exp(&glq);
        if eps > 0.0 && (got + gp >= target || end == items.len()) {
            let w = ((target - got) / gp).clamp(0.0, 1.0);
            log_beta = log_add_exp(log_beta, lq + w.ln());
            break;
        }
        got += gp;
        log_beta = log_add_exp(log_beta, lq);
        k = end;
    }
    if log_beta == f64::NEG_INFINITY {
        let sym = (0..p.len()).find(|&x| p[x] > 0.0 && q[x] <= 0.0).unwrap_or(0);
        return Ok(MulticopyDh { value: Nats::Infinite(Witness::Index(sym)), per_copy_rate: f64::INFINITY });
    }
    let value = -log_beta;
    Ok(MulticopyDh { value: Nats::Finite(value), per_copy_rate: value / m as f64 })
}

/// How the gate budget scales with the copy count. Metadata for the classical oracle, which is
/// exact at unbounded budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BudgetRule {
    Unbounded,
    /// `G(m) = ceil(coeff · m^exponent)`.
    Polynomial { coeff: f64, exponent: f64 },
}

impl BudgetRule {
    pub fn budget(&self, m: usize) -> GateBudget {
        match *self {
            BudgetRule::Unbounded => GateBudget::unbounded(),
            BudgetRule::Polynomial { coeff, exponent } => GateBudget::gates((coeff * (m as f64).powf(exponent)).ceil() as usize),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizationSchedule {
    pub copy_counts: Vec<usize>,
    /// One entry per copy count, or a single entry used for all of them.
    pub eps_schedule: Vec<f64>,
    pub budget_rule: BudgetRule,
}

impl RegularizationSchedule {
    /// `m ∈ {50, 75, 100, 150, 200, 250, 300, 400}` at fixed `ε`.
    pub fn standard(eps: f64) -> Self {
        Self { copy_counts: vec![50, 75, 100, 150, 200, 250, 300, 400], eps_schedule: vec![eps], budget_rule: BudgetRule::Unbounded }
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.copy_counts;
        if m.is_empty() || m[0] == 0 || m.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("copy counts must be positive and strictly increasing".into()));
        }
        let e = &self.eps_schedule;
        if e.len() != 1 && e.len() != m.len() {
            return Err(Error::DimMismatch(e.len(), m.len()));
        }
        if e.iter().any(|x| !(0.0..1.0).contains(x)) || e.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument("eps schedule must be non-increasing in [0,1)".into()));
        }
        if let BudgetRule::Polynomial { coeff, exponent } = self.budget_rule {
            if coeff <= 0.0 || exponent < 0.0 {
                return Err(Error::InvalidArgument("budget rule must be positive and non-decreasing".into()));
            }
        }
        Ok(())
    }

    pub fn eps_at(&self, i: usize) -> f64 {
        if self.eps_schedule.len() == 1 {
            self.eps_schedule[0]
        } else {
            self.eps_schedule[i]
        }
    }
}

/// `rate(m) ≈ limit - a/√m + b·ln(m)/m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub limit: f64,
    pub a: f64,
    pub b: f64,
}

impl RateFit {
    pub fn eval(&self, m: f64) -> f64 {
        self.limit - self.a / m.sqrt() + self.b * m.ln() / m
    }
}

/// Least-squares fit of the finite-size model; `None` for fewer than three points or a sequence
/// that is not monotone.
pub fn fit_rate(ms: &[usize], rates: &[f64]) -> Option<RateFit> {
    if ms.len() < 3 || ms.len() != rates.len() || rates.iter().any(|r| !r.is_finite()) {
        return None;
    }
    let up = rates.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let down = rates.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    if !up && !down {
        return None;
    }
    let n = ms.len();
    let x = DMatrix::from_fn(n, 3, |i, j| {
        let m = ms[i] as f64;
        match j {
            0 => 1.0,
            1 => -1.0 / m.sqrt(),
            _ => m.ln() / m,
        }
    });
    let y = DVector::from_column_slice(rates);
    let sol = x.svd(true, true).solve(&y, 1e-14).ok()?;
    Some(RateFit { limit: sol[0], a: sol[1], b: sol[2] })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub m: usize,
    pub eps: f64,
    pub rate: f64,
    /// `|rate - limit|` when a fit exists.
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub points: Vec<RatePoint>,
    pub fit: Option<RateFit>,
    pub residual_class: Option<ScalingClass>,
}

impl RateEstimate {
    /// CSV body `m,rate,residual`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["m", "rate", "residual"])?;
        for p in &self.points {
            let r = p.residual.map(|r| format!("{r:.12e}")).unwrap_or_default();
            w.write_record([p.m.to_string(), format!("{:.12e}", p.rate), r])?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
            .map_err(|e| Error::InvalidArgument(e.to_string()))
    }
}

/// Per-copy rates along `schedule`, their extrapolated limit, and the scaling class of the residuals.
pub fn regularized_rate_estimate(p: &[f64], q: &[f64], schedule: &RegularizationSchedule) -> Result<RateEstimate> {
    schedule.validate()?;
    let rates = schedule
        .copy_counts
        .par_iter()
        .enumerate()
        .map(|(i, &m)| classical_multicopy_dh(p, q, schedule.eps_at(i), m).map(|r| r.per_copy_rate))
        .collect::<Result<Vec<f64>>>()?;
    Ok(estimate_from_rates(&schedule.copy_counts, &rates, |i| schedule.eps_at(i)))
}

pub(crate) fn estimate_from_rates(ms: &[usize], rates: &[f64], eps: impl Fn(usize) -> f64) -> RateEstimate {
    let fit = fit_rate(ms, rates);
    let points: Vec<RatePoint> = ms
        .iter()
        .zip(rates)
        .enumerate()
        .map(|(i, (&m, &rate))| RatePoint { m, eps: eps(i), rate, residual: fit.map(|f| (rate - f.limit).abs()) })
        .collect();
    let residual_class = fit.and_then(|_| {
        let grid: Vec<f64> = ms.iter().map(|&m| m as f64).collect();
        let res: Vec<f64> = points.iter().map(|p| p.residual.unwrap_or(0.0)).collect();
        ScalingSamples::from_values(grid, &res).and_then(|s| classify_scaling(&s)).ok()
    });
    RateEstimate { points, fit, residual_class }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_polynomials() {
        for k in 1..=3 {
            let f = ScalingSamples::from_fn(default_grid(), |n| n.powi(-k)).unwrap();
            let z = ScalingSamples::zero(default_grid()).unwrap();
            let d = scaling_pseudometric(&f, &z).unwrap();
            assert!((d - (-(k as f64)).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn certain_source_costs_log2_per_copy() {
        for m in [1, 5, 40] {
            let r = classical_multicopy_dh(&[1.0, 0.0], &[0.5, 0.5], 0.0, m).unwrap();
            assert!((r.per_copy_rate - 2f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_sources() {
        let r = classical_multicopy_dh(&[0.3, 0.7], &[0.3, 0.7], 0.2, 9).unwrap();
        assert!((r.value.as_f64() + 0.8f64.ln()).abs() < 1e-12);
    }
}
