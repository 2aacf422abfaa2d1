//! Empirical and exhaustive checks that computed bounds dominate true tails
//! and moments, plus numerical probes of the functional inequalities.
//!
//! Monte Carlo tails carry one-sided Clopper–Pearson upper confidence bounds
//! with the level `δ` split evenly over the grid. Exhaustive reports have no
//! statistical slack.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::bounds::{self, ExpMomentCertificate, LevelCoefficients, Setting};
use crate::calculus::{self, ManifoldDescriptor, PolyFunction};
use crate::discrete::{self, FiniteProductSpace};
use crate::error::{Error, Result};
use crate::samplers::SampleBatch;
use crate::tensor::{op_norm, OpNormOptions};
use crate::util::{mean_and_stderr, norm2, pairwise_sum};

pub const SCHEMA_VERSION: &str = "1";
pub const DEFAULT_DELTA: f64 = 0.01;
/// Standard errors added to Monte Carlo level estimates.
pub const LEVEL_INFLATION: f64 = 3.0;
/// Largest support handled by [`verify_dlsi`].
pub const MAX_DLSI_CONFIGURATIONS: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Montecarlo,
    Exhaustive,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok(())
}

/// One-sided Clopper–Pearson upper bound for `k` successes out of `n`.
pub fn clopper_pearson_upper(k: usize, n: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if n == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= k <= n and n > 0 (k={k}, n={n})"
        )));
    }
    if k == n {
        return Ok(1.0);
    }
    if k == 0 {
        return Ok(1.0 - delta.powf(1.0 / n as f64));
    }
    // P(Bin(n, p) <= k) = 1 − I_p(k+1, n−k) = δ
    let (a, b) = ((k + 1) as f64, (n - k) as f64);
    let target = 1.0 - delta;
    let (mut lo, mut hi) = (k as f64 / n as f64, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(hi)
}

/// Fraction of `|values| ≥ t` and its upper confidence bound at level `1 − δ`.
pub fn empirical_tail(values: &[f64], t: f64, delta: f64) -> Result<(f64, f64)> {
    tail_count(values, t, delta, false)
}

fn tail_count(values: &[f64], t: f64, delta: f64, upper_only: bool) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Shape("no values".into()));
    }
    let k = values
        .iter()
        .filter(|&&v| if upper_only { v >= t } else { v.abs() >= t })
        .count();
    let n = values.len();
    Ok((k as f64 / n as f64, clopper_pearson_upper(k, n, delta)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: String,
    pub mode: Mode,
    pub grid: Vec<f64>,
    pub empirical_tail: Vec<f64>,
    pub empirical_upper_confidence: Vec<f64>,
    pub theoretical: Vec<f64>,
    pub verdicts: Vec<bool>,
    pub pass: bool,
    pub samples: usize,
    pub delta: f64,
    /// Only `f − Ef ≥ t` is counted.
    pub upper_tail_only: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<f64>,
}

impl VerificationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Columns `t, empirical, ucb, bound, pass`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,empirical,ucb,bound,pass")?;
        for i in 0..self.grid.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                self.grid[i],
                self.empirical_tail[i],
                self.empirical_upper_confidence[i],
                self.theoretical[i],
                self.verdicts[i]
            )?;
        }
        Ok(())
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter(
            "grid must be nonempty, finite and nonnegative".into(),
        ));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn finish(
    mode: Mode,
    grid: &[f64],
    emp: Vec<f64>,
    ucb: Vec<f64>,
    theo: Vec<f64>,
    samples: usize,
    delta: f64,
    upper_only: bool,
) -> VerificationReport {
    let verdicts: Vec<bool> = ucb.iter().zip(&theo).map(|(&u, &b)| b >= 1.0 || u <= b).collect();
    VerificationReport {
        schema_version: SCHEMA_VERSION.into(),
        mode,
        grid: grid.to_vec(),
        empirical_tail: emp,
        empirical_upper_confidence: ucb,
        theoretical: theo,
        pass: verdicts.iter().all(|&v| v),
        verdicts,
        samples,
        delta,
        upper_tail_only: upper_only,
        levels: Vec::new(),
    }
}

/// Compares centered Monte Carlo values against an arbitrary bound curve.
pub fn curve_report_mc<B>(
    values: &[f64],
    grid: &[f64],
    delta: f64,
    upper_only: bool,
    bound: B,
) -> Result<VerificationReport>
where
    B: Fn(f64) -> Result<f64>,
{
    check_grid(grid)?;
    check_delta(delta)?;
    let per_point = delta / grid.len() as f64;
    let mut emp = Vec::with_capacity(grid.len());
    let mut ucb = Vec::with_capacity(grid.len());
    let mut theo = Vec::with_capacity(grid.len());
    for &t in grid {
        let (e, u) = tail_count(values, t, per_point, upper_only)?;
        emp.push(e);
        ucb.push(u);
        theo.push(bound(t)?);
    }
    Ok(finish(
        Mode::Montecarlo,
        grid,
        emp,
        ucb,
        theo,
        values.len(),
        delta,
        upper_only,
    ))
}

/// Compares the exact law of `f − Ef` against a bound curve.
pub fn curve_report_exhaustive<B>(
    space: &FiniteProductSpace,
    table: &[f64],
    grid: &[f64],
    upper_only: bool,
    bound: B,
) -> Result<VerificationReport>
where
    B: Fn(f64) -> Result<f64>,
{
    check_grid(grid)?;
    let mean = space.expect(table);
    let centered: Vec<f64> = table.iter().map(|v| v - mean).collect();
    let dist = discrete::exact_distribution(&centered, space)?;
    let mut emp = Vec::with_capacity(grid.len());
    let mut theo = Vec::with_capacity(grid.len());
    for &t in grid {
        let probs: Vec<f64> = dist
            .iter()
            .filter(|(v, _)| if upper_only { *v >= t } else { v.abs() >= t })
            .map(|&(_, p)| p)
            .collect();
        emp.push(pairwise_sum(&probs).min(1.0));
        theo.push(bound(t)?);
    }
    let ucb = emp.clone();
    Ok(finish(
        Mode::Exhaustive,
        grid,
        emp,
        ucb,
        theo,
        space.size(),
        0.0,
        upper_only,
    ))
}

/// `f` evaluated on every row, in row order.
pub fn evaluate_on_batch(f: &PolyFunction, batch: &SampleBatch) -> Result<Vec<f64>> {
    if f.nvars() != batch.dim {
        return Err(Error::Shape(format!(
            "function has {} variables, samples have {}",
            f.nvars(),
            batch.dim
        )));
    }
    batch.data.par_chunks_exact(batch.dim).map(|x| f.eval(x)).collect()
}

pub enum TailSource<'a> {
    /// Samples with the observable; `mean` defaults to the sample mean.
    Samples {
        batch: &'a SampleBatch,
        f: &'a PolyFunction,
        mean: Option<f64>,
    },
    /// Enumerated finite space with a function table.
    Exhaustive {
        space: &'a FiniteProductSpace,
        table: &'a [f64],
    },
}

/// Tail of `f − Ef` against [`bounds::tail_bound`] on the grid.
pub fn verify_tail(
    source: &TailSource,
    s: &Setting,
    k: &LevelCoefficients,
    grid: &[f64],
    delta: f64,
) -> Result<VerificationReport> {
    // surface degenerate or mismatched levels before any sampling work
    bounds::tail_bound(s, k, 1.0)?;
    let bound = |t: f64| bounds::tail_bound(s, k, t);
    let upper = s.positive_part_only;
    let mut report = match source {
        TailSource::Samples { batch, f, mean } => {
            let vals = evaluate_on_batch(f, batch)?;
            let m = mean.unwrap_or_else(|| crate::util::mean(&vals));
            let centered: Vec<f64> = vals.iter().map(|v| v - m).collect();
            curve_report_mc(&centered, grid, delta, upper, bound)?
        }
        TailSource::Exhaustive { space, table } => curve_report_exhaustive(space, table, grid, upper, bound)?,
    };
    report.levels = k.values().to_vec();
    Ok(report)
}

/// Monte Carlo tail of centered values against [`bounds::hw_bound`].
pub fn verify_hw(
    values: &[f64],
    s: &Setting,
    hs: f64,
    op: f64,
    grid: &[f64],
    delta: f64,
) -> Result<VerificationReport> {
    bounds::hw_bound(s, hs, op, 1.0)?;
    curve_report_mc(values, grid, delta, false, |t| bounds::hw_bound(s, hs, op, t))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelEstimate {
    /// Levels used for bounds, inflated by [`LEVEL_INFLATION`] standard errors.
    pub k: LevelCoefficients,
    pub raw: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Levels `E|f⁽ʲ⁾|_op` for `j < d` and the constant `|f⁽ᵈ⁾|_op` of a
/// polynomial of degree at most `d`, using Euclidean derivatives.
pub fn poly_levels_mc(f: &PolyFunction, batch: &SampleBatch, d: usize, opts: &OpNormOptions) -> Result<LevelEstimate> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be at least 1".into()));
    }
    if f.degree() as usize > d {
        return Err(Error::InvalidParameter(format!(
            "degree {} exceeds d = {d}; the top level would not be constant",
            f.degree()
        )));
    }
    if f.nvars() != batch.dim || batch.count == 0 {
        return Err(Error::Shape("samples do not match the function".into()));
    }
    let mut raw = Vec::with_capacity(d);
    let mut stderr = Vec::with_capacity(d);
    for j in 1..d {
        let norms: Vec<f64> = batch
            .data
            .par_chunks_exact(batch.dim)
            .map(|x| tensor_op(f.derivative_tensor(j, x)?.as_tensor(), opts))
            .collect::<Result<_>>()?;
        let (m, se) = mean_and_stderr(&norms);
        raw.push(m);
        stderr.push(se);
    }
    let top = f.derivative_tensor(d, &vec![0.0; f.nvars()])?;
    raw.push(tensor_op(top.as_tensor(), opts)?);
    stderr.push(0.0);
    let inflated = raw
        .iter()
        .zip(&stderr)
        .map(|(m, se)| m + LEVEL_INFLATION * se)
        .collect();
    Ok(LevelEstimate {
        k: LevelCoefficients::new(inflated)?,
        raw,
        stderr,
    })
}

fn tensor_op(t: &crate::tensor::Tensor, opts: &OpNormOptions) -> Result<f64> {
    if t.entries().iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    Ok(op_norm(t, 2.0, opts)?.value)
}

/// Exact 𝔥 levels on a finite space: `E|𝔥⁽ʲ⁾f|_op` for `j < d` and
/// `max |𝔥⁽ᵈ⁾f|_op` over the support. Orders `j ≥ 3` use the alternating
/// maximizer and are therefore lower estimates.
pub fn h_levels_exact(
    table: &[f64],
    space: &FiniteProductSpace,
    d: usize,
    opts: &OpNormOptions,
) -> Result<LevelCoefficients> {
    if d == 0 || d > space.n() {
        return Err(Error::InvalidParameter(format!("d must lie in 1..={}", space.n())));
    }
    let support: Vec<usize> = (0..space.size()).filter(|&x| space.joint()[x] > 0.0).collect();
    let mut k = Vec::with_capacity(d);
    for j in 1..=d {
        let norms: Vec<f64> = support
            .par_iter()
            .map(|&x| tensor_op(discrete::h_tensor(table, space, j, x)?.as_tensor(), opts))
            .collect::<Result<_>>()?;
        if j < d {
            let weighted: Vec<f64> = support.iter().zip(&norms).map(|(&x, v)| space.joint()[x] * v).collect();
            k.push(pairwise_sum(&weighted));
        } else {
            k.push(norms.iter().cloned().fold(0.0, f64::max));
        }
    }
    LevelCoefficients::new(k)
}

/// Exact comparison up to floating-point ties.
fn within(value: f64, bound: f64) -> bool {
    value <= bound * (1.0 + 1e-12)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub r: f64,
    pub moment: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub schema_version: String,
    pub mode: Mode,
    pub rows: Vec<MomentRow>,
    pub pass: bool,
}

impl MomentReport {
    fn new(mode: Mode, rows: Vec<MomentRow>) -> Self {
        MomentReport {
            schema_version: SCHEMA_VERSION.into(),
            mode,
            pass: rows.iter().all(|r| r.pass),
            rows,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,moment,stderr,bound,pass")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{}", r.r, r.moment, r.stderr, r.bound, r.pass)?;
        }
        Ok(())
    }
}

/// `‖f − Ef‖_r` against [`bounds::moment_growth_bound`] for each `r`. In
/// Monte Carlo mode the estimate may sit up to three standard errors (of the
/// `r`-th absolute moment) above the bound.
pub fn verify_moment_recursion(
    source: &TailSource,
    s: &Setting,
    k: &LevelCoefficients,
    r_list: &[f64],
) -> Result<MomentReport> {
    if r_list.is_empty() {
        return Err(Error::InvalidParameter("no moment orders".into()));
    }
    let bounds_r: Vec<f64> = r_list
        .iter()
        .map(|&r| bounds::moment_growth_bound(s, k, r))
        .collect::<Result<_>>()?;
    match source {
        TailSource::Exhaustive { space, table } => {
            let rows = r_list
                .iter()
                .zip(bounds_r)
                .map(|(&r, bound)| {
                    let moment = discrete::exact_moment(table, space, r)?;
                    Ok(MomentRow {
                        r,
                        moment,
                        stderr: 0.0,
                        bound,
                        pass: within(moment, bound),
                    })
                })
                .collect::<Result<_>>()?;
            Ok(MomentReport::new(Mode::Exhaustive, rows))
        }
        TailSource::Samples { batch, f, mean } => {
            let vals = evaluate_on_batch(f, batch)?;
            let m = mean.unwrap_or_else(|| crate::util::mean(&vals));
            let rows = r_list
                .iter()
                .zip(bounds_r)
                .map(|(&r, bound)| {
                    let powers: Vec<f64> = vals.iter().map(|v| (v - m).abs().powf(r)).collect();
                    let (mr, se) = mean_and_stderr(&powers);
                    let lower = (mr - LEVEL_INFLATION * se).max(0.0).powf(1.0 / r);
                    MomentRow {
                        r,
                        moment: mr.powf(1.0 / r),
                        stderr: se,
                        bound,
                        pass: lower <= bound,
                    }
                })
                .collect();
            Ok(MomentReport::new(Mode::Montecarlo, rows))
        }
    }
}

/// Exact check of `‖f − Ef‖_r ≤ (σ²(r − 3/2)/2)^{1/2} ‖|𝔥f|‖_r` for `r ≥ 2`.
pub fn verify_dlsi_moments(
    space: &FiniteProductSpace,
    table: &[f64],
    sigma2: f64,
    r_list: &[f64],
) -> Result<MomentReport> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidParameter("sigma^2 must be positive".into()));
    }
    let grad: Vec<f64> = (0..space.size())
        .map(|x| {
            if space.joint()[x] > 0.0 {
                Ok(norm2(&discrete::h_vectors(table, space, x)?.0))
            } else {
                Ok(0.0)
            }
        })
        .collect::<Result<_>>()?;
    let rows = r_list
        .iter()
        .map(|&r| {
            if !(r >= 2.0) || !r.is_finite() {
                return Err(Error::Domain(format!("moment order {r} below 2")));
            }
            let gp: Vec<f64> = grad.iter().map(|g| g.powf(r)).collect();
            let grad_r = space.expect(&gp).powf(1.0 / r);
            let bound = (sigma2 * (r - 1.5) / 2.0).sqrt() * grad_r;
            let moment = discrete::exact_moment(table, space, r)?;
            Ok(MomentRow {
                r,
                moment,
                stderr: 0.0,
                bound,
                pass: within(moment, bound),
            })
        })
        .collect::<Result<_>>()?;
    Ok(MomentReport::new(Mode::Exhaustive, rows))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpMomentReport {
    pub schema_version: String,
    pub integral: f64,
    pub exponent: f64,
    pub coefficient: f64,
    /// Whether the certificate's normalization held.
    pub normalized: bool,
    pub pass: bool,
}

/// Exact `∫ exp(coefficient · |g|^exponent) dμ` with `g = f − Ef` (or `f`
/// itself when `center` is false). Exhaustive only.
pub fn verify_exp_moment(
    space: &FiniteProductSpace,
    table: &[f64],
    cert: &ExpMomentCertificate,
    center: bool,
) -> Result<ExpMomentReport> {
    if space.size() != table.len() {
        return Err(Error::Shape("table does not match the space".into()));
    }
    let m = if center { space.expect(table) } else { 0.0 };
    let vals: Vec<f64> = table
        .iter()
        .map(|v| (cert.coefficient * (v - m).abs().powf(cert.exponent)).exp())
        .collect();
    let integral = space.expect(&vals);
    Ok(ExpMomentReport {
        schema_version: SCHEMA_VERSION.into(),
        integral,
        exponent: cert.exponent,
        coefficient: cert.coefficient,
        normalized: cert.normalized,
        pass: integral <= 2.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DlsiReport {
    pub schema_version: String,
    /// Largest ratio `Ent(f²) / (2 ∫|𝔡f|²)` found; a lower bound on the
    /// optimal constant.
    pub max_ratio: f64,
    /// Limit of the ratio at constants (spectral-gap value).
    pub poincare_limit: f64,
    pub claimed: f64,
    pub restarts: usize,
    pub pass: bool,
}

/// Searches for functions maximizing the 𝔡-LSI ratio. One-sided: the result
/// can only underestimate the optimal constant.
pub fn verify_dlsi(space: &FiniteProductSpace, sigma2_claimed: f64, budget: usize, seed: u64) -> Result<DlsiReport> {
    if budget == 0 {
        return Err(Error::InvalidParameter("search budget must be at least 1".into()));
    }
    if !(sigma2_claimed > 0.0) {
        return Err(Error::InvalidParameter("claimed sigma^2 must be positive".into()));
    }
    let support: Vec<usize> = (0..space.size()).filter(|&x| space.joint()[x] > 0.0).collect();
    if support.len() > MAX_DLSI_CONFIGURATIONS {
        return Err(Error::CostGuard(format!(
            "{} configurations exceed {MAX_DLSI_CONFIGURATIONS}",
            support.len()
        )));
    }
    let (poincare, eigvec) = poincare_limit(space, &support)?;
    let mut best = poincare;

    let ratio = |u: &[f64]| -> Result<f64> {
        let mut f = vec![1.0; space.size()];
        for (&x, &v) in support.iter().zip(u) {
            f[x] = v.exp();
        }
        let den = 2.0 * discrete::dirichlet_form(&f, space)?;
        if den <= 0.0 {
            return Ok(0.0);
        }
        Ok(discrete::entropy_of_square(&f, space)? / den)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = support.len();
    for restart in 0..budget {
        let mut u: Vec<f64> = match (restart, &eigvec) {
            (0, Some(g)) => g.iter().map(|v| (1.0 + 0.05 * v).max(1e-3).ln()).collect(),
            _ => {
                let scale = [0.1, 0.5, 1.5, 3.0][restart % 4];
                (0..m).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
            }
        };
        let mut cur = ratio(&u)?;
        let mut step = 0.25;
        let mut sweeps = 0;
        while step > 1e-6 && sweeps < 400 {
            let mut improved = false;
            for i in 0..m {
                for dir in [step, -step] {
                    u[i] += dir;
                    let r = ratio(&u)?;
                    if r > cur {
                        cur = r;
                        improved = true;
                        break;
                    }
                    u[i] -= dir;
                }
            }
            if !improved {
                step *= 0.5;
            }
            sweeps += 1;
        }
        best = best.max(cur);
    }
    Ok(DlsiReport {
        schema_version: SCHEMA_VERSION.into(),
        max_ratio: best,
        poincare_limit: poincare,
        claimed: sigma2_claimed,
        restarts: budget,
        pass: best <= sigma2_claimed,
    })
}

/// Largest `Var(g) / (2·½ ∫|𝔡g|²)`-type ratio at constants: the top
/// generalized eigenvalue of the covariance against the Dirichlet form,
/// with its eigenvector (indexed like `support`).
fn poincare_limit(space: &FiniteProductSpace, support: &[usize]) -> Result<(f64, Option<Vec<f64>>)> {
    let m = support.len();
    if m < 2 {
        return Ok((0.0, None));
    }
    let mut pos = vec![usize::MAX; space.size()];
    for (k, &x) in support.iter().enumerate() {
        pos[x] = k;
    }
    let mu: Vec<f64> = support.iter().map(|&x| space.joint()[x]).collect();
    let mut var = DMatrix::<f64>::zeros(m, m);
    for a in 0..m {
        var[(a, a)] += mu[a];
        for b in 0..m {
            var[(a, b)] -= mu[a] * mu[b];
        }
    }
    let mut dir = DMatrix::<f64>::zeros(m, m);
    for (k, &x) in support.iter().enumerate() {
        for i in 0..space.n() {
            let cells: Vec<(usize, f64)> = (0..space.alphabets()[i].len())
                .map(|a| space.replace(x, i, a))
                .filter(|&y| space.joint()[y] > 0.0)
                .map(|y| (pos[y], space.joint()[y]))
                .collect();
            let total: f64 = cells.iter().map(|c| c.1).sum();
            for &(a, wa) in &cells {
                dir[(a, a)] += mu[k] * wa / total;
                for &(b, wb) in &cells {
                    dir[(a, b)] -= mu[k] * wa * wb / (total * total);
                }
            }
        }
    }
    let eig = SymmetricEigen::new(dir.clone());
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-12 * top.max(1e-300);
    let keep: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > tol).collect();
    // covariance mass in the Dirichlet kernel beyond constants means no LSI
    for i in (0..m).filter(|i| !keep.contains(i)) {
        let z = eig.eigenvectors.column(i);
        if (z.transpose() * &var * z)[(0, 0)] > 1e-12 {
            return Ok((f64::INFINITY, None));
        }
    }
    let mut w = DMatrix::<f64>::zeros(m, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let col = eig.eigenvectors.column(i) / eig.eigenvalues[i].sqrt();
        w.set_column(c, &col);
    }
    let red = w.transpose() * &var * &w;
    let red = (&red + red.transpose()) * 0.5;
    let e2 = SymmetricEigen::new(red);
    let (arg, lam) =
        e2.eigenvalues.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
        );
    let g = &w * e2.eigenvectors.column(arg);
    let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    // Ent(f²) ≈ 2ε² Var(g), ∫|𝔡f|² = ε² ∫|𝔡g|²
    Ok((lam.max(0.0), Some(g.iter().map(|v| v / scale).collect())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdReport {
    pub points: usize,
    /// `max |fd − exact| / max(|exact|_∞, 1)` over gradient components.
    pub grad_rel_err: f64,
    /// Same for `vᵀ H v` along great circles; sphere only.
    pub hess_rel_err: Option<f64>,
    /// `|∇_M f| ≤ |∇f|` at every point.
    pub contraction_holds: bool,
}

/// Central differences along in-manifold curves against the intrinsic
/// gradient and, on the sphere, the intrinsic Hessian. The Hessian uses the
/// step `max(h, 1e-3)` to keep second differences above rounding noise.
pub fn finite_difference_suite(
    f: &PolyFunction,
    m: &ManifoldDescriptor,
    points: &[Vec<f64>],
    h: f64,
) -> Result<FdReport> {
    if !(h > 0.0 && h <= 1e-2) {
        return Err(Error::InvalidParameter(format!("step must lie in (0, 1e-2], got {h}")));
    }
    m.validate()?;
    let dim = m.ambient_dim();
    let mut grad_err: f64 = 0.0;
    let mut hess_err: Option<f64> = matches!(m, ManifoldDescriptor::Sphere { .. }).then_some(0.0);
    let mut contraction = true;
    for x in points {
        let g = calculus::intrinsic_gradient(m, f, x)?;
        let full = f.gradient(x)?;
        if norm2(&g) > norm2(&full) * (1.0 + 1e-12) + 1e-15 {
            contraction = false;
        }
        let scale = g.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for k in 0..dim {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            let v = calculus::tangent_project(m, x, &e)?;
            let fp = f.eval(&calculus::retract(m, x, &v, h)?)?;
            let fm = f.eval(&calculus::retract(m, x, &v, -h)?)?;
            let fd = (fp - fm) / (2.0 * h);
            grad_err = grad_err.max((fd - g[k]).abs() / scale);
        }
        if let Some(he) = hess_err.as_mut() {
            let hh = h.max(1e-3);
            let hess = calculus::sphere_hessian(f, x)?;
            let hm = hess.to_matrix().expect("order 2");
            let f0 = f.eval(x)?;
            let mut exact = Vec::with_capacity(dim);
            let mut approx = Vec::with_capacity(dim);
            for k in 0..dim {
                let mut e = vec![0.0; dim];
                e[k] = 1.0;
                let v = calculus::tangent_project(m, x, &e)?;
                let nv = norm2(&v);
                if nv < 1e-6 {
                    continue;
                }
                let v: Vec<f64> = v.iter().map(|a| a / nv).collect();
                let vv = nalgebra::DVector::from_column_slice(&v);
                exact.push((vv.transpose() * &hm * &vv)[(0, 0)]);
                let fp = f.eval(&calculus::retract(m, x, &v, hh)?)?;
                let fm = f.eval(&calculus::retract(m, x, &v, -hh)?)?;
                approx.push((fp - 2.0 * f0 + fm) / (hh * hh));
            }
            let s = exact.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            for (a, b) in approx.iter().zip(&exact) {
                *he = he.max((a - b).abs() / s);
            }
        }
    }
    Ok(FdReport {
        points: points.len(),
        grad_rel_err: grad_err,
        hess_rel_err: hess_err,
        contraction_holds: contraction,
    })
}
