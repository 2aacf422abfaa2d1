//! Finite product spaces: exact 𝔥 and 𝔡 difference operators, dependence
//! diagnostics (interdependence matrix, β̃), Φ-entropies and exhaustive
//! distributions.
//!
//! Configurations are addressed by a flat index, row-major with the first
//! coordinate most significant. Functions are value tables indexed the same
//! way. Maxima and infima only range over configurations (or, for 𝔥, over
//! coordinate values) of positive probability.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::calculus::PolyFunction;
use crate::error::{Error, Result};
use crate::tensor::{op_norm, OpNormOptions, SymTensor, Tensor};
use crate::util::pairwise_sum;

/// Largest joint table accepted.
pub const MAX_CONFIGURATIONS: usize = 1 << 22;
/// Largest `n` for which dependence diagnostics enumerate subsets.
pub const MAX_PROFILE_SITES: usize = 12;
/// Budget of `f` evaluations for a single 𝔥-tensor.
pub const MAX_H_TENSOR_WORK: u64 = 1 << 32;

const SUM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub struct FiniteProductSpace {
    alphabets: Vec<Vec<f64>>,
    joint: Vec<f64>,
    is_product: bool,
    strides: Vec<usize>,
    supports: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceRepr {
    pub alphabets: Vec<Vec<f64>>,
    pub joint: Vec<f64>,
    #[serde(default)]
    pub is_product: bool,
}

impl TryFrom<SpaceRepr> for FiniteProductSpace {
    type Error = Error;
    fn try_from(r: SpaceRepr) -> Result<Self> {
        FiniteProductSpace::new(r.alphabets, r.joint, r.is_product)
    }
}

impl From<FiniteProductSpace> for SpaceRepr {
    fn from(s: FiniteProductSpace) -> Self {
        SpaceRepr {
            alphabets: s.alphabets,
            joint: s.joint,
            is_product: s.is_product,
        }
    }
}

impl FiniteProductSpace {
    /// Validates the table. A space flagged `is_product` must factor into
    /// its marginals.
    pub fn new(alphabets: Vec<Vec<f64>>, joint: Vec<f64>, is_product: bool) -> Result<Self> {
        if alphabets.is_empty() {
            return Err(Error::Shape("need at least one coordinate".into()));
        }
        if alphabets.iter().any(|a| a.is_empty()) {
            return Err(Error::Shape("empty alphabet".into()));
        }
        if alphabets.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("alphabet labels must be finite".into()));
        }
        let mut size: usize = 1;
        for a in &alphabets {
            size = size
                .checked_mul(a.len())
                .filter(|&s| s <= MAX_CONFIGURATIONS)
                .ok_or_else(|| Error::CostGuard(format!("more than {MAX_CONFIGURATIONS} configurations")))?;
        }
        if joint.len() != size {
            return Err(Error::Shape(format!(
                "joint table has {} entries, expected {size}",
                joint.len()
            )));
        }
        if joint.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let total = pairwise_sum(&joint);
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidParameter(format!("probabilities sum to {total}, not 1")));
        }
        let n = alphabets.len();
        let mut strides = vec![1usize; n];
        for i in (0..n - 1).rev() {
            strides[i] = strides[i + 1] * alphabets[i + 1].len();
        }
        let mut space = FiniteProductSpace {
            alphabets,
            joint,
            is_product,
            strides,
            supports: Vec::new(),
        };
        space.supports = (0..n)
            .map(|i| {
                let m = space.marginal(i);
                (0..m.len()).filter(|&a| m[a] > 0.0).collect()
            })
            .collect();
        if is_product && !space.factorizes() {
            return Err(Error::InvalidParameter(
                "flagged as product but the table does not factor".into(),
            ));
        }
        Ok(space)
    }

    /// Product of independent coordinates with the given labels and weights.
    pub fn product(marginals: &[(Vec<f64>, Vec<f64>)]) -> Result<Self> {
        let alphabets: Vec<Vec<f64>> = marginals.iter().map(|(a, _)| a.clone()).collect();
        for (a, p) in marginals {
            if a.len() != p.len() {
                return Err(Error::Shape("alphabet and weights differ in length".into()));
            }
        }
        let mut joint = vec![1.0];
        for (_, p) in marginals {
            joint = joint.iter().flat_map(|&x| p.iter().map(move |&y| x * y)).collect();
            if joint.len() > MAX_CONFIGURATIONS {
                return Err(Error::CostGuard(format!(
                    "more than {MAX_CONFIGURATIONS} configurations"
                )));
            }
        }
        // renormalize rounding drift from the products
        let total = pairwise_sum(&joint);
        if (total - 1.0).abs() <= 1e-9 {
            joint.iter_mut().for_each(|x| *x /= total);
        }
        FiniteProductSpace::new(alphabets, joint, true)
    }

    /// Uniform measure on `{-1, +1}^n`.
    pub fn rademacher(n: usize) -> Result<Self> {
        FiniteProductSpace::product(&vec![(vec![-1.0, 1.0], vec![0.5, 0.5]); n])
    }

    pub fn n(&self) -> usize {
        self.alphabets.len()
    }

    pub fn size(&self) -> usize {
        self.joint.len()
    }

    pub fn alphabets(&self) -> &[Vec<f64>] {
        &self.alphabets
    }

    pub fn joint(&self) -> &[f64] {
        &self.joint
    }

    pub fn is_product(&self) -> bool {
        self.is_product
    }

    /// Alphabet indices of coordinate `i` with positive marginal mass.
    pub fn support(&self, i: usize) -> &[usize] {
        &self.supports[i]
    }

    pub fn digit(&self, flat: usize, i: usize) -> usize {
        flat / self.strides[i] % self.alphabets[i].len()
    }

    pub fn digits(&self, flat: usize) -> Vec<usize> {
        (0..self.n()).map(|i| self.digit(flat, i)).collect()
    }

    pub fn flat(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    /// Flat index with coordinate `i` replaced by alphabet index `a`.
    pub fn replace(&self, flat: usize, i: usize, a: usize) -> usize {
        flat - self.digit(flat, i) * self.strides[i] + a * self.strides[i]
    }

    pub fn labels(&self, flat: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.alphabets[i][self.digit(flat, i)]).collect()
    }

    pub fn marginal(&self, i: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.alphabets[i].len()];
        for (flat, &p) in self.joint.iter().enumerate() {
            m[self.digit(flat, i)] += p;
        }
        m
    }

    fn factorizes(&self) -> bool {
        let margs: Vec<Vec<f64>> = (0..self.n()).map(|i| self.marginal(i)).collect();
        self.joint.iter().enumerate().all(|(flat, &p)| {
            let q: f64 = (0..self.n()).map(|i| margs[i][self.digit(flat, i)]).product();
            (p - q).abs() <= 1e-12
        })
    }

    /// Value table of a function of the coordinate labels.
    pub fn tabulate<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.size()).map(|flat| f(&self.labels(flat))).collect()
    }

    pub fn tabulate_poly(&self, f: &PolyFunction) -> Result<Vec<f64>> {
        if f.nvars() != self.n() {
            return Err(Error::Shape(format!(
                "polynomial has {} variables, space has {}",
                f.nvars(),
                self.n()
            )));
        }
        Ok(self.tabulate(|x| f.eval_unchecked(x)))
    }

    pub fn expect(&self, table: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .joint
            .iter()
            .zip(table)
            .map(|(&p, &v)| if p > 0.0 { p * v } else { 0.0 })
            .collect();
        pairwise_sum(&terms)
    }

    fn check_table(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.size() {
            return Err(Error::Shape(format!(
                "value table has {} entries, expected {}",
                f.len(),
                self.size()
            )));
        }
        Ok(())
    }

    fn check_config(&self, x: usize) -> Result<()> {
        if x >= self.size() {
            return Err(Error::Shape(format!("configuration {x} out of range")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HOps {
    pub h: f64,
    pub h_plus: f64,
    pub h_minus: f64,
}

/// 𝔥_i, 𝔥⁺_i, 𝔥⁻_i at configuration `x`. 𝔥_i takes the supremum over both
/// the value at `i` and its replacement; 𝔥± keep the observed value.
pub fn h_ops(f: &[f64], space: &FiniteProductSpace, x: usize, i: usize) -> Result<HOps> {
    space.check_table(f)?;
    space.check_config(x)?;
    if i >= space.n() {
        return Err(Error::Shape(format!("coordinate {i} out of range")));
    }
    Ok(h_ops_unchecked(f, space, x, i))
}

fn h_ops_unchecked(f: &[f64], space: &FiniteProductSpace, x: usize, i: usize) -> HOps {
    let supp = space.support(i);
    let fx = f[x];
    let mut h_plus: f64 = 0.0;
    let mut h_minus: f64 = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &a in supp {
        let v = f[space.replace(x, i, a)];
        h_plus = h_plus.max(fx - v);
        h_minus = h_minus.max(v - fx);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    HOps {
        h: hi - lo,
        h_plus,
        h_minus,
    }
}

/// The vectors (𝔥_i f(x))_i, (𝔥⁺_i f(x))_i, (𝔥⁻_i f(x))_i.
pub fn h_vectors(f: &[f64], space: &FiniteProductSpace, x: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    space.check_table(f)?;
    space.check_config(x)?;
    let ops: Vec<HOps> = (0..space.n()).map(|i| h_ops_unchecked(f, space, x, i)).collect();
    Ok((
        ops.iter().map(|o| o.h).collect(),
        ops.iter().map(|o| o.h_plus).collect(),
        ops.iter().map(|o| o.h_minus).collect(),
    ))
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i as u64 + 1))
}

/// Order-`j` tensor of iterated differences 𝔥⁽ʲ⁾f(x); zero on repeated
/// indices.
pub fn h_tensor(f: &[f64], space: &FiniteProductSpace, j: usize, x: usize) -> Result<SymTensor> {
    space.check_table(f)?;
    space.check_config(x)?;
    let n = space.n();
    if j == 0 || j > n {
        return Err(Error::InvalidParameter(format!("order must lie in 1..={n}, got {j}")));
    }
    let max_supp = (0..n).map(|i| space.support(i).len() as u64).max().unwrap_or(1);
    let work = binomial(n, j)
        .saturating_mul(max_supp.saturating_pow(2 * j as u32))
        .saturating_mul(1 << j);
    if work > MAX_H_TENSOR_WORK {
        return Err(Error::CostGuard(format!(
            "h-tensor of order {j} needs ~{work} evaluations"
        )));
    }
    let mut t = Tensor::zeros(j, n)?;
    let mut tuple: Vec<usize> = (0..j).collect();
    loop {
        let v = h_entry(f, space, &tuple, x);
        for perm in permutations(&tuple) {
            t.set(&perm, v);
        }
        // next strictly increasing tuple
        let mut s = j;
        while s > 0 && tuple[s - 1] == n - j + s - 1 {
            s -= 1;
        }
        if s == 0 {
            break;
        }
        tuple[s - 1] += 1;
        for r in s..j {
            tuple[r] = tuple[r - 1] + 1;
        }
    }
    Ok(SymTensor::from_symmetric_unchecked(t))
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(k);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// 𝔥_{i1…ij} f(x) for distinct indices.
fn h_entry(f: &[f64], space: &FiniteProductSpace, idx: &[usize], x: usize) -> f64 {
    let j = idx.len();
    let supps: Vec<&[usize]> = idx.iter().map(|&i| space.support(i)).collect();
    // odometer over (a_1, a'_1, …, a_j, a'_j)
    let mut pos = vec![0usize; 2 * j];
    let mut best: f64 = 0.0;
    loop {
        let mut val = 0.0;
        for mask in 0..(1usize << j) {
            let mut y = x;
            for s in 0..j {
                let a = if mask >> s & 1 == 1 {
                    supps[s][pos[2 * s + 1]]
                } else {
                    supps[s][pos[2 * s]]
                };
                y = space.replace(y, idx[s], a);
            }
            let sign = if mask.count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            val += sign * f[y];
        }
        best = best.max(val.abs());
        let mut k = 0;
        loop {
            if k == 2 * j {
                return best;
            }
            pos[k] += 1;
            if pos[k] < supps[k / 2].len() {
                break;
            }
            pos[k] = 0;
            k += 1;
        }
    }
}

/// Conditional standard deviations 𝔡_i f(x).
pub fn d_operator(f: &[f64], space: &FiniteProductSpace, x: usize) -> Result<Vec<f64>> {
    space.check_table(f)?;
    space.check_config(x)?;
    (0..space.n())
        .map(|i| {
            let alph = space.alphabets()[i].len();
            let cells: Vec<(f64, f64)> = (0..alph)
                .map(|a| {
                    let y = space.replace(x, i, a);
                    (space.joint[y], f[y])
                })
                .collect();
            let total: f64 = cells.iter().map(|c| c.0).sum();
            if total <= 0.0 {
                return Err(Error::Domain(format!("coordinate {i}: conditioning on a null section")));
            }
            let mean: f64 = cells.iter().map(|(w, v)| w * v).sum::<f64>() / total;
            let var: f64 = cells.iter().map(|(w, v)| w * (v - mean) * (v - mean)).sum::<f64>() / total;
            Ok(var.sqrt())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependenceProfile {
    /// Minimal interdependence matrix, row-major `n × n`.
    pub j: Vec<Vec<f64>>,
    pub beta_tilde: f64,
    pub j_opnorm: f64,
    pub alpha1: f64,
    /// `1 - |J|_op` when positive.
    pub alpha2: Option<f64>,
}

/// Minimal interdependence matrix and β̃ by exhaustive enumeration.
pub fn dependence_profile(space: &FiniteProductSpace) -> Result<DependenceProfile> {
    let n = space.n();
    if n > MAX_PROFILE_SITES {
        return Err(Error::CostGuard(format!(
            "dependence profile limited to n <= {MAX_PROFILE_SITES}"
        )));
    }
    let jm = interdependence_matrix(space);
    let beta = beta_tilde(space);
    let mat = DMatrix::from_fn(n, n, |r, c| jm[r][c]);
    let j_opnorm = op_norm(&Tensor::from_matrix(&mat)?, 2.0, &OpNormOptions::default())?.value;
    let alpha2 = (j_opnorm < 1.0).then_some(1.0 - j_opnorm);
    Ok(DependenceProfile {
        j: jm,
        beta_tilde: beta,
        j_opnorm,
        alpha1: beta,
        alpha2,
    })
}

/// Conditional law of coordinate `i` given the rest of `x`, or `None` on a
/// null section.
fn conditional(space: &FiniteProductSpace, x: usize, i: usize) -> Option<Vec<f64>> {
    let w: Vec<f64> = (0..space.alphabets()[i].len())
        .map(|a| space.joint[space.replace(x, i, a)])
        .collect();
    let total: f64 = w.iter().sum();
    (total > 0.0).then(|| w.into_iter().map(|v| v / total).collect())
}

fn interdependence_matrix(space: &FiniteProductSpace) -> Vec<Vec<f64>> {
    let n = space.n();
    let mut jm = vec![vec![0.0; n]; n];
    for x in 0..space.size() {
        if space.joint[x] <= 0.0 {
            continue;
        }
        for jj in 0..n {
            for b in 0..space.alphabets()[jj].len() {
                let y = space.replace(x, jj, b);
                if y <= x || space.joint[y] <= 0.0 {
                    continue;
                }
                for i in (0..n).filter(|&i| i != jj) {
                    let (Some(cx), Some(cy)) = (conditional(space, x, i), conditional(space, y, i)) else {
                        continue;
                    };
                    let tv = 0.5 * cx.iter().zip(&cy).map(|(a, b)| (a - b).abs()).sum::<f64>();
                    jm[i][jj] = f64::max(jm[i][jj], tv);
                }
            }
        }
    }
    jm
}

fn beta_tilde(space: &FiniteProductSpace) -> f64 {
    let n = space.n();
    let full = (1usize << n) - 1;
    let mut beta: f64 = 1.0;
    for s_mask in 0..full {
        // marginal over S, keyed by the projection of the flat index
        let key = |flat: usize, mask: usize| -> usize {
            (0..n)
                .filter(|&c| mask >> c & 1 == 1)
                .fold(0, |acc, c| acc * space.alphabets()[c].len() + space.digit(flat, c))
        };
        let s_size: usize = (0..n)
            .filter(|&c| s_mask >> c & 1 == 1)
            .map(|c| space.alphabets()[c].len())
            .product();
        let mut mu_s = vec![0.0; s_size];
        for (flat, &p) in space.joint.iter().enumerate() {
            mu_s[key(flat, s_mask)] += p;
        }
        for i in (0..n).filter(|&i| s_mask >> i & 1 == 0) {
            let si = s_mask | 1 << i;
            let si_size = s_size * space.alphabets()[i].len();
            let mut mu_si = vec![0.0; si_size];
            for (flat, &p) in space.joint.iter().enumerate() {
                mu_si[key(flat, si)] += p;
            }
            for (flat, &p) in space.joint.iter().enumerate() {
                if p > 0.0 {
                    let cond = mu_si[key(flat, si)] / mu_s[key(flat, s_mask)];
                    beta = beta.min(cond);
                }
            }
        }
    }
    beta
}

/// `σ² = log(1/α₁) / (2 log 2 · α₁ α₂²)`.
pub fn dlsi_sigma2(alpha1: f64, alpha2: f64) -> Result<f64> {
    if !(alpha1 > 0.0 && alpha1 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha1 must lie in (0, 1), got {alpha1}"
        )));
    }
    if !(alpha2 > 0.0 && alpha2 <= 1.0) {
        return Err(Error::Dobrushin(1.0 - alpha2));
    }
    Ok((1.0 / alpha1).ln() / (2.0 * std::f64::consts::LN_2 * alpha1 * alpha2 * alpha2))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DlsiConstants {
    pub sigma2: f64,
    /// Approximate tensorization constant `1/(α₁ α₂²)`.
    pub at_constant: f64,
}

pub fn dlsi_constant(profile: &DependenceProfile) -> Result<DlsiConstants> {
    let alpha2 = profile.alpha2.ok_or(Error::Dobrushin(profile.j_opnorm))?;
    let sigma2 = dlsi_sigma2(profile.alpha1, alpha2)?;
    Ok(DlsiConstants {
        sigma2,
        at_constant: 1.0 / (profile.alpha1 * alpha2 * alpha2),
    })
}

/// Law of `f` under the measure: sorted `(value, probability)` pairs over the
/// support.
pub fn exact_distribution(f: &[f64], space: &FiniteProductSpace) -> Result<Vec<(f64, f64)>> {
    space.check_table(f)?;
    let mut pairs: Vec<(f64, f64)> = f
        .iter()
        .zip(&space.joint)
        .filter(|(_, &p)| p > 0.0)
        .map(|(&v, &p)| (v, p))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (v, p) in pairs {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += p,
            _ => out.push((v, p)),
        }
    }
    Ok(out)
}

/// `‖f − Ef‖_r` for `r ≥ 1`.
pub fn exact_moment(f: &[f64], space: &FiniteProductSpace, r: f64) -> Result<f64> {
    space.check_table(f)?;
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "moment order must be finite and >= 1, got {r}"
        )));
    }
    let m = space.expect(f);
    let centered: Vec<f64> = f.iter().map(|v| (v - m).abs().powf(r)).collect();
    Ok(space.expect(&centered).powf(1.0 / r))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phi {
    /// `x log x` with `0 log 0 = 0`.
    Log,
    /// `x^{2/q}` for `q ∈ (1, 2]`.
    Power { q: f64 },
}

/// `E Φ(g) − Φ(E g)` for `g ≥ 0`.
pub fn phi_entropy(g: &[f64], space: &FiniteProductSpace, phi: Phi) -> Result<f64> {
    space.check_table(g)?;
    if g.iter().zip(&space.joint).any(|(&v, &p)| p > 0.0 && v < 0.0) {
        return Err(Error::Domain("Φ-entropy needs a nonnegative function".into()));
    }
    if phi == Phi::Log {
        return Ok(log_entropy(g, space));
    }
    let phi_fn: Box<dyn Fn(f64) -> f64> = match phi {
        Phi::Log => unreachable!(),
        Phi::Power { q } => {
            if !(q > 1.0 && q <= 2.0) {
                return Err(Error::InvalidParameter(format!("q must lie in (1, 2], got {q}")));
            }
            Box::new(move |x: f64| x.powf(2.0 / q))
        }
    };
    let mapped: Vec<f64> = g.iter().map(|&v| phi_fn(v.max(0.0))).collect();
    Ok((space.expect(&mapped) - phi_fn(space.expect(g).max(0.0))).max(0.0))
}

/// `Σ μ m ψ(g/m − 1)` with `ψ(δ) = (1+δ)log(1+δ) − δ ≥ 0`, which avoids the
/// cancellation in `E g log g − m log m` for nearly constant `g`.
fn log_entropy(g: &[f64], space: &FiniteProductSpace) -> f64 {
    let m = space.expect(g);
    if m <= 0.0 {
        return 0.0;
    }
    let terms: Vec<f64> = g
        .iter()
        .map(|&v| {
            let d = v.max(0.0) / m - 1.0;
            let psi = if v <= 0.0 {
                1.0
            } else if d.abs() < 1e-3 {
                d * d * (0.5 - d / 6.0 + d * d / 12.0 - d * d * d / 20.0)
            } else {
                (1.0 + d) * d.ln_1p() - d
            };
            m * psi
        })
        .collect();
    space.expect(&terms).max(0.0)
}

/// `Ent_μ(f²)`.
pub fn entropy_of_square(f: &[f64], space: &FiniteProductSpace) -> Result<f64> {
    let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
    phi_entropy(&sq, space, Phi::Log)
}

/// Dirichlet form `∫ |𝔡f|² dμ`.
pub fn dirichlet_form(f: &[f64], space: &FiniteProductSpace) -> Result<f64> {
    space.check_table(f)?;
    let mut terms = vec![0.0; space.size()];
    for (x, t) in terms.iter_mut().enumerate() {
        if space.joint[x] > 0.0 {
            *t = d_operator(f, space, x)?.iter().map(|d| d * d).sum();
        }
    }
    Ok(space.expect(&terms))
}

pub fn variance(f: &[f64], space: &FiniteProductSpace) -> Result<f64> {
    Ok(exact_moment(f, space, 2.0)?.powi(2))
}

/// `½ Σ_i E (f − T_i f)²` with `X_i'` an independent copy of `X_i`.
pub fn efron_stein_rhs(f: &[f64], space: &FiniteProductSpace) -> Result<f64> {
    space.check_table(f)?;
    let margs: Vec<Vec<f64>> = (0..space.n()).map(|i| space.marginal(i)).collect();
    let mut terms = vec![0.0; space.size()];
    for (x, t) in terms.iter_mut().enumerate() {
        let mut s = 0.0;
        for (i, m) in margs.iter().enumerate() {
            for (a, &w) in m.iter().enumerate() {
                let d = f[x] - f[space.replace(x, i, a)];
                s += w * d * d;
            }
        }
        *t = 0.5 * s;
    }
    Ok(space.expect(&terms))
}

/// Ising model `μ(σ) ∝ exp(β(Σ J σ_i σ_j + Σ h_i σ_i))` on `{-1, +1}^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingSpec {
    pub edges: Vec<(usize, usize, f64)>,
    pub fields: Vec<f64>,
    pub beta: f64,
}

impl IsingSpec {
    pub fn build(&self) -> Result<FiniteProductSpace> {
        let n = self.fields.len();
        if n == 0 {
            return Err(Error::Shape("need at least one site".into()));
        }
        if n > 22 {
            return Err(Error::CostGuard(format!("{n} sites exceed 2^22 configurations")));
        }
        if !self.beta.is_finite() || self.fields.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidParameter("beta and fields must be finite".into()));
        }
        for &(i, j, c) in &self.edges {
            if i >= n || j >= n || i == j || !c.is_finite() {
                return Err(Error::InvalidParameter(format!("bad edge ({i}, {j}, {c})")));
            }
        }
        let size = 1usize << n;
        let spin = |flat: usize, i: usize| if flat >> (n - 1 - i) & 1 == 1 { 1.0 } else { -1.0 };
        let energy: Vec<f64> = (0..size)
            .map(|x| {
                let pair: f64 = self.edges.iter().map(|&(i, j, c)| c * spin(x, i) * spin(x, j)).sum();
                let field: f64 = self.fields.iter().enumerate().map(|(i, h)| h * spin(x, i)).sum();
                self.beta * (pair + field)
            })
            .collect();
        let top = energy.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = energy.iter().map(|e| (e - top).exp()).collect();
        let z = pairwise_sum(&w);
        let joint = w.into_iter().map(|v| v / z).collect();
        let independent = self.beta == 0.0 || self.edges.iter().all(|e| e.2 == 0.0);
        FiniteProductSpace::new(vec![vec![-1.0, 1.0]; n], joint, independent)
    }
}
