//! Dense tensors, Hilbert–Schmidt and ℓ_p operator norms.
//!
//! A [`Tensor`] is an order-`j` array over `dim` coordinates stored row-major
//! (the last index varies fastest). [`SymTensor`] wraps a tensor whose entries
//! are invariant under index permutations.
//!
//! The operator norm with parameter `q ∈ [1, 2]` is
//!
//! ```text
//! |T|_op(q) = sup { Σ T[i1..ij] v1[i1] ⋯ vj[ij] : |v_l|_p = 1 },  p = q/(q-1)
//! ```
//!
//! For order ≥ 3 the supremum is NP-hard in general, so [`op_norm`] returns
//! a certified lower bound (the contraction against its witnesses) found by
//! alternating block maximization. [`op_norm_oracle`] is an exhaustive grid
//! search for tiny shapes, used as a reference in tests.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::norm_p;

/// Dense order-`j` tensor over `dim` coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorRepr", into = "TensorRepr")]
pub struct Tensor {
    order: usize,
    dim: usize,
    entries: Vec<f64>,
}

/// JSON layout `{order, dim, entries}` with a flat row-major entry array.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorRepr {
    pub order: usize,
    pub dim: usize,
    pub entries: Vec<f64>,
}

impl TryFrom<TensorRepr> for Tensor {
    type Error = Error;
    fn try_from(r: TensorRepr) -> Result<Self> {
        Tensor::from_entries(r.order, r.dim, r.entries)
    }
}

impl From<Tensor> for TensorRepr {
    fn from(t: Tensor) -> Self {
        TensorRepr {
            order: t.order,
            dim: t.dim,
            entries: t.entries,
        }
    }
}

/// Upper limit on `dim^order`, so that malformed input cannot request
/// absurd allocations.
pub const MAX_ENTRIES: usize = 1 << 24;

fn checked_len(order: usize, dim: usize) -> Result<usize> {
    if order == 0 || dim == 0 {
        return Err(Error::Shape(format!(
            "order and dim must be positive (got order={order}, dim={dim})"
        )));
    }
    let mut len: usize = 1;
    for _ in 0..order {
        len = len
            .checked_mul(dim)
            .filter(|&l| l <= MAX_ENTRIES)
            .ok_or_else(|| Error::CostGuard(format!("{dim}^{order} entries exceed {MAX_ENTRIES}")))?;
    }
    Ok(len)
}

impl Tensor {
    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        let len = checked_len(order, dim)?;
        Ok(Tensor {
            order,
            dim,
            entries: vec![0.0; len],
        })
    }

    pub fn from_entries(order: usize, dim: usize, entries: Vec<f64>) -> Result<Self> {
        let len = checked_len(order, dim)?;
        if entries.len() != len {
            return Err(Error::Shape(format!(
                "expected {len} entries for order {order}, dim {dim}; got {}",
                entries.len()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("tensor entries must be finite".into()));
        }
        Ok(Tensor { order, dim, entries })
    }

    /// Order-2 tensor from a row-major square matrix.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Shape("matrix must be square".into()));
        }
        let n = m.nrows();
        let mut e = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                e.push(m[(i, j)]);
            }
        }
        Tensor::from_entries(2, n, e)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut t = Tensor::zeros(2, dim)?;
        for i in 0..dim {
            t.entries[i * dim + i] = 1.0;
        }
        Ok(t)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    /// Multi-index of a flat position.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.order];
        for slot in (0..self.order).rev() {
            idx[slot] = flat % self.dim;
            flat /= self.dim;
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.entries[self.flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let k = self.flat_index(idx);
        self.entries[k] = v;
    }

    pub fn scale(&self, a: f64) -> Tensor {
        Tensor {
            order: self.order,
            dim: self.dim,
            entries: self.entries.iter().map(|x| a * x).collect(),
        }
    }

    /// Matrix view of an order-2 tensor.
    pub fn to_matrix(&self) -> Option<DMatrix<f64>> {
        (self.order == 2).then(|| DMatrix::from_row_slice(self.dim, self.dim, &self.entries))
    }

    /// Largest deviation between an entry and its index-sorted counterpart.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for flat in 0..self.entries.len() {
            let mut idx = self.multi_index(flat);
            idx.sort_unstable();
            let canon = self.entries[self.flat_index(&idx)];
            worst = worst.max((self.entries[flat] - canon).abs());
        }
        worst
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let scale = self.entries.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        self.asymmetry() <= tol * scale
    }

    /// Vector obtained by contracting every slot except `skip` against
    /// `vectors[slot]`.
    pub fn partial_contract(&self, vectors: &[Vec<f64>], skip: usize) -> Vec<f64> {
        let n = self.dim;
        let j = self.order;
        let mut g = vec![0.0; n];
        let mut idx = vec![0usize; j];
        for &t in &self.entries {
            if t != 0.0 {
                let mut prod = t;
                for (slot, &i) in idx.iter().enumerate() {
                    if slot != skip {
                        prod *= vectors[slot][i];
                    }
                }
                g[idx[skip]] += prod;
            }
            // odometer increment, last index fastest
            for slot in (0..j).rev() {
                idx[slot] += 1;
                if idx[slot] < n {
                    break;
                }
                idx[slot] = 0;
            }
        }
        g
    }
}

/// Tensor whose entries are invariant under permutation of the indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorRepr", into = "TensorRepr")]
pub struct SymTensor(Tensor);

/// Relative tolerance accepted by [`SymTensor::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

impl SymTensor {
    /// Validates symmetry (relative to the largest entry) and then stores the
    /// exactly symmetrized entries, so rounding noise never leaks through.
    pub fn new(order: usize, dim: usize, entries: Vec<f64>) -> Result<Self> {
        let t = Tensor::from_entries(order, dim, entries)?;
        if !t.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::InvalidParameter(format!(
                "tensor is not symmetric (max deviation {:e})",
                t.asymmetry()
            )));
        }
        Ok(Self::symmetrize(&t))
    }

    /// Average over all index permutations.
    pub fn symmetrize(t: &Tensor) -> Self {
        let mut groups: HashMap<Vec<usize>, (f64, usize)> = HashMap::new();
        for flat in 0..t.entries.len() {
            let mut idx = t.multi_index(flat);
            idx.sort_unstable();
            let e = groups.entry(idx).or_insert((0.0, 0));
            e.0 += t.entries[flat];
            e.1 += 1;
        }
        let mut out = t.clone();
        for flat in 0..t.entries.len() {
            let mut idx = t.multi_index(flat);
            idx.sort_unstable();
            let (s, c) = groups[&idx];
            out.entries[flat] = s / c as f64;
        }
        SymTensor(out)
    }

    /// Wraps a tensor whose entries are symmetric by construction.
    pub(crate) fn from_symmetric_unchecked(t: Tensor) -> Self {
        debug_assert!(t.asymmetry() == 0.0);
        SymTensor(t)
    }

    pub fn zeros(order: usize, dim: usize) -> Result<Self> {
        Ok(SymTensor(Tensor::zeros(order, dim)?))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Ok(SymTensor(Tensor::identity(dim)?))
    }

    pub fn as_tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor {
        self.0
    }

    pub fn scale(&self, a: f64) -> SymTensor {
        SymTensor(self.0.scale(a))
    }
}

impl std::ops::Deref for SymTensor {
    type Target = Tensor;
    fn deref(&self) -> &Tensor {
        &self.0
    }
}

impl TryFrom<TensorRepr> for SymTensor {
    type Error = Error;
    fn try_from(r: TensorRepr) -> Result<Self> {
        SymTensor::new(r.order, r.dim, r.entries)
    }
}

impl From<SymTensor> for TensorRepr {
    fn from(t: SymTensor) -> Self {
        t.0.into()
    }
}

/// Square root of the sum of squared entries.
pub fn hs_norm(t: &Tensor) -> f64 {
    t.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Σ T[i1..ij] v1[i1] ⋯ vj[ij].
pub fn contract(t: &Tensor, vectors: &[Vec<f64>]) -> Result<f64> {
    if vectors.len() != t.order {
        return Err(Error::Shape(format!(
            "expected {} vectors, got {}",
            t.order,
            vectors.len()
        )));
    }
    if let Some(v) = vectors.iter().find(|v| v.len() != t.dim) {
        return Err(Error::Shape(format!(
            "vector of length {} does not match dim {}",
            v.len(),
            t.dim
        )));
    }
    let g = t.partial_contract(vectors, t.order - 1);
    Ok(g.iter().zip(&vectors[t.order - 1]).map(|(a, b)| a * b).sum())
}

/// Result of an operator-norm computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpNormResult {
    /// Best value found; always the contraction against `witnesses`.
    pub value: f64,
    pub witnesses: Vec<Vec<f64>>,
    pub converged: bool,
    pub restarts_used: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpNormOptions {
    pub restarts: usize,
    pub tol: f64,
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for OpNormOptions {
    fn default() -> Self {
        OpNormOptions {
            restarts: 20,
            tol: 1e-10,
            max_sweeps: 1000,
            seed: 0x5eed,
        }
    }
}

/// Hölder conjugate `p = q/(q-1)`, infinite at `q = 1`.
pub fn conjugate_exponent(q: f64) -> f64 {
    if q == 1.0 {
        f64::INFINITY
    } else {
        q / (q - 1.0)
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(1.0..=2.0).contains(&q) {
        return Err(Error::InvalidParameter(format!("q must lie in [1, 2], got {q}")));
    }
    Ok(())
}

/// Maximizer of `<g, v>` over the unit ℓ_p sphere and the maximum `|g|_q`.
/// Returns `None` when `g` vanishes.
fn dual_maximizer(g: &[f64], q: f64) -> Option<(Vec<f64>, f64)> {
    let gq = norm_p(g, q);
    if gq == 0.0 {
        return None;
    }
    let v = if q == 1.0 {
        g.iter().map(|&x| if x < 0.0 { -1.0 } else { 1.0 }).collect()
    } else if q == 2.0 {
        g.iter().map(|x| x / gq).collect()
    } else {
        let scale = gq.powf(q - 1.0);
        g.iter().map(|&x| x.signum() * x.abs().powf(q - 1.0) / scale).collect()
    };
    Some((v, gq))
}

fn random_start<R: Rng>(rng: &mut R, dim: usize, q: f64) -> Vec<f64> {
    if q == 1.0 {
        return (0..dim)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
    }
    loop {
        let z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm_p(&z, conjugate_exponent(q));
        if n > 1e-300 {
            return z.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Operator norm `|T|_op(q)`.
///
/// Order 1 is the dual norm `|T|_q`. Order 2 with `q = 2` is the largest
/// singular value, computed exactly. Everything else runs alternating block
/// maximization from `opts.restarts` random starts; every block update is the
/// closed-form dual maximizer, so the objective is monotone. The result is a
/// lower bound; `converged = false` means the sweep limit was hit.
pub fn op_norm(t: &Tensor, q: f64, opts: &OpNormOptions) -> Result<OpNormResult> {
    check_q(q)?;
    if opts.restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be at least 1".into()));
    }
    let n = t.dim;
    let p = conjugate_exponent(q);
    if t.order == 1 {
        let (w, val) = dual_maximizer(&t.entries, q).unwrap_or_else(|| (unit_vector(n, p), 0.0));
        return Ok(OpNormResult {
            value: val,
            witnesses: vec![w],
            converged: true,
            restarts_used: 0,
        });
    }
    if t.order == 2 && q == 2.0 {
        return Ok(spectral_norm(t));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<OpNormResult> = None;
    for _ in 0..opts.restarts {
        let mut vs: Vec<Vec<f64>> = (0..t.order).map(|_| random_start(&mut rng, n, q)).collect();
        let mut value = f64::NEG_INFINITY;
        let mut converged = false;
        for _ in 0..opts.max_sweeps {
            let mut current = 0.0;
            for slot in 0..t.order {
                let g = t.partial_contract(&vs, slot);
                match dual_maximizer(&g, q) {
                    Some((v, val)) => {
                        vs[slot] = v;
                        current = val;
                    }
                    None => current = 0.0,
                }
            }
            let improved = current - value;
            value = current;
            if improved.is_finite() && improved <= opts.tol * value.abs().max(1e-300) {
                converged = true;
                break;
            }
        }
        let certified = contract(t, &vs)?;
        let cand = OpNormResult {
            value: certified.max(0.0),
            witnesses: vs,
            converged,
            restarts_used: opts.restarts,
        };
        if best.as_ref().map_or(true, |b| cand.value > b.value) {
            best = Some(cand);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

fn unit_vector(n: usize, p: f64) -> Vec<f64> {
    if p.is_infinite() {
        return vec![1.0; n];
    }
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    v
}

fn spectral_norm(t: &Tensor) -> OpNormResult {
    let n = t.dim;
    let m = t.to_matrix().expect("order 2");
    let svd = m.svd(true, true);
    let (k, &s) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let left: Vec<f64> = (0..n).map(|i| u[(i, k)]).collect();
    let right: Vec<f64> = (0..n).map(|i| vt[(k, i)]).collect();
    OpNormResult {
        value: s,
        witnesses: vec![left, right],
        converged: true,
        restarts_used: 0,
    }
}

/// Supremum of `T(v, …, v)` in absolute value over the Euclidean unit
/// sphere, by the shifted symmetric higher-order power method. For a
/// symmetric tensor this equals `|T|_op(2)`.
pub fn symmetric_op_norm(t: &SymTensor, restarts: usize, seed: u64) -> f64 {
    let j = t.order();
    let n = t.dim();
    if j == 1 {
        return hs_norm(t);
    }
    let shift = (j - 1) as f64 * hs_norm(t);
    if shift == 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for sign in [1.0, -1.0] {
        for _ in 0..restarts.max(1) {
            let mut x = random_start(&mut rng, n, 2.0);
            let mut lambda = f64::NEG_INFINITY;
            for _ in 0..20_000 {
                let vs = vec![x.clone(); j];
                let g = t.partial_contract(&vs, j - 1);
                let val = sign * g.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
                let y: Vec<f64> = g.iter().zip(&x).map(|(gi, xi)| sign * gi + shift * xi).collect();
                let ny = crate::util::norm2(&y);
                if ny == 0.0 {
                    break;
                }
                x = y.into_iter().map(|v| v / ny).collect();
                if (val - lambda).abs() <= 1e-15 * val.abs().max(1.0) {
                    lambda = val;
                    break;
                }
                lambda = val;
            }
            best = best.max(lambda);
        }
    }
    best
}

/// Angular grid points per vector above which the oracle refuses to run.
pub const ORACLE_MAX_EVALUATIONS: u64 = 50_000_000;

/// Exhaustive reference value for `|T|_op(q)` on tiny shapes
/// (`dim ≤ 4`, `order ≤ 3`).
///
/// The first `order - 1` vectors range over a hyperspherical angle grid
/// mapped onto the ℓ_p sphere (sign vertices of the cube when `q = 1`,
/// which is exact); the last vector is eliminated in closed form. The best
/// grid points are then polished by compass search on the angles.
pub fn op_norm_oracle(t: &Tensor, q: f64, grid_per_angle: usize) -> Result<f64> {
    check_q(q)?;
    if t.dim > 4 || t.order > 3 {
        return Err(Error::CostGuard(format!(
            "oracle limited to dim <= 4 and order <= 3 (got dim={}, order={})",
            t.dim, t.order
        )));
    }
    if grid_per_angle < 2 {
        return Err(Error::InvalidParameter("grid_per_angle must be at least 2".into()));
    }
    let n = t.dim;
    let free = t.order - 1;
    if free == 0 {
        return Ok(norm_p(&t.entries, q));
    }
    let objective = |vs: &mut Vec<Vec<f64>>| -> f64 {
        let g = t.partial_contract(vs, t.order - 1);
        norm_p(&g, q)
    };

    if q == 1.0 {
        // the objective is convex in each free vector, so the cube's
        // vertices suffice
        let verts: Vec<Vec<f64>> = (0..1usize << n)
            .map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect())
            .collect();
        let mut best: f64 = 0.0;
        let mut vs = vec![vec![0.0; n]; t.order];
        let total = verts.len().pow(free as u32);
        for combo in 0..total {
            let mut c = combo;
            for slot in vs.iter_mut().take(free) {
                *slot = verts[c % verts.len()].clone();
                c /= verts.len();
            }
            best = best.max(objective(&mut vs));
        }
        return Ok(best);
    }

    let p = conjugate_exponent(q);
    let angles_per_vec = n - 1;
    let total_angles = angles_per_vec * free;
    if total_angles == 0 {
        // n = 1: every unit vector is ±1
        let mut vs = vec![vec![1.0]; t.order];
        return Ok(objective(&mut vs));
    }
    let evals = (grid_per_angle as u64)
        .checked_pow(total_angles as u32)
        .filter(|&e| e <= ORACLE_MAX_EVALUATIONS)
        .ok_or_else(|| {
            Error::CostGuard(format!(
                "{grid_per_angle}^{total_angles} grid points exceed {ORACLE_MAX_EVALUATIONS}"
            ))
        })?;

    let ranges: Vec<f64> = (0..total_angles)
        .map(|a| {
            if a % angles_per_vec == angles_per_vec - 1 {
                2.0 * std::f64::consts::PI
            } else {
                std::f64::consts::PI
            }
        })
        .collect();
    let grid_value = |a: usize, k: usize| -> f64 {
        if a % angles_per_vec == angles_per_vec - 1 {
            ranges[a] * k as f64 / grid_per_angle as f64
        } else {
            ranges[a] * k as f64 / (grid_per_angle - 1) as f64
        }
    };
    let eval_angles = |angles: &[f64], vs: &mut Vec<Vec<f64>>| -> f64 {
        for (slot, chunk) in angles.chunks(angles_per_vec).enumerate() {
            vs[slot] = lp_sphere_point(chunk, p);
        }
        objective(vs)
    };

    const KEEP: usize = 8;
    let mut top: Vec<(f64, Vec<f64>)> = Vec::with_capacity(KEEP + 1);
    let mut vs = vec![vec![0.0; n]; t.order];
    let mut angles = vec![0.0; total_angles];
    for combo in 0..evals {
        let mut c = combo;
        for (a, ang) in angles.iter_mut().enumerate() {
            *ang = grid_value(a, (c % grid_per_angle as u64) as usize);
            c /= grid_per_angle as u64;
        }
        let val = eval_angles(&angles, &mut vs);
        if top.len() < KEEP || val > top[top.len() - 1].0 {
            top.push((val, angles.clone()));
            top.sort_by(|a, b| b.0.total_cmp(&a.0));
            top.truncate(KEEP);
        }
    }

    let mut best = top.first().map_or(0.0, |x| x.0);
    for (val0, start) in top {
        let mut x = start;
        let mut val = val0;
        let mut step = 2.0 * std::f64::consts::PI / grid_per_angle as f64;
        let mut iters = 0;
        while step > 1e-11 && iters < 200_000 {
            let mut moved = false;
            for a in 0..total_angles {
                for dir in [1.0, -1.0] {
                    let old = x[a];
                    x[a] = old + dir * step;
                    let cand = eval_angles(&x, &mut vs);
                    iters += 1;
                    if cand > val {
                        val = cand;
                        moved = true;
                    } else {
                        x[a] = old;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        best = best.max(val);
    }
    Ok(best)
}

/// Point on the Euclidean sphere from hyperspherical angles, rescaled onto
/// the unit ℓ_p sphere.
fn lp_sphere_point(angles: &[f64], p: f64) -> Vec<f64> {
    let n = angles.len() + 1;
    let mut x = vec![0.0; n];
    let mut s = 1.0;
    for (i, &a) in angles.iter().enumerate() {
        x[i] = s * a.cos();
        s *= a.sin();
    }
    x[n - 1] = s;
    if p != 2.0 {
        let r = norm_p(&x, p);
        for v in &mut x {
            *v /= r;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(order: usize, dim: usize) -> Tensor {
        let len = dim.pow(order as u32);
        Tensor::from_entries(order, dim, vec![1.0; len]).unwrap()
    }

    #[test]
    fn hs_norm_examples() {
        assert!((hs_norm(&Tensor::identity(3).unwrap()) - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(hs_norm(&Tensor::zeros(3, 2).unwrap()), 0.0);
        let t = Tensor::from_entries(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!((hs_norm(&t) - 10f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn contract_examples() {
        let id = Tensor::identity(2).unwrap();
        assert_eq!(contract(&id, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(), 0.0);
        assert_eq!(contract(&id, &[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap(), 1.0);
        let t = ones(3, 2);
        assert_eq!(contract(&t, &vec![vec![1.0, 1.0]; 3]).unwrap(), 8.0);
    }

    #[test]
    fn contract_shape_errors() {
        let id = Tensor::identity(2).unwrap();
        assert!(matches!(contract(&id, &[vec![1.0, 0.0]]), Err(Error::Shape(_))));
        assert!(matches!(
            contract(&id, &[vec![1.0, 0.0], vec![1.0]]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn op_norm_examples() {
        let d = Tensor::from_entries(2, 2, vec![1.0, 0.0, 0.0, -2.0]).unwrap();
        let r = op_norm(&d, 2.0, &OpNormOptions::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);

        let r = op_norm(&ones(3, 2), 2.0, &OpNormOptions::default()).unwrap();
        assert!((r.value - 2.0 * 2f64.sqrt()).abs() < 1e-9, "{}", r.value);
        assert!(r.converged);

        let r = op_norm(&ones(2, 2), 1.0, &OpNormOptions::default()).unwrap();
        assert!((r.value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn op_norm_rejects_bad_q() {
        let id = Tensor::identity(2).unwrap();
        assert!(op_norm(&id, 3.0, &OpNormOptions::default()).is_err());
        assert!(op_norm(&id, 0.5, &OpNormOptions::default()).is_err());
    }

    #[test]
    fn witnesses_reproduce_value() {
        let t = SymTensor::symmetrize(
            &Tensor::from_entries(3, 3, (0..27).map(|i| ((i * 7) % 11) as f64 - 5.0).collect()).unwrap(),
        );
        for q in [1.0, 1.5, 2.0] {
            let r = op_norm(&t, q, &OpNormOptions::default()).unwrap();
            let c = contract(&t, &r.witnesses).unwrap();
            assert!((c - r.value).abs() <= 1e-12 * r.value.max(1.0));
            let p = conjugate_exponent(q);
            for w in &r.witnesses {
                assert!((norm_p(w, p) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oracle_examples() {
        let d = Tensor::from_entries(2, 2, vec![1.0, 0.0, 0.0, -2.0]).unwrap();
        assert!((op_norm_oracle(&d, 2.0, 720).unwrap() - 2.0).abs() < 1e-4);
        let v = op_norm_oracle(&ones(3, 2), 2.0, 90).unwrap();
        assert!((v - 2.0 * 2f64.sqrt()).abs() < 1e-3);
        assert_eq!(op_norm_oracle(&Tensor::zeros(3, 2).unwrap(), 2.0, 30).unwrap(), 0.0);
        assert!((op_norm_oracle(&ones(2, 2), 1.0, 2).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_cost_guard() {
        assert!(matches!(
            op_norm_oracle(&Tensor::zeros(2, 5).unwrap(), 2.0, 10),
            Err(Error::CostGuard(_))
        ));
        assert!(matches!(
            op_norm_oracle(&Tensor::zeros(4, 2).unwrap(), 2.0, 10),
            Err(Error::CostGuard(_))
        ));
    }

    #[test]
    fn sym_tensor_rejects_asymmetric() {
        assert!(SymTensor::new(2, 2, vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(SymTensor::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).is_ok());
    }

    #[test]
    fn symmetrize_averages_orbits() {
        let t = Tensor::from_entries(2, 2, vec![0.0, 1.0, 3.0, 0.0]).unwrap();
        let s = SymTensor::symmetrize(&t);
        assert_eq!(s.entries(), &[0.0, 2.0, 2.0, 0.0]);
    }

    #[test]
    fn json_roundtrip_layout() {
        let s = r#"{"order":2,"dim":2,"entries":[1,2,2,1]}"#;
        let t: SymTensor = serde_json::from_str(s).unwrap();
        assert_eq!(t.get(&[0, 1]), 2.0);
        assert_eq!(
            serde_json::to_string(&t).unwrap(),
            r#"{"order":2,"dim":2,"entries":[1.0,2.0,2.0,1.0]}"#
        );
        assert!(serde_json::from_str::<SymTensor>(r#"{"order":2,"dim":2,"entries":[1,2,3,1]}"#).is_err());
        assert!(serde_json::from_str::<Tensor>(r#"{"order":2,"dim":2,"entries":[1,2,3]}"#).is_err());
        assert!(serde_json::from_str::<Tensor>(r#"{"order":64,"dim":64,"entries":[]}"#).is_err());
    }

    #[test]
    fn order_one_is_dual_norm() {
        let t = Tensor::from_entries(1, 3, vec![1.0, -2.0, 2.0]).unwrap();
        let r = op_norm(&t, 1.0, &OpNormOptions::default()).unwrap();
        assert_eq!(r.value, 5.0);
        let r = op_norm(&t, 2.0, &OpNormOptions::default()).unwrap();
        assert!((r.value - 3.0).abs() < 1e-15);
    }
}
