//! Polynomial test functions with exact derivative tensors, and first/second
//! order intrinsic calculus on spheres, ℓ_p spheres, Stiefel and Grassmann
//! manifolds.
//!
//! Matrix-valued points are vectorized column-major: `A[i, j]` lives at
//! `v[i + j * n]`. Polynomials on those manifolds are polynomials in the
//! vectorized entries.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{SymTensor, Tensor};
use crate::util::{dot, norm2, norm_p};

pub const MAX_VARS: usize = 1 << 16;
pub const MAX_EXPONENT: u32 = 256;

/// Tolerance for accepting a point as lying on a manifold.
pub const ON_MANIFOLD_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub exps: Vec<u32>,
    pub coef: f64,
}

/// Multivariate polynomial in canonical form: monomials sorted by exponent,
/// no duplicates, no zero coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyRepr", into = "PolyRepr")]
pub struct PolyFunction {
    nvars: usize,
    monomials: Vec<Monomial>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyRepr {
    pub nvars: usize,
    pub monomials: Vec<Monomial>,
}

impl TryFrom<PolyRepr> for PolyFunction {
    type Error = Error;
    fn try_from(r: PolyRepr) -> Result<Self> {
        PolyFunction::new(r.nvars, r.monomials)
    }
}

impl From<PolyFunction> for PolyRepr {
    fn from(p: PolyFunction) -> Self {
        PolyRepr {
            nvars: p.nvars,
            monomials: p.monomials,
        }
    }
}

fn check_len(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::Shape(format!("point has length {}, expected {n}", x.len())));
    }
    Ok(())
}

fn falling(e: u32, k: u32) -> f64 {
    (0..k).map(|i| (e - i) as f64).product()
}

impl PolyFunction {
    pub fn new(nvars: usize, monomials: Vec<Monomial>) -> Result<Self> {
        if nvars > MAX_VARS {
            return Err(Error::CostGuard(format!("{nvars} variables exceed {MAX_VARS}")));
        }
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for m in monomials {
            if m.exps.len() != nvars {
                return Err(Error::Shape(format!(
                    "monomial has {} exponents, expected {nvars}",
                    m.exps.len()
                )));
            }
            if !m.coef.is_finite() {
                return Err(Error::InvalidParameter("coefficients must be finite".into()));
            }
            if m.exps.iter().any(|&e| e > MAX_EXPONENT) {
                return Err(Error::InvalidParameter(format!("exponents above {MAX_EXPONENT}")));
            }
            *merged.entry(m.exps).or_insert(0.0) += m.coef;
        }
        let monomials = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(exps, coef)| Monomial { exps, coef })
            .collect();
        Ok(PolyFunction { nvars, monomials })
    }

    pub fn zero(nvars: usize) -> Self {
        PolyFunction {
            nvars,
            monomials: Vec::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        PolyFunction::new(
            nvars,
            vec![Monomial {
                exps: vec![0; nvars],
                coef: c,
            }],
        )
        .expect("valid constant")
    }

    /// `x ↦ <a, x>`.
    pub fn linear(a: &[f64]) -> Self {
        let n = a.len();
        let monos = a
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mut exps = vec![0; n];
                exps[i] = 1;
                Monomial { exps, coef: c }
            })
            .collect();
        PolyFunction::new(n, monos).expect("valid linear form")
    }

    /// `x ↦ xᵀ A x`.
    pub fn quadratic_form(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Shape("quadratic form needs a square matrix".into()));
        }
        let n = a.nrows();
        let mut monos = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut exps = vec![0; n];
                exps[i] += 1;
                exps[j] += 1;
                monos.push(Monomial { exps, coef: a[(i, j)] });
            }
        }
        PolyFunction::new(n, monos)
    }

    /// Random polynomial with `terms` monomials of total degree at most
    /// `degree` and standard normal-ish coefficients in [-1, 1].
    pub fn random<R: Rng>(rng: &mut R, nvars: usize, degree: u32, terms: usize) -> Self {
        let monos = (0..terms)
            .map(|_| {
                let mut exps = vec![0u32; nvars];
                let deg = rng.random_range(0..=degree);
                for _ in 0..deg {
                    exps[rng.random_range(0..nvars)] += 1;
                }
                Monomial {
                    exps,
                    coef: rng.random_range(-1.0..1.0),
                }
            })
            .collect();
        PolyFunction::new(nvars, monos).expect("valid random polynomial")
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    /// Maximum total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.monomials
            .iter()
            .map(|m| m.exps.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, a: f64) -> Self {
        PolyFunction::new(
            self.nvars,
            self.monomials
                .iter()
                .map(|m| Monomial {
                    exps: m.exps.clone(),
                    coef: a * m.coef,
                })
                .collect(),
        )
        .expect("scaling preserves validity")
    }

    pub fn add(&self, other: &PolyFunction) -> Result<Self> {
        if self.nvars != other.nvars {
            return Err(Error::Shape("polynomials over different variable counts".into()));
        }
        PolyFunction::new(
            self.nvars,
            self.monomials.iter().chain(&other.monomials).cloned().collect(),
        )
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_len(x, self.nvars)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.monomials
            .iter()
            .map(|m| m.coef * m.exps.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product::<f64>())
            .sum()
    }

    /// Symbolic partial derivative in variable `i`.
    pub fn partial(&self, i: usize) -> Self {
        let monos = self
            .monomials
            .iter()
            .filter(|m| m.exps[i] > 0)
            .map(|m| {
                let mut exps = m.exps.clone();
                exps[i] -= 1;
                Monomial {
                    exps,
                    coef: m.coef * m.exps[i] as f64,
                }
            })
            .collect();
        PolyFunction::new(self.nvars, monos).expect("derivative is valid")
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(x, self.nvars)?;
        Ok(self.gradient_unchecked(x))
    }

    fn gradient_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.nvars];
        for m in &self.monomials {
            for i in 0..self.nvars {
                if m.exps[i] == 0 {
                    continue;
                }
                let mut v = m.coef * m.exps[i] as f64;
                for (k, (&e, &xk)) in m.exps.iter().zip(x).enumerate() {
                    let e = if k == i { e - 1 } else { e };
                    v *= xk.powi(e as i32);
                }
                g[i] += v;
            }
        }
        g
    }

    /// Tensor of all `j`-fold partial derivatives at `x`.
    pub fn derivative_tensor(&self, j: usize, x: &[f64]) -> Result<SymTensor> {
        check_len(x, self.nvars)?;
        if j == 0 {
            return Err(Error::InvalidParameter("derivative order must be at least 1".into()));
        }
        let mut t = Tensor::zeros(j, self.nvars)?;
        if j as u32 > self.degree() {
            return Ok(SymTensor::from_symmetric_unchecked(t));
        }
        let n = self.nvars;
        let mut counts = vec![0u32; n];
        for flat in 0..t.entries().len() {
            counts.iter_mut().for_each(|c| *c = 0);
            for i in t.multi_index(flat) {
                counts[i] += 1;
            }
            let mut val = 0.0;
            for m in &self.monomials {
                if m.exps.iter().zip(&counts).any(|(e, c)| e < c) {
                    continue;
                }
                let mut v = m.coef;
                for k in 0..n {
                    if counts[k] > 0 {
                        v *= falling(m.exps[k], counts[k]);
                    }
                    v *= x[k].powi((m.exps[k] - counts[k]) as i32);
                }
                val += v;
            }
            t.entries_mut()[flat] = val;
        }
        Ok(SymTensor::from_symmetric_unchecked(t))
    }
}

/// Manifold on which a point lives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManifoldDescriptor {
    Euclidean { n: usize },
    Sphere { n: usize },
    LpSphere { n: usize, p: f64 },
    Stiefel { n: usize, k: usize },
    Grassmann { n: usize, k: usize },
}

impl ManifoldDescriptor {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            Self::Euclidean { n: 0 } => bad("n must be positive".into()),
            Self::Sphere { n } if n < 2 => bad(format!("sphere needs n >= 2, got {n}")),
            Self::LpSphere { n, p } if n < 2 || !(p >= 2.0) || !p.is_finite() => {
                bad(format!("l_p sphere needs n >= 2 and finite p >= 2, got n={n}, p={p}"))
            }
            Self::Stiefel { n, k } | Self::Grassmann { n, k } if n < 3 || k == 0 || k >= n => {
                bad(format!("need 1 <= k < n and n >= 3, got n={n}, k={k}"))
            }
            _ => Ok(()),
        }
    }

    /// Length of a vectorized point.
    pub fn ambient_dim(&self) -> usize {
        match *self {
            Self::Euclidean { n } | Self::Sphere { n } | Self::LpSphere { n, .. } => n,
            Self::Stiefel { n, k } => n * k,
            Self::Grassmann { n, .. } => n * n,
        }
    }

    /// Fails with [`Error::OffManifold`] unless `point` lies on the manifold
    /// to within [`ON_MANIFOLD_TOL`].
    pub fn check_point(&self, point: &[f64]) -> Result<()> {
        self.validate()?;
        check_len(point, self.ambient_dim())?;
        let off = |what: &str, dev: f64| {
            if dev.is_finite() && dev <= ON_MANIFOLD_TOL {
                Ok(())
            } else {
                Err(Error::OffManifold(format!("{what} off by {dev:e}")))
            }
        };
        match *self {
            Self::Euclidean { .. } => {
                if point.iter().all(|x| x.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::OffManifold("non-finite coordinate".into()))
                }
            }
            Self::Sphere { .. } => off("|θ|", (norm2(point) - 1.0).abs()),
            Self::LpSphere { p, .. } => off("|θ|_p", (norm_p(point, p) - 1.0).abs()),
            Self::Stiefel { n, k } => {
                let a = DMatrix::from_column_slice(n, k, point);
                let g = a.transpose() * &a - DMatrix::identity(k, k);
                off("AᵀA - I", g.amax())
            }
            Self::Grassmann { n, k } => {
                let p = DMatrix::from_column_slice(n, n, point);
                off("P - Pᵀ", (&p - p.transpose()).amax())?;
                off("P² - P", (&p * &p - &p).amax())?;
                off("trace P - k", (p.trace() - k as f64).abs())
            }
        }
    }
}

/// `sign(θ_i)|θ_i|^{p-1}`, the normal direction of the ℓ_p sphere.
pub fn lp_normal(theta: &[f64], p: f64) -> Vec<f64> {
    theta.iter().map(|&t| t.signum() * t.abs().powf(p - 1.0)).collect()
}

/// Orthogonal projection of an ambient vector onto the tangent space at
/// `point`.
pub fn tangent_project(m: &ManifoldDescriptor, point: &[f64], ambient: &[f64]) -> Result<Vec<f64>> {
    m.check_point(point)?;
    check_len(ambient, m.ambient_dim())?;
    Ok(project_unchecked(m, point, ambient))
}

fn project_unchecked(m: &ManifoldDescriptor, point: &[f64], v: &[f64]) -> Vec<f64> {
    match *m {
        ManifoldDescriptor::Euclidean { .. } => v.to_vec(),
        ManifoldDescriptor::Sphere { .. } => {
            let s = dot(v, point);
            v.iter().zip(point).map(|(a, b)| a - s * b).collect()
        }
        ManifoldDescriptor::LpSphere { p, .. } => {
            let w = lp_normal(point, p);
            let s = dot(v, &w) / dot(&w, &w);
            v.iter().zip(&w).map(|(a, b)| a - s * b).collect()
        }
        ManifoldDescriptor::Stiefel { n, k } => {
            let a = DMatrix::from_column_slice(n, k, point);
            let mm = DMatrix::from_column_slice(n, k, v);
            let atm = a.transpose() * &mm;
            let sym = (&atm + atm.transpose()) * 0.5;
            (mm - &a * sym).as_slice().to_vec()
        }
        ManifoldDescriptor::Grassmann { n, .. } => {
            let p = DMatrix::from_column_slice(n, n, point);
            let mm = DMatrix::from_column_slice(n, n, v);
            let s = (&mm + mm.transpose()) * 0.5;
            let ps = &p * &s;
            (&ps + &s * &p - 2.0 * &ps * &p).as_slice().to_vec()
        }
    }
}

/// Intrinsic gradient: the tangent projection of the Euclidean gradient.
pub fn intrinsic_gradient(m: &ManifoldDescriptor, f: &PolyFunction, point: &[f64]) -> Result<Vec<f64>> {
    m.check_point(point)?;
    check_len(point, f.nvars())?;
    let g = f.gradient_unchecked(point);
    Ok(project_unchecked(m, point, &g))
}

/// Intrinsic Hessian on the unit sphere, `P B P` with
/// `B = f''(θ) - <θ, ∇f(θ)> I` and `P = I - θθᵀ`.
pub fn sphere_hessian(f: &PolyFunction, theta: &[f64]) -> Result<SymTensor> {
    let n = theta.len();
    ManifoldDescriptor::Sphere { n }.check_point(theta)?;
    check_len(theta, f.nvars())?;
    let b = sphere_b_matrix(f, theta)?;
    let th = nalgebra::DVector::from_column_slice(theta);
    let proj = DMatrix::identity(n, n) - &th * th.transpose();
    let h = &proj * b * &proj;
    Ok(SymTensor::symmetrize(&Tensor::from_matrix(&h)?))
}

/// The matrix `B = f''(θ) - <θ, ∇f(θ)> I` whose projection is the
/// spherical Hessian.
pub fn sphere_b_matrix(f: &PolyFunction, theta: &[f64]) -> Result<DMatrix<f64>> {
    let n = theta.len();
    let hess = f.derivative_tensor(2, theta)?;
    let radial = dot(theta, &f.gradient_unchecked(theta));
    let mut b = hess.to_matrix().expect("order 2");
    for i in 0..n {
        b[(i, i)] -= radial;
    }
    Ok(b)
}

/// Sum of `coef · x^exps · r^rpow` with `r = |x|`.
#[derive(Clone, Debug, Default)]
struct RadialPoly {
    terms: BTreeMap<(Vec<u32>, i32), f64>,
}

impl RadialPoly {
    /// 0-homogeneous extension `f(x/|x|)` of a polynomial.
    fn homogenize(f: &PolyFunction) -> Self {
        let mut terms = BTreeMap::new();
        for m in f.monomials() {
            let deg: u32 = m.exps.iter().sum();
            terms.insert((m.exps.clone(), -(deg as i32)), m.coef);
        }
        RadialPoly { terms }
    }

    /// `r · ∂_i G`, which is again 0-homogeneous when `G` is.
    fn spherical_derivative(&self, i: usize) -> Self {
        let mut out: BTreeMap<(Vec<u32>, i32), f64> = BTreeMap::new();
        for ((exps, k), &c) in &self.terms {
            if exps[i] > 0 {
                let mut e = exps.clone();
                e[i] -= 1;
                *out.entry((e, k + 1)).or_insert(0.0) += c * exps[i] as f64;
            }
            if *k != 0 {
                let mut e = exps.clone();
                e[i] += 1;
                *out.entry((e, k - 1)).or_insert(0.0) += c * *k as f64;
            }
        }
        out.retain(|_, c| *c != 0.0);
        RadialPoly { terms: out }
    }

    fn eval(&self, x: &[f64], r: f64) -> f64 {
        self.terms
            .iter()
            .map(|((exps, k), c)| {
                c * r.powi(*k) * exps.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product::<f64>()
            })
            .sum()
    }
}

/// Iterated spherical partial derivative `D_{i1 … ij} f(θ)`, where
/// `D_{ij} f = D_i (D_j f)`.
pub fn spherical_partial(f: &PolyFunction, indices: &[usize], theta: &[f64]) -> Result<f64> {
    let n = theta.len();
    ManifoldDescriptor::Sphere { n }.check_point(theta)?;
    check_len(theta, f.nvars())?;
    if indices.is_empty() {
        return Err(Error::InvalidParameter("need at least one index".into()));
    }
    if let Some(&i) = indices.iter().find(|&&i| i >= n) {
        return Err(Error::Shape(format!("index {i} out of range for n={n}")));
    }
    let mut g = RadialPoly::homogenize(f);
    for &i in indices.iter().rev() {
        g = g.spherical_derivative(i);
    }
    Ok(g.eval(theta, norm2(theta)))
}

/// Tensor of all order-`j` spherical partial derivatives. Not symmetric in
/// general, so a plain [`Tensor`] is returned.
pub fn spherical_derivative_tensor(f: &PolyFunction, j: usize, theta: &[f64]) -> Result<Tensor> {
    let n = theta.len();
    ManifoldDescriptor::Sphere { n }.check_point(theta)?;
    check_len(theta, f.nvars())?;
    if j == 0 {
        return Err(Error::InvalidParameter("derivative order must be at least 1".into()));
    }
    let mut t = Tensor::zeros(j, n)?;
    let r = norm2(theta);
    let mut idx = vec![0usize; j];
    fill_spherical(&RadialPoly::homogenize(f), j, theta, r, &mut idx, &mut t);
    Ok(t)
}

fn fill_spherical(g: &RadialPoly, remaining: usize, theta: &[f64], r: f64, idx: &mut [usize], t: &mut Tensor) {
    if remaining == 0 {
        let v = g.eval(theta, r);
        t.set(idx, v);
        return;
    }
    // slot `remaining - 1` is applied next (innermost first)
    for i in 0..theta.len() {
        idx[remaining - 1] = i;
        let h = g.spherical_derivative(i);
        fill_spherical(&h, remaining - 1, theta, r, idx, t);
    }
}

/// Smooth curve through `point` with initial velocity `tangent`, evaluated at
/// time `t`. Great circles on the sphere; normalization on ℓ_p spheres;
/// polar retraction on Stiefel; nearest rank-k projector on Grassmann.
pub fn retract(m: &ManifoldDescriptor, point: &[f64], tangent: &[f64], t: f64) -> Result<Vec<f64>> {
    m.check_point(point)?;
    check_len(tangent, m.ambient_dim())?;
    let moved: Vec<f64> = point.iter().zip(tangent).map(|(x, u)| x + t * u).collect();
    Ok(match *m {
        ManifoldDescriptor::Euclidean { .. } => moved,
        ManifoldDescriptor::Sphere { .. } => {
            let s = norm2(tangent);
            if s == 0.0 {
                return Ok(point.to_vec());
            }
            let (sn, cs) = (t * s).sin_cos();
            point.iter().zip(tangent).map(|(x, u)| cs * x + sn * u / s).collect()
        }
        ManifoldDescriptor::LpSphere { p, .. } => {
            let r = norm_p(&moved, p);
            moved.into_iter().map(|x| x / r).collect()
        }
        ManifoldDescriptor::Stiefel { n, k } => {
            let y = DMatrix::from_column_slice(n, k, &moved);
            let g = y.transpose() * &y;
            let eig = g.symmetric_eigen();
            let inv_sqrt = &eig.eigenvectors
                * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
                * eig.eigenvectors.transpose();
            (y * inv_sqrt).as_slice().to_vec()
        }
        ManifoldDescriptor::Grassmann { n, k } => {
            let y = DMatrix::from_column_slice(n, n, &moved);
            let s = (&y + y.transpose()) * 0.5;
            let eig = s.symmetric_eigen();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let mut p = DMatrix::zeros(n, n);
            for &c in order.iter().take(k) {
                let v = eig.eigenvectors.column(c);
                p += v * v.transpose();
            }
            p.as_slice().to_vec()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mono(exps: &[u32], coef: f64) -> Monomial {
        Monomial {
            exps: exps.to_vec(),
            coef,
        }
    }

    #[test]
    fn eval_examples() {
        let f = PolyFunction::new(2, vec![mono(&[1, 1], 1.0)]).unwrap();
        assert_eq!(f.eval(&[2.0, 3.0]).unwrap(), 6.0);
        let g = PolyFunction::new(2, vec![mono(&[2, 0], 1.0), mono(&[0, 0], -1.0)]).unwrap();
        assert_eq!(g.eval(&[1.0, 7.0]).unwrap(), 0.0);
        assert_eq!(PolyFunction::zero(3).eval(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!(matches!(f.eval(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn canonical_form_merges_and_drops() {
        let f = PolyFunction::new(
            1,
            vec![mono(&[1], 1.0), mono(&[1], -1.0), mono(&[2], 2.0), mono(&[2], 1.0)],
        )
        .unwrap();
        assert_eq!(f.monomials(), &[mono(&[2], 3.0)]);
        assert_eq!(f.degree(), 2);
        assert_eq!(PolyFunction::zero(2).degree(), 0);
    }

    #[test]
    fn derivative_tensor_examples() {
        let f = PolyFunction::new(2, vec![mono(&[1, 1], 1.0)]).unwrap();
        let t = f.derivative_tensor(2, &[5.0, -1.0]).unwrap();
        assert_eq!(t.entries(), &[0.0, 1.0, 1.0, 0.0]);

        let a = DMatrix::from_row_slice(2, 2, &[1.0, -3.0, -3.0, 2.0]);
        let q = PolyFunction::quadratic_form(&a).unwrap();
        let t = q.derivative_tensor(2, &[0.3, 0.1]).unwrap();
        assert_eq!(t.entries(), &[2.0, -6.0, -6.0, 4.0]);

        let c = PolyFunction::new(2, vec![mono(&[3, 0], 1.0)]).unwrap();
        let t = c.derivative_tensor(3, &[0.7, 0.2]).unwrap();
        assert_eq!(t.get(&[0, 0, 0]), 6.0);
        assert_eq!(crate::tensor::hs_norm(&t), 6.0);
        assert_eq!(
            crate::tensor::hs_norm(&c.derivative_tensor(4, &[1.0, 1.0]).unwrap()),
            0.0
        );
    }

    #[test]
    fn derivative_tensor_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f = PolyFunction::random(&mut rng, 3, 4, 6);
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let t2 = f.derivative_tensor(2, &x).unwrap();
            let h = 1e-5;
            for k in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let tp = f.derivative_tensor(2, &xp).unwrap();
                let tm = f.derivative_tensor(2, &xm).unwrap();
                let t3 = f.derivative_tensor(3, &x).unwrap();
                for i in 0..3 {
                    for j in 0..3 {
                        let fd = (tp.get(&[i, j]) - tm.get(&[i, j])) / (2.0 * h);
                        assert!((fd - t3.get(&[i, j, k])).abs() < 1e-6 * (1.0 + fd.abs()));
                    }
                }
            }
            let g = f.gradient(&x).unwrap();
            let t1 = f.derivative_tensor(1, &x).unwrap();
            for i in 0..3 {
                assert!((g[i] - t1.get(&[i])).abs() < 1e-14);
            }
            assert!(t2.asymmetry() == 0.0);
        }
    }

    #[test]
    fn projection_examples() {
        let s = ManifoldDescriptor::Sphere { n: 3 };
        assert_eq!(
            tangent_project(&s, &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap(),
            vec![0.0; 3]
        );

        let st = ManifoldDescriptor::Stiefel { n: 3, k: 2 };
        let a = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let r = tangent_project(&st, &a, &a).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-15));

        let gr = ManifoldDescriptor::Grassmann { n: 3, k: 1 };
        let p = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let r = tangent_project(&gr, &p, &p).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-15));
        let id = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let r = tangent_project(&gr, &p, &id).unwrap();
        assert!(r.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn off_manifold_rejected() {
        let s = ManifoldDescriptor::Sphere { n: 2 };
        assert!(matches!(
            tangent_project(&s, &[1.0, 1.0], &[0.0, 0.0]),
            Err(Error::OffManifold(_))
        ));
        let st = ManifoldDescriptor::Stiefel { n: 3, k: 1 };
        assert!(matches!(
            tangent_project(&st, &[2.0, 0.0, 0.0], &[0.0; 3]),
            Err(Error::OffManifold(_))
        ));
        assert!(ManifoldDescriptor::Stiefel { n: 2, k: 1 }.validate().is_err());
        assert!(ManifoldDescriptor::Sphere { n: 1 }.validate().is_err());
        assert!(ManifoldDescriptor::LpSphere { n: 3, p: 1.5 }.validate().is_err());
    }

    #[test]
    fn intrinsic_gradient_examples() {
        let s = ManifoldDescriptor::Sphere { n: 3 };
        let e1 = [1.0, 0.0, 0.0];
        let f = PolyFunction::linear(&[0.0, 1.0, 0.0]);
        assert_eq!(intrinsic_gradient(&s, &f, &e1).unwrap(), vec![0.0, 1.0, 0.0]);
        let f = PolyFunction::linear(&[1.0, 0.0, 0.0]);
        assert_eq!(intrinsic_gradient(&s, &f, &e1).unwrap(), vec![0.0; 3]);

        // trace on Grassmann(3, 1) is constant, so its gradient vanishes
        let gr = ManifoldDescriptor::Grassmann { n: 3, k: 1 };
        let tr = PolyFunction::linear(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let v = [0.6, 0.8, 0.0];
        let p: Vec<f64> = (0..9).map(|c| v[c % 3] * v[c / 3]).collect();
        let g = intrinsic_gradient(&gr, &tr, &p).unwrap();
        assert!(norm2(&g) < 1e-15);
    }

    #[test]
    fn lp_sphere_gradient_is_tangent() {
        let m = ManifoldDescriptor::LpSphere { n: 3, p: 3.0 };
        let raw = [0.5, -0.7, 0.2];
        let r = norm_p(&raw, 3.0);
        let theta: Vec<f64> = raw.iter().map(|x| x / r).collect();
        let f = PolyFunction::new(3, vec![mono(&[2, 1, 0], 1.0), mono(&[0, 0, 1], 2.0)]).unwrap();
        let g = intrinsic_gradient(&m, &f, &theta).unwrap();
        assert!(dot(&g, &lp_normal(&theta, 3.0)).abs() < 1e-14);
    }

    #[test]
    fn sphere_hessian_examples() {
        let e1 = [1.0, 0.0, 0.0];
        let h = sphere_hessian(&PolyFunction::linear(&[1.0, 0.0, 0.0]), &e1).unwrap();
        assert_eq!(h.entries(), &[0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0]);

        let h = sphere_hessian(&PolyFunction::constant(3, 4.0), &e1).unwrap();
        assert!(h.entries().iter().all(|&x| x == 0.0));

        let half_sq = PolyFunction::quadratic_form(&(DMatrix::identity(3, 3) * 0.5)).unwrap();
        let th = [0.6, 0.0, 0.8];
        let h = sphere_hessian(&half_sq, &th).unwrap();
        assert!(h.entries().iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn spherical_partial_examples() {
        let a = [0.3, -1.0, 2.0];
        let f = PolyFunction::linear(&a);
        let th = [0.0, 0.6, 0.8];
        let s = dot(&a, &th);
        for i in 0..3 {
            let d = spherical_partial(&f, &[i], &th).unwrap();
            assert!((d - (a[i] - s * th[i])).abs() < 1e-15);
        }
        let f = PolyFunction::linear(&[1.0, 0.0, 0.0]);
        assert_eq!(spherical_partial(&f, &[0], &[1.0, 0.0, 0.0]).unwrap(), 0.0);
        let c = PolyFunction::constant(3, 2.0);
        assert_eq!(spherical_partial(&c, &[0, 2, 1], &th).unwrap(), 0.0);
    }

    #[test]
    fn first_spherical_partials_are_the_intrinsic_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = ManifoldDescriptor::Sphere { n: 4 };
        for _ in 0..10 {
            let f = PolyFunction::random(&mut rng, 4, 3, 5);
            let raw: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = norm2(&raw);
            let th: Vec<f64> = raw.iter().map(|x| x / r).collect();
            let g = intrinsic_gradient(&s, &f, &th).unwrap();
            let d = spherical_derivative_tensor(&f, 1, &th).unwrap();
            for i in 0..4 {
                assert!((g[i] - d.entries()[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn second_spherical_partials_match_nested_projection() {
        // D_{ij} f = <∇_S <∇_S f, e_j>, e_i>; check against finite differences
        // of the first-order partials along great circles.
        let f = PolyFunction::new(3, vec![mono(&[2, 1, 0], 1.0), mono(&[0, 1, 1], -2.0)]).unwrap();
        let th = [0.48, 0.6, 0.64];
        let m = ManifoldDescriptor::Sphere { n: 3 };
        let d2 = spherical_derivative_tensor(&f, 2, &th).unwrap();
        let h = 1e-5;
        for i in 0..3 {
            let mut e = [0.0; 3];
            e[i] = 1.0;
            let u = tangent_project(&m, &th, &e).unwrap();
            let xp = retract(&m, &th, &u, h).unwrap();
            let xm = retract(&m, &th, &u, -h).unwrap();
            for j in 0..3 {
                let fd =
                    (spherical_partial(&f, &[j], &xp).unwrap() - spherical_partial(&f, &[j], &xm).unwrap()) / (2.0 * h);
                assert!(
                    (fd - d2.get(&[i, j])).abs() < 1e-7,
                    "{i}{j}: {fd} vs {}",
                    d2.get(&[i, j])
                );
            }
        }
    }

    #[test]
    fn json_layout() {
        let f: PolyFunction = serde_json::from_str(r#"{"nvars":2,"monomials":[{"exps":[1,1],"coef":1.5}]}"#).unwrap();
        assert_eq!(f.eval(&[2.0, 2.0]).unwrap(), 6.0);
        assert!(serde_json::from_str::<PolyFunction>(r#"{"nvars":2,"monomials":[{"exps":[1],"coef":1}]}"#).is_err());
        let m: ManifoldDescriptor = serde_json::from_str(r#"{"kind":"stiefel","n":8,"k":3}"#).unwrap();
        assert_eq!(m.ambient_dim(), 24);
    }
}
