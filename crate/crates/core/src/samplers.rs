//! Seeded exact samplers for Gaussian, p-generalized Gaussian, sphere, ℓ_p
//! cone, Stiefel, Grassmann and finite product measures.
//!
//! Rows are generated in fixed chunks of [`CHUNK_ROWS`], each driven by its
//! own ChaCha8 stream derived from `(seed, chunk index)`. Chunks run in
//! parallel, and the output depends only on `(descriptor, count, seed)`.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete::FiniteProductSpace;
use crate::error::{Error, Result};
use crate::util::{norm2, norm_p, substream_seed};

pub const CHUNK_ROWS: usize = 4096;
pub const MAX_FINITE_CONFIGURATIONS: usize = 1 << 22;
/// Upper limit on `count · dim` for a single batch.
pub const MAX_BATCH_VALUES: usize = 1 << 31;

pub const BINARY_MAGIC: &[u8; 8] = b"CLABSAMP";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureDescriptor {
    Gaussian {
        n: usize,
    },
    Pgen {
        n: usize,
        p: f64,
    },
    Sphere {
        n: usize,
    },
    ConeLp {
        n: usize,
        p: f64,
    },
    Stiefel {
        n: usize,
        k: usize,
    },
    Grassmann {
        n: usize,
        k: usize,
    },
    /// Rows are alphabet indices, one column per coordinate.
    Finite {
        n: usize,
        configurations: usize,
    },
}

impl MeasureDescriptor {
    pub fn dim(&self) -> usize {
        match *self {
            Self::Gaussian { n } | Self::Pgen { n, .. } | Self::Sphere { n } | Self::ConeLp { n, .. } => n,
            Self::Stiefel { n, k } => n * k,
            Self::Grassmann { n, .. } => n * n,
            Self::Finite { n, .. } => n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        let p_ok = |p: f64| p.is_finite() && p >= 2.0;
        match *self {
            Self::Gaussian { n: 0 } => bad("n must be positive".into()),
            Self::Pgen { n, p } if n == 0 || !p_ok(p) => bad(format!("need n >= 1 and finite p >= 2 (n={n}, p={p})")),
            Self::Sphere { n } if n < 2 => bad(format!("sphere needs n >= 2, got {n}")),
            Self::ConeLp { n, p } if n < 2 || !p_ok(p) => {
                bad(format!("cone needs n >= 2 and finite p >= 2 (n={n}, p={p})"))
            }
            Self::Stiefel { n, k } | Self::Grassmann { n, k } if k == 0 || k >= n => {
                bad(format!("need 1 <= k < n (n={n}, k={k})"))
            }
            Self::Finite { n, configurations } if n == 0 || configurations == 0 => bad("empty finite space".into()),
            _ => Ok(()),
        }
    }
}

/// `count × dim` samples stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub data: Vec<f64>,
    pub count: usize,
    pub dim: usize,
    pub seed: u64,
    pub descriptor: MeasureDescriptor,
}

impl SampleBatch {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }
}

fn generate<F>(descriptor: MeasureDescriptor, count: usize, seed: u64, fill: F) -> Result<SampleBatch>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) -> Result<()> + Sync,
{
    descriptor.validate()?;
    if count == 0 {
        return Err(Error::InvalidParameter("count must be positive".into()));
    }
    let dim = descriptor.dim();
    let total = count
        .checked_mul(dim)
        .filter(|&t| t <= MAX_BATCH_VALUES)
        .ok_or_else(|| Error::CostGuard(format!("{count} x {dim} values exceed {MAX_BATCH_VALUES}")))?;
    let mut data = vec![0.0; total];
    data.par_chunks_mut(CHUNK_ROWS * dim)
        .enumerate()
        .try_for_each(|(chunk, block)| {
            let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, chunk as u64));
            block.chunks_exact_mut(dim).try_for_each(|row| fill(&mut rng, row))
        })?;
    Ok(SampleBatch {
        data,
        count,
        dim,
        seed,
        descriptor,
    })
}

/// Gamma(shape, 1) by Marsaglia–Tsang; shapes below 1 use
/// `G(a) = G(a + 1) · U^{1/a}`.
pub fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    if shape < 1.0 {
        let u: f64 = 1.0 - rng.random::<f64>();
        return sample_gamma(rng, shape + 1.0) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = 1.0 - rng.random::<f64>();
        if u < 1.0 - 0.0331 * x.powi(4) || u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// One draw from the density `∝ exp(-|x|^p / p)`.
pub fn sample_pgen_scalar<R: Rng + ?Sized>(rng: &mut R, p: f64) -> f64 {
    let g = sample_gamma(rng, 1.0 / p);
    let r = (p * g).powf(1.0 / p);
    if rng.random::<bool>() {
        r
    } else {
        -r
    }
}

fn fill_gaussian(rng: &mut ChaCha8Rng, row: &mut [f64]) {
    for v in row {
        *v = rng.sample(StandardNormal);
    }
}

pub fn sample_gaussian(n: usize, count: usize, seed: u64) -> Result<SampleBatch> {
    generate(MeasureDescriptor::Gaussian { n }, count, seed, |rng, row| {
        fill_gaussian(rng, row);
        Ok(())
    })
}

pub fn sample_pgen(p: f64, n: usize, count: usize, seed: u64) -> Result<SampleBatch> {
    generate(MeasureDescriptor::Pgen { n, p }, count, seed, |rng, row| {
        row.iter_mut().for_each(|v| *v = sample_pgen_scalar(rng, p));
        Ok(())
    })
}

/// Uniform measure on the unit sphere as `Z/|Z|`.
pub fn sample_sphere(n: usize, count: usize, seed: u64) -> Result<SampleBatch> {
    generate(MeasureDescriptor::Sphere { n }, count, seed, |rng, row| loop {
        fill_gaussian(rng, row);
        let r = norm2(row);
        if r > 0.0 {
            row.iter_mut().for_each(|v| *v /= r);
            return Ok(());
        }
    })
}

/// Cone measure on the ℓ_p sphere as `Z/|Z|_p` with p-generalized Gaussian `Z`.
pub fn sample_cone_lp(p: f64, n: usize, count: usize, seed: u64) -> Result<SampleBatch> {
    generate(MeasureDescriptor::ConeLp { n, p }, count, seed, |rng, row| loop {
        row.iter_mut().for_each(|v| *v = sample_pgen_scalar(rng, p));
        let r = norm_p(row, p);
        if r > 0.0 {
            row.iter_mut().for_each(|v| *v /= r);
            return Ok(());
        }
    })
}

/// Smallest Gram eigenvalue, relative to the largest, treated as singular.
const SINGULAR_RATIO: f64 = 1e-12;

/// `G (GᵀG)^{-1/2}` for a fresh Gaussian `n × k` matrix, retried once if
/// the Gram matrix is numerically singular.
fn haar_frame(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Result<DMatrix<f64>> {
    let mut worst = 0.0;
    for _ in 0..2 {
        let g = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let eig = (g.transpose() * &g).symmetric_eigen();
        let lmax = eig.eigenvalues.max();
        let lmin = eig.eigenvalues.min();
        if lmin > SINGULAR_RATIO * lmax {
            let inv_sqrt = &eig.eigenvectors
                * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
                * eig.eigenvectors.transpose();
            return Ok(g * inv_sqrt);
        }
        worst = lmin;
    }
    Err(Error::Singular(worst))
}

/// Haar measure on the Stiefel manifold, vectorized column-major.
pub fn sample_stiefel(n: usize, k: usize, count: usize, seed: u64) -> Result<SampleBatch> {
    generate(MeasureDescriptor::Stiefel { n, k }, count, seed, |rng, row| {
        row.copy_from_slice(haar_frame(rng, n, k)?.as_slice());
        Ok(())
    })
}

/// Uniform rank-`k` projector `G(GᵀG)^{-1}Gᵀ = AAᵀ`, vectorized column-major.
pub fn sample_grassmann(n: usize, k: usize, count: usize, seed: u64) -> Result<SampleBatch> {
    generate(MeasureDescriptor::Grassmann { n, k }, count, seed, |rng, row| {
        let a = haar_frame(rng, n, k)?;
        row.copy_from_slice((&a * a.transpose()).as_slice());
        Ok(())
    })
}

/// Walker/Vose alias table.
#[derive(Clone, Debug)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    pub fn new(weights: &[f64]) -> Result<Self> {
        let m = weights.len();
        if m == 0 {
            return Err(Error::InvalidParameter("empty weight table".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidParameter(
                "weights must be nonnegative with positive sum".into(),
            ));
        }
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * m as f64 / total).collect();
        let mut prob = vec![1.0; m];
        let mut alias: Vec<usize> = (0..m).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..m).partition(|&i| scaled[i] < 1.0);
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            prob[s] = scaled[s];
            alias[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // leftovers are 1 up to rounding
        for i in small.into_iter().chain(large) {
            prob[i] = 1.0;
        }
        // an outcome of zero weight must never be returned directly
        for i in 0..m {
            if weights[i] == 0.0 {
                prob[i] = 0.0;
            }
        }
        Ok(AliasTable { prob, alias })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.random_range(0..self.prob.len());
        if rng.random::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i]
        }
    }
}

/// I.i.d. configurations from the joint table; each row holds the alphabet
/// index of every coordinate.
pub fn sample_finite(space: &FiniteProductSpace, count: usize, seed: u64) -> Result<SampleBatch> {
    if space.size() > MAX_FINITE_CONFIGURATIONS {
        return Err(Error::CostGuard(format!(
            "more than {MAX_FINITE_CONFIGURATIONS} configurations"
        )));
    }
    let table = AliasTable::new(space.joint())?;
    let descriptor = MeasureDescriptor::Finite {
        n: space.n(),
        configurations: space.size(),
    };
    generate(descriptor, count, seed, |rng, row| {
        let flat = table.sample(rng);
        for (i, v) in row.iter_mut().enumerate() {
            *v = space.digit(flat, i) as f64;
        }
        Ok(())
    })
}

/// Dispatch on a descriptor (finite spaces go through [`sample_finite`]).
pub fn sample(descriptor: &MeasureDescriptor, count: usize, seed: u64) -> Result<SampleBatch> {
    match *descriptor {
        MeasureDescriptor::Gaussian { n } => sample_gaussian(n, count, seed),
        MeasureDescriptor::Pgen { n, p } => sample_pgen(p, n, count, seed),
        MeasureDescriptor::Sphere { n } => sample_sphere(n, count, seed),
        MeasureDescriptor::ConeLp { n, p } => sample_cone_lp(p, n, count, seed),
        MeasureDescriptor::Stiefel { n, k } => sample_stiefel(n, k, count, seed),
        MeasureDescriptor::Grassmann { n, k } => sample_grassmann(n, k, count, seed),
        MeasureDescriptor::Finite { .. } => Err(Error::InvalidParameter(
            "finite measures need the joint table; use sample_finite".into(),
        )),
    }
}

/// Decoded sample matrix without provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleMatrix {
    pub data: Vec<f64>,
    pub count: usize,
    pub dim: usize,
}

/// One sample per line, comma separated, shortest round-trip decimals.
pub fn write_csv<W: Write>(batch: &SampleBatch, mut w: W) -> Result<()> {
    let mut line = String::new();
    for row in batch.rows() {
        line.clear();
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&v.to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<SampleMatrix> {
    let mut data = Vec::new();
    let mut dim = None;
    let mut count = 0;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Decode(format!("line {}: bad number {field:?}", lineno + 1)))?;
            data.push(v);
        }
        let width = data.len() - before;
        match dim {
            None => dim = Some(width),
            Some(d) if d != width => {
                return Err(Error::Decode(format!(
                    "line {}: {width} fields, expected {d}",
                    lineno + 1
                )))
            }
            _ => {}
        }
        count += 1;
    }
    let dim = dim.ok_or_else(|| Error::Decode("no rows".into()))?;
    Ok(SampleMatrix { data, count, dim })
}

/// `CLABSAMP`, `count` and `dim` as little-endian u64, then the row-major
/// f64 data in little-endian order.
pub fn encode_binary(batch: &SampleBatch) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 8 * batch.data.len());
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(batch.count as u64).to_le_bytes());
    out.extend_from_slice(&(batch.dim as u64).to_le_bytes());
    for v in &batch.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_binary(bytes: &[u8]) -> Result<SampleMatrix> {
    if bytes.len() < 24 || &bytes[..8] != BINARY_MAGIC {
        return Err(Error::Decode("missing CLABSAMP header".into()));
    }
    let word = |k: usize| u64::from_le_bytes(bytes[k..k + 8].try_into().expect("8 bytes"));
    let (count, dim) = (word(8), word(16));
    let values = count
        .checked_mul(dim)
        .filter(|&v| v <= MAX_BATCH_VALUES as u64)
        .ok_or_else(|| Error::Decode(format!("implausible shape {count} x {dim}")))?;
    if dim == 0 && count > 0 {
        return Err(Error::Decode("zero-width rows".into()));
    }
    let expected = 24 + 8 * values as usize;
    if bytes.len() != expected {
        return Err(Error::Decode(format!(
            "payload is {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let data = bytes[24..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(SampleMatrix {
        data,
        count: count as usize,
        dim: dim as usize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::mean_and_stderr;

    fn column(b: &SampleBatch, c: usize) -> Vec<f64> {
        b.rows().map(|r| r[c]).collect()
    }

    #[test]
    fn gaussian_moments_and_determinism() {
        let count = 40_000;
        let b = sample_gaussian(3, count, 7).unwrap();
        for c in 0..3 {
            let col = column(&b, c);
            let (m, _) = mean_and_stderr(&col);
            assert!(m.abs() < 4.0 / (count as f64).sqrt());
            let var = col.iter().map(|x| x * x).sum::<f64>() / count as f64 - m * m;
            assert!((var - 1.0).abs() < 4.0 * (2.0 / count as f64).sqrt());
        }
        assert_eq!(b, sample_gaussian(3, count, 7).unwrap());
        assert_ne!(b.data, sample_gaussian(3, count, 8).unwrap().data);
    }

    #[test]
    fn chunking_is_prefix_stable() {
        let a = sample_gaussian(2, 3 * CHUNK_ROWS + 5, 11).unwrap();
        let b = sample_gaussian(2, CHUNK_ROWS + 1, 11).unwrap();
        assert_eq!(&a.data[..b.data.len()], &b.data[..]);
    }

    #[test]
    fn gamma_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for shape in [0.25, 0.5, 1.0, 3.5] {
            let xs: Vec<f64> = (0..50_000).map(|_| sample_gamma(&mut rng, shape)).collect();
            let (m, se) = mean_and_stderr(&xs);
            assert!((m - shape).abs() < 4.0 * se, "shape {shape}: {m}");
        }
    }

    #[test]
    fn pgen_moments() {
        for p in [2.0, 3.0] {
            let b = sample_pgen(p, 1, 100_000, 3).unwrap();
            let xs: Vec<f64> = b.data.iter().map(|x| x.abs().powf(p)).collect();
            let (m, se) = mean_and_stderr(&xs);
            assert!((m - 1.0).abs() < 3.0 * se);
            let (m1, se1) = mean_and_stderr(&b.data);
            assert!(m1.abs() < 4.0 * se1);
        }
    }

    #[test]
    fn sphere_and_cone_are_normalized() {
        let b = sample_sphere(5, 1000, 1).unwrap();
        assert!(b.rows().all(|r| (norm2(r) - 1.0).abs() < 1e-12));
        let c = sample_cone_lp(3.0, 4, 1000, 1).unwrap();
        assert!(c.rows().all(|r| (norm_p(r, 3.0) - 1.0).abs() < 1e-12));
        let x: Vec<f64> = b.rows().map(|r| 5.0 * r[0] * r[0]).collect();
        let (m, se) = mean_and_stderr(&x);
        assert!((m - 1.0).abs() < 4.0 * se);
    }

    #[test]
    fn stiefel_and_grassmann_invariants() {
        let (n, k) = (6, 2);
        let s = sample_stiefel(n, k, 500, 5).unwrap();
        for r in s.rows() {
            let a = DMatrix::from_column_slice(n, k, r);
            assert!((a.transpose() * &a - DMatrix::identity(k, k)).amax() < 1e-10);
        }
        let g = sample_grassmann(n, 1, 20_000, 5).unwrap();
        for r in g.rows().take(500) {
            let p = DMatrix::from_column_slice(n, n, r);
            assert!((&p - p.transpose()).amax() == 0.0);
            assert!((&p * &p - &p).amax() < 1e-10);
            assert!((p.trace() - 1.0).abs() < 1e-10);
        }
        let p11: Vec<f64> = g.rows().map(|r| r[0]).collect();
        let (m, se) = mean_and_stderr(&p11);
        assert!((m - 1.0 / n as f64).abs() < 4.0 * se);
    }

    #[test]
    fn finite_frequencies() {
        let s = FiniteProductSpace::rademacher(2).unwrap();
        let count = 40_000;
        let b = sample_finite(&s, count, 2).unwrap();
        let mut freq = [0usize; 4];
        for r in b.rows() {
            freq[s.flat(&[r[0] as usize, r[1] as usize])] += 1;
        }
        let se = (0.25 * 0.75 / count as f64).sqrt();
        for f in freq {
            assert!((f as f64 / count as f64 - 0.25).abs() < 4.0 * se);
        }
        let point = FiniteProductSpace::new(vec![vec![0.0, 1.0]; 2], vec![0.0, 0.0, 1.0, 0.0], false).unwrap();
        let b = sample_finite(&point, 1000, 2).unwrap();
        assert!(b.rows().all(|r| r == [1.0, 0.0]));
    }

    #[test]
    fn alias_never_returns_zero_weight() {
        let t = AliasTable::new(&[0.0, 0.3, 0.0, 0.7]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!((0..10_000).all(|_| matches!(t.sample(&mut rng), 1 | 3)));
    }

    #[test]
    fn csv_and_binary_formats() {
        let b = sample_gaussian(3, 10, 1).unwrap();
        let mut buf = Vec::new();
        write_csv(&b, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 10);
        assert!(!text.contains('\r'));
        let m = read_csv(&buf[..]).unwrap();
        assert_eq!((m.data, m.count, m.dim), (b.data.clone(), 10, 3));

        let bytes = encode_binary(&b);
        assert_eq!(&bytes[..8], b"CLABSAMP");
        assert_eq!(bytes.len(), 24 + 8 * 30);
        let m = decode_binary(&bytes).unwrap();
        assert_eq!(m.data, b.data);
        assert!(decode_binary(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_binary(b"CLABSAMX").is_err());
        assert!(read_csv("1,2\n3\n".as_bytes()).is_err());
    }

    #[test]
    fn invalid_descriptors() {
        assert!(sample_sphere(1, 10, 0).is_err());
        assert!(sample_pgen(1.5, 2, 10, 0).is_err());
        assert!(sample_stiefel(3, 3, 10, 0).is_err());
        assert!(sample_gaussian(2, 0, 0).is_err());
    }
}
