use clab::bounds::{self, LevelCoefficients, MomentGrowthSpec, Setting};
use clab::calculus::{self, ManifoldDescriptor, PolyFunction};
use clab::discrete::{self, FiniteProductSpace};
use clab::samplers;
use clab::tensor::{self, contract, hs_norm, op_norm, symmetric_op_norm, OpNormOptions, SymTensor, Tensor};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tensor_strategy(max_order: usize, max_dim: usize) -> impl Strategy<Value = Tensor> {
    (1..=max_order, 1..=max_dim).prop_flat_map(|(o, d)| {
        prop::collection::vec(-3.0f64..3.0, d.pow(o as u32)).prop_map(move |e| Tensor::from_entries(o, d, e).unwrap())
    })
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        let mut e = vec![0.0; v.len()];
        e[0] = 1.0;
        return e;
    }
    v.iter().map(|x| x / n).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn op_norm_below_hs(t in tensor_strategy(3, 4)) {
        let s = SymTensor::symmetrize(&t);
        let op = op_norm(s.as_tensor(), 2.0, &OpNormOptions::default()).unwrap().value;
        prop_assert!(op <= hs_norm(s.as_tensor()) * (1.0 + 1e-12));
    }

    #[test]
    fn op_norm_homogeneous(t in tensor_strategy(3, 3), a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], q in prop_oneof![Just(1.0), Just(1.5), Just(2.0)]) {
        let opts = OpNormOptions::default();
        let base = op_norm(&t, q, &opts).unwrap().value;
        let scaled = op_norm(&t.scale(a), q, &opts).unwrap().value;
        prop_assert!((scaled - a.abs() * base).abs() <= 1e-8 * (1.0 + scaled));
    }

    #[test]
    fn op_norm_dominates_any_contraction(t in tensor_strategy(3, 3), raw in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 3)) {
        let vs: Vec<Vec<f64>> = raw.iter().take(t.order()).map(|v| unit(&v[..t.dim()])).collect();
        let c = contract(&t, &vs).unwrap().abs();
        let op = op_norm(&t, 2.0, &OpNormOptions::default()).unwrap().value;
        prop_assert!(c <= op * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn nonnegative_tensor_witnesses_can_be_nonnegative(t in tensor_strategy(3, 3)) {
        let pos = Tensor::from_entries(t.order(), t.dim(), t.entries().iter().map(|v| v.abs()).collect()).unwrap();
        let res = op_norm(&pos, 2.0, &OpNormOptions::default()).unwrap();
        let abs: Vec<Vec<f64>> = res.witnesses.iter().map(|w| w.iter().map(|x| x.abs()).collect()).collect();
        let before = contract(&pos, &res.witnesses).unwrap();
        let after = contract(&pos, &abs).unwrap();
        prop_assert!(after >= before - 1e-12);
    }

    #[test]
    fn symmetric_restriction_attains_op_norm(t in tensor_strategy(3, 3), seed in 0u64..1000) {
        let s = SymTensor::symmetrize(&t);
        let alt = op_norm(s.as_tensor(), 2.0, &OpNormOptions::default()).unwrap().value;
        let sym = symmetric_op_norm(&s, 20, seed);
        prop_assert!((alt - sym).abs() <= 1e-6 * (1.0 + alt), "{} vs {}", alt, sym);
    }
}

fn random_poly(seed: u64, n: usize, degree: u32) -> PolyFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PolyFunction::random(&mut rng, n, degree, 6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn intrinsic_gradient_is_tangent_and_contracts(seed in 0u64..10_000, which in 0usize..4) {
        let (m, pts) = match which {
            0 => (ManifoldDescriptor::Sphere { n: 4 }, samplers::sample_sphere(4, 3, seed).unwrap()),
            1 => (ManifoldDescriptor::LpSphere { n: 4, p: 3.0 }, samplers::sample_cone_lp(3.0, 4, 3, seed).unwrap()),
            2 => (ManifoldDescriptor::Stiefel { n: 4, k: 2 }, samplers::sample_stiefel(4, 2, 3, seed).unwrap()),
            _ => (ManifoldDescriptor::Grassmann { n: 3, k: 1 }, samplers::sample_grassmann(3, 1, 3, seed).unwrap()),
        };
        let f = random_poly(seed, m.ambient_dim(), 3);
        for x in pts.rows() {
            let g = calculus::intrinsic_gradient(&m, &f, x).unwrap();
            let again = calculus::tangent_project(&m, x, &g).unwrap();
            let diff = g.iter().zip(&again).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = g.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            prop_assert!(diff <= 1e-12 * scale);
            let full = f.gradient(x).unwrap();
            prop_assert!(clab::util::norm2(&g) <= clab::util::norm2(&full) * (1.0 + 1e-12) + 1e-15);
            if let ManifoldDescriptor::LpSphere { p, .. } = m {
                let w = calculus::lp_normal(x, p);
                prop_assert!(clab::util::dot(&g, &w).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn sphere_hessian_contracts_b(seed in 0u64..10_000) {
        let f = random_poly(seed, 4, 3);
        let pts = samplers::sample_sphere(4, 3, seed).unwrap();
        for x in pts.rows() {
            let h = calculus::sphere_hessian(&f, x).unwrap();
            let b = calculus::sphere_b_matrix(&f, x).unwrap();
            prop_assert!(hs_norm(h.as_tensor()) <= b.norm() * (1.0 + 1e-12) + 1e-14);
        }
    }

    #[test]
    fn derivative_tensor_is_derivative_of_lower_order(seed in 0u64..10_000, j in 1usize..3) {
        let f = random_poly(seed, 3, 4);
        let x = [0.3, -0.7, 0.4];
        let hi = f.derivative_tensor(j + 1, &x).unwrap();
        let h = 1e-5;
        for k in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let tp = f.derivative_tensor(j, &xp).unwrap();
            let tm = f.derivative_tensor(j, &xm).unwrap();
            for flat in 0..tp.entries().len() {
                let mut idx = tp.multi_index(flat);
                let fd = (tp.entries()[flat] - tm.entries()[flat]) / (2.0 * h);
                idx.push(k);
                let exact = hi.get(&idx);
                prop_assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "{} vs {}", fd, exact);
            }
        }
    }
}

fn cube_table(seed: u64, n: usize) -> (FiniteProductSpace, Vec<f64>) {
    use rand::Rng;
    let space = FiniteProductSpace::rademacher(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let table = (0..space.size()).map(|_| rng.random_range(-2.0..2.0)).collect();
    (space, table)
}

fn random_product(seed: u64) -> FiniteProductSpace {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let margs: Vec<(Vec<f64>, Vec<f64>)> = (0..3)
        .map(|_| {
            let k = rng.random_range(2..4);
            let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
            let s: f64 = w.iter().sum();
            ((0..k).map(|a| a as f64).collect(), w.iter().map(|v| v / s).collect())
        })
        .collect();
    FiniteProductSpace::product(&margs).unwrap()
}

/// Pointwise `|𝔥 g|` (or `|𝔥⁺ g|`) for a table `g`.
fn h_norm_of(g: &[f64], space: &FiniteProductSpace, x: usize, plus: bool) -> f64 {
    let (h, hp, _) = discrete::h_vectors(g, space, x).unwrap();
    clab::util::norm2(if plus { &hp } else { &h })
}

fn matrix_op(t: &SymTensor) -> f64 {
    t.to_matrix().unwrap().singular_values().max()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn h_decomposes_into_signed_parts(seed in 0u64..10_000) {
        let space = random_product(seed);
        let table: Vec<f64> = (0..space.size()).map(|i| (i as f64 * 0.37 + seed as f64).sin()).collect();
        for x in 0..space.size() {
            for i in 0..space.n() {
                let h = discrete::h_ops(&table, &space, x, i).unwrap().h;
                let best = space
                    .support(i)
                    .iter()
                    .map(|&a| {
                        let o = discrete::h_ops(&table, &space, space.replace(x, i, a), i).unwrap();
                        o.h_plus.max(o.h_minus)
                    })
                    .fold(0.0, f64::max);
                prop_assert!((h - best).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn hs_recursion(seed in 0u64..10_000, j in 1usize..3) {
        let (space, f) = cube_table(seed, 4);
        let g: Vec<f64> = (0..space.size())
            .map(|x| hs_norm(discrete::h_tensor(&f, &space, j, x).unwrap().as_tensor()))
            .collect();
        for x in 0..space.size() {
            let rhs = hs_norm(discrete::h_tensor(&f, &space, j + 1, x).unwrap().as_tensor());
            prop_assert!(h_norm_of(&g, &space, x, false) <= rhs * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn positive_part_op_recursion(seed in 0u64..10_000) {
        let (space, f) = cube_table(seed, 4);
        let g: Vec<f64> = (0..space.size())
            .map(|x| clab::util::norm2(&discrete::h_vectors(&f, &space, x).unwrap().0))
            .collect();
        for x in 0..space.size() {
            let rhs = matrix_op(&discrete::h_tensor(&f, &space, 2, x).unwrap());
            prop_assert!(h_norm_of(&g, &space, x, true) <= rhs * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn efron_stein_and_tensorization(seed in 0u64..10_000) {
        let space = random_product(seed);
        let table: Vec<f64> = (0..space.size()).map(|i| ((i * 7 + seed as usize) as f64).sin() * 3.0).collect();
        let var = discrete::variance(&table, &space).unwrap();
        prop_assert!(var <= discrete::efron_stein_rhs(&table, &space).unwrap() * (1.0 + 1e-12) + 1e-14);
        prop_assert!(var <= discrete::dirichlet_form(&table, &space).unwrap() * (1.0 + 1e-12) + 1e-14);
    }
}

#[test]
fn cyclic_chain_breaks_plain_op_recursion() {
    // Σ x_i x_{i+1} on {±1}⁴: |𝔥|𝔥f|_op| exceeds |𝔥⁽²⁾f|_op somewhere
    let n = 4;
    let space = FiniteProductSpace::rademacher(n).unwrap();
    let f = space.tabulate(|x| (0..n).map(|i| x[i] * x[(i + 1) % n]).sum());
    let g: Vec<f64> = (0..space.size())
        .map(|x| clab::util::norm2(&discrete::h_vectors(&f, &space, x).unwrap().0))
        .collect();
    let lhs = (0..space.size())
        .map(|x| h_norm_of(&g, &space, x, false))
        .fold(0.0, f64::max);
    let rhs = (0..space.size())
        .map(|x| matrix_op(&discrete::h_tensor(&f, &space, 2, x).unwrap()))
        .fold(0.0, f64::max);
    assert!((rhs - 8.0).abs() < 1e-12);
    assert!(lhs > rhs + 1.0, "{lhs} vs {rhs}");
}

fn lsi_like() -> impl Strategy<Value = (Setting, Vec<f64>)> {
    (0.5f64..3.0, 1.1f64..4.0, 0.2f64..3.0, 0.2f64..3.0, 1u32..4).prop_flat_map(|(p, r0, l, sigma, d)| {
        let s = Setting::new(p, r0, l, sigma, d).unwrap();
        (Just(s), prop::collection::vec(0.01f64..5.0, d as usize))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn tail_monotone_and_scale_covariant((s, k) in lsi_like(), t in 0.0f64..50.0, dt in 0.0f64..10.0, a in 0.1f64..10.0, bump in 0usize..4) {
        let kk = LevelCoefficients::new(k.clone()).unwrap();
        let b = bounds::tail_bound(&s, &kk, t).unwrap();
        prop_assert!(bounds::tail_bound(&s, &kk, t + dt).unwrap() <= b);
        let mut k2 = k.clone();
        let i = bump % k2.len();
        k2[i] *= 1.5;
        prop_assert!(bounds::tail_bound(&s, &LevelCoefficients::new(k2).unwrap(), t).unwrap() >= b);
        let mut bigger = s.clone();
        bigger.sigma *= 1.3;
        bigger.l *= 1.2;
        prop_assert!(bounds::tail_bound(&bigger, &kk, t).unwrap() >= b);
        let scaled = bounds::tail_bound(&s, &kk.scale(a), a * t).unwrap();
        prop_assert!((scaled - b).abs() <= 1e-12 * (1.0 + b));
    }

    #[test]
    fn moments_reproduce_tail((s, k) in lsi_like(), t in 0.0f64..50.0) {
        let kk = LevelCoefficients::new(k).unwrap();
        let m = MomentGrowthSpec::from_levels(&s, &kk).unwrap();
        let a = bounds::tail_from_moments(&m, t).unwrap();
        let b = bounds::tail_bound(&s, &kk, t).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b), "{} vs {}", a, b);
    }

    #[test]
    fn moment_growth_monotone((s, k) in lsi_like(), dr in 0.0f64..10.0) {
        let kk = LevelCoefficients::new(k).unwrap();
        let lo = bounds::moment_growth_bound(&s, &kk, s.r0).unwrap();
        prop_assert!(bounds::moment_growth_bound(&s, &kk, s.r0 + dr).unwrap() >= lo);
    }

    #[test]
    fn tail_from_moments_closed_form(terms in prop::collection::vec((0.1f64..10.0, 0.2f64..3.0), 1..5), r0 in 1.0f64..4.0, t in 0.0f64..30.0) {
        let m = MomentGrowthSpec { terms: terms.clone(), r0 };
        let got = bounds::tail_from_moments(&m, t).unwrap();
        let want = if t == 0.0 {
            1.0
        } else {
            let pmax = terms.iter().map(|x| x.1).fold(0.0, f64::max);
            let coef = std::f64::consts::LN_2 / (r0 * (terms.len() as f64 * std::f64::consts::E).powf(pmax));
            let eta = terms.iter().map(|&(c, p)| t.powf(p) / c).fold(f64::INFINITY, f64::min);
            (2.0 * (-coef * eta).exp()).min(1.0)
        };
        prop_assert!((got - want).abs() <= 1e-15);
    }

    #[test]
    fn hw_crossover_is_exact(hs in 0.01f64..50.0, op in 0.01f64..50.0, l in 0.2f64..3.0, sigma in 0.2f64..3.0) {
        let s = Setting::new(2.0, 2.0, l, sigma, 2).unwrap();
        let t = bounds::hw_crossover(&s, hs, op);
        let s2 = sigma * sigma;
        let a = (t / (l * s2 * hs)).powi(2);
        let b = t / (s2 * op);
        prop_assert!((a - b).abs() <= 1e-9 * a.max(b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn certificate_implies_markov_tail(seed in 0u64..10_000) {
        use rand::Rng;
        let n = 6;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { ((i * 31 + j * 17) as f64 + rng.random_range(0.0..1.0)).sin() });
        let a = (&a + a.transpose()) * 0.5;
        let space = FiniteProductSpace::rademacher(n).unwrap();
        let table = space.tabulate_poly(&PolyFunction::quadratic_form(&a).unwrap()).unwrap();
        let s = bounds::setting_catalog(&bounds::CatalogEntry::IndependentBounded, 2).unwrap();
        let k = clab::verify::h_levels_exact(&table, &space, 2, &OpNormOptions::default()).unwrap();
        let norm = k.values()[0].max(k.values()[1]);
        let table: Vec<f64> = table.iter().map(|v| v / norm).collect();
        let cert = bounds::exp_moment_certificate(&s, &k.scale(1.0 / norm)).unwrap();
        prop_assert!(cert.normalized);
        let rep = clab::verify::verify_exp_moment(&space, &table, &cert, true).unwrap();
        prop_assume!(rep.pass);
        let m = space.expect(&table);
        for t in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let tail: f64 = (0..space.size()).filter(|&x| (table[x] - m).abs() >= t).map(|x| space.joint()[x]).sum();
            prop_assert!(tail <= 2.0 * (-cert.coefficient * t.powf(cert.exponent)).exp());
        }
    }

    #[test]
    fn samplers_are_seed_deterministic(seed in any::<u64>()) {
        let a = samplers::sample_stiefel(5, 2, 50, seed).unwrap();
        let b = samplers::sample_stiefel(5, 2, 50, seed).unwrap();
        prop_assert_eq!(a.data, b.data);
        let a = samplers::sample_cone_lp(3.0, 4, 50, seed).unwrap();
        let b = samplers::sample_cone_lp(3.0, 4, 50, seed).unwrap();
        prop_assert_eq!(a.data, b.data);
    }
}

#[test]
fn gaussian_radius_and_direction_uncorrelated() {
    let n = 5;
    let z = samplers::sample_gaussian(n, 200_000, 11).unwrap();
    let (r, th): (Vec<f64>, Vec<f64>) = z
        .rows()
        .map(|x| {
            let r = clab::util::norm2(x);
            (r, x[0] / r)
        })
        .unzip();
    let (mr, mt) = (clab::util::mean(&r), clab::util::mean(&th));
    let cov: Vec<f64> = r.iter().zip(&th).map(|(a, b)| (a - mr) * (b - mt)).collect();
    let sr = (r.iter().map(|a| (a - mr).powi(2)).sum::<f64>() / r.len() as f64).sqrt();
    let st = (th.iter().map(|b| (b - mt).powi(2)).sum::<f64>() / th.len() as f64).sqrt();
    let corr = clab::util::mean(&cov) / (sr * st);
    // five standard errors of a null correlation
    assert!(corr.abs() < 5.0 / (r.len() as f64).sqrt(), "{corr}");
}

#[test]
fn conjugate_exponent_roundtrip() {
    for q in [1.0, 1.5, 2.0, 3.0] {
        let p = tensor::conjugate_exponent(q);
        if q == 1.0 {
            assert!(p.is_infinite());
        } else {
            assert!((1.0 / p + 1.0 / q - 1.0).abs() < 1e-15);
        }
    }
}
