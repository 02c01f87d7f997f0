#![allow(dead_code)]

use contextua_core::contexts::{generate_poset, Context, ContextPoset};
use contextua_core::matrix::{c64, inner};
use contextua_core::opalg::Ray;
use contextua_core::random;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-9;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nonzero vectors with entries in {-1, 0, 1}, one per ray.
pub fn integer_rays(d: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let total = 3usize.pow(d as u32);
    for code in 1..total {
        let mut c = code;
        let v: Vec<f64> = (0..d)
            .map(|_| {
                let t = c % 3;
                c /= 3;
                t as f64 - 1.0
            })
            .collect();
        let first = v.iter().find(|x| **x != 0.0);
        if first == Some(&1.0) {
            out.push(v);
        }
    }
    out
}

/// Orthogonal bases drawn from `rays`, as sorted index tuples.
pub fn orthogonal_bases(rays: &[Vec<f64>], d: usize) -> Vec<Vec<usize>> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut out = Vec::new();
    fn rec(
        start: usize,
        cur: &mut Vec<usize>,
        rays: &[Vec<f64>],
        d: usize,
        dot: &dyn Fn(&[f64], &[f64]) -> f64,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for i in start..rays.len() {
            if cur.iter().all(|&j| dot(&rays[i], &rays[j]) == 0.0) {
                cur.push(i);
                rec(i + 1, cur, rays, d, dot, out);
                cur.pop();
            }
        }
    }
    rec(0, &mut Vec::new(), rays, d, &dot, &mut out);
    out
}

pub fn context_of(rays: &[Vec<f64>], idx: &[usize]) -> Context {
    let rs: Vec<Ray> = idx.iter().map(|&i| Ray::from_real(&rays[i]).unwrap()).collect();
    Context::from_rays(&rs, TOL).unwrap()
}

/// `k` distinct bases of C^d with {-1, 0, 1} coordinates. Bases drawn this
/// way share rays, so the resulting posets are connected above the bottom.
pub fn integer_catalog<R: Rng>(rng: &mut R, d: usize, k: usize) -> Vec<Context> {
    let rays = integer_rays(d);
    let mut bases = orthogonal_bases(&rays, d);
    bases.shuffle(rng);
    bases.truncate(k);
    bases.iter().map(|b| context_of(&rays, b)).collect()
}

/// A random orthonormal basis of C^d as a maximal context.
pub fn random_basis<R: Rng>(rng: &mut R, d: usize) -> Context {
    let basis = random::orthonormal_basis(rng, d);
    let rays: Vec<Ray> = basis.into_iter().map(|v| Ray::new(v).unwrap()).collect();
    Context::from_rays(&rays, TOL).unwrap()
}

/// A context with a degenerate atom: a random ray and its complement.
pub fn random_coarse<R: Rng>(rng: &mut R, d: usize) -> Context {
    let v = random::unit_vector(rng, d);
    Context::from_rays(&[Ray::new(v).unwrap()], TOL).unwrap()
}

pub fn poset(d: usize, catalog: &[Context]) -> ContextPoset {
    generate_poset(d, catalog, TOL).unwrap()
}

/// Pauli eigenbases: an informationally complete catalog for C^2.
pub fn pauli_catalog() -> Vec<Context> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let rays = |a: Vec<contextua_core::matrix::Complex>, b: Vec<contextua_core::matrix::Complex>| {
        Context::from_rays(&[Ray::new(a).unwrap(), Ray::new(b).unwrap()], TOL).unwrap()
    };
    vec![
        rays(vec![c64(1.0, 0.0), c64(0.0, 0.0)], vec![c64(0.0, 0.0), c64(1.0, 0.0)]),
        rays(vec![c64(s, 0.0), c64(s, 0.0)], vec![c64(s, 0.0), c64(-s, 0.0)]),
        rays(vec![c64(s, 0.0), c64(0.0, s)], vec![c64(s, 0.0), c64(0.0, -s)]),
    ]
}

/// d + 1 mutually unbiased bases for prime d.
pub fn mub_catalog(d: usize) -> Vec<Context> {
    let omega = |t: usize| {
        let a = 2.0 * std::f64::consts::PI * (t % d) as f64 / d as f64;
        c64(a.cos(), a.sin())
    };
    let mut out = Vec::new();
    let std_rays: Vec<Ray> = (0..d)
        .map(|k| {
            let mut v = vec![c64(0.0, 0.0); d];
            v[k] = c64(1.0, 0.0);
            Ray::new(v).unwrap()
        })
        .collect();
    out.push(Context::from_rays(&std_rays, TOL).unwrap());
    for m in 0..d {
        let rays: Vec<Ray> =
            (0..d).map(|k| Ray::new((0..d).map(|j| omega(m * j * j + k * j)).collect()).unwrap()).collect();
        debug_assert!(inner(rays[0].vector(), rays[1].vector()).norm() < 1e-12);
        out.push(Context::from_rays(&rays, TOL).unwrap());
    }
    out
}
