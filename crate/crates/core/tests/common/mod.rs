#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sipp::poly::{exponent_basis, Monomial, Polynomial, SemialgebraicSet, Var, VariableSpace};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense random polynomial of degree `<= d` in `vars`, coefficients uniform in [-1, 1].
pub fn random_poly(rng: &mut ChaCha8Rng, vars: &[Var], d: usize) -> Polynomial {
    Polynomial::from_terms(
        exponent_basis(vars.len(), d)
            .into_iter()
            .map(|e| (Monomial::from_exponents(vars, &e), rng.random_range(-1.0..=1.0))),
    )
}

pub fn random_point(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-r..=r)).collect()
}

pub fn p(s: &str) -> Polynomial {
    s.parse().unwrap()
}

/// Brute-force minimum of `f` over the points of a uniform grid on `[lo, hi]^n`
/// that satisfy the constraints of `set` within `tol`.
pub fn grid_min(f: &Polynomial, set: &SemialgebraicSet, lo: f64, hi: f64, steps: usize, tol: f64) -> (f64, Vec<f64>) {
    let n = set.space.dim;
    let mut best = (f64::INFINITY, Vec::new());
    let total = steps.pow(n as u32);
    let mut z = vec![0.0; n];
    for i in 0..total {
        let mut rem = i;
        for zj in z.iter_mut() {
            *zj = lo + (hi - lo) * (rem % steps) as f64 / (steps - 1) as f64;
            rem /= steps;
        }
        if set.violation(&z).unwrap() <= tol {
            let v = f.eval_at(&set.space, &z).unwrap();
            if v < best.0 {
                best = (v, z.clone());
            }
        }
    }
    best
}

/// Local polish of a grid minimum: coordinate pattern search inside the set.
pub fn polish_min(f: &Polynomial, set: &SemialgebraicSet, start: (f64, Vec<f64>), h0: f64) -> f64 {
    let (mut fv, mut z) = start;
    let mut h = h0;
    while h > 1e-9 {
        let mut moved = false;
        for j in 0..z.len() {
            for s in [-1.0, 1.0] {
                let mut w = z.clone();
                w[j] += s * h;
                if set.violation(&w).unwrap() <= 0.0 {
                    let v = f.eval_at(&set.space, &w).unwrap();
                    if v < fv {
                        fv = v;
                        z = w;
                        moved = true;
                    }
                }
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    fv
}

pub fn xspace(n: usize) -> VariableSpace {
    VariableSpace::x(n)
}

/// Minimum of `f` over the closed unit ball in `n <= 3` variables: a grid with
/// local polish for the interior, and a grid in spherical coordinates with
/// pattern search for the boundary.
pub fn ball_min(f: &Polynomial, set: &SemialgebraicSet) -> f64 {
    let n = set.space.dim;
    let steps = [0, 2001, 201, 41][n];
    let inner = polish_min(f, set, grid_min(f, set, -1.0, 1.0, steps, 0.0), 2.0 / steps as f64);
    let on_sphere = |a: &[f64]| -> Vec<f64> {
        match n {
            1 => vec![if a[0] >= 0.0 { 1.0 } else { -1.0 }],
            2 => vec![a[0].cos(), a[0].sin()],
            _ => vec![a[1].sin() * a[0].cos(), a[1].sin() * a[0].sin(), a[1].cos()],
        }
    };
    let val = |a: &[f64]| f.eval_at(&set.space, &on_sphere(a)).unwrap();
    let dims = if n == 1 { 1 } else { n - 1 };
    let m: usize = if dims == 1 { 4000 } else { 400 };
    let mut best = (f64::INFINITY, vec![0.0; dims]);
    for i in 0..m.pow(dims as u32) {
        let a: Vec<f64> = (0..dims)
            .map(|j| {
                let k = (i / m.pow(j as u32)) % m;
                if j == 0 { -std::f64::consts::PI + std::f64::consts::TAU * k as f64 / m as f64 } else { std::f64::consts::PI * k as f64 / (m - 1) as f64 }
            })
            .collect();
        let v = val(&a);
        if v < best.0 {
            best = (v, a);
        }
    }
    let (mut fv, mut a) = best;
    let mut h = 0.01;
    while h > 1e-10 {
        let mut moved = false;
        for j in 0..dims {
            for s in [-1.0, 1.0] {
                let mut w = a.clone();
                w[j] += s * h;
                let v = val(&w);
                if v < fv {
                    fv = v;
                    a = w;
                    moved = true;
                }
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    inner.min(fv)
}
