//! Random instances `min eta^T [x]_{2 d1}` s.t. `tau - z^T M z >= 0` on `U`,
//! where `z` stacks `[x]_{d2}` and `[u]_{d2}` and `M` is positive semidefinite.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::conic::InteriorPoint;
use crate::error::{Error, Result};
use crate::exchange::{solve_inner, ExchangeOptions, SippProblem};
use crate::poly::{monomial_basis, Polynomial, SemialgebraicSet, Var, VariableSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexSetKind {
    Ball,
    Box,
    Simplex,
}

impl std::str::FromStr for IndexSetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ball" => Ok(IndexSetKind::Ball),
            "box" => Ok(IndexSetKind::Box),
            "simplex" => Ok(IndexSetKind::Simplex),
            _ => Err(Error::Problem(format!("unknown index set `{s}` (ball, box or simplex)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomInstanceSpec {
    pub n: usize,
    pub p: usize,
    pub d1: usize,
    pub d2: usize,
    pub index_set: IndexSetKind,
    pub seed: u64,
}

/// The generated problem and its data.
#[derive(Clone, Debug)]
pub struct RandomInstance {
    pub problem: SippProblem,
    pub tau: f64,
    pub m: DMatrix<f64>,
    pub eta: Vec<f64>,
}

fn sq_sum(vars: &[Var]) -> Polynomial {
    let mut s = Polynomial::zero();
    for &v in vars {
        let p = Polynomial::var(v);
        s = &s + &(&p * &p);
    }
    s
}

/// Redraws of `(tau, M)` before giving up.
const MAX_DRAWS: usize = 200;

/// Index set as used by the generator.
pub fn index_set(kind: IndexSetKind, p: usize) -> SemialgebraicSet {
    let sp = VariableSpace::u(p);
    let vars = sp.vars();
    let ineqs = match kind {
        IndexSetKind::Ball => vec![&Polynomial::constant(1.0) - &sq_sum(&vars)],
        IndexSetKind::Box => vars.iter().map(|&v| &Polynomial::constant(1.0) - &sq_sum(&[v])).collect(),
        IndexSetKind::Simplex => {
            let mut g: Vec<Polynomial> = vars.iter().map(|&v| Polynomial::var(v)).collect();
            let mut s = Polynomial::constant(1.0);
            for &v in &vars {
                s = &s - &Polynomial::var(v);
            }
            g.push(s);
            g
        }
    };
    SemialgebraicSet::new(sp, vec![], ineqs).expect("index set is over u")
}

/// Deterministic in `spec.seed`. `M = A^T A / N` with a standard normal
/// `N x N` matrix `A`; `tau` and `M` are redrawn until `x = 0` is strictly
/// feasible, i.e. `g(0, 0) > 0` and the certified lower bound of
/// `min_{u in U} g(0, u)` is positive.
pub fn generate_random_instance(spec: &RandomInstanceSpec) -> Result<RandomInstance> {
    if spec.n == 0 || spec.p == 0 || spec.d1 == 0 || spec.d2 == 0 {
        return Err(Error::Problem("n, p, d1 and d2 must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let xs = VariableSpace::x(spec.n);
    let us = VariableSpace::u(spec.p);
    let fbasis = monomial_basis(&xs, 2 * spec.d1);
    let eta: Vec<f64> = (0..fbasis.len()).map(|_| rng.sample(StandardNormal)).collect();
    let objective = Polynomial::from_terms(fbasis.into_iter().zip(eta.iter().copied()));

    let mut z: Vec<Polynomial> = monomial_basis(&xs, spec.d2).into_iter().map(|m| Polynomial::term(m, 1.0)).collect();
    z.extend(monomial_basis(&us, spec.d2).into_iter().map(|m| Polynomial::term(m, 1.0)));
    let nz = z.len();
    // z(0, 0) has a one at each constant monomial
    let ones: Vec<usize> = z.iter().enumerate().filter(|(_, p)| p.degree() == 0).map(|(i, _)| i).collect();
    let x_set = SemialgebraicSet::new(xs.clone(), vec![], vec![&Polynomial::constant(1.0) - &sq_sum(&xs.vars())])?;
    let backend = InteriorPoint::default();
    let opts = ExchangeOptions::default();
    for _ in 0..MAX_DRAWS {
        let tau = rng.random_range(1.0..=10.0);
        let a = DMatrix::from_fn(nz, nz, |_, _| rng.sample::<f64, _>(StandardNormal));
        let m = a.transpose() * &a / nz as f64;
        let g00 = tau - ones.iter().flat_map(|&i| ones.iter().map(move |&j| (i, j))).map(|(i, j)| m[(i, j)]).sum::<f64>();
        if g00 <= 0.0 {
            continue;
        }
        let mut coupling = Polynomial::constant(tau);
        for i in 0..nz {
            for j in i..nz {
                let c = if i == j { m[(i, j)] } else { 2.0 * m[(i, j)] };
                coupling = &coupling - &(&z[i] * &z[j]).scale(c);
            }
        }
        let mut problem = SippProblem::new(objective.clone(), coupling, x_set.clone(), index_set(spec.index_set, spec.p))?;
        // g(0, 0) > 0 alone leaves most draws infeasible somewhere on U
        let inner = solve_inner(&problem, &vec![0.0; spec.n], &opts, &backend)?;
        if inner.value.is_nan() || inner.value <= 0.0 {
            continue;
        }
        problem.name = format!(
            "random-n{}-p{}-d{}{}-{:?}-{}",
            spec.n, spec.p, spec.d1, spec.d2, spec.index_set, spec.seed
        )
        .to_lowercase();
        return Ok(RandomInstance { problem, tau, m, eta });
    }
    Err(Error::Problem(format!("no strictly feasible draw in {MAX_DRAWS} attempts")))
}
