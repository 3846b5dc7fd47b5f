//! Seeded random generators for spaces and series, shared by the test suites.

use std::sync::Arc;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::bv::BVContext;
use crate::integrate::IntegrationProblem;
use crate::linalg::Matrix;
use crate::transfer::{iota, TDtSeries};
use crate::series::{Alphabet, FormalSeries, Monomial};
use crate::space::{FormKind, Generator, Parity, SpaceSpec, SuperSpace};
use crate::{q, qf, Q};

pub use rand::SeedableRng;

pub type FixtureRng = ChaCha8Rng;

pub fn rng(seed: u64) -> FixtureRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small nonzero rational `p/r` with `|p| <= 3`, `1 <= r <= 3`.
pub fn small_q(rng: &mut FixtureRng) -> Q {
    let mut p = rng.gen_range(-3i64..=3);
    if p == 0 {
        p = 1;
    }
    qf(p, rng.gen_range(1..=3))
}

/// Building blocks of an odd-symmetric dg space.
#[derive(Clone, Copy, Debug, Default)]
pub struct SpaceRecipe {
    /// Pairs (even, odd) with `d = 0` and a random nonzero pairing.
    pub harmonic_pairs: usize,
    /// Blocks `c` odd, `dc` even, `<dc, c> = 1`.
    pub acyclic_small: usize,
    /// Blocks `c1, c2` even, `b_i = d c_i` odd, `<c1, b2> = 1`, `<c2, b1> = -1`.
    pub acyclic_large: usize,
    /// Apply a random parity-preserving change of basis afterwards.
    pub scramble: bool,
}

impl SpaceRecipe {
    pub fn dim(&self) -> usize {
        2 * self.harmonic_pairs + 2 * self.acyclic_small + 4 * self.acyclic_large
    }
}

/// An odd-symmetric space with compatible differential built from `recipe`.
pub fn random_space(rng: &mut FixtureRng, recipe: SpaceRecipe) -> SuperSpace {
    let n = recipe.dim();
    let mut gens = Vec::with_capacity(n);
    let mut d = Matrix::zeros(n, n);
    let mut form = Matrix::zeros(n, n);
    let set = |form: &mut Matrix, i: usize, j: usize, v: Q| {
        form[(i, j)] = v.clone();
        form[(j, i)] = v;
    };
    for k in 0..recipe.harmonic_pairs {
        let i = gens.len();
        gens.push(Generator::new(format!("e{k}"), Parity::Even));
        gens.push(Generator::new(format!("o{k}"), Parity::Odd));
        set(&mut form, i, i + 1, small_q(rng));
    }
    for k in 0..recipe.acyclic_small {
        let i = gens.len();
        gens.push(Generator::new(format!("c{k}"), Parity::Odd));
        gens.push(Generator::new(format!("dc{k}"), Parity::Even));
        d[(i + 1, i)] = q(1);
        set(&mut form, i + 1, i, q(1));
    }
    for k in 0..recipe.acyclic_large {
        let i = gens.len();
        gens.push(Generator::new(format!("u{k}"), Parity::Even));
        gens.push(Generator::new(format!("v{k}"), Parity::Even));
        gens.push(Generator::new(format!("du{k}"), Parity::Odd));
        gens.push(Generator::new(format!("dv{k}"), Parity::Odd));
        d[(i + 2, i)] = q(1);
        d[(i + 3, i + 1)] = q(1);
        set(&mut form, i, i + 3, q(1));
        set(&mut form, i + 1, i + 2, q(-1));
    }
    let space = SuperSpace::new(SpaceSpec {
        generators: gens,
        d,
        form,
        kind: FormKind::OddSymmetric,
    })
    .expect("fixture blocks are valid");
    if recipe.scramble {
        scramble(rng, &space)
    } else {
        space
    }
}

/// A random invertible parity-preserving change of basis.
pub fn random_parity_basis(rng: &mut FixtureRng, parities: &[Parity]) -> Matrix {
    let n = parities.len();
    loop {
        let mut p = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if parities[i] == parities[j] {
                    p[(i, j)] = if i == j {
                        q(1)
                    } else if rng.gen_bool(0.4) {
                        q(rng.gen_range(-2..=2))
                    } else {
                        Q::zero()
                    };
                }
            }
        }
        if p.is_invertible() {
            return p;
        }
    }
}

pub fn scramble(rng: &mut FixtureRng, space: &SuperSpace) -> SuperSpace {
    let p = random_parity_basis(rng, &space.parities());
    let names = (0..space.dim())
        .map(|i| format!("{}{}", if space.parity(i).is_odd() { "p" } else { "q" }, i))
        .collect();
    space.change_basis(&p, names).expect("invertible change of basis")
}

/// A random recipe with total dimension at most `max_dim` (at least 2).
pub fn random_recipe(rng: &mut FixtureRng, max_dim: usize) -> SpaceRecipe {
    loop {
        let r = SpaceRecipe {
            harmonic_pairs: rng.gen_range(0..=max_dim / 2),
            acyclic_small: rng.gen_range(0..=max_dim / 2),
            acyclic_large: rng.gen_range(0..=max_dim / 4),
            scramble: rng.gen_bool(0.7),
        };
        if (2..=max_dim).contains(&r.dim()) {
            return r;
        }
    }
}

/// Shape of a random series.
#[derive(Clone, Debug)]
pub struct SeriesShape {
    pub cutoff: i32,
    pub terms: usize,
    /// Only coordinates `0..vars` are used.
    pub vars: usize,
    pub min_weight: i64,
    pub hbar: (i32, i32),
    pub parity: Option<Parity>,
}

pub fn random_series(rng: &mut FixtureRng, alphabet: &Arc<Alphabet>, shape: &SeriesShape) -> FormalSeries {
    let allowed: Vec<usize> = (0..shape.vars).collect();
    random_series_on(rng, alphabet, &allowed, shape)
}

/// Like [`random_series`], using only the listed coordinates.
pub fn random_series_on(rng: &mut FixtureRng, alphabet: &Arc<Alphabet>, allowed: &[usize], shape: &SeriesShape) -> FormalSeries {
    let mut out = FormalSeries::zero(alphabet.clone(), shape.cutoff);
    if allowed.is_empty() {
        return out;
    }
    let mut attempts = 0;
    let mut made = 0;
    while made < shape.terms && attempts < 50 * shape.terms + 50 {
        attempts += 1;
        let hbar = rng.gen_range(shape.hbar.0..=shape.hbar.1);
        let budget = shape.cutoff as i64 - 2 * hbar as i64;
        let floor = (shape.min_weight - 2 * hbar as i64).max(0);
        if budget < floor {
            continue;
        }
        let deg = rng.gen_range(floor..=budget) as usize;
        let mut e = vec![0u32; alphabet.len()];
        let mut order: Vec<usize> = allowed.to_vec();
        let mut ok = true;
        for _ in 0..deg {
            order.shuffle(rng);
            match order
                .iter()
                .find(|&&i| !(alphabet.parity(i).is_odd() && e[i] > 0))
            {
                Some(&i) => e[i] += 1,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let mono = Monomial(e);
        if let Some(p) = shape.parity {
            if mono.parity(alphabet) != p {
                continue;
            }
        }
        out.add_term(mono, hbar, small_q(rng));
        made += 1;
    }
    out
}

/// Sign in the gauge flow `∂_t A = κ ((d + ħΔ) B + [A, B])` making
/// `A(t) + B dt` a solution of the master equation with `d t = dt`.
pub const GAUGE_SIGN: i64 = -1;

/// Homotopy generated by a constant odd gauge parameter `b`, starting at a
/// solution `m` of the master equation in `ctx`.
pub fn gauge_homotopy(ctx: &BVContext, m: &FormalSeries, b: &FormalSeries, t_bound: u32) -> TDtSeries {
    let n = m.cutoff();
    let mut h = TDtSeries::zero(ctx.alphabet().clone(), n, t_bound);
    h.set_a(0, m.clone());
    h.set_b(0, b.clone());
    let mut current = m.clone();
    for k in 0..t_bound {
        let mut next = ctx.bracket(&current, b).with_cutoff(n);
        if k == 0 {
            let db = ctx.differential(b).add(&ctx.laplacian(b).hbar_shift(1));
            next = next.add(&db.with_cutoff(n));
        }
        next = next.scale(&qf(GAUGE_SIGN, k as i64 + 1));
        if next.is_zero() {
            break;
        }
        h.set_a(k + 1, next.clone());
        current = next;
    }
    h
}

/// Coordinates of one parity: functions of these alone are annihilated by
/// the Laplacian and Poisson-commute.
pub fn even_coordinates(ctx: &BVContext) -> Vec<usize> {
    (0..ctx.space().dim()).filter(|&i| !ctx.alphabet().parity(i).is_odd()).collect()
}

/// Random even gauge-trivial deformation of `start`: `A(1)` for a random
/// odd gauge parameter.
pub fn gauge_deform(rng: &mut FixtureRng, ctx: &BVContext, start: &FormalSeries, terms: usize) -> FormalSeries {
    let b = random_series(
        rng,
        ctx.alphabet(),
        &SeriesShape {
            cutoff: start.cutoff(),
            terms,
            vars: ctx.space().dim(),
            min_weight: 3,
            hbar: (0, 1),
            parity: Some(Parity::Odd),
        },
    );
    gauge_homotopy(ctx, start, &b, TDtSeries::default_bound(start.cutoff())).evaluate_at(1)
}

/// Random solution of the master equation on `ΠH(V)`: a function of the
/// even coordinates, then gauge deformed.
pub fn random_h_structure(rng: &mut FixtureRng, prob: &IntegrationProblem, cutoff: i32) -> FormalSeries {
    let ctx = &prob.h;
    let even = even_coordinates(ctx);
    let shape = SeriesShape {
        cutoff,
        terms: 4,
        vars: 0,
        min_weight: 3,
        hbar: (0, 2),
        parity: Some(Parity::Even),
    };
    let base = random_series_on(rng, ctx.alphabet(), &even, &shape);
    gauge_deform(rng, ctx, &base, 2)
}

/// Random solution of the master equation on `ΠV`: `ι` of a structure on
/// `ΠH(V)`, then gauge deformed.
pub fn random_quantum_structure(rng: &mut FixtureRng, prob: &IntegrationProblem, cutoff: i32) -> FormalSeries {
    let on_h = random_h_structure(rng, prob, cutoff);
    let pulled = iota(&on_h, prob);
    gauge_deform(rng, &prob.w, &pulled, 2)
}
