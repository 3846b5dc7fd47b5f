//! BV operators on formal functions over an odd-symplectic space `W`.
//!
//! Functions are series in the coordinates dual to the generators of `W`
//! (same names, same parities), optionally followed by passive generators
//! such as `t`, `dt` that the Laplacian treats as constants.

use std::sync::Arc;

use num_traits::Zero;
use thiserror::Error;

use crate::linalg::Matrix;
use crate::series::{Alphabet, FormalSeries, SeriesParity, Var};
use crate::space::{FormKind, Parity, SuperSpace};
use crate::{q, qf, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BvError {
    #[error("BV operators need an odd-symplectic space, got {0:?}")]
    NotSymplectic(FormKind),
    #[error("expected an even series, found {0:?} parity")]
    NotEven(SeriesParity),
    #[error("NotPronilpotent: term `{0}` must have weight >= 3 and a non-negative power of hbar")]
    NotPronilpotent(String),
}

/// One canonical pair `(u, v)`: `u` even, `v` odd, `omega(u, v) = scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct DarbouxPair {
    pub even: Vec<Q>,
    pub odd: Vec<Q>,
    pub scale: Q,
}

#[derive(Clone, Debug)]
pub struct BVContext {
    space: SuperSpace,
    alphabet: Arc<Alphabet>,
    darboux: Vec<DarbouxPair>,
    /// Nonzero entries `(even coord, odd coord, c)` of `Δ = Σ c ∂_a ∂_b`.
    laplacian: Vec<(usize, usize, Q)>,
    /// `d` on coordinates: `d(y_i) = Σ_j coeff * y_j`.
    d_coords: Vec<Vec<(usize, Q)>>,
    /// Passive generators with `d(a) = b`.
    passive_d: Vec<(usize, usize)>,
}

/// Symplectic Gram-Schmidt on the even/odd pairing of `space`.
pub fn darboux_basis(space: &SuperSpace) -> Vec<DarbouxPair> {
    let n = space.dim();
    let unit = |i: usize| {
        let mut v = vec![Q::zero(); n];
        v[i] = q(1);
        v
    };
    let mut evens: Vec<Vec<Q>> = (0..n).filter(|&i| !space.parity(i).is_odd()).map(unit).collect();
    let mut odds: Vec<Vec<Q>> = (0..n).filter(|&i| space.parity(i).is_odd()).map(unit).collect();
    let mut pairs = Vec::new();
    while let Some(u) = evens.pop() {
        let k = odds
            .iter()
            .position(|v| !space.pair(&u, v).is_zero())
            .expect("odd-symplectic form is non-degenerate");
        let v = odds.swap_remove(k);
        let lambda = space.pair(&u, &v);
        for e in evens.iter_mut() {
            let c = space.pair(e, &v) / &lambda;
            for (x, y) in e.iter_mut().zip(&u) {
                *x -= &c * y;
            }
        }
        for o in odds.iter_mut() {
            let c = space.pair(&u, o) / &lambda;
            for (x, y) in o.iter_mut().zip(&v) {
                *x -= &c * y;
            }
        }
        pairs.push(DarbouxPair {
            even: u,
            odd: v,
            scale: lambda,
        });
    }
    pairs.reverse();
    pairs
}

impl BVContext {
    pub fn new(space: &SuperSpace) -> Result<Self, BvError> {
        Self::with_passive(space, Vec::new(), Vec::new())
    }

    /// Appends passive generators after the coordinates of `space`;
    /// `passive_d` lists pairs `(a, b)` of indices into `passive` with `d(a) = b`.
    pub fn with_passive(
        space: &SuperSpace,
        passive: Vec<Var>,
        passive_d: Vec<(usize, usize)>,
    ) -> Result<Self, BvError> {
        if space.kind() != FormKind::OddSymplectic {
            return Err(BvError::NotSymplectic(space.kind()));
        }
        let n = space.dim();
        let mut vars: Vec<Var> = space
            .generators()
            .iter()
            .map(|g| Var::coordinate(g.name.clone(), g.parity))
            .collect();
        vars.extend(passive);
        let alphabet = Alphabet::new(vars);

        let darboux = darboux_basis(space);
        let mut c = Matrix::zeros(n, n);
        for p in &darboux {
            for i in 0..n {
                if p.even[i].is_zero() {
                    continue;
                }
                for j in 0..n {
                    if !p.odd[j].is_zero() {
                        c[(i, j)] += &p.even[i] * &p.odd[j] / &p.scale;
                    }
                }
            }
        }
        let mut laplacian = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if !c[(i, j)].is_zero() {
                    laplacian.push((i, j, c[(i, j)].clone()));
                }
            }
        }

        // The coordinate y_i composed with d is Σ_j D_ij y_j; on odd
        // coordinates the dual differential picks up a sign.
        let dm = space.d();
        let d_coords = (0..n)
            .map(|i| {
                let sign = if space.parity(i).is_odd() { q(-1) } else { q(1) };
                (0..n)
                    .filter(|&j| !dm[(i, j)].is_zero())
                    .map(|j| (j, &sign * &dm[(i, j)]))
                    .collect()
            })
            .collect();
        let passive_d = passive_d.into_iter().map(|(a, b)| (a + n, b + n)).collect();
        Ok(BVContext {
            space: space.clone(),
            alphabet,
            darboux,
            laplacian,
            d_coords,
            passive_d,
        })
    }

    pub fn space(&self) -> &SuperSpace {
        &self.space
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn darboux(&self) -> &[DarbouxPair] {
        &self.darboux
    }

    /// Coefficients `c_ab` with `Δ = Σ c_ab ∂_a ∂_b` (a even, b odd).
    pub fn laplacian_coefficients(&self) -> &[(usize, usize, Q)] {
        &self.laplacian
    }

    /// The same context with `Δ` (and hence the bracket) limited to the
    /// coefficient pairs accepted by `keep`.
    pub fn restrict_laplacian(&self, keep: impl Fn(usize, usize) -> bool) -> Self {
        let mut out = self.clone();
        out.laplacian.retain(|(a, b, _)| keep(*a, *b));
        out
    }

    pub fn var(&self, i: usize, cutoff: i32) -> FormalSeries {
        FormalSeries::var(self.alphabet.clone(), cutoff, i)
    }

    pub fn zero(&self, cutoff: i32) -> FormalSeries {
        FormalSeries::zero(self.alphabet.clone(), cutoff)
    }

    /// The odd derivation induced by `d` (plus `d` on passive generators).
    pub fn differential(&self, f: &FormalSeries) -> FormalSeries {
        let mut out = FormalSeries::zero(self.alphabet.clone(), f.cutoff());
        let n = self.space.dim();
        for i in 0..n {
            if self.d_coords[i].is_empty() {
                continue;
            }
            let di = f.derivative(i);
            if di.is_zero() {
                continue;
            }
            let mut lin = FormalSeries::zero(self.alphabet.clone(), f.cutoff());
            for (j, c) in &self.d_coords[i] {
                lin = lin.add(&self.var(*j, f.cutoff()).scale(c));
            }
            out = out.add(&lin.mul(&di));
        }
        for &(a, b) in &self.passive_d {
            let da = f.derivative(a);
            if !da.is_zero() {
                out = out.add(&self.var(b, f.cutoff()).mul(&da));
            }
        }
        out.with_cutoff(f.cutoff())
    }

    /// `Δ f`; the result is exact two weights below `f`.
    pub fn laplacian(&self, f: &FormalSeries) -> FormalSeries {
        let mut out = FormalSeries::zero(self.alphabet.clone(), f.cutoff() - 2);
        let n = self.space.dim();
        let mut odd_derivs: Vec<Option<FormalSeries>> = vec![None; n];
        for (a, b, c) in &self.laplacian {
            let db = odd_derivs[*b].get_or_insert_with(|| f.derivative(*b));
            if db.is_zero() {
                continue;
            }
            out = out.add(&db.derivative(*a).scale(c));
        }
        out
    }

    /// `[f, g] = (-1)^{|f|} Δ(fg) - (-1)^{|f|} Δ(f) g - f Δ(g)`, extended
    /// bilinearly over the homogeneous parts of `f`.
    pub fn bracket(&self, f: &FormalSeries, g: &FormalSeries) -> FormalSeries {
        let (fe, fo) = split_parity(f);
        let mut out = self.bracket_homogeneous(&fe, Parity::Even, g);
        if !fo.is_zero() {
            out = out.add(&self.bracket_homogeneous(&fo, Parity::Odd, g));
        }
        out
    }

    fn bracket_homogeneous(&self, f: &FormalSeries, pf: Parity, g: &FormalSeries) -> FormalSeries {
        let s = pf.sign();
        let t1 = self.laplacian(&f.mul(g)).scale(&s);
        let t2 = self.laplacian(f).mul(g).scale(&-s);
        let t3 = f.mul(&self.laplacian(g)).neg();
        t1.add(&t2).add(&t3)
    }

    /// `X_f(g) = [f, g]`.
    pub fn hamiltonian_derivation(&self, f: &FormalSeries, g: &FormalSeries) -> FormalSeries {
        self.bracket(f, g)
    }

    fn check_master(&self, m: &FormalSeries) -> Result<(), BvError> {
        match m.parity() {
            SeriesParity::Even => {}
            p => return Err(BvError::NotEven(p)),
        }
        let n = self.space.dim();
        for (k, c) in m.terms() {
            let w: i64 = 2 * k.hbar as i64 + k.mono.exps()[..n].iter().map(|&e| e as i64).sum::<i64>();
            if k.hbar < 0 || w < 3 {
                return Err(BvError::NotPronilpotent(m.describe_term(k, c)));
            }
        }
        Ok(())
    }

    /// `(d + ħΔ) m + ½ [m, m]`.
    pub fn qme_residual(&self, m: &FormalSeries) -> Result<FormalSeries, BvError> {
        self.check_master(m)?;
        let dm = self.differential(m);
        let hdm = self.laplacian(m).hbar_shift(1);
        let br = self.bracket(m, m).scale(&qf(1, 2));
        Ok(dm.add(&hdm).add(&br).with_cutoff(m.cutoff()))
    }

    /// Residuals of the master equation layer by layer in `ħ`:
    /// `d m_k + Δ m_{k-1} + ½ Σ_{a+b=k} [m_a, m_b]`.
    pub fn hbar_layer_residuals(&self, m: &FormalSeries) -> Result<Vec<FormalSeries>, BvError> {
        self.check_master(m)?;
        let layers = (m.cutoff().max(0) / 2) as usize;
        let comps: Vec<FormalSeries> = (0..=layers as i32).map(|g| m.hbar_coefficient(g)).collect();
        let mut out = Vec::new();
        for k in 0..=layers {
            let cutoff = m.cutoff() - 2 * k as i32;
            let mut r = self.differential(&comps[k]);
            if k > 0 {
                r = r.add(&self.laplacian(&comps[k - 1]));
            }
            for a in 0..=k {
                r = r.add(&self.bracket(&comps[a], &comps[k - a]).scale(&qf(1, 2)));
            }
            out.push(r.with_cutoff(cutoff));
        }
        Ok(out)
    }

    /// Classical master equation residual `d m_0 + ½ [m_0, m_0]`.
    pub fn cme_residual(&self, m0: &FormalSeries) -> FormalSeries {
        self.differential(m0)
            .add(&self.bracket(m0, m0).scale(&qf(1, 2)))
            .with_cutoff(m0.cutoff())
    }
}

/// Splits a series into its even and odd parts.
pub fn split_parity(f: &FormalSeries) -> (FormalSeries, FormalSeries) {
    let alpha = f.alphabet().clone();
    let even = f.filter(|k| !k.mono.parity(&alpha).is_odd());
    let odd = f.filter(|k| k.mono.parity(&alpha).is_odd());
    (even, odd)
}
