//! Formal Gaussian integration over the Lagrangian `L_s`.
//!
//! Functions on `W = ΠV` are rewritten in adapted coordinates `z = T^{-1} y`
//! split into blocks `[h | l | e | passive]` (homology, `L_s`, `Π im d`,
//! coefficient generators). Integration sets the `e` coordinates to zero and
//! replaces every product of `l` coordinates by its Gaussian moment
//! against `exp(-Φ/ħ)`, normalized so that `∫ 1 = 1`.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::bv::{split_parity, BVContext, BvError};
use crate::linalg::Matrix;
use crate::sdr::{canonical_coordinates, hodge_decompose, lagrangian_ls, LagrangianData, SdrData, SdrError};
use crate::series::{Alphabet, FormalSeries, Monomial, SeriesError, Var};
use crate::space::{SpaceError, SuperSpace};
use crate::{q, Q};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrationError {
    #[error(transparent)]
    Sdr(#[from] SdrError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Bv(#[from] BvError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("integrand is not in h[W]: {0}")]
    NotInH(String),
    #[error("integrand must be even")]
    NotEven,
}

/// Everything needed to integrate functions on `W` over `L_s`.
#[derive(Clone, Debug)]
pub struct IntegrationProblem {
    pub sdr: SdrData,
    pub lagrangian: LagrangianData,
    /// `W = ΠV` with its BV operators.
    pub w: BVContext,
    /// `W` rewritten in the adapted basis.
    pub adapted: BVContext,
    /// `ΠH(V)`, where results live.
    pub h: BVContext,
    pub h_dim: usize,
    pub l_dim: usize,
    /// `y_i` as a linear form in the adapted coordinates.
    to_adapted: Vec<FormalSeries>,
    /// `⟨z_a z_b⟩ / ħ` on the `l` block.
    propagator: Matrix,
    /// `Φ = -S` on `L_s`, as a function of the adapted `l` coordinates.
    phi: FormalSeries,
}

fn unique_name(base: &str, taken: &mut std::collections::HashSet<String>) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('\'');
    }
    taken.insert(name.clone());
    name
}

impl IntegrationProblem {
    pub fn new(v: &SuperSpace) -> Result<Self, IntegrationError> {
        Self::with_passive(v, Vec::new(), Vec::new())
    }

    /// Same, with passive coefficient generators appended to every alphabet.
    pub fn with_passive(
        v: &SuperSpace,
        passive: Vec<Var>,
        passive_d: Vec<(usize, usize)>,
    ) -> Result<Self, IntegrationError> {
        let sdr = hodge_decompose(v)?;
        Self::from_sdr(sdr, passive, passive_d)
    }

    pub fn from_sdr(sdr: SdrData, passive: Vec<Var>, passive_d: Vec<(usize, usize)>) -> Result<Self, IntegrationError> {
        let w_space = sdr.v.parity_reverse()?;
        let lagrangian = lagrangian_ls(&sdr, &w_space)?;
        let n = w_space.dim();
        let (h_dim, l_dim) = (sdr.h_dim, sdr.c_dim);

        let mut taken: std::collections::HashSet<String> = w_space.names().into_iter().collect();
        taken.extend(passive.iter().map(|p| p.name.clone()));
        let h_names = sdr.h.names();
        let mut names = h_names.clone();
        names.extend((0..l_dim).map(|k| unique_name(&format!("l{k}"), &mut taken)));
        names.extend((0..l_dim).map(|k| unique_name(&format!("e{k}"), &mut taken)));
        // adapted names may reuse W names for the homology block only
        let adapted_space = w_space.change_basis(&sdr.basis, names)?;
        let w = BVContext::with_passive(&w_space, passive.clone(), passive_d.clone())?;
        let adapted = BVContext::with_passive(&adapted_space, passive.clone(), passive_d.clone())?;
        let h = BVContext::with_passive(&sdr.h.parity_reverse()?, passive.clone(), passive_d)?;

        let za = adapted.alphabet().clone();
        let big = i32::MAX / 4;
        let mut to_adapted: Vec<FormalSeries> = (0..n)
            .map(|i| {
                let mut s = FormalSeries::zero(za.clone(), big);
                for k in 0..n {
                    if !sdr.basis[(i, k)].is_zero() {
                        s.add_term(Monomial::var(za.len(), k), 0, sdr.basis[(i, k)].clone());
                    }
                }
                s
            })
            .collect();
        for j in 0..passive.len() {
            to_adapted.push(FormalSeries::var(za.clone(), big, n + j));
        }

        // Φ in the adapted l coordinates, then its propagator
        let l_images: Vec<FormalSeries> = (0..l_dim)
            .map(|a| FormalSeries::var(za.clone(), big, h_dim + a))
            .collect();
        let phi = lagrangian.phi.substitute(&za, &l_images, 2);
        let mut k = Matrix::zeros(l_dim, l_dim);
        for a in 0..l_dim {
            let da = phi.derivative(h_dim + a);
            for c in 0..l_dim {
                k[(a, c)] = da.coeff(&Monomial::var(za.len(), h_dim + c), 0);
            }
        }
        let kt_inv = k
            .transpose()
            .inverse()
            .ok_or_else(|| SdrError::Degenerate("Gaussian weight is degenerate".into()))?;
        let mut propagator = kt_inv;
        for a in 0..l_dim {
            if za.parity(h_dim + a).is_odd() {
                for c in 0..l_dim {
                    propagator[(a, c)] = -propagator[(a, c)].clone();
                }
            }
        }
        Ok(IntegrationProblem {
            sdr,
            lagrangian,
            w,
            adapted,
            h,
            h_dim,
            l_dim,
            to_adapted,
            propagator,
            phi,
        })
    }

    pub fn w_alphabet(&self) -> &Arc<Alphabet> {
        self.w.alphabet()
    }

    pub fn adapted_alphabet(&self) -> &Arc<Alphabet> {
        self.adapted.alphabet()
    }

    pub fn h_alphabet(&self) -> &Arc<Alphabet> {
        self.h.alphabet()
    }

    /// `⟨z_a z_b⟩ / ħ` for `l` coordinates `a`, `b`.
    pub fn propagator(&self) -> &Matrix {
        &self.propagator
    }

    pub fn phi(&self) -> &FormalSeries {
        &self.phi
    }

    fn is_e(&self, i: usize) -> bool {
        i >= self.h_dim + self.l_dim && i < self.h_dim + 2 * self.l_dim
    }

    fn is_l(&self, i: usize) -> bool {
        i >= self.h_dim && i < self.h_dim + self.l_dim
    }

    /// Rewrites a function on `W` in adapted coordinates.
    pub fn to_adapted(&self, f: &FormalSeries) -> FormalSeries {
        f.substitute(self.adapted.alphabet(), &self.to_adapted, f.cutoff())
    }

    /// Restriction to `ΠH ⊕ L_s`: drops terms containing `e` coordinates.
    pub fn restrict_to_domain(&self, fz: &FormalSeries) -> FormalSeries {
        let kill: Vec<usize> = (self.h_dim + self.l_dim..self.h_dim + 2 * self.l_dim).collect();
        fz.restrict_indices(&kill)
    }

    /// `wick_integrate` for a function on `W`.
    pub fn wick_integrate(&self, f: &FormalSeries) -> FormalSeries {
        self.wick_integrate_adapted(&self.restrict_to_domain(&self.to_adapted(f)))
    }

    /// `integrate_with_coefficients`: the passive generators ride along, so
    /// this is `wick_integrate` on the extended alphabet.
    pub fn integrate_with_coefficients(&self, f: &FormalSeries) -> FormalSeries {
        self.wick_integrate(f)
    }

    /// Wick contraction of a function already in adapted coordinates.
    pub fn wick_integrate_adapted(&self, fz: &FormalSeries) -> FormalSeries {
        let za = self.adapted.alphabet();
        let mut memo: HashMap<Vec<u32>, Q> = HashMap::new();
        let mut out = FormalSeries::zero(self.h.alphabet().clone(), fz.cutoff());
        for (k, c) in fz.terms() {
            let exps = k.mono.exps();
            if (0..za.len()).any(|i| self.is_e(i) && exps[i] > 0) {
                continue;
            }
            let lpart: Vec<u32> = exps[self.h_dim..self.h_dim + self.l_dim].to_vec();
            let deg: u32 = lpart.iter().sum();
            if deg % 2 == 1 {
                continue;
            }
            let moment = self.moment(&lpart, &mut memo);
            if moment.is_zero() {
                continue;
            }
            out.add_term(self.project(exps), k.hbar + (deg / 2) as i32, c * moment);
        }
        out
    }

    /// Exponents of a domain monomial without its `l` and `e` parts.
    fn project(&self, exps: &[u32]) -> Monomial {
        let mut e: Vec<u32> = exps[..self.h_dim].to_vec();
        e.extend_from_slice(&exps[self.h_dim + 2 * self.l_dim..]);
        Monomial(e)
    }

    /// `⟨Π_a z_a^{e_a}⟩ / ħ^{deg/2}` in stored factor order.
    fn moment(&self, e: &[u32], memo: &mut HashMap<Vec<u32>, Q>) -> Q {
        let Some(a) = e.iter().position(|&x| x > 0) else {
            return Q::one();
        };
        if let Some(v) = memo.get(e) {
            return v.clone();
        }
        let za = self.adapted.alphabet();
        let odd = |i: usize| za.parity(self.h_dim + i).is_odd();
        let mut total = Q::zero();
        let mut rest = e.to_vec();
        rest[a] -= 1;
        // odd factors strictly between the first factor and the partner
        let mut odd_between = if odd(a) { rest[a] } else { 0 };
        for b in a..e.len() {
            if b > a + 1 && odd(b - 1) {
                odd_between += rest[b - 1];
            }
            if rest[b] == 0 || self.propagator[(a, b)].is_zero() {
                continue;
            }
            let negative = b > a && odd(b) && odd_between % 2 == 1;
            let mut rem = rest.clone();
            rem[b] -= 1;
            let sub = self.moment(&rem, memo);
            if !sub.is_zero() {
                let term = q(rest[b] as i64) * &self.propagator[(a, b)] * sub;
                total += if negative { -term } else { term };
            }
        }
        memo.insert(e.to_vec(), total.clone());
        total
    }

    /// `direct_integrate`: coordinate-by-coordinate rules in canonical
    /// coordinates for `Φ`.
    pub fn direct_integrate(&self, f: &FormalSeries) -> Result<FormalSeries, IntegrationError> {
        let fz = self.restrict_to_domain(&self.to_adapted(f));
        self.direct_integrate_adapted(&fz)
    }

    pub fn direct_integrate_adapted(&self, fz: &FormalSeries) -> Result<FormalSeries, IntegrationError> {
        let za = self.adapted.alphabet().clone();
        let l_alpha = self.lagrangian.phi.alphabet().clone();
        // Φ over its own l alphabet; canonical transform z_l = T u
        let cc = canonical_coordinates(&self.lagrangian_phi_local())?;
        let big = i32::MAX / 4;
        let images: Vec<FormalSeries> = (0..za.len())
            .map(|i| {
                if self.is_l(i) {
                    let a = i - self.h_dim;
                    let mut s = FormalSeries::zero(za.clone(), big);
                    for b in 0..self.l_dim {
                        if !cc.transform[(a, b)].is_zero() {
                            s.add_term(Monomial::var(za.len(), self.h_dim + b), 0, cc.transform[(a, b)].clone());
                        }
                    }
                    s
                } else {
                    FormalSeries::var(za.clone(), big, i)
                }
            })
            .collect();
        let fu = fz.substitute(&za, &images, fz.cutoff());
        let _ = l_alpha;
        let mut out = FormalSeries::zero(self.h.alphabet().clone(), fz.cutoff());
        'terms: for (k, c) in fu.terms() {
            let exps = k.mono.exps();
            let mut coeff = c.clone();
            let mut hbar = k.hbar;
            for (idx, &a) in cc.even.iter().enumerate() {
                let p = exps[self.h_dim + a];
                if p % 2 == 1 {
                    continue 'terms;
                }
                // ∫ x^{2n+2} = (2n+1)(ħ/λ) ∫ x^{2n}
                for j in 0..p / 2 {
                    coeff = coeff * q(2 * j as i64 + 1) / &cc.lambdas[idx];
                    hbar += 1;
                }
            }
            for (idx, &(a, b)) in cc.odd_pairs.iter().enumerate() {
                match (exps[self.h_dim + a], exps[self.h_dim + b]) {
                    (0, 0) => {}
                    (1, 1) => {
                        // ∫ ξ ξ' = -ħ / c for Φ = c ξ ξ'
                        coeff = -coeff / &cc.pair_scales[idx];
                        hbar += 1;
                    }
                    _ => continue 'terms,
                }
            }
            out.add_term(self.project(exps), hbar, coeff);
        }
        Ok(out)
    }

    /// `Φ` written over a bare `l` alphabet.
    fn lagrangian_phi_local(&self) -> FormalSeries {
        let la = self.lagrangian.phi.alphabet().clone();
        let za = self.adapted.alphabet();
        let mut out = FormalSeries::zero(la.clone(), 2);
        for (k, c) in self.phi.terms() {
            let e = k.mono.exps()[self.h_dim..self.h_dim + self.l_dim].to_vec();
            out.add_term(Monomial(e), k.hbar, c.clone());
        }
        let _ = za;
        out
    }

    /// `gaussian_exp_integrate`: `∫ exp(m/ħ) exp(-σ/2ħ)`, exact up to weight
    /// `N - 2` where `N` is the cutoff of `m`.
    pub fn gaussian_exp_integrate(&self, m: &FormalSeries) -> Result<FormalSeries, IntegrationError> {
        self.check_h(m)?;
        let mz = self.restrict_to_domain(&self.to_adapted(m));
        let e = mz.hbar_shift(-1).exp()?;
        Ok(self.wick_integrate_adapted(&e))
    }

    fn check_h(&self, m: &FormalSeries) -> Result<(), IntegrationError> {
        if let Some(t) = m.h_violation() {
            return Err(IntegrationError::NotInH(t));
        }
        if m.homogeneous_parity() != Some(crate::space::Parity::Even) {
            return Err(IntegrationError::NotEven);
        }
        Ok(())
    }

    /// `∫ Δ_⊥(f exp(S/ħ))`, with `Δ_⊥` the part of the Laplacian pairing
    /// `L_s` with `Π im d`. Vanishes identically.
    pub fn stokes_residual(&self, f: &FormalSeries) -> FormalSeries {
        let (hd, ld) = (self.h_dim, self.l_dim);
        let perp = self
            .adapted
            .restrict_laplacian(|a, b| a >= hd && b >= hd && a < hd + 2 * ld && b < hd + 2 * ld);
        let fz = self.to_adapted(f);
        let n = self.w.space().dim();
        let ham = self
            .lagrangian
            .hamiltonian
            .relabel(self.w.alphabet(), &(0..n).collect::<Vec<_>>())
            .with_cutoff(f.cutoff() + 8);
        let s = self.to_adapted(&ham);
        let g = s.hbar_shift(-1);
        let corr = perp.laplacian(&g).add(&perp.bracket(&g, &g).scale(&crate::qf(1, 2)));
        let (fe, fo) = split_parity(&fz);
        let mut total = FormalSeries::zero(self.adapted.alphabet().clone(), fz.cutoff());
        for (part, sign) in [(fe, q(1)), (fo, q(-1))] {
            if part.is_zero() {
                continue;
            }
            let r = perp
                .laplacian(&part)
                .add(&perp.bracket(&part, &g).add(&part.mul(&corr)).scale(&sign));
            total = total.add(&r);
        }
        self.wick_integrate_adapted(&self.restrict_to_domain(&total))
    }
}
