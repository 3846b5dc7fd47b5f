//! Transfer of quantum structures to homology: `ι`, the minimal model `ρ`,
//! homotopies with `t, dt` coefficients and the inverse morphism `ρ̃`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::bv::{BVContext, BvError};
use crate::graphs::{graph_sum_connected, GraphError};
use crate::integrate::{IntegrationError, IntegrationProblem};
use crate::series::{Alphabet, FormalSeries, Monomial, SeriesError, Var};
use crate::space::{Parity, SuperSpace};

#[derive(Debug, Error)]
pub enum TransferError {
    #[error(transparent)]
    Integration(#[from] Box<IntegrationError>),
    #[error(transparent)]
    Graph(#[from] Box<GraphError>),
    #[error(transparent)]
    Bv(#[from] BvError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("master equation fails; leading residual term {0}")]
    QmeViolation(String),
    #[error("classical master equation fails; leading residual term {0}")]
    CmeViolation(String),
    #[error("not harmonic: Δm has term {0}")]
    NotHarmonic(String),
    #[error("strategies disagree: {0}")]
    StrategyMismatch(String),
    #[error("{0}")]
    Malformed(String),
}

impl From<IntegrationError> for TransferError {
    fn from(e: IntegrationError) -> Self {
        TransferError::Integration(Box::new(e))
    }
}

impl From<GraphError> for TransferError {
    fn from(e: GraphError) -> Self {
        TransferError::Graph(Box::new(e))
    }
}

/// How `∫ e^{m/ħ} e^{-σ/2ħ}` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Wick,
    Direct,
    Graphs,
    All,
}

impl Strategy {
    pub const SINGLE: [Strategy; 3] = [Strategy::Wick, Strategy::Direct, Strategy::Graphs];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Wick => "wick",
            Strategy::Direct => "direct",
            Strategy::Graphs => "graphs",
            Strategy::All => "all",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "wick" => Ok(Strategy::Wick),
            "direct" => Ok(Strategy::Direct),
            "graphs" => Ok(Strategy::Graphs),
            "all" => Ok(Strategy::All),
            _ => Err(format!("unknown strategy {s:?}; expected wick, direct, graphs or all")),
        }
    }
}

fn first_term(f: &FormalSeries) -> String {
    f.first_term().unwrap_or_else(|| "0".into())
}

/// A quantum L∞ structure: `m ∈ h[ΠV]`, even, solving the master equation
/// up to its cutoff.
#[derive(Clone, Debug)]
pub struct QuantumLInfinity {
    pub space: SuperSpace,
    pub m: FormalSeries,
}

impl QuantumLInfinity {
    pub fn new(space: SuperSpace, m: FormalSeries) -> Result<Self, TransferError> {
        let ctx = BVContext::new(&space.parity_reverse().map_err(|e| TransferError::Malformed(e.to_string()))?)?;
        if m.alphabet().names() != ctx.alphabet().names() {
            return Err(TransferError::Malformed(format!(
                "series variables {:?} do not match the space {:?}",
                m.alphabet().names(),
                ctx.alphabet().names()
            )));
        }
        let m = m.with_alphabet(ctx.alphabet().clone());
        check_master(&ctx, &m)?;
        Ok(QuantumLInfinity { space, m })
    }

    pub fn cutoff(&self) -> i32 {
        self.m.cutoff()
    }
}

/// Rejects series outside `h`, odd series and master-equation violations.
pub fn check_master(ctx: &BVContext, m: &FormalSeries) -> Result<(), TransferError> {
    if let Some(t) = m.h_violation() {
        return Err(IntegrationError::NotInH(t).into());
    }
    if !m.is_zero() && m.homogeneous_parity() != Some(Parity::Even) {
        return Err(IntegrationError::NotEven.into());
    }
    let r = ctx.qme_residual(m)?;
    if !r.is_zero() {
        return Err(TransferError::QmeViolation(first_term(&r)));
    }
    Ok(())
}

/// `iota`: pulls a function on `ΠH` back along `p`. Passive generators map
/// to themselves.
pub fn iota(f: &FormalSeries, prob: &IntegrationProblem) -> FormalSeries {
    let wa = prob.w_alphabet();
    let n = prob.w.space().dim();
    let pinv = prob.sdr.basis.inverse().expect("adapted basis is invertible");
    let big = i32::MAX / 4;
    let mut images = Vec::with_capacity(f.alphabet().len());
    for i in 0..prob.h_dim {
        let mut s = FormalSeries::zero(wa.clone(), big);
        for j in 0..n {
            if !num_traits::Zero::is_zero(&pinv[(i, j)]) {
                s.add_term(Monomial::var(wa.len(), j), 0, pinv[(i, j)].clone());
            }
        }
        images.push(s);
    }
    for k in prob.h_dim..f.alphabet().len() {
        images.push(FormalSeries::var(wa.clone(), big, n + k - prob.h_dim));
    }
    f.substitute(wa, &images, f.cutoff())
}

/// Every strategy's value of `ħ log ∫ e^{m/ħ} e^{-σ/2ħ}`.
#[derive(Clone, Debug)]
pub struct RhoReport {
    pub m: FormalSeries,
    pub results: Vec<(Strategy, FormalSeries)>,
}

impl RhoReport {
    pub fn strategies_agree(&self) -> bool {
        self.results.windows(2).all(|w| w[0].1 == w[1].1)
    }
}

fn rho_single(m: &FormalSeries, prob: &IntegrationProblem, strategy: Strategy) -> Result<FormalSeries, TransferError> {
    let n = m.cutoff();
    let z = match strategy {
        Strategy::Wick => prob.gaussian_exp_integrate(m)?,
        Strategy::Direct => {
            let e = m.hbar_shift(-1).exp()?;
            prob.direct_integrate(&e)?
        }
        Strategy::Graphs => return Ok(graph_sum_connected(m, prob, n)?),
        Strategy::All => unreachable!(),
    };
    Ok(z.log()?.hbar_shift(1).with_cutoff(n))
}

/// `ħ log ∫ e^{m/ħ} e^{-σ/2ħ}` without checking the master equation;
/// `All` evaluates every strategy and fails unless they agree.
pub fn rho_series(m: &FormalSeries, prob: &IntegrationProblem, strategy: Strategy) -> Result<RhoReport, TransferError> {
    let list: Vec<Strategy> = if strategy == Strategy::All {
        Strategy::SINGLE.to_vec()
    } else {
        vec![strategy]
    };
    let mut results = Vec::new();
    for s in list {
        results.push((s, rho_single(m, prob, s)?));
    }
    let report = RhoReport {
        m: results[0].1.clone(),
        results,
    };
    if !report.strategies_agree() {
        let (a, b) = report
            .results
            .windows(2)
            .find(|w| w[0].1 != w[1].1)
            .map(|w| (w[0].0, w[1].0))
            .unwrap();
        return Err(TransferError::StrategyMismatch(format!("{a} vs {b}")));
    }
    Ok(report)
}

/// `rho`: the minimal model on `H(V)` together with the problem data used.
pub fn rho_with(q: &QuantumLInfinity, strategy: Strategy) -> Result<(QuantumLInfinity, IntegrationProblem, RhoReport), TransferError> {
    let prob = IntegrationProblem::new(&q.space)?;
    let m = q.m.with_alphabet(prob.w_alphabet().clone());
    check_master(&prob.w, &m)?;
    let report = rho_series(&m, &prob, strategy)?;
    let model = QuantumLInfinity {
        space: prob.sdr.h.clone(),
        m: report.m.clone(),
    };
    Ok((model, prob, report))
}

pub fn rho(q: &QuantumLInfinity) -> Result<QuantumLInfinity, TransferError> {
    Ok(rho_with(q, Strategy::Wick)?.0)
}

/// Minimal model of a harmonic cyclic structure: `m′ = ρ(m₀)` and the
/// derivation `X = [m′₀, -]` of its classical part on each coordinate.
#[derive(Clone, Debug)]
pub struct CyclicMinimalModel {
    pub model: QuantumLInfinity,
    pub derivation: Vec<(String, FormalSeries)>,
}

pub fn minimal_model_cyclic(
    space: &SuperSpace,
    m0: &FormalSeries,
    strategy: Strategy,
) -> Result<CyclicMinimalModel, TransferError> {
    let prob = IntegrationProblem::new(space)?;
    let m0 = m0.with_alphabet(prob.w_alphabet().clone());
    if m0.hbar_range().is_some_and(|r| r != (0, 0)) {
        return Err(TransferError::Malformed("a classical structure has no ħ terms".into()));
    }
    let lap = prob.w.laplacian(&m0);
    if !lap.is_zero() {
        return Err(TransferError::NotHarmonic(first_term(&lap)));
    }
    let cme = prob.w.cme_residual(&m0);
    if !cme.is_zero() {
        return Err(TransferError::CmeViolation(first_term(&cme)));
    }
    check_master(&prob.w, &m0)?;
    let report = rho_series(&m0, &prob, strategy)?;
    let classical = report.m.hbar_coefficient(0);
    let derivation = (0..prob.h.space().dim())
        .map(|i| {
            let x = prob.h.var(i, classical.cutoff());
            (prob.h.alphabet().var(i).name.clone(), prob.h.bracket(&classical, &x))
        })
        .collect();
    Ok(CyclicMinimalModel {
        model: QuantumLInfinity {
            space: prob.sdr.h.clone(),
            m: report.m,
        },
        derivation,
    })
}

/// The coefficient generators `t` (even) and `dt` (odd), both of weight 0.
pub fn td_vars() -> Vec<Var> {
    vec![
        Var {
            name: "t".into(),
            parity: Parity::Even,
            weight: 0,
            cap: None,
        },
        Var {
            name: "dt".into(),
            parity: Parity::Odd,
            weight: 0,
            cap: None,
        },
    ]
}

/// `d t = dt`, as passive index pairs.
pub const TD_DIFFERENTIAL: [(usize, usize); 1] = [(0, 1)];

/// Integration problem whose coefficients live in the `t, dt` algebra.
pub fn td_problem(space: &SuperSpace) -> Result<IntegrationProblem, TransferError> {
    Ok(IntegrationProblem::with_passive(space, td_vars(), TD_DIFFERENTIAL.to_vec())?)
}

/// Alphabet with `t, dt` appended.
pub fn with_td(base: &Arc<Alphabet>) -> Arc<Alphabet> {
    let mut vars = base.vars().to_vec();
    vars.extend(td_vars());
    Alphabet::new(vars)
}

/// `H(t) = A(t) + B(t) dt` with `A`, `B` polynomial in `t`, kept modulo
/// `t^a dt^b` with `a + b > t_bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct TDtSeries {
    pub base: Arc<Alphabet>,
    pub cutoff: i32,
    pub t_bound: u32,
    pub a: BTreeMap<u32, FormalSeries>,
    pub b: BTreeMap<u32, FormalSeries>,
}

impl TDtSeries {
    pub fn zero(base: Arc<Alphabet>, cutoff: i32, t_bound: u32) -> Self {
        TDtSeries {
            base,
            cutoff,
            t_bound,
            a: BTreeMap::new(),
            b: BTreeMap::new(),
        }
    }

    /// Default bound on the `t` degree: twice the weight cutoff.
    pub fn default_bound(cutoff: i32) -> u32 {
        2 * cutoff.max(0) as u32
    }

    pub fn constant(f: &FormalSeries, t_bound: u32) -> Self {
        let mut h = Self::zero(f.alphabet().clone(), f.cutoff(), t_bound);
        h.set_a(0, f.clone());
        h
    }

    pub fn set_a(&mut self, k: u32, f: FormalSeries) {
        if k <= self.t_bound && !f.is_zero() {
            self.a.insert(k, f.with_cutoff(self.cutoff));
        } else {
            self.a.remove(&k);
        }
    }

    pub fn set_b(&mut self, k: u32, f: FormalSeries) {
        if k < self.t_bound && !f.is_zero() {
            self.b.insert(k, f.with_cutoff(self.cutoff));
        } else {
            self.b.remove(&k);
        }
    }

    /// Splits a series over `base + [t, dt]`.
    pub fn from_series(f: &FormalSeries, base: &Arc<Alphabet>, t_bound: u32) -> Self {
        let n = base.len();
        assert_eq!(f.alphabet().len(), n + 2, "expected t and dt after the base alphabet");
        let mut a: BTreeMap<u32, FormalSeries> = BTreeMap::new();
        let mut b: BTreeMap<u32, FormalSeries> = BTreeMap::new();
        for (key, c) in f.terms() {
            let e = key.mono.exps();
            let (k, dt) = (e[n], e[n + 1]);
            if k + dt > t_bound {
                continue;
            }
            let target = if dt == 0 { &mut a } else { &mut b };
            target
                .entry(k)
                .or_insert_with(|| FormalSeries::zero(base.clone(), f.cutoff()))
                .add_term(Monomial(e[..n].to_vec()), key.hbar, c.clone());
        }
        a.retain(|_, s| !s.is_zero());
        b.retain(|_, s| !s.is_zero());
        TDtSeries {
            base: base.clone(),
            cutoff: f.cutoff(),
            t_bound,
            a,
            b,
        }
    }

    /// `Σ A_k t^k + Σ B_k t^k dt` over `alphabet` (the base followed by `t, dt`).
    pub fn to_series(&self, alphabet: &Arc<Alphabet>) -> FormalSeries {
        let mut out = FormalSeries::zero(alphabet.clone(), self.cutoff);
        for (parts, dt) in [(&self.a, 0u32), (&self.b, 1u32)] {
            for (&k, s) in parts {
                for (key, c) in s.terms() {
                    let mut e = key.mono.exps().to_vec();
                    e.extend([k, dt]);
                    out.add_term(Monomial(e), key.hbar, c.clone());
                }
            }
        }
        out
    }

    pub fn a_series(&self) -> FormalSeries {
        self.part_series(&self.a)
    }

    pub fn b_series(&self) -> FormalSeries {
        self.part_series(&self.b)
    }

    fn part_series(&self, parts: &BTreeMap<u32, FormalSeries>) -> FormalSeries {
        let ext = with_td(&self.base);
        let mut h = TDtSeries::zero(self.base.clone(), self.cutoff, self.t_bound);
        h.a = parts.clone();
        h.to_series(&ext)
    }

    /// `evaluate_at`: `t = point`, `dt = 0`.
    pub fn evaluate_at(&self, point: u32) -> FormalSeries {
        let mut out = FormalSeries::zero(self.base.clone(), self.cutoff);
        for (&k, s) in &self.a {
            let w = (point as i64).pow(k);
            if w != 0 {
                out = out.add(&s.scale(&crate::q(w)));
            }
        }
        out
    }

    /// Master equation residual with `d t = dt` included, reduced modulo
    /// the truncation ideal.
    pub fn mc_residual(&self, ctx: &BVContext) -> Result<TDtSeries, TransferError> {
        let h = self.to_series(ctx.alphabet());
        let r = ctx.qme_residual(&h)?;
        Ok(TDtSeries::from_series(&r, &self.base, self.t_bound))
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_empty() && self.b.is_empty()
    }

    fn check_mc(&self, ctx: &BVContext) -> Result<(), TransferError> {
        let r = self.mc_residual(ctx)?;
        if !r.is_zero() {
            let s = r.to_series(ctx.alphabet());
            return Err(TransferError::QmeViolation(first_term(&s)));
        }
        Ok(())
    }
}

fn require_td(prob: &IntegrationProblem) -> Result<(), TransferError> {
    let names = prob.w_alphabet().names();
    let n = prob.w.space().dim();
    if names.len() != n + 2 || names[n] != "t" || names[n + 1] != "dt" {
        return Err(TransferError::Malformed("integration problem lacks t, dt coefficients".into()));
    }
    Ok(())
}

fn base_of(alpha: &Arc<Alphabet>) -> Arc<Alphabet> {
    let vars = alpha.vars();
    Alphabet::new(vars[..vars.len() - 2].to_vec())
}

/// `homotopy_transport`: `A′ = ħ log ∫ e^{A/ħ}` and
/// `B′ = e^{-A′/ħ} ∫ e^{A/ħ} B`, integrals against `e^{-σ/2ħ}`.
pub fn homotopy_transport(h: &TDtSeries, prob: &IntegrationProblem) -> Result<TDtSeries, TransferError> {
    require_td(prob)?;
    h.check_mc(&prob.w)?;
    let wa = prob.w_alphabet();
    let n = h.cutoff;
    let a = h.part_series(&h.a).with_alphabet(wa.clone());
    let b = h.part_series(&h.b).with_alphabet(wa.clone());
    let ea = a.hbar_shift(-1).exp()?;
    let za = prob.gaussian_exp_integrate(&a)?;
    let a_new = za.log()?.hbar_shift(1).with_cutoff(n);
    let yb = prob.wick_integrate(&ea.mul(&b));
    let b_new = a_new.hbar_shift(-1).neg().exp()?.mul(&yb).with_cutoff(n);

    let h_base = base_of(prob.h_alphabet());
    let a_part = TDtSeries::from_series(&a_new, &h_base, h.t_bound);
    let b_part = TDtSeries::from_series(&b_new, &h_base, h.t_bound);
    let mut out = TDtSeries::zero(h_base, n, h.t_bound);
    out.a = a_part.a;
    for (k, s) in b_part.a {
        out.set_b(k, s);
    }
    Ok(out)
}

/// `rho_tilde`: `ħ log ∫ e^{H/ħ} e^{-σ/2ħ}` with `t, dt` coefficients.
pub fn rho_tilde(h: &TDtSeries, prob: &IntegrationProblem) -> Result<TDtSeries, TransferError> {
    require_td(prob)?;
    h.check_mc(&prob.w)?;
    let x = h.to_series(prob.w_alphabet());
    let z = prob.gaussian_exp_integrate(&x)?;
    let out = z.log()?.hbar_shift(1).with_cutoff(h.cutoff);
    Ok(TDtSeries::from_series(&out, &base_of(prob.h_alphabet()), h.t_bound))
}

/// `ι` applied coefficientwise.
pub fn iota_td(h: &TDtSeries, prob: &IntegrationProblem) -> Result<TDtSeries, TransferError> {
    require_td(prob)?;
    let x = h.to_series(prob.h_alphabet());
    let y = iota(&x, prob);
    Ok(TDtSeries::from_series(&y, &base_of(prob.w_alphabet()), h.t_bound))
}
