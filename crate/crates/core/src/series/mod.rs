//! Sparse, weight-truncated formal series in super-commuting generators with
//! a Laurent variable `hbar`.
//!
//! A term `c * hbar^g * x^e` has weight `2g + sum_i w_i e_i`, where `w_i` is the
//! weight of generator `i` (1 for coordinates, 0 for passive coefficient
//! generators such as `t` and `dt`). A series remembers a cutoff `N`: it is
//! exact for all weights `<= N` and stores nothing above it.
//!
//! Monomials keep their exponents in the fixed generator order; the Koszul
//! sign of a product is the parity of the number of odd-generator inversions
//! needed to restore that order.

pub mod json;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::space::{Generator, Parity};
use crate::{q, Q};

pub use json::{SeriesJson, TermJson};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("cutoff mismatch: {0} vs {1}")]
    CutoffMismatch(i32, i32),
    #[error("series live over different generator sets")]
    AlphabetMismatch,
    #[error("NotPronilpotent: term `{0}` has weight <= 0")]
    NotPronilpotent(String),
    #[error("NotUnital: constant term is {0}, expected 1")]
    NotUnital(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("malformed series: {0}")]
    Malformed(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Var {
    pub name: String,
    pub parity: Parity,
    /// Contribution of one power of this generator to the weight.
    pub weight: u32,
    /// Largest exponent kept; `None` means unbounded (odd generators are
    /// capped at 1 regardless).
    pub cap: Option<u32>,
}

impl Var {
    pub fn coordinate(name: impl Into<String>, parity: Parity) -> Self {
        Var {
            name: name.into(),
            parity,
            weight: 1,
            cap: None,
        }
    }

    pub fn max_exponent(&self) -> u32 {
        if self.parity.is_odd() {
            1
        } else {
            self.cap.unwrap_or(u32::MAX)
        }
    }
}

/// The ordered list of generators a series is written in.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    vars: Vec<Var>,
    odd_mask: u128,
}

impl Alphabet {
    pub fn new(vars: Vec<Var>) -> Arc<Self> {
        assert!(vars.len() <= 128, "at most 128 generators are supported");
        let odd_mask = vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.parity.is_odd())
            .fold(0u128, |m, (i, _)| m | (1u128 << i));
        Arc::new(Alphabet { vars, odd_mask })
    }

    /// Coordinates dual to the given generators, all of weight one.
    pub fn from_generators(gens: &[Generator]) -> Arc<Self> {
        Self::new(
            gens.iter()
                .map(|g| Var::coordinate(g.name.clone(), g.parity))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn var(&self, i: usize) -> &Var {
        &self.vars[i]
    }

    pub fn parity(&self, i: usize) -> Parity {
        self.vars[i].parity
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.vars.iter().map(|v| v.name.clone()).collect()
    }

    fn odd_mask(&self) -> u128 {
        self.odd_mask
    }
}

/// Exponent vector in alphabet order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    fn odd_bits(&self, alpha: &Alphabet) -> u128 {
        let mut m = 0u128;
        for (i, &e) in self.0.iter().enumerate() {
            if e > 0 && (alpha.odd_mask() >> i) & 1 == 1 {
                m |= 1u128 << i;
            }
        }
        m
    }

    pub fn parity(&self, alpha: &Alphabet) -> Parity {
        if self.odd_bits(alpha).count_ones() % 2 == 1 {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn weight(&self, alpha: &Alphabet) -> i64 {
        self.0
            .iter()
            .zip(alpha.vars())
            .map(|(&e, v)| e as i64 * v.weight as i64)
            .sum()
    }
}

/// Sign `(-1)^k` where `k` counts pairs (odd generator `j` of `b`, odd generator
/// `i > j` of `a`): the cost of sorting `a * b` back into generator order.
fn koszul_sign(a_bits: u128, b_bits: u128) -> bool {
    let mut flips = 0u32;
    let mut b = b_bits;
    while b != 0 {
        let j = b.trailing_zeros();
        let above = if j >= 127 { 0 } else { a_bits >> (j + 1) };
        flips += above.count_ones();
        b &= b - 1;
    }
    flips % 2 == 1
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermKey {
    pub hbar: i32,
    pub mono: Monomial,
}

#[derive(Clone, PartialEq, Eq)]
pub struct FormalSeries {
    alphabet: Arc<Alphabet>,
    cutoff: i32,
    terms: BTreeMap<TermKey, Q>,
}

/// Parity summary of a series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesParity {
    Even,
    Odd,
    Mixed,
}

impl FormalSeries {
    pub fn zero(alphabet: Arc<Alphabet>, cutoff: i32) -> Self {
        FormalSeries {
            alphabet,
            cutoff,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(alphabet: Arc<Alphabet>, cutoff: i32, c: Q) -> Self {
        let n = alphabet.len();
        let mut s = Self::zero(alphabet, cutoff);
        s.add_term(Monomial::one(n), 0, c);
        s
    }

    pub fn one(alphabet: Arc<Alphabet>, cutoff: i32) -> Self {
        Self::constant(alphabet, cutoff, Q::one())
    }

    /// The generator `i` as a series.
    pub fn var(alphabet: Arc<Alphabet>, cutoff: i32, i: usize) -> Self {
        let n = alphabet.len();
        let mut s = Self::zero(alphabet, cutoff);
        s.add_term(Monomial::var(n, i), 0, Q::one());
        s
    }

    pub fn var_named(alphabet: Arc<Alphabet>, cutoff: i32, name: &str) -> Result<Self, SeriesError> {
        let i = alphabet
            .index_of(name)
            .ok_or_else(|| SeriesError::UnknownGenerator(name.into()))?;
        Ok(Self::var(alphabet, cutoff, i))
    }

    /// `hbar^k` as a series.
    pub fn hbar_power(alphabet: Arc<Alphabet>, cutoff: i32, k: i32) -> Self {
        let n = alphabet.len();
        let mut s = Self::zero(alphabet, cutoff);
        s.add_term(Monomial::one(n), k, Q::one());
        s
    }

    /// A single term; exponents given by generator name.
    pub fn monomial(
        alphabet: Arc<Alphabet>,
        cutoff: i32,
        coeff: Q,
        hbar: i32,
        exps: &[(&str, u32)],
    ) -> Result<Self, SeriesError> {
        let mut e = vec![0; alphabet.len()];
        for (name, k) in exps {
            let i = alphabet
                .index_of(name)
                .ok_or_else(|| SeriesError::UnknownGenerator((*name).into()))?;
            e[i] += k;
        }
        let mut s = Self::zero(alphabet, cutoff);
        s.add_term(Monomial(e), hbar, coeff);
        Ok(s)
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn cutoff(&self) -> i32 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &Q)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mono: &Monomial, hbar: i32) -> Q {
        self.terms
            .get(&TermKey {
                hbar,
                mono: mono.clone(),
            })
            .cloned()
            .unwrap_or_else(Q::zero)
    }

    pub fn constant_term(&self) -> Q {
        self.coeff(&Monomial::one(self.alphabet.len()), 0)
    }

    pub fn term_weight(&self, key: &TermKey) -> i64 {
        2 * key.hbar as i64 + key.mono.weight(&self.alphabet)
    }

    fn admissible(&self, mono: &Monomial, hbar: i32) -> bool {
        let w = 2 * hbar as i64 + mono.weight(&self.alphabet);
        if w > self.cutoff as i64 {
            return false;
        }
        mono.0
            .iter()
            .zip(self.alphabet.vars())
            .all(|(&e, v)| e <= v.max_exponent())
    }

    /// Adds `c * hbar^hbar * mono`, dropping it if it falls outside the
    /// truncation.
    pub fn add_term(&mut self, mono: Monomial, hbar: i32, c: Q) {
        if c.is_zero() || !self.admissible(&mono, hbar) {
            return;
        }
        let key = TermKey { hbar, mono };
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    fn same_alphabet(&self, other: &Self) {
        assert!(
            Arc::ptr_eq(&self.alphabet, &other.alphabet) || self.alphabet == other.alphabet,
            "series over different alphabets"
        );
    }

    pub fn with_cutoff(&self, cutoff: i32) -> Self {
        let mut out = Self::zero(self.alphabet.clone(), cutoff);
        for (k, c) in &self.terms {
            out.add_term(k.mono.clone(), k.hbar, c.clone());
        }
        out
    }

    /// Same terms over a different but identical-looking alphabet handle.
    pub fn with_alphabet(&self, alphabet: Arc<Alphabet>) -> Self {
        assert_eq!(alphabet.len(), self.alphabet.len());
        FormalSeries {
            alphabet,
            cutoff: self.cutoff,
            terms: self.terms.clone(),
        }
    }

    /// Equality up to the smaller of the two cutoffs.
    pub fn eq_upto(&self, other: &Self) -> bool {
        let c = self.cutoff.min(other.cutoff);
        self.with_cutoff(c) == other.with_cutoff(c)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.same_alphabet(other);
        let mut out = self.with_cutoff(self.cutoff.min(other.cutoff));
        for (k, c) in &other.terms {
            out.add_term(k.mono.clone(), k.hbar, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero(self.alphabet.clone(), self.cutoff);
        }
        FormalSeries {
            alphabet: self.alphabet.clone(),
            cutoff: self.cutoff,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    /// Multiplication by `hbar^k`; the cutoff moves with it.
    pub fn hbar_shift(&self, k: i32) -> Self {
        FormalSeries {
            alphabet: self.alphabet.clone(),
            cutoff: self.cutoff + 2 * k,
            terms: self
                .terms
                .iter()
                .map(|(key, v)| {
                    (
                        TermKey {
                            hbar: key.hbar + k,
                            mono: key.mono.clone(),
                        },
                        v.clone(),
                    )
                })
                .collect(),
        }
    }

    /// Lowest weight the unknown part of the product can reach, minus one.
    /// Missing terms of `a` sit above `cutoff(a)` and get multiplied by terms
    /// of `b` of weight at least `min_weight(b)`, and vice versa.
    fn product_cutoff(&self, other: &Self) -> i32 {
        let low = |s: &Self| s.min_weight().unwrap_or(s.cutoff as i64 + 1);
        let a = self.cutoff as i64 + low(other);
        let b = other.cutoff as i64 + low(self);
        a.min(b).clamp(i32::MIN as i64 / 4, i32::MAX as i64 / 4) as i32
    }

    /// Graded-commutative product. The result's cutoff is the largest weight
    /// up to which it is determined by the operands.
    pub fn mul(&self, other: &Self) -> Self {
        self.mul_truncated(other, self.product_cutoff(other))
    }

    /// Product of the stored terms, keeping weights up to `cutoff`. The
    /// caller vouches for the precision (e.g. both factors are polynomials).
    pub fn mul_truncated(&self, other: &Self, cutoff: i32) -> Self {
        self.same_alphabet(other);
        let mut out = Self::zero(self.alphabet.clone(), cutoff);
        let alpha = &*self.alphabet;
        let rhs: Vec<(&TermKey, &Q, u128, i64)> = other
            .terms
            .iter()
            .map(|(k, c)| (k, c, k.mono.odd_bits(alpha), other.term_weight(k)))
            .collect();
        for (ka, ca) in &self.terms {
            let abits = ka.mono.odd_bits(alpha);
            let wa = self.term_weight(ka);
            for &(kb, cb, bbits, wb) in &rhs {
                if wa + wb > cutoff as i64 || abits & bbits != 0 {
                    continue;
                }
                let mono = Monomial(ka.mono.0.iter().zip(&kb.mono.0).map(|(x, y)| x + y).collect());
                let mut c = ca * cb;
                if koszul_sign(abits, bbits) {
                    c = -c;
                }
                out.add_term(mono, ka.hbar + kb.hbar, c);
            }
        }
        out
    }

    /// Strict product: refuses operands with different cutoffs.
    pub fn checked_mul(&self, other: &Self) -> Result<Self, SeriesError> {
        if self.alphabet != other.alphabet {
            return Err(SeriesError::AlphabetMismatch);
        }
        if self.cutoff != other.cutoff {
            return Err(SeriesError::CutoffMismatch(self.cutoff, other.cutoff));
        }
        Ok(self.mul(other))
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, SeriesError> {
        if self.alphabet != other.alphabet {
            return Err(SeriesError::AlphabetMismatch);
        }
        if self.cutoff != other.cutoff {
            return Err(SeriesError::CutoffMismatch(self.cutoff, other.cutoff));
        }
        Ok(self.add(other))
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one(self.alphabet.clone(), self.cutoff);
        for _ in 0..n {
            acc = acc.mul(self).with_cutoff(self.cutoff);
        }
        acc
    }

    /// Smallest weight of a stored term (`None` for zero).
    pub fn min_weight(&self) -> Option<i64> {
        self.terms.keys().map(|k| self.term_weight(k)).min()
    }

    fn check_pronilpotent(&self) -> Result<(), SeriesError> {
        if let Some((k, c)) = self.terms.iter().find(|(k, _)| self.term_weight(k) <= 0) {
            return Err(SeriesError::NotPronilpotent(self.describe_term(k, c)));
        }
        Ok(())
    }

    /// `exp(f) = sum f^n / n!`, valid when every term of `f` has weight >= 1.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        self.check_pronilpotent()?;
        let mut out = Self::one(self.alphabet.clone(), self.cutoff);
        let mut power = out.clone();
        let mut n = 1i64;
        loop {
            power = power.mul(self).with_cutoff(self.cutoff).scale(&Q::new(1.into(), n.into()));
            if power.is_zero() {
                break;
            }
            out = out.add(&power);
            n += 1;
        }
        Ok(out)
    }

    /// `log(f) = sum (-1)^{n+1} (f - 1)^n / n`, for `f` with constant term 1.
    pub fn log(&self) -> Result<Self, SeriesError> {
        let c = self.constant_term();
        if !c.is_one() {
            return Err(SeriesError::NotUnital(c.to_string()));
        }
        let x = self.sub(&Self::one(self.alphabet.clone(), self.cutoff));
        x.check_pronilpotent()?;
        let mut out = Self::zero(self.alphabet.clone(), self.cutoff);
        let mut power = Self::one(self.alphabet.clone(), self.cutoff);
        let mut n = 1i64;
        loop {
            power = power.mul(&x).with_cutoff(self.cutoff);
            if power.is_zero() {
                break;
            }
            let sign = if n % 2 == 1 { 1 } else { -1 };
            out = out.add(&power.scale(&Q::new(sign.into(), n.into())));
            n += 1;
        }
        Ok(out)
    }

    /// Left partial derivative with respect to generator `i`.
    pub fn derivative(&self, i: usize) -> Self {
        let alpha = &*self.alphabet;
        let odd = alpha.parity(i).is_odd();
        let below: u128 = if i == 0 { 0 } else { (1u128 << i) - 1 };
        // Differentiation lowers weight, so the result is exact one
        // generator-weight further down.
        let mut out = Self::zero(self.alphabet.clone(), self.cutoff - alpha.var(i).weight as i32);
        for (k, c) in &self.terms {
            let e = k.mono.0[i];
            if e == 0 {
                continue;
            }
            let mut mono = k.mono.clone();
            mono.0[i] -= 1;
            let mut coeff = c * q(e as i64);
            if odd && (k.mono.odd_bits(alpha) & below).count_ones() % 2 == 1 {
                coeff = -coeff;
            }
            out.add_term(mono, k.hbar, coeff);
        }
        out
    }

    /// Drops every term that involves one of the listed generators.
    pub fn restrict_indices(&self, kill: &[usize]) -> Self {
        let mut out = Self::zero(self.alphabet.clone(), self.cutoff);
        for (k, c) in &self.terms {
            if kill.iter().all(|&i| k.mono.0[i] == 0) {
                out.add_term(k.mono.clone(), k.hbar, c.clone());
            }
        }
        out
    }

    /// `restrict`: kill generators by name.
    pub fn restrict(&self, kill: &[&str]) -> Result<Self, SeriesError> {
        let idx = kill
            .iter()
            .map(|n| {
                self.alphabet
                    .index_of(n)
                    .ok_or_else(|| SeriesError::UnknownGenerator((*n).into()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.restrict_indices(&idx))
    }

    /// Substitutes generator `i` by `images[i]` (a series over `target`),
    /// multiplying factors in generator order so Koszul signs come out right.
    /// The images should be homogeneous of the generator's parity.
    pub fn substitute(&self, target: &Arc<Alphabet>, images: &[FormalSeries], cutoff: i32) -> Self {
        assert_eq!(images.len(), self.alphabet.len());
        let mut cache: HashMap<(usize, u32, i32), FormalSeries> = HashMap::new();
        let mut out = Self::zero(target.clone(), cutoff);
        for (k, c) in &self.terms {
            let mut prod = Self::zero(target.clone(), cutoff);
            prod.add_term(Monomial::one(target.len()), k.hbar, c.clone());
            // factors of weight >= 0 can only push terms further up
            let budget = cutoff - 2 * k.hbar;
            for (i, &e) in k.mono.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let p = cache.entry((i, e, budget)).or_insert_with(|| {
                    let base = images[i].with_cutoff(budget);
                    let mut acc = Self::one(target.clone(), budget);
                    for _ in 0..e {
                        acc = acc.mul_truncated(&base, budget);
                    }
                    acc
                });
                prod = prod.mul_truncated(p, cutoff);
                if prod.is_zero() {
                    break;
                }
            }
            out = out.add(&prod);
        }
        out
    }

    /// Moves the series to another alphabet, sending generator `i` to
    /// generator `map[i]` of `target` (with Koszul signs if the order changes).
    pub fn relabel(&self, target: &Arc<Alphabet>, map: &[usize]) -> Self {
        let images: Vec<FormalSeries> = map
            .iter()
            .map(|&j| FormalSeries::var(target.clone(), i32::MAX / 4, j))
            .collect();
        self.substitute(target, &images, self.cutoff)
    }

    /// Terms with the given power of `hbar`, with that power removed.
    pub fn hbar_coefficient(&self, g: i32) -> Self {
        let mut out = Self::zero(self.alphabet.clone(), self.cutoff - 2 * g);
        for (k, c) in &self.terms {
            if k.hbar == g {
                out.add_term(k.mono.clone(), 0, c.clone());
            }
        }
        out
    }

    pub fn hbar_range(&self) -> Option<(i32, i32)> {
        let min = self.terms.keys().map(|k| k.hbar).min()?;
        let max = self.terms.keys().map(|k| k.hbar).max()?;
        Some((min, max))
    }

    /// Keeps terms satisfying `pred`.
    pub fn filter(&self, mut pred: impl FnMut(&TermKey) -> bool) -> Self {
        let mut out = Self::zero(self.alphabet.clone(), self.cutoff);
        for (k, c) in &self.terms {
            if pred(k) {
                out.add_term(k.mono.clone(), k.hbar, c.clone());
            }
        }
        out
    }

    pub fn parity(&self) -> SeriesParity {
        let mut seen = [false; 2];
        for k in self.terms.keys() {
            seen[k.mono.parity(&self.alphabet).bit() as usize] = true;
        }
        match seen {
            [_, false] => SeriesParity::Even,
            [false, true] => SeriesParity::Odd,
            [true, true] => SeriesParity::Mixed,
        }
    }

    /// Parity as a `Parity` when homogeneous (zero counts as even).
    pub fn homogeneous_parity(&self) -> Option<Parity> {
        match self.parity() {
            SeriesParity::Even => Some(Parity::Even),
            SeriesParity::Odd => Some(Parity::Odd),
            SeriesParity::Mixed => None,
        }
    }

    /// First term violating membership in `h[W]`: weight >= 3, hbar >= 0.
    pub fn h_violation(&self) -> Option<String> {
        self.terms
            .iter()
            .find(|(k, _)| k.hbar < 0 || self.term_weight(k) < 3)
            .map(|(k, c)| self.describe_term(k, c))
    }

    pub fn is_in_h(&self) -> bool {
        self.h_violation().is_none()
    }

    /// Filtration predicate `F_i`: every term has weight >= i - 2.
    pub fn in_filtration(&self, i: i64) -> bool {
        self.terms.keys().all(|k| self.term_weight(k) >= i - 2)
    }

    /// Applies a linear operator given on monomials, collecting the results.
    pub fn map_terms(&self, cutoff: i32, mut f: impl FnMut(&TermKey, &Q, &mut FormalSeries)) -> Self {
        let mut out = Self::zero(self.alphabet.clone(), cutoff);
        for (k, c) in &self.terms {
            f(k, c, &mut out);
        }
        out
    }

    pub fn describe_term(&self, k: &TermKey, c: &Q) -> String {
        let mut s = c.to_string();
        if k.hbar != 0 {
            s.push_str(&format!("*hbar^{}", k.hbar));
        }
        for (i, &e) in k.mono.0.iter().enumerate() {
            if e == 1 {
                s.push_str(&format!("*{}", self.alphabet.var(i).name));
            } else if e > 1 {
                s.push_str(&format!("*{}^{}", self.alphabet.var(i).name, e));
            }
        }
        s
    }

    /// Leading term in storage order, for error reports.
    pub fn first_term(&self) -> Option<String> {
        self.terms.iter().next().map(|(k, c)| self.describe_term(k, c))
    }

    /// Renders terms grouped by power of `hbar`.
    pub fn pretty(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut groups: BTreeMap<i32, Vec<String>> = BTreeMap::new();
        for (k, c) in &self.terms {
            let mut mono = String::new();
            for (i, &e) in k.mono.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !mono.is_empty() {
                    mono.push(' ');
                }
                mono.push_str(&self.alphabet.var(i).name);
                if e > 1 {
                    mono.push_str(&format!("^{e}"));
                }
            }
            groups.entry(k.hbar).or_default().push(if mono.is_empty() {
                c.to_string()
            } else {
                format!("({c}) {mono}")
            });
        }
        groups
            .into_iter()
            .map(|(g, ts)| format!("hbar^{g}: {}", ts.join(" + ")))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl fmt::Debug for FormalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FormalSeries[N={}] ", self.cutoff)?;
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(k, c)| self.describe_term(k, c)).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl fmt::Display for FormalSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pretty())
    }
}

impl std::ops::Add for &FormalSeries {
    type Output = FormalSeries;
    fn add(self, rhs: &FormalSeries) -> FormalSeries {
        FormalSeries::add(self, rhs)
    }
}

impl std::ops::Sub for &FormalSeries {
    type Output = FormalSeries;
    fn sub(self, rhs: &FormalSeries) -> FormalSeries {
        FormalSeries::sub(self, rhs)
    }
}

impl std::ops::Mul for &FormalSeries {
    type Output = FormalSeries;
    fn mul(self, rhs: &FormalSeries) -> FormalSeries {
        FormalSeries::mul(self, rhs)
    }
}

impl std::ops::Neg for &FormalSeries {
    type Output = FormalSeries;
    fn neg(self) -> FormalSeries {
        FormalSeries::neg(self)
    }
}
