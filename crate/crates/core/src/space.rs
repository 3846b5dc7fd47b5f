//! Finite-dimensional super vector spaces with an odd differential and an odd
//! bilinear form.
//!
//! Conventions:
//! - column `j` of the differential matrix is `d(g_j)`;
//! - entry `(i, j)` of the form matrix is `<g_i, g_j>`;
//! - odd-symmetric means `<x, y> = (-1)^{|x||y|} <y, x>`, odd-symplectic means
//!   `<x, y> = -(-1)^{|x||y|} <y, x>`; for an odd form the Koszul sign is
//!   always `+1`, so these are plain (anti)symmetric matrices;
//! - `d` must be a derivation of the form:
//!   `<dx, y> + (-1)^{|x|} <x, dy> = 0` on basis elements.

use std::collections::HashSet;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{extend_basis, Matrix};
use crate::{fmt_q, parse_q, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }

    pub fn bit(self) -> u32 {
        self as u32
    }

    /// `(-1)^{|self|}`
    pub fn sign(self) -> Q {
        match self {
            Parity::Even => Q::one(),
            Parity::Odd => -Q::one(),
        }
    }

    pub fn add(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormKind {
    OddSymmetric,
    OddSymplectic,
    None,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub parity: Parity,
}

impl Generator {
    pub fn new(name: impl Into<String>, parity: Parity) -> Self {
        Generator {
            name: name.into(),
            parity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("duplicate generator name `{0}`")]
    DuplicateName(String),
    #[error("NotOdd: {what} entry ({row}, {col}) pairs generators of equal parity")]
    NotOdd {
        what: &'static str,
        row: String,
        col: String,
    },
    #[error("DSquareNonzero: d(d({generator})) != 0")]
    DSquareNonzero { generator: String },
    #[error("Degenerate: the bilinear form is not invertible")]
    Degenerate,
    #[error("SymmetryViolation: form entries ({row}, {col}) break the {kind:?} convention")]
    SymmetryViolation {
        kind: FormKind,
        row: String,
        col: String,
    },
    #[error("IncompatibleDifferential: <d{x}, {y}> + (-1)^|{x}| <{x}, d{y}> != 0")]
    IncompatibleDifferential { x: String, y: String },
    #[error("missing or degenerate form: {0}")]
    MissingForm(String),
}

/// Raw input for [`SuperSpace::new`]; validation happens there.
#[derive(Clone, Debug)]
pub struct SpaceSpec {
    pub generators: Vec<Generator>,
    pub d: Matrix,
    pub form: Matrix,
    pub kind: FormKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SuperSpace {
    generators: Vec<Generator>,
    d: Matrix,
    form: Matrix,
    kind: FormKind,
}

/// Representatives of `H(V)` together with its even/odd dimensions.
#[derive(Clone, Debug)]
pub struct HomologyBasis {
    pub cycles: Vec<Vec<Q>>,
    pub parities: Vec<Parity>,
    pub even_dim: usize,
    pub odd_dim: usize,
}

impl SuperSpace {
    /// `make_space`: validates all invariants and returns the space.
    pub fn new(spec: SpaceSpec) -> Result<Self, SpaceError> {
        let SpaceSpec {
            generators,
            d,
            form,
            kind,
        } = spec;
        let n = generators.len();
        if d.rows() != n || d.cols() != n {
            return Err(SpaceError::Shape(format!(
                "differential is {}x{}, expected {n}x{n}",
                d.rows(),
                d.cols()
            )));
        }
        if form.rows() != n || form.cols() != n {
            return Err(SpaceError::Shape(format!(
                "form is {}x{}, expected {n}x{n}",
                form.rows(),
                form.cols()
            )));
        }
        let mut seen = HashSet::new();
        for g in &generators {
            if !seen.insert(g.name.as_str()) {
                return Err(SpaceError::DuplicateName(g.name.clone()));
            }
        }
        let space = SuperSpace {
            generators,
            d,
            form,
            kind,
        };
        space.validate()?;
        Ok(space)
    }

    pub fn from_parts(
        generators: Vec<Generator>,
        d: Matrix,
        form: Matrix,
        kind: FormKind,
    ) -> Result<Self, SpaceError> {
        Self::new(SpaceSpec {
            generators,
            d,
            form,
            kind,
        })
    }

    pub fn empty() -> Self {
        SuperSpace {
            generators: Vec::new(),
            d: Matrix::zeros(0, 0),
            form: Matrix::zeros(0, 0),
            kind: FormKind::OddSymmetric,
        }
    }

    fn validate(&self) -> Result<(), SpaceError> {
        let n = self.dim();
        let name = |i: usize| self.generators[i].name.clone();
        for i in 0..n {
            for j in 0..n {
                if self.parity(i) == self.parity(j) {
                    if !self.d[(i, j)].is_zero() {
                        return Err(SpaceError::NotOdd {
                            what: "differential",
                            row: name(i),
                            col: name(j),
                        });
                    }
                    if !self.form[(i, j)].is_zero() {
                        return Err(SpaceError::NotOdd {
                            what: "form",
                            row: name(i),
                            col: name(j),
                        });
                    }
                }
            }
        }
        let d2 = &self.d * &self.d;
        if let Some(j) = (0..n).find(|&j| d2.column(j).iter().any(|x| !x.is_zero())) {
            return Err(SpaceError::DSquareNonzero { generator: name(j) });
        }
        if self.kind == FormKind::None {
            return Ok(());
        }
        for i in 0..n {
            for j in 0..n {
                let a = &self.form[(i, j)];
                let b = &self.form[(j, i)];
                let ok = match self.kind {
                    FormKind::OddSymmetric => a == b,
                    FormKind::OddSymplectic => *a == -b.clone(),
                    FormKind::None => true,
                };
                if !ok {
                    return Err(SpaceError::SymmetryViolation {
                        kind: self.kind,
                        row: name(i),
                        col: name(j),
                    });
                }
            }
        }
        if !self.form.is_invertible() {
            return Err(SpaceError::Degenerate);
        }
        // <d g_i, g_j> = sum_k D_ki F_kj, i.e. (D^T F)_ij; <g_i, d g_j> = (F D)_ij.
        let left = &self.d.transpose() * &self.form;
        let right = &self.form * &self.d;
        for i in 0..n {
            for j in 0..n {
                let v = &left[(i, j)] + &self.parity(i).sign() * &right[(i, j)];
                if !v.is_zero() {
                    return Err(SpaceError::IncompatibleDifferential { x: name(i), y: name(j) });
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn parity(&self, i: usize) -> Parity {
        self.generators[i].parity
    }

    pub fn parities(&self) -> Vec<Parity> {
        self.generators.iter().map(|g| g.parity).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.generators.iter().map(|g| g.name.clone()).collect()
    }

    pub fn d(&self) -> &Matrix {
        &self.d
    }

    pub fn form(&self) -> &Matrix {
        &self.form
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn even_dim(&self) -> usize {
        self.generators.iter().filter(|g| !g.parity.is_odd()).count()
    }

    pub fn odd_dim(&self) -> usize {
        self.dim() - self.even_dim()
    }

    /// `<u, v>` for coordinate vectors `u`, `v`.
    pub fn pair(&self, u: &[Q], v: &[Q]) -> Q {
        let fv = self.form.apply(v);
        u.iter().zip(&fv).map(|(a, b)| a * b).sum()
    }

    /// Parity of a homogeneous coordinate vector (even for the zero vector).
    pub fn vector_parity(&self, v: &[Q]) -> Parity {
        v.iter()
            .enumerate()
            .find(|(_, x)| !x.is_zero())
            .map_or(Parity::Even, |(i, _)| self.parity(i))
    }

    /// `parity_reverse`: `ΠV` with `tau(Πx, Πy) = (-1)^{|x|} <x, y>`.
    ///
    /// Turns an odd-symmetric form into an odd-symplectic one and vice versa;
    /// the differential keeps its matrix (`d Πx = Π dx`).
    pub fn parity_reverse(&self) -> Result<SuperSpace, SpaceError> {
        let kind = match self.kind {
            FormKind::OddSymmetric => FormKind::OddSymplectic,
            FormKind::OddSymplectic => FormKind::OddSymmetric,
            FormKind::None => {
                return Err(SpaceError::MissingForm("parity reversal needs a form".into()))
            }
        };
        let n = self.dim();
        let mut tau = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                tau[(i, j)] = &self.parity(i).sign() * &self.form[(i, j)];
            }
        }
        let generators = self
            .generators
            .iter()
            .map(|g| Generator::new(g.name.clone(), g.parity.flip()))
            .collect();
        SuperSpace::new(SpaceSpec {
            generators,
            d: self.d.clone(),
            form: tau,
            kind,
        })
    }

    /// Re-expresses the space in a new basis. Column `k` of `basis` is the new
    /// generator `k` written in the old generators; it must be homogeneous.
    pub fn change_basis(&self, basis: &Matrix, names: Vec<String>) -> Result<SuperSpace, SpaceError> {
        let n = self.dim();
        if basis.rows() != n || basis.cols() != n || names.len() != n {
            return Err(SpaceError::Shape("change of basis must be square".into()));
        }
        let inv = basis
            .inverse()
            .ok_or_else(|| SpaceError::Shape("change of basis is singular".into()))?;
        let generators = (0..n)
            .map(|k| Generator::new(names[k].clone(), self.vector_parity(&basis.column(k))))
            .collect();
        let d = &(&inv * &self.d) * basis;
        let form = &(&basis.transpose() * &self.form) * basis;
        SuperSpace::new(SpaceSpec {
            generators,
            d,
            form,
            kind: self.kind,
        })
    }

    /// Representatives of `ker d / im d`, one parity at a time, extending a
    /// basis of the image to one of the kernel. Unit vectors are preferred, so
    /// a zero differential returns the standard basis.
    pub fn homology_basis(&self) -> HomologyBasis {
        let n = self.dim();
        let mut cycles = Vec::new();
        let mut parities = Vec::new();
        let mut counts = [0usize; 2];
        for parity in [Parity::Even, Parity::Odd] {
            let kernel = homogeneous_kernel(self, parity);
            let image = homogeneous_image(self, parity);
            for c in extend_basis(n, &image, &kernel) {
                cycles.push(c);
                parities.push(parity);
                counts[parity.bit() as usize] += 1;
            }
        }
        HomologyBasis {
            cycles,
            parities,
            even_dim: counts[0],
            odd_dim: counts[1],
        }
    }
}

/// Kernel of `d` restricted to vectors of one parity.
pub fn homogeneous_kernel(space: &SuperSpace, parity: Parity) -> Vec<Vec<Q>> {
    let idx: Vec<usize> = (0..space.dim()).filter(|&i| space.parity(i) == parity).collect();
    let sub = space.d().select_columns(&idx);
    sub.nullspace()
        .into_iter()
        .map(|v| embed(space.dim(), &idx, &v))
        .collect()
}

/// A basis of `d(V) ∩ V_parity`, taken from images of opposite-parity
/// generators.
pub fn homogeneous_image(space: &SuperSpace, parity: Parity) -> Vec<Vec<Q>> {
    let n = space.dim();
    let cols: Vec<Vec<Q>> = (0..n)
        .filter(|&j| space.parity(j) != parity)
        .map(|j| space.d().column(j))
        .collect();
    extend_basis(n, &[], &cols)
}

fn embed(n: usize, idx: &[usize], v: &[Q]) -> Vec<Q> {
    let mut out = vec![Q::zero(); n];
    for (k, &i) in idx.iter().enumerate() {
        out[i] = v[k].clone();
    }
    out
}

impl fmt::Display for SuperSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SuperSpace({}|{}) [", self.even_dim(), self.odd_dim())?;
        for (k, g) in self.generators.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", g.name, if g.parity.is_odd() { "odd" } else { "even" })?;
        }
        write!(f, "]")
    }
}

/// JSON form of a space: rationals are strings `"p/q"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceJson {
    pub generators: Vec<Generator>,
    pub d: Vec<Vec<String>>,
    pub form: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form_kind: Option<FormKind>,
}

fn matrix_to_json(m: &Matrix) -> Vec<Vec<String>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(fmt_q).collect())
        .collect()
}

fn matrix_from_json(rows: &[Vec<String>], n: usize, what: &str) -> Result<Matrix, String> {
    if rows.is_empty() && n > 0 {
        return Ok(Matrix::zeros(n, n));
    }
    let parsed: Result<Vec<Vec<Q>>, String> = rows
        .iter()
        .map(|r| r.iter().map(|s| parse_q(s)).collect())
        .collect();
    let parsed = parsed?;
    if parsed.len() != n || parsed.iter().any(|r| r.len() != n) {
        return Err(format!("{what} must be {n}x{n}"));
    }
    Ok(if n == 0 { Matrix::zeros(0, 0) } else { Matrix::from_rows(parsed) })
}

impl SpaceJson {
    pub fn into_spec(self) -> Result<SpaceSpec, String> {
        let n = self.generators.len();
        let d = matrix_from_json(&self.d, n, "d")?;
        let form = matrix_from_json(&self.form, n, "form")?;
        let kind = self.form_kind.unwrap_or(FormKind::OddSymmetric);
        Ok(SpaceSpec {
            generators: self.generators,
            d,
            form,
            kind,
        })
    }
}

impl From<&SuperSpace> for SpaceJson {
    fn from(s: &SuperSpace) -> Self {
        SpaceJson {
            generators: s.generators.clone(),
            d: matrix_to_json(&s.d),
            form: matrix_to_json(&s.form),
            form_kind: Some(s.kind),
        }
    }
}
