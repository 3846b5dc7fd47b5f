//! Cyclic strong deformation retracts `V -> H(V)` and the Lagrangian
//! `L_s = Π im(s)` with its Gaussian weight.

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::bv::{BVContext, BvError};
use crate::linalg::{extend_basis, Matrix};
use crate::series::{Alphabet, FormalSeries, Monomial, Var};
use crate::space::{FormKind, Generator, Parity, SpaceError, SpaceSpec, SuperSpace};
use crate::{fmt_q, q, qf, Q};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdrError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Bv(#[from] BvError),
    #[error("Degenerate: {0}")]
    Degenerate(String),
    #[error("not a deformation retract: {0}")]
    Invalid(String),
    #[error("the induced differential is not Hamiltonian")]
    NotHamiltonian,
}

/// A cyclic SDR from `V` onto its homology, together with the adapted basis
/// `[H | C | dC]` it was built from.
#[derive(Clone, Debug)]
pub struct SdrData {
    pub v: SuperSpace,
    pub h: SuperSpace,
    /// `H(V) -> V`, one column per homology generator.
    pub i: Matrix,
    /// `V -> H(V)`.
    pub p: Matrix,
    /// `V -> V`, odd.
    pub s: Matrix,
    /// Columns: homology representatives, then `C = im(s)`, then `d C`.
    pub basis: Matrix,
    pub h_dim: usize,
    pub c_dim: usize,
}

fn unit(n: usize, i: usize) -> Vec<Q> {
    let mut v = vec![Q::zero(); n];
    v[i] = Q::one();
    v
}

/// Homogeneous vectors of the given parity orthogonal to all of `vecs`.
fn orthogonal(space: &SuperSpace, vecs: &[Vec<Q>], parity: Parity) -> Vec<Vec<Q>> {
    let n = space.dim();
    let idx: Vec<usize> = (0..n).filter(|&i| space.parity(i) == parity).collect();
    if vecs.is_empty() {
        return idx.iter().map(|&i| unit(n, i)).collect();
    }
    let rows: Vec<Vec<Q>> = vecs
        .iter()
        .map(|h| {
            let gh = space.form().transpose().apply(h);
            idx.iter().map(|&i| gh[i].clone()).collect()
        })
        .collect();
    Matrix::from_rows(rows)
        .nullspace()
        .into_iter()
        .map(|v| {
            let mut out = vec![Q::zero(); n];
            for (k, &i) in idx.iter().enumerate() {
                out[i] = v[k].clone();
            }
            out
        })
        .collect()
}

/// Unit vectors of the given parity lying in the span of `space_vecs`,
/// followed by `space_vecs` themselves: candidates for `extend_basis` that
/// prefer generators of `V`.
fn unit_first(n: usize, parities: &[Parity], parity: Parity, space_vecs: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let r = crate::linalg::span_rank(n, space_vecs);
    let mut out: Vec<Vec<Q>> = (0..n)
        .filter(|&i| parities[i] == parity)
        .map(|i| unit(n, i))
        .filter(|e| {
            let mut all = space_vecs.to_vec();
            all.push(e.clone());
            crate::linalg::span_rank(n, &all) == r
        })
        .collect();
    out.extend(space_vecs.iter().cloned());
    out
}

fn first_nonzero(v: &[Q]) -> usize {
    v.iter().position(|x| !x.is_zero()).unwrap_or(v.len())
}

/// `hodge_decompose`: builds an SDR `(i, p, s)` with `s` mapping `d C`
/// back onto an isotropic complement `C` of the cycles inside `H^⊥`.
pub fn hodge_decompose(v: &SuperSpace) -> Result<SdrData, SdrError> {
    if v.kind() != FormKind::OddSymmetric {
        return Err(SdrError::Space(SpaceError::MissingForm(
            "a Hodge decomposition needs an odd-symmetric form".into(),
        )));
    }
    let n = v.dim();
    let parities = v.parities();
    let g = v.form();
    let d = v.d();

    let mut hs: Vec<Vec<Q>> = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let z = crate::space::homogeneous_kernel(v, parity);
        let b = crate::space::homogeneous_image(v, parity);
        hs.extend(extend_basis(n, &b, &unit_first(n, &parities, parity, &z)));
    }
    hs.sort_by_key(|h| first_nonzero(h));

    let mut cs: Vec<Vec<Q>> = Vec::new();
    for parity in [Parity::Even, Parity::Odd] {
        let a = orthogonal(v, &hs, parity);
        let z = crate::space::homogeneous_kernel(v, parity);
        cs.extend(extend_basis(n, &z, &unit_first(n, &parities, parity, &a)));
    }
    cs.sort_by_key(|c| first_nonzero(c));
    let k = cs.len();
    let dcs: Vec<Vec<Q>> = cs.iter().map(|c| d.apply(c)).collect();

    // Make C isotropic by adding d-exact corrections: C_b = c_b + Σ_a K_ab d c_a
    // with K = -1/2 (P^T)^{-1} Q, P_ab = <d c_a, c_b>, Q_ab = <c_a, c_b>.
    if k > 0 {
        let mut pm = Matrix::zeros(k, k);
        let mut qm = Matrix::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                pm[(a, b)] = v.pair(&dcs[a], &cs[b]);
                qm[(a, b)] = v.pair(&cs[a], &cs[b]);
            }
        }
        let pinv_t = pm
            .transpose()
            .inverse()
            .ok_or_else(|| SdrError::Degenerate("form pairs im(d) degenerately with its complement".into()))?;
        let kk = (&pinv_t * &qm).scale(&qf(-1, 2));
        let old = cs.clone();
        for b in 0..k {
            for a in 0..k {
                if kk[(a, b)].is_zero() {
                    continue;
                }
                for i in 0..n {
                    let delta = &kk[(a, b)] * &dcs[a][i];
                    cs[b][i] += delta;
                }
            }
        }
        debug_assert!(cs.iter().zip(&old).all(|(c, o)| d.apply(c) == d.apply(o)));
    }

    let h_dim = hs.len();
    let mut cols = hs.clone();
    cols.extend(cs.iter().cloned());
    cols.extend(dcs.iter().cloned());
    if cols.len() != n {
        return Err(SdrError::Invalid("adapted basis has the wrong size".into()));
    }
    let basis = Matrix::from_columns(n, &cols);
    let tinv = basis
        .inverse()
        .ok_or_else(|| SdrError::Invalid("adapted basis is singular".into()))?;

    // s: dC_k -> C_k, zero on H and C.
    let mut sa = Matrix::zeros(n, n);
    for j in 0..k {
        sa[(h_dim + j, h_dim + k + j)] = Q::one();
    }
    let s = &(&basis * &sa) * &tinv;
    let i = Matrix::from_columns(n, &hs);
    let p = tinv.select_rows(&(0..h_dim).collect::<Vec<_>>());

    let h = homology_space(v, &hs, g)?;
    Ok(SdrData {
        v: v.clone(),
        h,
        i,
        p,
        s,
        basis,
        h_dim,
        c_dim: k,
    })
}

fn homology_space(v: &SuperSpace, hs: &[Vec<Q>], g: &Matrix) -> Result<SuperSpace, SdrError> {
    let n = v.dim();
    let hm = Matrix::from_columns(n, hs);
    let form = &(&hm.transpose() * g) * &hm;
    let existing: std::collections::HashSet<String> = v.names().into_iter().collect();
    let mut used = std::collections::HashSet::new();
    let generators = hs
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let nz: Vec<usize> = (0..n).filter(|&i| !h[i].is_zero()).collect();
            let mut name = if nz.len() == 1 && h[nz[0]].is_one() {
                v.generators()[nz[0]].name.clone()
            } else {
                format!("h{k}")
            };
            while (used.contains(&name)) || (!(nz.len() == 1 && h[nz[0]].is_one()) && existing.contains(&name)) {
                name.push('\'');
            }
            used.insert(name.clone());
            Generator::new(name, v.vector_parity(h))
        })
        .collect();
    Ok(SuperSpace::new(SpaceSpec {
        generators,
        d: Matrix::zeros(hs.len(), hs.len()),
        form,
        kind: FormKind::OddSymmetric,
    })?)
}

/// Every failed SDR identity, as a human-readable list (empty when valid).
pub fn sdr_violations(v: &SuperSpace, h: &SuperSpace, i: &Matrix, p: &Matrix, s: &Matrix) -> Vec<String> {
    let mut out = side_free_violations(v, h, i, p, s);
    let n = v.dim();
    if !(s * i).is_zero() {
        out.push("s i != 0".into());
    }
    if !(p * s).is_zero() {
        out.push("p s != 0".into());
    }
    if !(s * s).is_zero() {
        out.push("s^2 != 0".into());
    }
    // <sx, y> = (-1)^{|x|} <x, sy>
    let gs = v.form();
    let lhs = &s.transpose() * gs;
    let mut rhs = gs * s;
    for a in 0..n {
        for b in 0..n {
            rhs[(a, b)] = &v.parity(a).sign() * &rhs[(a, b)];
        }
    }
    if lhs != rhs {
        out.push("s is not cyclic".into());
    }
    out
}

/// Conditions not involving the side conditions `si = ps = s^2 = 0`.
fn side_free_violations(v: &SuperSpace, h: &SuperSpace, i: &Matrix, p: &Matrix, s: &Matrix) -> Vec<String> {
    let mut out = Vec::new();
    let n = v.dim();
    let hd = h.dim();
    if (i.rows(), i.cols()) != (n, hd) || (p.rows(), p.cols()) != (hd, n) || (s.rows(), s.cols()) != (n, n) {
        out.push("matrix shapes".into());
        return out;
    }
    if (p * i) != Matrix::identity(hd) {
        out.push("p i != id".into());
    }
    let d = v.d();
    let homotopy = &(d * s).add(&(s * d));
    let proj = Matrix::identity(n).sub(&(i * p));
    if homotopy != &proj {
        out.push("ds + sd != id - ip".into());
    }
    if (d * i) != (i * h.d()) || (h.d() * p) != (p * d) {
        out.push("i or p is not a chain map".into());
    }
    if &(&i.transpose() * v.form()) * i != *h.form() {
        out.push("i does not preserve the form".into());
    }
    // ker p ⊥ im i
    let kernel = p.nullspace();
    for x in &kernel {
        for c in 0..hd {
            if !v.pair(&i.column(c), x).is_zero() {
                out.push("ker p is not orthogonal to im i".into());
                return out;
            }
        }
    }
    out
}

/// `repair_side_conditions`: `s~ = (ds+sd) s (ds+sd)`, `s' = s~ d s~`.
pub fn repair_side_conditions(
    v: &SuperSpace,
    h: &SuperSpace,
    i: &Matrix,
    p: &Matrix,
    s: &Matrix,
) -> Result<Matrix, SdrError> {
    let bad = side_free_violations(v, h, i, p, s);
    if !bad.is_empty() {
        return Err(SdrError::Invalid(bad.join("; ")));
    }
    let d = v.d();
    let e = (d * s).add(&(s * d));
    let st = &(&e * s) * &e;
    Ok(&(&st * d) * &st)
}

/// The Lagrangian `L_s` inside `W = ΠV` and its Gaussian weight.
#[derive(Clone, Debug)]
pub struct LagrangianData {
    /// Basis vectors of `L_s` in the generators of `W` (columns).
    pub basis: Matrix,
    /// Parities of the coordinates on `L_s` (as functions on `W`).
    pub parities: Vec<Parity>,
    /// `sigma_ab = <C_a, d C_b>` computed in `V`.
    pub sigma: Matrix,
    pub sigma_inv: Matrix,
    /// Quadratic function `S` on `W` with `[S, -] = d`; the Gaussian weight
    /// is `exp(S / ħ) = exp(-σ / 2ħ)`.
    pub hamiltonian: FormalSeries,
    /// `Φ = -S` restricted to `L_s`, written in the `L_s` coordinates.
    pub phi: FormalSeries,
}

/// `lagrangian_Ls`.
pub fn lagrangian_ls(sdr: &SdrData, w: &SuperSpace) -> Result<LagrangianData, SdrError> {
    let n = sdr.v.dim();
    let k = sdr.c_dim;
    let cols: Vec<usize> = (sdr.h_dim..sdr.h_dim + k).collect();
    let basis = sdr.basis.select_columns(&cols);
    let parities: Vec<Parity> = (0..k).map(|a| w.vector_parity(&basis.column(a))).collect();

    let mut sigma = Matrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            sigma[(a, b)] = sdr.v.pair(&basis.column(a), &sdr.v.d().apply(&basis.column(b)));
        }
    }
    let sigma_inv = sigma
        .inverse()
        .ok_or_else(|| SdrError::Degenerate("sigma is degenerate on L_s".into()))?;

    // isotropy of L_s in W
    for a in 0..k {
        for b in 0..k {
            if !w.pair(&basis.column(a), &basis.column(b)).is_zero() {
                return Err(SdrError::Invalid("L_s is not isotropic".into()));
            }
        }
    }

    let ctx = BVContext::new(w)?;
    let hamiltonian = differential_hamiltonian(&ctx)?;
    let l_alpha = Alphabet::new(
        (0..k)
            .map(|a| Var::coordinate(format!("l{a}"), parities[a]))
            .collect(),
    );
    // y_i = Σ_a basis_ia l_a on L_s
    let images: Vec<FormalSeries> = (0..n)
        .map(|i| {
            let mut s = FormalSeries::zero(l_alpha.clone(), 2);
            for a in 0..k {
                s = s.add(&FormalSeries::var(l_alpha.clone(), 2, a).scale(&basis[(i, a)]));
            }
            s
        })
        .collect();
    let phi = hamiltonian.substitute(&l_alpha, &images, 2).neg();
    Ok(LagrangianData {
        basis,
        parities,
        sigma,
        sigma_inv,
        hamiltonian,
        phi,
    })
}

/// Solves `[S, y_i] = d(y_i)` for a quadratic `S`.
pub fn differential_hamiltonian(ctx: &BVContext) -> Result<FormalSeries, SdrError> {
    let n = ctx.space().dim();
    let alpha = ctx.alphabet().clone();
    let mut quads = Vec::new();
    for a in 0..n {
        for b in a..n {
            if a == b && alpha.parity(a).is_odd() {
                continue;
            }
            let mut e = vec![0u32; alpha.len()];
            e[a] += 1;
            e[b] += 1;
            quads.push(Monomial(e));
        }
    }
    let mono = |m: &Monomial| {
        let mut s = FormalSeries::zero(alpha.clone(), 2);
        s.add_term(m.clone(), 0, Q::one());
        s
    };
    // column j: coefficients of [q_j, y_i] for all i, j, in the linear basis
    let rows = n * n;
    let mut a = Matrix::zeros(rows, quads.len() + 1);
    for (j, qm) in quads.iter().enumerate() {
        let qs = mono(qm);
        for i in 0..n {
            let br = ctx.bracket(&qs, &ctx.var(i, 2));
            for l in 0..n {
                a[(i * n + l, j)] = br.coeff(&Monomial::var(alpha.len(), l), 0);
            }
        }
    }
    for i in 0..n {
        let dy = ctx.differential(&ctx.var(i, 2));
        for l in 0..n {
            a[(i * n + l, quads.len())] = dy.coeff(&Monomial::var(alpha.len(), l), 0);
        }
    }
    let (r, pivots) = a.rref();
    if pivots.contains(&quads.len()) {
        return Err(SdrError::NotHamiltonian);
    }
    let mut s = FormalSeries::zero(alpha.clone(), 2);
    for (row, &pc) in pivots.iter().enumerate() {
        s.add_term(quads[pc].clone(), 0, r[(row, quads.len())].clone());
    }
    Ok(s)
}

/// Rational congruence normal form of a quadratic function `Φ` on a super
/// space: `Φ(T u)` is `Σ λ_i x_i^2 / 2` on even coordinates plus
/// `Σ c_k ξ_{2k} ξ_{2k+1}` on odd ones.
#[derive(Clone, Debug)]
pub struct CanonicalCoordinates {
    /// Old coordinates in terms of new: `z = T u`.
    pub transform: Matrix,
    pub even: Vec<usize>,
    pub lambdas: Vec<Q>,
    pub odd_pairs: Vec<(usize, usize)>,
    pub pair_scales: Vec<Q>,
}

/// `canonical_coordinates` for `Φ` written in the coordinates of its alphabet.
pub fn canonical_coordinates(phi: &FormalSeries) -> Result<CanonicalCoordinates, SdrError> {
    let alpha = phi.alphabet();
    let k = alpha.len();
    let even: Vec<usize> = (0..k).filter(|&a| !alpha.parity(a).is_odd()).collect();
    let odd: Vec<usize> = (0..k).filter(|&a| alpha.parity(a).is_odd()).collect();
    let coeff2 = |a: usize, b: usize| {
        let mut e = vec![0u32; k];
        e[a] += 1;
        e[b] += 1;
        phi.coeff(&Monomial(e), 0)
    };
    let mut transform = Matrix::identity(k);

    // Even block: symmetric Hessian H with Φ = 1/2 x^T H x.
    let ne = even.len();
    let mut hmat = Matrix::zeros(ne, ne);
    for (i, &a) in even.iter().enumerate() {
        for (j, &b) in even.iter().enumerate() {
            hmat[(i, j)] = if i == j { q(2) * coeff2(a, a) } else { coeff2(a, b) };
        }
    }
    let (te, lambdas) = diagonalize_symmetric(&hmat)?;
    for (i, &a) in even.iter().enumerate() {
        for (j, &b) in even.iter().enumerate() {
            transform[(a, b)] = te[(i, j)].clone();
        }
    }

    // Odd block: antisymmetric A with Φ = Σ_{a<b} A_ab ξ_a ξ_b.
    let no = odd.len();
    if no % 2 == 1 {
        return Err(SdrError::Degenerate("odd number of odd coordinates".into()));
    }
    let mut amat = Matrix::zeros(no, no);
    for i in 0..no {
        for j in (i + 1)..no {
            let c = coeff2(odd[i], odd[j]);
            amat[(i, j)] = c.clone();
            amat[(j, i)] = -c;
        }
    }
    let (to, scales) = pair_antisymmetric(&amat)?;
    for (i, &a) in odd.iter().enumerate() {
        for (j, &b) in odd.iter().enumerate() {
            transform[(a, b)] = to[(i, j)].clone();
        }
    }
    Ok(CanonicalCoordinates {
        transform,
        even,
        lambdas,
        odd_pairs: (0..no / 2).map(|p| (odd[2 * p], odd[2 * p + 1])).collect(),
        pair_scales: scales,
    })
}

/// `T^t H T = diag(λ)` by rational congruence.
fn diagonalize_symmetric(h: &Matrix) -> Result<(Matrix, Vec<Q>), SdrError> {
    let n = h.rows();
    let mut m = h.clone();
    let mut t = Matrix::identity(n);
    // apply the elementary congruence  col_i += c col_j, row_i += c row_j
    let add = |m: &mut Matrix, t: &mut Matrix, i: usize, j: usize, c: &Q| {
        for r in 0..n {
            let v = &m[(r, j)] * c;
            m[(r, i)] += v;
        }
        for r in 0..n {
            let v = &m[(j, r)] * c;
            m[(i, r)] += v;
        }
        for r in 0..n {
            let v = &t[(r, j)] * c;
            t[(r, i)] += v;
        }
    };
    for k in 0..n {
        if m[(k, k)].is_zero() {
            if let Some(j) = ((k + 1)..n).find(|&j| !m[(j, j)].is_zero()) {
                add(&mut m, &mut t, k, j, &Q::one());
            } else if let Some(j) = ((k + 1)..n).find(|&j| !m[(k, j)].is_zero()) {
                add(&mut m, &mut t, k, j, &Q::one());
            }
        }
        if m[(k, k)].is_zero() {
            return Err(SdrError::Degenerate("even part of sigma is degenerate".into()));
        }
        for j in (k + 1)..n {
            if !m[(k, j)].is_zero() {
                let c = -(&m[(k, j)] / &m[(k, k)]);
                add(&mut m, &mut t, j, k, &c);
            }
        }
    }
    let lambdas = (0..n).map(|i| m[(i, i)].clone()).collect();
    Ok((t, lambdas))
}

/// `T^t A T` block diagonal with 2x2 blocks `[[0, c], [-c, 0]]`.
fn pair_antisymmetric(a: &Matrix) -> Result<(Matrix, Vec<Q>), SdrError> {
    let n = a.rows();
    let mut m = a.clone();
    let mut t = Matrix::identity(n);
    let swap = |m: &mut Matrix, t: &mut Matrix, i: usize, j: usize| {
        for r in 0..n {
            let (x, y) = (m[(r, i)].clone(), m[(r, j)].clone());
            m[(r, i)] = y;
            m[(r, j)] = x;
        }
        for r in 0..n {
            let (x, y) = (m[(i, r)].clone(), m[(j, r)].clone());
            m[(i, r)] = y;
            m[(j, r)] = x;
        }
        for r in 0..n {
            let (x, y) = (t[(r, i)].clone(), t[(r, j)].clone());
            t[(r, i)] = y;
            t[(r, j)] = x;
        }
    };
    let add = |m: &mut Matrix, t: &mut Matrix, i: usize, j: usize, c: &Q| {
        for r in 0..n {
            let v = &m[(r, j)] * c;
            m[(r, i)] += v;
        }
        for r in 0..n {
            let v = &m[(j, r)] * c;
            m[(i, r)] += v;
        }
        for r in 0..n {
            let v = &t[(r, j)] * c;
            t[(r, i)] += v;
        }
    };
    let mut scales = Vec::new();
    let mut k = 0;
    while k < n {
        let j = ((k + 1)..n)
            .find(|&j| !m[(k, j)].is_zero())
            .ok_or_else(|| SdrError::Degenerate("odd part of sigma is degenerate".into()))?;
        if j != k + 1 {
            swap(&mut m, &mut t, k + 1, j);
        }
        let c = m[(k, k + 1)].clone();
        for r in (k + 2)..n {
            // clear m[k][r] using column k+1, then m[k+1][r] using column k
            if !m[(k, r)].is_zero() {
                let f = -(&m[(k, r)] / &c);
                add(&mut m, &mut t, r, k + 1, &f);
            }
            if !m[(k + 1, r)].is_zero() {
                let f = &m[(k + 1, r)] / &c;
                add(&mut m, &mut t, r, k, &f);
            }
        }
        scales.push(c);
        k += 2;
    }
    Ok((t, scales))
}

/// JSON export of an SDR as three rational matrices.
#[derive(Clone, Debug, Serialize)]
pub struct SdrJson {
    pub i: Vec<Vec<String>>,
    pub p: Vec<Vec<String>>,
    pub s: Vec<Vec<String>>,
}

impl From<&SdrData> for SdrJson {
    fn from(sdr: &SdrData) -> Self {
        let conv = |m: &Matrix| -> Vec<Vec<String>> {
            (0..m.rows()).map(|r| m.row(r).iter().map(fmt_q).collect()).collect()
        };
        SdrJson {
            i: conv(&sdr.i),
            p: conv(&sdr.p),
            s: conv(&sdr.s),
        }
    }
}
