//! Acceptance suite: one pass/fail line per criterion.

use std::collections::BTreeMap;
use std::panic;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use bvmin::bv::BVContext;
use bvmin::fixtures::{
    gauge_homotopy, random_h_structure, random_quantum_structure, random_recipe, random_series, random_space, rng,
    FixtureRng, SeriesShape, SpaceRecipe,
};
use bvmin::graphs::{enumerate_connected, graph_sum_all, graph_sum_connected, StableGraph, VertexType};
use bvmin::integrate::IntegrationProblem;
use bvmin::linalg::{span_rank, Matrix};
use bvmin::sdr::{hodge_decompose, repair_side_conditions, sdr_violations};
use bvmin::series::FormalSeries;
use bvmin::space::{Parity, SuperSpace};
use bvmin::transfer::{
    homotopy_transport, iota, iota_td, rho_series, rho_tilde, td_problem, Strategy, TDtSeries,
};
use bvmin::{q, Q};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn sgn(b: bool) -> Q {
    if b {
        q(-1)
    } else {
        q(1)
    }
}

fn shape(cutoff: i32, vars: usize, min_weight: i64, parity: Option<Parity>) -> SeriesShape {
    SeriesShape {
        cutoff,
        terms: 5,
        vars,
        min_weight,
        hbar: (0, 1),
        parity,
    }
}

fn w_context(r: &mut FixtureRng, max_dim: usize) -> BVContext {
    let recipe = random_recipe(r, max_dim);
    let v = random_space(r, recipe);
    BVContext::new(&v.parity_reverse().unwrap()).unwrap()
}

fn c1_bv_axioms() -> Outcome {
    let mut count = 0;
    for seed in 0..30 {
        let mut r = rng(seed);
        let ctx = w_context(&mut r, 6);
        let n = ctx.space().dim();
        for (pf, pg) in [(Parity::Even, Parity::Even), (Parity::Even, Parity::Odd), (Parity::Odd, Parity::Odd), (Parity::Odd, Parity::Even)] {
            let f = random_series(&mut r, ctx.alphabet(), &shape(6, n, 0, Some(pf)));
            let g = random_series(&mut r, ctx.alphabet(), &shape(6, n, 0, Some(pg)));
            let h = random_series(&mut r, ctx.alphabet(), &shape(6, n, 0, None));
            for x in [&f, &g, &h] {
                ensure!(ctx.laplacian(&ctx.laplacian(x)).is_zero(), "seed {seed}: Δ² ≠ 0");
                ensure!(ctx.differential(&ctx.differential(x)).is_zero(), "seed {seed}: d² ≠ 0");
                let anti = ctx.differential(&ctx.laplacian(x)).add(&ctx.laplacian(&ctx.differential(x)));
                ensure!(anti.is_zero(), "seed {seed}: dΔ + Δd ≠ 0");
            }
            let (a, b) = (pf.is_odd(), pg.is_odd());
            let fg = ctx.bracket(&f, &g);
            ensure!(fg.eq_upto(&ctx.bracket(&g, &f).scale(&-sgn(!a && !b))), "seed {seed}: antisymmetry");
            let lhs = ctx.bracket(&f, &g.mul(&h));
            let rhs = fg.mul(&h).add(&g.mul(&ctx.bracket(&f, &h)).scale(&sgn(!a && b)));
            ensure!(lhs.eq_upto(&rhs), "seed {seed}: Leibniz");
            let lhs = ctx.bracket(&f, &ctx.bracket(&g, &h));
            let rhs = ctx
                .bracket(&fg, &h)
                .add(&ctx.bracket(&g, &ctx.bracket(&f, &h)).scale(&sgn(!a && !b)));
            ensure!(lhs.eq_upto(&rhs), "seed {seed}: Jacobi");
            count += 3;
        }
    }
    ensure!(count >= 100, "only {count} series");
    Ok(format!("{count} series"))
}

fn c2_qme_mc() -> Outcome {
    let mut count = 0;
    for seed in 0..60 {
        let mut r = rng(500 + seed);
        let ctx = w_context(&mut r, 4);
        let m = random_series(&mut r, ctx.alphabet(), &shape(6, ctx.space().dim(), 3, Some(Parity::Even)));
        let e = m.hbar_shift(-1).exp().map_err(|e| e.to_string())?;
        let lhs = ctx.differential(&e).add(&ctx.laplacian(&e).hbar_shift(1));
        let rhs = e.mul(&ctx.qme_residual(&m).unwrap().hbar_shift(-1));
        ensure!(lhs.eq_upto(&rhs), "seed {seed}");
        count += 1;
    }
    Ok(format!("{count} series"))
}

fn c3_sdr() -> Outcome {
    let mut count = 0;
    for seed in 0..60 {
        let mut r = rng(900 + seed);
        let recipe = random_recipe(&mut r, 6);
        let v = random_space(&mut r, recipe);
        let sdr = hodge_decompose(&v).map_err(|e| e.to_string())?;
        let bad = sdr_violations(&v, &sdr.h, &sdr.i, &sdr.p, &sdr.s);
        ensure!(bad.is_empty(), "seed {seed}: {bad:?}");
        let n = v.dim();
        let mut perp: Vec<Vec<Q>> = sdr.s.columns();
        perp.extend(v.d().columns());
        ensure!(span_rank(n, &perp) == n - sdr.h.dim(), "seed {seed}: im s + im d has wrong rank");
        for x in &perp {
            for c in 0..sdr.h.dim() {
                ensure!(v.pair(&sdr.i.column(c), x) == q(0), "seed {seed}: im i not orthogonal");
            }
        }
        for a in sdr.s.columns() {
            for b in sdr.s.columns() {
                ensure!(v.pair(&a, &b) == q(0), "seed {seed}: im s not isotropic");
            }
        }
        // perturb s inside im(i) and repair
        let hd = sdr.h.dim();
        let mut bump = Matrix::zeros(hd, hd);
        for a in 0..hd {
            for b in 0..hd {
                if sdr.h.parity(a) != sdr.h.parity(b) {
                    bump[(a, b)] = q(r.gen_range(-2..=2));
                }
            }
        }
        let perturbed = sdr.s.add(&(&(&sdr.i * &bump) * &sdr.p));
        let s2 = repair_side_conditions(&v, &sdr.h, &sdr.i, &sdr.p, &perturbed).map_err(|e| e.to_string())?;
        ensure!((&s2 * &sdr.i).is_zero(), "seed {seed}: s i ≠ 0 after repair");
        ensure!((&sdr.p * &s2).is_zero(), "seed {seed}: p s ≠ 0 after repair");
        ensure!((&s2 * &s2).is_zero(), "seed {seed}: s² ≠ 0 after repair");
        count += 1;
    }
    Ok(format!("{count} spaces"))
}

fn small_space(r: &mut FixtureRng) -> SuperSpace {
    loop {
        let recipe = SpaceRecipe {
            harmonic_pairs: r.gen_range(0..=1),
            acyclic_small: r.gen_range(0..=2),
            acyclic_large: r.gen_range(0..=1),
            scramble: r.gen_bool(0.7),
        };
        if recipe.acyclic_small + recipe.acyclic_large > 0 {
            return random_space(r, recipe);
        }
    }
}

fn c4_integration() -> Outcome {
    let mut count = 0;
    for seed in 0..70 {
        let mut r = rng(1300 + seed);
        let v = small_space(&mut r);
        let prob = IntegrationProblem::new(&v).map_err(|e| e.to_string())?;
        ensure!(prob.l_dim <= 4, "L_s too large");
        for _ in 0..3 {
            let f = random_series(&mut r, prob.w_alphabet(), &shape(6, v.dim(), 0, None));
            let wick = prob.wick_integrate(&f);
            let direct = prob.direct_integrate(&f).map_err(|e| e.to_string())?;
            ensure!(wick == direct, "seed {seed}: wick ≠ direct");
            ensure!(prob.stokes_residual(&f).is_zero(), "seed {seed}: Stokes residual");
            count += 1;
        }
    }
    ensure!(count >= 200, "only {count}");
    Ok(format!("{count} polynomials"))
}

fn c5_weights() -> Outcome {
    let mut terms = 0;
    let mut logs = 0;
    for seed in 0..30 {
        let mut r = rng(1700 + seed);
        let v = small_space(&mut r);
        let prob = IntegrationProblem::new(&v).map_err(|e| e.to_string())?;
        let f = random_series(&mut r, prob.w_alphabet(), &shape(6, v.dim(), 0, None));
        for (k, c) in f.terms() {
            let mut single = FormalSeries::zero(f.alphabet().clone(), f.cutoff());
            single.add_term(k.mono.clone(), k.hbar, c.clone());
            let w = f.term_weight(k);
            let out = prob.wick_integrate(&single);
            ensure!(out.terms().all(|(k2, _)| out.term_weight(k2) == w), "seed {seed}: weight changed");
            terms += 1;
        }
        let m = random_series(&mut r, prob.w_alphabet(), &shape(6, v.dim(), 3, Some(Parity::Even)));
        let z = prob.gaussian_exp_integrate(&m).map_err(|e| e.to_string())?;
        let l = z.log().map_err(|e| e.to_string())?.hbar_shift(1);
        ensure!(l.hbar_range().is_none_or(|(lo, _)| lo >= 0), "seed {seed}: negative ħ power");
        ensure!(l.is_in_h(), "seed {seed}: ħ log ∫ not in h");
        logs += 1;
    }
    Ok(format!("{terms} monomials, {logs} logarithms"))
}

fn c6_graph_sums() -> Outcome {
    let mut with_h = 0;
    let mut without_h = 0;
    for seed in 0..24u64 {
        let mut r = rng(2100 + seed);
        let harmonic = if seed % 3 == 0 { 0 } else { r.gen_range(1..=2) };
        let recipe = SpaceRecipe {
            harmonic_pairs: harmonic,
            acyclic_small: r.gen_range(1..=2),
            acyclic_large: r.gen_range(0..=1),
            scramble: r.gen_bool(0.7),
        };
        let v = random_space(&mut r, recipe);
        let prob = IntegrationProblem::new(&v).map_err(|e| e.to_string())?;
        let cutoff = 4 + (seed % 5) as i32;
        let mut sh = shape(cutoff, v.dim(), 3, Some(Parity::Even));
        sh.terms = 4;
        let f = random_series(&mut r, prob.w_alphabet(), &sh);
        let z = prob.gaussian_exp_integrate(&f).map_err(|e| e.to_string())?;
        let all = graph_sum_all(&f, &prob, cutoff).map_err(|e| e.to_string())?;
        ensure!(all == z, "seed {seed}: sum over all graphs ≠ integral");
        let conn = graph_sum_connected(&f, &prob, cutoff).map_err(|e| e.to_string())?;
        let log = z.log().map_err(|e| e.to_string())?.hbar_shift(1);
        ensure!(conn == log.with_cutoff(cutoff), "seed {seed}: connected sum ≠ ħ log");
        if harmonic > 0 {
            with_h += 1;
        } else {
            without_h += 1;
        }
    }
    Ok(format!("{with_h} fixtures with H ≠ 0, {without_h} with H = 0, cutoffs 4..8"))
}

fn c7_minimal_model() -> Outcome {
    let mut qme = 0;
    let mut left = 0;
    let mut zero_d = 0;
    for seed in 0..24 {
        let mut r = rng(2500 + seed);
        let harmonic = seed as usize % 3;
        let recipe = SpaceRecipe {
            harmonic_pairs: harmonic.max(usize::from(seed % 2 == 0)),
            acyclic_small: r.gen_range(1..=2),
            acyclic_large: r.gen_range(0..=1),
            scramble: r.gen_bool(0.7),
        };
        let v = random_space(&mut r, recipe);
        let prob = IntegrationProblem::new(&v).map_err(|e| e.to_string())?;
        let cutoff = 4 + (seed % 3) as i32;
        let m = random_quantum_structure(&mut r, &prob, cutoff);
        ensure!(prob.w.qme_residual(&m).unwrap().is_zero(), "seed {seed}: fixture fails QME");
        let out = rho_series(&m, &prob, Strategy::Wick).map_err(|e| e.to_string())?.m;
        ensure!(prob.h.qme_residual(&out).unwrap().is_zero(), "seed {seed}: ρ(m) fails QME");
        qme += 1;
        if prob.h_dim > 0 {
            let mh = random_h_structure(&mut r, &prob, cutoff);
            let back = rho_series(&iota(&mh, &prob), &prob, Strategy::Wick).map_err(|e| e.to_string())?.m;
            ensure!(back == mh, "seed {seed}: ρ(ι(m′)) ≠ m′");
            left += 1;
        }
    }
    for seed in 0..6 {
        let mut r = rng(2600 + seed);
        let recipe = SpaceRecipe {
            harmonic_pairs: 1 + seed as usize % 2,
            scramble: true,
            ..Default::default()
        };
        let v = random_space(&mut r, recipe);
        let prob = IntegrationProblem::new(&v).map_err(|e| e.to_string())?;
        let m = random_quantum_structure(&mut r, &prob, 6);
        let out = rho_series(&m, &prob, Strategy::All).map_err(|e| e.to_string())?.m;
        ensure!(out.with_alphabet(m.alphabet().clone()) == m, "seed {seed}: d = 0 but m′ ≠ m");
        zero_d += 1;
    }
    for seed in 0..10 {
        let mut r = rng(2700 + seed);
        let recipe = SpaceRecipe {
            harmonic_pairs: 1 + seed as usize % 2,
            acyclic_small: 1,
            scramble: true,
            ..Default::default()
        };
        let v = random_space(&mut r, recipe);
        let prob = IntegrationProblem::new(&v).map_err(|e| e.to_string())?;
        let mh = random_h_structure(&mut r, &prob, 5);
        let back = rho_series(&iota(&mh, &prob), &prob, Strategy::Wick).map_err(|e| e.to_string())?.m;
        ensure!(back == mh, "seed {seed}: ρ(ι(m′)) ≠ m′");
        left += 1;
    }
    ensure!(left >= 20, "only {left} left-inverse checks");
    Ok(format!("{qme} QME fixtures, {left} ρ∘ι checks, {zero_d} d = 0 fixtures"))
}

fn c8_homotopy() -> Outcome {
    let mut transported = 0;
    let mut inverted = 0;
    for seed in 0..10 {
        let mut r = rng(3100 + seed);
        let recipe = SpaceRecipe {
            harmonic_pairs: seed as usize % 3,
            acyclic_small: 1,
            acyclic_large: seed as usize % 2,
            scramble: true,
        };
        let v = random_space(&mut r, recipe);
        let plain = IntegrationProblem::new(&v).map_err(|e| e.to_string())?;
        let td = td_problem(&v).map_err(|e| e.to_string())?;
        let cutoff = 4 + (seed % 2) as i32;
        let m = random_quantum_structure(&mut r, &plain, cutoff);
        let b = random_series(&mut r, plain.w_alphabet(), &shape(cutoff, v.dim(), 3, Some(Parity::Odd)));
        let h = gauge_homotopy(&plain.w, &m, &b, TDtSeries::default_bound(cutoff));
        ensure!(h.mc_residual(&td.w).map_err(|e| e.to_string())?.is_zero(), "seed {seed}: H not MC");
        let t = homotopy_transport(&h, &td).map_err(|e| e.to_string())?;
        ensure!(t.mc_residual(&td.h).map_err(|e| e.to_string())?.is_zero(), "seed {seed}: H′ not MC");
        for p in [0, 1] {
            let direct = rho_series(&h.evaluate_at(p), &plain, Strategy::Wick).map_err(|e| e.to_string())?.m;
            ensure!(t.evaluate_at(p) == direct.with_alphabet(t.base.clone()), "seed {seed}: evaluation at {p}");
        }
        transported += 1;
    }
    for seed in 0..10 {
        let mut r = rng(3200 + seed);
        let recipe = SpaceRecipe {
            harmonic_pairs: 1 + seed as usize % 2,
            acyclic_small: 1,
            acyclic_large: seed as usize % 2,
            scramble: true,
        };
        let v = random_space(&mut r, recipe);
        let plain = IntegrationProblem::new(&v).map_err(|e| e.to_string())?;
        let td = td_problem(&v).map_err(|e| e.to_string())?;
        let mh = random_h_structure(&mut r, &plain, 5);
        let b = random_series(&mut r, plain.h_alphabet(), &shape(5, plain.h_dim, 3, Some(Parity::Odd)));
        let x = gauge_homotopy(&plain.h, &mh, &b, TDtSeries::default_bound(5));
        ensure!(x.mc_residual(&td.h).map_err(|e| e.to_string())?.is_zero(), "seed {seed}: x not MC");
        let up = iota_td(&x, &td).map_err(|e| e.to_string())?;
        ensure!(rho_tilde(&up, &td).map_err(|e| e.to_string())? == x, "seed {seed}: ρ̃(ι̃(x)) ≠ x");
        inverted += 1;
    }
    Ok(format!("{transported} homotopies transported, {inverted} ρ̃∘ι̃ checks"))
}

type Canon = (Vec<VertexType>, Vec<Vec<u32>>);

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

fn canon(types: &[VertexType], adj: &[Vec<u32>]) -> Canon {
    permutations(types.len())
        .into_iter()
        .map(|p| {
            (
                p.iter().map(|&i| types[i]).collect::<Vec<_>>(),
                p.iter().map(|&i| p.iter().map(|&j| adj[i][j]).collect()).collect::<Vec<Vec<u32>>>(),
            )
        })
        .min()
        .unwrap()
}

fn connected(adj: &[Vec<u32>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for w in 0..adj.len() {
            if adj[v][w] > 0 && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.iter().all(|&s| s)
}

fn glue(free: &mut Vec<usize>, owner: &[usize], adj: &mut Vec<Vec<u32>>, emit: &mut dyn FnMut(&[Vec<u32>])) {
    let Some(first) = free.pop() else {
        emit(adj);
        return;
    };
    for i in 0..free.len() {
        let other = free.remove(i);
        let (a, b) = (owner[first], owner[other]);
        adj[a][b] += 1;
        if a != b {
            adj[b][a] += 1;
        }
        glue(free, owner, adj, emit);
        adj[a][b] -= 1;
        if a != b {
            adj[b][a] -= 1;
        }
        free.insert(i, other);
    }
    free.push(first);
}

fn fact(n: u64) -> u64 {
    (1..=n).product()
}

/// Labeled gluings of flowers, grouped into classes; `|Aut|` by orbit counting.
fn gluing_oracle(max_weight: u32) -> BTreeMap<Canon, u64> {
    let budget = max_weight - 2;
    let mut types = Vec::new();
    for g in 0..=max_weight / 2 {
        for j in 0..=max_weight {
            for k in 0..=max_weight {
                if 2 * g + j + k >= 3 && 2 * g + j + k - 2 <= budget {
                    types.push(VertexType::new(g, j, k));
                }
            }
        }
    }
    let excess = |t: &VertexType| 2 * t.genus + t.half_edges + t.legs - 2;
    let mut profiles: Vec<Vec<VertexType>> = Vec::new();
    let mut stack: Vec<Vec<VertexType>> = vec![vec![]];
    while let Some(p) = stack.pop() {
        let used: u32 = p.iter().map(excess).sum();
        for t in &types {
            if p.last().is_some_and(|l| t < l) || used + excess(t) > budget {
                continue;
            }
            let mut p2 = p.clone();
            p2.push(*t);
            stack.push(p2.clone());
            profiles.push(p2);
        }
    }
    let mut out = BTreeMap::new();
    for p in profiles {
        let owner: Vec<usize> = p
            .iter()
            .enumerate()
            .flat_map(|(v, t)| std::iter::repeat_n(v, t.half_edges as usize))
            .collect();
        if owner.len() % 2 == 1 {
            continue;
        }
        let mut counts: BTreeMap<Canon, u64> = BTreeMap::new();
        let mut free: Vec<usize> = (0..owner.len()).collect();
        let mut adj = vec![vec![0u32; p.len()]; p.len()];
        glue(&mut free, &owner, &mut adj, &mut |a| {
            if connected(a) {
                *counts.entry(canon(&p, a)).or_default() += 1;
            }
        });
        let mut mult: BTreeMap<VertexType, u64> = BTreeMap::new();
        for t in &p {
            *mult.entry(*t).or_default() += 1;
        }
        let group: u64 = p.iter().map(|t| fact(t.half_edges as u64) * fact(t.legs as u64)).product::<u64>()
            * mult.values().map(|&n| fact(n)).product::<u64>();
        for (c, n) in counts {
            out.insert(c, group / n);
        }
    }
    out
}

fn c9_graphs() -> Outcome {
    let mut classes = 0;
    for w in 3..=6 {
        let oracle = gluing_oracle(w);
        let list = enumerate_connected(w, 1, 1);
        let ours: BTreeMap<Canon, u64> = list.iter().map(|c| (canon(&c.vertices, &c.adjacency), c.aut)).collect();
        ensure!(ours.len() == list.len(), "weight {w}: duplicate classes");
        ensure!(ours.len() == oracle.len(), "weight {w}: {} classes vs oracle {}", ours.len(), oracle.len());
        ensure!(ours == oracle, "weight {w}: |Aut| or class mismatch");
        classes += ours.len();
    }
    let loop1 = StableGraph::new(vec![1], vec![0, 0], vec![1, 0]).map_err(|e| e.to_string())?;
    ensure!(loop1.genus_and_euler() == (2, -1), "genus-1 loop");
    let bare = StableGraph::new(vec![2], vec![], vec![]).map_err(|e| e.to_string())?;
    ensure!(bare.genus_and_euler() == (2, -1), "bare genus-2 vertex");
    let tree = StableGraph::new(vec![0, 0], vec![0, 1, 0, 0, 1, 1], vec![1, 0, 2, 3, 4, 5]).map_err(|e| e.to_string())?;
    let (g, chi) = tree.genus_and_euler();
    ensure!(g == 0 && chi == 2 - 1, "genus-0 graph: χ = |V| − |E|");
    Ok(format!("{classes} classes up to weight 6, 3 documented examples"))
}

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures")
}

fn c10_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_bvmin");
    let mut files: Vec<PathBuf> = std::fs::read_dir(fixture_dir())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    ensure!(!files.is_empty(), "no CLI fixtures");
    let mut runs = 0;
    for f in &files {
        for cmd in ["validate", "minimal-model", "graph-expand"] {
            for extra in [&["--format", "json", "--strategy", "all"][..], &["--format", "pretty"][..]] {
                let go = || {
                    Command::new(bin)
                        .arg(cmd)
                        .arg("--input")
                        .arg(f)
                        .args(extra)
                        .output()
                        .map_err(|e| e.to_string())
                };
                let (a, b) = (go()?, go()?);
                ensure!(
                    a.stdout == b.stdout && a.stderr == b.stderr && a.status.code() == b.status.code(),
                    "{cmd} {} differs between runs",
                    f.display()
                );
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} command/fixture pairs on {} fixtures", files.len()))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("BV axioms", c1_bv_axioms),
        ("QME equals MC in exponential form", c2_qme_mc),
        ("SDR identities and side-condition repair", c3_sdr),
        ("Wick equals direct integration, Stokes vanishes", c4_integration),
        ("weight preservation and positivity", c5_weights),
        ("graph sums equal Gaussian integrals", c6_graph_sums),
        ("minimal model contract", c7_minimal_model),
        ("homotopy transport and inverse morphism", c8_homotopy),
        ("graph combinatorics against gluing oracle", c9_graphs),
        ("CLI determinism", c10_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let results: Vec<(Outcome, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|&(_, f)| {
                s.spawn(move || {
                    let start = Instant::now();
                    let r = panic::catch_unwind(f).unwrap_or_else(|e| {
                        let msg = e
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_default();
                        Err(format!("panicked: {msg}"))
                    });
                    (r, start.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let _ = panic::take_hook();
    let mut failed = 0;
    for (i, ((name, _), (r, secs))) in criteria.iter().zip(&results).enumerate() {
        match r {
            Ok(d) => println!("criterion {:>2} PASS  {name} ({d}; {secs:.1}s)", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {e} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
