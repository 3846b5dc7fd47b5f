use bvmin::bv::BVContext;
use bvmin::fixtures::{random_parity_basis, random_recipe, random_series, random_space, rng, FixtureRng, SeriesShape};
use bvmin::series::FormalSeries;
use bvmin::space::Parity;
use bvmin::{q, qf};

fn context(r: &mut FixtureRng, max_dim: usize) -> BVContext {
    let recipe = random_recipe(r, max_dim);
    let v = random_space(r, recipe);
    BVContext::new(&v.parity_reverse().unwrap()).unwrap()
}

fn series(r: &mut FixtureRng, ctx: &BVContext, cutoff: i32, parity: Option<Parity>) -> FormalSeries {
    random_series(
        r,
        ctx.alphabet(),
        &SeriesShape {
            cutoff,
            terms: 6,
            vars: ctx.space().dim(),
            min_weight: 0,
            hbar: (0, 1),
            parity,
        },
    )
}

fn sgn(b: bool) -> bvmin::Q {
    if b {
        q(-1)
    } else {
        q(1)
    }
}

#[test]
fn operators_square_to_zero_and_anticommute() {
    for seed in 0..40 {
        let mut r = rng(seed);
        let ctx = context(&mut r, 6);
        let f = series(&mut r, &ctx, 6, None);
        assert!(ctx.laplacian(&ctx.laplacian(&f)).is_zero(), "seed {seed}: Δ² ≠ 0");
        assert!(ctx.differential(&ctx.differential(&f)).is_zero(), "seed {seed}: d² ≠ 0");
        let anti = ctx
            .differential(&ctx.laplacian(&f))
            .add(&ctx.laplacian(&ctx.differential(&f)));
        assert!(anti.is_zero(), "seed {seed}: dΔ + Δd = {anti:?}");
    }
}

#[test]
fn differential_is_an_odd_derivation() {
    for seed in 100..130 {
        let mut r = rng(seed);
        let ctx = context(&mut r, 6);
        for pf in [Parity::Even, Parity::Odd] {
            let f = series(&mut r, &ctx, 5, Some(pf));
            let g = series(&mut r, &ctx, 5, None);
            let lhs = ctx.differential(&f.mul(&g));
            let rhs = ctx
                .differential(&f)
                .mul(&g)
                .add(&f.mul(&ctx.differential(&g)).scale(&pf.sign()));
            assert!(lhs.eq_upto(&rhs), "seed {seed}");
        }
    }
}

#[test]
fn odd_poisson_axioms() {
    let parities = [Parity::Even, Parity::Odd];
    for seed in 200..230 {
        let mut r = rng(seed);
        let ctx = context(&mut r, 6);
        for &pf in &parities {
            for &pg in &parities {
                let f = series(&mut r, &ctx, 6, Some(pf));
                let g = series(&mut r, &ctx, 6, Some(pg));
                let h = series(&mut r, &ctx, 6, None);
                let (a, b) = (pf.is_odd(), pg.is_odd());
                // antisymmetry
                let fg = ctx.bracket(&f, &g);
                let gf = ctx.bracket(&g, &f);
                assert!(fg.eq_upto(&gf.scale(&-sgn(!a && !b))), "seed {seed}: antisymmetry");
                // Leibniz in the second slot
                let lhs = ctx.bracket(&f, &g.mul(&h));
                let rhs = fg.mul(&h).add(&g.mul(&ctx.bracket(&f, &h)).scale(&sgn(!a && b)));
                assert!(lhs.eq_upto(&rhs), "seed {seed}: Leibniz");
                // Jacobi
                let lhs = ctx.bracket(&f, &ctx.bracket(&g, &h));
                let rhs = ctx
                    .bracket(&fg, &h)
                    .add(&ctx.bracket(&g, &ctx.bracket(&f, &h)).scale(&sgn(!a && !b)));
                assert!(lhs.eq_upto(&rhs), "seed {seed}: Jacobi");
                // Δ and d are derivations of the bracket
                let lhs = ctx.laplacian(&fg);
                let rhs = ctx
                    .bracket(&ctx.laplacian(&f), &g)
                    .add(&ctx.bracket(&f, &ctx.laplacian(&g)).scale(&sgn(!a)));
                assert!(lhs.eq_upto(&rhs), "seed {seed}: Δ on bracket");
                let lhs = ctx.differential(&fg);
                let rhs = ctx
                    .bracket(&ctx.differential(&f), &g)
                    .add(&ctx.bracket(&f, &ctx.differential(&g)).scale(&sgn(!a)));
                assert!(lhs.eq_upto(&rhs), "seed {seed}: d on bracket");
            }
        }
    }
}

#[test]
fn exponential_form_of_the_master_equation() {
    for seed in 300..330 {
        let mut r = rng(seed);
        let ctx = context(&mut r, 4);
        let m = random_series(
            &mut r,
            ctx.alphabet(),
            &SeriesShape {
                cutoff: 6,
                terms: 5,
                vars: ctx.space().dim(),
                min_weight: 3,
                hbar: (0, 1),
                parity: Some(Parity::Even),
            },
        );
        let e = m.hbar_shift(-1).exp().unwrap();
        let lhs = ctx.differential(&e).add(&ctx.laplacian(&e).hbar_shift(1));
        let res = ctx.qme_residual(&m).unwrap();
        let rhs = e.mul(&res.hbar_shift(-1));
        assert!(lhs.eq_upto(&rhs), "seed {seed}");
        let layers = ctx.hbar_layer_residuals(&m).unwrap();
        let mut sum = ctx.zero(m.cutoff());
        for (k, l) in layers.iter().enumerate() {
            sum = sum.add(&l.hbar_shift(k as i32));
        }
        assert!(sum.eq_upto(&res), "seed {seed}: layers");
    }
}

#[test]
fn laplacian_is_basis_independent() {
    for seed in 400..420 {
        let mut r = rng(seed);
        let ctx = context(&mut r, 6);
        let w = ctx.space().clone();
        let p = random_parity_basis(&mut r, &w.parities());
        let w2 = w.change_basis(&p, w.names().iter().map(|n| format!("{n}'")).collect()).unwrap();
        let ctx2 = BVContext::new(&w2).unwrap();
        // y_i = Σ_k P_ik y'_k
        let images: Vec<FormalSeries> = (0..w.dim())
            .map(|i| {
                let mut s = ctx2.zero(20);
                for k in 0..w.dim() {
                    s = s.add(&ctx2.var(k, 20).scale(&p[(i, k)]));
                }
                s
            })
            .collect();
        let f = series(&mut r, &ctx, 6, None);
        let pull = |g: &FormalSeries| g.substitute(ctx2.alphabet(), &images, g.cutoff());
        assert!(ctx2.laplacian(&pull(&f)).eq_upto(&pull(&ctx.laplacian(&f))), "seed {seed}: Δ");
        assert!(ctx2.differential(&pull(&f)).eq_upto(&pull(&ctx.differential(&f))), "seed {seed}: d");
    }
}

#[test]
fn trivial_cases() {
    let mut r = rng(7);
    let ctx = context(&mut r, 4);
    let one = FormalSeries::one(ctx.alphabet().clone(), 6);
    let g = series(&mut r, &ctx, 6, None);
    assert!(ctx.bracket(&one, &g).is_zero());
    assert!(ctx.differential(&one).is_zero());
    assert!(ctx.qme_residual(&ctx.zero(6)).unwrap().is_zero());
    assert!(ctx.hamiltonian_derivation(&ctx.zero(6), &g).is_zero());
    assert!(ctx.qme_residual(&ctx.var(0, 6)).is_err());
    let _ = qf(1, 2);
}
