//! Randomized properties over generated meshes and cochains.

use dvflow::dec::assemble_operators;
use dvflow::dynamics::{FlowContext, Viscosity};
use dvflow::io::{read_matrix_market, write_matrix_market, CochainFile};
use dvflow::mesh::{build_square_dirichlet, build_torus_mesh, extrude_prismatic, read_mesh, write_mesh, Family, Mesh};
use dvflow::recon::Extrusion;
use dvflow::sparse::dot;
use dvflow::verify::fit_slope;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Clone, Debug)]
enum Kind {
    Torus,
    Square,
    Prism,
}

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Equilateral), Just(Family::Perturbed)]
}

fn kind() -> impl Strategy<Value = Kind> {
    prop_oneof![Just(Kind::Torus), Just(Kind::Square), Just(Kind::Prism)]
}

fn mesh(kind: &Kind, n: usize, f: Family, pert: f64, seed: u64) -> Mesh {
    let pert = if f == Family::Perturbed { pert } else { 0.0 };
    match kind {
        Kind::Torus => build_torus_mesh(n, f, pert, seed).unwrap(),
        Kind::Square => build_square_dirichlet(n, f, pert, seed).unwrap(),
        Kind::Prism => extrude_prismatic(&build_torus_mesh(n.min(6), f, pert, seed).unwrap(), 3, &[0.7, 1.1, 0.9]).unwrap(),
    }
}

fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn context(m: Mesh) -> FlowContext {
    FlowContext::new(Arc::new(m), Extrusion::DualCell).unwrap()
}

fn masked(ctx: &FlowContext, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut w = random(ctx.ops.n_facets(), rng);
    ctx.leray.mask(&mut w);
    w
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn coboundaries_compose_to_zero(k in kind(), n in (2usize..5).prop_map(|h| 2 * h), f in family(), pert in 0.0f64..0.2, seed in 0u64..1000) {
        let m = mesh(&k, n, f, pert, seed);
        let ops = assemble_operators(Arc::new(m)).unwrap();
        prop_assert_eq!(ops.dt1.integer_product_nonzeros(&ops.dt0), 0);
        if ops.dim() == 3 {
            prop_assert_eq!(ops.dt2.integer_product_nonzeros(&ops.dt1), 0);
        }
    }

    #[test]
    fn lamb_vector_does_no_work(k in kind(), f in family(), seed in 0u64..1000) {
        let ctx = context(mesh(&k, 6, f, 0.15, seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = masked(&ctx, &mut rng);
        let q = ctx.recon.lamb(&v, &v).unwrap();
        let scale = ctx.ops.norm_l2h(&v) * ctx.ops.norm_l2h(&q);
        prop_assert!(ctx.ops.inner(1, &v, &q).abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn leray_is_an_orthogonal_projector(k in kind(), f in family(), seed in 0u64..1000) {
        let ctx = context(mesh(&k, 6, f, 0.15, seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = masked(&ctx, &mut rng);
        let y = masked(&ctx, &mut rng);
        let px = ctx.leray.project_force(x.clone()).unwrap();
        let py = ctx.leray.project_force(y.clone()).unwrap();
        let ppx = ctx.leray.project_force(px.clone()).unwrap();
        let s = ctx.ops.norm_l2h(&x) * ctx.ops.norm_l2h(&y);
        let d: Vec<f64> = px.iter().zip(&ppx).map(|(a, b)| a - b).collect();
        prop_assert!(ctx.ops.norm_l2h(&d) <= 1e-12 * ctx.ops.norm_l2h(&x));
        prop_assert!((ctx.ops.inner(1, &px, &y) - ctx.ops.inner(1, &x, &py)).abs() <= 1e-12 * s);
        prop_assert!(ctx.ops.norm_l2h(&px) <= ctx.ops.norm_l2h(&x) * (1.0 + 1e-12));
        prop_assert!(ctx.divergence_residual(&px) <= 1e-10);
    }

    #[test]
    fn gradient_and_divergence_are_adjoint(k in kind(), f in family(), seed in 0u64..1000) {
        let ctx = context(mesh(&k, 6, f, 0.15, seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random(ctx.ops.n_cells(), &mut rng);
        let y = random(ctx.ops.n_facets(), &mut rng);
        let g = ctx.ops.grad(&q);
        let lhs = ctx.ops.inner(1, &g, &y);
        let rhs = -dot(&q, &ctx.ops.divergence(&y));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * ctx.ops.norm_l2h(&g) * ctx.ops.norm_l2h(&y));
    }

    #[test]
    fn viscous_operators_dissipate(k in kind(), f in family(), seed in 0u64..1000, nu in 1e-4f64..1.0, cs in 0.05f64..0.3) {
        let ctx = context(mesh(&k, 6, f, 0.15, seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = ctx.leray.project_force(masked(&ctx, &mut rng)).unwrap();
        let mut closures = vec![Viscosity::Isotropic { nu }, Viscosity::Smagorinsky { cs }];
        if ctx.ops.dim() == 3 {
            closures.push(Viscosity::Anisotropic { nu_h: nu, nu_v: 0.5 * nu });
        }
        for visc in closures {
            let fv = ctx.viscous_force(&visc, &v).unwrap();
            let w = ctx.ops.inner(1, &v, &fv);
            prop_assert!(w <= 1e-12 * ctx.ops.norm_l2h(&v) * ctx.ops.norm_l2h(&fv), "{visc:?}: {w}");
        }
    }

    #[test]
    fn kelvin_identity_on_periodic_complexes(prism in any::<bool>(), f in family(), seed in 0u64..1000) {
        let ctx = context(mesh(if prism { &Kind::Prism } else { &Kind::Torus }, 6, f, 0.15, seed));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random(ctx.ops.n_facets(), &mut rng);
        let gamma = ctx.ops.dt1.transpose_matvec(&random(ctx.ops.n_ridges(), &mut rng));
        let lamb = ctx.recon.lamb(&v, &v).unwrap();
        let lie = ctx.recon.chain_lie(&v, &gamma).unwrap();
        let e = |a: &[f64]| dot(a, a).sqrt();
        let scale = e(&lamb) * e(&gamma) + e(&v) * e(&lie);
        prop_assert!((dot(&v, &lie) - dot(&lamb, &gamma)).abs() <= 1e-11 * scale);
    }

    #[test]
    fn mesh_generation_is_deterministic_and_files_round_trip(k in kind(), f in family(), seed in 0u64..1000) {
        let a = mesh(&k, 6, f, 0.15, seed);
        let b = mesh(&k, 6, f, 0.15, seed);
        prop_assert_eq!(&a, &b);
        let text = write_mesh(&a);
        prop_assert_eq!(read_mesh(&text).unwrap(), a);
    }

    #[test]
    fn cochain_files_round_trip_bit_exactly(seed in 0u64..1000, degree in 0usize..3, scale in -300i32..300) {
        let m = build_torus_mesh(4, Family::Perturbed, 0.1, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..m.n_dual(degree)).map(|_| rng.random_range(-1.0..1.0) * 10f64.powi(scale)).collect();
        let c = CochainFile::new(&m, degree, values).unwrap();
        let back = CochainFile::read(&c.write_with_comment("seed")).unwrap();
        prop_assert_eq!(back.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), c.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert!(back.check_mesh(&m).is_ok());
    }

    #[test]
    fn matrix_market_round_trip(k in kind(), seed in 0u64..1000) {
        let ops = assemble_operators(Arc::new(mesh(&k, 6, Family::Perturbed, 0.15, seed))).unwrap();
        for m in [&ops.dt0, &ops.div, &ops.curl_curl] {
            let back = read_matrix_market(&write_matrix_market(m, "x")).unwrap();
            prop_assert_eq!(back.triplets(), m.triplets());
        }
    }

    #[test]
    fn slope_fit_recovers_power_laws(r in 0.3f64..4.0, c in 1e-3f64..1e3, h0 in 0.05f64..1.0) {
        let h: Vec<f64> = (0..5).map(|i| h0 / 2f64.powi(i)).collect();
        let e: Vec<f64> = h.iter().map(|h| c * h.powf(r)).collect();
        let fit = fit_slope(&h, &e).unwrap();
        prop_assert!((fit.slope - r).abs() < 1e-10);
        prop_assert!(fit.band < 1e-8);
    }
}
