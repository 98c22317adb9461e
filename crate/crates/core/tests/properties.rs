use measys_core::blocksystem::{assemble_window, find_singular_points};
use measys_core::checks::random_pair;
use measys_core::fuzz::{
    self, random_hermitian, random_instance, random_j, random_vector, rng_for,
};
use measys_core::linalg::{c, fro, vnorm, CVec};
use measys_core::relations::inner_product;
use measys_core::*;
use proptest::prelude::*;
use rand::Rng;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 48,
        ..ProptestConfig::default()
    }
}

fn system(seed: u64, index: usize) -> (fuzz::Instance, BlockSystem) {
    let inst = random_instance(seed, index);
    let bs = assemble_window(&inst.problem, inst.window, &[], &Tolerances::default()).unwrap();
    (inst, bs)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn b_minus_is_minus_b_plus_adjoint(seed in any::<u64>()) {
        let mut rng = rng_for(seed, 0);
        let n = rng.gen_range(1..=3);
        let j = random_j(&mut rng, n);
        let dq = random_hermitian(&mut rng, n, 2.0);
        let p = Problem::new(j, MeasureMatrix::zero(n, (0.0, 1.0)).with_atom(0.5, dq), MeasureMatrix::zero(n, (0.0, 1.0))).unwrap();
        let bp = p.b_plus(0.5).unwrap();
        let bm = p.b_minus(0.5).unwrap();
        prop_assert!(fro(&(bm + bp.adjoint())) <= 1e-14);
    }

    #[test]
    fn scalar_problems_have_no_singular_points(gamma in 0.1f64..3.0, d in -50.0f64..50.0, x in -0.9f64..0.9) {
        let iv = (-1.0, 1.0);
        let j = CMatrix::from_element(1, 1, c(0.0, gamma));
        let q = MeasureMatrix::zero(1, iv).with_atom(x, CMatrix::from_element(1, 1, c(d, 0.0)));
        let p = Problem::new(j, q, MeasureMatrix::zero(1, iv)).unwrap();
        prop_assert!(find_singular_points(&p, iv, 1e-9).is_empty());
    }

    #[test]
    fn fundamental_matrices_compose(seed in 0u64..1000, index in 0usize..50) {
        let inst = random_instance(seed, index);
        let a = -1.0;
        let b = 1.0;
        let singular = &inst.singular;
        // a subinterval free of singular atoms
        let mut cuts = vec![a];
        cuts.extend(singular.iter().copied());
        cuts.push(b);
        let (lo, hi) = cuts.windows(2).map(|w| (w[0], w[1])).max_by(|p, q| (p.1 - p.0).total_cmp(&(q.1 - q.0))).unwrap();
        let y = lo + 0.37 * (hi - lo);
        let x = lo + 0.81 * (hi - lo);
        prop_assume!(inst.problem.q.atoms().iter().all(|t| t.0 != y));
        let whole = fundamental_matrix(&inst.problem, (lo, hi), 1e-9).unwrap();
        let tail = fundamental_matrix(&inst.problem, (y, hi), 1e-9).unwrap();
        let lhs = whole.evaluate(x, Side::Left).unwrap();
        let rhs = tail.evaluate(x, Side::Left).unwrap() * whole.evaluate(y, Side::Balanced).unwrap();
        prop_assert!(fro(&(&lhs - &rhs)) <= 1e-10 * (1.0 + fro(&lhs)));
    }

    #[test]
    fn regular_solutions_superpose(seed in any::<u64>()) {
        let mut rng = rng_for(seed, 1);
        let inst = random_instance(seed, 0);
        let p = &inst.problem;
        let n = p.dim();
        let sub = match inst.singular.first() { Some(&s) => (-1.0, s), None => (-1.0, 1.0) };
        let f = fuzz::random_rhs(&mut rng, p);
        let g = fuzz::random_rhs(&mut rng, p);
        let u0 = random_vector(&mut rng, n, 1.0);
        let v0 = random_vector(&mut rng, n, 1.0);
        let alpha = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let u = solve_ivp_regular(p, sub, sub.0, &u0, Some(&f), 1e-9).unwrap();
        let v = solve_ivp_regular(p, sub, sub.0, &v0, Some(&g), 1e-9).unwrap();
        let fg = f.scale(alpha).add(&g).unwrap();
        let w = solve_ivp_regular(p, sub, sub.0, &(&u0 * alpha + &v0), Some(&fg), 1e-9).unwrap();
        for t in [0.1, 0.5, 0.9] {
            let x = sub.0 + t * (sub.1 - sub.0);
            let lhs = w.sample(x).unwrap();
            let rhs = u.sample(x).unwrap() * alpha + v.sample(x).unwrap();
            prop_assert!(vnorm(&(&lhs - &rhs)) <= 1e-10 * (1.0 + vnorm(&lhs)));
        }
    }

    #[test]
    fn instances_are_reproducible(seed in any::<u64>(), index in 0usize..1000) {
        let a = random_instance(seed, index);
        let b = random_instance(seed, index);
        prop_assert_eq!(a.problem, b.problem);
        prop_assert_eq!(a.f, b.f);
    }

    #[test]
    fn padded_points_are_transparent(seed in 0u64..1000, index in 0usize..50, t in 0.05f64..0.95) {
        let (inst, bs) = system(seed, index);
        let pts = bs.partition.points().to_vec();
        let extra = pts[0] + t * (pts[pts.len() - 1] - pts[0]);
        prop_assume!(pts.iter().chain(inst.problem.q.atoms().iter().map(|a| &a.0)).all(|&p| (p - extra).abs() > 1e-3));
        let forced = assemble_window(&inst.problem, inst.window, &[extra], &Tolerances::default()).unwrap();
        let n = bs.n();
        prop_assert_eq!(bs.kernel().ncols() - n, forced.kernel().ncols() - n);
        prop_assert_eq!(bs.cokernel().ncols(), forced.cokernel().ncols());
    }

    #[test]
    fn lift_is_linear_and_injective(seed in 0u64..1000, index in 0usize..50) {
        let (_, bs) = system(seed, index);
        let mut rng = rng_for(seed, index + 7);
        let basis = bs.cokernel_m();
        let a = &basis * random_vector(&mut rng, basis.ncols(), 1.0);
        let b = &basis * random_vector(&mut rng, basis.ncols(), 1.0);
        let alpha = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let la = lift_kernel_vector(&bs, &a).unwrap().tilde;
        let lb = lift_kernel_vector(&bs, &b).unwrap().tilde;
        let lc = lift_kernel_vector(&bs, &(&a * alpha + &b)).unwrap().tilde;
        prop_assert!(vnorm(&(&lc - &la * alpha - &lb)) <= 1e-10 * (1.0 + vnorm(&lc)));
        // Cũ = û, so the lift of a nonzero vector cannot vanish
        prop_assert!(vnorm(&(&bs.c * &la - &a)) <= 1e-10 * (1.0 + vnorm(&la)));
    }

    #[test]
    fn inner_product_is_hermitian(seed in 0u64..1000, index in 0usize..50) {
        let (_, bs) = system(seed, index);
        let mut rng = rng_for(seed, index + 3);
        let (u, _) = random_pair(&bs, &mut rng).unwrap();
        let (v, g) = random_pair(&bs, &mut rng).unwrap();
        let w = &bs.problem.w;
        let uv = inner_product(w, &u, &v).unwrap();
        let vu = inner_product(w, &v, &u).unwrap();
        prop_assert!((uv - vu.conj()).norm() <= 1e-12 * (1.0 + uv.norm()));
        let uu = inner_product(w, &u, &u).unwrap();
        prop_assert!(uu.im.abs() <= 1e-12 * (1.0 + uu.norm()));
        prop_assert!(uu.re >= -1e-12 * (1.0 + uu.norm()));
        let gu = inner_product(w, &g, &u).unwrap();
        let ug = inner_product(w, &u, &g).unwrap();
        prop_assert!((gu - ug.conj()).norm() <= 1e-12 * (1.0 + gu.norm()));
    }

    #[test]
    fn solutions_round_trip_through_the_block_system(seed in 0u64..1000, index in 0usize..50) {
        let (inst, bs) = system(seed, index);
        let mv = bs.moments(&inst.f).unwrap();
        let set = solve_system(&bs, &mv).unwrap();
        if let Some(u) = &set.particular {
            let pts = bs.partition.points();
            let tilde: Vec<CVec> = pts[..pts.len() - 1].iter().map(|&x| u.evaluate(x, Side::Right).unwrap()).collect();
            let tilde = measys_core::linalg::stack(&tilde);
            prop_assert!(vnorm(&(&bs.b * tilde - &mv.rhs)) <= 1e-9 * (1.0 + vnorm(&mv.rhs)));
        }
        for k in &set.kernel_basis {
            for (j, &x) in bs.partition.interior().iter().enumerate() {
                let d = &bs.b_plus[j] * k.evaluate(x, Side::Right).unwrap() - &bs.b_minus[j] * k.evaluate(x, Side::Left).unwrap();
                prop_assert!(vnorm(&d) <= 1e-10);
            }
        }
    }

    #[test]
    fn compact_solutions_vanish_outside(seed in 0u64..1000, index in 0usize..50) {
        let (_, bs) = system(seed, index);
        let pts = bs.partition.points().to_vec();
        let nn = bs.interior_count();
        for cs in compact_support_solutions(&bs).unwrap() {
            for k in 0..16 {
                let t = (k as f64 + 0.5) / 16.0;
                prop_assert_eq!(vnorm(&cs.solution.sample(pts[0] + t * (pts[1] - pts[0])).unwrap()), 0.0);
                prop_assert_eq!(vnorm(&cs.solution.sample(pts[nn] + t * (pts[nn + 1] - pts[nn])).unwrap()), 0.0);
            }
        }
    }
}

type CMatrix = measys_core::linalg::CMat;
