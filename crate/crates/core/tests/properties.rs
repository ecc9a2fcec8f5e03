use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weylstar::expr::{parse_expr, Expr};
use weylstar::gaussian::{inverse, star_gauss_gauss, GaussianElement};
use weylstar::intertwiner::{intertwine_gauss, intertwine_poly};
use weylstar::linalg::{self, sqrt_branch, CMatrix, C64};
use weylstar::poly::{pairing, star_poly};
use weylstar::star_exponential::{star_exp_quadratic, star_exp_weyl};
use weylstar::two_valued::{double_cover_rotation, reflect};
use weylstar::{OrderingK, Params, PolyC};

fn c(rng: &mut ChaCha8Rng, scale: f64) -> C64 {
    C64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

fn sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMatrix {
    let raw = CMatrix::from_fn(n, n, |_, _| c(rng, scale));
    linalg::symmetrize(&raw)
}

fn poly(rng: &mut ChaCha8Rng, n: usize, max_deg: u32, terms: usize) -> PolyC {
    let mut f = PolyC::zero(n);
    for _ in 0..terms {
        let mut e = vec![0u32; n];
        let deg = rng.gen_range(0..=max_deg);
        for _ in 0..deg {
            e[rng.gen_range(0..n)] += 1;
        }
        f.add_term(e, c(rng, 1.0));
    }
    f
}

fn sphere(rng: &mut ChaCha8Rng, m: usize) -> Vec<C64> {
    loop {
        let a: Vec<C64> = (0..m).map(|_| c(rng, 1.0)).collect();
        let s = pairing(&a, &a);
        if s.norm() > 0.2 {
            let r = s.sqrt();
            return a.into_iter().map(|x| x / r).collect();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn star_product_is_associative(seed in any::<u64>(), m in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Params::new(m, rng.gen_range(0.3..1.5)).unwrap();
        let ord = OrderingK::new(sym(&mut rng, 2 * m, 1.0)).unwrap();
        let (f, g, h) = (poly(&mut rng, 2 * m, 3, 4), poly(&mut rng, 2 * m, 3, 4), poly(&mut rng, 2 * m, 3, 4));
        let left = star_poly(&star_poly(&f, &g, &ord, &p).unwrap(), &h, &ord, &p).unwrap();
        let right = star_poly(&f, &star_poly(&g, &h, &ord, &p).unwrap(), &ord, &p).unwrap();
        let scale = f.norm_l1() * g.norm_l1() * h.norm_l1();
        prop_assert!(left.sub(&right).max_coeff() <= 1e-10 * scale.max(1.0));
    }

    #[test]
    fn intertwiner_is_a_homomorphism(seed in any::<u64>(), m in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Params::new(m, 1.0).unwrap();
        let k1 = OrderingK::new(sym(&mut rng, 2 * m, 1.0)).unwrap();
        let k2 = OrderingK::new(sym(&mut rng, 2 * m, 1.0)).unwrap();
        let k3 = OrderingK::new(sym(&mut rng, 2 * m, 1.0)).unwrap();
        let f = poly(&mut rng, 2 * m, 3, 3);
        let g = poly(&mut rng, 2 * m, 3, 3);
        let t = |x: &PolyC, a: &OrderingK, b: &OrderingK| intertwine_poly(x, a, b, &p).unwrap();
        let lhs = t(&star_poly(&f, &g, &k1, &p).unwrap(), &k1, &k2);
        let rhs = star_poly(&t(&f, &k1, &k2), &t(&g, &k1, &k2), &k2, &p).unwrap();
        prop_assert!(lhs.distance(&rhs) < 1e-9);
        prop_assert!(t(&t(&f, &k1, &k2), &k2, &k1).distance(&f) < 1e-10);
        prop_assert!(t(&t(&f, &k1, &k2), &k2, &k3).distance(&t(&f, &k1, &k3)) < 1e-10);
    }

    #[test]
    fn gaussian_intertwiner_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Params::new(1, 1.0).unwrap();
        let k1 = OrderingK::new(sym(&mut rng, 2, 0.5)).unwrap();
        let k2 = OrderingK::new(sym(&mut rng, 2, 0.5)).unwrap();
        let f = GaussianElement::new(c(&mut rng, 1.0) + C64::from(2.0), sym(&mut rng, 2, 0.3)).unwrap();
        let there = intertwine_gauss(&f, &k1, &k2, &p).unwrap().into_representative();
        let back = intertwine_gauss(&there, &k2, &k1, &p).unwrap();
        prop_assert!(back.representative().distance_up_to_sign(&f) < 1e-10);
    }

    #[test]
    fn continued_square_root_squares_back(re in -5.0f64..5.0, im in -5.0f64..5.0, rr in -5.0f64..5.0, ri in -5.0f64..5.0) {
        let w = C64::new(re, im);
        let reference = C64::new(rr, ri);
        prop_assume!(w.norm() > 1e-6 && reference.norm() > 1e-6);
        if let Ok(s) = sqrt_branch(w, reference) {
            prop_assert!((s * s - w).norm() <= 1e-12 * w.norm().max(1.0));
            prop_assert!((s * reference.conj()).re >= 0.0);
        }
    }

    #[test]
    fn reflection_is_an_involution(seed in any::<u64>(), m in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = sphere(&mut rng, m);
        let b: Vec<C64> = (0..m).map(|_| c(&mut rng, 2.0)).collect();
        let bb = reflect(&a, &reflect(&a, &b).unwrap()).unwrap();
        for (x, y) in bb.iter().zip(&b) {
            prop_assert!((x - y).norm() < 1e-10 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn double_cover_outputs_are_special_orthogonal(seed in any::<u64>(), m in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r1 = double_cover_rotation(&sphere(&mut rng, m), &sphere(&mut rng, m)).unwrap();
        let r2 = double_cover_rotation(&sphere(&mut rng, m), &sphere(&mut rng, m)).unwrap();
        for r in [r1.clone(), &r1 * &r2] {
            let scale = linalg::max_abs(&r).powi(2).max(1.0);
            prop_assert!(linalg::max_abs(&(r.transpose() * &r - linalg::identity(m))) < 1e-9 * scale);
            prop_assert!((linalg::det(&r) - C64::from(1.0)).norm() < 1e-9 * scale.powi(m as i32));
        }
    }

    #[test]
    fn weyl_path_equals_general_path(seed in any::<u64>(), m in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Params::new(m, 1.0).unwrap();
        let a = sym(&mut rng, 2 * m, 1.0);
        let t = C64::from(rng.gen_range(0.0..0.5));
        let w = star_exp_weyl(&a, &p, t).unwrap().element.into_representative();
        let g = star_exp_quadratic(&a, &OrderingK::weyl(m), &p, t).unwrap().element.into_representative();
        prop_assert_eq!(w, g);
    }

    #[test]
    fn exponential_law_holds_up_to_sign(seed in any::<u64>(), m in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Params::new(m, 1.0).unwrap();
        let ord = match rng.gen_range(0..3) {
            0 => OrderingK::weyl(m),
            1 => OrderingK::standard(m),
            _ => OrderingK::antistandard(m),
        };
        let a = sym(&mut rng, 2 * m, 1.0);
        let (s, t) = (rng.gen_range(0.0..0.4), rng.gen_range(0.0..0.4));
        let fs = star_exp_quadratic(&a, &ord, &p, C64::from(s)).unwrap().element.into_representative();
        let ft = star_exp_quadratic(&a, &ord, &p, C64::from(t)).unwrap().element.into_representative();
        let fst = star_exp_quadratic(&a, &ord, &p, C64::from(s + t)).unwrap().element;
        let prod = star_gauss_gauss(&fs, &ft, &ord, &p).unwrap();
        prop_assert!(prod.equals(&fst, 1e-9));
        let inv = inverse(&fs, &ord, &p).unwrap().into_representative();
        let one = star_gauss_gauss(&fs, &inv, &ord, &p).unwrap().into_representative();
        prop_assert!(one.distance(&GaussianElement::one(2 * m)) < 1e-9);
    }

    #[test]
    fn parsed_expressions_round_trip(text in expr_text()) {
        let p = Params::new(2, 1.0).unwrap();
        let e: Expr = parse_expr(&text, &p).unwrap();
        let again = parse_expr(&e.to_string(), &p).unwrap();
        prop_assert_eq!(again, e);
    }
}

fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (1usize..=2).prop_map(|i| format!("u{i}")),
        (1usize..=2).prop_map(|i| format!("v{i}")),
        Just("hbar".to_string()),
        (-3.0f64..3.0).prop_map(|x| format!("{x}")),
        (-3.0f64..3.0).prop_map(|x| format!("{x}i")),
        ((0.0f64..3.0), (0.0f64..3.0)).prop_map(|(a, b)| format!("{a}+{b}i")),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} + {b}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) * ({b})")),
            (inner.clone(), 0u32..4).prop_map(|(a, n)| format!("({a})^{n}")),
            inner.clone().prop_map(|a| format!("-({a})")),
        ]
    })
}
