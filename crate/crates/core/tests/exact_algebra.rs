//! Oracle and property tests for scalar and polynomial arithmetic.

use std::collections::BTreeMap;

use crnf_core::linsolve::{solve_linear, LinearEquation};
use crnf_core::scalar::GaussianRational;
use crnf_core::{AlgebraError, Backend, Monomial, Poly, Scalar, Var};
use proptest::prelude::*;

const EXACT: Backend = Backend::Exact;

fn s(n: i64) -> Scalar {
    Scalar::from_int(n, EXACT)
}

fn var(v: Var) -> Poly {
    Poly::var(v, EXACT, 6)
}

fn mono(z1: u32, z2: u32, zb1: u32, zb2: u32, u: u32) -> Monomial {
    Monomial::new(z1, z2, zb1, zb2, u)
}

#[test]
fn add_cancellation_identity_doubling() {
    let z1 = var(Var::Z1);
    let u = var(Var::U);
    // (z1 + u) + (-z1) = u
    let lhs = z1.add(&u).unwrap().add(&z1.neg()).unwrap();
    assert_eq!(lhs, u);
    // p + 0 = p
    let p = z1.mul(&var(Var::Zb1)).unwrap();
    assert_eq!(p.add(&Poly::zero(EXACT, 6)).unwrap(), p);
    // doubling
    let d = p.add(&p).unwrap();
    assert_eq!(d.coeff(&mono(1, 0, 1, 0, 0)), s(2));
}

#[test]
fn mul_binomial_and_truncation() {
    let z1 = var(Var::Z1);
    let z2 = var(Var::Z2);
    let sq = z1.add(&z2).unwrap().pow(2).unwrap();
    assert_eq!(sq.coeff(&mono(2, 0, 0, 0, 0)), s(1));
    assert_eq!(sq.coeff(&mono(1, 1, 0, 0, 0)), s(2));
    assert_eq!(sq.coeff(&mono(0, 2, 0, 0, 0)), s(1));
    // truncation at order 2: z1^2 * z1 = 0
    let z1t = Poly::var(Var::Z1, EXACT, 2);
    let prod = z1t.pow(2).unwrap().mul(&z1t).unwrap();
    assert!(prod.is_zero());
}

#[test]
fn mul_backend_mismatch_is_an_error() {
    let a = Poly::var(Var::Z1, EXACT, 4);
    let b = Poly::var(Var::Z1, Backend::Float(256), 4);
    match a.mul(&b) {
        Err(AlgebraError::BackendMismatch(_, _)) => {}
        other => panic!("expected backend mismatch, got {other:?}"),
    }
}

#[test]
fn conjugate_examples() {
    // conj(i z1) = -i zb1
    let iz1 = var(Var::Z1).scale(&Scalar::i(EXACT)).unwrap();
    let c = iz1.conjugate();
    assert_eq!(c.coeff(&mono(0, 0, 1, 0, 0)), Scalar::i(EXACT).neg());
    // conj(u) = u
    assert_eq!(var(Var::U).conjugate(), var(Var::U));
    // conj(z1 z2 zb1) = zb1 zb2 z1
    let p = var(Var::Z1)
        .mul(&var(Var::Z2))
        .unwrap()
        .mul(&var(Var::Zb1))
        .unwrap();
    assert_eq!(p.conjugate().coeff(&mono(1, 0, 1, 1, 0)), s(1));
}

#[test]
fn substitute_examples() {
    // z1^2 with z1 -> z1 + z2
    let p = var(Var::Z1).pow(2).unwrap();
    let mut b = BTreeMap::new();
    b.insert(Var::Z1, var(Var::Z1).add(&var(Var::Z2)).unwrap());
    let q = p.substitute(&b).unwrap();
    assert_eq!(q.coeff(&mono(1, 1, 0, 0, 0)), s(2));
    // u -> 0
    let mut b2 = BTreeMap::new();
    b2.insert(Var::U, Poly::zero(EXACT, 6));
    assert!(var(Var::U).substitute(&b2).unwrap().is_zero());
    // unbound variable is a contract violation
    let p3 = var(Var::Z1).mul(&var(Var::Zb1)).unwrap();
    let mut b3 = BTreeMap::new();
    b3.insert(Var::Z1, var(Var::Z1).scale(&s(2)).unwrap());
    match p3.substitute(&b3) {
        Err(AlgebraError::UnboundVariable(v)) => assert_eq!(v, "zb1"),
        other => panic!("expected unbound variable, got {other:?}"),
    }
}

#[test]
fn solve_linear_examples() {
    // {x + y = 2, x - y = 0} -> x = 1, y = 1, no nullspace
    let eqs = vec![
        LinearEquation { coeffs: vec![(0, s(1)), (1, s(1))], rhs: s(2) },
        LinearEquation { coeffs: vec![(0, s(1)), (1, s(-1))], rhs: s(0) },
    ];
    let sol = solve_linear(&eqs, 2, EXACT).unwrap();
    assert_eq!(sol.particular, vec![s(1), s(1)]);
    assert!(sol.nullspace.is_empty());

    // {x + y = 0} -> particular zero, nullspace {(1, -1)} up to scaling
    let eqs2 = vec![LinearEquation { coeffs: vec![(0, s(1)), (1, s(1))], rhs: s(0) }];
    let sol2 = solve_linear(&eqs2, 2, EXACT).unwrap();
    assert!(sol2.particular.iter().all(|c| c.is_zero()));
    assert_eq!(sol2.nullspace.len(), 1);
    let v = &sol2.nullspace[0];
    let lincomb = v[0].try_add(&v[1]).unwrap();
    assert!(lincomb.is_zero());
    assert!(!v[1].is_zero());

    // {x = 1, x = 2} infeasible
    let eqs3 = vec![
        LinearEquation { coeffs: vec![(0, s(1))], rhs: s(1) },
        LinearEquation { coeffs: vec![(0, s(1))], rhs: s(2) },
    ];
    assert!(matches!(solve_linear(&eqs3, 1, EXACT), Err(AlgebraError::Infeasible)));
}

#[test]
fn series_inversion_divides_units() {
    // (1 + z1) * invert(1 + z1) = 1 to truncation order.
    let one = Poly::constant(s(1), 6);
    let p = one.add(&var(Var::Z1)).unwrap();
    let inv = p.invert().unwrap();
    assert_eq!(p.mul(&inv).unwrap(), one);
    // dividing by a non-unit fails
    assert!(matches!(var(Var::Z1).invert(), Err(AlgebraError::NotAUnit)));
}

#[test]
fn exact_sqrt_and_radical_refusal() {
    let four = s(4);
    assert_eq!(four.sqrt().unwrap(), s(2));
    // sqrt(2) leaves the Gaussian rationals
    assert!(matches!(s(2).sqrt(), Err(AlgebraError::NeedsRadical)));
    // sqrt(-1) = i
    assert_eq!(s(-1).sqrt().unwrap(), Scalar::i(EXACT));
    // sqrt(2i) = 1 + i exactly
    let two_i = Scalar::i(EXACT).try_mul(&s(2)).unwrap();
    let r = two_i.sqrt().unwrap();
    assert_eq!(r, s(1).try_add(&Scalar::i(EXACT)).unwrap());
}

#[test]
fn float_backend_roots_and_tolerance() {
    let f = Backend::Float(256);
    let two = Scalar::from_int(2, f);
    let r = two.sqrt().unwrap();
    let back = r.try_mul(&r).unwrap();
    assert!(back.approx_eq_pow2(&two, -240));
    // principal cube root of -8i has argument -pi/6: re > 0
    let c = Scalar::from_int(-8, f).try_mul(&Scalar::i(f)).unwrap();
    let root = c.kth_root(3).unwrap();
    let cubed = root.try_mul(&root).unwrap().try_mul(&root).unwrap();
    assert!(cubed.approx_eq_pow2(&c, -240));
    let (re, _) = root.to_f64();
    assert!(re > 0.0);
}

#[test]
fn scalar_rendering_is_canonical() {
    assert_eq!(s(3).to_string(), "3");
    let half = Scalar::Exact(GaussianRational::from_ratio(1, 2));
    assert_eq!(half.to_string(), "1/2");
    let mixed = Scalar::Exact(GaussianRational::from_parts(1, 2, -3, 4));
    assert_eq!(mixed.to_string(), "1/2-3/4*I");
    let m = mono(2, 0, 0, 1, 1);
    assert_eq!(m.to_string(), "z1^2*zb2*u");
}

// ---------------------------------------------------------------------------
// Property tests
// ---------------------------------------------------------------------------

fn arb_scalar() -> impl Strategy<Value = Scalar> {
    (-6i64..7, 1i64..5, -6i64..7, 1i64..5).prop_map(|(a, b, c, d)| {
        Scalar::Exact(GaussianRational::from_parts(a, b, c, d))
    })
}

fn arb_poly() -> impl Strategy<Value = Poly> {
    let term = (0u32..3, 0u32..3, 0u32..3, 0u32..3, 0u32..3, arb_scalar());
    proptest::collection::vec(term, 0..6).prop_map(|terms| {
        let mut p = Poly::zero(EXACT, 6);
        for (a, b, c, d, e, coeff) in terms {
            p.add_term(Monomial::new(a, b, c, d, e), coeff);
        }
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ring_axioms(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
        // associativity of mul
        let ab_c = a.mul(&b).unwrap().mul(&c).unwrap();
        let a_bc = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(&ab_c, &a_bc);
        // distributivity
        let lhs = a.mul(&b.add(&c).unwrap()).unwrap();
        let rhs = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(&lhs, &rhs);
        // commutativity of add
        prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
    }

    #[test]
    fn conjugation_involution(a in arb_poly()) {
        prop_assert_eq!(a.conjugate().conjugate(), a);
    }

    #[test]
    fn backends_agree(a in arb_scalar(), b in arb_scalar()) {
        let f = Backend::Float(256);
        let fa = Scalar::from_exact(a.as_exact().unwrap(), f);
        let fb = Scalar::from_exact(b.as_exact().unwrap(), f);
        let exact = a.try_mul(&b).unwrap().try_add(&a).unwrap();
        let float = fa.try_mul(&fb).unwrap().try_add(&fa).unwrap();
        let embedded = Scalar::from_exact(exact.as_exact().unwrap(), f);
        prop_assert!(float.approx_eq_pow2(&embedded, -(256 - 16)));
    }

    #[test]
    fn solve_linear_residual_is_zero(
        rows in proptest::collection::vec(
            (proptest::collection::vec((0usize..4, arb_scalar()), 1..4), arb_scalar()),
            1..4,
        )
    ) {
        let eqs: Vec<LinearEquation> = rows
            .into_iter()
            .map(|(coeffs, rhs)| LinearEquation { coeffs, rhs })
            .collect();
        if let Ok(sol) = solve_linear(&eqs, 4, EXACT) {
            for eq in &eqs {
                let mut acc = Scalar::zero(EXACT);
                for (j, c) in &eq.coeffs {
                    acc = acc.try_add(&c.try_mul(&sol.particular[*j]).unwrap()).unwrap();
                }
                prop_assert_eq!(acc, eq.rhs.clone());
                // every nullspace vector annihilates the homogeneous part
                for v in &sol.nullspace {
                    let mut h = Scalar::zero(EXACT);
                    for (j, c) in &eq.coeffs {
                        h = h.try_add(&c.try_mul(&v[*j]).unwrap()).unwrap();
                    }
                    prop_assert!(h.is_zero());
                }
            }
        }
    }
}
