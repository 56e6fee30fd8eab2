//! Oracle and property tests for jet parsing, Levi diagnostics, and the
//! cubic pencil classification.

use crnf_core::jets::{parse_defining_function, JetError, JetSeries, PencilClass};
use crnf_core::scalar::GaussianRational;
use crnf_core::{Backend, Monomial, Poly, Scalar, Var};
use proptest::prelude::*;

const EXACT: Backend = Backend::Exact;

fn s(n: i64) -> Scalar {
    Scalar::from_int(n, EXACT)
}

fn series(text: &str, order: u32) -> JetSeries {
    JetSeries::from_text(text, EXACT, order).expect("valid series")
}

/// The five cubic model defining functions, by branch tag.
fn model_text(tag: &str) -> String {
    match tag {
        "A.ii.1" => {
            // r = 2
            "z1*z2*zb1 + z1*zb1*zb2 + 2*(z1^2*zb2 + z2*zb1^2)".to_string()
        }
        "A.ii.2" => "z1*z2*zb1 + z1*zb1*zb2 + z1^2*zb2 + z2*zb1^2 + I*(z1^2*zb1 - z1*zb1^2)"
            .to_string(),
        "A.ii.3" => {
            // lambda = 1
            "z1*z2*zb1 + z1*zb1*zb2 + z2^2*zb1 + z1*zb2^2 + z2^2*zb2 + z2*zb2^2".to_string()
        }
        "A.ii.4" => {
            // sigma = 1, nu = 2 (sigma*nu != 1)
            "z1^2*zb1 + z1*zb1^2 + z2^2*zb2 + z2*zb2^2 + z1^2*zb2 + z2*zb1^2 + 2*(z2^2*zb1 + z1*zb2^2)"
                .to_string()
        }
        "A.ii.5" => {
            // eta = 1
            "z1^2*zb1 + z1*zb1^2 + z1^2*zb2 + z2*zb1^2 + z2^2*zb1 + z1*zb2^2".to_string()
        }
        other => panic!("unknown tag {other}"),
    }
}

#[test]
fn parser_round_trips_and_positions() {
    let p = parse_defining_function("z1*z2*zb1 + z1*zb1*zb2", EXACT, 6).unwrap();
    assert_eq!(p.coeff(&Monomial::new(1, 1, 1, 0, 0)), s(1));
    assert_eq!(p.coeff(&Monomial::new(1, 0, 1, 1, 0)), s(1));

    // conj() alias
    let q = parse_defining_function("conj(z1)*z1", EXACT, 6).unwrap();
    assert_eq!(q.coeff(&Monomial::new(1, 0, 1, 0, 0)), s(1));

    // complex rational coefficients
    let r = parse_defining_function("(1/2+3/4*I)*z1*zb2 + (1/2-3/4*I)*z2*zb1", EXACT, 6).unwrap();
    let c = r.coeff(&Monomial::new(1, 0, 0, 1, 0));
    assert_eq!(c, Scalar::Exact(GaussianRational::from_parts(1, 2, 3, 4)));

    // error positions
    match parse_defining_function("z1 +\n z3", EXACT, 6) {
        Err(JetError::Parse { line, col, .. }) => {
            assert_eq!(line, 2);
            assert_eq!(col, 2);
        }
        other => panic!("expected parse error, got {other:?}"),
    }
    match parse_defining_function("z1 * * z2", EXACT, 6) {
        Err(JetError::Parse { line: 1, col: 6, .. }) => {}
        other => panic!("expected parse error at col 6, got {other:?}"),
    }
}

#[test]
fn construction_enforces_reality_and_normal_coordinates() {
    // not real
    match JetSeries::from_text("I*z1*zb1", EXACT, 4) {
        Err(JetError::NotReal) => {}
        other => panic!("expected reality failure, got {other:?}"),
    }
    // real but not normal coordinates
    match JetSeries::from_text("z1^2 + zb1^2", EXACT, 4) {
        Err(JetError::NotNormalCoordinates(_)) => {}
        other => panic!("expected normal-coordinate failure, got {other:?}"),
    }
    // pure-u term also violates normal coordinates
    assert!(JetSeries::from_text("u^3", EXACT, 4).is_err());
    // order below 3 rejected
    match JetSeries::from_text("z1*zb1", EXACT, 2) {
        Err(JetError::OrderTooLow(2)) => {}
        other => panic!("expected order error, got {other:?}"),
    }
    // valid cases
    series("z1*zb1", 4);
    series("u*z1*zb1", 4);
}

#[test]
fn jet_coefficients_carry_factorials() {
    let s1 = series("z1*z2*zb1 + z1*zb1*zb2", 6);
    assert_eq!(s1.jet_coefficient(&Monomial::new(1, 1, 1, 0, 0)).unwrap(), s(1));

    let s2 = series("3*z1^2*zb2 + 3*z2*zb1^2", 6);
    assert_eq!(s2.jet_coefficient(&Monomial::new(2, 0, 0, 1, 0)).unwrap(), s(6));

    let s3 = series("z1*zb1", 6);
    assert_eq!(s3.jet_coefficient(&Monomial::new(2, 0, 0, 0, 0)).unwrap(), s(0));

    // exceeding the truncation order is an error
    assert!(s3.jet_coefficient(&Monomial::new(4, 2, 1, 0, 0)).is_err());
}

#[test]
fn levi_matrix_examples() {
    // v = z1 zb1: constant matrix [[1,0],[0,0]], rank 1
    let s1 = series("z1*zb1", 5);
    let levi = s1.levi().unwrap();
    assert_eq!(levi.rank_at_origin, 1);
    assert_eq!(levi.matrix[0][0].constant_term(), s(1));
    assert!(levi.matrix[0][1].constant_term().is_zero());
    assert!(levi.matrix[1][1].constant_term().is_zero());
    assert!(!levi.vanishes_identically);

    // cubic model: rank 0 at origin but Levi not identically flat
    let s2 = series(&model_text("A.ii.2"), 5);
    let levi2 = s2.levi().unwrap();
    assert_eq!(levi2.rank_at_origin, 0);
    assert!(!levi2.vanishes_identically);

    // v = 0: Levi flat
    let s3 = JetSeries::new(Poly::zero(EXACT, 5), 5).unwrap();
    let levi3 = s3.levi().unwrap();
    assert_eq!(levi3.rank_at_origin, 0);
    assert!(levi3.vanishes_identically);
}

#[test]
fn levi_matrix_is_hermitian_on_models() {
    for tag in ["A.ii.1", "A.ii.2", "A.ii.3", "A.ii.4", "A.ii.5"] {
        let m = series(&model_text(tag), 6);
        let levi = m.levi().unwrap();
        for j in 0..2 {
            for k in 0..2 {
                assert_eq!(
                    levi.matrix[j][k],
                    levi.matrix[k][j].conjugate(),
                    "Levi matrix not Hermitian for {tag}"
                );
            }
        }
    }
}

#[test]
fn nondegeneracy_oracle_values() {
    // v = z1²zb1 + z1zb1² + z2²zb2 + z2zb2²: only Δ13 = 2·2 = 4 nonzero
    let s1 = series("z1^2*zb1 + z1*zb1^2 + z2^2*zb2 + z2*zb2^2", 4);
    let nd1 = s1.nondegeneracy().unwrap();
    assert_eq!(nd1.delta13, s(4));
    assert!(nd1.delta12.is_zero() && nd1.delta23.is_zero());
    assert!(nd1.two_nondegenerate);
    assert_eq!(nd1.span_dimension, 2);

    // v = z1z2zb1 + z1zb1zb2 + 3(z1²zb2 + z2zb1²): Δ12 = 1·(2·3) = 6
    let s2 = series("z1*z2*zb1 + z1*zb1*zb2 + 3*(z1^2*zb2 + z2*zb1^2)", 4);
    let nd2 = s2.nondegeneracy().unwrap();
    assert_eq!(nd2.delta12, s(6));
    assert!(nd2.two_nondegenerate);

    // 3-jet zero: all deltas vanish
    let s3 = series("z1^2*zb1^2", 4);
    let nd3 = s3.nondegeneracy().unwrap();
    assert!(!nd3.two_nondegenerate);
    assert_eq!(nd3.span_dimension, 0);

    // precondition: rank must be zero at origin
    let s4 = series("z1*zb1", 4);
    assert!(matches!(s4.nondegeneracy(), Err(JetError::NotRankZero(1))));
}

#[test]
fn model_delta_patterns() {
    // (Δ12, Δ23, Δ13) per model; r = 2, λ = 1, σ = 1, ν = 2, η = 1.
    let expect: [(&str, [i64; 3]); 5] = [
        ("A.ii.1", [4, 0, 0]),   // 2r
        ("A.ii.2", [2, 0, 0]),
        ("A.ii.3", [0, -2, 0]),  // -2λ
        ("A.ii.4", [0, 0, -4]),  // 4 - 4σν
        ("A.ii.5", [0, 0, -4]),
    ];
    for (tag, [d12, d23, d13]) in expect {
        let m = series(&model_text(tag), 4);
        let nd = m.nondegeneracy().unwrap();
        assert_eq!(nd.delta12, s(d12), "{tag} delta12");
        assert_eq!(nd.delta23, s(d23), "{tag} delta23");
        assert_eq!(nd.delta13, s(d13), "{tag} delta13");
        assert!(nd.two_nondegenerate, "{tag} must be 2-nondegenerate");
    }
}

#[test]
fn pencil_classification_of_models() {
    let m1 = series(&model_text("A.ii.1"), 4); // r = 2
    match m1.cubic_pencil().unwrap().class {
        PencilClass::SkewDoubleRoot { r_squared, excluded_half_r, r_is_one, .. } => {
            assert_eq!(r_squared, s(4));
            assert!(!excluded_half_r);
            assert!(!r_is_one);
        }
        other => panic!("A.ii.1 pencil misclassified: {other:?}"),
    }

    let m2 = series(&model_text("A.ii.2"), 4);
    match m2.cubic_pencil().unwrap().class {
        PencilClass::SkewDoubleRoot { r_squared, r_is_one, .. } => {
            assert_eq!(r_squared, s(1));
            assert!(r_is_one);
        }
        other => panic!("A.ii.2 pencil misclassified: {other:?}"),
    }

    let m3 = series(&model_text("A.ii.3"), 4);
    assert!(matches!(
        m3.cubic_pencil().unwrap().class,
        PencilClass::AlignedDoubleRoot { .. }
    ));

    let m4 = series(&model_text("A.ii.4"), 4);
    match m4.cubic_pencil().unwrap().class {
        PencilClass::DistinctRoots { both_aligned, .. } => assert!(both_aligned),
        other => panic!("A.ii.4 pencil misclassified: {other:?}"),
    }

    let m5 = series(&model_text("A.ii.5"), 4);
    match m5.cubic_pencil().unwrap().class {
        PencilClass::DistinctRoots { both_aligned, .. } => assert!(!both_aligned),
        other => panic!("A.ii.5 pencil misclassified: {other:?}"),
    }
}

#[test]
fn admissibility_diagnostics() {
    // branch model passes every check
    let m3 = series(&model_text("A.ii.3"), 4);
    let rep = m3.is_admissible();
    assert!(rep.admissible, "{rep:?}");

    // Levi rank 1 at origin fails
    let s1 = series("z1*zb1", 4);
    let rep1 = s1.is_admissible();
    assert!(!rep1.rank_zero_at_origin && !rep1.admissible);

    // r = 1/2 scaling of the first model is the excluded configuration
    let half = series(
        "z1*z2*zb1 + z1*zb1*zb2 + (z1^2*zb2 + z2*zb1^2)/2",
        4,
    );
    let rep_half = half.is_admissible();
    assert!(rep_half.two_nondegenerate);
    assert!(rep_half.excluded_half_r);
    assert!(!rep_half.admissible);

    // Levi-flat fails the non-flatness check
    let flat = JetSeries::new(Poly::zero(EXACT, 4), 4).unwrap();
    let repf = flat.is_admissible();
    assert!(!repf.levi_nonflat && !repf.admissible);
}

#[test]
fn levi_at_origin_matches_second_order_jets() {
    // with u-dependence and higher terms, the constant term of the Levi
    // matrix still equals the plain second-order jet matrix
    let v = series("z1*zb1*u + z1*z2*zb1 + z1*zb1*zb2 + z1^2*zb1^2", 6);
    let levi = v.levi().unwrap();
    assert!(levi.matrix[0][0].constant_term().is_zero());
    assert_eq!(levi.rank_at_origin, 0);
    // entry (1,1) contains the u-linear term from v_{z1 zb1} = u + ...
    let u_coeff = levi.matrix[0][0].coeff(&Monomial::new(0, 0, 0, 0, 1));
    assert_eq!(u_coeff, s(1));
}

// ---------------------------------------------------------------------------
// Property tests
// ---------------------------------------------------------------------------

fn arb_coeff() -> impl Strategy<Value = Scalar> {
    (-4i64..5, -4i64..5).prop_map(|(a, b)| {
        Scalar::Exact(GaussianRational::from_parts(a, 1, b, 1))
    })
}

/// Random rank-zero cubic in normal coordinates: a (2,1)-part plus its
/// conjugate (1,2)-part.
fn arb_rank_zero_cubic() -> impl Strategy<Value = JetSeries> {
    proptest::collection::vec(arb_coeff(), 6).prop_map(|c| {
        let mut p = Poly::zero(EXACT, 4);
        let monos = [
            Monomial::new(2, 0, 1, 0, 0),
            Monomial::new(1, 1, 1, 0, 0),
            Monomial::new(0, 2, 1, 0, 0),
            Monomial::new(2, 0, 0, 1, 0),
            Monomial::new(1, 1, 0, 1, 0),
            Monomial::new(0, 2, 0, 1, 0),
        ];
        for (m, coeff) in monos.iter().zip(c) {
            p.add_term(*m, coeff.clone());
            p.add_term(m.conj(), coeff.conj());
        }
        JetSeries::new(p, 4).expect("real normal-coordinate cubic")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn levi_hermitian_and_rank_zero(sj in arb_rank_zero_cubic()) {
        let levi = sj.levi().unwrap();
        prop_assert_eq!(levi.rank_at_origin, 0);
        for j in 0..2 {
            for k in 0..2 {
                prop_assert_eq!(&levi.matrix[j][k], &levi.matrix[k][j].conjugate());
            }
        }
    }

    #[test]
    fn deltas_match_span_dimension(sj in arb_rank_zero_cubic()) {
        let nd = sj.nondegeneracy().unwrap();
        let all_zero = nd.delta12.is_zero() && nd.delta23.is_zero() && nd.delta13.is_zero();
        prop_assert_eq!(all_zero, nd.span_dimension <= 1);
        prop_assert_eq!(nd.two_nondegenerate, nd.span_dimension == 2);
    }

    #[test]
    fn jet_coefficient_recovers_construction(sj in arb_rank_zero_cubic()) {
        // v_J = J! coeff, so dividing back recovers the raw coefficient
        let m = Monomial::new(2, 0, 1, 0, 0);
        let vj = sj.jet_coefficient(&m).unwrap();
        let back = vj.try_div(&s(2)).unwrap();
        prop_assert_eq!(back, sj.poly().coeff(&m));
    }
}
