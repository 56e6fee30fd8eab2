//! Truncated action of origin-preserving biholomorphisms of C³ on
//! hypersurface jets: the oracle arm that validates every symbolic
//! normalization step.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::error::AlgebraError;
use crate::jets::{check_normal_coordinates, parse_holomorphic_component, JetError, JetSeries};
use crate::linsolve::{solve_linear, LinearEquation};
use crate::poly::{Monomial, Poly, Var};
use crate::scalar::{Backend, GaussianRational, Scalar};

/// Errors raised by map construction and application.
#[derive(Debug, Error)]
pub enum TransformError {
    #[error("map is not origin-preserving: component has a constant term")]
    NotOriginPreserving,
    #[error("linear part of the map is singular")]
    SingularLinearPart,
    #[error("induced change of real variables is singular at the origin")]
    GraphDegenerate,
    #[error("normal-coordinates completion did not converge")]
    CompletionFailed,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// A truncated origin-preserving holomorphic map (Z1, Z2, W) of C³, each
/// component a polynomial in (z1, z2, w). The complex variable w is stored on
/// the `u` slot of [`Poly`]; the barred slots are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct HoloMapJet {
    z1: Poly,
    z2: Poly,
    w: Poly,
    order: u32,
}

const W: Var = Var::U;

fn linear_coeff(p: &Poly, v: Var) -> Scalar {
    p.coeff(&Monomial::var(v))
}

impl HoloMapJet {
    /// Validates origin preservation and invertibility of the linear part.
    pub fn new(z1: Poly, z2: Poly, w: Poly, order: u32) -> Result<Self, TransformError> {
        let backend = z1.backend();
        for c in [&z1, &z2, &w] {
            if !c.constant_term().is_effectively_zero() {
                return Err(TransformError::NotOriginPreserving);
            }
            if c.iter().any(|(m, _)| m.exponent(Var::Zb1) + m.exponent(Var::Zb2) > 0) {
                return Err(TransformError::NotOriginPreserving);
            }
        }
        let map = HoloMapJet {
            z1: z1.truncate(order).with_truncation(order),
            z2: z2.truncate(order).with_truncation(order),
            w: w.truncate(order).with_truncation(order),
            order,
        };
        if det3(&map.linear_part(), backend)?.is_effectively_zero() {
            return Err(TransformError::SingularLinearPart);
        }
        Ok(map)
    }

    pub fn identity(backend: Backend, order: u32) -> Self {
        HoloMapJet {
            z1: Poly::var(Var::Z1, backend, order),
            z2: Poly::var(Var::Z2, backend, order),
            w: Poly::var(W, backend, order),
            order,
        }
    }

    /// Parses three component strings in the grammar `z1, z2, w`.
    pub fn from_text(
        z1: &str,
        z2: &str,
        w: &str,
        backend: Backend,
        order: u32,
    ) -> Result<Self, TransformError> {
        Ok(HoloMapJet::new(
            parse_holomorphic_component(z1, backend, order)?,
            parse_holomorphic_component(z2, backend, order)?,
            parse_holomorphic_component(w, backend, order)?,
            order,
        )?)
    }

    pub fn components(&self) -> (&Poly, &Poly, &Poly) {
        (&self.z1, &self.z2, &self.w)
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn backend(&self) -> Backend {
        self.z1.backend()
    }

    /// Renders the three components with `w` spelled out.
    pub fn to_text(&self) -> [String; 3] {
        let render = |p: &Poly| p.to_string().replace('u', "w");
        [render(&self.z1), render(&self.z2), render(&self.w)]
    }

    /// 3×3 matrix of linear coefficients over (z1, z2, w).
    pub fn linear_part(&self) -> [[Scalar; 3]; 3] {
        let vars = [Var::Z1, Var::Z2, W];
        let comps = [&self.z1, &self.z2, &self.w];
        std::array::from_fn(|i| std::array::from_fn(|j| linear_coeff(comps[i], vars[j])))
    }

    /// Whether the map preserves tangency of the graph: W's linear part is a
    /// real multiple of w with no z-components.
    pub fn is_tangency_admissible(&self) -> bool {
        linear_coeff(&self.w, Var::Z1).is_effectively_zero()
            && linear_coeff(&self.w, Var::Z2).is_effectively_zero()
            && linear_coeff(&self.w, W).is_real()
            && !linear_coeff(&self.w, W).is_effectively_zero()
    }

    /// Truncated composition self ∘ g (apply g first).
    pub fn compose(&self, g: &HoloMapJet) -> Result<HoloMapJet, TransformError> {
        let mut bind = BTreeMap::new();
        bind.insert(Var::Z1, g.z1.clone());
        bind.insert(Var::Z2, g.z2.clone());
        bind.insert(W, g.w.clone());
        HoloMapJet::new(
            self.z1.substitute(&bind)?,
            self.z2.substitute(&bind)?,
            self.w.substitute(&bind)?,
            self.order.min(g.order),
        )
    }

    /// Truncated compositional inverse, by fixed-point reversion.
    pub fn invert(&self) -> Result<HoloMapJet, TransformError> {
        let phi = [self.z1.clone(), self.z2.clone(), self.w.clone()];
        let psi = revert_fixed_point(&phi, &[Var::Z1, Var::Z2, W], self.backend(), self.order)
            .map_err(|e| match e {
                TransformError::GraphDegenerate => TransformError::SingularLinearPart,
                other => other,
            })?;
        HoloMapJet::new(psi[0].clone(), psi[1].clone(), psi[2].clone(), self.order)
    }
}

/// Degree-graded fixed-point reversion: after stage k the candidate inverse
/// is exact to degree k, and all arithmetic in stage k is truncated at k.
fn revert_fixed_point(
    phi: &[Poly],
    vars: &[Var],
    backend: Backend,
    n: u32,
) -> Result<Vec<Poly>, TransformError> {
    let d = phi.len();
    let lin: Vec<Vec<Scalar>> = (0..d)
        .map(|i| vars.iter().map(|&v| linear_coeff(&phi[i], v)).collect())
        .collect();
    let linv = invert_matrix(&lin, backend)?;
    let ys: Vec<Poly> = vars.iter().map(|&v| Poly::var(v, backend, n)).collect();
    // higher-order parts h_i = phi_i - linear_i
    let mut higher = Vec::new();
    for (i, c) in phi.iter().enumerate() {
        let mut lin_poly = Poly::zero(backend, n);
        for (j, &v) in vars.iter().enumerate() {
            lin_poly = lin_poly.add(&Poly::var(v, backend, n).scale(&lin[i][j])?)?;
        }
        higher.push(c.sub(&lin_poly)?);
    }
    // stage 1: psi = L⁻¹ y
    let mut psi: Vec<Poly> = (0..d)
        .map(|i| {
            let mut acc = Poly::zero(backend, n);
            for j in 0..d {
                acc = acc.add(&ys[j].scale(&linv[i][j])?)?;
            }
            Ok::<_, TransformError>(acc)
        })
        .collect::<Result<_, _>>()?;
    // stage k: psi ← L⁻¹(y − h(psi)), exact to degree k
    for k in 2..=n {
        let mut bind = BTreeMap::new();
        for (j, &v) in vars.iter().enumerate() {
            bind.insert(v, psi[j].truncate(k).with_truncation(k));
        }
        let hk: Vec<Poly> = higher
            .iter()
            .map(|h| h.truncate(k).with_truncation(k))
            .collect();
        let subbed = Poly::substitute_many(&hk.iter().collect::<Vec<_>>(), &bind)?;
        let mut next = Vec::new();
        for i in 0..d {
            let mut acc = Poly::zero(backend, k);
            for j in 0..d {
                let corrected = ys[j].truncate(k).with_truncation(k).sub(&subbed[j])?;
                acc = acc.add(&corrected.scale(&linv[i][j])?)?;
            }
            next.push(acc);
        }
        psi = next;
    }
    Ok(psi.into_iter().map(|p| p.with_truncation(n)).collect())
}

fn det3(m: &[[Scalar; 3]; 3], backend: Backend) -> Result<Scalar, AlgebraError> {
    let mut det = Scalar::zero(backend);
    let perms: [([usize; 3], i64); 6] = [
        ([0, 1, 2], 1),
        ([1, 2, 0], 1),
        ([2, 0, 1], 1),
        ([0, 2, 1], -1),
        ([2, 1, 0], -1),
        ([1, 0, 2], -1),
    ];
    for (p, sign) in perms {
        let term = m[0][p[0]]
            .try_mul(&m[1][p[1]])?
            .try_mul(&m[2][p[2]])?
            .try_mul(&Scalar::from_int(sign, backend))?;
        det = det.try_add(&term)?;
    }
    Ok(det)
}

/// Inverts a small square matrix of scalars via repeated linear solves.
fn invert_matrix(
    m: &[Vec<Scalar>],
    backend: Backend,
) -> Result<Vec<Vec<Scalar>>, TransformError> {
    let n = m.len();
    let mut cols: Vec<Vec<Scalar>> = Vec::new();
    for k in 0..n {
        let eqs: Vec<LinearEquation> = (0..n)
            .map(|i| LinearEquation {
                coeffs: (0..n).map(|j| (j, m[i][j].clone())).collect(),
                rhs: if i == k {
                    Scalar::one(backend)
                } else {
                    Scalar::zero(backend)
                },
            })
            .collect();
        let sol = solve_linear(&eqs, n, backend).map_err(|e| match e {
            AlgebraError::Infeasible => TransformError::GraphDegenerate,
            other => TransformError::Algebra(other),
        })?;
        if !sol.nullspace.is_empty() {
            return Err(TransformError::GraphDegenerate);
        }
        cols.push(sol.particular);
    }
    Ok((0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect())
}

/// Result of applying a map to a jet: the honest transformed defining
/// function, with flags instead of silent repair when the map leaves the
/// normal-coordinates class.
#[derive(Debug, Clone)]
pub struct TransformedSeries {
    pub poly: Poly,
    pub order: u32,
    /// True when the result still satisfies v'(z,0,u) = v'(0,z̄,u) = 0.
    pub normal_coordinates: bool,
    /// True when the image graph is tangent to Im W = 0 at the origin
    /// (no constant or first-order terms in the result).
    pub graph_tangent: bool,
}

impl TransformedSeries {
    /// Converts into a validated [`JetSeries`]; fails when the flags are
    /// down.
    pub fn jet_series(&self) -> Result<JetSeries, JetError> {
        JetSeries::new(self.poly.clone(), self.order)
    }
}

/// Applies the map to the graph v = v(z, z̄, u): substitutes w = u + i v,
/// expands Im W = v'(Z, Z̄, Re W), and reverts the induced real variable
/// change by truncated fixed-point iteration.
pub fn apply(map: &HoloMapJet, s: &JetSeries) -> Result<TransformedSeries, TransformError> {
    apply_poly(map, s.poly(), s.order().min(map.order()))
}

/// Raw form of [`apply`] acting on any real defining series, without the
/// admissibility validation of [`JetSeries`]; used for oracle chaining where
/// intermediate images may leave normal coordinates.
pub fn apply_poly(map: &HoloMapJet, vin: &Poly, n: u32) -> Result<TransformedSeries, TransformError> {
    let backend = vin.backend();
    let v = vin.truncate(n).with_truncation(n);

    // w = u + i v(z, z̄, u)
    let u = Poly::var(Var::U, backend, n);
    let wofz = u.add(&v.scale(&Scalar::i(backend))?)?;

    // Substitute into the three holomorphic components.
    let mut bind = BTreeMap::new();
    bind.insert(Var::Z1, Poly::var(Var::Z1, backend, n));
    bind.insert(Var::Z2, Poly::var(Var::Z2, backend, n));
    bind.insert(W, wofz);
    let (mz1, mz2, mw) = map.components();
    let comps: Vec<Poly> = [mz1, mz2, mw]
        .iter()
        .map(|c| c.truncate(n).with_truncation(n))
        .collect();
    let mut subbed = Poly::substitute_many(&comps.iter().collect::<Vec<_>>(), &bind)?;
    let big_w = subbed.pop().expect("three components");
    let big_z2 = subbed.pop().expect("three components");
    let big_z1 = subbed.pop().expect("three components");

    let big_zb1 = big_z1.conjugate();
    let big_zb2 = big_z2.conjugate();
    let two = Scalar::from_int(2, backend);
    let two_i = Scalar::i(backend).try_mul(&two)?;
    let big_u = big_w.add(&big_w.conjugate())?.scale(&two.inv()?)?;
    let big_v = big_w.sub(&big_w.conjugate())?.scale(&two_i.inv()?)?;

    // Revert the real change (z1, z2, zb1, zb2, u) -> (Z1, Z2, Z̄1, Z̄2, U).
    let phi = [big_z1, big_z2, big_zb1, big_zb2, big_u];
    let psi = revert_fixed_point(&phi, &Var::ALL, backend, n)?;
    let mut back = BTreeMap::new();
    for (j, v) in Var::ALL.iter().enumerate() {
        back.insert(*v, psi[j].clone());
    }
    let vprime = big_v.substitute(&back)?;

    let constant_or_linear = vprime
        .iter()
        .any(|(m, c)| m.degree() <= 1 && !c.is_effectively_zero());
    Ok(TransformedSeries {
        normal_coordinates: check_normal_coordinates(&vprime) && !constant_or_linear,
        graph_tangent: !constant_or_linear,
        poly: vprime,
        order: n,
    })
}

/// Corrects the W-component of a tangency-admissible map so that the image
/// of the given jet returns to normal coordinates. The correction is the
/// unique triangular holomorphic series g(Z1, Z2, W) = O(2) cancelling the
/// pure-holomorphic (and, by reality, pure-antiholomorphic) part of the
/// transformed defining function.
pub fn restore_normal_coordinates(
    map: &HoloMapJet,
    s: &JetSeries,
) -> Result<HoloMapJet, TransformError> {
    let backend = s.backend();
    let n = s.order().min(map.order());
    let mut current = map.clone();
    for _ in 0..=n {
        let image = apply_poly(&current, s.poly(), n)?;
        // Pure-holomorphic part B(Z, U) of the image, split into mixed and
        // pure-U pieces.
        let mut b_mixed = Poly::zero(backend, n);
        let mut b_pure_u = Poly::zero(backend, n);
        for (m, c) in image.poly.iter() {
            if m.exponent(Var::Zb1) + m.exponent(Var::Zb2) > 0 {
                continue;
            }
            if c.is_effectively_zero() {
                continue;
            }
            if m.exponent(Var::Z1) + m.exponent(Var::Z2) > 0 {
                b_mixed.add_term(m.clone(), c.clone());
            } else {
                b_pure_u.add_term(m.clone(), c.clone());
            }
        }
        if b_mixed.iter().all(|(_, c)| c.is_effectively_zero())
            && b_pure_u.iter().all(|(_, c)| c.is_effectively_zero())
        {
            return Ok(current);
        }
        // g = 2i·B_mixed + i·B_pure_u satisfies Im g(Z, U)|_{Z̄=0} = B.
        let i = Scalar::i(backend);
        let g = b_mixed
            .scale(&i.try_mul(&Scalar::from_int(2, backend))?)?
            .add(&b_pure_u.scale(&i)?)?;
        let corr = HoloMapJet::new(
            Poly::var(Var::Z1, backend, n),
            Poly::var(Var::Z2, backend, n),
            Poly::var(W, backend, n).sub(&g)?,
            n,
        )?;
        current = corr.compose(&current)?;
    }
    Err(TransformError::CompletionFailed)
}

/// Deterministic pseudo-random tangency-admissible map with rational
/// coefficients of bounded height. The linear part is guaranteed invertible.
pub fn random_map(seed: u64, backend: Backend, order: u32, magnitude: i64) -> HoloMapJet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mag = magnitude.max(1);
    let rat = |rng: &mut ChaCha8Rng| -> Scalar {
        let num = rng.gen_range(-mag..=mag);
        let den = rng.gen_range(1..=mag.min(4));
        let imn = rng.gen_range(-mag..=mag);
        Scalar::from_exact(&GaussianRational::from_parts(num, den, imn, den), backend)
    };

    loop {
        let mut z1 = Poly::zero(backend, order);
        let mut z2 = Poly::zero(backend, order);
        let mut w = Poly::zero(backend, order);

        // Invertible 2×2 linear z-part.
        let a: [[Scalar; 2]; 2] = std::array::from_fn(|_| std::array::from_fn(|_| rat(&mut rng)));
        // Real positive w-scaling (tangency admissibility).
        let rho = Scalar::from_exact(
            &GaussianRational::from_ratio(rng.gen_range(1..=mag), rng.gen_range(1..=mag.min(4))),
            backend,
        );
        z1.add_term(Monomial::var(Var::Z1), a[0][0].clone());
        z1.add_term(Monomial::var(Var::Z2), a[0][1].clone());
        z2.add_term(Monomial::var(Var::Z1), a[1][0].clone());
        z2.add_term(Monomial::var(Var::Z2), a[1][1].clone());
        // w-linear terms of Z_j are allowed by tangency.
        z1.add_term(Monomial::var(W), rat(&mut rng));
        z2.add_term(Monomial::var(W), rat(&mut rng));
        w.add_term(Monomial::var(W), rho);

        // Sparse random higher-order terms in (z1, z2, w).
        let n_terms = rng.gen_range(2..=6);
        for _ in 0..n_terms {
            let target = rng.gen_range(0..3);
            let deg = rng.gen_range(2..=order.max(2));
            let e1 = rng.gen_range(0..=deg);
            let e2 = rng.gen_range(0..=(deg - e1));
            let ew = deg - e1 - e2;
            let m = Monomial::new(e1, e2, 0, 0, ew);
            let c = rat(&mut rng);
            match target {
                0 => z1.add_term(m, c),
                1 => z2.add_term(m, c),
                _ => w.add_term(m, c),
            }
        }

        match HoloMapJet::new(z1, z2, w, order) {
            Ok(map) => return map,
            Err(_) => continue,
        }
    }
}
