//! Truncated multivariate polynomial/series arithmetic over the fixed
//! variable tuple (z1, z2, zb1, zb2, u).
//!
//! Monomials are ordered graded-lexicographically, which fixes a canonical
//! term order for printing and for test comparisons. All products are
//! truncated to the owning series' truncation order.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::One;

use crate::error::AlgebraError;
use crate::scalar::{Backend, Scalar};

/// The five real-analytic series variables, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Z1,
    Z2,
    Zb1,
    Zb2,
    U,
}

impl Var {
    pub const ALL: [Var; 5] = [Var::Z1, Var::Z2, Var::Zb1, Var::Zb2, Var::U];

    pub fn index(self) -> usize {
        match self {
            Var::Z1 => 0,
            Var::Z2 => 1,
            Var::Zb1 => 2,
            Var::Zb2 => 3,
            Var::U => 4,
        }
    }

    pub fn from_index(i: usize) -> Var {
        Var::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::Z1 => "z1",
            Var::Z2 => "z2",
            Var::Zb1 => "zb1",
            Var::Zb2 => "zb2",
            Var::U => "u",
        }
    }

    /// Conjugate variable: swaps z_j with zb_j, fixes u.
    pub fn conj(self) -> Var {
        match self {
            Var::Z1 => Var::Zb1,
            Var::Z2 => Var::Zb2,
            Var::Zb1 => Var::Z1,
            Var::Zb2 => Var::Z2,
            Var::U => Var::U,
        }
    }
}

/// Exponent 5-tuple over (z1, z2, zb1, zb2, u) with graded-lex ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Monomial(pub [u32; 5]);

impl Monomial {
    pub const ONE: Monomial = Monomial([0; 5]);

    pub fn new(z1: u32, z2: u32, zb1: u32, zb2: u32, u: u32) -> Self {
        Monomial([z1, z2, zb1, zb2, u])
    }

    pub fn var(v: Var) -> Self {
        let mut e = [0; 5];
        e[v.index()] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.0[v.index()]
    }

    pub fn mul(&self, o: &Monomial) -> Monomial {
        let mut e = [0; 5];
        for i in 0..5 {
            e[i] = self.0[i] + o.0[i];
        }
        Monomial(e)
    }

    /// Conjugate monomial: z-exponents swapped with zb-exponents.
    pub fn conj(&self) -> Monomial {
        let [a, b, c, d, u] = self.0;
        Monomial([c, d, a, b, u])
    }

    /// Multi-index factorial J! = prod of component factorials.
    pub fn factorial(&self) -> BigInt {
        let mut acc = BigInt::one();
        for &e in &self.0 {
            for k in 2..=e {
                acc *= BigInt::from(k);
            }
        }
        acc
    }

    /// True if only z1, z2, u appear (no conjugated variables).
    pub fn is_unbarred(&self) -> bool {
        self.0[2] == 0 && self.0[3] == 0
    }

    /// True if only zb1, zb2, u appear.
    pub fn is_barred(&self) -> bool {
        self.0[0] == 0 && self.0[1] == 0
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree() == 0 {
            return write!(f, "1");
        }
        let mut first = true;
        for v in Var::ALL {
            let e = self.exponent(v);
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{}", v.name())?;
            } else {
                write!(f, "{}^{}", v.name(), e)?;
            }
        }
        Ok(())
    }
}

/// A truncated polynomial: sparse terms plus a truncation order.
///
/// Invariants: no stored zero coefficient; every stored monomial has total
/// degree <= `trunc`; all coefficients share `backend`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    backend: Backend,
    trunc: u32,
    terms: BTreeMap<Monomial, Scalar>,
}

impl Poly {
    pub fn zero(backend: Backend, trunc: u32) -> Self {
        Poly { backend, trunc, terms: BTreeMap::new() }
    }

    pub fn constant(c: Scalar, trunc: u32) -> Self {
        let mut p = Poly::zero(c.backend(), trunc);
        p.add_term(Monomial::ONE, c);
        p
    }

    pub fn var(v: Var, backend: Backend, trunc: u32) -> Self {
        let mut p = Poly::zero(backend, trunc);
        p.add_term(Monomial::var(v), Scalar::one(backend));
        p
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn truncation_order(&self) -> u32 {
        self.trunc
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    /// Coefficient of a monomial (zero scalar if absent).
    pub fn coeff(&self, m: &Monomial) -> Scalar {
        self.terms
            .get(m)
            .cloned()
            .unwrap_or_else(|| Scalar::zero(self.backend))
    }

    pub fn constant_term(&self) -> Scalar {
        self.coeff(&Monomial::ONE)
    }

    /// Accumulate a term, dropping zeros and over-truncation monomials.
    ///
    /// Panics on backend mismatch: term accumulation is an internal
    /// operation; public entry points check backends first.
    pub fn add_term(&mut self, m: Monomial, c: Scalar) {
        if m.degree() > self.trunc || c.is_zero() {
            return;
        }
        debug_assert_eq!(c.backend(), self.backend, "internal backend mixing");
        match self.terms.remove(&m) {
            None => {
                self.terms.insert(m, c);
            }
            Some(old) => {
                let s = old.try_add(&c).expect("checked backend");
                if !s.is_zero() {
                    self.terms.insert(m, s);
                }
            }
        }
    }

    fn check_backend(&self, o: &Poly) -> Result<(), AlgebraError> {
        if self.backend != o.backend {
            return Err(AlgebraError::BackendMismatch(
                self.backend.to_string(),
                o.backend.to_string(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, o: &Poly) -> Result<Poly, AlgebraError> {
        self.check_backend(o)?;
        let mut out = Poly::zero(self.backend, self.trunc.min(o.trunc));
        for (m, c) in &self.terms {
            out.add_term(*m, c.clone());
        }
        for (m, c) in &o.terms {
            out.add_term(*m, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, o: &Poly) -> Result<Poly, AlgebraError> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Poly {
        let mut out = Poly::zero(self.backend, self.trunc);
        for (m, c) in &self.terms {
            out.add_term(*m, c.neg());
        }
        out
    }

    pub fn mul(&self, o: &Poly) -> Result<Poly, AlgebraError> {
        self.check_backend(o)?;
        let trunc = self.trunc.min(o.trunc);
        let mut out = Poly::zero(self.backend, trunc);
        for (ma, ca) in &self.terms {
            if ma.degree() > trunc {
                continue;
            }
            for (mb, cb) in &o.terms {
                if ma.degree() + mb.degree() > trunc {
                    continue;
                }
                out.add_term(ma.mul(mb), ca.try_mul(cb)?);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Scalar) -> Result<Poly, AlgebraError> {
        if c.backend() != self.backend {
            return Err(AlgebraError::BackendMismatch(
                self.backend.to_string(),
                c.backend().to_string(),
            ));
        }
        let mut out = Poly::zero(self.backend, self.trunc);
        for (m, a) in &self.terms {
            out.add_term(*m, a.try_mul(c)?);
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Result<Poly, AlgebraError> {
        let mut acc = Poly::constant(Scalar::one(self.backend), self.trunc);
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Conjugation: swaps z_j with zb_j exponents and conjugates coefficients.
    pub fn conjugate(&self) -> Poly {
        let mut out = Poly::zero(self.backend, self.trunc);
        for (m, c) in &self.terms {
            out.add_term(m.conj(), c.conj());
        }
        out
    }

    /// Simultaneous substitution of variables. Every variable that actually
    /// appears in `self` must be bound.
    pub fn substitute(&self, bindings: &BTreeMap<Var, Poly>) -> Result<Poly, AlgebraError> {
        for (v, b) in bindings {
            let _ = v;
            self.check_backend(b)?;
        }
        let trunc = bindings
            .values()
            .map(|p| p.trunc)
            .fold(self.trunc, |a, b| a.min(b));
        let mut out = Poly::zero(self.backend, trunc);
        // Cache powers of each binding.
        let mut powers: BTreeMap<(Var, u32), Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut term = Poly::constant(c.clone(), trunc);
            for v in Var::ALL {
                let e = m.exponent(v);
                if e == 0 {
                    continue;
                }
                let b = bindings
                    .get(&v)
                    .ok_or_else(|| AlgebraError::UnboundVariable(v.name().into()))?;
                let pw = match powers.get(&(v, e)) {
                    Some(p) => p.clone(),
                    None => {
                        // build up from the largest cached lower power
                        let mut k = e - 1;
                        while k > 1 && !powers.contains_key(&(v, k)) {
                            k -= 1;
                        }
                        let mut p = if k > 1 {
                            powers[&(v, k)].clone()
                        } else {
                            k = 1;
                            b.clone()
                        };
                        for j in k + 1..=e {
                            p = p.mul(b)?;
                            powers.insert((v, j), p.clone());
                        }
                        p
                    }
                };
                term = term.mul(&pw)?;
                if term.is_zero() {
                    break;
                }
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Simultaneous substitution into several polynomials with the same
    /// bindings, sharing one monomial-product cache. Substantially cheaper
    /// than repeated [`Poly::substitute`] on dense inputs.
    pub fn substitute_many(
        polys: &[&Poly],
        bindings: &BTreeMap<Var, Poly>,
    ) -> Result<Vec<Poly>, AlgebraError> {
        let Some(first) = polys.first() else {
            return Ok(Vec::new());
        };
        let backend = first.backend;
        for p in polys {
            p.check_backend(first)?;
        }
        for b in bindings.values() {
            b.check_backend(first)?;
        }
        let trunc = bindings
            .values()
            .map(|p| p.trunc)
            .fold(polys.iter().map(|p| p.trunc).min().unwrap(), |a, b| a.min(b));
        let mut memo: BTreeMap<Monomial, Poly> = BTreeMap::new();

        fn eval(
            m: &Monomial,
            bindings: &BTreeMap<Var, Poly>,
            memo: &mut BTreeMap<Monomial, Poly>,
            backend: Backend,
            trunc: u32,
        ) -> Result<Poly, AlgebraError> {
            if m.degree() == 0 {
                return Ok(Poly::constant(Scalar::one(backend), trunc));
            }
            if let Some(p) = memo.get(m) {
                return Ok(p.clone());
            }
            let v = Var::ALL
                .iter()
                .rev()
                .find(|v| m.exponent(**v) > 0)
                .copied()
                .expect("positive degree");
            let b = bindings
                .get(&v)
                .ok_or_else(|| AlgebraError::UnboundVariable(v.name().into()))?;
            let mut parent = *m;
            parent.0[v.index()] -= 1;
            let p = eval(&parent, bindings, memo, backend, trunc)?.mul(b)?;
            memo.insert(*m, p.clone());
            Ok(p)
        }

        let mut out = Vec::new();
        for p in polys {
            let mut acc = Poly::zero(backend, trunc);
            for (m, c) in &p.terms {
                if m.degree() > trunc {
                    continue;
                }
                let prod = eval(m, bindings, &mut memo, backend, trunc)?;
                for (mm, cc) in &prod.terms {
                    acc.add_term(*mm, cc.try_mul(c)?);
                }
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Partial derivative with respect to one variable.
    pub fn derivative(&self, v: Var) -> Poly {
        let mut out = Poly::zero(self.backend, self.trunc);
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e == 0 {
                continue;
            }
            let mut em = *m;
            em.0[v.index()] -= 1;
            let factor = Scalar::from_int(e as i64, self.backend);
            out.add_term(em, c.try_mul(&factor).expect("same backend"));
        }
        out
    }

    /// Series inverse of a unit (nonzero constant term), to truncation order.
    pub fn invert(&self) -> Result<Poly, AlgebraError> {
        let c = self.constant_term();
        if c.is_zero() {
            return Err(AlgebraError::NotAUnit);
        }
        let cinv = c.inv()?;
        // self = c (1 - q)  =>  1/self = (1/c) sum q^k.
        let one = Poly::constant(Scalar::one(self.backend), self.trunc);
        let q = one.sub(&self.scale(&cinv)?)?;
        let mut acc = one.clone();
        let mut qk = one;
        for _ in 0..self.trunc {
            qk = qk.mul(&q)?;
            if qk.is_zero() {
                break;
            }
            acc = acc.add(&qk)?;
        }
        acc.scale(&cinv)
    }

    /// Quotient by a unit via series inversion.
    pub fn div_unit(&self, o: &Poly) -> Result<Poly, AlgebraError> {
        self.mul(&o.invert()?)
    }

    /// Re-truncate to a (possibly lower) order.
    pub fn truncate(&self, order: u32) -> Poly {
        let mut out = Poly::zero(self.backend, order);
        for (m, c) in &self.terms {
            out.add_term(*m, c.clone());
        }
        out
    }

    /// Raise the truncation bound (terms unchanged).
    pub fn with_truncation(&self, order: u32) -> Poly {
        let mut out = self.clone();
        out.trunc = order;
        out
    }

    /// The homogeneous part of the given total degree.
    pub fn homogeneous_part(&self, degree: u32) -> Poly {
        let mut out = Poly::zero(self.backend, self.trunc);
        for (m, c) in &self.terms {
            if m.degree() == degree {
                out.add_term(*m, c.clone());
            }
        }
        out
    }

    /// Exact-to-float embedding (identity on matching backend).
    pub fn to_backend(&self, backend: Backend) -> Result<Poly, AlgebraError> {
        if backend == self.backend {
            return Ok(self.clone());
        }
        match (self.backend, backend) {
            (Backend::Exact, Backend::Float(_)) => {
                let mut out = Poly::zero(backend, self.trunc);
                for (m, c) in &self.terms {
                    let q = c.as_exact().expect("exact poly");
                    out.add_term(*m, Scalar::from_exact(q, backend));
                }
                Ok(out)
            }
            _ => Err(AlgebraError::BackendMismatch(
                self.backend.to_string(),
                backend.to_string(),
            )),
        }
    }

    /// Termwise approximate equality: |a_J - b_J| <= 2^exp for all J.
    pub fn approx_eq_pow2(&self, o: &Poly, exp: i64) -> bool {
        let mut keys: Vec<Monomial> = self.terms.keys().cloned().collect();
        keys.extend(o.terms.keys().cloned());
        keys.sort();
        keys.dedup();
        keys.iter()
            .all(|m| self.coeff(m).approx_eq_pow2(&o.coeff(m), exp))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let cs = c.to_string();
            if m.degree() == 0 {
                write!(f, "{cs}")?;
            } else if cs == "1" {
                write!(f, "{m}")?;
            } else if cs == "-1" {
                write!(f, "-{m}")?;
            } else if cs.contains('+') || (cs.contains('-') && !cs.starts_with('-')) {
                write!(f, "({cs})*{m}")?;
            } else {
                write!(f, "{cs}*{m}")?;
            }
        }
        Ok(())
    }
}
