//! Taylor-jet model of a real hypersurface graph v = v(z, z̄, u) in C³ and
//! the pointwise diagnostics used by the normalization pipeline: Levi matrix,
//! 2-nondegeneracy, and the cubic pencil analysis that separates the
//! normalization branches.

use num_traits::ToPrimitive;
use thiserror::Error;

use crate::error::AlgebraError;
use crate::poly::{Monomial, Poly, Var};
use crate::scalar::{Backend, Scalar};

/// Errors raised by jet construction and diagnostics.
#[derive(Debug, Error)]
pub enum JetError {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("defining function is not real: conjugation changes the series")]
    NotReal,
    #[error("defining function is not in normal coordinates: {0}")]
    NotNormalCoordinates(String),
    #[error("truncation order {0} is below the minimum of 3")]
    OrderTooLow(u32),
    #[error("multi-index of degree {0} exceeds truncation order {1}")]
    OrderExceeded(u32, u32),
    #[error("Levi form does not vanish at the origin (rank {0})")]
    NotRankZero(u32),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { chars: text.chars().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, JetError> {
        let mut out = Vec::new();
        loop {
            while matches!(self.chars.peek(), Some(c) if c.is_whitespace()) {
                self.bump();
            }
            let (line, col) = (self.line, self.col);
            let Some(&c) = self.chars.peek() else { break };
            let tok = match c {
                '+' => {
                    self.bump();
                    Tok::Plus
                }
                '-' => {
                    self.bump();
                    Tok::Minus
                }
                '*' => {
                    self.bump();
                    Tok::Star
                }
                '/' => {
                    self.bump();
                    Tok::Slash
                }
                '^' => {
                    self.bump();
                    Tok::Caret
                }
                '(' => {
                    self.bump();
                    Tok::LParen
                }
                ')' => {
                    self.bump();
                    Tok::RParen
                }
                ',' => {
                    self.bump();
                    Tok::Comma
                }
                c if c.is_ascii_digit() => {
                    let mut s = String::new();
                    while matches!(self.chars.peek(), Some(c) if c.is_ascii_digit()) {
                        s.push(self.bump().unwrap());
                    }
                    Tok::Int(s)
                }
                c if c.is_ascii_alphabetic() => {
                    let mut s = String::new();
                    while matches!(self.chars.peek(), Some(c) if c.is_ascii_alphanumeric() || *c == '_')
                    {
                        s.push(self.bump().unwrap());
                    }
                    Tok::Ident(s)
                }
                other => {
                    return Err(JetError::Parse {
                        line,
                        col,
                        msg: format!("unexpected character `{other}`"),
                    })
                }
            };
            out.push(Spanned { tok, line, col });
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    backend: Backend,
    order: u32,
    /// When set, the grammar is for holomorphic map components: `w` is the
    /// complex variable (stored on the `u` slot) and `u`, `zb1`, `zb2`,
    /// `conj` are rejected.
    holomorphic: bool,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|s| (s.line, s.col))
            .unwrap_or((1, 1))
    }

    fn err(&self, msg: impl Into<String>) -> JetError {
        let (line, col) = self.here();
        JetError::Parse { line, col, msg: msg.into() }
    }

    fn bump(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|s| &s.tok);
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), JetError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Poly, JetError> {
        let mut acc = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            self.term()?.neg()
        } else {
            self.term()?
        };
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?)?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly, JetError> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.mul(&self.power()?)?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let d = self.power()?;
                    let c = d.constant_term();
                    let is_constant = d.iter().all(|(m, _)| m.degree() == 0);
                    if !is_constant {
                        return Err(self.err("division is only supported by nonzero constants"));
                    }
                    if c.is_zero() {
                        return Err(self.err("division by zero"));
                    }
                    acc = acc.scale(&c.inv()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<Poly, JetError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            match self.bump().cloned() {
                Some(Tok::Int(s)) => {
                    let k: u32 = s
                        .parse()
                        .map_err(|_| self.err("exponent does not fit in a machine integer"))?;
                    Ok(base.pow(k)?)
                }
                _ => Err(self.err("expected a nonnegative integer exponent after `^`")),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Poly, JetError> {
        let (line, col) = self.here();
        match self.bump().cloned() {
            Some(Tok::Int(s)) => {
                let n: i64 = s.parse().map_err(|_| JetError::Parse {
                    line,
                    col,
                    msg: "integer literal too large".into(),
                })?;
                Ok(Poly::constant(Scalar::from_int(n, self.backend), self.order))
            }
            Some(Tok::Minus) => Ok(self.power()?.neg()),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => match (name.as_str(), self.holomorphic) {
                ("z1", _) => Ok(Poly::var(Var::Z1, self.backend, self.order)),
                ("z2", _) => Ok(Poly::var(Var::Z2, self.backend, self.order)),
                ("zb1", false) => Ok(Poly::var(Var::Zb1, self.backend, self.order)),
                ("zb2", false) => Ok(Poly::var(Var::Zb2, self.backend, self.order)),
                ("u", false) => Ok(Poly::var(Var::U, self.backend, self.order)),
                ("w", true) => Ok(Poly::var(Var::U, self.backend, self.order)),
                ("I", _) => Ok(Poly::constant(Scalar::i(self.backend), self.order)),
                ("conj", false) => {
                    self.expect(Tok::LParen, "`(` after conj")?;
                    let inner = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(inner.conjugate())
                }
                (other, holo) => Err(JetError::Parse {
                    line,
                    col,
                    msg: if holo {
                        format!("unknown identifier `{other}` (expected z1, z2, w, I)")
                    } else {
                        format!(
                            "unknown identifier `{other}` (expected z1, z2, zb1, zb2, u, I, conj)"
                        )
                    },
                }),
            },
            _ => Err(JetError::Parse { line, col, msg: "expected a term".into() }),
        }
    }
}

/// Parses the text grammar for defining functions into a truncated series.
///
/// Grammar: variables `z1 z2 u zb1 zb2` (`conj(...)` is also accepted),
/// integer and rational coefficients (`a/b`, `(a/b+c/d*I)`), operators
/// `+ - * / ^`, parentheses. Reality and normal coordinates are *not*
/// enforced here; they are construction invariants of [`JetSeries`].
pub fn parse_defining_function(
    text: &str,
    backend: Backend,
    order: u32,
) -> Result<Poly, JetError> {
    parse_with_mode(text, backend, order, false)
}

/// Parses one holomorphic map component in the variables `z1, z2, w`; the
/// complex variable `w` is stored on the series' `u` slot.
pub fn parse_holomorphic_component(
    text: &str,
    backend: Backend,
    order: u32,
) -> Result<Poly, JetError> {
    parse_with_mode(text, backend, order, true)
}

fn parse_with_mode(
    text: &str,
    backend: Backend,
    order: u32,
    holomorphic: bool,
) -> Result<Poly, JetError> {
    let toks = Lexer::new(text).tokens()?;
    if toks.is_empty() {
        return Ok(Poly::zero(backend, order));
    }
    let mut p = Parser { toks, pos: 0, backend, order, holomorphic };
    let poly = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input after expression"));
    }
    Ok(poly)
}

// ---------------------------------------------------------------------------
// JetSeries
// ---------------------------------------------------------------------------

/// Checks the normal-coordinates conditions v(z, 0, u) = 0 and
/// v(0, z̄, u) = 0: every monomial must involve at least one unbarred and at
/// least one barred variable.
pub fn check_normal_coordinates(poly: &Poly) -> bool {
    poly.iter().all(|(m, _)| {
        let z = m.exponent(Var::Z1) + m.exponent(Var::Z2);
        let zb = m.exponent(Var::Zb1) + m.exponent(Var::Zb2);
        z >= 1 && zb >= 1
    })
}

/// A truncated Taylor series of a defining function v(z, z̄, u) in normal
/// coordinates, real and with no terms below order 2.
#[derive(Debug, Clone, PartialEq)]
pub struct JetSeries {
    poly: Poly,
    order: u32,
}

impl JetSeries {
    /// Validates reality and normal coordinates, truncates to `order`.
    pub fn new(poly: Poly, order: u32) -> Result<Self, JetError> {
        if order < 3 {
            return Err(JetError::OrderTooLow(order));
        }
        let poly = poly.truncate(order).with_truncation(order);
        if poly.conjugate() != poly {
            if poly.backend() == Backend::Exact || !poly.approx_eq_pow2(&poly.conjugate(), -64) {
                return Err(JetError::NotReal);
            }
        }
        if !check_normal_coordinates(&poly) {
            let witness = poly
                .iter()
                .find(|(m, _)| {
                    m.exponent(Var::Z1) + m.exponent(Var::Z2) == 0
                        || m.exponent(Var::Zb1) + m.exponent(Var::Zb2) == 0
                })
                .map(|(m, _)| m.to_string())
                .unwrap_or_default();
            return Err(JetError::NotNormalCoordinates(format!(
                "monomial {witness} lacks a z or z̄ factor"
            )));
        }
        Ok(JetSeries { poly, order })
    }

    /// Parses and validates in one step.
    pub fn from_text(text: &str, backend: Backend, order: u32) -> Result<Self, JetError> {
        Self::new(parse_defining_function(text, backend, order)?, order)
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn backend(&self) -> Backend {
        self.poly.backend()
    }

    /// The jet coordinate v_J = J! × (coefficient of x^J).
    pub fn jet_coefficient(&self, j: &Monomial) -> Result<Scalar, JetError> {
        if j.degree() > self.order {
            return Err(JetError::OrderExceeded(j.degree(), self.order));
        }
        let fact = j.factorial();
        let f = fact.to_i64().ok_or(JetError::OrderExceeded(j.degree(), self.order))?;
        Ok(self
            .poly
            .coeff(j)
            .try_mul(&Scalar::from_int(f, self.backend()))?)
    }

    /// The Hermitian Levi matrix computed via series inversion.
    pub fn levi(&self) -> Result<LeviData, AlgebraError> {
        let b = self.backend();
        let n = self.order;
        let i = Poly::constant(Scalar::i(b), n);
        // A_j = -v_{z_j} / (i + v_u)
        let denom_inv = i.add(&self.poly.derivative(Var::U))?.invert()?;
        let a: Vec<Poly> = [Var::Z1, Var::Z2]
            .iter()
            .map(|&z| self.poly.derivative(z).neg().mul(&denom_inv))
            .collect::<Result<_, _>>()?;
        let abar: Vec<Poly> = a.iter().map(|p| p.conjugate()).collect();

        let zvars = [Var::Z1, Var::Z2];
        let zbvars = [Var::Zb1, Var::Zb2];
        let mut matrix: Vec<Vec<Poly>> = Vec::new();
        for j in 0..2 {
            let mut row = Vec::new();
            for k in 0..2 {
                // entry(j, k) = (i/2) (Ā_j_{z_k} + A_k Ā_j_u - A_k_{z̄_j} - Ā_j A_k_u);
                // the 1/2 normalizes the constant term to v_{z_j z̄_k}(0).
                let t1 = abar[j].derivative(zvars[k]);
                let t2 = a[k].mul(&abar[j].derivative(Var::U))?;
                let t3 = a[k].derivative(zbvars[j]);
                let t4 = abar[j].mul(&a[k].derivative(Var::U))?;
                let half_i = Scalar::i(b).try_div(&Scalar::from_int(2, b))?;
                let e = t1.add(&t2)?.sub(&t3)?.sub(&t4)?.scale(&half_i)?;
                row.push(e);
            }
            matrix.push(row);
        }

        let c = |j: usize, k: usize| matrix[j][k].constant_term();
        let det = c(0, 0)
            .try_mul(&c(1, 1))?
            .try_sub(&c(0, 1).try_mul(&c(1, 0))?)?;
        let all_zero = (0..2).all(|j| (0..2).all(|k| c(j, k).is_effectively_zero()));
        let rank_at_origin = if all_zero {
            0
        } else if det.is_effectively_zero() {
            1
        } else {
            2
        };
        let vanishes_identically = matrix.iter().all(|r| r.iter().all(|e| e.is_zero()));
        Ok(LeviData { matrix, rank_at_origin, vanishes_identically })
    }

    /// Order-3 jet coordinate at the origin, by monomial exponents.
    fn v3(&self, z1: u32, z2: u32, zb1: u32, zb2: u32) -> Scalar {
        let m = Monomial::new(z1, z2, zb1, zb2, 0);
        self.jet_coefficient(&m).expect("degree 3 within order")
    }

    /// The three order-3 minors deciding 2-nondegeneracy at a Levi rank-zero
    /// origin.
    pub fn nondegeneracy(&self) -> Result<NondegeneracyReport, JetError> {
        let levi = self.levi()?;
        if levi.rank_at_origin != 0 {
            return Err(JetError::NotRankZero(levi.rank_at_origin));
        }
        // Rows of the 3×2 jet matrix: (v_{z1²z̄k}), (v_{z1z2z̄k}), (v_{z2²z̄k}).
        let r1 = [self.v3(2, 0, 1, 0), self.v3(2, 0, 0, 1)];
        let r2 = [self.v3(1, 1, 1, 0), self.v3(1, 1, 0, 1)];
        let r3 = [self.v3(0, 2, 1, 0), self.v3(0, 2, 0, 1)];
        let minor = |a: &[Scalar; 2], b: &[Scalar; 2]| -> Result<Scalar, AlgebraError> {
            a[0].try_mul(&b[1])?.try_sub(&a[1].try_mul(&b[0])?)
        };
        let delta12 = minor(&r2, &r1)?;
        let delta23 = minor(&r3, &r2)?;
        let delta13 = minor(&r1, &r3)?;
        let rows = [r1, r2, r3];
        let any_row_nonzero = rows
            .iter()
            .any(|r| !r[0].is_effectively_zero() || !r[1].is_effectively_zero());
        let any_minor_nonzero = !delta12.is_effectively_zero()
            || !delta23.is_effectively_zero()
            || !delta13.is_effectively_zero();
        let span_dimension = if any_minor_nonzero {
            2
        } else if any_row_nonzero {
            1
        } else {
            0
        };
        Ok(NondegeneracyReport {
            delta12,
            delta23,
            delta13,
            two_nondegenerate: span_dimension == 2,
            span_dimension,
        })
    }

    /// Pencil analysis of the cubic jet; see [`CubicPencil`].
    pub fn cubic_pencil(&self) -> Result<CubicPencil, JetError> {
        let q1 = QForm {
            c20: self.poly.coeff(&Monomial::new(2, 0, 1, 0, 0)),
            c11: self.poly.coeff(&Monomial::new(1, 1, 1, 0, 0)),
            c02: self.poly.coeff(&Monomial::new(0, 2, 1, 0, 0)),
        };
        let q2 = QForm {
            c20: self.poly.coeff(&Monomial::new(2, 0, 0, 1, 0)),
            c11: self.poly.coeff(&Monomial::new(1, 1, 0, 1, 0)),
            c02: self.poly.coeff(&Monomial::new(0, 2, 0, 1, 0)),
        };
        Ok(analyze_pencil(self.backend(), &q1, &q2)?)
    }

    /// Runs all admissibility diagnostics without raising.
    pub fn is_admissible(&self) -> AdmissibilityReport {
        // Reality and normal coordinates hold by construction.
        let mut report = AdmissibilityReport {
            normal_coordinates: true,
            reality: true,
            rank_zero_at_origin: false,
            levi_nonflat: false,
            two_nondegenerate: false,
            excluded_half_r: false,
            admissible: false,
        };
        let Ok(levi) = self.levi() else { return report };
        report.rank_zero_at_origin = levi.rank_at_origin == 0;
        report.levi_nonflat = !levi.vanishes_identically;
        if !report.rank_zero_at_origin {
            return report;
        }
        if let Ok(nd) = self.nondegeneracy() {
            report.two_nondegenerate = nd.two_nondegenerate;
        }
        if report.two_nondegenerate {
            if let Ok(pencil) = self.cubic_pencil() {
                if let PencilClass::SkewDoubleRoot { excluded_half_r, .. } = pencil.class {
                    report.excluded_half_r = excluded_half_r;
                }
            }
        }
        report.admissible = report.rank_zero_at_origin
            && report.levi_nonflat
            && report.two_nondegenerate
            && !report.excluded_half_r;
        report
    }
}

/// The Levi matrix of the graph and its rank data at the origin.
#[derive(Debug, Clone)]
pub struct LeviData {
    /// 2×2 Hermitian matrix of series: `matrix[j][k]` is entry (j, k).
    pub matrix: Vec<Vec<Poly>>,
    pub rank_at_origin: u32,
    pub vanishes_identically: bool,
}

/// Order-3 nondegeneracy diagnostics at the origin.
#[derive(Debug, Clone)]
pub struct NondegeneracyReport {
    pub delta12: Scalar,
    pub delta23: Scalar,
    pub delta13: Scalar,
    pub two_nondegenerate: bool,
    pub span_dimension: u32,
}

/// Outcome of all admissibility checks, reported separately.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub normal_coordinates: bool,
    pub reality: bool,
    pub rank_zero_at_origin: bool,
    pub levi_nonflat: bool,
    pub two_nondegenerate: bool,
    /// True when the cubic normalizes into the branch family with the
    /// degenerate scaling ratio |r| = 1/2, which the normal-form construction
    /// excludes.
    pub excluded_half_r: bool,
    pub admissible: bool,
}

// ---------------------------------------------------------------------------
// Cubic pencil analysis
// ---------------------------------------------------------------------------

/// A binary quadratic form q20 z1² + q11 z1z2 + q02 z2² (coefficient level).
#[derive(Debug, Clone)]
pub struct QForm {
    pub c20: Scalar,
    pub c11: Scalar,
    pub c02: Scalar,
}

impl QForm {
    fn backend(&self) -> Backend {
        self.c20.backend()
    }

    fn is_zero(&self) -> bool {
        self.c20.is_effectively_zero()
            && self.c11.is_effectively_zero()
            && self.c02.is_effectively_zero()
    }

    /// Evaluates the form at a vector.
    pub fn eval(&self, v: &[Scalar; 2]) -> Result<Scalar, AlgebraError> {
        let a = self.c20.try_mul(&v[0])?.try_mul(&v[0])?;
        let b = self.c11.try_mul(&v[0])?.try_mul(&v[1])?;
        let c = self.c02.try_mul(&v[1])?.try_mul(&v[1])?;
        a.try_add(&b)?.try_add(&c)
    }

    /// Evaluates the associated symmetric bilinear form at a pair.
    pub fn polar(&self, x: &[Scalar; 2], y: &[Scalar; 2]) -> Result<Scalar, AlgebraError> {
        let b = self.backend();
        let half = Scalar::from_int(1, b).try_div(&Scalar::from_int(2, b))?;
        let a = self.c20.try_mul(&x[0])?.try_mul(&y[0])?;
        let cross = x[0]
            .try_mul(&y[1])?
            .try_add(&x[1].try_mul(&y[0])?)?
            .try_mul(&self.c11)?
            .try_mul(&half)?;
        let c = self.c02.try_mul(&x[1])?.try_mul(&y[1])?;
        a.try_add(&cross)?.try_add(&c)
    }

    /// Discriminant c11² − 4 c20 c02.
    pub fn disc(&self) -> Result<Scalar, AlgebraError> {
        let four = Scalar::from_int(4, self.backend());
        self.c11
            .try_mul(&self.c11)?
            .try_sub(&self.c20.try_mul(&self.c02)?.try_mul(&four)?)
    }

    fn combine(a: &Scalar, q1: &QForm, b: &Scalar, q2: &QForm) -> Result<QForm, AlgebraError> {
        Ok(QForm {
            c20: a.try_mul(&q1.c20)?.try_add(&b.try_mul(&q2.c20)?)?,
            c11: a.try_mul(&q1.c11)?.try_add(&b.try_mul(&q2.c11)?)?,
            c02: a.try_mul(&q1.c02)?.try_add(&b.try_mul(&q2.c02)?)?,
        })
    }
}

/// Data attached to one rank-one element of the pencil {a Q1 + b Q2}.
#[derive(Debug, Clone)]
pub struct RankOneElement {
    /// Pencil direction (a, b) at which the discriminant vanishes.
    pub xi: [Scalar; 2],
    /// The linear form ℓ = p z1 + q z2 with ξ·Q = c ℓ².
    pub line: [Scalar; 2],
    /// The factor c above.
    pub factor: Scalar,
    /// Alignment scalar τ = ξ₁ conj(p) + ξ₂ conj(q); τ = 0 means the square
    /// line is conjugate-orthogonal to the pencil direction.
    pub tau: Scalar,
}

/// Invariant shape of the cubic jet's pencil of quadratic forms.
#[derive(Debug, Clone)]
pub enum PencilClass {
    /// Not 2-nondegenerate (or a degenerate pencil): no branch applies.
    Degenerate,
    /// One (double) rank-one direction whose square line is
    /// conjugate-orthogonal to it: the branch family with invariant r.
    SkewDoubleRoot {
        root: RankOneElement,
        /// r² as an exact nonnegative real scalar.
        r_squared: Scalar,
        /// |r| = 1/2: the configuration the normal form construction refuses.
        excluded_half_r: bool,
        /// |r| = 1: the sub-branch split point.
        r_is_one: bool,
    },
    /// One (double) rank-one direction, not conjugate-orthogonal: the
    /// branch with invariant λ.
    AlignedDoubleRoot { root: RankOneElement },
    /// Two distinct rank-one directions. `aligned` records, per root, whether
    /// its alignment scalar τ is nonzero; both nonzero is one branch, any
    /// zero the other.
    DistinctRoots { roots: [RankOneElement; 2], both_aligned: bool },
}

/// Full pencil analysis result.
#[derive(Debug, Clone)]
pub struct CubicPencil {
    pub q1: QForm,
    pub q2: QForm,
    pub class: PencilClass,
}

fn line_of_rank_one(s: &QForm) -> Result<Option<([Scalar; 2], Scalar)>, AlgebraError> {
    let b = s.backend();
    if !s.c20.is_effectively_zero() {
        // ℓ = 2 c20 z1 + c11 z2, S = ℓ² / (4 c20)
        let two = Scalar::from_int(2, b);
        let four = Scalar::from_int(4, b);
        let p = s.c20.try_mul(&two)?;
        let q = s.c11.clone();
        let factor = Scalar::from_int(1, b).try_div(&s.c20.try_mul(&four)?)?;
        Ok(Some(([p, q], factor)))
    } else if !s.c02.is_effectively_zero() {
        let two = Scalar::from_int(2, b);
        let four = Scalar::from_int(4, b);
        let p = s.c11.clone();
        let q = s.c02.try_mul(&two)?;
        let factor = Scalar::from_int(1, b).try_div(&s.c02.try_mul(&four)?)?;
        Ok(Some(([p, q], factor)))
    } else if !s.c11.is_effectively_zero() {
        // z1 z2 alone has rank two; cannot happen for a rank-one element.
        Ok(None)
    } else {
        Ok(None)
    }
}

fn rank_one_element(
    xi: [Scalar; 2],
    q1: &QForm,
    q2: &QForm,
) -> Result<Option<RankOneElement>, AlgebraError> {
    let s = QForm::combine(&xi[0], q1, &xi[1], q2)?;
    let Some((line, factor)) = line_of_rank_one(&s)? else {
        return Ok(None);
    };
    let tau = xi[0]
        .try_mul(&line[0].conj())?
        .try_add(&xi[1].try_mul(&line[1].conj())?)?;
    Ok(Some(RankOneElement { xi, line, factor, tau }))
}

/// Classifies the pencil {a Q1 + b Q2} by its rank-one directions.
pub fn analyze_pencil(
    backend: Backend,
    q1: &QForm,
    q2: &QForm,
) -> Result<CubicPencil, AlgebraError> {
    let one = Scalar::one(backend);
    let two = Scalar::from_int(2, backend);
    let four = Scalar::from_int(4, backend);

    if q1.is_zero() && q2.is_zero() {
        return Ok(CubicPencil { q1: q1.clone(), q2: q2.clone(), class: PencilClass::Degenerate });
    }

    // D(a, b) = disc(a Q1 + b Q2) = alpha a² + beta ab + gamma b².
    let alpha = q1.disc()?;
    let gamma = q2.disc()?;
    let beta = {
        let t1 = q1.c11.try_mul(&q2.c11)?.try_mul(&two)?;
        let t2 = q1
            .c20
            .try_mul(&q2.c02)?
            .try_add(&q1.c02.try_mul(&q2.c20)?)?
            .try_mul(&four)?;
        t1.try_sub(&t2)?
    };
    let ddisc = beta.try_mul(&beta)?.try_sub(&alpha.try_mul(&gamma)?.try_mul(&four)?)?;

    let a0 = alpha.is_effectively_zero();
    let b0 = beta.is_effectively_zero();
    let g0 = gamma.is_effectively_zero();

    if a0 && b0 && g0 {
        return Ok(CubicPencil { q1: q1.clone(), q2: q2.clone(), class: PencilClass::Degenerate });
    }

    let class = if ddisc.is_effectively_zero() {
        // Double root.
        let xi = if !a0 {
            [beta.neg(), alpha.try_mul(&two)?]
        } else {
            // alpha = 0 forces beta = 0 here; D = gamma b², root b = 0.
            [one.clone(), Scalar::zero(backend)]
        };
        match rank_one_element(xi, q1, q2)? {
            None => PencilClass::Degenerate,
            Some(root) => {
                if root.tau.is_effectively_zero() {
                    let (r_squared, excluded, r_one) = skew_branch_ratio(backend, q1, q2, &root)?;
                    PencilClass::SkewDoubleRoot {
                        root,
                        r_squared,
                        excluded_half_r: excluded,
                        r_is_one: r_one,
                    }
                } else {
                    PencilClass::AlignedDoubleRoot { root }
                }
            }
        }
    } else {
        // Two distinct roots; may require a radical on the exact backend.
        let sq = ddisc.sqrt()?;
        let (xi_plus, xi_minus) = if !a0 {
            (
                [beta.neg().try_add(&sq)?, alpha.try_mul(&two)?],
                [beta.neg().try_sub(&sq)?, alpha.try_mul(&two)?],
            )
        } else {
            // D = b (beta a + gamma b): roots (1 : 0) and (gamma : -beta).
            (
                [one.clone(), Scalar::zero(backend)],
                [gamma.clone(), beta.neg()],
            )
        };
        let r1 = rank_one_element(xi_plus, q1, q2)?;
        let r2 = rank_one_element(xi_minus, q1, q2)?;
        match (r1, r2) {
            (Some(r1), Some(r2)) => {
                let both_aligned =
                    !r1.tau.is_effectively_zero() && !r2.tau.is_effectively_zero();
                PencilClass::DistinctRoots { roots: [r1, r2], both_aligned }
            }
            _ => PencilClass::Degenerate,
        }
    };

    Ok(CubicPencil { q1: q1.clone(), q2: q2.clone(), class })
}

/// For the conjugate-orthogonal double-root family: computes the invariant
/// ratio r² = |F/X|² from a transversal test vector, plus the two rational
/// threshold tests |r| = 1/2 and |r| = 1.
fn skew_branch_ratio(
    backend: Backend,
    q1: &QForm,
    q2: &QForm,
    root: &RankOneElement,
) -> Result<(Scalar, bool, bool), AlgebraError> {
    let v2 = [root.xi[0].conj(), root.xi[1].conj()];
    let candidates = [
        [Scalar::one(backend), Scalar::zero(backend)],
        [Scalar::zero(backend), Scalar::one(backend)],
        [Scalar::one(backend), Scalar::one(backend)],
        [Scalar::one(backend), Scalar::i(backend)],
    ];
    for w in &candidates {
        let lw = root.line[0]
            .try_mul(&w[0])?
            .try_add(&root.line[1].try_mul(&w[1])?)?;
        if lw.is_effectively_zero() {
            continue;
        }
        // R1 := conj(w)·Q; kappa1 = R1(w, v2); F = factor · ℓ(w)².
        let wbar = [w[0].conj(), w[1].conj()];
        let r1 = QForm::combine(&wbar[0], q1, &wbar[1], q2)?;
        let kappa1 = r1.polar(w, &v2)?;
        if kappa1.is_effectively_zero() {
            continue;
        }
        let f = root.factor.try_mul(&lw)?.try_mul(&lw)?;
        // X = 2 kappa1; r² = |F|² / |X|².
        let x2 = kappa1.abs2().try_mul(&Scalar::from_int(4, backend))?;
        let f2 = f.abs2();
        let r_squared = f2.try_div(&x2)?;
        let quarter = Scalar::from_int(1, backend).try_div(&Scalar::from_int(4, backend))?;
        let excluded = r_squared.try_sub(&quarter)?.is_effectively_zero();
        let r_one = r_squared.try_sub(&Scalar::one(backend))?.is_effectively_zero();
        return Ok((r_squared, excluded, r_one));
    }
    // No transversal direction responded: treat as degenerate (r = 0).
    Ok((Scalar::zero(backend), false, false))
}
