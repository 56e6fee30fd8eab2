//! Lifted moving-frame calculus on the jet bundle: the reduced basis of
//! group one-forms, recurrence relations for the lifted invariants `V_J`,
//! the normalization ledger of solved forms and pinned invariants, and
//! restriction to the fiber over the base point.
//!
//! The symbol families `mu1, mu2, mubar1, mubar2, alpha, gamma` mirror the
//! vector-field components `xi1, xi2, xibar1, xibar2, eta, phi` of the
//! infinitesimal CR-automorphism system; a derivative of a group one-form is
//! reduced to the basis by exactly the same rewriting rules as the
//! corresponding vector-field coefficient derivative.  The recurrence
//! relation for `dV_J` is obtained by invariantizing the prolonged
//! coefficient of the symmetry vector field: each jet variable `v_K` becomes
//! the lifted invariant `V_K` and each coefficient derivative becomes the
//! matching Maurer-Cartan basis form, plus the horizontal contact form
//! `varpi_J`.

use crate::error::AlgebraError;
use crate::poly::{Monomial, Var};
use crate::prolongation::{
    JetProduct, Prolongation, ProlongedCoefficient, SrcIndex, SrcVar, VFComponent, VFDerivative,
};
use crate::scalar::{Backend, Scalar};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Errors arising while manipulating recurrence relations and the ledger.
#[derive(Debug, Error)]
pub enum FrameError {
    /// The fiber coefficient of the requested form vanishes, so the relation
    /// cannot be solved for it; this is precisely the trigger for a branch
    /// split in the normalization.
    #[error("the fiber coefficient of {symbol} vanishes; the relation cannot be solved for it")]
    NotSolvable { symbol: String },
    /// The coefficient of the requested form is not a constant on the
    /// current fiber; the ledger is missing a pin that the solve depends on.
    #[error("the coefficient of {symbol} is not constant on the current fiber: {coefficient}")]
    SymbolicCoefficient { symbol: String, coefficient: String },
    #[error("{symbol} has already been solved")]
    AlreadySolved { symbol: String },
    #[error("lifted invariant {invariant} is already pinned to a different value")]
    ConflictingPin { invariant: String },
    #[error("substitution did not terminate; the ledger is not triangular")]
    NotTriangular,
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

// ---------------------------------------------------------------------------
// Symbols
// ---------------------------------------------------------------------------

/// The six families of group one-forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MCFamily {
    Mu1,
    Mu2,
    Mubar1,
    Mubar2,
    Alpha,
    Gamma,
}

impl MCFamily {
    pub const ALL: [MCFamily; 6] = [
        MCFamily::Mu1,
        MCFamily::Mu2,
        MCFamily::Mubar1,
        MCFamily::Mubar2,
        MCFamily::Alpha,
        MCFamily::Gamma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MCFamily::Mu1 => "mu1",
            MCFamily::Mu2 => "mu2",
            MCFamily::Mubar1 => "mubar1",
            MCFamily::Mubar2 => "mubar2",
            MCFamily::Alpha => "alpha",
            MCFamily::Gamma => "gamma",
        }
    }

    /// The vector-field component whose derivatives this family reduces like.
    pub fn component(self) -> VFComponent {
        match self {
            MCFamily::Mu1 => VFComponent::Xi1,
            MCFamily::Mu2 => VFComponent::Xi2,
            MCFamily::Mubar1 => VFComponent::Xibar1,
            MCFamily::Mubar2 => VFComponent::Xibar2,
            MCFamily::Alpha => VFComponent::Eta,
            MCFamily::Gamma => VFComponent::Phi,
        }
    }

    pub fn from_component(c: VFComponent) -> MCFamily {
        match c {
            VFComponent::Xi1 => MCFamily::Mu1,
            VFComponent::Xi2 => MCFamily::Mu2,
            VFComponent::Xibar1 => MCFamily::Mubar1,
            VFComponent::Xibar2 => MCFamily::Mubar2,
            VFComponent::Eta => MCFamily::Alpha,
            VFComponent::Phi => MCFamily::Gamma,
        }
    }

    pub fn conj(self) -> MCFamily {
        match self {
            MCFamily::Mu1 => MCFamily::Mubar1,
            MCFamily::Mu2 => MCFamily::Mubar2,
            MCFamily::Mubar1 => MCFamily::Mu1,
            MCFamily::Mubar2 => MCFamily::Mu2,
            MCFamily::Alpha => MCFamily::Alpha,
            MCFamily::Gamma => MCFamily::Gamma,
        }
    }
}

/// A basis Maurer-Cartan form: a family together with a derivative
/// multi-index over the lifted variables `(Z1, Z2, Zb1, Zb2, U, V)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct MCSymbol {
    pub family: MCFamily,
    pub index: SrcIndex,
}

impl MCSymbol {
    pub fn new(family: MCFamily, index: SrcIndex) -> MCSymbol {
        MCSymbol { family, index }
    }

    pub fn from_derivative(d: &VFDerivative) -> MCSymbol {
        MCSymbol {
            family: MCFamily::from_component(d.component),
            index: d.index,
        }
    }

    pub fn derivative(&self) -> VFDerivative {
        VFDerivative {
            component: self.family.component(),
            index: self.index,
        }
    }

    /// Whether the symbol belongs to the reduced basis of group one-forms.
    pub fn is_basis(&self) -> bool {
        self.derivative().is_basis()
    }

    pub fn conj(&self) -> MCSymbol {
        MCSymbol {
            family: self.family.conj(),
            index: self.index.conj(),
        }
    }

    pub fn is_self_conjugate(&self) -> bool {
        *self == self.conj()
    }

    /// Canonical representative of the conjugate pair `{s, conj(s)}`: the
    /// unbarred `mu` family, and the `Z`-side (or pure-`u`) `alpha` index.
    pub fn canonical(&self) -> MCSymbol {
        match self.family {
            MCFamily::Mubar1 | MCFamily::Mubar2 => self.conj(),
            MCFamily::Alpha => {
                let barred = self.index.exponent(SrcVar::Zb1) + self.index.exponent(SrcVar::Zb2);
                if barred > 0 {
                    self.conj()
                } else {
                    *self
                }
            }
            _ => *self,
        }
    }

    pub fn order(&self) -> u32 {
        self.index.order()
    }
}

fn lifted_index_label(idx: &SrcIndex) -> String {
    const NAMES: [&str; 6] = ["Z1", "Z2", "Zb1", "Zb2", "U", "V"];
    let mut parts = Vec::new();
    for (slot, name) in NAMES.iter().enumerate() {
        let e = idx.0[slot];
        if e == 1 {
            parts.push((*name).to_string());
        } else if e > 1 {
            parts.push(format!("{name}^{e}"));
        }
    }
    parts.join(" ")
}

/// Renders a jet multi-index in the lifted notation, e.g. `Z1^2 Zb2 U`.
pub fn jet_index_label(j: &Monomial) -> String {
    const NAMES: [&str; 5] = ["Z1", "Z2", "Zb1", "Zb2", "U"];
    let mut parts = Vec::new();
    for (slot, name) in NAMES.iter().enumerate() {
        let e = j.0[slot];
        if e == 1 {
            parts.push((*name).to_string());
        } else if e > 1 {
            parts.push(format!("{name}^{e}"));
        }
    }
    parts.join(" ")
}

impl fmt::Display for MCSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.index == SrcIndex::EMPTY {
            write!(f, "{}", self.family.name())
        } else {
            write!(f, "{}_{{{}}}", self.family.name(), lifted_index_label(&self.index))
        }
    }
}

// ---------------------------------------------------------------------------
// Polynomials in the lifted invariants
// ---------------------------------------------------------------------------

/// A polynomial in the lifted invariants `V_K` with `Scalar` coefficients;
/// the coefficient ring of recurrence relations.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPoly {
    backend: Backend,
    terms: BTreeMap<JetProduct, Scalar>,
}

impl LiftedPoly {
    pub fn zero(backend: Backend) -> LiftedPoly {
        LiftedPoly {
            backend,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: Scalar) -> LiftedPoly {
        let backend = c.backend();
        let mut out = LiftedPoly::zero(backend);
        if !c.is_zero() {
            out.terms.insert(JetProduct::new(), c);
        }
        out
    }

    pub fn one(backend: Backend) -> LiftedPoly {
        LiftedPoly::constant(Scalar::one(backend))
    }

    /// The single lifted invariant `V_j`.
    pub fn invariant(j: Monomial, backend: Backend) -> LiftedPoly {
        let mut p = JetProduct::new();
        p.insert(j, 1);
        LiftedPoly::monomial(p, Scalar::one(backend))
    }

    pub fn monomial(product: JetProduct, c: Scalar) -> LiftedPoly {
        let backend = c.backend();
        let mut out = LiftedPoly::zero(backend);
        if !c.is_zero() {
            out.terms.insert(product, c);
        }
        out
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Some(c)` when the polynomial is the constant `c` (including zero).
    pub fn as_constant(&self) -> Option<Scalar> {
        match self.terms.len() {
            0 => Some(Scalar::zero(self.backend)),
            1 => {
                let (p, c) = self.terms.iter().next().unwrap();
                if p.is_empty() {
                    Some(c.clone())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    pub fn coefficient(&self, product: &JetProduct) -> Scalar {
        self.terms
            .get(product)
            .cloned()
            .unwrap_or_else(|| Scalar::zero(self.backend))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&JetProduct, &Scalar)> {
        self.terms.iter()
    }

    fn push(&mut self, product: JetProduct, c: Scalar) -> Result<(), AlgebraError> {
        match self.terms.get(&product) {
            Some(old) => {
                let s = old.try_add(&c)?;
                if s.is_zero() {
                    self.terms.remove(&product);
                } else {
                    self.terms.insert(product, s);
                }
            }
            None => {
                if !c.is_zero() {
                    self.terms.insert(product, c);
                }
            }
        }
        Ok(())
    }

    pub fn add(&self, o: &LiftedPoly) -> Result<LiftedPoly, AlgebraError> {
        let mut out = self.clone();
        for (p, c) in &o.terms {
            out.push(p.clone(), c.clone())?;
        }
        Ok(out)
    }

    pub fn neg(&self) -> LiftedPoly {
        LiftedPoly {
            backend: self.backend,
            terms: self
                .terms
                .iter()
                .map(|(p, c)| (p.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn sub(&self, o: &LiftedPoly) -> Result<LiftedPoly, AlgebraError> {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &Scalar) -> Result<LiftedPoly, AlgebraError> {
        let mut out = LiftedPoly::zero(self.backend);
        if c.is_zero() {
            return Ok(out);
        }
        for (p, a) in &self.terms {
            out.terms.insert(p.clone(), a.try_mul(c)?);
        }
        Ok(out)
    }

    pub fn mul(&self, o: &LiftedPoly) -> Result<LiftedPoly, AlgebraError> {
        let mut out = LiftedPoly::zero(self.backend);
        for (p, a) in &self.terms {
            for (q, b) in &o.terms {
                let mut prod = p.clone();
                for (k, e) in q {
                    *prod.entry(*k).or_insert(0) += e;
                }
                out.push(prod, a.try_mul(b)?)?;
            }
        }
        Ok(out)
    }

    pub fn conjugate(&self) -> LiftedPoly {
        let mut out = LiftedPoly::zero(self.backend);
        for (p, c) in &self.terms {
            let mut q = JetProduct::new();
            for (k, e) in p {
                *q.entry(k.conj()).or_insert(0) += e;
            }
            out.terms.insert(q, c.conj());
        }
        out
    }

    /// Replaces every pinned invariant `V_K` by its constant value.
    pub fn substitute_pinned(
        &self,
        pins: &BTreeMap<Monomial, Scalar>,
    ) -> Result<LiftedPoly, AlgebraError> {
        let mut out = LiftedPoly::zero(self.backend);
        for (p, c) in &self.terms {
            let mut coeff = c.clone();
            let mut rest = JetProduct::new();
            for (k, e) in p {
                match pins.get(k) {
                    Some(v) => {
                        for _ in 0..*e {
                            coeff = coeff.try_mul(v)?;
                        }
                    }
                    None => {
                        rest.insert(*k, *e);
                    }
                }
            }
            out.push(rest, coeff)?;
        }
        Ok(out)
    }

    /// The jet multi-indices appearing in the polynomial.
    pub fn jets(&self) -> Vec<Monomial> {
        let mut out = Vec::new();
        for p in self.terms.keys() {
            for k in p.keys() {
                if !out.contains(k) {
                    out.push(*k);
                }
            }
        }
        out
    }
}

fn product_label(p: &JetProduct) -> String {
    let mut parts = Vec::new();
    for (k, e) in p {
        let base = format!("V_{{{}}}", jet_index_label(k));
        if *e == 1 {
            parts.push(base);
        } else {
            parts.push(format!("{base}^{e}"));
        }
    }
    parts.join("*")
}

impl fmt::Display for LiftedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (p, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if p.is_empty() {
                write!(f, "{c}")?;
            } else {
                let cs = format!("{c}");
                let label = product_label(p);
                if cs == "1" {
                    write!(f, "{label}")?;
                } else if cs == "-1" {
                    write!(f, "-{label}")?;
                } else if cs.contains(' ') {
                    write!(f, "({cs})*{label}")?;
                } else {
                    write!(f, "{cs}*{label}")?;
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

/// A horizontal one-form: a base coframe form `omega` or a contact-jet form
/// `varpi_J`; the recurrence relations hold modulo these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Horizontal {
    Base(SrcVar),
    Jet(Monomial),
}

impl fmt::Display for Horizontal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizontal::Base(v) => write!(f, "omega_{{{}}}", v.name()),
            Horizontal::Jet(j) => {
                if j.degree() == 0 {
                    write!(f, "varpi")
                } else {
                    write!(f, "varpi_{{{}}}", jet_index_label(j))
                }
            }
        }
    }
}

impl Horizontal {
    pub fn conj(&self) -> Horizontal {
        match self {
            Horizontal::Base(v) => Horizontal::Base(v.conj()),
            Horizontal::Jet(j) => Horizontal::Jet(j.conj()),
        }
    }
}

/// A linear combination of basis Maurer-Cartan forms and horizontal forms
/// with `LiftedPoly` coefficients; the value of a recurrence relation.
#[derive(Debug, Clone, PartialEq)]
pub struct MCExpr {
    backend: Backend,
    terms: BTreeMap<MCSymbol, LiftedPoly>,
    horizontal: BTreeMap<Horizontal, LiftedPoly>,
}

impl MCExpr {
    pub fn zero(backend: Backend) -> MCExpr {
        MCExpr {
            backend,
            terms: BTreeMap::new(),
            horizontal: BTreeMap::new(),
        }
    }

    pub fn term(symbol: MCSymbol, coeff: LiftedPoly) -> MCExpr {
        let mut out = MCExpr::zero(coeff.backend());
        if !coeff.is_zero() {
            out.terms.insert(symbol, coeff);
        }
        out
    }

    pub fn horizontal_term(h: Horizontal, coeff: LiftedPoly) -> MCExpr {
        let mut out = MCExpr::zero(coeff.backend());
        if !coeff.is_zero() {
            out.horizontal.insert(h, coeff);
        }
        out
    }

    /// The contact form `varpi_j` with unit coefficient.
    pub fn varpi(j: Monomial, backend: Backend) -> MCExpr {
        MCExpr::horizontal_term(Horizontal::Jet(j), LiftedPoly::one(backend))
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.horizontal.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len() + self.horizontal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coefficient(&self, s: &MCSymbol) -> LiftedPoly {
        self.terms
            .get(s)
            .cloned()
            .unwrap_or_else(|| LiftedPoly::zero(self.backend))
    }

    pub fn horizontal_coefficient(&self, h: &Horizontal) -> LiftedPoly {
        self.horizontal
            .get(h)
            .cloned()
            .unwrap_or_else(|| LiftedPoly::zero(self.backend))
    }

    pub fn symbols(&self) -> impl Iterator<Item = &MCSymbol> {
        self.terms.keys()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MCSymbol, &LiftedPoly)> {
        self.terms.iter()
    }

    pub fn horizontal_terms(&self) -> impl Iterator<Item = (&Horizontal, &LiftedPoly)> {
        self.horizontal.iter()
    }

    fn push(&mut self, s: MCSymbol, coeff: LiftedPoly) -> Result<(), AlgebraError> {
        let merged = match self.terms.get(&s) {
            Some(old) => old.add(&coeff)?,
            None => coeff,
        };
        if merged.is_zero() {
            self.terms.remove(&s);
        } else {
            self.terms.insert(s, merged);
        }
        Ok(())
    }

    fn push_horizontal(&mut self, h: Horizontal, coeff: LiftedPoly) -> Result<(), AlgebraError> {
        let merged = match self.horizontal.get(&h) {
            Some(old) => old.add(&coeff)?,
            None => coeff,
        };
        if merged.is_zero() {
            self.horizontal.remove(&h);
        } else {
            self.horizontal.insert(h, merged);
        }
        Ok(())
    }

    pub fn add(&self, o: &MCExpr) -> Result<MCExpr, AlgebraError> {
        let mut out = self.clone();
        for (s, c) in &o.terms {
            out.push(*s, c.clone())?;
        }
        for (h, c) in &o.horizontal {
            out.push_horizontal(*h, c.clone())?;
        }
        Ok(out)
    }

    pub fn neg(&self) -> MCExpr {
        MCExpr {
            backend: self.backend,
            terms: self.terms.iter().map(|(s, c)| (*s, c.neg())).collect(),
            horizontal: self
                .horizontal
                .iter()
                .map(|(h, c)| (*h, c.neg()))
                .collect(),
        }
    }

    pub fn sub(&self, o: &MCExpr) -> Result<MCExpr, AlgebraError> {
        self.add(&o.neg())
    }

    pub fn scale(&self, c: &Scalar) -> Result<MCExpr, AlgebraError> {
        self.scale_poly(&LiftedPoly::constant(c.clone()))
    }

    pub fn scale_poly(&self, p: &LiftedPoly) -> Result<MCExpr, AlgebraError> {
        let mut out = MCExpr::zero(self.backend);
        for (s, c) in &self.terms {
            out.push(*s, c.mul(p)?)?;
        }
        for (h, c) in &self.horizontal {
            out.push_horizontal(*h, c.mul(p)?)?;
        }
        Ok(out)
    }

    pub fn without_symbol(&self, s: &MCSymbol) -> MCExpr {
        let mut out = self.clone();
        out.terms.remove(s);
        out
    }

    pub fn drop_horizontal(&self) -> MCExpr {
        MCExpr {
            backend: self.backend,
            terms: self.terms.clone(),
            horizontal: BTreeMap::new(),
        }
    }

    pub fn conjugate(&self) -> MCExpr {
        MCExpr {
            backend: self.backend,
            terms: self
                .terms
                .iter()
                .map(|(s, c)| (s.conj(), c.conjugate()))
                .collect(),
            horizontal: self
                .horizontal
                .iter()
                .map(|(h, c)| (h.conj(), c.conjugate()))
                .collect(),
        }
    }

    pub fn substitute_pinned(
        &self,
        pins: &BTreeMap<Monomial, Scalar>,
    ) -> Result<MCExpr, AlgebraError> {
        let mut out = MCExpr::zero(self.backend);
        for (s, c) in &self.terms {
            out.push(*s, c.substitute_pinned(pins)?)?;
        }
        for (h, c) in &self.horizontal {
            out.push_horizontal(*h, c.substitute_pinned(pins)?)?;
        }
        Ok(out)
    }

    /// All jet multi-indices appearing in coefficients.
    pub fn jets(&self) -> Vec<Monomial> {
        let mut out = Vec::new();
        for c in self.terms.values().chain(self.horizontal.values()) {
            for k in c.jets() {
                if !out.contains(&k) {
                    out.push(k);
                }
            }
        }
        out
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, first: &mut bool, coeff: &LiftedPoly, label: &str) -> fmt::Result {
    let cs = format!("{coeff}");
    let lead = if *first { "" } else { " + " };
    *first = false;
    if cs == "1" {
        write!(f, "{lead}{label}")
    } else if cs == "-1" {
        write!(f, "{lead}-{label}")
    } else if cs.contains(" + ") || cs.contains(' ') {
        write!(f, "{lead}({cs})*{label}")
    } else {
        write!(f, "{lead}{cs}*{label}")
    }
}

impl fmt::Display for MCExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (h, c) in &self.horizontal {
            write_term(f, &mut first, c, &format!("{h}"))?;
        }
        for (s, c) in &self.terms {
            write_term(f, &mut first, c, &format!("{s}"))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Invariantization and recurrence
// ---------------------------------------------------------------------------

/// Maps a prolonged vector-field coefficient to a lifted expression: each
/// jet variable `v_K` becomes the invariant `V_K` and each canonical
/// coefficient derivative becomes the matching Maurer-Cartan basis form.
pub fn invariantize(pc: &ProlongedCoefficient) -> Result<MCExpr, AlgebraError> {
    let mut out = MCExpr::zero(pc.backend());
    for ((jets, d), c) in pc.iter() {
        out.push(
            MCSymbol::from_derivative(d),
            LiftedPoly::monomial(jets.clone(), c.clone()),
        )?;
    }
    Ok(out)
}

/// The recurrence relation for `dV_j`: the contact form `varpi_j` plus the
/// invariantized prolonged coefficient, with every solved form replaced by
/// its ledger expression and every pinned invariant by its value.  With
/// `modulo_horizontal` the horizontal terms are dropped (the displayed `≡`
/// convention).
pub fn recurrence(
    pro: &Prolongation,
    j: &Monomial,
    ledger: &Ledger,
    modulo_horizontal: bool,
) -> Result<MCExpr, FrameError> {
    let pc = pro.phi_prolonged(j)?;
    let mut e = invariantize(&pc)?;
    e = e.add(&MCExpr::varpi(*j, pro.backend()))?;
    let e = ledger.substitute(&e)?;
    Ok(if modulo_horizontal {
        e.drop_horizontal()
    } else {
        e
    })
}

// ---------------------------------------------------------------------------
// Ledger
// ---------------------------------------------------------------------------

/// Which real part of an invariant or form a normalization pins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealPart {
    Re,
    Im,
}

/// How much of a conjugate pair of forms the ledger has eliminated, recorded
/// on the canonical representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolvedState {
    Full,
    ReSolved,
    ImSolved,
}

/// One normalization event: the invariant (or real part) pinned, the value
/// it was pinned to, and the form eliminated together with its solved
/// expression.
#[derive(Debug, Clone)]
pub struct LedgerEntry {
    pub target: Option<(Monomial, Option<RealPart>)>,
    pub value: Scalar,
    pub solved: MCSymbol,
    pub substitution: MCExpr,
}

/// The normalization ledger: an ordered, triangular record of solved group
/// forms and pinned (phantom) invariant values.
#[derive(Debug, Clone)]
pub struct Ledger {
    backend: Backend,
    entries: Vec<LedgerEntry>,
    rules: BTreeMap<MCSymbol, MCExpr>,
    state: BTreeMap<MCSymbol, SolvedState>,
    pins: BTreeMap<Monomial, Scalar>,
}

impl Ledger {
    pub fn new(backend: Backend) -> Ledger {
        Ledger {
            backend,
            entries: Vec::new(),
            rules: BTreeMap::new(),
            state: BTreeMap::new(),
            pins: BTreeMap::new(),
        }
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn pins(&self) -> &BTreeMap<Monomial, Scalar> {
        &self.pins
    }

    pub fn fiber_value(&self, j: &Monomial) -> Option<&Scalar> {
        self.pins.get(j)
    }

    pub fn is_solved(&self, s: &MCSymbol) -> bool {
        self.rules.contains_key(s)
    }

    pub fn solved_state(&self, s: &MCSymbol) -> Option<SolvedState> {
        self.state.get(&s.canonical()).copied()
    }

    /// Pins the fiber value of `V_j` (and its conjugate) without solving a
    /// form; used for locus conditions that hold on the input class itself.
    pub fn pin_fiber(&mut self, j: Monomial, value: Scalar) -> Result<(), FrameError> {
        let vc = value.conj();
        for (k, v) in [(j, value), (j.conj(), vc)] {
            match self.pins.get(&k) {
                Some(old) if *old != v => {
                    return Err(FrameError::ConflictingPin {
                        invariant: format!("V_{{{}}}", jet_index_label(&k)),
                    });
                }
                _ => {
                    self.pins.insert(k, v);
                }
            }
        }
        Ok(())
    }

    /// Replaces every solved form by its ledger expression and every pinned
    /// invariant by its value; terminates because the rule graph is
    /// triangular by construction.
    pub fn substitute(&self, e: &MCExpr) -> Result<MCExpr, FrameError> {
        let mut cur = e.substitute_pinned(&self.pins)?;
        let mut guard = 0usize;
        loop {
            let hit = cur
                .symbols()
                .find(|s| self.rules.contains_key(s))
                .copied();
            let Some(s) = hit else { break };
            let coeff = cur.coefficient(&s);
            cur = cur
                .without_symbol(&s)
                .add(&self.rules[&s].scale_poly(&coeff)?)?;
            cur = cur.substitute_pinned(&self.pins)?;
            guard += 1;
            if guard > 100_000 {
                return Err(FrameError::NotTriangular);
            }
        }
        Ok(cur)
    }

    fn fiber_constant(&self, c: &LiftedPoly, symbol: &MCSymbol) -> Result<Scalar, FrameError> {
        match c.as_constant() {
            Some(v) => Ok(v),
            None => Err(FrameError::SymbolicCoefficient {
                symbol: format!("{symbol}"),
                coefficient: format!("{c}"),
            }),
        }
    }

    fn record(
        &mut self,
        target: Option<(Monomial, Option<RealPart>)>,
        value: Scalar,
        solved: MCSymbol,
        substitution: MCExpr,
        state_key: MCSymbol,
        state: SolvedState,
    ) {
        self.rules.insert(solved, substitution.clone());
        self.state.insert(state_key.canonical(), state);
        self.entries.push(LedgerEntry {
            target,
            value,
            solved,
            substitution,
        });
    }

    /// Records an order-zero normalization whose solved expression is given
    /// directly (the base-coframe solves that precede all recurrences); the
    /// conjugate rule is added automatically.
    pub fn axiom(&mut self, symbol: MCSymbol, substitution: MCExpr) -> Result<(), FrameError> {
        if self.is_solved(&symbol) {
            return Err(FrameError::AlreadySolved {
                symbol: format!("{symbol}"),
            });
        }
        let sb = symbol.conj();
        self.record(
            None,
            Scalar::zero(self.backend),
            symbol,
            substitution.clone(),
            symbol,
            SolvedState::Full,
        );
        if sb != symbol && !self.is_solved(&sb) {
            self.rules.insert(sb, substitution.conjugate());
        }
        Ok(())
    }

    /// Solves the relation `rel = 0` (imposing `V_target ≡ value`) for the
    /// given form, together with its conjugate.  The pair of coefficients of
    /// `(s, conj(s))` must be fiber constants with an invertible pair
    /// determinant; vanishing determinant is the branch-split signal.
    pub fn solve(
        &mut self,
        rel: &MCExpr,
        symbol: &MCSymbol,
        target: Option<Monomial>,
        value: Scalar,
    ) -> Result<(), FrameError> {
        if let Some(j) = target {
            self.pin_fiber(j, value.clone())?;
        }
        let e = self.substitute(rel)?;
        let s = *symbol;
        let sb = s.conj();
        if self.is_solved(&s) || self.is_solved(&sb) {
            return Err(FrameError::AlreadySolved {
                symbol: format!("{s}"),
            });
        }
        let c = self.fiber_constant(&e.coefficient(&s), &s)?;
        if sb == s {
            if c.is_zero() {
                return Err(FrameError::NotSolvable {
                    symbol: format!("{s}"),
                });
            }
            let rest = e.without_symbol(&s);
            let sub = rest.neg().scale(&c.inv()?)?;
            self.record(
                target.map(|j| (j, None)),
                value,
                s,
                sub,
                s,
                SolvedState::Full,
            );
            return Ok(());
        }
        let d = self.fiber_constant(&e.coefficient(&sb), &sb)?;
        // the pair system  c·s + d·s̄ = −r,  d̄·s + c̄·s̄ = −r̄
        let det = c.try_mul(&c.conj())?.try_sub(&d.try_mul(&d.conj())?)?;
        if det.is_zero() {
            return Err(FrameError::NotSolvable {
                symbol: format!("{s}"),
            });
        }
        let r = e.without_symbol(&s).without_symbol(&sb);
        let rbar = r.conjugate();
        // s = (d·r̄ − c̄·r)/det
        let sub_s = rbar
            .scale(&d)?
            .sub(&r.scale(&c.conj())?)?
            .scale(&det.inv()?)?;
        let sub_sb = sub_s.conjugate();
        self.record(
            target.map(|j| (j, None)),
            value,
            s,
            sub_s,
            s,
            SolvedState::Full,
        );
        self.rules.insert(sb, sub_sb);
        Ok(())
    }

    /// Solves the real or imaginary part of the relation `rel = 0` (imposing
    /// `Re/Im V_target ≡ value`) against the conjugate pair of the given
    /// form; one real degree of freedom is eliminated, leaving the
    /// complementary part of the pair free.
    pub fn solve_part(
        &mut self,
        rel: &MCExpr,
        symbol: &MCSymbol,
        part: RealPart,
        target: Option<Monomial>,
        value: Scalar,
    ) -> Result<(), FrameError> {
        let e0 = self.substitute(rel)?;
        let ebar = e0.conjugate();
        let half = Scalar::from_int(2, self.backend).inv()?;
        let e = match part {
            RealPart::Re => e0.add(&ebar)?.scale(&half)?,
            RealPart::Im => {
                let two_i = Scalar::i(self.backend).try_mul(&Scalar::from_int(2, self.backend))?;
                e0.sub(&ebar)?.scale(&two_i.inv()?)?
            }
        };
        let s = symbol.canonical();
        let sb = s.conj();
        let s_free = !self.is_solved(&s);
        let sb_free = sb == s || !self.is_solved(&sb);
        let (ruled, sub, new_state) = match (s_free, sb_free && sb != s) {
            (true, true) => {
                let a = self.fiber_constant(&e.coefficient(&s), &s)?;
                let b = self.fiber_constant(&e.coefficient(&sb), &sb)?;
                // the coefficient of the targeted real part must be nonzero
                let part_coeff = match part {
                    RealPart::Re => a.try_add(&b)?,
                    RealPart::Im => Scalar::i(self.backend).try_mul(&a.try_sub(&b)?)?,
                };
                if part_coeff.is_zero() {
                    return Err(FrameError::NotSolvable {
                        symbol: format!("{} {s}", match part {
                            RealPart::Re => "Re",
                            RealPart::Im => "Im",
                        }),
                    });
                }
                let rest = e.without_symbol(&s).without_symbol(&sb);
                if !a.is_zero() {
                    // s ↦ −(b·s̄ + rest)/a
                    let sub = MCExpr::term(sb, LiftedPoly::constant(b))
                        .add(&rest)?
                        .neg()
                        .scale(&a.inv()?)?;
                    (
                        s,
                        sub,
                        match part {
                            RealPart::Re => SolvedState::ReSolved,
                            RealPart::Im => SolvedState::ImSolved,
                        },
                    )
                } else {
                    let sub = rest.neg().scale(&b.inv()?)?;
                    (
                        sb,
                        sub,
                        match part {
                            RealPart::Re => SolvedState::ReSolved,
                            RealPart::Im => SolvedState::ImSolved,
                        },
                    )
                }
            }
            (true, false) | (false, true) => {
                // one of the pair is already eliminated: this part solve
                // determines the remaining form completely
                let t = if s_free { s } else { sb };
                let c = self.fiber_constant(&e.coefficient(&t), &t)?;
                if c.is_zero() {
                    return Err(FrameError::NotSolvable {
                        symbol: format!("{t}"),
                    });
                }
                let sub = e.without_symbol(&t).neg().scale(&c.inv()?)?;
                (t, sub, SolvedState::Full)
            }
            (false, false) => {
                return Err(FrameError::AlreadySolved {
                    symbol: format!("{s}"),
                });
            }
        };
        self.record(
            target.map(|j| (j, Some(part))),
            value,
            ruled,
            sub,
            s,
            new_state,
        );
        Ok(())
    }

    /// The unsolved real directions among the basis forms of derivative
    /// order at most `max_order`, labelled the way the residual-group
    /// descriptions write them (`Re mu1_{Z1}`, `alpha_{U}`, ...).
    pub fn residual_labels(&self, max_order: u32) -> Vec<String> {
        let mut out = Vec::new();
        for s in enumerate_basis(max_order) {
            let sb = s.conj();
            match self.state.get(&s) {
                Some(SolvedState::Full) => {}
                Some(SolvedState::ReSolved) => out.push(format!("Im {s}")),
                Some(SolvedState::ImSolved) => out.push(format!("Re {s}")),
                None => {
                    // an un-stated pair may still be fully ruled (conjugate
                    // rules recorded without a canonical state, e.g. axioms)
                    if self.is_solved(&s) && (sb == s || self.is_solved(&sb)) {
                        continue;
                    }
                    if sb == s {
                        out.push(format!("{s}"));
                    } else {
                        out.push(format!("Re {s}"));
                        out.push(format!("Im {s}"));
                    }
                }
            }
        }
        out
    }
}

/// Enumerates the canonical representatives of the basis forms with
/// derivative order at most `max_order`.
fn enumerate_basis(max_order: u32) -> Vec<MCSymbol> {
    let mut out = Vec::new();
    out.push(MCSymbol::new(MCFamily::Gamma, SrcIndex::EMPTY));
    let n = max_order;
    for family in [MCFamily::Mu1, MCFamily::Mu2, MCFamily::Alpha] {
        for a in 0..=n {
            for b in 0..=(n - a) {
                for c in 0..=(n - a - b) {
                    let mut idx = SrcIndex::EMPTY;
                    idx.0[SrcVar::Z1.index()] = a;
                    idx.0[SrcVar::Z2.index()] = b;
                    idx.0[SrcVar::U.index()] = c;
                    let s = MCSymbol::new(family, idx);
                    if s.is_basis() {
                        out.push(s);
                    }
                }
            }
        }
    }
    // the alpha_{U^j V} family
    for j in 0..n {
        let mut idx = SrcIndex::EMPTY;
        idx.0[SrcVar::U.index()] = j;
        idx.0[SrcVar::V.index()] = 1;
        let s = MCSymbol::new(MCFamily::Alpha, idx);
        if s.is_basis() {
            out.push(s);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Standard low-order normalizations
// ---------------------------------------------------------------------------

/// The normalizations available on every admissible hypersurface before any
/// branching: the base-coframe solves of the order-zero forms, then — in
/// ascending total order up to `max_order` — `alpha_{U^{j} V}` from
/// `V_{U^{j+1}} ≡ 0` and `alpha_{Z^ℓ U^k}` from `V_{Z^ℓ U^k} ≡ 0`.
pub fn standard_ledger(pro: &Prolongation, max_order: u32) -> Result<Ledger, FrameError> {
    let backend = pro.backend();
    let mut led = Ledger::new(backend);
    let zero = Scalar::zero(backend);
    let minus_one = Scalar::from_int(-1, backend);

    // order zero: gamma from dV = varpi + gamma with V ≡ 0, and the
    // base-coframe normalizations of mu^j and alpha
    let rel0 = recurrence(pro, &Monomial::ONE, &led, false)?;
    led.solve(
        &rel0,
        &MCSymbol::new(MCFamily::Gamma, SrcIndex::EMPTY),
        Some(Monomial::ONE),
        zero.clone(),
    )?;
    for (family, base) in [
        (MCFamily::Mu1, SrcVar::Z1),
        (MCFamily::Mu2, SrcVar::Z2),
        (MCFamily::Alpha, SrcVar::U),
    ] {
        led.axiom(
            MCSymbol::new(family, SrcIndex::EMPTY),
            MCExpr::horizontal_term(
                Horizontal::Base(base),
                LiftedPoly::constant(minus_one.clone()),
            ),
        )?;
    }

    for k in 1..=max_order {
        // V_{U^k} ≡ 0 solves alpha_{U^{k-1} V}
        let mut ju = Monomial::ONE;
        for _ in 0..k {
            ju = ju.mul(&Monomial::var(Var::U));
        }
        let mut idx = SrcIndex::EMPTY;
        idx.0[SrcVar::U.index()] = k - 1;
        idx.0[SrcVar::V.index()] = 1;
        let rel = recurrence(pro, &ju, &led, false)?;
        led.solve(&rel, &MCSymbol::new(MCFamily::Alpha, idx), Some(ju), zero.clone())?;

        // V_{Z1^a Z2^b U^c} ≡ 0 (a + b ≥ 1) solves alpha_{Z1^a Z2^b U^c}
        for a in 0..=k {
            for b in 0..=(k - a) {
                let c = k - a - b;
                if a + b == 0 {
                    continue;
                }
                let j = Monomial::new(a, b, 0, 0, c);
                let mut idx = SrcIndex::EMPTY;
                idx.0[SrcVar::Z1.index()] = a;
                idx.0[SrcVar::Z2.index()] = b;
                idx.0[SrcVar::U.index()] = c;
                let rel = recurrence(pro, &j, &led, false)?;
                led.solve(&rel, &MCSymbol::new(MCFamily::Alpha, idx), Some(j), zero.clone())?;
            }
        }
    }
    Ok(led)
}

// ---------------------------------------------------------------------------
// The relative invariant
// ---------------------------------------------------------------------------

/// The defect of the relative-invariant identity
/// `dΔ ≡ (2 alpha_U − mu1_{Z1} − mu2_{Z2} − mubar1_{Zb1} − mubar2_{Zb2})·Δ`
/// for the Levi determinant `Δ = V_{Z1 Zb1}V_{Z2 Zb2} − V_{Z1 Zb2}V_{Z2 Zb1}`,
/// computed modulo horizontal forms via the product rule on the order-two
/// recurrence relations; the identity holds exactly when the result is zero.
pub fn relative_invariant_defect(pro: &Prolongation, ledger: &Ledger) -> Result<MCExpr, FrameError> {
    let backend = pro.backend();
    let j11 = Monomial::new(1, 0, 1, 0, 0);
    let j12 = Monomial::new(1, 0, 0, 1, 0);
    let j21 = Monomial::new(0, 1, 1, 0, 0);
    let j22 = Monomial::new(0, 1, 0, 1, 0);

    let mut lhs = MCExpr::zero(backend);
    for (ja, jb, sign) in [(j11, j22, 1i64), (j12, j21, -1)] {
        let ra = recurrence(pro, &ja, ledger, true)?;
        let rb = recurrence(pro, &jb, ledger, true)?;
        let term = ra
            .scale_poly(&LiftedPoly::invariant(jb, backend))?
            .add(&rb.scale_poly(&LiftedPoly::invariant(ja, backend))?)?;
        lhs = lhs.add(&term.scale(&Scalar::from_int(sign, backend))?)?;
    }

    let delta = LiftedPoly::invariant(j11, backend)
        .mul(&LiftedPoly::invariant(j22, backend))?
        .sub(&LiftedPoly::invariant(j12, backend).mul(&LiftedPoly::invariant(j21, backend))?)?;
    let mut rhs = MCExpr::zero(backend);
    let factors: [(MCFamily, SrcVar, i64); 5] = [
        (MCFamily::Alpha, SrcVar::U, 2),
        (MCFamily::Mu1, SrcVar::Z1, -1),
        (MCFamily::Mu2, SrcVar::Z2, -1),
        (MCFamily::Mubar1, SrcVar::Zb1, -1),
        (MCFamily::Mubar2, SrcVar::Zb2, -1),
    ];
    for (family, v, n) in factors {
        let coeff = delta.scale(&Scalar::from_int(n, backend))?;
        rhs = rhs.add(&MCExpr::term(
            MCSymbol::new(family, SrcIndex::var(v)),
            coeff,
        ))?;
    }
    let rhs = ledger.substitute(&rhs)?.drop_horizontal();
    Ok(lhs.sub(&rhs)?)
}

/// Restricts a relation to the fiber recorded in the ledger: pinned
/// invariants are replaced by their values; the unpinned multi-indices that
/// remain symbolic are reported alongside.
pub fn restrict_to_fiber(
    rel: &MCExpr,
    ledger: &Ledger,
) -> Result<(MCExpr, Vec<Monomial>), FrameError> {
    let e = ledger.substitute(rel)?;
    let unpinned = e.jets();
    Ok((e, unpinned))
}
