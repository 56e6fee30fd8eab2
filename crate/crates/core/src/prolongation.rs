//! Symbolic infinitesimal machinery: holomorphic vector-field components,
//! their determining-equation canonicalization, total derivatives, and the
//! recursively prolonged coefficients acting on jet coordinates.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Mutex;

use crate::error::AlgebraError;
use crate::poly::{Monomial, Var};
use crate::scalar::{Backend, Scalar};

/// Source variables of the vector-field components: z1, z2, z̄1, z̄2, u, v.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SrcVar {
    Z1,
    Z2,
    Zb1,
    Zb2,
    U,
    V,
}

impl SrcVar {
    pub const ALL: [SrcVar; 6] = [
        SrcVar::Z1,
        SrcVar::Z2,
        SrcVar::Zb1,
        SrcVar::Zb2,
        SrcVar::U,
        SrcVar::V,
    ];

    pub(crate) fn index(self) -> usize {
        match self {
            SrcVar::Z1 => 0,
            SrcVar::Z2 => 1,
            SrcVar::Zb1 => 2,
            SrcVar::Zb2 => 3,
            SrcVar::U => 4,
            SrcVar::V => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SrcVar::Z1 => "z1",
            SrcVar::Z2 => "z2",
            SrcVar::Zb1 => "zb1",
            SrcVar::Zb2 => "zb2",
            SrcVar::U => "u",
            SrcVar::V => "v",
        }
    }

    fn from_jet_var(v: Var) -> SrcVar {
        match v {
            Var::Z1 => SrcVar::Z1,
            Var::Z2 => SrcVar::Z2,
            Var::Zb1 => SrcVar::Zb1,
            Var::Zb2 => SrcVar::Zb2,
            Var::U => SrcVar::U,
        }
    }

    pub fn conj(self) -> SrcVar {
        match self {
            SrcVar::Z1 => SrcVar::Zb1,
            SrcVar::Z2 => SrcVar::Zb2,
            SrcVar::Zb1 => SrcVar::Z1,
            SrcVar::Zb2 => SrcVar::Z2,
            other => other,
        }
    }
}

/// Symmetric multi-index over the six source variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct SrcIndex(pub [u32; 6]);

impl SrcIndex {
    pub const EMPTY: SrcIndex = SrcIndex([0; 6]);

    pub fn var(v: SrcVar) -> SrcIndex {
        SrcIndex::EMPTY.raised(v)
    }

    pub fn exponent(&self, v: SrcVar) -> u32 {
        self.0[v.index()]
    }

    pub fn raised(&self, v: SrcVar) -> SrcIndex {
        let mut out = *self;
        out.0[v.index()] += 1;
        out
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn conj(&self) -> SrcIndex {
        let [z1, z2, zb1, zb2, u, v] = self.0;
        SrcIndex([zb1, zb2, z1, z2, u, v])
    }
}

impl fmt::Display for SrcIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in SrcVar::ALL {
            let e = self.exponent(v);
            if e == 1 {
                write!(f, "{}", v.name())?;
            } else if e > 1 {
                write!(f, "{}^{}", v.name(), e)?;
            }
        }
        Ok(())
    }
}

/// The six vector-field components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VFComponent {
    Xi1,
    Xi2,
    Xibar1,
    Xibar2,
    Eta,
    Phi,
}

impl VFComponent {
    pub fn name(self) -> &'static str {
        match self {
            VFComponent::Xi1 => "xi1",
            VFComponent::Xi2 => "xi2",
            VFComponent::Xibar1 => "xibar1",
            VFComponent::Xibar2 => "xibar2",
            VFComponent::Eta => "eta",
            VFComponent::Phi => "phi",
        }
    }

    fn conj(self) -> VFComponent {
        match self {
            VFComponent::Xi1 => VFComponent::Xibar1,
            VFComponent::Xi2 => VFComponent::Xibar2,
            VFComponent::Xibar1 => VFComponent::Xi1,
            VFComponent::Xibar2 => VFComponent::Xi2,
            real => real,
        }
    }
}

/// A canonical derivative of a vector-field component: all determining
/// equations already applied, so only basis derivatives occur.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct VFDerivative {
    pub component: VFComponent,
    pub index: SrcIndex,
}

impl VFDerivative {
    /// Whether this derivative belongs to the canonical basis.
    pub fn is_basis(&self) -> bool {
        let i = &self.index;
        let nz = i.exponent(SrcVar::Z1) + i.exponent(SrcVar::Z2);
        let nzb = i.exponent(SrcVar::Zb1) + i.exponent(SrcVar::Zb2);
        let nv = i.exponent(SrcVar::V);
        match self.component {
            VFComponent::Xi1 | VFComponent::Xi2 => nzb == 0 && nv == 0,
            VFComponent::Xibar1 | VFComponent::Xibar2 => nz == 0 && nv == 0,
            VFComponent::Eta => {
                if nz > 0 && nzb > 0 {
                    false
                } else if nz + nzb > 0 {
                    nv == 0
                } else {
                    nv <= 1
                }
            }
            VFComponent::Phi => i.order() == 0,
        }
    }

    fn conj(&self) -> VFDerivative {
        VFDerivative {
            component: self.component.conj(),
            index: self.index.conj(),
        }
    }
}

impl fmt::Display for VFDerivative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.index.order() == 0 {
            write!(f, "{}", self.component.name())
        } else {
            write!(f, "{}_{{{}}}", self.component.name(), self.index)
        }
    }
}

/// Rewrites a raw component derivative into canonical form. Returns `None`
/// when the determining equations force it to vanish, otherwise the basis
/// derivative together with the scalar it picked up.
pub fn canonicalize_derivative(
    component: VFComponent,
    index: &SrcIndex,
    backend: Backend,
) -> Result<Option<(Scalar, VFDerivative)>, AlgebraError> {
    let nz = index.exponent(SrcVar::Z1) + index.exponent(SrcVar::Z2);
    let nzb = index.exponent(SrcVar::Zb1) + index.exponent(SrcVar::Zb2);
    let nv = index.exponent(SrcVar::V);
    let i = Scalar::i(backend);
    let mut coeff = Scalar::one(backend);
    let mut out = *index;
    out.0[SrcVar::V.index()] = 0;

    match component {
        VFComponent::Xi1 | VFComponent::Xi2 => {
            // holomorphic in z, w: z̄-derivatives vanish, ∂v = i ∂u
            if nzb > 0 {
                return Ok(None);
            }
            for _ in 0..nv {
                coeff = coeff.try_mul(&i)?;
            }
            out.0[SrcVar::U.index()] += nv;
        }
        VFComponent::Xibar1 | VFComponent::Xibar2 => {
            if nz > 0 {
                return Ok(None);
            }
            for _ in 0..nv {
                coeff = coeff.try_mul(&i.neg())?;
            }
            out.0[SrcVar::U.index()] += nv;
        }
        VFComponent::Eta => {
            // mixed z/z̄ derivatives vanish
            if nz > 0 && nzb > 0 {
                return Ok(None);
            }
            if nz > 0 {
                for _ in 0..nv {
                    coeff = coeff.try_mul(&i)?;
                }
                out.0[SrcVar::U.index()] += nv;
            } else if nzb > 0 {
                for _ in 0..nv {
                    coeff = coeff.try_mul(&i.neg())?;
                }
                out.0[SrcVar::U.index()] += nv;
            } else {
                // pure (u, v): fold v-pairs via ∂vv = −∂uu
                let pairs = nv / 2;
                if pairs % 2 == 1 {
                    coeff = coeff.neg();
                }
                out.0[SrcVar::U.index()] += 2 * pairs;
                out.0[SrcVar::V.index()] = nv % 2;
            }
        }
        VFComponent::Phi => {
            if index.order() == 0 {
                return Ok(Some((
                    coeff,
                    VFDerivative {
                        component: VFComponent::Phi,
                        index: SrcIndex::EMPTY,
                    },
                )));
            }
            // peel one index and hand the rest to the matching η-derivative
            let v = SrcVar::ALL
                .iter()
                .find(|v| index.exponent(**v) > 0)
                .copied()
                .expect("positive order");
            let mut rest = *index;
            rest.0[v.index()] -= 1;
            let (factor, mapped) = match v {
                SrcVar::Z1 | SrcVar::Z2 => (i.neg(), v),
                SrcVar::Zb1 | SrcVar::Zb2 => (i.clone(), v),
                SrcVar::U => (Scalar::one(backend).neg(), SrcVar::V),
                SrcVar::V => (Scalar::one(backend), SrcVar::U),
            };
            let eta_index = rest.raised(mapped);
            return match canonicalize_derivative(VFComponent::Eta, &eta_index, backend)? {
                None => Ok(None),
                Some((c, d)) => Ok(Some((c.try_mul(&factor)?, d))),
            };
        }
    }
    Ok(Some((coeff, VFDerivative { component, index: out })))
}

/// A product of jet coordinates v_K, as multi-set of multi-indices.
pub type JetProduct = BTreeMap<Monomial, u32>;

/// A formal expression, linear in the vector field: each term is
/// scalar × product of jet coordinates × one basis component derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct ProlongedCoefficient {
    backend: Backend,
    terms: BTreeMap<(JetProduct, VFDerivative), Scalar>,
}

impl ProlongedCoefficient {
    pub fn zero(backend: Backend) -> Self {
        ProlongedCoefficient {
            backend,
            terms: BTreeMap::new(),
        }
    }

    /// The order-zero coefficient: the φ component itself.
    pub fn phi0(backend: Backend) -> Self {
        let mut pc = ProlongedCoefficient::zero(backend);
        pc.push(
            Scalar::one(backend),
            JetProduct::new(),
            VFDerivative {
                component: VFComponent::Phi,
                index: SrcIndex::EMPTY,
            },
        );
        pc
    }

    /// A single-term expression.
    pub fn term(c: Scalar, jets: JetProduct, d: VFDerivative) -> Self {
        let mut pc = ProlongedCoefficient::zero(c.backend());
        pc.push(c, jets, d);
        pc
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    fn push(&mut self, c: Scalar, jets: JetProduct, d: VFDerivative) {
        if c.is_zero() {
            return;
        }
        let key = (jets, d);
        match self.terms.remove(&key) {
            None => {
                self.terms.insert(key, c);
            }
            Some(prev) => {
                let sum = prev.try_add(&c).expect("same backend");
                if !sum.is_zero() {
                    self.terms.insert(key, sum);
                }
            }
        }
    }

    pub fn add(&self, o: &ProlongedCoefficient) -> ProlongedCoefficient {
        let mut out = self.clone();
        for ((jets, d), c) in &o.terms {
            out.push(c.clone(), jets.clone(), *d);
        }
        out
    }

    pub fn neg(&self) -> ProlongedCoefficient {
        let mut out = ProlongedCoefficient::zero(self.backend);
        for ((jets, d), c) in &self.terms {
            out.push(c.neg(), jets.clone(), *d);
        }
        out
    }

    /// Multiplies every term by the jet coordinate v_K.
    pub fn mul_jet(&self, k: &Monomial) -> ProlongedCoefficient {
        let mut out = ProlongedCoefficient::zero(self.backend);
        for ((jets, d), c) in &self.terms {
            let mut j = jets.clone();
            *j.entry(*k).or_insert(0) += 1;
            out.push(c.clone(), j, *d);
        }
        out
    }

    /// Coefficient (a scalar) of a given jet product × derivative pair.
    pub fn coefficient(&self, jets: &JetProduct, d: &VFDerivative) -> Scalar {
        self.terms
            .get(&(jets.clone(), *d))
            .cloned()
            .unwrap_or_else(|| Scalar::zero(self.backend))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(JetProduct, VFDerivative), &Scalar)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Termwise conjugation: swaps barred and unbarred everywhere.
    pub fn conjugate(&self) -> ProlongedCoefficient {
        let mut out = ProlongedCoefficient::zero(self.backend);
        for ((jets, d), c) in &self.terms {
            let cj: JetProduct = jets.iter().map(|(k, e)| (k.conj(), *e)).collect();
            out.push(c.conj(), cj, d.conj());
        }
        out
    }

    /// Highest jet-coordinate order appearing in any term.
    pub fn max_jet_order(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|(jets, _)| jets.keys().map(|k| k.degree()))
            .max()
            .unwrap_or(0)
    }

    /// Highest component-derivative order appearing in any term.
    pub fn max_derivative_order(&self) -> u32 {
        self.terms
            .keys()
            .map(|(_, d)| d.index.order())
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for ProlongedCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((jets, d), c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (k, e) in jets {
                let mut idx = String::new();
                for v in crate::poly::Var::ALL {
                    for _ in 0..k.exponent(v) {
                        idx.push_str(v.name());
                    }
                }
                if *e == 1 {
                    write!(f, "*v_{{{idx}}}")?;
                } else {
                    write!(f, "*v_{{{idx}}}^{e}")?;
                }
            }
            write!(f, "*{d}")?;
        }
        Ok(())
    }
}

/// Total derivative D_a of an expression, with v treated as v(z, z̄, u):
/// jet coordinates gain the index a, component derivatives expand by the
/// chain rule F ↦ F_a + F_v·v_a and are re-canonicalized.
pub fn total_derivative(
    expr: &ProlongedCoefficient,
    a: Var,
) -> Result<ProlongedCoefficient, AlgebraError> {
    let backend = expr.backend;
    let va = Monomial::var(a);
    let sa = SrcVar::from_jet_var(a);
    let mut out = ProlongedCoefficient::zero(backend);
    for ((jets, d), c) in &expr.terms {
        // product rule over the jet coordinates
        for (k, e) in jets {
            let mut rest = jets.clone();
            if *e == 1 {
                rest.remove(k);
            } else {
                rest.insert(*k, e - 1);
            }
            *rest.entry(k.mul(&va)).or_insert(0) += 1;
            let factor = Scalar::from_int(*e as i64, backend);
            out.push(c.try_mul(&factor)?, rest, *d);
        }
        // chain rule on the component derivative: F_a + F_v · v_a
        if let Some((cc, dd)) = canonicalize_derivative(d.component, &d.index.raised(sa), backend)?
        {
            out.push(c.try_mul(&cc)?, jets.clone(), dd);
        }
        if let Some((cc, dd)) =
            canonicalize_derivative(d.component, &d.index.raised(SrcVar::V), backend)?
        {
            let mut j = jets.clone();
            *j.entry(va).or_insert(0) += 1;
            out.push(c.try_mul(&cc)?, j, dd);
        }
    }
    Ok(out)
}

/// Expression for D_a applied to a bare component (ξ^j, ξ̄^j or η).
fn total_derivative_of_component(
    component: VFComponent,
    a: Var,
    backend: Backend,
) -> Result<ProlongedCoefficient, AlgebraError> {
    let mut bare = ProlongedCoefficient::zero(backend);
    bare.push(
        Scalar::one(backend),
        JetProduct::new(),
        VFDerivative {
            component,
            index: SrcIndex::EMPTY,
        },
    );
    total_derivative(&bare, a)
}

/// One prolongation step: given the coefficient for the multi-index J,
/// produce the coefficient for (J, a).
pub fn prolong_once(
    pc: &ProlongedCoefficient,
    j: &Monomial,
    a: Var,
) -> Result<ProlongedCoefficient, AlgebraError> {
    let backend = pc.backend;
    let mut out = total_derivative(pc, a)?;
    let transports = [
        (VFComponent::Xi1, Var::Z1),
        (VFComponent::Xi2, Var::Z2),
        (VFComponent::Xibar1, Var::Zb1),
        (VFComponent::Xibar2, Var::Zb2),
        (VFComponent::Eta, Var::U),
    ];
    for (component, v) in transports {
        let jet = j.mul(&Monomial::var(v));
        let da = total_derivative_of_component(component, a, backend)?;
        out = out.add(&da.mul_jet(&jet).neg());
    }
    Ok(out)
}

/// Memoizing computer of the prolonged coefficients, recursively from the
/// order-zero component.
pub struct Prolongation {
    backend: Backend,
    memo: Mutex<BTreeMap<Monomial, ProlongedCoefficient>>,
}

impl Prolongation {
    pub fn new(backend: Backend) -> Self {
        Prolongation {
            backend,
            memo: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// The prolonged coefficient attached to the jet coordinate v_J.
    pub fn phi_prolonged(&self, j: &Monomial) -> Result<ProlongedCoefficient, AlgebraError> {
        if j.degree() == 0 {
            return Ok(ProlongedCoefficient::phi0(self.backend));
        }
        if let Some(pc) = self.memo.lock().unwrap().get(j) {
            return Ok(pc.clone());
        }
        // reduce by the last variable with a positive exponent
        let v = Var::ALL
            .iter()
            .rev()
            .find(|v| j.exponent(**v) > 0)
            .copied()
            .expect("positive degree");
        let mut prev = *j;
        prev.0[v.index()] -= 1;
        let base = self.phi_prolonged(&prev)?;
        let pc = prolong_once(&base, &prev, v)?;
        self.memo
            .lock()
            .unwrap()
            .entry(*j)
            .or_insert_with(|| pc.clone());
        Ok(pc)
    }
}
