//! Constructive descent along a projector/solver system — the classical
//! Tate–Sen axioms (TS1)–(TS3) in executable form, generic over an abstract
//! datum: averaging over a finite group, iterative decompletion against the
//! projector, a translation/uniqueness certificate, and the chained full
//! descent for a mixed (finite group × procyclic) action.
//!
//! Two concrete instances live alongside the engine:
//!
//! * [`BivariateDatum`] — the model ring on a nonnegative-X window.  The
//!   descended subring is the Y-free layer, the projector is
//!   [`ModelElement::y_free_part`], and `gamma_c - 1` is inverted on the
//!   complement by triangular back-substitution on Y-degree
//!   ([`gamma_solve`]).  Losses: `l2 = 0` (the projector is a term filter),
//!   `l3 = max_j v_p(c^j - 1)` over the window's Y-degrees.
//! * [`PairDatum`] — two copies of the bivariate ring with Z/2 swapping the
//!   coordinates: the smallest instance with a nontrivial finite layer.
//!   Its partition element `alpha = (1, 0)` satisfies the averaging axiom
//!   with no filtration loss (`l1 = 0`).
//!
//! Windows here must have `x_lo = 0`.  On the nonnegative-X subring the
//! monomials dropped by the window form an ideal, so the truncated product
//! is associative, the group actions are ring endomorphisms of the honest
//! quotient, and the filtration gauge `min (v_p + x)` is superadditive —
//! all three are load-bearing for the conjugation algebra below.  A window
//! with `x_lo < 0` has none of these properties (a dropped `X^{x_hi}` can
//! re-enter through a negative power), so datum construction rejects it.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};

use crate::error::{CoreError, Result};
use crate::ring::{ModelElement, Truncation};

/// Ambient-ring operations a descent datum must provide.  `gauge` is the
/// filtration valuation defining the ideals `I^k`; `None` means the element
/// is zero (gauge infinity).  It must be superadditive under `mul`.
pub trait DescentRing {
    type Elem: Clone + PartialEq + core::fmt::Debug;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem>;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem>;
    fn gauge(&self, a: &Self::Elem) -> Option<i64>;

    /// Hard cap on every iteration in the engine (default policy: `4N`).
    /// Exceeding it is an error, never a silent partial result.
    fn iteration_cap(&self) -> u32;
}

/// The procyclic layer: a generator action `gamma`, an idempotent projector
/// onto the descended subring that commutes with `gamma`, and a solver for
/// `gamma - 1` on the projector's kernel image, with its filtration losses.
pub trait TateSenDatum: DescentRing {
    fn gamma(&self, a: &Self::Elem) -> Result<Self::Elem>;

    /// The projector `R`: idempotent, linear over the descended subring,
    /// commuting with `gamma`; drops the gauge by at most `l2`.
    fn project(&self, a: &Self::Elem) -> Result<Self::Elem>;

    /// Returns `y` with `(gamma - 1)(y) = x`, defined for `x` in the image
    /// of `1 - R`; drops the gauge by at most `l3`.
    fn inv_gamma_minus_one(&self, a: &Self::Elem) -> Result<Self::Elem>;

    /// Equality test for translation-lemma conclusions.  The bootstrap
    /// `w(C) >= min(w(C) + 1, theta - l3)` stabilizes `l3` digits shy of
    /// the depth `theta` that `is_zero` equalities hold to, so a datum with
    /// a nontrivial diagonal loss certifies conclusions at that reduced
    /// depth.  Defaults to the full equality.
    fn conclusion_is_zero(&self, a: &Self::Elem) -> bool {
        self.is_zero(a)
    }

    fn loss_l2(&self) -> i64;
    fn loss_l3(&self) -> i64;
}

/// The finite layer: an action of a finite group, indexed `0..order` with
/// `0` the identity, and the averaging loss `l1` of its partition element.
pub trait FiniteActionDatum: DescentRing {
    fn group_order(&self) -> usize;
    fn act(&self, g: usize, a: &Self::Elem) -> Result<Self::Elem>;
    fn loss_l1(&self) -> i64;
}

/// Dense square matrix over a descent datum's element type.  All arithmetic
/// takes the datum explicitly, since the element type alone does not carry
/// its ring structure.
#[derive(Debug, Clone, PartialEq)]
pub struct DescMat<E> {
    d: usize,
    entries: Vec<E>,
}

impl<E: Clone + PartialEq + core::fmt::Debug> DescMat<E> {
    pub fn identity<R: DescentRing<Elem = E>>(d: usize, ring: &R) -> Self {
        let mut entries = vec![ring.zero(); d * d];
        for i in 0..d {
            entries[i * d + i] = ring.one();
        }
        DescMat { d, entries }
    }

    pub fn zero<R: DescentRing<Elem = E>>(d: usize, ring: &R) -> Self {
        DescMat { d, entries: vec![ring.zero(); d * d] }
    }

    pub fn from_entries(d: usize, entries: Vec<E>) -> Result<Self> {
        if d == 0 || entries.len() != d * d {
            return Err(CoreError::RankMismatch);
        }
        Ok(DescMat { d, entries })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entry(&self, i: usize, j: usize) -> &E {
        &self.entries[i * self.d + j]
    }

    pub fn entries(&self) -> impl Iterator<Item = &E> {
        self.entries.iter()
    }

    pub fn map<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&E) -> Result<E>,
    {
        let mut entries = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            entries.push(f(e)?);
        }
        Ok(DescMat { d: self.d, entries })
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.d != other.d {
            return Err(CoreError::RankMismatch);
        }
        Ok(())
    }

    pub fn add<R: DescentRing<Elem = E>>(&self, other: &Self, ring: &R) -> Result<Self> {
        self.check_dim(other)?;
        let mut entries = Vec::with_capacity(self.entries.len());
        for (a, b) in self.entries.iter().zip(&other.entries) {
            entries.push(ring.add(a, b)?);
        }
        Ok(DescMat { d: self.d, entries })
    }

    pub fn sub<R: DescentRing<Elem = E>>(&self, other: &Self, ring: &R) -> Result<Self> {
        self.check_dim(other)?;
        let mut entries = Vec::with_capacity(self.entries.len());
        for (a, b) in self.entries.iter().zip(&other.entries) {
            entries.push(ring.add(a, &ring.neg(b))?);
        }
        Ok(DescMat { d: self.d, entries })
    }

    pub fn mul<R: DescentRing<Elem = E>>(&self, other: &Self, ring: &R) -> Result<Self> {
        self.check_dim(other)?;
        let d = self.d;
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = ring.zero();
                for k in 0..d {
                    let term = ring.mul(self.entry(i, k), other.entry(k, j))?;
                    acc = ring.add(&acc, &term)?;
                }
                entries.push(acc);
            }
        }
        Ok(DescMat { d, entries })
    }

    /// Left multiplication of every entry by a ring scalar.
    pub fn scalar_mul<R: DescentRing<Elem = E>>(&self, c: &E, ring: &R) -> Result<Self> {
        self.map(|e| ring.mul(c, e))
    }

    pub fn is_zero<R: DescentRing<Elem = E>>(&self, ring: &R) -> bool {
        self.entries.iter().all(|e| ring.is_zero(e))
    }

    /// Identity test at the value level: the diagonal differs from 1 and the
    /// off-diagonal from 0 by exact (tracked) zeros.  Bit-level comparison
    /// would be wrong here — conjugation arithmetic narrows claim precision
    /// without changing values.
    pub fn is_identity<R: DescentRing<Elem = E>>(&self, ring: &R) -> bool {
        let one = ring.one();
        for i in 0..self.d {
            for j in 0..self.d {
                let e = self.entry(i, j);
                let ok = if i == j {
                    match ring.add(e, &ring.neg(&one)) {
                        Ok(diff) => ring.is_zero(&diff),
                        Err(_) => false,
                    }
                } else {
                    ring.is_zero(e)
                };
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    /// Minimum gauge over the nonzero entries; `None` for the zero matrix.
    pub fn min_gauge<R: DescentRing<Elem = E>>(&self, ring: &R) -> Option<i64> {
        self.entries.iter().filter_map(|e| ring.gauge(e)).min()
    }

    /// Inverse of `1 - E` for `E = 1 - self` killed by the window (either
    /// gauge-positive or supported in positive Y-degrees), by the geometric
    /// series; `NoConvergence` if the powers survive to the cap.
    pub fn invert_near_one<R: DescentRing<Elem = E>>(&self, ring: &R) -> Result<Self> {
        let id = Self::identity(self.d, ring);
        let e = id.sub(self, ring)?;
        let mut sum = id.clone();
        let mut power = e.clone();
        let cap = ring.iteration_cap() as u64 + 4;
        let mut k = 0u64;
        while !power.is_zero(ring) {
            if k > cap {
                return Err(CoreError::NoConvergence);
            }
            sum = sum.add(&power, ring)?;
            power = power.mul(&e, ring)?;
            k += 1;
        }
        debug_assert!(self.mul(&sum, ring).map(|m| m.is_identity(ring)).unwrap_or(false));
        Ok(sum)
    }
}

/// Minimum gauge of `U_g - 1` across a cocycle family; `None` when every
/// value is the identity (the trivialized state).
fn family_gauge<R: DescentRing>(family: &[DescMat<R::Elem>], ring: &R) -> Result<Option<i64>> {
    let mut out: Option<i64> = None;
    for m in family {
        let diff = m.sub(&DescMat::identity(m.dim(), ring), ring)?;
        if let Some(g) = diff.min_gauge(ring) {
            out = Some(match out {
                None => g,
                Some(o) => o.min(g),
            });
        }
    }
    Ok(out)
}

/// Trivialize a cocycle of the finite group by iterated averaging: each pass
/// replaces the family by its conjugate under `M_Q = sum_g g(alpha) U_g` and
/// gains at least one filtration unit, at a one-time loss of `l1` on the
/// accumulated basis.
///
/// Preconditions: `U_id = 1`, `sum_g g(alpha) = 1`, and
/// `gauge(U_g - 1) > l1` for every `g`.  Errors: `NotCloseEnough` when the
/// gauge gate fails, `NoConvergence` when a pass fails to gain or the cap is
/// reached.
pub fn finite_average_trivialize<D: FiniteActionDatum>(
    u: &[DescMat<D::Elem>],
    alpha: &D::Elem,
    datum: &D,
) -> Result<DescMat<D::Elem>> {
    let order = datum.group_order();
    if order == 0 || u.len() != order {
        return Err(CoreError::Malformed("cocycle family size must equal the group order"));
    }
    let d = u[0].dim();
    if u.iter().any(|m| m.dim() != d) {
        return Err(CoreError::RankMismatch);
    }
    if !u[0].is_identity(datum) {
        return Err(CoreError::Malformed("cocycle value at the identity must be 1"));
    }
    let mut acted_sum = datum.zero();
    for g in 0..order {
        acted_sum = datum.add(&acted_sum, &datum.act(g, alpha)?)?;
    }
    let defect = datum.add(&acted_sum, &datum.neg(&datum.one()))?;
    if !datum.is_zero(&defect) {
        return Err(CoreError::Malformed("alpha is not a partition of unity"));
    }
    let id = DescMat::identity(d, datum);
    if order == 1 {
        return Ok(id);
    }

    let l1 = datum.loss_l1();
    let trivialized =
        |family: &[DescMat<D::Elem>]| family.iter().all(|m| m.is_identity(datum));
    let mut family: Vec<DescMat<D::Elem>> = u.to_vec();
    let mut current = family_gauge(&family, datum)?;
    if let Some(g0) = current {
        if !trivialized(&family) && g0 <= l1 {
            return Err(CoreError::NotCloseEnough);
        }
    }
    let mut basis = id.clone();
    for _ in 0..datum.iteration_cap() {
        if trivialized(&family) {
            return Ok(basis);
        }
        let mut mq = DescMat::zero(d, datum);
        for (g, value) in family.iter().enumerate() {
            let weight = datum.act(g, alpha)?;
            mq = mq.add(&value.scalar_mul(&weight, datum)?, datum)?;
        }
        let mq_inv = mq.invert_near_one(datum)?;
        for (g, value) in family.iter_mut().enumerate() {
            let acted = mq.map(|e| datum.act(g, e))?;
            *value = mq_inv.mul(value, datum)?.mul(&acted, datum)?;
        }
        basis = basis.mul(&mq, datum)?;
        if trivialized(&family) {
            return Ok(basis);
        }
        let next = family_gauge(&family, datum)?;
        match (current, next) {
            (Some(before), Some(after)) if after > before => current = Some(after),
            _ => return Err(CoreError::NoConvergence),
        }
    }
    Err(CoreError::NoConvergence)
}

/// [`decompletion_descend`] plus the per-pass complement gauges, for callers
/// that audit the convergence profile (monotone gain, iteration count).
pub fn decompletion_descend_traced<D: TateSenDatum>(
    u: &DescMat<D::Elem>,
    datum: &D,
) -> Result<(DescMat<D::Elem>, DescMat<D::Elem>, Vec<i64>)> {
    let d = u.dim();
    let id = DescMat::identity(d, datum);
    let complement = |m: &DescMat<D::Elem>| -> Result<DescMat<D::Elem>> {
        m.map(|e| {
            let r = datum.project(e)?;
            datum.add(e, &datum.neg(&r))
        })
    };

    let a = u.sub(&id, datum)?;
    if complement(&a)?.is_zero(datum) {
        // Already descended: idempotence, no gauge demands.
        return Ok((id, u.clone(), Vec::new()));
    }
    let delta = 1;
    let gate = if d >= 2 {
        // The non-commutative cross terms A.V - V.A need the full margin.
        match a.min_gauge(datum) {
            Some(g) => g >= 2 * datum.loss_l2() + 2 * datum.loss_l3() + delta,
            None => true,
        }
    } else {
        // Commutative case: those cross terms cancel, so only the descended
        // part of U - 1 must be small (or absent); the pure-complement tail
        // terminates structurally because each pass doubles its minimum
        // Y-degree and the Y-window is finite.
        let descended = a.map(|e| datum.project(e))?;
        match descended.min_gauge(datum) {
            None => true,
            Some(g) => g >= datum.loss_l2() + datum.loss_l3() + delta,
        }
    };
    if !gate {
        return Err(CoreError::NotCloseEnough);
    }

    let mut current = u.clone();
    let mut basis = id.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..datum.iteration_cap() {
        let diff = current.sub(&id, datum)?;
        let comp = complement(&diff)?;
        if comp.is_zero(datum) {
            converged = true;
            break;
        }
        trace.push(comp.min_gauge(datum).expect("nonzero complement has a gauge"));
        // Split U - 1 = R(U - 1) + (1 - gamma)(V) and conjugate by 1 + V.
        let v = comp.map(|e| datum.inv_gamma_minus_one(&datum.neg(e)))?;
        let step = id.add(&v, datum)?;
        let step_inv = step.invert_near_one(datum)?;
        let gamma_step = step.map(|e| datum.gamma(e))?;
        current = step_inv.mul(&current, datum)?.mul(&gamma_step, datum)?;
        basis = basis.mul(&step, datum)?;
    }
    if !converged {
        return Err(CoreError::NoConvergence);
    }
    // Recompute the descended value from the accumulated basis, so the
    // output relation M^{-1} U gamma(M) = W is exact by construction; then
    // re-verify that the recomputed value has no complement part left.
    let basis_inv = basis.invert_near_one(datum)?;
    let gamma_basis = basis.map(|e| datum.gamma(e))?;
    let w = basis_inv.mul(u, datum)?.mul(&gamma_basis, datum)?;
    if !complement(&w.sub(&id, datum)?)?.is_zero(datum) {
        return Err(CoreError::NoConvergence);
    }
    Ok((basis, w, trace))
}

/// Descend a cocycle value on the procyclic generator: returns `(M, W)` with
/// `W = M^{-1} U gamma(M)` supported entirely in the descended subring,
/// exactly at truncation.
///
/// Preconditions (with gain `delta = 1`): for `d >= 2`,
/// `gauge(U - 1) >= 2 l2 + 2 l3 + delta`; for `d = 1` the cross terms that
/// need that margin cancel, so only the descended part of `U - 1` is gated,
/// at `l2 + l3 + delta`.  An already-descended `U` returns `(1, U)`
/// unconditionally.  Errors: `NotCloseEnough`, `NoConvergence` (cap).
pub fn decompletion_descend<D: TateSenDatum>(
    u: &DescMat<D::Elem>,
    datum: &D,
) -> Result<(DescMat<D::Elem>, DescMat<D::Elem>)> {
    let (m, w, _) = decompletion_descend_traced(u, datum)?;
    Ok((m, w))
}

/// The translation lemma as a certificate: checks the hypothesis
/// `gamma(B) = V1 B V2` for a descended pair `V1, V2` within `l3 + 1` of the
/// identity, and reports whether `B - R(B) = 0` at truncation — the
/// uniqueness conclusion.  A failed hypothesis is `HypothesisFails`; a
/// non-descended `B` under a valid hypothesis is an honest `false`.
pub fn translate_uniqueness_check<D: TateSenDatum>(
    b: &DescMat<D::Elem>,
    v1: &DescMat<D::Elem>,
    v2: &DescMat<D::Elem>,
    datum: &D,
) -> Result<bool> {
    let d = b.dim();
    if v1.dim() != d || v2.dim() != d {
        return Err(CoreError::RankMismatch);
    }
    let id = DescMat::identity(d, datum);
    for side in [v1, v2] {
        let projected = side.map(|e| datum.project(e))?;
        if !side.sub(&projected, datum)?.is_zero(datum) {
            return Err(CoreError::HypothesisFails("translation pair must be descended"));
        }
        if let Some(g) = side.sub(&id, datum)?.min_gauge(datum) {
            if g < datum.loss_l3() + 1 {
                return Err(CoreError::HypothesisFails("translation pair too far from 1"));
            }
        }
    }
    let gamma_b = b.map(|e| datum.gamma(e))?;
    let rhs = v1.mul(b, datum)?.mul(v2, datum)?;
    if !gamma_b.sub(&rhs, datum)?.is_zero(datum) {
        return Err(CoreError::HypothesisFails("gamma(B) != V1 B V2"));
    }
    let projected = b.map(|e| datum.project(e))?;
    let diff = b.sub(&projected, datum)?;
    let certified = diff.entries().all(|e| datum.conclusion_is_zero(e));
    Ok(certified)
}

/// Output of [`full_descend`]: the accumulated basis `M = M1 M2`, the
/// transformed finite-layer values `V_g = M^{-1} U_g g(M)` (trivial when the
/// descent succeeds), and the descended generator value `V_gamma`.
#[derive(Debug, Clone)]
pub struct FullDescent<E> {
    pub basis: DescMat<E>,
    pub v_sigma: Vec<DescMat<E>>,
    pub v_gamma: DescMat<E>,
}

/// Full descent for a cocycle on the mixed generator set: first trivialize
/// the finite layer by averaging, then decomplete the transformed generator
/// value, and certify each finite-layer value through the cross-relation
/// `V_g g(V_gamma) = V_gamma gamma(V_g)` fed to the translation lemma.
///
/// Precondition: every finite-layer value satisfies
/// `gauge(U_g - 1) >= l1 + 2 l2 + 2 l3`; the decompletion stage applies its
/// own gate to the transformed generator value.  Errors are propagated.
pub fn full_descend<D: TateSenDatum + FiniteActionDatum>(
    u_sigma: &[DescMat<D::Elem>],
    u_gamma: &DescMat<D::Elem>,
    alpha: &D::Elem,
    datum: &D,
) -> Result<FullDescent<D::Elem>> {
    let order = datum.group_order();
    if u_sigma.len() != order {
        return Err(CoreError::Malformed("cocycle family size must equal the group order"));
    }
    let d = u_gamma.dim();
    if u_sigma.iter().any(|m| m.dim() != d) {
        return Err(CoreError::RankMismatch);
    }
    let id = DescMat::identity(d, datum);
    let gate = datum.loss_l1() + 2 * datum.loss_l2() + 2 * datum.loss_l3();
    for m in u_sigma {
        if let Some(g) = m.sub(&id, datum)?.min_gauge(datum) {
            if g < gate {
                return Err(CoreError::NotCloseEnough);
            }
        }
    }

    let m1 = finite_average_trivialize(u_sigma, alpha, datum)?;
    let m1_inv = m1.invert_near_one(datum)?;
    let gamma_m1 = m1.map(|e| datum.gamma(e))?;
    let u_prime = m1_inv.mul(u_gamma, datum)?.mul(&gamma_m1, datum)?;
    let (m2, v_gamma) = decompletion_descend(&u_prime, datum)?;

    let basis = m1.mul(&m2, datum)?;
    let basis_inv = basis.invert_near_one(datum)?;
    let v_gamma_inv = v_gamma.invert_near_one(datum)?;
    let mut v_sigma = Vec::with_capacity(order);
    for g in 0..order {
        let acted_basis = basis.map(|e| datum.act(g, e))?;
        let value = basis_inv.mul(&u_sigma[g], datum)?.mul(&acted_basis, datum)?;
        let acted_gamma = v_gamma.map(|e| datum.act(g, e))?;
        if !translate_uniqueness_check(&value, &v_gamma_inv, &acted_gamma, datum)? {
            return Err(CoreError::HypothesisFails(
                "finite-layer value fails the uniqueness certificate",
            ));
        }
        v_sigma.push(value);
    }
    Ok(FullDescent { basis, v_sigma, v_gamma })
}

/// Solve `(gamma_c - 1)(y) = x` for `x` with zero Y-free part, by
/// back-substitution on Y-degree: `gamma_c(Y^j) = c^j Y^j + (higher)`, so
/// `gamma_c - 1` is triangular with diagonal `c^j - 1` and ascending layers
/// determine `y` uniquely, at a filtration loss of at most
/// `max_j v_p(c^j - 1)`.
pub fn gamma_solve(x: &ModelElement, c: u64) -> Result<ModelElement> {
    let t = x.trunc();
    if !x.y_free_part().is_zero() {
        return Err(CoreError::HypothesisFails("solver input must have zero Y-free part"));
    }
    if c < 2 {
        return Err(CoreError::SingularDiagonal);
    }
    if x.is_zero() {
        return Ok(ModelElement::zero(t));
    }
    let diag = diagonal_entries(t, c)?;
    let mut sol = ModelElement::zero(t);
    for j in 1..t.y_hi {
        let residual = x.sub(&sol.apply_gamma_minus_one_int(c))?;
        let mut layer = ModelElement::zero(t);
        for (xx, yy, coeff) in residual.terms() {
            if yy == j {
                layer.insert(xx, yy, coeff.div_bigint(&diag[(j - 1) as usize])?);
            }
        }
        sol = sol.add(&layer)?;
    }
    if !x.sub(&sol.apply_gamma_minus_one_int(c))?.is_zero() {
        return Err(CoreError::NoConvergence);
    }
    Ok(sol)
}

/// The exact integers `c^j - 1` for `1 <= j < y_hi`, rejecting any that is
/// zero at the window's precision (it would be an unusable pivot).
fn diagonal_entries(t: Truncation, c: u64) -> Result<Vec<BigInt>> {
    let p_big = BigUint::from(t.p);
    let zero_big = BigUint::from(0u32);
    let c_big = BigUint::from(c);
    let mut out = Vec::new();
    let mut power = BigUint::from(1u32);
    for _ in 1..t.y_hi {
        power = &power * &c_big;
        let entry = &power - 1u32;
        let mut v = 0i64;
        let mut rest = entry.clone();
        while &rest % &p_big == zero_big {
            rest /= &p_big;
            v += 1;
        }
        if v >= t.prec as i64 {
            return Err(CoreError::SingularDiagonal);
        }
        out.push(BigInt::from(entry));
    }
    Ok(out)
}

/// The model-ring descent instance: `gamma = gamma_c` on a nonnegative-X
/// window, descended subring the Y-free layer.
///
/// The working window's cap is the arithmetic budget; convergence and
/// equality are judged at the (possibly smaller) target precision.  Built
/// over a widened window via [`BivariateDatum::over_widened`], the iteration
/// keeps digit headroom for its per-pass diagonal divisions while still
/// stopping as soon as the complement vanishes at the precision the caller
/// cares about.
#[derive(Debug, Clone)]
pub struct BivariateDatum {
    trunc: Truncation,
    target_prec: u32,
    c: u64,
    l3: i64,
}

impl BivariateDatum {
    /// Requires `x_lo = 0` (see the module notes) and an integer `c >= 2`;
    /// computes `l3` from the diagonal valuations, rejecting a diagonal
    /// entry that vanishes at precision.  The target precision is the
    /// window's own cap.
    pub fn new(trunc: Truncation, c: u64) -> Result<Self> {
        Self::with_target(trunc, c, trunc.prec)
    }

    /// A datum working in `public.widened()` and judged at `public.prec`.
    /// Elements must be built in [`Self::trunc`]; restrict final outputs to
    /// [`Self::target`].
    pub fn over_widened(public: Truncation, c: u64) -> Result<Self> {
        Self::with_target(public.widened(), c, public.prec)
    }

    /// A datum working in `trunc` but judging zero-ness at `target_prec`.
    pub fn with_target(trunc: Truncation, c: u64, target_prec: u32) -> Result<Self> {
        if trunc.x_lo != 0 {
            return Err(CoreError::Malformed("descent window must have x_lo = 0"));
        }
        if c < 2 {
            return Err(CoreError::Malformed("gamma exponent must be an integer >= 2"));
        }
        if target_prec == 0 || target_prec > trunc.prec {
            return Err(CoreError::Malformed("target precision must be in 1..=prec"));
        }
        let p_big = BigUint::from(trunc.p);
        let zero_big = BigUint::from(0u32);
        let c_big = BigUint::from(c);
        let mut l3 = 0i64;
        let mut power = BigUint::from(1u32);
        for _ in 1..trunc.y_hi {
            power = &power * &c_big;
            let mut rest = &power - 1u32;
            let mut v = 0i64;
            while &rest % &p_big == zero_big {
                rest /= &p_big;
                v += 1;
            }
            if v >= target_prec as i64 {
                return Err(CoreError::SingularDiagonal);
            }
            l3 = l3.max(v);
        }
        Ok(BivariateDatum { trunc, target_prec, c, l3 })
    }

    /// The working window elements must be built in.
    pub fn trunc(&self) -> Truncation {
        self.trunc
    }

    /// The working window restricted to the target precision: project final
    /// outputs here.
    pub fn target(&self) -> Truncation {
        Truncation { prec: self.target_prec, ..self.trunc }
    }

    pub fn c(&self) -> u64 {
        self.c
    }
}

impl DescentRing for BivariateDatum {
    type Elem = ModelElement;

    fn zero(&self) -> ModelElement {
        ModelElement::zero(self.trunc)
    }

    fn one(&self) -> ModelElement {
        ModelElement::one(self.trunc)
    }

    fn is_zero(&self, a: &ModelElement) -> bool {
        a.terms().all(|(_, _, c)| c.valuation() >= self.target_prec as i64)
    }

    fn add(&self, a: &ModelElement, b: &ModelElement) -> Result<ModelElement> {
        a.add(b)
    }

    fn neg(&self, a: &ModelElement) -> ModelElement {
        a.neg()
    }

    fn mul(&self, a: &ModelElement, b: &ModelElement) -> Result<ModelElement> {
        a.mul(b)
    }

    fn gauge(&self, a: &ModelElement) -> Option<i64> {
        a.padic_gauge()
    }

    fn iteration_cap(&self) -> u32 {
        4 * self.target_prec
    }
}

impl TateSenDatum for BivariateDatum {
    fn gamma(&self, a: &ModelElement) -> Result<ModelElement> {
        Ok(a.apply_gamma_int(self.c))
    }

    fn project(&self, a: &ModelElement) -> Result<ModelElement> {
        Ok(a.y_free_part())
    }

    fn inv_gamma_minus_one(&self, a: &ModelElement) -> Result<ModelElement> {
        gamma_solve(a, self.c)
    }

    fn conclusion_is_zero(&self, a: &ModelElement) -> bool {
        let depth = self.target_prec as i64 - self.l3;
        a.terms().all(|(_, _, c)| c.valuation() >= depth)
    }

    fn loss_l2(&self) -> i64 {
        0
    }

    fn loss_l3(&self) -> i64 {
        self.l3
    }
}

/// The trivial finite layer, so the full-descent chain degenerates to pure
/// decompletion on this datum.
impl FiniteActionDatum for BivariateDatum {
    fn group_order(&self) -> usize {
        1
    }

    fn act(&self, g: usize, a: &ModelElement) -> Result<ModelElement> {
        if g != 0 {
            return Err(CoreError::Malformed("group index out of range"));
        }
        Ok(a.clone())
    }

    fn loss_l1(&self) -> i64 {
        0
    }
}

/// Two copies of the bivariate ring with the swap action of Z/2 on the
/// coordinates; `gamma` and the projector act componentwise.
#[derive(Debug, Clone)]
pub struct PairDatum {
    base: BivariateDatum,
}

impl PairDatum {
    pub fn new(trunc: Truncation, c: u64) -> Result<Self> {
        Ok(PairDatum { base: BivariateDatum::new(trunc, c)? })
    }

    /// See [`BivariateDatum::over_widened`].
    pub fn over_widened(public: Truncation, c: u64) -> Result<Self> {
        Ok(PairDatum { base: BivariateDatum::over_widened(public, c)? })
    }

    pub fn base(&self) -> &BivariateDatum {
        &self.base
    }

    /// The averaging partition element `alpha = (1, 0)`:
    /// `alpha + swap(alpha) = 1`, integral, so `l1 = 0`.
    pub fn alpha(&self) -> (ModelElement, ModelElement) {
        (ModelElement::one(self.base.trunc), ModelElement::zero(self.base.trunc))
    }
}

impl DescentRing for PairDatum {
    type Elem = (ModelElement, ModelElement);

    fn zero(&self) -> Self::Elem {
        (self.base.zero(), self.base.zero())
    }

    fn one(&self) -> Self::Elem {
        (self.base.one(), self.base.one())
    }

    fn is_zero(&self, a: &Self::Elem) -> bool {
        self.base.is_zero(&a.0) && self.base.is_zero(&a.1)
    }

    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem> {
        Ok((a.0.add(&b.0)?, a.1.add(&b.1)?))
    }

    fn neg(&self, a: &Self::Elem) -> Self::Elem {
        (a.0.neg(), a.1.neg())
    }

    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem> {
        Ok((a.0.mul(&b.0)?, a.1.mul(&b.1)?))
    }

    fn gauge(&self, a: &Self::Elem) -> Option<i64> {
        match (a.0.padic_gauge(), a.1.padic_gauge()) {
            (None, g) => g,
            (g, None) => g,
            (Some(x), Some(y)) => Some(x.min(y)),
        }
    }

    fn iteration_cap(&self) -> u32 {
        self.base.iteration_cap()
    }
}

impl TateSenDatum for PairDatum {
    fn gamma(&self, a: &Self::Elem) -> Result<Self::Elem> {
        Ok((self.base.gamma(&a.0)?, self.base.gamma(&a.1)?))
    }

    fn project(&self, a: &Self::Elem) -> Result<Self::Elem> {
        Ok((a.0.y_free_part(), a.1.y_free_part()))
    }

    fn inv_gamma_minus_one(&self, a: &Self::Elem) -> Result<Self::Elem> {
        Ok((gamma_solve(&a.0, self.base.c)?, gamma_solve(&a.1, self.base.c)?))
    }

    fn conclusion_is_zero(&self, a: &Self::Elem) -> bool {
        self.base.conclusion_is_zero(&a.0) && self.base.conclusion_is_zero(&a.1)
    }

    fn loss_l2(&self) -> i64 {
        0
    }

    fn loss_l3(&self) -> i64 {
        self.base.l3
    }
}

impl FiniteActionDatum for PairDatum {
    fn group_order(&self) -> usize {
        2
    }

    fn act(&self, g: usize, a: &Self::Elem) -> Result<Self::Elem> {
        match g {
            0 => Ok(a.clone()),
            1 => Ok((a.1.clone(), a.0.clone())),
            _ => Err(CoreError::Malformed("group index out of range")),
        }
    }

    fn loss_l1(&self) -> i64 {
        0
    }
}
