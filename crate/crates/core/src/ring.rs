//! The truncated bivariate Laurent model of the period rings.
//!
//! Elements live in a rectangular window: X-exponents in `[x_lo, x_hi)`
//! (Laurent), Y-exponents in `[0, y_hi)` (power series), coefficients
//! capped at absolute precision `N`.  Multiplication discards exponents
//! that leave the window on either end, and every stored coefficient is
//! reduced so that nothing is known beyond `p^N`: a term whose coefficient
//! has valuation `>= N` is indistinguishable from zero in the model and is
//! not stored.  An absent coefficient therefore means "zero to working
//! precision".

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{CoreError, Result};
use crate::padic::PadicNumber;

fn is_odd_prime(p: u64) -> bool {
    if p < 3 || p % 2 == 0 {
        return false;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Exact integer binomial coefficient `C(e, k)` for any integer `e`.
fn int_binomial(e: i64, k: u32) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for j in 0..k as i64 {
        num *= BigInt::from(e - j);
        den *= BigInt::from(j + 1);
    }
    debug_assert!((&num % &den).is_zero());
    num / den
}

/// rows[j][k]: Y^k-coefficient of `((1+Y)^c - 1)^j`, exact integers.
fn gamma_int_rows(width: usize, c: u64) -> Vec<Vec<BigInt>> {
    let mut base = alloc::vec![BigInt::zero(); width];
    for k in 1..width {
        base[k] = int_binomial(c as i64, k as u32);
    }
    let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(width);
    let mut row = alloc::vec![BigInt::zero(); width];
    row[0] = BigInt::one();
    rows.push(row);
    for j in 1..width {
        let prev = &rows[j - 1];
        let mut next = alloc::vec![BigInt::zero(); width];
        for (a, ca) in prev.iter().enumerate() {
            if ca.is_zero() {
                continue;
            }
            for (b, cb) in base.iter().enumerate().take(width - a) {
                if !cb.is_zero() {
                    next[a + b] += ca * cb;
                }
            }
        }
        rows.push(next);
    }
    rows
}

/// The shared finite window.  All elements of one computation carry the
/// same `Truncation`; mixing windows is an error, never a coercion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncation {
    pub p: u64,
    pub x_lo: i64,
    pub x_hi: i64,
    pub y_hi: i64,
    pub prec: u32,
}

impl Truncation {
    pub fn new(p: u64, x_lo: i64, x_hi: i64, y_hi: i64, prec: u32) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(CoreError::Malformed("p must be an odd prime >= 3"));
        }
        if !(x_lo <= 0 && 0 < x_hi) {
            return Err(CoreError::Malformed("need x_lo <= 0 < x_hi"));
        }
        if y_hi < 1 {
            return Err(CoreError::Malformed("need y_hi >= 1"));
        }
        if prec < 1 {
            return Err(CoreError::Malformed("need precision >= 1"));
        }
        Ok(Truncation { p, x_lo, x_hi, y_hi, prec })
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        self.x_lo <= x && x < self.x_hi && 0 <= y && y < self.y_hi
    }

    /// The same exponent window with the precision cap raised far enough to
    /// cover the coefficient-denominator depth any chain of in-window
    /// products can reach.  Element constructions with p-power denominators
    /// (series inverses, geometric tails, Frobenius products) compute at the
    /// widened cap and re-truncate, so that the result's coefficients carry
    /// their full `N` absolute digits instead of decayed claims.
    pub fn widened(&self) -> Truncation {
        let span = (self.x_hi - self.x_lo) + self.y_hi;
        let extra = 3 * span.unsigned_abs() as u32 + 16;
        Truncation { prec: self.prec + extra, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelElement {
    trunc: Truncation,
    terms: BTreeMap<(i64, i64), PadicNumber>,
}

impl ModelElement {
    pub fn zero(trunc: Truncation) -> Self {
        ModelElement { trunc, terms: BTreeMap::new() }
    }

    pub fn one(trunc: Truncation) -> Self {
        Self::monomial(trunc, 0, 0, PadicNumber::one(trunc.p, trunc.prec as i64))
    }

    pub fn constant(trunc: Truncation, value: i64) -> Self {
        Self::monomial(trunc, 0, 0, PadicNumber::from_i64(trunc.p, value, trunc.prec as i64))
    }

    pub fn monomial(trunc: Truncation, x: i64, y: i64, coeff: PadicNumber) -> Self {
        let mut e = Self::zero(trunc);
        e.insert(x, y, coeff);
        e
    }

    pub fn trunc(&self) -> Truncation {
        self.trunc
    }

    pub fn prime(&self) -> u64 {
        self.trunc.p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Terms in (x, y)-sorted order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, i64, &PadicNumber)> {
        self.terms.iter().map(|(&(x, y), c)| (x, y, c))
    }

    pub fn coeff(&self, x: i64, y: i64) -> Option<&PadicNumber> {
        self.terms.get(&(x, y))
    }

    /// Accumulate `coeff` onto the `(x, y)` slot, dropping exponents outside
    /// the window and capping the coefficient at absolute precision `N`.
    pub fn insert(&mut self, x: i64, y: i64, coeff: PadicNumber) {
        debug_assert!(coeff.prime() == self.trunc.p, "coefficient prime mismatch");
        if !self.trunc.contains(x, y) {
            return;
        }
        let capped = coeff.reduce_abs(self.trunc.prec as i64);
        if capped.is_zero() {
            return;
        }
        match self.terms.remove(&(x, y)) {
            None => {
                self.terms.insert((x, y), capped);
            }
            Some(old) => {
                let sum = old.add(&capped);
                if !sum.is_zero() {
                    self.terms.insert((x, y), sum);
                }
            }
        }
    }

    /// Raw constructor for deserialization: the terms must already be the
    /// canonical sparse form (sorted, in-window, nonzero, capped), and are
    /// not renormalized, so round-trips are bit-exact.
    pub fn from_sorted_terms(
        trunc: Truncation,
        terms: Vec<(i64, i64, PadicNumber)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut last: Option<(i64, i64)> = None;
        for (x, y, c) in terms {
            if c.prime() != trunc.p {
                return Err(CoreError::PrimeMismatch);
            }
            if !trunc.contains(x, y) {
                return Err(CoreError::Malformed("term exponent outside window"));
            }
            if c.is_zero() {
                return Err(CoreError::Malformed("stored zero coefficient"));
            }
            if c.abs_prec() > trunc.prec as i64 {
                return Err(CoreError::Malformed("coefficient precision above window cap"));
            }
            if let Some(prev) = last {
                if prev >= (x, y) {
                    return Err(CoreError::Malformed("terms not sorted by (x, y)"));
                }
            }
            last = Some((x, y));
            map.insert((x, y), c);
        }
        Ok(ModelElement { trunc, terms: map })
    }

    fn check_compat(&self, other: &Self) -> Result<()> {
        if self.trunc.p != other.trunc.p {
            return Err(CoreError::PrimeMismatch);
        }
        if self.trunc != other.trunc {
            return Err(CoreError::TruncationMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compat(other)?;
        let mut out = self.clone();
        for (x, y, c) in other.terms() {
            out.insert(x, y, c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::zero(self.trunc);
        for (x, y, c) in self.terms() {
            out.insert(x, y, c.neg());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compat(other)?;
        let mut out = Self::zero(self.trunc);
        for (x1, y1, c1) in self.terms() {
            for (x2, y2, c2) in other.terms() {
                let (x, y) = (x1 + x2, y1 + y2);
                if !self.trunc.contains(x, y) {
                    continue;
                }
                out.insert(x, y, c1.mul(c2));
            }
        }
        Ok(out)
    }

    pub fn scalar_mul(&self, c: &PadicNumber) -> Self {
        debug_assert!(c.prime() == self.trunc.p);
        let mut out = Self::zero(self.trunc);
        for (x, y, k) in self.terms() {
            out.insert(x, y, k.mul(c));
        }
        out
    }

    pub fn mul_monomial(&self, dx: i64, dy: i64, c: &PadicNumber) -> Self {
        let mut out = Self::zero(self.trunc);
        for (x, y, k) in self.terms() {
            out.insert(x + dx, y + dy, k.mul(c));
        }
        out
    }

    /// Multiply every coefficient by an exact integer.
    pub fn mul_int(&self, k: i64) -> Self {
        let mut out = Self::zero(self.trunc);
        for (x, y, c) in self.terms() {
            out.insert(x, y, c.mul_i64(k));
        }
        out
    }

    /// Project onto a (typically smaller) window over the same prime.
    pub fn restrict_to(&self, trunc: Truncation) -> Result<Self> {
        if trunc.p != self.trunc.p {
            return Err(CoreError::PrimeMismatch);
        }
        let mut out = Self::zero(trunc);
        for (x, y, c) in self.terms() {
            out.insert(x, y, c.clone());
        }
        Ok(out)
    }

    /// Inverse in the window: requires a pivot term `c * X^{i0}` (`Y`-free)
    /// such that the rest is topologically nilpotent in the window sense
    /// after dividing by it.  Two candidates are tried — the term at the
    /// globally minimal X-exponent (the dominant term of the period-style
    /// elements) and the term of minimal valuation (the dominant term of
    /// near-identity elements, whose low exponents can carry deep tails).
    /// Newton iteration from the pivot inverse, verified exactly.
    pub fn invert(&self) -> Result<Self> {
        let mut candidates: Vec<(i64, PadicNumber)> = Vec::new();
        match self.terms.iter().next() {
            None => return Err(CoreError::NotInvertible),
            Some((&(i0, j0), c)) if j0 == 0 => candidates.push((i0, c.clone())),
            Some(_) => {}
        }
        if let Some((x, _, c)) = self
            .terms()
            .filter(|(_, y, _)| *y == 0)
            .min_by_key(|(x, _, c)| (c.valuation(), *x))
        {
            if candidates.iter().all(|(i, _)| *i != x) {
                candidates.push((x, c.clone()));
            }
        }
        let one = Self::one(self.trunc);
        let span = (self.trunc.x_hi - self.trunc.x_lo + self.trunc.y_hi) as u64
            * self.trunc.prec as u64;
        let cap = 64 - span.leading_zeros() + 3;
        for (i0, pivot) in candidates {
            if !self.trunc.contains(-i0, 0) {
                continue;
            }
            let seed = match pivot.inv() {
                Ok(inv) => inv,
                Err(_) => continue,
            };
            let mut y = Self::monomial(self.trunc, -i0, 0, seed);
            for _ in 0..cap {
                let r = one.sub(&self.mul(&y)?)?;
                if r.is_zero() {
                    return Ok(y);
                }
                y = y.add(&y.mul(&r)?)?;
            }
            if one.sub(&self.mul(&y)?)?.is_zero() {
                return Ok(y);
            }
        }
        Err(CoreError::NotInvertible)
    }

    /// `(1 + Y)^e` for an exact integer exponent (negative allowed): the
    /// coefficients are exact integer binomials, so no precision is lost.
    pub fn one_plus_y_int_pow(trunc: Truncation, e: i64) -> Self {
        let mut out = Self::zero(trunc);
        for k in 0..trunc.y_hi {
            let c = int_binomial(e, k as u32);
            out.insert(0, k, PadicNumber::from_bigint(trunc.p, &c, trunc.prec as i64));
        }
        out
    }

    /// `self^e` for `self = 1 + nilpotent`, with a p-adic exponent:
    /// `sum_k C(e, k) (self - 1)^k`.  Requires the deviation from 1 to be
    /// topologically nilpotent in the window (constant term with positive
    /// valuation at worst).
    pub fn pow_binomial(&self, e: &PadicNumber) -> Result<Self> {
        let dev = self.sub(&Self::one(self.trunc))?;
        if let Some(c) = dev.coeff(0, 0) {
            if c.valuation() < 1 {
                return Err(CoreError::NotCloseEnough);
            }
        }
        let mut out = Self::zero(self.trunc);
        let mut power = Self::one(self.trunc);
        let cap = (self.trunc.x_hi - self.trunc.x_lo + self.trunc.y_hi) as u64
            * self.trunc.prec as u64
            + 4;
        let mut k = 0u64;
        loop {
            if power.is_zero() {
                return Ok(out);
            }
            if k > cap {
                return Err(CoreError::NoConvergence);
            }
            let coeff = e.binomial(k)?;
            out = out.add(&power.scalar_mul(&coeff))?;
            power = power.mul(&dev)?;
            k += 1;
        }
    }

    /// Frobenius: `X -> X^p`, `Y -> (1 + Y)^p - 1`, identity on scalars.
    ///
    /// The substitution polynomial has exact integer coefficients, so the
    /// expansion of `((1+Y)^p - 1)^j` is carried as integers and folded in
    /// with digit-preserving integer multiplication: the image coefficients
    /// keep the full relative precision of the source coefficients.
    pub fn apply_phi(&self) -> Self {
        let trunc = self.trunc;
        let p = trunc.p as i64;
        let rows = gamma_int_rows(trunc.y_hi as usize, trunc.p);
        let mut out = Self::zero(trunc);
        for (x, y, c) in self.terms() {
            let xp = x * p;
            if xp < trunc.x_lo || xp >= trunc.x_hi {
                continue;
            }
            for (yy, cc) in rows[y as usize].iter().enumerate() {
                if !cc.is_zero() {
                    out.insert(xp, yy as i64, c.mul_bigint(cc));
                }
            }
        }
        out
    }

    /// `tau^e` for an integer power `e`: `X -> (1 + Y)^e X`, `Y -> Y`.  The
    /// Kummer generator itself is `e = 1`.  As with `apply_phi`, the
    /// binomial weights are exact integers applied digit-preservingly.
    pub fn apply_tau_power(&self, e: i64) -> Self {
        let trunc = self.trunc;
        let mut cache: BTreeMap<i64, Vec<BigInt>> = BTreeMap::new();
        let mut out = Self::zero(trunc);
        for (x, y, c) in self.terms() {
            let weights = cache.entry(x).or_insert_with(|| {
                (0..trunc.y_hi as u32).map(|k| int_binomial(e * x, k)).collect()
            });
            for (yy, cc) in weights.iter().enumerate() {
                if !cc.is_zero() {
                    out.insert(x, y + yy as i64, c.mul_bigint(cc));
                }
            }
        }
        out
    }

    pub fn apply_tau(&self) -> Self {
        self.apply_tau_power(1)
    }

    /// `gamma_c`: `X -> X`, `Y -> (1 + Y)^c - 1` for a p-integral exponent.
    /// (A unit `c` gives a ring automorphism; `c = p` is still a
    /// well-defined endomorphism and is accepted.)
    pub fn apply_gamma(&self, c: &PadicNumber) -> Result<Self> {
        if c.valuation() < 0 {
            return Err(CoreError::HypothesisFails("gamma exponent must be p-integral"));
        }
        let trunc = self.trunc;
        let one_plus_y = Self::monomial(trunc, 0, 1, PadicNumber::one(trunc.p, trunc.prec as i64))
            .add(&Self::one(trunc))?;
        let mut base = one_plus_y.pow_binomial(c)?;
        base.insert(0, 0, PadicNumber::from_i64(trunc.p, -1, trunc.prec as i64));
        let mut powers: Vec<Self> = Vec::with_capacity(trunc.y_hi as usize);
        powers.push(Self::one(trunc));
        for j in 1..trunc.y_hi {
            let prev = powers[(j - 1) as usize].clone();
            powers.push(prev.mul(&base)?);
        }
        let mut out = Self::zero(trunc);
        for (x, y, c0) in self.terms() {
            for (_, yy, cc) in powers[y as usize].terms() {
                out.insert(x, yy, c0.mul(cc));
            }
        }
        Ok(out)
    }

    /// `gamma_c` for an integer exponent, via exact integer substitution
    /// rows as in [`apply_phi`](Self::apply_phi): the expansion of
    /// `((1+Y)^c - 1)^j` is carried as integers and folded in with
    /// digit-preserving integer multiplication.
    pub fn apply_gamma_int(&self, c: u64) -> Self {
        let rows = gamma_int_rows(self.trunc.y_hi as usize, c);
        self.fold_rows(&rows)
    }

    /// `gamma_c - 1` for an integer exponent, applied in a single pass.
    /// The identity is subtracted from the substitution table in exact
    /// integers, so the diagonal weight `c^j - 1` multiplies each source
    /// coefficient digit-preservingly; forming `apply_gamma` and then
    /// subtracting the source would instead cancel `v_p(c^j - 1)` leading
    /// digits out of every claim.
    pub fn apply_gamma_minus_one_int(&self, c: u64) -> Self {
        let mut rows = gamma_int_rows(self.trunc.y_hi as usize, c);
        for (j, row) in rows.iter_mut().enumerate() {
            row[j] -= BigInt::one();
        }
        self.fold_rows(&rows)
    }

    /// Substitute `Y^j -> sum_k rows[j][k] Y^k` with exact integer weights.
    fn fold_rows(&self, rows: &[Vec<BigInt>]) -> Self {
        let mut out = Self::zero(self.trunc);
        for (x, y, c) in self.terms() {
            for (yy, cc) in rows[y as usize].iter().enumerate() {
                if !cc.is_zero() {
                    out.insert(x, yy as i64, c.mul_bigint(cc));
                }
            }
        }
        out
    }

    /// Formal X-derivative, term by term.
    pub fn d_dx(&self) -> Self {
        let mut out = Self::zero(self.trunc);
        for (x, y, c) in self.terms() {
            if x == 0 {
                continue;
            }
            out.insert(x - 1, y, c.mul_i64(x));
        }
        out
    }

    /// Literal monomial test for membership in `(X)^k + (p, X)^{k+1}`:
    /// every term `c X^i Y^j` must satisfy `i >= k` or `v_p(c) + i >= k+1`.
    /// Y-exponents carry no credit here.  Defined on the power-series range
    /// only.
    pub fn ideal_membership(&self, k: u32) -> Result<bool> {
        let k = k as i64;
        for (x, _, c) in self.terms() {
            if x < 0 {
                return Err(CoreError::NegativeExponent);
            }
            if x >= k || c.valuation() + x >= k + 1 {
                continue;
            }
            return Ok(false);
        }
        Ok(true)
    }

    /// Membership in `(X)^k + (p, X)^{k+1}` measured at the level the model
    /// variables lift from: a `Y`-exponent counts `p/(p-1)` X-units, because
    /// the element `Y` lifts one of X-valuation `p/(p-1)`.  Comparisons are
    /// exact integer cross-multiplications by `p - 1`.  Negative X-exponents
    /// contribute no ideal power (they are ring multipliers), which is the
    /// conservative reading.
    pub fn witt_ideal_membership(&self, k: u32) -> bool {
        let p = self.trunc.p as i64;
        let k = k as i64;
        for (x, y, c) in self.terms() {
            let wx = x.max(0);
            let xk = wx * (p - 1) + y * p >= k * (p - 1);
            let pxk1 = (c.valuation() + wx) * (p - 1) + y * p >= (k + 1) * (p - 1);
            if !(xk || pxk1) {
                return false;
            }
        }
        true
    }

    /// Filtration gauge `min (v_p + max(0, x))`; `None` means the element is
    /// zero (gauge infinity).  Superadditive under multiplication on the
    /// nonnegative-X subring.
    pub fn padic_gauge(&self) -> Option<i64> {
        self.terms().map(|(x, _, c)| c.valuation() + x.max(0)).min()
    }

    /// The gauge with Y weighted `p/(p-1)`, scaled by `p - 1` so it stays
    /// an integer: `min (v_p + max(0, x)) (p-1) + y p`.
    pub fn weighted_gauge_scaled(&self) -> Option<i64> {
        let p = self.trunc.p as i64;
        self.terms()
            .map(|(x, y, c)| (c.valuation() + x.max(0)) * (p - 1) + y * p)
            .min()
    }

    /// Smallest Y-degree with a surviving term.
    pub fn min_y_degree(&self) -> Option<i64> {
        self.terms().map(|(_, y, _)| y).min()
    }

    pub fn is_y_free(&self) -> bool {
        self.terms().all(|(_, y, _)| y == 0)
    }

    /// The `Y`-free layer (the descended part in the decompletion instance).
    pub fn y_free_part(&self) -> Self {
        let mut out = Self::zero(self.trunc);
        for (x, y, c) in self.terms() {
            if y == 0 {
                out.insert(x, y, c.clone());
            }
        }
        out
    }

    /// Terms with `y > 0` (the complement of the descended part).
    pub fn y_positive_part(&self) -> Self {
        let mut out = Self::zero(self.trunc);
        for (x, y, c) in self.terms() {
            if y > 0 {
                out.insert(x, y, c.clone());
            }
        }
        out
    }

    /// Terms with nonnegative X-exponent (exponent 0 belongs to this side).
    pub fn x_nonneg_part(&self) -> Self {
        let mut out = Self::zero(self.trunc);
        for (x, y, c) in self.terms() {
            if x >= 0 {
                out.insert(x, y, c.clone());
            }
        }
        out
    }

    /// Terms with strictly negative X-exponent.
    pub fn x_neg_part(&self) -> Self {
        let mut out = Self::zero(self.trunc);
        for (x, y, c) in self.terms() {
            if x < 0 {
                out.insert(x, y, c.clone());
            }
        }
        out
    }

    /// Terms with nonpositive X-exponent.
    pub fn x_nonpos_part(&self) -> Self {
        let mut out = Self::zero(self.trunc);
        for (x, y, c) in self.terms() {
            if x <= 0 {
                out.insert(x, y, c.clone());
            }
        }
        out
    }

    pub fn min_x_exponent(&self) -> Option<i64> {
        self.terms().map(|(x, _, _)| x).min()
    }

    pub fn max_x_exponent(&self) -> Option<i64> {
        self.terms().map(|(x, _, _)| x).max()
    }
}

impl fmt::Display for ModelElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (x, y, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})", c)?;
            if x != 0 {
                write!(f, " X^{}", x)?;
            }
            if y != 0 {
                write!(f, " Y^{}", y)?;
            }
        }
        Ok(())
    }
}
