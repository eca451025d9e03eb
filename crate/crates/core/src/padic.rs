//! Capped-precision p-adic scalars.
//!
//! A nonzero value is stored in the normal form `p^v * u`, where `u` is a
//! unit reduced modulo `p^n`; the value is known modulo `p^{v+n}`, i.e. `v`
//! is the exact valuation and `n` the number of known unit digits.  A value
//! indistinguishable from zero keeps only its absolute-precision bound:
//! `unit = 0`, `n = 0`, and `v` holds the bound (the true valuation is
//! `>= v`).  Two equal values at equal precision always have identical
//! field contents, so structural equality is reserved for serialization;
//! mathematical comparisons go through subtraction and [`PadicNumber::is_zero`].

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{CoreError, Result};

/// Largest number of relative digits a scalar may carry.  Purely a sanity
/// bound: windows in this library use two-digit precisions.
const MAX_REL_DIGITS: i64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicNumber {
    p: u64,
    v: i64,
    unit: BigUint,
    n: u32,
}

/// `p^k` as a big integer.
fn ppow(p: u64, k: u32) -> BigUint {
    BigUint::from(p).pow(k)
}

/// Exact p-valuation and cofactor of a nonzero big integer.
fn split_valuation(p: u64, value: &BigUint) -> (i64, BigUint) {
    debug_assert!(!value.is_zero());
    let bp = BigUint::from(p);
    let mut v = 0i64;
    let mut rest = value.clone();
    loop {
        let (q, r) = rest.div_rem(&bp);
        if r.is_zero() {
            v += 1;
            rest = q;
        } else {
            return (v, rest);
        }
    }
}

/// Inverse of `u` modulo `m` (both positive, coprime).
fn modinv(u: &BigUint, m: &BigUint) -> Option<BigUint> {
    let a = BigInt::from_biguint(Sign::Plus, u.clone());
    let md = BigInt::from_biguint(Sign::Plus, m.clone());
    let eg = a.extended_gcd(&md);
    if !eg.gcd.is_one() {
        return None;
    }
    let mut x = eg.x % &md;
    if x.is_negative() {
        x += &md;
    }
    x.to_biguint()
}

impl PadicNumber {
    /// The tracked zero: indistinguishable from 0 modulo `p^{abs_prec}`.
    pub fn zero(p: u64, abs_prec: i64) -> Self {
        PadicNumber { p, v: abs_prec, unit: BigUint::zero(), n: 0 }
    }

    /// An exact integer, capped at absolute precision `abs_cap`.
    pub fn from_bigint(p: u64, value: &BigInt, abs_cap: i64) -> Self {
        if value.is_zero() {
            return Self::zero(p, abs_cap);
        }
        let mag = value.magnitude();
        let (v, rest) = split_valuation(p, mag);
        if v >= abs_cap {
            return Self::zero(p, abs_cap);
        }
        let n = abs_cap - v;
        debug_assert!(n > 0 && n <= MAX_REL_DIGITS);
        let md = ppow(p, n as u32);
        let mut u = rest % &md;
        if value.is_negative() && !u.is_zero() {
            u = &md - u;
        }
        PadicNumber { p, v, unit: u, n: n as u32 }
    }

    pub fn from_i64(p: u64, value: i64, abs_cap: i64) -> Self {
        Self::from_bigint(p, &BigInt::from(value), abs_cap)
    }

    pub fn one(p: u64, abs_cap: i64) -> Self {
        Self::from_i64(p, 1, abs_cap)
    }

    /// Raw constructor for deserialization: validates but does not
    /// renormalize, so round-trips are bit-exact.
    pub fn from_parts(p: u64, v: i64, unit: BigUint, n: u32) -> Result<Self> {
        if p < 3 || p % 2 == 0 {
            return Err(CoreError::Malformed("prime must be odd and >= 3"));
        }
        if unit.is_zero() {
            if n != 0 {
                return Err(CoreError::Malformed("tracked zero must carry n = 0"));
            }
            return Ok(PadicNumber { p, v, unit, n });
        }
        if n == 0 {
            return Err(CoreError::Malformed("nonzero scalar must carry digits"));
        }
        if unit >= ppow(p, n) {
            return Err(CoreError::Malformed("unit not reduced modulo p^n"));
        }
        if (&unit % p).is_zero() {
            return Err(CoreError::Malformed("unit divisible by p"));
        }
        Ok(PadicNumber { p, v, unit, n })
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.unit.is_zero()
    }

    /// Lower bound for the valuation; exact when the value is nonzero.
    pub fn valuation(&self) -> i64 {
        self.v
    }

    /// The value is known modulo `p^{abs_prec()}`.
    pub fn abs_prec(&self) -> i64 {
        self.v + self.n as i64
    }

    /// Known unit digits (0 for the tracked zero).
    pub fn rel_prec(&self) -> u32 {
        self.n
    }

    pub fn unit(&self) -> &BigUint {
        &self.unit
    }

    /// Forget digits above `p^cap`; may collapse to the tracked zero.
    pub fn reduce_abs(&self, cap: i64) -> Self {
        if cap >= self.abs_prec() {
            return self.clone();
        }
        if self.is_zero() || self.v >= cap {
            return Self::zero(self.p, cap.min(self.abs_prec()));
        }
        let n = (cap - self.v) as u32;
        PadicNumber { p: self.p, v: self.v, unit: &self.unit % ppow(self.p, n), n }
    }

    fn check_prime(&self, other: &Self) {
        assert!(self.p == other.p, "scalar prime mismatch: {} vs {}", self.p, other.p);
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_prime(other);
        if self.is_zero() && other.is_zero() {
            return Self::zero(self.p, self.abs_prec().min(other.abs_prec()));
        }
        if self.is_zero() {
            return other.reduce_abs(self.abs_prec());
        }
        if other.is_zero() {
            return self.reduce_abs(other.abs_prec());
        }
        let m = self.abs_prec().min(other.abs_prec());
        let w = self.v.min(other.v);
        debug_assert!(m > w);
        let md = ppow(self.p, (m - w) as u32);
        let a = (&self.unit * ppow(self.p, (self.v - w) as u32)) % &md;
        let b = (&other.unit * ppow(self.p, (other.v - w) as u32)) % &md;
        let s = (a + b) % &md;
        if s.is_zero() {
            return Self::zero(self.p, m);
        }
        let (dv, rest) = split_valuation(self.p, &s);
        let v = w + dv;
        debug_assert!(v < m);
        let n = (m - v) as u32;
        PadicNumber { p: self.p, v, unit: rest % ppow(self.p, n), n }
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let md = ppow(self.p, self.n);
        PadicNumber { p: self.p, v: self.v, unit: &md - &self.unit, n: self.n }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_prime(other);
        if self.is_zero() || other.is_zero() {
            // `v` is a valuation lower bound for both zero and nonzero
            // operands, so the product is O(p^{v1 + v2 + spare digits}),
            // and the spare digits of a tracked zero are none.
            return Self::zero(self.p, self.v + other.v);
        }
        let n = self.n.min(other.n);
        let md = ppow(self.p, n);
        PadicNumber {
            p: self.p,
            v: self.v + other.v,
            unit: (&self.unit * &other.unit) % md,
            n,
        }
    }

    /// Multiply by an exact machine integer.
    pub fn mul_i64(&self, k: i64) -> Self {
        if k == 0 {
            return Self::zero(self.p, self.abs_prec());
        }
        self.mul_bigint(&BigInt::from(k))
    }

    /// Multiply by an exact big integer (no precision loss beyond the
    /// valuation shift).
    pub fn mul_bigint(&self, k: &BigInt) -> Self {
        if k.is_zero() {
            return Self::zero(self.p, self.abs_prec());
        }
        let (vk, rest) = split_valuation(self.p, k.magnitude());
        if self.is_zero() {
            return Self::zero(self.p, self.abs_prec() + vk);
        }
        let md = ppow(self.p, self.n);
        let mut u = (&self.unit * (rest % &md)) % &md;
        if k.is_negative() && !u.is_zero() {
            u = &md - u;
        }
        PadicNumber { p: self.p, v: self.v + vk, unit: u, n: self.n }
    }

    /// Divide by an exact nonzero big integer; the valuation drops by
    /// `v_p(k)` and the unit digits stay, so only a tracked zero can lose
    /// all its precision (reported as `InsufficientPrecision`).
    pub fn div_bigint(&self, k: &BigInt) -> Result<Self> {
        if k.is_zero() {
            return Err(CoreError::ZeroAtPrecision);
        }
        let (vk, rest) = split_valuation(self.p, k.magnitude());
        if self.is_zero() {
            let abs = self.abs_prec() - vk;
            if abs <= 0 {
                return Err(CoreError::InsufficientPrecision);
            }
            return Ok(Self::zero(self.p, abs));
        }
        let md = ppow(self.p, self.n);
        let inv = modinv(&(rest % &md), &md).ok_or(CoreError::ZeroAtPrecision)?;
        let mut u = (&self.unit * inv) % &md;
        if k.is_negative() && !u.is_zero() {
            u = &md - u;
        }
        Ok(PadicNumber { p: self.p, v: self.v - vk, unit: u, n: self.n })
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(CoreError::ZeroAtPrecision);
        }
        let md = ppow(self.p, self.n);
        let u = modinv(&self.unit, &md).ok_or(CoreError::ZeroAtPrecision)?;
        Ok(PadicNumber { p: self.p, v: -self.v, unit: u, n: self.n })
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        let mut acc = Self::one(self.p, self.abs_prec().max(1));
        // Keep the full relative precision of the base through the squarings.
        if !self.is_zero() {
            acc = PadicNumber { p: self.p, v: 0, unit: BigUint::one(), n: self.n };
        }
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        Ok(acc)
    }

    /// Generalized binomial coefficient `C(self, k)` =
    /// `self (self-1) ... (self-k+1) / k!`.  The division by `k!` shifts the
    /// valuation down by `v_p(k!)`, which is the entire precision loss.
    pub fn binomial(&self, k: u64) -> Result<Self> {
        let abs = self.abs_prec();
        if k == 0 {
            return Ok(Self::one(self.p, abs.max(1)));
        }
        let mut num = Self::one(self.p, abs.max(1));
        let mut factorial = BigInt::one();
        for j in 0..k {
            let factor = self.sub(&Self::from_i64(self.p, j as i64, abs));
            num = num.mul(&factor);
            factorial *= BigInt::from((j + 1) as i64);
        }
        num.div_bigint(&factorial)
    }

    /// Decimal digits of the unit, for serialization.
    pub fn unit_decimal(&self) -> String {
        let mut digits: Vec<u8> = self.unit.to_radix_le(10);
        if digits.is_empty() {
            digits.push(0);
        }
        digits.iter().rev().map(|d| (b'0' + d) as char).collect()
    }

    /// Residue of a p-integral scalar modulo `p` as a machine integer.
    pub fn residue_mod_p(&self) -> Result<u64> {
        if self.v < 0 {
            return Err(CoreError::NegativeExponent);
        }
        if self.is_zero() || self.v > 0 {
            return Ok(0);
        }
        Ok((&self.unit % self.p).to_u64().unwrap())
    }
}

impl fmt::Display for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "O({}^{})", self.p, self.v)
        } else {
            write!(f, "{}^{} * {} + O({}^{})", self.p, self.v, self.unit, self.p, self.abs_prec())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(v: i64) -> PadicNumber {
        PadicNumber::from_i64(3, v, 12)
    }

    #[test]
    fn integer_normal_forms() {
        let three = int(3);
        assert_eq!(three.valuation(), 1);
        assert_eq!(three.unit(), &BigUint::one());
        assert_eq!(three.rel_prec(), 11);
        assert_eq!(three.abs_prec(), 12);

        let minus_one = int(-1);
        assert_eq!(minus_one.valuation(), 0);
        assert_eq!(minus_one.unit(), &(ppow(3, 12) - BigUint::one()));

        assert!(int(0).is_zero());
        assert_eq!(int(0).abs_prec(), 12);
    }

    #[test]
    fn inv_of_two_mod_eighty_one() {
        // p = 3 with four digits: 2 * 41 = 82 = 81 + 1.
        let two = PadicNumber::from_i64(3, 2, 4);
        let inv = two.inv().unwrap();
        assert_eq!(inv.valuation(), 0);
        assert_eq!(inv.unit(), &BigUint::from(41u32));
        assert!(two.mul(&inv).sub(&PadicNumber::one(3, 4)).is_zero());
    }

    #[test]
    fn inv_of_one_and_zero() {
        let one = PadicNumber::one(3, 4);
        assert!(one.inv().unwrap().sub(&one).is_zero());
        assert_eq!(PadicNumber::zero(3, 4).inv(), Err(CoreError::ZeroAtPrecision));
    }

    #[test]
    fn addition_cancels_to_tracked_zero() {
        let s = int(7).add(&int(-7));
        assert!(s.is_zero());
        assert_eq!(s.abs_prec(), 12);
        // Partial cancellation: 5 + 4 = 9 has valuation 2.
        let t = int(5).add(&int(4));
        assert_eq!(t.valuation(), 2);
        assert_eq!(t.abs_prec(), 12);
    }

    #[test]
    fn valuation_rules() {
        let a = int(6); // v = 1
        let b = int(15); // v = 1
        assert_eq!(a.mul(&b).valuation(), 2);
        assert_eq!(a.add(&b).valuation(), 1); // 21 = 3 * 7
        let c = int(2).inv().unwrap();
        assert_eq!(c.valuation(), 0);
        assert_eq!(int(3).inv().unwrap().valuation(), -1);
    }

    #[test]
    fn negative_valuation_bookkeeping() {
        let third = int(3).inv().unwrap();
        assert_eq!(third.abs_prec(), 10); // 11 digits starting at p^-1
        let one = third.mul(&int(3));
        assert!(one.sub(&PadicNumber::one(3, 10)).is_zero());
    }

    #[test]
    fn binomial_small_values() {
        // C(s, 0) = 1 for any s.
        assert!(int(17).binomial(0).unwrap().sub(&int(1)).is_zero());
        // C(-1, 2) = (-1)(-2)/2 = 1.
        assert!(int(-1).binomial(2).unwrap().sub(&int(1)).is_zero());
        // C(-2, 1) = -2.
        assert!(int(-2).binomial(1).unwrap().sub(&int(-2)).is_zero());
        // Integer cross-check: C(7, 3) = 35.
        assert!(int(7).binomial(3).unwrap().sub(&int(35)).is_zero());
    }

    #[test]
    fn binomial_precision_loss_is_factorial_valuation() {
        let s = int(4);
        let c = s.binomial(3).unwrap(); // division by 3! loses one digit
        assert_eq!(c.abs_prec(), 11);
        assert!(c.sub(&int(4)).is_zero()); // C(4,3) = 4
    }

    #[test]
    fn binomial_at_integer_degenerates_to_zero() {
        // C(2, 4) = 0: the numerator contains the factor (2 - 2).
        let c = int(2).binomial(4).unwrap();
        assert!(c.is_zero());
    }

    #[test]
    fn tracked_zero_through_division() {
        let z = PadicNumber::zero(3, 2);
        assert_eq!(z.div_bigint(&BigInt::from(9)), Err(CoreError::InsufficientPrecision));
        let ok = PadicNumber::zero(3, 5).div_bigint(&BigInt::from(9)).unwrap();
        assert!(ok.is_zero());
        assert_eq!(ok.abs_prec(), 3);
    }

    #[test]
    fn from_parts_validates() {
        assert!(PadicNumber::from_parts(3, 0, BigUint::from(2u32), 4).is_ok());
        assert!(PadicNumber::from_parts(4, 0, BigUint::from(1u32), 1).is_err());
        assert!(PadicNumber::from_parts(3, 0, BigUint::from(3u32), 2).is_err());
        assert!(PadicNumber::from_parts(3, 0, BigUint::from(82u32), 4).is_err());
        assert!(PadicNumber::from_parts(3, 7, BigUint::zero(), 0).is_ok());
    }

    #[test]
    fn pow_matches_repeated_multiplication() {
        let a = int(5);
        let mut acc = PadicNumber::one(3, 12);
        for _ in 0..6 {
            acc = acc.mul(&a);
        }
        assert!(a.pow(6).unwrap().sub(&acc).is_zero());
        assert!(a.pow(-2).unwrap().mul(&a.pow(2).unwrap()).sub(&int(1)).is_zero());
    }

    #[test]
    fn canonical_equality_for_serialization() {
        let a = int(10).add(&int(-3));
        let b = int(7);
        assert_eq!(a, b);
    }
}
