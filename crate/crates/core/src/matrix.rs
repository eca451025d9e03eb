//! Small dense matrices over the model ring.  Entries are stored row-major;
//! `entry(i, j)` is the coefficient of the `i`-th basis vector in the image
//! of the `j`-th, so semilinear actions compose as `matrix * twist(vector)`.

use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::padic::PadicNumber;
use crate::ring::{ModelElement, Truncation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mat {
    d: usize,
    trunc: Truncation,
    entries: Vec<ModelElement>,
}

impl Mat {
    pub fn zero(d: usize, trunc: Truncation) -> Self {
        let entries = (0..d * d).map(|_| ModelElement::zero(trunc)).collect();
        Mat { d, trunc, entries }
    }

    pub fn identity(d: usize, trunc: Truncation) -> Self {
        let mut m = Self::zero(d, trunc);
        for i in 0..d {
            *m.entry_mut(i, i) = ModelElement::one(trunc);
        }
        m
    }

    pub fn from_entries(d: usize, entries: Vec<ModelElement>) -> Result<Self> {
        if d == 0 || entries.len() != d * d {
            return Err(CoreError::RankMismatch);
        }
        let trunc = entries[0].trunc();
        if entries.iter().any(|e| e.trunc() != trunc) {
            return Err(CoreError::TruncationMismatch);
        }
        Ok(Mat { d, trunc, entries })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn trunc(&self) -> Truncation {
        self.trunc
    }

    pub fn entry(&self, i: usize, j: usize) -> &ModelElement {
        &self.entries[i * self.d + j]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut ModelElement {
        &mut self.entries[i * self.d + j]
    }

    pub fn entries(&self) -> impl Iterator<Item = &ModelElement> {
        self.entries.iter()
    }

    pub fn column(&self, j: usize) -> Vec<ModelElement> {
        (0..self.d).map(|i| self.entry(i, j).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        for i in 0..self.d {
            for j in 0..self.d {
                let e = self.entry(i, j);
                if i == j {
                    match e.sub(&ModelElement::one(self.trunc)) {
                        Ok(r) if r.is_zero() => {}
                        _ => return false,
                    }
                } else if !e.is_zero() {
                    return false;
                }
            }
        }
        true
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.d != other.d {
            return Err(CoreError::RankMismatch);
        }
        if self.trunc != other.trunc {
            return Err(CoreError::TruncationMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Mat { d: self.d, trunc: self.trunc, entries })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Mat { d: self.d, trunc: self.trunc, entries })
    }

    pub fn neg(&self) -> Self {
        let entries = self.entries.iter().map(|e| e.neg()).collect();
        Mat { d: self.d, trunc: self.trunc, entries }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let mut out = Self::zero(self.d, self.trunc);
        for i in 0..self.d {
            for j in 0..self.d {
                let mut acc = ModelElement::zero(self.trunc);
                for k in 0..self.d {
                    acc = acc.add(&self.entry(i, k).mul(other.entry(k, j))?)?;
                }
                *out.entry_mut(i, j) = acc;
            }
        }
        Ok(out)
    }

    pub fn scalar_mul(&self, c: &PadicNumber) -> Self {
        let entries = self.entries.iter().map(|e| e.scalar_mul(c)).collect();
        Mat { d: self.d, trunc: self.trunc, entries }
    }

    pub fn elem_mul(&self, e: &ModelElement) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|a| a.mul(e))
            .collect::<Result<Vec<_>>>()?;
        Ok(Mat { d: self.d, trunc: self.trunc, entries })
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zero(self.d, self.trunc);
        for i in 0..self.d {
            for j in 0..self.d {
                *out.entry_mut(j, i) = self.entry(i, j).clone();
            }
        }
        out
    }

    /// Entrywise image under a ring map.
    pub fn map<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&ModelElement) -> Result<ModelElement>,
    {
        let entries = self
            .entries
            .iter()
            .map(|e| f(e))
            .collect::<Result<Vec<_>>>()?;
        Ok(Mat { d: self.d, trunc: self.trunc, entries })
    }

    /// Entrywise window/precision restriction; the result carries the new
    /// truncation.
    pub fn restrict_to(&self, t: Truncation) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.restrict_to(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Mat { d: self.d, trunc: t, entries })
    }

    pub fn apply_phi(&self) -> Self {
        self.map(|e| Ok(e.apply_phi())).expect("infallible map")
    }

    pub fn apply_tau(&self) -> Self {
        self.map(|e| Ok(e.apply_tau())).expect("infallible map")
    }

    pub fn apply_gamma(&self, c: &PadicNumber) -> Result<Self> {
        self.map(|e| e.apply_gamma(c))
    }

    /// Kronecker product; blocks follow the row-major convention, so
    /// `(A kron B)[(i1 d2 + i2), (j1 d2 + j2)] = A[i1, j1] B[i2, j2]`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        if self.trunc != other.trunc {
            return Err(CoreError::TruncationMismatch);
        }
        let d = self.d * other.d;
        let mut out = Self::zero(d, self.trunc);
        for i1 in 0..self.d {
            for j1 in 0..self.d {
                for i2 in 0..other.d {
                    for j2 in 0..other.d {
                        *out.entry_mut(i1 * other.d + i2, j1 * other.d + j2) =
                            self.entry(i1, j1).mul(other.entry(i2, j2))?;
                    }
                }
            }
        }
        Ok(out)
    }

    fn minor(&self, row: usize, col: usize) -> Self {
        let d = self.d - 1;
        let mut out = Self::zero(d, self.trunc);
        let mut r = 0;
        for i in 0..self.d {
            if i == row {
                continue;
            }
            let mut c = 0;
            for j in 0..self.d {
                if j == col {
                    continue;
                }
                *out.entry_mut(r, c) = self.entry(i, j).clone();
                c += 1;
            }
            r += 1;
        }
        out
    }

    /// Determinant by expansion along the first row; intended for the small
    /// ranks the engines produce (the recursion is factorial in `d`).
    pub fn det(&self) -> Result<ModelElement> {
        if self.d == 1 {
            return Ok(self.entry(0, 0).clone());
        }
        let mut acc = ModelElement::zero(self.trunc);
        for j in 0..self.d {
            if self.entry(0, j).is_zero() {
                continue;
            }
            let term = self.entry(0, j).mul(&self.minor(0, j).det()?)?;
            acc = if j % 2 == 0 { acc.add(&term)? } else { acc.sub(&term)? };
        }
        Ok(acc)
    }

    /// Inverse via the adjugate; fails with `NotInvertible` when the
    /// determinant has no inverse in the window.
    pub fn inverse(&self) -> Result<Self> {
        let det_inv = self.det()?.invert()?;
        if self.d == 1 {
            return Mat::from_entries(1, alloc::vec![det_inv]);
        }
        let mut adj = Self::zero(self.d, self.trunc);
        for i in 0..self.d {
            for j in 0..self.d {
                let cof = self.minor(i, j).det()?;
                let signed = if (i + j) % 2 == 0 { cof } else { cof.neg() };
                *adj.entry_mut(j, i) = signed;
            }
        }
        adj.elem_mul(&det_inv)
    }

    /// Inverse of `1 - E` for `E = 1 - self` topologically nilpotent,
    /// by the geometric series; exact once the powers of `E` die in the
    /// window, else `NoConvergence`.
    pub fn inverse_near_one(&self) -> Result<Self> {
        let id = Self::identity(self.d, self.trunc);
        let e = id.sub(self)?;
        let mut sum = id.clone();
        let mut power = e.clone();
        let cap = (self.trunc.x_hi - self.trunc.x_lo + self.trunc.y_hi) as u64
            * self.trunc.prec as u64
            + 4;
        let mut k = 0u64;
        while !power.is_zero() {
            if k > cap {
                return Err(CoreError::NoConvergence);
            }
            sum = sum.add(&power)?;
            power = power.mul(&e)?;
            k += 1;
        }
        debug_assert!(self.mul(&sum).map(|m| m.is_identity()).unwrap_or(false));
        Ok(sum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Sampler;

    fn t() -> Truncation {
        Truncation::new(3, -12, 32, 8, 12).unwrap()
    }

    fn x_pow(t: Truncation, i: i64) -> ModelElement {
        ModelElement::monomial(t, i, 0, PadicNumber::one(t.p, t.prec as i64))
    }

    #[test]
    fn identity_laws() {
        let t = t();
        let mut s = Sampler::new(11);
        let mut a = Mat::zero(2, t);
        for i in 0..2 {
            for j in 0..2 {
                *a.entry_mut(i, j) = s.element(t, 4, 0, 4);
            }
        }
        let id = Mat::identity(2, t);
        assert!(a.mul(&id).unwrap().sub(&a).unwrap().is_zero());
        assert!(id.mul(&a).unwrap().sub(&a).unwrap().is_zero());
        assert!(id.is_identity());
        assert!(!a.is_identity());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let t = t();
        let a = Mat::identity(2, t);
        let b = Mat::identity(3, t);
        assert_eq!(a.mul(&b).unwrap_err(), CoreError::RankMismatch);
        assert!(Mat::from_entries(2, alloc::vec![ModelElement::one(t)]).is_err());
    }

    #[test]
    fn triangular_determinant() {
        let t = t();
        let mut m = Mat::zero(2, t);
        *m.entry_mut(0, 0) = x_pow(t, 1);
        *m.entry_mut(0, 1) = ModelElement::constant(t, 5);
        *m.entry_mut(1, 1) = x_pow(t, 2);
        let d = m.det().unwrap();
        assert!(d.sub(&x_pow(t, 3)).unwrap().is_zero());
    }

    #[test]
    fn det_multiplicative_spot_check() {
        let t = t();
        let mut s = Sampler::new(23);
        let mut a = Mat::zero(3, t);
        let mut b = Mat::zero(3, t);
        for i in 0..3 {
            for j in 0..3 {
                *a.entry_mut(i, j) = s.element_in(t, 2, 0, 5, 0, 6, 0, 3);
                *b.entry_mut(i, j) = s.element_in(t, 2, 0, 5, 0, 6, 0, 3);
            }
        }
        let lhs = a.mul(&b).unwrap().det().unwrap();
        let rhs = a.det().unwrap().mul(&b.det().unwrap()).unwrap();
        assert!(lhs.sub(&rhs).unwrap().is_zero());
    }

    #[test]
    fn adjugate_inverse_round_trip() {
        let t = t();
        let mut s = Sampler::new(5);
        let mut m = Mat::identity(3, t);
        for i in 0..3 {
            for j in 0..3 {
                let bump = s.element_in(t, 3, 1, 6, 0, 8, 0, 4);
                *m.entry_mut(i, j) = m.entry(i, j).add(&bump).unwrap();
            }
        }
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).unwrap().is_identity());
        assert!(inv.mul(&m).unwrap().is_identity());
    }

    #[test]
    fn near_one_inverse_agrees_with_adjugate() {
        let t = t();
        let mut s = Sampler::new(17);
        let mut m = Mat::identity(2, t);
        for i in 0..2 {
            for j in 0..2 {
                let bump = s.element_in(t, 3, 2, 6, 0, 8, 0, 4);
                *m.entry_mut(i, j) = m.entry(i, j).add(&bump).unwrap();
            }
        }
        let a = m.inverse().unwrap();
        let b = m.inverse_near_one().unwrap();
        assert!(a.sub(&b).unwrap().is_zero());
    }

    #[test]
    fn kron_matches_block_structure() {
        let t = t();
        let mut a = Mat::zero(2, t);
        *a.entry_mut(0, 0) = x_pow(t, 1);
        *a.entry_mut(1, 1) = x_pow(t, 2);
        let mut b = Mat::identity(2, t);
        *b.entry_mut(0, 1) = ModelElement::constant(t, 7);
        let k = a.kron(&b).unwrap();
        assert_eq!(k.dim(), 4);
        assert!(k
            .entry(0, 1)
            .sub(&x_pow(t, 1).mul_int(7))
            .unwrap()
            .is_zero());
        assert!(k.entry(2, 3).sub(&x_pow(t, 2).mul_int(7)).unwrap().is_zero());
        assert!(k.entry(1, 2).is_zero());
        // det(A kron B) = det(A)^2 det(B)^2 for 2 x 2 blocks.
        let lhs = k.det().unwrap();
        let da = a.det().unwrap();
        let db = b.det().unwrap();
        let rhs = da.mul(&da).unwrap().mul(&db.mul(&db).unwrap()).unwrap();
        assert!(lhs.sub(&rhs).unwrap().is_zero());
    }

    #[test]
    fn entrywise_maps_commute_with_mul() {
        let t = t();
        let mut s = Sampler::new(31);
        let mut a = Mat::zero(2, t);
        let mut b = Mat::zero(2, t);
        for i in 0..2 {
            for j in 0..2 {
                *a.entry_mut(i, j) = s.element_in(t, 3, 0, 4, -2, 6, 0, 3);
                *b.entry_mut(i, j) = s.element_in(t, 3, 0, 4, -2, 6, 0, 3);
            }
        }
        let lhs = a.mul(&b).unwrap().apply_tau();
        let rhs = a.apply_tau().mul(&b.apply_tau()).unwrap();
        assert!(lhs.sub(&rhs).unwrap().is_zero());
    }
}
