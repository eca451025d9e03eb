//! Two-chart gluing over a univariate Laurent window.
//!
//! The window splits by sign of the exponent into a nonnegative chart and a
//! nonpositive chart whose overlap is the scalars.  This module makes that
//! covering executable: near-identity matrices factor into one chart-sided
//! piece per side with quadratically shrinking defect, a pair of transition
//! isomorphisms resolves into the free module of matching sections, and a
//! short chain of windows splices into one common basis.
//!
//! Exactness at working precision relies on the slope discipline used by the
//! samplers: every claim of valuation `v` sits at an exponent of magnitude at
//! most a fixed multiple of `v`, so live terms die at the precision cap
//! before they can reach the window boundary and be dropped.

use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::matrix::Mat;
use crate::padic::PadicNumber;
use crate::ring::{ModelElement, Truncation};

/// The two one-sided charts of a univariate window, with the scalars as
/// their overlap.  The difference map `(f, g) -> f - g` from the chart pair
/// onto the full window has the diagonal scalars as its kernel; `split` is
/// an explicit section of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GluingDiagram {
    trunc: Truncation,
}

impl GluingDiagram {
    /// The window must be univariate and must reach strictly negative
    /// exponents, otherwise the nonpositive chart degenerates.
    pub fn new(trunc: Truncation) -> Result<Self> {
        if trunc.y_hi != 1 {
            return Err(CoreError::Malformed("gluing charts are univariate"));
        }
        if trunc.x_lo >= 0 {
            return Err(CoreError::Malformed("gluing window needs negative exponents"));
        }
        Ok(GluingDiagram { trunc })
    }

    pub fn trunc(&self) -> Truncation {
        self.trunc
    }

    /// Membership in the overlap: no exponent besides zero survives.
    pub fn is_scalar(&self, e: &ModelElement) -> bool {
        e.terms().all(|(x, y, _)| x == 0 && y == 0)
    }

    /// Membership in the nonnegative chart.
    pub fn in_r1(&self, e: &ModelElement) -> bool {
        e.min_x_exponent().map_or(true, |x| x >= 0)
    }

    /// Membership in the nonpositive chart.
    pub fn in_r2(&self, e: &ModelElement) -> bool {
        e.max_x_exponent().map_or(true, |x| x <= 0)
    }

    /// Section of the difference map: `split(e) = (f, g)` with `f - g = e`,
    /// `f` in the nonnegative chart and `g` strictly negative.  Exponent-0
    /// terms land on the `f` side; the same convention is used by the
    /// factorization below.
    pub fn split(&self, e: &ModelElement) -> (ModelElement, ModelElement) {
        (e.x_nonneg_part(), e.x_neg_part().neg())
    }
}

/// Minimum claim valuation across all entries; `None` for the zero matrix.
fn matrix_val_gauge(m: &Mat) -> Option<i64> {
    m.entries()
        .filter_map(|e| e.terms().map(|(_, _, c)| c.valuation()).min())
        .min()
}

/// Factor a near-identity matrix as `U = U1 * U2` with `U1` supported in
/// exponents `>= 0` and `U2` in exponents `<= 0`, by repeatedly conjugating
/// away the additive split of the defect: with `U - 1 = X + Y` (nonnegative
/// and strictly negative parts), `(1-X) U (1-Y) - 1` is a sum of products of
/// two defect-sized factors, so its valuation gauge doubles each pass.
///
/// Requires every claim of `U - 1` to have valuation at least 1
/// (`NotCloseEnough`); converges within `ceil(log2 N) + 1` passes or fails
/// with `NoConvergence`.  The reconstruction `U1 * U2 = U` and the support
/// separation are verified before returning.
pub fn factor_near_identity(u: &Mat) -> Result<(Mat, Mat)> {
    let (u1, u2, _) = factor_near_identity_traced(u)?;
    Ok((u1, u2))
}

/// As [`factor_near_identity`], also reporting the number of conjugation
/// passes performed.
pub fn factor_near_identity_traced(u: &Mat) -> Result<(Mat, Mat, usize)> {
    let t = u.trunc();
    let id = Mat::identity(u.dim(), t);
    match matrix_val_gauge(&u.sub(&id)?) {
        None => return Ok((id.clone(), id, 0)),
        Some(g) if g >= 1 => {}
        Some(_) => return Err(CoreError::NotCloseEnough),
    }
    let cap = t.prec.next_power_of_two().trailing_zeros() as usize + 1;
    let mut left = id.clone();
    let mut right = id.clone();
    let mut cur = u.clone();
    for pass in 0..=cap {
        let v = cur.sub(&id)?;
        if v.is_zero() {
            // cur = left * U * right exactly, so U factors through the
            // accumulated one-sided products.
            let u1 = left.inverse_near_one()?;
            let u2 = right.inverse_near_one()?;
            let separated = u1.entries().all(|e| e.min_x_exponent().map_or(true, |x| x >= 0))
                && u2.entries().all(|e| e.max_x_exponent().map_or(true, |x| x <= 0));
            let exact = u1.mul(&u2)?.sub(u)?.is_zero();
            if !(separated && exact) {
                return Err(CoreError::NoConvergence);
            }
            return Ok((u1, u2, pass));
        }
        if pass == cap {
            break;
        }
        let x = v.map(|e| Ok(e.x_nonneg_part()))?;
        let y = v.map(|e| Ok(e.x_neg_part()))?;
        let lx = id.sub(&x)?;
        let ry = id.sub(&y)?;
        cur = lx.mul(&cur)?.mul(&ry)?;
        left = lx.mul(&left)?;
        right = right.mul(&ry)?;
    }
    Err(CoreError::NoConvergence)
}

/// A pair of free modules of equal rank on the two charts, glued through the
/// full window by a pair of invertible transition matrices.
#[derive(Debug, Clone)]
pub struct FiniteGluingDatum {
    psi1: Mat,
    psi2: Mat,
}

impl FiniteGluingDatum {
    /// The generator counts (matrix dimensions) of the two sides must agree
    /// (`RankMismatch`), as must the windows (`TruncationMismatch`).
    /// Invertibility of the transitions is checked when the datum is
    /// resolved.
    pub fn new(psi1: Mat, psi2: Mat) -> Result<Self> {
        if psi1.dim() != psi2.dim() {
            return Err(CoreError::RankMismatch);
        }
        if psi1.trunc() != psi2.trunc() {
            return Err(CoreError::TruncationMismatch);
        }
        Ok(FiniteGluingDatum { psi1, psi2 })
    }

    pub fn rank(&self) -> usize {
        self.psi1.dim()
    }

    pub fn psi1(&self) -> &Mat {
        &self.psi1
    }

    pub fn psi2(&self) -> &Mat {
        &self.psi2
    }
}

/// The resolved module: column `j` of `basis_m1` gives the chart-1
/// coordinates of the `j`-th glued generator, column `j` of `basis_m2` its
/// chart-2 coordinates.  Both base changes have unit determinants on their
/// charts, so the generators simultaneously trivialize both sides.
#[derive(Debug, Clone)]
pub struct GluedModule {
    pub basis_m1: Mat,
    pub basis_m2: Mat,
}

impl GluedModule {
    pub fn rank(&self) -> usize {
        self.basis_m1.dim()
    }
}

/// `true` when the element is a unit of the nonnegative chart: supported in
/// exponents `>= 0` with an invertible constant coefficient.
fn unit_in_r1(e: &ModelElement) -> bool {
    e.min_x_exponent().map_or(false, |x| x >= 0)
        && e.coeff(0, 0).map_or(false, |c| c.valuation() == 0)
}

/// Mirror of [`unit_in_r1`] for the nonpositive chart.
fn unit_in_r2(e: &ModelElement) -> bool {
    e.max_x_exponent().map_or(false, |x| x <= 0)
        && e.coeff(0, 0).map_or(false, |c| c.valuation() == 0)
}

/// Resolve a gluing datum into the free module of matching section pairs.
///
/// With `A = psi1^{-1} psi2` and `B = psi2^{-1} psi1`, the nonpositive part
/// `B'` of `B` approximates `B` up to valuation-1 claims, so
/// `1 + A(B' - B)` is near the identity and factors as `C1 * C2^{-1}` with
/// one chart-sided factor each (the factorization hands back `C2^{-1}`,
/// which is inverted again here).  The columns of `C1` (chart 1) and of
/// `B' C2` (chart 2) then satisfy `psi1 * C1 = psi2 * (B' C2)` exactly, and
/// both column matrices have unit determinants on their charts.
///
/// Fails with `NotCloseEnough` when the defect `A(B' - B)` has a claim of
/// valuation 0 or when a base-change determinant is not a chart unit, and
/// with `NoConvergence` when the verified kernel identity is spoiled by the
/// window boundary.
pub fn resolve_gluing_datum(datum: &FiniteGluingDatum) -> Result<GluedModule> {
    let t = datum.psi1.trunc();
    let id = Mat::identity(datum.rank(), t);
    let a = datum.psi1.inverse()?.mul(&datum.psi2)?;
    let b = datum.psi2.inverse()?.mul(&datum.psi1)?;
    let b_prime = b.map(|e| Ok(e.x_nonpos_part()))?;
    let g = id.add(&a.mul(&b_prime.sub(&b)?)?)?;
    match matrix_val_gauge(&g.sub(&id)?) {
        None => {}
        Some(v) if v >= 1 => {}
        Some(_) => return Err(CoreError::NotCloseEnough),
    }
    // The factorization returns (C1, C2^{-1}); the chart-2 coordinates need
    // C2 itself.
    let (c1, c2_inv) = factor_near_identity(&g)?;
    let c2 = c2_inv.inverse_near_one()?;
    let basis_m1 = c1;
    let basis_m2 = b_prime.mul(&c2)?;
    let defect = datum.psi1.mul(&basis_m1)?.sub(&datum.psi2.mul(&basis_m2)?)?;
    if !defect.is_zero() {
        return Err(CoreError::NoConvergence);
    }
    let chart_sided = basis_m1.entries().all(|e| e.min_x_exponent().map_or(true, |x| x >= 0))
        && basis_m2.entries().all(|e| e.max_x_exponent().map_or(true, |x| x <= 0));
    if !chart_sided || !unit_in_r1(&basis_m1.det()?) || !unit_in_r2(&basis_m2.det()?) {
        return Err(CoreError::NotCloseEnough);
    }
    Ok(GluedModule { basis_m1, basis_m2 })
}

fn mat_vec(m: &Mat, v: &[ModelElement]) -> Result<Vec<ModelElement>> {
    if v.len() != m.dim() {
        return Err(CoreError::RankMismatch);
    }
    let mut out = Vec::with_capacity(m.dim());
    for i in 0..m.dim() {
        let mut acc = ModelElement::zero(m.trunc());
        for (k, vk) in v.iter().enumerate() {
            acc = acc.add(&m.entry(i, k).mul(vk)?)?;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Kernel of `(f, g) -> psi1 f - psi2 g` over the scalar coefficients of the
/// window, by dense elimination with minimum-valuation pivoting.  Columns
/// enumerate the monomial coefficients of both chart sides, rows those of
/// the image; a forced non-unit pivot aborts with `NotInvertible`.  Meant as
/// a small-instance cross-check (rank at most 3, narrow windows), not as an
/// engine.
pub fn kernel_basis_bruteforce(
    psi1: &Mat,
    psi2: &Mat,
) -> Result<Vec<(Vec<ModelElement>, Vec<ModelElement>)>> {
    if psi1.dim() != psi2.dim() {
        return Err(CoreError::RankMismatch);
    }
    if psi1.trunc() != psi2.trunc() {
        return Err(CoreError::TruncationMismatch);
    }
    let t = psi1.trunc();
    let d = psi1.dim();
    let prec = t.prec as i64;
    let n1 = t.x_hi as usize;
    let n2 = (-t.x_lo) as usize + 1;
    let per = n1 + n2;
    let cols = d * per;
    let width = (t.x_hi - t.x_lo) as usize;
    let rows = d * width;
    let one = PadicNumber::one(t.p, prec);
    let dead = |c: &PadicNumber| c.is_zero() || c.valuation() >= prec;
    // Column layout: for each entry index, first the nonnegative-chart
    // monomials 0..x_hi, then the nonpositive ones x_lo..=0.
    let col_info = |j: usize| -> (bool, usize, i64) {
        let i = j / per;
        let k = j % per;
        if k < n1 {
            (true, i, k as i64)
        } else {
            (false, i, t.x_lo + (k - n1) as i64)
        }
    };
    let mut w: Vec<Vec<PadicNumber>> = Vec::with_capacity(rows);
    for _ in 0..rows {
        w.push(alloc::vec![PadicNumber::zero(t.p, prec); cols]);
    }
    for j in 0..cols {
        let (first, i, x) = col_info(j);
        let psi = if first { psi1 } else { psi2 };
        for r in 0..d {
            let img = psi.entry(r, i).mul_monomial(x, 0, &one);
            for (xx, yy, c) in img.terms() {
                if yy != 0 {
                    return Err(CoreError::Malformed("gluing charts are univariate"));
                }
                let row = r * width + (xx - t.x_lo) as usize;
                w[row][j] = if first { c.clone() } else { c.neg() };
            }
        }
    }
    let mut used_row = alloc::vec![false; rows];
    let mut pivot_col = alloc::vec![false; cols];
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    loop {
        let mut best: Option<(usize, usize, i64)> = None;
        for r in 0..rows {
            if used_row[r] {
                continue;
            }
            for c in 0..cols {
                if pivot_col[c] || dead(&w[r][c]) {
                    continue;
                }
                let v = w[r][c].valuation();
                if best.map_or(true, |(_, _, bv)| v < bv) {
                    best = Some((r, c, v));
                }
            }
        }
        let (r, c, v) = match best {
            Some(found) => found,
            None => break,
        };
        if v > 0 {
            return Err(CoreError::NotInvertible);
        }
        let inv = w[r][c].inv()?;
        for cc in 0..cols {
            w[r][cc] = w[r][cc].mul(&inv);
        }
        for rr in 0..rows {
            if rr == r || dead(&w[rr][c]) {
                continue;
            }
            let f = w[rr][c].clone();
            for cc in 0..cols {
                let delta = f.mul(&w[r][cc]);
                w[rr][cc] = w[rr][cc].sub(&delta);
            }
        }
        used_row[r] = true;
        pivot_col[c] = true;
        pivots.push((r, c));
    }
    let mut basis = Vec::new();
    for j in 0..cols {
        if pivot_col[j] {
            continue;
        }
        let mut f = alloc::vec![ModelElement::zero(t); d];
        let mut g = alloc::vec![ModelElement::zero(t); d];
        let (first, i, x) = col_info(j);
        if first {
            f[i].insert(x, 0, one.clone());
        } else {
            g[i].insert(x, 0, one.clone());
        }
        for &(r, c) in &pivots {
            let coeff = w[r][j].neg();
            if dead(&coeff) {
                continue;
            }
            let (cf, ci, cx) = col_info(c);
            if cf {
                f[ci].insert(cx, 0, coeff);
            } else {
                g[ci].insert(cx, 0, coeff);
            }
        }
        basis.push((f, g));
    }
    Ok(basis)
}

/// Cross-check a resolved module against a brute-force kernel basis: the
/// counts must agree and every kernel vector must be a scalar combination of
/// the resolved generators, reproducing both chart sides exactly.
pub fn kernel_matches_resolution(
    module: &GluedModule,
    kernel: &[(Vec<ModelElement>, Vec<ModelElement>)],
) -> Result<bool> {
    let d = module.rank();
    if kernel.len() != d {
        return Ok(false);
    }
    let c1_inv = module.basis_m1.inverse()?;
    for (f, g) in kernel {
        if f.len() != d || g.len() != d {
            return Ok(false);
        }
        let lambda = mat_vec(&c1_inv, f)?;
        if lambda.iter().any(|e| e.terms().any(|(x, y, _)| x != 0 || y != 0)) {
            return Ok(false);
        }
        let back1 = mat_vec(&module.basis_m1, &lambda)?;
        let back2 = mat_vec(&module.basis_m2, &lambda)?;
        for (bi, fi) in back1.iter().zip(f) {
            if !bi.sub(fi)?.is_zero() {
                return Ok(false);
            }
        }
        for (bi, gi) in back2.iter().zip(g) {
            if !bi.sub(gi)?.is_zero() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Splice a short chain of windows linked by near-identity transitions into
/// one common basis: factor the total transition product as `C1 * C2^{-1}`,
/// seed the innermost window with `C2` (the inverse of the nonpositive
/// factor), and push it along the chain.  Basis `k+1` equals transition `k`
/// times basis `k` exactly; the innermost basis is nonpositive-sided, the
/// outermost (which must land on `C1`) is nonnegative-sided, and every basis
/// is invertible over the full window.
pub fn bundle_splice(transitions: &[Mat]) -> Result<Vec<Mat>> {
    if transitions.is_empty() {
        return Err(CoreError::Malformed("splice needs at least one transition"));
    }
    if transitions.len() > 4 {
        return Err(CoreError::Malformed("splice chain exceeds the desk scale"));
    }
    let t = transitions[0].trunc();
    let d = transitions[0].dim();
    for e in transitions {
        if e.dim() != d {
            return Err(CoreError::RankMismatch);
        }
        if e.trunc() != t {
            return Err(CoreError::TruncationMismatch);
        }
    }
    let mut total = transitions[0].clone();
    for e in &transitions[1..] {
        total = e.mul(&total)?;
    }
    let (c1, c2_inv) = factor_near_identity(&total)?;
    let mut bases = Vec::with_capacity(transitions.len() + 1);
    bases.push(c2_inv.inverse_near_one()?);
    for e in transitions {
        let next = e.mul(bases.last().expect("seeded"))?;
        bases.push(next);
    }
    if !bases.last().expect("seeded").sub(&c1)?.is_zero() {
        return Err(CoreError::NoConvergence);
    }
    for b in &bases {
        b.inverse()?;
    }
    Ok(bases)
}
