//! The distinguished period elements of the model ring: the Frobenius
//! eigenfunction `lambda`, the cyclotomic logarithm `t`, the rational
//! function `alpha` mediating between the Kummer and cyclotomic lines, and
//! the derived quantities (`lambda'`, `b = t / lambda`, its inverse with an
//! explicit `Y`-pole) that the module engines consume.
//!
//! Precision discipline: these elements carry exact p-power denominators
//! that grow linearly with the X-exponent (`lambda^{-1}` and the geometric
//! tail of `alpha` reach `p^{-(x_hi-1)}`), which at wide windows exceeds the
//! model's precision cap `N`.  Computing naively at `N` silently converts
//! sub-precision cancellations into exact-zero claims and later coefficients
//! inherit units that are wrong within their claimed precision.  The bundle
//! and the identity residuals therefore compute at the internally widened
//! cap of [`Truncation::widened`] and re-truncate, so every public
//! coefficient carries its full `N` absolute digits honestly.  The raw
//! constructors in this module (`lambda`, `t_element`, `alpha`, ...) compute
//! at whatever truncation they are handed; callers chaining divisions or
//! long products should hand them the widened window and restrict at the
//! end, which is what [`PeriodBundle::new`] does.

use num_bigint::BigInt;

use crate::error::Result;
use crate::padic::PadicNumber;
use crate::ring::{ModelElement, Truncation};

/// Sign convention for `lambda`.  `Kisin` is the product of `1 - X^{p^n}/p`
/// over the powers visible in the window; `Negated` flips every factor's
/// sign, i.e. scales by `(-1)^m` for `m` visible factors.  Both satisfy the
/// same functional equation in the window, because the Frobenius image of
/// the topmost factor truncates to a constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaConvention {
    Kisin,
    Negated,
}

/// Number of factors `1 - X^{p^n}/p` whose lead exponent is visible:
/// `#{n >= 0 : p^n < x_hi}`.
pub fn visible_factor_count(t: Truncation) -> u32 {
    let mut m = 0;
    let mut q: i64 = 1;
    while q < t.x_hi {
        m += 1;
        match q.checked_mul(t.p as i64) {
            Some(next) => q = next,
            None => break,
        }
    }
    m
}

/// `E(X) = X - p`, the minimal polynomial of the uniformizer choice.
pub fn e_polynomial(t: Truncation) -> ModelElement {
    let mut e = ModelElement::monomial(t, 1, 0, PadicNumber::one(t.p, t.prec as i64));
    e.insert(0, 0, PadicNumber::from_i64(t.p, -(t.p as i64), t.prec as i64));
    e
}

/// `E(X) / E(0) = 1 - X/p`.
pub fn e_over_e0(t: Truncation) -> Result<ModelElement> {
    let p_inv = PadicNumber::from_i64(t.p, t.p as i64, t.prec as i64).inv()?;
    let mut e = ModelElement::one(t);
    e.insert(1, 0, p_inv.neg());
    Ok(e)
}

pub fn lambda(t: Truncation, convention: LambdaConvention) -> Result<ModelElement> {
    let p_inv = PadicNumber::from_i64(t.p, t.p as i64, t.prec as i64).inv()?;
    let mut acc = ModelElement::one(t);
    let mut q: i64 = 1;
    while q < t.x_hi {
        let mut factor = ModelElement::one(t);
        factor.insert(q, 0, p_inv.neg());
        acc = acc.mul(&factor)?;
        match q.checked_mul(t.p as i64) {
            Some(next) => q = next,
            None => break,
        }
    }
    if convention == LambdaConvention::Negated && visible_factor_count(t) % 2 == 1 {
        acc = acc.neg();
    }
    Ok(acc)
}

/// `t = log(1 + Y)` truncated: `sum_{k>=1} (-1)^{k-1} Y^k / k`.
pub fn t_element(t: Truncation) -> Result<ModelElement> {
    let mut acc = ModelElement::zero(t);
    for k in 1..t.y_hi {
        let sign = if k % 2 == 1 { 1 } else { -1 };
        let c = PadicNumber::from_i64(t.p, sign, t.prec as i64).div_bigint(&BigInt::from(k))?;
        acc.insert(0, k, c);
    }
    Ok(acc)
}

/// `alpha = (Y/p) sum_{n >= 0} ((1+Y) X / p)^n`, the truncated expansion of
/// `-Y / ((1+Y) X - p)`; the window kills the geometric tail, so
/// `alpha ((1+Y)X - p) = -Y` holds exactly.
pub fn alpha(t: Truncation) -> Result<ModelElement> {
    let p_inv = PadicNumber::from_i64(t.p, t.p as i64, t.prec as i64).inv()?;
    let mut base = ModelElement::monomial(t, 1, 0, p_inv.clone());
    base.insert(1, 1, p_inv.clone());
    let mut sum = ModelElement::zero(t);
    let mut power = ModelElement::one(t);
    while !power.is_zero() {
        sum = sum.add(&power)?;
        power = power.mul(&base)?;
    }
    Ok(sum.mul_monomial(0, 1, &p_inv))
}

/// `1 + alpha X = E(X) / tau(E(X))` as window elements.
pub fn one_plus_alpha_x(t: Truncation) -> Result<ModelElement> {
    let one = PadicNumber::one(t.p, t.prec as i64);
    ModelElement::one(t).add(&alpha(t)?.mul_monomial(1, 0, &one))
}

/// `W = prod_{n} phi^n(1 + alpha X)` over the visible factors; the ratio
/// `lambda / tau(lambda)`.
pub fn w_product(t: Truncation) -> Result<ModelElement> {
    let mut factor = one_plus_alpha_x(t)?;
    let mut acc = ModelElement::one(t);
    for n in 0..visible_factor_count(t) {
        if n > 0 {
            factor = factor.apply_phi();
        }
        acc = acc.mul(&factor)?;
    }
    Ok(acc)
}

/// Residual of the functional equation `lambda = (E/E(0)) * phi(lambda)`,
/// computed at internally widened precision and re-truncated.  Zero iff the
/// equation holds at the public truncation.
pub fn functional_equation_residual(
    t: Truncation,
    convention: LambdaConvention,
) -> Result<ModelElement> {
    let w = t.widened();
    let lam = lambda(w, convention)?;
    let rhs = e_over_e0(w)?.mul(&lam.apply_phi())?;
    lam.sub(&rhs)?.restrict_to(t)
}

/// Residual of the product identity `lambda = tau(lambda) * W` with
/// `W = prod_n phi^n(1 + alpha X)` — the division-free form of the ratio
/// identity `tau(lambda)/lambda = W^{-1}` — computed at internally widened
/// precision and re-truncated.
pub fn tau_ratio_residual(
    t: Truncation,
    convention: LambdaConvention,
) -> Result<ModelElement> {
    let w = t.widened();
    let lam = lambda(w, convention)?;
    let rhs = lam.apply_tau().mul(&w_product(w)?)?;
    lam.sub(&rhs)?.restrict_to(t)
}

/// `b^{-1} = lambda / t` carries one explicit pole in `Y`: the value is
/// `numer * Y^{-y_pole}` with `numer` a genuine window element.
#[derive(Debug, Clone)]
pub struct PoleElement {
    pub numer: ModelElement,
    pub y_pole: i64,
}

/// Full-precision (widened-window) copies of the period elements, kept
/// alongside the public bundle so that downstream constructions whose
/// intermediate coefficients develop deep denominators can run at the
/// widened cap and re-truncate only their final results.
#[derive(Debug, Clone)]
pub(crate) struct WidePeriods {
    pub(crate) b: ModelElement,
    pub(crate) w: ModelElement,
}

#[derive(Debug, Clone)]
pub struct PeriodBundle {
    pub trunc: Truncation,
    pub convention: LambdaConvention,
    pub lambda: ModelElement,
    pub lambda_prime: ModelElement,
    pub t: ModelElement,
    pub alpha: ModelElement,
    pub b: ModelElement,
    pub b_inv: PoleElement,
    pub(crate) wide: WidePeriods,
}

impl PeriodBundle {
    /// Build the bundle at `trunc`.  All division-bearing members
    /// (`b = t / lambda`, the pole inverse) are computed at the widened
    /// precision cap and re-truncated, so the stored coefficients carry
    /// full absolute precision.
    pub fn new(trunc: Truncation, convention: LambdaConvention) -> Result<Self> {
        let wt = trunc.widened();
        let lam = lambda(wt, convention)?;
        let t = t_element(wt)?;
        let b = t.mul(&lam.invert()?)?;
        // t / Y is a unit (constant term 1); b^{-1} = (lambda / (t/Y)) Y^{-1}.
        let one = PadicNumber::one(wt.p, wt.prec as i64);
        let t_over_y = t.mul_monomial(0, -1, &one);
        let b_inv = PoleElement {
            numer: lam.mul(&t_over_y.invert()?)?.restrict_to(trunc)?,
            y_pole: 1,
        };
        let wide = WidePeriods { b: b.clone(), w: w_product(wt)? };
        Ok(PeriodBundle {
            trunc,
            convention,
            lambda_prime: lam.d_dx().restrict_to(trunc)?,
            lambda: lam.restrict_to(trunc)?,
            t: t.restrict_to(trunc)?,
            alpha: alpha(wt)?.restrict_to(trunc)?,
            b: b.restrict_to(trunc)?,
            b_inv,
            wide,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> Truncation {
        Truncation::new(3, -12, 32, 8, 12).unwrap()
    }

    fn one_elem(t: Truncation) -> ModelElement {
        ModelElement::one(t)
    }

    fn scalar(t: Truncation, v: i64) -> PadicNumber {
        PadicNumber::from_i64(t.p, v, t.prec as i64)
    }

    #[test]
    fn lambda_small_window_expansion() {
        // Two visible factors at x_hi = 9, p = 3:
        // (1 - X/3)(1 - X^3/3) = 1 - X/3 - X^3/3 + X^4/9.
        let t = Truncation::new(3, -4, 9, 2, 12).unwrap();
        let lam = lambda(t, LambdaConvention::Kisin).unwrap();
        assert_eq!(lam.term_count(), 4);
        let third = scalar(t, 3).inv().unwrap();
        let ninth = third.mul(&third);
        assert!(lam.coeff(0, 0).unwrap().sub(&scalar(t, 1)).is_zero());
        assert!(lam.coeff(1, 0).unwrap().sub(&third.neg()).is_zero());
        assert!(lam.coeff(3, 0).unwrap().sub(&third.neg()).is_zero());
        assert!(lam.coeff(4, 0).unwrap().sub(&ninth).is_zero());

        // Single factor at x_hi = 2, and its negation (odd factor count).
        let t1 = Truncation::new(3, -1, 2, 2, 12).unwrap();
        let lk = lambda(t1, LambdaConvention::Kisin).unwrap();
        assert!(lk.coeff(1, 0).unwrap().sub(&third.neg()).is_zero());
        let ln = lambda(t1, LambdaConvention::Negated).unwrap();
        assert!(ln.add(&lk).unwrap().is_zero());

        // Even factor count: the two conventions coincide.
        assert_eq!(visible_factor_count(t), 2);
        let ln2 = lambda(t, LambdaConvention::Negated).unwrap();
        assert!(ln2.sub(&lam).unwrap().is_zero());
    }

    #[test]
    fn lambda_functional_equation_both_conventions() {
        let t = defaults();
        for conv in [LambdaConvention::Kisin, LambdaConvention::Negated] {
            let lam = lambda(t, conv).unwrap();
            let rhs = e_over_e0(t).unwrap().mul(&lam.apply_phi()).unwrap();
            assert!(lam.sub(&rhs).unwrap().is_zero());

            // The opposite-sign form fails: lambda != (X/p - 1) phi(lambda).
            let wrong = e_over_e0(t).unwrap().neg().mul(&lam.apply_phi()).unwrap();
            assert!(!lam.sub(&wrong).unwrap().is_zero());
        }
    }

    #[test]
    fn t_small_window_expansion() {
        let t = Truncation::new(3, -1, 2, 3, 12).unwrap();
        let log = t_element(t).unwrap();
        assert_eq!(log.term_count(), 2);
        assert!(log.coeff(0, 1).unwrap().sub(&scalar(t, 1)).is_zero());
        let neg_half = scalar(t, 2).inv().unwrap().neg();
        assert!(log.coeff(0, 2).unwrap().sub(&neg_half).is_zero());
    }

    #[test]
    fn alpha_low_order_terms() {
        // Modulo (X^2, Y^3): alpha = Y/p + (Y + Y^2) X / p^2.
        let t = Truncation::new(3, 0, 2, 3, 12).unwrap();
        let a = alpha(t).unwrap();
        let third = scalar(t, 3).inv().unwrap();
        let ninth = third.mul(&third);
        assert_eq!(a.term_count(), 3);
        assert!(a.coeff(0, 1).unwrap().sub(&third).is_zero());
        assert!(a.coeff(1, 1).unwrap().sub(&ninth).is_zero());
        assert!(a.coeff(1, 2).unwrap().sub(&ninth).is_zero());
    }

    #[test]
    fn alpha_window_identities_are_exact() {
        let t = defaults();
        let a = alpha(t).unwrap();
        // (1+Y) X - p.
        let mut q = ModelElement::monomial(t, 1, 0, scalar(t, 1));
        q.insert(1, 1, scalar(t, 1));
        q.insert(0, 0, scalar(t, -3));

        let mut y = ModelElement::zero(t);
        y.insert(0, 1, scalar(t, 1));
        assert!(a.mul(&q).unwrap().add(&y).unwrap().is_zero());

        let lhs = one_plus_alpha_x(t).unwrap().mul(&q).unwrap();
        assert!(lhs.sub(&e_polynomial(t)).unwrap().is_zero());
    }

    #[test]
    fn top_frobenius_factor_is_trivial() {
        // phi^m(1 + alpha X) truncates to 1, which is what stabilizes the
        // finite product W.
        let t = defaults();
        let mut f = one_plus_alpha_x(t).unwrap();
        for _ in 0..visible_factor_count(t) {
            f = f.apply_phi();
        }
        assert!(f.sub(&one_elem(t)).unwrap().is_zero());
    }

    #[test]
    fn tau_lambda_ratio_is_w() {
        let t = defaults();
        for conv in [LambdaConvention::Kisin, LambdaConvention::Negated] {
            assert!(tau_ratio_residual(t, conv).unwrap().is_zero());
            assert!(functional_equation_residual(t, conv).unwrap().is_zero());
        }

        // At a narrow window the denominators stay within the cap and the
        // identity certifies with no internal widening at all.
        let narrow = Truncation::new(3, -4, 4, 4, 12).unwrap();
        let lam = lambda(narrow, LambdaConvention::Kisin).unwrap();
        let w = w_product(narrow).unwrap();
        assert!(lam.sub(&lam.apply_tau().mul(&w).unwrap()).unwrap().is_zero());
    }

    #[test]
    fn tau_lambda_ratio_at_p_five() {
        let t = Truncation::new(5, -8, 26, 6, 10).unwrap();
        assert!(tau_ratio_residual(t, LambdaConvention::Kisin).unwrap().is_zero());
        let lam = lambda(t, LambdaConvention::Kisin).unwrap();
        let rhs = e_over_e0(t).unwrap().mul(&lam.apply_phi()).unwrap();
        assert!(lam.sub(&rhs).unwrap().is_zero());
    }

    #[test]
    fn gamma_fixes_lambda_and_scales_b() {
        let t = defaults();
        let bundle = PeriodBundle::new(t, LambdaConvention::Kisin).unwrap();
        let c = scalar(t, 4);
        let glam = bundle.lambda.apply_gamma(&c).unwrap();
        assert!(glam.sub(&bundle.lambda).unwrap().is_zero());

        for cv in [4i64, 2] {
            let c = scalar(t, cv);
            let gb = bundle.b.apply_gamma(&c).unwrap();
            assert!(gb.sub(&bundle.b.scalar_mul(&c)).unwrap().is_zero());
        }
    }

    #[test]
    fn b_and_its_pole_inverse_multiply_to_one() {
        let t = defaults();
        let bundle = PeriodBundle::new(t, LambdaConvention::Kisin).unwrap();
        assert_eq!(bundle.b_inv.y_pole, 1);
        // b * (numer Y^{-1}) = 1 iff b * numer = Y.
        let prod = bundle.b.mul(&bundle.b_inv.numer).unwrap();
        let y = ModelElement::monomial(t, 0, 1, scalar(t, 1));
        assert!(prod.sub(&y).unwrap().is_zero());
    }

    #[test]
    fn lambda_prime_matches_first_order_substitution() {
        // Substitute X -> X + Y in an auxiliary window with Y^2 = 0; the
        // Y-layer of lambda(X + Y) is the derivative.
        let t = defaults();
        let bundle = PeriodBundle::new(t, LambdaConvention::Kisin).unwrap();
        let aux = Truncation::new(t.p, t.x_lo, t.x_hi, 2, t.prec).unwrap();
        let mut shifted = ModelElement::zero(aux);
        for (x, y, c) in bundle.lambda.terms() {
            assert_eq!(y, 0);
            shifted.insert(x, 0, c.clone());
            shifted.insert(x - 1, 1, c.mul_i64(x));
        }
        let mut fd = ModelElement::zero(t);
        for (x, y, c) in shifted.terms() {
            if y == 1 {
                fd.insert(x, 0, c.clone());
            }
        }
        assert!(fd.sub(&bundle.lambda_prime).unwrap().is_zero());
    }

    #[test]
    fn negated_bundle_shares_b() {
        // b = t / lambda picks up (-1)^m in both numerator-inverse and the
        // pole element, so downstream period ratios agree across conventions
        // when the factor count is even (the default window).
        let t = defaults();
        assert_eq!(visible_factor_count(t) % 2, 0);
        let k = PeriodBundle::new(t, LambdaConvention::Kisin).unwrap();
        let n = PeriodBundle::new(t, LambdaConvention::Negated).unwrap();
        assert!(k.b.sub(&n.b).unwrap().is_zero());
        assert!(k.lambda.sub(&n.lambda).unwrap().is_zero());
    }
}
