//! (phi, tau)-modules as matrix data over the truncated model ring:
//! rank-1 constructions from character data, tensor/dual calculus, the
//! congruence test behind continuity of the construction, the N_nabla
//! connection operator, trianguline (phi, N_nabla)-assembly, and the
//! false-Tate rank-2 module.
//!
//! Matrices are stored in column convention: `entry(i, j)` is the
//! coefficient of basis vector `i` in the image of basis vector `j`.  In
//! that convention the semilinear compatibility of the two operators reads
//! `A * tau(P) = P * phi(A)` with `P = mat_phi`, `A = mat_tau`.
//!
//! Precision discipline: tau-matrices of nonzero weight carry coefficients
//! whose denominators grow linearly with the X-exponent, so residuals
//! against them are certifiable only above that depth.  Constructor-built
//! modules therefore keep a private full-precision (widened-window) copy of
//! their matrix pair; every residual and derived module is computed from
//! that copy and re-truncated to the public window.  Modules assembled from
//! external (already-truncated) data lack the copy and their checks are
//! evaluated directly at the public precision.

use alloc::format;
use alloc::string::String;
use alloc::vec;

use crate::error::{CoreError, Result};
use crate::matrix::Mat;
use crate::padic::PadicNumber;
use crate::periods::{self, PeriodBundle};
use crate::ring::{ModelElement, Truncation};

/// A rank-1 character datum: `beta` an unramified unit, `r` the residue
/// exponent (used literally as the X-power, so tensor products add it as an
/// integer), `s` a p-integral weight.
#[derive(Debug, Clone)]
pub struct Character {
    pub beta: PadicNumber,
    pub r: i64,
    pub s: PadicNumber,
}

impl Character {
    pub fn new(beta: PadicNumber, r: i64, s: PadicNumber) -> Result<Self> {
        if beta.prime() != s.prime() {
            return Err(CoreError::PrimeMismatch);
        }
        if beta.is_zero() || beta.valuation() != 0 {
            return Err(CoreError::Malformed("beta must be a p-adic unit"));
        }
        if !s.is_zero() && s.valuation() < 0 {
            return Err(CoreError::Malformed("s must be p-integral"));
        }
        Ok(Character { beta, r, s })
    }

    /// Exact small-integer character for a given public truncation; the
    /// scalars are constructed at the widened absolute precision so that
    /// module entries derived from them carry full window precision.
    pub fn from_integers(trunc: Truncation, beta: i64, r: i64, s: i64) -> Result<Self> {
        let abs = trunc.widened().prec as i64;
        Self::new(
            PadicNumber::from_i64(trunc.p, beta, abs),
            r,
            PadicNumber::from_i64(trunc.p, s, abs),
        )
    }

    /// Pointwise product of characters: multiplies `beta`, adds `r` and `s`.
    pub fn mul(&self, other: &Character) -> Result<Self> {
        Self::new(self.beta.mul(&other.beta), self.r + other.r, self.s.add(&other.s))
    }

    pub fn inverse(&self) -> Result<Self> {
        Self::new(self.beta.inv()?, -self.r, self.s.neg())
    }
}

/// Which `(1+Y)`-power prefixes the tau-matrix of a rank-1 module.  The two
/// `r`-driven variants are kept as data for the adjudication suite; the
/// derived `Commuting` exponent `(r + s)/(p - 1)` is the one under which
/// the commutation identity holds, and is the default everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsilonTwist {
    MinusR,
    PlusR,
    Commuting,
}

/// Private full-precision matrix pair backing a constructor-built module.
#[derive(Debug, Clone)]
struct WideOps {
    phi: Mat,
    tau: Mat,
}

/// A (phi, tau)-module in matrix form.  `mat_phi` is Y-free; `mat_tau`
/// lives over the full bivariate ring; `mat_nnabla` is present for the
/// connection-bearing constructions.  `verified` records whether the
/// commutation residual vanished at the module's truncation.
#[derive(Debug, Clone)]
pub struct PhiTauModule {
    pub label: String,
    pub mat_phi: Mat,
    pub mat_tau: Mat,
    pub mat_nnabla: Option<Mat>,
    pub verified: bool,
    wide: Option<WideOps>,
}

impl PhiTauModule {
    /// Assemble a module from already-truncated matrix data (for example,
    /// deserialized matrices).  No full-precision copy exists for such a
    /// module, so later checks run at the public precision only.
    pub fn from_parts(
        label: String,
        mat_phi: Mat,
        mat_tau: Mat,
        mat_nnabla: Option<Mat>,
        verified: bool,
    ) -> Result<Self> {
        if mat_phi.dim() != mat_tau.dim() || mat_phi.trunc() != mat_tau.trunc() {
            return Err(CoreError::RankMismatch);
        }
        if let Some(n) = &mat_nnabla {
            if n.dim() != mat_phi.dim() || n.trunc() != mat_phi.trunc() {
                return Err(CoreError::RankMismatch);
            }
        }
        Ok(PhiTauModule { label, mat_phi, mat_tau, mat_nnabla, verified, wide: None })
    }

    pub fn rank(&self) -> usize {
        self.mat_phi.dim()
    }

    pub fn trunc(&self) -> Truncation {
        self.mat_phi.trunc()
    }
}

/// Finish a module whose wide matrix pair has been computed: evaluate the
/// commutation residual at full precision, re-truncate everything to the
/// public window, and record the verdict.
pub(crate) fn seal_module(
    label: String,
    pub_t: Truncation,
    wide_phi: Mat,
    wide_tau: Mat,
    mat_nnabla: Option<Mat>,
) -> Result<PhiTauModule> {
    let residual = commutation_residual(&wide_phi, &wide_tau)?.restrict_to(pub_t)?;
    Ok(PhiTauModule {
        label,
        mat_phi: wide_phi.restrict_to(pub_t)?,
        mat_tau: wide_tau.restrict_to(pub_t)?,
        mat_nnabla,
        verified: residual.is_zero(),
        wide: Some(WideOps { phi: wide_phi, tau: wide_tau }),
    })
}

fn commutation_residual(p: &Mat, a: &Mat) -> Result<Mat> {
    a.mul(&p.apply_tau())?.sub(&p.mul(&a.apply_phi())?)
}

/// `P(delta) = beta * X^r * sum_k C(-s, k) (-p)^k X^{-k}`: the phi-matrix
/// entry of the rank-1 module, built at `t` (callers pass the widened
/// window and re-truncate).  The Laurent tail is cut exactly: its `X^{-k}`
/// coefficient has valuation >= k, so terms falling off the window's left
/// edge must already be negligible at the guard precision, else the window
/// is too narrow for this weight.
fn rank1_p_entry(t: Truncation, delta: &Character, guard_prec: u32) -> Result<ModelElement> {
    if delta.r >= t.x_hi || delta.r < t.x_lo {
        return Err(CoreError::WindowTooNarrow);
    }
    let minus_p = PadicNumber::from_i64(t.p, -(t.p as i64), t.prec as i64);
    let minus_s = delta.s.neg();
    let mut out = ModelElement::zero(t);
    let mut pow = PadicNumber::one(t.p, t.prec as i64);
    let mut k: u64 = 0;
    loop {
        let c = minus_s.binomial(k)?.mul(&pow);
        if c.is_zero() {
            break;
        }
        let x = delta.r - k as i64;
        if x < t.x_lo {
            if c.valuation() < guard_prec as i64 {
                return Err(CoreError::WindowTooNarrow);
            }
            break;
        }
        out.insert(x, 0, c);
        pow = pow.mul(&minus_p);
        k += 1;
    }
    Ok(out.scalar_mul(&delta.beta))
}

/// `A(delta) = (1+Y)^a * prod_{n : p^n < x_hi} phi^n((1 + alpha X)^{-s})`
/// with the `(1+Y)`-exponent chosen by `twist`; built at `t`.
fn rank1_a_entry(t: Truncation, delta: &Character, twist: EpsilonTwist) -> Result<ModelElement> {
    let prefactor = match twist {
        EpsilonTwist::MinusR => ModelElement::one_plus_y_int_pow(t, -delta.r),
        EpsilonTwist::PlusR => ModelElement::one_plus_y_int_pow(t, delta.r),
        EpsilonTwist::Commuting => {
            let abs = delta.s.abs_prec();
            let r = PadicNumber::from_i64(t.p, delta.r, abs);
            let pm1_inv = PadicNumber::from_i64(t.p, t.p as i64 - 1, abs).inv()?;
            let a = r.add(&delta.s).mul(&pm1_inv);
            let mut one_plus_y = ModelElement::one(t);
            one_plus_y.insert(0, 1, PadicNumber::one(t.p, t.prec as i64));
            one_plus_y.pow_binomial(&a)?
        }
    };
    let mut factor = periods::one_plus_alpha_x(t)?.pow_binomial(&delta.s.neg())?;
    let mut acc = prefactor;
    for n in 0..periods::visible_factor_count(t) {
        if n > 0 {
            factor = factor.apply_phi();
        }
        acc = acc.mul(&factor)?;
    }
    Ok(acc)
}

/// Rank-1 module of a character under a chosen epsilon-twist rule.  The
/// entries are computed at the widened precision and re-truncated to the
/// bundle's window; the commutation residual is evaluated wide and stored
/// in `verified`.
pub fn rank1_module_with_twist(
    delta: &Character,
    bundle: &PeriodBundle,
    twist: EpsilonTwist,
) -> Result<PhiTauModule> {
    let pub_t = bundle.trunc;
    if delta.beta.prime() != pub_t.p {
        return Err(CoreError::PrimeMismatch);
    }
    let wt = pub_t.widened();
    let p_entry = rank1_p_entry(wt, delta, pub_t.prec)?;
    let a_entry = rank1_a_entry(wt, delta, twist)?;
    seal_module(
        format!("rank1(beta, r={}, s)", delta.r),
        pub_t,
        Mat::from_entries(1, vec![p_entry])?,
        Mat::from_entries(1, vec![a_entry])?,
        None,
    )
}

/// Rank-1 module under the commuting twist rule (the default construction).
pub fn rank1_module(delta: &Character, bundle: &PeriodBundle) -> Result<PhiTauModule> {
    rank1_module_with_twist(delta, bundle, EpsilonTwist::Commuting)
}

/// The commutation residual `A * tau(P) - P * phi(A)` (column convention),
/// re-truncated to the module's public window.  For constructor-built
/// modules it is evaluated on the full-precision pair, which is the only
/// level at which deep tau-denominators can be certified.
pub fn check_commutation(m: &PhiTauModule) -> Result<Mat> {
    let residual = match &m.wide {
        Some(w) => commutation_residual(&w.phi, &w.tau)?,
        None => commutation_residual(&m.mat_phi, &m.mat_tau)?,
    };
    residual.restrict_to(m.trunc())
}

/// Tensor product: Kronecker products of the two matrix pairs.
pub fn tensor(m1: &PhiTauModule, m2: &PhiTauModule) -> Result<PhiTauModule> {
    let label = format!("({}) (x) ({})", m1.label, m2.label);
    if let (Some(w1), Some(w2)) = (&m1.wide, &m2.wide) {
        return seal_module(
            label,
            m1.trunc(),
            w1.phi.kron(&w2.phi)?,
            w1.tau.kron(&w2.tau)?,
            None,
        );
    }
    let mut module = PhiTauModule {
        label,
        mat_phi: m1.mat_phi.kron(&m2.mat_phi)?,
        mat_tau: m1.mat_tau.kron(&m2.mat_tau)?,
        mat_nnabla: None,
        verified: false,
        wide: None,
    };
    module.verified = check_commutation(&module)?.is_zero();
    Ok(module)
}

/// Dual module: inverse-transpose on both matrices.
pub fn dual(m: &PhiTauModule) -> Result<PhiTauModule> {
    let label = format!("dual({})", m.label);
    if let Some(w) = &m.wide {
        return seal_module(
            label,
            m.trunc(),
            w.phi.inverse()?.transpose(),
            w.tau.inverse()?.transpose(),
            None,
        );
    }
    let mut module = PhiTauModule {
        label,
        mat_phi: m.mat_phi.inverse()?.transpose(),
        mat_tau: m.mat_tau.inverse()?.transpose(),
        mat_nnabla: None,
        verified: false,
        wide: None,
    };
    module.verified = check_commutation(&module)?.is_zero();
    Ok(module)
}

/// Congruence test for the matrices of nearby weights: checks the
/// hypothesis `s1 = s2 mod p^k` (returning false when it fails, which is
/// the negative-control semantics), builds both rank-1 matrix pairs with
/// `r = 0`, `beta = 1`, and tests every entry-difference term of the
/// nonnegative-X parts for membership in the weighted ideal of level `k`
/// (Y-degrees counting `p/(p-1)` X-units, the faithful translation of the
/// Witt-coordinate ideal).
pub fn congruence_check(
    s1: &PadicNumber,
    s2: &PadicNumber,
    k: u32,
    bundle: &PeriodBundle,
) -> Result<bool> {
    let diff = s1.sub(s2);
    if !diff.is_zero() && diff.valuation() < k as i64 {
        return Ok(false);
    }
    let pub_t = bundle.trunc;
    let wt = pub_t.widened();
    let one = PadicNumber::one(pub_t.p, wt.prec as i64);
    let mut mats = [ModelElement::zero(pub_t), ModelElement::zero(pub_t)];
    let mut phis = [ModelElement::zero(pub_t), ModelElement::zero(pub_t)];
    for (i, s) in [s1, s2].into_iter().enumerate() {
        let delta = Character::new(one.clone(), 0, s.clone())?;
        phis[i] = rank1_p_entry(wt, &delta, pub_t.prec)?.restrict_to(pub_t)?;
        mats[i] = rank1_a_entry(wt, &delta, EpsilonTwist::Commuting)?.restrict_to(pub_t)?;
    }
    let d_phi = phis[0].sub(&phis[1])?.x_nonneg_part();
    let d_tau = mats[0].sub(&mats[1])?.x_nonneg_part();
    Ok(d_phi.witt_ideal_membership(k) && d_tau.witt_ideal_membership(k))
}

/// The connection operator on the Y-free subring:
/// `N_nabla(f) = -lambda * (X * f')`.
pub fn nnabla_on_ring(f: &ModelElement, bundle: &PeriodBundle) -> Result<ModelElement> {
    if !f.is_y_free() {
        return Err(CoreError::HypothesisFails("nnabla input must be Y-free"));
    }
    let one = PadicNumber::one(f.prime(), f.trunc().prec as i64);
    bundle
        .lambda
        .mul(&f.d_dx().mul_monomial(1, 0, &one))
        .map(|e| e.neg())
}

/// A trianguline rank-2 assembly: the module matrices plus the crystalline
/// verdict read off the extension class.
#[derive(Debug, Clone)]
pub struct TriangulineModule {
    pub module: PhiTauModule,
    pub is_crystalline: bool,
}

/// Assemble the rank-2 trianguline (phi, N_nabla)-module of nonpositive
/// weights `k1, k2` with diagonal scalars `d1p, d2p` and extension data
/// `alpha_v` (phi-side) and `beta_v` (connection side), both Y-free.
///
/// `mat_phi` is upper triangular with diagonal `d_i * (X - p)^{-k_i}` and
/// corner `(X - p)^{min(-k1, -k2)} * alpha_v`; `mat_nnabla` has diagonal
/// `-k_i * X * lambda'` and corner `beta_v`; `mat_tau` is the diagonal of
/// the rank-1 tau-multipliers `W^{-k_i}`.  When `alpha_v != 0` the
/// (phi, N_nabla) data do not determine the tau off-diagonal, so the module
/// keeps the diagonal tau-matrix and is marked unverified.  The crystalline
/// predicate is `beta_v = 0 mod X`.
pub fn trianguline_module(
    k1: i64,
    k2: i64,
    d1p: &PadicNumber,
    d2p: &PadicNumber,
    alpha_v: &ModelElement,
    beta_v: &ModelElement,
    bundle: &PeriodBundle,
) -> Result<TriangulineModule> {
    if k1 > 0 || k2 > 0 {
        return Err(CoreError::WeightSign);
    }
    for d in [d1p, d2p] {
        if d.is_zero() || d.valuation() != 0 {
            return Err(CoreError::Malformed("diagonal scalar must be a unit"));
        }
    }
    if !alpha_v.is_y_free() || !beta_v.is_y_free() {
        return Err(CoreError::HypothesisFails("extension data must be Y-free"));
    }
    let pub_t = bundle.trunc;
    let wt = pub_t.widened();
    let e = periods::e_polynomial(wt);
    let e_pow = |n: i64| -> Result<ModelElement> {
        let mut acc = ModelElement::one(wt);
        for _ in 0..n {
            acc = acc.mul(&e)?;
        }
        Ok(acc)
    };
    let corner = e_pow((-k1).min(-k2))?.mul(&alpha_v.restrict_to(wt)?)?;
    let wide_phi = Mat::from_entries(
        2,
        vec![
            e_pow(-k1)?.scalar_mul(d1p),
            corner,
            ModelElement::zero(wt),
            e_pow(-k2)?.scalar_mul(d2p),
        ],
    )?;

    let w = &bundle.wide.w;
    let w_pow = |n: i64| -> Result<ModelElement> {
        let mut acc = ModelElement::one(wt);
        for _ in 0..n {
            acc = acc.mul(w)?;
        }
        Ok(acc)
    };
    let wide_tau = Mat::from_entries(
        2,
        vec![w_pow(-k1)?, ModelElement::zero(wt), ModelElement::zero(wt), w_pow(-k2)?],
    )?;

    let one = PadicNumber::one(pub_t.p, pub_t.prec as i64);
    let x_lambda_prime = bundle.lambda_prime.mul_monomial(1, 0, &one);
    let mat_nnabla = Mat::from_entries(
        2,
        vec![
            x_lambda_prime.mul_int(-k1),
            beta_v.clone(),
            ModelElement::zero(pub_t),
            x_lambda_prime.mul_int(-k2),
        ],
    )?;

    let label = format!("trianguline(k1={}, k2={})", k1, k2);
    let module = if alpha_v.is_zero() {
        seal_module(label, pub_t, wide_phi, wide_tau, Some(mat_nnabla))?
    } else {
        PhiTauModule {
            label,
            mat_phi: wide_phi.restrict_to(pub_t)?,
            mat_tau: wide_tau.restrict_to(pub_t)?,
            mat_nnabla: Some(mat_nnabla),
            verified: false,
            wide: Some(WideOps { phi: wide_phi, tau: wide_tau }),
        }
    };
    let is_crystalline = beta_v.terms().all(|(x, _, _)| x >= 1);
    Ok(TriangulineModule { module, is_crystalline })
}

/// The false-Tate rank-2 module: the extension of the trivial module by
/// the twisted line, with the Kummer cocycle in the tau-corner.
///
/// `mat_phi = diag(1/(p - X), 1)` (the commuting value of `b/phi(b)`,
/// identical under both lambda conventions), `mat_tau = [[W^{-1}, b], [0, 1]]`
/// (`b/tau(b) = tau(lambda)/lambda` since `tau(t) = t`), and
/// `mat_nnabla = [[-X lambda', -1], [0, 0]]`.
pub fn false_tate_module(bundle: &PeriodBundle) -> Result<PhiTauModule> {
    let pub_t = bundle.trunc;
    let wt = pub_t.widened();
    let wide_phi = Mat::from_entries(
        2,
        vec![
            periods::e_polynomial(wt).neg().invert()?,
            ModelElement::zero(wt),
            ModelElement::zero(wt),
            ModelElement::one(wt),
        ],
    )?;
    let wide_tau = Mat::from_entries(
        2,
        vec![
            bundle.wide.w.invert()?,
            bundle.wide.b.clone(),
            ModelElement::zero(wt),
            ModelElement::one(wt),
        ],
    )?;
    let one = PadicNumber::one(pub_t.p, pub_t.prec as i64);
    let mat_nnabla = Mat::from_entries(
        2,
        vec![
            bundle.lambda_prime.mul_monomial(1, 0, &one).neg(),
            ModelElement::constant(pub_t, -1),
            ModelElement::zero(pub_t),
            ModelElement::zero(pub_t),
        ],
    )?;
    seal_module(String::from("false-tate"), pub_t, wide_phi, wide_tau, Some(mat_nnabla))
}

/// Etale test in the given basis: every `mat_phi` entry must be p-integral
/// with nonnegative X-exponents, and the determinant's minimal term must be
/// a unit constant.
pub fn is_etale_window(m: &PhiTauModule) -> Result<bool> {
    for i in 0..m.rank() {
        for j in 0..m.rank() {
            for (x, _, c) in m.mat_phi.entry(i, j).terms() {
                if x < 0 || c.valuation() < 0 {
                    return Ok(false);
                }
            }
        }
    }
    let det = m.mat_phi.det()?;
    let unit_constant_lead = match det.terms().next() {
        Some((0, 0, c)) => c.valuation() == 0,
        _ => false,
    };
    Ok(unit_constant_lead)
}
