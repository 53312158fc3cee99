//! Classification invariants of hyperbolic vector fields on the circle.
//!
//! A field `scale·f ∂_t` on `ℝ/Pℤ` with simple zeros is classified by the
//! zero count `n`, the cyclic sequence of multipliers, and the regularized
//! integral `μ` of the reciprocal field. Two fields are diffeomorphic
//! exactly when those data agree up to a cyclic shift; scale and reversal
//! matching are optional refinements, and finite covers extend the relation
//! to conformality of the associated tori.

use crate::expr::{Expr, Node};
use crate::funcspace::{FuncError, PeriodicFunction, ZeroData};
use crate::numerics::{extrap, quad, roots};
use serde::Serialize;
use std::sync::{Arc, OnceLock};
use thiserror::Error;

/// Relative tolerance for invariant-list matching.
pub const MATCH_TOL: f64 = 1e-7;

/// Relative multiplier spread accepted by the Mehidi test.
pub const MEHIDI_DEFAULT_TOL: f64 = 1e-8;

/// Margin keeping the Clifton–Pohl parameter away from ±1.
pub const CP_DELTA: f64 = 1e-4;

/// Absolute quadrature tolerance for the regularized integrand.
const MU_QUAD_TOL: f64 = 1e-11;

/// Node budget for the finite-cover search.
const SEARCH_BUDGET: usize = 10_000_000;

#[derive(Debug, Clone, Error)]
pub enum FieldError {
    #[error(transparent)]
    Func(#[from] FuncError),
    #[error("field has no zeros (constant sign)")]
    NoZeros,
    #[error("period {period} is not an integer multiple (1..) of the fundamental period {fundamental}")]
    PeriodNotCover { period: f64, fundamental: f64 },
    #[error("scale must be a nonzero finite real")]
    BadScale,
    #[error("bad epsilon sequence: {0}")]
    BadEpsSequence(String),
    #[error("parameter b = {0} outside (-1, 1)")]
    OutOfRange(f64),
    #[error("multipliers {multipliers:?} do not share a common absolute value")]
    NotMehidi { multipliers: Vec<f64> },
    #[error("target mu = {target:.6e} outside the attained range [{lo:.6e}, {hi:.6e}]")]
    NoBracket { target: f64, lo: f64, hi: f64 },
    #[error("search budget exceeded: {visited} nodes (budget {budget})")]
    BudgetExceeded { visited: usize, budget: usize },
    #[error("internal validation failed: {0}")]
    Validation(String),
}

/// The classification data of a hyperbolic circle field.
///
/// `lambdas` is cyclic, stored from the zero with the smallest
/// representative in `[0, P)`; signs alternate and `n` is even.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantList {
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub mu: f64,
    pub period: f64,
    pub fundamental_period: f64,
}

/// Witness that one invariant list maps onto another.
///
/// Applying `(a, shift, reversed)` to the source list reproduces the
/// target: reverse the cyclic order and negate μ first when `reversed`,
/// then `λ_target[i] = a·λ_source[(i+shift) mod n]` and `μ_target = μ_source/a`.
/// `kf`/`kg` record cover multiplicities when the match came from a
/// finite-cover search (1 otherwise).
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct MatchCertificate {
    pub a: f64,
    pub shift: usize,
    pub reversed: bool,
    pub kf: u32,
    pub kg: u32,
}

/// The vector field `scale·f ∂_t` on `ℝ/periodℤ`.
#[derive(Debug, Clone)]
pub struct CircleField {
    f: Arc<PeriodicFunction>,
    period: f64,
    scale: f64,
    /// period / fundamental_period(f)
    cover: u32,
    mu_cache: Arc<OnceLock<Result<f64, FieldError>>>,
}

impl CircleField {
    pub fn new(f: Arc<PeriodicFunction>, period: f64, scale: f64) -> Result<Self, FieldError> {
        if scale == 0.0 || !scale.is_finite() {
            return Err(FieldError::BadScale);
        }
        let p0 = f.fundamental_period();
        let k = period / p0;
        let k_round = k.round();
        if !(k_round >= 1.0) || (k - k_round).abs() > 1e-9 * k.abs().max(1.0) {
            return Err(FieldError::PeriodNotCover { period, fundamental: p0 });
        }
        Ok(CircleField {
            f,
            period,
            scale,
            cover: k_round as u32,
            mu_cache: Arc::new(OnceLock::new()),
        })
    }

    /// Field of `f ∂_t` over the declared period of `f`.
    pub fn from_function(f: PeriodicFunction) -> Result<Self, FieldError> {
        let period = f.period();
        Self::new(Arc::new(f), period, 1.0)
    }

    pub fn function(&self) -> &Arc<PeriodicFunction> {
        &self.f
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn cover(&self) -> u32 {
        self.cover
    }

    /// The actual field value `scale·f(y)`.
    pub fn value(&self, y: f64) -> f64 {
        self.scale * self.f.value(y)
    }

    /// Rescaled copy: `c·X`.
    pub fn rescaled(&self, c: f64) -> Result<CircleField, FieldError> {
        CircleField::new(self.f.clone(), self.period, self.scale * c)
    }

    /// The push-forward of this field under `y ↦ -y`: the field of
    /// `-scale·f(-y)`, with the same invariants in reversed cyclic order
    /// and negated μ.
    pub fn reversed(&self) -> Result<CircleField, FieldError> {
        let reflected = reflect_function(&self.f)?;
        CircleField::new(Arc::new(reflected), self.period, self.scale)
    }

    /// Zeros of the field over one full period `[0, P)`, with multipliers
    /// of `scale·f`.
    pub fn zeros(&self) -> Result<Vec<ZeroData>, FieldError> {
        let base = fundamental_zeros(&self.f)?;
        if base.is_empty() {
            return Err(FieldError::NoZeros);
        }
        let p0 = self.f.fundamental_period();
        let mut out = Vec::with_capacity(base.len() * self.cover as usize);
        for j in 0..self.cover {
            for z in &base {
                out.push(ZeroData {
                    z: z.z + j as f64 * p0,
                    lambda: self.scale * z.lambda,
                    simple: z.simple,
                });
            }
        }
        Ok(out)
    }

    /// The regularized integral `μ(X) = lim_{ε→0} Σ_i ∫_{z_i+ε}^{z_{i+1}-ε} 1/X`.
    ///
    /// Computed by pole subtraction on each inter-zero interval of the
    /// fundamental period: the two first-order poles of `1/f` are removed
    /// analytically, the continuous remainder is integrated adaptively, and
    /// the exact log terms are added back (the ε-dependent parts cancel by
    /// the telescoping of `Σ 1/λ` around the circle). Covers multiply μ and
    /// the scale divides it.
    pub fn mu(&self) -> Result<f64, FieldError> {
        self.mu_cache
            .get_or_init(|| {
                let base = mu_fundamental(&self.f)?;
                Ok(self.cover as f64 * base / self.scale)
            })
            .clone()
    }

    /// Literal limit definition of μ: proper integrals at each ε of
    /// `eps_list`, then polynomial extrapolation to ε = 0. This is the
    /// independent oracle for [`mu`](Self::mu).
    pub fn mu_bruteforce(&self, eps_list: &[f64]) -> Result<f64, FieldError> {
        if eps_list.len() < 4 {
            return Err(FieldError::BadEpsSequence(format!(
                "need at least 4 entries, got {}",
                eps_list.len()
            )));
        }
        if eps_list.windows(2).any(|w| w[0] <= w[1]) || eps_list.iter().any(|&e| e <= 0.0) {
            return Err(FieldError::BadEpsSequence(
                "entries must be positive and strictly decreasing".into(),
            ));
        }
        let zeros = fundamental_zeros(&self.f)?;
        if zeros.is_empty() {
            return Err(FieldError::NoZeros);
        }
        let p0 = self.f.fundamental_period();
        let min_gap = strip_gaps(&zeros, p0).into_iter().fold(f64::INFINITY, f64::min);
        if eps_list[0] >= 0.5 * min_gap {
            return Err(FieldError::BadEpsSequence(format!(
                "largest epsilon {} must be below half the smallest zero gap {}",
                eps_list[0], min_gap
            )));
        }
        let n = zeros.len();
        let mut sums = Vec::with_capacity(eps_list.len());
        for &eps in eps_list {
            let mut s = 0.0;
            for i in 0..n {
                let zi = zeros[i].z;
                let zi1 = if i + 1 < n { zeros[i + 1].z } else { zeros[0].z + p0 };
                let (v, _) =
                    quad::integrate(&|t| 1.0 / self.f.value(t), zi + eps, zi1 - eps, MU_QUAD_TOL);
                s += v;
            }
            sums.push(s);
        }
        let limit = extrap::neville_to_zero(eps_list, &sums);
        Ok(self.cover as f64 * limit / self.scale)
    }

    /// Full invariant list of the field.
    pub fn invariant_list(&self) -> Result<InvariantList, FieldError> {
        let zeros = self.zeros()?;
        for z in &zeros {
            if !z.simple {
                return Err(FieldError::Func(FuncError::NonHyperbolic {
                    zero: z.z,
                    lambda: z.lambda,
                }));
            }
        }
        let mu = self.mu()?;
        Ok(InvariantList {
            n: zeros.len(),
            lambdas: zeros.iter().map(|z| z.lambda).collect(),
            mu,
            period: self.period,
            fundamental_period: self.f.fundamental_period(),
        })
    }
}

/// `g(y) = -f(-y)` with the same declared period.
pub fn reflect_function(f: &PeriodicFunction) -> Result<PeriodicFunction, FuncError> {
    let neg_var =
        Expr::new(Node::Neg(Box::new(Node::Var)), f.expr().var_name().map(str::to_owned));
    let g = f.expr().compose(&neg_var).scaled(-1.0);
    PeriodicFunction::new(g, f.period())
}

/// Zeros of `f` restricted to one fundamental period, all certified simple.
fn fundamental_zeros(f: &PeriodicFunction) -> Result<Vec<ZeroData>, FieldError> {
    let zeros = f.find_zeros_hyperbolic()?;
    let p0 = f.fundamental_period();
    let k = (f.period() / p0).round() as usize;
    if k <= 1 {
        return Ok(zeros.to_vec());
    }
    if zeros.len() % k != 0 {
        return Err(FieldError::Validation(format!(
            "{} zeros over {} fundamental periods",
            zeros.len(),
            k
        )));
    }
    Ok(zeros[..zeros.len() / k].to_vec())
}

fn strip_gaps(zeros: &[ZeroData], period: f64) -> Vec<f64> {
    let n = zeros.len();
    (0..n)
        .map(|i| {
            let next = if i + 1 < n { zeros[i + 1].z } else { zeros[0].z + period };
            next - zeros[i].z
        })
        .collect()
}

/// `1/f(t) - 1/(λ·(t - z))` evaluated stably near the simple zero `z`.
///
/// Three zones by distance from `z` (relative to the strip width): a Taylor
/// zone where the limit expansion `-f''/(2λ²) + c·d` is used, a middle zone
/// where the difference is combined as `(λd - f)/(λ·d·f)`, and direct
/// evaluation far away.
pub(crate) fn pole_subtracted(
    f: &PeriodicFunction,
    z: f64,
    lambda: f64,
    t: f64,
    width: f64,
) -> f64 {
    let d = t - z;
    let ad = d.abs();
    if ad < 3e-5 * width {
        let f2 = f.deriv2(z);
        let f3 = f.deriv3(z);
        let alpha = f2 / (2.0 * lambda);
        let beta = f3 / (6.0 * lambda);
        return -alpha / lambda + (alpha * alpha - beta) * d / lambda;
    }
    let fv = f.value(t);
    if ad < 0.25 * width {
        (lambda * d - fv) / (lambda * d * fv)
    } else {
        1.0 / fv - 1.0 / (lambda * d)
    }
}

/// μ of `X_{f,P₀}` over one fundamental period (scale 1).
fn mu_fundamental(f: &PeriodicFunction) -> Result<f64, FieldError> {
    let zeros = fundamental_zeros(f)?;
    if zeros.is_empty() {
        return Err(FieldError::NoZeros);
    }
    let p0 = f.fundamental_period();
    let n = zeros.len();
    let mut total = 0.0;
    for i in 0..n {
        let zi = zeros[i].z;
        let li = zeros[i].lambda;
        let (zi1, li1) = if i + 1 < n {
            (zeros[i + 1].z, zeros[i + 1].lambda)
        } else {
            (zeros[0].z + p0, zeros[0].lambda)
        };
        let gap = zi1 - zi;
        let mid = 0.5 * (zi + zi1);
        // Pair the near pole with the stable form and subtract the far pole
        // directly; the integrand extends continuously to both endpoints.
        let integrand = |t: f64| {
            if t <= mid {
                pole_subtracted(f, zi, li, t, gap) - 1.0 / (li1 * (t - zi1))
            } else {
                pole_subtracted(f, zi1, li1, t, gap) - 1.0 / (li * (t - zi))
            }
        };
        let (v, _) = quad::integrate(&integrand, zi, zi1, MU_QUAD_TOL);
        total += v + (1.0 / li - 1.0 / li1) * gap.ln();
    }
    Ok(total)
}

/// Match `src` onto `dst` by cyclic shift, optional scale, and optional
/// reversal. Deterministic: non-reversed matches are preferred, then the
/// smallest shift.
pub fn match_lists(
    src: &InvariantList,
    dst: &InvariantList,
    allow_scale: bool,
    allow_reversal: bool,
) -> Option<MatchCertificate> {
    let n = src.n;
    if n == 0 || n != dst.n {
        return None;
    }
    let reversal_options: &[bool] = if allow_reversal { &[false, true] } else { &[false] };
    for &reversed in reversal_options {
        let (lams, mu) = if reversed {
            let mut r: Vec<f64> = src.lambdas.clone();
            r.reverse();
            (r, -src.mu)
        } else {
            (src.lambdas.clone(), src.mu)
        };
        for shift in 0..n {
            let a = if allow_scale { dst.lambdas[0] / lams[shift] } else { 1.0 };
            if !a.is_finite() || a == 0.0 {
                continue;
            }
            let lambdas_ok = (0..n).all(|i| {
                let want = dst.lambdas[i];
                let got = a * lams[(i + shift) % n];
                (want - got).abs() <= MATCH_TOL * want.abs().max(got.abs())
            });
            if !lambdas_ok {
                continue;
            }
            let mu_ok = (dst.mu - mu / a).abs() <= MATCH_TOL * (1.0 + dst.mu.abs());
            if mu_ok {
                return Some(MatchCertificate { a, shift, reversed, kf: 1, kg: 1 });
            }
        }
    }
    None
}

/// Decide whether `x` and `y` are diffeomorphic (up to scale when
/// `allow_scale`, up to orientation reversal when `allow_reversal`).
///
/// The certificate scale satisfies `λ_y = a·λ_x` and `μ_y = μ_x/a`; the
/// conjugating diffeomorphism pushes `x` forward to `(1/a)·y`.
pub fn equivalent(
    x: &CircleField,
    y: &CircleField,
    allow_scale: bool,
    allow_reversal: bool,
) -> Result<Option<MatchCertificate>, FieldError> {
    let lx = x.invariant_list()?;
    let ly = y.invariant_list()?;
    Ok(match_lists(&lx, &ly, allow_scale, allow_reversal))
}

/// Synthesize the invariant list of the k-fold cover of a base list.
fn cover_list(base: &InvariantList, k: u32) -> InvariantList {
    let mut lambdas = Vec::with_capacity(base.n * k as usize);
    for _ in 0..k {
        lambdas.extend_from_slice(&base.lambdas);
    }
    InvariantList {
        n: base.n * k as usize,
        lambdas,
        mu: base.mu * k as f64,
        period: base.period * k as f64,
        fundamental_period: base.fundamental_period,
    }
}

/// Search cover multiplicities `k_f, k_g ≤ kmax` making `X_{f,k_f·P}`
/// diffeomorphic to a multiple of `X_{g,k_g·Q}` (P, Q the declared
/// periods); this is the finite-cover conformality criterion for the
/// associated tori.
///
/// Returns the periods and certificate of the minimal `k_f + k_g` match.
pub fn finite_cover_conformal(
    f: &Arc<PeriodicFunction>,
    g: &Arc<PeriodicFunction>,
    kmax: u32,
) -> Result<Option<(f64, f64, MatchCertificate)>, FieldError> {
    let p0 = f.period();
    let q0 = g.period();
    let xf = CircleField::new(f.clone(), p0, 1.0)?;
    let xg = CircleField::new(g.clone(), q0, 1.0)?;
    let base_f = xf.invariant_list()?;
    let base_g = xg.invariant_list()?;

    let gcd = {
        let (mut a, mut b) = (base_f.n, base_g.n);
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    };
    // n_f·k_f = n_g·k_g forces (k_f, k_g) = m·(n_g/d, n_f/d).
    let step_f = (base_g.n / gcd) as u32;
    let step_g = (base_f.n / gcd) as u32;

    let mut visited = 0usize;
    let mut m = 1u32;
    loop {
        let (kf, kg) = (m * step_f, m * step_g);
        if kf > kmax || kg > kmax {
            return Ok(None);
        }
        visited += (base_f.n * kf as usize).max(1);
        if visited > SEARCH_BUDGET {
            return Err(FieldError::BudgetExceeded { visited, budget: SEARCH_BUDGET });
        }
        let lf = cover_list(&base_f, kf);
        let lg = cover_list(&base_g, kg);
        if let Some(mut cert) = match_lists(&lf, &lg, true, false) {
            cert.kf = kf;
            cert.kg = kg;
            return Ok(Some((kf as f64 * p0, kg as f64 * q0, cert)));
        }
        m += 1;
    }
}

/// The common multiplier modulus when `f` satisfies Mehidi's condition
/// (`f(z) = 0 ⇒ |f'(z)| = λ`), else `None`.
pub fn is_mehidi(f: &PeriodicFunction, tol: f64) -> Result<Option<f64>, FieldError> {
    let zeros = f.find_zeros_hyperbolic()?;
    if zeros.is_empty() {
        return Err(FieldError::NoZeros);
    }
    let mean = zeros.iter().map(|z| z.lambda.abs()).sum::<f64>() / zeros.len() as f64;
    let spread = zeros.iter().map(|z| (z.lambda.abs() - mean).abs()).fold(0.0, f64::max);
    Ok(if spread <= tol * mean { Some(mean) } else { None })
}

/// The multiplier moduli of all zeros, for diagnostics.
pub fn multiplier_moduli(f: &PeriodicFunction) -> Result<Vec<f64>, FieldError> {
    Ok(f.find_zeros_hyperbolic()?.iter().map(|z| z.lambda.abs()).collect())
}

/// The family profile `f_b(y) = sin(y)(1 + b·sin(y))`.
pub fn cp_profile(b: f64) -> Result<PeriodicFunction, FieldError> {
    if !(b.abs() < 1.0) {
        return Err(FieldError::OutOfRange(b));
    }
    let sin = Node::Sin(Box::new(Node::Var));
    let root = Node::Mul(
        Box::new(sin.clone()),
        Box::new(Node::Add(
            Box::new(Node::Const(1.0)),
            Box::new(Node::Mul(Box::new(Node::Const(b)), Box::new(sin))),
        )),
    );
    Ok(PeriodicFunction::new(
        Expr::new(root, Some("y".to_owned())),
        2.0 * std::f64::consts::PI,
    )?)
}

/// `μ(X_{f_b, 2kπ}) = k·μ(X_{f_b, 2π})`.
pub fn mu_cp(b: f64, k: u32) -> Result<f64, FieldError> {
    if !(b.abs() < 1.0 - 1e-6) {
        return Err(FieldError::OutOfRange(b));
    }
    if k == 0 {
        return Err(FieldError::Validation("cover multiplicity must be positive".into()));
    }
    let f = Arc::new(cp_profile(b)?);
    let x = CircleField::new(f, 2.0 * std::f64::consts::PI * k as f64, 1.0)?;
    x.mu()
}

/// Result of matching a field into the Clifton–Pohl family: `X_{f,P}` is
/// diffeomorphic to `a·X_{f_b, 2kπ}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CpMatch {
    pub b: f64,
    pub k: u32,
    pub a: f64,
}

static CP_MONOTONE: OnceLock<Result<(f64, f64), FieldError>> = OnceLock::new();

/// Endpoint values of b ↦ μ_cp(b, 1) after checking strict monotonicity on
/// a 101-point grid (done once per process).
fn cp_range() -> Result<(f64, f64), FieldError> {
    CP_MONOTONE
        .get_or_init(|| {
            let lo_b = -1.0 + CP_DELTA;
            let hi_b = 1.0 - CP_DELTA;
            let mut prev = f64::NAN;
            let mut first = 0.0;
            let mut last = 0.0;
            for i in 0..=100 {
                let b = lo_b + (hi_b - lo_b) * i as f64 / 100.0;
                let v = mu_cp(b, 1)?;
                if i == 0 {
                    first = v;
                } else if v >= prev {
                    return Err(FieldError::Validation(format!(
                        "mu_cp not strictly decreasing near b = {b}"
                    )));
                }
                prev = v;
                last = v;
            }
            Ok((first, last))
        })
        .clone()
}

/// Find the unique `(b, k, a)` with `X_{f,P}` diffeomorphic to
/// `a·X_{f_b, 2kπ}`, for `f` satisfying Mehidi's condition.
///
/// `a` is pinned to the common multiplier modulus (positive); `b` then
/// solves `μ_cp(b, 1) = a·μ(X_{f,P})/k` by bracketed secant/bisection on
/// the numerically verified monotone branch.
pub fn match_to_cp(f: &Arc<PeriodicFunction>, period: f64) -> Result<CpMatch, FieldError> {
    let x = CircleField::new(f.clone(), period, 1.0)?;
    let list = x.invariant_list()?;
    let lambda_common = match is_mehidi(f, MEHIDI_DEFAULT_TOL)? {
        Some(l) => l,
        None => {
            return Err(FieldError::NotMehidi { multipliers: multiplier_moduli(f)? });
        }
    };
    let k = (list.n / 2) as u32;
    let a = lambda_common;
    let target = a * list.mu / k as f64;

    let (mu_at_lo, mu_at_hi) = cp_range()?;
    // mu_cp is decreasing: mu_at_lo (b = -1+δ) is the max.
    let (lo_val, hi_val) = (mu_at_hi, mu_at_lo);
    if target < lo_val || target > hi_val {
        return Err(FieldError::NoBracket { target, lo: lo_val, hi: hi_val });
    }

    let g = |b: f64| mu_cp(b, 1).expect("mu_cp inside verified range") - target;
    let b = roots::brent(g, -1.0 + CP_DELTA, 1.0 - CP_DELTA, 1e-10)
        .ok_or_else(|| FieldError::Validation("bracket lost during solve".into()))?;

    // Validate the full invariant lists before returning.
    let fb = Arc::new(cp_profile(b)?);
    let xb = CircleField::new(fb, 2.0 * std::f64::consts::PI * k as f64, 1.0)?;
    let lb = xb.invariant_list()?;
    match match_lists(&lb, &list, true, false) {
        Some(cert) if (cert.a - a).abs() <= 1e-6 * a => Ok(CpMatch { b, k, a }),
        other => Err(FieldError::Validation(format!(
            "solved b = {b} failed list validation: {other:?}"
        ))),
    }
}

#[cfg(test)]
mod tests;

/// Test scaffolding hook; not part of the public contract.
#[doc(hidden)]
pub fn debug_pole_subtracted(f: &PeriodicFunction, z: f64, lambda: f64, t: f64, width: f64) -> f64 {
    pole_subtracted(f, z, lambda, t, width)
}
