//! Closed-form limit theory for the ancestor counts.
//!
//! Everything downstream of the dislocation measure that can be computed
//! without simulation lives here: the subordinator Laplace exponent φ and
//! its derivative at 0+, the tail parameters (γ, c_ν), the three regime
//! constants (C^sub, C^cr, and the supercritical area mean), regime
//! classification with the per-multiplicity coefficients, the urn
//! function f_k, and the potential densities of the tagged-fragment
//! subordinator for Ford and stable models.
//!
//! Closed forms are primary; adaptive tanh–sinh quadrature against the
//! explicit s₁-densities provides the independent cross-checks
//! ([`phi_quadrature`]) and the integrals with no closed form
//! ([`c_sub`]).

use crate::model::{DislocationModel, Family};
use crate::quad::tanh_sinh;
pub use crate::special::{digamma, gamma, gamma_signed, ln_gamma};
use crate::special::beta_lifted;
use crate::{Error, Result};

/// Number of multiplicity classes r = 1..=R carried in predictions and
/// reports.
pub const MULTIPLICITY_R: usize = 4;

/// Quadrature tolerances for the ν-integrals. The tanh–sinh error
/// estimate is conservative, so these comfortably meet the 1e−8 (φ) and
/// 1e−9 (C^sub) accuracy contracts.
const NU_ABS_TOL: f64 = 1e-14;
const NU_REL_TOL: f64 = 1e-12;

/// Phase of the ancestor-count growth for a given (model, k).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// kγ < 1: N_n ~ Γ(1−1/k) C^sub n^{1/k}, deterministic limit.
    Subcritical,
    /// kγ = 1: N_n ~ Γ(1−1/k) C^cr n^{1/k} log n, deterministic limit.
    Critical,
    /// kγ > 1: N_n / n^γ converges to a random limit with known mean.
    Supercritical,
}

/// Whether the scaling limit is a constant or a nondegenerate random
/// variable (reported through its mean).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Limit {
    Deterministic,
    RandomWithMean,
}

/// Full prediction for the growth of N_n(k) and N_{n,r}(k).
#[derive(Debug, Clone, Copy)]
pub struct RegimePrediction {
    pub regime: Regime,
    /// Exponent e in N_n ≍ n^e (up to the log factor below).
    pub exponent: f64,
    /// True iff the normalization carries an extra log n (critical case).
    pub log_factor: bool,
    pub limit: Limit,
    /// Limit of N_n / (n^e log^δ n): Γ(1−1/k) C^sub, Γ(1−1/k) C^cr, or
    /// the mean Γ(1−γ) k^γ E[A_k] for the supercritical random limit.
    pub constant: f64,
    /// Corresponding limits for N_{n,r}, r = 1..=MULTIPLICITY_R:
    /// Γ(r−1/k)/(k·r!)·C below criticality, γΓ(r−γ)k^γ/r!·E[A_k] above.
    pub constant_r: [f64; MULTIPLICITY_R],
    /// Predicted ratios N_{n,r}/N_n (constant_r / constant).
    pub ratio_r: [f64; MULTIPLICITY_R],
}

/// ψ extended to (−1, 0) through the recurrence ψ(x) = ψ(x+1) − 1/x.
fn digamma_any(x: f64) -> Result<f64> {
    if x > 0.0 {
        digamma(x)
    } else if x > -1.0 {
        Ok(digamma(x + 1.0)? - 1.0 / x)
    } else {
        Err(Error::Domain(format!("digamma_any expects x > -1, got {x}")))
    }
}

/// B(a, z) through the pole-lifted continuation, switching to log space
/// when one argument is large enough to overflow the Γ factors. The
/// smaller argument stays in (−1, ∞) \ {0}.
fn beta_flex(a: f64, z: f64) -> Result<f64> {
    if a.max(z) <= 30.0 {
        return beta_lifted(a, z);
    }
    let (s, l) = if a <= z { (a, z) } else { (z, a) };
    if s == 0.0 {
        return Err(Error::Domain("beta_flex pole at zero argument".into()));
    }
    let ln = ln_gamma(s + 1.0)? + ln_gamma(l + 1.0)? + (s + l).ln() + (s + l + 1.0).ln()
        - (s.abs() * l).ln()
        - ln_gamma(s + l + 2.0)?;
    Ok(s.signum() * ln.exp())
}

/// 1 − u^p − (1−u)^p evaluated from 1−u without cancellation (u near 1).
pub(crate) fn power_deficit(one_minus_u: f64, p: f64) -> f64 {
    -(p * (-one_minus_u).ln_1p()).exp_m1() - one_minus_u.powf(p)
}

/// Exponent of the ν(s₁)-density envelope at s₁ → 1 (density ~ C·(1−u)^p).
/// Errors for stable β < 2, which has no binary density.
pub(crate) fn density_exponent_at_1(model: &DislocationModel) -> Result<f64> {
    match model.family() {
        Family::DirichletBinary { b, .. } | Family::BetaType { b, .. } => Ok(b - 1.0),
        Family::FordAlpha { a } => Ok(-a - 1.0),
        Family::Stable { beta } => {
            if beta < 2.0 {
                Err(Error::DensityUnavailable(format!(
                    "Stable(beta={beta}) is multifurcating; density-based integrals need beta = 2"
                )))
            } else {
                Ok(-1.5)
            }
        }
    }
}

/// ν(s₁)-density at u with 1−u supplied exactly; caller must have checked
/// availability through [`density_exponent_at_1`]. Includes the scale.
fn density_off(model: &DislocationModel, u: f64, omu: f64) -> f64 {
    density_reduced(model, u, omu) * omu.powf(density_exponent_at_1(model).expect("checked"))
}

/// The density with its leading (1−u)-power divided out:
/// density(u) = density_reduced(u) · (1−u)^{density_exponent_at_1}.
/// The reduced factor is bounded as u → 1 (its limit is finite), which is
/// what lets the singular integrals below avoid intermediate overflow.
/// Includes the scale.
pub(crate) fn density_reduced(model: &DislocationModel, u: f64, omu: f64) -> f64 {
    let d = match model.family() {
        Family::DirichletBinary { a, b } | Family::BetaType { a, b } => {
            // u^{a−1}omu^{b−1} + u^{b−1}omu^{a−1} = omu^{b−1}(u^{a−1} + u^{b−1}omu^{a−b})
            u.powf(a - 1.0) + u.powf(b - 1.0) * omu.powf(a - b)
        }
        Family::FordAlpha { a } => {
            // c[a(u·omu)^{−a−1} + 2(1−2a)(u·omu)^{−a}]
            //   = omu^{−a−1} · c·u^{−a−1}(a + 2(1−2a)u·omu)
            let cg = match gamma(1.0 - a) {
                Ok(g) => 1.0 / g,
                Err(_) => unreachable!("a in (0,1) validated at construction"),
            };
            cg * u.powf(-a - 1.0) * (a + 2.0 * (1.0 - 2.0 * a) * u * omu)
        }
        Family::Stable { beta } => {
            debug_assert!(beta == 2.0, "guarded by density_exponent_at_1");
            u.powf(-1.5) / std::f64::consts::PI.sqrt()
        }
    };
    model.scale() * d
}

/// ∫_{1/2}^1 g(u, 1−u) ν(s₁ ∈ du) by tanh–sinh.
///
/// The integrand is supplied in reduced form: `g_reduced(u, dr, ln_dr)`
/// must equal g(u, 1−u) / (1−u)^{g_exp} with dr = 1−u, and must stay
/// bounded (at worst logarithmically divergent, via `ln_dr`) as dr → 0.
/// `ln_dr` is always finite and exact even when dr itself underflows.
///
/// With p = density exponent + g_exp, the combined integrand behaves like
/// dr^p at the right endpoint. Mildly singular integrals (p ≥ −0.3) are
/// integrated directly; deeper singularities are regularized by the
/// substitution w = dr^δ, δ = 1 + p, under which dr^p · dw-jacobian
/// collapses to the constant 1/δ — the reduced factors are all that is
/// ever evaluated, so no overflow can occur.
pub(crate) fn nu_integral<G>(model: &DislocationModel, g_reduced: G, g_exp: f64) -> Result<f64>
where
    G: Fn(f64, f64, f64) -> f64,
{
    let p = density_exponent_at_1(model)? + g_exp;
    if p <= -1.0 {
        return Err(Error::Domain(format!(
            "nu integral diverges: endpoint exponent {p} <= -1"
        )));
    }
    if p >= -0.3 {
        let r = tanh_sinh(
            |u, _dl, dr| {
                let ln_dr = dr.ln();
                g_reduced(u, dr, ln_dr) * density_reduced(model, u, dr) * (p * ln_dr).exp()
            },
            0.5,
            1.0,
            NU_ABS_TOL,
            NU_REL_TOL,
        )?;
        Ok(r.value)
    } else {
        let delta = 1.0 + p;
        let upper = 0.5_f64.powf(delta);
        let r = tanh_sinh(
            |_w, dlw, _drw| {
                let ln_dr = dlw.ln() / delta;
                let dr = ln_dr.exp(); // = dlw^{1/δ}; may underflow, ln_dr stays exact
                let u = 1.0 - dr;
                g_reduced(u, dr, ln_dr) * density_reduced(model, u, dr) / delta
            },
            0.0,
            upper,
            NU_ABS_TOL,
            NU_REL_TOL,
        )?;
        Ok(r.value)
    }
}

/// Laplace exponent φ(q) = ∫ (1 − Σ s_i^{q+1}) ν(ds) in closed form.
///
/// Defined on the analytic window q > γ − 1 (so q ≥ 0 always works);
/// φ(0) = 0 for every conservative measure. Scales linearly with the
/// model's scale.
pub fn phi(model: &DislocationModel, q: f64) -> Result<f64> {
    if !q.is_finite() {
        return Err(Error::Domain(format!("phi expects finite q, got {q}")));
    }
    if q <= model.gamma_index() - 1.0 {
        return Err(Error::Domain(format!(
            "phi diverges for q <= gamma - 1 = {}, got {q}",
            model.gamma_index() - 1.0
        )));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    let unit = match model.family() {
        Family::FordAlpha { a } => {
            // φ_a(q) = Γ(q+1−a)Γ(q+2) / (Γ(q)Γ(q+3−2a))
            if q > 30.0 {
                (ln_gamma(q + 1.0 - a)? + ln_gamma(q + 2.0)?
                    - ln_gamma(q)?
                    - ln_gamma(q + 3.0 - 2.0 * a)?)
                .exp()
            } else {
                gamma_signed(q + 1.0 - a)? * gamma_signed(q + 2.0)?
                    / (gamma_signed(q)? * gamma_signed(q + 3.0 - 2.0 * a)?)
            }
        }
        Family::Stable { beta } => {
            // φ_β(q) = β Γ(q+1−1/β) / Γ(q)
            if q > 30.0 {
                beta * (ln_gamma(q + 1.0 - 1.0 / beta)? - ln_gamma(q)?).exp()
            } else {
                beta * gamma_signed(q + 1.0 - 1.0 / beta)? / gamma_signed(q)?
            }
        }
        Family::DirichletBinary { a, b } | Family::BetaType { a, b } => {
            if a == 0.0 && b == 0.0 {
                // Limit of the B-form as both exponents hit the boundary.
                2.0 * (digamma(q + 1.0)? - digamma(1.0)?)
            } else if a == 0.0 || b == 0.0 {
                // One boundary exponent: φ = ψ(z+q+1) − ψ(z) − B(z, q+1)
                // with z the nonzero exponent.
                let z = a + b;
                digamma_any(z + q + 1.0)? - digamma_any(z)? - beta_flex(z, q + 1.0)?
            } else {
                beta_flex(a, b)? - beta_flex(a + q + 1.0, b)? - beta_flex(a, b + q + 1.0)?
            }
        }
    };
    Ok(model.scale() * unit)
}

/// φ(q) by direct quadrature of the s₁-density — the independent check of
/// the closed forms. Needs an explicit density (not stable β < 2).
pub fn phi_quadrature(model: &DislocationModel, q: f64) -> Result<f64> {
    if !q.is_finite() || q <= model.gamma_index() - 1.0 {
        return Err(Error::Domain(format!("phi_quadrature: q = {q} outside analytic window")));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    let p = q + 1.0;
    if p >= 1.0 {
        // 1 − u^p − dr^p ~ p·dr at the endpoint: reduce by dr.
        nu_integral(
            model,
            move |_u, dr, ln_dr| {
                let head = if dr < 1e-250 { p } else { -(p * (-dr).ln_1p()).exp_m1() / dr };
                head - ((p - 1.0) * ln_dr).exp()
            },
            1.0,
        )
    } else {
        // q < 0: the endpoint behavior is −dr^p; reduce by dr^p.
        nu_integral(
            model,
            move |_u, dr, ln_dr| {
                if dr < 1e-250 {
                    p * ((1.0 - p) * ln_dr).exp() - 1.0
                } else {
                    -(p * (-dr).ln_1p()).exp_m1() * (-p * ln_dr).exp() - 1.0
                }
            },
            p,
        )
    }
}

/// φ′(0+) = ∫ Σ s_i |log s_i| ν(ds) — the common denominator of the
/// sub- and critical limit constants.
pub fn phi_prime0(model: &DislocationModel) -> Result<f64> {
    let unit = match model.family() {
        Family::FordAlpha { a } => gamma(1.0 - a)? / gamma(3.0 - 2.0 * a)?,
        Family::Stable { beta } => beta * gamma(1.0 - 1.0 / beta)?,
        Family::DirichletBinary { a, b } | Family::BetaType { a, b } => {
            if a == 0.0 || b == 0.0 {
                // Boundary exponents: integrate Σ s|log s| directly (the
                // closed digamma form below degenerates with Γ poles).
                // g = u(−ln u) + dr(−ln dr), reduced by dr; nu_integral
                // already carries the scale.
                return nu_integral(
                    model,
                    |u, dr, ln_dr| {
                        let t1 = if dr < 1e-250 { 1.0 } else { -(-dr).ln_1p() / dr };
                        u * t1 - ln_dr
                    },
                    1.0,
                );
            }
            // Lifted digamma form, finite for all a, b ∈ (−1, ∞) \ {0}.
            let z = a + b + 1.0;
            gamma_signed(a)? * gamma_signed(b)? / gamma(z + 2.0)?
                * ((a + b) * (z * (z + 1.0) * digamma(z + 2.0)? - (z + 1.0) - z)
                    - z * (z + 1.0) * (a * digamma(a + 1.0)? + b * digamma(b + 1.0)?))
        }
    };
    Ok(model.scale() * unit)
}

/// The power-tail pair (γ, c_ν) of the dislocation measure:
/// ν(s₁ ≤ 1 − x) ~ c_ν x^{−γ} as x → 0 (for γ = 0 the left side simply
/// converges to the finite total mass c_ν).
pub fn hgamma_params(model: &DislocationModel) -> Result<(f64, f64)> {
    match model.c_nu() {
        Some(c) => Ok((model.gamma_index(), c)),
        None => Err(Error::DegenerateParameter(
            "BetaType with b = 0 has a logarithmic (slowly varying) tail; \
             the power-tail parameters (gamma, c_nu) do not exist"
                .into(),
        )),
    }
}

/// Subcritical constant C^sub = ∫ (1 − Σ s_i^k)^{1/k} ν(ds) / φ′(0+),
/// requiring kγ < 1. Absolute accuracy ≤ 1e−9. Invariant under scaling
/// of ν.
pub fn c_sub(model: &DislocationModel, k: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain(format!("c_sub needs k >= 2, got {k}")));
    }
    let (g, _) = hgamma_params(model)?;
    let kf = k as f64;
    if kf * g >= 1.0 - 1e-12 {
        return Err(Error::Domain(format!(
            "c_sub needs k*gamma < 1 (subcritical); got k*gamma = {}",
            kf * g
        )));
    }
    let inv_k = 1.0 / kf;
    // (1 − u^k − dr^k)^{1/k} = (deficit/dr)^{1/k} · dr^{1/k}; the ratio
    // tends to k at the endpoint.
    let numerator = nu_integral(
        model,
        move |_u, dr, ln_dr| {
            let ratio = if dr < 1e-250 {
                kf - ((kf - 1.0) * ln_dr).exp()
            } else {
                power_deficit(dr, kf) / dr
            };
            ratio.powf(inv_k)
        },
        inv_k,
    )?;
    Ok(numerator / phi_prime0(model)?)
}

/// Critical constant C^cr = c_ν k^{1/k − 1} / φ′(0+), requiring kγ = 1
/// within 1e−12.
pub fn c_cr(model: &DislocationModel, k: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain(format!("c_cr needs k >= 2, got {k}")));
    }
    let (g, c) = hgamma_params(model)?;
    let kf = k as f64;
    if (kf * g - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "c_cr needs k*gamma = 1 (critical); got k*gamma = {}",
            kf * g
        )));
    }
    Ok(c * kf.powf(1.0 / kf - 1.0) / phi_prime0(model)?)
}

/// First moment of the Brownian-CRT limit variable X_k, k ≥ 3:
/// E[X_k] = √k · Γ(k/2 − 1) / Γ((k−1)/2).
pub fn expected_xk(k: u32) -> Result<f64> {
    if k < 3 {
        return Err(Error::Domain(format!("expected_xk needs k >= 3, got {k}")));
    }
    let kf = k as f64;
    Ok(kf.sqrt() * gamma(kf / 2.0 - 1.0)? / gamma((kf - 1.0) / 2.0)?)
}

/// Mean of the supercritical area variable: E[A_k] = c_ν / φ(kγ − 1),
/// requiring kγ > 1. Invariant under scaling of ν.
pub fn expected_area(model: &DislocationModel, k: u32) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain(format!("expected_area needs k >= 2, got {k}")));
    }
    let (g, c) = hgamma_params(model)?;
    let kf = k as f64;
    if kf * g - 1.0 <= 1e-12 {
        return Err(Error::Domain(format!(
            "expected_area needs k*gamma > 1 (supercritical); got k*gamma = {}",
            kf * g
        )));
    }
    Ok(c / phi(model, kf * g - 1.0)?)
}

/// Mean of the full supercritical limit: Γ(1−γ) k^γ E[A_k].
pub fn expected_area_limit_mean(model: &DislocationModel, k: u32) -> Result<f64> {
    let (g, _) = hgamma_params(model)?;
    Ok(gamma(1.0 - g)? * (k as f64).powf(g) * expected_area(model, k)?)
}

/// Classify (model, k) into its growth regime and assemble the limit
/// constants, including the N_{n,r} coefficients for r = 1..=R.
pub fn classify(model: &DislocationModel, k: u32) -> Result<RegimePrediction> {
    if k < 2 {
        return Err(Error::Domain(format!("classify needs k >= 2, got {k}")));
    }
    let (g, _) = hgamma_params(model)?;
    let kf = k as f64;
    let kg = kf * g;
    let mut constant_r = [0.0; MULTIPLICITY_R];
    let mut ratio_r = [0.0; MULTIPLICITY_R];
    let mut factorial = 1.0;

    if (kg - 1.0).abs() <= 1e-12 || kg < 1.0 {
        let critical = (kg - 1.0).abs() <= 1e-12;
        let c = if critical { c_cr(model, k)? } else { c_sub(model, k)? };
        let g_head = gamma(1.0 - 1.0 / kf)?;
        for r in 1..=MULTIPLICITY_R {
            factorial *= r as f64;
            let coeff = gamma(r as f64 - 1.0 / kf)? / (kf * factorial);
            constant_r[r - 1] = coeff * c;
            ratio_r[r - 1] = coeff / g_head;
        }
        Ok(RegimePrediction {
            regime: if critical { Regime::Critical } else { Regime::Subcritical },
            exponent: 1.0 / kf,
            log_factor: critical,
            limit: Limit::Deterministic,
            constant: g_head * c,
            constant_r,
            ratio_r,
        })
    } else {
        let ea = expected_area(model, k)?;
        let g_head = gamma(1.0 - g)?;
        let kpow = kf.powf(g);
        for r in 1..=MULTIPLICITY_R {
            factorial *= r as f64;
            let coeff = g * gamma(r as f64 - g)? / factorial;
            constant_r[r - 1] = coeff * kpow * ea;
            ratio_r[r - 1] = coeff / g_head;
        }
        Ok(RegimePrediction {
            regime: Regime::Supercritical,
            exponent: g,
            log_factor: false,
            limit: Limit::RandomWithMean,
            constant: g_head * kpow * ea,
            constant_r,
            ratio_r,
        })
    }
}

/// Solve 1 − (1−d)^k − d^k = x for d ∈ (0, 1/2]; the left side is
/// strictly increasing from 0 to 1 − 2^{1−k}.
fn invert_power_deficit(k: f64, x: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if power_deficit(mid, k) < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut d = 0.5 * (lo + hi);
    // Newton polish: derivative k[(1−d)^{k−1} − d^{k−1}].
    for _ in 0..3 {
        let deriv = k * ((1.0 - d).powf(k - 1.0) - d.powf(k - 1.0));
        if deriv <= 0.0 {
            break;
        }
        let step = (power_deficit(d, k) - x) / deriv;
        let next = d - step;
        if next > 0.0 && next <= 0.5 {
            d = next;
        }
    }
    d
}

/// The urn function f_k(x) = ν(Σ s_i^k ≤ 1 − x), computed by inverting
/// h(s) = s^k + (1−s)^k on [1/2, 1) and integrating the s₁-density.
/// Vanishes for x ≥ 1 − 2^{1−k}. Under (H_γ), f_k(x) ~ c_ν (x/k)^{−γ}.
pub fn f_k_numeric(model: &DislocationModel, k: u32, x: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain(format!("f_k needs k >= 2, got {k}")));
    }
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("f_k needs x in (0,1), got {x}")));
    }
    density_exponent_at_1(model)?; // rejects stable beta < 2 up front
    let kf = k as f64;
    // max over (0, 1/2] of 1 − u^k − (1−u)^k is 1 − 2^{1−k}, attained at
    // u = 1/2; beyond that the event is empty.
    if x >= power_deficit(0.5, kf) {
        return Ok(0.0);
    }
    let d = invert_power_deficit(kf, x);
    // ν(s₁ ∈ [1/2, 1−d]): regular integrand on a closed interval, with a
    // boundary layer of width d at the right end that tanh–sinh resolves.
    let r = tanh_sinh(
        |u, _dl, dr| density_off(model, u, d + dr),
        0.5,
        1.0 - d,
        NU_ABS_TOL,
        NU_REL_TOL,
    )?;
    Ok(r.value)
}

/// Potential density f_a(t) of the Ford(a) tagged-fragment subordinator:
/// f_a(t) = g_a(e^{−t}) with
/// g_a(x) = Γ(a)⁻¹ x^{3−2a} (1−x)^{a−1} ₂F₁(2, 1−a; a; 1−x).
///
/// Near x = 1 (small t) the hypergeometric series converges fast; for
/// x < 0.4 the standard z ↦ 1−z connection formula re-expands around 0.
/// The connection coefficients degenerate (Γ poles) as a → 1/2; exactly
/// a = 1/2 collapses to the closed form (1−e^{−t})^{−1/2}/√π, and the
/// punctured sliver 0 < |a − 1/2| < 1e−4 is rejected for t in the
/// connection range.
pub fn ford_potential_density(a: f64, t: f64, tol: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Domain(format!("ford_potential_density needs a in (0,1), got {a}")));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("ford_potential_density needs t > 0, got {t}")));
    }
    if !(tol > 0.0 && tol < 0.1) {
        return Err(Error::Domain(format!("series tolerance out of range: {tol}")));
    }
    let omx = -(-t).exp_m1(); // 1 − e^{−t}, exact for small t
    if a == 0.5 {
        return Ok(omx.powf(-0.5) / std::f64::consts::PI.sqrt());
    }
    let x = (-t).exp();
    let prefactor = x.powf(3.0 - 2.0 * a) * omx.powf(a - 1.0) / gamma(a)?;
    let f21 = if x >= 0.4 {
        hyp2f1_series(2.0, 1.0 - a, a, omx, tol)?
    } else {
        if (a - 0.5).abs() < 1e-4 {
            return Err(Error::DegenerateParameter(format!(
                "connection coefficients degenerate near a = 1/2 (a = {a}); \
                 use a = 1/2 exactly or t <= {:.3}",
                -(0.4_f64.ln())
            )));
        }
        let k1 = gamma_signed(a)? * gamma_signed(2.0 * a - 3.0)?
            / (gamma_signed(a - 2.0)? * gamma_signed(2.0 * a - 1.0)?);
        let k2 = gamma(a)? * gamma(3.0 - 2.0 * a)? / gamma(1.0 - a)?;
        k1 * hyp2f1_series(2.0, 1.0 - a, 4.0 - 2.0 * a, x, tol)?
            + k2 * x.powf(2.0 * a - 3.0)
                * hyp2f1_series(a - 2.0, 2.0 * a - 1.0, 2.0 * a - 2.0, x, tol)?
    };
    Ok(prefactor * f21)
}

/// Potential density of the stable-β tagged subordinator:
/// U_β(dy)/dy = (β Γ(1−1/β))⁻¹ (1−e^{−y})^{−1/β}, β ∈ (1, 2].
pub fn stable_potential_density(beta: f64, y: f64) -> Result<f64> {
    if !(beta > 1.0 && beta <= 2.0) {
        return Err(Error::Domain(format!("stable_potential_density needs beta in (1,2], got {beta}")));
    }
    if !(y > 0.0) {
        return Err(Error::Domain(format!("stable_potential_density needs y > 0, got {y}")));
    }
    Ok((-(-y).exp_m1()).powf(-1.0 / beta) / (beta * gamma(1.0 - 1.0 / beta)?))
}

/// Gauss series for ₂F₁(α, β; c; z), |z| < 1, with term-ratio truncation:
/// stop once |term| < tol·|partial| after at least 10 terms.
fn hyp2f1_series(alpha: f64, beta: f64, c: f64, z: f64, tol: f64) -> Result<f64> {
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for n in 0..100_000 {
        let nf = n as f64;
        let denom = (c + nf) * (nf + 1.0);
        if denom == 0.0 {
            return Err(Error::SeriesNonconvergence(format!(
                "hypergeometric parameter c = {c} hits a nonpositive integer"
            )));
        }
        term *= (alpha + nf) * (beta + nf) / denom * z;
        sum += term;
        if n > 10 && term.abs() < tol * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::SeriesNonconvergence(format!(
        "2F1({alpha},{beta};{c};{z}) did not converge"
    )))
}
