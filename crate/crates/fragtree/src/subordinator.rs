//! Tagged-fragment subordinator and its Monte Carlo estimators.
//!
//! A uniformly tagged point of the fragmentation sits, at every time t, in a
//! fragment of mass F(t) = e^{−ξ(t)}, where ξ is a driftless subordinator
//! whose Lévy measure Ξ is the size-biased push-forward of the dislocation
//! measure ν under s ↦ −log s: each split sends the tagged point into
//! fragment s with probability s, contributing a jump −log s. This module
//! simulates single tagged lines (never the whole partition process) and
//! derives three estimators from them:
//!
//! * [`leaf_depth`] — one sample of ∫₀^∞ e^{αξ(t)} dt with α = 1 − kγ < 0,
//!   the depth of the tagged leaf under the self-similar time change;
//! * [`area_estimate`] — c_ν × the Monte Carlo mean of the depth, the area
//!   variable A_k whose mean is c_ν/φ(kγ−1);
//! * [`gk_estimate`] — the expectation function
//!   g_k(x) = E[∫₀^∞ e^{ξ(t)} f_k(x e^{kξ(t)}) dt] that governs the
//!   ancestor-count asymptotics through the urn correspondence.
//!
//! Finite ν is simulated exactly as a compound Poisson process: jump rate
//! ν(S), jumps drawn by the size-biased recipe (U ~ Beta(a, b), follow U
//! with probability U, jump = −log of the followed side). For infinite ν,
//! jumps below a threshold ε are removed and replaced by their mean drift
//! ∫₀^ε y Ξ(dy) (computed by quadrature), while jumps above ε are drawn
//! from inverse-CDF tables built once per (model, ε) — standard truncated
//! Lévy simulation with bias second order in ε. Between jumps the running
//! value is held piecewise constant and the accumulated drift is folded in
//! at the next jump epoch; the per-interval displacement drift/rate is of
//! order ε, so the additional bias is second order as well.
//!
//! Reproducibility: every jump consumes one exponential waiting-time draw
//! followed by the jump draw (Beta + uniform for finite measures; branch
//! selector + table uniform for truncated ones). Estimators are pure per
//! replica, and the jump tables are immutable once built, so replicas can
//! be fanned out across threads with per-replica RNG streams.

use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1};

use crate::model::{DislocationModel, Family};
use crate::quad::tanh_sinh;
use crate::theory::{self, density_exponent_at_1, density_reduced, power_deficit};
use crate::{Error, Result};

/// Default small-jump truncation threshold for infinite dislocation
/// measures: jumps of ξ below this size are replaced by deterministic
/// drift.
pub const DEFAULT_EPS: f64 = 1e-6;

/// Default termination tolerance for [`leaf_depth`]: simulation stops once
/// the integrand e^{αξ} falls below this, and the analytic mean tail is
/// added.
pub const DEFAULT_DEPTH_TOL: f64 = 1e-6;

/// Cells per inverse-CDF branch table.
const TABLE_CELLS: usize = 1 << 14;

/// Knot intervals of the f_k interpolation grid used by [`gk_estimate`].
const FK_GRID: usize = 2048;

/// A Monte Carlo estimate with its standard error. `stderr` is `None`
/// when only a single replica was requested (a standard error is
/// undefined for one sample).
#[derive(Debug, Clone, Copy)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub stderr: Option<f64>,
}

/// One simulated trajectory of the tagged-fragment subordinator on
/// [0, horizon]: jump epochs, jump sizes, and the running value after each
/// jump, together with the truncation threshold and compensating drift
/// that produced it. Between jumps the value grows linearly at the drift
/// rate (zero for finite measures).
#[derive(Debug, Clone)]
pub struct SubordinatorPath {
    /// Jump epochs, strictly increasing.
    pub times: Vec<f64>,
    /// Jump sizes, all positive (and at least ε for truncated measures).
    pub sizes: Vec<f64>,
    /// ξ immediately after each jump, drift included.
    pub xi_after: Vec<f64>,
    /// Small-jump truncation threshold (0 for finite measures).
    pub eps: f64,
    /// Compensating drift rate (0 for finite measures).
    pub drift: f64,
    /// Jump intensity: ν(S) for finite measures, Ξ((ε, ∞)) after
    /// truncation.
    pub rate: f64,
}

impl SubordinatorPath {
    /// ξ(t): accumulated jumps up to t plus drift·t.
    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            self.drift * t
        } else {
            self.xi_after[i - 1] + self.drift * (t - self.times[i - 1])
        }
    }

    pub fn jump_count(&self) -> usize {
        self.times.len()
    }
}

/// Inverse-CDF table for one branch of the truncated jump law, built in a
/// power-transformed coordinate z = w^q chosen so that the branch density
/// is bounded in z. Sampling maps a uniform through the piecewise-linear
/// CDF and back: w = z^{1/q}, jump = −log(1−w) (small-jump branch,
/// following the large fragment 1−w) or −log w (large-jump branch,
/// following the small fragment w).
#[derive(Debug, Clone)]
struct BranchTable {
    z_lo: f64,
    dz: f64,
    inv_q: f64,
    w_lo: f64,
    w_hi: f64,
    /// Normalized cumulative masses, cum[0] = 0, cum[TABLE_CELLS] = 1.
    cum: Vec<f64>,
    /// Jump = −log(1−w) when set (small-fragment coordinate w = 1−u),
    /// −log w otherwise.
    neg_log_one_minus: bool,
}

impl BranchTable {
    /// Tabulate the branch with integrand extra(w) · density_reduced(1−w, w)
    /// · w^e on w ∈ [w_lo, w_hi] ⊆ [0, 1/2]; returns the table and its
    /// total (unnormalized) mass. The substitution z = w^{e+1} absorbs the
    /// w^e power exactly, leaving density extra(w)·density_reduced/|e+1|,
    /// which is bounded — so a uniform z-grid resolves both the ε-boundary
    /// layer and the far power-law tail.
    fn build(
        model: &DislocationModel,
        w_lo: f64,
        w_hi: f64,
        e: f64,
        extra: impl Fn(f64) -> f64,
        neg_log_one_minus: bool,
    ) -> Result<(Self, f64)> {
        let q = e + 1.0;
        debug_assert!(q != 0.0, "degenerate exponent rejected by the caller");
        debug_assert!(w_lo > 0.0 || q > 0.0, "w = 0 endpoint needs q > 0");
        let za = if w_lo == 0.0 { 0.0 } else { w_lo.powf(q) };
        let zb = w_hi.powf(q);
        let (z_lo, z_hi) = if za <= zb { (za, zb) } else { (zb, za) };
        let dz = (z_hi - z_lo) / TABLE_CELLS as f64;
        let inv_q = 1.0 / q;

        let mut dens = Vec::with_capacity(TABLE_CELLS + 1);
        for i in 0..=TABLE_CELLS {
            let z = z_lo + dz * i as f64;
            let w = (if z <= 0.0 { 0.0 } else { (inv_q * z.ln()).exp() }).clamp(w_lo, w_hi);
            dens.push(extra(w) * density_reduced(model, 1.0 - w, w) / q.abs());
        }
        let mut cum = Vec::with_capacity(TABLE_CELLS + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for i in 0..TABLE_CELLS {
            acc += 0.5 * (dens[i] + dens[i + 1]) * dz;
            cum.push(acc);
        }
        let mass = acc;
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Domain(format!(
                "jump-table branch mass must be positive and finite, got {mass}"
            )));
        }
        for c in &mut cum {
            *c /= mass;
        }
        *cum.last_mut().expect("nonempty") = 1.0;
        Ok((
            Self { z_lo, dz, inv_q, w_lo, w_hi, cum, neg_log_one_minus },
            mass,
        ))
    }

    fn sample(&self, v: f64) -> f64 {
        let i = self
            .cum
            .partition_point(|&c| c <= v)
            .saturating_sub(1)
            .min(TABLE_CELLS - 1);
        let (lo, hi) = (self.cum[i], self.cum[i + 1]);
        let frac = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
        let z = self.z_lo + (i as f64 + frac) * self.dz;
        let w = (if z <= 0.0 { f64::MIN_POSITIVE } else { (self.inv_q * z.ln()).exp() })
            .clamp(self.w_lo.max(f64::MIN_POSITIVE), self.w_hi);
        if self.neg_log_one_minus {
            -(-w).ln_1p()
        } else {
            -w.ln()
        }
    }
}

#[derive(Debug, Clone)]
enum JumpKind {
    /// Compound Poisson: exact size-biased Beta recipe.
    Finite { beta: Beta<f64> },
    /// ε-truncated infinite measure: two inverse-CDF branch tables.
    Tabulated {
        /// Probability that a jump comes from the large-jump branch
        /// (tagged point follows the *small* fragment, jump ≥ log 2).
        p_small_fragment: f64,
        /// Small jumps in (ε, log 2]: follow the large fragment.
        large_side: BranchTable,
        /// Large jumps in [log 2, ∞): follow the small fragment.
        small_side: BranchTable,
    },
}

/// Prepared sampler for one jump of the tagged-fragment subordinator.
///
/// For a finite dislocation measure this is the exact compound-Poisson
/// jump law (rate ν(S), no drift, no truncation). For an infinite one the
/// law is Ξ restricted to (ε, ∞), normalized, with the removed small jumps
/// compensated by [`drift`](Self::drift); construction builds the two
/// branch tables once, after which sampling is lock-free and the sampler
/// can be shared across threads.
#[derive(Debug, Clone)]
pub struct TaggedJumpSampler {
    rate: f64,
    drift: f64,
    eps: f64,
    kind: JumpKind,
}

impl TaggedJumpSampler {
    /// Prepare the jump law. `eps` is the small-jump truncation threshold
    /// for infinite measures (default [`DEFAULT_EPS`]); it is ignored for
    /// finite measures, which need no truncation. Errors: stable β < 2
    /// (no binary density to tabulate), the BetaType b = 0 boundary (the
    /// power-law change of variables degenerates on its logarithmic
    /// branch), or ε outside (0, 0.01].
    pub fn new(model: &DislocationModel, eps: Option<f64>) -> Result<Self> {
        if model.is_finite() {
            let (a, b) = match model.family() {
                Family::DirichletBinary { a, b } | Family::BetaType { a, b } => (a, b),
                _ => unreachable!("finite dislocation measures are Beta-parameterized"),
            };
            let rate = model.nu_mass().expect("finite measure has a mass");
            let beta =
                Beta::new(a, b).map_err(|e| Error::Domain(format!("Beta({a},{b}): {e}")))?;
            return Ok(Self { rate, drift: 0.0, eps: 0.0, kind: JumpKind::Finite { beta } });
        }
        Self::new_truncated(model, eps.unwrap_or(DEFAULT_EPS))
    }

    fn new_truncated(model: &DislocationModel, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 0.01) {
            return Err(Error::Domain(format!(
                "truncation threshold must lie in (0, 0.01], got {eps}"
            )));
        }
        let den_exp = density_exponent_at_1(model)?;
        if (den_exp + 1.0).abs() < 1e-12 {
            return Err(Error::DegenerateParameter(
                "logarithmic-tail boundary (BetaType b = 0): the small-jump branch exponent \
                 is exactly −1 and the power-law table coordinate degenerates"
                    .into(),
            ));
        }
        // Smallest retained jump is exactly ε: −log(1−w_eps) = ε.
        let w_eps = -(-eps).exp_m1();
        // Following the fragment of size u = 1−w weights the density by
        // (1−w); jumps −log(1−w) ≤ log 2 are small, truncated below ε.
        let (large_side, m_large) =
            BranchTable::build(model, w_eps, 0.5, den_exp, |w| 1.0 - w, true)?;
        // Following the fragment of size w weights the density by w,
        // raising the endpoint exponent by one; jumps −log w ≥ log 2.
        let (small_side, m_small) =
            BranchTable::build(model, 0.0, 0.5, den_exp + 1.0, |_| 1.0, false)?;
        let rate = m_large + m_small;
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::Domain(format!("truncated jump rate not positive: {rate}")));
        }
        let drift = small_jump_drift(model, den_exp, w_eps)?;
        Ok(Self {
            rate,
            drift,
            eps,
            kind: JumpKind::Tabulated {
                p_small_fragment: m_small / rate,
                large_side,
                small_side,
            },
        })
    }

    /// Jump intensity: ν(S) (finite) or Ξ((ε, ∞)) (truncated).
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Compensating drift ∫₀^ε y Ξ(dy); zero for finite measures.
    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// The truncation threshold in effect (0 for finite measures).
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Draw one jump of ξ. Always positive; at least ε for truncated
    /// measures.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            JumpKind::Finite { beta } => {
                let u: f64 = beta.sample(rng);
                let pick = if rng.random::<f64>() < u { u } else { 1.0 - u };
                // Clamp away from 0 and 1 so the jump stays positive and
                // finite even if the Beta sampler returns an endpoint.
                -pick.clamp(f64::MIN_POSITIVE, 1.0 - 1e-16).ln()
            }
            JumpKind::Tabulated { p_small_fragment, large_side, small_side } => {
                let table = if rng.random::<f64>() < *p_small_fragment {
                    small_side
                } else {
                    large_side
                };
                table.sample(rng.random::<f64>())
            }
        }
    }
}

/// Mean of the removed small jumps, ∫₀^ε y Ξ(dy), by quadrature. In the
/// small-fragment coordinate w = 1 − u ∈ (0, w_eps] the integrand is
/// (−log(1−w)) · (1−w) · density(1−w) = [−log(1−w)/w] · (1−w) ·
/// density_reduced · w^{den_exp + 1}, with endpoint exponent
/// den_exp + 1 ∈ (−1, 0) — integrable, and evaluated in combined form so
/// no intermediate overflows.
fn small_jump_drift(model: &DislocationModel, den_exp: f64, w_eps: f64) -> Result<f64> {
    let p = den_exp + 1.0;
    let r = tanh_sinh(
        |_w, dl, _dr| {
            let w = dl;
            let ratio = if w < 1e-250 { 1.0 } else { -(-w).ln_1p() / w };
            ratio * (1.0 - w) * density_reduced(model, 1.0 - w, w) * w.powf(p)
        },
        0.0,
        w_eps,
        1e-13,
        1e-9,
    )?;
    Ok(r.value)
}

/// One jump of the tagged-fragment subordinator for a finite dislocation
/// measure. Infinite measures need an explicit truncation threshold; build
/// a [`TaggedJumpSampler`] for those.
pub fn sample_tagged_jump<R: Rng + ?Sized>(
    model: &DislocationModel,
    rng: &mut R,
) -> Result<f64> {
    if !model.is_finite() {
        return Err(Error::Domain(
            "infinite dislocation measure: configure ε-truncation through TaggedJumpSampler::new"
                .into(),
        ));
    }
    Ok(TaggedJumpSampler::new(model, None)?.sample(rng))
}

/// Simulate one trajectory of ξ on [0, horizon] at the default truncation.
pub fn sample_path<R: Rng + ?Sized>(
    model: &DislocationModel,
    horizon: f64,
    rng: &mut R,
) -> Result<SubordinatorPath> {
    sample_path_opts(model, horizon, DEFAULT_EPS, rng)
}

pub(crate) fn sample_path_opts<R: Rng + ?Sized>(
    model: &DislocationModel,
    horizon: f64,
    eps: f64,
    rng: &mut R,
) -> Result<SubordinatorPath> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon must be positive and finite, got {horizon}")));
    }
    let sampler = TaggedJumpSampler::new(model, Some(eps))?;
    let mut times = Vec::new();
    let mut sizes = Vec::new();
    let mut xi_after = Vec::new();
    let mut t = 0.0;
    let mut jump_sum = 0.0;
    loop {
        let wait: f64 = rng.sample(Exp1);
        t += wait / sampler.rate();
        if t > horizon {
            break;
        }
        let jump = sampler.sample(rng);
        jump_sum += jump;
        times.push(t);
        sizes.push(jump);
        xi_after.push(jump_sum + sampler.drift() * t);
    }
    Ok(SubordinatorPath {
        times,
        sizes,
        xi_after,
        eps: sampler.eps(),
        drift: sampler.drift(),
        rate: sampler.rate(),
    })
}

/// Shared validation and setup for the depth-based estimators: requires
/// k ≥ 2 and kγ > 1 (so α = 1 − kγ < 0 and the depth integral is a.s.
/// finite), returns the prepared sampler, α, and φ(kγ−1) for the mean
/// tail.
fn depth_setup(
    model: &DislocationModel,
    k: u32,
    tol: f64,
    eps: f64,
) -> Result<(TaggedJumpSampler, f64, f64)> {
    if k < 2 {
        return Err(Error::Domain(format!("leaf depth needs k >= 2, got {k}")));
    }
    if !(tol > 0.0 && tol < 0.5) {
        return Err(Error::Domain(format!("depth tolerance must lie in (0, 0.5), got {tol}")));
    }
    let kg = k as f64 * model.gamma_index();
    if kg - 1.0 <= 1e-12 {
        return Err(Error::Domain(format!(
            "leaf depth needs k*gamma > 1 (supercritical); got k*gamma = {kg}"
        )));
    }
    let phi_pos = theory::phi(model, kg - 1.0)?;
    let sampler = TaggedJumpSampler::new(model, Some(eps))?;
    Ok((sampler, 1.0 - kg, phi_pos))
}

/// Core depth loop: piecewise-constant integrand between jumps, drift
/// folded in at each jump epoch, and the analytic mean tail
/// e^{αξ}/φ(−α) added once the integrand drops below tol (the tail of
/// ∫ e^{αξ} restarted at a stopping time has exactly that conditional
/// mean, so the truncation is mean-exact; the correction itself is below
/// tol/φ(−α)).
fn depth_core<R: Rng + ?Sized>(
    sampler: &TaggedJumpSampler,
    alpha: f64,
    phi_pos: f64,
    tol: f64,
    rng: &mut R,
) -> f64 {
    let mut xi = 0.0_f64;
    let mut depth = 0.0_f64;
    loop {
        let w = (alpha * xi).exp();
        if w < tol {
            return depth + w / phi_pos;
        }
        let wait: f64 = rng.sample(Exp1);
        let dt = wait / sampler.rate();
        depth += w * dt;
        xi += sampler.drift() * dt + sampler.sample(rng);
    }
}

/// One sample of the tagged leaf depth ∫₀^∞ e^{αξ(t)} dt, α = 1 − kγ.
/// Requires kγ > 1. E[depth] = 1/φ(kγ−1).
pub fn leaf_depth<R: Rng + ?Sized>(
    model: &DislocationModel,
    k: u32,
    tol: f64,
    rng: &mut R,
) -> Result<f64> {
    let (sampler, alpha, phi_pos) = depth_setup(model, k, tol, DEFAULT_EPS)?;
    Ok(depth_core(&sampler, alpha, phi_pos, tol, rng))
}

/// Monte Carlo estimate of the area variable A_k = c_ν × tagged depth,
/// whose mean is c_ν/φ(kγ−1). Requires kγ > 1 and a model with a tail
/// constant c_ν.
pub fn area_estimate<R: Rng + ?Sized>(
    model: &DislocationModel,
    k: u32,
    replicas: u64,
    rng: &mut R,
) -> Result<MonteCarloEstimate> {
    area_estimate_opts(model, k, replicas, DEFAULT_EPS, DEFAULT_DEPTH_TOL, rng)
}

pub(crate) fn area_estimate_opts<R: Rng + ?Sized>(
    model: &DislocationModel,
    k: u32,
    replicas: u64,
    eps: f64,
    tol: f64,
    rng: &mut R,
) -> Result<MonteCarloEstimate> {
    if replicas == 0 {
        return Err(Error::Domain("area estimate needs at least one replica".into()));
    }
    let c_nu = model.c_nu().ok_or_else(|| {
        Error::DegenerateParameter(
            "logarithmic-tail boundary (BetaType b = 0) has no tail constant c_nu".into(),
        )
    })?;
    let (sampler, alpha, phi_pos) = depth_setup(model, k, tol, eps)?;
    let n = replicas as f64;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..replicas {
        let d = depth_core(&sampler, alpha, phi_pos, tol, rng);
        sum += d;
        sumsq += d * d;
    }
    let mean = sum / n;
    let stderr = (replicas >= 2).then(|| {
        let var = ((sumsq - sum * sum / n) / (n - 1.0)).max(0.0);
        c_nu * (var / n).sqrt()
    });
    Ok(MonteCarloEstimate { mean: c_nu * mean, stderr })
}

/// Interpolation table for f_k on a log grid over [x, x_end), where
/// x_end = 1 − 2^{1−k} is the right edge of the support of f_k. Path
/// arguments are x e^{kξ} ≥ x, so the grid covers every evaluation; the
/// table is built once per estimate and read from the inner loop.
struct FkTable {
    ln_lo: f64,
    ln_end: f64,
    step: f64,
    values: Vec<f64>,
}

impl FkTable {
    fn new(model: &DislocationModel, k: u32, x: f64) -> Result<Self> {
        let x_end = power_deficit(0.5, k as f64);
        let ln_end = x_end.ln();
        let ln_lo = x.ln();
        if ln_lo >= ln_end {
            // f_k vanishes on [x_end, 1): the estimate is exactly 0.
            return Ok(Self { ln_lo, ln_end, step: 1.0, values: Vec::new() });
        }
        let step = (ln_end - ln_lo) / FK_GRID as f64;
        let mut values = Vec::with_capacity(FK_GRID + 1);
        for i in 0..FK_GRID {
            let xi = (ln_lo + step * i as f64).exp();
            values.push(theory::f_k_numeric(model, k, xi.min(x_end * (1.0 - 1e-12)))?);
        }
        values.push(0.0); // f_k(x_end) = 0 exactly
        Ok(Self { ln_lo, ln_end, step, values })
    }

    fn eval(&self, ln_arg: f64) -> f64 {
        if self.values.is_empty() || ln_arg >= self.ln_end {
            return 0.0;
        }
        let u = ((ln_arg - self.ln_lo) / self.step).max(0.0);
        let i = (u as usize).min(self.values.len() - 2);
        let frac = (u - i as f64).clamp(0.0, 1.0);
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

/// One path sample of ∫ e^{ξ} f_k(x e^{kξ}) dt. The loop stops as soon as
/// x e^{kξ} reaches the support edge x_end = 1 − 2^{1−k} < 1 of f_k: the
/// integrand is identically zero from there on (in particular beyond
/// x e^{kξ} ≥ 1), so stopping early changes nothing and the sample is
/// exact — no tail correction is needed.
fn gk_path<R: Rng + ?Sized>(
    sampler: &TaggedJumpSampler,
    table: &FkTable,
    ln_x: f64,
    kf: f64,
    rng: &mut R,
) -> f64 {
    let mut xi = 0.0_f64;
    let mut acc = 0.0_f64;
    loop {
        let ln_arg = ln_x + kf * xi;
        if ln_arg >= table.ln_end {
            return acc;
        }
        let w = xi.exp() * table.eval(ln_arg);
        let wait: f64 = rng.sample(Exp1);
        let dt = wait / sampler.rate();
        acc += w * dt;
        xi += sampler.drift() * dt + sampler.sample(rng);
    }
}

/// Monte Carlo estimate of g_k(x) = E[∫₀^∞ e^{ξ(t)} f_k(x e^{kξ(t)}) dt]
/// for x ∈ (0, 1).
pub fn gk_estimate<R: Rng + ?Sized>(
    model: &DislocationModel,
    k: u32,
    x: f64,
    replicas: u64,
    rng: &mut R,
) -> Result<MonteCarloEstimate> {
    gk_estimate_opts(model, k, x, replicas, DEFAULT_EPS, rng)
}

pub(crate) fn gk_estimate_opts<R: Rng + ?Sized>(
    model: &DislocationModel,
    k: u32,
    x: f64,
    replicas: u64,
    eps: f64,
    rng: &mut R,
) -> Result<MonteCarloEstimate> {
    if k < 2 {
        return Err(Error::Domain(format!("g_k needs k >= 2, got {k}")));
    }
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("g_k needs x in (0,1), got {x}")));
    }
    if replicas == 0 {
        return Err(Error::Domain("g_k estimate needs at least one replica".into()));
    }
    let sampler = TaggedJumpSampler::new(model, Some(eps))?;
    let table = FkTable::new(model, k, x)?;
    let (kf, ln_x) = (k as f64, x.ln());
    let n = replicas as f64;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..replicas {
        let g = gk_path(&sampler, &table, ln_x, kf, rng);
        sum += g;
        sumsq += g * g;
    }
    let mean = sum / n;
    let stderr = (replicas >= 2).then(|| {
        let var = ((sumsq - sum * sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    });
    Ok(MonteCarloEstimate { mean, stderr })
}
