//! Karlin occupancy engine: i.i.d. sampling from (possibly infinite)
//! nonincreasing probability sequences, the urn distribution function
//! S_x = max{j : p_j ≥ x}, exact occupancy expectations, and the
//! Γ(1−ρ)L limit constants.
//!
//! Infinite laws (Zipf, geometric) keep an exact cumulative head table
//! plus an analytic Euler–Maclaurin tail, so inversion is exact across
//! the whole support up to a truncation index J; the rare draw beyond J
//! becomes a fresh singleton urn, and simulation refuses to run when the
//! expected number of such draws is not negligible.

use std::collections::HashMap;

use rand::Rng;

use crate::special::zeta;
use crate::theory::{gamma, MULTIPLICITY_R};
use crate::{Error, Result};

/// Exact cumulative head size for infinite laws.
const HEAD_LEN: u64 = 1 << 16;
/// Default truncation index J for infinite laws.
const DEFAULT_CAP: u64 = 1 << 48;
/// Maximum tolerated expected overflow draws per simulation call
/// (overflow draws bias N upward by at most this many singletons).
const OVERFLOW_BUDGET: f64 = 1e-3;

#[derive(Debug, Clone)]
enum LawKind {
    /// Finite vector; the head table is the whole law.
    Explicit,
    Zipf { s: f64, zeta_s: f64 },
    Geometric { q: f64 },
}

/// A nonincreasing probability sequence p₁ ≥ p₂ ≥ … with Σ p_j = 1.
#[derive(Debug, Clone)]
pub struct UrnLaw {
    kind: LawKind,
    /// cum_head[i] = p₁ + … + p_{i+1}, exact for the first `head_len` urns.
    cum_head: Vec<f64>,
    head_mass: f64,
    /// Truncation index J: draws landing beyond urn J become singletons.
    j_cap: u64,
    /// Mass beyond urn J (analytic bound; exact 0 for explicit laws).
    tail_mass: f64,
}

/// Σ_{j>x} j^{−u} by Euler–Maclaurin; relative error ~ u⁵x^{−5}/30240,
/// far below f64 resolution for x ≥ 2¹⁶.
fn zeta_tail(x: f64, u: f64) -> f64 {
    x.powf(1.0 - u) / (u - 1.0) - x.powf(-u) / 2.0 + u * x.powf(-u - 1.0) / 12.0
        - u * (u + 1.0) * (u + 2.0) * x.powf(-u - 3.0) / 720.0
}

impl UrnLaw {
    /// Finite law from an explicit nonincreasing probability vector
    /// summing to 1 (within 1e−9; the slack is absorbed into the last
    /// urn).
    pub fn explicit(probs: &[f64]) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Domain("explicit urn law needs at least one urn".into()));
        }
        let mut sum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::Domain(format!(
                    "urn probability p_{} = {p} must be positive and finite",
                    i + 1
                )));
            }
            if i > 0 && p > probs[i - 1] {
                return Err(Error::Domain(format!(
                    "urn probabilities must be nonincreasing (p_{} = {p} > p_{} = {})",
                    i + 1,
                    i,
                    probs[i - 1]
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "urn probabilities sum to {sum}, expected 1"
            )));
        }
        let mut cum_head = Vec::with_capacity(probs.len());
        let mut c = 0.0;
        for &p in probs {
            c += p;
            cum_head.push(c);
        }
        *cum_head.last_mut().unwrap() = 1.0;
        Ok(UrnLaw {
            kind: LawKind::Explicit,
            head_mass: 1.0,
            j_cap: probs.len() as u64,
            tail_mass: 0.0,
            cum_head,
        })
    }

    /// Zipf law p_j = j^{−s}/ζ(s), s > 1, truncated at the default J.
    pub fn zipf(s: f64) -> Result<Self> {
        Self::zipf_with_cap(s, DEFAULT_CAP)
    }

    /// Zipf law with an explicit truncation index J ≥ 1.
    pub fn zipf_with_cap(s: f64, j_cap: u64) -> Result<Self> {
        if !(s > 1.0) || !s.is_finite() {
            return Err(Error::Domain(format!("zipf exponent must exceed 1, got {s}")));
        }
        if j_cap < 1 {
            return Err(Error::Domain("zipf truncation index must be >= 1".into()));
        }
        let zeta_s = zeta(s)?;
        let head_len = HEAD_LEN.min(j_cap);
        let mut cum_head = Vec::with_capacity(head_len as usize);
        let mut c = 0.0;
        for j in 1..=head_len {
            c += (j as f64).powf(-s) / zeta_s;
            cum_head.push(c);
        }
        let tail_mass = zeta_tail(j_cap as f64, s) / zeta_s;
        Ok(UrnLaw {
            kind: LawKind::Zipf { s, zeta_s },
            head_mass: c,
            j_cap,
            tail_mass,
            cum_head,
        })
    }

    /// Geometric law p_j = (1−q)q^{j−1}, 0 < q < 1, truncated at the
    /// default J (whose tail underflows to zero for any practical q).
    pub fn geometric(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!(
                "geometric ratio must lie in (0,1), got {q}"
            )));
        }
        let j_cap = DEFAULT_CAP;
        let head_len = HEAD_LEN.min(j_cap);
        let mut cum_head = Vec::with_capacity(head_len as usize);
        let mut c = 0.0;
        for j in 1..=head_len {
            c += (1.0 - q) * q.powf((j - 1) as f64);
            cum_head.push(c);
        }
        let tail_mass = (j_cap as f64 * q.ln()).exp();
        Ok(UrnLaw {
            kind: LawKind::Geometric { q },
            head_mass: c,
            j_cap,
            tail_mass,
            cum_head,
        })
    }

    /// p_j (1-based); 0 beyond an explicit law's support.
    pub fn p(&self, j: u64) -> f64 {
        debug_assert!(j >= 1);
        match &self.kind {
            LawKind::Explicit => {
                let i = j as usize;
                if i > self.cum_head.len() {
                    0.0
                } else if i == 1 {
                    self.cum_head[0]
                } else {
                    self.cum_head[i - 1] - self.cum_head[i - 2]
                }
            }
            LawKind::Zipf { s, zeta_s } => (j as f64).powf(-s) / zeta_s,
            LawKind::Geometric { q } => (1.0 - q) * q.powf((j - 1) as f64),
        }
    }

    /// Mass beyond the truncation index J.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Truncation index J.
    pub fn truncation_index(&self) -> u64 {
        self.j_cap
    }

    /// Mass beyond urn j (tail of the untruncated law); analytic for the
    /// infinite families.
    fn mass_beyond(&self, j: u64) -> f64 {
        if (j as usize) < self.cum_head.len() || (self.cum_head.len() as u64) == j {
            // Within the exact head.
            if j == 0 {
                return 1.0;
            }
            return 1.0 - self.cum_head[j as usize - 1];
        }
        match &self.kind {
            LawKind::Explicit => 0.0,
            LawKind::Zipf { s, zeta_s } => zeta_tail(j as f64, *s) / zeta_s,
            LawKind::Geometric { q } => (j as f64 * q.ln()).exp(),
        }
    }

    /// Invert u ∈ [0,1) to an urn index; `None` when the draw lands
    /// beyond the truncation index J.
    fn draw_index(&self, u: f64) -> Option<u64> {
        if u < self.head_mass {
            return Some(self.cum_head.partition_point(|&c| c <= u) as u64 + 1);
        }
        let head_len = self.cum_head.len() as u64;
        // Solve M(j) < v ≤ M(j−1) for the tail mass M; v's subtractive
        // rounding can jitter the boundary by one among urns of mass
        // ~1e−16, which is statistically immaterial and unbiased.
        let v = 1.0 - u;
        let j = match &self.kind {
            LawKind::Explicit => head_len, // fp slack clamps into the last urn
            LawKind::Zipf { s, zeta_s } => {
                let mut x = ((s - 1.0) * zeta_s * v).powf(1.0 / (1.0 - s));
                for _ in 0..4 {
                    let m = zeta_tail(x, *s) / zeta_s;
                    x += (m - v) * zeta_s * x.powf(*s);
                }
                let mut j = (x.round() as u64).max(head_len + 1);
                let mut guard = 0;
                while self.mass_beyond(j) >= v && guard < 64 {
                    j += 1;
                    guard += 1;
                }
                while j > head_len + 1 && self.mass_beyond(j - 1) < v && guard < 64 {
                    j -= 1;
                    guard += 1;
                }
                j
            }
            LawKind::Geometric { q } => ((v.ln() / q.ln()).floor() as u64 + 1).max(head_len + 1),
        };
        if j > self.j_cap {
            None
        } else {
            Some(j)
        }
    }
}

/// Occupancy of one batch of draws: N distinct nonempty urns and the
/// histogram N_{n,r} of urns holding exactly r draws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyCounts {
    pub n: usize,
    pub distinct: usize,
    /// histogram[r] = number of urns with exactly r draws; index 0 unused.
    pub histogram: Vec<usize>,
}

impl OccupancyCounts {
    /// Exact identities Σ_r N_{n,r} = N and Σ_r r·N_{n,r} = n.
    pub fn validate(&self) -> Result<()> {
        let sum: usize = self.histogram.iter().sum();
        let weighted: usize = self.histogram.iter().enumerate().map(|(r, c)| r * c).sum();
        if sum != self.distinct || weighted != self.n {
            return Err(Error::Domain(format!(
                "occupancy bookkeeping broken: ΣN_r = {sum} (N = {}), Σr·N_r = {weighted} (n = {})",
                self.distinct, self.n
            )));
        }
        Ok(())
    }
}

/// Draw n i.i.d. urn indices and count the occupancy. Draws beyond the
/// truncation index become fresh singleton urns; the call is refused
/// when the expected number of them exceeds the overflow budget.
pub fn simulate_occupancy(law: &UrnLaw, n: usize, rng: &mut impl Rng) -> Result<OccupancyCounts> {
    if n < 1 {
        return Err(Error::Domain("occupancy needs n >= 1 draws".into()));
    }
    let expected_overflow = law.tail_mass() * n as f64;
    if expected_overflow > OVERFLOW_BUDGET {
        return Err(Error::TruncationInadequate(format!(
            "expected {expected_overflow:.3e} draws beyond the truncation index J = {} \
             (budget {OVERFLOW_BUDGET:.0e}); re-truncate the law or lower n",
            law.truncation_index()
        )));
    }
    let mut counts: HashMap<u64, u32> = HashMap::new();
    let mut overflow = 0usize;
    for _ in 0..n {
        match law.draw_index(rng.random()) {
            Some(j) => *counts.entry(j).or_insert(0) += 1,
            None => overflow += 1,
        }
    }
    let max_r = counts.values().max().copied().unwrap_or(0) as usize;
    let mut histogram = vec![0usize; max_r.max(usize::from(overflow > 0)) + 1];
    for &c in counts.values() {
        histogram[c as usize] += 1;
    }
    histogram[1] += overflow;
    let out = OccupancyCounts {
        n,
        distinct: counts.len() + overflow,
        histogram,
    };
    out.validate()?;
    Ok(out)
}

/// Exact occupancy expectations with a rigorous remainder bound.
#[derive(Debug, Clone)]
pub struct ExpectedCounts {
    pub mean_n: f64,
    /// mean_nr[r−1] = E[N_{n,r}] for r = 1..=MULTIPLICITY_R.
    pub mean_nr: [f64; MULTIPLICITY_R],
    /// Bound on the absolute truncation error of every reported mean
    /// (series tail beyond the exact head, plus the mass beyond J).
    pub remainder: f64,
}

/// E[N_n] = Σ_j (1−(1−p_j)^n) and E[N_{n,r}] = Σ_j C(n,r)p_j^r(1−p_j)^{n−r},
/// exact over the head table with an analytic alternating-series tail.
pub fn expected_counts(law: &UrnLaw, n: usize) -> Result<ExpectedCounts> {
    if n < 1 {
        return Err(Error::Domain("occupancy needs n >= 1 draws".into()));
    }
    let nf = n as f64;
    let head_len = law.cum_head.len() as u64;
    // The tail expansion needs n·p small beyond the head.
    if nf * law.p(head_len) > 0.5 && !matches!(law.kind, LawKind::Explicit) {
        return Err(Error::Domain(format!(
            "n = {n} too large for the tabulated head (n·p_J0 = {:.2e}); enlarge the head",
            nf * law.p(head_len)
        )));
    }
    // ln C(n,r) for r ≤ MULTIPLICITY_R + 4, as running products.
    let ln_choose = |r: usize| -> f64 {
        let mut acc = 0.0;
        for i in 0..r {
            acc += (nf - i as f64).ln() - (i as f64 + 1.0).ln();
        }
        acc
    };
    let mut mean_n = 0.0;
    let mut mean_nr = [0.0; MULTIPLICITY_R];
    for j in 1..=head_len {
        let p = law.p(j);
        if p <= 0.0 {
            break;
        }
        let ln_1mp = (-p).ln_1p();
        mean_n += -(nf * ln_1mp).exp_m1();
        for r in 1..=MULTIPLICITY_R {
            if r <= n {
                mean_nr[r - 1] +=
                    (ln_choose(r) + r as f64 * p.ln() + (nf - r as f64) * ln_1mp).exp();
            }
        }
    }
    // Tail via power sums P_t = Σ_{j>J0} p_j^t: expand (1−p)^{n−r} in p
    // and truncate after four alternating terms.
    let mut remainder = nf * law.tail_mass(); // overflow-singleton bias bound
    if !matches!(law.kind, LawKind::Explicit) {
        let power_sum = |t: usize| -> f64 {
            let t = t as f64;
            match &law.kind {
                LawKind::Explicit => 0.0,
                LawKind::Zipf { s, zeta_s } => zeta_tail(head_len as f64, t * s) / zeta_s.powf(t),
                LawKind::Geometric { q } => {
                    (1.0 - q).powf(t) * (head_len as f64 * t * q.ln()).exp() / (1.0 - q.powf(t))
                }
            }
        };
        // E[N] tail: Σ (−1)^{m+1} C(n,m) P_m, m = 1..4.
        let mut sign = 1.0;
        for m in 1..=4usize {
            if m <= n {
                mean_n += sign * (ln_choose(m)).exp() * power_sum(m);
            }
            sign = -sign;
        }
        if 5 <= n {
            remainder += (ln_choose(5)).exp() * power_sum(5);
        }
        // E[N_r] tail: C(n,r) Σ_m (−1)^m C(n−r,m) P_{r+m}, m = 0..3.
        for r in 1..=MULTIPLICITY_R {
            if r > n {
                continue;
            }
            let cr = ln_choose(r).exp();
            let mut sign = 1.0;
            let nr = nf - r as f64;
            let mut cm = 1.0; // C(n−r, m) running (vanishes once m > n−r)
            for m in 0..=3usize {
                if m > 0 {
                    cm *= ((nr - (m as f64 - 1.0)) / m as f64).max(0.0);
                }
                mean_nr[r - 1] += sign * cr * cm * power_sum(r + m);
                sign = -sign;
            }
            let c4 = cm * (nr - 3.0) / 4.0;
            remainder += cr * c4.abs() * power_sum(r + 4);
        }
    }
    Ok(ExpectedCounts {
        mean_n,
        mean_nr,
        remainder,
    })
}

/// S_x = max{j : p_j ≥ x} (0 when x > p₁). Exact index: binary search
/// for explicit laws, analytic inversion with integer correction for
/// Zipf and geometric.
pub fn urn_distribution_function(law: &UrnLaw, x: f64) -> Result<u64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "urn distribution function needs x > 0, got {x}"
        )));
    }
    if x > law.p(1) {
        return Ok(0);
    }
    let candidate = match &law.kind {
        LawKind::Explicit => {
            // Count of the nonincreasing prefix with p_j ≥ x.
            let mut lo = 1u64;
            let mut hi = law.cum_head.len() as u64;
            while lo < hi {
                let mid = (lo + hi + 1) / 2;
                if law.p(mid) >= x {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            return Ok(lo);
        }
        LawKind::Zipf { s, zeta_s } => (x * zeta_s).powf(-1.0 / s).floor() as u64,
        LawKind::Geometric { q } => {
            (1.0 + (x / (1.0 - q)).ln() / q.ln()).floor().max(1.0) as u64
        }
    };
    // Integer correction against the exact p_j (inclusive ties per the
    // definition's ≥).
    let mut j = candidate.max(1);
    while law.p(j + 1) >= x {
        j += 1;
    }
    while j > 1 && law.p(j) < x {
        j -= 1;
    }
    Ok(j)
}

/// Karlin's limit constants: N_n/(n^ρ ℓ(n)) → Γ(1−ρ)·L and, for a
/// given multiplicity r, N_{n,r}'s limit ρΓ(r−ρ)L/r!.
pub fn karlin_prediction(rho: f64, l: f64, r: Option<usize>) -> Result<(f64, Option<f64>)> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!(
            "karlin exponent must lie in (0,1), got {rho}"
        )));
    }
    if !(l >= 0.0) || !l.is_finite() {
        return Err(Error::Domain(format!(
            "karlin constant L must be finite and nonnegative, got {l}"
        )));
    }
    let n_limit = gamma(1.0 - rho)? * l;
    let r_limit = match r {
        None => None,
        Some(0) => {
            return Err(Error::Domain("multiplicity r must be >= 1".into()));
        }
        Some(r) => {
            let mut r_fact = 1.0;
            for i in 1..=r {
                r_fact *= i as f64;
            }
            Some(rho * gamma(r as f64 - rho)? * l / r_fact)
        }
    };
    Ok((n_limit, r_limit))
}
