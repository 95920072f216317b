//! Exact samplers of the random tree models and the lazy cascade that
//! draws ancestor statistics without materializing a tree.
//!
//! Growth chains (`remy`, `ford`) insert one leaf at a time by edge
//! selection; `beta_splitting` builds a Markov-branching tree clade by
//! clade; `cascade_mrca` runs the group-resolution urn directly on the
//! fragmentation cascade, so only the fragments that still carry
//! unresolved groups are ever expanded. All outputs are planted trees
//! (the root has a single child and never counts as a leaf).

use std::collections::HashMap;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::model::DislocationModel;
use crate::special::{ln_gamma, zeta};
use crate::tree::{build_tree, AncestorStats, LeafGrouping, Tree, NO_PARENT};
use crate::{Error, Result};

/// Parent array of the planted cherry T₂: root — branchpoint — 2 leaves.
const BASE_CHERRY: [u32; 4] = [NO_PARENT, 0, 1, 1];

/// Subdivide the edge above `v`: a new internal node takes v's place and
/// receives v and a fresh leaf as children. Returns the new leaf index.
fn insert_leaf_at(parents: &mut Vec<u32>, v: u32) -> u32 {
    let w = parents.len() as u32;
    parents.push(parents[v as usize]); // w replaces v under v's old parent
    parents[v as usize] = w;
    parents.push(w); // the new leaf
    w + 1
}

/// Uniformly random leaf-labeled binary tree on `n_leaves` leaves
/// (Rémy's growth chain): each step subdivides one of the 2m−1 edges of
/// the current planted tree uniformly — equivalently, picks a uniform
/// non-root node. O(n).
pub fn remy(n_leaves: usize, rng: &mut impl Rng) -> Result<Tree> {
    if n_leaves < 2 {
        return Err(Error::Domain(format!(
            "remy needs n_leaves >= 2, got {n_leaves}"
        )));
    }
    let mut parents = BASE_CHERRY.to_vec();
    while parents.len() < 2 * n_leaves {
        let v = rng.random_range(1..parents.len()) as u32;
        insert_leaf_at(&mut parents, v);
    }
    build_tree(&parents)
}

/// Ford's growth chain: at each step the tree with m leaves has m
/// external edges of weight 1−a each and m−1 internal edges (the planted
/// edge included) of weight a each; the selected edge is subdivided as
/// in `remy`. a = 1/2 reduces to the uniform chain.
pub fn ford(a: f64, n_leaves: usize, rng: &mut impl Rng) -> Result<Tree> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Domain(format!(
            "ford parameter must lie in (0,1), got {a}"
        )));
    }
    if n_leaves < 2 {
        return Err(Error::Domain(format!(
            "ford needs n_leaves >= 2, got {n_leaves}"
        )));
    }
    let mut parents = BASE_CHERRY.to_vec();
    let mut internal: Vec<u32> = vec![1];
    let mut external: Vec<u32> = vec![2, 3];
    while external.len() < n_leaves {
        let m = external.len() as f64;
        let w_internal = a * (m - 1.0);
        let total = w_internal + (1.0 - a) * m;
        let v = if rng.random::<f64>() * total < w_internal {
            internal[rng.random_range(0..internal.len())]
        } else {
            external[rng.random_range(0..external.len())]
        };
        let leaf = insert_leaf_at(&mut parents, v);
        internal.push(leaf - 1);
        external.push(leaf);
    }
    build_tree(&parents)
}

/// ln of the unnormalized split weight
/// w_i = Γ(β+i+1)Γ(β+m−i+1) / (Γ(i+1)Γ(m−i+1)), 1 ≤ i ≤ m−1.
fn ln_split_weight(beta: f64, m: usize, i: usize) -> Result<f64> {
    Ok(ln_gamma(beta + i as f64 + 1.0)? + ln_gamma(beta + (m - i) as f64 + 1.0)?
        - ln_gamma(i as f64 + 1.0)?
        - ln_gamma((m - i) as f64 + 1.0)?)
}

/// Consecutive-weight ratio w_{i+1}/w_i, used to sweep all weights in
/// O(1) each after one ln-Γ anchor evaluation.
fn split_weight_ratio(beta: f64, m: usize, i: usize) -> f64 {
    let (i, m) = (i as f64, m as f64);
    (beta + i + 1.0) * (m - i) / ((i + 1.0) * (beta + m - i))
}

/// Sample the left-clade size i ∈ {1..m−1} with P(i) ∝ w_i. Two ratio
/// sweeps (normalize, then invert), no allocation; weights are scaled by
/// the larger of the first and middle weight so neither U-shaped (β < 0)
/// nor bell-shaped (β > 0) profiles can overflow.
fn sample_split(beta: f64, m: usize, rng: &mut impl Rng) -> Result<usize> {
    debug_assert!(m >= 2);
    if m == 2 {
        return Ok(1);
    }
    let ln_first = ln_split_weight(beta, m, 1)?;
    let scale = ln_first.max(ln_split_weight(beta, m, m / 2)?);
    let w_first = (ln_first - scale).exp();
    let mut z = 0.0;
    let mut w = w_first;
    for i in 1..m {
        z += w;
        w *= split_weight_ratio(beta, m, i);
    }
    let target = rng.random::<f64>() * z;
    let mut cum = 0.0;
    w = w_first;
    for i in 1..m - 1 {
        cum += w;
        if cum > target {
            return Ok(i);
        }
        w *= split_weight_ratio(beta, m, i);
    }
    Ok(m - 1)
}

/// Markov-branching tree: a clade of m ≥ 2 leaves splits into sub-clades
/// of i and m−i leaves with probability ∝ Γ(β+i+1)Γ(β+m−i+1)/(i!(m−i)!),
/// recursively; a clade of 1 is a leaf. β = −3/2 is the Brownian-type
/// member. Output is planted; left sub-clades get smaller node indices.
pub fn beta_splitting(beta: f64, n_leaves: usize, rng: &mut impl Rng) -> Result<Tree> {
    if !(beta > -2.0) || !beta.is_finite() {
        return Err(Error::Domain(format!(
            "beta_splitting parameter must exceed -2, got {beta}"
        )));
    }
    if n_leaves < 1 {
        return Err(Error::Domain("beta_splitting needs n_leaves >= 1".into()));
    }
    let mut parents = vec![NO_PARENT];
    let mut stack: Vec<(u32, usize)> = vec![(0, n_leaves)];
    while let Some((par, m)) = stack.pop() {
        let v = parents.len() as u32;
        parents.push(par);
        if m >= 2 {
            let i = sample_split(beta, m, rng)?;
            stack.push((v, m - i)); // right clade, popped second
            stack.push((v, i)); // left clade, popped first → smaller indices
        }
    }
    build_tree(&parents)
}

/// Split g unresolved groups at one fragment: each goes intact-left with
/// probability p_left = V^k, intact-right with p_right = (1−V)^k, or
/// separates here (trinomial via two binomial draws).
fn resolve_groups(
    g: usize,
    p_left: f64,
    p_right: f64,
    rng: &mut impl Rng,
) -> Result<(usize, usize, usize)> {
    let draw = |n: usize, p: f64, rng: &mut dyn rand::RngCore| -> Result<usize> {
        let b = Binomial::new(n as u64, p.clamp(0.0, 1.0))
            .map_err(|e| Error::Domain(format!("binomial({n}, {p}): {e}")))?;
        Ok(b.sample(rng) as usize)
    };
    let left = draw(g, p_left, rng)?;
    let rest = g - left;
    let p_cond = if p_left < 1.0 { p_right / (1.0 - p_left) } else { 0.0 };
    let right = draw(rest, p_cond, rng)?;
    Ok((left, right, g - left - right))
}

/// Exact sample of (N_n(k), N_{n,r}(k)) on the fragmentation tree of a
/// finite binary dislocation measure, without building the tree.
///
/// Each fragment carries the number of groups whose k sampled points are
/// still together in it. The fragment splits with largest-fragment size
/// V drawn from normalized ν; a group keeps all k points on one side
/// with probability V^k or (1−V)^k, and otherwise its points separate —
/// resolving its MRCA at this fragment. Groups resolving at the same
/// fragment share one ancestor, with multiplicity equal to their count.
/// Only fragments still holding groups are expanded, so the cost is
/// O(n · resolution depth).
pub fn cascade_mrca(
    model: &DislocationModel,
    n: usize,
    k: usize,
    rng: &mut impl Rng,
) -> Result<AncestorStats> {
    if k < 2 {
        return Err(Error::Domain(format!("group size k must be >= 2, got {k}")));
    }
    if n < 1 {
        return Err(Error::Domain("cascade needs at least one group".into()));
    }
    if !model.is_finite() {
        return Err(Error::Domain(
            "cascade_mrca requires a finite dislocation measure (no first split exists otherwise)"
                .into(),
        ));
    }
    const DEPTH_CAP: usize = 1_000_000;
    let sampler = model.largest_fragment_sampler()?;
    let mut resolved: Vec<usize> = Vec::new(); // multiplicities, in resolution order
    let mut stack: Vec<(usize, usize)> = vec![(n, 0)]; // (groups, depth)
    while let Some((g, depth)) = stack.pop() {
        if depth > DEPTH_CAP {
            return Err(Error::DepthGuard(depth));
        }
        let v = sampler.sample(rng);
        let p_left = v.powi(k as i32);
        let p_right = (1.0 - v).powi(k as i32);
        let (left, right, here) = resolve_groups(g, p_left, p_right, rng)?;
        if here > 0 {
            resolved.push(here);
        }
        // Right pushed first so the left fragment is explored first —
        // fixed order keeps the draw sequence reproducible.
        if right > 0 {
            stack.push((right, depth + 1));
        }
        if left > 0 {
            stack.push((left, depth + 1));
        }
    }
    let max_r = resolved.iter().max().copied().unwrap_or(0);
    let mut histogram = vec![0usize; max_r + 1];
    let mut per_ancestor = HashMap::with_capacity(resolved.len());
    for (id, &r) in resolved.iter().enumerate() {
        histogram[r] += 1;
        per_ancestor.insert(id as u32, r);
    }
    let stats = AncestorStats {
        n,
        k,
        distinct: resolved.len(),
        histogram,
        per_ancestor,
    };
    stats.validate()?;
    Ok(stats)
}

/// Critical offspring law of the discrete stable-tree proxy:
/// p_k = k^{−1−β}/(ζ(β)−1) for k ≥ 2, p₀ the complement (mean exactly 1).
struct StableOffspring {
    p0: f64,
    inv_z: f64,
    exponent: f64,
}

impl StableOffspring {
    fn new(beta: f64) -> Result<Self> {
        let z1 = zeta(beta)? - 1.0;
        let z2 = zeta(beta + 1.0)? - 1.0;
        Ok(StableOffspring {
            p0: 1.0 - z2 / z1,
            inv_z: 1.0 / z1,
            exponent: -1.0 - beta,
        })
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        let mut u: f64 = rng.random();
        if u < self.p0 {
            return 0;
        }
        u -= self.p0;
        let mut k = 2usize;
        loop {
            let pk = (k as f64).powf(self.exponent) * self.inv_z;
            if u < pk || k >= 1 << 30 {
                return k;
            }
            u -= pk;
            k += 1;
        }
    }
}

/// Experimental discrete proxy for stable trees: a critical Galton–
/// Watson tree with offspring tail index β, conditioned by rejection on
/// having exactly `n_leaves` leaves. Not covered by the limit theorems —
/// reported but excluded from acceptance checks.
pub fn gw_stable_tree(beta: f64, n_leaves: usize, rng: &mut impl Rng) -> Result<Tree> {
    if !(beta > 1.0 && beta < 2.0) {
        return Err(Error::Domain(format!(
            "gw_stable_tree needs beta in (1,2), got {beta}"
        )));
    }
    if n_leaves < 1 {
        return Err(Error::Domain("gw_stable_tree needs n_leaves >= 1".into()));
    }
    let offspring = StableOffspring::new(beta)?;
    const ATTEMPTS: usize = 1_000_000;
    let node_cap = 32 * n_leaves + 64;
    for _ in 0..ATTEMPTS {
        // Planted: node 0 is the root, node 1 the progenitor.
        let mut parents: Vec<u32> = vec![NO_PARENT, 0];
        let mut head = 1usize;
        let mut leaves = 0usize;
        let mut ok = true;
        while head < parents.len() {
            let kids = offspring.sample(rng);
            if kids == 0 {
                leaves += 1;
                if leaves > n_leaves {
                    ok = false;
                    break;
                }
            } else if parents.len() + kids > node_cap {
                ok = false;
                break;
            }
            for _ in 0..kids {
                parents.push(head as u32);
            }
            head += 1;
        }
        if ok && leaves == n_leaves {
            return build_tree(&parents);
        }
    }
    Err(Error::RejectionBudget(ATTEMPTS))
}

/// How leaves are packed into disjoint k-groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupingPolicy {
    /// Group i = leaves (i, i+n, i+2n, …) in leaf order — deterministic
    /// strided pairing.
    Consecutive,
    /// Uniform k-set partition of a uniform (n·k)-subset of the leaves.
    RandomDisjoint,
}

impl FromStr for GroupingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consecutive" => Ok(GroupingPolicy::Consecutive),
            "random_disjoint" | "random-disjoint" => Ok(GroupingPolicy::RandomDisjoint),
            other => Err(Error::Config(format!(
                "unknown grouping policy '{other}' (expected consecutive or random_disjoint)"
            ))),
        }
    }
}

impl std::fmt::Display for GroupingPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GroupingPolicy::Consecutive => "consecutive",
            GroupingPolicy::RandomDisjoint => "random_disjoint",
        })
    }
}

/// Pack the tree's leaves into n = ⌊L/k⌋ disjoint k-groups under the
/// chosen policy (the RNG is consulted only by `RandomDisjoint`). By
/// leaf exchangeability of the tree models the two policies give
/// identically distributed statistics — a tested property, not an
/// assumption.
pub fn group_leaves(
    tree: &Tree,
    k: usize,
    policy: GroupingPolicy,
    rng: &mut impl Rng,
) -> Result<LeafGrouping> {
    let leaves = tree.leaves();
    if k < 2 {
        return Err(Error::Domain(format!("group size k must be >= 2, got {k}")));
    }
    if leaves.len() < k {
        return Err(Error::Domain(format!(
            "tree has {} leaves, fewer than k = {k}",
            leaves.len()
        )));
    }
    let n = leaves.len() / k;
    let slots = match policy {
        GroupingPolicy::Consecutive => {
            let mut slots = Vec::with_capacity(n * k);
            for i in 0..n {
                for j in 0..k {
                    slots.push(leaves[i + j * n]);
                }
            }
            slots
        }
        GroupingPolicy::RandomDisjoint => {
            let mut pool = leaves.to_vec();
            for i in 0..n * k {
                let j = rng.random_range(i..pool.len());
                pool.swap(i, j);
            }
            pool.truncate(n * k);
            pool
        }
    };
    LeafGrouping::new(tree, k, n, slots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Canonical key of a small leaf-labeled shape: depths of the LCAs
    /// of all leaf pairs in leaf order (identifies 3- and 4-leaf shapes
    /// uniquely).
    fn shape_key(t: &Tree) -> Vec<u32> {
        let leaves = t.leaves();
        let mut key = Vec::new();
        for i in 0..leaves.len() {
            for j in i + 1..leaves.len() {
                key.push(t.depth(t.lca(leaves[i], leaves[j]).unwrap()));
            }
        }
        key
    }

    fn chi_square_uniform(counts: &HashMap<Vec<u32>, usize>, total: usize, cells: usize) -> f64 {
        assert_eq!(counts.len(), cells, "unexpected shape count");
        let expect = total as f64 / cells as f64;
        counts
            .values()
            .map(|&c| {
                let d = c as f64 - expect;
                d * d / expect
            })
            .sum()
    }

    #[test]
    fn remy_base_case_and_three_leaf_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = remy(2, &mut rng).unwrap();
        assert_eq!(t.node_count(), 4);
        assert_eq!(t.leaves(), &[2, 3]);
        assert!(remy(1, &mut rng).is_err());

        // Three leaf-labeled shapes, uniform: χ²(df=2) at the 99% level.
        let runs = 100_000;
        let mut counts: HashMap<Vec<u32>, usize> = HashMap::new();
        for _ in 0..runs {
            let t = remy(3, &mut rng).unwrap();
            *counts.entry(shape_key(&t)).or_insert(0) += 1;
        }
        let chi2 = chi_square_uniform(&counts, runs, 3);
        assert!(chi2 < 9.21, "chi-square {chi2}");
    }

    #[test]
    fn remy_large_tree_is_linear_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 1_000_000;
        let t = remy(n, &mut rng).unwrap();
        assert_eq!(t.node_count(), 2 * n);
        assert_eq!(t.leaf_count(), n);
        assert_eq!(t.children(t.root()).len(), 1, "planted root has one child");
        // Spot-check the depth recurrence.
        for v in (1..2 * n as u32).step_by(99_991) {
            let p = t.parent(v).unwrap();
            assert_eq!(t.depth(v), t.depth(p) + 1);
        }
    }

    #[test]
    fn ford_base_and_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = ford(0.9, 2, &mut rng).unwrap();
        assert_eq!(t.node_count(), 4);
        assert_eq!(t.leaves(), &[2, 3]);
        assert!(ford(0.0, 5, &mut rng).is_err());
        assert!(ford(1.0, 5, &mut rng).is_err());
        assert!(ford(0.5, 1, &mut rng).is_err());
    }

    #[test]
    fn ford_first_step_weights() {
        // From T₂: one internal edge of weight a, two external of 1−a
        // each. For a = 1/3 the internal pick has probability 1/5; it is
        // the only insertion that leaves the original cherry {2,3}
        // intact at depth 2.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let runs = 100_000;
        let mut internal_picks = 0;
        for _ in 0..runs {
            let t = ford(1.0 / 3.0, 3, &mut rng).unwrap();
            if t.depth(t.lca(2, 3).unwrap()) == 2 {
                internal_picks += 1;
            }
        }
        let freq = internal_picks as f64 / runs as f64;
        // 4σ band around 1/5: 4·√(0.2·0.8/1e5) ≈ 0.0051.
        assert!((freq - 0.2).abs() < 0.0051, "internal-edge frequency {freq}");
    }

    #[test]
    fn ford_half_equals_remy_on_four_leaf_shapes() {
        // 15 leaf-labeled shapes on 4 leaves, each 1/15 under the
        // uniform law; both chains must pass χ²(df=14) at the 99% level.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let runs = 100_000;
        for chain in ["ford", "remy"] {
            let mut counts: HashMap<Vec<u32>, usize> = HashMap::new();
            for _ in 0..runs {
                let t = match chain {
                    "ford" => ford(0.5, 4, &mut rng).unwrap(),
                    _ => remy(4, &mut rng).unwrap(),
                };
                *counts.entry(shape_key(&t)).or_insert(0) += 1;
            }
            let chi2 = chi_square_uniform(&counts, runs, 15);
            assert!(chi2 < 29.14, "{chain}: chi-square {chi2}");
        }
    }

    #[test]
    fn beta_split_reference_probabilities() {
        // β = −3/2, m = 4 → (2/5, 1/5, 2/5); χ²(df=2) on the production
        // sampler at the 99% level.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let runs = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..runs {
            counts[sample_split(-1.5, 4, &mut rng).unwrap() - 1] += 1;
        }
        let expected = [0.4, 0.2, 0.4];
        let chi2: f64 = counts
            .iter()
            .zip(expected)
            .map(|(&c, p)| {
                let e = p * runs as f64;
                (c as f64 - e) * (c as f64 - e) / e
            })
            .sum();
        assert!(chi2 < 9.21, "chi-square {chi2}, counts {counts:?}");
    }

    #[test]
    fn beta_split_ratio_sweep_matches_direct_gammas() {
        // The ratio-accumulated weights must agree with direct ln-Γ
        // evaluation; checked via χ² on a positive-β case whose mode is
        // central (exercises the scaling anchor) …
        let (beta, m) = (1.7, 7usize);
        let mut direct: Vec<f64> = (1..m)
            .map(|i| ln_split_weight(beta, m, i).unwrap().exp())
            .collect();
        let z: f64 = direct.iter().sum();
        direct.iter_mut().for_each(|w| *w /= z);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let runs = 200_000;
        let mut counts = vec![0usize; m - 1];
        for _ in 0..runs {
            counts[sample_split(beta, m, &mut rng).unwrap() - 1] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(&direct)
            .map(|(&c, p)| {
                let e = p * runs as f64;
                (c as f64 - e) * (c as f64 - e) / e
            })
            .sum();
        assert!(chi2 < 16.81, "chi-square {chi2}"); // df=5, 99%
        // … and the weights are symmetric under i ↔ m−i.
        for &(beta, m) in &[(-1.5, 9usize), (-0.9, 12), (0.0, 8), (2.3, 11)] {
            for i in 1..m {
                let a = ln_split_weight(beta, m, i).unwrap();
                let b = ln_split_weight(beta, m, m - i).unwrap();
                assert!((a - b).abs() < 1e-10, "asymmetry at beta={beta} m={m} i={i}");
            }
        }
    }

    #[test]
    fn beta_splitting_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        // Single leaf: planted root + leaf.
        let t = beta_splitting(-1.5, 1, &mut rng).unwrap();
        assert_eq!(t.node_count(), 2);
        assert_eq!(t.leaf_count(), 1);
        // m = 2 splits deterministically.
        let t = beta_splitting(5.0, 2, &mut rng).unwrap();
        assert_eq!(t.node_count(), 4);
        // General size: planted binary ⇒ 2·n_leaves nodes.
        let t = beta_splitting(-1.5, 300, &mut rng).unwrap();
        assert_eq!(t.node_count(), 600);
        assert_eq!(t.leaf_count(), 300);
        assert!(beta_splitting(-2.0, 10, &mut rng).is_err());
        assert!(beta_splitting(-1.5, 0, &mut rng).is_err());
    }

    #[test]
    fn cascade_first_split_resolution_probability() {
        // DirichletBinary(1,1), one k=2 group: P(resolve at the root
        // fragment) = E[1 − V² − (1−V)²] = 1/3. 10⁶ runs, 3σ band.
        let model = DislocationModel::dirichlet_binary(1.0, 1.0).unwrap();
        let sampler = model.largest_fragment_sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let runs = 1_000_000;
        let mut at_root = 0usize;
        for _ in 0..runs {
            let v = sampler.sample(&mut rng);
            let (_, _, here) = resolve_groups(1, v * v, (1.0 - v) * (1.0 - v), &mut rng).unwrap();
            at_root += here;
        }
        let freq = at_root as f64 / runs as f64;
        let sigma = (1.0 / 3.0 * 2.0 / 3.0 / runs as f64).sqrt();
        assert!(
            (freq - 1.0 / 3.0).abs() < 3.0 * sigma,
            "root-resolution frequency {freq}"
        );
    }

    #[test]
    fn cascade_single_group_always_one_ancestor() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let models = [
            DislocationModel::dirichlet_binary(1.0, 1.0).unwrap(),
            DislocationModel::dirichlet_binary(2.0, 0.5).unwrap(),
            DislocationModel::beta_type(1.5, 0.5).unwrap(),
        ];
        for model in &models {
            for k in [2usize, 3] {
                for _ in 0..50 {
                    let s = cascade_mrca(model, 1, k, &mut rng).unwrap();
                    assert_eq!(s.distinct, 1);
                    assert_eq!(s.histogram, vec![0, 1]);
                }
            }
        }
    }

    #[test]
    fn cascade_mean_matches_bruteforce_oracle() {
        // E[N₂(2)] under DirichletBinary(1,1): production cascade vs an
        // independent brute-force simulator that routes every point of
        // every group one at a time (no binomials, no Beta sampler).
        fn brute(groups: usize, rng: &mut ChaCha8Rng) -> usize {
            let u: f64 = rng.random();
            let v = u.max(1.0 - u); // max(U, 1−U), U uniform = Beta(1,1)
            let (mut l, mut r, mut c) = (0usize, 0usize, 0usize);
            for _ in 0..groups {
                let first = rng.random::<f64>() < v;
                let second = rng.random::<f64>() < v;
                match (first, second) {
                    (true, true) => l += 1,
                    (false, false) => r += 1,
                    _ => c += 1,
                }
            }
            let mut total = usize::from(c > 0);
            if l > 0 {
                total += brute(l, rng);
            }
            if r > 0 {
                total += brute(r, rng);
            }
            total
        }
        let model = DislocationModel::dirichlet_binary(1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let runs = 200_000;
        let (mut s1, mut q1, mut s2, mut q2) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..runs {
            let n1 = cascade_mrca(&model, 2, 2, &mut rng).unwrap().distinct as f64;
            let n2 = brute(2, &mut rng) as f64;
            s1 += n1;
            q1 += n1 * n1;
            s2 += n2;
            q2 += n2 * n2;
        }
        let r = runs as f64;
        let (m1, m2) = (s1 / r, s2 / r);
        let var1 = q1 / r - m1 * m1;
        let var2 = q2 / r - m2 * m2;
        let tol = 4.0 * ((var1 + var2) / r).sqrt();
        assert!((m1 - m2).abs() < tol, "means {m1} vs {m2} (tol {tol})");
    }

    #[test]
    fn cascade_is_reproducible_and_rejects_infinite_measures() {
        let model = DislocationModel::dirichlet_binary(2.0, 3.0).unwrap();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(12);
            let s = cascade_mrca(&model, 50, 2, &mut rng).unwrap();
            (s.distinct, s.histogram.clone())
        };
        assert_eq!(run(), run());

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let ford_model = DislocationModel::ford_alpha(0.3).unwrap();
        assert!(cascade_mrca(&ford_model, 5, 2, &mut rng).is_err());
        let stable = DislocationModel::stable(1.7).unwrap();
        assert!(cascade_mrca(&stable, 5, 2, &mut rng).is_err());
    }

    #[test]
    fn gw_offspring_law_constants() {
        // β = 3/2: p₀ and p₂ against independently computed values, and
        // exact normalization of the sampled family.
        let o = StableOffspring::new(1.5).unwrap();
        assert!((o.p0 - 0.78820858460201623).abs() < 1e-12, "p0 {}", o.p0);
        let p2 = 2f64.powf(o.exponent) * o.inv_z;
        assert!((p2 - 0.10963743364146355).abs() < 1e-12, "p2 {p2}");
        let z1 = zeta(1.5).unwrap() - 1.0;
        let z2 = zeta(2.5).unwrap() - 1.0;
        assert!((o.p0 + z2 / z1 - 1.0).abs() < 1e-12);
        // Offspring mean is exactly 1 (critical): Σ k·p_k = z1/z1.
        // Conditional P(>2 children | branching) = 1 − 2^{−1−β}/(ζ(β+1)−1)
        // decreases toward the binary-dominant stable regime as β → 2.
        let frac = |beta: f64| {
            1.0 - 2f64.powf(-1.0 - beta) / (zeta(beta + 1.0).unwrap() - 1.0)
        };
        let grid: Vec<f64> = [1.1, 1.3, 1.5, 1.7, 1.9].iter().map(|&b| frac(b)).collect();
        for w in grid.windows(2) {
            assert!(w[1] < w[0], "branching profile not monotone: {grid:?}");
        }
    }

    #[test]
    fn gw_tree_conditioning_and_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let t = gw_stable_tree(1.5, 1, &mut rng).unwrap();
        assert_eq!(t.node_count(), 2);
        assert_eq!(t.leaf_count(), 1);
        for _ in 0..20 {
            let t = gw_stable_tree(1.5, 6, &mut rng).unwrap();
            assert_eq!(t.leaf_count(), 6);
        }
        assert!(gw_stable_tree(1.0, 5, &mut rng).is_err());
        assert!(gw_stable_tree(2.0, 5, &mut rng).is_err());
        assert!(gw_stable_tree(1.5, 0, &mut rng).is_err());

        // Multifurcation rate among internal nodes falls as β grows.
        let mut fractions = Vec::new();
        for beta in [1.2, 1.5, 1.8] {
            let (mut internal, mut wide) = (0usize, 0usize);
            for _ in 0..300 {
                let t = gw_stable_tree(beta, 6, &mut rng).unwrap();
                for v in 0..t.node_count() as u32 {
                    let c = t.children(v).len();
                    if c >= 2 {
                        internal += 1;
                        if c > 2 {
                            wide += 1;
                        }
                    }
                }
            }
            fractions.push(wide as f64 / internal as f64);
        }
        assert!(
            fractions[0] > fractions[1] && fractions[1] > fractions[2],
            "multifurcation fractions {fractions:?}"
        );
    }

    #[test]
    fn grouping_policies_and_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        // 4 leaves, k=2, consecutive: groups (leaf0, leaf2), (leaf1, leaf3).
        let t = remy(4, &mut rng).unwrap();
        let leaves = t.leaves().to_vec();
        let g = group_leaves(&t, 2, GroupingPolicy::Consecutive, &mut rng).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.group(0), &[leaves[0], leaves[2]]);
        assert_eq!(g.group(1), &[leaves[1], leaves[3]]);
        // 5 leaves, k=2: n=2, one leaf unused.
        let t = remy(5, &mut rng).unwrap();
        let g = group_leaves(&t, 2, GroupingPolicy::Consecutive, &mut rng).unwrap();
        assert_eq!(g.n(), 2);
        // Random policy also yields a valid grouping of the same shape.
        let g = group_leaves(&t, 2, GroupingPolicy::RandomDisjoint, &mut rng).unwrap();
        assert_eq!(g.n(), 2);
        // Too few leaves.
        let t = remy(2, &mut rng).unwrap();
        assert!(group_leaves(&t, 3, GroupingPolicy::Consecutive, &mut rng).is_err());
        // Policy parsing.
        assert_eq!(
            "consecutive".parse::<GroupingPolicy>().unwrap(),
            GroupingPolicy::Consecutive
        );
        assert_eq!(
            "random_disjoint".parse::<GroupingPolicy>().unwrap(),
            GroupingPolicy::RandomDisjoint
        );
        assert!("stratified".parse::<GroupingPolicy>().is_err());
    }

    #[test]
    fn grouping_policies_agree_in_distribution() {
        // N over fresh 64-leaf uniform trees, k = 2: two-sample
        // Kolmogorov–Smirnov between the consecutive and random
        // policies at the 1% level.
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let replicas = 10_000;
        let sample = |policy: GroupingPolicy, rng: &mut ChaCha8Rng| -> Vec<f64> {
            let mut out = Vec::with_capacity(replicas);
            for _ in 0..replicas {
                let t = remy(64, rng).unwrap();
                let g = group_leaves(&t, 2, policy, rng).unwrap();
                let s = crate::tree::ancestor_stats(&t, &g).unwrap();
                out.push(s.distinct as f64);
            }
            out.sort_by(f64::total_cmp);
            out
        };
        let a = sample(GroupingPolicy::Consecutive, &mut rng);
        let b = sample(GroupingPolicy::RandomDisjoint, &mut rng);
        // Max CDF gap over the pooled support.
        let mut d: f64 = 0.0;
        let (mut i, mut j) = (0usize, 0usize);
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        let threshold = 1.628 * (2.0 / replicas as f64).sqrt();
        assert!(d < threshold, "KS statistic {d} vs {threshold}");
    }
}
