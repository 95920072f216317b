//! Rooted arena trees with O(1) lowest-common-ancestor queries and the
//! ancestor-counting statistics computed on a fixed tree.
//!
//! A [`Tree`] is immutable after construction: generators assemble a
//! parent array and hand it to [`build_tree`], which computes depths, the
//! Euler tour, and a block sparse-table range-min structure in one pass.
//! All MRCA machinery reduces to range-minimum queries over the tour's
//! depth sequence; a k-set's MRCA needs a single query over the span
//! between the earliest and latest first-occurrence.
//!
//! Convention: trees are planted — the root is never counted as a leaf,
//! so a single-node tree has zero leaves eligible for grouping. For any
//! tree whose root has children this changes nothing.

use std::collections::HashMap;

use crate::{Error, Result};

/// Parent sentinel marking the root in parent arrays.
pub const NO_PARENT: u32 = u32::MAX;

/// In-block scan width of the range-min structure. 32 keeps the sparse
/// table 32× smaller than the tour while scans stay within a cache line.
const RMQ_BLOCK: usize = 32;

/// Immutable rooted tree with Euler-tour LCA support.
pub struct Tree {
    parent: Vec<u32>,
    children_start: Vec<u32>,
    children: Vec<u32>,
    depth: Vec<u32>,
    leaves: Vec<u32>,
    tour: Vec<u32>,
    first: Vec<u32>,
    tour_depth: Vec<u32>,
    rmq: BlockRmq,
    root: u32,
}

/// Sparse table over per-block argmins of the tour depth sequence.
/// Stores positions only; depths are read from the tour arrays at query
/// time.
struct BlockRmq {
    /// levels[l][j] = position of the min over blocks [j, j + 2^l).
    levels: Vec<Vec<u32>>,
}

impl BlockRmq {
    fn build(depths: &[u32]) -> Self {
        let nblocks = depths.len().div_ceil(RMQ_BLOCK);
        let mut base = Vec::with_capacity(nblocks);
        for j in 0..nblocks {
            let lo = j * RMQ_BLOCK;
            let hi = (lo + RMQ_BLOCK).min(depths.len());
            let mut best = lo;
            for i in lo + 1..hi {
                if depths[i] < depths[best] {
                    best = i;
                }
            }
            base.push(best as u32);
        }
        let mut levels = vec![base];
        let mut span = 1;
        while 2 * span <= nblocks {
            let prev = levels.last().unwrap();
            let mut next = Vec::with_capacity(nblocks - 2 * span + 1);
            for j in 0..=nblocks - 2 * span {
                let a = prev[j];
                let b = prev[j + span];
                next.push(if depths[b as usize] < depths[a as usize] { b } else { a });
            }
            levels.push(next);
            span *= 2;
        }
        BlockRmq { levels }
    }

    /// Position of a minimum of `depths` over the inclusive range
    /// [lo, hi] (ties resolve to the leftmost scanned candidate).
    fn argmin(&self, depths: &[u32], lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi && hi < depths.len());
        let bl = lo / RMQ_BLOCK;
        let bh = hi / RMQ_BLOCK;
        let mut best = lo;
        if bl == bh {
            for i in lo + 1..=hi {
                if depths[i] < depths[best] {
                    best = i;
                }
            }
            return best;
        }
        // Partial blocks at both ends.
        for i in lo + 1..(bl + 1) * RMQ_BLOCK {
            if depths[i] < depths[best] {
                best = i;
            }
        }
        for i in bh * RMQ_BLOCK..=hi {
            if depths[i] < depths[best] {
                best = i;
            }
        }
        // Full blocks in between, via the sparse table.
        let (jlo, jhi) = (bl + 1, bh); // block range [jlo, jhi)
        if jlo < jhi {
            let span = jhi - jlo;
            let l = span.ilog2() as usize;
            for cand in [self.levels[l][jlo], self.levels[l][jhi - (1 << l)]] {
                if depths[cand as usize] < depths[best] {
                    best = cand as usize;
                }
            }
        }
        best
    }
}

/// Build a [`Tree`] from a parent array (`NO_PARENT` marks the root).
///
/// Validates single-rootedness, index bounds, and acyclicity (every node
/// reachable from the root); computes depths, the Euler tour, and the
/// range-min structure. O(N log N) time, O(N) queries thereafter.
pub fn build_tree(parents: &[u32]) -> Result<Tree> {
    let n = parents.len();
    if n == 0 {
        return Err(Error::InvalidTree("empty parent array".into()));
    }
    if n as u64 >= u32::MAX as u64 {
        return Err(Error::InvalidTree(format!("too many nodes: {n}")));
    }
    let mut root = None;
    for (i, &p) in parents.iter().enumerate() {
        if p == NO_PARENT {
            if let Some(r) = root {
                return Err(Error::InvalidTree(format!("multiple roots: {r} and {i}")));
            }
            root = Some(i as u32);
        } else if p as usize >= n {
            return Err(Error::InvalidTree(format!(
                "node {i} has out-of-range parent {p}"
            )));
        } else if p as usize == i {
            return Err(Error::InvalidTree(format!("node {i} is its own parent")));
        }
    }
    let root = root.ok_or_else(|| Error::InvalidTree("no root (no NO_PARENT entry)".into()))?;

    // Children lists in CSR layout, preserving node-index order (which is
    // creation order for growth chains and left-to-right for recursive
    // builders).
    let mut counts = vec![0u32; n + 1];
    for &p in parents {
        if p != NO_PARENT {
            counts[p as usize + 1] += 1;
        }
    }
    let mut children_start = counts;
    for i in 0..n {
        children_start[i + 1] += children_start[i];
    }
    let mut children = vec![0u32; n - 1];
    let mut cursor = children_start.clone();
    for (i, &p) in parents.iter().enumerate() {
        if p != NO_PARENT {
            children[cursor[p as usize] as usize] = i as u32;
            cursor[p as usize] += 1;
        }
    }

    // Depths by BFS; any node left unvisited sits on a cycle detached
    // from the root.
    let mut depth = vec![u32::MAX; n];
    let mut queue = Vec::with_capacity(n);
    depth[root as usize] = 0;
    queue.push(root);
    let mut head = 0;
    while head < queue.len() {
        let u = queue[head] as usize;
        head += 1;
        for &c in &children[children_start[u] as usize..children_start[u + 1] as usize] {
            depth[c as usize] = depth[u] + 1;
            queue.push(c);
        }
    }
    if queue.len() != n {
        return Err(Error::InvalidTree(format!(
            "cycle detected: {} of {n} nodes unreachable from the root",
            n - queue.len()
        )));
    }

    // Planted convention: the root is never a leaf.
    let leaves: Vec<u32> = (0..n as u32)
        .filter(|&v| {
            v != root && children_start[v as usize] == children_start[v as usize + 1]
        })
        .collect();

    // Euler tour by iterative DFS: a node is appended on entry and again
    // after each child's subtree, giving length 2N−1.
    let mut tour = Vec::with_capacity(2 * n - 1);
    let mut first = vec![0u32; n];
    let mut stack: Vec<(u32, u32)> = Vec::with_capacity(64);
    first[root as usize] = 0;
    tour.push(root);
    stack.push((root, 0));
    while let Some(&mut (node, ref mut ci)) = stack.last_mut() {
        let slot = children_start[node as usize] + *ci;
        if slot < children_start[node as usize + 1] {
            *ci += 1;
            let child = children[slot as usize];
            first[child as usize] = tour.len() as u32;
            tour.push(child);
            stack.push((child, 0));
        } else {
            stack.pop();
            if let Some(&(p, _)) = stack.last() {
                tour.push(p);
            }
        }
    }
    debug_assert_eq!(tour.len(), 2 * n - 1);

    let tour_depth: Vec<u32> = tour.iter().map(|&v| depth[v as usize]).collect();
    let rmq = BlockRmq::build(&tour_depth);

    Ok(Tree {
        parent: parents.to_vec(),
        children_start,
        children,
        depth,
        leaves,
        tour,
        first,
        tour_depth,
        rmq,
        root,
    })
}

impl Tree {
    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> u32 {
        self.root
    }

    pub fn parent(&self, v: u32) -> Option<u32> {
        match self.parent[v as usize] {
            NO_PARENT => None,
            p => Some(p),
        }
    }

    pub fn children(&self, v: u32) -> &[u32] {
        &self.children[self.children_start[v as usize] as usize
            ..self.children_start[v as usize + 1] as usize]
    }

    /// Depth in edge counts from the root.
    pub fn depth(&self, v: u32) -> u32 {
        self.depth[v as usize]
    }

    /// Leaves in deterministic order (ascending node index = creation
    /// order for growth chains, left-to-right for recursive builders).
    /// The root is never a leaf (planted convention).
    pub fn leaves(&self) -> &[u32] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_leaf(&self, v: u32) -> bool {
        v != self.root && self.children(v).is_empty()
    }

    fn check_node(&self, v: u32) -> Result<()> {
        if (v as usize) < self.node_count() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "node index {v} out of range (tree has {} nodes)",
                self.node_count()
            )))
        }
    }

    /// Lowest common ancestor of u and v in O(1).
    pub fn lca(&self, u: u32, v: u32) -> Result<u32> {
        self.check_node(u)?;
        self.check_node(v)?;
        let (a, b) = {
            let fu = self.first[u as usize] as usize;
            let fv = self.first[v as usize] as usize;
            if fu <= fv { (fu, fv) } else { (fv, fu) }
        };
        let pos = self.rmq.argmin(&self.tour_depth, a, b);
        Ok(self.tour[pos])
    }

    /// MRCA of a nonempty node set: one range-min query over the span
    /// between the earliest and latest first occurrence in the tour
    /// (equivalent to any pairwise fold, in O(set size)).
    pub fn lca_group(&self, nodes: &[u32]) -> Result<u32> {
        let first = match nodes.first() {
            Some(&v) => {
                self.check_node(v)?;
                self.first[v as usize] as usize
            }
            None => return Err(Error::Domain("lca_group on empty node list".into())),
        };
        let (mut lo, mut hi) = (first, first);
        for &v in &nodes[1..] {
            self.check_node(v)?;
            let f = self.first[v as usize] as usize;
            lo = lo.min(f);
            hi = hi.max(f);
        }
        let pos = self.rmq.argmin(&self.tour_depth, lo, hi);
        Ok(self.tour[pos])
    }
}

/// n groups of k distinct leaves each, flat-packed: group i occupies
/// slots [i·k, (i+1)·k).
pub struct LeafGrouping {
    k: usize,
    n: usize,
    slots: Vec<u32>,
}

impl LeafGrouping {
    /// Validate and wrap a flat slot array: indices must be distinct
    /// leaves of `tree`, with exactly n·k of them and n·k ≤ leaf count.
    pub fn new(tree: &Tree, k: usize, n: usize, slots: Vec<u32>) -> Result<Self> {
        if k < 2 {
            return Err(Error::Domain(format!("group size k must be >= 2, got {k}")));
        }
        if slots.len() != n * k {
            return Err(Error::Domain(format!(
                "grouping has {} slots, expected n*k = {}",
                slots.len(),
                n * k
            )));
        }
        if n * k > tree.leaf_count() {
            return Err(Error::Domain(format!(
                "grouping needs {} distinct leaves but the tree has {}",
                n * k,
                tree.leaf_count()
            )));
        }
        let mut seen = vec![false; tree.node_count()];
        for &v in &slots {
            tree.check_node(v)?;
            if !tree.is_leaf(v) {
                return Err(Error::Domain(format!("grouping slot {v} is not a leaf")));
            }
            if std::mem::replace(&mut seen[v as usize], true) {
                return Err(Error::Domain(format!("leaf {v} appears twice in grouping")));
            }
        }
        Ok(LeafGrouping { k, n, slots })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn group(&self, i: usize) -> &[u32] {
        &self.slots[i * self.k..(i + 1) * self.k]
    }
}

/// The ancestor-counting statistics of one grouping on one tree:
/// N (distinct MRCAs), the multiplicity histogram N_{n,r}, and the
/// per-ancestor hit counts D_{b,n}.
pub struct AncestorStats {
    pub n: usize,
    pub k: usize,
    /// N: number of distinct group MRCAs.
    pub distinct: usize,
    /// histogram[r] = N_{n,r} = number of ancestors hit by exactly r
    /// groups; index 0 is unused and always 0.
    pub histogram: Vec<usize>,
    /// D_{b,n} for every ancestor b hit at least once.
    pub per_ancestor: HashMap<u32, usize>,
}

impl AncestorStats {
    /// Check the exact identities Σ_r N_{n,r} = N, Σ_r r·N_{n,r} = n,
    /// Σ_b D_{b,n} = n, and that the histogram's support matches the map.
    pub fn validate(&self) -> Result<()> {
        let sum_nr: usize = self.histogram.iter().sum();
        let weighted: usize = self.histogram.iter().enumerate().map(|(r, c)| r * c).sum();
        let d_total: usize = self.per_ancestor.values().sum();
        let max_hist = self.histogram.iter().rposition(|&c| c > 0).unwrap_or(0);
        let max_map = self.per_ancestor.values().max().copied().unwrap_or(0);
        if sum_nr != self.distinct {
            return Err(Error::InvalidTree(format!(
                "ancestor stats: sum of N_nr = {sum_nr} != N = {}",
                self.distinct
            )));
        }
        if weighted != self.n {
            return Err(Error::InvalidTree(format!(
                "ancestor stats: sum of r*N_nr = {weighted} != n = {}",
                self.n
            )));
        }
        if d_total != self.n {
            return Err(Error::InvalidTree(format!(
                "ancestor stats: sum of D_b = {d_total} != n = {}",
                self.n
            )));
        }
        if max_hist != max_map {
            return Err(Error::InvalidTree(format!(
                "ancestor stats: histogram max multiplicity {max_hist} != map max {max_map}"
            )));
        }
        Ok(())
    }
}

/// Compute N_n(k), the multiplicity histogram, and the per-ancestor
/// counts for one grouping. The internal identities are asserted on
/// every call.
pub fn ancestor_stats(tree: &Tree, grouping: &LeafGrouping) -> Result<AncestorStats> {
    let mut per_ancestor: HashMap<u32, usize> = HashMap::new();
    for i in 0..grouping.n() {
        let a = tree.lca_group(grouping.group(i))?;
        *per_ancestor.entry(a).or_insert(0) += 1;
    }
    let max_r = per_ancestor.values().max().copied().unwrap_or(0);
    let mut histogram = vec![0usize; max_r + 1];
    for &d in per_ancestor.values() {
        histogram[d] += 1;
    }
    let stats = AncestorStats {
        n: grouping.n(),
        k: grouping.k(),
        distinct: per_ancestor.len(),
        histogram,
        per_ancestor,
    };
    stats.validate()?;
    Ok(stats)
}

/// Exact law of the MRCA of k distinct uniform leaves:
/// P(b) = [C(n_b, k) − Σ_i C(n_{b_i}, k)] / C(L, k), with n_b the leaf
/// count under b. Computed with binomial-ratio products, so it stays
/// exact-in-f64 well past the overflow range of raw binomials. Returns
/// (node, probability) pairs sorted by descending probability, ties by
/// ascending node index; entries with zero probability are dropped.
pub fn mrca_distribution(tree: &Tree, k: usize) -> Result<Vec<(u32, f64)>> {
    let leaf_total = tree.leaf_count();
    if k == 0 || k > leaf_total {
        return Err(Error::Domain(format!(
            "mrca_distribution needs 1 <= k <= leaf count ({leaf_total}), got {k}"
        )));
    }
    // Leaves under each node, children before parents (reverse BFS).
    let n = tree.node_count();
    let mut below = vec![0u64; n];
    let mut order = Vec::with_capacity(n);
    order.push(tree.root());
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        order.extend_from_slice(tree.children(u));
    }
    for &u in order.iter().rev() {
        if tree.is_leaf(u) {
            below[u as usize] = 1;
        } else {
            below[u as usize] = tree
                .children(u)
                .iter()
                .map(|&c| below[c as usize])
                .sum();
        }
    }
    // R(m) = C(m,k)/C(L,k) = Π_{j<k} (m−j)/(L−j); zero when m < k.
    let ratio = |m: u64| -> f64 {
        if (m as usize) < k {
            return 0.0;
        }
        let mut r = 1.0;
        for j in 0..k as u64 {
            r *= (m - j) as f64 / (leaf_total as u64 - j) as f64;
        }
        r
    };
    let mut out = Vec::new();
    for v in 0..n as u32 {
        let own = ratio(below[v as usize]);
        if own == 0.0 {
            continue;
        }
        let children_part: f64 = tree.children(v).iter().map(|&c| ratio(below[c as usize])).sum();
        let p = own - children_part;
        if p > 0.0 {
            out.push((v, p));
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Random tree by uniform attachment: node j's parent is uniform on
    /// 0..j. Depth O(log n) with high probability.
    fn random_attachment_tree(n: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
        let mut parents = vec![NO_PARENT; n];
        for j in 1..n {
            parents[j] = rng.random_range(0..j as u32);
        }
        parents
    }

    fn naive_ancestor_path(parents: &[u32], mut v: u32) -> Vec<u32> {
        let mut path = vec![v];
        while parents[v as usize] != NO_PARENT {
            v = parents[v as usize];
            path.push(v);
        }
        path
    }

    fn naive_lca(parents: &[u32], u: u32, v: u32) -> u32 {
        let pu = naive_ancestor_path(parents, u);
        let set: std::collections::HashSet<u32> = pu.into_iter().collect();
        let mut w = v;
        loop {
            if set.contains(&w) {
                return w;
            }
            w = parents[w as usize];
        }
    }

    #[test]
    fn single_node_tree_is_leafless() {
        let t = build_tree(&[NO_PARENT]).unwrap();
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.leaf_count(), 0, "planted convention: root is not a leaf");
        assert_eq!(t.depth(0), 0);
        assert_eq!(t.lca(0, 0).unwrap(), 0);
    }

    #[test]
    fn root_with_two_children() {
        let t = build_tree(&[NO_PARENT, 0, 0]).unwrap();
        assert_eq!(t.depth(0), 0);
        assert_eq!(t.depth(1), 1);
        assert_eq!(t.depth(2), 1);
        assert_eq!(t.leaves(), &[1, 2]);
        assert_eq!(t.lca(1, 2).unwrap(), 0);
        assert_eq!(t.lca(0, 2).unwrap(), 0);
    }

    #[test]
    fn malformed_parent_arrays_are_rejected() {
        assert!(matches!(build_tree(&[]), Err(Error::InvalidTree(_))));
        // Two roots.
        assert!(build_tree(&[NO_PARENT, NO_PARENT]).is_err());
        // No root.
        assert!(build_tree(&[1, 0]).is_err());
        // Out of range.
        assert!(build_tree(&[NO_PARENT, 7]).is_err());
        // Self-loop and two-cycle detached from the root.
        assert!(build_tree(&[NO_PARENT, 1]).is_err());
        assert!(build_tree(&[NO_PARENT, 2, 1]).is_err());
    }

    #[test]
    fn depths_match_naive_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let parents = random_attachment_tree(100_000, &mut rng);
        let t = build_tree(&parents).unwrap();
        for v in (0..100_000u32).step_by(37) {
            let naive = naive_ancestor_path(&parents, v).len() as u32 - 1;
            assert_eq!(t.depth(v), naive, "depth mismatch at {v}");
        }
        // Full sweep via the recurrence.
        for v in 1..100_000u32 {
            assert_eq!(t.depth(v), t.depth(parents[v as usize]) + 1);
        }
    }

    #[test]
    fn euler_tour_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1usize, 2, 3, 17, 400] {
            let parents = random_attachment_tree(n, &mut rng);
            let t = build_tree(&parents).unwrap();
            assert_eq!(t.tour.len(), 2 * n - 1);
            for v in 0..n as u32 {
                let f = t.first[v as usize] as usize;
                assert!(f < t.tour.len());
                assert_eq!(t.tour[f], v, "first occurrence index wrong for {v}");
            }
        }
    }

    #[test]
    fn lca_identity_and_root_absorb() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let parents = random_attachment_tree(500, &mut rng);
        let t = build_tree(&parents).unwrap();
        for v in 0..500u32 {
            assert_eq!(t.lca(v, v).unwrap(), v);
            assert_eq!(t.lca(0, v).unwrap(), 0);
        }
        assert!(t.lca(0, 500).is_err());
    }

    #[test]
    fn lca_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        // Exhaustive pairs on many small trees (crosses RMQ block
        // boundaries once n > 16).
        for n in [2usize, 3, 5, 12, 33, 70] {
            for _ in 0..30 {
                let parents = random_attachment_tree(n, &mut rng);
                let t = build_tree(&parents).unwrap();
                for u in 0..n as u32 {
                    for v in u..n as u32 {
                        assert_eq!(
                            t.lca(u, v).unwrap(),
                            naive_lca(&parents, u, v),
                            "n={n} pair ({u},{v})"
                        );
                    }
                }
            }
        }
        // Random pairs on one large tree.
        let parents = random_attachment_tree(30_000, &mut rng);
        let t = build_tree(&parents).unwrap();
        for _ in 0..20_000 {
            let u = rng.random_range(0..30_000u32);
            let v = rng.random_range(0..30_000u32);
            assert_eq!(t.lca(u, v).unwrap(), naive_lca(&parents, u, v));
        }
    }

    #[test]
    fn lca_group_basics_and_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let parents = random_attachment_tree(800, &mut rng);
        let t = build_tree(&parents).unwrap();
        assert!(t.lca_group(&[]).is_err());
        for v in (0..800u32).step_by(13) {
            assert_eq!(t.lca_group(&[v]).unwrap(), v);
        }
        // MRCA of all leaves of a two-child root is the root.
        let t2 = build_tree(&[NO_PARENT, 0, 0, 1, 1, 2, 2]).unwrap();
        assert_eq!(t2.lca_group(t2.leaves()).unwrap(), 0);
        // Random 5-subsets against a pairwise naive fold.
        for _ in 0..2_000 {
            let set: Vec<u32> = (0..5).map(|_| rng.random_range(0..800u32)).collect();
            let mut folded = set[0];
            for &v in &set[1..] {
                folded = naive_lca(&parents, folded, v);
            }
            assert_eq!(t.lca_group(&set).unwrap(), folded);
        }
    }

    #[test]
    fn grouping_validation() {
        // Complete binary tree on 4 leaves: 0 root; 1,2 internal; 3,4
        // under 1; 5,6 under 2.
        let t = build_tree(&[NO_PARENT, 0, 0, 1, 1, 2, 2]).unwrap();
        assert!(LeafGrouping::new(&t, 2, 2, vec![3, 4, 5, 6]).is_ok());
        // Repeated leaf.
        assert!(LeafGrouping::new(&t, 2, 2, vec![3, 4, 3, 6]).is_err());
        // Non-leaf slot.
        assert!(LeafGrouping::new(&t, 2, 2, vec![3, 4, 1, 6]).is_err());
        // Wrong slot count.
        assert!(LeafGrouping::new(&t, 2, 2, vec![3, 4, 5]).is_err());
        // k too small.
        assert!(LeafGrouping::new(&t, 1, 2, vec![3, 4]).is_err());
        // More slots than leaves.
        assert!(LeafGrouping::new(&t, 2, 3, vec![3, 4, 5, 6, 0, 1]).is_err());
    }

    #[test]
    fn ancestor_stats_reference_cases() {
        // Planted tree with one cherry: root 0 — 1 — leaves {2,3}.
        let t = build_tree(&[NO_PARENT, 0, 1, 1]).unwrap();
        let g = LeafGrouping::new(&t, 2, 1, vec![2, 3]).unwrap();
        let s = ancestor_stats(&t, &g).unwrap();
        assert_eq!(s.distinct, 1);
        assert_eq!(s.histogram, vec![0, 1]);
        assert_eq!(s.per_ancestor.get(&1), Some(&1));

        // Complete binary tree on 4 leaves.
        let t = build_tree(&[NO_PARENT, 0, 0, 1, 1, 2, 2]).unwrap();
        // Two cherry groups → two distinct ancestors, each hit once.
        let g = LeafGrouping::new(&t, 2, 2, vec![3, 4, 5, 6]).unwrap();
        let s = ancestor_stats(&t, &g).unwrap();
        assert_eq!(s.distinct, 2);
        assert_eq!(s.histogram, vec![0, 2]);
        // Two straddling groups → the root twice.
        let g = LeafGrouping::new(&t, 2, 2, vec![3, 5, 4, 6]).unwrap();
        let s = ancestor_stats(&t, &g).unwrap();
        assert_eq!(s.distinct, 1);
        assert_eq!(s.histogram, vec![0, 0, 1]);
        assert_eq!(s.per_ancestor.get(&0), Some(&2));
    }

    #[test]
    fn ancestor_stats_invariants_and_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let parents = random_attachment_tree(3_000, &mut rng);
        let t = build_tree(&parents).unwrap();
        let k = 3;
        let mut pool: Vec<u32> = t.leaves().to_vec();
        // Fisher–Yates prefix shuffle for a random disjoint grouping.
        for i in 0..pool.len() {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        let n_max = pool.len() / k;
        let mut prev_distinct = 0;
        for n in [1, 2, n_max / 4, n_max / 2, n_max] {
            let g = LeafGrouping::new(&t, k, n, pool[..n * k].to_vec()).unwrap();
            let s = ancestor_stats(&t, &g).unwrap();
            s.validate().unwrap();
            assert!(
                s.distinct >= prev_distinct,
                "N must be nondecreasing under appending groups"
            );
            prev_distinct = s.distinct;
        }
    }

    #[test]
    fn mrca_distribution_complete_binary() {
        let t = build_tree(&[NO_PARENT, 0, 0, 1, 1, 2, 2]).unwrap();
        let d = mrca_distribution(&t, 2).unwrap();
        // Root: [C(4,2) − 2C(2,2)]/C(4,2) = 4/6; cherries 1/6 each;
        // sorted descending, ties by node index.
        assert_eq!(d.len(), 3);
        assert_eq!(d[0].0, 0);
        assert!((d[0].1 - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!((d[1].0, d[2].0), (1, 2));
        assert!((d[1].1 - 1.0 / 6.0).abs() < 1e-15);
        assert!((d[2].1 - 1.0 / 6.0).abs() < 1e-15);

        // k = L concentrates on the root.
        let d = mrca_distribution(&t, 4).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].0, 0);
        assert!((d[0].1 - 1.0).abs() < 1e-15);

        assert!(mrca_distribution(&t, 5).is_err());
        assert!(mrca_distribution(&t, 0).is_err());
    }

    /// Enumerate k-subsets of `items`, calling `f` on each.
    fn for_each_subset(items: &[u32], k: usize, f: &mut impl FnMut(&[u32])) {
        fn rec(items: &[u32], k: usize, start: usize, cur: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
            if cur.len() == k {
                f(cur);
                return;
            }
            for i in start..items.len() {
                cur.push(items[i]);
                rec(items, k, i + 1, cur, f);
                cur.pop();
            }
        }
        rec(items, k, 0, &mut Vec::new(), f);
    }

    #[test]
    fn mrca_distribution_matches_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        // Caterpillar on 5 leaves plus random trees with ≤ 10 leaves.
        let caterpillar = {
            // Spine 0-1-2-3 with a leaf hanging off each spine node and
            // two leaves at the bottom.
            let mut p = vec![NO_PARENT, 0, 1, 2];
            p.extend_from_slice(&[0, 1, 2, 3, 3]); // leaves 4..=8
            p
        };
        let mut cases: Vec<Vec<u32>> = vec![caterpillar];
        for n in [6usize, 9, 14, 18] {
            for _ in 0..10 {
                cases.push(random_attachment_tree(n, &mut rng));
            }
        }
        for parents in &cases {
            let t = build_tree(parents).unwrap();
            let leaf_total = t.leaf_count();
            for k in [2usize, 3] {
                if k > leaf_total {
                    continue;
                }
                let d = mrca_distribution(&t, k).unwrap();
                let total: f64 = d.iter().map(|&(_, p)| p).sum();
                assert!((total - 1.0).abs() < 1e-12, "sum {total}");
                // Brute force: every k-subset of leaves, one lca_group
                // each.
                let mut counts: HashMap<u32, u64> = HashMap::new();
                let mut subsets = 0u64;
                for_each_subset(t.leaves(), k, &mut |set| {
                    *counts.entry(t.lca_group(set).unwrap()).or_insert(0) += 1;
                    subsets += 1;
                });
                let dist: HashMap<u32, f64> = d.into_iter().collect();
                assert_eq!(dist.len(), counts.len());
                for (node, cnt) in counts {
                    let want = cnt as f64 / subsets as f64;
                    let got = dist.get(&node).copied().unwrap_or(0.0);
                    assert!(
                        (got - want).abs() < 1e-12,
                        "node {node}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn empirical_multiplicities_converge_to_mrca_law() {
        // Fixed 15-leaf tree; n = 10^5 independent k=2 groups, each a
        // without-replacement pair; TV(empirical D/n, exact law) < 0.02.
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let parents = random_attachment_tree(29, &mut rng);
        let t = build_tree(&parents).unwrap();
        let leaves = t.leaves().to_vec();
        assert!(leaves.len() >= 10, "attachment tree unexpectedly thin");
        let exact: HashMap<u32, f64> = mrca_distribution(&t, 2).unwrap().into_iter().collect();
        let n = 100_000usize;
        let mut counts: HashMap<u32, u64> = HashMap::new();
        for _ in 0..n {
            let i = rng.random_range(0..leaves.len());
            let j = loop {
                let j = rng.random_range(0..leaves.len());
                if j != i {
                    break j;
                }
            };
            let a = t.lca(leaves[i], leaves[j]).unwrap();
            *counts.entry(a).or_insert(0) += 1;
        }
        let mut tv = 0.0;
        for (&node, &p) in &exact {
            let emp = counts.get(&node).copied().unwrap_or(0) as f64 / n as f64;
            tv += (emp - p).abs();
        }
        for (&node, &c) in &counts {
            if !exact.contains_key(&node) {
                tv += c as f64 / n as f64;
            }
        }
        tv /= 2.0;
        assert!(tv < 0.02, "total variation {tv}");
    }
}
