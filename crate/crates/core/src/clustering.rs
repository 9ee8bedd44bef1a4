//! HDBSCAN: core distances, mutual reachability, Prim's MST, single-linkage
//! dendrogram, condensed tree and excess-of-mass cluster selection.
//!
//! Conventions:
//!
//! * Density is `lambda = 1 / distance`. Zero distances are replaced by a
//!   millionth of the smallest positive merge distance, so duplicates get a
//!   very high but finite density and scaling the data scales every lambda.
//! * Merges at exactly the same distance are processed as one simultaneous
//!   split, so the condensed tree does not depend on how ties were ordered
//!   while building the dendrogram.
//! * The root cluster is a selection candidate only with
//!   `allow_single_cluster`. When it wins, only points that stay until the
//!   root's last split level are members.
//! * Selected clusters with fewer than `min_cluster_size` members become noise.
//! * Cluster ids are assigned by descending size; ties go to the cluster
//!   holding the lower point index.

use alloc::vec;
use alloc::vec::Vec;

use crate::fmath::{abs, euclidean};

/// Label of outlier documents.
pub const NOISE: i32 = -1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClusterError {
    #[error("min_cluster_size must be at least 2, got {0}")]
    MinClusterSize(usize),
    #[error("min_samples must be at least 1, got {0}")]
    MinSamples(usize),
    #[error("k = {k} neighbors requested but only {available} other points exist")]
    NotEnoughNeighbors { k: usize, available: usize },
    #[error("points have inconsistent dimensions")]
    Ragged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterParams {
    pub min_cluster_size: usize,
    /// Neighbor count `k` for core distances.
    pub min_samples: usize,
    /// Let the root compete in selection, so a single all-encompassing
    /// cluster can be returned.
    pub allow_single_cluster: bool,
}

impl ClusterParams {
    pub fn new(min_cluster_size: usize, min_samples: usize) -> Result<Self, ClusterError> {
        let params = ClusterParams {
            min_cluster_size,
            min_samples,
            allow_single_cluster: false,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.min_cluster_size < 2 {
            return Err(ClusterError::MinClusterSize(self.min_cluster_size));
        }
        if self.min_samples < 1 {
            return Err(ClusterError::MinSamples(self.min_samples));
        }
        Ok(())
    }

    pub fn with_single_cluster(self, allow: bool) -> Self {
        ClusterParams {
            allow_single_cluster: allow,
            ..self
        }
    }
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            min_cluster_size: 12,
            min_samples: 12,
            allow_single_cluster: false,
        }
    }
}

/// Flat clustering result.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    /// [`NOISE`] or a cluster id in `0..n_clusters`.
    pub labels: Vec<i32>,
    /// Membership strength in `[0, 1]`; zero for noise.
    pub probabilities: Vec<f64>,
}

impl Labeling {
    pub fn all_noise(n: usize) -> Self {
        Labeling {
            labels: vec![NOISE; n],
            probabilities: vec![0.0; n],
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| (m + 1).max(0) as usize)
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }
}

fn check_dims<P: AsRef<[f64]>>(points: &[P]) -> Result<(), ClusterError> {
    let d = points.first().map_or(0, |p| p.as_ref().len());
    if points.iter().any(|p| p.as_ref().len() != d) {
        return Err(ClusterError::Ragged);
    }
    Ok(())
}

/// Distance from each point to its `k`-th nearest neighbor, itself excluded.
pub fn core_distances<P: AsRef<[f64]>>(points: &[P], k: usize) -> Result<Vec<f64>, ClusterError> {
    check_dims(points)?;
    let n = points.len();
    if k == 0 || k + 1 > n {
        return Err(ClusterError::NotEnoughNeighbors {
            k,
            available: n.saturating_sub(1),
        });
    }
    let mut scratch = Vec::with_capacity(n - 1);
    Ok(points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            scratch.clear();
            scratch.extend(
                points
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, q)| euclidean(p.as_ref(), q.as_ref())),
            );
            let (_, kth, _) = scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        })
        .collect())
}

/// `max(core[i], core[j], dist(i, j))`.
pub fn mutual_reachability<P: AsRef<[f64]>>(points: &[P], i: usize, j: usize, core: &[f64]) -> f64 {
    let d = if i == j {
        0.0
    } else {
        euclidean(points[i].as_ref(), points[j].as_ref())
    };
    core[i].max(core[j]).max(d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Prim's algorithm over the implicit complete mutual-reachability graph.
///
/// Starts at point 0; among equally distant candidates the lower index is
/// attached first, and an existing parent is kept on equal weight.
pub fn build_mst<P: AsRef<[f64]>>(points: &[P], core: &[f64]) -> Vec<MstEdge> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let w = mutual_reachability(points, current, v, core);
            if w < best[v] {
                best[v] = w;
                parent[v] = current;
            }
        }
        let mut next = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && (next == usize::MAX || best[v] < best[next]) {
                next = v;
            }
        }
        in_tree[next] = true;
        edges.push(MstEdge {
            a: parent[next].min(next),
            b: parent[next].max(next),
            weight: best[next],
        });
        current = next;
    }
    edges
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    /// Node ids: `0..n` are points, `n + i` is the node created by merge `i`.
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

/// Single-linkage tree; merge distances are non-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub n_points: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn root(&self) -> usize {
        if self.merges.is_empty() {
            0
        } else {
            self.n_points + self.merges.len() - 1
        }
    }

    fn is_leaf(&self, node: usize) -> bool {
        node < self.n_points
    }

    fn merge(&self, node: usize) -> &Merge {
        &self.merges[node - self.n_points]
    }

    fn size(&self, node: usize) -> usize {
        if self.is_leaf(node) {
            1
        } else {
            self.merge(node).size
        }
    }

    fn distance(&self, node: usize) -> f64 {
        if self.is_leaf(node) {
            0.0
        } else {
            self.merge(node).distance
        }
    }

    fn leaves(&self, node: usize, out: &mut Vec<usize>) {
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if self.is_leaf(x) {
                out.push(x);
            } else {
                let m = self.merge(x);
                stack.push(m.right);
                stack.push(m.left);
            }
        }
    }

    /// Components present just below the merge level of `node`: descendants
    /// reached through merges at exactly the same distance are expanded.
    fn frontier(&self, node: usize) -> Vec<usize> {
        let level = self.distance(node);
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(x) = stack.pop() {
            if x == node || (!self.is_leaf(x) && self.distance(x) == level) {
                let m = self.merge(x);
                stack.push(m.right);
                stack.push(m.left);
            } else {
                out.push(x);
            }
        }
        out
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Sorts MST edges ascending (ties by endpoint indices) and merges them.
pub fn single_linkage(edges: &[MstEdge], n_points: usize) -> Dendrogram {
    let mut sorted = edges.to_vec();
    sorted.sort_by(|x, y| {
        x.weight
            .total_cmp(&y.weight)
            .then(x.a.cmp(&y.a))
            .then(x.b.cmp(&y.b))
    });
    // union-find over points; `node_of` maps a set root to its dendrogram node
    let mut uf = UnionFind::new(n_points);
    let mut node_of: Vec<usize> = (0..n_points).collect();
    let mut size_of = vec![1usize; n_points];
    let mut merges = Vec::with_capacity(sorted.len());
    for e in sorted {
        let ra = uf.find(e.a);
        let rb = uf.find(e.b);
        if ra == rb {
            continue;
        }
        let size = size_of[ra] + size_of[rb];
        let (left, right) = (node_of[ra].min(node_of[rb]), node_of[ra].max(node_of[rb]));
        merges.push(Merge {
            left,
            right,
            distance: e.weight,
            size,
        });
        uf.parent[rb] = ra;
        node_of[ra] = n_points + merges.len() - 1;
        size_of[ra] = size;
    }
    Dendrogram { n_points, merges }
}

struct CondensedCluster {
    parent: Option<usize>,
    birth: f64,
    children: Vec<usize>,
    stability: f64,
    /// Largest lambda among direct children (points leaving and child births).
    max_child_lambda: f64,
}

/// Builds the condensed tree, selects clusters by excess of mass and labels points.
pub fn condense_and_extract(dendrogram: &Dendrogram, params: &ClusterParams) -> Labeling {
    let n = dendrogram.n_points;
    let mcs = params.min_cluster_size;
    if n < 2 || n < mcs {
        return Labeling::all_noise(n);
    }

    let min_positive = dendrogram
        .merges
        .iter()
        .map(|m| m.distance)
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let floor = if min_positive.is_finite() {
        min_positive * 1e-6
    } else {
        1.0
    };
    let lambda = |d: f64| 1.0 / d.max(floor);

    let mut clusters = vec![CondensedCluster {
        parent: None,
        birth: 0.0,
        children: Vec::new(),
        stability: 0.0,
        max_child_lambda: 0.0,
    }];
    let mut point_cluster = vec![0usize; n];
    let mut point_lambda = vec![0.0f64; n];
    let mut leaves = Vec::new();

    let mut stack = vec![(dendrogram.root(), 0usize)];
    while let Some((node, cid)) = stack.pop() {
        let level = lambda(dendrogram.distance(node));
        let parts = dendrogram.frontier(node);
        let valid: Vec<usize> = parts
            .iter()
            .copied()
            .filter(|&p| dendrogram.size(p) >= mcs)
            .collect();

        let birth = clusters[cid].birth;
        for &part in parts.iter().filter(|&&p| dendrogram.size(p) < mcs) {
            leaves.clear();
            dendrogram.leaves(part, &mut leaves);
            for &p in &leaves {
                point_cluster[p] = cid;
                point_lambda[p] = level;
            }
            clusters[cid].stability += (level - birth) * leaves.len() as f64;
            clusters[cid].max_child_lambda = clusters[cid].max_child_lambda.max(level);
        }

        match valid.len() {
            0 => {}
            1 => stack.push((valid[0], cid)),
            _ => {
                for &part in valid.iter().rev() {
                    let size = dendrogram.size(part) as f64;
                    clusters[cid].stability += (level - birth) * size;
                    clusters[cid].max_child_lambda = clusters[cid].max_child_lambda.max(level);
                    let child = clusters.len();
                    clusters.push(CondensedCluster {
                        parent: Some(cid),
                        birth: level,
                        children: Vec::new(),
                        stability: 0.0,
                        max_child_lambda: 0.0,
                    });
                    clusters[cid].children.push(child);
                    stack.push((part, child));
                }
            }
        }
    }

    let selected = select_eom(&clusters, params.allow_single_cluster);

    // walk each point up to its selected ancestor
    let mut owner = vec![None::<usize>; n];
    for p in 0..n {
        let mut c = Some(point_cluster[p]);
        while let Some(cid) = c {
            if selected[cid] {
                if cid != 0 || point_lambda[p] >= clusters[0].max_child_lambda {
                    owner[p] = Some(cid);
                }
                break;
            }
            c = clusters[cid].parent;
        }
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); clusters.len()];
    for (p, o) in owner.iter().enumerate() {
        if let Some(c) = o {
            members[*c].push(p);
        }
    }
    let mut kept: Vec<usize> = (0..clusters.len())
        .filter(|&c| members[c].len() >= mcs)
        .collect();
    kept.sort_by(|&a, &b| {
        members[b]
            .len()
            .cmp(&members[a].len())
            .then(members[a][0].cmp(&members[b][0]))
    });

    let mut labeling = Labeling::all_noise(n);
    for (label, &c) in kept.iter().enumerate() {
        let max_lambda = members[c]
            .iter()
            .map(|&p| point_lambda[p])
            .fold(0.0, f64::max);
        for &p in &members[c] {
            labeling.labels[p] = label as i32;
            labeling.probabilities[p] = if max_lambda > 0.0 {
                (point_lambda[p] / max_lambda).min(1.0)
            } else {
                1.0
            };
        }
    }
    labeling
}

/// Excess-of-mass selection. Clusters are created parent-first, so a reverse
/// scan visits children before parents. On a tie the children win.
fn select_eom(clusters: &[CondensedCluster], allow_root: bool) -> Vec<bool> {
    let mut selected = vec![false; clusters.len()];
    let mut subtree = vec![0.0; clusters.len()];
    for c in (0..clusters.len()).rev() {
        let own = clusters[c].stability;
        if c == 0 && !allow_root {
            break;
        }
        if clusters[c].children.is_empty() {
            selected[c] = true;
            subtree[c] = own;
            continue;
        }
        let below: f64 = clusters[c].children.iter().map(|&ch| subtree[ch]).sum();
        let tie = abs(own - below) <= 1e-12 * abs(own).max(abs(below));
        if own > below && !tie {
            selected[c] = true;
            subtree[c] = own;
            let mut stack = clusters[c].children.clone();
            while let Some(d) = stack.pop() {
                selected[d] = false;
                stack.extend_from_slice(&clusters[d].children);
            }
        } else {
            subtree[c] = below;
        }
    }
    selected
}

/// Full HDBSCAN over `points`.
///
/// Fewer than `min_cluster_size` points yields all noise. `min_samples` is
/// capped at `n - 1` so small inputs still have defined core distances.
pub fn hdbscan<P: AsRef<[f64]>>(points: &[P], params: &ClusterParams) -> Result<Labeling, ClusterError> {
    params.validate()?;
    check_dims(points)?;
    let n = points.len();
    if n < 2 || n < params.min_cluster_size {
        return Ok(Labeling::all_noise(n));
    }
    let core = core_distances(points, params.min_samples.min(n - 1))?;
    let mst = build_mst(points, &core);
    let dendrogram = single_linkage(&mst, n);
    Ok(condense_and_extract(&dendrogram, params))
}
