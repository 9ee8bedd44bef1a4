//! Exhaustive reference for HDBSCAN on tiny inputs: mutual reachability over
//! all pairs, the cluster hierarchy rebuilt by thresholding the complete
//! graph at every distinct distance, and excess-of-mass selection on top.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use signalscope_core::clustering::NOISE;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn mr_matrix(points: &[Vec<f64>], min_samples: usize) -> Vec<Vec<f64>> {
    let n = points.len();
    let core: Vec<f64> = (0..n)
        .map(|i| {
            let mut d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| dist(&points[i], &points[j])).collect();
            d.sort_by(f64::total_cmp);
            d[min_samples - 1]
        })
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 0.0 } else { dist(&points[i], &points[j]).max(core[i]).max(core[j]) })
                .collect()
        })
        .collect()
}

/// Components of `set` using only edges strictly shorter than `level`.
fn split(set: &[usize], mr: &[Vec<f64>], level: f64) -> Vec<Vec<usize>> {
    let mut left: BTreeSet<usize> = set.iter().copied().collect();
    let mut parts = Vec::new();
    while let Some(&start) = left.iter().next() {
        left.remove(&start);
        let mut comp = vec![start];
        let mut i = 0;
        while i < comp.len() {
            let u = comp[i];
            let near: Vec<usize> = left.iter().copied().filter(|&v| mr[u][v] < level).collect();
            for v in near {
                left.remove(&v);
                comp.push(v);
            }
            i += 1;
        }
        comp.sort_unstable();
        parts.push(comp);
    }
    parts
}

struct Node {
    points: Vec<usize>,
    children: Vec<usize>,
    stability: f64,
    /// (point, lambda at which it left this node)
    exits: Vec<(usize, f64)>,
}

pub fn oracle(points: &[Vec<f64>], mcs: usize, min_samples: usize, single: bool) -> Vec<i32> {
    let n = points.len();
    if n < mcs || n < 2 {
        return vec![NOISE; n];
    }
    let mr = mr_matrix(points, min_samples.min(n - 1));
    let mut levels: Vec<f64> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| mr[i][j])
        .collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    let min_pos = levels.iter().copied().filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min);
    let floor = if min_pos.is_finite() { min_pos * 1e-6 } else { 1.0 };
    let lambda = |d: f64| 1.0 / d.max(floor);

    let mut nodes = vec![Node { points: (0..n).collect(), children: vec![], stability: 0.0, exits: vec![] }];
    // (node id, current point set, birth lambda)
    let mut work = vec![(0usize, (0..n).collect::<Vec<_>>(), 0.0f64)];
    while let Some((id, mut set, birth)) = work.pop() {
        for &level in &levels {
            // only levels at which this set actually splits matter
            let parts = split(&set, &mr, level);
            if parts.len() == 1 {
                continue;
            }
            let l = lambda(level);
            let valid: Vec<Vec<usize>> = parts.iter().filter(|p| p.len() >= mcs).cloned().collect();
            for p in parts.iter().filter(|p| p.len() < mcs) {
                for &q in p {
                    nodes[id].exits.push((q, l));
                }
            }
            if valid.len() == 1 {
                set = valid[0].clone();
                continue;
            }
            for p in &valid {
                for &q in p {
                    nodes[id].exits.push((q, l));
                }
            }
            if valid.len() >= 2 {
                for p in valid {
                    let child = nodes.len();
                    nodes.push(Node { points: p.clone(), children: vec![], stability: 0.0, exits: vec![] });
                    nodes[id].children.push(child);
                    work.push((child, p, l));
                }
            }
            set.clear();
            break;
        }
        nodes[id].stability = nodes[id].exits.iter().map(|&(_, l)| l - birth).sum();
    }

    // excess of mass, children before parents
    fn best(nodes: &[Node], id: usize, single: bool, chosen: &mut Vec<usize>) -> f64 {
        let node = &nodes[id];
        if id == 0 && !single {
            for &c in &node.children {
                best(nodes, c, single, chosen);
            }
            return 0.0;
        }
        if node.children.is_empty() {
            chosen.push(id);
            return node.stability;
        }
        let mut below_ids = Vec::new();
        let below: f64 = node.children.iter().map(|&c| best(nodes, c, single, &mut below_ids)).sum();
        let own = node.stability;
        let tie = (own - below).abs() <= 1e-12 * own.abs().max(below.abs());
        if own > below && !tie {
            chosen.push(id);
            own
        } else {
            chosen.extend(below_ids);
            below
        }
    }
    let mut chosen = Vec::new();
    best(&nodes, 0, single, &mut chosen);

    let mut groups: Vec<Vec<usize>> = chosen
        .iter()
        .map(|&c| {
            if c == 0 {
                let last = nodes[0].exits.iter().map(|e| e.1).fold(0.0, f64::max);
                nodes[0].exits.iter().filter(|e| e.1 >= last).map(|e| e.0).collect()
            } else {
                nodes[c].points.clone()
            }
        })
        .filter(|g: &Vec<usize>| g.len() >= mcs)
        .collect();
    groups.iter_mut().for_each(|g| g.sort_unstable());
    groups.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    let mut labels = vec![NOISE; n];
    for (k, g) in groups.iter().enumerate() {
        for &p in g {
            labels[p] = k as i32;
        }
    }
    labels
}

pub fn random_points(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rng.random_range(2..=8);
    let dim = rng.random_range(1..=2);
    let grid = rng.random_bool(0.5);
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    if grid {
                        f64::from(rng.random_range(0..6u8))
                    } else {
                        rng.random_range(-10.0..10.0)
                    }
                })
                .collect()
        })
        .collect()
}
