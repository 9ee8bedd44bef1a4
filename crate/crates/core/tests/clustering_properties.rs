use std::collections::BTreeSet;

use proptest::prelude::*;
use signalscope_core::clustering::{hdbscan, ClusterParams, NOISE};

fn dataset() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..4usize).prop_flat_map(|dim| prop::collection::vec(prop::collection::vec(-100.0..100.0f64, dim), 2..40))
}

/// Clusters as sets of point indices, noise left out.
fn partition(labels: &[i32]) -> BTreeSet<BTreeSet<usize>> {
    let k = labels.iter().copied().max().unwrap_or(NOISE);
    (0..=k)
        .map(|c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
        .collect()
}

fn params() -> impl Strategy<Value = ClusterParams> {
    (2..6usize, 1..6usize, any::<bool>())
        .prop_map(|(m, s, single)| ClusterParams::new(m, s).unwrap().with_single_cluster(single))
}

proptest! {
    #[test]
    fn labels_form_a_valid_partition(points in dataset(), p in params()) {
        let l = hdbscan(&points, &p).unwrap();
        prop_assert_eq!(l.labels.len(), points.len());
        let k = l.n_clusters();
        for c in 0..k as i32 {
            let size = l.labels.iter().filter(|&&x| x == c).count();
            prop_assert!(size >= p.min_cluster_size);
        }
        for (&lab, &prob) in l.labels.iter().zip(&l.probabilities) {
            prop_assert!(lab == NOISE || (0..k as i32).contains(&lab));
            prop_assert!((0.0..=1.0).contains(&prob));
            if lab == NOISE {
                prop_assert_eq!(prob, 0.0);
            }
        }
    }

    #[test]
    fn permuting_rows_permutes_labels(points in dataset(), p in params(), seed in any::<u64>()) {
        let n = points.len();
        let mut order: Vec<usize> = (0..n).collect();
        // Fisher-Yates driven by a simple LCG
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let shuffled: Vec<Vec<f64>> = order.iter().map(|&i| points[i].clone()).collect();
        let a = hdbscan(&points, &p).unwrap();
        let b = hdbscan(&shuffled, &p).unwrap();
        let back: Vec<i32> = {
            let mut v = vec![0; n];
            for (new, &old) in order.iter().enumerate() {
                v[old] = b.labels[new];
            }
            v
        };
        prop_assert_eq!(partition(&a.labels), partition(&back));
    }

    #[test]
    fn scaling_keeps_partition(points in dataset(), p in params(), c in prop::sample::select(vec![0.25, 0.5, 2.0, 10.0, 1000.0])) {
        let scaled: Vec<Vec<f64>> = points.iter().map(|r| r.iter().map(|x| x * c).collect()).collect();
        let a = hdbscan(&points, &p).unwrap();
        let b = hdbscan(&scaled, &p).unwrap();
        prop_assert_eq!(a.labels, b.labels);
    }
}
