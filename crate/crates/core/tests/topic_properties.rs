use proptest::prelude::*;
use signalscope_core::corpus::Document;
use signalscope_core::embedding::EmbeddingMatrix;
use signalscope_core::topics::{
    build_vocabulary, reduce_topics, topic_similarity, TopicContext, TopicModel,
};

#[derive(Debug)]
struct Fixture {
    docs: Vec<Document>,
    emb: EmbeddingMatrix,
    labels: Vec<i32>,
}

fn fixture() -> impl Strategy<Value = Fixture> {
    (2..8usize, 8..40usize).prop_flat_map(|(k, n)| {
        (
            prop::collection::vec((0..k as i32, prop::collection::vec("[a-f]", 1..6), any::<bool>()), n),
            prop::collection::vec(prop::collection::vec(-1.0..1.0f64, 3), n),
        )
            .prop_map(move |(rows, vectors)| {
                let docs: Vec<Document> = rows
                    .iter()
                    .enumerate()
                    .map(|(i, (_, t, _))| Document { id: format!("d{i}"), tokens: t.clone(), year: 2010 })
                    .collect();
                let labels = rows.iter().map(|&(l, _, noise)| if noise && l % 2 == 0 { -1 } else { l }).collect();
                let vectors = vectors.into_iter().map(|mut v| {
                    v[0] += 2.0; // keep centroids away from the origin
                    v
                });
                let emb = EmbeddingMatrix::from_rows(docs.iter().map(|d| d.id.clone()).collect(), vectors.collect()).unwrap();
                Fixture { docs, emb, labels }
            })
    })
}

proptest! {
    #[test]
    fn reduction_conserves_documents(f in fixture(), max in 1..6usize) {
        let vocab = build_vocabulary(&f.docs, 1).unwrap();
        let ctx = TopicContext { documents: &f.docs, vocabulary: &vocab, embeddings: &f.emb };
        let model = TopicModel::build(ctx, &f.labels).unwrap();
        let before: usize = model.counts.iter().sum();
        prop_assert_eq!(before, f.labels.iter().filter(|&&l| l >= 0).count());
        let reduced = reduce_topics(&model, ctx, max).unwrap();
        prop_assert_eq!(reduced.counts.iter().sum::<usize>(), before);
        prop_assert_eq!(reduced.n_topics(), model.n_topics().min(max));
        if model.n_topics() <= max {
            prop_assert_eq!(&reduced, &model);
        }
        // counts agree with assignment multiplicities and are non-increasing
        for t in 0..reduced.n_topics() {
            let m = reduced.assignments.iter().filter(|&&a| a == t as i32).count();
            prop_assert_eq!(m, reduced.counts[t]);
        }
        prop_assert!(reduced.counts.windows(2).all(|w| w[0] >= w[1]));
        // noise stays noise
        for (a, b) in model.assignments.iter().zip(&reduced.assignments) {
            prop_assert_eq!(*a == -1, *b == -1);
        }
    }

    #[test]
    fn similarity_is_symmetric_with_unit_diagonal(f in fixture()) {
        let vocab = build_vocabulary(&f.docs, 1).unwrap();
        let ctx = TopicContext { documents: &f.docs, vocabulary: &vocab, embeddings: &f.emb };
        let model = TopicModel::build(ctx, &f.labels).unwrap();
        let s = topic_similarity(&model).unwrap();
        #[allow(clippy::needless_range_loop)]
        for i in 0..s.len() {
            prop_assert!((s[i][i] - 1.0).abs() < 1e-9);
            for j in 0..s.len() {
                prop_assert_eq!(s[i][j], s[j][i]);
                prop_assert!((-1.0..=1.0).contains(&s[i][j]));
            }
        }
    }
}
