#![allow(dead_code)]

use kgcl::augment::{AugmentedViewPair, ConsistencyScores, EdgeDropProbs, KgMask, UiMask};
use kgcl::data::{InteractionGraph, KnowledgeGraph, Triple};
use kgcl::kg_encoder::{transe_loss, TransESample};
use kgcl::losses::{joint_loss, LossConfig, PreparedViews};
use kgcl::numeric::gradcheck::sample_coords;
use kgcl::numeric::{finite_diff_check, init_params, rng_from_seed, ParamStore, Tensor, VocabSizes};

pub const H: f64 = 1e-4;
pub const TOL: f64 = 1e-4;

/// 4 users, 4 items, 8 interactions, 6 triples over 7 entities and 2
/// relations, d = 8, with fixed view masks.
pub struct Toy {
    pub graph: InteractionGraph,
    pub kg: KnowledgeGraph,
    pub prepared: PreparedViews<f64>,
    pub batch: Vec<(usize, usize, usize)>,
    pub store: ParamStore<f64>,
}

pub fn toy(seed: u64) -> Toy {
    let edges = vec![(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 3), (3, 0), (3, 3)];
    let graph = InteractionGraph::from_edges(4, 4, edges).unwrap().0;
    let triples = vec![
        Triple::new(0, 0, 4),
        Triple::new(0, 1, 5),
        Triple::new(1, 0, 4),
        Triple::new(2, 1, 6),
        Triple::new(3, 0, 5),
        Triple::new(3, 1, 6),
    ];
    let kg = KnowledgeGraph::new(4, 7, 2, triples).0;
    let pair = AugmentedViewPair {
        kg_masks: [
            KgMask::from_bools(vec![true, false, true, true, true, true]),
            KgMask::from_bools(vec![true, true, true, false, true, false]),
        ],
        ui_masks: [
            UiMask::from_bools(vec![true, true, false, true, true, true, true, false]),
            UiMask::from_bools(vec![true, false, true, true, true, true, false, true]),
        ],
        consistency: ConsistencyScores::uniform(4),
        probs: EdgeDropProbs::uniform(8, 1.0),
    };
    let prepared = PreparedViews::new(&graph, &pair);
    let vocab = VocabSizes {
        num_users: 4,
        num_entities: 7,
        num_relations: 2,
    };
    let store = init_params(vocab, 8, &mut rng_from_seed(seed)).unwrap();
    let batch = vec![(0, 0, 2), (1, 1, 3), (2, 2, 0), (3, 3, 1), (0, 1, 3)];
    Toy {
        graph,
        kg,
        prepared,
        batch,
        store,
    }
}

pub fn joint(t: &Toy, store: &ParamStore<f64>, cfg: &LossConfig) -> (f64, ParamStore<f64>) {
    let mut s = store.clone();
    s.zero_grads();
    let total = joint_loss(&mut s, &t.graph, &t.kg, &t.prepared, &t.batch, cfg).unwrap().total;
    (total, s)
}

pub fn check_joint(cfg: LossConfig, seed: u64) -> f64 {
    let t = toy(seed);
    let (_, analytic) = joint(&t, &t.store, &cfg);
    let coords = sample_coords(&analytic, 64, &mut rng_from_seed(seed + 100));
    finite_diff_check(&analytic, &coords, H, |s| joint(&t, s, &cfg).0).unwrap()
}

pub fn bpr_only() -> LossConfig {
    LossConfig {
        lambda1: 0.0,
        lambda2: 0.0,
        ..LossConfig::default()
    }
}


/// The contrastive term alone, as the difference between λ1 = 1 and λ1 = 0.
pub fn check_contrastive(seed: u64) -> f64 {
    let t = toy(seed);
    let with = LossConfig {
        lambda1: 1.0,
        lambda2: 0.0,
        ..LossConfig::default()
    };
    let (_, g_with) = joint(&t, &t.store, &with);
    let (_, g_without) = joint(&t, &t.store, &bpr_only());
    let mut diff = t.store.clone();
    for tensor in Tensor::ALL {
        let g = diff.grad_mut(tensor);
        g.fill(0.0);
        g.add_scaled(1.0, g_with.grad(tensor));
        g.add_scaled(-1.0, g_without.grad(tensor));
    }
    let coords = sample_coords(&diff, 64, &mut rng_from_seed(seed + 100));
    finite_diff_check(&diff, &coords, H, |s| joint(&t, s, &with).0 - joint(&t, s, &bpr_only()).0).unwrap()
}

pub fn check_transe(seed: u64) -> f64 {
    let t = toy(seed);
    let samples: Vec<TransESample> = t
        .kg
        .triples()
        .iter()
        .enumerate()
        .map(|(k, &triple)| TransESample {
            triple,
            negative_tail: (triple.tail + 1 + k) % 7,
        })
        .collect();
    let loss = |store: &ParamStore<f64>| {
        let mut s = store.clone();
        s.zero_grads();
        let v = transe_loss(&mut s, &samples).unwrap();
        (v, s)
    };
    let (_, analytic) = loss(&t.store);
    let coords = sample_coords(&analytic, 64, &mut rng_from_seed(seed + 100));
    finite_diff_check(&analytic, &coords, H, |s| loss(s).0).unwrap()
}
