use std::path::Path;

use rand::seq::SliceRandom;

use super::{read_interaction_rows, InteractionGraph, KnowledgeGraph};
use crate::numeric::Rng;
use crate::{Error, Result};

/// Group assignment used for grouped evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Grouping {
    /// One label per user; metrics are reported per user group.
    Users { labels: Vec<usize>, names: Vec<String> },
    /// One label per item; each group is evaluated on the test items it
    /// contains, ranked against the full catalogue.
    Items { labels: Vec<usize>, names: Vec<String> },
}

impl Grouping {
    pub fn names(&self) -> &[String] {
        match self {
            Grouping::Users { names, .. } | Grouping::Items { names, .. } => names,
        }
    }
}

/// Training graph plus held-out test items per user.
#[derive(Clone, Debug, PartialEq)]
pub struct DataSplit {
    pub train: InteractionGraph,
    /// Held-out items per user, ascending; empty for users without test data.
    pub test: Vec<Vec<usize>>,
    pub grouping: Option<Grouping>,
}

impl DataSplit {
    /// Validates disjointness and that every test user has training data.
    pub fn new(train: InteractionGraph, mut test: Vec<Vec<usize>>) -> Result<Self> {
        if test.len() > train.num_users() {
            return Err(Error::invalid(format!(
                "test set has {} users, training graph only {}",
                test.len(),
                train.num_users()
            )));
        }
        test.resize(train.num_users(), Vec::new());
        for (u, items) in test.iter_mut().enumerate() {
            items.sort_unstable();
            items.dedup();
            if items.is_empty() {
                continue;
            }
            if train.user_degree(u) == 0 {
                return Err(Error::invalid(format!("test user {u} has no training interactions")));
            }
            if let Some(&i) = items.iter().find(|&&i| i >= train.num_items() || train.has_edge(u, i)) {
                return Err(Error::invalid(format!(
                    "test pair ({u}, {i}) is out of range or also in the training set"
                )));
            }
        }
        Ok(DataSplit {
            train,
            test,
            grouping: None,
        })
    }

    /// Loads train and test files sharing one id space.
    pub fn load(train: impl AsRef<Path>, test: impl AsRef<Path>) -> Result<Self> {
        let train_rows = read_interaction_rows(train)?;
        let test_rows = read_interaction_rows(test)?;
        let all = train_rows.iter().chain(&test_rows);
        let num_users = all.clone().map(|r| r.0 + 1).max().unwrap_or(0);
        let num_items = all.flat_map(|r| r.1.iter().map(|&i| i + 1)).max().unwrap_or(0);
        let edges = train_rows
            .into_iter()
            .flat_map(|(u, items)| items.into_iter().map(move |i| (u, i)))
            .collect();
        let (graph, dups) = InteractionGraph::from_edges(num_users, num_items, edges)?;
        if dups > 0 {
            log::warn!("dropped {dups} duplicate training interactions");
        }
        let mut test = vec![Vec::new(); num_users];
        for (u, items) in test_rows {
            test[u].extend(items);
        }
        Self::new(graph, test)
    }

    /// Per-user random holdout: each user with at least two interactions
    /// moves `round(fraction * degree)` of them (at least one, never all) to
    /// the test set.
    pub fn holdout(graph: &InteractionGraph, fraction: f64, rng: &mut Rng) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::invalid(format!("test fraction must lie in (0, 1), got {fraction}")));
        }
        let mut train_edges = Vec::with_capacity(graph.num_edges());
        let mut test = vec![Vec::new(); graph.num_users()];
        for u in 0..graph.num_users() {
            let mut items: Vec<usize> = graph.user_items(u).collect();
            let n = items.len();
            let held = if n >= 2 {
                ((fraction * n as f64).round() as usize).clamp(1, n - 1)
            } else {
                0
            };
            items.shuffle(rng);
            test[u] = items[..held].to_vec();
            train_edges.extend(items[held..].iter().map(|&i| (u, i)));
        }
        let (train, _) = InteractionGraph::from_edges(graph.num_users(), graph.num_items(), train_edges)?;
        Self::new(train, test)
    }

    pub fn num_test_users(&self) -> usize {
        self.test.iter().filter(|t| !t.is_empty()).count()
    }
}

pub const SPARSE: usize = 0;
pub const DENSE: usize = 1;

/// Labels users with train degree below `threshold` as `sparse`, the rest
/// `dense`.
pub fn split_sparse_users(split: &DataSplit, threshold: usize) -> Result<DataSplit> {
    if threshold == 0 {
        return Err(Error::invalid("sparsity threshold must be at least 1"));
    }
    let labels = (0..split.train.num_users())
        .map(|u| if split.train.user_degree(u) < threshold { SPARSE } else { DENSE })
        .collect();
    Ok(DataSplit {
        grouping: Some(Grouping::Users {
            labels,
            names: vec!["sparse".into(), "dense".into()],
        }),
        ..split.clone()
    })
}

/// Sorts items by train degree (ties by id) and cuts them into
/// `num_groups` equal contiguous groups; the last group takes the
/// remainder. Group 0 holds the least interacted items.
pub fn split_longtail_items(split: &DataSplit, num_groups: usize) -> Result<DataSplit> {
    let n = split.train.num_items();
    if num_groups < 2 {
        return Err(Error::invalid("need at least 2 item groups"));
    }
    if num_groups > n {
        return Err(Error::invalid(format!("{num_groups} groups requested for {n} items")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (split.train.item_degree(i), i));
    let size = n / num_groups;
    let mut labels = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = (rank / size).min(num_groups - 1);
    }
    Ok(DataSplit {
        grouping: Some(Grouping::Items {
            labels,
            names: (0..num_groups).map(|g| format!("group{g}")).collect(),
        }),
        ..split.clone()
    })
}

/// Marks the `ceil(tail_fraction * n)` least frequent non-item entities as
/// long-tail and keeps only test items linked to at least one of them.
pub fn longtail_entity_filter(kg: &KnowledgeGraph, split: &DataSplit, tail_fraction: f64) -> Result<DataSplit> {
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::invalid(format!("tail fraction must lie in (0, 1), got {tail_fraction}")));
    }
    let freq = kg.entity_frequencies();
    let mut entities: Vec<usize> = (kg.num_items()..kg.num_entities())
        .filter(|&e| freq[e] > 0)
        .collect();
    entities.sort_by_key(|&e| (freq[e], e));
    let count = (tail_fraction * entities.len() as f64).ceil() as usize;
    let mut longtail = vec![false; kg.num_entities()];
    for &e in &entities[..count] {
        longtail[e] = true;
    }
    let linked: Vec<bool> = (0..kg.num_items())
        .map(|i| kg.item_neighbors(i).iter().any(|&(e, _, _)| longtail[e]))
        .collect();
    let test: Vec<Vec<usize>> = split
        .test
        .iter()
        .map(|items| {
            items
                .iter()
                .copied()
                .filter(|&i| linked.get(i).copied().unwrap_or(false))
                .collect()
        })
        .collect();
    if test.iter().all(Vec::is_empty) {
        return Err(Error::invalid(format!(
            "no test item is linked to the {count} long-tail entities; use a larger tail fraction"
        )));
    }
    Ok(DataSplit {
        test,
        ..split.clone()
    })
}
