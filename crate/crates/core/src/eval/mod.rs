//! All-ranking evaluation and the experiment drivers built on it.
//!
//! Every non-training item is a candidate for every test user. Relevance is
//! binary and the NDCG discount is `1 / log2(rank + 1)` with 1-based ranks.

mod experiments;

pub use experiments::{
    mean_and_std, pooled_standard_error, report_rows, run_ablation, run_noise_study, write_noise_csv, write_reports_csv,
    NoiseSeedResult, NoiseStudy, ReportRow, SeedRun,
};

use std::cmp::Ordering;

use crate::cf_encoder::Scorer;
use crate::data::{DataSplit, Grouping};
use crate::{Error, Result};

/// Default ranking cutoff.
pub const DEFAULT_N: usize = 20;

fn check_relevant(relevant: &[usize]) -> Result<()> {
    if relevant.is_empty() {
        return Err(Error::invalid("relevant set is empty"));
    }
    Ok(())
}

/// 1-based ranks of the relevant items among the first `n`.
fn hits(ranked: &[usize], relevant: &[usize], n: usize) -> Vec<usize> {
    ranked
        .iter()
        .take(n)
        .enumerate()
        .filter(|(_, i)| relevant.contains(i))
        .map(|(k, _)| k + 1)
        .collect()
}

/// Fraction of `relevant` found in the first `n` ranked items.
pub fn recall_at(ranked: &[usize], relevant: &[usize], n: usize) -> Result<f64> {
    check_relevant(relevant)?;
    Ok(hits(ranked, relevant, n).len() as f64 / relevant.len() as f64)
}

/// Normalised discounted cumulative gain at `n`.
pub fn ndcg_at(ranked: &[usize], relevant: &[usize], n: usize) -> Result<f64> {
    check_relevant(relevant)?;
    let discount = |k: usize| 1.0 / ((k + 1) as f64).log2();
    let dcg: f64 = hits(ranked, relevant, n).into_iter().map(discount).sum();
    let idcg: f64 = (1..=relevant.len().min(n)).map(discount).sum();
    Ok(if idcg > 0.0 { dcg / idcg } else { 0.0 })
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GroupMetrics {
    pub name: String,
    pub recall: f64,
    pub ndcg: f64,
    pub user_count: usize,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RankingMetrics {
    pub n: usize,
    pub recall_at_n: f64,
    pub ndcg_at_n: f64,
    pub user_count: usize,
    /// Present when the split carries a grouping.
    pub per_group: Option<Vec<GroupMetrics>>,
}

fn ordering(scores: &[f64], a: usize, b: usize) -> Ordering {
    scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
}

/// The first `n` items of the full ranking with `exclude` removed.
pub(crate) fn top_n(scores: &[f64], exclude: &[usize], n: usize) -> Vec<usize> {
    let mut excluded = vec![false; scores.len()];
    for &i in exclude {
        excluded[i] = true;
    }
    let mut cand: Vec<usize> = (0..scores.len()).filter(|&i| !excluded[i]).collect();
    if n == 0 {
        return Vec::new();
    }
    if cand.len() > n {
        cand.select_nth_unstable_by(n - 1, |&a, &b| ordering(scores, a, b));
        cand.truncate(n);
    }
    cand.sort_by(|&a, &b| ordering(scores, a, b));
    cand
}

#[derive(Default)]
struct Acc {
    recall: f64,
    ndcg: f64,
    users: usize,
}

impl Acc {
    fn add(&mut self, ranked: &[usize], relevant: &[usize], n: usize) -> Result<()> {
        self.recall += recall_at(ranked, relevant, n)?;
        self.ndcg += ndcg_at(ranked, relevant, n)?;
        self.users += 1;
        Ok(())
    }

    fn mean(&self) -> (f64, f64) {
        let c = self.users.max(1) as f64;
        (self.recall / c, self.ndcg / c)
    }
}

/// Recall@n and NDCG@n averaged over test users, ranking every item the
/// user has not trained on.
///
/// With a user grouping, `group_filter` keeps only users of that group.
/// With an item grouping, each group is scored on the test items it
/// contains and `group_filter` restricts the aggregate to that group's items.
/// Users whose (filtered) test set is empty are skipped.
pub fn evaluate<S: Scorer + ?Sized>(
    scorer: &S,
    split: &DataSplit,
    n: usize,
    group_filter: Option<usize>,
) -> Result<RankingMetrics> {
    if n == 0 {
        return Err(Error::invalid("cutoff must be positive"));
    }
    if scorer.num_users() != split.train.num_users() || scorer.num_items() != split.train.num_items() {
        return Err(Error::invalid("model and split disagree on the number of users or items"));
    }
    let names = split.grouping.as_ref().map(|g| g.names().to_vec());
    if let (Some(g), None) = (group_filter, &names) {
        return Err(Error::invalid(format!("group filter {g} given but the split has no grouping")));
    }
    if let (Some(g), Some(names)) = (group_filter, &names) {
        if g >= names.len() {
            return Err(Error::invalid(format!("group {g} out of range ({} groups)", names.len())));
        }
    }
    let num_groups = names.as_ref().map_or(0, Vec::len);
    let mut total = Acc::default();
    let mut groups: Vec<Acc> = (0..num_groups).map(|_| Acc::default()).collect();
    let mut scores = vec![0.0; scorer.num_items()];

    for (u, test) in split.test.iter().enumerate() {
        if test.is_empty() {
            continue;
        }
        if let (Some(Grouping::Users { labels, .. }), Some(g)) = (&split.grouping, group_filter) {
            if labels[u] != g {
                continue;
            }
        }
        let exclude: Vec<usize> = split.train.user_items(u).collect();
        scorer.score_items(u, &mut scores);
        let ranked = top_n(&scores, &exclude, n);
        match &split.grouping {
            Some(Grouping::Items { labels, .. }) => {
                for (g, acc) in groups.iter_mut().enumerate() {
                    let rel: Vec<usize> = test.iter().copied().filter(|&i| labels[i] == g).collect();
                    if !rel.is_empty() {
                        acc.add(&ranked, &rel, n)?;
                    }
                }
                let rel: Vec<usize> = match group_filter {
                    Some(g) => test.iter().copied().filter(|&i| labels[i] == g).collect(),
                    None => test.clone(),
                };
                if !rel.is_empty() {
                    total.add(&ranked, &rel, n)?;
                }
            }
            Some(Grouping::Users { labels, .. }) => {
                groups[labels[u]].add(&ranked, test, n)?;
                total.add(&ranked, test, n)?;
            }
            None => total.add(&ranked, test, n)?,
        }
    }
    if total.users == 0 {
        return Err(Error::invalid("no test users to evaluate"));
    }
    let (recall_at_n, ndcg_at_n) = total.mean();
    let per_group = names.map(|names| {
        names
            .into_iter()
            .zip(&groups)
            .enumerate()
            .filter(|(g, _)| group_filter.is_none_or(|f| f == *g))
            .map(|(_, (name, acc))| {
                let (recall, ndcg) = acc.mean();
                GroupMetrics {
                    name,
                    recall,
                    ndcg,
                    user_count: acc.users,
                }
            })
            .collect()
    });
    Ok(RankingMetrics {
        n,
        recall_at_n,
        ndcg_at_n,
        user_count: total.users,
        per_group,
    })
}
