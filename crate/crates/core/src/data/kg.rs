use std::collections::HashSet;

use rand::Rng as _;

use crate::numeric::Rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl Triple {
    pub fn new(head: usize, relation: usize, tail: usize) -> Self {
        Triple { head, relation, tail }
    }
}

/// Typed triples over an entity vocabulary whose first `num_items` ids are
/// the items.
///
/// Triples keep their first-seen order (duplicates dropped), so a triple's
/// index is stable under [`inject_kg_noise`], which only appends.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnowledgeGraph {
    num_items: usize,
    num_entities: usize,
    num_relations: usize,
    triples: Vec<Triple>,
    item_ptr: Vec<usize>,
    // (entity, relation, triple index)
    item_nbrs: Vec<(usize, usize, usize)>,
}

impl KnowledgeGraph {
    /// Builds a KG. `num_entities`/`num_relations` are raised to cover every
    /// id that appears; `num_entities` is at least `num_items`.
    pub fn new(
        num_items: usize,
        num_entities: usize,
        num_relations: usize,
        triples: impl IntoIterator<Item = Triple>,
    ) -> (Self, usize) {
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        let mut dups = 0;
        let mut num_entities = num_entities.max(num_items);
        let mut num_relations = num_relations;
        for t in triples {
            if seen.insert(t) {
                num_entities = num_entities.max(t.head + 1).max(t.tail + 1);
                num_relations = num_relations.max(t.relation + 1);
                kept.push(t);
            } else {
                dups += 1;
            }
        }
        (Self::build(num_items, num_entities, num_relations, kept), dups)
    }

    fn build(num_items: usize, num_entities: usize, num_relations: usize, triples: Vec<Triple>) -> Self {
        let mut item_ptr = vec![0usize; num_items + 1];
        for t in &triples {
            if t.head < num_items {
                item_ptr[t.head + 1] += 1;
            }
        }
        for k in 0..num_items {
            item_ptr[k + 1] += item_ptr[k];
        }
        let mut fill = item_ptr.clone();
        let mut item_nbrs = vec![(0, 0, 0); item_ptr[num_items]];
        for (idx, t) in triples.iter().enumerate() {
            if t.head < num_items {
                item_nbrs[fill[t.head]] = (t.tail, t.relation, idx);
                fill[t.head] += 1;
            }
        }
        KnowledgeGraph {
            num_items,
            num_entities,
            num_relations,
            triples,
            item_ptr,
            item_nbrs,
        }
    }

    /// A KG with no triples: every item aggregates to its bare embedding.
    pub fn empty(num_items: usize) -> Self {
        Self::build(num_items, num_items, 1, Vec::new())
    }

    #[inline]
    pub fn num_items(&self) -> usize {
        self.num_items
    }

    #[inline]
    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    /// At least 1 so that a relation table can always be allocated.
    #[inline]
    pub fn num_relations(&self) -> usize {
        self.num_relations.max(1)
    }

    #[inline]
    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// `(entity, relation, triple index)` for every triple headed by item `i`.
    #[inline]
    pub fn item_neighbors(&self, i: usize) -> &[(usize, usize, usize)] {
        &self.item_nbrs[self.item_ptr[i]..self.item_ptr[i + 1]]
    }

    /// Number of triples each entity takes part in, as head or tail.
    pub fn entity_frequencies(&self) -> Vec<usize> {
        let mut freq = vec![0; self.num_entities];
        for t in &self.triples {
            freq[t.head] += 1;
            if t.tail != t.head {
                freq[t.tail] += 1;
            }
        }
        freq
    }

    /// Same vocabulary, different triples.
    pub fn with_triples(&self, triples: Vec<Triple>) -> Self {
        Self::build(self.num_items, self.num_entities, self.num_relations, triples)
    }
}

/// Appends `ceil(fraction * |triples|)` uniformly random, previously absent
/// `(item, relation, entity)` triples. The input is left untouched.
///
/// Returns the new KG; triples at indices `>= kg.len()` are the injected
/// ones.
pub fn inject_kg_noise(kg: &KnowledgeGraph, fraction: f64, rng: &mut Rng) -> Result<KnowledgeGraph> {
    if !(fraction >= 0.0) || !fraction.is_finite() {
        return Err(Error::invalid(format!("noise fraction must be >= 0, got {fraction}")));
    }
    if kg.is_empty() {
        return Err(Error::invalid("cannot inject noise into an empty knowledge graph"));
    }
    let wanted = (fraction * kg.len() as f64).ceil() as usize;
    let space = kg.num_items() as u128 * kg.num_relations() as u128 * kg.num_entities() as u128;
    let taken = kg.triples().iter().filter(|t| t.head < kg.num_items()).count() as u128;
    if wanted as u128 > space - taken {
        return Err(Error::Infeasible(format!(
            "cannot add {wanted} distinct triples: only {} unused (item, relation, entity) combinations remain",
            space - taken
        )));
    }
    let mut seen: HashSet<Triple> = kg.triples().iter().copied().collect();
    let mut triples = kg.triples().to_vec();
    while triples.len() < kg.len() + wanted {
        let t = Triple::new(
            rng.random_range(0..kg.num_items()),
            rng.random_range(0..kg.num_relations()),
            rng.random_range(0..kg.num_entities()),
        );
        if seen.insert(t) {
            triples.push(t);
        }
    }
    Ok(kg.with_triples(triples))
}
