//! Trees induced by relation paths, per-topic unions, cross-topic merging and
//! the personalized-PageRank baseline.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{EntityId, EntitySet, KnowledgeBase, RelationId, Triple};
use crate::retriever::ScoredPath;

/// Layered instantiation of a relation path from one root entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    pub root: EntityId,
    /// `layers[0] == {root}`, `layers[i + 1] == follow(layers[i], relations[i])`.
    pub layers: Vec<EntitySet>,
    pub relations: Vec<RelationId>,
    pub edges: BTreeSet<Triple>,
}

impl Tree {
    /// False when some layer came out empty.
    pub fn is_instantiable(&self) -> bool {
        self.layers.iter().all(|l| !l.is_empty())
    }

    pub fn leaves(&self) -> &EntitySet {
        self.layers.last().expect("tree has a root layer")
    }

    pub fn entities(&self) -> EntitySet {
        self.layers.iter().flat_map(|l| l.iter()).collect()
    }

    pub fn contains(&self, e: EntityId) -> bool {
        self.layers.iter().any(|l| l.contains(e))
    }

    pub fn to_subgraph(&self) -> Subgraph {
        Subgraph {
            entities: self.entities(),
            edges: self.edges.clone(),
            topic_roots: EntitySet::singleton(self.root),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Subgraph {
    pub entities: EntitySet,
    pub edges: BTreeSet<Triple>,
    pub topic_roots: EntitySet,
}

impl Subgraph {
    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Every edge endpoint and every root is an entity of the subgraph.
    pub fn is_consistent(&self) -> bool {
        self.topic_roots.is_subset(&self.entities)
            && self
                .edges
                .iter()
                .all(|t| self.entities.contains(t.head) && self.entities.contains(t.tail))
    }

    /// Entities and edges both contained in `other`.
    pub fn is_subgraph_of(&self, other: &Subgraph) -> bool {
        self.entities.is_subset(&other.entities) && self.edges.is_subset(&other.edges)
    }

    pub fn union(&self, other: &Subgraph) -> Subgraph {
        Subgraph {
            entities: self.entities.union(&other.entities),
            edges: self.edges.union(&other.edges).copied().collect(),
            topic_roots: self.topic_roots.union(&other.topic_roots),
        }
    }
}

pub fn induce_tree(kb: &KnowledgeBase, topic: EntityId, path: &[RelationId]) -> Result<Tree> {
    kb.check_entity(topic)?;
    let mut layers = vec![EntitySet::singleton(topic)];
    let mut edges = BTreeSet::new();
    for &r in path {
        kb.check_relation(r)?;
        let current = layers.last().expect("non-empty");
        let mut next = Vec::new();
        for e in current {
            for &t in kb.neighbors(e, r) {
                edges.insert(Triple::new(e, r, t));
                next.push(t);
            }
        }
        layers.push(next.into_iter().collect());
    }
    Ok(Tree {
        root: topic,
        layers,
        relations: path.to_vec(),
        edges,
    })
}

/// Union of trees grown from the same topic entity.
pub fn union_trees(trees: &[Tree]) -> Result<Subgraph> {
    let Some(first) = trees.first() else {
        return Err(Error::invalid("no trees to union"));
    };
    if trees.iter().any(|t| t.root != first.root) {
        return Err(Error::MixedRoots);
    }
    let mut entities = Vec::new();
    let mut edges = BTreeSet::new();
    for t in trees {
        for layer in &t.layers {
            entities.extend(layer.iter());
        }
        edges.extend(t.edges.iter().copied());
    }
    Ok(Subgraph {
        entities: entities.into_iter().collect(),
        edges,
        topic_roots: EntitySet::singleton(first.root),
    })
}

fn reach(
    seeds: impl IntoIterator<Item = EntityId>,
    adjacency: &HashMap<EntityId, Vec<EntityId>>,
) -> EntitySet {
    let mut seen: BTreeSet<EntityId> = BTreeSet::new();
    let mut queue: VecDeque<EntityId> = VecDeque::new();
    for s in seeds {
        if seen.insert(s) {
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        if let Some(next) = adjacency.get(&u) {
            for &v in next {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
    }
    seen.into_iter().collect()
}

/// Merges per-topic subgraphs through the entities they share.
///
/// Entities present in at least two subgraphs form the merge set `M`. In each
/// subgraph only the parts on a root→m trace or an m→leaf trace (m ∈ M) are
/// kept, and the kept parts are unioned. Without any shared entity the plain
/// union is returned.
pub fn merge_subgraphs(subgraphs: &[Subgraph]) -> Result<Subgraph> {
    match subgraphs {
        [] => return Err(Error::invalid("no subgraphs to merge")),
        [only] => return Ok(only.clone()),
        _ => {}
    }
    let mut seen_in: HashMap<EntityId, usize> = HashMap::new();
    for g in subgraphs {
        for e in g.entities.iter() {
            *seen_in.entry(e).or_default() += 1;
        }
    }
    let shared: EntitySet = seen_in
        .iter()
        .filter(|(_, n)| **n >= 2)
        .map(|(e, _)| *e)
        .collect();
    if shared.is_empty() {
        return Ok(subgraphs
            .iter()
            .skip(1)
            .fold(subgraphs[0].clone(), |acc, g| acc.union(g)));
    }

    let mut entities = Vec::new();
    let mut edges = BTreeSet::new();
    let mut roots = Vec::new();
    for g in subgraphs {
        let anchors: Vec<EntityId> = g.entities.intersection(&shared).iter().collect();
        if anchors.is_empty() {
            continue;
        }
        let mut forward: HashMap<EntityId, Vec<EntityId>> = HashMap::new();
        let mut backward: HashMap<EntityId, Vec<EntityId>> = HashMap::new();
        for t in &g.edges {
            forward.entry(t.head).or_default().push(t.tail);
            backward.entry(t.tail).or_default().push(t.head);
        }
        let descendants = reach(anchors.iter().copied(), &forward);
        let ancestors = reach(anchors.iter().copied(), &backward);
        for t in &g.edges {
            if ancestors.contains(t.tail) || descendants.contains(t.head) {
                edges.insert(*t);
            }
        }
        entities.extend(ancestors.iter());
        entities.extend(descendants.iter());
        roots.extend(g.topic_roots.iter().filter(|r| ancestors.contains(*r)));
    }
    Ok(Subgraph {
        entities: entities.into_iter().collect(),
        edges,
        topic_roots: roots.into_iter().collect(),
    })
}

/// Per-topic union of the trees of `paths`, then merged across topics.
/// Uninstantiable paths are skipped.
pub fn subgraph_from_paths(kb: &KnowledgeBase, paths: &[ScoredPath]) -> Result<Subgraph> {
    let mut by_topic: Vec<(EntityId, Vec<Tree>)> = Vec::new();
    for p in paths {
        let tree = induce_tree(kb, p.topic, &p.relations)?;
        if !tree.is_instantiable() {
            continue;
        }
        match by_topic.iter_mut().find(|(t, _)| *t == p.topic) {
            Some((_, trees)) => trees.push(tree),
            None => by_topic.push((p.topic, vec![tree])),
        }
    }
    if by_topic.is_empty() {
        return Err(Error::EmptySubgraph);
    }
    let per_topic = by_topic
        .iter()
        .map(|(_, trees)| union_trees(trees))
        .collect::<Result<Vec<_>>>()?;
    merge_subgraphs(&per_topic)
}

/// Personalized PageRank over the undirected entity graph, seeded uniformly
/// on `topics`. Mass at isolated entities returns to the seeds.
pub fn ppr_scores(
    kb: &KnowledgeBase,
    topics: &EntitySet,
    damping: f64,
    iterations: usize,
) -> Result<Vec<f64>> {
    if topics.is_empty() {
        return Err(Error::invalid("personalized PageRank needs at least one seed"));
    }
    if !(0.0..=1.0).contains(&damping) {
        return Err(Error::invalid(format!("damping {damping} outside [0, 1]")));
    }
    for t in topics {
        kb.check_entity(t)?;
    }
    let n = kb.entity_count();
    let neighbors: Vec<EntitySet> = kb.entities().map(|e| kb.undirected_neighbors(e)).collect();
    let seed_mass = 1.0 / topics.len() as f64;
    let mut seed = vec![0.0; n];
    for t in topics {
        seed[t.index()] = seed_mass;
    }
    let mut scores = seed.clone();
    let mut next = vec![0.0; n];
    for _ in 0..iterations {
        let mut dangling = 0.0;
        next.iter_mut().for_each(|x| *x = 0.0);
        for (u, nbrs) in neighbors.iter().enumerate() {
            if scores[u] == 0.0 {
                continue;
            }
            if nbrs.is_empty() {
                dangling += scores[u];
                continue;
            }
            let share = damping * scores[u] / nbrs.len() as f64;
            for v in nbrs {
                next[v.index()] += share;
            }
        }
        for (i, x) in next.iter_mut().enumerate() {
            *x += (1.0 - damping + damping * dangling) * seed[i];
        }
        std::mem::swap(&mut scores, &mut next);
    }
    Ok(scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PprConfig {
    pub max_entities: usize,
    pub damping: f64,
    pub iterations: usize,
}

impl Default for PprConfig {
    fn default() -> Self {
        PprConfig {
            max_entities: 50,
            damping: 0.85,
            iterations: 20,
        }
    }
}

/// Keeps the `max_entities` highest-scoring entities (topics always kept)
/// and every KB edge among them.
pub fn ppr_subgraph(kb: &KnowledgeBase, topics: &EntitySet, cfg: &PprConfig) -> Result<Subgraph> {
    if cfg.max_entities == 0 {
        return Err(Error::invalid("max_entities must be positive"));
    }
    let scores = ppr_scores(kb, topics, cfg.damping, cfg.iterations)?;
    let mut ranked: Vec<EntityId> = kb.entities().filter(|e| scores[e.index()] > 0.0).collect();
    ranked.sort_by(|a, b| {
        scores[b.index()]
            .total_cmp(&scores[a.index()])
            .then_with(|| a.cmp(b))
    });
    let mut kept: Vec<EntityId> = topics.iter().collect();
    kept.extend(
        ranked
            .into_iter()
            .filter(|e| !topics.contains(*e))
            .take(cfg.max_entities.saturating_sub(topics.len())),
    );
    let entities: EntitySet = kept.into_iter().collect();
    let edges = entities
        .iter()
        .flat_map(|h| kb.outgoing(h).flat_map(move |(r, ts)| ts.iter().map(move |t| Triple::new(h, r, *t))))
        .filter(|t| entities.contains(t.tail))
        .collect();
    Ok(Subgraph {
        entities,
        edges,
        topic_roots: topics.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgraphSidecar {
    pub topic_roots: Vec<String>,
    /// Entities without any edge, which the triple file cannot carry.
    #[serde(default)]
    pub isolated_entities: Vec<String>,
}

/// TSV triples (same format as KB input) plus a JSON sidecar naming roots.
pub fn write_subgraph(kb: &KnowledgeBase, g: &Subgraph) -> Result<(String, String)> {
    let mut tsv = String::new();
    let mut touched = BTreeSet::new();
    for t in &g.edges {
        tsv.push_str(kb.entity_name(t.head)?);
        tsv.push('\t');
        tsv.push_str(kb.relation_name(t.relation)?);
        tsv.push('\t');
        tsv.push_str(kb.entity_name(t.tail)?);
        tsv.push('\n');
        touched.insert(t.head);
        touched.insert(t.tail);
    }
    let names = |ids: Vec<EntityId>| -> Result<Vec<String>> {
        ids.into_iter()
            .map(|e| kb.entity_name(e).map(str::to_owned))
            .collect()
    };
    let sidecar = SubgraphSidecar {
        topic_roots: names(g.topic_roots.iter().collect())?,
        isolated_entities: names(g.entities.iter().filter(|e| !touched.contains(e)).collect())?,
    };
    Ok((tsv, serde_json::to_string(&sidecar)?))
}

pub fn read_subgraph(kb: &KnowledgeBase, tsv: &str, sidecar: &str) -> Result<Subgraph> {
    let resolve = |name: &str| {
        kb.entity_id(name)
            .ok_or_else(|| Error::UnknownEntityName(name.to_owned()))
    };
    let mut edges = BTreeSet::new();
    let mut entities = Vec::new();
    for (i, line) in tsv.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 3 tab-separated fields, found {}", f.len()),
            });
        }
        let h = resolve(f[0])?;
        let r = kb
            .relation_id(f[1])
            .ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("unknown relation `{}`", f[1]),
            })?;
        let t = resolve(f[2])?;
        edges.insert(Triple::new(h, r, t));
        entities.push(h);
        entities.push(t);
    }
    let side: SubgraphSidecar = serde_json::from_str(sidecar)?;
    let roots = side
        .topic_roots
        .iter()
        .map(|n| resolve(n))
        .collect::<Result<Vec<_>>>()?;
    for n in &side.isolated_entities {
        entities.push(resolve(n)?);
    }
    entities.extend(roots.iter().copied());
    Ok(Subgraph {
        entities: entities.into_iter().collect(),
        edges,
        topic_roots: roots.into_iter().collect(),
    })
}
