//! A small differentiable reasoner over retrieved subgraphs.
//!
//! Probability mass starts uniformly on the topic roots. At every step each
//! entity splits its mass over its outgoing relations by a softmax of
//! question/relation affinities, then evenly over the tails of each relation.
//! Entities without outgoing edges keep their mass. The answer distribution
//! mixes the per-step distributions with question-conditioned hop weights.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{dot, RelationScorer};
use crate::error::{Error, Result};
use crate::kb::{EntityId, EntitySet, KnowledgeBase, RelationId};
use crate::optim::Parameters;
use crate::subgraph::{induce_tree, Subgraph};

pub const DEFAULT_KEY_DIM: usize = 32;
pub const DEFAULT_STEP_COUNT: usize = 3;
const INIT_SCALE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasonerConfig {
    pub key_dim: usize,
    pub step_count: usize,
}

impl Default for ReasonerConfig {
    fn default() -> Self {
        ReasonerConfig {
            key_dim: DEFAULT_KEY_DIM,
            step_count: DEFAULT_STEP_COUNT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasonerParams {
    relation_count: usize,
    question_dim: usize,
    key_dim: usize,
    step_count: usize,
    /// `relation_count x key_dim`, row-major.
    relation_keys: Vec<f64>,
    /// `question_dim x key_dim`, row-major.
    question_projection: Vec<f64>,
    /// `step_count x key_dim`: one key per propagation step for hop weighting.
    hop_keys: Vec<f64>,
    /// Affinity temperature.
    scale: f64,
}

impl ReasonerParams {
    pub fn init(relation_count: usize, question_dim: usize, cfg: ReasonerConfig, seed: u64) -> Result<Self> {
        if cfg.step_count == 0 || cfg.key_dim == 0 {
            return Err(Error::invalid("reasoner step count and key width must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-0.1..=0.1)).collect() };
        Ok(ReasonerParams {
            relation_count,
            question_dim,
            key_dim: cfg.key_dim,
            step_count: cfg.step_count,
            relation_keys: draw(relation_count * cfg.key_dim),
            question_projection: draw(question_dim * cfg.key_dim),
            hop_keys: draw(cfg.step_count * cfg.key_dim),
            scale: INIT_SCALE,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let expect = [
            (self.relation_keys.len(), self.relation_count * self.key_dim),
            (self.question_projection.len(), self.question_dim * self.key_dim),
            (self.hop_keys.len(), self.step_count * self.key_dim),
        ];
        for (left, right) in expect {
            if left != right {
                return Err(Error::WidthMismatch { left, right });
            }
        }
        if self.step_count == 0 {
            return Err(Error::invalid("reasoner step count must be positive"));
        }
        if !self.is_finite() {
            return Err(Error::NonFinite("reasoner parameters"));
        }
        Ok(())
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn relation_count(&self) -> usize {
        self.relation_count
    }

    pub fn question_dim(&self) -> usize {
        self.question_dim
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.scale_by(0.0);
        z
    }

    fn key(&self, r: RelationId) -> &[f64] {
        let k = self.key_dim;
        &self.relation_keys[r.index() * k..(r.index() + 1) * k]
    }

    fn project(&self, q: &[f64]) -> Vec<f64> {
        let k = self.key_dim;
        let mut u = vec![0.0; k];
        for (i, qi) in q.iter().enumerate() {
            let row = &self.question_projection[i * k..(i + 1) * k];
            for (a, w) in u.iter_mut().zip(row) {
                *a += qi * w;
            }
        }
        u
    }
}

impl Parameters for ReasonerParams {
    fn blocks(&self) -> Vec<&[f64]> {
        vec![
            &self.relation_keys,
            &self.question_projection,
            &self.hop_keys,
            std::slice::from_ref(&self.scale),
        ]
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            &mut self.relation_keys,
            &mut self.question_projection,
            &mut self.hop_keys,
            std::slice::from_mut(&mut self.scale),
        ]
    }
}

/// Distribution over the entities of one subgraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerDistribution {
    pub entity_ids: Vec<EntityId>,
    pub probs: Vec<f64>,
}

impl AnswerDistribution {
    pub fn prob(&self, e: EntityId) -> f64 {
        self.entity_ids
            .binary_search(&e)
            .map_or(0.0, |i| self.probs[i])
    }

    pub fn mass(&self, answers: &EntitySet) -> f64 {
        answers.iter().map(|a| self.prob(a)).sum()
    }

    /// Highest-probability entity; ties go to the lowest id.
    pub fn argmax(&self) -> Option<EntityId> {
        let mut best: Option<(EntityId, f64)> = None;
        for (&e, &p) in self.entity_ids.iter().zip(&self.probs) {
            if best.map_or(true, |(_, bp)| p > bp) {
                best = Some((e, p));
            }
        }
        best.map(|(e, _)| e)
    }

    /// The `k` most probable entities, ties by id.
    pub fn top(&self, k: usize) -> Vec<(EntityId, f64)> {
        let mut v: Vec<(EntityId, f64)> = self.entity_ids.iter().copied().zip(self.probs.iter().copied()).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v.truncate(k);
        v
    }
}

/// Local view of a subgraph: out-relations of every entity with tail indices.
struct Graph {
    entities: Vec<EntityId>,
    /// Per entity: (relation, local tails).
    out: Vec<Vec<(RelationId, Vec<usize>)>>,
    roots: Vec<usize>,
}

impl Graph {
    fn new(g: &Subgraph, relation_count: usize) -> Result<Self> {
        if g.entities.is_empty() {
            return Err(Error::EmptySubgraph);
        }
        let entities = g.entities.as_slice().to_vec();
        let local = |e: EntityId| {
            entities
                .binary_search(&e)
                .map_err(|_| Error::invalid(format!("edge endpoint {e} outside the subgraph")))
        };
        let mut grouped: Vec<BTreeMap<RelationId, Vec<usize>>> = vec![BTreeMap::new(); entities.len()];
        for t in &g.edges {
            if t.relation.index() >= relation_count {
                return Err(Error::UnknownRelation(t.relation.0));
            }
            grouped[local(t.head)?]
                .entry(t.relation)
                .or_default()
                .push(local(t.tail)?);
        }
        let roots: Vec<usize> = g
            .topic_roots
            .iter()
            .filter_map(|r| entities.binary_search(&r).ok())
            .collect();
        if roots.is_empty() {
            return Err(Error::NoRootInSubgraph);
        }
        Ok(Graph {
            entities,
            out: grouped.into_iter().map(|m| m.into_iter().collect()).collect(),
            roots,
        })
    }
}

fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Forward pass with everything the backward pass needs.
struct Forward {
    u: Vec<f64>,
    /// Per entity: softmax over its out-relations.
    split: Vec<Vec<f64>>,
    /// `masses[t]` for t = 0..=step_count.
    masses: Vec<Vec<f64>>,
    hop: Vec<f64>,
    probs: Vec<f64>,
}

fn forward(params: &ReasonerParams, q: &[f64], graph: &Graph) -> Result<Forward> {
    if q.len() != params.question_dim {
        return Err(Error::WidthMismatch {
            left: q.len(),
            right: params.question_dim,
        });
    }
    let u = params.project(q);
    let mut affinity = vec![0.0; params.relation_count];
    for rels in &graph.out {
        for (r, _) in rels {
            affinity[r.index()] = params.scale * dot(&u, params.key(*r));
        }
    }
    let split: Vec<Vec<f64>> = graph
        .out
        .iter()
        .map(|rels| softmax(&rels.iter().map(|(r, _)| affinity[r.index()]).collect::<Vec<_>>()))
        .collect();

    let n = graph.entities.len();
    let mut m0 = vec![0.0; n];
    for &r in &graph.roots {
        m0[r] = 1.0 / graph.roots.len() as f64;
    }
    let mut masses = vec![m0];
    for _ in 0..params.step_count {
        let prev = masses.last().expect("seeded");
        let mut next = vec![0.0; n];
        for (i, &m) in prev.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let rels = &graph.out[i];
            if rels.is_empty() {
                next[i] += m;
                continue;
            }
            for ((_, tails), pi) in rels.iter().zip(&split[i]) {
                let share = m * pi / tails.len() as f64;
                for &v in tails {
                    next[v] += share;
                }
            }
        }
        masses.push(next);
    }

    let k = params.key_dim;
    let hop_logits: Vec<f64> = (0..params.step_count)
        .map(|t| dot(&u, &params.hop_keys[t * k..(t + 1) * k]))
        .collect();
    let hop = softmax(&hop_logits);
    let mut probs = vec![0.0; n];
    for (t, a) in hop.iter().enumerate() {
        for (p, m) in probs.iter_mut().zip(&masses[t + 1]) {
            *p += a * m;
        }
    }
    let total: f64 = probs.iter().sum();
    if !(total > 1e-300) || !total.is_finite() {
        log::warn!("reasoner mass vanished; falling back to the topic roots");
        probs = masses[0].clone();
    } else {
        probs.iter_mut().for_each(|p| *p /= total);
    }
    Ok(Forward {
        u,
        split,
        masses,
        hop,
        probs,
    })
}

/// Answer distribution of `question_text` over the entities of `g`.
pub fn answer_distribution<S: RelationScorer>(
    rparams: &ReasonerParams,
    sparams: &S,
    kb: &KnowledgeBase,
    question_text: &str,
    g: &Subgraph,
) -> Result<AnswerDistribution> {
    let q = sparams.encode_question(kb, question_text, &[]);
    distribution_from_embedding(rparams, &q, g)
}

pub fn distribution_from_embedding(rparams: &ReasonerParams, q: &[f64], g: &Subgraph) -> Result<AnswerDistribution> {
    let graph = Graph::new(g, rparams.relation_count)?;
    let f = forward(rparams, q, &graph)?;
    Ok(AnswerDistribution {
        entity_ids: graph.entities,
        probs: f.probs,
    })
}

/// `-log` of the mass on `answers`, with its gradient added to `grad`.
/// `None` when no answer lies in `g`.
pub fn answer_loss(
    rparams: &ReasonerParams,
    q: &[f64],
    g: &Subgraph,
    answers: &EntitySet,
    grad: Option<&mut ReasonerParams>,
) -> Result<Option<f64>> {
    let graph = Graph::new(g, rparams.relation_count)?;
    let targets: Vec<usize> = answers
        .iter()
        .filter_map(|a| graph.entities.binary_search(&a).ok())
        .collect();
    if targets.is_empty() {
        return Ok(None);
    }
    let f = forward(rparams, q, &graph)?;
    let mass: f64 = targets.iter().map(|&i| f.probs[i]).sum();
    if !(mass > 0.0) {
        // unreachable within step_count; no useful gradient
        return Ok(Some(f64::INFINITY));
    }
    let loss = -mass.ln();
    if let Some(grad) = grad {
        backward(rparams, q, &graph, &f, &targets, mass, grad);
    }
    Ok(Some(loss))
}

fn backward(
    p: &ReasonerParams,
    q: &[f64],
    graph: &Graph,
    f: &Forward,
    targets: &[usize],
    mass: f64,
    grad: &mut ReasonerParams,
) {
    let n = graph.entities.len();
    let steps = p.step_count;
    let k = p.key_dim;
    // The forward normalization divides by a total that is analytically one,
    // so it contributes nothing to the gradient.
    let mut g_probs = vec![0.0; n];
    for &i in targets {
        g_probs[i] = -1.0 / mass;
    }

    let g_hop: Vec<f64> = (0..steps)
        .map(|t| dot(&g_probs, &f.masses[t + 1]))
        .collect();
    let mean: f64 = f.hop.iter().zip(&g_hop).map(|(a, g)| a * g).sum();
    let g_hop_logits: Vec<f64> = f.hop.iter().zip(&g_hop).map(|(a, g)| a * (g - mean)).collect();

    let mut g_u = vec![0.0; k];
    for (t, gl) in g_hop_logits.iter().enumerate() {
        let key = &p.hop_keys[t * k..(t + 1) * k];
        let gk = &mut grad.hop_keys[t * k..(t + 1) * k];
        for j in 0..k {
            g_u[j] += gl * key[j];
            gk[j] += gl * f.u[j];
        }
    }

    let mut g_aff = vec![0.0; p.relation_count];
    let mut g_mass: Vec<f64> = g_probs.iter().map(|g| f.hop[steps - 1] * g).collect();
    for t in (1..=steps).rev() {
        let prev = &f.masses[t - 1];
        let mut g_prev = vec![0.0; n];
        for i in 0..n {
            let rels = &graph.out[i];
            if rels.is_empty() {
                g_prev[i] += g_mass[i];
                continue;
            }
            let c: Vec<f64> = rels
                .iter()
                .map(|(_, tails)| tails.iter().map(|&v| g_mass[v]).sum::<f64>() / tails.len() as f64)
                .collect();
            let pi = &f.split[i];
            let c_bar: f64 = pi.iter().zip(&c).map(|(a, b)| a * b).sum();
            g_prev[i] += c_bar;
            if prev[i] != 0.0 {
                for (((r, _), pr), cr) in rels.iter().zip(pi).zip(&c) {
                    g_aff[r.index()] += prev[i] * pr * (cr - c_bar);
                }
            }
        }
        if t >= 2 {
            for (g, d) in g_prev.iter_mut().zip(&g_probs) {
                *g += f.hop[t - 2] * d;
            }
        }
        g_mass = g_prev;
    }

    for (r, ga) in g_aff.iter().enumerate() {
        if *ga == 0.0 {
            continue;
        }
        let key = &p.relation_keys[r * k..(r + 1) * k];
        grad.scale += ga * dot(&f.u, key);
        let gk = &mut grad.relation_keys[r * k..(r + 1) * k];
        for j in 0..k {
            gk[j] += ga * p.scale * f.u[j];
            g_u[j] += ga * p.scale * key[j];
        }
    }

    for (i, qi) in q.iter().enumerate() {
        let row = &mut grad.question_projection[i * k..(i + 1) * k];
        for (g, gu) in row.iter_mut().zip(&g_u) {
            *g += qi * gu;
        }
    }
}

/// Mass the reasoner puts on `answer` within the tree induced by `path`.
pub fn tree_likelihood<S: RelationScorer>(
    rparams: &ReasonerParams,
    sparams: &S,
    kb: &KnowledgeBase,
    question_text: &str,
    topic: EntityId,
    path: &[RelationId],
    answer: EntityId,
) -> Result<f64> {
    tree_answer_mass(rparams, sparams, kb, question_text, topic, path, &EntitySet::singleton(answer))
}

/// Summed tree mass over `answers`, clamped to `[0, 1]`.
pub fn tree_answer_mass<S: RelationScorer>(
    rparams: &ReasonerParams,
    sparams: &S,
    kb: &KnowledgeBase,
    question_text: &str,
    topic: EntityId,
    path: &[RelationId],
    answers: &EntitySet,
) -> Result<f64> {
    let tree = induce_tree(kb, topic, path)?;
    if !tree.is_instantiable() || !tree.entities().intersects(answers) {
        return Ok(0.0);
    }
    let dist = answer_distribution(rparams, sparams, kb, question_text, &tree.to_subgraph())?;
    Ok(dist.mass(answers).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::Triple;
    use proptest::prelude::*;
    use rand::Rng;

    fn params(relations: usize, dim: usize, steps: usize, seed: u64) -> ReasonerParams {
        ReasonerParams::init(
            relations,
            dim,
            ReasonerConfig {
                key_dim: 4,
                step_count: steps,
            },
            seed,
        )
        .unwrap()
    }

    fn ent(i: u32) -> EntityId {
        EntityId(i)
    }

    fn graph(edges: &[(u32, u32, u32)], roots: &[u32], extra: &[u32]) -> Subgraph {
        let edges: std::collections::BTreeSet<Triple> = edges
            .iter()
            .map(|&(h, r, t)| Triple::new(ent(h), RelationId(r), ent(t)))
            .collect();
        let mut ents: Vec<EntityId> = edges.iter().flat_map(|t| [t.head, t.tail]).collect();
        ents.extend(roots.iter().chain(extra).map(|&i| ent(i)));
        Subgraph {
            entities: ents.into_iter().collect(),
            edges,
            topic_roots: roots.iter().map(|&i| ent(i)).collect(),
        }
    }

    #[test]
    fn lone_topic_keeps_all_mass() {
        let p = params(2, 3, 3, 0);
        let d = distribution_from_embedding(&p, &[0.1, 0.2, 0.3], &graph(&[], &[0], &[])).unwrap();
        assert_eq!(d.entity_ids, vec![ent(0)]);
        assert_eq!(d.probs, vec![1.0]);
    }

    #[test]
    fn star_is_uniform_over_leaves() {
        let p = params(1, 3, 1, 0);
        let g = graph(&[(0, 0, 1), (0, 0, 2), (0, 0, 3), (0, 0, 4)], &[0], &[]);
        let d = distribution_from_embedding(&p, &[0.3, -0.2, 0.5], &g).unwrap();
        assert_eq!(d.prob(ent(0)), 0.0);
        for i in 1..=4 {
            assert!((d.prob(ent(i)) - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn errors_on_bad_subgraphs() {
        let p = params(1, 2, 1, 0);
        assert!(matches!(
            distribution_from_embedding(&p, &[0.0, 0.0], &Subgraph::default()),
            Err(Error::EmptySubgraph)
        ));
        let no_root = graph(&[(0, 0, 1)], &[], &[]);
        assert!(matches!(
            distribution_from_embedding(&p, &[0.0, 0.0], &no_root),
            Err(Error::NoRootInSubgraph)
        ));
    }

    #[test]
    fn argmax_ties_go_to_lowest_id() {
        let d = AnswerDistribution {
            entity_ids: vec![ent(1), ent(4), ent(7)],
            probs: vec![0.2, 0.4, 0.4],
        };
        assert_eq!(d.argmax(), Some(ent(4)));
        assert_eq!(d.top(2), vec![(ent(4), 0.4), (ent(7), 0.4)]);
    }

    fn random_case(seed: u64) -> (ReasonerParams, Vec<f64>, Subgraph, EntitySet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..7u32);
        let rels = rng.gen_range(1..4u32);
        let edges: Vec<(u32, u32, u32)> = (0..rng.gen_range(1..12))
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..rels), rng.gen_range(0..n)))
            .collect();
        let g = graph(&edges, &[0], &[]);
        let mut p = params(rels as usize, 3, rng.gen_range(1..4), seed);
        // larger parameters so the softmaxes are far from uniform
        p.scale_by(8.0);
        let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let answers: EntitySet = g.entities.iter().filter(|_| rng.gen_bool(0.5)).collect();
        (p, q, g, answers)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut checked = 0;
        for seed in 0..60 {
            let (p, q, g, answers) = random_case(seed);
            let mut grad = p.zeros_like();
            let Some(loss) = answer_loss(&p, &q, &g, &answers, Some(&mut grad)).unwrap() else {
                continue;
            };
            if !loss.is_finite() {
                continue;
            }
            let analytic = grad.to_flat();
            let h = 1e-5;
            let mut idx = 0;
            for b in 0..p.blocks().len() {
                for j in 0..p.blocks()[b].len() {
                    let mut plus = p.clone();
                    plus.blocks_mut()[b][j] += h;
                    let mut minus = p.clone();
                    minus.blocks_mut()[b][j] -= h;
                    let lp = answer_loss(&plus, &q, &g, &answers, None).unwrap().unwrap();
                    let lm = answer_loss(&minus, &q, &g, &answers, None).unwrap().unwrap();
                    let numeric = (lp - lm) / (2.0 * h);
                    let err = (numeric - analytic[idx]).abs() / numeric.abs().max(analytic[idx].abs()).max(1e-6);
                    assert!(err < 1e-3, "seed {seed} param {idx}: {numeric} vs {}", analytic[idx]);
                    idx += 1;
                }
            }
            checked += 1;
        }
        assert!(checked >= 20);
    }

    proptest! {
        #[test]
        fn distribution_is_normalized_and_local(seed in 0u64..10_000) {
            let (p, q, g, _) = random_case(seed);
            let d = distribution_from_embedding(&p, &q, &g).unwrap();
            prop_assert_eq!(&d.entity_ids, &g.entities.as_slice().to_vec());
            prop_assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(d.probs.iter().all(|x| *x >= 0.0));
            // unreachable within step_count ⇒ exactly zero
            let mut reach = EntitySet::singleton(ent(0));
            let mut layer = reach.clone();
            for _ in 0..p.step_count() {
                layer = g.edges.iter().filter(|t| layer.contains(t.head)).map(|t| t.tail).collect();
                reach = reach.union(&layer);
            }
            for (e, pr) in d.entity_ids.iter().zip(&d.probs) {
                if !reach.contains(*e) {
                    prop_assert_eq!(*pr, 0.0);
                }
            }
        }

        #[test]
        fn relabeling_permutes_the_distribution(seed in 0u64..10_000, shift in 1u32..50) {
            let (p, q, g, _) = random_case(seed);
            let d = distribution_from_embedding(&p, &q, &g).unwrap();
            // reverse order and shift ids
            let map = |e: EntityId| ent(1000 - e.0 * 3 + shift);
            let g2 = Subgraph {
                entities: g.entities.iter().map(map).collect(),
                edges: g.edges.iter().map(|t| Triple::new(map(t.head), t.relation, map(t.tail))).collect(),
                topic_roots: g.topic_roots.iter().map(map).collect(),
            };
            let d2 = distribution_from_embedding(&p, &q, &g2).unwrap();
            for (e, pr) in d.entity_ids.iter().zip(&d.probs) {
                prop_assert!((d2.prob(map(*e)) - pr).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tree_likelihood_cases() {
        use crate::encoder::{ScorerConfig, ScorerParams, Vocab};
        use crate::fixtures::turing_kb;
        let kb = turing_kb();
        let vocab = Vocab::build(&kb, ["where"]);
        let s = ScorerParams::init(vocab, ScorerConfig::default(), 1);
        let r = ReasonerParams::init(kb.relation_count(), s.dim(), ReasonerConfig::default(), 2).unwrap();
        let e = |n: &str| kb.entity_id(n).unwrap();
        let path = [kb.relation_id("win__inv").unwrap(), kb.relation_id("graduate").unwrap()];
        let ta = e("TuringAward");
        assert!(tree_likelihood(&r, &s, &kb, "where", ta, &path, e("McGill")).unwrap() > 0.0);
        assert_eq!(tree_likelihood(&r, &s, &kb, "where", ta, &path, e("Canada")).unwrap(), 0.0);
        assert_eq!(tree_likelihood(&r, &s, &kb, "where", ta, &[], ta).unwrap(), 1.0);
        let bad = [kb.relation_id("graduate").unwrap()];
        assert_eq!(tree_likelihood(&r, &s, &kb, "where", ta, &bad, e("McGill")).unwrap(), 0.0);
    }
}
