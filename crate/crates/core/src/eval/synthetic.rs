//! Random relational graphs with planted multi-hop questions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{EntityId, EntitySet, KnowledgeBase, RelationId};
use crate::supervision::{questions_to_jsonl, shortest_relation_paths, RawQuestion, DEFAULT_MAX_PATHS_PER_PAIR};

const RELATION_WORDS: [&str; 20] = [
    "author", "genre", "director", "spouse", "employer", "capital", "founder", "member", "sibling", "language",
    "currency", "mentor", "sponsor", "rival", "successor", "owner", "publisher", "coach", "neighbor", "producer",
];

const MAX_RETRIES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_entities: usize,
    pub n_relations: usize,
    pub n_questions: usize,
    /// Relative weight of 1, 2, 3, ... hop questions.
    pub hop_weights: Vec<f64>,
    pub edges_per_entity: usize,
    /// Fraction of questions with a second topic entity.
    pub two_topic_fraction: f64,
    /// Planted paths reaching more answers than this are resampled.
    pub max_answers: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_entities: 300,
            n_relations: 12,
            n_questions: 500,
            hop_weights: vec![1.0, 1.0, 1.0],
            edges_per_entity: 3,
            two_topic_fraction: 0.1,
            max_answers: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedPath {
    pub topic: String,
    pub relations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub triples: Vec<(String, String, String)>,
    pub questions: Vec<RawQuestion>,
    /// Planted paths of `questions[i]`, one per topic entity.
    pub planted: Vec<Vec<PlantedPath>>,
    /// Questions that could not be planted within the retry budget.
    pub skipped: usize,
}

impl SyntheticData {
    pub fn triples_tsv(&self) -> String {
        let mut out = String::new();
        for (h, r, t) in &self.triples {
            out.push_str(h);
            out.push('\t');
            out.push_str(r);
            out.push('\t');
            out.push_str(t);
            out.push('\n');
        }
        out
    }

    pub fn questions_jsonl(&self) -> Result<String> {
        questions_to_jsonl(&self.questions)
    }

    pub fn kb(&self) -> Result<KnowledgeBase> {
        KnowledgeBase::from_triples(self.triples.iter().map(|(h, r, t)| (h, r, t)), true)
    }
}

pub fn relation_name(i: usize) -> String {
    RELATION_WORDS
        .get(i)
        .map_or_else(|| format!("relation{i}"), |w| (*w).to_owned())
}

fn render(kb: &KnowledgeBase, relations: &[RelationId], topic: EntityId) -> Result<String> {
    let mut out = String::new();
    for r in relations.iter().rev() {
        out.push_str(kb.relation_name(*r)?);
        out.push_str(" of the ");
    }
    // "the X of the Y of the <topic>" reads better without the last article
    out.truncate(out.len() - "the ".len());
    out.push_str(kb.entity_name(topic)?);
    Ok(out)
}

struct Planter<'a> {
    kb: &'a KnowledgeBase,
    forward: Vec<RelationId>,
    cfg: &'a SynthConfig,
}

impl Planter<'_> {
    fn hops(&self, rng: &mut ChaCha8Rng) -> usize {
        let total: f64 = self.cfg.hop_weights.iter().sum();
        let mut x = rng.gen_range(0.0..total);
        for (i, w) in self.cfg.hop_weights.iter().enumerate() {
            if x < *w {
                return i + 1;
            }
            x -= w;
        }
        self.cfg.hop_weights.len()
    }

    fn is_forward(&self, r: RelationId) -> bool {
        self.forward.binary_search(&r).is_ok()
    }

    /// Random forward walk of `h` relations from `topic`.
    fn walk(&self, topic: EntityId, h: usize, rng: &mut ChaCha8Rng) -> Result<Option<(Vec<RelationId>, EntitySet)>> {
        let mut frontier = EntitySet::singleton(topic);
        let mut path = Vec::with_capacity(h);
        for _ in 0..h {
            let cands: Vec<RelationId> = self
                .kb
                .candidate_relations(&frontier)?
                .into_iter()
                .filter(|r| self.is_forward(*r))
                .collect();
            let Some(&r) = cands.choose(rng) else {
                return Ok(None);
            };
            frontier = self.kb.follow(&frontier, r)?;
            path.push(r);
        }
        Ok(Some((path, frontier)))
    }

    /// Random backward walk of `h` forward relations ending at `target`.
    fn walk_back(&self, target: EntityId, h: usize, rng: &mut ChaCha8Rng) -> Result<Option<(EntityId, Vec<RelationId>)>> {
        let mut current = target;
        let mut rev = Vec::with_capacity(h);
        for _ in 0..h {
            let incoming: Vec<(RelationId, EntityId)> = self
                .kb
                .incoming(current)
                .filter(|(r, _)| self.is_forward(*r))
                .flat_map(|(r, hs)| hs.iter().map(move |h| (r, *h)))
                .collect();
            let Some(&(r, h)) = incoming.choose(rng) else {
                return Ok(None);
            };
            rev.push(r);
            current = h;
        }
        rev.reverse();
        Ok(Some((current, rev)))
    }

    /// The planted path is a shortest path to every answer and is listed
    /// among the capped weak labels of at least one of them.
    fn is_clean(&self, topic: EntityId, path: &[RelationId], answers: &EntitySet) -> Result<bool> {
        let mut listed = false;
        for a in answers {
            match shortest_relation_paths(self.kb, topic, a, DEFAULT_MAX_PATHS_PER_PAIR)? {
                Some(paths) if paths.first().is_some_and(|p| p.len() == path.len()) => {
                    listed |= paths.iter().any(|p| p == path);
                }
                _ => return Ok(false),
            }
        }
        Ok(listed)
    }

    fn plant(&self, rng: &mut ChaCha8Rng, two_topics: bool) -> Result<Option<(EntitySet, Vec<(EntityId, Vec<RelationId>)>)>> {
        let n = self.kb.entity_count() as u32;
        let t1 = EntityId(rng.gen_range(0..n));
        let Some((p1, a1)) = self.walk(t1, self.hops(rng), rng)? else {
            return Ok(None);
        };
        if a1.is_empty() || a1.contains(t1) || a1.len() > self.cfg.max_answers {
            return Ok(None);
        }
        if !two_topics {
            if !self.is_clean(t1, &p1, &a1)? {
                return Ok(None);
            }
            return Ok(Some((a1, vec![(t1, p1)])));
        }
        let pivot = a1.as_slice()[rng.gen_range(0..a1.len())];
        let Some((t2, p2)) = self.walk_back(pivot, self.hops(rng), rng)? else {
            return Ok(None);
        };
        let a2 = self.kb.follow(&EntitySet::singleton(t2), p2[0])?;
        let a2 = p2[1..].iter().try_fold(a2, |f, r| self.kb.follow(&f, *r))?;
        let answers = a1.intersection(&a2);
        if t2 == t1 || answers.contains(t1) || answers.contains(t2) {
            return Ok(None);
        }
        if !self.is_clean(t1, &p1, &answers)? || !self.is_clean(t2, &p2, &answers)? {
            return Ok(None);
        }
        Ok(Some((answers, vec![(t1, p1), (t2, p2)])))
    }
}

/// Random graph plus questions whose answers are the entities reached by a
/// planted relation path from each topic.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SyntheticData> {
    if cfg.n_entities < 2 || cfg.n_relations == 0 || cfg.edges_per_entity == 0 {
        return Err(Error::invalid("synthetic graph needs ≥2 entities, ≥1 relation and ≥1 edge per entity"));
    }
    if cfg.hop_weights.is_empty() || cfg.hop_weights.iter().any(|w| !(*w >= 0.0)) || cfg.hop_weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::invalid("hop weights must be non-negative with a positive sum"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let width = (cfg.n_entities - 1).to_string().len();
    let entity = |i: usize| format!("e{i:0width$}");
    let mut triples = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for h in 0..cfg.n_entities {
        for _ in 0..cfg.edges_per_entity {
            let r = rng.gen_range(0..cfg.n_relations);
            let mut t = rng.gen_range(0..cfg.n_entities - 1);
            if t >= h {
                t += 1;
            }
            if seen.insert((h, r, t)) {
                triples.push((entity(h), relation_name(r), entity(t)));
            }
        }
    }
    let kb = KnowledgeBase::from_triples(triples.iter().map(|(h, r, t)| (h, r, t)), true)?;
    let mut forward: Vec<RelationId> = (0..cfg.n_relations)
        .filter_map(|i| kb.relation_id(&relation_name(i)))
        .collect();
    forward.sort();
    let planter = Planter {
        kb: &kb,
        forward,
        cfg,
    };

    let mut questions = Vec::with_capacity(cfg.n_questions);
    let mut planted = Vec::with_capacity(cfg.n_questions);
    let mut skipped = 0;
    for i in 0..cfg.n_questions {
        let two = rng.gen_bool(cfg.two_topic_fraction.clamp(0.0, 1.0));
        let mut made = None;
        for _ in 0..MAX_RETRIES {
            if let Some(p) = planter.plant(&mut rng, two)? {
                made = Some(p);
                break;
            }
        }
        let Some((answers, paths)) = made else {
            skipped += 1;
            log::warn!("synthetic question {i}: planting failed, skipped");
            continue;
        };
        let clauses = paths
            .iter()
            .map(|(t, p)| render(&kb, p, *t))
            .collect::<Result<Vec<_>>>()?;
        let text = format!("what is the {}?", clauses.join(" and the "));
        let names = |s: &mut dyn Iterator<Item = EntityId>| -> Result<Vec<String>> {
            s.map(|e| kb.entity_name(e).map(str::to_owned)).collect()
        };
        questions.push(RawQuestion {
            id: format!("q{i:04}"),
            question: text,
            topic_entities: names(&mut paths.iter().map(|p| p.0))?,
            answers: names(&mut answers.iter())?,
        });
        planted.push(
            paths
                .iter()
                .map(|(t, p)| {
                    Ok(PlantedPath {
                        topic: kb.entity_name(*t)?.to_owned(),
                        relations: p.iter().map(|r| kb.relation_name(*r).map(str::to_owned)).collect::<Result<_>>()?,
                    })
                })
                .collect::<Result<_>>()?,
        );
    }
    Ok(SyntheticData {
        triples,
        questions,
        planted,
        skipped,
    })
}
