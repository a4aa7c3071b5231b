//! Questions, weak path labels from shortest paths, per-step decomposition
//! and pseudo-labels from distant-supervision tuples.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::io::BufRead;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::encoder::{Choice, QuestionState};
use crate::error::{Error, Result};
use crate::kb::{EntityId, EntitySet, KnowledgeBase, RelationId};

pub const DEFAULT_NEGATIVES_PER_STEP: usize = 15;
pub const DEFAULT_MAX_PATHS_PER_PAIR: usize = 10;

/// One line of a QA file, with surface forms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawQuestion {
    pub id: String,
    pub question: String,
    pub topic_entities: Vec<String>,
    #[serde(default)]
    pub answers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub id: String,
    pub text: String,
    pub topic_entities: EntitySet,
    pub answers: EntitySet,
}

/// Result of resolving surface forms; unknown names are reported, not fatal.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub question: Question,
    pub missing_topics: Vec<String>,
    pub missing_answers: Vec<String>,
}

/// A question without its answers. Retrieval only ever sees this view.
#[derive(Debug, Clone, Copy)]
pub struct Query<'a> {
    pub id: &'a str,
    pub text: &'a str,
    pub topic_entities: &'a EntitySet,
}

impl Question {
    pub fn resolve(raw: &RawQuestion, kb: &KnowledgeBase) -> Resolved {
        let mut missing_topics = Vec::new();
        let mut missing_answers = Vec::new();
        let lookup = |names: &[String], missing: &mut Vec<String>| -> EntitySet {
            names
                .iter()
                .filter_map(|n| {
                    let id = kb.entity_id(n);
                    if id.is_none() {
                        missing.push(n.clone());
                    }
                    id
                })
                .collect()
        };
        let topic_entities = lookup(&raw.topic_entities, &mut missing_topics);
        let answers = lookup(&raw.answers, &mut missing_answers);
        Resolved {
            question: Question {
                id: raw.id.clone(),
                text: raw.question.clone(),
                topic_entities,
                answers,
            },
            missing_topics,
            missing_answers,
        }
    }

    pub fn query(&self) -> Query<'_> {
        Query {
            id: &self.id,
            text: &self.text,
            topic_entities: &self.topic_entities,
        }
    }

    pub fn to_raw(&self, kb: &KnowledgeBase) -> Result<RawQuestion> {
        let names = |s: &EntitySet| -> Result<Vec<String>> {
            s.iter().map(|e| kb.entity_name(e).map(str::to_owned)).collect()
        };
        Ok(RawQuestion {
            id: self.id.clone(),
            question: self.text.clone(),
            topic_entities: names(&self.topic_entities)?,
            answers: names(&self.answers)?,
        })
    }
}

/// Resolves a dataset, dropping questions with no usable topic entity.
/// Returns the kept questions and the number dropped.
pub fn resolve_questions(raw: &[RawQuestion], kb: &KnowledgeBase) -> Result<(Vec<Question>, usize)> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(raw.len());
    let mut dropped = 0;
    for r in raw {
        if !seen.insert(r.id.as_str()) {
            return Err(Error::invalid(format!("duplicate question id `{}`", r.id)));
        }
        let res = Question::resolve(r, kb);
        for name in &res.missing_topics {
            log::warn!("question {}: unknown topic entity `{name}`", r.id);
        }
        for name in &res.missing_answers {
            log::warn!("question {}: unknown answer entity `{name}`", r.id);
        }
        if res.question.topic_entities.is_empty() {
            dropped += 1;
            continue;
        }
        out.push(res.question);
    }
    Ok((out, dropped))
}

/// A training path for one topic entity of one question.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathInstance {
    /// Index into the question list the instance was built from.
    pub question: usize,
    pub topic: EntityId,
    pub path: Vec<RelationId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepInstance {
    pub state: QuestionState,
    pub gold: Choice,
    pub negatives: Vec<RelationId>,
}

#[derive(Debug, Clone, Default)]
pub struct WeakLabels {
    pub instances: Vec<PathInstance>,
    /// (topic, answer) pairs with no connecting path.
    pub unreachable: usize,
}

/// Directed BFS distances from `source` over forward adjacency.
pub fn bfs_distances(kb: &KnowledgeBase, source: EntityId) -> Vec<Option<usize>> {
    let mut dist = vec![None; kb.entity_count()];
    let mut queue = VecDeque::new();
    dist[source.index()] = Some(0);
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let du = dist[u.index()].expect("queued entities have a distance");
        for (_, tails) in kb.outgoing(u) {
            for &v in tails {
                if dist[v.index()].is_none() {
                    dist[v.index()] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
    }
    dist
}

fn distances_to(kb: &KnowledgeBase, target: EntityId) -> Vec<Option<usize>> {
    let mut dist = vec![None; kb.entity_count()];
    let mut queue = VecDeque::new();
    dist[target.index()] = Some(0);
    queue.push_back(target);
    while let Some(u) = queue.pop_front() {
        let du = dist[u.index()].expect("queued entities have a distance");
        for (_, heads) in kb.incoming(u) {
            for &v in heads {
                if dist[v.index()].is_none() {
                    dist[v.index()] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
    }
    dist
}

/// All shortest relation sequences from `topic` to `answer`, in lexicographic
/// order, at most `cap` of them. `None` when the answer is unreachable.
pub fn shortest_relation_paths(
    kb: &KnowledgeBase,
    topic: EntityId,
    answer: EntityId,
    cap: usize,
) -> Result<Option<Vec<Vec<RelationId>>>> {
    kb.check_entity(topic)?;
    kb.check_entity(answer)?;
    let from = bfs_distances(kb, topic);
    let Some(total) = from[answer.index()] else {
        return Ok(None);
    };
    let to = distances_to(kb, answer);
    // Entities on some shortest topic→answer walk, by their depth.
    let on_walk = |e: EntityId, depth: usize| {
        from[e.index()] == Some(depth) && to[e.index()] == Some(total - depth)
    };

    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(total);
    extend_shortest(
        kb,
        &EntitySet::singleton(topic),
        total,
        &on_walk,
        &mut prefix,
        &mut out,
        cap,
    );
    Ok(Some(out))
}

fn extend_shortest(
    kb: &KnowledgeBase,
    layer: &EntitySet,
    total: usize,
    on_walk: &dyn Fn(EntityId, usize) -> bool,
    prefix: &mut Vec<RelationId>,
    out: &mut Vec<Vec<RelationId>>,
    cap: usize,
) {
    if out.len() >= cap {
        return;
    }
    let depth = prefix.len();
    if depth == total {
        out.push(prefix.clone());
        return;
    }
    let mut next: BTreeMap<RelationId, Vec<EntityId>> = BTreeMap::new();
    for e in layer {
        for (r, tails) in kb.outgoing(e) {
            for &t in tails {
                if on_walk(t, depth + 1) {
                    next.entry(r).or_default().push(t);
                }
            }
        }
    }
    for (r, tails) in next {
        prefix.push(r);
        extend_shortest(kb, &tails.into_iter().collect(), total, on_walk, prefix, out, cap);
        prefix.pop();
        if out.len() >= cap {
            return;
        }
    }
}

/// Shortest topic→answer relation paths for every question, deduplicated by
/// (topic, relation sequence) within a question.
pub fn build_weak_labels(
    kb: &KnowledgeBase,
    questions: &[Question],
    max_paths_per_pair: usize,
) -> Result<WeakLabels> {
    if max_paths_per_pair == 0 {
        return Err(Error::invalid("max_paths_per_pair must be positive"));
    }
    let mut labels = WeakLabels::default();
    for (qi, q) in questions.iter().enumerate() {
        let mut seen: HashSet<(EntityId, Vec<RelationId>)> = HashSet::new();
        for topic in &q.topic_entities {
            for answer in &q.answers {
                match shortest_relation_paths(kb, topic, answer, max_paths_per_pair)? {
                    None => {
                        labels.unreachable += 1;
                        log::debug!("question {}: answer {answer} unreachable from {topic}", q.id);
                    }
                    Some(paths) => {
                        for path in paths {
                            if seen.insert((topic, path.clone())) {
                                labels.instances.push(PathInstance {
                                    question: qi,
                                    topic,
                                    path,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    if labels.unreachable > 0 {
        log::warn!("{} topic/answer pairs had no connecting path", labels.unreachable);
    }
    Ok(labels)
}

/// Splits a path into `|path| + 1` per-step instances with sampled negatives.
pub fn decompose_path(
    kb: &KnowledgeBase,
    question_text: &str,
    inst: &PathInstance,
    negatives_per_step: usize,
    rng_seed: u64,
) -> Result<Vec<StepInstance>> {
    decompose_with_exclusions(kb, question_text, inst, negatives_per_step, rng_seed, &HashSet::new())
}

/// Like [`decompose_path`], but relations listed for a history prefix are
/// never drawn as negatives there.
fn decompose_with_exclusions(
    kb: &KnowledgeBase,
    question_text: &str,
    inst: &PathInstance,
    negatives_per_step: usize,
    rng_seed: u64,
    also_gold: &HashSet<Vec<RelationId>>,
) -> Result<Vec<StepInstance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut frontier = EntitySet::singleton(inst.topic);
    let mut out = Vec::with_capacity(inst.path.len() + 1);
    for t in 0..=inst.path.len() {
        let gold = inst.path.get(t).copied();
        let history = &inst.path[..t];
        let pool: Vec<RelationId> = kb
            .candidate_relations(&frontier)?
            .into_iter()
            .filter(|r| Some(*r) != gold)
            .filter(|r| {
                let mut key = history.to_vec();
                key.push(*r);
                !also_gold.contains(&key)
            })
            .collect();
        let n = negatives_per_step.min(pool.len());
        let mut negatives: Vec<RelationId> =
            sample(&mut rng, pool.len(), n).into_iter().map(|i| pool[i]).collect();
        negatives.sort();
        out.push(StepInstance {
            state: QuestionState::new(question_text, history.to_vec()),
            gold: gold.map_or(Choice::End, Choice::Relation),
            negatives,
        });
        if let Some(r) = gold {
            frontier = kb.follow(&frontier, r)?;
            if frontier.is_empty() {
                return Err(Error::invalid(format!(
                    "path of question {} is not instantiable from {}",
                    inst.question, inst.topic
                )));
            }
        }
    }
    Ok(out)
}

/// Decomposes every instance. Relations that start another labelled path of
/// the same question and topic are kept out of that step's negatives.
pub fn decompose_all(
    kb: &KnowledgeBase,
    questions: &[Question],
    instances: &[PathInstance],
    negatives_per_step: usize,
    rng_seed: u64,
) -> Result<Vec<StepInstance>> {
    let mut prefixes: BTreeMap<(usize, EntityId), HashSet<Vec<RelationId>>> = BTreeMap::new();
    for inst in instances {
        let set = prefixes.entry((inst.question, inst.topic)).or_default();
        for t in 1..=inst.path.len() {
            set.insert(inst.path[..t].to_vec());
        }
    }
    let mut out = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        let q = questions
            .get(inst.question)
            .ok_or_else(|| Error::invalid(format!("instance refers to question {}", inst.question)))?;
        let seed = rng_seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        out.extend(decompose_with_exclusions(
            kb,
            &q.text,
            inst,
            negatives_per_step,
            seed,
            &prefixes[&(inst.question, inst.topic)],
        )?);
    }
    Ok(out)
}

/// A sentence with one relation mention, as produced by distant supervision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistantTuple {
    pub sentence: String,
    pub head: String,
    pub relation: String,
    pub tail: String,
}

impl DistantTuple {
    fn is_well_formed(&self) -> bool {
        let ok = |s: &str| !s.trim().is_empty() && !s.contains(['\t', '\n', '\r']);
        ok(&self.head) && ok(&self.relation) && ok(&self.tail) && !self.sentence.trim().is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct PseudoLabels {
    /// KB built from the well-formed tuples, with inverse relations.
    pub kb: KnowledgeBase,
    pub questions: Vec<Question>,
    /// `instances[i].question == i`.
    pub instances: Vec<PathInstance>,
    pub skipped: usize,
}

/// One-hop instances from every tuple and two-hop instances from every pair
/// of tuples chained head-to-tail through a shared entity.
pub fn build_pseudo_labels(tuples: &[DistantTuple]) -> Result<PseudoLabels> {
    let good: Vec<&DistantTuple> = tuples.iter().filter(|t| t.is_well_formed()).collect();
    let skipped = tuples.len() - good.len();
    if skipped > 0 {
        log::warn!("skipped {skipped} malformed distant-supervision tuples");
    }
    if good.is_empty() {
        return Err(Error::EmptyInput);
    }
    let kb = KnowledgeBase::from_triples(
        good.iter()
            .map(|t| (t.head.as_str(), t.relation.as_str(), t.tail.as_str())),
        true,
    )?;
    let ids = |t: &DistantTuple| -> (EntityId, RelationId, EntityId) {
        (
            kb.entity_id(&t.head).expect("interned"),
            kb.relation_id(&t.relation).expect("interned"),
            kb.entity_id(&t.tail).expect("interned"),
        )
    };
    let mut by_head: BTreeMap<EntityId, Vec<usize>> = BTreeMap::new();
    for (i, t) in good.iter().enumerate() {
        by_head.entry(ids(t).0).or_default().push(i);
    }

    let mut questions = Vec::new();
    let mut instances = Vec::new();
    let mut emit = |text: String, topic: EntityId, answer: EntityId, path: Vec<RelationId>| {
        let idx = questions.len();
        questions.push(Question {
            id: format!("pseudo-{idx}"),
            text,
            topic_entities: EntitySet::singleton(topic),
            answers: EntitySet::singleton(answer),
        });
        instances.push(PathInstance {
            question: idx,
            topic,
            path,
        });
    };
    for t in &good {
        let (h, r, tail) = ids(t);
        emit(t.sentence.clone(), h, tail, vec![r]);
    }
    for (i, first) in good.iter().enumerate() {
        let (e1, r1, e2) = ids(first);
        for &j in by_head.get(&e2).map(Vec::as_slice).unwrap_or_default() {
            if j == i {
                continue;
            }
            let second = good[j];
            let (_, r2, e3) = ids(second);
            emit(format!("{} {}", first.sentence, second.sentence), e1, e3, vec![r1, r2]);
        }
    }
    Ok(PseudoLabels {
        kb,
        questions,
        instances,
        skipped,
    })
}

fn read_jsonl<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn parse_questions_jsonl(text: &str) -> Result<Vec<RawQuestion>> {
    read_jsonl(text.as_bytes())
}

pub fn load_questions(path: impl AsRef<Path>) -> Result<Vec<RawQuestion>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(std::io::BufReader::new(file))
}

pub fn parse_tuples_jsonl(text: &str) -> Result<Vec<DistantTuple>> {
    read_jsonl(text.as_bytes())
}

pub fn load_tuples(path: impl AsRef<Path>) -> Result<Vec<DistantTuple>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(std::io::BufReader::new(file))
}

pub fn questions_to_jsonl(raw: &[RawQuestion]) -> Result<String> {
    let mut out = String::new();
    for q in raw {
        out.push_str(&serde_json::to_string(q)?);
        out.push('\n');
    }
    Ok(out)
}

/// Distinct relation sequences among `instances`, for diagnostics.
pub fn distinct_paths(instances: &[PathInstance]) -> BTreeSet<Vec<RelationId>> {
    instances.iter().map(|i| i.path.clone()).collect()
}
