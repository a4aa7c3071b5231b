//! In-memory triple store.
//!
//! Entities and relations are interned in first-seen order of the input. With
//! `add_inverses`, every relation `r` gets a companion `r__inv` and each fact
//! `(h, r, t)` is also stored as `(t, r__inv, h)`, so traversal is forward-only.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Suffix marking a materialized inverse relation.
pub const INVERSE_SUFFIX: &str = "__inv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Triple {
            head,
            relation,
            tail,
        }
    }
}

/// Sorted, duplicate-free set of entity ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntitySet(Vec<EntityId>);

impl EntitySet {
    pub fn new() -> Self {
        EntitySet(Vec::new())
    }

    pub fn singleton(id: EntityId) -> Self {
        EntitySet(vec![id])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: EntityId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[EntityId] {
        &self.0
    }

    pub fn insert(&mut self, id: EntityId) -> bool {
        match self.0.binary_search(&id) {
            Ok(_) => false,
            Err(pos) => {
                self.0.insert(pos, id);
                true
            }
        }
    }

    pub fn union(&self, other: &EntitySet) -> EntitySet {
        self.iter().chain(other.iter()).collect()
    }

    pub fn intersection(&self, other: &EntitySet) -> EntitySet {
        EntitySet(self.iter().filter(|e| other.contains(*e)).collect())
    }

    pub fn intersects(&self, other: &EntitySet) -> bool {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.iter().any(|e| large.contains(e))
    }

    pub fn is_subset(&self, other: &EntitySet) -> bool {
        self.iter().all(|e| other.contains(e))
    }
}

impl FromIterator<EntityId> for EntitySet {
    fn from_iter<I: IntoIterator<Item = EntityId>>(iter: I) -> Self {
        let mut ids: Vec<EntityId> = iter.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        EntitySet(ids)
    }
}

impl<'a> IntoIterator for &'a EntitySet {
    type Item = EntityId;
    type IntoIter = std::iter::Copied<std::slice::Iter<'a, EntityId>>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter().copied()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Interner {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        id
    }

    fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    fn len(&self) -> usize {
        self.names.len()
    }
}

type Adjacency = Vec<BTreeMap<RelationId, Vec<EntityId>>>;

/// Interned, indexed knowledge base. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeBase {
    entities: Interner,
    relations: Interner,
    inverse: Vec<Option<RelationId>>,
    add_inverses: bool,
    /// Distinct input facts, in first-seen order.
    facts: Vec<Triple>,
    outgoing: Adjacency,
    incoming: Adjacency,
    edge_count: usize,
}

/// Name of the inverse of relation `name`; applying it twice is the identity.
pub fn inverse_name(name: &str) -> String {
    match name.strip_suffix(INVERSE_SUFFIX) {
        Some(base) if !base.is_empty() => base.to_owned(),
        _ => format!("{name}{INVERSE_SUFFIX}"),
    }
}

#[derive(Default)]
struct Builder {
    entities: Interner,
    relations: Interner,
    inverse: Vec<Option<RelationId>>,
    add_inverses: bool,
    seen: BTreeSet<(u32, u32, u32)>,
    facts: Vec<Triple>,
}

impl Builder {
    fn new(add_inverses: bool) -> Self {
        Builder {
            add_inverses,
            ..Default::default()
        }
    }

    fn relation(&mut self, name: &str) -> RelationId {
        if let Some(id) = self.relations.get(name) {
            return RelationId(id);
        }
        let id = RelationId(self.relations.intern(name));
        self.inverse.push(None);
        if self.add_inverses {
            let inv_name = inverse_name(name);
            let inv = match self.relations.get(&inv_name) {
                Some(existing) => RelationId(existing),
                None => {
                    self.inverse.push(None);
                    RelationId(self.relations.intern(&inv_name))
                }
            };
            self.inverse[id.index()] = Some(inv);
            self.inverse[inv.index()] = Some(id);
        }
        id
    }

    fn add(&mut self, head: &str, relation: &str, tail: &str) {
        let h = EntityId(self.entities.intern(head));
        let r = self.relation(relation);
        let t = EntityId(self.entities.intern(tail));
        if self.seen.insert((h.0, r.0, t.0)) {
            self.facts.push(Triple::new(h, r, t));
        }
    }

    fn finish(self) -> Result<KnowledgeBase> {
        if self.facts.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = self.entities.len();
        let mut edges: BTreeSet<Triple> = BTreeSet::new();
        for fact in &self.facts {
            edges.insert(*fact);
            if let Some(inv) = self.inverse[fact.relation.index()] {
                edges.insert(Triple::new(fact.tail, inv, fact.head));
            }
        }
        let mut outgoing: Adjacency = vec![BTreeMap::new(); n];
        let mut incoming: Adjacency = vec![BTreeMap::new(); n];
        // BTreeSet order (head, relation, tail) keeps tail lists sorted.
        for e in &edges {
            outgoing[e.head.index()]
                .entry(e.relation)
                .or_default()
                .push(e.tail);
        }
        for e in &edges {
            incoming[e.tail.index()]
                .entry(e.relation)
                .or_default()
                .push(e.head);
        }
        for map in incoming.iter_mut() {
            for heads in map.values_mut() {
                heads.sort_unstable();
            }
        }
        Ok(KnowledgeBase {
            entities: self.entities,
            relations: self.relations,
            inverse: self.inverse,
            add_inverses: self.add_inverses,
            facts: self.facts,
            outgoing,
            incoming,
            edge_count: edges.len(),
        })
    }
}

impl KnowledgeBase {
    /// Reads a `head<TAB>relation<TAB>tail` file.
    pub fn from_tsv_path(path: impl AsRef<Path>, add_inverses: bool) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv_str(&text, add_inverses)
    }

    /// Parses TSV triples. Blank lines are skipped; any other line must have
    /// exactly three tab-separated fields.
    pub fn from_tsv_str(text: &str, add_inverses: bool) -> Result<Self> {
        let mut builder = Builder::new(add_inverses);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw);
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            if fields.iter().any(|f| f.is_empty()) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "empty field".into(),
                });
            }
            builder.add(fields[0], fields[1], fields[2]);
        }
        builder.finish()
    }

    pub fn from_triples<I, S>(triples: I, add_inverses: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, S)>,
        S: AsRef<str>,
    {
        let mut builder = Builder::new(add_inverses);
        for (h, r, t) in triples {
            builder.add(h.as_ref(), r.as_ref(), t.as_ref());
        }
        builder.finish()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    /// All relations, including materialized inverses.
    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    /// Distinct input facts (inverse edges not counted).
    pub fn triple_count(&self) -> usize {
        self.facts.len()
    }

    /// Stored edges, inverse edges included.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn has_inverses(&self) -> bool {
        self.add_inverses
    }

    pub fn facts(&self) -> &[Triple] {
        &self.facts
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entities.get(name).map(EntityId)
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relations.get(name).map(RelationId)
    }

    pub fn entity_name(&self, id: EntityId) -> Result<&str> {
        self.entities.name(id.0).ok_or(Error::UnknownEntity(id.0))
    }

    pub fn relation_name(&self, id: RelationId) -> Result<&str> {
        self.relations.name(id.0).ok_or(Error::UnknownRelation(id.0))
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityId> {
        (0..self.entities.len() as u32).map(EntityId)
    }

    pub fn relations(&self) -> impl Iterator<Item = RelationId> {
        (0..self.relations.len() as u32).map(RelationId)
    }

    pub fn relation_names(&self) -> impl Iterator<Item = &str> {
        self.relations.names.iter().map(String::as_str)
    }

    pub fn inverse_of(&self, r: RelationId) -> Option<RelationId> {
        self.inverse.get(r.index()).copied().flatten()
    }

    pub fn check_entity(&self, e: EntityId) -> Result<()> {
        if e.index() < self.entities.len() {
            Ok(())
        } else {
            Err(Error::UnknownEntity(e.0))
        }
    }

    pub fn check_relation(&self, r: RelationId) -> Result<()> {
        if r.index() < self.relations.len() {
            Ok(())
        } else {
            Err(Error::UnknownRelation(r.0))
        }
    }

    /// Sorted tails of `(e, r, ·)`.
    pub fn neighbors(&self, e: EntityId, r: RelationId) -> &[EntityId] {
        self.outgoing
            .get(e.index())
            .and_then(|m| m.get(&r))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Sorted heads of `(·, r, e)`.
    pub fn predecessors(&self, e: EntityId, r: RelationId) -> &[EntityId] {
        self.incoming
            .get(e.index())
            .and_then(|m| m.get(&r))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Outgoing `(relation, tails)` groups of `e`, by relation id.
    pub fn outgoing(&self, e: EntityId) -> impl Iterator<Item = (RelationId, &[EntityId])> {
        self.outgoing
            .get(e.index())
            .into_iter()
            .flat_map(|m| m.iter().map(|(r, ts)| (*r, ts.as_slice())))
    }

    pub fn incoming(&self, e: EntityId) -> impl Iterator<Item = (RelationId, &[EntityId])> {
        self.incoming
            .get(e.index())
            .into_iter()
            .flat_map(|m| m.iter().map(|(r, hs)| (*r, hs.as_slice())))
    }

    /// All stored edges in `(head, relation, tail)` order.
    pub fn edges(&self) -> impl Iterator<Item = Triple> + '_ {
        self.outgoing.iter().enumerate().flat_map(|(h, m)| {
            m.iter().flat_map(move |(r, ts)| {
                ts.iter()
                    .map(move |t| Triple::new(EntityId(h as u32), *r, *t))
            })
        })
    }

    /// Relations with at least one edge leaving the frontier, sorted.
    pub fn candidate_relations(&self, frontier: &EntitySet) -> Result<Vec<RelationId>> {
        let mut rels = BTreeSet::new();
        for e in frontier {
            self.check_entity(e)?;
            rels.extend(self.outgoing[e.index()].keys().copied());
        }
        Ok(rels.into_iter().collect())
    }

    /// Union of tails of `(e, r, ·)` over `e` in the frontier.
    pub fn follow(&self, frontier: &EntitySet, r: RelationId) -> Result<EntitySet> {
        self.check_relation(r)?;
        let mut out = Vec::new();
        for e in frontier {
            self.check_entity(e)?;
            out.extend_from_slice(self.neighbors(e, r));
        }
        Ok(out.into_iter().collect())
    }

    /// Undirected neighbor set of `e`, ignoring relation labels.
    pub fn undirected_neighbors(&self, e: EntityId) -> EntitySet {
        self.outgoing(e)
            .flat_map(|(_, ts)| ts.iter().copied())
            .chain(self.incoming(e).flat_map(|(_, hs)| hs.iter().copied()))
            .collect()
    }

    pub fn to_artifact(&self) -> KbArtifact {
        KbArtifact {
            format: KB_FORMAT.into(),
            version: KB_VERSION,
            add_inverses: self.add_inverses,
            entities: self.entities.names.clone(),
            relations: self.relations.names.clone(),
            facts: self
                .facts
                .iter()
                .map(|t| (t.head.0, t.relation.0, t.tail.0))
                .collect(),
        }
    }

    pub fn from_artifact(artifact: &KbArtifact) -> Result<Self> {
        if artifact.format != KB_FORMAT {
            return Err(Error::Checkpoint(format!(
                "not a knowledge-base artifact (format `{}`)",
                artifact.format
            )));
        }
        if artifact.version != KB_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported knowledge-base artifact version {}",
                artifact.version
            )));
        }
        let mut builder = Builder::new(artifact.add_inverses);
        for name in &artifact.entities {
            builder.entities.intern(name);
        }
        for name in &artifact.relations {
            builder.relation(name);
        }
        if builder.relations.names != artifact.relations {
            return Err(Error::Checkpoint("relation table is inconsistent".into()));
        }
        for &(h, r, t) in &artifact.facts {
            let head = builder.entities.name(h).ok_or(Error::UnknownEntity(h))?.to_owned();
            let rel = builder.relations.name(r).ok_or(Error::UnknownRelation(r))?.to_owned();
            let tail = builder.entities.name(t).ok_or(Error::UnknownEntity(t))?.to_owned();
            builder.add(&head, &rel, &tail);
        }
        builder.finish()
    }

    /// Original facts as TSV, in first-seen order.
    pub fn facts_tsv(&self) -> String {
        let mut out = String::new();
        for t in &self.facts {
            out.push_str(&self.entities.names[t.head.index()]);
            out.push('\t');
            out.push_str(&self.relations.names[t.relation.index()]);
            out.push('\t');
            out.push_str(&self.entities.names[t.tail.index()]);
            out.push('\n');
        }
        out
    }
}

pub const KB_FORMAT: &str = "srkbqa-kb";
pub const KB_VERSION: u32 = 1;

/// Serialized form of a [`KnowledgeBase`]; reloading reproduces identical ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbArtifact {
    pub format: String,
    pub version: u32,
    pub add_inverses: bool,
    pub entities: Vec<String>,
    pub relations: Vec<String>,
    pub facts: Vec<(u32, u32, u32)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{turing_kb, TURING_TSV};

    fn ids(kb: &KnowledgeBase, names: &[&str]) -> EntitySet {
        names.iter().map(|n| kb.entity_id(n).unwrap()).collect()
    }

    fn rel(kb: &KnowledgeBase, name: &str) -> RelationId {
        kb.relation_id(name).unwrap()
    }

    fn rel_names(kb: &KnowledgeBase, rels: &[RelationId]) -> Vec<String> {
        let mut v: Vec<String> = rels
            .iter()
            .map(|r| kb.relation_name(*r).unwrap().to_owned())
            .collect();
        v.sort();
        v
    }

    #[test]
    fn turing_fixture_counts() {
        let kb = turing_kb();
        assert_eq!(kb.entity_count(), 9);
        assert_eq!(kb.relation_count(), 6);
        assert_eq!(kb.triple_count(), 9);
        assert_eq!(kb.edge_count(), 18);
        let no_inv = KnowledgeBase::from_tsv_str(TURING_TSV, false).unwrap();
        assert_eq!(no_inv.relation_count(), 3);
        assert_eq!(no_inv.edge_count(), 9);
    }

    #[test]
    fn self_loop_without_inverses() {
        let kb = KnowledgeBase::from_tsv_str("a\tr\ta\n", false).unwrap();
        assert_eq!(kb.entity_count(), 1);
        assert_eq!(kb.relation_count(), 1);
        assert_eq!(kb.triple_count(), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = KnowledgeBase::from_tsv_str("a\tr\tb\nc\td\n", true).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            KnowledgeBase::from_tsv_str("", true),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            KnowledgeBase::from_tsv_str("\n\n", true),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn duplicates_are_dropped() {
        let kb = KnowledgeBase::from_tsv_str("a\tr\tb\na\tr\tb\n", true).unwrap();
        assert_eq!(kb.triple_count(), 1);
        assert_eq!(kb.edge_count(), 2);
    }

    #[test]
    fn inverse_is_an_involution() {
        let kb = turing_kb();
        for r in kb.relations() {
            let inv = kb.inverse_of(r).unwrap();
            assert_ne!(inv, r);
            assert_eq!(kb.inverse_of(inv), Some(r));
        }
        assert_eq!(inverse_name(&inverse_name("graduate")), "graduate");
    }

    #[test]
    fn candidate_relations_on_fixture() {
        let kb = turing_kb();
        let c = kb.candidate_relations(&ids(&kb, &["TuringAward"])).unwrap();
        assert_eq!(rel_names(&kb, &c), vec!["win__inv"]);
        let c = kb
            .candidate_relations(&ids(&kb, &["Bengio", "Hinton"]))
            .unwrap();
        assert_eq!(rel_names(&kb, &c), vec!["citizen", "graduate", "win"]);
    }

    #[test]
    fn isolated_entity_has_no_candidates() {
        let kb = KnowledgeBase::from_tsv_str("a\tr\tb\n", false).unwrap();
        // b has no outgoing edges without inverses
        let c = kb.candidate_relations(&ids(&kb, &["b"])).unwrap();
        assert!(c.is_empty());
        assert!(kb.candidate_relations(&EntitySet::new()).unwrap().is_empty());
        assert!(kb
            .candidate_relations(&EntitySet::singleton(EntityId(99)))
            .is_err());
    }

    #[test]
    fn follow_on_fixture() {
        let kb = turing_kb();
        let winners = kb
            .follow(&ids(&kb, &["TuringAward"]), rel(&kb, "win__inv"))
            .unwrap();
        assert_eq!(winners, ids(&kb, &["Bengio", "Hinton", "Pearl"]));
        let school = kb
            .follow(&ids(&kb, &["Bengio"]), rel(&kb, "graduate"))
            .unwrap();
        assert_eq!(school, ids(&kb, &["McGill"]));
        let none = kb.follow(&ids(&kb, &["McGill"]), rel(&kb, "win")).unwrap();
        assert!(none.is_empty());
        assert!(kb.follow(&ids(&kb, &["McGill"]), RelationId(77)).is_err());
    }

    #[test]
    fn reingest_is_identical() {
        let a = turing_kb();
        let b = turing_kb();
        assert_eq!(a, b);
        let reloaded = KnowledgeBase::from_artifact(&a.to_artifact()).unwrap();
        assert_eq!(a, reloaded);
        assert_eq!(
            KnowledgeBase::from_tsv_str(&a.facts_tsv(), true).unwrap(),
            a
        );
    }

    #[test]
    fn adjacency_is_sorted_and_resolvable() {
        let kb = turing_kb();
        for t in kb.edges() {
            assert!(kb.entity_name(t.head).is_ok());
            assert!(kb.entity_name(t.tail).is_ok());
            assert!(kb.relation_name(t.relation).is_ok());
        }
        for e in kb.entities() {
            for (_, tails) in kb.outgoing(e) {
                assert!(tails.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn explicit_inverse_in_input_pairs_up() {
        let kb = KnowledgeBase::from_tsv_str("a\tx__inv\tb\n", true).unwrap();
        let x = kb.relation_id("x").unwrap();
        let a = kb.entity_id("a").unwrap();
        let b = kb.entity_id("b").unwrap();
        assert_eq!(kb.neighbors(b, x), &[a]);
        assert_eq!(kb.relation_count(), 2);
    }
}
