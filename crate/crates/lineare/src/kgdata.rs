//! Triple dataset loading, vocabularies, the filtered-ranking index, and
//! per-relation statistics.
//!
//! Datasets follow the usual benchmark layout: a directory with `train.txt`,
//! `valid.txt` and `test.txt`, one `head<TAB>relation<TAB>tail` triple per
//! line, raw names, no header.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type EntityId = u32;
pub type RelationId = u32;

/// An integer-encoded (head, relation, tail) fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
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

/// Dense name<->id bijections for entities and relations.
///
/// Ids are assigned in first-appearance order over train, then valid, then
/// test, so a vocabulary is a deterministic function of the input files.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Vocab {
    entity_names: Vec<String>,
    relation_names: Vec<String>,
    #[serde(skip)]
    entity_ids: HashMap<String, EntityId>,
    #[serde(skip)]
    relation_ids: HashMap<String, RelationId>,
}

impl Vocab {
    pub fn n_entities(&self) -> usize {
        self.entity_names.len()
    }

    pub fn n_relations(&self) -> usize {
        self.relation_names.len()
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entity_ids.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relation_ids.get(name).copied()
    }

    pub fn entity_name(&self, id: EntityId) -> &str {
        &self.entity_names[id as usize]
    }

    pub fn relation_name(&self, id: RelationId) -> &str {
        &self.relation_names[id as usize]
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entity_names
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relation_names
    }

    pub fn intern_entity(&mut self, name: &str) -> EntityId {
        if let Some(&id) = self.entity_ids.get(name) {
            return id;
        }
        let id = self.entity_names.len() as EntityId;
        self.entity_names.push(name.to_string());
        self.entity_ids.insert(name.to_string(), id);
        id
    }

    pub fn intern_relation(&mut self, name: &str) -> RelationId {
        if let Some(&id) = self.relation_ids.get(name) {
            return id;
        }
        let id = self.relation_names.len() as RelationId;
        self.relation_names.push(name.to_string());
        self.relation_ids.insert(name.to_string(), id);
        id
    }

    /// Rebuild the name->id maps after deserializing the name arrays.
    pub fn rebuild_maps(&mut self) {
        self.entity_ids = self
            .entity_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as EntityId))
            .collect();
        self.relation_ids = self
            .relation_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as RelationId))
            .collect();
    }
}

/// Known-true lookup over train ∪ valid ∪ test, used by the filtered
/// ranking protocol.
#[derive(Debug, Clone, Default)]
pub struct FilterIndex {
    tails_of: HashMap<(EntityId, RelationId), Vec<EntityId>>,
    heads_of: HashMap<(RelationId, EntityId), Vec<EntityId>>,
}

impl FilterIndex {
    pub fn build(splits: &[&[Triple]]) -> Self {
        let mut tails_of: HashMap<(EntityId, RelationId), Vec<EntityId>> = HashMap::new();
        let mut heads_of: HashMap<(RelationId, EntityId), Vec<EntityId>> = HashMap::new();
        for split in splits {
            for t in *split {
                tails_of.entry((t.head, t.relation)).or_default().push(t.tail);
                heads_of.entry((t.relation, t.tail)).or_default().push(t.head);
            }
        }
        for v in tails_of.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        for v in heads_of.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        FilterIndex { tails_of, heads_of }
    }

    /// All known-true tails for (head, relation), sorted.
    pub fn tails_of(&self, head: EntityId, relation: RelationId) -> &[EntityId] {
        self.tails_of
            .get(&(head, relation))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// All known-true heads for (relation, tail), sorted.
    pub fn heads_of(&self, relation: RelationId, tail: EntityId) -> &[EntityId] {
        self.heads_of
            .get(&(relation, tail))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.tails_of(t.head, t.relation).binary_search(&t.tail).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Split {
    Train,
    Valid,
    Test,
}

/// A loaded dataset: vocabulary, the three splits, and the filter index.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    pub vocab: Vocab,
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    pub filter: FilterIndex,
}

impl KnowledgeGraph {
    /// Assemble a graph from already-encoded triples (synthetic datasets,
    /// tests). Builds the filter index over all three splits.
    pub fn from_triples(
        vocab: Vocab,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Self {
        let filter = FilterIndex::build(&[&train, &valid, &test]);
        KnowledgeGraph {
            vocab,
            train,
            valid,
            test,
            filter,
        }
    }

    pub fn split(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn n_entities(&self) -> usize {
        self.vocab.n_entities()
    }

    pub fn n_relations(&self) -> usize {
        self.vocab.n_relations()
    }
}

/// Load `train.txt`, `valid.txt`, `test.txt` from `dir`.
///
/// The vocabulary is built over the union of all three splits; duplicate
/// lines within a split are dropped (with a logged count) since all
/// downstream consumers treat splits as triple sets.
pub fn load_dataset(dir: &Path) -> Result<KnowledgeGraph> {
    let mut vocab = Vocab::default();
    let mut raw: Vec<Vec<(String, String, String)>> = Vec::with_capacity(3);
    for name in ["train.txt", "valid.txt", "test.txt"] {
        raw.push(read_triple_file(&dir.join(name))?);
    }
    // Two passes: names are interned across all splits before encoding so
    // that every id referenced by valid/test exists in the vocabulary.
    for split in &raw {
        for (h, r, t) in split {
            vocab.intern_entity(h);
            vocab.intern_relation(r);
            vocab.intern_entity(t);
        }
    }
    let mut encoded: Vec<Vec<Triple>> = Vec::with_capacity(3);
    for (split, name) in raw.iter().zip(["train.txt", "valid.txt", "test.txt"]) {
        let mut triples = Vec::with_capacity(split.len());
        let mut seen = HashSet::with_capacity(split.len());
        for (h, r, t) in split {
            let triple = Triple::new(
                vocab.entity_id(h).unwrap(),
                vocab.relation_id(r).unwrap(),
                vocab.entity_id(t).unwrap(),
            );
            if seen.insert(triple) {
                triples.push(triple);
            }
        }
        let dropped = split.len() - triples.len();
        if dropped > 0 {
            log::warn!("{}: dropped {dropped} duplicate lines", dir.join(name).display());
        }
        encoded.push(triples);
    }
    let test = encoded.pop().unwrap();
    let valid = encoded.pop().unwrap();
    let train = encoded.pop().unwrap();
    Ok(KnowledgeGraph::from_triples(vocab, train, valid, test))
}

fn read_triple_file(path: &Path) -> Result<Vec<(String, String, String)>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() && idx > 0 {
            // tolerate a trailing blank line
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::MalformedLine {
                file: path.to_path_buf(),
                line: idx + 1,
                fields: fields.len(),
            });
        }
        out.push((
            fields[0].to_string(),
            fields[1].to_string(),
            fields[2].to_string(),
        ));
    }
    Ok(out)
}

/// Read a `regions.list` sidecar (one entity name per line) as used by the
/// Countries tasks, resolving names against the vocabulary.
pub fn load_region_list(dir: &Path, vocab: &Vocab) -> Result<Vec<EntityId>> {
    let path = dir.join("regions.list");
    let file = File::open(&path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        let name = line.trim();
        if name.is_empty() {
            continue;
        }
        let id = vocab
            .entity_id(name)
            .ok_or_else(|| Error::data(format!("region {name:?} not in vocabulary")))?;
        out.push(id);
    }
    if out.is_empty() {
        return Err(Error::data(format!("{}: no regions listed", path.display())));
    }
    Ok(out)
}

/// Relation cardinality class, decided by the 1.5-threshold rule on
/// (heads per tail, tails per head).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelationCategory {
    OneToOne,
    OneToMany,
    ManyToOne,
    ManyToMany,
}

impl RelationCategory {
    pub const ALL: [RelationCategory; 4] = [
        RelationCategory::OneToOne,
        RelationCategory::OneToMany,
        RelationCategory::ManyToOne,
        RelationCategory::ManyToMany,
    ];

    pub fn from_ratios(hpt: f64, tph: f64) -> Self {
        match (hpt < 1.5, tph < 1.5) {
            (true, true) => RelationCategory::OneToOne,
            (true, false) => RelationCategory::OneToMany,
            (false, true) => RelationCategory::ManyToOne,
            (false, false) => RelationCategory::ManyToMany,
        }
    }
}

impl fmt::Display for RelationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RelationCategory::OneToOne => "1-to-1",
            RelationCategory::OneToMany => "1-to-N",
            RelationCategory::ManyToOne => "N-to-1",
            RelationCategory::ManyToMany => "N-to-N",
        };
        f.write_str(s)
    }
}

/// Per-relation training-split statistics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RelationStats {
    pub relation: RelationId,
    /// Average heads per tail: #triples / #distinct tails.
    pub hpt: f64,
    /// Average tails per head: #triples / #distinct heads.
    pub tph: f64,
    pub category: RelationCategory,
}

/// Compute hpt/tph and the category for every relation that has at least
/// one training triple. Relations with no training triples are absent.
pub fn relation_stats(train: &[Triple]) -> Vec<RelationStats> {
    let mut per_rel: HashMap<RelationId, (usize, HashSet<EntityId>, HashSet<EntityId>)> =
        HashMap::new();
    for t in train {
        let entry = per_rel.entry(t.relation).or_default();
        entry.0 += 1;
        entry.1.insert(t.head);
        entry.2.insert(t.tail);
    }
    let mut stats: Vec<RelationStats> = per_rel
        .into_iter()
        .map(|(relation, (count, heads, tails))| {
            let tph = count as f64 / heads.len() as f64;
            let hpt = count as f64 / tails.len() as f64;
            RelationStats {
                relation,
                hpt,
                tph,
                category: RelationCategory::from_ratios(hpt, tph),
            }
        })
        .collect();
    stats.sort_unstable_by_key(|s| s.relation);
    stats
}

/// Test-triplet connectivity-pattern census.
///
/// Buckets are mutually exclusive with priority Sym > Inv > Com > Others:
/// a test triple (h, r, t) is Sym if (t, r, h) is a training fact, Inv if
/// (t, r', h) is a training fact for some r' != r, Com if some directed
/// training path h -> ... -> t of length 2..=max_path_len exists.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct PatternCensus {
    pub sym: usize,
    pub inv: usize,
    pub com: usize,
    pub others: usize,
}

impl PatternCensus {
    pub fn total(&self) -> usize {
        self.sym + self.inv + self.com + self.others
    }

    pub fn percentages(&self) -> [f64; 4] {
        let n = self.total().max(1) as f64;
        [
            100.0 * self.sym as f64 / n,
            100.0 * self.inv as f64 / n,
            100.0 * self.com as f64 / n,
            100.0 * self.others as f64 / n,
        ]
    }
}

/// Classify every test triple into the Sym/Inv/Com/Others buckets.
///
/// `max_path_len` is the longest composition path considered (2 or 3).
/// Paths follow edge direction and may use any relation sequence.
pub fn classify_test_triplets(kg: &KnowledgeGraph, max_path_len: usize) -> PatternCensus {
    assert!(
        (2..=3).contains(&max_path_len),
        "max_path_len must be 2 or 3"
    );
    let n_entities = kg.n_entities();

    // train-split adjacency and (head, tail) -> relations index
    let mut out_neighbors: Vec<Vec<EntityId>> = vec![Vec::new(); n_entities];
    let mut in_neighbors: Vec<Vec<EntityId>> = vec![Vec::new(); n_entities];
    let mut rels_between: HashMap<(EntityId, EntityId), Vec<RelationId>> = HashMap::new();
    for t in &kg.train {
        out_neighbors[t.head as usize].push(t.tail);
        in_neighbors[t.tail as usize].push(t.head);
        rels_between.entry((t.head, t.tail)).or_default().push(t.relation);
    }
    for v in out_neighbors.iter_mut().chain(in_neighbors.iter_mut()) {
        v.sort_unstable();
        v.dedup();
    }

    let classify = |triple: &Triple, reachable: &mut Scratch| -> usize {
        if let Some(rels) = rels_between.get(&(triple.tail, triple.head)) {
            if rels.contains(&triple.relation) {
                return 0; // Sym
            }
            if rels.iter().any(|&r| r != triple.relation) {
                return 1; // Inv
            }
        }
        // Com: path of length 2..=max_path_len from h to t. Mark the
        // 1-step in-neighborhood of t, then probe from h's side.
        reachable.mark(&in_neighbors[triple.tail as usize]);
        let mut found = false;
        'outer: for &u in &out_neighbors[triple.head as usize] {
            if reachable.is_marked(u) {
                found = true; // 2-step
                break;
            }
            if max_path_len >= 3 {
                for &v in &out_neighbors[u as usize] {
                    if reachable.is_marked(v) {
                        found = true; // 3-step
                        break 'outer;
                    }
                }
            }
        }
        reachable.clear();
        if found {
            2
        } else {
            3
        }
    };

    let buckets: Vec<usize> = kg
        .test
        .par_iter()
        .map_init(
            || Scratch::new(n_entities),
            |scratch, t| classify(t, scratch),
        )
        .collect();

    let mut census = PatternCensus::default();
    for b in buckets {
        match b {
            0 => census.sym += 1,
            1 => census.inv += 1,
            2 => census.com += 1,
            _ => census.others += 1,
        }
    }
    census
}

/// Reusable membership mask over entity ids.
struct Scratch {
    mask: Vec<bool>,
    touched: Vec<EntityId>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            mask: vec![false; n],
            touched: Vec::new(),
        }
    }

    fn mark(&mut self, ids: &[EntityId]) {
        for &id in ids {
            self.mask[id as usize] = true;
        }
        self.touched.extend_from_slice(ids);
    }

    fn is_marked(&self, id: EntityId) -> bool {
        self.mask[id as usize]
    }

    fn clear(&mut self) {
        for &id in &self.touched {
            self.mask[id as usize] = false;
        }
        self.touched.clear();
    }
}

/// Distribution of test triples over the mapping-property categories of
/// their relations. Relations unseen in train go to `uncategorized`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MappingCensus {
    pub one_to_one: usize,
    pub one_to_many: usize,
    pub many_to_one: usize,
    pub many_to_many: usize,
    pub uncategorized: usize,
}

impl MappingCensus {
    pub fn total(&self) -> usize {
        self.one_to_one + self.one_to_many + self.many_to_one + self.many_to_many
            + self.uncategorized
    }

    pub fn count(&self, cat: RelationCategory) -> usize {
        match cat {
            RelationCategory::OneToOne => self.one_to_one,
            RelationCategory::OneToMany => self.one_to_many,
            RelationCategory::ManyToOne => self.many_to_one,
            RelationCategory::ManyToMany => self.many_to_many,
        }
    }

    pub fn percentage(&self, cat: RelationCategory) -> f64 {
        100.0 * self.count(cat) as f64 / self.total().max(1) as f64
    }
}

/// Assign each test triple the category of its relation.
pub fn mapping_census(kg: &KnowledgeGraph, stats: &[RelationStats]) -> MappingCensus {
    let by_rel: HashMap<RelationId, RelationCategory> =
        stats.iter().map(|s| (s.relation, s.category)).collect();
    let mut census = MappingCensus::default();
    for t in &kg.test {
        match by_rel.get(&t.relation) {
            Some(RelationCategory::OneToOne) => census.one_to_one += 1,
            Some(RelationCategory::OneToMany) => census.one_to_many += 1,
            Some(RelationCategory::ManyToOne) => census.many_to_one += 1,
            Some(RelationCategory::ManyToMany) => census.many_to_many += 1,
            None => census.uncategorized += 1,
        }
    }
    census
}

/// JSON-serializable dataset report: counts, pattern census, mapping census.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetReport {
    pub entities: usize,
    pub relations: usize,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    pub pattern_census: PatternCensusReport,
    pub mapping_census: MappingCensusReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternCensusReport {
    pub max_path_len: usize,
    pub sym: usize,
    pub inv: usize,
    pub com: usize,
    pub others: usize,
    pub sym_pct: f64,
    pub inv_pct: f64,
    pub com_pct: f64,
    pub others_pct: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MappingCensusReport {
    pub one_to_one: usize,
    pub one_to_many: usize,
    pub many_to_one: usize,
    pub many_to_many: usize,
    pub uncategorized: usize,
    pub one_to_one_pct: f64,
    pub one_to_many_pct: f64,
    pub many_to_one_pct: f64,
    pub many_to_many_pct: f64,
}

impl DatasetReport {
    pub fn build(kg: &KnowledgeGraph, max_path_len: usize) -> Self {
        let pattern = classify_test_triplets(kg, max_path_len);
        let [sym_pct, inv_pct, com_pct, others_pct] = pattern.percentages();
        let stats = relation_stats(&kg.train);
        let mapping = mapping_census(kg, &stats);
        DatasetReport {
            entities: kg.n_entities(),
            relations: kg.n_relations(),
            train: kg.train.len(),
            valid: kg.valid.len(),
            test: kg.test.len(),
            pattern_census: PatternCensusReport {
                max_path_len,
                sym: pattern.sym,
                inv: pattern.inv,
                com: pattern.com,
                others: pattern.others,
                sym_pct,
                inv_pct,
                com_pct,
                others_pct,
            },
            mapping_census: MappingCensusReport {
                one_to_one: mapping.one_to_one,
                one_to_many: mapping.one_to_many,
                many_to_one: mapping.many_to_one,
                many_to_many: mapping.many_to_many,
                uncategorized: mapping.uncategorized,
                one_to_one_pct: mapping.percentage(RelationCategory::OneToOne),
                one_to_many_pct: mapping.percentage(RelationCategory::OneToMany),
                many_to_one_pct: mapping.percentage(RelationCategory::ManyToOne),
                many_to_many_pct: mapping.percentage(RelationCategory::ManyToMany),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_lines(path: &Path, lines: &[&str]) {
        let mut f = File::create(path).unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
    }

    fn toy_dir(train: &[&str], valid: &[&str], test: &[&str]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        write_lines(&dir.path().join("train.txt"), train);
        write_lines(&dir.path().join("valid.txt"), valid);
        write_lines(&dir.path().join("test.txt"), test);
        dir
    }

    #[test]
    fn loads_toy_dataset_counts() {
        let dir = toy_dir(
            &["a\tr\tb", "b\tr\ta", "a\tr\ta"],
            &[],
            &[],
        );
        let kg = load_dataset(dir.path()).unwrap();
        assert_eq!(kg.n_entities(), 2);
        assert_eq!(kg.n_relations(), 1);
        assert_eq!(kg.train.len(), 3);
        assert_eq!(kg.valid.len(), 0);
        assert_eq!(kg.test.len(), 0);
    }

    #[test]
    fn malformed_line_reports_file_and_line() {
        let dir = toy_dir(&["a\tr\tb", "a\tr"], &[], &[]);
        let err = load_dataset(dir.path()).unwrap_err();
        match err {
            Error::MalformedLine { file, line, fields } => {
                assert!(file.ends_with("train.txt"));
                assert_eq!(line, 2);
                assert_eq!(fields, 2);
            }
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        write_lines(&dir.path().join("train.txt"), &["a\tr\tb"]);
        let err = load_dataset(dir.path()).unwrap_err();
        match err {
            Error::Io { path, .. } => assert!(path.ends_with("valid.txt")),
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn duplicates_within_a_split_are_dropped() {
        let dir = toy_dir(&["a\tr\tb", "a\tr\tb", "b\tr\ta"], &[], &[]);
        let kg = load_dataset(dir.path()).unwrap();
        assert_eq!(kg.train.len(), 2);
    }

    #[test]
    fn vocab_round_trips_every_name() {
        let dir = toy_dir(
            &["a\tr1\tb", "c\tr2\td"],
            &["e\tr1\ta"],
            &["f\tr3\tb"],
        );
        let kg = load_dataset(dir.path()).unwrap();
        for name in ["a", "b", "c", "d", "e", "f"] {
            let id = kg.vocab.entity_id(name).unwrap();
            assert_eq!(kg.vocab.entity_name(id), name);
        }
        for name in ["r1", "r2", "r3"] {
            let id = kg.vocab.relation_id(name).unwrap();
            assert_eq!(kg.vocab.relation_name(id), name);
        }
    }

    #[test]
    fn filter_index_covers_every_split() {
        let dir = toy_dir(
            &["a\tr1\tb", "c\tr2\td"],
            &["e\tr1\ta"],
            &["f\tr3\tb", "a\tr1\td"],
        );
        let kg = load_dataset(dir.path()).unwrap();
        for split in [Split::Train, Split::Valid, Split::Test] {
            for t in kg.split(split) {
                assert!(kg.filter.contains(t));
                assert!(kg.filter.tails_of(t.head, t.relation).contains(&t.tail));
                assert!(kg.filter.heads_of(t.relation, t.tail).contains(&t.head));
            }
        }
    }

    #[test]
    fn relation_stats_single_triple_is_one_to_one() {
        let stats = relation_stats(&[Triple::new(0, 0, 1)]);
        assert_eq!(stats.len(), 1);
        assert_eq!(stats[0].hpt, 1.0);
        assert_eq!(stats[0].tph, 1.0);
        assert_eq!(stats[0].category, RelationCategory::OneToOne);
    }

    #[test]
    fn relation_stats_full_bipartite_is_many_to_many() {
        // {(a,r,b),(a,r,c),(d,r,b),(d,r,c)}: 4 triples, 2 heads, 2 tails.
        let train = vec![
            Triple::new(0, 0, 1),
            Triple::new(0, 0, 2),
            Triple::new(3, 0, 1),
            Triple::new(3, 0, 2),
        ];
        let stats = relation_stats(&train);
        assert_eq!(stats[0].tph, 2.0);
        assert_eq!(stats[0].hpt, 2.0);
        assert_eq!(stats[0].category, RelationCategory::ManyToMany);
    }

    #[test]
    fn relation_stats_low_hpt_high_tph_is_one_to_many() {
        // 2 heads with 4 tails each, one shared tail between them:
        // 8 triples, 2 heads -> tph = 4; 7 tails -> hpt = 8/7 < 1.5.
        let mut train = Vec::new();
        for j in 0..4 {
            train.push(Triple::new(0, 0, 2 + j));
        }
        for j in 0..4 {
            train.push(Triple::new(1, 0, 5 + j));
        }
        let stats = relation_stats(&train);
        assert_eq!(stats[0].tph, 4.0);
        assert!(stats[0].hpt < 1.5, "hpt = {}", stats[0].hpt);
        assert_eq!(stats[0].category, RelationCategory::OneToMany);
    }

    #[test]
    fn relation_stats_ignore_triple_order() {
        let mut train = vec![
            Triple::new(0, 0, 1),
            Triple::new(0, 0, 2),
            Triple::new(3, 1, 1),
            Triple::new(4, 1, 1),
            Triple::new(4, 0, 2),
        ];
        let a = relation_stats(&train);
        train.reverse();
        let b = relation_stats(&train);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.relation, y.relation);
            assert_eq!(x.hpt, y.hpt);
            assert_eq!(x.tph, y.tph);
            assert_eq!(x.category, y.category);
        }
    }

    fn kg_from(train: Vec<Triple>, test: Vec<Triple>, n_entities: u32, n_rel: u32) -> KnowledgeGraph {
        let mut vocab = Vocab::default();
        for e in 0..n_entities {
            vocab.intern_entity(&format!("e{e}"));
        }
        for r in 0..n_rel {
            vocab.intern_relation(&format!("r{r}"));
        }
        KnowledgeGraph::from_triples(vocab, train, Vec::new(), test)
    }

    #[test]
    fn classify_direct_reverse_same_relation_is_sym() {
        let kg = kg_from(
            vec![Triple::new(0, 0, 1)],
            vec![Triple::new(1, 0, 0)],
            2,
            1,
        );
        let census = classify_test_triplets(&kg, 3);
        assert_eq!(census.sym, 1);
        assert_eq!(census.total(), 1);
    }

    #[test]
    fn classify_direct_reverse_other_relation_is_inv() {
        let kg = kg_from(
            vec![Triple::new(0, 0, 1)],
            vec![Triple::new(1, 1, 0)],
            2,
            2,
        );
        let census = classify_test_triplets(&kg, 3);
        assert_eq!(census.inv, 1);
    }

    #[test]
    fn classify_two_step_path_is_com() {
        // train a -r0-> b -r1-> c, test (a, r2, c)
        let kg = kg_from(
            vec![Triple::new(0, 0, 1), Triple::new(1, 1, 2)],
            vec![Triple::new(0, 2, 2)],
            3,
            3,
        );
        let census = classify_test_triplets(&kg, 3);
        assert_eq!(census.com, 1);
    }

    #[test]
    fn classify_three_step_needs_path_len_three() {
        // a -> b -> c -> d, test (a, r, d)
        let train = vec![
            Triple::new(0, 0, 1),
            Triple::new(1, 0, 2),
            Triple::new(2, 0, 3),
        ];
        let test = vec![Triple::new(0, 1, 3)];
        let kg = kg_from(train.clone(), test.clone(), 4, 2);
        assert_eq!(classify_test_triplets(&kg, 3).com, 1);
        let kg2 = kg_from(train, test, 4, 2);
        assert_eq!(classify_test_triplets(&kg2, 2).others, 1);
    }

    #[test]
    fn classify_unconnected_is_others() {
        let kg = kg_from(
            vec![Triple::new(0, 0, 1)],
            vec![Triple::new(2, 0, 3)],
            4,
            1,
        );
        let census = classify_test_triplets(&kg, 3);
        assert_eq!(census.others, 1);
    }

    #[test]
    fn classify_priority_sym_wins_over_inv_and_com() {
        // reverse edge exists under both same and different relation
        let kg = kg_from(
            vec![
                Triple::new(1, 0, 0),
                Triple::new(1, 1, 0),
                Triple::new(0, 0, 2),
                Triple::new(2, 0, 1),
            ],
            vec![Triple::new(0, 0, 1)],
            3,
            2,
        );
        let census = classify_test_triplets(&kg, 3);
        assert_eq!(census.sym, 1);
        assert_eq!(census.inv, 0);
        assert_eq!(census.com, 0);
    }

    #[test]
    fn mapping_census_all_one_to_one() {
        let train = vec![Triple::new(0, 0, 1), Triple::new(2, 1, 3)];
        let test = vec![Triple::new(0, 0, 1), Triple::new(2, 1, 3)];
        let kg = kg_from(train, test, 4, 2);
        let stats = relation_stats(&kg.train);
        let census = mapping_census(&kg, &stats);
        assert_eq!(census.one_to_one, 2);
        assert_eq!(census.percentage(RelationCategory::OneToOne), 100.0);
    }

    #[test]
    fn mapping_census_unseen_relation_is_uncategorized() {
        let kg = kg_from(
            vec![Triple::new(0, 0, 1)],
            vec![Triple::new(0, 1, 1)],
            2,
            2,
        );
        let stats = relation_stats(&kg.train);
        let census = mapping_census(&kg, &stats);
        assert_eq!(census.uncategorized, 1);
    }
}
