//! Synthetic datasets: small pattern graphs with held-out inferable facts
//! (symmetry, antisymmetry, inversion, composition, 1-to-N), and a
//! Countries-style world map with the S1/S2/S3 reasoning tasks.
//!
//! Pattern graph layouts are deterministic; only the Countries generator
//! takes a seed (for the neighbor graph and the held-out country draw).

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kgdata::{EntityId, KnowledgeGraph, Triple, Vocab};

/// Symmetric relation "sym" over disjoint entity pairs. Train holds both
/// directions for the first pairs and only the forward direction for the
/// held-out pairs; valid/test are the missing reverses.
pub fn symmetry_kg(n_pairs: usize, n_valid: usize, n_test: usize) -> KnowledgeGraph {
    assert!(n_valid + n_test < n_pairs);
    let mut vocab = Vocab::default();
    let r = vocab.intern_relation("sym");
    let mut a_ids = Vec::new();
    let mut b_ids = Vec::new();
    for i in 0..n_pairs {
        a_ids.push(vocab.intern_entity(&format!("a{i}")));
        b_ids.push(vocab.intern_entity(&format!("b{i}")));
    }
    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    let bidirectional = n_pairs - n_valid - n_test;
    for i in 0..n_pairs {
        train.push(Triple::new(a_ids[i], r, b_ids[i]));
        let reverse = Triple::new(b_ids[i], r, a_ids[i]);
        if i < bidirectional {
            train.push(reverse);
        } else if i < bidirectional + n_valid {
            valid.push(reverse);
        } else {
            test.push(reverse);
        }
    }
    KnowledgeGraph::from_triples(vocab, train, valid, test)
}

/// Antisymmetric relation "anti": a directed cycle with no reverse edges.
/// All edges are training facts; the antisymmetry check compares ranks of
/// forward edges against their (false) reversals.
pub fn antisymmetry_kg(n_entities: usize) -> KnowledgeGraph {
    assert!(n_entities >= 3);
    let mut vocab = Vocab::default();
    let r = vocab.intern_relation("anti");
    let ids: Vec<EntityId> = (0..n_entities)
        .map(|i| vocab.intern_entity(&format!("e{i}")))
        .collect();
    let train: Vec<Triple> = (0..n_entities)
        .map(|i| Triple::new(ids[i], r, ids[(i + 1) % n_entities]))
        .collect();
    KnowledgeGraph::from_triples(vocab, train, Vec::new(), Vec::new())
}

/// Relations "fwd" and "inv" with inv = fwd^-1 over disjoint pairs. All
/// forward facts are in train; the inverse facts of the last pairs are
/// held out as valid/test.
pub fn inversion_kg(n_pairs: usize, n_valid: usize, n_test: usize) -> KnowledgeGraph {
    assert!(n_valid + n_test < n_pairs);
    let mut vocab = Vocab::default();
    let fwd = vocab.intern_relation("fwd");
    let inv = vocab.intern_relation("inv");
    let mut a_ids = Vec::new();
    let mut b_ids = Vec::new();
    for i in 0..n_pairs {
        a_ids.push(vocab.intern_entity(&format!("a{i}")));
        b_ids.push(vocab.intern_entity(&format!("b{i}")));
    }
    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    let observed = n_pairs - n_valid - n_test;
    for i in 0..n_pairs {
        train.push(Triple::new(a_ids[i], fwd, b_ids[i]));
        let inverse = Triple::new(b_ids[i], inv, a_ids[i]);
        if i < observed {
            train.push(inverse);
        } else if i < observed + n_valid {
            valid.push(inverse);
        } else {
            test.push(inverse);
        }
    }
    KnowledgeGraph::from_triples(vocab, train, valid, test)
}

/// Chains h -first-> m -second-> t with "direct" = first ∘ second. All
/// chain edges are in train; direct facts of the last chains are held out.
pub fn composition_kg(n_chains: usize, n_valid: usize, n_test: usize) -> KnowledgeGraph {
    assert!(n_valid + n_test < n_chains);
    let mut vocab = Vocab::default();
    let first = vocab.intern_relation("first");
    let second = vocab.intern_relation("second");
    let direct = vocab.intern_relation("direct");
    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    let observed = n_chains - n_valid - n_test;
    for i in 0..n_chains {
        let h = vocab.intern_entity(&format!("h{i}"));
        let m = vocab.intern_entity(&format!("m{i}"));
        let t = vocab.intern_entity(&format!("t{i}"));
        train.push(Triple::new(h, first, m));
        train.push(Triple::new(m, second, t));
        let composed = Triple::new(h, direct, t);
        if i < observed {
            train.push(composed);
        } else if i < observed + n_valid {
            valid.push(composed);
        } else {
            test.push(composed);
        }
    }
    KnowledgeGraph::from_triples(vocab, train, valid, test)
}

/// A 1-to-N relation "fanout" (each head owns a group of tails) plus a
/// 1-to-1 control relation "link" chaining each group. Held-out fanout
/// facts stay anchored through the chain.
pub fn one_to_n_kg(
    n_heads: usize,
    group_size: usize,
    n_valid_per_head: usize,
    n_test_per_head: usize,
) -> KnowledgeGraph {
    assert!(n_valid_per_head + n_test_per_head < group_size);
    let mut vocab = Vocab::default();
    let fanout = vocab.intern_relation("fanout");
    let link = vocab.intern_relation("link");
    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    let observed = group_size - n_valid_per_head - n_test_per_head;
    for i in 0..n_heads {
        let head = vocab.intern_entity(&format!("head{i}"));
        let tails: Vec<EntityId> = (0..group_size)
            .map(|j| vocab.intern_entity(&format!("tail{i}_{j}")))
            .collect();
        for (j, &t) in tails.iter().enumerate() {
            let fact = Triple::new(head, fanout, t);
            if j < observed {
                train.push(fact);
            } else if j < observed + n_valid_per_head {
                valid.push(fact);
            } else {
                test.push(fact);
            }
        }
        for j in 0..group_size - 1 {
            train.push(Triple::new(tails[j], link, tails[j + 1]));
        }
    }
    KnowledgeGraph::from_triples(vocab, train, valid, test)
}

/// The three Countries reasoning tasks, in increasing difficulty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountriesTask {
    /// Region links of held-out countries removed; inferable from the
    /// country's subregion link plus the subregion's region link.
    S1,
    /// Subregion links of held-out countries also removed; inferable
    /// through a neighbor's direct region link.
    S2,
    /// Neighbors' direct region links also removed; inferable only through
    /// neighbor -> subregion -> region.
    S3,
}

impl std::fmt::Display for CountriesTask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CountriesTask::S1 => f.write_str("S1"),
            CountriesTask::S2 => f.write_str("S2"),
            CountriesTask::S3 => f.write_str("S3"),
        }
    }
}

impl FromStr for CountriesTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S1" => Ok(CountriesTask::S1),
            "S2" => Ok(CountriesTask::S2),
            "S3" => Ok(CountriesTask::S3),
            other => Err(Error::config(format!(
                "unknown countries task {other:?} (expected S1, S2 or S3)"
            ))),
        }
    }
}

const N_REGIONS: usize = 5;
const N_SUBREGIONS: usize = 23;
const N_COUNTRIES: usize = 244;
const N_VALID_COUNTRIES: usize = 24;
const N_TEST_COUNTRIES: usize = 24;

/// A generated Countries-style dataset plus its candidate region ids.
pub struct CountriesData {
    pub kg: KnowledgeGraph,
    pub regions: Vec<EntityId>,
}

/// Generate a world map with 244 countries, 23 subregions and 5 regions
/// (272 entities, 2 relations) and carve out the task-specific splits.
///
/// Every country sits in exactly one subregion, every subregion in exactly
/// one region; neighborOf edges (both directions) connect countries within
/// a region, so each task stays solvable from the remaining facts.
pub fn countries_kg(task: CountriesTask, seed: u64) -> CountriesData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vocab = Vocab::default();
    let located_in = vocab.intern_relation("locatedIn");
    let neighbor_of = vocab.intern_relation("neighborOf");

    let regions: Vec<EntityId> = (0..N_REGIONS)
        .map(|i| vocab.intern_entity(&format!("region{i}")))
        .collect();
    let subregions: Vec<EntityId> = (0..N_SUBREGIONS)
        .map(|i| vocab.intern_entity(&format!("subregion{i}")))
        .collect();
    let countries: Vec<EntityId> = (0..N_COUNTRIES)
        .map(|i| vocab.intern_entity(&format!("country{i}")))
        .collect();

    let region_of_sub = |s: usize| s % N_REGIONS;
    let sub_of_country = |c: usize| c % N_SUBREGIONS;
    let region_of_country = |c: usize| region_of_sub(sub_of_country(c));

    // neighbor graph: a cycle through each subregion's countries plus a few
    // random same-region edges
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); N_SUBREGIONS];
    for c in 0..N_COUNTRIES {
        members[sub_of_country(c)].push(c);
    }
    let mut region_members: Vec<Vec<usize>> = vec![Vec::new(); N_REGIONS];
    for c in 0..N_COUNTRIES {
        region_members[region_of_country(c)].push(c);
    }
    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    let add_edge = |edges: &mut HashSet<(usize, usize)>, a: usize, b: usize| {
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    };
    for group in &members {
        for i in 0..group.len() {
            add_edge(&mut edges, group[i], group[(i + 1) % group.len()]);
        }
    }
    for c in 0..N_COUNTRIES {
        let pool = &region_members[region_of_country(c)];
        for _ in 0..2 {
            let other = pool[rng.random_range(0..pool.len())];
            add_edge(&mut edges, c, other);
        }
    }
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); N_COUNTRIES];
    let mut sorted_edges: Vec<(usize, usize)> = edges.iter().copied().collect();
    sorted_edges.sort_unstable();
    for &(a, b) in &sorted_edges {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }

    // held-out countries: pairwise non-adjacent, picked in shuffled order
    let mut order: Vec<usize> = (0..N_COUNTRIES).collect();
    order.shuffle(&mut rng);
    let mut held_out = Vec::new();
    let mut blocked = vec![false; N_COUNTRIES];
    for &c in &order {
        if held_out.len() == N_VALID_COUNTRIES + N_TEST_COUNTRIES {
            break;
        }
        if blocked[c] {
            continue;
        }
        held_out.push(c);
        blocked[c] = true;
        for &n in &adjacency[c] {
            blocked[n] = true;
        }
    }
    assert_eq!(
        held_out.len(),
        N_VALID_COUNTRIES + N_TEST_COUNTRIES,
        "not enough non-adjacent countries for the held-out draw"
    );
    let valid_set: HashSet<usize> = held_out[..N_VALID_COUNTRIES].iter().copied().collect();
    let test_set: HashSet<usize> = held_out[N_VALID_COUNTRIES..].iter().copied().collect();
    let held: HashSet<usize> = held_out.iter().copied().collect();
    let neighbor_of_held: HashSet<usize> = held
        .iter()
        .flat_map(|&c| adjacency[c].iter().copied())
        .filter(|c| !held.contains(c))
        .collect();

    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    for s in 0..N_SUBREGIONS {
        train.push(Triple::new(
            subregions[s],
            located_in,
            regions[region_of_sub(s)],
        ));
    }
    for c in 0..N_COUNTRIES {
        let country = countries[c];
        let sub = subregions[sub_of_country(c)];
        let region = regions[region_of_country(c)];
        let is_held = held.contains(&c);

        // subregion link: removed for held-out countries in S2/S3
        if !(is_held && task != CountriesTask::S1) {
            train.push(Triple::new(country, located_in, sub));
        }
        // direct region link
        if is_held {
            let target = Triple::new(country, located_in, region);
            if valid_set.contains(&c) {
                valid.push(target);
            } else {
                debug_assert!(test_set.contains(&c));
                test.push(target);
            }
        } else if !(task == CountriesTask::S3 && neighbor_of_held.contains(&c)) {
            train.push(Triple::new(country, located_in, region));
        }
    }
    for &(a, b) in &sorted_edges {
        train.push(Triple::new(countries[a], neighbor_of, countries[b]));
        train.push(Triple::new(countries[b], neighbor_of, countries[a]));
    }

    CountriesData {
        kg: KnowledgeGraph::from_triples(vocab, train, valid, test),
        regions,
    }
}

/// Write a generated Countries task as a loadable dataset directory:
/// train/valid/test triple files plus `regions.list`.
pub fn write_countries_dataset(dir: &Path, task: CountriesTask, seed: u64) -> Result<()> {
    let data = countries_kg(task, seed);
    write_dataset(dir, &data.kg)?;
    let path = dir.join("regions.list");
    let mut f = BufWriter::new(File::create(&path).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?);
    for &r in &data.regions {
        writeln!(f, "{}", data.kg.vocab.entity_name(r)).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(())
}

/// Write any knowledge graph as train/valid/test files under `dir`.
pub fn write_dataset(dir: &Path, kg: &KnowledgeGraph) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for (name, triples) in [
        ("train.txt", &kg.train),
        ("valid.txt", &kg.valid),
        ("test.txt", &kg.test),
    ] {
        let path = dir.join(name);
        let io_err = |source| Error::Io {
            path: path.clone(),
            source,
        };
        let mut f = BufWriter::new(File::create(&path).map_err(io_err)?);
        for t in triples {
            writeln!(
                f,
                "{}\t{}\t{}",
                kg.vocab.entity_name(t.head),
                kg.vocab.relation_name(t.relation),
                kg.vocab.entity_name(t.tail)
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetry_kg_holds_out_reverses() {
        let kg = symmetry_kg(25, 5, 5);
        assert_eq!(kg.n_entities(), 50);
        assert_eq!(kg.n_relations(), 1);
        assert_eq!(kg.train.len(), 25 + 15);
        assert_eq!(kg.valid.len(), 5);
        assert_eq!(kg.test.len(), 5);
        // every held-out (b, r, a) has its (a, r, b) in train
        let train: HashSet<Triple> = kg.train.iter().copied().collect();
        for t in kg.valid.iter().chain(&kg.test) {
            assert!(train.contains(&Triple::new(t.tail, t.relation, t.head)));
        }
    }

    #[test]
    fn antisymmetry_kg_has_no_reverse_edges() {
        let kg = antisymmetry_kg(50);
        let train: HashSet<Triple> = kg.train.iter().copied().collect();
        for t in &kg.train {
            assert!(!train.contains(&Triple::new(t.tail, t.relation, t.head)));
        }
    }

    #[test]
    fn composition_kg_links_every_held_out_chain() {
        let kg = composition_kg(17, 2, 2);
        assert_eq!(kg.n_entities(), 51);
        let direct = kg.vocab.relation_id("direct").unwrap();
        let first = kg.vocab.relation_id("first").unwrap();
        let second = kg.vocab.relation_id("second").unwrap();
        for t in kg.test.iter().chain(&kg.valid) {
            assert_eq!(t.relation, direct);
            // the chain edges exist in train
            let mid: Vec<_> = kg
                .train
                .iter()
                .filter(|x| x.relation == first && x.head == t.head)
                .map(|x| x.tail)
                .collect();
            assert_eq!(mid.len(), 1);
            assert!(kg
                .train
                .iter()
                .any(|x| x.relation == second && x.head == mid[0] && x.tail == t.tail));
        }
    }

    #[test]
    fn one_to_n_kg_chains_anchor_held_out_tails() {
        let kg = one_to_n_kg(5, 9, 1, 1);
        assert_eq!(kg.n_entities(), 5 + 45);
        let link = kg.vocab.relation_id("link").unwrap();
        for t in kg.test.iter().chain(&kg.valid) {
            let anchored = kg
                .train
                .iter()
                .any(|x| x.relation == link && (x.head == t.tail || x.tail == t.tail));
            assert!(anchored, "held-out tail {} has no chain anchor", t.tail);
        }
        let stats = crate::kgdata::relation_stats(&kg.train);
        let fanout = kg.vocab.relation_id("fanout").unwrap();
        let by_rel: std::collections::HashMap<_, _> =
            stats.iter().map(|s| (s.relation, s.category)).collect();
        assert_eq!(
            by_rel[&fanout],
            crate::kgdata::RelationCategory::OneToMany
        );
        assert_eq!(by_rel[&link], crate::kgdata::RelationCategory::OneToOne);
    }

    #[test]
    fn countries_has_expected_shape() {
        for task in [CountriesTask::S1, CountriesTask::S2, CountriesTask::S3] {
            let data = countries_kg(task, 7);
            assert_eq!(data.kg.n_entities(), 272);
            assert_eq!(data.kg.n_relations(), 2);
            assert_eq!(data.regions.len(), 5);
            assert_eq!(data.kg.valid.len(), 24);
            assert_eq!(data.kg.test.len(), 24);
        }
    }

    #[test]
    fn countries_tasks_remove_the_right_links() {
        let located = "locatedIn";
        let s1 = countries_kg(CountriesTask::S1, 7);
        let s2 = countries_kg(CountriesTask::S2, 7);
        let s3 = countries_kg(CountriesTask::S3, 7);
        let rel = s1.kg.vocab.relation_id(located).unwrap();

        // in S1, every test country keeps a subregion link in train
        for t in &s1.kg.test {
            let has_sub = s1.kg.train.iter().any(|x| {
                x.relation == rel
                    && x.head == t.head
                    && s1.kg.vocab.entity_name(x.tail).starts_with("subregion")
            });
            assert!(has_sub);
        }
        // in S2/S3, held-out countries have no locatedIn links at all
        for (data, name) in [(&s2, "S2"), (&s3, "S3")] {
            for t in &data.kg.test {
                let any_loc = data
                    .kg
                    .train
                    .iter()
                    .any(|x| x.relation == rel && x.head == t.head);
                assert!(!any_loc, "{name}: test country keeps a location link");
            }
        }
        // in S3, neighbors of held-out countries keep no *direct* region link
        let nb = s3.kg.vocab.relation_id("neighborOf").unwrap();
        for t in &s3.kg.test {
            let neighbors: Vec<EntityId> = s3
                .kg
                .train
                .iter()
                .filter(|x| x.relation == nb && x.head == t.head)
                .map(|x| x.tail)
                .collect();
            assert!(!neighbors.is_empty(), "test country has no neighbors");
            for n in neighbors {
                let direct_region = s3.kg.train.iter().any(|x| {
                    x.relation == rel
                        && x.head == n
                        && s3.kg.vocab.entity_name(x.tail).starts_with("region")
                });
                assert!(!direct_region, "S3 neighbor keeps a direct region link");
                let has_sub = s3.kg.train.iter().any(|x| {
                    x.relation == rel
                        && x.head == n
                        && s3.kg.vocab.entity_name(x.tail).starts_with("subregion")
                });
                assert!(has_sub, "S3 neighbor lost its subregion link");
            }
        }
    }

    #[test]
    fn countries_generation_is_deterministic() {
        let a = countries_kg(CountriesTask::S2, 11);
        let b = countries_kg(CountriesTask::S2, 11);
        assert_eq!(a.kg.train, b.kg.train);
        assert_eq!(a.kg.test, b.kg.test);
    }

    #[test]
    fn written_dataset_round_trips_through_the_loader() {
        let dir = tempfile::tempdir().unwrap();
        write_countries_dataset(dir.path(), CountriesTask::S1, 3).unwrap();
        let kg = crate::kgdata::load_dataset(dir.path()).unwrap();
        assert_eq!(kg.n_entities(), 272);
        let regions = crate::kgdata::load_region_list(dir.path(), &kg.vocab).unwrap();
        assert_eq!(regions.len(), 5);
    }
}
