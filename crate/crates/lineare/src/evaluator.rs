//! Filtered link-prediction ranking, MR/MRR/Hits@N with per-direction and
//! per-relation-category breakdowns, and the Countries AUC-PR protocol.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kgdata::{
    EntityId, FilterIndex, KnowledgeGraph, RelationCategory, RelationStats, Split, Triple,
};
use crate::model::EmbeddingStore;
use crate::trainer::{train, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    PredictHead,
    PredictTail,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::PredictHead => f.write_str("head"),
            Direction::PredictTail => f.write_str("tail"),
        }
    }
}

/// Tie-averaged filtered rank of one triple in one direction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RankRecord {
    pub triple: Triple,
    pub direction: Direction,
    pub rank: f64,
}

/// Tie-averaged rank of `target` among the unfiltered candidates:
/// 1 + #strictly-smaller + #ties / 2. `filtered` must be sorted.
fn tie_averaged_rank(scores: &[f64], target: usize, filtered: &[EntityId]) -> f64 {
    let target_score = scores[target];
    let mut smaller = 0usize;
    let mut ties = 0usize;
    let mut f = 0usize;
    for (e, &s) in scores.iter().enumerate() {
        while f < filtered.len() && (filtered[f] as usize) < e {
            f += 1;
        }
        if e == target {
            continue;
        }
        if f < filtered.len() && filtered[f] as usize == e {
            continue; // known true candidate, deleted by the protocol
        }
        if s < target_score {
            smaller += 1;
        } else if s == target_score {
            ties += 1;
        }
    }
    1.0 + smaller as f64 + ties as f64 / 2.0
}

/// Rank one triple in one direction under the filtered protocol: every
/// known-true candidate is removed except the ranked entity itself.
pub fn rank_one(
    store: &EmbeddingStore,
    filter: &FilterIndex,
    triple: &Triple,
    direction: Direction,
) -> RankRecord {
    let mut scores = Vec::new();
    rank_one_into(store, filter, triple, direction, &mut scores)
}

fn rank_one_into(
    store: &EmbeddingStore,
    filter: &FilterIndex,
    triple: &Triple,
    direction: Direction,
    scores: &mut Vec<f64>,
) -> RankRecord {
    let rank = match direction {
        Direction::PredictTail => {
            store.score_all_tails_into(triple.head, triple.relation, scores);
            let filtered = filter.tails_of(triple.head, triple.relation);
            tie_averaged_rank(scores, triple.tail as usize, filtered)
        }
        Direction::PredictHead => {
            store.score_all_heads_into(triple.relation, triple.tail, scores);
            let filtered = filter.heads_of(triple.relation, triple.tail);
            tie_averaged_rank(scores, triple.head as usize, filtered)
        }
    };
    RankRecord {
        triple: *triple,
        direction,
        rank,
    }
}

/// Both-direction filtered ranks for every triple of a split, in split
/// order (tail rank then head rank per triple).
pub fn evaluate_ranks(store: &EmbeddingStore, kg: &KnowledgeGraph, split: Split) -> Vec<RankRecord> {
    let pairs: Vec<(RankRecord, RankRecord)> = kg
        .split(split)
        .par_iter()
        .map_init(Vec::new, |scratch, t| {
            (
                rank_one_into(store, &kg.filter, t, Direction::PredictTail, scratch),
                rank_one_into(store, &kg.filter, t, Direction::PredictHead, scratch),
            )
        })
        .collect();
    let mut out = Vec::with_capacity(pairs.len() * 2);
    for (a, b) in pairs {
        out.push(a);
        out.push(b);
    }
    out
}

/// Aggregated metrics over a set of ranks.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SubReport {
    pub n: usize,
    pub mr: f64,
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
}

impl SubReport {
    pub fn from_ranks<'a>(ranks: impl Iterator<Item = &'a f64>) -> Self {
        let mut n = 0usize;
        let (mut sum, mut rsum) = (0.0, 0.0);
        let (mut h1, mut h3, mut h10) = (0usize, 0usize, 0usize);
        for &r in ranks {
            n += 1;
            sum += r;
            rsum += 1.0 / r;
            if r <= 1.0 {
                h1 += 1;
            }
            if r <= 3.0 {
                h3 += 1;
            }
            if r <= 10.0 {
                h10 += 1;
            }
        }
        let nf = n.max(1) as f64;
        SubReport {
            n,
            mr: sum / nf,
            mrr: rsum / nf,
            hits1: h1 as f64 / nf,
            hits3: h3 as f64 / nf,
            hits10: h10 as f64 / nf,
        }
    }
}

/// Row key for breakdown sub-reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CategoryKey {
    All,
    Cat(RelationCategory),
    /// Relation absent from the train split, so no category is defined.
    Uncategorized,
}

impl fmt::Display for CategoryKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CategoryKey::All => f.write_str("all"),
            CategoryKey::Cat(c) => write!(f, "{c}"),
            CategoryKey::Uncategorized => f.write_str("uncategorized"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub direction: Direction,
    pub category: CategoryKey,
    pub metrics: SubReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub mr: f64,
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    /// Per-direction and per-direction-by-category sub-reports. Empty
    /// categories are absent rather than zero-filled.
    pub breakdowns: Vec<BreakdownRow>,
}

impl MetricsReport {
    pub fn from_records(records: &[RankRecord], stats: &[RelationStats]) -> Self {
        let overall = SubReport::from_ranks(records.iter().map(|r| &r.rank));
        let by_rel: HashMap<u32, RelationCategory> =
            stats.iter().map(|s| (s.relation, s.category)).collect();
        let mut breakdowns = Vec::new();
        for direction in [Direction::PredictHead, Direction::PredictTail] {
            let of_dir: Vec<f64> = records
                .iter()
                .filter(|r| r.direction == direction)
                .map(|r| r.rank)
                .collect();
            if !of_dir.is_empty() {
                breakdowns.push(BreakdownRow {
                    direction,
                    category: CategoryKey::All,
                    metrics: SubReport::from_ranks(of_dir.iter()),
                });
            }
            let keys = RelationCategory::ALL
                .into_iter()
                .map(CategoryKey::Cat)
                .chain([CategoryKey::Uncategorized]);
            for key in keys {
                let ranks: Vec<f64> = records
                    .iter()
                    .filter(|r| r.direction == direction)
                    .filter(|r| match (&key, by_rel.get(&r.triple.relation)) {
                        (CategoryKey::Cat(c), Some(rc)) => rc == c,
                        (CategoryKey::Uncategorized, None) => true,
                        _ => false,
                    })
                    .map(|r| r.rank)
                    .collect();
                if !ranks.is_empty() {
                    breakdowns.push(BreakdownRow {
                        direction,
                        category: key,
                        metrics: SubReport::from_ranks(ranks.iter()),
                    });
                }
            }
        }
        MetricsReport {
            n: overall.n,
            mr: overall.mr,
            mrr: overall.mrr,
            hits1: overall.hits1,
            hits3: overall.hits3,
            hits10: overall.hits10,
            breakdowns,
        }
    }

    /// CSV rendering: one row per direction x category.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("direction,category,n,mr,mrr,hits1,hits3,hits10\n");
        for row in &self.breakdowns {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                row.direction,
                row.category,
                row.metrics.n,
                row.metrics.mr,
                row.metrics.mrr,
                row.metrics.hits1,
                row.metrics.hits3,
                row.metrics.hits10
            ));
        }
        out
    }
}

/// Rank every triple of a split in both directions and aggregate.
pub fn evaluate(store: &EmbeddingStore, kg: &KnowledgeGraph, split: Split) -> MetricsReport {
    let records = evaluate_ranks(store, kg, split);
    let stats = crate::kgdata::relation_stats(&kg.train);
    MetricsReport::from_records(&records, &stats)
}

/// One row of the per-category table: head- and tail-prediction metrics
/// for one relation category on the test split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: CategoryKey,
    pub head: SubReport,
    pub tail: SubReport,
}

/// Per-relation-category evaluation on the test split (the detail table:
/// Hits@10 and MRR for predicting head and tail in each category).
pub fn evaluate_by_category(
    store: &EmbeddingStore,
    kg: &KnowledgeGraph,
    stats: &[RelationStats],
) -> Vec<CategoryRow> {
    let records = evaluate_ranks(store, kg, Split::Test);
    let report = MetricsReport::from_records(&records, stats);
    let mut by_key: HashMap<CategoryKey, (Option<SubReport>, Option<SubReport>)> = HashMap::new();
    for row in &report.breakdowns {
        if row.category == CategoryKey::All {
            continue;
        }
        let slot = by_key.entry(row.category).or_default();
        match row.direction {
            Direction::PredictHead => slot.0 = Some(row.metrics),
            Direction::PredictTail => slot.1 = Some(row.metrics),
        }
    }
    let order = RelationCategory::ALL
        .into_iter()
        .map(CategoryKey::Cat)
        .chain([CategoryKey::Uncategorized]);
    let mut rows = Vec::new();
    for key in order {
        if let Some((Some(head), Some(tail))) = by_key.remove(&key).map(|p| (p.0, p.1)) {
            rows.push(CategoryRow {
                category: key,
                head,
                tail,
            });
        }
    }
    rows
}

/// Average precision over a ranked list where **lower scores are more
/// plausible**. Equal scores enter the sweep together (tie grouping), each
/// positive contributing the precision at the end of its group.
pub fn auc_pr(scores: &[f64], labels: &[bool]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len());
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 {
        return Err(Error::data("auc_pr requires at least one positive label"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::non_finite("auc_pr score"));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_unstable_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut seen = 0usize;
    let mut tp = 0usize;
    let mut ap = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let group_score = scores[idx[i]];
        let mut j = i;
        let mut group_tp = 0usize;
        while j < idx.len() && scores[idx[j]] == group_score {
            if labels[idx[j]] {
                group_tp += 1;
            }
            j += 1;
        }
        seen += j - i;
        tp += group_tp;
        if group_tp > 0 {
            ap += (tp as f64 / seen as f64) * group_tp as f64;
        }
        i = j;
    }
    Ok(ap / positives as f64)
}

/// AUC-PR of one trained store on a Countries-style task: every test
/// triple's country is scored against all candidate regions, pooled into a
/// single precision-recall sweep.
pub fn evaluate_countries(
    store: &EmbeddingStore,
    kg: &KnowledgeGraph,
    regions: &[EntityId],
) -> Result<f64> {
    if kg.test.is_empty() {
        return Err(Error::data("countries task has no test triples"));
    }
    if regions.is_empty() {
        return Err(Error::data("countries task has no candidate regions"));
    }
    let mut scores = Vec::with_capacity(kg.test.len() * regions.len());
    let mut labels = Vec::with_capacity(kg.test.len() * regions.len());
    for t in &kg.test {
        for &g in regions {
            scores.push(store.score(t.head, t.relation, g));
            labels.push(g == t.tail);
        }
    }
    auc_pr(&scores, &labels)
}

/// Mean and standard deviation of the per-seed AUC-PR values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountriesReport {
    pub per_seed: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Train once per seed and evaluate AUC-PR; reports mean ± sample std.
pub fn run_countries(
    kg: &KnowledgeGraph,
    regions: &[EntityId],
    base_cfg: &TrainConfig,
    seeds: &[u64],
) -> Result<CountriesReport> {
    assert!(!seeds.is_empty());
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut cfg = base_cfg.clone();
        cfg.seed = seed;
        let outcome = train(kg, &cfg)?;
        per_seed.push(evaluate_countries(&outcome.store, kg, regions)?);
    }
    let mean = per_seed.iter().sum::<f64>() / per_seed.len() as f64;
    let std = if per_seed.len() > 1 {
        (per_seed.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            / (per_seed.len() - 1) as f64)
            .sqrt()
    } else {
        0.0
    };
    Ok(CountriesReport {
        per_seed,
        mean,
        std,
    })
}

/// Per-triple rank dump for significance testing, one CSV row per record.
pub fn ranks_to_csv(records: &[RankRecord], kg: &KnowledgeGraph) -> String {
    let mut out = String::from("head,relation,tail,direction,rank\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            kg.vocab.entity_name(r.triple.head),
            kg.vocab.relation_name(r.triple.relation),
            kg.vocab.entity_name(r.triple.tail),
            r.direction,
            r.rank
        ));
    }
    out
}
