//! Command-line front end: dataset statistics, training, filtered ranking
//! evaluation, embedding geometry exports, and the Countries tasks.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lineare::analysis;
use lineare::evaluator::{self, evaluate_ranks, MetricsReport};
use lineare::kgdata::{self, DatasetReport, KnowledgeGraph, Split};
use lineare::model::EmbeddingStore;
use lineare::synth::{self, CountriesTask};
use lineare::trainer::{train, TrainConfig};
use lineare::{Error, ModelMode, RelationId, Vocab};
use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "lineare", version, about = "Knowledge graph embedding engine")]
struct Cli {
    /// Worker threads for parallel sections (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report dataset statistics: counts, pattern census, mapping census.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
        /// Longest composition path checked for the pattern census (2 or 3).
        #[arg(long, default_value_t = 3)]
        max_path_len: usize,
        /// Write stats.json here instead of only printing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a model and write checkpoint, log and manifest.
    Train(TrainArgs),
    /// Evaluate a checkpoint with the filtered ranking protocol.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Split to rank: valid or test.
        #[arg(long, default_value = "test")]
        split: String,
        /// Also dump one rank per triple and direction to ranks.csv.
        #[arg(long, default_value_t = false)]
        dump_ranks: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export embedding geometry diagnostics as CSV.
    Analyze {
        #[arg(long)]
        checkpoint: PathBuf,
        /// symmetry | inversion | composition | mapping | scatter
        #[arg(long)]
        kind: String,
        /// Comma-separated relation names; inversion needs two (r1,r2),
        /// composition three (r1,r2,r3 checks r1 against r2 then r3).
        #[arg(long)]
        relations: String,
        /// Dimensions for scatter export, comma-separated.
        #[arg(long)]
        dims: Option<String>,
        /// Entity pair file for scatter export: head<TAB>tail per line.
        #[arg(long)]
        pairs_file: Option<PathBuf>,
        /// Steepness window around 90 degrees for the mapping diagnostic.
        #[arg(long, default_value_t = analysis::DEFAULT_STEEP_TOLERANCE)]
        steep_tolerance: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and evaluate one Countries task over several seeds (AUC-PR).
    Countries {
        /// S1, S2 or S3.
        #[arg(long)]
        task: String,
        /// Dataset directory for that task (see `gen countries`).
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of independent training seeds.
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        /// First seed value; seeds are consecutive from here.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate synthetic datasets.
    #[command(subcommand)]
    Gen(GenCommand),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// key=value config file ('#' comments allowed).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    /// lineare or transe.
    #[arg(long)]
    mode: Option<String>,
    /// Extra overrides as key=value (repeatable), applied after --config.
    #[arg(long = "set")]
    set: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Write Countries task directories (countries_S1/S2/S3 under --out).
    Countries {
        /// Only this task; all three when omitted.
        #[arg(long)]
        task: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one synthetic pattern dataset.
    Pattern {
        /// symmetry | antisymmetry | inversion | composition | one-to-n
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // keep clap's rendering but use exit code 1 for usage problems
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    if cli.workers > 0 {
        if let Err(e) = rayon_pool(cli.workers) {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn rayon_pool(workers: usize) -> Result<(), String> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| e.to_string())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::Io { .. } | Error::MalformedLine { .. } | Error::Data(_) => 2,
        Error::NonFinite { .. } => 3,
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Stats {
            dataset,
            max_path_len,
            out,
        } => cmd_stats(&dataset, max_path_len, out.as_deref()),
        Command::Train(args) => cmd_train(args),
        Command::Eval {
            checkpoint,
            dataset,
            split,
            dump_ranks,
            out,
        } => cmd_eval(&checkpoint, &dataset, &split, dump_ranks, &out),
        Command::Analyze {
            checkpoint,
            kind,
            relations,
            dims,
            pairs_file,
            steep_tolerance,
            out,
        } => cmd_analyze(
            &checkpoint,
            &kind,
            &relations,
            dims.as_deref(),
            pairs_file.as_deref(),
            steep_tolerance,
            &out,
        ),
        Command::Countries {
            task,
            dataset,
            config,
            seeds,
            seed,
            out,
        } => cmd_countries(&task, &dataset, config.as_deref(), seeds, seed, out.as_deref()),
        Command::Gen(gen) => match gen {
            GenCommand::Countries { task, seed, out } => cmd_gen_countries(task.as_deref(), seed, &out),
            GenCommand::Pattern { kind, out } => cmd_gen_pattern(&kind, &out),
        },
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn ensure_dir(path: &Path) -> Result<(), Error> {
    fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn to_json_pretty<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("JSON serialization cannot fail") + "\n"
}

fn cmd_stats(dataset: &Path, max_path_len: usize, out: Option<&Path>) -> Result<(), Error> {
    if !(2..=3).contains(&max_path_len) {
        return Err(Error::config("max-path-len must be 2 or 3"));
    }
    let kg = kgdata::load_dataset(dataset)?;
    let report = DatasetReport::build(&kg, max_path_len);
    let json = to_json_pretty(&report);
    print!("{json}");
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_text(&dir.join("stats.json"), &json)?;
    }
    Ok(())
}

fn build_train_config(args: &TrainArgs) -> Result<TrainConfig, Error> {
    let mut cfg = TrainConfig::default();
    if let Some(path) = &args.config {
        cfg.apply_kv_file(path)?;
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::config(format!("--set {kv:?}: expected key=value")))?;
        cfg.apply_kv(k.trim(), v.trim())?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(dim) = args.dim {
        cfg.dim = dim;
    }
    if let Some(steps) = args.steps {
        cfg.max_steps = steps;
    }
    if let Some(mode) = &args.mode {
        cfg.mode = mode.parse::<ModelMode>()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_train(args: TrainArgs) -> Result<(), Error> {
    let cfg = build_train_config(&args)?;
    for warning in cfg.grid_warnings() {
        log::warn!("{warning}");
    }
    let kg = kgdata::load_dataset(&args.dataset)?;
    log::info!(
        "training on {} ({} entities, {} relations, {} train triples)",
        args.dataset.display(),
        kg.n_entities(),
        kg.n_relations(),
        kg.train.len()
    );
    ensure_dir(&args.out)?;
    let run_manifest = RunManifest::for_train(&args.dataset, &cfg, "checkpoint.bin")?;
    write_text(&args.out.join("manifest.json"), &to_json_pretty(&run_manifest))?;

    let outcome = train(&kg, &cfg)?;
    let ckpt = args.out.join("checkpoint.bin");
    outcome.store.save(&kg.vocab, &ckpt)?;
    let mut log_text = String::new();
    for rec in &outcome.log {
        log_text.push_str(&serde_json::to_string(rec).expect("JSON serialization cannot fail"));
        log_text.push('\n');
    }
    write_text(&args.out.join("train_log.jsonl"), &log_text)?;

    match outcome.best_valid_mrr {
        Some(mrr) => log::info!(
            "best validation MRR {:.4} at step {}; checkpoint written to {}",
            mrr,
            outcome.best_step.unwrap_or(0),
            ckpt.display()
        ),
        None => log::info!("checkpoint written to {}", ckpt.display()),
    }
    if let Some(step) = outcome.diverged_at {
        return Err(Error::non_finite(format!(
            "loss diverged at step {step}; last good checkpoint kept at {}",
            ckpt.display()
        )));
    }
    Ok(())
}

/// The checkpoint must have been trained on the same vocabulary.
fn check_vocab_compatible(store: &EmbeddingStore, vocab: &Vocab, kg: &KnowledgeGraph) -> Result<(), Error> {
    if vocab.entity_names() != kg.vocab.entity_names()
        || vocab.relation_names() != kg.vocab.relation_names()
    {
        return Err(Error::data(
            "checkpoint vocabulary does not match the dataset (different entities or relations)",
        ));
    }
    if store.n_entities() != kg.n_entities() || store.n_relations() != kg.n_relations() {
        return Err(Error::data("checkpoint shape does not match the dataset"));
    }
    Ok(())
}

fn cmd_eval(
    checkpoint: &Path,
    dataset: &Path,
    split: &str,
    dump_ranks: bool,
    out: &Path,
) -> Result<(), Error> {
    let split = match split {
        "valid" => Split::Valid,
        "test" => Split::Test,
        other => return Err(Error::config(format!("unknown split {other:?}"))),
    };
    let (store, vocab) = EmbeddingStore::load(checkpoint)?;
    let kg = kgdata::load_dataset(dataset)?;
    check_vocab_compatible(&store, &vocab, &kg)?;

    let records = evaluate_ranks(&store, &kg, split);
    let stats = kgdata::relation_stats(&kg.train);
    let report = MetricsReport::from_records(&records, &stats);
    ensure_dir(out)?;
    write_text(&out.join("metrics.json"), &to_json_pretty(&report))?;
    write_text(&out.join("metrics.csv"), &report.to_csv())?;
    if dump_ranks {
        write_text(&out.join("ranks.csv"), &evaluator::ranks_to_csv(&records, &kg))?;
    }
    log::info!(
        "{} triples ranked: MR {:.2}, MRR {:.4}, Hits@1 {:.4}, Hits@3 {:.4}, Hits@10 {:.4}",
        report.n,
        report.mr,
        report.mrr,
        report.hits1,
        report.hits3,
        report.hits10
    );
    Ok(())
}

/// Resolve a relation name with did-you-mean suggestions on failure.
fn resolve_relation(vocab: &Vocab, name: &str) -> Result<RelationId, Error> {
    if let Some(id) = vocab.relation_id(name) {
        return Ok(id);
    }
    let mut scored: Vec<(usize, &String)> = vocab
        .relation_names()
        .iter()
        .map(|n| (levenshtein(name, n), n))
        .collect();
    scored.sort_by_key(|(d, _)| *d);
    let suggestions: Vec<&str> = scored.iter().take(3).map(|(_, n)| n.as_str()).collect();
    Err(Error::data(format!(
        "unknown relation {name:?}; nearest names: {}",
        suggestions.join(", ")
    )))
}

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn parse_relation_list(vocab: &Vocab, names: &str, expected: usize) -> Result<Vec<RelationId>, Error> {
    let parts: Vec<&str> = names.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if parts.len() != expected {
        return Err(Error::config(format!(
            "expected {expected} relation name(s), got {}",
            parts.len()
        )));
    }
    parts.iter().map(|n| resolve_relation(vocab, n)).collect()
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn cmd_analyze(
    checkpoint: &Path,
    kind: &str,
    relations: &str,
    dims: Option<&str>,
    pairs_file: Option<&Path>,
    steep_tolerance: f64,
    out: &Path,
) -> Result<(), Error> {
    let (store, vocab) = EmbeddingStore::load(checkpoint)?;
    ensure_dir(out)?;
    match kind {
        "symmetry" => {
            let r = parse_relation_list(&vocab, relations, 1)?[0];
            let label = vocab.relation_name(r).to_string();
            let hist = analysis::symmetry_diagnostic(&store, r, &label);
            let path = out.join(format!("symmetry_{}.csv", sanitize(&label)));
            write_text(&path, &hist.to_csv())?;
            log::info!(
                "{label}: {:.1}% of dimensions within 5 degrees of 45/135 ({} degenerate)",
                100.0 * hist.mass_within(&[45.0, 135.0], 5.0),
                hist.degenerate
            );
        }
        "inversion" => {
            let rs = parse_relation_list(&vocab, relations, 2)?;
            let label = format!(
                "{}-vs-{}",
                vocab.relation_name(rs[0]),
                vocab.relation_name(rs[1])
            );
            let hist = analysis::inversion_diagnostic(&store, rs[0], rs[1], &label);
            let path = out.join(format!("inversion_{}.csv", sanitize(&label)));
            write_text(&path, &hist.to_csv())?;
            log::info!(
                "{label}: {:.1}% of dimensions within 10 degrees of 0/180",
                100.0 * hist.mass_within(&[0.0, 180.0], 10.0)
            );
        }
        "composition" => {
            let rs = parse_relation_list(&vocab, relations, 3)?;
            let label = format!(
                "{}-vs-{}o{}",
                vocab.relation_name(rs[0]),
                vocab.relation_name(rs[1]),
                vocab.relation_name(rs[2])
            );
            let hist = analysis::composition_diagnostic(&store, rs[0], rs[1], rs[2], &label);
            let path = out.join(format!("composition_{}.csv", sanitize(&label)));
            write_text(&path, &hist.to_csv())?;
            log::info!(
                "{label}: {:.1}% of dimensions within 10 degrees of 0",
                100.0 * hist.mass_within(&[0.0, 180.0], 10.0)
            );
        }
        "mapping" => {
            let r = parse_relation_list(&vocab, relations, 1)?[0];
            let label = vocab.relation_name(r).to_string();
            let diag = analysis::mapping_diagnostic(&store, r, steep_tolerance, &label);
            let path = out.join(format!("mapping_{}.csv", sanitize(&label)));
            write_text(&path, &diag.histogram.to_csv())?;
            log::info!(
                "{label}: {} steep / {} gentle dimensions (tolerance {} degrees)",
                diag.steep,
                diag.gentle,
                diag.steep_tolerance
            );
        }
        "scatter" => {
            let r = parse_relation_list(&vocab, relations, 1)?[0];
            let label = vocab.relation_name(r).to_string();
            let dims: Vec<usize> = dims
                .ok_or_else(|| Error::config("scatter requires --dims"))?
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|e| Error::config(format!("bad dimension {s:?}: {e}")))
                })
                .collect::<Result<_, _>>()?;
            if let Some(&bad) = dims.iter().find(|&&d| d >= store.dim()) {
                return Err(Error::config(format!(
                    "dimension {bad} out of range (k = {})",
                    store.dim()
                )));
            }
            let pairs_path =
                pairs_file.ok_or_else(|| Error::config("scatter requires --pairs-file"))?;
            let text = fs::read_to_string(pairs_path).map_err(|source| Error::Io {
                path: pairs_path.to_path_buf(),
                source,
            })?;
            let mut pairs = Vec::new();
            for (idx, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let Some((h, t)) = line.split_once('\t') else {
                    log::warn!("{}:{}: expected head<TAB>tail, skipped", pairs_path.display(), idx + 1);
                    continue;
                };
                match (vocab.entity_id(h.trim()), vocab.entity_id(t.trim())) {
                    (Some(h), Some(t)) => pairs.push((h, t)),
                    _ => log::warn!(
                        "{}:{}: unknown entity pair {:?}, skipped",
                        pairs_path.display(),
                        idx + 1,
                        line
                    ),
                }
            }
            let rows = analysis::scatter_export(&store, r, &dims, &pairs);
            let path = out.join(format!("scatter_{}.csv", sanitize(&label)));
            write_text(&path, &analysis::scatter_csv(&rows, &vocab))?;
            log::info!("{}: {} rows exported", label, rows.len());
        }
        other => {
            return Err(Error::config(format!(
                "unknown analysis kind {other:?} (symmetry, inversion, composition, mapping, scatter)"
            )))
        }
    }
    Ok(())
}

fn cmd_countries(
    task: &str,
    dataset: &Path,
    config: Option<&Path>,
    n_seeds: usize,
    seed_base: u64,
    out: Option<&Path>,
) -> Result<(), Error> {
    let task: CountriesTask = task.parse()?;
    if n_seeds == 0 {
        return Err(Error::config("--seeds must be at least 1"));
    }
    let kg = kgdata::load_dataset(dataset)?;
    let regions = kgdata::load_region_list(dataset, &kg.vocab)?;
    let mut cfg = countries_default_config();
    if let Some(path) = config {
        cfg.apply_kv_file(path)?;
    }
    cfg.validate()?;
    let seeds: Vec<u64> = (0..n_seeds as u64).map(|i| seed_base + i).collect();
    let report = evaluator::run_countries(&kg, &regions, &cfg, &seeds)?;
    println!(
        "{task}: AUC-PR {:.4} ± {:.4} over {} seeds ({})",
        report.mean,
        report.std,
        seeds.len(),
        report
            .per_seed
            .iter()
            .map(|v| format!("{v:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_text(&dir.join(format!("countries_{task}.json")), &to_json_pretty(&report))?;
    }
    Ok(())
}

/// Desk-scale defaults for the 272-entity Countries graphs.
fn countries_default_config() -> TrainConfig {
    TrainConfig {
        alpha: 1.0,
        beta: 1.0,
        gamma: 6.0,
        lambda: 0.0,
        dim: 48,
        batch_size: 128,
        num_negatives: 32,
        learning_rate: 0.01,
        max_steps: 3000,
        valid_every: 500,
        ..TrainConfig::default()
    }
}

fn cmd_gen_countries(task: Option<&str>, seed: u64, out: &Path) -> Result<(), Error> {
    let tasks: Vec<CountriesTask> = match task {
        Some(t) => vec![t.parse()?],
        None => vec![CountriesTask::S1, CountriesTask::S2, CountriesTask::S3],
    };
    for task in tasks {
        let dir = out.join(format!("countries_{task}"));
        synth::write_countries_dataset(&dir, task, seed)?;
        log::info!("wrote {}", dir.display());
    }
    Ok(())
}

fn cmd_gen_pattern(kind: &str, out: &Path) -> Result<(), Error> {
    let kg = match kind {
        "symmetry" => synth::symmetry_kg(25, 5, 5),
        "antisymmetry" => synth::antisymmetry_kg(50),
        "inversion" => synth::inversion_kg(25, 5, 5),
        "composition" => synth::composition_kg(17, 2, 2),
        "one-to-n" => synth::one_to_n_kg(5, 9, 1, 1),
        other => {
            return Err(Error::config(format!(
                "unknown pattern kind {other:?} (symmetry, antisymmetry, inversion, composition, one-to-n)"
            )))
        }
    };
    synth::write_dataset(out, &kg)?;
    log::info!(
        "wrote {} ({} entities, {} train / {} valid / {} test)",
        out.display(),
        kg.n_entities(),
        kg.train.len(),
        kg.valid.len(),
        kg.test.len()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levenshtein_basics() {
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", "abc"), 0);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
    }

    #[test]
    fn sanitize_keeps_paths_safe() {
        assert_eq!(sanitize("/award/nominee"), "_award_nominee");
        assert_eq!(sanitize("_similar_to"), "_similar_to");
    }
}
