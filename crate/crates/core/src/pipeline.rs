//! End-to-end runs: load a setting from disk, discover skeletons, rank
//! their renamings and render the output files.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::alignment::{validate_alignment, Alignment, Side};
use crate::association::AssociationLimits;
use crate::exchange::generate_examples;
use crate::fragment::{select_fragment, FragmentConfig};
use crate::interpretation::{build_skeletons, count_mappings, enumerate_renamings, PruneScope, Renaming, Skeleton, SkeletonContext, ValidityMode};
use crate::querygen::{build_mapping_query, query_prefixes, BlankMode};
use crate::ranking::{rank_renamings, ranked_tsv, score_renaming, RankedRenaming, Strategy, TargetPaths};
use crate::rdf::{parse_ntriples, Graph, Kb};
use crate::sparql::serialize_query;
use crate::Setting;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    Alignment,
    Fragment,
    Discovery,
    Querygen,
    Exchange,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Alignment => "alignment",
            Stage::Fragment => "fragment",
            Stage::Discovery => "discovery",
            Stage::Querygen => "querygen",
            Stage::Exchange => "exchange",
            Stage::Output => "output",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("stage={stage}: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: Stage, message: impl Into<String>) -> Self {
        PipelineError { stage, message: message.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub limits: AssociationLimits,
    pub validity: ValidityMode,
    pub injective: bool,
    pub strategy: Strategy,
    pub fragment_depth: Option<usize>,
    pub count_all: bool,
    pub blank_mode: BlankMode,
    pub prune: Option<PruneScope>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            limits: AssociationLimits::default(),
            validity: ValidityMode::Kensho,
            injective: true,
            strategy: Strategy::PathConsistency,
            fragment_depth: None,
            count_all: false,
            blank_mode: BlankMode::Scoped,
            prune: Some(PruneScope::AnySource),
        }
    }
}

fn read(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| PipelineError::new(Stage::Config, format!("{}: {e}", path.display())))
}

/// Parse and merge N-Triples files.
pub fn load_graph(paths: &[PathBuf]) -> Result<Graph, PipelineError> {
    let mut g = Graph::new();
    for p in paths {
        let parsed = parse_ntriples(&read(p)?).map_err(|e| PipelineError::new(Stage::Ingest, format!("{}: {e}", p.display())))?;
        g.extend(&parsed);
    }
    Ok(g)
}

pub fn load_kb(paths: &[PathBuf]) -> Result<Kb, PipelineError> {
    let g = load_graph(paths)?;
    let names: Vec<String> = paths.iter().map(|p| p.display().to_string()).collect();
    Kb::from_graph(&g).map_err(|e| PipelineError::new(Stage::Ingest, format!("{}: {e}", names.join(", "))))
}

pub fn load_alignment(path: &Path) -> Result<Alignment, PipelineError> {
    Alignment::parse(&read(path)?).map_err(|e| PipelineError::new(Stage::Alignment, format!("{}: {e}", path.display())))
}

/// Source files (schema and instances), target files and the alignment.
/// Missing files are reported before anything is parsed.
pub fn load_setting(source: &[PathBuf], target: &[PathBuf], alignment: &Path) -> Result<Setting, PipelineError> {
    for p in source.iter().chain(target).map(PathBuf::as_path).chain([alignment]) {
        if !p.is_file() {
            return Err(PipelineError::new(Stage::Config, format!("{}: no such file", p.display())));
        }
    }
    let setting = Setting { source: load_kb(source)?, target: load_kb(target)?, alignment: load_alignment(alignment)? };
    let report = validate_alignment(&setting.alignment, &setting.source.schema, &setting.target.schema);
    if !report.is_empty() {
        return Err(PipelineError::new(Stage::Alignment, format!("{}: {}", alignment.display(), report.join("; "))));
    }
    Ok(setting)
}

/// Relative path to file contents. Writing it out is the only side effect
/// of a run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Artifacts {
    pub files: BTreeMap<String, String>,
}

impl Artifacts {
    pub fn write(&self, dir: &Path) -> Result<(), PipelineError> {
        let io = |p: &Path, e: std::io::Error| PipelineError::new(Stage::Output, format!("{}: {e}", p.display()));
        for (rel, text) in &self.files {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
            }
            fs::write(&path, text).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }
}

/// One skeleton's renamings, their costs and the ranking.
pub struct SkeletonReport {
    pub skeleton: Skeleton,
    pub renamings: Vec<Renaming>,
    pub ranked: Vec<RankedRenaming>,
}

impl SkeletonReport {
    /// Indexes of the renamings compiled into the skeleton's query: rank 1
    /// under the strategy, ties broken by the lowest coverage cost, in
    /// enumeration order.
    pub fn selected_indexes(&self) -> Vec<usize> {
        let top: Vec<&RankedRenaming> = self.ranked.iter().filter(|r| r.rank == 1).collect();
        let best = top.iter().map(|r| r.costs.coverage).min();
        let mut idx: Vec<usize> = top.iter().filter(|r| Some(r.costs.coverage) == best).map(|r| r.index).collect();
        idx.sort_unstable();
        idx
    }

    pub fn selected(&self) -> Vec<&Renaming> {
        self.selected_indexes().into_iter().map(|i| &self.renamings[i]).collect()
    }
}

/// Apply the fragment depth, if any, to both sides.
pub fn prepare(setting: &Setting, cfg: &RunConfig) -> Setting {
    match cfg.fragment_depth {
        None => setting.clone(),
        Some(d) => {
            let fc = FragmentConfig { recursion_depth: d };
            Setting {
                source: select_fragment(&setting.source, &setting.alignment, Side::Source, fc),
                target: select_fragment(&setting.target, &setting.alignment, Side::Target, fc),
                alignment: setting.alignment.clone(),
            }
        }
    }
}

/// Skeletons with their ranked renamings. Skeletons without a valid
/// renaming are kept with an empty list.
pub fn discover(setting: &Setting, cfg: &RunConfig) -> (Vec<SkeletonReport>, TargetPaths) {
    let a = &setting.alignment;
    let tp = TargetPaths::new(&setting.target.schema, a, cfg.limits.max_path_depth);
    let reports = build_skeletons(setting, cfg.limits, cfg.prune)
        .into_iter()
        .map(|sk| {
            let renamings = enumerate_renamings(&sk, a, cfg.validity, cfg.injective);
            let ctx = SkeletonContext::new(&sk, a);
            let costs: Vec<_> = renamings.iter().map(|re| score_renaming(re, &ctx, a, &tp)).collect();
            let ranked = rank_renamings(&costs, cfg.strategy);
            SkeletonReport { skeleton: sk, renamings, ranked }
        })
        .collect();
    (reports, tp)
}

fn file_stem(k: usize, sk: &Skeleton) -> String {
    format!("{k:03}_{}", sk.label())
}

/// The full `generate` output: one query per skeleton with a valid
/// renaming, the renaming dump, the ranked report and a manifest.
pub fn generate(setting: &Setting, cfg: &RunConfig) -> Result<Artifacts, PipelineError> {
    let setting = prepare(setting, cfg);
    let (reports, _) = discover(&setting, cfg);
    let prefixes = query_prefixes(&setting);
    let a = &setting.alignment;
    let mut files = BTreeMap::new();
    let mut dump = String::new();
    let mut tsv = ranked_tsv(&[], |_| String::new());
    let mut queries = Vec::new();
    for (k, r) in reports.iter().enumerate() {
        let sk = &r.skeleton;
        let ids: Vec<&str> = sk.coverage_ids(a).into_iter().collect();
        dump.push_str(&format!("## {k} {} covers {}\n", sk.label(), ids.join(",")));
        for (j, re) in r.renamings.iter().enumerate() {
            dump.push_str(&format!("# {k}.{j}\n{}", re.dump(sk)));
        }
        let block = ranked_tsv(&r.ranked, |j| format!("{k}.{j}"));
        tsv.push_str(block.split_once('\n').map_or("", |(_, rest)| rest));
        let selected: Vec<Renaming> = r.selected().into_iter().cloned().collect();
        if selected.is_empty() {
            continue;
        }
        let q = build_mapping_query(sk, &selected, &prefixes, cfg.blank_mode)
            .map_err(|e| PipelineError::new(Stage::Querygen, format!("skeleton {k} {}: {e}", sk.label())))?;
        let name = format!("queries/{}.rq", file_stem(k, sk));
        files.insert(name.clone(), serialize_query(&q));
        queries.push(name);
    }
    let total: usize = reports.iter().map(|r| r.renamings.len()).sum();
    let mut manifest = json!({
        "config": {
            "maxPathDepth": cfg.limits.max_path_depth,
            "maxAssocLength": cfg.limits.max_assoc_length,
            "validity": cfg.validity.name(),
            "injective": cfg.injective,
            "strategy": cfg.strategy.to_string(),
            "fragmentDepth": cfg.fragment_depth,
        },
        "correspondences": a.len(),
        "skeletons": reports.len(),
        "renamings": total,
        "queries": queries,
    });
    if cfg.count_all {
        let skeletons: Vec<Skeleton> = reports.iter().map(|r| r.skeleton.clone()).collect();
        let c = count_mappings(&skeletons, a, cfg.injective);
        manifest["counts"] = json!({"baseline": c.baseline, "r2r": c.r2r, "c2a": c.c2a, "kensho": c.kensho});
    }
    let mut manifest = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    manifest.push('\n');
    files.insert("renamings.txt".into(), dump);
    files.insert("ranked.tsv".into(), tsv);
    files.insert("manifest.json".into(), manifest);
    Ok(Artifacts { files })
}

/// Review examples for the rank-1 renamings of every skeleton, one file per
/// skeleton that has any.
pub fn examples(setting: &Setting, cfg: &RunConfig, limit: usize) -> Result<Artifacts, PipelineError> {
    let setting = prepare(setting, cfg);
    let (reports, _) = discover(&setting, cfg);
    let prefixes = query_prefixes(&setting);
    let mut files = BTreeMap::new();
    for (k, r) in reports.iter().enumerate() {
        let sk = &r.skeleton;
        let mut text = String::new();
        for j in r.selected_indexes() {
            let re = &r.renamings[j];
            let ex = generate_examples(&setting.source, sk, re, &prefixes, limit)
                .map_err(|e| PipelineError::new(Stage::Querygen, format!("renaming {k}.{j}: {e}")))?;
            if ex.is_empty() {
                continue;
            }
            text.push_str(&format!("## renaming {k}.{j}\n{}", re.dump(sk)));
            for (n, e) in ex.iter().enumerate() {
                text.push_str(&format!("\n### example {n}\n{}", e.render()));
            }
            text.push('\n');
        }
        if !text.is_empty() {
            files.insert(format!("examples/{}.txt", file_stem(k, sk)), text);
        }
    }
    Ok(Artifacts { files })
}

/// The ranked report alone.
pub fn rank(setting: &Setting, cfg: &RunConfig) -> String {
    let setting = prepare(setting, cfg);
    let (reports, _) = discover(&setting, cfg);
    let mut out = ranked_tsv(&[], |_| String::new());
    for (k, r) in reports.iter().enumerate() {
        let block = ranked_tsv(&r.ranked, |j| format!("{k}.{j}"));
        out.push_str(block.split_once('\n').map_or("", |(_, rest)| rest));
    }
    out
}
