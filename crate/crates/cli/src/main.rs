use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kbmap_core::alignment::Side;
use kbmap_core::association::{AssociationLimits, DEFAULT_MAX_ASSOC_LENGTH, DEFAULT_MAX_PATH_DEPTH};
use kbmap_core::exchange::{canonical_ntriples, exchange, materialize_types};
use kbmap_core::fragment::{select_fragment, FragmentConfig};
use kbmap_core::interpretation::ValidityMode;
use kbmap_core::pipeline::{self, load_alignment, load_graph, load_kb, load_setting, PipelineError, RunConfig, Stage};
use kbmap_core::querygen::BlankMode;
use kbmap_core::ranking::Strategy;
use kbmap_core::rdf::{extract_schema, serialize_ntriples, Kb};
use kbmap_core::scenario::{gen_sink_properties, write_scenario, Migration, ScenarioParams};
use kbmap_core::sparql::parse_query;

#[derive(Parser)]
#[command(name = "kbmap", version, about = "Turn KB alignments into executable SPARQL mapping rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discover skeletons, rank renamings and write one CONSTRUCT query per skeleton.
    Generate {
        #[command(flatten)]
        setting: SettingArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Also count renamings under every validity mode.
        #[arg(long)]
        count_all: bool,
        #[arg(long, value_enum, default_value = "scoped")]
        blank_mode: BlankArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Execute mapping queries over source instances and print N-Triples.
    Exchange {
        /// A `.rq` file or a directory of them. Repeatable.
        #[arg(long, required = true)]
        mapping: Vec<PathBuf>,
        /// Source N-Triples; when a schema is included, types are closed
        /// under subclass before querying. Repeatable.
        #[arg(long, required = true)]
        source: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the ranked renaming report.
    Rank {
        #[command(flatten)]
        setting: SettingArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write source/target example pairs for the selected renamings.
    Examples {
        #[command(flatten)]
        setting: SettingArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Examples per renaming.
        #[arg(long, default_value_t = 5)]
        limit: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a sink-properties scenario.
    Synth {
        #[arg(long = "L")]
        depth: usize,
        #[arg(long = "C")]
        breadth: usize,
        #[arg(long = "D")]
        attributes: usize,
        #[arg(long, value_enum, default_value = "breadth-first")]
        migration: MigrationArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Restrict one KB to the neighbourhood of its aligned elements.
    Fragment {
        /// KB N-Triples. Repeatable.
        #[arg(long, required = true)]
        source: Vec<PathBuf>,
        #[arg(long)]
        alignment: PathBuf,
        /// Which side of the alignment the KB plays.
        #[arg(long, value_enum, default_value = "source")]
        side: SideArg,
        #[arg(long = "fragment-depth", alias = "depth")]
        depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SettingArgs {
    /// Source schema and instance files. Repeatable.
    #[arg(long, required = true)]
    source: Vec<PathBuf>,
    /// Target schema files. Repeatable.
    #[arg(long, required = true)]
    target: Vec<PathBuf>,
    #[arg(long)]
    alignment: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Maximum edges per association path (D).
    #[arg(long, default_value_t = DEFAULT_MAX_PATH_DEPTH)]
    max_path_depth: usize,
    /// Maximum edges per root-to-leaf branch of an association (L).
    #[arg(long, default_value_t = DEFAULT_MAX_ASSOC_LENGTH)]
    max_assoc_length: usize,
    #[arg(long, default_value = "kensho")]
    validity: ValidityMode,
    /// Require injective renamings (the default).
    #[arg(long, overrides_with = "no_injective")]
    injective: bool,
    /// Allow two target variables to share a source variable.
    #[arg(long, overrides_with = "injective")]
    no_injective: bool,
    #[arg(long, default_value = "path+consistency")]
    strategy: Strategy,
    #[arg(long)]
    fragment_depth: Option<usize>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, PipelineError> {
        if self.max_path_depth == 0 || self.max_assoc_length == 0 {
            return Err(PipelineError::new(Stage::Config, "--max-path-depth and --max-assoc-length must be at least 1"));
        }
        Ok(RunConfig {
            limits: AssociationLimits { max_path_depth: self.max_path_depth, max_assoc_length: self.max_assoc_length },
            validity: self.validity,
            injective: !self.no_injective,
            strategy: self.strategy,
            fragment_depth: self.fragment_depth,
            ..RunConfig::default()
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BlankArg {
    Scoped,
    Naive,
}

#[derive(Clone, Copy, ValueEnum)]
enum MigrationArg {
    BreadthFirst,
    LeftmostChain,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Source,
    Target,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), PipelineError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| PipelineError::new(Stage::Output, format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(s: &SettingArgs) -> Result<kbmap_core::Setting, PipelineError> {
    load_setting(&s.source, &s.target, &s.alignment)
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Generate { setting, run, count_all, blank_mode, out } => {
            let mut cfg = run.config()?;
            cfg.count_all = count_all;
            cfg.blank_mode = match blank_mode {
                BlankArg::Scoped => BlankMode::Scoped,
                BlankArg::Naive => BlankMode::Naive,
            };
            let st = load(&setting)?;
            pipeline::generate(&st, &cfg)?.write(&out)
        }
        Command::Rank { setting, run, out } => {
            let cfg = run.config()?;
            let st = load(&setting)?;
            write_or_print(out.as_deref(), &pipeline::rank(&st, &cfg))
        }
        Command::Examples { setting, run, limit, out } => {
            let cfg = run.config()?;
            let st = load(&setting)?;
            pipeline::examples(&st, &cfg, limit)?.write(&out)
        }
        Command::Exchange { mapping, source, out } => {
            let files = query_files(&mapping)?;
            let mut queries = Vec::new();
            for f in &files {
                let text = fs::read_to_string(f).map_err(|e| PipelineError::new(Stage::Config, format!("{}: {e}", f.display())))?;
                queries.push(parse_query(&text).map_err(|e| PipelineError::new(Stage::Exchange, format!("{}: {e}", f.display())))?);
            }
            for p in &source {
                if !p.is_file() {
                    return Err(PipelineError::new(Stage::Config, format!("{}: no such file", p.display())));
                }
            }
            let g = load_graph(&source)?;
            let has_schema = extract_schema(&g).map_err(|e| PipelineError::new(Stage::Ingest, e.to_string()))?.concepts().len() > 0;
            let data = if has_schema {
                materialize_types(&Kb::from_graph(&g).map_err(|e| PipelineError::new(Stage::Ingest, e.to_string()))?)
            } else {
                g
            };
            let result = exchange(&data, &queries).map_err(|e| PipelineError::new(Stage::Exchange, e.to_string()))?;
            write_or_print(out.as_deref(), &canonical_ntriples(&result))
        }
        Command::Synth { depth, breadth, attributes, migration, out } => {
            let m = match migration {
                MigrationArg::BreadthFirst => Migration::BreadthFirst,
                MigrationArg::LeftmostChain => Migration::LeftmostChain,
            };
            let p = ScenarioParams::new(depth, breadth, attributes).with_migration(m);
            let st = gen_sink_properties(&p).map_err(|e| PipelineError::new(Stage::Config, e.to_string()))?;
            write_scenario(&out, &p, &st).map_err(|e| PipelineError::new(Stage::Output, e.to_string()))
        }
        Command::Fragment { source, alignment, side, depth, out } => {
            for p in source.iter().chain([&alignment]) {
                if !p.is_file() {
                    return Err(PipelineError::new(Stage::Config, format!("{}: no such file", p.display())));
                }
            }
            let kb = load_kb(&source)?;
            let a = load_alignment(&alignment)?;
            let side = match side {
                SideArg::Source => Side::Source,
                SideArg::Target => Side::Target,
            };
            let f = select_fragment(&kb, &a, side, FragmentConfig { recursion_depth: depth });
            let mut g = f.schema.to_graph();
            g.extend(&f.instances);
            write_or_print(out.as_deref(), &serialize_ntriples(&g))
        }
    }
}

/// Expand directories to their `.rq` files, sorted by name.
fn query_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, PipelineError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = fs::read_dir(p).map_err(|e| PipelineError::new(Stage::Config, format!("{}: {e}", p.display())))?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "rq"))
                .collect();
            found.sort();
            out.extend(found);
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            return Err(PipelineError::new(Stage::Config, format!("{}: no such file", p.display())));
        }
    }
    Ok(out)
}
