use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use metapath_core::dataset::{
    generate_synthetic, load_dataset, load_graph, random_graph, save_dataset, DatasetBundle,
    SyntheticOptions,
};
use metapath_core::{
    EnumStrategy, Gtn, HeteroGraph, MetapathGraph, Mode, ScoreTable, TrainConfig, TrainReport,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "metapath", version, about = "Metapath GTN training runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on a dataset directory and report per-epoch metrics.
    Run(RunArgs),
    /// Write a random graph with synthetic features, labels and splits.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Gcn,
    GgtnVanilla,
    GgtnSplit,
    Wgtn,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Gcn => Mode::GcnBaseline,
            ModeArg::GgtnVanilla => Mode::GgtnVanilla,
            ModeArg::GgtnSplit => Mode::GgtnSplit,
            ModeArg::Wgtn => Mode::Wgtn,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EnumArg {
    Dfs,
    Level,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "ggtn-split")]
    mode: ModeArg,
    /// Graph transformer layers; metapaths have `layers + 1` edges.
    #[arg(long, default_value_t = 3)]
    layers: usize,
    #[arg(long, default_value_t = 0)]
    num_walks: usize,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    #[arg(long, default_value_t = 300)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    eval_every: usize,
    #[arg(long, default_value_t = 28_800)]
    timeout_seconds: u64,
    #[arg(long = "enum", value_enum, default_value = "level")]
    enumeration: EnumArg,
    /// Sample walks once and reuse them every epoch.
    #[arg(long)]
    freeze_walks: bool,
    /// Run on a single worker thread.
    #[arg(long)]
    deterministic: bool,
    /// Ignore features/labels/splits on disk and use synthetic filler.
    #[arg(long)]
    synthetic: bool,
    /// Include the last epoch's metapath graph in the report.
    #[arg(long)]
    dump_mg: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    vertices: usize,
    #[arg(long)]
    edges: usize,
    #[arg(long, default_value_t = 4)]
    edge_types: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Generate(args) => generate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn generate(args: GenerateArgs) -> AnyResult<()> {
    let g = random_graph(args.vertices, args.edges, args.edge_types, args.seed)?;
    let bundle = generate_synthetic(&g, args.seed, &SyntheticOptions::default())?;
    save_dataset(&bundle, &args.out)?;
    eprintln!(
        "wrote {} vertices, {} edges to {}",
        args.vertices,
        args.edges,
        args.out.display()
    );
    Ok(())
}

fn load(dir: &Path, synthetic: bool, seed: u64) -> AnyResult<DatasetBundle> {
    if !synthetic {
        return Ok(load_dataset(dir)?);
    }
    let files = load_graph(dir)?;
    let opts = SyntheticOptions {
        retype_edges: files.manifest.num_edge_types == 1,
        ..SyntheticOptions::default()
    };
    let mut bundle = generate_synthetic(&files.graph, seed, &opts)?;
    if !opts.retype_edges {
        bundle.edge_type_names = files.edge_type_names;
    }
    bundle.vertex_names = files.vertex_names;
    Ok(bundle)
}

fn run(args: RunArgs) -> AnyResult<()> {
    if args.deterministic {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build_global()?;
    }
    let config = TrainConfig {
        mode: args.mode.into(),
        transformer_layers: args.layers,
        num_walks: args.num_walks,
        hidden: args.hidden,
        epochs: args.epochs,
        lr: args.lr,
        seed: args.seed,
        eval_every: args.eval_every,
        timeout: Some(Duration::from_secs(args.timeout_seconds)),
        strategy: match args.enumeration {
            EnumArg::Dfs => EnumStrategy::DepthFirst,
            EnumArg::Level => EnumStrategy::LevelByLevel,
        },
        freeze_walks: args.freeze_walks,
    };
    config.validate()?;

    let bundle = load(&args.dataset, args.synthetic, args.seed)?;
    let fixed_table = bundle
        .score_table
        .clone()
        .map(ScoreTable::from_scores)
        .transpose()?;
    // The baseline and a fixed table without a self-edge column run on the
    // bare graph.
    let graph: HeteroGraph = match &fixed_table {
        _ if config.mode == Mode::GcnBaseline => bundle.graph.clone(),
        Some(t) if t.num_types() == bundle.graph.num_edge_types() => {
            if config.mode == Mode::Wgtn {
                return Err("wgtn walks need self-edges, but the dataset's score table has no self-edge column".into());
            }
            bundle.graph.clone()
        }
        _ => bundle.graph.add_self_edges()?,
    };
    let mut gtn = Gtn::new(
        graph,
        &bundle.features,
        config.mode,
        config.transformer_layers,
        config.strategy,
    )?;
    if let (Some(t), true) = (fixed_table, config.mode != Mode::GcnBaseline) {
        gtn = gtn.with_fixed_table(t)?;
    }

    let stdout = std::io::stdout();
    let mut last_mg: Option<MetapathGraph> = None;
    let (report, _) = metapath_core::train(
        &gtn,
        &bundle.labels,
        &bundle.masks,
        bundle.num_classes,
        &config,
        |m, mg| {
            let mut out = stdout.lock();
            let _ = match m.test_accuracy {
                Some(acc) => writeln!(
                    out,
                    "{}\t{:.6}\t{:.6}\t{:.4}",
                    m.epoch, m.loss, m.seconds, acc
                ),
                None => writeln!(out, "{}\t{:.6}\t{:.6}", m.epoch, m.loss, m.seconds),
            };
            if args.dump_mg {
                last_mg = Some(mg.clone());
            }
        },
    )?;
    if report.timed_out {
        eprintln!("TIMEOUT after {} epochs", report.epochs.len());
    }

    let doc = report_json(&args, &config, &bundle, &report, last_mg.as_ref());
    let text = serde_json::to_string_pretty(&doc)?;
    match &args.report {
        Some(path) => {
            std::fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn report_json(
    args: &RunArgs,
    config: &TrainConfig,
    bundle: &DatasetBundle,
    report: &TrainReport,
    mg: Option<&MetapathGraph>,
) -> serde_json::Value {
    let mut doc = json!({
        "config": {
            "dataset": args.dataset.display().to_string(),
            "mode": config.mode,
            "transformer_layers": config.transformer_layers,
            "l": config.metapath_length(),
            "num_walks": config.num_walks,
            "hidden": config.hidden,
            "epochs": config.epochs,
            "lr": config.lr,
            "seed": config.seed,
            "eval_every": config.eval_every,
            "timeout_seconds": args.timeout_seconds,
            "enum": match config.strategy {
                EnumStrategy::DepthFirst => "dfs",
                EnumStrategy::LevelByLevel => "level",
            },
            "freeze_walks": config.freeze_walks,
            "deterministic": args.deterministic,
            "synthetic": args.synthetic,
        },
        "dataset": {
            "num_vertices": bundle.graph.num_vertices(),
            "num_edges": bundle.graph.num_edges(),
            "num_edge_types": bundle.graph.num_edge_types(),
            "num_classes": bundle.num_classes,
            "vertex_names": bundle.vertex_names,
        },
        "epochs": report.epochs,
        "peak_test_accuracy": report.peak_test_accuracy,
        "average_epoch_seconds": report.average_epoch_seconds,
        "timed_out": report.timed_out,
    });
    if let Some(mg) = mg {
        doc["metapath_graph"] = mg
            .edges()
            .map(|(s, d, w)| json!({"src": bundle.vertex_name(s), "dst": bundle.vertex_name(d), "weight": w}))
            .collect();
    }
    doc
}
