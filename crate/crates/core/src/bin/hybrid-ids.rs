use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use hybrid_ids::cascade::{train_cascade, CascadeModel};
use hybrid_ids::classifier::{train, Classifier, GbdtModel, GbdtParams};
use hybrid_ids::dataset::{
    align, load_flow_csv_with, load_host_tensors, split_stratified, AlignedDataset, FlowCsvOptions,
    LabelMap,
};
use hybrid_ids::experiment::{run_experiment, ClassifierConfig, ExperimentConfig, GbdtOverrides};
use hybrid_ids::fusion::{fuse, FusionMode, HostSelection};
use hybrid_ids::labeled::{LabeledMatrix, MatrixOrigin};
use hybrid_ids::metrics::evaluate;
use hybrid_ids::reduction::{fit_pca, make_selection_plan};
use hybrid_ids::report::{parse_json, render_text, report_render, write_report, ReportFormat};
use hybrid_ids::synth::{generate_synthetic, SynthSpec};
use hybrid_ids::{Error, Result};

#[derive(Parser)]
#[command(name = "hybrid-ids", version, about = "Hybrid flow + host-log intrusion detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic corpus (flow CSV, HFT1 tensors, label map).
    Synth(SynthArgs),
    /// Align flow and host inputs by sample id and split train/test.
    Ingest(IngestArgs),
    /// Select host sub-matrices and concatenate them with flow features.
    Fuse(FuseArgs),
    /// Fit PCA on a training matrix and project matrices onto it.
    Reduce(ReduceArgs),
    /// Train a flat multiclass model.
    Train(TrainArgs),
    /// Train a two-stage cascade.
    Cascade(TrainArgs),
    /// Score a flat or cascade model on a labeled matrix.
    Eval(EvalArgs),
    /// Re-render a JSON evaluation report.
    Report(ReportArgs),
    /// Run the full pipeline from a config file.
    Run(RunArgs),
    /// Print the selection plan for a source/target shape and seed.
    Plan(PlanArgs),
    /// Print the trees of a flat model as text.
    Dump(DumpArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// TOML generator spec; overrides --benchmark.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Total sample count of the built-in benchmark spec.
    #[arg(long, default_value_t = 20_000)]
    benchmark: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    flow: PathBuf,
    #[arg(long)]
    host: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value = "id")]
    id_column: String,
    #[arg(long, default_value_t = 0.3)]
    test_fraction: f64,
    #[arg(long)]
    min_class_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving train.aln and test.aln.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FuseArgs {
    /// Aligned dataset (.aln) files; one fused matrix is written per input.
    #[arg(long = "input", required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "h3")]
    mode: FusionMode,
    /// Event selection target as ROWSxCOLS.
    #[arg(long, value_parser = parse_dims)]
    event_select: Option<(usize, usize)>,
    /// Message selection target as ROWSxCOLS.
    #[arg(long, value_parser = parse_dims)]
    message_select: Option<(usize, usize)>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReduceArgs {
    /// Matrix the projection is fitted on; it is projected as well.
    #[arg(long)]
    train: PathBuf,
    /// Further matrices projected with the fitted model.
    #[arg(long = "apply")]
    apply: Vec<PathBuf>,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    /// Classifier TOML (`[params]`, `[stage1]`, `[stage2]` tables).
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value = "report")]
    stem: String,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "text")]
    format: ReportFormat,
    /// Write files here instead of printing text to stdout.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long, value_parser = parse_dims)]
    source: (usize, usize),
    #[arg(long, value_parser = parse_dims)]
    target: (usize, usize),
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct DumpArgs {
    #[arg(long)]
    model: PathBuf,
}

fn parse_dims(s: &str) -> std::result::Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(r)?, parse(c)?))
}

fn stem_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "matrix".into())
}

fn synth(args: SynthArgs) -> Result<()> {
    let spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            toml::from_str(&text).map_err(|e| Error::SpecInvalid(e.to_string()))?
        }
        None => SynthSpec::benchmark(args.benchmark, args.seed),
    };
    let files = generate_synthetic(&spec)?.write(&args.out)?;
    println!("{}", files.flow_csv.display());
    println!("{}", files.host_tensors.display());
    println!("{}", files.label_map.display());
    Ok(())
}

fn ingest(args: IngestArgs) -> Result<()> {
    let mut opts = FlowCsvOptions::new(args.label_column);
    opts.id_column = Some(args.id_column);
    let mut flow = load_flow_csv_with(&args.flow, &opts)?;
    if let Some(min) = args.min_class_size {
        flow = flow.drop_rare_classes(min);
    }
    let host = load_host_tensors(&args.host)?;
    let labels = LabelMap::load(&args.labels)?;
    let ds = align(&flow, &host, &labels)?;
    let (train_ds, test_ds) = split_stratified(&ds, args.test_fraction, args.seed)?;
    train_ds.save(args.out.join("train.aln"))?;
    test_ds.save(args.out.join("test.aln"))?;
    println!("aligned {} samples: {} train, {} test", ds.len(), train_ds.len(), test_ds.len());
    Ok(())
}

fn fuse_cmd(args: FuseArgs) -> Result<()> {
    for input in &args.inputs {
        let ds = AlignedDataset::load(input)?;
        let host = ds.dims().host;
        let plan = |uses: bool, target: Option<(usize, usize)>, source| match (uses, target) {
            (true, Some(t)) => make_selection_plan(source, t, args.seed).map(Some),
            _ => Ok(None),
        };
        let selection = HostSelection {
            event: plan(args.mode.uses_event(), args.event_select, (host.m, host.n))?,
            message: plan(args.mode.uses_message(), args.message_select, (host.p, host.q))?,
        };
        let fused = fuse(&ds, args.mode, &selection)?;
        let out = args.out_dir.join(format!("{}.hyb", stem_of(input)));
        hybrid_ids::LabeledMatrix::from(fused.clone()).save(&out, fused.origin())?;
        println!("{} ({} x {})", out.display(), fused.len(), fused.width());
    }
    Ok(())
}

fn reduce(args: ReduceArgs) -> Result<()> {
    let (train_m, _) = LabeledMatrix::load(&args.train)?;
    let pca = fit_pca(&train_m.values, args.k)?;
    pca.save(args.out_dir.join("pca.pca1"))?;
    for input in std::iter::once(&args.train).chain(&args.apply) {
        let (mut m, _) = LabeledMatrix::load(input)?;
        m.values = pca.apply(&m.values)?;
        let out = args.out_dir.join(format!("{}.hyb", stem_of(input)));
        m.save(&out, MatrixOrigin::Projected)?;
        println!("{}", out.display());
    }
    Ok(())
}

fn classifier_config(args: &TrainArgs) -> Result<ClassifierConfig> {
    let mut cfg = match &args.params {
        Some(path) => ClassifierConfig::load(path)?,
        None => ClassifierConfig::default(),
    };
    cfg.params = GbdtOverrides {
        rounds: args.rounds,
        max_depth: args.max_depth,
        learning_rate: args.learning_rate,
        seed: args.seed,
        ..GbdtOverrides::default()
    }
    .apply(&cfg.params);
    Ok(cfg)
}

fn train_flat(args: TrainArgs) -> Result<()> {
    let params: GbdtParams = classifier_config(&args)?.params;
    let (m, _) = LabeledMatrix::load(&args.input)?;
    let model = train(&m.values, &m.labels, m.label_map.len(), &params)?;
    model.save(&args.out)?;
    info!("trained {} trees", model.trees().len());
    println!("{}", args.out.display());
    Ok(())
}

fn train_cascade_cmd(args: TrainArgs) -> Result<()> {
    let cfg = classifier_config(&args)?;
    let (m, _) = LabeledMatrix::load(&args.input)?;
    let model = train_cascade(&m, &cfg.stage1(), &cfg.stage2())?;
    model.save(&args.out)?;
    println!("{}", args.out.display());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let (test, _) = LabeledMatrix::load(&args.input)?;
    let bytes = std::fs::read(&args.model).map_err(|e| Error::io(&args.model, e))?;
    let report = match bytes.get(..4) {
        Some(b"CAS1") => CascadeModel::from_bytes(&bytes)?.evaluate(&test)?,
        _ => {
            let model = GbdtModel::from_bytes(&bytes)?;
            let pred = model.predict(&test.values)?;
            evaluate(&test.labels, &pred.labels, &test.label_map)?
        }
    };
    write_report(&report, &args.out_dir, &args.stem)?;
    print!("{}", render_text(&report));
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.input).map_err(|e| Error::io(&args.input, e))?;
    let report = parse_json(&text)?;
    match &args.out_dir {
        Some(dir) => {
            for path in report_render(&report, args.format, dir, &stem_of(&args.input))? {
                println!("{}", path.display());
            }
        }
        None => print!("{}", render_text(&report)),
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(rounds) = args.rounds {
        cfg.rounds = rounds;
    }
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    let outcome = run_experiment(&cfg)?;
    print!("{}", outcome.mean.render_text());
    Ok(())
}

fn plan(args: PlanArgs) -> Result<()> {
    let plan = make_selection_plan(args.source, args.target, args.seed)?;
    println!("{}", serde_json::to_string(&plan).map_err(|e| Error::Numeric(e.to_string()))?);
    Ok(())
}

fn dump(args: DumpArgs) -> Result<()> {
    let text = GbdtModel::load(&args.model)?.dump();
    // a closed pipe (e.g. `| head`) is not an error
    let _ = std::io::Write::write_all(&mut std::io::stdout().lock(), text.as_bytes());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Ingest(a) => ingest(a),
        Command::Fuse(a) => fuse_cmd(a),
        Command::Reduce(a) => reduce(a),
        Command::Train(a) => train_flat(a),
        Command::Cascade(a) => train_cascade_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Report(a) => report(a),
        Command::Run(a) => run(a),
        Command::Plan(a) => plan(a),
        Command::Dump(a) => dump(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind().exit_code())
        }
    }
}
