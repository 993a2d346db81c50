use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use iconary::agents::{
    augment, train_alignment, AlignConfig, AlignmentModel, BaselineDrawer, BaselineGuesser,
};
use iconary::codec::QuantizationSpec;
use iconary::metrics::{
    dataset_stats, drawing_perplexity, eval_drawer, human_ai_scoring, reference_checks,
    replay_eval_guesser_par, write_report_files, DatasetStats, EvalConfig,
};
use iconary::plots::write_cutoff_plots;
use iconary::server::{
    convert_flat_jsonl, export_jsonl, ingest_dataset, render_transcript, self_play, serve,
    AgentChoice, GameStore, SelfPlayConfig, ServeConfig, SessionContext,
};
use iconary::synth::{
    bundled_corpus, planted_training_corpus, synth_corpus, PlantedWorld, BUNDLED_COUNTS,
};
use iconary::{GameRecord, IconLibrary, Split};

#[derive(Parser)]
#[command(
    name = "iconary",
    version,
    about = "Iconary game server, evaluation and data tools"
)]
struct Cli {
    /// Seed for every random choice; runs are reproducible given the seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Icon library manifest (JSON). Defaults to the bundled library.
    #[arg(long, global = true, env = "ICONARY_ICONS")]
    icons: Option<PathBuf>,
    /// Dataset file or directory in the game schema. Defaults to the
    /// bundled synthetic corpus.
    #[arg(long, global = true, env = "ICONARY_DATASET")]
    dataset: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the game server.
    Serve(ServeArgs),
    /// Replay-evaluate a guesser agent on human games.
    EvalGuesser(EvalArgs),
    /// Evaluate a drawer agent (icon F1 and perplexity).
    EvalDrawer(EvalArgs),
    /// Print per-split dataset statistics.
    Stats(StatsArgs),
    /// Print a recorded game as a transcript.
    Replay(ReplayArgs),
    /// Train an icon/word alignment model.
    Align(AlignArgs),
    /// Write phrase-shortened copies of games.
    Augment(AugmentArgs),
    /// Write win-rate-vs-cutoff plots and tables.
    ExportPlots(PlotArgs),
    /// Generate a synthetic corpus.
    Synth(SynthArgs),
    /// Convert flat-layout JSONL to the game schema.
    Convert(ConvertArgs),
    /// Play baseline agents against each other.
    Selfplay(SelfplayArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Seat {
    Human,
    Baseline,
}

impl From<Seat> for AgentChoice {
    fn from(s: Seat) -> Self {
        match s {
            Seat::Human => AgentChoice::Human,
            Seat::Baseline => AgentChoice::Baseline,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AgentKind {
    Baseline,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, env = "ICONARY_PORT", default_value_t = 7878)]
    port: u16,
    #[arg(long, env = "ICONARY_HTTP_PORT", default_value_t = 7879)]
    http_port: u16,
    #[arg(long, env = "ICONARY_DATA_DIR", default_value = "games")]
    data_dir: PathBuf,
    #[arg(long, value_enum, default_value = "human")]
    drawer: Seat,
    #[arg(long, value_enum, default_value = "human")]
    guesser: Seat,
    /// Alignment model for baseline agents and "close" feedback. When omitted
    /// and an agent is needed, one is trained: on the dataset's train split
    /// with --phrases, else on synthetic games matching the synthetic phrases.
    #[arg(long)]
    alignment: Option<PathBuf>,
    /// Draw phrases from this split of the dataset instead of synthetic ones.
    #[arg(long)]
    phrases: Option<Split>,
    #[arg(long, default_value_t = 240.0)]
    budget_seconds: f64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum, default_value = "baseline")]
    agent: AgentKind,
    /// Split name (e.g. ood-dev) of the dataset, or a path.
    #[arg(long)]
    corpus: String,
    #[arg(long)]
    alignment: Option<PathBuf>,
    #[arg(long, default_value = "reports")]
    out: PathBuf,
    /// Worker threads for guesser replay.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    split: Option<Split>,
    #[arg(long)]
    json: bool,
    /// Compare against the published figures; nonzero exit on mismatch.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct ReplayArgs {
    game_id: String,
    /// Look in this game store before the dataset.
    #[arg(long, env = "ICONARY_DATA_DIR")]
    data_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AlignArgs {
    #[arg(long, default_value = "train")]
    corpus: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 5)]
    negatives: usize,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long, default_value = "train")]
    corpus: String,
    #[arg(long)]
    alignment: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Split name or path; all games when omitted.
    #[arg(long)]
    corpus: Option<String>,
    #[arg(long, default_value = "plots")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// Generate this many planted-alignment training games instead of the
    /// five-split corpus.
    #[arg(long)]
    planted: Option<usize>,
    /// Scale the per-split game counts.
    #[arg(long, default_value_t = 1)]
    scale: usize,
}

#[derive(Args)]
struct ConvertArgs {
    input: PathBuf,
    output: PathBuf,
}

#[derive(Args)]
struct SelfplayArgs {
    #[arg(long, default_value_t = 100)]
    games: usize,
    /// Size of the planted training corpus for the agents.
    #[arg(long, default_value_t = 200)]
    train_games: usize,
    /// Store finished games here.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

struct Env {
    seed: u64,
    library: Arc<IconLibrary>,
    icons_path: Option<PathBuf>,
    dataset: Option<PathBuf>,
}

impl Env {
    fn dataset(&self) -> Result<Vec<GameRecord>> {
        match &self.dataset {
            Some(path) => self.ingest(path),
            None => Ok(bundled_corpus()),
        }
    }

    fn ingest(&self, path: &Path) -> Result<Vec<GameRecord>> {
        let (corpus, report) = ingest_dataset(path, Some(&self.library))
            .with_context(|| format!("ingesting {}", path.display()))?;
        eprintln!(
            "ingested {} of {} records from {} file(s); {} violations, {} unparseable",
            report.accepted,
            report.records_seen,
            report.files,
            report.violations.len(),
            report.unparseable.len()
        );
        Ok(corpus)
    }

    /// A split of the dataset, or a corpus file/directory.
    fn corpus(&self, spec: &str) -> Result<(Vec<GameRecord>, Option<Split>)> {
        if let Ok(split) = spec.parse::<Split>() {
            let all = self.dataset()?;
            return Ok((
                all.into_iter().filter(|g| g.split == split).collect(),
                Some(split),
            ));
        }
        let path = Path::new(spec);
        if !path.exists() {
            bail!("`{spec}` is neither a split name nor an existing path");
        }
        Ok((self.ingest(path)?, None))
    }

    fn alignment(&self, path: Option<&Path>) -> Result<Arc<AlignmentModel>> {
        if let Some(p) = path {
            return Ok(Arc::new(
                AlignmentModel::load(p).with_context(|| format!("loading {}", p.display()))?,
            ));
        }
        let train: Vec<_> = self
            .dataset()?
            .into_iter()
            .filter(|g| g.split == Split::Train)
            .collect();
        eprintln!(
            "no --alignment given; training one on {} train games",
            train.len()
        );
        let cfg = AlignConfig {
            seed: self.seed,
            ..Default::default()
        };
        Ok(Arc::new(train_alignment(&train, &cfg)?.model))
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let library = match &cli.icons {
        Some(p) => {
            IconLibrary::load(p).with_context(|| format!("loading icon library {}", p.display()))?
        }
        None => IconLibrary::bundled(),
    };
    let env = Env {
        seed: cli.seed,
        library: Arc::new(library),
        icons_path: cli.icons,
        dataset: cli.dataset,
    };
    match cli.command {
        Command::Serve(a) => cmd_serve(&env, a),
        Command::EvalGuesser(a) => cmd_eval_guesser(&env, a),
        Command::EvalDrawer(a) => cmd_eval_drawer(&env, a),
        Command::Stats(a) => cmd_stats(&env, a),
        Command::Replay(a) => cmd_replay(&env, a),
        Command::Align(a) => cmd_align(&env, a),
        Command::Augment(a) => cmd_augment(&env, a),
        Command::ExportPlots(a) => cmd_plots(&env, a),
        Command::Synth(a) => cmd_synth(&env, a),
        Command::Convert(a) => cmd_convert(a),
        Command::Selfplay(a) => cmd_selfplay(&env, a),
    }
}

fn cmd_serve(env: &Env, a: ServeArgs) -> Result<()> {
    let mut cfg = ServeConfig::new(&a.data_dir, env.library.clone());
    cfg.host = a.host;
    cfg.port = a.port;
    cfg.http_port = a.http_port;
    cfg.drawer = a.drawer.into();
    cfg.guesser = a.guesser.into();
    cfg.seed = env.seed;
    cfg.budget_seconds = a.budget_seconds;
    cfg.art_root = env
        .icons_path
        .as_ref()
        .and_then(|p| p.parent().map(Path::to_path_buf));
    let needs_agent = matches!(a.drawer, Seat::Baseline) || matches!(a.guesser, Seat::Baseline);
    if a.alignment.is_some() || (needs_agent && a.phrases.is_some()) {
        cfg.alignment = Some(env.alignment(a.alignment.as_deref())?);
    } else if needs_agent {
        // synthetic phrases: train on games from the same synthetic world
        let corpus = planted_training_corpus(&env.library, 200, env.seed);
        let model = train_alignment(
            &corpus,
            &AlignConfig {
                seed: env.seed,
                ..Default::default()
            },
        )?
        .model;
        cfg.alignment = Some(Arc::new(model));
    }
    if let Some(split) = a.phrases {
        cfg.phrases = env
            .dataset()?
            .into_iter()
            .filter(|g| g.split == split)
            .map(|g| g.phrase)
            .collect();
        if cfg.phrases.is_empty() {
            bail!("no {} games to take phrases from", split.as_str());
        }
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let handle = serve(cfg).await?;
        println!("game server listening on {}", handle.game_addr);
        println!("http listening on {}", handle.http_addr);
        std::io::stdout().flush()?;
        tokio::signal::ctrl_c().await?;
        eprintln!("shutting down");
        handle.shutdown().await;
        Ok(())
    })
}

fn threads(n: Option<usize>) -> usize {
    n.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn stem(prefix: &str, corpus: &str) -> String {
    let tail: String = Path::new(corpus)
        .file_stem()
        .map_or(corpus.into(), |s| s.to_string_lossy().into_owned())
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{prefix}_{tail}")
}

fn cmd_eval_guesser(env: &Env, a: EvalArgs) -> Result<()> {
    let AgentKind::Baseline = a.agent;
    let (corpus, split) = env.corpus(&a.corpus)?;
    let model = env.alignment(a.alignment.as_deref())?;
    let config = EvalConfig {
        ood_mode: split.is_some_and(Split::is_ood),
        ..Default::default()
    };
    let lib = env.library.clone();
    let report = replay_eval_guesser_par(
        || BaselineGuesser::new(model.clone(), &lib),
        &corpus,
        &config,
        Some(&env.library),
        threads(a.threads),
    );
    print!("{report}");
    let (json, csv) = write_report_files(&report, &a.out, &stem("guesser", &a.corpus))?;
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}

fn cmd_eval_drawer(env: &Env, a: EvalArgs) -> Result<()> {
    let AgentKind::Baseline = a.agent;
    let (corpus, _) = env.corpus(&a.corpus)?;
    let model = env.alignment(a.alignment.as_deref())?;
    let mut agent = BaselineDrawer::new(model, env.library.clone());
    let spec = QuantizationSpec::default();
    let ppl = drawing_perplexity(&agent, &corpus, &env.library, &spec)?;
    let report = eval_drawer(&mut agent, &corpus, &env.library, &spec, Some(ppl));
    print!("{report}");
    let (json, csv) = write_report_files(&report, &a.out, &stem("drawer", &a.corpus))?;
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}

fn cmd_stats(env: &Env, a: StatsArgs) -> Result<()> {
    let corpus = env.dataset()?;
    let stats = dataset_stats(&corpus);
    let shown = match a.split {
        Some(s) => DatasetStats {
            total_games: stats.get(s).games,
            splits: vec![stats.get(s).clone()],
        },
        None => stats.clone(),
    };
    if a.json {
        println!("{}", serde_json::to_string_pretty(&shown)?);
    } else {
        print!("{shown}");
    }
    if a.check {
        let checks = reference_checks(&stats);
        let failed = checks.iter().filter(|c| !c.pass).count();
        for c in &checks {
            println!(
                "{} {:<28} expected {:>9.1} got {}",
                if c.pass { "ok  " } else { "FAIL" },
                c.name,
                c.expected,
                c.actual.map_or("n/a".into(), |v| format!("{v:.1}"))
            );
        }
        if failed > 0 {
            bail!("{failed} of {} reference checks failed", checks.len());
        }
    }
    Ok(())
}

fn cmd_replay(env: &Env, a: ReplayArgs) -> Result<()> {
    let mut found = None;
    if let Some(dir) = &a.data_dir {
        found = GameStore::new(dir).find(&a.game_id)?;
    }
    if found.is_none() {
        found = env.dataset()?.into_iter().find(|g| g.game_id == a.game_id);
    }
    let Some(record) = found else {
        bail!("game `{}` not found", a.game_id)
    };
    print!("{}", render_transcript(&record, Some(&env.library)));
    Ok(())
}

fn cmd_align(env: &Env, a: AlignArgs) -> Result<()> {
    let (corpus, _) = env.corpus(&a.corpus)?;
    let cfg = AlignConfig {
        dim: a.dim,
        epochs: a.epochs,
        negatives: a.negatives,
        learning_rate: a.learning_rate,
        seed: env.seed,
        ..Default::default()
    };
    let trained = train_alignment(&corpus, &cfg)?;
    for (i, l) in trained.epoch_losses.iter().enumerate() {
        log::info!("epoch {:>3}  loss {l:.5}", i + 1);
    }
    trained.model.save(&a.out)?;
    println!(
        "wrote {} ({} words, {} icons, dim {})",
        a.out.display(),
        trained.model.words().len(),
        trained.model.icons().len(),
        trained.model.dim()
    );
    Ok(())
}

fn cmd_augment(env: &Env, a: AugmentArgs) -> Result<()> {
    let (corpus, _) = env.corpus(&a.corpus)?;
    let model = env.alignment(a.alignment.as_deref())?;
    let mut rng = ChaCha8Rng::seed_from_u64(env.seed);
    let mut out = Vec::new();
    let mut unchanged = 0;
    for g in &corpus {
        let aug = augment(g, &model, &mut rng);
        if aug.removed.is_empty() {
            unchanged += 1;
        } else {
            out.push(aug.record);
        }
    }
    fs::write(&a.out, export_jsonl(&out))?;
    println!(
        "wrote {} augmented games to {} ({unchanged} had nothing removable)",
        out.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_plots(env: &Env, a: PlotArgs) -> Result<()> {
    let (corpus, split) = match &a.corpus {
        Some(spec) => env.corpus(spec)?,
        None => (env.dataset()?, None),
    };
    let config = EvalConfig {
        ood_mode: split.is_some_and(Split::is_ood),
        ..Default::default()
    };
    let scores = human_ai_scoring(&corpus, &config);
    print!("{scores}");
    fs::create_dir_all(&a.out)?;
    fs::write(
        a.out.join("curves.json"),
        serde_json::to_string_pretty(&scores)? + "\n",
    )?;
    for p in write_cutoff_plots(&scores, &a.out)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_synth(env: &Env, a: SynthArgs) -> Result<()> {
    let corpus = match a.planted {
        Some(n) => planted_training_corpus(&env.library, n, env.seed),
        None => {
            let counts: Vec<_> = BUNDLED_COUNTS
                .iter()
                .map(|&(s, n)| (s, n * a.scale.max(1)))
                .collect();
            synth_corpus(&env.library, &counts, env.seed)
        }
    };
    fs::write(&a.out, export_jsonl(&corpus))?;
    println!("wrote {} games to {}", corpus.len(), a.out.display());
    Ok(())
}

fn cmd_convert(a: ConvertArgs) -> Result<()> {
    let text =
        fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let (records, errors) = convert_flat_jsonl(&text);
    for (line, e) in &errors {
        eprintln!("line {line}: {e}");
    }
    fs::write(&a.output, export_jsonl(&records))?;
    println!(
        "converted {} games ({} failed) to {}",
        records.len(),
        errors.len(),
        a.output.display()
    );
    Ok(())
}

fn cmd_selfplay(env: &Env, a: SelfplayArgs) -> Result<()> {
    let corpus = planted_training_corpus(&env.library, a.train_games, env.seed);
    let model = Arc::new(
        train_alignment(
            &corpus,
            &AlignConfig {
                seed: env.seed,
                ..Default::default()
            },
        )?
        .model,
    );
    let mut drawer = BaselineDrawer::new(model.clone(), env.library.clone());
    let mut guesser = BaselineGuesser::new(model.clone(), &env.library);
    let mut ctx = SessionContext::with_library(env.library.clone());
    ctx.alignment = Some(model);
    let world = PlantedWorld::from_library(&env.library);
    let mut rng = ChaCha8Rng::seed_from_u64(env.seed.wrapping_add(1));
    let store = a.data_dir.as_ref().map(GameStore::new);
    let today = chrono::Utc::now().date_naive();
    let (mut wins, mut errors) = (0, 0);
    for i in 0..a.games {
        let phrase = world.phrase(&mut rng, false);
        let g = self_play(
            &format!("selfplay-{}-{i:04}", env.seed),
            &phrase,
            &mut drawer,
            &mut guesser,
            &ctx,
            &SelfPlayConfig::default(),
            &mut rng,
        );
        wins += usize::from(g.record.outcome == iconary::domain::Outcome::Won);
        errors += g.protocol_errors.len();
        if let Some(store) = &store {
            store.save(&g.record, today)?;
        }
    }
    println!(
        "{} games, {wins} won ({:.1}%), {errors} protocol errors",
        a.games,
        100.0 * wins as f64 / a.games.max(1) as f64
    );
    Ok(())
}
