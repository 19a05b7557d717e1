use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use iacn_core::retrieval::{onehot_sq_distances, rank_from_distances, topk_from_distances};
use iacn_core::synth::write_edges_csv;
use iacn_core::{
    chronological_split, evaluate, generate, replay_neighborhoods, Ablation, Checkpoint,
    EmptyInfluence, EventLog, ItemId, LshIndex, Mode, Model, OptimizerKind, RandomSynth, Ranking,
    SynthConfig, TrainConfig, Trainer, UserId,
};

#[derive(Parser, Debug)]
#[command(
    name = "iacn",
    version,
    about = "Temporal co-evolutionary recommender with neighbor influence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
    /// Flat `key=value` file; keys are the long flag names, flags override it
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate an interaction log and print its statistics
    Ingest {
        /// Keep only the N most active items
        #[arg(long)]
        top_items: Option<usize>,
        /// With --top-items, keep users with at least this many remaining events
        #[arg(long, default_value_t = 5)]
        min_user_events: usize,
        /// Write the (filtered) log here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print neighborhood and repetition statistics
    Stats,
    /// Train on the training segment, writing a checkpoint every epoch
    Train,
    /// Replay the validation segment, then rank every test event
    Evaluate,
    /// Print the top-k items for a user at a time
    Recommend {
        /// User id (external id with --data, dense index otherwise)
        #[arg(long)]
        user: String,
        /// Query time in the log's raw time units
        #[arg(long)]
        at: f64,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Also print the rank of this item
        #[arg(long)]
        item: Option<String>,
    },
    /// Generate a synthetic log with a planted influence graph
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Ground-truth edge file, default `<out>.edges.csv`
        #[arg(long)]
        edges_out: Option<PathBuf>,
        #[arg(long)]
        users: Option<usize>,
        #[arg(long)]
        items: Option<usize>,
        #[arg(long)]
        events: Option<usize>,
        #[arg(long)]
        num_edges: Option<usize>,
        #[arg(long)]
        edge_weight: Option<f64>,
        #[arg(long)]
        decay: Option<f64>,
        #[arg(long)]
        base_rate: Option<f64>,
        #[arg(long)]
        concentration: Option<f64>,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum AblationArg {
    None,
    InfluenceOff,
    LatentCross,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum AnnArg {
    Exact,
    Lsh,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum OptimizerArg {
    Adam,
    Sgd,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum EmptyInfluenceArg {
    Decay,
    Hold,
}

#[derive(Clone, Debug, PartialEq)]
struct Split([f64; 3]);

impl std::str::FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        match parts.as_slice() {
            [a, b, c] => Ok(Split([*a, *b, *c])),
            _ => Err(format!(
                "expected three comma-separated fractions, got {s:?}"
            )),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Cap {
    Unbounded,
    At(usize),
}

impl std::str::FromStr for Cap {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "none" | "inf" => Ok(Cap::Unbounded),
            _ => s.parse().map(Cap::At).map_err(|e| format!("{s:?}: {e}")),
        }
    }
}

impl fmt::Display for Cap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cap::Unbounded => write!(f, "none"),
            Cap::At(c) => write!(f, "{c}"),
        }
    }
}

/// Settings shared by every subcommand; each is also a config-file key.
#[derive(Args, Clone, Debug, Default)]
struct Flags {
    /// Interaction log (CSV)
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
    /// Evaluation report (TSV); the summary goes to `<report>.summary`
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    lr: Option<f64>,
    #[arg(long = "lambda-u", global = true)]
    lambda_u: Option<f64>,
    #[arg(long = "lambda-i", global = true)]
    lambda_i: Option<f64>,
    #[arg(long, global = true)]
    history_cap: Option<usize>,
    /// Neighbors kept per user, or `none`
    #[arg(long, global = true)]
    neighborhood_cap: Option<Cap>,
    #[arg(long, global = true)]
    window_cap: Option<usize>,
    /// Train/validation/test fractions
    #[arg(long, global = true, value_name = "A,B,C")]
    split: Option<Split>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    ablation: Option<AblationArg>,
    #[arg(long, global = true, value_enum)]
    ann: Option<AnnArg>,
    #[arg(long, global = true)]
    lsh_tables: Option<usize>,
    #[arg(long, global = true)]
    lsh_bits: Option<usize>,
    #[arg(long, global = true, value_enum)]
    optimizer: Option<OptimizerArg>,
    #[arg(long, global = true)]
    share_item_attention: Option<bool>,
    #[arg(long, global = true)]
    influence_softmax: Option<bool>,
    #[arg(long, global = true, value_enum)]
    empty_influence: Option<EmptyInfluenceArg>,
}

macro_rules! overlay {
    ($base:expr, $top:expr; $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl Flags {
    fn overlay(&mut self, top: &Flags) {
        overlay!(self, top; data, checkpoint, report, dim, epochs, lr, lambda_u, lambda_i, history_cap,
            neighborhood_cap, window_cap, split, seed, ablation, ann, lsh_tables, lsh_bits, optimizer,
            share_item_attention, influence_softmax, empty_influence);
    }
}

#[derive(Parser, Debug)]
#[command(no_binary_name = true)]
struct ConfigFile {
    #[command(flatten)]
    flags: Flags,
}

/// A problem with the invocation rather than with the data.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn read_config(path: &Path) -> Result<Flags> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut args = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{}:{}: expected key=value", path.display(), n + 1)))?;
        args.push(format!("--{}", key.trim()));
        args.push(value.trim().to_string());
    }
    ConfigFile::try_parse_from(args)
        .map(|c| c.flags)
        .map_err(|e| usage(format!("config {}: {}", path.display(), first_line(&e))))
}

fn first_line(e: &clap::Error) -> String {
    let full = e.to_string();
    full.lines()
        .next()
        .unwrap_or_default()
        .trim_start_matches("error: ")
        .to_string()
}

/// Fully resolved settings: defaults, then the config file, then flags.
struct Resolved {
    flags: Flags,
    train: TrainConfig,
    ann: AnnArg,
    lsh_tables: usize,
    lsh_bits: usize,
}

impl Resolved {
    fn new(flags: Flags) -> Result<Self> {
        let mut t = TrainConfig::default();
        let f = &flags;
        if let Some(v) = f.dim {
            t.dim = v;
        }
        if let Some(v) = f.epochs {
            t.epochs = v;
        }
        if let Some(v) = f.lr {
            t.learning_rate = v;
        }
        if let Some(v) = f.lambda_u {
            t.lambda_user = v;
        }
        if let Some(v) = f.lambda_i {
            t.lambda_item = v;
        }
        if let Some(v) = f.history_cap {
            t.history_cap = v;
        }
        if let Some(v) = &f.neighborhood_cap {
            t.neighborhood_cap = match v {
                Cap::Unbounded => None,
                Cap::At(c) => Some(*c),
            };
        }
        if let Some(v) = f.window_cap {
            t.window_cap = v;
        }
        if let Some(v) = &f.split {
            t.split = v.0;
        }
        if let Some(v) = f.seed {
            t.seed = v;
        }
        if let Some(v) = f.ablation {
            t.ablation = ablation(v);
        }
        if let Some(v) = f.optimizer {
            t.optimizer = match v {
                OptimizerArg::Adam => OptimizerKind::Adam,
                OptimizerArg::Sgd => OptimizerKind::Sgd,
            };
        }
        if let Some(v) = f.share_item_attention {
            t.share_item_attention = v;
        }
        if let Some(v) = f.influence_softmax {
            t.influence_softmax = v;
        }
        if let Some(v) = f.empty_influence {
            t.empty_influence = match v {
                EmptyInfluenceArg::Decay => EmptyInfluence::Decay,
                EmptyInfluenceArg::Hold => EmptyInfluence::Hold,
            };
        }
        t.validate().map_err(|e| usage(e.to_string()))?;
        let resolved = Resolved {
            ann: f.ann.unwrap_or(AnnArg::Exact),
            lsh_tables: f.lsh_tables.unwrap_or(16),
            lsh_bits: f.lsh_bits.unwrap_or(8),
            train: t,
            flags,
        };
        if resolved.ann == AnnArg::Lsh && (resolved.lsh_tables == 0 || resolved.lsh_bits > 64) {
            return Err(usage(
                "--lsh-tables must be positive and --lsh-bits at most 64",
            ));
        }
        Ok(resolved)
    }

    fn data(&self) -> Result<&Path> {
        let p = self
            .flags
            .data
            .as_deref()
            .ok_or_else(|| usage("--data is required"))?;
        if !p.is_file() {
            bail!("data file {} does not exist", p.display());
        }
        Ok(p)
    }

    fn checkpoint_out(&self) -> Result<&Path> {
        let p = self
            .flags
            .checkpoint
            .as_deref()
            .ok_or_else(|| usage("--checkpoint is required"))?;
        ensure_parent(p)?;
        Ok(p)
    }

    fn checkpoint_in(&self) -> Result<&Path> {
        let p = self
            .flags
            .checkpoint
            .as_deref()
            .ok_or_else(|| usage("--checkpoint is required"))?;
        if !p.is_file() {
            bail!("checkpoint {} does not exist", p.display());
        }
        Ok(p)
    }

    fn ranking(&self) -> Ranking {
        match self.ann {
            AnnArg::Exact => Ranking::Exact,
            AnnArg::Lsh => Ranking::Lsh {
                tables: self.lsh_tables,
                bits: self.lsh_bits,
                seed: self.train.seed,
            },
        }
    }

    /// `key=value` echo of every resolved setting.
    fn echo(&self, command: &str) -> String {
        let t = &self.train;
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map_or(String::new(), |p| p.display().to_string())
        };
        let mut lines = vec![
            format!("command={command}"),
            format!("data={}", path(&self.flags.data)),
            format!("checkpoint={}", path(&self.flags.checkpoint)),
            format!("report={}", path(&self.flags.report)),
            format!("dim={}", t.dim),
            format!("epochs={}", t.epochs),
            format!("lr={}", t.learning_rate),
            format!("lambda-u={}", t.lambda_user),
            format!("lambda-i={}", t.lambda_item),
            format!("history-cap={}", t.history_cap),
            format!(
                "neighborhood-cap={}",
                t.neighborhood_cap.map_or(Cap::Unbounded, Cap::At)
            ),
            format!("window-cap={}", t.window_cap),
            format!("split={}", Split(t.split)),
            format!("seed={}", t.seed),
            format!("ablation={}", t.ablation.label()),
            format!(
                "ann={}",
                if self.ann == AnnArg::Lsh {
                    "lsh"
                } else {
                    "exact"
                }
            ),
            format!("lsh-tables={}", self.lsh_tables),
            format!("lsh-bits={}", self.lsh_bits),
            format!(
                "optimizer={}",
                if t.optimizer == OptimizerKind::Sgd {
                    "sgd"
                } else {
                    "adam"
                }
            ),
            format!("share-item-attention={}", t.share_item_attention),
            format!("influence-softmax={}", t.influence_softmax),
            format!(
                "empty-influence={}",
                if t.empty_influence == EmptyInfluence::Hold {
                    "hold"
                } else {
                    "decay"
                }
            ),
        ];
        lines.push(String::new());
        lines.join("\n")
    }
}

fn ablation(a: AblationArg) -> Ablation {
    match a {
        AblationArg::None => Ablation::None,
        AblationArg::InfluenceOff => Ablation::InfluenceOff,
        AblationArg::LatentCross => Ablation::LatentCross,
    }
}

fn ensure_parent(p: &Path) -> Result<()> {
    match p.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            bail!("directory {} does not exist", dir.display())
        }
        _ => Ok(()),
    }
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_log(path: &Path) -> Result<EventLog> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    EventLog::parse_csv(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn print_log_stats(log: &EventLog) {
    println!("events={}", log.len());
    println!("users={}", log.num_users());
    println!("items={}", log.num_items());
    println!("features={}", log.num_features());
    if let (Some(first), Some(last)) = (log.events().first(), log.events().last()) {
        println!("time_first={}", first.time * log.time_scale());
        println!("time_last={}", last.time * log.time_scale());
    }
    match log.repetition_rate() {
        Ok(r) => println!("repetition_rate={r}"),
        Err(_) => println!("repetition_rate=undefined"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut flags = match &cli.config {
        Some(p) => read_config(p)?,
        None => Flags::default(),
    };
    flags.overlay(&cli.flags);
    let cfg = Resolved::new(flags)?;
    match cli.command {
        Command::Ingest {
            top_items,
            min_user_events,
            out,
        } => ingest(&cfg, top_items, min_user_events, out.as_deref()),
        Command::Stats => stats(&cfg),
        Command::Train => train(&cfg),
        Command::Evaluate => evaluate_cmd(&cfg),
        Command::Recommend { user, at, k, item } => recommend(&cfg, &user, at, k, item.as_deref()),
        Command::Synth {
            out,
            edges_out,
            users,
            items,
            events,
            num_edges,
            edge_weight,
            decay,
            base_rate,
            concentration,
        } => {
            let mut spec = RandomSynth::default();
            macro_rules! set {
                ($($f:ident),*) => { $( if let Some(v) = $f { spec.$f = v; } )* };
            }
            set!(
                users,
                items,
                events,
                num_edges,
                edge_weight,
                decay,
                base_rate,
                concentration
            );
            synth(&cfg, &spec, &out, edges_out)
        }
    }
}

fn ingest(
    cfg: &Resolved,
    top_items: Option<usize>,
    min_user_events: usize,
    out: Option<&Path>,
) -> Result<()> {
    let mut log = load_log(cfg.data()?)?;
    if let Some(top) = top_items {
        log = log.filter_active(top, min_user_events);
    }
    print_log_stats(&log);
    if let Some(out) = out {
        ensure_parent(out)?;
        let w = BufWriter::new(
            File::create(out).with_context(|| format!("creating {}", out.display()))?,
        );
        log.write_csv(w)?;
    }
    Ok(())
}

fn stats(cfg: &Resolved) -> Result<()> {
    let log = load_log(cfg.data()?)?;
    let state = replay_neighborhoods(&log, cfg.train.neighborhood_cap)?;
    println!("users={}", state.num_users());
    println!("mean_neighborhood={}", state.avg_neighborhood_size());
    println!("median_neighborhood={}", state.median_neighborhood_size());
    println!("nonzero_theta={}", state.nonzero_influence_count());
    match log.repetition_rate() {
        Ok(r) => println!("repetition_rate={r}"),
        Err(_) => println!("repetition_rate=undefined"),
    }
    Ok(())
}

fn train(cfg: &Resolved) -> Result<()> {
    let data = cfg.data()?;
    let ckpt = cfg.checkpoint_out()?;
    let log = load_log(data)?.normalize_time()?;
    let (train_log, _, _) = chronological_split(&log, cfg.train.split)?;
    let mut trainer = Trainer::from_config(
        log.num_users(),
        log.num_items(),
        log.num_features(),
        &cfg.train,
    )?;
    std::fs::write(with_suffix(ckpt, ".config"), cfg.echo("train"))?;
    let log_path = with_suffix(ckpt, ".log");
    let mut tlog = BufWriter::new(
        File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?,
    );
    for _ in 0..cfg.train.epochs {
        let start = Instant::now();
        let summary = trainer.train_epoch(train_log.events(), Mode::Train)?;
        Checkpoint::from_trainer(&trainer, log.time_scale()).save(ckpt)?;
        let secs = start.elapsed().as_secs_f64();
        writeln!(
            tlog,
            "{}\t{}\t{:.3}",
            summary.epoch, summary.mean_loss, secs
        )?;
        tlog.flush()?;
        eprintln!(
            "epoch {} loss {:.6} ({:.1}s)",
            summary.epoch, summary.mean_loss, secs
        );
    }
    if cfg.train.epochs == 0 {
        Checkpoint::from_trainer(&trainer, log.time_scale()).save(ckpt)?;
    }
    Ok(())
}

/// Loads the checkpoint and the log in the checkpoint's time units.
fn load_pair(cfg: &Resolved) -> Result<(Checkpoint, EventLog)> {
    let ck = Checkpoint::load(cfg.checkpoint_in()?)?;
    let log = load_log(cfg.data()?)?;
    ck.ensure_shape(log.num_users(), log.num_items(), log.num_features())?;
    let log = log.rescaled(ck.time_scale);
    Ok((ck, log))
}

fn evaluate_cmd(cfg: &Resolved) -> Result<()> {
    let (ck, log) = load_pair(cfg)?;
    let mut model = ck.model;
    if let Some(a) = cfg.flags.ablation {
        model.config.ablation = ablation(a);
    }
    let (_, val, test) = chronological_split(&log, cfg.train.split)?;
    for e in val.events() {
        model.observe(e)?;
    }
    let report = evaluate(&mut model, test.events(), cfg.ranking())?;
    if let Some(path) = &cfg.flags.report {
        ensure_parent(path)?;
        let w = BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        report.write_tsv(
            w,
            Some((log.user_labels(), log.item_labels())),
            log.time_scale(),
        )?;
        report.write_summary(File::create(with_suffix(path, ".summary"))?)?;
        std::fs::write(with_suffix(path, ".config"), cfg.echo("evaluate"))?;
    }
    report.write_summary(std::io::stdout().lock())?;
    Ok(())
}

fn lookup(label: &str, by_label: Option<usize>, count: usize, what: &str) -> Result<usize> {
    if let Some(id) = by_label {
        return Ok(id);
    }
    match label.parse::<usize>() {
        Ok(id) if id < count => Ok(id),
        _ => Err(usage(format!("unknown {what} {label:?}"))),
    }
}

fn recommend(cfg: &Resolved, user: &str, at: f64, k: usize, item: Option<&str>) -> Result<()> {
    let (ck, log) = match &cfg.flags.data {
        Some(_) => {
            let (ck, log) = load_pair(cfg)?;
            (ck, Some(log))
        }
        None => (Checkpoint::load(cfg.checkpoint_in()?)?, None),
    };
    let mut model: Model = ck.model;
    if let Some(a) = cfg.flags.ablation {
        model.config.ablation = ablation(a);
    }
    let t = at / ck.time_scale;
    let dims = model.dims;
    let u: UserId = lookup(
        user,
        log.as_ref().and_then(|l| l.user_by_label(user)),
        dims.users,
        "user",
    )?;
    let target: Option<ItemId> = item
        .map(|i| {
            lookup(
                i,
                log.as_ref().and_then(|l| l.item_by_label(i)),
                dims.items,
                "item",
            )
        })
        .transpose()?;
    if k == 0 || k > dims.items {
        return Err(usage(format!("--k must be in 1..={}", dims.items)));
    }
    if let Some(log) = &log {
        let (train_log, _, _) = chronological_split(log, cfg.train.split)?;
        for e in &log.events()[train_log.len()..] {
            if e.time >= t {
                break;
            }
            model.observe(e)?;
        }
    }
    let q = model.query(u, t)?;
    let dists = onehot_sq_distances(&model.state.item_dyn, &q.predicted)?;
    let top = match cfg.ranking() {
        Ranking::Exact => topk_from_distances(&dists, k)?,
        Ranking::Lsh { tables, bits, seed } => {
            LshIndex::build(&model.item_representations(), tables, bits, seed)?
                .query(&q.predicted, k)?
        }
    };
    let name = |j: ItemId| {
        log.as_ref()
            .map_or(j.to_string(), |l| l.item_label(j).to_string())
    };
    let mut out = std::io::stdout().lock();
    writeln!(out, "rank\titem\tdistance")?;
    for (pos, (j, d)) in top.iter().enumerate() {
        writeln!(out, "{}\t{}\t{}", pos + 1, name(*j), d)?;
    }
    if let Some(j) = target {
        writeln!(
            out,
            "# rank of {}\t{}",
            name(j),
            rank_from_distances(&dists, j)?
        )?;
    }
    Ok(())
}

fn synth(cfg: &Resolved, spec: &RandomSynth, out: &Path, edges_out: Option<PathBuf>) -> Result<()> {
    ensure_parent(out)?;
    let edges_path = edges_out.unwrap_or_else(|| with_suffix(out, ".edges.csv"));
    ensure_parent(&edges_path)?;
    let config = SynthConfig::random(spec, cfg.train.seed).map_err(|e| usage(e.to_string()))?;
    let (log, edges) = generate(&config)?;
    log.write_csv(BufWriter::new(
        File::create(out).with_context(|| format!("creating {}", out.display()))?,
    ))?;
    write_edges_csv(
        &edges,
        BufWriter::new(
            File::create(&edges_path)
                .with_context(|| format!("creating {}", edges_path.display()))?,
        ),
    )?;
    let echo = format!(
        "command=synth\nusers={}\nitems={}\nevents={}\nnum-edges={}\nedge-weight={}\ndecay={}\nbase-rate={}\nconcentration={}\nseed={}\n",
        spec.users,
        spec.items,
        spec.events,
        spec.num_edges,
        spec.edge_weight,
        spec.decay,
        spec.base_rate,
        spec.concentration,
        cfg.train.seed
    );
    std::fs::write(with_suffix(out, ".config"), echo)?;
    eprintln!("wrote {} events and {} edges", log.len(), edges.len());
    Ok(())
}
