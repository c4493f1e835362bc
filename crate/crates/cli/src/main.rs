use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use switchchain::chain::{
    burn_in_steps, ChainOptions, ChainState, ObserverSchedule, TriangleTracking,
};
use switchchain::construct::{
    configuration_model, construct_with_retries, havel_hakimi, Method, TieBreak,
};
use switchchain::degseq::{canonical_sequence, DegreeSequence, IidSampler, PowerLawParams};
use switchchain::experiments::{derive_seed, run_experiment, ExperimentConfig};
use switchchain::graph::SimpleGraph;
use switchchain::oracle::{all_graphical_sequences, Enumerator};
use switchchain::stats::{empirical_mixing_time, loglog_fit, tv_distance, TriangleHistogram};

/// Switch-chain sampling of simple graphs with prescribed degrees.
#[derive(Parser)]
#[command(name = "switchchain", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a power-law degree sequence.
    Degseq(DegseqArgs),
    /// Build an initial graph from a degree sequence.
    Construct(ConstructArgs),
    /// Run switch-chain replicas and record triangle counts.
    Chain(ChainArgs),
    /// Total variation distance between two histogram files.
    Tv { p: PathBuf, q: PathBuf },
    /// Empirical mixing time of a checkpoint series against a reference.
    Mixtime(MixtimeArgs),
    /// Log-log least-squares fit of mean triangle counts against n.
    Fit {
        /// CSV with `n,mean` rows.
        input: PathBuf,
    },
    /// Exhaustive enumeration for small sequences.
    Oracle(OracleArgs),
    /// Configured experiments.
    Experiment {
        #[command(subcommand)]
        command: ExperimentCommand,
    },
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SeqMode {
    Canonical,
    Iid,
}

#[derive(Args)]
struct DegseqArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    tau: f64,
    #[arg(long, value_enum, default_value = "canonical")]
    mode: SeqMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConstructMethod {
    Hh,
    Ccmd,
    Ccmdu,
    Cm,
    Ecm,
}

#[derive(Clone, Copy, ValueEnum)]
enum TieBreakArg {
    Stable,
    #[value(alias = "reverse")]
    Alternating,
}

impl From<TieBreakArg> for TieBreak {
    fn from(t: TieBreakArg) -> Self {
        match t {
            TieBreakArg::Stable => TieBreak::Stable,
            TieBreakArg::Alternating => TieBreak::Alternating,
        }
    }
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long, value_enum)]
    method: ConstructMethod,
    #[arg(long)]
    degrees: PathBuf,
    #[arg(long, value_enum, default_value = "stable")]
    tie_break: TieBreakArg,
    #[arg(long, default_value_t = 1)]
    attempts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Edge list output; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ChainArgs {
    #[arg(long)]
    degrees: Option<PathBuf>,
    /// `hh`, `ccmd`, `ccmdu` or `edgelist:<path>`.
    #[arg(long, default_value = "hh")]
    init: String,
    #[arg(long, value_enum, default_value = "stable")]
    tie_break: TieBreakArg,
    /// Construction attempts for `ccmd` and `ccmdu` starts.
    #[arg(long, default_value_t = 100)]
    attempts: usize,
    #[arg(long, conflicts_with = "steps_per_n")]
    steps: Option<u64>,
    #[arg(long)]
    steps_per_n: Option<f64>,
    /// `start:step:end` or a comma list; terms may use an `n` suffix.
    #[arg(long)]
    checkpoints: Option<String>,
    #[arg(long, default_value_t = 1)]
    replicas: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the merged triangle-delta histogram next to the output.
    #[arg(long)]
    record_deltas: bool,
    /// Write per-proposal (triangles, accepted) samples next to the output.
    #[arg(long)]
    record_success_samples: bool,
    /// CSV output `replica,t,triangles`; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MixtimeArgs {
    /// CSV with `t,value,count` rows.
    #[arg(long)]
    series: PathBuf,
    /// Histogram CSV with `value,count` rows.
    #[arg(long)]
    reference: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    threshold: f64,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(
        long,
        conflicts_with = "all_sequences",
        required_unless_present = "all_sequences"
    )]
    degrees: Option<PathBuf>,
    #[arg(long)]
    all_sequences: Option<usize>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Degseq(a) => degseq(a),
        Command::Construct(a) => construct(a),
        Command::Chain(a) => chain(a),
        Command::Tv { p, q } => {
            let d = tv_distance(&read_histogram(&p)?, &read_histogram(&q)?)?;
            println!("{d}");
            Ok(())
        }
        Command::Mixtime(a) => mixtime(a),
        Command::Fit { input } => fit(&input),
        Command::Oracle(a) => oracle(a),
        Command::Experiment {
            command: ExperimentCommand::Run { config, out_dir },
        } => experiment(&config, out_dir),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn sibling(path: Option<&Path>, suffix: &str) -> PathBuf {
    match path {
        Some(p) => {
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("chain");
            p.with_file_name(format!("{stem}_{suffix}.csv"))
        }
        None => PathBuf::from(format!("chain_{suffix}.csv")),
    }
}

fn load_degrees(path: &Path) -> Result<DegreeSequence> {
    DegreeSequence::load(path).with_context(|| format!("reading degrees from {}", path.display()))
}

fn read_histogram(path: &Path) -> Result<TriangleHistogram> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    TriangleHistogram::read_csv(BufReader::new(f))
        .with_context(|| format!("parsing {}", path.display()))
}

/// Numeric CSV rows; a first line starting with a letter is a header.
fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || (i == 0 && t.starts_with(|c: char| c.is_ascii_alphabetic())) {
            continue;
        }
        let row = t
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| format!("{}:{}: not a number", path.display(), i + 1))?;
        rows.push(row);
    }
    Ok(rows)
}

fn degseq(a: DegseqArgs) -> Result<()> {
    let params = PowerLawParams::new(a.tau, a.n)?;
    let seq = match a.mode {
        SeqMode::Canonical => canonical_sequence(params)?,
        SeqMode::Iid => IidSampler::new(params).sample(&mut ChaCha8Rng::seed_from_u64(a.seed))?,
    };
    let mut w = output(a.out.as_deref())?;
    seq.write_to(&mut w)?;
    w.flush()?;
    Ok(())
}

fn construct(a: ConstructArgs) -> Result<()> {
    let seq = load_degrees(&a.degrees)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut w = output(a.out.as_deref())?;
    if let ConstructMethod::Cm = a.method {
        let mg = configuration_model(&seq, &mut rng)?;
        for &(u, v) in mg.edges() {
            writeln!(w, "{u} {v}")?;
        }
        w.flush()?;
        eprintln!(
            "cm: {} edges, {} self-loops, simple: {}",
            mg.edges().len(),
            mg.self_loops(),
            mg.is_simple()
        );
        return Ok(());
    }
    let method = match a.method {
        ConstructMethod::Hh => Method::HavelHakimi(a.tie_break.into()),
        ConstructMethod::Ccmd => Method::Ccmd,
        ConstructMethod::Ccmdu => Method::Ccmdu,
        ConstructMethod::Ecm => Method::Ecm,
        ConstructMethod::Cm => unreachable!(),
    };
    let built = construct_with_retries(method, &seq, a.attempts, &mut rng)?;
    let attempts = built.attempts_used;
    let Some(g) = built.into_graph() else {
        bail!("{} failed after {attempts} attempts", method.name());
    };
    g.write_edge_list(&mut w)?;
    w.flush()?;
    eprintln!(
        "{}: {} edges, {} triangles, {attempts} attempts",
        method.name(),
        g.edge_count(),
        g.count_triangles()
    );
    Ok(())
}

fn initial_graph(a: &ChainArgs, rng: &mut ChaCha8Rng) -> Result<SimpleGraph> {
    if let Some(path) = a.init.strip_prefix("edgelist:") {
        return SimpleGraph::load_edge_list(path, None)
            .with_context(|| format!("reading edge list {path}"));
    }
    let Some(degrees) = &a.degrees else {
        bail!("--degrees is required unless --init edgelist:<path> is used");
    };
    let seq = load_degrees(degrees)?;
    let method = match a.init.as_str() {
        "hh" => return Ok(havel_hakimi(&seq, a.tie_break.into())?),
        "ccmd" => Method::Ccmd,
        "ccmdu" => Method::Ccmdu,
        other => bail!("unknown --init {other:?}; expected hh, ccmd, ccmdu or edgelist:<path>"),
    };
    let built = construct_with_retries(method, &seq, a.attempts, rng)?;
    let attempts = built.attempts_used;
    built
        .into_graph()
        .with_context(|| format!("{} failed after {attempts} attempts", method.name()))
}

fn chain(a: ChainArgs) -> Result<()> {
    let mut init_rng = ChaCha8Rng::seed_from_u64(derive_seed(a.seed, "chain/init", 0, 0));
    let start = initial_graph(&a, &mut init_rng)?;
    let n = start.n();
    let schedule = match &a.checkpoints {
        Some(s) => ObserverSchedule::parse(s, n)?,
        None => ObserverSchedule::new(Vec::new())?,
    };
    let steps = match (a.steps, a.steps_per_n) {
        (Some(s), _) => s,
        (None, Some(k)) => burn_in_steps(k, n),
        (None, None) => match schedule.last() {
            Some(last) => last,
            None => bail!("give --steps, --steps-per-n or --checkpoints"),
        },
    };
    let schedule = if a.checkpoints.is_some() {
        schedule
    } else {
        ObserverSchedule::new(vec![steps])?
    };
    if start.edge_count() < 2 && steps > 0 {
        bail!(
            "the chain needs at least two edges, the start graph has {}",
            start.edge_count()
        );
    }
    let incremental = a.record_deltas || a.record_success_samples;
    let options = ChainOptions {
        tracking: if incremental {
            TriangleTracking::Incremental
        } else {
            TriangleTracking::OnDemand
        },
        record_success_samples: a.record_success_samples,
    };

    let mut w = output(a.out.as_deref())?;
    writeln!(w, "replica,t,triangles")?;
    let mut deltas: BTreeMap<i64, u64> = BTreeMap::new();
    let mut samples = a
        .record_success_samples
        .then(|| -> Result<_> {
            let mut s = output(Some(&sibling(a.out.as_deref(), "success")))?;
            writeln!(s, "replica,triangles,accepted")?;
            Ok(s)
        })
        .transpose()?;
    for r in 0..a.replicas {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(a.seed, "chain", 0, r));
        let mut state = ChainState::with_options(start.clone(), options)?;
        for rec in state.run(steps, &schedule, &mut rng)? {
            writeln!(w, "{r},{},{}", rec.t, rec.triangles)?;
        }
        let stats = state.stats();
        for (&d, &c) in &stats.delta_histogram {
            *deltas.entry(d).or_insert(0) += c;
        }
        if let (Some(s), Some(list)) = (samples.as_mut(), stats.success_samples.as_ref()) {
            for &(tri, ok) in list {
                writeln!(s, "{r},{tri},{}", u8::from(ok))?;
            }
        }
        log::info!(
            "replica {r}: {} accepted, {} shared-vertex, {} existing-edge",
            stats.accepted,
            stats.rejected_shared_vertex,
            stats.rejected_existing_edge
        );
    }
    w.flush()?;
    if let Some(mut s) = samples {
        s.flush()?;
    }
    if a.record_deltas {
        let mut d = output(Some(&sibling(a.out.as_deref(), "deltas")))?;
        writeln!(d, "delta,count")?;
        for (k, c) in deltas {
            writeln!(d, "{k},{c}")?;
        }
        d.flush()?;
    }
    Ok(())
}

fn mixtime(a: MixtimeArgs) -> Result<()> {
    let reference = read_histogram(&a.reference)?;
    let mut series: BTreeMap<u64, TriangleHistogram> = BTreeMap::new();
    for row in read_rows(&a.series)? {
        let [t, v, c] = row[..] else {
            bail!("{}: expected t,value,count rows", a.series.display());
        };
        series
            .entry(t as u64)
            .or_default()
            .add_many(v as u64, c as u64);
    }
    let series: Vec<(u64, TriangleHistogram)> = series.into_iter().collect();
    let tv = series
        .iter()
        .map(|(t, h)| Ok((*t, tv_distance(h, &reference)?)))
        .collect::<Result<Vec<_>>>()?;
    let mixing = empirical_mixing_time(&series, &reference, a.threshold)?;
    println!(
        "{}",
        serde_json::to_string_pretty(
            &json!({ "mixing_time": mixing, "threshold": a.threshold, "tv": tv })
        )?
    );
    Ok(())
}

fn fit(input: &Path) -> Result<()> {
    let points = read_rows(input)?
        .into_iter()
        .map(|row| match row[..] {
            [n, mean, ..] => Ok((n, mean)),
            _ => bail!("{}: expected n,mean rows", input.display()),
        })
        .collect::<Result<Vec<_>>>()?;
    println!("{}", serde_json::to_string_pretty(&loglog_fit(&points)?)?);
    Ok(())
}

fn oracle(a: OracleArgs) -> Result<()> {
    if let Some(n) = a.all_sequences {
        let mut w = output(None)?;
        for s in all_graphical_sequences(n)? {
            let text: Vec<String> = s.degrees().iter().map(u32::to_string).collect();
            writeln!(w, "{}", text.join(" "))?;
        }
        w.flush()?;
        return Ok(());
    }
    let seq = load_degrees(
        a.degrees
            .as_deref()
            .expect("clap enforces one of the flags"),
    )?;
    let profile = Enumerator::default().triangle_profile(seq.degrees())?;
    let distribution: BTreeMap<String, u64> = profile
        .triangle_distribution
        .iter()
        .map(|(k, c)| (k.to_string(), *c))
        .collect();
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "graphs": profile.graphs,
            "max_triangles": profile.max_triangles,
            "distribution": distribution,
        }))?
    );
    Ok(())
}

fn experiment(config: &Path, out_dir: Option<PathBuf>) -> Result<()> {
    let mut cfg =
        ExperimentConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
    if let Some(dir) = out_dir {
        cfg.output_dir = dir;
    }
    let summary = run_experiment(&cfg)?;
    for f in &summary.files {
        println!("{}", f.display());
    }
    for f in &summary.failures {
        log::warn!("n = {}, sequence {}: {}", f.n, f.sequence, f.error);
    }
    Ok(())
}
