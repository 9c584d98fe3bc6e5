use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use trackx_core::command::{run, Effect, ExecContext, Outcome};
use trackx_core::ingest::{export_csv, import_csv, CompressionConfig, GapTolerance};
use trackx_core::store::{
    assemble, bsx_read, bsx_write, bsx_write_plain, load_manifest, parse_track_id, CsvSource,
};
use trackx_core::{Session, Tick, TrackKind, VideoBinding, TICKS_PER_SECOND};
use trackx_server::AppState;

#[derive(Parser)]
#[command(
    name = "trackx",
    version,
    about = "Timeline analysis of activity-recognition tracks"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a session file from per-track CSV files.
    Ingest(IngestArgs),
    /// Print a metric as JSON.
    Eval {
        #[command(subcommand)]
        metric: Metric,
    },
    /// Run one command against a session file and save the result.
    Exec {
        session: PathBuf,
        /// Command text, e.g. "union 1 2".
        text: String,
        /// Where to write the updated session (defaults to overwriting the input).
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, default_value = "user")]
        user: String,
    },
    /// Convert between CSV and BSX, or between BSX framings.
    Convert(ConvertArgs),
    /// Serve the HTTP API, preloading the given session files.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Session files; each is served under its file stem.
        sessions: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct CompressionArgs {
    /// Gap tolerance in microseconds, or "auto".
    #[arg(long, default_value = "auto")]
    eps_t: String,
    /// Maximum score drift within one block.
    #[arg(long, default_value_t = 0.05)]
    eps_s: f64,
}

impl CompressionArgs {
    fn config(&self) -> Result<CompressionConfig> {
        let eps_t = match self.eps_t.as_str() {
            "auto" => GapTolerance::Auto,
            n => GapTolerance::Fixed(n.parse().with_context(|| format!("bad --eps-t {n:?}"))?),
        };
        Ok(CompressionConfig {
            eps_t,
            eps_s: self.eps_s,
            ..Default::default()
        })
    }
}

#[derive(Args)]
struct IngestArgs {
    /// Classifier prediction CSVs; the file stem is the track id.
    #[arg(long)]
    classifier: Vec<PathBuf>,
    /// Annotation CSVs.
    #[arg(long)]
    label: Vec<PathBuf>,
    /// Protocol CSVs.
    #[arg(long)]
    protocol: Vec<PathBuf>,
    /// Model manifest JSON.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Author names used to split canonical ids, comma separated.
    #[arg(long, value_delimiter = ',')]
    authors: Vec<String>,
    #[arg(long)]
    video: Option<String>,
    /// Session time (seconds) of the video's first frame.
    #[arg(long, default_value_t = 0.0)]
    video_offset: f64,
    #[command(flatten)]
    compression: CompressionArgs,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Subcommand)]
enum Metric {
    /// Accuracy, precision, recall, F1 and Jaccard of P against G.
    Report {
        session: PathBuf,
        #[arg(short)]
        p: String,
        #[arg(short)]
        g: String,
    },
    /// ROC curve and AUC of classifier C against G.
    Roc {
        session: PathBuf,
        #[arg(short)]
        c: String,
        #[arg(short)]
        g: String,
    },
    /// Fraction of ground-truth events detected by T.
    Score {
        session: PathBuf,
        #[arg(short)]
        t: String,
        /// Ground truth; defaults to the label track of the same class.
        #[arg(short)]
        g: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Classifier,
    Label,
    Protocol,
}

impl From<Kind> for TrackKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Classifier => TrackKind::Classifier,
            Kind::Label => TrackKind::Label,
            Kind::Protocol => TrackKind::Protocol,
        }
    }
}

#[derive(Args)]
struct ConvertArgs {
    input: PathBuf,
    output: PathBuf,
    /// Track kind when reading CSV.
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    /// Track id: written track when reading CSV, exported track when writing CSV.
    #[arg(long)]
    track: Option<String>,
    #[arg(long, value_delimiter = ',')]
    authors: Vec<String>,
    /// Write uncompressed JSON instead of gzip.
    #[arg(long)]
    plain: bool,
    #[command(flatten)]
    compression: CompressionArgs,
}

fn main() {
    if let Err(e) = real_main(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn real_main(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Ingest(args) => ingest(args),
        Cmd::Eval { metric } => eval(metric),
        Cmd::Exec {
            session,
            text,
            output,
            user,
        } => exec(&session, &text, output.as_deref(), user),
        Cmd::Convert(args) => convert(args),
        Cmd::Serve { addr, sessions } => serve(addr, &sessions),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn load(path: &Path) -> Result<Session> {
    bsx_read(&read(path)?).with_context(|| format!("loading {}", path.display()))
}

fn stem(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .ok_or_else(|| anyhow!("cannot take a track id from {}", path.display()))
}

fn ingest(args: IngestArgs) -> Result<()> {
    let mut sources = Vec::new();
    for (paths, kind) in [
        (&args.classifier, TrackKind::Classifier),
        (&args.label, TrackKind::Label),
        (&args.protocol, TrackKind::Protocol),
    ] {
        for p in paths {
            sources.push(CsvSource {
                id: stem(p)?,
                kind,
                bytes: read(p)?,
            });
        }
    }
    if sources.is_empty() {
        bail!("no input files; pass --classifier, --label or --protocol");
    }
    let manifest = match &args.manifest {
        Some(p) => Some(load_manifest(&read(p)?)?),
        None => None,
    };
    let (mut session, warnings) = assemble(
        &sources,
        manifest.as_ref(),
        &args.authors,
        &args.compression.config()?,
    )?;
    for w in warnings {
        eprintln!("warning: {}", serde_json::to_string(&w)?);
    }
    if let Some(uri) = args.video {
        session.video = Some(VideoBinding {
            uri,
            offset: Tick((args.video_offset * TICKS_PER_SECOND as f64).round() as i64),
            duration: None,
        });
    }
    write(&args.output, &bsx_write(&session))?;
    eprintln!(
        "wrote {} tracks, {} events to {}",
        session.tracks().len(),
        session
            .tracks()
            .iter()
            .map(|t| t.events().len())
            .sum::<usize>(),
        args.output.display()
    );
    Ok(())
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn eval(metric: Metric) -> Result<()> {
    let (path, text) = match metric {
        Metric::Report { session, p, g } => (session, format!("report {p} {g}")),
        Metric::Roc { session, c, g } => (session, format!("roc {c} {g}")),
        Metric::Score { session, t, g } => {
            (session, format!("score {t} {}", g.unwrap_or_default()))
        }
    };
    let mut session = load(&path)?;
    let outcome = run_text(&mut session, text.trim_end(), &ExecContext::default())?;
    let Effect::Metric { result } = outcome.effect else {
        unreachable!("metric operators produce metric effects");
    };
    let mut value = serde_json::to_value(&result)?;
    value["operands"] = serde_json::to_value(&outcome.operands)?;
    print_json(&value)
}

fn run_text(session: &mut Session, text: &str, ctx: &ExecContext) -> Result<Outcome> {
    run(session, text, ctx).map_err(|e| anyhow!("{} ({})", e, e.code()))
}

fn exec(path: &Path, text: &str, output: Option<&Path>, user: String) -> Result<()> {
    let mut session = load(path)?;
    let outcome = run_text(
        &mut session,
        text,
        &ExecContext {
            user,
            ..Default::default()
        },
    )?;
    write(output.unwrap_or(path), &bsx_write(&session))?;
    print_json(&serde_json::to_value(&outcome)?)
}

fn is_csv(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn convert(args: ConvertArgs) -> Result<()> {
    match (is_csv(&args.input), is_csv(&args.output)) {
        (true, true) => bail!("both sides are CSV; nothing to convert"),
        (true, false) => {
            let kind = args
                .kind
                .ok_or_else(|| anyhow!("--kind is required when reading CSV"))?;
            let id_text = match args.track {
                Some(t) => t,
                None => stem(&args.input)?,
            };
            let id = parse_track_id(&id_text, &args.authors, None).with_context(|| {
                format!("track id {id_text:?}; pass --authors or class:author:version")
            })?;
            let track = import_csv(
                &read(&args.input)?,
                kind.into(),
                id,
                &args.compression.config()?,
            )?;
            let session = Session::from_tracks(vec![track])?;
            let bytes = if args.plain {
                bsx_write_plain(&session)
            } else {
                bsx_write(&session)
            };
            write(&args.output, &bytes)
        }
        (false, true) => {
            let session = load(&args.input)?;
            let track = match &args.track {
                Some(t) => session
                    .find(t)
                    .ok_or_else(|| anyhow!("no track {t:?} in {}", args.input.display()))?,
                None => match session.tracks() {
                    [only] => only,
                    _ => bail!("session has several tracks; choose one with --track"),
                },
            };
            write(&args.output, export_csv(track).as_bytes())
        }
        (false, false) => {
            let session = load(&args.input)?;
            let bytes = if args.plain {
                bsx_write_plain(&session)
            } else {
                bsx_write(&session)
            };
            write(&args.output, &bytes)
        }
    }
}

fn serve(addr: SocketAddr, paths: &[PathBuf]) -> Result<()> {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .init();
    let state = AppState::new();
    for p in paths {
        state.insert_with_id(stem(p)?, load(p)?);
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(trackx_server::serve(state, addr))?;
    Ok(())
}
