use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use levelscope_client::{Client, UploadOptions};
use levelscope_core::sampling::{sample_sweep, SweepRow};
use levelscope_core::{load_dataset, EncodedDataset, LoadOptions, SamplingConfig, SelectionState, Session};
use levelscope_server::{AppState, ServerConfig};

#[derive(Debug, Parser)]
#[command(name = "levelscope", version, about = "Explore categorical parameter spaces by target distribution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the HTTP API, optionally with a dataset preloaded as a session.
    Serve(ServeArgs),
    /// Print the explorer/aggregate/provenance payload for a selection.
    Stats(StatsArgs),
    /// Sweep sample fractions and report KS p-value and view build time.
    SampleReport(ReportArgs),
}

#[derive(Debug, Args)]
struct SamplingArgs {
    #[arg(long, env = "LEVELSCOPE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "LEVELSCOPE_NO_SAMPLE_THRESHOLD", default_value_t = 20_000)]
    no_sample_threshold: usize,
    #[arg(long, env = "LEVELSCOPE_P_TARGET", default_value_t = 0.5)]
    p_target: f64,
}

impl SamplingArgs {
    fn config(&self) -> SamplingConfig {
        SamplingConfig {
            seed: self.seed,
            no_sample_threshold: self.no_sample_threshold,
            p_target: self.p_target,
        }
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Delimited data file with a header row.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Name of the numeric target column.
    #[arg(long)]
    target: Option<String>,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Sidecar level ordering file (`name: level,level,...` per line).
    #[arg(long)]
    order: Option<PathBuf>,
}

impl DataArgs {
    fn required(&self) -> Result<(&Path, &str)> {
        match (&self.data, &self.target) {
            (Some(d), Some(t)) => Ok((d, t)),
            _ => bail!("--data and --target are both required"),
        }
    }

    fn load(&self) -> Result<EncodedDataset> {
        let (path, target) = self.required()?;
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let mut opts = LoadOptions::new(target);
        opts.delimiter = self.delimiter;
        if let Some(order) = &self.order {
            opts.level_order = Some(
                std::fs::read_to_string(order)
                    .with_context(|| format!("reading {}", order.display()))?,
            );
        }
        load_dataset(&bytes, &opts).with_context(|| format!("loading {}", path.display()))
    }
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "LEVELSCOPE_PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "LEVELSCOPE_HOST", default_value = "127.0.0.1")]
    host: IpAddr,
    /// Idle session lifetime in seconds.
    #[arg(long, env = "LEVELSCOPE_SESSION_TTL", default_value_t = 3600)]
    session_ttl: u64,
    /// Directory of built UI assets to serve at `/`.
    #[arg(long, env = "LEVELSCOPE_STATIC_DIR")]
    static_dir: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[command(flatten)]
    data: DataArgs,
    /// JSON selection state file; omitted means the unfiltered view.
    #[arg(long)]
    selection: Option<PathBuf>,
    /// Query a running service at this URL instead of computing locally.
    #[arg(long)]
    server: Option<String>,
    #[command(flatten)]
    sampling: SamplingArgs,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Emit JSON instead of a text table.
    #[arg(long)]
    json: bool,
}

fn main() {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| "info".into()),
        )
        .init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting async runtime")?;
    match cli.command {
        Command::Serve(args) => rt.block_on(run_serve(args)),
        Command::Stats(args) => {
            let out = match &args.server {
                Some(url) => rt.block_on(remote_stats(url, &args))?,
                None => local_stats(&args)?,
            };
            println!("{out}");
            Ok(())
        }
        Command::SampleReport(args) => run_sample_report(&args),
    }
}

async fn run_serve(args: ServeArgs) -> Result<()> {
    let config = ServerConfig {
        port: args.port,
        session_ttl: Duration::from_secs(args.session_ttl),
        sampling: args.sampling.config(),
        static_dir: args.static_dir.clone(),
        ..ServerConfig::default()
    };
    let state = AppState::new(config);
    if args.data.data.is_some() || args.data.target.is_some() {
        let dataset = args.data.load()?;
        let (id, session) = state.create_session(dataset, &args.sampling.config());
        let report = session.sample_report();
        tracing::info!(
            session = %id,
            records = session.dataset().len(),
            fraction = report.fraction,
            sample_size = report.sample_size,
            p_value = report.p_value,
            "preloaded dataset"
        );
    }
    let addr = SocketAddr::new(args.host, args.port);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    levelscope_server::serve_on(listener, state)
        .await
        .context("serving")
}

fn read_selection(path: &Path) -> Result<SelectionState> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing selection {}", path.display()))
}

/// Same payload the API returns after uploading the data and, when a
/// selection is given, posting it once.
fn local_stats(args: &StatsArgs) -> Result<String> {
    let dataset = args.data.load()?;
    let mut session = Session::new(Arc::new(dataset), &args.sampling.config());
    let view = match &args.selection {
        Some(path) => session
            .update_selection(&read_selection(path)?)
            .context("invalid selection")?,
        None => session.view()?,
    };
    Ok(serde_json::to_string(&view)?)
}

async fn remote_stats(url: &str, args: &StatsArgs) -> Result<String> {
    let (path, target) = args.data.required()?;
    if args.data.order.is_some() {
        bail!("--order is not supported together with --server");
    }
    let body = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let client = Client::new(url);
    let sampling = args.sampling.config();
    let opts = UploadOptions {
        seed: Some(sampling.seed),
        delimiter: Some(args.data.delimiter),
        no_sample_threshold: Some(sampling.no_sample_threshold),
        p_target: Some(sampling.p_target),
        units: None,
    };
    let upload = client.upload(body, target, &opts).await?;
    let out = match &args.selection {
        Some(path) => {
            let sel = read_selection(path)?;
            client
                .update_selection_raw(&upload.session_id, &sel)
                .await
                .context("invalid selection")?
        }
        None => client.view_raw(&upload.session_id).await?,
    };
    Ok(out)
}

fn run_sample_report(args: &ReportArgs) -> Result<()> {
    let dataset = args.data.load()?;
    let rows = sample_sweep(&dataset, &args.sampling.config())?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&rows)?);
    } else {
        print!("{}", format_table(&rows));
    }
    Ok(())
}

fn format_table(rows: &[SweepRow]) -> String {
    let mut out = format!(
        "{:>8}  {:>11}  {:>10}  {:>12}  {:>10}\n",
        "fraction", "sample_size", "ks_d", "p_value", "view_ms"
    );
    for r in rows {
        out.push_str(&format!(
            "{:>8.2}  {:>11}  {:>10.6}  {:>12.6}  {:>10.2}\n",
            r.fraction, r.sample_size, r.ks_statistic, r.p_value, r.view_millis
        ));
    }
    out
}
