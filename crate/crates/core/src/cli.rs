//! The `proxemics` command line: serve, simulate, resample, analyze, render.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags or parameter
//! values), 2 for data errors (unreadable or invalid inputs). Logs go to
//! standard error; data goes to files or standard output.
//!
//! `--config FILE` supplies option values from a JSON object keyed by long
//! flag name (`{"per-minute": 20, "eps": 1.5}`). Flags given on the command
//! line win over the file, which wins over built-in defaults.

use crate::engine::{self, export, EngineError, EngineParams, HistogramKind, ZoneBoundaries};
use crate::geom::Vec3;
use crate::ingest::{self, IngestConfig, ReadLogError, DEFAULT_MAX_BATCH};
use crate::render::{self, tables, Format, Product, Ramp, RenderError, RenderSpec};
use crate::resample::{self, FrameStore, ResampleError};
use crate::sim::{self, presets, EmitError, RetryPolicy, Scenario, ScenarioError, Sink};
use crate::telemetry::RoomGeometry;
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::InvalidParameter { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ResampleError> for CliError {
    fn from(e: ResampleError) -> Self {
        match e {
            ResampleError::InvalidPeriod(_) | ResampleError::InvalidRate(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<RenderError> for CliError {
    fn from(e: RenderError) -> Self {
        match e {
            RenderError::InvalidSpec(_) | RenderError::UnsupportedFormat { .. } | RenderError::SeriesCount(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ReadLogError> for CliError {
    fn from(e: ReadLogError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EmitError> for CliError {
    fn from(e: EmitError) -> Self {
        match e {
            EmitError::InvalidThreshold => CliError::Usage(e.to_string()),
            EmitError::Delivery { ref report, .. } => CliError::Data(format!(
                "{e} ({} of {} events acknowledged, {} failed attempts)",
                report.events_acked, report.events_sent, report.failures
            )),
            EmitError::Io(_) => CliError::Data(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "proxemics", version, about = "Proxemic telemetry for shared 3D spaces")]
pub struct Cli {
    /// JSON object of option values keyed by long flag name.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the tick ingest server.
    Serve(ServeArgs),
    /// Generate a synthetic session and write or POST its ticks.
    Simulate(SimulateArgs),
    /// Bucket a tick log into fixed-period frames.
    Resample(ResampleArgs),
    /// Compute a metric over a frame store and write it as CSV.
    Analyze(AnalyzeArgs),
    /// Draw figures from metric CSV tables.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "PROXEMICS_LISTEN", default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    /// Append-only JSON-lines log.
    #[arg(long, env = "PROXEMICS_LOG")]
    pub log: PathBuf,
    #[arg(long, env = "PROXEMICS_MAX_BATCH", default_value_t = DEFAULT_MAX_BATCH)]
    pub max_batch: usize,
    #[arg(long, default_value_t = 64 << 20)]
    pub max_body_bytes: usize,
    /// fsync the log before acknowledging each batch.
    #[arg(long)]
    pub fsync: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub scenario: Option<PathBuf>,
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(presets::PRESET_NAMES))]
    pub preset: Option<String>,
    /// Overrides the scenario's seed (presets default to 42).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write canonical JSON lines here.
    #[arg(long, conflicts_with = "post")]
    pub out: Option<PathBuf>,
    /// POST batches to this ingest URL instead.
    #[arg(long)]
    pub post: Option<String>,
    #[arg(long, default_value_t = DEFAULT_MAX_BATCH)]
    pub threshold: usize,
    #[arg(long, default_value = "simulator")]
    pub session_id: String,
    #[arg(long, default_value_t = 3)]
    pub max_attempts: u32,
    /// Also write the resolved scenario as JSON.
    #[arg(long)]
    pub dump_scenario: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ResampleArgs {
    #[arg(long = "in", value_name = "JSONL")]
    pub input: PathBuf,
    /// Frame store output; with several rooms, one `<stem>.<room>.json` each.
    #[arg(long, default_value = "frames.json")]
    pub out: PathBuf,
    /// Frames per minute [default: 10].
    #[arg(long, conflicts_with = "period_ms")]
    pub per_minute: Option<f64>,
    #[arg(long)]
    pub period_ms: Option<i64>,
    /// Frame 0 start in epoch milliseconds [default: first tick floored to the minute].
    #[arg(long)]
    pub origin_ms: Option<i64>,
    /// Keep only this room.
    #[arg(long)]
    pub room: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    NnHist,
    NnSamples,
    Zones,
    Pairwise,
    Occupancy,
    Quiver,
    Fov,
    Height,
    Extent,
    Groups,
    Timeline,
    Collision,
    Summary,
}

fn defaults() -> EngineParams {
    EngineParams::default()
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long = "in", value_name = "FRAMES")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub metric: Metric,
    /// Output CSV [default: standard output].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Room floor as `WIDTHxDEPTH` meters [default: known room of the store, else 70x40].
    #[arg(long, value_parser = parse_bounds)]
    pub room_bounds: Option<(f64, f64)>,
    #[arg(long, default_value_t = defaults().nn_bin_width)]
    pub bin_width: f64,
    #[arg(long, default_value_t = defaults().nn_range)]
    pub range: f64,
    #[arg(long, default_value_t = defaults().height_bin_width)]
    pub height_bin_width: f64,
    #[arg(long, default_value_t = defaults().height_range)]
    pub height_range: f64,
    #[arg(long, default_value_t = defaults().cell_size)]
    pub cell_size: f64,
    /// View-cone half angle in degrees.
    #[arg(long, default_value_t = defaults().half_angle_deg)]
    pub half_angle: f64,
    /// Attention target `x,y,z` for `fov`.
    #[arg(long, value_parser = parse_vec3)]
    pub target: Option<Vec3>,
    #[arg(long, default_value_t = defaults().eps)]
    pub eps: f64,
    #[arg(long, default_value_t = defaults().min_size)]
    pub min_size: usize,
    #[arg(long, default_value_t = defaults().quantile)]
    pub quantile: f64,
    /// Zone edges `intimate,personal,social` in meters.
    #[arg(long, value_parser = parse_zones, default_value = "0.45,1.2,3.6")]
    pub zones: ZoneBoundaries,
    /// Restrict `pairwise` and `groups` to one frame.
    #[arg(long)]
    pub frame: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long, value_enum)]
    pub kind: Product,
    /// Metric table(s): a grid CSV for heatmaps, a quiver CSV for quivers,
    /// one or two histogram CSVs for charts.
    #[arg(long = "in", required = true, value_name = "CSV")]
    pub inputs: Vec<PathBuf>,
    /// Occupancy grid CSV drawn under a quiver.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Series labels for histogram inputs, in order.
    #[arg(long)]
    pub label: Vec<String>,
    #[arg(long, value_enum, default_value = "nearest-neighbour")]
    pub histogram_kind: HistogramKind,
    #[arg(long, value_enum, default_value = "svg")]
    pub format: Format,
    #[arg(long, default_value = "heat")]
    pub ramp: Ramp,
    #[arg(long, default_value_t = 800)]
    pub width: u32,
    #[arg(long, default_value_t = 600)]
    pub height: u32,
    #[arg(long, default_value_t = defaults().cell_size)]
    pub cell_size: f64,
    #[arg(long)]
    pub overlay_grid: bool,
    #[arg(long)]
    pub no_outline: bool,
    /// Portal marker at floor point `x,z`; repeatable.
    #[arg(long, value_parser = parse_point2)]
    pub portal: Vec<[f64; 2]>,
    #[arg(long, default_value = "session")]
    pub session: String,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let parts: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match parts {
        Ok(v) if v.len() == n && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(format!("expected {n} comma-separated finite numbers")),
    }
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v = parse_floats(s, 3)?;
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn parse_point2(s: &str) -> Result<[f64; 2], String> {
    let v = parse_floats(s, 2)?;
    Ok([v[0], v[1]])
}

fn parse_zones(s: &str) -> Result<ZoneBoundaries, String> {
    let v = parse_floats(s, 3)?;
    ZoneBoundaries::new(v[0], v[1], v[2]).map_err(|e| e.to_string())
}

fn parse_bounds(s: &str) -> Result<(f64, f64), String> {
    let (w, d) = s.split_once(['x', 'X']).ok_or("expected WIDTHxDEPTH")?;
    let w: f64 = w.trim().parse().map_err(|_| "bad width")?;
    let d: f64 = d.trim().parse().map_err(|_| "bad depth")?;
    if w.is_finite() && d.is_finite() && w > 0.0 && d > 0.0 {
        Ok((w, d))
    } else {
        Err("bounds must be positive".into())
    }
}

fn is_flag(arg: &OsString, long: &str) -> bool {
    let a = arg.to_string_lossy();
    a == format!("--{long}") || a.starts_with(&format!("--{long}="))
}

/// Appends `--key value` pairs from the `--config` file for every option of
/// the chosen subcommand that the command line leaves unset.
fn apply_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(pos) = argv.iter().position(|a| is_flag(a, "config")) else {
        return Ok(argv);
    };
    let path = match argv[pos].to_string_lossy().strip_prefix("--config=") {
        Some(p) => PathBuf::from(p),
        None => match argv.get(pos + 1) {
            Some(p) => PathBuf::from(p),
            None => return Ok(argv),
        },
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {} is not a JSON object: {e}", path.display())))?;

    let command = Cli::command();
    let Some(sub) = argv
        .iter()
        .skip(1)
        .find_map(|a| command.find_subcommand(a.to_string_lossy().as_ref()))
    else {
        return Ok(argv);
    };
    let known: BTreeSet<&str> = sub.get_arguments().filter_map(|a| a.get_long()).collect();
    let mut out = argv.clone();
    for (key, value) in map {
        let key = key.replace('_', "-");
        if key == "config" || argv.iter().any(|a| is_flag(a, &key)) {
            continue;
        }
        if !known.contains(key.as_str()) {
            tracing::warn!(key, "config key does not apply to `{}`", sub.get_name());
            continue;
        }
        let mut push = |v: &serde_json::Value| -> Result<(), CliError> {
            let text = match v {
                serde_json::Value::String(s) => s.clone(),
                serde_json::Value::Number(n) => n.to_string(),
                _ => return Err(CliError::Usage(format!("config key `{key}` must be a string, number or boolean"))),
            };
            out.push(format!("--{key}").into());
            out.push(text.into());
            Ok(())
        };
        match &value {
            serde_json::Value::Bool(true) => out.push(format!("--{key}").into()),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => items.iter().try_for_each(&mut push)?,
            other => push(other)?,
        }
    }
    Ok(out)
}

fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info"));
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(io::stderr).try_init();
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    init_logging();
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv = match apply_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Serve(a) => serve(a),
        Command::Simulate(a) => simulate(a),
        Command::Resample(a) => resample_cmd(a),
        Command::Analyze(a) => analyze(a),
        Command::Render(a) => render_cmd(a),
    }
}

fn serve(a: ServeArgs) -> Result<(), CliError> {
    if a.max_batch == 0 {
        return Err(CliError::Usage("--max-batch must be at least 1".into()));
    }
    let mut config = IngestConfig::new(a.listen, a.log);
    config.max_batch = a.max_batch;
    config.max_body_bytes = a.max_body_bytes;
    config.fsync = a.fsync;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(config.listen).await?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        };
        ingest::serve(listener, &config, shutdown).await
    })?;
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn print_json(value: &impl serde::Serialize) -> Result<(), CliError> {
    let mut stdout = io::stdout().lock();
    serde_json::to_writer(&mut stdout, value).map_err(io::Error::from)?;
    writeln!(stdout)?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    if a.out.is_none() && a.post.is_none() && a.dump_scenario.is_none() {
        return Err(CliError::Usage("simulate needs --out, --post or --dump-scenario".into()));
    }
    if a.threshold == 0 {
        return Err(CliError::Usage("--threshold must be at least 1".into()));
    }
    let mut scenario = match (&a.scenario, &a.preset) {
        (Some(path), _) => Scenario::from_json(&read_file(path)?)?,
        (None, Some(name)) => presets::by_name(name, 42).ok_or_else(|| CliError::Usage(format!("unknown preset `{name}`")))?,
        (None, None) => return Err(CliError::Usage("simulate needs --scenario or --preset".into())),
    };
    if let Some(seed) = a.seed {
        scenario.seed = seed;
    }
    if let Some(path) = &a.dump_scenario {
        write_file(path, scenario.to_json_pretty().as_bytes())?;
    }
    let sink = match (a.out, a.post) {
        (Some(path), _) => Sink::File(path),
        (None, Some(url)) => Sink::Http {
            url,
            threshold: a.threshold,
            client_session_id: a.session_id,
            retry: RetryPolicy { max_attempts: a.max_attempts.max(1), ..RetryPolicy::default() },
        },
        (None, None) => return Ok(()),
    };
    let events = sim::run_scenario(&scenario)?;
    tracing::info!(events = events.len(), agents = scenario.agents.len(), seed = scenario.seed, "scenario generated");
    let report = sim::emit(&events, &sink)?;
    print_json(&report)
}

fn room_out_path(out: &Path, room: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "frames".into());
    let ext = out.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "json".into());
    let safe: String = room.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' }).collect();
    out.with_file_name(format!("{stem}.{safe}.{ext}"))
}

fn resample_cmd(a: ResampleArgs) -> Result<(), CliError> {
    let period = match (a.per_minute, a.period_ms) {
        (_, Some(ms)) if ms <= 0 => return Err(ResampleError::InvalidPeriod(ms).into()),
        (_, Some(ms)) => ms,
        (Some(rate), None) => resample::period_from_rate(rate)?,
        (None, None) => resample::DEFAULT_FRAME_PERIOD_MS,
    };
    let readout = ingest::read_log(&a.input)?;
    if readout.dropped_partial > 0 {
        tracing::warn!(lines = readout.dropped_partial, "dropped a torn final line");
    }
    let mut stores = resample::resample_session(readout.log, period, a.origin_ms)?;
    if let Some(room) = &a.room {
        stores.retain(|s| s.room_id() == room);
    }
    stores.retain(|s| !s.is_empty());
    if stores.is_empty() {
        return Err(CliError::Data(format!("no ticks to resample in {}", a.input.display())));
    }
    if stores.len() == 1 {
        write_file(&a.out, stores[0].to_json().as_bytes())?;
    } else {
        for s in &stores {
            write_file(&room_out_path(&a.out, s.room_id()), s.to_json().as_bytes())?;
        }
    }
    print_json(&resample::dataset_summary(&stores))
}

fn room_for(store: &FrameStore, bounds: Option<(f64, f64)>) -> Result<RoomGeometry, CliError> {
    let known = [RoomGeometry::outdoor_meetup(), RoomGeometry::lake_office()];
    match bounds {
        Some((w, d)) => RoomGeometry::new(store.room_id(), w, d, "").map_err(|e| CliError::Usage(e.to_string())),
        None => Ok(known
            .into_iter()
            .find(|r| r.room_id == store.room_id())
            .unwrap_or_else(RoomGeometry::outdoor_meetup)),
    }
}

fn analyze(a: AnalyzeArgs) -> Result<(), CliError> {
    let store = FrameStore::from_json(&read_file(&a.input)?)
        .map_err(|e| CliError::Data(format!("{} is not a frame store: {e}", a.input.display())))?;
    let nn = || -> Vec<f64> { engine::nearest_neighbour_series(&store).into_iter().map(|s| s.distance).collect() };
    let csv = match a.metric {
        Metric::NnHist => export::histogram_csv(&engine::zone_histogram(&nn(), a.bin_width, a.range)?),
        Metric::NnSamples => export::nn_samples_csv(&engine::nearest_neighbour_series(&store)),
        Metric::Height => export::histogram_csv(&engine::height_histogram(&store, a.height_bin_width, a.height_range)?),
        Metric::Zones => {
            let samples = nn();
            if samples.is_empty() {
                return Err(EngineError::Empty("no nearest-neighbour samples").into());
            }
            let mut counts = [0usize; 4];
            for d in &samples {
                counts[a.zones.classify(*d)? as usize] += 1;
            }
            let mut out = String::from("zone,lower,upper,count,fraction\n");
            let edges = a.zones.edges();
            let bounds = [0.0, edges[0], edges[1], edges[2], f64::INFINITY];
            for (i, zone) in engine::ProxemicZone::ALL.iter().enumerate() {
                let upper = if bounds[i + 1].is_finite() { bounds[i + 1].to_string() } else { String::new() };
                out.push_str(&format!(
                    "{},{},{upper},{},{}\n",
                    zone.name(),
                    bounds[i],
                    counts[i],
                    counts[i] as f64 / samples.len() as f64
                ));
            }
            out
        }
        Metric::Collision => {
            let samples = nn();
            let rate = engine::intimate_collision_rate(&samples, a.zones.intimate)?;
            format!("threshold,samples,rate\n{},{},{rate}\n", a.zones.intimate, samples.len())
        }
        Metric::Pairwise => {
            let mut mats = Vec::new();
            for (i, frame) in store.frames() {
                if a.frame.is_none_or(|f| f == i) {
                    mats.push(engine::pairwise(i, frame)?);
                }
            }
            if mats.is_empty() {
                return Err(CliError::Data("no matching frames".into()));
            }
            export::matrices_csv(&mats)
        }
        Metric::Occupancy => export::grid_csv(&engine::occupancy(&store, &room_for(&store, a.room_bounds)?, a.cell_size)?),
        Metric::Quiver => export::quiver_csv(&engine::quiver(&store, &room_for(&store, a.room_bounds)?, a.cell_size)?),
        Metric::Fov => {
            let target = a.target.ok_or_else(|| CliError::Usage("--metric fov needs --target x,y,z".into()))?;
            let s = engine::fov_containment(&store, target, a.half_angle.to_radians())?;
            format!("half_angle_deg,fraction,inside,samples,skipped\n{},{},{},{},{}\n", a.half_angle, s.fraction, s.inside, s.samples, s.skipped)
        }
        Metric::Extent => {
            let e = engine::occupied_extent(&store, a.quantile)?;
            format!(
                "quantile,min_x,max_x,min_z,max_z,width,depth\n{},{},{},{},{},{},{}\n",
                a.quantile,
                e.min_x,
                e.max_x,
                e.min_z,
                e.max_z,
                e.width(),
                e.depth()
            )
        }
        Metric::Groups => {
            let mut clusterings = Vec::new();
            for (i, frame) in store.frames() {
                if a.frame.is_none_or(|f| f == i) {
                    clusterings.push((i, engine::detect_groups(frame, a.eps, a.min_size)?));
                }
            }
            export::clusters_csv(clusterings.iter().map(|(i, c)| (*i, c)))
        }
        Metric::Timeline => export::timeline_csv(&engine::group_timeline(&store, a.eps, a.min_size)?),
        Metric::Summary => {
            let s = store.summary();
            format!("users,frames,pose_count,rooms\n{},{},{},{}\n", s.users, s.frames, s.pose_count, s.rooms)
        }
    };
    match &a.out {
        Some(path) => write_file(path, csv.as_bytes()),
        None => {
            io::stdout().lock().write_all(csv.as_bytes())?;
            Ok(())
        }
    }
}

fn render_cmd(a: RenderArgs) -> Result<(), CliError> {
    let mut spec = RenderSpec::new(a.kind, a.format).with_size(a.width, a.height);
    spec.ramp = a.ramp;
    spec.overlays.grid = a.overlay_grid;
    spec.overlays.room_outline = !a.no_outline;
    spec.overlays.portals = !a.portal.is_empty();
    spec.portal_points = a.portal.clone();
    spec.check()?;
    let table = |e: RenderError| CliError::Data(e.to_string());
    let (bytes, params) = match a.kind {
        Product::Heatmap => {
            let [input] = a.inputs.as_slice() else {
                return Err(CliError::Usage("heatmaps take one --in grid table".into()));
            };
            let grid = tables::parse_grid_csv(&read_file(input)?, a.cell_size).map_err(table)?;
            (render::render_heatmap(&grid, &spec)?, vec![("cell", a.cell_size.to_string())])
        }
        Product::Quiver => {
            let [input] = a.inputs.as_slice() else {
                return Err(CliError::Usage("quivers take one --in quiver table".into()));
            };
            let field = tables::parse_quiver_csv(&read_file(input)?, a.cell_size).map_err(table)?;
            let grid = match &a.grid {
                Some(path) => tables::parse_grid_csv(&read_file(path)?, a.cell_size).map_err(table)?,
                None => engine::OccupancyGrid::empty(field.grid),
            };
            (render::render_quiver(&field, &grid, &spec)?, vec![("cell", a.cell_size.to_string())])
        }
        Product::Histogram => {
            if a.inputs.len() > 2 {
                return Err(CliError::Usage("charts take one or two --in tables".into()));
            }
            let mut series = Vec::new();
            for (i, path) in a.inputs.iter().enumerate() {
                let fallback = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let label = a.label.get(i).cloned().unwrap_or(fallback);
                series.extend(tables::parse_any_histogram(&read_file(path)?, &label, a.histogram_kind).map_err(table)?);
            }
            let bins = series.first().map_or(0, |s| s.values.len());
            let params = vec![("series", series.len().to_string()), ("bins", bins.to_string())];
            (render::render_histogram(&series, &spec)?, params)
        }
    };
    fs::create_dir_all(&a.out_dir)?;
    let path = a.out_dir.join(render::artifact_name(&a.session, a.kind, &params, a.format));
    write_file(&path, &bytes)?;
    println!("{}", path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_parsers() {
        assert_eq!(parse_bounds("70x40").unwrap(), (70.0, 40.0));
        assert!(parse_bounds("70").is_err());
        assert!(parse_bounds("0x4").is_err());
        assert_eq!(parse_vec3("0,1.7,20").unwrap(), Vec3::new(0.0, 1.7, 20.0));
        assert!(parse_vec3("0,1").is_err());
        assert!(parse_zones("1,0.5,3").is_err());
        assert_eq!(parse_point2("1,-2").unwrap(), [1.0, -2.0]);
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["proxemics", "resample", "--in", "x.jsonl", "--per-minute", "0"]), EXIT_USAGE);
        assert_eq!(run(["proxemics", "analyze", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["proxemics"]), EXIT_USAGE);
        assert_eq!(run(["proxemics", "--help"]), EXIT_OK);
    }

    #[test]
    fn missing_input_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("none.jsonl");
        assert_eq!(run(["proxemics".into(), "resample".into(), "--in".into(), missing.into_os_string()]), EXIT_DATA);
    }

    #[test]
    fn config_fills_unset_flags_only() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        fs::write(&cfg, r#"{"per-minute": 20, "room": "hall", "eps": 3, "fsync": true}"#).unwrap();
        let argv: Vec<OsString> = ["proxemics", "resample", "--in", "t.jsonl", "--room", "lobby", "--config"]
            .iter()
            .map(OsString::from)
            .chain([cfg.clone().into_os_string()])
            .collect();
        let out = apply_config(argv).unwrap();
        let Command::Resample(a) = Cli::try_parse_from(out).unwrap().command else { panic!() };
        assert_eq!(a.per_minute, Some(20.0));
        assert_eq!(a.room.as_deref(), Some("lobby"));

        fs::write(&cfg, "[1, 2]").unwrap();
        let argv: Vec<OsString> = vec!["proxemics".into(), "--config".into(), cfg.into_os_string(), "summary".into()];
        assert!(matches!(apply_config(argv), Err(CliError::Usage(_))));
    }

    #[test]
    fn per_room_output_names() {
        assert_eq!(room_out_path(Path::new("out/frames.json"), "lake-office"), PathBuf::from("out/frames.lake-office.json"));
        assert_eq!(room_out_path(Path::new("f"), "a b"), PathBuf::from("f.a-b.json"));
    }
}
