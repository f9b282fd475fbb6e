//! The `dmt` command line.
//!
//! Exit status: 0 on success, 1 on usage or validation errors, 2 when a file
//! cannot be read, written or parsed.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::benchmark::{run_fit_benchmark, DEFAULT_CONFIGS};
use crate::error::{Error, Result};
use crate::export::{
    export_animated_svg, export_frames, load_model, resample_framerate, save_model,
};
use crate::fitting::DEFAULT_RIDGE_LAMBDA;
use crate::init::{
    compose_density_map, init_animation, load_mask_areas, stroke_width_schedule, DensityMap,
    InitConfig, MaskAreas, DEFAULT_BETA, DEFAULT_NUM_STROKES, DEFAULT_W_MAX,
};
use crate::maps::{load_pgm, GrayMap};
use crate::optimize::{
    finite_difference_check, optimize_animation, save_history, LossWeights, Objective,
    OptimConfig, DEFAULT_N_P,
};
use crate::synthetic::{dance_tracks, SyntheticConfig};
use crate::tracking::{
    build_motion_heatmap, default_bandwidth, load_tracks, save_tracks, TrackFormat, TrackSet,
    TrackedPoint,
};
use crate::trajectory::{default_trajectory_degree, SketchAnimation, DEFAULT_CURVE_DEGREE};
use crate::Point;

#[derive(Debug, Parser)]
#[command(name = "dmt", version, about = "Polynomial motion trajectories for animated vector sketches")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compare interpolation, least squares and ridge fits of point tracks.
    FitBench(FitBenchArgs),
    /// Build an initial model from tracks and guidance maps.
    Init(InitArgs),
    /// Optimize a model against tracks.
    Optimize(OptimizeArgs),
    /// Write per-frame SVGs and/or an animated SVG.
    Export(ExportArgs),
    /// Resample a model to another frame rate as an animated SVG.
    Interp(InterpArgs),
    /// Compare analytic gradients with central differences.
    CheckGrad(CheckGradArgs),
    /// Generate synthetic point tracks.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Markdown,
}

#[derive(Debug, Args)]
struct FitBenchArgs {
    /// Track file (JSON or CSV); synthetic tracks when omitted.
    #[arg(long)]
    tracks: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_RIDGE_LAMBDA)]
    lambda: f64,
    /// Comma-separated `frames:degree` pairs.
    #[arg(long, value_parser = parse_configs)]
    configs: Option<Vec<(usize, usize)>>,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_configs(s: &str) -> std::result::Result<Vec<(usize, usize)>, String> {
    s.split(',')
        .map(|pair| {
            let (f, d) = pair
                .split_once(':')
                .ok_or_else(|| format!("expected frames:degree, got '{pair}'"))?;
            let f = f.trim().parse().map_err(|_| format!("bad frame count '{f}'"))?;
            let d = d.trim().parse().map_err(|_| format!("bad degree '{d}'"))?;
            Ok((f, d))
        })
        .collect()
}

#[derive(Debug, Args)]
struct InitArgs {
    #[arg(long)]
    tracks: PathBuf,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    /// Edge map (PGM); uniform when omitted.
    #[arg(long)]
    xdog: Option<PathBuf>,
    /// Attention map (PGM); uniform when omitted.
    #[arg(long)]
    attention: Option<PathBuf>,
    /// Canvas width; taken from the maps when omitted, else 512.
    #[arg(long)]
    width: Option<u32>,
    #[arg(long)]
    height: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_NUM_STROKES)]
    strokes: usize,
    #[arg(long, default_value_t = DEFAULT_BETA)]
    beta: f64,
    /// Trajectory degree; ceil(N_f / 2) - 1 when omitted.
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_RIDGE_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_CURVE_DEGREE)]
    curve_degree: usize,
    /// Initial stroke length in pixels; 0.05 * max(W, H) when omitted.
    #[arg(long)]
    span: Option<f64>,
    /// Motion heatmap RBF bandwidth; 0.05 * max(W, H) when omitted.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// CSV of `frame,area_pixels`.
    #[arg(long, conflicts_with = "mask_area")]
    mask_areas: Option<PathBuf>,
    /// Constant mask area in pixels; the whole canvas when omitted.
    #[arg(long)]
    mask_area: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_W_MAX)]
    w_max: f64,
}

#[derive(Debug, Args)]
struct LossArgs {
    /// Attachment weight.
    #[arg(long, default_value_t = LossWeights::default().w_s)]
    w_s: f64,
    /// Consistency weight.
    #[arg(long, default_value_t = LossWeights::default().w_c)]
    w_c: f64,
    /// Points sampled per stroke.
    #[arg(long, default_value_t = DEFAULT_N_P)]
    n_p: usize,
    /// Per-stroke target trajectories (JSON `[[[x, y], ...], ...]`); the
    /// model's own stroke midpoints when omitted.
    #[arg(long)]
    targets: Option<PathBuf>,
}

impl LossArgs {
    fn weights(&self) -> LossWeights {
        LossWeights {
            w_s: self.w_s,
            w_g: 0.0,
            w_c: self.w_c,
        }
    }
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    tracks: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Loss history CSV.
    #[arg(long)]
    log: Option<PathBuf>,
    #[command(flatten)]
    loss: LossArgs,
    #[arg(long, default_value_t = OptimConfig::default().iterations)]
    iterations: usize,
    #[arg(long, default_value_t = OptimConfig::default().step_size)]
    step: f64,
    #[arg(long, default_value_t = OptimConfig::default().moment_decay_1)]
    beta1: f64,
    #[arg(long, default_value_t = OptimConfig::default().moment_decay_2)]
    beta2: f64,
    #[arg(long, default_value_t = OptimConfig::default().epsilon)]
    epsilon: f64,
    #[arg(long, default_value_t = OptimConfig::default().log_every)]
    log_every: usize,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    model: PathBuf,
    /// Directory for frame_00000.svg, ...
    #[arg(long, required_unless_present = "animated")]
    frames: Option<PathBuf>,
    /// Animated SVG output.
    #[arg(long)]
    animated: Option<PathBuf>,
    #[arg(long, default_value_t = 12.0)]
    fps: f64,
}

#[derive(Debug, Args)]
struct InterpArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input_fps: f64,
    #[arg(long)]
    output_fps: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CheckGradArgs {
    #[arg(long)]
    model: PathBuf,
    /// Track file; the model's stroke midpoints when omitted.
    #[arg(long)]
    tracks: Option<PathBuf>,
    #[command(flatten)]
    loss: LossArgs,
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 16)]
    points: usize,
    #[arg(long, default_value_t = 50)]
    frames: usize,
    #[arg(long, default_value_t = 512)]
    width: u32,
    #[arg(long, default_value_t = 512)]
    height: u32,
    #[arg(long, default_value_t = 0.5)]
    noise: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

/// Runs the CLI on `argv` (program name first) and returns the exit status.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io_or_parse() {
                2
            } else {
                1
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::FitBench(a) => fit_bench(a),
        Command::Init(a) => init(a),
        Command::Optimize(a) => optimize(a),
        Command::Export(a) => export(a),
        Command::Interp(a) => interp(a),
        Command::CheckGrad(a) => check_grad(a),
        Command::Synth(a) => synth(a),
    }
}

fn read_tracks(path: &Path) -> Result<TrackSet> {
    load_tracks(path, TrackFormat::from_path(path))
}

fn write_out(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn fit_bench(a: FitBenchArgs) -> Result<()> {
    let tracks = match &a.tracks {
        Some(p) => read_tracks(p)?,
        None => dance_tracks(&SyntheticConfig::default())?,
    };
    let configs = a.configs.unwrap_or_else(|| DEFAULT_CONFIGS.to_vec());
    let table = run_fit_benchmark(&tracks, &configs, a.lambda);
    let text = match a.format {
        TableFormat::Csv => table.to_csv(),
        TableFormat::Markdown => table.to_markdown(),
    };
    write_out(a.output.as_deref(), &text)
}

fn init(a: InitArgs) -> Result<()> {
    let tracks = read_tracks(&a.tracks)?;
    let xdog = a.xdog.as_deref().map(load_pgm).transpose()?;
    let attention = a.attention.as_deref().map(load_pgm).transpose()?;
    let map_dims = xdog
        .as_ref()
        .or(attention.as_ref())
        .map(|m| (m.width as u32, m.height as u32));
    let width = a.width.or(map_dims.map(|d| d.0)).unwrap_or(512);
    let height = a.height.or(map_dims.map(|d| d.1)).unwrap_or(512);
    if width == 0 || height == 0 {
        return Err(Error::Validation("canvas dimensions must be positive".into()));
    }
    let (w, h) = (width as usize, height as usize);
    let xdog = xdog.unwrap_or_else(|| GrayMap::uniform(w, h, 1.0));
    let attention = attention.unwrap_or_else(|| GrayMap::uniform(w, h, 1.0));
    for (name, m) in [("xdog", &xdog), ("attention", &attention)] {
        if (m.width, m.height) != (w, h) {
            return Err(Error::Validation(format!(
                "{name} map is {}x{}, canvas is {w}x{h}",
                m.width, m.height
            )));
        }
    }
    let bandwidth = a.bandwidth.unwrap_or_else(|| default_bandwidth(w, h));
    let motion = build_motion_heatmap(&tracks, w, h, bandwidth)?;
    let density = match compose_density_map(&xdog, &attention, &motion, a.beta) {
        Err(Error::Degenerate(msg)) => {
            log::warn!("{msg}; falling back to a uniform density");
            DensityMap::uniform(w, h)?
        }
        other => other?,
    };
    let n_f = tracks.num_frames();
    let canvas = (width, height);
    let mask = match (&a.mask_areas, a.mask_area) {
        (Some(p), _) => load_mask_areas(p, canvas)?,
        (None, Some(area)) => MaskAreas::constant(area, n_f, canvas)?,
        (None, None) => MaskAreas::constant(w as f64 * h as f64, n_f, canvas)?,
    };
    if mask.areas().len() != n_f {
        return Err(Error::Validation(format!(
            "{} mask areas for {n_f} frames",
            mask.areas().len()
        )));
    }
    let widths = stroke_width_schedule(&mask, a.w_max)?;
    let mut config = InitConfig::for_clip(n_f, width, height);
    config.num_strokes = a.strokes;
    config.beta = a.beta;
    config.trajectory_degree = a.degree.unwrap_or_else(|| default_trajectory_degree(n_f));
    config.ridge_lambda = a.lambda;
    config.rng_seed = a.seed;
    config.curve_degree = a.curve_degree;
    if let Some(span) = a.span {
        config.initial_stroke_span = span;
    }
    let anim = init_animation(&config, &density, &tracks, widths)?;
    save_model(&anim, &a.out)?;
    log::info!("wrote {} strokes to {}", anim.strokes().len(), a.out.display());
    Ok(())
}

fn midpoints(anim: &SketchAnimation) -> Result<Vec<Vec<Point>>> {
    anim.strokes()
        .iter()
        .map(|s| {
            (0..anim.num_frames())
                .map(|i| s.eval(0.5, anim.frame_time(i)))
                .collect()
        })
        .collect()
}

fn load_targets(path: &Path) -> Result<Vec<Vec<Point>>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: Vec<Vec<[f64; 2]>> =
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))?;
    Ok(raw
        .into_iter()
        .map(|t| t.into_iter().map(|p| Point::new(p[0], p[1])).collect())
        .collect())
}

fn targets_for(loss: &LossArgs, anim: &SketchAnimation) -> Result<Vec<Vec<Point>>> {
    match &loss.targets {
        Some(p) => load_targets(p),
        None => midpoints(anim),
    }
}

fn optimize(a: OptimizeArgs) -> Result<()> {
    let anim = load_model(&a.model)?;
    let tracks = read_tracks(&a.tracks)?;
    let targets = targets_for(&a.loss, &anim)?;
    let objective = Objective::new(&tracks, &targets, a.loss.weights(), a.loss.n_p)?;
    let config = OptimConfig {
        iterations: a.iterations,
        step_size: a.step,
        moment_decay_1: a.beta1,
        moment_decay_2: a.beta2,
        n_p: a.loss.n_p,
        epsilon: a.epsilon,
        log_every: a.log_every,
    };
    let (out, history) = optimize_animation(&anim, &objective, &config)?;
    save_model(&out, &a.out)?;
    if let Some(log_path) = &a.log {
        save_history(&history, log_path)?;
    }
    if let (Some(first), Some(last)) = (history.first(), history.last()) {
        log::info!("total loss {:.6e} -> {:.6e}", first.loss.total, last.loss.total);
    }
    Ok(())
}

fn export(a: ExportArgs) -> Result<()> {
    let anim = load_model(&a.model)?;
    if let Some(dir) = &a.frames {
        let written = export_frames(&anim, dir)?;
        log::info!("wrote {} frames to {}", written.len(), dir.display());
    }
    if let Some(path) = &a.animated {
        let plan = resample_framerate(&anim, a.fps, a.fps)?;
        export_animated_svg(&anim, &plan, path)?;
    }
    Ok(())
}

fn interp(a: InterpArgs) -> Result<()> {
    let anim = load_model(&a.model)?;
    let plan = resample_framerate(&anim, a.input_fps, a.output_fps)?;
    export_animated_svg(&anim, &plan, &a.out)?;
    log::info!(
        "{} input frames -> {} output frames",
        anim.num_frames(),
        plan.output_frame_times.len()
    );
    Ok(())
}

fn check_grad(a: CheckGradArgs) -> Result<()> {
    let anim = load_model(&a.model)?;
    let targets = targets_for(&a.loss, &anim)?;
    let tracks = match &a.tracks {
        Some(p) => read_tracks(p)?,
        None => {
            let mids = midpoints(&anim)?;
            let points = mids
                .into_iter()
                .enumerate()
                .map(|(id, coords)| TrackedPoint {
                    id: id as i64,
                    coords,
                })
                .collect();
            TrackSet::new(anim.num_frames(), points)?
        }
    };
    let objective = Objective::new(&tracks, &targets, a.loss.weights(), a.loss.n_p)?;
    let err = finite_difference_check(&anim, &objective, a.step)?;
    println!("{err:.3e}");
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let tracks = dance_tracks(&SyntheticConfig {
        num_points: a.points,
        num_frames: a.frames,
        canvas: (a.width, a.height),
        noise: a.noise,
        amplitude: 1.0,
        seed: a.seed,
    })?;
    save_tracks(&tracks, &a.out)
}
