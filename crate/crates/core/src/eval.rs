//! Tracker scoring: angle error and received signal strength per frame,
//! closed-loop temporal runs, noise sweeps and their CSV/plot outputs.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{
    draw_scene, inject_noise, noise_seed, preprocess, Dataset, DatasetConfig, Frame, Sample, Split,
};
use crate::error::{OwcError, Result};
use crate::optics::{
    evaluate_link, gains_for_path, solve_candidates, GainBreakdown, LinkGeometry, OpticalConstants,
    RefractionSolution, SolverSettings,
};
use crate::par::{self, Exec};
use crate::render::{
    intersect_surface, render_with_paths, CameraModel, MarchSettings, RayStage, RenderSettings,
    TraceRay,
};
use crate::rng;
use crate::tracker::{TrackInput, Tracker, TrackerFactory};
use crate::vec3::Vec3;
use crate::wave::SurfaceRealization;

/// Angle between two unit vectors, in `[0, π]`.
///
/// Evaluated as `atan2(|a × b|, a · b)`, which equals the arccosine of the
/// dot product but keeps full precision for nearly parallel vectors.
pub fn angle_difference(y_hat: Vec3, y: Vec3) -> Result<f64> {
    for v in [y_hat, y] {
        let n = v.norm();
        if !((n - 1.0).abs() <= 1e-6) {
            return Err(OwcError::domain("direction norm", n));
        }
    }
    Ok(y_hat.angle_to(y))
}

/// Received signal strength with the receiver boresight of `geom`, plus the
/// gain breakdown (whose `converged` flag marks a zeroed solve).
pub fn rss_for_pointing(
    geom: &LinkGeometry<'_>,
    consts: &OpticalConstants,
    solver: &SolverSettings,
) -> Result<(f64, GainBreakdown)> {
    geom.validate()?;
    let gains = evaluate_link(geom, consts, solver).gains;
    Ok((gains.rss(consts), gains))
}

/// How the transmitter is steered while a receiver tracker is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxPointing {
    /// Exactly at the refraction point.
    Oracle,
    /// At the point where the receiver's commanded line of sight meets the
    /// surface.
    Mapped,
}

impl FromStr for TxPointing {
    type Err = OwcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(TxPointing::Oracle),
            "mapped" => Ok(TxPointing::Mapped),
            _ => Err(OwcError::Config(format!(
                "tx_pointing must be oracle or mapped, got `{s}`"
            ))),
        }
    }
}

impl TxPointing {
    pub fn name(self) -> &'static str {
        match self {
            TxPointing::Oracle => "oracle",
            TxPointing::Mapped => "mapped",
        }
    }
}

/// Where the line of sight `rx + k·dir` meets the surface.
pub fn surface_point_along(
    rx: Vec3,
    dir: Vec3,
    surface: &SurfaceRealization,
    t: f64,
) -> Option<Vec3> {
    let ray = TraceRay {
        origin: rx,
        direction: dir,
        stage: RayStage::Screen,
    };
    intersect_surface(&ray, surface, t, &MarchSettings::default()).map(|h| h.point)
}

/// Options shared by dataset evaluation and temporal runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub tx_pointing: TxPointing,
    /// Transmitter orientation when it is not steered.
    pub tx_mount: Vec3,
    /// Peak SNR of injected image noise; `None` leaves frames clean.
    pub snr_db: Option<f64>,
    pub noise_seed: u64,
    pub exec: Exec,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            tx_pointing: TxPointing::Oracle,
            tx_mount: Vec3::Z,
            snr_db: None,
            noise_seed: 42,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub tracker: String,
    /// Frame index in temporal runs, sample id in dataset evaluation.
    pub frame: u64,
    pub t: f64,
    pub angle_err: f64,
    pub rss: f64,
    pub gains: GainBreakdown,
}

/// True refraction point and a tracker's pointing mapped onto the surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub frame: u64,
    pub t: f64,
    pub true_s: Vec3,
    pub tracker: String,
    pub point: Option<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerFailure {
    pub tracker: String,
    pub frame: u64,
    pub message: String,
}

/// Rows of one evaluation, grouped by tracker in the order given, then by
/// frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalRun {
    pub scores: Vec<FrameScore>,
    pub trace: Vec<TracePoint>,
    pub failures: Vec<TrackerFailure>,
}

struct Scored {
    score: FrameScore,
    trace: TracePoint,
    pointing: Vec3,
}

/// Scores one pointing decision against the solved direct path.
#[allow(clippy::too_many_arguments)]
fn score_pointing(
    tracker: &dyn Tracker,
    label: &str,
    frame: u64,
    t: f64,
    y_hat: Vec3,
    sol: &RefractionSolution,
    tx: Vec3,
    rx: Vec3,
    surface: &SurfaceRealization,
    consts: &OpticalConstants,
    opts: &EvalOptions,
) -> Result<Scored> {
    let truth = sol.receiver_direction(rx);
    let tx_boresight = if !tracker.steers_transmitter() {
        opts.tx_mount
    } else {
        match opts.tx_pointing {
            TxPointing::Oracle => sol.transmitter_direction(tx),
            TxPointing::Mapped => surface_point_along(rx, y_hat, surface, t)
                .and_then(|p| (p - tx).try_normalize())
                .unwrap_or(opts.tx_mount),
        }
    };
    let gains = gains_for_path(sol, tx, rx, tx_boresight, y_hat, consts);
    Ok(Scored {
        score: FrameScore {
            tracker: label.into(),
            frame,
            t,
            angle_err: angle_difference(y_hat, truth)?,
            rss: gains.rss(consts),
            gains,
        },
        trace: TracePoint {
            frame,
            t,
            true_s: sol.point,
            tracker: label.into(),
            point: surface_point_along(rx, y_hat, surface, t),
        },
        pointing: y_hat,
    })
}

/// A stored sample with its scene rebuilt and its last frame solved.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub sample: Sample,
    pub surface: SurfaceRealization,
    pub camera: CameraModel,
    pub solution: RefractionSolution,
}

/// Rebuilds surfaces and cameras and solves the scored (last) frame.
pub fn prepare_samples(
    config: &DatasetConfig,
    samples: Vec<Sample>,
    exec: Exec,
) -> Result<Vec<PreparedSample>> {
    let prepared = par::map_slice(exec, &samples, |s| -> Result<PreparedSample> {
        let surface = config.surface(s.scene.surface_seed)?;
        let camera = config.camera(s.scene.rx, s.scene.camera_boresight)?;
        let t = *config.timestamps(s.scene.t0).last().expect("n_t >= 1");
        let solution = solve_candidates(
            s.scene.tx,
            s.scene.rx,
            &surface,
            t,
            &config.optics,
            &SolverSettings::default(),
        )[0];
        Ok(PreparedSample {
            sample: s.clone(),
            surface,
            camera,
            solution,
        })
    });
    prepared.into_iter().collect()
}

/// Loads a split (or every split when `split` is `None`) ready for scoring.
pub fn load_for_eval(
    ds: &Dataset,
    split: Option<Split>,
    exec: Exec,
) -> Result<Vec<PreparedSample>> {
    let samples = match split {
        Some(s) => ds.load_split(s)?,
        None => ds.load_all()?,
    };
    prepare_samples(&ds.config, samples, exec)
}

fn noisy_frames(frames: &[Frame], id: u64, opts: &EvalOptions) -> Result<Vec<Frame>> {
    match opts.snr_db {
        None => Ok(frames.to_vec()),
        Some(snr) => frames
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let mut rng = rng::rng_from_seed(noise_seed(opts.noise_seed, snr, id, k as u64));
                inject_noise(f, snr, &mut rng)
            })
            .collect(),
    }
}

/// Open-loop evaluation of stored sequences: each tracker runs over a
/// sample's frames as captured and is scored on the last frame.
pub fn evaluate_dataset(
    config: &DatasetConfig,
    samples: &[PreparedSample],
    trackers: &[TrackerFactory],
    opts: &EvalOptions,
) -> Result<EvalRun> {
    if trackers.is_empty() {
        return Err(OwcError::InvalidParam("no trackers to evaluate".into()));
    }
    for f in trackers {
        f.check_coverage(samples.iter().map(|s| s.sample.id))?;
    }
    let crop_offset = config.crop_offset();
    let per_sample = par::map_slice(
        opts.exec,
        samples,
        |p| -> Result<Vec<std::result::Result<Scored, TrackerFailure>>> {
            let s = &p.sample;
            let frames = noisy_frames(&s.frames, s.id, opts)?;
            let last = frames.len() - 1;
            let t_last = *config.timestamps(s.scene.t0).last().expect("n_t >= 1");
            let truth = p.solution.receiver_direction(s.scene.rx);
            Ok(trackers
                .iter()
                .map(|factory| {
                    let mut tracker = factory.create();
                    let label = factory.label();
                    let fail = |e: OwcError| TrackerFailure {
                        tracker: label.clone(),
                        frame: s.id,
                        message: e.to_string(),
                    };
                    tracker.begin(s.id, p.camera.boresight).map_err(fail)?;
                    let mut out = None;
                    for (k, frame) in frames.iter().enumerate() {
                        if k != last && !tracker.needs_history() {
                            continue;
                        }
                        let input = TrackInput {
                            sample_id: s.id,
                            frame_index: k,
                            t: s.scene.t0 + k as f64 / config.fps,
                            image: tracker.uses_images().then_some(frame),
                            crop_offset,
                            camera: &p.camera,
                            truth: (k == last).then_some(truth),
                        };
                        out = Some(tracker.step(&input).map_err(fail)?);
                    }
                    let y_hat = out.expect("last frame is always stepped").y_hat;
                    score_pointing(
                        tracker.as_ref(),
                        &label,
                        s.id,
                        t_last,
                        y_hat,
                        &p.solution,
                        s.scene.tx,
                        s.scene.rx,
                        &p.surface,
                        &config.optics,
                        opts,
                    )
                    .map_err(fail)
                })
                .collect())
        },
    );
    let per_sample = per_sample.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(collect_by_tracker(trackers.len(), per_sample))
}

/// Reorders `[sample][tracker]` results into tracker-major rows.
fn collect_by_tracker(
    n_trackers: usize,
    per_frame: Vec<Vec<std::result::Result<Scored, TrackerFailure>>>,
) -> EvalRun {
    let mut columns: Vec<Vec<std::result::Result<Scored, TrackerFailure>>> =
        (0..n_trackers).map(|_| Vec::new()).collect();
    for row in per_frame {
        for (k, cell) in row.into_iter().enumerate() {
            columns[k].push(cell);
        }
    }
    flatten(columns)
}

fn flatten(columns: Vec<Vec<std::result::Result<Scored, TrackerFailure>>>) -> EvalRun {
    let mut run = EvalRun::default();
    for col in columns {
        for cell in col {
            match cell {
                Ok(s) => {
                    run.scores.push(s.score);
                    run.trace.push(s.trace);
                }
                Err(f) => run.failures.push(f),
            }
        }
    }
    run
}

/// Live, closed-loop simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalConfig {
    /// Physics, camera and placement ranges.
    pub scene: DatasetConfig,
    /// Which placement draw of `scene` to simulate.
    pub scene_id: u64,
    pub frames: usize,
    /// Re-point the camera to each tracker output before the next frame.
    pub closed_loop: bool,
    pub opts: EvalOptions,
}

/// Simulates `frames` frames at the scene frame rate. Every tracker drives
/// its own receiver; frames are rendered per tracker only when it uses
/// images. A tracker that fails stops, the others continue.
pub fn run_temporal(cfg: &TemporalConfig, trackers: &[TrackerFactory]) -> Result<EvalRun> {
    if trackers.is_empty() {
        return Err(OwcError::InvalidParam("no trackers to run".into()));
    }
    if cfg.frames == 0 {
        return Err(OwcError::InvalidParam("frames must be >= 1".into()));
    }
    let sc = &cfg.scene;
    sc.validate()?;
    let (scene, surface) = draw_scene(sc, cfg.scene_id, Split::Test)?;
    for f in trackers {
        f.check_coverage([cfg.scene_id])?;
    }
    let times: Vec<f64> = (0..cfg.frames)
        .map(|k| scene.t0 + k as f64 / sc.fps)
        .collect();
    for &t in &times {
        let valid = scene.tx.z < surface.height(scene.tx.x, scene.tx.y, t)
            && scene.rx.z > surface.height(scene.rx.x, scene.rx.y, t);
        if !valid {
            return Err(OwcError::Scene(format!(
                "a transceiver crosses the surface at t = {t}"
            )));
        }
    }
    let opts = &cfg.opts;
    let paths: Vec<Vec<RefractionSolution>> = par::map_slice(opts.exec, &times, |&t| {
        solve_candidates(
            scene.tx,
            scene.rx,
            &surface,
            t,
            &sc.optics,
            &SolverSettings::default(),
        )
    });
    let crop_offset = sc.crop_offset();
    let render_settings = RenderSettings {
        exec: Exec::Sequential,
        ..RenderSettings::default()
    };

    let columns = par::map_slice(opts.exec, trackers, |factory| {
        let label = factory.label();
        let mut tracker = factory.create();
        let mut cells: Vec<std::result::Result<Scored, TrackerFailure>> = Vec::new();
        let fail = |k: usize, e: OwcError| TrackerFailure {
            tracker: label.clone(),
            frame: k as u64,
            message: e.to_string(),
        };
        let mut camera = match sc.camera(scene.rx, scene.camera_boresight) {
            Ok(c) => c,
            Err(e) => {
                cells.push(Err(fail(0, e)));
                return cells;
            }
        };
        if let Err(e) = tracker.begin(cfg.scene_id, camera.boresight) {
            cells.push(Err(fail(0, e)));
            return cells;
        }
        for (k, &t) in times.iter().enumerate() {
            let sol = paths[k][0];
            let step = (|| -> Result<Scored> {
                let image = if tracker.uses_images() {
                    let tx_boresight = if !tracker.steers_transmitter() {
                        opts.tx_mount
                    } else {
                        match opts.tx_pointing {
                            TxPointing::Oracle => sol.transmitter_direction(scene.tx),
                            TxPointing::Mapped => {
                                surface_point_along(scene.rx, camera.boresight, &surface, t)
                                    .and_then(|p| (p - scene.tx).try_normalize())
                                    .unwrap_or(opts.tx_mount)
                            }
                        }
                    };
                    let geom = LinkGeometry {
                        tx: scene.tx,
                        rx: scene.rx,
                        tx_boresight,
                        rx_boresight: camera.boresight,
                        t,
                        surface: &surface,
                    };
                    let raw =
                        render_with_paths(&camera, &geom, &sc.optics, &render_settings, &paths[k]);
                    let mut frame = preprocess(&raw.pixels, sc.m, sc.n, sc.n1x, sc.n2x)?;
                    if let Some(snr) = opts.snr_db {
                        let mut rng = rng::rng_from_seed(noise_seed(
                            opts.noise_seed,
                            snr,
                            cfg.scene_id,
                            k as u64,
                        ));
                        frame = inject_noise(&frame, snr, &mut rng)?;
                    }
                    Some(frame)
                } else {
                    None
                };
                let input = TrackInput {
                    sample_id: cfg.scene_id,
                    frame_index: k,
                    t,
                    image: image.as_ref(),
                    crop_offset,
                    camera: &camera,
                    truth: Some(sol.receiver_direction(scene.rx)),
                };
                let out = tracker.step(&input)?;
                score_pointing(
                    tracker.as_ref(),
                    &label,
                    k as u64,
                    t,
                    out.y_hat,
                    &sol,
                    scene.tx,
                    scene.rx,
                    &surface,
                    &sc.optics,
                    opts,
                )
            })();
            match step {
                Ok(s) => {
                    let y_hat = s.pointing;
                    cells.push(Ok(s));
                    if cfg.closed_loop {
                        match camera.repointed(y_hat) {
                            Ok(c) => camera = c,
                            Err(e) => {
                                cells.push(Err(fail(k, e)));
                                break;
                            }
                        }
                    }
                }
                Err(e) => {
                    cells.push(Err(fail(k, e)));
                    break;
                }
            }
        }
        cells
    });

    Ok(flatten(columns))
}

/// Mean and standard error of one tracker at one SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tracker: String,
    pub snr_db: f64,
    pub mean_angle_err: f64,
    pub stderr_angle: f64,
    pub mean_rss: f64,
    pub stderr_rss: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub snr_db: Vec<f64>,
    /// Tracker-major, SNR in the order requested.
    pub rows: Vec<SweepRow>,
}

/// `(mean, standard error)`; the standard error of a single value is 0.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Per-tracker aggregates of a score table, in tracker order of first
/// appearance.
pub fn aggregate(scores: &[FrameScore], snr_db: f64) -> Vec<SweepRow> {
    let mut names: Vec<&str> = Vec::new();
    for s in scores {
        if !names.contains(&s.tracker.as_str()) {
            names.push(&s.tracker);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let rows: Vec<&FrameScore> = scores.iter().filter(|s| s.tracker == name).collect();
            let angles: Vec<f64> = rows.iter().map(|s| s.angle_err).collect();
            let rss: Vec<f64> = rows.iter().map(|s| s.rss).collect();
            let (ma, sa) = mean_stderr(&angles);
            let (mr, sr) = mean_stderr(&rss);
            SweepRow {
                tracker: name.into(),
                snr_db,
                mean_angle_err: ma,
                stderr_angle: sa,
                mean_rss: mr,
                stderr_rss: sr,
                n: rows.len(),
            }
        })
        .collect()
}

/// Re-evaluates the samples once per SNR with fresh noise. `+∞` means clean
/// frames.
pub fn run_noise_sweep(
    config: &DatasetConfig,
    samples: &[PreparedSample],
    trackers: &[TrackerFactory],
    snr_db: &[f64],
    opts: &EvalOptions,
) -> Result<SweepResult> {
    if snr_db.is_empty() {
        return Err(OwcError::InvalidParam("empty SNR list".into()));
    }
    let mut per_snr = Vec::with_capacity(snr_db.len());
    for &snr in snr_db {
        crate::dataset::noise_sigma(snr)?;
        let run_opts = EvalOptions {
            snr_db: (snr != f64::INFINITY).then_some(snr),
            ..*opts
        };
        let run = evaluate_dataset(config, samples, trackers, &run_opts)?;
        if let Some(f) = run.failures.first() {
            return Err(OwcError::InvalidParam(format!(
                "tracker {} failed on sample {}: {}",
                f.tracker, f.frame, f.message
            )));
        }
        per_snr.push(aggregate(&run.scores, snr));
    }
    let mut rows = Vec::new();
    for k in 0..trackers.len() {
        for agg in &per_snr {
            if let Some(r) = agg.get(k) {
                rows.push(r.clone());
            }
        }
    }
    Ok(SweepResult {
        snr_db: snr_db.to_vec(),
        rows,
    })
}

pub const SCORES_HEADER: &str = "tracker,frame,t,angle_err_rad,rss,gd,ga,gpath,gref";
pub const SWEEP_HEADER: &str = "tracker,snr_db,mean_angle_err,stderr_angle,mean_rss,stderr_rss,n";
pub const TRACE_HEADER: &str = "frame,t,true_sx,true_sy,tracker,point_sx,point_sy";

/// Shortest round-trip scientific notation.
fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| OwcError::io(path, e))
}

pub fn scores_csv(scores: &[FrameScore]) -> String {
    let mut out = format!("{SCORES_HEADER}\n");
    for s in scores {
        let g = &s.gains;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.tracker,
            s.frame,
            num(s.t),
            num(s.angle_err),
            num(s.rss),
            num(g.g_d),
            num(g.g_a),
            num(g.g_path),
            num(g.g_ref)
        );
    }
    out
}

pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in &sweep.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.tracker,
            num(r.snr_db),
            num(r.mean_angle_err),
            num(r.stderr_angle),
            num(r.mean_rss),
            num(r.stderr_rss),
            r.n
        );
    }
    out
}

pub fn trace_csv(trace: &[TracePoint]) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for p in trace {
        let (px, py) = p.point.map_or((f64::NAN, f64::NAN), |q| (q.x, q.y));
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.frame,
            num(p.t),
            num(p.true_s.x),
            num(p.true_s.y),
            p.tracker,
            num(px),
            num(py)
        );
    }
    out
}

pub fn write_scores_csv(path: &Path, scores: &[FrameScore]) -> Result<()> {
    write_text(path, &scores_csv(scores))
}

pub fn write_sweep_csv(path: &Path, sweep: &SweepResult) -> Result<()> {
    write_text(path, &sweep_csv(sweep))
}

pub fn write_trace_csv(path: &Path, trace: &[TracePoint]) -> Result<()> {
    write_text(path, &trace_csv(trace))
}

/// Gnuplot script plotting mean angle error and mean RSS against SNR, one
/// curve per tracker, from `csv_name` in the same directory.
pub fn gnuplot_script(sweep: &SweepResult, csv_name: &str) -> String {
    let mut trackers: Vec<&str> = Vec::new();
    for r in &sweep.rows {
        if !trackers.contains(&r.tracker.as_str()) {
            trackers.push(&r.tracker);
        }
    }
    let curves = |col: usize, err: usize| {
        trackers
            .iter()
            .map(|t| {
                format!(
                    "  '{csv_name}' using 2:(strcol(1) eq \"{t}\" ? ${col} : 1/0):(strcol(1) eq \"{t}\" ? ${err} : 1/0) with yerrorlines title \"{t}\""
                )
            })
            .collect::<Vec<_>>()
            .join(", \\\n")
    };
    format!(
        "# mean +- standard error per tracker; SNR is peak-optical dB\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set xlabel 'peak SNR (dB)'\n\
         set xrange [*:*] reverse\n\
         set terminal pngcairo size 900,400\n\
         set output 'sweep.png'\n\
         set multiplot layout 1,2\n\
         set ylabel 'mean angle error (rad)'\n\
         plot \\\n{}\n\
         set ylabel 'mean RSS'\n\
         plot \\\n{}\n\
         unset multiplot\n",
        curves(3, 4),
        curves(5, 6)
    )
}

pub fn write_gnuplot_script(path: &Path, sweep: &SweepResult, csv_name: &str) -> Result<()> {
    write_text(path, &gnuplot_script(sweep, csv_name))
}
