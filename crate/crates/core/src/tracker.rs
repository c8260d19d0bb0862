//! Tracker contract and the non-learned baselines.
//!
//! A tracker sees one sequence at a time. The harness calls
//! [`Tracker::begin`] with the sample id and the receiver's initial pointing,
//! then [`Tracker::step`] per frame; every output is a unit vector from the
//! receiver along the commanded line of sight.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::{read_predictions, Frame};
use crate::error::{OwcError, Result};
use crate::optics::{solve_refraction_point, LinkGeometry, OpticalConstants, SolverSettings};
use crate::render::CameraModel;
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerOutput {
    pub y_hat: Vec3,
    pub confidence: Option<f64>,
    pub latency_frames: usize,
}

impl TrackerOutput {
    /// Wraps a direction, renormalizing it.
    pub fn new(y: Vec3, confidence: Option<f64>) -> Result<Self> {
        let y_hat = y
            .try_normalize()
            .ok_or_else(|| OwcError::InvalidParam("tracker produced a zero direction".into()))?;
        Ok(TrackerOutput {
            y_hat,
            confidence,
            latency_frames: 0,
        })
    }
}

/// What a tracker may look at on one frame.
#[derive(Debug, Clone, Copy)]
pub struct TrackInput<'a> {
    pub sample_id: u64,
    pub frame_index: usize,
    pub t: f64,
    /// Preprocessed crop, when the harness rendered one.
    pub image: Option<&'a Frame>,
    /// 0-based position of the crop's top-left pixel in the full screen.
    pub crop_offset: (usize, usize),
    /// Camera that captured `image`.
    pub camera: &'a CameraModel,
    /// Direct-path direction; only the oracle reads it.
    pub truth: Option<Vec3>,
}

pub trait Tracker: Send {
    fn name(&self) -> String;

    /// Whether [`Tracker::step`] needs `input.image`.
    fn uses_images(&self) -> bool {
        false
    }

    /// Whether the output depends on earlier frames. Trackers without
    /// history may be stepped only on the frames that are scored.
    fn needs_history(&self) -> bool {
        false
    }

    /// Whether the transmitter is steered during this tracker's run. The
    /// no-alignment baseline leaves it at its mount orientation.
    fn steers_transmitter(&self) -> bool {
        true
    }

    fn begin(&mut self, sample_id: u64, initial_pointing: Vec3) -> Result<()>;

    fn step(&mut self, input: &TrackInput<'_>) -> Result<TrackerOutput>;
}

/// Exact direction from the receiver to the solved refraction point.
pub fn oracle_track(geom: &LinkGeometry<'_>, consts: &OpticalConstants) -> Result<TrackerOutput> {
    geom.validate()?;
    let sol = solve_refraction_point(
        geom.tx,
        geom.rx,
        geom.surface,
        geom.t,
        consts,
        &SolverSettings::default(),
    );
    if !sol.converged {
        return Err(OwcError::Scene(format!(
            "refraction solver did not converge after {} iterations",
            sol.iterations
        )));
    }
    TrackerOutput::new(sol.receiver_direction(geom.rx), Some(1.0))
}

#[derive(Debug, Clone, Default)]
pub struct OracleTracker;

impl Tracker for OracleTracker {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn begin(&mut self, _: u64, _: Vec3) -> Result<()> {
        Ok(())
    }

    fn step(&mut self, input: &TrackInput<'_>) -> Result<TrackerOutput> {
        let y = input
            .truth
            .ok_or_else(|| OwcError::InvalidParam("oracle needs the true direction".into()))?;
        TrackerOutput::new(y, Some(1.0))
    }
}

/// Keeps the initial pointing forever.
#[derive(Debug, Clone, Default)]
pub struct NoAlignmentTracker {
    initial: Option<Vec3>,
}

impl Tracker for NoAlignmentTracker {
    fn name(&self) -> String {
        "none".into()
    }

    fn steers_transmitter(&self) -> bool {
        false
    }

    fn begin(&mut self, _: u64, initial_pointing: Vec3) -> Result<()> {
        self.initial = Some(initial_pointing);
        Ok(())
    }

    fn step(&mut self, _: &TrackInput<'_>) -> Result<TrackerOutput> {
        let y = self
            .initial
            .ok_or_else(|| OwcError::InvalidParam("tracker used before begin".into()))?;
        TrackerOutput::new(y, None)
    }
}

/// Mean-shift window parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanShiftParams {
    pub bandwidth: f64,
    pub eps: f64,
    pub max_iters: usize,
}

impl Default for MeanShiftParams {
    fn default() -> Self {
        MeanShiftParams {
            bandwidth: 6.0,
            eps: 0.05,
            max_iters: 30,
        }
    }
}

/// Window state; `center` is a continuous 0-based `(row, col)` position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanShiftState {
    pub center: (f64, f64),
    pub bandwidth: f64,
    pub max_iters: usize,
    pub eps: f64,
}

impl MeanShiftState {
    pub fn new(center: (f64, f64), params: &MeanShiftParams) -> Self {
        MeanShiftState {
            center,
            bandwidth: params.bandwidth,
            max_iters: params.max_iters,
            eps: params.eps,
        }
    }
}

/// One mean-shift update: the intensity-weighted mean of the pixels within
/// `bandwidth` of `center`, or `None` when that window carries no weight.
pub fn meanshift_iteration(
    frame: &Frame,
    center: (f64, f64),
    bandwidth: f64,
) -> Option<(f64, f64)> {
    let (cr, cc) = center;
    let r_lo = (cr - bandwidth).ceil().max(0.0) as usize;
    let c_lo = (cc - bandwidth).ceil().max(0.0) as usize;
    let r_hi = ((cr + bandwidth).floor() as isize).min(frame.rows as isize - 1);
    let c_hi = ((cc + bandwidth).floor() as isize).min(frame.cols as isize - 1);
    if r_hi < 0 || c_hi < 0 {
        return None;
    }
    let (mut w, mut sr, mut sc) = (0.0, 0.0, 0.0);
    let b2 = bandwidth * bandwidth;
    for r in r_lo..=r_hi as usize {
        for c in c_lo..=c_hi as usize {
            let (dr, dc) = (r as f64 - cr, c as f64 - cc);
            if dr * dr + dc * dc > b2 {
                continue;
            }
            let v = frame.at(r, c) as f64;
            if v > 0.0 {
                w += v;
                sr += v * r as f64;
                sc += v * c as f64;
            }
        }
    }
    (w > 0.0).then(|| (sr / w, sc / w))
}

/// Iterates [`meanshift_iteration`] until the shift drops below `eps` or
/// `max_iters` is reached. An empty window leaves the center unchanged.
pub fn meanshift_step(frame: &Frame, state: &MeanShiftState) -> Result<MeanShiftState> {
    if frame.data.is_empty() {
        return Err(OwcError::Dimension("mean-shift on an empty frame".into()));
    }
    if !(state.bandwidth > 0.0) {
        return Err(OwcError::domain("bandwidth", state.bandwidth));
    }
    let mut center = state.center;
    for _ in 0..state.max_iters {
        let Some(next) = meanshift_iteration(frame, center, state.bandwidth) else {
            break;
        };
        let shift = (next.0 - center.0).hypot(next.1 - center.1);
        center = next;
        if shift < state.eps {
            break;
        }
    }
    Ok(MeanShiftState { center, ..*state })
}

/// Outward line of sight through the continuous 1-based screen position
/// `(i, j)`.
pub fn pixel_to_direction(center: (f64, f64), camera: &CameraModel) -> Vec3 {
    camera.direction_through(center.0, center.1)
}

/// Mean-shift on the beacon image, carried across frames as a direction so
/// re-pointing the camera between frames keeps the window on the beacon.
#[derive(Debug, Clone, Default)]
pub struct MeanShiftTracker {
    pub params: MeanShiftParams,
    last: Option<Vec3>,
}

impl MeanShiftTracker {
    pub fn new(params: MeanShiftParams) -> Self {
        MeanShiftTracker { params, last: None }
    }
}

impl Tracker for MeanShiftTracker {
    fn name(&self) -> String {
        "meanshift".into()
    }

    fn uses_images(&self) -> bool {
        true
    }

    fn needs_history(&self) -> bool {
        true
    }

    fn begin(&mut self, _: u64, _: Vec3) -> Result<()> {
        self.last = None;
        Ok(())
    }

    fn step(&mut self, input: &TrackInput<'_>) -> Result<TrackerOutput> {
        let frame = input
            .image
            .ok_or_else(|| OwcError::InvalidParam("mean-shift needs an image".into()))?;
        let (off_r, off_c) = (input.crop_offset.0 as f64, input.crop_offset.1 as f64);
        let clamp = |v: f64, hi: usize| v.clamp(0.0, hi as f64 - 1.0);
        let start = match self.last.and_then(|d| input.camera.pixel_of_direction(d)) {
            Some((i, j)) => (
                clamp(i - 1.0 - off_r, frame.rows),
                clamp(j - 1.0 - off_c, frame.cols),
            ),
            None => match frame.argmax() {
                Some((r, c)) => (r as f64, c as f64),
                None => (
                    (frame.rows as f64 - 1.0) / 2.0,
                    (frame.cols as f64 - 1.0) / 2.0,
                ),
            },
        };
        let state = meanshift_step(frame, &MeanShiftState::new(start, &self.params))?;
        let (r, c) = state.center;
        let y = pixel_to_direction((r + 1.0 + off_r, c + 1.0 + off_c), input.camera);
        self.last = Some(y);
        TrackerOutput::new(y, None)
    }
}

/// Replays `predictions.csv` rows by sample id.
#[derive(Debug, Clone)]
pub struct FileTracker {
    path: PathBuf,
    predictions: Arc<BTreeMap<u64, Vec3>>,
    current: Option<Vec3>,
}

impl FileTracker {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::from_predictions(path, read_predictions(path)?))
    }

    pub fn from_predictions(path: &Path, predictions: BTreeMap<u64, Vec3>) -> Self {
        FileTracker {
            path: path.into(),
            predictions: Arc::new(predictions),
            current: None,
        }
    }

    /// Errors with every id in `ids` that has no prediction row.
    pub fn check_coverage(&self, ids: impl IntoIterator<Item = u64>) -> Result<()> {
        let missing: Vec<u64> = ids
            .into_iter()
            .filter(|id| !self.predictions.contains_key(id))
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(OwcError::MissingPredictions(missing))
        }
    }
}

impl Tracker for FileTracker {
    fn name(&self) -> String {
        format!("file:{}", self.path.display())
    }

    fn begin(&mut self, sample_id: u64, _: Vec3) -> Result<()> {
        self.current = Some(
            *self
                .predictions
                .get(&sample_id)
                .ok_or(OwcError::MissingPredictions(vec![sample_id]))?,
        );
        Ok(())
    }

    fn step(&mut self, _: &TrackInput<'_>) -> Result<TrackerOutput> {
        let y = self
            .current
            .ok_or_else(|| OwcError::InvalidParam("tracker used before begin".into()))?;
        TrackerOutput::new(y, None)
    }
}

/// Parsed tracker specification: `oracle | meanshift | none | file:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub enum TrackerSpec {
    Oracle,
    MeanShift,
    None,
    File(PathBuf),
}

pub const TRACKER_SPECS: &str = "oracle, meanshift, none, file:<path>";

impl FromStr for TrackerSpec {
    type Err = OwcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "oracle" => Ok(TrackerSpec::Oracle),
            "meanshift" => Ok(TrackerSpec::MeanShift),
            "none" => Ok(TrackerSpec::None),
            other => match other.strip_prefix("file:") {
                Some(p) if !p.is_empty() => Ok(TrackerSpec::File(p.into())),
                _ => Err(OwcError::Config(format!(
                    "unknown tracker `{other}`; valid trackers: {TRACKER_SPECS}"
                ))),
            },
        }
    }
}

impl fmt::Display for TrackerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrackerSpec::Oracle => f.write_str("oracle"),
            TrackerSpec::MeanShift => f.write_str("meanshift"),
            TrackerSpec::None => f.write_str("none"),
            TrackerSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Comma-separated list of tracker specs.
pub fn parse_tracker_list(s: &str) -> Result<Vec<TrackerSpec>> {
    let specs = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<_>>>()?;
    if specs.is_empty() {
        return Err(OwcError::Config(format!(
            "no tracker given; valid trackers: {TRACKER_SPECS}"
        )));
    }
    Ok(specs)
}

/// Builds fresh tracker instances for each sequence. Prediction files are
/// read once.
#[derive(Debug, Clone)]
pub struct TrackerFactory {
    pub spec: TrackerSpec,
    pub meanshift: MeanShiftParams,
    file: Option<FileTracker>,
}

impl TrackerFactory {
    pub fn new(spec: TrackerSpec, meanshift: MeanShiftParams) -> Result<Self> {
        let file = match &spec {
            TrackerSpec::File(p) => Some(FileTracker::load(p)?),
            _ => None,
        };
        Ok(TrackerFactory {
            spec,
            meanshift,
            file,
        })
    }

    pub fn label(&self) -> String {
        self.spec.to_string()
    }

    pub fn create(&self) -> Box<dyn Tracker> {
        match &self.spec {
            TrackerSpec::Oracle => Box::new(OracleTracker),
            TrackerSpec::MeanShift => Box::new(MeanShiftTracker::new(self.meanshift)),
            TrackerSpec::None => Box::new(NoAlignmentTracker::default()),
            TrackerSpec::File(_) => Box::new(self.file.clone().expect("loaded in new")),
        }
    }

    /// For file trackers, errors listing every id without a prediction.
    pub fn check_coverage(&self, ids: impl IntoIterator<Item = u64>) -> Result<()> {
        match &self.file {
            Some(f) => f.check_coverage(ids),
            None => Ok(()),
        }
    }
}

/// Runs a tracker over one sequence with carried state.
pub fn track_sequence(
    tracker: &mut dyn Tracker,
    sample_id: u64,
    initial_pointing: Vec3,
    inputs: &[TrackInput<'_>],
) -> Result<Vec<TrackerOutput>> {
    if inputs.is_empty() {
        return Err(OwcError::InvalidParam("empty frame sequence".into()));
    }
    tracker.begin(sample_id, initial_pointing)?;
    inputs.iter().map(|inp| tracker.step(inp)).collect()
}
