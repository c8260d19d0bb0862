//! Labeled frame-sequence datasets: scene sampling, preprocessing, noise,
//! augmentation, splitting and the on-disk format.
//!
//! A dataset directory holds:
//!
//! - `manifest.json`: dimensions, split counts, seeds, noise and file list.
//! - `frames_<split>.bin`: little-endian `f32`, samples in id order, each
//!   `n_t` row-major `n1x × n2x` frames. No header.
//! - `labels_<split>.csv`: `id,y1,y2,y3,t,sx,sy,sz,g_total`.
//! - `scenes.json`: per-sample scene records (placement, times, pointing).
//! - `dataset_config.json`: the generating configuration.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{OwcError, Result};
use crate::optics::{gains_for_path, solve_candidates, OpticalConstants, SolverSettings};
use crate::par::{self, Exec};
use crate::render::{render_with_paths, CameraModel, RenderSettings};
use crate::rng::{self, SimRng};
use crate::vec3::Vec3;
use crate::wave::{realize_surface, SpectralGrid, SpectrumParams, SurfaceRealization};

pub const FORMAT_VERSION: u32 = 1;

/// Single-channel image with `f32` samples, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl Frame {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Frame {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn at(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f32) {
        self.data[row * self.cols + col] = v;
    }

    /// 0-based `(row, col)` of the largest value (first in row-major order
    /// on ties), or `None` if every value is ≤ 0.
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, f32)> = None;
        for (k, &v) in self.data.iter().enumerate() {
            if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
                best = Some((k, v));
            }
        }
        best.map(|(k, _)| (k / self.cols, k % self.cols))
    }
}

/// Top-left corner (0-based) of the centered `n1x × n2x` crop of an `m × n`
/// image.
pub fn crop_offset(m: usize, n: usize, n1x: usize, n2x: usize) -> (usize, usize) {
    ((m - n1x) / 2, (n - n2x) / 2)
}

/// Center-crops a row-major `m × n` intensity grid and scales it so the
/// crop's maximum is 1. An all-zero crop stays all zero.
pub fn preprocess(raw: &[f64], m: usize, n: usize, n1x: usize, n2x: usize) -> Result<Frame> {
    if raw.len() != m * n {
        return Err(OwcError::Dimension(format!(
            "raw frame has {} values, expected {m}x{n}",
            raw.len()
        )));
    }
    if n1x == 0 || n2x == 0 || n1x > m || n2x > n {
        return Err(OwcError::Dimension(format!(
            "crop {n1x}x{n2x} does not fit a {m}x{n} frame"
        )));
    }
    let (r0, c0) = crop_offset(m, n, n1x, n2x);
    let crop: Vec<f64> = (0..n1x)
        .flat_map(|r| {
            raw[(r0 + r) * n + c0..(r0 + r) * n + c0 + n2x]
                .iter()
                .copied()
        })
        .collect();
    let max = crop.iter().copied().fold(0.0, f64::max);
    let data = if max > 0.0 {
        crop.iter().map(|&v| (v.max(0.0) / max) as f32).collect()
    } else {
        vec![0.0; n1x * n2x]
    };
    Ok(Frame {
        rows: n1x,
        cols: n2x,
        data,
    })
}

/// Noise standard deviation for a peak SNR in dB (peak = 1). `+∞` maps to 0.
pub fn noise_sigma(snr_db: f64) -> Result<f64> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(OwcError::domain("snr_db", snr_db));
    }
    Ok(10f64.powf(-snr_db / 20.0))
}

/// Adds i.i.d. Gaussian noise of the SNR's sigma and clamps at zero.
pub fn inject_noise(frame: &Frame, snr_db: f64, rng: &mut SimRng) -> Result<Frame> {
    let sigma = noise_sigma(snr_db)?;
    if sigma == 0.0 {
        return Ok(frame.clone());
    }
    let data = frame
        .data
        .iter()
        .map(|&v| {
            let z: f64 = rng.sample(StandardNormal);
            (v as f64 + sigma * z).max(0.0) as f32
        })
        .collect();
    Ok(Frame { data, ..*frame })
}

/// Seed of the noise stream for one frame of one sample at one SNR.
pub fn noise_seed(base: u64, snr_db: f64, sample_id: u64, frame: u64) -> u64 {
    rng::derive_seed_path(
        rng::derive_seed(base, rng::STREAM_NOISE),
        &[snr_db.to_bits(), sample_id, frame],
    )
}

/// Seed of the augmentation draw for one sample in one training epoch.
pub fn augment_seed(base: u64, sample_id: u64, epoch: u64) -> u64 {
    rng::derive_seed_path(
        rng::derive_seed(base, rng::STREAM_AUGMENT),
        &[sample_id, epoch],
    )
}

/// Training-time augmentation ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentSettings {
    /// Rotation drawn uniformly from `[−max_rotation, max_rotation]` (rad).
    pub max_rotation: f64,
    /// Integer shift per axis drawn uniformly from `[−max_shift, max_shift]`.
    pub max_shift: i32,
    /// Standard deviation of additive pixel noise.
    pub sigma: f64,
}

impl Default for AugmentSettings {
    fn default() -> Self {
        AugmentSettings {
            max_rotation: 5f64.to_radians(),
            max_shift: 5,
            sigma: 0.01,
        }
    }
}

/// Rotates a frame by `angle` (rad, counter-clockwise in `(col, row)`
/// coordinates) about its center, then shifts it by `(shift_r, shift_c)`
/// pixels. Bilinear sampling, zero outside the source.
pub fn warp_frame(frame: &Frame, angle: f64, shift_r: f64, shift_c: f64) -> Frame {
    let (rows, cols) = (frame.rows, frame.cols);
    let (cr, cc) = ((rows as f64 - 1.0) / 2.0, (cols as f64 - 1.0) / 2.0);
    let (sin, cos) = angle.sin_cos();
    let sample = |r: isize, c: isize| -> f64 {
        if r < 0 || c < 0 || r >= rows as isize || c >= cols as isize {
            0.0
        } else {
            frame.at(r as usize, c as usize) as f64
        }
    };
    let mut out = Frame::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let dx = c as f64 - cc - shift_c;
            let dy = r as f64 - cr - shift_r;
            let sx = cc + cos * dx + sin * dy;
            let sy = cr - sin * dx + cos * dy;
            let (x0, y0) = (sx.floor(), sy.floor());
            let (fx, fy) = (sx - x0, sy - y0);
            let (x0, y0) = (x0 as isize, y0 as isize);
            let v = (1.0 - fy) * ((1.0 - fx) * sample(y0, x0) + fx * sample(y0, x0 + 1))
                + fy * ((1.0 - fx) * sample(y0 + 1, x0) + fx * sample(y0 + 1, x0 + 1));
            out.set(r, c, v as f32);
        }
    }
    out
}

/// One random rotation, shift and noise draw applied to every frame of the
/// sample. The label is untouched; values are clamped to `[0, 1]`.
pub fn augment(sample: &Sample, rng: &mut SimRng, settings: &AugmentSettings) -> Sample {
    let angle = if settings.max_rotation > 0.0 {
        rng.random_range(-settings.max_rotation..=settings.max_rotation)
    } else {
        0.0
    };
    let shift = settings.max_shift.abs();
    let dr = rng.random_range(-shift..=shift) as f64;
    let dc = rng.random_range(-shift..=shift) as f64;
    let frames = sample
        .frames
        .iter()
        .map(|f| {
            let mut w = warp_frame(f, angle, dr, dc);
            if settings.sigma > 0.0 {
                for v in &mut w.data {
                    let z: f64 = rng.sample(StandardNormal);
                    *v = (*v as f64 + settings.sigma * z).clamp(0.0, 1.0) as f32;
                }
            }
            w
        })
        .collect();
    Sample {
        frames,
        ..sample.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Split> {
        Split::ALL.into_iter().find(|x| x.name() == s)
    }
}

/// `(train, val, test)` sizes: `⌊0.7n⌋`, `⌊0.15n⌋` and the rest.
pub fn split_counts(n: usize) -> (usize, usize, usize) {
    let train = n * 70 / 100;
    let val = n * 15 / 100;
    (train, val, n - train - val)
}

/// Split of every id in `0..n`. Ids are ranked by a fixed hash and the
/// ranks are cut at the [`split_counts`] boundaries.
pub fn assign_splits(n: usize) -> Vec<Split> {
    let (train, val, _) = split_counts(n);
    let mut order: Vec<u64> = (0..n as u64).collect();
    order.sort_by_key(|&id| (rng::splitmix64(id), id));
    let mut out = vec![Split::Test; n];
    for (rank, &id) in order.iter().enumerate() {
        out[id as usize] = if rank < train {
            Split::Train
        } else if rank < train + val {
            Split::Val
        } else {
            Split::Test
        };
    }
    out
}

/// Axis-aligned placement box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl SceneBox {
    pub fn sample(&self, rng: &mut SimRng) -> Vec3 {
        let mut axis = |lo: f64, hi: f64| {
            if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        };
        Vec3::new(
            axis(self.min.x, self.max.x),
            axis(self.min.y, self.max.y),
            axis(self.min.z, self.max.z),
        )
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = self.min.is_finite()
            && self.max.is_finite()
            && self.min.x <= self.max.x
            && self.min.y <= self.max.y
            && self.min.z <= self.max.z;
        if ok {
            Ok(())
        } else {
            Err(OwcError::InvalidParam(format!("{name} box has min > max")))
        }
    }
}

/// Everything needed to regenerate a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub samples: usize,
    pub seed: u64,
    pub n_t: usize,
    pub fps: f64,
    /// Raw render size.
    pub m: usize,
    pub n: usize,
    /// Stored crop size.
    pub n1x: usize,
    pub n2x: usize,
    pub focal_length: f64,
    pub pixel_pitch: f64,
    pub spectrum: SpectrumParams,
    pub n_omega: usize,
    pub n_theta: usize,
    /// Frequency band as multiples of the peak frequency.
    pub omega_min_factor: f64,
    pub omega_max_factor: f64,
    pub optics: OpticalConstants,
    pub tx_box: SceneBox,
    pub rx_box: SceneBox,
    /// First-frame time drawn from `[0, t0_max)`.
    pub t0_max: f64,
    /// Half-angle of the cone the acquisition boresight is drawn from (rad).
    pub acquisition_jitter: f64,
    /// Noise baked into stored frames; `None` stores clean frames.
    pub noise_snr_db: Option<f64>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            samples: 200,
            seed: 42,
            n_t: 16,
            fps: 60.0,
            m: 64,
            n: 64,
            n1x: 32,
            n2x: 32,
            focal_length: 0.015,
            pixel_pitch: 1e-4,
            spectrum: SpectrumParams::jonswap(9.80, 10.0, 2e4, 3.3),
            n_omega: 64,
            n_theta: 36,
            omega_min_factor: 0.5,
            omega_max_factor: 5.0,
            optics: OpticalConstants::default(),
            tx_box: SceneBox {
                min: Vec3::new(-3.0, -3.0, -12.0),
                max: Vec3::new(3.0, 3.0, -8.0),
            },
            rx_box: SceneBox {
                min: Vec3::new(-3.0, -3.0, 5.0),
                max: Vec3::new(3.0, 3.0, 8.0),
            },
            t0_max: 100.0,
            acquisition_jitter: 0.02,
            noise_snr_db: None,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(OwcError::InvalidParam(m));
        if self.samples == 0 || self.n_t == 0 {
            return bad("samples and n_t must be >= 1".into());
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return bad(format!("fps must be > 0, got {}", self.fps));
        }
        if self.n1x > self.m || self.n2x > self.n || self.n1x == 0 || self.n2x == 0 {
            return Err(OwcError::Dimension(format!(
                "crop {}x{} does not fit render {}x{}",
                self.n1x, self.n2x, self.m, self.n
            )));
        }
        if !(self.t0_max >= 0.0 && self.t0_max.is_finite()) {
            return bad(format!("t0_max must be >= 0, got {}", self.t0_max));
        }
        if !(self.acquisition_jitter >= 0.0 && self.acquisition_jitter < 0.5) {
            return bad(format!(
                "acquisition_jitter must be in [0, 0.5) rad, got {}",
                self.acquisition_jitter
            ));
        }
        if let Some(s) = self.noise_snr_db {
            noise_sigma(s)?;
        }
        self.spectrum.validate()?;
        self.optics.validate()?;
        self.tx_box.validate("transmitter")?;
        self.rx_box.validate("receiver")?;
        if self.tx_box.max.z >= 0.0 || self.rx_box.min.z <= 0.0 {
            return bad("transmitter box must lie below z = 0 and receiver box above".into());
        }
        self.camera(Vec3::ZERO, -Vec3::Z)?;
        self.spectral_grid()?;
        Ok(())
    }

    pub fn spectral_grid(&self) -> Result<SpectralGrid> {
        let wp = self.spectrum.omega_peak;
        SpectralGrid::logarithmic(
            self.omega_min_factor * wp,
            self.omega_max_factor * wp,
            self.n_omega,
            self.n_theta,
        )
    }

    pub fn surface(&self, seed: u64) -> Result<SurfaceRealization> {
        realize_surface(&self.spectrum, &self.spectral_grid()?, seed)
    }

    pub fn camera(&self, position: Vec3, boresight: Vec3) -> Result<CameraModel> {
        CameraModel::new(
            position,
            boresight,
            self.focal_length,
            self.pixel_pitch,
            self.m,
            self.n,
        )
    }

    pub fn timestamps(&self, t0: f64) -> Vec<f64> {
        (0..self.n_t).map(|k| t0 + k as f64 / self.fps).collect()
    }

    pub fn crop_offset(&self) -> (usize, usize) {
        crop_offset(self.m, self.n, self.n1x, self.n2x)
    }
}

/// Scene behind one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub id: u64,
    pub split: Split,
    pub seed: u64,
    pub surface_seed: u64,
    pub t0: f64,
    pub tx: Vec3,
    pub rx: Vec3,
    /// Receiver camera pointing held over the whole sequence.
    pub camera_boresight: Vec3,
}

/// One row of `labels_<split>.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelRow {
    pub id: u64,
    /// Unit vector from the receiver toward the refraction point.
    pub y: Vec3,
    pub t: f64,
    pub s: Vec3,
    /// Link gain with both ends pointed along the direct path.
    pub g_total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: u64,
    pub frames: Vec<Frame>,
    pub label: LabelRow,
    pub scene: SceneRecord,
}

/// Per-sample seed: the dataset seed mixed with a hash of the id.
pub fn sample_seed(base: u64, id: u64) -> u64 {
    rng::derive_seed(base, id)
}

const MAX_PLACEMENT_TRIES: usize = 1000;

/// Draws the surface and transceiver placement of sample `id`.
///
/// Placements that put the transmitter above or the receiver below the
/// surface at any frame time are redrawn.
pub fn draw_scene(
    cfg: &DatasetConfig,
    id: u64,
    split: Split,
) -> Result<(SceneRecord, SurfaceRealization)> {
    let seed = sample_seed(cfg.seed, id);
    let surface = cfg.surface(seed)?;
    let mut rng = rng::rng_from_seed(rng::derive_seed(seed, rng::STREAM_SCENE));
    for _ in 0..MAX_PLACEMENT_TRIES {
        let tx = cfg.tx_box.sample(&mut rng);
        let rx = cfg.rx_box.sample(&mut rng);
        let t0 = if cfg.t0_max > 0.0 {
            rng.random_range(0.0..cfg.t0_max)
        } else {
            0.0
        };
        let valid = cfg
            .timestamps(t0)
            .iter()
            .all(|&t| tx.z < surface.height(tx.x, tx.y, t) && rx.z > surface.height(rx.x, rx.y, t));
        if !valid {
            continue;
        }
        let s = solve_candidates(
            tx,
            rx,
            &surface,
            t0,
            &cfg.optics,
            &SolverSettings::default(),
        )[0];
        let b0 = s.receiver_direction(rx);
        let camera_boresight = jitter_direction(b0, cfg.acquisition_jitter, &mut rng);
        return Ok((
            SceneRecord {
                id,
                split,
                seed,
                surface_seed: seed,
                t0,
                tx,
                rx,
                camera_boresight,
            },
            surface,
        ));
    }
    Err(OwcError::Scene(format!(
        "no valid placement for sample {id} after {MAX_PLACEMENT_TRIES} draws"
    )))
}

/// Uniform draw from the cone of half-angle `max_angle` around `b`.
fn jitter_direction(b: Vec3, max_angle: f64, rng: &mut SimRng) -> Vec3 {
    let u: f64 = rng.random();
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    if max_angle == 0.0 {
        return b;
    }
    let cos_max = max_angle.cos();
    let cos_a = 1.0 - u * (1.0 - cos_max);
    let sin_a = (1.0 - cos_a * cos_a).max(0.0).sqrt();
    let helper = if b.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
    let u1 = (helper - helper.dot(b) * b).normalize();
    let u2 = b.cross(u1);
    (cos_a * b + sin_a * (phi.cos() * u1 + phi.sin() * u2)).normalize()
}

/// Renders and labels one sample.
pub fn simulate_sample(cfg: &DatasetConfig, id: u64, split: Split, exec: Exec) -> Result<Sample> {
    let (scene, surface) = draw_scene(cfg, id, split)?;
    let camera = cfg.camera(scene.rx, scene.camera_boresight)?;
    let settings = RenderSettings {
        exec,
        ..RenderSettings::default()
    };
    let times = cfg.timestamps(scene.t0);
    let mut frames = Vec::with_capacity(cfg.n_t);
    let mut label = None;
    for (k, &t) in times.iter().enumerate() {
        let paths = solve_candidates(
            scene.tx,
            scene.rx,
            &surface,
            t,
            &cfg.optics,
            &settings.solver,
        );
        let sol = paths[0];
        let tx_boresight = sol.transmitter_direction(scene.tx);
        let geom = crate::optics::LinkGeometry {
            tx: scene.tx,
            rx: scene.rx,
            tx_boresight,
            rx_boresight: camera.boresight,
            t,
            surface: &surface,
        };
        let raw = render_with_paths(&camera, &geom, &cfg.optics, &settings, &paths);
        let mut frame = preprocess(&raw.pixels, cfg.m, cfg.n, cfg.n1x, cfg.n2x)?;
        if let Some(snr) = cfg.noise_snr_db {
            let mut rng = rng::rng_from_seed(noise_seed(cfg.seed, snr, id, k as u64));
            frame = inject_noise(&frame, snr, &mut rng)?;
        }
        frames.push(frame);
        if k + 1 == times.len() {
            let y = sol.receiver_direction(scene.rx);
            let aligned = gains_for_path(&sol, scene.tx, scene.rx, tx_boresight, y, &cfg.optics);
            label = Some(LabelRow {
                id,
                y,
                t,
                s: sol.point,
                g_total: aligned.g_total,
            });
        }
    }
    Ok(Sample {
        id,
        frames,
        label: label.expect("n_t >= 1"),
        scene,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestSeeds {
    pub dataset: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifestNoise {
    /// Peak-optical SNR of noise baked into the frames; `null` when clean.
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub version: u32,
    pub m: usize,
    pub n: usize,
    pub n1x: usize,
    pub n2x: usize,
    pub n_t: usize,
    pub fps: f64,
    pub counts: SplitCounts,
    pub seeds: ManifestSeeds,
    pub noise: ManifestNoise,
    pub files: Vec<String>,
}

impl DatasetManifest {
    pub fn frame_len(&self) -> usize {
        self.n1x * self.n2x
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(OwcError::InvalidParam(format!(
                "unsupported dataset format version {}",
                self.version
            )));
        }
        if self.n1x > self.m || self.n2x > self.n || self.n_t == 0 {
            return Err(OwcError::Dimension(
                "manifest dimensions are inconsistent".into(),
            ));
        }
        Ok(())
    }
}

pub fn frames_file(split: Split) -> String {
    format!("frames_{}.bin", split.name())
}

pub fn labels_file(split: Split) -> String {
    format!("labels_{}.csv", split.name())
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCENES_FILE: &str = "scenes.json";
pub const CONFIG_FILE: &str = "dataset_config.json";
pub const LABELS_HEADER: &str = "id,y1,y2,y3,t,sx,sy,sz,g_total";
pub const PREDICTIONS_HEADER: &str = "id,y1,y2,y3";

/// Nine significant digits, scientific notation.
pub fn format_label_value(v: f64) -> String {
    format!("{v:.8e}")
}

/// Simulates every sample and writes the dataset into `dir`.
///
/// Samples are simulated concurrently under `exec`; each depends only on
/// its own derived seed, and all files are written afterwards in id order,
/// so the output is the same for any worker count.
pub fn generate_dataset(cfg: &DatasetConfig, dir: &Path, exec: Exec) -> Result<DatasetManifest> {
    cfg.validate()?;
    let splits = assign_splits(cfg.samples);
    let results = par::map_range(exec, cfg.samples, |id| {
        simulate_sample(cfg, id as u64, splits[id], Exec::Sequential)
    });
    let samples = results.into_iter().collect::<Result<Vec<_>>>()?;
    write_dataset(cfg, &samples, dir)
}

/// Writes already simulated samples (sorted by id) as a dataset.
pub fn write_dataset(
    cfg: &DatasetConfig,
    samples: &[Sample],
    dir: &Path,
) -> Result<DatasetManifest> {
    std::fs::create_dir_all(dir).map_err(|e| OwcError::io(dir, e))?;
    let mut files = Vec::new();
    let mut counts = SplitCounts {
        train: 0,
        val: 0,
        test: 0,
    };
    for split in Split::ALL {
        let members: Vec<&Sample> = samples.iter().filter(|s| s.scene.split == split).collect();
        match split {
            Split::Train => counts.train = members.len(),
            Split::Val => counts.val = members.len(),
            Split::Test => counts.test = members.len(),
        }
        let fname = frames_file(split);
        write_frames(
            &dir.join(&fname),
            members.iter().flat_map(|s| s.frames.iter()),
        )?;
        files.push(fname);
        let lname = labels_file(split);
        let rows: Vec<LabelRow> = members.iter().map(|s| s.label).collect();
        write_labels(&dir.join(&lname), &rows)?;
        files.push(lname);
    }
    let scenes: Vec<SceneRecord> = samples.iter().map(|s| s.scene).collect();
    write_json(&dir.join(SCENES_FILE), &scenes)?;
    files.push(SCENES_FILE.into());
    write_json(&dir.join(CONFIG_FILE), cfg)?;
    files.push(CONFIG_FILE.into());

    let manifest = DatasetManifest {
        version: FORMAT_VERSION,
        m: cfg.m,
        n: cfg.n,
        n1x: cfg.n1x,
        n2x: cfg.n2x,
        n_t: cfg.n_t,
        fps: cfg.fps,
        counts,
        seeds: ManifestSeeds { dataset: cfg.seed },
        noise: ManifestNoise {
            snr_db: cfg.noise_snr_db,
        },
        files,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| OwcError::Format {
        kind: "json",
        path: path.into(),
        message: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| OwcError::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, kind: &'static str) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| OwcError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| OwcError::Format {
        kind,
        path: path.into(),
        message: e.to_string(),
    })
}

pub fn write_frames<'a>(path: &Path, frames: impl Iterator<Item = &'a Frame>) -> Result<()> {
    let file = File::create(path).map_err(|e| OwcError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for f in frames {
        for &v in &f.data {
            w.write_all(&v.to_le_bytes())
                .map_err(|e| OwcError::io(path, e))?;
        }
    }
    w.flush().map_err(|e| OwcError::io(path, e))
}

/// Reads `count` samples of `n_t` frames of `rows × cols` each.
pub fn read_frames(
    path: &Path,
    count: usize,
    n_t: usize,
    rows: usize,
    cols: usize,
) -> Result<Vec<Vec<Frame>>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| OwcError::io(path, e))?;
    let per_frame = rows * cols;
    let expected = count * n_t * per_frame * 4;
    if bytes.len() != expected {
        return Err(OwcError::Format {
            kind: "frames file",
            path: path.into(),
            message: format!("{} bytes, expected {expected}", bytes.len()),
        });
    }
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(values
        .chunks_exact(n_t * per_frame)
        .map(|sample| {
            sample
                .chunks_exact(per_frame)
                .map(|d| Frame {
                    rows,
                    cols,
                    data: d.to_vec(),
                })
                .collect()
        })
        .collect())
}

pub fn write_labels(path: &Path, rows: &[LabelRow]) -> Result<()> {
    let mut out = String::from(LABELS_HEADER);
    out.push('\n');
    for r in rows {
        let vals = [r.y.x, r.y.y, r.y.z, r.t, r.s.x, r.s.y, r.s.z, r.g_total];
        out.push_str(&r.id.to_string());
        for v in vals {
            out.push(',');
            out.push_str(&format_label_value(v));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| OwcError::io(path, e))
}

fn csv_reader(path: &Path, header: &str, kind: &'static str) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| OwcError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let found = reader
        .headers()
        .map_err(|e| OwcError::Format {
            kind,
            path: path.into(),
            message: e.to_string(),
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if found != header {
        return Err(OwcError::Format {
            kind,
            path: path.into(),
            message: format!("header is `{found}`, expected `{header}`"),
        });
    }
    Ok(reader)
}

fn parse_record<const N: usize>(
    record: &csv::StringRecord,
    path: &Path,
    kind: &'static str,
    line: usize,
) -> Result<(u64, [f64; N])> {
    let err = |message: String| OwcError::Format {
        kind,
        path: path.into(),
        message: format!("line {line}: {message}"),
    };
    if record.len() != N + 1 {
        return Err(err(format!("{} fields, expected {}", record.len(), N + 1)));
    }
    let id = record[0]
        .parse::<u64>()
        .map_err(|e| err(format!("bad id `{}`: {e}", &record[0])))?;
    let mut vals = [0.0; N];
    for (k, v) in vals.iter_mut().enumerate() {
        let field = &record[k + 1];
        *v = field
            .parse::<f64>()
            .map_err(|e| err(format!("bad number `{field}`: {e}")))?;
        if !v.is_finite() {
            return Err(err(format!("non-finite value `{field}`")));
        }
    }
    Ok((id, vals))
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRow>> {
    let mut reader = csv_reader(path, LABELS_HEADER, "labels file")?;
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| OwcError::Format {
            kind: "labels file",
            path: path.into(),
            message: e.to_string(),
        })?;
        let (id, v) = parse_record::<8>(&rec, path, "labels file", k + 2)?;
        rows.push(LabelRow {
            id,
            y: Vec3::new(v[0], v[1], v[2]),
            t: v[3],
            s: Vec3::new(v[4], v[5], v[6]),
            g_total: v[7],
        });
    }
    Ok(rows)
}

/// Reads `predictions.csv` (`id,y1,y2,y3`), renormalizing every row.
pub fn read_predictions(path: &Path) -> Result<BTreeMap<u64, Vec3>> {
    let mut reader = csv_reader(path, PREDICTIONS_HEADER, "predictions file")?;
    let mut out = BTreeMap::new();
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let err = |message: String| OwcError::Format {
            kind: "predictions file",
            path: path.into(),
            message: format!("line {line}: {message}"),
        };
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let (id, v) = parse_record::<3>(&rec, path, "predictions file", line)?;
        let y = Vec3::new(v[0], v[1], v[2])
            .try_normalize()
            .ok_or_else(|| err(format!("zero prediction for id {id}")))?;
        if out.insert(id, y).is_some() {
            return Err(err(format!("duplicate id {id}")));
        }
    }
    Ok(out)
}

pub fn write_predictions(path: &Path, rows: &[(u64, Vec3)]) -> Result<()> {
    let mut out = String::from(PREDICTIONS_HEADER);
    out.push('\n');
    for (id, y) in rows {
        out.push_str(&format!("{id},{:e},{:e},{:e}\n", y.x, y.y, y.z));
    }
    std::fs::write(path, out).map_err(|e| OwcError::io(path, e))
}

/// A dataset directory opened for reading.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub dir: PathBuf,
    pub manifest: DatasetManifest,
    pub config: DatasetConfig,
    pub scenes: Vec<SceneRecord>,
}

impl Dataset {
    pub fn open(dir: &Path) -> Result<Self> {
        let manifest: DatasetManifest = read_json(&dir.join(MANIFEST_FILE), "manifest")?;
        manifest.validate()?;
        for f in &manifest.files {
            let p = dir.join(f);
            if !p.is_file() {
                return Err(OwcError::Format {
                    kind: "manifest",
                    path: dir.join(MANIFEST_FILE),
                    message: format!("listed file {f} does not exist"),
                });
            }
        }
        let config: DatasetConfig = read_json(&dir.join(CONFIG_FILE), "dataset config")?;
        let scenes: Vec<SceneRecord> = read_json(&dir.join(SCENES_FILE), "scene records")?;
        let mismatch = config.n_t != manifest.n_t
            || config.n1x != manifest.n1x
            || config.n2x != manifest.n2x
            || config.m != manifest.m
            || config.n != manifest.n;
        if mismatch {
            return Err(OwcError::Format {
                kind: "dataset config",
                path: dir.join(CONFIG_FILE),
                message: "dimensions disagree with the manifest".into(),
            });
        }
        Ok(Dataset {
            dir: dir.into(),
            manifest,
            config,
            scenes,
        })
    }

    pub fn load_split(&self, split: Split) -> Result<Vec<Sample>> {
        let m = &self.manifest;
        let count = m.counts.get(split);
        let frames_path = self.dir.join(frames_file(split));
        let labels_path = self.dir.join(labels_file(split));
        let frames = read_frames(&frames_path, count, m.n_t, m.n1x, m.n2x)?;
        let labels = read_labels(&labels_path)?;
        if labels.len() != count {
            return Err(OwcError::Format {
                kind: "labels file",
                path: labels_path,
                message: format!("{} rows, manifest says {count}", labels.len()),
            });
        }
        let by_id: BTreeMap<u64, &SceneRecord> = self.scenes.iter().map(|s| (s.id, s)).collect();
        frames
            .into_iter()
            .zip(labels)
            .map(|(frames, label)| {
                let scene =
                    by_id
                        .get(&label.id)
                        .copied()
                        .copied()
                        .ok_or_else(|| OwcError::Format {
                            kind: "scene records",
                            path: self.dir.join(SCENES_FILE),
                            message: format!("no scene for sample {}", label.id),
                        })?;
                Ok(Sample {
                    id: label.id,
                    frames,
                    label,
                    scene,
                })
            })
            .collect()
    }

    /// Every split, merged and sorted by id.
    pub fn load_all(&self) -> Result<Vec<Sample>> {
        let mut all = Vec::new();
        for split in Split::ALL {
            all.extend(self.load_split(split)?);
        }
        all.sort_by_key(|s| s.id);
        Ok(all)
    }
}
