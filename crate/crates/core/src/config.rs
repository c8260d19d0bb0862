//! Flat `key = value` run configuration.
//!
//! One key per parameter, `#` starts a comment, unknown or repeated keys are
//! rejected. Every key has a command-line flag of the same name with `_`
//! replaced by `-` (plus a few short aliases, see [`KEYS`]). [`RunConfig::render`]
//! prints the fully resolved configuration in the same format, so an echoed
//! configuration can be fed back in unchanged.

use std::path::{Path, PathBuf};

use crate::dataset::{DatasetConfig, SceneBox, Split};
use crate::error::{OwcError, Result};
use crate::eval::{EvalOptions, TemporalConfig, TxPointing};
use crate::optics::OpticalConstants;
use crate::par::Exec;
use crate::tracker::MeanShiftParams;
use crate::vec3::Vec3;
use crate::wave::{jonswap_alpha, jonswap_peak_frequency, SpectrumParams};

/// Name, flag alias and one-line description of a configuration key.
#[derive(Debug, Clone, Copy)]
pub struct KeyInfo {
    pub key: &'static str,
    /// Extra flag accepted besides the key's own dashed form.
    pub alias: Option<&'static str>,
    pub help: &'static str,
}

const fn key(key: &'static str, help: &'static str) -> KeyInfo {
    KeyInfo {
        key,
        alias: None,
        help,
    }
}

const fn aliased(key: &'static str, alias: &'static str, help: &'static str) -> KeyInfo {
    KeyInfo {
        key,
        alias: Some(alias),
        help,
    }
}

pub const KEYS: &[KeyInfo] = &[
    key("seed", "base seed of every random stream"),
    key("out", "output directory"),
    key("samples", "number of dataset samples"),
    // environment
    key("gravity", "gravitational acceleration (m/s^2)"),
    aliased(
        "wind_speed_10m",
        "wind-speed",
        "wind speed 10 m above the sea (m/s)",
    ),
    key("fetch", "fetch length (m)"),
    key("peak_enhancement", "JONSWAP peak enhancement factor"),
    key(
        "spread_p",
        "cos(2 theta) coefficient of the directional factor",
    ),
    key(
        "spread_q",
        "cos(4 theta) coefficient of the directional factor",
    ),
    key("sigma_low", "JONSWAP peak width below the peak frequency"),
    key("sigma_high", "JONSWAP peak width above the peak frequency"),
    key(
        "phillips_alpha",
        "Phillips constant, or auto to derive from wind and fetch",
    ),
    key("omega_peak", "peak angular frequency (rad/s), or auto"),
    key("n_omega", "frequency samples of the surface"),
    key("n_theta", "direction samples of the surface"),
    key(
        "omega_min_factor",
        "lowest sampled frequency as a multiple of omega_peak",
    ),
    key(
        "omega_max_factor",
        "highest sampled frequency as a multiple of omega_peak",
    ),
    // channel
    key("n_water", "refractive index of sea water"),
    key("n_air", "refractive index of air"),
    key("wavelength", "laser wavelength (m)"),
    key("a_w", "absorption coefficient of water (1/m)"),
    key("b_w", "scattering coefficient of water (1/m)"),
    key("a_a", "absorption coefficient of air (1/m)"),
    key("b_a", "scattering coefficient of air (1/m)"),
    key("omega_d", "maximum departure half-angle of the laser (rad)"),
    key(
        "omega_a",
        "maximum arrival half-angle of the detector (rad)",
    ),
    key("i0", "transmitted intensity"),
    key(
        "source_radius",
        "radius of the transmitter as seen by the camera (m)",
    ),
    // vision
    key("focal_length", "camera focal length (m)"),
    key("pixel_pitch", "screen pixel pitch (m)"),
    key("m", "rendered rows"),
    key("n", "rendered columns"),
    key("n1x", "stored crop rows"),
    key("n2x", "stored crop columns"),
    key("n_t", "frames per sample"),
    key("fps", "screen sampling rate (frames/s)"),
    // scenes
    key(
        "tx_box_min",
        "transmitter placement box, lower corner x,y,z (m)",
    ),
    key(
        "tx_box_max",
        "transmitter placement box, upper corner x,y,z (m)",
    ),
    key(
        "rx_box_min",
        "receiver placement box, lower corner x,y,z (m)",
    ),
    key(
        "rx_box_max",
        "receiver placement box, upper corner x,y,z (m)",
    ),
    key("t0_max", "first-frame time drawn from [0, t0_max) (s)"),
    key(
        "acquisition_jitter",
        "half-angle of the initial receiver pointing error (rad)",
    ),
    aliased(
        "noise_snr_db",
        "noise-snr",
        "peak SNR of image noise in dB, or none (baked in by gen, injected by track/simulate)",
    ),
    // evaluation
    key(
        "tx_pointing",
        "transmitter steering during evaluation: oracle or mapped",
    ),
    key(
        "tx_mount",
        "transmitter orientation when not steered, x,y,z",
    ),
    key(
        "eval_split",
        "split scored by track and sweep: all, train, val or test",
    ),
    key(
        "closed_loop",
        "re-point the receiver to each tracker output (simulate)",
    ),
    key("frames", "frames simulated by simulate"),
    key("scene_id", "placement draw used by simulate and render"),
    key("meanshift_bandwidth", "mean-shift window radius (px)"),
    key("meanshift_eps", "mean-shift convergence shift (px)"),
    key("meanshift_max_iters", "mean-shift iterations per frame"),
];

/// Dashed flag name of a key.
pub fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub dataset: DatasetConfig,
    /// `None` derives the value from wind, fetch and gravity.
    pub phillips_alpha: Option<f64>,
    pub omega_peak: Option<f64>,
    pub tx_pointing: TxPointing,
    pub tx_mount: Vec3,
    pub eval_split: Option<Split>,
    pub closed_loop: bool,
    pub frames: usize,
    pub scene_id: u64,
    pub meanshift: MeanShiftParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            out: PathBuf::from("out"),
            dataset: DatasetConfig::default(),
            phillips_alpha: None,
            omega_peak: None,
            tx_pointing: TxPointing::Oracle,
            tx_mount: Vec3::Z,
            eval_split: None,
            closed_loop: true,
            frames: 600,
            scene_id: 0,
            meanshift: MeanShiftParams::default(),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| OwcError::Config(format!("{key}: `{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(OwcError::Config(format!("{key}: `{v}` is not finite")));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| OwcError::Config(format!("{key}: `{v}` is not a non-negative integer")))
}

fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.parse()
        .map_err(|_| OwcError::Config(format!("{key}: `{v}` is not a non-negative integer")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(OwcError::Config(format!(
            "{key}: `{v}` is not true or false"
        ))),
    }
}

fn parse_vec3(key: &str, v: &str) -> Result<Vec3> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(OwcError::Config(format!("{key}: `{v}` is not x,y,z")));
    }
    Ok(Vec3::new(
        parse_f64(key, parts[0])?,
        parse_f64(key, parts[1])?,
        parse_f64(key, parts[2])?,
    ))
}

fn parse_auto(key: &str, v: &str) -> Result<Option<f64>> {
    if v == "auto" {
        Ok(None)
    } else {
        parse_f64(key, v).map(Some)
    }
}

/// Parses an SNR in dB; `none` means no noise and `inf` is accepted as the
/// noiseless limit.
pub fn parse_snr(key: &str, v: &str) -> Result<Option<f64>> {
    match v {
        "none" => Ok(None),
        "inf" | "+inf" => Ok(Some(f64::INFINITY)),
        _ => parse_f64(key, v).map(Some),
    }
}

/// Comma-separated SNR list for sweeps; `inf` is allowed.
pub fn parse_snr_list(v: &str) -> Result<Vec<f64>> {
    let items: Vec<&str> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(OwcError::Config("--snr needs at least one value".into()));
    }
    items
        .into_iter()
        .map(|s| match parse_snr("snr", s)? {
            Some(x) => Ok(x),
            None => Ok(f64::INFINITY),
        })
        .collect()
}

fn fmt_vec3(v: Vec3) -> String {
    format!("{},{},{}", v.x, v.y, v.z)
}

fn fmt_opt(v: Option<f64>, none: &str) -> String {
    v.map_or_else(|| none.to_string(), |x| x.to_string())
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let d = &mut self.dataset;
        let sp = &mut d.spectrum;
        let op = &mut d.optics;
        match key {
            "seed" => self.seed = parse_u64(key, v)?,
            "out" => {
                if v.is_empty() {
                    return Err(OwcError::Config("out: empty path".into()));
                }
                self.out = PathBuf::from(v)
            }
            "samples" => d.samples = parse_usize(key, v)?,
            "gravity" => sp.gravity = parse_f64(key, v)?,
            "wind_speed_10m" => sp.wind_speed_10m = parse_f64(key, v)?,
            "fetch" => sp.fetch = parse_f64(key, v)?,
            "peak_enhancement" => sp.peak_enhancement = parse_f64(key, v)?,
            "spread_p" => sp.spread_p = parse_f64(key, v)?,
            "spread_q" => sp.spread_q = parse_f64(key, v)?,
            "sigma_low" => sp.sigma_low = parse_f64(key, v)?,
            "sigma_high" => sp.sigma_high = parse_f64(key, v)?,
            "phillips_alpha" => self.phillips_alpha = parse_auto(key, v)?,
            "omega_peak" => self.omega_peak = parse_auto(key, v)?,
            "n_omega" => d.n_omega = parse_usize(key, v)?,
            "n_theta" => d.n_theta = parse_usize(key, v)?,
            "omega_min_factor" => d.omega_min_factor = parse_f64(key, v)?,
            "omega_max_factor" => d.omega_max_factor = parse_f64(key, v)?,
            "n_water" => op.n_water = parse_f64(key, v)?,
            "n_air" => op.n_air = parse_f64(key, v)?,
            "wavelength" => op.wavelength = parse_f64(key, v)?,
            "a_w" => op.a_w = parse_f64(key, v)?,
            "b_w" => op.b_w = parse_f64(key, v)?,
            "a_a" => op.a_a = parse_f64(key, v)?,
            "b_a" => op.b_a = parse_f64(key, v)?,
            "omega_d" => op.omega_d = parse_f64(key, v)?,
            "omega_a" => op.omega_a = parse_f64(key, v)?,
            "i0" => op.i0 = parse_f64(key, v)?,
            "source_radius" => op.source_radius = parse_f64(key, v)?,
            "focal_length" => d.focal_length = parse_f64(key, v)?,
            "pixel_pitch" => d.pixel_pitch = parse_f64(key, v)?,
            "m" => d.m = parse_usize(key, v)?,
            "n" => d.n = parse_usize(key, v)?,
            "n1x" => d.n1x = parse_usize(key, v)?,
            "n2x" => d.n2x = parse_usize(key, v)?,
            "n_t" => d.n_t = parse_usize(key, v)?,
            "fps" => d.fps = parse_f64(key, v)?,
            "tx_box_min" => d.tx_box.min = parse_vec3(key, v)?,
            "tx_box_max" => d.tx_box.max = parse_vec3(key, v)?,
            "rx_box_min" => d.rx_box.min = parse_vec3(key, v)?,
            "rx_box_max" => d.rx_box.max = parse_vec3(key, v)?,
            "t0_max" => d.t0_max = parse_f64(key, v)?,
            "acquisition_jitter" => d.acquisition_jitter = parse_f64(key, v)?,
            "noise_snr_db" => d.noise_snr_db = parse_snr(key, v)?,
            "tx_pointing" => self.tx_pointing = v.parse()?,
            "tx_mount" => self.tx_mount = parse_vec3(key, v)?,
            "eval_split" => {
                self.eval_split = match v {
                    "all" => None,
                    s => Some(Split::parse(s).ok_or_else(|| {
                        OwcError::Config(format!(
                            "eval_split: `{s}` is not all, train, val or test"
                        ))
                    })?),
                }
            }
            "closed_loop" => self.closed_loop = parse_bool(key, v)?,
            "frames" => self.frames = parse_usize(key, v)?,
            "scene_id" => self.scene_id = parse_u64(key, v)?,
            "meanshift_bandwidth" => self.meanshift.bandwidth = parse_f64(key, v)?,
            "meanshift_eps" => self.meanshift.eps = parse_f64(key, v)?,
            "meanshift_max_iters" => self.meanshift.max_iters = parse_usize(key, v)?,
            _ => return Err(OwcError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Current value of a key, formatted as [`RunConfig::set`] accepts it.
    pub fn get(&self, key: &str) -> Option<String> {
        let d = &self.dataset;
        let sp = &d.spectrum;
        let op = &d.optics;
        Some(match key {
            "seed" => self.seed.to_string(),
            "out" => self.out.display().to_string(),
            "samples" => d.samples.to_string(),
            "gravity" => sp.gravity.to_string(),
            "wind_speed_10m" => sp.wind_speed_10m.to_string(),
            "fetch" => sp.fetch.to_string(),
            "peak_enhancement" => sp.peak_enhancement.to_string(),
            "spread_p" => sp.spread_p.to_string(),
            "spread_q" => sp.spread_q.to_string(),
            "sigma_low" => sp.sigma_low.to_string(),
            "sigma_high" => sp.sigma_high.to_string(),
            "phillips_alpha" => fmt_opt(self.phillips_alpha, "auto"),
            "omega_peak" => fmt_opt(self.omega_peak, "auto"),
            "n_omega" => d.n_omega.to_string(),
            "n_theta" => d.n_theta.to_string(),
            "omega_min_factor" => d.omega_min_factor.to_string(),
            "omega_max_factor" => d.omega_max_factor.to_string(),
            "n_water" => op.n_water.to_string(),
            "n_air" => op.n_air.to_string(),
            "wavelength" => op.wavelength.to_string(),
            "a_w" => op.a_w.to_string(),
            "b_w" => op.b_w.to_string(),
            "a_a" => op.a_a.to_string(),
            "b_a" => op.b_a.to_string(),
            "omega_d" => op.omega_d.to_string(),
            "omega_a" => op.omega_a.to_string(),
            "i0" => op.i0.to_string(),
            "source_radius" => op.source_radius.to_string(),
            "focal_length" => d.focal_length.to_string(),
            "pixel_pitch" => d.pixel_pitch.to_string(),
            "m" => d.m.to_string(),
            "n" => d.n.to_string(),
            "n1x" => d.n1x.to_string(),
            "n2x" => d.n2x.to_string(),
            "n_t" => d.n_t.to_string(),
            "fps" => d.fps.to_string(),
            "tx_box_min" => fmt_vec3(d.tx_box.min),
            "tx_box_max" => fmt_vec3(d.tx_box.max),
            "rx_box_min" => fmt_vec3(d.rx_box.min),
            "rx_box_max" => fmt_vec3(d.rx_box.max),
            "t0_max" => d.t0_max.to_string(),
            "acquisition_jitter" => d.acquisition_jitter.to_string(),
            "noise_snr_db" => match d.noise_snr_db {
                None => "none".into(),
                Some(x) if x == f64::INFINITY => "inf".into(),
                Some(x) => x.to_string(),
            },
            "tx_pointing" => self.tx_pointing.name().into(),
            "tx_mount" => fmt_vec3(self.tx_mount),
            "eval_split" => self.eval_split.map_or("all", Split::name).into(),
            "closed_loop" => self.closed_loop.to_string(),
            "frames" => self.frames.to_string(),
            "scene_id" => self.scene_id.to_string(),
            "meanshift_bandwidth" => self.meanshift.bandwidth.to_string(),
            "meanshift_eps" => self.meanshift.eps.to_string(),
            "meanshift_max_iters" => self.meanshift.max_iters.to_string(),
            _ => return None,
        })
    }

    /// Applies a configuration file's text. Errors name the line.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |m: String| OwcError::Config(format!("{origin}:{}: {m}", k + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(at(format!("key `{key}` given twice")));
            }
            self.set(key, value).map_err(|e| match e {
                OwcError::Config(m) => at(m),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            OwcError::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Resolves a configuration: defaults, then `OWC_SEED` (given as
    /// `env_seed`), then the file, then command-line overrides.
    pub fn resolve(
        file: Option<&Path>,
        env_seed: Option<&str>,
        overrides: &[(String, String)],
    ) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(s) = env_seed {
            cfg.seed = parse_u64("OWC_SEED", s.trim())?;
        }
        if let Some(p) = file {
            cfg.apply_file(p)?;
        }
        for (k, v) in overrides {
            cfg.set(k, v)
                .map_err(|e| OwcError::Config(format!("--{}: {e}", flag_name(k))))?;
        }
        cfg.sync();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Propagates the seed and derived spectrum values into the dataset
    /// configuration.
    pub fn sync(&mut self) {
        let d = &mut self.dataset;
        d.seed = self.seed;
        let sp = &mut d.spectrum;
        sp.phillips_alpha = self
            .phillips_alpha
            .unwrap_or_else(|| jonswap_alpha(sp.gravity, sp.wind_speed_10m, sp.fetch));
        sp.omega_peak = self
            .omega_peak
            .unwrap_or_else(|| jonswap_peak_frequency(sp.gravity, sp.wind_speed_10m, sp.fetch));
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: OwcError| match e {
            OwcError::Config(_) => e,
            other => OwcError::Config(other.to_string()),
        };
        self.dataset.validate().map_err(wrap)?;
        let ms = &self.meanshift;
        if !(ms.bandwidth > 0.0 && ms.eps > 0.0 && ms.max_iters >= 1) {
            return Err(OwcError::Config(
                "meanshift_bandwidth and meanshift_eps must be > 0, meanshift_max_iters >= 1"
                    .into(),
            ));
        }
        if self.tx_mount.try_normalize().is_none() {
            return Err(OwcError::Config("tx_mount must be nonzero".into()));
        }
        if self.frames == 0 {
            return Err(OwcError::Config("frames must be >= 1".into()));
        }
        Ok(())
    }

    /// The resolved configuration as `key = value` lines.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            out.push_str(&format!(
                "{} = {}\n",
                k.key,
                self.get(k.key).expect("every listed key has a value")
            ));
        }
        out
    }

    pub fn spectrum(&self) -> SpectrumParams {
        self.dataset.spectrum
    }

    pub fn optics(&self) -> OpticalConstants {
        self.dataset.optics
    }

    pub fn eval_options(&self, exec: Exec) -> EvalOptions {
        EvalOptions {
            tx_pointing: self.tx_pointing,
            tx_mount: self.tx_mount.normalize(),
            snr_db: self.dataset.noise_snr_db.filter(|&s| s != f64::INFINITY),
            noise_seed: self.seed,
            exec,
        }
    }

    pub fn temporal(&self, exec: Exec) -> TemporalConfig {
        TemporalConfig {
            scene: self.dataset.clone(),
            scene_id: self.scene_id,
            frames: self.frames,
            closed_loop: self.closed_loop,
            opts: self.eval_options(exec),
        }
    }

    pub fn placement_boxes(&self) -> (SceneBox, SceneBox) {
        (self.dataset.tx_box, self.dataset.rx_box)
    }
}
