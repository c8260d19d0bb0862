//! Directional ocean-wave spectrum and harmonic-superposition sea surface.
//!
//! The frequency part is a fetch-limited JONSWAP shape; the directional part
//! is `(1/π)[1 + p·cos2θ + q·cos4θ]` on `|θ| ≤ π/2`. A [`SurfaceRealization`]
//! freezes one draw of random phases over a [`SpectralGrid`] and evaluates
//! `W(x, y, t) = Σ A·cos(ω t − k_x x − k_y y + ε)` with deep-water dispersion
//! `k = ω²/g`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{OwcError, Result};
use crate::rng;
use crate::vec3::Vec3;

/// Inputs of the wave spectrum. `phillips_alpha` and `omega_peak` are derived
/// from wind, fetch and gravity by [`SpectrumParams::jonswap`] but may be
/// overridden afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumParams {
    pub gravity: f64,
    pub wind_speed_10m: f64,
    pub fetch: f64,
    pub peak_enhancement: f64,
    pub spread_p: f64,
    pub spread_q: f64,
    pub sigma_low: f64,
    pub sigma_high: f64,
    pub phillips_alpha: f64,
    pub omega_peak: f64,
}

impl SpectrumParams {
    /// Builds parameters with the empirical JONSWAP closures
    /// `a = 0.076·x̃^−0.22` (with `x̃ = g·x/U10²`) and
    /// `ω_p = 22·(g²/(U10·x))^(1/3)`.
    pub fn jonswap(gravity: f64, wind_speed_10m: f64, fetch: f64, peak_enhancement: f64) -> Self {
        SpectrumParams {
            gravity,
            wind_speed_10m,
            fetch,
            peak_enhancement,
            spread_p: 0.5,
            spread_q: 0.25,
            sigma_low: 0.07,
            sigma_high: 0.09,
            phillips_alpha: jonswap_alpha(gravity, wind_speed_10m, fetch),
            omega_peak: jonswap_peak_frequency(gravity, wind_speed_10m, fetch),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gravity", self.gravity),
            ("wind_speed_10m", self.wind_speed_10m),
            ("fetch", self.fetch),
            ("omega_peak", self.omega_peak),
            ("sigma_low", self.sigma_low),
            ("sigma_high", self.sigma_high),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(OwcError::InvalidParam(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        if !(self.peak_enhancement >= 1.0 && self.peak_enhancement.is_finite()) {
            return Err(OwcError::InvalidParam(format!(
                "peak_enhancement must be >= 1, got {}",
                self.peak_enhancement
            )));
        }
        // a = 0 is accepted: it yields a calm (flat) sea.
        if !(self.phillips_alpha >= 0.0 && self.phillips_alpha.is_finite()) {
            return Err(OwcError::InvalidParam(format!(
                "phillips_alpha must be >= 0, got {}",
                self.phillips_alpha
            )));
        }
        let min = directional_min(self.spread_p, self.spread_q);
        if !(min >= 0.0) {
            return Err(OwcError::InvalidParam(format!(
                "spreading factors p = {}, q = {} make the directional factor negative (min {min})",
                self.spread_p, self.spread_q
            )));
        }
        Ok(())
    }
}

pub fn jonswap_alpha(gravity: f64, wind_speed_10m: f64, fetch: f64) -> f64 {
    let dimensionless_fetch = gravity * fetch / (wind_speed_10m * wind_speed_10m);
    0.076 * dimensionless_fetch.powf(-0.22)
}

pub fn jonswap_peak_frequency(gravity: f64, wind_speed_10m: f64, fetch: f64) -> f64 {
    22.0 * (gravity * gravity / (wind_speed_10m * fetch)).cbrt()
}

/// Minimum over `|θ| ≤ π/2` of `1 + p·cos2θ + q·cos4θ`.
///
/// With `c = cos2θ ∈ [−1, 1]` the expression is `1 − q + p·c + 2q·c²`, so the
/// minimum sits at an endpoint or at the parabola vertex.
fn directional_min(p: f64, q: f64) -> f64 {
    let f = |c: f64| 1.0 - q + p * c + 2.0 * q * c * c;
    let mut m = f(-1.0).min(f(1.0));
    if q > 0.0 {
        let vertex = -p / (4.0 * q);
        if (-1.0..=1.0).contains(&vertex) {
            m = m.min(f(vertex));
        }
    }
    m
}

/// Directional spreading factor `(1/π)[1 + p·cos2θ + q·cos4θ]`.
pub fn directional_factor(params: &SpectrumParams, theta: f64) -> f64 {
    (1.0 + params.spread_p * (2.0 * theta).cos() + params.spread_q * (4.0 * theta).cos()) / PI
}

/// Non-directional JONSWAP part of the spectrum (m²·s/rad).
pub fn frequency_part(params: &SpectrumParams, omega: f64) -> f64 {
    let g = params.gravity;
    let wp = params.omega_peak;
    let sigma = if omega <= wp {
        params.sigma_low
    } else {
        params.sigma_high
    };
    let ratio4 = (wp / omega).powi(4);
    let peak_shape = (-(omega - wp).powi(2) / (2.0 * (sigma * wp).powi(2))).exp();
    params.phillips_alpha * g * g / omega.powi(5)
        * (-1.25 * ratio4).exp()
        * params.peak_enhancement.powf(peak_shape)
}

/// Directional spectral density `S(ω, θ)`.
pub fn spectrum_density(params: &SpectrumParams, omega: f64, theta: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(OwcError::domain("omega", omega));
    }
    if !(theta.abs() <= FRAC_PI_2) {
        return Err(OwcError::domain("theta", theta));
    }
    let s = frequency_part(params, omega) * directional_factor(params, theta);
    // Underflow of the low-frequency exponential is the only way to get a
    // subnormal here; report it as exact zero.
    Ok(if s.is_finite() { s.max(0.0) } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrequencySpacing {
    Linear,
    Logarithmic,
}

/// Frequency/direction sampling of the spectrum. Each frequency carries its
/// own quadrature width so log-spaced grids integrate correctly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub omegas: Vec<f64>,
    pub d_omegas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub d_theta: f64,
    pub spacing: FrequencySpacing,
}

impl SpectralGrid {
    /// `n_omega` frequencies log-spaced on `[lo, hi]` (endpoints included) and
    /// `n_theta` cell-centred directions covering `[−π/2, π/2]`.
    pub fn logarithmic(lo: f64, hi: f64, n_omega: usize, n_theta: usize) -> Result<Self> {
        check_band(lo, hi, n_omega, n_theta)?;
        let (omegas, d_omegas) = if n_omega == 1 {
            (vec![lo], vec![hi - lo])
        } else {
            let step = (hi / lo).ln() / (n_omega - 1) as f64;
            let omegas: Vec<f64> = (0..n_omega)
                .map(|i| (lo.ln() + step * i as f64).exp())
                .collect();
            let d = omegas.iter().map(|w| w * step).collect();
            (omegas, d)
        };
        let (thetas, d_theta) = centred_directions(n_theta);
        Ok(SpectralGrid {
            omegas,
            d_omegas,
            thetas,
            d_theta,
            spacing: FrequencySpacing::Logarithmic,
        })
    }

    /// `n_omega` frequencies uniformly spaced on `[lo, hi]` (endpoints included).
    pub fn linear(lo: f64, hi: f64, n_omega: usize, n_theta: usize) -> Result<Self> {
        check_band(lo, hi, n_omega, n_theta)?;
        let (omegas, dw) = if n_omega == 1 {
            (vec![lo], hi - lo)
        } else {
            let dw = (hi - lo) / (n_omega - 1) as f64;
            ((0..n_omega).map(|i| lo + dw * i as f64).collect(), dw)
        };
        let (thetas, d_theta) = centred_directions(n_theta);
        Ok(SpectralGrid {
            d_omegas: vec![dw; omegas.len()],
            omegas,
            thetas,
            d_theta,
            spacing: FrequencySpacing::Linear,
        })
    }

    /// One spectral cell.
    pub fn single(omega: f64, theta: f64, d_omega: f64, d_theta: f64) -> Result<Self> {
        let grid = SpectralGrid {
            omegas: vec![omega],
            d_omegas: vec![d_omega],
            thetas: vec![theta],
            d_theta,
            spacing: FrequencySpacing::Linear,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Default sampling: 64 log-spaced frequencies over `[0.5·ω_p, 5·ω_p]`
    /// and 36 directions.
    pub fn default_for(params: &SpectrumParams) -> Result<Self> {
        Self::logarithmic(0.5 * params.omega_peak, 5.0 * params.omega_peak, 64, 36)
    }

    pub fn len(&self) -> usize {
        self.omegas.len() * self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.omegas.is_empty() || self.thetas.is_empty() {
            return Err(OwcError::InvalidParam("spectral grid is empty".into()));
        }
        if self.d_omegas.len() != self.omegas.len() {
            return Err(OwcError::InvalidParam("d_omegas length mismatch".into()));
        }
        if self.omegas.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(OwcError::InvalidParam(
                "frequencies must be positive".into(),
            ));
        }
        if self.d_omegas.iter().any(|&d| !(d > 0.0)) || !(self.d_theta > 0.0) {
            return Err(OwcError::InvalidParam(
                "grid spacings must be positive".into(),
            ));
        }
        if self.thetas.iter().any(|t| t.abs() > FRAC_PI_2) {
            return Err(OwcError::InvalidParam(
                "directions must lie in [-pi/2, pi/2]".into(),
            ));
        }
        if self.omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(OwcError::InvalidParam(
                "frequencies must be strictly increasing".into(),
            ));
        }
        let coords: Vec<f64> = match self.spacing {
            FrequencySpacing::Linear => self.omegas.clone(),
            FrequencySpacing::Logarithmic => self.omegas.iter().map(|w| w.ln()).collect(),
        };
        check_uniform(&coords, "frequency")?;
        check_uniform(&self.thetas, "direction")?;
        Ok(())
    }
}

fn check_band(lo: f64, hi: f64, n_omega: usize, n_theta: usize) -> Result<()> {
    if n_omega == 0 || n_theta == 0 {
        return Err(OwcError::InvalidParam("spectral grid is empty".into()));
    }
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(OwcError::InvalidParam(format!(
            "invalid frequency band [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn centred_directions(n: usize) -> (Vec<f64>, f64) {
    let d = PI / n as f64;
    let thetas = (0..n).map(|j| -FRAC_PI_2 + (j as f64 + 0.5) * d).collect();
    (thetas, d)
}

fn check_uniform(v: &[f64], what: &str) -> Result<()> {
    if v.len() < 3 {
        return Ok(());
    }
    let first = v[1] - v[0];
    for w in v.windows(2) {
        let d = w[1] - w[0];
        if (d - first).abs() > 1e-12 * first.abs().max(v[0].abs()).max(1.0) {
            return Err(OwcError::InvalidParam(format!(
                "{what} grid is not uniformly spaced"
            )));
        }
    }
    Ok(())
}

/// One harmonic of the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveComponent {
    pub amplitude: f64,
    pub omega: f64,
    pub kx: f64,
    pub ky: f64,
    pub phase: f64,
}

/// Frozen harmonic decomposition of the sea surface. Immutable after
/// construction and safe to share between threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRealization {
    pub components: Vec<WaveComponent>,
    pub seed: u64,
    amplitude_sum: f64,
    slope_bound: f64,
}

/// Draws random phases for every grid cell and freezes the surface.
pub fn realize_surface(
    params: &SpectrumParams,
    grid: &SpectralGrid,
    seed: u64,
) -> Result<SurfaceRealization> {
    params.validate()?;
    grid.validate()?;
    let mut rng = rng::rng_from_seed(rng::derive_seed(seed, rng::STREAM_SURFACE));
    let mut components = Vec::with_capacity(grid.len());
    for (&omega, &d_omega) in grid.omegas.iter().zip(&grid.d_omegas) {
        let k = omega * omega / params.gravity;
        for &theta in &grid.thetas {
            let s = spectrum_density(params, omega, theta)?;
            let mut phase = rng.random::<f64>() * TAU;
            if phase >= TAU {
                phase = 0.0;
            }
            components.push(WaveComponent {
                amplitude: (s * d_omega * grid.d_theta).sqrt(),
                omega,
                kx: k * theta.cos(),
                ky: k * theta.sin(),
                phase,
            });
        }
    }
    Ok(SurfaceRealization::from_components(components, seed))
}

impl SurfaceRealization {
    pub fn from_components(components: Vec<WaveComponent>, seed: u64) -> Self {
        let amplitude_sum = components.iter().map(|c| c.amplitude).sum();
        let slope_bound = components
            .iter()
            .map(|c| c.amplitude * c.kx.hypot(c.ky))
            .sum();
        SurfaceRealization {
            components,
            seed,
            amplitude_sum,
            slope_bound,
        }
    }

    /// Calm sea: `W ≡ 0`.
    pub fn flat() -> Self {
        Self::from_components(Vec::new(), 0)
    }

    /// `Σ A`, an upper bound on `|W|`.
    pub fn amplitude_sum(&self) -> f64 {
        self.amplitude_sum
    }

    /// `Σ A·|k|`, a Lipschitz bound on `W` in the horizontal plane.
    pub fn slope_bound(&self) -> f64 {
        self.slope_bound
    }

    pub fn is_flat(&self) -> bool {
        self.amplitude_sum == 0.0
    }

    pub fn height(&self, x: f64, y: f64, t: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.amplitude * (c.omega * t - c.kx * x - c.ky * y + c.phase).cos())
            .sum()
    }

    /// `(∂W/∂x, ∂W/∂y)`.
    pub fn gradient(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        let (_, gx, gy) = self.height_and_gradient(x, y, t);
        (gx, gy)
    }

    /// `(W, ∂W/∂x, ∂W/∂y)` from a single pass over the components.
    pub fn height_and_gradient(&self, x: f64, y: f64, t: f64) -> (f64, f64, f64) {
        let mut w = 0.0;
        let mut gx = 0.0;
        let mut gy = 0.0;
        for c in &self.components {
            let (s, co) = (c.omega * t - c.kx * x - c.ky * y + c.phase).sin_cos();
            w += c.amplitude * co;
            // d/dx cos(ωt − kx·x − …) = kx·sin(…)
            gx += c.amplitude * c.kx * s;
            gy += c.amplitude * c.ky * s;
        }
        (w, gx, gy)
    }

    /// The unnormalized normal `[∂W/∂x, ∂W/∂y, −1]`, pointing into the water.
    pub fn downward_normal(&self, x: f64, y: f64, t: f64) -> Vec3 {
        let (gx, gy) = self.gradient(x, y, t);
        Vec3::new(gx, gy, -1.0)
    }

    /// Unit normal pointing into the air.
    pub fn upward_normal(&self, x: f64, y: f64, t: f64) -> Vec3 {
        let (gx, gy) = self.gradient(x, y, t);
        normal_from_gradient(gx, gy)
    }

    /// Heights on the tensor grid `ys × xs` (row-major, rows follow `ys`).
    ///
    /// Uses `cos(ψ − kx·x − ky·y) = Re[e^{i(ψ − kx·x)}·e^{−i·ky·y}]` so the
    /// cost is one complex multiply-add per component and node instead of a
    /// cosine.
    pub fn height_grid(&self, xs: &[f64], ys: &[f64], t: f64) -> Vec<f64> {
        let nx = xs.len();
        let ny = ys.len();
        let mut out = vec![0.0; nx * ny];
        let mut px_re = vec![0.0; nx];
        let mut px_im = vec![0.0; nx];
        for c in &self.components {
            if c.amplitude == 0.0 {
                continue;
            }
            let psi = c.omega * t + c.phase;
            for (i, &x) in xs.iter().enumerate() {
                let (s, co) = (psi - c.kx * x).sin_cos();
                px_re[i] = c.amplitude * co;
                px_im[i] = c.amplitude * s;
            }
            for (row, &y) in out.chunks_exact_mut(nx).zip(ys) {
                let (s, co) = (-c.ky * y).sin_cos();
                for i in 0..nx {
                    row[i] += px_re[i] * co - px_im[i] * s;
                }
            }
        }
        out
    }
}

pub(crate) fn normal_from_gradient(gx: f64, gy: f64) -> Vec3 {
    let n = (gx * gx + gy * gy + 1.0).sqrt();
    Vec3::new(-gx / n, -gy / n, 1.0 / n)
}

const HEIGHTMAP_MAGIC: &[u8; 8] = b"OWCSURF1";

/// Sampling window of an exported heightmap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightmapSpec {
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub rows: u32,
    pub cols: u32,
}

/// Writes a height map: 8-byte magic `OWCSURF1`, `u32 rows`, `u32 cols`, `f32 dx`, `f32 dy`,
/// then `rows × cols` little-endian `f32` heights, row `r` at `y0 + r·dy`.
pub fn write_heightmap(
    path: &Path,
    surf: &SurfaceRealization,
    t: f64,
    spec: &HeightmapSpec,
) -> Result<()> {
    let xs: Vec<f64> = (0..spec.cols)
        .map(|c| spec.x0 + c as f64 * spec.dx)
        .collect();
    let ys: Vec<f64> = (0..spec.rows)
        .map(|r| spec.y0 + r as f64 * spec.dy)
        .collect();
    let heights = surf.height_grid(&xs, &ys, t);
    let mut buf = Vec::with_capacity(24 + heights.len() * 4);
    buf.extend_from_slice(HEIGHTMAP_MAGIC);
    buf.extend_from_slice(&spec.rows.to_le_bytes());
    buf.extend_from_slice(&spec.cols.to_le_bytes());
    buf.extend_from_slice(&(spec.dx as f32).to_le_bytes());
    buf.extend_from_slice(&(spec.dy as f32).to_le_bytes());
    for h in heights {
        buf.extend_from_slice(&(h as f32).to_le_bytes());
    }
    let mut f = std::fs::File::create(path).map_err(|e| OwcError::io(path, e))?;
    f.write_all(&buf).map_err(|e| OwcError::io(path, e))
}

/// Heightmap as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Heightmap {
    pub rows: u32,
    pub cols: u32,
    pub dx: f32,
    pub dy: f32,
    pub heights: Vec<f32>,
}

pub fn read_heightmap(path: &Path) -> Result<Heightmap> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| OwcError::io(path, e))?;
    let bad = |message: &str| OwcError::Format {
        kind: "heightmap",
        path: path.to_path_buf(),
        message: message.to_string(),
    };
    if bytes.len() < 24 || &bytes[..8] != HEIGHTMAP_MAGIC {
        return Err(bad("missing OWCSURF1 header"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let rows = u32_at(8);
    let cols = u32_at(12);
    let n = rows as usize * cols as usize;
    if bytes.len() != 24 + 4 * n {
        return Err(bad("payload size does not match rows x cols"));
    }
    Ok(Heightmap {
        rows,
        cols,
        dx: f32_at(16),
        dy: f32_at(20),
        heights: (0..n).map(|i| f32_at(24 + 4 * i)).collect(),
    })
}
