//! Beacon image formation by backward ray tracing.
//!
//! Each pixel's ray starts on the screen, leaves through the focus point
//! `F = R − f·r_r`, is intersected with the sea surface, refracted into the
//! water and tested against the transmitter disc. Lit pixels carry the link
//! gain of their own ray; all others are zero.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{OwcError, Result};
use crate::optics::{
    gain_fresnel, gain_path, gains_for_path, solve_candidates, GainBreakdown, LinkGeometry,
    OpticalConstants, RefractionSolution, SolverSettings,
};
use crate::par::{self, Exec};
use crate::vec3::Vec3;
use crate::wave::SurfaceRealization;

/// Pinhole camera on the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub position: Vec3,
    pub boresight: Vec3,
    pub focal_length: f64,
    pub pixel_pitch: f64,
    pub rows: usize,
    pub cols: usize,
    /// Screen axis along which the row index grows.
    pub e_i: Vec3,
    /// Screen axis along which the column index grows.
    pub e_j: Vec3,
}

impl CameraModel {
    /// Builds the screen basis from the boresight.
    ///
    /// `e_i` is world-x made orthogonal to the boresight and `e_j = e_i × r_r`;
    /// a boresight parallel to world-x falls back to world-y. For the usual
    /// downward-looking receiver this gives `e_i ≈ x`, `e_j ≈ y` without the
    /// azimuth flips an up-vector construction has near nadir.
    pub fn new(
        position: Vec3,
        boresight: Vec3,
        focal_length: f64,
        pixel_pitch: f64,
        rows: usize,
        cols: usize,
    ) -> Result<Self> {
        let b = boresight
            .try_normalize()
            .ok_or_else(|| OwcError::InvalidParam("camera boresight is zero".into()))?;
        let reference = if b.x.abs() > 0.999_999 {
            Vec3::Y
        } else {
            Vec3::X
        };
        let e_i = (reference - reference.dot(b) * b).normalize();
        let e_j = e_i.cross(b).normalize();
        let cam = CameraModel {
            position,
            boresight: b,
            focal_length,
            pixel_pitch,
            rows,
            cols,
            e_i,
            e_j,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Same intrinsics, new pointing.
    pub fn repointed(&self, boresight: Vec3) -> Result<Self> {
        Self::new(
            self.position,
            boresight,
            self.focal_length,
            self.pixel_pitch,
            self.rows,
            self.cols,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.focal_length > 0.0 && self.pixel_pitch > 0.0) {
            return Err(OwcError::InvalidParam(
                "focal length and pixel pitch must be > 0".into(),
            ));
        }
        if self.rows < 8 || self.cols < 8 {
            return Err(OwcError::InvalidParam(
                "camera needs at least 8x8 pixels".into(),
            ));
        }
        let b = self.boresight;
        let ortho = [
            (self.e_i.norm() - 1.0).abs(),
            (self.e_j.norm() - 1.0).abs(),
            (b.norm() - 1.0).abs(),
            self.e_i.dot(self.e_j).abs(),
            self.e_i.dot(b).abs(),
            self.e_j.dot(b).abs(),
        ];
        if ortho.iter().any(|&e| e > 1e-12) {
            return Err(OwcError::InvalidParam(
                "camera basis is not orthonormal".into(),
            ));
        }
        Ok(())
    }

    pub fn focus(&self) -> Vec3 {
        self.position - self.focal_length * self.boresight
    }

    /// Screen point of pixel `(i, j)`, 1-based, continuous.
    pub fn screen_point(&self, i: f64, j: f64) -> Vec3 {
        let (m2, n2) = (self.rows as f64 / 2.0, self.cols as f64 / 2.0);
        self.position
            + ((i - m2) * self.pixel_pitch) * self.e_i
            + ((j - n2) * self.pixel_pitch) * self.e_j
    }

    /// Outward line-of-sight direction through pixel `(i, j)` (1-based,
    /// continuous).
    pub fn direction_through(&self, i: f64, j: f64) -> Vec3 {
        (self.screen_point(i, j) - self.focus()).normalize()
    }

    /// Inverse of [`CameraModel::direction_through`]: the continuous 1-based
    /// pixel coordinates seeing along `dir`, or `None` when `dir` points
    /// behind the camera.
    pub fn pixel_of_direction(&self, dir: Vec3) -> Option<(f64, f64)> {
        let along = dir.dot(self.boresight);
        if !(along > 0.0) {
            return None;
        }
        let scale = self.focal_length / along / self.pixel_pitch;
        Some((
            self.rows as f64 / 2.0 + scale * dir.dot(self.e_i),
            self.cols as f64 / 2.0 + scale * dir.dot(self.e_j),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RayStage {
    Screen,
    Refracted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRay {
    pub origin: Vec3,
    pub direction: Vec3,
    pub stage: RayStage,
}

/// Initial backward ray of pixel `(i, j)`, with `1 ≤ i ≤ M`, `1 ≤ j ≤ N`.
pub fn pixel_ray(camera: &CameraModel, i: usize, j: usize) -> Result<TraceRay> {
    if i < 1 || i > camera.rows || j < 1 || j > camera.cols {
        return Err(OwcError::Dimension(format!(
            "pixel ({i}, {j}) outside a {}x{} screen",
            camera.rows, camera.cols
        )));
    }
    let origin = camera.screen_point(i as f64, j as f64);
    Ok(TraceRay {
        origin,
        direction: (origin - camera.focus()).normalize(),
        stage: RayStage::Screen,
    })
}

/// Ray–surface intersection controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarchSettings {
    /// Fixed march step once close to the surface (m).
    pub step: f64,
    /// Give up beyond this ray length (m).
    pub max_range: f64,
    /// Bracket width at which refinement stops (m).
    pub tol: f64,
}

impl Default for MarchSettings {
    fn default() -> Self {
        MarchSettings {
            step: 0.05,
            max_range: 500.0,
            tol: 1e-9,
        }
    }
}

/// Where a ray meets the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceHit {
    pub point: Vec3,
    /// Ray parameter (distance along the unit direction).
    pub k: f64,
    /// Upward unit normal at the hit.
    pub normal: Vec3,
}

/// First crossing of the ray with `z = W(x, y, t)`, or `None` on a miss.
///
/// Far from the surface the ray advances by `f / (|r_z| + L·|r_xy|)`, where
/// `f` is the height above the surface and `L` the Lipschitz bound of `W`;
/// such a step cannot pass a crossing. Once that step falls below
/// `settings.step` the ray marches at the fixed step until the sign changes,
/// then a safeguarded Newton/bisection iteration closes the bracket.
pub fn intersect_surface(
    ray: &TraceRay,
    surface: &SurfaceRealization,
    t: f64,
    settings: &MarchSettings,
) -> Option<SurfaceHit> {
    let o = ray.origin;
    let d = ray.direction;
    let above = |k: f64| {
        let p = o + k * d;
        p.z - surface.height(p.x, p.y, t)
    };
    let rate = d.z.abs() + surface.slope_bound() * d.x.hypot(d.y);

    let mut k_lo = 0.0;
    let mut f_lo = above(0.0);
    if !(f_lo > 0.0) {
        return None;
    }
    let k_hi = loop {
        let safe = if rate > 0.0 {
            f_lo / rate
        } else {
            f64::INFINITY
        };
        let k_next = k_lo + safe.max(settings.step);
        if k_next > settings.max_range {
            // final probe at the range limit so a crossing just before it counts
            if k_lo < settings.max_range && !(above(settings.max_range) > 0.0) {
                break settings.max_range;
            }
            return None;
        }
        let f_next = above(k_next);
        if !(f_next > 0.0) {
            break k_next;
        }
        k_lo = k_next;
        f_lo = f_next;
    };

    let k = refine_crossing(o, d, surface, t, k_lo, k_hi, settings.tol);
    let p = o + k * d;
    let (w, gx, gy) = surface.height_and_gradient(p.x, p.y, t);
    Some(SurfaceHit {
        point: Vec3::new(p.x, p.y, w),
        k,
        normal: crate::wave::normal_from_gradient(gx, gy),
    })
}

fn refine_crossing(
    o: Vec3,
    d: Vec3,
    surface: &SurfaceRealization,
    t: f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> f64 {
    let mut k = 0.5 * (a + b);
    for _ in 0..200 {
        let p = o + k * d;
        let (w, gx, gy) = surface.height_and_gradient(p.x, p.y, t);
        let f = p.z - w;
        if f.abs() <= 1e-13 {
            return k;
        }
        if f > 0.0 {
            a = k;
        } else {
            b = k;
        }
        if b - a <= tol {
            break;
        }
        let slope = d.z - (gx * d.x + gy * d.y);
        let newton = k - f / slope;
        k = if slope < 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
    }
    k
}

/// Vector Snell's law for a ray going down from the air into the water.
///
/// `r = η(d − (d·n)n) − n·sqrt(1 − η²(1 − (d·n)²))` with `η = n_air/n_water`
/// and `n` the upward unit normal. Returns `None` if the radicand is
/// negative (impossible for air→water, guarded anyway) or if the ray does not
/// approach the surface from above.
pub fn refract_backward(ray_dir: Vec3, normal: Vec3, consts: &OpticalConstants) -> Option<Vec3> {
    let c = ray_dir.dot(normal);
    if !(c < 0.0) {
        return None;
    }
    let eta = consts.n_air / consts.n_water;
    let radicand = 1.0 - eta * eta * (1.0 - c * c);
    if radicand < 0.0 {
        return None;
    }
    (eta * (ray_dir - c * normal) - radicand.sqrt() * normal).try_normalize()
}

/// Vector Snell's law for a ray going up from the water into the air;
/// `None` under total internal reflection.
pub fn refract_forward(ray_dir: Vec3, normal: Vec3, consts: &OpticalConstants) -> Option<Vec3> {
    let c = ray_dir.dot(normal);
    if !(c > 0.0) {
        return None;
    }
    let eta = consts.n_water / consts.n_air;
    let radicand = 1.0 - eta * eta * (1.0 - c * c);
    if radicand < 0.0 {
        return None;
    }
    (eta * (ray_dir - c * normal) + radicand.sqrt() * normal).try_normalize()
}

/// Distance from `target` to the forward half-line `origin + s·dir`, or
/// `None` when the target is behind the origin.
pub fn source_miss_distance(origin: Vec3, dir: Vec3, target: Vec3) -> Option<f64> {
    let v = target - origin;
    if !(v.dot(dir) > 0.0) {
        return None;
    }
    Some(v.cross(dir).norm())
}

/// Whether a refracted ray passes through the transmitter disc.
///
/// Uses the perpendicular distance from `T` to the ray line (inclusive at
/// `R0`) and requires the source to lie ahead of the ray origin.
pub fn source_hit_test(ray: &TraceRay, tx: Vec3, source_radius: f64) -> bool {
    debug_assert_eq!(ray.stage, RayStage::Refracted);
    source_miss_distance(ray.origin, ray.direction, tx).is_some_and(|d| d <= source_radius)
}

/// Ground truth attached to a rendered frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameTruth {
    /// Unit vector from the receiver to the refraction point.
    pub direction: Vec3,
    pub solution: RefractionSolution,
    pub gains: GainBreakdown,
}

/// One rendered screen image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityFrame {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, `rows × cols`, non-negative.
    pub pixels: Vec<f64>,
    pub t: f64,
    pub camera: CameraModel,
    pub truth: Option<FrameTruth>,
}

impl IntensityFrame {
    /// Value at 0-based `(row, col)`.
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.cols + col]
    }

    pub fn lit_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p > 0.0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RenderMode {
    /// Trace every pixel.
    Exhaustive,
    /// Trace outward from the images of the stationary paths found by the
    /// refraction solver, growing while lit pixels keep appearing.
    Seeded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderSettings {
    pub mode: RenderMode,
    /// Unlit border (pixels) traced around every lit pixel in seeded mode.
    pub margin: usize,
    pub march: MarchSettings,
    pub solver: SolverSettings,
    pub exec: Exec,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            mode: RenderMode::Seeded,
            margin: 2,
            march: MarchSettings::default(),
            solver: SolverSettings::default(),
            exec: Exec::default(),
        }
    }
}

/// Result of tracing one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelTrace {
    pub intensity: f64,
    pub hit: Option<SurfaceHit>,
    pub refracted: Option<Vec3>,
}

/// Traces pixel `(i, j)` (1-based) through the surface and evaluates its
/// intensity. `tx_boresight` sets the departure angle of the pixel's path.
#[allow(clippy::too_many_arguments)]
pub fn trace_pixel(
    camera: &CameraModel,
    i: usize,
    j: usize,
    tx: Vec3,
    tx_boresight: Vec3,
    surface: &SurfaceRealization,
    t: f64,
    consts: &OpticalConstants,
    march: &MarchSettings,
) -> PixelTrace {
    let dark = PixelTrace {
        intensity: 0.0,
        hit: None,
        refracted: None,
    };
    let Ok(ray) = pixel_ray(camera, i, j) else {
        return dark;
    };
    let Some(hit) = intersect_surface(&ray, surface, t, march) else {
        return dark;
    };
    let Some(r1) = refract_backward(ray.direction, hit.normal, consts) else {
        return PixelTrace {
            hit: Some(hit),
            ..dark
        };
    };
    let water_ray = TraceRay {
        origin: hit.point,
        direction: r1,
        stage: RayStage::Refracted,
    };
    let base = PixelTrace {
        intensity: 0.0,
        hit: Some(hit),
        refracted: Some(r1),
    };
    if !source_hit_test(&water_ray, tx, consts.source_radius) {
        return base;
    }
    // forward propagation runs along −r1 in the water and −r0 in the air
    let alpha_d = tx_boresight.angle_to(-r1);
    let alpha_a = camera.boresight.angle_to(ray.direction);
    let g_d = if alpha_d < std::f64::consts::FRAC_PI_2 {
        crate::optics::gain_departure(alpha_d, consts).unwrap_or(0.0)
    } else {
        0.0
    };
    let g_a = if alpha_a < std::f64::consts::FRAC_PI_2 {
        crate::optics::gain_arrival(alpha_a, consts).unwrap_or(0.0)
    } else {
        0.0
    };
    let d_w = (tx - hit.point).norm();
    let d_a = (hit.point - ray.origin).norm();
    let g_path = gain_path(d_w, d_a, consts).unwrap_or(0.0);
    let theta_i = (-r1).angle_to(hit.normal);
    let theta_t = (-ray.direction).angle_to(hit.normal);
    let g_ref = gain_fresnel(theta_i, theta_t, consts);
    PixelTrace {
        intensity: consts.i0 * g_d * g_a * g_path * g_ref,
        ..base
    }
}

/// Renders the beacon image seen by `camera` for the transmitter in `geom`.
///
/// The truth record is the solved direct path evaluated with the boresights
/// of `geom`. Pixel values depend only on their own ray, so the frame is
/// identical whatever the execution strategy or traversal order.
pub fn render(
    camera: &CameraModel,
    geom: &LinkGeometry<'_>,
    consts: &OpticalConstants,
    settings: &RenderSettings,
) -> IntensityFrame {
    let stationary = solve_candidates(
        geom.tx,
        geom.rx,
        geom.surface,
        geom.t,
        consts,
        &settings.solver,
    );
    render_with_paths(camera, geom, consts, settings, &stationary)
}

/// [`render`] with the stationary paths already solved (sorted by OPL, as
/// returned by [`solve_candidates`]); the first one is the truth.
pub fn render_with_paths(
    camera: &CameraModel,
    geom: &LinkGeometry<'_>,
    consts: &OpticalConstants,
    settings: &RenderSettings,
    stationary: &[RefractionSolution],
) -> IntensityFrame {
    let (rows, cols) = (camera.rows, camera.cols);
    let trace = |idx: usize| {
        trace_pixel(
            camera,
            idx / cols + 1,
            idx % cols + 1,
            geom.tx,
            geom.tx_boresight,
            geom.surface,
            geom.t,
            consts,
            &settings.march,
        )
        .intensity
    };
    let solution = stationary
        .first()
        .copied()
        .expect("at least one stationary path");
    let truth = FrameTruth {
        direction: solution.receiver_direction(geom.rx),
        solution,
        gains: gains_for_path(
            &solution,
            geom.tx,
            geom.rx,
            geom.tx_boresight,
            geom.rx_boresight,
            consts,
        ),
    };

    let pixels = match settings.mode {
        RenderMode::Exhaustive => par::map_range(settings.exec, rows * cols, trace),
        RenderMode::Seeded => {
            let mut pixels = vec![0.0; rows * cols];
            let mut traced = vec![false; rows * cols];
            let mut frontier = BTreeSet::new();
            let seed_radius = settings.margin.max(1) as isize;
            for s in stationary {
                if let Some((pi, pj)) = camera.pixel_of_direction(s.point - camera.focus()) {
                    let (r0, c0) = ((pi.round() as isize) - 1, (pj.round() as isize) - 1);
                    push_window(&mut frontier, &traced, rows, cols, r0, c0, seed_radius);
                }
            }
            while !frontier.is_empty() {
                let wave: Vec<usize> = std::mem::take(&mut frontier).into_iter().collect();
                for &idx in &wave {
                    traced[idx] = true;
                }
                let values = par::map_slice(settings.exec, &wave, |&idx| trace(idx));
                for (&idx, v) in wave.iter().zip(values) {
                    pixels[idx] = v;
                    if v > 0.0 {
                        let (r, c) = ((idx / cols) as isize, (idx % cols) as isize);
                        push_window(
                            &mut frontier,
                            &traced,
                            rows,
                            cols,
                            r,
                            c,
                            settings.margin as isize,
                        );
                    }
                }
            }
            pixels
        }
    };

    IntensityFrame {
        rows,
        cols,
        pixels,
        t: geom.t,
        camera: *camera,
        truth: Some(truth),
    }
}

fn push_window(
    set: &mut BTreeSet<usize>,
    traced: &[bool],
    rows: usize,
    cols: usize,
    r: isize,
    c: isize,
    radius: isize,
) {
    for dr in -radius..=radius {
        for dc in -radius..=radius {
            let (rr, cc) = (r + dr, c + dc);
            if rr < 0 || cc < 0 || rr >= rows as isize || cc >= cols as isize {
                continue;
            }
            let idx = rr as usize * cols + cc as usize;
            if !traced[idx] {
                set.insert(idx);
            }
        }
    }
}

/// Screen-plane distance (m) between pixel `(i, j)` and where the forward
/// ray `T → B1`, refracted upward at the pixel's surface hit, is imaged.
/// `None` when the pixel ray misses the surface or the forward ray is
/// totally internally reflected.
#[allow(clippy::too_many_arguments)]
pub fn forward_image_offset(
    camera: &CameraModel,
    i: usize,
    j: usize,
    tx: Vec3,
    surface: &SurfaceRealization,
    t: f64,
    consts: &OpticalConstants,
    march: &MarchSettings,
) -> Option<f64> {
    let ray = pixel_ray(camera, i, j).ok()?;
    let hit = intersect_surface(&ray, surface, t, march)?;
    let up = refract_forward((hit.point - tx).normalize(), hit.normal, consts)?;
    let (pi, pj) = camera.pixel_of_direction(-up)?;
    Some((pi - i as f64).hypot(pj - j as f64) * camera.pixel_pitch)
}

/// Writes a frame as binary 16-bit PGM (big-endian samples, maxval 65535)
/// with linear min–max scaling, plus `<path>.txt` recording the scaling.
pub fn write_pgm16(path: &Path, frame: &IntensityFrame) -> Result<()> {
    let min = frame.pixels.iter().copied().fold(f64::INFINITY, f64::min);
    let max = frame
        .pixels
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let mut buf = format!("P5\n{} {}\n65535\n", frame.cols, frame.rows).into_bytes();
    for &p in &frame.pixels {
        let v = if span > 0.0 {
            ((p - min) / span * 65535.0).round() as u16
        } else {
            0
        };
        buf.extend_from_slice(&v.to_be_bytes());
    }
    std::fs::write(path, &buf).map_err(|e| OwcError::io(path, e))?;
    let mut side_path = path.as_os_str().to_owned();
    side_path.push(".txt");
    let side_path = std::path::PathBuf::from(side_path);
    let mut side = std::fs::File::create(&side_path).map_err(|e| OwcError::io(&side_path, e))?;
    writeln!(
        side,
        "scaling = linear\nmin = {min:e}\nmax = {max:e}\nrows = {}\ncols = {}\nt = {}",
        frame.rows, frame.cols, frame.t
    )
    .map_err(|e| OwcError::io(&side_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn camera_down(pos: Vec3) -> CameraModel {
        CameraModel::new(pos, -Vec3::Z, 0.015, 1e-4, 64, 64).unwrap()
    }

    #[test]
    fn nadir_basis_falls_back_to_world_axes() {
        let cam = camera_down(Vec3::ZERO);
        assert_eq!(cam.e_i, Vec3::X);
        assert_eq!(cam.e_j, Vec3::Y);
    }

    #[test]
    fn central_pixel_looks_along_boresight() {
        let b = Vec3::new(0.1, -0.2, -1.0).normalize();
        let cam = CameraModel::new(Vec3::new(1.0, 2.0, 8.0), b, 0.015, 1e-4, 64, 64).unwrap();
        let ray = pixel_ray(&cam, 32, 32).unwrap();
        assert!((ray.direction - b).norm() < 1e-12);
        assert_eq!(ray.origin, cam.position);
    }

    #[test]
    fn neighbour_and_corner_pixel_angles() {
        let cam = camera_down(Vec3::ZERO);
        let r = pixel_ray(&cam, 33, 32).unwrap();
        let a = r.direction.angle_to(cam.boresight);
        assert!((a - (1e-4f64 / 0.015).atan()).abs() < 1e-15);
        assert!((a - 6.666e-3).abs() < 1e-6);
        let corner = pixel_ray(&cam, 64, 64).unwrap();
        let expect = (1e-4 * 32f64.hypot(32.0) / 0.015).atan();
        assert!((corner.direction.angle_to(cam.boresight) - expect).abs() < 1e-14);
        assert!(pixel_ray(&cam, 0, 3).is_err());
        assert!(pixel_ray(&cam, 65, 3).is_err());
    }

    #[test]
    fn flat_surface_intersections() {
        let flat = SurfaceRealization::flat();
        let m = MarchSettings::default();
        let down = TraceRay {
            origin: Vec3::new(0.0, 0.0, 20.0),
            direction: -Vec3::Z,
            stage: RayStage::Screen,
        };
        let h = intersect_surface(&down, &flat, 0.0, &m).unwrap();
        assert!(h.point.norm() < 1e-9);
        let slanted = TraceRay {
            direction: Vec3::new(1.0, 0.0, -1.0).normalize(),
            ..down
        };
        let h = intersect_surface(&slanted, &flat, 0.0, &m).unwrap();
        assert!((h.point - Vec3::new(20.0, 0.0, 0.0)).norm() < 1e-9);
        let up = TraceRay {
            direction: Vec3::Z,
            ..down
        };
        assert!(intersect_surface(&up, &flat, 0.0, &m).is_none());
    }

    #[test]
    fn refraction_cases() {
        let c = OpticalConstants {
            n_air: 1.0,
            ..OpticalConstants::default()
        };
        assert_eq!(refract_backward(-Vec3::Z, Vec3::Z, &c).unwrap(), -Vec3::Z);
        let d = Vec3::new(1.0, 0.0, -1.0).normalize();
        let r = refract_backward(d, Vec3::Z, &c).unwrap();
        let angle = r.angle_to(-Vec3::Z);
        let expect = ((std::f64::consts::FRAC_PI_4).sin() / 1.33).asin();
        assert!((angle - expect).abs() < 1e-14);
        assert!((angle.to_degrees() - 32.12).abs() < 0.01);
        let mut rng = crate::rng::rng_from_seed(3);
        for _ in 0..1000 {
            let d = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                -rng.random_range(0.01..1.0),
            )
            .normalize();
            let n = Vec3::new(
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
                1.0,
            )
            .normalize();
            if let Some(r) = refract_backward(d, n, &c) {
                assert!((r.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_undoes_backward() {
        let c = OpticalConstants::default();
        let n = Vec3::new(0.1, -0.05, 1.0).normalize();
        let d = Vec3::new(0.3, 0.2, -1.0).normalize();
        let down = refract_backward(d, n, &c).unwrap();
        let up = refract_forward(-down, n, &c).unwrap();
        assert!((up + d).norm() < 1e-14);
        // beyond the critical angle nothing leaves the water
        let steep = Vec3::new(1.0, 0.0, 0.3).normalize();
        assert!(refract_forward(steep, Vec3::Z, &c).is_none());
    }

    #[test]
    fn source_disc_test() {
        let hit_exact = TraceRay {
            origin: Vec3::ZERO,
            direction: -Vec3::Z,
            stage: RayStage::Refracted,
        };
        assert!(source_hit_test(&hit_exact, Vec3::new(0.0, 0.0, -5.0), 0.05));
        let r0 = 0.05;
        assert!(source_hit_test(&hit_exact, Vec3::new(r0, 0.0, -5.0), r0));
        assert!(!source_hit_test(
            &hit_exact,
            Vec3::new(r0 * 1.0001, 0.0, -5.0),
            r0
        ));
        // behind the origin: line distance is zero but the guard rejects it
        let behind = Vec3::new(0.0, 0.0, 5.0);
        assert!((behind - hit_exact.origin).dot(hit_exact.direction) < 0.0);
        assert!(!source_hit_test(&hit_exact, behind, 1.0));
    }

    #[test]
    fn pixel_direction_round_trip() {
        let b = Vec3::new(0.05, 0.1, -1.0).normalize();
        let cam = CameraModel::new(Vec3::new(0.0, 0.0, 6.0), b, 0.015, 1e-4, 64, 64).unwrap();
        for &(i, j) in &[(1usize, 1usize), (32, 32), (17, 50), (64, 9)] {
            let d = pixel_ray(&cam, i, j).unwrap().direction;
            let (pi, pj) = cam.pixel_of_direction(d).unwrap();
            assert!((pi - i as f64).abs() < 1e-9 && (pj - j as f64).abs() < 1e-9);
        }
        assert!(cam.pixel_of_direction(-b).is_none());
    }

    #[test]
    fn pgm_export() {
        let cam = camera_down(Vec3::new(0.0, 0.0, 5.0));
        let mut pixels = vec![0.0; 64 * 64];
        pixels[5] = 2.0;
        pixels[7] = 1.0;
        let frame = IntensityFrame {
            rows: 64,
            cols: 64,
            pixels,
            t: 0.0,
            camera: cam,
            truth: None,
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("frame.pgm");
        write_pgm16(&p, &frame).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        let header = b"P5\n64 64\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        let body = &bytes[header.len()..];
        assert_eq!(body.len(), 64 * 64 * 2);
        assert_eq!(u16::from_be_bytes([body[10], body[11]]), 65535);
        assert_eq!(u16::from_be_bytes([body[14], body[15]]), 32768);
        let side = std::fs::read_to_string(dir.path().join("frame.pgm.txt")).unwrap();
        assert!(side.contains("max = 2e0"));
    }

    fn wavy(seed: u64) -> SurfaceRealization {
        let params = crate::wave::SpectrumParams::jonswap(9.80, 10.0, 2e4, 3.3);
        let grid = crate::wave::SpectralGrid::default_for(&params).unwrap();
        crate::wave::realize_surface(&params, &grid, seed).unwrap()
    }

    #[test]
    fn flat_sea_images_beacon_at_centre() {
        let flat = SurfaceRealization::flat();
        let (tx, rx) = (Vec3::new(0.0, 0.0, -10.0), Vec3::new(0.0, 0.0, 6.0));
        let cam = camera_down(rx);
        let geom = LinkGeometry {
            tx,
            rx,
            tx_boresight: Vec3::Z,
            rx_boresight: -Vec3::Z,
            t: 0.0,
            surface: &flat,
        };
        let frame = render(
            &cam,
            &geom,
            &OpticalConstants::default(),
            &RenderSettings::default(),
        );
        let (best, _) =
            frame.pixels.iter().enumerate().fold(
                (0, 0.0),
                |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc },
            );
        let (r, c) = (best / 64, best % 64);
        assert!(frame.lit_count() > 0);
        assert!(
            (r as isize - 31).abs() <= 1 && (c as isize - 31).abs() <= 1,
            "{r} {c}"
        );
    }

    #[test]
    fn seeded_matches_exhaustive() {
        let consts = OpticalConstants::default();
        for seed in 0..3u64 {
            let surface = wavy(seed);
            let tx = Vec3::new(0.5 * seed as f64, -0.3, -9.0);
            let rx = Vec3::new(-0.2, 0.4, 6.0);
            let geom = LinkGeometry {
                tx,
                rx,
                tx_boresight: Vec3::Z,
                rx_boresight: -Vec3::Z,
                t: 3.0 + seed as f64,
                surface: &surface,
            };
            let sol = crate::optics::solve_refraction_point(
                tx,
                rx,
                &surface,
                geom.t,
                &consts,
                &SolverSettings::default(),
            );
            let cam =
                CameraModel::new(rx, (sol.point - rx).normalize(), 0.015, 1e-4, 64, 64).unwrap();
            let seeded = render(&cam, &geom, &consts, &RenderSettings::default());
            let full = render(
                &cam,
                &geom,
                &consts,
                &RenderSettings {
                    mode: RenderMode::Exhaustive,
                    ..RenderSettings::default()
                },
            );
            assert!(full.lit_count() > 0);
            assert_eq!(seeded.pixels, full.pixels);
        }
    }
}
