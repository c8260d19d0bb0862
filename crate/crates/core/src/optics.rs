//! Direct-path geometry across the sea surface and the link gain chain.
//!
//! The refraction point is the surface point minimizing the optical path
//! length `n_water·|T − S| + n_air·|S − R|`. The received intensity is
//! `I0 · G_D(α_D) · G_A(α_A) · G_path · G_ref`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{OwcError, Result};
use crate::nelder_mead::{self, NelderMeadSettings};
use crate::vec3::Vec3;
use crate::wave::SurfaceRealization;

/// Optical constants of the link. Defaults are the clear-ocean, green-laser
/// configuration used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalConstants {
    pub n_water: f64,
    pub n_air: f64,
    pub wavelength: f64,
    pub a_w: f64,
    pub b_w: f64,
    pub a_a: f64,
    pub b_a: f64,
    /// Maximum departure half-angle of the laser (rad).
    pub omega_d: f64,
    /// Maximum arrival half-angle (field of view) of the detector (rad).
    pub omega_a: f64,
    pub i0: f64,
    /// Radius of the transmitter seen as a light source (m).
    pub source_radius: f64,
}

impl Default for OpticalConstants {
    fn default() -> Self {
        OpticalConstants {
            n_water: 1.33,
            n_air: 1.0003,
            wavelength: 532e-9,
            a_w: 1.80e-2,
            b_w: 3.81e-3,
            a_a: 1e-7,
            b_a: 2.96e-5,
            omega_d: PI / 600.0,
            omega_a: PI / 3.0,
            i0: 1.0,
            source_radius: 0.08,
        }
    }
}

impl OpticalConstants {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(OwcError::InvalidParam(m));
        if !(self.n_air >= 1.0 && self.n_water > self.n_air) {
            return err(format!(
                "need n_water > n_air >= 1, got n_water = {}, n_air = {}",
                self.n_water, self.n_air
            ));
        }
        for (name, v) in [
            ("a_w", self.a_w),
            ("b_w", self.b_w),
            ("a_a", self.a_a),
            ("b_a", self.b_a),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return err(format!("{name} must be >= 0, got {v}"));
            }
        }
        if !(0.0 < self.omega_d && self.omega_d < self.omega_a && self.omega_a < FRAC_PI_2) {
            return err(format!(
                "need 0 < omega_d < omega_a < pi/2, got omega_d = {}, omega_a = {}",
                self.omega_d, self.omega_a
            ));
        }
        if !(self.i0 > 0.0 && self.source_radius > 0.0 && self.wavelength > 0.0) {
            return err("i0, source_radius and wavelength must be > 0".into());
        }
        Ok(())
    }

    pub fn critical_angle(&self) -> f64 {
        (self.n_air / self.n_water).asin()
    }
}

/// One snapshot of the link: transceiver poses, time and the surface.
#[derive(Debug, Clone, Copy)]
pub struct LinkGeometry<'a> {
    pub tx: Vec3,
    pub rx: Vec3,
    pub tx_boresight: Vec3,
    pub rx_boresight: Vec3,
    pub t: f64,
    pub surface: &'a SurfaceRealization,
}

impl LinkGeometry<'_> {
    pub fn validate(&self) -> Result<()> {
        let w_tx = self.surface.height(self.tx.x, self.tx.y, self.t);
        if !(self.tx.z < w_tx) {
            return Err(OwcError::Scene(format!(
                "transmitter at z = {} is not below the surface (W = {w_tx})",
                self.tx.z
            )));
        }
        let w_rx = self.surface.height(self.rx.x, self.rx.y, self.t);
        if !(self.rx.z > w_rx) {
            return Err(OwcError::Scene(format!(
                "receiver at z = {} is not above the surface (W = {w_rx})",
                self.rx.z
            )));
        }
        for (name, b) in [
            ("tx_boresight", self.tx_boresight),
            ("rx_boresight", self.rx_boresight),
        ] {
            if !((b.norm() - 1.0).abs() <= 1e-12) {
                return Err(OwcError::Scene(format!("{name} is not unit-norm")));
            }
        }
        Ok(())
    }
}

/// Direct path through the refraction point `S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefractionSolution {
    pub point: Vec3,
    pub opl: f64,
    pub d_w: f64,
    pub d_a: f64,
    /// Incidence angle in water against the local upward normal.
    pub theta_i: f64,
    /// Transmission angle in air against the local upward normal.
    pub theta_t: f64,
    pub normal: Vec3,
    pub converged: bool,
    pub iterations: usize,
}

impl RefractionSolution {
    /// Unit vector from the receiver toward the refraction point.
    pub fn receiver_direction(&self, rx: Vec3) -> Vec3 {
        (self.point - rx).normalize()
    }

    /// Unit vector from the transmitter toward the refraction point.
    pub fn transmitter_direction(&self, tx: Vec3) -> Vec3 {
        (self.point - tx).normalize()
    }
}

/// Path quantities for the candidate refraction point above `(sx, sy)`.
pub fn evaluate_path(
    tx: Vec3,
    rx: Vec3,
    sx: f64,
    sy: f64,
    surface: &SurfaceRealization,
    t: f64,
    consts: &OpticalConstants,
) -> RefractionSolution {
    let (w, gx, gy) = surface.height_and_gradient(sx, sy, t);
    let s = Vec3::new(sx, sy, w);
    let normal = crate::wave::normal_from_gradient(gx, gy);
    let d_w = (s - tx).norm();
    let d_a = (rx - s).norm();
    RefractionSolution {
        point: s,
        opl: consts.n_water * d_w + consts.n_air * d_a,
        d_w,
        d_a,
        theta_i: (s - tx).angle_to(normal),
        theta_t: (rx - s).angle_to(normal),
        normal,
        converged: true,
        iterations: 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Nodes per axis of the coarse seeding grid.
    pub grid: usize,
    /// Padding of the transceiver footprint box (m).
    pub pad: f64,
    /// Objective spread at convergence (m of OPL).
    pub ftol: f64,
    /// Simplex diameter at convergence (m).
    pub xtol: f64,
    pub max_iters: usize,
    /// Distinct coarse-grid basins refined by Nelder–Mead.
    pub max_seeds: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            grid: 41,
            pad: 2.0,
            ftol: 1e-9,
            xtol: 1e-9,
            max_iters: 500,
            max_seeds: 3,
        }
    }
}

/// Horizontal search box `[x0, x1] × [y0, y1]` used by the solver.
pub fn search_box(tx: Vec3, rx: Vec3, pad: f64) -> [f64; 4] {
    [
        tx.x.min(rx.x) - pad,
        tx.x.max(rx.x) + pad,
        tx.y.min(rx.y) - pad,
        tx.y.max(rx.y) + pad,
    ]
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

/// Finds the minimum-OPL refraction point of the direct path.
///
/// A coarse grid over the padded transceiver footprint locates candidate
/// basins; the best few are refined with Nelder–Mead on `(x, y)` and the
/// lowest OPL wins. Rough seas may have several local minima, so the result
/// is the best one found, not a proven global optimum.
pub fn solve_refraction_point(
    tx: Vec3,
    rx: Vec3,
    surface: &SurfaceRealization,
    t: f64,
    consts: &OpticalConstants,
    settings: &SolverSettings,
) -> RefractionSolution {
    solve_candidates(tx, rx, surface, t, consts, settings)
        .into_iter()
        .next()
        .expect("solver always yields at least one candidate")
}

/// Every refined stationary path, sorted by increasing OPL. The first entry
/// is the direct path returned by [`solve_refraction_point`]; the others are
/// secondary local minima (distinct images of the source).
pub fn solve_candidates(
    tx: Vec3,
    rx: Vec3,
    surface: &SurfaceRealization,
    t: f64,
    consts: &OpticalConstants,
    settings: &SolverSettings,
) -> Vec<RefractionSolution> {
    let n = settings.grid.max(2);
    let [x0, x1, y0, y1] = search_box(tx, rx, settings.pad);
    let xs = linspace(x0, x1, n);
    let ys = linspace(y0, y1, n);
    let heights = surface.height_grid(&xs, &ys, t);
    let opl_at = |x: f64, y: f64, z: f64| {
        let s = Vec3::new(x, y, z);
        consts.n_water * (s - tx).norm() + consts.n_air * (rx - s).norm()
    };
    let opl: Vec<f64> = (0..n * n)
        .map(|k| opl_at(xs[k % n], ys[k / n], heights[k]))
        .collect();

    let mut seeds: Vec<usize> = (0..n * n)
        .filter(|&k| {
            let (c, r) = ((k % n) as isize, (k / n) as isize);
            (-1..=1).all(|dr| {
                (-1..=1).all(|dc| {
                    let (rr, cc) = (r + dr, c + dc);
                    if (dr == 0 && dc == 0)
                        || rr < 0
                        || cc < 0
                        || rr >= n as isize
                        || cc >= n as isize
                    {
                        return true;
                    }
                    let j = rr as usize * n + cc as usize;
                    // ties resolve toward the lower index
                    opl[k] < opl[j] || (opl[k] == opl[j] && k < j)
                })
            })
        })
        .collect();
    seeds.sort_by(|&a, &b| opl[a].total_cmp(&opl[b]).then(a.cmp(&b)));
    seeds.truncate(settings.max_seeds.max(1));

    let step = (xs[1] - xs[0]).min(ys[1] - ys[0]);
    let nm = NelderMeadSettings {
        ftol: settings.ftol,
        xtol: settings.xtol,
        max_iters: settings.max_iters,
    };
    let objective = |p: [f64; 2]| opl_at(p[0], p[1], surface.height(p[0], p[1], t));

    let mut out: Vec<RefractionSolution> = Vec::with_capacity(seeds.len());
    for k in seeds {
        let r = nelder_mead::minimize(objective, [xs[k % n], ys[k / n]], step, &nm);
        let mut sol = evaluate_path(tx, rx, r.x[0], r.x[1], surface, t, consts);
        sol.converged = r.converged;
        sol.iterations = r.iterations;
        // Two seeds can fall into one basin; keep the first copy.
        let duplicate = out
            .iter()
            .any(|o| (o.point.x - sol.point.x).hypot(o.point.y - sol.point.y) < 1e-6);
        if !duplicate {
            out.push(sol);
        }
    }
    out.sort_by(|a, b| a.opl.total_cmp(&b.opl));
    out
}

/// `|n_water·sin θ_i − n_air·sin θ_t|`; zero exactly when Snell's law holds.
pub fn snell_residual(sol: &RefractionSolution, consts: &OpticalConstants) -> f64 {
    (consts.n_water * sol.theta_i.sin() - consts.n_air * sol.theta_t.sin()).abs()
}

fn check_half_open_angle(what: &'static str, a: f64) -> Result<()> {
    if (0.0..FRAC_PI_2).contains(&a) {
        Ok(())
    } else {
        Err(OwcError::domain(what, a))
    }
}

/// Normalized laser emission profile
/// `exp(−2 sin²α / (ω_D²[1 + (λ cos α / (π ω_D²))²]))`.
pub fn gain_departure(alpha_d: f64, consts: &OpticalConstants) -> Result<f64> {
    check_half_open_angle("alpha_D", alpha_d)?;
    Ok(departure_unchecked(alpha_d, consts))
}

fn departure_unchecked(alpha_d: f64, consts: &OpticalConstants) -> f64 {
    let w2 = consts.omega_d * consts.omega_d;
    let spread = consts.wavelength * alpha_d.cos() / (PI * w2);
    let s = alpha_d.sin();
    (-2.0 * s * s / (w2 * (1.0 + spread * spread))).exp()
}

/// Detector gain `n_air² cos α / sin² ω_A` inside the field of view, zero
/// outside it.
pub fn gain_arrival(alpha_a: f64, consts: &OpticalConstants) -> Result<f64> {
    check_half_open_angle("alpha_A", alpha_a)?;
    Ok(arrival_unchecked(alpha_a, consts))
}

fn arrival_unchecked(alpha_a: f64, consts: &OpticalConstants) -> f64 {
    if alpha_a > consts.omega_a {
        return 0.0;
    }
    let s = consts.omega_a.sin();
    consts.n_air * consts.n_air * alpha_a.cos() / (s * s)
}

/// Beer–Lambert attenuation in both media times inverse-square spreading.
pub fn gain_path(d_w: f64, d_a: f64, consts: &OpticalConstants) -> Result<f64> {
    if !(d_w >= 0.0) {
        return Err(OwcError::domain("d_w", d_w));
    }
    if !(d_a >= 0.0) {
        return Err(OwcError::domain("d_a", d_a));
    }
    let total = d_w + d_a;
    if !(total > 0.0) {
        return Err(OwcError::domain("d_w + d_a", total));
    }
    let exponent = -(consts.a_w + consts.b_w) * d_w - (consts.a_a + consts.b_a) * d_a;
    Ok(exponent.exp() / (total * total))
}

/// Unpolarized Fresnel transmittance for light leaving the water,
/// `1 − ½(r_s² + r_p²)`, or zero under total internal reflection.
///
/// Both amplitude coefficients take `n_water` on the incidence side and
/// `n_air` on the transmission side. Swapping the indices in only one of
/// them leaves the normal-incidence value unchanged but not oblique ones.
pub fn gain_fresnel(theta_i: f64, theta_t: f64, consts: &OpticalConstants) -> f64 {
    if theta_i.sin() >= consts.n_air / consts.n_water {
        return 0.0;
    }
    let (n1, n2) = (consts.n_water, consts.n_air);
    let (ci, ct) = (theta_i.cos(), theta_t.cos());
    let rs = (n1 * ci - n2 * ct) / (n1 * ci + n2 * ct);
    let rp = (n2 * ci - n1 * ct) / (n2 * ci + n1 * ct);
    (1.0 - 0.5 * (rs * rs + rp * rp)).clamp(0.0, 1.0)
}

/// Transmission angle in air for incidence `theta_i` from the water, or
/// `None` beyond the critical angle.
pub fn snell_transmission_angle(theta_i: f64, consts: &OpticalConstants) -> Option<f64> {
    let s = consts.n_water / consts.n_air * theta_i.sin();
    (s < 1.0).then(|| s.asin())
}

/// The four gain factors of one link evaluation and the angles behind them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainBreakdown {
    pub g_d: f64,
    pub g_a: f64,
    pub g_path: f64,
    pub g_ref: f64,
    /// `g_d·g_a·g_path·g_ref`, or 0 when the path solve did not converge.
    pub g_total: f64,
    pub alpha_d: f64,
    pub alpha_a: f64,
    pub converged: bool,
}

impl GainBreakdown {
    pub fn rss(&self, consts: &OpticalConstants) -> f64 {
        consts.i0 * self.g_total
    }
}

/// Gain chain for an already-solved path and the given boresights.
///
/// Angles at or beyond π/2 mean the transceiver faces away from the path;
/// the corresponding factor is zero there instead of a domain error.
pub fn gains_for_path(
    sol: &RefractionSolution,
    tx: Vec3,
    rx: Vec3,
    tx_boresight: Vec3,
    rx_boresight: Vec3,
    consts: &OpticalConstants,
) -> GainBreakdown {
    let alpha_d = tx_boresight.angle_to(sol.point - tx);
    let alpha_a = rx_boresight.angle_to(sol.point - rx);
    let g_d = if alpha_d < FRAC_PI_2 {
        departure_unchecked(alpha_d, consts)
    } else {
        0.0
    };
    let g_a = if alpha_a < FRAC_PI_2 {
        arrival_unchecked(alpha_a, consts)
    } else {
        0.0
    };
    let g_path = gain_path(sol.d_w, sol.d_a, consts).unwrap_or(0.0);
    let g_ref = gain_fresnel(sol.theta_i, sol.theta_t, consts);
    let product = g_d * g_a * g_path * g_ref;
    GainBreakdown {
        g_d,
        g_a,
        g_path,
        g_ref,
        g_total: if sol.converged { product } else { 0.0 },
        alpha_d,
        alpha_a,
        converged: sol.converged,
    }
}

/// Solved path plus its gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkEvaluation {
    pub solution: RefractionSolution,
    pub gains: GainBreakdown,
}

pub fn evaluate_link(
    geom: &LinkGeometry<'_>,
    consts: &OpticalConstants,
    settings: &SolverSettings,
) -> LinkEvaluation {
    let solution = solve_refraction_point(geom.tx, geom.rx, geom.surface, geom.t, consts, settings);
    let gains = gains_for_path(
        &solution,
        geom.tx,
        geom.rx,
        geom.tx_boresight,
        geom.rx_boresight,
        consts,
    );
    LinkEvaluation { solution, gains }
}

/// Full gain chain with default solver settings.
pub fn gain_total(geom: &LinkGeometry<'_>, consts: &OpticalConstants) -> Result<GainBreakdown> {
    geom.validate()?;
    consts.validate()?;
    Ok(evaluate_link(geom, consts, &SolverSettings::default()).gains)
}
