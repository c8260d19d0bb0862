//! Two-dimensional Nelder–Mead minimizer used by the refraction solver.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadSettings {
    /// Stop once the spread of objective values over the simplex is below this.
    pub ftol: f64,
    /// ... and the simplex diameter is below this.
    pub xtol: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadResult {
    pub x: [f64; 2],
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn lerp(a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Minimizes `f` starting from the simplex `{x0, x0 + step·e_x, x0 + step·e_y}`.
pub fn minimize<F>(f: F, x0: [f64; 2], step: f64, settings: &NelderMeadSettings) -> NelderMeadResult
where
    F: Fn([f64; 2]) -> f64,
{
    let mut pts = [x0, [x0[0] + step, x0[1]], [x0[0], x0[1] + step]];
    let mut vals = pts.map(&f);
    let mut iterations = 0;
    let mut converged = false;

    loop {
        // order: best, middle, worst (stable, so ties keep earlier vertices first)
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = idx.map(|i| pts[i]);
        vals = idx.map(|i| vals[i]);

        let spread = vals[2] - vals[0];
        let diameter = dist(pts[0], pts[1])
            .max(dist(pts[0], pts[2]))
            .max(dist(pts[1], pts[2]));
        if spread <= settings.ftol && diameter <= settings.xtol {
            converged = true;
            break;
        }
        if iterations >= settings.max_iters {
            break;
        }
        iterations += 1;

        let centroid = lerp(pts[0], pts[1], 0.5);
        let reflected = lerp(centroid, pts[2], -REFLECT);
        let fr = f(reflected);
        if fr < vals[0] {
            let expanded = lerp(centroid, pts[2], -EXPAND);
            let fe = f(expanded);
            if fe < fr {
                pts[2] = expanded;
                vals[2] = fe;
            } else {
                pts[2] = reflected;
                vals[2] = fr;
            }
            continue;
        }
        if fr < vals[1] {
            pts[2] = reflected;
            vals[2] = fr;
            continue;
        }
        let (contracted, fc) = if fr < vals[2] {
            let c = lerp(centroid, reflected, CONTRACT);
            (c, f(c))
        } else {
            let c = lerp(centroid, pts[2], CONTRACT);
            (c, f(c))
        };
        if fc < vals[2].min(fr) {
            pts[2] = contracted;
            vals[2] = fc;
            continue;
        }
        for i in 1..3 {
            pts[i] = lerp(pts[0], pts[i], SHRINK);
            vals[i] = f(pts[i]);
        }
    }

    NelderMeadResult {
        x: pts[0],
        f: vals[0],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> NelderMeadSettings {
        NelderMeadSettings {
            ftol: 1e-12,
            xtol: 1e-9,
            max_iters: 500,
        }
    }

    #[test]
    fn finds_quadratic_minimum() {
        let r = minimize(
            |p| (p[0] - 1.5).powi(2) + 3.0 * (p[1] + 0.5).powi(2) + 0.5 * p[0] * p[1],
            [0.0, 0.0],
            0.3,
            &settings(),
        );
        assert!(r.converged);
        let gx = 2.0 * (r.x[0] - 1.5) + 0.5 * r.x[1];
        let gy = 6.0 * (r.x[1] + 0.5) + 0.5 * r.x[0];
        assert!(gx.abs() < 1e-7 && gy.abs() < 1e-7, "gradient {gx} {gy}");
    }

    #[test]
    fn rosenbrock_within_cap() {
        let r = minimize(
            |p| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2),
            [-1.2, 1.0],
            0.1,
            &NelderMeadSettings {
                max_iters: 2000,
                ..settings()
            },
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reports_iteration_cap() {
        let r = minimize(
            |p| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2),
            [-1.2, 1.0],
            0.1,
            &NelderMeadSettings {
                max_iters: 5,
                ..settings()
            },
        );
        assert!(!r.converged);
        assert_eq!(r.iterations, 5);
    }
}
