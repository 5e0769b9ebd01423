//! Area densities of small balls centred on seam points.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::glued::{GluedMetric, GluedPoint};
use crate::numeric::bisect_predicate;
use crate::sphere::{Hemisphere, SpherePoint};

/// Seam samples per membership test inside the seam window.
const WINDOW_SAMPLES: usize = 32;

/// `f(ε) = arcsin(ε)/π + √(1−ε²)/(πε)`, the sharp one-hemisphere density.
pub fn f_bound(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return domain(format!("f is defined on (0, 1], got {eps}"));
    }
    Ok(eps.asin() / PI + (1.0 - eps * eps).max(0.0).sqrt() / (PI * eps))
}

/// `L(C) = 1/f⁻¹(C)` by bisection.
pub fn l_of_c(c: f64) -> Result<f64> {
    if !(c >= 0.5 && c.is_finite()) {
        return domain(format!("L(C) needs C >= 1/2, got {c}"));
    }
    if c == 0.5 {
        return Ok(1.0);
    }
    // f(ε) ≥ 1/(πε) puts the root in [1/(πC), 1]
    let f = |e: f64| f_bound(e).expect("inside (0,1]");
    let eps = bisect_predicate(|e| f(e) <= c, 1.0 / (PI * c), 1.0, 1e-16);
    Ok(1.0 / eps)
}

/// Default radius ladder `0.2·2^{−k}`, `k = 0..6`.
pub fn default_radii() -> Vec<f64> {
    (0..7).map(|k| 0.2 * 0.5f64.powi(k)).collect()
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r < FRAC_PI_4) {
        return domain(format!("ball radius must lie in (0, π/4), got {r}"));
    }
    Ok(())
}

/// Areas of the south and north parts of the closed ball `B̄(θ₀, r)`.
///
/// Membership is monotone along meridians near the seam, so each longitude
/// column contributes `sin β*` where `β*` is the boundary depth found by
/// bisection. Columns are placed at Chebyshev angles across the seam window,
/// which resolves the square-root profile at the window ends.
pub fn ball_area(metric: &GluedMetric, theta0: f64, r: f64, quadrature_resolution: usize) -> Result<(f64, f64)> {
    check_radius(r)?;
    if quadrature_resolution < 8 {
        return domain(format!("quadrature resolution must be >= 8, got {quadrature_resolution}"));
    }
    let window = metric.seam_window(theta0, r).unwrap_or((theta0 - PI, theta0 + PI));
    let south = hemisphere_part(metric, theta0, r, window, Hemisphere::South, quadrature_resolution);
    let north = hemisphere_part(metric, theta0, r, window, Hemisphere::North, quadrature_resolution);
    Ok((south, north))
}

fn hemisphere_part(metric: &GluedMetric, theta0: f64, r: f64, window: (f64, f64), tag: Hemisphere, n: usize) -> f64 {
    let g = metric.homeo();
    let (lo, hi) = match tag {
        Hemisphere::South => window,
        Hemisphere::North => (g.lift(window.0), g.lift(window.1)),
    };
    if hi - lo <= 0.0 {
        return 0.0;
    }
    let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let dt = PI / n as f64;
    let sign = match tag {
        Hemisphere::South => -1.0,
        Hemisphere::North => 1.0,
    };
    (0..n)
        .into_par_iter()
        .map(|i| {
            let t = dt * (i as f64 + 0.5);
            let lon = c + h * t.cos();
            let member = |beta: f64| {
                let p = GluedPoint { tag, position: SpherePoint::from_lon_lat(lon, sign * beta), seam: None };
                let p = if beta == 0.0 {
                    match tag {
                        Hemisphere::South => GluedPoint::seam(lon),
                        Hemisphere::North => GluedPoint::seam(g.inverse_lift(lon)),
                    }
                } else {
                    p
                };
                metric.windowed_distance_from_seam(theta0, &p, window, WINDOW_SAMPLES) <= r
            };
            if !member(0.0) {
                return 0.0;
            }
            let beta = bisect_predicate(|b| !member(b), 0.0, r.min(PI / 2.0), 1e-10 * r);
            beta.sin() * h * t.sin() * dt
        })
        .sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityRow {
    pub radius: f64,
    pub south: f64,
    pub north: f64,
    pub total: f64,
    pub ratio_south: f64,
    pub ratio_north: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityReport {
    pub theta0: f64,
    pub rows: Vec<DensityRow>,
    /// Extrapolated lower density of the south part.
    pub c1: f64,
    /// Extrapolated lower density of the north part.
    pub c2: f64,
    pub c: f64,
    /// Always true: the liminf is estimated from finitely many radii.
    pub estimate: bool,
}

/// Richardson extrapolation of consecutive ratios assuming an `r²` error,
/// followed by the minimum of the last three extrapolated values.
pub fn extrapolated_liminf(radii: &[f64], ratios: &[f64]) -> f64 {
    if ratios.len() == 1 {
        return ratios[0];
    }
    let ext: Vec<f64> = (1..ratios.len())
        .map(|k| {
            let q = (radii[k - 1] / radii[k]).powi(2);
            (q * ratios[k] - ratios[k - 1]) / (q - 1.0)
        })
        .collect();
    ext[ext.len().saturating_sub(3)..].iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Ball areas over a decreasing radius ladder with extrapolated densities.
pub fn density_sweep(metric: &GluedMetric, theta0: f64, radii: &[f64], quadrature_resolution: usize) -> Result<DensityReport> {
    if radii.is_empty() {
        return domain("density sweep needs at least one radius");
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return domain("radii must be strictly decreasing");
    }
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let (south, north) = ball_area(metric, theta0, r, quadrature_resolution)?;
        let disk = PI * r * r;
        rows.push(DensityRow {
            radius: r,
            south,
            north,
            total: south + north,
            ratio_south: south / disk,
            ratio_north: north / disk,
            ratio: (south + north) / disk,
        });
    }
    let c1 = extrapolated_liminf(radii, &rows.iter().map(|r| r.ratio_south).collect::<Vec<_>>());
    let c2 = extrapolated_liminf(radii, &rows.iter().map(|r| r.ratio_north).collect::<Vec<_>>());
    Ok(DensityReport { theta0, rows, c1, c2, c: c1 + c2, estimate: true })
}

#[derive(Debug, Clone, Serialize)]
pub struct BilipBoundReport {
    pub densities: Vec<DensityReport>,
    /// `max` of the extrapolated total densities.
    pub c_prime: f64,
    /// `πC′`.
    pub bound_pi_c: f64,
    /// `(C′ − 1/2)π`.
    pub bound_remark: f64,
    /// `L(C′ − 1/2)`, with the argument clamped to at least `1/2`.
    pub bound_l: f64,
    pub measured_bilip: f64,
}

impl BilipBoundReport {
    /// Whether the measured constant lies below every bound up to `rel_tol`.
    pub fn consistent(&self, rel_tol: f64) -> bool {
        [self.bound_pi_c, self.bound_remark, self.bound_l]
            .iter()
            .all(|&b| self.measured_bilip <= b * (1.0 + rel_tol))
    }
}

/// Density sweeps at seam points followed by the three bi-Lipschitz bounds.
pub fn bilip_bound_pipeline(
    metric: &GluedMetric,
    sample_points: &[f64],
    radii: &[f64],
    quadrature_resolution: usize,
    bilip_samples: usize,
) -> Result<BilipBoundReport> {
    if sample_points.is_empty() {
        return domain("pipeline needs at least one seam point");
    }
    let densities = sample_points
        .iter()
        .map(|&t| density_sweep(metric, t, radii, quadrature_resolution))
        .collect::<Result<Vec<_>>>()?;
    let c_prime = densities.iter().map(|d| d.c).fold(f64::NEG_INFINITY, f64::max);
    let excess = (c_prime - 0.5).max(0.5);
    Ok(BilipBoundReport {
        densities,
        c_prime,
        bound_pi_c: PI * c_prime,
        bound_remark: (c_prime - 0.5) * PI,
        bound_l: l_of_c(excess)?,
        measured_bilip: metric.homeo().bilip_constant(bilip_samples),
    })
}

/// Angle of a seam point, wrapped into `[0, 2π)`.
pub fn seam_angle(theta: f64) -> f64 {
    theta.rem_euclid(TAU)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homeo::CircleHomeo;

    #[test]
    fn f_examples() {
        assert_eq!(f_bound(1.0).unwrap(), 0.5);
        assert!((f_bound(0.5).unwrap() - (1.0 / 6.0 + 3f64.sqrt() / PI)).abs() < 1e-15);
        assert!(f_bound(0.1).unwrap() >= 1.0 / (0.1 * PI));
        assert!(f_bound(0.0).is_err() && f_bound(1.1).is_err());
    }

    #[test]
    fn f_is_decreasing_and_above_reciprocal() {
        let mut prev = f64::INFINITY;
        for i in 1..=100 {
            let e = i as f64 / 100.0;
            let v = f_bound(e).unwrap();
            assert!(v < prev);
            assert!(v >= 1.0 / (PI * e) - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn l_inverts_f() {
        assert_eq!(l_of_c(0.5).unwrap(), 1.0);
        assert!((l_of_c(f_bound(0.5).unwrap()).unwrap() - 2.0).abs() < 1e-9);
        for i in 1..=50 {
            let e = i as f64 / 50.0;
            let l = l_of_c(f_bound(e).unwrap()).unwrap();
            assert!((l * e - 1.0).abs() < 1e-8, "{e}: {l}");
        }
        for i in 0..100 {
            let c = 0.5 + 9.5 * i as f64 / 99.0;
            assert!(l_of_c(c).unwrap() <= PI * c + 1e-9);
        }
        assert!(l_of_c(0.4).is_err());
    }

    #[test]
    fn round_ball_areas() {
        let m = GluedMetric::new(CircleHomeo::identity());
        let r = 0.1;
        let (s, n) = ball_area(&m, 1.0, r, 64).unwrap();
        let cap = TAU * (1.0 - r.cos());
        assert!((s - cap / 2.0).abs() / cap < 1e-3, "{s} vs {}", cap / 2.0);
        assert!((n - cap / 2.0).abs() / cap < 1e-3);
        assert!(ball_area(&m, 1.0, 1.0, 64).is_err());
    }

    #[test]
    fn ball_area_is_monotone_in_r() {
        let m = GluedMetric::new(CircleHomeo::patch(0.5, 1.0, 1.0).unwrap());
        let mut prev = (0.0, 0.0);
        for r in [0.01, 0.02, 0.05, 0.1] {
            let a = ball_area(&m, 1.0, r, 32).unwrap();
            assert!(a.0 >= prev.0 && a.1 >= prev.1);
            prev = a;
        }
    }

    #[test]
    fn patch_density_approaches_f() {
        let m = GluedMetric::new(CircleHomeo::patch(0.5, 1.0, 1.0).unwrap());
        let rep = density_sweep(&m, 1.0, &[0.04, 0.02, 0.01], 48).unwrap();
        let f = f_bound(0.5).unwrap();
        assert!((rep.c1 - f).abs() / f < 0.05, "c1 {} vs {f}", rep.c1);
        assert!((rep.c2 - 0.5).abs() < 0.025, "c2 {}", rep.c2);
        for row in &rep.rows {
            assert!(row.ratio_south >= 0.5 - 1e-3 && row.ratio_north >= 0.5 - 1e-3);
        }
        assert!(rep.estimate);
    }
}
