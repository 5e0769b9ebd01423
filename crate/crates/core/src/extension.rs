//! Extensions of circle homeomorphisms to the closed hemisphere and their
//! distortion.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::homeo::{CircleHomeo, Descriptor};
use crate::numeric::adaptive_gauss;
use crate::sphere::{sigma_unchecked, stereo, stereo_inv, DiskPoint, SpherePoint};

/// A self-map of the closed unit disk, read as the north-hemisphere chart.
pub trait DiskExtension: Sync {
    fn disk(&self, p: DiskPoint) -> DiskPoint;

    /// The pulled-back map of the closed north hemisphere.
    fn sphere(&self, p: SpherePoint) -> Result<SpherePoint> {
        if p.z < -1e-12 {
            return domain("point lies outside the closed north hemisphere");
        }
        Ok(stereo_inv(self.disk(stereo(p)?)))
    }

    /// Ratio of singular values of a central finite-difference differential.
    /// The spherical metric is conformal in the chart, so the ratio needs no
    /// metric correction.
    fn fd_distortion(&self, p: DiskPoint, h: f64) -> f64 {
        let d = |du: f64, dv: f64| {
            let a = self.disk(DiskPoint::new(p.u + du, p.v + dv));
            let b = self.disk(DiskPoint::new(p.u - du, p.v - dv));
            ((a.u - b.u) / (2.0 * h), (a.v - b.v) / (2.0 * h))
        };
        let (a, c) = d(h, 0.0);
        let (b, e) = d(0.0, h);
        singular_ratio(a, b, c, e)
    }

    /// `max_θ |ext(e^{iθ}) − e^{iG(θ)}|` over `n` boundary samples.
    fn boundary_defect(&self, g: &CircleHomeo, n: usize) -> f64 {
        (0..n)
            .map(|i| {
                let t = TAU * (i as f64 + 0.5) / n as f64;
                let q = self.disk(DiskPoint::from_polar(1.0, t));
                let gt = g.lift(t);
                (q.u - gt.cos()).hypot(q.v - gt.sin())
            })
            .fold(0.0, f64::max)
    }
}

fn singular_ratio(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let s = a * a + b * b + c * c + d * d;
    let det = (a * d - b * c).abs();
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    let hi = (0.5 * (s + disc)).sqrt();
    let lo = (0.5 * (s - disc)).max(0.0).sqrt();
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// `ψ̃(re^{iθ}) = re^{iG(θ)}`.
#[derive(Debug, Clone)]
pub struct RadialExtension {
    g: CircleHomeo,
}

pub fn radial_extend(g: &CircleHomeo) -> RadialExtension {
    RadialExtension { g: g.clone() }
}

impl DiskExtension for RadialExtension {
    fn disk(&self, p: DiskPoint) -> DiskPoint {
        let r = p.radius();
        if r == 0.0 {
            return p;
        }
        DiskPoint::from_polar(r, self.g.lift(p.angle()))
    }
}

impl RadialExtension {
    pub fn homeo(&self) -> &CircleHomeo {
        &self.g
    }

    /// Sampled bi-Lipschitz constant of the hemisphere map for the round
    /// metric. Pairs are neighbours on a polar grid (tangential, radial and
    /// diagonal) plus `random_pairs` uniform pairs drawn with `seed`.
    pub fn bilip_constant(&self, grid: usize, random_pairs: usize, seed: u64) -> f64 {
        let grid = grid.max(4);
        let nt = 4 * grid;
        let dt = TAU / nt as f64;
        let pt = |r: f64, t: f64| stereo_inv(DiskPoint::from_polar(r, t));
        let ratio = |a: SpherePoint, b: SpherePoint| {
            let d = sigma_unchecked(&a, &b);
            let e = sigma_unchecked(&self.sphere(a).expect("closed hemisphere"), &self.sphere(b).expect("closed hemisphere"));
            if d == 0.0 {
                1.0
            } else if e == 0.0 {
                f64::INFINITY
            } else {
                (e / d).max(d / e)
            }
        };
        let local = (1..=grid)
            .into_par_iter()
            .map(|i| {
                let r = i as f64 / grid as f64;
                let rin = (i - 1) as f64 / grid as f64;
                let mut worst: f64 = 1.0;
                for j in 0..nt {
                    let t = dt * j as f64;
                    let a = pt(r, t);
                    worst = worst.max(ratio(a, pt(r, t + 1e-3 * dt)));
                    worst = worst.max(ratio(a, pt(r, t + dt)));
                    worst = worst.max(ratio(a, pt(rin, t)));
                    worst = worst.max(ratio(a, pt(rin, t + dt)));
                }
                worst
            })
            .reduce(|| 1.0, f64::max);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs: Vec<(SpherePoint, SpherePoint)> = (0..random_pairs)
            .map(|_| {
                let mut draw = || pt(rng.gen::<f64>().sqrt(), TAU * rng.gen::<f64>());
                (draw(), draw())
            })
            .collect();
        let random = pairs.par_iter().map(|&(a, b)| ratio(a, b)).reduce(|| 1.0, f64::max);
        local.max(random)
    }
}

/// `K(p) = max{G′(θ), 1/G′(θ)}` for the radial extension.
pub fn pointwise_distortion(ext: &RadialExtension, p: DiskPoint) -> Result<f64> {
    if p.radius() == 0.0 {
        return match ext.g.descriptor() {
            Descriptor::Isometry => Ok(1.0),
            _ => Err(Error::Undefined { at: 0.0, reason: "distortion at the pole".into() }),
        };
    }
    let s = ext.g.speed(p.angle())?;
    Ok(if s == 0.0 { f64::INFINITY } else { s.max(1.0 / s) })
}

/// Admissible gauge `𝒜`.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Gauge {
    /// `𝒜(t) = p t − p`.
    ExpP { p: f64 },
    /// Piecewise-linear table `(t, 𝒜(t))` starting at `(1, 0)`, continued
    /// linearly with the last slope.
    Table { points: Vec<[f64; 2]> },
}

impl Gauge {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Gauge::ExpP { p } => p * t - p,
            Gauge::Table { points } => {
                let i = points.partition_point(|q| q[0] <= t).clamp(1, points.len() - 1);
                let (a, b) = (points[i - 1], points[i]);
                a[1] + (b[1] - a[1]) * (t - a[0]) / (b[0] - a[0])
            }
        }
    }

    /// Checks admissibility and returns the scale `t₀` from which `t𝒜′(t)`
    /// is nondecreasing.
    pub fn validate(&self) -> Result<f64> {
        let bad = |m: &str| Err(Error::Config(format!("gauge is not admissible: {m}")));
        match self {
            Gauge::ExpP { p } => {
                if !(*p > 0.0 && p.is_finite()) {
                    return bad("A(t) = pt - p needs p > 0 to be strictly increasing");
                }
                Ok(1.0)
            }
            Gauge::Table { points } => {
                if points.len() < 2 {
                    return bad("table needs at least two points");
                }
                if points[0] != [1.0, 0.0] {
                    return bad("A(1) = 0 fails");
                }
                if points.windows(2).any(|w| !(w[1][0] > w[0][0] && w[1][1] > w[0][1])) {
                    return bad("A is not strictly increasing");
                }
                // the linear continuation makes ∫ t⁻² A = ∞ and t A′ → ∞
                let slopes: Vec<f64> = points.windows(2).map(|w| (w[1][1] - w[0][1]) / (w[1][0] - w[0][0])).collect();
                let mut t0 = 1.0;
                for k in 1..slopes.len() {
                    // t A′ jumps at a knot; it must not drop there
                    if slopes[k] < slopes[k - 1] {
                        t0 = points[k][0];
                    }
                }
                Ok(t0)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegrabilityReport {
    /// `(angular samples, integral)` per dyadic level.
    pub levels: Vec<(usize, f64)>,
    pub divergent: bool,
    /// Finest value when the integral is judged finite.
    pub value: Option<f64>,
    pub t0: f64,
}

/// Growth factor per refinement that counts towards divergence.
pub const DIVERGENCE_GROWTH: f64 = 1.5;

/// `∫ e^{𝒜(K)}` over the hemisphere with the round area element, on
/// midpoint polar grids with `n, 2n, 4n, 8n` radial cells (four times as
/// many angular cells). Divergent when all three refinements grow the value
/// by at least [`DIVERGENCE_GROWTH`].
pub fn exp_integrability(ext: &RadialExtension, gauge: &Gauge, quadrature_resolution: usize) -> Result<IntegrabilityReport> {
    let t0 = gauge.validate()?;
    if quadrature_resolution < 2 {
        return domain("quadrature resolution must be at least 2");
    }
    let mut levels = Vec::with_capacity(4);
    for k in 0..4 {
        let n = quadrature_resolution << k;
        levels.push((4 * n, polar_integral(ext, gauge, n)?));
    }
    let divergent = levels.windows(2).all(|w| !w[0].1.is_finite() || w[1].1 >= DIVERGENCE_GROWTH * w[0].1);
    let value = if divergent { None } else { Some(levels[3].1) };
    Ok(IntegrabilityReport { levels, divergent, value, t0 })
}

fn polar_integral(ext: &RadialExtension, gauge: &Gauge, n: usize) -> Result<f64> {
    let nt = 4 * n;
    let dr = 1.0 / n as f64;
    let dt = TAU / nt as f64;
    let radial: f64 = (0..n)
        .map(|i| {
            let r = dr * (i as f64 + 0.5);
            4.0 * r / (1.0 + r * r).powi(2) * dr
        })
        .sum();
    let angular = (0..nt)
        .into_par_iter()
        .map(|j| {
            let t = dt * (j as f64 + 0.5);
            let k = pointwise_distortion(ext, DiskPoint::from_polar(0.5, t))?;
            Ok(gauge.eval(k).exp() * dt)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(radial * angular.iter().sum::<f64>())
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    /// `(base resolution, p*)` for each refinement of the sweep.
    pub thresholds: Vec<(usize, f64)>,
    /// Largest relative deviation of `p*` from its finest value.
    pub spread: f64,
}

/// Finite/divergent threshold `p*` for `𝒜(t) = pt − p`, located by bisection
/// on `log p` over `[p_lo, p_hi]` at each base resolution.
pub fn exp_threshold(ext: &RadialExtension, base_resolutions: &[usize], p_lo: f64, p_hi: f64) -> Result<ThresholdReport> {
    if !(p_lo > 0.0 && p_hi > p_lo) {
        return domain("threshold bracket needs 0 < p_lo < p_hi");
    }
    let mut thresholds = Vec::new();
    for &n in base_resolutions {
        let diverges = |p: f64| exp_integrability(ext, &Gauge::ExpP { p }, n).map(|r| r.divergent);
        let p_star = if diverges(p_lo)? {
            p_lo
        } else if !diverges(p_hi)? {
            p_hi
        } else {
            let (mut lo, mut hi) = (p_lo.ln(), p_hi.ln());
            while hi - lo > 1e-3 {
                let mid = 0.5 * (lo + hi);
                if diverges(mid.exp())? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            (0.5 * (lo + hi)).exp()
        };
        thresholds.push((n, p_star));
    }
    let last = thresholds.last().map(|t| t.1).unwrap_or(f64::NAN);
    let spread = thresholds.iter().map(|t| (t.1 - last).abs() / last).fold(0.0, f64::max);
    Ok(ThresholdReport { thresholds, spread })
}

#[derive(Debug, Clone, Serialize)]
pub struct DistortionSample {
    pub r: f64,
    pub theta: f64,
    pub k: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistortionField {
    pub samples: Vec<DistortionSample>,
    pub gauge: Option<Gauge>,
}

/// Finite-difference distortion on a midpoint polar grid of any extension.
pub fn distortion_field<E: DiskExtension>(ext: &E, n_r: usize, n_theta: usize) -> DistortionField {
    let h = 1e-6;
    let samples = (0..n_r * n_theta)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n_theta, idx % n_theta);
            let r = (i as f64 + 0.5) / n_r as f64;
            let theta = TAU * (j as f64 + 0.5) / n_theta as f64;
            DistortionSample { r, theta, k: ext.fd_distortion(DiskPoint::from_polar(r, theta), h) }
        })
        .collect();
    DistortionField { samples, gauge: None }
}

/// Beurling–Ahlfors extension, built on the upper half-plane through
/// `θ₁(z) = (z − i)/(z + i)` after rotating so that `G(0) = 0`.
#[derive(Debug, Clone)]
pub struct BeurlingAhlfors {
    g: CircleHomeo,
    shift: f64,
}

pub fn beurling_ahlfors_extend(g: &CircleHomeo) -> BeurlingAhlfors {
    BeurlingAhlfors { g: g.clone(), shift: g.lift(0.0) }
}

fn angle_to_line(t: f64) -> f64 {
    -1.0 / (0.5 * t).tan()
}

fn line_to_angle(x: f64) -> f64 {
    // inverse of x = −cot(t/2) on (0, 2π)
    PI + 2.0 * x.atan()
}

impl BeurlingAhlfors {
    /// Boundary map on the real line.
    fn boundary(&self, x: f64) -> f64 {
        let t = line_to_angle(x);
        angle_to_line((self.g.lift(t) - self.shift).clamp(1e-300, TAU - 1e-15))
    }

    /// The extension on the upper half-plane.
    pub fn half_plane(&self, x: f64, y: f64) -> (f64, f64) {
        if y <= 0.0 {
            return (self.boundary(x), 0.0);
        }
        let tol = 1e-12 * (1.0 + x.abs() + y);
        let a = adaptive_gauss(&|t: f64| self.boundary(x + t * y), 0.0, 1.0, tol);
        let b = adaptive_gauss(&|t: f64| self.boundary(x - t * y), 0.0, 1.0, tol);
        (0.5 * (a + b), a - b)
    }
}

impl DiskExtension for BeurlingAhlfors {
    fn disk(&self, p: DiskPoint) -> DiskPoint {
        let r = p.radius();
        if r >= 1.0 - 1e-15 {
            return DiskPoint::from_polar(r, self.g.lift(p.angle()));
        }
        // z = θ₁⁻¹(w) = i(1 + w)/(1 − w)
        let (wu, wv) = (p.u, p.v);
        let (du, dv) = (1.0 - wu, -wv);
        let den = du * du + dv * dv;
        let (nu, nv) = (1.0 + wu, wv);
        let (qu, qv) = ((nu * du + nv * dv) / den, (nv * du - nu * dv) / den);
        let (x, y) = (-qv, qu);
        let (fu, fv) = self.half_plane(x, y);
        // θ₁(F) = (F − i)/(F + i)
        let (au, av) = (fu, fv - 1.0);
        let (bu, bv) = (fu, fv + 1.0);
        let d = bu * bu + bv * bv;
        let (mu, mv) = ((au * bu + av * bv) / d, (av * bu - au * bv) / d);
        let (c, s) = (self.shift.cos(), self.shift.sin());
        DiskPoint::new(mu * c - mv * s, mu * s + mv * c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pwl() -> CircleHomeo {
        CircleHomeo::pwl(&[(0.0, 0.0), (4.0 * PI / 3.0, 2.0 * PI / 3.0), (TAU, TAU)]).unwrap()
    }

    #[test]
    fn radial_fixes_pole_and_matches_boundary() {
        for g in [CircleHomeo::identity(), CircleHomeo::rotation(0.7), pwl(), CircleHomeo::power(1.0, 2.0).unwrap()] {
            let e = radial_extend(&g);
            assert_eq!(e.disk(DiskPoint::new(0.0, 0.0)).r2(), 0.0);
            assert!(e.boundary_defect(&g, 1000) < 1e-10);
        }
    }

    #[test]
    fn radial_bilip_equals_circle_constant() {
        let g = pwl();
        let e = radial_extend(&g);
        let l = e.bilip_constant(32, 2000, 7);
        assert!((l - 2.0).abs() < 0.06, "{l}");
        assert!((e.bilip_constant(16, 500, 1) - 1.0).abs() > 0.5);
        let rot = radial_extend(&CircleHomeo::rotation(1.1));
        assert!((rot.bilip_constant(16, 500, 1) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn distortion_examples() {
        let id = radial_extend(&CircleHomeo::identity());
        assert_eq!(pointwise_distortion(&id, DiskPoint::from_polar(0.3, 1.0)).unwrap(), 1.0);
        assert_eq!(pointwise_distortion(&id, DiskPoint::new(0.0, 0.0)).unwrap(), 1.0);
        let e = radial_extend(&pwl());
        assert!((pointwise_distortion(&e, DiskPoint::from_polar(0.5, 1.0)).unwrap() - 2.0).abs() < 1e-12);
        assert!((pointwise_distortion(&e, DiskPoint::from_polar(0.5, 5.0)).unwrap() - 2.0).abs() < 1e-12);
        assert!(pointwise_distortion(&e, DiskPoint::from_polar(0.5, 4.0 * PI / 3.0)).is_err());
        assert!(pointwise_distortion(&e, DiskPoint::new(0.0, 0.0)).is_err());
        let p = radial_extend(&CircleHomeo::power(1.0, 2.0).unwrap());
        let ks: Vec<f64> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|d| pointwise_distortion(&p, DiskPoint::from_polar(0.5, TAU - d)).unwrap())
            .collect();
        assert!(ks[0] < ks[1] && ks[1] < ks[2] && ks[2] > 100.0);
    }

    #[test]
    fn distortion_is_radius_independent_and_matches_fd() {
        let e = radial_extend(&CircleHomeo::power(2.0, 3.0).unwrap());
        for t in [0.5, 2.0, 4.0, 5.5] {
            let k = pointwise_distortion(&e, DiskPoint::from_polar(0.2, t)).unwrap();
            for r in [0.2, 0.5, 0.9] {
                let kr = pointwise_distortion(&e, DiskPoint::from_polar(r, t)).unwrap();
                assert!((k - kr).abs() < 1e-12 * k);
                let fd = e.fd_distortion(DiskPoint::from_polar(r, t), 1e-6);
                assert!((fd - k).abs() / k < 1e-3, "{t} {r}: {fd} vs {k}");
            }
        }
    }

    #[test]
    fn gauge_validation() {
        assert_eq!(Gauge::ExpP { p: 1.0 }.validate().unwrap(), 1.0);
        assert!(Gauge::ExpP { p: 0.0 }.validate().is_err());
        assert!(Gauge::Table { points: vec![[1.0, 0.5], [2.0, 1.0]] }.validate().is_err());
        assert!(Gauge::Table { points: vec![[1.0, 0.0], [2.0, -1.0]] }.validate().is_err());
        let t = Gauge::Table { points: vec![[1.0, 0.0], [2.0, 2.0], [3.0, 2.5], [4.0, 4.0]] };
        assert_eq!(t.validate().unwrap(), 2.0);
        assert_eq!(t.eval(5.0), 5.5);
    }

    #[test]
    fn exp_integral_examples() {
        let id = radial_extend(&CircleHomeo::identity());
        let r = exp_integrability(&id, &Gauge::ExpP { p: 1.0 }, 64).unwrap();
        assert!(!r.divergent);
        assert!((r.value.unwrap() - TAU).abs() < 1e-4);
        let e = radial_extend(&pwl());
        let r = exp_integrability(&e, &Gauge::ExpP { p: 2.0 }, 16).unwrap();
        assert!(!r.divergent);
        let exact = TAU * 2f64.exp();
        assert!((r.value.unwrap() - exact).abs() / exact < 1e-3);
        let p = radial_extend(&CircleHomeo::power(1.0, 2.0).unwrap());
        assert!(exp_integrability(&p, &Gauge::ExpP { p: 5.0 }, 16).unwrap().divergent);
        assert!(exp_integrability(&id, &Gauge::ExpP { p: -1.0 }, 16).is_err());
    }

    #[test]
    fn beurling_ahlfors_examples() {
        let id = beurling_ahlfors_extend(&CircleHomeo::identity());
        for (r, t) in [(0.3, 1.0), (0.8, 4.0), (0.0, 0.0), (0.95, 2.5)] {
            let p = DiskPoint::from_polar(r, t);
            let q = id.disk(p);
            assert!((q.u - p.u).hypot(q.v - p.v) < 1e-10, "{r} {t}");
        }
        let rot = beurling_ahlfors_extend(&CircleHomeo::rotation(0.4));
        let q = rot.disk(DiskPoint::from_polar(0.5, 1.0));
        assert!((q.angle() - 1.4).abs() < 1e-9 && (q.radius() - 0.5).abs() < 1e-9);
        assert!((rot.fd_distortion(DiskPoint::from_polar(0.5, 1.0), 1e-6) - 1.0).abs() < 1e-4);
        let g = pwl();
        let ba = beurling_ahlfors_extend(&g);
        assert!(ba.boundary_defect(&g, 500) < 1e-8);
        let field = distortion_field(&ba, 8, 32);
        let kmax = field.samples.iter().map(|s| s.k).fold(0.0, f64::max);
        assert!(kmax.is_finite() && kmax < 10.0, "{kmax}");
        assert!(field.samples.iter().all(|s| s.k >= 1.0 - 1e-6));
    }
}
