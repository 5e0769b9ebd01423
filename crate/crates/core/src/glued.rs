//! The glued space: two closed hemispheres identified along the equator by
//! `g`, with a south seam point at angle `w` glued to the north seam point at
//! angle `G(w)`.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::error::{domain, Result};
use crate::homeo::{CircleHomeo, DEFAULT_TABLE_SIZE};
use crate::numeric::{arc_distance, bisect_predicate, golden_min};
use crate::sphere::{sigma_unchecked, Hemisphere, SpherePoint};

/// Default number of seam samples for [`GluedMetric::glued_distance`].
pub const DEFAULT_SEAM_SAMPLES: usize = 1024;

const SEAM_TOL: f64 = 1e-15;

/// A point of the glued space. Seam points are always stored as south points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GluedPoint {
    pub tag: Hemisphere,
    pub position: SpherePoint,
    /// South seam angle when the point lies on the seam.
    pub seam: Option<f64>,
}

impl GluedPoint {
    /// South seam point at angle `theta`.
    pub fn seam(theta: f64) -> Self {
        let t = crate::numeric::wrap_angle(theta);
        Self { tag: Hemisphere::South, position: SpherePoint::equator(t), seam: Some(t) }
    }

    pub fn is_seam(&self) -> bool {
        self.seam.is_some()
    }

    /// Whether the point lies in the open hemisphere `tag`.
    pub fn in_open(&self, tag: Hemisphere) -> bool {
        self.seam.is_none() && self.tag == tag
    }
}

#[derive(Debug)]
struct Sampling {
    w: Vec<f64>,
    south: Vec<SpherePoint>,
    north: Vec<SpherePoint>,
    prefix: Vec<f64>,
}

/// `Z̃` for a fixed gluing map: seam-measure tables and distance evaluators.
#[derive(Debug)]
pub struct GluedMetric {
    g: CircleHomeo,
    /// `prefix[i] = ∫_0^{2πi/n} min{1, v_g}`.
    prefix: Vec<f64>,
    samplings: RwLock<HashMap<usize, Arc<Sampling>>>,
}

impl Clone for GluedMetric {
    fn clone(&self) -> Self {
        Self { g: self.g.clone(), prefix: self.prefix.clone(), samplings: RwLock::new(HashMap::new()) }
    }
}

/// Which way a seam stretch runs relative to increasing angle.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Dir {
    Here,
    Forward,
    Backward,
}

impl GluedMetric {
    pub fn new(g: CircleHomeo) -> Self {
        Self::with_table(g, DEFAULT_TABLE_SIZE)
    }

    /// Builds the cumulative seam table with `n` cells; cell integrals are
    /// exact for the built-in families.
    pub fn with_table(g: CircleHomeo, n: usize) -> Self {
        let n = n.max(16);
        let mut prefix = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for i in 0..n {
            let a = TAU * i as f64 / n as f64;
            let b = TAU * (i + 1) as f64 / n as f64;
            acc += g.capped_integral(a, b);
            prefix.push(acc);
        }
        Self { g, prefix, samplings: RwLock::new(HashMap::new()) }
    }

    pub fn homeo(&self) -> &CircleHomeo {
        &self.g
    }

    pub fn prefix_table(&self) -> &[f64] {
        &self.prefix
    }

    /// `H¹` of the whole seam image.
    pub fn total_seam_measure(&self) -> f64 {
        self.prefix[self.prefix.len() - 1]
    }

    /// Cumulative seam measure `P(θ) = ∫_0^θ min{1, v_g}` on the lift.
    pub fn cumulative(&self, theta: f64) -> f64 {
        let n = self.prefix.len() - 1;
        let k = (theta / TAU).floor();
        let t = theta - k * TAU;
        let x = t / TAU * n as f64;
        let i = (x.floor() as usize).min(n - 1);
        let a = TAU * i as f64 / n as f64;
        k * self.total_seam_measure() + self.prefix[i] + self.g.capped_integral(a, t)
    }

    /// Seam distance: the smaller of the two arc integrals of `min{1, v_g}`.
    pub fn seam_distance(&self, t1: f64, t2: f64) -> f64 {
        let t2 = t1 + (t2 - t1).rem_euclid(TAU);
        let one = (self.cumulative(t2) - self.cumulative(t1)).max(0.0);
        let other = (self.total_seam_measure() - one).max(0.0);
        one.min(other)
    }

    /// Canonical glued point from a hemisphere tag and a position in that
    /// closed hemisphere. North equator points are mapped back through `G⁻¹`.
    pub fn point(&self, tag: Hemisphere, p: SpherePoint) -> Result<GluedPoint> {
        let inside = match tag {
            Hemisphere::South => p.z <= 1e-12,
            Hemisphere::North => p.z >= -1e-12,
        };
        if !inside {
            return domain(format!("point {p:?} is not in the closed {tag:?} hemisphere"));
        }
        if p.z.abs() <= SEAM_TOL {
            let lon = p.longitude();
            let w = match tag {
                Hemisphere::South => lon,
                Hemisphere::North => self.g.inverse_lift(lon),
            };
            return Ok(GluedPoint::seam(w));
        }
        Ok(GluedPoint { tag, position: p, seam: None })
    }

    /// Position of a glued point in the chart of hemisphere `tag`, if it
    /// belongs to that closed hemisphere.
    pub fn position_in(&self, a: &GluedPoint, tag: Hemisphere) -> Option<SpherePoint> {
        match (a.seam, tag) {
            (Some(w), Hemisphere::South) => Some(SpherePoint::equator(w)),
            (Some(w), Hemisphere::North) => Some(SpherePoint::equator(self.g.lift(w))),
            (None, t) if t == a.tag => Some(a.position),
            _ => None,
        }
    }

    /// The three-case predistance `D`.
    pub fn predistance(&self, a: &GluedPoint, b: &GluedPoint) -> f64 {
        if let (Some(x), Some(y)) = (a.seam, b.seam) {
            let gx = self.g.lift(x);
            let gy = self.g.lift(y);
            return arc_distance(x, y).min(arc_distance(gx, gy));
        }
        for tag in [Hemisphere::South, Hemisphere::North] {
            if let (Some(p), Some(q)) = (self.position_in(a, tag), self.position_in(b, tag)) {
                return sigma_unchecked(&p, &q);
            }
        }
        f64::INFINITY
    }

    fn sampling(&self, n: usize) -> Arc<Sampling> {
        if let Some(s) = self.samplings.read().expect("sampling cache").get(&n) {
            return s.clone();
        }
        let w: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
        let south = w.iter().map(|&t| SpherePoint::equator(t)).collect();
        let north = w.iter().map(|&t| SpherePoint::equator(self.g.lift(t))).collect();
        let prefix = w.iter().map(|&t| self.cumulative(t)).collect();
        let s = Arc::new(Sampling { w, south, north, prefix });
        self.samplings.write().expect("sampling cache").insert(n, s.clone());
        s
    }

    /// Cost of reaching the seam point `w` from `a` without using the seam:
    /// `σ` in the hemisphere of `a`, or the seam distance when `a` is on the seam.
    fn approach(&self, a: &GluedPoint, w: f64) -> f64 {
        match a.seam {
            Some(x) => self.seam_distance(x, w),
            None => match a.tag {
                Hemisphere::South => sigma_unchecked(&a.position, &SpherePoint::equator(w)),
                Hemisphere::North => sigma_unchecked(&a.position, &SpherePoint::equator(self.g.lift(w))),
            },
        }
    }

    fn approach_samples(&self, a: &GluedPoint, s: &Sampling) -> Vec<f64> {
        match a.seam {
            Some(x) => s.w.iter().map(|&w| self.seam_distance(x, w)).collect(),
            None => {
                let pts = match a.tag {
                    Hemisphere::South => &s.south,
                    Hemisphere::North => &s.north,
                };
                pts.iter().map(|p| sigma_unchecked(&a.position, p)).collect()
            }
        }
    }

    /// Glued distance `d_Z(a, b)` using `seam_samples` seam samples per sweep.
    pub fn glued_distance(&self, a: &GluedPoint, b: &GluedPoint, seam_samples: usize) -> Result<f64> {
        if seam_samples < 16 {
            return domain(format!("seam_samples must be >= 16, got {seam_samples}"));
        }
        if let (Some(x), Some(y)) = (a.seam, b.seam) {
            return Ok(self.seam_distance(x, y));
        }
        if a.seam.is_some() {
            return Ok(self.distance_from_seam(a.seam.unwrap(), b, seam_samples));
        }
        if b.seam.is_some() {
            return Ok(self.distance_from_seam(b.seam.unwrap(), a, seam_samples));
        }
        let d1 = self.chain_distance(a, b, seam_samples);
        let d2 = self.chain_distance(b, a, seam_samples);
        let direct = self.predistance(a, b);
        Ok(d1.min(d2).min(direct))
    }

    /// `min_{w,w′} σ(a,w) + d(w,w′) + σ(w′,b)` by cyclic sweeps plus refinement.
    fn chain_distance(&self, a: &GluedPoint, b: &GluedPoint, n: usize) -> f64 {
        let s = self.sampling(n);
        let av = self.approach_samples(a, &s);
        let bv = self.approach_samples(b, &s);
        let total = self.total_seam_measure();
        let step = |j: usize| -> f64 {
            // seam measure of cell [w_j, w_{j+1}]
            if j + 1 < n {
                s.prefix[j + 1] - s.prefix[j]
            } else {
                total - s.prefix[j]
            }
        };
        let mut dist = av.clone();
        let mut src: Vec<(usize, Dir)> = (0..n).map(|j| (j, Dir::Here)).collect();
        for pass in 0..2 * n {
            let j = (pass + 1) % n;
            let i = pass % n;
            let cand = dist[i] + step(i);
            if cand < dist[j] {
                dist[j] = cand;
                src[j] = (src[i].0, Dir::Forward);
            }
        }
        for pass in 0..2 * n {
            let i = (2 * n - pass) % n;
            let j = (i + n - 1) % n;
            let cand = dist[i] + step(j);
            if cand < dist[j] {
                dist[j] = cand;
                src[j] = (src[i].0, Dir::Backward);
            }
        }
        let tot: Vec<f64> = (0..n).map(|j| dist[j] + bv[j]).collect();
        let mut minima: Vec<usize> = (0..n).filter(|&j| tot[j] <= tot[(j + n - 1) % n] && tot[j] <= tot[(j + 1) % n]).collect();
        minima.sort_by(|&x, &y| tot[x].total_cmp(&tot[y]));
        minima.truncate(6);
        let h = TAU / n as f64;
        let mut best = f64::INFINITY;
        for &j in &minima {
            let (k, dir) = src[j];
            let v = match dir {
                Dir::Here => {
                    let w0 = s.w[j];
                    golden_min(|w| self.approach(a, w) + self.approach(b, w), w0 - h, w0 + h, 1e-12).1
                }
                Dir::Forward | Dir::Backward => {
                    let sign = if dir == Dir::Forward { 1.0 } else { -1.0 };
                    let wk = s.w[k];
                    let mut wj = s.w[j];
                    // unwrap w_j so the stretch runs in direction `dir` from w_k
                    if sign > 0.0 && wj < wk {
                        wj += TAU;
                    }
                    if sign < 0.0 && wj > wk {
                        wj -= TAU;
                    }
                    let (x, _) = golden_min(|w| self.approach(a, w) - sign * self.cumulative(w), wk - h, wk + h, 1e-12);
                    let (y, _) = golden_min(|w| self.approach(b, w) + sign * self.cumulative(w), wj - h, wj + h, 1e-12);
                    let stretch = (sign * (self.cumulative(y) - self.cumulative(x))).max(0.0);
                    let run = stretch.min(self.seam_distance(x, y));
                    self.approach(a, x) + run + self.approach(b, y)
                }
            };
            best = best.min(v).min(tot[j]);
        }
        best
    }

    /// `d_Z(θ₀, p)` for a seam point `θ₀`: `min_w d(θ₀, w) + σ(w, p)`.
    pub fn distance_from_seam(&self, theta0: f64, p: &GluedPoint, seam_samples: usize) -> f64 {
        if let Some(x) = p.seam {
            return self.seam_distance(theta0, x);
        }
        let n = seam_samples.max(16);
        let s = self.sampling(n);
        let bv = self.approach_samples(p, &s);
        let tot: Vec<f64> = (0..n).map(|j| self.seam_distance(theta0, s.w[j]) + bv[j]).collect();
        let h = TAU / n as f64;
        let f = |w: f64| self.seam_distance(theta0, w) + self.approach(p, w);
        let mut best = f(theta0);
        let (lo, hi) = (theta0 - h, theta0 + h);
        best = best.min(golden_min(f, lo, theta0, 1e-13).1).min(golden_min(f, theta0, hi, 1e-13).1);
        let mut minima: Vec<usize> = (0..n).filter(|&j| tot[j] <= tot[(j + n - 1) % n] && tot[j] <= tot[(j + 1) % n]).collect();
        minima.sort_by(|&x, &y| tot[x].total_cmp(&tot[y]));
        minima.truncate(4);
        for j in minima {
            best = best.min(golden_min(f, s.w[j] - h, s.w[j] + h, 1e-13).1).min(tot[j]);
        }
        best
    }

    /// Seam arc `[lo, hi]` (south angles on the lift) of points within seam
    /// distance `r` of `θ₀`, or `None` when it wraps the whole seam.
    pub fn seam_window(&self, theta0: f64, r: f64) -> Option<(f64, f64)> {
        let total = self.total_seam_measure();
        if 2.0 * r >= total {
            return None;
        }
        let p0 = self.cumulative(theta0);
        let hi = bisect_predicate(|t| self.cumulative(t) - p0 > r, theta0, theta0 + TAU, 1e-14);
        let lo = -bisect_predicate(|t| p0 - self.cumulative(-t) > r, -theta0, -theta0 + TAU, 1e-14);
        Some((lo, hi))
    }

    /// Membership-grade distance from `θ₀` restricted to seam points of the
    /// window `[lo, hi]`, sampled with `m` points plus refinement.
    pub fn windowed_distance_from_seam(&self, theta0: f64, p: &GluedPoint, window: (f64, f64), m: usize) -> f64 {
        if let Some(x) = p.seam {
            return self.seam_distance(theta0, x);
        }
        let (lo, hi) = window;
        let f = |w: f64| self.seam_distance(theta0, w) + self.approach(p, w);
        let m = m.max(8);
        let h = (hi - lo) / m as f64;
        let vals: Vec<f64> = (0..=m).map(|i| f(lo + h * i as f64)).collect();
        let mut best = f(theta0).min(vals.iter().cloned().fold(f64::INFINITY, f64::min));
        let t0 = theta0.clamp(lo, hi);
        best = best.min(golden_min(f, (t0 - h).max(lo), t0, 1e-14).1).min(golden_min(f, t0, (t0 + h).min(hi), 1e-14).1);
        let mut idx: Vec<usize> = (0..=m)
            .filter(|&i| (i == 0 || vals[i] <= vals[i - 1]) && (i == m || vals[i] <= vals[i + 1]))
            .collect();
        idx.sort_by(|&x, &y| vals[x].total_cmp(&vals[y]));
        idx.truncate(3);
        for i in idx {
            let c = lo + h * i as f64;
            best = best.min(golden_min(f, (c - h).max(lo), (c + h).min(hi), 1e-14).1);
        }
        best
    }

    /// Maximal seam arcs with zero seam measure, detected on a grid of
    /// `resolution` cells with endpoints refined by bisection. A fully
    /// collapsed seam is one class `[0, 2π]`.
    pub fn quotient_classes(&self, resolution: usize) -> Vec<(f64, f64)> {
        let n = resolution.max(4);
        let h = TAU / n as f64;
        let p: Vec<f64> = (0..=n).map(|i| self.cumulative(h * i as f64)).collect();
        let flat: Vec<bool> = (0..n).map(|i| p[i + 1] - p[i] <= 1e-9 * h).collect();
        if flat.iter().all(|&f| f) {
            return vec![(0.0, TAU)];
        }
        // start scanning just after a non-flat cell so runs do not wrap mid-scan
        let start = (0..n).find(|&i| !flat[i]).expect("some cell is not flat") + 1;
        let mut out = Vec::new();
        let mut i = 0;
        while i < n {
            let c = (start + i) % n;
            if !flat[c] {
                i += 1;
                continue;
            }
            let first = start + i;
            let mut last = first;
            while last + 1 < start + n && flat[(last + 1) % n] {
                last += 1;
            }
            let a = h * first as f64;
            let b = h * (last + 1) as f64;
            let pa = self.cumulative(a);
            let pb = self.cumulative(b);
            let left = bisect_predicate(|x| pa - self.cumulative(x) <= 1e-12, a - h, a, 1e-13);
            let right = -bisect_predicate(|x| self.cumulative(-x) - pb <= 1e-12, -(b + h), -b, 1e-13);
            let shift = ((left + 1e-9) / TAU).floor() * TAU;
            out.push((left - shift, right - shift));
            i = last + 1 - start + 1;
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::sigma;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_glued(rng: &mut ChaCha8Rng, m: &GluedMetric) -> GluedPoint {
        let lon = rng.gen_range(0.0..TAU);
        let lat = rng.gen_range(-1.0f64..1.0).asin();
        let p = SpherePoint::from_lon_lat(lon, lat);
        let tag = if p.z <= 0.0 { Hemisphere::South } else { Hemisphere::North };
        m.point(tag, p).unwrap()
    }

    #[test]
    fn predistance_cases() {
        let m = GluedMetric::new(CircleHomeo::power(2.0, 2.0).unwrap());
        let s = m.point(Hemisphere::South, SpherePoint::new(0.0, 0.0, -1.0).unwrap()).unwrap();
        let n = m.point(Hemisphere::North, SpherePoint::new(0.0, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!(m.predistance(&s, &s), 0.0);
        assert_eq!(m.predistance(&s, &n), f64::INFINITY);
        let id = GluedMetric::new(CircleHomeo::identity());
        let (x, y) = (GluedPoint::seam(0.3), GluedPoint::seam(2.0));
        assert!((id.predistance(&x, &y) - 1.7).abs() < 1e-15);
        // seam point against a north point uses north coordinates G(w)
        let w = GluedPoint::seam(1.0);
        let q = SpherePoint::equator(m.homeo().lift(1.0));
        assert!((m.predistance(&w, &n) - sigma(&q, &n.position).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn north_equator_points_are_canonicalised() {
        let m = GluedMetric::new(CircleHomeo::power(2.0, 2.0).unwrap());
        let p = m.point(Hemisphere::North, SpherePoint::equator(1.0)).unwrap();
        assert!(p.is_seam());
        assert!((m.homeo().lift(p.seam.unwrap()) - 1.0).abs() < 1e-10);
        assert!(m.point(Hemisphere::North, SpherePoint::new(0.0, 0.0, -1.0).unwrap()).is_err());
    }

    #[test]
    fn seam_distance_examples() {
        let id = GluedMetric::new(CircleHomeo::identity());
        assert!((id.seam_distance(0.0, PI) - PI).abs() < 1e-12);
        let patch = GluedMetric::new(CircleHomeo::patch(0.5, 1.0, 0.8).unwrap());
        assert!((patch.seam_distance(0.8, 1.2) - 0.2).abs() < 1e-12);
        let sing = GluedMetric::new(CircleHomeo::fully_singular(0.3).unwrap());
        assert_eq!(sing.seam_distance(0.1, 4.0), 0.0);
    }

    #[test]
    fn identity_gluing_recovers_the_round_sphere() {
        let m = GluedMetric::new(CircleHomeo::identity());
        let s = m.point(Hemisphere::South, SpherePoint::new(0.0, 0.0, -1.0).unwrap()).unwrap();
        let n = m.point(Hemisphere::North, SpherePoint::new(0.0, 0.0, 1.0).unwrap()).unwrap();
        assert!((m.glued_distance(&s, &n, 64).unwrap() - PI).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (a, b) = (random_glued(&mut rng, &m), random_glued(&mut rng, &m));
            let d = m.glued_distance(&a, &b, 256).unwrap();
            let exact = sigma_unchecked(&a.position, &b.position);
            assert!((d - exact).abs() < 1e-6, "{d} vs {exact}");
        }
    }

    #[test]
    fn glued_distance_is_symmetric_and_one_lipschitz() {
        let m = GluedMetric::new(CircleHomeo::power(2.0, 2.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let (a, b) = (random_glued(&mut rng, &m), random_glued(&mut rng, &m));
            let ab = m.glued_distance(&a, &b, 256).unwrap();
            let ba = m.glued_distance(&b, &a, 256).unwrap();
            assert!((ab - ba).abs() < 1e-9);
            assert!(ab <= m.predistance(&a, &b) + 1e-12);
        }
    }

    #[test]
    fn seam_distance_is_capped_by_both_arcs() {
        let m = GluedMetric::new(CircleHomeo::power(1.0, 2.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let (x, y) = (rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU));
            let d = m.seam_distance(x, y);
            let g = m.homeo();
            assert!(d <= arc_distance(x, y) + 1e-9);
            assert!(d <= arc_distance(g.lift(x), g.lift(y)) + 1e-9);
        }
    }

    #[test]
    fn quotient_classes_examples() {
        assert!(GluedMetric::new(CircleHomeo::identity()).quotient_classes(1024).is_empty());
        let sing = GluedMetric::new(CircleHomeo::fully_singular(0.3).unwrap());
        assert_eq!(sing.quotient_classes(256), vec![(0.0, TAU)]);
        let g = CircleHomeo::cantor(0.5, 4).unwrap();
        let m = GluedMetric::new(g);
        let classes = m.quotient_classes(4096);
        let e = crate::homeo::FatCantor::new(0.5, 4).unwrap();
        assert_eq!(classes.len(), e.intervals.len());
        for (c, &(a, b)) in classes.iter().zip(&e.intervals) {
            assert!((c.0 - PI * a).abs() < 1e-9 && (c.1 - PI * b).abs() < 1e-9, "{c:?} vs {:?}", (PI * a, PI * b));
        }
    }

    #[test]
    fn seam_window_brackets_the_ball() {
        let m = GluedMetric::new(CircleHomeo::patch(0.5, 1.0, 0.8).unwrap());
        let (lo, hi) = m.seam_window(1.0, 0.1).unwrap();
        assert!((lo - 0.8).abs() < 1e-9 && (hi - 1.2).abs() < 1e-9);
    }
}
