//! Points on the unit sphere, the length distance σ, stereographic charts of
//! the two closed hemispheres, and polar-grid meshes over those charts.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mesh::WeightedMesh;

const UNIT_TOL: f64 = 1e-12;

/// Which closed hemisphere a point or chart belongs to. The south
/// hemisphere is `z ≤ 0`, the north hemisphere `z ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hemisphere {
    South,
    North,
}

impl Hemisphere {
    pub fn other(self) -> Self {
        match self {
            Hemisphere::South => Hemisphere::North,
            Hemisphere::North => Hemisphere::South,
        }
    }
}

/// A unit vector in ℝ³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SpherePoint {
    /// Validated constructor; the norm must be 1 within 1e-12.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let n2 = x * x + y * y + z * z;
        if !n2.is_finite() || (n2 - 1.0).abs() > 2.0 * UNIT_TOL {
            return domain(format!("({x}, {y}, {z}) is not a unit vector"));
        }
        Ok(Self { x, y, z })
    }

    /// Normalises an arbitrary nonzero vector.
    pub fn normalized(x: f64, y: f64, z: f64) -> Self {
        let n = (x * x + y * y + z * z).sqrt();
        Self { x: x / n, y: y / n, z: z / n }
    }

    /// Point at longitude `lon` and latitude `lat` (radians).
    pub fn from_lon_lat(lon: f64, lat: f64) -> Self {
        let c = lat.cos();
        Self { x: c * lon.cos(), y: c * lon.sin(), z: lat.sin() }
    }

    /// Equator point at angle `theta`.
    pub fn equator(theta: f64) -> Self {
        Self { x: theta.cos(), y: theta.sin(), z: 0.0 }
    }

    pub fn longitude(&self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn latitude(&self) -> f64 {
        self.z.clamp(-1.0, 1.0).asin()
    }

    pub fn dot(&self, o: &SpherePoint) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn chord(&self, o: &SpherePoint) -> f64 {
        ((self.x - o.x).powi(2) + (self.y - o.y).powi(2) + (self.z - o.z).powi(2)).sqrt()
    }

    fn norm_defect(&self) -> f64 {
        (self.dot(self) - 1.0).abs()
    }

    /// Distance to the equator along a meridian.
    pub fn distance_to_equator(&self) -> f64 {
        self.latitude().abs()
    }

    pub fn mirrored(&self) -> Self {
        Self { x: self.x, y: self.y, z: -self.z }
    }
}

/// A point of the stereographic plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint {
    pub u: f64,
    pub v: f64,
}

impl DiskPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self { u: r * theta.cos(), v: r * theta.sin() }
    }

    pub fn r2(&self) -> f64 {
        self.u * self.u + self.v * self.v
    }

    pub fn radius(&self) -> f64 {
        self.r2().sqrt()
    }

    pub fn angle(&self) -> f64 {
        self.v.atan2(self.u)
    }
}

/// Length distance σ on S², i.e. the great-circle angle between two unit vectors.
pub fn sigma(a: &SpherePoint, b: &SpherePoint) -> Result<f64> {
    if a.norm_defect() > 2.0 * UNIT_TOL || b.norm_defect() > 2.0 * UNIT_TOL {
        return domain("sigma expects unit vectors");
    }
    Ok(sigma_unchecked(a, b))
}

/// σ without the unit-norm check, for hot loops over already validated points.
///
/// Uses `atan2(|a×b|, a·b)` which agrees with the clamped arccos and keeps
/// full precision for nearly coincident or antipodal pairs.
#[inline]
pub fn sigma_unchecked(a: &SpherePoint, b: &SpherePoint) -> f64 {
    let cx = a.y * b.z - a.z * b.y;
    let cy = a.z * b.x - a.x * b.z;
    let cz = a.x * b.y - a.y * b.x;
    let cross = (cx * cx + cy * cy + cz * cz).sqrt();
    cross.atan2(a.dot(b)).clamp(0.0, PI)
}

/// Inverse stereographic projection onto the sphere: the origin goes to the
/// north pole and the unit circle to the equator.
pub fn stereo_inv(p: DiskPoint) -> SpherePoint {
    let r2 = p.r2();
    let d = 1.0 + r2;
    SpherePoint { x: 2.0 * p.u / d, y: 2.0 * p.v / d, z: (1.0 - r2) / d }
}

/// Stereographic projection from the south pole.
pub fn stereo(p: SpherePoint) -> Result<DiskPoint> {
    let d = 1.0 + p.z;
    if d <= 1e-15 {
        return Err(Error::Pole);
    }
    Ok(DiskPoint { u: p.x / d, v: p.y / d })
}

/// Area density `4/(1+r²)²` of the round metric in stereographic coordinates.
pub fn conformal_factor(p: DiskPoint) -> f64 {
    let d = 1.0 + p.r2();
    4.0 / (d * d)
}

/// Chart of a closed hemisphere onto the closed unit disk. The north chart is
/// [`stereo`]; the south chart is its mirror image through the equator plane,
/// so in both charts the equator point at angle θ sits at `e^{iθ}`.
pub fn chart(tag: Hemisphere, p: SpherePoint) -> Result<DiskPoint> {
    match tag {
        Hemisphere::North => stereo(p),
        Hemisphere::South => stereo(p.mirrored()),
    }
}

/// Inverse of [`chart`].
pub fn chart_inv(tag: Hemisphere, p: DiskPoint) -> SpherePoint {
    let s = stereo_inv(p);
    match tag {
        Hemisphere::North => s,
        Hemisphere::South => s.mirrored(),
    }
}

/// Chart radius of the circle at geodesic distance `colat` from the chart centre.
pub fn chart_radius(colat: f64) -> f64 {
    (0.5 * colat).tan()
}

/// A weighted mesh on the chart of one closed hemisphere.
#[derive(Debug, Clone)]
pub struct HemispherePatch {
    pub tag: Hemisphere,
    pub mesh: WeightedMesh,
    pub resolution: usize,
    /// Equator vertices in increasing angular order.
    pub equator: Vec<usize>,
}

impl HemispherePatch {
    pub fn total_area(&self) -> f64 {
        self.mesh.total_area()
    }

    pub fn sphere_point(&self, v: usize) -> SpherePoint {
        let [u, w] = self.mesh.vertices[v];
        chart_inv(self.tag, DiskPoint::new(u, w))
    }
}

/// Regular polar grid on the stereographic chart of a hemisphere: `resolution`
/// rings equally spaced in colatitude and `4·resolution` sectors. Edge lengths
/// and face areas carry the conformal factor.
pub fn build_hemisphere_mesh(tag: Hemisphere, resolution: usize) -> Result<HemispherePatch> {
    if resolution < 4 {
        return Err(Error::Config(format!("hemisphere mesh resolution must be >= 4, got {resolution}")));
    }
    let rings: Vec<f64> = (1..=resolution)
        .map(|j| chart_radius(0.5 * PI * j as f64 / resolution as f64))
        .collect();
    let sectors: Vec<f64> = (0..4 * resolution).map(|s| TAU * s as f64 / (4 * resolution) as f64).collect();
    let grid = crate::mesh::PolarGrid::new(rings, sectors)?;
    let mesh = grid.to_mesh(|p| conformal_factor(DiskPoint::new(p[0], p[1])));
    let equator = grid.ring_vertices(grid.rings.len() - 1);
    Ok(HemispherePatch { tag, mesh, resolution, equator })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng) -> SpherePoint {
        loop {
            let (x, y, z): (f64, f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let n = x * x + y * y + z * z;
            if n > 1e-3 && n <= 1.0 {
                return SpherePoint::normalized(x, y, z);
            }
        }
    }

    #[test]
    fn sigma_examples() {
        let e1 = SpherePoint::new(1.0, 0.0, 0.0).unwrap();
        let e2 = SpherePoint::new(0.0, 1.0, 0.0).unwrap();
        let m1 = SpherePoint::new(-1.0, 0.0, 0.0).unwrap();
        assert_eq!(sigma(&e1, &e1).unwrap(), 0.0);
        assert!((sigma(&e1, &m1).unwrap() - PI).abs() < 1e-15);
        assert!((sigma(&e1, &e2).unwrap() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn sigma_rejects_non_unit() {
        let bad = SpherePoint { x: 1.1, y: 0.0, z: 0.0 };
        let e1 = SpherePoint::equator(0.0);
        assert!(matches!(sigma(&bad, &e1), Err(Error::Domain(_))));
        assert!(SpherePoint::new(0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn stereo_examples() {
        let n = stereo_inv(DiskPoint::new(0.0, 0.0));
        assert_eq!((n.x, n.y, n.z), (0.0, 0.0, 1.0));
        let e = stereo_inv(DiskPoint::new(1.0, 0.0));
        assert!((e.x - 1.0).abs() < 1e-15 && e.z.abs() < 1e-15);
        let p = stereo_inv(DiskPoint::new(0.5, 0.0));
        assert!((p.x - 0.8).abs() < 1e-15 && (p.z - 0.6).abs() < 1e-15);

        let q = stereo(SpherePoint::new(0.8, 0.0, 0.6).unwrap()).unwrap();
        assert!((q.u - 0.5).abs() < 1e-15 && q.v.abs() < 1e-15);
        let o = stereo(SpherePoint::new(0.0, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!((o.u, o.v), (0.0, 0.0));
        let one = stereo(SpherePoint::equator(0.0)).unwrap();
        assert!((one.u - 1.0).abs() < 1e-15);
        assert_eq!(stereo(SpherePoint::new(0.0, 0.0, -1.0).unwrap()), Err(Error::Pole));
    }

    #[test]
    fn conformal_factor_examples() {
        assert_eq!(conformal_factor(DiskPoint::new(0.0, 0.0)), 4.0);
        assert_eq!(conformal_factor(DiskPoint::new(1.0, 0.0)), 1.0);
        assert!((conformal_factor(DiskPoint::new(0.5, 0.0)) - 2.56).abs() < 1e-14);
    }

    #[test]
    fn sigma_is_a_metric_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let (a, b, c) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
            let ab = sigma_unchecked(&a, &b);
            assert_eq!(ab, sigma_unchecked(&b, &a));
            assert!(sigma_unchecked(&a, &c) <= ab + sigma_unchecked(&b, &c) + 1e-12);
            let chord = a.chord(&b);
            assert!(chord <= ab + 1e-15 && ab <= PI / 2.0 * chord + 1e-15);
        }
    }

    #[test]
    fn stereo_round_trip_on_ten_thousand_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let p = DiskPoint::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let q = stereo(stereo_inv(p)).unwrap();
            worst = worst.max((q.u - p.u).abs().max((q.v - p.v).abs()));
        }
        assert!(worst < 1e-10, "round trip error {worst}");
    }

    #[test]
    fn charts_agree_on_the_equator() {
        for k in 0..16 {
            let t = TAU * k as f64 / 16.0;
            let e = SpherePoint::equator(t);
            let s = chart(Hemisphere::South, e).unwrap();
            let n = chart(Hemisphere::North, e).unwrap();
            assert!((s.u - n.u).abs() < 1e-15 && (s.v - n.v).abs() < 1e-15);
            assert!((s.angle() - t).sin().abs() < 1e-14);
        }
        let sp = chart_inv(Hemisphere::South, DiskPoint::new(0.0, 0.0));
        assert_eq!(sp.z, -1.0);
    }

    #[test]
    fn hemisphere_mesh_structure_and_area() {
        let north = build_hemisphere_mesh(Hemisphere::North, 8).unwrap();
        assert!(north.equator.len() >= 8);
        for w in north.equator.windows(2) {
            let a = north.sphere_point(w[0]).longitude().rem_euclid(TAU);
            let b = north.sphere_point(w[1]).longitude().rem_euclid(TAU);
            assert!(b > a);
        }
        for v in 0..north.mesh.vertices.len() {
            assert!(north.sphere_point(v).z >= -1e-15);
        }
        assert!(matches!(build_hemisphere_mesh(Hemisphere::North, 3), Err(Error::Config(_))));

        let south = build_hemisphere_mesh(Hemisphere::South, 16).unwrap();
        let north16 = build_hemisphere_mesh(Hemisphere::North, 16).unwrap();
        assert!((south.total_area() - north16.total_area()).abs() < 1e-6);
        for v in 0..south.mesh.vertices.len() {
            assert!(south.sphere_point(v).z <= 1e-15);
        }
    }

    #[test]
    fn hemisphere_area_converges_at_least_first_order() {
        let errs: Vec<f64> = [8usize, 16, 32, 64]
            .iter()
            .map(|&n| (build_hemisphere_mesh(Hemisphere::North, n).unwrap().total_area() - TAU).abs())
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] <= 0.5 * w[0], "errors {errs:?}");
        }
        assert!(errs[3] < 1e-2);
    }
}
