//! Mesh builders for the positive-capacity experiments: the collapsed plane
//! over a fat Cantor set and the glued two-hemisphere sphere.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use super::{solve_modulus, ModulusProblem};
use crate::error::{domain, Result};
use crate::glued::{GluedMetric, GluedPoint};
use crate::homeo::FatCantor;
use crate::mesh::{tensor_grid, WeightedMesh};
use crate::sphere::{sigma_unchecked, Hemisphere, SpherePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollapseMode {
    /// Edges of the bottom side lying in `E × {y₀}` get length 0.
    BottomEdge,
    /// Faces over `E × [y₀, y₁]` get area 0 and their edges length 0.
    VerticalStrips,
}

fn merged_nodes(mut xs: Vec<f64>, tol: f64) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(xs.len());
    for x in xs {
        match out.last() {
            Some(&l) if x - l <= tol => {}
            _ => out.push(x),
        }
    }
    out
}

/// Grid on `[x₀,x₁] × [y₀,y₁]` with `E ⊂ [0,1]` collapsed according to
/// `mode`. Grid lines pass through every endpoint of `E`. Markers: `xi1..xi4`
/// as for [`tensor_grid`], plus `f1` and `f2`, the bottom vertices over the
/// first and the last interval of `E`.
pub fn collapsed_plane_mesh(set: &FatCantor, bounds: [f64; 4], nx: usize, ny: usize, mode: CollapseMode) -> Result<WeightedMesh> {
    let [x0, x1, y0, y1] = bounds;
    if !(x0 <= 0.0 && x1 >= 1.0 && y1 > y0) || nx < 2 || ny < 1 {
        return domain("bounds must contain [0, 1] horizontally, with at least a 2 x 1 grid");
    }
    let h = (x1 - x0) / nx as f64;
    let mut xs: Vec<f64> = (0..=nx).map(|i| x0 + h * i as f64).collect();
    for &(a, b) in &set.intervals {
        xs.push(a);
        xs.push(b);
    }
    let min_gap = set.intervals.windows(2).map(|w| w[1].0 - w[0].1).fold(f64::INFINITY, f64::min);
    let xs = merged_nodes(xs, 1e-9 * min_gap.min(h));
    let ys: Vec<f64> = (0..=ny).map(|j| y0 + (y1 - y0) * j as f64 / ny as f64).collect();
    let mut mesh = tensor_grid(&xs, &ys)?;
    let inside = |x: f64| set.intervals.iter().position(|&(a, b)| x >= a - 1e-12 && x <= b + 1e-12);
    let same = |a: f64, b: f64| matches!((inside(a), inside(b)), (Some(i), Some(j)) if i == j);
    let verts = mesh.vertices.clone();
    match mode {
        CollapseMode::BottomEdge => {
            for (e, &[a, b]) in mesh.edges.iter().enumerate() {
                let (p, q) = (verts[a], verts[b]);
                if p[1] == y0 && q[1] == y0 && same(p[0], q[0]) {
                    mesh.edge_length[e] = 0.0;
                }
            }
        }
        CollapseMode::VerticalStrips => {
            for (e, &[a, b]) in mesh.edges.iter().enumerate() {
                if same(verts[a][0], verts[b][0]) {
                    mesh.edge_length[e] = 0.0;
                }
            }
            for (f, tri) in mesh.faces.iter().enumerate() {
                if same(verts[tri[0]][0], verts[tri[1]][0]) && same(verts[tri[1]][0], verts[tri[2]][0]) {
                    mesh.face_area[f] = 0.0;
                }
            }
        }
    }
    let on_bottom = |k: usize| -> Vec<usize> {
        (0..verts.len()).filter(|&v| verts[v][1] == y0 && inside(verts[v][0]) == Some(k)).collect()
    };
    let last = set.intervals.len() - 1;
    let f1: Vec<usize> = on_bottom(0);
    let f2: Vec<usize> = on_bottom(last);
    mesh.markers.insert("f1".into(), f1);
    mesh.markers.insert("f2".into(), f2);
    Ok(mesh)
}

/// Grading knobs of the glued sphere mesh.
#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GluedMeshOptions {
    /// Smallest seam spacing and depth step next to the centre point.
    pub finest: f64,
    /// Ratio of consecutive graded steps.
    pub ratio: f64,
    /// Extent of the graded region around the centre point.
    pub graded_extent: f64,
    /// Uniform seam angles added everywhere.
    pub uniform_sectors: usize,
    /// Uniform depth rings between the graded region and the poles.
    pub uniform_rings: usize,
}

impl Default for GluedMeshOptions {
    fn default() -> Self {
        Self { finest: 2e-3, ratio: 0.9, graded_extent: 1.0, uniform_sectors: 96, uniform_rings: 12 }
    }
}

/// Glued two-hemisphere mesh; seam vertices are shared.
#[derive(Debug, Clone)]
pub struct GluedAnnulusMesh {
    /// Vertices are stored as `(longitude, latitude)` in their own hemisphere.
    pub mesh: WeightedMesh,
    pub points: Vec<GluedPoint>,
    /// Seam angles (south side) of the shared equator vertices.
    pub seam_angles: Vec<f64>,
}

fn graded(center: f64, finest: f64, ratio: f64, extent: f64) -> Vec<f64> {
    let mut out = vec![center];
    let mut d = finest;
    while d < extent {
        out.push(center + d);
        out.push(center - d);
        d /= ratio;
    }
    out
}

/// Spherical triangle area by the vector form of L'Huilier's formula.
fn spherical_area(a: &SpherePoint, b: &SpherePoint, c: &SpherePoint) -> f64 {
    let triple = a.x * (b.y * c.z - b.z * c.y) - a.y * (b.x * c.z - b.z * c.x) + a.z * (b.x * c.y - b.y * c.x);
    2.0 * triple.abs().atan2(1.0 + a.dot(b) + b.dot(c) + c.dot(a))
}

/// Builds the glued sphere with seam spacing and depth rings graded
/// geometrically towards the seam point `θ₀` (and towards `G(θ₀)` on the
/// north side). Faces carry spherical areas and geodesic sides; seam edges
/// carry the seam distance as path length.
pub fn glued_annulus_mesh(metric: &GluedMetric, theta0: f64, opts: &GluedMeshOptions) -> Result<GluedAnnulusMesh> {
    if !(opts.finest > 0.0 && opts.ratio > 0.0 && opts.ratio < 1.0 && opts.graded_extent > opts.finest) {
        return domain("grading needs 0 < finest < graded_extent and 0 < ratio < 1");
    }
    if opts.uniform_sectors < 8 || opts.uniform_rings < 2 {
        return domain("glued mesh needs at least 8 uniform sectors and 2 uniform rings");
    }
    let g = metric.homeo();
    let psi0 = g.lift(theta0);
    let mut seam: Vec<f64> = graded(theta0, opts.finest, opts.ratio, opts.graded_extent.min(PI));
    seam.extend(graded(psi0, opts.finest, opts.ratio, opts.graded_extent.min(PI)).into_iter().map(|p| g.inverse_lift(p)));
    seam.extend((0..opts.uniform_sectors).map(|i| theta0 + TAU * i as f64 / opts.uniform_sectors as f64));
    let seam: Vec<f64> = seam.into_iter().map(|t| theta0 - PI + (t - theta0 + PI).rem_euclid(TAU)).collect();
    let seam = merged_nodes(seam, 1e-12);
    let ns = seam.len();
    let north_angles: Vec<f64> = seam.iter().map(|&t| g.lift(t)).collect();

    // depths below the equator, increasing, excluding 0 and the pole
    let mut depths: Vec<f64> = Vec::new();
    let mut d = opts.finest;
    while d < opts.graded_extent.min(1.0) {
        depths.push(d);
        d /= opts.ratio;
    }
    let start = depths.last().copied().unwrap_or(0.0);
    for j in 1..opts.uniform_rings {
        depths.push(start + (FRAC_PI_2 - start) * j as f64 / opts.uniform_rings as f64);
    }
    let nr = depths.len();

    let mut points: Vec<GluedPoint> = seam.iter().map(|&t| GluedPoint::seam(t)).collect();
    let mut coords: Vec<[f64; 2]> = seam.iter().map(|&t| [t, 0.0]).collect();
    let mut sphere: Vec<SpherePoint> = seam.iter().map(|&t| SpherePoint::equator(t)).collect();
    let mut north_sphere: Vec<SpherePoint> = north_angles.iter().map(|&t| SpherePoint::equator(t)).collect();
    // per hemisphere: ring block start, then the pole
    let mut ring_start = [0usize; 2];
    let mut pole = [0usize; 2];
    for (h, tag) in [Hemisphere::South, Hemisphere::North].into_iter().enumerate() {
        let sign = if tag == Hemisphere::South { -1.0 } else { 1.0 };
        let angles = if tag == Hemisphere::South { &seam } else { &north_angles };
        ring_start[h] = points.len();
        for &dep in &depths {
            for &t in angles.iter() {
                let p = SpherePoint::from_lon_lat(t, sign * dep);
                points.push(GluedPoint { tag, position: p, seam: None });
                coords.push([t, sign * dep]);
                sphere.push(p);
                north_sphere.push(p);
            }
        }
        pole[h] = points.len();
        let p = SpherePoint::new(0.0, 0.0, sign).expect("unit vector");
        points.push(GluedPoint { tag, position: p, seam: None });
        coords.push([0.0, sign * FRAC_PI_2]);
        sphere.push(p);
        north_sphere.push(p);
    }

    let ring = |h: usize, j: usize, s: usize| -> usize {
        // ring 0 is the seam
        if j == 0 {
            s % ns
        } else {
            ring_start[h] + (j - 1) * ns + s % ns
        }
    };
    let mut faces = Vec::new();
    let mut face_area = Vec::new();
    let mut face_sides = Vec::new();
    for h in 0..2 {
        let pos: &Vec<SpherePoint> = if h == 0 { &sphere } else { &north_sphere };
        let mut push = |tri: [usize; 3]| {
            let p = tri.map(|v| pos[v]);
            faces.push(tri);
            face_area.push(spherical_area(&p[0], &p[1], &p[2]));
            face_sides.push([0, 1, 2].map(|k| sigma_unchecked(&p[(k + 1) % 3], &p[(k + 2) % 3])));
        };
        for j in 0..nr {
            for s in 0..ns {
                let (a, b) = (ring(h, j, s), ring(h, j, s + 1));
                let (c, d) = (ring(h, j + 1, s), ring(h, j + 1, s + 1));
                push([a, c, d]);
                push([a, d, b]);
            }
        }
        for s in 0..ns {
            push([ring(h, nr, s), pole[h], ring(h, nr, s + 1)]);
        }
    }
    let mut mesh = WeightedMesh::from_faces(coords, faces, face_area, face_sides)?;
    for (e, &[a, b]) in mesh.edges.iter().enumerate() {
        if a < ns && b < ns {
            mesh.edge_length[e] = metric.seam_distance(seam[a], seam[b]);
        }
    }
    mesh.markers.insert("seam".into(), (0..ns).collect());
    mesh.markers.insert("south_pole".into(), vec![pole[0]]);
    mesh.markers.insert("north_pole".into(), vec![pole[1]]);
    Ok(GluedAnnulusMesh { mesh, points, seam_angles: seam })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CapacityRow {
    pub r: f64,
    pub modulus: f64,
    /// `2π / log(tan(R/2)/tan(r/2))`, the value on the round sphere.
    pub round_value: f64,
}

/// Modulus of `Γ(B̄(θ₀,r), Z ∖ B(θ₀,R))` for each `r`, on one glued mesh
/// graded for the smallest radius. Balls use the glued distance.
pub fn annulus_capacity_profile(
    metric: &GluedMetric,
    theta0: f64,
    big_r: f64,
    radii: &[f64],
    opts: Option<GluedMeshOptions>,
) -> Result<Vec<CapacityRow>> {
    if !(big_r > 0.0 && big_r < FRAC_PI_2) {
        return domain("outer radius must lie in (0, π/2)");
    }
    if radii.is_empty() || radii.windows(2).any(|w| w[1] >= w[0]) || radii[0] >= big_r || radii[radii.len() - 1] <= 0.0 {
        return domain("radii must be positive, decreasing and below R");
    }
    let rmin = radii[radii.len() - 1];
    let opts = opts.unwrap_or(GluedMeshOptions { finest: rmin / 8.0, graded_extent: 2.0 * big_r, ..Default::default() });
    let gm = glued_annulus_mesh(metric, theta0, &opts)?;
    let reach = 1.05 * big_r;
    let window = metric.seam_window(theta0, reach);
    let dist: Vec<f64> = gm
        .points
        .par_iter()
        .map(|p| {
            if p.seam.is_none() && p.position.distance_to_equator() > reach {
                return f64::INFINITY;
            }
            match window {
                Some(w) => metric.windowed_distance_from_seam(theta0, p, w, 64),
                None => metric.distance_from_seam(theta0, p, 1024),
            }
        })
        .collect();
    let f2: Vec<usize> = (0..dist.len()).filter(|&i| dist[i] >= big_r).collect();
    radii
        .iter()
        .map(|&r| {
            let f1: Vec<usize> = (0..dist.len()).filter(|&i| dist[i] <= r).collect();
            let sol = solve_modulus(&ModulusProblem::node_sets(&gm.mesh, f1, f2.clone()).with_paths(0, 0))?;
            let round_value = TAU / ((0.5 * big_r).tan() / (0.5 * r).tan()).ln();
            Ok(CapacityRow { r, modulus: sol.value, round_value })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homeo::CircleHomeo;
    use crate::modulus::{solve_modulus, ModulusProblem};

    #[test]
    fn bottom_collapse_raises_left_right_modulus_slightly() {
        let set = FatCantor::new(0.5, 3).unwrap();
        let m = collapsed_plane_mesh(&set, [0.0, 1.0, 0.0, 1.0], 16, 16, CollapseMode::BottomEdge).unwrap();
        let s = solve_modulus(&ModulusProblem::quadrilateral(&m, "xi1", "xi3").unwrap()).unwrap();
        assert!(s.value > 1.0 && s.value < 1.2, "{}", s.value);
        assert!(s.residual < 0.02);
        assert!(m.marker("f1").unwrap().len() >= 2);
    }

    #[test]
    fn collapsed_horizontal_length() {
        for k in [3, 5] {
            let set = FatCantor::new(0.5, k).unwrap();
            let m = collapsed_plane_mesh(&set, [0.0, 1.0, 0.0, 1.0], 32, 4, CollapseMode::VerticalStrips).unwrap();
            let row: f64 = m
                .edges
                .iter()
                .enumerate()
                .filter(|(_, &[a, b])| m.vertices[a][1] == 0.0 && m.vertices[b][1] == 0.0)
                .map(|(e, _)| m.edge_length[e])
                .sum();
            assert!((row - 0.5).abs() <= 0.5f64.powi(k as i32), "{k}: {row}");
        }
    }

    #[test]
    fn strips_raise_the_modulus() {
        let set = FatCantor::new(0.5, 4).unwrap();
        let m = collapsed_plane_mesh(&set, [0.0, 1.0, 0.0, 1.0], 32, 16, CollapseMode::VerticalStrips).unwrap();
        let s = solve_modulus(&ModulusProblem::quadrilateral(&m, "xi1", "xi3").unwrap()).unwrap();
        let expected = 1.0 / (1.0 - set.total_length());
        assert!(s.value > 1.5 && (s.value - expected).abs() / expected < 1e-6, "{}", s.value);
        assert!(s.residual < 0.02);
    }

    #[test]
    fn glued_mesh_area_and_identity_profile() {
        let m = GluedMetric::new(CircleHomeo::identity());
        let gm = glued_annulus_mesh(&m, 1.0, &GluedMeshOptions::default()).unwrap();
        assert!((gm.mesh.total_area() - 4.0 * PI).abs() < 1e-9);
        let rows = annulus_capacity_profile(&m, 1.0, 0.5, &[0.25, 0.0625], None).unwrap();
        for row in &rows {
            assert!((row.modulus - row.round_value).abs() / row.round_value < 0.1, "{row:?}");
        }
    }
}
