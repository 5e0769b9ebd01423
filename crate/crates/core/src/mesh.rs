//! Triangle meshes carrying an intrinsic metric: per-face area weights and
//! side lengths for the Dirichlet energy, and per-edge path lengths for
//! ρ-length bookkeeping.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct WeightedMesh {
    /// Chart coordinates, used for output and for locating vertices.
    pub vertices: Vec<[f64; 2]>,
    pub faces: Vec<[usize; 3]>,
    /// Area weight of each face. Zero marks a collapsed face.
    pub face_area: Vec<f64>,
    /// Intrinsic side lengths; side `k` is opposite corner `k`.
    pub face_sides: Vec<[f64; 3]>,
    /// Unique undirected edges with `i < j`.
    pub edges: Vec<[usize; 2]>,
    /// Path length of each edge. Zero marks a collapsed edge.
    pub edge_length: Vec<f64>,
    /// Named vertex sets (boundary sides, rings, the equator).
    pub markers: BTreeMap<String, Vec<usize>>,
}

impl WeightedMesh {
    /// Assembles a mesh from faces with their intrinsic geometry. Edge lengths
    /// are taken from the face sides; an edge shared by two faces keeps the
    /// smaller of the two values.
    pub fn from_faces(
        vertices: Vec<[f64; 2]>,
        faces: Vec<[usize; 3]>,
        face_area: Vec<f64>,
        face_sides: Vec<[f64; 3]>,
    ) -> Result<Self> {
        if faces.len() != face_area.len() || faces.len() != face_sides.len() {
            return Err(Error::Config("face arrays have different lengths".into()));
        }
        let nv = vertices.len();
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_length: Vec<f64> = Vec::new();
        for (f, tri) in faces.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::Config(format!("face {f} references a missing vertex")));
            }
            if face_area[f] < 0.0 || face_sides[f].iter().any(|&s| s < 0.0 || !s.is_finite()) {
                return Err(Error::Config(format!("face {f} carries a negative weight")));
            }
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let key = (a.min(b), a.max(b));
                let len = face_sides[f][k];
                match index.get(&key) {
                    Some(&e) => edge_length[e] = edge_length[e].min(len),
                    None => {
                        index.insert(key, edges.len());
                        edges.push([key.0, key.1]);
                        edge_length.push(len);
                    }
                }
            }
        }
        Ok(Self { vertices, faces, face_area, face_sides, edges, edge_length, markers: BTreeMap::new() })
    }

    /// Mesh on a chart with conformal area density `lambda`: a chart segment
    /// has length `|Δ|·√λ(mid)` and a face has area `λ(centroid)·(chart area)`.
    pub fn from_chart<F: Fn([f64; 2]) -> f64>(vertices: Vec<[f64; 2]>, faces: Vec<[usize; 3]>, lambda: F) -> Result<Self> {
        let mut face_area = Vec::with_capacity(faces.len());
        let mut face_sides = Vec::with_capacity(faces.len());
        for tri in &faces {
            let p = tri.map(|v| vertices[v]);
            let centroid = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
            let chart_area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs();
            face_area.push(lambda(centroid) * chart_area);
            let mut sides = [0.0; 3];
            for k in 0..3 {
                let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
                let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                sides[k] = ((b[0] - a[0]).hypot(b[1] - a[1])) * lambda(mid).sqrt();
            }
            face_sides.push(sides);
        }
        Self::from_faces(vertices, faces, face_area, face_sides)
    }

    pub fn total_area(&self) -> f64 {
        self.face_area.iter().sum()
    }

    pub fn marker(&self, name: &str) -> Result<&[usize]> {
        self.markers
            .get(name)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::Config(format!("mesh has no marker '{name}'")))
    }

    /// Largest edge length, the mesh size `h`.
    pub fn mesh_size(&self) -> f64 {
        self.edge_length.iter().cloned().fold(0.0, f64::max)
    }

    /// Multiplies every edge length by `s` and every area by `s²`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.face_area.iter_mut().for_each(|a| *a *= s * s);
        m.face_sides.iter_mut().for_each(|t| t.iter_mut().for_each(|x| *x *= s));
        m.edge_length.iter_mut().for_each(|l| *l *= s);
        m
    }

    /// Vertex adjacency lists with edge indices.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            adj[a].push((b, e));
            adj[b].push((a, e));
        }
        adj
    }
}

/// Polar grid in a chart: vertices at `rings × sectors`, optionally with a
/// centre vertex fanned to the first ring.
#[derive(Debug, Clone)]
pub struct PolarGrid {
    pub rings: Vec<f64>,
    pub sectors: Vec<f64>,
    pub center: bool,
}

impl PolarGrid {
    /// Grid with a centre vertex.
    pub fn new(rings: Vec<f64>, sectors: Vec<f64>) -> Result<Self> {
        Self::build(rings, sectors, true)
    }

    /// Grid with a hole inside the first ring.
    pub fn annulus(rings: Vec<f64>, sectors: Vec<f64>) -> Result<Self> {
        Self::build(rings, sectors, false)
    }

    fn build(rings: Vec<f64>, sectors: Vec<f64>, center: bool) -> Result<Self> {
        if rings.is_empty() || sectors.len() < 3 {
            return Err(Error::Config("polar grid needs at least one ring and three sectors".into()));
        }
        if rings[0] <= 0.0 || rings.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("ring radii must be positive and increasing".into()));
        }
        if sectors.windows(2).any(|w| w[1] <= w[0]) || sectors[sectors.len() - 1] - sectors[0] >= TAU {
            return Err(Error::Config("sector angles must increase within one turn".into()));
        }
        Ok(Self { rings, sectors, center })
    }

    fn offset(&self) -> usize {
        usize::from(self.center)
    }

    pub fn vertex(&self, ring: usize, sector: usize) -> usize {
        self.offset() + ring * self.sectors.len() + sector % self.sectors.len()
    }

    pub fn ring_vertices(&self, ring: usize) -> Vec<usize> {
        (0..self.sectors.len()).map(|s| self.vertex(ring, s)).collect()
    }

    pub fn vertex_positions(&self) -> Vec<[f64; 2]> {
        let mut v = Vec::with_capacity(self.offset() + self.rings.len() * self.sectors.len());
        if self.center {
            v.push([0.0, 0.0]);
        }
        for &r in &self.rings {
            for &t in &self.sectors {
                v.push([r * t.cos(), r * t.sin()]);
            }
        }
        v
    }

    pub fn triangles(&self) -> Vec<[usize; 3]> {
        let ns = self.sectors.len();
        let mut f = Vec::new();
        if self.center {
            for s in 0..ns {
                f.push([0, self.vertex(0, s), self.vertex(0, s + 1)]);
            }
        }
        for j in 0..self.rings.len() - 1 {
            for s in 0..ns {
                let (a, b) = (self.vertex(j, s), self.vertex(j, s + 1));
                let (c, d) = (self.vertex(j + 1, s), self.vertex(j + 1, s + 1));
                f.push([a, c, d]);
                f.push([a, d, b]);
            }
        }
        f
    }

    /// Builds the mesh with markers `inner` (first ring) and `outer` (last ring).
    pub fn to_mesh<F: Fn([f64; 2]) -> f64>(&self, lambda: F) -> WeightedMesh {
        let mut mesh = WeightedMesh::from_chart(self.vertex_positions(), self.triangles(), lambda)
            .expect("polar grid faces are valid");
        mesh.markers.insert("inner".into(), self.ring_vertices(0));
        mesh.markers.insert("outer".into(), self.ring_vertices(self.rings.len() - 1));
        mesh
    }
}

/// Tensor grid on `xs × ys` with the flat metric. Markers follow the cyclic
/// order of a quadrilateral: `xi1` left, `xi2` bottom, `xi3` right, `xi4` top.
pub fn tensor_grid(xs: &[f64], ys: &[f64]) -> Result<WeightedMesh> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(Error::Config("tensor grid needs two nodes per axis".into()));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) || ys.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("grid coordinates must increase".into()));
    }
    let (nx, ny) = (xs.len(), ys.len());
    let id = |i: usize, j: usize| j * nx + i;
    let mut vertices = Vec::with_capacity(nx * ny);
    for &y in ys {
        for &x in xs {
            vertices.push([x, y]);
        }
    }
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut mesh = WeightedMesh::from_chart(vertices, faces, |_| 1.0)?;
    mesh.markers.insert("xi1".into(), (0..ny).map(|j| id(0, j)).collect());
    mesh.markers.insert("xi2".into(), (0..nx).map(|i| id(i, 0)).collect());
    mesh.markers.insert("xi3".into(), (0..ny).map(|j| id(nx - 1, j)).collect());
    mesh.markers.insert("xi4".into(), (0..nx).map(|i| id(i, ny - 1)).collect());
    Ok(mesh)
}

/// Uniform `nx × ny` grid on the rectangle `[0,a] × [0,b]`.
pub fn rectangle_mesh(a: f64, b: f64, nx: usize, ny: usize) -> Result<WeightedMesh> {
    if !(a > 0.0 && b > 0.0) || nx == 0 || ny == 0 {
        return Err(Error::Config("rectangle needs positive sides and cell counts".into()));
    }
    let xs: Vec<f64> = (0..=nx).map(|i| a * i as f64 / nx as f64).collect();
    let ys: Vec<f64> = (0..=ny).map(|j| b * j as f64 / ny as f64).collect();
    tensor_grid(&xs, &ys)
}

/// Flat planar annulus `r ≤ |z| ≤ R` with geometrically spaced rings.
pub fn planar_annulus_mesh(r: f64, big_r: f64, n_rings: usize, n_sectors: usize) -> Result<WeightedMesh> {
    if !(0.0 < r && r < big_r) || n_rings < 1 || n_sectors < 3 {
        return Err(Error::Config("annulus needs 0 < r < R, one ring step and three sectors".into()));
    }
    let q = (big_r / r).ln() / n_rings as f64;
    let rings: Vec<f64> = (0..=n_rings).map(|j| r * (q * j as f64).exp()).collect();
    let sectors: Vec<f64> = (0..n_sectors).map(|s| TAU * s as f64 / n_sectors as f64).collect();
    Ok(PolarGrid::annulus(rings, sectors)?.to_mesh(|_| 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_area_and_markers() {
        let m = rectangle_mesh(2.0, 1.0, 8, 4).unwrap();
        assert!((m.total_area() - 2.0).abs() < 1e-12);
        assert_eq!(m.marker("xi1").unwrap().len(), 5);
        assert_eq!(m.marker("xi2").unwrap().len(), 9);
        assert_eq!(m.edges.len(), 8 * 5 + 9 * 4 + 8 * 4);
        assert!(m.marker("nope").is_err());
    }

    #[test]
    fn annulus_area() {
        let m = planar_annulus_mesh(0.1, 1.0, 64, 256).unwrap();
        let exact = std::f64::consts::PI * (1.0 - 0.01);
        assert!((m.total_area() - exact).abs() / exact < 1e-3);
    }

    #[test]
    fn scaling_multiplies_weights() {
        let m = rectangle_mesh(1.0, 1.0, 3, 3).unwrap();
        let s = m.scaled(3.0);
        assert!((s.total_area() - 9.0).abs() < 1e-12);
        assert!((s.mesh_size() - 3.0 * m.mesh_size()).abs() < 1e-12);
    }

    #[test]
    fn bad_grids_are_rejected() {
        assert!(tensor_grid(&[0.0, 0.0], &[0.0, 1.0]).is_err());
        assert!(PolarGrid::new(vec![0.5, 0.2], vec![0.0, 1.0, 2.0]).is_err());
        assert!(planar_annulus_mesh(1.0, 0.5, 4, 8).is_err());
    }
}
