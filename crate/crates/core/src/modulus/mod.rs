//! Discrete 2-modulus of path families on weighted meshes, computed through
//! the harmonic potential of the condenser.

mod meshes;
mod solver;

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::mesh::{planar_annulus_mesh, WeightedMesh};

pub use meshes::{
    annulus_capacity_profile, collapsed_plane_mesh, glued_annulus_mesh, CapacityRow, CollapseMode, GluedAnnulusMesh,
    GluedMeshOptions,
};

/// `(π/4)²`, the lower bound of the reciprocality product for `κ₀ = (4/π)²`.
pub const RECIPROCALITY_FLOOR: f64 = PI * PI / 16.0;

/// Default number of sampled paths for the admissibility residual.
pub const DEFAULT_PATH_SAMPLES: usize = 1000;

/// A condenser on a mesh: paths joining `f1` to `f2` inside the mesh.
#[derive(Debug, Clone)]
pub struct ModulusProblem<'a> {
    pub mesh: &'a WeightedMesh,
    pub f1: Vec<usize>,
    pub f2: Vec<usize>,
    pub path_samples: usize,
    pub seed: u64,
}

impl<'a> ModulusProblem<'a> {
    pub fn node_sets(mesh: &'a WeightedMesh, f1: Vec<usize>, f2: Vec<usize>) -> Self {
        Self { mesh, f1, f2, path_samples: DEFAULT_PATH_SAMPLES, seed: 0 }
    }

    /// Paths joining two marked sides, e.g. `("xi1", "xi3")`.
    pub fn quadrilateral(mesh: &'a WeightedMesh, from: &str, to: &str) -> Result<Self> {
        Ok(Self::node_sets(mesh, mesh.marker(from)?.to_vec(), mesh.marker(to)?.to_vec()))
    }

    /// Planar annulus condenser: chart disks `|z − c| ≤ r` and `|z − c| ≥ R`.
    pub fn annulus(mesh: &'a WeightedMesh, center: [f64; 2], r: f64, big_r: f64) -> Result<Self> {
        if !(0.0 < r && r < big_r) {
            return domain("annulus needs 0 < r < R");
        }
        let dist = |v: &[f64; 2]| (v[0] - center[0]).hypot(v[1] - center[1]);
        let tol = 1e-9 * big_r;
        let f1 = (0..mesh.vertices.len()).filter(|&i| dist(&mesh.vertices[i]) <= r + tol).collect();
        let f2 = (0..mesh.vertices.len()).filter(|&i| dist(&mesh.vertices[i]) >= big_r - tol).collect();
        Ok(Self::node_sets(mesh, f1, f2))
    }

    pub fn with_paths(mut self, samples: usize, seed: u64) -> Self {
        self.path_samples = samples;
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModulusSolution {
    /// Discrete modulus, the Dirichlet energy of `u`.
    pub value: f64,
    /// Optimal density per face.
    pub rho: Vec<f64>,
    /// Potential per vertex, 0 on `F₁` and 1 on `F₂`.
    pub u: Vec<f64>,
    /// `max(0, 1 − min ρ-length)` over the sampled paths.
    pub residual: f64,
    pub paths_checked: usize,
}

/// Modulus of the condenser by the potential method.
pub fn solve_modulus(problem: &ModulusProblem) -> Result<ModulusSolution> {
    let mesh = problem.mesh;
    if problem.f1.is_empty() || problem.f2.is_empty() {
        return domain("both boundary sets must be nonempty");
    }
    let c = solver::contract(mesh);
    let mut fixed: Vec<Option<f64>> = vec![None; c.n_nodes];
    for &v in &problem.f1 {
        fixed[c.node[v]] = Some(0.0);
    }
    for &v in &problem.f2 {
        if fixed[c.node[v]] == Some(0.0) {
            return domain(format!("vertex {v} lies in both boundary sets up to collapsed edges"));
        }
        fixed[c.node[v]] = Some(1.0);
    }
    let comp = solver::components(&c, mesh);
    let joined = problem.f1.iter().any(|&a| {
        let ca = comp[c.node[a]];
        problem.f2.iter().any(|&b| comp[c.node[b]] == ca)
    });
    if !joined {
        return Err(Error::Infeasible("no path joins the boundary sets; the modulus is 0".into()));
    }
    let weights = solver::edge_weights(mesh);
    let value_of = solver::dirichlet_solve(&c, mesh, &weights, &fixed)?;
    let u: Vec<f64> = c.node.iter().map(|&n| value_of[n]).collect();
    let value: f64 = mesh
        .edges
        .iter()
        .zip(&weights)
        .map(|(&[a, b], &w)| w * (u[a] - u[b]).powi(2))
        .sum();
    let rho = face_density(mesh, &u);
    let (residual, paths_checked) = admissibility(mesh, &c, &u, &rho, problem);
    Ok(ModulusSolution { value, rho, u, residual, paths_checked })
}

/// `|∇u|` per face in the intrinsic face geometry; collapsed faces get 0.
fn face_density(mesh: &WeightedMesh, u: &[f64]) -> Vec<f64> {
    mesh.faces
        .iter()
        .enumerate()
        .map(|(f, tri)| {
            if mesh.face_area[f] == 0.0 {
                return 0.0;
            }
            let sides = mesh.face_sides[f];
            let Some(w) = solver::face_weights(sides) else { return 0.0 };
            let e: f64 = (0..3).map(|k| w[k] * (u[tri[(k + 1) % 3]] - u[tri[(k + 2) % 3]]).powi(2)).sum();
            (e.max(0.0) / solver::heron(sides)).sqrt()
        })
        .collect()
}

/// Random paths that increase `u` at every step, from `F₁` to `u = 1`.
/// An edge carries the largest density of its faces.
fn admissibility(
    mesh: &WeightedMesh,
    c: &solver::Contraction,
    u: &[f64],
    rho: &[f64],
    problem: &ModulusProblem,
) -> (f64, usize) {
    if problem.path_samples == 0 {
        return (0.0, 0);
    }
    let index: HashMap<(usize, usize), usize> =
        mesh.edges.iter().enumerate().map(|(e, &[a, b])| ((a, b), e)).collect();
    let mut edge_rho = vec![0.0f64; mesh.edges.len()];
    for (f, tri) in mesh.faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let e = index[&(a.min(b), a.max(b))];
            edge_rho[e] = edge_rho[e].max(rho[f]);
        }
    }
    let mut up: Vec<Vec<(usize, usize)>> = vec![Vec::new(); c.n_nodes];
    for (e, &[a, b]) in mesh.edges.iter().enumerate() {
        let (na, nb) = (c.node[a], c.node[b]);
        if u[b] > u[a] + 1e-13 {
            up[na].push((nb, e));
        } else if u[a] > u[b] + 1e-13 {
            up[nb].push((na, e));
        }
    }
    let mut target = vec![false; c.n_nodes];
    for &v in &problem.f2 {
        target[c.node[v]] = true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    for _ in 0..problem.path_samples {
        let start = problem.f1[rng.gen_range(0..problem.f1.len())];
        let mut node = c.node[start];
        let mut length = 0.0;
        let mut reached = false;
        loop {
            if up[node].is_empty() {
                break;
            }
            let (next, e) = up[node][rng.gen_range(0..up[node].len())];
            length += edge_rho[e] * mesh.edge_length[e];
            node = next;
            if target[node] {
                reached = true;
                break;
            }
        }
        if reached {
            checked += 1;
            worst = worst.min(length);
        }
    }
    if checked == 0 {
        return (0.0, 0);
    }
    ((1.0 - worst).max(0.0), checked)
}

/// `Mod Γ(ξ₁,ξ₃) · Mod Γ(ξ₂,ξ₄)` on a mesh with markers `xi1..xi4`.
pub fn reciprocality_product(mesh: &WeightedMesh) -> Result<f64> {
    let a = solve_modulus(&ModulusProblem::quadrilateral(mesh, "xi1", "xi3")?.with_paths(0, 0))?;
    let b = solve_modulus(&ModulusProblem::quadrilateral(mesh, "xi2", "xi4")?.with_paths(0, 0))?;
    Ok(a.value * b.value)
}

/// Modulus of the flat annulus `r ≤ |z| ≤ R` on a geometric polar grid.
pub fn planar_annulus_modulus(r: f64, big_r: f64, n_rings: usize, n_sectors: usize) -> Result<f64> {
    let mesh = planar_annulus_mesh(r, big_r, n_rings, n_sectors)?;
    let p = ModulusProblem::quadrilateral(&mesh, "inner", "outer")?.with_paths(0, 0);
    Ok(solve_modulus(&p)?.value)
}

#[derive(Debug, Clone, Serialize)]
pub struct Uniformizer {
    pub u: Vec<f64>,
    /// Conjugate potential per vertex, shifted to start at 0.
    pub v: Vec<f64>,
    /// `Mod Γ(from, to)`, the range of `v`.
    pub m: f64,
}

/// The potential `u` of the condenser `(from, to)` and its conjugate `v`,
/// obtained by integrating the flux of `∇u` between edge midpoints.
pub fn discrete_uniformizer(mesh: &WeightedMesh, from: &str, to: &str) -> Result<Uniformizer> {
    if mesh.face_area.contains(&0.0) {
        return domain("the conjugate needs a mesh without collapsed faces");
    }
    let sol = solve_modulus(&ModulusProblem::quadrilateral(mesh, from, to)?.with_paths(0, 0))?;
    let u = sol.u;
    let index: HashMap<(usize, usize), usize> =
        mesh.edges.iter().enumerate().map(|(e, &[a, b])| ((a, b), e)).collect();
    let edge_of = |tri: &[usize; 3], k: usize| {
        let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
        index[&(a.min(b), a.max(b))]
    };
    let mut faces_of_edge: Vec<Vec<usize>> = vec![Vec::new(); mesh.edges.len()];
    for (f, tri) in mesh.faces.iter().enumerate() {
        for k in 0..3 {
            faces_of_edge[edge_of(tri, k)].push(f);
        }
    }
    // midpoint differences within each face: d[k] = v(m_k) − v(m_0)
    let diffs: Vec<[f64; 3]> = mesh
        .faces
        .iter()
        .enumerate()
        .map(|(f, tri)| {
            let l = mesh.face_sides[f];
            let sq = l.map(|x| x * x);
            let area = solver::heron(l);
            let p = tri.map(|v| mesh.vertices[v]);
            let orient = ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).signum();
            let ee = |i: usize, j: usize| if i == j { sq[i] } else { 0.5 * (sq[3 - i - j] - sq[i] - sq[j]) };
            // v(m_{c+1}) − v(m_{c+2}) for each c
            let step = |c: usize| -orient * (0..3).map(|k| u[tri[k]] * ee(k, c)).sum::<f64>() / (4.0 * area);
            // m_1 − m_2 = step(0), m_2 − m_0 = step(1)
            let d2 = step(1);
            let d1 = d2 + step(0);
            [0.0, d1, d2]
        })
        .collect();
    let mut mid = vec![f64::NAN; mesh.edges.len()];
    let mut done = vec![false; mesh.faces.len()];
    for seed_face in 0..mesh.faces.len() {
        if done[seed_face] {
            continue;
        }
        let mut stack = vec![seed_face];
        mid[edge_of(&mesh.faces[seed_face], 0)] = 0.0;
        done[seed_face] = true;
        while let Some(f) = stack.pop() {
            let tri = &mesh.faces[f];
            let known = (0..3).find(|&k| !mid[edge_of(tri, k)].is_nan()).expect("face reached through an edge");
            let base = mid[edge_of(tri, known)] - diffs[f][known];
            for k in 0..3 {
                let e = edge_of(tri, k);
                if mid[e].is_nan() {
                    mid[e] = base + diffs[f][k];
                }
                for &g in &faces_of_edge[e] {
                    if !done[g] {
                        done[g] = true;
                        stack.push(g);
                    }
                }
            }
        }
    }
    let mut sum = vec![0.0; mesh.vertices.len()];
    let mut count = vec![0usize; mesh.vertices.len()];
    for tri in &mesh.faces {
        let m = [0, 1, 2].map(|k| mid[edge_of(tri, k)]);
        for k in 0..3 {
            sum[tri[k]] += m[(k + 1) % 3] + m[(k + 2) % 3] - m[k];
            count[tri[k]] += 1;
        }
    }
    let mut v: Vec<f64> = sum.iter().zip(&count).map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 }).collect();
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    v.iter_mut().for_each(|x| *x -= lo);
    Ok(Uniformizer { u, v, m: sol.value })
}

/// `max |v − M u′| / M`, where `v` is the conjugate of the `(ξ₁, ξ₃)`
/// potential and `u′` the `(ξ₂, ξ₄)` potential.
pub fn conjugacy_defect(mesh: &WeightedMesh) -> Result<f64> {
    let un = discrete_uniformizer(mesh, "xi1", "xi3")?;
    let dual = solve_modulus(&ModulusProblem::quadrilateral(mesh, "xi2", "xi4")?.with_paths(0, 0))?;
    Ok(un
        .v
        .iter()
        .zip(&dual.u)
        .map(|(v, up)| (v - un.m * up).abs())
        .fold(0.0, f64::max)
        / un.m)
}

/// JSON dump of a mesh with a solution: vertices, faces, weights, ρ and u.
pub fn dump_json(mesh: &WeightedMesh, solution: &ModulusSolution) -> serde_json::Value {
    serde_json::json!({
        "vertices": mesh.vertices,
        "faces": mesh.faces,
        "face_area": mesh.face_area,
        "edges": mesh.edges,
        "edge_length": mesh.edge_length,
        "rho": solution.rho,
        "u": solution.u,
        "modulus": solution.value,
        "residual": solution.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::rectangle_mesh;

    #[test]
    fn unit_square_is_one() {
        let m = rectangle_mesh(1.0, 1.0, 40, 40).unwrap();
        let s = solve_modulus(&ModulusProblem::quadrilateral(&m, "xi1", "xi3").unwrap()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-8);
        assert!(s.residual < 0.02 && s.paths_checked > 900);
        assert!(s.rho.iter().all(|&r| r >= 0.0));
        let total: f64 = s.rho.iter().zip(&m.face_area).map(|(r, a)| r * r * a).sum();
        assert!((total - s.value).abs() < 1e-9);
    }

    #[test]
    fn rectangles_and_reciprocality() {
        for (a, b) in [(1.0, 2.0), (2.0, 1.0), (1.0, 4.0)] {
            let m = rectangle_mesh(a, b, 32, 32).unwrap();
            let s = solve_modulus(&ModulusProblem::quadrilateral(&m, "xi1", "xi3").unwrap()).unwrap();
            assert!((s.value - b / a).abs() / (b / a) < 1e-8);
            let p = reciprocality_product(&m).unwrap();
            assert!((p - 1.0).abs() < 1e-8 && p >= RECIPROCALITY_FLOOR);
        }
    }

    #[test]
    fn scaling_leaves_modulus_unchanged() {
        let m = planar_annulus_mesh(0.2, 1.0, 12, 48).unwrap();
        let a = solve_modulus(&ModulusProblem::quadrilateral(&m, "inner", "outer").unwrap()).unwrap().value;
        let s = m.scaled(3.7);
        let b = solve_modulus(&ModulusProblem::quadrilateral(&s, "inner", "outer").unwrap()).unwrap().value;
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn annulus_converges() {
        let exact = 2.0 * PI / 10f64.ln();
        let errs: Vec<f64> = [(24, 64), (48, 128)]
            .iter()
            .map(|&(nr, ns)| (planar_annulus_modulus(0.1, 1.0, nr, ns).unwrap() - exact).abs())
            .collect();
        assert!(errs[1] / exact < 0.03);
        assert!(errs[0] > errs[1]);
    }

    #[test]
    fn shrinking_boundary_sets_lowers_modulus() {
        let m = rectangle_mesh(1.0, 1.0, 16, 16).unwrap();
        let full = solve_modulus(&ModulusProblem::quadrilateral(&m, "xi1", "xi3").unwrap()).unwrap().value;
        let left: Vec<usize> = m.marker("xi1").unwrap()[4..12].to_vec();
        let part = solve_modulus(&ModulusProblem::node_sets(&m, left, m.marker("xi3").unwrap().to_vec())).unwrap().value;
        assert!(part <= full + 1e-9);
    }

    #[test]
    fn disconnected_sets_are_infeasible() {
        let mut m = rectangle_mesh(1.0, 1.0, 2, 1).unwrap();
        let mut n = rectangle_mesh(1.0, 1.0, 2, 1).unwrap();
        let off = m.vertices.len();
        m.vertices.extend(n.vertices.drain(..).map(|v| [v[0] + 5.0, v[1]]));
        let faces: Vec<[usize; 3]> = m.faces.iter().cloned().chain(n.faces.iter().map(|f| f.map(|v| v + off))).collect();
        let mesh = WeightedMesh::from_chart(m.vertices.clone(), faces, |_| 1.0).unwrap();
        let p = ModulusProblem::node_sets(&mesh, vec![0], vec![off + 2]);
        assert!(matches!(solve_modulus(&p), Err(Error::Infeasible(_))));
        let q = ModulusProblem::node_sets(&mesh, vec![0], vec![0]);
        assert!(solve_modulus(&q).is_err());
    }

    #[test]
    fn uniformizer_on_square_and_rectangle() {
        let m = rectangle_mesh(1.0, 1.0, 20, 20).unwrap();
        let un = discrete_uniformizer(&m, "xi1", "xi3").unwrap();
        for (i, p) in m.vertices.iter().enumerate() {
            assert!((un.u[i] - p[0]).abs() < 1e-8);
            assert!((un.v[i] - p[1]).abs() < 1e-8, "{p:?}: {}", un.v[i]);
        }
        assert!((un.m - 1.0).abs() < 1e-8);
        let r = rectangle_mesh(2.0, 1.0, 40, 20).unwrap();
        assert!(conjugacy_defect(&r).unwrap() < 1e-6);
    }
}
