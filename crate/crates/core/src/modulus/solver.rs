//! Cotangent Laplacian on a weighted mesh with zero-length edges contracted,
//! and a Jacobi-preconditioned conjugate gradient solver.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::WeightedMesh;

pub(crate) const CG_TOL: f64 = 1e-10;

/// Heron area of a triangle with the given sides.
pub(crate) fn heron(s: [f64; 3]) -> f64 {
    let [a, b, c] = s;
    let q = (a + b + c) * (-a + b + c) * (a - b + c) * (a + b - c);
    0.25 * q.max(0.0).sqrt()
}

/// Half-cotangent weight of each side of a face, side `k` opposite corner `k`.
pub(crate) fn face_weights(sides: [f64; 3]) -> Option<[f64; 3]> {
    let area = heron(sides);
    if area <= 0.0 {
        return None;
    }
    let sq = sides.map(|l| l * l);
    Some([0, 1, 2].map(|k| (sq[(k + 1) % 3] + sq[(k + 2) % 3] - sq[k]) / (8.0 * area)))
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Vertices joined by zero-length edges share one unknown.
#[derive(Debug, Clone)]
pub(crate) struct Contraction {
    pub node: Vec<usize>,
    pub n_nodes: usize,
}

pub(crate) fn contract(mesh: &WeightedMesh) -> Contraction {
    let n = mesh.vertices.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for (e, &[a, b]) in mesh.edges.iter().enumerate() {
        if mesh.edge_length[e] == 0.0 {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut node = vec![0; n];
    let mut n_nodes = 0;
    for v in 0..n {
        let r = find(&mut parent, v);
        if label[r] == usize::MAX {
            label[r] = n_nodes;
            n_nodes += 1;
        }
        node[v] = label[r];
    }
    Contraction { node, n_nodes }
}

/// Per-edge cotangent weights summed over the faces with positive area.
pub(crate) fn edge_weights(mesh: &WeightedMesh) -> Vec<f64> {
    let index: HashMap<(usize, usize), usize> =
        mesh.edges.iter().enumerate().map(|(e, &[a, b])| ((a, b), e)).collect();
    let mut w = vec![0.0; mesh.edges.len()];
    for (f, tri) in mesh.faces.iter().enumerate() {
        if mesh.face_area[f] == 0.0 {
            continue;
        }
        let Some(fw) = face_weights(mesh.face_sides[f]) else { continue };
        for k in 0..3 {
            let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            w[index[&(a.min(b), a.max(b))]] += fw[k];
        }
    }
    w
}

/// Symmetric sparse matrix in compressed rows.
#[derive(Debug, Clone)]
pub(crate) struct Csr {
    pub row_start: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_start = vec![0; n + 1];
        let mut col = Vec::with_capacity(t.len());
        let mut val: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = (usize::MAX, usize::MAX);
        for (i, j, v) in t {
            if (i, j) == last {
                *val.last_mut().expect("nonempty") += v;
            } else {
                col.push(j);
                val.push(v);
                row_start[i + 1] = col.len();
                last = (i, j);
            }
        }
        for i in 1..=n {
            row_start[i] = row_start[i].max(row_start[i - 1]);
        }
        Self { row_start, col, val }
    }

    fn mul(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut s = 0.0;
            for k in self.row_start[i]..self.row_start[i + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            *yi = s;
        });
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.row_start.len() - 1)
            .map(|i| {
                (self.row_start[i]..self.row_start[i + 1])
                    .find(|&k| self.col[k] == i)
                    .map(|k| self.val[k])
                    .unwrap_or(0.0)
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.par_iter().zip(b.par_iter()).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned CG for `A x = b`, relative residual `tol`.
pub(crate) fn pcg(a: &Csr, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(x);
    }
    let inv: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let max_iter = 20 * n + 100;
    for _ in 0..max_iter {
        a.mul(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NoConvergence("Laplacian is not positive definite on the free nodes".into()));
        }
        let alpha = rz / pap;
        x.par_iter_mut().zip(p.par_iter()).for_each(|(x, p)| *x += alpha * p);
        r.par_iter_mut().zip(ap.par_iter()).for_each(|(r, ap)| *r -= alpha * ap);
        if dot(&r, &r).sqrt() <= tol * bnorm {
            return Ok(x);
        }
        z.par_iter_mut().zip(r.par_iter().zip(inv.par_iter())).for_each(|(z, (r, d))| *z = r * d);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(z.par_iter()).for_each(|(p, z)| *p = z + beta * *p);
    }
    Err(Error::NoConvergence(format!("conjugate gradients did not reach {tol:e} in {max_iter} iterations")))
}

/// Connected components of the node graph carried by the mesh edges.
pub(crate) fn components(c: &Contraction, mesh: &WeightedMesh) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..c.n_nodes).collect();
    for &[a, b] in &mesh.edges {
        let (ra, rb) = (find(&mut parent, c.node[a]), find(&mut parent, c.node[b]));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    (0..c.n_nodes).map(|i| find(&mut parent, i)).collect()
}

/// Solves the Dirichlet problem for the weighted Laplacian on contracted
/// nodes. `fixed[i]` holds the boundary value of node `i`; free nodes in
/// components without boundary values are pinned to 0.
pub(crate) fn dirichlet_solve(
    c: &Contraction,
    mesh: &WeightedMesh,
    weights: &[f64],
    fixed: &[Option<f64>],
) -> Result<Vec<f64>> {
    let comp = components(c, mesh);
    let mut anchored = vec![false; c.n_nodes];
    for i in 0..c.n_nodes {
        if fixed[i].is_some() {
            anchored[comp[i]] = true;
        }
    }
    let mut free_index = vec![usize::MAX; c.n_nodes];
    let mut free = Vec::new();
    for i in 0..c.n_nodes {
        if fixed[i].is_none() && anchored[comp[i]] {
            free_index[i] = free.len();
            free.push(i);
        }
    }
    let mut value: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    let mut trip = Vec::with_capacity(4 * mesh.edges.len());
    let mut rhs = vec![0.0; free.len()];
    for (e, &[a, b]) in mesh.edges.iter().enumerate() {
        let (na, nb) = (c.node[a], c.node[b]);
        let w = weights[e];
        if na == nb || w == 0.0 {
            continue;
        }
        let (fa, fb) = (free_index[na], free_index[nb]);
        match (fa != usize::MAX, fb != usize::MAX) {
            (true, true) => {
                trip.push((fa, fa, w));
                trip.push((fb, fb, w));
                trip.push((fa, fb, -w));
                trip.push((fb, fa, -w));
            }
            (true, false) => {
                trip.push((fa, fa, w));
                rhs[fa] += w * value[nb];
            }
            (false, true) => {
                trip.push((fb, fb, w));
                rhs[fb] += w * value[na];
            }
            (false, false) => {}
        }
    }
    if !free.is_empty() {
        let a = Csr::from_triplets(free.len(), trip);
        let x = pcg(&a, &rhs, CG_TOL)?;
        for (k, &i) in free.iter().enumerate() {
            value[i] = x[k];
        }
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::rectangle_mesh;

    #[test]
    fn right_triangle_weights() {
        let w = face_weights([2f64.sqrt(), 1.0, 1.0]).unwrap();
        assert!(w[0].abs() < 1e-15);
        assert!((w[1] - 0.5).abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
        assert!(face_weights([1.0, 1.0, 2.0]).is_none());
    }

    #[test]
    fn contraction_merges_zero_edges() {
        let mut m = rectangle_mesh(1.0, 1.0, 2, 2).unwrap();
        for (e, &[a, b]) in m.edges.clone().iter().enumerate() {
            if (a, b) == (0, 1) || (a, b) == (1, 2) {
                m.edge_length[e] = 0.0;
            }
        }
        let c = contract(&m);
        assert_eq!(c.n_nodes, 7);
        assert_eq!(c.node[0], c.node[2]);
    }

    #[test]
    fn pcg_solves_small_system() {
        let a = Csr::from_triplets(2, vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]);
        let x = pcg(&a, &[1.0, 2.0], 1e-12).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-12 && (x[1] - 7.0 / 11.0).abs() < 1e-12);
    }
}
