//! Brute-force chain graph for `d_Z`: polar grids on both hemispheres with
//! identified seam nodes, edges weighted by the predistance, and Dijkstra.
//!
//! Memory: the graph stores one position per node and generates edges on the
//! fly, so the footprint is about 40 bytes per node. Grids above
//! [`MAX_ORACLE_NODES`] nodes are refused with [`Error::Resource`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{domain, Error, Result};
use crate::glued::{GluedMetric, GluedPoint};
use crate::numeric::{arc_distance, gcd};
use crate::sphere::{sigma_unchecked, Hemisphere, SpherePoint};

/// Largest node count accepted by [`chain_oracle`] (about 80 MB of state).
pub const MAX_ORACLE_NODES: usize = 2_000_000;

/// Stencil radius used at a given grid resolution. A fixed 8-neighbour
/// stencil leaves an `O(1)` relative error on grid paths; growing the
/// stencil with the resolution makes the graph distance converge.
pub fn stencil_radius(resolution: usize) -> usize {
    ((resolution as f64 / 2.0).sqrt().ceil() as usize).max(1)
}

struct ChainGraph<'a> {
    metric: &'a GluedMetric,
    res: usize,
    /// South seam angles, increasing in `[0, 2π)`.
    phi: Vec<f64>,
    /// Matching north seam angles `G(φ)`.
    psi: Vec<f64>,
    pos: Vec<SpherePoint>,
    stencil: Vec<(isize, isize)>,
    k: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Pole(Hemisphere),
    Grid(Hemisphere, usize, usize),
}

impl<'a> ChainGraph<'a> {
    fn new(metric: &'a GluedMetric, res: usize) -> Result<Self> {
        let g = metric.homeo();
        let s0 = 4 * res;
        let mut phi: Vec<f64> = (0..s0).map(|i| TAU * i as f64 / s0 as f64).collect();
        phi.extend((0..s0).map(|i| crate::numeric::wrap_angle(g.inverse_lift(g.lift(0.0) + TAU * i as f64 / s0 as f64))));
        phi.sort_by(|a, b| a.total_cmp(b));
        phi.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let psi: Vec<f64> = phi.iter().map(|&t| g.lift(t)).collect();
        let ns = phi.len();
        let nodes = 2 + (2 * res - 1) * ns;
        if nodes > MAX_ORACLE_NODES {
            return Err(Error::Resource(format!("chain graph would need {nodes} nodes (limit {MAX_ORACLE_NODES})")));
        }
        let k = stencil_radius(res);
        let ki = k as isize;
        let mut stencil = Vec::new();
        for dj in -ki..=ki {
            for ds in -ki..=ki {
                if (dj, ds) != (0, 0) && gcd(dj.unsigned_abs(), ds.unsigned_abs()) == 1 {
                    stencil.push((dj, ds));
                }
            }
        }
        let mut gr = Self { metric, res, phi, psi, pos: Vec::new(), stencil, k };
        let mut pos = vec![SpherePoint::equator(0.0); nodes];
        pos[gr.id(Slot::Pole(Hemisphere::South))] = SpherePoint { x: 0.0, y: 0.0, z: -1.0 };
        pos[gr.id(Slot::Pole(Hemisphere::North))] = SpherePoint { x: 0.0, y: 0.0, z: 1.0 };
        for tag in [Hemisphere::South, Hemisphere::North] {
            for j in 1..=res {
                for s in 0..ns {
                    let id = gr.id(Slot::Grid(tag, j, s));
                    pos[id] = gr.position(tag, j, s);
                }
            }
        }
        gr.pos = pos;
        Ok(gr)
    }

    fn ns(&self) -> usize {
        self.phi.len()
    }

    fn nodes(&self) -> usize {
        2 + (2 * self.res - 1) * self.ns()
    }

    /// Ring `j` sits at distance `π/2 · j/res` from the pole; ring `res` is the seam.
    fn position(&self, tag: Hemisphere, j: usize, s: usize) -> SpherePoint {
        let colat = FRAC_PI_2 * j as f64 / self.res as f64;
        let lat = FRAC_PI_2 - colat;
        match tag {
            Hemisphere::South => SpherePoint::from_lon_lat(self.phi[s], -lat),
            Hemisphere::North => SpherePoint::from_lon_lat(self.psi[s], lat),
        }
    }

    fn id(&self, slot: Slot) -> usize {
        let ns = self.ns();
        match slot {
            Slot::Pole(Hemisphere::South) => 0,
            Slot::Pole(Hemisphere::North) => 1,
            Slot::Grid(_, j, s) if j == self.res => 2 + (self.res - 1) * ns + s,
            Slot::Grid(Hemisphere::South, j, s) => 2 + (j - 1) * ns + s,
            Slot::Grid(Hemisphere::North, j, s) => 2 + self.res * ns + (j - 1) * ns + s,
        }
    }

    fn slots(&self, id: usize) -> Vec<Slot> {
        let ns = self.ns();
        match id {
            0 => vec![Slot::Pole(Hemisphere::South)],
            1 => vec![Slot::Pole(Hemisphere::North)],
            _ => {
                let r = id - 2;
                let (block, s) = (r / ns, r % ns);
                if block < self.res - 1 {
                    vec![Slot::Grid(Hemisphere::South, block + 1, s)]
                } else if block == self.res - 1 {
                    vec![Slot::Grid(Hemisphere::South, self.res, s), Slot::Grid(Hemisphere::North, self.res, s)]
                } else {
                    vec![Slot::Grid(Hemisphere::North, block - self.res + 1, s)]
                }
            }
        }
    }

    fn seam_index(&self, id: usize) -> Option<usize> {
        let ns = self.ns();
        let lo = 2 + (self.res - 1) * ns;
        (lo..lo + ns).contains(&id).then(|| id - lo)
    }

    /// Predistance between two nodes of the same closed hemisphere.
    fn weight(&self, tag: Hemisphere, a: usize, b: usize) -> f64 {
        if let (Some(i), Some(j)) = (self.seam_index(a), self.seam_index(b)) {
            return arc_distance(self.phi[i], self.phi[j]).min(arc_distance(self.psi[i], self.psi[j]));
        }
        sigma_unchecked(&self.pos_in(tag, a), &self.pos_in(tag, b))
    }

    /// Position of a node in the chart of `tag`; seam nodes differ between charts.
    fn pos_in(&self, tag: Hemisphere, id: usize) -> SpherePoint {
        match (self.seam_index(id), tag) {
            (Some(i), Hemisphere::South) => SpherePoint::equator(self.phi[i]),
            (Some(i), Hemisphere::North) => SpherePoint::equator(self.psi[i]),
            (None, _) => self.pos[id],
        }
    }

    fn for_each_neighbor<F: FnMut(usize, f64)>(&self, id: usize, mut f: F) {
        let ns = self.ns() as isize;
        for slot in self.slots(id) {
            match slot {
                Slot::Pole(tag) => {
                    for j in 1..=self.k.min(self.res) {
                        for s in 0..self.ns() {
                            let b = self.id(Slot::Grid(tag, j, s));
                            f(b, self.weight(tag, id, b));
                        }
                    }
                }
                Slot::Grid(tag, j, s) => {
                    if j <= self.k {
                        let p = self.id(Slot::Pole(tag));
                        f(p, self.weight(tag, id, p));
                    }
                    for &(dj, ds) in &self.stencil {
                        let jj = j as isize + dj;
                        if jj < 1 || jj > self.res as isize {
                            continue;
                        }
                        let ss = (s as isize + ds).rem_euclid(ns) as usize;
                        let b = self.id(Slot::Grid(tag, jj as usize, ss));
                        f(b, self.weight(tag, id, b));
                    }
                }
            }
        }
    }

    /// Grid nodes near a query point, with the predistance to each.
    fn attach(&self, q: &GluedPoint) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for tag in [Hemisphere::South, Hemisphere::North] {
            let Some(p) = self.metric.position_in(q, tag) else { continue };
            let colat = FRAC_PI_2 - p.latitude().abs();
            let jc = (colat / FRAC_PI_2 * self.res as f64).round() as isize;
            let lon = crate::numeric::wrap_angle(p.longitude());
            let angles = match tag {
                Hemisphere::South => &self.phi,
                Hemisphere::North => &self.psi,
            };
            let wrapped: Vec<f64> = angles.iter().map(|&a| crate::numeric::wrap_angle(a)).collect();
            let sc = (0..wrapped.len())
                .min_by(|&x, &y| arc_distance(wrapped[x], lon).total_cmp(&arc_distance(wrapped[y], lon)))
                .unwrap_or(0) as isize;
            let ki = self.k as isize;
            let ns = self.ns() as isize;
            if jc <= ki {
                let pole = self.id(Slot::Pole(tag));
                out.push((pole, sigma_unchecked(&p, &self.pos_in(tag, pole))));
            }
            for dj in -ki..=ki {
                let jj = jc + dj;
                if jj < 1 || jj > self.res as isize {
                    continue;
                }
                for ds in -ki..=ki {
                    let ss = (sc + ds).rem_euclid(ns) as usize;
                    let b = self.id(Slot::Grid(tag, jj as usize, ss));
                    let w = match (q.seam, self.seam_index(b)) {
                        (Some(x), Some(i)) => arc_distance(x, self.phi[i]).min(arc_distance(self.metric.homeo().lift(x), self.psi[i])),
                        _ => sigma_unchecked(&p, &self.pos_in(tag, b)),
                    };
                    out.push((b, w));
                }
            }
        }
        out
    }
}

#[derive(PartialEq)]
struct State(f64, usize);

impl Eq for State {}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Shortest chain length from `a` to `b` in the chain graph at `resolution`
/// rings per hemisphere. An upper bound of `d_Z(a, b)`.
pub fn chain_oracle(metric: &GluedMetric, a: &GluedPoint, b: &GluedPoint, resolution: usize) -> Result<f64> {
    Ok(chain_oracle_many(metric, a, std::slice::from_ref(b), resolution)?[0])
}

/// One Dijkstra run from `a` answering several targets.
pub fn chain_oracle_many(metric: &GluedMetric, a: &GluedPoint, targets: &[GluedPoint], resolution: usize) -> Result<Vec<f64>> {
    if resolution < 2 {
        return domain(format!("oracle resolution must be >= 2, got {resolution}"));
    }
    let gr = ChainGraph::new(metric, resolution)?;
    let n = gr.nodes();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for (v, w) in gr.attach(a) {
        if w < dist[v] {
            dist[v] = w;
            heap.push(State(w, v));
        }
    }
    let attached: Vec<Vec<(usize, f64)>> = targets.iter().map(|t| gr.attach(t)).collect();
    // stop once every target is settled through its attachment window
    let bound = |dist: &[f64]| -> f64 {
        attached
            .iter()
            .map(|att| att.iter().map(|&(v, w)| dist[v] + w).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    let mut settled = vec![false; n];
    let mut pops = 0usize;
    while let Some(State(d, v)) = heap.pop() {
        if settled[v] || d > dist[v] {
            continue;
        }
        settled[v] = true;
        pops += 1;
        if pops.is_multiple_of(4096) && d > bound(&dist) {
            break;
        }
        gr.for_each_neighbor(v, |u, w| {
            let nd = d + w;
            if nd < dist[u] {
                dist[u] = nd;
                heap.push(State(nd, u));
            }
        });
    }
    Ok(targets
        .iter()
        .zip(&attached)
        .map(|(t, att)| {
            let via = att.iter().map(|&(v, w)| dist[v] + w).fold(f64::INFINITY, f64::min);
            via.min(metric.predistance(a, t))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homeo::CircleHomeo;
    use crate::sphere::SpherePoint;

    #[test]
    fn identity_oracle_matches_sigma() {
        let m = GluedMetric::new(CircleHomeo::identity());
        let a = m.point(Hemisphere::South, SpherePoint::from_lon_lat(0.3, -0.7)).unwrap();
        let b = m.point(Hemisphere::North, SpherePoint::from_lon_lat(2.0, 0.4)).unwrap();
        let exact = sigma_unchecked(&a.position, &b.position);
        let d = chain_oracle(&m, &a, &b, 24).unwrap();
        assert!(d >= exact - 1e-12);
        assert!(d - exact < FRAC_PI_2 / 24.0, "{d} vs {exact}");
    }

    #[test]
    fn oracle_bounds_glued_distance() {
        let m = GluedMetric::new(CircleHomeo::power(2.0, 2.0).unwrap());
        let a = m.point(Hemisphere::South, SpherePoint::from_lon_lat(0.5, -0.3)).unwrap();
        let b = m.point(Hemisphere::North, SpherePoint::from_lon_lat(2.5, 0.2)).unwrap();
        let gd = m.glued_distance(&a, &b, 512).unwrap();
        let o = chain_oracle(&m, &a, &b, 16).unwrap();
        assert!(o >= gd - 1e-9, "{o} < {gd}");
    }

    #[test]
    fn singular_seam_points_approach_zero() {
        let m = GluedMetric::new(CircleHomeo::fully_singular(0.3).unwrap());
        let (a, b) = (GluedPoint::seam(0.5), GluedPoint::seam(3.0));
        let coarse = chain_oracle(&m, &a, &b, 8).unwrap();
        let fine = chain_oracle(&m, &a, &b, 32).unwrap();
        assert!(fine < coarse, "{fine} vs {coarse}");
    }

    #[test]
    fn resource_limit_is_enforced() {
        let m = GluedMetric::new(CircleHomeo::identity());
        let (a, b) = (GluedPoint::seam(0.5), GluedPoint::seam(3.0));
        assert!(matches!(chain_oracle(&m, &a, &b, 2000), Err(Error::Resource(_))));
    }
}
