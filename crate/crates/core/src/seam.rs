//! Hausdorff measure of seam images and collapse diagnostics.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::glued::GluedMetric;

/// Relative threshold below which an arc counts as collapsed.
pub const COLLAPSE_TOL: f64 = 1e-9;

/// Tabulated seam density and its prefix sums.
#[derive(Debug, Clone, Serialize)]
pub struct SeamProfile {
    pub theta: Vec<f64>,
    /// Cell averages of `min{1, v_g}`.
    pub density: Vec<f64>,
    /// `prefix[i] = ∫_0^{theta[i]} min{1, v_g}`, with one extra final entry.
    pub prefix: Vec<f64>,
    pub collapsed: Vec<(f64, f64)>,
}

pub fn seam_profile(metric: &GluedMetric, n: usize) -> SeamProfile {
    let n = n.max(4);
    let h = TAU / n as f64;
    let theta: Vec<f64> = (0..n).map(|i| h * i as f64).collect();
    let prefix: Vec<f64> = (0..=n).map(|i| metric.cumulative(h * i as f64)).collect();
    let density = prefix.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    SeamProfile { theta, density, prefix, collapsed: metric.quotient_classes(n) }
}

/// Normalises arcs to start in `[0, 2π)` and rejects overlaps.
fn checked_arcs(arcs: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(arcs.len());
    for &(a, b) in arcs {
        if !(a.is_finite() && b.is_finite()) || b < a || b - a > TAU + 1e-12 {
            return domain(format!("arc ({a}, {b}) must satisfy a <= b <= a + 2π"));
        }
        let s = crate::numeric::wrap_angle(a);
        out.push((s, s + (b - a)));
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    for w in out.windows(2) {
        if w[1].0 < w[0].1 - 1e-12 {
            return domain(format!("arcs {:?} and {:?} overlap", w[0], w[1]));
        }
    }
    if let (Some(first), Some(last)) = (out.first(), out.last()) {
        if last.1 > first.0 + TAU + 1e-12 {
            return domain(format!("arcs {last:?} and {first:?} overlap"));
        }
    }
    Ok(out)
}

/// `∫_B min{1, v_g}` over a union of disjoint arcs `(start, end)` with `end ≥ start`.
pub fn seam_h1(metric: &GluedMetric, arcs: &[(f64, f64)]) -> Result<f64> {
    let arcs = checked_arcs(arcs)?;
    Ok(arcs.iter().map(|&(a, b)| metric.cumulative(b) - metric.cumulative(a)).sum())
}

/// `ν^{ABS}(B)`: the seam measure of `B` with the singular support removed.
pub fn nu_abs(metric: &GluedMetric, arcs: &[(f64, f64)]) -> Result<f64> {
    let arcs = checked_arcs(arcs)?;
    let singular = metric.homeo().singular_support();
    let mut total = 0.0;
    for &(a, b) in &arcs {
        let mut v = metric.cumulative(b) - metric.cumulative(a);
        for shift in [-TAU, 0.0, TAU] {
            for &(s, e) in singular {
                let (lo, hi) = (a.max(s + shift), b.min(e + shift));
                if hi > lo {
                    v -= metric.cumulative(hi) - metric.cumulative(lo);
                }
            }
        }
        total += v;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Collapsing,
    Surviving,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanRow {
    pub theta_start: f64,
    pub theta_end: f64,
    pub h1: f64,
    pub verdict: Verdict,
}

/// Slides a window of length `window` around the seam with stride `window/4`.
pub fn mutual_singularity_scan(metric: &GluedMetric, window: f64) -> Result<Vec<ScanRow>> {
    if !(window > 0.0 && window <= TAU) {
        return domain(format!("scan window must lie in (0, 2π], got {window}"));
    }
    let stride = window / 4.0;
    let n = (TAU / stride).ceil() as usize;
    Ok((0..n)
        .map(|i| {
            let a = stride * i as f64;
            let b = a + window;
            let h1 = metric.cumulative(b) - metric.cumulative(a);
            let verdict = if h1 <= COLLAPSE_TOL * window { Verdict::Collapsing } else { Verdict::Surviving };
            ScanRow { theta_start: a, theta_end: b, h1, verdict }
        })
        .collect())
}

/// Sum of seam distances over a uniform partition of `(a, b)` into
/// `resolution − 1` steps; a lower bound of the seam measure of the arc.
pub fn polyline_seam_length(metric: &GluedMetric, arc: (f64, f64), resolution: usize) -> Result<f64> {
    if resolution < 2 {
        return domain(format!("polyline needs at least 2 points, got {resolution}"));
    }
    let (a, b) = arc;
    if b < a {
        return domain("arc end precedes its start");
    }
    let h = (b - a) / (resolution - 1) as f64;
    let mut total = 0.0;
    let mut prev = a;
    for i in 1..resolution {
        let t = if i == resolution - 1 { b } else { a + h * i as f64 };
        total += metric.seam_distance(prev, t);
        prev = t;
    }
    Ok(total)
}

/// Collapsing windows whose union is not covered by `classes` (measure of
/// the set difference), used to cross-check the scan against the quotient.
pub fn scan_class_mismatch(rows: &[ScanRow], classes: &[(f64, f64)]) -> f64 {
    let mut worst: f64 = 0.0;
    for r in rows.iter().filter(|r| r.verdict == Verdict::Collapsing) {
        let covered = classes.iter().any(|&(a, b)| {
            [-TAU, 0.0, TAU].iter().any(|&s| a + s <= r.theta_start + 1e-9 && r.theta_end <= b + s + 1e-9)
        });
        if !covered {
            worst = worst.max(r.theta_end - r.theta_start);
        }
    }
    worst
}
