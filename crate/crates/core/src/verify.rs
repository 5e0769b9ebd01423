//! Named batteries of numerical checks with measured margins. Each check
//! records the measured value and the threshold it is compared against.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::{default_radii, density_sweep, f_bound, l_of_c, bilip_bound_pipeline};
use crate::error::Result;
use crate::extension::{exp_integrability, exp_threshold, radial_extend, Gauge};
use crate::glued::{GluedMetric, GluedPoint, DEFAULT_SEAM_SAMPLES};
use crate::homeo::{CircleHomeo, FatCantor};
use crate::mesh::rectangle_mesh;
use crate::modulus::{
    annulus_capacity_profile, collapsed_plane_mesh, conjugacy_defect, planar_annulus_modulus, reciprocality_product,
    solve_modulus, CollapseMode, ModulusProblem, RECIPROCALITY_FLOOR,
};
use crate::oracle::chain_oracle;
use crate::seam::{polyline_seam_length, seam_h1};
use crate::sphere::{sigma_unchecked, Hemisphere, SpherePoint};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Suite names accepted by [`run_suite`].
pub const SUITES: [&str; 19] = [
    "axioms", "oracle", "density", "modulus", "extension", "all", "c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9",
    "c10", "c11", "c12", "c13",
];

/// Multiplies a resolution knob, never going below `min`.
fn scaled(n: usize, scale: f64, min: usize) -> usize {
    ((n as f64 * scale).round() as usize).max(min)
}

struct Timer(Instant);

impl Timer {
    fn start() -> Self {
        Self(Instant::now())
    }

    fn check(&self, name: &str, passed: bool, measured: f64, threshold: f64, detail: String) -> Check {
        Check { name: name.into(), passed, measured, threshold, detail, seconds: self.0.elapsed().as_secs_f64() }
    }
}

/// Uniform point of `Z̃`, tagged by the hemisphere it falls in.
pub fn random_glued_point(rng: &mut ChaCha8Rng, metric: &GluedMetric) -> GluedPoint {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let t: f64 = rng.gen_range(0.0..TAU);
    let s = (1.0 - z * z).sqrt();
    let p = SpherePoint::normalized(s * t.cos(), s * t.sin(), z);
    let tag = if z < 0.0 { Hemisphere::South } else { Hemisphere::North };
    metric.point(tag, p).expect("point lies in its hemisphere")
}

/// `n` seeded pairs of uniform points of `Z̃`.
pub fn random_pairs(metric: &GluedMetric, n: usize, seed: u64) -> Vec<(GluedPoint, GluedPoint)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (random_glued_point(&mut rng, metric), random_glued_point(&mut rng, metric))).collect()
}

fn pwl_half_two() -> CircleHomeo {
    CircleHomeo::pwl(&[(0.0, 0.0), (4.0 * PI / 3.0, 2.0 * PI / 3.0), (TAU, TAU)]).expect("valid breakpoints")
}

/// Identity gluing: `d_Z` equals the round distance on random pairs.
pub fn c1_isometric_gluing(scale: f64) -> Result<Check> {
    let t = Timer::start();
    let m = GluedMetric::new(CircleHomeo::identity());
    let pairs = random_pairs(&m, scaled(1000, scale, 10), 1);
    let errs = pairs
        .par_iter()
        .map(|(a, b)| Ok((m.glued_distance(a, b, DEFAULT_SEAM_SAMPLES)? - sigma_unchecked(&a.position, &b.position)).abs()))
        .collect::<Result<Vec<f64>>>()?;
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    let secs = t.0.elapsed().as_secs_f64();
    Ok(t.check(
        "c1.isometric_gluing",
        worst < 1e-6 && secs < 10.0,
        worst,
        1e-6,
        format!("{} pairs, max |d_Z - sigma| = {worst:.3e}, {secs:.2} s (limit 10 s)", pairs.len()),
    ))
}

/// Oracle sandwich and convergence on the power family `(2, 2)`.
pub fn c2_oracle(scale: f64) -> Result<Check> {
    let t = Timer::start();
    let m = GluedMetric::new(CircleHomeo::power(2.0, 2.0)?);
    let pairs = random_pairs(&m, scaled(100, scale, 4), 2);
    let h = scaled(16, scale, 8);
    let rows = pairs
        .par_iter()
        .map(|(a, b)| {
            let gd = m.glued_distance(a, b, DEFAULT_SEAM_SAMPLES)?;
            Ok((gd, chain_oracle(&m, a, b, h)?, chain_oracle(&m, a, b, 2 * h)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let below = rows.iter().filter(|r| r.0 > r.1 + 1e-9 || r.0 > r.2 + 1e-9).count();
    let gap_h: f64 = rows.iter().map(|r| r.1 - r.0).sum::<f64>() / rows.len() as f64;
    let gap_h2: f64 = rows.iter().map(|r| r.2 - r.0).sum::<f64>() / rows.len() as f64;
    let ratio = if gap_h2 > 0.0 { gap_h / gap_h2 } else { f64::INFINITY };
    let secs = t.0.elapsed().as_secs_f64();
    Ok(t.check(
        "c2.oracle_equivalence",
        below == 0 && ratio >= 1.4 && secs < 120.0,
        ratio,
        1.4,
        format!(
            "{} pairs at resolutions {h}/{}: {below} sandwich violations, mean gap {gap_h:.3e} -> {gap_h2:.3e}, {secs:.1} s",
            rows.len(),
            2 * h
        ),
    ))
}

/// Polyline seam length against the seam measure.
pub fn c3_seam_measure(scale: f64) -> Result<Check> {
    let t = Timer::start();
    let n = scaled(1 << 14, scale, 64);
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (name, g, arc) in [
        ("patch 0.5", CircleHomeo::patch(0.5, PI, 1.0)?, (PI - 1.0, PI + 1.0)),
        ("patch 0.5 full circle", CircleHomeo::patch(0.5, PI, 1.0)?, (0.0, TAU)),
        ("cantor", CircleHomeo::cantor(0.5, 8)?, (0.0, TAU)),
        ("cantor on E", CircleHomeo::cantor(0.5, 8)?, (0.2, 3.0)),
    ] {
        let m = GluedMetric::new(g);
        let exact = seam_h1(&m, &[arc])?;
        let poly = polyline_seam_length(&m, arc, n)?;
        let rel = (poly - exact).abs() / exact;
        worst = worst.max(rel);
        detail.push(format!("{name}: {poly:.6} vs {exact:.6}"));
    }
    Ok(t.check("c3.seam_measure", worst < 0.01, worst, 0.01, detail.join("; ")))
}

/// Quotient classes of the fully singular and the Cantor families.
pub fn c4_collapse(scale: f64) -> Result<Check> {
    let t = Timer::start();
    let res = scaled(1 << 14, scale, 256);
    let cell = TAU / res as f64;
    let sing = GluedMetric::new(CircleHomeo::fully_singular(0.3)?).quotient_classes(res);
    let whole = sing.len() == 1 && sing[0].0 == 0.0 && sing[0].1 == TAU;
    let set = FatCantor::new(0.5, 6)?;
    let classes = GluedMetric::new(CircleHomeo::cantor(0.5, 6)?).quotient_classes(res);
    let mut worst: f64 = if classes.len() == set.intervals.len() { 0.0 } else { f64::INFINITY };
    if worst == 0.0 {
        for (c, e) in classes.iter().zip(&set.intervals) {
            worst = worst.max((c.0 - PI * e.0).abs()).max((c.1 - PI * e.1).abs());
        }
    }
    Ok(t.check(
        "c4.collapse_detection",
        whole && worst <= cell,
        worst / cell,
        1.0,
        format!(
            "fully singular: {} class(es){}; cantor: {} classes for {} intervals, worst endpoint error {:.2} cells",
            sing.len(),
            if whole { " covering the seam" } else { "" },
            classes.len(),
            set.intervals.len(),
            worst / cell
        ),
    ))
}

/// South density of `v_g ≡ ε` patches against `f(ε)`.
pub fn c5_density(scale: f64) -> Result<Vec<Check>> {
    let quad = scaled(48, scale, 16);
    [0.25, 0.5, 1.0]
        .iter()
        .map(|&eps| {
            let t = Timer::start();
            let m = GluedMetric::new(CircleHomeo::patch(eps, 1.0, 1.0)?);
            let rep = density_sweep(&m, 1.0, &default_radii(), quad)?;
            let f = f_bound(eps)?;
            let rel = (rep.c1 - f).abs() / f;
            let secs = t.0.elapsed().as_secs_f64();
            Ok(t.check(
                &format!("c5.density_sharpness.eps_{eps}"),
                rel < 0.05 && secs < 600.0,
                rel,
                0.05,
                format!("south density {:.5} vs f = {f:.5}, north {:.5}, {secs:.1} s", rep.c1, rep.c2),
            ))
        })
        .collect()
}

/// Bi-Lipschitz bounds from measured densities on PWL families.
pub fn c6_constant_pipeline(scale: f64) -> Result<Vec<Check>> {
    let quad = scaled(48, scale, 16);
    let families: [(&str, Vec<(f64, f64)>); 2] = [
        ("slopes 1/2, 2", vec![(0.0, 0.0), (4.0 * PI / 3.0, 2.0 * PI / 3.0), (TAU, TAU)]),
        ("slopes 2/3, 3/2", vec![(0.0, 0.0), (1.2 * PI, 0.8 * PI), (TAU, TAU)]),
    ];
    let mut out = Vec::new();
    for (name, bp) in families {
        let t = Timer::start();
        let g = CircleHomeo::pwl(&bp)?;
        let samples = [0.5 * bp[1].0, 0.5 * (bp[1].0 + TAU)];
        let m = GluedMetric::new(g);
        let rep = bilip_bound_pipeline(&m, &samples, &default_radii(), quad, 720)?;
        let worst = [rep.bound_pi_c, rep.bound_remark, rep.bound_l]
            .iter()
            .map(|b| rep.measured_bilip / b)
            .fold(0.0, f64::max);
        out.push(t.check(
            &format!("c6.constant_pipeline.{}", name.replace([' ', ','], "_").replace("__", "_")),
            rep.consistent(0.05),
            worst,
            1.05,
            format!(
                "{name}: measured {:.4}, C' = {:.4}, bounds pi C' = {:.4}, (C'-1/2)pi = {:.4}, L(C'-1/2) = {:.4}",
                rep.measured_bilip, rep.c_prime, rep.bound_pi_c, rep.bound_remark, rep.bound_l
            ),
        ));
    }
    let t = Timer::start();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..1000 {
        let c = 0.5 + 9.5 * i as f64 / 999.0;
        worst = worst.max(l_of_c(c)? - PI * c);
    }
    out.push(t.check(
        "c6.l_below_pi_c",
        worst <= 1e-9,
        worst,
        1e-9,
        format!("max L(C) - pi C over 1000 values of C in [0.5, 10]: {worst:.3e}"),
    ));
    Ok(out)
}

/// Radial extension of the PWL map with slopes `{1/2, 2}`.
pub fn c7_radial_extension(scale: f64) -> Result<Check> {
    let t = Timer::start();
    let e = radial_extend(&pwl_half_two());
    let l = e.bilip_constant(scaled(32, scale, 8), scaled(2000, scale, 100), 7);
    Ok(t.check(
        "c7.radial_extension",
        (2.0 * 0.97..=2.0 * 1.03).contains(&l),
        l,
        2.0,
        format!("sampled bi-Lipschitz constant {l:.5}, accepted range [1.94, 2.06]"),
    ))
}

/// Flat rectangles: modulus, reciprocality and the `κ₀` floor.
pub fn c8_rectangles(scale: f64) -> Result<Vec<Check>> {
    let n = scaled(200, scale, 8);
    [(1.0, 1.0), (1.0, 2.0), (1.0, 4.0)]
        .iter()
        .map(|&(a, b)| {
            let t = Timer::start();
            let mesh = rectangle_mesh(a, b, n, n)?;
            let s = solve_modulus(&ModulusProblem::quadrilateral(&mesh, "xi1", "xi3")?)?;
            let prod = reciprocality_product(&mesh)?;
            let err = (s.value - b / a).abs() / (b / a);
            let perr = (prod - 1.0).abs();
            let floor = s.value.min(prod) >= RECIPROCALITY_FLOOR - 0.02;
            Ok(t.check(
                &format!("c8.rectangle_{a}x{b}"),
                err < 0.02 && perr < 0.04 && floor,
                err,
                0.02,
                format!(
                    "{n}x{n} grid: Mod {:.6} vs {:.6}, product {prod:.6}, residual {:.2e} over {} paths",
                    s.value,
                    b / a,
                    s.residual,
                    s.paths_checked
                ),
            ))
        })
        .collect()
}

/// Planar annulus against `2π/log 10`.
pub fn c9_annulus(scale: f64) -> Result<Check> {
    let t = Timer::start();
    let ns = scaled(192, scale, 24);
    let nr = ((ns as f64) * 10f64.ln() / TAU).ceil() as usize;
    let v = planar_annulus_modulus(0.1, 1.0, nr, ns)?;
    let exact = TAU / 10f64.ln();
    let rel = (v - exact).abs() / exact;
    Ok(t.check("c9.annulus_law", rel < 0.03, rel, 0.03, format!("{nr} rings x {ns} sectors: {v:.5} vs {exact:.5}")))
}

/// Annulus capacity profiles at the critical point of the power family.
pub fn c10_power_capacity(scale: f64) -> Result<Check> {
    let t = Timer::start();
    let big_r = 0.5;
    let radii: Vec<f64> = (1..=4).map(|k| big_r / 2f64.powi(k)).collect();
    let opts = crate::modulus::GluedMeshOptions {
        finest: radii[3] / 8.0,
        ratio: 1.0 - 0.1 * scale.min(1.0),
        graded_extent: 2.0 * big_r,
        ..Default::default()
    };
    let one_two = annulus_capacity_profile(&GluedMetric::new(CircleHomeo::power(1.0, 2.0)?), 0.0, big_r, &radii, Some(opts))?;
    let two_two = annulus_capacity_profile(&GluedMetric::new(CircleHomeo::power(2.0, 2.0)?), 0.0, big_r, &radii, Some(opts))?;
    let lo = one_two.iter().map(|r| r.modulus).fold(f64::INFINITY, f64::min);
    let monotone = two_two.windows(2).all(|w| w[1].modulus < w[0].modulus);
    let decay = two_two[0].modulus / two_two[3].modulus;
    let fmt = |rows: &[crate::modulus::CapacityRow]| rows.iter().map(|r| format!("{:.4}", r.modulus)).collect::<Vec<_>>().join(", ");
    Ok(t.check(
        "c10.power_capacity",
        lo >= 0.05 && monotone && decay >= 3.0,
        decay,
        3.0,
        format!("(1,2): [{}], min {lo:.4}; (2,2): [{}], decay x{decay:.3}", fmt(&one_two), fmt(&two_two)),
    ))
}

/// Left-right modulus across the collapsed fat Cantor segment.
pub fn c11_cantor_capacity(scale: f64) -> Result<Check> {
    let t = Timer::start();
    let n = scaled(96, scale, 24);
    let mut vals = Vec::new();
    for k in [4, 5, 6] {
        let set = FatCantor::new(0.5, k)?;
        let mesh = collapsed_plane_mesh(&set, [-1.0, 2.0, 0.0, 1.0], n, n / 3, CollapseMode::BottomEdge)?;
        let p = ModulusProblem::node_sets(&mesh, mesh.marker("f1")?.to_vec(), mesh.marker("f2")?.to_vec());
        vals.push(solve_modulus(&p)?.value);
    }
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(0.0, f64::max);
    Ok(t.check(
        "c11.cantor_capacity",
        lo >= 0.02,
        lo,
        0.02,
        format!(
            "levels 4, 5, 6: [{}], spread x{:.3}, (4 pi)^-1 = {:.4}",
            vals.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", "),
            hi / lo,
            1.0 / (4.0 * PI)
        ),
    ))
}

/// Conjugate of the left-right potential against the bottom-top potential.
pub fn c12_uniformizer(scale: f64) -> Result<Check> {
    let t = Timer::start();
    let n = scaled(80, scale, 8);
    let mesh = rectangle_mesh(2.0, 1.0, n, n / 2)?;
    let d = conjugacy_defect(&mesh)?;
    Ok(t.check("c12.uniformizer_conjugacy", d < 0.03, d, 0.03, format!("sup |v - M u'| / M = {d:.3e}")))
}

/// Exponential integrability of distortion.
pub fn c13_integrability(scale: f64) -> Result<Vec<Check>> {
    let n = scaled(16, scale, 4);
    let mut out = Vec::new();
    let t = Timer::start();
    let mut worst: f64 = 0.0;
    let mut finite = true;
    let mut detail = Vec::new();
    for (name, g) in [
        ("pwl 1/2,2", pwl_half_two()),
        ("patch 0.5", CircleHomeo::patch(0.5, 1.0, 1.0)?),
        ("rotation", CircleHomeo::rotation(0.3)),
    ] {
        let rep = exp_integrability(&radial_extend(&g), &Gauge::ExpP { p: 1.0 }, n)?;
        let v = &rep.levels;
        let drift = (v[3].1 - v[2].1).abs() / v[3].1;
        finite &= !rep.divergent;
        worst = worst.max(drift);
        detail.push(format!("{name}: {:.5} (drift {drift:.1e})", v[3].1));
    }
    out.push(t.check("c13.bilipschitz_integrable", finite && worst < 0.01, worst, 0.01, detail.join("; ")));
    let t = Timer::start();
    let ext = radial_extend(&CircleHomeo::power(1.0, 2.0)?);
    let rep = exp_threshold(&ext, &[n, 2 * n, 4 * n], 1e-3, 10.0)?;
    out.push(t.check(
        "c13.power_threshold_stability",
        rep.spread <= 0.2,
        rep.spread,
        0.2,
        format!(
            "p* per base resolution: [{}]",
            rep.thresholds.iter().map(|(n, p)| format!("{n}: {p:.4}")).collect::<Vec<_>>().join(", ")
        ),
    ));
    Ok(out)
}

/// Metric axioms of `d_Z` on a non-trivial gluing, sampled.
pub fn metric_axioms(scale: f64) -> Result<Vec<Check>> {
    let t = Timer::start();
    let m = GluedMetric::new(CircleHomeo::power(1.0, 2.0)?);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let triples: Vec<[GluedPoint; 3]> = (0..scaled(60, scale, 5))
        .map(|_| [0, 1, 2].map(|_| random_glued_point(&mut rng, &m)))
        .collect();
    let rows = triples
        .par_iter()
        .map(|[a, b, c]| {
            let n = DEFAULT_SEAM_SAMPLES;
            let (ab, ba) = (m.glued_distance(a, b, n)?, m.glued_distance(b, a, n)?);
            let (bc, ac) = (m.glued_distance(b, c, n)?, m.glued_distance(a, c, n)?);
            let aa = m.glued_distance(a, a, n)?;
            let pre = m.predistance(a, b);
            Ok(((ab - ba).abs(), ac - ab - bc, aa, ab - pre))
        })
        .collect::<Result<Vec<_>>>()?;
    let sym = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let tri = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let zero = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let lip = rows.iter().map(|r| r.3).fold(f64::NEG_INFINITY, f64::max);
    Ok(vec![
        t.check("axioms.symmetry", sym < 1e-9, sym, 1e-9, format!("max |d(a,b) - d(b,a)| = {sym:.2e}")),
        t.check("axioms.triangle", tri < 1e-9, tri, 1e-9, format!("max d(a,c) - d(a,b) - d(b,c) = {tri:.2e}")),
        t.check("axioms.identity", zero < 1e-12, zero, 1e-12, format!("max d(a,a) = {zero:.2e}")),
        t.check("axioms.inclusions_1_lipschitz", lip < 1e-12, lip, 1e-12, format!("max d(a,b) - D(a,b) = {lip:.2e}")),
    ])
}

/// One acceptance criterion by number, as a list of checks.
pub fn criterion(n: u32, scale: f64) -> Result<Vec<Check>> {
    Ok(match n {
        1 => vec![c1_isometric_gluing(scale)?],
        2 => vec![c2_oracle(scale)?],
        3 => vec![c3_seam_measure(scale)?],
        4 => vec![c4_collapse(scale)?],
        5 => c5_density(scale)?,
        6 => c6_constant_pipeline(scale)?,
        7 => vec![c7_radial_extension(scale)?],
        8 => c8_rectangles(scale)?,
        9 => vec![c9_annulus(scale)?],
        10 => vec![c10_power_capacity(scale)?],
        11 => vec![c11_cantor_capacity(scale)?],
        12 => vec![c12_uniformizer(scale)?],
        13 => c13_integrability(scale)?,
        _ => return Err(crate::Error::Config(format!("there is no criterion {n}"))),
    })
}

/// Runs a named suite. `scale` multiplies the resolution knobs.
pub fn run_suite(name: &str, scale: f64) -> Result<SuiteReport> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(crate::Error::Config(format!("resolution scale must be positive, got {scale}")));
    }
    let numbers: Vec<u32> = match name {
        "axioms" => vec![1, 3, 4],
        "oracle" => vec![2],
        "density" => vec![5, 6],
        "modulus" => vec![8, 9, 10, 11, 12],
        "extension" => vec![7, 13],
        "all" => (1..=13).collect(),
        s if s.starts_with('c') => match s[1..].parse::<u32>() {
            Ok(n) if (1..=13).contains(&n) => vec![n],
            _ => return Err(crate::Error::Config(format!("unknown suite '{name}'"))),
        },
        _ => return Err(crate::Error::Config(format!("unknown suite '{name}', expected one of {}", SUITES.join(", ")))),
    };
    let mut checks = Vec::new();
    if name == "axioms" || name == "all" {
        checks.extend(metric_axioms(scale)?);
    }
    for n in numbers {
        checks.extend(criterion(n, scale)?);
    }
    Ok(SuiteReport { suite: name.into(), checks })
}
