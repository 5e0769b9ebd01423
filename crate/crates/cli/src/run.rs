use std::f64::consts::PI;

use gluelab::density::{default_radii, density_sweep};
use gluelab::extension::{beurling_ahlfors_extend, distortion_field, exp_integrability, radial_extend, DistortionField};
use gluelab::glued::GluedMetric;
use gluelab::homeo::FatCantor;
use gluelab::mesh::{planar_annulus_mesh, rectangle_mesh};
use gluelab::modulus::{annulus_capacity_profile, collapsed_plane_mesh, dump_json, solve_modulus, CollapseMode, ModulusProblem};
use gluelab::oracle::chain_oracle;
use gluelab::seam::{mutual_singularity_scan, scan_class_mismatch};
use gluelab::sphere::sigma_unchecked;
use gluelab::verify::random_pairs;
use rayon::prelude::*;
use serde_json::json;

use crate::output::{csv_bytes, fmt12, json_bytes, Artifact};
use crate::scenario::{Experiment, ExtensionMethod, MeshSpec, Scenario};

/// Error raised while running a pipeline, with the operation that failed.
#[derive(Debug)]
pub struct Failure {
    pub operation: &'static str,
    pub error: gluelab::Error,
}

trait Op<T> {
    fn op(self, operation: &'static str) -> Result<T, Failure>;
}

impl<T> Op<T> for gluelab::Result<T> {
    fn op(self, operation: &'static str) -> Result<T, Failure> {
        self.map_err(|error| Failure { operation, error })
    }
}

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// Description of a violated invariant, if any.
    pub violation: Option<String>,
}

fn tag(p: &gluelab::GluedPoint) -> String {
    match (p.is_seam(), p.tag) {
        (true, _) => "seam".into(),
        (false, gluelab::Hemisphere::South) => "south".into(),
        (false, gluelab::Hemisphere::North) => "north".into(),
    }
}

fn scaled(n: usize, scale: f64, min: usize) -> usize {
    ((n as f64 * scale).round() as usize).max(min)
}

pub fn run(s: &Scenario, metric: &GluedMetric, scale: f64) -> Result<Outcome, Failure> {
    match &s.experiment {
        Experiment::Distance { pairs, seam_samples, oracle_resolution, max_sigma_gap } => {
            let samples = scaled(*seam_samples, scale, 16);
            let oracle = oracle_resolution.map(|r| scaled(r, scale, 4));
            let list = random_pairs(metric, *pairs, s.seed);
            let rows = list
                .par_iter()
                .map(|(a, b)| {
                    let d = metric.glued_distance(a, b, samples).op("glued_distance")?;
                    let o = match oracle {
                        Some(h) => Some(chain_oracle(metric, a, b, h).op("chain_oracle")?),
                        None => None,
                    };
                    Ok((sigma_unchecked(&a.position, &b.position), metric.predistance(a, b), d, o))
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            let mut header = vec!["pair", "tag_a", "tag_b", "sigma", "predistance", "d_z"];
            if oracle.is_some() {
                header.push("oracle");
            }
            let table = rows.iter().zip(&list).enumerate().map(|(i, (r, (a, b)))| {
                let mut row = vec![i.to_string(), tag(a), tag(b), fmt12(r.0), fmt12(r.1), fmt12(r.2)];
                if let Some(o) = r.3 {
                    row.push(fmt12(o));
                }
                row
            });
            let gap = rows.iter().map(|r| (r.2 - r.0).abs()).fold(0.0, f64::max);
            let violation = max_sigma_gap
                .filter(|&limit| !(gap < limit))
                .map(|limit| format!("max |d_Z - sigma| = {} exceeds {}", fmt12(gap), fmt12(limit)));
            Ok(Outcome {
                artifacts: vec![
                    Artifact::new("distances.csv", csv_bytes(&header, table)),
                    Artifact::new("summary.json", json_bytes(&json!({ "pairs": rows.len(), "max_sigma_gap": fmt12(gap) }))),
                ],
                violation,
            })
        }
        Experiment::Seam { window, class_resolution } => {
            let rows = mutual_singularity_scan(metric, *window).op("mutual_singularity_scan")?;
            let classes = metric.quotient_classes(scaled(*class_resolution, scale, 16));
            let table = rows.iter().map(|r| {
                vec![fmt12(r.theta_start), fmt12(r.theta_end), fmt12(r.h1), format!("{:?}", r.verdict).to_lowercase()]
            });
            let summary = json!({
                "total_measure": fmt12(metric.total_seam_measure()),
                "collapsing_windows": rows.iter().filter(|r| r.verdict == gluelab::seam::Verdict::Collapsing).count(),
                "quotient_classes": classes.iter().map(|c| [fmt12(c.0), fmt12(c.1)]).collect::<Vec<_>>(),
                "scan_class_mismatch": fmt12(scan_class_mismatch(&rows, &classes)),
            });
            Ok(Outcome {
                artifacts: vec![
                    Artifact::new("seam_scan.csv", csv_bytes(&["theta_start", "theta_end", "h1", "verdict"], table)),
                    Artifact::new("summary.json", json_bytes(&summary)),
                ],
                violation: None,
            })
        }
        Experiment::Density { points, radii, quad_resolution } => {
            let radii = radii.clone().unwrap_or_else(default_radii);
            let quad = scaled(*quad_resolution, scale, 8);
            let reports = points
                .iter()
                .map(|&p| density_sweep(metric, p, &radii, quad).op("density_sweep"))
                .collect::<Result<Vec<_>, Failure>>()?;
            let table = reports.iter().flat_map(|rep| {
                rep.rows
                    .iter()
                    .map(move |r| vec![fmt12(rep.theta0), fmt12(r.radius), fmt12(r.south), fmt12(r.north), fmt12(r.ratio)])
            });
            let summary: Vec<_> = reports
                .iter()
                .map(|r| json!({ "point": fmt12(r.theta0), "c1": fmt12(r.c1), "c2": fmt12(r.c2), "c": fmt12(r.c), "estimate": r.estimate }))
                .collect();
            Ok(Outcome {
                artifacts: vec![
                    Artifact::new("density.csv", csv_bytes(&["point", "radius", "south", "north", "ratio"], table)),
                    Artifact::new("summary.json", json_bytes(&json!({ "points": summary }))),
                ],
                violation: None,
            })
        }
        Experiment::Extension { method, n_r, n_theta, gauge, integrability_resolution } => {
            let (nr, nt) = (scaled(*n_r, scale, 2), scaled(*n_theta, scale, 4));
            let mut summary = serde_json::Map::new();
            let field: DistortionField = match method {
                ExtensionMethod::Radial => {
                    let ext = radial_extend(metric.homeo());
                    if let Some(g) = gauge {
                        let rep = exp_integrability(&ext, g, scaled(*integrability_resolution, scale, 2))
                            .op("exp_integrability")?;
                        summary.insert(
                            "integrability".into(),
                            json!({
                                "levels": rep.levels.iter().map(|(n, v)| json!([n, fmt12(*v)])).collect::<Vec<_>>(),
                                "divergent": rep.divergent,
                                "value": rep.value.map(fmt12),
                            }),
                        );
                    }
                    summary.insert("sampled_bilip_constant".into(), json!(fmt12(ext.bilip_constant(32, 2000, s.seed))));
                    distortion_field(&ext, nr, nt)
                }
                ExtensionMethod::BeurlingAhlfors => {
                    if gauge.is_some() {
                        return Err(Failure {
                            operation: "exp_integrability",
                            error: gluelab::Error::Config("integrability is only computed for the radial extension".into()),
                        });
                    }
                    distortion_field(&beurling_ahlfors_extend(metric.homeo()), nr, nt)
                }
            };
            let kmax = field.samples.iter().map(|s| s.k).fold(1.0, f64::max);
            summary.insert("max_distortion".into(), json!(fmt12(kmax)));
            let table = field.samples.iter().map(|p| vec![fmt12(p.r), fmt12(p.theta), fmt12(p.k)]);
            Ok(Outcome {
                artifacts: vec![
                    Artifact::new("distortion.csv", csv_bytes(&["r", "theta", "k"], table)),
                    Artifact::new("summary.json", json_bytes(&serde_json::Value::Object(summary))),
                ],
                violation: None,
            })
        }
        Experiment::Modulus { mesh } => {
            let (m, value, exact, sol) = match mesh {
                MeshSpec::Rectangle { width, height, nx, ny, from, to } => {
                    let m = rectangle_mesh(*width, *height, scaled(*nx, scale, 1), scaled(*ny, scale, 1)).op("rectangle_mesh")?;
                    let p = ModulusProblem::quadrilateral(&m, from, to).op("quadrilateral")?.with_paths(1000, s.seed);
                    let sol = solve_modulus(&p).op("solve_modulus")?;
                    (m.clone(), sol.value, None, sol)
                }
                MeshSpec::Annulus { inner, outer, rings, sectors } => {
                    let m = planar_annulus_mesh(*inner, *outer, scaled(*rings, scale, 1), scaled(*sectors, scale, 3))
                        .op("planar_annulus_mesh")?;
                    let sol = solve_modulus(
                        &ModulusProblem::quadrilateral(&m, "inner", "outer").op("annulus_problem")?.with_paths(1000, s.seed),
                    )
                    .op("solve_modulus")?;
                    (m.clone(), sol.value, Some(2.0 * PI / (outer / inner).ln()), sol)
                }
            };
            let summary = json!({
                "modulus": fmt12(value),
                "annulus_law": exact.map(fmt12),
                "residual": fmt12(sol.residual),
                "paths_checked": sol.paths_checked,
            });
            Ok(Outcome {
                artifacts: vec![
                    Artifact::new("summary.json", json_bytes(&summary)),
                    Artifact::new("solution.json", json_bytes(&dump_json(&m, &sol))),
                ],
                violation: None,
            })
        }
        Experiment::Example61 { theta0, outer, radii, positivity_threshold } => {
            let rows = annulus_capacity_profile(metric, *theta0, *outer, radii, None).op("annulus_capacity_profile")?;
            let min = rows.iter().map(|r| r.modulus).fold(f64::INFINITY, f64::min);
            let table = rows.iter().map(|r| vec![fmt12(r.r), fmt12(r.modulus), fmt12(r.round_value)]);
            let ok = min >= *positivity_threshold;
            Ok(Outcome {
                artifacts: vec![
                    Artifact::new("profile.csv", csv_bytes(&["r", "modulus", "round_value"], table)),
                    Artifact::new(
                        "summary.json",
                        json_bytes(&json!({ "min_modulus": fmt12(min), "threshold": fmt12(*positivity_threshold), "passed": ok })),
                    ),
                ],
                violation: (!ok).then(|| format!("profile minimum {} below {}", fmt12(min), fmt12(*positivity_threshold))),
            })
        }
        Experiment::Example62 { fraction, levels, n, positivity_threshold } => {
            let n = scaled(*n, scale, 12);
            let rows = levels
                .iter()
                .map(|&k| {
                    let set = FatCantor::new(*fraction, k).op("fat_cantor")?;
                    let mesh = collapsed_plane_mesh(&set, [-1.0, 2.0, 0.0, 1.0], n, n / 3, CollapseMode::BottomEdge)
                        .op("collapsed_plane_mesh")?;
                    let f1 = mesh.marker("f1").op("collapsed_plane_mesh")?.to_vec();
                    let f2 = mesh.marker("f2").op("collapsed_plane_mesh")?.to_vec();
                    let sol = solve_modulus(&ModulusProblem::node_sets(&mesh, f1, f2).with_paths(1000, s.seed))
                        .op("solve_modulus")?;
                    Ok((k, set.total_length(), sol.value))
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            let min = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
            let ok = min >= *positivity_threshold;
            let verdict = if ok {
                format!(
                    "not QC-equivalent: capacity bounded below\nminimum modulus {} >= {} over levels {:?}\n",
                    fmt12(min),
                    fmt12(*positivity_threshold),
                    levels
                )
            } else {
                format!("inconclusive: minimum modulus {} below {}\n", fmt12(min), fmt12(*positivity_threshold))
            };
            let table = rows.iter().map(|r| vec![r.0.to_string(), fmt12(r.1), fmt12(r.2)]);
            Ok(Outcome {
                artifacts: vec![
                    Artifact::new("profile.csv", csv_bytes(&["level", "cantor_length", "modulus"], table)),
                    Artifact::new("verdict.txt", verdict.into_bytes()),
                ],
                violation: (!ok).then(|| format!("capacity {} below {}", fmt12(min), fmt12(*positivity_threshold))),
            })
        }
    }
}
