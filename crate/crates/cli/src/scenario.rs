//! Scenario files: one TOML document naming a gluing map and an experiment.
//!
//! ```toml
//! name = "power-distances"
//! seed = 7
//! homeo = { family = "power", alpha = 2.0, beta = 2.0 }
//!
//! [experiment]
//! kind = "distance"
//! pairs = 200
//! oracle_resolution = 16
//! ```

use gluelab::extension::Gauge;
use gluelab::HomeoSpec;
use serde::{Deserialize, Serialize};

fn default_seed() -> u64 {
    1
}

fn identity() -> HomeoSpec {
    HomeoSpec::Identity
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "identity")]
    pub homeo: HomeoSpec,
    pub experiment: Experiment,
    /// Output directory, relative to the working directory. `--out` wins.
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    Distance {
        pairs: usize,
        #[serde(default = "seam_samples")]
        seam_samples: usize,
        #[serde(default)]
        oracle_resolution: Option<usize>,
        /// Fails the run when `max |d_Z − σ|` exceeds this.
        #[serde(default)]
        max_sigma_gap: Option<f64>,
    },
    Seam {
        window: f64,
        #[serde(default = "class_resolution")]
        class_resolution: usize,
    },
    Density {
        points: Vec<f64>,
        #[serde(default)]
        radii: Option<Vec<f64>>,
        #[serde(default = "quad_resolution")]
        quad_resolution: usize,
    },
    Extension {
        #[serde(default)]
        method: ExtensionMethod,
        #[serde(default = "field_size")]
        n_r: usize,
        #[serde(default = "field_size")]
        n_theta: usize,
        #[serde(default)]
        gauge: Option<Gauge>,
        #[serde(default = "integrability_resolution")]
        integrability_resolution: usize,
    },
    Modulus {
        mesh: MeshSpec,
    },
    #[serde(rename = "example-6-1")]
    Example61 {
        #[serde(default)]
        theta0: f64,
        outer: f64,
        radii: Vec<f64>,
        positivity_threshold: f64,
    },
    #[serde(rename = "example-6-2")]
    Example62 {
        fraction: f64,
        levels: Vec<u32>,
        #[serde(default = "grid")]
        n: usize,
        positivity_threshold: f64,
    },
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ExtensionMethod {
    #[default]
    Radial,
    BeurlingAhlfors,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeshSpec {
    Rectangle {
        width: f64,
        height: f64,
        nx: usize,
        ny: usize,
        #[serde(default = "xi1")]
        from: String,
        #[serde(default = "xi3")]
        to: String,
    },
    Annulus {
        inner: f64,
        outer: f64,
        rings: usize,
        sectors: usize,
    },
}

fn seam_samples() -> usize {
    gluelab::glued::DEFAULT_SEAM_SAMPLES
}
fn class_resolution() -> usize {
    1 << 14
}
fn quad_resolution() -> usize {
    48
}
fn field_size() -> usize {
    32
}
fn integrability_resolution() -> usize {
    16
}
fn grid() -> usize {
    96
}
fn xi1() -> String {
    "xi1".into()
}
fn xi3() -> String {
    "xi3".into()
}

/// Field-level range errors, empty when the scenario is usable.
pub fn validate(s: &Scenario) -> Vec<String> {
    let mut e = Vec::new();
    let mut need = |ok: bool, field: &str, msg: &str| {
        if !ok {
            e.push(format!("experiment.{field}: {msg}"));
        }
    };
    match &s.experiment {
        Experiment::Distance { pairs, seam_samples, oracle_resolution, max_sigma_gap } => {
            need((1..=1_000_000).contains(pairs), "pairs", "must lie in [1, 10^6]");
            need((16..=1 << 20).contains(seam_samples), "seam_samples", "must lie in [16, 2^20]");
            need(oracle_resolution.is_none_or(|r| (4..=256).contains(&r)), "oracle_resolution", "must lie in [4, 256]");
            need(max_sigma_gap.is_none_or(|g| g > 0.0), "max_sigma_gap", "must be positive");
        }
        Experiment::Seam { window, class_resolution } => {
            need(*window > 0.0 && *window <= std::f64::consts::TAU, "window", "must lie in (0, 2pi]");
            need((16..=1 << 22).contains(class_resolution), "class_resolution", "must lie in [16, 2^22]");
        }
        Experiment::Density { points, radii, quad_resolution } => {
            need(!points.is_empty(), "points", "needs at least one seam angle");
            need(points.iter().all(|p| p.is_finite()), "points", "must be finite");
            if let Some(r) = radii {
                need(r.len() >= 3, "radii", "needs at least three radii");
                need(r.iter().all(|&r| r > 0.0 && r < std::f64::consts::FRAC_PI_4), "radii", "must lie in (0, pi/4)");
            }
            need((8..=4096).contains(quad_resolution), "quad_resolution", "must lie in [8, 4096]");
        }
        Experiment::Extension { n_r, n_theta, gauge, integrability_resolution, .. } => {
            need((2..=4096).contains(n_r), "n_r", "must lie in [2, 4096]");
            need((4..=4096).contains(n_theta), "n_theta", "must lie in [4, 4096]");
            need((2..=1024).contains(integrability_resolution), "integrability_resolution", "must lie in [2, 1024]");
            if let Some(g) = gauge {
                if let Err(err) = g.validate() {
                    need(false, "gauge", &err.to_string());
                }
            }
        }
        Experiment::Modulus { mesh } => match mesh {
            MeshSpec::Rectangle { width, height, nx, ny, .. } => {
                need(*width > 0.0 && *height > 0.0, "mesh.width", "sides must be positive");
                need((1..=2000).contains(nx) && (1..=2000).contains(ny), "mesh.nx", "grid sizes must lie in [1, 2000]");
            }
            MeshSpec::Annulus { inner, outer, rings, sectors } => {
                need(*inner > 0.0 && outer > inner, "mesh.inner", "needs 0 < inner < outer");
                need((1..=2000).contains(rings) && (3..=4000).contains(sectors), "mesh.rings", "grid sizes out of range");
            }
        },
        Experiment::Example61 { outer, radii, positivity_threshold, .. } => {
            need(*outer > 0.0 && *outer < 1.5, "outer", "must lie in (0, 1.5)");
            need(!radii.is_empty() && radii.iter().all(|r| *r > 0.0 && r < outer), "radii", "must lie in (0, outer)");
            need(*positivity_threshold >= 0.0, "positivity_threshold", "must be non-negative");
        }
        Experiment::Example62 { fraction, levels, n, positivity_threshold } => {
            need(*fraction > 0.0 && *fraction < 1.0, "fraction", "must lie in (0, 1)");
            need(!levels.is_empty() && levels.iter().all(|k| (1..=12).contains(k)), "levels", "must lie in [1, 12]");
            need((12..=1024).contains(n), "n", "must lie in [12, 1024]");
            need(*positivity_threshold >= 0.0, "positivity_threshold", "must be non-negative");
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_distance_scenario() {
        let s: Scenario = toml::from_str(
            r#"
            name = "t"
            homeo = { family = "power", alpha = 2.0, beta = 2.0 }
            [experiment]
            kind = "distance"
            pairs = 10
            "#,
        )
        .unwrap();
        assert!(validate(&s).is_empty());
        assert_eq!(s.seed, 1);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = r#"
            name = "t"
            colour = "red"
            [experiment]
            kind = "seam"
            window = 0.1
        "#;
        assert!(toml::from_str::<Scenario>(bad).is_err());
        let bad_inner = r#"
            name = "t"
            [experiment]
            kind = "seam"
            window = 0.1
            windw = 2
        "#;
        assert!(toml::from_str::<Scenario>(bad_inner).is_err());
    }

    #[test]
    fn range_errors_name_the_field() {
        let s: Scenario = toml::from_str(
            r#"
            name = "t"
            [experiment]
            kind = "density"
            points = [1.0]
            quad_resolution = 2
            "#,
        )
        .unwrap();
        let e = validate(&s);
        assert_eq!(e.len(), 1);
        assert!(e[0].starts_with("experiment.quad_resolution"));
    }
}
