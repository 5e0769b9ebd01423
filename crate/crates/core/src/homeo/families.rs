use serde::{Deserialize, Serialize};

use super::CircleHomeo;
use crate::error::Result;

fn default_arc() -> f64 {
    std::f64::consts::PI
}

fn default_salem() -> f64 {
    0.3
}

/// Serializable description of a built-in homeomorphism family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HomeoSpec {
    Identity,
    Rotation {
        angle: f64,
    },
    Power {
        alpha: f64,
        beta: f64,
    },
    Cantor {
        fraction: f64,
        levels: u32,
        #[serde(default = "default_arc")]
        arc: f64,
        #[serde(default = "default_salem")]
        salem_p: f64,
    },
    FullySingular {
        #[serde(default = "default_salem")]
        salem_p: f64,
    },
    Pwl {
        breakpoints: Vec<[f64; 2]>,
    },
    Patch {
        eps: f64,
        #[serde(default)]
        center: f64,
        half_width: f64,
    },
    Composed {
        parts: Vec<HomeoSpec>,
    },
}

impl HomeoSpec {
    pub fn build(&self) -> Result<CircleHomeo> {
        match self {
            HomeoSpec::Identity => Ok(CircleHomeo::identity()),
            HomeoSpec::Rotation { angle } => Ok(CircleHomeo::rotation(*angle)),
            HomeoSpec::Power { alpha, beta } => CircleHomeo::power(*alpha, *beta),
            HomeoSpec::Cantor { fraction, levels, arc, salem_p } => CircleHomeo::cantor_with(*fraction, *levels, *arc, *salem_p),
            HomeoSpec::FullySingular { salem_p } => CircleHomeo::fully_singular(*salem_p),
            HomeoSpec::Pwl { breakpoints } => {
                let b: Vec<(f64, f64)> = breakpoints.iter().map(|p| (p[0], p[1])).collect();
                CircleHomeo::pwl(&b)
            }
            HomeoSpec::Patch { eps, center, half_width } => CircleHomeo::patch(*eps, *center, *half_width),
            HomeoSpec::Composed { parts } => CircleHomeo::composed(parts.iter().map(|p| p.build()).collect::<Result<_>>()?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trips_through_json() {
        let specs = vec![
            HomeoSpec::Identity,
            HomeoSpec::Power { alpha: 1.0, beta: 2.0 },
            HomeoSpec::Cantor { fraction: 0.5, levels: 6, arc: 3.0, salem_p: 0.3 },
            HomeoSpec::Pwl { breakpoints: vec![[0.0, 0.0], [std::f64::consts::TAU, std::f64::consts::TAU]] },
            HomeoSpec::Composed { parts: vec![HomeoSpec::Rotation { angle: 0.1 }, HomeoSpec::Identity] },
        ];
        for s in specs {
            let text = serde_json::to_string(&s).unwrap();
            let back: HomeoSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, s);
            back.build().unwrap();
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = r#"{"family":"power","alpha":1.0,"beta":2.0,"gamma":3.0}"#;
        assert!(serde_json::from_str::<HomeoSpec>(bad).is_err());
    }
}
