//! Built-in scenarios.

use super::ScenarioConfig;
use crate::error::{Error, Result};

pub const PRESETS: [(&str, &str); 5] = [
    ("flat-torus", "flat square torus with a non-harmonic representative of [dx]"),
    ("bumpy-torus", "seeded bumpy conformal torus flattening, coupled form heat flow"),
    ("cylinder-soliton", "round shrinking cylinder S¹ × S² up to its vanishing time"),
    ("neckpinch-n3", "neckpinch on S¹ × S² run to the singularity"),
    ("dilation-ladder", "neckpinch with five parabolic rescalings toward the singular time"),
];

const FLAT_TORUS: &str = r#"
name = "flat-torus"
family = "torus"
alpha = [1, 0]

[grid]
n = 32

[initial]
u = "0"

[form]
periods = [6.283185307179586, 0.0]
exact = "-0.3 * cos(x)"

[flow]
dt_init = 0.01
t_end = 1.0
snapshot_stride = 20

[monitor]
k_max = 4
vertices = 64
"#;

const BUMPY_TORUS: &str = r#"
name = "bumpy-torus"
family = "torus"
seed = 7
alpha = [1, 0]

[grid]
n = 64

[initial]
u = "0.3 * sin(x) * cos(y)"

[initial.random]
modes = 2
amplitude = 0.05

[form]
periods = [6.283185307179586, 0.0]
exact = "0.2 * sin(x + 2 * y)"

[flow]
dt_init = 0.01
t_end = 1.0
snapshot_stride = 80

[monitor]
k_max = 4
vertices = 64
"#;

const CYLINDER: &str = r#"
name = "cylinder-soliton"
family = "warped"
alpha = [1]

[grid]
n = 64
dim = 3

[initial]
phi = "1"
psi = "1"

[form]
periods = [6.283185307179586]

[flow]
dt_init = 1e-4
t_end = 1.0
snapshot_stride = 500

[monitor]
k_max = 4
vertices = 64

[dilation]
fractions = [0.2, 0.4, 0.6, 0.8]
"#;

const NECKPINCH: &str = r#"
name = "neckpinch-n3"
family = "warped"
alpha = [1]

[grid]
n = 128
dim = 3

[initial]
phi = "1"
psi = "1 - 0.5 * cos(x)"

[form]
periods = [6.283185307179586]
exact = "0.1 * sin(x)"

[flow]
dt_init = 1e-4
t_end = 2.0
snapshot_stride = 100

[monitor]
k_max = 4
"#;

fn text(name: &str) -> Option<&'static str> {
    Some(match name {
        "flat-torus" => FLAT_TORUS,
        "bumpy-torus" => BUMPY_TORUS,
        "cylinder-soliton" => CYLINDER,
        "neckpinch-n3" | "dilation-ladder" => NECKPINCH,
        _ => return None,
    })
}

/// Closest preset name by Levenshtein distance.
pub fn nearest_preset(name: &str) -> &'static str {
    PRESETS
        .iter()
        .map(|(p, _)| *p)
        .min_by_key(|p| strsim::levenshtein(name, p))
        .expect("presets are not empty")
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let Some(t) = text(name) else {
        return Err(Error::Config(format!(
            "unknown preset `{name}`; did you mean `{}`?",
            nearest_preset(name)
        )));
    };
    let mut cfg = ScenarioConfig::from_toml(t)?;
    if name == "dilation-ladder" {
        cfg.name = name.into();
        cfg.dilation = Some(super::DilationLadder {
            fractions: vec![0.5, 0.7, 0.8, 0.9, 0.95],
            lambda: None,
            tolerance: 2e-2,
        });
    }
    Ok(cfg)
}
