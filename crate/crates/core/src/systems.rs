//! Builtin example systems.

use indexmap::IndexMap;
use thiserror::Error;

use crate::model::{
    ColorMode, Direction, Interval, Parameter, ParticleGroup, Projection, RenderTechnique,
    StateVariable, SystemDefinition,
};

pub const GREEN: [f64; 3] = [0.2, 1.0, 0.3];
pub const PINK: [f64; 3] = [1.0, 0.35, 0.7];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuiltinError {
    #[error("a ring needs at least one neuron")]
    EmptyRing,
    #[error("unknown builtin '{0}' (available: lorenz, stn_gpe, hh, hh_ring<N>)")]
    Unknown(String),
}

fn ic<const K: usize>(entries: [(&str, Interval); K]) -> IndexMap<String, Interval> {
    entries
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

/// Classical Lorenz system with sigma = 10, beta = 8/3, r = 28.
pub fn lorenz() -> SystemDefinition {
    SystemDefinition {
        name: "lorenz".into(),
        state_variables: vec![
            StateVariable::new("x", "sigma*(y-x)", Interval::new(-60.0, 60.0)),
            StateVariable::new("y", "x*(r-z)-y", Interval::new(-60.0, 60.0)),
            StateVariable::new("z", "x*y-beta*z", Interval::new(-10.0, 110.0)),
        ],
        parameters: vec![
            Parameter::new("sigma", 10.0, 0.0, 50.0),
            Parameter::new("r", 28.0, 0.0, 350.0),
            Parameter::new("beta", 8.0 / 3.0, 0.0, 10.0),
        ],
        techniques: vec![RenderTechnique {
            id: "xyz".into(),
            projection: Projection::Perspective3D,
            axes: vec!["x".into(), "y".into(), "z".into()],
            color: ColorMode::Position,
        }],
        groups: vec![ParticleGroup {
            count: 100_000,
            technique: "xyz".into(),
            direction: Direction::Forward,
            ic: ic([
                ("x", Interval::new(-10.0, 10.0)),
                ("y", Interval::new(-30.0, 30.0)),
                ("z", Interval::new(0.0, 50.0)),
            ]),
            max_age: None,
        }],
    }
}

/// Two-population STN/GPe rate model:
///
/// ```text
/// tau_s x' = -x + Z(w_ss x - w_gs y + I)
/// tau_g y' = -y + Z(-w_gg y + w_sg x)
/// Z(u)     = sigmoid(a (u - theta_z))
/// ```
///
/// The sigmoid gain and threshold, the coupling weights other than `w_ss`,
/// and the time constants are our own choices. With these defaults the
/// fixed point is a stable spiral at `w_ss = 0`, loses stability near
/// `w_ss = 7`, and a saddle-node appears near the top of the `w_ss` range.
pub fn stn_gpe() -> SystemDefinition {
    let unit = Interval::new(0.0, 1.0);
    let group = |technique: &str, direction| ParticleGroup {
        count: 350_000,
        technique: technique.into(),
        direction,
        ic: ic([("x", unit), ("y", unit)]),
        max_age: None,
    };
    let plane = |id: &str, rgb| RenderTechnique {
        id: id.into(),
        projection: Projection::Planar2D,
        axes: vec!["x".into(), "y".into()],
        color: ColorMode::Fixed { rgb },
    };
    SystemDefinition {
        name: "stn_gpe".into(),
        state_variables: vec![
            StateVariable::new(
                "x",
                "(-x + sigmoid(a*(w_ss*x - w_gs*y + I - theta_z)))/tau_s",
                unit,
            ),
            StateVariable::new(
                "y",
                "(-y + sigmoid(a*(-w_gg*y + w_sg*x - theta_z)))/tau_g",
                unit,
            ),
        ],
        parameters: vec![
            Parameter::new("w_ss", 0.0, 0.0, 15.0),
            Parameter::new("w_gs", 10.0, 0.0, 20.0),
            Parameter::new("w_sg", 10.0, 0.0, 20.0),
            Parameter::new("w_gg", 2.0, 0.0, 20.0),
            Parameter::new("I", 2.0, -10.0, 10.0),
            Parameter::new("tau_s", 1.0, 0.1, 10.0),
            Parameter::new("tau_g", 2.0, 0.1, 10.0),
            Parameter::new("a", 1.3, 0.1, 5.0),
            Parameter::new("theta_z", 4.0, -10.0, 10.0),
        ],
        techniques: vec![plane("forward", GREEN), plane("backward", PINK)],
        groups: vec![
            group("forward", Direction::Forward),
            group("backward", Direction::Backward),
        ],
    }
}

// Squid giant axon constants, membrane potential measured relative to rest.
const C_M: f64 = 1.0;
const G_NA: f64 = 120.0;
const G_K: f64 = 36.0;
const G_LK: f64 = 0.3;
const E_NA: f64 = 115.0;
const E_K: f64 = -12.0;
const E_LK: f64 = 10.613;

/// Floor applied to `|z|` in `z / tanh(z)`; the error this introduces is at
/// most `floor^2 / 3`.
const RATE_FLOOR: f64 = 1e-3;

/// `u / (exp(u) - 1)` written without a removable singularity at `u = 0`:
/// it equals `z / tanh(z) - z` with `z = u / 2`, and `z / tanh(z)` is even,
/// so `|z|` can be floored away from zero with no branch.
fn exprel_inverse(u: &str) -> String {
    let z = format!("(({u})/2)");
    let w = format!("max(abs{z}, {RATE_FLOOR})");
    format!("({w}/tanh({w}) - {z})")
}

/// Rate functions of the squid axon gates, as expressions in `v`.
pub mod rates {
    use super::exprel_inverse;

    pub fn alpha_m(v: &str) -> String {
        // 0.1 (25 - V) / (exp((25 - V)/10) - 1)
        exprel_inverse(&format!("(25 - {v})/10"))
    }

    pub fn beta_m(v: &str) -> String {
        format!("4*exp(-{v}/18)")
    }

    pub fn alpha_h(v: &str) -> String {
        format!("0.07*exp(-{v}/20)")
    }

    pub fn beta_h(v: &str) -> String {
        format!("1/(exp((30 - {v})/10) + 1)")
    }

    pub fn alpha_n(v: &str) -> String {
        // 0.01 (10 - V) / (exp((10 - V)/10) - 1)
        format!("0.1*{}", exprel_inverse(&format!("(10 - {v})/10")))
    }

    pub fn beta_n(v: &str) -> String {
        format!("0.125*exp(-{v}/80)")
    }
}

/// Ring of `n` Hodgkin-Huxley neurons, each driven by the synaptic gate of
/// its predecessor (`s` of neuron `(i-1) mod n`). Variables are
/// `V1, h1, m1, n1, s1, V2, ...`.
pub fn hh_ring(n: usize) -> Result<SystemDefinition, BuiltinError> {
    if n == 0 {
        return Err(BuiltinError::EmptyRing);
    }
    let gate = Interval::new(-0.1, 1.1);
    let mut vars = Vec::with_capacity(5 * n);
    let mut params = Vec::new();
    for i in 1..=n {
        let v = format!("V{i}");
        let pre = if i == 1 { n } else { i - 1 };
        let gate_rhs = |g: &str, alpha: String, beta: String| {
            format!("({alpha})*(1 - {g}{i}) - ({beta})*{g}{i}")
        };
        vars.push(StateVariable::new(
            &v,
            format!(
                "({G_LK}*({E_LK} - {v}) + h{i}*m{i}^3*{G_NA}*({E_NA} - {v}) + n{i}^4*{G_K}*({E_K} - {v}) \
                 + g_syn*(e_syn - {v})*s{pre} + I{i})/{C_M}"
            ),
            Interval::new(-40.0, 140.0),
        ));
        vars.push(StateVariable::new(
            format!("h{i}"),
            gate_rhs("h", rates::alpha_h(&v), rates::beta_h(&v)),
            gate,
        ));
        vars.push(StateVariable::new(
            format!("m{i}"),
            gate_rhs("m", rates::alpha_m(&v), rates::beta_m(&v)),
            gate,
        ));
        vars.push(StateVariable::new(
            format!("n{i}"),
            gate_rhs("n", rates::alpha_n(&v), rates::beta_n(&v)),
            gate,
        ));
        vars.push(StateVariable::new(
            format!("s{i}"),
            format!("sigmoid(sigma*({v} - theta))*(1 - s{i})/tau_r - s{i}/tau_d"),
            gate,
        ));
        params.push(Parameter::new(format!("I{i}"), 10.0, -20.0, 50.0));
    }
    params.extend([
        Parameter::new("g_syn", 0.5, 0.0, 5.0),
        Parameter::new("e_syn", 10.0, -100.0, 100.0),
        Parameter::new("tau_r", 0.5, 0.05, 10.0),
        Parameter::new("tau_d", 3.0, 0.1, 50.0),
        Parameter::new("sigma", 5.0, 0.1, 20.0),
        Parameter::new("theta", 20.0, -20.0, 100.0),
    ]);

    let technique = match n {
        1 => RenderTechnique {
            id: "gates".into(),
            projection: Projection::Perspective3D,
            axes: vec!["h1".into(), "m1".into(), "n1".into()],
            color: ColorMode::Position,
        },
        2 => RenderTechnique {
            id: "voltages".into(),
            projection: Projection::Planar2D,
            axes: vec!["V1".into(), "V2".into()],
            color: ColorMode::Position,
        },
        _ => RenderTechnique {
            id: "voltages".into(),
            projection: Projection::Perspective3D,
            axes: vec!["V1".into(), "V2".into(), "V3".into()],
            color: ColorMode::Position,
        },
    };
    let mut ic_cube = IndexMap::new();
    for v in &vars {
        let range = if v.name.starts_with('V') {
            Interval::new(-15.0, 110.0)
        } else {
            Interval::new(0.0, 1.0)
        };
        ic_cube.insert(v.name.clone(), range);
    }
    Ok(SystemDefinition {
        name: if n == 1 { "hh".into() } else { format!("hh_ring{n}") },
        state_variables: vars,
        parameters: params,
        groups: vec![ParticleGroup {
            count: 100_000,
            technique: technique.id.clone(),
            direction: Direction::Forward,
            ic: ic_cube,
            max_age: None,
        }],
        techniques: vec![technique],
    })
}

/// Look up a builtin by name: `lorenz`, `stn_gpe`, `hh` (one neuron) or
/// `hh_ring<N>` / `hh_ring` (three neurons).
pub fn builtin(name: &str) -> Result<SystemDefinition, BuiltinError> {
    match name {
        "lorenz" => Ok(lorenz()),
        "stn_gpe" | "stngpe" => Ok(stn_gpe()),
        "hh" => hh_ring(1),
        "hh_ring" => hh_ring(3),
        other => match other.strip_prefix("hh_ring").and_then(|k| k.parse().ok()) {
            Some(k) => hh_ring(k),
            None => Err(BuiltinError::Unknown(other.to_string())),
        },
    }
}
