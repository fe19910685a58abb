#![allow(dead_code)]

use wardrop_approx::game::{CostFunction, NonatomicInstance, ParamFn, Segment, SetFamily, UtilityFamily};

pub fn two_links() -> Vec<CostFunction> {
    vec![CostFunction::affine(1.0, 0.0), CostFunction::affine(2.0, 1.0)]
}

fn sine() -> ParamFn {
    ParamFn::Sine {
        amplitude: 1.0,
        frequency: 1.0,
        phase: 0.0,
        offset: 0.0,
    }
}

fn simplex(demand: ParamFn) -> SetFamily {
    SetFamily::Simplex {
        demand,
        lower: None,
        upper: None,
    }
}

fn preference(target: ParamFn) -> UtilityFamily {
    UtilityFamily::QuadPref {
        weight: ParamFn::Linear {
            intercept: 0.0,
            slope: 1.0,
        },
        preferred: vec![ParamFn::constant(0.0), target],
    }
}

/// Demand `sin(πθ)` below 0.7 and 0.3 above, preference weight `θ` towards
/// `(0, demand)`.
pub fn sine_step(with_utility: bool) -> NonatomicInstance {
    let utility = |target: ParamFn| {
        if with_utility {
            preference(target)
        } else {
            UtilityFamily::None
        }
    };
    NonatomicInstance::new(
        two_links(),
        vec![
            Segment {
                start: 0.0,
                end: 0.7,
                set: simplex(sine()),
                utility: utility(sine()),
            },
            Segment {
                start: 0.7,
                end: 1.0,
                set: simplex(ParamFn::constant(0.3)),
                utility: utility(ParamFn::constant(0.3)),
            },
        ],
        None,
    )
    .unwrap()
}

/// Piecewise-constant demand with the given breakpoints and values and a
/// constant preference of weight 1 towards `(0, demand)`.
pub fn step_demand(breaks: &[f64], values: &[f64]) -> NonatomicInstance {
    let mut edges = vec![0.0];
    edges.extend_from_slice(breaks);
    edges.push(1.0);
    let segments = edges
        .windows(2)
        .zip(values)
        .map(|(w, v)| Segment {
            start: w[0],
            end: w[1],
            set: simplex(ParamFn::constant(*v)),
            utility: UtilityFamily::QuadPref {
                weight: ParamFn::constant(1.0),
                preferred: vec![ParamFn::constant(0.0), ParamFn::constant(*v)],
            },
        })
        .collect();
    NonatomicInstance::new(two_links(), segments, None).unwrap()
}
