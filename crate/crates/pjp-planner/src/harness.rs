//! Randomized sample generators for the model-checking harnesses.
//!
//! Observation properties are checked on random partial states over the
//! instance's variables. Predictive-retrieval consistency is checked on
//! randomized partial sequences whose values follow the function's own
//! family (random coefficients, random observation masks), which is the
//! regime the functions are specified for; reconstructive consistency uses
//! complete world sequences evolved from random coefficients.

use pjp_core::predict::rule_value;
use pjp_core::state::{State, Value, VarId};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::instance::PlanningInstance;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Symbol pool for an instance: its object names.
fn symbols(instance: &PlanningInstance) -> Vec<String> {
    let mut out: Vec<String> = instance.agents.clone();
    out.extend(["rm_1".to_string(), "rm_2".to_string()]);
    out.sort();
    out.dedup();
    out
}

/// Random partial states over the instance's variables.
pub fn sample_states(instance: &PlanningInstance, n: usize, seed: u64) -> Vec<State> {
    let mut rng = rng(seed);
    let vars = instance.omega.vars();
    let syms = symbols(instance);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut s = State::new();
        for &v in &vars {
            match rng.gen_range(0..10) {
                0..=2 => {}
                3 => s.assign(v, Value::None),
                4..=6 => s.assign(v, Value::Num(rng.gen_range(-5..15) as f64)),
                _ => {
                    let sym = &syms[rng.gen_range(0..syms.len())];
                    s.assign(v, Value::sym(sym));
                }
            }
        }
        out.push(s);
    }
    out
}

fn family_value(type_name: &str, coeffs: &[f64], t: i64) -> f64 {
    match type_name {
        "static" => coeffs[0],
        _ => rule_value(type_name, coeffs, t).unwrap_or(coeffs[0]),
    }
}

fn family_coeffs(type_name: &str, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match type_name {
        "static" => vec![rng.gen_range(-5..10) as f64],
        "1st_poly" | "linear_reg" | "dom_1st_poly" => {
            vec![rng.gen_range(-3..4) as f64, rng.gen_range(-5..6) as f64]
        }
        "2nd_poly" => vec![
            rng.gen_range(-2..3) as f64,
            rng.gen_range(-3..4) as f64,
            rng.gen_range(-5..6) as f64,
        ],
        "power" => vec![[-3.0, -2.0, 2.0, 3.0, 0.5, 1.5][rng.gen_range(0..6)]],
        "sin" => vec![
            rng.gen_range(1..10) as f64 * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
            rng.gen_range(1..8) as f64 * 0.5 * std::f64::consts::FRAC_PI_2,
            rng.gen_range(0.0..std::f64::consts::TAU),
        ],
        _ => vec![rng.gen_range(-5..6) as f64],
    }
}

/// Randomized partial sequences for one predictive function: values follow
/// the function's family with random coefficients and a random observation
/// mask; occasionally a second segment with fresh coefficients starts
/// mid-sequence, mirroring how lies re-seed a variable's pattern.
pub fn sample_type_sequences(
    type_name: &str,
    vars: &[VarId],
    n: usize,
    seed: u64,
) -> Vec<Vec<State>> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let len = rng.gen_range(4..10);
        let mut states = vec![State::new(); len];
        for &v in vars {
            let mut coeffs = family_coeffs(type_name, &mut rng);
            // sinusoid fits are only specified for single-curve data
            let switch = if type_name != "sin" && rng.gen_bool(0.25) {
                rng.gen_range(1..len)
            } else {
                len
            };
            let mut observed = 0;
            for (t, state) in states.iter_mut().enumerate() {
                if t == switch {
                    coeffs = family_coeffs(type_name, &mut rng);
                }
                match rng.gen_range(0..10) {
                    0..=4 => {}
                    5 => state.assign(v, Value::None),
                    _ => {
                        let x = family_value(type_name, &coeffs, t as i64);
                        state.assign(v, Value::Num(x));
                        observed += 1;
                    }
                }
            }
            // make sure some sequences exercise the genuine-fit path
            if observed == 0 && rng.gen_bool(0.7) {
                let t = rng.gen_range(0..len);
                let x = family_value(type_name, &coeffs, t as i64);
                states[t].assign(v, Value::Num(x));
            }
        }
        out.push(states);
    }
    out
}

/// Complete world sequences for the reconstructive check: rule-driven
/// variables follow their family, static variables hold a constant symbol
/// or number.
pub fn sample_worlds(instance: &PlanningInstance, n: usize, seed: u64) -> Vec<Vec<State>> {
    let mut rng = rng(seed);
    let syms = symbols(instance);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let len = rng.gen_range(3..8);
        let mut states = vec![State::new(); len];
        for (v, entry) in instance.omega.iter() {
            if entry.type_name == "static" {
                let value = if rng.gen_bool(0.5) && !syms.is_empty() {
                    Value::sym(&syms[rng.gen_range(0..syms.len())])
                } else {
                    Value::Num(rng.gen_range(0..10) as f64)
                };
                for state in &mut states {
                    state.assign(v, value.clone());
                }
            } else {
                let coeffs = if entry.eta.is_empty() {
                    family_coeffs(&entry.type_name, &mut rng)
                } else {
                    entry.eta.clone()
                };
                for (t, state) in states.iter_mut().enumerate() {
                    let x = family_value(&entry.type_name, &coeffs, t as i64);
                    state.assign(v, Value::Num(x));
                }
            }
        }
        out.push(states);
    }
    out
}
