//! Retrieval and predictive retrieval.
//!
//! [`retrieve`] returns a variable's most recent observed value at or before
//! a timestamp, else the earliest later one, else `none`. A predictive
//! retrieval function ([`PrFunction`]) generalizes this by fitting the
//! variable's past observations and extrapolating. Every function preserves
//! observed values and is stable when its own predictions are fed back as
//! extra input ([`check_pr_consistency`] verifies both on samples).
//!
//! Seven functions ship by default: `static`, `1st_poly`, `2nd_poly`,
//! `power`, `sin`, `linear_reg` and `dom_1st_poly`; user functions can be
//! registered under new type names.

use alloc::borrow::ToOwned;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::observe::ObservationModel;
use crate::state::{State, Value, VarId};

/// Timestamps where `v` has a non-`none` assignment (the AT set).
pub fn observed_timestamps(seq: &[State], v: VarId) -> Vec<usize> {
    (0..seq.len()).filter(|&j| seq[j].has_value(v)).collect()
}

/// Most recent value of `v` at or before `m`; otherwise earliest value after
/// `m`; otherwise `none`. `m` may be -1 (nothing is "at or before").
pub fn retrieve(seq: &[State], m: i64, v: VarId) -> Value {
    let at = observed_timestamps(seq, v);
    let lt = at.iter().copied().filter(|&j| (j as i64) <= m).max();
    if let Some(j) = lt {
        return seq[j].get(v).unwrap().clone();
    }
    let rt = at.iter().copied().filter(|&j| (j as i64) > m).min();
    if let Some(j) = rt {
        return seq[j].get(v).unwrap().clone();
    }
    Value::None
}

/// How a prediction was produced.
///
/// `used_fallback` is `true` whenever the value was produced by static
/// retrieval instead of a genuine fit: always when fewer than
/// [`PrFunction::min_points`] observations are available, and additionally
/// for `power` (ambiguous base) and `sin` (optimizer did not converge).
#[derive(Clone, Debug, Default)]
pub struct FitDiagnostics {
    pub used_fallback: bool,
    pub points_used: Vec<(usize, f64)>,
    pub fitted_coefficients: Option<Vec<f64>>,
}

impl FitDiagnostics {
    fn fallback(points: Vec<(usize, f64)>) -> Self {
        FitDiagnostics { used_fallback: true, points_used: points, fitted_coefficients: None }
    }

    fn observed(points: Vec<(usize, f64)>) -> Self {
        FitDiagnostics { used_fallback: false, points_used: points, fitted_coefficients: None }
    }

    fn fit(points: Vec<(usize, f64)>, coeffs: Vec<f64>) -> Self {
        FitDiagnostics { used_fallback: false, points_used: points, fitted_coefficients: Some(coeffs) }
    }

    /// A genuine fit was performed (feeds the planner's segment count).
    pub fn genuine_fit(&self) -> bool {
        !self.used_fallback && self.fitted_coefficients.is_some()
    }
}

/// A predictive retrieval function for one processual variable type.
pub trait PrFunction: Send + Sync {
    fn name(&self) -> &str;

    /// Minimum number of non-`none` observations for a genuine fit.
    fn min_points(&self) -> usize;

    fn predict_diag(&self, seq: &[State], t: i64, v: VarId) -> (Value, FitDiagnostics);

    fn predict(&self, seq: &[State], t: i64, v: VarId) -> Value {
        self.predict_diag(seq, t, v).0
    }
}

/// Numeric observation points of `v`, or `None` when an observed value is
/// non-numeric (fit functions fall back to static retrieval then).
fn numeric_points(seq: &[State], v: VarId) -> Option<Vec<(usize, f64)>> {
    let mut pts = Vec::new();
    for j in observed_timestamps(seq, v) {
        match seq[j].get(v).unwrap().as_num() {
            Some(x) => pts.push((j, x)),
            None => return None,
        }
    }
    Some(pts)
}

/// Shared preamble of the fit-based functions: handles the empty case, the
/// observed-at-`t` case (preserving consistency) and the insufficient-points
/// fallback. Returns the points when a genuine fit should proceed.
fn fit_preamble(
    seq: &[State],
    t: i64,
    v: VarId,
    min_points: usize,
) -> Result<Vec<(usize, f64)>, (Value, FitDiagnostics)> {
    if t >= 0 && (t as usize) < seq.len() {
        if let Some(val) = seq[t as usize].get(v) {
            if !val.is_none() {
                return Err((val.clone(), FitDiagnostics::observed(Vec::new())));
            }
        }
    }
    let pts = match numeric_points(seq, v) {
        Some(p) => p,
        None => return Err((retrieve(seq, t, v), FitDiagnostics::fallback(Vec::new()))),
    };
    if pts.len() < min_points {
        return Err((retrieve(seq, t, v), FitDiagnostics::fallback(pts)));
    }
    Ok(pts)
}

/// Static retrieval: delegates to [`retrieve`], the base case every other
/// function falls back to.
pub struct PrStatic;

impl PrFunction for PrStatic {
    fn name(&self) -> &str {
        "static"
    }

    fn min_points(&self) -> usize {
        usize::MAX
    }

    fn predict_diag(&self, seq: &[State], t: i64, v: VarId) -> (Value, FitDiagnostics) {
        (retrieve(seq, t, v), FitDiagnostics::fallback(Vec::new()))
    }
}

/// First-order polynomial through the two observations nearest to `t`:
/// the last two at or before `t` when nothing follows, the first two after
/// `t` when nothing precedes, and the bracketing pair otherwise.
pub struct PrFirstPoly;

impl PrFunction for PrFirstPoly {
    fn name(&self) -> &str {
        "1st_poly"
    }

    fn min_points(&self) -> usize {
        2
    }

    fn predict_diag(&self, seq: &[State], t: i64, v: VarId) -> (Value, FitDiagnostics) {
        let pts = match fit_preamble(seq, t, v, 2) {
            Ok(p) => p,
            Err(out) => return out,
        };
        let lt: Vec<&(usize, f64)> = pts.iter().filter(|(j, _)| (*j as i64) <= t).collect();
        let rt: Vec<&(usize, f64)> = pts.iter().filter(|(j, _)| (*j as i64) > t).collect();
        let (p1, p2) = if rt.is_empty() {
            (lt[lt.len() - 2], lt[lt.len() - 1])
        } else if lt.is_empty() {
            (rt[0], rt[1])
        } else {
            (*lt.last().unwrap(), rt[0])
        };
        let (t1, y1) = (p1.0 as f64, p1.1);
        let (t2, y2) = (p2.0 as f64, p2.1);
        let slope = (y1 - y2) / (t1 - t2);
        let value = slope * (t as f64 - t1) + y1;
        let coeffs = vec![slope, y1 - slope * t1];
        (Value::Num(value), FitDiagnostics::fit(vec![*p1, *p2], coeffs))
    }
}

/// Exact quadratic through the three greatest observed timestamps.
pub struct PrSecondPoly;

impl PrFunction for PrSecondPoly {
    fn name(&self) -> &str {
        "2nd_poly"
    }

    fn min_points(&self) -> usize {
        3
    }

    fn predict_diag(&self, seq: &[State], t: i64, v: VarId) -> (Value, FitDiagnostics) {
        let pts = match fit_preamble(seq, t, v, 3) {
            Ok(p) => p,
            Err(out) => return out,
        };
        let top = &pts[pts.len() - 3..];
        let (x1, y1) = (top[0].0 as f64, top[0].1);
        let (x2, y2) = (top[1].0 as f64, top[1].1);
        let (x3, y3) = (top[2].0 as f64, top[2].1);
        // Lagrange form expanded to monomial coefficients
        let d1 = (x1 - x2) * (x1 - x3);
        let d2 = (x2 - x1) * (x2 - x3);
        let d3 = (x3 - x1) * (x3 - x2);
        let a = y1 / d1 + y2 / d2 + y3 / d3;
        let b = -(y1 * (x2 + x3) / d1 + y2 * (x1 + x3) / d2 + y3 * (x1 + x2) / d3);
        let c = y1 * x2 * x3 / d1 + y2 * x1 * x3 / d2 + y3 * x1 * x2 / d3;
        let tf = t as f64;
        let value = a * tf * tf + b * tf + c;
        (Value::Num(value), FitDiagnostics::fit(top.to_vec(), vec![a, b, c]))
    }
}

/// Power curve `a^t`. The base candidates are taken from the most recent
/// observation (one real root at odd timestamps, two at even timestamps with
/// a positive value) and then filtered for consistency with every other
/// observation; the fit proceeds only when exactly one candidate survives.
pub struct PrPower;

fn signed_root(y: f64, n: usize) -> f64 {
    if y < 0.0 {
        -libm::pow(-y, 1.0 / n as f64)
    } else {
        libm::pow(y, 1.0 / n as f64)
    }
}

impl PrFunction for PrPower {
    fn name(&self) -> &str {
        "power"
    }

    fn min_points(&self) -> usize {
        1
    }

    fn predict_diag(&self, seq: &[State], t: i64, v: VarId) -> (Value, FitDiagnostics) {
        let pts = match fit_preamble(seq, t, v, 1) {
            Ok(p) => p,
            Err(out) => return out,
        };
        let &(t_last, y_last) = pts.last().unwrap();
        if t_last == 0 {
            // 1/0-th root is undefined
            return (retrieve(seq, t, v), FitDiagnostics::fallback(pts));
        }
        let mut candidates: Vec<f64> = if t_last % 2 == 1 {
            vec![signed_root(y_last, t_last)]
        } else if y_last > 0.0 {
            let r = libm::pow(y_last, 1.0 / t_last as f64);
            vec![r, -r]
        } else {
            Vec::new()
        };
        candidates.retain(|&a| {
            pts.iter().all(|&(j, y)| {
                let predicted = libm::pow(a, j as f64);
                (predicted - y).abs() <= 1e-6 * y.abs().max(1.0)
            })
        });
        if candidates.len() == 1 {
            let a = candidates[0];
            (Value::Num(libm::pow(a, t as f64)), FitDiagnostics::fit(pts, vec![a]))
        } else {
            (retrieve(seq, t, v), FitDiagnostics::fallback(pts))
        }
    }
}

/// Ordinary least squares over all observations.
pub struct PrLinearReg;

fn ols(pts: &[(usize, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|&(x, _)| x as f64).sum();
    let sy: f64 = pts.iter().map(|&(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|&(x, _)| (x as f64) * (x as f64)).sum();
    let sxy: f64 = pts.iter().map(|&(x, y)| (x as f64) * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return (0.0, sy / n);
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

impl PrFunction for PrLinearReg {
    fn name(&self) -> &str {
        "linear_reg"
    }

    fn min_points(&self) -> usize {
        2
    }

    fn predict_diag(&self, seq: &[State], t: i64, v: VarId) -> (Value, FitDiagnostics) {
        let pts = match fit_preamble(seq, t, v, 2) {
            Ok(p) => p,
            Err(out) => return out,
        };
        let (slope, intercept) = ols(&pts);
        let value = slope * t as f64 + intercept;
        (Value::Num(value), FitDiagnostics::fit(pts, vec![slope, intercept]))
    }
}

/// Dominant-coefficients line: fits a line through every pair of
/// observations, counts coefficient pairs (quantized to 1e-6) and evaluates
/// the most frequent one. Ties break towards the lexicographically smallest
/// `(a, b)`, which also makes the choice deterministic.
pub struct PrDomFirstPoly;

fn quantize(x: f64) -> i64 {
    libm::round(x * 1e6) as i64
}

impl PrFunction for PrDomFirstPoly {
    fn name(&self) -> &str {
        "dom_1st_poly"
    }

    fn min_points(&self) -> usize {
        2
    }

    fn predict_diag(&self, seq: &[State], t: i64, v: VarId) -> (Value, FitDiagnostics) {
        let pts = match fit_preamble(seq, t, v, 2) {
            Ok(p) => p,
            Err(out) => return out,
        };
        let mut classes: BTreeMap<(i64, i64), (usize, (f64, f64))> = BTreeMap::new();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let (x1, y1) = (pts[i].0 as f64, pts[i].1);
                let (x2, y2) = (pts[j].0 as f64, pts[j].1);
                let a = (y2 - y1) / (x2 - x1);
                let b = y1 - a * x1;
                let key = (quantize(a), quantize(b));
                let entry = classes.entry(key).or_insert((0, (a, b)));
                entry.0 += 1;
            }
        }
        // max count; BTreeMap iteration order breaks ties towards the
        // lexicographically smallest quantized (a, b)
        let (_, &(_, (a, b))) = classes
            .iter()
            .max_by(|(ka, va), (kb, vb)| va.0.cmp(&vb.0).then_with(|| kb.cmp(ka)))
            .unwrap();
        let value = a * t as f64 + b;
        (Value::Num(value), FitDiagnostics::fit(pts, vec![a, b]))
    }
}

/// Sinusoid `a * sin(b * (pi/2) * t + c)` fitted by multi-start
/// Levenberg-Marquardt.
///
/// Starts span amplitude `+-max|y|`, a phase grid and frequencies
/// `b in {0.5, 1, ..., 4}`. Among starts whose final residual ties with the
/// best one, the smallest |b| wins: observations at integer timestamps alias
/// higher frequencies, and the smoothest representative generalizes across
/// the integer grid. Falls back to static retrieval when the best residual
/// exceeds `1e-3 * sum(y^2)`. The seed only permutes start order.
pub struct PrSin {
    seed: u64,
}

impl PrSin {
    pub fn new(seed: u64) -> Self {
        PrSin { seed }
    }
}

const FRAC_PI_2: f64 = core::f64::consts::FRAC_PI_2;

fn sin_model(p: &[f64; 3], t: f64) -> f64 {
    p[0] * libm::sin(p[1] * FRAC_PI_2 * t + p[2])
}

fn sin_cost(p: &[f64; 3], pts: &[(usize, f64)]) -> f64 {
    pts.iter()
        .map(|&(x, y)| {
            let r = sin_model(p, x as f64) - y;
            r * r
        })
        .sum()
}

/// Solves a 3x3 linear system by Gaussian elimination with partial pivoting.
fn solve3(mut m: [[f64; 4]; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| {
            m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap_or(core::cmp::Ordering::Equal)
        })?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

fn lm_fit_sin(pts: &[(usize, f64)], start: [f64; 3]) -> ([f64; 3], f64) {
    let mut p = start;
    let mut cost = sin_cost(&p, pts);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        // normal equations of the damped Gauss-Newton step
        let mut jtj = [[0.0f64; 3]; 3];
        let mut jtr = [0.0f64; 3];
        for &(x, y) in pts {
            let tf = x as f64;
            let phase = p[1] * FRAC_PI_2 * tf + p[2];
            let s = libm::sin(phase);
            let c = libm::cos(phase);
            let jac = [s, p[0] * c * FRAC_PI_2 * tf, p[0] * c];
            let r = p[0] * s - y;
            for i in 0..3 {
                for j in 0..3 {
                    jtj[i][j] += jac[i] * jac[j];
                }
                jtr[i] += jac[i] * r;
            }
        }
        let mut sys = [[0.0f64; 4]; 3];
        for i in 0..3 {
            for j in 0..3 {
                sys[i][j] = jtj[i][j];
            }
            sys[i][i] += lambda * jtj[i][i].max(1e-12);
            sys[i][3] = -jtr[i];
        }
        let delta = match solve3(sys) {
            Some(d) => d,
            None => {
                lambda *= 10.0;
                if lambda > 1e12 {
                    break;
                }
                continue;
            }
        };
        let cand = [p[0] + delta[0], p[1] + delta[1], p[2] + delta[2]];
        let cand_cost = sin_cost(&cand, pts);
        if cand_cost < cost {
            let improvement = cost - cand_cost;
            p = cand;
            cost = cand_cost;
            lambda = (lambda * 0.1).max(1e-12);
            if improvement < 1e-14 * (1.0 + cost) {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    (p, cost)
}

impl PrFunction for PrSin {
    fn name(&self) -> &str {
        "sin"
    }

    fn min_points(&self) -> usize {
        3
    }

    fn predict_diag(&self, seq: &[State], t: i64, v: VarId) -> (Value, FitDiagnostics) {
        let pts = match fit_preamble(seq, t, v, 3) {
            Ok(p) => p,
            Err(out) => return out,
        };
        let scale: f64 = pts.iter().map(|&(_, y)| y * y).sum();
        let amp = pts.iter().map(|&(_, y)| y.abs()).fold(0.0f64, f64::max).max(1e-3);
        let mut starts = Vec::new();
        for i in 0..8 {
            let b0 = 0.5 + 0.5 * i as f64;
            for j in 0..4 {
                let c0 = FRAC_PI_2 * j as f64;
                starts.push([amp, b0, c0]);
                starts.push([-amp, b0, c0]);
            }
        }
        // the seed only permutes start order; the tie margin keeps the
        // selected optimum independent of it in practice
        if self.seed != 0 {
            let mut s = self.seed;
            for i in (1..starts.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (s >> 33) as usize % (i + 1);
                starts.swap(i, j);
            }
        }
        let mut fits: Vec<([f64; 3], f64)> = starts.iter().map(|s| lm_fit_sin(&pts, *s)).collect();
        let best_cost = fits.iter().map(|&(_, c)| c).fold(f64::INFINITY, f64::min);
        let margin = best_cost + 1e-9 * (scale + 1e-12);
        fits.retain(|&(_, c)| c.is_finite() && c <= margin);
        fits.sort_by(|a, b| {
            a.0[1].abs().partial_cmp(&b.0[1].abs()).unwrap_or(core::cmp::Ordering::Equal)
        });
        let (p, cost) = match fits.first() {
            Some(&f) => f,
            None => return (retrieve(seq, t, v), FitDiagnostics::fallback(pts)),
        };
        if cost > 1e-3 * scale {
            return (retrieve(seq, t, v), FitDiagnostics::fallback(pts));
        }
        (Value::Num(sin_model(&p, t as f64)), FitDiagnostics::fit(pts, vec![p[0], p[1], p[2]]))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PredictError {
    UnregisteredType(String),
    UntypedVariable(String),
    BadCoefficients { type_name: String, expected: usize, got: usize },
    EmptySample,
}

impl fmt::Display for PredictError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictError::UnregisteredType(t) => write!(f, "no predictive retrieval function registered for type `{}`", t),
            PredictError::UntypedVariable(v) => write!(f, "variable `{}` has no type entry", v),
            PredictError::BadCoefficients { type_name, expected, got } => {
                write!(f, "type `{}` takes {} coefficients, got {}", type_name, expected, got)
            }
            PredictError::EmptySample => write!(f, "consistency check needs at least one sample sequence"),
        }
    }
}

impl core::error::Error for PredictError {}

/// Number of rule coefficients a built-in type takes.
pub fn type_arity(type_name: &str) -> Option<usize> {
    match type_name {
        "static" => Some(0),
        "1st_poly" | "linear_reg" | "dom_1st_poly" => Some(2),
        "2nd_poly" | "sin" => Some(3),
        "power" => Some(1),
        _ => None,
    }
}

/// Evaluates a type's closed-form rule at timestamp `t`. Returns `None` for
/// `static`, unknown types and empty coefficient vectors (no evolution).
pub fn rule_value(type_name: &str, eta: &[f64], t: i64) -> Option<f64> {
    let tf = t as f64;
    match (type_name, eta) {
        ("1st_poly", [a, b]) | ("linear_reg", [a, b]) | ("dom_1st_poly", [a, b]) => Some(a * tf + b),
        ("2nd_poly", [a, b, c]) => Some(a * tf * tf + b * tf + c),
        ("power", [a]) => Some(libm::pow(*a, tf)),
        ("sin", [a, b, c]) => Some(a * libm::sin(b * tf + c)),
        _ => None,
    }
}

/// Per-variable processual model entry: the variable's type, the true rule
/// coefficients driving world evolution (may be empty for effect-driven
/// variables), and the initially-believed coefficients (entries may be
/// unknown).
#[derive(Clone, Debug)]
pub struct OmegaEntry {
    pub type_name: String,
    pub eta: Vec<f64>,
    pub believed_eta: Vec<Option<f64>>,
}

/// The processual-variable model: a type and coefficients per variable.
#[derive(Clone, Debug, Default)]
pub struct Omega {
    entries: BTreeMap<VarId, OmegaEntry>,
}

impl Omega {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a variable. Non-empty coefficient vectors must match the
    /// type's arity; an empty vector means the variable does not evolve by
    /// rule (it is still predicted according to its type).
    pub fn insert(&mut self, v: VarId, entry: OmegaEntry) -> Result<(), PredictError> {
        if let Some(expected) = type_arity(&entry.type_name) {
            if !entry.eta.is_empty() && entry.eta.len() != expected {
                return Err(PredictError::BadCoefficients {
                    type_name: entry.type_name.clone(),
                    expected,
                    got: entry.eta.len(),
                });
            }
            if !entry.believed_eta.is_empty() && entry.believed_eta.len() != expected {
                return Err(PredictError::BadCoefficients {
                    type_name: entry.type_name.clone(),
                    expected,
                    got: entry.believed_eta.len(),
                });
            }
        }
        self.entries.insert(v, entry);
        Ok(())
    }

    pub fn insert_static(&mut self, v: VarId) {
        self.entries.insert(
            v,
            OmegaEntry { type_name: "static".to_owned(), eta: Vec::new(), believed_eta: Vec::new() },
        );
    }

    pub fn get(&self, v: VarId) -> Option<&OmegaEntry> {
        self.entries.get(&v)
    }

    pub fn type_of(&self, v: VarId) -> Option<&str> {
        self.entries.get(&v).map(|e| e.type_name.as_str())
    }

    /// All registered variables, in id order.
    pub fn vars(&self) -> Vec<VarId> {
        self.entries.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &OmegaEntry)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }
}

/// Counters accumulated across predictive calls.
#[derive(Clone, Copy, Debug, Default)]
pub struct PrStats {
    pub pr_calls: u64,
    pub genuine_fits: u64,
    pub perspective_calls: u64,
}

/// Registry binding type names to predictive retrieval functions.
#[derive(Clone, Default)]
pub struct PrRegistry {
    fns: BTreeMap<String, Arc<dyn PrFunction>>,
}

impl PrRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// All seven built-in functions bound to their own type names. The seed
    /// permutes the sinusoid fitter's multi-start order.
    pub fn standard(seed: u64) -> Self {
        let mut r = Self::new();
        r.register(Arc::new(PrStatic));
        r.register(Arc::new(PrFirstPoly));
        r.register(Arc::new(PrSecondPoly));
        r.register(Arc::new(PrPower));
        r.register(Arc::new(PrSin::new(seed)));
        r.register(Arc::new(PrLinearReg));
        r.register(Arc::new(PrDomFirstPoly));
        r
    }

    /// Binds a function under its own name.
    pub fn register(&mut self, f: Arc<dyn PrFunction>) {
        self.fns.insert(f.name().to_owned(), f);
    }

    /// Binds a function under an explicit type name.
    pub fn bind(&mut self, type_name: &str, f: Arc<dyn PrFunction>) {
        self.fns.insert(type_name.to_owned(), f);
    }

    /// Rebinds `type_name` to the function currently registered under
    /// `fn_name` (e.g. predict `1st_poly` variables with `linear_reg`).
    pub fn rebind(&mut self, type_name: &str, fn_name: &str) -> Result<(), PredictError> {
        let f = self
            .fns
            .get(fn_name)
            .cloned()
            .ok_or_else(|| PredictError::UnregisteredType(fn_name.to_owned()))?;
        self.fns.insert(type_name.to_owned(), f);
        Ok(())
    }

    pub fn get(&self, type_name: &str) -> Option<&dyn PrFunction> {
        self.fns.get(type_name).map(|f| f.as_ref())
    }

    pub fn predict(
        &self,
        type_name: &str,
        seq: &[State],
        t: i64,
        v: VarId,
        stats: &mut PrStats,
    ) -> Result<Value, PredictError> {
        let f = self
            .get(type_name)
            .ok_or_else(|| PredictError::UnregisteredType(type_name.to_owned()))?;
        let (value, diag) = f.predict_diag(seq, t, v);
        stats.pr_calls += 1;
        if diag.genuine_fit() {
            stats.genuine_fits += 1;
        }
        Ok(value)
    }
}

/// The complete prediction of a sequence: every registered variable at every
/// timestamp, predicted by its type's function.
pub fn predict_sequence(
    registry: &PrRegistry,
    omega: &Omega,
    seq: &[State],
    stats: &mut PrStats,
) -> Result<Vec<State>, PredictError> {
    let vars = omega.vars();
    let mut out = Vec::with_capacity(seq.len());
    for t in 0..seq.len() {
        let mut state = State::new();
        for &v in &vars {
            let type_name = omega.type_of(v).unwrap();
            let value = registry.predict(type_name, seq, t as i64, v, stats)?;
            state.assign(v, value);
        }
        out.push(state);
    }
    Ok(out)
}

/// A counterexample found by a consistency check.
#[derive(Clone, Debug)]
pub struct ConsistencyWitness {
    pub sample: usize,
    pub t: usize,
    pub var: VarId,
    pub expected: Value,
    pub got: Value,
}

#[derive(Clone, Debug, Default)]
pub struct PrConsistencyReport {
    pub samples_checked: usize,
    pub preserving_violations: Vec<ConsistencyWitness>,
    pub recursive_violations: Vec<ConsistencyWitness>,
}

impl PrConsistencyReport {
    pub fn compulsory_hold(&self) -> bool {
        self.preserving_violations.is_empty() && self.recursive_violations.is_empty()
    }
}

/// Checks preserving and recursive consistency of `pr` over `vars` on the
/// sample sequences. Recursive consistency is exercised on the full
/// prediction and on deterministic intermediate augmentations.
pub fn check_pr_consistency(
    pr: &dyn PrFunction,
    vars: &[VarId],
    samples: &[Vec<State>],
) -> Result<PrConsistencyReport, PredictError> {
    if samples.is_empty() {
        return Err(PredictError::EmptySample);
    }
    let mut report = PrConsistencyReport {
        samples_checked: samples.len(),
        ..Default::default()
    };
    for (si, seq) in samples.iter().enumerate() {
        let n = seq.len();
        let mut prediction: Vec<State> = Vec::with_capacity(n);
        for t in 0..n {
            let mut st = State::new();
            for &v in vars {
                st.assign(v, pr.predict(seq, t as i64, v));
            }
            prediction.push(st);
        }
        // preserving: observed values survive into the prediction
        for t in 0..n {
            for &v in vars {
                if seq[t].has_value(v) {
                    let expected = seq[t].get(v).unwrap();
                    let got = prediction[t].get(v).unwrap();
                    if !got.approx_eq(expected) {
                        report.preserving_violations.push(ConsistencyWitness {
                            sample: si,
                            t,
                            var: v,
                            expected: expected.clone(),
                            got: got.clone(),
                        });
                    }
                }
            }
        }
        // recursive: intermediate sequences between seq and its prediction
        // leave every prediction unchanged
        for pattern in 0..4 {
            let mut w: Vec<State> = seq.clone();
            for t in 0..n {
                for &v in vars {
                    if w[t].has_value(v) {
                        continue;
                    }
                    let take = match pattern {
                        0 => true,
                        p => (t + v.0 as usize) % 3 == p - 1,
                    };
                    if take && prediction[t].has_value(v) {
                        let val = prediction[t].get(v).unwrap().clone();
                        w[t].assign(v, val);
                    }
                }
            }
            for t in 0..n {
                for &v in vars {
                    let got = pr.predict(&w, t as i64, v);
                    let expected = prediction[t].get(v).unwrap();
                    if !got.approx_eq(expected) {
                        report.recursive_violations.push(ConsistencyWitness {
                            sample: si,
                            t,
                            var: v,
                            expected: expected.clone(),
                            got,
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Default)]
pub struct ReconstructiveReport {
    pub worlds_checked: usize,
    pub violations: Vec<ConsistencyWitness>,
}

impl ReconstructiveReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks reconstructive consistency: for every agent, predicting from the
/// agent's observation of a complete world sequence does not change what the
/// agent observes.
pub fn check_pr_reconstructive(
    pr: &dyn PrFunction,
    vars: &[VarId],
    model: &ObservationModel,
    worlds: &[Vec<State>],
) -> Result<ReconstructiveReport, PredictError> {
    if worlds.is_empty() {
        return Err(PredictError::EmptySample);
    }
    let mut report = ReconstructiveReport {
        worlds_checked: worlds.len(),
        ..Default::default()
    };
    for (wi, world) in worlds.iter().enumerate() {
        for agent in model.agent_ids() {
            let seq = model.observe_seq(agent, world);
            let mut prediction = Vec::with_capacity(seq.len());
            for t in 0..seq.len() {
                let mut st = State::new();
                for &v in vars {
                    let val = pr.predict(&seq, t as i64, v);
                    if !val.is_none() {
                        st.assign(v, val);
                    }
                }
                prediction.push(st);
            }
            for t in 0..seq.len() {
                let obs = model.observe(agent, &prediction[t]);
                if obs != seq[t] {
                    let var = obs
                        .iter()
                        .map(|(v, _)| v)
                        .find(|v| !seq[t].contains(*v))
                        .or_else(|| seq[t].iter().map(|(v, _)| v).find(|v| !obs.contains(*v)))
                        .unwrap_or(VarId(0));
                    report.violations.push(ConsistencyWitness {
                        sample: wi,
                        t,
                        var,
                        expected: seq[t].get(var).cloned().unwrap_or(Value::None),
                        got: obs.get(var).cloned().unwrap_or(Value::None),
                    });
                }
            }
        }
    }
    Ok(report)
}
