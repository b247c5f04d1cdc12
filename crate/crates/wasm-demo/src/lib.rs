//! Browser bindings for three small explorers. Each returns a JSON string.
//!
//! The `*_json` functions are plain Rust so they can be tested natively; the
//! exported wrappers only convert errors into JS exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use picorr::numerics::{partial_isometry_residual, CMatrix, Tolerance};
use picorr::shifts::{self, WeightedShiftSpec};
use picorr::{powers, products, CovariantRep, C64};

type Res = Result<String, String>;

fn to_json<T: Serialize>(value: &T) -> Res {
    picorr::io::to_json_string(value).map_err(|e| e.to_string())
}

fn real(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_fn(rows, cols, |r, c| C64::new(data[r * cols + c], 0.0))
}

fn row(v: CMatrix, tol: &Tolerance) -> Result<CovariantRep, String> {
    CovariantRep::scalar_row(vec![v], tol).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct ShiftView {
    spec: WeightedShiftSpec,
    criterion: shifts::ShiftPiReport,
    /// `power_pi[k-1]` for k up to the window bound.
    power_pi: Vec<bool>,
    kernels: Vec<shifts::KernelComparison>,
}

/// Weighted shift with `n` generators, zero set `zero_set` (comma separated)
/// and weight `weight` on every basis vector listed in `weighted` (comma separated).
pub fn shift_json(
    n: usize,
    zero_set: &str,
    weighted: &str,
    weight: f64,
    trunc: usize,
    k: usize,
) -> Res {
    let tol = Tolerance::default();
    let parse = |s: &str| -> Result<Vec<usize>, String> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| format!("not an index: {t:?}"))
            })
            .collect()
    };
    if trunc > 243 {
        return Err("truncation above 243 is too slow for the page".into());
    }
    let mut spec = WeightedShiftSpec::new(n, Some(trunc))
        .map_err(|e| e.to_string())?
        .with_zero_set(parse(zero_set)?);
    for m in parse(weighted)? {
        for i in 1..=n {
            spec = spec.with_weight(i, m, weight).map_err(|e| e.to_string())?;
        }
    }
    let criterion = shifts::shift_pi_criterion(&spec, &tol).map_err(|e| e.to_string())?;
    let power_pi = (1..=spec.window_bound().max(1))
        .map(|j| shifts::power_is_pi(&spec, j, &tol))
        .collect();
    let kernels = (1..=n)
        .map(|i| shifts::compare_kernel(&spec, i, k, &tol))
        .collect::<Result<Vec<_>, _>>();
    let view = ShiftView {
        spec,
        criterion,
        power_pi,
        kernels: kernels.map_err(|e| e.to_string())?,
    };
    to_json(&view)
}

#[derive(Serialize)]
struct ProductView {
    angle: f64,
    report: products::CommutingReport,
}

/// `V1 = diag(1, 0)` against `V2 : e0 ↦ cos θ e0 + sin θ e1`.
pub fn product_json(theta: f64) -> Res {
    let tol = Tolerance::default();
    let (s, c) = theta.sin_cos();
    let v1 = row(real(2, 2, &[1.0, 0.0, 0.0, 0.0]), &tol)?;
    let v2 = row(real(2, 2, &[c, 0.0, s, 0.0]), &tol)?;
    let report = products::commuting_projection_test(&v1, &v2).map_err(|e| e.to_string())?;
    to_json(&ProductView {
        angle: theta,
        report,
    })
}

#[derive(Serialize)]
struct RootView {
    c: f64,
    pi_residual: f64,
    root: powers::RootReport,
}

/// Root criterion for `k = 2` on the nilpotent `[[0, c], [0, 0]]`.
pub fn root_json(c: f64) -> Res {
    let tol = Tolerance::default();
    let rep = row(real(2, 2, &[0.0, c, 0.0, 0.0]), &tol)?;
    let root = powers::root_criterion(&rep, 2).map_err(|e| e.to_string())?;
    to_json(&RootView {
        c,
        pi_residual: partial_isometry_residual(rep.tilde()),
        root,
    })
}

fn js(r: Res) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn shift_explorer(
    n: usize,
    zero_set: &str,
    weighted: &str,
    weight: f64,
    trunc: usize,
    k: usize,
) -> Result<String, JsError> {
    js(shift_json(n, zero_set, weighted, weight, trunc, k))
}

#[wasm_bindgen]
pub fn product_explorer(theta: f64) -> Result<String, JsError> {
    js(product_json(theta))
}

#[wasm_bindgen]
pub fn root_explorer(c: f64) -> Result<String, JsError> {
    js(root_json(c))
}
