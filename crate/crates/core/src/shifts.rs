//! Truncated unilateral weighted shifts over `A = C`, `E = C^n`.
//!
//! `H` is truncated to `span{e_0, …, e_M}` and `V_i e_m = w_{i,m} α_m e_{nm+i}`
//! with `α_m = 0` exactly on the zero set `B`. When `nm + i > M` the entry is
//! dropped and the pair is recorded as out of window.
//!
//! Powers are only meaningful on the faithful window
//! `W_k = {m : n^k m + n(n^{k-1} + … + 1) ≤ M}`: for those `m` every orbit of
//! length `k` stays inside the truncation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::covrep::CovariantRep;
use crate::error::{Error, Result};
use crate::numerics::{mapped_inclusion_residual, CMatrix, Subspace, Tolerance, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightEntry {
    pub i: usize,
    pub m: usize,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecJson", into = "SpecJson")]
pub struct WeightedShiftSpec {
    n: usize,
    weights: BTreeMap<(usize, usize), f64>,
    zero_set: BTreeSet<usize>,
    trunc: usize,
}

#[derive(Serialize, Deserialize)]
struct SpecJson {
    n: usize,
    #[serde(default)]
    weights: Vec<WeightEntry>,
    #[serde(default)]
    zero_set: Vec<usize>,
    trunc: usize,
}

impl TryFrom<SpecJson> for WeightedShiftSpec {
    type Error = Error;

    fn try_from(j: SpecJson) -> Result<Self> {
        let mut s = WeightedShiftSpec::new(j.n, Some(j.trunc))?.with_zero_set(j.zero_set);
        for e in j.weights {
            s = s.with_weight(e.i, e.m, e.w)?;
        }
        Ok(s)
    }
}

impl From<WeightedShiftSpec> for SpecJson {
    fn from(s: WeightedShiftSpec) -> Self {
        SpecJson {
            n: s.n,
            weights: s
                .weights
                .iter()
                .map(|(&(i, m), &w)| WeightEntry { i, m, w })
                .collect(),
            zero_set: s.zero_set.into_iter().collect(),
            trunc: s.trunc,
        }
    }
}

/// `n(n^{k-1} + … + 1)`, the largest orbit offset after `k` steps.
fn orbit_offset(n: usize, k: usize) -> Option<usize> {
    let mut acc: usize = 0;
    for _ in 0..k {
        acc = acc.checked_mul(n)?.checked_add(n)?;
    }
    Some(acc)
}

impl WeightedShiftSpec {
    /// Unit weights, empty zero set; `trunc = None` picks the smallest `M`
    /// supporting cubes.
    pub fn new(n: usize, trunc: Option<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("a weighted shift needs n ≥ 1".into()));
        }
        let trunc = trunc.unwrap_or_else(|| Self::min_trunc(n, 3));
        Ok(Self {
            n,
            weights: BTreeMap::new(),
            zero_set: BTreeSet::new(),
            trunc,
        })
    }

    /// Smallest `M` whose window `W_k` is nonempty.
    pub fn min_trunc(n: usize, k: usize) -> usize {
        orbit_offset(n, k).unwrap_or(usize::MAX)
    }

    pub fn with_zero_set(mut self, b: impl IntoIterator<Item = usize>) -> Self {
        self.zero_set = b.into_iter().collect();
        self
    }

    pub fn with_weight(mut self, i: usize, m: usize, w: f64) -> Result<Self> {
        if !(1..=self.n).contains(&i) {
            return Err(Error::Domain(format!(
                "shift index i = {i} outside 1..={}",
                self.n
            )));
        }
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::Domain(format!(
                "weight w[{i},{m}] = {w} must be finite and nonnegative"
            )));
        }
        self.weights.insert((i, m), w);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn zero_set(&self) -> &BTreeSet<usize> {
        &self.zero_set
    }

    pub fn weight(&self, i: usize, m: usize) -> f64 {
        self.weights.get(&(i, m)).copied().unwrap_or(1.0)
    }

    pub fn alpha(&self, m: usize) -> f64 {
        if self.zero_set.contains(&m) {
            0.0
        } else {
            1.0
        }
    }

    /// `V_i e_m` as `(target index, coefficient)`, or `None` out of window.
    pub fn step(&self, i: usize, m: usize) -> Option<(usize, f64)> {
        let t = self.n.checked_mul(m)?.checked_add(i)?;
        (t <= self.trunc).then(|| (t, self.weight(i, m) * self.alpha(m)))
    }

    /// Largest `m` in `W_k`, or `None` if the window is empty.
    pub fn window_max(&self, k: usize) -> Option<usize> {
        let off = orbit_offset(self.n, k)?;
        let scale = self.n.checked_pow(k as u32)?;
        (off <= self.trunc).then(|| (self.trunc - off) / scale)
    }

    pub fn window(&self, k: usize) -> Result<Vec<usize>> {
        match self.window_max(k) {
            Some(top) => Ok((0..=top).collect()),
            None => Err(Error::Window {
                power: k,
                min_trunc: Self::min_trunc(self.n, k),
            }),
        }
    }

    /// Largest power whose window is nonempty.
    pub fn window_bound(&self) -> usize {
        (1..)
            .take_while(|&k| self.window_max(k).is_some())
            .last()
            .unwrap_or(0)
    }

    pub fn out_of_window(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for m in 0..=self.trunc {
            for i in 1..=self.n {
                if self.step(i, m).is_none() {
                    out.push((i, m));
                }
            }
        }
        out
    }

    /// Dense truncated `V_i`.
    pub fn matrix(&self, i: usize) -> CMatrix {
        let h = self.trunc + 1;
        let mut v = CMatrix::zeros(h, h);
        for m in 0..h {
            if let Some((t, c)) = self.step(i, m) {
                v[(t, m)] = C64::new(c, 0.0);
            }
        }
        v
    }
}

#[derive(Clone, Debug)]
pub struct ShiftRep {
    pub rep: CovariantRep,
    /// Entry `k - 1` is `max W_k`, for `k = 1..=window_bound`.
    pub windows: Vec<usize>,
    pub out_of_window: Vec<(usize, usize)>,
}

/// `σ(b) = b I_H` and `Ṽ(δ_i ⊗ h) = V_i h`.
pub fn build_shift(spec: &WeightedShiftSpec, tol: &Tolerance) -> Result<ShiftRep> {
    let vs = (1..=spec.n).map(|i| spec.matrix(i)).collect();
    let rep = CovariantRep::scalar_row(vs, tol)?;
    let windows = (1..=spec.window_bound())
        .filter_map(|k| spec.window_max(k))
        .collect();
    Ok(ShiftRep {
        rep,
        windows,
        out_of_window: spec.out_of_window(),
    })
}

/// `{m ∈ W_k : n^{p-1} m + Σ_{l=2}^{p} n^{p-l} i ∈ B for some p ≤ k}`.
pub fn kernel_formula(spec: &WeightedShiftSpec, i: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::Usage("kernel formula needs k ≥ 1".into()));
    }
    let window = spec.window(k)?;
    let n = spec.n;
    Ok(window
        .into_iter()
        .filter(|&m| {
            // idx runs through n^{p-1} m + Σ_{l=2}^{p} n^{p-l} i for p = 1, 2, …
            let mut idx = m;
            for p in 1..=k {
                if p > 1 {
                    idx = n * idx + i;
                }
                if spec.zero_set.contains(&idx) {
                    return true;
                }
            }
            false
        })
        .collect())
}

/// `N(V_i^k) ∩ span{e_m : m ∈ W_k}` from the dense truncated power.
pub fn brute_force_kernel(
    spec: &WeightedShiftSpec,
    i: usize,
    k: usize,
    tol: &Tolerance,
) -> Result<Subspace> {
    let window = spec.window(k)?;
    let h = spec.trunc + 1;
    let v = spec.matrix(i);
    let mut p = crate::numerics::identity(h);
    for _ in 0..k {
        p = crate::numerics::mul(&v, &p);
    }
    let fw = Subspace::coordinate(h, &window);
    let ker = Subspace::kernel(&(p * fw.frame()), tol)?;
    Subspace::span_scaled(&(fw.frame() * ker.frame()), 1.0, tol)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelComparison {
    pub i: usize,
    pub k: usize,
    pub formula: Vec<usize>,
    pub brute_force_dim: usize,
    pub agree: bool,
}

pub fn compare_kernel(
    spec: &WeightedShiftSpec,
    i: usize,
    k: usize,
    tol: &Tolerance,
) -> Result<KernelComparison> {
    let formula = kernel_formula(spec, i, k)?;
    let brute = brute_force_kernel(spec, i, k, tol)?;
    let f = Subspace::coordinate(spec.trunc + 1, &formula);
    let agree = f.equals(&brute, tol)?;
    Ok(KernelComparison {
        i,
        k,
        formula,
        brute_force_dim: brute.dim(),
        agree,
    })
}

/// Whether `Ṽ_k` is a partial isometry. Each column of `Ṽ_k` has at most one
/// nonzero entry, so `Ṽ_k Ṽ_k^*` is diagonal and the test is that its
/// diagonal entries are 0 or 1.
pub fn power_is_pi(spec: &WeightedShiftSpec, k: usize, tol: &Tolerance) -> bool {
    let h = spec.trunc + 1;
    let mut diag = vec![0.0_f64; h];
    let mut frontier: Vec<(usize, f64)> = (0..h).map(|m| (m, 1.0)).collect();
    for _ in 0..k {
        let mut next = Vec::with_capacity(frontier.len() * spec.n);
        for &(m, c) in &frontier {
            for i in 1..=spec.n {
                if let Some((t, w)) = spec.step(i, m) {
                    if c * w != 0.0 {
                        next.push((t, c * w));
                    }
                }
            }
        }
        frontier = next;
    }
    for (t, c) in frontier {
        diag[t] += c * c;
    }
    diag.iter().all(|&d| tol.equal(d.min((d - 1.0).abs()), 1.0))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShiftPiReport {
    pub is_pi: bool,
    /// `w_{i,m} = 1` for every in-window `m ∉ B`.
    pub weights_unit_off_b: bool,
    /// Every `V_i` is a partial isometry.
    pub each_vi_pi: bool,
    pub power_pi_up_to: usize,
    pub window_bound: usize,
}

pub fn shift_pi_criterion(spec: &WeightedShiftSpec, tol: &Tolerance) -> Result<ShiftPiReport> {
    let built = build_shift(spec, tol)?;
    let is_pi = built.rep.is_partial_isometric();
    let mut unit = true;
    for m in 0..=spec.trunc {
        if spec.zero_set.contains(&m) {
            continue;
        }
        for i in 1..=spec.n {
            if spec.step(i, m).is_some() && !tol.equal((spec.weight(i, m) - 1.0).abs(), 1.0) {
                unit = false;
            }
        }
    }
    let each_vi_pi =
        (1..=spec.n).all(|i| crate::numerics::is_partial_isometry(&spec.matrix(i), tol));
    let window_bound = spec.window_bound();
    let power_pi_up_to = (1..=window_bound)
        .take_while(|&k| power_is_pi(spec, k, tol))
        .count();
    Ok(ShiftPiReport {
        is_pi,
        weights_unit_off_b: unit,
        each_vi_pi,
        power_pi_up_to,
        window_bound,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ShiftChainCheck {
    pub holds: bool,
    pub residual: f64,
}

/// `V_i N(V_i^{k+1})^⊥ ⊆ N(V_i^k)^⊥` for every `i`, with the source restricted
/// to `span{e_m : m ∈ W_{k+1}}`.
pub fn chain_inclusion_check(
    spec: &WeightedShiftSpec,
    k: usize,
    tol: &Tolerance,
) -> Result<ShiftChainCheck> {
    let window = spec.window(k + 1)?;
    let h = spec.trunc + 1;
    let fw = Subspace::coordinate(h, &window);
    let mut residual = 0.0_f64;
    for i in 1..=spec.n {
        let v = spec.matrix(i);
        let mut vk = crate::numerics::identity(h);
        for _ in 0..k {
            vk = crate::numerics::mul(&v, &vk);
        }
        let vk1 = crate::numerics::mul(&v, &vk);
        let local = Subspace::coimage(&(vk1 * fw.frame()), tol)?;
        let source = Subspace::span_scaled(&(fw.frame() * local.frame()), 1.0, tol)?;
        let target = Subspace::coimage(&vk, tol)?;
        residual = residual.max(mapped_inclusion_residual(&v, &source, &target)?);
    }
    Ok(ShiftChainCheck {
        holds: tol.included(residual),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn plain_shift() {
        let s = WeightedShiftSpec::new(1, Some(5)).unwrap();
        let v = s.matrix(1);
        for m in 0..5 {
            assert_eq!(v[(m + 1, m)], C64::new(1.0, 0.0));
        }
        assert_eq!(s.out_of_window(), vec![(1, 5)]);
        assert_eq!(s.window_max(1), Some(4));
        assert_eq!(s.window_max(5), Some(0));
        assert_eq!(s.window_max(6), None);
    }

    #[test]
    fn zero_set_kills_first_column() {
        let s = WeightedShiftSpec::new(2, Some(20))
            .unwrap()
            .with_zero_set([0]);
        for i in 1..=2 {
            let v = s.matrix(i);
            assert_eq!(v.column(0).norm(), 0.0);
            assert_eq!(v[(2 + i, 1)], C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn single_weight_entry() {
        let s = WeightedShiftSpec::new(2, Some(20))
            .unwrap()
            .with_weight(1, 1, 0.5)
            .unwrap();
        assert_eq!(s.matrix(1)[(3, 1)], C64::new(0.5, 0.0));
    }

    #[test]
    fn kernel_formula_examples() {
        let s = WeightedShiftSpec::new(2, Some(40))
            .unwrap()
            .with_zero_set([0]);
        assert_eq!(kernel_formula(&s, 1, 2).unwrap(), vec![0]);
        let s = WeightedShiftSpec::new(2, Some(40))
            .unwrap()
            .with_zero_set([4]);
        assert_eq!(kernel_formula(&s, 2, 2).unwrap(), vec![1, 4]);
        assert!(compare_kernel(&s, 2, 2, &tol()).unwrap().agree);
        assert!(compare_kernel(&s, 1, 3, &tol()).unwrap().agree);
    }

    #[test]
    fn empty_window_is_an_error() {
        let s = WeightedShiftSpec::new(2, Some(5)).unwrap();
        assert!(matches!(
            kernel_formula(&s, 1, 3),
            Err(Error::Window {
                power: 3,
                min_trunc: 14
            })
        ));
    }

    #[test]
    fn default_trunc_supports_cubes() {
        let s = WeightedShiftSpec::new(3, None).unwrap();
        assert_eq!(s.trunc(), 39);
        assert_eq!(s.window_max(3), Some(0));
    }

    #[test]
    fn criterion_on_weights() {
        let s = WeightedShiftSpec::new(2, Some(30))
            .unwrap()
            .with_zero_set([0, 3]);
        let r = shift_pi_criterion(&s, &tol()).unwrap();
        assert!(r.is_pi && r.weights_unit_off_b && r.each_vi_pi);
        assert_eq!(r.power_pi_up_to, r.window_bound);

        let bad = s.clone().with_weight(1, 2, 0.7).unwrap();
        let r = shift_pi_criterion(&bad, &tol()).unwrap();
        assert!(!r.is_pi && !r.weights_unit_off_b);

        let on_b = s.with_weight(2, 3, 5.0).unwrap();
        assert!(shift_pi_criterion(&on_b, &tol()).unwrap().is_pi);
    }

    #[test]
    fn zero_weight_off_b_breaks_the_literal_criterion() {
        // a vanishing weight off B acts like an extra zero: PI, yet w ≠ 1 off B
        let s = WeightedShiftSpec::new(1, Some(10))
            .unwrap()
            .with_weight(1, 2, 0.0)
            .unwrap();
        let r = shift_pi_criterion(&s, &tol()).unwrap();
        assert!(r.is_pi && !r.weights_unit_off_b);
    }

    #[test]
    fn chain_inclusion_examples() {
        let s = WeightedShiftSpec::new(1, Some(8)).unwrap();
        assert!(chain_inclusion_check(&s, 2, &tol()).unwrap().holds);
        let s = WeightedShiftSpec::new(2, Some(40))
            .unwrap()
            .with_zero_set([0, 3]);
        for k in 1..=2 {
            assert!(chain_inclusion_check(&s, k, &tol()).unwrap().holds);
        }
    }

    #[test]
    fn spec_json_roundtrip() {
        let s = WeightedShiftSpec::new(2, Some(12))
            .unwrap()
            .with_zero_set([1])
            .with_weight(2, 0, 0.25)
            .unwrap();
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<WeightedShiftSpec>(&j).unwrap(), s);
        assert!(serde_json::from_str::<WeightedShiftSpec>(r#"{"n":0,"trunc":3}"#).is_err());
    }
}
