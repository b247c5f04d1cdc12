//! Randomized verification and falsification of the criteria in this crate.
//!
//! Each [`TheoremId`] pairs a constructive instance generator with an
//! evaluator of both sides of a stated equivalence or implication. Trials
//! draw from independent ChaCha8 streams keyed by `(master_seed, trial,
//! attempt)`, so reports are byte-identical for a given configuration no
//! matter how many threads run them.

pub mod gen;
mod theorems;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covrep::CovariantRep;
use crate::error::{Error, Result};
use crate::io::RepJson;
use crate::numerics::Tolerance;
use crate::shifts::WeightedShiftSpec;

pub use gen::AlgebraShape;
pub use theorems::{random_structured_fixture, FixtureKind};

/// Attempts per trial before the trial is counted as skipped.
pub const MAX_ATTEMPTS: u64 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TheoremId {
    /// Product of two partial isometric representations is partial isometric
    /// iff `𝔈 = Ṽ¹*Ṽ¹` and `𝔉 = I ⊗ Ṽ²Ṽ²*` commute.
    #[serde(rename = "product-commuting")]
    ProductCommuting,
    /// The four stage conditions for a chain of factors agree.
    #[serde(rename = "product-chain")]
    ProductChain,
    /// The product is partial isometric iff its pseudoinverse is the
    /// reversed chain of amplified factor pseudoinverses.
    #[serde(rename = "product-pinv")]
    ProductPinv,
    /// The defect matrix is a partial isometry iff the first factor is.
    #[serde(rename = "defect-dilation")]
    DefectDilation,
    /// Kernel chain condition iff range invariance, for each power.
    #[serde(rename = "chain-range")]
    ChainRange,
    /// For partial isometric representations: `Ṽ_1..Ṽ_n` partial isometries
    /// iff the kernel chain holds up to `n`.
    #[serde(rename = "power-chain")]
    PowerChain,
    /// `Ṽ_n` partial isometric and the chain at `n + 1` give `Ṽ_{n+1}`.
    #[serde(rename = "power-step")]
    PowerStep,
    /// Regular representations: `(I ⊗ S) N(Ṽ_m) ⊆ N(Ṽ_{m+1})` for
    /// generalized inverses `S`.
    #[serde(rename = "gen-inverse-kernel")]
    GenInverseKernel,
    /// Regular representations: partial isometric iff power partial isometric.
    #[serde(rename = "regular-power")]
    RegularPower,
    /// Weighted shifts: kernel formula, unit-weight criterion, power windows.
    #[serde(rename = "weighted-shift")]
    WeightedShift,
    /// Root criterion: with `Ṽ_k` partial isometric, `Ṽ` is iff (a) and (b).
    #[serde(rename = "root")]
    Root,
    /// `N(I_E ⊗ Ṽ) = N(Ṽ_2)` forces a partial isometry.
    #[serde(rename = "kernel-equality")]
    KernelEquality,
    /// Condition (a) with the chain inclusion gives (b).
    #[serde(rename = "root-orthogonality")]
    RootOrthogonality,
    /// Bi-regular representations admit both Wold-type decompositions.
    #[serde(rename = "wold")]
    Wold,
}

impl TheoremId {
    pub const ALL: [TheoremId; 14] = [
        TheoremId::ProductCommuting,
        TheoremId::ProductChain,
        TheoremId::ProductPinv,
        TheoremId::DefectDilation,
        TheoremId::ChainRange,
        TheoremId::PowerChain,
        TheoremId::PowerStep,
        TheoremId::GenInverseKernel,
        TheoremId::RegularPower,
        TheoremId::WeightedShift,
        TheoremId::Root,
        TheoremId::KernelEquality,
        TheoremId::RootOrthogonality,
        TheoremId::Wold,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::ProductCommuting => "product-commuting",
            TheoremId::ProductChain => "product-chain",
            TheoremId::ProductPinv => "product-pinv",
            TheoremId::DefectDilation => "defect-dilation",
            TheoremId::ChainRange => "chain-range",
            TheoremId::PowerChain => "power-chain",
            TheoremId::PowerStep => "power-step",
            TheoremId::GenInverseKernel => "gen-inverse-kernel",
            TheoremId::RegularPower => "regular-power",
            TheoremId::WeightedShift => "weighted-shift",
            TheoremId::Root => "root",
            TheoremId::KernelEquality => "kernel-equality",
            TheoremId::RootOrthogonality => "root-orthogonality",
            TheoremId::Wold => "wold",
        }
    }

    /// The statement being verified.
    pub fn statement(self) -> &'static str {
        match self {
            TheoremId::ProductCommuting => {
                "for partial isometric factors, the product is partial isometric iff V1*V1 and I⊗V2V2* commute"
            }
            TheoremId::ProductChain => "for partial isometric factors, the four stage conditions agree stage by stage",
            TheoremId::ProductPinv => {
                "for partial isometric factors, the product is partial isometric iff its pseudoinverse is the reversed chain of factor pseudoinverses"
            }
            TheoremId::DefectDilation => {
                "for contractive pairs, the defect matrix is a partial isometry iff the first factor is; the single-factor dilation always is"
            }
            TheoremId::ChainRange => "for each m, the kernel chain condition holds iff the range invariance condition holds",
            TheoremId::PowerChain => {
                "for partial isometric representations, V_1..V_n are partial isometries iff the kernel chain holds up to n"
            }
            TheoremId::PowerStep => "if V_n is a partial isometry and the kernel chain holds at n+1, then V_{n+1} is a partial isometry",
            TheoremId::GenInverseKernel => {
                "for regular representations and generalized inverses S, (I⊗S)N(V_m) ⊆ N(V_{m+1})"
            }
            TheoremId::RegularPower => "a regular representation is partial isometric iff it is power partial isometric",
            TheoremId::WeightedShift => {
                "weighted shifts: kernels match the index formula, PI iff unit weights off B, PI implies power PI in the window"
            }
            TheoremId::Root => {
                "for contractive representations of full correspondences with V_k a partial isometry, V is a partial isometry iff conditions (a) and (b) hold"
            }
            TheoremId::KernelEquality => "under the root hypotheses, N(I⊗V) = N(V_2) implies V is a partial isometry",
            TheoremId::RootOrthogonality => "under the root hypotheses, condition (a) and the chain inclusion imply (b) and V partial isometric",
            TheoremId::Wold => {
                "bi-regular representations decompose in both Wold forms; for partial isometric ones the forms coincide and V' = V"
            }
        }
    }

    /// The deliberately false claim checked in falsification mode, if any.
    pub fn false_claim(self) -> Option<&'static str> {
        match self {
            TheoremId::ProductCommuting | TheoremId::ProductChain => {
                Some("the product of partial isometric representations is partial isometric")
            }
            TheoremId::ProductPinv => {
                Some("the product pseudoinverse is always the reversed factor chain")
            }
            TheoremId::DefectDilation => {
                Some("the defect matrix of a contractive pair is always a partial isometry")
            }
            TheoremId::ChainRange => Some("the range invariance condition always holds"),
            TheoremId::PowerChain => {
                Some("a partial isometric representation is power partial isometric")
            }
            TheoremId::PowerStep => Some("if V_n is a partial isometry then so is V_{n+1}"),
            TheoremId::GenInverseKernel => Some("(I⊗S)N(V_m) ⊆ N(V_{m+1}) without regularity"),
            TheoremId::RegularPower => {
                Some("every partial isometric representation is power partial isometric")
            }
            TheoremId::WeightedShift => Some("every weighted shift is partial isometric"),
            TheoremId::Root => {
                Some("a contraction with V_k a partial isometry is a partial isometry")
            }
            TheoremId::KernelEquality | TheoremId::RootOrthogonality | TheoremId::Wold => None,
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TheoremId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = TheoremId::ALL.iter().map(|t| t.as_str()).collect();
                Error::Usage(format!(
                    "unknown theorem id {s:?}; known: {}",
                    known.join(", ")
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub master_seed: u64,
    pub trials: usize,
    /// Inclusive range for `dim H`.
    pub h_dim: (usize, usize),
    /// Inclusive range for the module dimension of `E`.
    pub module_dim: (usize, usize),
    pub shape: AlgebraShape,
    /// Minimum residual of a negative verdict; attempts with a decision
    /// residual between the tolerance and `perturbation / 10` are redrawn.
    pub perturbation: f64,
    pub n_max: usize,
}

impl TrialConfig {
    /// Defaults sized for each statement (tensor powers grow as `n^m d`).
    pub fn for_theorem(id: TheoremId, master_seed: u64, trials: usize) -> Self {
        let base = TrialConfig {
            master_seed,
            trials,
            h_dim: (2, 8),
            module_dim: (1, 3),
            shape: AlgebraShape::Mixed,
            perturbation: 1e-3,
            n_max: 4,
        };
        match id {
            TheoremId::ProductChain => TrialConfig {
                h_dim: (2, 6),
                module_dim: (1, 2),
                ..base
            },
            TheoremId::ChainRange
            | TheoremId::PowerChain
            | TheoremId::PowerStep
            | TheoremId::RegularPower
            | TheoremId::GenInverseKernel => TrialConfig {
                h_dim: (2, 6),
                module_dim: (1, 2),
                ..base
            },
            TheoremId::Root | TheoremId::KernelEquality | TheoremId::RootOrthogonality => {
                TrialConfig {
                    h_dim: (2, 7),
                    module_dim: (1, 2),
                    shape: AlgebraShape::Scalar,
                    ..base
                }
            }
            TheoremId::WeightedShift => TrialConfig {
                module_dim: (1, 3),
                shape: AlgebraShape::Scalar,
                ..base
            },
            TheoremId::Wold => TrialConfig {
                h_dim: (3, 8),
                module_dim: (1, 2),
                ..base
            },
            _ => base,
        }
    }

    pub fn validate(&self, tol: &Tolerance) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Usage("trials must be at least 1".into()));
        }
        if self.perturbation.is_nan() || self.perturbation < 100.0 * tol.eq_rel {
            return Err(Error::Usage(format!(
                "perturbation {:.3e} must be at least 100 * eq_rel = {:.3e}",
                self.perturbation,
                100.0 * tol.eq_rel
            )));
        }
        if self.h_dim.0 == 0
            || self.h_dim.0 > self.h_dim.1
            || self.module_dim.0 == 0
            || self.module_dim.0 > self.module_dim.1
        {
            return Err(Error::Usage(
                "dimension ranges must be nonempty and start at 1 or more".into(),
            ));
        }
        if self.n_max == 0 {
            return Err(Error::Usage("n_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// A generated input: representations plus the extra data some statements need.
#[derive(Clone, Debug)]
pub struct Instance {
    pub reps: Vec<CovariantRep>,
    pub shift: Option<WeightedShiftSpec>,
    /// Power index for root-type statements.
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub reps: Vec<RepJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<WeightedShiftSpec>,
    pub k: usize,
}

impl From<&Instance> for InstanceJson {
    fn from(i: &Instance) -> Self {
        Self {
            reps: i.reps.iter().map(RepJson::from).collect(),
            shift: i.shift.clone(),
            k: i.k,
        }
    }
}

impl InstanceJson {
    pub fn build(&self, tol: &Tolerance) -> Result<Instance> {
        let reps = self
            .reps
            .iter()
            .map(|r| r.build(None, tol, usize::MAX))
            .collect::<Result<Vec<_>>>()?;
        Ok(Instance {
            reps,
            shift: self.shift.clone(),
            k: self.k,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub trial: u64,
    pub attempt: u64,
    pub detail: String,
    pub instance: InstanceJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub theorem_id: TheoremId,
    pub statement: String,
    pub falsify: bool,
    pub master_seed: u64,
    pub trials_run: usize,
    /// Trials on which the statement failed; in falsification mode, trials
    /// on which the false claim failed.
    pub equivalence_violations: usize,
    pub hypothesis_skips: usize,
    /// Why skipped trials were rejected: the reason on each trial's last attempt.
    pub skip_reasons: BTreeMap<String, usize>,
    pub counterexamples: Vec<Counterexample>,
    /// Largest decision residual among verdicts that came out true.
    pub max_residual: f64,
    pub config: TrialConfig,
    pub tolerance: Tolerance,
}

impl VerificationReport {
    /// No trial violated the statement under test. When falsifying, a
    /// failure here means the false claim was refuted.
    pub fn success(&self) -> bool {
        self.equivalence_violations == 0
    }
}

/// One thresholded decision inside an evaluation.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Decision {
    pub residual: f64,
    /// The residual is compared against `tolerance * max(1, scale)`.
    pub scale: f64,
    pub verdict: bool,
}

impl Decision {
    pub fn new(residual: f64, scale: f64, verdict: bool) -> Self {
        Self {
            residual,
            scale,
            verdict,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Verdict {
    Holds,
    Violated(String),
    NotApplicable(String),
}

#[derive(Clone, Debug)]
pub(crate) struct Evaluation {
    pub verdict: Verdict,
    pub decisions: Vec<Decision>,
}

impl Evaluation {
    /// Some decision residual is neither at rounding level nor clearly away from it.
    fn borderline(&self, tol: &Tolerance, perturbation: f64) -> bool {
        let theta = tol.eq_rel.max(tol.incl_abs);
        self.decisions.iter().any(|d| {
            let s = d.scale.max(1.0);
            d.residual > theta * s / 100.0 && d.residual < perturbation * s / 10.0
        })
    }

    fn max_positive_residual(&self) -> f64 {
        self.decisions
            .iter()
            .filter(|d| d.verdict)
            .map(|d| d.residual)
            .fold(0.0, f64::max)
    }
}

enum TrialOutcome {
    Pass(f64),
    Violation(Counterexample, f64),
    Skip(String),
}

fn run_trial(
    id: TheoremId,
    cfg: &TrialConfig,
    tol: &Tolerance,
    falsify: bool,
    trial: u64,
) -> TrialOutcome {
    let mut reason = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = gen::stream_rng(cfg.master_seed, trial, attempt);
        let inst = match theorems::generate(id, &mut rng, cfg, tol, falsify) {
            Ok(inst) => inst,
            Err(e) => {
                reason = format!("generation failed: {e}");
                continue;
            }
        };
        let eval = match theorems::evaluate(id, &inst, cfg, tol, falsify) {
            Ok(eval) => eval,
            Err(e) => {
                reason = format!("evaluation failed: {e}");
                continue;
            }
        };
        if eval.borderline(tol, cfg.perturbation) {
            reason = "borderline residual".into();
            continue;
        }
        let max = eval.max_positive_residual();
        return match eval.verdict {
            Verdict::Holds => TrialOutcome::Pass(max),
            Verdict::Violated(detail) => TrialOutcome::Violation(
                Counterexample {
                    trial,
                    attempt,
                    detail,
                    instance: InstanceJson::from(&inst),
                },
                max,
            ),
            Verdict::NotApplicable(why) => {
                reason = why;
                continue;
            }
        };
    }
    TrialOutcome::Skip(reason)
}

/// Runs `cfg.trials` trials of `id` (or of its false claim when `falsify`).
pub fn verify(
    id: TheoremId,
    cfg: &TrialConfig,
    tol: &Tolerance,
    falsify: bool,
) -> Result<VerificationReport> {
    cfg.validate(tol)?;
    if falsify && id.false_claim().is_none() {
        return Err(Error::Usage(format!("{id} has no falsification claim")));
    }
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(id, cfg, tol, falsify, t))
        .collect();
    let mut report = VerificationReport {
        theorem_id: id,
        statement: if falsify {
            id.false_claim().unwrap_or_default()
        } else {
            id.statement()
        }
        .to_string(),
        falsify,
        master_seed: cfg.master_seed,
        trials_run: cfg.trials,
        equivalence_violations: 0,
        hypothesis_skips: 0,
        skip_reasons: BTreeMap::new(),
        counterexamples: Vec::new(),
        max_residual: 0.0,
        config: cfg.clone(),
        tolerance: *tol,
    };
    for o in outcomes {
        match o {
            TrialOutcome::Pass(r) => report.max_residual = report.max_residual.max(r),
            TrialOutcome::Violation(c, r) => {
                report.max_residual = report.max_residual.max(r);
                report.equivalence_violations += 1;
                report.counterexamples.push(c);
            }
            TrialOutcome::Skip(why) => {
                report.hypothesis_skips += 1;
                *report.skip_reasons.entry(why).or_default() += 1;
            }
        }
    }
    Ok(report)
}

/// Regenerates the instance of a counterexample from its seed coordinates.
pub fn regenerate(
    id: TheoremId,
    cfg: &TrialConfig,
    tol: &Tolerance,
    falsify: bool,
    trial: u64,
    attempt: u64,
) -> Result<Instance> {
    let mut rng = gen::stream_rng(cfg.master_seed, trial, attempt);
    theorems::generate(id, &mut rng, cfg, tol, falsify)
}

/// Re-evaluates a serialized instance; `Some(detail)` iff it still violates.
pub fn replay(
    id: TheoremId,
    instance: &InstanceJson,
    cfg: &TrialConfig,
    tol: &Tolerance,
    falsify: bool,
) -> Result<Option<String>> {
    let inst = instance.build(tol)?;
    Ok(
        match theorems::evaluate(id, &inst, cfg, tol, falsify)?.verdict {
            Verdict::Violated(d) => Some(d),
            _ => None,
        },
    )
}
