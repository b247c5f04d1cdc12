//! Per-statement instance constructors and evaluators.
//!
//! Constructors build instances that satisfy the hypotheses by design and
//! draw both branches of each equivalence; evaluation only looks at the
//! instance, so serialized counterexamples replay without the generator.

use std::str::FromStr;

use rand::Rng;

use super::gen::{self, Shape};
use super::{Decision, Evaluation, Instance, TheoremId, TrialConfig, Verdict};
use crate::correspondence::Correspondence;
use crate::covrep::CovariantRep;
use crate::error::{Error, Result};
use crate::numerics::{identity, op_norm, partial_isometry_residual, CMatrix, Tolerance, C64};
use crate::shifts::WeightedShiftSpec;
use crate::{powers, products, shifts, wold};

fn pick<R: Rng>(rng: &mut R, range: (usize, usize)) -> usize {
    rng.random_range(range.0..=range.1.max(range.0))
}

fn one(reps: Vec<CovariantRep>) -> Instance {
    Instance {
        reps,
        shift: None,
        k: 0,
    }
}

/// `(residual, scale)` decision for "`x` is a partial isometry".
fn pi_decision(x: &CMatrix, tol: &Tolerance) -> Decision {
    let r = partial_isometry_residual(x);
    let s = op_norm(x);
    Decision::new(r, s, tol.equal(r, s))
}

fn incl(residual: f64, holds: bool) -> Decision {
    Decision::new(residual, 1.0, holds)
}

fn verdict(ok: bool, detail: impl FnOnce() -> String) -> Verdict {
    if ok {
        Verdict::Holds
    } else {
        Verdict::Violated(detail())
    }
}

/// A partial isometric representation with a uniformly drawn rank per block,
/// co-isometric blocks, or a twisted shift (partial isometric, with a
/// prescribed first non-partial-isometric power).
fn pi_power_rep<R: Rng>(rng: &mut R, cfg: &TrialConfig, tol: &Tolerance) -> Result<CovariantRep> {
    match rng.random_range(0..10) {
        0..=3 => {
            let shape = gen::random_shape(rng, cfg.shape, cfg.h_dim, cfg.module_dim, false)?;
            gen::random_forced_pi_rep(rng, &shape, tol)
        }
        4 => {
            let shape = gen::random_shape(rng, cfg.shape, cfg.h_dim, cfg.module_dim, false)?;
            gen::random_maximal_rep(rng, &shape, tol)
        }
        _ => twisted_rep(rng, cfg, tol),
    }
}

fn twisted_rep<R: Rng>(rng: &mut R, cfg: &TrialConfig, tol: &Tolerance) -> Result<CovariantRep> {
    let d = pick(rng, (cfg.h_dim.0.max(3), cfg.h_dim.1.max(3)));
    let chain = rng.random_range(2..d);
    let branch = d - chain;
    let twist = rng.random_range(0..chain - 1);
    CovariantRep::scalar_row(vec![gen::twisted_shift(rng, chain, twist, branch)], tol)
}

fn regular_rep<R: Rng>(
    rng: &mut R,
    cfg: &TrialConfig,
    pi: bool,
    tol: &Tolerance,
) -> Result<CovariantRep> {
    if rng.random_range(0..4) == 0 {
        let n = pick(rng, (cfg.module_dim.0.max(1), cfg.module_dim.1.clamp(1, 2)));
        let d = pick(rng, (cfg.h_dim.0.max(1), cfg.h_dim.1.min(6)));
        gen::surjective_scalar_rep(rng, n, d, pi, tol)
    } else {
        gen::regular_graph_rep(rng, cfg.h_dim.1.max(3), pi, tol)
    }
}

/// Contractive scalar representations with `Ṽ_k` a partial isometry, `k ≥ 2`.
fn root_instance<R: Rng>(rng: &mut R, cfg: &TrialConfig, tol: &Tolerance) -> Result<Instance> {
    let max_d = cfg.h_dim.1.max(3);
    match rng.random_range(0..10) {
        0..=5 => {
            let n = pick(rng, (cfg.module_dim.0.max(1), cfg.module_dim.1.clamp(1, 2)));
            let k1 = rng.random_range(1..=2);
            let k2 = rng.random_range(1..=2);
            let a = rng.random_range(0..=max_d.saturating_sub(k1 + k2).min(2));
            let z_pi = rng.random::<bool>();
            let co = rng.random_range(0..4) != 0;
            let rep = gen::root_family_rep(rng, n, (a, k1, k2), z_pi, co, tol)?;
            Ok(Instance {
                reps: vec![rep],
                shift: None,
                k: rng.random_range(2..=3),
            })
        }
        6..=7 => {
            let d = pick(rng, (cfg.h_dim.0.max(4), max_d.max(4)));
            let chain = rng.random_range(3..d);
            let branch = d - chain;
            let twist = rng.random_range(0..chain - 1);
            let first = gen::twisted_first_failure(chain, twist, branch);
            let top = first.map_or(4, |f| f - 1);
            if top < 2 {
                return Err(Error::Domain(
                    "twisted shift fails before the second power".into(),
                ));
            }
            let rep =
                CovariantRep::scalar_row(vec![gen::twisted_shift(rng, chain, twist, branch)], tol)?;
            Ok(Instance {
                reps: vec![rep],
                shift: None,
                k: rng.random_range(2..=top.min(3)),
            })
        }
        _ => {
            // [[0, c], [0, 0]] padded by a unitary and conjugated
            let c = if rng.random::<bool>() {
                1.0
            } else {
                rng.random_range(0.2..=0.8)
            };
            let u_dim = rng.random_range(0..=max_d.saturating_sub(2).min(3));
            let d = 2 + u_dim;
            let mut v = CMatrix::zeros(d, d);
            v[(0, 1)] = C64::new(c, 0.0);
            if u_dim > 0 {
                v.view_mut((2, 2), (u_dim, u_dim))
                    .copy_from(&gen::random_unitary(rng, u_dim));
            }
            let w = gen::random_unitary(rng, d);
            let rep = CovariantRep::scalar_row(vec![&w * v * w.adjoint()], tol)?;
            Ok(Instance {
                reps: vec![rep],
                shift: None,
                k: 2,
            })
        }
    }
}

/// Representations with `N(I_E ⊗ Ṽ) = N(Ṽ_2)` by construction (a unitary
/// padded with zero, `E = C`), mixed with general root-family draws.
fn kernel_equality_instance<R: Rng>(
    rng: &mut R,
    cfg: &TrialConfig,
    tol: &Tolerance,
) -> Result<Instance> {
    if rng.random_range(0..5) < 3 {
        let d = pick(rng, (cfg.h_dim.0.max(1), cfg.h_dim.1.max(1)));
        let r = rng.random_range(0..=d);
        let mut v = CMatrix::zeros(d, d);
        if r > 0 {
            v.view_mut((0, 0), (r, r))
                .copy_from(&gen::random_unitary(rng, r));
        }
        let w = gen::random_unitary(rng, d);
        let rep = CovariantRep::scalar_row(vec![&w * v * w.adjoint()], tol)?;
        Ok(Instance {
            reps: vec![rep],
            shift: None,
            k: 2,
        })
    } else {
        let mut inst = root_instance(rng, cfg, tol)?;
        inst.k = 2;
        Ok(inst)
    }
}

fn random_shift_spec<R: Rng>(
    rng: &mut R,
    cfg: &TrialConfig,
    falsify: bool,
) -> Result<WeightedShiftSpec> {
    let n = pick(
        rng,
        (cfg.module_dim.0.clamp(1, 3), cfg.module_dim.1.clamp(1, 3)),
    );
    let trunc = n * n * n * 8;
    let b_size = rng.random_range(0..=4);
    let zero_set: Vec<usize> = (0..b_size).map(|_| rng.random_range(0..=trunc)).collect();
    let mut spec = WeightedShiftSpec::new(n, Some(trunc))?.with_zero_set(zero_set);
    // weights on B are irrelevant to the operator but exercise the criterion
    for &m in spec.zero_set().clone().iter() {
        let i = rng.random_range(1..=n);
        let w = rng.random_range(0.0..2.0);
        spec = spec.with_weight(i, m, w)?;
    }
    if falsify || rng.random::<bool>() {
        let count = rng.random_range(1..=3);
        for _ in 0..count {
            let i = rng.random_range(1..=n);
            let top = (trunc - i) / n;
            let m = rng.random_range(0..=top);
            if spec.zero_set().contains(&m) {
                continue;
            }
            let w = if rng.random::<bool>() {
                rng.random_range(0.3..=0.9)
            } else {
                rng.random_range(1.1..=1.5)
            };
            spec = spec.with_weight(i, m, w)?;
        }
    }
    Ok(spec)
}

/// A covariant `S : H → E ⊗ H` that is a generalized inverse of `Ṽ`:
/// `S = Ṽ† + (I - Ṽ†Ṽ) Y ṼṼ†` for a random covariant `Y`.
fn random_gen_inverse<R: Rng>(rng: &mut R, rep: &CovariantRep, tol: &Tolerance) -> Result<CMatrix> {
    let shape = Shape {
        corr: rep.correspondence().clone(),
        sigma: rep.sigma().clone(),
    };
    let b = gen::Blocks::new(&shape, tol)?;
    let ys: Vec<CMatrix> = (0..b.num_blocks())
        .map(|i| {
            let (rows, cols) = b.tilde_shape(i);
            gen::gaussian(rng, cols, rows)
        })
        .collect();
    let y = gen::expand(&b.h, &b.fh, &b.eh, &b.feh, &ys);
    let p = rep.pinv()?;
    let t = rep.tilde();
    let n = identity(t.ncols()) - &*p * t;
    Ok(&*p + n * y * (t * &*p))
}

pub(super) fn generate<R: Rng>(
    id: TheoremId,
    rng: &mut R,
    cfg: &TrialConfig,
    tol: &Tolerance,
    falsify: bool,
) -> Result<Instance> {
    match id {
        TheoremId::ProductCommuting | TheoremId::ProductPinv => {
            let shape = gen::random_shape(rng, cfg.shape, cfg.h_dim, cfg.module_dim, false)?;
            let rep2 = gen::random_forced_pi_rep(rng, &shape, tol)?;
            let rep1 = if !falsify && rng.random::<bool>() {
                gen::commuting_partner(rng, &rep2, tol)?
            } else {
                gen::random_forced_pi_rep(rng, &shape, tol)?
            };
            Ok(one(vec![rep1, rep2]))
        }
        TheoremId::ProductChain => {
            let shape = gen::random_shape(rng, cfg.shape, cfg.h_dim, cfg.module_dim, false)?;
            let mut factors: Vec<CovariantRep> = Vec::with_capacity(3);
            let last = if rng.random::<bool>() {
                gen::random_forced_pi_rep(rng, &shape, tol)?
            } else {
                gen::random_maximal_rep(rng, &shape, tol)?
            };
            factors.push(last);
            for _ in 0..2 {
                let next = factors.last().expect("nonempty");
                let f = match rng.random_range(0..3) {
                    0 if !falsify => gen::commuting_partner(rng, next, tol)?,
                    1 => gen::random_maximal_rep(rng, &shape, tol)?,
                    _ => gen::random_forced_pi_rep(rng, &shape, tol)?,
                };
                factors.push(f);
            }
            factors.reverse();
            Ok(one(factors))
        }
        TheoremId::DefectDilation => {
            let shape = gen::random_shape(rng, cfg.shape, cfg.h_dim, cfg.module_dim, false)?;
            let rep1 = if rng.random::<bool>() {
                gen::random_forced_pi_rep(rng, &shape, tol)?
            } else {
                gen::random_contractive_rep(rng, &shape, tol)?
            };
            let rep2 = if rng.random::<bool>() {
                gen::random_forced_pi_rep(rng, &shape, tol)?
            } else {
                gen::random_contractive_rep(rng, &shape, tol)?
            };
            Ok(one(vec![rep1, rep2]))
        }
        TheoremId::ChainRange => {
            let rep = if rng.random_range(0..5) == 0 {
                let shape = gen::random_shape(rng, cfg.shape, cfg.h_dim, cfg.module_dim, false)?;
                gen::random_contractive_rep(rng, &shape, tol)?
            } else {
                pi_power_rep(rng, cfg, tol)?
            };
            Ok(one(vec![rep]))
        }
        TheoremId::PowerChain | TheoremId::PowerStep => Ok(one(vec![pi_power_rep(rng, cfg, tol)?])),
        TheoremId::GenInverseKernel | TheoremId::RegularPower => {
            if falsify {
                // non-regular partial isometric representations
                let rep = if rng.random::<bool>() {
                    twisted_rep(rng, cfg, tol)?
                } else {
                    let shape =
                        gen::random_shape(rng, cfg.shape, cfg.h_dim, cfg.module_dim, false)?;
                    gen::random_forced_pi_rep(rng, &shape, tol)?
                };
                Ok(one(vec![rep]))
            } else {
                let pi = rng.random_range(0..3) != 0;
                Ok(one(vec![regular_rep(rng, cfg, pi, tol)?]))
            }
        }
        TheoremId::WeightedShift => {
            // the spec determines the representation; dense matrices stay out of reports
            let spec = random_shift_spec(rng, cfg, falsify)?;
            Ok(Instance {
                reps: Vec::new(),
                shift: Some(spec),
                k: 0,
            })
        }
        TheoremId::Root | TheoremId::RootOrthogonality => root_instance(rng, cfg, tol),
        TheoremId::KernelEquality => kernel_equality_instance(rng, cfg, tol),
        TheoremId::Wold => {
            let pi = rng.random_range(0..4) != 0;
            Ok(one(vec![regular_rep(rng, cfg, pi, tol)?]))
        }
    }
}

fn first_rep(inst: &Instance, count: usize) -> Result<&[CovariantRep]> {
    if inst.reps.len() < count {
        return Err(Error::Usage(format!(
            "instance needs {count} representations, has {}",
            inst.reps.len()
        )));
    }
    Ok(&inst.reps[..count])
}

/// Generalized inverses exercised for a representation: `Ṽ†` and a
/// deterministic perturbation of it inside the generalized-inverse set.
fn gen_inverses(rep: &CovariantRep, tol: &Tolerance) -> Result<Vec<CMatrix>> {
    let mut rng = gen::stream_rng(0x5eed, rep.h_dim() as u64, rep.tilde().ncols() as u64);
    Ok(vec![
        rep.pinv()?.as_ref().clone(),
        random_gen_inverse(&mut rng, rep, tol)?,
    ])
}

pub(super) fn evaluate(
    id: TheoremId,
    inst: &Instance,
    cfg: &TrialConfig,
    tol: &Tolerance,
    falsify: bool,
) -> Result<Evaluation> {
    let mut decisions = Vec::new();
    let verdict = match id {
        TheoremId::ProductCommuting => {
            let r = first_rep(inst, 2)?;
            let c = products::commuting_projection_test(&r[0], &r[1])?;
            decisions.push(Decision::new(c.commutator_norm, 1.0, c.projections_commute));
            decisions.push(Decision::new(c.product_pi_residual, 1.0, c.product_is_pi));
            if let crate::Applicability::NotApplicable(why) = c.applicability {
                Verdict::NotApplicable(why)
            } else if falsify {
                verdict(c.product_is_pi, || {
                    format!(
                        "product not partial isometric (residual {:.3e})",
                        c.product_pi_residual
                    )
                })
            } else {
                verdict(c.product_is_pi == c.projections_commute, || {
                    format!(
                        "product_is_pi = {} but projections_commute = {} (commutator {:.3e}, ‖𝔈𝔉‖ = {:.6})",
                        c.product_is_pi, c.projections_commute, c.commutator_norm, c.ef_norm
                    )
                })
            }
        }
        TheoremId::ProductChain => {
            let r = &inst.reps;
            let c = products::erdelyi_chain_test(r)?;
            for s in &c.stages {
                for k in 0..4 {
                    decisions.push(Decision::new(s.residuals[k], 1.0, s.holds[k]));
                }
            }
            if let crate::Applicability::NotApplicable(why) = c.applicability {
                Verdict::NotApplicable(why)
            } else if falsify {
                let last = c.verdicts[0].last().copied().unwrap_or(true);
                verdict(last, || "chain product is not partial isometric".into())
            } else {
                verdict(c.consistent, || {
                    format!("stage verdicts differ: {:?}", c.verdicts)
                })
            }
        }
        TheoremId::ProductPinv => {
            let r = first_rep(inst, 2)?;
            let p = products::product_pinv_test(r)?;
            let prod = products::ProductRep::new(r)?;
            decisions.push(pi_decision(prod.product(), tol));
            decisions.push(Decision::new(p.chain_residual, 1.0, p.pinv_factors_match));
            if let crate::Applicability::NotApplicable(why) = p.applicability {
                Verdict::NotApplicable(why)
            } else if falsify {
                verdict(p.pinv_factors_match, || {
                    format!(
                        "pseudoinverse differs from the chain by {:.3e}",
                        p.chain_residual
                    )
                })
            } else {
                verdict(p.is_pi == p.pinv_factors_match, || {
                    format!(
                        "is_pi = {} but chain match = {} ({:.3e})",
                        p.is_pi, p.pinv_factors_match, p.chain_residual
                    )
                })
            }
        }
        TheoremId::DefectDilation => {
            let r = first_rep(inst, 2)?;
            match products::defect_dilation_test(&r[0], &r[1]) {
                Err(Error::NotApplicable(why)) => Verdict::NotApplicable(why),
                Err(e) => return Err(e),
                Ok(d) => {
                    decisions.push(Decision::new(d.m_pi_residual, 1.0, d.m_is_pi));
                    decisions.push(Decision::new(d.single_pi_residual, 1.0, d.single_is_pi));
                    decisions.push(pi_decision(r[0].tilde(), tol));
                    if falsify {
                        verdict(d.m_is_pi, || {
                            format!("defect matrix residual {:.3e}", d.m_pi_residual)
                        })
                    } else {
                        verdict(d.m_is_pi == d.rep1_is_pi && d.single_is_pi, || {
                            format!(
                                "m_is_pi = {}, rep1_is_pi = {}, single_is_pi = {}",
                                d.m_is_pi, d.rep1_is_pi, d.single_is_pi
                            )
                        })
                    }
                }
            }
        }
        TheoremId::ChainRange => {
            let rep = &first_rep(inst, 1)?[0];
            let mut bad = None;
            let mut range_ok = true;
            for m in 1..=cfg.n_max {
                let c = powers::kernel_chain_condition(rep, m)?;
                let g = powers::range_invariance_condition(rep, m)?;
                decisions.push(incl(c.residual, c.holds));
                decisions.push(incl(g.residual, g.holds));
                range_ok &= g.holds;
                if c.holds != g.holds && bad.is_none() {
                    bad = Some(format!(
                        "m = {m}: chain {} ({:.3e}) vs range {} ({:.3e})",
                        c.holds, c.residual, g.holds, g.residual
                    ));
                }
            }
            if falsify {
                verdict(range_ok, || "range invariance fails".into())
            } else {
                verdict(bad.is_none(), || bad.unwrap_or_default())
            }
        }
        TheoremId::PowerChain | TheoremId::PowerStep => {
            let rep = &first_rep(inst, 1)?[0];
            let p = powers::power_report(rep, cfg.n_max)?;
            for m in 0..p.n_max {
                decisions.push(Decision::new(p.pi_residuals[m], 1.0, p.pi_flags[m]));
                decisions.push(incl(p.chain_residuals[m], p.chain_flags[m]));
            }
            if let crate::Applicability::NotApplicable(why) = &p.applicability {
                Verdict::NotApplicable(why.clone())
            } else if id == TheoremId::PowerChain {
                if falsify {
                    verdict(p.pi_up_to() == p.n_max, || {
                        format!("Ṽ_{} is not a partial isometry", p.pi_up_to() + 1)
                    })
                } else {
                    verdict(p.pi_up_to() == p.chain_up_to(), || {
                        format!(
                            "powers PI up to {} but chain holds up to {}",
                            p.pi_up_to(),
                            p.chain_up_to()
                        )
                    })
                }
            } else {
                let mut bad = None;
                for n in 1..p.n_max {
                    let premise = p.pi_flags[n - 1] && (falsify || p.chain_flags[n]);
                    if premise && !p.pi_flags[n] && bad.is_none() {
                        bad = Some(format!(
                            "Ṽ_{n} PI, chain at {} = {}, Ṽ_{} not PI",
                            n + 1,
                            p.chain_flags[n],
                            n + 1
                        ));
                    }
                }
                verdict(bad.is_none(), || bad.unwrap_or_default())
            }
        }
        TheoremId::GenInverseKernel => {
            let rep = &first_rep(inst, 1)?[0];
            let bound = cfg.n_max.min(3);
            let mut bad = None;
            let mut regular = true;
            for (j, s) in gen_inverses(rep, tol)?.iter().enumerate() {
                let g = powers::generalized_inverse_check(rep, s, bound)?;
                regular = g.regular;
                if !g.is_gen_inverse {
                    return Err(Error::NumericFailure {
                        rows: s.nrows(),
                        cols: s.ncols(),
                    });
                }
                for (m, &r) in g.lemma_residuals.iter().enumerate() {
                    decisions.push(incl(r, m < g.lemma_holds_up_to));
                }
                if g.lemma_holds_up_to < bound && bad.is_none() {
                    bad = Some(format!(
                        "inverse {j}: inclusion fails at m = {}",
                        g.lemma_holds_up_to + 1
                    ));
                }
            }
            if !falsify && !regular {
                Verdict::NotApplicable("representation is not regular".into())
            } else {
                verdict(bad.is_none(), || bad.unwrap_or_default())
            }
        }
        TheoremId::RegularPower => {
            let rep = &first_rep(inst, 1)?[0];
            let r = powers::regular_pi_iff_power_pi(rep, cfg.n_max)?;
            for m in 1..=cfg.n_max {
                decisions.push(pi_decision(&*rep.tilde_power(m)?, tol));
            }
            let power_pi = r.is_power_pi_up_to == r.bound;
            if falsify {
                verdict(!r.is_pi || power_pi, || {
                    format!("PI but powers PI only up to {}", r.is_power_pi_up_to)
                })
            } else if let crate::Applicability::NotApplicable(why) = r.applicability {
                Verdict::NotApplicable(why)
            } else {
                verdict(r.is_pi == power_pi, || {
                    format!(
                        "is_pi = {} but powers PI up to {} of {}",
                        r.is_pi, r.is_power_pi_up_to, r.bound
                    )
                })
            }
        }
        TheoremId::WeightedShift => {
            let spec = inst
                .shift
                .as_ref()
                .ok_or_else(|| Error::Usage("weighted-shift instance needs a spec".into()))?;
            let c = shifts::shift_pi_criterion(spec, tol)?;
            if falsify {
                verdict(c.is_pi, || "weighted shift is not partial isometric".into())
            } else {
                let mut bad = Vec::new();
                let kmax = c.window_bound.min(3);
                for k in 1..=kmax {
                    for i in 1..=spec.n() {
                        let cmp = shifts::compare_kernel(spec, i, k, tol)?;
                        if !cmp.agree {
                            bad.push(format!(
                                "kernel of V_{i}^{k}: formula {} vs brute force {}",
                                cmp.formula.len(),
                                cmp.brute_force_dim
                            ));
                        }
                    }
                }
                if c.is_pi != c.weights_unit_off_b {
                    bad.push(format!(
                        "is_pi = {} but unit weights off B = {}",
                        c.is_pi, c.weights_unit_off_b
                    ));
                }
                if c.is_pi {
                    if c.power_pi_up_to < c.window_bound {
                        bad.push(format!(
                            "powers PI up to {} of window {}",
                            c.power_pi_up_to, c.window_bound
                        ));
                    }
                    for k in 1..=c.window_bound.saturating_sub(1).min(2) {
                        let ch = shifts::chain_inclusion_check(spec, k, tol)?;
                        decisions.push(incl(ch.residual, ch.holds));
                        if !ch.holds {
                            bad.push(format!(
                                "chain inclusion fails at k = {k} ({:.3e})",
                                ch.residual
                            ));
                        }
                    }
                }
                verdict(bad.is_empty(), || bad.join("; "))
            }
        }
        TheoremId::Root | TheoremId::RootOrthogonality => {
            let rep = &first_rep(inst, 1)?[0];
            let r = powers::root_criterion(rep, inst.k)?;
            decisions.push(Decision::new(r.cond_a_residual, 1.0, r.cond_a));
            decisions.push(incl(r.cond_b_residual, r.cond_b));
            decisions.push(pi_decision(rep.tilde(), tol));
            if let crate::Applicability::NotApplicable(why) = r.applicability {
                Verdict::NotApplicable(why)
            } else if r.numeric_inconsistency {
                Verdict::Violated(format!("N(I⊗Ṽ) ⊄ N(Ṽ_{}) numerically", inst.k))
            } else if id == TheoremId::Root {
                if falsify {
                    verdict(r.rep_is_pi, || {
                        format!("Ṽ_{} is a partial isometry but Ṽ is not", inst.k)
                    })
                } else {
                    verdict((r.cond_a && r.cond_b) == r.rep_is_pi, || {
                        format!(
                            "cond_a = {}, cond_b = {}, rep_is_pi = {}",
                            r.cond_a, r.cond_b, r.rep_is_pi
                        )
                    })
                }
            } else {
                let premise = r.cond_a && r.chain_inclusion;
                verdict(!premise || (r.cond_b && r.rep_is_pi), || {
                    format!(
                        "cond_a and chain hold but cond_b = {}, rep_is_pi = {}",
                        r.cond_b, r.rep_is_pi
                    )
                })
            }
        }
        TheoremId::KernelEquality => {
            let rep = &first_rep(inst, 1)?[0];
            let g = powers::gupta_criterion(rep, inst.k.max(2))?;
            decisions.push(incl(g.kernel_residual, g.kernels_equal));
            decisions.push(pi_decision(rep.tilde(), tol));
            match g.applicability {
                crate::Applicability::NotApplicable(why) => Verdict::NotApplicable(why),
                crate::Applicability::Applicable => verdict(g.rep_is_pi, || {
                    "kernels agree but Ṽ is not a partial isometry".into()
                }),
            }
        }
        TheoremId::Wold => {
            let rep = &first_rep(inst, 1)?[0];
            let b = wold::is_bi_regular(rep, cfg.n_max)?;
            if let crate::Applicability::NotApplicable(why) = b.applicability {
                Verdict::NotApplicable(why)
            } else if !b.bi_regular {
                Verdict::NotApplicable("representation is not bi-regular".into())
            } else {
                let w = wold::wold_decompose_unchecked(rep, rep.h_dim())?;
                for f in [&w.primal, &w.dual] {
                    decisions.push(incl(
                        f.direct_sum_residual,
                        tol.included(f.direct_sum_residual),
                    ));
                    decisions.push(incl(
                        f.orthogonality_residual,
                        tol.included(f.orthogonality_residual),
                    ));
                }
                let pi = rep.is_partial_isometric();
                decisions.push(pi_decision(rep.tilde(), tol));
                let mut bad = Vec::new();
                if !w.primal.is_valid(tol) {
                    bad.push("primal decomposition invalid".to_string());
                }
                if !w.dual.is_valid(tol) {
                    bad.push("dual decomposition invalid".to_string());
                }
                if pi {
                    decisions.push(Decision::new(
                        w.dual_distance,
                        1.0,
                        tol.equal(w.dual_distance, 1.0),
                    ));
                    if !w.forms_coincide {
                        bad.push("forms differ for a partial isometric representation".into());
                    }
                    if !tol.equal(w.dual_distance, 1.0) {
                        bad.push(format!("‖Ṽ' - Ṽ‖ = {:.3e}", w.dual_distance));
                    }
                }
                verdict(bad.is_empty(), || bad.join("; "))
            }
        }
    };
    Ok(Evaluation { verdict, decisions })
}

/// Named fixtures for examples and tests.
#[derive(Clone, Debug, PartialEq)]
pub enum FixtureKind {
    /// `E = C`, `V` an isometry; in finite dimensions a unitary.
    Isometric,
    Unitary,
    /// `V e_k = e_{k-1}`, `V e_0 = 0`.
    TruncatedShift,
    WeightedShift(WeightedShiftSpec),
    DirectSum(Vec<FixtureKind>),
    /// A partial isometric representation with one singular value moved to `1 - ε`.
    PerturbedPi(f64),
}

impl FromStr for FixtureKind {
    type Err = Error;

    /// `isometric`, `unitary`, `truncated_shift`, `weighted_shift` (n = 2,
    /// `B = {0}`), `direct_sum(a, b, …)`, `perturbed_pi(ε)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let inner = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
                .map(str::trim)
        };
        if let Some(body) = inner("direct_sum") {
            let mut parts = Vec::new();
            let mut depth = 0usize;
            let mut start = 0;
            for (i, ch) in body.char_indices() {
                match ch {
                    '(' => depth += 1,
                    ')' => depth = depth.saturating_sub(1),
                    ',' if depth == 0 => {
                        parts.push(body[start..i].parse()?);
                        start = i + 1;
                    }
                    _ => {}
                }
            }
            parts.push(body[start..].parse()?);
            return Ok(FixtureKind::DirectSum(parts));
        }
        if let Some(body) = inner("perturbed_pi") {
            let eps: f64 = body
                .parse()
                .map_err(|_| Error::Usage(format!("bad perturbation {body:?}")))?;
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::Usage(format!(
                    "perturbation must lie in (0, 1), got {eps}"
                )));
            }
            return Ok(FixtureKind::PerturbedPi(eps));
        }
        match s {
            "isometric" => Ok(FixtureKind::Isometric),
            "unitary" => Ok(FixtureKind::Unitary),
            "truncated_shift" => Ok(FixtureKind::TruncatedShift),
            "weighted_shift" => Ok(FixtureKind::WeightedShift(
                WeightedShiftSpec::new(2, None)?.with_zero_set([0]),
            )),
            other => Err(Error::Usage(format!("unknown fixture kind {other:?}"))),
        }
    }
}

/// Builds a named fixture on `H = C^d` (weighted shifts fix their own
/// dimension). All summands of a direct sum must share `E`.
pub fn random_structured_fixture<R: Rng>(
    kind: &FixtureKind,
    d: usize,
    rng: &mut R,
    tol: &Tolerance,
) -> Result<CovariantRep> {
    match kind {
        FixtureKind::Isometric | FixtureKind::Unitary => {
            CovariantRep::scalar_row(vec![gen::random_unitary(rng, d)], tol)
        }
        FixtureKind::TruncatedShift => {
            let mut v = CMatrix::zeros(d, d);
            for k in 1..d {
                v[(k - 1, k)] = C64::new(1.0, 0.0);
            }
            CovariantRep::scalar_row(vec![v], tol)
        }
        FixtureKind::WeightedShift(spec) => Ok(shifts::build_shift(spec, tol)?.rep),
        FixtureKind::DirectSum(parts) => {
            let reps = parts
                .iter()
                .map(|p| random_structured_fixture(p, d, rng, tol))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&CovariantRep> = reps.iter().collect();
            CovariantRep::direct_sum(&refs)
        }
        FixtureKind::PerturbedPi(eps) => {
            let shape = Shape {
                corr: std::sync::Arc::new(Correspondence::scalar(1)),
                sigma: crate::StarRepresentation::scalar(d),
            };
            let rank = rng.random_range(1..=d.max(1));
            let mut s = vec![1.0; rank];
            s[0] = 1.0 - eps;
            gen::rep_from_blocks(rng, &shape, tol, |rng, r, c| {
                Ok(gen::with_singular_values(rng, r, c, &s))
            })
        }
    }
}
