//! Products of covariant representations sharing `σ`:
//! `T̃^{(i)} = T̃^{(i-1)} (I_{E_1 ⊗ ⋯ ⊗ E_{i-1}} ⊗ Ṽ^{(i)})`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::correspondence::{amplify, Correspondence, TensorSpace};
use crate::covrep::{check_simple_tensors, CovariantRep};
use crate::error::{Error, Result};
use crate::numerics::{
    hstack, identity, is_contraction, is_partial_isometry, mapped_inclusion_residual, op_norm,
    partial_isometry_residual, psd_sqrt, pseudoinverse, vstack, CMatrix, Subspace, Tolerance,
};
use crate::Applicability;

/// An ordered product of representations with all intermediate stages.
#[derive(Clone, Debug)]
pub struct ProductRep {
    factors: Vec<CovariantRep>,
    /// `prefix[i]` is `E_1 ⊗ ⋯ ⊗ E_{i+1}`.
    prefix: Vec<Arc<Correspondence>>,
    /// `spaces[0] = H`, `spaces[i] = (E_1 ⊗ ⋯ ⊗ E_i) ⊗_σ H`.
    spaces: Vec<Arc<TensorSpace>>,
    /// `stages[i - 1] = T̃^{(i)}`.
    stages: Vec<CMatrix>,
    tol: Tolerance,
}

impl ProductRep {
    pub fn new(factors: &[CovariantRep]) -> Result<Self> {
        if factors.len() < 2 {
            return Err(Error::InvalidRepresentation(
                "a product needs at least two factors".into(),
            ));
        }
        let sigma = factors[0].sigma().clone();
        if factors.iter().any(|f| f.sigma() != &sigma) {
            return Err(Error::InvalidRepresentation(
                "factors must share the algebra, σ and H".into(),
            ));
        }
        let tol = *factors[0].tolerance();
        let cap = factors
            .iter()
            .map(|f| f.tensor_cap())
            .min()
            .unwrap_or(usize::MAX);
        let mut prefix = vec![factors[0].correspondence().clone()];
        let mut spaces = vec![factors[0].space(0)?, factors[0].space(1)?];
        let mut stages = vec![factors[0].tilde().clone()];
        for (i, f) in factors.iter().enumerate().skip(1) {
            let prev = prefix[i - 1].clone();
            let corr = Arc::new(Correspondence::tensor(&prev, f.correspondence())?);
            let space = Arc::new(TensorSpace::interior(corr.clone(), &sigma, &tol, cap)?);
            let amp = amplify(
                prev.module_dim(),
                f.tilde(),
                &*f.space(1)?,
                &*f.space(0)?,
                &space,
                &spaces[i],
                &tol,
            )?;
            let stage = &stages[i - 1] * amp;
            let ops: Vec<&[CMatrix]> = factors[..=i].iter().map(|g| g.v_on_basis()).collect();
            check_simple_tensors(&stage, &space, &ops, &tol, 0xface ^ i as u64)?;
            prefix.push(corr);
            spaces.push(space);
            stages.push(stage);
        }
        Ok(Self {
            factors: factors.to_vec(),
            prefix,
            spaces,
            stages,
            tol,
        })
    }

    pub fn factors(&self) -> &[CovariantRep] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// `T̃^{(i)}` for `1 ≤ i ≤ n`.
    pub fn stage(&self, i: usize) -> &CMatrix {
        &self.stages[i - 1]
    }

    pub fn product(&self) -> &CMatrix {
        self.stages.last().expect("nonempty product")
    }

    /// `E_1 ⊗ ⋯ ⊗ E_i`.
    pub fn prefix_correspondence(&self, i: usize) -> &Arc<Correspondence> {
        &self.prefix[i - 1]
    }

    /// `(E_1 ⊗ ⋯ ⊗ E_i) ⊗_σ H`, with `i = 0` giving `H`.
    pub fn space(&self, i: usize) -> &Arc<TensorSpace> {
        &self.spaces[i]
    }

    /// The product as a representation of `E_1 ⊗ ⋯ ⊗ E_n`.
    pub fn as_rep(&self) -> Result<CovariantRep> {
        let n = self.len();
        CovariantRep::from_tilde_with_cap(
            self.prefix[n - 1].clone(),
            self.factors[0].sigma().clone(),
            self.product(),
            &self.tol,
            self.factors
                .iter()
                .map(|f| f.tensor_cap())
                .min()
                .unwrap_or(usize::MAX),
        )
    }

    /// `I_{E_1 ⊗ ⋯ ⊗ E_{i-1}} ⊗ X` for an operator `X` on `H`.
    fn amplify_on_h(&self, i: usize, x: &CMatrix) -> Result<CMatrix> {
        if i == 1 {
            return Ok(x.clone());
        }
        let h = &self.spaces[0];
        let big = &self.spaces[i - 1];
        amplify(
            self.prefix[i - 2].module_dim(),
            x,
            h,
            h,
            big,
            big,
            &self.tol,
        )
    }

    /// `I_{E_1 ⊗ ⋯ ⊗ E_{i-1}} ⊗ Ṽ^{(i)}`, from stage space `i` to `i - 1`.
    fn amplified_factor(&self, i: usize) -> Result<CMatrix> {
        let f = &self.factors[i - 1];
        if i == 1 {
            return Ok(f.tilde().clone());
        }
        amplify(
            self.prefix[i - 2].module_dim(),
            f.tilde(),
            &*f.space(1)?,
            &*f.space(0)?,
            &self.spaces[i],
            &self.spaces[i - 1],
            &self.tol,
        )
    }

    /// `I_{E_1 ⊗ ⋯ ⊗ E_{i-1}} ⊗ Ṽ^{(i)†}`, from stage space `i - 1` to `i`.
    fn amplified_factor_pinv(&self, i: usize) -> Result<CMatrix> {
        let f = &self.factors[i - 1];
        let p = f.pinv()?;
        if i == 1 {
            return Ok(p.as_ref().clone());
        }
        amplify(
            self.prefix[i - 2].module_dim(),
            &p,
            &*f.space(0)?,
            &*f.space(1)?,
            &self.spaces[i - 1],
            &self.spaces[i],
            &self.tol,
        )
    }

    fn factors_pi(&self) -> Applicability {
        match self.factors.iter().position(|f| !f.is_partial_isometric()) {
            None => Applicability::Applicable,
            Some(i) => {
                Applicability::NotApplicable(format!("factor {} is not partial isometric", i + 1))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntertwiningReport {
    pub applicability: Applicability,
    /// `||Ṽ¹(I ⊗ Ṽ²Ṽ²*) - Ṽ²Ṽ²* Ṽ¹||`.
    pub residual: f64,
    pub holds: bool,
    pub product_is_pi: bool,
}

/// The sufficient condition `Ṽ¹(I_{E_1} ⊗ Ṽ²Ṽ²*) = Ṽ²Ṽ²*Ṽ¹`.
pub fn sufficient_intertwining_check(
    rep1: &CovariantRep,
    rep2: &CovariantRep,
) -> Result<IntertwiningReport> {
    let prod = ProductRep::new(&[rep1.clone(), rep2.clone()])?;
    let tol = prod.tol;
    let t2 = rep2.tilde();
    let q = t2 * t2.adjoint();
    let lhs = rep1.tilde() * prod.amplify_on_h(2, &q)?;
    let rhs = &q * rep1.tilde();
    let residual = op_norm(&(lhs - rhs));
    let scale = op_norm(rep1.tilde());
    Ok(IntertwiningReport {
        applicability: prod.factors_pi(),
        residual,
        holds: tol.equal(residual, scale),
        product_is_pi: is_partial_isometry(prod.product(), &tol),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommutingReport {
    pub applicability: Applicability,
    pub product_is_pi: bool,
    pub product_pi_residual: f64,
    pub projections_commute: bool,
    /// `||𝔈𝔉 - 𝔉𝔈||`.
    pub commutator_norm: f64,
    /// `||𝔈𝔉||`, which is at most 1 up to rounding.
    pub ef_norm: f64,
    /// `||(𝔈𝔉)² - 𝔈𝔉||`.
    pub ef_idempotent_residual: f64,
}

/// `𝔈 = Ṽ¹*Ṽ¹` and `𝔉 = I_{E_1} ⊗ Ṽ²Ṽ²*` commute iff the product is a partial isometry.
pub fn commuting_projection_test(
    rep1: &CovariantRep,
    rep2: &CovariantRep,
) -> Result<CommutingReport> {
    let prod = ProductRep::new(&[rep1.clone(), rep2.clone()])?;
    let tol = prod.tol;
    let e = rep1.tilde().adjoint() * rep1.tilde();
    let t2 = rep2.tilde();
    let f = prod.amplify_on_h(2, &(t2 * t2.adjoint()))?;
    let ef = &e * &f;
    let commutator_norm = op_norm(&(&ef - &f * &e));
    let product_pi_residual = partial_isometry_residual(prod.product());
    Ok(CommutingReport {
        applicability: prod.factors_pi(),
        product_is_pi: tol.equal(product_pi_residual, op_norm(prod.product())),
        product_pi_residual,
        projections_commute: tol.equal(commutator_norm, 1.0),
        commutator_norm,
        ef_norm: op_norm(&ef),
        ef_idempotent_residual: op_norm(&(&ef * &ef - &ef)),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainStage {
    /// Stage index `i ≥ 2`; the conditions relate `T̃^{(i-1)}` and `Ṽ^{(i)}`.
    pub stage: usize,
    /// Residuals of conditions (1)-(4):
    /// (1) `T̃^{(i)}` is a partial isometry;
    /// (2) `(I ⊗ Ṽ^{(i)}Ṽ^{(i)*}) R(T̃^{(i-1)*}) ⊆ R(T̃^{(i-1)*})`;
    /// (3) `T̃^{(i-1)*}T̃^{(i-1)} R(I ⊗ Ṽ^{(i)}) ⊆ R(I ⊗ Ṽ^{(i)})`;
    /// (4) `P_{R(T̃^{(i-1)*})} P_{R(I ⊗ Ṽ^{(i)})}` is idempotent.
    pub residuals: [f64; 4],
    pub holds: [bool; 4],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainReport {
    pub applicability: Applicability,
    pub stages: Vec<ChainStage>,
    /// For each condition, whether it holds at every stage up to `i`
    /// (entry `i - 2`). The four vectors coincide when the equivalence holds.
    pub verdicts: [Vec<bool>; 4],
    pub consistent: bool,
}

/// Stage-by-stage evaluation of the four equivalent conditions for a chain.
pub fn erdelyi_chain_test(factors: &[CovariantRep]) -> Result<ChainReport> {
    let prod = ProductRep::new(factors)?;
    let tol = prod.tol;
    let n = prod.len();
    let mut stages = Vec::with_capacity(n - 1);
    for i in 2..=n {
        let prev = prod.stage(i - 1);
        let cur = prod.stage(i);
        let r1 = partial_isometry_residual(cur);
        let h1 = tol.equal(r1, op_norm(cur));

        let coimage = Subspace::coimage(prev, &tol)?;
        let vi = prod.factors[i - 1].tilde();
        let q = prod.amplify_on_h(i, &(vi * vi.adjoint()))?;
        let r2 = mapped_inclusion_residual(&q, &coimage, &coimage)?;

        let amp = prod.amplified_factor(i)?;
        let range = Subspace::range(&amp, &tol)?;
        let gram = prev.adjoint() * prev;
        let r3 = mapped_inclusion_residual(&gram, &range, &range)?;

        let pq = coimage.projector() * range.projector();
        let r4 = op_norm(&(&pq * &pq - &pq));

        stages.push(ChainStage {
            stage: i,
            residuals: [r1, r2, r3, r4],
            holds: [h1, tol.included(r2), tol.included(r3), tol.equal(r4, 1.0)],
        });
    }
    let verdicts: [Vec<bool>; 4] = std::array::from_fn(|k| {
        let mut acc = true;
        stages
            .iter()
            .map(|s| {
                acc &= s.holds[k];
                acc
            })
            .collect()
    });
    let consistent = verdicts.iter().all(|v| v == &verdicts[0]);
    Ok(ChainReport {
        applicability: prod.factors_pi(),
        stages,
        verdicts,
        consistent,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PinvReport {
    pub applicability: Applicability,
    pub is_pi: bool,
    pub pinv_factors_match: bool,
    /// `||T̃^{(n)†} - (I ⊗ Ṽ^{(n)†}) ⋯ Ṽ^{(1)†}||`.
    pub chain_residual: f64,
}

/// Compares the pseudoinverse of the product with the reversed chain of
/// amplified factor pseudoinverses.
pub fn product_pinv_test(factors: &[CovariantRep]) -> Result<PinvReport> {
    let prod = ProductRep::new(factors)?;
    let tol = prod.tol;
    let n = prod.len();
    let mut chain = prod.amplified_factor_pinv(1)?;
    for i in 2..=n {
        chain = prod.amplified_factor_pinv(i)? * chain;
    }
    let direct = pseudoinverse(prod.product(), &tol)?;
    let chain_residual = op_norm(&(&direct - &chain));
    Ok(PinvReport {
        applicability: prod.factors_pi(),
        is_pi: is_partial_isometry(prod.product(), &tol),
        pinv_factors_match: tol.equal(chain_residual, op_norm(&direct)),
        chain_residual,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DilationReport {
    /// `[[Ṽ¹(I ⊗ Ṽ²), Ṽ¹(I ⊗ (I - Ṽ²Ṽ²*))^{1/2}], [0, 0]]`.
    #[serde(with = "crate::io::matrix")]
    pub m: CMatrix,
    pub m_pi_residual: f64,
    pub m_is_pi: bool,
    pub rep1_is_pi: bool,
    /// `[[Ṽ¹, (I - Ṽ¹Ṽ¹*)^{1/2}], [0, 0]]`, a partial isometry for every contraction.
    pub single_pi_residual: f64,
    pub single_is_pi: bool,
}

/// `[[Ṽ, (I - ṼṼ*)^{1/2}], [0, 0]] : (E ⊗ H) ⊕ H → H ⊕ H`.
pub fn single_dilation(rep: &CovariantRep) -> Result<CMatrix> {
    let t = rep.tilde();
    let h = rep.h_dim();
    let d = psd_sqrt(&(identity(h) - t * t.adjoint()), rep.tolerance())?;
    let top = hstack(h, &[t, &d]);
    Ok(vstack(
        top.ncols(),
        &[&top, &CMatrix::zeros(h, top.ncols())],
    ))
}

/// The defect operator matrix, a partial isometry iff the first factor is.
pub fn defect_dilation_test(rep1: &CovariantRep, rep2: &CovariantRep) -> Result<DilationReport> {
    let tol = *rep1.tolerance();
    for (k, r) in [rep1, rep2].iter().enumerate() {
        if !is_contraction(r.tilde(), &tol) {
            return Err(Error::NotApplicable(format!(
                "factor {} is not completely contractive (norm {:.6})",
                k + 1,
                op_norm(r.tilde())
            )));
        }
    }
    let prod = ProductRep::new(&[rep1.clone(), rep2.clone()])?;
    let h = rep1.h_dim();
    let t2 = rep2.tilde();
    let defect = psd_sqrt(&(identity(h) - t2 * t2.adjoint()), &tol)?;
    let corner = rep1.tilde() * prod.amplify_on_h(2, &defect)?;
    let top = hstack(h, &[prod.product(), &corner]);
    let m = vstack(top.ncols(), &[&top, &CMatrix::zeros(h, top.ncols())]);
    let m_pi_residual = partial_isometry_residual(&m);
    let single = single_dilation(rep1)?;
    let single_pi_residual = partial_isometry_residual(&single);
    Ok(DilationReport {
        m_is_pi: tol.equal(m_pi_residual, op_norm(&m)),
        m_pi_residual,
        rep1_is_pi: rep1.is_partial_isometric(),
        single_is_pi: tol.equal(single_pi_residual, op_norm(&single)),
        single_pi_residual,
        m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{distance, C64};

    fn real(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
        CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)))
    }

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn hand_pair() -> (CovariantRep, CovariantRep) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v1 = CovariantRep::scalar_row(vec![real(2, 2, &[1.0, 0.0, 0.0, 0.0])], &tol()).unwrap();
        let v2 = CovariantRep::scalar_row(vec![real(2, 2, &[h, 0.0, h, 0.0])], &tol()).unwrap();
        (v1, v2)
    }

    #[test]
    fn hand_counterexample_fails_everywhere() {
        let (a, b) = hand_pair();
        let prod = ProductRep::new(&[a.clone(), b.clone()]).unwrap();
        let s = crate::numerics::svd(prod.product(), &tol()).unwrap();
        assert!((s.singular_values[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);

        let c = commuting_projection_test(&a, &b).unwrap();
        assert!(c.applicability.is_applicable());
        assert!(!c.product_is_pi && !c.projections_commute);
        assert!((c.commutator_norm - 0.5).abs() < 1e-12);

        let s = sufficient_intertwining_check(&a, &b).unwrap();
        assert!(!s.holds && !s.product_is_pi);

        let chain = erdelyi_chain_test(&[a.clone(), b.clone()]).unwrap();
        assert!(chain.consistent);
        assert_eq!(chain.stages[0].holds, [false; 4]);

        let p = product_pinv_test(&[a, b]).unwrap();
        assert!(!p.is_pi && !p.pinv_factors_match);
    }

    #[test]
    fn isometric_chain_passes() {
        let u = CovariantRep::scalar_row(vec![identity(2)], &tol()).unwrap();
        let r = erdelyi_chain_test(&[u.clone(), u.clone(), u]).unwrap();
        assert!(r.consistent);
        assert!(r.verdicts.iter().all(|v| v.iter().all(|&x| x)));
    }

    #[test]
    fn zero_factor_gives_pi_product() {
        let (a, _) = hand_pair();
        let z = CovariantRep::scalar_row(vec![CMatrix::zeros(2, 2)], &tol()).unwrap();
        let prod = ProductRep::new(&[z.clone(), a.clone()]).unwrap();
        assert_eq!(op_norm(prod.product()), 0.0);
        let s = sufficient_intertwining_check(&z, &a).unwrap();
        assert!(s.holds && s.product_is_pi);
    }

    #[test]
    fn coisometric_second_factor_commutes() {
        let (a, _) = hand_pair();
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let u = CovariantRep::scalar_row(vec![real(2, 2, &[c, c, -c, c])], &tol()).unwrap();
        let r = commuting_projection_test(&a, &u).unwrap();
        assert!(r.product_is_pi && r.projections_commute);
        let s = sufficient_intertwining_check(&a, &u).unwrap();
        assert!(s.holds);
        let p = product_pinv_test(&[u.clone(), u]).unwrap();
        assert!(p.is_pi && p.pinv_factors_match);
    }

    #[test]
    fn defect_dilation_examples() {
        let iso = CovariantRep::scalar_row(vec![identity(2)], &tol()).unwrap();
        let (_, b) = hand_pair();
        let r = defect_dilation_test(&iso, &b).unwrap();
        assert!(r.m_is_pi && r.rep1_is_pi && r.single_is_pi);
        let half = iso.scaled(0.5).unwrap();
        let r = defect_dilation_test(&half, &b).unwrap();
        assert!(!r.m_is_pi && !r.rep1_is_pi && r.single_is_pi);
        let big = iso.scaled(2.0).unwrap();
        assert!(matches!(
            defect_dilation_test(&big, &b),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn mismatched_sigma_is_rejected() {
        let a = CovariantRep::scalar_row(vec![identity(2)], &tol()).unwrap();
        let b = CovariantRep::scalar_row(vec![identity(3)], &tol()).unwrap();
        assert!(ProductRep::new(&[a, b]).is_err());
    }

    #[test]
    fn product_as_rep_roundtrip() {
        let (a, b) = hand_pair();
        let prod = ProductRep::new(&[a, b]).unwrap();
        let rep = prod.as_rep().unwrap();
        assert!(distance(rep.tilde(), prod.product()) < 1e-14);
    }
}
