//! Cauchy duals, bi-regularity and the Wold-type decomposition
//! `H = [H ⊖ Ṽ(E ⊗ H)]_Ṽ ⊕ R^∞(Ṽ') = [H ⊖ Ṽ(E ⊗ H)]_{Ṽ'} ⊕ R^∞(Ṽ)`.
//!
//! `[W]_X` is the smallest subspace containing `W` that is invariant under
//! `X(E ⊗ ·)`, computed by iterating `S ↦ S + X(E ⊗ S)`.

use serde::{Deserialize, Serialize};

use crate::covrep::CovariantRep;
use crate::error::{Error, Result};
use crate::numerics::{distance, identity, op_norm, pseudoinverse, CMatrix, Subspace};
use crate::powers::{generalized_range, is_regular};
use crate::Applicability;

/// `Ṽ' = Ṽ(Ṽ^*Ṽ)^†`.
pub fn cauchy_dual(rep: &CovariantRep) -> Result<CMatrix> {
    let t = rep.tilde();
    let gram = t.adjoint() * t;
    Ok(t * pseudoinverse(&gram, rep.tolerance())?)
}

/// The representation whose lift is the Cauchy dual.
pub fn cauchy_dual_rep(rep: &CovariantRep) -> Result<CovariantRep> {
    CovariantRep::from_tilde_with_cap(
        rep.correspondence().clone(),
        rep.sigma().clone(),
        &cauchy_dual(rep)?,
        rep.tolerance(),
        rep.tensor_cap(),
    )
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BiRegularReport {
    pub applicability: Applicability,
    pub bi_regular: bool,
    /// Entry `n - 1`: `N(I_{E^{⊗n}} ⊗ Ṽ^†) ⊆ R(Ṽ^{†(n)})` residual.
    pub residuals: Vec<f64>,
    /// `N(I_{E^{⊗n}} ⊗ Ṽ^*) ⊆ R(Ṽ_n^*)` for every `n ≤ n_max`.
    pub adjoint_regular: bool,
    pub adjoint_residuals: Vec<f64>,
}

pub fn is_bi_regular(rep: &CovariantRep, n_max: usize) -> Result<BiRegularReport> {
    let tol = rep.tolerance();
    let applicability = if is_regular(rep)? {
        Applicability::Applicable
    } else {
        Applicability::NotApplicable("representation is not regular".into())
    };
    let p = rep.pinv()?;
    let adj = rep.tilde().adjoint();
    let mut residuals = Vec::with_capacity(n_max);
    let mut adjoint_residuals = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let ker = Subspace::kernel(&rep.amplify(n, &p, 0, 1)?, tol)?;
        let range = Subspace::range(&rep.pinv_chain(n)?, tol)?;
        residuals.push(ker.inclusion_residual(&range)?);
        let ker = Subspace::kernel(&rep.amplify(n, &adj, 0, 1)?, tol)?;
        let range = Subspace::range(&rep.tilde_power(n)?.adjoint(), tol)?;
        adjoint_residuals.push(ker.inclusion_residual(&range)?);
    }
    Ok(BiRegularReport {
        bi_regular: applicability.is_applicable() && residuals.iter().all(|&r| tol.included(r)),
        applicability,
        adjoint_regular: adjoint_residuals.iter().all(|&r| tol.included(r)),
        residuals,
        adjoint_residuals,
    })
}

/// `[W]_X` for the lift `X` of `x_rep`, stopping at stabilization or after
/// `bound` steps. Returns the subspace and the number of steps taken.
pub fn generated_invariant_subspace(
    x_rep: &CovariantRep,
    w: &Subspace,
    bound: usize,
) -> Result<(Subspace, usize)> {
    if w.ambient() != x_rep.h_dim() {
        return Err(Error::Dimension(format!(
            "subspace of C^{} for a representation on C^{}",
            w.ambient(),
            x_rep.h_dim()
        )));
    }
    let tol = x_rep.tolerance();
    let mut s = w.clone();
    for step in 0..bound {
        let pushed = Subspace::image(x_rep.tilde(), &x_rep.tensor_subspace(&s)?, tol)?;
        let next = s.join(&pushed, tol)?;
        if next.dim() == s.dim() {
            return Ok((s, step));
        }
        s = next;
    }
    Ok((s, bound))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WoldResult {
    #[serde(with = "crate::io::subspace")]
    pub wandering: Subspace,
    #[serde(with = "crate::io::subspace")]
    pub generated: Subspace,
    #[serde(with = "crate::io::subspace")]
    pub residual: Subspace,
    /// `||P_generated + P_residual - I||`.
    pub direct_sum_residual: f64,
    /// `||F_generated^* F_residual||`.
    pub orthogonality_residual: f64,
}

impl WoldResult {
    fn new(wandering: Subspace, generated: Subspace, residual: Subspace) -> Result<Self> {
        let h = generated.ambient();
        let direct_sum_residual =
            op_norm(&(generated.projector() + residual.projector() - identity(h)));
        let orthogonality_residual = generated.orthogonality_residual(&residual)?;
        Ok(Self {
            wandering,
            generated,
            residual,
            direct_sum_residual,
            orthogonality_residual,
        })
    }

    pub fn is_valid(&self, tol: &crate::numerics::Tolerance) -> bool {
        tol.included(self.orthogonality_residual) && tol.equal(self.direct_sum_residual, 1.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WoldDecomposition {
    /// `[W]_Ṽ ⊕ R^∞(Ṽ')`.
    pub primal: WoldResult,
    /// `[W]_{Ṽ'} ⊕ R^∞(Ṽ)`.
    pub dual: WoldResult,
    /// `||Ṽ' - Ṽ||`.
    pub dual_distance: f64,
    /// Primal and dual agree subspace by subspace.
    pub forms_coincide: bool,
}

/// Both forms of the decomposition, without checking hypotheses.
pub fn wold_decompose_unchecked(rep: &CovariantRep, bound: usize) -> Result<WoldDecomposition> {
    let tol = rep.tolerance();
    let dual_rep = cauchy_dual_rep(rep)?;
    let wandering = Subspace::range(rep.tilde(), tol)?.ortho_complement();
    let (gen_v, _) = generated_invariant_subspace(rep, &wandering, bound)?;
    let (gen_d, _) = generated_invariant_subspace(&dual_rep, &wandering, bound)?;
    let primal = WoldResult::new(wandering.clone(), gen_v, generalized_range(&dual_rep)?)?;
    let dual = WoldResult::new(wandering, gen_d, generalized_range(rep)?)?;
    let forms_coincide = primal.generated.equals(&dual.generated, tol)?
        && primal.residual.equals(&dual.residual, tol)?;
    Ok(WoldDecomposition {
        dual_distance: distance(dual_rep.tilde(), rep.tilde()),
        primal,
        dual,
        forms_coincide,
    })
}

/// Requires bi-regularity, checked for `n ≤ n_max`.
pub fn wold_decompose(rep: &CovariantRep, bound: usize, n_max: usize) -> Result<WoldDecomposition> {
    let report = is_bi_regular(rep, n_max)?;
    if let Applicability::NotApplicable(why) = report.applicability {
        return Err(Error::NotApplicable(why));
    }
    if !report.bi_regular {
        return Err(Error::NotApplicable(format!(
            "representation is not bi-regular (checked n ≤ {n_max})"
        )));
    }
    wold_decompose_unchecked(rep, bound)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::correspondence::{Correspondence, StarRepresentation};
    use crate::numerics::{Tolerance, C64, ONE};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn real(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
        CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)))
    }

    /// Loop at vertex 0 carrying a unitary, edge 0→1 and edge 1→2, each vertex
    /// one-dimensional; `H_1` and `H_2` are reached by partial isometries.
    pub(super) fn graph_fixture(a: f64, b: f64) -> CovariantRep {
        let corr = Arc::new(Correspondence::graph(3, &[(0, 0), (0, 1), (1, 2)]).unwrap());
        let sigma = StarRepresentation::new(corr.algebra().clone(), vec![1, 1, 1]).unwrap();
        let mut u = CMatrix::zeros(3, 3);
        u[(0, 0)] = C64::new(0.0, 1.0);
        let mut ja = CMatrix::zeros(3, 3);
        ja[(1, 0)] = C64::new(a, 0.0);
        let mut jb = CMatrix::zeros(3, 3);
        jb[(2, 1)] = C64::new(b, 0.0);
        CovariantRep::new(corr, sigma, vec![u, ja, jb], &tol()).unwrap()
    }

    #[test]
    fn dual_of_scaled_isometry() {
        let rep =
            CovariantRep::scalar_row(vec![real(2, 2, &[2.0, 0.0, 0.0, 2.0])], &tol()).unwrap();
        let d = cauchy_dual(&rep).unwrap();
        assert!(distance(&d, &real(2, 2, &[0.5, 0.0, 0.0, 0.5])) < 1e-14);
    }

    #[test]
    fn dual_is_involution() {
        let rep = CovariantRep::scalar_row(
            vec![
                real(2, 2, &[0.0, 1.0, 0.5, 0.0]),
                real(2, 2, &[0.3, 0.0, 0.0, 0.2]),
            ],
            &tol(),
        )
        .unwrap();
        let d = cauchy_dual_rep(&rep).unwrap();
        assert!(distance(&cauchy_dual(&d).unwrap(), rep.tilde()) < 1e-10);
    }

    #[test]
    fn unitary_decomposition() {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let rep = CovariantRep::scalar_row(vec![real(2, 2, &[c, -c, c, c])], &tol()).unwrap();
        let w = wold_decompose(&rep, 2, 3).unwrap();
        assert_eq!(
            (
                w.primal.wandering.dim(),
                w.primal.generated.dim(),
                w.primal.residual.dim()
            ),
            (0, 0, 2)
        );
        assert!(w.primal.is_valid(&tol()) && w.forms_coincide);
    }

    #[test]
    fn shift_orbit_fills_space() {
        let rep = CovariantRep::scalar_row(
            vec![real(3, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0])],
            &tol(),
        )
        .unwrap();
        let (s, steps) =
            generated_invariant_subspace(&rep, &Subspace::coordinate(3, &[0]), 3).unwrap();
        assert_eq!((s.dim(), steps), (3, 2));
    }

    #[test]
    fn graph_fixture_splits() {
        let rep = graph_fixture(1.0, 1.0);
        let w = wold_decompose(&rep, 3, 3).unwrap();
        assert!(w.primal.is_valid(&tol()) && w.forms_coincide);
        assert_eq!(w.primal.wandering.dim(), 0);
        assert_eq!(w.primal.residual.dim(), 3);

        // J_b = 0: N(J_b) = H_1 = R(J_a), so still regular; H_2 wanders
        let rep = graph_fixture(1.0, 0.0);
        let w = wold_decompose(&rep, 3, 3).unwrap();
        assert!(w.primal.is_valid(&tol()) && w.dual.is_valid(&tol()));
        assert!(w
            .primal
            .generated
            .equals(&Subspace::coordinate(3, &[2]), &tol())
            .unwrap());
        assert!(w
            .primal
            .residual
            .equals(&Subspace::coordinate(3, &[0, 1]), &tol())
            .unwrap());
    }

    #[test]
    fn non_regular_is_rejected() {
        // N(J_b) = H_1 but R(J_a) = {0}
        let rep = graph_fixture(0.0, 0.0);
        assert!(matches!(
            wold_decompose(&rep, 3, 3),
            Err(Error::NotApplicable(_))
        ));
        let corr = Arc::new(Correspondence::scalar(1));
        let sigma = StarRepresentation::scalar(2);
        let mut v = CMatrix::zeros(2, 2);
        v[(1, 0)] = ONE;
        let rep = CovariantRep::new(corr, sigma, vec![v], &tol()).unwrap();
        assert!(!is_bi_regular(&rep, 2)
            .unwrap()
            .applicability
            .is_applicable());
    }
}
