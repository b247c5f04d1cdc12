//! Power and root criteria: kernel chains, range invariance, generalized
//! ranges, regularity, generalized inverses and the root theorem.
//!
//! `Ṽ_0` is the identity of `H`, so `N(Ṽ_0)^⊥ = R(Ṽ_0) = H`.

use serde::{Deserialize, Serialize};

use crate::covrep::CovariantRep;
use crate::error::{Error, Result};
use crate::numerics::{
    is_contraction, is_partial_isometry, mapped_inclusion_residual, op_norm,
    partial_isometry_residual, CMatrix, Subspace,
};
use crate::Applicability;

pub const DEFAULT_N_MAX: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub holds: bool,
    pub residual: f64,
}

/// `(I_{E^{⊗(m-1)}} ⊗ Ṽ) N(Ṽ_m)^⊥ ⊆ N(Ṽ_{m-1})^⊥`.
pub fn kernel_chain_condition(rep: &CovariantRep, m: usize) -> Result<Check> {
    if m == 0 {
        return Err(Error::Usage("kernel chain index starts at 1".into()));
    }
    let tol = rep.tolerance();
    let vm = rep.tilde_power(m)?;
    let source = Subspace::coimage(&vm, tol)?;
    let target = Subspace::coimage(&*rep.tilde_power(m - 1)?, tol)?;
    let x = rep.amplified_tilde(m - 1)?;
    let residual = mapped_inclusion_residual(&x, &source, &target)?;
    Ok(Check {
        holds: tol.included(residual),
        residual,
    })
}

/// `(I_{E^{⊗(m-1)}} ⊗ ṼṼ^*) N(Ṽ_{m-1}) ⊆ N(Ṽ_{m-1})`.
pub fn range_invariance_condition(rep: &CovariantRep, m: usize) -> Result<Check> {
    if m == 0 {
        return Err(Error::Usage("range invariance index starts at 1".into()));
    }
    let tol = rep.tolerance();
    let kernel = Subspace::kernel(&*rep.tilde_power(m - 1)?, tol)?;
    let t = rep.tilde();
    let q = rep.amplify(m - 1, &(t * t.adjoint()), 0, 0)?;
    let residual = mapped_inclusion_residual(&q, &kernel, &kernel)?;
    Ok(Check {
        holds: tol.included(residual),
        residual,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PowerReport {
    pub applicability: Applicability,
    pub n_max: usize,
    /// Entry `m - 1` concerns `Ṽ_m`.
    pub pi_flags: Vec<bool>,
    pub pi_residuals: Vec<f64>,
    pub chain_flags: Vec<bool>,
    pub chain_residuals: Vec<f64>,
    pub range_flags: Vec<bool>,
    pub range_residuals: Vec<f64>,
}

impl PowerReport {
    /// Largest `m` with `Ṽ_1, …, Ṽ_m` all partial isometries.
    pub fn pi_up_to(&self) -> usize {
        self.pi_flags.iter().take_while(|&&f| f).count()
    }

    pub fn chain_up_to(&self) -> usize {
        self.chain_flags.iter().take_while(|&&f| f).count()
    }

    pub fn range_up_to(&self) -> usize {
        self.range_flags.iter().take_while(|&&f| f).count()
    }
}

/// Per-power partial isometry, kernel-chain and range-invariance verdicts.
pub fn power_report(rep: &CovariantRep, n_max: usize) -> Result<PowerReport> {
    let tol = rep.tolerance();
    let applicability = if rep.is_partial_isometric() {
        Applicability::Applicable
    } else {
        Applicability::NotApplicable("Ṽ is not a partial isometry".into())
    };
    let mut r = PowerReport {
        applicability,
        n_max,
        pi_flags: Vec::with_capacity(n_max),
        pi_residuals: Vec::with_capacity(n_max),
        chain_flags: Vec::with_capacity(n_max),
        chain_residuals: Vec::with_capacity(n_max),
        range_flags: Vec::with_capacity(n_max),
        range_residuals: Vec::with_capacity(n_max),
    };
    for m in 1..=n_max {
        let vm = rep.tilde_power(m)?;
        let res = partial_isometry_residual(&vm);
        r.pi_flags.push(tol.equal(res, op_norm(&vm)));
        r.pi_residuals.push(res);
        let c = kernel_chain_condition(rep, m)?;
        r.chain_flags.push(c.holds);
        r.chain_residuals.push(c.residual);
        let g = range_invariance_condition(rep, m)?;
        r.range_flags.push(g.holds);
        r.range_residuals.push(g.residual);
    }
    Ok(r)
}

/// `R^∞(Ṽ) = ⋂_n R(Ṽ_n)`, using `R(Ṽ_{n+1}) = Ṽ(E ⊗ R(Ṽ_n))`.
pub fn generalized_range(rep: &CovariantRep) -> Result<Subspace> {
    let tol = rep.tolerance();
    let mut current = Subspace::whole(rep.h_dim());
    for _ in 0..=rep.h_dim() {
        let next = Subspace::image(rep.tilde(), &rep.tensor_subspace(&current)?, tol)?;
        if next.dim() == current.dim() {
            return Ok(next);
        }
        current = next;
    }
    Ok(current)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularityReport {
    pub regular: bool,
    /// `||(I - P_{E ⊗ R^∞}) F_{N(Ṽ)}||`.
    pub residual: f64,
    pub generalized_range_dim: usize,
}

/// `N(Ṽ) ⊆ E ⊗ R^∞(Ṽ)` (ranges are closed in finite dimension).
pub fn regularity(rep: &CovariantRep) -> Result<RegularityReport> {
    let tol = rep.tolerance();
    let r_inf = generalized_range(rep)?;
    let big = rep.tensor_subspace(&r_inf)?;
    let kernel = Subspace::kernel(rep.tilde(), tol)?;
    let residual = kernel.inclusion_residual(&big)?;
    Ok(RegularityReport {
        regular: tol.included(residual),
        residual,
        generalized_range_dim: r_inf.dim(),
    })
}

pub fn is_regular(rep: &CovariantRep) -> Result<bool> {
    Ok(regularity(rep)?.regular)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenInverseReport {
    pub is_gen_inverse: bool,
    /// `||SṼS - S||`.
    pub sxs_residual: f64,
    /// `||ṼSṼ - Ṽ||`.
    pub xsx_residual: f64,
    pub regular: bool,
    /// Largest `m ≤ bound` with `(I_{E^{⊗j}} ⊗ S) N(Ṽ_j) ⊆ N(Ṽ_{j+1})` for all
    /// `j ≤ m`. Computed whenever `S` is a generalized inverse; the inclusion
    /// is only guaranteed for regular representations.
    pub lemma_holds_up_to: usize,
    pub lemma_residuals: Vec<f64>,
}

/// Generalized-inverse identities for `S : H → E ⊗ H` and the kernel
/// inclusions `(I ⊗ S) N(Ṽ_m) ⊆ N(Ṽ_{m+1})`, which hold for regular
/// representations.
pub fn generalized_inverse_check(
    rep: &CovariantRep,
    s: &CMatrix,
    bound: usize,
) -> Result<GenInverseReport> {
    let tol = rep.tolerance();
    let t = rep.tilde();
    if s.shape() != (t.ncols(), t.nrows()) {
        return Err(Error::Dimension(format!(
            "generalized inverse must be {}x{}, got {}x{}",
            t.ncols(),
            t.nrows(),
            s.nrows(),
            s.ncols()
        )));
    }
    let sn = op_norm(s);
    let tn = op_norm(t);
    let sxs_residual = op_norm(&(s * t * s - s));
    let xsx_residual = op_norm(&(t * s * t - t));
    let is_gen_inverse = tol.equal(sxs_residual, sn * sn.max(1.0) * tn.max(1.0))
        && tol.equal(xsx_residual, tn * tn.max(1.0) * sn.max(1.0));
    let regular = is_regular(rep)?;
    let mut lemma_residuals = Vec::new();
    let mut lemma_holds_up_to = 0;
    if is_gen_inverse {
        let mut ok = true;
        for m in 1..=bound {
            let kernel = Subspace::kernel(&*rep.tilde_power(m)?, tol)?;
            let amp = rep.amplify(m, s, 0, 1)?;
            let next = rep.tilde_power(m + 1)?;
            let res = if kernel.dim() == 0 {
                0.0
            } else {
                op_norm(&(next.as_ref() * (amp * kernel.frame())))
            };
            lemma_residuals.push(res);
            ok &= tol.included(res / sn.max(1.0));
            if ok {
                lemma_holds_up_to = m;
            }
        }
    }
    Ok(GenInverseReport {
        is_gen_inverse,
        sxs_residual,
        xsx_residual,
        regular,
        lemma_holds_up_to,
        lemma_residuals,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularPowerReport {
    pub applicability: Applicability,
    pub is_pi: bool,
    /// Largest `m ≤ bound` with `Ṽ_1, …, Ṽ_m` all partial isometries.
    pub is_power_pi_up_to: usize,
    pub bound: usize,
}

/// For regular representations: partial isometric iff power partial isometric.
pub fn regular_pi_iff_power_pi(rep: &CovariantRep, bound: usize) -> Result<RegularPowerReport> {
    let tol = rep.tolerance();
    let applicability = if is_regular(rep)? {
        Applicability::Applicable
    } else {
        Applicability::NotApplicable("representation is not regular".into())
    };
    let mut up_to = 0;
    for m in 1..=bound {
        if !is_partial_isometry(&*rep.tilde_power(m)?, tol) {
            break;
        }
        up_to = m;
    }
    Ok(RegularPowerReport {
        applicability,
        is_pi: rep.is_partial_isometric(),
        is_power_pi_up_to: up_to,
        bound,
    })
}

fn root_hypotheses(rep: &CovariantRep, k: usize) -> Result<Applicability> {
    if k < 2 {
        return Err(Error::Usage(format!("root criteria need k ≥ 2, got {k}")));
    }
    let tol = rep.tolerance();
    if !is_contraction(rep.tilde(), tol) {
        return Ok(Applicability::NotApplicable(format!(
            "representation is not completely contractive (norm {:.6})",
            op_norm(rep.tilde())
        )));
    }
    if !rep.correspondence().is_full(tol) {
        return Ok(Applicability::NotApplicable(
            "correspondence is not full".into(),
        ));
    }
    if !is_partial_isometry(&*rep.tilde_power(k)?, tol) {
        return Ok(Applicability::NotApplicable(format!(
            "Ṽ_{k} is not a partial isometry"
        )));
    }
    Ok(Applicability::Applicable)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RootReport {
    pub applicability: Applicability,
    pub k: usize,
    /// `Ṽ_k` is a partial isometry.
    pub hypothesis_ok: bool,
    /// `I ⊗ Ṽ` is isometric on `D = N(Ṽ_k) ⊖ N(I_{E^{⊗(k-1)}} ⊗ Ṽ)`.
    pub cond_a: bool,
    pub cond_a_residual: f64,
    /// `(I ⊗ Ṽ) N(Ṽ_k)^⊥ ⊥ (I ⊗ Ṽ) D`.
    pub cond_b: bool,
    pub cond_b_residual: f64,
    pub rep_is_pi: bool,
    /// `(I ⊗ Ṽ) N(Ṽ_k)^⊥ ⊆ N(Ṽ_{k-1})^⊥`.
    pub chain_inclusion: bool,
    pub d_dim: usize,
    /// `N(I ⊗ Ṽ) ⊆ N(Ṽ_k)` holds exactly in theory; a failure here is a
    /// numeric inconsistency.
    pub numeric_inconsistency: bool,
}

/// The root theorem: if `Ṽ_k` is a partial isometry for a contractive
/// representation of a full correspondence, `Ṽ` is a partial isometry iff
/// conditions (a) and (b) hold.
pub fn root_criterion(rep: &CovariantRep, k: usize) -> Result<RootReport> {
    let applicability = root_hypotheses(rep, k)?;
    let tol = rep.tolerance();
    let vk = rep.tilde_power(k)?;
    let x = rep.amplified_tilde(k - 1)?;
    let nk = Subspace::kernel(&vk, tol)?;
    let nx = Subspace::kernel(&x, tol)?;
    let nesting = nx.inclusion_residual(&nk)?;
    let d = nk.ominus(
        &nx,
        &crate::numerics::Tolerance {
            incl_abs: f64::INFINITY,
            ..*tol
        },
    )?;

    let xd = &x * d.frame();
    let cond_a_residual = op_norm(&(xd.adjoint() * &xd - crate::numerics::identity(d.dim())));
    let nk_perp = Subspace::coimage(&vk, tol)?;
    let img_perp = Subspace::image(&x, &nk_perp, tol)?;
    let img_d = Subspace::span_scaled(&xd, op_norm(&x), tol)?;
    let cond_b_residual = img_perp.orthogonality_residual(&img_d)?;
    let prev = Subspace::coimage(&*rep.tilde_power(k - 1)?, tol)?;
    let chain = mapped_inclusion_residual(&x, &nk_perp, &prev)?;

    Ok(RootReport {
        hypothesis_ok: is_partial_isometry(&vk, tol),
        applicability,
        k,
        cond_a: tol.equal(cond_a_residual, 1.0),
        cond_a_residual,
        cond_b: tol.included(cond_b_residual),
        cond_b_residual,
        rep_is_pi: rep.is_partial_isometric(),
        chain_inclusion: tol.included(chain),
        d_dim: d.dim(),
        numeric_inconsistency: !tol.included(nesting),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GuptaReport {
    pub applicability: Applicability,
    /// `N(I_E ⊗ Ṽ) = N(Ṽ_2)`.
    pub kernels_equal: bool,
    pub kernel_residual: f64,
    pub rep_is_pi: bool,
}

/// If `N(I_E ⊗ Ṽ) = N(Ṽ_2)` (and the root hypotheses hold) then `Ṽ` is a
/// partial isometry. `applicability` also records the kernel equality.
pub fn gupta_criterion(rep: &CovariantRep, k: usize) -> Result<GuptaReport> {
    let mut applicability = root_hypotheses(rep, k)?;
    let tol = rep.tolerance();
    let n1 = Subspace::kernel(&rep.amplified_tilde(1)?, tol)?;
    let n2 = Subspace::kernel(&*rep.tilde_power(2)?, tol)?;
    let kernel_residual = n1.inclusion_residual(&n2)?.max(n2.inclusion_residual(&n1)?);
    let kernels_equal = n1.dim() == n2.dim() && tol.included(kernel_residual);
    if applicability.is_applicable() && !kernels_equal {
        applicability = Applicability::NotApplicable("N(I_E ⊗ Ṽ) differs from N(Ṽ_2)".into());
    }
    Ok(GuptaReport {
        applicability,
        kernels_equal,
        kernel_residual,
        rep_is_pi: rep.is_partial_isometric(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{identity, Tolerance, C64};

    fn real(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
        CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)))
    }

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn scalar(v: CMatrix) -> CovariantRep {
        CovariantRep::scalar_row(vec![v], &tol()).unwrap()
    }

    #[test]
    fn isometric_rep_passes_everything() {
        let rep = scalar(identity(2));
        let r = power_report(&rep, 4).unwrap();
        assert_eq!((r.pi_up_to(), r.chain_up_to(), r.range_up_to()), (4, 4, 4));
        assert!(is_regular(&rep).unwrap());
        assert_eq!(generalized_range(&rep).unwrap().dim(), 2);
    }

    #[test]
    fn nilpotent_shift_chain_holds() {
        let rep = scalar(real(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        for m in 1..=3 {
            assert!(kernel_chain_condition(&rep, m).unwrap().holds);
            assert!(range_invariance_condition(&rep, m).unwrap().holds);
        }
        assert_eq!(generalized_range(&rep).unwrap().dim(), 0);
    }

    #[test]
    fn pi_with_failing_square() {
        // V e1 = e2, V e2 = (e1 + e3)/√2, V e3 = 0: V is a partial isometry, V² is not.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = real(3, 3, &[0.0, h, 0.0, 1.0, 0.0, 0.0, 0.0, h, 0.0]);
        let rep = scalar(v);
        assert!(rep.is_partial_isometric());
        let r = power_report(&rep, 3).unwrap();
        assert_eq!(r.pi_flags, vec![true, false, false]);
        assert!(!r.chain_flags[1] && !r.range_flags[1]);
    }

    #[test]
    fn truncated_shift_is_not_regular() {
        // V e_k = e_{k-1}, V e_0 = 0 on C³
        let v = real(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let rep = scalar(v);
        let r = regularity(&rep).unwrap();
        assert_eq!(r.generalized_range_dim, 0);
        assert!(!r.regular);
    }

    #[test]
    fn generalized_inverse_examples() {
        let rep = scalar(real(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let p = rep.pinv().unwrap();
        assert!(
            generalized_inverse_check(&rep, &p, 2)
                .unwrap()
                .is_gen_inverse
        );
        let z = CMatrix::zeros(2, 2);
        assert!(
            !generalized_inverse_check(&rep, &z, 2)
                .unwrap()
                .is_gen_inverse
        );
        assert!(matches!(
            generalized_inverse_check(&rep, &CMatrix::zeros(3, 2), 2),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn root_rejects_scaled_nilpotent() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let rep = scalar(real(2, 2, &[0.0, h, 0.0, 0.0]));
        let r = root_criterion(&rep, 2).unwrap();
        assert!(r.applicability.is_applicable() && r.hypothesis_ok);
        assert_eq!(r.d_dim, 1);
        assert!(!r.cond_a && !r.rep_is_pi);
        let g = gupta_criterion(&rep, 2).unwrap();
        assert!(!g.kernels_equal && !g.applicability.is_applicable());
    }

    #[test]
    fn root_accepts_pi() {
        let rep = scalar(real(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let r = root_criterion(&rep, 2).unwrap();
        assert!(r.cond_a && r.cond_b && r.rep_is_pi);
        let iso = scalar(identity(2));
        let g = gupta_criterion(&iso, 2).unwrap();
        assert!(g.applicability.is_applicable() && g.rep_is_pi);
    }

    #[test]
    fn unitary_is_regular_and_power_pi() {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let rep = scalar(real(2, 2, &[c, -c, c, c]));
        let r = regular_pi_iff_power_pi(&rep, 4).unwrap();
        assert!(r.applicability.is_applicable() && r.is_pi);
        assert_eq!(r.is_power_pi_up_to, 4);
    }
}
