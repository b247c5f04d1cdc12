//! Covariant representations `(σ, V)`, the lift `Ṽ : E ⊗_σ H → H`, its tensor
//! powers, pseudoinverse chains, classification and restriction.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correspondence::{
    amplify, covariance_residual, Correspondence, StarRepresentation, TensorSpace,
};
use crate::error::{Error, Result};
use crate::numerics::{
    hstack, identity, is_contraction, mapped_inclusion_residual, mul, op_norm,
    partial_isometry_conditions, pseudoinverse, CMatrix, PartialIsometryConditions, Subspace,
    Tolerance, C64, ZERO,
};

pub const DEFAULT_TENSOR_CAP: usize = 1 << 18;

#[derive(Default)]
struct Cache {
    corrs: HashMap<usize, Arc<Correspondence>>,
    spaces: HashMap<usize, Arc<TensorSpace>>,
    powers: HashMap<usize, Arc<CMatrix>>,
    pinv: Option<Arc<CMatrix>>,
}

/// A covariant representation with its lift and a lazily filled cache of
/// tensor powers. Immutable apart from the cache, which tolerates concurrent
/// readers (a value may be computed twice, never inconsistently).
pub struct CovariantRep {
    corr: Arc<Correspondence>,
    sigma: StarRepresentation,
    v_on_basis: Vec<CMatrix>,
    tilde: CMatrix,
    intertwining_residual: f64,
    tol: Tolerance,
    tensor_cap: usize,
    cache: Mutex<Cache>,
}

impl Clone for CovariantRep {
    fn clone(&self) -> Self {
        let cache = self.cache.lock().expect("cache lock");
        Self {
            corr: self.corr.clone(),
            sigma: self.sigma.clone(),
            v_on_basis: self.v_on_basis.clone(),
            tilde: self.tilde.clone(),
            intertwining_residual: self.intertwining_residual,
            tol: self.tol,
            tensor_cap: self.tensor_cap,
            cache: Mutex::new(Cache {
                corrs: cache.corrs.clone(),
                spaces: cache.spaces.clone(),
                powers: cache.powers.clone(),
                pinv: cache.pinv.clone(),
            }),
        }
    }
}

impl std::fmt::Debug for CovariantRep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CovariantRep")
            .field("module_dim", &self.corr.module_dim())
            .field("multiplicities", &self.sigma.multiplicities())
            .field("tilde", &self.tilde)
            .finish()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub norm: f64,
    pub is_contractive: bool,
    pub is_isometric: bool,
    pub is_coisometric: bool,
    pub is_partial_isometric: bool,
    /// Residuals and verdicts of the six equivalent characterisations; the
    /// verdict above is the one for `Ṽ Ṽ^* Ṽ = Ṽ`.
    pub conditions: PartialIsometryConditions,
    /// Set when the six characterisations disagree at the current tolerance.
    pub numeric_inconsistency: bool,
    pub intertwining_residual: f64,
    pub tolerance: Tolerance,
}

impl CovariantRep {
    pub fn new(
        corr: Arc<Correspondence>,
        sigma: StarRepresentation,
        v_on_basis: Vec<CMatrix>,
        tol: &Tolerance,
    ) -> Result<Self> {
        Self::with_cap(corr, sigma, v_on_basis, tol, DEFAULT_TENSOR_CAP)
    }

    pub fn with_cap(
        corr: Arc<Correspondence>,
        sigma: StarRepresentation,
        v_on_basis: Vec<CMatrix>,
        tol: &Tolerance,
        tensor_cap: usize,
    ) -> Result<Self> {
        if corr.algebra() != sigma.algebra() {
            return Err(Error::InvalidRepresentation(
                "σ and the correspondence use different algebras".into(),
            ));
        }
        let h = sigma.dim();
        let n = corr.module_dim();
        if v_on_basis.len() != n {
            return Err(Error::InvalidRepresentation(format!(
                "{} operators given for a module basis of size {n}",
                v_on_basis.len()
            )));
        }
        if let Some(bad) = v_on_basis.iter().find(|v| v.shape() != (h, h)) {
            return Err(Error::InvalidRepresentation(format!(
                "V(ξ) must be {h}x{h}, got {}x{}",
                bad.nrows(),
                bad.ncols()
            )));
        }
        for v in &v_on_basis {
            crate::numerics::check_finite(v)?;
        }
        let scale = v_on_basis.iter().map(op_norm).fold(0.0, f64::max);
        let dim_a = corr.algebra().dim();
        for c in 0..dim_a {
            let s = sigma.apply_basis(c);
            for b in 0..n {
                let mut left = CMatrix::zeros(h, h);
                let mut right = CMatrix::zeros(h, h);
                for d in 0..n {
                    let l = corr.left_action()[c][(d, b)];
                    if l != ZERO {
                        left += &v_on_basis[d] * l;
                    }
                    let r = corr.right_action()[c][(d, b)];
                    if r != ZERO {
                        right += &v_on_basis[d] * r;
                    }
                }
                let rl = op_norm(&(left - &s * &v_on_basis[b]));
                let rr = op_norm(&(right - &v_on_basis[b] * &s));
                if !tol.equal(rl.max(rr), scale) {
                    return Err(Error::InvalidRepresentation(format!(
                        "covariance fails at module basis {b}, algebra basis {c} (residual {:.3e})",
                        rl.max(rr)
                    )));
                }
            }
        }
        let space = TensorSpace::interior(corr.clone(), &sigma, tol, tensor_cap)?;
        let refs: Vec<&CMatrix> = v_on_basis.iter().collect();
        let formal = hstack(h, &refs);
        let tilde = space.mul_lift(&formal);
        let back = space.mul_embed(&tilde);
        let quotient = op_norm(&(&formal - &back));
        if !tol.equal(quotient, scale) {
            return Err(Error::InvalidRepresentation(format!(
                "V does not vanish on null vectors of E ⊗ H (residual {quotient:.3e})"
            )));
        }
        let base = TensorSpace::base(&sigma);
        let intertwining_residual = covariance_residual(&tilde, &space, &base);
        if !tol.equal(intertwining_residual, op_norm(&tilde)) {
            return Err(Error::InvalidRepresentation(format!(
                "lift does not intertwine the left actions (residual {intertwining_residual:.3e})"
            )));
        }
        let mut cache = Cache::default();
        cache.corrs.insert(1, corr.clone());
        cache.spaces.insert(0, Arc::new(base));
        cache.spaces.insert(1, Arc::new(space));
        Ok(Self {
            corr,
            sigma,
            v_on_basis,
            tilde,
            intertwining_residual,
            tol: *tol,
            tensor_cap,
            cache: Mutex::new(cache),
        })
    }

    /// Rebuilds `V` from a lift given in orthonormal coordinates of `E ⊗_σ H`.
    pub fn from_tilde(
        corr: Arc<Correspondence>,
        sigma: StarRepresentation,
        tilde: &CMatrix,
        tol: &Tolerance,
    ) -> Result<Self> {
        Self::from_tilde_with_cap(corr, sigma, tilde, tol, DEFAULT_TENSOR_CAP)
    }

    pub fn from_tilde_with_cap(
        corr: Arc<Correspondence>,
        sigma: StarRepresentation,
        tilde: &CMatrix,
        tol: &Tolerance,
        tensor_cap: usize,
    ) -> Result<Self> {
        let space = TensorSpace::interior(corr.clone(), &sigma, tol, tensor_cap)?;
        let h = sigma.dim();
        if tilde.shape() != (h, space.dim()) {
            return Err(Error::Dimension(format!(
                "lift must be {h}x{}, got {}x{}",
                space.dim(),
                tilde.nrows(),
                tilde.ncols()
            )));
        }
        let formal = space.mul_embed(tilde);
        let v = (0..corr.module_dim())
            .map(|a| formal.columns(a * h, h).into_owned())
            .collect();
        Self::with_cap(corr, sigma, v, tol, tensor_cap)
    }

    /// Row operator over the complex numbers: `E = C^n`, `V(δ_i) = vs[i]`.
    pub fn scalar_row(vs: Vec<CMatrix>, tol: &Tolerance) -> Result<Self> {
        let d = vs.first().map_or(0, |v| v.nrows());
        let corr = Arc::new(Correspondence::scalar(vs.len()));
        Self::new(corr, StarRepresentation::scalar(d), vs, tol)
    }

    pub fn zero(
        corr: Arc<Correspondence>,
        sigma: StarRepresentation,
        tol: &Tolerance,
    ) -> Result<Self> {
        let h = sigma.dim();
        let v = vec![CMatrix::zeros(h, h); corr.module_dim()];
        Self::new(corr, sigma, v, tol)
    }

    pub fn correspondence(&self) -> &Arc<Correspondence> {
        &self.corr
    }

    pub fn sigma(&self) -> &StarRepresentation {
        &self.sigma
    }

    pub fn v_on_basis(&self) -> &[CMatrix] {
        &self.v_on_basis
    }

    pub fn h_dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn tilde(&self) -> &CMatrix {
        &self.tilde
    }

    pub fn tolerance(&self) -> &Tolerance {
        &self.tol
    }

    pub fn tensor_cap(&self) -> usize {
        self.tensor_cap
    }

    pub fn intertwining_residual(&self) -> f64 {
        self.intertwining_residual
    }

    /// Same representation with a different tolerance (cache is kept).
    pub fn with_tolerance(&self, tol: &Tolerance) -> Self {
        let mut out = self.clone();
        out.tol = *tol;
        out
    }

    /// `c · V`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let v = self
            .v_on_basis
            .iter()
            .map(|m| m * C64::new(c, 0.0))
            .collect();
        Self::with_cap(
            self.corr.clone(),
            self.sigma.clone(),
            v,
            &self.tol,
            self.tensor_cap,
        )
    }

    /// `E^{⊗m}` (shared and cached).
    pub fn corr_power(&self, m: usize) -> Result<Arc<Correspondence>> {
        if let Some(c) = self.cache.lock().expect("cache lock").corrs.get(&m) {
            return Ok(c.clone());
        }
        let c = if m == 0 {
            Arc::new(Correspondence::algebra_itself(self.corr.algebra()))
        } else {
            let prev = self.corr_power(m - 1)?;
            let n = self.corr.module_dim().pow(m as u32) * self.h_dim();
            if n > self.tensor_cap {
                return Err(Error::Resource {
                    dim: n,
                    cap: self.tensor_cap,
                });
            }
            Arc::new(Correspondence::tensor(&self.corr, &prev)?)
        };
        let mut cache = self.cache.lock().expect("cache lock");
        Ok(cache.corrs.entry(m).or_insert(c).clone())
    }

    /// `E^{⊗m} ⊗_σ H`; `m = 0` is `H` itself.
    pub fn space(&self, m: usize) -> Result<Arc<TensorSpace>> {
        if let Some(s) = self.cache.lock().expect("cache lock").spaces.get(&m) {
            return Ok(s.clone());
        }
        let formal = self
            .corr
            .module_dim()
            .checked_pow(m as u32)
            .and_then(|x| x.checked_mul(self.h_dim()))
            .unwrap_or(usize::MAX);
        if formal > self.tensor_cap {
            return Err(Error::Resource {
                dim: formal,
                cap: self.tensor_cap,
            });
        }
        let corr = self.corr_power(m)?;
        let s = Arc::new(TensorSpace::interior(
            corr,
            &self.sigma,
            &self.tol,
            self.tensor_cap,
        )?);
        let mut cache = self.cache.lock().expect("cache lock");
        Ok(cache.spaces.entry(m).or_insert(s).clone())
    }

    /// `I_{E^{⊗j}} ⊗ X` for `X : E^{⊗dom} ⊗ H → E^{⊗cod} ⊗ H`.
    pub fn amplify(&self, j: usize, x: &CMatrix, dom: usize, cod: usize) -> Result<CMatrix> {
        let d = self.space(dom)?;
        let c = self.space(cod)?;
        if j == 0 {
            if x.shape() != (c.dim(), d.dim()) {
                return Err(Error::Dimension(format!(
                    "operator is {}x{}, expected {}x{}",
                    x.nrows(),
                    x.ncols(),
                    c.dim(),
                    d.dim()
                )));
            }
            return Ok(x.clone());
        }
        let big_d = self.space(j + dom)?;
        let big_c = self.space(j + cod)?;
        let n_f = self.corr.module_dim().pow(j as u32);
        amplify(n_f, x, &d, &c, &big_d, &big_c, &self.tol)
    }

    /// `I_{E^{⊗j}} ⊗ Ṽ : E^{⊗(j+1)} ⊗ H → E^{⊗j} ⊗ H`.
    pub fn amplified_tilde(&self, j: usize) -> Result<CMatrix> {
        self.amplify(j, &self.tilde, 1, 0)
    }

    /// `Ṽ_m = Ṽ (I_E ⊗ Ṽ) ⋯ (I_{E^{⊗(m-1)}} ⊗ Ṽ)`; `Ṽ_0 = I_H`.
    pub fn tilde_power(&self, m: usize) -> Result<Arc<CMatrix>> {
        if let Some(p) = self.cache.lock().expect("cache lock").powers.get(&m) {
            return Ok(p.clone());
        }
        let p = match m {
            0 => identity(self.h_dim()),
            1 => self.tilde.clone(),
            _ => {
                let prev = self.tilde_power(m - 1)?;
                let p = prev.as_ref() * self.amplified_tilde(m - 1)?;
                self.check_power(m, &p)?;
                p
            }
        };
        let mut cache = self.cache.lock().expect("cache lock");
        Ok(cache.powers.entry(m).or_insert_with(|| Arc::new(p)).clone())
    }

    /// Compares `Ṽ_m` with `V(x_1)⋯V(x_m)h` on random simple tensors.
    fn check_power(&self, m: usize, p: &CMatrix) -> Result<()> {
        let space = self.space(m)?;
        let factors: Vec<&[CMatrix]> = (0..m).map(|_| self.v_on_basis.as_slice()).collect();
        check_simple_tensors(p, &space, &factors, &self.tol, 0x5eed ^ m as u64)
    }

    pub fn pinv(&self) -> Result<Arc<CMatrix>> {
        if let Some(p) = &self.cache.lock().expect("cache lock").pinv {
            return Ok(p.clone());
        }
        let p = Arc::new(pseudoinverse(&self.tilde, &self.tol)?);
        self.cache.lock().expect("cache lock").pinv = Some(p.clone());
        Ok(p)
    }

    /// `(I_{E^{⊗(m-1)}} ⊗ Ṽ†) ⋯ (I_E ⊗ Ṽ†) Ṽ† : H → E^{⊗m} ⊗ H`.
    pub fn pinv_chain(&self, m: usize) -> Result<CMatrix> {
        if m == 0 {
            return Ok(identity(self.h_dim()));
        }
        let p = self.pinv()?;
        let mut out = p.as_ref().clone();
        for j in 1..m {
            out = self.amplify(j, &p, 0, 1)? * out;
        }
        Ok(out)
    }

    pub fn classify(&self) -> Result<ClassificationReport> {
        let tol = &self.tol;
        let conditions = partial_isometry_conditions(&self.tilde, tol)?;
        let norm = op_norm(&self.tilde);
        let t = &self.tilde;
        let iso = op_norm(&(mul(&t.adjoint(), t) - identity(t.ncols())));
        let coiso = op_norm(&(mul(t, &t.adjoint()) - identity(t.nrows())));
        Ok(ClassificationReport {
            norm,
            is_contractive: is_contraction(t, tol),
            is_isometric: tol.equal(iso, 1.0),
            is_coisometric: tol.equal(coiso, 1.0),
            is_partial_isometric: conditions.holds[2],
            numeric_inconsistency: !conditions.unanimous(),
            conditions,
            intertwining_residual: self.intertwining_residual,
            tolerance: *tol,
        })
    }

    pub fn is_partial_isometric(&self) -> bool {
        crate::numerics::is_partial_isometry(&self.tilde, &self.tol)
    }

    /// The subspace `E ⊗ K` of `E ⊗_σ H` for a σ-invariant `K ⊆ H`.
    pub fn tensor_subspace(&self, k: &Subspace) -> Result<Subspace> {
        let amp = self.amplify(1, &k.projector(), 0, 0)?;
        Subspace::range(&amp, &self.tol)
    }

    /// Compression to a reducing subspace `K`, in coordinates adapted to σ.
    pub fn restrict(&self, k: &Subspace) -> Result<CovariantRep> {
        let tol = &self.tol;
        let h = self.h_dim();
        if k.ambient() != h {
            return Err(Error::Dimension(format!(
                "subspace of C^{} for H = C^{h}",
                k.ambient()
            )));
        }
        let alg = self.sigma.algebra().clone();
        for c in 0..alg.dim() {
            let r = mapped_inclusion_residual(&self.sigma.apply_basis(c), k, k)?;
            if !tol.included(r) {
                return Err(Error::Domain(format!(
                    "K is not σ-invariant (basis element {c}, residual {r:.3e})"
                )));
            }
        }
        let ek = self.tensor_subspace(k)?;
        let r = mapped_inclusion_residual(&self.tilde, &ek, k)?;
        if !tol.included(r) {
            return Err(Error::Domain(format!(
                "Ṽ(E ⊗ K) is not contained in K (residual {r:.3e})"
            )));
        }
        let r = mapped_inclusion_residual(&self.tilde.adjoint(), k, &ek)?;
        if !tol.included(r) {
            return Err(Error::Domain(format!(
                "Ṽ^*(K) is not contained in E ⊗ K (residual {r:.3e})"
            )));
        }

        let mut mults = Vec::with_capacity(alg.num_blocks());
        let mut columns: Vec<CMatrix> = Vec::new();
        for (block, &kb) in alg.block_sizes().iter().enumerate() {
            let e11 = self.sigma.apply_basis(alg.basis_index(block, 0, 0));
            let l = Subspace::image(&e11, k, tol)?;
            mults.push(l.dim());
            for p in 0..kb {
                let ep1 = self.sigma.apply_basis(alg.basis_index(block, p, 0));
                columns.push(ep1 * l.frame());
            }
        }
        let refs: Vec<&CMatrix> = columns.iter().collect();
        let frame = hstack(h, &refs);
        let sigma = StarRepresentation::new(alg, mults)?;
        let v = self
            .v_on_basis
            .iter()
            .map(|m| frame.adjoint() * m * &frame)
            .collect();
        CovariantRep::with_cap(self.corr.clone(), sigma, v, tol, self.tensor_cap)
    }

    /// Orthogonal direct sum of representations of the same correspondence.
    pub fn direct_sum(reps: &[&CovariantRep]) -> Result<CovariantRep> {
        let first = reps
            .first()
            .ok_or_else(|| Error::InvalidRepresentation("direct sum of nothing".into()))?;
        let corr = first.corr.clone();
        for r in reps {
            if !Arc::ptr_eq(&r.corr, &corr) && r.corr.as_ref() != corr.as_ref() {
                return Err(Error::InvalidRepresentation(
                    "direct summands must share the correspondence".into(),
                ));
            }
        }
        let alg = corr.algebra().clone();
        let blocks = alg.num_blocks();
        let mults: Vec<usize> = (0..blocks)
            .map(|i| reps.iter().map(|r| r.sigma.multiplicities()[i]).sum())
            .collect();
        let sigma = StarRepresentation::new(alg.clone(), mults.clone())?;
        let h = sigma.dim();
        let n = corr.module_dim();
        let mut v = vec![CMatrix::zeros(h, h); n];
        let mut prefix = vec![0usize; blocks];
        for r in reps {
            let rs = &r.sigma;
            let mut perm = vec![0usize; rs.dim()];
            for (i, &kb) in alg.block_sizes().iter().enumerate() {
                let m_loc = rs.multiplicities()[i];
                for p in 0..kb {
                    for s in 0..m_loc {
                        let local = rs.block_offset(i) + p * m_loc + s;
                        perm[local] = sigma.block_offset(i) + p * mults[i] + prefix[i] + s;
                    }
                }
            }
            for (b, vb) in r.v_on_basis.iter().enumerate() {
                for (i, &gi) in perm.iter().enumerate() {
                    for (j, &gj) in perm.iter().enumerate() {
                        v[b][(gi, gj)] = vb[(i, j)];
                    }
                }
            }
            for (i, pre) in prefix.iter_mut().enumerate() {
                *pre += rs.multiplicities()[i];
            }
        }
        let tol = first.tol;
        let cap = reps
            .iter()
            .map(|r| r.tensor_cap)
            .min()
            .unwrap_or(DEFAULT_TENSOR_CAP);
        CovariantRep::with_cap(corr, sigma, v, &tol, cap)
    }
}

/// Checks `P(x_1 ⊗ ⋯ ⊗ x_m ⊗ h) = W_1(x_1)⋯W_m(x_m)h` on 20 random simple
/// tensors, where `W_i(x) = Σ_b x_b factors[i][b]` and `P` acts on `space`.
pub(crate) fn check_simple_tensors(
    p: &CMatrix,
    space: &TensorSpace,
    factors: &[&[CMatrix]],
    tol: &Tolerance,
    seed: u64,
) -> Result<()> {
    let h = space.sigma().dim();
    if h == 0 || factors.iter().any(|f| f.is_empty()) {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = |len: usize| -> Vec<C64> {
        (0..len)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    };
    let pnorm = op_norm(p);
    for _ in 0..20 {
        let xs: Vec<Vec<C64>> = factors.iter().map(|f| sample(f.len())).collect();
        let hv = sample(h);
        let mut expected = CMatrix::from_column_slice(h, 1, &hv);
        let mut scale = expected.norm();
        for (x, f) in xs.iter().zip(factors).rev() {
            let mut vx = CMatrix::zeros(h, h);
            for (b, c) in x.iter().enumerate() {
                vx += &f[b] * *c;
            }
            scale *= op_norm(&vx).max(1.0);
            expected = vx * expected;
        }
        let mut formal = vec![C64::new(1.0, 0.0)];
        for x in &xs {
            formal = formal
                .iter()
                .flat_map(|a| x.iter().map(move |b| a * b))
                .collect();
        }
        formal = formal
            .iter()
            .flat_map(|a| hv.iter().map(move |b| a * b))
            .collect();
        let v = space.embed_mul(&CMatrix::from_column_slice(formal.len(), 1, &formal));
        let diff = (p * &v - &expected).norm();
        if !tol.equal(diff, scale.max(pnorm * v.norm())) {
            return Err(Error::Domain(format!(
                "composite lift disagrees with its defining formula on simple tensors (residual {diff:.3e})"
            )));
        }
    }
    Ok(())
}
