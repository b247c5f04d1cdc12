//! Dense complex linear algebra with a tolerance-disciplined notion of rank.
//!
//! Every rank decision in the crate goes through [`Tolerance::rank_cutoff`]:
//! a singular value `s` counts as zero iff
//! `s <= rank_rel * max(1, s_max) * max(rows, cols)`.
//! Identity checks compare a residual norm against `eq_rel * max(1, scale)`,
//! and subspace inclusions compare against the absolute `incl_abs`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Numeric policy for rank, identity and inclusion decisions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Relative singular-value cutoff.
    pub rank_rel: f64,
    /// Relative residual cutoff for operator identities.
    pub eq_rel: f64,
    /// Absolute cutoff for subspace-inclusion norms.
    pub incl_abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rank_rel: 1e-10,
            eq_rel: 1e-8,
            incl_abs: 1e-8,
        }
    }
}

impl Tolerance {
    pub fn new(rank_rel: f64, eq_rel: f64, incl_abs: f64) -> Result<Self> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !(ok(rank_rel) && ok(eq_rel) && ok(incl_abs)) || rank_rel >= 1.0 {
            return Err(Error::Domain(format!(
                "tolerances must be positive with rank_rel < 1 (got {rank_rel}, {eq_rel}, {incl_abs})"
            )));
        }
        Ok(Self {
            rank_rel,
            eq_rel,
            incl_abs,
        })
    }

    /// Singular values at or below this value are treated as zero.
    ///
    /// Like [`Tolerance::equal`], the scale is floored at 1: a product of
    /// operators that vanishes up to rounding has rank zero.
    pub fn rank_cutoff(&self, s_max: f64, rows: usize, cols: usize) -> f64 {
        self.rank_rel * s_max.max(1.0) * rows.max(cols).max(1) as f64
    }

    /// Whether an identity residual is acceptable relative to `scale`.
    ///
    /// The scale is floored at 1 so that operators which vanish up to rounding
    /// do not demand residuals below machine precision.
    pub fn equal(&self, residual: f64, scale: f64) -> bool {
        residual <= self.eq_rel * scale.max(1.0)
    }

    pub fn included(&self, residual: f64) -> bool {
        residual <= self.incl_abs
    }
}

/// Thin singular value decomposition with singular values sorted descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v_t: CMatrix,
    pub rank: usize,
}

impl Svd {
    pub fn range_frame(&self) -> CMatrix {
        self.u.columns(0, self.rank).into_owned()
    }

    /// Orthonormal frame of `R(M^*) = N(M)^⊥`.
    pub fn coimage_frame(&self) -> CMatrix {
        self.v_t.rows(0, self.rank).adjoint()
    }
}

pub fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{}x{} matrix has non-finite entries",
            m.nrows(),
            m.ncols()
        )))
    }
}

pub fn svd(m: &CMatrix, tol: &Tolerance) -> Result<Svd> {
    svd_scaled(m, 0.0, tol)
}

/// As [`svd`], with the rank cutoff taken relative to `max(σ_max, scale)`.
///
/// Use this when `m` is a product such as `A F` and the rank decision should
/// be relative to `||A||`, not to the possibly tiny product.
pub fn svd_scaled(m: &CMatrix, scale: f64, tol: &Tolerance) -> Result<Svd> {
    let (rows, cols) = m.shape();
    let p = rows.min(cols);
    if p == 0 {
        return Ok(Svd {
            u: CMatrix::zeros(rows, 0),
            singular_values: Vec::new(),
            v_t: CMatrix::zeros(0, cols),
            rank: 0,
        });
    }
    check_finite(m)?;
    let f = to_faer(m);
    let dec = f
        .thin_svd()
        .map_err(|_| Error::NumericFailure { rows, cols })?;
    let u = from_faer(dec.U());
    let v_t = from_faer(dec.V()).adjoint();
    let s: Vec<f64> = dec.S().column_vector().iter().map(|z| z.re).collect();

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let u = CMatrix::from_fn(rows, p, |i, k| u[(i, order[k])]);
    let v_t = CMatrix::from_fn(p, cols, |k, j| v_t[(order[k], j)]);
    let singular_values: Vec<f64> = order.iter().map(|&k| s[k]).collect();

    let s_max = singular_values[0];
    let cutoff = tol.rank_cutoff(s_max.max(scale), rows, cols);
    let rank = if s_max <= 0.0 {
        0
    } else {
        singular_values.iter().take_while(|&&x| x > cutoff).count()
    };
    Ok(Svd {
        u,
        singular_values,
        v_t,
        rank,
    })
}

/// Matrix product through the backend's blocked kernel.
///
/// nalgebra's generic product is several times slower for complex entries
/// at the sizes reached by truncated shifts and tensor powers.
pub fn mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(
        a.ncols(),
        b.nrows(),
        "product of {}x{} and {}x{}",
        a.nrows(),
        a.ncols(),
        b.nrows(),
        b.ncols()
    );
    if a.nrows() * a.ncols() * b.ncols() < 32 * 32 * 32 {
        return a * b;
    }
    from_faer((to_faer(a) * to_faer(b)).as_ref())
}

/// Spectral norm, computed from the eigenvalues of the smaller Gram matrix.
pub fn op_norm(m: &CMatrix) -> f64 {
    let (r, c) = m.shape();
    if r == 0 || c == 0 || m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return 0.0;
    }
    let gram = if r <= c {
        mul(m, &m.adjoint())
    } else {
        mul(&m.adjoint(), m)
    };
    let lmax = hermitian_eigenvalues(&gram)
        .into_iter()
        .fold(0.0_f64, f64::max);
    lmax.max(0.0).sqrt()
}

fn to_faer(m: &CMatrix) -> faer::Mat<faer::c64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    })
}

fn from_faer(m: faer::MatRef<'_, faer::c64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        C64::new(z.re, z.im)
    })
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of the Hermitian
/// part of a square matrix.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let (r, c) = m.shape();
    check_finite(m)?;
    let f = to_faer(&hermitian_part(m));
    let e = f
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::NumericFailure { rows: r, cols: c })?;
    let vals = e.S().column_vector().iter().map(|z| z.re).collect();
    Ok((vals, from_faer(e.U())))
}

/// Eigenvalues of the Hermitian part, ascending.
///
/// Panics if the tridiagonal QR iteration does not converge, which the
/// backend documents as unreachable for finite input.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let f = to_faer(&hermitian_part(m));
    f.self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("Hermitian eigenvalue iteration failed to converge")
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Distance of two same-shaped matrices in spectral norm.
pub fn distance(a: &CMatrix, b: &CMatrix) -> f64 {
    op_norm(&(a - b))
}

pub fn pseudoinverse(m: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    let dec = svd(m, tol)?;
    let (rows, cols) = m.shape();
    let mut out = CMatrix::zeros(cols, rows);
    for k in 0..dec.rank {
        let inv = 1.0 / dec.singular_values[k];
        let v = dec.v_t.row(k).adjoint();
        let u = dec.u.column(k).adjoint();
        out += (v * u).scale(inv);
    }
    Ok(out)
}

pub fn range_frame(m: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    Ok(svd(m, tol)?.range_frame())
}

/// Orthonormal frame of `N(M)^⊥ = R(M^*)`.
pub fn coimage_frame(m: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    Ok(svd(m, tol)?.coimage_frame())
}

pub fn kernel_frame(m: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    Ok(complement_frame(&coimage_frame(m, tol)?))
}

pub fn rank(m: &CMatrix, tol: &Tolerance) -> Result<usize> {
    Ok(svd(m, tol)?.rank)
}

pub fn range_projector(m: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    let f = range_frame(m, tol)?;
    Ok(&f * f.adjoint())
}

pub fn kernel_projector(m: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    let f = coimage_frame(m, tol)?;
    Ok(identity(m.ncols()) - &f * f.adjoint())
}

/// Orthonormal basis of the orthogonal complement of the span of an
/// orthonormal frame, via Householder reflections built from the frame.
pub fn complement_frame(frame: &CMatrix) -> CMatrix {
    let (n, r) = frame.shape();
    if r >= n {
        return CMatrix::zeros(n, 0);
    }
    let mut work = frame.clone();
    let mut reflectors: Vec<(usize, DVector<C64>)> = Vec::with_capacity(r);
    for k in 0..r {
        let x = work.view((k, k), (n - k, 1)).column(0).into_owned();
        let norm_x = x.norm();
        if norm_x == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            ONE
        };
        let mut v = x.clone();
        v[0] += phase * norm_x;
        let vn = v.norm();
        if vn == 0.0 {
            continue;
        }
        v /= C64::new(vn, 0.0);
        apply_reflector(&mut work, k, &v);
        reflectors.push((k, v));
    }
    let mut out = CMatrix::zeros(n, n - r);
    for (col, j) in (r..n).enumerate() {
        let mut y = DVector::<C64>::zeros(n);
        y[j] = ONE;
        for (k, v) in reflectors.iter().rev() {
            let seg = y.rows(*k, n - k).into_owned();
            let dot = v.dotc(&seg);
            let new_seg = seg - v * (dot * 2.0);
            y.rows_mut(*k, n - k).copy_from(&new_seg);
        }
        out.set_column(col, &y);
    }
    out
}

fn apply_reflector(work: &mut CMatrix, k: usize, v: &DVector<C64>) {
    let n = work.nrows();
    let cols = work.ncols();
    for j in k..cols {
        let seg = work.view((k, j), (n - k, 1)).column(0).into_owned();
        let dot = v.dotc(&seg);
        let new_seg = seg - v * (dot * 2.0);
        work.view_mut((k, j), (n - k, 1)).copy_from(&new_seg);
    }
}

/// Square root of a positive semidefinite (self-adjoint) matrix.
///
/// Negative eigenvalues down to `-10 * eq_rel * max(1, ||M||)` are clamped to
/// zero; anything more negative is a domain error.
pub fn psd_sqrt(m: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    let (r, c) = m.shape();
    if r != c {
        return Err(Error::Dimension(format!(
            "psd_sqrt needs a square matrix, got {r}x{c}"
        )));
    }
    if r == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    check_finite(m)?;
    let scale = op_norm(m);
    let asym = op_norm(&(m - m.adjoint()));
    if !tol.equal(asym, scale) {
        return Err(Error::Domain(format!(
            "psd_sqrt input is not self-adjoint (residual {asym:.3e})"
        )));
    }
    let (values, q) = hermitian_eigen(m)?;
    let floor = -10.0 * tol.eq_rel * scale.max(1.0);
    let mut roots = Vec::with_capacity(r);
    for &l in &values {
        if l < floor {
            return Err(Error::Domain(format!(
                "psd_sqrt input has eigenvalue {l:.3e}"
            )));
        }
        roots.push(C64::new(l.max(0.0).sqrt(), 0.0));
    }
    let d = CMatrix::from_diagonal(&DVector::from_vec(roots));
    Ok(hermitian_part(&(&q * d * q.adjoint())))
}

/// `I_n ⊗ X`, i.e. `n` copies of `X` down the diagonal.
pub fn kron_identity(n: usize, x: &CMatrix) -> CMatrix {
    let (r, c) = x.shape();
    let mut out = CMatrix::zeros(n * r, n * c);
    for k in 0..n {
        out.view_mut((k * r, k * c), (r, c)).copy_from(x);
    }
    out
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Horizontal concatenation; all blocks must share the row count `rows`.
pub fn hstack(rows: usize, blocks: &[&CMatrix]) -> CMatrix {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}

pub fn vstack(cols: usize, blocks: &[&CMatrix]) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        at += b.nrows();
    }
    out
}

pub fn block_diag(blocks: &[&CMatrix]) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), b.shape()).copy_from(*b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

// ---------------------------------------------------------------------------
// Partial isometry predicates

/// `||M M^* M - M||`.
pub fn partial_isometry_residual(m: &CMatrix) -> f64 {
    let mmm = if m.nrows() <= m.ncols() {
        mul(&mul(m, &m.adjoint()), m)
    } else {
        mul(m, &mul(&m.adjoint(), m))
    };
    op_norm(&(mmm - m))
}

pub fn is_partial_isometry(m: &CMatrix, tol: &Tolerance) -> bool {
    tol.equal(partial_isometry_residual(m), op_norm(m))
}

pub fn isometry_residual(m: &CMatrix) -> f64 {
    op_norm(&(m.adjoint() * m - identity(m.ncols())))
}

pub fn is_isometry(m: &CMatrix, tol: &Tolerance) -> bool {
    tol.equal(isometry_residual(m), 1.0)
}

pub fn is_projection(m: &CMatrix, tol: &Tolerance) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = op_norm(m);
    tol.equal(op_norm(&(m * m - m)), scale) && tol.equal(op_norm(&(m - m.adjoint())), scale)
}

pub fn is_contraction(m: &CMatrix, tol: &Tolerance) -> bool {
    op_norm(m) <= 1.0 + tol.eq_rel
}

/// Residuals of the six equivalent characterisations of a partial isometry:
///
/// 0. `M` is isometric on `N(M)^⊥`
/// 1. `M^*` is isometric on `N(M^*)^⊥`
/// 2. `M M^* M = M`
/// 3. `M^* M` is the projection onto `R(M^*)`
/// 4. `M M^*` is the projection onto `R(M)`
/// 5. `M^† = M^*`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartialIsometryConditions {
    pub residuals: [f64; 6],
    pub holds: [bool; 6],
}

impl PartialIsometryConditions {
    pub fn unanimous(&self) -> bool {
        self.holds.iter().all(|&h| h == self.holds[0])
    }
}

pub fn partial_isometry_conditions(
    m: &CMatrix,
    tol: &Tolerance,
) -> Result<PartialIsometryConditions> {
    let dec = svd(m, tol)?;
    let scale = dec.singular_values.first().copied().unwrap_or(0.0);
    let init = dec.coimage_frame();
    let fin = dec.range_frame();
    let mh = m.adjoint();

    let mhm = mul(&mh, m);
    let mmh = mul(m, &mh);
    let r0 = op_norm(&(mul(&init.adjoint(), &mul(&mhm, &init)) - identity(init.ncols())));
    let r1 = op_norm(&(mul(&fin.adjoint(), &mul(&mmh, &fin)) - identity(fin.ncols())));
    let r2 = partial_isometry_residual(m);
    let r3 = op_norm(&(mhm - mul(&init, &init.adjoint())));
    let r4 = op_norm(&(mmh - mul(&fin, &fin.adjoint())));
    let r5 = op_norm(&(pseudoinverse(m, tol)? - &mh));

    let residuals = [r0, r1, r2, r3, r4, r5];
    let holds = residuals.map(|r| tol.equal(r, scale));
    Ok(PartialIsometryConditions { residuals, holds })
}

// ---------------------------------------------------------------------------
// Subspaces

/// A subspace of `C^n`, stored as an orthonormal column frame.
///
/// The zero subspace has a frame with no columns.
#[derive(Clone, Debug)]
pub struct Subspace {
    ambient: usize,
    frame: CMatrix,
}

impl Subspace {
    /// Wraps an orthonormal frame, checking orthonormality.
    pub fn from_frame(frame: CMatrix, tol: &Tolerance) -> Result<Self> {
        let k = frame.ncols();
        if k > frame.nrows() {
            return Err(Error::Dimension(format!(
                "frame has {k} columns in ambient dimension {}",
                frame.nrows()
            )));
        }
        let res = op_norm(&(frame.adjoint() * &frame - identity(k)));
        if !tol.equal(res, 1.0) {
            return Err(Error::Domain(format!(
                "frame is not orthonormal (residual {res:.3e})"
            )));
        }
        Ok(Self {
            ambient: frame.nrows(),
            frame,
        })
    }

    /// The span of the columns of `m`.
    pub fn span(m: &CMatrix, tol: &Tolerance) -> Result<Self> {
        Ok(Self {
            ambient: m.nrows(),
            frame: range_frame(m, tol)?,
        })
    }

    /// The span of the columns of `m`, dropping directions below the rank
    /// cutoff for `scale`.
    pub fn span_scaled(m: &CMatrix, scale: f64, tol: &Tolerance) -> Result<Self> {
        Ok(Self {
            ambient: m.nrows(),
            frame: svd_scaled(m, scale, tol)?.range_frame(),
        })
    }

    pub fn whole(n: usize) -> Self {
        Self {
            ambient: n,
            frame: identity(n),
        }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            ambient: n,
            frame: CMatrix::zeros(n, 0),
        }
    }

    /// Span of the given standard basis vectors.
    pub fn coordinate(n: usize, indices: &[usize]) -> Self {
        let mut frame = CMatrix::zeros(n, indices.len());
        for (c, &i) in indices.iter().enumerate() {
            frame[(i, c)] = ONE;
        }
        Self { ambient: n, frame }
    }

    pub fn kernel(m: &CMatrix, tol: &Tolerance) -> Result<Self> {
        Ok(Self {
            ambient: m.ncols(),
            frame: kernel_frame(m, tol)?,
        })
    }

    pub fn range(m: &CMatrix, tol: &Tolerance) -> Result<Self> {
        Self::span(m, tol)
    }

    /// `N(M)^⊥`, computed directly as `R(M^*)`.
    pub fn coimage(m: &CMatrix, tol: &Tolerance) -> Result<Self> {
        Ok(Self {
            ambient: m.ncols(),
            frame: coimage_frame(m, tol)?,
        })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn frame(&self) -> &CMatrix {
        &self.frame
    }

    pub fn projector(&self) -> CMatrix {
        &self.frame * self.frame.adjoint()
    }

    fn same_ambient(&self, other: &Subspace) -> Result<()> {
        if self.ambient != other.ambient {
            return Err(Error::Dimension(format!(
                "subspaces live in C^{} and C^{}",
                self.ambient, other.ambient
            )));
        }
        Ok(())
    }

    /// `||(I - P_other) F_self||`, the inclusion defect of `self ⊆ other`.
    pub fn inclusion_residual(&self, other: &Subspace) -> Result<f64> {
        self.same_ambient(other)?;
        if self.dim() == 0 {
            return Ok(0.0);
        }
        let rest = &self.frame - &other.frame * (other.frame.adjoint() * &self.frame);
        Ok(op_norm(&rest))
    }

    pub fn is_subset(&self, other: &Subspace, tol: &Tolerance) -> Result<bool> {
        Ok(tol.included(self.inclusion_residual(other)?))
    }

    pub fn equals(&self, other: &Subspace, tol: &Tolerance) -> Result<bool> {
        Ok(self.dim() == other.dim()
            && self.is_subset(other, tol)?
            && other.is_subset(self, tol)?)
    }

    /// Intersection from the kernel of `[(I - P_1); (I - P_2)]`.
    pub fn intersect(&self, other: &Subspace, tol: &Tolerance) -> Result<Subspace> {
        self.same_ambient(other)?;
        let n = self.ambient;
        if self.dim() == 0 || other.dim() == 0 {
            return Ok(Subspace::zero(n));
        }
        let q1 = identity(n) - self.projector();
        let q2 = identity(n) - other.projector();
        let stacked = vstack(n, &[&q1, &q2]);
        Ok(Subspace {
            ambient: n,
            frame: kernel_frame(&stacked, tol)?,
        })
    }

    pub fn ortho_complement(&self) -> Subspace {
        Subspace {
            ambient: self.ambient,
            frame: complement_frame(&self.frame),
        }
    }

    /// `self ⊖ other`; requires `other ⊆ self`.
    pub fn ominus(&self, other: &Subspace, tol: &Tolerance) -> Result<Subspace> {
        self.same_ambient(other)?;
        let res = other.inclusion_residual(self)?;
        if !tol.included(res) {
            return Err(Error::Domain(format!(
                "ominus needs nested subspaces (inclusion residual {res:.3e})"
            )));
        }
        let projected = &self.frame - &other.frame * (other.frame.adjoint() * &self.frame);
        Subspace::span_scaled(&projected, 1.0, tol)
    }

    /// Closed linear span of `self ∪ other`.
    pub fn join(&self, other: &Subspace, tol: &Tolerance) -> Result<Subspace> {
        self.same_ambient(other)?;
        let both = hstack(self.ambient, &[&self.frame, &other.frame]);
        Subspace::span_scaled(&both, 1.0, tol)
    }

    /// `M(S)`; `M` must have `ambient` columns.
    pub fn image(m: &CMatrix, s: &Subspace, tol: &Tolerance) -> Result<Subspace> {
        if m.ncols() != s.ambient {
            return Err(Error::Dimension(format!(
                "operator with {} columns applied to a subspace of C^{}",
                m.ncols(),
                s.ambient
            )));
        }
        Subspace::span_scaled(&(m * &s.frame), op_norm(m), tol)
    }

    /// Norm of the cross Gram `F_1^* F_2`; zero iff the subspaces are orthogonal.
    pub fn orthogonality_residual(&self, other: &Subspace) -> Result<f64> {
        self.same_ambient(other)?;
        Ok(op_norm(&(self.frame.adjoint() * &other.frame)))
    }
}

/// Orthogonal-projection residual used for inclusion tests of the form
/// `A(S) ⊆ T`: returns `||(I - P_T) A F_S||`.
pub fn mapped_inclusion_residual(a: &CMatrix, source: &Subspace, target: &Subspace) -> Result<f64> {
    if a.ncols() != source.ambient() || a.nrows() != target.ambient() {
        return Err(Error::Dimension(format!(
            "operator {}x{} between C^{} and C^{}",
            a.nrows(),
            a.ncols(),
            source.ambient(),
            target.ambient()
        )));
    }
    if source.dim() == 0 {
        return Ok(0.0);
    }
    let img = a * source.frame();
    let rest = &img - target.frame() * (target.frame().adjoint() * &img);
    Ok(op_norm(&rest))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
        CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)))
    }

    fn seeded(rows: usize, cols: usize, seed: u64) -> CMatrix {
        // small LCG, enough for fixed test inputs
        let mut state = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        CMatrix::from_fn(rows, cols, |_, _| C64::new(next(), next()))
    }

    #[test]
    fn pseudoinverse_of_identity_and_diagonal() {
        let tol = Tolerance::default();
        let i3 = identity(3);
        assert!(distance(&pseudoinverse(&i3, &tol).unwrap(), &i3) < 1e-14);
        let d = real(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let expect = real(2, 2, &[0.5, 0.0, 0.0, 0.0]);
        assert!(distance(&pseudoinverse(&d, &tol).unwrap(), &expect) < 1e-14);
    }

    #[test]
    fn pseudoinverse_penrose_equations_seed_7() {
        let tol = Tolerance::default();
        let m = seeded(4, 3, 7);
        let p = pseudoinverse(&m, &tol).unwrap();
        let n = op_norm(&m);
        assert!(op_norm(&(&p * &m * &p - &p)) <= 1e-10 * n.max(1.0));
        assert!(op_norm(&(&m * &p * &m - &m)) <= 1e-10 * n);
        let mp = &m * &p;
        assert!(op_norm(&(mp.adjoint() - &mp)) <= 1e-10);
        let pm = &p * &m;
        assert!(op_norm(&(pm.adjoint() - &pm)) <= 1e-10);
    }

    #[test]
    fn projectors_of_zero_and_nilpotent() {
        let tol = Tolerance::default();
        let z = CMatrix::zeros(2, 2);
        assert!(op_norm(&range_projector(&z, &tol).unwrap()) == 0.0);
        assert!(distance(&kernel_projector(&z, &tol).unwrap(), &identity(2)) < 1e-15);

        let n = real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let e0 = real(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(distance(&range_projector(&n, &tol).unwrap(), &e0) < 1e-14);
        assert!(distance(&kernel_projector(&n, &tol).unwrap(), &e0) < 1e-14);
    }

    #[test]
    fn projectors_rank_two_seed_11() {
        let tol = Tolerance::default();
        let m = seeded(5, 2, 11) * seeded(2, 5, 12);
        for p in [
            range_projector(&m, &tol).unwrap(),
            kernel_projector(&m, &tol).unwrap(),
        ] {
            assert!(op_norm(&(&p * &p - &p)) <= 1e-10);
            assert!(op_norm(&(&p - p.adjoint())) <= 1e-10);
        }
        assert_eq!(rank(&m, &tol).unwrap(), 2);
        let mp = &m * pseudoinverse(&m, &tol).unwrap();
        assert!(distance(&range_projector(&m, &tol).unwrap(), &mp) <= 1e-8);
    }

    #[test]
    fn psd_sqrt_cases() {
        let tol = Tolerance::default();
        assert!(distance(&psd_sqrt(&identity(3), &tol).unwrap(), &identity(3)) < 1e-14);
        let d = real(2, 2, &[4.0, 0.0, 0.0, 0.0]);
        let expect = real(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        assert!(distance(&psd_sqrt(&d, &tol).unwrap(), &expect) < 1e-14);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = real(2, 2, &[h, 0.0, h, 0.0]);
        let m = identity(2) - &v * v.adjoint();
        let s = psd_sqrt(&m, &tol).unwrap();
        assert!(op_norm(&(&s * &s - &m)) <= 1e-10);

        let neg = real(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert!(matches!(psd_sqrt(&neg, &tol), Err(Error::Domain(_))));
    }

    #[test]
    fn subspace_intersection_and_ominus() {
        let tol = Tolerance::default();
        let a = Subspace::coordinate(3, &[0, 1]);
        let b = Subspace::coordinate(3, &[1, 2]);
        let c = a.intersect(&b, &tol).unwrap();
        assert!(c.equals(&Subspace::coordinate(3, &[1]), &tol).unwrap());

        let whole = Subspace::whole(4);
        let w = whole.ominus(&Subspace::zero(4), &tol).unwrap();
        assert!(w.equals(&whole, &tol).unwrap());

        let err = a.ominus(&b, &tol);
        assert!(matches!(err, Err(Error::Domain(_))));
        let mismatch = a.intersect(&Subspace::whole(2), &tol);
        assert!(matches!(mismatch, Err(Error::Dimension(_))));
    }

    #[test]
    fn complement_is_orthonormal_and_orthogonal() {
        let tol = Tolerance::default();
        let s = Subspace::span(&seeded(7, 3, 5), &tol).unwrap();
        let c = s.ortho_complement();
        assert_eq!(c.dim(), 4);
        let f = c.frame();
        assert!(op_norm(&(f.adjoint() * f - identity(4))) < 1e-12);
        assert!(s.orthogonality_residual(&c).unwrap() < 1e-12);
        assert_eq!(Subspace::whole(3).ortho_complement().dim(), 0);
        assert_eq!(Subspace::zero(3).ortho_complement().dim(), 3);
    }

    #[test]
    fn partial_isometry_examples() {
        let tol = Tolerance::default();
        let n = real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(is_partial_isometry(&n, &tol));
        assert!(!is_partial_isometry(&identity(2).scale(0.5), &tol));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = real(2, 2, &[h, 0.0, h, 0.0]);
        assert!(is_partial_isometry(&v, &tol));
        let conds = partial_isometry_conditions(&v, &tol).unwrap();
        assert!(conds.unanimous() && conds.holds[0]);
        assert!(is_contraction(&v, &tol));
        assert!(!is_isometry(&v, &tol));
        assert!(is_projection(&(&v * v.adjoint()), &tol));
    }

    #[test]
    fn empty_matrices_are_accepted() {
        let tol = Tolerance::default();
        let e = CMatrix::zeros(0, 3);
        assert_eq!(pseudoinverse(&e, &tol).unwrap().shape(), (3, 0));
        assert_eq!(kernel_frame(&e, &tol).unwrap().ncols(), 3);
        assert!(is_partial_isometry(&e, &tol));
    }
}
