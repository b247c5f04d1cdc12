//! Finite-dimensional C*-algebras, their representations, correspondences
//! given by structure data, interior tensor products and amplification.
//!
//! Index conventions used everywhere:
//! - an algebra `A = ⊕ M_{k_i}` acts on `C^K`, `K = Σ k_i`; its basis is the
//!   matrix units ordered by (block, row, column);
//! - `σ(a) = ⊕ a_i ⊗ I_{m_i}`, so block `i`, row `p`, copy `s` sits at
//!   `offset_i + p * m_i + s`;
//! - formal tensor coordinates put the leftmost factor first (most significant).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{kron_identity, mul, op_norm, CMatrix, Tolerance, C64, ONE, ZERO};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Algebra {
    block_sizes: Vec<usize>,
}

impl Algebra {
    pub fn new(block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.is_empty() || block_sizes.contains(&0) {
            return Err(Error::InvalidCorrespondence(format!(
                "block sizes must be a nonempty list of positive counts, got {block_sizes:?}"
            )));
        }
        Ok(Self { block_sizes })
    }

    /// The complex numbers.
    pub fn scalar() -> Self {
        Self {
            block_sizes: vec![1],
        }
    }

    /// `C^n` as a commutative algebra.
    pub fn diagonal(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    /// Size `K` of the matrices representing elements.
    pub fn size(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// Vector-space dimension `Σ k_i²`.
    pub fn dim(&self) -> usize {
        self.block_sizes.iter().map(|k| k * k).sum()
    }

    pub fn is_scalar(&self) -> bool {
        self.block_sizes == [1]
    }

    fn block_offset(&self, block: usize) -> usize {
        self.block_sizes[..block].iter().sum()
    }

    fn basis_offset(&self, block: usize) -> usize {
        self.block_sizes[..block].iter().map(|k| k * k).sum()
    }

    /// Index of the matrix unit `e^{(block)}_{pq}`.
    pub fn basis_index(&self, block: usize, p: usize, q: usize) -> usize {
        let k = self.block_sizes[block];
        self.basis_offset(block) + p * k + q
    }

    /// Inverse of [`Algebra::basis_index`].
    pub fn basis_triple(&self, index: usize) -> (usize, usize, usize) {
        let mut rest = index;
        for (block, &k) in self.block_sizes.iter().enumerate() {
            if rest < k * k {
                return (block, rest / k, rest % k);
            }
            rest -= k * k;
        }
        panic!(
            "basis index {index} out of range for algebra of dimension {}",
            self.dim()
        );
    }

    pub fn basis_element(&self, index: usize) -> CMatrix {
        let (block, p, q) = self.basis_triple(index);
        let off = self.block_offset(block);
        let n = self.size();
        let mut m = CMatrix::zeros(n, n);
        m[(off + p, off + q)] = ONE;
        m
    }

    pub fn unit(&self) -> CMatrix {
        CMatrix::identity(self.size(), self.size())
    }

    /// Index of `e_b^*`.
    pub fn adjoint_index(&self, index: usize) -> usize {
        let (block, p, q) = self.basis_triple(index);
        self.basis_index(block, q, p)
    }

    /// `e_b e_c` as `Some(index)` or `None` when the product vanishes.
    pub fn product_index(&self, b: usize, c: usize) -> Option<usize> {
        let (i, p, q) = self.basis_triple(b);
        let (j, r, s) = self.basis_triple(c);
        (i == j && q == r).then(|| self.basis_index(i, p, s))
    }

    /// Coordinates of a block-diagonal element in the matrix-unit basis.
    pub fn coefficients(&self, a: &CMatrix) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.dim());
        for (block, &k) in self.block_sizes.iter().enumerate() {
            let off = self.block_offset(block);
            for p in 0..k {
                for q in 0..k {
                    out.push(a[(off + p, off + q)]);
                }
            }
        }
        out
    }

    pub fn from_coefficients(&self, coeffs: &[C64]) -> CMatrix {
        let n = self.size();
        let mut m = CMatrix::zeros(n, n);
        for (idx, &c) in coeffs.iter().enumerate() {
            let (block, p, q) = self.basis_triple(idx);
            let off = self.block_offset(block);
            m[(off + p, off + q)] = c;
        }
        m
    }

    /// Norm of the part of `a` lying outside the block-diagonal pattern.
    pub fn off_block_residual(&self, a: &CMatrix) -> f64 {
        let n = self.size();
        if a.shape() != (n, n) {
            return f64::INFINITY;
        }
        let inside = self.from_coefficients(&self.coefficients(a));
        op_norm(&(a - inside))
    }
}

/// `σ(a) = ⊕_i a_i ⊗ I_{m_i}` on `H = ⊕_i C^{k_i} ⊗ C^{m_i}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarRepresentation {
    algebra: Algebra,
    multiplicities: Vec<usize>,
}

impl StarRepresentation {
    /// Multiplicities may be zero (the block then acts on nothing).
    pub fn new(algebra: Algebra, multiplicities: Vec<usize>) -> Result<Self> {
        if multiplicities.len() != algebra.num_blocks() {
            return Err(Error::InvalidRepresentation(format!(
                "{} multiplicities for an algebra with {} blocks",
                multiplicities.len(),
                algebra.num_blocks()
            )));
        }
        Ok(Self {
            algebra,
            multiplicities,
        })
    }

    /// `d` copies of the identity representation of the complex numbers.
    pub fn scalar(d: usize) -> Self {
        Self {
            algebra: Algebra::scalar(),
            multiplicities: vec![d],
        }
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn dim(&self) -> usize {
        self.algebra
            .block_sizes()
            .iter()
            .zip(&self.multiplicities)
            .map(|(k, m)| k * m)
            .sum()
    }

    pub fn block_offset(&self, block: usize) -> usize {
        (0..block)
            .map(|i| self.algebra.block_sizes()[i] * self.multiplicities[i])
            .sum()
    }

    /// `σ(a)` for an algebra element given as a `K × K` matrix.
    pub fn apply(&self, a: &CMatrix) -> CMatrix {
        let coeffs = self.algebra.coefficients(a);
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        for (idx, c) in coeffs.iter().enumerate() {
            if *c != ZERO {
                self.add_basis(&mut out, idx, *c);
            }
        }
        out
    }

    /// `σ(e_b)` for the matrix unit with basis index `b`.
    pub fn apply_basis(&self, b: usize) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim(), self.dim());
        self.add_basis(&mut out, b, ONE);
        out
    }

    fn add_basis(&self, out: &mut CMatrix, b: usize, c: C64) {
        let (block, p, q) = self.algebra.basis_triple(b);
        let m = self.multiplicities[block];
        let off = self.block_offset(block);
        for s in 0..m {
            out[(off + p * m + s, off + q * m + s)] += c;
        }
    }
}

/// A C*-correspondence over a finite-dimensional algebra, given by a finite
/// spanning family `ξ_1..ξ_N`, its `A`-valued Gram matrix and the matrices
/// of the left and right actions of the matrix units on coefficient vectors.
///
/// A coefficient vector `x ∈ C^N` stands for `Σ x_b ξ_b`. The actions are
/// column conventions: `φ(e_c) ξ_b = Σ_d L_c[d, b] ξ_d` and
/// `ξ_b · e_c = Σ_d R_c[d, b] ξ_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Correspondence {
    algebra: Algebra,
    module_dim: usize,
    gram: Vec<Vec<CMatrix>>,
    left: Vec<CMatrix>,
    right: Vec<CMatrix>,
}

impl Correspondence {
    /// Builds and validates a correspondence from structure data.
    pub fn new(
        algebra: Algebra,
        module_dim: usize,
        gram: Vec<Vec<CMatrix>>,
        left: Vec<CMatrix>,
        right: Vec<CMatrix>,
        tol: &Tolerance,
    ) -> Result<Self> {
        let c = Self {
            algebra,
            module_dim,
            gram,
            left,
            right,
        };
        c.validate(tol)?;
        Ok(c)
    }

    /// `C^n` over the complex numbers with the standard inner product.
    pub fn scalar(n: usize) -> Self {
        let one = CMatrix::identity(1, 1);
        let gram = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        if a == b {
                            one.clone()
                        } else {
                            CMatrix::zeros(1, 1)
                        }
                    })
                    .collect()
            })
            .collect();
        let id = CMatrix::identity(n, n);
        Self {
            algebra: Algebra::scalar(),
            module_dim: n,
            gram,
            left: vec![id.clone()],
            right: vec![id],
        }
    }

    /// `A` as a correspondence over itself; this is `E^{⊗0}`.
    pub fn algebra_itself(algebra: &Algebra) -> Self {
        let n = algebra.dim();
        let units: Vec<CMatrix> = (0..n).map(|b| algebra.basis_element(b)).collect();
        let gram = (0..n)
            .map(|a| (0..n).map(|b| units[a].adjoint() * &units[b]).collect())
            .collect();
        let mut left = Vec::with_capacity(n);
        let mut right = Vec::with_capacity(n);
        for c in 0..n {
            let mut l = CMatrix::zeros(n, n);
            let mut r = CMatrix::zeros(n, n);
            for b in 0..n {
                if let Some(d) = algebra.product_index(c, b) {
                    l[(d, b)] = ONE;
                }
                if let Some(d) = algebra.product_index(b, c) {
                    r[(d, b)] = ONE;
                }
            }
            left.push(l);
            right.push(r);
        }
        Self {
            algebra: algebra.clone(),
            module_dim: n,
            gram,
            left,
            right,
        }
    }

    /// Graph correspondence over `C^vertices`: one basis vector per edge
    /// `(source, range)`, with `⟨ξ_e, ξ_f⟩ = δ_{ef} p_{source(e)}`,
    /// `p_v ξ_e = δ_{v, range(e)} ξ_e` and `ξ_e p_v = δ_{v, source(e)} ξ_e`.
    pub fn graph(vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let algebra = Algebra::diagonal(vertices)?;
        for &(s, r) in edges {
            if s >= vertices || r >= vertices {
                return Err(Error::InvalidCorrespondence(format!(
                    "edge ({s}, {r}) refers to a vertex outside 0..{vertices}"
                )));
            }
        }
        let n = edges.len();
        let gram = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        if a == b {
                            algebra.basis_element(edges[a].0)
                        } else {
                            CMatrix::zeros(vertices, vertices)
                        }
                    })
                    .collect()
            })
            .collect();
        let diag = |pick: &dyn Fn(usize) -> bool| {
            CMatrix::from_fn(n, n, |d, b| if d == b && pick(b) { ONE } else { ZERO })
        };
        let left = (0..vertices).map(|v| diag(&|e| edges[e].1 == v)).collect();
        let right = (0..vertices).map(|v| diag(&|e| edges[e].0 == v)).collect();
        Ok(Self {
            algebra,
            module_dim: n,
            gram,
            left,
            right,
        })
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn module_dim(&self) -> usize {
        self.module_dim
    }

    pub fn gram(&self) -> &[Vec<CMatrix>] {
        &self.gram
    }

    pub fn left_action(&self) -> &[CMatrix] {
        &self.left
    }

    pub fn right_action(&self) -> &[CMatrix] {
        &self.right
    }

    /// `φ(a)` on coefficient vectors for a general element `a`.
    pub fn left_matrix(&self, a: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.module_dim, self.module_dim);
        for (c, coeff) in self.algebra.coefficients(a).into_iter().enumerate() {
            if coeff != ZERO {
                out += &self.left[c] * coeff;
            }
        }
        out
    }

    /// `⟨x, y⟩` for coefficient vectors.
    pub fn inner(&self, x: &[C64], y: &[C64]) -> CMatrix {
        let k = self.algebra.size();
        let mut out = CMatrix::zeros(k, k);
        for (a, xa) in x.iter().enumerate() {
            if *xa == ZERO {
                continue;
            }
            for (b, yb) in y.iter().enumerate() {
                if *yb == ZERO {
                    continue;
                }
                out += &self.gram[a][b] * (xa.conj() * yb);
            }
        }
        out
    }

    /// Scalar Gram matrix of the correspondence through the identity
    /// representation of `A` on `C^K`: entry `((a, j), (b, l)) = G[a][b]_{jl}`.
    fn standard_scalar_gram(&self) -> CMatrix {
        let k = self.algebra.size();
        let n = self.module_dim;
        CMatrix::from_fn(n * k, n * k, |r, c| self.gram[r / k][c / k][(r % k, c % k)])
    }

    /// Checks shapes, Hermitian Gram, positivity, right compatibility, and
    /// that `φ` is a unital adjointable *-homomorphism commuting with the
    /// right action.
    pub fn validate(&self, tol: &Tolerance) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidCorrespondence(msg));
        let n = self.module_dim;
        let k = self.algebra.size();
        let dim_a = self.algebra.dim();
        if self.gram.len() != n || self.gram.iter().any(|row| row.len() != n) {
            return bad(format!("gram must be {n}x{n}"));
        }
        if self.left.len() != dim_a || self.right.len() != dim_a {
            return bad(format!(
                "actions must list {dim_a} matrices (one per basis element)"
            ));
        }
        if self
            .left
            .iter()
            .chain(&self.right)
            .any(|m| m.shape() != (n, n))
        {
            return bad(format!("action matrices must be {n}x{n}"));
        }
        for a in 0..n {
            for b in 0..n {
                let g = &self.gram[a][b];
                if g.shape() != (k, k) {
                    return bad(format!("gram entry ({a},{b}) must be {k}x{k}"));
                }
                crate::numerics::check_finite(g)?;
                let off = self.algebra.off_block_residual(g);
                if !tol.equal(off, op_norm(g)) {
                    return bad(format!("gram entry ({a},{b}) is not block diagonal"));
                }
                let herm = op_norm(&(g.adjoint() - &self.gram[b][a]));
                if !tol.equal(herm, op_norm(g)) {
                    return bad(format!("gram is not Hermitian at ({a},{b})"));
                }
            }
        }
        let scalar = self.standard_scalar_gram();
        let scale = op_norm(&scalar).max(1.0);
        if n > 0 {
            let min_eig = crate::numerics::hermitian_eigenvalues(&scalar)
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            if min_eig < -10.0 * tol.eq_rel * scale {
                return bad(format!("gram is not positive (eigenvalue {min_eig:.3e})"));
            }
        }

        let units: Vec<CMatrix> = (0..dim_a).map(|b| self.algebra.basis_element(b)).collect();
        let id_n = CMatrix::identity(n, n);
        let sum = |ms: &[CMatrix]| {
            ms.iter()
                .enumerate()
                .fold(CMatrix::zeros(n, n), |acc, (b, m)| {
                    let (_, p, q) = self.algebra.basis_triple(b);
                    if p == q {
                        acc + m
                    } else {
                        acc
                    }
                })
        };
        if !tol.equal(op_norm(&(sum(&self.left) - &id_n)), 1.0) {
            return bad("left action is not unital".into());
        }
        if !tol.equal(op_norm(&(sum(&self.right) - &id_n)), 1.0) {
            return bad("right action is not unital".into());
        }
        for c in 0..dim_a {
            // ⟨ξ_a, ξ_b · e_c⟩ = ⟨ξ_a, ξ_b⟩ e_c
            for a in 0..n {
                for b in 0..n {
                    let mut lhs = CMatrix::zeros(k, k);
                    for d in 0..n {
                        let coeff = self.right[c][(d, b)];
                        if coeff != ZERO {
                            lhs += &self.gram[a][d] * coeff;
                        }
                    }
                    let rhs = &self.gram[a][b] * &units[c];
                    if !tol.equal(op_norm(&(lhs - &rhs)), scale) {
                        return bad(format!("right action incompatible with gram at e_{c}"));
                    }
                }
            }
            // ⟨φ(e_c) ξ_x, ξ_y⟩ = ⟨ξ_x, φ(e_c^*) ξ_y⟩
            let cstar = self.algebra.adjoint_index(c);
            for x in 0..n {
                for y in 0..n {
                    let mut lhs = CMatrix::zeros(k, k);
                    let mut rhs = CMatrix::zeros(k, k);
                    for d in 0..n {
                        let l = self.left[c][(d, x)];
                        if l != ZERO {
                            lhs += &self.gram[d][y] * l.conj();
                        }
                        let r = self.left[cstar][(d, y)];
                        if r != ZERO {
                            rhs += &self.gram[x][d] * r;
                        }
                    }
                    if !tol.equal(op_norm(&(lhs - rhs)), scale) {
                        return bad(format!("left action of e_{c} is not adjointable"));
                    }
                }
            }
            for d in 0..dim_a {
                let prod = &self.left[c] * &self.left[d];
                let expect = match self.algebra.product_index(c, d) {
                    Some(e) => self.left[e].clone(),
                    None => CMatrix::zeros(n, n),
                };
                if !tol.equal(op_norm(&(prod - expect)), 1.0) {
                    return bad(format!(
                        "left action is not multiplicative at (e_{c}, e_{d})"
                    ));
                }
                let comm = &self.left[c] * &self.right[d] - &self.right[d] * &self.left[c];
                if !tol.equal(op_norm(&comm), 1.0) {
                    return bad(format!(
                        "left and right actions do not commute at (e_{c}, e_{d})"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Whether the inner products span `A`.
    pub fn is_full(&self, tol: &Tolerance) -> bool {
        let n = self.module_dim;
        let dim_a = self.algebra.dim();
        if n == 0 {
            return false;
        }
        let rows = CMatrix::from_fn(n * n, dim_a, |r, c| {
            self.algebra.coefficients(&self.gram[r / n][r % n])[c]
        });
        crate::numerics::rank(&rows, tol)
            .map(|r| r == dim_a)
            .unwrap_or(false)
    }

    /// Interior tensor product `E ⊗_A F` on the formal basis `ξ_a ⊗ η_b`
    /// (index `a * N_F + b`).
    pub fn tensor(e: &Correspondence, f: &Correspondence) -> Result<Correspondence> {
        if e.algebra != f.algebra {
            return Err(Error::InvalidCorrespondence(
                "tensor factors over different algebras".into(),
            ));
        }
        let algebra = e.algebra.clone();
        let k = algebra.size();
        let (ne, nf) = (e.module_dim, f.module_dim);
        let n = ne * nf;
        // ⟨η_b, φ_F(e_c) η_b'⟩ for every c
        let twisted: Vec<Vec<Vec<CMatrix>>> = (0..algebra.dim())
            .map(|c| {
                (0..nf)
                    .map(|b| {
                        (0..nf)
                            .map(|bp| {
                                let mut acc = CMatrix::zeros(k, k);
                                for d in 0..nf {
                                    let l = f.left[c][(d, bp)];
                                    if l != ZERO {
                                        acc += &f.gram[b][d] * l;
                                    }
                                }
                                acc
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut gram = vec![vec![CMatrix::zeros(k, k); n]; n];
        for a in 0..ne {
            for ap in 0..ne {
                let coeffs = algebra.coefficients(&e.gram[a][ap]);
                for b in 0..nf {
                    for bp in 0..nf {
                        let mut acc = CMatrix::zeros(k, k);
                        for (c, coeff) in coeffs.iter().enumerate() {
                            if *coeff != ZERO {
                                acc += &twisted[c][b][bp] * *coeff;
                            }
                        }
                        gram[a * nf + b][ap * nf + bp] = acc;
                    }
                }
            }
        }
        let left = e
            .left
            .iter()
            .map(|l| l.kronecker(&CMatrix::identity(nf, nf)))
            .collect();
        let right = f.right.iter().map(|r| kron_identity(ne, r)).collect();
        Ok(Correspondence {
            algebra,
            module_dim: n,
            gram,
            left,
            right,
        })
    }

    /// `E^{⊗m}`; `m = 0` gives `A` itself.
    pub fn tensor_power(e: &Correspondence, m: usize) -> Result<Correspondence> {
        match m {
            0 => Ok(Correspondence::algebra_itself(&e.algebra)),
            1 => Ok(e.clone()),
            _ => Correspondence::tensor(e, &Correspondence::tensor_power(e, m - 1)?),
        }
    }
}

/// Coordinates of an interior tensor space relative to its formal space.
#[derive(Clone, Debug)]
enum Coords {
    /// The formal Gram is the identity.
    Identity,
    /// The formal Gram is diagonal; `kept[i]` is the formal index of
    /// coordinate `i` and `scale[i]` the square root of its Gram entry.
    Diagonal { kept: Vec<usize>, scale: Vec<f64> },
    /// `embed = Λ^{1/2} U^*`, `lift = U Λ^{-1/2}` from the eigenvectors of the
    /// formal Gram with nonzero eigenvalues.
    General { embed: CMatrix, lift: CMatrix },
}

/// A Hilbert space with a left `A`-action: either the base space `H` of a
/// representation `σ` or an interior tensor product `E ⊗_σ H`.
///
/// `embed` maps formal coordinates (`ξ_a ⊗ e_j` at index `a * dim H + j`)
/// onto orthonormal coordinates, so that `embed^* embed` is the formal Gram;
/// `lift` is a right inverse of `embed`.
#[derive(Clone, Debug)]
pub struct TensorSpace {
    corr: Option<Arc<Correspondence>>,
    sigma: StarRepresentation,
    formal_dim: usize,
    dim: usize,
    coords: Coords,
}

impl TensorSpace {
    /// `H` itself.
    pub fn base(sigma: &StarRepresentation) -> Self {
        let d = sigma.dim();
        Self {
            corr: None,
            sigma: sigma.clone(),
            formal_dim: d,
            dim: d,
            coords: Coords::Identity,
        }
    }

    /// `E ⊗_σ H`.
    pub fn interior(
        corr: Arc<Correspondence>,
        sigma: &StarRepresentation,
        tol: &Tolerance,
        cap: usize,
    ) -> Result<Self> {
        if corr.algebra() != sigma.algebra() {
            return Err(Error::InvalidCorrespondence(
                "correspondence and representation use different algebras".into(),
            ));
        }
        let n = corr.module_dim();
        let h = sigma.dim();
        let formal_dim = n * h;
        if formal_dim > cap {
            return Err(Error::Resource {
                dim: formal_dim,
                cap,
            });
        }
        let coords = Self::coordinates(&corr, sigma, tol)?;
        let dim = match &coords {
            Coords::Identity => formal_dim,
            Coords::Diagonal { kept, .. } => kept.len(),
            Coords::General { embed, .. } => embed.nrows(),
        };
        Ok(Self {
            corr: Some(corr),
            sigma: sigma.clone(),
            formal_dim,
            dim,
            coords,
        })
    }

    fn coordinates(
        corr: &Correspondence,
        sigma: &StarRepresentation,
        tol: &Tolerance,
    ) -> Result<Coords> {
        let n = corr.module_dim();
        let h = sigma.dim();
        let formal = n * h;
        if formal == 0 {
            return Ok(Coords::Diagonal {
                kept: Vec::new(),
                scale: Vec::new(),
            });
        }
        let gram = corr.gram();
        let diagonal = (0..n).all(|a| {
            (0..n).all(|b| {
                let g = &gram[a][b];
                if a != b {
                    g.iter().all(|z| *z == ZERO)
                } else {
                    g.iter().enumerate().all(|(idx, z)| {
                        let k = g.nrows();
                        idx % k == idx / k || *z == ZERO
                    })
                }
            })
        });
        if diagonal {
            let mut values = Vec::with_capacity(formal);
            for a in 0..n {
                let s = sigma.apply(&gram[a][a]);
                for j in 0..h {
                    values.push(s[(j, j)].re);
                }
            }
            let vmax = values.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()));
            let floor = -10.0 * tol.eq_rel * vmax.max(1.0);
            if let Some(bad) = values.iter().find(|&&v| v < floor) {
                return Err(Error::InvalidCorrespondence(format!(
                    "interior tensor Gram is not positive (entry {bad:.3e})"
                )));
            }
            if values.iter().all(|&v| v == 1.0) {
                return Ok(Coords::Identity);
            }
            let cutoff = tol.rank_cutoff(vmax, formal, formal);
            let mut kept = Vec::new();
            let mut scale = Vec::new();
            for (i, &v) in values.iter().enumerate() {
                if v > cutoff {
                    kept.push(i);
                    scale.push(v.sqrt());
                }
            }
            return Ok(Coords::Diagonal { kept, scale });
        }

        let mut big = CMatrix::zeros(formal, formal);
        for a in 0..n {
            for b in 0..n {
                let s = sigma.apply(&gram[a][b]);
                big.view_mut((a * h, b * h), (h, h)).copy_from(&s);
            }
        }
        let (eigenvalues, eigenvectors) = crate::numerics::hermitian_eigen(&big)?;
        let lmax = eigenvalues.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()));
        let lmin = eigenvalues.iter().fold(f64::INFINITY, |acc, &x| acc.min(x));
        if lmin < -10.0 * tol.eq_rel * lmax.max(1.0) {
            return Err(Error::InvalidCorrespondence(format!(
                "interior tensor Gram is not positive (eigenvalue {lmin:.3e})"
            )));
        }
        let cutoff = tol.rank_cutoff(lmax, formal, formal);
        let mut order: Vec<usize> = (0..formal).filter(|&i| eigenvalues[i] > cutoff).collect();
        order.sort_by(|&x, &y| eigenvalues[y].total_cmp(&eigenvalues[x]).then(x.cmp(&y)));
        let d = order.len();
        let mut embed = CMatrix::zeros(d, formal);
        let mut lift = CMatrix::zeros(formal, d);
        for (row, &i) in order.iter().enumerate() {
            let mut u = eigenvectors.column(i).into_owned();
            // fix the phase: largest-modulus entry real positive
            let (mut best, mut arg) = (0.0, 0);
            for (j, z) in u.iter().enumerate() {
                if z.norm() > best + 1e-12 {
                    best = z.norm();
                    arg = j;
                }
            }
            if best > 0.0 {
                let phase = u[arg] / u[arg].norm();
                u /= phase;
            }
            let l = eigenvalues[i];
            let s = l.sqrt();
            for j in 0..formal {
                embed[(row, j)] = u[j].conj() * s;
                lift[(j, row)] = u[j] / s;
            }
        }
        Ok(Coords::General { embed, lift })
    }

    pub fn correspondence(&self) -> Option<&Arc<Correspondence>> {
        self.corr.as_ref()
    }

    pub fn sigma(&self) -> &StarRepresentation {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn formal_dim(&self) -> usize {
        self.formal_dim
    }

    /// Module dimension of the correspondence factor (1 for `H` itself in
    /// the sense that `H` has one formal copy).
    pub fn module_dim(&self) -> usize {
        self.corr.as_ref().map_or(1, |c| c.module_dim())
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.coords, Coords::Identity)
    }

    pub fn embed_matrix(&self) -> CMatrix {
        self.embed_mul(&CMatrix::identity(self.formal_dim, self.formal_dim))
    }

    pub fn lift_matrix(&self) -> CMatrix {
        self.mul_lift(&CMatrix::identity(self.formal_dim, self.formal_dim))
    }

    /// `embed · m`.
    pub fn embed_mul(&self, m: &CMatrix) -> CMatrix {
        match &self.coords {
            Coords::Identity => m.clone(),
            Coords::Diagonal { kept, scale } => {
                CMatrix::from_fn(kept.len(), m.ncols(), |r, c| m[(kept[r], c)] * scale[r])
            }
            Coords::General { embed, .. } => mul(embed, m),
        }
    }

    /// `m · lift`.
    pub fn mul_lift(&self, m: &CMatrix) -> CMatrix {
        match &self.coords {
            Coords::Identity => m.clone(),
            Coords::Diagonal { kept, scale } => {
                CMatrix::from_fn(m.nrows(), kept.len(), |r, c| m[(r, kept[c])] / scale[c])
            }
            Coords::General { lift, .. } => mul(m, lift),
        }
    }

    /// `lift · m`.
    pub fn lift_mul(&self, m: &CMatrix) -> CMatrix {
        match &self.coords {
            Coords::Identity => m.clone(),
            Coords::Diagonal { kept, scale } => {
                let mut out = CMatrix::zeros(self.formal_dim, m.ncols());
                for (r, &i) in kept.iter().enumerate() {
                    for c in 0..m.ncols() {
                        out[(i, c)] = m[(r, c)] / scale[r];
                    }
                }
                out
            }
            Coords::General { lift, .. } => mul(lift, m),
        }
    }

    /// `m · embed`.
    pub fn mul_embed(&self, m: &CMatrix) -> CMatrix {
        match &self.coords {
            Coords::Identity => m.clone(),
            Coords::Diagonal { kept, scale } => {
                let mut out = CMatrix::zeros(m.nrows(), self.formal_dim);
                for (c, &i) in kept.iter().enumerate() {
                    for r in 0..m.nrows() {
                        out[(r, i)] = m[(r, c)] * scale[c];
                    }
                }
                out
            }
            Coords::General { embed, .. } => mul(m, embed),
        }
    }

    /// Left action of the matrix unit `e_b`.
    pub fn action(&self, b: usize) -> CMatrix {
        match &self.corr {
            None => self.sigma.apply_basis(b),
            Some(corr) => {
                let formal = corr.left_action()[b]
                    .kronecker(&CMatrix::identity(self.sigma.dim(), self.sigma.dim()));
                self.mul_lift(&self.embed_mul(&formal))
            }
        }
    }

    /// Left action of a general algebra element.
    pub fn action_of(&self, a: &CMatrix) -> CMatrix {
        let alg = self.sigma.algebra();
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (b, c) in alg.coefficients(a).into_iter().enumerate() {
            if c != ZERO {
                out += self.action(b) * c;
            }
        }
        out
    }

    /// Orthonormal coordinates of the simple tensor `x ⊗ h`.
    pub fn simple_tensor(&self, x: &[C64], h: &[C64]) -> CMatrix {
        let hd = self.sigma.dim();
        let formal = CMatrix::from_fn(self.formal_dim, 1, |r, _| {
            if self.corr.is_none() {
                h[r]
            } else {
                x[r / hd] * h[r % hd]
            }
        });
        self.embed_mul(&formal)
    }
}

/// Largest `||X π_dom(e_b) - π_cod(e_b) X||` over the algebra basis.
pub fn covariance_residual(x: &CMatrix, dom: &TensorSpace, cod: &TensorSpace) -> f64 {
    let dim_a = dom.sigma().algebra().dim();
    let mut worst: f64 = 0.0;
    for b in 0..dim_a {
        let r = op_norm(&(mul(x, &dom.action(b)) - mul(&cod.action(b), x)));
        worst = worst.max(r);
    }
    worst
}

/// `I_F ⊗ X`, from `big_dom = F ⊗ dom` to `big_cod = F ⊗ cod`, where `n_f` is
/// the module dimension of `F` and the big spaces were built from the flattened
/// correspondences `F ⊗ E_dom`, `F ⊗ E_cod` (or `F` when the small space is `H`).
///
/// `X` must intertwine the left actions, otherwise the amplification is not
/// well defined.
pub fn amplify(
    n_f: usize,
    x: &CMatrix,
    dom: &TensorSpace,
    cod: &TensorSpace,
    big_dom: &TensorSpace,
    big_cod: &TensorSpace,
    tol: &Tolerance,
) -> Result<CMatrix> {
    if x.shape() != (cod.dim(), dom.dim()) {
        return Err(Error::Dimension(format!(
            "operator is {}x{}, spaces have dimensions {} -> {}",
            x.nrows(),
            x.ncols(),
            dom.dim(),
            cod.dim()
        )));
    }
    if big_dom.formal_dim() != n_f * dom.formal_dim()
        || big_cod.formal_dim() != n_f * cod.formal_dim()
    {
        return Err(Error::Dimension(
            "amplification spaces do not match the factor sizes".into(),
        ));
    }
    let residual = covariance_residual(x, dom, cod);
    if !tol.equal(residual, op_norm(x)) {
        return Err(Error::Intertwiner { residual });
    }
    Ok(amplify_unchecked(n_f, x, dom, cod, big_dom, big_cod))
}

pub(crate) fn amplify_unchecked(
    n_f: usize,
    x: &CMatrix,
    dom: &TensorSpace,
    cod: &TensorSpace,
    big_dom: &TensorSpace,
    big_cod: &TensorSpace,
) -> CMatrix {
    if dom.is_identity() && cod.is_identity() && big_dom.is_identity() && big_cod.is_identity() {
        return kron_identity(n_f, x);
    }
    let formal = cod.lift_mul(&dom.mul_embed(x));
    big_cod.embed_mul(&big_dom.mul_lift(&kron_identity(n_f, &formal)))
}
