//! The operator `S = L + m²W` and the Sobolev geometry it induces.
//!
//! Test vectors are discrete distributions: `f` pairs with a function `u`
//! as `fᵀu`, and `(f, g)₋₁ = fᵀS⁻¹g` is the covariance of the free field.
//! A function `u` becomes the distribution `W∘u`
//! ([`TestVector::from_function`]).

use std::ops::Deref;
use std::sync::{Arc, OnceLock};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::ops::serial::spsolve_csc_lower_triangular;
use nalgebra_sparse::ops::Op;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, RegionPartition, VertexSet};

/// Blocks up to this size are factored densely.
pub const DENSE_LIMIT: usize = 500;

/// Relative tolerance on `1ᵀf` for the massless pairing.
pub const MEAN_ZERO_TOL: f64 = 1e-10;

/// Identifies the covariance a Wick polynomial is ordered against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContextId(pub u64);

impl std::fmt::Display for ContextId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// A discrete distribution on the vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TestVector(Vec<f64>);

impl TestVector {
    pub fn new(values: Vec<f64>) -> Self {
        TestVector(values)
    }

    pub fn zeros(n: usize) -> Self {
        TestVector(vec![0.0; n])
    }

    pub fn delta(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        TestVector(v)
    }

    /// Distribution `W∘u` of a function `u` sampled at the vertices.
    pub fn from_function(mesh: &Mesh, u: &[f64]) -> Self {
        TestVector(u.iter().zip(mesh.mass()).map(|(a, w)| a * w).collect())
    }

    /// Nonnegative bump: `1` at `center`, decreasing linearly with graph
    /// distance up to `radius`, as a distribution.
    pub fn bump(mesh: &Mesh, center: usize, radius: usize) -> Self {
        let mut u = vec![0.0; mesh.vertex_count()];
        for r in 0..=radius {
            for v in mesh.ball(center, r) {
                if u[v] == 0.0 {
                    u[v] = 1.0 - r as f64 / (radius as f64 + 1.0);
                }
            }
        }
        TestVector::from_function(mesh, &u)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn support(&self) -> VertexSet {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// First vertex of the support outside `region`, if any.
    pub fn escapes(&self, region: &VertexSet) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .find(|(i, &x)| x != 0.0 && !region.contains(i))
            .map(|(i, _)| i)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    /// `1ᵀf`, the discrete integral.
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Subtracts the multiple of `W` that makes `1ᵀf = 0`.
    pub fn mean_zero(&self, mesh: &Mesh) -> Self {
        let shift = self.total() / mesh.total_mass();
        TestVector(
            self.0
                .iter()
                .zip(mesh.mass())
                .map(|(x, w)| x - shift * w)
                .collect(),
        )
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        TestVector(self.0.iter().map(|x| c * x).collect())
    }

    pub fn add(&self, other: &TestVector) -> Self {
        TestVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &TestVector) -> Self {
        TestVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl Deref for TestVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for TestVector {
    fn from(v: Vec<f64>) -> Self {
        TestVector(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SobolevOrder {
    /// `(u, v)₋₁ = uᵀS⁻¹v`
    Minus,
    /// `(u, v)₊₁ = uᵀSv`
    Plus,
}

/// A Cholesky factor of an SPD block.
pub(crate) enum Factor {
    Dense(Cholesky<f64, Dyn>),
    Sparse(CscCholesky<f64>),
}

impl Factor {
    fn dense(m: DMatrix<f64>) -> Result<Self> {
        Cholesky::new(m)
            .map(Factor::Dense)
            .ok_or_else(|| Error::Factorization("matrix is not positive definite".into()))
    }

    fn sparse(m: &CscMatrix<f64>) -> Result<Self> {
        CscCholesky::factor(m)
            .map(Factor::Sparse)
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    }

    pub(crate) fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        match self {
            Factor::Dense(c) => c.solve(b),
            Factor::Sparse(c) => {
                let x = c.solve(b);
                x.column(0).into_owned()
            }
        }
    }

    /// `x` with `Lᵀx = z`, where `L` is the lower factor; maps standard
    /// normals to samples with covariance equal to the inverse matrix.
    pub(crate) fn whiten_inverse(&self, z: &DVector<f64>) -> DVector<f64> {
        match self {
            Factor::Dense(c) => c
                .l_dirty()
                .tr_solve_lower_triangular(z)
                .expect("Cholesky factor has a nonzero diagonal"),
            Factor::Sparse(c) => {
                let mut x = z.clone();
                spsolve_csc_lower_triangular(Op::Transpose(c.l()), &mut x)
                    .expect("Cholesky factor has a nonzero diagonal");
                x
            }
        }
    }

    /// Lower factor as a dense matrix.
    pub(crate) fn lower(&self) -> DMatrix<f64> {
        match self {
            Factor::Dense(c) => c.l(),
            Factor::Sparse(c) => DMatrix::from(c.l()),
        }
    }
}

/// Mass `m` together with `S = L + m²W` and its factorization.
pub struct FieldOperator {
    mesh: Arc<Mesh>,
    mass: f64,
    factor: Factor,
    context: ContextId,
    zero_mode: f64,
    covariance: OnceLock<DMatrix<f64>>,
}

impl std::fmt::Debug for FieldOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldOperator")
            .field("vertices", &self.mesh.vertex_count())
            .field("mass", &self.mass)
            .field("context", &self.context)
            .finish()
    }
}

impl FieldOperator {
    /// Assembles and factors `S`. For `m = 0` the constant mode is deflated,
    /// which requires a connected mesh.
    pub fn assemble(mesh: Arc<Mesh>, mass: f64) -> Result<Self> {
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::InvalidParameter(format!("mass must be >= 0, got {mass}")));
        }
        let n = mesh.vertex_count();
        let factor = if mass == 0.0 {
            if !mesh.is_connected() {
                return Err(Error::Disconnected);
            }
            // L + α11ᵀ agrees with L on the mean-zero subspace and is SPD.
            let alpha = mesh.diagonal().iter().fold(1.0f64, |a, &d| a.max(d)) / n as f64;
            let k = mesh.stiffness_dense().add_scalar(alpha);
            Factor::dense(k)?
        } else if n <= DENSE_LIMIT {
            Factor::dense(dense_block(&mesh, mass, &(0..n).collect::<Vec<_>>()))?
        } else {
            Factor::sparse(&sparse_block(&mesh, mass, &(0..n).collect::<Vec<_>>()))?
        };
        let mut h = Sha256::new();
        h.update(mesh.fingerprint().as_bytes());
        h.update(mass.to_bits().to_le_bytes());
        let digest = h.finalize();
        let context = ContextId(u64::from_le_bytes(digest[..8].try_into().unwrap()));
        let zero_mode = 1.0 / mesh.total_mass().sqrt();
        Ok(FieldOperator {
            mesh,
            mass,
            factor,
            context,
            zero_mode,
            covariance: OnceLock::new(),
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn dim(&self) -> usize {
        self.mesh.vertex_count()
    }

    pub fn context(&self) -> ContextId {
        self.context
    }

    /// `ψ₀ = 1/√(ΣW)`, the value of the normalized constant eigenfunction.
    pub fn zero_mode(&self) -> f64 {
        self.zero_mode
    }

    /// `⟨f, ψ₀⟩` for a distribution `f`.
    pub fn zero_mode_coefficient(&self, f: &[f64]) -> f64 {
        self.zero_mode * f.iter().sum::<f64>()
    }

    pub fn require_massive(&self) -> Result<()> {
        if self.mass > 0.0 {
            Ok(())
        } else {
            Err(Error::MassRequired(self.mass))
        }
    }

    pub(crate) fn factor(&self) -> &Factor {
        &self.factor
    }

    /// `S·u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let m2 = self.mass * self.mass;
        let mut out = self.mesh.apply_stiffness(u);
        for (o, (x, w)) in out.iter_mut().zip(u.iter().zip(self.mesh.mass())) {
            *o += m2 * w * x;
        }
        out
    }

    pub fn check_dim(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: f.len(),
            });
        }
        Ok(())
    }

    /// For `m = 0` pairings: errors unless `|1ᵀf| ≤ MEAN_ZERO_TOL·‖f‖₁`.
    pub fn check_mean_zero(&self, f: &[f64]) -> Result<()> {
        let total: f64 = f.iter().sum();
        let scale: f64 = f.iter().map(|x| x.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
        if total.abs() > MEAN_ZERO_TOL * scale {
            return Err(Error::NotMeanZero(total));
        }
        Ok(())
    }

    /// `S⁻¹f`; for `m = 0`, the mean-zero solution of `Lu = f` for mean-zero `f`.
    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(f)?;
        if self.mass == 0.0 {
            self.check_mean_zero(f)?;
        }
        let x = self.factor.solve(&DVector::from_column_slice(f));
        Ok(x.as_slice().to_vec())
    }

    /// `(u, v)₋₁` or `(u, v)₊₁`.
    pub fn inner(&self, order: SobolevOrder, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        match order {
            SobolevOrder::Plus => Ok(dot(u, &self.apply(v))),
            SobolevOrder::Minus => {
                if self.mass == 0.0 {
                    self.check_mean_zero(u)?;
                }
                Ok(dot(u, &self.solve(v)?))
            }
        }
    }

    /// `(u, v)₋₁`, the free-field covariance of `φ(u)` and `φ(v)`.
    pub fn pairing(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.inner(SobolevOrder::Minus, u, v)
    }

    /// Dense `S⁻¹` (massive) or `L⁺` (massless), computed once.
    pub fn covariance(&self) -> &DMatrix<f64> {
        self.covariance.get_or_init(|| {
            let n = self.dim();
            let mut inv = match &self.factor {
                Factor::Dense(c) => c.inverse(),
                Factor::Sparse(c) => c.solve(&DMatrix::<f64>::identity(n, n)),
            };
            if self.mass == 0.0 {
                // Project the deflated inverse onto the mean-zero subspace.
                let p = DMatrix::<f64>::identity(n, n).add_scalar(-1.0 / n as f64);
                inv = &p * inv * &p;
            }
            inv
        })
    }

    /// Lower Cholesky factor `R` of `S = RRᵀ` (massive only).
    pub fn cholesky_lower(&self) -> Result<DMatrix<f64>> {
        self.require_massive()?;
        Ok(self.factor.lower())
    }

    /// Factor of the principal block `S_BB` for the vertices in `block`.
    pub(crate) fn block_factor(&self, block: &[usize]) -> Result<Factor> {
        self.require_massive()?;
        if block.len() <= DENSE_LIMIT {
            Factor::dense(dense_block(&self.mesh, self.mass, block))
        } else {
            Factor::sparse(&sparse_block(&self.mesh, self.mass, block))
        }
    }

    /// The `(·,·)₋₁`-orthogonal projection onto vectors supported in `region`.
    pub fn projector(&self, region: &VertexSet) -> Result<Projector> {
        self.projector_with(region, ProjectionMethod::Auto)
    }

    pub fn projector_with(&self, region: &VertexSet, method: ProjectionMethod) -> Result<Projector> {
        self.require_massive()?;
        let n = self.dim();
        if let Some(&v) = region.iter().find(|&&v| v >= n) {
            return Err(Error::InvalidParameter(format!("vertex {v} out of range")));
        }
        let inside: Vec<usize> = region.iter().copied().collect();
        let kind = if inside.is_empty() {
            ProjectorKind::Zero
        } else if inside.len() == n {
            ProjectorKind::Identity
        } else {
            let method = match method {
                ProjectionMethod::Auto if n <= DENSE_LIMIT => ProjectionMethod::Covariance,
                ProjectionMethod::Auto => ProjectionMethod::Schur,
                m => m,
            };
            match method {
                ProjectionMethod::Covariance => {
                    let cov = self.covariance();
                    let block = DMatrix::from_fn(inside.len(), inside.len(), |a, b| {
                        cov[(inside[a], inside[b])]
                    });
                    let rows = DMatrix::from_fn(inside.len(), n, |a, j| cov[(inside[a], j)]);
                    ProjectorKind::Covariance {
                        rows,
                        block: Factor::dense(block)?,
                    }
                }
                _ => {
                    let outside: Vec<usize> = (0..n).filter(|v| !region.contains(v)).collect();
                    let mut coupling = Vec::new();
                    let mut pos = vec![usize::MAX; n];
                    for (k, &v) in outside.iter().enumerate() {
                        pos[v] = k;
                    }
                    for (a, &i) in inside.iter().enumerate() {
                        for &(j, val) in self.mesh.neighbors(i) {
                            if pos[j] != usize::MAX {
                                coupling.push((a, pos[j], val));
                            }
                        }
                    }
                    ProjectorKind::Schur {
                        factor: self.block_factor(&outside)?,
                        outside,
                        coupling,
                    }
                }
            }
        };
        Ok(Projector {
            n,
            inside,
            kind,
        })
    }

    /// `‖E_{Ωᶜ}E_{Ω̄} − E_{∂Ω}‖` as an operator on `(·,·)₋₁`.
    pub fn premarkov_residual(&self, partition: &RegionPartition) -> Result<f64> {
        partition.validate(&self.mesh)?;
        let e_comp = self.projector(&partition.complement())?.matrix();
        let e_clos = self.projector(&partition.closure())?.matrix();
        let e_bdry = self.projector(&partition.boundary)?.matrix();
        let diff = &e_comp * &e_clos - &e_bdry;
        self.operator_norm_minus(&diff)
    }

    /// Operator norm of `x` on `(·,·)₋₁`: `‖R⁻¹xR‖₂` with `S = RRᵀ`.
    pub fn operator_norm_minus(&self, x: &DMatrix<f64>) -> Result<f64> {
        let r = self.cholesky_lower()?;
        let xr = x * &r;
        let y = r
            .solve_lower_triangular(&xr)
            .ok_or_else(|| Error::Factorization("singular factor".into()))?;
        Ok(y.singular_values().max())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dense_block(mesh: &Mesh, mass: f64, block: &[usize]) -> DMatrix<f64> {
    let mut pos = vec![usize::MAX; mesh.vertex_count()];
    for (k, &v) in block.iter().enumerate() {
        pos[v] = k;
    }
    let m2 = mass * mass;
    let mut s = DMatrix::zeros(block.len(), block.len());
    for (a, &i) in block.iter().enumerate() {
        s[(a, a)] = mesh.diagonal()[i] + m2 * mesh.mass()[i];
        for &(j, v) in mesh.neighbors(i) {
            if pos[j] != usize::MAX {
                s[(a, pos[j])] = v;
            }
        }
    }
    s
}

fn sparse_block(mesh: &Mesh, mass: f64, block: &[usize]) -> CscMatrix<f64> {
    let mut pos = vec![usize::MAX; mesh.vertex_count()];
    for (k, &v) in block.iter().enumerate() {
        pos[v] = k;
    }
    let m2 = mass * mass;
    let mut coo = CooMatrix::new(block.len(), block.len());
    for (a, &i) in block.iter().enumerate() {
        coo.push(a, a, mesh.diagonal()[i] + m2 * mesh.mass()[i]);
        for &(j, v) in mesh.neighbors(i) {
            if pos[j] != usize::MAX {
                coo.push(a, pos[j], v);
            }
        }
    }
    CscMatrix::from(&coo)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMethod {
    /// Covariance blocks up to [`DENSE_LIMIT`] vertices, Schur form above.
    #[default]
    Auto,
    /// `(e_A f)_A = (Σ_AA)⁻¹(Σf)_A` with `Σ = S⁻¹`.
    Covariance,
    /// `(e_A f)_A = f_A − S_{A,c}S_cc⁻¹f_c` with `c` the complement of `A`.
    Schur,
}

enum ProjectorKind {
    Zero,
    Identity,
    Covariance {
        rows: DMatrix<f64>,
        block: Factor,
    },
    Schur {
        outside: Vec<usize>,
        coupling: Vec<(usize, usize, f64)>,
        factor: Factor,
    },
}

/// Support projection `e_A` for a fixed region `A`, reusable across vectors.
pub struct Projector {
    n: usize,
    inside: Vec<usize>,
    kind: ProjectorKind,
}

impl Projector {
    pub fn region(&self) -> VertexSet {
        self.inside.iter().copied().collect()
    }

    /// `e_A f`, exactly zero off `A`.
    pub fn apply(&self, f: &[f64]) -> TestVector {
        let mut out = vec![0.0; self.n];
        match &self.kind {
            ProjectorKind::Zero => {}
            ProjectorKind::Identity => out.copy_from_slice(f),
            ProjectorKind::Covariance { rows, block } => {
                let rhs = rows * DVector::from_column_slice(f);
                let g = block.solve(&rhs);
                for (a, &i) in self.inside.iter().enumerate() {
                    out[i] = g[a];
                }
            }
            ProjectorKind::Schur {
                outside,
                coupling,
                factor,
            } => {
                let fc = DVector::from_iterator(outside.len(), outside.iter().map(|&v| f[v]));
                let y = if fc.iter().all(|&x| x == 0.0) {
                    fc
                } else {
                    factor.solve(&fc)
                };
                let mut g: Vec<f64> = self.inside.iter().map(|&i| f[i]).collect();
                for &(a, c, val) in coupling {
                    g[a] -= val * y[c];
                }
                for (a, &i) in self.inside.iter().enumerate() {
                    out[i] = g[a];
                }
            }
        }
        TestVector(out)
    }

    /// Matrix of `e_A` in the vertex basis.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            let col = self.apply(&TestVector::delta(self.n, j));
            m.set_column(j, &DVector::from_column_slice(&col));
        }
        m
    }
}

/// `f = f_ext + f_bdry + f_int` with `f_ext = S u_ext`, `f_int = S u_int`,
/// `u_ext` supported in the exterior, `u_int` in omega and `f_bdry` on the
/// boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleDecomposition {
    pub exterior: TestVector,
    pub boundary: TestVector,
    pub interior: TestVector,
    pub u_exterior: Vec<f64>,
    pub u_interior: Vec<f64>,
}

pub fn triple_decompose(
    fop: &FieldOperator,
    partition: &RegionPartition,
    f: &[f64],
) -> Result<TripleDecomposition> {
    fop.require_massive()?;
    fop.check_dim(f)?;
    partition.validate(fop.mesh())?;
    let n = fop.dim();
    let dirichlet = |region: &VertexSet| -> Result<Vec<f64>> {
        let mut u = vec![0.0; n];
        if region.is_empty() {
            return Ok(u);
        }
        let idx: Vec<usize> = region.iter().copied().collect();
        let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&v| f[v]));
        let x = fop.block_factor(&idx)?.solve(&rhs);
        for (k, &v) in idx.iter().enumerate() {
            u[v] = x[k];
        }
        Ok(u)
    };
    let u_int = dirichlet(&partition.omega)?;
    let u_ext = dirichlet(&partition.exterior)?;
    let s_int = fop.apply(&u_int);
    let s_ext = fop.apply(&u_ext);
    let mut interior = vec![0.0; n];
    let mut exterior = vec![0.0; n];
    let mut boundary = vec![0.0; n];
    // On omega and the exterior the Dirichlet equations hold by construction;
    // copying f there keeps the sum exact away from the boundary.
    for &v in &partition.omega {
        interior[v] = f[v];
    }
    for &v in &partition.exterior {
        exterior[v] = f[v];
    }
    for &v in &partition.boundary {
        interior[v] = s_int[v];
        exterior[v] = s_ext[v];
        boundary[v] = f[v] - s_int[v] - s_ext[v];
    }
    Ok(TripleDecomposition {
        exterior: TestVector(exterior),
        boundary: TestVector(boundary),
        interior: TestVector(interior),
        u_exterior: u_ext,
        u_interior: u_int,
    })
}

/// Generalized eigendecomposition `Lx = λWx` with `W`-orthonormal
/// eigenvectors, for evaluating `(u, v)₋₁` accurately at tiny masses.
pub struct Spectrum {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn new(mesh: &Mesh) -> Self {
        let w_isqrt: Vec<f64> = mesh.mass().iter().map(|w| 1.0 / w.sqrt()).collect();
        let mut a = mesh.stiffness_dense();
        let n = a.nrows();
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] *= w_isqrt[i] * w_isqrt[j];
            }
        }
        let eig = SymmetricEigen::new(a);
        let mut vectors = eig.eigenvectors;
        for i in 0..n {
            for k in 0..n {
                vectors[(i, k)] *= w_isqrt[i];
            }
        }
        Spectrum {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors,
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// `Σ_k (x_kᵀu)(x_kᵀv) / (λ_k + m²)`; the lowest eigenvalue is taken as
    /// exactly zero.
    pub fn inner_minus(&self, u: &[f64], v: &[f64], mass: f64) -> f64 {
        let lowest = (0..self.values.len())
            .min_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .unwrap_or(0);
        let uu = DVector::from_column_slice(u);
        let vv = DVector::from_column_slice(v);
        let cu = self.vectors.tr_mul(&uu);
        let cv = self.vectors.tr_mul(&vv);
        (0..self.values.len())
            .map(|k| {
                let lambda = if k == lowest { 0.0 } else { self.values[k] };
                cu[k] * cv[k] / (lambda + mass * mass)
            })
            .sum()
    }
}
