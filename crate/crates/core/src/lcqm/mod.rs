//! Linearly constrained quadratic matrix (LCQM) benchmark problems
//!
//! ```text
//! minimize  (α₁/2)‖𝓒(Z) − d‖² − (α₂/2)‖D𝓑(Z)‖²
//! subject to 𝓐(Z) = b,  Z ∈ P_n
//! ```
//!
//! where `[𝓐(Z)]ᵢ = ⟨Aᵢ, Z⟩_F` (likewise `𝓑`, `𝓒`), `D` is a positive diagonal
//! matrix and `P_n` is the spectraplex. Matrix points are handled in
//! [`svec`] coordinates so the solver sees plain vectors.
//!
//! # Random stream
//!
//! [`generate_instance`] draws from `ChaCha8Rng::seed_from_u64(seed)` in this
//! order, using `rand`'s standard `f64` sampling on `[0, 1)`:
//!
//! 1. the entries of `A₁..A_l`, `B₁..B_n`, `C₁..C_l`, each row-major; per
//!    entry one mask draw `u`, and if `u < density` one value draw;
//! 2. the `n` diagonal entries of `D` as `1 + 999·u`;
//! 3. the `l` entries of `d`;
//! 4. the right-hand side: `l` draws for [`RhsRule::Uniform`], or `n` draws
//!    of a dense vector `w` for [`RhsRule::Feasible`], which sets
//!    `b = 𝓐(wwᵀ/‖w‖²)`.
//!
//! [`random_start`] uses stream 1 of the same generator family.

pub mod opnorm;
pub mod projection;
pub mod svec;

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use opnorm::{frobenius_norm, operator_norm, NormEstimate};
pub use projection::{simplex_project, spectraplex_prox, Spectraplex};
pub use svec::{smat, svec, svec_dim, svec_order};

use crate::error::{Error, Result};
use crate::model::{Curvature, Point, ProblemSpec, SmoothFunction, SmoothOracle};
use crate::oracles::DenseConstraint;

/// Tolerance used when estimating `‖𝓐‖`.
pub const NORM_TOL: f64 = 1e-10;

/// How the constraint right-hand side is drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhsRule {
    /// `b = 𝓐(Z̄)` for a random rank-one `Z̄ ∈ P_n`, so the instance is
    /// feasible.
    #[default]
    Feasible,
    /// Entries i.i.d. `U[0,1]`; usually infeasible over `P_n`.
    Uniform,
}

impl std::str::FromStr for RhsRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "feasible" => Ok(RhsRule::Feasible),
            "uniform" => Ok(RhsRule::Uniform),
            other => Err(Error::Config(format!("unknown rhs rule `{other}`"))),
        }
    }
}

/// A square matrix stored as `(row, col, value)` triplets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    /// The row `svec(sym(M))` representing `Z ↦ ⟨M, Z⟩_F`.
    fn functional(&self) -> DVector<f64> {
        let n = self.n;
        let mut row = DVector::zeros(svec_dim(n));
        for &(i, j, v) in &self.entries {
            let (r, c) = if i <= j { (i, j) } else { (j, i) };
            row[packed_index(n, r, c)] += if r == c { v } else { v * std::f64::consts::FRAC_1_SQRT_2 };
        }
        row
    }
}

/// Position of `(r, c)`, `r ≤ c`, in the row-major packed upper triangle.
fn packed_index(n: usize, r: usize, c: usize) -> usize {
    r * n + r - r * (r + 1) / 2 + (c - r)
}

/// A fully specified LCQM instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LcqmInstance {
    pub l: usize,
    pub n: usize,
    pub seed: u64,
    pub density: f64,
    pub l_target: f64,
    pub m_target: f64,
    pub rhs_rule: RhsRule,
    pub a_mats: Vec<SparseMatrix>,
    pub b_mats: Vec<SparseMatrix>,
    pub c_mats: Vec<SparseMatrix>,
    pub d_diag: Vec<f64>,
    pub b: Vec<f64>,
    pub d: Vec<f64>,
    pub alpha1: f64,
    pub alpha2: f64,
}

/// The linear operators of an instance as rows in `svec` coordinates.
#[derive(Clone, Debug)]
pub struct Operators {
    /// `𝓐`, `l × n(n+1)/2`.
    pub a: DMatrix<f64>,
    /// `D𝓑`, `n × n(n+1)/2`.
    pub db: DMatrix<f64>,
    /// `𝓒`, `l × n(n+1)/2`.
    pub c: DMatrix<f64>,
}

fn stack(rows: &[SparseMatrix], scale: impl Fn(usize) -> f64, dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows.len(), dim);
    for (i, mat) in rows.iter().enumerate() {
        m.set_row(i, &(mat.functional() * scale(i)).transpose());
    }
    m
}

impl LcqmInstance {
    pub fn dim(&self) -> usize {
        svec_dim(self.n)
    }

    pub fn operators(&self) -> Operators {
        let dim = self.dim();
        Operators {
            a: stack(&self.a_mats, |_| 1.0, dim),
            db: stack(&self.b_mats, |j| self.d_diag[j], dim),
            c: stack(&self.c_mats, |_| 1.0, dim),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n;
        let ok = self.a_mats.len() == self.l
            && self.c_mats.len() == self.l
            && self.b_mats.len() == n
            && self.d_diag.len() == n
            && self.b.len() == self.l
            && self.d.len() == self.l
            && self
                .a_mats
                .iter()
                .chain(&self.b_mats)
                .chain(&self.c_mats)
                .all(|m| m.n == n && m.entries.iter().all(|&(i, j, _)| i < n && j < n));
        if !ok {
            return Err(Error::Config("LCQM instance dimensions are inconsistent".into()));
        }
        Ok(())
    }
}

fn sparse_draw(rng: &mut ChaCha8Rng, n: usize, density: f64) -> SparseMatrix {
    let mut entries = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if rng.random::<f64>() < density {
                entries.push((i, j, rng.random::<f64>()));
            }
        }
    }
    SparseMatrix { n, entries }
}

/// Draws an instance and calibrates `(α₁, α₂)` so that the Hessian has
/// extreme eigenvalues `L_target` and `−m_target`.
pub fn generate_instance(
    seed: u64,
    l: usize,
    n: usize,
    density: f64,
    l_target: f64,
    m_target: f64,
    rhs_rule: RhsRule,
) -> Result<LcqmInstance> {
    if l == 0 || n == 0 {
        return Err(Error::Parameter("LCQM dimensions must be positive".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::Parameter(format!("density must lie in (0, 1], got {density}")));
    }
    Curvature::new(m_target, l_target)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a_mats: Vec<_> = (0..l).map(|_| sparse_draw(&mut rng, n, density)).collect();
    let b_mats: Vec<_> = (0..n).map(|_| sparse_draw(&mut rng, n, density)).collect();
    let c_mats: Vec<_> = (0..l).map(|_| sparse_draw(&mut rng, n, density)).collect();
    let d_diag: Vec<f64> = (0..n).map(|_| 1.0 + 999.0 * rng.random::<f64>()).collect();
    let d: Vec<f64> = (0..l).map(|_| rng.random::<f64>()).collect();

    let mut inst = LcqmInstance {
        l,
        n,
        seed,
        density,
        l_target,
        m_target,
        rhs_rule,
        a_mats,
        b_mats,
        c_mats,
        d_diag,
        b: Vec::new(),
        d,
        alpha1: 1.0,
        alpha2: 1.0,
    };
    let ops = inst.operators();
    inst.b = match rhs_rule {
        RhsRule::Uniform => (0..l).map(|_| rng.random::<f64>()).collect(),
        RhsRule::Feasible => {
            let w = DVector::from_fn(n, |_, _| rng.random::<f64>());
            let z_bar = if w.norm() > 0.0 { &w * w.transpose() / w.norm_squared() } else { DMatrix::identity(n, n) / n as f64 };
            (&ops.a * svec(&z_bar)).iter().copied().collect()
        }
    };
    let (alpha1, alpha2) = calibrate(&ops, l_target, m_target)?;
    inst.alpha1 = alpha1;
    inst.alpha2 = alpha2;
    Ok(inst)
}

/// Extreme eigenvalues of `t·𝓒*𝓒 − (D𝓑)*(D𝓑)`.
///
/// With `[𝓒* | (D𝓑)*] = QR`, the operator equals `Q(tR₁R₁ᵀ − R₂R₂ᵀ)Qᵀ`, so
/// its spectrum is that of the small core matrix plus zeros when `Q` does
/// not span the whole space.
struct SpectrumCore {
    p1: DMatrix<f64>,
    p2: DMatrix<f64>,
    padded_with_zero: bool,
}

impl SpectrumCore {
    fn new(ops: &Operators) -> Self {
        let l = ops.c.nrows();
        let dim = ops.c.ncols();
        let mut g = DMatrix::zeros(dim, l + ops.db.nrows());
        g.columns_mut(0, l).copy_from(&ops.c.transpose());
        g.columns_mut(l, ops.db.nrows()).copy_from(&ops.db.transpose());
        let r = g.qr().r();
        let r1 = r.columns(0, l).into_owned();
        let r2 = r.columns(l, ops.db.nrows()).into_owned();
        Self {
            p1: &r1 * r1.transpose(),
            p2: &r2 * r2.transpose(),
            padded_with_zero: r.nrows() < dim,
        }
    }

    fn extremes(&self, t: f64) -> Result<(f64, f64)> {
        let core = &self.p1 * t - &self.p2;
        let core = (&core + core.transpose()) * 0.5;
        let eig = SymmetricEigen::try_new(core, f64::EPSILON, 10_000).ok_or(Error::Eigen)?;
        let (mut lo, mut hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
        if self.padded_with_zero {
            lo = lo.min(0.0);
            hi = hi.max(0.0);
        }
        Ok((lo, hi))
    }

    fn ratio(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.extremes(t)?;
        Ok(if lo >= 0.0 { f64::INFINITY } else { hi / -lo })
    }
}

/// Finds `(α₁, α₂)` with `λ_max(H) = L` and `λ_min(H) = −m` by bisection on
/// `t = α₁/α₂`; the eigenvalue ratio is nondecreasing in `t`.
fn calibrate(ops: &Operators, l_target: f64, m_target: f64) -> Result<(f64, f64)> {
    let cnorm = ops.c.norm();
    let bnorm = ops.db.norm();
    if cnorm == 0.0 || bnorm == 0.0 {
        return Err(Error::Calibration("C*C or B*D²B is numerically zero; regenerate".into()));
    }
    let core = SpectrumCore::new(ops);
    let target = l_target / m_target;

    let mut lo = (bnorm / cnorm).powi(2);
    let mut hi = lo;
    let mut tries = 0;
    while core.ratio(lo)? >= target {
        lo /= 10.0;
        tries += 1;
        if tries > 400 {
            return Err(Error::Calibration("cannot bracket the curvature ratio from below".into()));
        }
    }
    while core.ratio(hi)? <= target {
        hi *= 10.0;
        tries += 1;
        if tries > 400 {
            return Err(Error::Calibration("cannot bracket the curvature ratio from above".into()));
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if core.ratio(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    // Pick the bracket end whose ratio is closer to the target.
    let t = if (core.ratio(lo)? - target).abs() <= (core.ratio(hi)? - target).abs() { lo } else { hi };
    let (_, top) = core.extremes(t)?;
    if !(top > 0.0) {
        return Err(Error::Calibration("largest Hessian eigenvalue is not positive".into()));
    }
    let s = l_target / top;
    Ok((s * t, s))
}

/// `f(Z) = (α₁/2)‖𝓒(Z) − d‖² − (α₂/2)‖D𝓑(Z)‖²` in `svec` coordinates.
#[derive(Clone, Debug)]
pub struct LcqmObjective {
    c: DMatrix<f64>,
    db: DMatrix<f64>,
    d: DVector<f64>,
    alpha1: f64,
    alpha2: f64,
    curvature: Curvature,
}

impl LcqmObjective {
    pub fn new(instance: &LcqmInstance, ops: &Operators) -> Result<Self> {
        Ok(Self {
            c: ops.c.clone(),
            db: ops.db.clone(),
            d: DVector::from_vec(instance.d.clone()),
            alpha1: instance.alpha1,
            alpha2: instance.alpha2,
            curvature: Curvature::new(instance.m_target, instance.l_target)?,
        })
    }
}

impl SmoothFunction for LcqmObjective {
    fn value(&self, z: &Point) -> f64 {
        let rc = &self.c * z - &self.d;
        let rb = &self.db * z;
        0.5 * self.alpha1 * rc.norm_squared() - 0.5 * self.alpha2 * rb.norm_squared()
    }

    fn gradient(&self, z: &Point) -> Point {
        self.value_and_gradient(z).1
    }

    fn value_and_gradient(&self, z: &Point) -> (f64, Point) {
        let rc = &self.c * z - &self.d;
        let rb = &self.db * z;
        let value = 0.5 * self.alpha1 * rc.norm_squared() - 0.5 * self.alpha2 * rb.norm_squared();
        let grad = self.c.tr_mul(&(rc * self.alpha1)) - self.db.tr_mul(&(rb * self.alpha2));
        (value, grad)
    }
}

impl SmoothOracle for LcqmObjective {
    fn curvature(&self) -> Curvature {
        self.curvature
    }
}

/// Assembles `(f, δ_{P_n}, 𝓐, b)` with `‖𝓐‖` bounded by power iteration.
pub fn lcqm_problem(instance: &LcqmInstance) -> Result<ProblemSpec> {
    let ops = instance.operators();
    let f = LcqmObjective::new(instance, &ops)?;
    let rhs = DVector::from_vec(instance.b.clone());
    let probe = DenseConstraint::with_norm_bound(ops.a.clone(), rhs.clone(), 0.0)?;
    let norm = operator_norm(&probe, NORM_TOL, instance.seed);
    if !(norm.upper_bound > 0.0) {
        return Err(Error::Parameter("the constraint operator is zero".into()));
    }
    let constraint = DenseConstraint::with_norm_bound(ops.a, rhs, norm.upper_bound)?;
    ProblemSpec::new(Arc::new(f), Arc::new(Spectraplex::new(instance.n)), Arc::new(constraint))
}

/// `Z₀ = ννᵀ` with `ν = ν̃/‖ν̃‖`, `ν̃ ~ U[0,1]ⁿ` with 10% nonzero entries.
pub fn random_start(seed: u64, n: usize) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    loop {
        let nu = DVector::from_fn(n, |_, _| {
            if rng.random::<f64>() < 0.1 {
                rng.random::<f64>()
            } else {
                0.0
            }
        });
        let norm = nu.norm();
        if norm > 0.0 {
            let nu = nu / norm;
            return svec(&(&nu * nu.transpose()));
        }
    }
}
