//! Partition of a window at the points where `B±` fail to be invertible and
//! the block bidiagonal system coupling the per-subinterval initial vectors.
//!
//! With `𝓑 = diag(B₊(x_k))`, `𝓤 = diag(U_{k−1}(x_k))`, `𝓙 = diag(J)` and the
//! column strippers `E_⊥ = (𝟙, 0)`, `E_⊤ = (0, 𝟙)`:
//!
//! ```text
//! B = 𝓑*𝓤E_⊥ + 𝓑E_⊤          C = ½(𝓤E_⊥ + E_⊤)
//! ```
//!
//! `B_m` and `C_m` drop the first and last `n` columns.

use crate::coefficients::{Problem, Tolerances};
use crate::error::{Error, Result};
use crate::l2::L2Function;
use crate::linalg::{self, CMat, CVec};
use crate::propagation::{self, FundamentalMatrix, PiecewiseSolution};
use serde::Serialize;

pub use crate::linalg::nullspace;

/// Classification of one `q`-atom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomStatus {
    pub x: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub singular: bool,
    /// Regular, but with `σ_min/σ_max` below the borderline threshold.
    pub borderline: bool,
}

/// Classifies every `q`-atom strictly inside `window`.
pub fn classify_atoms(problem: &Problem, window: (f64, f64), tol: &Tolerances) -> Vec<AtomStatus> {
    problem
        .q
        .atoms_in(window.0, window.1)
        .map(|(x, dq)| {
            let bp = &problem.j + dq.scale(0.5);
            let (smin, smax) = linalg::sigma_extremes(&bp);
            let singular = propagation::singularity_ratio(&bp) <= tol.sing;
            let relative = if smax > 0.0 { smin / smax } else { 0.0 };
            AtomStatus {
                x: *x,
                sigma_min: smin,
                sigma_max: smax,
                singular,
                borderline: !singular && relative < tol.borderline,
            }
        })
        .collect()
}

/// Sorted positions in `(ξ₁, ξ₂)` where `B₊` is singular. Only `q`-atoms can
/// qualify since `B± = J` elsewhere.
pub fn find_singular_points(problem: &Problem, window: (f64, f64), tol_sing: f64) -> Vec<f64> {
    let tol = Tolerances {
        sing: tol_sing,
        ..Tolerances::default()
    };
    classify_atoms(problem, window, &tol)
        .into_iter()
        .filter(|a| a.singular)
        .map(|a| a.x)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Singular,
    Forced,
    Padded,
}

/// `ξ₁ = x_0 < x_1 < … < x_N < x_{N+1} = ξ₂` with `N ≥ 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    points: Vec<f64>,
    kinds: Vec<PointKind>,
}

impl Partition {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Kinds of the interior points `x_1, …, x_N`.
    pub fn kinds(&self) -> &[PointKind] {
        &self.kinds
    }

    pub fn window(&self) -> (f64, f64) {
        (self.points[0], *self.points.last().unwrap())
    }

    /// Number of interior points `N`.
    pub fn interior_count(&self) -> usize {
        self.points.len() - 2
    }

    pub fn interior(&self) -> &[f64] {
        &self.points[1..self.points.len() - 1]
    }
}

/// Partition with singular points only, padded up to `N = 2`.
pub fn make_partition(window: (f64, f64), singular: &[f64]) -> Result<Partition> {
    make_partition_with(window, singular, &[])
}

/// Like [`make_partition`], with additional user-forced points. Padding goes to
/// the midpoint of the longer gap (the right one on ties) when one point is
/// given, and to the thirds of the window when none are.
pub fn make_partition_with(
    window: (f64, f64),
    singular: &[f64],
    forced: &[f64],
) -> Result<Partition> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::EmptyWindow(lo, hi));
    }
    let mut inner: Vec<(f64, PointKind)> = singular
        .iter()
        .map(|&x| (x, PointKind::Singular))
        .chain(
            forced
                .iter()
                .filter(|x| !singular.contains(x))
                .map(|&x| (x, PointKind::Forced)),
        )
        .collect();
    if let Some(&(x, _)) = inner.iter().find(|(x, _)| !(*x > lo && *x < hi)) {
        return Err(Error::OutOfInterval { x, lo, hi });
    }
    inner.sort_by(|a, b| a.0.total_cmp(&b.0));
    inner.dedup_by(|a, b| a.0 == b.0);
    match inner.len() {
        0 => {
            let d = (hi - lo) / 3.0;
            inner.push((lo + d, PointKind::Padded));
            inner.push((lo + 2.0 * d, PointKind::Padded));
        }
        1 => {
            let x = inner[0].0;
            let pad = if x - lo > hi - x {
                0.5 * (lo + x)
            } else {
                0.5 * (x + hi)
            };
            inner.push((pad, PointKind::Padded));
            inner.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        _ => {}
    }
    let mut points = vec![lo];
    points.extend(inner.iter().map(|p| p.0));
    points.push(hi);
    Ok(Partition {
        points,
        kinds: inner.into_iter().map(|p| p.1).collect(),
    })
}

/// Moment vectors of a right-hand side `f` on a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVectors {
    pub f: L2Function,
    /// `𝓡(f) = (Δ_w(x_k) f(x_k))_k`.
    pub r: CVec,
    /// `𝓘(f) = (I_0, …, I_{N−1})`.
    pub i: CVec,
    /// `𝓘̃(f) = (0, …, 0, I_N)`.
    pub i_tilde: CVec,
    /// All `I_0, …, I_N`.
    pub integrals: Vec<CVec>,
    /// `𝓡(f) − 𝓑*𝓤𝓙⁻¹𝓘(f)`, right-hand side of `Bũ = rhs`.
    pub rhs: CVec,
    /// `rhs + 𝓑𝓙⁻¹𝓘̃(f)`.
    pub functional: CVec,
}

#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub problem: Problem,
    pub partition: Partition,
    pub tolerances: Tolerances,
    pub fundamentals: Vec<FundamentalMatrix>,
    pub b_plus: Vec<CMat>,
    pub b_minus: Vec<CMat>,
    pub b: CMat,
    pub c: CMat,
    pub b_m: CMat,
    pub c_m: CMat,
    /// `𝓑`
    pub script_b: CMat,
    /// `𝓤`
    pub script_u: CMat,
    /// `𝓙`
    pub script_j: CMat,
    j_inv: CMat,
}

/// Builds the fundamental matrices on every subinterval and assembles `B`, `C`, `B_m`, `C_m`.
pub fn assemble(problem: &Problem, partition: &Partition, tol: &Tolerances) -> Result<BlockSystem> {
    let n = problem.dim();
    let pts = partition.points();
    let nn = partition.interior_count();
    let j_inv = problem.j_inverse()?;
    let fundamentals = pts
        .windows(2)
        .map(|w| propagation::fundamental_matrix(problem, (w[0], w[1]), tol.sing))
        .collect::<Result<Vec<_>>>()?;
    let b_plus = partition
        .interior()
        .iter()
        .map(|&x| problem.b_plus(x))
        .collect::<Result<Vec<_>>>()?;
    let b_minus = partition
        .interior()
        .iter()
        .map(|&x| problem.b_minus(x))
        .collect::<Result<Vec<_>>>()?;

    let mut b = linalg::zeros(n * nn, n * (nn + 1));
    let mut c = linalg::zeros(n * nn, n * (nn + 1));
    let half_id = linalg::identity(n).scale(0.5);
    for k in 0..nn {
        let u_prev = fundamentals[k].end_value();
        b.view_mut((k * n, k * n), (n, n))
            .copy_from(&(-(&b_minus[k] * u_prev)));
        b.view_mut((k * n, (k + 1) * n), (n, n))
            .copy_from(&b_plus[k]);
        c.view_mut((k * n, k * n), (n, n))
            .copy_from(&u_prev.scale(0.5));
        c.view_mut((k * n, (k + 1) * n), (n, n)).copy_from(&half_id);
    }
    let inner_cols = n * (nn - 1);
    let b_m = b.columns(n, inner_cols).into_owned();
    let c_m = c.columns(n, inner_cols).into_owned();
    let script_b = linalg::block_diag(&b_plus);
    let us: Vec<CMat> = fundamentals[..nn]
        .iter()
        .map(|f| f.end_value().clone())
        .collect();
    let script_u = linalg::block_diag(&us);
    let script_j = linalg::block_diag(&vec![problem.j.clone(); nn]);

    Ok(BlockSystem {
        problem: problem.clone(),
        partition: partition.clone(),
        tolerances: *tol,
        fundamentals,
        b_plus,
        b_minus,
        b,
        c,
        b_m,
        c_m,
        script_b,
        script_u,
        script_j,
        j_inv,
    })
}

/// Singular points of the window (plus `forced`) padded to a partition, then assembled.
pub fn assemble_window(
    problem: &Problem,
    window: (f64, f64),
    forced: &[f64],
    tol: &Tolerances,
) -> Result<BlockSystem> {
    let singular = find_singular_points(problem, window, tol.sing);
    let partition = make_partition_with(window, &singular, forced)?;
    assemble(problem, &partition, tol)
}

impl BlockSystem {
    pub fn n(&self) -> usize {
        self.problem.dim()
    }

    /// Number of interior partition points.
    pub fn interior_count(&self) -> usize {
        self.partition.interior_count()
    }

    pub fn j_inverse(&self) -> &CMat {
        &self.j_inv
    }

    /// `𝓙⁻¹` as a block-diagonal matrix.
    pub fn script_j_inverse(&self) -> CMat {
        linalg::block_diag(&vec![self.j_inv.clone(); self.interior_count()])
    }

    pub fn kernel(&self) -> CMat {
        nullspace(&self.b, self.tolerances.rank)
    }

    /// `ker B*`
    pub fn cokernel(&self) -> CMat {
        nullspace(&self.b.adjoint(), self.tolerances.rank)
    }

    /// `ker B_m*`
    pub fn cokernel_m(&self) -> CMat {
        nullspace(&self.b_m.adjoint(), self.tolerances.rank)
    }

    /// Moment vectors `𝓡`, `𝓘`, `𝓘̃`, `𝓕` and the right-hand side of `Bũ = rhs`.
    pub fn moments(&self, f: &L2Function) -> Result<MomentVectors> {
        let n = self.n();
        let nn = self.interior_count();
        let (lo, hi) = self.partition.window();
        f.covers(lo, hi)?;
        if f.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "f has dimension {}",
                f.dim()
            )));
        }
        let r = linalg::stack(
            &self
                .partition
                .interior()
                .iter()
                .map(|&x| Ok(self.problem.w.jump(x)? * f.value_at(x)?))
                .collect::<Result<Vec<_>>>()?,
        );
        let integrals = self
            .fundamentals
            .iter()
            .map(|fm| propagation::inhomogeneous_integral(fm, &self.problem, f, fm.interval().1))
            .collect::<Result<Vec<_>>>()?;
        let i = linalg::stack(&integrals[..nn]);
        let mut tail = vec![CVec::zeros(n); nn];
        tail[nn - 1] = integrals[nn].clone();
        let i_tilde = linalg::stack(&tail);
        let jinv = self.script_j_inverse();
        let rhs = &r - self.script_b.adjoint() * &self.script_u * &jinv * &i;
        let functional = &rhs + &self.script_b * &jinv * &i_tilde;
        Ok(MomentVectors {
            f: f.clone(),
            r,
            i,
            i_tilde,
            integrals,
            rhs,
            functional,
        })
    }

    /// Solution given by the variation-of-constants formula with `c_j` taken
    /// from the blocks of `u_tilde ∈ ℂ^{n(N+1)}`.
    pub fn reconstruct(&self, u_tilde: &CVec, f: Option<&L2Function>) -> Result<PiecewiseSolution> {
        let n = self.n();
        let nn = self.interior_count();
        if u_tilde.len() != n * (nn + 1) {
            return Err(Error::DimensionMismatch(format!(
                "expected a vector of length {}, found {}",
                n * (nn + 1),
                u_tilde.len()
            )));
        }
        let coeffs: Vec<CVec> = (0..=nn).map(|k| linalg::block(u_tilde, k, n)).collect();
        PiecewiseSolution::from_coefficients(&self.problem, &self.fundamentals, &coeffs, f)
    }
}
