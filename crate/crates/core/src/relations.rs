//! Finite-window consequences of the minimal/maximal relations in `L²(w)`:
//! the weighted pairing, the homogeneous solutions `K₀`, solvability with
//! vanishing end values, and Lagrange's identity.

use crate::blocksystem::{self, BlockSystem};
use crate::coefficients::{MeasureMatrix, Problem, Side, Tolerances};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::propagation::PiecewiseSolution;
use crate::solutions;

pub use crate::l2::L2Function;

/// Anything that can be integrated against `w` in closed form: on each
/// elementary piece the value is the first `n` entries of `e^{Ât} ŷ`.
pub trait WeightedField {
    fn dim(&self) -> usize;

    fn window(&self) -> (f64, f64);

    /// Whether the field lives on exactly its window (solutions) or merely covers it (step functions).
    fn exact_window(&self) -> bool;

    /// Points in `(lo, hi)` where the local representation may change.
    fn knots_in(&self, lo: f64, hi: f64) -> Vec<f64>;

    /// Balanced representative at `x`.
    fn point_value(&self, x: f64) -> Result<CVec>;

    /// `(Â, ŷ)` describing the field on the open piece `(lo, hi)` starting at `lo⁺`.
    fn affine_piece(&self, lo: f64, hi: f64) -> Result<(CMat, CVec)>;
}

impl WeightedField for L2Function {
    fn dim(&self) -> usize {
        L2Function::dim(self)
    }

    fn window(&self) -> (f64, f64) {
        self.support()
    }

    fn exact_window(&self) -> bool {
        false
    }

    fn knots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        L2Function::knots_in(self, lo, hi).collect()
    }

    fn point_value(&self, x: f64) -> Result<CVec> {
        self.value_at(x)
    }

    fn affine_piece(&self, lo: f64, hi: f64) -> Result<(CMat, CVec)> {
        let n = L2Function::dim(self);
        Ok((
            linalg::zeros(n, n),
            self.piece_value(0.5 * (lo + hi)).clone(),
        ))
    }
}

impl WeightedField for PiecewiseSolution {
    fn dim(&self) -> usize {
        PiecewiseSolution::dim(self)
    }

    fn window(&self) -> (f64, f64) {
        PiecewiseSolution::window(self)
    }

    fn exact_window(&self) -> bool {
        true
    }

    fn knots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.knots()
            .iter()
            .map(|k| k.x)
            .filter(|&x| x > lo && x < hi)
            .collect()
    }

    fn point_value(&self, x: f64) -> Result<CVec> {
        self.evaluate(x, Side::Balanced)
    }

    fn affine_piece(&self, lo: f64, hi: f64) -> Result<(CMat, CVec)> {
        let n = PiecewiseSolution::dim(self);
        let mid = 0.5 * (lo + hi);
        let seg = self
            .segments()
            .iter()
            .find(|s| s.lo <= mid && mid < s.hi)
            .ok_or(Error::OutOfInterval {
                x: mid,
                lo: PiecewiseSolution::window(self).0,
                hi: PiecewiseSolution::window(self).1,
            })?;
        let mut gen = linalg::zeros(n + 1, n + 1);
        gen.view_mut((0, 0), (n, n)).copy_from(&seg.exponent);
        gen.view_mut((0, n), (n, 1)).copy_from(&seg.forcing);
        let start = self.evaluate(lo, Side::Right)?;
        let mut state = CVec::zeros(n + 1);
        state.rows_mut(0, n).copy_from(&start);
        state[n] = linalg::ONE;
        Ok((gen, state))
    }
}

fn common_window(u: &dyn WeightedField, v: &dyn WeightedField) -> Result<(f64, f64)> {
    let (ua, ub) = u.window();
    let (va, vb) = v.window();
    let lo = ua.max(va);
    let hi = ub.min(vb);
    if !(lo < hi) || u.dim() != v.dim() {
        return Err(Error::WindowMismatch);
    }
    for f in [u, v] {
        if f.exact_window() && f.window() != (lo, hi) {
            return Err(Error::WindowMismatch);
        }
    }
    Ok((lo, hi))
}

/// `⟨u, v⟩ = ∫ u* w v` over the common window, conjugate-linear in `u`.
/// Atoms of `w` strictly inside contribute `u#(t)* Δw(t) v#(t)`.
pub fn inner_product(
    w: &MeasureMatrix,
    u: &dyn WeightedField,
    v: &dyn WeightedField,
) -> Result<C64> {
    let (lo, hi) = common_window(u, v)?;
    let n = u.dim();
    if w.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "w is {0}x{0}, fields have dimension {n}",
            w.dim()
        )));
    }
    let mut knots: Vec<f64> = w
        .breakpoints_in(lo, hi)
        .chain(w.atoms_in(lo, hi).map(|(x, _)| *x))
        .chain(u.knots_in(lo, hi))
        .chain(v.knots_in(lo, hi))
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut bounds = vec![lo];
    bounds.extend(knots);
    bounds.push(hi);

    let mut total = linalg::ZERO;
    for pair in bounds.windows(2) {
        let (s0, s1) = (pair[0], pair[1]);
        let w0 = w.density_at(0.5 * (s0 + s1));
        if w0.iter().all(|z| *z == linalg::ZERO) {
            continue;
        }
        let (gu, yu) = u.affine_piece(s0, s1)?;
        let (gv, yv) = v.affine_piece(s0, s1)?;
        let mut weight = linalg::zeros(gu.nrows(), gv.nrows());
        weight.view_mut((0, 0), (n, n)).copy_from(w0);
        let gram = linalg::gram_integral(&gu, &weight, &gv, s1 - s0);
        total += yu.dotc(&(gram * yv));
    }
    for (x, dw) in w.atoms_in(lo, hi) {
        let uv = u.point_value(*x)?;
        let vv = v.point_value(*x)?;
        total += uv.dotc(&(dw * vv));
    }
    Ok(total)
}

/// Element of `K₀`, flagged when its `w`-norm vanishes.
#[derive(Debug, Clone)]
pub struct K0Element {
    pub solution: PiecewiseSolution,
    pub norm_sq: f64,
    pub degenerate: bool,
}

/// Every homogeneous solution on the window (a basis of `ker B`, reconstructed).
pub fn kernel_k0(bs: &BlockSystem) -> Result<Vec<K0Element>> {
    bs.kernel()
        .column_iter()
        .map(|col| {
            let col = col.into_owned();
            let solution = bs.reconstruct(&col, None)?;
            let norm_sq = inner_product(&bs.problem.w, &solution, &solution)?
                .re
                .max(0.0);
            let degenerate = norm_sq <= 1e-12 * linalg::vnorm(&col).powi(2).max(1.0);
            Ok(K0Element {
                solution,
                norm_sq,
                degenerate,
            })
        })
        .collect()
}

/// [`kernel_k0`] on the default partition of `window`.
pub fn kernel_k0_window(
    problem: &Problem,
    window: (f64, f64),
    tol: &Tolerances,
) -> Result<Vec<K0Element>> {
    kernel_k0(&blocksystem::assemble_window(problem, window, &[], tol)?)
}

#[derive(Debug, Clone)]
pub enum T0Outcome {
    /// `Ju′ + qu = wf` with `u⁺(ξ₁) = u⁻(ξ₂) = 0`.
    Solved {
        solution: PiecewiseSolution,
        tilde: CVec,
        residual: f64,
        endpoint_defect: f64,
    },
    /// `f` is not orthogonal to `K₀`: `r̂ ∈ ker B_m*` with `r̂*𝓕(f) ≠ 0`.
    Certificate {
        r_hat: CVec,
        r: PiecewiseSolution,
        /// `⟨r, f⟩ = ∫ r* w f`
        pairing: C64,
        /// `r̂*𝓕(f)`
        functional: C64,
        residual: f64,
    },
}

impl T0Outcome {
    pub fn is_solved(&self) -> bool {
        matches!(self, T0Outcome::Solved { .. })
    }
}

/// Looks for a solution vanishing at both window ends by solving `B_m ũ₀ = 𝓕(f)`
/// and fixing `γ_0 = 0`, `γ_N = −J⁻¹I_N(f)`.
pub fn t0_solve(bs: &BlockSystem, f: &L2Function) -> Result<T0Outcome> {
    let n = bs.n();
    let nn = bs.interior_count();
    let tol = bs.tolerances;
    let mv = bs.moments(f)?;
    let gamma = linalg::lstsq_min_norm(&bs.b_m, &mv.functional, tol.rank);
    let residual = linalg::vnorm(&(&bs.b_m * &gamma - &mv.functional));
    if residual <= tol.solve * (1.0 + linalg::vnorm(&mv.functional)) {
        let mut tilde = CVec::zeros(n * (nn + 1));
        tilde.rows_mut(n, n * (nn - 1)).copy_from(&gamma);
        let last = -(bs.j_inverse() * &mv.integrals[nn]);
        tilde.rows_mut(n * nn, n).copy_from(&last);
        let solution = bs.reconstruct(&tilde, Some(f))?;
        let (lo, hi) = solution.window();
        let endpoint_defect = linalg::vnorm(&solution.evaluate(lo, Side::Right)?)
            + linalg::vnorm(&solution.evaluate(hi, Side::Left)?);
        return Ok(T0Outcome::Solved {
            solution,
            tilde,
            residual,
            endpoint_defect,
        });
    }
    let r_hat = linalg::project(&bs.cokernel_m(), &mv.functional);
    let lift = solutions::lift_kernel_vector(bs, &r_hat)?;
    let r = bs.reconstruct(&lift.tilde, None)?;
    let pairing = inner_product(&bs.problem.w, &r, f)?;
    let functional = lift.hat.dotc(&mv.functional);
    Ok(T0Outcome::Certificate {
        r_hat: lift.hat,
        r,
        pairing,
        functional,
        residual,
    })
}

/// [`t0_solve`] on the default partition of `window`.
pub fn t0_solve_window(
    problem: &Problem,
    window: (f64, f64),
    f: &L2Function,
    tol: &Tolerances,
) -> Result<T0Outcome> {
    t0_solve(&blocksystem::assemble_window(problem, window, &[], tol)?, f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingReport {
    /// `⟨v, f⟩ − ⟨g, u⟩`
    pub lhs: C64,
    /// `(v*Ju)⁻(ξ₂) − (v*Ju)⁺(ξ₁)`
    pub rhs: C64,
    pub defect: f64,
    /// `(v*Ju)⁻(ξ₂)`
    pub right_boundary: C64,
    /// `(v*Ju)⁺(ξ₁)`
    pub left_boundary: C64,
}

/// Lagrange's identity for two pairs `(u, f)`, `(v, g)` solving `Ju′ + qu = wf`, `Jv′ + qv = wg`.
pub fn lagrange_check(
    problem: &Problem,
    pair1: (&PiecewiseSolution, &L2Function),
    pair2: (&PiecewiseSolution, &L2Function),
) -> Result<PairingReport> {
    let (u, f) = pair1;
    let (v, g) = pair2;
    if u.window() != v.window() {
        return Err(Error::WindowMismatch);
    }
    let (lo, hi) = u.window();
    let lhs = inner_product(&problem.w, v, f)? - inner_product(&problem.w, g, u)?;
    let right_boundary = v
        .evaluate(hi, Side::Left)?
        .dotc(&(&problem.j * u.evaluate(hi, Side::Left)?));
    let left_boundary = v
        .evaluate(lo, Side::Right)?
        .dotc(&(&problem.j * u.evaluate(lo, Side::Right)?));
    let rhs = right_boundary - left_boundary;
    Ok(PairingReport {
        lhs,
        rhs,
        defect: (lhs - rhs).norm(),
        right_boundary,
        left_boundary,
    })
}
