//! Balanced fundamental matrices and variation-of-constants solutions on
//! subintervals where `B±` stay invertible.
//!
//! On a subinterval `(x_j, x_{j+1})` the general solution of `Ju′ + qu = wf` is
//!
//! ```text
//! u(x) = U_j(x) (c_j + J⁻¹ ∫_{(x_j, x)} U_j* w f)
//! ```
//!
//! with `U_j(x_j⁺) = 𝟙`. Between events `U_j` is a matrix exponential; across
//! a regular `q`-atom it is multiplied by `T = B₊⁻¹B₋`.

use crate::coefficients::{Problem, Side};
use crate::error::{Error, Result};
use crate::l2::L2Function;
use crate::linalg::{self, CMat, CVec};

/// `σ_min(B₊)/max(1, σ_max(B₊))`, the quantity compared against `tol_sing`.
pub fn singularity_ratio(b_plus: &CMat) -> f64 {
    let (smin, smax) = linalg::sigma_extremes(b_plus);
    smin / smax.max(1.0)
}

/// `exp(−dx · J⁻¹ q0)`, the propagator of `Ju′ + q0 u = 0` over a length `dx`.
pub fn segment_exponential(j: &CMat, q0: &CMat, dx: f64) -> Result<CMat> {
    if !(dx >= 0.0) {
        return Err(Error::InvalidArgument(format!("negative step {dx}")));
    }
    let j_inv = linalg::inverse(j).ok_or(Error::SingularJ)?;
    Ok(linalg::expm(&(-(j_inv * q0)).scale(dx)))
}

/// Transfer `T = B₊⁻¹B₋` across an atom with jump `dq`, so that `u⁺ = T u⁻`.
pub fn atom_transfer(j: &CMat, dq: &CMat, tol_sing: f64) -> Result<CMat> {
    let bp = j + dq.scale(0.5);
    let bm = j - dq.scale(0.5);
    if singularity_ratio(&bp) <= tol_sing {
        return Err(Error::SingularAtom { position: None });
    }
    bp.lu()
        .solve(&bm)
        .ok_or(Error::SingularAtom { position: None })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSegment {
    pub lo: f64,
    pub hi: f64,
    /// `−J⁻¹ q0` for the constant density `q0` on this segment.
    pub exponent: CMat,
    /// `U⁺(lo)`.
    pub start: CMat,
    /// `U⁻(hi)`.
    pub finish: CMat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transfer {
    pub x: f64,
    pub matrix: CMat,
    pub is_atom: bool,
}

/// Balanced fundamental matrix of `Ju′ + qu = 0` on `(lo, hi)`, normalized by `U(lo⁺) = 𝟙`.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalMatrix {
    lo: f64,
    hi: f64,
    segments: Vec<PropagatorSegment>,
    transfers: Vec<Transfer>,
}

impl FundamentalMatrix {
    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn segments(&self) -> &[PropagatorSegment] {
        &self.segments
    }

    /// Interior events in order: one per boundary between consecutive segments.
    pub fn transfers(&self) -> &[Transfer] {
        &self.transfers
    }

    /// `U_j(x_{j+1})`, defined as the left limit at the right end.
    pub fn end_value(&self) -> &CMat {
        &self.segments.last().expect("at least one segment").finish
    }

    fn segment_index(&self, x: f64) -> usize {
        self.segments
            .iter()
            .position(|s| x < s.hi)
            .unwrap_or(self.segments.len() - 1)
    }

    /// `U(x)` with the requested one-sided or balanced convention.
    /// At the ends only one limit exists and is returned for every side.
    pub fn evaluate(&self, x: f64, side: Side) -> Result<CMat> {
        if !(x >= self.lo && x <= self.hi) {
            return Err(Error::OutOfInterval {
                x,
                lo: self.lo,
                hi: self.hi,
            });
        }
        if x == self.lo {
            return Ok(self.segments[0].start.clone());
        }
        if x == self.hi {
            return Ok(self.end_value().clone());
        }
        if let Some(k) = self.transfers.iter().position(|t| t.x == x) {
            let left = &self.segments[k].finish;
            let right = &self.segments[k + 1].start;
            return Ok(match side {
                Side::Left => left.clone(),
                Side::Right => right.clone(),
                Side::Balanced => (left + right).scale(0.5),
            });
        }
        let s = &self.segments[self.segment_index(x)];
        Ok(linalg::expm(&s.exponent.scale(x - s.lo)) * &s.start)
    }

    /// Exponent `−J⁻¹q0` of the segment containing the open point `x`.
    pub(crate) fn exponent_at(&self, x: f64) -> &CMat {
        &self.segments[self.segment_index(x)].exponent
    }
}

/// Composes segment exponentials and atom transfers left to right on `(lo, hi)`.
pub fn fundamental_matrix(
    problem: &Problem,
    sub: (f64, f64),
    tol_sing: f64,
) -> Result<FundamentalMatrix> {
    let (lo, hi) = sub;
    if !(lo < hi) {
        return Err(Error::EmptyWindow(lo, hi));
    }
    let (a, b) = problem.interval();
    if lo < a || hi > b {
        return Err(Error::OutOfInterval {
            x: if lo < a { lo } else { hi },
            lo: a,
            hi: b,
        });
    }
    let n = problem.dim();
    let j_inv = problem.j_inverse()?;

    let mut events: Vec<f64> = problem
        .q
        .atoms_in(lo, hi)
        .map(|(x, _)| *x)
        .chain(problem.q.breakpoints_in(lo, hi))
        .collect();
    events.sort_by(f64::total_cmp);
    events.dedup();

    let mut bounds = Vec::with_capacity(events.len() + 2);
    bounds.push(lo);
    bounds.extend(&events);
    bounds.push(hi);

    let mut segments = Vec::with_capacity(bounds.len() - 1);
    let mut transfers = Vec::with_capacity(events.len());
    let mut start = linalg::identity(n);
    for (k, w) in bounds.windows(2).enumerate() {
        let (s0, s1) = (w[0], w[1]);
        let q0 = problem.q.density_at(0.5 * (s0 + s1));
        let exponent = -(&j_inv * q0);
        let finish = linalg::expm(&exponent.scale(s1 - s0)) * &start;
        let next = if k + 1 < bounds.len() - 1 {
            let x = s1;
            let (matrix, is_atom) = match problem.q.atom_at(x) {
                Some(dq) => (
                    atom_transfer(&problem.j, dq, tol_sing)
                        .map_err(|_| Error::SingularAtom { position: Some(x) })?,
                    true,
                ),
                None => (linalg::identity(n), false),
            };
            let next = &matrix * &finish;
            transfers.push(Transfer { x, matrix, is_atom });
            Some(next)
        } else {
            None
        };
        segments.push(PropagatorSegment {
            lo: s0,
            hi: s1,
            exponent,
            start: start.clone(),
            finish,
        });
        if let Some(nx) = next {
            start = nx;
        }
    }
    Ok(FundamentalMatrix {
        lo,
        hi,
        segments,
        transfers,
    })
}

/// One elementary piece of a subinterval on which `q`, `w` and `f` have
/// constant densities, together with the accumulated integral at its ends.
#[derive(Debug, Clone)]
struct Step {
    lo: f64,
    hi: f64,
    exponent: CMat,
    /// `U⁺(lo)`.
    u_start: CMat,
    /// `w0 · φ` on this piece.
    forcing: CVec,
    /// `∫ U* w f` over `(x_j, lo]`, i.e. including an atom at `lo`.
    acc_start: CVec,
    /// `∫ U* w f` over `(x_j, hi)`.
    acc_end: CVec,
}

/// Walks the common refinement of the event structure of `U`, `w` and `f` on `(x_j, upto)`.
fn walk(
    fm: &FundamentalMatrix,
    problem: &Problem,
    f: Option<&L2Function>,
    upto: f64,
) -> Result<Vec<Step>> {
    let (lo, _) = fm.interval();
    let n = problem.dim();
    let w = &problem.w;
    if let Some(f) = f {
        f.covers(lo, upto)?;
        if f.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "f has dimension {}",
                f.dim()
            )));
        }
    }
    let mut knots: Vec<f64> = fm
        .transfers()
        .iter()
        .map(|t| t.x)
        .filter(|&x| x < upto)
        .collect();
    if let Some(f) = f {
        knots.extend(w.atoms_in(lo, upto).map(|(x, _)| *x));
        knots.extend(w.breakpoints_in(lo, upto));
        knots.extend(f.knots_in(lo, upto));
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let mut bounds = Vec::with_capacity(knots.len() + 2);
    bounds.push(lo);
    bounds.extend(knots);
    bounds.push(upto);

    let mut acc = CVec::zeros(n);
    let mut steps = Vec::with_capacity(bounds.len() - 1);
    for (k, pair) in bounds.windows(2).enumerate() {
        let (s0, s1) = (pair[0], pair[1]);
        if k > 0 {
            if let (Some(f), Some(dw)) = (f, w.atom_at(s0)) {
                let ub = fm.evaluate(s0, Side::Balanced)?;
                acc += ub.adjoint() * (dw * f.value_at(s0)?);
            }
        }
        let acc_start = acc.clone();
        let mid = 0.5 * (s0 + s1);
        let u_start = fm.evaluate(s0, Side::Right)?;
        let exponent = fm.exponent_at(mid).clone();
        let forcing = match f {
            Some(f) => w.density_at(mid) * f.piece_value(mid),
            None => CVec::zeros(n),
        };
        if s1 > s0 && forcing.iter().any(|z| *z != linalg::ZERO) {
            let (_, phi) = linalg::exp_and_integral(&exponent, s1 - s0);
            acc += u_start.adjoint() * (phi.adjoint() * &forcing);
        }
        steps.push(Step {
            lo: s0,
            hi: s1,
            exponent,
            u_start,
            forcing,
            acc_start,
            acc_end: acc.clone(),
        });
    }
    Ok(steps)
}

/// `∫_{(x_j, upto)} U* w f`: density parts in closed form, `w`-atoms strictly
/// inside contribute `U#(t)* Δw(t) f(t)`.
pub fn inhomogeneous_integral(
    fm: &FundamentalMatrix,
    problem: &Problem,
    f: &L2Function,
    upto: f64,
) -> Result<CVec> {
    let (lo, hi) = fm.interval();
    if !(upto >= lo && upto <= hi) {
        return Err(Error::OutOfInterval { x: upto, lo, hi });
    }
    if upto == lo {
        return Ok(CVec::zeros(problem.dim()));
    }
    let steps = walk(fm, problem, Some(f), upto)?;
    Ok(steps
        .last()
        .map(|s| s.acc_end.clone())
        .unwrap_or_else(|| CVec::zeros(problem.dim())))
}

/// Piece of a solution on which `Ju′ + q0 u = w0 φ` with constant data:
/// `u(lo + t) = e^{A t} start + (∫₀ᵗ e^{A s} ds) forcing`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSegment {
    pub lo: f64,
    pub hi: f64,
    /// `A = −J⁻¹q0`.
    pub exponent: CMat,
    /// `J⁻¹ w0 φ`.
    pub forcing: CVec,
    /// `u⁺(lo)`.
    pub start: CVec,
}

impl SolutionSegment {
    pub fn value(&self, x: f64) -> CVec {
        let (e, phi) = linalg::exp_and_integral(&self.exponent, x - self.lo);
        e * &self.start + phi * &self.forcing
    }
}

/// One-sided limits at a point where the local representation changes.
#[derive(Debug, Clone, PartialEq)]
pub struct Knot {
    pub x: f64,
    pub left: Option<CVec>,
    pub right: Option<CVec>,
}

/// Balanced solution on `(x_0, x_{N+1})` built from the per-subinterval
/// coefficients `c_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSolution {
    n: usize,
    points: Vec<f64>,
    coefficients: Vec<CVec>,
    integrals: Vec<CVec>,
    segments: Vec<SolutionSegment>,
    knots: Vec<Knot>,
}

impl PiecewiseSolution {
    /// `fundamentals[j]` must live on `(x_j, x_{j+1})` with consecutive intervals.
    pub fn from_coefficients(
        problem: &Problem,
        fundamentals: &[FundamentalMatrix],
        coefficients: &[CVec],
        f: Option<&L2Function>,
    ) -> Result<Self> {
        let n = problem.dim();
        if fundamentals.is_empty() || fundamentals.len() != coefficients.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} subintervals but {} coefficient vectors",
                fundamentals.len(),
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| c.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "coefficients must have length {n}"
            )));
        }
        let f = f.filter(|f| !f.is_zero());
        let j_inv = problem.j_inverse()?;
        let mut points = vec![fundamentals[0].interval().0];
        let mut segments = Vec::new();
        let mut knots: Vec<Knot> = Vec::new();
        let mut integrals = Vec::with_capacity(fundamentals.len());

        for (fm, c) in fundamentals.iter().zip(coefficients) {
            let (lo, hi) = fm.interval();
            if *points.last().unwrap() != lo {
                return Err(Error::WindowMismatch);
            }
            points.push(hi);
            let steps = walk(fm, problem, f, hi)?;
            for (k, s) in steps.iter().enumerate() {
                let start = &s.u_start * (c + &j_inv * &s.acc_start);
                if k == 0 {
                    match knots.last_mut() {
                        Some(kn) if kn.x == lo => kn.right = Some(start.clone()),
                        _ => knots.push(Knot {
                            x: lo,
                            left: None,
                            right: Some(start.clone()),
                        }),
                    }
                } else {
                    knots
                        .last_mut()
                        .expect("knot pushed at previous step")
                        .right = Some(start.clone());
                }
                let u_end = fm.evaluate(s.hi, Side::Left)?;
                let left = u_end * (c + &j_inv * &s.acc_end);
                knots.push(Knot {
                    x: s.hi,
                    left: Some(left),
                    right: None,
                });
                segments.push(SolutionSegment {
                    lo: s.lo,
                    hi: s.hi,
                    exponent: s.exponent.clone(),
                    forcing: &j_inv * &s.forcing,
                    start,
                });
            }
            integrals.push(
                steps
                    .last()
                    .map(|s| s.acc_end.clone())
                    .unwrap_or_else(|| CVec::zeros(n)),
            );
        }
        Ok(Self {
            n,
            points,
            coefficients: coefficients.to_vec(),
            integrals,
            segments,
            knots,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn window(&self) -> (f64, f64) {
        (self.points[0], *self.points.last().unwrap())
    }

    /// Partition points `x_0, …, x_{N+1}`.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `c_j = u⁺(x_j)`.
    pub fn coefficients(&self) -> &[CVec] {
        &self.coefficients
    }

    /// `I_j(f) = ∫_{(x_j, x_{j+1})} U_j* w f` for every subinterval.
    pub fn integrals(&self) -> &[CVec] {
        &self.integrals
    }

    pub fn segments(&self) -> &[SolutionSegment] {
        &self.segments
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    /// `u⁻`, `u⁺` or `u#` at `x`. Limits from outside the window do not exist
    /// and are reported as `OutOfInterval`.
    pub fn evaluate(&self, x: f64, side: Side) -> Result<CVec> {
        let (lo, hi) = self.window();
        let outside = Error::OutOfInterval { x, lo, hi };
        if !(x >= lo && x <= hi) {
            return Err(outside);
        }
        if let Ok(k) = self.knots.binary_search_by(|kn| kn.x.total_cmp(&x)) {
            let kn = &self.knots[k];
            return match (side, &kn.left, &kn.right) {
                (Side::Left, Some(l), _) => Ok(l.clone()),
                (Side::Right, _, Some(r)) => Ok(r.clone()),
                (Side::Balanced, Some(l), Some(r)) => Ok((l + r).scale(0.5)),
                _ => Err(outside),
            };
        }
        let idx = self
            .segments
            .iter()
            .position(|s| x < s.hi)
            .unwrap_or(self.segments.len() - 1);
        Ok(self.segments[idx].value(x))
    }

    /// Balanced value inside the window, the one-sided limit at its ends.
    pub fn sample(&self, x: f64) -> Result<CVec> {
        let (lo, hi) = self.window();
        if x == lo {
            self.evaluate(x, Side::Right)
        } else if x == hi {
            self.evaluate(x, Side::Left)
        } else {
            self.evaluate(x, Side::Balanced)
        }
    }

    /// Balanced values at the interior partition points `x_1, …, x_N`.
    pub fn partition_values(&self) -> Result<Vec<CVec>> {
        self.points[1..self.points.len() - 1]
            .iter()
            .map(|&x| self.evaluate(x, Side::Balanced))
            .collect()
    }
}

/// Unique balanced solution of `Ju′ + qu = wf` on a regular subinterval with
/// `u(x0) = u0` (the right limit if `x0` is the left end, the left limit if it is the right end).
pub fn solve_ivp_regular(
    problem: &Problem,
    sub: (f64, f64),
    x0: f64,
    u0: &CVec,
    f: Option<&L2Function>,
    tol_sing: f64,
) -> Result<PiecewiseSolution> {
    let n = problem.dim();
    if u0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "u0 has length {}",
            u0.len()
        )));
    }
    if !(x0 >= sub.0 && x0 <= sub.1) {
        return Err(Error::OutOfInterval {
            x: x0,
            lo: sub.0,
            hi: sub.1,
        });
    }
    let fm = fundamental_matrix(problem, sub, tol_sing)?;
    let particular = PiecewiseSolution::from_coefficients(
        problem,
        std::slice::from_ref(&fm),
        &[CVec::zeros(n)],
        f,
    )?;
    let u_at = fm.evaluate(x0, Side::Balanced)?;
    let p_at = particular.sample(x0)?;
    let c = linalg::solve(&u_at, &(u0 - p_at)).ok_or(Error::SingularAtom { position: Some(x0) })?;
    PiecewiseSolution::from_coefficients(problem, &[fm], &[c], f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::MeasureMatrix;
    use crate::linalg::{c, fro, real_matrix, real_vector};

    fn sj() -> CMat {
        real_matrix(2, 2, &[0.0, -1.0, 1.0, 0.0])
    }

    fn delta_prime(beta: f64, at: f64) -> Problem {
        let iv = (0.0, 1.0);
        Problem::new(
            sj(),
            MeasureMatrix::zero(2, iv).with_atom(at, real_matrix(2, 2, &[0.0, 0.0, 0.0, -beta])),
            MeasureMatrix::zero(2, iv),
        )
        .unwrap()
    }

    #[test]
    fn zero_density_gives_identity_propagator() {
        let e = segment_exponential(&sj(), &linalg::zeros(2, 2), 0.8).unwrap();
        assert!(fro(&(e - linalg::identity(2))) < 1e-15);
        assert!(segment_exponential(&sj(), &linalg::zeros(2, 2), -1.0).is_err());
    }

    #[test]
    fn scalar_phase_rotation() {
        let j = CMat::from_element(1, 1, c(0.0, 1.0));
        let q0 = real_matrix(1, 1, &[1.0]);
        let t = 0.9;
        let e = segment_exponential(&j, &q0, t).unwrap();
        assert!((e[(0, 0)] - c(t.cos(), t.sin())).norm() < 1e-14);
    }

    #[test]
    fn transfer_of_plain_point_is_identity() {
        let t = atom_transfer(&sj(), &linalg::zeros(2, 2), 1e-9).unwrap();
        assert!(fro(&(t - linalg::identity(2))) < 1e-15);
    }

    #[test]
    fn singular_atom_is_refused() {
        let dq = real_matrix(2, 2, &[0.0, 2.0, 2.0, 0.0]);
        assert_eq!(
            atom_transfer(&sj(), &dq, 1e-9),
            Err(Error::SingularAtom { position: None })
        );
    }

    #[test]
    fn fundamental_matrix_across_delta_prime_atom() {
        let beta = 1.25;
        let fm = fundamental_matrix(&delta_prime(beta, 0.5), (0.0, 1.0), 1e-9).unwrap();
        let id = linalg::identity(2);
        let jumped = real_matrix(2, 2, &[1.0, beta, 0.0, 1.0]);
        assert!(fro(&(fm.evaluate(0.3, Side::Balanced).unwrap() - &id)) < 1e-15);
        assert!(fro(&(fm.evaluate(0.7, Side::Balanced).unwrap() - &jumped)) < 1e-14);
        assert!(fro(&(fm.evaluate(0.5, Side::Left).unwrap() - &id)) < 1e-15);
        assert!(fro(&(fm.evaluate(0.5, Side::Right).unwrap() - &jumped)) < 1e-14);
        let half = real_matrix(2, 2, &[1.0, beta / 2.0, 0.0, 1.0]);
        assert!(fro(&(fm.evaluate(0.5, Side::Balanced).unwrap() - half)) < 1e-14);
        assert!(fro(&(fm.end_value() - &jumped)) < 1e-14);
    }

    #[test]
    fn singular_atom_inside_subinterval_reports_position() {
        let iv = (0.0, 1.0);
        let p = Problem::new(
            sj(),
            MeasureMatrix::zero(2, iv).with_atom(0.4, real_matrix(2, 2, &[0.0, 2.0, 2.0, 0.0])),
            MeasureMatrix::zero(2, iv),
        )
        .unwrap();
        assert_eq!(
            fundamental_matrix(&p, iv, 1e-9),
            Err(Error::SingularAtom {
                position: Some(0.4)
            })
        );
        assert!(fundamental_matrix(&p, (0.0, 0.4), 1e-9).is_ok());
    }

    #[test]
    fn constant_density_matches_single_exponential() {
        let q0 = real_matrix(2, 2, &[0.3, -0.2, -0.2, 1.1]);
        let iv = (0.0, 1.0);
        let p = Problem::new(
            sj(),
            MeasureMatrix::constant(iv, q0.clone()),
            MeasureMatrix::zero(2, iv),
        )
        .unwrap();
        let fm = fundamental_matrix(&p, iv, 1e-9).unwrap();
        let e = segment_exponential(&sj(), &q0, 1.0).unwrap();
        assert!(fro(&(fm.end_value() - e)) < 1e-13);
    }

    #[test]
    fn integral_examples() {
        let iv = (0.0, 1.0);
        let mut p =
            Problem::new(sj(), MeasureMatrix::zero(2, iv), MeasureMatrix::zero(2, iv)).unwrap();
        let fm = fundamental_matrix(&p, iv, 1e-9).unwrap();
        let zero = L2Function::zero(2, iv);
        assert_eq!(
            inhomogeneous_integral(&fm, &p, &zero, 1.0).unwrap(),
            CVec::zeros(2)
        );

        p.w = MeasureMatrix::zero(2, iv).with_atom(0.5, linalg::identity(2));
        let f = L2Function::constant(iv, real_vector(&[1.0, 0.0]));
        let i = inhomogeneous_integral(&fm, &p, &f, 1.0).unwrap();
        assert!(linalg::vnorm(&(i - real_vector(&[1.0, 0.0]))) < 1e-15);
        // the atom at the upper limit is excluded
        let i = inhomogeneous_integral(&fm, &p, &f, 0.5).unwrap();
        assert_eq!(i, CVec::zeros(2));

        p.w = MeasureMatrix::constant(iv, linalg::identity(2));
        let f = L2Function::constant(iv, real_vector(&[0.0, 1.0]));
        let i = inhomogeneous_integral(&fm, &p, &f, 0.25).unwrap();
        assert!(linalg::vnorm(&(i - real_vector(&[0.0, 0.25]))) < 1e-15);
    }

    #[test]
    fn ivp_examples() {
        let iv = (0.0, 1.0);
        let p = Problem::new(sj(), MeasureMatrix::zero(2, iv), MeasureMatrix::zero(2, iv)).unwrap();
        let u0 = real_vector(&[0.3, -2.0]);
        let u = solve_ivp_regular(&p, iv, 0.0, &u0, None, 1e-9).unwrap();
        for x in [0.1, 0.5, 0.99] {
            assert!(linalg::vnorm(&(u.sample(x).unwrap() - &u0)) < 1e-15);
        }

        let p = delta_prime(2.0, 0.5);
        let u = solve_ivp_regular(&p, iv, 0.0, &real_vector(&[0.0, 1.0]), None, 1e-9).unwrap();
        assert!(linalg::vnorm(&(u.sample(0.25).unwrap() - real_vector(&[0.0, 1.0]))) < 1e-15);
        assert!(linalg::vnorm(&(u.sample(0.75).unwrap() - real_vector(&[2.0, 1.0]))) < 1e-14);
        assert!(linalg::vnorm(&(u.sample(0.5).unwrap() - real_vector(&[1.0, 1.0]))) < 1e-14);

        let j = CMat::from_element(1, 1, c(0.0, 1.0));
        let p = Problem::new(
            j,
            MeasureMatrix::constant(iv, real_matrix(1, 1, &[1.0])),
            MeasureMatrix::zero(1, iv),
        )
        .unwrap();
        let u = solve_ivp_regular(&p, iv, 0.0, &real_vector(&[1.0]), None, 1e-9).unwrap();
        for t in [0.2, 0.6, 1.0] {
            let v = u.sample(t).unwrap()[0];
            assert!((v - c(t.cos(), t.sin())).norm() < 1e-14);
        }
    }

    #[test]
    fn ivp_from_interior_balanced_value() {
        let p = delta_prime(2.0, 0.5);
        let u =
            solve_ivp_regular(&p, (0.0, 1.0), 0.5, &real_vector(&[1.0, 1.0]), None, 1e-9).unwrap();
        assert!(
            linalg::vnorm(&(u.evaluate(0.5, Side::Left).unwrap() - real_vector(&[0.0, 1.0])))
                < 1e-14
        );
        assert!(
            linalg::vnorm(&(u.evaluate(0.5, Side::Right).unwrap() - real_vector(&[2.0, 1.0])))
                < 1e-14
        );
        assert!(u.evaluate(0.0, Side::Left).is_err());
    }
}
