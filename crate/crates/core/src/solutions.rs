//! Affine solution sets of `Bũ = 𝓡(f) − 𝓑*𝓤𝓙⁻¹𝓘(f)`, lifts of `ker B_m*`
//! vectors to homogeneous solutions, and the compactly supported solutions
//! coming from `ker B*`.

use crate::blocksystem::{BlockSystem, MomentVectors};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::propagation::PiecewiseSolution;
use crate::relations;

#[derive(Debug, Clone)]
pub struct SolutionSet {
    pub consistent: bool,
    /// `‖Bũ − rhs‖` for the minimum-norm least-squares `ũ`.
    pub residual: f64,
    /// Minimum-norm least-squares `ũ = (c_0, …, c_N)`.
    pub coefficients: CVec,
    pub particular: Option<PiecewiseSolution>,
    /// Orthonormal basis of `ker B`, column by column.
    pub kernel_vectors: CMat,
    pub kernel_basis: Vec<PiecewiseSolution>,
}

impl SolutionSet {
    pub fn kernel_dim(&self) -> usize {
        self.kernel_vectors.ncols()
    }
}

/// Minimum-norm solve of the block system plus a basis of the homogeneous solutions.
/// An inconsistent system is a legitimate outcome and is reported through `consistent`.
pub fn solve_system(bs: &BlockSystem, mv: &MomentVectors) -> Result<SolutionSet> {
    let tol = bs.tolerances;
    let coefficients = linalg::lstsq_min_norm(&bs.b, &mv.rhs, tol.rank);
    let residual = linalg::vnorm(&(&bs.b * &coefficients - &mv.rhs));
    let consistent = residual <= tol.solve * (1.0 + linalg::vnorm(&mv.rhs));
    let particular = if consistent {
        Some(bs.reconstruct(&coefficients, Some(&mv.f))?)
    } else {
        None
    };
    let kernel_vectors = bs.kernel();
    let kernel_basis = kernel_vectors
        .column_iter()
        .map(|col| bs.reconstruct(&col.into_owned(), None))
        .collect::<Result<Vec<_>>>()?;
    Ok(SolutionSet {
        consistent,
        residual,
        coefficients,
        particular,
        kernel_vectors,
        kernel_basis,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lift {
    /// The input after projection onto the computed `ker B_m*`.
    pub hat: CVec,
    /// `ũ` with `Bũ = 0` and `Cũ = û`.
    pub tilde: CVec,
    /// Disagreement of the two explicit assignments on `c_1, …, c_{N−1}`.
    pub overlap_defect: f64,
}

/// Projects `û` onto `ker B_m*` (rejecting it if it is further than the
/// projection tolerance) and returns the projection with its distance.
pub fn certify_in_cokernel_m(bs: &BlockSystem, hat: &CVec) -> Result<(CVec, f64)> {
    let nn = bs.n() * bs.interior_count();
    if hat.len() != nn {
        return Err(Error::DimensionMismatch(format!(
            "expected a vector of length {nn}, found {}",
            hat.len()
        )));
    }
    let basis = bs.cokernel_m();
    let proj = linalg::project(&basis, hat);
    let distance = linalg::vnorm(&(hat - &proj));
    if distance > bs.tolerances.projection * linalg::vnorm(hat).max(1.0) {
        return Err(Error::NotInKernel { distance });
    }
    Ok((proj, distance))
}

/// The unique `ũ` with `Bũ = 0` and `Cũ = û` for `û ∈ ker B_m*`, from
/// `E_⊤ũ = −𝓙⁻¹𝓑*û` and `E_⊥ũ = 𝓙⁻¹𝓤*𝓑û`.
pub fn lift_kernel_vector(bs: &BlockSystem, hat: &CVec) -> Result<Lift> {
    let n = bs.n();
    let nn = bs.interior_count();
    let (hat, _) = certify_in_cokernel_m(bs, hat)?;
    let jinv = bs.script_j_inverse();
    let top = -(&jinv * bs.script_b.adjoint() * &hat);
    let bottom = &jinv * bs.script_u.adjoint() * &bs.script_b * &hat;

    let overlap_defect = if nn > 1 {
        linalg::vnorm(&(top.rows(0, n * (nn - 1)) - bottom.rows(n, n * (nn - 1))))
    } else {
        0.0
    };
    let scale = linalg::vnorm(&top)
        .max(linalg::vnorm(&bottom))
        .max(linalg::vnorm(&hat))
        .max(1.0);
    if overlap_defect > 10.0 * bs.tolerances.rank * scale {
        return Err(Error::InconsistentLift {
            defect: overlap_defect,
        });
    }

    let mut tilde = CVec::zeros(n * (nn + 1));
    tilde.rows_mut(0, n).copy_from(&bottom.rows(0, n));
    for k in 1..nn {
        let avg = (top.rows((k - 1) * n, n) + bottom.rows(k * n, n)).scale(0.5);
        tilde.rows_mut(k * n, n).copy_from(&avg);
    }
    tilde
        .rows_mut(nn * n, n)
        .copy_from(&top.rows((nn - 1) * n, n));
    Ok(Lift {
        hat,
        tilde,
        overlap_defect,
    })
}

/// Homogeneous solution that vanishes outside `[x_1, x_N]`.
#[derive(Debug, Clone)]
pub struct CompactSolution {
    /// Basis vector of `ker B*`, scaled so its largest entry is `1`.
    pub hat: CVec,
    pub tilde: CVec,
    /// `‖c_0‖ + ‖c_N‖` before they were set to zero.
    pub endpoint_defect: f64,
    pub solution: PiecewiseSolution,
}

/// One compactly supported solution per basis vector of `ker B*`.
pub fn compact_support_solutions(bs: &BlockSystem) -> Result<Vec<CompactSolution>> {
    let n = bs.n();
    let nn = bs.interior_count();
    bs.cokernel()
        .column_iter()
        .map(|col| {
            let hat = linalg::normalize_phase(&col.into_owned());
            let lift = lift_kernel_vector(bs, &hat)?;
            let mut tilde = lift.tilde;
            let endpoint_defect = linalg::vnorm(&tilde.rows(0, n).into_owned())
                + linalg::vnorm(&tilde.rows(nn * n, n).into_owned());
            let scale = linalg::vnorm(&tilde).max(1.0);
            if endpoint_defect > 10.0 * bs.tolerances.rank * scale {
                return Err(Error::LiftEndpointNonzero {
                    defect: endpoint_defect,
                });
            }
            tilde.rows_mut(0, n).fill(linalg::ZERO);
            tilde.rows_mut(nn * n, n).fill(linalg::ZERO);
            let solution = bs.reconstruct(&tilde, None)?;
            Ok(CompactSolution {
                hat: lift.hat,
                tilde,
                endpoint_defect,
                solution,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalIdentity {
    /// `û*𝓕(f)`
    pub lhs: C64,
    /// `∫_{(x_0, x_{N+1})} u*wf`
    pub rhs: C64,
    pub defect: f64,
}

/// Compares `û*𝓕(f)` with `∫ u*wf` for the homogeneous solution `u` lifted from `û`.
pub fn functional_identity(
    bs: &BlockSystem,
    mv: &MomentVectors,
    hat: &CVec,
) -> Result<FunctionalIdentity> {
    let lift = lift_kernel_vector(bs, hat)?;
    let u = bs.reconstruct(&lift.tilde, None)?;
    let lhs = lift.hat.dotc(&mv.functional);
    let rhs = relations::inner_product(&bs.problem.w, &u, &mv.f)?;
    Ok(FunctionalIdentity {
        lhs,
        rhs,
        defect: (lhs - rhs).norm(),
    })
}

pub fn functional_identity_defect(bs: &BlockSystem, mv: &MomentVectors, hat: &CVec) -> Result<f64> {
    functional_identity(bs, mv, hat).map(|r| r.defect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocksystem::assemble_window;
    use crate::coefficients::{MeasureMatrix, Problem, Side, Tolerances};
    use crate::l2::L2Function;
    use crate::linalg::{fro, real_matrix, real_vector, vnorm};

    fn sj() -> CMat {
        real_matrix(2, 2, &[0.0, -1.0, 1.0, 0.0])
    }

    fn two_atoms(second: [f64; 4]) -> Problem {
        let iv = (-1.0, 1.0);
        Problem::new(
            sj(),
            MeasureMatrix::zero(2, iv)
                .with_atom(-0.5, real_matrix(2, 2, &[0.0, 2.0, 2.0, 0.0]))
                .with_atom(0.5, real_matrix(2, 2, &second)),
            MeasureMatrix::zero(2, iv),
        )
        .unwrap()
    }

    fn instance_a() -> Problem {
        two_atoms([0.0, -2.0, -2.0, 0.0])
    }

    fn instance_b() -> Problem {
        two_atoms([0.0, 2.0, 2.0, 0.0])
    }

    fn system(p: &Problem) -> BlockSystem {
        assemble_window(p, (-1.0, 1.0), &[], &Tolerances::default()).unwrap()
    }

    #[test]
    fn free_problem_kernel_is_constants() {
        let iv = (-1.0, 1.0);
        let p = Problem::new(sj(), MeasureMatrix::zero(2, iv), MeasureMatrix::zero(2, iv)).unwrap();
        let bs = system(&p);
        let mv = bs.moments(&L2Function::zero(2, iv)).unwrap();
        let set = solve_system(&bs, &mv).unwrap();
        assert!(set.consistent);
        assert_eq!(set.kernel_dim(), 2);
        assert_eq!(vnorm(&set.coefficients), 0.0);
        for u in &set.kernel_basis {
            let v0 = u.sample(-0.9).unwrap();
            for x in [-0.5, 0.0, 0.3, 0.95] {
                assert!(vnorm(&(u.sample(x).unwrap() - &v0)) < 1e-14);
            }
        }
        assert!(compact_support_solutions(&bs).unwrap().is_empty());
    }

    #[test]
    fn instance_b_solutions_split_left_and_right() {
        let bs = system(&instance_b());
        let mv = bs.moments(&L2Function::zero(2, (-1.0, 1.0))).unwrap();
        let set = solve_system(&bs, &mv).unwrap();
        assert_eq!(set.kernel_dim(), 2);
        for u in &set.kernel_basis {
            assert!(u.sample(-0.75).unwrap()[1].norm() < 1e-14);
            assert!(u.sample(0.75).unwrap()[0].norm() < 1e-14);
        }
        assert!(compact_support_solutions(&bs).unwrap().is_empty());
    }

    #[test]
    fn instance_a_lift_and_compact_solution() {
        let bs = system(&instance_a());
        let hat = real_vector(&[0.0, 1.0, 0.0, 1.0]);
        let lift = lift_kernel_vector(&bs, &hat).unwrap();
        assert!(vnorm(&(&lift.tilde - real_vector(&[0.0, 0.0, 0.0, 2.0, 0.0, 0.0]))) < 1e-14);
        assert!(vnorm(&(&bs.b * &lift.tilde)) < 1e-14);
        assert!(vnorm(&(&bs.c * &lift.tilde - &hat)) < 1e-14);

        let compact = compact_support_solutions(&bs).unwrap();
        assert_eq!(compact.len(), 1);
        let u = &compact[0].solution;
        assert!(vnorm(&(u.sample(0.0).unwrap() - real_vector(&[0.0, 2.0]))) < 1e-14);
        for x in [-0.5, 0.5] {
            assert!(
                vnorm(&(u.evaluate(x, Side::Balanced).unwrap() - real_vector(&[0.0, 1.0]))) < 1e-14
            );
        }
        for x in [-0.9, -0.6, 0.6, 0.99] {
            assert_eq!(vnorm(&u.sample(x).unwrap()), 0.0);
        }
    }

    #[test]
    fn zero_lifts_to_zero() {
        let bs = system(&instance_a());
        let lift = lift_kernel_vector(&bs, &CVec::zeros(4)).unwrap();
        assert_eq!(vnorm(&lift.tilde), 0.0);
    }

    #[test]
    fn constant_solution_of_free_problem_lifts() {
        let iv = (-1.0, 1.0);
        let p = Problem::new(sj(), MeasureMatrix::zero(2, iv), MeasureMatrix::zero(2, iv)).unwrap();
        let bs = system(&p);
        let hat = real_vector(&[1.0, 0.0, 1.0, 0.0]);
        assert!(vnorm(&(bs.b_m.adjoint() * &hat)) < 1e-15);
        let lift = lift_kernel_vector(&bs, &hat).unwrap();
        assert!(vnorm(&(lift.tilde - real_vector(&[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]))) < 1e-14);
    }

    #[test]
    fn vectors_far_from_the_cokernel_are_rejected() {
        let bs = system(&instance_a());
        let err = lift_kernel_vector(&bs, &real_vector(&[0.0, 1.0, 0.0, -1.0]));
        assert!(matches!(err, Err(Error::NotInKernel { .. })));
        assert!(matches!(
            lift_kernel_vector(&bs, &real_vector(&[1.0])),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn functional_identity_on_instance_a() {
        let mut p = instance_a();
        p.w = MeasureMatrix::zero(2, (-1.0, 1.0)).with_atom(0.0, linalg::identity(2));
        let bs = system(&p);
        let f = L2Function::constant((-1.0, 1.0), real_vector(&[1.0, 1.0]));
        let mv = bs.moments(&f).unwrap();
        let r = functional_identity(&bs, &mv, &real_vector(&[0.0, 1.0, 0.0, 1.0])).unwrap();
        assert!((r.lhs - linalg::c(2.0, 0.0)).norm() < 1e-13);
        assert!(r.defect < 1e-12);
        assert_eq!(
            functional_identity_defect(&bs, &mv, &CVec::zeros(4)).unwrap(),
            0.0
        );
    }

    #[test]
    fn particular_solution_reproduces_rhs() {
        let iv = (-1.0, 1.0);
        let p = Problem::new(
            sj(),
            MeasureMatrix::constant(iv, real_matrix(2, 2, &[0.5, 0.1, 0.1, -0.3]))
                .with_atom(0.1, real_matrix(2, 2, &[0.0, 0.0, 0.0, -2.0])),
            MeasureMatrix::constant(iv, real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]))
                .with_atom(0.1, linalg::identity(2)),
        )
        .unwrap();
        let bs = system(&p);
        let f = L2Function::new(
            2,
            vec![-1.0, 0.0, 1.0],
            vec![real_vector(&[1.0, -1.0]), real_vector(&[0.5, 2.0])],
            vec![(0.1, real_vector(&[3.0, 1.0]))],
        )
        .unwrap();
        let mv = bs.moments(&f).unwrap();
        let set = solve_system(&bs, &mv).unwrap();
        assert!(set.consistent);
        let u = set.particular.unwrap();
        let tilde = linalg::stack(
            &bs.partition.points()[..bs.partition.points().len() - 1]
                .iter()
                .map(|&x| u.evaluate(x, Side::Right).unwrap())
                .collect::<Vec<_>>(),
        );
        assert!(vnorm(&(&bs.b * tilde - &mv.rhs)) < 1e-12);
        assert!(fro(&(bs.script_u.adjoint() * &bs.script_j * &bs.script_u - &bs.script_j)) < 1e-12);
    }
}
