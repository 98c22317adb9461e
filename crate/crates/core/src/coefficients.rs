//! Coefficient data `(J, q, w)` for `Ju′ + qu = wf`.
//!
//! `q` and `w` are matrix-valued measures made of a piecewise-constant
//! density plus finitely many atoms. Anti-derivatives are normalized by
//! `Q(a) = 0` and are left-continuous.

use crate::checks::Check;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use serde::Serialize;

/// Which value to take at a point where a function of bounded variation jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Balanced,
}

/// Numerical thresholds used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Hermitian / PSD / skew-Hermitian defect bound for coefficient checks.
    pub structure: f64,
    /// `σ_min(B₊) ≤ tol_sing · max(1, σ_max(B₊))` marks a singular atom.
    pub sing: f64,
    /// Relative singular-value cutoff for rank decisions.
    pub rank: f64,
    /// Relative residual bound for consistency of least-squares solves.
    pub solve: f64,
    /// Regular atoms with `σ_min/σ_max` below this are flagged in reports.
    pub borderline: f64,
    /// Distance within which a vector is projected onto `ker B_m*` instead of rejected.
    pub projection: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            structure: 1e-10,
            sing: 1e-9,
            rank: 1e-10,
            solve: 1e-9,
            borderline: 1e-6,
            projection: 1e-6,
        }
    }
}

/// Matrix-valued measure on `(a, b)`: constant density on each
/// `(t_i, t_{i+1})` plus a finite, sorted list of atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureMatrix {
    n: usize,
    interval: (f64, f64),
    breakpoints: Vec<f64>,
    densities: Vec<CMat>,
    atoms: Vec<(f64, CMat)>,
}

impl MeasureMatrix {
    pub fn new(
        n: usize,
        interval: (f64, f64),
        breakpoints: Vec<f64>,
        densities: Vec<CMat>,
        atoms: Vec<(f64, CMat)>,
    ) -> Result<Self> {
        if breakpoints.len() != densities.len() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} breakpoints for {} density pieces",
                breakpoints.len(),
                densities.len()
            )));
        }
        for m in densities.iter().chain(atoms.iter().map(|(_, m)| m)) {
            if m.shape() != (n, n) {
                return Err(Error::DimensionMismatch(format!(
                    "expected {n}x{n}, found {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(Self {
            n,
            interval,
            breakpoints,
            densities,
            atoms,
        })
    }

    pub fn zero(n: usize, interval: (f64, f64)) -> Self {
        Self::constant(interval, linalg::zeros(n, n))
    }

    pub fn constant(interval: (f64, f64), density: CMat) -> Self {
        Self {
            n: density.nrows(),
            interval,
            breakpoints: vec![interval.0, interval.1],
            densities: vec![density],
            atoms: Vec::new(),
        }
    }

    /// Adds an atom, keeping positions sorted. Replaces an atom at the same position.
    pub fn with_atom(mut self, x: f64, m: CMat) -> Self {
        match self.atoms.binary_search_by(|(p, _)| p.total_cmp(&x)) {
            Ok(i) => self.atoms[i].1 = m,
            Err(i) => self.atoms.insert(i, (x, m)),
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn densities(&self) -> &[CMat] {
        &self.densities
    }

    pub fn atoms(&self) -> &[(f64, CMat)] {
        &self.atoms
    }

    /// Density on the piece containing `x`; at a breakpoint the piece to the right.
    pub fn density_at(&self, x: f64) -> &CMat {
        let idx = self.breakpoints[1..self.breakpoints.len() - 1]
            .iter()
            .take_while(|&&t| t <= x)
            .count();
        &self.densities[idx.min(self.densities.len() - 1)]
    }

    /// Atom positions in the open interval `(lo, hi)`.
    pub fn atoms_in(&self, lo: f64, hi: f64) -> impl Iterator<Item = &(f64, CMat)> {
        self.atoms.iter().filter(move |(x, _)| *x > lo && *x < hi)
    }

    /// Interior density breakpoints in the open interval `(lo, hi)`.
    pub fn breakpoints_in(&self, lo: f64, hi: f64) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints
            .iter()
            .copied()
            .filter(move |&t| t > lo && t < hi)
    }

    fn check_inside_open(&self, x: f64) -> Result<()> {
        let (a, b) = self.interval;
        if x > a && x < b {
            Ok(())
        } else {
            Err(Error::OutOfInterval { x, lo: a, hi: b })
        }
    }

    /// `Δ(x) = M⁺(x) − M⁻(x)`: the atom at exactly `x`, or zero.
    pub fn jump(&self, x: f64) -> Result<CMat> {
        self.check_inside_open(x)?;
        Ok(self
            .atom_at(x)
            .cloned()
            .unwrap_or_else(|| linalg::zeros(self.n, self.n)))
    }

    pub(crate) fn atom_at(&self, x: f64) -> Option<&CMat> {
        self.atoms.iter().find(|(p, _)| *p == x).map(|(_, m)| m)
    }

    /// Anti-derivative normalized by `M(a) = 0`.
    pub fn antiderivative(&self, x: f64, side: Side) -> Result<CMat> {
        let (a, b) = self.interval;
        if !(x >= a && x <= b) {
            return Err(Error::OutOfInterval { x, lo: a, hi: b });
        }
        let mut acc = linalg::zeros(self.n, self.n);
        for (k, d) in self.densities.iter().enumerate() {
            let lo = self.breakpoints[k];
            let hi = self.breakpoints[k + 1].min(x);
            if hi > lo {
                acc += d.scale(hi - lo);
            }
        }
        for (p, m) in &self.atoms {
            if *p < x {
                acc += m;
            } else if *p == x {
                match side {
                    Side::Left => {}
                    Side::Right => acc += m,
                    Side::Balanced => acc += m.scale(0.5),
                }
            }
        }
        Ok(acc)
    }

    fn structure_checks(&self) -> (bool, bool) {
        let (a, b) = self.interval;
        let bp = &self.breakpoints;
        let sorted = bp.first() == Some(&a)
            && bp.last() == Some(&b)
            && bp.windows(2).all(|w| w[0] < w[1])
            && self.atoms.windows(2).all(|w| w[0].0 < w[1].0);
        let interior = self.atoms.iter().all(|(x, _)| *x > a && *x < b);
        (sorted, interior)
    }

    fn max_defect(&self, f: impl Fn(&CMat) -> f64) -> f64 {
        self.densities
            .iter()
            .chain(self.atoms.iter().map(|(_, m)| m))
            .map(f)
            .fold(0.0, f64::max)
    }
}

/// `(J, q, w)` on a shared interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub j: CMat,
    pub q: MeasureMatrix,
    pub w: MeasureMatrix,
}

impl Problem {
    pub fn new(j: CMat, q: MeasureMatrix, w: MeasureMatrix) -> Result<Self> {
        let n = j.nrows();
        if j.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "J is {}x{}",
                j.nrows(),
                j.ncols()
            )));
        }
        if q.dim() != n || w.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "J is {n}x{n} but q is {0}x{0} and w is {1}x{1}",
                q.dim(),
                w.dim()
            )));
        }
        Ok(Self { j, q, w })
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.q.interval()
    }

    pub fn j_inverse(&self) -> Result<CMat> {
        linalg::inverse(&self.j).ok_or(Error::SingularJ)
    }

    /// `B₊(x) = J + Δq(x)/2`.
    pub fn b_plus(&self, x: f64) -> Result<CMat> {
        Ok(&self.j + self.q.jump(x)?.scale(0.5))
    }

    /// `B₋(x) = J − Δq(x)/2`.
    pub fn b_minus(&self, x: f64) -> Result<CMat> {
        Ok(&self.j - self.q.jump(x)?.scale(0.5))
    }

    /// Returns `InvalidProblem` listing every failed check.
    pub fn ensure_valid(&self, tol: f64) -> Result<()> {
        let report = validate(self, tol)?;
        if report.pass {
            Ok(())
        } else {
            Err(Error::InvalidProblem(
                report
                    .checks
                    .into_iter()
                    .filter(|c| !c.pass)
                    .map(|c| c.name)
                    .collect(),
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Structural hypotheses on the coefficients.
///
/// For "J invertible" the recorded value is `σ_min(J)` and the check passes
/// when it exceeds `tol`; all other entries are defects that must stay below `tol`.
pub fn validate(problem: &Problem, tol: f64) -> Result<ValidationReport> {
    let n = problem.dim();
    if problem.j.shape() != (n, n) || problem.q.dim() != n || problem.w.dim() != n {
        return Err(Error::DimensionMismatch(
            "coefficients disagree on n".into(),
        ));
    }
    let (smin, _) = linalg::sigma_extremes(&problem.j);
    let skew = linalg::skew_defect(&problem.j);
    let herm = problem.q.max_defect(linalg::hermitian_defect);
    let psd = problem
        .w
        .max_defect(|m| linalg::hermitian_defect(m).max(-linalg::min_hermitian_eigenvalue(m)))
        .max(0.0);
    let (q_sorted, q_interior) = problem.q.structure_checks();
    let (w_sorted, w_interior) = problem.w.structure_checks();
    let same_interval = problem.q.interval() == problem.w.interval();
    let flag = |ok: bool| if ok { 0.0 } else { 1.0 };

    let checks = vec![
        Check::lower_bound("J invertible", smin, tol),
        Check::upper_bound("J skew-Hermitian", skew, tol),
        Check::upper_bound("q Hermitian", herm, tol),
        Check::upper_bound("w PSD", psd, tol),
        Check::upper_bound(
            "breakpoints sorted",
            flag(q_sorted && w_sorted && same_interval),
            0.0,
        ),
        Check::upper_bound("atoms interior", flag(q_interior && w_interior), 0.0),
    ];
    let pass = checks.iter().all(|c| c.pass);
    Ok(ValidationReport { checks, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real_matrix};

    fn symplectic_j() -> CMat {
        real_matrix(2, 2, &[0.0, -1.0, 1.0, 0.0])
    }

    fn free_problem() -> Problem {
        let iv = (-1.0, 1.0);
        Problem::new(
            symplectic_j(),
            MeasureMatrix::zero(2, iv),
            MeasureMatrix::zero(2, iv),
        )
        .unwrap()
    }

    fn failed(report: &ValidationReport) -> Vec<&str> {
        report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect()
    }

    #[test]
    fn canonical_j_with_zero_measures_passes() {
        let r = validate(&free_problem(), 1e-10).unwrap();
        assert!(r.pass, "{:?}", r);
        assert_eq!(r.checks.len(), 6);
    }

    #[test]
    fn identity_j_is_not_skew() {
        let mut p = free_problem();
        p.j = linalg::identity(2);
        let r = validate(&p, 1e-10).unwrap();
        assert_eq!(failed(&r), vec!["J skew-Hermitian"]);
    }

    #[test]
    fn negative_w_atom_fails_psd() {
        let mut p = free_problem();
        p.w =
            p.w.with_atom(0.0, real_matrix(2, 2, &[-1.0, 0.0, 0.0, 0.0]));
        let r = validate(&p, 1e-10).unwrap();
        assert_eq!(failed(&r), vec!["w PSD"]);
    }

    #[test]
    fn non_hermitian_q_and_exterior_atom_fail() {
        let mut p = free_problem();
        p.q = p.q.with_atom(0.2, real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        p.w = p.w.with_atom(1.0, linalg::identity(2));
        let r = validate(&p, 1e-10).unwrap();
        assert_eq!(failed(&r), vec!["q Hermitian", "atoms interior"]);
        assert!(p.ensure_valid(1e-10).is_err());
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let iv = (0.0, 1.0);
        let err = Problem::new(
            symplectic_j(),
            MeasureMatrix::zero(3, iv),
            MeasureMatrix::zero(2, iv),
        );
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
        let err = MeasureMatrix::new(2, iv, vec![0.0, 1.0], vec![linalg::zeros(3, 3)], vec![]);
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn jump_is_exact_lookup() {
        let a = real_matrix(2, 2, &[0.0, 2.0, 2.0, 0.0]);
        let m = MeasureMatrix::zero(2, (-1.0, 1.0)).with_atom(0.0, a.clone());
        assert_eq!(m.jump(0.0).unwrap(), a);
        assert_eq!(m.jump(0.3).unwrap(), linalg::zeros(2, 2));
        assert!(matches!(m.jump(1.0), Err(Error::OutOfInterval { .. })));
    }

    #[test]
    fn delta_prime_atom_sits_in_second_diagonal_slot() {
        let beta = 1.7;
        let m = MeasureMatrix::zero(2, (-1.0, 1.0))
            .with_atom(0.0, real_matrix(2, 2, &[0.0, 0.0, 0.0, -beta]));
        assert_eq!(
            m.jump(0.0).unwrap(),
            real_matrix(2, 2, &[0.0, 0.0, 0.0, -beta])
        );
    }

    #[test]
    fn antiderivative_conventions() {
        let z = MeasureMatrix::zero(2, (0.0, 1.0));
        assert_eq!(
            z.antiderivative(0.4, Side::Balanced).unwrap(),
            linalg::zeros(2, 2)
        );

        let d = real_matrix(2, 2, &[1.0, 2.0, 2.0, -3.0]);
        let m = MeasureMatrix::constant((0.0, 1.0), d.clone());
        let q = m.antiderivative(0.5, Side::Left).unwrap();
        assert!(linalg::fro(&(q - d.scale(0.5))) < 1e-15);

        let a = real_matrix(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let m = MeasureMatrix::zero(2, (0.0, 1.0)).with_atom(0.5, a.clone());
        assert_eq!(
            m.antiderivative(0.5, Side::Left).unwrap(),
            linalg::zeros(2, 2)
        );
        assert_eq!(m.antiderivative(0.5, Side::Right).unwrap(), a);
        assert_eq!(m.antiderivative(0.5, Side::Balanced).unwrap(), a.scale(0.5));
        assert!(m.antiderivative(1.5, Side::Left).is_err());
    }

    #[test]
    fn mass_is_conserved_at_the_right_end() {
        let m = MeasureMatrix::new(
            1,
            (0.0, 2.0),
            vec![0.0, 0.5, 2.0],
            vec![real_matrix(1, 1, &[2.0]), real_matrix(1, 1, &[-1.0])],
            vec![
                (0.3, real_matrix(1, 1, &[0.25])),
                (1.9, real_matrix(1, 1, &[4.0])),
            ],
        )
        .unwrap();
        let total = m.antiderivative(2.0, Side::Left).unwrap()[(0, 0)];
        assert!((total - c(1.0 - 1.5 + 0.25 + 4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn b_plus_b_minus_examples() {
        let mut p = free_problem();
        assert_eq!(p.b_plus(0.1).unwrap(), symplectic_j());
        assert_eq!(p.b_minus(0.1).unwrap(), symplectic_j());

        p.q = p.q.with_atom(0.0, real_matrix(2, 2, &[0.0, 2.0, 2.0, 0.0]));
        let bp = p.b_plus(0.0).unwrap();
        let bm = p.b_minus(0.0).unwrap();
        assert_eq!(bp, real_matrix(2, 2, &[0.0, 0.0, 2.0, 0.0]));
        assert_eq!(bm, real_matrix(2, 2, &[0.0, -2.0, 0.0, 0.0]));
        assert!(bp.determinant().norm() == 0.0);

        let beta = 3.0;
        p.q = MeasureMatrix::zero(2, (-1.0, 1.0))
            .with_atom(0.0, real_matrix(2, 2, &[0.0, 0.0, 0.0, -beta]));
        let bp = p.b_plus(0.0).unwrap();
        assert_eq!(bp, real_matrix(2, 2, &[0.0, -1.0, 1.0, -1.5]));
        assert!((bp.determinant() - c(1.0, 0.0)).norm() < 1e-15);
    }
}
