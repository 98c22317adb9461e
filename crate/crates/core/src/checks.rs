//! Named numerical checks and the identity suites run by `verify`.

use crate::blocksystem::BlockSystem;
use crate::coefficients::Side;
use crate::error::{Error, Result};
use crate::fuzz;
use crate::l2::L2Function;
use crate::linalg::{self, c, CMat, CVec, C64};
use crate::propagation::PiecewiseSolution;
use crate::relations::{self, T0Outcome, WeightedField};
use crate::solutions;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::str::FromStr;

/// One row of a check table. For most checks `defect` must stay at or below
/// `tolerance`; lower-bound checks (such as invertibility) pass when it exceeds it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub defect: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn upper_bound(name: impl Into<String>, defect: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            defect,
            tolerance,
            pass: defect <= tolerance,
        }
    }

    pub fn lower_bound(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            defect: value,
            tolerance,
            pass: value > tolerance,
        }
    }
}

impl Check {
    /// A check that could not be evaluated because the computation itself failed.
    pub fn errored(name: impl Into<String>, error: &Error) -> Self {
        Self {
            name: format!("{}: {error}", name.into()),
            defect: f64::INFINITY,
            tolerance: 0.0,
            pass: false,
        }
    }

    /// Integer bookkeeping: passes iff `found == expected`.
    pub fn count(name: impl Into<String>, found: usize, expected: usize) -> Self {
        Self::upper_bound(name, found.abs_diff(expected) as f64, 0.0)
    }
}

/// The identity suites understood by `verify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    Cbbc,
    Wronskian,
    Lift,
    Functional,
    Lagrange,
    T0,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Cbbc,
        Suite::Wronskian,
        Suite::Lift,
        Suite::Functional,
        Suite::Lagrange,
        Suite::T0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Cbbc => "cbbc",
            Suite::Wronskian => "wronskian",
            Suite::Lift => "lift",
            Suite::Functional => "functional",
            Suite::Lagrange => "lagrange",
            Suite::T0 => "t0",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown check suite '{s}'")))
    }
}

pub const WRONSKIAN_SAMPLES: usize = 64;

/// Runs `suites` on one block system. `f` is used where a right-hand side is
/// needed; otherwise random step functions are drawn from `rng`.
pub fn run_suites(
    bs: &BlockSystem,
    f: Option<&L2Function>,
    suites: &[Suite],
    rng: &mut ChaCha8Rng,
) -> Vec<Check> {
    let mut out = Vec::new();
    for &suite in suites {
        let result = match suite {
            Suite::Cbbc => Ok(cbbc(bs)),
            Suite::Wronskian => wronskian(bs),
            Suite::Lift => lift(bs, rng),
            Suite::Functional => functional(bs, f, rng),
            Suite::Lagrange => lagrange(bs, rng),
            Suite::T0 => t0(bs, f, rng),
        };
        match result {
            Ok(checks) => out.extend(checks),
            Err(e) => out.push(Check::errored(suite.name(), &e)),
        }
    }
    out
}

/// `C*B − B*C = diag(−J, 0, …, 0, J)`, the same with `B_m`, `C_m`, rank
/// bookkeeping, and `𝓤*𝓙𝓤 = 𝓙`.
pub fn cbbc(bs: &BlockSystem) -> Vec<Check> {
    let n = bs.n();
    let nn = bs.interior_count();
    let mut target = linalg::zeros(n * (nn + 1), n * (nn + 1));
    target.view_mut((0, 0), (n, n)).copy_from(&(-&bs.problem.j));
    target
        .view_mut((n * nn, n * nn), (n, n))
        .copy_from(&bs.problem.j);
    let lhs = bs.c.adjoint() * &bs.b - bs.b.adjoint() * &bs.c;
    let reduced = bs.c_m.adjoint() * &bs.b - bs.b_m.adjoint() * &bs.c;
    let symplectic = bs.script_u.adjoint() * &bs.script_j * &bs.script_u - &bs.script_j;
    let ker = bs.kernel().ncols();
    let coker = bs.cokernel().ncols();
    vec![
        Check::upper_bound(
            "cbbc: C*B - B*C - diag(-J,0,...,0,J)",
            linalg::fro(&(lhs - target)),
            1e-10,
        ),
        Check::upper_bound("cbbc: C_m*B - B_m*C", linalg::fro(&reduced), 1e-10),
        Check::upper_bound(
            "cbbc: U*JU - J (block diagonal)",
            linalg::fro(&symplectic),
            1e-10,
        ),
        Check::count("cbbc: dim ker B >= n", ker.max(n), ker),
        Check::count("cbbc: dim ker B - n - dim ker B*", ker, n + coker),
    ]
}

/// `U⁻*JU⁻ = J` at evenly spaced points of every fundamental matrix and
/// `T*JT = J` for every atom transfer.
pub fn wronskian(bs: &BlockSystem) -> Result<Vec<Check>> {
    let j = &bs.problem.j;
    let mut worst_u: f64 = 0.0;
    let mut worst_t: f64 = 0.0;
    for fm in &bs.fundamentals {
        let (lo, hi) = fm.interval();
        for k in 0..WRONSKIAN_SAMPLES {
            let x = lo + (k as f64 + 0.5) / WRONSKIAN_SAMPLES as f64 * (hi - lo);
            let u = fm.evaluate(x, Side::Left)?;
            worst_u = worst_u.max(linalg::fro(&(u.adjoint() * j * &u - j)));
        }
        for t in fm.transfers().iter().filter(|t| t.is_atom) {
            worst_t = worst_t.max(linalg::fro(&(t.matrix.adjoint() * j * &t.matrix - j)));
        }
    }
    Ok(vec![
        Check::upper_bound("wronskian: U(x-)*JU(x-) - J", worst_u, 1e-10),
        Check::upper_bound("wronskian: T*JT - J", worst_t, 1e-10),
    ])
}

fn random_coefficients(rng: &mut impl Rng, k: usize) -> CVec {
    fuzz::random_vector(rng, k, 1.0)
}

/// Relative scale used for lift tolerances.
fn lift_scale(bs: &BlockSystem, tilde: &CVec) -> f64 {
    linalg::fro(&bs.b).max(1.0) * (1.0 + linalg::vnorm(tilde))
}

/// Lifts of `ker B_m*`: `Bũ = 0`, `Cũ = û`, linearity, and the compactly
/// supported solutions coming from `ker B*`.
pub fn lift(bs: &BlockSystem, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let n = bs.n();
    let nn = bs.interior_count();
    let basis = bs.cokernel_m();
    let mut bu: f64 = 0.0;
    let mut cu: f64 = 0.0;
    for col in basis.column_iter() {
        let l = solutions::lift_kernel_vector(bs, &col.into_owned())?;
        let s = lift_scale(bs, &l.tilde);
        bu = bu.max(linalg::vnorm(&(&bs.b * &l.tilde)) / s);
        cu = cu.max(linalg::vnorm(&(&bs.c * &l.tilde - &l.hat)) / s);
    }

    let u_hat = &basis * random_coefficients(rng, basis.ncols());
    let v_hat = &basis * random_coefficients(rng, basis.ncols());
    let alpha = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let lu = solutions::lift_kernel_vector(bs, &u_hat)?;
    let lv = solutions::lift_kernel_vector(bs, &v_hat)?;
    let lc = solutions::lift_kernel_vector(bs, &(&u_hat * alpha + &v_hat))?;
    let linear =
        linalg::vnorm(&(&lc.tilde - &lu.tilde * alpha - &lv.tilde)) / lift_scale(bs, &lc.tilde);

    let compact = solutions::compact_support_solutions(bs)?;
    let ker = bs.kernel().ncols();
    let points = bs.partition.points();
    let (x1, xn) = (points[1], points[nn]);
    let (lo, hi) = bs.partition.window();
    let mut endpoint: f64 = 0.0;
    let mut jump: f64 = 0.0;
    let mut outside: f64 = 0.0;
    for cs in &compact {
        endpoint = endpoint.max(cs.endpoint_defect / lift_scale(bs, &cs.tilde));
        let u = &cs.solution;
        let scale = 1.0 + linalg::vnorm(&cs.tilde);
        for (k, &x) in bs.partition.interior().iter().enumerate() {
            let d = &bs.b_plus[k] * u.evaluate(x, Side::Right)?
                - &bs.b_minus[k] * u.evaluate(x, Side::Left)?;
            jump = jump.max(linalg::vnorm(&d) / scale);
        }
        for k in 0..16 {
            let t = (k as f64 + 0.5) / 16.0;
            outside = outside.max(linalg::vnorm(&u.sample(lo + t * (x1 - lo))?));
            outside = outside.max(linalg::vnorm(&u.sample(xn + t * (hi - xn))?));
        }
    }
    Ok(vec![
        Check::upper_bound("lift: B u~ (relative)", bu, 1e-12),
        Check::upper_bound("lift: C u~ - u^ (relative)", cu, 1e-12),
        Check::upper_bound("lift: linearity (relative)", linear, 1e-12),
        Check::count(
            "lift: compact solutions = dim ker B - n",
            compact.len(),
            ker.saturating_sub(n),
        ),
        Check::upper_bound("lift: compact endpoint values (relative)", endpoint, 1e-12),
        Check::upper_bound("lift: compact jump condition", jump, 1e-10),
        Check::upper_bound("lift: compact support outside [x_1, x_N]", outside, 0.0),
    ])
}

/// `√⟨f, f⟩` in `L²(w)` over the system window.
pub fn weighted_norm(bs: &BlockSystem, f: &dyn WeightedField) -> Result<f64> {
    let (lo, hi) = bs.partition.window();
    let w = &bs.problem.w;
    let ip = restricted_inner_product(w, (lo, hi), f, f)?;
    Ok(ip.re.max(0.0).sqrt())
}

fn restricted_inner_product(
    w: &crate::coefficients::MeasureMatrix,
    window: (f64, f64),
    u: &dyn WeightedField,
    v: &dyn WeightedField,
) -> Result<C64> {
    struct Window<'a>(&'a dyn WeightedField, (f64, f64));
    impl WeightedField for Window<'_> {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn window(&self) -> (f64, f64) {
            self.1
        }
        fn exact_window(&self) -> bool {
            true
        }
        fn knots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
            self.0.knots_in(lo, hi)
        }
        fn point_value(&self, x: f64) -> Result<CVec> {
            self.0.point_value(x)
        }
        fn affine_piece(&self, lo: f64, hi: f64) -> Result<(CMat, CVec)> {
            self.0.affine_piece(lo, hi)
        }
    }
    relations::inner_product(w, &Window(u, window), &Window(v, window))
}

fn rhs_for(bs: &BlockSystem, f: Option<&L2Function>, rng: &mut ChaCha8Rng) -> L2Function {
    f.cloned()
        .unwrap_or_else(|| fuzz::random_rhs(rng, &bs.problem))
}

/// `û*𝓕(f) = ∫ u*wf` for a random `û ∈ ker B_m*`.
pub fn functional(
    bs: &BlockSystem,
    f: Option<&L2Function>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Check>> {
    let f = rhs_for(bs, f, rng);
    let mv = bs.moments(&f)?;
    let basis = bs.cokernel_m();
    let hat = &basis * random_coefficients(rng, basis.ncols());
    let id = solutions::functional_identity(bs, &mv, &hat)?;
    let tol = 1e-9 * (1.0 + weighted_norm(bs, &f)?) * (1.0 + linalg::vnorm(&hat));
    Ok(vec![Check::upper_bound(
        "functional: u^*F(f) - <u,f>",
        id.defect,
        tol,
    )])
}

/// A random element `(u, f)` of the maximal relation on the window: a particular
/// solution plus a random homogeneous one, or a homogeneous solution with `f = 0`
/// when the drawn `f` admits no solution.
pub fn random_pair(
    bs: &BlockSystem,
    rng: &mut ChaCha8Rng,
) -> Result<(PiecewiseSolution, L2Function)> {
    let f = fuzz::random_rhs(rng, &bs.problem);
    let mv = bs.moments(&f)?;
    let set = solutions::solve_system(bs, &mv)?;
    let beta = random_coefficients(rng, set.kernel_dim());
    let homogeneous = &set.kernel_vectors * beta;
    if set.consistent {
        let tilde = &set.coefficients + homogeneous;
        Ok((bs.reconstruct(&tilde, Some(&f))?, f))
    } else {
        let zero = L2Function::zero(bs.n(), bs.problem.interval());
        Ok((bs.reconstruct(&homogeneous, None)?, zero))
    }
}

/// Lagrange's identity on random pairs, and the boundary-free pairing for
/// compactly supported homogeneous solutions.
pub fn lagrange(bs: &BlockSystem, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut worst: f64 = 0.0;
    for _ in 0..2 {
        let (u, f) = random_pair(bs, rng)?;
        let (v, g) = random_pair(bs, rng)?;
        worst = worst.max(relations::lagrange_check(&bs.problem, (&u, &f), (&v, &g))?.defect);
    }
    let mut compact_worst: f64 = 0.0;
    let zero = L2Function::zero(bs.n(), bs.problem.interval());
    for cs in solutions::compact_support_solutions(bs)? {
        let (v, g) = random_pair(bs, rng)?;
        let lhs = relations::inner_product(&bs.problem.w, &v, &zero)?
            - relations::inner_product(&bs.problem.w, &g, &cs.solution)?;
        compact_worst = compact_worst.max(lhs.norm());
    }
    Ok(vec![
        Check::upper_bound("lagrange: <v,f> - <g,u> - boundary terms", worst, 1e-8),
        Check::upper_bound("lagrange: compact u, <v,f> - <g,u>", compact_worst, 1e-8),
    ])
}

/// Threshold above which `𝓕(f)` is considered to have left `ran B_m`.
pub const T0_PROJECTION_THRESHOLD: f64 = 1e-6;

/// Builds a random step function with `𝓕(f) ⊥ ker B_m*`, so that `t0_solve` must succeed.
pub fn solvable_rhs(bs: &BlockSystem, rng: &mut ChaCha8Rng) -> Result<L2Function> {
    let basis = bs.cokernel_m();
    let k = basis.ncols() + 2;
    let candidates: Vec<L2Function> = (0..k).map(|_| fuzz::random_rhs(rng, &bs.problem)).collect();
    let mut moments = linalg::zeros(basis.ncols(), k);
    for (i, f) in candidates.iter().enumerate() {
        let mv = bs.moments(f)?;
        moments.set_column(i, &(basis.adjoint() * &mv.functional));
    }
    let alpha = linalg::nullspace(&moments, bs.tolerances.rank);
    let alpha = alpha.column(0);
    let mut f = candidates[0].scale(alpha[0]);
    for (i, g) in candidates.iter().enumerate().skip(1) {
        f = f.add(&g.scale(alpha[i]))?;
    }
    Ok(f)
}

/// Both directions of the range characterization: a generic `f` with
/// `𝓕(f) ∉ ran B_m` yields a certificate with `⟨r, f⟩ ≠ 0`; an `f` built with
/// `𝓕(f) ∈ ran B_m` yields a solution vanishing at both ends and orthogonal to `K₀`.
pub fn t0(bs: &BlockSystem, f: Option<&L2Function>, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let basis = bs.cokernel_m();
    let generic = rhs_for(bs, f, rng);
    let solvable = solvable_rhs(bs, rng)?;
    let k0 = relations::kernel_k0(bs)?;
    for (label, f) in [("generic", generic), ("solvable", solvable)] {
        let mv = bs.moments(&f)?;
        let projection = linalg::vnorm(&(basis.adjoint() * &mv.functional));
        let f_norm = weighted_norm(bs, &f)?;
        match relations::t0_solve(bs, &f)? {
            T0Outcome::Solved {
                endpoint_defect, ..
            } => {
                out.push(Check::upper_bound(
                    format!(
                        "t0 ({label}): solved only if |proj F(f)| <= {T0_PROJECTION_THRESHOLD:e}"
                    ),
                    projection,
                    T0_PROJECTION_THRESHOLD,
                ));
                out.push(Check::upper_bound(
                    format!("t0 ({label}): |u(xi_1+)| + |u(xi_2-)|"),
                    endpoint_defect,
                    1e-9,
                ));
                let mut worst: f64 = 0.0;
                for r in &k0 {
                    let r_norm = weighted_norm(bs, &r.solution)?;
                    let ip = relations::inner_product(&bs.problem.w, &f, &r.solution)?;
                    worst = worst.max(ip.norm() / (1.0 + f_norm * r_norm));
                }
                out.push(Check::upper_bound(
                    format!("t0 ({label}): <f,r> for r in K0 (normalized)"),
                    worst,
                    1e-8,
                ));
            }
            T0Outcome::Certificate {
                r_hat,
                pairing,
                functional,
                ..
            } => {
                if projection <= T0_PROJECTION_THRESHOLD && label == "solvable" {
                    out.push(Check::upper_bound(
                        format!("t0 ({label}): certificate for solvable f"),
                        projection,
                        0.0,
                    ));
                }
                out.push(Check::lower_bound(
                    format!("t0 ({label}): certificate |<r,f>|"),
                    pairing.norm(),
                    0.0,
                ));
                let tol = 1e-9 * (1.0 + f_norm) * (1.0 + linalg::vnorm(&r_hat));
                out.push(Check::upper_bound(
                    format!("t0 ({label}): <r,f> - r^*F(f)"),
                    (pairing - functional).norm(),
                    tol,
                ));
            }
        }
    }
    Ok(out)
}
