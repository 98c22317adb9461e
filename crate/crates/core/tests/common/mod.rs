#![allow(dead_code)]

use measys_core::linalg::{c, identity, real_matrix, solve, CMat, CVec};
use measys_core::{L2Function, MeasureMatrix, Problem};

pub fn sj() -> CMat {
    real_matrix(2, 2, &[0.0, -1.0, 1.0, 0.0])
}

pub fn offdiag(a: f64) -> CMat {
    real_matrix(2, 2, &[0.0, a, a, 0.0])
}

/// Both atoms singular, `ker B*` one-dimensional.
pub fn instance_a(w: MeasureMatrix) -> Problem {
    let iv = (-1.0, 1.0);
    Problem::new(
        sj(),
        MeasureMatrix::zero(2, iv)
            .with_atom(-0.5, offdiag(2.0))
            .with_atom(0.5, offdiag(-2.0)),
        w,
    )
    .unwrap()
}

/// Same atom twice: still singular, but `ker B* = 0`.
pub fn instance_b() -> Problem {
    let iv = (-1.0, 1.0);
    Problem::new(
        sj(),
        MeasureMatrix::zero(2, iv)
            .with_atom(-0.5, offdiag(2.0))
            .with_atom(0.5, offdiag(2.0)),
        MeasureMatrix::zero(2, iv),
    )
    .unwrap()
}

pub fn data(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn norm1(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Truncated Taylor series with 30 terms after scaling by `2^-s` so the
/// scaled argument has norm at most 1/2, followed by `s` squarings.
pub fn taylor_expm(m: &CMat) -> CMat {
    let n = m.nrows();
    let mut s = 0;
    let mut scaled = m.clone();
    while norm1(&scaled) > 0.5 {
        scaled = scaled.scale(0.5);
        s += 1;
    }
    let mut sum = identity(n);
    let mut term = identity(n);
    for k in 1..=30 {
        term = &term * &scaled / c(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

fn simpson(f: &dyn Fn(f64) -> CMat, a: f64, fa: &CMat, b: f64, fb: &CMat) -> (f64, CMat, CMat) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (fa + fm.scale(4.0) + fb).scale((b - a) / 6.0);
    (m, fm, whole)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &dyn Fn(f64) -> CMat,
    a: f64,
    fa: &CMat,
    b: f64,
    fb: &CMat,
    m: f64,
    fm: &CMat,
    whole: &CMat,
    tol: f64,
    depth: usize,
) -> CMat {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = &left + &right - whole;
    let err = delta.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if depth == 0 || err <= 15.0 * tol {
        return left + right + delta.scale(1.0 / 15.0);
    }
    adaptive(f, a, fa, m, fm, lm, &flm, &left, 0.5 * tol, depth - 1)
        + adaptive(f, m, fm, b, fb, rm, &frm, &right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of a matrix-valued integrand on `[a, b]`.
pub fn quad(f: &dyn Fn(f64) -> CMat, a: f64, b: f64, tol: f64) -> CMat {
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, &fa, b, &fb);
    adaptive(f, a, &fa, b, &fb, m, &fm, &whole, tol, 40)
}

/// Classical RK4 for `Ju′ + q0 u = w0 f0` with constant data, `steps` steps of size `h/steps`.
pub fn rk4(j: &CMat, q0: &CMat, rhs: &CVec, u0: &CVec, h: f64, steps: usize) -> CVec {
    let jinv = j.clone().try_inverse().unwrap();
    let field = |u: &CVec| -> CVec { &jinv * (rhs - q0 * u) };
    let dt = h / steps as f64;
    let mut u = u0.clone();
    for _ in 0..steps {
        let k1 = field(&u);
        let k2 = field(&(&u + &k1 * c(0.5 * dt, 0.0)));
        let k3 = field(&(&u + &k2 * c(0.5 * dt, 0.0)));
        let k4 = field(&(&u + &k3 * c(dt, 0.0)));
        u += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(dt / 6.0, 0.0);
    }
    u
}

/// Right limit `u(x1⁺)` obtained by marching from `u(x0⁺)`: RK4 between events,
/// and at each `q`/`w` atom the jump condition solved for `u⁺`.
pub fn march(
    problem: &Problem,
    f: &L2Function,
    x0: f64,
    u0: &CVec,
    x1: f64,
    steps_per_unit: usize,
) -> CVec {
    let mut events: Vec<f64> = problem
        .q
        .atoms()
        .iter()
        .chain(problem.w.atoms())
        .map(|a| a.0)
        .chain(problem.q.breakpoints().iter().copied())
        .chain(problem.w.breakpoints().iter().copied())
        .chain(f.breakpoints().iter().copied())
        .filter(|&x| x > x0 && x < x1)
        .collect();
    events.sort_by(f64::total_cmp);
    events.dedup();
    events.push(x1);
    let mut u = u0.clone();
    let mut at = x0;
    for &x in &events {
        let mid = 0.5 * (at + x);
        let rhs = problem.w.density_at(mid) * f.piece_value(mid);
        let steps = ((x - at) * steps_per_unit as f64).ceil().max(1.0) as usize;
        u = rk4(
            &problem.j,
            problem.q.density_at(mid),
            &rhs,
            &u,
            x - at,
            steps,
        );
        if x < x1 {
            let dq = problem.q.jump(x).unwrap();
            let dw = problem.w.jump(x).unwrap();
            let bp = &problem.j + dq.scale(0.5);
            let bm = &problem.j - dq.scale(0.5);
            u = solve(&bp, &(&bm * &u + dw * f.value_at(x).unwrap())).unwrap();
        }
        at = x;
    }
    u
}
