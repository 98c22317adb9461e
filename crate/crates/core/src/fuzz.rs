//! Seeded random instances for the identity suites.
//!
//! Instances have `n ∈ {1, 2, 3}` on the interval `(-1.5, 1.5)` with window
//! `(-1, 1)`. For `n ≥ 2`, `iJ` is indefinite so that singular atoms exist;
//! they are built from an isotropic vector `v` of `J` by choosing a Hermitian
//! `Δq` with `Δq v = −2Jv`. Some instances place a mirrored pair `Δq`, `−Δq`
//! around a stretch with zero `q`-density, which forces `ker B* ≠ 0`.

use crate::coefficients::{MeasureMatrix, Problem};
use crate::l2::L2Function;
use crate::linalg::{self, c, CMat, CVec};
use crate::propagation;
use nalgebra::SymmetricEigen;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const INTERVAL: (f64, f64) = (-1.5, 1.5);
pub const WINDOW: (f64, f64) = (-1.0, 1.0);

/// Regular atoms are resampled until `σ_min(B₊)/σ_max(B₊)` reaches this.
const REGULAR_RATIO: f64 = 0.25;

#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub index: usize,
    pub problem: Problem,
    pub window: (f64, f64),
    pub f: L2Function,
    /// Positions of the atoms built to be singular.
    pub singular: Vec<f64>,
}

pub fn rng_for(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn uniform_complex(rng: &mut impl Rng, rows: usize, cols: usize, r: f64) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        c(rng.gen_range(-r..=r), rng.gen_range(-r..=r))
    })
}

/// Entries uniform in `[-r, r]`, then Hermitized.
pub fn random_hermitian(rng: &mut impl Rng, n: usize, r: f64) -> CMat {
    let m = uniform_complex(rng, n, n, r);
    (&m + m.adjoint()).scale(0.5)
}

/// `G G*` with `G` of shape `n × rank`, entries uniform in `[-r, r]`.
pub fn random_psd(rng: &mut impl Rng, n: usize, rank: usize, r: f64) -> CMat {
    let g = uniform_complex(rng, n, rank, r);
    &g * g.adjoint()
}

pub fn random_vector(rng: &mut impl Rng, n: usize, r: f64) -> CVec {
    CVec::from_fn(n, |_, _| c(rng.gen_range(-r..=r), rng.gen_range(-r..=r)))
}

fn random_unitary(rng: &mut impl Rng, n: usize) -> CMat {
    uniform_complex(rng, n, n, 1.0).qr().q()
}

/// Skew-Hermitian invertible `J`; indefinite `iJ` when `n ≥ 2`.
pub fn random_j(rng: &mut impl Rng, n: usize) -> CMat {
    if n == 2 && rng.gen_bool(0.3) {
        return linalg::real_matrix(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    }
    let mut lambdas: Vec<f64> = (0..n).map(|_| rng.gen_range(0.7..1.5)).collect();
    if n == 1 {
        if rng.gen_bool(0.5) {
            lambdas[0] = -lambdas[0];
        }
    } else {
        let negatives = rng.gen_range(1..n);
        for l in lambdas.iter_mut().take(negatives) {
            *l = -*l;
        }
        lambdas.shuffle(rng);
    }
    let q = random_unitary(rng, n);
    let d = CMat::from_diagonal(&CVec::from_iterator(n, lambdas.iter().map(|&l| c(0.0, l))));
    &q * d * q.adjoint()
}

/// Hermitian `Δq` with `J + Δq/2` singular. Needs `iJ` indefinite.
pub fn singular_jump(rng: &mut impl Rng, j: &CMat) -> Option<CMat> {
    let n = j.nrows();
    let k = j * c(0.0, -1.0);
    let eig = SymmetricEigen::new((&k + k.adjoint()).scale(0.5));
    let pos = (0..n).find(|&i| eig.eigenvalues[i] > 0.0)?;
    let neg = (0..n).find(|&i| eig.eigenvalues[i] < 0.0)?;
    let (lp, ln) = (eig.eigenvalues[pos], eig.eigenvalues[neg]);
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut v = eig.eigenvectors.column(pos) * c(ln.abs().sqrt(), 0.0)
        + eig.eigenvectors.column(neg) * (c(theta.cos(), theta.sin()) * lp.sqrt());
    v /= c(linalg::vnorm(&v), 0.0);
    let y = -(j * &v).scale(2.0);
    let proj = linalg::identity(n) - &v * v.adjoint();
    let h = random_hermitian(rng, n, 1.0);
    Some(&y * v.adjoint() + &v * y.adjoint() + &proj * h * &proj)
}

/// Hermitian `Δq` with entries in `[-2, 2]` and a well-conditioned `B₊`.
pub fn regular_jump(rng: &mut impl Rng, j: &CMat) -> CMat {
    let n = j.nrows();
    let mut scale = 2.0;
    loop {
        for _ in 0..20 {
            let dq = random_hermitian(rng, n, scale);
            let bp = j + dq.scale(0.5);
            let (smin, smax) = linalg::sigma_extremes(&bp);
            if smin >= REGULAR_RATIO * smax {
                return dq;
            }
        }
        scale *= 0.5;
    }
}

fn distinct_positions(
    rng: &mut impl Rng,
    count: usize,
    lo: f64,
    hi: f64,
    taken: &mut Vec<f64>,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut guard = 0;
    while out.len() < count && guard < 1000 {
        guard += 1;
        let x = (rng.gen_range(lo..hi) * 1000.0).round() / 1000.0;
        if taken.iter().all(|t| (t - x).abs() >= 0.05) {
            taken.push(x);
            out.push(x);
        }
    }
    out
}

fn piecewise<R: Rng>(
    rng: &mut R,
    interval: (f64, f64),
    mut value: impl FnMut(&mut R) -> CMat,
) -> (Vec<f64>, Vec<CMat>) {
    let pieces = rng.gen_range(1..=3);
    let mut cuts: Vec<f64> = (1..pieces)
        .map(|_| (rng.gen_range(interval.0 + 0.1..interval.1 - 0.1) * 1000.0).round() / 1000.0)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut bp = vec![interval.0];
    bp.extend(cuts);
    bp.push(interval.1);
    let vals = (0..bp.len() - 1).map(|_| value(rng)).collect();
    (bp, vals)
}

/// Deterministic instance number `index` of the stream for `seed`.
pub fn random_instance(seed: u64, index: usize) -> Instance {
    let mut rng = rng_for(seed, index);
    let n = *[1usize, 2, 3].choose(&mut rng).unwrap();
    let j = random_j(&mut rng, n);
    let (a, b) = INTERVAL;
    let mut taken = Vec::new();

    let mirrored = n >= 2 && rng.gen_bool(0.3);
    let mut singular = Vec::new();
    let mut atoms: Vec<(f64, CMat)> = Vec::new();
    let mut flat: Option<(f64, f64)> = None;
    if mirrored {
        let x1 = (rng.gen_range(-0.8..-0.1f64) * 1000.0).round() / 1000.0;
        let x2 = (rng.gen_range(0.1..0.8f64) * 1000.0).round() / 1000.0;
        let d = singular_jump(&mut rng, &j).expect("indefinite J");
        atoms.push((x1, d.clone()));
        atoms.push((x2, -d));
        singular.extend([x1, x2]);
        taken.extend([x1, x2]);
        flat = Some((x1, x2));
    }

    let outside_flat = |x: f64| flat.is_none_or(|(l, h)| x < l || x > h);
    let extra_singular = if n >= 2 {
        rng.gen_range(0..=if mirrored { 3 } else { 5 })
    } else {
        0
    };
    for x in distinct_positions(&mut rng, extra_singular * 3, -0.95, 0.95, &mut taken)
        .into_iter()
        .filter(|&x| outside_flat(x))
        .take(extra_singular)
    {
        let d = singular_jump(&mut rng, &j).expect("indefinite J");
        atoms.push((x, d));
        singular.push(x);
    }
    let regular = rng.gen_range(0..=2);
    for x in distinct_positions(&mut rng, regular * 3, -0.95, 0.95, &mut taken)
        .into_iter()
        .filter(|&x| outside_flat(x))
        .take(regular)
    {
        atoms.push((x, regular_jump(&mut rng, &j)));
    }
    if rng.gen_bool(0.5) {
        let x = if rng.gen_bool(0.5) { -1.25 } else { 1.25 };
        let d = if n >= 2 && rng.gen_bool(0.5) {
            singular_jump(&mut rng, &j).unwrap()
        } else {
            regular_jump(&mut rng, &j)
        };
        atoms.push((x, d));
    }
    atoms.sort_by(|p, q| p.0.total_cmp(&q.0));
    singular.sort_by(f64::total_cmp);

    let q_density = rng.gen_bool(0.7);
    let (qbp, qvals) = match flat {
        Some((l, h)) => {
            let mut pieces = vec![a, l, h, b];
            pieces.dedup();
            let vals = vec![
                if q_density {
                    random_hermitian(&mut rng, n, 0.5)
                } else {
                    linalg::zeros(n, n)
                },
                linalg::zeros(n, n),
                if q_density {
                    random_hermitian(&mut rng, n, 0.5)
                } else {
                    linalg::zeros(n, n)
                },
            ];
            (pieces, vals)
        }
        None if q_density => piecewise(&mut rng, INTERVAL, |r| random_hermitian(r, n, 0.5)),
        None => (vec![a, b], vec![linalg::zeros(n, n)]),
    };
    let q = MeasureMatrix::new(n, INTERVAL, qbp, qvals, atoms.clone()).expect("consistent q");

    let (wbp, wvals) = piecewise(&mut rng, INTERVAL, |r| {
        let rank = r.gen_range(0..=n);
        random_psd(r, n, rank, 0.7)
    });
    let mut w = MeasureMatrix::new(n, INTERVAL, wbp, wvals, Vec::new()).expect("consistent w");
    for (x, _) in &atoms {
        if rng.gen_bool(0.6) {
            let rank = rng.gen_range(1..=n);
            w = w.with_atom(*x, random_psd(&mut rng, n, rank, 1.0));
        }
    }
    let extra_w = rng.gen_range(0..=2);
    for x in distinct_positions(&mut rng, extra_w, -0.95, 0.95, &mut taken) {
        let rank = rng.gen_range(1..=n);
        w = w.with_atom(x, random_psd(&mut rng, n, rank, 1.0));
    }

    let problem = Problem::new(j, q, w).expect("consistent dimensions");
    let f = random_rhs(&mut rng, &problem);
    Instance {
        seed,
        index,
        problem,
        window: WINDOW,
        f,
        singular,
    }
}

/// Random step function on the problem interval with explicit values at every `w`-atom.
pub fn random_rhs(rng: &mut impl Rng, problem: &Problem) -> L2Function {
    let n = problem.dim();
    let (bp, _) = piecewise(rng, problem.interval(), |_| linalg::zeros(1, 1));
    let values = (0..bp.len() - 1)
        .map(|_| random_vector(rng, n, 1.0))
        .collect();
    let atom_values = problem
        .w
        .atoms()
        .iter()
        .map(|(x, _)| (*x, random_vector(rng, n, 1.0)))
        .collect();
    L2Function::new(n, bp, values, atom_values).expect("well-formed step function")
}

/// Singularity ratio of `J + Δq/2`; exposed for generator diagnostics.
pub fn jump_ratio(j: &CMat, dq: &CMat) -> f64 {
    propagation::singularity_ratio(&(j + dq.scale(0.5)))
}
