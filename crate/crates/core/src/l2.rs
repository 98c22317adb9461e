//! Representable right-hand sides: vector step functions with explicit
//! values at atom positions.

use crate::error::{Error, Result};
use crate::linalg::CVec;

#[derive(Debug, Clone, PartialEq)]
pub struct L2Function {
    n: usize,
    breakpoints: Vec<f64>,
    values: Vec<CVec>,
    atom_values: Vec<(f64, CVec)>,
}

impl L2Function {
    /// `breakpoints` must be strictly increasing with one more entry than `values`;
    /// `atom_values` are sorted by position on construction.
    pub fn new(
        n: usize,
        breakpoints: Vec<f64>,
        values: Vec<CVec>,
        mut atom_values: Vec<(f64, CVec)>,
    ) -> Result<Self> {
        if breakpoints.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::NotRepresentable(format!(
                "{} breakpoints for {} pieces",
                breakpoints.len(),
                values.len()
            )));
        }
        if !breakpoints.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::NotRepresentable(
                "breakpoints are not increasing".into(),
            ));
        }
        if values
            .iter()
            .chain(atom_values.iter().map(|(_, v)| v))
            .any(|v| v.len() != n)
        {
            return Err(Error::DimensionMismatch(format!(
                "f values must have length {n}"
            )));
        }
        atom_values.sort_by(|a, b| a.0.total_cmp(&b.0));
        if atom_values.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::NotRepresentable(
                "duplicate atom value position".into(),
            ));
        }
        Ok(Self {
            n,
            breakpoints,
            values,
            atom_values,
        })
    }

    pub fn zero(n: usize, support: (f64, f64)) -> Self {
        Self::constant(support, CVec::zeros(n))
    }

    pub fn constant(support: (f64, f64), value: CVec) -> Self {
        Self {
            n: value.len(),
            breakpoints: vec![support.0, support.1],
            values: vec![value],
            atom_values: Vec::new(),
        }
    }

    pub fn with_atom_value(mut self, x: f64, v: CVec) -> Self {
        match self.atom_values.binary_search_by(|(p, _)| p.total_cmp(&x)) {
            Ok(i) => self.atom_values[i].1 = v,
            Err(i) => self.atom_values.insert(i, (x, v)),
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[CVec] {
        &self.values
    }

    pub fn atom_values(&self) -> &[(f64, CVec)] {
        &self.atom_values
    }

    pub fn is_zero(&self) -> bool {
        self.values
            .iter()
            .chain(self.atom_values.iter().map(|(_, v)| v))
            .all(|v| v.iter().all(|z| *z == crate::linalg::ZERO))
    }

    pub(crate) fn covers(&self, lo: f64, hi: f64) -> Result<()> {
        let (a, b) = self.support();
        if a <= lo && hi <= b {
            Ok(())
        } else {
            Err(Error::NotRepresentable(format!(
                "f is defined on [{a}, {b}] but [{lo}, {hi}] is needed"
            )))
        }
    }

    /// Points where the value of `f` may change, restricted to `(lo, hi)`.
    pub fn knots_in(&self, lo: f64, hi: f64) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints
            .iter()
            .copied()
            .chain(self.atom_values.iter().map(|(x, _)| *x))
            .filter(move |&t| t > lo && t < hi)
    }

    /// Value on the open piece containing `x` (the right piece at a breakpoint).
    pub fn piece_value(&self, x: f64) -> &CVec {
        let idx = self.breakpoints[1..self.breakpoints.len() - 1]
            .iter()
            .take_while(|&&t| t <= x)
            .count();
        &self.values[idx.min(self.values.len() - 1)]
    }

    /// Point value: the explicit atom value if one is stored at `x`, the mean
    /// of the adjacent pieces at an interior breakpoint, else the piece value.
    pub fn value_at(&self, x: f64) -> Result<CVec> {
        let (a, b) = self.support();
        if !(x >= a && x <= b) {
            return Err(Error::OutOfInterval { x, lo: a, hi: b });
        }
        if let Some((_, v)) = self.atom_values.iter().find(|(p, _)| *p == x) {
            return Ok(v.clone());
        }
        let inner = &self.breakpoints[1..self.breakpoints.len() - 1];
        if let Some(k) = inner.iter().position(|&t| t == x) {
            return Ok((&self.values[k] + &self.values[k + 1]).scale(0.5));
        }
        Ok(self.piece_value(x).clone())
    }

    pub fn scale(&self, s: crate::linalg::C64) -> Self {
        Self {
            n: self.n,
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
            atom_values: self.atom_values.iter().map(|(x, v)| (*x, v * s)).collect(),
        }
    }

    /// Pointwise sum on the common refinement. Both functions must share their support.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.support() != other.support() || self.n != other.n {
            return Err(Error::WindowMismatch);
        }
        let mut bp: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .copied()
            .collect();
        bp.sort_by(f64::total_cmp);
        bp.dedup();
        let values = bp
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                self.piece_value(mid) + other.piece_value(mid)
            })
            .collect();
        let mut xs: Vec<f64> = self
            .atom_values
            .iter()
            .chain(other.atom_values.iter())
            .map(|(x, _)| *x)
            .collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let atom_values = xs
            .into_iter()
            .map(|x| Ok((x, self.value_at(x)? + other.value_at(x)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.n, bp, values, atom_values)
    }
}
