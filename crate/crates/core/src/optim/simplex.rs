//! Dense two-phase tableau simplex, generic over the scalar field.
//!
//! The program is brought to `min c·z, A z = b, z >= 0, b >= 0` with one
//! artificial column per row, so the artificial block of the final tableau is
//! the basis inverse and the dual prices can be read off directly.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::{ExactSolution, LinearProgram, LpError, LpStatus, Relation, Sense};

pub(super) trait Field:
    Clone
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn magnitude(&self) -> f64;
    fn is_exact_zero(&self) -> bool;
    /// Strictly positive beyond the pivoting tolerance.
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool {
        (-self.clone()).is_pos()
    }
    fn clean(self) -> Self {
        self
    }
    /// Ratios within this much of the minimum count as ties.
    fn tie_slack(&self) -> Self {
        Self::zero()
    }
    /// Usable as a pivot in a column whose largest entry is `colmax`.
    fn pivot_ok(&self, _colmax: f64) -> bool {
        self.is_pos()
    }
    /// Smallest entry an artificial may be pivoted out on after phase 1.
    fn drive_out_threshold() -> f64 {
        0.0
    }
    /// Rebuilds `B⁻¹[A | I]` and `B⁻¹b` from the original data for the given
    /// basis. Returns false when nothing was done.
    fn reinvert(
        _a: &[Vec<Self>],
        _b: &[Self],
        _basis: &[usize],
        _rows: &mut [Vec<Self>],
        _rhs: &mut [Self],
    ) -> bool {
        false
    }
}

const FLOAT_TOL: f64 = 1e-11;
/// Float pivots smaller than this fraction of their column are refused.
const PIVOT_REL_TOL: f64 = 1e-9;

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
    fn is_pos(&self) -> bool {
        *self > FLOAT_TOL
    }
    fn clean(self) -> Self {
        if self.abs() < 1e-14 {
            0.0
        } else {
            self
        }
    }
    fn tie_slack(&self) -> Self {
        1e-12 * (1.0 + self.abs())
    }
    fn drive_out_threshold() -> f64 {
        1e-7
    }
    fn pivot_ok(&self, colmax: f64) -> bool {
        *self > FLOAT_TOL && *self > PIVOT_REL_TOL * colmax
    }
    fn reinvert(
        a: &[Vec<f64>],
        b: &[f64],
        basis: &[usize],
        rows: &mut [Vec<f64>],
        rhs: &mut [f64],
    ) -> bool {
        let m = rows.len();
        if m == 0 {
            return false;
        }
        let n = a[0].len();
        let col = |j: usize, i: usize| {
            if j < n {
                a[i][j]
            } else if j - n == i {
                1.0
            } else {
                0.0
            }
        };
        let lu = DMatrix::from_fn(m, m, |i, k| col(basis[k], i)).lu();
        if !lu.is_invertible() {
            return false;
        }
        let Some(t) = lu.solve(&DMatrix::from_fn(m, n + m, |i, j| col(j, i))) else {
            return false;
        };
        let Some(x) = lu.solve(&DVector::from_column_slice(b)) else {
            return false;
        };
        if t.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return false;
        }
        let bscale = 1.0 + b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = t[(i, j)].clean();
            }
            for (k, &bk) in basis.iter().enumerate() {
                row[bk] = if k == i { 1.0 } else { 0.0 };
            }
            // drift below zero from roundoff
            rhs[i] = if x[i] < 0.0 && x[i] > -1e-9 * bscale {
                0.0
            } else {
                x[i].clean()
            };
        }
        true
    }
}

impl Field for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        BigRational::from_integer(BigInt::from(1))
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite data checked by validate")
    }
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
    fn is_exact_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
}

#[derive(Debug, Clone)]
enum VarMap<T> {
    /// x = offset + z[col]
    Shift { col: usize, offset: T },
    /// x = offset - z[col]
    Reflect { col: usize, offset: T },
    /// x = z[pos] - z[neg]
    Split { pos: usize, neg: usize },
}

struct StandardForm<T> {
    a: Vec<Vec<T>>,
    b: Vec<T>,
    c: Vec<T>,
    maps: Vec<VarMap<T>>,
    /// For each original constraint: (standard row, sign applied).
    row_of: Vec<(usize, T)>,
}

fn standardize<T: Field>(p: &LinearProgram) -> StandardForm<T> {
    let sign = if p.sense == Sense::Maximize {
        -T::one()
    } else {
        T::one()
    };
    let mut maps = Vec::with_capacity(p.num_vars());
    let mut ncols = 0usize;
    let mut upper_rows: Vec<(usize, T)> = Vec::new();
    for &(lo, hi) in &p.bounds {
        if lo.is_finite() {
            maps.push(VarMap::Shift {
                col: ncols,
                offset: T::from_f64(lo),
            });
            if hi.is_finite() {
                upper_rows.push((ncols, T::from_f64(hi) - T::from_f64(lo)));
            }
            ncols += 1;
        } else if hi.is_finite() {
            maps.push(VarMap::Reflect {
                col: ncols,
                offset: T::from_f64(hi),
            });
            ncols += 1;
        } else {
            maps.push(VarMap::Split {
                pos: ncols,
                neg: ncols + 1,
            });
            ncols += 2;
        }
    }
    let structural = ncols;
    let nslack = p
        .constraints
        .iter()
        .filter(|r| r.relation != Relation::Eq)
        .count()
        + upper_rows.len();
    let width = structural + nslack;

    let mut c = vec![T::zero(); width];
    for (j, map) in maps.iter().enumerate() {
        let cj = T::from_f64(p.objective[j]) * sign.clone();
        match map {
            VarMap::Shift { col, .. } => c[*col] = cj,
            VarMap::Reflect { col, .. } => c[*col] = -cj,
            VarMap::Split { pos, neg } => {
                c[*pos] = cj.clone();
                c[*neg] = -cj;
            }
        }
    }

    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut row_of = Vec::new();
    let mut slack = structural;
    for row in &p.constraints {
        let mut coeffs = vec![T::zero(); width];
        let mut rhs = T::from_f64(row.bound);
        for (j, map) in maps.iter().enumerate() {
            if row.coeffs[j] == 0.0 {
                continue;
            }
            let aij = T::from_f64(row.coeffs[j]);
            match map {
                VarMap::Shift { col, offset } => {
                    rhs = rhs - aij.clone() * offset.clone();
                    coeffs[*col] = aij;
                }
                VarMap::Reflect { col, offset } => {
                    rhs = rhs - aij.clone() * offset.clone();
                    coeffs[*col] = -aij;
                }
                VarMap::Split { pos, neg } => {
                    coeffs[*pos] = aij.clone();
                    coeffs[*neg] = -aij;
                }
            }
        }
        match row.relation {
            Relation::Le => {
                coeffs[slack] = T::one();
                slack += 1;
            }
            Relation::Ge => {
                coeffs[slack] = -T::one();
                slack += 1;
            }
            Relation::Eq => {}
        }
        let flip = if rhs.is_neg() || (rhs < T::zero()) {
            for v in coeffs.iter_mut() {
                *v = -v.clone();
            }
            rhs = -rhs;
            -T::one()
        } else {
            T::one()
        };
        row_of.push((a.len(), flip));
        a.push(coeffs);
        b.push(rhs);
    }
    for (col, cap) in upper_rows {
        let mut coeffs = vec![T::zero(); width];
        coeffs[col] = T::one();
        coeffs[slack] = T::one();
        slack += 1;
        a.push(coeffs);
        b.push(cap);
    }
    StandardForm {
        a,
        b,
        c,
        maps,
        row_of,
    }
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    ncols: usize,
}

/// Pivots between reinversions of a float tableau.
const REINVERT_EVERY: usize = 50;

enum Phase {
    Optimal,
    Unbounded,
}

impl<T: Field> Tableau<T> {
    fn new(sf: &StandardForm<T>) -> Self {
        let m = sf.a.len();
        let ncols = sf.c.len();
        let rows = sf
            .a
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut row = r.clone();
                row.extend((0..m).map(|k| if k == i { T::one() } else { T::zero() }));
                row
            })
            .collect();
        Tableau {
            rows,
            rhs: sf.b.clone(),
            basis: (ncols..ncols + m).collect(),
            ncols,
        }
    }

    fn width(&self) -> usize {
        self.ncols + self.rows.len()
    }

    fn pivot(&mut self, r: usize, j: usize, d: &mut [T]) {
        let piv = self.rows[r][j].clone();
        for v in self.rows[r].iter_mut() {
            *v = (v.clone() / piv.clone()).clean();
        }
        self.rhs[r] = (self.rhs[r].clone() / piv).clean();
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][j].clone();
            if f.is_exact_zero() {
                continue;
            }
            for (v, p) in self.rows[i].iter_mut().zip(&prow) {
                if !p.is_exact_zero() {
                    *v = (v.clone() - f.clone() * p.clone()).clean();
                }
            }
            self.rhs[i] = (self.rhs[i].clone() - f * prhs.clone()).clean();
        }
        let f = d[j].clone();
        if !f.is_exact_zero() {
            for (v, p) in d.iter_mut().zip(&prow) {
                if !p.is_exact_zero() {
                    *v = (v.clone() - f.clone() * p.clone()).clean();
                }
            }
        }
        self.basis[r] = j;
    }

    /// Reinverts from the original data and recomputes the reduced costs of
    /// `cost`. Returns false when the field does not reinvert.
    fn refresh(&mut self, sf: &StandardForm<T>, cost: &dyn Fn(usize) -> T, d: &mut [T]) -> bool {
        if !T::reinvert(&sf.a, &sf.b, &self.basis, &mut self.rows, &mut self.rhs) {
            return false;
        }
        for (j, dj) in d.iter_mut().enumerate() {
            let mut v = cost(j);
            for (i, row) in self.rows.iter().enumerate() {
                let cb = cost(self.basis[i]);
                if !cb.is_exact_zero() && !row[j].is_exact_zero() {
                    v = v - cb * row[j].clone();
                }
            }
            *dj = v.clean();
        }
        true
    }

    /// Runs simplex iterations with reduced costs `d` of `cost`; only columns
    /// below `allowed` may enter. Float tableaus are reinverted periodically
    /// and before any verdict is accepted.
    fn run(
        &mut self,
        sf: &StandardForm<T>,
        cost: &dyn Fn(usize) -> T,
        d: &mut [T],
        allowed: usize,
    ) -> Result<Phase, LpError> {
        let m = self.rows.len();
        let max_iter = 200 * (m + self.width()) + 1000;
        let mut degenerate_streak = 0usize;
        let mut since_refresh = 0usize;
        // verdict re-checks left; roundoff can flip a reduced cost back and forth
        let mut rechecks = 3usize;
        for _ in 0..max_iter {
            if since_refresh >= REINVERT_EVERY {
                self.refresh(sf, cost, d);
                since_refresh = 0;
            }
            let bland = degenerate_streak > 20;
            let mut entering = None;
            let mut best = T::zero();
            for (j, dj) in d.iter().enumerate().take(allowed) {
                if dj.is_neg() {
                    if bland {
                        entering = Some(j);
                        break;
                    }
                    if entering.is_none() || *dj < best {
                        best = dj.clone();
                        entering = Some(j);
                    }
                }
            }
            let Some(j) = entering else {
                if since_refresh > 0 && rechecks > 0 && self.refresh(sf, cost, d) {
                    since_refresh = 0;
                    rechecks -= 1;
                    continue;
                }
                return Ok(Phase::Optimal);
            };
            // minimum ratio; near-ties go to the largest pivot (smallest
            // basis index once Bland's rule is on)
            let colmax = self.rows.iter().fold(0.0f64, |acc, row| acc.max(row[j].magnitude()));
            // roundoff can leave basic values just below zero
            let ratio_at = |i: usize| {
                let b = &self.rhs[i];
                let b = if *b < T::zero() { T::zero() } else { b.clone() };
                b / self.rows[i][j].clone()
            };
            let mut theta: Option<T> = None;
            for i in 0..m {
                if self.rows[i][j].pivot_ok(colmax) {
                    let ratio = ratio_at(i);
                    if theta.as_ref().map_or(true, |t| ratio < *t) {
                        theta = Some(ratio);
                    }
                }
            }
            let mut leave: Option<(usize, T)> = None;
            if let Some(theta) = theta {
                let slack = theta.tie_slack();
                for i in 0..m {
                    let a = &self.rows[i][j];
                    if !a.pivot_ok(colmax) {
                        continue;
                    }
                    let ratio = ratio_at(i);
                    if ratio > theta.clone() + slack.clone() {
                        continue;
                    }
                    let better = match &leave {
                        None => true,
                        Some((k, _)) if bland => self.basis[i] < self.basis[*k],
                        Some((k, _)) => a.magnitude() > self.rows[*k][j].magnitude(),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                if since_refresh > 0 && rechecks > 0 && self.refresh(sf, cost, d) {
                    since_refresh = 0;
                    rechecks -= 1;
                    continue;
                }
                return Ok(Phase::Unbounded);
            };
            if ratio.is_pos() {
                degenerate_streak = 0;
            } else {
                degenerate_streak += 1;
            }
            self.pivot(r, j, d);
            since_refresh += 1;
        }
        Err(LpError::NumericalFailure(format!(
            "simplex did not converge within {max_iter} pivots"
        )))
    }
}

struct Outcome<T> {
    status: LpStatus,
    z: Vec<T>,
    y: Vec<T>,
    basis: Vec<usize>,
}

fn two_phase<T: Field>(sf: &StandardForm<T>) -> Result<Outcome<T>, LpError> {
    let mut tab = Tableau::new(sf);
    let m = tab.rows.len();
    let n = tab.ncols;
    let w = tab.width();

    // Phase 1: minimise the sum of artificials.
    let phase1 = |j: usize| if j < n { T::zero() } else { T::one() };
    let mut d = vec![T::zero(); w];
    for row in &tab.rows {
        for (dj, v) in d.iter_mut().zip(row).take(n) {
            *dj = dj.clone() - v.clone();
        }
    }
    tab.run(sf, &phase1, &mut d, n)?;
    let infeas = tab
        .basis
        .iter()
        .zip(&tab.rhs)
        .filter(|(&bi, _)| bi >= n)
        .fold(T::zero(), |acc, (_, v)| acc + v.clone());
    let bscale = 1.0 + sf.b.iter().map(|v| v.magnitude()).fold(0.0, f64::max);
    if infeas.is_pos() && infeas.magnitude() > 1e-9 * bscale {
        return Ok(Outcome {
            status: LpStatus::Infeasible,
            z: Vec::new(),
            y: Vec::new(),
            basis: Vec::new(),
        });
    }

    // Drive zero-level artificials out of the basis where possible; rows
    // where that fails are redundant and keep their artificial at zero.
    for r in 0..m {
        if tab.basis[r] < n {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            let mag = tab.rows[r][j].magnitude();
            if (tab.rows[r][j].is_pos() || tab.rows[r][j].is_neg())
                && mag > T::drive_out_threshold()
                && best.map_or(true, |(_, b)| mag > b)
            {
                best = Some((j, mag));
            }
        }
        if let Some((j, _)) = best {
            tab.rhs[r] = T::zero();
            tab.pivot(r, j, &mut d);
        }
    }

    // Phase 2.
    let cost = |j: usize| -> T {
        if j < n {
            sf.c[j].clone()
        } else {
            T::zero()
        }
    };
    let mut d: Vec<T> = (0..w)
        .map(|j| {
            let mut v = cost(j);
            for (i, row) in tab.rows.iter().enumerate() {
                let cb = cost(tab.basis[i]);
                if !cb.is_exact_zero() && !row[j].is_exact_zero() {
                    v = v - cb * row[j].clone();
                }
            }
            v
        })
        .collect();
    tab.refresh(sf, &cost, &mut d);
    if let Phase::Unbounded = tab.run(sf, &cost, &mut d, n)? {
        return Ok(Outcome {
            status: LpStatus::Unbounded,
            z: Vec::new(),
            y: Vec::new(),
            basis: Vec::new(),
        });
    }

    let mut z = vec![T::zero(); n];
    for (i, &bi) in tab.basis.iter().enumerate() {
        if bi < n {
            z[bi] = tab.rhs[i].clone();
        }
    }
    let y = (0..m)
        .map(|r| {
            tab.basis
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (i, &bi)| {
                    acc + cost(bi) * tab.rows[i][n + r].clone()
                })
        })
        .collect();
    Ok(Outcome {
        status: LpStatus::Optimal,
        z,
        y,
        basis: tab.basis,
    })
}

fn recover<T: Field>(p: &LinearProgram, sf: &StandardForm<T>, z: &[T], y: &[T]) -> (Vec<T>, Vec<T>) {
    let x = sf
        .maps
        .iter()
        .map(|map| match map {
            VarMap::Shift { col, offset } => offset.clone() + z[*col].clone(),
            VarMap::Reflect { col, offset } => offset.clone() - z[*col].clone(),
            VarMap::Split { pos, neg } => z[*pos].clone() - z[*neg].clone(),
        })
        .collect();
    let sign = if p.sense == Sense::Maximize {
        -T::one()
    } else {
        T::one()
    };
    let duals = sf
        .row_of
        .iter()
        .map(|(r, flip)| y[*r].clone() * flip.clone() * sign.clone())
        .collect();
    (x, duals)
}

pub(super) struct FloatSolve {
    pub status: LpStatus,
    /// `(primal, duals)` candidates, most accurate first: refactorised from
    /// the original data, then read off the final tableau.
    pub candidates: Vec<(Vec<f64>, Vec<f64>)>,
}

pub(super) fn solve_float(p: &LinearProgram) -> Result<FloatSolve, LpError> {
    let sf = standardize::<f64>(p);
    let out = two_phase(&sf)?;
    if out.status != LpStatus::Optimal {
        return Ok(FloatSolve {
            status: out.status,
            candidates: Vec::new(),
        });
    }
    let mut candidates = Vec::with_capacity(2);
    if let Some((z, y)) = refine(&sf, &out) {
        candidates.push(recover(p, &sf, &z, &y));
    }
    candidates.push(recover(p, &sf, &out.z, &out.y));
    Ok(FloatSolve {
        status: LpStatus::Optimal,
        candidates,
    })
}

/// Recompute basic values and prices from the original data with an LU
/// factorisation of the final basis, which removes accumulated pivot error.
fn refine(sf: &StandardForm<f64>, out: &Outcome<f64>) -> Option<(Vec<f64>, Vec<f64>)> {
    let m = sf.a.len();
    let n = sf.c.len();
    if m == 0 {
        return Some((vec![0.0; n], Vec::new()));
    }
    let column = |j: usize, i: usize| if j < n { sf.a[i][j] } else if j - n == i { 1.0 } else { 0.0 };
    let bmat = DMatrix::from_fn(m, m, |i, k| column(out.basis[k], i));
    let lu = bmat.clone().lu();
    let xb = lu.solve(&DVector::from_column_slice(&sf.b))?;
    let cb = DVector::from_iterator(
        m,
        out.basis.iter().map(|&j| if j < n { sf.c[j] } else { 0.0 }),
    );
    let y = bmat.transpose().lu().solve(&cb)?;
    if xb.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return None;
    }
    let mut z = vec![0.0; n];
    for (k, &j) in out.basis.iter().enumerate() {
        if j < n {
            z[j] = xb[k].max(0.0);
        }
    }
    Some((z, y.iter().copied().collect()))
}

pub(super) fn solve_exact(p: &LinearProgram) -> Result<ExactSolution, LpError> {
    let sf = standardize::<BigRational>(p);
    let out = two_phase(&sf)?;
    if out.status != LpStatus::Optimal {
        return Ok(ExactSolution {
            status: out.status,
            primal: Vec::new(),
            duals: Vec::new(),
            objective: Zero::zero(),
        });
    }
    let (primal, duals) = recover(p, &sf, &out.z, &out.y);
    let objective = p
        .objective
        .iter()
        .zip(&primal)
        .fold(<BigRational as Zero>::zero(), |acc, (c, x)| {
            acc + <BigRational as Field>::from_f64(*c) * x.clone()
        });
    Ok(ExactSolution {
        status: LpStatus::Optimal,
        primal,
        duals,
        objective,
    })
}
