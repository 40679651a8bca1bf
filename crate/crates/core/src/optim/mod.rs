//! Linear programming with optimality certificates.
//!
//! Every infimum or supremum over polyhedral data in this crate ends up here.
//! [`solve_lp`] runs a dense two-phase simplex, polishes the final basis with
//! an LU solve and then re-certifies the answer with [`certify`], which only
//! looks at the original program and the returned primal/dual vectors.
//! An exact rational variant ([`solve_lp_exact`]) shares the same pivoting code.

mod builder;
mod simplex;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builder::{LinExpr, LpBuilder};

/// Relative tolerance used for primal feasibility and the duality gap.
pub const CERT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub bound: f64,
}

/// A dense linear program. Variables are free unless `bounds` says otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub sense: Sense,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, sense: Sense) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            sense,
            constraints: Vec::new(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
        }
    }

    pub fn with_constraint(mut self, coeffs: Vec<f64>, relation: Relation, bound: f64) -> Self {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            bound,
        });
        self
    }

    pub fn with_bounds(mut self, var: usize, lo: f64, hi: f64) -> Self {
        self.bounds[var] = (lo, hi);
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Checks arities, bound ordering and finiteness of the data.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("non-finite objective coefficient".into()));
        }
        if self.bounds.len() != n {
            return Err(LpError::Malformed(format!(
                "{} bounds for {} variables",
                self.bounds.len(),
                n
            )));
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(LpError::Malformed(format!(
                    "row {i} has arity {} but the objective has {n}",
                    row.coeffs.len()
                )));
            }
            if row.coeffs.iter().any(|c| !c.is_finite()) || !row.bound.is_finite() {
                return Err(LpError::Malformed(format!("row {i} has non-finite data")));
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY
            {
                return Err(LpError::Malformed(format!(
                    "variable {j} has ill-ordered bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of a solve. `duals` are shadow prices: the derivative of the optimal
/// value with respect to each row's bound, in the program's own sense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LPSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub objective: f64,
    pub gap: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("program is {0:?}, no optimum")]
    NotOptimal(LpStatus),
}

/// Solve `p` in floating point and certify the result.
///
/// Infeasible and unbounded programs are reported through `status`; an
/// optimal answer whose certificate does not close is a `NumericalFailure`.
pub fn solve_lp(p: &LinearProgram) -> Result<LPSolution, LpError> {
    p.validate()?;
    let raw = simplex::solve_float(p)?;
    if raw.status != LpStatus::Optimal {
        return Ok(LPSolution {
            status: raw.status,
            primal: Vec::new(),
            duals: Vec::new(),
            objective: match raw.status {
                LpStatus::Unbounded if p.sense == Sense::Minimize => f64::NEG_INFINITY,
                LpStatus::Unbounded => f64::INFINITY,
                _ => f64::NAN,
            },
            gap: f64::NAN,
        });
    }
    let mut first_failure = None;
    for (primal, duals) in raw.candidates {
        match certified(p, primal, duals) {
            Ok(sol) => return Ok(sol),
            Err(v) => {
                first_failure.get_or_insert(v);
            }
        }
    }
    // float pivoting went astray: redo small programs over the rationals
    if p.num_vars() * (p.constraints.len() + 1) <= EXACT_FALLBACK_CELLS {
        let ex = simplex::solve_exact(p)?;
        if ex.status == LpStatus::Optimal {
            let primal = ex.primal.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
            let duals = ex.duals.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
            if let Ok(sol) = certified(p, primal, duals) {
                return Ok(sol);
            }
        }
    }
    Err(LpError::NumericalFailure(format!(
        "certificate did not close: {:?}",
        first_failure.unwrap_or_default()
    )))
}

/// Programs up to this many coefficient cells are re-solved exactly when the
/// float certificate fails.
const EXACT_FALLBACK_CELLS: usize = 20_000;

fn certified(
    p: &LinearProgram,
    primal: Vec<f64>,
    duals: Vec<f64>,
) -> Result<LPSolution, Vec<CertificateViolation>> {
    let mut sol = LPSolution {
        status: LpStatus::Optimal,
        objective: dot(&p.objective, &primal),
        primal,
        duals,
        gap: 0.0,
    };
    let report = certify(p, &sol);
    sol.gap = report.gap;
    if report.passed() {
        Ok(sol)
    } else {
        Err(report.violations)
    }
}

/// Solution of [`solve_lp_exact`]: all quantities are exact rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub status: LpStatus,
    pub primal: Vec<BigRational>,
    pub duals: Vec<BigRational>,
    pub objective: BigRational,
}

impl ExactSolution {
    pub fn objective_f64(&self) -> f64 {
        self.objective.to_f64().unwrap_or(f64::NAN)
    }
}

/// Solve `p` over the rationals. Every `f64` in the program is converted
/// exactly, so the answer is the exact optimum of the stated data.
/// Intended for small programs (a handful of dimensions); there is no size cap.
pub fn solve_lp_exact(p: &LinearProgram) -> Result<ExactSolution, LpError> {
    p.validate()?;
    simplex::solve_exact(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CertificateViolation {
    /// A constraint row is violated by the primal point.
    PrimalRow { row: usize, amount: f64 },
    /// A variable leaves its interval.
    PrimalBound { var: usize, amount: f64 },
    /// A dual multiplier has the wrong sign for its row.
    DualSign { row: usize, amount: f64 },
    /// A reduced cost would need a bound that does not exist.
    DualBound { var: usize, amount: f64 },
    /// The claimed objective does not match the primal point.
    ObjectiveMismatch { claimed: f64, actual: f64 },
    /// Primal and dual objectives differ by more than the tolerance.
    Gap { gap: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub violations: Vec<CertificateViolation>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// First offending row, if the failure is attributable to one.
    pub fn offending_row(&self) -> Option<usize> {
        self.violations.iter().find_map(|v| match v {
            CertificateViolation::PrimalRow { row, .. }
            | CertificateViolation::DualSign { row, .. } => Some(*row),
            _ => None,
        })
    }
}

/// Re-check an optimal solution from scratch: primal feasibility, dual sign
/// conditions, reduced-cost/bound compatibility and the duality gap.
pub fn certify(p: &LinearProgram, s: &LPSolution) -> CertificateReport {
    let mut violations = Vec::new();
    let n = p.num_vars();
    if s.status != LpStatus::Optimal || s.primal.len() != n || s.duals.len() != p.constraints.len()
    {
        violations.push(CertificateViolation::Gap { gap: f64::INFINITY });
        return CertificateReport {
            primal_objective: f64::NAN,
            dual_objective: f64::NAN,
            gap: f64::INFINITY,
            violations,
        };
    }

    for (i, row) in p.constraints.iter().enumerate() {
        let lhs = dot(&row.coeffs, &s.primal);
        let scale = 1.0
            + row.bound.abs()
            + row
                .coeffs
                .iter()
                .zip(&s.primal)
                .map(|(a, x)| (a * x).abs())
                .sum::<f64>();
        let excess = match row.relation {
            Relation::Le => lhs - row.bound,
            Relation::Ge => row.bound - lhs,
            Relation::Eq => (lhs - row.bound).abs(),
        };
        if excess > CERT_TOL * scale {
            violations.push(CertificateViolation::PrimalRow { row: i, amount: excess });
        }
    }
    for (j, (&x, &(lo, hi))) in s.primal.iter().zip(&p.bounds).enumerate() {
        let excess = (lo - x).max(x - hi);
        if excess > CERT_TOL * (1.0 + x.abs()) {
            violations.push(CertificateViolation::PrimalBound { var: j, amount: excess });
        }
    }

    // Work in minimisation form: for a max program negate costs and prices.
    let flip = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let y: Vec<f64> = s.duals.iter().map(|d| d * flip).collect();
    let ymax = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dual_tol = CERT_TOL * (1.0 + ymax);
    for (i, (row, &yi)) in p.constraints.iter().zip(&y).enumerate() {
        let wrong = match row.relation {
            Relation::Le => yi,
            Relation::Ge => -yi,
            Relation::Eq => 0.0,
        };
        if wrong > dual_tol {
            violations.push(CertificateViolation::DualSign { row: i, amount: wrong });
        }
    }
    let mut dual_obj: f64 = p.constraints.iter().zip(&y).map(|(r, yi)| r.bound * yi).sum();
    for j in 0..n {
        let c = p.objective[j] * flip;
        let r = c - p
            .constraints
            .iter()
            .zip(&y)
            .map(|(row, yi)| row.coeffs[j] * yi)
            .sum::<f64>();
        let (lo, hi) = p.bounds[j];
        if r > 0.0 {
            if lo.is_finite() {
                dual_obj += r * lo;
            } else if r > dual_tol {
                violations.push(CertificateViolation::DualBound { var: j, amount: r });
            }
        } else if r < 0.0 {
            if hi.is_finite() {
                dual_obj += r * hi;
            } else if -r > dual_tol {
                violations.push(CertificateViolation::DualBound { var: j, amount: -r });
            }
        }
    }
    let dual_objective = dual_obj * flip;
    let actual = dot(&p.objective, &s.primal);
    if (actual - s.objective).abs() > CERT_TOL * (1.0 + actual.abs()) {
        violations.push(CertificateViolation::ObjectiveMismatch {
            claimed: s.objective,
            actual,
        });
    }
    let gap = (s.objective - dual_objective).abs();
    if gap > CERT_TOL * (1.0 + s.objective.abs()) {
        violations.push(CertificateViolation::Gap { gap });
    }
    CertificateReport {
        primal_objective: actual,
        dual_objective,
        gap,
        violations,
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn min_x_ge_3() -> LinearProgram {
        LinearProgram::new(vec![1.0], Sense::Minimize).with_constraint(vec![1.0], Relation::Ge, 3.0)
    }

    #[test]
    fn single_active_constraint() {
        let p = min_x_ge_3();
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!((s.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tighter_bound_wins() {
        let p = LinearProgram::new(vec![1.0], Sense::Maximize)
            .with_constraint(vec![1.0], Relation::Le, 1.0)
            .with_constraint(vec![1.0], Relation::Le, 2.0);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_feasible_set() {
        let p = LinearProgram::new(vec![1.0], Sense::Minimize)
            .with_constraint(vec![1.0], Relation::Le, 0.0)
            .with_constraint(vec![1.0], Relation::Ge, 1.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let p = LinearProgram::new(vec![1.0], Sense::Maximize)
            .with_constraint(vec![1.0], Relation::Ge, 0.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn arity_mismatch_is_malformed() {
        let p = LinearProgram::new(vec![1.0, 2.0], Sense::Minimize).with_constraint(
            vec![1.0],
            Relation::Ge,
            0.0,
        );
        assert!(matches!(solve_lp(&p), Err(LpError::Malformed(_))));
        let q = min_x_ge_3().with_bounds(0, 2.0, 1.0);
        assert!(matches!(solve_lp(&q), Err(LpError::Malformed(_))));
    }

    #[test]
    fn certificate_passes_on_solver_output() {
        let p = min_x_ge_3();
        let s = solve_lp(&p).unwrap();
        assert!(certify(&p, &s).passed());
    }

    #[test]
    fn certificate_catches_perturbed_objective() {
        let p = min_x_ge_3();
        let mut s = solve_lp(&p).unwrap();
        s.objective += 1.0;
        let r = certify(&p, &s);
        assert!(!r.passed());
        assert!((r.gap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn certificate_reports_infeasible_row() {
        let p = min_x_ge_3();
        let mut s = solve_lp(&p).unwrap();
        s.primal[0] = 2.0;
        s.objective = 2.0;
        let r = certify(&p, &s);
        assert!(!r.passed());
        assert_eq!(r.offending_row(), Some(0));
    }

    #[test]
    fn bounded_variables_and_equalities() {
        // min -x - y  s.t. x + y = 1.5, 0 <= x <= 1, y <= 1
        let p = LinearProgram::new(vec![-1.0, 2.0], Sense::Minimize)
            .with_constraint(vec![1.0, 1.0], Relation::Eq, 1.5)
            .with_bounds(0, 0.0, 1.0)
            .with_bounds(1, f64::NEG_INFINITY, 1.0);
        let s = solve_lp(&p).unwrap();
        // x = 1, y = 0.5 → -1 + 1 = 0
        assert!((s.objective - 0.0).abs() < 1e-12, "{s:?}");
        assert!(certify(&p, &s).passed());
    }

    #[test]
    fn redundant_equalities() {
        let p = LinearProgram::new(vec![1.0, 1.0], Sense::Minimize)
            .with_constraint(vec![1.0, 1.0], Relation::Eq, 2.0)
            .with_constraint(vec![2.0, 2.0], Relation::Eq, 4.0)
            .with_bounds(0, 0.0, f64::INFINITY)
            .with_bounds(1, 0.0, f64::INFINITY);
        let s = solve_lp(&p).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exact_mode_matches() {
        let p = LinearProgram::new(vec![1.0, 1.0], Sense::Maximize)
            .with_constraint(vec![3.0, 1.0], Relation::Le, 1.0)
            .with_constraint(vec![1.0, 3.0], Relation::Le, 1.0);
        let e = solve_lp_exact(&p).unwrap();
        assert_eq!(e.status, LpStatus::Optimal);
        // optimum x = y = 1/4, value 1/2
        let half = BigRational::new(1.into(), 2.into());
        assert!((e.objective.clone() - half).is_zero());
        let f = solve_lp(&p).unwrap();
        assert!((f.objective - 0.5).abs() < 1e-12);
    }
}
