use super::{solve_lp, LPSolution, LinearProgram, LpError, LpStatus, Relation, Sense};

/// Sparse affine expression `Σ cᵢ·xᵢ + constant` over builder variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(v: usize) -> Self {
        LinExpr {
            terms: vec![(v, 1.0)],
            constant: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn term(mut self, v: usize, c: f64) -> Self {
        self.add_term(v, c);
        self
    }

    pub fn plus_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn add_term(&mut self, v: usize, c: f64) {
        if c != 0.0 {
            self.terms.push((v, c));
        }
    }

    pub fn add_expr(&mut self, other: &LinExpr, scale: f64) {
        for &(v, c) in &other.terms {
            self.add_term(v, c * scale);
        }
        self.constant += other.constant * scale;
    }

    pub fn scaled(&self, s: f64) -> LinExpr {
        let mut out = LinExpr::new();
        out.add_expr(self, s);
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * x[v]).sum::<f64>()
    }
}

/// Incremental construction of a [`LinearProgram`] with named variable indices.
#[derive(Debug, Clone, Default)]
pub struct LpBuilder {
    bounds: Vec<(f64, f64)>,
    rows: Vec<(LinExpr, Relation, f64)>,
    objective: LinExpr,
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, lo: f64, hi: f64) -> usize {
        self.bounds.push((lo, hi));
        self.bounds.len() - 1
    }

    pub fn free(&mut self) -> usize {
        self.add_var(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn nonneg(&mut self) -> usize {
        self.add_var(0.0, f64::INFINITY)
    }

    pub fn free_vars(&mut self, n: usize) -> Vec<usize> {
        (0..n).map(|_| self.free()).collect()
    }

    pub fn nonneg_vars(&mut self, n: usize) -> Vec<usize> {
        (0..n).map(|_| self.nonneg()).collect()
    }

    pub fn num_vars(&self) -> usize {
        self.bounds.len()
    }

    /// Adds `expr rel rhs` (the expression's constant moves to the right) and
    /// returns the row index.
    pub fn constrain(&mut self, expr: LinExpr, rel: Relation, rhs: f64) -> usize {
        let bound = rhs - expr.constant;
        let expr = LinExpr {
            terms: expr.terms,
            constant: 0.0,
        };
        self.rows.push((expr, rel, bound));
        self.rows.len() - 1
    }

    /// Adds `|expr| <= t` as two rows.
    pub fn abs_le(&mut self, expr: &LinExpr, t: usize) {
        self.constrain(expr.clone().term(t, -1.0), Relation::Le, 0.0);
        self.constrain(expr.scaled(-1.0).term(t, -1.0), Relation::Le, 0.0);
    }

    pub fn set_objective(&mut self, expr: LinExpr) {
        self.objective = expr;
    }

    pub fn build(&self, sense: Sense) -> LinearProgram {
        let n = self.bounds.len();
        let dense = |e: &LinExpr| {
            let mut v = vec![0.0; n];
            for &(j, c) in &e.terms {
                v[j] += c;
            }
            v
        };
        let mut lp = LinearProgram::new(dense(&self.objective), sense);
        lp.bounds = self.bounds.clone();
        for (e, rel, rhs) in &self.rows {
            lp.constraints.push(super::Constraint {
                coeffs: dense(e),
                relation: *rel,
                bound: *rhs,
            });
        }
        lp
    }

    /// Solves and returns the solution; the objective constant is added back.
    pub fn solve(&self, sense: Sense) -> Result<LPSolution, LpError> {
        let mut sol = solve_lp(&self.build(sense))?;
        sol.objective += self.objective.constant;
        Ok(sol)
    }

    /// Solves and insists on an optimum.
    pub fn optimum(&self, sense: Sense) -> Result<LPSolution, LpError> {
        let sol = self.solve(sense)?;
        match sol.status {
            LpStatus::Optimal => Ok(sol),
            s => Err(LpError::NotOptimal(s)),
        }
    }
}
