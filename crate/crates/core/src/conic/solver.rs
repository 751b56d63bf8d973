//! Interior-point backend. Programs are lowered to the Clarabel standard
//! form `min q^T x  s.t.  A x + s = b, s in K`.

use std::time::{Duration, Instant};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use super::program::{AffineExpr, ConicProgram, Constraint};

/// Feasibility tolerance an `Optimal` outcome is held to.
pub const FEASIBILITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    NumericalFailure,
}

impl SolveStatus {
    pub fn is_usable(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Scaled objective, `objective_scale * x[objective_var]`.
    pub objective: f64,
    pub x: Vec<f64>,
    pub iterations: u32,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub max_iter: u32,
    pub tol_gap_abs: f64,
    pub tol_gap_rel: f64,
    pub tol_feas: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol_gap_abs: 1e-8,
            tol_gap_rel: 1e-8,
            tol_feas: 1e-8,
        }
    }
}

struct Assembly {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

impl Assembly {
    /// Appends the slack row `s = expr`, i.e. `A row = -coefs`, `b = constant`.
    fn row(&mut self, expr: &AffineExpr, scale: f64) {
        let r = self.b.len();
        for &(i, c) in &expr.terms {
            self.rows.push(r);
            self.cols.push(i);
            self.vals.push(-c * scale);
        }
        self.b.push(expr.constant * scale);
    }

    /// Appends the slack row `s = (a + sign * b) / sqrt 2`.
    fn mixed_row(&mut self, a: &AffineExpr, b: &AffineExpr, sign: f64) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = self.b.len();
        for &(i, c) in &a.terms {
            self.rows.push(r);
            self.cols.push(i);
            self.vals.push(-c * s);
        }
        for &(i, c) in &b.terms {
            self.rows.push(r);
            self.cols.push(i);
            self.vals.push(-c * s * sign);
        }
        self.b.push((a.constant + sign * b.constant) * s);
    }

    fn push_cone(&mut self, cone: SupportedConeT<f64>) {
        // Merge runs of nonnegative rows into one cone.
        if let (SupportedConeT::NonnegativeConeT(d), Some(SupportedConeT::NonnegativeConeT(prev))) =
            (&cone, self.cones.last_mut())
        {
            *prev += d;
            return;
        }
        self.cones.push(cone);
    }
}

fn assemble(program: &ConicProgram) -> Assembly {
    let mut asm = Assembly {
        rows: Vec::new(),
        cols: Vec::new(),
        vals: Vec::new(),
        b: Vec::new(),
        cones: Vec::new(),
    };
    for c in &program.constraints {
        match c {
            Constraint::Nonnegative(e) => {
                asm.row(e, 1.0);
                asm.push_cone(SupportedConeT::NonnegativeConeT(1));
            }
            Constraint::SecondOrder { rows, bound } => {
                asm.row(bound, 1.0);
                for r in rows {
                    asm.row(r, 1.0);
                }
                asm.push_cone(SupportedConeT::SecondOrderConeT(rows.len() + 1));
            }
            Constraint::RotatedSecondOrder { rows, u, v } => {
                // ||x||^2 <= 2uv  <=>  ||((u - v)/sqrt2, x)|| <= (u + v)/sqrt2
                asm.mixed_row(u, v, 1.0);
                asm.mixed_row(u, v, -1.0);
                for r in rows {
                    asm.row(r, 1.0);
                }
                asm.push_cone(SupportedConeT::SecondOrderConeT(rows.len() + 2));
            }
        }
    }
    asm
}

/// Solves with default settings.
pub fn solve(program: &ConicProgram) -> SolveOutcome {
    solve_with(program, &SolverSettings::default())
}

pub fn solve_with(program: &ConicProgram, settings: &SolverSettings) -> SolveOutcome {
    let start = Instant::now();
    let n = program.num_vars;
    let failure = |status| SolveOutcome {
        status,
        objective: f64::NAN,
        x: vec![f64::NAN; n],
        iterations: 0,
        wall_time: start.elapsed(),
    };
    if program.validate().is_err() {
        return failure(SolveStatus::NumericalFailure);
    }

    let asm = assemble(program);
    let m = asm.b.len();
    let a = CscMatrix::new_from_triplets(m, n, asm.rows, asm.cols, asm.vals);
    let p = CscMatrix::zeros((n, n));
    let mut q = vec![0.0; n];
    q[program.objective_var] = -1.0;

    let built = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(settings.max_iter)
        .tol_gap_abs(settings.tol_gap_abs)
        .tol_gap_rel(settings.tol_gap_rel)
        .tol_feas(settings.tol_feas)
        .build();
    let Ok(clarabel_settings) = built else {
        return failure(SolveStatus::NumericalFailure);
    };
    let Ok(mut solver) = DefaultSolver::new(&p, &q, &a, &asm.b, &asm.cones, clarabel_settings) else {
        return failure(SolveStatus::NumericalFailure);
    };
    solver.solve();

    let sol = &solver.solution;
    let mut status = match sol.status {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::AlmostSolved => SolveStatus::NearOptimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
        _ => SolveStatus::NumericalFailure,
    };
    let x = sol.x.clone();
    if x.iter().any(|v| !v.is_finite()) {
        status = SolveStatus::NumericalFailure;
    } else if status == SolveStatus::Optimal && program.max_violation(&x) > FEASIBILITY_TOL {
        status = SolveStatus::NearOptimal;
    }
    SolveOutcome {
        status,
        objective: program.objective(&x),
        x,
        iterations: sol.iterations,
        wall_time: start.elapsed(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_upper_bounds() {
        let mut p = ConicProgram::new(1, 0);
        p.push(Constraint::Nonnegative(AffineExpr::constant(3.0).plus(0, -1.0)));
        p.push(Constraint::Nonnegative(AffineExpr::constant(5.0).plus(0, -1.0)));
        let out = solve(&p);
        assert_eq!(out.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(out.objective, 3.0, epsilon = 1e-7);
    }

    #[test]
    fn cauchy_schwarz() {
        // maximize t s.t. ||x|| <= 1, t <= a^T x with ||a|| = 2
        let a = [2.0f64.sqrt(), 1.0, 1.0 / 3.0];
        let norm_a = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let a: Vec<f64> = a.iter().map(|v| 2.0 * v / norm_a).collect();
        let mut p = ConicProgram::new(4, 3);
        p.push(Constraint::SecondOrder {
            rows: (0..3).map(|i| AffineExpr::var(i, 1.0)).collect(),
            bound: AffineExpr::constant(1.0),
        });
        let mut e = AffineExpr::var(3, -1.0);
        for (i, &ai) in a.iter().enumerate() {
            e = e.plus(i, ai);
        }
        p.push(Constraint::Nonnegative(e));
        let out = solve(&p);
        assert_eq!(out.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(out.objective, 2.0, epsilon = 1e-7);
        for i in 0..3 {
            assert_abs_diff_eq!(out.x[i], a[i] / 2.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn rotated_cone() {
        // maximize t s.t. t^2 <= 2 * 1 * 2  =>  t = 2
        let mut p = ConicProgram::new(1, 0);
        p.push(Constraint::RotatedSecondOrder {
            rows: vec![AffineExpr::var(0, 1.0)],
            u: AffineExpr::constant(1.0),
            v: AffineExpr::constant(2.0),
        });
        let out = solve(&p);
        assert_eq!(out.status, SolveStatus::Optimal);
        assert_abs_diff_eq!(out.objective, 2.0, epsilon = 1e-7);
    }

    #[test]
    fn infeasible_is_reported() {
        let mut p = ConicProgram::new(2, 1);
        p.push(Constraint::Nonnegative(AffineExpr::var(0, 1.0).plus(1, -1.0)));
        p.push(Constraint::Nonnegative(AffineExpr::constant(-1.0).plus(0, -1.0)));
        p.push(Constraint::Nonnegative(AffineExpr::var(0, 1.0)));
        assert_eq!(solve(&p).status, SolveStatus::Infeasible);
    }

    #[test]
    fn repeated_solves_are_identical() {
        let mut p = ConicProgram::new(3, 2);
        p.push(Constraint::SecondOrder {
            rows: vec![AffineExpr::var(0, 1.0), AffineExpr::var(1, 1.0)],
            bound: AffineExpr::constant(1.0),
        });
        p.push(Constraint::Nonnegative(AffineExpr::var(0, 0.3).plus(1, 0.7).plus(2, -1.0)));
        let a = solve(&p);
        let b = solve(&p);
        assert_eq!(a.x, b.x);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }

    #[test]
    fn malformed_program_fails_cleanly() {
        let mut p = ConicProgram::new(1, 0);
        p.push(Constraint::Nonnegative(AffineExpr::var(0, f64::NAN)));
        assert_eq!(solve(&p).status, SolveStatus::NumericalFailure);
    }
}
