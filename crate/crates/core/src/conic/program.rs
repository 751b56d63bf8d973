use std::fmt::Write as _;
use std::ops::Range;

use crate::error::{Error, Result};

/// `sum_i coef_i x[i] + constant`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AffineExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn constant(value: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: value,
        }
    }

    pub fn var(index: usize, coef: f64) -> Self {
        Self {
            terms: vec![(index, coef)],
            constant: 0.0,
        }
    }

    pub fn plus(mut self, index: usize, coef: f64) -> Self {
        if coef != 0.0 {
            self.terms.push((index, coef));
        }
        self
    }

    pub fn plus_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>() + self.constant
    }

    fn max_index(&self) -> Option<usize> {
        self.terms.iter().map(|&(i, _)| i).max()
    }

    fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.terms.iter().all(|(_, c)| c.is_finite())
    }

    fn render(&self) -> String {
        let mut s = format!("{:e}", self.constant);
        for &(i, c) in &self.terms {
            let _ = write!(s, " {:+e}*x{}", c, i);
        }
        s
    }
}

/// One convex constraint of a conic program.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// `expr >= 0`.
    Nonnegative(AffineExpr),
    /// `||rows|| <= bound`.
    SecondOrder { rows: Vec<AffineExpr>, bound: AffineExpr },
    /// `||rows||^2 <= 2 u v` with `u, v >= 0`.
    RotatedSecondOrder {
        rows: Vec<AffineExpr>,
        u: AffineExpr,
        v: AffineExpr,
    },
}

impl Constraint {
    /// Signed slack at `x`: nonnegative when satisfied. Rotated cones report
    /// `2uv - ||rows||^2`, the residual of the quadratic they encode.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let norm_sq = |rows: &[AffineExpr]| rows.iter().map(|r| r.eval(x).powi(2)).sum::<f64>();
        match self {
            Constraint::Nonnegative(e) => e.eval(x),
            Constraint::SecondOrder { rows, bound } => bound.eval(x) - norm_sq(rows).sqrt(),
            Constraint::RotatedSecondOrder { rows, u, v } => {
                let (u, v) = (u.eval(x), v.eval(x));
                let quad = 2.0 * u * v - norm_sq(rows);
                if u >= 0.0 && v >= 0.0 {
                    quad
                } else {
                    quad.min(u).min(v)
                }
            }
        }
    }

    fn exprs(&self) -> Box<dyn Iterator<Item = &AffineExpr> + '_> {
        match self {
            Constraint::Nonnegative(e) => Box::new(std::iter::once(e)),
            Constraint::SecondOrder { rows, bound } => Box::new(rows.iter().chain(std::iter::once(bound))),
            Constraint::RotatedSecondOrder { rows, u, v } => {
                Box::new(rows.iter().chain([u, v]))
            }
        }
    }

    fn render(&self) -> String {
        let join = |rows: &[AffineExpr]| {
            rows.iter()
                .map(AffineExpr::render)
                .collect::<Vec<_>>()
                .join(" ; ")
        };
        match self {
            Constraint::Nonnegative(e) => format!("nonneg {} >= 0", e.render()),
            Constraint::SecondOrder { rows, bound } => {
                format!("soc || {} || <= {}", join(rows), bound.render())
            }
            Constraint::RotatedSecondOrder { rows, u, v } => format!(
                "rsoc || {} ||^2 <= 2 * ( {} ) * ( {} )",
                join(rows),
                u.render(),
                v.render()
            ),
        }
    }
}

/// `maximize objective_scale * x[objective_var]` subject to a list of
/// conic constraints over `x in R^num_vars`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub num_vars: usize,
    pub objective_var: usize,
    /// Reported objective is `objective_scale * x[objective_var]`.
    pub objective_scale: f64,
    pub constraints: Vec<Constraint>,
    /// Named variable ranges, for dumps and extraction.
    pub slices: Vec<(String, Range<usize>)>,
}

impl ConicProgram {
    pub fn new(num_vars: usize, objective_var: usize) -> Self {
        Self {
            num_vars,
            objective_var,
            objective_scale: 1.0,
            constraints: Vec::new(),
            slices: Vec::new(),
        }
    }

    pub fn push(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.objective_scale * x[self.objective_var]
    }

    /// Largest constraint violation at `x` (zero when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| (-c.residual(x)).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective_var >= self.num_vars {
            return Err(Error::MalformedProgram("objective variable out of range".into()));
        }
        if !(self.objective_scale.is_finite() && self.objective_scale > 0.0) {
            return Err(Error::MalformedProgram("objective scale must be positive".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            for e in c.exprs() {
                if !e.is_finite() {
                    return Err(Error::MalformedProgram(format!("constraint {i} has non-finite data")));
                }
                if e.max_index().is_some_and(|m| m >= self.num_vars) {
                    return Err(Error::MalformedProgram(format!(
                        "constraint {i} references a variable out of range"
                    )));
                }
            }
            if let Constraint::SecondOrder { rows, .. } | Constraint::RotatedSecondOrder { rows, .. } = c {
                if rows.is_empty() {
                    return Err(Error::MalformedProgram(format!("constraint {i} has an empty cone")));
                }
            }
        }
        Ok(())
    }

    /// Plain-text dump, one constraint per line:
    ///
    /// ```text
    /// conic-program vars=<n> maximize <scale>*x<t>
    /// slice <name> <start> <end>
    /// nonneg <affine> >= 0
    /// soc || <affine> ; <affine> ... || <= <affine>
    /// rsoc || <affine> ; ... ||^2 <= 2 * ( <affine> ) * ( <affine> )
    /// ```
    ///
    /// where `<affine>` is `<constant> <+coef>*x<index> ...`.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "conic-program vars={} maximize {:e}*x{}\n",
            self.num_vars, self.objective_scale, self.objective_var
        );
        for (name, r) in &self.slices {
            let _ = writeln!(out, "slice {name} {} {}", r.start, r.end);
        }
        for c in &self.constraints {
            out.push_str(&c.render());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residuals() {
        let x = [3.0, 4.0, 1.0];
        let soc = Constraint::SecondOrder {
            rows: vec![AffineExpr::var(0, 1.0), AffineExpr::var(1, 1.0)],
            bound: AffineExpr::constant(6.0),
        };
        assert_eq!(soc.residual(&x), 1.0);
        let rsoc = Constraint::RotatedSecondOrder {
            rows: vec![AffineExpr::var(0, 1.0)],
            u: AffineExpr::var(1, 1.0),
            v: AffineExpr::constant(0.5),
        };
        assert_eq!(rsoc.residual(&x), 4.0 - 9.0);
        let lin = Constraint::Nonnegative(AffineExpr::var(2, -1.0).plus(0, 1.0));
        assert_eq!(lin.residual(&x), 2.0);
    }

    #[test]
    fn validation_catches_bad_indices() {
        let mut p = ConicProgram::new(2, 1);
        p.push(Constraint::Nonnegative(AffineExpr::var(5, 1.0)));
        assert!(p.validate().is_err());
        let mut p = ConicProgram::new(2, 2);
        p.push(Constraint::Nonnegative(AffineExpr::var(0, 1.0)));
        assert!(p.validate().is_err());
    }

    #[test]
    fn text_dump_has_one_line_per_constraint() {
        let mut p = ConicProgram::new(2, 1);
        p.slices.push(("x".into(), 0..1));
        p.push(Constraint::Nonnegative(AffineExpr::constant(3.0).plus(1, -1.0)));
        p.push(Constraint::SecondOrder {
            rows: vec![AffineExpr::var(0, 1.0)],
            bound: AffineExpr::constant(1.0),
        });
        let text = p.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("conic-program vars=2"));
        assert_eq!(lines[2], "nonneg 3e0 -1e0*x1 >= 0");
        assert!(lines[3].starts_with("soc || "));
    }
}
