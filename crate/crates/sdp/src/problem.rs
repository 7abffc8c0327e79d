use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::SdpError;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Direction of an inequality `trace(A W) {≤, ≥} bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    LessEqual,
    GreaterEqual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub matrix: DMatrix<f64>,
    pub relation: Relation,
    pub bound: f64,
}

impl Constraint {
    /// Signed slack of `W` against this constraint; nonnegative when satisfied.
    pub fn slack(&self, w: &DMatrix<f64>) -> f64 {
        let value = self.matrix.dot(w);
        match self.relation {
            Relation::LessEqual => self.bound - value,
            Relation::GreaterEqual => value - self.bound,
        }
    }
}

/// `optimize trace(C W)` over `trace(W) = 1`, `W ⪰ 0` and a list of
/// trace inequalities. The unit-trace normalization is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    objective: DMatrix<f64>,
    sense: Sense,
    constraints: Vec<Constraint>,
}

fn check_symmetric(m: &DMatrix<f64>, dim: Option<usize>) -> Result<(), SdpError> {
    if m.nrows() != m.ncols() {
        return Err(SdpError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if let Some(dim) = dim {
        if m.nrows() != dim {
            return Err(SdpError::DimensionMismatch {
                expected: dim,
                found: m.nrows(),
            });
        }
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SdpError::NonFinite);
    }
    let scale = m.amax().max(1.0);
    let asymmetry = (m - m.transpose()).amax();
    if asymmetry > SYMMETRY_TOL * scale {
        return Err(SdpError::NotSymmetric { asymmetry });
    }
    Ok(())
}

impl SdpProblem {
    pub fn new(objective: DMatrix<f64>, sense: Sense) -> Result<Self, SdpError> {
        if objective.nrows() == 0 {
            return Err(SdpError::EmptyProblem);
        }
        check_symmetric(&objective, None)?;
        Ok(Self {
            objective,
            sense,
            constraints: Vec::new(),
        })
    }

    pub fn add_constraint(
        &mut self,
        matrix: DMatrix<f64>,
        relation: Relation,
        bound: f64,
    ) -> Result<(), SdpError> {
        check_symmetric(&matrix, Some(self.dim()))?;
        if !bound.is_finite() {
            return Err(SdpError::NonFinite);
        }
        self.constraints.push(Constraint {
            matrix,
            relation,
            bound,
        });
        Ok(())
    }

    pub fn with_constraint(
        mut self,
        matrix: DMatrix<f64>,
        relation: Relation,
        bound: f64,
    ) -> Result<Self, SdpError> {
        self.add_constraint(matrix, relation, bound)?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.objective.nrows()
    }

    pub fn objective(&self) -> &DMatrix<f64> {
        &self.objective
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Objective value `trace(C W)` in the problem's own sense.
    pub fn evaluate(&self, w: &DMatrix<f64>) -> f64 {
        self.objective.dot(w)
    }

    /// Serializes to the plain-text debugging format.
    ///
    /// ```text
    /// sdp <n> <max|min> <number of constraints>
    /// objective
    /// <n rows of n whitespace-separated numbers>
    /// constraint <le|ge> <bound>
    /// <n rows>
    /// ...
    /// ```
    ///
    /// Matrices are written row-major with shortest round-trip float
    /// formatting, so `from_text(to_text(p)) == p` exactly.
    pub fn to_text(&self) -> String {
        let n = self.dim();
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Maximize => "max",
            Sense::Minimize => "min",
        };
        let _ = writeln!(out, "sdp {n} {sense} {}", self.constraints.len());
        out.push_str("objective\n");
        write_matrix(&mut out, &self.objective);
        for c in &self.constraints {
            let rel = match c.relation {
                Relation::LessEqual => "le",
                Relation::GreaterEqual => "ge",
            };
            let _ = writeln!(out, "constraint {rel} {:?}", c.bound);
            write_matrix(&mut out, &c.matrix);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SdpError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (line_no, header) = lines.next().ok_or(SdpError::Parse {
            line: 0,
            message: "empty input".into(),
        })?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "sdp" {
            return Err(parse_err(line_no, "expected `sdp <n> <max|min> <k>`"));
        }
        let n: usize = parts[1]
            .parse()
            .map_err(|_| parse_err(line_no, "bad dimension"))?;
        let sense = match parts[2] {
            "max" => Sense::Maximize,
            "min" => Sense::Minimize,
            _ => return Err(parse_err(line_no, "sense must be `max` or `min`")),
        };
        let k: usize = parts[3]
            .parse()
            .map_err(|_| parse_err(line_no, "bad constraint count"))?;

        let (line_no, tag) = next_line(&mut lines)?;
        if tag != "objective" {
            return Err(parse_err(line_no, "expected `objective`"));
        }
        let objective = read_matrix(&mut lines, n)?;
        let mut problem = SdpProblem::new(objective, sense)?;
        for _ in 0..k {
            let (line_no, head) = next_line(&mut lines)?;
            let parts: Vec<&str> = head.split_whitespace().collect();
            if parts.len() != 3 || parts[0] != "constraint" {
                return Err(parse_err(line_no, "expected `constraint <le|ge> <bound>`"));
            }
            let relation = match parts[1] {
                "le" => Relation::LessEqual,
                "ge" => Relation::GreaterEqual,
                _ => return Err(parse_err(line_no, "relation must be `le` or `ge`")),
            };
            let bound: f64 = parts[2]
                .parse()
                .map_err(|_| parse_err(line_no, "bad bound"))?;
            let matrix = read_matrix(&mut lines, n)?;
            problem.add_constraint(matrix, relation, bound)?;
        }
        if let Some((line_no, _)) = lines.next() {
            return Err(parse_err(line_no, "trailing content"));
        }
        Ok(problem)
    }
}

fn parse_err(line: usize, message: &str) -> SdpError {
    SdpError::Parse {
        line,
        message: message.to_string(),
    }
}

fn next_line<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<(usize, &'a str), SdpError> {
    lines.next().ok_or(SdpError::Parse {
        line: 0,
        message: "unexpected end of input".into(),
    })
}

fn write_matrix(out: &mut String, m: &DMatrix<f64>) {
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:?}", m[(r, c)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

fn read_matrix<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    n: usize,
) -> Result<DMatrix<f64>, SdpError> {
    let mut m = DMatrix::zeros(n, n);
    for r in 0..n {
        let (line_no, row) = next_line(lines)?;
        let values: Result<Vec<f64>, _> = row.split_whitespace().map(str::parse).collect();
        let values = values.map_err(|_| parse_err(line_no, "bad number"))?;
        if values.len() != n {
            return Err(parse_err(line_no, "wrong row length"));
        }
        for (c, v) in values.into_iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric_objective() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(
            SdpProblem::new(m, Sense::Minimize),
            Err(SdpError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn rejects_wrong_constraint_dimension() {
        let p = SdpProblem::new(DMatrix::identity(3, 3), Sense::Maximize).unwrap();
        let err = p
            .with_constraint(DMatrix::identity(2, 2), Relation::LessEqual, 1.0)
            .unwrap_err();
        assert_eq!(
            err,
            SdpError::DimensionMismatch {
                expected: 3,
                found: 2
            }
        );
    }

    #[test]
    fn text_format_round_trips() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, -3.5e-7]);
        let a = DMatrix::from_row_slice(2, 2, &[0.1, 0.2, 0.2, 0.3]);
        let p = SdpProblem::new(c, Sense::Minimize)
            .unwrap()
            .with_constraint(a, Relation::GreaterEqual, 0.125)
            .unwrap();
        let text = p.to_text();
        assert!(text.starts_with("sdp 2 min 1\nobjective\n"));
        assert_eq!(SdpProblem::from_text(&text).unwrap(), p);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = SdpProblem::from_text("sdp 2 max 0\nobjective\n1 0\n0\n").unwrap_err();
        assert!(matches!(err, SdpError::Parse { line: 4, .. }));
    }
}
