//! Minimal LP-format model builder, writer, parser, and solution checker.
//!
//! Supports exactly the dialect the exporter emits: a `Maximize` objective,
//! named linear constraints, a `Bounds` section, `Binaries`, and `End`.
//! [`LpModel::check_solution`] verifies a variable assignment against every
//! constraint and recomputes the objective, so solver output can be validated
//! without linking any solver.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("line {0}: {1}")]
    Parse(usize, String),
    #[error("unexpected end of file in section {0}")]
    UnexpectedEof(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpSense {
    Le,
    Ge,
    Eq,
}

impl CmpSense {
    fn as_str(self) -> &'static str {
        match self {
            CmpSense::Le => "<=",
            CmpSense::Ge => ">=",
            CmpSense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpConstraint {
    pub name: String,
    pub terms: Vec<(f64, String)>,
    pub sense: CmpSense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpBound {
    pub var: String,
    pub lower: f64,
    pub upper: f64,
}

/// A maximization MILP over named variables. Variables outside `bounds` and
/// `binaries` default to `[0, +inf)` as in LP format.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LpModel {
    pub name: String,
    pub objective: Vec<(f64, String)>,
    pub constraints: Vec<LpConstraint>,
    pub bounds: Vec<LpBound>,
    pub binaries: Vec<String>,
}

fn push_terms(out: &mut String, terms: &[(f64, String)], line_start: usize) {
    let mut first = true;
    for (coef, var) in terms {
        let term = if *coef < 0.0 {
            format!(" - {} {}", fmt_num(-coef), var)
        } else if first {
            format!(" {} {}", fmt_num(*coef), var)
        } else {
            format!(" + {} {}", fmt_num(*coef), var)
        };
        // stay well inside the classic 560-character LP line limit
        if out.len() - out.rfind('\n').map_or(0, |i| i + 1) + term.len() > 480 {
            out.push('\n');
            out.push_str(&" ".repeat(line_start));
        }
        out.push_str(&term);
        first = false;
    }
}

fn fmt_num(v: f64) -> String {
    // shortest round-trip representation keeps files deterministic
    format!("{v}")
}

impl LpModel {
    pub fn to_lp_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "\\ Problem: {}", self.name);
        s.push_str("Maximize\n obj:");
        push_terms(&mut s, &self.objective, 5);
        s.push_str("\nSubject To\n");
        for c in &self.constraints {
            let _ = write!(s, " {}:", c.name);
            push_terms(&mut s, &c.terms, c.name.len() + 2);
            let _ = writeln!(s, " {} {}", c.sense.as_str(), fmt_num(c.rhs));
        }
        if !self.bounds.is_empty() {
            s.push_str("Bounds\n");
            for b in &self.bounds {
                let _ = writeln!(
                    s,
                    " {} <= {} <= {}",
                    fmt_num(b.lower),
                    b.var,
                    fmt_num(b.upper)
                );
            }
        }
        if !self.binaries.is_empty() {
            s.push_str("Binaries\n");
            for v in &self.binaries {
                let _ = writeln!(s, " {v}");
            }
        }
        s.push_str("End\n");
        s
    }

    pub fn parse_lp(text: &str) -> Result<Self, LpError> {
        #[derive(PartialEq, Clone, Copy)]
        enum Section {
            Preamble,
            Objective,
            Constraints,
            Bounds,
            Binaries,
            Done,
        }
        let mut model = LpModel::default();
        let mut section = Section::Preamble;
        // the objective and each constraint may wrap; gather raw text per item
        let mut objective_text = String::new();
        let mut constraint_text = String::new();

        let flush_constraint = |text: &mut String, model: &mut LpModel, line: usize| {
            if text.trim().is_empty() {
                return Ok(());
            }
            let c = parse_constraint(text.trim(), line)?;
            model.constraints.push(c);
            text.clear();
            Ok(())
        };

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            if let Some(name) = raw.trim().strip_prefix("\\ Problem:") {
                model.name = name.trim().to_string();
                continue;
            }
            let line = match raw.find('\\') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let lower = trimmed.to_ascii_lowercase();
            let new_section = match lower.as_str() {
                "maximize" | "max" => Some(Section::Objective),
                "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
                "bounds" => Some(Section::Bounds),
                "binaries" | "binary" | "bin" => Some(Section::Binaries),
                "end" => Some(Section::Done),
                "minimize" | "min" => {
                    return Err(LpError::Parse(line_no, "only Maximize is supported".into()))
                }
                _ => None,
            };
            if let Some(next) = new_section {
                flush_constraint(&mut constraint_text, &mut model, line_no)?;
                section = next;
                continue;
            }
            match section {
                Section::Preamble => {
                    return Err(LpError::Parse(
                        line_no,
                        format!("unexpected text: {trimmed}"),
                    ))
                }
                Section::Objective => {
                    objective_text.push(' ');
                    objective_text.push_str(trimmed);
                }
                Section::Constraints => {
                    // a new constraint starts with `name:`; anything else is a
                    // continuation of the current one
                    if trimmed.contains(':') && !constraint_text.trim().is_empty() {
                        flush_constraint(&mut constraint_text, &mut model, line_no)?;
                    }
                    constraint_text.push(' ');
                    constraint_text.push_str(trimmed);
                }
                Section::Bounds => model.bounds.push(parse_bound(trimmed, line_no)?),
                Section::Binaries => {
                    for tok in trimmed.split_whitespace() {
                        model.binaries.push(tok.to_string());
                    }
                }
                Section::Done => return Err(LpError::Parse(line_no, "text after End".into())),
            }
        }
        flush_constraint(&mut constraint_text, &mut model, 0)?;
        let obj = objective_text.trim();
        let obj = obj.strip_prefix("obj:").unwrap_or(obj);
        model.objective = parse_expr(obj, 0)?;
        Ok(model)
    }

    /// Verify `solution` against every bound/binary/constraint at tolerance
    /// `tol`, and recompute the objective. Variables missing from the
    /// solution count as zero.
    pub fn check_solution(&self, solution: &BTreeMap<String, f64>, tol: f64) -> CheckReport {
        let value = |var: &str| solution.get(var).copied().unwrap_or(0.0);
        let mut violations = Vec::new();

        let mut known: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
        for (_, v) in &self.objective {
            known.insert(v);
        }
        for c in &self.constraints {
            for (_, v) in &c.terms {
                known.insert(v);
            }
        }
        for b in &self.bounds {
            known.insert(&b.var);
        }
        for v in &self.binaries {
            known.insert(v);
        }
        for var in solution.keys() {
            if !known.contains(var.as_str()) {
                violations.push(format!("unknown variable {var}"));
            }
        }

        for var in &self.binaries {
            let v = value(var);
            if (v - 0.0).abs() > tol && (v - 1.0).abs() > tol {
                violations.push(format!("binary {var} = {v}"));
            }
        }
        for b in &self.bounds {
            let v = value(&b.var);
            if v < b.lower - tol || v > b.upper + tol {
                violations.push(format!(
                    "bound {} <= {} <= {} violated by {}",
                    b.lower, b.var, b.upper, v
                ));
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|(coef, var)| coef * value(var)).sum();
            let ok = match c.sense {
                CmpSense::Le => lhs <= c.rhs + tol,
                CmpSense::Ge => lhs >= c.rhs - tol,
                CmpSense::Eq => (lhs - c.rhs).abs() <= tol,
            };
            if !ok {
                violations.push(format!(
                    "constraint {}: lhs {} {} rhs {}",
                    c.name,
                    lhs,
                    c.sense.as_str(),
                    c.rhs
                ));
            }
        }
        let objective = self
            .objective
            .iter()
            .map(|(coef, var)| coef * value(var))
            .sum();
        CheckReport {
            objective,
            violations,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub objective: f64,
    pub violations: Vec<String>,
}

impl CheckReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn parse_constraint(text: &str, line: usize) -> Result<LpConstraint, LpError> {
    let (name, rest) = text
        .split_once(':')
        .ok_or_else(|| LpError::Parse(line, format!("constraint without name: {text}")))?;
    let (sense, pos, len) = find_sense(rest)
        .ok_or_else(|| LpError::Parse(line, format!("constraint without sense: {text}")))?;
    let terms = parse_expr(&rest[..pos], line)?;
    let rhs_text = rest[pos + len..].trim();
    let rhs: f64 = rhs_text
        .parse()
        .map_err(|_| LpError::Parse(line, format!("bad rhs: {rhs_text}")))?;
    Ok(LpConstraint {
        name: name.trim().to_string(),
        terms,
        sense,
        rhs,
    })
}

fn find_sense(text: &str) -> Option<(CmpSense, usize, usize)> {
    if let Some(p) = text.find("<=") {
        return Some((CmpSense::Le, p, 2));
    }
    if let Some(p) = text.find(">=") {
        return Some((CmpSense::Ge, p, 2));
    }
    if let Some(p) = text.find('=') {
        return Some((CmpSense::Eq, p, 1));
    }
    None
}

fn parse_expr(text: &str, line: usize) -> Result<Vec<(f64, String)>, LpError> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for tok in text.split_whitespace() {
        match tok {
            "+" => {}
            "-" => sign = -sign,
            _ => {
                if let Ok(num) = tok.parse::<f64>() {
                    if coef.is_some() {
                        return Err(LpError::Parse(
                            line,
                            format!("two coefficients before a variable near {tok}"),
                        ));
                    }
                    coef = Some(num);
                } else {
                    // handle glued signs like "-0.5" handled above; "+x" below
                    let (tok, extra_sign) = match tok.strip_prefix('-') {
                        Some(rest) => (rest, -1.0),
                        None => (tok.strip_prefix('+').unwrap_or(tok), 1.0),
                    };
                    terms.push((
                        sign * extra_sign * coef.take().unwrap_or(1.0),
                        tok.to_string(),
                    ));
                    sign = 1.0;
                }
            }
        }
    }
    if coef.is_some() {
        return Err(LpError::Parse(line, "dangling coefficient".into()));
    }
    Ok(terms)
}

fn parse_bound(text: &str, line: usize) -> Result<LpBound, LpError> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    match toks.as_slice() {
        [lo, "<=", var, "<=", hi] => Ok(LpBound {
            var: var.to_string(),
            lower: lo
                .parse()
                .map_err(|_| LpError::Parse(line, format!("bad bound {lo}")))?,
            upper: hi
                .parse()
                .map_err(|_| LpError::Parse(line, format!("bad bound {hi}")))?,
        }),
        [var, "<=", hi] => Ok(LpBound {
            var: var.to_string(),
            lower: 0.0,
            upper: hi
                .parse()
                .map_err(|_| LpError::Parse(line, format!("bad bound {hi}")))?,
        }),
        [var, ">=", lo] => Ok(LpBound {
            var: var.to_string(),
            lower: lo
                .parse()
                .map_err(|_| LpError::Parse(line, format!("bad bound {lo}")))?,
            upper: f64::INFINITY,
        }),
        [var, "free"] => Ok(LpBound {
            var: var.to_string(),
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }),
        _ => Err(LpError::Parse(line, format!("unsupported bound: {text}"))),
    }
}

/// Parse a solution file: one `name value` pair per line, `#` and `\`
/// comments ignored. An optional `=` between name and value is accepted.
pub fn parse_solution(text: &str) -> Result<BTreeMap<String, f64>, LpError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split(['#', '\\']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cleaned = line.replace('=', " ");
        let mut toks = cleaned.split_whitespace();
        let name = toks
            .next()
            .ok_or_else(|| LpError::Parse(idx + 1, "missing variable name".into()))?;
        let value: f64 = toks
            .next()
            .ok_or_else(|| LpError::Parse(idx + 1, format!("missing value for {name}")))?
            .parse()
            .map_err(|_| LpError::Parse(idx + 1, format!("bad value for {name}")))?;
        if toks.next().is_some() {
            return Err(LpError::Parse(
                idx + 1,
                format!("trailing tokens after {name}"),
            ));
        }
        out.insert(name.to_string(), value);
    }
    Ok(out)
}
