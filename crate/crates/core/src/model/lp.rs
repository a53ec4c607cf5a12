//! CPLEX-LP text for [`MipModel`].
//!
//! Layout: a `\` comment header carrying the model name and option flags,
//! then `Minimize`, `Subject To`, `Bounds` (flow variables), `Binaries`,
//! `Generals` and `End`. Every variable appears in the objective, with a
//! zero coefficient if need be, so the objective fixes the variable order.
//! Long rows wrap onto continuation lines indented by three spaces.

use std::fmt::Write as _;

use super::{Constraint, MipModel, ModelOptions, Sense, VarKey, VarKind, Variable};
use crate::{Error, Result};

const WRAP: usize = 250;
const CONT: &str = "   ";

struct Wrapped {
    out: String,
    line: String,
}

impl Wrapped {
    fn new(head: String) -> Self {
        Wrapped {
            out: String::new(),
            line: head,
        }
    }

    fn push(&mut self, token: &str) {
        if self.line.len() + 1 + token.len() > WRAP && !self.line.trim().is_empty() {
            self.out.push_str(&self.line);
            self.out.push('\n');
            self.line = CONT.to_string();
            self.line.push_str(token);
        } else {
            if !self.line.is_empty() && !self.line.ends_with(' ') {
                self.line.push(' ');
            }
            self.line.push_str(token);
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str(&self.line);
        self.out.push('\n');
        self.out
    }
}

fn term(first: bool, coef: f64, name: &str) -> String {
    let sign = if coef < 0.0 || (coef == 0.0 && coef.is_sign_negative()) { "-" } else { "+" };
    let mag = coef.abs();
    let body = if mag == 1.0 { name.to_string() } else { format!("{mag} {name}") };
    match (first, sign) {
        (true, "+") => body,
        _ => format!("{sign} {body}"),
    }
}

fn linear(head: String, terms: impl Iterator<Item = (f64, String)>) -> Wrapped {
    let mut w = Wrapped::new(head);
    let mut first = true;
    for (c, name) in terms {
        w.push(&term(first, c, &name));
        first = false;
    }
    if first {
        w.push("0");
    }
    w
}

/// Renders the model as LP text. Output is a pure function of the model.
pub fn export_lp(model: &MipModel) -> String {
    let mut out = String::new();
    writeln!(out, "\\ parkroute model {}", model.name).unwrap();
    let flags: Vec<String> = model
        .options
        .flags()
        .iter()
        .map(|(k, v)| format!("{k}={}", u8::from(*v)))
        .collect();
    writeln!(out, "\\ options {}", flags.join(" ")).unwrap();
    out.push_str("Minimize\n");
    let names: Vec<String> = model.variables.iter().map(|v| v.key.name()).collect();
    out.push_str(
        &linear(
            " obj:".to_string(),
            model.variables.iter().zip(&names).map(|(v, n)| (v.cost, n.clone())),
        )
        .finish(),
    );
    out.push_str("Subject To\n");
    for c in &model.constraints {
        let mut w = linear(format!(" {}:", c.tag), c.terms.iter().map(|&(v, k)| (k, names[v].clone())));
        w.push(c.sense.symbol());
        w.push(&format!("{}", c.rhs));
        out.push_str(&w.finish());
    }
    out.push_str("Bounds\n");
    for (v, n) in model.variables.iter().zip(&names) {
        if v.kind == VarKind::Integer {
            writeln!(out, " 0 <= {n} <= {}", v.upper).unwrap();
        }
    }
    for (section, kind) in [("Binaries", VarKind::Binary), ("Generals", VarKind::Integer)] {
        out.push_str(section);
        out.push('\n');
        let mut w = Wrapped::new(String::new());
        let mut any = false;
        for (v, n) in model.variables.iter().zip(&names) {
            if v.kind == kind {
                w.push(n);
                any = true;
            }
        }
        if any {
            let body = w.finish();
            for line in body.lines() {
                if let Some(rest) = line.strip_prefix(CONT) {
                    writeln!(out, "{CONT}{rest}").unwrap();
                } else {
                    writeln!(out, " {line}").unwrap();
                }
            }
        }
    }
    out.push_str("End\n");
    out
}

fn lp_err(line: usize, msg: impl Into<String>) -> Error {
    Error::LpParse { line, msg: msg.into() }
}

/// Logical statements: a first line plus its continuation lines.
fn statements(lines: &[(usize, &str)]) -> Vec<(usize, String)> {
    let mut out: Vec<(usize, String)> = Vec::new();
    for &(no, l) in lines {
        match (l.strip_prefix(CONT), out.last_mut()) {
            (Some(rest), Some(last)) => {
                last.1.push(' ');
                last.1.push_str(rest.trim());
            }
            _ => out.push((no, l.trim().to_string())),
        }
    }
    out
}

fn parse_terms(no: usize, tokens: &[&str]) -> Result<Vec<(f64, String)>> {
    let mut out = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for &t in tokens {
        match t {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            "0" if tokens.len() == 1 => {}
            _ => {
                if let Ok(c) = t.parse::<f64>() {
                    coef = Some(c);
                } else {
                    out.push((sign * coef.unwrap_or(1.0), t.to_string()));
                    sign = 1.0;
                    coef = None;
                }
            }
        }
    }
    if coef.is_some() {
        return Err(lp_err(no, "dangling coefficient"));
    }
    Ok(out)
}

fn split_label(no: usize, s: &str) -> Result<(String, String)> {
    let (label, rest) = s.split_once(':').ok_or_else(|| lp_err(no, "missing row label"))?;
    Ok((label.trim().to_string(), rest.trim().to_string()))
}

/// Parses LP text written by [`export_lp`]. Other LP dialect features are
/// not supported.
pub fn parse_lp(text: &str) -> Result<MipModel> {
    let mut name = String::new();
    let mut options = ModelOptions::default();
    let mut sections: Vec<(String, Vec<(usize, &str)>)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let no = i + 1;
        if let Some(c) = line.strip_prefix('\\') {
            let c = c.trim();
            if let Some(n) = c.strip_prefix("parkroute model ") {
                name = n.to_string();
            } else if let Some(flags) = c.strip_prefix("options ") {
                for kv in flags.split_whitespace() {
                    let (k, v) = kv.split_once('=').ok_or_else(|| lp_err(no, "bad option flag"))?;
                    let on = v == "1";
                    match k {
                        "vi_claim4" => options.vi_claim4 = on,
                        "vi_corollary1" => options.vi_corollary1 = on,
                        "vi_claim5" => options.vi_claim5 = on,
                        "vi_corollary3" => options.vi_corollary3 = on,
                        "var_reduction" => options.var_reduction = on,
                        _ => return Err(lp_err(no, format!("unknown option {k}"))),
                    }
                }
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !line.starts_with(' ') {
            sections.push((line.trim().to_string(), Vec::new()));
        } else {
            sections
                .last_mut()
                .ok_or_else(|| lp_err(no, "content before first section"))?
                .1
                .push((no, line));
        }
    }

    let mut variables: Vec<Variable> = Vec::new();
    let mut position = std::collections::HashMap::new();
    let mut constraints = Vec::new();
    let mut seen_end = false;
    for (head, lines) in &sections {
        match head.as_str() {
            "Minimize" => {
                for (no, s) in statements(lines) {
                    let (_, body) = split_label(no, &s)?;
                    let tokens: Vec<&str> = body.split_whitespace().collect();
                    for (c, n) in parse_terms(no, &tokens)? {
                        let key = VarKey::parse(&n).ok_or_else(|| lp_err(no, format!("bad variable name {n}")))?;
                        position.insert(n, variables.len());
                        variables.push(Variable {
                            key,
                            kind: VarKind::Binary,
                            upper: 1.0,
                            cost: c,
                        });
                    }
                }
            }
            "Subject To" => {
                for (no, s) in statements(lines) {
                    let (tag, body) = split_label(no, &s)?;
                    let tokens: Vec<&str> = body.split_whitespace().collect();
                    let at = tokens
                        .iter()
                        .position(|t| matches!(*t, "<=" | ">=" | "="))
                        .ok_or_else(|| lp_err(no, "row without sense"))?;
                    let sense = match tokens[at] {
                        "<=" => Sense::Le,
                        ">=" => Sense::Ge,
                        _ => Sense::Eq,
                    };
                    let rhs: f64 = tokens
                        .get(at + 1)
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| lp_err(no, "bad right-hand side"))?;
                    let terms = parse_terms(no, &tokens[..at])?
                        .into_iter()
                        .map(|(c, n)| {
                            position
                                .get(&n)
                                .map(|&v| (v, c))
                                .ok_or_else(|| lp_err(no, format!("undeclared variable {n}")))
                        })
                        .collect::<Result<_>>()?;
                    constraints.push(Constraint { tag, terms, sense, rhs });
                }
            }
            "Bounds" => {
                for &(no, l) in lines {
                    let t: Vec<&str> = l.split_whitespace().collect();
                    match t[..] {
                        ["0", "<=", n, "<=", ub] => {
                            let v = *position.get(n).ok_or_else(|| lp_err(no, "bound on unknown variable"))?;
                            variables[v].upper = ub.parse().map_err(|_| lp_err(no, "bad bound"))?;
                        }
                        _ => return Err(lp_err(no, "unsupported bound")),
                    }
                }
            }
            "Binaries" | "Generals" => {
                let kind = if head == "Binaries" { VarKind::Binary } else { VarKind::Integer };
                for &(no, l) in lines {
                    for n in l.split_whitespace() {
                        let v = *position.get(n).ok_or_else(|| lp_err(no, format!("unknown variable {n}")))?;
                        variables[v].kind = kind;
                    }
                }
            }
            "End" => seen_end = true,
            other => return Err(lp_err(0, format!("unknown section {other}"))),
        }
    }
    if !seen_end {
        return Err(lp_err(text.lines().count(), "missing End"));
    }
    Ok(MipModel::from_parts(name, options, variables, constraints))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_grid_instance, GridParams, Instance, Matrix};
    use crate::model::build_model;
    use crate::servicesets::enumerate_catalog;

    fn one_customer() -> Instance {
        let drive = Matrix::from_rows("d", &[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        Instance::new(drive, Matrix::zeros(1), vec![1.5], Some(1), 0.0).unwrap()
    }

    #[test]
    fn single_customer_objective() {
        let inst = one_customer();
        let cat = enumerate_catalog(&inst).unwrap();
        let m = build_model(&inst, &cat, ModelOptions::default()).unwrap();
        let text = export_lp(&m);
        let obj = text.lines().find(|l| l.starts_with(" obj:")).unwrap();
        assert!(obj.contains("3.5 x_0_1"), "{obj}");
        assert!(obj.contains("+ 2 x_1_0"), "{obj}");
    }

    #[test]
    fn export_parse_export_is_identical() {
        let g = gen_grid_instance(&GridParams::unit(2, 2).with_park_time(0.3), true).unwrap();
        let cat = enumerate_catalog(&g.instance).unwrap();
        for opts in [ModelOptions::default(), ModelOptions::all()] {
            let m = build_model(&g.instance, &cat, opts).unwrap();
            let a = export_lp(&m);
            let parsed = parse_lp(&a).unwrap();
            assert_eq!(parsed, m);
            assert_eq!(export_lp(&parsed), a);
        }
    }

    #[test]
    fn long_rows_wrap() {
        let g = gen_grid_instance(&GridParams::unit(4, 3), true).unwrap();
        let cat = enumerate_catalog(&g.instance).unwrap();
        let m = build_model(&g.instance, &cat, ModelOptions::default()).unwrap();
        let text = export_lp(&m);
        assert!(text.lines().all(|l| l.len() <= WRAP + 40));
        assert!(text.lines().any(|l| l.starts_with(CONT)));
        assert_eq!(export_lp(&parse_lp(&text).unwrap()), text);
    }

    #[test]
    fn line_count_matches_structure() {
        let drive = Matrix::from_rows("d", &[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap();
        let walk = Matrix::from_rows("w", &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let inst = Instance::new(drive, walk, vec![1.0, 1.0], Some(2), 0.0).unwrap();
        let cat = enumerate_catalog(&inst).unwrap();
        let m = build_model(&inst, &cat, ModelOptions::all()).unwrap();
        let text = export_lp(&m);
        let ints = m.variables.iter().filter(|v| v.kind == VarKind::Integer).count();
        // Two comment lines, six section headers, the objective, one line
        // per row, one per bound and one line each for the two kind lists.
        assert_eq!(text.lines().count(), 2 + 6 + 1 + m.constraints.len() + ints + 2);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(parse_lp("Minimize\n obj: q_1\nEnd\n"), Err(Error::LpParse { .. })));
        assert!(matches!(parse_lp("Minimize\n obj: x_0_1\n"), Err(Error::LpParse { .. })));
    }
}
