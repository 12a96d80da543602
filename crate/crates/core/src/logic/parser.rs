use super::formula::{free_variables, Formula, PartitionedFormula, Term};
use super::structure::Signature;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unknown relation {name} at line {line}, column {col}")]
    UnknownRelation {
        name: String,
        line: usize,
        col: usize,
    },
    #[error(
        "relation {name} expects {expected} arguments, got {got} at line {line}, column {col}"
    )]
    Arity {
        name: String,
        expected: usize,
        got: usize,
        line: usize,
        col: usize,
    },
    #[error("free variables not covered by the partition: {}", vars.join(", "))]
    UncoveredVariables { vars: Vec<String> },
    #[error("bad partition: {0}")]
    BadPartition(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Amp,
    Pipe,
    Bang,
    Arrow,
    EqSign,
    LtSign,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut col = 1;
    for (i, c) in text.char_indices() {
        if i >= offset {
            break;
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            '&' => {
                i += 1;
                Tok::Amp
            }
            '|' => {
                i += 1;
                Tok::Pipe
            }
            '!' => {
                i += 1;
                Tok::Bang
            }
            '=' => {
                i += 1;
                Tok::EqSign
            }
            '<' => {
                i += 1;
                Tok::LtSign
            }
            '-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    i += 2;
                    Tok::Arrow
                } else {
                    let (line, col) = line_col(text, i);
                    return Err(ParseError::Syntax {
                        line,
                        col,
                        message: "expected -> after -".to_string(),
                    });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_alphanumeric() || d == '_' || d == '\'' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                Tok::Ident(text[start..i].to_string())
            }
            other => {
                let (line, col) = line_col(text, i);
                return Err(ParseError::Syntax {
                    line,
                    col,
                    message: format!("unexpected character {other:?}"),
                });
            }
        };
        toks.push((tok, start));
    }
    Ok(toks)
}

struct Parser<'a> {
    text: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    signature: &'a Signature,
    partition: Vec<String>,
    // Stack of (source name, renamed name) for active binders.
    scopes: Vec<(String, String)>,
}

impl<'a> Parser<'a> {
    fn err_at(&self, offset: usize, message: String) -> ParseError {
        let (line, col) = line_col(self.text, offset);
        ParseError::Syntax { line, col, message }
    }

    fn here(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(_, o)| *o)
            .unwrap_or(self.text.len())
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        let offset = self.here();
        match self.next() {
            Some(t) if t == tok => Ok(()),
            got => Err(self.err_at(
                offset,
                format!("expected {what}, found {}", describe(got.as_ref())),
            )),
        }
    }

    /// Picks a binder name that cannot capture partition variables,
    /// constants, or enclosing binders.
    fn fresh_binder(&self, want: &str) -> String {
        let collides = |name: &str| {
            self.partition.iter().any(|p| p == name)
                || self.signature.has_constant(name)
                || self.scopes.iter().any(|(_, r)| r == name)
        };
        if !collides(want) {
            return want.to_string();
        }
        for k in 1.. {
            let candidate = format!("{want}_{k}");
            if !collides(&candidate) {
                return candidate;
            }
        }
        unreachable!()
    }

    fn resolve_term(&self, name: &str) -> Term {
        if let Some((_, renamed)) = self.scopes.iter().rev().find(|(orig, _)| orig == name) {
            return Term::Var(renamed.clone());
        }
        if self.signature.has_constant(name) {
            return Term::Const(name.to_string());
        }
        Term::Var(name.to_string())
    }

    fn parse_implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.parse_or()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.next();
            let rhs = self.parse_implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn parse_or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_and()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.next();
            let rhs = self.parse_and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.next();
            let rhs = self.parse_unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Tok::Bang) => {
                self.next();
                Ok(Formula::not(self.parse_unary()?))
            }
            Some(Tok::Ident(name)) if name == "exists" || name == "forall" => {
                let quantifier = name.clone();
                self.next();
                let offset = self.here();
                let var = match self.next() {
                    Some(Tok::Ident(v)) => v,
                    got => {
                        return Err(self.err_at(
                            offset,
                            format!(
                                "expected a variable after {quantifier}, found {}",
                                describe(got.as_ref())
                            ),
                        ))
                    }
                };
                let renamed = self.fresh_binder(&var);
                self.expect(Tok::LParen, "( before the quantifier body")?;
                self.scopes.push((var, renamed.clone()));
                let body = self.parse_implies();
                self.scopes.pop();
                let body = body?;
                self.expect(Tok::RParen, ") after the quantifier body")?;
                Ok(if quantifier == "exists" {
                    Formula::Exists(renamed, Box::new(body))
                } else {
                    Formula::Forall(renamed, Box::new(body))
                })
            }
            Some(Tok::LParen) => {
                self.next();
                let inner = self.parse_implies()?;
                self.expect(Tok::RParen, ")")?;
                Ok(inner)
            }
            _ => self.parse_atom(),
        }
    }

    fn parse_atom(&mut self) -> Result<Formula, ParseError> {
        let offset = self.here();
        let name = match self.next() {
            Some(Tok::Ident(n)) => n,
            got => {
                return Err(self.err_at(
                    offset,
                    format!("expected a formula, found {}", describe(got.as_ref())),
                ))
            }
        };
        if self.peek() == Some(&Tok::LParen) {
            // Relation application.
            self.next();
            let mut args = Vec::new();
            if self.peek() != Some(&Tok::RParen) {
                loop {
                    let a_off = self.here();
                    match self.next() {
                        Some(Tok::Ident(t)) => args.push(self.resolve_term(&t)),
                        got => {
                            return Err(self.err_at(
                                a_off,
                                format!("expected a term, found {}", describe(got.as_ref())),
                            ))
                        }
                    }
                    match self.peek() {
                        Some(Tok::Comma) => {
                            self.next();
                        }
                        _ => break,
                    }
                }
            }
            self.expect(Tok::RParen, ") after relation arguments")?;
            let (line, col) = line_col(self.text, offset);
            let expected =
                self.signature
                    .relation_arity(&name)
                    .ok_or(ParseError::UnknownRelation {
                        name: name.clone(),
                        line,
                        col,
                    })?;
            if args.len() != expected {
                return Err(ParseError::Arity {
                    name,
                    expected,
                    got: args.len(),
                    line,
                    col,
                });
            }
            return Ok(Formula::Rel(name, args));
        }
        // Infix atom: term = term, or term < term.
        let lhs = self.resolve_term(&name);
        let op_off = self.here();
        match self.next() {
            Some(Tok::EqSign) => {
                let rhs = self.parse_term()?;
                Ok(Formula::Eq(lhs, rhs))
            }
            Some(Tok::LtSign) => {
                let rhs = self.parse_term()?;
                let (line, col) = line_col(self.text, op_off);
                if self.signature.relation_arity("lt") != Some(2) {
                    return Err(ParseError::UnknownRelation {
                        name: "lt".to_string(),
                        line,
                        col,
                    });
                }
                Ok(Formula::Rel("lt".to_string(), vec![lhs, rhs]))
            }
            got => Err(self.err_at(
                op_off,
                format!(
                    "expected = or < after a term, found {}",
                    describe(got.as_ref())
                ),
            )),
        }
    }

    fn parse_term(&mut self) -> Result<Term, ParseError> {
        let offset = self.here();
        match self.next() {
            Some(Tok::Ident(n)) => Ok(self.resolve_term(&n)),
            got => Err(self.err_at(
                offset,
                format!("expected a term, found {}", describe(got.as_ref())),
            )),
        }
    }
}

fn describe(tok: Option<&Tok>) -> String {
    match tok {
        None => "end of input".to_string(),
        Some(Tok::Ident(n)) => format!("{n:?}"),
        Some(Tok::LParen) => "\"(\"".to_string(),
        Some(Tok::RParen) => "\")\"".to_string(),
        Some(Tok::Comma) => "\",\"".to_string(),
        Some(Tok::Amp) => "\"&\"".to_string(),
        Some(Tok::Pipe) => "\"|\"".to_string(),
        Some(Tok::Bang) => "\"!\"".to_string(),
        Some(Tok::Arrow) => "\"->\"".to_string(),
        Some(Tok::EqSign) => "\"=\"".to_string(),
        Some(Tok::LtSign) => "\"<\"".to_string(),
    }
}

/// Parses `text` against `signature` and splits the free variables into
/// `object_vars` and `param_vars`.
///
/// Quantified variables that would shadow a partition variable, a constant,
/// or an enclosing binder are renamed on the way in, so the returned tree
/// never captures a parameter. Free variables outside the partition are an
/// error; unused partition variables are allowed.
pub fn parse_formula(
    signature: &Signature,
    text: &str,
    object_vars: &[&str],
    param_vars: &[&str],
) -> Result<PartitionedFormula, ParseError> {
    let mut names: Vec<String> = Vec::new();
    for v in object_vars.iter().chain(param_vars.iter()) {
        if names.iter().any(|n| n == v) {
            return Err(ParseError::BadPartition(format!(
                "variable {v} appears twice in the partition"
            )));
        }
        if signature.has_constant(v) {
            return Err(ParseError::BadPartition(format!(
                "partition variable {v} collides with a constant"
            )));
        }
        names.push((*v).to_string());
    }

    let toks = tokenize(text)?;
    let mut parser = Parser {
        text,
        toks,
        pos: 0,
        signature,
        partition: names,
        scopes: Vec::new(),
    };
    let formula = parser.parse_implies()?;
    if parser.pos < parser.toks.len() {
        let offset = parser.here();
        return Err(parser.err_at(offset, "unexpected trailing input".to_string()));
    }

    let covered: Vec<String> = object_vars
        .iter()
        .chain(param_vars.iter())
        .map(|s| s.to_string())
        .collect();
    let uncovered: Vec<String> = free_variables(&formula)
        .into_iter()
        .filter(|v| !covered.contains(v))
        .collect();
    if !uncovered.is_empty() {
        return Err(ParseError::UncoveredVariables { vars: uncovered });
    }

    Ok(PartitionedFormula {
        formula,
        object_vars: object_vars.iter().map(|s| s.to_string()).collect(),
        param_vars: param_vars.iter().map(|s| s.to_string()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::structure::FiniteStructure;

    fn order_sig() -> Signature {
        FiniteStructure::linear_order(2).signature
    }

    #[test]
    fn parses_infix_order_atom() {
        let pf = parse_formula(&order_sig(), "x < y", &["x"], &["y"]).unwrap();
        assert_eq!(
            pf.formula,
            Formula::Rel(
                "lt".to_string(),
                vec![Term::Var("x".to_string()), Term::Var("y".to_string())]
            )
        );
    }

    #[test]
    fn precedence_binds_not_tightest_then_and_or_implies() {
        let pf = parse_formula(
            &order_sig(),
            "!x < y & x = y | y < x -> x < y",
            &["x"],
            &["y"],
        )
        .unwrap();
        // ((!(x<y) & x=y) | y<x) -> x<y
        match &pf.formula {
            Formula::Implies(lhs, _) => match lhs.as_ref() {
                Formula::Or(l, _) => assert!(matches!(l.as_ref(), Formula::And(..))),
                other => panic!("expected or on the left, got {other:?}"),
            },
            other => panic!("expected implies at the root, got {other:?}"),
        }
    }

    #[test]
    fn quantifier_shadowing_is_renamed() {
        let pf = parse_formula(&order_sig(), "exists y (x < y)", &["x"], &["y"]).unwrap();
        match &pf.formula {
            Formula::Exists(v, body) => {
                assert_eq!(v, "y_1");
                assert_eq!(
                    body.as_ref(),
                    &Formula::Rel(
                        "lt".to_string(),
                        vec![Term::Var("x".to_string()), Term::Var("y_1".to_string())]
                    )
                );
            }
            other => panic!("expected exists, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_formula(&order_sig(), "x <", &["x"], &["y"]).unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax {
                line: 1,
                col: 4,
                message: "expected a term, found end of input".to_string()
            }
        );
    }

    #[test]
    fn unknown_relation_and_arity_errors() {
        let err = parse_formula(&order_sig(), "R(x, y)", &["x"], &["y"]).unwrap_err();
        assert!(matches!(err, ParseError::UnknownRelation { ref name, .. } if name == "R"));
        let err = parse_formula(&order_sig(), "lt(x, y, x)", &["x"], &["y"]).unwrap_err();
        assert!(matches!(
            err,
            ParseError::Arity {
                expected: 2,
                got: 3,
                ..
            }
        ));
    }

    #[test]
    fn uncovered_free_variable_is_rejected() {
        let err = parse_formula(&order_sig(), "x < z", &["x"], &["y"]).unwrap_err();
        assert_eq!(
            err,
            ParseError::UncoveredVariables {
                vars: vec!["z".to_string()]
            }
        );
    }

    #[test]
    fn round_trips_through_display() {
        let texts = [
            "x < y",
            "exists z (x < z & z < y)",
            "forall z (z < x | x = z -> z < y)",
            "!(x < y | y < x)",
        ];
        for text in texts {
            let pf = parse_formula(&order_sig(), text, &["x"], &["y"]).unwrap();
            let printed = pf.formula.to_string();
            let back = parse_formula(&order_sig(), &printed, &["x"], &["y"]).unwrap();
            assert_eq!(
                pf.formula, back.formula,
                "round trip of {text:?} via {printed:?}"
            );
        }
    }
}
