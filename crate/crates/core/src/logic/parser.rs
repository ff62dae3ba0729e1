//! Recursive-descent parser for the ASCII formula syntax.
//!
//! Precedence from loosest to tightest: `<->`, `->` (right associative),
//! `|`, `&`, `!`. A quantifier body extends as far to the right as possible.

use crate::error::{Error, Result};
use crate::names::Rel;

use super::{is_class_var, Formula, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Lt,
    Gt,
    Comma,
    Dot,
    Bang,
    Amp,
    Bar,
    Arrow,
    DArrow,
    Eq,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let (tok, width) = if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        } else if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        } else if rest.starts_with("<->") {
            (Tok::DArrow, 3)
        } else if rest.starts_with("->") {
            (Tok::Arrow, 2)
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            (Tok::Ident(chars[start..j].iter().collect()), j - start)
        } else {
            let t = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '!' => Tok::Bang,
                '&' => Tok::Amp,
                '|' => Tok::Bar,
                '=' => Tok::Eq,
                _ => {
                    return Err(Error::Syntax {
                        line,
                        col,
                        msg: format!("unexpected character `{c}`"),
                    })
                }
            };
            (t, 1)
        };
        out.push(Spanned { tok, line: l0, col: c0 });
        i += width;
        col += width;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

const KEYWORDS: [&str; 6] = ["ex", "all", "EX", "ALL", "in", "sub"];

/// Parses a formula, expanding derived connectives into the core forms.
pub fn parse(text: &str) -> Result<Formula> {
    let toks = lex(text)?;
    let last_line = text.lines().count().max(1);
    let last_col = text.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1);
    let mut p = Parser {
        toks,
        pos: 0,
        end: (last_line, last_col),
    };
    let f = p.iff()?;
    if p.pos < p.toks.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(f)
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek_ident(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn error(&self, msg: &str) -> Error {
        let (line, col) = self
            .toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .unwrap_or(self.end);
        let found = match self.toks.get(self.pos) {
            Some(s) => format!("{:?}", s.tok),
            None => "end of input".into(),
        };
        Error::Syntax {
            line,
            col,
            msg: format!("{msg} (found {found})"),
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.error(&format!("expected {what}")))
        }
    }

    fn iff(&mut self) -> Result<Formula> {
        let mut f = self.implies()?;
        while self.eat(&Tok::DArrow) {
            let g = self.implies()?;
            f = Formula::iff(f, g);
        }
        Ok(f)
    }

    fn implies(&mut self) -> Result<Formula> {
        let f = self.or()?;
        if self.eat(&Tok::Arrow) {
            let g = self.implies()?;
            return Ok(Formula::implies(f, g));
        }
        Ok(f)
    }

    fn or(&mut self) -> Result<Formula> {
        let mut f = self.and()?;
        while self.eat(&Tok::Bar) {
            let g = self.and()?;
            f = Formula::or(f, g);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut f = self.unary()?;
        while self.eat(&Tok::Amp) {
            let g = self.unary()?;
            f = Formula::and(f, g);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula> {
        if self.eat(&Tok::Bang) {
            return Ok(Formula::not(self.unary()?));
        }
        if self.eat(&Tok::LParen) {
            let f = self.iff()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(f);
        }
        for kw in ["ex", "all", "EX", "ALL"] {
            if self.peek_ident(kw) {
                self.pos += 1;
                return self.quantifier(kw);
            }
        }
        self.atom()
    }

    fn variable(&mut self) -> Result<String> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) if !KEYWORDS.contains(&s.as_str()) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error("expected a variable")),
        }
    }

    fn quantifier(&mut self, kw: &str) -> Result<Formula> {
        let class = kw == "EX" || kw == "ALL";
        let at = self.pos;
        let v = self.variable()?;
        if class != is_class_var(&v) {
            self.pos = at;
            return Err(self.error(if class {
                "class quantifiers bind uppercase variables"
            } else {
                "set quantifiers bind lowercase variables"
            }));
        }
        let bound = if !class && self.peek_ident("in") {
            self.pos += 1;
            Some(self.set_term()?)
        } else {
            None
        };
        self.expect(Tok::Dot, "`.` after the quantified variable")?;
        let body = self.iff()?;
        Ok(match (kw, bound) {
            ("ex", None) => Formula::exists(&v, body),
            ("all", None) => Formula::forall(&v, body),
            ("ex", Some(t)) => Formula::exists_in(&v, t, body),
            ("all", Some(t)) => Formula::forall_in(&v, t, body),
            ("EX", _) => Formula::exists_class(&v, body),
            _ => Formula::forall_class(&v, body),
        })
    }

    fn term(&mut self) -> Result<Term> {
        if self.eat(&Tok::Lt) {
            let a = self.set_term()?;
            self.expect(Tok::Comma, "`,` in a pair")?;
            let b = self.set_term()?;
            self.expect(Tok::Gt, "`>` closing a pair")?;
            return Ok(Term::Pair(Box::new(a), Box::new(b)));
        }
        Ok(Term::Var(self.variable()?))
    }

    fn set_term(&mut self) -> Result<Term> {
        let at = self.pos;
        let t = self.term()?;
        if let Term::Var(v) = &t {
            if is_class_var(v) {
                self.pos = at;
                return Err(self.error("a class variable cannot stand for a set"));
            }
        }
        Ok(t)
    }

    fn atom(&mut self) -> Result<Formula> {
        let left_at = self.pos;
        let left = self.term()?;
        let rel = if self.peek_ident("in") {
            Rel::In
        } else if self.peek_ident("sub") {
            Rel::Sub
        } else if self.peek() == Some(&Tok::Eq) {
            Rel::Eq
        } else {
            return Err(self.error("expected `in`, `=` or `sub`"));
        };
        self.pos += 1;
        let right_at = self.pos;
        let right = self.term()?;
        let class = |t: &Term| matches!(t, Term::Var(v) if is_class_var(v));
        match (class(&left), rel, class(&right)) {
            (false, _, false) => Ok(Formula::Atom(left, rel, right)),
            (false, Rel::In, true) => match right {
                Term::Var(c) => Ok(Formula::MemberClass(left, c)),
                _ => unreachable!(),
            },
            (true, Rel::Eq, true) => match (left, right) {
                (Term::Var(a), Term::Var(b)) => Ok(Formula::EqClass(a, b)),
                _ => unreachable!(),
            },
            (true, _, _) => {
                self.pos = left_at;
                Err(self.error("a class variable may only appear on the right of `in` or in `X = Y`"))
            }
            (false, _, true) => {
                self.pos = right_at;
                Err(self.error("a class variable may only appear on the right of `in` or in `X = Y`"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn universal_expands_to_negated_existential() {
        let f = parse("all z . z in x -> z in y").unwrap();
        let expected = Formula::not(Formula::exists(
            "z",
            Formula::not(Formula::not(Formula::and(
                Formula::atom("z", Rel::In, "x"),
                Formula::not(Formula::atom("z", Rel::In, "y")),
            ))),
        ));
        assert_eq!(f, expected);
    }

    #[test]
    fn class_membership() {
        assert_eq!(
            parse("x in G").unwrap(),
            Formula::MemberClass(Term::var("x"), "G".into())
        );
        assert_eq!(parse("X = Y").unwrap(), Formula::EqClass("X".into(), "Y".into()));
    }

    #[test]
    fn existential_over_conjunction() {
        let f = parse("ex z . (z in x & !(z in y))").unwrap();
        assert_eq!(
            f,
            Formula::exists(
                "z",
                Formula::and(
                    Formula::atom("z", Rel::In, "x"),
                    Formula::not(Formula::atom("z", Rel::In, "y"))
                )
            )
        );
    }

    #[test]
    fn precedence() {
        let a = || Formula::atom("a", Rel::In, "b");
        let c = || Formula::atom("c", Rel::In, "d");
        let e = || Formula::atom("e", Rel::In, "f");
        assert_eq!(
            parse("a in b | c in d & e in f").unwrap(),
            Formula::or(a(), Formula::and(c(), e()))
        );
        assert_eq!(
            parse("a in b -> c in d -> e in f").unwrap(),
            Formula::implies(a(), Formula::implies(c(), e()))
        );
        assert_eq!(
            parse("!a in b & c in d").unwrap(),
            Formula::and(Formula::not(a()), c())
        );
        assert_eq!(
            parse("ex z . z in x & z in y").unwrap(),
            Formula::exists("z", Formula::and(Formula::atom("z", Rel::In, "x"), Formula::atom("z", Rel::In, "y")))
        );
    }

    #[test]
    fn pairs_and_bounded_quantifiers() {
        let f = parse("ex z in <x,y> . z = x").unwrap();
        assert_eq!(
            f,
            Formula::exists_in(
                "z",
                Term::Pair(Box::new(Term::var("x")), Box::new(Term::var("y"))),
                Formula::atom("z", Rel::Eq, "x")
            )
        );
    }

    #[test]
    fn errors_carry_positions() {
        match parse("x in y &") {
            Err(Error::Syntax { line: 1, col: 9, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse("x # y") {
            Err(Error::Syntax { line: 1, col: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(parse("X in y").is_err());
        assert!(parse("ex Z . x in Z").is_err());
        assert!(parse("EX z . x in z").is_err());
        assert!(parse("x sub G").is_err());
        assert!(parse("(x in y").is_err());
    }
}
