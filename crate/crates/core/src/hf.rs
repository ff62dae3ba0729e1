//! Hereditarily finite sets: the values names evaluate to.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HfSet(pub BTreeSet<HfSet>);

impl HfSet {
    pub fn empty() -> Self {
        HfSet::default()
    }

    /// The von Neumann numeral `k`.
    pub fn numeral(k: usize) -> Self {
        let mut cur = HfSet::empty();
        for _ in 0..k {
            let mut next = cur.0.clone();
            next.insert(cur);
            cur = HfSet(next);
        }
        cur
    }

    pub fn pair(a: HfSet, b: HfSet) -> Self {
        HfSet([a, b].into_iter().collect())
    }

    /// Kuratowski pair `{{a},{a,b}}`.
    pub fn ordered_pair(a: HfSet, b: HfSet) -> Self {
        HfSet::pair(HfSet([a.clone()].into()), HfSet::pair(a, b))
    }

    pub fn contains(&self, x: &HfSet) -> bool {
        self.0.contains(x)
    }

    pub fn is_subset(&self, other: &HfSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &HfSet> {
        self.0.iter()
    }

    /// Set-theoretic rank: 0 for ∅, else 1 + max rank of an element.
    pub fn rank(&self) -> usize {
        self.0.iter().map(|x| x.rank() + 1).max().unwrap_or(0)
    }

    pub fn depth(&self) -> usize {
        self.rank()
    }

    /// Parses a literal: a natural number or a brace set of literals,
    /// e.g. `2`, `{}`, `∅`, `{0,{1}}`.
    pub fn parse(text: &str) -> Result<HfSet> {
        let mut p = LiteralParser {
            chars: text.char_indices().peekable(),
            text,
        };
        let v = p.literal()?;
        p.skip_ws();
        if let Some((i, c)) = p.chars.next() {
            return Err(p.err(i, format!("unexpected `{c}`")));
        }
        Ok(v)
    }
}

struct LiteralParser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    text: &'a str,
}

impl LiteralParser<'_> {
    fn err(&self, pos: usize, msg: String) -> Error {
        let _ = self.text;
        Error::Syntax {
            line: 1,
            col: pos + 1,
            msg,
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some((_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn literal(&mut self) -> Result<HfSet> {
        self.skip_ws();
        match self.chars.peek().copied() {
            Some((_, '{')) => {
                self.chars.next();
                let mut out = BTreeSet::new();
                self.skip_ws();
                if let Some((_, '}')) = self.chars.peek() {
                    self.chars.next();
                    return Ok(HfSet(out));
                }
                loop {
                    out.insert(self.literal()?);
                    self.skip_ws();
                    match self.chars.next() {
                        Some((_, ',')) => continue,
                        Some((_, '}')) => return Ok(HfSet(out)),
                        Some((i, c)) => return Err(self.err(i, format!("unexpected `{c}`"))),
                        None => return Err(self.err(self.text.len(), "unclosed `{`".into())),
                    }
                }
            }
            Some((_, '∅')) => {
                self.chars.next();
                Ok(HfSet::empty())
            }
            Some((i, c)) if c.is_ascii_digit() => {
                let mut end = i;
                while let Some((j, c)) = self.chars.peek().copied() {
                    if !c.is_ascii_digit() {
                        break;
                    }
                    end = j;
                    self.chars.next();
                }
                let k: usize = self.text[i..=end]
                    .parse()
                    .map_err(|_| self.err(i, "bad numeral".into()))?;
                if k > 64 {
                    return Err(Error::resource("numeral literal", 64));
                }
                Ok(HfSet::numeral(k))
            }
            Some((i, c)) => Err(self.err(i, format!("unexpected `{c}`"))),
            None => Err(self.err(self.text.len(), "empty literal".into())),
        }
    }
}

impl fmt::Display for HfSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "∅");
        }
        write!(f, "{{")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for HfSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerals_and_literals() {
        assert_eq!(HfSet::numeral(0).to_string(), "∅");
        assert_eq!(HfSet::numeral(2).to_string(), "{∅,{∅}}");
        assert_eq!(HfSet::parse("{0, {}}").unwrap(), HfSet::numeral(1));
        assert_eq!(HfSet::parse("{0,1}").unwrap(), HfSet::numeral(2));
        assert_eq!(HfSet::numeral(3).rank(), 3);
        assert!(HfSet::parse("{0,").is_err());
    }
}
