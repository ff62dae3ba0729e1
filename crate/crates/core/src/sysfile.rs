//! The line-oriented system file format.
//!
//! ```text
//! system "<label>"
//! conditions <id> <id> ...
//! order <id> <= <id> ; <id> <= <id> ; ...
//! auto <id> : <cond>-><cond> <cond>-><cond> ...
//! group <id> = < <auto-id> , ... >
//! filterbase <group-expr> [, <group-expr> ...]
//! name <id> = { (<name-id>,<cond-id>) ... } | check <k> | bullet { <name-id> ... }
//! classname <id> = ...
//! ```
//!
//! A group expression is `< a, b >` (the generated subgroup), `{ a, b }` (an
//! explicit set of group elements), `fix{ c, d }` (the pointwise fixer of the
//! listed conditions) or the id of a `group` line. A bare automorphism id
//! stands for the subgroup it generates. `#` starts a comment.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::names::{NameId, Universe};
use crate::order::{Cond, Preorder};
use crate::symmetry::{AutoSet, Automorphism, AutomorphismGroup, BaseEntry, SubgroupFilter};
use crate::system::{Caps, SymmetricSystem};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupExpr {
    Generated(Vec<String>),
    Explicit(Vec<String>),
    Fix(Vec<String>),
    Named(String),
}

impl fmt::Display for GroupExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupExpr::Generated(g) => write!(f, "< {} >", g.join(" , ")),
            GroupExpr::Explicit(g) => write!(f, "{{ {} }}", g.join(" , ")),
            GroupExpr::Fix(c) => write!(f, "fix{{ {} }}", c.join(" , ")),
            GroupExpr::Named(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NameRhs {
    Entries(Vec<(String, String)>),
    Check(String),
    Bullet(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NameDecl {
    pub id: String,
    pub class: bool,
    pub rhs: NameRhs,
}

impl fmt::Display for NameDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kw = if self.class { "classname" } else { "name" };
        write!(f, "{kw} {} = ", self.id)?;
        match &self.rhs {
            NameRhs::Entries(es) => {
                let body: Vec<String> = es.iter().map(|(x, c)| format!("({x},{c})")).collect();
                if body.is_empty() {
                    write!(f, "{{ }}")
                } else {
                    write!(f, "{{ {} }}", body.join(" "))
                }
            }
            NameRhs::Check(k) => write!(f, "check {k}"),
            NameRhs::Bullet(xs) => write!(f, "bullet {{ {} }}", xs.join(" ")),
        }
    }
}

/// The parsed sections of a system file, before any validation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SystemFile {
    pub label: String,
    pub conditions: Vec<String>,
    pub order: Vec<(String, String)>,
    pub autos: Vec<(String, Vec<(String, String)>)>,
    pub groups: Vec<(String, Vec<String>)>,
    pub filterbase: Vec<GroupExpr>,
    pub names: Vec<NameDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Word(String),
    Str(String),
    Punct(&'static str),
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    col: usize,
}

const PUNCT: [&str; 11] = ["->", "<=", "{", "}", "(", ")", "<", ">", ",", ";", ":"];
const EQ: &str = "=";

fn lex_line(line: &str, lineno: usize) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let is_break = |c: char| c.is_whitespace() || "{}()<>,;:=#\"".contains(c);
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '"' {
            let end = chars[i + 1..]
                .iter()
                .position(|&d| d == '"')
                .ok_or(Error::Syntax {
                    line: lineno,
                    col,
                    msg: "unterminated string".into(),
                })?;
            out.push(Spanned {
                tok: Tok::Str(chars[i + 1..i + 1 + end].iter().collect()),
                col,
            });
            i += end + 2;
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        if let Some(p) = PUNCT.iter().find(|p| rest.starts_with(*p)) {
            out.push(Spanned { tok: Tok::Punct(p), col });
            i += p.len();
            continue;
        }
        if c == '=' {
            out.push(Spanned { tok: Tok::Punct(EQ), col });
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !is_break(chars[i]) && !(chars[i] == '-' && chars.get(i + 1) == Some(&'>')) {
            i += 1;
        }
        out.push(Spanned {
            tok: Tok::Word(chars[start..i].iter().collect()),
            col,
        });
    }
    Ok(out)
}

struct Line<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    line: usize,
    end_col: usize,
    text: &'a str,
}

impl Line<'_> {
    fn error(&self, msg: impl Into<String>) -> Error {
        let col = self.toks.get(self.pos).map(|s| s.col).unwrap_or(self.end_col);
        Error::Syntax {
            line: self.line,
            col,
            msg: msg.into(),
        }
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek_punct(&self, p: &str) -> bool {
        matches!(self.toks.get(self.pos), Some(Spanned { tok: Tok::Punct(q), .. }) if *q == p)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.peek_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn punct(&mut self, p: &str) -> Result<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{p}`")))
        }
    }

    fn word(&mut self, what: &str) -> Result<String> {
        match self.toks.get(self.pos) {
            Some(Spanned { tok: Tok::Word(w), .. }) => {
                self.pos += 1;
                Ok(w.clone())
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn finish(&self) -> Result<()> {
        if self.done() {
            Ok(())
        } else {
            Err(self.error("unexpected trailing input"))
        }
    }

    /// Words up to `close`, separated by whitespace or commas.
    fn word_list(&mut self, close: &str, what: &str) -> Result<Vec<String>> {
        let mut out = Vec::new();
        loop {
            if self.eat_punct(close) {
                return Ok(out);
            }
            if !out.is_empty() {
                self.eat_punct(",");
            }
            out.push(self.word(what)?);
        }
    }

    fn group_expr(&mut self) -> Result<GroupExpr> {
        if self.eat_punct("<") {
            return Ok(GroupExpr::Generated(self.word_list(">", "an automorphism id")?));
        }
        if self.eat_punct("{") {
            return Ok(GroupExpr::Explicit(self.word_list("}", "a group element id")?));
        }
        let w = self.word("a group expression")?;
        if w == "fix" && self.eat_punct("{") {
            return Ok(GroupExpr::Fix(self.word_list("}", "a condition id")?));
        }
        Ok(GroupExpr::Named(w))
    }

    fn name_rhs(&mut self) -> Result<NameRhs> {
        if self.eat_punct("{") {
            let mut entries = Vec::new();
            loop {
                if self.eat_punct("}") {
                    return Ok(NameRhs::Entries(entries));
                }
                self.eat_punct(",");
                self.punct("(")?;
                let x = self.word("a name id")?;
                self.punct(",")?;
                let c = self.word("a condition id")?;
                self.punct(")")?;
                entries.push((x, c));
            }
        }
        match self.word("`{`, `check` or `bullet`")?.as_str() {
            "check" => {
                let start = self.toks.get(self.pos).map(|s| s.col).ok_or_else(|| self.error("expected a literal"))?;
                self.pos = self.toks.len();
                Ok(NameRhs::Check(self.text[start - 1..].split('#').next().unwrap_or("").trim().to_string()))
            }
            "bullet" => {
                self.punct("{")?;
                Ok(NameRhs::Bullet(self.word_list("}", "a name id")?))
            }
            other => {
                self.pos -= 1;
                Err(self.error(format!("unknown name form `{other}`")))
            }
        }
    }
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<SystemFile> {
        let mut f = SystemFile::default();
        let mut seen_system = false;
        for (i, raw) in text.lines().enumerate() {
            let toks = lex_line(raw, i + 1)?;
            if toks.is_empty() {
                continue;
            }
            let mut l = Line {
                toks,
                pos: 0,
                line: i + 1,
                end_col: raw.chars().count() + 1,
                text: raw,
            };
            let kw = l.word("a section keyword")?;
            match kw.as_str() {
                "system" => {
                    match l.toks.get(l.pos) {
                        Some(Spanned { tok: Tok::Str(s), .. }) => f.label = s.clone(),
                        _ => return Err(l.error("expected a quoted label")),
                    }
                    l.pos += 1;
                    seen_system = true;
                }
                "conditions" => {
                    while !l.done() {
                        f.conditions.push(l.word("a condition id")?);
                    }
                }
                "order" => loop {
                    let a = l.word("a condition id")?;
                    l.punct("<=")?;
                    let b = l.word("a condition id")?;
                    f.order.push((a, b));
                    if l.done() {
                        break;
                    }
                    l.punct(";")?;
                    if l.done() {
                        break;
                    }
                },
                "auto" => {
                    let id = l.word("an automorphism id")?;
                    l.punct(":")?;
                    let mut map = Vec::new();
                    while !l.done() {
                        let a = l.word("a condition id")?;
                        l.punct("->")?;
                        let b = l.word("a condition id")?;
                        map.push((a, b));
                    }
                    f.autos.push((id, map));
                }
                "group" => {
                    let id = l.word("a group id")?;
                    l.punct(EQ)?;
                    l.punct("<")?;
                    let gens = l.word_list(">", "an automorphism id")?;
                    f.groups.push((id, gens));
                }
                "filterbase" => loop {
                    f.filterbase.push(l.group_expr()?);
                    if l.done() {
                        break;
                    }
                    l.punct(",")?;
                },
                "name" | "classname" => {
                    let id = l.word("a name id")?;
                    l.punct(EQ)?;
                    let rhs = l.name_rhs()?;
                    f.names.push(NameDecl {
                        id,
                        class: kw == "classname",
                        rhs,
                    });
                }
                other => {
                    l.pos = 0;
                    return Err(l.error(format!("unknown section `{other}`")));
                }
            }
            l.finish()?;
        }
        if !seen_system {
            return Err(Error::Syntax {
                line: 1,
                col: 1,
                msg: "missing `system` line".into(),
            });
        }
        Ok(f)
    }

    /// Builds and validates the system, then interns the declared names.
    pub fn build(&self, caps: Caps) -> Result<Universe> {
        if self.filterbase.is_empty() {
            return Err(Error::validation("filter base", "filter base required"));
        }
        if self.conditions.len() > caps.conditions {
            return Err(Error::resource("conditions", caps.conditions));
        }
        let order = Preorder::new(self.conditions.clone(), &self.order)?;
        let n = order.len();
        let mut gens = Vec::with_capacity(self.autos.len());
        for (id, pairs) in &self.autos {
            let mut map: Vec<Cond> = order.conditions().collect();
            for (a, b) in pairs {
                map[order.lookup(a)?.index()] = order.lookup(b)?;
            }
            let auto = Automorphism { id: id.clone(), map };
            auto.check_against(&order)?;
            gens.push(auto);
        }
        let group = AutomorphismGroup::generate(n, gens, caps.group_order)?;
        let mut named: HashMap<&str, AutoSet> = HashMap::new();
        for (id, g) in &self.groups {
            let ids = g.iter().map(|a| group.lookup(a)).collect::<Result<Vec<_>>>()?;
            named.insert(id, group.closure(&ids));
        }
        let mut base = Vec::with_capacity(self.filterbase.len());
        for e in &self.filterbase {
            let members = match e {
                GroupExpr::Generated(g) => {
                    let ids = g.iter().map(|a| group.lookup(a)).collect::<Result<Vec<_>>>()?;
                    group.closure(&ids)
                }
                GroupExpr::Explicit(g) => g.iter().map(|a| group.lookup(a)).collect::<Result<AutoSet>>()?,
                GroupExpr::Fix(cs) => {
                    let cs = cs.iter().map(|c| order.lookup(c)).collect::<Result<Vec<_>>>()?;
                    group.pointwise_fixer(&cs)
                }
                GroupExpr::Named(id) => match named.get(id.as_str()) {
                    Some(h) => h.clone(),
                    None => group.closure(&[group.lookup(id)?]),
                },
            };
            base.push(BaseEntry {
                label: e.to_string(),
                members,
            });
        }
        let filter = SubgroupFilter::new(base)?;
        let sys = SymmetricSystem::new(self.label.clone(), order, group, filter);
        sys.validate().into_result()?;
        let mut u = Universe::new(sys, caps);
        for d in &self.names {
            let x = match &d.rhs {
                NameRhs::Entries(es) => {
                    let mut entries = Vec::with_capacity(es.len());
                    for (x, c) in es {
                        entries.push((u.lookup(x)?, u.system().order.lookup(c)?));
                    }
                    u.intern(entries)
                }
                NameRhs::Check(k) => u.check_literal(k)?,
                NameRhs::Bullet(xs) => {
                    let xs = xs.iter().map(|x| u.lookup(x)).collect::<Result<Vec<_>>>()?;
                    u.bullet(&xs)
                }
            };
            u.declare(d.id.clone(), x, d.class);
        }
        Ok(u)
    }

    /// The canonical file for a universe: generating order pairs, the group
    /// generators, the filter base and every declared name in entry form.
    /// Undeclared names reachable from declared ones get `_k` ids.
    pub fn from_universe(u: &Universe) -> SystemFile {
        let sys = u.system();
        let o = &sys.order;
        let g = &sys.group;
        let id = |c: Cond| o.id(c).to_string();
        let autos = g
            .generators()
            .iter()
            .map(|&a| {
                let map = o
                    .conditions()
                    .filter(|&c| g.apply(a, c) != c)
                    .map(|c| (id(c), id(g.apply(a, c))))
                    .collect();
                (g.id(a).to_string(), map)
            })
            .collect();
        let filterbase = sys
            .filter
            .base()
            .iter()
            .map(|e| {
                match reparse_group_expr(&e.label) {
                    Some(expr) if resolve_standalone(u, &expr).as_ref() == Some(&e.members) => expr,
                    _ => GroupExpr::Explicit(e.members.iter().map(|&a| g.id(a).to_string()).collect()),
                }
            })
            .collect();

        let mut labels: BTreeMap<NameId, String> = BTreeMap::new();
        let declared: Vec<(&String, &NameId)> = u.declared().iter().collect();
        let mut by_name: Vec<(&String, &NameId)> = declared.clone();
        by_name.sort_by_key(|(k, x)| (u.rank(**x), (*k).clone()));
        for (k, &x) in &by_name {
            labels.entry(x).or_insert_with(|| (*k).clone());
        }
        let roots: Vec<NameId> = by_name.iter().map(|(_, &x)| x).collect();
        let mut names = Vec::new();
        let mut aux = 0usize;
        let mut emitted: HashMap<NameId, String> = HashMap::new();
        for x in u.transitive_closure(&roots) {
            let label = match labels.get(&x) {
                Some(l) => l.clone(),
                None => {
                    aux += 1;
                    format!("_{aux}")
                }
            };
            let entries = u
                .entries(x)
                .iter()
                .map(|&(y, c)| (emitted[&y].clone(), id(c)))
                .collect();
            names.push(NameDecl {
                id: label.clone(),
                class: u.is_class_decl(&label),
                rhs: NameRhs::Entries(entries),
            });
            emitted.insert(x, label);
        }
        for (k, &x) in &by_name {
            if emitted.get(&x) != Some(*k) {
                names.push(NameDecl {
                    id: (*k).clone(),
                    class: u.is_class_decl(k),
                    rhs: NameRhs::Entries(
                        u.entries(x)
                            .iter()
                            .map(|&(y, c)| (emitted[&y].clone(), id(c)))
                            .collect(),
                    ),
                });
            }
        }

        SystemFile {
            label: sys.label.clone(),
            conditions: o.ids().to_vec(),
            order: generating_pairs(o).into_iter().map(|(a, b)| (id(a), id(b))).collect(),
            autos,
            groups: Vec::new(),
            filterbase,
            names,
        }
    }
}

fn reparse_group_expr(label: &str) -> Option<GroupExpr> {
    let toks = lex_line(label, 1).ok()?;
    let mut l = Line {
        toks,
        pos: 0,
        line: 1,
        end_col: label.len() + 1,
        text: label,
    };
    let e = l.group_expr().ok()?;
    match (&e, l.done()) {
        (GroupExpr::Named(_), _) | (_, false) => None,
        _ => Some(e),
    }
}

fn resolve_standalone(u: &Universe, e: &GroupExpr) -> Option<AutoSet> {
    let sys = u.system();
    let g = &sys.group;
    let lookup = |xs: &[String]| xs.iter().map(|a| g.lookup(a).ok()).collect::<Option<Vec<_>>>();
    Some(match e {
        GroupExpr::Generated(xs) => g.closure(&lookup(xs)?),
        GroupExpr::Explicit(xs) => lookup(xs)?.into_iter().collect(),
        GroupExpr::Fix(cs) => {
            let cs = cs.iter().map(|c| sys.order.lookup(c).ok()).collect::<Option<Vec<_>>>()?;
            g.pointwise_fixer(&cs)
        }
        GroupExpr::Named(_) => return None,
    })
}

/// Pairs `a ≤ b` with nothing strictly between them, plus every pair of
/// distinct equivalent conditions. Their closure is the full relation.
fn generating_pairs(o: &Preorder) -> Vec<(Cond, Cond)> {
    let strict = |a: Cond, b: Cond| o.leq(a, b) && !o.leq(b, a);
    let mut out = Vec::new();
    for a in o.conditions() {
        for b in o.above(a).iter() {
            if a == b {
                continue;
            }
            if o.equivalent(a, b) || !o.conditions().any(|c| strict(a, c) && strict(c, b)) {
                out.push((a, b));
            }
        }
    }
    out
}

impl fmt::Display for SystemFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "system \"{}\"", self.label)?;
        writeln!(f, "conditions {}", self.conditions.join(" "))?;
        if !self.order.is_empty() {
            let pairs: Vec<String> = self.order.iter().map(|(a, b)| format!("{a} <= {b}")).collect();
            writeln!(f, "order {}", pairs.join(" ; "))?;
        }
        for (id, map) in &self.autos {
            let body: Vec<String> = map.iter().map(|(a, b)| format!("{a}->{b}")).collect();
            writeln!(f, "auto {id} : {}", body.join(" "))?;
        }
        for (id, gens) in &self.groups {
            writeln!(f, "group {id} = < {} >", gens.join(" , "))?;
        }
        if !self.filterbase.is_empty() {
            let es: Vec<String> = self.filterbase.iter().map(|e| e.to_string()).collect();
            writeln!(f, "filterbase {}", es.join(" , "))?;
        }
        for d in &self.names {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

pub fn load_str(text: &str) -> Result<Universe> {
    SystemFile::parse(text)?.build(Caps::from_env())
}

pub fn load(path: impl AsRef<Path>) -> Result<Universe> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    load_str(&text)
}

/// Canonical text for a universe; loading it back gives the same system.
pub fn serialize(u: &Universe) -> String {
    SystemFile::from_universe(u).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;

    const SYS_A: &str = include_str!("../fixtures/sysA.fsys");

    #[test]
    fn loads_fixture() {
        let u = load_str(SYS_A).unwrap();
        assert_eq!(u.system().order.len(), 3);
        assert_eq!(u.system().group.order(), 2);
        let y = u.lookup("y").unwrap();
        assert_eq!(u.entries(y).len(), 2);
    }

    #[test]
    fn missing_filterbase() {
        let text: String = SYS_A.lines().filter(|l| !l.starts_with("filterbase")).map(|l| format!("{l}\n")).collect();
        let err = load_str(&text).unwrap_err();
        assert!(err.to_string().contains("filter base required"), "{err}");
    }

    #[test]
    fn broken_auto_names_pair() {
        let text = "system \"bad\"\nconditions 1 p q r\norder p <= 1 ; q <= 1 ; r <= p\nauto s : p->q q->p\nfilterbase < s >\n";
        let err = load_str(text).unwrap_err();
        assert!(matches!(err, Error::Validation { .. }), "{err}");
        assert!(err.to_string().contains("breaks the pair"), "{err}");
    }

    #[test]
    fn syntax_errors_have_positions() {
        match SystemFile::parse("system \"x\"\norder p <= ; q") {
            Err(Error::Syntax { line: 2, col: 12, .. }) => {}
            other => panic!("{other:?}"),
        }
        match SystemFile::parse("system \"x\"\nconditons 1") {
            Err(Error::Syntax { line: 2, col: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    fn same_system(a: &Universe, b: &Universe) {
        let (sa, sb) = (a.system(), b.system());
        assert_eq!(sa.label, sb.label);
        assert_eq!(sa.order.ids(), sb.order.ids());
        for p in sa.order.conditions() {
            assert_eq!(sa.order.below(p), sb.order.below(p));
        }
        assert_eq!(sa.group.order(), sb.group.order());
        for e in sa.group.elements() {
            assert_eq!(sa.group.get(e), sb.group.get(e));
        }
        let ma: Vec<&AutoSet> = sa.filter.base().iter().map(|e| &e.members).collect();
        let mb: Vec<&AutoSet> = sb.filter.base().iter().map(|e| &e.members).collect();
        assert_eq!(ma, mb);
        for (k, &x) in a.declared() {
            let y = b.lookup(k).unwrap();
            assert_eq!(a.show(x), b.show(y));
            assert_eq!(a.rank(x), b.rank(y));
            assert_eq!(a.is_class_decl(k), b.is_class_decl(k));
        }
    }

    #[test]
    fn round_trip() {
        let systems = [
            load_str(SYS_A).unwrap(),
            families::sys_a0(),
            families::sys_b(2, 2).unwrap(),
            families::sys_c(1, 1, 2).unwrap(),
        ];
        for u in &systems {
            let text = serialize(u);
            let v = load_str(&text).unwrap();
            same_system(u, &v);
            assert_eq!(serialize(&v), text);
        }
    }
}
