//! Formulas, items, contexts, sequents and their concrete syntax.
//!
//! The object language is a positive modal logic: conjunction, disjunction,
//! the constants `top`/`bot`, and for every agent `A` an adjoint pair of
//! unary modalities written `<A>` (uncertainty, the left adjoint) and `[A]`
//! (information, the right adjoint).
//!
//! Antecedents of sequents are *nested*: a context is a finite multiset of
//! items, and an item is either a formula or an agent-annotated context
//! `(Γ)^A`. Rules of the calculus act at arbitrary depth, so positions
//! inside a context are addressed by [`LevelPath`] (a multiset level reached
//! by descending through annotated items) and [`ItemPath`] (one item at such
//! a level). A context together with a `LevelPath` plays the role of a
//! context-with-a-hole; [`Context::plug`] fills the hole.
//!
//! Concrete syntax (UTF-8):
//!
//! ```text
//! formula  := or
//! or       := and ('|' and)*                  -- right associated
//! and      := unary ('&' unary)*              -- right associated
//! unary    := '<' agent '>' unary | '[' agent ']' unary | primary
//! primary  := 'top' | 'bot' | atom | '(' formula ')'
//! item     := '(' context ')' '^' agent | formula
//! context  := item (',' item)* | ε
//! sequent  := context '|-' formula
//! ```
//!
//! Atoms are `[a-z]` followed by letters, digits, `_`, and balanced `{...}`
//! groups (commas are permitted inside the braces, so `s{1,2}` is a single
//! atom token). Agents are `[A-Z][a-zA-Z0-9]*` or a digit string.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An agent name. Compared by exact token equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Agent(String);

impl Agent {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "agent name must be non-empty");
        Agent(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Formulas of the logic.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Bot,
    Top,
    Atom(String),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    /// `<A> m` — the left adjoint.
    Dia(Agent, Box<Formula>),
    /// `[A] m` — the right adjoint.
    Box_(Agent, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn dia(agent: Agent, body: Formula) -> Self {
        Formula::Dia(agent, Box::new(body))
    }

    pub fn box_(agent: Agent, body: Formula) -> Self {
        Formula::Box_(agent, Box::new(body))
    }

    /// Right-nested conjunction of `parts`; `top` when empty.
    pub fn big_and(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut parts: Vec<Formula> = parts.into_iter().collect();
        match parts.pop() {
            None => Formula::Top,
            Some(last) => parts.into_iter().rev().fold(last, |acc, f| Formula::and(f, acc)),
        }
    }

    /// Right-nested disjunction of `parts`; `bot` when empty.
    pub fn big_or(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut parts: Vec<Formula> = parts.into_iter().collect();
        match parts.pop() {
            None => Formula::Bot,
            Some(last) => parts.into_iter().rev().fold(last, |acc, f| Formula::or(f, acc)),
        }
    }

    /// Weighted operator count: `&`/`|` weigh 1, `<A>`/`[A]` weigh 2,
    /// atoms and constants weigh 0.
    pub fn size(&self) -> usize {
        match self {
            Formula::Bot | Formula::Top | Formula::Atom(_) => 0,
            Formula::And(l, r) | Formula::Or(l, r) => 1 + l.size() + r.size(),
            Formula::Dia(_, b) | Formula::Box_(_, b) => 2 + b.size(),
        }
    }

    pub fn atoms(&self, out: &mut Vec<String>) {
        match self {
            Formula::Bot | Formula::Top => {}
            Formula::Atom(p) => {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
            Formula::And(l, r) | Formula::Or(l, r) => {
                l.atoms(out);
                r.atoms(out);
            }
            Formula::Dia(_, b) | Formula::Box_(_, b) => b.atoms(out),
        }
    }

    pub fn agents(&self, out: &mut Vec<Agent>) {
        match self {
            Formula::Bot | Formula::Top | Formula::Atom(_) => {}
            Formula::And(l, r) | Formula::Or(l, r) => {
                l.agents(out);
                r.agents(out);
            }
            Formula::Dia(a, b) | Formula::Box_(a, b) => {
                if !out.contains(a) {
                    out.push(a.clone());
                }
                b.agents(out);
            }
        }
    }
}

/// One member of a context: a formula or an annotated context `(Γ)^A`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Item {
    F(Formula),
    Ann(Agent, Context),
}

impl Item {
    /// Size of `(Γ)^A` is the size of `Γ` plus one.
    pub fn size(&self) -> usize {
        match self {
            Item::F(f) => f.size(),
            Item::Ann(_, ctx) => ctx.size() + 1,
        }
    }

    pub fn canonical(&self) -> Item {
        match self {
            Item::F(f) => Item::F(f.clone()),
            Item::Ann(a, ctx) => Item::Ann(a.clone(), ctx.canonical()),
        }
    }
}

impl From<Formula> for Item {
    fn from(f: Formula) -> Self {
        Item::F(f)
    }
}

/// A finite multiset of items. The stored order is a representation detail:
/// equality of contexts as multisets is [`Context::multiset_eq`], and
/// [`Context::canonical`] produces the normal form used for hashing and
/// loop checks.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Context {
    pub items: Vec<Item>,
}

/// Address of a multiset level inside a context: each step is the index of
/// an annotated item to descend into. The empty path is the top level.
pub type LevelPath = Vec<usize>;

/// Address of one item occurrence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ItemPath {
    pub level: LevelPath,
    pub index: usize,
}

impl ItemPath {
    pub fn new(level: LevelPath, index: usize) -> Self {
        ItemPath { level, index }
    }

    pub fn top(index: usize) -> Self {
        ItemPath { level: Vec::new(), index }
    }
}

impl fmt::Display for ItemPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.level {
            write!(f, "{s}.")?;
        }
        write!(f, "{}", self.index)
    }
}

/// A path that does not address anything in the context it was used on.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("path step {step} out of bounds at depth {depth} (level has {len} items)")]
    OutOfBounds { depth: usize, step: usize, len: usize },
    #[error("path step {step} at depth {depth} descends into a formula item")]
    NotAnnotated { depth: usize, step: usize },
}

impl Context {
    pub fn new(items: Vec<Item>) -> Self {
        Context { items }
    }

    pub fn empty() -> Self {
        Context { items: Vec::new() }
    }

    pub fn of_formulas(fs: impl IntoIterator<Item = Formula>) -> Self {
        Context { items: fs.into_iter().map(Item::F).collect() }
    }

    pub fn singleton(item: Item) -> Self {
        Context { items: vec![item] }
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn size(&self) -> usize {
        self.items.iter().map(Item::size).sum()
    }

    /// The items at the level addressed by `path`.
    pub fn level(&self, path: &[usize]) -> Result<&Vec<Item>, PathError> {
        let mut ctx = self;
        for (depth, &step) in path.iter().enumerate() {
            match ctx.items.get(step) {
                None => return Err(PathError::OutOfBounds { depth, step, len: ctx.items.len() }),
                Some(Item::F(_)) => return Err(PathError::NotAnnotated { depth, step }),
                Some(Item::Ann(_, inner)) => ctx = inner,
            }
        }
        Ok(&ctx.items)
    }

    pub fn item(&self, at: &ItemPath) -> Result<&Item, PathError> {
        let level = self.level(&at.level)?;
        level.get(at.index).ok_or(PathError::OutOfBounds {
            depth: at.level.len(),
            step: at.index,
            len: level.len(),
        })
    }

    /// Rebuild this context with the item vector at `path` edited in place.
    pub fn edit_level<R>(
        &self,
        path: &[usize],
        edit: impl FnOnce(&mut Vec<Item>) -> R,
    ) -> Result<(Context, R), PathError> {
        fn go<R>(
            ctx: &Context,
            path: &[usize],
            depth: usize,
            edit: impl FnOnce(&mut Vec<Item>) -> R,
        ) -> Result<(Context, R), PathError> {
            let mut items = ctx.items.clone();
            match path.split_first() {
                None => {
                    let r = edit(&mut items);
                    Ok((Context { items }, r))
                }
                Some((&step, rest)) => match ctx.items.get(step) {
                    None => Err(PathError::OutOfBounds { depth, step, len: ctx.items.len() }),
                    Some(Item::F(_)) => Err(PathError::NotAnnotated { depth, step }),
                    Some(Item::Ann(agent, inner)) => {
                        let (new_inner, r) = go(inner, rest, depth + 1, edit)?;
                        items[step] = Item::Ann(agent.clone(), new_inner);
                        Ok((Context { items }, r))
                    }
                },
            }
        }
        go(self, path, 0, edit)
    }

    /// Fill the hole at `path` with all items of `filler` (appended at the
    /// end of that level, so existing addresses stay valid).
    pub fn plug(&self, path: &[usize], filler: &Context) -> Result<Context, PathError> {
        let (ctx, ()) = self.edit_level(path, |items| {
            items.extend(filler.items.iter().cloned());
        })?;
        Ok(ctx)
    }

    /// True if some item at some depth is the formula `bot`.
    pub fn contains_bot(&self) -> bool {
        self.items.iter().any(|item| match item {
            Item::F(Formula::Bot) => true,
            Item::F(_) => false,
            Item::Ann(_, inner) => inner.contains_bot(),
        })
    }

    /// Normal form: items recursively sorted by (size, printed form).
    /// Two contexts are equal as nested multisets iff their canonical
    /// forms are structurally equal.
    pub fn canonical(&self) -> Context {
        let mut items: Vec<Item> = self.items.iter().map(Item::canonical).collect();
        items.sort_by_cached_key(|item| (item.size(), item.to_string()));
        Context { items }
    }

    pub fn multiset_eq(&self, other: &Context) -> bool {
        self.canonical() == other.canonical()
    }

    pub fn atoms(&self, out: &mut Vec<String>) {
        for item in &self.items {
            match item {
                Item::F(f) => f.atoms(out),
                Item::Ann(_, inner) => inner.atoms(out),
            }
        }
    }

    pub fn agents(&self, out: &mut Vec<Agent>) {
        for item in &self.items {
            match item {
                Item::F(f) => f.agents(out),
                Item::Ann(a, inner) => {
                    if !out.contains(a) {
                        out.push(a.clone());
                    }
                    inner.agents(out);
                }
            }
        }
    }

    /// The formula a context stands for: the conjunction of its items, an
    /// annotated item `(Γ)^A` standing for `<A>` of the conjunction of `Γ`.
    pub fn as_formula(&self) -> Formula {
        Formula::big_and(self.items.iter().map(|item| match item {
            Item::F(f) => f.clone(),
            Item::Ann(a, inner) => Formula::dia(a.clone(), inner.as_formula()),
        }))
    }
}

/// Combine two contexts-with-a-hole: `(base, outer)` with its hole filled by
/// `(filler, inner)`. Returns the combined base context together with the
/// path addressing `inner`'s hole inside it, so that plugging any `Γ` into
/// the result equals plugging `Γ` into `filler` first and the outcome into
/// `base`.
pub fn combine(
    base: &Context,
    outer: &[usize],
    filler: &Context,
    inner: &[usize],
) -> Result<(Context, LevelPath), PathError> {
    let offset = base.level(outer)?.len();
    // validate `inner` against the filler before translating it
    filler.level(inner)?;
    let plugged = base.plug(outer, filler)?;
    let mut path: LevelPath = outer.to_vec();
    if let Some((&first, rest)) = inner.split_first() {
        path.push(offset + first);
        path.extend_from_slice(rest);
    }
    Ok((plugged, path))
}

/// A sequent `Γ |- m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sequent {
    pub antecedent: Context,
    pub succedent: Formula,
}

impl Sequent {
    pub fn new(antecedent: Context, succedent: Formula) -> Self {
        Sequent { antecedent, succedent }
    }

    pub fn size(&self) -> usize {
        self.antecedent.size() + self.succedent.size()
    }

    pub fn canonical(&self) -> Sequent {
        Sequent { antecedent: self.antecedent.canonical(), succedent: self.succedent.clone() }
    }

    pub fn multiset_eq(&self, other: &Sequent) -> bool {
        self.succedent == other.succedent && self.antecedent.multiset_eq(&other.antecedent)
    }

    pub fn atoms(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.antecedent.atoms(&mut out);
        self.succedent.atoms(&mut out);
        out
    }

    pub fn agents(&self) -> Vec<Agent> {
        let mut out = Vec::new();
        self.antecedent.agents(&mut out);
        self.succedent.agents(&mut out);
        out
    }
}

// ---------------------------------------------------------------------------
// printing
// ---------------------------------------------------------------------------

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.print_prec(f, 1)
    }
}

impl Formula {
    fn print_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Formula::Bot => f.write_str("bot"),
            Formula::Top => f.write_str("top"),
            Formula::Atom(p) => f.write_str(p),
            Formula::Or(l, r) => {
                let parens = prec > 1;
                if parens {
                    f.write_str("(")?;
                }
                l.print_prec(f, 2)?;
                f.write_str(" | ")?;
                // right associated: a right child at the same level needs no parens
                match r.as_ref() {
                    Formula::Or(..) => r.print_prec(f, 1)?,
                    _ => r.print_prec(f, 2)?,
                }
                if parens {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Formula::And(l, r) => {
                let parens = prec > 2;
                if parens {
                    f.write_str("(")?;
                }
                l.print_prec(f, 3)?;
                f.write_str(" & ")?;
                match r.as_ref() {
                    Formula::And(..) => r.print_prec(f, 2)?,
                    _ => r.print_prec(f, 3)?,
                }
                if parens {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Formula::Dia(a, b) => write!(f, "<{a}>({b})"),
            Formula::Box_(a, b) => write!(f, "[{a}]({b})"),
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::F(formula) => write!(f, "{formula}"),
            Item::Ann(a, ctx) => write!(f, "({})^{a}", print_items(&ctx.items)),
        }
    }
}

fn print_items(items: &[Item]) -> String {
    items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for Context {
    /// Deterministic printing: items are emitted in canonical order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_items(&self.canonical().items))
    }
}

impl Context {
    /// Printing that preserves the stored item order. Used when positions
    /// into this exact representation (rule instance paths) must survive a
    /// print/parse round trip.
    pub fn print_raw(&self) -> String {
        print_items(&self.items)
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.antecedent.is_empty() {
            write!(f, "|- {}", self.succedent)
        } else {
            write!(f, "{} |- {}", self.antecedent, self.succedent)
        }
    }
}

impl Sequent {
    pub fn print_raw(&self) -> String {
        if self.antecedent.is_empty() {
            format!("|- {}", self.succedent)
        } else {
            format!("{} |- {}", self.antecedent.print_raw(), self.succedent)
        }
    }
}

// ---------------------------------------------------------------------------
// parsing
// ---------------------------------------------------------------------------

/// Syntax error with the byte position of the offending token.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {pos}: {message}")]
pub struct SyntaxError {
    pub pos: usize,
    pub message: String,
}

fn err<T>(pos: usize, message: impl Into<String>) -> Result<T, SyntaxError> {
    Err(SyntaxError { pos, message: message.into() })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    AtomName(String),
    AgentName(String),
    LParen,
    RParen,
    LAngle,
    RAngle,
    LBracket,
    RBracket,
    Caret,
    Comma,
    Amp,
    Pipe,
    Turnstile,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::AtomName(s) => write!(f, "atom `{s}`"),
            Tok::AgentName(s) => write!(f, "agent `{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LAngle => f.write_str("`<`"),
            Tok::RAngle => f.write_str("`>`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Caret => f.write_str("`^`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Amp => f.write_str("`&`"),
            Tok::Pipe => f.write_str("`|`"),
            Tok::Turnstile => f.write_str("`|-`"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'(' => {
                toks.push((Tok::LParen, start));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, start));
                i += 1;
            }
            b'<' => {
                toks.push((Tok::LAngle, start));
                i += 1;
            }
            b'>' => {
                toks.push((Tok::RAngle, start));
                i += 1;
            }
            b'[' => {
                toks.push((Tok::LBracket, start));
                i += 1;
            }
            b']' => {
                toks.push((Tok::RBracket, start));
                i += 1;
            }
            b'^' => {
                toks.push((Tok::Caret, start));
                i += 1;
            }
            b',' => {
                toks.push((Tok::Comma, start));
                i += 1;
            }
            b'&' => {
                toks.push((Tok::Amp, start));
                i += 1;
            }
            b'|' => {
                if bytes.get(i + 1) == Some(&b'-') {
                    toks.push((Tok::Turnstile, start));
                    i += 2;
                } else {
                    toks.push((Tok::Pipe, start));
                    i += 1;
                }
            }
            b'a'..=b'z' => {
                i += 1;
                loop {
                    match bytes.get(i) {
                        Some(b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'_') => i += 1,
                        Some(b'{') => {
                            // balanced brace group; commas are part of the token here
                            let mut depth = 1;
                            i += 1;
                            while depth > 0 {
                                match bytes.get(i) {
                                    Some(b'{') => depth += 1,
                                    Some(b'}') => depth -= 1,
                                    Some(_) => {}
                                    None => return err(start, "unterminated `{` in atom"),
                                }
                                i += 1;
                            }
                        }
                        _ => break,
                    }
                }
                toks.push((Tok::AtomName(text[start..i].to_string()), start));
            }
            b'A'..=b'Z' => {
                i += 1;
                while matches!(bytes.get(i), Some(b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9')) {
                    i += 1;
                }
                toks.push((Tok::AgentName(text[start..i].to_string()), start));
            }
            b'0'..=b'9' => {
                i += 1;
                while matches!(bytes.get(i), Some(b'0'..=b'9')) {
                    i += 1;
                }
                toks.push((Tok::AgentName(text[start..i].to_string()), start));
            }
            _ => return err(start, format!("unexpected character `{}`", &text[start..start + 1])),
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, SyntaxError> {
        Ok(Parser { toks: lex(text)?, pos: 0, end: text.len() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, p)| *p)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => err(self.here(), format!("expected {want}, found {t}")),
            None => err(self.here(), format!("expected {want}, found end of input")),
        }
    }

    fn expect_done(&self) -> Result<(), SyntaxError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => err(self.here(), format!("unexpected {t} after the end of the input")),
        }
    }

    fn agent(&mut self) -> Result<Agent, SyntaxError> {
        match self.bump() {
            Some(Tok::AgentName(s)) => Ok(Agent::new(s)),
            Some(t) => err(self.toks[self.pos - 1].1, format!("expected an agent, found {t}")),
            None => err(self.here(), "expected an agent, found end of input"),
        }
    }

    fn formula(&mut self) -> Result<Formula, SyntaxError> {
        let first = self.formula_and()?;
        if self.peek() == Some(&Tok::Pipe) {
            let mut parts = vec![first];
            while self.peek() == Some(&Tok::Pipe) {
                self.pos += 1;
                parts.push(self.formula_and()?);
            }
            Ok(Formula::big_or(parts))
        } else {
            Ok(first)
        }
    }

    fn formula_and(&mut self) -> Result<Formula, SyntaxError> {
        let first = self.formula_unary()?;
        if self.peek() == Some(&Tok::Amp) {
            let mut parts = vec![first];
            while self.peek() == Some(&Tok::Amp) {
                self.pos += 1;
                parts.push(self.formula_unary()?);
            }
            Ok(Formula::big_and(parts))
        } else {
            Ok(first)
        }
    }

    fn formula_unary(&mut self) -> Result<Formula, SyntaxError> {
        match self.peek() {
            Some(Tok::LAngle) => {
                self.pos += 1;
                let a = self.agent()?;
                self.expect(Tok::RAngle)?;
                Ok(Formula::dia(a, self.formula_unary()?))
            }
            Some(Tok::LBracket) => {
                self.pos += 1;
                let a = self.agent()?;
                self.expect(Tok::RBracket)?;
                Ok(Formula::box_(a, self.formula_unary()?))
            }
            _ => self.formula_primary(),
        }
    }

    fn formula_primary(&mut self) -> Result<Formula, SyntaxError> {
        let at = self.here();
        match self.bump() {
            Some(Tok::AtomName(s)) => Ok(match s.as_str() {
                "top" => Formula::Top,
                "bot" => Formula::Bot,
                _ => Formula::Atom(s),
            }),
            Some(Tok::LParen) => {
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Some(t) => err(at, format!("expected a formula, found {t}")),
            None => err(at, "expected a formula, found end of input"),
        }
    }

    /// Index just past the `)` matching the `(` at the current position.
    fn after_matching_paren(&self) -> Result<usize, SyntaxError> {
        debug_assert_eq!(self.peek(), Some(&Tok::LParen));
        let mut depth = 0usize;
        for (off, (tok, _)) in self.toks[self.pos..].iter().enumerate() {
            match tok {
                Tok::LParen => depth += 1,
                Tok::RParen => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(self.pos + off + 1);
                    }
                }
                _ => {}
            }
        }
        err(self.here(), "unbalanced `(`")
    }

    fn item(&mut self) -> Result<Item, SyntaxError> {
        if self.peek() == Some(&Tok::LParen) {
            // `(...)^A` is an annotated context, a bare `(...)` a formula
            let after = self.after_matching_paren()?;
            if self.toks.get(after).map(|(t, _)| t) == Some(&Tok::Caret) {
                self.pos += 1;
                let inner = self.context_until_rparen()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Caret)?;
                let a = self.agent()?;
                return Ok(Item::Ann(a, inner));
            }
        }
        Ok(Item::F(self.formula()?))
    }

    fn context_until_rparen(&mut self) -> Result<Context, SyntaxError> {
        if self.peek() == Some(&Tok::RParen) {
            return Ok(Context::empty());
        }
        self.context_nonempty()
    }

    fn context_nonempty(&mut self) -> Result<Context, SyntaxError> {
        let mut items = vec![self.item()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            items.push(self.item()?);
        }
        Ok(Context { items })
    }

    fn sequent(&mut self) -> Result<Sequent, SyntaxError> {
        let antecedent = if self.peek() == Some(&Tok::Turnstile) {
            Context::empty()
        } else {
            self.context_nonempty()?
        };
        self.expect(Tok::Turnstile)?;
        let succedent = self.formula()?;
        Ok(Sequent { antecedent, succedent })
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, SyntaxError> {
    let mut p = Parser::new(text)?;
    let f = p.formula()?;
    p.expect_done()?;
    Ok(f)
}

pub fn parse_context(text: &str) -> Result<Context, SyntaxError> {
    let mut p = Parser::new(text)?;
    if p.peek().is_none() {
        return Ok(Context::empty());
    }
    let ctx = p.context_nonempty()?;
    p.expect_done()?;
    Ok(ctx)
}

pub fn parse_sequent(text: &str) -> Result<Sequent, SyntaxError> {
    let mut p = Parser::new(text)?;
    let s = p.sequent()?;
    p.expect_done()?;
    Ok(s)
}

/// What [`parse`] should read the input as.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseKind {
    Formula,
    Context,
    Sequent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Parsed {
    Formula(Formula),
    Context(Context),
    Sequent(Sequent),
}

pub fn parse(text: &str, kind: ParseKind) -> Result<Parsed, SyntaxError> {
    Ok(match kind {
        ParseKind::Formula => Parsed::Formula(parse_formula(text)?),
        ParseKind::Context => Parsed::Context(parse_context(text)?),
        ParseKind::Sequent => Parsed::Sequent(parse_sequent(text)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(name: &str) -> Agent {
        Agent::new(name)
    }

    fn p() -> Formula {
        Formula::atom("p")
    }

    fn q() -> Formula {
        Formula::atom("q")
    }

    #[test]
    fn parse_examples() {
        assert_eq!(
            parse_formula("<A>(p & q)").unwrap(),
            Formula::dia(a("A"), Formula::and(p(), q()))
        );
        assert_eq!(
            parse_formula("p & q | r").unwrap(),
            Formula::or(Formula::and(p(), q()), Formula::atom("r"))
        );
        let s = parse_sequent("(p)^A, q |- [A] q").unwrap();
        assert_eq!(
            s.antecedent,
            Context::new(vec![Item::Ann(a("A"), Context::of_formulas([p()])), Item::F(q())])
        );
        assert_eq!(s.succedent, Formula::box_(a("A"), q()));
    }

    #[test]
    fn parse_precedence_and_modalities() {
        // unary binds tightest, & over |
        assert_eq!(
            parse_formula("[A] p & q").unwrap(),
            Formula::and(Formula::box_(a("A"), p()), q())
        );
        assert_eq!(
            parse_formula("<1> s{1,2} | bot").unwrap(),
            Formula::or(Formula::dia(a("1"), Formula::atom("s{1,2}")), Formula::Bot)
        );
        // n-ary connectives right-associate
        assert_eq!(
            parse_formula("p & q & r").unwrap(),
            Formula::and(p(), Formula::and(q(), Formula::atom("r")))
        );
        assert_eq!(
            parse_formula("p | q | r").unwrap(),
            Formula::or(p(), Formula::or(q(), Formula::atom("r")))
        );
    }

    #[test]
    fn parse_empty_forms() {
        assert_eq!(parse_context("").unwrap(), Context::empty());
        assert_eq!(parse_sequent("|- top").unwrap().antecedent, Context::empty());
        assert_eq!(
            parse_context("()^A").unwrap(),
            Context::singleton(Item::Ann(a("A"), Context::empty()))
        );
    }

    #[test]
    fn parse_errors_carry_positions() {
        let e = parse_formula("p &").unwrap_err();
        assert_eq!(e.pos, 3);
        let e = parse_formula("p @ q").unwrap_err();
        assert_eq!(e.pos, 2);
        assert!(parse_sequent("p |- ").is_err());
        assert!(parse_formula("s{1,2").is_err());
    }

    #[test]
    fn print_examples() {
        assert_eq!(Formula::dia(a("A"), Formula::Top).to_string(), "<A>(top)");
        assert_eq!(Item::Ann(a("A"), Context::of_formulas([p(), q()])).to_string(), "(p, q)^A");
        assert_eq!(Context::empty().to_string(), "");
    }

    #[test]
    fn print_respects_precedence() {
        let f = Formula::and(Formula::or(p(), q()), Formula::atom("r"));
        assert_eq!(f.to_string(), "(p | q) & r");
        assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
        let g = Formula::and(Formula::and(p(), q()), Formula::atom("r"));
        assert_eq!(g.to_string(), "(p & q) & r");
        assert_eq!(parse_formula(&g.to_string()).unwrap(), g);
    }

    #[test]
    fn size_examples() {
        assert_eq!(p().size(), 0);
        assert_eq!(Formula::dia(a("A"), Formula::or(p(), q())).size(), 3);
        assert_eq!(Item::Ann(a("A"), Context::of_formulas([Formula::and(p(), q())])).size(), 2);
        let s = parse_sequent("(p & q)^A |- <A>(p)").unwrap();
        assert_eq!(s.size(), 2 + 2);
    }

    #[test]
    fn plug_examples() {
        // hole at top level of an otherwise empty context
        let base = Context::empty();
        let filled = base.plug(&[], &Context::of_formulas([p()])).unwrap();
        assert_eq!(filled, Context::of_formulas([p()]));

        // hole inside (·)^A with surroundings {q}
        let base = Context::new(vec![Item::F(q()), Item::Ann(a("A"), Context::empty())]);
        let filled = base.plug(&[1], &Context::of_formulas([p()])).unwrap();
        assert!(filled.multiset_eq(&parse_context("q, (p)^A").unwrap()));

        assert!(base.plug(&[0], &Context::empty()).is_err());
        assert!(base.plug(&[7], &Context::empty()).is_err());
    }

    #[test]
    fn combine_identity_and_descent() {
        let base = Context::empty();
        let (ctx, path) = combine(&base, &[], &Context::empty(), &[]).unwrap();
        assert_eq!(ctx, Context::empty());
        assert!(path.is_empty());

        // outer descends into (·)^A, inner at its root
        let base = Context::singleton(Item::Ann(a("A"), Context::empty()));
        let (ctx, path) = combine(&base, &[0], &Context::empty(), &[]).unwrap();
        assert_eq!(ctx, base);
        assert_eq!(path, vec![0]);
    }

    #[test]
    fn canonical_examples() {
        let ab = parse_context("p, q").unwrap();
        let ba = parse_context("q, p").unwrap();
        assert_eq!(ab.canonical(), ba.canonical());

        let pp = parse_context("p, p").unwrap();
        let p1 = parse_context("p").unwrap();
        assert_ne!(pp.canonical(), p1.canonical());

        let x = parse_context("(p, q)^A, r").unwrap();
        let y = parse_context("(q, p)^A, r").unwrap();
        assert_eq!(x.canonical(), y.canonical());
    }

    #[test]
    fn context_as_formula() {
        let ctx = parse_context("(p)^A, q").unwrap();
        // items in stored order: <A>(p) & q
        assert_eq!(ctx.as_formula(), Formula::and(Formula::dia(a("A"), p()), q()));
        assert_eq!(Context::empty().as_formula(), Formula::Top);
    }
}
