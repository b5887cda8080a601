//! The modal language of seeing, knowing and believing, its three-valued
//! truth domain, and the textual query-prefix mini-language.
//!
//! Query prefixes are the string form used by external functions:
//! `"-b[b]"` negates agent b's belief, `"b[a] b[c]"` nests `B_a B_c`.
//! Grammar: `prefix := item (ws item)*`, `item := ['-'] ('b'|'k'|'s') '['
//! agent ']'`.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::state::{Value, VarId};

/// Three-valued truth: false, undeterminable, true.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Ternary {
    False,
    Unknown,
    True,
}

impl Ternary {
    pub fn min(self, other: Ternary) -> Ternary {
        core::cmp::min(self, other)
    }

    /// 1 - x
    pub fn negate(self) -> Ternary {
        match self {
            Ternary::False => Ternary::True,
            Ternary::Unknown => Ternary::Unknown,
            Ternary::True => Ternary::False,
        }
    }

    pub fn is_true(self) -> bool {
        self == Ternary::True
    }
}

impl From<bool> for Ternary {
    fn from(b: bool) -> Self {
        if b {
            Ternary::True
        } else {
            Ternary::False
        }
    }
}

impl fmt::Display for Ternary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Ternary::False => "epi.false",
            Ternary::Unknown => "epi.unknown",
            Ternary::True => "epi.true",
        };
        write!(f, "{}", s)
    }
}

/// Comparison relations available in predicates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Rel {
    pub fn parse(s: &str) -> Option<Rel> {
        match s {
            "=" => Some(Rel::Eq),
            "!=" => Some(Rel::Ne),
            "<" => Some(Rel::Lt),
            "<=" => Some(Rel::Le),
            ">" => Some(Rel::Gt),
            ">=" => Some(Rel::Ge),
            _ => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Ne => "!=",
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Gt => ">",
            Rel::Ge => ">=",
        }
    }
}

/// A predicate operand: a state variable or a literal.
#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Var(VarId),
    Lit(Value),
}

/// An atomic comparison, interpreted on the last state of a sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Predicate {
    pub rel: Rel,
    pub lhs: Term,
    pub rhs: Term,
}

/// Formulas of the knowledge-and-belief language. Disjunction and
/// implication desugar through [`Formula::or`] and [`Formula::imply`], so
/// evaluation only handles these connectives.
#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    Pred(Predicate),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    /// Agent sees a variable.
    SeesVar(AgentRef, VarId),
    /// Agent sees (can determine) a formula.
    Sees(AgentRef, Box<Formula>),
    Knows(AgentRef, Box<Formula>),
    Believes(AgentRef, Box<Formula>),
}

/// Agents are referenced by name in formulas and resolved by the evaluator.
pub type AgentRef = String;

impl Formula {
    pub fn pred(rel: Rel, lhs: Term, rhs: Term) -> Formula {
        Formula::Pred(Predicate { rel, lhs, rhs })
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    pub fn imply(a: Formula, b: Formula) -> Formula {
        Formula::or(Formula::not(a), b)
    }

    pub fn believes(agent: &str, f: Formula) -> Formula {
        Formula::Believes(agent.to_owned(), Box::new(f))
    }

    pub fn knows(agent: &str, f: Formula) -> Formula {
        Formula::Knows(agent.to_owned(), Box::new(f))
    }

    pub fn sees(agent: &str, f: Formula) -> Formula {
        Formula::Sees(agent.to_owned(), Box::new(f))
    }
}

/// Modal operator of a query-prefix item.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrefixOp {
    Believes,
    Knows,
    Sees,
}

/// One `['-'] op '[' agent ']'` item of a query prefix.
#[derive(Clone, Debug, PartialEq)]
pub struct PrefixItem {
    pub negated: bool,
    pub op: PrefixOp,
    pub agent: String,
}

/// An ordered epistemic prefix, outermost operator first.
pub type QueryPrefix = Vec<PrefixItem>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for PrefixParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "query prefix error at {}: {}", self.position, self.message)
    }
}

impl core::error::Error for PrefixParseError {}

/// Parses the textual prefix form, e.g. `"-b[b]"` or `"b[a] b[c]"`.
pub fn parse_query_prefix(text: &str) -> Result<QueryPrefix, PrefixParseError> {
    let bytes = text.as_bytes();
    let mut items = Vec::new();
    let mut i = 0;
    let err = |position: usize, message: &str| PrefixParseError {
        position,
        message: message.to_owned(),
    };
    while i < bytes.len() {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i >= bytes.len() {
            break;
        }
        let mut negated = false;
        if bytes[i] == b'-' {
            negated = true;
            i += 1;
        }
        if i >= bytes.len() {
            return Err(err(i, "expected operator after '-'"));
        }
        let op = match bytes[i] {
            b'b' => PrefixOp::Believes,
            b'k' => PrefixOp::Knows,
            b's' => PrefixOp::Sees,
            c => {
                return Err(err(i, &alloc::format!("unknown operator `{}`", c as char)));
            }
        };
        i += 1;
        if i >= bytes.len() || bytes[i] != b'[' {
            return Err(err(i, "expected '[' after operator"));
        }
        i += 1;
        let start = i;
        while i < bytes.len() && bytes[i] != b']' {
            i += 1;
        }
        if i >= bytes.len() {
            return Err(err(i, "unterminated '['"));
        }
        let agent = text[start..i].trim();
        if agent.is_empty() {
            return Err(err(start, "empty agent name"));
        }
        items.push(PrefixItem { negated, op, agent: agent.to_owned() });
        i += 1;
    }
    if items.is_empty() {
        return Ok(items);
    }
    Ok(items)
}

/// Renders a prefix back to its textual form.
pub fn prefix_to_string(prefix: &QueryPrefix) -> String {
    let mut out = String::new();
    for (i, item) in prefix.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if item.negated {
            out.push('-');
        }
        out.push(match item.op {
            PrefixOp::Believes => 'b',
            PrefixOp::Knows => 'k',
            PrefixOp::Sees => 's',
        });
        out.push('[');
        out.push_str(&item.agent);
        out.push(']');
    }
    out
}

/// Wraps `inner` with the prefix operators, outermost first.
pub fn prefix_formula(prefix: &QueryPrefix, inner: Formula) -> Formula {
    let mut f = inner;
    for item in prefix.iter().rev() {
        f = match item.op {
            PrefixOp::Believes => Formula::Believes(item.agent.clone(), Box::new(f)),
            PrefixOp::Knows => Formula::Knows(item.agent.clone(), Box::new(f)),
            PrefixOp::Sees => Formula::Sees(item.agent.clone(), Box::new(f)),
        };
        if item.negated {
            f = Formula::not(f);
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_negated_single_item() {
        let p = parse_query_prefix("-b[b]").unwrap();
        assert_eq!(
            p,
            alloc::vec![PrefixItem { negated: true, op: PrefixOp::Believes, agent: "b".to_owned() }]
        );
    }

    #[test]
    fn parses_nested_chain() {
        let p = parse_query_prefix("b[a] b[c]").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].agent, "a");
        assert_eq!(p[1].agent, "c");
        assert!(p.iter().all(|i| !i.negated && i.op == PrefixOp::Believes));
        assert_eq!(prefix_to_string(&p), "b[a] b[c]");
    }

    #[test]
    fn rejects_unknown_operator() {
        let e = parse_query_prefix("x[a]").unwrap_err();
        assert_eq!(e.position, 0);
    }

    #[test]
    fn rejects_unterminated_bracket() {
        assert!(parse_query_prefix("b[a").is_err());
        assert!(parse_query_prefix("b a]").is_err());
    }

    #[test]
    fn ternary_algebra() {
        use Ternary::*;
        assert_eq!(True.min(Unknown), Unknown);
        assert_eq!(False.min(Unknown), False);
        assert_eq!(Unknown.negate(), Unknown);
        assert_eq!(True.negate(), False);
        assert_eq!(alloc::format!("{}", True), "epi.true");
        assert_eq!(alloc::format!("{}", Unknown), "epi.unknown");
    }
}
