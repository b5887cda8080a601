//! Object model and parser for the planning dialect.
//!
//! A domain carries `:types`, `:functions`, `:rules` (per-variable
//! processual type, true coefficients and initially-believed coefficients),
//! `:visibility` (per-observer guard rules, with `?i` denoting the
//! observer) and `:action` schemas whose preconditions and effects may call
//! the external functions `@epi` and `@jp`. A problem carries `:objects`,
//! a complete `:init`, a `:goal` conjunction and an optional numeric
//! comparison `:tolerance`.

use std::fmt::Write as _;

use pjp_core::formula::Rel;

use crate::sexpr::{parse_all, ParseError, Pos, Sexpr};

#[derive(Clone, Debug, PartialEq)]
pub struct TypedParam {
    pub name: String,
    pub ty: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PatternArg {
    /// `?x - ty` binder.
    Var(TypedParam),
    /// Ground constant.
    Const(String),
}

/// A fluent pattern in a declaration position, e.g. `(secret sa)` or
/// `(agent_loc ?a - agent)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FluentPattern {
    pub name: String,
    pub args: Vec<PatternArg>,
}

/// A fluent reference in an expression position; arguments are constants or
/// bare parameter references (`?a`).
#[derive(Clone, Debug, PartialEq)]
pub struct FluentRef {
    pub name: String,
    pub args: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Lit {
    Num(f64),
    Sym(String),
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprDecl {
    Lit(Lit),
    Fluent(FluentRef),
    /// `(@jp ("b[?a]") (shared ?s))`
    Jp { prefix: String, fluent: FluentRef },
}

/// Inner formulas of `@epi` calls: comparisons under and/or/not.
#[derive(Clone, Debug, PartialEq)]
pub enum FormulaDecl {
    Cmp { rel: Rel, lhs: ExprDecl, rhs: ExprDecl },
    And(Vec<FormulaDecl>),
    Or(Vec<FormulaDecl>),
    Not(Box<FormulaDecl>),
}

/// One precondition or goal conjunct.
#[derive(Clone, Debug, PartialEq)]
pub enum CondDecl {
    /// `(= expr expr)`, `(!= expr expr)`, `(< expr expr)`, ...
    Cmp { rel: Rel, lhs: ExprDecl, rhs: ExprDecl },
    /// `(= (@epi ("prefix") inner) epi.true)` and the `!=` form.
    Epi { negated: bool, prefix: String, inner: FormulaDecl, expect: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffectDecl {
    pub fluent: FluentRef,
    pub value: ExprDecl,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedParam>,
    pub precondition: Vec<CondDecl>,
    pub effects: Vec<EffectDecl>,
}

#[derive(Clone, Debug)]
pub struct RuleDecl {
    pub type_name: String,
    pub pattern: FluentPattern,
    pub eta: Vec<f64>,
    pub believed_eta: Vec<Option<f64>>,
    pub pos: Pos,
}

impl PartialEq for RuleDecl {
    /// Source positions are diagnostics, not model content.
    fn eq(&self, other: &Self) -> bool {
        self.type_name == other.type_name
            && self.pattern == other.pattern
            && self.eta == other.eta
            && self.believed_eta == other.believed_eta
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VisibilityRule {
    pub pattern: FluentPattern,
    /// Conjunction of positive equality atoms, `(= fluent fluent-or-lit)`.
    pub guard: Vec<(FluentRef, ExprDecl)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<TypedParam>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainDef {
    pub name: String,
    pub types: Vec<String>,
    pub functions: Vec<FunctionDecl>,
    pub rules: Vec<RuleDecl>,
    /// Pattern whose grounding (with `?i` bound to the observer) marks
    /// agent presence; defaults to `(agent_loc ?i)`.
    pub presence: FluentRef,
    pub visibility: Vec<VisibilityRule>,
    pub actions: Vec<ActionSchema>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemDef {
    pub name: String,
    pub domain: String,
    /// `(object, type)` pairs in declaration order.
    pub objects: Vec<(String, String)>,
    pub init: Vec<(FluentRef, Lit)>,
    pub goal: Vec<CondDecl>,
    pub tolerance: Option<f64>,
}

fn err(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::new(pos, msg)
}

fn expect_list<'a>(e: &'a Sexpr, what: &str) -> Result<&'a [Sexpr], ParseError> {
    e.as_list().ok_or_else(|| err(e.pos(), format!("expected {}", what)))
}

fn expect_sym<'a>(e: &'a Sexpr, what: &str) -> Result<&'a str, ParseError> {
    e.as_sym().ok_or_else(|| err(e.pos(), format!("expected {}", what)))
}

/// Parses `?a - agent ?s - secret ...` (used by `:parameters`, `:objects`
/// uses the same shape with bare names).
fn parse_typed_names(items: &[Sexpr], pos: Pos) -> Result<Vec<TypedParam>, ParseError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let sym = expect_sym(&items[i], "name")?;
        if sym == "-" {
            i += 1;
            if i >= items.len() {
                return Err(err(pos, "expected type after '-'"));
            }
            let ty = expect_sym(&items[i], "type name")?.to_string();
            if pending.is_empty() {
                return Err(err(items[i].pos(), "type without names"));
            }
            for name in pending.drain(..) {
                out.push(TypedParam { name, ty: ty.clone() });
            }
        } else {
            pending.push(sym.to_string());
        }
        i += 1;
    }
    if !pending.is_empty() {
        return Err(err(pos, "trailing names without a type"));
    }
    Ok(out)
}

fn parse_pattern(e: &Sexpr) -> Result<FluentPattern, ParseError> {
    let items = expect_list(e, "fluent pattern")?;
    if items.is_empty() {
        return Err(err(e.pos(), "empty fluent pattern"));
    }
    let name = expect_sym(&items[0], "fluent name")?.to_string();
    let mut args = Vec::new();
    let mut i = 1;
    while i < items.len() {
        let sym = expect_sym(&items[i], "pattern argument")?;
        if let Some(var) = sym.strip_prefix('?') {
            // typed binder `?x - ty`
            if i + 1 < items.len() && items[i + 1].as_sym() == Some("-") {
                if i + 2 >= items.len() {
                    return Err(err(items[i].pos(), "expected type after '-'"));
                }
                let ty = expect_sym(&items[i + 2], "type name")?.to_string();
                args.push(PatternArg::Var(TypedParam { name: format!("?{var}"), ty }));
                i += 3;
            } else {
                return Err(err(items[i].pos(), format!("pattern variable `?{var}` needs `- <type>`")));
            }
        } else {
            args.push(PatternArg::Const(sym.to_string()));
            i += 1;
        }
    }
    Ok(FluentPattern { name, args })
}

fn parse_fluent_ref(e: &Sexpr) -> Result<FluentRef, ParseError> {
    let items = expect_list(e, "fluent reference")?;
    if items.is_empty() {
        return Err(err(e.pos(), "empty fluent reference"));
    }
    let name = expect_sym(&items[0], "fluent name")?.to_string();
    let mut args = Vec::new();
    for a in &items[1..] {
        args.push(expect_sym(a, "fluent argument")?.to_string());
    }
    Ok(FluentRef { name, args })
}

fn parse_expr(e: &Sexpr) -> Result<ExprDecl, ParseError> {
    match e {
        Sexpr::Num(x, _) => Ok(ExprDecl::Lit(Lit::Num(*x))),
        Sexpr::Sym(s, _) if s == "none" || s == "jp.none" => Ok(ExprDecl::Lit(Lit::None)),
        Sexpr::Sym(s, _) => Ok(ExprDecl::Lit(Lit::Sym(s.clone()))),
        Sexpr::List(items, pos) => {
            if items.first().and_then(|x| x.as_sym()) == Some("@jp") {
                if items.len() != 3 {
                    return Err(err(*pos, "@jp takes a query and a fluent"));
                }
                let q = expect_list(&items[1], "@jp query")?;
                let prefix = match q {
                    [Sexpr::Str(s, _)] => s.clone(),
                    _ => return Err(err(items[1].pos(), "@jp query must be a quoted string")),
                };
                let fluent = parse_fluent_ref(&items[2])?;
                Ok(ExprDecl::Jp { prefix, fluent })
            } else {
                Ok(ExprDecl::Fluent(parse_fluent_ref(e)?))
            }
        }
        _ => Err(err(e.pos(), "expected an expression")),
    }
}

fn parse_formula(e: &Sexpr) -> Result<FormulaDecl, ParseError> {
    let items = expect_list(e, "formula")?;
    if items.is_empty() {
        return Err(err(e.pos(), "empty formula"));
    }
    let head = expect_sym(&items[0], "formula operator")?;
    match head {
        "and" | "or" => {
            let mut parts = Vec::new();
            for part in &items[1..] {
                parts.push(parse_formula(part)?);
            }
            if parts.is_empty() {
                return Err(err(e.pos(), format!("empty ({head})")));
            }
            Ok(if head == "and" { FormulaDecl::And(parts) } else { FormulaDecl::Or(parts) })
        }
        "not" => {
            if items.len() != 2 {
                return Err(err(e.pos(), "(not ...) takes one formula"));
            }
            Ok(FormulaDecl::Not(Box::new(parse_formula(&items[1])?)))
        }
        _ => {
            let rel = Rel::parse(head).ok_or_else(|| err(items[0].pos(), format!("unknown relation `{head}`")))?;
            if items.len() != 3 {
                return Err(err(e.pos(), "comparison takes two operands"));
            }
            let lhs = parse_expr(&items[1])?;
            let rhs = parse_expr(&items[2])?;
            for side in [&lhs, &rhs] {
                if matches!(side, ExprDecl::Jp { .. }) {
                    return Err(err(e.pos(), "@jp is not allowed inside @epi formulas"));
                }
            }
            Ok(FormulaDecl::Cmp { rel, lhs, rhs })
        }
    }
}

fn parse_cond(e: &Sexpr) -> Result<CondDecl, ParseError> {
    let items = expect_list(e, "condition")?;
    if items.is_empty() {
        return Err(err(e.pos(), "empty condition"));
    }
    let head = expect_sym(&items[0], "condition operator")?;
    let rel = Rel::parse(head).ok_or_else(|| err(items[0].pos(), format!("unknown relation `{head}`")))?;
    if items.len() != 3 {
        return Err(err(e.pos(), "comparison takes two operands"));
    }
    // @epi comparisons get their own shape
    let is_epi = |x: &Sexpr| x.as_list().and_then(|l| l.first()).and_then(|h| h.as_sym()) == Some("@epi");
    if is_epi(&items[1]) || is_epi(&items[2]) {
        if !matches!(rel, Rel::Eq | Rel::Ne) {
            return Err(err(e.pos(), "@epi results only support = and !="));
        }
        let (epi, other) = if is_epi(&items[1]) { (&items[1], &items[2]) } else { (&items[2], &items[1]) };
        let parts = expect_list(epi, "@epi call")?;
        if parts.len() != 3 {
            return Err(err(epi.pos(), "@epi takes a query and a formula"));
        }
        let q = expect_list(&parts[1], "@epi query")?;
        let prefix = match q {
            [Sexpr::Str(s, _)] => s.clone(),
            [] => String::new(),
            _ => return Err(err(parts[1].pos(), "@epi query must be a quoted string")),
        };
        let inner = parse_formula(&parts[2])?;
        let expect = expect_sym(other, "epi.true/epi.false/epi.unknown")?.to_string();
        if !matches!(expect.as_str(), "epi.true" | "epi.false" | "epi.unknown") {
            return Err(err(other.pos(), format!("unknown epi result `{expect}`")));
        }
        return Ok(CondDecl::Epi { negated: rel == Rel::Ne, prefix, inner, expect });
    }
    Ok(CondDecl::Cmp { rel, lhs: parse_expr(&items[1])?, rhs: parse_expr(&items[2])? })
}

fn parse_cond_conjunction(e: &Sexpr) -> Result<Vec<CondDecl>, ParseError> {
    if let Some(items) = e.as_list() {
        if items.first().and_then(|x| x.as_sym()) == Some("and") {
            let mut out = Vec::new();
            for part in &items[1..] {
                out.push(parse_cond(part)?);
            }
            return Ok(out);
        }
    }
    Ok(vec![parse_cond(e)?])
}

fn parse_action(items: &[Sexpr], pos: Pos) -> Result<ActionSchema, ParseError> {
    if items.len() < 2 {
        return Err(err(pos, "(:action ...) needs a name"));
    }
    let name = expect_sym(&items[1], "action name")?.to_string();
    let mut params = Vec::new();
    let mut precondition = Vec::new();
    let mut effects = Vec::new();
    let mut i = 2;
    while i < items.len() {
        let key = expect_sym(&items[i], "action section keyword")?;
        if i + 1 >= items.len() {
            return Err(err(items[i].pos(), format!("{key} needs a value")));
        }
        let value = &items[i + 1];
        match key {
            ":parameters" => {
                let list = expect_list(value, "parameter list")?;
                params = parse_typed_names(list, value.pos())?;
            }
            ":precondition" => precondition = parse_cond_conjunction(value)?,
            ":effect" => {
                let list = expect_list(value, "effect")?;
                let assigns: Vec<&Sexpr> = if list.first().and_then(|x| x.as_sym()) == Some("and") {
                    list[1..].iter().collect()
                } else {
                    vec![value]
                };
                for a in assigns {
                    let parts = expect_list(a, "(assign ...)")?;
                    if parts.len() != 3 || parts[0].as_sym() != Some("assign") {
                        return Err(err(a.pos(), "effects must be (assign <fluent> <expr>)"));
                    }
                    let fluent = parse_fluent_ref(&parts[1])?;
                    let value = parse_expr(&parts[2])?;
                    effects.push(EffectDecl { fluent, value });
                }
            }
            other => return Err(err(items[i].pos(), format!("unknown action section `{other}`"))),
        }
        i += 2;
    }
    // effects assign each fluent at most once
    for (i, a) in effects.iter().enumerate() {
        for b in &effects[i + 1..] {
            if a.fluent == b.fluent {
                return Err(err(pos, format!("action `{name}` assigns `{}` twice", a.fluent.name)));
            }
        }
    }
    Ok(ActionSchema { name, params, precondition, effects })
}

/// Parses a domain file.
pub fn parse_domain(src: &str) -> Result<DomainDef, ParseError> {
    let forms = parse_all(src)?;
    let top = match forms.as_slice() {
        [one] => one,
        [] => return Err(err(Pos { line: 1, col: 1 }, "empty domain file")),
        [_, extra, ..] => return Err(err(extra.pos(), "expected a single (define ...) form")),
    };
    let items = expect_list(top, "(define ...)")?;
    if items.first().and_then(|x| x.as_sym()) != Some("define") {
        return Err(err(top.pos(), "expected (define (domain ...) ...)"));
    }
    let header = expect_list(&items[1], "(domain <name>)")?;
    if header.len() != 2 || header[0].as_sym() != Some("domain") {
        return Err(err(items[1].pos(), "expected (domain <name>)"));
    }
    let mut def = DomainDef {
        name: expect_sym(&header[1], "domain name")?.to_string(),
        types: Vec::new(),
        functions: Vec::new(),
        rules: Vec::new(),
        presence: FluentRef { name: "agent_loc".into(), args: vec!["?i".into()] },
        visibility: Vec::new(),
        actions: Vec::new(),
    };
    for section in &items[2..] {
        let parts = expect_list(section, "domain section")?;
        let head = expect_sym(&parts[0], "section keyword")?;
        match head {
            ":types" => {
                for t in &parts[1..] {
                    def.types.push(expect_sym(t, "type name")?.to_string());
                }
            }
            ":functions" => {
                for f in &parts[1..] {
                    let items = expect_list(f, "function declaration")?;
                    let name = expect_sym(&items[0], "function name")?.to_string();
                    let params = parse_typed_names(&items[1..], f.pos())?;
                    def.functions.push(FunctionDecl { name, params });
                }
            }
            ":rules" => {
                for r in &parts[1..] {
                    let items = expect_list(r, "rule")?;
                    if items.len() != 4 {
                        return Err(err(r.pos(), "rule shape: (<type> <fluent> [eta] [believed])"));
                    }
                    let type_name = expect_sym(&items[0], "processual type")?.to_string();
                    let pattern = parse_pattern(&items[1])?;
                    let eta = match &items[2] {
                        Sexpr::Vector(v, p) => {
                            let mut out = Vec::new();
                            for x in v {
                                match x {
                                    Some(x) => out.push(*x),
                                    None => return Err(err(*p, "true coefficients cannot be unknown")),
                                }
                            }
                            out
                        }
                        other => return Err(err(other.pos(), "expected a coefficient vector")),
                    };
                    let believed_eta = match &items[3] {
                        Sexpr::Vector(v, _) => v.clone(),
                        other => return Err(err(other.pos(), "expected a coefficient vector")),
                    };
                    def.rules.push(RuleDecl { type_name, pattern, eta, believed_eta, pos: r.pos() });
                }
            }
            ":visibility" => {
                for r in &parts[1..] {
                    let items = expect_list(r, "visibility entry")?;
                    match items.first().and_then(|x| x.as_sym()) {
                        Some("rule") => {
                            if items.len() < 2 {
                                return Err(err(r.pos(), "(rule <fluent> <guard>...)"));
                            }
                            let pattern = parse_pattern(&items[1])?;
                            let mut guard = Vec::new();
                            for g in &items[2..] {
                                let atom = expect_list(g, "guard atom")?;
                                if atom.len() != 3 || atom[0].as_sym() != Some("=") {
                                    return Err(err(g.pos(), "guards are (= <fluent> <fluent-or-literal>)"));
                                }
                                let lhs = parse_fluent_ref(&atom[1])?;
                                let rhs = parse_expr(&atom[2])?;
                                if matches!(rhs, ExprDecl::Jp { .. }) {
                                    return Err(err(g.pos(), "guards cannot call @jp"));
                                }
                                guard.push((lhs, rhs));
                            }
                            def.visibility.push(VisibilityRule { pattern, guard });
                        }
                        Some("presence") => {
                            if items.len() != 2 {
                                return Err(err(r.pos(), "(presence <fluent>)"));
                            }
                            def.presence = parse_fluent_ref(&items[1])?;
                        }
                        _ => return Err(err(r.pos(), "expected (rule ...) or (presence ...)")),
                    }
                }
            }
            ":action" => def.actions.push(parse_action(parts, section.pos())?),
            other => return Err(err(parts[0].pos(), format!("unknown domain section `{other}`"))),
        }
    }
    Ok(def)
}

/// Parses a problem file.
pub fn parse_problem(src: &str) -> Result<ProblemDef, ParseError> {
    let forms = parse_all(src)?;
    let top = match forms.as_slice() {
        [one] => one,
        [] => return Err(err(Pos { line: 1, col: 1 }, "empty problem file")),
        [_, extra, ..] => return Err(err(extra.pos(), "expected a single (define ...) form")),
    };
    let items = expect_list(top, "(define ...)")?;
    if items.first().and_then(|x| x.as_sym()) != Some("define") {
        return Err(err(top.pos(), "expected (define (problem ...) ...)"));
    }
    let header = expect_list(&items[1], "(problem <name>)")?;
    if header.len() != 2 || header[0].as_sym() != Some("problem") {
        return Err(err(items[1].pos(), "expected (problem <name>)"));
    }
    let mut def = ProblemDef {
        name: expect_sym(&header[1], "problem name")?.to_string(),
        domain: String::new(),
        objects: Vec::new(),
        init: Vec::new(),
        goal: Vec::new(),
        tolerance: None,
    };
    for section in &items[2..] {
        let parts = expect_list(section, "problem section")?;
        let head = expect_sym(&parts[0], "section keyword")?;
        match head {
            ":domain" => {
                def.domain = expect_sym(
                    parts.get(1).ok_or_else(|| err(section.pos(), ":domain needs a name"))?,
                    "domain name",
                )?
                .to_string();
            }
            ":objects" => {
                let typed = parse_typed_names(&parts[1..], section.pos())?;
                for p in typed {
                    def.objects.push((p.name, p.ty));
                }
            }
            ":init" => {
                for a in &parts[1..] {
                    let items = expect_list(a, "init assignment")?;
                    if items.len() != 3 || items[0].as_sym() != Some("=") {
                        return Err(err(a.pos(), "init entries are (= <fluent> <literal>)"));
                    }
                    let fluent = parse_fluent_ref(&items[1])?;
                    let value = match parse_expr(&items[2])? {
                        ExprDecl::Lit(l) => l,
                        _ => return Err(err(items[2].pos(), "init values must be literals")),
                    };
                    def.init.push((fluent, value));
                }
            }
            ":goal" => {
                let goal = parts.get(1).ok_or_else(|| err(section.pos(), ":goal needs a formula"))?;
                def.goal = parse_cond_conjunction(goal)?;
            }
            ":tolerance" => {
                let v = parts.get(1).ok_or_else(|| err(section.pos(), ":tolerance needs a number"))?;
                match v {
                    Sexpr::Num(x, _) => def.tolerance = Some(*x),
                    _ => return Err(err(v.pos(), ":tolerance needs a number")),
                }
            }
            other => return Err(err(parts[0].pos(), format!("unknown problem section `{other}`"))),
        }
    }
    Ok(def)
}

fn fmt_num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{}", x)
    }
}

fn fmt_vector(v: &[Option<f64>]) -> String {
    let mut s = String::from("[");
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        if let Some(x) = x {
            s.push_str(&fmt_num(*x));
        }
    }
    s.push(']');
    s
}

fn fmt_pattern(p: &FluentPattern) -> String {
    let mut s = format!("({}", p.name);
    for a in &p.args {
        match a {
            PatternArg::Var(tp) => {
                let _ = write!(s, " {} - {}", tp.name, tp.ty);
            }
            PatternArg::Const(c) => {
                let _ = write!(s, " {}", c);
            }
        }
    }
    s.push(')');
    s
}

fn fmt_fluent(f: &FluentRef) -> String {
    let mut s = format!("({}", f.name);
    for a in &f.args {
        let _ = write!(s, " {}", a);
    }
    s.push(')');
    s
}

fn fmt_lit(l: &Lit) -> String {
    match l {
        Lit::Num(x) => fmt_num(*x),
        Lit::Sym(s) => s.clone(),
        Lit::None => "none".into(),
    }
}

fn fmt_expr(e: &ExprDecl) -> String {
    match e {
        ExprDecl::Lit(l) => fmt_lit(l),
        ExprDecl::Fluent(f) => fmt_fluent(f),
        ExprDecl::Jp { prefix, fluent } => format!("(@jp (\"{}\") {})", prefix, fmt_fluent(fluent)),
    }
}

fn fmt_formula(f: &FormulaDecl) -> String {
    match f {
        FormulaDecl::Cmp { rel, lhs, rhs } => {
            format!("({} {} {})", rel.symbol(), fmt_expr(lhs), fmt_expr(rhs))
        }
        FormulaDecl::And(parts) => {
            let body: Vec<String> = parts.iter().map(fmt_formula).collect();
            format!("(and {})", body.join(" "))
        }
        FormulaDecl::Or(parts) => {
            let body: Vec<String> = parts.iter().map(fmt_formula).collect();
            format!("(or {})", body.join(" "))
        }
        FormulaDecl::Not(inner) => format!("(not {})", fmt_formula(inner)),
    }
}

fn fmt_cond(c: &CondDecl) -> String {
    match c {
        CondDecl::Cmp { rel, lhs, rhs } => {
            format!("({} {} {})", rel.symbol(), fmt_expr(lhs), fmt_expr(rhs))
        }
        CondDecl::Epi { negated, prefix, inner, expect } => {
            let rel = if *negated { "!=" } else { "=" };
            format!("({} (@epi (\"{}\") {}) {})", rel, prefix, fmt_formula(inner), expect)
        }
    }
}

/// Canonical text form of a domain; parsing it back yields an identical
/// object model.
pub fn print_domain(d: &DomainDef) -> String {
    let mut s = format!("(define (domain {})\n", d.name);
    if !d.types.is_empty() {
        let _ = writeln!(s, "  (:types {})", d.types.join(" "));
    }
    if !d.functions.is_empty() {
        let _ = writeln!(s, "  (:functions");
        for f in &d.functions {
            let mut line = format!("    ({}", f.name);
            for p in &f.params {
                let _ = write!(line, " {} - {}", p.name, p.ty);
            }
            line.push(')');
            let _ = writeln!(s, "{}", line);
        }
        let _ = writeln!(s, "  )");
    }
    if !d.rules.is_empty() {
        let _ = writeln!(s, "  (:rules");
        for r in &d.rules {
            let eta: Vec<Option<f64>> = r.eta.iter().map(|x| Some(*x)).collect();
            let _ = writeln!(
                s,
                "    ({} {} {} {})",
                r.type_name,
                fmt_pattern(&r.pattern),
                fmt_vector(&eta),
                fmt_vector(&r.believed_eta)
            );
        }
        let _ = writeln!(s, "  )");
    }
    let _ = writeln!(s, "  (:visibility");
    let _ = writeln!(s, "    (presence {})", fmt_fluent(&d.presence));
    for v in &d.visibility {
        let mut line = format!("    (rule {}", fmt_pattern(&v.pattern));
        for (lhs, rhs) in &v.guard {
            let _ = write!(line, " (= {} {})", fmt_fluent(lhs), fmt_expr(rhs));
        }
        line.push(')');
        let _ = writeln!(s, "{}", line);
    }
    let _ = writeln!(s, "  )");
    for a in &d.actions {
        let _ = writeln!(s, "  (:action {}", a.name);
        let mut params = String::new();
        for p in &a.params {
            let _ = write!(params, "{} - {} ", p.name, p.ty);
        }
        let _ = writeln!(s, "    :parameters ({})", params.trim_end());
        let pres: Vec<String> = a.precondition.iter().map(fmt_cond).collect();
        let _ = writeln!(s, "    :precondition (and {})", pres.join(" "));
        let _ = writeln!(s, "    :effect (and");
        for e in &a.effects {
            let _ = writeln!(s, "      (assign {} {})", fmt_fluent(&e.fluent), fmt_expr(&e.value));
        }
        let _ = writeln!(s, "    )");
        let _ = writeln!(s, "  )");
    }
    s.push(')');
    s.push('\n');
    s
}

/// Canonical text form of a problem.
pub fn print_problem(p: &ProblemDef) -> String {
    let mut s = format!("(define (problem {})\n", p.name);
    let _ = writeln!(s, "  (:domain {})", p.domain);
    let mut objects = String::new();
    for (name, ty) in &p.objects {
        let _ = write!(objects, "{} - {} ", name, ty);
    }
    let _ = writeln!(s, "  (:objects {})", objects.trim_end());
    let _ = writeln!(s, "  (:init");
    for (fluent, value) in &p.init {
        let _ = writeln!(s, "    (= {} {})", fmt_fluent(fluent), fmt_lit(value));
    }
    let _ = writeln!(s, "  )");
    let goals: Vec<String> = p.goal.iter().map(fmt_cond).collect();
    let _ = writeln!(s, "  (:goal (and {}))", goals.join(" "));
    if let Some(tol) = p.tolerance {
        let _ = writeln!(s, "  (:tolerance {})", tol);
    }
    s.push(')');
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rules_with_believed_coefficients() {
        let src = r#"
        (define (domain g)
          (:types agent secret)
          (:functions (agent_loc ?a - agent) (secret ?s - secret))
          (:rules
            (static (agent_loc ?a - agent) [] [])
            (1st_poly (secret sa) [1.0,2.0] [,])))
        "#;
        let d = parse_domain(src).unwrap();
        assert_eq!(d.rules.len(), 2);
        assert_eq!(d.rules[0].type_name, "static");
        assert!(d.rules[0].eta.is_empty());
        let poly = &d.rules[1];
        assert_eq!(poly.eta, vec![1.0, 2.0]);
        assert_eq!(poly.believed_eta, vec![None, None]);
        assert_eq!(poly.pattern, FluentPattern { name: "secret".into(), args: vec![PatternArg::Const("sa".into())] });
    }

    #[test]
    fn parses_share_others_schema() {
        let src = r#"
        (define (domain g)
          (:types agent secret)
          (:action share_others_secret
            :parameters (?a - agent ?s - secret)
            :precondition (and
              (= (own ?a ?s) 0)
              (= (sharing) 0)
              (!= (@jp ("b[?a]") (shared ?s)) jp.none))
            :effect (and
              (assign (shared_loc ?s) (agent_loc ?a))
              (assign (shared ?s) (@jp ("b[?a]") (shared ?s)))
              (assign (sharing) 1))))
        "#;
        let d = parse_domain(src).unwrap();
        let a = &d.actions[0];
        assert_eq!(a.name, "share_others_secret");
        assert_eq!(a.precondition.len(), 3);
        assert_eq!(a.effects.len(), 3);
        assert!(matches!(
            &a.precondition[2],
            CondDecl::Cmp { rel: Rel::Ne, lhs: ExprDecl::Jp { .. }, rhs: ExprDecl::Lit(Lit::None) }
        ));
        assert!(matches!(&a.effects[1].value, ExprDecl::Jp { prefix, .. } if prefix == "b[?a]"));
    }

    #[test]
    fn unclosed_paren_reports_position() {
        let err = parse_domain("(define (domain g)\n  (:types agent").unwrap_err();
        assert_eq!(err.pos.line, 2);
    }

    #[test]
    fn parses_problem_goal_with_epi() {
        let src = r#"
        (define (problem g0)
          (:domain grapevine)
          (:objects a b c - agent rm_1 rm_2 - room sa - secret)
          (:init (= (secret sa) 3) (= (shared sa) none))
          (:goal (and (= (secret sa) 5) (= (sharing) 0)
                      (= (@epi ("b[b]") (= (shared sa) 4)) epi.true))))
        "#;
        let p = parse_problem(src).unwrap();
        assert_eq!(p.objects.len(), 6);
        assert_eq!(p.init.len(), 2);
        assert_eq!(p.goal.len(), 3);
        assert!(matches!(&p.goal[2], CondDecl::Epi { negated: false, expect, .. } if expect == "epi.true"));
        assert_eq!(p.tolerance, None);
    }

    #[test]
    fn duplicate_effect_assignment_is_rejected() {
        let src = r#"
        (define (domain g)
          (:action twice
            :parameters (?a - agent)
            :precondition (= (sharing) 0)
            :effect (and (assign (sharing) 1) (assign (sharing) 0))))
        "#;
        assert!(parse_domain(src).is_err());
    }

    #[test]
    fn domain_round_trips_through_printer() {
        let src = r#"
        (define (domain g)
          (:types agent room secret)
          (:functions (agent_loc ?a - agent) (shared ?s - secret) (sharing))
          (:rules
            (static (agent_loc ?a - agent) [] [])
            (1st_poly (shared sa) [] [,])
            (sin (secret sa) [8,5,4] [,,]))
          (:visibility
            (rule (agent_loc ?x - agent) (= (agent_loc ?x) (agent_loc ?i)))
            (rule (sharing)))
          (:action move
            :parameters (?a - agent ?r - room)
            :precondition (!= (agent_loc ?a) ?r)
            :effect (assign (agent_loc ?a) ?r)))
        "#;
        let d = parse_domain(src).unwrap();
        let printed = print_domain(&d);
        let reparsed = parse_domain(&printed).unwrap();
        assert_eq!(d, reparsed);
        let printed_again = print_domain(&reparsed);
        assert_eq!(printed, printed_again);
    }

    #[test]
    fn problem_round_trips_through_printer() {
        let src = r#"
        (define (problem g8)
          (:domain g)
          (:objects a b - agent sa - secret)
          (:init (= (secret sa) -6.05) (= (shared sa) none))
          (:goal (and (= (secret sa) 4.23)
                      (= (@epi ("b[b]") (= (shared sa) 4.23)) epi.true)))
          (:tolerance 0.05))
        "#;
        let p = parse_problem(src).unwrap();
        let printed = print_problem(&p);
        let reparsed = parse_problem(&printed).unwrap();
        assert_eq!(p, reparsed);
    }
}
