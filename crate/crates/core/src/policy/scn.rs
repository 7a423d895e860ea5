//! `.scn` scenario files: a classification block followed by the policy.
//!
//! ```text
//! classify type2 {
//!   aux seesPerson := robotAt(1,1) | robotAt(1,2);
//! }
//! rule close: seesPerson.
//! map {close} -> { personFound }.
//! map otherwise -> { robotAt(3,1) | robotAt(1,3) }.
//! goal personFound.
//! planbound 4.
//! ```
//!
//! `classify type1 retain { robotAt(_,_), door };` keeps the listed
//! fluents, `classify custom { 0110 -> left; ... }` names clusters
//! explicitly by state bitstring. Without a classify block every fluent is
//! retained. A rule whose target is a fluent only the planner can make
//! true (`map {doorUnknown} -> { doorIsChecked }.`) is how sensing
//! actions are modelled.

use std::collections::HashMap;
use std::fmt;

use crate::equalize::{Classification, FluentPattern};
use crate::formula::Formula;
use crate::lang::ast::{SAtom, SFormula, Term};
use crate::lang::ground::ground_name;
use crate::lang::lexer::Tok;
use crate::lang::parser::{ParseErrorKind, Parser};
use crate::lang::ParseError;
use crate::ts::State;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySpec {
    pub rules: Vec<(String, Formula<String>)>,
    /// Keys are sorted placeholder names.
    pub map: Vec<(Vec<String>, Vec<Formula<String>>)>,
    pub otherwise: Option<Vec<Formula<String>>>,
    pub goal: Formula<String>,
    pub plan_bound: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub classification: Classification,
    pub policy: PolicySpec,
}

fn ground_formula(f: SFormula) -> Result<Formula<String>, ParseError> {
    f.try_map_atoms(&mut |a| {
        let constant = |t: &Term, pos| match t {
            Term::Const(c) => Ok(c.clone()),
            Term::Var(v) => Err(ParseError {
                kind: ParseErrorKind::Scope,
                message: format!("variable `{v}` in a scenario formula"),
                pos,
            }),
        };
        match a {
            SAtom::Pred(atom) => {
                let args = atom
                    .args
                    .iter()
                    .map(|t| constant(t, atom.pos))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Formula::Atom(ground_name(&atom.name, &args)))
            }
            SAtom::Eq(x, y) | SAtom::Neq(x, y) => {
                let pos = crate::lang::Pos { line: 0, col: 0 };
                let same = constant(x, pos)? == constant(y, pos)?;
                let want = matches!(a, SAtom::Eq(..));
                Ok(if same == want {
                    Formula::True
                } else {
                    Formula::False
                })
            }
        }
    })
}

impl Parser {
    fn pattern(&mut self) -> Result<FluentPattern, ParseError> {
        let mut text = self.ident()?;
        if self.eat(&Tok::LParen) {
            let mut args = Vec::new();
            loop {
                args.push(self.ident()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RParen)?;
            text = format!("{text}({})", args.join(","));
        }
        Ok(FluentPattern::parse(&text))
    }

    fn scn_formula(&mut self) -> Result<Formula<String>, ParseError> {
        let f = self.formula()?;
        ground_formula(f)
    }

    fn classification(&mut self) -> Result<Classification, ParseError> {
        if self.eat_keyword("type1") {
            if !self.eat_keyword("retain") {
                return self.err("expected `retain`");
            }
            self.expect(&Tok::LBrace)?;
            let mut retain = Vec::new();
            if !self.eat(&Tok::RBrace) {
                loop {
                    retain.push(self.pattern()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::RBrace)?;
            }
            self.eat(&Tok::Semi);
            Ok(Classification::Type1 { retain })
        } else if self.eat_keyword("type2") {
            self.expect(&Tok::LBrace)?;
            let mut aux = Vec::new();
            while !self.eat(&Tok::RBrace) {
                if !self.eat_keyword("aux") {
                    return self.err(format!("expected `aux`, found {}", self.peek()));
                }
                let name = self.ident()?;
                self.expect(&Tok::Assign)?;
                aux.push((name, self.scn_formula()?));
                self.expect(&Tok::Semi)?;
            }
            self.eat(&Tok::Semi);
            Ok(Classification::Type2 { aux })
        } else if self.eat_keyword("custom") {
            self.expect(&Tok::LBrace)?;
            let mut table = HashMap::new();
            while !self.eat(&Tok::RBrace) {
                let pos = self.pos();
                let bits = self.ident()?;
                let state = State::from_bitstring(&bits).ok_or_else(|| {
                    ParseError::syntax(pos, format!("`{bits}` is not a state bitstring"))
                })?;
                self.expect(&Tok::Arrow)?;
                let name = self.ident()?;
                self.expect(&Tok::Semi)?;
                if table.insert(state, name).is_some() {
                    return Err(ParseError::syntax(pos, format!("state {bits} listed twice")));
                }
            }
            self.eat(&Tok::Semi);
            Ok(Classification::Custom { table })
        } else {
            self.err(format!(
                "expected `type1`, `type2` or `custom`, found {}",
                self.peek()
            ))
        }
    }

    fn targets(&mut self) -> Result<Vec<Formula<String>>, ParseError> {
        self.expect(&Tok::LBrace)?;
        // `|` separates targets here; a disjunctive target needs parentheses
        let mut out = vec![ground_formula(self.conjunction()?)?];
        while self.eat(&Tok::Bar) {
            out.push(ground_formula(self.conjunction()?)?);
        }
        self.expect(&Tok::RBrace)?;
        Ok(out)
    }
}

/// Parses a `.scn` document.
pub fn parse_scenario(src: &str) -> Result<ScenarioSpec, ParseError> {
    let mut p = Parser::new(src)?;
    let mut classification = None;
    let mut rules: Vec<(String, Formula<String>)> = Vec::new();
    let mut map: Vec<(Vec<String>, Vec<Formula<String>>)> = Vec::new();
    let mut otherwise = None;
    let mut goal = None;
    let mut plan_bound = None;
    while !p.at_eof() {
        let pos = p.pos();
        if p.eat_keyword("classify") {
            if classification.is_some() {
                return Err(ParseError::syntax(pos, "more than one classify block"));
            }
            classification = Some(p.classification()?);
        } else if p.eat_keyword("rule") {
            let name = p.ident()?;
            p.expect(&Tok::Colon)?;
            let f = p.scn_formula()?;
            p.expect(&Tok::Dot)?;
            if rules.iter().any(|(n, _)| *n == name) {
                return Err(ParseError::syntax(pos, format!("rule `{name}` defined twice")));
            }
            rules.push((name, f));
        } else if p.eat_keyword("map") {
            if p.eat_keyword("otherwise") {
                p.expect(&Tok::Arrow)?;
                let t = p.targets()?;
                p.expect(&Tok::Dot)?;
                if otherwise.replace(t).is_some() {
                    return Err(ParseError::syntax(pos, "`map otherwise` given twice"));
                }
                continue;
            }
            p.expect(&Tok::LBrace)?;
            let mut key = Vec::new();
            if !p.eat(&Tok::RBrace) {
                loop {
                    key.push(p.ident()?);
                    if !p.eat(&Tok::Comma) {
                        break;
                    }
                }
                p.expect(&Tok::RBrace)?;
            }
            key.sort();
            key.dedup();
            p.expect(&Tok::Arrow)?;
            let t = p.targets()?;
            p.expect(&Tok::Dot)?;
            if map.iter().any(|(k, _)| *k == key) {
                return Err(ParseError::syntax(pos, "placeholder set mapped twice"));
            }
            map.push((key, t));
        } else if p.eat_keyword("goal") {
            let f = p.scn_formula()?;
            p.expect(&Tok::Dot)?;
            if goal.replace(f).is_some() {
                return Err(ParseError::syntax(pos, "goal given twice"));
            }
        } else if p.eat_keyword("planbound") {
            plan_bound = Some(p.number()?);
            p.expect(&Tok::Dot)?;
        } else {
            return p.err(format!("unexpected {}", p.peek()));
        }
    }
    for (key, _) in &map {
        for k in key {
            if !rules.iter().any(|(n, _)| n == k) {
                return Err(ParseError {
                    kind: ParseErrorKind::Scope,
                    message: format!("`{k}` in a map key is not a rule"),
                    pos: p.pos(),
                });
            }
        }
    }
    let goal = goal.ok_or_else(|| ParseError::syntax(p.pos(), "missing `goal`"))?;
    Ok(ScenarioSpec {
        classification: classification.unwrap_or_else(Classification::identity),
        policy: PolicySpec {
            rules,
            map,
            otherwise,
            goal,
            plan_bound,
        },
    })
}

fn write_targets(f: &mut fmt::Formatter<'_>, ts: &[Formula<String>]) -> fmt::Result {
    let parts: Vec<String> = ts
        .iter()
        .map(|t| match t {
            Formula::Or(_) | Formula::Implies(..) => format!("({t})"),
            _ => t.to_string(),
        })
        .collect();
    write!(f, "{{ {} }}", parts.join(" | "))
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.classification {
            Classification::Type1 { retain } => {
                if !(retain.len() == 1 && retain[0].name.is_empty()) {
                    let parts: Vec<String> = retain.iter().map(|p| p.to_string()).collect();
                    writeln!(f, "classify type1 retain {{ {} }};", parts.join(", "))?;
                }
            }
            Classification::Type2 { aux } => {
                writeln!(f, "classify type2 {{")?;
                for (name, def) in aux {
                    writeln!(f, "  aux {name} := {def};")?;
                }
                writeln!(f, "}}")?;
            }
            Classification::Custom { table } => {
                writeln!(f, "classify custom {{")?;
                let mut rows: Vec<(String, &String)> =
                    table.iter().map(|(s, n)| (s.bitstring(), n)).collect();
                rows.sort();
                for (bits, name) in rows {
                    writeln!(f, "  {bits} -> {name};")?;
                }
                writeln!(f, "}}")?;
            }
        }
        let p = &self.policy;
        for (name, rule) in &p.rules {
            writeln!(f, "rule {name}: {rule}.")?;
        }
        for (key, targets) in &p.map {
            write!(f, "map {{{}}} -> ", key.join(", "))?;
            write_targets(f, targets)?;
            writeln!(f, ".")?;
        }
        if let Some(t) = &p.otherwise {
            write!(f, "map otherwise -> ")?;
            write_targets(f, t)?;
            writeln!(f, ".")?;
        }
        writeln!(f, "goal {}.", p.goal)?;
        if let Some(k) = p.plan_bound {
            writeln!(f, "planbound {k}.")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = "
        classify type2 {
          aux near := robotAt(1,2) | robotAt(2,1);
          aux home := robotAt(1,1);
        }
        rule atHome: home.
        rule close: near & -home.
        map {atHome} -> { robotAt(1,2) | robotAt(2,1) }.
        map {} -> { home }.
        map otherwise -> { found }.
        goal found.
        planbound 3.
    ";

    #[test]
    fn parses_and_round_trips() {
        let spec = parse_scenario(SRC).unwrap();
        assert_eq!(spec.policy.rules.len(), 2);
        assert_eq!(spec.policy.map[1].0, Vec::<String>::new());
        assert_eq!(spec.policy.plan_bound, Some(3));
        let again = parse_scenario(&spec.to_string()).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn type1_patterns() {
        let spec = parse_scenario("classify type1 retain { robotAt(_,_), door }; goal door.").unwrap();
        match &spec.classification {
            Classification::Type1 { retain } => {
                assert!(retain[0].matches("robotAt(2,3)"));
                assert!(retain[1].matches("door"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let again = parse_scenario(&spec.to_string()).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn rejects_unknown_placeholder_and_variables() {
        let e = parse_scenario("map {nope} -> { a }. goal a.").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Scope);
        let e = parse_scenario("goal robotAt(X,1).").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Scope);
        assert!(parse_scenario("rule r: a.").is_err());
    }

    #[test]
    fn bars_separate_targets() {
        let spec = parse_scenario("rule r: a. map {r} -> { a | (b | c) & d }. goal a.").unwrap();
        assert_eq!(spec.policy.map[0].1.len(), 2);
        let spec = parse_scenario("rule r: a. map {r} -> { (a | b) }. goal a.").unwrap();
        assert_eq!(spec.policy.map[0].1.len(), 1);
        assert_eq!(parse_scenario(&spec.to_string()).unwrap(), spec);
    }

    #[test]
    fn custom_table() {
        let spec = parse_scenario("classify custom { 01 -> left; 10 -> right; } goal a.").unwrap();
        let again = parse_scenario(&spec.to_string()).unwrap();
        assert_eq!(spec, again);
    }
}
