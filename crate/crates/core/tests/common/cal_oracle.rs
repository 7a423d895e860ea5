//! Random literal-head descriptions and a brute-force reading of the
//! transition definition: enumerate every triple and every interpretation.

use std::collections::BTreeSet;

use eqts::lang::{self, BuildOptions};
use eqts::ts::{State, TransitionSystem};
use proptest::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct Lit {
    pub var: usize,
    pub positive: bool,
}

#[derive(Debug, Clone)]
pub enum AfterLit {
    Fluent(Lit),
    Action(Lit),
}

#[derive(Debug, Clone)]
pub struct Desc {
    pub fluents: usize,
    pub actions: usize,
    pub conc: (usize, usize),
    pub statics: Vec<(Lit, Vec<Lit>)>,
    pub dynamics: Vec<(Lit, Vec<Lit>, Vec<AfterLit>)>,
}

fn lit_text(prefix: char, l: Lit) -> String {
    format!("{}{}{}", if l.positive { "" } else { "-" }, prefix, l.var)
}

fn conj(parts: Vec<String>) -> String {
    if parts.is_empty() {
        "true".into()
    } else {
        parts.join(" & ")
    }
}

impl Desc {
    pub fn source(&self) -> String {
        let mut s = String::new();
        for i in 0..self.fluents {
            s += &format!("fluent f{i};\n");
        }
        for i in 0..self.actions {
            s += &format!("action a{i};\n");
        }
        s += &format!("concurrency {}..{}.\n", self.conc.0, self.conc.1);
        for (h, body) in &self.statics {
            let b = conj(body.iter().map(|&l| lit_text('f', l)).collect());
            s += &format!("caused {} if {b}.\n", lit_text('f', *h));
        }
        for (h, cond, after) in &self.dynamics {
            let c = conj(cond.iter().map(|&l| lit_text('f', l)).collect());
            let a = conj(
                after
                    .iter()
                    .map(|x| match *x {
                        AfterLit::Fluent(l) => lit_text('f', l),
                        AfterLit::Action(l) => lit_text('a', l),
                    })
                    .collect(),
            );
            s += &format!("caused {} if {c} after {a}.\n", lit_text('f', *h));
        }
        s
    }
}

fn holds(l: Lit, bits: u32) -> bool {
    (bits >> l.var & 1 == 1) == l.positive
}

fn all(body: &[Lit], bits: u32) -> bool {
    body.iter().all(|&l| holds(l, bits))
}

pub type Triple = (String, Vec<String>, String);

pub fn bitstring(n: usize, bits: u32) -> String {
    (0..n).map(|i| if bits >> i & 1 == 1 { '1' } else { '0' }).collect()
}

/// Every triple `(s, A, s')` such that `s'` is the unique interpretation
/// satisfying the heads of the laws that fire.
pub fn oracle(d: &Desc) -> (BTreeSet<String>, BTreeSet<Triple>) {
    let n = d.fluents;
    let space = 1u32 << n;
    let is_state = |s: u32| d.statics.iter().all(|(h, b)| !all(b, s) || holds(*h, s));
    let states: Vec<u32> = (0..space).filter(|&s| is_state(s)).collect();
    let mut labels: Vec<u32> = (0..1u32 << d.actions)
        .filter(|a| (d.conc.0..=d.conc.1).contains(&(a.count_ones() as usize)))
        .collect();
    labels.sort();
    let mut triples = BTreeSet::new();
    for &s in &states {
        for &act in &labels {
            for t in 0..space {
                let mut heads: Vec<Lit> = Vec::new();
                for (h, b) in &d.statics {
                    if all(b, t) {
                        heads.push(*h);
                    }
                }
                for (h, cond, after) in &d.dynamics {
                    let fired = after.iter().all(|x| match *x {
                        AfterLit::Fluent(l) => holds(l, s),
                        AfterLit::Action(l) => holds(l, act),
                    });
                    if fired && all(cond, t) {
                        heads.push(*h);
                    }
                }
                let models: Vec<u32> = (0..space).filter(|&i| all(&heads, i)).take(2).collect();
                if models == [t] {
                    let names = (0..d.actions)
                        .filter(|i| act >> i & 1 == 1)
                        .map(|i| format!("a{i}"))
                        .collect();
                    triples.insert((bitstring(n, s), names, bitstring(n, t)));
                }
            }
        }
    }
    (states.iter().map(|&s| bitstring(n, s)).collect(), triples)
}

fn lit(vars: usize) -> impl Strategy<Value = Lit> {
    (0..vars, any::<bool>()).prop_map(|(var, positive)| Lit { var, positive })
}

pub fn desc() -> impl Strategy<Value = Desc> {
    (1usize..=8, 1usize..=3).prop_flat_map(|(n, m)| {
        let after = prop_oneof![
            lit(n).prop_map(AfterLit::Fluent),
            lit(m).prop_map(AfterLit::Action),
        ];
        (
            Just(n),
            Just(m),
            (0usize..=1, 1usize..=m),
            prop::collection::vec((lit(n), prop::collection::vec(lit(n), 0..=2)), 0..=4),
            prop::collection::vec(
                (
                    lit(n),
                    prop::collection::vec(lit(n), 0..=1),
                    prop::collection::vec(after, 0..=2),
                ),
                0..=8,
            ),
            prop::collection::vec(prop::bool::weighted(0.85), n),
        )
            .prop_map(|(n, m, conc, statics, mut dynamics, inertial)| {
                for (var, on) in inertial.into_iter().enumerate() {
                    if on {
                        for positive in [true, false] {
                            let l = Lit { var, positive };
                            dynamics.push((l, vec![l], vec![AfterLit::Fluent(l)]));
                        }
                    }
                }
                Desc {
                    fluents: n,
                    actions: m,
                    conc,
                    statics,
                    dynamics,
                }
            })
    })
}

pub fn build(d: &Desc) -> TransitionSystem {
    let src = d.source();
    let ad = lang::parse(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
    let gd = lang::ground(&ad).unwrap();
    lang::build_transition_system(&gd, &BuildOptions::default()).unwrap()
}


/// States and triples of the built system, in the oracle's notation.
pub fn observed(ts: &TransitionSystem) -> (BTreeSet<String>, BTreeSet<Triple>) {
    let states = ts.states().iter().map(State::bitstring).collect();
    let triples = ts
        .to_document()
        .transitions
        .into_iter()
        .map(|t| (ts.states()[t.from].bitstring(), t.label, ts.states()[t.to].bitstring()))
        .collect();
    (states, triples)
}
