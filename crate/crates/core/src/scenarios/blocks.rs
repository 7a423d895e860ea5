//! Labeled blocksworld with a two-phase policy over stack-height counts.
//!
//! Equalized states are tuples `⟨b₁,…,bₙ⟩` where `bᵢ` counts the stacks of
//! exactly `i` blocks. Phase 1 (at least two stacks of two or more blocks)
//! puts the top block of a tallest stack on the table; phase 2 puts a
//! table block on the single taller stack, or on another table block when
//! every block is on the table. Besides the labeled moves the description
//! has height-level actions `unstack(H)` and `stack(H)`, which act on the
//! first suitable stack in block order; they are what makes height-count
//! clusters plannable.

use std::fmt::Write as _;

use thiserror::Error;

use super::Bundle;
use crate::equalize::{EId, EqualizedSystem, Profile};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("blocksworld needs between 2 and 6 blocks, got {0}")]
pub struct BlocksError(pub usize);

pub const BLOCK_NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

/// Stack heights, tallest first.
pub type Partition = Vec<usize>;

/// All partitions of `n`, each sorted decreasingly, in reverse
/// lexicographic order.
pub fn partitions(n: usize) -> Vec<Partition> {
    fn go(left: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for k in (1..=max.min(left)).rev() {
            cur.push(k);
            go(left - k, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, &mut Vec::new(), &mut out);
    out
}

/// `⟨b₁,…,bₙ⟩` of a partition.
pub fn counts(n: usize, p: &[usize]) -> Vec<usize> {
    let mut b = vec![0; n];
    for &h in p {
        b[h - 1] += 1;
    }
    b
}

pub fn from_counts(b: &[usize]) -> Partition {
    let mut p = Vec::new();
    for (i, &k) in b.iter().enumerate().rev() {
        p.extend(std::iter::repeat_n(i + 1, k));
    }
    p
}

/// One step of the two-phase policy; `None` once all blocks form one
/// stack.
pub fn policy_step(p: &[usize]) -> Option<Partition> {
    if p.len() == 1 {
        return None;
    }
    let mut q = p.to_vec();
    let multi = q.iter().filter(|&&h| h >= 2).count();
    if multi >= 2 {
        q[0] -= 1;
        q.push(1);
    } else if multi == 1 {
        q[0] += 1;
        let one = q.iter().rposition(|&h| h == 1).expect("a table block");
        q.remove(one);
    } else {
        q.truncate(q.len() - 1);
        q[0] = 2;
    }
    q.sort_unstable_by(|a, b| b.cmp(a));
    Some(q)
}

fn aux_name(i: usize, k: usize) -> String {
    format!("b{i}_{k}")
}

/// Literal conjunction over all auxiliary fluents pinning the profile of
/// `p`.
fn profile_formula(n: usize, p: &[usize]) -> String {
    let b = counts(n, p);
    let mut lits = Vec::new();
    for i in 1..=n {
        for k in 1..=n / i {
            let name = aux_name(i, k);
            lits.push(if b[i - 1] == k { name } else { format!("-{name}") });
        }
    }
    lits.join(" & ")
}

fn rule_name(n: usize, p: &[usize]) -> String {
    let b: Vec<String> = counts(n, p).iter().map(|k| k.to_string()).collect();
    format!("p_{}", b.join(""))
}

fn top(x: &str, h: usize) -> String {
    format!("(clear({x}) & level({x},{h}))")
}

/// `x` is the first block in name order that tops a stack of height `h`.
fn pick_top(blocks: &[&str], x: &str, h: usize) -> String {
    let mut parts = vec![top(x, h)];
    for y in blocks.iter().take_while(|y| **y != x) {
        parts.push(format!("-{}", top(y, h)));
    }
    parts.join(" & ")
}

/// `x` is the first table block, other than the chosen top of an
/// `h`-stack, in name order.
fn pick_single(blocks: &[&str], x: &str, h: usize) -> String {
    let cand = |y: &str| format!("({} & -({}))", top(y, 1), pick_top(blocks, y, h));
    let mut parts = vec![cand(x)];
    for y in blocks.iter().take_while(|y| **y != x) {
        parts.push(format!("-{}", cand(y)));
    }
    parts.join(" & ")
}

fn exactly(k: usize, items: &[String]) -> String {
    fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            subsets(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut sets = Vec::new();
    subsets(items.len(), k, 0, &mut Vec::new(), &mut sets);
    let terms: Vec<String> = sets
        .into_iter()
        .map(|s| {
            let lits: Vec<String> = (0..items.len())
                .map(|i| {
                    if s.contains(&i) {
                        items[i].clone()
                    } else {
                        format!("-{}", items[i])
                    }
                })
                .collect();
            format!("({})", lits.join(" & "))
        })
        .collect();
    terms.join(" | ")
}

pub fn gen_blocksworld(n: usize) -> Result<Bundle, BlocksError> {
    if !(2..=6).contains(&n) {
        return Err(BlocksError(n));
    }
    let blocks: Vec<&str> = BLOCK_NAMES[..n].to_vec();
    let heights: Vec<String> = (1..=n).map(|h| h.to_string()).collect();
    let mut cal = String::new();
    let w = &mut cal;
    writeln!(w, "% blocksworld with {n} labeled blocks").unwrap();
    writeln!(w, "domain block = {{{}}};", blocks.join(", ")).unwrap();
    writeln!(w, "domain height = {{{}}};", heights.join(", ")).unwrap();
    for h in 1..n {
        writeln!(w, "static below({h},{});", h + 1).unwrap();
    }
    writeln!(w, "fluent on(X: block, Y: block) if X != Y;").unwrap();
    writeln!(w, "fluent onTable(block);").unwrap();
    writeln!(w, "fluent clear(block);").unwrap();
    writeln!(w, "fluent level(block, height);").unwrap();
    writeln!(w, "fluent phase2;").unwrap();
    writeln!(w, "action move(X: block, Y: block) if X != Y;").unwrap();
    writeln!(w, "action moveToTable(block);").unwrap();
    writeln!(w, "action unstack(H: height) if H != 1;").unwrap();
    writeln!(w, "action stack(H: height) if H != {n};").unwrap();

    writeln!(w, "\n% a block sits on at most one block and carries at most one").unwrap();
    writeln!(w, "caused -on(X,Z) if on(X,Y) & on(X,Z) & Y != Z.").unwrap();
    writeln!(w, "caused -on(Z,Y) if on(X,Y) & on(Z,Y) & X != Z.").unwrap();
    let none_under = |x: &str| -> String {
        blocks.iter().map(|y| format!("-on({x},{y})")).collect::<Vec<_>>().join(" & ")
    };
    let none_over = |x: &str| -> String {
        blocks.iter().map(|y| format!("-on({y},{x})")).collect::<Vec<_>>().join(" & ")
    };
    writeln!(w, "\n% derived: onTable, clear, level").unwrap();
    writeln!(w, "caused -onTable(X) if on(X,Y).").unwrap();
    writeln!(w, "caused onTable(X) if {}.", none_under("X")).unwrap();
    writeln!(w, "caused -clear(Y) if on(X,Y).").unwrap();
    writeln!(w, "caused clear(X) if {}.", none_over("X")).unwrap();
    writeln!(w, "caused level(X,1) if onTable(X).").unwrap();
    writeln!(w, "caused -level(X,1) if -onTable(X).").unwrap();
    writeln!(w, "caused level(X,K) if on(X,Y) & level(Y,J) & below(J,K).").unwrap();
    for k in 2..=n {
        let parts: Vec<String> = blocks
            .iter()
            .map(|y| format!("-(on(X,{y}) & level({y},{}))", k - 1))
            .collect();
        writeln!(w, "caused -level(X,{k}) if {}.", parts.join(" & ")).unwrap();
    }
    let no_level: Vec<String> = (1..=n).map(|k| format!("-level(X,{k})")).collect();
    writeln!(w, "% every stack rests on the table").unwrap();
    writeln!(w, "caused level(X,1) if {}.", no_level.join(" & ")).unwrap();
    writeln!(w, "\n% phase 2: at most one stack with two or more blocks").unwrap();
    writeln!(w, "caused -phase2 if level(X,2) & level(Y,2) & X != Y.").unwrap();
    let mut pairs = Vec::new();
    for (i, x) in blocks.iter().enumerate() {
        for y in &blocks[i + 1..] {
            pairs.push(format!("-(level({x},2) & level({y},2))"));
        }
    }
    writeln!(w, "caused phase2 if {}.", pairs.join(" & ")).unwrap();

    writeln!(w, "\n% inertia").unwrap();
    writeln!(w, "caused on(X,Y) if on(X,Y) after on(X,Y).").unwrap();
    writeln!(w, "caused -on(X,Y) if -on(X,Y) after -on(X,Y).").unwrap();

    writeln!(w, "\n% labeled moves; contradictory effects make an action not executable").unwrap();
    writeln!(w, "caused on(X,Y) after move(X,Y).").unwrap();
    writeln!(w, "caused -on(X,Z) after move(X,Y) & on(X,Z).").unwrap();
    writeln!(w, "caused phase2 after move(X,Y) & -(clear(X) & clear(Y)).").unwrap();
    writeln!(w, "caused -phase2 after move(X,Y) & -(clear(X) & clear(Y)).").unwrap();
    writeln!(w, "caused -on(X,Y) after moveToTable(X) & on(X,Y).").unwrap();
    writeln!(w, "caused phase2 after moveToTable(X) & -(clear(X) & -onTable(X)).").unwrap();
    writeln!(w, "caused -phase2 after moveToTable(X) & -(clear(X) & -onTable(X)).").unwrap();

    writeln!(w, "\n% height-level moves").unwrap();
    for h in 2..=n {
        let mut any = Vec::new();
        for x in &blocks {
            let pick = pick_top(&blocks, x, h);
            any.push(format!("({pick})"));
            for y in &blocks {
                if x != y {
                    writeln!(w, "caused -on({x},{y}) after unstack({h}) & on({x},{y}) & {pick}.")
                        .unwrap();
                }
            }
        }
        let none = format!("-({})", any.join(" | "));
        writeln!(w, "caused phase2 after unstack({h}) & {none}.").unwrap();
        writeln!(w, "caused -phase2 after unstack({h}) & {none}.").unwrap();
    }
    for h in 1..n {
        let mut any_top = Vec::new();
        let mut any_single = Vec::new();
        for x in &blocks {
            any_top.push(format!("({})", pick_top(&blocks, x, h)));
            any_single.push(format!("({})", pick_single(&blocks, x, h)));
            for y in &blocks {
                if x != y {
                    writeln!(
                        w,
                        "caused on({x},{y}) after stack({h}) & {} & {}.",
                        pick_top(&blocks, y, h),
                        pick_single(&blocks, x, h)
                    )
                    .unwrap();
                }
            }
        }
        let none = format!("-({}) | -({})", any_top.join(" | "), any_single.join(" | "));
        writeln!(w, "caused phase2 after stack({h}) & ({none}).").unwrap();
        writeln!(w, "caused -phase2 after stack({h}) & ({none}).").unwrap();
    }
    let not_tower: Vec<String> = blocks.iter().map(|x| format!("-level({x},{n})")).collect();
    writeln!(w, "\ninitially {}.", not_tower.join(" & ")).unwrap();

    let mut scn = String::new();
    let w = &mut scn;
    writeln!(w, "classify type2 {{").unwrap();
    for i in 1..=n {
        let tops: Vec<String> = blocks.iter().map(|x| top(x, i)).collect();
        for k in 1..=n / i {
            writeln!(w, "  aux {} := {};", aux_name(i, k), exactly(k, &tops)).unwrap();
        }
    }
    writeln!(w, "}}").unwrap();
    let all = partitions(n);
    for p in &all {
        if p.len() > 1 {
            writeln!(w, "rule {}: {}.", rule_name(n, p), profile_formula(n, p)).unwrap();
        }
    }
    for p in &all {
        if let Some(q) = policy_step(p) {
            writeln!(w, "map {{{}}} -> {{ {} }}.", rule_name(n, p), profile_formula(n, &q)).unwrap();
        }
    }
    writeln!(w, "goal {}.", aux_name(n, 1)).unwrap();
    writeln!(w, "planbound 1.").unwrap();
    Ok(Bundle {
        cal,
        scn,
        layout: None,
    })
}

/// Reads `⟨b₁,…,bₙ⟩` back from an equalized state of a generated bundle.
pub fn tuple_of(esys: &EqualizedSystem, e: EId) -> Option<Vec<usize>> {
    let Profile::Type2(vals) = &esys.estate(e).profile else {
        return None;
    };
    let names = esys.classification().aux_names();
    let n = names
        .iter()
        .filter_map(|s| s.strip_prefix('b')?.split('_').next()?.parse::<usize>().ok())
        .max()?;
    let mut b = vec![0; n];
    for (name, &v) in names.iter().zip(vals) {
        if v {
            let (i, k) = name.strip_prefix('b')?.split_once('_')?;
            b[i.parse::<usize>().ok()? - 1] = k.parse().ok()?;
        }
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_counts() {
        let sizes: Vec<usize> = (1..=6).map(|n| partitions(n).len()).collect();
        assert_eq!(sizes, vec![1, 2, 3, 5, 7, 11]);
        assert_eq!(counts(4, &[3, 1]), vec![1, 0, 1, 0]);
        assert_eq!(from_counts(&[1, 0, 1, 0]), vec![3, 1]);
    }

    #[test]
    fn policy_steps_for_four() {
        assert_eq!(policy_step(&[2, 2]), Some(vec![2, 1, 1]));
        assert_eq!(policy_step(&[1, 1, 1, 1]), Some(vec![2, 1, 1]));
        assert_eq!(policy_step(&[2, 1, 1]), Some(vec![3, 1]));
        assert_eq!(policy_step(&[3, 1]), Some(vec![4]));
        assert_eq!(policy_step(&[4]), None);
    }

    #[test]
    fn range_is_checked() {
        assert!(gen_blocksworld(1).is_err());
        assert!(gen_blocksworld(7).is_err());
    }
}
