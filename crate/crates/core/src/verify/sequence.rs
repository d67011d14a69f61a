use std::collections::BTreeSet;

use num_integer::Integer;
use serde::Serialize;

use crate::error::{Error, Result};

/// How an entry of a witness sequence was obtained; indices refer to earlier entries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Rule {
    InSet,
    Sum { left: usize, right: usize },
    SumMinusN { left: usize, right: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Step {
    pub value: usize,
    #[serde(flatten)]
    pub rule: Rule,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SequenceOutcome {
    pub n: usize,
    pub set: Vec<usize>,
    pub closure: Vec<usize>,
    pub reachable: bool,
    /// A witness sequence ending at 1, when reachable.
    pub path: Vec<Step>,
    /// `gcd(S ∪ {n})`, when 1 is unreachable.
    pub divisor: Option<usize>,
}

#[derive(Clone, Copy)]
enum Origin {
    InSet,
    Sum(usize, usize),
    SumMinusN(usize, usize),
}

/// Closure of `S ⊆ [1, n-1]` under `(a, b) ↦ a + b` (if `<= n - 1`) and
/// `(a, b) ↦ a + b - n` (if `>= 1`), with a witness path to 1 when one exists.
pub fn sequence_reduce(n: usize, set: &[usize]) -> Result<SequenceOutcome> {
    if n < 2 {
        return Err(Error::Range(format!("n must be at least 2, got {n}")));
    }
    if let Some(&bad) = set.iter().find(|&&s| s == 0 || s >= n) {
        return Err(Error::Range(format!("{bad} not in [1, {}]", n - 1)));
    }
    let set: Vec<usize> = set.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut origin: Vec<Option<Origin>> = vec![None; n];
    let mut reached: Vec<usize> = Vec::new();
    let mut queue: Vec<usize> = Vec::new();
    for &s in &set {
        origin[s] = Some(Origin::InSet);
        queue.push(s);
    }
    let mut head = 0;
    while head < queue.len() && origin[1].is_none() {
        let x = queue[head];
        head += 1;
        reached.push(x);
        for i in 0..reached.len() {
            let y = reached[i];
            let s = x + y;
            let (v, o) = if s < n {
                (s, Origin::Sum(y, x))
            } else if s > n {
                (s - n, Origin::SumMinusN(y, x))
            } else {
                continue;
            };
            if origin[v].is_none() {
                origin[v] = Some(o);
                queue.push(v);
            }
        }
    }
    let reachable = origin[1].is_some();
    let mut path = Vec::new();
    if reachable {
        let mut index: Vec<Option<usize>> = vec![None; n];
        let mut stack = vec![1usize];
        while let Some(&v) = stack.last() {
            if index[v].is_some() {
                stack.pop();
                continue;
            }
            let rule = match origin[v].expect("reached") {
                Origin::InSet => Some(Rule::InSet),
                Origin::Sum(a, b) | Origin::SumMinusN(a, b) => match (index[a], index[b]) {
                    (Some(left), Some(right)) => Some(match origin[v] {
                        Some(Origin::Sum(..)) => Rule::Sum { left, right },
                        _ => Rule::SumMinusN { left, right },
                    }),
                    (ia, ib) => {
                        if ia.is_none() {
                            stack.push(a);
                        }
                        if ib.is_none() {
                            stack.push(b);
                        }
                        None
                    }
                },
            };
            if let Some(rule) = rule {
                index[v] = Some(path.len());
                path.push(Step { value: v, rule });
                stack.pop();
            }
        }
    }
    let closure: Vec<usize> = if reachable {
        // everything is reachable once 1 is: k = (k - 1) + 1
        (1..n).collect()
    } else {
        (1..n).filter(|&v| origin[v].is_some()).collect()
    };
    let divisor = (!reachable).then(|| set.iter().fold(n, |g, &s| g.gcd(&s)));
    Ok(SequenceOutcome {
        n,
        set,
        closure,
        reachable,
        path,
        divisor,
    })
}
