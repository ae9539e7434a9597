// SPDX-License-Identifier: Apache-2.0

//! Oracles shared by the property and acceptance targets. Both are written
//! against raw integers and the policy tree only, so they do not reuse the
//! library's evaluator or its field arithmetic.

#![allow(dead_code)]

use confetty::abe::{setup_with_secrets, AttributePattern, AuthorityConfig, LsssMatrix};
use confetty::policy::{AttributeSet, PolicyAst};

pub const P: u128 = (1 << 61) - 1;

pub const UNIVERSE: [&str; 8] = ["A0", "A1", "A2", "A3", "A4", "A5", "A6", "A7"];

/// Brute-force truth value of a monotone formula.
pub fn truth(p: &PolicyAst, set: &[&str]) -> bool {
    match p {
        PolicyAst::Attr(a) => set.contains(&a.as_str()),
        PolicyAst::And(l, r) => truth(l, set) && truth(r, set),
        PolicyAst::Or(l, r) => truth(l, set) || truth(r, set),
    }
}

fn inv(a: u128) -> u128 {
    // Fermat: a^(p-2).
    let (mut base, mut e, mut acc) = (a % P, P - 2, 1u128);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % P;
        }
        base = base * base % P;
        e >>= 1;
    }
    acc
}

fn rank(mut m: Vec<Vec<u128>>) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(pivot) = (r..m.len()).find(|&i| m[i][c] != 0) else { continue };
        m.swap(r, pivot);
        let k = inv(m[r][c]);
        for x in m[r].iter_mut() {
            *x = *x * k % P;
        }
        for i in 0..m.len() {
            if i != r && m[i][c] != 0 {
                let f = m[i][c];
                for j in 0..cols {
                    m[i][j] = (m[i][j] + P - f * m[r][j] % P) % P;
                }
            }
        }
        r += 1;
    }
    r
}

/// True iff the rows whose label is in `set` span (1, 0, …, 0): appending the
/// target to those rows leaves the rank unchanged.
pub fn spans_target(m: &LsssMatrix, set: &[&str]) -> bool {
    let rows: Vec<Vec<u128>> = m
        .rows
        .iter()
        .zip(&m.labels)
        .filter(|(_, l)| set.contains(&l.as_str()))
        .map(|(r, _)| r.iter().map(|x| x.value() as u128).collect())
        .collect();
    let mut target = vec![0u128; m.width];
    target[0] = 1;
    let base = rank(rows.clone());
    let mut with = rows;
    with.push(target);
    rank(with) == base
}

/// Subsets of `attrs` by bitmask.
pub fn subset<'a>(attrs: &[&'a str], mask: u32) -> Vec<&'a str> {
    attrs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, a)| *a).collect()
}

/// Three authorities splitting the test universe round-robin.
pub fn authorities() -> Vec<AuthorityConfig> {
    let partition: Vec<(AttributePattern, usize)> =
        UNIVERSE.iter().enumerate().map(|(i, a)| (AttributePattern::Exact(a.to_string()), i % 3)).collect();
    setup_with_secrets(vec![[1; 32], [2; 32], [3; 32]], &partition).unwrap()
}

pub fn set(attrs: &[&str]) -> AttributeSet {
    AttributeSet::new(attrs.iter().copied()).unwrap()
}
