// SPDX-License-Identifier: Apache-2.0

//! Monotone-formula to LSSS compilation and share reconstruction.

use super::field::Fp;
use crate::policy::PolicyAst;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LsssMatrix {
    pub rows: Vec<Vec<Fp>>,
    pub labels: Vec<String>,
    pub width: usize,
}

impl LsssMatrix {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// λ_i = row_i · v.
    pub fn shares(&self, v: &[Fp]) -> Vec<Fp> {
        assert_eq!(v.len(), self.width);
        self.rows.iter().map(|row| row.iter().zip(v).map(|(a, b)| *a * *b).sum()).collect()
    }

    /// Coefficients `c` (one per selected row) with Σ c_i·row_i = (1, 0, …, 0),
    /// or `None` when the selected rows do not span the target.
    pub fn reconstruction(&self, selected: &[usize]) -> Option<Vec<Fp>> {
        let rows: Vec<&[Fp]> = selected.iter().map(|&i| self.rows[i].as_slice()).collect();
        solve_target(&rows, self.width)
    }
}

/// Lewko–Waters labeling: the root carries (1); OR hands its vector to both
/// children; AND appends a column, giving the left child v‖1 and the right
/// child 0…0‖−1.
pub fn compile_lsss(policy: &PolicyAst) -> LsssMatrix {
    fn walk(node: &PolicyAst, v: Vec<Fp>, width: &mut usize, rows: &mut Vec<Vec<Fp>>, labels: &mut Vec<String>) {
        match node {
            PolicyAst::Attr(a) => {
                rows.push(v);
                labels.push(a.clone());
            }
            PolicyAst::Or(l, r) => {
                walk(l, v.clone(), width, rows, labels);
                walk(r, v, width, rows, labels);
            }
            PolicyAst::And(l, r) => {
                let mut left = v;
                left.resize(*width, Fp::ZERO);
                left.push(Fp::ONE);
                let mut right = vec![Fp::ZERO; *width];
                right.push(-Fp::ONE);
                *width += 1;
                walk(l, left, width, rows, labels);
                walk(r, right, width, rows, labels);
            }
        }
    }
    let mut width = 1;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    walk(policy, vec![Fp::ONE], &mut width, &mut rows, &mut labels);
    for row in &mut rows {
        row.resize(width, Fp::ZERO);
    }
    LsssMatrix { rows, labels, width }
}

/// Solves Σ c_i·rows[i] = e1 by Gaussian elimination on the transposed
/// system; free variables are set to zero.
fn solve_target(rows: &[&[Fp]], width: usize) -> Option<Vec<Fp>> {
    let n = rows.len();
    // width equations, n unknowns, augmented with the target column.
    let mut m: Vec<Vec<Fp>> = (0..width)
        .map(|j| {
            let mut eq: Vec<Fp> = rows.iter().map(|r| r[j]).collect();
            eq.push(if j == 0 { Fp::ONE } else { Fp::ZERO });
            eq
        })
        .collect();

    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..width).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][col].inverse().expect("pivot is nonzero");
        for x in &mut m[r] {
            *x *= inv;
        }
        for i in 0..width {
            if i != r && !m[i][col].is_zero() {
                let f = m[i][col];
                for k in col..=n {
                    let t = m[r][k];
                    m[i][k] -= f * t;
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == width {
            break;
        }
    }
    if m[r..].iter().any(|eq| !eq[n].is_zero()) {
        return None;
    }
    let mut c = vec![Fp::ZERO; n];
    for (i, &col) in pivots.iter().enumerate() {
        c[col] = m[i][n];
    }
    Some(c)
}
