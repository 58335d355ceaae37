//! Dense primal simplex for `max c·x` subject to `A x ≤ b`, `x ≥ 0`, `b ≥ 0`.
//!
//! The origin is always feasible, so no phase one is needed. The tableau keeps
//! its basis between solves: re-solving with a new objective starts from the
//! previous optimum, which is still primal feasible.

use crate::error::{Error, Result};

const EPS: f64 = 1e-10;
const MAX_PIVOTS: usize = 200_000;
/// Degenerate pivots in a row before switching from Dantzig's rule to Bland's.
const STALL_LIMIT: usize = 50;

#[derive(Debug, Clone)]
pub struct Simplex {
    rows: usize,
    cols: usize,
    /// `rows × (cols + rows + 1)`: structural, slack, right-hand side.
    tab: Vec<f64>,
    basis: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

impl Simplex {
    /// `a` is row-major with `b.len()` rows.
    pub fn new(a: &[Vec<f64>], b: &[f64]) -> Result<Self> {
        let rows = b.len();
        if a.len() != rows {
            return Err(Error::Lp(format!("{} constraint rows but {} bounds", a.len(), rows)));
        }
        let cols = a.first().map_or(0, Vec::len);
        if let Some(bad) = b.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::Lp(format!("right-hand side must be finite and nonnegative, got {bad}")));
        }
        let width = cols + rows + 1;
        let mut tab = vec![0.0; rows * width];
        for (i, row) in a.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Lp(format!("row {i} has {} entries, expected {cols}", row.len())));
            }
            tab[i * width..i * width + cols].copy_from_slice(row);
            tab[i * width + cols + i] = 1.0;
            tab[i * width + width - 1] = b[i];
        }
        Ok(Self {
            rows,
            cols,
            tab,
            basis: (cols..cols + rows).collect(),
        })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn width(&self) -> usize {
        self.cols + self.rows + 1
    }

    /// Maximizes `c·x` from the current basis.
    pub fn maximize(&mut self, c: &[f64]) -> Result<LpSolution> {
        if c.len() != self.cols {
            return Err(Error::Lp(format!("objective has {} entries, expected {}", c.len(), self.cols)));
        }
        let w = self.width();
        let total = self.cols + self.rows;
        let cost = |j: usize| if j < c.len() { c[j] } else { 0.0 };
        // reduced[j] = c_B B⁻¹ A_j − c_j; optimal when all are ≥ 0
        let mut reduced = vec![0.0; w];
        for j in 0..w {
            let mut z = 0.0;
            for i in 0..self.rows {
                let cb = cost(self.basis[i]);
                if cb != 0.0 {
                    z += cb * self.tab[i * w + j];
                }
            }
            reduced[j] = if j < total { z - cost(j) } else { z };
        }

        let mut stall = 0usize;
        for _ in 0..MAX_PIVOTS {
            let bland = stall >= STALL_LIMIT;
            let mut enter = None;
            let mut best = -EPS;
            for (j, &r) in reduced.iter().enumerate().take(total) {
                if r < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = r;
                }
            }
            let Some(e) = enter else {
                return Ok(self.solution(reduced[w - 1]));
            };
            let mut leave: Option<usize> = None;
            let mut ratio = f64::INFINITY;
            for i in 0..self.rows {
                let a = self.tab[i * w + e];
                if a > EPS {
                    let t = self.tab[i * w + w - 1] / a;
                    let better = match leave {
                        None => true,
                        Some(l) => t < ratio - EPS || (t <= ratio + EPS && self.basis[i] < self.basis[l]),
                    };
                    if better {
                        ratio = t;
                        leave = Some(i);
                    }
                }
            }
            let Some(l) = leave else {
                return Err(Error::Lp("objective is unbounded".into()));
            };
            stall = if ratio <= EPS { stall + 1 } else { 0 };
            self.pivot(l, e, &mut reduced);
        }
        Err(Error::Lp(format!("no optimum after {MAX_PIVOTS} pivots")))
    }

    fn pivot(&mut self, l: usize, e: usize, reduced: &mut [f64]) {
        let w = self.width();
        let p = self.tab[l * w + e];
        for j in 0..w {
            self.tab[l * w + j] /= p;
        }
        self.tab[l * w + e] = 1.0;
        let (before, rest) = self.tab.split_at_mut(l * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = row[e];
            if f != 0.0 {
                for (x, &y) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * y;
                }
                row[e] = 0.0;
                let rhs = &mut row[w - 1];
                if *rhs < 0.0 && *rhs > -1e-9 {
                    *rhs = 0.0;
                }
            }
        }
        let f = reduced[e];
        if f != 0.0 {
            for (x, &y) in reduced.iter_mut().zip(prow.iter()) {
                *x -= f * y;
            }
            reduced[e] = 0.0;
        }
        self.basis[l] = e;
    }

    fn solution(&self, value: f64) -> LpSolution {
        let w = self.width();
        let mut x = vec![0.0; self.cols];
        for (i, &j) in self.basis.iter().enumerate() {
            if j < self.cols {
                x[j] = self.tab[i * w + w - 1].max(0.0);
            }
        }
        LpSolution { value, x }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn textbook_instance() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let a = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]];
        let mut s = Simplex::new(&a, &[4.0, 12.0, 18.0]).unwrap();
        let sol = s.maximize(&[3.0, 5.0]).unwrap();
        assert!((sol.value - 36.0).abs() < 1e-9);
        assert!((sol.x[0] - 2.0).abs() < 1e-9 && (sol.x[1] - 6.0).abs() < 1e-9);
        // warm start with a new objective
        let sol = s.maximize(&[1.0, 0.0]).unwrap();
        assert!((sol.value - 4.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_is_reported() {
        let mut s = Simplex::new(&[vec![1.0, -1.0]], &[1.0]).unwrap();
        assert!(matches!(s.maximize(&[0.0, 1.0]), Err(Error::Lp(_))));
    }

    #[test]
    fn degenerate_instance_terminates() {
        // Beale's cycling example under the largest-coefficient rule
        let a = vec![
            vec![0.25, -60.0, -0.04, 9.0],
            vec![0.5, -90.0, -0.02, 3.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ];
        let mut s = Simplex::new(&a, &[0.0, 0.0, 1.0]).unwrap();
        let sol = s.maximize(&[0.75, -150.0, 0.02, -6.0]).unwrap();
        assert!((sol.value - 0.05).abs() < 1e-9, "{}", sol.value);
    }

    /// Best objective over all basic feasible points, found by solving every
    /// square subsystem of active constraints.
    fn vertex_enumeration(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> f64 {
        let n = c.len();
        let mut rows: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().cloned()).collect();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = -1.0;
            rows.push((e, 0.0));
        }
        let m = rows.len();
        let mut best = f64::NEG_INFINITY;
        let mut pick = vec![0usize; n];
        fn next(pick: &mut [usize], m: usize) -> bool {
            let n = pick.len();
            let mut i = n;
            while i > 0 {
                i -= 1;
                if pick[i] < m - n + i {
                    pick[i] += 1;
                    for k in i + 1..n {
                        pick[k] = pick[k - 1] + 1;
                    }
                    return true;
                }
            }
            false
        }
        for (i, p) in pick.iter_mut().enumerate() {
            *p = i;
        }
        loop {
            let mut mat: Vec<Vec<f64>> = pick
                .iter()
                .map(|&r| {
                    let mut row = rows[r].0.clone();
                    row.push(rows[r].1);
                    row
                })
                .collect();
            let mut ok = true;
            for col in 0..n {
                let piv = (col..n).max_by(|&x, &y| mat[x][col].abs().total_cmp(&mat[y][col].abs())).unwrap();
                if mat[piv][col].abs() < 1e-9 {
                    ok = false;
                    break;
                }
                mat.swap(col, piv);
                for r in 0..n {
                    if r != col {
                        let f = mat[r][col] / mat[col][col];
                        for k in col..=n {
                            mat[r][k] -= f * mat[col][k];
                        }
                    }
                }
            }
            if ok {
                let x: Vec<f64> = (0..n).map(|i| mat[i][n] / mat[i][i]).collect();
                let feasible = rows
                    .iter()
                    .all(|(row, rhs)| row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= rhs + 1e-7);
                if feasible {
                    best = best.max(c.iter().zip(&x).map(|(p, q)| p * q).sum());
                }
            }
            if !next(&mut pick, m) {
                break;
            }
        }
        best
    }

    proptest! {
        #[test]
        fn matches_vertex_enumeration(
            a in prop::collection::vec(prop::collection::vec(0.1f64..3.0, 3), 2..5),
            b in prop::collection::vec(0.0f64..5.0, 4),
            c in prop::collection::vec(-1.0f64..2.0, 3),
        ) {
            let b = &b[..a.len()];
            let expected = vertex_enumeration(&a, b, &c);
            let mut s = Simplex::new(&a, b).unwrap();
            let sol = s.maximize(&c).unwrap();
            prop_assert!((sol.value - expected).abs() < 1e-7, "{} vs {}", sol.value, expected);
            let achieved: f64 = c.iter().zip(&sol.x).map(|(p, q)| p * q).sum();
            prop_assert!((achieved - sol.value).abs() < 1e-7);
        }
    }
}
