//! Dense tableau simplex for `max c.x  s.t.  A x <= b, x >= 0` with `b >= 0`.
//!
//! The slack basis is feasible at the origin, so no phase one is needed. At
//! optimality the reduced costs of the slack columns give the dual solution
//! `y >= 0` of `min b.y  s.t.  A^T y >= c`.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const OPT_EPS: f64 = 1e-11;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

/// Row-major constraint matrix with `rows` constraints over `cols` variables.
#[derive(Clone, Debug)]
pub struct DenseLp {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl DenseLp {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            a: vec![0.0; rows * cols],
            b: vec![0.0; rows],
            c: vec![0.0; cols],
        }
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.a[row * self.cols + col] = v;
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        self.a[row * self.cols + col] += v;
    }

    pub fn maximize(&self, max_pivots: usize) -> Result<LpSolution> {
        if let Some(i) = self.b.iter().position(|&v| !(v >= 0.0)) {
            return Err(Error::Solver(format!(
                "right-hand side {i} is negative; origin is not feasible"
            )));
        }
        let (m, n) = (self.rows, self.cols);
        let width = n + m + 1;
        let mut t = vec![0.0; (m + 1) * width];
        for i in 0..m {
            let row = &mut t[i * width..(i + 1) * width];
            row[..n].copy_from_slice(&self.a[i * n..(i + 1) * n]);
            row[n + i] = 1.0;
            row[width - 1] = self.b[i];
        }
        // objective row holds reduced costs c_j - z_j; we stop when all <= 0
        let obj = m * width;
        t[obj..obj + n].copy_from_slice(&self.c);
        let mut basis: Vec<usize> = (n..n + m).collect();

        let mut pivots = 0;
        let mut streak = 0;
        loop {
            let bland = streak >= DEGENERATE_STREAK;
            let entering = {
                let costs = &t[obj..obj + n + m];
                if bland {
                    costs.iter().position(|&r| r > OPT_EPS)
                } else {
                    costs
                        .iter()
                        .enumerate()
                        .filter(|(_, &r)| r > OPT_EPS)
                        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
                        .map(|(j, _)| j)
                }
            };
            let Some(q) = entering else { break };
            if pivots >= max_pivots {
                return Err(Error::Solver(format!(
                    "pivot limit {max_pivots} reached before optimality"
                )));
            }

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = t[i * width + q];
                if a > PIVOT_EPS {
                    let ratio = t[i * width + width - 1] / a;
                    let better = match leave {
                        None => true,
                        Some((l, r)) => {
                            ratio < r - 1e-14 || (ratio <= r + 1e-14 && basis[i] < basis[l])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((p, ratio)) = leave else {
                return Err(Error::Solver(format!(
                    "unbounded: column {q} has no positive entry"
                )));
            };
            streak = if ratio.abs() <= 1e-14 { streak + 1 } else { 0 };

            let pivot = t[p * width + q];
            for v in &mut t[p * width..(p + 1) * width] {
                *v /= pivot;
            }
            let prow = t[p * width..(p + 1) * width].to_vec();
            for i in 0..=m {
                if i == p {
                    continue;
                }
                let f = t[i * width + q];
                if f != 0.0 {
                    for (v, pv) in t[i * width..(i + 1) * width].iter_mut().zip(&prow) {
                        *v -= f * pv;
                    }
                    t[i * width + q] = 0.0;
                }
            }
            basis[p] = q;
            pivots += 1;
        }

        let mut x = vec![0.0; n];
        for (i, &j) in basis.iter().enumerate() {
            if j < n {
                x[j] = t[i * width + width - 1].max(0.0);
            }
        }
        let y: Vec<f64> = (0..m).map(|i| (-t[obj + n + i]).max(0.0)).collect();
        let objective = self.c.iter().zip(&x).map(|(c, x)| c * x).sum();
        Ok(LpSolution {
            x,
            y,
            objective,
            pivots,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), 36
        let mut lp = DenseLp::new(3, 2);
        lp.c = vec![3.0, 5.0];
        lp.set(0, 0, 1.0);
        lp.set(1, 1, 2.0);
        lp.set(2, 0, 3.0);
        lp.set(2, 1, 2.0);
        lp.b = vec![4.0, 12.0, 18.0];
        let s = lp.maximize(100).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
        // dual: y = (0, 1.5, 1), b.y = 36
        let dual: f64 = s.y.iter().zip(&lp.b).map(|(y, b)| y * b).sum();
        assert!((dual - 36.0).abs() < 1e-12);
        assert!((s.y[1] - 1.5).abs() < 1e-12 && (s.y[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_is_reported() {
        let mut lp = DenseLp::new(1, 2);
        lp.c = vec![1.0, 1.0];
        lp.set(0, 0, 1.0);
        lp.b = vec![1.0];
        assert!(matches!(lp.maximize(100), Err(Error::Solver(_))));
    }

    #[test]
    fn degenerate_equalities() {
        // x1 - x2 <= 0, x2 - x1 <= 0, x1 + x2 <= 2: max x1 + 2 x2 -> x1 = x2 = 1
        let mut lp = DenseLp::new(3, 2);
        lp.c = vec![1.0, 2.0];
        lp.set(0, 0, 1.0);
        lp.set(0, 1, -1.0);
        lp.set(1, 0, -1.0);
        lp.set(1, 1, 1.0);
        lp.set(2, 0, 1.0);
        lp.set(2, 1, 1.0);
        lp.b = vec![0.0, 0.0, 2.0];
        let s = lp.maximize(100).unwrap();
        assert!((s.objective - 3.0).abs() < 1e-12);
    }
}
