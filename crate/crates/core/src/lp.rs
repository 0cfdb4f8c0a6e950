//! Dense two-phase primal simplex for small linear programs.
//!
//! All variables are non-negative; finite upper bounds become explicit rows.
//! The tableau is dense, which is fine for the few hundred columns of a
//! schedule subproblem.

use crate::milp::Sense;

/// Pivot tolerance and the zero threshold for reduced costs.
pub const LP_TOL: f64 = 1e-9;

/// Entering-column selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// Most negative reduced cost; switches to Bland's rule while pivots stay degenerate.
    #[default]
    Dantzig,
    /// Smallest eligible index, always.
    Bland,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `min c·x` subject to linear rows and `x ≥ 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<LpRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        objective: f64,
    },
    Infeasible,
    Unbounded,
    /// Pivot budget exhausted; only reachable through numerical trouble.
    Stalled,
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self { objective: vec![0.0; num_vars], rows: Vec::new() }
    }

    /// Appends a variable and returns its column.
    pub fn add_var(&mut self, cost: f64) -> usize {
        self.objective.push(cost);
        self.objective.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.objective[var] = cost;
    }

    pub fn add_row(&mut self, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        debug_assert!(terms.iter().all(|t| t.0 < self.objective.len()));
        self.rows.push(LpRow { terms, sense, rhs });
    }

    pub fn add_upper(&mut self, var: usize, ub: f64) {
        self.add_row(vec![(var, 1.0)], Sense::Le, ub);
    }

    pub fn rows(&self) -> &[LpRow] {
        &self.rows
    }

    pub fn solve(&self) -> LpOutcome {
        self.solve_with(PivotRule::Dantzig)
    }

    pub fn solve_with(&self, rule: PivotRule) -> LpOutcome {
        Tableau::build(self).run(self, rule)
    }
}

struct Tableau {
    m: usize,
    /// Structural + slack + artificial columns.
    cols: usize,
    width: usize,
    first_artificial: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    /// Reduced costs and the negated objective in the last slot.
    cost: Vec<f64>,
    blocked: Vec<bool>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.objective.len();
        let m = lp.rows.len();
        let slacks = lp.rows.iter().filter(|r| r.sense != Sense::Eq).count();
        // Normalize to non-negative right-hand sides first.
        let norm: Vec<(f64, Sense)> = lp
            .rows
            .iter()
            .map(|r| {
                if r.rhs < 0.0 {
                    let s = match r.sense {
                        Sense::Le => Sense::Ge,
                        Sense::Ge => Sense::Le,
                        Sense::Eq => Sense::Eq,
                    };
                    (-1.0, s)
                } else {
                    (1.0, r.sense)
                }
            })
            .collect();
        let artificials = norm.iter().filter(|(_, s)| *s != Sense::Le).count();
        let cols = n + slacks + artificials;
        let width = cols + 1;
        let mut data = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let mut next_slack = n;
        let mut next_art = n + slacks;
        for (i, (r, &(sign, sense))) in lp.rows.iter().zip(&norm).enumerate() {
            let row = &mut data[i * width..(i + 1) * width];
            for &(j, a) in &r.terms {
                row[j] += sign * a;
            }
            row[cols] = sign * r.rhs;
            if r.sense != Sense::Eq {
                let s = next_slack;
                next_slack += 1;
                row[s] = if sense == Sense::Le { 1.0 } else { -1.0 };
                if sense == Sense::Le {
                    basis[i] = s;
                }
            }
            if sense != Sense::Le {
                row[next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
        }
        Tableau {
            m,
            cols,
            width,
            first_artificial: n + slacks,
            data,
            basis,
            cost: vec![0.0; width],
            blocked: vec![false; cols],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    /// Loads `c` as the cost vector and prices out the current basis.
    fn price(&mut self, c: &[f64]) {
        self.cost.iter_mut().for_each(|v| *v = 0.0);
        self.cost[..c.len()].copy_from_slice(c);
        for i in 0..self.m {
            let cb = c.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for j in 0..self.width {
                    self.cost[j] -= cb * self.data[i * self.width + j];
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let p = self.data[r * w + q];
        for j in 0..w {
            self.data[r * w + j] /= p;
        }
        self.data[r * w + q] = 1.0;
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[q];
            if f != 0.0 {
                for j in 0..w {
                    row[j] -= f * prow[j];
                }
                row[q] = 0.0;
            }
        }
        let f = self.cost[q];
        if f != 0.0 {
            for j in 0..w {
                self.cost[j] -= f * prow[j];
            }
            self.cost[q] = 0.0;
        }
        self.basis[r] = q;
    }

    /// Runs simplex iterations on the loaded costs. `Ok(false)` means unbounded.
    fn iterate(&mut self, rule: PivotRule) -> Result<bool, ()> {
        let limit = 50_000 + 200 * (self.m + self.cols);
        let mut degenerate = 0usize;
        for _ in 0..limit {
            let bland = rule == PivotRule::Bland || degenerate > 30;
            let mut q = None;
            let mut best = -LP_TOL;
            for j in 0..self.cols {
                if self.blocked[j] {
                    continue;
                }
                let d = self.cost[j];
                if d < best {
                    q = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = q else { return Ok(true) };

            let mut r = None;
            let mut ratio = f64::INFINITY;
            for i in 0..self.m {
                let a = self.at(i, q);
                if a > LP_TOL {
                    let t = self.rhs(i).max(0.0) / a;
                    let better = match r {
                        None => true,
                        Some(ri) => t < ratio - 1e-12 || (t <= ratio + 1e-12 && self.basis[i] < self.basis[ri]),
                    };
                    if better {
                        r = Some(i);
                        ratio = t;
                    }
                }
            }
            let Some(r) = r else { return Ok(false) };
            if ratio <= LP_TOL {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, q);
        }
        Err(())
    }

    fn run(mut self, lp: &LinearProgram, rule: PivotRule) -> LpOutcome {
        let n = lp.objective.len();
        if self.first_artificial < self.cols {
            let mut c1 = vec![0.0; self.cols];
            c1[self.first_artificial..].iter_mut().for_each(|v| *v = 1.0);
            self.price(&c1);
            match self.iterate(rule) {
                Ok(true) => {}
                Ok(false) => unreachable!("phase one is bounded below"),
                Err(()) => return LpOutcome::Stalled,
            }
            let scale = 1.0 + (0..self.m).map(|i| self.rhs(i).abs()).fold(0.0, f64::max);
            if -self.cost[self.cols] > 1e-9 * scale {
                return LpOutcome::Infeasible;
            }
            // Drive remaining artificials out of the basis where possible.
            for i in 0..self.m {
                if self.basis[i] >= self.first_artificial {
                    if let Some(q) = (0..self.first_artificial).find(|&j| self.at(i, j).abs() > 1e-7) {
                        self.pivot(i, q);
                    }
                }
            }
            for j in self.first_artificial..self.cols {
                self.blocked[j] = true;
            }
        }
        self.price(&lp.objective);
        match self.iterate(rule) {
            Ok(true) => {}
            Ok(false) => return LpOutcome::Unbounded,
            Err(()) => return LpOutcome::Stalled,
        }
        let mut x = vec![0.0; n];
        for i in 0..self.m {
            let b = self.basis[i];
            if b < n {
                x[b] = self.rhs(i).max(0.0);
            }
        }
        let objective = x.iter().zip(&lp.objective).map(|(v, c)| v * c).sum();
        LpOutcome::Optimal { x, objective }
    }
}
