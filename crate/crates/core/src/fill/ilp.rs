//! Integer programs of the form: minimise sum c_j |v_j| subject to A v = b with
//! A having entries in {-1, 0, 1} and v integral.
//!
//! Rows with a single undetermined variable are resolved exactly first (this is
//! free-face collapsing for boundary matrices). The remainder is solved by its
//! LP relaxation with v = p - m, p, m >= 0; fractional optima go to a
//! best-bound branch-and-bound on the split variables.

use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome, Solution, Variable};

#[derive(Clone, Debug)]
pub struct IntegerProgram {
    pub costs: Vec<f64>,
    pub rows: Vec<Vec<(usize, i8)>>,
    pub rhs: Vec<i64>,
}

#[derive(Clone, Debug)]
pub struct IlpOptions {
    /// Maximum number of branch-and-bound nodes per solve.
    pub node_budget: usize,
    /// Lexicographic refinement runs only when at most this many variables remain
    /// undetermined after presolve.
    pub lex_budget: usize,
}

impl Default for IlpOptions {
    fn default() -> Self {
        IlpOptions {
            node_budget: 4000,
            lex_budget: 32,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IlpStats {
    /// Optimal value of the root LP relaxation.
    pub lp_bound: f64,
    /// Objective of the returned integral solution.
    pub objective: f64,
    pub nodes: usize,
    pub presolve_fixed: usize,
    pub free_after_presolve: usize,
    /// The root relaxation was already integral.
    pub integral_root: bool,
    /// Lexicographic tie-breaking was applied (or the optimum was forced).
    pub lexicographic: bool,
}

#[derive(Clone, Debug)]
pub enum IlpError {
    Infeasible,
    Budget { nodes: usize, best_bound: f64 },
    Solver(String),
}

#[derive(Clone, Debug)]
pub struct IlpSolution {
    pub values: Vec<i64>,
    pub stats: IlpStats,
}

const INT_TOL: f64 = 1e-6;

struct Presolved {
    fixed: Vec<Option<i64>>,
    residual: Vec<i64>,
    active_rows: Vec<usize>,
    free: Vec<usize>,
}

fn presolve(prog: &IntegerProgram, extra: &[(usize, i64)]) -> Result<Presolved, IlpError> {
    let nv = prog.costs.len();
    let mut cols: Vec<Vec<(usize, i8)>> = vec![Vec::new(); nv];
    for (i, row) in prog.rows.iter().enumerate() {
        for &(j, s) in row {
            cols[j].push((i, s));
        }
    }
    let mut fixed: Vec<Option<i64>> = vec![None; nv];
    let mut residual = prog.rhs.clone();
    let mut count: Vec<usize> = prog.rows.iter().map(|r| r.len()).collect();
    let mut queue: Vec<usize> = Vec::new();

    let fix = |j: usize,
               val: i64,
               fixed: &mut Vec<Option<i64>>,
               residual: &mut Vec<i64>,
               count: &mut Vec<usize>,
               queue: &mut Vec<usize>|
     -> Result<(), IlpError> {
        match fixed[j] {
            Some(v) if v == val => return Ok(()),
            Some(_) => return Err(IlpError::Infeasible),
            None => {}
        }
        fixed[j] = Some(val);
        for &(i, s) in &cols[j] {
            residual[i] -= s as i64 * val;
            count[i] -= 1;
            if count[i] <= 1 {
                queue.push(i);
            }
        }
        Ok(())
    };

    for &(j, val) in extra {
        fix(j, val, &mut fixed, &mut residual, &mut count, &mut queue)?;
    }
    queue.extend((0..prog.rows.len()).filter(|&i| count[i] <= 1));
    while let Some(i) = queue.pop() {
        match count[i] {
            0 => {
                if residual[i] != 0 {
                    return Err(IlpError::Infeasible);
                }
            }
            1 => {
                let &(j, s) = prog.rows[i]
                    .iter()
                    .find(|(j, _)| fixed[*j].is_none())
                    .expect("one free variable");
                let val = residual[i] * s as i64;
                fix(j, val, &mut fixed, &mut residual, &mut count, &mut queue)?;
            }
            _ => {}
        }
    }
    let active_rows = (0..prog.rows.len()).filter(|&i| count[i] >= 2).collect();
    let free = (0..nv).filter(|&j| fixed[j].is_none()).collect();
    Ok(Presolved {
        fixed,
        residual,
        active_rows,
        free,
    })
}

enum Objective {
    Mass,
    Coordinate(usize),
}

struct Lp {
    split: Vec<Option<(Variable, Variable)>>,
}

fn build_lp(
    prog: &IntegerProgram,
    pre: &Presolved,
    objective: &Objective,
    mass_cap: Option<f64>,
) -> Result<(Problem, Lp), IlpError> {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let mut split = vec![None; prog.costs.len()];
    for &j in &pre.free {
        let (cp, cm) = match objective {
            Objective::Mass => (prog.costs[j], prog.costs[j]),
            Objective::Coordinate(k) if *k == j => (1.0, -1.0),
            Objective::Coordinate(_) => (0.0, 0.0),
        };
        let p = problem.add_var(cp, (0.0, f64::INFINITY));
        let m = problem.add_var(cm, (0.0, f64::INFINITY));
        split[j] = Some((p, m));
    }
    for &i in &pre.active_rows {
        let terms: Vec<(Variable, f64)> = prog.rows[i]
            .iter()
            .filter_map(|&(j, s)| split[j].map(|(p, m)| [(p, s as f64), (m, -(s as f64))]))
            .flatten()
            .collect();
        problem.add_constraint(terms.as_slice(), ComparisonOp::Eq, pre.residual[i] as f64);
    }
    if let Some(cap) = mass_cap {
        let fixed_cost: f64 = pre
            .fixed
            .iter()
            .enumerate()
            .filter_map(|(j, v)| v.map(|v| prog.costs[j] * v.abs() as f64))
            .sum();
        let terms: Vec<(Variable, f64)> = pre
            .free
            .iter()
            .flat_map(|&j| {
                let (p, m) = split[j].unwrap();
                [(p, prog.costs[j]), (m, prog.costs[j])]
            })
            .collect();
        problem.add_constraint(terms.as_slice(), ComparisonOp::Le, cap - fixed_cost);
    }
    Ok((problem, Lp { split }))
}

fn lp_error(e: microlp::Error) -> IlpError {
    match e {
        microlp::Error::Infeasible => IlpError::Infeasible,
        other => IlpError::Solver(other.to_string()),
    }
}

fn outcome_solution(outcome: Result<SolveOutcome, microlp::Error>) -> Result<Option<Solution>, IlpError> {
    match outcome {
        Ok(SolveOutcome::Solution(s)) => Ok(Some(s)),
        Ok(SolveOutcome::Interrupted(_)) => Err(IlpError::Solver("LP solve interrupted".into())),
        Err(microlp::Error::Infeasible) => Ok(None),
        Err(e) => Err(lp_error(e)),
    }
}

fn value_of(sol: &Solution, lp: &Lp, j: usize) -> f64 {
    let (p, m) = lp.split[j].unwrap();
    sol.var_value_raw(p) - sol.var_value_raw(m)
}

struct BbResult {
    values: Vec<i64>,
    root_bound: f64,
    integral_root: bool,
    nodes: usize,
}

fn branch_and_bound(
    prog: &IntegerProgram,
    pre: &Presolved,
    objective: Objective,
    mass_cap: Option<f64>,
    budget: usize,
) -> Result<BbResult, IlpError> {
    let mut values: Vec<i64> = pre.fixed.iter().map(|v| v.unwrap_or(0)).collect();
    if pre.free.is_empty() {
        return Ok(BbResult {
            values,
            root_bound: 0.0,
            integral_root: true,
            nodes: 0,
        });
    }
    let (problem, lp) = build_lp(prog, pre, &objective, mass_cap)?;
    let root = outcome_solution(problem.solve())?.ok_or(IlpError::Infeasible)?;
    let root_bound = root.objective();
    let tol = 1e-7 * root_bound.abs().max(1.0);
    let mut open: Vec<(f64, Solution)> = vec![(root_bound, root)];
    let mut incumbent: Option<(f64, Vec<i64>)> = None;
    let mut nodes = 1usize;
    let mut integral_root = false;
    while !open.is_empty() {
        let best = (0..open.len())
            .min_by(|&a, &b| open[a].0.total_cmp(&open[b].0))
            .unwrap();
        let (bound, sol) = open.swap_remove(best);
        if incumbent.as_ref().is_some_and(|(obj, _)| bound >= obj - tol) {
            continue;
        }
        let mut branch: Option<(usize, f64)> = None;
        let mut worst = 0.0;
        for &j in &pre.free {
            let v = value_of(&sol, &lp, j);
            let frac = (v - v.round()).abs();
            if frac > INT_TOL && frac > worst {
                worst = frac;
                branch = Some((j, v));
            }
        }
        match branch {
            None => {
                if nodes == 1 {
                    integral_root = true;
                }
                let mut vals = values.clone();
                for &j in &pre.free {
                    vals[j] = value_of(&sol, &lp, j).round() as i64;
                }
                incumbent = Some((bound, vals));
            }
            Some((j, v)) => {
                if nodes + 2 > budget {
                    let best_bound = open.iter().map(|o| o.0).fold(bound, f64::min);
                    return Err(IlpError::Budget { nodes, best_bound });
                }
                let (p, m) = lp.split[j].unwrap();
                let expr = [(p, 1.0), (m, -1.0)];
                for (op, rhs) in [(ComparisonOp::Le, v.floor()), (ComparisonOp::Ge, v.ceil())] {
                    nodes += 1;
                    if let Some(child) = outcome_solution(sol.clone().add_constraint(expr.as_slice(), op, rhs))? {
                        open.push((child.objective(), child));
                    }
                }
            }
        }
    }
    let (_, vals) = incumbent.ok_or(IlpError::Infeasible)?;
    values = vals;
    Ok(BbResult {
        values,
        root_bound,
        integral_root,
        nodes,
    })
}

impl IntegerProgram {
    pub fn objective(&self, values: &[i64]) -> f64 {
        values
            .iter()
            .zip(&self.costs)
            .map(|(v, c)| v.abs() as f64 * c)
            .sum()
    }

    pub fn is_feasible(&self, values: &[i64]) -> bool {
        self.rows.iter().zip(&self.rhs).all(|(row, b)| {
            row.iter().map(|&(j, s)| s as i64 * values[j]).sum::<i64>() == *b
        })
    }

    /// Solves the program. Among optimal solutions the lexicographically least
    /// value vector (by variable index) is returned when the number of variables
    /// left after presolve is within `lex_budget`.
    pub fn solve(&self, opts: &IlpOptions) -> Result<IlpSolution, IlpError> {
        let pre = presolve(self, &[])?;
        let presolve_fixed = self.costs.len() - pre.free.len();
        let free_after_presolve = pre.free.len();
        let fixed_cost: f64 = pre
            .fixed
            .iter()
            .enumerate()
            .filter_map(|(j, v)| v.map(|v| self.costs[j] * v.abs() as f64))
            .sum();
        let bb = branch_and_bound(self, &pre, Objective::Mass, None, opts.node_budget)?;
        let mut values = bb.values;
        let mut nodes = bb.nodes;
        let mut lexicographic = pre.free.is_empty();
        if !pre.free.is_empty() && pre.free.len() <= opts.lex_budget {
            let best = self.objective(&values);
            let cap = best + 1e-7 * best.max(1.0);
            let mut fixes: Vec<(usize, i64)> = Vec::new();
            let mut current = pre;
            while let Some(&j) = current.free.first() {
                let r = branch_and_bound(self, &current, Objective::Coordinate(j), Some(cap), opts.node_budget)?;
                nodes += r.nodes;
                fixes.push((j, r.values[j]));
                current = presolve(self, &fixes)?;
            }
            values = current.fixed.iter().map(|v| v.expect("all fixed")).collect();
            lexicographic = true;
        }
        if !self.is_feasible(&values) {
            return Err(IlpError::Solver("solution violates the equality constraints".into()));
        }
        let objective = self.objective(&values);
        Ok(IlpSolution {
            stats: IlpStats {
                lp_bound: if free_after_presolve == 0 {
                    objective
                } else {
                    fixed_cost + bb.root_bound
                },
                objective,
                nodes,
                presolve_fixed,
                free_after_presolve,
                integral_root: bb.integral_root,
                lexicographic,
            },
            values,
        })
    }
}
