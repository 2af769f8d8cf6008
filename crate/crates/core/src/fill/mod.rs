//! Fillings of integral cycles: exact minimal fillings, cone fillings and the
//! constructions built from them.

pub mod density;
pub mod ilp;
pub mod round;
pub mod simplex;

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::chains::Chain;
use crate::complex::{CellId, CellSet, FactorCell, MetricComplex};
use crate::error::{Error, Result};
use crate::numeric::{qi, to_f64, Q};

pub use density::{density_profile, DensityProfile};
pub use ilp::{IlpError, IlpOptions, IlpStats};
pub use round::{
    euclidean_filling, euclidean_filling_with, round_decompose, EuclideanFilling, RoundClauses, RoundDecomposition,
    RoundParams,
};
pub use simplex::{
    fill_piecewise_minimizing, minimizing_simplex, slimness_report, MinimizingSimplex, PiecewiseFilling,
    PiecewiseMinimizing, SimplexBuilder, SlimnessReport, MAX_SIMPLEX_DIM,
};

/// Where the cells of a minimal filling may live.
#[derive(Clone, Debug, Default)]
pub enum Region {
    /// Grids and tree products: the product of the subtrees spanned by the
    /// support (nearest-point retraction onto it does not increase mass).
    /// Custom complexes: a path-metric neighbourhood of the support, enlarged
    /// until the cycle bounds or the whole complex is used.
    #[default]
    Auto,
    /// Explicit set of candidate cells (cells of other dimensions are ignored).
    Cells(CellSet),
}

#[derive(Clone, Debug, Default)]
pub struct MinFillOptions {
    pub ilp: IlpOptions,
    pub region: Region,
}

#[derive(Clone, Debug)]
pub struct MinimalFilling {
    pub chain: Chain,
    pub mass: Q,
    pub stats: IlpStats,
    pub region_cells: usize,
}

/// Checks that `t` is a cycle (for 0-chains: coefficients sum to zero).
pub fn check_cycle(x: &MetricComplex, t: &Chain) -> Result<()> {
    let ok = if t.dim() == 0 {
        t.iter().map(|(_, v)| v).sum::<i64>() == 0
    } else {
        t.is_cycle(x)
    };
    if ok {
        Ok(())
    } else {
        Err(Error::NotABoundary {
            dim: t.dim(),
            detail: "the chain is not a cycle".into(),
        })
    }
}

/// All cells of dimension `d` in the product of the subtrees spanned by `verts`.
pub fn hull_cells(x: &MetricComplex, verts: &[CellId], d: usize) -> Vec<CellId> {
    let p = x.product().expect("product complex");
    let n = p.num_factors();
    let nodes: Vec<Vec<u32>> = verts.iter().map(|&v| p.vertex_nodes(v)).collect();
    let per_factor: Vec<(Vec<FactorCell>, Vec<FactorCell>)> = (0..n)
        .map(|j| {
            let f = &p.factors()[j];
            let proj: Vec<u32> = nodes.iter().map(|v| v[j]).collect();
            let sub = f.spanned_subtree(&proj);
            let set: BTreeSet<u32> = sub.iter().copied().collect();
            let verts = sub.iter().map(|&u| FactorCell::Node(u)).collect();
            let edges = sub
                .iter()
                .filter(|&&u| f.parent(u).is_some_and(|q| set.contains(&q)))
                .map(|&u| FactorCell::Edge(u))
                .collect();
            (verts, edges)
        })
        .collect();
    let mut out = Vec::new();
    for mask in 0u32..1 << n {
        if mask.count_ones() as usize != d {
            continue;
        }
        let lists: Vec<&Vec<FactorCell>> = (0..n)
            .map(|j| if mask >> j & 1 == 1 { &per_factor[j].1 } else { &per_factor[j].0 })
            .collect();
        if lists.iter().any(|l| l.is_empty()) {
            continue;
        }
        let mut idx = vec![0usize; n];
        let mut cells: Vec<FactorCell> = lists.iter().map(|l| l[0]).collect();
        'outer: loop {
            out.push(p.encode(&cells));
            for j in (0..n).rev() {
                idx[j] += 1;
                if idx[j] < lists[j].len() {
                    cells[j] = lists[j][idx[j]];
                    continue 'outer;
                }
                idx[j] = 0;
                cells[j] = lists[j][0];
            }
            break;
        }
    }
    out.sort();
    out
}

fn program_for(x: &MetricComplex, t: &Chain, vars: &[CellId]) -> (ilp::IntegerProgram, Vec<CellId>) {
    let mut rows: BTreeSet<CellId> = t.cells().collect();
    for &c in vars {
        rows.extend(x.boundary(c).into_iter().map(|(f, _)| f));
    }
    let rows: Vec<CellId> = rows.into_iter().collect();
    let row_index: std::collections::HashMap<CellId, usize> =
        rows.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let mut matrix = vec![Vec::new(); rows.len()];
    for (j, &c) in vars.iter().enumerate() {
        for (f, s) in x.boundary(c) {
            matrix[row_index[&f]].push((j, s));
        }
    }
    let rhs = rows.iter().map(|&r| t.coeff(r)).collect();
    let costs = vars.iter().map(|&c| to_f64(x.volume(c))).collect();
    (
        ilp::IntegerProgram {
            costs,
            rows: matrix,
            rhs,
        },
        rows,
    )
}

fn solve_in_region(
    x: &MetricComplex,
    t: &Chain,
    vars: Vec<CellId>,
    opts: &MinFillOptions,
) -> Result<MinimalFilling> {
    let (prog, _) = program_for(x, t, &vars);
    let sol = prog.solve(&opts.ilp).map_err(|e| match e {
        IlpError::Infeasible => Error::NotABoundary {
            dim: t.dim(),
            detail: "the cycle represents a non-zero homology class of the filling region".into(),
        },
        IlpError::Budget { nodes, best_bound } => Error::SolverBudget { nodes, best_bound },
        IlpError::Solver(msg) => Error::Solver(msg),
    })?;
    let chain = Chain::from_terms(t.dim() + 1, vars.iter().copied().zip(sol.values.iter().copied()));
    if chain.boundary(x) != *t {
        return Err(Error::verification("minimal filling does not bound the cycle"));
    }
    Ok(MinimalFilling {
        mass: chain.mass(x),
        chain,
        stats: sol.stats,
        region_cells: vars.len(),
    })
}

/// Minimal-mass integral filling: a (k+1)-chain V with boundary T minimising M(V)
/// over the region. Ties among optimal solutions are broken towards the
/// lexicographically least coefficient vector over cell ids when the problem
/// left after presolve is small enough (see [`IlpOptions::lex_budget`]).
pub fn min_filling(x: &MetricComplex, t: &Chain, opts: &MinFillOptions) -> Result<MinimalFilling> {
    check_cycle(x, t)?;
    let d = t.dim() + 1;
    if t.is_zero() {
        return Ok(MinimalFilling {
            chain: Chain::zero(d),
            mass: Q::zero(),
            stats: IlpStats {
                lexicographic: true,
                integral_root: true,
                ..IlpStats::default()
            },
            region_cells: 0,
        });
    }
    if d > x.max_dim() {
        return Err(Error::NotABoundary {
            dim: t.dim(),
            detail: format!("non-zero homology class: the complex has no cells of dimension {d}"),
        });
    }
    match &opts.region {
        Region::Cells(cells) => {
            let vars = cells.iter().copied().filter(|&c| x.dim(c) == d).collect();
            solve_in_region(x, t, vars, opts)
        }
        Region::Auto if x.product().is_some() => {
            let vars = hull_cells(x, &t.support_vertices(x), d);
            solve_in_region(x, t, vars, opts)
        }
        Region::Auto => {
            let support: CellSet = t.cells().collect();
            let mut radius = Q::from_float(2.0 * x.kappa() * t.diam(x).max(1.0)).unwrap_or_else(|| qi(1));
            loop {
                let hood = x.neighborhood(&support, &radius);
                let vars: Vec<CellId> = hood.iter().copied().filter(|&c| x.dim(c) == d).collect();
                let everything = vars.len() == x.count_of_dim(d);
                match solve_in_region(x, t, vars, opts) {
                    Err(Error::NotABoundary { .. }) if !everything => radius *= qi(2),
                    other => return other,
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConeFilling {
    pub chain: Chain,
    /// Largest model distance from the apex to a support vertex of T.
    pub radius: f64,
    /// M(V) / (radius * M(T)), or 0 for the zero cycle.
    pub ratio: f64,
}

/// Cone filling from the vertex `z`. Grids and tree products sweep the cycle
/// towards `z` one factor at a time (straight-line homotopy along tree
/// geodesics), emitting the swept prism cells. Custom complexes fall back to a
/// minimal filling over the whole complex.
pub fn cone_filling(x: &MetricComplex, t: &Chain, z: CellId) -> Result<ConeFilling> {
    if !x.contains(z) || x.dim(z) != 0 {
        return Err(Error::invalid(format!("apex {z} is not a vertex of the complex")));
    }
    check_cycle(x, t)?;
    let chain = match x.product() {
        Some(p) => {
            let apex = p.vertex_nodes(z);
            let mut current = t.clone();
            let mut cone = Chain::zero(t.dim() + 1);
            for j in 0..p.num_factors() {
                let f = &p.factors()[j];
                let mut next = Chain::zero(t.dim());
                for (c, v) in current.iter() {
                    let mut cells = p.decode(c);
                    let FactorCell::Node(u) = cells[j] else {
                        continue;
                    };
                    let edges_before = cells[..j].iter().filter(|c| c.is_edge()).count();
                    let sign: i64 = if edges_before % 2 == 0 { -1 } else { 1 };
                    let mut w = u;
                    while w != apex[j] {
                        let step = f.step_toward(w, apex[j]);
                        let (child, orient) = if f.parent(step) == Some(w) { (step, 1) } else { (w, -1) };
                        cells[j] = FactorCell::Edge(child);
                        cone.add_term(p.encode(&cells), sign * orient * v);
                        w = step;
                    }
                    cells[j] = FactorCell::Node(apex[j]);
                    next.add_term(p.encode(&cells), v);
                }
                current = next;
            }
            cone
        }
        None => {
            let all: CellSet = x.cells_of_dim(t.dim() + 1).collect();
            let opts = MinFillOptions {
                region: Region::Cells(all),
                ..MinFillOptions::default()
            };
            min_filling(x, t, &opts)?.chain
        }
    };
    if chain.boundary(x) != *t {
        return Err(Error::verification("cone filling does not bound the cycle"));
    }
    let radius = t
        .support_vertices(x)
        .into_iter()
        .map(|v| x.vertex_dist(z, v))
        .fold(0.0, f64::max);
    let mt = t.mass_f64(x);
    let ratio = if mt == 0.0 || radius == 0.0 {
        0.0
    } else {
        chain.mass_f64(x) / (radius * mt)
    };
    Ok(ConeFilling { chain, radius, ratio })
}

#[cfg(test)]
mod tests;
