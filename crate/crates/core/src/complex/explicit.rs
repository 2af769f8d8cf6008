//! Complexes given cell by cell (custom cube complexes loaded from JSON).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Signed};
use serde::Deserialize;

use super::CellId;
use crate::error::{Error, Result};
use crate::numeric::{q_from_json, Q};

#[derive(Clone, Debug)]
pub struct ExplicitRepr {
    dims: Vec<u8>,
    volumes: Vec<Q>,
    bnd_off: Vec<u32>,
    bnd: Vec<(CellId, i8)>,
    cob_off: Vec<u32>,
    cob: Vec<(CellId, i8)>,
    vert_off: Vec<u32>,
    verts: Vec<CellId>,
    by_dim: Vec<Vec<CellId>>,
}

#[derive(Deserialize)]
struct CustomFile {
    cells: Vec<CustomCell>,
    metric: CustomMetric,
}

#[derive(Deserialize)]
struct CustomCell {
    id: u32,
    dim: usize,
    volume: serde_json::Value,
    #[serde(default)]
    boundary: Vec<(u32, i64)>,
}

#[derive(Deserialize)]
struct CustomMetric {
    kind: String,
    kappa: serde_json::Value,
}

fn csr<T: Clone>(rows: &[Vec<T>]) -> (Vec<u32>, Vec<T>) {
    let mut off = Vec::with_capacity(rows.len() + 1);
    let mut flat = Vec::new();
    off.push(0);
    for r in rows {
        flat.extend(r.iter().cloned());
        off.push(flat.len() as u32);
    }
    (off, flat)
}

impl ExplicitRepr {
    /// Parses and validates a custom cube complex; returns the representation and kappa.
    pub fn from_json(text: &str) -> Result<(Self, Q)> {
        let file: CustomFile = serde_json::from_str(text)?;
        if file.metric.kind != "custom_cube" {
            return Err(Error::invalid(format!(
                "metric kind must be \"custom_cube\", found {:?}",
                file.metric.kind
            )));
        }
        let kappa = q_from_json(&file.metric.kappa)?;
        if kappa < Q::one() {
            return Err(Error::invalid("kappa must be at least 1"));
        }
        let n = file.cells.len();
        let mut slot: Vec<Option<&CustomCell>> = vec![None; n];
        for c in &file.cells {
            let i = c.id as usize;
            if i >= n || slot[i].is_some() {
                return Err(Error::invalid(format!(
                    "cell ids must be exactly 0..{n} without repeats (offending id {})",
                    c.id
                )));
            }
            slot[i] = Some(c);
        }
        let cells: Vec<&CustomCell> = slot.into_iter().map(|c| c.unwrap()).collect();
        let mut dims = Vec::with_capacity(n);
        let mut volumes = Vec::with_capacity(n);
        let mut boundary_rows = Vec::with_capacity(n);
        for c in &cells {
            if c.dim > 8 {
                return Err(Error::invalid(format!("cell {} has dimension {} > 8", c.id, c.dim)));
            }
            let vol = q_from_json(&c.volume)?;
            if c.dim == 0 && vol != Q::one() {
                return Err(Error::invalid(format!("vertex {} must have volume 1", c.id)));
            }
            if !vol.is_positive() {
                return Err(Error::invalid(format!("cell {} has non-positive volume", c.id)));
            }
            if c.dim == 0 && !c.boundary.is_empty() {
                return Err(Error::invalid(format!("vertex {} has a boundary", c.id)));
            }
            let mut row: BTreeMap<u32, i64> = BTreeMap::new();
            for &(f, s) in &c.boundary {
                if s != 1 && s != -1 {
                    return Err(Error::invalid(format!("cell {} has boundary sign {s}", c.id)));
                }
                let fd = cells.get(f as usize).map(|x| x.dim);
                if fd != Some(c.dim.wrapping_sub(1)) {
                    return Err(Error::invalid(format!(
                        "cell {} lists face {f} of the wrong dimension",
                        c.id
                    )));
                }
                *row.entry(f).or_default() += s;
            }
            let row: Vec<(CellId, i8)> = row
                .into_iter()
                .filter(|&(_, s)| s != 0)
                .map(|(f, s)| {
                    i8::try_from(s)
                        .map(|s| (CellId(f), s))
                        .map_err(|_| Error::invalid(format!("cell {} incidence too large", c.id)))
                })
                .collect::<Result<_>>()?;
            dims.push(c.dim as u8);
            volumes.push(vol);
            boundary_rows.push(row);
        }
        let max_dim = dims.iter().copied().max().unwrap_or(0) as usize;
        let mut by_dim = vec![Vec::new(); max_dim + 1];
        let mut cob_rows: Vec<Vec<(CellId, i8)>> = vec![Vec::new(); n];
        for (i, row) in boundary_rows.iter().enumerate() {
            by_dim[dims[i] as usize].push(CellId(i as u32));
            for &(f, s) in row {
                cob_rows[f.0 as usize].push((CellId(i as u32), s));
            }
        }
        // Vertex sets by increasing dimension.
        let mut vert_rows: Vec<Vec<CellId>> = vec![Vec::new(); n];
        for (d, cells) in by_dim.iter().enumerate().take(max_dim + 1) {
            for &c in cells {
                let i = c.0 as usize;
                vert_rows[i] = if d == 0 {
                    vec![c]
                } else {
                    let set: BTreeSet<CellId> = boundary_rows[i]
                        .iter()
                        .flat_map(|(f, _)| vert_rows[f.0 as usize].iter().copied())
                        .collect();
                    set.into_iter().collect()
                };
            }
        }
        let (bnd_off, bnd) = csr(&boundary_rows);
        let (cob_off, cob) = csr(&cob_rows);
        let (vert_off, verts) = csr(&vert_rows);
        let repr = ExplicitRepr {
            dims,
            volumes,
            bnd_off,
            bnd,
            cob_off,
            cob,
            vert_off,
            verts,
            by_dim,
        };
        repr.validate_cubes()?;
        repr.check_boundary_squared()?;
        repr.check_connected()?;
        if max_dim <= 3 {
            repr.check_links()?;
        } else {
            log::warn!("custom complex has dimension {max_dim}; link condition not checked");
        }
        Ok((repr, kappa))
    }

    pub fn num_cells(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, c: CellId) -> usize {
        self.dims[c.0 as usize] as usize
    }

    pub fn max_dim(&self) -> usize {
        self.by_dim.len() - 1
    }

    pub fn cells_of_dim(&self, d: usize) -> &[CellId] {
        self.by_dim.get(d).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn volume(&self, c: CellId) -> &Q {
        &self.volumes[c.0 as usize]
    }

    pub fn boundary(&self, c: CellId) -> &[(CellId, i8)] {
        let i = c.0 as usize;
        &self.bnd[self.bnd_off[i] as usize..self.bnd_off[i + 1] as usize]
    }

    pub fn coboundary(&self, c: CellId) -> &[(CellId, i8)] {
        let i = c.0 as usize;
        &self.cob[self.cob_off[i] as usize..self.cob_off[i + 1] as usize]
    }

    pub fn vertices(&self, c: CellId) -> &[CellId] {
        let i = c.0 as usize;
        &self.verts[self.vert_off[i] as usize..self.vert_off[i + 1] as usize]
    }

    /// Endpoints of an edge as (tail, head): boundary = head - tail.
    pub fn edge_ends(&self, e: CellId) -> (CellId, CellId) {
        let b = self.boundary(e);
        let head = b.iter().find(|(_, s)| *s > 0).unwrap().0;
        let tail = b.iter().find(|(_, s)| *s < 0).unwrap().0;
        (tail, head)
    }

    fn validate_cubes(&self) -> Result<()> {
        for (i, &d) in self.dims.iter().enumerate() {
            let c = CellId(i as u32);
            let d = d as usize;
            if d == 0 {
                continue;
            }
            let faces = self.boundary(c).len();
            let nverts = self.vertices(c).len();
            if faces != 2 * d || nverts != 1 << d {
                return Err(Error::invalid(format!(
                    "cell {c} of dimension {d} is not a cube: {faces} faces, {nverts} vertices"
                )));
            }
        }
        Ok(())
    }

    fn check_boundary_squared(&self) -> Result<()> {
        for i in 0..self.num_cells() {
            let c = CellId(i as u32);
            let mut acc: HashMap<CellId, i64> = HashMap::new();
            for &(f, s) in self.boundary(c) {
                for &(g, t) in self.boundary(f) {
                    *acc.entry(g).or_default() += (s * t) as i64;
                }
            }
            if acc.values().any(|v| *v != 0) {
                return Err(Error::invalid(format!("boundary of boundary of cell {c} is non-zero")));
            }
        }
        Ok(())
    }

    fn check_connected(&self) -> Result<()> {
        let verts = self.cells_of_dim(0);
        if verts.is_empty() {
            return Err(Error::invalid("complex has no vertices"));
        }
        let mut seen = vec![false; self.num_cells()];
        let mut stack = vec![verts[0]];
        seen[verts[0].0 as usize] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(e, _) in self.coboundary(v) {
                let (a, b) = self.edge_ends(e);
                let w = if a == v { b } else { a };
                if !seen[w.0 as usize] {
                    seen[w.0 as usize] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        if count != verts.len() {
            return Err(Error::invalid("complex is not connected"));
        }
        Ok(())
    }

    /// Gromov's link condition: the link of every vertex is a flag simplicial complex.
    fn check_links(&self) -> Result<()> {
        for &v in self.cells_of_dim(0) {
            let edges_at = |c: CellId| -> Vec<CellId> {
                let mut out = Vec::new();
                let mut stack = vec![c];
                let mut seen = BTreeSet::new();
                while let Some(x) = stack.pop() {
                    for &(f, _) in self.boundary(x) {
                        if seen.insert(f) && self.vertices(f).contains(&v) {
                            if self.dim(f) == 1 {
                                out.push(f);
                            } else {
                                stack.push(f);
                            }
                        }
                    }
                }
                out.sort();
                out
            };
            let mut link_edges: BTreeSet<(CellId, CellId)> = BTreeSet::new();
            let mut link_triangles: BTreeSet<Vec<CellId>> = BTreeSet::new();
            let mut star: BTreeSet<CellId> = BTreeSet::new();
            let mut stack: Vec<CellId> = self.coboundary(v).iter().map(|x| x.0).collect();
            while let Some(c) = stack.pop() {
                if star.insert(c) {
                    stack.extend(self.coboundary(c).iter().map(|x| x.0));
                }
            }
            for &c in &star {
                let d = self.dim(c);
                if d < 2 {
                    continue;
                }
                let es = edges_at(c);
                if es.len() != d {
                    return Err(Error::invalid(format!(
                        "cell {c} meets vertex {v} in {} edges, expected {d}",
                        es.len()
                    )));
                }
                if d == 2 && !link_edges.insert((es[0], es[1])) {
                    return Err(Error::invalid(format!(
                        "link of vertex {v} has a double edge: not CAT(0)"
                    )));
                }
                if d == 3 && !link_triangles.insert(es) {
                    return Err(Error::invalid(format!(
                        "link of vertex {v} has a repeated triangle: not CAT(0)"
                    )));
                }
            }
            let mut adj: BTreeMap<CellId, BTreeSet<CellId>> = BTreeMap::new();
            for &(a, b) in &link_edges {
                adj.entry(a).or_default().insert(b);
                adj.entry(b).or_default().insert(a);
            }
            for (&a, na) in &adj {
                for &b in na.range(a..) {
                    if b == a {
                        continue;
                    }
                    for &c in adj[&b].range(b..) {
                        if c != b && na.contains(&c) && !link_triangles.contains(&vec![a, b, c]) {
                            return Err(Error::invalid(format!(
                                "link of vertex {v} is not flag (empty triangle on edges {a}, {b}, {c}): not CAT(0)"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

}
