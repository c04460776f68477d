//! Immutable compressed adjacency.

use std::io::{Read, Write};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CLG1";

/// Simple undirected graph in compressed sparse row form. Neighbor lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
}

impl SparseGraph {
    /// Builds a graph from undirected edges. Loops and repeated edges are rejected.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        if n > u32::MAX as usize {
            return Err(Error::invalid(format!(
                "at most {} vertices are supported",
                u32::MAX
            )));
        }
        let mut deg = vec![0usize; n + 1];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at {u}")));
            }
            deg[u as usize + 1] += 1;
            deg[v as usize + 1] += 1;
        }
        for i in 0..n {
            deg[i + 1] += deg[i];
        }
        let offsets = deg;
        let mut fill = offsets.clone();
        let mut neighbors = vec![0u32; offsets[n]];
        for &(u, v) in edges {
            neighbors[fill[u as usize]] = v;
            fill[u as usize] += 1;
            neighbors[fill[v as usize]] = u;
            fill[v as usize] += 1;
        }
        for v in 0..n {
            let row = &mut neighbors[offsets[v]..offsets[v + 1]];
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid(format!("repeated edge at vertex {v}")));
            }
        }
        Ok(SparseGraph { offsets, neighbors })
    }

    pub fn empty(n: usize) -> Self {
        SparseGraph {
            offsets: vec![0; n + 1],
            neighbors: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn m(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v as usize > u)
                .map(move |&v| (u as u32, v))
        })
    }

    pub fn mean_degree(&self) -> f64 {
        if self.n() == 0 {
            0.0
        } else {
            2.0 * self.m() as f64 / self.n() as f64
        }
    }

    /// Verifies symmetry, absence of loops and repeated edges, and the degree sum.
    pub fn check_structure(&self) -> Result<()> {
        let n = self.n();
        if self.neighbors.len() % 2 != 0 {
            return Err(Error::InvariantViolation("odd total degree".into()));
        }
        for u in 0..n {
            let row = self.neighbors(u);
            for (k, &v) in row.iter().enumerate() {
                if v as usize >= n {
                    return Err(Error::InvariantViolation(format!(
                        "neighbor {v} of {u} out of range"
                    )));
                }
                if v as usize == u {
                    return Err(Error::InvariantViolation(format!("self-loop at {u}")));
                }
                if k > 0 && row[k - 1] >= v {
                    return Err(Error::InvariantViolation(format!(
                        "row {u} unsorted or repeated"
                    )));
                }
                if !self.has_edge(v as usize, u) {
                    return Err(Error::InvariantViolation(format!(
                        "edge ({u}, {v}) not symmetric"
                    )));
                }
            }
        }
        Ok(())
    }

    /// True when every edge of `self` is an edge of `other` (same vertex labels).
    pub fn is_subgraph_of(&self, other: &SparseGraph) -> bool {
        self.n() <= other.n()
            && self
                .edges()
                .all(|(u, v)| other.has_edge(u as usize, v as usize))
    }

    /// Writes `u,v` rows, zero-based, one per undirected edge.
    pub fn write_edge_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "u,v")?;
        for (u, v) in self.edges() {
            writeln!(out, "{u},{v}")?;
        }
        Ok(())
    }

    /// Binary layout: `CLG1`, then little-endian u64 `n`, `m`, the `n+1`
    /// offsets and the `2m` neighbor ids.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&(self.n() as u64).to_le_bytes())?;
        out.write_all(&(self.m() as u64).to_le_bytes())?;
        for &o in &self.offsets {
            out.write_all(&(o as u64).to_le_bytes())?;
        }
        for &v in &self.neighbors {
            out.write_all(&u64::from(v).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("missing CLG1 magic bytes".into()));
        }
        let mut word = || -> Result<u64> {
            let mut b = [0u8; 8];
            input.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let n = word()? as usize;
        let m = word()? as usize;
        let mut offsets = Vec::with_capacity(n + 1);
        for _ in 0..=n {
            offsets.push(word()? as usize);
        }
        let mut neighbors = Vec::with_capacity(2 * m);
        for _ in 0..2 * m {
            let v = word()?;
            neighbors.push(
                u32::try_from(v)
                    .map_err(|_| Error::Format(format!("neighbor id {v} too large")))?,
            );
        }
        if offsets.first() != Some(&0)
            || offsets.last() != Some(&(2 * m))
            || offsets.windows(2).any(|w| w[0] > w[1])
        {
            return Err(Error::Format("inconsistent offsets".into()));
        }
        let g = SparseGraph { offsets, neighbors };
        g.check_structure()
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(g)
    }
}
