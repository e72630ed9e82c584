//! Compact metric graphs.
//!
//! Every edge `e` is identified with the interval `[0, l_e]`; the edge is
//! traversed from its `start` vertex (x = 0) to its `end` vertex (x = l_e).
//! Boundary values are indexed by [`EdgeEnd`]: index `e` is the start of edge
//! `e`, index `E + e` its end.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub start: usize,
    pub end: usize,
    pub length: f64,
}

/// Which end of an edge a boundary value belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeEnd {
    Start(usize),
    End(usize),
}

impl EdgeEnd {
    /// Position in the boundary-value vector of a graph with `edge_count` edges.
    pub fn index(self, edge_count: usize) -> usize {
        match self {
            EdgeEnd::Start(e) => e,
            EdgeEnd::End(e) => edge_count + e,
        }
    }

    pub fn from_index(index: usize, edge_count: usize) -> EdgeEnd {
        if index < edge_count {
            EdgeEnd::Start(index)
        } else {
            EdgeEnd::End(index - edge_count)
        }
    }
}

/// A finite, connected metric graph with finite positive edge lengths.
///
/// Loops and parallel edges are allowed. The value is immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
}

impl MetricGraph {
    pub fn new(vertex_count: usize, edges: Vec<Edge>) -> Result<Self> {
        if vertex_count == 0 || edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        for (i, e) in edges.iter().enumerate() {
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::NonPositiveLength {
                    edge: i,
                    length: e.length,
                });
            }
            for v in [e.start, e.end] {
                if v >= vertex_count {
                    return Err(Error::DanglingEndpoint {
                        edge: i,
                        vertex: v,
                        vertex_count,
                    });
                }
            }
        }
        let g = MetricGraph {
            vertex_count,
            edges,
        };
        if !g.is_connected() {
            return Err(Error::DisconnectedGraph);
        }
        Ok(g)
    }

    /// Convenience constructor from `(start, end, length)` triples.
    pub fn from_triples(vertex_count: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let edges = edges
            .iter()
            .map(|&(start, end, length)| Edge { start, end, length })
            .collect();
        Self::new(vertex_count, edges)
    }

    /// Single edge `[0, length]` between two vertices.
    pub fn interval(length: f64) -> Result<Self> {
        Self::from_triples(2, &[(0, 1, length)])
    }

    /// One vertex carrying a single loop edge.
    pub fn loop_graph(length: f64) -> Result<Self> {
        Self::from_triples(1, &[(0, 0, length)])
    }

    /// Star with centre vertex 0 and `arms` pendant vertices, every edge
    /// running from the centre outwards.
    pub fn star(arms: usize, length: f64) -> Result<Self> {
        let edges: Vec<_> = (1..=arms).map(|v| (0, v, length)).collect();
        Self::from_triples(arms + 1, &edges)
    }

    fn is_connected(&self) -> bool {
        let mut adjacency = vec![Vec::new(); self.vertex_count];
        for e in &self.edges {
            adjacency[e.start].push(e.end);
            adjacency[e.end].push(e.start);
        }
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Dimension of the boundary-value space, `2E`.
    pub fn boundary_dim(&self) -> usize {
        2 * self.edges.len()
    }

    /// Graph with every length multiplied by `eta`.
    pub fn scale(&self, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::NonPositiveScale(eta));
        }
        Ok(MetricGraph {
            vertex_count: self.vertex_count,
            edges: self
                .edges
                .iter()
                .map(|e| Edge {
                    length: e.length * eta,
                    ..*e
                })
                .collect(),
        })
    }

    /// Total length, i.e. the volume of the one-particle configuration space.
    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.length)
            .fold(f64::INFINITY, f64::min)
    }

    /// Boundary-value indices attached to `vertex`. A loop contributes two.
    pub fn ends_at(&self, vertex: usize) -> Vec<usize> {
        let n = self.edges.len();
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.start == vertex {
                out.push(EdgeEnd::Start(i).index(n));
            }
            if e.end == vertex {
                out.push(EdgeEnd::End(i).index(n));
            }
        }
        out
    }

    pub fn degree(&self, vertex: usize) -> usize {
        self.ends_at(vertex).len()
    }
}
