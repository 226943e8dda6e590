//! Complete weighted graph over the queued jobs.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Symmetric complete graph on `n` vertices with one payload per unordered edge.
///
/// Edges are stored in row order `(0,1), (0,2), ..., (1,2), ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGraph<T = f64, D = ()> {
    n: usize,
    weights: Vec<T>,
    decisions: Vec<D>,
}

/// Number of unordered pairs on `n` vertices.
pub fn edge_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

impl<T: Scalar, D> PairGraph<T, D> {
    /// Builds the graph from per-edge `(weight, payload)` values in row order.
    pub fn from_edges(n: usize, edges: Vec<(T, D)>) -> Result<Self> {
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidGraph(format!("vertex count must be even, got {n}")));
        }
        if edges.len() != edge_count(n) {
            return Err(Error::InvalidGraph(format!(
                "{n} vertices need {} edges, got {}",
                edge_count(n),
                edges.len()
            )));
        }
        let mut weights = vec![T::zero(); n * n];
        let mut decisions = Vec::with_capacity(edges.len());
        let mut it = edges.into_iter();
        for i in 0..n {
            for j in i + 1..n {
                let (w, d) = it.next().expect("edge count checked");
                if !w.is_finite() || w < T::zero() {
                    return Err(Error::InvalidGraph(format!("weight ({i},{j}) = {w} is not finite and >= 0")));
                }
                weights[i * n + j] = w;
                weights[j * n + i] = w;
                decisions.push(d);
            }
        }
        Ok(Self { n, weights, decisions })
    }

    /// Builds the graph by evaluating `f(i, j)` for each `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> (T, D)) -> Result<Self> {
        let mut edges = Vec::with_capacity(edge_count(n));
        for i in 0..n {
            for j in i + 1..n {
                edges.push(f(i, j));
            }
        }
        Self::from_edges(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> T {
        self.weights[i * self.n + j]
    }

    /// Row-order index of edge `{i, j}`.
    pub fn edge_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        debug_assert!(i != j && j < self.n);
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn decision(&self, i: usize, j: usize) -> &D {
        &self.decisions[self.edge_index(i, j)]
    }

    /// `(i, j, weight, payload)` for every edge in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, T, &D)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
            .zip(&self.decisions)
            .map(|((i, j), d)| (i, j, self.weight(i, j), d))
    }

    /// Copy of the graph with every weight mapped through `f`.
    pub fn map_weights(&self, f: impl Fn(T) -> T) -> Result<Self>
    where
        D: Clone,
    {
        Self::from_edges(self.n, self.edges().map(|(_, _, w, d)| (f(w), d.clone())).collect())
    }

    /// Debug dump with columns `i, j, weight, corun_flag`.
    pub fn write_csv<Wr: Write>(&self, out: Wr, corun_flag: impl Fn(&D) -> bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "weight", "corun_flag"])?;
        for (i, j, weight, d) in self.edges() {
            w.write_record([
                i.to_string(),
                j.to_string(),
                weight.to_string(),
                u8::from(corun_flag(d)).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl<T: Scalar> PairGraph<T, ()> {
    /// Builds a payload-free graph from a full matrix, checking symmetry.
    pub fn from_matrix(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::InvalidGraph(format!("row {bad} has {} entries, expected {n}", rows[bad].len())));
        }
        for i in 0..n {
            for j in i + 1..n {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::InvalidGraph(format!("weights ({i},{j}) and ({j},{i}) differ")));
                }
            }
        }
        Self::from_fn(n, |i, j| (rows[i][j], ()))
    }
}
