//! Measurement graphs: construction, Laplacians, connectivity and spectral summaries.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, lanczos_extremal, seeded_rng, LanczosOptions, Which};
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Dense eigensolver is used up to this many vertices.
pub const DENSE_LAPLACIAN_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Weighted undirected graph on vertices `0..n`. Immutable once built.
///
/// Edges are stored with `i < j`, without duplicates, and with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    // (neighbor, weight, edge index) per vertex
    adjacency: Vec<Vec<(usize, f64, usize)>>,
}

impl Graph {
    /// Builds a graph from edges given in either orientation.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("graph needs at least one vertex"));
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::param(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(Error::param(format!("self-loop at vertex {a}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::param(format!("edge ({a}, {b}) has non-positive weight {w}")));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((i, j)) {
                return Err(Error::param(format!("duplicate edge ({i}, {j})")));
            }
            out.push(Edge { i, j, w });
        }
        Ok(Self::from_checked(n, out))
    }

    fn from_checked(n: usize, mut edges: Vec<Edge>) -> Self {
        edges.sort_by_key(|e| (e.i, e.j));
        let mut adjacency = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.i].push((e.j, e.w, k));
            adjacency[e.j].push((e.i, e.w, k));
        }
        Self { n, edges, adjacency }
    }

    pub fn complete(n: usize) -> Result<Self> {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, 1.0)));
        Self::new(n, edges)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        match n {
            0 => Err(Error::param("cycle needs at least one vertex")),
            1 => Self::new(1, []),
            2 => Self::new(2, [(0, 1, 1.0)]),
            _ => Self::new(n, (0..n).map(|i| (i, (i + 1) % n, 1.0))),
        }
    }

    /// Circulant graph where vertex `i` is joined to `i +- 1, ..., i +- degree/2` (mod n).
    pub fn circulant(n: usize, degree: usize) -> Result<Self> {
        if !degree.is_multiple_of(2) || degree >= n {
            return Err(Error::param(format!(
                "circulant degree must be even and smaller than n (got degree {degree}, n {n})"
            )));
        }
        let edges = (0..n).flat_map(move |i| (1..=degree / 2).map(move |k| (i, (i + k) % n, 1.0)));
        Self::new(n, edges)
    }

    /// G(n, q): each pair present independently with probability `q`.
    pub fn erdos_renyi(n: usize, q: f64, seed: u64) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::param(format!("edge probability must lie in (0, 1], got {q}")));
        }
        let mut rng = seeded_rng(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < q {
                    edges.push((i, j, 1.0));
                }
            }
        }
        Self::new(n, edges)
    }

    /// Parses `i j [w]` rows; `#` starts a comment. The vertex count is one more than
    /// the largest index seen.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut seen = HashSet::new();
        let mut max_index = 0usize;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let line_no = lineno + 1;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 && toks.len() != 3 {
                return Err(Error::parse(line_no, format!("expected `i j [w]`, got `{line}`")));
            }
            let idx = |t: &str| {
                t.parse::<usize>()
                    .map_err(|_| Error::parse(line_no, format!("bad vertex index `{t}`")))
            };
            let i = idx(toks[0])?;
            let j = idx(toks[1])?;
            let w = match toks.get(2) {
                Some(t) => t
                    .parse::<f64>()
                    .map_err(|_| Error::parse(line_no, format!("bad weight `{t}`")))?,
                None => 1.0,
            };
            if i == j {
                return Err(Error::parse(line_no, format!("self-loop at vertex {i}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::parse(line_no, format!("non-positive weight {w}")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::parse(line_no, format!("duplicate edge ({i}, {j})")));
            }
            max_index = max_index.max(i).max(j);
            rows.push((i, j, w));
        }
        if rows.is_empty() {
            return Err(Error::parse(0, "edge list contains no edges"));
        }
        Self::new(max_index + 1, rows)
    }

    pub fn read_edge_list(path: &Path) -> Result<Self> {
        Self::parse_edge_list(&crate::error::read_file(path)?)
    }

    /// Edge-list text with full round-trip precision; unit weights are omitted.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for e in &self.edges {
            if e.w == 1.0 {
                let _ = writeln!(s, "{} {}", e.i, e.j);
            } else {
                let _ = writeln!(s, "{} {} {:?}", e.i, e.j, e.w);
            }
        }
        s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `(neighbor, weight, edge index)` triples for vertex `i`.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64, usize)] {
        &self.adjacency[i]
    }

    /// Number of incident edges.
    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn weighted_degree(&self, i: usize) -> f64 {
        self.adjacency[i].iter().map(|&(_, w, _)| w).sum()
    }

    pub fn max_weighted_degree(&self) -> f64 {
        (0..self.n).map(|i| self.weighted_degree(i)).fold(0.0, f64::max)
    }

    /// Index of edge `{i, j}` in [`Graph::edges`], if present.
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.edges.binary_search_by_key(&(a, b), |e| (e.i, e.j)).ok()
    }

    /// Dense unnormalized Laplacian `diag(A 1) - A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            l[(e.i, e.i)] += e.w;
            l[(e.j, e.j)] += e.w;
            l[(e.i, e.j)] -= e.w;
            l[(e.j, e.i)] -= e.w;
        }
        l
    }

    /// `L x` without materializing `L`.
    pub fn laplacian_apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = DMatrix::zeros(x.nrows(), x.ncols());
        for e in &self.edges {
            for c in 0..x.ncols() {
                let d = e.w * (x[(e.i, c)] - x[(e.j, c)]);
                y[(e.i, c)] += d;
                y[(e.j, c)] -= d;
            }
        }
        y
    }

    /// Whether every vertex is reachable from vertex 0.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &(u, _, _) in &self.adjacency[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == self.n
    }

    /// Fiedler value, spectral norm and connectivity of the Laplacian.
    pub fn laplacian_summary(&self) -> Result<LaplacianSummary> {
        let connected = self.is_connected();
        if self.n == 1 {
            return Ok(LaplacianSummary {
                lambda2: 0.0,
                lambda_max: 0.0,
                connected,
            });
        }
        let (lambda2, lambda_max) = if self.n <= DENSE_LAPLACIAN_LIMIT {
            let (vals, _) = hermitian_eigen(&self.laplacian());
            (vals[1].max(0.0), vals[self.n - 1])
        } else {
            self.iterative_spectrum()?
        };
        let numeric = lambda2 > 1e-8 * lambda_max.max(1.0);
        if numeric != connected {
            log::warn!("spectral connectivity (lambda2 = {lambda2:e}) disagrees with graph traversal ({connected})");
        }
        Ok(LaplacianSummary {
            lambda2,
            lambda_max,
            connected,
        })
    }

    // Lanczos on L for the top of the spectrum, and on L + c 11^T/n (c above the
    // spectrum) for the bottom, so the constant vector is pushed out of the way.
    fn iterative_spectrum(&self) -> Result<(f64, f64)> {
        let n = self.n;
        let mut rng = seeded_rng(0x5eed);
        let start = DMatrix::from_fn(n, 1, |_, _| rng.random::<f64>() - 0.5);
        let bound = 2.0 * self.max_weighted_degree();
        let shift = bound.max(1.0);
        let opts = LanczosOptions {
            max_krylov: 200,
            max_restarts: 200,
            tol: 1e-9 * shift,
        };
        let hi = lanczos_extremal(|x| self.laplacian_apply(x), start.clone(), Which::Largest, &opts)?;
        let shifted = |x: &DMatrix<f64>| {
            let mean = x.sum() / n as f64;
            self.laplacian_apply(x).map(|v| v + shift * mean)
        };
        let lo = lanczos_extremal(shifted, start, Which::Smallest, &opts)?;
        Ok((lo.value.clamp(0.0, shift), hi.value))
    }
}

/// Spectral connectivity quantities of a graph Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplacianSummary {
    pub lambda2: f64,
    pub lambda_max: f64,
    pub connected: bool,
}

/// Declarative graph description used by configs and [`build_graph`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    Complete { n: usize },
    Cycle { n: usize },
    Circulant { n: usize, degree: usize },
    ErdosRenyi { n: usize, q: f64 },
    EdgeList { path: PathBuf },
}

/// Builds a graph of the requested family. Only `ErdosRenyi` consumes the seed.
pub fn build_graph(spec: &GraphSpec, seed: u64) -> Result<Graph> {
    match spec {
        GraphSpec::Complete { n } => Graph::complete(*n),
        GraphSpec::Cycle { n } => Graph::cycle(*n),
        GraphSpec::Circulant { n, degree } => Graph::circulant(*n, *degree),
        GraphSpec::ErdosRenyi { n, q } => Graph::erdos_renyi(*n, *q, seed),
        GraphSpec::EdgeList { path } => Graph::read_edge_list(path),
    }
}
