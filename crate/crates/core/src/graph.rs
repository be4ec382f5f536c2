//! Simple connected undirected graphs and their combinatorial Laplacians.
//!
//! Vertices are 0-based. Every constructor checks the graph is simple and
//! connected; disconnected input is rejected rather than reduced to a
//! component, since `n` enters every normalisation downstream.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::io::BufRead;
use std::path::PathBuf;
use std::str::FromStr;

use faer::Mat;
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;

/// Largest vertex count for which a dense Laplacian is materialised.
pub const DEFAULT_DENSE_CAP: usize = 8192;

/// Seed-increment retries allowed when a small-world draw is disconnected.
pub const SMALL_WORLD_RETRIES: u64 = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    /// Sorted, each pair stored as `(u, v)` with `u < v`.
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph over vertices `0..n` from an edge list. Duplicate
    /// edges (in either orientation) are merged.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Graph> {
        if n < 2 {
            return Err(Error::InvalidSize(format!("graph needs at least 2 vertices, got {n}")));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at vertex {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{n}"
                )));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &edges {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let g = Graph { n, edges, neighbors };
        g.check_connected()?;
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    fn check_connected(&self) -> Result<()> {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        match seen.iter().position(|&s| !s) {
            None => Ok(()),
            Some(unreachable) => Err(Error::Disconnected { from: 0, unreachable }),
        }
    }

    /// `L f` computed from the edge list, without forming `L`.
    pub fn laplacian_apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(self.n, f.len())?;
        Ok((0..self.n)
            .map(|i| {
                let s: f64 = self.neighbors[i].iter().map(|&j| f[j]).sum();
                self.degree(i) as f64 * f[i] - s
            })
            .collect())
    }

    /// Euclidean quadratic form `Σ_{edges} (f(u) − f(v))²`, i.e. `<f, L f>`.
    pub fn dirichlet_energy(&self, f: &[f64]) -> Result<f64> {
        Error::check_len(self.n, f.len())?;
        Ok(self.edges.iter().map(|&(u, v)| (f[u] - f[v]).powi(2)).sum())
    }

    /// Dense `L = D − A`, subject to [`DEFAULT_DENSE_CAP`].
    pub fn laplacian(&self) -> Result<Mat<f64>> {
        self.laplacian_with_cap(DEFAULT_DENSE_CAP)
    }

    pub fn laplacian_with_cap(&self, cap: usize) -> Result<Mat<f64>> {
        if self.n > cap {
            return Err(Error::DenseCapExceeded { n: self.n, cap });
        }
        let mut l = Mat::<f64>::zeros(self.n, self.n);
        for i in 0..self.n {
            l[(i, i)] = self.degree(i) as f64;
        }
        for &(u, v) in &self.edges {
            l[(u, v)] = -1.0;
            l[(v, u)] = -1.0;
        }
        Ok(l)
    }
}

/// Path graph `0 − 1 − … − (n−1)`.
pub fn build_path(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("path needs n >= 2, got {n}")));
    }
    Graph::from_edges(n, (0..n - 1).map(|i| (i, i + 1)))
}

/// Cartesian product of paths, flattened row-major (last coordinate fastest).
pub fn build_grid(dims: &[usize]) -> Result<Graph> {
    if dims.is_empty() || dims.iter().any(|&d| d < 2) {
        return Err(Error::InvalidSize(format!("grid dims must be non-empty and >= 2, got {dims:?}")));
    }
    lattice(dims, false)
}

/// Cartesian product of cycles.
pub fn build_torus(dims: &[usize]) -> Result<Graph> {
    if dims.is_empty() || dims.iter().any(|&d| d < 3) {
        return Err(Error::InvalidSize(format!("torus dims must be non-empty and >= 3, got {dims:?}")));
    }
    lattice(dims, true)
}

fn lattice(dims: &[usize], wrap: bool) -> Result<Graph> {
    let n = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::InvalidSize(format!("grid {dims:?} overflows the vertex count")))?;
    // stride of axis k in the row-major flattening
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let mut edges = Vec::new();
    for v in 0..n {
        for (&d, &stride) in dims.iter().zip(&strides) {
            let coord = (v / stride) % d;
            if coord + 1 < d {
                edges.push((v, v + stride));
            } else if wrap {
                edges.push((v, v - coord * stride));
            }
        }
    }
    Graph::from_edges(n, edges)
}

/// A Watts–Strogatz draw together with the seed that produced a connected
/// graph.
#[derive(Debug, Clone)]
pub struct SmallWorld {
    pub graph: Graph,
    pub seed_used: u64,
}

/// Watts–Strogatz: ring lattice where each vertex joins its `k` nearest
/// neighbours, then each lattice edge `(i, i+s)` is rewired with probability
/// `p` to `(i, w)` for a uniformly random `w` that is neither `i` nor already
/// adjacent to `i`. Disconnected draws are retried with `seed + 1`.
pub fn build_small_world(n: usize, k: usize, p: f64, seed: u64) -> Result<SmallWorld> {
    if k == 0 || k % 2 != 0 {
        return Err(Error::InvalidParameter(format!("k must be even and positive, got {k}")));
    }
    if k >= n {
        return Err(Error::InvalidParameter(format!("k must be < n, got k = {k}, n = {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p must lie in [0, 1], got {p}")));
    }
    for attempt in 0..SMALL_WORLD_RETRIES {
        let seed_used = seed.wrapping_add(attempt);
        let edges = watts_strogatz_edges(n, k, p, seed_used);
        match Graph::from_edges(n, edges) {
            Ok(graph) => return Ok(SmallWorld { graph, seed_used }),
            Err(Error::Disconnected { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ConstructionFailed(format!(
        "no connected small-world graph after {SMALL_WORLD_RETRIES} seeds starting at {seed}"
    )))
}

fn watts_strogatz_edges(n: usize, k: usize, p: f64, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = rng::seeded(seed);
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for i in 0..n {
        for s in 1..=k / 2 {
            let j = (i + s) % n;
            adj[i].insert(j);
            adj[j].insert(i);
        }
    }
    for s in 1..=k / 2 {
        for i in 0..n {
            let j = (i + s) % n;
            if !adj[i].contains(&j) || rng.random::<f64>() >= p {
                continue;
            }
            if adj[i].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != i && !adj[i].contains(&w) {
                    break w;
                }
            };
            adj[i].remove(&j);
            adj[j].remove(&i);
            adj[i].insert(w);
            adj[w].insert(i);
        }
    }
    adj.iter()
        .enumerate()
        .flat_map(|(u, set)| set.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
        .collect()
}

/// Reads `u v` lines; `#` comments and blank lines are skipped. The vertex
/// set is `0..=max_id`.
pub fn load_edge_list(reader: impl BufRead) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut max_id = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected two vertex ids, found {} tokens", tokens.len()),
            });
        }
        let parse = |t: &str| {
            t.parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("'{t}' is not a non-negative integer"),
            })
        };
        let (u, v) = (parse(tokens[0])?, parse(tokens[1])?);
        if u == v {
            return Err(Error::Parse { line: line_no, message: format!("self-loop at vertex {u}") });
        }
        max_id = max_id.max(u).max(v);
        edges.push((u, v));
    }
    if edges.is_empty() {
        return Err(Error::InvalidSize("edge list contains no edges".into()));
    }
    Graph::from_edges(max_id + 1, edges)
}

/// One-line graph description: `path:N`, `grid:AxB[xC…]`, `torus:AxB[…]`,
/// `ws:N,K,P,SEED` or `file:PATH`.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSpec {
    Path(usize),
    Grid(Vec<usize>),
    Torus(Vec<usize>),
    SmallWorld { n: usize, k: usize, p: f64, seed: u64 },
    File(PathBuf),
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph> {
        match self {
            GraphSpec::Path(n) => build_path(*n),
            GraphSpec::Grid(dims) => build_grid(dims),
            GraphSpec::Torus(dims) => build_torus(dims),
            GraphSpec::SmallWorld { n, k, p, seed } => build_small_world(*n, *k, *p, *seed).map(|w| w.graph),
            GraphSpec::File(path) => {
                let file = std::fs::File::open(path).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                load_edge_list(std::io::BufReader::new(file))
            }
        }
    }

    /// The geometry exponent known by construction (the lattice dimension),
    /// or `None` when it has to be fitted from the spectrum.
    pub fn known_r(&self) -> Option<f64> {
        match self {
            GraphSpec::Path(_) => Some(1.0),
            GraphSpec::Grid(dims) | GraphSpec::Torus(dims) => Some(dims.len() as f64),
            GraphSpec::SmallWorld { .. } | GraphSpec::File(_) => None,
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |dims: &[usize]| dims.iter().map(usize::to_string).collect::<Vec<_>>().join("x");
        match self {
            GraphSpec::Path(n) => write!(f, "path:{n}"),
            GraphSpec::Grid(d) => write!(f, "grid:{}", join(d)),
            GraphSpec::Torus(d) => write!(f, "torus:{}", join(d)),
            GraphSpec::SmallWorld { n, k, p, seed } => write!(f, "ws:{n},{k},{p},{seed}"),
            GraphSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<GraphSpec> {
        let bad = |why: &str| Error::InvalidParameter(format!("bad graph spec '{s}': {why}"));
        let (kind, rest) = s.split_once(':').ok_or_else(|| bad("expected KIND:ARGS"))?;
        let int = |t: &str| t.trim().parse::<usize>().map_err(|_| bad(&format!("'{t}' is not an integer")));
        let dims = |t: &str| t.split('x').map(int).collect::<Result<Vec<_>>>();
        match kind {
            "path" => Ok(GraphSpec::Path(int(rest)?)),
            "grid" => Ok(GraphSpec::Grid(dims(rest)?)),
            "torus" => Ok(GraphSpec::Torus(dims(rest)?)),
            "ws" => {
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() != 4 {
                    return Err(bad("ws takes N,K,P,SEED"));
                }
                let p = parts[2].trim().parse::<f64>().map_err(|_| bad("P is not a number"))?;
                let seed = parts[3].trim().parse::<u64>().map_err(|_| bad("SEED is not an integer"))?;
                Ok(GraphSpec::SmallWorld { n: int(parts[0])?, k: int(parts[1])?, p, seed })
            }
            "file" if !rest.is_empty() => Ok(GraphSpec::File(PathBuf::from(rest))),
            _ => Err(bad("unknown graph kind")),
        }
    }
}
