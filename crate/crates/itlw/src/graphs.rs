//! Max-Cut problem instances: random generation, JSON serialization, and an
//! exact brute-force solver that supplies the ground-truth `C_max`.
//!
//! Assignments are bitstrings over vertices: entry `i` is the side of vertex
//! `i`. When an assignment is packed into a basis index `z`, bit `i` of `z`
//! is the side of vertex `i` (vertex 0 is the least significant bit), which
//! matches the computational-basis ordering used by the simulator.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vertex-count guard for the exponential brute-force solver.
pub const MAX_BRUTE_FORCE_VERTICES: usize = 24;

const REGULAR_RETRY_LIMIT: u64 = 100_000;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge ({u}, {v}) is invalid for {n} vertices: {reason}")]
    InvalidEdge {
        u: usize,
        v: usize,
        n: usize,
        reason: &'static str,
    },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("assignment has length {got}, expected {expected}")]
    AssignmentLength { got: usize, expected: usize },
    #[error("assignment entries must be 0 or 1")]
    AssignmentValue,
    #[error("{n} vertices exceeds the brute-force limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("graph needs at least {min} vertices, got {got}")]
    TooSmall { got: usize, min: usize },
    #[error("no {degree}-regular graph on {n} vertices: need n*degree even and degree < n")]
    InfeasibleRegular { n: usize, degree: usize },
    #[error("edge probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("pairing model failed to produce a simple graph after {0} attempts")]
    RetryLimit(u64),
    #[error("unknown graph class '{0}'")]
    UnknownClass(String),
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
}

/// Provenance tag for a graph instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphClass {
    Regular3,
    Regular4,
    ErdosRenyi(f64),
    Custom,
}

impl fmt::Display for GraphClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphClass::Regular3 => write!(f, "regular-3"),
            GraphClass::Regular4 => write!(f, "regular-4"),
            GraphClass::ErdosRenyi(p) => write!(f, "erdos-renyi({p})"),
            GraphClass::Custom => write!(f, "custom"),
        }
    }
}

impl FromStr for GraphClass {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "regular-3" => Ok(GraphClass::Regular3),
            "regular-4" => Ok(GraphClass::Regular4),
            "custom" => Ok(GraphClass::Custom),
            _ => {
                let inner = s
                    .strip_prefix("erdos-renyi(")
                    .and_then(|rest| rest.strip_suffix(')'))
                    .ok_or_else(|| GraphError::UnknownClass(s.to_string()))?;
                let p: f64 = inner
                    .parse()
                    .map_err(|_| GraphError::UnknownClass(s.to_string()))?;
                Ok(GraphClass::ErdosRenyi(p))
            }
        }
    }
}

impl GraphClass {
    /// Short slug used in graph ids and file names.
    pub fn slug(&self) -> String {
        match self {
            GraphClass::Regular3 => "reg3".to_string(),
            GraphClass::Regular4 => "reg4".to_string(),
            GraphClass::ErdosRenyi(p) => format!("er{p}"),
            GraphClass::Custom => "custom".to_string(),
        }
    }
}

/// An undirected, unweighted graph with canonically ordered edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
    class: GraphClass,
    seed: u64,
}

/// Exact Max-Cut optimum together with one witness assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutSolution {
    pub c_max: u32,
    /// One side assignment achieving `c_max`; entry `i` is the side of
    /// vertex `i`. Lexicographically smallest among all maximizers.
    pub witness: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<(usize, usize)>,
    class: String,
    seed: u64,
}

impl Graph {
    /// Build a graph from an edge list, normalizing edge orientation and
    /// order. Rejects self-loops, out-of-range endpoints, and duplicates.
    pub fn new(
        n_vertices: usize,
        edges: Vec<(usize, usize)>,
        class: GraphClass,
        seed: u64,
    ) -> Result<Self, GraphError> {
        if n_vertices == 0 {
            return Err(GraphError::TooSmall { got: 0, min: 1 });
        }
        let mut canonical = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if a == b {
                return Err(GraphError::InvalidEdge {
                    u: a,
                    v: b,
                    n: n_vertices,
                    reason: "self-loop",
                });
            }
            if v >= n_vertices {
                return Err(GraphError::InvalidEdge {
                    u,
                    v,
                    n: n_vertices,
                    reason: "endpoint out of range",
                });
            }
            canonical.push((u, v));
        }
        canonical.sort_unstable();
        for w in canonical.windows(2) {
            if w[0] == w[1] {
                return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
            }
        }
        Ok(Graph {
            n_vertices,
            edges: canonical,
            class,
            seed,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn class(&self) -> GraphClass {
        self.class
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stable identifier, e.g. `reg3-n10-s7`.
    pub fn id(&self) -> String {
        format!("{}-n{}-s{}", self.class.slug(), self.n_vertices, self.seed)
    }

    pub fn degree_sequence(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n_vertices];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        if self.n_vertices <= 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n_vertices];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = vec![false; self.n_vertices];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut visited = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    visited += 1;
                    stack.push(v);
                }
            }
        }
        visited == self.n_vertices
    }

    /// Number of edges cut by the given side assignment.
    pub fn cut_value(&self, assignment: &[u8]) -> Result<u32, GraphError> {
        if assignment.len() != self.n_vertices {
            return Err(GraphError::AssignmentLength {
                got: assignment.len(),
                expected: self.n_vertices,
            });
        }
        if assignment.iter().any(|&b| b > 1) {
            return Err(GraphError::AssignmentValue);
        }
        Ok(self
            .edges
            .iter()
            .filter(|&&(u, v)| assignment[u] != assignment[v])
            .count() as u32)
    }

    /// Cut value of the assignment packed into basis index `z` (bit `i` of
    /// `z` is the side of vertex `i`).
    pub fn cut_value_index(&self, z: usize) -> u32 {
        self.edges
            .iter()
            .map(|&(u, v)| (((z >> u) ^ (z >> v)) & 1) as u32)
            .sum()
    }

    /// Exhaustive Max-Cut solver. Scans the 2^(n-1) assignments with vertex 0
    /// on side 0 (the complement of a cut is the same cut) in lexicographic
    /// order and keeps the first maximizer, so the witness is deterministic.
    pub fn max_cut_brute_force(&self) -> Result<CutSolution, GraphError> {
        let n = self.n_vertices;
        if n > MAX_BRUTE_FORCE_VERTICES {
            return Err(GraphError::TooLarge {
                n,
                limit: MAX_BRUTE_FORCE_VERTICES,
            });
        }
        let mut best_cut = 0u32;
        let mut best_index = 0usize;
        for w in 0..(1usize << (n - 1)) {
            // Vertex j (j >= 1) takes bit (n - 1 - j) of w, so ascending w
            // enumerates assignment strings in lexicographic order.
            let mut z = 0usize;
            for j in 1..n {
                z |= ((w >> (n - 1 - j)) & 1) << j;
            }
            let cut = self.cut_value_index(z);
            if cut > best_cut {
                best_cut = cut;
                best_index = z;
            }
        }
        let witness = (0..n).map(|j| ((best_index >> j) & 1) as u8).collect();
        Ok(CutSolution {
            c_max: best_cut,
            witness,
        })
    }

    /// Write the graph as a JSON object `{"n", "edges", "class", "seed"}`.
    pub fn save(&self, path: &Path) -> Result<(), GraphError> {
        let file = GraphFile {
            n: self.n_vertices,
            edges: self.edges.clone(),
            class: self.class.to_string(),
            seed: self.seed,
        };
        let body = serde_json::to_string_pretty(&file).expect("graph serialization is infallible");
        fs::write(path, body).map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Load and validate a graph saved by [`Graph::save`].
    pub fn load(path: &Path) -> Result<Graph, GraphError> {
        let body = fs::read_to_string(path).map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: GraphFile =
            serde_json::from_str(&body).map_err(|source| GraphError::Parse {
                path: path.to_path_buf(),
                source,
            })?;
        let class = file.class.parse()?;
        Graph::new(file.n, file.edges, class, file.seed)
    }
}

fn mix_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 finalizer over the salted seed
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random simple d-regular graph via the pairing model: shuffle n*d stubs,
/// pair them up, and restart on any self-loop or duplicate edge. Each attempt
/// reseeds from (seed, attempt), so the result is a pure function of the
/// arguments.
pub fn generate_regular(n: usize, degree: usize, seed: u64) -> Result<Graph, GraphError> {
    if n * degree % 2 != 0 || degree >= n {
        return Err(GraphError::InfeasibleRegular { n, degree });
    }
    let class = match degree {
        3 => GraphClass::Regular3,
        4 => GraphClass::Regular4,
        _ => GraphClass::Custom,
    };
    'attempts: for attempt in 0..REGULAR_RETRY_LIMIT {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, attempt));
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
        stubs.shuffle(&mut rng);
        let mut edges = Vec::with_capacity(n * degree / 2);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b {
                continue 'attempts;
            }
            edges.push(if a < b { (a, b) } else { (b, a) });
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            continue 'attempts;
        }
        return Graph::new(n, edges, class, seed);
    }
    Err(GraphError::RetryLimit(REGULAR_RETRY_LIMIT))
}

/// Erdős–Rényi G(n, p): every unordered pair is included independently with
/// probability `prob`. Connectedness is not enforced; callers can check
/// [`Graph::is_connected`].
pub fn generate_erdos_renyi(n: usize, prob: f64, seed: u64) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::TooSmall { got: n, min: 2 });
    }
    if !(0.0..=1.0).contains(&prob) {
        return Err(GraphError::InvalidProbability(prob));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < prob {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges, GraphClass::ErdosRenyi(prob), seed)
}

/// The Petersen graph: outer 5-cycle, inner 5-cycle with stride 2, and
/// spokes. A standard 3-regular test instance with C_max = 12.
pub fn petersen() -> Graph {
    let mut edges = Vec::with_capacity(15);
    for i in 0..5 {
        edges.push((i, (i + 1) % 5));
        edges.push((i, i + 5));
        edges.push((5 + i, 5 + (i + 2) % 5));
    }
    Graph::new(10, edges, GraphClass::Custom, 0).expect("petersen graph is valid")
}

/// K3 on vertices {0, 1, 2}.
pub fn triangle() -> Graph {
    Graph::new(3, vec![(0, 1), (0, 2), (1, 2)], GraphClass::Custom, 0)
        .expect("triangle is valid")
}

/// The 4-cycle 0-1-2-3-0.
pub fn cycle4() -> Graph {
    Graph::new(4, vec![(0, 1), (1, 2), (2, 3), (0, 3)], GraphClass::Custom, 0)
        .expect("cycle is valid")
}

/// The complete graph on `n` vertices.
pub fn complete(n: usize) -> Graph {
    let edges = (0..n)
        .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
        .collect();
    Graph::new(n, edges, GraphClass::Custom, 0).expect("complete graph is valid")
}

/// A single edge on two vertices, the smallest nontrivial instance.
pub fn single_edge() -> Graph {
    Graph::new(2, vec![(0, 1)], GraphClass::Custom, 0).expect("edge is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: naive scan over all 2^n assignments.
    fn naive_max_cut(g: &Graph) -> u32 {
        (0..(1usize << g.n_vertices()))
            .map(|z| g.cut_value_index(z))
            .max()
            .unwrap()
    }

    #[test]
    fn cut_value_examples() {
        let k3 = triangle();
        assert_eq!(k3.cut_value(&[0, 0, 0]).unwrap(), 0);
        assert_eq!(k3.cut_value(&[0, 0, 1]).unwrap(), 2);
        let c4 = cycle4();
        assert_eq!(c4.cut_value(&[0, 1, 0, 1]).unwrap(), 4);
    }

    #[test]
    fn cut_value_length_mismatch() {
        let k3 = triangle();
        assert!(matches!(
            k3.cut_value(&[0, 1]),
            Err(GraphError::AssignmentLength { got: 2, expected: 3 })
        ));
        assert!(matches!(
            k3.cut_value(&[0, 1, 2]),
            Err(GraphError::AssignmentValue)
        ));
    }

    #[test]
    fn brute_force_known_optima() {
        assert_eq!(single_edge().max_cut_brute_force().unwrap().c_max, 1);
        assert_eq!(triangle().max_cut_brute_force().unwrap().c_max, 2);
        assert_eq!(cycle4().max_cut_brute_force().unwrap().c_max, 4);
        assert_eq!(complete(4).max_cut_brute_force().unwrap().c_max, 4);
        assert_eq!(petersen().max_cut_brute_force().unwrap().c_max, 12);
    }

    #[test]
    fn brute_force_matches_naive_enumeration() {
        for g in [triangle(), cycle4(), complete(4), petersen()] {
            assert_eq!(g.max_cut_brute_force().unwrap().c_max, naive_max_cut(&g));
        }
    }

    #[test]
    fn brute_force_witness_is_lex_smallest() {
        let sol = triangle().max_cut_brute_force().unwrap();
        assert_eq!(sol.witness, vec![0, 0, 1]);
        assert_eq!(triangle().cut_value(&sol.witness).unwrap(), sol.c_max);
    }

    #[test]
    fn brute_force_size_guard() {
        let g = Graph::new(25, vec![(0, 1)], GraphClass::Custom, 0).unwrap();
        assert!(matches!(
            g.max_cut_brute_force(),
            Err(GraphError::TooLarge { n: 25, .. })
        ));
    }

    #[test]
    fn regular_k4_is_unique() {
        for seed in [0, 1, 42] {
            let g = generate_regular(4, 3, seed).unwrap();
            assert_eq!(g.edges(), complete(4).edges());
        }
    }

    #[test]
    fn regular_edge_count_and_degrees() {
        let g = generate_regular(10, 3, 7).unwrap();
        assert_eq!(g.n_edges(), 15);
        assert!(g.degree_sequence().iter().all(|&d| d == 3));

        let g = generate_regular(12, 4, 1).unwrap();
        assert!(g.degree_sequence().iter().all(|&d| d == 4));
    }

    #[test]
    fn regular_infeasible() {
        assert!(matches!(
            generate_regular(5, 3, 0),
            Err(GraphError::InfeasibleRegular { n: 5, degree: 3 })
        ));
        assert!(matches!(
            generate_regular(4, 4, 0),
            Err(GraphError::InfeasibleRegular { .. })
        ));
    }

    #[test]
    fn regular_deterministic_per_seed() {
        let a = generate_regular(10, 3, 123).unwrap();
        let b = generate_regular(10, 3, 123).unwrap();
        assert_eq!(a, b);
        let c = generate_regular(10, 3, 124).unwrap();
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn erdos_renyi_extremes() {
        assert_eq!(generate_erdos_renyi(6, 0.0, 1).unwrap().n_edges(), 0);
        assert_eq!(generate_erdos_renyi(6, 1.0, 1).unwrap().n_edges(), 15);
    }

    #[test]
    fn erdos_renyi_deterministic() {
        let a = generate_erdos_renyi(10, 0.5, 3).unwrap();
        let b = generate_erdos_renyi(10, 0.5, 3).unwrap();
        assert_eq!(a, b);
        let m = a.n_edges();
        assert!((10..=35).contains(&m), "edge count {m} out of expected band");
    }

    #[test]
    fn erdos_renyi_invalid_inputs() {
        assert!(matches!(
            generate_erdos_renyi(1, 0.5, 0),
            Err(GraphError::TooSmall { .. })
        ));
        assert!(matches!(
            generate_erdos_renyi(5, 1.5, 0),
            Err(GraphError::InvalidProbability(_))
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        let g = generate_regular(10, 3, 7).unwrap();
        g.save(&path).unwrap();
        let back = Graph::load(&path).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn load_rejects_self_loop() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(
            &path,
            r#"{"n": 4, "edges": [[3, 3]], "class": "custom", "seed": 0}"#,
        )
        .unwrap();
        assert!(matches!(
            Graph::load(&path),
            Err(GraphError::InvalidEdge { reason: "self-loop", .. })
        ));
    }

    #[test]
    fn load_single_edge_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("edge.json");
        fs::write(
            &path,
            r#"{"n": 2, "edges": [[0, 1]], "class": "custom", "seed": 0}"#,
        )
        .unwrap();
        let g = Graph::load(&path).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
    }

    #[test]
    fn load_rejects_malformed_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.json");
        fs::write(&path, "{nope").unwrap();
        assert!(matches!(Graph::load(&path), Err(GraphError::Parse { .. })));
    }

    #[test]
    fn new_normalizes_edge_orientation() {
        let g = Graph::new(3, vec![(2, 0), (1, 0)], GraphClass::Custom, 0).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (0, 2)]);
    }

    #[test]
    fn new_rejects_duplicates() {
        assert!(matches!(
            Graph::new(3, vec![(0, 1), (1, 0)], GraphClass::Custom, 0),
            Err(GraphError::DuplicateEdge(0, 1))
        ));
    }

    #[test]
    fn class_string_round_trip() {
        for class in [
            GraphClass::Regular3,
            GraphClass::Regular4,
            GraphClass::ErdosRenyi(0.3),
            GraphClass::Custom,
        ] {
            let s = class.to_string();
            assert_eq!(s.parse::<GraphClass>().unwrap(), class);
        }
    }

    #[test]
    fn connectivity() {
        assert!(petersen().is_connected());
        assert!(!generate_erdos_renyi(6, 0.0, 1).unwrap().is_connected());
    }

    proptest! {
        #[test]
        fn cut_bounded_and_complement_symmetric(
            n in 2usize..8,
            seed in 0u64..500,
            assignment_bits in 0usize..256,
        ) {
            let g = generate_erdos_renyi(n, 0.5, seed).unwrap();
            let a: Vec<u8> = (0..n).map(|i| ((assignment_bits >> i) & 1) as u8).collect();
            let complement: Vec<u8> = a.iter().map(|&b| 1 - b).collect();
            let cut = g.cut_value(&a).unwrap();
            prop_assert!(cut as usize <= g.n_edges());
            prop_assert_eq!(cut, g.cut_value(&complement).unwrap());
        }

        #[test]
        fn brute_force_equals_full_scan(n in 2usize..7, seed in 0u64..100) {
            let g = generate_erdos_renyi(n, 0.5, seed).unwrap();
            prop_assert_eq!(g.max_cut_brute_force().unwrap().c_max, naive_max_cut(&g));
        }
    }
}
