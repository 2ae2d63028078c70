//! Sensor-network topologies, neighborhoods and anchor-rooted layers.
//!
//! A [`Graph`] stores a dense boolean adjacency over `node_count` vertices.
//! `adjacency[i][j]` means `i` can send to `j`; undirected graphs keep the
//! matrix symmetric. One vertex is the anchor (gateway) that roots the
//! layer partition and emits beacons.

use std::collections::VecDeque;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    anchor: usize,
    directed: bool,
    adjacency: Vec<bool>,
}

impl Graph {
    /// Builds a graph from an edge list. Undirected edges may be listed in
    /// either or both directions.
    pub fn from_edges(
        node_count: usize,
        anchor: usize,
        directed: bool,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidParameter("graph needs at least one node".into()));
        }
        check_index(anchor, node_count)?;
        let mut adjacency = vec![false; node_count * node_count];
        for (i, j) in edges {
            check_index(i, node_count)?;
            check_index(j, node_count)?;
            if i == j {
                return Err(Error::InvalidParameter(format!("self-loop at node {i}")));
            }
            adjacency[i * node_count + j] = true;
            if !directed {
                adjacency[j * node_count + i] = true;
            }
        }
        let g = Graph { node_count, anchor, directed, adjacency };
        g.ensure_connected()?;
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn anchor(&self) -> usize {
        self.anchor
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.node_count + j]
    }

    /// Nodes `i` can send to.
    pub fn out_neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.node_count).filter(|&j| self.has_edge(i, j)).collect()
    }

    /// Nodes that can send to `i`; this is the set `i` averages over.
    pub fn in_neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.node_count).filter(|&j| self.has_edge(j, i)).collect()
    }

    pub fn edge_count(&self) -> usize {
        let arcs = self.adjacency.iter().filter(|&&a| a).count();
        if self.directed {
            arcs
        } else {
            arcs / 2
        }
    }

    /// Edges as `(i, j)` pairs; undirected edges appear once with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.node_count;
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.has_edge(i, j) && (self.directed || i < j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Hop distances from `source` along out-edges; `None` for unreachable nodes.
    pub fn hop_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.node_count];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for (v, d) in dist.iter_mut().enumerate() {
                if d.is_none() && self.has_edge(u, v) {
                    *d = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    fn ensure_connected(&self) -> Result<()> {
        let unreached = self.hop_distances(self.anchor).iter().filter(|d| d.is_none()).count();
        if unreached > 0 {
            return Err(Error::Disconnected { anchor: self.anchor, unreached });
        }
        Ok(())
    }

    /// Returns the graph with node `i` renamed to `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Graph> {
        let n = self.node_count;
        if perm.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: perm.len() });
        }
        let mut seen = vec![false; n];
        for &p in perm {
            check_index(p, n)?;
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidParameter("relabeling is not a permutation".into()));
            }
        }
        let edges = self.edges().into_iter().map(|(i, j)| (perm[i], perm[j]));
        Graph::from_edges(n, perm[self.anchor], self.directed, edges)
    }

    /// Writes the plain-text edge list: a `N anchor directed` header, then
    /// one `i j` pair per line.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.node_count, self.anchor, u8::from(self.directed))?;
        for (i, j) in self.edges() {
            writeln!(w, "{i} {j}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Graph> {
        let mut lines = r
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l))
            .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
        let (hline, header) = lines
            .next()
            .ok_or(Error::Parse { line: 1, reason: "missing header".into() })?;
        let header = header?;
        let fields = parse_fields(&header, hline)?;
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: hline,
                reason: "header must be `N anchor_id directed_flag`".into(),
            });
        }
        let directed = match fields[2] {
            0 => false,
            1 => true,
            _ => {
                return Err(Error::Parse { line: hline, reason: "directed flag must be 0 or 1".into() })
            }
        };
        let mut edges = Vec::new();
        for (line, text) in lines {
            let text = text?;
            let f = parse_fields(&text, line)?;
            if f.len() != 2 {
                return Err(Error::Parse { line, reason: "expected `i j`".into() });
            }
            edges.push((f[0], f[1]));
        }
        Graph::from_edges(fields[0], fields[1], directed, edges)
    }
}

fn parse_fields(s: &str, line: usize) -> Result<Vec<usize>> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|e| Error::Parse { line, reason: format!("`{t}`: {e}") })
        })
        .collect()
}

fn check_index(i: usize, count: usize) -> Result<()> {
    if i >= count {
        return Err(Error::InvalidNode { index: i, count });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    Chain,
    Star,
    Circular,
    CircularDirected,
    RandomGeometric,
    ErdosRenyi,
    Complete,
}

impl TopologyKind {
    pub const ALL: [TopologyKind; 7] = [
        TopologyKind::Chain,
        TopologyKind::Star,
        TopologyKind::Circular,
        TopologyKind::CircularDirected,
        TopologyKind::RandomGeometric,
        TopologyKind::ErdosRenyi,
        TopologyKind::Complete,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TopologyKind::Chain => "chain",
            TopologyKind::Star => "star",
            TopologyKind::Circular => "circular",
            TopologyKind::CircularDirected => "circular_directed",
            TopologyKind::RandomGeometric => "random_geometric",
            TopologyKind::ErdosRenyi => "erdos_renyi",
            TopologyKind::Complete => "complete",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TopologyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown topology `{s}`")))
    }
}

/// Shape parameters for [`build_topology`]. Only the random kinds read the
/// geometric/probability fields.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologyParams {
    pub anchor: usize,
    /// Side of the square sensor field.
    pub side: f64,
    /// Connection radius for random geometric graphs.
    pub radius: f64,
    /// Edge probability for Erdős–Rényi graphs.
    pub edge_probability: f64,
    /// Placement attempts before giving up on a connected random graph.
    pub max_attempts: usize,
}

impl Default for TopologyParams {
    fn default() -> Self {
        TopologyParams { anchor: 0, side: 1.0, radius: 0.3, edge_probability: 0.1, max_attempts: 1000 }
    }
}

/// Builds a connected topology of `n` nodes. Star centers sit on node 0 and
/// chains run `0 - 1 - ... - n-1`; random kinds retry until the result is
/// connected from the anchor.
pub fn build_topology(kind: TopologyKind, n: usize, params: &TopologyParams, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("topology needs n >= 2, got {n}")));
    }
    check_index(params.anchor, n)?;
    let anchor = params.anchor;
    match kind {
        TopologyKind::Chain => Graph::from_edges(n, anchor, false, (1..n).map(|i| (i - 1, i))),
        TopologyKind::Star => Graph::from_edges(n, anchor, false, (1..n).map(|i| (0, i))),
        TopologyKind::Circular => {
            Graph::from_edges(n, anchor, false, (0..n).map(|i| (i, (i + 1) % n)))
        }
        TopologyKind::CircularDirected => {
            Graph::from_edges(n, anchor, true, (0..n).map(|i| (i, (i + 1) % n)))
        }
        TopologyKind::Complete => Graph::from_edges(
            n,
            anchor,
            false,
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))),
        ),
        TopologyKind::RandomGeometric => {
            if !(params.side > 0.0 && params.radius > 0.0) {
                return Err(Error::InvalidParameter("side and radius must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            retry_connected(params.max_attempts, || {
                let pts: Vec<(f64, f64)> = (0..n)
                    .map(|_| (rng.random::<f64>() * params.side, rng.random::<f64>() * params.side))
                    .collect();
                let r2 = params.radius * params.radius;
                let mut edges = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
                        if dx * dx + dy * dy <= r2 {
                            edges.push((i, j));
                        }
                    }
                }
                Graph::from_edges(n, anchor, false, edges)
            })
        }
        TopologyKind::ErdosRenyi => {
            let p = params.edge_probability;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("edge probability {p} outside [0, 1]")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            retry_connected(params.max_attempts, || {
                let mut edges = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        if rng.random::<f64>() < p {
                            edges.push((i, j));
                        }
                    }
                }
                Graph::from_edges(n, anchor, false, edges)
            })
        }
    }
}

fn retry_connected(attempts: usize, mut sample: impl FnMut() -> Result<Graph>) -> Result<Graph> {
    for _ in 0..attempts {
        match sample() {
            Ok(g) => return Ok(g),
            Err(Error::Disconnected { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::UnconnectableTopology { attempts })
}

/// The neighborhood `n_i`: nodes `i` has an edge to, ascending. Never contains `i`.
pub fn neighborhood(g: &Graph, i: usize) -> Result<Vec<usize>> {
    check_index(i, g.node_count())?;
    Ok(g.out_neighbors(i))
}

/// Anchor-rooted synchronous layers. The anchor itself sits in layer 0;
/// every other node is in `1..=layer_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerAssignment {
    pub anchor: usize,
    pub layer_of: Vec<usize>,
    pub layer_count: usize,
    /// `layer_sizes[m - 1]` is the number of nodes in layer `m`.
    pub layer_sizes: Vec<usize>,
}

impl LayerAssignment {
    pub fn layer(&self, node: usize) -> usize {
        self.layer_of[node]
    }

    /// Nodes of layer `m`, ascending.
    pub fn members(&self, m: usize) -> Vec<usize> {
        (0..self.layer_of.len()).filter(|&i| i != self.anchor && self.layer_of[i] == m).collect()
    }
}

/// Layer of each node = hop distance from the anchor.
pub fn assign_layers(g: &Graph, anchor: usize) -> Result<LayerAssignment> {
    check_index(anchor, g.node_count())?;
    let dist = g.hop_distances(anchor);
    let unreached = dist.iter().filter(|d| d.is_none()).count();
    if unreached > 0 {
        return Err(Error::Disconnected { anchor, unreached });
    }
    let layer_of: Vec<usize> = dist.into_iter().map(|d| d.unwrap_or(0)).collect();
    let layer_count = layer_of.iter().copied().max().unwrap_or(0);
    let mut layer_sizes = vec![0; layer_count];
    for (i, &m) in layer_of.iter().enumerate() {
        if i != anchor {
            layer_sizes[m - 1] += 1;
        }
    }
    Ok(LayerAssignment { anchor, layer_of, layer_count, layer_sizes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn topo(kind: TopologyKind, n: usize) -> Graph {
        build_topology(kind, n, &TopologyParams::default(), 7).unwrap()
    }

    #[test]
    fn chain_has_only_consecutive_edges() {
        let g = topo(TopologyKind::Chain, 3);
        assert_eq!(g.edges(), vec![(0, 1), (1, 2)]);
        assert!(!g.is_directed());
    }

    #[test]
    fn star_center_degree() {
        let g = topo(TopologyKind::Star, 4);
        assert_eq!(g.out_neighbors(0).len(), 3);
        for leaf in 1..4 {
            assert_eq!(g.out_neighbors(leaf), vec![0]);
        }
    }

    #[test]
    fn directed_ring_points_forward() {
        let g = topo(TopologyKind::CircularDirected, 5);
        assert_eq!(neighborhood(&g, 4).unwrap(), vec![0]);
        assert_eq!(g.in_neighbors(0), vec![4]);
        assert_eq!(g.edge_count(), 5);
    }

    #[test]
    fn neighborhoods() {
        let g = topo(TopologyKind::Chain, 3);
        assert_eq!(neighborhood(&g, 1).unwrap(), vec![0, 2]);
        let s = topo(TopologyKind::Star, 4);
        assert_eq!(neighborhood(&s, 2).unwrap(), vec![0]);
        assert!(matches!(neighborhood(&g, 3), Err(Error::InvalidNode { index: 3, count: 3 })));
    }

    #[test]
    fn rejects_tiny_and_disconnected() {
        assert!(matches!(
            build_topology(TopologyKind::Chain, 1, &TopologyParams::default(), 0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            Graph::from_edges(3, 0, false, [(0, 1)]),
            Err(Error::Disconnected { anchor: 0, unreached: 1 })
        ));
        assert!(Graph::from_edges(2, 0, false, [(1, 1)]).is_err());
    }

    #[test]
    fn tiny_radius_is_unconnectable() {
        let params = TopologyParams { radius: 1e-6, max_attempts: 5, ..Default::default() };
        assert_eq!(
            build_topology(TopologyKind::RandomGeometric, 20, &params, 1),
            Err(Error::UnconnectableTopology { attempts: 5 })
        );
    }

    #[test]
    fn layers_of_star_and_chain() {
        let s = topo(TopologyKind::Star, 5);
        let la = assign_layers(&s, 0).unwrap();
        assert_eq!(la.layer_count, 1);
        assert_eq!(la.layer_sizes, vec![4]);
        assert!((1..5).all(|i| la.layer(i) == 1));

        let c = topo(TopologyKind::Chain, 4);
        let la = assign_layers(&c, 0).unwrap();
        assert_eq!(&la.layer_of[1..], &[1, 2, 3]);
        assert_eq!(la.layer_count, 3);
        assert_eq!(la.members(2), vec![2]);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = topo(TopologyKind::RandomGeometric, 12);
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("12 0 0\n"));
        let back = Graph::read_edge_list(&buf[..]).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn edge_list_errors_carry_line_numbers() {
        let err = Graph::read_edge_list("3 0 0\n0 1\n1 x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = Graph::read_edge_list("3 0 2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
