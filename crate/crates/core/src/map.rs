//! Road graph used by map-based movement.
//!
//! Maps are read from WKT text, one `LINESTRING` per line. Vertices with
//! bit-identical coordinates are merged into a single waypoint, so separate
//! lines join only where their authors gave them exactly the same vertex.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("line {line}: expected `LINESTRING (x y, ...)`")]
    Syntax { line: usize },
    #[error("line {line}: malformed number `{token}`")]
    MalformedNumber { line: usize, token: String },
    #[error("line {line}: non-finite coordinate")]
    NonFinite { line: usize },
    #[error("line {line}: LINESTRING needs at least 2 points")]
    TooFewPoints { line: usize },
    #[error("map contains no edges")]
    Empty,
    #[error("map is disconnected: waypoint {0} unreachable from waypoint 0")]
    Disconnected(usize),
    #[error("waypoint {0} out of range")]
    BadWaypoint(usize),
    #[error("waypoint {dst} unreachable from {src}")]
    Unreachable { src: usize, dst: usize },
    #[error("map needs at least 2 waypoints for movement")]
    TooSmall,
}

/// Planar coordinate in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Bit key used for exact-equality vertex merging. `-0.0` folds into `0.0`.
    fn key(&self) -> (u64, u64) {
        ((self.x + 0.0).to_bits(), (self.y + 0.0).to_bits())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

/// Undirected, connected waypoint graph. Immutable after construction.
#[derive(Debug, Clone)]
pub struct MapGraph {
    waypoints: Vec<Point>,
    edges: Vec<Edge>,
    /// Per waypoint: (neighbor, length), sorted by neighbor index.
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl MapGraph {
    /// Builds a graph from waypoints and index pairs. Self loops are skipped
    /// and duplicate edges collapse; the result must be connected.
    pub fn from_parts(waypoints: Vec<Point>, pairs: &[(usize, usize)]) -> Result<Self, MapError> {
        let n = waypoints.len();
        let mut unique = BTreeSet::new();
        for &(a, b) in pairs {
            if a >= n {
                return Err(MapError::BadWaypoint(a));
            }
            if b >= n {
                return Err(MapError::BadWaypoint(b));
            }
            if a != b {
                unique.insert((a.min(b), a.max(b)));
            }
        }
        if unique.is_empty() {
            return Err(MapError::Empty);
        }
        let mut adjacency = vec![Vec::new(); n];
        let edges: Vec<Edge> = unique
            .into_iter()
            .map(|(a, b)| {
                let length = waypoints[a].distance(&waypoints[b]);
                adjacency[a].push((b, length));
                adjacency[b].push((a, length));
                Edge { a, b, length }
            })
            .collect();
        for adj in &mut adjacency {
            adj.sort_by_key(|&(nb, _)| nb);
        }
        let graph = Self {
            waypoints,
            edges,
            adjacency,
        };
        graph.check_connected()?;
        Ok(graph)
    }

    /// Regular grid of `cols` x `rows` waypoints spaced `spacing` meters
    /// apart, with edges between horizontal and vertical neighbors.
    pub fn grid(cols: usize, rows: usize, spacing: f64) -> Result<Self, MapError> {
        let mut waypoints = Vec::with_capacity(cols * rows);
        for r in 0..rows {
            for c in 0..cols {
                waypoints.push(Point::new(c as f64 * spacing, r as f64 * spacing));
            }
        }
        let mut pairs = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if c + 1 < cols {
                    pairs.push((i, i + 1));
                }
                if r + 1 < rows {
                    pairs.push((i, i + cols));
                }
            }
        }
        Self::from_parts(waypoints, &pairs)
    }

    pub fn waypoints(&self) -> &[Point] {
        &self.waypoints
    }

    pub fn waypoint(&self, idx: usize) -> Point {
        self.waypoints[idx]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn neighbors(&self, idx: usize) -> &[(usize, f64)] {
        &self.adjacency[idx]
    }

    pub fn edge_length(&self, a: usize, b: usize) -> Option<f64> {
        self.adjacency
            .get(a)?
            .binary_search_by_key(&b, |&(nb, _)| nb)
            .ok()
            .map(|i| self.adjacency[a][i].1)
    }

    fn check_connected(&self) -> Result<(), MapError> {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(nb, _) in &self.adjacency[v] {
                if !seen[nb] {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(MapError::Disconnected(i)),
            None => Ok(()),
        }
    }

    /// Serializes every edge as its own two-point LINESTRING.
    pub fn to_wkt(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let (p, q) = (self.waypoints[e.a], self.waypoints[e.b]);
            let _ = writeln!(out, "LINESTRING ({} {}, {} {})", p.x, p.y, q.x, q.y);
        }
        out
    }

    /// Minimum-length waypoint path from `src` to `dst`.
    ///
    /// Among equally short paths the one whose next waypoint has the smallest
    /// index is taken at every step.
    pub fn shortest_path(&self, src: usize, dst: usize) -> Result<Vec<usize>, MapError> {
        let n = self.len();
        if src >= n {
            return Err(MapError::BadWaypoint(src));
        }
        if dst >= n {
            return Err(MapError::BadWaypoint(dst));
        }
        if src == dst {
            return Ok(vec![src]);
        }
        // Distances towards dst; the graph is undirected.
        let dist = self.distances_from(dst);
        if !dist[src].is_finite() {
            return Err(MapError::Unreachable { src, dst });
        }
        let mut path = vec![src];
        let mut cur = src;
        while cur != dst {
            let target = dist[cur];
            let next = self.adjacency[cur]
                .iter()
                .find(|&&(nb, len)| approx_eq(dist[nb] + len, target))
                .map(|&(nb, _)| nb)
                .ok_or(MapError::Unreachable { src, dst })?;
            path.push(next);
            cur = next;
        }
        Ok(path)
    }

    pub fn path_length(&self, path: &[usize]) -> f64 {
        path.windows(2)
            .map(|w| self.edge_length(w[0], w[1]).unwrap_or(f64::INFINITY))
            .sum()
    }

    fn distances_from(&self, origin: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap = BinaryHeap::new();
        dist[origin] = 0.0;
        heap.push(State {
            cost: 0.0,
            node: origin,
        });
        while let Some(State { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            for &(nb, len) in &self.adjacency[node] {
                let next = cost + len;
                if next < dist[nb] {
                    dist[nb] = next;
                    heap.push(State {
                        cost: next,
                        node: nb,
                    });
                }
            }
        }
        dist
    }
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, Copy)]
struct State {
    cost: f64,
    node: usize,
}

impl PartialEq for State {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for State {}
impl Ord for State {
    // min-heap on cost, then on node index
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}
impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Parses a WKT map: one `LINESTRING` per line, `#` comments and blank
/// lines ignored.
pub fn parse_wkt_map(text: &str) -> Result<MapGraph, MapError> {
    let mut waypoints: Vec<Point> = Vec::new();
    let mut index: HashMap<(u64, u64), usize> = HashMap::new();
    let mut pairs = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let points = parse_linestring(line, line_no)?;
        if points.len() < 2 {
            return Err(MapError::TooFewPoints { line: line_no });
        }
        let ids: Vec<usize> = points
            .into_iter()
            .map(|p| {
                *index.entry(p.key()).or_insert_with(|| {
                    waypoints.push(p);
                    waypoints.len() - 1
                })
            })
            .collect();
        pairs.extend(ids.windows(2).map(|w| (w[0], w[1])));
    }
    MapGraph::from_parts(waypoints, &pairs)
}

fn parse_linestring(line: &str, line_no: usize) -> Result<Vec<Point>, MapError> {
    let syntax = || MapError::Syntax { line: line_no };
    let tag = line.get(..10).ok_or_else(syntax)?;
    if !tag.eq_ignore_ascii_case("LINESTRING") {
        return Err(syntax());
    }
    let body = line[10..].trim();
    let inner = body
        .strip_prefix('(')
        .and_then(|b| b.strip_suffix(')'))
        .ok_or_else(syntax)?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|pair| {
            let nums: Vec<&str> = pair.split_whitespace().collect();
            if nums.len() != 2 {
                return Err(syntax());
            }
            let parse = |tok: &str| {
                tok.parse::<f64>().map_err(|_| MapError::MalformedNumber {
                    line: line_no,
                    token: tok.to_string(),
                })
            };
            let p = Point::new(parse(nums[0])?, parse(nums[1])?);
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(MapError::NonFinite { line: line_no });
            }
            Ok(p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_linestring() {
        let g = parse_wkt_map("LINESTRING (0 0, 10 0)").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.edges().len(), 1);
        assert_eq!(g.edges()[0].length, 10.0);
    }

    #[test]
    fn shared_vertex_is_merged() {
        let g = parse_wkt_map("LINESTRING (0 0, 10 0)\nLINESTRING (10 0, 10 5)\n").unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.edges().len(), 2);
    }

    #[test]
    fn comments_blank_lines_and_duplicate_edges() {
        let text = "# roads\n\nLINESTRING (0 0, 10 0)\nlinestring(10 0, 0 0)\n";
        let g = parse_wkt_map(text).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.edges().len(), 1);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            parse_wkt_map("LINESTRING (0 0)").unwrap_err(),
            MapError::TooFewPoints { line: 1 }
        );
        assert!(matches!(
            parse_wkt_map("LINESTRING (0 0, 1 x)").unwrap_err(),
            MapError::MalformedNumber { line: 1, .. }
        ));
        assert!(matches!(
            parse_wkt_map("POINT (0 0)").unwrap_err(),
            MapError::Syntax { line: 1 }
        ));
        assert!(matches!(
            parse_wkt_map("LINESTRING (0 0, 1 0)\nLINESTRING (5 5, 6 5)").unwrap_err(),
            MapError::Disconnected(_)
        ));
        assert_eq!(parse_wkt_map("# nothing\n").unwrap_err(), MapError::Empty);
    }

    #[test]
    fn triangle_prefers_two_short_edges() {
        // A-B 3, B-C 4, and an A-C road of length 8 bent through waypoint D.
        let d = Point::new(3.5, 3.75f64.sqrt());
        let g = MapGraph::from_parts(
            vec![
                Point::new(0.0, 0.0),
                Point::new(3.0, 0.0),
                Point::new(7.0, 0.0),
                d,
            ],
            &[(0, 1), (1, 2), (0, 3), (3, 2)],
        )
        .unwrap();
        assert!((g.path_length(&[0, 3, 2]) - 8.0).abs() < 1e-12);
        let path = g.shortest_path(0, 2).unwrap();
        assert_eq!(path, vec![0, 1, 2]);
        assert_eq!(g.path_length(&path), 7.0);
    }

    #[test]
    fn identity_path() {
        let g = MapGraph::grid(3, 3, 10.0).unwrap();
        assert_eq!(g.shortest_path(4, 4).unwrap(), vec![4]);
        assert_eq!(g.path_length(&[4]), 0.0);
    }

    #[test]
    fn grid_tie_break_takes_smallest_next_index() {
        // 0 1
        // 2 3  (rows go up in y but indices as listed)
        let g = MapGraph::grid(2, 2, 1.0).unwrap();
        assert_eq!(g.shortest_path(0, 3).unwrap(), vec![0, 1, 3]);
        assert_eq!(g.shortest_path(3, 0).unwrap(), vec![3, 1, 0]);
    }

    #[test]
    fn bad_indices() {
        let g = MapGraph::grid(2, 1, 1.0).unwrap();
        assert_eq!(g.shortest_path(0, 9).unwrap_err(), MapError::BadWaypoint(9));
    }
}
