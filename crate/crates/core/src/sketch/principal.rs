//! Principal curve of a patch: the largest 8-connected pixel set, ordered as
//! a simple path between its two most distant pixels.

use std::collections::{HashMap, VecDeque};

use super::bezier::Point;
use crate::error::{Error, Result};

/// Ordered pixels, consecutive ones 8-adjacent, no repeats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelPath(Vec<(usize, usize)>);

impl PixelPath {
    pub fn new(pixels: Vec<(usize, usize)>) -> Result<Self> {
        if pixels.len() < 2 {
            return Err(Error::param("a pixel path needs at least 2 pixels"));
        }
        for w in pixels.windows(2) {
            let dr = w[0].0.abs_diff(w[1].0);
            let dc = w[0].1.abs_diff(w[1].1);
            if dr > 1 || dc > 1 || (dr, dc) == (0, 0) {
                return Err(Error::param(format!("{:?} and {:?} are not 8-adjacent", w[0], w[1])));
            }
        }
        let mut seen = std::collections::HashSet::new();
        if !pixels.iter().all(|p| seen.insert(*p)) {
            return Err(Error::param("pixel path revisits a pixel"));
        }
        Ok(Self(pixels))
    }

    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Pixel centres as points (`x` = column, `y` = row).
    pub fn points(&self) -> Vec<Point> {
        self.0.iter().map(|&(r, c)| Point::new(c as f64, r as f64)).collect()
    }
}

const NEIGHBOURS: [(i64, i64); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

struct Graph {
    nodes: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    fn new(pixels: &[(usize, usize)]) -> Self {
        let mut nodes = pixels.to_vec();
        nodes.sort_unstable();
        nodes.dedup();
        let index: HashMap<(usize, usize), usize> = nodes.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let adj = nodes
            .iter()
            .map(|&(r, c)| {
                NEIGHBOURS
                    .iter()
                    .filter_map(|&(dr, dc)| {
                        let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                        if rr < 0 || cc < 0 {
                            return None;
                        }
                        index.get(&(rr as usize, cc as usize)).copied()
                    })
                    .collect()
            })
            .collect();
        Graph { nodes, adj }
    }

    /// BFS distances, parents and visit order from `start`.
    fn bfs(&self, start: usize) -> (Vec<Option<usize>>, Vec<usize>, Vec<usize>) {
        let n = self.nodes.len();
        let mut dist = vec![None; n];
        let mut parent = vec![usize::MAX; n];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([start]);
        dist[start] = Some(0);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(dist[u].unwrap() + 1);
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        (dist, parent, order)
    }

    fn farthest(&self, start: usize) -> (usize, Vec<usize>) {
        let (dist, parent, order) = self.bfs(start);
        let mut best = start;
        for &u in &order {
            if dist[u] > dist[best] {
                best = u;
            }
        }
        (best, parent)
    }
}

/// Extract the principal curve of a patch.
///
/// Returns `None` for an empty patch or when the largest component has fewer
/// than `min_pixels` pixels. Ties between equally large components go to the
/// one whose first pixel comes first in scan order. The path runs from the
/// endpoint that comes first in scan order.
pub fn principal_curve(pixels: &[(usize, usize)], min_pixels: usize) -> Option<PixelPath> {
    if pixels.is_empty() {
        return None;
    }
    let graph = Graph::new(pixels);
    // Components in scan order of their first pixel; nodes are sorted.
    let mut comp = vec![usize::MAX; graph.nodes.len()];
    let mut best: Option<(usize, usize)> = None;
    for s in 0..graph.nodes.len() {
        if comp[s] != usize::MAX {
            continue;
        }
        let (_, _, order) = graph.bfs(s);
        for &u in &order {
            comp[u] = s;
        }
        if best.is_none_or(|(_, size)| order.len() > size) {
            best = Some((s, order.len()));
        }
    }
    let (root, size) = best?;
    if size < min_pixels.max(2) {
        return None;
    }
    let (u, _) = graph.farthest(root);
    let (v, parent) = graph.farthest(u);
    let mut path = vec![graph.nodes[v]];
    let mut cur = v;
    while cur != u {
        cur = parent[cur];
        path.push(graph.nodes[cur]);
    }
    if path[0] > path[path.len() - 1] {
        path.reverse();
    }
    PixelPath::new(path).ok()
}
