use std::collections::HashSet;

use crate::error::{Error, Result};

/// A directed link between two nodes, stored 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Link {
    pub from: usize,
    pub to: usize,
}

/// Directed communication graph with per-node neighbor indexes.
///
/// Node ids are 0-based internally; configuration files and reports use
/// 1-based ids.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    node_count: usize,
    links: Vec<Link>,
    out_links: Vec<Vec<usize>>,
    in_links: Vec<Vec<usize>>,
}

impl NetworkGraph {
    /// Builds a graph from 1-based `[from, to]` pairs.
    pub fn from_pairs(node_count: usize, pairs: &[[usize; 2]]) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::config("graph.nodes", "must be at least 1"));
        }
        let mut seen = HashSet::new();
        let mut links = Vec::with_capacity(pairs.len());
        for (i, &[a, b]) in pairs.iter().enumerate() {
            let field = format!("graph.links[{i}]");
            if a == 0 || b == 0 || a > node_count || b > node_count {
                return Err(Error::config(
                    field,
                    format!("node ids must be in 1..={node_count}, got [{a}, {b}]"),
                ));
            }
            if a == b {
                return Err(Error::config(field, format!("self-loop on node {a}")));
            }
            if !seen.insert((a, b)) {
                return Err(Error::config(field, format!("duplicate link [{a}, {b}]")));
            }
            links.push(Link { from: a - 1, to: b - 1 });
        }
        Ok(Self::from_links(node_count, links))
    }

    fn from_links(node_count: usize, links: Vec<Link>) -> Self {
        let mut out_links = vec![Vec::new(); node_count];
        let mut in_links = vec![Vec::new(); node_count];
        for (idx, l) in links.iter().enumerate() {
            out_links[l.from].push(idx);
            in_links[l.to].push(idx);
        }
        Self {
            node_count,
            links,
            out_links,
            in_links,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, idx: usize) -> Link {
        self.links[idx]
    }

    /// Indices of links leaving `node`, in link order.
    pub fn out_links(&self, node: usize) -> &[usize] {
        &self.out_links[node]
    }

    /// Indices of links entering `node`, in link order.
    pub fn in_links(&self, node: usize) -> &[usize] {
        &self.in_links[node]
    }

    /// Maximum in-degree over all nodes.
    pub fn d_max(&self) -> usize {
        self.in_links.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn max_out_degree(&self) -> usize {
        self.out_links.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Returns the 1-based pairs this graph was built from.
    pub fn to_pairs(&self) -> Vec<[usize; 2]> {
        self.links.iter().map(|l| [l.from + 1, l.to + 1]).collect()
    }

    /// All simple paths from `src` to `dst`, each as a list of link indices.
    pub fn simple_paths(&self, src: usize, dst: usize) -> Vec<Vec<usize>> {
        fn walk(
            g: &NetworkGraph,
            at: usize,
            dst: usize,
            visited: &mut Vec<bool>,
            path: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if at == dst {
                out.push(path.clone());
                return;
            }
            for &l in g.out_links(at) {
                let next = g.links[l].to;
                if visited[next] {
                    continue;
                }
                visited[next] = true;
                path.push(l);
                walk(g, next, dst, visited, path, out);
                path.pop();
                visited[next] = false;
            }
        }
        let mut visited = vec![false; self.node_count];
        visited[src] = true;
        let mut out = Vec::new();
        walk(self, src, dst, &mut visited, &mut Vec::new(), &mut out);
        out
    }
}
