//! Dependency parse trees and the LCA distance metric.

use crate::error::{Error, Result};

/// A dependency tree over one sentence's tokens.
///
/// `heads[i]` is the head token of token `i`; the root points to itself.
/// Exactly one root, acyclic, every token reachable from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTree {
    heads: Vec<usize>,
    depths: Vec<usize>,
    root: usize,
}

impl ParseTree {
    pub fn new(heads: Vec<usize>) -> Result<Self> {
        let n = heads.len();
        if n == 0 {
            return Err(Error::ParseTree("empty head map".into()));
        }
        let mut root = None;
        for (i, &h) in heads.iter().enumerate() {
            if h >= n {
                return Err(Error::ParseTree(format!(
                    "head index {h} of token {i} out of range (len {n})"
                )));
            }
            if h == i {
                if let Some(r) = root {
                    return Err(Error::ParseTree(format!("multiple roots: {r} and {i}")));
                }
                root = Some(i);
            }
        }
        let root = root.ok_or_else(|| Error::ParseTree("no root (self-headed token)".into()))?;
        // Walking to the root from every token both proves acyclicity and
        // yields depths.
        let mut depths = vec![0usize; n];
        for i in 0..n {
            let mut cur = i;
            let mut depth = 0;
            while cur != root {
                cur = heads[cur];
                depth += 1;
                if depth > n {
                    return Err(Error::ParseTree(format!("cycle reachable from token {i}")));
                }
            }
            depths[i] = depth;
        }
        Ok(ParseTree {
            heads,
            depths,
            root,
        })
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn head(&self, token: usize) -> usize {
        self.heads[token]
    }

    pub fn depth(&self, token: usize) -> usize {
        self.depths[token]
    }

    /// Tree distance through the lowest common ancestor: the number of edges
    /// from `a` up to LCA(a, b) plus the number from `b` up. Zero iff `a == b`.
    pub fn lca_distance(&self, a: usize, b: usize) -> Result<usize> {
        let n = self.heads.len();
        if a >= n || b >= n {
            return Err(Error::ParseTree(format!(
                "token index out of range: lca_distance({a}, {b}) on {n} tokens"
            )));
        }
        let (mut x, mut y) = (a, b);
        let mut steps = 0;
        // Equalize depths, then climb in lockstep until the paths meet.
        while self.depths[x] > self.depths[y] {
            x = self.heads[x];
            steps += 1;
        }
        while self.depths[y] > self.depths[x] {
            y = self.heads[y];
            steps += 1;
        }
        while x != y {
            x = self.heads[x];
            y = self.heads[y];
            steps += 2;
        }
        Ok(steps)
    }
}
