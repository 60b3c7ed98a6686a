//! Regression-tree forests: threshold-descent evaluation and a
//! line-oriented text format.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// Binary regression tree node; feature comparisons use `<=` to go left.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub root: TreeNode,
}

impl RegressionTree {
    pub fn leaf(value: f64) -> RegressionTree {
        RegressionTree {
            root: TreeNode::Leaf(value),
        }
    }

    /// Descends thresholds to a leaf value.
    pub fn eval(&self, fv: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf(v) => return *v,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if fv[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    fn max_feature(&self) -> Option<usize> {
        fn walk(node: &TreeNode) -> Option<usize> {
            match node {
                TreeNode::Leaf(_) => None,
                TreeNode::Split {
                    feature,
                    left,
                    right,
                    ..
                } => [Some(*feature), walk(left), walk(right)]
                    .into_iter()
                    .flatten()
                    .max(),
            }
        }
        walk(&self.root)
    }
}

/// A weighted list of trees scoring a fixed-arity feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    arity: usize,
    pub trees: Vec<(f64, RegressionTree)>,
}

impl Forest {
    pub fn new(arity: usize, trees: Vec<(f64, RegressionTree)>) -> Result<Forest> {
        for (w, tree) in &trees {
            if !w.is_finite() {
                return Err(Error::Model(format!("non-finite tree weight {w}")));
            }
            if let Some(f) = tree.max_feature() {
                if f >= arity {
                    return Err(Error::Model(format!(
                        "tree splits on feature {f} but arity is {arity}"
                    )));
                }
            }
        }
        Ok(Forest { arity, trees })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Weighted sum of tree outputs; the empty forest scores 0.
    pub fn score(&self, fv: &[f64]) -> Result<f64> {
        if fv.len() != self.arity {
            return Err(Error::Shape(format!(
                "feature vector arity {} does not match forest arity {}",
                fv.len(),
                self.arity
            )));
        }
        Ok(self.trees.iter().map(|(w, t)| w * t.eval(fv)).sum())
    }
}

fn flatten(node: &TreeNode, nodes: &mut Vec<String>) -> usize {
    let id = nodes.len();
    nodes.push(String::new());
    match node {
        TreeNode::Leaf(v) => nodes[id] = format!("node {id} leaf v={v}"),
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let l = flatten(left, nodes);
            let r = flatten(right, nodes);
            nodes[id] = format!("node {id} split f={feature} t={threshold} left={l} right={r}");
        }
    }
    id
}

/// Serializes a forest: a header line, then per tree a `tree` line and its
/// indexed node list. Floats use the shortest round-tripping form.
pub fn forest_to_string(forest: &Forest, learning_rate: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "abqa-forest v1 features={} trees={} lr={}",
        forest.arity,
        forest.trees.len(),
        learning_rate
    );
    for (i, (w, tree)) in forest.trees.iter().enumerate() {
        let mut nodes = Vec::new();
        flatten(&tree.root, &mut nodes);
        let _ = writeln!(out, "tree {i} weight={w} nodes={}", nodes.len());
        for line in nodes {
            let _ = writeln!(out, "{line}");
        }
    }
    out
}

struct LineReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> LineReader<'a> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        self.lines
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::Model("forest file truncated".into()))
    }
}

fn field<'a>(parts: &[&'a str], key: &str, line_no: usize) -> Result<&'a str> {
    parts
        .iter()
        .find_map(|p| p.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| Error::Model(format!("line {line_no}: missing {key}=")))
}

fn num<T: std::str::FromStr>(s: &str, line_no: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Model(format!("line {line_no}: bad number {s:?}")))
}

fn rebuild(nodes: &[(usize, ParsedNode)], id: usize, line_no: usize) -> Result<TreeNode> {
    let (_, node) = nodes
        .iter()
        .find(|(i, _)| *i == id)
        .ok_or_else(|| Error::Model(format!("line {line_no}: missing node {id}")))?;
    Ok(match node {
        ParsedNode::Leaf(v) => TreeNode::Leaf(*v),
        ParsedNode::Split {
            feature,
            threshold,
            left,
            right,
        } => TreeNode::Split {
            feature: *feature,
            threshold: *threshold,
            left: Box::new(rebuild(nodes, *left, line_no)?),
            right: Box::new(rebuild(nodes, *right, line_no)?),
        },
    })
}

enum ParsedNode {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Parses [`forest_to_string`] output. Returns the forest and the recorded
/// learning rate.
pub fn forest_from_str(text: &str) -> Result<(Forest, f64)> {
    let mut reader = LineReader {
        lines: text.lines().enumerate(),
    };
    let (line_no, header) = reader.next()?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.first() != Some(&"abqa-forest") || parts.get(1) != Some(&"v1") {
        return Err(Error::Model(format!(
            "line {line_no}: expected `abqa-forest v1` header"
        )));
    }
    let arity: usize = num(field(&parts, "features", line_no)?, line_no)?;
    let tree_count: usize = num(field(&parts, "trees", line_no)?, line_no)?;
    let lr: f64 = num(field(&parts, "lr", line_no)?, line_no)?;
    let mut trees = Vec::with_capacity(tree_count);
    for expect in 0..tree_count {
        let (line_no, line) = reader.next()?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.first() != Some(&"tree") {
            return Err(Error::Model(format!("line {line_no}: expected tree line")));
        }
        let index: usize = num(parts.get(1).copied().unwrap_or(""), line_no)?;
        if index != expect {
            return Err(Error::Model(format!(
                "line {line_no}: tree {index} out of order, expected {expect}"
            )));
        }
        let weight: f64 = num(field(&parts, "weight", line_no)?, line_no)?;
        let node_count: usize = num(field(&parts, "nodes", line_no)?, line_no)?;
        let mut nodes = Vec::with_capacity(node_count);
        for _ in 0..node_count {
            let (line_no, line) = reader.next()?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.first() != Some(&"node") {
                return Err(Error::Model(format!("line {line_no}: expected node line")));
            }
            let id: usize = num(parts.get(1).copied().unwrap_or(""), line_no)?;
            let node = match parts.get(2).copied() {
                Some("leaf") => ParsedNode::Leaf(num(field(&parts, "v", line_no)?, line_no)?),
                Some("split") => ParsedNode::Split {
                    feature: num(field(&parts, "f", line_no)?, line_no)?,
                    threshold: num(field(&parts, "t", line_no)?, line_no)?,
                    left: num(field(&parts, "left", line_no)?, line_no)?,
                    right: num(field(&parts, "right", line_no)?, line_no)?,
                },
                other => {
                    return Err(Error::Model(format!(
                        "line {line_no}: unknown node kind {other:?}"
                    )));
                }
            };
            nodes.push((id, node));
        }
        let root = rebuild(&nodes, 0, line_no)?;
        trees.push((weight, RegressionTree { root }));
    }
    Ok((Forest::new(arity, trees)?, lr))
}

pub fn save_forest(path: &Path, forest: &Forest, learning_rate: f64) -> Result<()> {
    std::fs::write(path, forest_to_string(forest, learning_rate))?;
    Ok(())
}

pub fn load_forest(path: &Path) -> Result<(Forest, f64)> {
    forest_from_str(&std::fs::read_to_string(path)?)
}
