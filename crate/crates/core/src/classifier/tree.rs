//! Regression trees and the exact greedy level-wise builder.

use rayon::prelude::*;

/// Rows with `x[feature] < threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        weight: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub(crate) nodes: Vec<Node>,
}

impl Tree {
    pub fn new(nodes: Vec<Node>) -> Self {
        Tree { nodes }
    }

    pub fn leaf(weight: f64) -> Self {
        Tree {
            nodes: vec![Node::Leaf { weight }],
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn eval(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match self.nodes[at] {
                Node::Leaf { weight } => return weight,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[feature as usize] < threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, left as usize).max(walk(nodes, right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Training data laid out for exact split search: column-major values and,
/// per feature, row ids sorted by value (ties by row id).
pub(crate) struct SortedColumns {
    pub columns: Vec<Vec<f64>>,
    pub order: Vec<Vec<u32>>,
}

impl SortedColumns {
    pub fn new(x: &crate::matrix::Matrix) -> Self {
        let (n, t) = x.shape();
        let columns: Vec<Vec<f64>> = (0..t).map(|c| x.column(c)).collect();
        let order = columns
            .par_iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        SortedColumns { columns, order }
    }
}

pub(crate) struct TreeParams {
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub l2_lambda: f64,
    pub learning_rate: f64,
}

const EXCLUDED: u32 = u32::MAX;
const NO_SLOT: usize = usize::MAX;

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

#[derive(Clone, Copy)]
struct ScanState {
    gl: f64,
    hl: f64,
    last: f64,
    seen: bool,
    best: Option<Candidate>,
}

const EMPTY_SCAN: ScanState = ScanState {
    gl: 0.0,
    hl: 0.0,
    last: 0.0,
    seen: false,
    best: None,
};

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

/// Grows one tree on `grad`/`hess`; rows with `in_sample[r] == false` do not
/// contribute. Splits maximize the second-order gain; among equal gains the
/// lowest feature index, then the lowest threshold, wins.
pub(crate) fn build_tree(
    data: &SortedColumns,
    grad: &[f64],
    hess: &[f64],
    in_sample: &[bool],
    params: &TreeParams,
) -> Tree {
    let n = grad.len();
    let lambda = params.l2_lambda;
    let mcw = params.min_child_weight;
    let mut position: Vec<u32> = in_sample.iter().map(|&s| if s { 0 } else { EXCLUDED }).collect();

    let (g0, h0) = (0..n)
        .filter(|&r| in_sample[r])
        .fold((0.0, 0.0), |(g, h), r| (g + grad[r], h + hess[r]));
    let mut nodes = vec![Node::Leaf { weight: 0.0 }];
    let mut stats = vec![(g0, h0)];
    let mut frontier = vec![0usize];

    for _depth in 0..params.max_depth {
        frontier.retain(|&node| stats[node].1 >= 2.0 * mcw);
        if frontier.is_empty() {
            break;
        }
        let mut slot_of = vec![NO_SLOT; nodes.len()];
        for (s, &node) in frontier.iter().enumerate() {
            slot_of[node] = s;
        }
        let slots = frontier.len();

        let per_feature: Vec<Vec<Option<Candidate>>> = (0..data.columns.len())
            .into_par_iter()
            .map(|f| {
                let col = &data.columns[f];
                let mut st = vec![EMPTY_SCAN; slots];
                for &r in &data.order[f] {
                    let r = r as usize;
                    let node = position[r];
                    if node == EXCLUDED {
                        continue;
                    }
                    let s = slot_of[node as usize];
                    if s == NO_SLOT {
                        continue;
                    }
                    let v = col[r];
                    let state = &mut st[s];
                    if state.seen && v > state.last {
                        let (g, h) = stats[frontier[s]];
                        let (gl, hl) = (state.gl, state.hl);
                        let (gr, hr) = (g - gl, h - hl);
                        if hl >= mcw && hr >= mcw {
                            let gain = 0.5
                                * (score(gl, hl, lambda) + score(gr, hr, lambda) - score(g, h, lambda));
                            if state.best.is_none_or(|b| gain > b.gain) {
                                let mut threshold = state.last + (v - state.last) * 0.5;
                                if threshold <= state.last {
                                    threshold = v;
                                }
                                state.best = Some(Candidate {
                                    gain,
                                    feature: f,
                                    threshold,
                                });
                            }
                        }
                    }
                    state.gl += grad[r];
                    state.hl += hess[r];
                    state.last = v;
                    state.seen = true;
                }
                st.into_iter().map(|s| s.best).collect()
            })
            .collect();

        let mut chosen: Vec<Option<Candidate>> = vec![None; slots];
        for feature_best in &per_feature {
            for (slot, cand) in feature_best.iter().enumerate() {
                if let Some(c) = cand {
                    if c.gain > 0.0 && chosen[slot].is_none_or(|b| c.gain > b.gain) {
                        chosen[slot] = Some(*c);
                    }
                }
            }
        }

        // node id -> (feature, threshold, left child)
        let mut split_of: Vec<Option<(usize, f64, u32)>> = vec![None; nodes.len()];
        let mut next_frontier = Vec::new();
        for (slot, cand) in chosen.iter().enumerate() {
            let Some(c) = cand else { continue };
            let node = frontier[slot];
            let left = nodes.len() as u32;
            nodes.push(Node::Leaf { weight: 0.0 });
            nodes.push(Node::Leaf { weight: 0.0 });
            stats.push((0.0, 0.0));
            stats.push((0.0, 0.0));
            nodes[node] = Node::Split {
                feature: c.feature as u32,
                threshold: c.threshold,
                left,
                right: left + 1,
            };
            split_of[node] = Some((c.feature, c.threshold, left));
            next_frontier.push(left as usize);
            next_frontier.push(left as usize + 1);
        }
        if next_frontier.is_empty() {
            break;
        }
        for r in 0..n {
            let node = position[r];
            if node == EXCLUDED {
                continue;
            }
            if let Some(Some((feature, threshold, left))) = split_of.get(node as usize) {
                let child = if data.columns[*feature][r] < *threshold {
                    *left
                } else {
                    left + 1
                };
                position[r] = child;
                let st = &mut stats[child as usize];
                st.0 += grad[r];
                st.1 += hess[r];
            }
        }
        frontier = next_frontier;
    }

    for (node, &(g, h)) in nodes.iter_mut().zip(&stats) {
        if let Node::Leaf { weight } = node {
            *weight = -g / (h + lambda) * params.learning_rate;
        }
    }
    Tree { nodes }
}
