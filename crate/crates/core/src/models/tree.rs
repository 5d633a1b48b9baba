//! Depth-limited least-squares regression trees with exact greedy splits.
//!
//! Candidate thresholds are midpoints between consecutive distinct feature
//! values. A split is accepted only if it strictly lowers the node SSE and
//! leaves at least `min_samples_leaf` rows on each side. Among equally good
//! splits the lowest feature index wins, then the lowest threshold.

use serde::{Deserialize, Serialize};

/// One node; leaves have `feature == None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub feature: Option<usize>,
    pub threshold: f64,
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub value: f64,
}

impl TreeNode {
    fn leaf(value: f64) -> Self {
        TreeNode {
            feature: None,
            threshold: 0.0,
            left: None,
            right: None,
            value,
        }
    }
}

/// Nodes stored breadth-first; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            let node = &self.nodes[k];
            match (node.feature, node.left, node.right) {
                (Some(f), Some(l), Some(r)) => k = if row[f] <= node.threshold { l } else { r },
                _ => return node.value,
            }
        }
    }

    /// Feature indices used by at least one split.
    pub fn split_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| n.feature)
    }

    pub fn depth(&self) -> usize {
        fn go(t: &RegressionTree, k: usize) -> usize {
            match (t.nodes[k].left, t.nodes[k].right) {
                (Some(l), Some(r)) => 1 + go(t, l).max(go(t, r)),
                _ => 0,
            }
        }
        go(self, 0)
    }
}

/// Column-major copy of the training features with per-feature row orderings,
/// computed once and shared by every tree of an ensemble.
pub struct TrainingData<'a> {
    rows: &'a [f64],
    n_rows: usize,
    n_features: usize,
    columns: Vec<Vec<f64>>,
    /// For each feature, row indices sorted by value (ties by row index).
    order: Vec<Vec<u32>>,
}

impl<'a> TrainingData<'a> {
    /// `rows` is row-major with `n_features` columns.
    pub fn new(rows: &'a [f64], n_features: usize) -> Self {
        let n_rows = rows.len().checked_div(n_features).unwrap_or(0);
        let columns: Vec<Vec<f64>> = (0..n_features)
            .map(|f| (0..n_rows).map(|r| rows[r * n_features + f]).collect())
            .collect();
        let order = columns
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..n_rows as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
                idx
            })
            .collect();
        TrainingData {
            rows,
            n_rows,
            n_features,
            columns,
            order,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.rows[r * self.n_features..(r + 1) * self.n_features]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

const UNASSIGNED: u32 = u32::MAX;
/// Relative gain below which a split does not count as an SSE decrease.
const MIN_RELATIVE_GAIN: f64 = 1e-12;

struct OpenNode {
    tree_index: usize,
    count: usize,
    mean: f64,
    sse: f64,
    best: Option<(f64, usize, f64)>, // (gain, feature, threshold)
}

struct ScanState {
    count: usize,
    centered_sum: f64,
    last: f64,
}

/// Fits one tree to `targets` using the rows listed in `sample` and only the
/// features in `features` (both ascending).
pub fn fit_tree(
    data: &TrainingData<'_>,
    targets: &[f64],
    sample: &[usize],
    features: &[usize],
    params: TreeParams,
) -> RegressionTree {
    let min_leaf = params.min_samples_leaf.max(1);
    let mut assignment = vec![UNASSIGNED; data.n_rows()];
    for &r in sample {
        assignment[r] = 0;
    }
    let mut nodes = vec![TreeNode::leaf(0.0)];
    let mut open = vec![open_node(0, sample.iter().copied(), targets)];

    for _ in 0..params.max_depth {
        let mut states: Vec<ScanState> = Vec::with_capacity(open.len());
        for &f in features {
            states.clear();
            states.extend(open.iter().map(|_| ScanState {
                count: 0,
                centered_sum: 0.0,
                last: f64::NAN,
            }));
            let column = &data.columns[f];
            for &r in &data.order[f] {
                let k = assignment[r as usize];
                if k == UNASSIGNED {
                    continue;
                }
                let (node, st) = (&mut open[k as usize], &mut states[k as usize]);
                let v = column[r as usize];
                if st.count >= min_leaf && node.count - st.count >= min_leaf && v > st.last {
                    let (nl, nr) = (st.count as f64, (node.count - st.count) as f64);
                    // Between-group sum of squares for a two-way split of centered values.
                    let gain = st.centered_sum * st.centered_sum * (nl + nr) / (nl * nr);
                    if gain > MIN_RELATIVE_GAIN * node.sse && node.best.is_none_or(|b| gain > b.0) {
                        let mid = 0.5 * (st.last + v);
                        let threshold = if mid < v { mid } else { st.last };
                        node.best = Some((gain, f, threshold));
                    }
                }
                st.count += 1;
                st.centered_sum += targets[r as usize] - node.mean;
                st.last = v;
            }
        }

        // Split the nodes that found a split; the rest stay leaves.
        let mut remap = vec![(UNASSIGNED, UNASSIGNED); open.len()];
        let mut next_open = Vec::new();
        for (k, node) in open.iter().enumerate() {
            nodes[node.tree_index].value = node.mean;
            if let Some((_, f, threshold)) = node.best {
                let (l, r) = (nodes.len(), nodes.len() + 1);
                nodes.push(TreeNode::leaf(0.0));
                nodes.push(TreeNode::leaf(0.0));
                let parent = &mut nodes[node.tree_index];
                parent.feature = Some(f);
                parent.threshold = threshold;
                parent.left = Some(l);
                parent.right = Some(r);
                remap[k] = (next_open.len() as u32, next_open.len() as u32 + 1);
                next_open.push(l);
                next_open.push(r);
            }
        }
        if next_open.is_empty() {
            return RegressionTree { nodes };
        }
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); next_open.len()];
        for &r in sample {
            let k = assignment[r];
            if k == UNASSIGNED {
                continue;
            }
            let (l, rr) = remap[k as usize];
            if l == UNASSIGNED {
                assignment[r] = UNASSIGNED;
                continue;
            }
            let (_, f, threshold) = open[k as usize].best.unwrap();
            let child = if data.row(r)[f] <= threshold { l } else { rr };
            assignment[r] = child;
            members[child as usize].push(r);
        }
        open = next_open
            .iter()
            .zip(&members)
            .map(|(&ti, rows)| open_node(ti, rows.iter().copied(), targets))
            .collect();
    }
    for node in &open {
        nodes[node.tree_index].value = node.mean;
    }
    RegressionTree { nodes }
}

fn open_node(tree_index: usize, rows: impl Iterator<Item = usize> + Clone, targets: &[f64]) -> OpenNode {
    let (count, sum) = rows.clone().fold((0usize, 0.0), |(c, s), r| (c + 1, s + targets[r]));
    let mean = if count == 0 { 0.0 } else { sum / count as f64 };
    let (sse, raw) = rows.fold((0.0, 0.0), |(e, q), r| {
        let d = targets[r] - mean;
        (e + d * d, q + targets[r] * targets[r])
    });
    // Spread indistinguishable from rounding noise means the node is pure.
    let sse = if sse <= 1e-20 * raw { 0.0 } else { sse };
    OpenNode {
        tree_index,
        count,
        mean,
        sse,
        best: None,
    }
}
