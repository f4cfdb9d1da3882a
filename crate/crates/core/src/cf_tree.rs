//! Clustering-feature tree construction.
//!
//! A [`CfVector`] summarizes a point set by its count, per-dimension linear
//! sums and per-dimension squared sums. Summaries are additive, so every
//! internal entry of the tree carries the sum of the summaries beneath it,
//! and centroid, radius and diameter are all computable without revisiting
//! the points.
//!
//! Points are inserted one at a time. Each insert descends to the leaf entry
//! with the nearest centroid; the entry absorbs the point when its diameter
//! stays within the threshold `T`, otherwise a new singleton entry is opened.
//! Nodes holding more than `B` entries are split around their farthest pair
//! of entries, splits propagate toward the root, and the node where the
//! propagation stops merges its closest pair of children unless that pair is
//! the one the split just produced.

use serde::Serialize;

use crate::error::{Error, Result};

/// A single observation: its row index in the dataset and its feature values.
#[derive(Debug, Clone, Copy)]
pub struct DataPoint<'a> {
    pub row_id: usize,
    pub values: &'a [f64],
}

impl<'a> DataPoint<'a> {
    pub fn new(row_id: usize, values: &'a [f64]) -> Self {
        Self { row_id, values }
    }
}

/// The `<n, LS, SS>` summary of a point set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CfVector {
    n: usize,
    ls: Vec<f64>,
    ss: Vec<f64>,
}

impl CfVector {
    /// The empty summary in `dim` dimensions.
    pub fn zero(dim: usize) -> Self {
        Self {
            n: 0,
            ls: vec![0.0; dim],
            ss: vec![0.0; dim],
        }
    }

    pub fn from_point(x: &[f64]) -> Self {
        Self {
            n: 1,
            ls: x.to_vec(),
            ss: x.iter().map(|v| v * v).collect(),
        }
    }

    /// Summary of an arbitrary collection of points of dimension `dim`.
    pub fn from_points<'a, I>(dim: usize, points: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut cf = Self::zero(dim);
        for x in points {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: x.len(),
                });
            }
            cf.absorb_point(x);
        }
        Ok(cf)
    }

    /// Builds a summary from raw parts, checking the internal consistency
    /// constraints (`n = 0` implies zero sums, `SS_j >= LS_j^2 / n`).
    pub fn from_parts(n: usize, ls: Vec<f64>, ss: Vec<f64>) -> Result<Self> {
        if ls.len() != ss.len() {
            return Err(Error::DimensionMismatch {
                expected: ls.len(),
                found: ss.len(),
            });
        }
        if ls.iter().chain(&ss).any(|v| !v.is_finite()) {
            return Err(Error::InvalidFeature("non-finite sum".into()));
        }
        if n == 0 {
            if ls.iter().chain(&ss).any(|&v| v != 0.0) {
                return Err(Error::InvalidFeature("empty summary with non-zero sums".into()));
            }
        } else {
            for (j, (&l, &s)) in ls.iter().zip(&ss).enumerate() {
                let floor = l * l / n as f64;
                if s < floor - 1e-9 * floor.abs().max(1.0) {
                    return Err(Error::InvalidFeature(format!(
                        "squared sum {s} below LS^2/n = {floor} in dimension {j}"
                    )));
                }
            }
        }
        Ok(Self { n, ls, ss })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.ls.len()
    }

    pub fn ls(&self) -> &[f64] {
        &self.ls
    }

    pub fn ss(&self) -> &[f64] {
        &self.ss
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Summary of the union of two disjoint point sets.
    pub fn add(&self, other: &CfVector) -> Result<CfVector> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let mut out = self.clone();
        out.absorb(other);
        Ok(out)
    }

    /// In-place `self += other`; dimensions must already agree.
    pub(crate) fn absorb(&mut self, other: &CfVector) {
        debug_assert_eq!(self.dim(), other.dim());
        self.n += other.n;
        for (a, b) in self.ls.iter_mut().zip(&other.ls) {
            *a += b;
        }
        for (a, b) in self.ss.iter_mut().zip(&other.ss) {
            *a += b;
        }
    }

    pub(crate) fn absorb_point(&mut self, x: &[f64]) {
        debug_assert_eq!(self.dim(), x.len());
        self.n += 1;
        for ((l, s), &v) in self.ls.iter_mut().zip(self.ss.iter_mut()).zip(x) {
            *l += v;
            *s += v * v;
        }
    }

    pub fn centroid(&self) -> Result<Vec<f64>> {
        if self.n == 0 {
            return Err(Error::EmptyCluster("centroid"));
        }
        let n = self.n as f64;
        Ok(self.ls.iter().map(|l| l / n).collect())
    }

    /// Root-mean-square distance of the members to the centroid.
    pub fn radius(&self) -> Result<f64> {
        if self.n == 0 {
            return Err(Error::EmptyCluster("radius"));
        }
        let n = self.n as f64;
        let ss: f64 = self.ss.iter().sum();
        let centroid_sq: f64 = self.ls.iter().map(|l| (l / n) * (l / n)).sum();
        Ok(clamped_sqrt(ss / n - centroid_sq))
    }

    /// Root-mean-square pairwise distance between members; zero for a
    /// singleton.
    pub fn diameter(&self) -> Result<f64> {
        match self.n {
            0 => Err(Error::EmptyCluster("diameter")),
            1 => Ok(0.0),
            n => {
                let n = n as f64;
                let ss: f64 = self.ss.iter().sum();
                let ls_sq: f64 = self.ls.iter().map(|l| l * l).sum();
                Ok(clamped_sqrt((2.0 * n * ss - 2.0 * ls_sq) / (n * (n - 1.0))))
            }
        }
    }

    /// Squared Euclidean distance from the centroid to `x`.
    fn centroid_sq_dist_to(&self, x: &[f64]) -> f64 {
        let n = self.n as f64;
        self.ls
            .iter()
            .zip(x)
            .map(|(l, v)| {
                let d = l / n - v;
                d * d
            })
            .sum()
    }

    /// Squared Euclidean distance between two centroids.
    fn centroid_sq_dist(&self, other: &CfVector) -> f64 {
        let (n1, n2) = (self.n as f64, other.n as f64);
        self.ls
            .iter()
            .zip(&other.ls)
            .map(|(a, b)| {
                let d = a / n1 - b / n2;
                d * d
            })
            .sum()
    }
}

/// Componentwise sum of two summaries.
pub fn cf_add(a: &CfVector, b: &CfVector) -> Result<CfVector> {
    a.add(b)
}

// Negative radicands only arise from cancellation; the true value is >= 0.
fn clamped_sqrt(radicand: f64) -> f64 {
    radicand.max(0.0).sqrt()
}

/// Structural parameters of the tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CfTreeParams {
    /// Maximum entries per node, leaf or internal.
    pub branching_factor: usize,
    /// Maximum diameter a leaf entry may reach by absorbing a point.
    pub threshold: f64,
}

impl Default for CfTreeParams {
    fn default() -> Self {
        Self {
            branching_factor: 8,
            threshold: 0.27,
        }
    }
}

impl CfTreeParams {
    pub fn new(branching_factor: usize, threshold: f64) -> Result<Self> {
        let params = Self {
            branching_factor,
            threshold,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.branching_factor < 2 {
            return Err(Error::InvalidParameter(format!(
                "branching factor must be >= 2, got {}",
                self.branching_factor
            )));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "diameter threshold must be a positive finite number, got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// A leaf-level sub-cluster: its summary plus the row ids it holds.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafEntry {
    cf: CfVector,
    members: Vec<usize>,
}

impl LeafEntry {
    pub fn new(cf: CfVector, members: Vec<usize>) -> Result<Self> {
        if cf.n() != members.len() {
            return Err(Error::InvalidFeature(format!(
                "summary counts {} points but {} members were given",
                cf.n(),
                members.len()
            )));
        }
        Ok(Self { cf, members })
    }

    fn singleton(point: DataPoint<'_>) -> Self {
        Self {
            cf: CfVector::from_point(point.values),
            members: vec![point.row_id],
        }
    }

    pub fn cf(&self) -> &CfVector {
        &self.cf
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }
}

/// An internal entry: the summed summary of a child subtree.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalEntry {
    cf: CfVector,
    child: CfNode,
}

impl InternalEntry {
    /// Wraps a non-empty child node, summing its entries into the summary.
    pub fn new(child: CfNode) -> Result<Self> {
        let cf = child.summary().ok_or(Error::EmptyNode)?;
        Ok(Self { cf, child })
    }

    pub fn cf(&self) -> &CfVector {
        &self.cf
    }

    pub fn child(&self) -> &CfNode {
        &self.child
    }
}

/// Shared behaviour of leaf and internal entries for the split/merge routines.
trait Entry {
    fn cf(&self) -> &CfVector;
}

impl Entry for LeafEntry {
    fn cf(&self) -> &CfVector {
        &self.cf
    }
}

impl Entry for InternalEntry {
    fn cf(&self) -> &CfVector {
        &self.cf
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CfNode {
    Leaf(Vec<LeafEntry>),
    Internal(Vec<InternalEntry>),
}

impl CfNode {
    pub fn len(&self) -> usize {
        match self {
            CfNode::Leaf(e) => e.len(),
            CfNode::Internal(e) => e.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, CfNode::Leaf(_))
    }

    /// Summary of entry `i`.
    pub fn entry_cf(&self, i: usize) -> Option<&CfVector> {
        match self {
            CfNode::Leaf(e) => e.get(i).map(|e| &e.cf),
            CfNode::Internal(e) => e.get(i).map(|e| &e.cf),
        }
    }

    pub fn leaf_entries(&self) -> Option<&[LeafEntry]> {
        match self {
            CfNode::Leaf(e) => Some(e),
            CfNode::Internal(_) => None,
        }
    }

    pub fn internal_entries(&self) -> Option<&[InternalEntry]> {
        match self {
            CfNode::Leaf(_) => None,
            CfNode::Internal(e) => Some(e),
        }
    }

    /// Sum of all entry summaries, or `None` for an empty node.
    pub fn summary(&self) -> Option<CfVector> {
        fn sum<E: Entry>(entries: &[E]) -> Option<CfVector> {
            let (first, rest) = entries.split_first()?;
            let mut cf = first.cf().clone();
            for e in rest {
                cf.absorb(e.cf());
            }
            Some(cf)
        }
        match self {
            CfNode::Leaf(e) => sum(e),
            CfNode::Internal(e) => sum(e),
        }
    }

    fn take_entries_into(&mut self, other: CfNode) {
        match (self, other) {
            (CfNode::Leaf(a), CfNode::Leaf(b)) => a.extend(b),
            (CfNode::Internal(a), CfNode::Internal(b)) => a.extend(b),
            _ => unreachable!("sibling subtrees of a height-balanced tree have the same kind"),
        }
    }
}

fn closest_index<E: Entry>(entries: &[E], x: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in entries.iter().enumerate() {
        let d = e.cf().centroid_sq_dist_to(x);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

fn farthest_pair<E: Entry>(entries: &[E]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            let d = entries[i].cf().centroid_sq_dist(entries[j].cf());
            if best.is_none_or(|(_, _, bd)| d > bd) {
                best = Some((i, j, d));
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}

fn closest_pair<E: Entry>(entries: &[E]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            let d = entries[i].cf().centroid_sq_dist(entries[j].cf());
            if best.is_none_or(|(_, _, bd)| d < bd) {
                best = Some((i, j, d));
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}

/// Partitions entries around the farthest pair of centroids. Each remaining
/// entry follows the nearer seed (the first seed on ties); relative order is
/// kept within each side. Once one side holds `cap` entries the rest go to
/// the other side.
fn split_entries<E: Entry>(entries: Vec<E>, cap: usize) -> Result<(Vec<E>, Vec<E>)> {
    if entries.len() < 2 {
        return Err(Error::TooFewPoints {
            what: "node split",
            needed: 2,
            found: entries.len(),
        });
    }
    let (s1, s2) = farthest_pair(&entries).expect("at least two entries");
    let seed1 = entries[s1].cf().clone();
    let seed2 = entries[s2].cf().clone();
    let mut left = Vec::new();
    let mut right = Vec::new();
    // Seeds count against `cap` from the start.
    let (mut n_left, mut n_right) = (1, 1);
    for (i, e) in entries.into_iter().enumerate() {
        if i == s1 {
            left.push(e);
        } else if i == s2 {
            right.push(e);
        } else if n_left >= cap {
            right.push(e);
            n_right += 1;
        } else if n_right >= cap || e.cf().centroid_sq_dist(&seed1) <= e.cf().centroid_sq_dist(&seed2) {
            left.push(e);
            n_left += 1;
        } else {
            right.push(e);
            n_right += 1;
        }
    }
    Ok((left, right))
}

/// Index of the entry whose centroid is nearest to `point`; lowest index
/// wins ties.
pub fn choose_closest_entry(node: &CfNode, point: &[f64]) -> Result<usize> {
    let dim = node.entry_cf(0).ok_or(Error::EmptyNode)?.dim();
    if dim != point.len() {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: point.len(),
        });
    }
    let idx = match node {
        CfNode::Leaf(e) => closest_index(e, point),
        CfNode::Internal(e) => closest_index(e, point),
    };
    idx.ok_or(Error::EmptyNode)
}

/// Splits a node into two nodes of the same kind seeded by its farthest pair
/// of entries.
pub fn split_node(node: CfNode) -> Result<(CfNode, CfNode)> {
    match node {
        CfNode::Leaf(e) => {
            let (a, b) = split_entries(e, usize::MAX)?;
            Ok((CfNode::Leaf(a), CfNode::Leaf(b)))
        }
        CfNode::Internal(e) => {
            let (a, b) = split_entries(e, usize::MAX)?;
            Ok((CfNode::Internal(a), CfNode::Internal(b)))
        }
    }
}

/// Merges the closest pair of children of an internal node unless that pair
/// is `excluded`. The merged child keeps both entry lists intact; if it then
/// holds more than `branching_factor` entries it is split again, with neither
/// half exceeding `branching_factor`.
///
/// Leaf nodes are left alone: their entries are sub-clusters bound by the
/// diameter threshold, not children.
pub fn merge_refine(node: &mut CfNode, excluded: (usize, usize), branching_factor: usize) {
    let CfNode::Internal(entries) = node else {
        return;
    };
    if entries.len() < 3 {
        return;
    }
    let Some((i, j)) = closest_pair(entries) else {
        return;
    };
    let excluded = (excluded.0.min(excluded.1), excluded.0.max(excluded.1));
    if (i, j) == excluded {
        return;
    }

    let absorbed = entries.remove(j);
    let target = &mut entries[i];
    target.cf.absorb(&absorbed.cf);
    target.child.take_entries_into(absorbed.child);

    if target.child.len() > branching_factor {
        let child = std::mem::replace(&mut target.child, CfNode::Leaf(Vec::new()));
        let (a, b) = match child {
            CfNode::Leaf(e) => {
                let (a, b) = split_entries(e, branching_factor).expect("overfull node");
                (CfNode::Leaf(a), CfNode::Leaf(b))
            }
            CfNode::Internal(e) => {
                let (a, b) = split_entries(e, branching_factor).expect("overfull node");
                (CfNode::Internal(a), CfNode::Internal(b))
            }
        };
        entries[i] = InternalEntry::new(a).expect("split halves are non-empty");
        entries.insert(i + 1, InternalEntry::new(b).expect("split halves are non-empty"));
    }
}

/// A micro-cluster extracted from the tree leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroCluster {
    pub cf: CfVector,
    pub members: Vec<usize>,
}

impl MicroCluster {
    /// Rebuilds a micro-cluster from member row ids, recomputing the summary
    /// from the raw rows returned by `row`.
    pub fn from_members<'a, F>(dim: usize, members: Vec<usize>, row: F) -> Result<Self>
    where
        F: Fn(usize) -> &'a [f64],
    {
        let cf = CfVector::from_points(dim, members.iter().map(|&r| row(r)))?;
        Ok(Self { cf, members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Clustering-feature tree. Single writer; a finished tree is read-only.
#[derive(Debug, Clone)]
pub struct CfTree {
    params: CfTreeParams,
    dim: Option<usize>,
    root: CfNode,
    n_points: usize,
}

impl CfTree {
    pub fn new(params: CfTreeParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            dim: None,
            root: CfNode::Leaf(Vec::new()),
            n_points: 0,
        })
    }

    /// Builds a tree by inserting rows in order; row ids are the positions.
    pub fn build<'a, I>(params: CfTreeParams, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut tree = Self::new(params)?;
        for (row_id, values) in rows.into_iter().enumerate() {
            tree.insert(DataPoint::new(row_id, values))?;
        }
        Ok(tree)
    }

    pub fn params(&self) -> &CfTreeParams {
        &self.params
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    pub fn root(&self) -> &CfNode {
        &self.root
    }

    /// Number of inserted points.
    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    /// Number of node levels; a lone leaf root has height 1.
    pub fn height(&self) -> usize {
        let mut h = 1;
        let mut node = &self.root;
        while let CfNode::Internal(entries) = node {
            h += 1;
            node = &entries[0].child;
        }
        h
    }

    pub fn insert(&mut self, point: DataPoint<'_>) -> Result<()> {
        let dim = *self.dim.get_or_insert(point.values.len());
        if point.values.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: point.values.len(),
            });
        }
        if let Some(component) = point.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: point.row_id,
                component,
            });
        }

        if let Some((a, b)) = insert_into(&mut self.root, point, &self.params) {
            self.root = CfNode::Internal(vec![
                InternalEntry::new(a).expect("split halves are non-empty"),
                InternalEntry::new(b).expect("split halves are non-empty"),
            ]);
        }
        self.n_points += 1;
        Ok(())
    }

    /// One micro-cluster per leaf entry, in left-to-right order.
    pub fn leaf_micro_clusters(&self) -> Vec<MicroCluster> {
        let mut out = Vec::new();
        collect_leaves(&self.root, &mut out);
        out
    }
}

fn collect_leaves(node: &CfNode, out: &mut Vec<MicroCluster>) {
    match node {
        CfNode::Leaf(entries) => out.extend(entries.iter().map(|e| MicroCluster {
            cf: e.cf.clone(),
            members: e.members.clone(),
        })),
        CfNode::Internal(entries) => {
            for e in entries {
                collect_leaves(&e.child, out);
            }
        }
    }
}

/// Inserts below `node`. Returns the two halves when `node` overflowed and
/// had to be split; the caller replaces `node` with them.
fn insert_into(node: &mut CfNode, point: DataPoint<'_>, params: &CfTreeParams) -> Option<(CfNode, CfNode)> {
    let b = params.branching_factor;
    match node {
        CfNode::Leaf(entries) => {
            match closest_index(entries, point.values) {
                Some(i) => {
                    let mut grown = entries[i].cf.clone();
                    grown.absorb_point(point.values);
                    let diameter = grown.diameter().expect("non-empty");
                    if diameter <= params.threshold {
                        entries[i].cf = grown;
                        entries[i].members.push(point.row_id);
                    } else {
                        entries.push(LeafEntry::singleton(point));
                    }
                }
                None => entries.push(LeafEntry::singleton(point)),
            }
            if entries.len() > b {
                let taken = std::mem::take(entries);
                let (l, r) = split_entries(taken, b).expect("overfull node");
                return Some((CfNode::Leaf(l), CfNode::Leaf(r)));
            }
            None
        }
        CfNode::Internal(entries) => {
            let i = closest_index(entries, point.values).expect("internal nodes are non-empty");
            match insert_into(&mut entries[i].child, point, params) {
                None => {
                    entries[i].cf.absorb_point(point.values);
                    None
                }
                Some((l, r)) => {
                    entries[i] = InternalEntry::new(l).expect("split halves are non-empty");
                    entries.insert(i + 1, InternalEntry::new(r).expect("split halves are non-empty"));
                    if entries.len() > b {
                        let taken = std::mem::take(entries);
                        let (l, r) = split_entries(taken, b).expect("overfull node");
                        return Some((CfNode::Internal(l), CfNode::Internal(r)));
                    }
                    merge_refine(node, (i, i + 1), b);
                    None
                }
            }
        }
    }
}
