//! Supervised cluster-validity measures over a cluster-by-class contingency
//! table: size-weighted entropy (bits), purity, precision and recall.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Counts of points per (cluster, class) pair. Rows follow ascending cluster
/// id, columns ascending class id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContingencyTable {
    pub cluster_ids: Vec<usize>,
    pub class_ids: Vec<usize>,
    pub counts: Vec<Vec<u64>>,
    pub cluster_sizes: Vec<u64>,
    pub class_sizes: Vec<u64>,
    pub total: u64,
}

impl ContingencyTable {
    /// Builds a table directly from a count matrix; cluster and class ids are
    /// the row and column positions.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let n_classes = counts.first().map_or(0, Vec::len);
        if let Some(bad) = counts.iter().find(|r| r.len() != n_classes) {
            return Err(Error::DimensionMismatch {
                expected: n_classes,
                found: bad.len(),
            });
        }
        let cluster_sizes: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
        let class_sizes: Vec<u64> = (0..n_classes).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        let total = cluster_sizes.iter().sum();
        Ok(Self {
            cluster_ids: (0..counts.len()).collect(),
            class_ids: (0..n_classes).collect(),
            counts,
            cluster_sizes,
            class_sizes,
            total,
        })
    }

    pub fn n_clusters(&self) -> usize {
        self.counts.len()
    }

    pub fn n_classes(&self) -> usize {
        self.class_sizes.len()
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.total == 0 {
            Err(Error::EmptyInput {
                context: "contingency table".into(),
            })
        } else {
            Ok(())
        }
    }

    /// Column of the largest count in row `i`; lowest column on ties.
    fn majority_class(&self, i: usize) -> usize {
        let row = &self.counts[i];
        let mut best = 0;
        for (j, &c) in row.iter().enumerate() {
            if c > row[best] {
                best = j;
            }
        }
        best
    }
}

/// Tabulates `(row, cluster)` pairs against per-row class ids in `labels`.
pub fn build_contingency<I>(assignments: I, labels: &[usize]) -> Result<ContingencyTable>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut cells: BTreeMap<usize, BTreeMap<usize, u64>> = BTreeMap::new();
    let mut classes: BTreeMap<usize, usize> = BTreeMap::new();
    for (row, cluster) in assignments {
        let class = *labels.get(row).ok_or(Error::Unlabeled { row })?;
        *cells.entry(cluster).or_default().entry(class).or_default() += 1;
        classes.entry(class).or_default();
    }
    for (pos, col) in classes.values_mut().enumerate() {
        *col = pos;
    }
    let counts = cells
        .values()
        .map(|row| {
            let mut out = vec![0u64; classes.len()];
            for (class, &c) in row {
                out[classes[class]] = c;
            }
            out
        })
        .collect();
    let mut table = ContingencyTable::from_counts(counts)?;
    table.cluster_ids = cells.keys().copied().collect();
    table.class_ids = classes.keys().copied().collect();
    Ok(table)
}

/// Size-weighted mean of per-cluster class entropies, in bits.
pub fn entropy(t: &ContingencyTable) -> Result<f64> {
    t.require_nonempty()?;
    let m = t.total as f64;
    let mut total = 0.0;
    for (row, &size) in t.counts.iter().zip(&t.cluster_sizes) {
        if size == 0 {
            continue;
        }
        let mi = size as f64;
        let e: f64 = row
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / mi;
                -p * p.log2()
            })
            .sum();
        total += mi / m * e;
    }
    Ok(total)
}

/// Fraction of points belonging to their cluster's majority class.
pub fn purity(t: &ContingencyTable) -> Result<f64> {
    t.require_nonempty()?;
    let majority: u64 = t.counts.iter().map(|row| row.iter().copied().max().unwrap_or(0)).sum();
    Ok(majority as f64 / t.total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecisionRecall {
    /// `precision[i][j] = m_ij / m_i`.
    pub precision: Vec<Vec<f64>>,
    /// `recall[i][j] = m_ij / m_j`.
    pub recall: Vec<Vec<f64>>,
    /// Majority class column per cluster row.
    pub majority: Vec<usize>,
    /// Size-weighted precision of each cluster's majority class.
    pub weighted_precision: f64,
    /// Size-weighted recall of each cluster's majority class.
    pub weighted_recall: f64,
}

pub fn precision_recall(t: &ContingencyTable) -> Result<PrecisionRecall> {
    t.require_nonempty()?;
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision: Vec<Vec<f64>> = t
        .counts
        .iter()
        .zip(&t.cluster_sizes)
        .map(|(row, &mi)| row.iter().map(|&c| ratio(c, mi)).collect())
        .collect();
    let recall: Vec<Vec<f64>> = t
        .counts
        .iter()
        .map(|row| row.iter().zip(&t.class_sizes).map(|(&c, &mj)| ratio(c, mj)).collect())
        .collect();
    let majority: Vec<usize> = (0..t.n_clusters()).map(|i| t.majority_class(i)).collect();
    let m = t.total as f64;
    let mut weighted_precision = 0.0;
    let mut weighted_recall = 0.0;
    for (i, &j) in majority.iter().enumerate() {
        let w = t.cluster_sizes[i] as f64 / m;
        if t.n_classes() > 0 {
            weighted_precision += w * precision[i][j];
            weighted_recall += w * recall[i][j];
        }
    }
    Ok(PrecisionRecall {
        precision,
        recall,
        majority,
        weighted_precision,
        weighted_recall,
    })
}

/// The single-number summary reported alongside a clustering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct MetricsSummary {
    pub entropy: f64,
    pub purity: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
}

pub fn summarize(t: &ContingencyTable) -> Result<MetricsSummary> {
    let pr = precision_recall(t)?;
    Ok(MetricsSummary {
        entropy: entropy(t)?,
        purity: purity(t)?,
        weighted_precision: pr.weighted_precision,
        weighted_recall: pr.weighted_recall,
    })
}
