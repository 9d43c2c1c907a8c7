//! The item × model score matrix every diagnostic starts from.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::FamilyConvention;
use crate::paired::{summarize_pair, PairedSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    items: Vec<String>,
    clusters: Option<Vec<String>>,
    model_names: Vec<String>,
    /// One column per model, each of length `items.len()`.
    scores: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(
        items: Vec<String>,
        clusters: Option<Vec<String>>,
        model_names: Vec<String>,
        scores: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = items.len();
        if n == 0 {
            return Err(Error::TooFewItems { need: 1, got: 0 });
        }
        if model_names.len() != scores.len() {
            return Err(Error::LengthMismatch {
                left: model_names.len(),
                right: scores.len(),
            });
        }
        let mut seen = HashSet::new();
        for name in &model_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateModel(name.clone()));
            }
        }
        let mut seen = HashSet::new();
        for (line, id) in items.iter().enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateItem {
                    line: line + 1,
                    id: id.clone(),
                });
            }
        }
        for (model, column) in scores.iter().enumerate() {
            if column.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: column.len(),
                });
            }
            if let Some(index) = column.iter().position(|v| !(0.0..=1.0).contains(v)) {
                if column[index].is_finite() {
                    return Err(Error::OutOfRange {
                        line: index + 1,
                        column: model_names[model].clone(),
                        value: column[index].to_string(),
                    });
                }
                return Err(Error::NonFinite { index });
            }
        }
        if let Some(labels) = &clusters {
            if labels.len() != n {
                return Err(Error::MissingClusters);
            }
        }
        Ok(Self {
            items,
            clusters,
            model_names,
            scores,
        })
    }

    /// A matrix with generated item ids and no clusters.
    pub fn from_columns(model_names: Vec<String>, scores: Vec<Vec<f64>>) -> Result<Self> {
        let n = scores.first().map_or(0, Vec::len);
        let items = (0..n).map(|i| format!("item{i}")).collect();
        Self::new(items, None, model_names, scores)
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_models(&self) -> usize {
        self.model_names.len()
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn model_names(&self) -> &[String] {
        &self.model_names
    }

    pub fn column(&self, model: usize) -> &[f64] {
        &self.scores[model]
    }

    pub fn clusters(&self) -> Option<&[String]> {
        self.clusters.as_deref()
    }

    pub fn is_binary(&self) -> bool {
        self.scores
            .iter()
            .all(|c| c.iter().all(|&v| v == 0.0 || v == 1.0))
    }

    pub fn model_index(&self, name: &str) -> Option<usize> {
        self.model_names.iter().position(|m| m == name)
    }

    pub fn mean_score(&self, model: usize) -> f64 {
        let c = &self.scores[model];
        c.iter().sum::<f64>() / c.len() as f64
    }

    pub fn summarize(&self, pair: ModelPair) -> Result<PairedSummary> {
        summarize_pair(&self.scores[pair.a], &self.scores[pair.b])
    }

    /// Per-item differences `X^A − X^B`.
    pub fn differences(&self, pair: ModelPair) -> Vec<f64> {
        self.scores[pair.a]
            .iter()
            .zip(&self.scores[pair.b])
            .map(|(a, b)| a - b)
            .collect()
    }

    pub fn with_clusters(&self, clusters: Option<Vec<String>>) -> Result<Self> {
        Self::new(
            self.items.clone(),
            clusters,
            self.model_names.clone(),
            self.scores.clone(),
        )
    }

    /// The rows at `keep`, in that order.
    pub fn select_items(&self, keep: &[usize]) -> Result<Self> {
        let pick = |v: &Vec<String>| keep.iter().map(|&i| v[i].clone()).collect::<Vec<_>>();
        Self::new(
            pick(&self.items),
            self.clusters.as_ref().map(pick),
            self.model_names.clone(),
            self.scores
                .iter()
                .map(|c| keep.iter().map(|&i| c[i]).collect())
                .collect(),
        )
    }

    /// Model indices ranked by mean score, best first; ties by name.
    pub fn ranking(&self) -> Vec<usize> {
        let means: Vec<f64> = (0..self.n_models()).map(|m| self.mean_score(m)).collect();
        let mut order: Vec<usize> = (0..self.n_models()).collect();
        order.sort_by(|&i, &j| {
            means[j]
                .total_cmp(&means[i])
                .then_with(|| self.model_names[i].cmp(&self.model_names[j]))
        });
        order
    }

    /// The pairs of the pre-declared family. Within a pair, `a` ranks higher.
    pub fn pairs(&self, convention: FamilyConvention) -> Vec<ModelPair> {
        let order = self.ranking();
        match convention {
            FamilyConvention::Adjacent => order
                .windows(2)
                .map(|w| ModelPair { a: w[0], b: w[1] })
                .collect(),
            FamilyConvention::AllPairs => {
                let mut out = Vec::new();
                for (i, &a) in order.iter().enumerate() {
                    for &b in &order[i + 1..] {
                        out.push(ModelPair { a, b });
                    }
                }
                out
            }
        }
    }
}

/// Column indices of two models in a [`ScoreMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelPair {
    pub a: usize,
    pub b: usize,
}
