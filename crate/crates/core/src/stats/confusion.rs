use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::class_label;
use crate::error::{Error, Result};

/// Counts indexed `[true][predicted]`, accumulated over any number of runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix { counts: vec![vec![0; classes]; classes] }
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn accumulate(&mut self, predictions: &[usize], labels: &[usize]) -> Result<()> {
        if predictions.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} predictions for {} labels",
                predictions.len(),
                labels.len()
            )));
        }
        let k = self.classes();
        if let Some(bad) = predictions.iter().chain(labels).find(|&&c| c >= k) {
            return Err(Error::InvalidArgument(format!("class {bad} outside 0..{k}")));
        }
        for (&p, &l) in predictions.iter().zip(labels) {
            self.counts[l][p] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes() != self.classes() {
            return Err(Error::InvalidArgument("confusion matrices differ in size".into()));
        }
        for (row, o) in self.counts.iter_mut().zip(&other.counts) {
            for (c, v) in row.iter_mut().zip(o) {
                *c += v;
            }
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn errors(&self) -> u64 {
        self.total() - self.correct()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }

    /// Misclassifications into a neighbouring class (`|true − predicted| = 1`).
    pub fn adjacent_errors(&self) -> u64 {
        let k = self.classes();
        (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .filter(|&(i, j)| i.abs_diff(j) == 1)
            .map(|(i, j)| self.counts[i][j])
            .sum()
    }

    /// Misclassified samples whose true class lies in `classes`.
    pub fn errors_in_rows(&self, classes: std::ops::Range<usize>) -> u64 {
        classes
            .map(|i| self.counts[i].iter().sum::<u64>() - self.counts[i][i])
            .sum()
    }

    /// Per-class recall; classes without samples give NaN.
    pub fn per_class_accuracy(&self) -> Vec<f64> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, row)| row[i] as f64 / row.iter().sum::<u64>() as f64)
            .collect()
    }

    /// Each row divided by its sum, in percent; empty rows stay zero.
    pub fn row_percent(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let sum: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if sum == 0 { 0.0 } else { 100.0 * c as f64 / sum as f64 })
                    .collect()
            })
            .collect()
    }

    fn csv_with(&self, cell: impl Fn(usize, usize) -> String) -> String {
        let k = self.classes();
        let mut out = String::from("true");
        for j in 0..k {
            write!(out, ",{}", label(j, k)).unwrap();
        }
        out.push('\n');
        for i in 0..k {
            out.push_str(&label(i, k));
            for j in 0..k {
                write!(out, ",{}", cell(i, j)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn counts_csv(&self) -> String {
        self.csv_with(|i, j| self.counts[i][j].to_string())
    }

    pub fn percent_csv(&self) -> String {
        let p = self.row_percent();
        self.csv_with(|i, j| format!("{:.2}", p[i][j]))
    }
}

fn label(class: usize, classes: usize) -> String {
    if classes == 16 {
        class_label(class)
    } else {
        format!("c{class}")
    }
}
