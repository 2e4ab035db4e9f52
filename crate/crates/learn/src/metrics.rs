use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub classes: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub total: usize,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
}

fn safe_div(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl EvalReport {
    pub fn from_predictions(
        truth: &[usize],
        predicted: &[usize],
        class_names: &[String],
    ) -> EvalReport {
        let k = class_names.len();
        let mut confusion = vec![vec![0usize; k]; k];
        for (&t, &p) in truth.iter().zip(predicted) {
            confusion[t][p] += 1;
        }
        EvalReport::from_confusion(confusion, class_names)
    }

    pub fn from_confusion(confusion: Vec<Vec<usize>>, class_names: &[String]) -> EvalReport {
        let k = confusion.len();
        let total: usize = confusion.iter().flatten().sum();
        let mut classes = Vec::with_capacity(k);
        for c in 0..k {
            let tp = confusion[c][c] as f64;
            let support: usize = confusion[c].iter().sum();
            let predicted: usize = confusion.iter().map(|row| row[c]).sum();
            let precision = safe_div(tp, predicted as f64);
            let recall = safe_div(tp, support as f64);
            let f1 = safe_div(2.0 * precision * recall, precision + recall);
            classes.push(ClassMetrics {
                name: class_names.get(c).cloned().unwrap_or_else(|| c.to_string()),
                precision,
                recall,
                f1,
                support,
            });
        }
        let trace: usize = (0..k).map(|c| confusion[c][c]).sum();
        let avg = |weighted: bool| {
            let weight = |m: &ClassMetrics| {
                if weighted {
                    safe_div(m.support as f64, total as f64)
                } else {
                    1.0 / k as f64
                }
            };
            Averages {
                precision: classes.iter().map(|m| m.precision * weight(m)).sum(),
                recall: classes.iter().map(|m| m.recall * weight(m)).sum(),
                f1: classes.iter().map(|m| m.f1 * weight(m)).sum(),
            }
        };
        let macro_avg = avg(false);
        let weighted_avg = avg(true);
        EvalReport {
            accuracy: safe_div(trace as f64, total as f64),
            confusion,
            classes,
            total,
            macro_avg,
            weighted_avg,
        }
    }

    /// Aligned text table: one row per class, then accuracy and averages.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<14}{:>10}{:>10}{:>10}{:>10}",
            "class", "precision", "recall", "f1-score", "support"
        );
        for m in &self.classes {
            let _ = writeln!(
                out,
                "{:<14}{:>10.2}{:>10.2}{:>10.2}{:>10}",
                m.name, m.precision, m.recall, m.f1, m.support
            );
        }
        let _ = writeln!(
            out,
            "{:<14}{:>10}{:>10}{:>10.2}{:>10}",
            "accuracy", "-", "-", self.accuracy, self.total
        );
        for (label, a) in [
            ("macro avg", &self.macro_avg),
            ("weighted avg", &self.weighted_avg),
        ] {
            let _ = writeln!(
                out,
                "{:<14}{:>10.2}{:>10.2}{:>10.2}{:>10}",
                label, a.precision, a.recall, a.f1, self.total
            );
        }
        out
    }
}
