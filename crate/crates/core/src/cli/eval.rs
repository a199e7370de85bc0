//! Accuracy, recall and confusion-matrix bookkeeping.

use std::fmt;
use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub labels: Vec<String>,
    /// `confusion[true][predicted]`, rows and columns in model label order.
    pub confusion: Vec<Vec<usize>>,
    /// Filled when the report aggregates cross-validation folds.
    pub fold_accuracies: Vec<f64>,
}

impl EvalReport {
    pub fn new(labels: Vec<String>) -> Self {
        let c = labels.len();
        EvalReport {
            labels,
            confusion: vec![vec![0; c]; c],
            fold_accuracies: Vec::new(),
        }
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.confusion[truth][predicted] += 1;
    }

    /// Adds every cell of `other` (same label order).
    pub fn merge(&mut self, other: &EvalReport) {
        for (row, orow) in self.confusion.iter_mut().zip(&other.confusion) {
            for (a, b) in row.iter_mut().zip(orow) {
                *a += b;
            }
        }
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.labels.len()).map(|c| self.confusion[c][c]).sum()
    }

    /// Percentage of correct decisions; 0 for an empty report.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            t => 100.0 * self.correct() as f64 / t as f64,
        }
    }

    pub fn class_count(&self, c: usize) -> usize {
        self.confusion[c].iter().sum()
    }

    /// Recall of class `c` in percent, `None` without test samples.
    pub fn recall(&self, c: usize) -> Option<f64> {
        match self.class_count(c) {
            0 => None,
            n => Some(100.0 * self.confusion[c][c] as f64 / n as f64),
        }
    }

    pub fn write_delimited<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "metric,value")?;
        writeln!(w, "accuracy,{:.4}", self.accuracy())?;
        writeln!(w, "total,{}", self.total())?;
        for (c, label) in self.labels.iter().enumerate() {
            let r = self.recall(c).map_or_else(|| "".to_string(), |r| format!("{r:.4}"));
            writeln!(w, "recall:{label},{r}")?;
        }
        for (f, a) in self.fold_accuracies.iter().enumerate() {
            writeln!(w, "fold:{f},{a:.4}")?;
        }
        write!(w, "confusion")?;
        for label in &self.labels {
            write!(w, ",{label}")?;
        }
        writeln!(w)?;
        for (label, row) in self.labels.iter().zip(&self.confusion) {
            write!(w, "{label}")?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "accuracy: {:.2}% ({}/{})",
            self.accuracy(),
            self.correct(),
            self.total()
        )?;
        if !self.fold_accuracies.is_empty() {
            let folds: Vec<String> = self.fold_accuracies.iter().map(|a| format!("{a:.2}")).collect();
            writeln!(f, "folds: {}", folds.join(" "))?;
        }
        let width = self.labels.iter().map(String::len).max().unwrap_or(5).max(5);
        write!(f, "{:width$}  {:>7}", "class", "recall")?;
        for label in &self.labels {
            write!(f, " {:>w$}", label, w = label.len().max(4))?;
        }
        writeln!(f)?;
        for (c, label) in self.labels.iter().enumerate() {
            let r = self.recall(c).map_or_else(|| "-".to_string(), |r| format!("{r:.2}"));
            write!(f, "{label:width$}  {r:>7}")?;
            for (j, v) in self.confusion[c].iter().enumerate() {
                write!(f, " {:>w$}", v, w = self.labels[j].len().max(4))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_is_consistent() {
        let mut r = EvalReport::new(vec!["a".into(), "b".into(), "c".into()]);
        for (t, p) in [(0, 0), (0, 1), (1, 1), (1, 1), (2, 0)] {
            r.record(t, p);
        }
        assert_eq!(r.total(), 5);
        assert!((r.accuracy() - 60.0).abs() < 1e-12);
        assert_eq!(r.recall(0), Some(50.0));
        assert_eq!(r.recall(1), Some(100.0));
        assert_eq!(r.recall(2), Some(0.0));
        let sum: usize = (0..3).map(|c| r.class_count(c)).sum();
        assert_eq!(sum, r.total());
        let text = r.to_string();
        assert!(text.starts_with("accuracy: 60.00% (3/5)"));
    }

    #[test]
    fn empty_row_has_no_recall() {
        let mut r = EvalReport::new(vec!["a".into(), "b".into()]);
        r.record(0, 0);
        assert_eq!(r.recall(1), None);
        assert_eq!(r.confusion[1], vec![0, 0]);
    }

    #[test]
    fn mean_std_values() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert!((m - 2.0).abs() < 1e-15);
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }
}
