use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fn_: u64,
    pub tn: u64,
    pub fp: u64,
}

impl Confusion {
    pub fn from_predictions(preds: &[bool], labels: &[bool]) -> Self {
        assert_eq!(preds.len(), labels.len(), "predictions and labels differ in length");
        let mut c = Confusion::default();
        for (&p, &y) in preds.iter().zip(labels) {
            match (p, y) {
                (true, true) => c.tp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
            }
        }
        c
    }

    fn rate(hits: u64, misses: u64) -> f64 {
        if hits + misses == 0 {
            0.0
        } else {
            hits as f64 / (hits + misses) as f64
        }
    }

    pub fn sensitivity(&self) -> f64 {
        Self::rate(self.tp, self.fn_)
    }

    pub fn specificity(&self) -> f64 {
        Self::rate(self.tn, self.fp)
    }

    pub fn g_mean(&self) -> f64 {
        (self.sensitivity() * self.specificity()).sqrt()
    }
}

/// Geometric mean of sensitivity and specificity. An empty class counts as
/// rate 0.
pub fn g_mean(preds: &[bool], labels: &[bool]) -> f64 {
    Confusion::from_predictions(preds, labels).g_mean()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn confusion_vectors(tp: usize, fn_: usize, tn: usize, fp: usize) -> (Vec<bool>, Vec<bool>) {
        let mut p = Vec::new();
        let mut y = Vec::new();
        for (n, pred, label) in [(tp, true, true), (fn_, false, true), (tn, false, false), (fp, true, false)] {
            p.extend(std::iter::repeat_n(pred, n));
            y.extend(std::iter::repeat_n(label, n));
        }
        (p, y)
    }

    #[test]
    fn perfect_classifier() {
        let y = [true, false, true, false];
        assert_eq!(g_mean(&y, &y), 1.0);
    }

    #[test]
    fn hand_computed() {
        let (p, y) = confusion_vectors(8, 2, 7, 3);
        let g = g_mean(&p, &y);
        assert!((g - (0.8f64 * 0.7).sqrt()).abs() < 1e-15);
        assert!((g - 0.7483).abs() < 1e-4);
    }

    #[test]
    fn all_positive_predictor() {
        let y = [true, false, false, true, false];
        assert_eq!(g_mean(&[true; 5], &y), 0.0);
    }

    #[test]
    fn empty_class_rate_is_zero() {
        assert_eq!(g_mean(&[true, true], &[true, true]), 0.0);
        assert_eq!(g_mean(&[], &[]), 0.0);
    }

    #[test]
    fn invariant_under_class_swap() {
        let (p, y) = confusion_vectors(5, 4, 9, 2);
        let flip = |v: &[bool]| v.iter().map(|b| !b).collect::<Vec<_>>();
        assert_eq!(g_mean(&p, &y), g_mean(&flip(&p), &flip(&y)));
    }
}
