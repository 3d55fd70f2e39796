//! Pixelwise confusion counts, precision/recall/F1 and the per-pixel
//! agreement map between a predicted and a reference wetland mask.

use alloc::vec::Vec;

use crate::geo::Mask;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("mask dimensions differ")]
    DimMismatch,
    #[error("empty evaluation support: no valid pixels")]
    EmptySupport,
    #[error("undefined {0}: zero denominator")]
    Undefined(&'static str),
}

/// Pixel counts with wetland as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    #[inline]
    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

impl core::iter::Sum for Confusion {
    fn sum<I: Iterator<Item = Confusion>>(iter: I) -> Self {
        iter.fold(Confusion::default(), |mut acc, c| {
            acc.merge(&c);
            acc
        })
    }
}

/// Count agreement over pixels where `validity` is set.
pub fn confusion(pred: &Mask, label: &Mask, validity: &Mask) -> Result<Confusion, MetricsError> {
    if !pred.same_dims(label) || !pred.same_dims(validity) {
        return Err(MetricsError::DimMismatch);
    }
    let mut c = Confusion::default();
    for ((&p, &l), &v) in pred.bits().iter().zip(label.bits()).zip(validity.bits()) {
        if v {
            c.record(p, l);
        }
    }
    if c.total() == 0 {
        return Err(MetricsError::EmptySupport);
    }
    Ok(c)
}

/// Count `(predicted, actual)` pairs.
pub fn confusion_from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Confusion {
    let mut c = Confusion::default();
    for (p, a) in pairs {
        c.record(p, a);
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Harmonic mean of precision and recall.
pub fn f1_score(precision: f64, recall: f64) -> Result<f64, MetricsError> {
    if precision + recall == 0.0 {
        return Err(MetricsError::Undefined("f1"));
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

pub fn precision_recall_f1(c: &Confusion) -> Result<Scores, MetricsError> {
    if c.tp + c.fp == 0 {
        return Err(MetricsError::Undefined("precision"));
    }
    if c.tp + c.fn_ == 0 {
        return Err(MetricsError::Undefined("recall"));
    }
    let precision = c.tp as f64 / (c.tp + c.fp) as f64;
    let recall = c.tp as f64 / (c.tp + c.fn_) as f64;
    Ok(Scores {
        precision,
        recall,
        f1: f1_score(precision, recall)?,
    })
}

/// Unweighted mean of per-fold scores, skipping folds whose scores are undefined.
pub fn macro_average(per_fold: &[Result<Scores, MetricsError>]) -> Option<Scores> {
    let ok: Vec<&Scores> = per_fold.iter().filter_map(|s| s.as_ref().ok()).collect();
    if ok.is_empty() {
        return None;
    }
    let n = ok.len() as f64;
    Some(Scores {
        precision: ok.iter().map(|s| s.precision).sum::<f64>() / n,
        recall: ok.iter().map(|s| s.recall).sum::<f64>() / n,
        f1: ok.iter().map(|s| s.f1).sum::<f64>() / n,
    })
}

/// Per-pixel comparison category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Agreement {
    /// Both masks mark wetland.
    Agree = 0,
    FalsePositive = 1,
    FalseNegative = 2,
    /// Both masks mark non-wetland.
    Background = 3,
    /// Outside the evaluated support.
    NoData = 4,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgreementMap {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<Agreement>,
}

impl AgreementMap {
    pub fn count(&self, category: Agreement) -> u64 {
        self.cells.iter().filter(|&&c| c == category).count() as u64
    }
}

pub fn agreement_map(pred: &Mask, label: &Mask, validity: &Mask) -> Result<AgreementMap, MetricsError> {
    if !pred.same_dims(label) || !pred.same_dims(validity) {
        return Err(MetricsError::DimMismatch);
    }
    let cells = pred
        .bits()
        .iter()
        .zip(label.bits())
        .zip(validity.bits())
        .map(|((&p, &l), &v)| match (v, p, l) {
            (false, _, _) => Agreement::NoData,
            (true, true, true) => Agreement::Agree,
            (true, true, false) => Agreement::FalsePositive,
            (true, false, true) => Agreement::FalseNegative,
            (true, false, false) => Agreement::Background,
        })
        .collect();
    Ok(AgreementMap {
        rows: pred.rows(),
        cols: pred.cols(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(rows: usize, cols: usize, on: &[(usize, usize)]) -> Mask {
        let mut m = Mask::new(rows, cols);
        for &(r, c) in on {
            m.set(r, c, true);
        }
        m
    }

    fn hand_case() -> (Mask, Mask, Mask) {
        let pred = mask(4, 4, &[(0, 0), (0, 1), (1, 0), (3, 3)]);
        let label = mask(4, 4, &[(0, 0), (0, 1), (1, 0), (2, 2)]);
        (pred, label, Mask::filled(4, 4, true))
    }

    #[test]
    fn hand_counted_case() {
        let (p, l, v) = hand_case();
        let c = confusion(&p, &l, &v).unwrap();
        assert_eq!(
            c,
            Confusion {
                tp: 3,
                fp: 1,
                fn_: 1,
                tn: 11
            }
        );
        let s = precision_recall_f1(&c).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.75, 0.75, 0.75));
        let a = agreement_map(&p, &l, &v).unwrap();
        assert_eq!(a.count(Agreement::FalsePositive), 1);
        assert_eq!(a.count(Agreement::FalseNegative), 1);
        assert_eq!(a.count(Agreement::Agree), 3);
    }

    #[test]
    fn perfect_agreement() {
        let (_, l, v) = hand_case();
        let c = confusion(&l, &l, &v).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        let a = agreement_map(&l, &l, &v).unwrap();
        assert_eq!(a.count(Agreement::FalsePositive) + a.count(Agreement::FalseNegative), 0);
    }

    #[test]
    fn errors_are_explicit() {
        let (p, l, _) = hand_case();
        assert_eq!(confusion(&p, &l, &Mask::new(4, 4)), Err(MetricsError::EmptySupport));
        assert_eq!(
            confusion(&p, &Mask::new(3, 4), &Mask::new(4, 4)),
            Err(MetricsError::DimMismatch)
        );
        let none = Confusion {
            tp: 0,
            fp: 0,
            fn_: 3,
            tn: 5,
        };
        assert_eq!(precision_recall_f1(&none), Err(MetricsError::Undefined("precision")));
        let none = Confusion {
            tp: 0,
            fp: 2,
            fn_: 0,
            tn: 5,
        };
        assert_eq!(precision_recall_f1(&none), Err(MetricsError::Undefined("recall")));
        assert!(f1_score(0.0, 0.0).is_err());
    }

    #[test]
    fn reported_precision_and_recall_give_reported_f1() {
        let f1 = f1_score(0.871, 0.901).unwrap();
        assert!((f1 - 0.886).abs() <= 0.0005, "{f1}");
        assert_eq!(f1_score(0.6, 0.6).unwrap(), 0.6);
    }

    #[test]
    fn macro_skips_undefined() {
        let s = Scores {
            precision: 0.5,
            recall: 1.0,
            f1: 2.0 / 3.0,
        };
        let t = Scores {
            precision: 1.0,
            recall: 0.5,
            f1: 2.0 / 3.0,
        };
        let m = macro_average(&[Ok(s), Err(MetricsError::Undefined("recall")), Ok(t)]).unwrap();
        assert_eq!(m.precision, 0.75);
        assert_eq!(macro_average(&[]), None);
    }
}
