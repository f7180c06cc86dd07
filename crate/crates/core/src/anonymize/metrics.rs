use serde::{Deserialize, Serialize};

use crate::hierarchy::LevelVector;

use super::AnonymizedView;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossMetric {
    #[default]
    Precision,
    Discernibility,
    AvgClassSize,
}

impl LossMetric {
    /// Precision strictly grows along the lattice, so nodes above a satisfying node can
    /// never beat it. The other metrics react to suppression and have no such guarantee.
    pub fn is_monotone(self) -> bool {
        matches!(self, LossMetric::Precision)
    }

    pub fn select(self, loss: &Loss) -> f64 {
        match self {
            LossMetric::Precision => loss.precision,
            LossMetric::Discernibility => loss.discernibility as f64,
            LossMetric::AvgClassSize => loss.avg_class_size,
        }
    }
}

impl std::str::FromStr for LossMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "precision" => Ok(LossMetric::Precision),
            "discernibility" => Ok(LossMetric::Discernibility),
            "avg-class-size" => Ok(LossMetric::AvgClassSize),
            other => Err(format!("unknown loss metric `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Loss {
    pub precision: f64,
    pub discernibility: u64,
    pub avg_class_size: f64,
}

/// Mean generalization height over attributes, each normalized by its top level.
/// Every retained record carries the same levels, so averaging over records changes nothing.
pub fn precision_of(lv: &LevelVector, level_counts: &[usize]) -> f64 {
    if lv.is_empty() {
        return 0.0;
    }
    let sum: f64 = lv
        .levels()
        .iter()
        .zip(level_counts)
        .map(|(&l, &c)| if c > 1 { l as f64 / (c - 1) as f64 } else { 0.0 })
        .sum();
    sum / lv.len() as f64
}

pub(crate) fn loss_from_sizes(
    lv: &LevelVector,
    level_counts: &[usize],
    retained_sizes: &[usize],
    suppressed: usize,
    total: usize,
) -> Loss {
    let retained: usize = retained_sizes.iter().sum();
    let discernibility = retained_sizes.iter().map(|&s| (s * s) as u64).sum::<u64>()
        + (suppressed * total) as u64;
    let avg_class_size = if retained_sizes.is_empty() {
        0.0
    } else {
        retained as f64 / retained_sizes.len() as f64
    };
    Loss {
        precision: precision_of(lv, level_counts),
        discernibility,
        avg_class_size,
    }
}

pub fn loss_metrics(view: &AnonymizedView) -> Loss {
    loss_from_sizes(
        view.level_vector(),
        &view.quasi().level_counts(),
        &view.class_sizes(),
        view.suppressed().len(),
        view.source().len(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anonymize::tests::seven_records;

    #[test]
    fn zero_and_top_levels() {
        let (d, q) = seven_records();
        let zero = AnonymizedView::at(d.clone(), &q, LevelVector::zeros(3), 1, 0.0).unwrap();
        assert_eq!(zero.loss().precision, 0.0);

        let top = AnonymizedView::at(d, &q, q.top(), 1, 0.0).unwrap();
        let loss = top.loss();
        assert_eq!(loss.precision, 1.0);
        assert_eq!(loss.discernibility, 49);
        assert_eq!(loss.avg_class_size, 7.0);
    }

    #[test]
    fn seven_records_view_by_hand() {
        // Age at level 1 of 5 (1/4), Gender and ZIP at level 0: (1/4 + 0 + 0) / 3.
        // Classes of size 4 and 3: 16 + 9. Seven records in two classes.
        let (d, q) = seven_records();
        let view = AnonymizedView::at(d, &q, LevelVector(vec![1, 0, 0]), 2, 0.0).unwrap();
        let loss = view.loss();
        assert!((loss.precision - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(loss.discernibility, 25);
        assert_eq!(loss.avg_class_size, 3.5);
    }

    #[test]
    fn suppression_penalty() {
        // Raw level: classes {18,13121} (1), three pairs; k=2 suppresses the singleton.
        let (d, q) = seven_records();
        let view = AnonymizedView::at(d, &q, LevelVector::zeros(3), 2, 0.2).unwrap();
        assert_eq!(view.suppressed().len(), 1);
        let loss = view.loss();
        assert_eq!(loss.discernibility, 4 + 4 + 4 + 7);
        assert_eq!(loss.avg_class_size, 2.0);
    }

    #[test]
    fn metric_names() {
        assert_eq!("precision".parse::<LossMetric>().unwrap(), LossMetric::Precision);
        assert_eq!("avg-class-size".parse::<LossMetric>().unwrap(), LossMetric::AvgClassSize);
        assert!("entropy".parse::<LossMetric>().is_err());
    }
}
