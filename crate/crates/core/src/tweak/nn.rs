use super::{TweakResult, TweakStats};
use crate::error::{contract, Result};
use crate::forest::ShapeletForest;
use crate::series::{squared_distance, LabeledSeries, TimeSeries};

/// Nearest-neighbour baseline: replace `series` by the closest (Euclidean)
/// training series labeled `desired`. Only same-length training series are
/// considered; ties go to the earliest one. `success` is whatever the forest
/// predicts for the replacement.
pub fn tweak_nn(
    forest: &ShapeletForest,
    series: &TimeSeries,
    desired: &str,
    training: &[LabeledSeries],
) -> Result<TweakResult> {
    let target = forest.class_of(desired)?;
    let mut best: Option<(f64, &TimeSeries)> = None;
    for s in training {
        if s.label != desired || s.series.len() != series.len() {
            continue;
        }
        let ss = squared_distance(series.values(), s.series.values());
        if best.is_none_or(|(b, _)| ss < b) {
            best = Some((ss, &s.series));
        }
    }
    let (ss, nearest) = best.ok_or_else(|| {
        contract(format!(
            "no training series labeled '{desired}' with length {}",
            series.len()
        ))
    })?;
    let success = forest.predict_class(nearest.values())? == target;
    Ok(TweakResult {
        transformed: nearest.clone(),
        cost: ss.sqrt(),
        success,
        edits: Vec::new(),
        candidate: None,
        stats: TweakStats {
            predictions: 1,
            ..Default::default()
        },
        diagnostic: (!success).then(|| "nearest neighbour is not predicted as the desired label".into()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::tests::figure_tree;

    fn ls(label: &str, v: &[f64]) -> LabeledSeries {
        LabeledSeries::new(label, TimeSeries::new(v.to_vec()).unwrap())
    }

    #[test]
    fn picks_the_closest_of_the_desired_label() {
        let f = figure_tree();
        let t = TimeSeries::new(vec![0.0, 0.0, 0.0]).unwrap();
        let train = vec![
            ls("-", &[0.0, 0.0, 5.0]),
            ls("-", &[0.0, 3.0, 0.0]),
            ls("+", &[0.0, 0.0, 0.0]),
            ls("-", &[0.0, 0.0]),
        ];
        let r = tweak_nn(&f, &t, "-", &train).unwrap();
        assert_eq!(r.cost, 3.0);
        assert_eq!(r.transformed.values(), &[0.0, 3.0, 0.0]);
    }

    #[test]
    fn identical_training_series_costs_nothing() {
        let f = figure_tree();
        let t = TimeSeries::new(vec![0.0, 0.0, 0.0]).unwrap();
        let r = tweak_nn(&f, &t, "-", &[ls("-", t.values())]).unwrap();
        assert_eq!(r.cost, 0.0);
        assert!(r.success);
    }

    #[test]
    fn errors_without_candidates() {
        let f = figure_tree();
        let t = TimeSeries::new(vec![0.0, 0.0, 0.0]).unwrap();
        assert!(tweak_nn(&f, &t, "-", &[ls("+", &[1.0, 1.0, 1.0]), ls("-", &[1.0])]).is_err());
    }
}
