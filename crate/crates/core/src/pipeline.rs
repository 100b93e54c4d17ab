//! Two-phase fit: early stopping on train/validation, then a refit on
//! train+validation for the selected number of epochs.

use crate::data::{zscore_apply, zscore_fit, Split};
use crate::error::Result;
use crate::evaluation::PredictionSet;
use crate::network::{refit_fixed_epochs, train_early_stopping, ArchitectureSpec, NetworkModel, TrainConfig, TrainReport};
use crate::scalar::Scalar;
use crate::scoring::ScoreParams;

#[derive(Clone, Debug)]
pub struct FitOutcome<T> {
    /// Refitted model; its normalization statistics come from train+validation.
    pub model: NetworkModel<T>,
    /// Scores of the early-stopping phase.
    pub report: TrainReport<T>,
}

/// Fits a network on raw (unnormalized) split data.
pub fn fit_two_phase<T: Scalar>(
    split: &Split<T>,
    arch: &ArchitectureSpec,
    p: &ScoreParams<T>,
    cfg: &TrainConfig,
) -> Result<FitOutcome<T>> {
    cfg.validate()?;
    let stats = zscore_fit(&split.train)?;
    let train = zscore_apply(&split.train, &stats)?;
    let val = zscore_apply(&split.val, &stats)?;
    let (_, report) = train_early_stopping(&train, &val, arch, p, cfg)?;

    let merged = split.train.concat(&split.val)?;
    let stats = zscore_fit(&merged)?;
    let merged = zscore_apply(&merged, &stats)?;
    let mut model = refit_fixed_epochs(&merged, arch, p, cfg, report.best_epoch)?;
    model.norm_stats = stats;
    model.feature_names = split.train.feature_names().to_vec();
    model.target_name = split.train.target_name().to_string();
    Ok(FitOutcome { model, report })
}

/// Predictions of `model` on a labeled dataset, paired with its targets.
pub fn predict_labeled<T: Scalar>(model: &NetworkModel<T>, data: &crate::data::Dataset<T>) -> Result<PredictionSet<T>> {
    let preds = model.predict_batch(data.features())?;
    PredictionSet::with_ids(preds, data.targets().to_vec(), data.row_ids().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split_dataset, synth_lognormal_regression};
    use crate::evaluation::mean_score;

    #[test]
    fn two_phase_uses_merged_statistics() {
        let syn = synth_lognormal_regression::<f64>(300, 3, &[0.0, 0.5, -0.3, 0.2], 0.4, 5).unwrap();
        let split = split_dataset(&syn.dataset, [0.4, 0.3, 0.3], 2).unwrap();
        let arch = ArchitectureSpec::dense(3, &[8]);
        let cfg = TrainConfig { max_epochs: 15, patience: 3, seed: 9, ..TrainConfig::default() };
        let p = ScoreParams::new(0.5, 1.0, 1.0).unwrap();
        let out = fit_two_phase(&split, &arch, &p, &cfg).unwrap();
        let merged = split.train.concat(&split.val).unwrap();
        assert_eq!(out.model.norm_stats, zscore_fit(&merged).unwrap());
        assert!(out.report.best_epoch >= 1);

        let again = fit_two_phase(&split, &arch, &p, &cfg).unwrap();
        assert_eq!(again.model.to_json().unwrap(), out.model.to_json().unwrap());

        let ps = predict_labeled(&out.model, &split.test).unwrap();
        assert_eq!(ps.ids(), split.test.row_ids());
        assert!(mean_score(&ps, &p).unwrap().is_finite());
    }
}
