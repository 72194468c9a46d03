use serde::{Deserialize, Serialize};

use super::{CellCouplingTensor, CmfModel};
use crate::{Error, Result};

/// Weights of the additive combination
/// `γ_mf · cmf(a, j) + γ_d · (μ + bias(a, j))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub gamma_mf: f64,
    pub gamma_d: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            gamma_mf: 1.0,
            gamma_d: 0.0,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.gamma_mf.is_finite() || !self.gamma_d.is_finite() {
            return Err(Error::Config("ensemble weights must be finite".into()));
        }
        if self.gamma_mf == 0.0 && self.gamma_d == 0.0 {
            return Err(Error::Config("at least one ensemble weight must be non-zero".into()));
        }
        Ok(())
    }

    /// Combines component predictions and clamps to the model's scale.
    pub fn combine(&self, cmf: &CmfModel, cmf_prediction: f64, prior: f64) -> f64 {
        cmf.core()
            .scale()
            .clamp(self.gamma_mf * cmf_prediction + self.gamma_d * prior)
    }
}

pub fn predict_ensemble(
    cmf: &CmfModel,
    tensor: &CellCouplingTensor,
    config: &EnsembleConfig,
    user: &str,
    item: &str,
) -> Result<f64> {
    config.validate()?;
    let base = cmf.predict(user, item)?;
    let bias = super::predict_coupling_bias(tensor, user, item)?;
    Ok(config.combine(cmf, base, tensor.global_mean() + bias))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::{MfConfig, RatingMatrixView};
    use crate::coupled::cells::tests::gender_genre;
    use crate::coupled::{build_cell_couplings, train_cmf, CmfConfig};
    use crate::similarity::build_object_sim_matrix;
    use crate::store::Side;
    use approx::assert_abs_diff_eq;

    fn fixture() -> (CmfModel, CellCouplingTensor) {
        let ds = gender_genre();
        let view = RatingMatrixView::for_dataset(&ds, ds.ratings.entries()).unwrap();
        let users = build_object_sim_matrix(&ds.users, Side::User).unwrap();
        let items = build_object_sim_matrix(&ds.items, Side::Item).unwrap();
        let config = CmfConfig {
            mf: MfConfig {
                factors: 2,
                epochs: 20,
                ..MfConfig::default()
            },
            ..CmfConfig::default()
        };
        let cmf = train_cmf(&view, &users, &items, &config).unwrap();
        let tensor = build_cell_couplings(&ds, ds.ratings.entries(), 0.0).unwrap();
        (cmf, tensor)
    }

    #[test]
    fn reductions() {
        let (cmf, tensor) = fixture();
        let only_cmf = EnsembleConfig { gamma_mf: 1.0, gamma_d: 0.0 };
        assert_eq!(
            predict_ensemble(&cmf, &tensor, &only_cmf, "u1", "m1").unwrap(),
            cmf.predict("u1", "m1").unwrap()
        );
        let only_prior = EnsembleConfig { gamma_mf: 0.0, gamma_d: 1.0 };
        assert_abs_diff_eq!(
            predict_ensemble(&cmf, &tensor, &only_prior, "u1", "m1").unwrap(),
            4.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn equal_components() {
        let (cmf, _) = fixture();
        let half = EnsembleConfig { gamma_mf: 0.5, gamma_d: 0.5 };
        assert_eq!(half.combine(&cmf, 4.0, 4.0), 4.0);
        assert_eq!(half.combine(&cmf, 9.0, 9.0), 5.0);
        assert!(EnsembleConfig { gamma_mf: 0.0, gamma_d: 0.0 }.validate().is_err());
        assert!(EnsembleConfig { gamma_mf: f64::NAN, gamma_d: 1.0 }.validate().is_err());
    }
}
