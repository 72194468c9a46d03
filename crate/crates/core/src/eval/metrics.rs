use crate::{Error, Result};

/// Mean absolute error over `(truth, prediction)` pairs.
pub fn mae(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("prediction pairs"));
    }
    Ok(pairs.iter().map(|(t, p)| (t - p).abs()).sum::<f64>() / pairs.len() as f64)
}

/// Root mean squared error over `(truth, prediction)` pairs.
pub fn rmse(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("prediction pairs"));
    }
    Ok((pairs.iter().map(|(t, p)| (t - p) * (t - p)).sum::<f64>() / pairs.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let perfect = [(3.0, 3.0), (5.0, 5.0)];
        assert_eq!(mae(&perfect).unwrap(), 0.0);
        assert_eq!(rmse(&perfect).unwrap(), 0.0);
        let offset: Vec<(f64, f64)> = (1..=5).map(|r| (r as f64, r as f64 + 1.0)).collect();
        assert_eq!(mae(&offset).unwrap(), 1.0);
        assert_eq!(rmse(&offset).unwrap(), 1.0);
        let pairs = [(3.0, 4.0), (5.0, 3.0)];
        assert_eq!(mae(&pairs).unwrap(), 1.5);
        assert!((rmse(&pairs).unwrap() - 2.5f64.sqrt()).abs() < 1e-15);
        assert!(mae(&[]).is_err());
        assert!(rmse(&[]).is_err());
    }
}
