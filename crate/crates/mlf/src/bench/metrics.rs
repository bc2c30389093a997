//! Relative error metrics over a discrete test set.

use crate::error::{Error, Result};

/// `(e_inf, e_2)` over the test set:
/// e_inf = max‖u*−u‖ / max‖u*‖, e_2 = ‖u*−u‖₂ / ‖u*‖₂, with the per-point
/// Euclidean magnitude across output components.
pub fn relative_errors(pred: &[Vec<f64>], exact: &[Vec<f64>]) -> Result<(f64, f64)> {
    if pred.len() != exact.len() || pred.is_empty() {
        return Err(Error::config("metric inputs must be equal-length, nonempty"));
    }
    let mut max_diff = 0.0f64;
    let mut max_exact = 0.0f64;
    let mut sum_diff = 0.0;
    let mut sum_exact = 0.0;
    for (p, e) in pred.iter().zip(exact) {
        let mut d2 = 0.0;
        let mut e2 = 0.0;
        for (pi, ei) in p.iter().zip(e) {
            let d = pi - ei;
            d2 += d * d;
            e2 += ei * ei;
        }
        max_diff = max_diff.max(d2.sqrt());
        max_exact = max_exact.max(e2.sqrt());
        sum_diff += d2;
        sum_exact += e2;
    }
    if max_exact == 0.0 {
        return Err(Error::numerical(
            "relative errors undefined: exact solution is identically zero on the test set",
        ));
    }
    Ok((max_diff / max_exact, (sum_diff / sum_exact).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_prediction_gives_zero() {
        let e = vec![vec![1.0], vec![-2.0], vec![0.5]];
        let (inf, two) = relative_errors(&e, &e).unwrap();
        assert_eq!((inf, two), (0.0, 0.0));
    }

    #[test]
    fn doubled_prediction_gives_one() {
        let e = vec![vec![1.0], vec![-2.0], vec![0.5]];
        let p: Vec<Vec<f64>> = e.iter().map(|v| vec![2.0 * v[0]]).collect();
        let (inf, two) = relative_errors(&p, &e).unwrap();
        assert_eq!((inf, two), (1.0, 1.0));
    }

    #[test]
    fn two_point_hand_case() {
        // exact {1, −2}, pred {1, −1}: e_inf = 1/2, e_2 = 1/√5
        let e = vec![vec![1.0], vec![-2.0]];
        let p = vec![vec![1.0], vec![-1.0]];
        let (inf, two) = relative_errors(&p, &e).unwrap();
        assert_eq!(inf, 0.5);
        assert!((two - 1.0 / 5.0f64.sqrt()).abs() <= 1e-16);
    }

    #[test]
    fn zero_exact_is_an_error() {
        let e = vec![vec![0.0], vec![0.0]];
        let p = vec![vec![1.0], vec![1.0]];
        assert!(relative_errors(&p, &e).is_err());
    }
}
