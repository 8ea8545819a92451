use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 2 points to fit, got {0}")]
    TooFewPoints(usize),
    #[error("value {value} at parameter {param} is not positive; use constant-check instead")]
    NonPositive { param: f64, value: f64 },
    #[error("all parameters equal {0}; slope is undefined")]
    DegenerateParams(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    /// Natural log of the fitted coefficient.
    pub intercept: f64,
    /// Largest absolute gap between fit and data in natural-log space.
    pub residual: f64,
}

/// Ordinary least squares on `(ln x, ln y)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit, FitError> {
    if points.len() < 2 {
        return Err(FitError::TooFewPoints(points.len()));
    }
    if let Some(&(param, value)) = points.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(FitError::NonPositive { param, value });
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(FitError::DegenerateParams(points[0].0));
    }
    let sxy: f64 = logs.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual = logs
        .iter()
        .map(|&(x, y)| (intercept + exponent * x - y).abs())
        .fold(0.0, f64::max);
    Ok(PowerLawFit {
        exponent,
        intercept,
        residual,
    })
}

/// `max / min` of the values, or `None` when empty or the minimum is not positive.
pub fn max_min_ratio(values: &[f64]) -> Option<f64> {
    let min = values.iter().copied().reduce(f64::min)?;
    let max = values.iter().copied().reduce(f64::max)?;
    (min > 0.0).then(|| max / min)
}

/// Orders of magnitude between the smallest and largest parameter.
pub fn span_decades(params: &[f64]) -> f64 {
    match max_min_ratio(params) {
        Some(r) => r.log10(),
        None => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_linear() {
        let f = fit_power_law(&[(1.0, 2.0), (10.0, 20.0), (100.0, 200.0)]).unwrap();
        assert!((f.exponent - 1.0).abs() < 1e-12, "{}", f.exponent);
        assert!(f.residual < 1e-12);
    }

    #[test]
    fn quadratic() {
        let pts: Vec<(f64, f64)> = [1.0, 3.0, 10.0, 50.0].iter().map(|&x| (x, 3.0 * x * x)).collect();
        let f = fit_power_law(&pts).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn constant_series() {
        assert_eq!(max_min_ratio(&[5.0, 5.0, 5.0]), Some(1.0));
        assert_eq!(max_min_ratio(&[0.0, 5.0]), None);
        assert_eq!(max_min_ratio(&[]), None);
    }

    #[test]
    fn errors() {
        assert_eq!(fit_power_law(&[(1.0, 1.0)]), Err(FitError::TooFewPoints(1)));
        let e = fit_power_law(&[(1.0, 1.0), (2.0, 0.0)]).unwrap_err();
        assert!(e.to_string().contains("constant-check"));
        assert_eq!(fit_power_law(&[(3.0, 1.0), (3.0, 2.0)]), Err(FitError::DegenerateParams(3.0)));
    }

    #[test]
    fn span() {
        assert!((span_decades(&[10.0, 100.0, 10_000.0]) - 3.0).abs() < 1e-12);
        assert_eq!(span_decades(&[7.0]), 0.0);
    }

    proptest! {
        #[test]
        fn recovers_exact_power_laws(
            k in -3.0f64..3.0,
            c in 0.01f64..100.0,
            xs in proptest::collection::btree_set(1u32..100_000, 2..8),
        ) {
            let pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x as f64, c * (x as f64).powf(k))).collect();
            let f = fit_power_law(&pts).unwrap();
            prop_assert!((f.exponent - k).abs() < 1e-9);
            prop_assert!(f.residual < 1e-9);
        }

        #[test]
        fn fit_is_order_independent(mut pts in proptest::collection::vec((1.0f64..1e6, 1.0f64..1e6), 3..10)) {
            let a = fit_power_law(&pts);
            pts.reverse();
            let b = fit_power_law(&pts);
            match (a, b) {
                (Ok(a), Ok(b)) => prop_assert!((a.exponent - b.exponent).abs() < 1e-9),
                (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
            }
        }
    }
}
