//! Mann-Kendall trend statistic with the tie-corrected normal approximation.

use serde::{Deserialize, Serialize};

use super::SimulateError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannKendall {
    /// `Σ_{i<j} sign(x_j − x_i)`.
    pub s: i64,
    /// Variance of `S` under no trend, corrected for ties.
    pub variance: f64,
    /// Continuity-corrected normal score; 0 when `S = 0` or the variance
    /// vanishes.
    pub z: f64,
}

pub fn mann_kendall(series: &[f64]) -> Result<MannKendall, SimulateError> {
    let n = series.len();
    if n < 2 {
        return Err(SimulateError::TooShort(n));
    }
    if series.iter().any(|x| x.is_nan()) {
        return Err(SimulateError::Input("series contains NaN".into()));
    }
    let mut s: i64 = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += match series[j].partial_cmp(&series[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * (t - 1.0) * (2.0 * t + 5.0);
        i = j;
    }
    let nf = n as f64;
    let variance = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - tie_term) / 18.0;
    let z = if s == 0 || variance <= 0.0 {
        0.0
    } else if s > 0 {
        (s - 1) as f64 / variance.sqrt()
    } else {
        (s + 1) as f64 / variance.sqrt()
    };
    Ok(MannKendall { s, variance, z })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_series() {
        assert_eq!(mann_kendall(&[1.0, 2.0, 3.0, 4.0]).unwrap().s, 6);
        assert_eq!(mann_kendall(&[1.0, 3.0, 2.0, 4.0]).unwrap().s, 4);
        let flat = mann_kendall(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!((flat.s, flat.z, flat.variance), (0, 0.0, 0.0));
        // n = 4 without ties: Var = 4·3·13/18.
        let m = mann_kendall(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((m.variance - 26.0 / 3.0).abs() < 1e-12);
        assert!((m.z - 5.0 / (26.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(mann_kendall(&[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn reversal_flips_the_sign(x in prop::collection::vec(-5i32..5, 2..40)) {
            let x: Vec<f64> = x.into_iter().map(f64::from).collect();
            let mut r = x.clone();
            r.reverse();
            let (a, b) = (mann_kendall(&x).unwrap(), mann_kendall(&r).unwrap());
            prop_assert_eq!(a.s, -b.s);
            prop_assert!((a.z + b.z).abs() < 1e-12);
            let n = x.len() as i64;
            prop_assert!(a.s.abs() <= n * (n - 1) / 2);
        }
    }
}
