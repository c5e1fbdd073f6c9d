//! Small-sample summaries used by the scenario tables: median, quartiles,
//! and a least-squares slope for the estimation-error decay plots.

/// Linear-interpolation quantile (the common "type 7" rule) of a non-empty
/// sample. `p` in [0, 1].
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn sorted_copy(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("non-comparable sample value"));
    v
}

/// Sample median; panics on an empty slice.
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "median of empty sample");
    quantile(&sorted_copy(xs), 0.5)
}

/// (first quartile, median, third quartile); panics on an empty slice.
pub fn quartiles(xs: &[f64]) -> (f64, f64, f64) {
    assert!(!xs.is_empty(), "quartiles of empty sample");
    let s = sorted_copy(xs);
    (quantile(&s, 0.25), quantile(&s, 0.5), quantile(&s, 0.75))
}

/// Slope of the least-squares line through `(xs, ys)`; needs at least two
/// distinct x values.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "slope needs paired samples");
    assert!(xs.len() >= 2, "slope needs at least two points");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    assert!(sxx > 0.0, "slope needs at least two distinct x values");
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&[5.0]), 5.0);
    }

    #[test]
    fn quartiles_interpolate() {
        // R's quantile(1:5, c(.25, .5, .75), type = 7) == (2, 3, 4).
        let (q1, q2, q3) = quartiles(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!((q1, q2, q3), (2.0, 3.0, 4.0));
        // quantile(1:4, .25, type = 7) == 1.75.
        let (q1, _, q3) = quartiles(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(q1, 1.75);
        assert_eq!(q3, 3.25);
    }

    #[test]
    fn slope_recovers_a_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 4.0 - 0.5 * x).collect();
        let slope = least_squares_slope(&xs, &ys);
        assert!((slope + 0.5).abs() < 1e-12);
    }

    #[test]
    fn slope_of_noisy_points_is_least_squares() {
        // Hand-checked: points (0,0), (1,2), (2,1) -> slope 0.5.
        let slope = least_squares_slope(&[0.0, 1.0, 2.0], &[0.0, 2.0, 1.0]);
        assert!((slope - 0.5).abs() < 1e-12);
    }
}
