//! Polynomial limit extrapolation (Richardson via Neville's scheme).

/// Extrapolate samples `(x_i, y_i)` to `x = 0` with Neville's algorithm.
///
/// The `x_i` must be pairwise distinct. This is Richardson extrapolation for
/// a quantity with a polynomial error model `y(x) = y(0) + c1 x + c2 x^2 + …`;
/// with n samples the surviving error is O(x_0 · x_1 ⋯ x_{n-1}).
pub fn neville_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(!xs.is_empty());
    let mut t = ys.to_vec();
    let n = t.len();
    for m in 1..n {
        for i in 0..(n - m) {
            // Interpolating polynomial through (x_i .. x_{i+m}) evaluated at 0.
            t[i] = (t[i + 1] * (0.0 - xs[i]) - t[i] * (0.0 - xs[i + m])) / (xs[i + m] - xs[i]);
        }
    }
    t[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_polynomial_limit() {
        let xs = [1e-1, 1e-2, 1e-3, 1e-4];
        let ys: Vec<f64> = xs.iter().map(|&x| 3.5 - 2.0 * x + 7.0 * x * x).collect();
        let v = neville_to_zero(&xs, &ys);
        assert!((v - 3.5).abs() < 1e-12, "v={v}");
    }

    #[test]
    fn beats_single_sample() {
        // y = L + x + x^2 + x^3: extrapolation should be far better than y(x_min).
        let l = -0.75;
        let xs = [8e-2, 4e-2, 2e-2, 1e-2];
        let ys: Vec<f64> = xs.iter().map(|&x| l + x + x * x + x * x * x).collect();
        let v = neville_to_zero(&xs, &ys);
        assert!((v - l).abs() < 1e-9);
    }
}
