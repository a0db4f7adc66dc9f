//! Pool-adjacent-violators projection onto non-decreasing sequences.

/// Least-squares projection of `y` (weights `w`) onto non-decreasing
/// sequences.
pub fn isotonic_weighted(y: &[f64], w: &[f64]) -> Vec<f64> {
    assert_eq!(y.len(), w.len(), "values and weights differ in length");
    // Blocks of (mean, weight, length).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&v, &wt) in y.iter().zip(w) {
        blocks.push((v, wt, 1));
        while blocks.len() > 1 {
            let n = blocks.len();
            let (m2, w2, l2) = blocks[n - 1];
            let (m1, w1, l1) = blocks[n - 2];
            if m1 <= m2 {
                break;
            }
            let wt = w1 + w2;
            let mean = if wt > 0.0 { (m1 * w1 + m2 * w2) / wt } else { 0.5 * (m1 + m2) };
            blocks.truncate(n - 2);
            blocks.push((mean, wt, l1 + l2));
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, l)| std::iter::repeat_n(m, l))
        .collect()
}

/// Unweighted projection.
pub fn isotonic(y: &[f64]) -> Vec<f64> {
    isotonic_weighted(y, &vec![1.0; y.len()])
}
