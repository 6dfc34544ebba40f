//! Unconstrained capacity over the joint input `(A, X)`.

/// `I(input; Y)` in bits for input law `p` and channel rows `w[c][y]`.
pub(crate) fn information(p: &[f64], w: &[Vec<f64>]) -> f64 {
    let ny = w[0].len();
    let py: Vec<f64> = (0..ny)
        .map(|y| p.iter().zip(w).map(|(pc, row)| pc * row[y]).sum())
        .collect();
    let mut total = 0.0;
    for (pc, row) in p.iter().zip(w) {
        if *pc <= 0.0 {
            continue;
        }
        for y in 0..ny {
            if row[y] > 0.0 {
                total += pc * row[y] * (row[y] / py[y]).log2();
            }
        }
    }
    total.max(0.0)
}

/// Blahut–Arimoto iteration. Returns the capacity in bits and the
/// maximizing input law. Stops when the standard upper and lower bounds are
/// within `tol`.
pub(crate) fn blahut_arimoto(w: &[Vec<f64>], tol: f64, max_iter: usize) -> (f64, Vec<f64>) {
    let n = w.len();
    let ny = w[0].len();
    let mut p = vec![1.0 / n as f64; n];
    let mut divergence = vec![0.0; n];
    for _ in 0..max_iter {
        let py: Vec<f64> = (0..ny)
            .map(|y| p.iter().zip(w).map(|(pc, row)| pc * row[y]).sum())
            .collect();
        for (c, row) in w.iter().enumerate() {
            divergence[c] = (0..ny)
                .filter(|&y| row[y] > 0.0)
                .map(|y| row[y] * (row[y] / py[y]).log2())
                .sum();
        }
        let lower: f64 = p.iter().zip(&divergence).map(|(a, b)| a * b).sum();
        let upper = divergence.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if upper - lower < tol {
            break;
        }
        let mut z = 0.0;
        for c in 0..n {
            p[c] *= divergence[c].exp2();
            z += p[c];
        }
        p.iter_mut().for_each(|v| *v /= z);
    }
    (information(&p, w), p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bsc_capacity() {
        let w = vec![vec![0.9, 0.1], vec![0.1, 0.9]];
        let (c, p) = blahut_arimoto(&w, 1e-12, 10_000);
        let h = -(0.1f64 * 0.1f64.log2() + 0.9 * 0.9f64.log2());
        assert!((c - (1.0 - h)).abs() < 1e-9);
        assert!((p[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn z_channel_prefers_clean_symbol() {
        let w = vec![vec![1.0, 0.0], vec![0.5, 0.5]];
        let (c, p) = blahut_arimoto(&w, 1e-12, 100_000);
        // Known optimum: p(1) = 2/5, capacity log2(5/4).
        assert!((c - (1.25f64).log2()).abs() < 1e-8);
        assert!((p[1] - 0.4).abs() < 1e-5);
    }

    #[test]
    fn four_clean_inputs_carry_two_bits() {
        let w: Vec<Vec<f64>> = (0..4)
            .map(|c| (0..4).map(|y| if c == y { 1.0 } else { 0.0 }).collect())
            .collect();
        assert!((blahut_arimoto(&w, 1e-12, 1000).0 - 2.0).abs() < 1e-12);
    }
}
