//! Small numeric utilities shared across the solver.

/// Log-sum-exp of a slice, shifted by the maximum so that no intermediate
/// exponential overflows. Returns `NEG_INFINITY` for an empty slice or when
/// every entry is `-inf`.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max.is_infinite() {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Central finite-difference gradient with per-coordinate step
/// `h = 1e-6 * (1 + |v|)`.
pub fn central_difference<F>(f: F, point: &[f64]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = point.to_vec();
    let mut grad = Vec::with_capacity(point.len());
    for i in 0..point.len() {
        let h = 1e-6 * (1.0 + point[i].abs());
        probe[i] = point[i] + h;
        let hi = f(&probe);
        probe[i] = point[i] - h;
        let lo = f(&probe);
        probe[i] = point[i];
        grad.push((hi - lo) / (2.0 * h));
    }
    grad
}

const HALTON_PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Deterministic low-discrepancy point set on the unit hypercube (Halton
/// sequence, one prime base per dimension). `seed` offsets the start index
/// so distinct seeds give distinct but reproducible samples.
pub fn halton_points(count: usize, dims: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(
        dims <= HALTON_PRIMES.len(),
        "halton sampler supports up to {} dimensions",
        HALTON_PRIMES.len()
    );
    // Skip a short burn-in; the first few Halton points cluster near 0.
    let offset = 17 + seed.wrapping_mul(101);
    (0..count)
        .map(|i| {
            let index = offset + i as u64;
            (0..dims).map(|d| radical_inverse(index, HALTON_PRIMES[d])).collect()
        })
        .collect()
}

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut fraction = 1.0 / base as f64;
    while index > 0 {
        result += (index % base) as f64 * fraction;
        index /= base;
        fraction /= base as f64;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn logsumexp_matches_naive_on_small_values() {
        let v: [f64; 3] = [0.5, 2.0, -1.0];
        let naive = v.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert_relative_eq!(logsumexp(&v), naive, max_relative = 1e-14);
    }

    #[test]
    fn logsumexp_survives_large_magnitudes() {
        let v = [1234.0, 1232.0];
        // log(exp(1234) + exp(1232)) = 1234 + log(1 + exp(-2))
        let expected = 1234.0 + (1.0 + (-2.0f64).exp()).ln();
        assert_relative_eq!(logsumexp(&v), expected, max_relative = 1e-14);
        assert!((v[0].exp() + v[1].exp()).is_infinite());
        assert_eq!(logsumexp(&[-1e308, -1e308]), -1e308 + 2.0f64.ln());
    }

    #[test]
    fn logsumexp_empty_is_neg_infinity() {
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn central_difference_on_quadratic() {
        let f = |v: &[f64]| v[0] * v[0] + 2.0 * v[0] * v[1];
        let g = central_difference(f, &[1.0, 2.0]);
        assert_relative_eq!(g[0], 6.0, max_relative = 1e-8);
        assert_relative_eq!(g[1], 2.0, max_relative = 1e-8);
    }

    #[test]
    fn halton_is_deterministic_and_in_unit_cube() {
        let a = halton_points(32, 4, 7);
        let b = halton_points(32, 4, 7);
        assert_eq!(a, b);
        assert_ne!(a, halton_points(32, 4, 8));
        for p in &a {
            for &c in p {
                assert!((0.0..1.0).contains(&c));
            }
        }
    }
}
