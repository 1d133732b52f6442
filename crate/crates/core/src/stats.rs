//! Small numeric kernels shared across the crate: compensated summation,
//! weighted moments, and quartiles.

/// Kahan–Babuška (Neumaier) compensated accumulator. Serial reductions with
/// this accumulator agree with reordered ones to ~1e-15 relative, which keeps
/// estimates reproducible regardless of how callers chunk their input.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

pub fn mean(values: &[f64]) -> f64 {
    sum(values.iter().copied()) / values.len() as f64
}

/// Sample standard deviation (n−1 divisor). Returns 0 for fewer than two
/// values.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss = sum(values.iter().map(|v| (v - m) * (v - m)));
    (ss / (n - 1) as f64).sqrt()
}

/// Weighted mean with the sum of weights as divisor.
pub fn weighted_mean(values: &[f64], weights: &[f64]) -> f64 {
    let wsum = sum(weights.iter().copied());
    let wy = sum(values.iter().zip(weights).map(|(y, w)| y * w));
    wy / wsum
}

/// Weighted standard deviation where the divisor is the sum of weights.
pub fn weighted_sd(values: &[f64], weights: &[f64], center: f64) -> f64 {
    let wsum = sum(weights.iter().copied());
    let ss = sum(
        values
            .iter()
            .zip(weights)
            .map(|(y, w)| w * (y - center) * (y - center)),
    );
    (ss / wsum).sqrt()
}

/// Five-number summary: min, lower hinge, median, upper hinge, max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Quartiles by Tukey's median-of-halves rule: the lower (upper) hinge is the
/// median of the lower (upper) half, where an odd-length input includes the
/// overall median in both halves. This convention is fixed so summaries are
/// bit-reproducible.
pub fn five_number_summary(values: &[f64]) -> Option<FiveNumber> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN values"));
    let n = v.len();
    let median = median_sorted(&v);
    let lower = &v[..n.div_ceil(2)];
    let upper = &v[n / 2..];
    Some(FiveNumber {
        min: v[0],
        q1: median_sorted(lower),
        median,
        q3: median_sorted(upper),
        max: v[n - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kahan_recovers_cancellation() {
        let mut acc = KahanSum::new();
        acc.add(1e16);
        acc.add(1.0);
        acc.add(-1e16);
        assert_eq!(acc.value(), 1.0);
    }

    #[test]
    fn sample_sd_matches_hand_value() {
        // values 1..5: variance 2.5
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_abs_diff_eq!(sample_sd(&v), 2.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn weighted_mean_constant_weights_is_mean() {
        let y = [3.0, 7.0, 11.0];
        let w = [2.0, 2.0, 2.0];
        assert_abs_diff_eq!(weighted_mean(&y, &w), 7.0, epsilon = 1e-12);
    }

    #[test]
    fn five_number_singleton_collapses() {
        let s = five_number_summary(&[0.4]).unwrap();
        assert_eq!(
            (s.min, s.q1, s.median, s.q3, s.max),
            (0.4, 0.4, 0.4, 0.4, 0.4)
        );
    }

    #[test]
    fn five_number_hinges_include_median_on_odd_input() {
        let s = five_number_summary(&[0.2, 0.8, 0.8, 0.8, 0.8]).unwrap();
        assert_eq!(s.median, 0.8);
        assert_eq!(s.q1, 0.8);
        assert_eq!(s.q3, 0.8);
        assert_eq!(s.min, 0.2);
        assert_eq!(s.max, 0.8);
    }

    #[test]
    fn five_number_even_input() {
        let s = five_number_summary(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!(s.q1, 1.5);
        assert_eq!(s.q3, 3.5);
    }
}
