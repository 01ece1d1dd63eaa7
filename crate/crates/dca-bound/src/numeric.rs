//! Small numeric helpers shared across modules.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `ln |exp(x) - 1|`, stable across the whole axis. Never overflows: for
/// large positive `x` it returns `x + ln(1 - exp(-x))`.
pub(crate) fn log_abs_expm1(x: f64) -> f64 {
    if x > 0.5 {
        x + (-(-x).exp()).ln_1p()
    } else if x > 0.0 {
        x.exp_m1().ln()
    } else if x >= -0.5 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln(sum exp(v))` over a slice.
pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let mx = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return mx;
    }
    let mut s = NeumaierSum::default();
    for &v in values {
        s.add((v - mx).exp());
    }
    mx + s.total().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive() {
        let mut s = NeumaierSum::default();
        s.add(1e16);
        for _ in 0..10 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.total(), 10.0);
    }

    #[test]
    fn log_abs_expm1_matches_direct() {
        for &x in &[1e-9f64, 0.1, 0.4, 0.6, 5.0, 30.0, -1e-9, -0.3, -0.7, -40.0] {
            let direct = (x.exp_m1()).abs().ln();
            let got = log_abs_expm1(x);
            assert!(
                (got - direct).abs() <= 1e-12 * direct.abs().max(1.0),
                "x={x}: {got} vs {direct}"
            );
        }
        // beyond direct-evaluation range
        assert!((log_abs_expm1(1000.0) - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_tiny_and_huge() {
        let v = [700.0, 700.0];
        assert!((log_sum_exp(&v) - (700.0 + 2f64.ln())).abs() < 1e-12);
        let w = [-800.0, -800.0];
        assert!((log_sum_exp(&w) - (-800.0 + 2f64.ln())).abs() < 1e-12);
    }
}
