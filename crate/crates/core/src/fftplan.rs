//! Process-wide cache of FFT plans.
//!
//! Plans are immutable once built and shared across threads; caching avoids
//! re-planning inside per-sample loops that transform many same-length
//! buffers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftPlanner};

type PlanMap = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plans() -> &'static PlanMap {
    static PLANS: OnceLock<PlanMap> = OnceLock::new();
    PLANS.get_or_init(|| Mutex::new(HashMap::new()))
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut map = plans().lock().unwrap();
    map.entry((len, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            }
        })
        .clone()
}

/// Plan computing X_k = sum_n x_n e(-kn/len) (unnormalized).
pub(crate) fn forward(len: usize) -> Arc<dyn Fft<f64>> {
    plan(len, false)
}

/// Plan computing X_k = sum_n x_n e(+kn/len) (unnormalized).
pub(crate) fn inverse(len: usize) -> Arc<dyn Fft<f64>> {
    plan(len, true)
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    #[test]
    fn forward_then_inverse_scales_by_len() {
        let data: Vec<Complex64> = (0..8)
            .map(|i| Complex64::new(i as f64, -(i as f64) * 0.5))
            .collect();
        let mut buf = data.clone();
        super::forward(8).process(&mut buf);
        super::inverse(8).process(&mut buf);
        for (a, b) in buf.iter().zip(&data) {
            assert!((a / 8.0 - b).norm() < 1e-12);
        }
    }
}
