/// `log(1 + exp(-z))` without overflow.
pub fn logistic_loss(z: f64) -> f64 {
    (-z).max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Smooth upper bound of `max_i logistic(z_i)` used by the simultaneous
/// learner: `log(1 + sum_i exp(-z_i))`.
pub fn simul_logistic_loss(z: &[f64]) -> f64 {
    let shift = z.iter().fold(0.0f64, |s, &v| s.max(-v));
    let sum: f64 = (-shift).exp() + z.iter().map(|&v| (-v - shift).exp()).sum::<f64>();
    shift + sum.ln()
}

/// `d/dz_i` of [`simul_logistic_loss`], written into `out`.
pub(crate) fn simul_logistic_grad(z: &[f64], out: &mut [f64]) -> f64 {
    let shift = z.iter().fold(0.0f64, |s, &v| s.max(-v));
    let base = (-shift).exp();
    let mut sum = base;
    for (o, &v) in out.iter_mut().zip(z) {
        *o = (-v - shift).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o = -*o / sum;
    }
    shift + sum.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_vector() {
        for n in 1..6 {
            let z = vec![0.0; n];
            assert!((simul_logistic_loss(&z) - ((1 + n) as f64).ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn single_entry_matches_logistic() {
        for &z in &[-40.0, -3.0, 0.0, 0.5, 12.0, 800.0] {
            assert!((simul_logistic_loss(&[z]) - logistic_loss(z)).abs() < 1e-12);
            assert!((logistic_loss(z) - (1.0 + (-z).exp()).ln()).abs() < 1e-9 || z < -30.0);
        }
        assert!(simul_logistic_loss(&[-1000.0, 3.0]).is_finite());
    }

    #[test]
    fn gradient_matches_differences() {
        let z = [0.3, -1.2, 2.5];
        let mut g = [0.0; 3];
        simul_logistic_grad(&z, &mut g);
        for k in 0..3 {
            let mut zp = z;
            let mut zm = z;
            zp[k] += 1e-6;
            zm[k] -= 1e-6;
            let fd = (simul_logistic_loss(&zp) - simul_logistic_loss(&zm)) / 2e-6;
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }
}
