use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Denominator floor so parameters with vanishing gradients are compared
/// absolutely rather than relatively.
const RELATIVE_FLOOR: f64 = 1e-7;

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_FLOOR)
}

/// Compares the analytic gradient returned by `loss_and_grad` against central
/// differences on `probe_count` parameters (all of them if `probe_count` is at
/// least the parameter count). Returns the maximum relative error.
pub fn gradient_check<F>(loss_and_grad: F, params: &[f64], probe_count: usize, step: f64) -> f64
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    gradient_check_seeded(loss_and_grad, params, probe_count, step, 0)
}

pub fn gradient_check_seeded<F>(
    mut loss_and_grad: F,
    params: &[f64],
    probe_count: usize,
    step: f64,
    seed: u64,
) -> f64
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let (_, analytic) = loss_and_grad(params);
    assert_eq!(analytic.len(), params.len(), "gradient length mismatch");
    let probes: Vec<usize> = if probe_count >= params.len() {
        (0..params.len()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample(&mut rng, params.len(), probe_count).into_vec()
    };
    let mut work = params.to_vec();
    let mut worst = 0.0f64;
    for i in probes {
        work[i] = params[i] + step;
        let (plus, _) = loss_and_grad(&work);
        work[i] = params[i] - step;
        let (minus, _) = loss_and_grad(&work);
        work[i] = params[i];
        let numeric = (plus - minus) / (2.0 * step);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    worst
}
