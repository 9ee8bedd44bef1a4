use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use signalscope_core::dynamics::ols_trend;

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Slope and intercept from the 2x2 normal equations, solved by Cramer's rule.
pub fn normal_equations(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    ((n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det)
}

/// Share of simulated series whose 95% band covers the true mean at a random year.
pub fn ci_coverage(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let years: Vec<f64> = (2004..=2021).map(f64::from).collect();
    let mut covered = 0;
    for _ in 0..trials {
        let slope = rng.random_range(-0.01..0.01);
        let intercept = rng.random_range(0.0..0.3);
        let sigma = rng.random_range(0.005..0.05);
        let truth: Vec<f64> = years.iter().map(|&x| intercept + slope * (x - 2004.0)).collect();
        let y: Vec<f64> = truth.iter().map(|&m| m + sigma * normal(&mut rng)).collect();
        let fit = ols_trend(&years, &y).unwrap();
        let i = rng.random_range(0..years.len());
        if (fit.fitted[i] - truth[i]).abs() <= fit.ci_half_width[i] {
            covered += 1;
        }
    }
    covered as f64 / trials as f64
}
