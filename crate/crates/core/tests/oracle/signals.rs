use rand::Rng;
use rand_chacha::ChaCha8Rng;
use signalscope_core::dynamics::TimeSeries;
use signalscope_core::signals::SignalClass;

pub fn brute_class(x: f64, y: f64, xs: &[f64]) -> SignalClass {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let high = x >= mean || (mean - x).abs() <= 1e-12 * mean.abs();
    match (high, y > 0.0) {
        (true, true) => SignalClass::Strong,
        (false, true) => SignalClass::Weak,
        (false, false) => SignalClass::Latent,
        (true, false) => SignalClass::Nswk,
    }
}

/// Random yearly topic counts over 2004-2021, turned into proportions.
pub fn random_series(rng: &mut ChaCha8Rng) -> Vec<TimeSeries> {
    let topics = rng.random_range(2..10);
    let years: Vec<i32> = (2004..=2021).collect();
    let counts: Vec<Vec<usize>> = (0..topics)
        .map(|_| {
            let absent = rng.random_bool(0.2);
            years
                .iter()
                .map(|&y| if absent && y < 2016 { 0 } else { rng.random_range(0..12) })
                .collect()
        })
        .collect();
    let totals: Vec<usize> = (0..years.len()).map(|y| counts.iter().map(|c| c[y]).sum()).collect();
    counts
        .into_iter()
        .enumerate()
        .map(|(topic, c)| TimeSeries {
            topic,
            years: years.clone(),
            proportions: c
                .iter()
                .zip(&totals)
                .map(|(&k, &n)| if n == 0 { 0.0 } else { k as f64 / n as f64 })
                .collect(),
            counts: c,
        })
        .collect()
}
