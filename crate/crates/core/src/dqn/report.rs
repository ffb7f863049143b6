use serde::Serialize;

use super::train::EpisodeMetrics;

/// Mean training reward over the last `fraction` of episodes (at least one).
pub fn final_window_mean(metrics: &[EpisodeMetrics], fraction: f64) -> Option<f64> {
    if metrics.is_empty() {
        return None;
    }
    let w = ((metrics.len() as f64 * fraction).round() as usize).clamp(1, metrics.len());
    let tail = &metrics[metrics.len() - w..];
    Some(tail.iter().map(|m| m.reward).sum::<f64>() / w as f64)
}

/// Episodes played before the first evaluation scoring at least `threshold`,
/// counting the evaluated episode.
pub fn episodes_to_threshold(metrics: &[EpisodeMetrics], threshold: f64) -> Option<usize> {
    metrics.iter().find(|m| m.eval_reward.is_some_and(|r| r >= threshold)).map(|m| m.episode + 1)
}

/// `(a - b) / |b|`.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    (a - b) / b.abs()
}

/// Mean share of demonstrations in sampled batches over the first and last
/// `fraction` of episodes that trained.
pub fn batch_demo_share(metrics: &[EpisodeMetrics], fraction: f64) -> Option<(f64, f64)> {
    let v: Vec<f64> = metrics.iter().filter_map(|m| m.batch_demo_fraction).collect();
    if v.is_empty() {
        return None;
    }
    let w = ((v.len() as f64 * fraction).round() as usize).clamp(1, v.len());
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Some((mean(&v[..w]), mean(&v[v.len() - w..])))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub episodes: usize,
    pub final_mean: f64,
    pub episodes_to_threshold: Option<usize>,
}

impl RunSummary {
    pub fn new(name: &str, metrics: &[EpisodeMetrics], window: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            episodes: metrics.len(),
            final_mean: final_window_mean(metrics, window).unwrap_or(0.0),
            episodes_to_threshold: episodes_to_threshold(metrics, threshold),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(episode: usize, reward: f64, eval: Option<f64>) -> EpisodeMetrics {
        EpisodeMetrics {
            episode,
            steps: 1,
            reward,
            mean_loss: None,
            epsilon: 0.0,
            demo_fraction: 0.0,
            batch_demo_fraction: Some(1.0 / (episode + 1) as f64),
            eval_reward: eval,
        }
    }

    #[test]
    fn windows_and_thresholds() {
        let rows: Vec<_> = (0..20).map(|i| m(i, i as f64, (i % 5 == 4).then_some(i as f64))).collect();
        assert_eq!(final_window_mean(&rows, 0.1), Some(18.5));
        assert_eq!(episodes_to_threshold(&rows, 9.0), Some(10));
        assert_eq!(episodes_to_threshold(&rows, 100.0), None);
        let (early, late) = batch_demo_share(&rows, 0.1).unwrap();
        assert!(early > late);
    }

    #[test]
    fn relative_difference_cases() {
        assert!((relative_difference(24.0, 15.0) - 0.6).abs() < 1e-12);
        assert_eq!(relative_difference(15.0, 15.0), 0.0);
    }
}
