//! Per-stage wall-clock statistics for the frame loop, measured with a
//! monotonic clock. The report records environment resolution and
//! irradiance face size so amortization claims stay auditable.

use std::time::Duration;

pub const STAGES: [&str; 5] = ["ingest", "light-map", "shading", "composite", "encode"];

#[derive(Debug, Clone, Default)]
pub struct StageStats {
    pub samples_ms: Vec<f64>,
}

impl StageStats {
    pub fn record(&mut self, d: Duration) {
        self.samples_ms.push(d.as_secs_f64() * 1e3);
    }

    pub fn mean(&self) -> f64 {
        if self.samples_ms.is_empty() {
            return 0.0;
        }
        self.samples_ms.iter().sum::<f64>() / self.samples_ms.len() as f64
    }

    fn percentile(&self, p: f64) -> f64 {
        if self.samples_ms.is_empty() {
            return 0.0;
        }
        let mut sorted = self.samples_ms.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let idx = ((sorted.len() - 1) as f64 * p).round() as usize;
        sorted[idx]
    }

    pub fn p50(&self) -> f64 {
        self.percentile(0.50)
    }

    pub fn p95(&self) -> f64 {
        self.percentile(0.95)
    }
}

#[derive(Debug, Clone, Default)]
pub struct TimingReport {
    pub stages: Vec<(String, StageStats)>,
    pub precompute_ms: f64,
    pub frames: usize,
    pub frame_loop_ms: f64,
    pub env_width: usize,
    pub env_height: usize,
    pub irradiance_face_size: usize,
}

impl TimingReport {
    pub fn fps(&self) -> f64 {
        if self.frame_loop_ms <= 0.0 {
            return 0.0;
        }
        self.frames as f64 / (self.frame_loop_ms / 1e3)
    }

    pub fn stage(&self, name: &str) -> Option<&StageStats> {
        self.stages
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
    }

    /// Mean per-frame time across all frame-loop stages, precompute excluded.
    pub fn per_frame_ms(&self) -> f64 {
        self.stages.iter().map(|(_, s)| s.mean()).sum()
    }

    pub fn human_readable(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "environment {}x{}, irradiance faces {}x{}\n",
            self.env_width, self.env_height, self.irradiance_face_size, self.irradiance_face_size
        ));
        out.push_str(&format!("precompute: {:.2} ms\n", self.precompute_ms));
        for (name, s) in &self.stages {
            out.push_str(&format!(
                "{name:<10} mean {:8.3} ms  p50 {:8.3} ms  p95 {:8.3} ms\n",
                s.mean(),
                s.p50(),
                s.p95()
            ));
        }
        out.push_str(&format!(
            "frames {}  loop {:.2} ms  effective {:.2} fps\n",
            self.frames,
            self.frame_loop_ms,
            self.fps()
        ));
        out
    }

    /// Machine-readable tab-separated form, one row per stage.
    pub fn tabular(&self) -> String {
        let mut out = String::from("stage\tmean_ms\tp50_ms\tp95_ms\n");
        for (name, s) in &self.stages {
            out.push_str(&format!(
                "{name}\t{:.6}\t{:.6}\t{:.6}\n",
                s.mean(),
                s.p50(),
                s.p95()
            ));
        }
        out.push_str(&format!("precompute\t{:.6}\t\t\n", self.precompute_ms));
        out.push_str(&format!(
            "summary\tframes={}\tloop_ms={:.6}\tfps={:.6}\n",
            self.frames,
            self.frame_loop_ms,
            self.fps()
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentiles_on_known_samples() {
        let mut s = StageStats::default();
        for ms in [1.0, 2.0, 3.0, 4.0, 100.0] {
            s.record(Duration::from_secs_f64(ms / 1e3));
        }
        assert!((s.mean() - 22.0).abs() < 1e-9);
        assert!((s.p50() - 3.0).abs() < 1e-9);
        assert!((s.p95() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn report_contains_all_stages() {
        let mut r = TimingReport::default();
        for name in STAGES {
            r.stages.push((name.to_string(), StageStats::default()));
        }
        let tab = r.tabular();
        for name in STAGES {
            assert!(tab.contains(name), "missing stage {name}");
        }
    }
}
