use serde::{Deserialize, Serialize};

/// End-to-end throughput of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub total_time_s: f64,
    pub pages: usize,
    pub pages_per_s: f64,
    /// Planned vision tokens over every recognized region.
    pub tokens_total: u64,
    pub tokens_per_s: f64,
    /// Peak resident memory of this process (host RAM, not GPU memory),
    /// when the platform reports it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub peak_memory_bytes: Option<u64>,
}

impl ThroughputReport {
    /// Rates are zero when nothing was processed or no time elapsed.
    pub fn new(pages: usize, tokens_total: u64, total_time_s: f64) -> Self {
        let t = total_time_s.max(0.0);
        let rate = |n: f64| if t > 0.0 { n / t } else { 0.0 };
        Self {
            total_time_s: t,
            pages,
            pages_per_s: rate(pages as f64),
            tokens_total,
            tokens_per_s: rate(tokens_total as f64),
            peak_memory_bytes: None,
        }
    }

    pub fn with_peak_memory(mut self) -> Self {
        self.peak_memory_bytes = peak_rss_bytes();
        self
    }

    /// Relative error of the rate identities; both are zero by construction.
    pub fn identity_error(&self) -> (f64, f64) {
        let rel = |rate: f64, n: f64| {
            if n == 0.0 {
                rate.abs()
            } else {
                (rate * self.total_time_s - n).abs() / n
            }
        };
        if self.total_time_s == 0.0 {
            return (self.pages_per_s.abs(), self.tokens_per_s.abs());
        }
        (rel(self.pages_per_s, self.pages as f64), rel(self.tokens_per_s, self.tokens_total as f64))
    }

    pub fn to_markdown(&self) -> String {
        format!(
            "| Total Time (s)↓ | Pages/s↑ | Tokens/s↑ |\n| --- | --- | --- |\n| {:.1} | {:.4} | {:.1} |\n",
            self.total_time_s, self.pages_per_s, self.tokens_per_s
        )
    }
}

/// Best-effort peak resident set size.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
