use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TelemetryError {
    #[error("quantile of an empty histogram")]
    EmptyHistogram,
    #[error("quantile {0} outside [0, 1]")]
    BadQuantile(String),
    #[error("invalid histogram range or precision")]
    BadConfig,
}

/// Log-linear latency histogram over integer nanoseconds.
///
/// Values below `2^bits` get one bucket each; above that every power of two
/// is split into `2^(bits-1)` equal sub-buckets. With the default 7 bits a
/// bucket midpoint is within 1/128 of any value it holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatencyHistogram {
    min_value: u64,
    max_value: u64,
    bits: u32,
    first: usize,
    counts: Vec<u64>,
    total: u64,
    overflow: u64,
    min_seen: u64,
    max_seen: u64,
}

pub const DEFAULT_SUB_BUCKET_BITS: u32 = 7;

impl Default for LatencyHistogram {
    /// 1 ns to 10 s.
    fn default() -> Self {
        LatencyHistogram::new(1, 10_000_000_000).expect("valid default range")
    }
}

impl LatencyHistogram {
    pub fn new(min_value: u64, max_value: u64) -> Result<Self, TelemetryError> {
        Self::with_precision(min_value, max_value, DEFAULT_SUB_BUCKET_BITS)
    }

    /// `bits` sets the relative error to `2^-bits`.
    pub fn with_precision(min_value: u64, max_value: u64, bits: u32) -> Result<Self, TelemetryError> {
        if min_value > max_value || !(1..=20).contains(&bits) {
            return Err(TelemetryError::BadConfig);
        }
        let first = index_of(min_value, bits);
        let last = index_of(max_value, bits);
        Ok(LatencyHistogram {
            min_value,
            max_value,
            bits,
            first,
            counts: vec![0; last - first + 1],
            total: 0,
            overflow: 0,
            min_seen: u64::MAX,
            max_seen: 0,
        })
    }

    /// Constant time: one clamp, one `leading_zeros`, one increment.
    pub fn record(&mut self, value: u64) {
        let v = if value < self.min_value {
            self.overflow += 1;
            self.min_value
        } else if value > self.max_value {
            self.overflow += 1;
            self.max_value
        } else {
            value
        };
        self.counts[index_of(v, self.bits) - self.first] += 1;
        self.total += 1;
        self.min_seen = self.min_seen.min(v);
        self.max_seen = self.max_seen.max(v);
    }

    pub fn count(&self) -> u64 {
        self.total
    }

    /// Values clamped into range so far.
    pub fn overflow_count(&self) -> u64 {
        self.overflow
    }

    pub fn bucket_count(&self) -> usize {
        self.counts.len()
    }

    pub fn relative_error(&self) -> f64 {
        1.0 / (1u64 << self.bits) as f64
    }

    /// Fixed at construction.
    pub fn memory_bytes(&self) -> usize {
        std::mem::size_of::<Self>() + self.counts.capacity() * std::mem::size_of::<u64>()
    }

    /// Inclusive value range of bucket `i` (relative to the first bucket).
    fn bounds(&self, i: usize) -> (u64, u64) {
        let (lo, hi) = bucket_bounds(i + self.first, self.bits);
        (lo.max(self.min_value), hi.min(self.max_value))
    }

    fn representative(&self, i: usize) -> u64 {
        let (lo, hi) = self.bounds(i);
        let mid = lo + (hi - lo) / 2;
        mid.clamp(self.min_seen, self.max_seen)
    }

    /// Bucket representative of the smallest bucket whose cumulative count
    /// reaches `ceil(q · total)` (at least 1).
    pub fn quantile(&self, q: f64) -> Result<u64, TelemetryError> {
        if !(0.0..=1.0).contains(&q) {
            return Err(TelemetryError::BadQuantile(q.to_string()));
        }
        if self.total == 0 {
            return Err(TelemetryError::EmptyHistogram);
        }
        let rank = ((q * self.total as f64).ceil() as u64).max(1);
        let mut seen = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            seen += c;
            if seen >= rank {
                return Ok(self.representative(i));
            }
        }
        Ok(self.max_seen)
    }

    /// Non-empty buckets: (low, high, count), ascending.
    pub fn buckets(&self) -> Vec<(u64, u64, u64)> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| {
                let (lo, hi) = self.bounds(i);
                (lo, hi, c)
            })
            .collect()
    }

    pub fn export_csv(&self) -> String {
        let mut out = String::from("bucket_low,bucket_high,count\n");
        for (lo, hi, c) in self.buckets() {
            let _ = writeln!(out, "{lo},{hi},{c}");
        }
        out
    }
}

fn index_of(v: u64, bits: u32) -> usize {
    let shift_base = bits - 1;
    let e = 63 - (v | ((1 << bits) - 1)).leading_zeros();
    let shift = e - shift_base;
    ((shift as u64) << shift_base) as usize + (v >> shift) as usize
}

fn bucket_bounds(index: usize, bits: u32) -> (u64, u64) {
    let half = 1usize << (bits - 1);
    if index < 2 * half {
        return (index as u64, index as u64);
    }
    let shift = (index / half - 1) as u32;
    let sub = (index % half + half) as u64;
    let lo = sub << shift;
    (lo, lo + ((1u64 << shift) - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_and_bounds_agree() {
        for bits in [1, 3, 7, 10] {
            let mut prev = None;
            for v in (0..5000u64).chain([1 << 40, u64::MAX / 3, u64::MAX]) {
                let i = index_of(v, bits);
                let (lo, hi) = bucket_bounds(i, bits);
                assert!(lo <= v && v <= hi, "bits={bits} v={v} i={i} [{lo},{hi}]");
                if let Some(p) = prev {
                    if v < 5000 {
                        assert!(i == p || i == p + 1);
                    }
                }
                prev = Some(i);
            }
        }
    }

    #[test]
    fn lowest_value_goes_to_the_lowest_bucket() {
        let mut h = LatencyHistogram::new(0, 1000).unwrap();
        h.record(0);
        assert_eq!(h.overflow_count(), 0);
        assert_eq!(h.buckets(), vec![(0, 0, 1)]);
    }

    #[test]
    fn out_of_range_values_clamp() {
        let mut h = LatencyHistogram::new(100, 10_000).unwrap();
        h.record(20_000);
        assert_eq!(h.overflow_count(), 1);
        h.record(3);
        assert_eq!(h.overflow_count(), 2);
        assert_eq!(h.count(), 2);
        let top = h.quantile(1.0).unwrap() as f64;
        assert!((top - 10_000.0).abs() / 10_000.0 <= h.relative_error());
        assert_eq!(h.quantile(0.0).unwrap(), 100);
    }

    #[test]
    fn single_value_quantile() {
        let mut h = LatencyHistogram::default();
        h.record(123_456);
        let q = h.quantile(0.5).unwrap() as f64;
        assert!((q - 123_456.0).abs() / 123_456.0 <= 0.01);
    }

    #[test]
    fn empty_quantile_errors() {
        let h = LatencyHistogram::default();
        assert_eq!(h.quantile(0.5), Err(TelemetryError::EmptyHistogram));
        assert_eq!(h.export_csv(), "bucket_low,bucket_high,count\n");
    }

    #[test]
    fn one_bucket_one_row() {
        let mut h = LatencyHistogram::default();
        h.record(5000);
        h.record(5001);
        assert_eq!(h.export_csv().lines().count(), 2);
    }

    #[test]
    fn p99_of_one_to_a_thousand() {
        let mut h = LatencyHistogram::default();
        for v in 1..=1000 {
            h.record(v);
        }
        let q = h.quantile(0.99).unwrap() as f64;
        assert!((q - 990.0).abs() / 990.0 <= 0.01, "{q}");
    }

    #[test]
    fn bad_config() {
        assert_eq!(LatencyHistogram::new(10, 1), Err(TelemetryError::BadConfig));
        assert_eq!(LatencyHistogram::with_precision(1, 10, 0), Err(TelemetryError::BadConfig));
    }
}
