//! Monte Carlo model of the two-tone heterodyne photon-counting measurement.
//!
//! Carrier and sideband beat at `ω_rf`, so the detected photon rate is
//! `R0·(1 + V·cos(ω_rf·t + φ))`. Detection times are drawn from that
//! inhomogeneous Poisson process by thinning and folded modulo the trigger
//! period into a TDC histogram. The trigger is phase locked to the beat, so
//! one trigger period holds an integer number of beat periods.
//!
//! Times are `f64` seconds: a ten-second acquisition resolved to 100 ps needs
//! more than single precision.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::text::format_significant;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeterodyneConfig {
    /// Beat angular frequency ω_rf in rad/s.
    pub beat_frequency: f64,
    /// Trigger frequency in Hz.
    pub trigger_frequency: f64,
    /// TDC bin width in s.
    pub bin_width: f64,
    /// Acquisition length in s.
    pub duration: f64,
    /// Average detection rate R0 of the bright run in 1/s.
    pub mean_rate: f64,
    /// Average detection rate of the dark (reference) run in 1/s.
    pub dark_rate: f64,
    /// Beat visibility V.
    pub visibility: f64,
    /// Common-path phase offset present in both runs, rad.
    pub instrumental_phase: f64,
    /// Flat detector background in 1/s, added on top of the beat.
    pub background_rate: f64,
}

impl Default for HeterodyneConfig {
    fn default() -> Self {
        Self {
            beat_frequency: TAU * 400e6,
            trigger_frequency: 10e6,
            bin_width: 100e-12,
            duration: 10.0,
            mean_rate: 5e4,
            dark_rate: 5e4,
            visibility: 0.5,
            instrumental_phase: 0.0,
            background_rate: 0.0,
        }
    }
}

impl HeterodyneConfig {
    pub fn trigger_period(&self) -> f64 {
        1.0 / self.trigger_frequency
    }

    /// Number of beat oscillations inside one trigger period.
    pub fn oscillations_per_period(&self) -> u64 {
        (self.beat_frequency / (TAU * self.trigger_frequency)).round() as u64
    }

    pub fn bin_count(&self) -> usize {
        (self.trigger_period() / self.bin_width).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beat frequency", self.beat_frequency),
            ("trigger frequency", self.trigger_frequency),
            ("bin width", self.bin_width),
            ("duration", self.duration),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Configuration(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("mean rate", self.mean_rate),
            ("dark rate", self.dark_rate),
            ("background rate", self.background_rate),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Configuration(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::Configuration(format!(
                "visibility must lie in [0, 1], got {}",
                self.visibility
            )));
        }
        if !self.instrumental_phase.is_finite() {
            return Err(Error::Configuration("instrumental phase must be finite".into()));
        }
        let multiple = self.beat_frequency / (TAU * self.trigger_frequency);
        if multiple < 0.5 || (multiple - multiple.round()).abs() > 1e-9 * multiple {
            return Err(Error::Configuration(format!(
                "beat frequency must be an integer multiple of the trigger frequency (ratio {multiple})"
            )));
        }
        let bins = self.trigger_period() / self.bin_width;
        if bins < 0.5 || (bins - bins.round()).abs() > 1e-6 * bins.max(1.0) {
            return Err(Error::Configuration(format!(
                "bin width {} s does not divide the trigger period {} s",
                self.bin_width,
                self.trigger_period()
            )));
        }
        Ok(())
    }

    /// The same measurement at the dark-run count rate.
    pub fn dark_run(&self) -> Self {
        Self {
            mean_rate: self.dark_rate,
            ..*self
        }
    }
}

/// Absolute photon detection times of one acquisition, strictly increasing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DetectionRecord {
    arrival_times: Vec<f64>,
}

impl DetectionRecord {
    pub fn new(arrival_times: Vec<f64>) -> Result<Self> {
        if let Some(&first) = arrival_times.first() {
            if !(first >= 0.0) {
                return Err(Error::InsufficientData(format!("negative arrival time {first}")));
            }
        }
        if let Some(w) = arrival_times.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InsufficientData(format!(
                "arrival times not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(Self { arrival_times })
    }

    pub fn arrival_times(&self) -> &[f64] {
        &self.arrival_times
    }

    pub fn len(&self) -> usize {
        self.arrival_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrival_times.is_empty()
    }

    /// One arrival time per line, seconds, 12 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.arrival_times.len() * 16);
        for &t in &self.arrival_times {
            let _ = writeln!(out, "{}", format_significant(t, 12));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut times = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let t = line.parse::<f64>().map_err(|e| Error::Parse {
                line: i + 1,
                key: "arrival_time".into(),
                message: e.to_string(),
            })?;
            times.push(t);
        }
        Self::new(times)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Photon counts binned over one trigger period.
#[derive(Clone, Debug, PartialEq)]
pub struct TdcHistogram {
    bin_edges: Vec<f64>,
    counts: Vec<u64>,
    total: u64,
}

impl TdcHistogram {
    /// Empty histogram with `bins` bins of `bin_width` starting at 0.
    pub fn empty(bins: usize, bin_width: f64) -> Self {
        Self {
            bin_edges: (0..=bins).map(|i| i as f64 * bin_width).collect(),
            counts: vec![0; bins],
            total: 0,
        }
    }

    /// Builds a histogram from bin start times and counts. Bins must be uniform.
    pub fn from_bins(bin_starts: &[f64], counts: Vec<u64>) -> Result<Self> {
        if bin_starts.len() != counts.len() {
            return Err(Error::InsufficientData("bin starts and counts differ in length".into()));
        }
        if bin_starts.len() < 2 {
            return Err(Error::InsufficientData("histogram needs at least two bins".into()));
        }
        let width = bin_starts[1] - bin_starts[0];
        if !(width > 0.0) {
            return Err(Error::InsufficientData("bin starts must increase".into()));
        }
        for (i, w) in bin_starts.windows(2).enumerate() {
            if ((w[1] - w[0]) - width).abs() > 1e-6 * width {
                return Err(Error::InsufficientData(format!("non-uniform bin width at bin {}", i + 1)));
            }
        }
        let mut bin_edges = bin_starts.to_vec();
        bin_edges.push(bin_starts[bin_starts.len() - 1] + width);
        let total = counts.iter().sum();
        Ok(Self {
            bin_edges,
            counts,
            total,
        })
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// CSV with header `bin_start_s,count`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_start_s,count")?;
        for (start, count) in self.bin_edges.iter().zip(&self.counts) {
            writeln!(out, "{},{}", format_significant(*start, 12), count)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, header)) if header.trim() == "bin_start_s,count" => {}
            Some((i, _)) => {
                return Err(Error::Parse {
                    line: i + 1,
                    key: "header".into(),
                    message: "expected `bin_start_s,count`".into(),
                })
            }
            None => return Err(Error::InsufficientData("empty histogram file".into())),
        }
        let mut starts = Vec::new();
        let mut counts = Vec::new();
        for (i, line) in lines {
            let parse_err = |key: &str, message: String| Error::Parse {
                line: i + 1,
                key: key.into(),
                message,
            };
            let (start, count) = line
                .split_once(',')
                .ok_or_else(|| parse_err("row", "expected two comma-separated fields".into()))?;
            starts.push(
                start
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err("bin_start_s", e.to_string()))?,
            );
            counts.push(
                count
                    .trim()
                    .parse::<u64>()
                    .map_err(|e| parse_err("count", e.to_string()))?,
            );
        }
        Self::from_bins(&starts, counts)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

/// Instantaneous detection rate `R0·(1 + V·cos(ω_rf·t + φ))` plus background.
pub fn beat_rate(t: f64, config: &HeterodyneConfig, phase: f64) -> f64 {
    config.mean_rate * (1.0 + config.visibility * (config.beat_frequency * t + phase).cos()) + config.background_rate
}

/// Draws detection times on `[0, duration)` by thinning a homogeneous process
/// at the envelope rate `R0·(1 + V)` (plus background).
pub fn sample_detections(config: &HeterodyneConfig, phase: f64, seed: u64) -> Result<DetectionRecord> {
    config.validate()?;
    let envelope = config.mean_rate * (1.0 + config.visibility) + config.background_rate;
    let mut times = Vec::new();
    if envelope == 0.0 {
        return Ok(DetectionRecord { arrival_times: times });
    }
    times.reserve((config.duration * (config.mean_rate + config.background_rate) * 1.01) as usize + 16);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    loop {
        let gap: f64 = rng.sample(Exp1);
        t += gap / envelope;
        if t >= config.duration {
            break;
        }
        let u: f64 = rng.random();
        if u * envelope < beat_rate(t, config, phase) && times.last().is_none_or(|&last| t > last) {
            times.push(t);
        }
    }
    Ok(DetectionRecord { arrival_times: times })
}

/// Folds detection times modulo the trigger period into TDC bins.
pub fn fold_histogram(record: &DetectionRecord, config: &HeterodyneConfig) -> Result<TdcHistogram> {
    config.validate()?;
    let period = config.trigger_period();
    let bins = config.bin_count();
    let bin_width = period / bins as f64;
    let mut hist = TdcHistogram::empty(bins, bin_width);
    for &t in &record.arrival_times {
        let folded = t - (t / period).floor() * period;
        let index = ((folded / bin_width) as usize).min(bins - 1);
        hist.counts[index] += 1;
    }
    hist.total = record.len() as u64;
    Ok(hist)
}

/// Simulates one acquisition and folds it.
pub fn simulate_histogram(config: &HeterodyneConfig, phase: f64, seed: u64) -> Result<TdcHistogram> {
    fold_histogram(&sample_detections(config, phase, seed)?, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(duration: f64) -> HeterodyneConfig {
        HeterodyneConfig {
            duration,
            ..HeterodyneConfig::default()
        }
    }

    #[test]
    fn defaults_are_consistent() {
        let c = HeterodyneConfig::default();
        c.validate().unwrap();
        assert_eq!(c.bin_count(), 1000);
        assert_eq!(c.oscillations_per_period(), 40);
        assert!((c.trigger_period() - 100e-9).abs() < 1e-21);
    }

    #[test]
    fn rejects_incommensurate_settings() {
        let c = HeterodyneConfig {
            beat_frequency: TAU * 405e6 + 1.0e3,
            ..HeterodyneConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Configuration(_))));
        let c = HeterodyneConfig {
            bin_width: 300e-12,
            ..HeterodyneConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Configuration(_))));
        let c = HeterodyneConfig {
            visibility: 1.2,
            ..HeterodyneConfig::default()
        };
        assert!(c.validate().is_err());
        let c = HeterodyneConfig {
            duration: 0.0,
            ..HeterodyneConfig::default()
        };
        assert!(c.validate().is_err());
        let record = DetectionRecord::new(vec![1e-9]).unwrap();
        let bad = HeterodyneConfig {
            bin_width: 300e-12,
            ..HeterodyneConfig::default()
        };
        assert!(fold_histogram(&record, &bad).is_err());
    }

    #[test]
    fn rate_shape() {
        let mut c = HeterodyneConfig {
            visibility: 0.0,
            ..HeterodyneConfig::default()
        };
        for t in [0.0, 1.3e-9, 7.7e-8] {
            assert_eq!(beat_rate(t, &c, 0.4), c.mean_rate);
        }
        c.visibility = 1.0;
        assert_eq!(beat_rate(0.0, &c, 0.0), 2.0 * c.mean_rate);
        let trough = std::f64::consts::PI / c.beat_frequency;
        assert!(beat_rate(trough, &c, 0.0).abs() < 1e-9 * c.mean_rate);
        for i in 0..10_000 {
            assert!(beat_rate(i as f64 * 1.7e-11, &c, 0.3) >= 0.0);
        }
    }

    #[test]
    fn homogeneous_count() {
        let c = HeterodyneConfig {
            visibility: 0.0,
            mean_rate: 1e5,
            ..short(1.0)
        };
        let n = sample_detections(&c, 0.0, 7).unwrap().len() as f64;
        assert!((n - 1e5).abs() < 5.0 * 1e5f64.sqrt(), "n = {n}");
    }

    #[test]
    fn deterministic_for_seed() {
        let c = short(0.2);
        let a = sample_detections(&c, 0.3, 42).unwrap();
        let b = sample_detections(&c, 0.3, 42).unwrap();
        assert_eq!(a, b);
        let other = sample_detections(&c, 0.3, 43).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn record_is_strictly_increasing_and_bounded() {
        let c = short(0.1);
        let r = sample_detections(&c, 1.0, 3).unwrap();
        assert!(r.arrival_times().windows(2).all(|w| w[1] > w[0]));
        assert!(r.arrival_times().iter().all(|&t| (0.0..c.duration).contains(&t)));
    }

    #[test]
    fn zero_rate_gives_empty_record() {
        let c = HeterodyneConfig {
            mean_rate: 0.0,
            ..short(1.0)
        };
        assert!(sample_detections(&c, 0.0, 1).unwrap().is_empty());
    }

    #[test]
    fn folding() {
        let c = HeterodyneConfig::default();
        let empty = fold_histogram(&DetectionRecord::default(), &c).unwrap();
        assert_eq!(empty.total(), 0);
        assert!(empty.counts().iter().all(|&n| n == 0));
        assert_eq!(empty.bin_count(), 1000);

        let t = c.trigger_period() + c.bin_width / 2.0;
        let one = fold_histogram(&DetectionRecord::new(vec![t]).unwrap(), &c).unwrap();
        assert_eq!(one.counts()[0], 1);
        assert_eq!(one.total(), 1);

        let t = 3.0 * c.trigger_period() + 10.5 * c.bin_width;
        let one = fold_histogram(&DetectionRecord::new(vec![t]).unwrap(), &c).unwrap();
        assert_eq!(one.counts()[10], 1);
    }

    #[test]
    fn fold_conserves_counts() {
        let c = short(0.3);
        let r = sample_detections(&c, -1.0, 9).unwrap();
        let h = fold_histogram(&r, &c).unwrap();
        assert_eq!(h.total(), r.len() as u64);
        assert_eq!(h.counts().iter().sum::<u64>(), h.total());
    }

    #[test]
    fn invalid_records_rejected() {
        assert!(DetectionRecord::new(vec![1.0, 1.0]).is_err());
        assert!(DetectionRecord::new(vec![2.0, 1.0]).is_err());
        assert!(DetectionRecord::new(vec![-1.0]).is_err());
        assert!(DetectionRecord::from_text("0.1\nabc\n").is_err());
    }

    #[test]
    fn record_text_round_trip() {
        let r = sample_detections(&short(0.01), 0.0, 5).unwrap();
        let text = r.to_text();
        assert_eq!(text.lines().count(), r.len());
        let back = DetectionRecord::from_text(&text).unwrap();
        for (a, b) in r.arrival_times().iter().zip(back.arrival_times()) {
            assert!((a - b).abs() <= 1e-11 * a.abs());
        }
    }

    #[test]
    fn histogram_csv_round_trip() {
        let c = short(0.05);
        let h = simulate_histogram(&c, 0.2, 11).unwrap();
        let csv = h.to_csv();
        assert!(csv.starts_with("bin_start_s,count\n"));
        assert_eq!(csv.lines().count(), 1001);
        let back = TdcHistogram::from_csv(&csv).unwrap();
        assert_eq!(back.counts(), h.counts());
        assert_eq!(back.total(), h.total());
        for (a, b) in back.bin_centers().iter().zip(h.bin_centers()) {
            assert!((a - b).abs() < 1e-20);
        }
        assert!(TdcHistogram::from_csv("time,count\n0,1\n").is_err());
        assert!(TdcHistogram::from_csv("bin_start_s,count\n0,1\n1e-10,x\n").is_err());
    }
}
