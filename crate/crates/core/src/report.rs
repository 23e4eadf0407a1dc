//! CSV reports, raw exports and histogram data.
//!
//! Every file starts with `# key: value` metadata lines (seed, configuration
//! digest, skipped samples) followed by a header row. Report values carry six
//! significant digits; chain and optimizer exports use the shortest
//! representation that round-trips exactly. All writes go through
//! [`write_atomic`].

use std::fmt::Write as _;
use std::path::Path;

use crate::beam::UpdatingParameters;
use crate::error::{Error, Result};
use crate::ga::GaResult;
use crate::predict::SamplePrediction;
use crate::sampler::{Chain, Predictive, PredictiveStats};

/// Write `bytes` to a sibling temporary file, then rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::io(path, "not a file path"))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Format with six significant digits, fixed notation for moderate magnitudes.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let exp: i32 = sci.split('e').nth(1).and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-4..6).contains(&exp) {
        format!("{x:.*}", (5 - exp) as usize)
    } else {
        sci
    }
}

fn opt6(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

/// Run provenance written at the top of every output file.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportMeta {
    pub method: String,
    pub seed: u64,
    pub config_digest: String,
    pub skipped: usize,
}

impl ReportMeta {
    fn write_header(&self, out: &mut String) {
        let _ = writeln!(out, "# method: {}", self.method);
        let _ = writeln!(out, "# seed: {}", self.seed);
        let _ = writeln!(out, "# config_sha256: {}", self.config_digest);
        let _ = writeln!(out, "# skipped_samples: {}", self.skipped);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyRow {
    pub mode: usize,
    pub measured_hz: f64,
    pub initial_hz: f64,
    pub updated_hz: f64,
    /// Empty for point estimates.
    pub std_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacRow {
    pub mode: usize,
    pub initial: f64,
    pub updated: f64,
    pub std: Option<f64>,
}

/// Per-mode comparison of the initial and updated models against the measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateReport {
    pub frequencies: Vec<FrequencyRow>,
    pub mac: Vec<MacRow>,
    pub meta: ReportMeta,
}

impl UpdateReport {
    /// Updated columns from posterior-predictive means and standard deviations.
    pub fn from_predictive(measured_hz: &[f64], initial: &SamplePrediction, stats: &PredictiveStats, meta: ReportMeta) -> Self {
        Self::build(
            measured_hz,
            initial,
            &stats.mean_frequencies_hz,
            Some(&stats.std_frequencies_hz),
            &stats.mean_mac_diagonal,
            Some(&stats.std_mac_diagonal),
            meta,
        )
    }

    /// Updated columns from a single prediction; standard deviations stay empty.
    pub fn from_point(measured_hz: &[f64], initial: &SamplePrediction, updated: &SamplePrediction, meta: ReportMeta) -> Self {
        Self::build(measured_hz, initial, &updated.frequencies_hz, None, &updated.mac, None, meta)
    }

    fn build(
        measured_hz: &[f64],
        initial: &SamplePrediction,
        freq: &[f64],
        freq_std: Option<&[f64]>,
        mac: &[f64],
        mac_std: Option<&[f64]>,
        meta: ReportMeta,
    ) -> Self {
        let frequencies = measured_hz
            .iter()
            .enumerate()
            .map(|(i, &m)| FrequencyRow {
                mode: i + 1,
                measured_hz: m,
                initial_hz: initial.frequencies_hz[i],
                updated_hz: freq[i],
                std_hz: freq_std.map(|s| s[i]),
            })
            .collect();
        let mac = (0..measured_hz.len())
            .map(|i| MacRow {
                mode: i + 1,
                initial: initial.mac[i],
                updated: mac[i],
                std: mac_std.map(|s| s[i]),
            })
            .collect();
        UpdateReport { frequencies, mac, meta }
    }

    pub fn frequency_csv(&self) -> String {
        let mut out = String::new();
        self.meta.write_header(&mut out);
        out.push_str("mode,measured_hz,initial_hz,mean_updated_hz,std_hz\n");
        for r in &self.frequencies {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.mode,
                sig6(r.measured_hz),
                sig6(r.initial_hz),
                sig6(r.updated_hz),
                opt6(r.std_hz)
            );
        }
        out
    }

    pub fn mac_csv(&self) -> String {
        let mut out = String::new();
        self.meta.write_header(&mut out);
        out.push_str("mode,initial_mac,mean_mac,std_mac\n");
        for r in &self.mac {
            let _ = writeln!(out, "{},{},{},{}", r.mode, sig6(r.initial), sig6(r.updated), opt6(r.std));
        }
        out
    }

    /// Plain-text table for terminals.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} (seed {})", self.meta.method, self.meta.seed);
        let _ = writeln!(
            out,
            "{:>4} {:>12} {:>12} {:>12} {:>10} {:>10} {:>10} {:>10}",
            "mode", "measured Hz", "initial Hz", "updated Hz", "std Hz", "MAC init", "MAC upd", "MAC std"
        );
        for (f, m) in self.frequencies.iter().zip(&self.mac) {
            let _ = writeln!(
                out,
                "{:>4} {:>12} {:>12} {:>12} {:>10} {:>10} {:>10} {:>10}",
                f.mode,
                sig6(f.measured_hz),
                sig6(f.initial_hz),
                sig6(f.updated_hz),
                opt6(f.std_hz),
                sig6(m.initial),
                sig6(m.updated),
                opt6(m.std)
            );
        }
        out
    }
}

fn parameter_header(n: usize) -> String {
    (0..n).map(UpdatingParameters::parameter_name).collect::<Vec<_>>().join(",")
}

/// One row per retained state: step, parameters, log-posterior.
pub fn chain_csv(chain: &Chain, meta: &ReportMeta) -> String {
    let mut out = String::new();
    meta.write_header(&mut out);
    let _ = writeln!(out, "# acceptance_rate: {}", chain.acceptance_rate);
    let n = chain.samples.first().map_or(0, Vec::len);
    let _ = writeln!(out, "sample,{},log_posterior", parameter_header(n));
    for (i, (s, lp)) in chain.samples.iter().zip(&chain.log_posteriors).enumerate() {
        let _ = write!(out, "{i}");
        for x in s {
            let _ = write!(out, ",{x}");
        }
        let _ = writeln!(out, ",{lp}");
    }
    out
}

/// Retained states read back from [`chain_csv`] output.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTable {
    pub samples: Vec<Vec<f64>>,
    pub log_posteriors: Vec<f64>,
}

pub fn parse_chain_csv(text: &str, origin: &str) -> Result<ChainTable> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_string(),
        line,
        column: 1,
        message,
    };
    let mut rows = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let (_, header) = rows.next().ok_or_else(|| parse_err(1, "no header row".into()))?;
    let columns = header.split(',').count();
    if columns < 3 {
        return Err(parse_err(1, format!("header has {columns} columns")));
    }
    let mut table = ChainTable {
        samples: Vec::new(),
        log_posteriors: Vec::new(),
    };
    for (i, line) in rows {
        let values: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(i + 1, e.to_string()))?;
        if values.len() != columns {
            return Err(parse_err(i + 1, format!("{} fields, header has {columns}", values.len())));
        }
        table.samples.push(values[1..columns - 1].to_vec());
        table.log_posteriors.push(values[columns - 1]);
    }
    if table.samples.is_empty() {
        return Err(parse_err(1, "chain has no rows".into()));
    }
    Ok(table)
}

pub fn ga_history_csv(result: &GaResult, meta: &ReportMeta) -> String {
    let mut out = String::new();
    meta.write_header(&mut out);
    let _ = writeln!(out, "# best: {}", result.best.iter().map(f64::to_string).collect::<Vec<_>>().join(" "));
    out.push_str("generation,best_log_likelihood\n");
    for (g, f) in result.history.iter().enumerate() {
        let _ = writeln!(out, "{g},{f}");
    }
    out
}

/// Equal-width bins over the sample range; the last bin is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::Size(format!("{bins} bins requested, at least 2 required")));
        }
        if values.is_empty() {
            return Err(Error::Size("no values to bin".into()));
        }
        let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            let pad = (lo.abs() * 1e-9).max(1e-12);
            lo -= pad;
            hi += pad;
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Ok(Histogram { edges, counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Mean of the binned values taken at the bin centres.
    pub fn binned_mean(&self) -> f64 {
        let total = self.total() as f64;
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| 0.5 * (self.edges[i] + self.edges[i + 1]) * c as f64)
            .sum::<f64>()
            / total
    }

    /// Number of local maxima of the counts, plateaus counted once.
    pub fn peak_count(&self) -> usize {
        let c: Vec<usize> = self.counts.iter().copied().fold(Vec::new(), |mut acc, x| {
            if acc.last() != Some(&x) {
                acc.push(x);
            }
            acc
        });
        (0..c.len())
            .filter(|&i| (i == 0 || c[i - 1] < c[i]) && (i + 1 == c.len() || c[i + 1] < c[i]))
            .count()
    }
}

/// Binned predicted frequency and shape coordinate of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramPair {
    pub mode: usize,
    pub coordinate: usize,
    pub frequency: Histogram,
    pub shape: Histogram,
}

pub fn emit_histograms(predictive: &Predictive, mode: usize, coordinate: usize, bins: usize) -> Result<HistogramPair> {
    let first = predictive
        .samples
        .first()
        .ok_or_else(|| Error::Size("no solved samples to bin".into()))?;
    if mode >= first.frequencies_hz.len() {
        return Err(Error::Size(format!("mode {mode} out of range for {} modes", first.frequencies_hz.len())));
    }
    if coordinate >= first.shapes.nrows() {
        return Err(Error::Size(format!(
            "coordinate {coordinate} out of range for {} coordinates",
            first.shapes.nrows()
        )));
    }
    Ok(HistogramPair {
        mode,
        coordinate,
        frequency: Histogram::new(&predictive.frequency(mode), bins)?,
        shape: Histogram::new(&predictive.shape_coordinate(mode, coordinate), bins)?,
    })
}

pub fn histogram_csv(h: &HistogramPair, meta: &ReportMeta) -> String {
    let mut out = String::new();
    meta.write_header(&mut out);
    let _ = writeln!(out, "# mode_index: {}", h.mode);
    let _ = writeln!(out, "# coordinate_index: {}", h.coordinate);
    out.push_str("quantity,bin,lower,upper,count\n");
    for (name, hist) in [("frequency_hz", &h.frequency), ("shape_coordinate", &h.shape)] {
        for (i, c) in hist.counts.iter().enumerate() {
            let _ = writeln!(out, "{name},{i},{},{},{c}", sig6(hist.edges[i]), sig6(hist.edges[i + 1]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn meta() -> ReportMeta {
        ReportMeta {
            method: "bayes".into(),
            seed: 3,
            config_digest: "abc".into(),
            skipped: 0,
        }
    }

    fn prediction(f: f64, n_coords: usize) -> SamplePrediction {
        SamplePrediction {
            frequencies_hz: vec![f, 3.0 * f],
            mac: vec![0.99, 0.95],
            shapes: DMatrix::from_element(n_coords, 2, f / 100.0),
            pairing: vec![0, 1],
        }
    }

    fn predictive(samples: Vec<SamplePrediction>, skipped: usize) -> Predictive {
        Predictive {
            stats: PredictiveStats {
                mean_frequencies_hz: vec![],
                std_frequencies_hz: vec![],
                mean_mac_diagonal: vec![],
                std_mac_diagonal: vec![],
            },
            samples,
            skipped,
        }
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(70.14412345), "70.1441");
        assert_eq!(sig6(938.3449), "938.345");
        assert_eq!(sig6(0.9999996), "1.00000");
        assert_eq!(sig6(99.99996), "100.000");
        assert_eq!(sig6(0.00123456789), "0.00123457");
        assert_eq!(sig6(-1.5e-7), "-1.50000e-7");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn point_report_leaves_std_empty() {
        let init = prediction(70.0, 3);
        let upd = prediction(68.0, 3);
        let r = UpdateReport::from_point(&[67.0, 200.0], &init, &upd, meta());
        let csv = r.frequency_csv();
        assert!(csv.contains("mode,measured_hz,initial_hz,mean_updated_hz,std_hz\n"));
        assert!(csv.contains("\n1,67.0000,70.0000,68.0000,\n"), "{csv}");
        assert!(r.mac_csv().contains("\n2,0.950000,0.950000,\n"));
        assert!(csv.starts_with("# method: bayes\n# seed: 3\n# config_sha256: abc\n# skipped_samples: 0\n"));
    }

    #[test]
    fn chain_csv_round_trips() {
        let chain = Chain {
            samples: vec![vec![1.0, 0.1 + 0.2, 1e-300], vec![0.5, 2.0 / 3.0, 7.0]],
            log_posteriors: vec![-1.25, -std::f64::consts::PI],
            acceptance_rate: 0.5,
            burn_in_acceptance_rate: 0.4,
            rejected_non_finite: 0,
            final_step_sizes: vec![0.1; 3],
            seed: 1,
        };
        let text = chain_csv(&chain, &meta());
        assert!(text.contains("sample,density_scale,modulus_scale,section_scale_1,log_posterior\n"));
        let back = parse_chain_csv(&text, "mem").unwrap();
        assert_eq!(back.samples, chain.samples);
        assert_eq!(back.log_posteriors, chain.log_posteriors);
        assert!(parse_chain_csv("sample,a,lp\n0,1\n", "mem").is_err());
        assert!(parse_chain_csv("# only\n", "mem").is_err());
    }

    #[test]
    fn degenerate_chain_fills_one_bin() {
        let p = predictive(vec![prediction(70.0, 4); 25], 0);
        let h = emit_histograms(&p, 1, 2, 10).unwrap();
        for hist in [&h.frequency, &h.shape] {
            assert_eq!(hist.counts.iter().filter(|&&c| c > 0).count(), 1);
            assert_eq!(hist.total(), 25);
        }
    }

    #[test]
    fn counts_are_conserved() {
        let samples: Vec<_> = (0..97).map(|i| prediction(60.0 + (i % 13) as f64, 2)).collect();
        let p = predictive(samples, 3);
        let h = emit_histograms(&p, 0, 1, 7).unwrap();
        assert_eq!(h.frequency.total(), 97);
        assert_eq!(h.shape.total(), 97);
        assert_eq!(h.frequency.edges.len(), 8);
        assert!(emit_histograms(&p, 2, 0, 7).is_err());
        assert!(emit_histograms(&p, 0, 2, 7).is_err());
        assert!(emit_histograms(&p, 0, 0, 1).is_err());
    }

    #[test]
    fn peak_count() {
        let h = Histogram {
            edges: (0..=6).map(f64::from).collect(),
            counts: vec![1, 3, 3, 2, 5, 0],
        };
        assert_eq!(h.peak_count(), 2);
        let h = Histogram {
            edges: (0..=4).map(f64::from).collect(),
            counts: vec![0, 4, 4, 1],
        };
        assert_eq!(h.peak_count(), 1);
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("r.csv");
        write_atomic(&p, b"first version, longer").unwrap();
        write_atomic(&p, b"second").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"second");
        let leftovers: Vec<_> = std::fs::read_dir(p.parent().unwrap()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }
}
