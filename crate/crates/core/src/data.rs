//! Measured-data files and synthetic measured data.
//!
//! File layout (JSON):
//!
//! ```json
//! {
//!   "frequencies_hz": [64.0, 184.0],
//!   "shapes": [[0.1, 0.2], [0.3, -0.1]],
//!   "coordinate_map": [0, 2],
//!   "metadata": { "source": "synthetic" }
//! }
//! ```
//!
//! `shapes` is row-major F × N: one row per measured coordinate, one column
//! per mode. `coordinate_map[j]` is the global DOF index (node `k` translation
//! is `2k`) of row `j`.

use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::beam::{assemble, BeamGeometry, UpdatingParameters};
use crate::error::{Error, Result};
use crate::guyan::reduce;
use crate::modal::{solve_modes, ModalSet, Normalization};
use crate::objective::{DataMetadata, MeasuredModalData};
use crate::report::write_atomic;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasuredFile {
    frequencies_hz: Vec<f64>,
    shapes: Vec<Vec<f64>>,
    coordinate_map: Vec<usize>,
    #[serde(default)]
    metadata: DataMetadata,
}

pub fn load_measured(path: impl AsRef<Path>) -> Result<MeasuredModalData> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_measured(&text, &path.display().to_string())
}

/// Parse and validate a measured-data document. Modes are sorted by
/// ascending frequency, with the shape columns permuted to match.
pub fn parse_measured(text: &str, origin: &str) -> Result<MeasuredModalData> {
    let file: MeasuredFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let n = file.frequencies_hz.len();
    let f = file.shapes.len();
    if n == 0 || f == 0 {
        return Err(Error::Size("measured data needs at least one mode and one coordinate".into()));
    }
    if let Some((row, r)) = file.shapes.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::Size(format!(
            "shape row {row} has {} entries, expected {n} (one per frequency)",
            r.len()
        )));
    }
    for &freq in &file.frequencies_hz {
        if !(freq > 0.0 && freq.is_finite()) {
            return Err(Error::domain("frequency_hz", freq, "measured frequencies must be positive"));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| file.frequencies_hz[a].total_cmp(&file.frequencies_hz[b]));
    let freqs: Vec<f64> = order.iter().map(|&i| file.frequencies_hz[i]).collect();
    let shapes = DMatrix::from_fn(f, n, |r, c| file.shapes[r][order[c]]);

    let modal = ModalSet::new(freqs, shapes, Normalization::Raw)?;
    let mut data = MeasuredModalData::new(modal, file.coordinate_map)?;
    data.metadata = file.metadata;
    Ok(data)
}

pub fn measured_to_json(data: &MeasuredModalData) -> Result<String> {
    let s = &data.modal.shapes;
    let file = MeasuredFile {
        frequencies_hz: data.modal.frequencies_hz.clone(),
        shapes: (0..s.nrows()).map(|r| s.row(r).iter().copied().collect()).collect(),
        coordinate_map: data.coordinate_map.clone(),
        metadata: data.metadata.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| Error::Numerical(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn save_measured(data: &MeasuredModalData, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), measured_to_json(data)?.as_bytes())
}

/// Relative noise levels for synthetic data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthNoise {
    /// Standard deviation of the multiplicative frequency perturbation.
    pub freq_rel: f64,
    /// Standard deviation of the additive shape perturbation, relative to
    /// each mode's largest-magnitude coordinate.
    pub shape_rel: f64,
}

impl Default for SynthNoise {
    fn default() -> Self {
        SynthNoise {
            freq_rel: 0.005,
            shape_rel: 0.01,
        }
    }
}

/// Nominal model except the drilled elements 5 and 6, whose sections are 0.8.
pub fn default_truth(element_count: usize) -> UpdatingParameters {
    let mut truth = UpdatingParameters::nominal(element_count);
    for e in [5usize, 6] {
        if e <= element_count {
            truth.section_scales[e - 1] = 0.8;
        }
    }
    truth
}

/// Solve the truth model at `masters` and perturb its modal set.
pub fn synth_measured(
    truth: &UpdatingParameters,
    geometry: &BeamGeometry,
    masters: &[usize],
    n_modes: usize,
    noise: SynthNoise,
    seed: u64,
) -> Result<MeasuredModalData> {
    if !(noise.freq_rel >= 0.0) || !(noise.shape_rel >= 0.0) {
        return Err(Error::config("noise", "relative noise levels must be non-negative"));
    }
    let full = assemble(geometry, truth)?;
    let reduced = reduce(&full, masters)?;
    let modes = solve_modes(&reduced, n_modes, true)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut freqs = modes.frequencies_hz.clone();
    for f in freqs.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *f *= 1.0 + noise.freq_rel * z;
    }
    let mut shapes = modes.shapes.clone();
    for c in 0..shapes.ncols() {
        let scale = shapes.column(c).amax();
        for r in 0..shapes.nrows() {
            let z: f64 = StandardNormal.sample(&mut rng);
            shapes[(r, c)] += noise.shape_rel * scale * z;
        }
    }
    let noiseless = noise.freq_rel == 0.0 && noise.shape_rel == 0.0;

    // noise can in principle reorder close modes; keep the set canonical
    let mut order: Vec<usize> = (0..freqs.len()).collect();
    order.sort_by(|&a, &b| freqs[a].total_cmp(&freqs[b]));
    let sorted_f: Vec<f64> = order.iter().map(|&i| freqs[i]).collect();
    let sorted_s = DMatrix::from_fn(shapes.nrows(), shapes.ncols(), |r, c| shapes[(r, order[c])]);
    let normalization = if noiseless { Normalization::MassNormalized } else { Normalization::Raw };

    let modal = ModalSet::new(sorted_f, sorted_s, normalization)?;
    let mut data = MeasuredModalData::new(modal, masters.to_vec())?;
    data.metadata = DataMetadata {
        source: Some("synthetic".into()),
        truth: Some(truth.clone()),
        freq_noise: Some(noise.freq_rel),
        shape_noise: Some(noise.shape_rel),
        seed: Some(seed),
    };
    Ok(data)
}
