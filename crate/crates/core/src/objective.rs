//! Modal error matrix, likelihood, prior and posterior of an updating vector.
//!
//! For measured mode `i` with frequency `ωᵢ` and shape `φᵢ` (re-normalized so
//! `φᵢᵀ M_red φᵢ = 1` against the current reduced mass), the modal-domain
//! residual is `rᵢ = (−ωᵢ² M_red + K_red) φᵢ`. Two scalings of it are offered:
//!
//! * [`ResidualForm::Nodal`]: entry `(j, i)` is `[rᵢ]ⱼ / ωᵢ²`, one row per
//!   measured coordinate.
//! * [`ResidualForm::Modal`] (default): `rᵢ` is projected onto the current
//!   model's mass-normalized modes `ψₖ` paired to the measured modes, where it
//!   reads `ψₖᵀ rᵢ = (λₖ − ωᵢ²) cₖᵢ` with `cₖᵢ = ψₖᵀ M_red φᵢ`. The row of the
//!   mode paired to `i` is scaled by `ωᵢ²` (relative eigenvalue error), the
//!   others by `|λₖ − ωᵢ²|` (mass-orthogonality), and both are in percent.
//!
//! The nodal form passes measurement noise in the shapes through `K_red`, so
//! noise in high-order shape content dominates the sum of squares and drags the
//! stiffness estimate down. The modal form keeps every entry bounded by the
//! shape noise itself. Normalization constants are never evaluated; only
//! log-density differences matter downstream.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::beam::{assemble, BeamGeometry, UpdatingParameters};
use crate::error::{ensure_positive, Error, Result};
use crate::guyan::{reduce, ReducedSystem};
use crate::modal::{pair_modes, solve_available_modes, ModalSet, PAIRING_MARGIN};

/// Unnormalized log-density over a flat parameter vector.
///
/// Returning a non-finite value marks the point as outside the support.
pub trait LogDensity: Sync {
    fn log_density(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Sync> LogDensity for F {
    fn log_density(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// How the modal residual is scaled before it enters the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualForm {
    #[default]
    Modal,
    Nodal,
}

/// Provenance of a measured data set. All fields optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataMetadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<UpdatingParameters>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freq_noise: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape_noise: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Measured frequencies and shapes at the master coordinates listed in
/// `coordinate_map` (global DOF indices of the full model, row order of `shapes`).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredModalData {
    pub modal: ModalSet,
    pub coordinate_map: Vec<usize>,
    pub metadata: DataMetadata,
}

impl MeasuredModalData {
    pub fn new(modal: ModalSet, coordinate_map: Vec<usize>) -> Result<Self> {
        let data = MeasuredModalData {
            modal,
            coordinate_map,
            metadata: DataMetadata::default(),
        };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modal.mode_count() == 0 {
            return Err(Error::Size("measured data has no modes".into()));
        }
        if self.modal.coordinate_count() == 0 {
            return Err(Error::Size("measured data has no coordinates".into()));
        }
        if self.coordinate_map.len() != self.modal.coordinate_count() {
            return Err(Error::Size(format!(
                "coordinate_map has {} entries for {} shape rows",
                self.coordinate_map.len(),
                self.modal.coordinate_count()
            )));
        }
        for &f in &self.modal.frequencies_hz {
            ensure_positive("frequency_hz", f)?;
        }
        Ok(())
    }

    pub fn mode_count(&self) -> usize {
        self.modal.mode_count()
    }
}

/// Grouped Gaussian prior centred on `reference`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub alphas: Vec<f64>,
    pub groups: Vec<Vec<usize>>,
    pub reference: Vec<f64>,
}

impl PriorSpec {
    /// Four groups (density, modulus, well-known sections, drilled sections)
    /// with coefficients `[10, 10, 10, 0.1]`, centred on the nominal model.
    pub fn beam_default(element_count: usize) -> Self {
        PriorSpec {
            alphas: vec![10.0, 10.0, 10.0, 0.1],
            groups: UpdatingParameters::default_groups(element_count, &[5, 6]),
            reference: UpdatingParameters::nominal(element_count).to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::config("prior.groups", "at least one group is required"));
        }
        if self.alphas.len() != self.groups.len() {
            return Err(Error::config(
                "prior.alphas",
                format!("{} coefficients for {} groups", self.alphas.len(), self.groups.len()),
            ));
        }
        for (i, &a) in self.alphas.iter().enumerate() {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::config(format!("prior.alphas[{i}]"), format!("{a} is not positive")));
            }
        }
        let n = self.reference.len();
        let mut seen = vec![false; n];
        for g in &self.groups {
            for &i in g {
                if i >= n {
                    return Err(Error::config("prior.groups", format!("index {i} out of range for {n} parameters")));
                }
                if seen[i] {
                    return Err(Error::config("prior.groups", format!("index {i} appears in more than one group")));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::config("prior.groups", format!("parameter {i} belongs to no group")));
        }
        Ok(())
    }
}

/// Components of an evaluated log-posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPosteriorValue {
    pub log_likelihood: f64,
    pub log_prior: f64,
    pub log_posterior: f64,
    pub error_matrix: DMatrix<f64>,
}

/// Dimensionless modal residual of one mode against a reduced pencil.
pub fn residual_column(
    stiffness: &DMatrix<f64>,
    mass: &DMatrix<f64>,
    omega_sq: f64,
    shape: &DVector<f64>,
) -> Result<DVector<f64>> {
    ensure_positive("omega_squared", omega_sq)?;
    let modal_mass = shape.dot(&(mass * shape));
    if !(modal_mass > 0.0) {
        return Err(Error::domain("modal_mass", modal_mass, "shape has no mass-weighted norm"));
    }
    let phi = shape / modal_mass.sqrt();
    let r = stiffness * &phi - mass * &phi * omega_sq;
    Ok(r / omega_sq)
}

/// Error matrix (coordinates × modes) of measured modes against a reduced system.
pub fn modal_residuals(reduced: &ReducedSystem, data: &ModalSet) -> Result<DMatrix<f64>> {
    if reduced.mass.nrows() != data.coordinate_count() {
        return Err(Error::Size(format!(
            "reduced system has {} coordinates, data has {}",
            reduced.mass.nrows(),
            data.coordinate_count()
        )));
    }
    let mut out = DMatrix::zeros(data.coordinate_count(), data.mode_count());
    for (i, &f) in data.frequencies_hz.iter().enumerate() {
        ensure_positive("frequency_hz", f)?;
        let omega_sq = (2.0 * PI * f).powi(2);
        let col = residual_column(&reduced.stiffness, &reduced.mass, omega_sq, &data.shape(i))?;
        out.set_column(i, &col);
    }
    Ok(out)
}

/// Residual in the current model's paired modal coordinates (N × N, percent).
///
/// Row `j` belongs to the model mode paired to measured mode `j`.
pub fn modal_coordinate_residuals(reduced: &ReducedSystem, data: &ModalSet) -> Result<DMatrix<f64>> {
    let n = data.mode_count();
    let computed = solve_available_modes(reduced, n + PAIRING_MARGIN, true)?;
    let pairing = pair_modes(&computed, data)?;
    let psi: Vec<(DVector<f64>, f64)> = pairing
        .iter()
        .map(|&k| {
            let lambda = (2.0 * PI * computed.frequencies_hz[k]).powi(2);
            (&reduced.mass * computed.shape(k), lambda)
        })
        .collect();

    let mut out = DMatrix::zeros(n, n);
    for (i, &f) in data.frequencies_hz.iter().enumerate() {
        ensure_positive("frequency_hz", f)?;
        let omega_sq = (2.0 * PI * f).powi(2);
        let shape = data.shape(i);
        let modal_mass = shape.dot(&(&reduced.mass * &shape));
        if !(modal_mass > 0.0) {
            return Err(Error::domain("modal_mass", modal_mass, "shape has no mass-weighted norm"));
        }
        let phi = shape / modal_mass.sqrt();
        for (j, (m_psi, lambda)) in psi.iter().enumerate() {
            let c = m_psi.dot(&phi);
            out[(j, i)] = if j == i {
                100.0 * c.abs() * (lambda - omega_sq) / omega_sq
            } else {
                100.0 * c
            };
        }
    }
    Ok(out)
}

/// Assemble, reduce onto the data's coordinates, and evaluate the nodal
/// residuals `[rᵢ]ⱼ / ωᵢ²` (F × N).
pub fn error_matrix(
    params: &UpdatingParameters,
    geometry: &BeamGeometry,
    data: &MeasuredModalData,
) -> Result<DMatrix<f64>> {
    residual_matrix(ResidualForm::Nodal, params, geometry, data)
}

/// Residual matrix in the requested form.
pub fn residual_matrix(
    form: ResidualForm,
    params: &UpdatingParameters,
    geometry: &BeamGeometry,
    data: &MeasuredModalData,
) -> Result<DMatrix<f64>> {
    let full = assemble(geometry, params)?;
    let reduced = reduce(&full, &data.coordinate_map)?;
    match form {
        ResidualForm::Nodal => modal_residuals(&reduced, &data.modal),
        ResidualForm::Modal => modal_coordinate_residuals(&reduced, &data.modal),
    }
}

/// `−β Σ ε²`.
pub fn log_likelihood(error: &DMatrix<f64>, beta: f64) -> f64 {
    -beta * error.iter().map(|e| e * e).sum::<f64>()
}

/// `−Σ_g (α_g / 2) ‖Δ_g‖²` with `Δ = params − reference` restricted to group `g`.
pub fn log_prior(params: &[f64], prior: &PriorSpec) -> f64 {
    prior
        .groups
        .iter()
        .zip(&prior.alphas)
        .map(|(group, alpha)| {
            let sq: f64 = group
                .iter()
                .map(|&i| {
                    let d = params[i] - prior.reference[i];
                    d * d
                })
                .sum();
            -0.5 * alpha * sq
        })
        .sum()
}

pub fn log_posterior(
    params: &UpdatingParameters,
    geometry: &BeamGeometry,
    data: &MeasuredModalData,
    prior: &PriorSpec,
    beta: f64,
    form: ResidualForm,
) -> Result<LogPosteriorValue> {
    ensure_positive("beta", beta)?;
    let flat = params.to_vec();
    if flat.len() != prior.reference.len() {
        return Err(Error::Size(format!(
            "{} parameters but prior reference has {}",
            flat.len(),
            prior.reference.len()
        )));
    }
    let error_matrix = residual_matrix(form, params, geometry, data)?;
    let ll = log_likelihood(&error_matrix, beta);
    let lp = log_prior(&flat, prior);
    Ok(LogPosteriorValue {
        log_likelihood: ll,
        log_prior: lp,
        log_posterior: ll + lp,
        error_matrix,
    })
}

/// The beam updating problem bound to one data set.
#[derive(Debug, Clone)]
pub struct BeamPosterior {
    pub geometry: BeamGeometry,
    pub data: MeasuredModalData,
    pub prior: PriorSpec,
    pub beta: f64,
    pub residual: ResidualForm,
}

impl BeamPosterior {
    pub fn new(
        geometry: BeamGeometry,
        data: MeasuredModalData,
        prior: PriorSpec,
        beta: f64,
        residual: ResidualForm,
    ) -> Result<Self> {
        geometry.validate()?;
        data.validate()?;
        prior.validate()?;
        ensure_positive("beta", beta)?;
        if prior.reference.len() != geometry.element_count + 2 {
            return Err(Error::config(
                "prior.reference",
                format!("expected {} entries", geometry.element_count + 2),
            ));
        }
        Ok(BeamPosterior {
            geometry,
            data,
            prior,
            beta,
            residual,
        })
    }

    pub fn evaluate(&self, params: &UpdatingParameters) -> Result<LogPosteriorValue> {
        log_posterior(params, &self.geometry, &self.data, &self.prior, self.beta, self.residual)
    }

    pub fn log_likelihood_at(&self, params: &UpdatingParameters) -> Result<f64> {
        let e = residual_matrix(self.residual, params, &self.geometry, &self.data)?;
        Ok(log_likelihood(&e, self.beta))
    }

    /// Likelihood-only view, the objective of maximum-likelihood updating.
    pub fn likelihood(&self) -> Likelihood<'_> {
        Likelihood(self)
    }
}

impl LogDensity for BeamPosterior {
    fn log_density(&self, x: &[f64]) -> f64 {
        UpdatingParameters::from_slice(x)
            .and_then(|p| self.evaluate(&p))
            .map_or(f64::NEG_INFINITY, |v| v.log_posterior)
    }
}

pub struct Likelihood<'a>(&'a BeamPosterior);

impl LogDensity for Likelihood<'_> {
    fn log_density(&self, x: &[f64]) -> f64 {
        UpdatingParameters::from_slice(x)
            .and_then(|p| self.0.log_likelihood_at(&p))
            .unwrap_or(f64::NEG_INFINITY)
    }
}
