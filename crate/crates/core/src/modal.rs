//! Natural frequencies, mode shapes and mode-shape correlation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::beam::FullSystem;
use crate::error::{Error, Result};
use crate::guyan::ReducedSystem;

/// Extra computed modes offered to MAC pairing beyond the measured count.
pub const PAIRING_MARGIN: usize = 3;

/// Rigid-body cutoff on `ω²`, relative to the largest eigenvalue.
pub const RIGID_TOLERANCE: f64 = 1e-8;

/// Anything with a symmetric mass/stiffness pencil.
pub trait SystemMatrices {
    fn mass(&self) -> &DMatrix<f64>;
    fn stiffness(&self) -> &DMatrix<f64>;
}

impl SystemMatrices for FullSystem {
    fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }
    fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }
}

impl SystemMatrices for ReducedSystem {
    fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }
    fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    MassNormalized,
    UnitLength,
    Raw,
}

/// Frequencies (Hz, ascending) with one mode shape per column.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalSet {
    pub frequencies_hz: Vec<f64>,
    pub shapes: DMatrix<f64>,
    pub normalization: Normalization,
}

impl ModalSet {
    pub fn new(frequencies_hz: Vec<f64>, shapes: DMatrix<f64>, normalization: Normalization) -> Result<Self> {
        if shapes.ncols() != frequencies_hz.len() {
            return Err(Error::Size(format!(
                "{} frequencies but {} shape columns",
                frequencies_hz.len(),
                shapes.ncols()
            )));
        }
        if let Some(&f) = frequencies_hz.iter().find(|f| !(**f >= 0.0) || !f.is_finite()) {
            return Err(Error::domain("frequency_hz", f, "must be finite and non-negative"));
        }
        if frequencies_hz.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Size("frequencies must be sorted ascending".into()));
        }
        Ok(ModalSet {
            frequencies_hz,
            shapes,
            normalization,
        })
    }

    pub fn mode_count(&self) -> usize {
        self.frequencies_hz.len()
    }

    pub fn coordinate_count(&self) -> usize {
        self.shapes.nrows()
    }

    pub fn shape(&self, mode: usize) -> DVector<f64> {
        self.shapes.column(mode).into_owned()
    }
}

/// Solve `K φ = ω² M φ` and return the `n_modes` lowest (elastic) modes.
///
/// Shapes are mass-normalized with their largest-magnitude entry positive.
pub fn solve_modes<S: SystemMatrices + ?Sized>(system: &S, n_modes: usize, drop_rigid: bool) -> Result<ModalSet> {
    let (eigenvalues, shapes) = solve_pencil(system.stiffness(), system.mass())?;
    let largest = eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let cutoff = RIGID_TOLERANCE * largest;

    let kept: Vec<usize> = (0..eigenvalues.len())
        .filter(|&i| !drop_rigid || eigenvalues[i] >= cutoff)
        .filter(|&i| eigenvalues[i].is_finite())
        .collect();
    if kept.len() < n_modes {
        return Err(Error::Size(format!(
            "requested {n_modes} modes but only {} are available",
            kept.len()
        )));
    }

    let n = shapes.nrows();
    let mut out = DMatrix::zeros(n, n_modes);
    let mut freqs = Vec::with_capacity(n_modes);
    for (c, &i) in kept.iter().take(n_modes).enumerate() {
        let mut col = shapes.column(i).into_owned();
        fix_sign(&mut col);
        out.set_column(c, &col);
        freqs.push(eigenvalues[i].max(0.0).sqrt() / (2.0 * PI));
    }
    ModalSet::new(freqs, out, Normalization::MassNormalized)
}

/// Like [`solve_modes`] but returns at most `max_modes`, however many are available.
pub fn solve_available_modes<S: SystemMatrices + ?Sized>(
    system: &S,
    max_modes: usize,
    drop_rigid: bool,
) -> Result<ModalSet> {
    let available = if drop_rigid {
        system.mass().nrows() - rigid_mode_count(system)?
    } else {
        system.mass().nrows()
    };
    solve_modes(system, max_modes.min(available), drop_rigid)
}

/// Number of eigenvalues below the rigid cutoff.
pub fn rigid_mode_count<S: SystemMatrices + ?Sized>(system: &S) -> Result<usize> {
    let (eigenvalues, _) = solve_pencil(system.stiffness(), system.mass())?;
    let largest = eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    Ok(eigenvalues
        .iter()
        .filter(|&&v| v < RIGID_TOLERANCE * largest)
        .count())
}

/// All eigenpairs of the symmetric-definite pencil, ascending.
///
/// Uses the Cholesky factor `M = L Lᵀ` to form `L⁻¹ K L⁻ᵀ`, then back-transforms
/// eigenvectors so that `φᵀ M φ = 1`.
pub fn solve_pencil(stiffness: &DMatrix<f64>, mass: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = mass.nrows();
    if !mass.is_square() || stiffness.shape() != mass.shape() {
        return Err(Error::Size(format!(
            "mass is {:?}, stiffness is {:?}",
            mass.shape(),
            stiffness.shape()
        )));
    }
    let chol = mass
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let l_inv_k = l
        .solve_lower_triangular(stiffness)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let a = l
        .solve_lower_triangular(&l_inv_k.transpose())
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    let a = (&a + a.transpose()) * 0.5;

    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let lt = l.transpose();
    let mut shapes = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (c, &i) in order.iter().enumerate() {
        let y = eig.eigenvectors.column(i).into_owned();
        let phi = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
        shapes.set_column(c, &phi);
        values.push(eig.eigenvalues[i]);
    }
    Ok((values, shapes))
}

fn fix_sign(v: &mut DVector<f64>) {
    let mut idx = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v.len() > 0 && v[idx] < 0.0 {
        v.neg_mut();
    }
}

/// Modal assurance criterion `|aᵀb|² / ((aᵀa)(bᵀb))`.
pub fn mac(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Size(format!("shape lengths {} and {}", a.len(), b.len())));
    }
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    if aa == 0.0 {
        return Err(Error::domain("a", 0.0, "mode shape must be nonzero"));
    }
    if bb == 0.0 {
        return Err(Error::domain("b", 0.0, "mode shape must be nonzero"));
    }
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((ab * ab / (aa * bb)).min(1.0))
}

/// Pairwise MAC between every column of `a` (rows) and of `b` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct MacTable {
    pub values: DMatrix<f64>,
}

impl MacTable {
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.values.nrows().min(self.values.ncols()))
            .map(|i| self.values[(i, i)])
            .collect()
    }
}

pub fn mac_table(a: &ModalSet, b: &ModalSet) -> Result<MacTable> {
    if a.coordinate_count() != b.coordinate_count() {
        return Err(Error::Size(format!(
            "coordinate counts {} and {}",
            a.coordinate_count(),
            b.coordinate_count()
        )));
    }
    let mut values = DMatrix::zeros(a.mode_count(), b.mode_count());
    for i in 0..a.mode_count() {
        let ai = a.shapes.column(i);
        for j in 0..b.mode_count() {
            values[(i, j)] = mac(ai.as_slice(), b.shapes.column(j).as_slice())?;
        }
    }
    Ok(MacTable { values })
}

/// Greedy MAC pairing: `result[j]` is the computed mode assigned to measured mode `j`.
///
/// Pairs are taken in descending MAC order; ties go to the lower computed
/// index, then the lower measured index.
pub fn pair_modes(computed: &ModalSet, measured: &ModalSet) -> Result<Vec<usize>> {
    if computed.mode_count() < measured.mode_count() {
        return Err(Error::Size(format!(
            "{} computed modes cannot cover {} measured modes",
            computed.mode_count(),
            measured.mode_count()
        )));
    }
    let table = mac_table(computed, measured)?;
    let mut candidates: Vec<(usize, usize, f64)> = Vec::with_capacity(table.values.len());
    for i in 0..computed.mode_count() {
        for j in 0..measured.mode_count() {
            candidates.push((i, j, table.values[(i, j)]));
        }
    }
    candidates.sort_by(|x, y| y.2.total_cmp(&x.2).then(x.0.cmp(&y.0)).then(x.1.cmp(&y.1)));

    let mut assigned = vec![usize::MAX; measured.mode_count()];
    let mut used = vec![false; computed.mode_count()];
    let mut remaining = measured.mode_count();
    for (i, j, _) in candidates {
        if remaining == 0 {
            break;
        }
        if used[i] || assigned[j] != usize::MAX {
            continue;
        }
        used[i] = true;
        assigned[j] = i;
        remaining -= 1;
    }
    Ok(assigned)
}
