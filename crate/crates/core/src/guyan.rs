//! Static (Guyan) condensation onto a set of master coordinates.

use nalgebra::{DMatrix, DVector};

use crate::beam::FullSystem;
use crate::error::{Error, Result};

/// Largest admissible condition number of the slave-slave stiffness block.
pub const MAX_SLAVE_CONDITION: f64 = 1e12;

/// System condensed onto `master_indices`.
///
/// `transformation` is `n × m` in the original coordinate order: rows at the
/// master indices form the identity, slave rows hold `−K_ss⁻¹ K_sm`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    pub transformation: DMatrix<f64>,
    pub master_indices: Vec<usize>,
}

pub fn reduce(system: &FullSystem, master_indices: &[usize]) -> Result<ReducedSystem> {
    reduce_matrices(&system.stiffness, &system.mass, master_indices)
}

/// Guyan reduction of an arbitrary symmetric pencil.
pub fn reduce_matrices(
    stiffness: &DMatrix<f64>,
    mass: &DMatrix<f64>,
    master_indices: &[usize],
) -> Result<ReducedSystem> {
    let n = stiffness.nrows();
    if !stiffness.is_square() || mass.shape() != stiffness.shape() {
        return Err(Error::Size(format!(
            "stiffness is {:?}, mass is {:?}",
            stiffness.shape(),
            mass.shape()
        )));
    }
    if master_indices.is_empty() {
        return Err(Error::Size("at least one master coordinate is required".into()));
    }
    let mut is_master = vec![false; n];
    for &i in master_indices {
        if i >= n {
            return Err(Error::Size(format!("master index {i} out of range for {n} coordinates")));
        }
        if is_master[i] {
            return Err(Error::Size(format!("master index {i} listed twice")));
        }
        is_master[i] = true;
    }
    let slaves: Vec<usize> = (0..n).filter(|&i| !is_master[i]).collect();
    let m = master_indices.len();

    let k_mm = stiffness.select_rows(master_indices).select_columns(master_indices);
    let mut transformation = DMatrix::zeros(n, m);
    for (c, &i) in master_indices.iter().enumerate() {
        transformation[(i, c)] = 1.0;
    }

    let reduced_k = if slaves.is_empty() {
        k_mm
    } else {
        let k_ss = stiffness.select_rows(&slaves).select_columns(&slaves);
        let k_sm = stiffness.select_rows(&slaves).select_columns(master_indices);
        let x = solve_slave_block(&k_ss, &k_sm)?;
        for (r, &s) in slaves.iter().enumerate() {
            for c in 0..m {
                transformation[(s, c)] = -x[(r, c)];
            }
        }
        let k_ms = stiffness.select_rows(master_indices).select_columns(&slaves);
        k_mm - k_ms * x
    };

    let reduced_m = transformation.transpose() * mass * &transformation;
    Ok(ReducedSystem {
        mass: symmetrize(reduced_m),
        stiffness: symmetrize(reduced_k),
        transformation,
        master_indices: master_indices.to_vec(),
    })
}

/// `K_ss⁻¹ K_sm` through the symmetric eigendecomposition of `K_ss`, which
/// also yields its condition number.
fn solve_slave_block(k_ss: &DMatrix<f64>, k_sm: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = k_ss.clone().symmetric_eigen();
    let largest = eig.eigenvalues.amax();
    let smallest = eig.eigenvalues.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    if !(smallest > 0.0) || largest / smallest > MAX_SLAVE_CONDITION {
        return Err(Error::Numerical(format!(
            "slave stiffness block is singular (condition {:.3e}); masters must carry the rigid-body content",
            largest / smallest
        )));
    }
    let v = &eig.eigenvectors;
    let mut y = v.transpose() * k_sm;
    for (r, lambda) in eig.eigenvalues.iter().enumerate() {
        y.row_mut(r).unscale_mut(*lambda);
    }
    Ok(v * y)
}

fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    (&a + a.transpose()) * 0.5
}

/// Map a reduced shape back to full coordinates: `T · shape`.
pub fn expand(reduced_shape: &DVector<f64>, transformation: &DMatrix<f64>) -> Result<DVector<f64>> {
    if reduced_shape.len() != transformation.ncols() {
        return Err(Error::Size(format!(
            "reduced shape has {} entries, transformation has {} columns",
            reduced_shape.len(),
            transformation.ncols()
        )));
    }
    Ok(transformation * reduced_shape)
}
