//! Parameterized free-free Euler–Bernoulli beam.
//!
//! The model is a row of equal two-node bending elements with one transverse
//! translation and one rotation per node. Updating parameters are
//! dimensionless multipliers on the nominal material and section properties:
//! one global density scale, one global modulus scale and one section scale per
//! element. A section scale multiplies both the area and the second moment of
//! area of its element, so the parameterization stays linear in every scale.

use nalgebra::{DMatrix, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Beam dimensions and nominal material properties, SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamGeometry {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    pub element_count: usize,
    pub nominal_modulus: f64,
    pub nominal_density: f64,
}

impl Default for BeamGeometry {
    /// Freely suspended aluminium test beam: 1.0 m × 25.4 mm × 13.4 mm, 12 elements.
    fn default() -> Self {
        BeamGeometry {
            length: 1.0,
            width: 0.0254,
            thickness: 0.0134,
            element_count: 12,
            nominal_modulus: 7.0e10,
            nominal_density: 2700.0,
        }
    }
}

impl BeamGeometry {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("length", self.length)?;
        ensure_positive("width", self.width)?;
        ensure_positive("thickness", self.thickness)?;
        ensure_positive("nominal_modulus", self.nominal_modulus)?;
        ensure_positive("nominal_density", self.nominal_density)?;
        if self.element_count < 1 {
            return Err(Error::domain(
                "element_count",
                self.element_count as f64,
                "at least one element is required",
            ));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.element_count + 1
    }

    pub fn dof_count(&self) -> usize {
        2 * self.node_count()
    }

    pub fn element_length(&self) -> f64 {
        self.length / self.element_count as f64
    }

    /// Nominal cross-sectional area `A₀ = b·h`.
    pub fn area(&self) -> f64 {
        self.width * self.thickness
    }

    /// Nominal second moment of area `I₀ = b·h³/12`.
    pub fn second_moment(&self) -> f64 {
        self.width * self.thickness.powi(3) / 12.0
    }

    pub fn translation_dof(&self, node: usize) -> usize {
        2 * node
    }

    pub fn rotation_dof(&self, node: usize) -> usize {
        2 * node + 1
    }

    /// Global indices of every transverse translation, in node order.
    pub fn translation_dofs(&self) -> Vec<usize> {
        (0..self.node_count()).map(|n| self.translation_dof(n)).collect()
    }

    /// Closed-form free-free Euler–Bernoulli frequency (Hz) for the given
    /// eigenvalue `βL` of `cos βL cosh βL = 1`.
    pub fn analytical_frequency(&self, beta_l: f64) -> f64 {
        let ei = self.nominal_modulus * self.second_moment();
        let rho_a = self.nominal_density * self.area();
        beta_l * beta_l / (2.0 * std::f64::consts::PI) * (ei / rho_a).sqrt()
            / (self.length * self.length)
    }
}

/// The updating-parameter vector: multipliers on nominal properties.
///
/// Flattened order is `[density_scale, modulus_scale, section_scales...]`,
/// which is also the index space used by [`crate::objective::PriorSpec`] groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdatingParameters {
    pub density_scale: f64,
    pub modulus_scale: f64,
    pub section_scales: Vec<f64>,
}

impl UpdatingParameters {
    /// All scales equal to one: the initial (nominal) model.
    pub fn nominal(element_count: usize) -> Self {
        UpdatingParameters {
            density_scale: 1.0,
            modulus_scale: 1.0,
            section_scales: vec![1.0; element_count],
        }
    }

    pub fn len(&self) -> usize {
        2 + self.section_scales.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.push(self.density_scale);
        v.push(self.modulus_scale);
        v.extend_from_slice(&self.section_scales);
        v
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::Size(format!(
                "updating-parameter vector needs at least 3 entries, got {}",
                values.len()
            )));
        }
        Ok(UpdatingParameters {
            density_scale: values[0],
            modulus_scale: values[1],
            section_scales: values[2..].to_vec(),
        })
    }

    /// Human-readable name of flattened index `i`, used in CSV headers.
    pub fn parameter_name(i: usize) -> String {
        match i {
            0 => "density_scale".to_string(),
            1 => "modulus_scale".to_string(),
            k => format!("section_scale_{}", k - 1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("density_scale", self.density_scale)?;
        ensure_positive("modulus_scale", self.modulus_scale)?;
        for (e, &s) in self.section_scales.iter().enumerate() {
            ensure_positive(&format!("section_scales[{}]", e + 1), s)?;
        }
        Ok(())
    }

    /// Default prior grouping over flattened indices: density, modulus, the
    /// accurately known sections, and the drilled sections (1-based elements).
    pub fn default_groups(element_count: usize, drilled_elements: &[usize]) -> Vec<Vec<usize>> {
        let section = |e: usize| e + 1;
        let well_known: Vec<usize> = (1..=element_count)
            .filter(|e| !drilled_elements.contains(e))
            .map(section)
            .collect();
        let drilled: Vec<usize> = drilled_elements.iter().map(|&e| section(e)).collect();
        let mut groups = vec![vec![0], vec![1]];
        if !well_known.is_empty() {
            groups.push(well_known);
        }
        if !drilled.is_empty() {
            groups.push(drilled);
        }
        groups
    }
}

/// Stiffness and mass of a single bending element over `(v₁, θ₁, v₂, θ₂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrices {
    pub stiffness: Matrix4<f64>,
    pub mass: Matrix4<f64>,
}

/// Consistent Hermite-cubic stiffness and mass of a two-node bending element.
pub fn element_matrices(ei: f64, rho_a: f64, length: f64) -> Result<ElementMatrices> {
    ensure_positive("EI", ei)?;
    ensure_positive("rhoA", rho_a)?;
    ensure_positive("L", length)?;
    let l = length;
    let l2 = l * l;
    let k = ei / (l2 * l);
    #[rustfmt::skip]
    let stiffness = Matrix4::new(
        12.0 * k,     6.0 * l * k,  -12.0 * k,     6.0 * l * k,
        6.0 * l * k,  4.0 * l2 * k, -6.0 * l * k,  2.0 * l2 * k,
        -12.0 * k,    -6.0 * l * k, 12.0 * k,      -6.0 * l * k,
        6.0 * l * k,  2.0 * l2 * k, -6.0 * l * k,  4.0 * l2 * k,
    );
    let m = rho_a * l / 420.0;
    #[rustfmt::skip]
    let mass = Matrix4::new(
        156.0 * m,     22.0 * l * m,  54.0 * m,      -13.0 * l * m,
        22.0 * l * m,  4.0 * l2 * m,  13.0 * l * m,  -3.0 * l2 * m,
        54.0 * m,      13.0 * l * m,  156.0 * m,     -22.0 * l * m,
        -13.0 * l * m, -3.0 * l2 * m, -22.0 * l * m, 4.0 * l2 * m,
    );
    Ok(ElementMatrices { stiffness, mass })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DofKind {
    Translation,
    Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dof {
    pub node: usize,
    pub kind: DofKind,
}

/// Assembled free-free system at full finite-element coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FullSystem {
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    pub dof_map: Vec<Dof>,
}

impl FullSystem {
    pub fn dof_count(&self) -> usize {
        self.mass.nrows()
    }
}

/// Assemble the global mass and stiffness for the given parameters.
///
/// No boundary conditions are applied.
pub fn assemble(geometry: &BeamGeometry, params: &UpdatingParameters) -> Result<FullSystem> {
    geometry.validate()?;
    params.validate()?;
    if params.section_scales.len() != geometry.element_count {
        return Err(Error::domain(
            "section_scales.len",
            params.section_scales.len() as f64,
            "must equal geometry.element_count",
        ));
    }

    let n = geometry.dof_count();
    let le = geometry.element_length();
    let ei0 = params.modulus_scale * geometry.nominal_modulus * geometry.second_moment();
    let rho_a0 = params.density_scale * geometry.nominal_density * geometry.area();

    let mut mass = DMatrix::zeros(n, n);
    let mut stiffness = DMatrix::zeros(n, n);
    for (e, &s) in params.section_scales.iter().enumerate() {
        let em = element_matrices(ei0 * s, rho_a0 * s, le)?;
        let base = 2 * e;
        for a in 0..4 {
            for b in 0..4 {
                stiffness[(base + a, base + b)] += em.stiffness[(a, b)];
                mass[(base + a, base + b)] += em.mass[(a, b)];
            }
        }
    }

    let dof_map = (0..geometry.node_count())
        .flat_map(|node| {
            [
                Dof {
                    node,
                    kind: DofKind::Translation,
                },
                Dof {
                    node,
                    kind: DofKind::Rotation,
                },
            ]
        })
        .collect();

    Ok(FullSystem {
        mass,
        stiffness,
        dof_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Hermite cubic shape functions on [0, L] and their second derivatives.
    fn hermite(x: f64, l: f64) -> ([f64; 4], [f64; 4]) {
        let xi = x / l;
        let n = [
            1.0 - 3.0 * xi * xi + 2.0 * xi.powi(3),
            l * (xi - 2.0 * xi * xi + xi.powi(3)),
            3.0 * xi * xi - 2.0 * xi.powi(3),
            l * (-xi * xi + xi.powi(3)),
        ];
        let d2 = [
            (-6.0 + 12.0 * xi) / (l * l),
            (-4.0 + 6.0 * xi) / l,
            (6.0 - 12.0 * xi) / (l * l),
            (-2.0 + 6.0 * xi) / l,
        ];
        (n, d2)
    }

    /// 5-point Gauss–Legendre integration of the shape-function products.
    fn integrated(ei: f64, rho_a: f64, l: f64) -> (Matrix4<f64>, Matrix4<f64>) {
        let pts = [
            (0.0, 128.0 / 225.0),
            (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
            (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
            (0.906_179_845_938_664, 0.236_926_885_056_189_1),
        ];
        let mut k = Matrix4::zeros();
        let mut m = Matrix4::zeros();
        for (t, w) in pts {
            let x = 0.5 * l * (t + 1.0);
            let (n, d2) = hermite(x, l);
            for a in 0..4 {
                for b in 0..4 {
                    k[(a, b)] += 0.5 * l * w * ei * d2[a] * d2[b];
                    m[(a, b)] += 0.5 * l * w * rho_a * n[a] * n[b];
                }
            }
        }
        (k, m)
    }

    #[test]
    fn element_matches_shape_function_integration() {
        for &(ei, rho_a, l) in &[(1.0, 1.0, 1.0), (356.5, 0.919, 1.0 / 12.0), (2.0, 3.0, 0.7)] {
            let em = element_matrices(ei, rho_a, l).unwrap();
            let (k, m) = integrated(ei, rho_a, l);
            assert!((em.stiffness - k).amax() < 1e-10 * k.amax());
            assert!((em.mass - m).amax() < 1e-12 * m.amax());
        }
    }

    #[test]
    fn unit_element_entries() {
        // Values obtained from the quadrature oracle above at EI = rhoA = L = 1.
        let em = element_matrices(1.0, 1.0, 1.0).unwrap();
        assert!((em.stiffness[(0, 0)] - 12.0).abs() < 1e-14);
        assert!((em.stiffness[(0, 1)] - 6.0).abs() < 1e-14);
        assert!((em.stiffness[(1, 1)] - 4.0).abs() < 1e-14);
        assert!((em.mass[(0, 0)] - 156.0 / 420.0).abs() < 1e-15);
        assert!((em.mass[(0, 2)] - 54.0 / 420.0).abs() < 1e-15);
        assert_eq!(em.stiffness, em.stiffness.transpose());
        assert_eq!(em.mass, em.mass.transpose());
    }

    #[test]
    fn element_eigen_structure() {
        let em = element_matrices(3.0, 2.0, 0.4).unwrap();
        let ke = em.stiffness.symmetric_eigenvalues();
        let scale = ke.amax();
        let zeros = ke.iter().filter(|v| v.abs() < 1e-9 * scale).count();
        assert_eq!(zeros, 2);
        assert!(ke.iter().all(|&v| v > -1e-9 * scale));
        assert!(em.mass.symmetric_eigenvalues().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn element_rejects_non_positive_inputs() {
        match element_matrices(1.0, 0.0, 1.0) {
            Err(Error::Domain { name, .. }) => assert_eq!(name, "rhoA"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(element_matrices(-1.0, 1.0, 1.0), Err(Error::Domain { name, .. }) if name == "EI"));
        assert!(matches!(element_matrices(1.0, 1.0, 0.0), Err(Error::Domain { name, .. }) if name == "L"));
    }

    #[test]
    fn density_scale_multiplies_mass_only() {
        let g = BeamGeometry::default();
        let base = assemble(&g, &UpdatingParameters::nominal(12)).unwrap();
        let mut p = UpdatingParameters::nominal(12);
        p.density_scale = 4.0;
        let scaled = assemble(&g, &p).unwrap();
        assert_eq!(scaled.stiffness, base.stiffness);
        for (a, b) in scaled.mass.iter().zip(base.mass.iter()) {
            assert_eq!(*a, 4.0 * *b);
        }
    }

    #[test]
    fn single_element_assembly_is_the_element() {
        let g = BeamGeometry {
            element_count: 1,
            ..BeamGeometry::default()
        };
        let sys = assemble(&g, &UpdatingParameters::nominal(1)).unwrap();
        let em = element_matrices(
            g.nominal_modulus * g.second_moment(),
            g.nominal_density * g.area(),
            g.length,
        )
        .unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(sys.stiffness[(a, b)], em.stiffness[(a, b)]);
                assert_eq!(sys.mass[(a, b)], em.mass[(a, b)]);
            }
        }
    }

    #[test]
    fn assembly_rejects_bad_parameters() {
        let g = BeamGeometry::default();
        let mut p = UpdatingParameters::nominal(12);
        p.section_scales[4] = 0.0;
        assert!(matches!(assemble(&g, &p), Err(Error::Domain { .. })));
        let p = UpdatingParameters::nominal(11);
        assert!(matches!(assemble(&g, &p), Err(Error::Domain { .. })));
    }

    #[test]
    fn default_groups_follow_drilled_split() {
        let groups = UpdatingParameters::default_groups(12, &[5, 6]);
        assert_eq!(groups.len(), 4);
        assert_eq!(groups[0], vec![0]);
        assert_eq!(groups[1], vec![1]);
        assert_eq!(groups[2], vec![2, 3, 4, 5, 8, 9, 10, 11, 12, 13]);
        assert_eq!(groups[3], vec![6, 7]);
    }

    #[test]
    fn dof_map_alternates_translation_rotation() {
        let g = BeamGeometry::default();
        let sys = assemble(&g, &UpdatingParameters::nominal(12)).unwrap();
        assert_eq!(sys.dof_count(), 26);
        assert_eq!(sys.dof_map[4], Dof { node: 2, kind: DofKind::Translation });
        assert_eq!(sys.dof_map[5], Dof { node: 2, kind: DofKind::Rotation });
        assert_eq!(g.translation_dofs().len(), 13);
    }
}
