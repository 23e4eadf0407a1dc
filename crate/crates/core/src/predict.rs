//! Point prediction of modal properties for one parameter vector.

use nalgebra::DMatrix;

use crate::beam::{assemble, BeamGeometry, UpdatingParameters};
use crate::error::Result;
use crate::guyan::reduce;
use crate::modal::{mac, pair_modes, solve_available_modes, PAIRING_MARGIN};
use crate::objective::MeasuredModalData;

/// Reduced-model modes paired to the measured modes, in measured-mode order.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePrediction {
    pub frequencies_hz: Vec<f64>,
    /// MAC of each paired computed shape against its measured shape.
    pub mac: Vec<f64>,
    /// Mass-normalized paired shapes (coordinates × modes), sign-aligned to the measured shapes.
    pub shapes: DMatrix<f64>,
    /// Index of the computed elastic mode paired to each measured mode.
    pub pairing: Vec<usize>,
}

pub fn predict(
    params: &UpdatingParameters,
    geometry: &BeamGeometry,
    data: &MeasuredModalData,
) -> Result<SamplePrediction> {
    let full = assemble(geometry, params)?;
    let reduced = reduce(&full, &data.coordinate_map)?;
    let n = data.mode_count();
    let computed = solve_available_modes(&reduced, n + PAIRING_MARGIN, true)?;
    let pairing = pair_modes(&computed, &data.modal)?;

    let mut frequencies_hz = Vec::with_capacity(n);
    let mut macs = Vec::with_capacity(n);
    let mut shapes = DMatrix::zeros(data.modal.coordinate_count(), n);
    for (j, &i) in pairing.iter().enumerate() {
        let measured = data.modal.shapes.column(j);
        let mut phi = computed.shapes.column(i).into_owned();
        if phi.dot(&measured) < 0.0 {
            phi.neg_mut();
        }
        frequencies_hz.push(computed.frequencies_hz[i]);
        macs.push(mac(phi.as_slice(), measured.as_slice())?);
        shapes.set_column(j, &phi);
    }
    Ok(SamplePrediction {
        frequencies_hz,
        mac: macs,
        shapes,
        pairing,
    })
}
