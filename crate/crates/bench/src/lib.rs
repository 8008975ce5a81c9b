//! Shared fixtures for the benchmarks.

use recical_core::geometry::{build_geometry, draw_coupling, CouplingModel, MeasurementMask};
use recical_core::random::stream;
use recical_core::{deterministic_frontend, from_db, SoundingData, SoundingSetup};

/// Full-mask sounding of a `rows × cols` array with the default coupling,
/// reference at antenna 0.
pub fn sounding(rows: usize, cols: usize, n0_db: f64, seed: u64) -> SoundingData {
    let geom = build_geometry(rows, cols, 0.5).expect("valid array");
    let model = CouplingModel::default();
    let mut rng = stream(seed, 0, 0);
    let hbar = draw_coupling(&geom, &model, &mut rng).expect("valid model");
    let fe = deterministic_frontend(geom.len(), 0).expect("valid front-end");
    let setup = SoundingSetup {
        hbar,
        sigma2: model.sigma2,
        n0: from_db(n0_db),
        mask: MeasurementMask::full(geom.len()),
    };
    setup.draw(&fe, &mut rng).expect("valid sounding")
}
