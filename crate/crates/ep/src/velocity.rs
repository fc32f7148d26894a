//! Planar-wave conduction velocity on tissue strips, and the one-shot
//! conductivity rescaling that calibrates it to a target.

use crate::driver::{run_cardiac, EpParameters, ModelKind};
use crate::membrane::MembraneModel;
use crate::stimulus::{Stimulus, StimulusProtocol};
use crate::EpError;
use cardiowave_fem::FiberFrame;
use cardiowave_mesh::factory::structured_rectangle;
use cardiowave_mesh::SimplicialMesh;

/// Least-squares fit of activation time against x over nodes with
/// x ∈ [x_lo, x_hi]; the planar-wave speed is the inverse slope, mm/ms.
pub fn measure_cv(
    mesh: &SimplicialMesh,
    activation: &[f64],
    x_lo: f64,
    x_hi: f64,
) -> Result<f64, EpError> {
    assert_eq!(activation.len(), mesh.n_vertices());
    let mut xs = Vec::new();
    let mut ts = Vec::new();
    for i in 0..mesh.n_vertices() {
        let x = mesh.vertex(i)[0];
        if x >= x_lo && x <= x_hi && activation[i].is_finite() {
            xs.push(x);
            ts.push(activation[i]);
        }
    }
    if xs.len() < 4 {
        return Err(EpError::VelocityFit(format!(
            "only {} activated nodes in [{x_lo}, {x_hi}]",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let mt = ts.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, t) in xs.iter().zip(&ts) {
        cov += (x - mx) * (t - mt);
        var += (x - mx) * (x - mx);
    }
    if var == 0.0 {
        return Err(EpError::VelocityFit("no spread in x among activated nodes".into()));
    }
    let slope = cov / var;
    if slope <= 0.0 {
        return Err(EpError::VelocityFit(format!(
            "activation does not advance with x (slope {slope:.3e})"
        )));
    }
    Ok(1.0 / slope)
}

/// Multiplicative rescaling of the conductivity triples that carries a
/// measured planar speed to the target: speed grows as the square root of
/// tissue conductivity, so the factor is (target/measured)².
pub fn conductivity_scale(measured: f64, target: f64) -> f64 {
    assert!(measured > 0.0 && target > 0.0);
    (target / measured) * (target / measured)
}

pub fn scale_sigma(sigma: (f64, f64, f64), factor: f64) -> (f64, f64, f64) {
    (sigma.0 * factor, sigma.1 * factor, sigma.2 * factor)
}

/// Monodomain planar-wave study: a `length` × `width` strip at mesh size
/// `h`, fibers along x, stimulated along the left edge; the speed is fitted
/// over the middle band [0.3·length, 0.7·length]. Conductivities and time
/// stepping come from `params` (the model kind is overridden to monodomain).
pub fn strip_cv(
    params: &EpParameters,
    model: &dyn MembraneModel,
    h: f64,
    length: f64,
    width: f64,
) -> Result<f64, EpError> {
    assert!(h > 0.0 && length > 0.0 && width > 0.0);
    let nx = (length / h).round().max(1.0) as usize;
    let ny = (width / h).round().max(1.0) as usize;
    let mesh = structured_rectangle([0.0, 0.0], [length, width], nx, ny, 1);
    let frame = FiberFrame::uniform(&mesh, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], None)?;
    let protocol = StimulusProtocol {
        stimuli: vec![Stimulus {
            center: [0.0, width / 2.0, 0.0],
            radius: (2.0 * h).max(2.0),
            start: 0.0,
            duration: 1.0,
            amplitude: 100.0,
            period: None,
        }],
    };
    let run = EpParameters { kind: ModelKind::Monodomain, ..*params };
    let timeline = run_cardiac(&run, &protocol, &mesh, &frame, model)?;
    measure_cv(&mesh, &timeline.activation, 0.3 * length, 0.7 * length)
}
