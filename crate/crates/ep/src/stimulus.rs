//! Applied-current stimulation: balls in space, windows in time, optional
//! periodic repetition for multi-beat protocols.

use crate::EpError;
use cardiowave_mesh::vec3::{self, Vec3};
use cardiowave_mesh::SimplicialMesh;

/// One stimulation site: a ball of `radius` around `center` that carries a
/// constant volume current density `amplitude` during
/// [start + k·period, start + k·period + duration) for k = 0, 1, ...
/// (k = 0 only when `period` is absent).
#[derive(Debug, Clone, PartialEq)]
pub struct Stimulus {
    pub center: Vec3,
    pub radius: f64,
    /// ms
    pub start: f64,
    /// ms
    pub duration: f64,
    /// µA/mm³
    pub amplitude: f64,
    /// ms; beat-to-beat repetition interval
    pub period: Option<f64>,
}

impl Stimulus {
    fn active_at(&self, t: f64) -> bool {
        let rel = t - self.start;
        if rel < 0.0 {
            return false;
        }
        let phase = match self.period {
            Some(p) => rel % p,
            None => rel,
        };
        phase < self.duration
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StimulusProtocol {
    pub stimuli: Vec<Stimulus>,
}

impl StimulusProtocol {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), EpError> {
        for (k, s) in self.stimuli.iter().enumerate() {
            if !(s.radius > 0.0 && s.duration > 0.0 && s.amplitude > 0.0) {
                return Err(EpError::InvalidParameter(format!(
                    "stimulus {k}: radius, duration and amplitude must be positive"
                )));
            }
            if let Some(p) = s.period {
                if !(p > 0.0) {
                    return Err(EpError::InvalidParameter(format!(
                        "stimulus {k}: period must be positive when present"
                    )));
                }
            }
        }
        Ok(())
    }

    /// True if any site is in its active window at time t.
    pub fn active(&self, t: f64) -> bool {
        self.stimuli.iter().any(|s| s.active_at(t))
    }

    /// Per-cell volume current density at time t; cells belong to a ball when
    /// their centroid does, and overlapping stimuli sum.
    pub fn applied_current(&self, mesh: &SimplicialMesh, t: f64, out: &mut [f64]) {
        assert_eq!(out.len(), mesh.n_cells());
        out.fill(0.0);
        for s in &self.stimuli {
            if !s.active_at(t) {
                continue;
            }
            for c in 0..mesh.n_cells() {
                if vec3::dist(mesh.cell_centroid(c), s.center) <= s.radius {
                    out[c] += s.amplitude;
                }
            }
        }
    }
}
