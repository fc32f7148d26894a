//! Ionic membrane models advanced with an IMEX split: gating variables get
//! exact exponential updates, concentrations get forward Euler, and the
//! nonlinear current is evaluated at an extrapolated potential.

use crate::EpError;

/// Parameters of the built-in two-variable model plus the affine map between
/// the dimensionless potential v ∈ [0, 1] and millivolts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembraneModelSpec {
    /// Inward (depolarizing) time constant, ms.
    pub tau_in: f64,
    /// Outward (repolarizing) time constant, ms.
    pub tau_out: f64,
    /// Gate recovery time constant below the gate threshold, ms.
    pub tau_open: f64,
    /// Gate inactivation time constant above the gate threshold, ms.
    pub tau_close: f64,
    /// Gate threshold on the dimensionless potential.
    pub v_gate: f64,
    /// Resting potential, mV (v = 0).
    pub v_rest: f64,
    /// Peak potential, mV (v = 1).
    pub v_peak: f64,
}

impl Default for MembraneModelSpec {
    fn default() -> Self {
        Self {
            tau_in: 0.3,
            tau_out: 6.0,
            tau_open: 120.0,
            tau_close: 150.0,
            v_gate: 0.13,
            v_rest: -84.0,
            v_peak: 40.0,
        }
    }
}

impl MembraneModelSpec {
    pub fn validate(&self) -> Result<(), EpError> {
        for (name, tau) in [
            ("tau_in", self.tau_in),
            ("tau_out", self.tau_out),
            ("tau_open", self.tau_open),
            ("tau_close", self.tau_close),
        ] {
            if !(tau > 0.0) {
                return Err(EpError::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if !(self.v_gate > 0.0 && self.v_gate < 1.0) {
            return Err(EpError::InvalidParameter("v_gate must lie in (0, 1)".into()));
        }
        if !(self.v_peak > self.v_rest) {
            return Err(EpError::InvalidParameter("v_peak must exceed v_rest".into()));
        }
        Ok(())
    }
}

/// Per-node membrane state: `w` holds the gating variables (node-major,
/// `n_gates` per node), `c` the ionic concentrations (`n_concentrations` per
/// node; empty for the built-in model).
#[derive(Debug, Clone, PartialEq)]
pub struct IonicState {
    pub w: Vec<f64>,
    pub c: Vec<f64>,
}

/// A membrane model under the IMEX split. `ionic_current` returns the
/// dimensionless rate dv/dt contribution in 1/ms; the tissue drivers scale it
/// by C_m · (v_peak − v_rest) to get a physical surface current density.
pub trait MembraneModel {
    fn n_gates(&self) -> usize;
    fn n_concentrations(&self) -> usize;
    fn v_rest(&self) -> f64;
    /// v_peak − v_rest, the mV span of one dimensionless unit.
    fn delta_v(&self) -> f64;
    fn rest_state(&self, n_nodes: usize) -> IonicState;
    /// Exact/implicit gate update over dt at frozen potential.
    fn step_gating(&self, state: &mut IonicState, vm: &[f64], dt: f64);
    /// Forward-Euler concentration update over dt at frozen potential.
    fn step_concentrations(&self, state: &mut IonicState, vm: &[f64], dt: f64);
    /// Dimensionless current rate per node, positive where it drives v down.
    fn ionic_current(&self, state: &IonicState, vm: &[f64], out: &mut [f64]);
}

/// Two-variable phenomenological model: a cubic inward current gated by a
/// single recovery variable h, and a linear outward current. h relaxes to 1
/// below the gate threshold and to 0 above it, each branch exactly
/// exponential, so h can never leave [0, 1].
pub struct TwoVariableModel {
    spec: MembraneModelSpec,
}

impl TwoVariableModel {
    pub fn new(spec: MembraneModelSpec) -> Result<Self, EpError> {
        spec.validate()?;
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &MembraneModelSpec {
        &self.spec
    }

    /// Dimensionless potential v for a millivolt reading.
    pub fn normalized(&self, vm: f64) -> f64 {
        (vm - self.spec.v_rest) / (self.spec.v_peak - self.spec.v_rest)
    }
}

impl MembraneModel for TwoVariableModel {
    fn n_gates(&self) -> usize {
        1
    }

    fn n_concentrations(&self) -> usize {
        0
    }

    fn v_rest(&self) -> f64 {
        self.spec.v_rest
    }

    fn delta_v(&self) -> f64 {
        self.spec.v_peak - self.spec.v_rest
    }

    fn rest_state(&self, n_nodes: usize) -> IonicState {
        IonicState { w: vec![1.0; n_nodes], c: Vec::new() }
    }

    fn step_gating(&self, state: &mut IonicState, vm: &[f64], dt: f64) {
        debug_assert!(dt > 0.0);
        debug_assert_eq!(state.w.len(), vm.len());
        let open = (-dt / self.spec.tau_open).exp();
        let close = (-dt / self.spec.tau_close).exp();
        for (h, &v) in state.w.iter_mut().zip(vm) {
            if self.normalized(v) < self.spec.v_gate {
                *h = 1.0 - (1.0 - *h) * open;
            } else {
                *h *= close;
            }
        }
    }

    fn step_concentrations(&self, _state: &mut IonicState, _vm: &[f64], _dt: f64) {}

    fn ionic_current(&self, state: &IonicState, vm: &[f64], out: &mut [f64]) {
        debug_assert_eq!(state.w.len(), vm.len());
        debug_assert_eq!(out.len(), vm.len());
        for i in 0..vm.len() {
            let v = self.normalized(vm[i]);
            out[i] = -state.w[i] * v * v * (1.0 - v) / self.spec.tau_in + v / self.spec.tau_out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model() -> TwoVariableModel {
        TwoVariableModel::new(MembraneModelSpec::default()).unwrap()
    }

    fn mv(model: &TwoVariableModel, v: f64) -> f64 {
        model.spec.v_rest + v * (model.spec.v_peak - model.spec.v_rest)
    }

    #[test]
    fn open_gate_below_threshold_is_a_fixed_point() {
        let m = model();
        let mut s = IonicState { w: vec![1.0], c: vec![] };
        m.step_gating(&mut s, &[mv(&m, 0.0)], 5.0);
        assert_eq!(s.w[0], 1.0);
    }

    #[test]
    fn closed_gate_below_threshold_recovers_toward_one() {
        let m = model();
        let mut s = IonicState { w: vec![0.0], c: vec![] };
        m.step_gating(&mut s, &[mv(&m, 0.05)], 1e6);
        assert!((s.w[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gate_above_threshold_decays_exponentially() {
        let m = model();
        let mut s = IonicState { w: vec![0.8], c: vec![] };
        m.step_gating(&mut s, &[mv(&m, 0.5)], 150.0);
        assert!((s.w[0] - 0.8 * (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn current_examples() {
        let m = model();
        let s = IonicState { w: vec![0.7, 1.0, 0.0], c: vec![] };
        let vm = [mv(&m, 0.0), mv(&m, 1.0), mv(&m, 0.5)];
        let mut out = [0.0; 3];
        m.ionic_current(&s, &vm, &mut out);
        assert_eq!(out[0], 0.0);
        assert!((out[1] - 1.0 / 6.0).abs() < 1e-15);
        assert!((out[2] - 0.5 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn concentrations_are_untouched_by_builtin_model() {
        let m = model();
        let mut s = m.rest_state(4);
        assert!(s.c.is_empty());
        let before = s.clone();
        m.step_concentrations(&mut s, &[0.0; 4], 0.1);
        assert_eq!(s, before);
    }

    #[test]
    fn updates_are_deterministic() {
        let m = model();
        let vm: Vec<f64> = (0..40).map(|i| mv(&m, (i as f64 * 0.617).sin().abs())).collect();
        let run = || {
            let mut s = m.rest_state(40);
            let mut out = vec![0.0; 40];
            for _ in 0..50 {
                m.step_gating(&mut s, &vm, 0.05);
                m.ionic_current(&s, &vm, &mut out);
            }
            (s, out)
        };
        let (s1, o1) = run();
        let (s2, o2) = run();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&s1.w), bits(&s2.w));
        assert_eq!(bits(&o1), bits(&o2));
    }

    /// Plug-in model with one concentration decaying as dc/dt = −c; checks
    /// the forward-Euler contract and its analytic limit.
    struct DecayModel;

    impl MembraneModel for DecayModel {
        fn n_gates(&self) -> usize {
            0
        }
        fn n_concentrations(&self) -> usize {
            1
        }
        fn v_rest(&self) -> f64 {
            0.0
        }
        fn delta_v(&self) -> f64 {
            1.0
        }
        fn rest_state(&self, n_nodes: usize) -> IonicState {
            IonicState { w: vec![], c: vec![1.0; n_nodes] }
        }
        fn step_gating(&self, _: &mut IonicState, _: &[f64], _: f64) {}
        fn step_concentrations(&self, state: &mut IonicState, _: &[f64], dt: f64) {
            for c in state.c.iter_mut() {
                *c += dt * -*c;
            }
        }
        fn ionic_current(&self, _: &IonicState, _: &[f64], out: &mut [f64]) {
            out.fill(0.0);
        }
    }

    #[test]
    fn plugin_concentration_follows_forward_euler() {
        let m = DecayModel;
        let mut s = m.rest_state(1);
        m.step_concentrations(&mut s, &[0.0], 0.1);
        assert!((s.c[0] - 0.9).abs() < 1e-15);

        let mut s = m.rest_state(1);
        for _ in 0..1000 {
            m.step_concentrations(&mut s, &[0.0], 0.001);
        }
        assert!((s.c[0] - (-1.0f64).exp()).abs() < 1e-3);
    }

    #[test]
    fn zero_dimensional_action_potential() {
        // Single cell driven by a 1 ms suprathreshold stimulus: the membrane
        // must depolarize past 0.95 and return below 0.05 within 500 ms.
        let m = model();
        let dt = 0.01;
        let mut v = 0.0f64;
        let mut s = m.rest_state(1);
        let mut peak = 0.0f64;
        let mut repolarized = f64::NAN;
        let mut cur = [0.0];
        for i in 0..50_000 {
            let t = i as f64 * dt;
            let vm = [mv(&m, v)];
            m.step_gating(&mut s, &vm, dt);
            m.ionic_current(&s, &vm, &mut cur);
            let stim = if t < 2.0 { 0.5 } else { 0.0 };
            v += dt * (-cur[0] + stim);
            peak = peak.max(v);
            if peak > 0.95 && v < 0.05 && repolarized.is_nan() {
                repolarized = t;
            }
        }
        assert!(peak >= 0.95, "upstroke only reached {peak}");
        assert!(repolarized < 500.0, "no repolarization before 500 ms");
    }

    proptest! {
        /// For a fixed potential regime the gate moves monotonically toward
        /// that regime's attractor and never overshoots it.
        #[test]
        fn gate_moves_toward_attractor(h0 in 0.0f64..=1.0, v in 0.0f64..=1.0, dt in 1e-3f64..500.0) {
            let m = model();
            let mut s = IonicState { w: vec![h0], c: vec![] };
            m.step_gating(&mut s, &[mv(&m, v)], dt);
            let h1 = s.w[0];
            prop_assert!((0.0..=1.0).contains(&h1));
            if v < m.spec.v_gate {
                prop_assert!(h1 >= h0 - 1e-15);
                prop_assert!(h1 <= 1.0);
            } else {
                prop_assert!(h1 <= h0 + 1e-15);
                prop_assert!(h1 >= 0.0);
            }
        }

        /// Invalid parameter sets are rejected.
        #[test]
        fn invalid_specs_are_rejected(tau in -1.0f64..=0.0) {
            let spec = MembraneModelSpec { tau_in: tau, ..Default::default() };
            prop_assert!(TwoVariableModel::new(spec).is_err());
        }
    }
}
