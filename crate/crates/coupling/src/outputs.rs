//! Electrode sampling, 12-lead construction, body-surface maps, and the
//! metrics used to compare runs.
//!
//! Electrodes snap to the nearest exterior-surface vertex once and read the
//! torso potential there; no in-facet interpolation. Leads follow the
//! classical definitions: three Einthoven limb leads, three augmented leads,
//! and six precordial leads referenced to the Wilson central terminal.

use crate::{CoupledRun, CouplingError};
use cardiowave_mesh::mesh::{SimplicialMesh, SurfacePatch};
use cardiowave_mesh::vec3::Vec3;
use cardiowave_mesh::LABEL_SIGMA_EXT;

/// Raw electrode order used everywhere: limb electrodes then chest.
pub const ELECTRODE_NAMES: [&str; 9] = ["R", "L", "F", "V1", "V2", "V3", "V4", "V5", "V6"];

/// Derived lead order: limb, augmented, precordial.
pub const LEAD_NAMES: [&str; 12] = [
    "I", "II", "III", "aVR", "aVL", "aVF", "V1L", "V2L", "V3L", "V4L", "V5L", "V6L",
];

/// Electrode coordinates in [`ELECTRODE_NAMES`] order, mm.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectrodeSet {
    pub positions: [Vec3; 9],
}

impl ElectrodeSet {
    pub fn new(positions: [Vec3; 9]) -> Self {
        Self { positions }
    }

    /// Placement for the 2D desk torso (400 x 600 mm box): limb electrodes
    /// at the shoulders and foot end, chest electrodes swept across the top
    /// edge toward the left flank.
    pub fn desk_default() -> Self {
        Self::new([
            [-200.0, 250.0, 0.0],
            [200.0, 250.0, 0.0],
            [0.0, -300.0, 0.0],
            [-30.0, 300.0, 0.0],
            [10.0, 300.0, 0.0],
            [50.0, 300.0, 0.0],
            [90.0, 300.0, 0.0],
            [140.0, 300.0, 0.0],
            [200.0, 220.0, 0.0],
        ])
    }

    /// Binds each electrode to its nearest exterior-surface vertex. Ties go
    /// to the lowest vertex index, so resolution is deterministic.
    pub fn resolve(&self, torso: &SimplicialMesh) -> Result<ResolvedElectrodes, CouplingError> {
        let surface = torso.surface_vertices(LABEL_SIGMA_EXT);
        if surface.is_empty() {
            return Err(CouplingError::Electrode(
                "torso mesh has no exterior-surface vertices".into(),
            ));
        }
        let mut vertices = [0usize; 9];
        for (k, target) in self.positions.iter().enumerate() {
            let mut best = usize::MAX;
            let mut best_d2 = f64::INFINITY;
            for &v in &surface {
                let p = torso.vertex(v);
                let d2 = (0..3).map(|a| (p[a] - target[a]).powi(2)).sum::<f64>();
                if d2 < best_d2 {
                    best_d2 = d2;
                    best = v;
                }
            }
            vertices[k] = best;
        }
        Ok(ResolvedElectrodes { vertices })
    }
}

/// Electrode set bound to concrete mesh vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedElectrodes {
    pub vertices: [usize; 9],
}

impl ResolvedElectrodes {
    /// Reads the nine electrode potentials out of a nodal field.
    pub fn sample(&self, u: &[f64]) -> [f64; 9] {
        let mut out = [0.0; 9];
        for (o, &v) in out.iter_mut().zip(&self.vertices) {
            *o = u[v];
        }
        out
    }
}

/// Wilson central terminal: the mean limb potential.
pub fn wilson_central_terminal(r: f64, l: f64, f: f64) -> f64 {
    (r + l + f) / 3.0
}

/// The six limb leads (I, II, III, aVR, aVL, aVF) from the three limb
/// electrode potentials.
pub fn limb_leads(r: f64, l: f64, f: f64) -> [f64; 6] {
    [
        l - r,
        f - r,
        f - l,
        r - 0.5 * (l + f),
        l - 0.5 * (r + f),
        f - 0.5 * (r + l),
    ]
}

/// The six precordial leads: chest potentials referenced to the Wilson
/// central terminal.
pub fn precordial_leads(r: f64, l: f64, f: f64, chest: &[f64; 6]) -> [f64; 6] {
    let wct = wilson_central_terminal(r, l, f);
    let mut out = [0.0; 6];
    for (o, &v) in out.iter_mut().zip(chest) {
        *o = v - wct;
    }
    out
}

/// Shared time grid plus raw electrode potentials and the 12 derived leads,
/// one row per sample.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceSet {
    pub times: Vec<f64>,
    pub electrodes: Vec<[f64; 9]>,
    pub leads: Vec<[f64; 12]>,
}

impl TraceSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends one sample; the 12 leads are derived here so every stored row
    /// satisfies the lead identities by construction.
    pub fn push(&mut self, t: f64, e: [f64; 9]) {
        let limb = limb_leads(e[0], e[1], e[2]);
        let chest = [e[3], e[4], e[5], e[6], e[7], e[8]];
        let prec = precordial_leads(e[0], e[1], e[2], &chest);
        let mut row = [0.0; 12];
        row[..6].copy_from_slice(&limb);
        row[6..].copy_from_slice(&prec);
        self.times.push(t);
        self.electrodes.push(e);
        self.leads.push(row);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// One lead as a time series, indexed per [`LEAD_NAMES`].
    pub fn lead_column(&self, j: usize) -> Vec<f64> {
        self.leads.iter().map(|row| row[j]).collect()
    }

    /// One raw electrode as a time series, indexed per [`ELECTRODE_NAMES`].
    pub fn electrode_column(&self, j: usize) -> Vec<f64> {
        self.electrodes.iter().map(|row| row[j]).collect()
    }
}

/// Lumped boundary-mass weights: each facet spreads its measure evenly over
/// its corners. Entries are zero off the patch.
pub fn surface_lumped_weights(patch: &SurfacePatch) -> Vec<f64> {
    let mut w = vec![0.0; patch.mesh().n_vertices()];
    for f in 0..patch.n_facets() {
        let vs = patch.facet_vertices(f);
        let share = patch.facet_measure(f) / vs.len() as f64;
        for &v in vs {
            w[v as usize] += share;
        }
    }
    w
}

/// Relative root-mean-square deviation of `test` from `reference`.
pub fn rmse(reference: &[f64], test: &[f64]) -> Result<f64, CouplingError> {
    if reference.len() != test.len() || reference.is_empty() {
        return Err(CouplingError::GridMismatch(format!(
            "series lengths {} vs {}",
            reference.len(),
            test.len()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (r, t) in reference.iter().zip(test) {
        num += (r - t) * (r - t);
        den += r * r;
    }
    if den == 0.0 {
        return Err(CouplingError::DegenerateMetric(
            "rmse reference is identically zero".into(),
        ));
    }
    Ok((num / den).sqrt())
}

/// Pearson correlation coefficient with population standard deviations, so
/// the result lies in [-1, 1].
pub fn cc(reference: &[f64], test: &[f64]) -> Result<f64, CouplingError> {
    let n = reference.len();
    if n != test.len() || n < 2 {
        return Err(CouplingError::GridMismatch(format!(
            "correlation needs two equal-length series of >= 2 samples, got {} vs {}",
            n,
            test.len()
        )));
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / n as f64;
    let (mr, mt) = (mean(reference), mean(test));
    let mut cov = 0.0;
    let mut var_r = 0.0;
    let mut var_t = 0.0;
    for (r, t) in reference.iter().zip(test) {
        cov += (r - mr) * (t - mt);
        var_r += (r - mr) * (r - mr);
        var_t += (t - mt) * (t - mt);
    }
    if var_r == 0.0 || var_t == 0.0 {
        return Err(CouplingError::DegenerateMetric(
            "correlation of a constant series is undefined".into(),
        ));
    }
    Ok(cov / (var_r.sqrt() * var_t.sqrt()))
}

/// Relative weighted l2 deviation between two snapshot families, averaged
/// over time. Snapshots whose reference norm is zero are skipped; if every
/// snapshot is skipped the metric is undefined.
pub fn bspm_l2(
    reference: &[Vec<f64>],
    test: &[Vec<f64>],
    weights: &[f64],
) -> Result<f64, CouplingError> {
    if reference.len() != test.len() || reference.is_empty() {
        return Err(CouplingError::GridMismatch(format!(
            "snapshot counts {} vs {}",
            reference.len(),
            test.len()
        )));
    }
    let mut acc = 0.0;
    let mut used = 0usize;
    for (r, t) in reference.iter().zip(test) {
        if r.len() != weights.len() || t.len() != weights.len() {
            return Err(CouplingError::GridMismatch(format!(
                "snapshot size {} / {} vs {} weights",
                r.len(),
                t.len(),
                weights.len()
            )));
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..weights.len() {
            num += weights[k] * (r[k] - t[k]) * (r[k] - t[k]);
            den += weights[k] * r[k] * r[k];
        }
        if den == 0.0 {
            continue;
        }
        acc += (num / den).sqrt();
        used += 1;
    }
    if used == 0 {
        return Err(CouplingError::DegenerateMetric(
            "every reference snapshot has zero norm".into(),
        ));
    }
    Ok(acc / used as f64)
}

/// Per-lead and aggregate agreement between two runs.
#[derive(Debug, Clone)]
pub struct ModeComparison {
    pub lead_rmse: [f64; 12],
    pub lead_cc: [f64; 12],
    pub mean_rmse: f64,
    pub mean_cc: f64,
    /// Present when both runs carry body-surface snapshots.
    pub bspm: Option<f64>,
}

/// Scores `test` against `reference` lead by lead. The runs must share the
/// electrode set and time grid.
pub fn compare_modes(
    reference: &CoupledRun,
    test: &CoupledRun,
) -> Result<ModeComparison, CouplingError> {
    let (a, b) = (&reference.traces, &test.traces);
    if a.len() != b.len() || a.is_empty() {
        return Err(CouplingError::GridMismatch(format!(
            "trace lengths {} vs {}",
            a.len(),
            b.len()
        )));
    }
    for (ta, tb) in a.times.iter().zip(&b.times) {
        if (ta - tb).abs() > 1e-9 {
            return Err(CouplingError::GridMismatch(format!(
                "sample times {ta} vs {tb}"
            )));
        }
    }

    let mut lead_rmse = [0.0; 12];
    let mut lead_cc = [0.0; 12];
    for j in 0..12 {
        let ra = a.lead_column(j);
        let rb = b.lead_column(j);
        lead_rmse[j] = rmse(&ra, &rb)?;
        lead_cc[j] = cc(&ra, &rb)?;
    }
    let mean_rmse = lead_rmse.iter().sum::<f64>() / 12.0;
    let mean_cc = lead_cc.iter().sum::<f64>() / 12.0;

    // The surface metric needs both runs sampled at the same exterior
    // vertices; runs on different torso meshes skip it rather than fail.
    let bspm = if !reference.bspm.is_empty()
        && !test.bspm.is_empty()
        && reference.bspm_vertices == test.bspm_vertices
    {
        if reference.bspm.len() != test.bspm.len() {
            return Err(CouplingError::GridMismatch(format!(
                "body-surface snapshot counts {} vs {}",
                reference.bspm.len(),
                test.bspm.len()
            )));
        }
        Some(bspm_l2(&reference.bspm, &test.bspm, &reference.bspm_weights)?)
    } else {
        None
    };

    Ok(ModeComparison { lead_rmse, lead_cc, mean_rmse, mean_cc, bspm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn limb_lead_formulas_match_hand_values() {
        let leads = limb_leads(0.0, 1.0, 2.0);
        assert_eq!(leads, [1.0, 2.0, 1.0, -1.5, 0.0, 1.5]);
        assert_eq!(limb_leads(3.0, 3.0, 3.0), [0.0; 6]);
    }

    #[test]
    fn precordial_leads_reference_the_central_terminal() {
        let chest = [2.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let prec = precordial_leads(0.0, 0.0, 3.0, &chest);
        assert_eq!(wilson_central_terminal(0.0, 0.0, 3.0), 1.0);
        assert_eq!(prec[0], 1.0);
        assert_eq!(precordial_leads(4.0, 4.0, 4.0, &[4.0; 6]), [0.0; 6]);
    }

    #[test]
    fn metric_hand_oracles() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[1.0, 2.0], &[0.0, 0.0]).unwrap(), 1.0);
        let r = rmse(&[1.0, 2.0], &[1.0, 0.0]).unwrap();
        assert!((r - (2.0f64 / 2.5).sqrt()).abs() <= 1e-15, "got {r}");

        let c = cc(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((c - 0.5).abs() <= 1e-15, "got {c}");
        let doubled = cc(&[1.0, 2.0, 3.0], &[7.0, 9.0, 11.0]).unwrap();
        assert!((doubled - 1.0).abs() <= 1e-12);
        let flipped = cc(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap();
        assert!((flipped + 1.0).abs() <= 1e-12);

        assert!(matches!(
            rmse(&[0.0, 0.0], &[1.0, 1.0]),
            Err(CouplingError::DegenerateMetric(_))
        ));
        assert!(matches!(
            cc(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(CouplingError::DegenerateMetric(_))
        ));
        assert!(matches!(
            rmse(&[1.0], &[1.0, 2.0]),
            Err(CouplingError::GridMismatch(_))
        ));
    }

    #[test]
    fn bspm_metric_oracles() {
        let reference = vec![vec![1.0, -2.0, 0.5], vec![0.0, 1.0, 2.0]];
        let weights = vec![0.5, 1.0, 2.0];
        assert_eq!(bspm_l2(&reference, &reference, &weights).unwrap(), 0.0);

        let scaled: Vec<Vec<f64>> = reference
            .iter()
            .map(|s| s.iter().map(|v| 1.1 * v).collect())
            .collect();
        let d = bspm_l2(&reference, &scaled, &weights).unwrap();
        assert!((d - 0.1).abs() <= 1e-12, "got {d}");

        // Direct summation oracle for a 3-node, 2-snapshot family.
        let test = vec![vec![1.0, -1.0, 0.0], vec![0.5, 1.0, 1.5]];
        let snap = |r: &[f64], t: &[f64]| -> f64 {
            let num: f64 = (0..3).map(|k| weights[k] * (r[k] - t[k]).powi(2)).sum();
            let den: f64 = (0..3).map(|k| weights[k] * r[k] * r[k]).sum();
            (num / den).sqrt()
        };
        let want = 0.5 * (snap(&reference[0], &test[0]) + snap(&reference[1], &test[1]));
        let got = bspm_l2(&reference, &test, &weights).unwrap();
        assert!((got - want).abs() <= 1e-15);

        // Zero-norm snapshots are skipped, not averaged in.
        let mixed_ref = vec![vec![0.0, 0.0, 0.0], reference[1].clone()];
        let mixed_test = vec![vec![1.0, 1.0, 1.0], test[1].clone()];
        let got = bspm_l2(&mixed_ref, &mixed_test, &weights).unwrap();
        assert!((got - snap(&mixed_ref[1], &mixed_test[1])).abs() <= 1e-15);

        let zeros = vec![vec![0.0; 3]; 2];
        assert!(matches!(
            bspm_l2(&zeros, &reference, &weights),
            Err(CouplingError::DegenerateMetric(_))
        ));
    }

    #[test]
    fn trace_rows_satisfy_the_lead_identities() {
        let mut traces = TraceSet::new();
        traces.push(0.0, [0.3, -1.2, 2.7, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        traces.push(1.0, [1.0, 2.0, 3.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0]);
        for row in &traces.leads {
            assert!((row[1] - (row[0] + row[2])).abs() <= 1e-12);
            assert!((row[3] + row[4] + row[5]).abs() <= 1e-12);
        }
        assert_eq!(traces.len(), 2);
        assert_eq!(traces.lead_column(0), vec![-1.5, 1.0]);
        assert_eq!(traces.electrode_column(2), vec![2.7, 3.0]);
    }

    #[test]
    fn electrodes_snap_to_the_nearest_exterior_vertex() {
        // Unit square, all four edges exterior-labeled.
        let mesh = cardiowave_mesh::SimplicialMesh::new(
            2,
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0],
                [0.0, 1.0, 0.0],
            ],
            vec![0, 1, 2, 0, 2, 3],
            vec![2, 2],
            vec![0, 1, 1, 2, 2, 3, 3, 0],
            vec![LABEL_SIGMA_EXT; 4],
        )
        .unwrap();

        let mut set = ElectrodeSet::desk_default();
        set.positions[0] = [0.5, -1.0, 0.0]; // equidistant from vertices 0 and 1
        set.positions[1] = [1.2, 0.9, 0.0]; // nearest vertex 2
        set.positions[2] = [0.0, 1.0, 0.0]; // exactly vertex 3
        let resolved = set.resolve(&mesh).unwrap();
        assert_eq!(resolved.vertices[0], 0, "tie must pick the lowest index");
        assert_eq!(resolved.vertices[1], 2);
        assert_eq!(resolved.vertices[2], 3);

        let field = vec![7.0; 4];
        assert_eq!(resolved.sample(&field), [7.0; 9]);
        let ramp = vec![10.0, 11.0, 12.0, 13.0];
        let s = resolved.sample(&ramp);
        assert_eq!(s[0], 10.0);
        assert_eq!(s[1], 12.0);
        assert_eq!(s[2], 13.0);
    }

    #[test]
    fn surface_weights_sum_to_the_patch_measure() {
        let mesh = cardiowave_mesh::factory::structured_rectangle([0.0, 0.0], [3.0, 2.0], 3, 2, 1);
        let patch = mesh.extract_boundary(cardiowave_mesh::LABEL_GAMMA).unwrap();
        let w = surface_lumped_weights(&patch);
        let total: f64 = w.iter().sum();
        assert!((total - 10.0).abs() <= 1e-12, "perimeter is 10, got {total}");
        // A corner vertex carries half of each adjacent unit edge.
        assert!((w[0] - 1.0).abs() <= 1e-12);
    }

    proptest! {
        #[test]
        fn lead_identities_hold_for_any_potentials(e in proptest::array::uniform9(-50.0f64..50.0)) {
            let leads = limb_leads(e[0], e[1], e[2]);
            prop_assert!((leads[1] - (leads[0] + leads[2])).abs() <= 1e-12);
            prop_assert!((leads[3] + leads[4] + leads[5]).abs() <= 1e-12);

            // A common-mode offset cancels in every lead.
            let shifted = limb_leads(e[0] + 13.25, e[1] + 13.25, e[2] + 13.25);
            for (a, b) in leads.iter().zip(&shifted) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
            let chest = [e[3], e[4], e[5], e[6], e[7], e[8]];
            let chest_shifted = chest.map(|v| v + 13.25);
            let p = precordial_leads(e[0], e[1], e[2], &chest);
            let q = precordial_leads(e[0] + 13.25, e[1] + 13.25, e[2] + 13.25, &chest_shifted);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn metrics_match_their_single_loop_oracles(
            pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..100)
        ) {
            let reference: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let test: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let n = reference.len() as f64;

            let den: f64 = reference.iter().map(|r| r * r).sum();
            prop_assume!(den > 1e-12);
            let num: f64 = reference.iter().zip(&test).map(|(r, t)| (r - t) * (r - t)).sum();
            let want = (num / n).sqrt() / (den / n).sqrt();
            let got = rmse(&reference, &test).unwrap();
            prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0));

            let mr = reference.iter().sum::<f64>() / n;
            let mt = test.iter().sum::<f64>() / n;
            let sr = (reference.iter().map(|r| (r - mr) * (r - mr)).sum::<f64>() / n).sqrt();
            let st = (test.iter().map(|t| (t - mt) * (t - mt)).sum::<f64>() / n).sqrt();
            prop_assume!(sr > 1e-9 && st > 1e-9);
            let cov = reference
                .iter()
                .zip(&test)
                .map(|(r, t)| (r - mr) * (t - mt))
                .sum::<f64>()
                / n;
            let want = cov / (sr * st);
            let got = cc(&reference, &test).unwrap();
            prop_assert!((got - want).abs() <= 1e-12);
            prop_assert!(got.abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn rmse_is_homogeneous_in_the_deviation(
            base in proptest::collection::vec(-10.0f64..10.0, 2..40),
            alpha in -4.0f64..4.0,
        ) {
            let den: f64 = base.iter().map(|r| r * r).sum();
            prop_assume!(den > 1e-9);
            let dir: Vec<f64> = (0..base.len()).map(|k| ((k * 7 + 3) % 11) as f64 - 5.0).collect();
            let unit: Vec<f64> = base.iter().zip(&dir).map(|(b, d)| b + d).collect();
            let scaled: Vec<f64> = base.iter().zip(&dir).map(|(b, d)| b + alpha * d).collect();
            let r1 = rmse(&base, &unit).unwrap();
            let r2 = rmse(&base, &scaled).unwrap();
            prop_assert!((r2 - alpha.abs() * r1).abs() <= 1e-12 * (1.0 + r1));
        }

        #[test]
        fn cc_ignores_positive_affine_maps(
            pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
            gain in 0.1f64..5.0,
            offset in -20.0f64..20.0,
        ) {
            let reference: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let test: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let mapped: Vec<f64> = test.iter().map(|t| gain * t + offset).collect();
            let baseline = match cc(&reference, &test) {
                Ok(v) => v,
                Err(_) => return Ok(()),
            };
            let after = cc(&reference, &mapped).unwrap();
            prop_assert!((baseline - after).abs() <= 1e-9);
        }
    }
}
