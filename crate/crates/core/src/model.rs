//! Abstraction over sequential process models that the solver and the
//! brute-force reference optimizer operate on.

use crate::kinetics::StageParams;
use crate::math::central_difference;
use crate::path::Path;
use serde::{Deserialize, Serialize};

/// Box constraints on stage parameters: residence time bounded below (and
/// optionally above), temperature bounded on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub time_lo: f64,
    pub time_hi: f64,
    pub temp_lo: f64,
    pub temp_hi: f64,
}

impl ParamBounds {
    pub fn new(time_lo: f64, temp_lo: f64, temp_hi: f64) -> Self {
        ParamBounds {
            time_lo,
            time_hi: f64::INFINITY,
            temp_lo,
            temp_hi,
        }
    }

    pub fn with_time_hi(mut self, time_hi: f64) -> Self {
        self.time_hi = time_hi;
        self
    }

    pub fn project_params(&self, p: StageParams) -> StageParams {
        StageParams {
            time_min: p.time_min.clamp(self.time_lo, self.time_hi),
            temp_k: p.temp_k.clamp(self.temp_lo, self.temp_hi),
        }
    }

    pub fn project_all(&self, params: &mut [StageParams]) {
        for p in params.iter_mut() {
            *p = self.project_params(*p);
        }
    }

    pub fn contains(&self, p: StageParams) -> bool {
        (self.time_lo..=self.time_hi).contains(&p.time_min)
            && (self.temp_lo..=self.temp_hi).contains(&p.temp_k)
    }

    /// Flat per-coordinate lower bounds in the `[t_0, T_0, t_1, T_1, ...]`
    /// layout used by the minimizer.
    pub fn flat_lower(&self, stage_count: usize) -> Vec<f64> {
        (0..stage_count)
            .flat_map(|_| [self.time_lo, self.temp_lo])
            .collect()
    }

    pub fn flat_upper(&self, stage_count: usize) -> Vec<f64> {
        (0..stage_count)
            .flat_map(|_| [self.time_hi, self.temp_hi])
            .collect()
    }
}

/// Flattens stage parameters into the minimizer's coordinate layout.
pub fn flatten_params(params: &[StageParams]) -> Vec<f64> {
    params
        .iter()
        .flat_map(|p| [p.time_min, p.temp_k])
        .collect()
}

/// Inverse of [`flatten_params`].
pub fn unflatten_params(flat: &[f64]) -> Vec<StageParams> {
    debug_assert_eq!(flat.len() % 2, 0);
    flat.chunks_exact(2)
        .map(|c| StageParams::new(c[0], c[1]))
        .collect()
}

/// A sequential process whose total cost depends on a discrete path (one
/// technology per stage) and shared continuous stage parameters.
///
/// `cost` must be finite everywhere on the bounds box so that relaxed
/// objectives (expectations over many paths at shared parameters) stay
/// well-defined; models with partial transitions should totalize them
/// (see `kinetics::step_clamped`).
pub trait PathCostModel: Sync {
    fn stage_count(&self) -> usize;

    fn bounds(&self) -> ParamBounds;

    /// Total cost of running `path` at the given per-stage parameters.
    fn cost(&self, path: &Path, params: &[StageParams]) -> f64;

    /// Cost and gradient with respect to the flat parameter layout
    /// `[t_0, T_0, t_1, T_1, ...]`. The default implementation uses central
    /// finite differences with step `1e-6 * (1 + |v|)`.
    fn cost_grad(&self, path: &Path, params: &[StageParams]) -> (f64, Vec<f64>) {
        let flat = flatten_params(params);
        let value = self.cost(path, params);
        let grad = central_difference(|v| self.cost(path, &unflatten_params(v)), &flat);
        (value, grad)
    }

    /// Model-specific feasibility restoration applied to locally optimal
    /// points before they are reported (e.g. landing exactly on a target
    /// constraint that a soft penalty only approximates). `None` means
    /// either no restoration applies or none is possible from this point.
    fn restore_feasibility(
        &self,
        _path: &Path,
        _params: &[StageParams],
    ) -> Option<Vec<StageParams>> {
        None
    }

    /// Model-informed starting points for a path's continuous optimization
    /// (e.g. profiles that land exactly on a constraint boundary). Search
    /// harnesses add these to their own grid and multistart seeds.
    fn suggest_seeds(&self, _path: &Path) -> Vec<Vec<StageParams>> {
        Vec::new()
    }

    /// Structure-exploring moves around an incumbent: coordinated parameter
    /// changes that a local descent cannot discover (for the drying model,
    /// pinning one stage to a short high-temperature finish while the
    /// remaining stages stretch to keep the target reachable). Harnesses
    /// evaluate these as additional candidates.
    fn improve_candidates(
        &self,
        _path: &Path,
        _incumbent: &[StageParams],
    ) -> Vec<Vec<StageParams>> {
        Vec::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_clamps_into_box() {
        let b = ParamBounds::new(2.0, 303.15, 343.15);
        let p = b.project_params(StageParams::new(-5.0, 400.0));
        assert_eq!(p, StageParams::new(2.0, 343.15));
        assert!(b.contains(p));
        let p = b.project_params(StageParams::new(1e9, 310.0));
        assert_eq!(p, StageParams::new(1e9, 310.0)); // time unbounded above
    }

    #[test]
    fn flatten_round_trip() {
        let params = vec![StageParams::new(5.0, 310.0), StageParams::new(9.0, 330.0)];
        assert_eq!(unflatten_params(&flatten_params(&params)), params);
    }
}
