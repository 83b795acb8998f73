//! Driving noise: Brownian increments plus finite-activity bounded jumps and
//! their compensator, on a uniform grid of step `1/n`.
//!
//! Jumps are binned to the step in which they occur and applied at the step end.

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{standard_normal, uniform, Purpose, TrialKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpAtom {
    pub xi: Vec<f64>,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpComponent {
    pub rate: f64,
    pub atoms: Vec<JumpAtom>,
}

impl JumpComponent {
    /// `E[xi]` under the atom law.
    pub fn mean_jump(&self) -> Vec<f64> {
        let d = self.atoms.first().map_or(0, |a| a.xi.len());
        let mut m = vec![0.0; d];
        for a in &self.atoms {
            for (mi, x) in m.iter_mut().zip(&a.xi) {
                *mi += a.prob * x;
            }
        }
        m
    }
}

/// `L_t = b t + sigma B_t + int xi N~(t, dxi)` with a discrete jump law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyConfig {
    pub d: usize,
    pub m: usize,
    pub b: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    #[serde(default)]
    pub jumps: Vec<JumpComponent>,
    pub cap: f64,
}

impl LevyConfig {
    /// One Brownian motion plus a compensated standard Poisson process.
    pub fn brownian_poisson() -> Self {
        LevyConfig {
            d: 1,
            m: 1,
            b: vec![0.0],
            sigma: vec![vec![1.0]],
            jumps: vec![JumpComponent { rate: 1.0, atoms: vec![JumpAtom { xi: vec![1.0], prob: 1.0 }] }],
            cap: 1.0,
        }
    }

    /// `m`-dimensional Brownian motion in `R^m`, no jumps.
    pub fn brownian(m: usize) -> Self {
        let sigma = (0..m).map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        LevyConfig { d: m, m, b: vec![0.0; m], sigma, jumps: Vec::new(), cap: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let arg = |msg: String| Err(Error::Argument(msg));
        if self.d == 0 || self.m == 0 {
            return arg("d and m must be positive".into());
        }
        if self.b.len() != self.d {
            return arg(format!("b has length {}, expected d = {}", self.b.len(), self.d));
        }
        if self.sigma.len() != self.d || self.sigma.iter().any(|row| row.len() != self.m) {
            return arg(format!("sigma must be a {} x {} matrix", self.d, self.m));
        }
        if self.b.iter().chain(self.sigma.iter().flatten()).any(|v| !v.is_finite()) {
            return arg("b and sigma must be finite".into());
        }
        if !(self.cap > 0.0 && self.cap.is_finite()) {
            return arg(format!("jump cap {} must be positive and finite", self.cap));
        }
        for (i, c) in self.jumps.iter().enumerate() {
            if !(c.rate > 0.0 && c.rate.is_finite()) {
                return arg(format!("jumps[{i}].rate = {} must be positive and finite", c.rate));
            }
            if c.atoms.is_empty() {
                return arg(format!("jumps[{i}] has no atoms"));
            }
            let mut total = 0.0;
            for (j, a) in c.atoms.iter().enumerate() {
                if a.xi.len() != self.d {
                    return arg(format!("jumps[{i}].atoms[{j}].xi has length {}, expected {}", a.xi.len(), self.d));
                }
                let size = a.xi.iter().map(|x| x * x).sum::<f64>().sqrt();
                if !(size > 0.0 && size <= self.cap) {
                    return arg(format!("jumps[{i}].atoms[{j}] has |xi| = {size}, outside (0, {}]", self.cap));
                }
                if !(a.prob > 0.0 && a.prob <= 1.0) {
                    return arg(format!("jumps[{i}].atoms[{j}].prob = {} must lie in (0, 1]", a.prob));
                }
                total += a.prob;
            }
            if (total - 1.0).abs() > 1e-9 {
                return arg(format!("jumps[{i}] atom probabilities sum to {total}, not 1"));
            }
        }
        Ok(())
    }

    pub fn total_rate(&self) -> f64 {
        self.jumps.iter().map(|c| c.rate).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct JumpEvent {
    pub component: u32,
    pub atom: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriverIncrements {
    config: LevyConfig,
    n_per_unit: u32,
    steps: usize,
    db: Vec<f64>,
    offsets: Vec<usize>,
    events: Vec<JumpEvent>,
    compensator_per_step: Vec<f64>,
    seed: u64,
}

/// Number of grid steps for horizon `t_end` at density `n`, if aligned.
pub fn grid_steps(n_per_unit: u32, t_end: f64) -> Result<usize> {
    let exact = t_end * n_per_unit as f64;
    let k = exact.round();
    if !(t_end > 0.0) || n_per_unit == 0 || (exact - k).abs() > 1e-9 * k.max(1.0) {
        return Err(Error::Argument(format!(
            "horizon T = {t_end} is not a positive multiple of the step 1/{n_per_unit}"
        )));
    }
    Ok(k as usize)
}

fn compensator(config: &LevyConfig, dt: f64) -> Vec<f64> {
    let mut c = vec![0.0; config.d];
    for comp in &config.jumps {
        for (ci, mi) in c.iter_mut().zip(comp.mean_jump()) {
            *ci += comp.rate * mi * dt;
        }
    }
    c
}

/// Draws increments on `[0, t_end]` from the trial's Brownian and jump streams.
pub fn generate(config: &LevyConfig, n_per_unit: u32, t_end: f64, key: TrialKey) -> Result<DriverIncrements> {
    config.validate()?;
    let steps = grid_steps(n_per_unit, t_end)?;
    let dt = 1.0 / n_per_unit as f64;
    let sd = dt.sqrt();

    let mut bm = key.stream(Purpose::Brownian);
    let db = (0..steps * config.m).map(|_| sd * standard_normal(&mut bm)).collect();

    let mut jr = key.stream(Purpose::Jumps);
    let laws: Vec<Poisson<f64>> = config
        .jumps
        .iter()
        .map(|c| Poisson::new(c.rate * dt).map_err(|e| Error::Argument(format!("jump rate: {e}"))))
        .collect::<Result<_>>()?;
    let mut offsets = Vec::with_capacity(steps + 1);
    let mut events = Vec::new();
    offsets.push(0);
    for _ in 0..steps {
        for (ci, (comp, law)) in config.jumps.iter().zip(&laws).enumerate() {
            let count = law.sample(&mut jr) as usize;
            for _ in 0..count {
                let atom = if comp.atoms.len() == 1 {
                    0
                } else {
                    let u = uniform(&mut jr);
                    let mut acc = 0.0;
                    comp.atoms
                        .iter()
                        .position(|a| {
                            acc += a.prob;
                            u < acc
                        })
                        .unwrap_or(comp.atoms.len() - 1)
                };
                events.push(JumpEvent { component: ci as u32, atom: atom as u32 });
            }
        }
        offsets.push(events.len());
    }
    Ok(DriverIncrements {
        compensator_per_step: compensator(config, dt),
        config: config.clone(),
        n_per_unit,
        steps,
        db,
        offsets,
        events,
        seed: key.seed(),
    })
}

/// Coarsens `fine` by summing Brownian increments and concatenating jump
/// events over consecutive blocks of `factor` steps.
pub fn refine_aggregate(fine: &DriverIncrements, factor: u32) -> Result<DriverIncrements> {
    if factor == 0 || !fine.n_per_unit.is_multiple_of(factor) || !fine.steps.is_multiple_of(factor as usize) {
        return Err(Error::Argument(format!(
            "factor {factor} does not divide the grid (n = {}, steps = {})",
            fine.n_per_unit, fine.steps
        )));
    }
    if factor == 1 {
        return Ok(fine.clone());
    }
    let f = factor as usize;
    let m = fine.config.m;
    let steps = fine.steps / f;
    let mut db = vec![0.0; steps * m];
    for k in 0..fine.steps {
        for j in 0..m {
            db[(k / f) * m + j] += fine.db[k * m + j];
        }
    }
    let offsets = (0..=steps).map(|k| fine.offsets[k * f]).collect();
    let n_per_unit = fine.n_per_unit / factor;
    Ok(DriverIncrements {
        compensator_per_step: compensator(&fine.config, 1.0 / n_per_unit as f64),
        config: fine.config.clone(),
        n_per_unit,
        steps,
        db,
        offsets,
        events: fine.events.clone(),
        seed: fine.seed,
    })
}

impl DriverIncrements {
    pub fn config(&self) -> &LevyConfig {
        &self.config
    }

    pub fn n_per_unit(&self) -> u32 {
        self.n_per_unit
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Identifier of the trial stream the noise was drawn from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.n_per_unit as f64
    }

    /// Brownian increment of step `k` (length `m`).
    pub fn db(&self, k: usize) -> &[f64] {
        let m = self.config.m;
        &self.db[k * m..(k + 1) * m]
    }

    pub fn jumps(&self, k: usize) -> &[JumpEvent] {
        &self.events[self.offsets[k]..self.offsets[k + 1]]
    }

    pub fn jump_size(&self, e: JumpEvent) -> &[f64] {
        &self.config.jumps[e.component as usize].atoms[e.atom as usize].xi
    }

    pub fn total_events(&self) -> usize {
        self.events.len()
    }

    pub fn compensator_per_step(&self) -> &[f64] {
        &self.compensator_per_step
    }

    /// Compensated jump contribution of step `k`: realized jumps minus compensator.
    pub fn compensated_jumps(&self, k: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self.compensator_per_step.iter().map(|c| -c).collect();
        for &e in self.jumps(k) {
            for (vi, x) in v.iter_mut().zip(self.jump_size(e)) {
                *vi += x;
            }
        }
        v
    }

    /// Increment of `L` over step `k`.
    pub fn levy_increment(&self, k: usize) -> Vec<f64> {
        let dt = self.dt();
        let db = self.db(k);
        let mut v = self.compensated_jumps(k);
        for (i, vi) in v.iter_mut().enumerate() {
            *vi += self.config.b[i] * dt + self.config.sigma[i].iter().zip(db).map(|(s, w)| s * w).sum::<f64>();
        }
        v
    }
}
