//! Gradient descent directly on polygon coordinates.
//!
//! Used to exercise the loss landscape without a network: start from a
//! perturbed copy of a target polygon, follow the analytic gradient of the
//! regression and/or accuracy loss, and watch the IoU with the target.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{polygon_iou, Point, Polygon};
use crate::losses::{acc_loss, reg_pair, LossConfig};
use crate::par::Exec;
use crate::synth;

/// Grid resolution for the IoU recorded along a trajectory.
pub const FIT_IOU_RESOLUTION: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossSelection {
    Reg,
    Acc,
    Both,
}

impl LossSelection {
    pub fn uses_reg(self) -> bool {
        matches!(self, LossSelection::Reg | LossSelection::Both)
    }

    pub fn uses_acc(self) -> bool {
        matches!(self, LossSelection::Acc | LossSelection::Both)
    }
}

impl std::str::FromStr for LossSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reg" => Ok(LossSelection::Reg),
            "acc" => Ok(LossSelection::Acc),
            "both" | "reg+acc" => Ok(LossSelection::Both),
            other => Err(Error::InvalidArgument(format!(
                "unknown loss selection {other:?} (expected reg, acc or both)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub steps: usize,
    pub step_size: f64,
    /// Iteration index of the first step, which picks the accuracy weight.
    pub start_iteration: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            steps: 500,
            step_size: 0.05,
            start_iteration: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub loss: f64,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Loss and IoU evaluated before each update.
    pub trajectory: Vec<TrajectoryPoint>,
    pub final_polygon: Polygon,
    pub final_iou: f64,
    pub steps_used: usize,
    pub converged: bool,
}

impl FitResult {
    /// `step,loss,iou` rows with a header line.
    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from("step,loss,iou\n");
        for p in &self.trajectory {
            let _ = writeln!(out, "{},{:?},{:?}", p.step, p.loss, p.iou);
        }
        out
    }
}

/// Weighted loss and gradient of the selected terms at `poly`.
pub fn fit_objective(
    poly: &Polygon,
    target: &Polygon,
    selection: LossSelection,
    config: &LossConfig,
    iteration: u64,
) -> Result<(f64, Vec<f64>)> {
    let mut value = 0.0;
    let mut grad = vec![0.0; 2 * poly.len()];
    if selection.uses_reg() {
        let r = reg_pair(&poly.to_flat(), &target.to_flat())?;
        value += config.lambda_reg * r.value;
        for (g, d) in grad.iter_mut().zip(&r.grad) {
            *g += config.lambda_reg * d;
        }
    }
    if selection.uses_acc() {
        let w = config.lambda_acc_at(iteration);
        let a = acc_loss(poly, target, config)?;
        value += w * a.value;
        if let Some(d) = a.gradient("pred") {
            for (g, d) in grad.iter_mut().zip(d) {
                *g += w * d;
            }
        }
    }
    Ok((value, grad))
}

// Largest minus smallest loss in a window.
fn loss_spread(window: &[TrajectoryPoint]) -> f64 {
    let (lo, hi) = window.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| {
        (lo.min(t.loss), hi.max(t.loss))
    });
    hi - lo
}

/// Plain gradient descent from `init` toward `target`.
///
/// Stops early once every loss over the last ten steps lies within `1e-8`
/// of the others.
pub fn fit_polygon(
    init: &Polygon,
    target: &Polygon,
    selection: LossSelection,
    config: &LossConfig,
    options: &FitOptions,
) -> Result<FitResult> {
    if init.len() != target.len() {
        return Err(Error::InvalidArgument(format!(
            "init has {} vertices, target {}",
            init.len(),
            target.len()
        )));
    }
    if !(options.step_size > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step size must be positive, got {}",
            options.step_size
        )));
    }
    let mut current = init.clone();
    let mut trajectory = Vec::with_capacity(options.steps);
    let mut converged = false;
    for step in 0..options.steps {
        let iteration = options.start_iteration + step as u64;
        let (loss, grad) = fit_objective(&current, target, selection, config, iteration)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient {
                step,
                message: format!("loss {loss}, polygon {:?}", current.to_flat()),
            });
        }
        trajectory.push(TrajectoryPoint {
            step,
            loss,
            iou: polygon_iou(&current, target, FIT_IOU_RESOLUTION),
        });
        if step >= 10 && loss_spread(&trajectory[step - 10..]) < 1e-8 {
            converged = true;
            break;
        }
        let next: Vec<f64> = current
            .to_flat()
            .iter()
            .zip(&grad)
            .map(|(v, g)| v - options.step_size * g)
            .collect();
        current = Polygon::from_flat(&next)?;
    }
    Ok(FitResult {
        final_iou: polygon_iou(&current, target, FIT_IOU_RESOLUTION),
        steps_used: trajectory.len(),
        trajectory,
        final_polygon: current,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationConfig {
    pub trials: usize,
    pub seed: u64,
    /// Perturbation std-dev as a fraction of the target's diameter.
    pub sigma_fraction: f64,
    pub vertices: usize,
    /// Target size in normalized offset units (grid cells).
    pub radius: f64,
    pub fit: FitOptions,
    pub arms: [LossSelection; 2],
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            seed: 0,
            sigma_fraction: 0.2,
            vertices: 4,
            radius: 1.5,
            fit: FitOptions {
                steps: 500,
                step_size: 0.005,
                start_iteration: LossConfig::default().lambda_acc_switch_iteration,
            },
            arms: [LossSelection::Reg, LossSelection::Both],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmSummary {
    pub selection: LossSelection,
    pub mean_iou: f64,
    pub final_ious: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub trials: usize,
    pub seed: u64,
    pub arms: [ArmSummary; 2],
    /// Mean over trials of `iou(arm 1) - iou(arm 0)`.
    pub mean_difference: f64,
}

/// Target and perturbed start of one trial, from the trial's own stream.
pub fn ablation_trial(config: &AblationConfig, trial: usize) -> Result<(Polygon, Polygon)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial as u64);
    let target = synth::convex_polygon(&mut rng, config.vertices, Point::new(0.0, 0.0), config.radius);
    let sigma = config.sigma_fraction * synth::diameter(&target);
    let noise = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidArgument(format!("perturbation sigma {sigma}: {e}")))?;
    let init: Vec<f64> = target
        .to_flat()
        .iter()
        .map(|v| v + noise.sample(&mut rng))
        .collect();
    Ok((target, Polygon::from_flat(&init)?))
}

/// Paired comparison of two loss selections on identical trials.
pub fn ablation_study(config: &AblationConfig, loss: &LossConfig, exec: Exec) -> Result<AblationReport> {
    if config.trials < 30 {
        return Err(Error::InvalidArgument(format!(
            "ablation needs at least 30 trials, got {}",
            config.trials
        )));
    }
    loss.validate()?;
    let outcomes = exec.map_indexed(config.trials, |trial| -> Result<[f64; 2]> {
        let (target, init) = ablation_trial(config, trial)?;
        let mut ious = [0.0; 2];
        for (slot, arm) in ious.iter_mut().zip(config.arms) {
            *slot = fit_polygon(&init, &target, arm, loss, &config.fit)?.final_iou;
        }
        Ok(ious)
    });
    let outcomes: Vec<[f64; 2]> = outcomes.into_iter().collect::<Result<_>>()?;
    let trials = outcomes.len() as f64;
    let arm = |k: usize| {
        let final_ious: Vec<f64> = outcomes.iter().map(|o| o[k]).collect();
        ArmSummary {
            selection: config.arms[k],
            mean_iou: final_ious.iter().sum::<f64>() / trials,
            final_ious,
        }
    };
    let mean_difference = outcomes.iter().map(|o| o[1] - o[0]).sum::<f64>() / trials;
    Ok(AblationReport {
        trials: config.trials,
        seed: config.seed,
        arms: [arm(0), arm(1)],
        mean_difference,
    })
}
