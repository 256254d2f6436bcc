use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use polytext::config::Config;
use polytext::detect::{self, Detection, LevelPrediction};
use polytext::fit::{self, AblationConfig, FitOptions, LossSelection};
use polytext::geometry::{rasterize_hard, rasterize_soft, Frame};
use polytext::gradcheck;
use polytext::io::{self, AnnotationFormat};
use polytext::labelgen::{self, Annotation, CellLabel, TargetMaps};
use polytext::losses::{self, LossValue, MASK_PADDING};
use polytext::{Error, Exec, Polygon, Result};
use serde::Deserialize;
use serde_json::json;

const DEFAULT_FORMAT: &str = "polygon-json";

fn emit(out: &mut impl Write, record: serde_json::Value) -> Result<()> {
    writeln!(out, "{record}").map_err(|e| Error::InvalidInput(format!("stdout: {e}")))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io { path: path.into(), source: e })
}

fn polygons(path: &Path, format: AnnotationFormat) -> Result<Vec<Polygon>> {
    Ok(io::read_annotations(path, format)?
        .into_iter()
        .map(|a| a.polygon)
        .collect())
}

fn pick(polys: &[Polygon], index: usize, what: &str) -> Result<Polygon> {
    polys.get(index).cloned().ok_or_else(|| {
        Error::InvalidArgument(format!("{what} has {} polygons, no index {index}", polys.len()))
    })
}

fn paired(pred: &Path, gt: &Path, format: AnnotationFormat) -> Result<(Vec<Polygon>, Vec<Polygon>)> {
    let (p, g) = (polygons(pred, format)?, polygons(gt, format)?);
    if p.len() != g.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions vs {} ground truths",
            p.len(),
            g.len()
        )));
    }
    Ok((p, g))
}

fn flat(poly: &Polygon) -> Vec<[f64; 2]> {
    poly.vertices().iter().map(|p| [p.x, p.y]).collect()
}

#[derive(Debug, Args)]
pub struct LabelgenArgs {
    /// Annotation file.
    #[arg(long)]
    input: PathBuf,
    /// icdar2015-quad, curved-14pt or polygon-json.
    #[arg(long, default_value = DEFAULT_FORMAT)]
    format: AnnotationFormat,
    /// Regressed vertices per instance [config: n, default 4].
    #[arg(long)]
    n: Option<usize>,
    /// Where to write the target maps.
    #[arg(long)]
    out: PathBuf,
}

pub fn labelgen(a: LabelgenArgs, mut cfg: Config, out: &mut impl Write) -> Result<()> {
    cfg.n = a.n.unwrap_or(cfg.n);
    cfg.validate()?;
    let anns = io::read_annotations(&a.input, a.format)?;
    let maps = labelgen::encode(&anns, &cfg.levels(), cfg.n)?;
    write_text(&a.out, &maps.to_text())?;
    for lt in &maps.levels {
        let ignored = lt.labels().iter().filter(|l| **l == CellLabel::Ignore).count();
        emit(out, json!({
            "record": "level",
            "level": lt.spec.index,
            "map_size": lt.spec.map_size,
            "positives": lt.positive_count(),
            "ignored": ignored,
        }))?;
    }
    emit(out, json!({
        "record": "labelgen",
        "annotations": anns.len(),
        "n": cfg.n,
        "positives": maps.positive_count(),
    }))
}

/// Classification inputs: parallel score and target arrays, `null`
/// targets marking ignored cells.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreFile {
    scores: Vec<f64>,
    targets: Vec<Option<bool>>,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    /// Predicted polygons.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth polygons, paired with `--pred` by position.
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value = DEFAULT_FORMAT)]
    format: AnnotationFormat,
    /// JSON object with `scores` and `targets` for the focal loss.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Training iteration, selects the accuracy-loss weight.
    #[arg(long, default_value_t = 0)]
    iteration: u64,
}

pub fn loss(a: LossArgs, cfg: Config, out: &mut impl Write) -> Result<()> {
    let (pred, gt) = paired(&a.pred, &a.gt, a.format)?;
    let c = &cfg.loss;
    let (mut reg_sum, mut acc_sum) = (0.0, 0.0);
    for (i, (p, g)) in pred.iter().zip(&gt).enumerate() {
        let reg = losses::reg_pair(&p.to_flat(), &g.to_flat())?;
        let acc = losses::acc_loss(p, g, c)?.value;
        reg_sum += reg.value;
        acc_sum += acc;
        emit(out, json!({
            "record": "pair",
            "index": i,
            "reg": reg.value,
            "rotation": reg.rotation,
            "acc": acc,
        }))?;
    }
    let acc_mean = if pred.is_empty() { 0.0 } else { acc_sum / pred.len() as f64 };
    let cls = match &a.scores {
        Some(path) => {
            let sf: ScoreFile = serde_json::from_str(&read_text(path)?)
                .map_err(|e| Error::Schema { record: 0, message: e.to_string() })?;
            losses::cls_loss(&sf.scores, &sf.targets, c.alpha, c.gamma)?.value
        }
        None => 0.0,
    };
    let total = losses::total_loss(
        &LossValue::new(cls),
        &LossValue::new(reg_sum),
        &LossValue::new(acc_mean),
        c,
        a.iteration,
    )?;
    emit(out, json!({
        "record": "loss",
        "pairs": pred.len(),
        "cls": cls,
        "reg": reg_sum,
        "acc": acc_mean,
        "lambda_acc": c.lambda_acc_at(a.iteration),
        "total": total.value,
    }))
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long, default_value = DEFAULT_FORMAT)]
    format: AnnotationFormat,
    /// reg or acc.
    #[arg(long, default_value = "reg")]
    loss: LossSelection,
    /// Difference step; absolute for reg, a fraction of the mask frame for
    /// acc [default 1e-5 / 1e-4].
    #[arg(long)]
    h: Option<f64>,
    /// Largest accepted relative error [default 1e-3 / 5e-2].
    #[arg(long)]
    tolerance: Option<f64>,
}

pub fn gradcheck(a: GradcheckArgs, cfg: Config, out: &mut impl Write) -> Result<()> {
    let (pred, gt) = paired(&a.pred, &a.gt, a.format)?;
    let (h, tol) = match a.loss {
        LossSelection::Reg => (a.h.unwrap_or(1e-5), a.tolerance.unwrap_or(1e-3)),
        LossSelection::Acc => (a.h.unwrap_or(1e-4), a.tolerance.unwrap_or(5e-2)),
        LossSelection::Both => {
            return Err(Error::InvalidArgument("gradcheck takes reg or acc, not both".into()))
        }
    };
    let mut failed = 0;
    for (i, (p, g)) in pred.iter().zip(&gt).enumerate() {
        let check = match a.loss {
            LossSelection::Reg => gradcheck::check_reg(p, g, h)?,
            _ => gradcheck::check_acc(p, g, &cfg.loss, h)?,
        };
        let pass = check.relative_error < tol;
        failed += usize::from(!pass);
        emit(out, json!({
            "record": "gradcheck",
            "index": i,
            "loss": check.loss,
            "value": check.value,
            "relative_error": check.relative_error,
            "pass": pass,
            "analytic": check.analytic,
            "numeric": check.numeric,
        }))?;
    }
    emit(out, json!({ "record": "summary", "pairs": pred.len(), "failed": failed, "tolerance": tol }))
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Starting polygon.
    #[arg(long)]
    init: PathBuf,
    /// Target polygon, with the same vertex count.
    #[arg(long)]
    target: PathBuf,
    #[arg(long, default_value = DEFAULT_FORMAT)]
    format: AnnotationFormat,
    /// Which polygon of each file to use.
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// reg, acc or both.
    #[arg(long, default_value = "both")]
    loss: LossSelection,
    #[arg(long, default_value_t = FitOptions::default().steps)]
    steps: usize,
    #[arg(long, default_value_t = FitOptions::default().step_size)]
    step_size: f64,
    /// Iteration of the first step, for the accuracy-loss schedule.
    #[arg(long, default_value_t = 0)]
    start_iteration: u64,
    /// CSV file for the per-step loss and IoU.
    #[arg(long)]
    trajectory: Option<PathBuf>,
}

pub fn fit(a: FitArgs, cfg: Config, out: &mut impl Write) -> Result<()> {
    let init = pick(&polygons(&a.init, a.format)?, a.index, "init")?;
    let target = pick(&polygons(&a.target, a.format)?, a.index, "target")?;
    let opts = FitOptions { steps: a.steps, step_size: a.step_size, start_iteration: a.start_iteration };
    let res = fit::fit_polygon(&init, &target, a.loss, &cfg.loss, &opts)?;
    if let Some(path) = &a.trajectory {
        write_text(path, &res.trajectory_csv())?;
    }
    emit(out, json!({
        "record": "fit",
        "loss": a.loss,
        "steps_used": res.steps_used,
        "converged": res.converged,
        "initial_iou": res.trajectory.first().map(|t| t.iou),
        "final_loss": res.trajectory.last().map(|t| t.loss),
        "final_iou": res.final_iou,
        "polygon": flat(&res.final_polygon),
    }))
}

#[derive(Debug, Args)]
pub struct AblationArgs {
    #[arg(long, default_value_t = AblationConfig::default().trials)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perturbation std-dev as a fraction of the target diameter.
    #[arg(long, default_value_t = AblationConfig::default().sigma_fraction)]
    sigma: f64,
    #[arg(long, default_value_t = AblationConfig::default().vertices)]
    vertices: usize,
    #[arg(long, default_value_t = AblationConfig::default().fit.steps)]
    steps: usize,
    #[arg(long, default_value_t = AblationConfig::default().fit.step_size)]
    step_size: f64,
    /// Iteration of the first step; the default is past the weight switch.
    #[arg(long, default_value_t = AblationConfig::default().fit.start_iteration)]
    start_iteration: u64,
    /// The two selections to compare, e.g. `reg,both`.
    #[arg(long, value_delimiter = ',', default_values = ["reg", "both"])]
    arms: Vec<LossSelection>,
    /// Run trials on one thread.
    #[arg(long)]
    sequential: bool,
}

pub fn ablation(a: AblationArgs, cfg: Config, out: &mut impl Write) -> Result<()> {
    let arms: [LossSelection; 2] = a
        .arms
        .try_into()
        .map_err(|_| Error::InvalidArgument("exactly two arms are needed".into()))?;
    let config = AblationConfig {
        trials: a.trials,
        seed: a.seed,
        sigma_fraction: a.sigma,
        vertices: a.vertices,
        fit: FitOptions { steps: a.steps, step_size: a.step_size, start_iteration: a.start_iteration },
        arms,
        ..AblationConfig::default()
    };
    let exec = if a.sequential { Exec::Sequential } else { Exec::Parallel };
    let report = fit::ablation_study(&config, &cfg.loss, exec)?;
    for t in 0..report.trials {
        emit(out, json!({
            "record": "trial",
            "trial": t,
            "iou": [report.arms[0].final_ious[t], report.arms[1].final_ious[t]],
        }))?;
    }
    emit(out, json!({
        "record": "ablation",
        "trials": report.trials,
        "seed": report.seed,
        "arms": [report.arms[0].selection, report.arms[1].selection],
        "mean_iou": [report.arms[0].mean_iou, report.arms[1].mean_iou],
        "mean_difference": report.mean_difference,
    }))
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Either a JSON array of `{"scores": [...], "coords": [...]}` per level
    /// or a target-maps file written by `labelgen`.
    #[arg(long)]
    maps: PathBuf,
    /// Score threshold [config: score_threshold, default 0.7].
    #[arg(long)]
    threshold: Option<f64>,
}

pub fn decode(a: DecodeArgs, mut cfg: Config, out: &mut impl Write) -> Result<()> {
    cfg.score_threshold = a.threshold.unwrap_or(cfg.score_threshold);
    cfg.validate()?;
    let levels = cfg.levels();
    let text = read_text(&a.maps)?;
    let preds: Vec<LevelPrediction> = if text.trim_start().starts_with('#') {
        LevelPrediction::from_targets(&TargetMaps::from_text(&text, &levels)?)
    } else {
        serde_json::from_str(&text).map_err(|e| Error::Schema { record: 0, message: e.to_string() })?
    };
    let dets = detect::decode_detections(&preds, &levels, cfg.score_threshold)?;
    write!(out, "{}", io::detections_to_jsonl(&dets))
        .map_err(|e| Error::InvalidInput(format!("stdout: {e}")))
}

#[derive(Debug, Args)]
pub struct NmsArgs {
    /// Detections, one JSON record per line.
    #[arg(long)]
    detections: PathBuf,
    /// Suppression IoU [config: nms_iou, default 0.3].
    #[arg(long)]
    iou: Option<f64>,
}

pub fn nms(a: NmsArgs, mut cfg: Config, out: &mut impl Write) -> Result<()> {
    cfg.nms_iou = a.iou.unwrap_or(cfg.nms_iou);
    cfg.validate()?;
    let dets = io::detections_from_jsonl(&read_text(&a.detections)?)?;
    let kept = detect::nms_with_resolution(&dets, cfg.nms_iou, cfg.iou_resolution);
    write!(out, "{}", io::detections_to_jsonl(&kept))
        .map_err(|e| Error::InvalidInput(format!("stdout: {e}")))
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Detection files, one per image.
    #[arg(long, required = true, num_args = 1..)]
    detections: Vec<PathBuf>,
    /// Ground-truth files, in the same order as `--detections`.
    #[arg(long, required = true, num_args = 1..)]
    gt: Vec<PathBuf>,
    #[arg(long, default_value = DEFAULT_FORMAT)]
    format: AnnotationFormat,
    /// Match IoU [config: match_iou, default 0.5].
    #[arg(long)]
    match_iou: Option<f64>,
}

pub fn eval(a: EvalArgs, mut cfg: Config, out: &mut impl Write) -> Result<()> {
    cfg.match_iou = a.match_iou.unwrap_or(cfg.match_iou);
    cfg.validate()?;
    if a.detections.len() != a.gt.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} detection files vs {} ground-truth files",
            a.detections.len(),
            a.gt.len()
        )));
    }
    let mut images: Vec<(Vec<Detection>, Vec<Annotation>)> = Vec::new();
    for (d, g) in a.detections.iter().zip(&a.gt) {
        images.push((io::detections_from_jsonl(&read_text(d)?)?, io::read_annotations(g, a.format)?));
    }
    let report = |counts: detect::EvalCounts, image: Option<usize>| {
        let r = detect::EvalReport::from_counts(counts);
        json!({
            "record": if image.is_some() { "image" } else { "eval" },
            "image": image,
            "precision": r.precision,
            "recall": r.recall,
            "f_measure": r.f_measure,
            "mean_iou": r.mean_iou,
            "true_positives": counts.true_positives,
            "false_positives": counts.false_positives,
            "false_negatives": counts.false_negatives,
            "ignored": counts.ignored,
        })
    };
    let mut total = detect::EvalCounts::default();
    for (i, (preds, gts)) in images.iter().enumerate() {
        let counts = detect::evaluate_counts(preds, gts, cfg.match_iou, cfg.iou_resolution, Exec::Parallel);
        total += counts;
        if images.len() > 1 {
            emit(out, report(counts, Some(i)))?;
        }
    }
    emit(out, report(total, None))
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Polygon file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = DEFAULT_FORMAT)]
    format: AnnotationFormat,
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Mask side in cells [config: loss.mask_resolution, default 64].
    #[arg(long)]
    resolution: Option<usize>,
    /// Soft (sigmoid) occupancy instead of a binary mask.
    #[arg(long)]
    soft: bool,
    /// Soft-mask temperature as a fraction of the frame side
    /// [config: loss.tau, default 1/64].
    #[arg(long)]
    tau: Option<f64>,
    /// Padding on each side, as a fraction of the polygon's extent.
    #[arg(long, default_value_t = MASK_PADDING)]
    pad: f64,
    /// PGM output path.
    #[arg(long)]
    out: PathBuf,
}

pub fn render(a: RenderArgs, cfg: Config, out: &mut impl Write) -> Result<()> {
    let poly = pick(&polygons(&a.input, a.format)?, a.index, "input")?;
    let res = a.resolution.unwrap_or(cfg.loss.mask_resolution);
    let frame = Frame::square_around(&[&poly], a.pad, res)?;
    let tau = a.tau.unwrap_or(cfg.loss.tau);
    let mask = if a.soft {
        rasterize_soft(&poly, &frame, tau * frame.width)?.mask
    } else {
        rasterize_hard(&poly, &frame)
    };
    io::write_mask_pgm(&mask, &a.out)?;
    emit(out, json!({
        "record": "render",
        "resolution": res,
        "soft": a.soft,
        "origin": [frame.origin.x, frame.origin.y],
        "side": frame.width,
        "occupancy": mask.sum() / frame.cell_count() as f64,
    }))
}
