use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use imfkit::discriminator::{
    amp_state_dim, assemble_amp_state, gradcheck_campaign, mean_output, train, AmpStatePair,
    Checkpoint, DiscriminatorNet, PenaltyKind, TrainConfig,
};
use imfkit::imf::{impact_mitigation_all, ImfResult};
use imfkit::metrics::metrics_report;
use imfkit::oracle::run_oracle_campaign;
use imfkit::rewards::{
    combined_amp_reward, combined_handcrafted_reward, handcrafted_terms, style_reward, task_reward,
    RewardWeights, TrajectorySample, HANDCRAFTED_TERMS,
};
use imfkit::trajlog::{check_timestamps, fill_accelerations, parse_log, TrajectoryLog};
use imfkit::{parse_model, validate_state, RobotModel, RobotState};
use nalgebra::{DVector, Matrix3};
use serde::Serialize;
use serde_json::json;

use crate::output::{csv_field, float, json};
use crate::{Command, DiscTrainArgs, ImfArgs, Mode, Penalty, RewardsArgs};

/// Largest impulse relative error `oracle-check` accepts.
const ORACLE_TOLERANCE: f64 = 1e-8;
/// Largest gradient relative error `gradcheck` accepts.
const GRADCHECK_TOLERANCE: f64 = 1e-4;

const MULTI_CONTACT_NOTE: &str = "IMF is evaluated per contact frame; the per-sample value is the mean R_IMF over frames flagged in contact, 0 when none are";

#[derive(Debug)]
pub enum Failure {
    Domain(String),
    Usage(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Domain(m) | Failure::Usage(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<imfkit::Error> for Failure {
    fn from(e: imfkit::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: imfkit::Result<T>) -> Outcome<T> {
    r.map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Outcome<RobotModel> {
    in_file(path, parse_model(&read(path)?))
}

fn load_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Outcome<T> {
    toml::from_str(&read(path)?).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
}

/// Non-blank lines with their 1-based line numbers.
fn json_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Outcome<Vec<T>> {
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| Failure::Domain(format!("{}: line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn run(command: Command) -> Outcome {
    match command {
        Command::ModelValidate { model } => model_validate(&model),
        Command::Imf(args) => imf(&args),
        Command::OracleCheck { model, trials, seed } => oracle_check(&model, trials as usize, seed),
        Command::Rewards(args) => rewards(&args),
        Command::Metrics {
            trajectory,
            mass,
            g,
            model,
        } => metrics(&trajectory, mass, g, model.as_deref()),
        Command::DiscTrain(args) => disc_train(&args),
        Command::Gradcheck {
            seed,
            nets,
            penalty,
        } => gradcheck(seed, nets as usize, penalty),
    }
}

fn model_validate(path: &Path) -> Outcome {
    let model = load_model(path)?;
    let doc = model.document();
    let summary = json!({
        "model": path.display().to_string(),
        "name": doc.name,
        "synthetic": doc.synthetic,
        "links": model.links().len() + 1,
        "joints": model.n(),
        "actuated_joints": model.n_act(),
        "contact_frames": model.contact_frames().iter().map(|f| f.name.clone()).collect::<Vec<_>>(),
        "total_mass": model.total_mass(),
    });
    print!("{}", json(&summary));
    Ok(())
}

fn rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|r| [0, 1, 2].map(|c| m[(r, c)]))
}

fn frame_json(name: &str, result: &imfkit::Result<ImfResult>) -> serde_json::Value {
    match result {
        Ok(r) => json!({
            "frame": r.frame,
            "xi": r.xi,
            "reward": r.reward,
            "ratio_eigenvalues": r.ratio_eigenvalues.as_slice(),
            "lambda": rows(&r.lambda),
            "lambda_locked": rows(&r.lambda_locked),
            "xi_matrix": rows(&r.xi_matrix),
        }),
        Err(e) => json!({ "frame": name, "error": e.to_string() }),
    }
}

fn imf(args: &ImfArgs) -> Outcome {
    let model = load_model(&args.model)?;
    let names: Vec<String> = model.contact_frames().iter().map(|f| f.name.clone()).collect();
    let selected: Vec<usize> = match &args.frames.frame {
        Some(frame) => vec![names.iter().position(|n| n == frame).ok_or_else(|| {
            Failure::Usage(format!(
                "unknown contact frame `{frame}`; the model defines: {}",
                names.join(", ")
            ))
        })?],
        None => (0..names.len()).collect(),
    };
    if selected.is_empty() {
        return Err(Failure::Domain("model defines no contact frames".into()));
    }
    let evaluate = |state: &RobotState| -> Outcome<Vec<imfkit::Result<ImfResult>>> {
        let state = validate_state(&model, state, false)?;
        let all = impact_mitigation_all(&model, &state);
        Ok(selected.iter().map(|&k| all[k].clone()).collect())
    };

    if args.sweep {
        let states: Vec<RobotState> = json_lines(&args.states)?;
        let mut out = String::from("state,frame,xi,reward,ratio_eigenvalue_0,ratio_eigenvalue_1,ratio_eigenvalue_2,error\n");
        for (i, state) in states.iter().enumerate() {
            let results = evaluate(state).map_err(|e| Failure::Domain(format!("state {i}: {e}")))?;
            for (&k, r) in selected.iter().zip(&results) {
                let cells = match r {
                    Ok(r) => {
                        let e = r.ratio_eigenvalues;
                        [r.xi, r.reward, e[0], e[1], e[2]].map(float).join(",") + ","
                    }
                    Err(e) => format!(",,,,,{}", csv_field(&e.to_string())),
                };
                out.push_str(&format!("{i},{},{cells}\n", csv_field(&names[k])));
            }
        }
        print!("{out}");
        return Ok(());
    }

    let text = read(&args.states)?;
    let state: RobotState = serde_json::from_str(&text)
        .map_err(|e| Failure::Domain(format!("{}: {e}", args.states.display())))?;
    let results = evaluate(&state)?;
    let frames: Vec<_> = selected.iter().zip(&results).map(|(&k, r)| frame_json(&names[k], r)).collect();
    print!("{}", json(&json!({ "frames": frames, "multi_contact": MULTI_CONTACT_NOTE })));
    if args.frames.frame.is_some() {
        if let Some(Err(e)) = results.first() {
            return Err(Failure::Domain(e.to_string()));
        }
    }
    Ok(())
}

fn oracle_check(model_path: &Path, trials: usize, seed: u64) -> Outcome {
    let model = load_model(model_path)?;
    let report = run_oracle_campaign(&model, trials, seed)?;
    print!("{}", json(&report));
    let worst = report.max_rel_error_free.max(report.max_rel_error_locked);
    if !report.failures.is_empty() {
        return Err(Failure::Domain(format!("{} trial(s) failed", report.failures.len())));
    }
    if !(worst <= ORACLE_TOLERANCE) {
        return Err(Failure::Domain(format!(
            "max relative impulse error {} exceeds {ORACLE_TOLERANCE:e}",
            float(worst)
        )));
    }
    Ok(())
}

fn load_log(path: &Path) -> Outcome<TrajectoryLog> {
    in_file(path, parse_log(&read(path)?))
}

/// Dimension checks, treating absent accelerations as acceptable when
/// `need_accel` is false.
fn check_samples(samples: &[TrajectorySample], model: &RobotModel, need_accel: bool) -> Outcome {
    for (i, s) in samples.iter().enumerate() {
        let checked = if !need_accel && s.joint_accelerations.is_empty() {
            let mut c = s.clone();
            c.joint_accelerations = vec![0.0; model.n()];
            c.check_dimensions(model)
        } else {
            s.check_dimensions(model)
        };
        checked.map_err(|e| {
            let hint = match e {
                imfkit::Error::Dimension { ref what, .. } if what == "joint_accelerations" => {
                    " (pass --accel-fallback to reconstruct them)"
                }
                _ => "",
            };
            Failure::Domain(format!("sample {i}: {e}{hint}"))
        })?;
    }
    check_timestamps(samples)?;
    Ok(())
}

/// Mean R_IMF over in-contact frames; frames whose evaluation fails are
/// skipped and counted.
fn sample_imf(model: &RobotModel, sample: &TrajectorySample, skipped: &mut usize) -> Outcome<f64> {
    if !sample.foot_contact.iter().any(|&c| c) {
        return Ok(0.0);
    }
    let state = validate_state(model, &sample.state, false)?;
    let results = impact_mitigation_all(model, &state);
    let (mut sum, mut count) = (0.0, 0usize);
    for (r, &contact) in results.iter().zip(&sample.foot_contact) {
        if !contact {
            continue;
        }
        match r {
            Ok(r) => {
                sum += r.reward;
                count += 1;
            }
            Err(_) => *skipped += 1,
        }
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

fn load_discriminator(path: &Path, model: &RobotModel) -> Outcome<DiscriminatorNet> {
    let ck: Checkpoint = serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?;
    let net = in_file(path, DiscriminatorNet::try_from(ck))?;
    let expected = 2 * amp_state_dim(model);
    if net.input_dim() != expected {
        return Err(Failure::Domain(format!(
            "{}: discriminator expects {} inputs, the model's state transitions have {expected}",
            path.display(),
            net.input_dim()
        )));
    }
    Ok(net)
}

#[derive(Serialize)]
struct RewardsSummary {
    mode: &'static str,
    samples: usize,
    columns: Vec<String>,
    /// Column means; the style mean skips the first sample, which has no predecessor.
    means: BTreeMap<String, f64>,
    total_sum: f64,
    style: bool,
    imf: bool,
    imf_multi_contact: &'static str,
    imf_skipped_frames: usize,
    accelerations_reconstructed: bool,
    warnings: Vec<String>,
}

fn rewards(args: &RewardsArgs) -> Outcome {
    let model = load_model(&args.model)?;
    let mut log = load_log(&args.trajectory)?;
    let weights: RewardWeights = load_toml(&args.weights)?;
    in_file(&args.weights, weights.validate())?;
    let mut warnings = Vec::new();

    let missing_accel = log.samples.iter().any(|s| s.joint_accelerations.is_empty());
    let reconstructed = args.accel_fallback && missing_accel;
    if reconstructed {
        let mut filled = log.samples.clone();
        fill_accelerations(&mut filled)?;
        for (s, f) in log.samples.iter_mut().zip(filled) {
            if s.joint_accelerations.is_empty() {
                s.joint_accelerations = f.joint_accelerations;
            }
        }
    }
    check_samples(&log.samples, &model, args.mode == Mode::Handcrafted)?;

    let disc = match (args.mode, &args.disc) {
        (Mode::Amp, Some(path)) => Some(load_discriminator(path, &model)?),
        (Mode::Amp, None) => {
            warnings.push("no --disc checkpoint given; style column omitted".to_string());
            None
        }
        (Mode::Handcrafted, Some(_)) => {
            warnings.push("--disc is ignored in handcrafted mode".to_string());
            None
        }
        (Mode::Handcrafted, None) => None,
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let mut columns: Vec<String> = vec!["time".into()];
    match args.mode {
        Mode::Amp => {
            columns.push("task".into());
            if disc.is_some() {
                columns.push("style".into());
            }
        }
        Mode::Handcrafted => columns.extend(HANDCRAFTED_TERMS.iter().map(|(t, _)| t.to_string())),
    }
    if args.imf {
        columns.push("imf".into());
    }
    columns.push("total".into());

    let amp_states: Vec<Vec<f64>> = if disc.is_some() {
        log.samples.iter().map(|s| assemble_amp_state(&model, &s.state)).collect()
    } else {
        Vec::new()
    };
    let mut csv = columns.join(",") + "\n";
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    let mut skipped = 0usize;
    for (i, sample) in log.samples.iter().enumerate() {
        let mut cells: Vec<(&str, Option<f64>)> = Vec::new();
        let imf = if args.imf {
            sample_imf(&model, sample, &mut skipped).map_err(|e| Failure::Domain(format!("sample {i}: {e}")))?
        } else {
            0.0
        };
        let total = match args.mode {
            Mode::Amp => {
                let task = task_reward(sample, &weights);
                cells.push(("task", Some(task)));
                let style = match &disc {
                    Some(net) => {
                        let value = if i == 0 {
                            None
                        } else {
                            let pair = AmpStatePair {
                                s: amp_states[i - 1].clone(),
                                s_next: amp_states[i].clone(),
                            };
                            Some(style_reward(net.forward(&pair.input())?))
                        };
                        cells.push(("style", value));
                        value.unwrap_or(0.0)
                    }
                    None => 0.0,
                };
                combined_amp_reward(task, style, imf, &weights)
            }
            Mode::Handcrafted => {
                let terms = handcrafted_terms(sample, &model, &weights)
                    .map_err(|e| Failure::Domain(format!("sample {i}: {e}")))?;
                for (name, _) in HANDCRAFTED_TERMS {
                    cells.push((name, Some(terms[name].weighted)));
                }
                combined_handcrafted_reward(&terms, imf, &weights)
            }
        };
        if args.imf {
            cells.push(("imf", Some(imf)));
        }
        cells.push(("total", Some(total)));

        let mut line = float(sample.time);
        for (name, value) in cells {
            line.push(',');
            if let Some(v) = value {
                line.push_str(&float(v));
                let e = sums.entry(name.to_string()).or_default();
                e.0 += v;
                e.1 += 1;
            }
        }
        csv.push_str(&line);
        csv.push('\n');
    }

    let summary = RewardsSummary {
        mode: match args.mode {
            Mode::Amp => "amp",
            Mode::Handcrafted => "handcrafted",
        },
        samples: log.samples.len(),
        total_sum: sums.get("total").map_or(0.0, |s| s.0),
        means: sums
            .into_iter()
            .map(|(k, (sum, count))| (k, sum / count as f64))
            .collect(),
        columns,
        style: disc.is_some(),
        imf: args.imf,
        imf_multi_contact: MULTI_CONTACT_NOTE,
        imf_skipped_frames: skipped,
        accelerations_reconstructed: reconstructed,
        warnings,
    };
    match &args.csv {
        Some(path) => write(path, &csv)?,
        None => print!("{csv}"),
    }
    match &args.summary {
        Some(path) => write(path, &json(&summary))?,
        None => eprint!("{}", json(&summary)),
    }
    Ok(())
}

fn metrics(traj_path: &Path, mass: f64, g: f64, model_path: Option<&Path>) -> Outcome {
    let log = load_log(traj_path)?;
    let model_path: PathBuf = match (model_path, &log.header.model) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => traj_path.parent().unwrap_or(Path::new(".")).join(p),
        (None, None) => {
            return Err(Failure::Usage(
                "the log header names no model; pass --model".into(),
            ))
        }
    };
    let model = load_model(&model_path)?;
    check_samples(&log.samples, &model, false)?;
    let report = metrics_report(&log.samples, &model, mass, g)?;
    print!("{}", json(&report));
    Ok(())
}

fn load_dataset(path: &Path) -> Outcome<Vec<DVector<f64>>> {
    let pairs: Vec<AmpStatePair> = json_lines(path)?;
    let data: Vec<DVector<f64>> = pairs.iter().map(AmpStatePair::input).collect();
    if let Some(first) = data.first() {
        if let Some((i, bad)) = data.iter().enumerate().find(|(_, x)| x.len() != first.len()) {
            return Err(Failure::Domain(format!(
                "{}: transition {i} has {} values, the first has {}",
                path.display(),
                bad.len(),
                first.len()
            )));
        }
    }
    Ok(data)
}

fn disc_train(args: &DiscTrainArgs) -> Outcome {
    let mut config: TrainConfig = load_toml(&args.config)?;
    if let Some(epochs) = args.epochs {
        config.epochs = epochs;
    }
    in_file(&args.config, config.validate())?;
    let reference = load_dataset(&args.reference)?;
    let policy = load_dataset(&args.policy)?;
    let (Some(r0), Some(p0)) = (reference.first(), policy.first()) else {
        return Err(Failure::Domain("reference and policy datasets must be non-empty".into()));
    };
    if r0.len() != p0.len() {
        return Err(Failure::Domain(format!(
            "input dimension mismatch: reference transitions have {} values, policy transitions {}",
            r0.len(),
            p0.len()
        )));
    }

    let sizes = config.layer_sizes(r0.len());
    let init = DiscriminatorNet::new(&sizes, config.leaky_slope, config.seed)?;
    let (net, history) = train(&init, &reference, &policy, &config)?;

    let loss_path = args
        .loss_csv
        .clone()
        .unwrap_or_else(|| args.out.with_extension("loss.csv"));
    let mut csv = String::from("epoch,total,reference,policy,penalty\n");
    for (epoch, l) in history.iter().enumerate() {
        csv.push_str(&format!(
            "{},{}\n",
            epoch + 1,
            [l.total, l.reference, l.policy, l.penalty].map(float).join(",")
        ));
    }
    write(&loss_path, &csv)?;
    write(&args.out, &json(&Checkpoint::from(&net)))?;

    let d_ref = mean_output(&net, &reference)?;
    let d_pol = mean_output(&net, &policy)?;
    let mean_style = |data: &[DVector<f64>]| -> Outcome<f64> {
        let mut sum = 0.0;
        for x in data {
            sum += style_reward(net.forward(x)?);
        }
        Ok(sum / data.len() as f64)
    };
    let summary = json!({
        "checkpoint": args.out.display().to_string(),
        "loss_history": loss_path.display().to_string(),
        "layer_sizes": sizes,
        "parameters": net.param_count(),
        "epochs": config.epochs,
        "reference_samples": reference.len(),
        "policy_samples": policy.len(),
        "final_loss": history.last(),
        "mean_d_reference": d_ref,
        "mean_d_policy": d_pol,
        "mean_style_reference": mean_style(&reference)?,
        "mean_style_policy": mean_style(&policy)?,
    });
    print!("{}", json(&summary));
    Ok(())
}

fn gradcheck(seed: u64, nets: usize, penalty: Penalty) -> Outcome {
    let kind = match penalty {
        Penalty::Input => PenaltyKind::Input,
        Penalty::Parameter => PenaltyKind::Parameter,
    };
    let report = gradcheck_campaign(seed, nets, kind)?;
    print!("{}", json(&report));
    if !(report.max_rel_error <= GRADCHECK_TOLERANCE) {
        return Err(Failure::Domain(format!(
            "max relative gradient error {} exceeds {GRADCHECK_TOLERANCE:e}",
            float(report.max_rel_error)
        )));
    }
    Ok(())
}
