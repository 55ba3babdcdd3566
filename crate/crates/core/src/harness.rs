//! End-to-end solving, batch generation and evaluation sweeps.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::abduction::{abduce_scene, select_rule, Arrangement, PosteriorDump, RulePosterior, SelectMode};
use crate::domain::{AttributeDomain, Axis, Configuration, RuleKind, RuleSpec, Triple};
use crate::error::{Error, Result};
use crate::execution::{execute_scene, position_from_number, PredictedScene};
use crate::generator::{generate, PanelSymbol, PuzzleInstance};
use crate::perception::{corrupt_with, CorruptOptions, NoiseModel};
use crate::logspace::LogDist;
use crate::scene::{infer_panel, ComponentBelief, PanelBelief};
use crate::selection::{answer_cross_entropy, score_candidates, AnswerReport, AttributeSet};

/// Environment variable capping worker threads for sweeps.
pub const THREADS_ENV: &str = "RPM_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub epsilon: f64,
    /// Drives optional ε jitter and sampled rule selection.
    pub seed: u64,
    pub mode: SelectMode,
    pub arrangement: Arrangement,
    pub attributes: AttributeSet,
    /// Replaces the symmetric ε model when set.
    pub noise: Option<NoiseModel>,
    pub jitter: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            epsilon: 0.0,
            seed: 0,
            mode: SelectMode::Argmax,
            arrangement: Arrangement::Rows,
            attributes: AttributeSet::All,
            noise: None,
            jitter: 0.0,
        }
    }
}

impl SolveOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        SolveOptions {
            epsilon,
            ..Default::default()
        }
    }
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    seed ^ (a + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (b + 1).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

/// Scene beliefs of the 8 context panels and the 8 candidates.
pub fn perceive(instance: &PuzzleInstance, options: &SolveOptions) -> Result<(Vec<PanelBelief>, Vec<PanelBelief>)> {
    let noise = options
        .noise
        .clone()
        .unwrap_or_else(|| NoiseModel::symmetric(options.epsilon));
    let beliefs = instance
        .context
        .iter()
        .chain(&instance.candidates)
        .enumerate()
        .map(|(i, panel)| {
            let opts = CorruptOptions {
                seed: mix(options.seed, 0, i as u64),
                jitter: options.jitter,
            };
            infer_panel(&corrupt_with(panel, instance.config, &instance.domain, &noise, opts)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let (context, candidates) = beliefs.split_at(8);
    Ok((context.to_vec(), candidates.to_vec()))
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub posteriors: Vec<Vec<RulePosterior>>,
    pub selected: Vec<Vec<RuleSpec>>,
    pub prediction: PredictedScene,
    pub report: AnswerReport,
}

impl Solution {
    pub fn posterior_dump(&self) -> Vec<PosteriorDump> {
        self.posteriors
            .iter()
            .enumerate()
            .flat_map(|(c, axes)| axes.iter().map(move |p| p.dump(c)))
            .collect()
    }
}

/// Perceive, abduce, select rules, execute and score the candidates.
pub fn solve(instance: &PuzzleInstance, options: &SolveOptions) -> Result<Solution> {
    let (context, candidates) = perceive(instance, options)?;
    let posteriors = abduce_scene(&context, &instance.domain, options.arrangement)?;
    let selected = select_all(&posteriors, options);
    let prediction = execute_scene(
        &selected,
        &context,
        instance.config,
        &instance.domain,
        options.arrangement,
    )?;
    let report = score_candidates(&prediction, &candidates, options.attributes)?;
    Ok(Solution {
        posteriors,
        selected,
        prediction,
        report,
    })
}

fn select_all(posteriors: &[Vec<RulePosterior>], options: &SolveOptions) -> Vec<Vec<RuleSpec>> {
    posteriors
        .iter()
        .enumerate()
        .map(|(c, axes)| {
            axes.iter()
                .enumerate()
                .map(|(a, p)| select_rule(p, options.mode, mix(options.seed, 1 + c as u64, a as u64)))
                .collect()
        })
        .collect()
}

/// Outcome of one solved instance, as aggregated by sweeps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceMetrics {
    pub seed: u64,
    pub correct: bool,
    /// Components whose argmax rule matched the ground truth, per axis.
    pub abduction_hits: [usize; 4],
    pub components: usize,
    /// Posterior mass on the ground-truth rule, summed over component axes.
    pub gt_posterior_sum: f64,
    pub cross_entropy: Option<f64>,
    pub failure: Option<String>,
    pub seconds: f64,
}

pub fn evaluate(instance: &PuzzleInstance, options: &SolveOptions) -> InstanceMetrics {
    let start = Instant::now();
    let components = instance.rules.len();
    let mut m = InstanceMetrics {
        seed: instance.seed,
        correct: false,
        abduction_hits: [0; 4],
        components,
        gt_posterior_sum: 0.0,
        cross_entropy: None,
        failure: None,
        seconds: 0.0,
    };
    let result = perceive(instance, options).and_then(|(context, candidates)| {
        let posteriors = abduce_scene(&context, &instance.domain, options.arrangement)?;
        for (c, axes) in posteriors.iter().enumerate() {
            for (a, p) in axes.iter().enumerate() {
                let gt = instance.rules[c][a];
                m.gt_posterior_sum += p.prob_of(&gt);
                if p.rules[p.argmax()] == gt {
                    m.abduction_hits[a] += 1;
                }
            }
        }
        let selected = select_all(&posteriors, options);
        let prediction = execute_scene(
            &selected,
            &context,
            instance.config,
            &instance.domain,
            options.arrangement,
        )?;
        score_candidates(&prediction, &candidates, options.attributes)
    });
    match result {
        Ok(report) => {
            m.correct = report.chosen == instance.answer_index;
            m.cross_entropy = Some(answer_cross_entropy(&report, instance.answer_index));
        }
        Err(e) => m.failure = Some(e.to_string()),
    }
    m.seconds = start.elapsed().as_secs_f64();
    m
}

/// One CSV row: aggregate over the instances of one configuration and ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub configuration: Configuration,
    pub epsilon: f64,
    pub instance_count: usize,
    pub answer_accuracy: f64,
    pub abduction_number_position: f64,
    pub abduction_type: f64,
    pub abduction_size: f64,
    pub abduction_color: f64,
    pub mean_gt_posterior: f64,
    pub mean_cross_entropy: f64,
    pub failures: usize,
    /// Empty unless timing was requested, so reruns stay byte-identical.
    pub wall_time_ms: Option<f64>,
}

impl SweepRow {
    pub fn abduction_accuracy(&self, axis: Axis) -> f64 {
        match axis {
            Axis::NumberPosition => self.abduction_number_position,
            Axis::Type => self.abduction_type,
            Axis::Size => self.abduction_size,
            Axis::Color => self.abduction_color,
        }
    }

    /// Aggregates per-instance metrics; failed instances count as wrong answers.
    pub fn aggregate(
        configuration: Configuration,
        epsilon: f64,
        metrics: &[InstanceMetrics],
        timing: bool,
    ) -> Self {
        let n = metrics.len().max(1) as f64;
        let comps: usize = metrics.iter().map(|m| m.components).sum();
        let axis = |a: usize| {
            metrics.iter().map(|m| m.abduction_hits[a]).sum::<usize>() as f64 / comps.max(1) as f64
        };
        let ce: Vec<f64> = metrics.iter().filter_map(|m| m.cross_entropy).collect();
        SweepRow {
            configuration,
            epsilon,
            instance_count: metrics.len(),
            answer_accuracy: metrics.iter().filter(|m| m.correct).count() as f64 / n,
            abduction_number_position: axis(0),
            abduction_type: axis(1),
            abduction_size: axis(2),
            abduction_color: axis(3),
            mean_gt_posterior: metrics.iter().map(|m| m.gt_posterior_sum).sum::<f64>()
                / (4 * comps.max(1)) as f64,
            mean_cross_entropy: if ce.is_empty() {
                f64::NAN
            } else {
                ce.iter().sum::<f64>() / ce.len() as f64
            },
            failures: metrics.iter().filter(|m| m.failure.is_some()).count(),
            wall_time_ms: timing
                .then(|| 1000.0 * metrics.iter().map(|m| m.seconds).sum::<f64>() / n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn row(&self, config: Configuration, epsilon: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.configuration == config && r.epsilon == epsilon)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("rows serialize");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows = r
            .deserialize()
            .collect::<std::result::Result<Vec<SweepRow>, _>>()
            .map_err(|e| Error::Generation(format!("malformed sweep csv: {e}")))?;
        Ok(SweepReport { rows })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub configs: Vec<Configuration>,
    pub epsilons: Vec<f64>,
    pub count: usize,
    pub seed0: u64,
    pub solve: SolveOptions,
    pub timing: bool,
}

/// Worker pool honouring [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            b = b.num_threads(n);
        }
    }
    b.build().map_err(|e| Error::contract(format!("thread pool: {e}")))
}

/// Solves seeds `seed0..seed0 + count` for every configuration and ε.
/// Instances are generated once per configuration; rows follow argument order.
pub fn sweep(options: &SweepOptions) -> Result<SweepReport> {
    if options.count == 0 {
        return Err(Error::contract("sweep needs at least one instance"));
    }
    let pool = thread_pool()?;
    let mut rows = Vec::new();
    for &config in &options.configs {
        let seeds: Vec<u64> = (0..options.count as u64).map(|i| options.seed0 + i).collect();
        let instances = pool.install(|| {
            seeds
                .par_iter()
                .map(|&s| generate(config, s))
                .collect::<Result<Vec<_>>>()
        })?;
        for &epsilon in &options.epsilons {
            let solve = SolveOptions {
                epsilon,
                ..options.solve.clone()
            };
            let metrics: Vec<InstanceMetrics> = pool.install(|| {
                instances
                    .par_iter()
                    .map(|inst| {
                        evaluate(
                            inst,
                            &SolveOptions {
                                seed: solve.seed ^ inst.seed,
                                ..solve.clone()
                            },
                        )
                    })
                    .collect()
            });
            rows.push(SweepRow::aggregate(config, epsilon, &metrics, options.timing));
        }
    }
    Ok(SweepReport { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub seed: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub configuration: Configuration,
    pub seed0: u64,
    pub count: usize,
    pub files: Vec<ManifestEntry>,
    /// Digest over the per-file digests in order.
    pub sha256: String,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn instance_file_name(config: Configuration, seed: u64) -> String {
    format!("{}_{seed:06}.rpm.json", config.name())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `count` instances seeded `seed0..` plus a manifest to `out_dir`.
pub fn cmd_generate(config: Configuration, count: usize, seed0: u64, out_dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let pool = thread_pool()?;
    let texts = pool.install(|| {
        (0..count as u64)
            .into_par_iter()
            .map(|i| generate(config, seed0 + i).map(|inst| inst.to_json() + "\n"))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut files = Vec::with_capacity(count);
    for (i, text) in texts.iter().enumerate() {
        let seed = seed0 + i as u64;
        let name = instance_file_name(config, seed);
        let path = out_dir.join(&name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        files.push(ManifestEntry {
            file: name,
            seed,
            sha256: sha256_hex(text.as_bytes()),
        });
    }
    let joined: String = files.iter().map(|f| f.sha256.as_str()).collect();
    let manifest = Manifest {
        configuration: config,
        seed0,
        count,
        sha256: sha256_hex(joined.as_bytes()),
        files,
    };
    let path = out_dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Recomputes the digest of every file listed in a manifest.
pub fn verify_manifest(out_dir: &Path) -> Result<Vec<PathBuf>> {
    let path = out_dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        context: path.display().to_string(),
        source: e,
    })?;
    let mut changed = Vec::new();
    for entry in &manifest.files {
        let p = out_dir.join(&entry.file);
        let bytes = std::fs::read(&p).map_err(|e| Error::io(&p, e))?;
        if sha256_hex(&bytes) != entry.sha256 {
            changed.push(p);
        }
    }
    Ok(changed)
}

/// Result of the noiseless self-check on one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub seed: u64,
    pub answer_correct: bool,
    pub abduction_exact: bool,
    pub prediction_exact: bool,
    pub baseline_correct: bool,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.answer_correct && self.abduction_exact && self.prediction_exact
    }
}

fn same(a: &LogDist, b: &LogDist) -> bool {
    a.len() == b.len() && a.probs().iter().zip(b.probs()).all(|(x, y)| (x - y).abs() < 1e-12)
}

/// Whether a prediction is the point-mass belief of `answer` on every field
/// the rules determine. A number-mode rule fixes only the count, so there the
/// position field must be uniform over the subsets of the true count.
pub fn prediction_matches(pred: &PredictedScene, answer: &PanelSymbol, domain: &AttributeDomain) -> bool {
    if pred.belief.components.len() != answer.components.len() {
        return false;
    }
    pred.belief
        .components
        .iter()
        .zip(&answer.components)
        .enumerate()
        .all(|(c, (p, sym))| {
            let t = ComponentBelief::from_symbol(sym, p.slots, domain);
            let position = if pred.position_mode(c) {
                t.position.clone()
            } else {
                position_from_number(&t.number, p.slots)
            };
            same(&p.position, &position)
                && same(&p.number, &t.number)
                && same(&p.shape, &t.shape)
                && same(&p.size, &t.size)
                && same(&p.color, &t.color)
        })
}

/// Whether `sample`, placed as the ninth panel, satisfies every ground-truth
/// rule of `instance` on all three lines of `arrangement`.
pub fn sample_satisfies_rules(
    instance: &PuzzleInstance,
    sample: &PanelSymbol,
    arrangement: Arrangement,
) -> Result<bool> {
    let slots = instance.config.slot_counts();
    if sample.components.len() != slots.len() {
        return Err(Error::contract("sample does not match the configuration"));
    }
    let mut panels: Vec<&PanelSymbol> = instance.context.iter().collect();
    panels.push(sample);
    let ([l1, l2], [p1, p2]) = arrangement.lines();
    let lines = [l1, l2, [p1, p2, 8]];
    for (c, rules) in instance.rules.iter().enumerate() {
        for &rule in rules {
            let space = rule.space(slots[c], &instance.domain);
            let value = |i: usize| space.value(space.index(panels[i].components[c].code(space)));
            let triple = match rule.kind {
                RuleKind::DistributeThree => match Triple::new(value(l1[0]), value(l1[1]), value(l1[2])) {
                    Ok(t) => Some(t),
                    Err(_) => return Ok(false),
                },
                _ => None,
            };
            for line in lines {
                if !rule.holds_row(space, value(line[0]), value(line[1]), value(line[2]), triple.as_ref())? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Noiseless solve, plus checks that the ground-truth rules execute to the
/// exact answer panel and that abduction recovers them.
pub fn oracle_check(instance: &PuzzleInstance) -> Result<OracleCheck> {
    let options = SolveOptions::default();
    let (context, _) = perceive(instance, &options)?;
    let sol = solve(instance, &options)?;
    let abduction_exact = sol.posteriors.iter().enumerate().all(|(c, axes)| {
        axes.iter()
            .enumerate()
            .all(|(a, p)| (p.prob_of(&instance.rules[c][a]) - 1.0).abs() < 1e-12)
    });
    let pred = execute_scene(
        &instance.rules,
        &context,
        instance.config,
        &instance.domain,
        Arrangement::Rows,
    )?;
    let prediction_exact = prediction_matches(&pred, instance.answer(), &instance.domain);
    Ok(OracleCheck {
        seed: instance.seed,
        answer_correct: sol.report.chosen == instance.answer_index,
        abduction_exact,
        prediction_exact,
        baseline_correct: crate::generator::majority_vote_baseline(&instance.candidates)
            == instance.answer_index,
    })
}
