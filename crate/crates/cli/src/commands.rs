use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use asrfair_core::fairness::{fairness_sweep, sweep_to_delimited, FairnessWeights};
use asrfair_core::harness::{
    emit_fs_chart, emit_report, load_hypotheses, load_plans, run_experiment, simulate_hypotheses,
    write_hypotheses, CorruptionProfile, HypothesisSet, ReportFormat, ResultTable,
};
use asrfair_core::manifest::{
    load_manifest_path, read_manifest_unchecked, split_corpus, validate_manifest, write_manifest,
    CorpusManifest, ManifestFormat, Partition, Severity, SplitSpec, UtteranceRecord,
};
use asrfair_core::metrics::{score_testset, ScoreOptions};
use asrfair_core::spectral::{
    read_audio, severity_distance_study, FrameSpec, LabeledAudio, StudyOptions,
};

use crate::config::Config;
use crate::{
    CliError, Cli, Command, DtwArgs, FairnessArgs, ReportArgs, ScoreArgs, ScoreFormat, SimulateArgs,
    SplitArgs, TableFormat, ValidateArgs,
};

pub fn run(cli: Cli) -> Result<u8, CliError> {
    let config = Config::load(cli.config.as_deref())?;
    let jobs = match (cli.jobs, config.jobs) {
        (Some(j), _) => Some(usize::from(j)),
        (None, Some(0)) => return Err(CliError::Input("config `jobs` must be at least 1".into())),
        (None, j) => j,
    };
    if let Some(jobs) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    match cli.command {
        Command::Validate(a) => validate(&a),
        Command::Split(a) => split(&a, &config),
        Command::Score(a) => score(&a, &config),
        Command::Fairness(a) => fairness(&a, &config),
        Command::Dtw(a) => dtw(&a, &config),
        Command::Simulate(a) => simulate(&a, &config),
        Command::Report(a) => report(&a, &config),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn score_options(
    level: Option<crate::LevelArg>,
    missing: Option<crate::MissingArg>,
    config: &Config,
) -> ScoreOptions {
    let defaults = ScoreOptions::default();
    ScoreOptions {
        level: level.map(Into::into).or(config.level).unwrap_or(defaults.level),
        missing: missing.map(Into::into).or(config.missing).unwrap_or(defaults.missing),
        ..defaults
    }
}

/// Hypothesis ids absent from the manifest indicate a mismatched pair of
/// inputs.
fn check_known_ids(manifest: &CorpusManifest, hyps: &HypothesisSet) -> Result<(), CliError> {
    let unknown: Vec<&str> = hyps
        .iter()
        .map(|(id, _)| id)
        .filter(|id| manifest.get(id).is_none())
        .collect();
    if unknown.is_empty() {
        return Ok(());
    }
    let shown: Vec<&str> = unknown.iter().take(5).copied().collect();
    Err(CliError::Domain(format!(
        "{} hypothesis id(s) not in manifest: {}{}",
        unknown.len(),
        shown.join(", "),
        if unknown.len() > shown.len() { ", ..." } else { "" }
    )))
}

fn select(manifest: &CorpusManifest, partition: Option<Partition>) -> Vec<&UtteranceRecord> {
    manifest
        .records
        .iter()
        .filter(|r| partition.is_none() || r.partition == partition)
        .collect()
}

fn validate(args: &ValidateArgs) -> Result<u8, CliError> {
    let file = File::open(&args.manifest)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", args.manifest.display())))?;
    let manifest = read_manifest_unchecked(file, ManifestFormat::from_path(&args.manifest))?;
    let report = validate_manifest(&manifest);
    emit(None, &report.render())?;
    Ok(if report.is_valid() { 0 } else { 1 })
}

fn split(args: &SplitArgs, config: &Config) -> Result<u8, CliError> {
    let manifest = load_manifest_path(&args.manifest)?;
    let defaults = SplitSpec::default();
    let spec = SplitSpec {
        test_fraction: args.test_fraction.or(config.test_fraction).unwrap_or(defaults.test_fraction),
        dev_fraction_of_train: args.dev_fraction.or(config.dev_fraction).unwrap_or(defaults.dev_fraction_of_train),
        seed: config.seed(args.seed, defaults.seed)?,
        speaker_disjoint: args.speaker_disjoint || config.speaker_disjoint.unwrap_or(false),
    };
    let out = split_corpus(&manifest, &spec)?;
    let format = ManifestFormat::from_path(args.out.as_deref().unwrap_or(&args.manifest));
    let mut buf = Vec::new();
    write_manifest(&out, &mut buf, format)?;
    emit(args.out.as_deref(), &String::from_utf8_lossy(&buf))?;
    eprintln!(
        "split seed {}: train {}, dev {}, eval {}",
        spec.seed,
        out.partition(Partition::Train).count(),
        out.partition(Partition::Dev).count(),
        out.partition(Partition::Eval).count()
    );
    Ok(0)
}

fn score(args: &ScoreArgs, config: &Config) -> Result<u8, CliError> {
    let manifest = load_manifest_path(&args.manifest)?;
    let hyps = load_hypotheses(&args.hypotheses, None)?;
    check_known_ids(&manifest, &hyps)?;
    let opts = score_options(args.level, args.missing, config);
    let records = select(&manifest, args.partition.or(config.partition));
    let report = score_testset(records, &hyps, &opts)?;
    let text = match args.format {
        ScoreFormat::Csv => report.to_delimited(),
        ScoreFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report).map_err(|e| CliError::Domain(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    emit(args.out.as_deref(), &text)?;
    Ok(0)
}

fn fairness(args: &FairnessArgs, config: &Config) -> Result<u8, CliError> {
    let weights = args
        .weights
        .clone()
        .map(|w| w.0)
        .or_else(|| config.weights.clone())
        .unwrap_or_else(|| FairnessWeights::STANDARD.to_vec());
    let sweep = fairness_sweep(args.wn, args.wc, &weights)?;
    let text = match args.format {
        TableFormat::Csv => sweep_to_delimited(&sweep),
        TableFormat::Md => {
            let mut s = String::from("| α | β | W_N | W_C | Average | Disparity | FS |\n|---:|---:|---:|---:|---:|---:|---:|\n");
            for r in &sweep {
                let _ = writeln!(
                    s,
                    "| {} | {} | {:.2} | {:.2} | {:.2} | {:.2} | {:.2} |",
                    r.weights.alpha(),
                    r.weights.beta(),
                    r.error_g1,
                    r.error_g2,
                    r.average_error,
                    r.disparity,
                    asrfair_core::round2(r.score)
                );
            }
            s
        }
    };
    emit(None, &text)?;
    Ok(0)
}

fn wav_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::Input(format!("cannot read directory {}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn read_severity_map(path: &Path) -> Result<BTreeMap<String, Severity>, CliError> {
    let bad = |m: String| CliError::Input(format!("{}: {m}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut map = BTreeMap::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        if row.len() < 2 {
            return Err(bad(format!("row {} needs `file_stem,severity`", i + 1)));
        }
        if i == 0 && row[1].eq_ignore_ascii_case("severity") {
            continue;
        }
        let severity: Severity = row[1].parse().map_err(|e: asrfair_core::manifest::LiteralError| bad(e.to_string()))?;
        if severity == Severity::None {
            return Err(CliError::Domain(format!("graded file `{}` mapped to severity none", &row[0])));
        }
        map.insert(row[0].to_string(), severity);
    }
    Ok(map)
}

fn dtw(args: &DtwArgs, config: &Config) -> Result<u8, CliError> {
    let d = StudyOptions::default();
    let opts = StudyOptions {
        frame: FrameSpec {
            window_ms: args.window_ms.or(config.window_ms).unwrap_or(d.frame.window_ms),
            hop_ms: args.hop_ms.or(config.hop_ms).unwrap_or(d.frame.hop_ms),
            fft_points: args.fft_points.or(config.fft_points).unwrap_or(d.frame.fft_points),
            window: args.window.or(config.window).unwrap_or(d.frame.window),
        },
        metric: args.metric.or(config.metric).unwrap_or(d.metric),
        compression: args.compression.or(config.compression).unwrap_or(d.compression),
        threshold_fraction: args.threshold.or(config.threshold).unwrap_or(d.threshold_fraction),
    };
    let severities = read_severity_map(&args.severity_map)?;
    let load = |path: &Path| -> Result<LabeledAudio, CliError> {
        let signal = read_audio(path).map_err(|e| {
            let code = CliError::from(e);
            let msg = format!("{}: {code}", path.display());
            match code {
                CliError::Domain(_) => CliError::Domain(msg),
                CliError::Input(_) => CliError::Input(msg),
            }
        })?;
        Ok(LabeledAudio::new(stem(path), signal))
    };
    let normal = wav_files(&args.normal_dir)?
        .iter()
        .map(|p| load(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut graded: BTreeMap<Severity, Vec<LabeledAudio>> = BTreeMap::new();
    for path in wav_files(&args.graded_dir)? {
        let id = stem(&path);
        let severity = *severities
            .get(&id)
            .ok_or_else(|| CliError::Domain(format!("graded file `{id}` missing from severity map")))?;
        graded.entry(severity).or_default().push(load(&path)?);
    }
    let study = severity_distance_study(&normal, &graded, &opts)?;
    if !study.skipped.is_empty() {
        eprintln!("skipped {} utterance(s) without voiced frames", study.skipped.len());
    }
    emit(args.out.as_deref(), &study.to_delimited())?;
    Ok(0)
}

fn simulate(args: &SimulateArgs, config: &Config) -> Result<u8, CliError> {
    let manifest = load_manifest_path(&args.manifest)?;
    let text = std::fs::read_to_string(&args.profile)
        .map_err(|e| CliError::Input(format!("cannot read profile {}: {e}", args.profile.display())))?;
    let mut profile: CorruptionProfile = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("invalid profile {}: {e}", args.profile.display())))?;
    profile.seed = config.seed(args.seed, profile.seed)?;
    let level = args.level.map(Into::into).or(config.level).unwrap_or_default();
    let records = select(&manifest, args.partition.or(config.partition));
    let hyps = simulate_hypotheses(records, &profile, level)?;
    let mut buf = Vec::new();
    write_hypotheses(&hyps, &mut buf)?;
    emit(args.out.as_deref(), &String::from_utf8_lossy(&buf))?;
    Ok(0)
}

fn report(args: &ReportArgs, config: &Config) -> Result<u8, CliError> {
    let plans = load_plans(&args.plans)?;
    let manifest = load_manifest_path(&args.manifest)?;
    let opts = score_options(args.level, args.missing, config);
    let mut table = ResultTable::default();
    for plan in &plans {
        let path = plan
            .hypotheses
            .as_deref()
            .ok_or_else(|| CliError::Domain(format!("plan `{}` names no hypotheses", plan.plan_id)))?;
        let hyps = load_hypotheses(path, None)?;
        check_known_ids(&manifest, &hyps)?;
        let row = run_experiment(plan, &manifest, &hyps, &opts)?;
        for issue in row.consistency_issues(1e-9) {
            eprintln!("plan `{}`: {issue}", plan.plan_id);
        }
        if row.n_missing > 0 {
            eprintln!("plan `{}`: {} utterance(s) without hypotheses", plan.plan_id, row.n_missing);
        }
        table.push(row);
    }
    let chart_weights = args
        .chart_weights
        .or(config.chart_weights)
        .unwrap_or(FairnessWeights::BALANCED);
    std::fs::create_dir_all(&args.out_dir)?;
    let outputs = [
        ("md", emit_report(&table, ReportFormat::MarkdownTable)),
        ("csv", emit_report(&table, ReportFormat::Delimited)),
        ("svg", emit_fs_chart(&table, chart_weights)),
    ];
    for (ext, text) in outputs {
        let path = args.out_dir.join(format!("{}.{ext}", args.stem));
        emit(Some(&path), &text)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(0)
}
