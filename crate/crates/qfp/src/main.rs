use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qfp::artifacts::{self, out_path, Manifest};
use qfp::config::ExperimentConfig;
use qfp::pipeline::{self, domain, ModelFile};
use qfp::{verify, HarnessError};
use qfp_core::defense::gen_key;
use qfp_core::serialize::{emit_json, emit_qasm, parse_json, parse_qasm};
use qfp_core::Circuit;
use qfp_learn::SplitIndices;

#[derive(Parser)]
#[command(
    name = "qfp",
    version,
    about = "Encoding fingerprinting experiments and obfuscation defense"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --set n_qubits=4. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate circuits, fingerprints and the manifest.
    Gen(Common),
    /// Split, scale and train the classifier.
    Train(Common),
    /// Evaluate the trained classifier on the test split.
    Eval(Common),
    /// Run gen/train/eval for each qubit count in scaling_qubits.
    Scaling(Common),
    /// Score the trained classifier on defended circuits and report depth overhead.
    DefenseEval {
        #[command(flatten)]
        common: Common,
        /// Also train a fresh adversary on defended circuits.
        #[arg(long)]
        retrain_adversary: bool,
    },
    /// Insert the obfuscation layer between an encoder and a PQC.
    Defend {
        /// Encoder circuit (.json or .qasm). With --boundary, the whole circuit.
        #[arg(long)]
        encoding: PathBuf,
        /// PQC circuit file.
        #[arg(
            long,
            conflicts_with = "boundary",
            required_unless_present = "boundary"
        )]
        pqc: Option<PathBuf>,
        /// Split `--encoding` at this instruction index instead of reading --pqc.
        #[arg(long)]
        boundary: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path stem; writes <out>.json and <out>.qasm.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the oracle property suites.
    Verify(Common),
}

fn load(common: &Common) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => {
            let mut c = ExperimentConfig::default();
            c.apply_env()?;
            c
        }
    };
    for o in &common.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("override `{o}` is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = common.seed {
        cfg.base_seed = s;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if let Some(d) = &common.output_dir {
        cfg.output_dir = d.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_circuit(path: &PathBuf) -> Result<Circuit, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let is_qasm = path.extension().is_some_and(|e| e == "qasm");
    let parsed = if is_qasm {
        parse_qasm(&text)
    } else {
        parse_json(&text)
    };
    parsed.map_err(|e| HarnessError::Format {
        path: path.clone(),
        message: e.to_string(),
    })
}

fn load_model(cfg: &ExperimentConfig) -> Result<ModelFile, HarnessError> {
    let model: ModelFile = artifacts::read_json(&out_path(cfg, artifacts::MODEL))?;
    if model.registry_version != cfg.registry_version || model.n_qubits != cfg.n_qubits {
        return Err(HarnessError::Config(format!(
            "model was trained for n_qubits={} registry v{}, config has n_qubits={} registry v{}",
            model.n_qubits, model.registry_version, cfg.n_qubits, cfg.registry_version
        )));
    }
    Ok(model)
}

fn run(cmd: Command) -> Result<(), HarnessError> {
    match cmd {
        Command::Gen(common) => {
            let cfg = load(&common)?;
            let ds = pipeline::generate_dataset(&cfg)?;
            artifacts::write_dataset_csv(&out_path(&cfg, artifacts::DATASET), &ds)?;
            artifacts::write_circuits(&out_path(&cfg, artifacts::CIRCUITS), &ds)?;
            let manifest = Manifest::for_dataset(&cfg, &ds);
            artifacts::write_json(&out_path(&cfg, artifacts::MANIFEST), &manifest)?;
            println!(
                "wrote {} rows, {} features",
                ds.len(),
                ds.feature_names.len()
            );
        }
        Command::Train(common) => {
            let cfg = load(&common)?;
            let manifest: Manifest = artifacts::read_json(&out_path(&cfg, artifacts::MANIFEST))?;
            manifest.check(&cfg)?;
            let ds = artifacts::read_dataset_csv(&out_path(&cfg, artifacts::DATASET))?;
            let t = pipeline::train_on(&ds, &cfg, domain::TRAIN)?;
            artifacts::write_json(&out_path(&cfg, artifacts::MODEL), &t.model)?;
            artifacts::write_json(&out_path(&cfg, artifacts::SPLIT), &t.split)?;
            artifacts::write_json(&out_path(&cfg, artifacts::TRAIN_REPORT), &t.report)?;
            artifacts::write_curves(&out_path(&cfg, artifacts::CURVES), &t.report)?;
            if let Some(last) = t.report.epochs.last() {
                println!(
                    "epoch {}: train loss {:.4}, val accuracy {:.4}",
                    last.epoch, last.train_loss, last.val_accuracy
                );
            }
        }
        Command::Eval(common) => {
            let cfg = load(&common)?;
            let model = load_model(&cfg)?;
            let split: SplitIndices = artifacts::read_json(&out_path(&cfg, artifacts::SPLIT))?;
            let ds = artifacts::read_dataset_csv(&out_path(&cfg, artifacts::DATASET))?;
            if split.test.iter().any(|&i| i >= ds.len()) {
                return Err(HarnessError::Config(
                    "split does not match dataset; rerun `train`".into(),
                ));
            }
            let v = ds.view(&split.test);
            let report = model.evaluate(&v.rows, &v.labels)?;
            artifacts::write_json(&out_path(&cfg, artifacts::EVAL_JSON), &report)?;
            artifacts::write_text(&out_path(&cfg, artifacts::EVAL_TXT), &report.table())?;
            print!("{}", report.table());
        }
        Command::Scaling(common) => {
            let cfg = load(&common)?;
            let rows = pipeline::scaling(&cfg)?;
            artifacts::write_scaling(&out_path(&cfg, artifacts::SCALING), &rows)?;
            for r in &rows {
                println!(
                    "n={:<3} features={:<4} accuracy={:.4}",
                    r.n_qubits, r.n_features, r.test_accuracy
                );
            }
        }
        Command::DefenseEval {
            common,
            retrain_adversary,
        } => {
            let mut cfg = load(&common)?;
            cfg.retrain_adversary |= retrain_adversary;
            let model = load_model(&cfg)?;
            let report = pipeline::defense_eval(&cfg, &model)?;
            artifacts::write_json(&out_path(&cfg, artifacts::DEFENSE_JSON), &report)?;
            artifacts::write_text(&out_path(&cfg, artifacts::DEFENSE_TXT), &report.table())?;
            print!("{}", report.table());
        }
        Command::Defend {
            encoding,
            pqc,
            boundary,
            seed,
            out,
        } => {
            let enc = read_circuit(&encoding)?;
            let (enc, pqc) = match (boundary, pqc) {
                (Some(k), _) => split_at(&enc, k)?,
                (None, Some(p)) => (enc, read_circuit(&p)?),
                (None, None) => unreachable!("clap requires one of them"),
            };
            let key = gen_key(enc.n_qubits(), seed);
            let defended = qfp_core::defense::defend(&enc, &pqc, &key)?;
            artifacts::write_text(&out.with_extension("json"), &emit_json(&defended))?;
            artifacts::write_text(&out.with_extension("qasm"), &emit_qasm(&defended))?;
            println!("key seed {seed}");
        }
        Command::Verify(common) => {
            let cfg = load(&common)?;
            let report = verify::verify_all(&cfg)?;
            print!("{}", report.text());
            if !report.passed() {
                return Err(HarnessError::Verification(
                    report
                        .suites
                        .iter()
                        .filter(|s| !s.passed)
                        .map(|s| s.name.clone())
                        .collect::<Vec<_>>()
                        .join(", "),
                ));
            }
        }
    }
    Ok(())
}

fn split_at(c: &Circuit, k: usize) -> Result<(Circuit, Circuit), HarnessError> {
    if k > c.len() {
        return Err(HarnessError::Config(format!(
            "boundary {k} is past the end of a {}-instruction circuit",
            c.len()
        )));
    }
    let (a, b) = c.instructions().split_at(k);
    let mut enc = Circuit::from_instructions(c.n_qubits(), a.to_vec())
        .map_err(qfp_core::EncodeError::from)?;
    enc.label = c.label;
    enc.meta = c.meta.clone();
    let pqc = Circuit::from_instructions(c.n_qubits(), b.to_vec())
        .map_err(qfp_core::EncodeError::from)?;
    Ok((enc, pqc))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
