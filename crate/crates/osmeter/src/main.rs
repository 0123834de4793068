use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use osmeter::config::RunConfig;
use osmeter::error::Error;
use osmeter::extract::ExtractOptions;
use osmeter::ingest;
use osmeter::model::ModelSpec;
use osmeter::pipeline;
use osmeter::table::Table;

#[derive(Parser)]
#[command(name = "osmeter", version, about = "Measure code and data availability in a full-text article corpus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse raw article documents into a normalized corpus.
    Ingest {
        /// Input file (.jsonl/.json/.xml) or directory.
        #[arg(long = "in")]
        input: PathBuf,
        /// Normalized corpus output (.jsonl or .csv).
        #[arg(long)]
        out: PathBuf,
        /// Exclusion report CSV.
        #[arg(long)]
        exclusions: Option<PathBuf>,
    },
    /// Fit LDA topics and assign one topic per paper.
    Topics {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 15)]
        k: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        /// Dirichlet document-topic concentration; 0 selects 50/k.
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.01)]
        beta: f64,
        #[arg(long)]
        out: PathBuf,
        /// Serialized model state (JSON).
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Extract availability features via the configured provider.
    Extract {
        #[arg(long)]
        corpus: PathBuf,
        /// stub or live.
        #[arg(long, default_value = "stub")]
        provider: String,
        /// Canned responses for the stub provider.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Live endpoint URL (provider = live).
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "stub")]
        model_id: String,
        #[arg(long, default_value_t = 0.0)]
        temperature: f64,
    },
    /// Extract, canonize, classify, and optionally liveness-check links.
    AuditLinks {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// on or off.
        #[arg(long, default_value = "off")]
        validate: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble the relational analysis tables with integrity checks.
    Build {
        /// Directory holding corpus.jsonl, features.jsonl, links.csv, topics.csv.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Reference date (YYYY-MM-DD) anchoring paper age; default today.
        #[arg(long)]
        reference_date: Option<chrono::NaiveDate>,
    },
    /// Inter-rater agreement between human labels and the pipeline.
    Agree {
        #[arg(long)]
        labels: PathBuf,
        /// features.jsonl produced by extract.
        #[arg(long)]
        llm: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate a logit model from a spec file.
    Model {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the whole pipeline from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> osmeter::Result<()> {
    match cli.command {
        Command::Ingest {
            input,
            out,
            exclusions,
        } => {
            let outcome = pipeline::stage_ingest(&input, &out, exclusions.as_deref())?;
            println!(
                "ingested {} records, excluded {}",
                outcome.records.len(),
                outcome.exclusions.len()
            );
            Ok(())
        }
        Command::Topics {
            corpus,
            k,
            seed,
            iters,
            alpha,
            beta,
            out,
            state,
        } => {
            let records = ingest::load_corpus(&corpus)?.records;
            let alpha = if alpha > 0.0 { alpha } else { 50.0 / k as f64 };
            let (model, _) = pipeline::stage_topics(
                &records,
                k,
                alpha,
                beta,
                seed,
                iters,
                5,
                &out,
                state.as_deref(),
            )?;
            println!("fitted {} topics over {} documents", model.k, records.len());
            Ok(())
        }
        Command::Extract {
            corpus,
            provider,
            fixtures,
            endpoint,
            cache,
            out,
            model_id,
            temperature,
        } => {
            let records = ingest::load_corpus(&corpus)?.records;
            let provider: Box<dyn osmeter::extract::Provider> = match provider.as_str() {
                "stub" => {
                    let path = fixtures.ok_or_else(|| {
                        Error::Config("--fixtures is required with --provider stub".into())
                    })?;
                    Box::new(osmeter::extract::StubProvider::from_file(&path)?)
                }
                "live" => {
                    let endpoint = endpoint.ok_or_else(|| {
                        Error::Config("--endpoint is required with --provider live".into())
                    })?;
                    Box::new(osmeter::extract::HttpProvider::new(
                        &endpoint,
                        "OSMETER_API_KEY",
                        std::time::Duration::from_secs(60),
                    ))
                }
                other => return Err(Error::Config(format!("unknown provider {other}"))),
            };
            let options = ExtractOptions {
                model_id,
                temperature,
                ..ExtractOptions::default()
            };
            let features =
                pipeline::stage_extract(&records, provider.as_ref(), &cache, &options, 0, &out)?;
            let incomplete = features
                .iter()
                .filter(|f| !f.incomplete_templates.is_empty())
                .count();
            println!(
                "extracted features for {} papers ({} with incomplete templates)",
                features.len(),
                incomplete
            );
            Ok(())
        }
        Command::AuditLinks {
            corpus,
            features,
            validate,
            out,
        } => {
            let records = ingest::load_corpus(&corpus)?.records;
            let features = osmeter::extract::read_features_jsonl(&features)?;
            let policy = (validate == "on").then(osmeter::links::ValidationPolicy::default);
            let (links, _) =
                pipeline::stage_audit_links(&records, &features, policy.as_ref(), &out)?;
            println!("audited {} links", links.len());
            Ok(())
        }
        Command::Build {
            input,
            out,
            reference_date,
        } => {
            let records = ingest::load_corpus(&input.join("corpus.jsonl"))?.records;
            let features = osmeter::extract::read_features_jsonl(&input.join("features.jsonl"))?;
            let topics = pipeline::read_topics_csv(&input.join("topics.csv"))?;
            let (links, counts) =
                osmeter::links::audit_corpus(&records, &features, None);
            let reference = reference_date.unwrap_or_else(|| chrono::Utc::now().date_naive());
            let (tables, report) = pipeline::stage_build(
                &records, &features, &links, &counts, &topics, reference, &out,
            )?;
            println!(
                "built tables: {} papers, {} artifacts, {} links ({} integrity violations)",
                tables.paper_table.n_rows(),
                tables.artifact_table.n_rows(),
                tables.link_table.n_rows(),
                report.violations.len()
            );
            if report.errors() > 0 {
                return Err(Error::Integrity(format!(
                    "{} integrity error(s)",
                    report.errors()
                )));
            }
            Ok(())
        }
        Command::Agree { labels, llm, out } => {
            let features = osmeter::extract::read_features_jsonl(&llm)?;
            let outcome = pipeline::stage_agree(&labels, &features, &out)?;
            println!("agreement over {} features", outcome.per_feature.len());
            Ok(())
        }
        Command::Model { table, spec, out } => {
            let table = Table::read_csv(&table)?;
            let raw = std::fs::read_to_string(&spec).map_err(|e| Error::io(&spec, e))?;
            let spec = ModelSpec::from_toml(&raw)?;
            let result = pipeline::stage_model(&table, &spec, &out)?;
            println!(
                "estimated {} parameters, L = {:.4}, converged = {}",
                result.k, result.loglik_final, result.converged
            );
            Ok(())
        }
        Command::Run { config } => {
            let config = RunConfig::from_file(&config)?;
            let artifacts = pipeline::run_all(&config)?;
            println!(
                "pipeline complete: {} papers in the analysis table, outputs in {}",
                artifacts.tables.paper_table.n_rows(),
                config.run.out_dir.display()
            );
            Ok(())
        }
    }
}
