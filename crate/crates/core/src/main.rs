use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rayless::error::Error;
use rayless::pipeline::{run_analyze, run_homology, run_synth_only, run_validate, PipelineOptions};

/// Discrete Morse matchings on finite and periodic graded posets: validation,
/// ray reversal, Morse complexes, and exact integer homology.
#[derive(Parser)]
#[command(name = "rayless", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// extra pattern rows to materialize beyond the sound minimum
    #[arg(long, default_value_t = 3)]
    window: u64,
    /// step budget for descent and flow computations
    #[arg(long)]
    budget: Option<usize>,
    /// also write the JSON report to this file
    #[arg(long)]
    json: Option<PathBuf>,
    /// include wall-clock timing in the report (off by default so identical
    /// inputs give byte-identical reports)
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check gradedness, matching validity, acyclicity, and raylessness
    Validate {
        poset: PathBuf,
        matching: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Run the whole pipeline: rays, reversal, Morse complex, homology,
    /// inequalities
    Analyze {
        poset: PathBuf,
        matching: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Reverse all ray classes and write the rayless matching (and, if the
    /// pattern was re-blocked, the new poset presentation)
    Reverse {
        poset: PathBuf,
        matching: PathBuf,
        /// write the resulting poset file here
        #[arg(long)]
        out_poset: Option<PathBuf>,
        /// write the resulting matching file here
        #[arg(long)]
        out_match: Option<PathBuf>,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Emit the Morse complex (generators with provenance, sparse boundary
    /// matrices)
    Morse {
        poset: PathBuf,
        matching: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Homology of a finite poset's cellular complex, or of a truncated
    /// window of a periodic poset
    Homology {
        poset: PathBuf,
        /// rows to materialize for periodic posets
        #[arg(long)]
        truncate: Option<u64>,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Synthesize a self-indexing Morse function and verify it
    Synth {
        poset: PathBuf,
        matching: PathBuf,
        /// reverse rays first instead of refusing non-rayless input
        #[arg(long)]
        reverse_first: bool,
        /// write the function as `cell num/den` lines to this file
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Write a built-in example's poset, matching, and expected-report files
    Example {
        name: String,
        /// output directory
        #[arg(long, default_value = ".")]
        dir: PathBuf,
    },
}

fn options(opts: &CommonOpts, reverse_first: bool) -> PipelineOptions {
    PipelineOptions {
        window: opts.window,
        budget: opts.budget,
        reverse_first,
        with_timing: opts.timing,
    }
}

fn read(path: &PathBuf) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::parse(0, 0, format!("{}: {e}", path.display())))
}

fn emit(json: &str, out: &Option<PathBuf>) -> Result<(), Error> {
    println!("{json}");
    if let Some(path) = out {
        fs::write(path, json)
            .map_err(|e| Error::parse(0, 0, format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn run() -> Result<i32, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate {
            poset,
            matching,
            opts,
        } => {
            let (report, code) =
                run_validate(&read(&poset)?, &read(&matching)?, options(&opts, false))?;
            emit(&report.to_json(), &opts.json)?;
            Ok(code)
        }
        Command::Analyze {
            poset,
            matching,
            opts,
        } => {
            let (report, code) =
                run_analyze(&read(&poset)?, &read(&matching)?, options(&opts, false))?;
            emit(&report.to_json(), &opts.json)?;
            Ok(code)
        }
        Command::Reverse {
            poset,
            matching,
            out_poset,
            out_match,
            opts,
        } => {
            let (report, code) =
                run_analyze(&read(&poset)?, &read(&matching)?, options(&opts, false))?;
            if code == 0 {
                if let (Some(text), Some(path)) = (&report.reversed_poset, &out_poset) {
                    fs::write(path, text)
                        .map_err(|e| Error::parse(0, 0, format!("{}: {e}", path.display())))?;
                }
                if let (Some(text), Some(path)) = (&report.reversed_matching, &out_match) {
                    fs::write(path, text)
                        .map_err(|e| Error::parse(0, 0, format!("{}: {e}", path.display())))?;
                }
            }
            emit(&report.to_json(), &opts.json)?;
            Ok(code)
        }
        Command::Morse {
            poset,
            matching,
            opts,
        } => {
            let (report, code) =
                run_analyze(&read(&poset)?, &read(&matching)?, options(&opts, false))?;
            match (&report.morse_complex, code) {
                (Some(complex), 0) => {
                    let json = serde_json::to_string_pretty(complex).expect("serializable");
                    emit(&json, &opts.json)?;
                }
                _ => emit(&report.to_json(), &opts.json)?,
            }
            Ok(code)
        }
        Command::Homology {
            poset,
            truncate,
            opts,
        } => {
            let (cellular, simplicial) =
                run_homology(&read(&poset)?, truncate, options(&opts, false))?;
            let json = serde_json::to_string_pretty(&serde_json::json!({
                "cellular": cellular,
                "simplicial_order_complex": simplicial,
            }))
            .expect("serializable");
            emit(&json, &opts.json)?;
            Ok(0)
        }
        Command::Synth {
            poset,
            matching,
            reverse_first,
            out,
            opts,
        } => {
            let (report, code) = run_synth_only(
                &read(&poset)?,
                &read(&matching)?,
                options(&opts, reverse_first),
            )?;
            if let (Some(mf), Some(path)) = (&report.morse_function, &out) {
                let mut text = String::new();
                for (cell, value, _, _, _) in &mf.values {
                    text.push_str(&format!("{cell} {value}\n"));
                }
                fs::write(path, text)
                    .map_err(|e| Error::parse(0, 0, format!("{}: {e}", path.display())))?;
            }
            emit(&report.to_json(), &opts.json)?;
            Ok(code)
        }
        Command::Example { name, dir } => {
            let ex = rayless::builtins::generate(&name)?;
            fs::create_dir_all(&dir)
                .map_err(|e| Error::parse(0, 0, format!("{}: {e}", dir.display())))?;
            let write = |suffix: &str, text: &str| -> Result<(), Error> {
                let path = dir.join(format!("{name}.{suffix}"));
                fs::write(&path, text)
                    .map_err(|e| Error::parse(0, 0, format!("{}: {e}", path.display())))?;
                println!("wrote {}", path.display());
                Ok(())
            };
            write("poset", &ex.poset_text)?;
            write("match", &ex.matching_text)?;
            write(
                "expected.json",
                &serde_json::to_string_pretty(&ex.expected).expect("serializable"),
            )?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
