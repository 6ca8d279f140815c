//! `cycaudit`: relative class numbers, class-number bounds, subfield
//! listings and congruence audits of class-number tables.
//!
//! Exit status: 0 success, 1 violations found, 2 input errors,
//! 3 internal failures (time limit, non-integral assembly).

use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use cyclotomic_audit::abelian::{self, AbelianFieldSpec};
use cyclotomic_audit::bounds::{self, BoundResult};
use cyclotomic_audit::classnum::{self, HminusOptions};
use cyclotomic_audit::tables::{self, AuditOptions, ParseOptions, ProbablePrimePolicy};
use cyclotomic_audit::Error;
use num_bigint::BigUint;

#[derive(Parser, Debug)]
#[command(name = "cycaudit", version, about = "Cyclotomic class numbers and congruence audits")]
struct Cli {
    /// Minimum working precision in bits for bound evaluation.
    #[arg(long, global = true, default_value_t = 128)]
    precision: u32,

    /// Treat probable primes in input records as errors.
    #[arg(long, global = true)]
    reject_probable_primes: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relative class number of Q(zeta_u), factored, with per-orbit norms.
    Hminus {
        u: u64,
        /// Wall-clock limit in seconds; 0 disables it.
        #[arg(long, default_value_t = 60)]
        time_limit: u64,
    },
    /// The class-number bound H_F for given |D_F| and [F:Q].
    Bound {
        #[arg(long)]
        disc: BigUint,
        #[arg(long)]
        m: u64,
    },
    /// Subfields of Q(zeta_u) with degree, conductor, |D| and H_F.
    Subfields { u: u64 },
    /// Audit a file of line-delimited class-number records.
    Audit {
        path: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Audit the built-in dataset.
    VerifyPaper {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

enum Failure {
    Input(String),
    Internal(String),
    /// Reader closed stdout early.
    Pipe,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotInteger { .. } | Error::TimeLimit { .. } => Failure::Internal(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = io::stdout().lock();
    let result = match &cli.command {
        Command::Hminus { u, time_limit } => cmd_hminus(&mut out, *u, *time_limit),
        Command::Bound { disc, m } => cmd_bound(&mut out, disc, *m, cli.precision),
        Command::Subfields { u } => cmd_subfields(&mut out, *u, cli.precision),
        Command::Audit { path, format } => cmd_audit(&mut out, path, *format, &cli),
        Command::VerifyPaper { format } => cmd_verify_paper(&mut out, *format),
    };
    let _ = out.flush();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal failure: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Pipe) => ExitCode::SUCCESS,
    }
}

fn io_err(e: io::Error) -> Failure {
    if e.kind() == io::ErrorKind::BrokenPipe {
        Failure::Pipe
    } else {
        Failure::Internal(format!("write failed: {e}"))
    }
}

fn cmd_hminus(out: &mut impl Write, u: u64, time_limit: u64) -> Outcome {
    let opts = HminusOptions {
        time_limit: (time_limit > 0).then(|| Duration::from_secs(time_limit)),
    };
    let h = classnum::relative_class_number_with(u, &opts)?;
    let value = h.value.to_string();
    let fact = h.factorization.to_string();
    if fact == value {
        writeln!(out, "h-({u}) = {value}").map_err(io_err)?;
    } else {
        writeln!(out, "h-({u}) = {value} = {fact}").map_err(io_err)?;
    }
    if h.modulus != u {
        writeln!(out, "computed for Q(zeta_{}) = Q(zeta_{u})", h.modulus).map_err(io_err)?;
    }
    writeln!(out, "Q = {}, w = {}", h.unit_index, h.roots_of_unity).map_err(io_err)?;
    for o in &h.orbit_norms {
        writeln!(
            out,
            "orbit {}: order {}, conductor {}, size {}, norm {}",
            o.id, o.order, o.conductor, o.size, o.norm
        )
        .map_err(io_err)?;
    }
    Ok(true)
}

fn bound_line(b: &BoundResult) -> String {
    if b.is_exact() {
        b.display_upper()
    } else {
        format!("{} (rounded up)", b.display_upper())
    }
}

fn cmd_bound(out: &mut impl Write, disc: &BigUint, m: u64, precision: u32) -> Outcome {
    let b = bounds::class_number_bound_with(disc, m, precision)?;
    writeln!(out, "H = {}", bound_line(&b)).map_err(io_err)?;
    if let Some(note) = &b.note {
        writeln!(out, "note: {note}").map_err(io_err)?;
    }
    Ok(true)
}

fn cmd_subfields(out: &mut impl Write, u: u64, precision: u32) -> Outcome {
    let list = abelian::subfields_with_limit(u, abelian::DEFAULT_SUBGROUP_LIMIT)?;
    if !list.complete {
        writeln!(out, "note: subgroup enumeration truncated; listing prime-index subfields only")
            .map_err(io_err)?;
    }
    writeln!(out, "{:>6}  {:>9}  {:<9}  {:<}  |  H_F", "degree", "conductor", "type", "D").map_err(io_err)?;
    for f in &list.fields {
        let h = match bounds::class_number_bound_with(f.abs_discriminant(), f.degree(), precision) {
            Ok(b) => bound_line(&b),
            Err(e) => format!("n/a ({e})"),
        };
        writeln!(
            out,
            "{:>6}  {:>9}  {:<9}  {}  |  {}",
            f.degree(),
            f.conductor(),
            kind(f),
            f.discriminant(),
            h
        )
        .map_err(io_err)?;
    }
    Ok(true)
}

fn kind(f: &AbelianFieldSpec) -> &'static str {
    if f.is_imaginary() {
        "imaginary"
    } else {
        "real"
    }
}

fn report(out: &mut impl Write, records: &[tables::ClassNumberRecord], format: Format) -> Outcome {
    let rep = tables::audit(records, &AuditOptions { parallel: true, subgroup_limit: None });
    let text = match format {
        Format::Text => rep.render_text(),
        Format::Structured => rep.render_jsonl(),
    };
    out.write_all(text.as_bytes()).map_err(io_err)?;
    if format == Format::Text {
        writeln!(out, "{} violations", rep.violations()).map_err(io_err)?;
    }
    Ok(rep.violations() == 0)
}

fn cmd_audit(out: &mut impl Write, path: &str, format: Format, cli: &Cli) -> Outcome {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{path}: {e}")))?;
    let opts = ParseOptions {
        probable_primes: if cli.reject_probable_primes {
            ProbablePrimePolicy::Reject
        } else {
            ProbablePrimePolicy::Allow
        },
    };
    let records = tables::parse_records_with(&text, &opts).map_err(|e| match e {
        Error::Parse { line, message } => Failure::Input(format!("{path}:{line}: {message}")),
        other => Failure::Input(other.to_string()),
    })?;
    report(out, &records, format)
}

fn cmd_verify_paper(out: &mut impl Write, format: Format) -> Outcome {
    report(out, &tables::builtin_paper_dataset(), format)
}
