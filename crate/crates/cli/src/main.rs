//! Command-line front end.
//!
//! Exit codes: 0 success, 1 other failure, 2 invalid input document or arguments,
//! 3 reducible endomorphism without `--relative-auto`, 4 move budget exhausted.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use traintrack::dynamics::{atoroidal_scan, classify_growth, enumerate_nielsen_paths, flare_certificate, verify_flare};
use traintrack::gates::{constants, constants_at_power, gate_structure};
use traintrack::io::{decimal, document, parse_family, parse_input, to_value, EndomorphismDoc};
use traintrack::maps::{is_irreducible, rose_representative, transition_matrix, GraphMap, Irreducibility};
use traintrack::moves::{train_track_with, DriverOptions, TrainTrack, DEFAULT_BUDGET};
use traintrack::parabolic::{
    check_strictly_type_preserving, find_invariant_factor_system, parabolic_orbits, transversality_constant,
    ParabolicFamily,
};
use traintrack::spectral::DEFAULT_TOL;
use traintrack::{Endomorphism, Error};

const EXIT_FAILURE: u8 = 1;
const EXIT_SCHEMA: u8 = 2;
const EXIT_REDUCIBLE: u8 = 3;
const EXIT_BUDGET: u8 = 4;

/// Depth of the invariant free factor search under `--relative-auto`.
const FACTOR_DEPTH: u32 = 3;
const NIELSEN_PERIOD: u32 = 4;
const ORBIT_STEPS: usize = 10;
const FLARE_VERIFY_SAMPLES: usize = 500;

#[derive(Parser)]
#[command(name = "traintrack", version, about = "Train tracks and flaring certificates for free group endomorphisms")]
#[command(after_help = "Exit codes: 0 success, 1 other failure, 2 invalid input, 3 reducible without --relative-auto, 4 budget exhausted.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a train track representative.
    Traintrack(Common),
    /// Train track plus constants, gates, Nielsen paths, growth and optional scans.
    Analyze(Analyze),
}

#[derive(Args)]
struct Common {
    /// Endomorphism document, or a report containing one.
    input: PathBuf,
    /// Maximum number of moves.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
    /// Eigenvalue tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// On a reducible input, search for an invariant free factor instead of failing.
    #[arg(long)]
    relative_auto: bool,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Analyze {
    #[command(flatten)]
    common: Common,
    /// Family document `{"subgroups": [[word, ...], ...]}`.
    #[arg(long)]
    family: Option<PathBuf>,
    /// Iterates examined when classifying growth.
    #[arg(long, default_value_t = 12)]
    horizon: usize,
    /// Elements whose growth is classified; defaults to the generators.
    #[arg(long = "word")]
    words: Vec<String>,
    /// Flaring certificate with constant LAMBDA, M up to M_MAX, classes up to length L.
    #[arg(long, num_args = 3, value_names = ["LAMBDA", "M_MAX", "L"])]
    flare: Option<Vec<f64>>,
    /// Atoroidality scan up to power K, exponent D and length L.
    #[arg(long, num_args = 3, value_names = ["K", "D", "L"])]
    atoroidal: Option<Vec<u32>>,
    /// Seed for randomized re-verification.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Process exit with the report written so far, if any.
struct Failure {
    code: u8,
    report: Option<Value>,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Schema(_) => EXIT_SCHEMA,
            Error::BudgetExhausted { .. } => EXIT_BUDGET,
            Error::NotIrreducible { .. } => EXIT_REDUCIBLE,
            _ => EXIT_FAILURE,
        };
        Failure { code, report: None, message: e.to_string() }
    }
}

fn error_kind(e: &Error) -> String {
    let s = format!("{e:?}");
    s.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
}

fn error_value(e: &Error) -> Value {
    json!({ "error": error_kind(e), "message": e.to_string() })
}

fn section<T: serde::Serialize>(r: Result<T, Error>) -> Value {
    match r {
        Ok(x) => to_value(&x),
        Err(e) => error_value(&e),
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_SCHEMA,
        report: None,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn emit(report: &Value, out: &Option<PathBuf>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(report).expect("reports serialize") + "\n";
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure {
            code: EXIT_FAILURE,
            report: None,
            message: format!("cannot write {}: {e}", p.display()),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn family_value(phi: &Endomorphism, family: &ParabolicFamily) -> Value {
    let a = phi.alphabet();
    json!(family.generators.iter().map(|g| g.iter().map(|w| a.format(w)).collect::<Vec<_>>()).collect::<Vec<_>>())
}

/// Reducibility section: the invariant petals of the rose, and the factor search when asked.
fn reducible_section(phi: &Endomorphism, e: &Error, relative_auto: bool) -> Value {
    let a = phi.alphabet();
    let rose = rose_representative(phi);
    let witness = match is_irreducible(&transition_matrix(&rose)) {
        Ok(Irreducibility::Reducible { witness }) => json!(witness.iter().map(|&i| a.names()[i].clone()).collect::<Vec<_>>()),
        _ => match e {
            Error::NotIrreducible { witness } => json!({ "edges": witness.iter().map(|i| i + 1).collect::<Vec<_>>() }),
            _ => Value::Null,
        },
    };
    let mut v = json!({ "error": error_kind(e), "message": e.to_string(), "witness": witness });
    if relative_auto {
        v["factor_search"] = match find_invariant_factor_system(phi, FACTOR_DEPTH) {
            Ok(s) => json!({
                "family": s.family.as_ref().map(|f| family_value(phi, f)),
                "chain": to_value(&s.chain),
            }),
            Err(e) => error_value(&e),
        };
    }
    v
}

fn train_track_section(tt: &TrainTrack) -> Value {
    json!({
        "lambda": decimal(tt.perron.lambda),
        "lambda_radius": decimal(tt.perron.radius),
        "map": to_value(&tt.map),
        "moves": to_value(&tt.log.moves),
    })
}

/// Runs the driver; a reducible input is a soft failure only under `--relative-auto`.
fn drive(phi: &Endomorphism, c: &Common) -> Result<Result<TrainTrack, Value>, Failure> {
    match train_track_with(phi, DriverOptions { budget: c.budget, tol: c.tol }) {
        Ok(tt) => Ok(Ok(tt)),
        Err(e @ Error::NotIrreducible { .. }) => {
            let section = reducible_section(phi, &e, c.relative_auto);
            if c.relative_auto {
                Ok(Err(section))
            } else {
                let report = document("traintrack", vec![
                    ("endomorphism", json!(EndomorphismDoc::from_endomorphism(phi))),
                    ("reducible", section),
                ]);
                Err(Failure { code: EXIT_REDUCIBLE, report: Some(report), message: e.to_string() })
            }
        }
        Err(e) => {
            let report = document("traintrack", vec![
                ("endomorphism", json!(EndomorphismDoc::from_endomorphism(phi))),
                ("traintrack", error_value(&e)),
            ]);
            Err(Failure { report: Some(report), ..Failure::from(e) })
        }
    }
}

fn cmd_traintrack(c: &Common) -> Result<(), Failure> {
    let phi = parse_input(&read(&c.input)?)?;
    let mut sections = vec![("endomorphism", json!(EndomorphismDoc::from_endomorphism(&phi)))];
    match drive(&phi, c)? {
        Ok(tt) => sections.push(("traintrack", train_track_section(&tt))),
        Err(reducible) => sections.push(("reducible", reducible)),
    }
    emit(&document("traintrack", sections), &c.out)
}

fn cmd_analyze(a: &Analyze) -> Result<(), Failure> {
    let c = &a.common;
    let phi = parse_input(&read(&c.input)?)?;
    let alphabet = phi.alphabet().clone();
    let family = match &a.family {
        Some(p) => parse_family(&read(p)?, &alphabet)?,
        None => ParabolicFamily::empty(alphabet.clone()),
    };
    let mut sections = vec![("endomorphism", json!(EndomorphismDoc::from_endomorphism(&phi)))];
    if !family.is_empty() {
        sections.push(("family", family_value(&phi, &family)));
    }
    let driven = drive(&phi, c)?;
    let rep: GraphMap = match &driven {
        Ok(tt) => tt.map.clone(),
        Err(_) => rose_representative(&phi),
    };
    match driven {
        Ok(tt) => {
            sections.push(("traintrack", train_track_section(&tt)));
            let gates = gate_structure(&tt.map);
            sections.push(("gates", section(gates.clone().map(|g| g.gates))));
            let c_tr = match (&gates, family.is_empty()) {
                (_, true) => Ok(1.0),
                (Ok(g), false) => transversality_constant(&tt.map, &family, g),
                (Err(e), false) => Err(e.clone()),
            }
            .map_err(|e| (e, 1.0));
            let consts = match c_tr.and_then(|t| constants(&tt.map, t).map_err(|e| (e, t))) {
                Ok(k) => to_value(&k),
                // The constants of f itself are still informative when no power qualifies.
                Err((e @ Error::PowerBudgetExhausted(_), t)) => {
                    let mut v = error_value(&e);
                    v["unraised"] = section(constants_at_power(&tt.map, 1, t));
                    v
                }
                Err((e, _)) => error_value(&e),
            };
            sections.push(("constants", consts));
            sections.push(("nielsen", section(enumerate_nielsen_paths(&tt.map, NIELSEN_PERIOD))));
        }
        Err(reducible) => sections.push(("reducible", reducible)),
    }

    let words = if a.words.is_empty() { alphabet.names().to_vec() } else { a.words.clone() };
    let growth: Vec<Value> = words
        .iter()
        .map(|w| {
            let verdict = alphabet.parse(w).and_then(|g| classify_growth(&rep, &g, a.horizon));
            json!({ "word": w, "verdict": section(verdict) })
        })
        .collect();
    sections.push(("growth", Value::Array(growth)));

    if let Some(v) = &a.atoroidal {
        let (k, d, l) = (v[0], v[1], v[2] as usize);
        let w = atoroidal_scan(&phi, k, d, l);
        sections.push(("atoroidal", json!({
            "bounds": { "k": k, "d": d, "len": l },
            "witness": w.map(|w| json!({
                "g": alphabet.format(&w.g), "k": w.k, "d": w.d, "baumslag_solitar": w.baumslag_solitar,
            })),
        })));
    }

    if !family.is_empty() {
        sections.push(("type_preservation", to_value(&check_strictly_type_preserving(&phi, &family))));
        sections.push(("parabolic_orbits", section(parabolic_orbits(&phi, &family, ORBIT_STEPS))));
    }

    if let Some(v) = &a.flare {
        let (lambda, m_max, len) = (v[0], v[1] as u32, v[2] as usize);
        let cert = flare_certificate(&rep, &family, lambda, m_max, len);
        let value = match cert {
            Ok(cert) => {
                let mut value = to_value(&cert);
                if cert.is_valid() {
                    value["verification"] = section(
                        verify_flare(&cert, &rep, &family, FLARE_VERIFY_SAMPLES, a.seed)
                            .map(|bad| json!({ "samples": FLARE_VERIFY_SAMPLES, "seed": a.seed, "violations": to_value(&bad) })),
                    );
                }
                value
            }
            Err(e) => error_value(&e),
        };
        sections.push(("flare", value));
    }
    emit(&document("analysis", sections), &c.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (out, result) = match &cli.command {
        Command::Traintrack(c) => (&c.out, cmd_traintrack(c)),
        Command::Analyze(a) => (&a.common.out, cmd_analyze(a)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(r) = &f.report {
                if let Err(e) = emit(r, out) {
                    eprintln!("error: {}", e.message);
                }
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
