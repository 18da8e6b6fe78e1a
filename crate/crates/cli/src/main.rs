use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use chainlls::chain::{BundleKind, ComponentBundle, Summand};
use chainlls::json::{
    skeleton_from_json, to_canonical_json, to_canonical_line, SkeletonDocument, SCHEMA_VERSION,
};
use chainlls::ledger::{audit_equals_rho, skeleton_ledger, AuditVerdict};
use chainlls::params::{case_of, classify, hypothesis_checks, Params};
use chainlls::sweep::{run_sweep, Range, SweepConfig};
use chainlls::verify::{verify, Status, VerificationReport};
use chainlls::{construct, ClassifyError, ConstructError, LimitSeriesSkeleton};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "chainlls",
    version,
    about = "Limit linear series skeletons on chains of elliptic curves"
)]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Write output to PATH instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Add generation metadata outside the canonical JSON body.
    #[arg(long, global = true)]
    timestamps: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Classify, construct, verify and audit one tuple.
    Check(Tuple),
    /// Run the pipeline over a lattice of tuples.
    Sweep(Box<SweepArgs>),
    /// Write the canonical JSON skeleton of a tuple.
    Dump(Tuple),
    /// Read a skeleton file and verify it.
    VerifyFile { path: PathBuf },
}

#[derive(clap::Args)]
struct Tuple {
    #[arg(allow_negative_numbers = true)]
    g: i64,
    #[arg(allow_negative_numbers = true)]
    r: i64,
    #[arg(allow_negative_numbers = true)]
    d: i64,
    #[arg(allow_negative_numbers = true)]
    k: i64,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Genus range, e.g. `2..12`.
    #[arg(long, default_value = "2..12")]
    g: Range,
    #[arg(long, default_value = "1..5")]
    r: Range,
    /// May depend on r, e.g. `r+1..3r`.
    #[arg(long, default_value = "r+1..3r")]
    k: Range,
    /// May depend on r and g, e.g. `0..5rg`.
    #[arg(long, default_value = "0..5rg")]
    d: Range,
    /// Only tuples of this case (LargeSections, SmallA, SmallB, SmallC).
    #[arg(long, value_parser = parse_case)]
    case: Option<chainlls::CaseTag>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    fail_fast: bool,
    /// Cross-validate every skeleton against the exhaustive oracle.
    #[arg(long)]
    oracle: bool,
    /// Corrupt the skeleton of tuple G,R,D,K before verification (testing).
    #[arg(long, hide = true, value_parser = parse_tuple)]
    inject_corruption: Option<Params>,
}

fn parse_case(s: &str) -> Result<chainlls::CaseTag, String> {
    chainlls::CaseTag::parse(s).ok_or_else(|| format!("unknown case {s:?}"))
}

fn parse_tuple(s: &str) -> Result<Params, String> {
    let v: Vec<i64> = s
        .split(',')
        .map(|x| x.trim().parse::<i64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [g, r, d, k] => Params::new(g, r, d, k).map_err(|e| e.to_string()),
        _ => Err("expected G,R,D,K".into()),
    }
}

/// Output sink honoring `--out`.
fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn metadata() -> BTreeMap<String, String> {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    BTreeMap::from([
        ("generated_at_unix".to_string(), secs.to_string()),
        (
            "tool".to_string(),
            format!("chainlls {}", env!("CARGO_PKG_VERSION")),
        ),
    ])
}

fn summand_text(s: &Summand, d1: i64) -> String {
    match *s {
        Summand::Twisted { a, mult } => format!("O({a}P+{}Q)^{mult}", d1 - a),
        Summand::GenericLine { mult } => format!("L^{mult}"),
    }
}

fn bundle_text(b: &ComponentBundle, d1: i64) -> String {
    match &b.kind {
        BundleKind::FirstSpecial { h, rank, degree } => {
            format!("{h} indecomposable of rank {rank}, degree {degree}")
        }
        BundleKind::Mixed { summands } => summands
            .iter()
            .map(|s| summand_text(s, d1))
            .collect::<Vec<_>>()
            .join(" + "),
    }
}

fn status_text(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "FAIL",
        Status::Assumed => "assumed",
    }
}

fn report_text(rep: &VerificationReport, w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "verification:")?;
    for (name, c) in rep.checks() {
        write!(w, "  {name:<22} {}", status_text(c.status))?;
        match &c.witness {
            Some(wit) => writeln!(w, "  {wit}")?,
            None => writeln!(w)?,
        }
    }
    let overall = if rep.passed() {
        "pass (modulo genericity)"
    } else {
        "FAIL"
    };
    writeln!(w, "  overall: {overall}")
}

fn skeleton_text(s: &LimitSeriesSkeleton, w: &mut dyn Write) -> io::Result<()> {
    let d1 = s.decomposition.d1;
    writeln!(
        w,
        "construction: {} components, b = {}",
        s.chain.components, s.b
    )?;
    for (b, t) in s.bundles.iter().zip(&s.tables) {
        writeln!(
            w,
            "  C_{:<3} P {}  Q {}  E = {}",
            t.component,
            t.at_p,
            t.at_q,
            bundle_text(b, d1)
        )?;
    }
    Ok(())
}

fn audit_text(a: &AuditVerdict, w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "ledger:")?;
    write!(w, "{}", a.ledger.to_text())?;
    let rel = if a.matches { "=" } else { "≠" };
    writeln!(w, "ledger total {} {rel} rho {}", a.ledger_total, a.rho)
}

/// Readings the construction had to choose between.
fn notes(p: &Params, case: chainlls::CaseTag) -> Vec<String> {
    let dec = p.decompose();
    let mut out = Vec::new();
    if case == chainlls::CaseTag::LargeSections && dec.d2 != dec.k2 {
        out.push(format!(
            "top order {} of Q_{} taken with multiplicity k2 = {}, not d2 = {} (only k2 gives k sections)",
            dec.k1,
            p.g,
            dec.k2,
            dec.d2
        ));
    }
    out
}

fn classify_exit(e: &ClassifyError) -> u8 {
    match e {
        ClassifyError::KLeR { .. } | ClassifyError::HypothesisFailed { .. } => 2,
    }
}

fn cmd_check(cli: &Cli, t: &Tuple) -> Result<u8> {
    let mut w = open_out(&cli.out)?;
    let p = match Params::new(t.g, t.r, t.d, t.k) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(2);
        }
    };
    let dec = p.decompose();
    let classification = classify(&p);
    let mut code = 0;
    let mut doc = json!({
        "schema": SCHEMA_VERSION,
        "params": p,
        "decomposition": dec,
        "rho": p.rho(),
    });
    let text = cli.format == Format::Text;
    if text {
        writeln!(w, "tuple {p}")?;
        writeln!(
            w,
            "d = {}·{} + {}, k = {}·{} + {}, gcd(d, r) = {}",
            p.r, dec.d1, dec.d2, p.r, dec.k1, dec.k2, dec.h
        )?;
        writeln!(w, "rho {}", p.rho())?;
    }
    let classification = match classification {
        Ok(c) => c,
        Err(e) => {
            if text {
                if let ClassifyError::HypothesisFailed { case, .. } = &e {
                    writeln!(w, "case {case}")?;
                    writeln!(w, "hypotheses:")?;
                    for c in hypothesis_checks(&p, *case) {
                        writeln!(w, "  {c}")?;
                    }
                }
                writeln!(w, "not covered: {e}")?;
            } else {
                doc["error"] = json!(e.to_string());
                if matches!(e, ClassifyError::HypothesisFailed { .. }) {
                    doc["case"] = json!(case_of(&p));
                    doc["hypotheses"] = json!(hypothesis_checks(&p, case_of(&p)));
                }
                emit_json(cli, &mut doc, &mut w)?;
            }
            w.flush()?;
            eprintln!("{e}");
            return Ok(classify_exit(&e));
        }
    };
    let skeleton = construct(&p);
    let audit = audit_equals_rho(&p)?;
    if text {
        writeln!(w, "case {}", classification.case)?;
        writeln!(w, "hypotheses:")?;
        for c in &classification.checks {
            writeln!(w, "  {c}")?;
        }
    }
    doc["case"] = json!(classification.case);
    doc["hypotheses"] = json!(classification.checks);
    let notes = notes(&p, classification.case);
    if text {
        for n in &notes {
            writeln!(w, "note: {n}")?;
        }
    }
    doc["notes"] = json!(notes);
    match &skeleton {
        Ok(s) => {
            let rep = verify(s);
            let exact = rep.node_pairing_exact.passed();
            let per_component = skeleton_ledger(s).total();
            if !rep.passed() || !exact || per_component != audit.rho {
                code = 1;
            }
            if text {
                skeleton_text(s, &mut w)?;
                report_text(&rep, &mut w)?;
            }
            doc["construction"] = json!({
                "components": s.chain.components,
                "b": s.b,
            });
            doc["verification"] = serde_json::to_value(&rep)?;
            doc["per_component_ledger_total"] = json!(per_component);
        }
        Err(e) => {
            code = 1;
            if text {
                writeln!(w, "construction failed: {e}")?;
            }
            doc["construction_error"] = json!(e.to_string());
        }
    }
    if !audit.matches {
        code = 1;
    }
    if text {
        audit_text(&audit, &mut w)?;
        writeln!(w, "result: {}", if code == 0 { "pass" } else { "FAIL" })?;
    } else {
        doc["audit"] = serde_json::to_value(&audit)?;
        doc["passed"] = json!(code == 0);
        emit_json(cli, &mut doc, &mut w)?;
    }
    w.flush()?;
    Ok(code)
}

fn emit_json(cli: &Cli, doc: &mut Value, w: &mut dyn Write) -> Result<()> {
    if cli.timestamps {
        doc["metadata"] = json!(metadata());
    }
    w.write_all(to_canonical_json(doc)?.as_bytes())?;
    Ok(())
}

fn cmd_sweep(cli: &Cli, a: &SweepArgs) -> Result<u8> {
    let cfg = SweepConfig {
        g: a.g,
        r: a.r,
        k: a.k,
        d: a.d,
        case_filter: a.case,
        jobs: a.jobs,
        fail_fast: a.fail_fast,
        oracle: a.oracle,
        inject_corruption: a.inject_corruption,
        ..SweepConfig::default()
    };
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return Ok(2);
    }
    let mut w = open_out(&cli.out)?;
    let mut write_err: Option<io::Error> = None;
    let json = cli.format == Format::Json;
    let summary = run_sweep(&cfg, |o| {
        if write_err.is_some() {
            return;
        }
        let line = if json {
            to_canonical_line(&json!({ "schema": SCHEMA_VERSION, "tuple": o }))
                .expect("serializable")
        } else {
            o.to_text()
        };
        if let Err(e) = writeln!(w, "{line}") {
            write_err = Some(e);
        }
    })
    .map_err(anyhow::Error::msg)?;
    if let Some(e) = write_err {
        return Err(e).context("writing sweep output");
    }
    if json {
        let mut doc = json!({ "schema": SCHEMA_VERSION, "summary": summary });
        if cli.timestamps {
            doc["metadata"] = json!(metadata());
        }
        writeln!(w, "{}", to_canonical_line(&doc)?)?;
    } else {
        writeln!(w, "{}", summary.to_text())?;
    }
    w.flush()?;
    Ok(if summary.failures > 0 { 1 } else { 0 })
}

fn cmd_dump(cli: &Cli, t: &Tuple) -> Result<u8> {
    let p = match Params::new(t.g, t.r, t.d, t.k) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(2);
        }
    };
    let s = match construct(&p) {
        Ok(s) => s,
        Err(ConstructError::Classify(e)) => {
            eprintln!("{e}");
            return Ok(classify_exit(&e));
        }
        Err(e) => {
            eprintln!("construction failed: {e}");
            return Ok(1);
        }
    };
    let mut doc = SkeletonDocument::new(s);
    if cli.timestamps {
        doc.metadata = Some(metadata());
    }
    let text = to_canonical_json(&doc)?;
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(0)
}

fn cmd_verify_file(cli: &Cli, path: &Path) -> Result<u8> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let s =
        skeleton_from_json(&text).with_context(|| format!("cannot parse {}", path.display()))?;
    let rep = verify(&s);
    let mut w = open_out(&cli.out)?;
    match cli.format {
        Format::Text => {
            writeln!(
                w,
                "skeleton {} ({}) from {}",
                s.params,
                s.case,
                path.display()
            )?;
            report_text(&rep, &mut w)?;
        }
        Format::Json => {
            let mut doc = json!({
                "schema": SCHEMA_VERSION,
                "params": s.params,
                "verification": rep,
            });
            emit_json(cli, &mut doc, &mut w)?;
        }
    }
    w.flush()?;
    Ok(if rep.passed() { 0 } else { 1 })
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Check(t) => cmd_check(cli, t),
        Command::Sweep(a) => cmd_sweep(cli, a),
        Command::Dump(t) => cmd_dump(cli, t),
        Command::VerifyFile { path } => cmd_verify_file(cli, path),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
