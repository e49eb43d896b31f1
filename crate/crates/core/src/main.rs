use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use sgsynth::io::{
    graph_to_json, graph_to_value, parse_graph, parse_ruleset, parse_schedule, read_file, ruleset_to_json,
    write_file, FormatError,
};
use sgsynth::iso::canonical_form;
use sgsynth::rewrite::{find_matchings, normalize, RewriteSystem};
use sgsynth::signature::{parse_signature, parse_valuation, Signature, Valuation};
use sgsynth::synth::{kappa, run_synthesis, sort_schedule, Mode, SynthesisOptions};
use sgsynth::tensor::{evaluate, DEFAULT_MAX_ENTRIES};

#[derive(Parser)]
#[command(name = "sgsynth", version, about = "String graph rewriting and rule synthesis")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Parser)]
struct ProjectArgs {
    /// Project directory holding signature.json, valuation.json and schedule.json.
    #[arg(long, default_value = ".")]
    project: PathBuf,
    /// Signature file (defaults to the project's).
    #[arg(long)]
    signature: Option<PathBuf>,
    /// Valuation file (defaults to the project's).
    #[arg(long)]
    valuation: Option<PathBuf>,
}

impl ProjectArgs {
    fn signature(&self) -> Result<Signature, CliError> {
        let path = self.signature.clone().unwrap_or_else(|| self.project.join("signature.json"));
        Ok(parse_signature(&read_file(&path)?).map_err(FormatError::from)?)
    }

    fn valuation(&self, sig: &Signature) -> Result<Valuation, CliError> {
        let path = self.valuation.clone().unwrap_or_else(|| self.project.join("valuation.json"));
        Ok(parse_valuation(&read_file(&path)?, sig).map_err(FormatError::from)?)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesise a rewrite system over the project's schedule.
    Synth {
        #[command(flatten)]
        project: ProjectArgs,
        /// Schedule file (defaults to the project's schedule.json).
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Output directory (defaults to PROJECT/out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also run the naive synthesis and report its counts.
        #[arg(long)]
        compare: bool,
        /// Enumerate naively instead of eliminating redexes.
        #[arg(long)]
        naive: bool,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Evaluate a graph as a tensor and print it as JSON.
    Eval {
        #[command(flatten)]
        project: ProjectArgs,
        graph: PathBuf,
    },
    /// Normalise a graph with a ruleset, or only contract its wires.
    Normalize {
        #[command(flatten)]
        project: ProjectArgs,
        graph: PathBuf,
        /// Ruleset file; required unless --wires-only.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        wires_only: bool,
        /// Where to write the normal form (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the matchings of a pattern graph on a host graph.
    Match {
        #[command(flatten)]
        project: ProjectArgs,
        pattern: PathBuf,
        host: PathBuf,
    },
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Runtime(String),
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn synth(
    project: &ProjectArgs,
    schedule: Option<PathBuf>,
    out: Option<PathBuf>,
    opts: SynthesisOptions,
) -> Result<(), CliError> {
    let sig = project.signature()?;
    let val = project.valuation(&sig)?;
    let schedule_path = schedule.unwrap_or_else(|| project.project.join("schedule.json"));
    let mut runs = parse_schedule(&read_file(&schedule_path)?)?;
    sort_schedule(&mut runs);
    let out = out.unwrap_or_else(|| project.project.join("out"));
    create_dir(&out)?;
    let res = run_synthesis(&runs, &RewriteSystem::new(), &sig, &val, &opts);

    write_file(&out.join("ruleset.json"), &ruleset_to_json(&res.system, &sig))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Runtime(e.to_string());
    w.write_record(["m", "n", "p", "q", "enumerated", "classes", "reductions", "congruences", "skipped", "naive_enumerated", "naive_reductions"])
        .map_err(csv_err)?;
    let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in &res.reports {
        let p = r.params;
        w.write_record([
            p.m.to_string(),
            p.n.to_string(),
            p.p.to_string(),
            p.q.to_string(),
            r.enumerated.to_string(),
            r.classes.to_string(),
            r.reductions.to_string(),
            r.congruences.to_string(),
            r.skipped.to_string(),
            opt(r.naive_enumerated),
            opt(r.naive_reductions),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&out.join("runs.csv"), &String::from_utf8(bytes).expect("csv is utf-8"))?;

    let mut log = String::new();
    for (i, r) in res.system.rules().iter().enumerate() {
        let run = r.run.map(|k| runs[k]);
        let _ = writeln!(
            log,
            "rule {i} {:?} run {} lhs {} rhs {} scalar {} {}",
            r.role,
            run.map(|p| format!("({},{},{},{})", p.m, p.n, p.p, p.q)).unwrap_or_else(|| "-".into()),
            canonical_form(r.rule.lhs()).digest(),
            canonical_form(r.rule.rhs()).digest(),
            r.rule.scalar().re,
            r.rule.scalar().im,
        );
    }
    write_file(&out.join("provenance.log"), &log)?;
    let mut timing = String::from("m,n,p,q,wall_ms\n");
    for r in &res.reports {
        let p = r.params;
        let _ = writeln!(timing, "{},{},{},{},{}", p.m, p.n, p.p, p.q, r.wall_ms);
    }
    write_file(&out.join("timing.csv"), &timing)?;

    let total: usize = res.reports.iter().map(|r| r.reductions + r.congruences).sum();
    println!("rules: {total}");
    if opts.compare {
        let naive: usize = res.reports.iter().filter_map(|r| r.naive_reductions).sum();
        println!("naive rules: {naive}");
    }
    Ok(())
}

fn eval(project: &ProjectArgs, graph: &Path) -> Result<(), CliError> {
    let sig = project.signature()?;
    let val = project.valuation(&sig)?;
    let g = parse_graph(&read_file(graph)?, &sig)?;
    let t = evaluate(&g, &sig, &val).map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("{}", serde_json::to_string_pretty(&t).expect("tensor serializes"));
    Ok(())
}

fn normalize_cmd(
    project: &ProjectArgs,
    graph: &Path,
    rules: Option<PathBuf>,
    wires_only: bool,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let sig = project.signature()?;
    let g = parse_graph(&read_file(graph)?, &sig)?;
    let (nf, trace) = if wires_only {
        (g.normalize_wires(), Vec::new())
    } else {
        let path = rules.ok_or_else(|| CliError::Validation("--rules is required unless --wires-only".into()))?;
        let s = parse_ruleset(&read_file(&path)?, &sig)?;
        for (i, r) in s.reductions() {
            if kappa(&r.lhs().normalize_wires()) <= kappa(&r.rhs().normalize_wires()) && !r.is_homeomorphism() {
                return Err(CliError::Validation(format!("reduction {i} does not decrease the ordering")));
            }
        }
        let n = normalize(&s, &g).map_err(|e| CliError::Runtime(e.to_string()))?;
        (n.graph, n.trace)
    };
    let trace: Vec<serde_json::Value> = trace
        .iter()
        .map(|t| serde_json::json!({"rule": t.rule, "host": t.host, "scalar": [t.scalar.re, t.scalar.im]}))
        .collect();
    match out {
        Some(path) => {
            write_file(&path, &graph_to_json(&nf, &sig))?;
            println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "trace": trace })).unwrap());
        }
        None => {
            let doc = serde_json::json!({ "graph": graph_to_value(&nf, &sig), "trace": trace });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
        }
    }
    Ok(())
}

fn match_cmd(project: &ProjectArgs, pattern: &Path, host: &Path) -> Result<(), CliError> {
    let sig = project.signature()?;
    let l = parse_graph(&read_file(pattern)?, &sig)?.normalize_wires();
    let g = parse_graph(&read_file(host)?, &sig)?.normalize_wires();
    let ms = find_matchings(&l, &g, None);
    let list: Vec<serde_json::Value> = ms
        .iter()
        .map(|m| {
            let map: serde_json::Map<String, serde_json::Value> = m
                .nodes
                .iter()
                .chain(&m.wires)
                .map(|(k, v)| (k.0.to_string(), serde_json::json!(v.0)))
                .collect();
            serde_json::Value::Object(map)
        })
        .collect();
    println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "count": ms.len(), "matchings": list })).unwrap());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Synth { project, schedule, out, compare, naive, workers, tolerance } => {
            let mode = if naive { Mode::Naive } else { Mode::RedexEliminating };
            info!("contraction cap {DEFAULT_MAX_ENTRIES} entries");
            synth(&project, schedule, out, SynthesisOptions { mode, tolerance, compare, workers })
        }
        Cmd::Eval { project, graph } => eval(&project, &graph),
        Cmd::Normalize { project, graph, rules, wires_only, out } => normalize_cmd(&project, &graph, rules, wires_only, out),
        Cmd::Match { project, pattern, host } => match_cmd(&project, &pattern, &host),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
