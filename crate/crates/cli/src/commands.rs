use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use mdag_gof::estimate::{EstimateError, ObservedDataset};
use mdag_gof::gof::{
    test_block_parallel, test_sequential_mar, test_sequential_mnar, verify_crisscross_counterexample, GofError,
    ModelKind, TestReport, Verdict,
};
use mdag_gof::io::{read_csv, write_csv, IoError};
use mdag_gof::mdag::{
    classify_model, count_parameters, detect_structures, satisfied_classes, testability_verdict, Cardinality,
    IndependenceQuery, MDag, MDagError, TestabilityRoute,
};
use mdag_gof::simulate::{curve_csv, generate_dataset, run_study, theta_csv, CurvePoint, ScenarioConfig, SimError};

use crate::args::{Cli, Command, Format, GraphArgs, GraphOp, QueryArgs, SimulateArgs, TestArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl CliError {
    pub const USAGE: u8 = 64;
    pub const DATA: u8 = 65;
    pub const OUTPUT: u8 = 74;

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => Self::USAGE,
            CliError::Data(_) => Self::DATA,
            CliError::Output { .. } => Self::OUTPUT,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MDagError> for CliError {
    fn from(e: MDagError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

/// `println!` that tolerates a closed standard output.
macro_rules! out {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

pub const EXIT_REJECTED: u8 = 1;
pub const EXIT_INCONCLUSIVE: u8 = 2;

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Accepted => 0,
        Verdict::Rejected => EXIT_REJECTED,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

pub fn run(cli: Cli) -> Result<u8, CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        // fails only if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Graph { op } => cmd_graph(op),
        Command::VerifyCounterexample { format } => Ok(cmd_verify(format)),
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let res = match path {
        Some(p) => fs::write(p, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    res.map_err(|source| CliError::Output {
        path: path.map_or_else(|| "standard output".into(), |p| p.display().to_string()),
        source,
    })
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn load_data(path: &Path) -> Result<ObservedDataset, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(read_csv(std::io::BufReader::new(file))?)
}

fn load_graph(path: &Path) -> Result<(MDag, Option<Vec<usize>>), CliError> {
    let (g, order) = MDag::from_json(&read_text(path)?)?;
    let violations = g.validate();
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
        return Err(CliError::Data(format!("invalid graph:\n{}", lines.join("\n"))));
    }
    Ok((g, order))
}

fn cmd_test(a: TestArgs) -> Result<u8, CliError> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::Usage(format!("--alpha must lie in (0, 1), got {}", a.alpha)));
    }
    let model = ModelKind::from(a.model);
    let graph = match &a.graph {
        Some(p) if model == ModelKind::SeqMnar => Some(load_graph(p)?.0),
        Some(_) => return Err(CliError::Usage("--graph applies to seq-mnar only".into())),
        None => None,
    };
    let data = load_data(&a.input)?;
    let order = match (model, &a.order) {
        (ModelKind::BlockParallel, _) => None,
        (_, Some(o)) => Some(data.resolve_order(o)?),
        (_, None) => return Err(CliError::Usage(format!("--order is required for {model}"))),
    };
    let result = match model {
        ModelKind::SeqMar => test_sequential_mar(&data, order.as_deref().unwrap_or_default(), a.alpha),
        ModelKind::SeqMnar => test_sequential_mnar(&data, order.as_deref().unwrap_or_default(), a.alpha, graph.as_ref()),
        ModelKind::BlockParallel => {
            if a.bootstrap < 2 {
                return Err(CliError::Usage("--bootstrap must be at least 2".into()));
            }
            test_block_parallel(&data, a.alpha, a.bootstrap, resolve_seed(a.seed))
        }
    };
    let report: TestReport = match result {
        Ok(r) => r,
        Err(GofError::NotIdentified(rep)) => {
            eprintln!("refusing seq-mnar test: the graph has a colluder or criss-cross, so the statistic is not identified");
            for (x, rj, ri) in &rep.colluders {
                eprintln!("  colluder {x} -> {rj} <- {ri}");
            }
            for (a, b) in &rep.criss_crosses {
                eprintln!("  criss-cross between {a} and {b}");
            }
            return Ok(EXIT_INCONCLUSIVE);
        }
        Err(GofError::BadAlpha(x)) => return Err(CliError::Usage(format!("bad alpha {x}"))),
        Err(e) => return Err(CliError::Data(e.to_string())),
    };
    let mut json = report.to_json();
    json.push('\n');
    write_out(a.output.as_deref(), &json)?;
    eprintln!("verdict: {}", report.verdict);
    Ok(verdict_code(report.verdict))
}

fn cmd_simulate(a: SimulateArgs) -> Result<u8, CliError> {
    let seed = resolve_seed(a.seed);
    let config = ScenarioConfig {
        k: a.k,
        reps: a.reps,
        param_range: a.param_range,
        alpha: a.alpha,
        seed,
        n_bootstrap: a.bootstrap,
        ..ScenarioConfig::new(a.scenario, a.dist)
    };
    config.validate()?;
    if a.theta_output.is_some() && !a.scenario.is_block_parallel() {
        return Err(CliError::Usage("--theta-output applies to block-parallel scenarios only".into()));
    }
    if let Some(dir) = &a.emit_data {
        fs::create_dir_all(dir).map_err(|source| CliError::Output {
            path: dir.display().to_string(),
            source,
        })?;
    }
    let mut points = Vec::with_capacity(a.n_grid.0.len());
    let mut verdicts = String::from("n,replication,file,verdict\n");
    let mut last = None;
    for &n in &a.n_grid.0 {
        let cfg = ScenarioConfig { n, ..config.clone() };
        let study = run_study(&cfg)?;
        points.push(CurvePoint::from_study(&study));
        if let Some(dir) = &a.emit_data {
            for r in &study.replications {
                let name = format!("n{n}_rep{}.csv", r.index);
                let data = generate_dataset(&cfg, r.index as u64)?;
                let mut buf = Vec::new();
                write_csv(&data, &mut buf)?;
                let path = dir.join(&name);
                fs::write(&path, buf).map_err(|source| CliError::Output {
                    path: path.display().to_string(),
                    source,
                })?;
                verdicts.push_str(&format!("{n},{},{name},{}\n", r.index, r.verdict));
            }
        }
        last = Some(study);
    }
    if let Some(dir) = &a.emit_data {
        let path = dir.join("verdicts.csv");
        write_out(Some(&path), &verdicts)?;
    }
    if let (Some(path), Some(study)) = (&a.theta_output, &last) {
        write_out(Some(path), &theta_csv(study)?)?;
    }
    write_out(a.output.as_deref(), &curve_csv(&points)?)?;
    Ok(0)
}

fn print_json(v: &serde_json::Value) {
    out!("{}", serde_json::to_string_pretty(v).expect("json value"));
}

fn build_query(g: &MDag, q: &QueryArgs) -> Result<IndependenceQuery, CliError> {
    IndependenceQuery::parse(g, &q.x, &q.y, &q.given, &q.intervene).map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_graph(op: GraphOp) -> Result<u8, CliError> {
    match op {
        GraphOp::Dsep { graph, query } => {
            let (g, _) = load_graph(&graph.graph)?;
            let sep = g.d_separated(&build_query(&g, &query)?)?;
            if graph.json {
                print_json(&serde_json::json!({ "separated": sep }));
            } else {
                out!("{}", if sep { "separated" } else { "not separated" });
            }
        }
        GraphOp::Classify { graph, order } => {
            let (g, file_order) = load_graph(&graph.graph)?;
            let order = match order {
                Some(o) => g.resolve_order(&o).map_err(|e| CliError::Usage(e.to_string()))?,
                None => file_order.ok_or_else(|| CliError::Usage("--order is required when the graph file has none".into()))?,
            };
            let class = classify_model(&g, &order)?;
            let all = satisfied_classes(&g, &order)?;
            if graph.json {
                print_json(&serde_json::json!({ "class": class, "satisfied": all }));
            } else {
                out!("{class}");
                let names: Vec<&str> = all.iter().map(|c| c.as_str()).collect();
                out!("satisfied: {}", if names.is_empty() { "none".to_string() } else { names.join(", ") });
            }
        }
        GraphOp::Structures { graph } => structures(&graph)?,
        GraphOp::CountParams { graph, cardinalities } => {
            let (g, _) = load_graph(&graph.graph)?;
            let cards: Vec<Cardinality> = match cardinalities {
                Some(c) => c
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<_, MDagError>>()
                    .map_err(|e| CliError::Usage(e.to_string()))?,
                None => vec![Cardinality::Finite(2); g.k()],
            };
            let count = count_parameters(&g, &cards).map_err(|e| match e {
                MDagError::BadCardinality(_) => CliError::Usage(e.to_string()),
                other => CliError::Data(other.to_string()),
            })?;
            if graph.json {
                print_json(&serde_json::json!({
                    "full": count.full_law.to_string(),
                    "saturated": count.saturated_observed.to_string(),
                    "constrained": count.imposes_restrictions(),
                }));
            } else {
                out!(
                    "full={} saturated={} constrained={}",
                    count.full_law,
                    count.saturated_observed,
                    if count.imposes_restrictions() { "yes" } else { "no" }
                );
            }
        }
        GraphOp::Testability { graph, query } => {
            let (g, _) = load_graph(&graph.graph)?;
            let t = testability_verdict(&g, &build_query(&g, &query)?)?;
            if graph.json {
                print_json(&serde_json::to_value(&t).expect("testability json"));
            } else {
                out!("{}", t.verdict);
                match &t.route {
                    Some(TestabilityRoute::Condition(r)) => out!("route: condition on {}", r.join(", ")),
                    Some(TestabilityRoute::Fix(r)) => out!("route: fix {}", r.join(", ")),
                    Some(TestabilityRoute::OddsRatio) => out!("route: odds ratio"),
                    None => {}
                }
                out!("{}", t.reason);
            }
        }
    }
    Ok(0)
}

fn structures(graph: &GraphArgs) -> Result<(), CliError> {
    let (g, _) = load_graph(&graph.graph)?;
    let rep = detect_structures(&g);
    if graph.json {
        print_json(&serde_json::to_value(&rep).expect("structure json"));
        return Ok(());
    }
    if rep.is_empty() {
        out!("no structures found");
    }
    for (x, r) in &rep.self_censoring_edges {
        out!("self-censoring: {x} -> {r}");
    }
    for (x, rj, ri) in &rep.colluders {
        out!("colluder: {x} -> {rj} <- {ri}");
    }
    for (a, b) in &rep.criss_crosses {
        out!("criss-cross: {a}, {b}");
    }
    for path in &rep.colluding_paths {
        out!("colluding path: {}", path.join(" - "));
    }
    Ok(())
}

fn cmd_verify(format: Format) -> u8 {
    let rec = verify_crisscross_counterexample();
    match format {
        Format::Json => print_json(&serde_json::to_value(&rec).expect("record json")),
        Format::Text => {
            out!("p(X1=0): M1 = {}, M2 = {}", rec.m1_p_x1_zero, rec.m2_p_x1_zero);
            out!();
            out!("full laws");
            out!("{:<4}{:<4}{:<4}{:<4}{:>12}{:>14}", "R1", "R2", "X1", "X2", "M1", "M2");
            for r in &rec.full_laws {
                out!(
                    "{:<4}{:<4}{:<4}{:<4}{:>12}{:>14}",
                    r.r1,
                    r.r2,
                    r.x1,
                    r.x2,
                    r.m1.to_string(),
                    r.m2.to_string()
                );
            }
            out!();
            out!("shared observed law");
            let cell = |v: Option<usize>| v.map_or_else(|| "?".to_string(), |v| v.to_string());
            for o in &rec.observed_law {
                out!(
                    "p(R1={},R2={},X*1={},X*2={}) = {}",
                    o.r1,
                    o.r2,
                    cell(o.x1_star),
                    cell(o.x2_star),
                    o.p
                );
            }
            out!();
            for (name, ok) in &rec.checks {
                out!("[{}] {name}", if *ok { "ok" } else { "FAIL" });
            }
            out!("{}", if rec.passed { "PASS" } else { "FAIL" });
        }
    }
    if rec.passed {
        0
    } else {
        1
    }
}
