use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context as _};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use plf::formula::{self, Formula};
use plf::kripke::{solve_depth1, Depth1Problem, Exclusion, KripkeModel, SatResult, UnsatCore};
use plf::plfcheck::{plf_feasible, validate_extended_table, FriendOutcomes, Verdict};
use plf::quantum::{self, ProbTable};
use plf::scenario::{
    check_pns, encode, forbidden_clause_index, Behavior, Cell, HardyEvent, ScenarioConfig,
};

const EXIT_OK: u8 = 0;
const EXIT_NEGATIVE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

#[derive(Parser)]
#[command(
    name = "plf",
    version,
    about = "Possibilistic Local Friendliness checker"
)]
struct Cli {
    /// Print a machine-readable run report instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a formula and echo it in canonical form.
    Parse {
        formula: String,
        /// Also print the syntax tree.
        #[arg(long)]
        ast: bool,
    },
    /// Evaluate a formula at a world of a Kripke model.
    Eval {
        model: PathBuf,
        /// `WORLD FORMULA`, or just `FORMULA` with `--validity`.
        #[arg(num_args = 1..=2, required = true)]
        args: Vec<String>,
        /// Check the formula at every world instead.
        #[arg(long)]
        validity: bool,
    },
    /// Check a behavior file (`-` reads stdin).
    Check {
        behavior: String,
        #[arg(long, value_enum, default_value_t = Mode::Plf)]
        mode: Mode,
        /// Write the verdict (witness or trace) as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the Hardy model and its possibilistic behavior.
    Hardy {
        #[arg(long, default_value_t = quantum::DEFAULT_EPSILON)]
        epsilon: f64,
        /// Directory for the probability table and behavior files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce the no-go argument end to end.
    Prove {
        /// Only relax this impossibility and print the witness worlds.
        #[arg(long, value_parser = parse_droppable)]
        drop: Option<HardyEvent>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Pns,
    Plf,
    Modal,
}

fn parse_droppable(s: &str) -> Result<HardyEvent, String> {
    match s.parse::<HardyEvent>() {
        Ok(e) if e != HardyEvent::E1 => Ok(e),
        _ => Err(format!("expected E2, E3 or E4, got {s:?}")),
    }
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    /// SHA-256 of every input read, keyed by path (`-` for stdin).
    inputs: BTreeMap<String, String>,
    verdicts: Value,
    exit_code: u8,
}

/// Result of a command before it is printed.
struct Outcome {
    exit_code: u8,
    text: String,
    verdicts: Value,
}

#[derive(Default)]
struct Inputs(BTreeMap<String, String>);

impl Inputs {
    fn read(&mut self, path: &str) -> anyhow::Result<String> {
        let text = if path == "-" {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .context("cannot read stdin")?;
            s
        } else {
            std::fs::read_to_string(path).with_context(|| format!("cannot read {path}"))?
        };
        self.0.insert(
            path.to_string(),
            format!("{:x}", Sha256::digest(text.as_bytes())),
        );
        Ok(text)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = match &cli.command {
        Command::Parse { .. } => "parse",
        Command::Eval { .. } => "eval",
        Command::Check { .. } => "check",
        Command::Hardy { .. } => "hardy",
        Command::Prove { .. } => "prove",
    };
    let mut inputs = Inputs::default();
    let outcome = match run(&cli, &mut inputs) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            Outcome {
                exit_code: EXIT_INPUT,
                text: String::new(),
                verdicts: json!({ "error": format!("{e:#}") }),
            }
        }
    };
    if cli.json {
        let report = RunReport {
            command: name.to_string(),
            inputs: inputs.0,
            verdicts: outcome.verdicts,
            exit_code: outcome.exit_code,
        };
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        );
    } else {
        print!("{}", outcome.text);
    }
    ExitCode::from(outcome.exit_code)
}

fn run(cli: &Cli, inputs: &mut Inputs) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Parse { formula, ast } => cmd_parse(formula, *ast),
        Command::Eval {
            model,
            args,
            validity,
        } => cmd_eval(inputs, model, args, *validity),
        Command::Check {
            behavior,
            mode,
            out,
        } => cmd_check(inputs, behavior, *mode, out.as_deref()),
        Command::Hardy { epsilon, out } => cmd_hardy(*epsilon, out.as_deref(), cli.json),
        Command::Prove { drop } => cmd_prove(*drop),
    }
}

fn parse_formula(text: &str) -> anyhow::Result<Formula> {
    formula::parse(text).map_err(|e| {
        let caret = format!("{}^", " ".repeat(e.offset));
        anyhow!("{e}\n  {text}\n  {caret}")
    })
}

fn cmd_parse(text: &str, ast: bool) -> anyhow::Result<Outcome> {
    let f = parse_formula(text)?;
    let rendered = formula::render(&f);
    let tree = serde_json::to_value(&f).expect("formula serializes");
    let mut out = format!("{rendered}\n");
    if ast {
        let _ = writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&tree).expect("formula serializes")
        );
    }
    Ok(Outcome {
        exit_code: EXIT_OK,
        text: out,
        verdicts: json!({
            "formula": rendered,
            "modal_depth": f.modal_depth(),
            "ast": tree,
        }),
    })
}

fn cmd_eval(
    inputs: &mut Inputs,
    path: &Path,
    args: &[String],
    validity: bool,
) -> anyhow::Result<Outcome> {
    let (world, text) = match (validity, args) {
        (true, [f]) => (None, f),
        (false, [w, f]) => (Some(w.as_str()), f),
        (true, _) => bail!("with --validity give only the formula"),
        (false, _) => bail!("expected WORLD and FORMULA"),
    };
    let model = KripkeModel::from_json(&inputs.read(&path.to_string_lossy())?)
        .with_context(|| format!("invalid model {}", path.display()))?;
    let f = parse_formula(text)?;
    let (value, failing) = match world {
        Some(w) => (model.evaluate(w, &f)?, Vec::new()),
        None => {
            let failing: Vec<&str> = model
                .worlds()
                .iter()
                .map(String::as_str)
                .filter(|w| !model.evaluate(w, &f).expect("listed world"))
                .collect();
            (failing.is_empty(), failing)
        }
    };
    let mut text = format!("{value}\n");
    if !failing.is_empty() {
        let _ = writeln!(text, "fails at: {}", failing.join(", "));
    }
    Ok(Outcome {
        exit_code: if value { EXIT_OK } else { EXIT_NEGATIVE },
        text,
        verdicts: json!({
            "formula": formula::render(&f),
            "world": world,
            "validity": validity,
            "value": value,
            "failing_worlds": failing,
        }),
    })
}

fn verdict_json(v: &Verdict) -> Value {
    json!({
        "feasible": v.feasible,
        "witness": v.witness.as_ref().map(|w| w.to_json()),
        "trace": v.trace.as_ref().map(|t| t.to_json()),
    })
}

fn exclusion_json(e: &Exclusion) -> Value {
    match e {
        Exclusion::MustAll(i) => json!({ "kind": "must_all", "clause": i }),
        Exclusion::Forbidden(i) => json!({ "kind": "forbidden", "clause": i }),
        Exclusion::Deflated(s) => json!({ "kind": "deflated", "step": s }),
    }
}

fn sat_json(problem: &Depth1Problem, result: &SatResult) -> Value {
    match result {
        SatResult::Model(m) => json!({
            "sat": true,
            "worlds": m.points().iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        }),
        SatResult::Unsat(core) => json!({
            "sat": false,
            "required": core.required,
            "formula": formula::render(&core.formula),
            "candidates": core.candidates.iter().map(|e| json!({
                "world": e.point.to_string(),
                "exclusion": exclusion_json(&e.exclusion),
            })).collect::<Vec<_>>(),
            "chain": core.chain.iter().map(|s| json!({
                "sequence": s.sequence,
                "clause": s.clause,
                "formula": formula::render(&problem.constraints()[s.clause].to_formula()),
                "removed": s.removed.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        }),
    }
}

fn core_text(problem: &Depth1Problem, core: &UnsatCore) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "no accessible world can satisfy {}",
        formula::render(&core.formula)
    );
    for e in &core.candidates {
        let why = match e.exclusion {
            Exclusion::MustAll(i) => {
                format!(
                    "violates {}",
                    formula::render(&problem.constraints()[i].to_formula())
                )
            }
            Exclusion::Forbidden(i) => {
                format!(
                    "is ruled out by {}",
                    formula::render(&problem.constraints()[i].to_formula())
                )
            }
            Exclusion::Deflated(s) => format!("was removed at step {s}"),
        };
        let _ = writeln!(out, "  {} {why}", e.point);
    }
    let _ = writeln!(
        out,
        "  ({} agency steps in the removal chain)",
        core.chain.len()
    );
    out
}

/// Runs the table route and the modal route, cross-checking both against
/// their own certificates and against each other.
fn dual_route(beh: &Behavior) -> Result<(Verdict, Depth1Problem, SatResult), String> {
    let verdict = plf_feasible(beh);
    if let Some(w) = &verdict.witness {
        match validate_extended_table(w, beh) {
            Ok(true) => {}
            other => return Err(format!("table witness fails validation: {other:?}")),
        }
    }
    if let Some(t) = &verdict.trace {
        t.replay(beh)
            .map_err(|e| format!("proof trace fails replay: {e}"))?;
    }
    let problem = encode(beh);
    let result = solve_depth1(&problem);
    if let Some(m) = result.model() {
        let failing = m.recheck(&problem);
        if !failing.is_empty() {
            return Err(format!(
                "modal model fails re-evaluation of {}",
                formula::render(&failing[0])
            ));
        }
    }
    if verdict.feasible != result.is_sat() {
        return Err(format!(
            "table route says {}, modal route says {}",
            if verdict.feasible {
                "feasible"
            } else {
                "infeasible"
            },
            if result.is_sat() { "sat" } else { "unsat" }
        ));
    }
    Ok((verdict, problem, result))
}

fn mismatch(diagnostic: String) -> Outcome {
    eprintln!("internal mismatch: {diagnostic}");
    Outcome {
        exit_code: EXIT_MISMATCH,
        text: String::new(),
        verdicts: json!({ "mismatch": diagnostic }),
    }
}

fn cmd_check(
    inputs: &mut Inputs,
    path: &str,
    mode: Mode,
    out: Option<&Path>,
) -> anyhow::Result<Outcome> {
    let beh = Behavior::from_json(&inputs.read(path)?)
        .with_context(|| format!("invalid behavior {path}"))?;
    let mut text = String::new();

    let (exit_code, verdicts, file) = match mode {
        Mode::Pns => {
            let report = check_pns(&beh);
            let _ = writeln!(text, "{}", if report.holds { "holds" } else { "violated" });
            for v in &report.violations {
                let _ = writeln!(
                    text,
                    "  {} outcome {}: possible={} at (x,y)={:?}, possible={} at (x,y)={:?}",
                    v.party, v.outcome, v.possible[0], v.contexts[0], v.possible[1], v.contexts[1]
                );
            }
            let value = serde_json::to_value(&report).expect("report serializes");
            let code = if report.holds { EXIT_OK } else { EXIT_NEGATIVE };
            (code, json!({ "pns": value }), value)
        }
        Mode::Plf | Mode::Modal => {
            let (verdict, problem, result) = match dual_route(&beh) {
                Ok(r) => r,
                Err(d) => return Ok(mismatch(d)),
            };
            let table = verdict_json(&verdict);
            let modal = sat_json(&problem, &result);
            let code = if verdict.feasible {
                EXIT_OK
            } else {
                EXIT_NEGATIVE
            };
            if mode == Mode::Plf {
                let _ = writeln!(
                    text,
                    "{}",
                    if verdict.feasible {
                        "feasible"
                    } else {
                        "infeasible"
                    }
                );
                if let Some(t) = &verdict.trace {
                    text.push_str(&t.to_text());
                }
                let _ = writeln!(
                    text,
                    "modal route agrees ({})",
                    if result.is_sat() { "sat" } else { "unsat" }
                );
                (
                    code,
                    json!({ "plf": table, "modal_sat": result.is_sat() }),
                    table,
                )
            } else {
                let _ = writeln!(text, "{}", if result.is_sat() { "sat" } else { "unsat" });
                match &result {
                    SatResult::Model(m) => {
                        let _ = writeln!(text, "{} accessible worlds", m.points().len());
                    }
                    SatResult::Unsat(core) => text.push_str(&core_text(&problem, core)),
                }
                let _ = writeln!(
                    text,
                    "table route agrees ({})",
                    if verdict.feasible {
                        "feasible"
                    } else {
                        "infeasible"
                    }
                );
                (
                    code,
                    json!({ "modal": modal, "plf_feasible": verdict.feasible }),
                    modal,
                )
            }
        }
    };

    if let Some(out) = out {
        write_json(out, &file)?;
        let _ = writeln!(text, "wrote {}", out.display());
    }
    Ok(Outcome {
        exit_code,
        text,
        verdicts,
    })
}

fn write_json(path: &Path, value: &Value) -> anyhow::Result<()> {
    let body = serde_json::to_string_pretty(value).expect("value serializes");
    std::fs::write(path, body + "\n").with_context(|| format!("cannot write {}", path.display()))
}

fn format_probability(p: f64) -> String {
    let s = format!("{:.6}", p.max(0.0));
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn headline(table: &ProbTable) -> String {
    [
        HardyEvent::E4,
        HardyEvent::E2,
        HardyEvent::E3,
        HardyEvent::E1,
    ]
    .iter()
    .map(|e| {
        let c = e.cell();
        let p = table.get(c).expect("default domain");
        format!(
            "P({},{}|{},{})={}",
            c.a,
            c.b,
            c.x,
            c.y,
            format_probability(p)
        )
    })
    .collect::<Vec<_>>()
    .join("  ")
}

fn cmd_hardy(epsilon: f64, out: Option<&Path>, json: bool) -> anyhow::Result<Outcome> {
    let beh = quantum::hardy_behavior(epsilon)?;
    let table = quantum::born_table(&quantum::hardy_state(), &ScenarioConfig::default())?;
    let head = headline(&table);
    let probs_json = table.to_json();
    let beh_json = beh.to_json();
    let mut verdicts = json!({
        "epsilon": epsilon,
        "headline": head,
        "impossible": beh.impossible_cells().iter().map(|c| [c.a, c.b, c.x, c.y]).collect::<Vec<_>>(),
    });

    let text = match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("cannot create {}", dir.display()))?;
            let probs = dir.join("hardy_probs.json");
            let behavior = dir.join("hardy_behavior.json");
            std::fs::write(&probs, probs_json + "\n")
                .with_context(|| format!("cannot write {}", probs.display()))?;
            std::fs::write(&behavior, beh_json + "\n")
                .with_context(|| format!("cannot write {}", behavior.display()))?;
            verdicts["files"] =
                json!([probs.display().to_string(), behavior.display().to_string()]);
            format!(
                "{head}\nwrote {}\nwrote {}\n",
                probs.display(),
                behavior.display()
            )
        }
        None => {
            if json {
                verdicts["behavior"] = serde_json::from_str(&beh_json).expect("valid json");
                verdicts["probabilities"] = serde_json::from_str(&probs_json).expect("valid json");
            } else {
                eprintln!("{head}");
            }
            beh_json + "\n"
        }
    };
    Ok(Outcome {
        exit_code: EXIT_OK,
        text,
        verdicts,
    })
}

/// The world the argument uses to refute a given `(c, d)`: `w2` flips `X`
/// to the reading setting, `w3` flips `Y`, `w4` flips both.
fn refuting_world(friends: FriendOutcomes, event: HardyEvent) -> Option<(&'static str, Cell)> {
    let (c, d) = (friends.c?, friends.d?);
    match event {
        HardyEvent::E2 => Some(("w2", Cell::new(c, 1, 1, 2))),
        HardyEvent::E3 => Some(("w3", Cell::new(1, d, 2, 1))),
        HardyEvent::E4 => Some(("w4", Cell::new(c, d, 1, 1))),
        HardyEvent::E1 => None,
    }
}

fn cmd_prove(drop: Option<HardyEvent>) -> anyhow::Result<Outcome> {
    let mut text = String::new();
    let mut ok = true;
    let mut fail = |text: &mut String, msg: String| {
        let _ = writeln!(text, "EXPECTATION FAILED: {msg}");
        ok = false;
    };

    let beh = quantum::hardy_behavior(quantum::DEFAULT_EPSILON)?;
    let _ = writeln!(
        text,
        "Hardy behavior: impossible cells {}",
        beh.impossible_cells()
            .iter()
            .map(Cell::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    );
    let pns = check_pns(&beh);
    let _ = writeln!(
        text,
        "possibilistic no-signalling: {}",
        if pns.holds { "holds" } else { "violated" }
    );
    if !pns.holds {
        fail(&mut text, "PNS should hold".into());
    }

    let (verdict, problem, result) = match dual_route(&beh) {
        Ok(r) => r,
        Err(d) => return Ok(mismatch(d)),
    };
    let counts = problem
        .constraints()
        .iter()
        .fold(BTreeMap::new(), |mut m, c| {
            *m.entry(c.kind()).or_insert(0usize) += 1;
            m
        });
    let _ = writeln!(
        text,
        "\nModal route: {} clauses ({}) over {} valuations",
        problem.constraints().len(),
        counts
            .iter()
            .map(|(k, n)| format!("{n} {k}"))
            .collect::<Vec<_>>()
            .join(", "),
        problem.grid().len()
    );
    match &result {
        SatResult::Unsat(core) => {
            let _ = writeln!(text, "unsat");
            text.push_str(&core_text(&problem, core));
        }
        SatResult::Model(_) => fail(&mut text, "modal route should be unsat".into()),
    }

    let _ = writeln!(
        text,
        "\nTable route: {}",
        if verdict.feasible {
            "feasible"
        } else {
            "infeasible"
        }
    );
    let mut cases = Vec::new();
    match &verdict.trace {
        Some(trace) => {
            let _ = writeln!(
                text,
                "w1: {} is possible, so some accessible world w1 has it with some C=c, D=d.",
                trace.target
            );
            let _ = writeln!(
                text,
                "w2, w3, w4: agency keeps C, D and the far outcome while switching X, Y, or both, to 1."
            );
            for branch in &trace.branches {
                let cited: Vec<HardyEvent> = branch
                    .steps
                    .iter()
                    .flat_map(|s| s.support.iter())
                    .filter(|(_, fate)| matches!(fate, plf::plfcheck::CellFate::Impossible))
                    .filter_map(|(cell, _)| HardyEvent::of_cell(*cell))
                    .collect();
                let used = cited
                    .first()
                    .and_then(|&e| refuting_world(branch.friends, e).map(|w| (e, w)));
                match used {
                    Some((event, (world, cell))) if cell == event.cell() => {
                        let _ = writeln!(
                            text,
                            "  {}: {world} reads {cell}, which is {event}, excluded by ~<>{event}",
                            branch.friends
                        );
                        cases.push(json!({
                            "friends": branch.friends.to_string(),
                            "world": world,
                            "event": event.to_string(),
                        }));
                    }
                    _ => fail(
                        &mut text,
                        format!("no refuting world for {}", branch.friends),
                    ),
                }
            }
            let _ = writeln!(text, "\nDetailed eliminations:");
            text.push_str(&trace.to_text());
        }
        None => fail(&mut text, "table route should be infeasible".into()),
    }

    let relaxed_events: Vec<HardyEvent> = match drop {
        Some(e) => vec![e],
        None => HardyEvent::IMPOSSIBLE.to_vec(),
    };
    let _ = writeln!(text, "\nRelaxations:");
    let mut relaxations = Vec::new();
    for event in relaxed_events {
        let idx = forbidden_clause_index(&problem, event.cell()).expect("hardy encodes every zero");
        let relaxed = problem.without(idx);
        let result = solve_depth1(&relaxed);
        match result.model() {
            Some(m) => {
                let failing = m.recheck(&relaxed);
                let _ = writeln!(
                    text,
                    "  without ~<>{event}: sat with {} worlds, re-evaluation {}",
                    m.points().len(),
                    if failing.is_empty() {
                        "confirms every formula"
                    } else {
                        "FAILS"
                    }
                );
                if !failing.is_empty() {
                    fail(
                        &mut text,
                        format!("witness without ~<>{event} fails re-evaluation"),
                    );
                }
                if drop.is_some() {
                    for p in m.points() {
                        let _ = writeln!(text, "    {p}");
                    }
                }
                relaxations.push(json!({
                    "dropped": event.to_string(),
                    "sat": true,
                    "rechecked": failing.is_empty(),
                    "worlds": m.points().iter().map(|p| p.to_string()).collect::<Vec<_>>(),
                }));
            }
            None => {
                fail(
                    &mut text,
                    format!("dropping ~<>{event} should make the problem sat"),
                );
                relaxations.push(json!({ "dropped": event.to_string(), "sat": false }));
            }
        }
    }

    Ok(Outcome {
        exit_code: if ok { EXIT_OK } else { EXIT_NEGATIVE },
        text,
        verdicts: json!({
            "pns_holds": pns.holds,
            "modal": sat_json(&problem, &result),
            "plf_feasible": verdict.feasible,
            "cases": cases,
            "relaxations": relaxations,
        }),
    })
}
