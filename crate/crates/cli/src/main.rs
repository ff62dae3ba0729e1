//! `forcelab`: queries against finite symmetric systems.
//!
//! Exit status is 0 when the query holds or the check passes, 1 when it
//! fails, and 2 on any error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use forcelab_core::extension::{self, Status};
use forcelab_core::families;
use forcelab_core::logic::{self, Assignment, QuantifierBound};
use forcelab_core::niceness::{self, PretameOutcome, SearchScope};
use forcelab_core::{sysfile, Caps, Cond, CondSet, Error, Mode, NameId, Rel, Result, Universe};

#[derive(Parser)]
#[command(name = "forcelab", version, about = "Forcing over finite symmetric systems")]
struct Cli {
    #[command(flatten)]
    input: Input,
    /// Emit one JSON report object per line.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// System file to load.
    #[arg(long, global = true, conflicts_with = "family")]
    system: Option<PathBuf>,
    /// Built-in family: SYS-A, SYS-A0, SYS-B or SYS-C.
    #[arg(long, global = true)]
    family: Option<String>,
    /// Family parameter `key=value`, repeatable.
    #[arg(long = "param", global = true, value_parser = parse_kv_usize)]
    params: Vec<(String, usize)>,
}

#[derive(Args)]
struct Query {
    #[arg(long)]
    p: String,
    #[arg(long)]
    x: String,
    #[arg(long)]
    rel: String,
    #[arg(long)]
    y: String,
}

#[derive(Args)]
struct FormulaArgs {
    /// Formula in the ASCII syntax.
    #[arg(long)]
    phi: String,
    /// Variable binding `var=name`, repeatable.
    #[arg(long = "bind", value_parser = parse_kv)]
    binds: Vec<(String, String)>,
    /// Rank bound for set quantifiers.
    #[arg(long, default_value_t = 2)]
    cutoff: usize,
    /// Comma-separated conditions bounding the quantifier universe.
    #[arg(long)]
    b: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the system.
    CheckSystem,
    /// Decide p ⊩ x R y by the recursive definition.
    Atomic {
        #[command(flatten)]
        q: Query,
        /// Allow names that are not hereditarily symmetric.
        #[arg(long)]
        plain: bool,
    },
    /// Decide p ⊩wit x R y by the witness fixed point.
    Witness {
        #[command(flatten)]
        q: Query,
        /// Print the certificate when the relation holds.
        #[arg(long)]
        emit_certificate: bool,
    },
    /// Decide p ⊩ φ.
    Forces {
        #[arg(long)]
        p: String,
        #[command(flatten)]
        f: FormulaArgs,
    },
    /// List the generic filters.
    Generics,
    /// Check both directions of the truth lemma for φ.
    TruthCheck {
        #[command(flatten)]
        f: FormulaArgs,
    },
    /// Check axiom instances over a list of parameter names.
    Axioms {
        /// Comma-separated parameter names; defaults to the declared ones.
        #[arg(long)]
        names: Option<String>,
        /// Comprehension formula in `x` with parameter `v`, repeatable.
        #[arg(long = "comprehension")]
        comprehension: Vec<String>,
        #[arg(long, default_value_t = 2)]
        cutoff: usize,
    },
    /// Search for a pretameness witness for a registered dense family.
    Pretame {
        #[arg(long)]
        family_dense: String,
        #[arg(long)]
        p: String,
        /// Largest allowed |d_i|.
        #[arg(long)]
        cap: usize,
        /// Only try q = p.
        #[arg(long)]
        at_p: bool,
        /// Build the symmetric refinement instead.
        #[arg(long)]
        symmetric: bool,
    },
    /// Check that every condition set has a symmetric superset.
    Stratified {
        #[arg(long, default_value_t = 4096)]
        sample: usize,
    },
    /// Build and verify the separation name for z and a class.
    SepWitness {
        #[arg(long)]
        z: String,
        #[arg(long)]
        gamma: String,
        #[arg(long)]
        p: String,
        #[arg(long)]
        b: Option<String>,
    },
    /// Build and verify the collection name for z and a class.
    CollWitness {
        #[arg(long)]
        z: String,
        #[arg(long)]
        gamma: String,
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 2)]
        cutoff: usize,
        #[arg(long, default_value_t = 3)]
        max_alpha: usize,
    },
    /// Orbit size of a condition under fix(e) in SYS-C.
    Orbit {
        #[arg(long)]
        q: String,
        /// Comma-separated ordinal coordinates.
        #[arg(long, default_value = "")]
        e: String,
    },
    /// Count or list the hereditarily symmetric names below a rank.
    Hs {
        #[arg(long, default_value_t = 2)]
        cutoff: usize,
        #[arg(long)]
        b: Option<String>,
        #[arg(long)]
        list: bool,
    },
}

fn parse_kv(s: &str) -> std::result::Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}

fn parse_kv_usize(s: &str) -> std::result::Result<(String, usize), String> {
    let (k, v) = parse_kv(s)?;
    let v = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k, v))
}

struct Report {
    pass: bool,
    text: Vec<String>,
    json: Value,
}

impl Report {
    fn new(pass: bool, text: impl Into<String>, json: Value) -> Self {
        Report {
            pass,
            text: vec![text.into()],
            json,
        }
    }
}

fn load(input: &Input) -> Result<Universe> {
    match (&input.system, &input.family) {
        (Some(path), _) => sysfile::load(path),
        (None, Some(id)) => {
            let params: BTreeMap<String, usize> = input.params.iter().cloned().collect();
            families::build_with(id, &params, Caps::from_env())
        }
        (None, None) => Err(Error::Scope("either --system or --family is required".into())),
    }
}

fn cond(u: &Universe, token: &str) -> Result<Cond> {
    u.system().order.lookup(token)
}

fn name(u: &Universe, token: &str) -> Result<NameId> {
    u.lookup(token)
}

fn bound(u: &Universe, cutoff: usize, b: &Option<String>) -> Result<QuantifierBound> {
    let set = match b {
        None => u.system().order.full_set(),
        Some(list) => {
            let o = &u.system().order;
            o.lookup_set(list.split(',').map(str::trim).filter(|s| !s.is_empty()))?
        }
    };
    if !u.system().is_symmetric_set(&set) {
        return Err(Error::Scope(format!(
            "quantifier bound {} is not symmetric",
            u.system().order.format_set(&set)
        )));
    }
    Ok(QuantifierBound::new(cutoff, set))
}

fn assignment(u: &Universe, binds: &[(String, String)]) -> Result<Assignment> {
    let mut a = Assignment::new();
    for (var, token) in binds {
        a.bind(var, name(u, token)?);
    }
    Ok(a)
}

fn show_set(u: &Universe, s: &CondSet) -> String {
    u.system().order.format_set(s)
}

fn run(cli: &Cli) -> Result<Report> {
    let u = load(&cli.input)?;
    let o = &u.system().order;
    Ok(match &cli.command {
        Command::CheckSystem => {
            let rep = u.system().validate();
            let mut r = Report::new(
                rep.passed(),
                format!("{} ({} conditions, group order {})", u.system().label, o.len(), u.system().group.order()),
                json!({"command": "check-system", "system": u.system().label, "passed": rep.passed(), "checks": rep.checks}),
            );
            for c in &rep.checks {
                r.text.push(format!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
            }
            r
        }
        Command::Atomic { q, plain } => {
            let (p, x, rel, y) = (cond(&u, &q.p)?, name(&u, &q.x)?, Rel::parse(&q.rel)?, name(&u, &q.y)?);
            let mode = if *plain { Mode::Plain } else { Mode::Strict };
            let holds = u.atomic_forces(p, x, rel, y, mode)?;
            Report::new(
                holds,
                holds.to_string(),
                json!({"command": "atomic", "p": q.p, "x": q.x, "rel": rel, "y": q.y, "holds": holds}),
            )
        }
        Command::Witness { q, emit_certificate } => {
            let (p, x, rel, y) = (cond(&u, &q.p)?, name(&u, &q.x)?, Rel::parse(&q.rel)?, name(&u, &q.y)?);
            let (holds, cert) = u.wit_forces(p, x, rel, y)?;
            if let Some(c) = &cert {
                c.validate(&u)?;
            }
            let cert_json = match (&cert, emit_certificate) {
                (Some(c), true) => c.to_json(&u),
                _ => Value::Null,
            };
            let mut r = Report::new(
                holds,
                holds.to_string(),
                json!({"command": "witness", "p": q.p, "x": q.x, "rel": rel, "y": q.y, "holds": holds, "certificate": cert_json}),
            );
            if *emit_certificate && !cert_json.is_null() {
                r.text.push(cert_json.to_string());
            }
            r
        }
        Command::Forces { p, f } => {
            let phi = logic::parse(&f.phi)?;
            let a = assignment(&u, &f.binds)?;
            let qb = bound(&u, f.cutoff, &f.b)?;
            let res = logic::forces(&u, cond(&u, p)?, &phi, &a, &qb, Mode::Strict)?;
            Report::new(
                res.holds,
                format!("{}{}", res.holds, if res.exact { "" } else { " (approximate)" }),
                json!({"command": "forces", "p": p, "phi": phi.to_string(), "holds": res.holds, "exact": res.exact}),
            )
        }
        Command::Generics => {
            let gs = extension::enumerate_generics(&u)?;
            let sets: Vec<String> = gs.iter().map(|g| show_set(&u, &g.members)).collect();
            let mut r = Report::new(
                true,
                format!("{} generics", gs.len()),
                json!({"command": "generics", "count": gs.len(), "generics": sets}),
            );
            r.text.extend(sets);
            r
        }
        Command::TruthCheck { f } => {
            let phi = logic::parse(&f.phi)?;
            let a = assignment(&u, &f.binds)?;
            let qb = bound(&u, f.cutoff, &f.b)?;
            let rep = extension::truth_lemma_check(&u, &phi, &a, &qb)?;
            let mut r = Report::new(rep.passed(), rep.summary(), json!({"command": "truth-check", "report": rep}));
            r.text.extend(rep.violations.iter().cloned());
            r
        }
        Command::Axioms {
            names,
            comprehension,
            cutoff,
        } => {
            let params: Vec<NameId> = match names {
                Some(list) => list
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|t| name(&u, t))
                    .collect::<Result<_>>()?,
                None => u
                    .declared()
                    .iter()
                    .filter(|(k, &x)| !u.is_class_decl(k) && u.is_hereditarily_symmetric(x))
                    .map(|(_, &x)| x)
                    .collect(),
            };
            let comp: Vec<&str> = comprehension.iter().map(String::as_str).collect();
            let qb = QuantifierBound::full(&u, *cutoff);
            let rep = extension::axiom_preservation_check(&u, &params, &comp, &qb)?;
            let mut r = Report::new(
                rep.passed(),
                format!(
                    "{} passed, {} failed, {} skipped",
                    rep.count(Status::Pass),
                    rep.count(Status::Fail),
                    rep.count(Status::Skipped)
                ),
                json!({"command": "axioms", "report": rep}),
            );
            for c in &rep.checks {
                let tag = match c.status {
                    Status::Pass => "PASS",
                    Status::Fail => "FAIL",
                    Status::Skipped => "SKIP",
                };
                r.text.push(format!("{tag} {} [{}]: {}", c.axiom, c.instance, c.detail));
            }
            r
        }
        Command::Pretame {
            family_dense,
            p,
            cap,
            at_p,
            symmetric,
        } => {
            let fam = families::dense_family(&u, family_dense)?;
            let p_c = cond(&u, p)?;
            if *symmetric {
                let sw = niceness::symmetric_witness(&u, p_c, &fam)?;
                let sizes: Vec<usize> = sw.witness.d.iter().map(CondSet::count).collect();
                let mut r = Report::new(
                    true,
                    format!("symmetric witness at q={} with b={} sizes {:?}", o.id(sw.witness.q), show_set(&u, &sw.b), sizes),
                    json!({"command": "pretame", "outcome": "symmetric-witness", "q": o.id(sw.witness.q), "b": show_set(&u, &sw.b), "sizes": sizes, "certified_order": sw.certified.len()}),
                );
                r.text.extend(sw.witness.d.iter().map(|d| format!("  {}", show_set(&u, d))));
                return Ok(r);
            }
            let scope = if *at_p { SearchScope::AtP } else { SearchScope::BelowP };
            match niceness::pretameness_witness(&u, p_c, &fam, *cap, scope)? {
                PretameOutcome::Witness(w) => {
                    let sizes: Vec<usize> = w.d.iter().map(CondSet::count).collect();
                    let sets: Vec<String> = w.d.iter().map(|d| show_set(&u, d)).collect();
                    let mut r = Report::new(
                        true,
                        format!("witness at q={} sizes {:?}", o.id(w.q), sizes),
                        json!({"command": "pretame", "outcome": "witness", "q": o.id(w.q), "sizes": sizes, "sets": sets}),
                    );
                    r.text.extend(sets.iter().map(|s| format!("  {s}")));
                    r
                }
                PretameOutcome::Refusal(cands) => {
                    let best = cands.iter().min_by_key(|c| c.max()).expect("p itself is always tried");
                    let mut r = Report::new(
                        false,
                        format!("refusal: no witness with |d_i| <= {cap}; minimal sizes {:?} at q={}", best.sizes, best.q),
                        json!({"command": "pretame", "outcome": "refusal", "cap": cap, "minimal_sizes": best.sizes, "candidates": cands}),
                    );
                    for c in &cands {
                        r.text.push(format!(
                            "  q={} sizes {:?}{}",
                            c.q,
                            c.sizes,
                            if c.exact { "" } else { " (upper bounds)" }
                        ));
                    }
                    r
                }
            }
        }
        Command::Stratified { sample } => {
            let rep = niceness::stratification_check(&u, *sample);
            let mut r = Report::new(
                rep.passed(),
                format!(
                    "{} ({} sets, {})",
                    if rep.passed() { "PASS" } else { "FAIL" },
                    rep.checked,
                    if rep.exhaustive { "exhaustive" } else { "sampled" }
                ),
                json!({"command": "stratified", "report": rep}),
            );
            r.text.extend(rep.failures.iter().cloned());
            r
        }
        Command::SepWitness { z, gamma, p, b } => {
            let b_set = match b {
                Some(_) => Some(bound(&u, 0, b)?.b),
                None => None,
            };
            let (_, rep) = niceness::separation_witness(&u, name(&u, z)?, name(&u, gamma)?, cond(&u, p)?, b_set.as_ref())?;
            construction_report("sep-witness", rep.passed(), &rep)
        }
        Command::CollWitness {
            z,
            gamma,
            p,
            cutoff,
            max_alpha,
        } => {
            let qb = QuantifierBound::full(&u, *cutoff);
            let (_, rep) =
                niceness::collection_witness(&u, name(&u, z)?, name(&u, gamma)?, cond(&u, p)?, &qb, *max_alpha)?;
            let text = match (&rep.report, rep.premise) {
                (_, false) => "premise not forced".to_string(),
                (None, true) => format!("no witness up to rank {max_alpha}"),
                (Some(c), true) => format!(
                    "{} {} (HS {}, forced {}, truth lemma {})",
                    if rep.passed() { "PASS" } else { "FAIL" },
                    c.name,
                    c.hereditarily_symmetric,
                    c.forced,
                    c.truth_lemma
                ),
            };
            Report::new(rep.passed(), text, json!({"command": "coll-witness", "report": rep}))
        }
        Command::Orbit { q, e } => {
            let e: Vec<usize> = e
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| Error::Scope(format!("`{s}` is not a coordinate"))))
                .collect::<Result<_>>()?;
            let size = families::orbit_size(&u, cond(&u, q)?, &e)?;
            Report::new(true, size.to_string(), json!({"command": "orbit", "q": q, "e": e, "size": size}))
        }
        Command::Hs { cutoff, b, list } => {
            let qb = bound(&u, *cutoff, b)?;
            let names = u.enumerate_hs(qb.alpha, &qb.b)?;
            let mut r = Report::new(
                true,
                format!("{} names", names.len()),
                json!({"command": "hs", "cutoff": cutoff, "count": names.len()}),
            );
            if *list {
                r.text.extend(names.iter().map(|&x| u.show(x)));
            }
            r
        }
    })
}

fn construction_report(command: &str, pass: bool, rep: &niceness::ConstructionReport) -> Report {
    Report::new(
        pass,
        format!(
            "{} {} (HS {}, forced {}, truth lemma {}; {})",
            if pass { "PASS" } else { "FAIL" },
            rep.name,
            rep.hereditarily_symmetric,
            rep.forced,
            rep.truth_lemma,
            rep.detail
        ),
        json!({"command": command, "report": rep}),
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(r) => {
            if cli.json {
                println!("{}", r.json);
            } else {
                for line in &r.text {
                    println!("{line}");
                }
            }
            ExitCode::from(if r.pass { 0 } else { 1 })
        }
        Err(e) => {
            if cli.json {
                println!("{}", json!({"error": e.to_string()}));
            }
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
