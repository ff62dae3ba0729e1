//! Acceptance suite. Runs every criterion twice on freshly built systems,
//! prints one line per criterion and one JSON report per line, and exits
//! non-zero when any criterion fails.

use std::collections::{BTreeMap, HashMap};
use std::process::ExitCode;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use forcelab_core::extension::{axiom_preservation_check, enumerate_generics, truth_lemma_check_with, Status};
use forcelab_core::families::{self, canonical_cohen_name, fix_subgroup, orbit_size};
use forcelab_core::logic::{check_relativization, parse, Assignment, Evaluator, Formula, QuantifierBound};
use forcelab_core::niceness::{self, collection_witness, relation_class, separation_witness};
use forcelab_core::witness::{check_equivalence, WitnessTuple};
use forcelab_core::{Cond, CondSet, Mode, NameId, Preorder, Rel, Universe};

/// Zero tolerance everywhere: every count of violations must be exactly this.
const ALLOWED_VIOLATIONS: usize = 0;
const FUZZ_CASES: usize = 1200;
const SEED: u64 = 0x5eed_f0c5;

const FORMULAS: [&str; 12] = [
    "x in y",
    "x = y",
    "x sub y",
    "!(x in y)",
    "x in y & y in x",
    "x in y | x = y",
    "x in y -> x sub y",
    "ex z in y . z = x",
    "all z in x . z in y",
    "ex z in y . !(ex w in z . w in x)",
    "all z in x . ex w in y . z = w",
    "(all z in x . z in y) & (all z in y . z in x) <-> x = y",
];

struct Fixture {
    label: &'static str,
    u: Universe,
    corpus: Vec<NameId>,
    qb: QuantifierBound,
}

fn fixtures() -> Vec<Fixture> {
    let mk = |label, u: Universe, corpus: Vec<NameId>| {
        let qb = QuantifierBound::full(&u, 2);
        Fixture { label, u, corpus, qb }
    };
    let a = families::sys_a();
    let full = a.system().order.full_set();
    let ca = a.enumerate_hs(3, &full).unwrap().to_vec();
    let a0 = families::sys_a0();
    let c0 = families::corpus(&a0, 2, 128).unwrap();
    let b = families::sys_b(2, 2).unwrap();
    let cb = families::corpus(&b, 2, 128).unwrap();
    let c = families::sys_c(1, 1, 2).unwrap();
    let cc = families::corpus(&c, 1, 128).unwrap();
    vec![
        mk("SYS-A", a, ca),
        mk("SYS-A0", a0, c0),
        mk("SYS-B(2,2)", b, cb),
        mk("SYS-C(1,1,2)", c, cc),
    ]
}

fn formulas() -> Vec<Formula> {
    FORMULAS.iter().map(|s| parse(s).unwrap()).collect()
}

fn env(x: NameId, y: NameId) -> Assignment {
    Assignment::new().set("x", x).set("y", y)
}

/// Regions of every corpus formula at every pair of corpus names.
struct RegionTable {
    regions: HashMap<(usize, NameId, NameId), CondSet>,
}

impl RegionTable {
    fn get(&mut self, f: &Fixture, ev: &Evaluator, phis: &[Formula], k: usize, x: NameId, y: NameId) -> CondSet {
        self.regions
            .entry((k, x, y))
            .or_insert_with(|| ev.region(&phis[k], &env(x, y)).unwrap_or_else(|e| panic!("{}: {e}", f.label)))
            .clone()
    }
}

/// Collects failures, keeping a few examples.
#[derive(Default)]
struct Tally {
    checked: usize,
    violations: usize,
    examples: Vec<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations += 1;
            if self.examples.len() < 5 {
                self.examples.push(what());
            }
        }
    }

    fn passed(&self) -> bool {
        self.violations == ALLOWED_VIOLATIONS
    }

    fn json(&self) -> Value {
        json!({"checked": self.checked, "violations": self.violations, "examples": self.examples})
    }
}

struct Outcome {
    pass: bool,
    summary: String,
    details: Value,
}

fn tally_outcome(t: &Tally, extra: Value) -> Outcome {
    Outcome {
        pass: t.passed(),
        summary: format!("{} checks, {} violations", t.checked, t.violations),
        details: json!({"tally": t.json(), "extra": extra}),
    }
}

// Independent order oracles, computed from `leq` alone.

fn oracle_dense_below(o: &Preorder, d: &CondSet, p: Cond) -> bool {
    o.conditions()
        .filter(|&q| o.leq(q, p))
        .all(|q| o.conditions().any(|r| o.leq(r, q) && d.contains(r)))
}

fn oracle_avoid(o: &Preorder, d: &CondSet) -> CondSet {
    CondSet::from_iter_in(
        o.len(),
        o.conditions().filter(|&q| !o.conditions().any(|r| o.leq(r, q) && d.contains(r))),
    )
}

fn criterion_oracle_equivalence(fx: &[Fixture]) -> Outcome {
    let mut queries = 0;
    let mut t = Tally::default();
    let mut per = BTreeMap::new();
    for f in fx {
        let rep = check_equivalence(&f.u, &f.corpus).unwrap();
        queries += rep.queries;
        per.insert(f.label, json!({"names": f.corpus.len(), "queries": rep.queries}));
        for d in &rep.disagreements {
            t.check(false, || format!("{}: {} ⊩ {} {} {}", f.label, d.p, d.x, d.rel.symbol(), d.y));
        }
    }
    t.checked = queries;
    Outcome {
        pass: t.passed() && queries > 0,
        summary: format!("{queries} queries, {} disagreements", t.violations),
        details: json!({"tally": t.json(), "systems": per}),
    }
}

fn criterion_symmetry(fx: &[Fixture], tables: &mut [RegionTable]) -> Outcome {
    let phis = formulas();
    let mut t = Tally::default();
    for (f, table) in fx.iter().zip(tables.iter_mut()) {
        if f.label != "SYS-A" && f.label != "SYS-C(1,1,2)" {
            continue;
        }
        let g = &f.u.system().group;
        let ev = Evaluator::new(&f.u, f.qb.clone(), Mode::Strict);
        for &x in &f.corpus {
            for &y in &f.corpus {
                for k in 0..phis.len() {
                    let r = table.get(f, &ev, &phis, k, x, y);
                    for pi in g.elements() {
                        let (px, py) = (f.u.apply(pi, x), f.u.apply(pi, y));
                        let r2 = table.get(f, &ev, &phis, k, px, py);
                        t.check(g.image(pi, &r) == r2, || {
                            format!("{}: {} at ({}, {}) under {}", f.label, FORMULAS[k], f.u.show(x), f.u.show(y), g.id(pi))
                        });
                    }
                }
            }
        }
    }
    let exhaustive = t.checked;

    // Fuzz on larger parameters: forcing regions and witness certificates.
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let larger = [
        ("SYS-B(2,3)", families::sys_b(2, 3).unwrap()),
        ("SYS-C(2,1,2)", families::sys_c(2, 1, 2).unwrap()),
    ];
    let mut fuzz = 0;
    for (label, u) in &larger {
        let corpus = random_hs_names(u, &mut rng, 48);
        let qb = QuantifierBound::full(u, 2);
        let ev = Evaluator::new(u, qb, Mode::Strict);
        let g = &u.system().group;
        let elems: Vec<_> = g.elements().collect();
        let o = &u.system().order;
        for _ in 0..FUZZ_CASES / 2 {
            let x = *corpus.choose(&mut rng).unwrap();
            let y = *corpus.choose(&mut rng).unwrap();
            let pi = *elems.choose(&mut rng).unwrap();
            let k = rng.gen_range(0..phis.len());
            let r = ev.region(&phis[k], &env(x, y)).unwrap();
            let r2 = ev.region(&phis[k], &env(u.apply(pi, x), u.apply(pi, y))).unwrap();
            t.check(g.image(pi, &r) == r2, || format!("{label}: {} under {}", FORMULAS[k], g.id(pi)));
            fuzz += 1;

            let rel = Rel::ALL[rng.gen_range(0..3)];
            let p = Cond(rng.gen_range(0..o.len()) as u32);
            let (holds, cert) = u.wit_forces(p, x, rel, y).unwrap();
            if let (true, Some(c)) = (holds, cert) {
                let moved = c.apply(u, pi);
                let (q, a, b) = (g.apply(pi, p), u.apply(pi, x), u.apply(pi, y));
                let roots = match rel {
                    Rel::Eq => vec![
                        WitnessTuple { q, u: a, rel: Rel::Sub, v: b },
                        WitnessTuple { q, u: b, rel: Rel::Sub, v: a },
                    ],
                    r => vec![WitnessTuple { q, u: a, rel: r, v: b }],
                };
                t.check(moved.validate(u).is_ok() && roots.iter().all(|r| moved.contains(r)), || {
                    format!("{label}: certificate for {} {} {} under {}", u.show(x), rel.symbol(), u.show(y), g.id(pi))
                });
            }
        }
    }
    let mut o = tally_outcome(&t, json!({"exhaustive": exhaustive, "fuzz": fuzz}));
    o.pass &= fuzz >= 1000;
    o
}

/// Hereditarily symmetric names built by closing a few random entries
/// under a random base subgroup, nesting earlier results.
fn random_hs_names(u: &Universe, rng: &mut ChaCha8Rng, count: usize) -> Vec<NameId> {
    let sys = u.system();
    let n = sys.order.len();
    let mut pool: Vec<NameId> = (0..3).map(|k| u.check(k).unwrap()).collect();
    while pool.len() < count {
        let h = &sys.filter.base()[rng.gen_range(0..sys.filter.base().len())].members;
        let shallow: Vec<NameId> = pool.iter().copied().filter(|&w| u.rank(w) <= 2).collect();
        let mut entries = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            let w = *shallow.choose(rng).unwrap();
            let s = Cond(rng.gen_range(0..n) as u32);
            for &pi in h {
                entries.push((u.apply(pi, w), sys.group.apply(pi, s)));
            }
        }
        let x = u.intern(entries);
        assert!(u.is_hereditarily_symmetric(x));
        if !pool.contains(&x) {
            pool.push(x);
        }
    }
    pool
}

fn criterion_entries(fx: &[Fixture]) -> Outcome {
    let mut t = Tally::default();
    for f in fx {
        let full = f.u.system().order.full_set();
        for &y in &f.corpus {
            for &(x, p) in f.u.entries(y).iter() {
                t.check(f.u.atomic_region(x, Rel::In, y).contains(p), || {
                    format!("{}: {} ⊮ {} ∈ {}", f.label, f.u.system().order.id(p), f.u.show(x), f.u.show(y))
                });
            }
            t.check(*f.u.atomic_region(y, Rel::Eq, y) == full, || format!("{}: {} = itself", f.label, f.u.show(y)));
        }
    }
    tally_outcome(&t, Value::Null)
}

/// Names used for assignment pairs in the costlier criteria.
fn sample(f: &Fixture, n: usize) -> Vec<NameId> {
    if f.corpus.len() <= n {
        return f.corpus.clone();
    }
    let step = f.corpus.len() as f64 / n as f64;
    (0..n).map(|i| f.corpus[(i as f64 * step) as usize]).collect()
}

fn criterion_persistence(fx: &[Fixture], tables: &mut [RegionTable]) -> Outcome {
    let phis = formulas();
    let mut t = Tally::default();
    for (f, table) in fx.iter().zip(tables.iter_mut()) {
        let o = &f.u.system().order;
        let ev = Evaluator::new(&f.u, f.qb.clone(), Mode::Strict);
        let names = sample(f, 48);
        for &x in &names {
            for &y in &names {
                for k in 0..phis.len() {
                    let r = table.get(f, &ev, &phis, k, x, y);
                    for p in o.conditions() {
                        for q in o.conditions() {
                            if o.leq(q, p) && r.contains(p) {
                                t.check(r.contains(q), || {
                                    format!("{}: {} persists from {} to {}", f.label, FORMULAS[k], o.id(p), o.id(q))
                                });
                            }
                        }
                        if oracle_dense_below(o, &r, p) {
                            t.check(r.contains(p), || format!("{}: {} dense below {}", f.label, FORMULAS[k], o.id(p)));
                        }
                    }
                }
            }
        }
    }
    tally_outcome(&t, Value::Null)
}

fn criterion_truth(fx: &[Fixture]) -> Outcome {
    let phis = formulas();
    let mut t = Tally::default();
    let mut generics = BTreeMap::new();
    for f in fx {
        let gs = enumerate_generics(&f.u).unwrap();
        generics.insert(f.label, gs.len());
        let names = sample(f, 16);
        for &x in &names {
            for &y in &names {
                for (k, phi) in phis.iter().enumerate() {
                    let rep = truth_lemma_check_with(&f.u, phi, &env(x, y), &f.qb, &gs).unwrap();
                    t.check(rep.passed() && rep.exact, || {
                        format!("{}: {} at ({}, {}): {}", f.label, FORMULAS[k], f.u.show(x), f.u.show(y), rep.summary())
                    });
                }
            }
        }
    }
    tally_outcome(&t, json!({"generics": generics}))
}

fn criterion_relativization(fx: &[Fixture]) -> Outcome {
    let phis = formulas();
    let mut t = Tally::default();
    for f in fx {
        let names = sample(f, 12);
        for &x in &names {
            for &y in &names {
                for (k, phi) in phis.iter().enumerate() {
                    let rep = check_relativization(&f.u, phi, &env(x, y), &f.qb).unwrap();
                    t.check(rep.passed(), || format!("{}: {}: {:?}", f.label, FORMULAS[k], rep.disagreements));
                }
            }
        }
    }
    tally_outcome(&t, Value::Null)
}

fn criterion_axioms(fx: &[Fixture]) -> Outcome {
    let mut t = Tally::default();
    let mut skipped = 0;
    let mut passed_axioms = 0;
    for f in fx {
        let names = sample(f, 4);
        let comp = ["x = v", "ex w in x . w = v", "!(v in x)"];
        let rep = axiom_preservation_check(&f.u, &names, &comp, &f.qb).unwrap();
        for c in &rep.checks {
            match c.status {
                Status::Skipped => skipped += 1,
                Status::Pass => {
                    passed_axioms += 1;
                    t.checked += 1;
                }
                Status::Fail => t.check(false, || format!("{}: {} [{}]: {}", f.label, c.axiom, c.instance, c.detail)),
            }
        }
        let top = f.u.system().order.top();
        let zs = sample(f, 10);
        let gammas = sample(f, 5);
        for &z in &zs {
            for &g in &gammas {
                let (_, rep) = separation_witness(&f.u, z, g, top, None).unwrap();
                t.check(rep.passed(), || format!("{}: separation {} ∩ {}: {:?}", f.label, f.u.show(z), f.u.show(g), rep));
            }
            if f.u.rank(z) > 2 {
                continue;
            }
            let pairs: Vec<(NameId, NameId)> = f.u.domain(z).into_iter().map(|w| (w, w)).collect();
            let gamma = relation_class(&f.u, &pairs);
            let (_, rep) = collection_witness(&f.u, z, gamma, top, &f.qb, 3).unwrap();
            t.check(rep.passed(), || format!("{}: collection over {}: {:?}", f.label, f.u.show(z), rep));
        }
    }
    let mut o = tally_outcome(&t, json!({"axiom_checks_passed": passed_axioms, "skipped": skipped}));
    o.summary = format!("{}, {skipped} skipped (infinity)", o.summary);
    o.pass &= skipped == fx.len();
    o
}

/// Minimal predense cover sizes below the root of SYS-B(2, n) for the
/// families `|dom s| ≥ i`, by subset enumeration over sequences.
fn growth_oracle(n: usize, i: usize) -> usize {
    let mut seqs: Vec<Vec<usize>> = vec![vec![]];
    for len in 1..=2 {
        let prev: Vec<Vec<usize>> = seqs.iter().filter(|s| s.len() == len - 1).cloned().collect();
        for s in prev {
            for v in 0..n {
                let mut t = s.clone();
                t.push(v);
                seqs.push(t);
            }
        }
    }
    let compatible = |a: &[usize], b: &[usize]| a.iter().zip(b).all(|(x, y)| x == y);
    let cands: Vec<&Vec<usize>> = seqs.iter().filter(|s| s.len() >= i).collect();
    for k in 1..=cands.len() {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            if seqs.iter().all(|s| idx.iter().any(|&j| compatible(s, cands[j]))) {
                return k;
            }
            let mut pos = k;
            while pos > 0 && idx[pos - 1] == cands.len() - k + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            idx[pos - 1] += 1;
            for j in pos..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    unreachable!("the full family covers")
}

const PINNED_GROWTH: [[usize; 3]; 2] = [[2, 3, 4], [4, 9, 16]];

fn criterion_growth() -> Outcome {
    let mut t = Tally::default();
    let mut table = Vec::new();
    for (row, i) in [1usize, 2].into_iter().enumerate() {
        let mut sizes = Vec::new();
        for (col, n) in [2usize, 3, 4].into_iter().enumerate() {
            let u = families::sys_b(2, n).unwrap();
            let o = &u.system().order;
            let fam = families::dense_family(&u, "length").unwrap();
            let (cover, exact) = niceness::minimal_predense_cover(o, &fam.members[i - 1], o.top()).unwrap();
            let size = cover.count();
            let oracle = growth_oracle(n, i);
            t.check(exact && size == oracle && size == PINNED_GROWTH[row][col], || {
                format!("i={i} N={n}: search {size} (exact {exact}), oracle {oracle}, pinned {}", PINNED_GROWTH[row][col])
            });
            sizes.push(size);
        }
        t.check(sizes.windows(2).all(|w| w[0] < w[1]), || format!("i={i}: {sizes:?} not increasing"));
        table.push(json!({"i": i, "sizes_for_N_2_3_4": sizes}));
    }
    tally_outcome(&t, json!(table))
}

fn criterion_orbits() -> Outcome {
    let mut t = Tally::default();
    let mut sizes = Vec::new();
    for c in [2usize, 3, 4] {
        let u = families::sys_c(2, 1, c).unwrap();
        let o = &u.system().order;
        // One cell at ordinal 1, off the support {0}.
        let q = o.lookup("a1n0g0v1").unwrap();
        let size = orbit_size(&u, q, &[0]).unwrap();
        t.check(size == c, || format!("C={c}: orbit size {size}"));
        sizes.push(size);
        for alpha in 0..2 {
            let ok = match canonical_cohen_name(&u, alpha) {
                Ok(x) => {
                    u.is_hereditarily_symmetric(x) && fix_subgroup(u.system(), &[alpha]).is_subset(&u.sym_of_name(x))
                }
                Err(_) => false,
            };
            t.check(ok, || format!("C={c}: cohen name {alpha}"));
        }
    }
    tally_outcome(&t, json!({"orbit_sizes_for_C_2_3_4": sizes}))
}

fn criterion_provability(fx: &[Fixture]) -> Outcome {
    let phis = formulas();
    let mut t = Tally::default();
    let chis = [0usize, 3, 8, 11];
    for f in fx {
        let o = &f.u.system().order;
        let full = o.full_set();
        let ev = Evaluator::new(&f.u, f.qb.clone(), Mode::Strict);
        let names = sample(f, 6);
        for &x in &names {
            for &y in &names {
                let a = env(x, y);
                for (i, phi) in phis.iter().enumerate() {
                    let rp = ev.region(phi, &a).unwrap();
                    let em = rp.union(&oracle_avoid(o, &rp));
                    t.check(o.conditions().all(|p| oracle_dense_below(o, &em, p)), || {
                        format!("{}: excluded middle for {}", f.label, FORMULAS[i])
                    });
                    for (j, psi) in phis.iter().enumerate() {
                        let k1 = Formula::implies(phi.clone(), Formula::implies(psi.clone(), phi.clone()));
                        let k3 = Formula::implies(
                            Formula::implies(Formula::not(phi.clone()), Formula::not(psi.clone())),
                            Formula::implies(psi.clone(), phi.clone()),
                        );
                        for (scheme, s) in [("K", &k1), ("contraposition", &k3)] {
                            t.check(ev.region(s, &a).unwrap() == full, || {
                                format!("{}: {scheme} for {} / {}", f.label, FORMULAS[i], FORMULAS[j])
                            });
                        }
                        let imp = ev.region(&Formula::implies(phi.clone(), psi.clone()), &a).unwrap();
                        let rq = ev.region(psi, &a).unwrap();
                        t.check(rp.intersection(&imp).is_subset(&rq), || {
                            format!("{}: modus ponens {} / {}", f.label, FORMULAS[i], FORMULAS[j])
                        });
                        for &k in &chis {
                            let chi = &phis[k];
                            let s = Formula::implies(
                                Formula::implies(phi.clone(), Formula::implies(psi.clone(), chi.clone())),
                                Formula::implies(
                                    Formula::implies(phi.clone(), psi.clone()),
                                    Formula::implies(phi.clone(), chi.clone()),
                                ),
                            );
                            t.check(ev.region(&s, &a).unwrap() == full, || {
                                format!("{}: S for {} / {} / {}", f.label, FORMULAS[i], FORMULAS[j], FORMULAS[k])
                            });
                        }
                    }
                }
            }
        }
        // Implication agrees with its semantic reading.
        for &x in &names {
            let a = env(x, x);
            for phi in &phis {
                for psi in &phis {
                    let imp = ev.region(&Formula::implies(phi.clone(), psi.clone()), &a).unwrap();
                    let (rp, rq) = (ev.region(phi, &a).unwrap(), ev.region(psi, &a).unwrap());
                    for p in o.conditions() {
                        let sem = o
                            .conditions()
                            .filter(|&q| o.leq(q, p))
                            .all(|q| !rp.contains(q) || rq.contains(q));
                        t.check(imp.contains(p) == sem, || format!("{}: implication at {}", f.label, o.id(p)));
                    }
                }
            }
        }
    }
    tally_outcome(&t, Value::Null)
}

/// One full run: a JSON line per criterion, in order.
fn run_suite() -> Vec<(bool, String, String)> {
    let fx = fixtures();
    let mut tables: Vec<RegionTable> = fx.iter().map(|_| RegionTable { regions: HashMap::new() }).collect();
    let mut out = Vec::new();
    let mut record = |n: usize, name: &str, o: Outcome| {
        let line = json!({"criterion": n, "name": name, "pass": o.pass, "summary": o.summary, "details": o.details});
        out.push((o.pass, format!("{n:>2} {name}: {}", o.summary), line.to_string()));
    };
    record(1, "oracle equivalence", criterion_oracle_equivalence(&fx));
    record(2, "symmetry lemma", criterion_symmetry(&fx, &mut tables));
    record(3, "stored entries and reflexive equality", criterion_entries(&fx));
    record(4, "persistence and density", criterion_persistence(&fx, &mut tables));
    record(5, "truth lemma", criterion_truth(&fx));
    record(6, "relativization", criterion_relativization(&fx));
    record(7, "axiom preservation", criterion_axioms(&fx));
    record(8, "growth probe", criterion_growth());
    record(9, "orbit probe", criterion_orbits());
    record(10, "provability closure", criterion_provability(&fx));
    out
}

fn main() -> ExitCode {
    let first = run_suite();
    let second = run_suite();
    let mut all = true;
    for (pass, line, _) in &first {
        all &= pass;
        println!("[{}] {line}", if *pass { "PASS" } else { "FAIL" });
    }
    let a: Vec<&str> = first.iter().map(|r| r.2.as_str()).collect();
    let b: Vec<&str> = second.iter().map(|r| r.2.as_str()).collect();
    let same = a == b;
    all &= same;
    let bytes: usize = a.iter().map(|l| l.len() + 1).sum();
    println!(
        "[{}] 11 determinism: {} report lines, {bytes} bytes, {}",
        if same { "PASS" } else { "FAIL" },
        a.len(),
        if same { "byte-identical across two runs" } else { "runs differ" }
    );
    for l in &a {
        println!("{l}");
    }
    println!(
        "{}",
        json!({"criterion": 11, "name": "determinism", "pass": same, "summary": format!("{} lines, {bytes} bytes", a.len())})
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
