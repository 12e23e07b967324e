//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_rational::BigRational;
use quadreg::chains::{validate_chain, GrowthFunction};
use quadreg::factors::{AtomLabel, QuadraticFactor};
use quadreg::gf::{GroupElement, Space, SymMatrix};
use quadreg::regularity::{assemble_main, cylinder_decompose, CylinderOutcome, MainConfig, RegularityConfig, RunStatus};
use quadreg::set::SubsetOfG;
use quadreg::vc2::{vc2_dim, vc_dim};
use quadreg::Exec;
use quadreg_cli::io::{read_json, write_json, PartitionFile, SetFile};
use quadreg_cli::verify::{self, planted_factor, planted_union, random_set, space3, CheckResult};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 7;
const EXEC: Exec = Exec::Parallel;

type Outcome = anyhow::Result<Vec<CheckResult>>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ok(name: &str, pass: bool, detail: String) -> CheckResult {
    CheckResult { name: name.into(), checked: 1, failures: (!pass) as u64, passed: pass, detail }
}

fn c1() -> Outcome {
    Ok(vec![verify::check_norm_engines(2, 50, SEED, EXEC)?, verify::check_norm_engines(3, 50, SEED, EXEC)?])
}

fn c2() -> Outcome {
    Ok(vec![verify::check_omega_identity(2, 20, SEED, EXEC)?])
}

fn c3() -> Outcome {
    Ok(vec![verify::check_constraints_exhaustive(2, 5, SEED, EXEC)?, verify::check_constraints_random(4, 1_000_000, 10, SEED, EXEC)?])
}

fn c4() -> Outcome {
    Ok(vec![
        verify::check_psi_fibres(1, EXEC),
        verify::check_psi_fibres(2, EXEC),
        verify::check_rewritenorm(1, 20, SEED, EXEC)?,
        verify::check_rewritenorm(2, 20, SEED, EXEC)?,
    ])
}

fn c5() -> Outcome {
    Ok(vec![verify::check_preimage(2, 5, SEED, EXEC)?])
}

fn c6() -> Outcome {
    (1..=3).map(|n| verify::check_trivial_norms(n, 50, SEED, EXEC)).collect()
}

fn c7() -> Outcome {
    let start = Instant::now();
    let mut out = verify::check_chain_calculus(10, 5, 20, EXEC);
    let secs = start.elapsed().as_secs_f64();
    out.push(ok("runtime under 60s", secs < 60.0, format!("{secs:.1}s")));
    Ok(out)
}

fn c8() -> Outcome {
    Ok(vec![verify::check_pythagoras(2, 100, SEED)])
}

fn c9() -> Outcome {
    Ok(vec![
        verify::check_rank_refine(4, 100, SEED, &GrowthFunction::linear(1))?,
        verify::check_rank_refine(4, 100, SEED, &GrowthFunction::linear(2))?,
    ])
}

fn reg_config() -> RegularityConfig {
    RegularityConfig { exec: EXEC, ..RegularityConfig::default() }
}

/// The criterion-10 run through the binary, plus the in-process outcome.
fn planted_run(dir: &Path) -> anyhow::Result<(Vec<CheckResult>, CylinderOutcome)> {
    let space = space3(3);
    let rho = GrowthFunction::linear(1);
    let a = planted_union(&space);
    let mut checks = Vec::new();
    let f = planted_factor(&space);
    checks.push(ok("planted factor meets the rank demand", f.meets_demand(&rho)? && f.q() == 1, format!("rank {}", f.rank()?)));

    let set_path = dir.join("planted.json");
    write_json(&set_path, &SetFile::from_set(&space, &a))?;
    let out_dir = dir.join("planted-out");
    let status = Command::new(env!("CARGO_BIN_EXE_quadreg"))
        .args(["decompose", "--mode", "cylinder", "--delta", "0.4", "--rho", "linear:1", "--oracle", "exhaustive", "--set"])
        .arg(&set_path)
        .arg("--out")
        .arg(&out_dir)
        .output()?
        .status;
    checks.push(ok("decompose exits 0", status.code() == Some(0), format!("{status}")));
    let part: PartitionFile = read_json(&out_dir.join("partition.json"))?;
    let structure = part.check();
    checks.push(ok("cells partition G into atoms", structure.is_ok(), format!("{structure:?}")));
    let mixed: Vec<usize> = part.cells.iter().filter(|c| c.hits != 0 && c.hits != c.size).map(|c| c.id).collect();
    checks.push(ok("every cell is 0/1-dense", mixed.is_empty(), format!("{} cells, mixed {mixed:?}", part.cells.len())));

    let out = cylinder_decompose(&space, &a, 0.4, &rho, &reg_config())?;
    let same = PartitionFile::from_cylinder(&space, 0.4, "linear:1", &out) == part;
    checks.push(ok("in-process run matches the binary", same, String::new()));
    let bad_chain: Vec<usize> = (0..out.cells.len()).filter(|&i| !validate_chain(&space, &rho, &out.cells[i].chain())).collect();
    checks.push(ok("every (factor, sigma) passes validate_chain", bad_chain.is_empty(), format!("failing cells {bad_chain:?}")));

    let main = MainConfig::new(1, reg_config());
    let r = assemble_main(&space, &a, 0.4, &rho, &main)?;
    checks.push(ok("assemble_main gives |A delta Y| = 0", r.sym_diff == 0 && r.status == RunStatus::Converged, format!("sym diff {}", r.sym_diff)));
    Ok((checks, out))
}

fn c10(dir: &Path) -> Outcome {
    let start = Instant::now();
    let (mut checks, _) = planted_run(dir)?;
    let secs = start.elapsed().as_secs_f64();
    checks.push(ok("runtime under 10 min", secs < 600.0, format!("{secs:.1}s")));
    Ok(checks)
}

fn parse_rational(s: &str) -> BigRational {
    s.parse().unwrap_or_else(|_| BigRational::from_integer(s.parse().expect("integer or fraction")))
}

/// Every type-1 step clears its Jensen bound and the index never drops.
fn accounting_check(name: &str, out: &CylinderOutcome) -> CheckResult {
    let steps = out.accounting.len() as u64;
    let bad = out.accounting.iter().filter(|a| !(a.holds && a.gain >= a.jensen)).count() as u64;
    let idx: Vec<BigRational> = out.trace.iter().map(|r| parse_rational(&r.index_exact)).collect();
    let drops = idx.windows(2).filter(|w| w[1] < w[0]).count() as u64;
    let last_ok = idx.last().is_none_or(|l| *l <= out.index);
    CheckResult {
        name: name.into(),
        checked: steps + idx.len() as u64,
        failures: bad + drops + (!last_ok) as u64,
        passed: bad == 0 && drops == 0 && last_ok,
        detail: format!("{steps} type-1 steps, {} trace rows", idx.len()),
    }
}

fn c11(dir: &Path) -> Outcome {
    let (_, planted) = planted_run(dir)?;
    let mut checks = vec![accounting_check("planted run", &planted)];
    let space = space3(3);
    let mut total = planted.accounting.len();
    for i in 0..10 {
        let a = random_set(&space, 0.5, &mut ChaCha8Rng::seed_from_u64(100 + i));
        let out = cylinder_decompose(&space, &a, 0.25, &GrowthFunction::linear(1), &reg_config())?;
        total += out.accounting.len();
        checks.push(accounting_check(&format!("random set {i}"), &out));
    }
    checks.push(ok("some type-1 step was checked", total > 0, format!("{total} steps")));
    Ok(checks)
}

/// Direct search over all grids, without the shift normalization.
fn vc2_at_least_2_naive(space: &Space, a: &SubsetOfG) -> bool {
    let g = space.size();
    for a1 in 0..g {
        for a2 in a1 + 1..g {
            for b1 in 0..g {
                for b2 in b1 + 1..g {
                    let pts = [space.add(a1, b1), space.add(a1, b2), space.add(a2, b1), space.add(a2, b2)];
                    let mut seen = [false; 16];
                    for c in 0..g {
                        let pat = pts.iter().enumerate().fold(0, |acc, (i, &x)| acc | (a.contains(space.add(x, c)) as usize) << i);
                        seen[pat] = true;
                    }
                    if seen.iter().all(|&s| s) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Atom unions at p=3, n=3 with their (vc_dim, vc2_dim) at kmax = 3.
fn vc2_fixtures(space: &Space) -> Vec<(&'static str, SubsetOfG, usize, usize)> {
    let p = space.p();
    let quad = QuadraticFactor::new(p, 3, vec![], vec![SymMatrix::identity(3)]).unwrap();
    let planted = planted_factor(space);
    let lines = QuadraticFactor::new(p, 3, vec![GroupElement::unit(3, 0), GroupElement::unit(3, 1)], vec![]).unwrap();
    let l = |a: Vec<u32>, b: Vec<u32>| AtomLabel::new(a, b);
    let union = |f: &QuadraticFactor, labels: Vec<AtomLabel>| {
        let mut m = Vec::new();
        for e in &labels {
            m.extend(f.enumerate_atom(space, e).unwrap());
        }
        SubsetOfG::from_elements(space, &m).unwrap()
    };
    vec![
        ("x.x = 0", union(&quad, vec![l(vec![], vec![0])]), 3, 1),
        ("x.x = 1", union(&quad, vec![l(vec![], vec![1])]), 3, 1),
        ("x.x = 2", union(&quad, vec![l(vec![], vec![2])]), 3, 1),
        ("x.x in {0,1}", union(&quad, vec![l(vec![], vec![0]), l(vec![], vec![1])]), 3, 1),
        ("x.x in {0,2}", union(&quad, vec![l(vec![], vec![0]), l(vec![], vec![2])]), 3, 1),
        ("x.x in {1,2}", union(&quad, vec![l(vec![], vec![1]), l(vec![], vec![2])]), 3, 1),
        ("planted atom (0|1)", union(&planted, vec![l(vec![0], vec![1])]), 2, 1),
        ("planted union", planted_union(space), 3, 1),
        ("planted diagonal", union(&planted, (0..3).map(|a| l(vec![a], vec![a])).collect()), 3, 1),
        ("line (0 0|)", union(&lines, vec![l(vec![0, 0], vec![])]), 1, 1),
        ("lines (a a|)", union(&lines, (0..3).map(|a| l(vec![a, a], vec![])).collect()), 1, 1),
    ]
}

fn c12() -> Outcome {
    let mut checks = Vec::new();
    let space = space3(3);
    for a in [SubsetOfG::empty(&space), SubsetOfG::full(&space)] {
        let v = vc2_dim(&space, &a, 3, EXEC)?.value;
        checks.push(ok("trivial set has vc2 dimension 0", v == 0, format!("{v}")));
    }
    checks.push(verify::check_vc2_baselines(2, 50, 2, SEED, EXEC)?);
    for (name, a, vc, vc2) in vc2_fixtures(&space) {
        let got = (vc_dim(&space, &a, 3, EXEC)?.value, vc2_dim(&space, &a, 3, EXEC)?.value);
        let naive = vc2_at_least_2_naive(&space, &a);
        let pass = got == (vc, vc2) && naive == (vc2 >= 2);
        checks.push(ok(name, pass, format!("got {got:?}, frozen ({vc}, {vc2}), naive vc2>=2 {naive}")));
    }
    Ok(checks)
}

fn c13(dir: &Path) -> Outcome {
    let out = dir.join("verify-out");
    let status = Command::new(env!("CARGO_BIN_EXE_quadreg")).args(["verify", "--level", "quick", "--out"]).arg(&out).output()?;
    let mut checks = vec![ok("verify exits 0", status.status.success(), String::from_utf8_lossy(&status.stdout).lines().filter(|l| l.starts_with("FAIL")).collect())];
    let csv = std::fs::read_to_string(out.join("diagnostics.csv"))?;
    let lemmas = ["atom-size", "omega-size", "beta-fibre", "fibre-expectation", "norm-comparison"];
    let missing: Vec<&str> = lemmas.iter().copied().filter(|l| !csv.contains(&format!(",{l},"))).collect();
    checks.push(ok("diagnostics.csv has every report", missing.is_empty(), format!("missing {missing:?}")));
    let rows = verify::diagnostics(3, SEED, EXEC)?;
    checks.push(ok("n=3 diagnostics for high-rank factors", rows.iter().any(|r| r.lemma == "norm-comparison"), format!("{} rows", rows.len())));
    for n in [2, 3] {
        checks.push(verify::check_inequalities(n, 5, SEED, EXEC)?);
    }
    Ok(checks)
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<Criterion> = vec![
        ("norm-engine equivalence", Box::new(c1)),
        ("omega identity", Box::new(c2)),
        ("constraint equivalence", Box::new(c3)),
        ("psi structure and rewritten norm", Box::new(c4)),
        ("preimage parametrization", Box::new(c5)),
        ("trivial-factor norm equality", Box::new(c6)),
        ("chain calculus", Box::new(c7)),
        ("pythagoras", Box::new(c8)),
        ("rank_refine contract", Box::new(c9)),
        ("planted-structure recovery", Box::new(|| c10(dir.path()))),
        ("energy accounting", Box::new(|| c11(dir.path()))),
        ("vc2 baselines", Box::new(c12)),
        ("diagnostic reports", Box::new(|| c13(dir.path()))),
    ];
    let mut stdout = std::io::stdout();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(checks) => {
                let bad: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.to_string()).collect();
                (bad.is_empty(), if bad.is_empty() { format!("{} checks", checks.len()) } else { bad.join("; ") })
            }
            Err(e) => (false, format!("error: {e:#}")),
        };
        failed += (!pass) as usize;
        let mark = if pass { "PASS" } else { "FAIL" };
        writeln!(stdout, "criterion {:>2} {mark} {name} ({:.1}s): {detail}", i + 1, start.elapsed().as_secs_f64()).unwrap();
    }
    writeln!(stdout, "{} of {} criteria passed", criteria.len() - failed, criteria.len()).unwrap();
    if failed > 0 {
        std::process::exit(1);
    }
}
