//! Exhaustive identity checks, run as a suite with a pass/fail line per check.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::Result;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use quadreg::chains::{check_seq1, check_seq2, check_seq3, check_seq4, check_tau_bound, GrowthFunction, LemmaTally};
use quadreg::diagnostics::{badcount1, omegagood, size_lemma_rows};
use quadreg::factors::{AtomLabel, QuadraticFactor};
use quadreg::gf::{GroupElement, Prime, Space, SymMatrix};
use quadreg::gowers::{u3_eighth, u3_eighth_exact, u3_eighth_fast, u3_eighth_naive, u3_eighth_naive_exact, BoundedFunction};
use quadreg::localnorms::{
    norm_equivalence_report, norm_p_eighth, norm_tw_eighth, omega_count, omega_member_constraints, omega_member_definitional, omega_tuples,
    preimage_intersection, psi_map, sigma_label, FactorForms, LocalLabelTuple,
};
use quadreg::regularity::{cylinder_decompose, index, pythagoras_check, verify_cylinder, Partition, RegularityConfig, RunStatus};
use quadreg::set::SubsetOfG;
use quadreg::vc2::{vc2_dim, vc_dim};
use quadreg::Exec;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

impl FromStr for Level {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            _ => anyhow::bail!("unknown level {s:?} (expected quick or full)"),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::Quick => "quick",
            Level::Full => "full",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub checked: u64,
    pub failures: u64,
    pub passed: bool,
    /// First failure, or a short summary.
    pub detail: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, checked: u64, failures: u64, detail: impl Into<String>) -> Self {
        CheckResult { name: name.into(), checked, failures, passed: failures == 0 && checked > 0, detail: detail.into() }
    }

    fn from_tally(name: impl Into<String>, t: &LemmaTally) -> Self {
        CheckResult::new(name, t.checked, t.violations, "")
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{mark} {} ({} checked, {} failed)", self.name, self.checked, self.failures)?;
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

/// Tracks failures and keeps the first message.
#[derive(Default)]
struct Tally {
    checked: u64,
    failures: u64,
    first: Option<String>,
}

impl Tally {
    fn record(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failures += 1;
            if self.first.is_none() {
                self.first = Some(msg());
            }
        }
    }

    fn finish(self, name: impl Into<String>) -> CheckResult {
        CheckResult::new(name, self.checked, self.failures, self.first.unwrap_or_default())
    }
}

/// One row of diagnostics.csv.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagRow {
    pub factor: String,
    pub lemma: String,
    pub key: String,
    pub observed: f64,
    pub predicted: f64,
    pub ratio: f64,
    pub diff: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub level: Level,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    #[serde(skip)]
    pub diagnostics: Vec<DiagRow>,
}

impl VerifyReport {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        crate::io::write_json(&dir.join("verify.json"), self)?;
        let mut w = csv::Writer::from_path(dir.join("diagnostics.csv"))?;
        for r in &self.diagnostics {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn space3(n: usize) -> Space {
    Space::new(Prime::new(3).expect("3 is prime"), n).expect("n >= 1")
}

fn rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-12)
}

pub fn random_indicator<R: Rng>(space: &Space, rng: &mut R) -> BoundedFunction {
    let nums = (0..space.size()).map(|_| rng.gen_range(0..=1)).collect();
    BoundedFunction::from_rational(space, nums, 1).expect("values in range")
}

/// Values k/4 with k uniform in −4..=4.
pub fn random_rational<R: Rng>(space: &Space, rng: &mut R) -> BoundedFunction {
    let nums = (0..space.size()).map(|_| rng.gen_range(-4..=4)).collect();
    BoundedFunction::from_rational(space, nums, 4).expect("values in range")
}

pub fn random_real<R: Rng>(space: &Space, rng: &mut R) -> BoundedFunction {
    let values = (0..space.size()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    BoundedFunction::from_values(space, values).expect("values in range")
}

pub fn random_set<R: Rng>(space: &Space, density: f64, rng: &mut R) -> SubsetOfG {
    SubsetOfG::from_membership(space, (0..space.size()).map(|_| rng.gen_bool(density)).collect()).expect("length matches")
}

/// DFT engine against direct enumeration. Even-numbered inputs are
/// indicators and compared exactly; odd ones are real-valued.
pub fn check_norm_engines(n: usize, count: usize, seed: u64, exec: Exec) -> Result<CheckResult> {
    let space = space3(n);
    let mut t = Tally::default();
    for i in 0..count {
        let mut r = rng(seed, i as u64);
        if i % 2 == 0 {
            let f = random_indicator(&space, &mut r);
            let exact = u3_eighth_exact(&space, &f, exec);
            let naive = u3_eighth_naive_exact(&space, &f, exec)?;
            t.record(exact == naive, || format!("n={n} input {i}: exact {exact:?} vs naive {naive:?}"));
        }
        let f = if i % 2 == 0 { random_indicator(&space, &mut r) } else { random_real(&space, &mut r) };
        let (fast, naive) = (u3_eighth_fast(&space, &f, exec), u3_eighth_naive(&space, &f, exec)?);
        t.record(close(fast, naive), || format!("n={n} input {i}: fast {fast} vs naive {naive}"));
    }
    Ok(t.finish(format!("norm-engines n={n}")))
}

/// A factor with ℓ ≤ `lmax` and q ≤ `qmax`, both drawn uniformly.
pub fn random_factor<R: Rng>(space: &Space, lmax: usize, qmax: usize, rng: &mut R) -> QuadraticFactor {
    let l = rng.gen_range(0..=lmax.min(space.n()));
    let q = rng.gen_range(0..=qmax);
    QuadraticFactor::random(space, l, q, rng).expect("valid sizes")
}

/// |Ω_B| equals ‖1_B‖⁸ for every atom of random factors.
pub fn check_omega_identity(n: usize, count: usize, seed: u64, exec: Exec) -> Result<CheckResult> {
    let space = space3(n);
    let mut t = Tally::default();
    for i in 0..count {
        let factor = random_factor(&space, 2, 1, &mut rng(seed, i as u64));
        let forms = FactorForms::new(&space, &factor);
        for code in 0..factor.num_labels() {
            let e = factor.label(code);
            let omega = omega_count(&forms, &e, exec)?;
            let f = BoundedFunction::indicator_of(&space, &forms.atom(&e))?;
            let u = u3_eighth_naive_exact(&space, &f, exec)?.expect("indicator is exact");
            let ok = u == BigRational::from_integer(BigInt::from(omega));
            t.record(ok, || format!("factor {i} label {e}: omega {omega} vs norm {u}"));
        }
    }
    Ok(t.finish(format!("omega-identity n={n}")))
}

/// Definitional against constraint Ω-membership on all of G⁴ and every label.
pub fn check_constraints_exhaustive(n: usize, factors: usize, seed: u64, exec: Exec) -> Result<CheckResult> {
    let space = space3(n);
    let g = space.size();
    let mut t = Tally::default();
    for i in 0..factors {
        let factor = random_factor(&space, 2, 1, &mut rng(seed, i as u64));
        let forms = FactorForms::new(&space, &factor);
        for code in 0..factor.num_labels() {
            let e = factor.label(code);
            let bad = exec.map(g, |x| {
                let mut bad = Vec::new();
                for k in 0..g * g * g {
                    let h = [k % g, k / g % g, k / (g * g)];
                    if omega_member_definitional(&space, &factor, &e, x, h) != omega_member_constraints(&forms, &e, x, h) {
                        bad.push((x, h));
                    }
                }
                bad
            });
            for (x, row) in bad.iter().enumerate() {
                t.checked += (g * g * g) as u64 - 1;
                t.record(row.is_empty(), || format!("factor {i} label {e} x={x}: {:?}", row[0].1));
            }
        }
    }
    Ok(t.finish(format!("constraints-exhaustive n={n}")))
}

/// The same comparison on random tuples, against the label of x and one
/// random label, cycling through `factors` random factors.
pub fn check_constraints_random(n: usize, samples: usize, factors: usize, seed: u64, exec: Exec) -> Result<CheckResult> {
    let space = space3(n);
    let fs: Vec<QuadraticFactor> = (0..factors).map(|i| random_factor(&space, 2, 2, &mut rng(seed, i as u64))).collect();
    let chunks = 64;
    let per = samples.div_ceil(chunks);
    let bad = exec.map(chunks, |c| {
        let mut r = rng(seed, 1_000_000 + c as u64);
        let mut bad = (0u64, None);
        for s in 0..per.min(samples.saturating_sub(c * per)) {
            let factor = &fs[(c * per + s) % fs.len()];
            let forms = FactorForms::new(&space, factor);
            let x = r.gen_range(0..space.size());
            let h = [0; 3].map(|_| r.gen_range(0..space.size()));
            let own = factor.label(forms.label_code(x));
            let other = factor.label(r.gen_range(0..factor.num_labels()));
            for e in [own, other] {
                if omega_member_definitional(&space, factor, &e, x, h) != omega_member_constraints(&forms, &e, x, h) {
                    bad.0 += 1;
                    bad.1.get_or_insert(format!("x={x} h={h:?} label {e}"));
                }
            }
        }
        bad
    });
    let failures = bad.iter().map(|b| b.0).sum();
    let detail = bad.into_iter().find_map(|b| b.1).unwrap_or_default();
    Ok(CheckResult::new(format!("constraints-random n={n}"), 2 * samples as u64, failures, detail))
}

/// Ψ: G⁶ → G⁴ is onto with every fibre of size |G|².
pub fn check_psi_fibres(n: usize, exec: Exec) -> CheckResult {
    let space = space3(n);
    let g = space.size();
    let cells = g.pow(4);
    let code = |v: [usize; 4]| ((v[0] * g + v[1]) * g + v[2]) * g + v[3];
    let parts = exec.map(g, |x1| {
        let mut counts = vec![0u32; cells];
        for rest in 0..g.pow(5) {
            let mut r = rest;
            let mut t = [x1, 0, 0, 0, 0, 0];
            for slot in t.iter_mut().skip(1) {
                *slot = r % g;
                r /= g;
            }
            counts[code(psi_map(&space, t))] += 1;
        }
        counts
    });
    let mut t = Tally::default();
    for c in 0..cells {
        let size: u32 = parts.iter().map(|p| p[c]).sum();
        t.record(size as usize == g * g, || format!("fibre {c} has size {size}, expected {}", g * g));
    }
    t.finish(format!("psi-fibres n={n}"))
}

/// ‖f‖⁸ = |G|^{-2}·Σ_{G⁶} Π_{i,j,k} f(x_i + y_j + z_k), exactly.
pub fn check_rewritenorm(n: usize, count: usize, seed: u64, exec: Exec) -> Result<CheckResult> {
    let space = space3(n);
    let g = space.size();
    let mut t = Tally::default();
    for i in 0..count {
        let f = random_rational(&space, &mut rng(seed, i as u64));
        let e = f.exact().expect("rational input");
        let parts = exec.map(g, |x0| {
            let mut acc = 0i128;
            for rest in 0..g.pow(5) {
                let mut r = rest;
                let mut v = [x0, 0, 0, 0, 0, 0];
                for slot in v.iter_mut().skip(1) {
                    *slot = r % g;
                    r /= g;
                }
                let [x0, x1, y0, y1, z0, z1] = v;
                let mut prod = 1i128;
                for x in [x0, x1] {
                    for y in [y0, y1] {
                        let s = space.add(x, y);
                        for z in [z0, z1] {
                            prod *= e.nums[space.add(s, z)] as i128;
                        }
                    }
                }
                acc += prod;
            }
            acc
        });
        let total: i128 = parts.into_iter().sum();
        let rhs = BigRational::new(BigInt::from(total), num_traits::pow(BigInt::from(e.den), 8) * BigInt::from(g * g));
        let lhs = u3_eighth_naive_exact(&space, &f, exec)?.expect("rational input");
        t.record(lhs == rhs, || format!("n={n} input {i}: {lhs} vs {rhs}"));
    }
    Ok(t.finish(format!("rewritenorm n={n}")))
}

fn digits(p: u32, len: usize, mut code: usize) -> Vec<u32> {
    (0..len)
        .map(|_| {
            let d = (code % p as usize) as u32;
            code /= p as usize;
            d
        })
        .collect()
}

/// Every local label tuple of a factor.
pub fn all_local_tuples(factor: &QuadraticFactor) -> Vec<LocalLabelTuple> {
    let p = factor.p().get();
    let labels = factor.num_labels();
    let q = factor.q();
    let betas = (p as usize).pow(3 * q as u32);
    let mut out = Vec::with_capacity(labels.pow(3) * betas);
    for a in 0..labels {
        for b in 0..labels {
            for c in 0..labels {
                for code in 0..betas {
                    let v = digits(p, 3 * q, code);
                    out.push(LocalLabelTuple {
                        da: factor.label(a),
                        db: factor.label(b),
                        dc: factor.label(c),
                        dab: v[..q].to_vec(),
                        dac: v[q..2 * q].to_vec(),
                        dbc: v[2 * q..].to_vec(),
                    });
                }
            }
        }
    }
    out
}

/// The unique d with t ∈ K₂₂₂(d), if any.
fn tuple_labels(forms: &FactorForms<'_>, t: [usize; 6]) -> Option<LocalLabelTuple> {
    let [x1, x2, y1, y2, z1, z2] = t;
    let code = |x| forms.label_code(x);
    if code(x1) != code(x2) || code(y1) != code(y2) || code(z1) != code(z2) {
        return None;
    }
    let same = |us: [usize; 2], vs: [usize; 2]| -> Option<Vec<u32>> {
        let b = forms.beta_q(us[0], vs[0]);
        let all = us.iter().all(|&u| vs.iter().all(|&v| forms.beta_is(u, v, &b)));
        all.then_some(b)
    };
    let f = forms.factor();
    Some(LocalLabelTuple {
        da: f.label(code(x1)),
        db: f.label(code(y1)),
        dc: f.label(code(z1)),
        dab: same([x1, x2], [y1, y2])?,
        dac: same([x1, x2], [z1, z2])?,
        dbc: same([y1, y2], [z1, z2])?,
    })
}

/// The parametrized Ψ^{-1}(t) ∩ K₂₂₂(d) against a brute-force sweep of G⁶
/// bucketed by (d, Ψ), for every d and every t ∈ Ω_{B(Σ(d))}. Buckets that
/// no such pair reaches count as failures.
pub fn check_preimage(n: usize, factors: usize, seed: u64, exec: Exec) -> Result<CheckResult> {
    let space = space3(n);
    let g = space.size();
    let mut t = Tally::default();
    for i in 0..factors {
        let factor = random_factor(&space, 1, 1, &mut rng(seed, i as u64));
        let forms = FactorForms::new(&space, &factor);
        let parts = exec.map(g, |x1| {
            let mut found = Vec::new();
            for rest in 0..g.pow(5) {
                let mut r = rest;
                let mut v = [x1, 0, 0, 0, 0, 0];
                for slot in v.iter_mut().skip(1) {
                    *slot = r % g;
                    r /= g;
                }
                if let Some(d) = tuple_labels(&forms, v) {
                    found.push((d, psi_map(&space, v), v));
                }
            }
            found
        });
        let mut buckets: HashMap<(LocalLabelTuple, [usize; 4]), Vec<[usize; 6]>> = HashMap::new();
        for (d, w, v) in parts.into_iter().flatten() {
            buckets.entry((d, w)).or_default().push(v);
        }
        let mut reached = HashSet::new();
        let p = factor.p();
        let mut omegas: HashMap<AtomLabel, Vec<[usize; 4]>> = HashMap::new();
        for d in all_local_tuples(&factor) {
            let e = sigma_label(p, &d);
            let tuples = match omegas.get(&e) {
                Some(ts) => ts.clone(),
                None => {
                    let ts = omega_tuples(&forms, &e)?;
                    omegas.insert(e.clone(), ts.clone());
                    ts
                }
            };
            for w in tuples {
                let got = preimage_intersection(&forms, &d, &e, w[0], w[1], w[2], w[3])?;
                let key = (d.clone(), w);
                let mut want = buckets.get(&key).cloned().unwrap_or_default();
                want.sort_unstable();
                if !want.is_empty() {
                    reached.insert(key);
                }
                t.record(got == want, || format!("factor {i}, d={d:?}, t={w:?}: {} vs {} tuples", got.len(), want.len()));
            }
        }
        let stray = buckets.len() - reached.len();
        t.record(stray == 0, || format!("factor {i}: {stray} brute-force buckets outside Omega"));
    }
    Ok(t.finish(format!("preimage n={n}")))
}

/// For the trivial factor, TW and P eighth powers both equal ‖f‖⁸/|G|⁴.
pub fn check_trivial_norms(n: usize, count: usize, seed: u64, exec: Exec) -> Result<CheckResult> {
    let space = space3(n);
    let factor = QuadraticFactor::trivial(space.p(), n);
    let forms = FactorForms::new(&space, &factor);
    let e = AtomLabel::zero(0, 0);
    let d = LocalLabelTuple::canonical(&e);
    let mut t = Tally::default();
    for i in 0..count {
        let mut r = rng(seed, i as u64);
        let f = match i % 3 {
            0 => random_indicator(&space, &mut r),
            1 => random_rational(&space, &mut r),
            _ => random_real(&space, &mut r),
        };
        let tw = norm_tw_eighth(&forms, &f, &d, exec)?;
        let pn = norm_p_eighth(&forms, &f, &e, exec)?;
        let u = u3_eighth(&space, &f, exec) / (space.size() as f64).powi(4);
        t.record(close(tw, pn) && close(pn, u), || format!("n={n} input {i}: tw {tw}, P {pn}, u3 {u}"));
    }
    Ok(t.finish(format!("trivial-factor-norms n={n}")))
}

/// The growth functions x, 2x, x², 3x² with the constants used for the
/// closed-form bounds.
pub fn chain_rhos() -> Vec<(GrowthFunction, BigRational, u32)> {
    let c = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    vec![
        (GrowthFunction::linear(1), c(1001, 1000), 1),
        (GrowthFunction::linear(2), c(2, 1), 1),
        (GrowthFunction::poly(1, 2), c(1001, 1000), 2),
        (GrowthFunction::poly(3, 2), c(3, 1), 2),
    ]
}

pub fn check_chain_calculus(max_len: usize, max_i: usize, max_xy: i64, exec: Exec) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for (rho, c, d) in chain_rhos() {
        out.push(CheckResult::from_tally(format!("seq1 rho={rho}"), &check_seq1(&rho, max_len, exec)));
        out.push(CheckResult::from_tally(format!("seq2 rho={rho}"), &check_seq2(&rho, max_len, exec)));
        out.push(CheckResult::from_tally(format!("seq3 rho={rho}"), &check_seq3(&rho, max_len, exec)));
        out.push(CheckResult::from_tally(format!("seq4 rho={rho}"), &check_seq4(&rho, &c, d, max_len, exec)));
        out.push(CheckResult::from_tally(format!("tau-bound rho={rho}"), &check_tau_bound(&rho, &c, d, max_i, max_xy)));
    }
    out
}

/// A random partition of G into at most `parts` cells.
pub fn random_partition<R: Rng>(space: &Space, parts: usize, rng: &mut R) -> Partition {
    let mut cells = vec![Vec::new(); parts];
    for x in 0..space.size() {
        cells[rng.gen_range(0..parts)].push(x);
    }
    cells.retain(|c| !c.is_empty());
    Partition::new(space, cells).expect("covers G")
}

/// Splits each cell of `p` into up to three random pieces.
pub fn random_refinement<R: Rng>(space: &Space, p: &Partition, rng: &mut R) -> Partition {
    let mut cells = Vec::new();
    for c in p.cells() {
        let mut c = c.clone();
        c.shuffle(rng);
        let k = rng.gen_range(1..=3usize.min(c.len()));
        let mut pieces = vec![Vec::new(); k];
        for (j, x) in c.into_iter().enumerate() {
            pieces[if j < k { j } else { rng.gen_range(0..k) }].push(x);
        }
        cells.extend(pieces);
    }
    Partition::new(space, cells).expect("refines a partition")
}

/// ind(A,P′) − ind(A,P) against the refinement sum computed here.
pub fn check_pythagoras(n: usize, count: usize, seed: u64) -> CheckResult {
    let space = space3(n);
    let g = space.size();
    let mut t = Tally::default();
    for i in 0..count {
        let mut r = rng(seed, i as u64);
        let density = r.gen_range(0.05..0.95);
        let a = random_set(&space, density, &mut r);
        let parts = r.gen_range(1..=6);
        let coarse = random_partition(&space, parts, &mut r);
        let fine = random_refinement(&space, &coarse, &mut r);
        let alpha = |c: &[usize]| BigRational::new(BigInt::from(a.hits(c)), BigInt::from(c.len()));
        let owner = |x: usize| coarse.cells().iter().find(|c| c.contains(&x)).expect("covers G");
        let mut sum = BigRational::zero();
        for c in fine.cells() {
            let diff = alpha(c) - alpha(owner(c[0]));
            sum += &diff * &diff * BigRational::new(BigInt::from(c.len()), BigInt::from(g));
        }
        let difference = index(&space, &a, &fine) - index(&space, &a, &coarse);
        let lib = pythagoras_check(&space, &a, &coarse, &fine);
        let ok = difference == sum && lib.as_ref().is_ok_and(|p| p.refinement_sum == sum);
        t.record(ok, || format!("input {i}: difference {difference} vs sum {sum}, library {lib:?}"));
    }
    t.finish(format!("pythagoras n={n}"))
}

/// rank_refine output refines its input, meets the rank demand, keeps
/// q′ ≤ q and ℓ′ ≤ τ_q(ℓ, q).
pub fn check_rank_refine(n: usize, count: usize, seed: u64, rho: &GrowthFunction) -> Result<CheckResult> {
    let space = space3(n);
    let mut t = Tally::default();
    for i in 0..count {
        let factor = random_factor(&space, 3, 3, &mut rng(seed, i as u64));
        let (l, q) = factor.complexity();
        let (out, _) = factor.rank_refine(rho)?;
        let (l2, q2) = out.complexity();
        let rank = out.rank()?;
        let bound = quadreg::chains::tau(rho, q, l as i64, q as i64);
        let refines = out.refines(&space, &factor);
        let rank_ok = q2 == 0 || !rho.exceeds(l2 + q2, rank);
        let ok = refines && rank_ok && q2 <= q && BigRational::from_integer(BigInt::from(l2)) <= bound;
        t.record(ok, || {
            format!("factor {i} ({l},{q}) -> ({l2},{q2}) rank {rank}: refines {refines}, rank ok {rank_ok}, tau bound {bound}")
        });
    }
    Ok(t.finish(format!("rank-refine n={n} rho={rho}")))
}

/// Factors for the explicit inequalities: trivial, one quadric, one linear
/// plus one quadric, and `extra` random ones.
fn inequality_factors(space: &Space, extra: usize, seed: u64) -> Vec<QuadraticFactor> {
    let n = space.n();
    let mut fs = vec![
        QuadraticFactor::trivial(space.p(), n),
        QuadraticFactor::new(space.p(), n, vec![], vec![SymMatrix::identity(n)]).expect("valid"),
        QuadraticFactor::new(space.p(), n, vec![GroupElement::unit(n, 0)], vec![SymMatrix::identity(n)]).expect("valid"),
    ];
    fs.extend((0..extra).map(|i| random_factor(space, 1, 1, &mut rng(seed, 500 + i as u64))));
    fs
}

/// Brute-force counts against the constants 14 and 1.
pub fn check_inequalities(n: usize, extra: usize, seed: u64, exec: Exec) -> Result<CheckResult> {
    let space = space3(n);
    let mut t = Tally::default();
    for (i, factor) in inequality_factors(&space, extra, seed).iter().enumerate() {
        let og = omegagood(&space, factor, exec)?;
        t.record(og.holds, || format!("factor {i}: omegagood count {} > 14*3^{}", og.count, og.exponent));
        let mut r = rng(seed, 900 + i as u64);
        for k in 0..3 {
            let s: Vec<usize> = (0..k).map(|_| r.gen_range(0..space.size())).collect();
            if let Some(b) = badcount1(&space, factor, &s)? {
                t.record(b.holds, || format!("factor {i}, S={s:?}: badcount1 count {} > 3^{}", b.count, b.exponent));
            }
        }
    }
    Ok(t.finish(format!("explicit-inequalities n={n}")))
}

/// Empty and full sets have dimension 0; random sets keep their VC and VC₂
/// dimensions under translation.
pub fn check_vc2_baselines(n: usize, count: usize, kmax: usize, seed: u64, exec: Exec) -> Result<CheckResult> {
    let space = space3(n);
    let mut t = Tally::default();
    for a in [SubsetOfG::empty(&space), SubsetOfG::full(&space)] {
        let v = vc2_dim(&space, &a, kmax, exec)?.value;
        t.record(v == 0, || format!("trivial set has vc2 dimension {v}"));
    }
    for i in 0..count {
        let mut r = rng(seed, i as u64);
        let a = random_set(&space, r.gen_range(0.1..0.9), &mut r);
        let shift = r.gen_range(0..space.size());
        let b = a.translate(&space, shift);
        let (va, vb) = (vc_dim(&space, &a, kmax, exec)?.value, vc_dim(&space, &b, kmax, exec)?.value);
        let (wa, wb) = (vc2_dim(&space, &a, kmax, exec)?.value, vc2_dim(&space, &b, kmax, exec)?.value);
        t.record(va == vb && wa == wb, || format!("set {i} shifted by {shift}: vc {va}/{vb}, vc2 {wa}/{wb}"));
    }
    Ok(t.finish(format!("vc2-baselines n={n}")))
}

/// Cylinder runs on a random set and on a planted atom union, checked by
/// `verify_cylinder`.
pub fn check_cylinder_runs(n: usize, seed: u64, exec: Exec) -> Result<CheckResult> {
    let space = space3(n);
    let rho = GrowthFunction::linear(1);
    let config = RegularityConfig { exec, seed, ..RegularityConfig::default() };
    let mut t = Tally::default();
    let mut sets = vec![(0.25, random_set(&space, 0.5, &mut rng(seed, 77)))];
    if n == 3 {
        sets.push((0.4, planted_union(&space)));
    }
    for (delta, a) in sets {
        let out = cylinder_decompose(&space, &a, delta, &rho, &config)?;
        let v = verify_cylinder(&space, &a, &out, &rho, &config, delta);
        t.record(out.status == RunStatus::Converged && v.passed(), || format!("delta={delta}: {} {:?}", out.status.name(), v.failures));
    }
    Ok(t.finish(format!("cylinder-runs n={n}")))
}

/// Factor L = {e₁}, Q = {I} at n = 3.
pub fn planted_factor(space: &Space) -> QuadraticFactor {
    let n = space.n();
    QuadraticFactor::new(space.p(), n, vec![GroupElement::unit(n, 0)], vec![SymMatrix::identity(n)]).expect("valid")
}

/// Atoms (0|1), (2|2) and (1|0) of `planted_factor`.
pub fn planted_labels() -> Vec<AtomLabel> {
    vec![AtomLabel::new(vec![0], vec![1]), AtomLabel::new(vec![2], vec![2]), AtomLabel::new(vec![1], vec![0])]
}

pub fn planted_union(space: &Space) -> SubsetOfG {
    let f = planted_factor(space);
    let mut members = Vec::new();
    for e in planted_labels() {
        members.extend(f.enumerate_atom(space, &e).expect("label fits"));
    }
    SubsetOfG::from_elements(space, &members).expect("inside G")
}

/// Size-lemma ratios and TW/P norm differences for nontrivial high-rank
/// factors.
pub fn diagnostics(n: usize, seed: u64, exec: Exec) -> Result<Vec<DiagRow>> {
    let space = space3(n);
    let mut rows = Vec::new();
    let factors = [
        QuadraticFactor::new(space.p(), n, vec![], vec![SymMatrix::identity(n)])?,
        planted_factor(&space),
    ];
    for factor in &factors {
        let name = format!("l={} q={} rank={}", factor.l(), factor.q(), factor.rank()?);
        for r in size_lemma_rows(&space, factor, exec)? {
            rows.push(DiagRow {
                factor: name.clone(),
                lemma: r.lemma.into(),
                key: r.key,
                observed: r.observed,
                predicted: r.predicted,
                ratio: r.ratio,
                diff: r.observed - r.predicted,
            });
        }
        let forms = FactorForms::new(&space, factor);
        let f = random_real(&space, &mut rng(seed, 31));
        for code in 0..factor.num_labels() {
            let e = factor.label(code);
            let d = LocalLabelTuple::canonical(&e);
            match norm_equivalence_report(&forms, &f, &e, &d, exec) {
                Ok(r) => rows.push(DiagRow {
                    factor: name.clone(),
                    lemma: "norm-comparison".into(),
                    key: e.to_string(),
                    observed: r.tw8,
                    predicted: r.p8,
                    ratio: r.tw8 / r.p8,
                    diff: r.diff,
                }),
                Err(quadreg::Error::DegenerateLabel(_)) => {}
                Err(err) => return Err(err.into()),
            }
        }
    }
    Ok(rows)
}

pub fn verify_suite(level: Level, exec: Exec) -> Result<VerifyReport> {
    let seed = 2024;
    let mut checks = Vec::new();
    match level {
        Level::Quick => {
            checks.push(check_norm_engines(2, 20, seed, exec)?);
            checks.push(check_omega_identity(2, 10, seed, exec)?);
            checks.push(check_constraints_exhaustive(2, 3, seed, exec)?);
            checks.push(check_psi_fibres(1, exec));
            checks.push(check_rewritenorm(1, 10, seed, exec)?);
            checks.push(check_rewritenorm(2, 2, seed, exec)?);
            checks.push(check_preimage(2, 2, seed, exec)?);
            checks.push(check_trivial_norms(2, 20, seed, exec)?);
            checks.extend(check_chain_calculus(8, 3, 10, exec));
            checks.push(check_pythagoras(2, 50, seed));
            checks.push(check_rank_refine(2, 50, seed, &GrowthFunction::linear(1))?);
            checks.push(check_inequalities(2, 3, seed, exec)?);
            checks.push(check_vc2_baselines(2, 20, 2, seed, exec)?);
            checks.push(check_cylinder_runs(2, seed, exec)?);
        }
        Level::Full => {
            for n in [2, 3] {
                checks.push(check_norm_engines(n, 50, seed, exec)?);
            }
            checks.push(check_omega_identity(2, 20, seed, exec)?);
            checks.push(check_constraints_exhaustive(2, 5, seed, exec)?);
            checks.push(check_constraints_random(4, 1_000_000, 10, seed, exec)?);
            for n in [1, 2] {
                checks.push(check_psi_fibres(n, exec));
                checks.push(check_rewritenorm(n, 20, seed, exec)?);
            }
            checks.push(check_preimage(2, 5, seed, exec)?);
            for n in 1..=3 {
                checks.push(check_trivial_norms(n, 50, seed, exec)?);
            }
            checks.extend(check_chain_calculus(10, 5, 20, exec));
            checks.push(check_pythagoras(2, 100, seed));
            checks.push(check_rank_refine(4, 100, seed, &GrowthFunction::linear(1))?);
            for n in [2, 3] {
                checks.push(check_inequalities(n, 3, seed, exec)?);
            }
            checks.push(check_vc2_baselines(2, 50, 2, seed, exec)?);
            checks.push(check_cylinder_runs(3, seed, exec)?);
        }
    }
    let diag_n = if level == Level::Quick { 2 } else { 3 };
    let diagnostics = diagnostics(diag_n, seed, exec)?;
    Ok(VerifyReport { level, passed: checks.iter().all(|c| c.passed), checks, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_checks_pass() {
        assert!(check_psi_fibres(1, Exec::Sequential).passed);
        assert!(check_pythagoras(1, 10, 1).passed);
        let r = check_rewritenorm(1, 2, 1, Exec::Sequential).unwrap();
        assert!(r.passed, "{r}");
    }

    #[test]
    fn level_parses() {
        assert_eq!("quick".parse::<Level>().unwrap(), Level::Quick);
        assert!("slow".parse::<Level>().is_err());
    }
}
