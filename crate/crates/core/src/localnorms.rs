//! Local U³ norms on atoms of a quadratic factor.
//!
//! Everything here enumerates under the bilinear constraints rather than
//! looping over G⁴ or G⁶. Costs, with B an atom and H ⊆ L(0) the admissible
//! differences for a fixed base point:
//! * `omega_count`: |B|·|H|³/64 word operations (bitset intersections);
//! * `norm_tw_eighth`: |B(d_a)|²·|B(d_b)|²·|B(d_c)|;
//! * `preimage_intersection`: |B(d_a)| + |B(d_b)| + |X|·|Y|.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factors::{AtomLabel, QuadraticFactor};
use crate::gf::{dot, FieldScalar, Prime, Space};
use crate::gowers::{u3_eighth, BoundedFunction};
use crate::par::Exec;

/// Local label tuple d = ((d_a, d_b, d_c), (d_ab, d_ac, d_bc)).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LocalLabelTuple {
    pub da: AtomLabel,
    pub db: AtomLabel,
    pub dc: AtomLabel,
    pub dab: Vec<FieldScalar>,
    pub dac: Vec<FieldScalar>,
    pub dbc: Vec<FieldScalar>,
}

impl LocalLabelTuple {
    /// The tuple (e, 0, 0; 0, 0, 0), whose Σ is e.
    pub fn canonical(e: &AtomLabel) -> Self {
        let (l, q) = (e.a.len(), e.b.len());
        LocalLabelTuple {
            da: e.clone(),
            db: AtomLabel::zero(l, q),
            dc: AtomLabel::zero(l, q),
            dab: vec![0; q],
            dac: vec![0; q],
            dbc: vec![0; q],
        }
    }

    fn check(&self, factor: &QuadraticFactor) -> Result<()> {
        for lab in [&self.da, &self.db, &self.dc] {
            factor.check_label(lab)?;
        }
        for v in [&self.dab, &self.dac, &self.dbc] {
            if v.len() != factor.q() || v.iter().any(|&c| c >= factor.p().get()) {
                return Err(Error::LabelMismatch { l: factor.l(), q: factor.q() });
            }
        }
        Ok(())
    }
}

/// Precomputed bilinear data of a factor: label codes and the vectors M_i x.
pub struct FactorForms<'a> {
    space: &'a Space,
    factor: &'a QuadraticFactor,
    labels: Vec<usize>,
    mx: Vec<FieldScalar>,
}

impl<'a> FactorForms<'a> {
    pub fn new(space: &'a Space, factor: &'a QuadraticFactor) -> Self {
        let (n, q) = (space.n(), factor.q());
        let mut mx = Vec::with_capacity(space.size() * q * n);
        for x in 0..space.size() {
            for m in factor.quadratic() {
                mx.extend(m.apply(space.p(), space.coords(x)));
            }
        }
        FactorForms { space, factor, labels: factor.label_table(space), mx }
    }

    pub fn space(&self) -> &Space {
        self.space
    }

    pub fn factor(&self) -> &QuadraticFactor {
        self.factor
    }

    pub fn label_code(&self, x: usize) -> usize {
        self.labels[x]
    }

    fn p(&self) -> Prime {
        self.space.p()
    }

    /// β_Q(x, y)_i.
    pub fn beta(&self, i: usize, x: usize, y: usize) -> FieldScalar {
        let n = self.space.n();
        let q = self.factor.q();
        let row = &self.mx[(x * q + i) * n..(x * q + i + 1) * n];
        dot(self.p(), row, self.space.coords(y))
    }

    pub fn beta_q(&self, x: usize, y: usize) -> Vec<FieldScalar> {
        (0..self.factor.q()).map(|i| self.beta(i, x, y)).collect()
    }

    /// Whether β_Q(x, y) equals `target` coordinatewise.
    pub fn beta_is(&self, x: usize, y: usize, target: &[FieldScalar]) -> bool {
        target.iter().enumerate().all(|(i, &t)| self.beta(i, x, y) == t)
    }

    /// Whether β_L(h) = 0.
    pub fn in_l0(&self, h: usize) -> bool {
        let p = self.p().get() as usize;
        let lin = self.labels[h] % p.pow(self.factor.l() as u32);
        lin == 0
    }

    pub fn atom(&self, e: &AtomLabel) -> Vec<usize> {
        let code = e.code(self.p());
        (0..self.space.size()).filter(|&x| self.labels[x] == code).collect()
    }

    /// L(0) = {h : β_L(h) = 0}.
    pub fn l0(&self) -> Vec<usize> {
        (0..self.space.size()).filter(|&h| self.in_l0(h)).collect()
    }

    /// 2β_Q(x, h) = −β_Q(h, h) in every coordinate.
    fn cube_compatible(&self, x: usize, h: usize) -> bool {
        let p = self.p();
        (0..self.factor.q()).all(|i| p.add(p.mul(2, self.beta(i, x, h)), self.beta(i, h, h)) == 0)
    }

    /// |β_Q^{-1}(d)| over G².
    pub fn fibre_size(&self, d: &[FieldScalar]) -> u64 {
        let g = self.space.size();
        (0..g).map(|x| (0..g).filter(|&y| self.beta_is(x, y, d)).count() as u64).sum()
    }
}

fn cube_points(space: &Space, x: usize, h: [usize; 3]) -> [usize; 8] {
    let mut pts = [0; 8];
    for (w, slot) in pts.iter_mut().enumerate() {
        let mut y = x;
        for (i, &hi) in h.iter().enumerate() {
            if w >> i & 1 == 1 {
                y = space.add(y, hi);
            }
        }
        *slot = y;
    }
    pts
}

/// All eight cube points lie in B(e).
pub fn omega_member_definitional(space: &Space, factor: &QuadraticFactor, e: &AtomLabel, x: usize, h: [usize; 3]) -> bool {
    let code = e.code(factor.p());
    cube_points(space, x, h).iter().all(|&y| factor.label_code_of(space, y) == code)
}

/// The constraint form: x ∈ B(e); h_i ∈ L(0); 2β_Q(x,h_i) = −β_Q(h_i,h_i);
/// β_Q(h_i,h_j) = 0 for i ≠ j.
pub fn omega_member_constraints(forms: &FactorForms<'_>, e: &AtomLabel, x: usize, h: [usize; 3]) -> bool {
    let zero = vec![0; forms.factor.q()];
    forms.label_code(x) == e.code(forms.p())
        && h.iter().all(|&hi| forms.in_l0(hi) && forms.cube_compatible(x, hi))
        && forms.beta_is(h[0], h[1], &zero)
        && forms.beta_is(h[0], h[2], &zero)
        && forms.beta_is(h[1], h[2], &zero)
}

/// Admissible differences H(x) and their pairwise-orthogonality bitsets.
fn admissible(forms: &FactorForms<'_>, l0: &[usize], x: usize) -> (Vec<usize>, Vec<Vec<u64>>) {
    let hs: Vec<usize> = l0.iter().copied().filter(|&h| forms.cube_compatible(x, h)).collect();
    let words = hs.len().div_ceil(64);
    let zero = vec![0; forms.factor.q()];
    let bits = hs
        .iter()
        .map(|&a| {
            let mut row = vec![0u64; words];
            for (k, &b) in hs.iter().enumerate() {
                if forms.beta_is(a, b, &zero) {
                    row[k / 64] |= 1 << (k % 64);
                }
            }
            row
        })
        .collect();
    (hs, bits)
}

/// |Ω_{B(e)}|, counted through the constraint form.
pub fn omega_count(forms: &FactorForms<'_>, e: &AtomLabel, exec: Exec) -> Result<u64> {
    forms.factor.check_label(e)?;
    let atom = forms.atom(e);
    let l0 = forms.l0();
    let counts = exec.map_items(&atom, |&x| {
        let (hs, bits) = admissible(forms, &l0, x);
        let mut total = 0u64;
        for i in 0..hs.len() {
            for j in 0..hs.len() {
                if bits[i][j / 64] >> (j % 64) & 1 == 1 {
                    total += bits[i].iter().zip(&bits[j]).map(|(a, b)| (a & b).count_ones() as u64).sum::<u64>();
                }
            }
        }
        total
    });
    Ok(counts.into_iter().sum())
}

/// Every tuple (x, h1, h2, h3) of Ω_{B(e)}, in lexicographic order.
pub fn omega_tuples(forms: &FactorForms<'_>, e: &AtomLabel) -> Result<Vec<[usize; 4]>> {
    forms.factor.check_label(e)?;
    let l0 = forms.l0();
    let mut out = Vec::new();
    for x in forms.atom(e) {
        let (hs, bits) = admissible(forms, &l0, x);
        let has = |i: usize, j: usize| bits[i][j / 64] >> (j % 64) & 1 == 1;
        for i in 0..hs.len() {
            for j in 0..hs.len() {
                if !has(i, j) {
                    continue;
                }
                for k in 0..hs.len() {
                    if has(i, k) && has(j, k) {
                        out.push([x, hs[i], hs[j], hs[k]]);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The size p^{4n−4ℓ−7q} that |Ω_B| is close to at high rank.
pub fn omega_predicted(p: Prime, n: usize, l: usize, q: usize) -> f64 {
    (p.get() as f64).powi(4 * n as i32 - 4 * l as i32 - 7 * q as i32)
}

/// u3_eighth(f·1_{B(e)}) / |Ω_{B(e)}|, or 0 when the numerator vanishes.
pub fn norm_p_eighth(forms: &FactorForms<'_>, f: &BoundedFunction, e: &AtomLabel, exec: Exec) -> Result<f64> {
    forms.factor.check_label(e)?;
    let atom = forms.atom(e);
    let numerator = u3_eighth(forms.space, &f.restrict_to(&atom), exec);
    if numerator == 0.0 {
        return Ok(0.0);
    }
    Ok(numerator / omega_count(forms, e, exec)? as f64)
}

/// Σ(d) = d_a + d_b + d_c + 2(0|d_ab) + 2(0|d_ac) + 2(0|d_bc).
pub fn sigma_label(p: Prime, d: &LocalLabelTuple) -> AtomLabel {
    let a = (0..d.da.a.len()).map(|i| (d.da.a[i] + d.db.a[i] + d.dc.a[i]) % p.get()).collect();
    let b = (0..d.da.b.len())
        .map(|i| {
            let s = d.da.b[i] + d.db.b[i] + d.dc.b[i] + 2 * (d.dab[i] + d.dac[i] + d.dbc[i]);
            s % p.get()
        })
        .collect();
    AtomLabel { a, b }
}

/// K₁₁₁(d): triples with the prescribed atom labels and pairwise β_Q values.
pub fn k111_members(forms: &FactorForms<'_>, d: &LocalLabelTuple) -> Result<Vec<[usize; 3]>> {
    d.check(forms.factor)?;
    let (ba, bb, bc) = (forms.atom(&d.da), forms.atom(&d.db), forms.atom(&d.dc));
    let mut out = Vec::new();
    for &x in &ba {
        for &y in bb.iter().filter(|&&y| forms.beta_is(x, y, &d.dab)) {
            for &z in &bc {
                if forms.beta_is(x, z, &d.dac) && forms.beta_is(y, z, &d.dbc) {
                    out.push([x, y, z]);
                }
            }
        }
    }
    Ok(out)
}

/// K₂₂₂(d) as tuples (x1, x2, y1, y2, z1, z2), by constraint propagation.
pub fn k222_members(forms: &FactorForms<'_>, d: &LocalLabelTuple) -> Result<Vec<[usize; 6]>> {
    d.check(forms.factor)?;
    let (ba, bb, bc) = (forms.atom(&d.da), forms.atom(&d.db), forms.atom(&d.dc));
    let mut out = Vec::new();
    for &x1 in &ba {
        for &x2 in &ba {
            let ys: Vec<usize> = bb.iter().copied().filter(|&y| forms.beta_is(x1, y, &d.dab) && forms.beta_is(x2, y, &d.dab)).collect();
            let zx: Vec<usize> = bc.iter().copied().filter(|&z| forms.beta_is(x1, z, &d.dac) && forms.beta_is(x2, z, &d.dac)).collect();
            for &y1 in &ys {
                for &y2 in &ys {
                    let zs: Vec<usize> = zx.iter().copied().filter(|&z| forms.beta_is(y1, z, &d.dbc) && forms.beta_is(y2, z, &d.dbc)).collect();
                    for &z1 in &zs {
                        for &z2 in &zs {
                            out.push([x1, x2, y1, y2, z1, z2]);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The normalized TW expectation (‖f‖^{TW}_{U³(d)})⁸.
///
/// Each μ weight is |G|²/|Γ|·1_Γ, so the value is
/// |G|^{24}·(|Γ_ab||Γ_ac||Γ_bc|)^{-4}·(|B_a||B_b||B_c|)^{-2}·Σ_{K₂₂₂(d)} Π f.
/// The sum over (z1, z2) factors as a square because both z's face the same
/// constraints.
pub fn norm_tw_eighth(forms: &FactorForms<'_>, f: &BoundedFunction, d: &LocalLabelTuple, exec: Exec) -> Result<f64> {
    d.check(forms.factor)?;
    let space = forms.space;
    let (ba, bb, bc) = (forms.atom(&d.da), forms.atom(&d.db), forms.atom(&d.dc));
    for (name, atom) in [("d_a", &ba), ("d_b", &bb), ("d_c", &bc)] {
        if atom.is_empty() {
            return Err(Error::DegenerateLabel(format!("atom {name} is empty")));
        }
    }
    let mut fibres = [0u64; 3];
    for (slot, (name, t)) in fibres.iter_mut().zip([("d_ab", &d.dab), ("d_ac", &d.dac), ("d_bc", &d.dbc)]) {
        *slot = forms.fibre_size(t);
        if *slot == 0 {
            return Err(Error::DegenerateLabel(format!("fibre {name} is empty")));
        }
    }
    let pairs: Vec<(usize, usize)> = ba.iter().flat_map(|&x1| ba.iter().map(move |&x2| (x1, x2))).collect();
    let partial = exec.map_items(&pairs, |&(x1, x2)| {
        let ys: Vec<usize> = bb.iter().copied().filter(|&y| forms.beta_is(x1, y, &d.dab) && forms.beta_is(x2, y, &d.dab)).collect();
        let zx: Vec<usize> = bc.iter().copied().filter(|&z| forms.beta_is(x1, z, &d.dac) && forms.beta_is(x2, z, &d.dac)).collect();
        let mut acc = 0.0;
        for &y1 in &ys {
            let (s11, s21) = (space.add(x1, y1), space.add(x2, y1));
            for &y2 in &ys {
                let (s12, s22) = (space.add(x1, y2), space.add(x2, y2));
                let inner: f64 = zx
                    .iter()
                    .filter(|&&z| forms.beta_is(y1, z, &d.dbc) && forms.beta_is(y2, z, &d.dbc))
                    .map(|&z| {
                        f.value(space.add(s11, z)) * f.value(space.add(s12, z)) * f.value(space.add(s21, z)) * f.value(space.add(s22, z))
                    })
                    .sum();
                acc += inner * inner;
            }
        }
        acc
    });
    let sum: f64 = partial.into_iter().sum();
    let g2 = (space.size() as f64).powi(2);
    let mut scale = 1.0;
    for fib in fibres {
        scale *= (g2 / fib as f64).powi(4);
    }
    for atom in [&ba, &bb, &bc] {
        scale /= (atom.len() as f64).powi(2);
    }
    Ok(sum * scale)
}

/// Ψ(x1,x2,y1,y2,z1,z2) = (x1+y1+z1, x2−x1, y2−y1, z2−z1).
pub fn psi_map(space: &Space, t: [usize; 6]) -> [usize; 4] {
    [space.add(space.add(t[0], t[2]), t[4]), space.sub(t[1], t[0]), space.sub(t[3], t[2]), space.sub(t[5], t[4])]
}

/// Ψ^{-1}(w, h_a, h_b, h_c) ∩ K₂₂₂(d), through the X/Y parametrization:
/// tuples (x, x+h_a, y, y+h_b, w−x−y, w−x−y+h_c) with x ∈ X, y ∈ Y and
/// β_Q(x, y) = d_ab. Sorted ascending.
#[allow(clippy::too_many_arguments)]
pub fn preimage_intersection(
    forms: &FactorForms<'_>,
    d: &LocalLabelTuple,
    e: &AtomLabel,
    w: usize,
    ha: usize,
    hb: usize,
    hc: usize,
) -> Result<Vec<[usize; 6]>> {
    d.check(forms.factor)?;
    let p = forms.p();
    if sigma_label(p, d) != *e {
        return Err(Error::Invalid(format!("Sigma(d) = {} differs from e = {}", sigma_label(p, d), e)));
    }
    if !omega_member_constraints(forms, e, w, [ha, hb, hc]) {
        return Err(Error::Invalid("(w, h_a, h_b, h_c) is not in Omega of B(e)".into()));
    }
    let space = forms.space;
    let q = forms.factor.q();
    let zero = vec![0; q];
    let side = |atom: &AtomLabel, own: usize, others: [usize; 2], target: Vec<FieldScalar>| -> Vec<usize> {
        forms
            .atom(atom)
            .into_iter()
            .filter(|&x| {
                forms.beta_is(x, others[0], &zero)
                    && forms.beta_is(x, others[1], &zero)
                    && forms.cube_compatible(x, own)
                    && forms.beta_is(x, w, &target)
            })
            .collect()
    };
    let tx = (0..q).map(|i| (d.da.b[i] + d.dac[i] + d.dab[i]) % p.get()).collect();
    let ty = (0..q).map(|i| (d.db.b[i] + d.dbc[i] + d.dab[i]) % p.get()).collect();
    let xs = side(&d.da, ha, [hb, hc], tx);
    let ys = side(&d.db, hb, [ha, hc], ty);
    let mut out = Vec::new();
    for &x in &xs {
        for &y in ys.iter().filter(|&&y| forms.beta_is(x, y, &d.dab)) {
            let z = space.sub(space.sub(w, x), y);
            out.push([x, space.add(x, ha), y, space.add(y, hb), z, space.add(z, hc)]);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Both eighth powers for a tuple d with Σ(d) = e.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormEquivalence {
    pub tw8: f64,
    pub p8: f64,
    pub diff: f64,
    pub rank: usize,
    pub atom_size: usize,
    pub omega_count: u64,
    pub omega_predicted: f64,
}

pub fn norm_equivalence_report(
    forms: &FactorForms<'_>,
    f: &BoundedFunction,
    e: &AtomLabel,
    d: &LocalLabelTuple,
    exec: Exec,
) -> Result<NormEquivalence> {
    let p = forms.p();
    if sigma_label(p, d) != *e {
        return Err(Error::Invalid("Sigma(d) must equal e".into()));
    }
    let tw8 = norm_tw_eighth(forms, f, d, exec)?;
    let p8 = norm_p_eighth(forms, f, e, exec)?;
    let (l, q) = forms.factor.complexity();
    Ok(NormEquivalence {
        tw8,
        p8,
        diff: tw8 - p8,
        rank: forms.factor.rank()?,
        atom_size: forms.atom(e).len(),
        omega_count: omega_count(forms, e, exec)?,
        omega_predicted: omega_predicted(p, forms.space.n(), l, q),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::{GroupElement, SymMatrix};

    fn setup(n: usize) -> Space {
        Space::new(Prime::new(3).unwrap(), n).unwrap()
    }

    #[test]
    fn sigma_example() {
        let p = Prime::new(3).unwrap();
        let d = LocalLabelTuple {
            da: AtomLabel::new(vec![1], vec![0]),
            db: AtomLabel::new(vec![1], vec![1]),
            dc: AtomLabel::new(vec![0], vec![2]),
            dab: vec![1],
            dac: vec![0],
            dbc: vec![2],
        };
        assert_eq!(sigma_label(p, &d), AtomLabel::new(vec![2], vec![0]));
        assert_eq!(sigma_label(p, &LocalLabelTuple::canonical(&AtomLabel::zero(1, 1))), AtomLabel::zero(1, 1));
    }

    #[test]
    fn omega_examples() {
        let s = setup(2);
        let p = s.p();
        let t = QuadraticFactor::trivial(p, 2);
        let forms = FactorForms::new(&s, &t);
        assert_eq!(omega_count(&forms, &AtomLabel::zero(0, 0), Exec::Parallel).unwrap(), 6561);
        let h = QuadraticFactor::new(p, 2, vec![GroupElement::unit(2, 0)], vec![]).unwrap();
        let forms = FactorForms::new(&s, &h);
        assert_eq!(omega_count(&forms, &AtomLabel::new(vec![1], vec![]), Exec::Parallel).unwrap(), 81);
        let e = AtomLabel::new(vec![0], vec![]);
        let on = s.encode(&[0, 1]);
        let off = s.encode(&[1, 0]);
        assert!(omega_member_definitional(&s, &h, &e, 0, [on, on, 0]));
        assert!(!omega_member_definitional(&s, &h, &e, 0, [off, 0, 0]));
        assert!(omega_member_constraints(&forms, &e, 0, [0, 0, 0]));
    }

    #[test]
    fn norm_p_examples() {
        let s = setup(2);
        let p = s.p();
        let f = QuadraticFactor::new(p, 2, vec![], vec![SymMatrix::identity(2)]).unwrap();
        let forms = FactorForms::new(&s, &f);
        let e = AtomLabel::new(vec![], vec![1]);
        let one = BoundedFunction::constant_int(&s, 1, 1).unwrap();
        assert!((norm_p_eighth(&forms, &one, &e, Exec::Parallel).unwrap() - 1.0).abs() < 1e-12);
        let zero = BoundedFunction::constant_int(&s, 0, 1).unwrap();
        assert_eq!(norm_p_eighth(&forms, &zero, &e, Exec::Parallel).unwrap(), 0.0);
        let atom = forms.atom(&e);
        let mut member = vec![false; 9];
        atom.iter().for_each(|&x| member[x] = true);
        let bal = BoundedFunction::balanced_on(&s, &member, &atom).unwrap();
        assert_eq!(norm_p_eighth(&forms, &bal, &e, Exec::Parallel).unwrap(), 0.0);
    }

    #[test]
    fn tw_trivial_and_degenerate() {
        let s = setup(1);
        let p = s.p();
        let t = QuadraticFactor::trivial(p, 1);
        let forms = FactorForms::new(&s, &t);
        let one = BoundedFunction::constant_int(&s, 1, 1).unwrap();
        let d = LocalLabelTuple::canonical(&AtomLabel::zero(0, 0));
        assert!((norm_tw_eighth(&forms, &one, &d, Exec::Parallel).unwrap() - 1.0).abs() < 1e-12);
        // x^2 = 2 has no solution mod 3 in one variable.
        let f = QuadraticFactor::new(p, 1, vec![], vec![SymMatrix::identity(1)]).unwrap();
        let forms = FactorForms::new(&s, &f);
        let d = LocalLabelTuple::canonical(&AtomLabel::new(vec![], vec![2]));
        assert!(matches!(norm_tw_eighth(&forms, &one, &d, Exec::Parallel), Err(Error::DegenerateLabel(_))));
    }

    #[test]
    fn psi_zero() {
        let s = setup(2);
        assert_eq!(psi_map(&s, [0; 6]), [0; 4]);
    }

    #[test]
    fn preimage_trivial_factor() {
        let s = setup(1);
        let t = QuadraticFactor::trivial(s.p(), 1);
        let forms = FactorForms::new(&s, &t);
        let e = AtomLabel::zero(0, 0);
        let d = LocalLabelTuple::canonical(&e);
        assert_eq!(preimage_intersection(&forms, &d, &e, 1, 2, 0, 1).unwrap().len(), 9);
    }
}
