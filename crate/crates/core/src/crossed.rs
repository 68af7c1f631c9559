//! Discrete premonoidal crossed products.
//!
//! A finite group acts on arrows through a unitary representation `ρ` on
//! `H`, by conjugation on the `H` factor. The crossed product lives over
//! `H̃ = H ⊗ ℓ²(G)` with basis `e_i ⊗ δ_g` at index `i·|G| + g`: `λ(g)` is
//! `id_H ⊗ P_g` for the left regular permutation `P_g`, and `π(f)` is block
//! diagonal over the group basis with blocks `g⁻¹ • f`.

use crate::commutant::{double_commutant, FinPremonCat, GeneratorSet, ObjectUniverse};
use crate::error::{Error, Result};
use crate::hilb::{compose, dagger, whisker_left, Arrow, Context, Obj};
use crate::linalg::{kron, operator_norm, CMatrix, ONE};

/// A finite group given by its multiplication table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    labels: Vec<String>,
    table: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
}

impl FiniteGroup {
    /// Validates `table[i][j] = index of gᵢ·gⱼ`: Latin square, associative,
    /// with a two-sided identity and inverses.
    pub fn new(labels: Vec<String>, table: Vec<Vec<usize>>) -> Result<Self> {
        let n = labels.len();
        let bad = |m: String| Err(Error::InvalidGroup(m));
        if n == 0 {
            return bad("group must have at least one element".into());
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return bad(format!("duplicate element label `{l}`"));
            }
        }
        if table.len() != n || table.iter().any(|row| row.len() != n) {
            return bad(format!("multiplication table must be {n}x{n}"));
        }
        if table.iter().flatten().any(|&k| k >= n) {
            return bad("table entry out of range".into());
        }
        for i in 0..n {
            let mut row_seen = vec![false; n];
            let mut col_seen = vec![false; n];
            for j in 0..n {
                row_seen[table[i][j]] = true;
                col_seen[table[j][i]] = true;
            }
            if row_seen.contains(&false) || col_seen.contains(&false) {
                return bad(format!("table is not a Latin square at index {i}"));
            }
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return bad(format!(
                            "not associative: ({}·{})·{}",
                            labels[a], labels[b], labels[c]
                        ));
                    }
                }
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| table[e][g] == g && table[g][e] == g))
            .ok_or_else(|| Error::InvalidGroup("no identity element".into()))?;
        let mut inverse = Vec::with_capacity(n);
        for g in 0..n {
            let inv = (0..n)
                .find(|&h| table[g][h] == identity && table[h][g] == identity)
                .ok_or_else(|| Error::InvalidGroup(format!("`{}` has no inverse", labels[g])))?;
            inverse.push(inv);
        }
        Ok(FiniteGroup { labels, table, identity, inverse })
    }

    /// `ℤ_n` with elements `e, g, g^2, …`.
    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGroup("cyclic group of order 0".into()));
        }
        let labels = (0..n)
            .map(|k| match k {
                0 => "e".to_string(),
                1 => "g".to_string(),
                k => format!("g^{k}"),
            })
            .collect();
        let table = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        FiniteGroup::new(labels, table)
    }

    /// `S_n` on permutations in lexicographic order, labelled in one-line
    /// notation; `(σ·τ)(i) = σ(τ(i))`.
    pub fn symmetric(n: usize) -> Result<Self> {
        if n == 0 || n > 6 {
            return Err(Error::InvalidGroup(format!("symmetric group S_{n} not supported")));
        }
        let mut perms: Vec<Vec<usize>> = vec![(0..n).collect()];
        loop {
            let mut p = perms.last().unwrap().clone();
            // next lexicographic permutation
            let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
                break;
            };
            let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).unwrap();
            p.swap(i, j);
            p[i + 1..].reverse();
            perms.push(p);
        }
        let index = |p: &Vec<usize>| perms.iter().position(|q| q == p).unwrap();
        let table = perms
            .iter()
            .map(|s| {
                perms
                    .iter()
                    .map(|t| index(&t.iter().map(|&k| s[k]).collect()))
                    .collect()
            })
            .collect();
        let labels = perms
            .iter()
            .map(|p| p.iter().map(|k| k.to_string()).collect::<String>())
            .collect();
        FiniteGroup::new(labels, table)
    }

    pub fn trivial() -> Self {
        FiniteGroup::cyclic(1).expect("order 1 is valid")
    }

    pub fn order(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inv(&self, g: usize) -> usize {
        self.inverse[g]
    }

    fn check(&self, g: usize) -> Result<()> {
        if g >= self.order() {
            return Err(Error::UnknownElement(g));
        }
        Ok(())
    }

    /// The left regular permutation `P_g` with `P_g[g·u, u] = 1`.
    pub fn regular_perm(&self, g: usize) -> Result<CMatrix> {
        self.check(g)?;
        let n = self.order();
        Ok(CMatrix::from_fn(n, n, |row, u| {
            if row == self.table[g][u] { ONE } else { crate::linalg::ZERO }
        }))
    }
}

const REP_TOL: f64 = 1e-10;

/// One unitary `hdim × hdim` matrix per group element.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryRep {
    group: FiniteGroup,
    mats: Vec<CMatrix>,
}

impl UnitaryRep {
    /// Validates unitarity, `ρ(e) = I` and `ρ(g)ρ(h) = ρ(gh)` to 1e-10.
    pub fn new(group: FiniteGroup, mats: Vec<CMatrix>) -> Result<Self> {
        let rep = UnitaryRep::unchecked(group, mats)?;
        rep.validate()?;
        Ok(rep)
    }

    /// Only checks shapes. Used for deliberately broken representations.
    pub fn unchecked(group: FiniteGroup, mats: Vec<CMatrix>) -> Result<Self> {
        if mats.len() != group.order() {
            return Err(Error::InvalidRep(format!(
                "{} matrices for a group of order {}",
                mats.len(),
                group.order()
            )));
        }
        let h = mats[0].rows();
        if h == 0 {
            return Err(Error::ZeroDimension);
        }
        if let Some(m) = mats.iter().find(|m| m.shape() != (h, h)) {
            return Err(Error::ShapeMismatch {
                expected_rows: h,
                expected_cols: h,
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        Ok(UnitaryRep { group, mats })
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.hdim();
        let id = CMatrix::identity(h);
        for (g, m) in self.mats.iter().enumerate() {
            if operator_norm(&(&(&m.adjoint() * m) - &id)) > REP_TOL {
                return Err(Error::InvalidRep(format!(
                    "matrix for `{}` is not unitary",
                    self.group.labels[g]
                )));
            }
        }
        if operator_norm(&(&self.mats[self.group.identity] - &id)) > REP_TOL {
            return Err(Error::InvalidRep("identity element is not sent to I".into()));
        }
        let defect = self.homomorphism_defect();
        if defect > REP_TOL {
            return Err(Error::InvalidRep(format!("not a homomorphism (defect {defect:.3e})")));
        }
        Ok(())
    }

    /// `max ‖ρ(g)ρ(h) − ρ(gh)‖` over all pairs.
    pub fn homomorphism_defect(&self) -> f64 {
        let n = self.group.order();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let prod = &self.mats[a] * &self.mats[b];
                let d = operator_norm(&(&prod - &self.mats[self.group.mul(a, b)]));
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn trivial(group: FiniteGroup, hdim: usize) -> Result<Self> {
        if hdim == 0 {
            return Err(Error::ZeroDimension);
        }
        let mats = vec![CMatrix::identity(hdim); group.order()];
        UnitaryRep::new(group, mats)
    }

    /// The left regular representation on `ℂ^|G|`.
    pub fn regular(group: FiniteGroup) -> Self {
        let mats = (0..group.order())
            .map(|g| group.regular_perm(g).expect("element in range"))
            .collect();
        UnitaryRep { group, mats }
    }

    pub fn direct_sum(&self, other: &UnitaryRep) -> Result<Self> {
        if self.group != other.group {
            return Err(Error::InvalidRep("direct sum of representations of different groups".into()));
        }
        let (a, b) = (self.hdim(), other.hdim());
        let mats = self
            .mats
            .iter()
            .zip(&other.mats)
            .map(|(x, y)| {
                CMatrix::from_fn(a + b, a + b, |i, j| match (i < a, j < a) {
                    (true, true) => x.get(i, j),
                    (false, false) => y.get(i - a, j - a),
                    _ => crate::linalg::ZERO,
                })
            })
            .collect();
        Ok(UnitaryRep { group: self.group.clone(), mats })
    }

    /// `g ↦ U·ρ(g)·U†` for a unitary `U`; the identity still maps to exactly `I`.
    pub fn conjugated(&self, u: &CMatrix) -> Result<Self> {
        let h = self.hdim();
        if u.shape() != (h, h) {
            return Err(Error::ShapeMismatch { expected_rows: h, expected_cols: h, rows: u.rows(), cols: u.cols() });
        }
        let ud = u.adjoint();
        let mut mats: Vec<CMatrix> = self.mats.iter().map(|m| &(u * m) * &ud).collect();
        mats[self.group.identity] = CMatrix::identity(h);
        UnitaryRep::new(self.group.clone(), mats)
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn hdim(&self) -> usize {
        self.mats[0].rows()
    }

    pub fn mat(&self, g: usize) -> Result<&CMatrix> {
        self.group.check(g)?;
        Ok(&self.mats[g])
    }

    pub fn mats(&self) -> &[CMatrix] {
        &self.mats
    }
}

/// The base space `H`, the group, and `H̃ = H ⊗ ℓ²(G)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossedContext {
    base: Context,
    group: FiniteGroup,
    tilde: Context,
}

impl CrossedContext {
    pub fn new(base: Context, group: FiniteGroup) -> Self {
        let tilde = Context::new(base.hdim() * group.order()).expect("positive dimensions");
        CrossedContext { base, group, tilde }
    }

    pub fn base(&self) -> Context {
        self.base
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn tilde(&self) -> Context {
        self.tilde
    }
}

fn ensure_rep_context(f: &Arrow, rep: &UnitaryRep) -> Result<()> {
    if f.ctx().hdim() != rep.hdim() {
        return Err(Error::ContextMismatch { left: rep.hdim(), right: f.ctx().hdim() });
    }
    Ok(())
}

fn ensure_crossed(rep: &UnitaryRep, cc: &CrossedContext) -> Result<()> {
    if rep.group() != cc.group() {
        return Err(Error::InvalidRep("representation and crossed context use different groups".into()));
    }
    if rep.hdim() != cc.base().hdim() {
        return Err(Error::ContextMismatch { left: cc.base().hdim(), right: rep.hdim() });
    }
    Ok(())
}

/// `g • f = (id_cod ⊗ ρ(g))·f·(id_dom ⊗ ρ(g)†)`; fixes objects.
pub fn act(g: usize, f: &Arrow, rep: &UnitaryRep) -> Result<Arrow> {
    ensure_rep_context(f, rep)?;
    let rho = rep.mat(g)?;
    let left = kron(&CMatrix::identity(f.cod().dim()), rho);
    let right = kron(&CMatrix::identity(f.dom().dim()), &rho.adjoint());
    Ok(f.with_mat(&(&left * f.mat()) * &right))
}

/// `λ(g) = id_H ⊗ P_g`, an arrow `I → I` over `H̃`.
pub fn lambda_embed(g: usize, cc: &CrossedContext) -> Result<Arrow> {
    let perm = cc.group.regular_perm(g)?;
    let mat = kron(&CMatrix::identity(cc.base.hdim()), &perm);
    Arrow::new(Obj::unit(), Obj::unit(), cc.tilde, mat)
}

/// `π(f)(x ⊗ e_i ⊗ δ_u) = (u⁻¹ • f)(x ⊗ e_i) ⊗ δ_u`, i.e.
/// `π(f) = Σ_u (u⁻¹ • f) ⊗ E_uu` under the lexicographic basis.
pub fn pi_embed(f: &Arrow, rep: &UnitaryRep, cc: &CrossedContext) -> Result<Arrow> {
    ensure_crossed(rep, cc)?;
    ensure_rep_context(f, rep)?;
    let n = cc.group.order();
    let (r, c) = (f.mat().rows() * n, f.mat().cols() * n);
    let mut acc = CMatrix::zeros(r, c);
    for u in 0..n {
        let twisted = act(cc.group.inv(u), f, rep)?;
        let corner = CMatrix::unit(n, n, u, u);
        acc = &acc + &kron(twisted.mat(), &corner);
    }
    Arrow::new(f.dom().clone(), f.cod().clone(), cc.tilde, acc)
}

/// `‖π(g•f) − (id_cod ⊗ λ(g))∘π(f)∘(id_dom ⊗ λ(g)*)‖`.
pub fn covariance_residual(g: usize, f: &Arrow, rep: &UnitaryRep, cc: &CrossedContext) -> Result<f64> {
    let lhs = pi_embed(&act(g, f, rep)?, rep, cc)?;
    let lam = lambda_embed(g, cc)?;
    let pf = pi_embed(f, rep, cc)?;
    let rhs = compose(
        &compose(&whisker_left(f.cod(), &lam), &pf)?,
        &whisker_left(f.dom(), &dagger(&lam)),
    )?;
    Ok(lhs.sub(&rhs)?.norm())
}

/// `{π(f) : f ∈ gens} ∪ {λ(g), λ(g)† : g ∈ G}` over `H̃`.
pub fn crossed_images(gens: &GeneratorSet, rep: &UnitaryRep, cc: &CrossedContext) -> Result<GeneratorSet> {
    let mut arrows = Vec::with_capacity(gens.len() + 2 * cc.group.order());
    for f in gens.arrows() {
        arrows.push(pi_embed(f, rep, cc)?);
    }
    for g in 0..cc.group.order() {
        let lam = lambda_embed(g, cc)?;
        arrows.push(dagger(&lam));
        arrows.push(lam);
    }
    GeneratorSet::new(cc.tilde, arrows)
}

/// The double commutant over `H̃` of the images of `G` and of `gens`.
pub fn crossed_product(
    gens: &GeneratorSet,
    rep: &UnitaryRep,
    universe: &ObjectUniverse,
    tol: f64,
) -> Result<FinPremonCat> {
    if gens.ctx().hdim() != rep.hdim() {
        return Err(Error::ContextMismatch { left: rep.hdim(), right: gens.ctx().hdim() });
    }
    if universe.ctx() != gens.ctx() {
        return Err(Error::ContextMismatch { left: gens.ctx().hdim(), right: universe.ctx().hdim() });
    }
    let cc = CrossedContext::new(gens.ctx(), rep.group().clone());
    let images = crossed_images(gens, rep, &cc)?;
    double_commutant(&images, &universe.with_context(cc.tilde), tol)
}

/// Crossed product presented by a category's hom-space bases instead of a
/// generator list.
pub fn crossed_product_of_category(cat: &FinPremonCat, rep: &UnitaryRep, tol: f64) -> Result<FinPremonCat> {
    crossed_product(&cat.generators(), rep, cat.universe(), tol)
}
