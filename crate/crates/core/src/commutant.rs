//! Commutants and double commutants over a finite object universe.
//!
//! For a generator set `A`, the commutant hom-space `A'(B, D)` is the joint
//! kernel of the linear maps `f ↦ g⋉f − g⋊f` and `f ↦ f⋉g − f⋊g` for every
//! generator `g`. Each map is assembled column by column on the unit matrices
//! `E_pq` of `Hilb_H(B, D)` (column-stacking order), stacked, and handed to the
//! SVD-based nullspace solver.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilb::{whisker_left, whisker_right, dagger, Arrow, Context, Obj};
use crate::linalg::{
    kron, orthonormal_span, projection_residual, CMatrix, StackedSystem, C64, ZERO,
};

/// Tolerance used when comparing computed subspaces.
pub const SUBSPACE_TOL: f64 = 1e-8;

/// A finite list of objects standing in for all objects of `Hilb_H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectUniverse {
    objects: Vec<Obj>,
    ctx: Context,
}

impl ObjectUniverse {
    pub fn new(ctx: Context, objects: Vec<Obj>) -> Result<Self> {
        for (i, o) in objects.iter().enumerate() {
            if objects[..i].iter().any(|p| p.name() == o.name()) {
                return Err(Error::DuplicateObject(o.name().to_string()));
            }
        }
        if !objects.iter().any(Obj::is_unit) {
            return Err(Error::MissingUnit);
        }
        Ok(ObjectUniverse { objects, ctx })
    }

    /// Objects `I` (dim 1) and `X<d>` for every other listed dimension.
    pub fn with_dims(ctx: Context, dims: &[usize]) -> Result<Self> {
        let mut objects = vec![Obj::unit()];
        for &d in dims {
            if d == 1 {
                continue;
            }
            let o = Obj::new(format!("X{d}"), d)?;
            if !objects.contains(&o) {
                objects.push(o);
            }
        }
        ObjectUniverse::new(ctx, objects)
    }

    /// `I`, `X2`, `X3`, then every dom/cod of the generators not yet present.
    pub fn default_for(ctx: Context, gens: &GeneratorSet) -> Self {
        let mut u = ObjectUniverse::with_dims(ctx, &[1, 2, 3]).expect("fixed dims are valid");
        for f in gens.arrows() {
            for o in [f.dom(), f.cod()] {
                if !u.objects.iter().any(|p| p.name() == o.name()) {
                    u.objects.push(o.clone());
                }
            }
        }
        u
    }

    pub fn ctx(&self) -> Context {
        self.ctx
    }

    pub fn objects(&self) -> &[Obj] {
        &self.objects
    }

    pub fn get(&self, name: &str) -> Option<&Obj> {
        self.objects.iter().find(|o| o.name() == name)
    }

    pub fn unit(&self) -> &Obj {
        self.objects.iter().find(|o| o.is_unit()).expect("universe contains the unit")
    }

    /// All ordered `(dom, cod)` pairs, dom-major.
    pub fn pairs(&self) -> Vec<(Obj, Obj)> {
        let mut out = Vec::with_capacity(self.objects.len() * self.objects.len());
        for b in &self.objects {
            for d in &self.objects {
                out.push((b.clone(), d.clone()));
            }
        }
        out
    }

    /// The same objects over another context.
    pub fn with_context(&self, ctx: Context) -> Self {
        ObjectUniverse { objects: self.objects.clone(), ctx }
    }
}

/// A finite set of arrows over one context.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    ctx: Context,
    arrows: Vec<Arrow>,
}

impl GeneratorSet {
    pub fn new(ctx: Context, arrows: Vec<Arrow>) -> Result<Self> {
        for f in &arrows {
            if f.ctx() != ctx {
                return Err(Error::ContextMismatch { left: ctx.hdim(), right: f.ctx().hdim() });
            }
        }
        Ok(GeneratorSet { ctx, arrows })
    }

    pub fn empty(ctx: Context) -> Self {
        GeneratorSet { ctx, arrows: Vec::new() }
    }

    pub fn ctx(&self) -> Context {
        self.ctx
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn len(&self) -> usize {
        self.arrows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrows.is_empty()
    }

    /// Adds `f†` for every generator whose dagger is not already present.
    pub fn dagger_closure(&self, tol: f64) -> GeneratorSet {
        let mut arrows = self.arrows.clone();
        for f in &self.arrows {
            let fd = dagger(f);
            if !arrows.iter().any(|g| g.approx_eq(&fd, tol)) {
                arrows.push(fd);
            }
        }
        GeneratorSet { ctx: self.ctx, arrows }
    }

    /// Spans of the generators grouped by `(dom, cod)`.
    pub fn spans(&self, tol: f64) -> BTreeMap<(Obj, Obj), HomSubspace> {
        let mut groups: BTreeMap<(Obj, Obj), Vec<Arrow>> = BTreeMap::new();
        for f in &self.arrows {
            groups.entry((f.dom().clone(), f.cod().clone())).or_default().push(f.clone());
        }
        groups
            .into_iter()
            .map(|((d, c), fs)| {
                let span = HomSubspace::span(&d, &c, self.ctx, &fs, tol);
                ((d, c), span)
            })
            .collect()
    }

    /// Fails unless every `f†` lies in the span of the generators `cod → dom`
    /// (relative residual at most `tol`).
    pub fn check_dagger_closed(&self, tol: f64) -> Result<()> {
        let spans = self.spans(tol);
        for (index, f) in self.arrows.iter().enumerate() {
            let fd = dagger(f);
            let residual = match spans.get(&(f.cod().clone(), f.dom().clone())) {
                Some(s) => s.relative_residual(&fd),
                None if f.mat().max_abs_entry() == 0.0 => 0.0,
                None => 1.0,
            };
            if residual > tol {
                return Err(Error::NotDaggerClosed {
                    index,
                    dom: f.dom().to_string(),
                    cod: f.cod().to_string(),
                    residual,
                });
            }
        }
        Ok(())
    }
}

/// An orthonormal basis, under `⟨f, g⟩ = Tr(f†g)`, of a subspace of
/// `Hilb_H(dom, cod)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomSubspace {
    dom: Obj,
    cod: Obj,
    ctx: Context,
    basis: Vec<Arrow>,
}

impl HomSubspace {
    pub(crate) fn from_vectors(dom: &Obj, cod: &Obj, ctx: Context, vecs: Vec<Vec<C64>>) -> Self {
        let (r, c) = (cod.dim() * ctx.hdim(), dom.dim() * ctx.hdim());
        let basis = vecs
            .into_iter()
            .map(|v| {
                let m = CMatrix::from_column_stack(r, c, &v).expect("vector length matches shape");
                Arrow::new(dom.clone(), cod.clone(), ctx, m).expect("shape matches objects")
            })
            .collect();
        HomSubspace { dom: dom.clone(), cod: cod.clone(), ctx, basis }
    }

    /// Orthonormalized span of those `arrows` that go `dom → cod`; directions
    /// with relative singular value below `tol` are dropped.
    pub fn span(dom: &Obj, cod: &Obj, ctx: Context, arrows: &[Arrow], tol: f64) -> Self {
        let len = dom.dim() * cod.dim() * ctx.hdim() * ctx.hdim();
        let vecs: Vec<Vec<C64>> = arrows
            .iter()
            .filter(|f| f.dom() == dom && f.cod() == cod && f.ctx() == ctx)
            .map(|f| f.mat().vectorize())
            .collect();
        HomSubspace::from_vectors(dom, cod, ctx, orthonormal_span(&vecs, len, tol))
    }

    /// The whole hom-set, with the matrix units in column-stacking order.
    pub fn full(dom: &Obj, cod: &Obj, ctx: Context) -> Self {
        let (r, c) = (cod.dim() * ctx.hdim(), dom.dim() * ctx.hdim());
        let basis = (0..c)
            .flat_map(|q| (0..r).map(move |p| (p, q)))
            .map(|(p, q)| Arrow::new(dom.clone(), cod.clone(), ctx, CMatrix::unit(r, c, p, q)).unwrap())
            .collect();
        HomSubspace { dom: dom.clone(), cod: cod.clone(), ctx, basis }
    }

    /// The centre slice `{f̂ ⊗ id_H}`.
    pub fn central_slice(dom: &Obj, cod: &Obj, ctx: Context) -> Self {
        let basis = (0..dom.dim())
            .flat_map(|q| (0..cod.dim()).map(move |p| (p, q)))
            .map(|(p, q)| {
                let hat = CMatrix::unit(cod.dim(), dom.dim(), p, q);
                let mut f = Arrow::central(&hat, dom, cod, ctx).unwrap();
                f = f.scale(C64::new(1.0 / (ctx.hdim() as f64).sqrt(), 0.0));
                f
            })
            .collect();
        HomSubspace { dom: dom.clone(), cod: cod.clone(), ctx, basis }
    }

    pub fn dom(&self) -> &Obj {
        &self.dom
    }

    pub fn cod(&self) -> &Obj {
        &self.cod
    }

    pub fn ctx(&self) -> Context {
        self.ctx
    }

    pub fn basis(&self) -> &[Arrow] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn vectors(&self) -> Vec<Vec<C64>> {
        self.basis.iter().map(|f| f.mat().vectorize()).collect()
    }

    /// Frobenius distance from `m` to the span.
    pub fn residual(&self, m: &CMatrix) -> f64 {
        projection_residual(&self.vectors(), &m.vectorize())
    }

    /// Distance from `f` to the span, relative to `‖f‖_F`; zero for `f = 0`.
    pub fn relative_residual(&self, f: &Arrow) -> f64 {
        let n = f.mat().frobenius_norm();
        if n == 0.0 {
            0.0
        } else {
            self.residual(f.mat()) / n
        }
    }

    /// Orthogonal projection of `f` onto the span.
    pub fn project(&self, f: &Arrow) -> Arrow {
        let mut acc = CMatrix::zeros(f.mat().rows(), f.mat().cols());
        for b in &self.basis {
            let c = crate::linalg::trace_inner(b.mat(), f.mat());
            acc = &acc + &b.mat().scale(c);
        }
        f.with_mat(acc)
    }

    /// `max |G − I|` for the Gram matrix of the basis.
    pub fn gram_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let g = crate::linalg::trace_inner(a.mat(), b.mat());
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

fn ensure_same_hom(a: &HomSubspace, b: &HomSubspace) -> Result<()> {
    if a.ctx != b.ctx {
        return Err(Error::ContextMismatch { left: a.ctx.hdim(), right: b.ctx.hdim() });
    }
    if a.dom.dim() != b.dom.dim() || a.cod.dim() != b.cod.dim() {
        return Err(Error::ShapeMismatch {
            expected_rows: a.cod.dim(),
            expected_cols: a.dom.dim(),
            rows: b.cod.dim(),
            cols: b.dom.dim(),
        });
    }
    Ok(())
}

/// Every basis vector of `b` lies within `tol` of `span(a)`.
pub fn subspace_contains(a: &HomSubspace, b: &HomSubspace, tol: f64) -> Result<bool> {
    ensure_same_hom(a, b)?;
    let av = a.vectors();
    Ok(b.basis.iter().all(|f| projection_residual(&av, &f.mat().vectorize()) <= tol))
}

/// Mutual containment.
pub fn subspace_equal(a: &HomSubspace, b: &HomSubspace, tol: f64) -> Result<bool> {
    Ok(subspace_contains(a, b, tol)? && subspace_contains(b, a, tol)?)
}

/// A finite premonoidal subcategory: one hom-subspace per ordered pair of
/// universe objects.
#[derive(Debug, Clone, PartialEq)]
pub struct FinPremonCat {
    universe: ObjectUniverse,
    homs: Vec<HomSubspace>,
}

impl FinPremonCat {
    /// Pairs the hom-spaces with `universe.pairs()`; missing pairs are empty.
    pub fn from_homs(universe: ObjectUniverse, homs: Vec<HomSubspace>) -> Result<Self> {
        let ctx = universe.ctx();
        let mut ordered = Vec::new();
        for (b, d) in universe.pairs() {
            let found = homs.iter().find(|h| h.dom == b && h.cod == d);
            match found {
                Some(h) if h.ctx != ctx => {
                    return Err(Error::ContextMismatch { left: ctx.hdim(), right: h.ctx.hdim() })
                }
                Some(h) => ordered.push(h.clone()),
                None => ordered.push(HomSubspace::from_vectors(&b, &d, ctx, Vec::new())),
            }
        }
        for h in &homs {
            if universe.get(h.dom.name()) != Some(&h.dom) || universe.get(h.cod.name()) != Some(&h.cod) {
                return Err(Error::UnknownObject(format!("{} -> {}", h.dom, h.cod)));
            }
        }
        Ok(FinPremonCat { universe, homs: ordered })
    }

    /// The spans of a generator set, truncated to the universe.
    pub fn span_of(gens: &GeneratorSet, universe: ObjectUniverse, tol: f64) -> Result<Self> {
        let spans = gens.spans(tol);
        FinPremonCat::from_homs(universe, spans.into_values().collect())
    }

    /// The whole of `Hilb_H` truncated to the universe.
    pub fn full(universe: ObjectUniverse) -> Self {
        let ctx = universe.ctx();
        let homs = universe.pairs().iter().map(|(b, d)| HomSubspace::full(b, d, ctx)).collect();
        FinPremonCat { universe, homs }
    }

    pub fn universe(&self) -> &ObjectUniverse {
        &self.universe
    }

    pub fn homs(&self) -> &[HomSubspace] {
        &self.homs
    }

    pub fn hom(&self, dom: &str, cod: &str) -> Option<&HomSubspace> {
        self.homs.iter().find(|h| h.dom.name() == dom && h.cod.name() == cod)
    }

    /// Union of all hom bases.
    pub fn all_arrows(&self) -> Vec<Arrow> {
        self.homs.iter().flat_map(|h| h.basis.iter().cloned()).collect()
    }

    pub fn generators(&self) -> GeneratorSet {
        GeneratorSet { ctx: self.universe.ctx(), arrows: self.all_arrows() }
    }

    /// Worst violation of the category invariants: identities in every
    /// endo-hom and dagger closure of every hom-pair.
    pub fn invariant_defect(&self) -> f64 {
        let ctx = self.universe.ctx();
        let mut worst: f64 = 0.0;
        for h in &self.homs {
            if h.dom == h.cod {
                worst = worst.max(h.relative_residual(&Arrow::identity(&h.dom, ctx)));
            }
            let back = self.hom(h.cod.name(), h.dom.name()).expect("all pairs present");
            for f in &h.basis {
                worst = worst.max(back.relative_residual(&dagger(f)));
            }
            worst = worst.max(h.gram_defect());
        }
        worst
    }
}

/// For each unknown index `u` of an `rows × cols` matrix (column-stacked),
/// the positions its unit matrix occupies after a whiskering.
struct Scatter {
    positions: Vec<Vec<(usize, usize)>>,
}

impl Scatter {
    /// Whiskering only permutes entries and tensors with identities, so
    /// applying it to a matrix whose entries encode their own index reveals
    /// where each entry lands.
    fn of(dom: &Obj, cod: &Obj, ctx: Context, whisker: impl Fn(&Arrow) -> Arrow) -> Scatter {
        let (r, c) = (cod.dim() * ctx.hdim(), dom.dim() * ctx.hdim());
        let tagged = CMatrix::from_fn(r, c, |p, q| C64::new((q * r + p + 1) as f64, 0.0));
        let f = Arrow::new(dom.clone(), cod.clone(), ctx, tagged).expect("shape matches");
        let out = whisker(&f).into_mat().into_matrix();
        let mut positions = vec![Vec::new(); r * c];
        for j in 0..out.ncols() {
            for i in 0..out.nrows() {
                let z = out[(i, j)];
                if z != ZERO {
                    let tag = z.re.round();
                    debug_assert!((z.re - tag).abs() < 1e-9 && z.im == 0.0);
                    positions[tag as usize - 1].push((i, j));
                }
            }
        }
        Scatter { positions }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Side {
    /// `a ⊗ f`
    Left,
    /// `f ⊗ a`
    Right,
}

/// Column-stacked coefficient block of one linear map
/// `f ↦ L·W₁(f) − W₂(f)·R` on the unknown hom-space.
struct Block {
    out_rows: usize,
    mat: DMatrix<C64>,
}

impl Block {
    fn new(out_rows: usize, out_cols: usize, unknowns: usize) -> Self {
        Block { out_rows, mat: DMatrix::zeros(out_rows * out_cols, unknowns) }
    }

    /// Adds `sign · L·W(f)`.
    fn left_product(&mut self, left: &CMatrix, scatter: &Scatter, sign: f64) {
        let l = left.as_matrix();
        for (u, spots) in scatter.positions.iter().enumerate() {
            for &(r, c) in spots {
                let base = c * self.out_rows;
                for i in 0..self.out_rows {
                    let z = l[(i, r)];
                    if z != ZERO {
                        self.mat[(base + i, u)] += z * sign;
                    }
                }
            }
        }
    }

    /// Adds `sign · W(f)·R`.
    fn right_product(&mut self, right: &CMatrix, scatter: &Scatter, sign: f64) {
        let rm = right.as_matrix();
        for (u, spots) in scatter.positions.iter().enumerate() {
            for &(r, c) in spots {
                for j in 0..rm.ncols() {
                    let z = rm[(c, j)];
                    if z != ZERO {
                        self.mat[(j * self.out_rows + r, u)] += z * sign;
                    }
                }
            }
        }
    }
}

/// Solves one hom-pair `(b, d)` of the commutant of `gens`.
fn solve_pair(b: &Obj, d: &Obj, ctx: Context, gens: &[Arrow], tol: f64) -> HomSubspace {
    let h = ctx.hdim();
    let unknowns = b.dim() * d.dim() * h * h;
    let mut scatters: HashMap<(Side, &Obj), Scatter> = HashMap::new();
    for g in gens {
        for a in [g.dom(), g.cod()] {
            scatters
                .entry((Side::Left, a))
                .or_insert_with(|| Scatter::of(b, d, ctx, |f| whisker_left(a, f)));
            scatters
                .entry((Side::Right, a))
                .or_insert_with(|| Scatter::of(b, d, ctx, |f| whisker_right(f, a)));
        }
    }
    let mut system = StackedSystem::new(unknowns);
    for g in gens {
        let (a, c) = (g.dom(), g.cod());
        let right_a = &scatters[&(Side::Right, a)];
        let right_c = &scatters[&(Side::Right, c)];
        let left_c = &scatters[&(Side::Left, c)];
        let left_a = &scatters[&(Side::Left, a)];

        // f⋉g − f⋊g = (D⊗g)(f⊗A) − (f⊗C)(B⊗g): B⊗A → D⊗C
        let mut zeta = Block::new(d.dim() * c.dim() * h, b.dim() * a.dim() * h, unknowns);
        zeta.left_product(whisker_left(d, g).mat(), right_a, 1.0);
        zeta.right_product(whisker_left(b, g).mat(), right_c, -1.0);
        system.push(zeta.mat);

        // g⋉f − g⋊f = (C⊗f)(g⊗B) − (g⊗D)(A⊗f): A⊗B → C⊗D
        let mut eta = Block::new(c.dim() * d.dim() * h, a.dim() * b.dim() * h, unknowns);
        eta.right_product(whisker_right(g, b).mat(), left_c, 1.0);
        eta.left_product(whisker_right(g, d).mat(), left_a, -1.0);
        system.push(eta.mat);
    }
    let scale = gens.iter().map(|g| g.mat().frobenius_norm()).fold(0.0, f64::max);
    HomSubspace::from_vectors(b, d, ctx, system.solve(tol, scale))
}

fn ensure_context(gens: &GeneratorSet, universe: &ObjectUniverse) -> Result<()> {
    if gens.ctx() != universe.ctx() {
        return Err(Error::ContextMismatch {
            left: universe.ctx().hdim(),
            right: gens.ctx().hdim(),
        });
    }
    Ok(())
}

pub(crate) fn commutant_of_arrows(arrows: &[Arrow], universe: &ObjectUniverse, tol: f64) -> FinPremonCat {
    let ctx = universe.ctx();
    let homs = universe
        .pairs()
        .par_iter()
        .map(|(b, d)| solve_pair(b, d, ctx, arrows, tol))
        .collect();
    FinPremonCat { universe: universe.clone(), homs }
}

/// The commutant `A'` truncated to `universe`. Generators must be closed
/// under dagger up to their spans.
pub fn commutant(gens: &GeneratorSet, universe: &ObjectUniverse, tol: f64) -> Result<FinPremonCat> {
    ensure_context(gens, universe)?;
    gens.check_dagger_closed(tol.max(1e-9))?;
    Ok(commutant_of_arrows(gens.arrows(), universe, tol))
}

/// `A''`: the commutant of the union of all bases of `A'`.
pub fn double_commutant(
    gens: &GeneratorSet,
    universe: &ObjectUniverse,
    tol: f64,
) -> Result<FinPremonCat> {
    let first = commutant(gens, universe, tol)?;
    Ok(commutant_of_arrows(&first.all_arrows(), universe, tol))
}

/// Per-pair comparison of a category with its double commutant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairGap {
    pub dom: String,
    pub cod: String,
    pub dim: usize,
    pub double_dim: usize,
    pub equal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VnReport {
    pub holds: bool,
    pub pairs: Vec<PairGap>,
}

impl VnReport {
    pub fn failing(&self) -> impl Iterator<Item = &PairGap> {
        self.pairs.iter().filter(|p| !p.equal)
    }
}

/// Whether `cat'' = cat` on every hom-pair of its universe. Subspaces are
/// compared at `max(tol, SUBSPACE_TOL)`.
pub fn is_von_neumann(cat: &FinPremonCat, tol: f64) -> VnReport {
    let universe = cat.universe();
    let first = commutant_of_arrows(&cat.all_arrows(), universe, tol);
    let second = commutant_of_arrows(&first.all_arrows(), universe, tol);
    let cmp_tol = tol.max(SUBSPACE_TOL);
    let pairs: Vec<PairGap> = cat
        .homs()
        .iter()
        .zip(second.homs())
        .map(|(a, b)| PairGap {
            dom: a.dom.name().to_string(),
            cod: a.cod.name().to_string(),
            dim: a.dim(),
            double_dim: b.dim(),
            equal: subspace_equal(a, b, cmp_tol).expect("same hom-pair"),
        })
        .collect();
    VnReport { holds: pairs.iter().all(|p| p.equal), pairs }
}

/// The basis of `cat(I, I)` as raw `hdim × hdim` matrices.
pub fn endo_algebra(cat: &FinPremonCat) -> Result<Vec<CMatrix>> {
    let unit = Obj::unit();
    let hom = cat.hom(unit.name(), unit.name()).ok_or(Error::MissingUnit)?;
    if hom.dom() != &unit {
        return Err(Error::MissingUnit);
    }
    Ok(hom.basis().iter().map(|f| f.mat().clone()).collect())
}

fn ensure_square_family(size: usize, mats: &[CMatrix]) -> Result<()> {
    if size == 0 {
        return Err(Error::ZeroDimension);
    }
    for m in mats {
        if m.shape() != (size, size) {
            return Err(Error::ShapeMismatch {
                expected_rows: size,
                expected_cols: size,
                rows: m.rows(),
                cols: m.cols(),
            });
        }
    }
    Ok(())
}

/// Orthonormal basis of `{S : SM = MS for all M}` in `M_size(ℂ)`, from the
/// stacked Sylvester maps `vec(SM − MS) = (Mᵀ⊗I − I⊗M)·vec(S)`.
pub fn classical_commutant(size: usize, mats: &[CMatrix], tol: f64) -> Result<Vec<CMatrix>> {
    ensure_square_family(size, mats)?;
    let id = CMatrix::identity(size);
    let mut system = StackedSystem::new(size * size);
    let scale = mats.iter().map(CMatrix::frobenius_norm).fold(0.0, f64::max);
    for m in mats {
        let transposed = CMatrix::from_fn(size, size, |i, j| m.get(j, i));
        let op = &kron(&transposed, &id) - &kron(&id, m);
        system.push(op.into_matrix());
    }
    Ok(system
        .solve(tol, scale)
        .into_iter()
        .map(|v| CMatrix::from_column_stack(size, size, &v).expect("length size²"))
        .collect())
}

/// Orthonormal basis of the unital *-algebra generated by `mats`, grown by
/// products and adjoints until the span stops increasing.
pub fn generated_star_algebra(size: usize, mats: &[CMatrix], tol: f64) -> Result<Vec<CMatrix>> {
    ensure_square_family(size, mats)?;
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let absorb = |basis: &mut Vec<Vec<C64>>, m: &CMatrix| -> bool {
        let v = m.vectorize();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || projection_residual(basis, &v) <= tol * norm {
            return false;
        }
        let mut r = v;
        for _ in 0..2 {
            for b in basis.iter() {
                let c: C64 = b.iter().zip(r.iter()).map(|(x, y)| x.conj() * y).sum();
                for (ri, bi) in r.iter_mut().zip(b.iter()) {
                    *ri -= c * bi;
                }
            }
        }
        let rn = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in r.iter_mut() {
            *z /= rn;
        }
        basis.push(r);
        true
    };
    absorb(&mut basis, &CMatrix::identity(size));
    for m in mats {
        absorb(&mut basis, m);
        absorb(&mut basis, &m.adjoint());
    }
    let as_matrix = |v: &Vec<C64>| CMatrix::from_column_stack(size, size, v).expect("length size²");
    loop {
        let current: Vec<CMatrix> = basis.iter().map(as_matrix).collect();
        let mut grew = false;
        for x in &current {
            grew |= absorb(&mut basis, &x.adjoint());
            for y in &current {
                grew |= absorb(&mut basis, &(x * y));
            }
        }
        if !grew || basis.len() == size * size {
            break;
        }
    }
    Ok(basis.iter().map(as_matrix).collect())
}

/// Whether two lists of equally sized matrices span the same subspace, by
/// mutual projection at `tol` after orthonormalization.
pub fn matrix_spans_equal(a: &[CMatrix], b: &[CMatrix], tol: f64) -> bool {
    matrix_span_contains(a, b, tol) && matrix_span_contains(b, a, tol)
}

/// Whether every matrix of `b` lies in `span(a)`, relative to its norm.
pub fn matrix_span_contains(a: &[CMatrix], b: &[CMatrix], tol: f64) -> bool {
    let len = a.first().or(b.first()).map(|m| m.rows() * m.cols()).unwrap_or(0);
    let av: Vec<Vec<C64>> = a.iter().map(CMatrix::vectorize).collect();
    let basis = orthonormal_span(&av, len, 1e-12);
    b.iter().all(|m| {
        let n = m.frobenius_norm();
        n == 0.0 || projection_residual(&basis, &m.vectorize()) <= tol * n
    })
}
