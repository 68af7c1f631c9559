//! The premonoidal dagger category `Hilb_H` at finite dimension.
//!
//! An arrow `X → Y` is a matrix `X⊗H → Y⊗H` for the fixed space `H` of the
//! [`Context`]. Left whiskering is `id_Z ⊗ f`; right whiskering conjugates
//! it by factor swaps so that `H` stays the minor factor. The associator and
//! unitors are identities under the lexicographic basis convention.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, kron, operator_norm, swap_perm, CMatrix, C64, ONE};

/// Name of the tensor unit.
pub const UNIT_NAME: &str = "I";

/// An object of `Hilb_H`: a labelled finite dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Obj {
    name: String,
    dim: usize,
}

impl Obj {
    pub fn new(name: impl Into<String>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(Obj { name: name.into(), dim })
    }

    /// The tensor unit `I`, of dimension 1.
    pub fn unit() -> Self {
        Obj { name: UNIT_NAME.to_string(), dim: 1 }
    }

    /// The object carrying the fixed space `H` itself.
    pub fn hilbert(ctx: Context) -> Self {
        Obj { name: "H".to_string(), dim: ctx.hdim() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_unit(&self) -> bool {
        self.name == UNIT_NAME && self.dim == 1
    }

    /// Strict tensor product of objects; the unit is absorbed.
    pub fn tensor(&self, other: &Obj) -> Obj {
        if self.is_unit() {
            return other.clone();
        }
        if other.is_unit() {
            return self.clone();
        }
        Obj {
            name: format!("{}⊗{}", self.name, other.name),
            dim: self.dim * other.dim,
        }
    }
}

impl fmt::Display for Obj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.name, self.dim)
    }
}

/// The fixed Hilbert space `H`, recorded by its dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Context {
    hdim: usize,
}

impl Context {
    pub fn new(hdim: usize) -> Result<Self> {
        if hdim == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(Context { hdim })
    }

    pub fn hdim(&self) -> usize {
        self.hdim
    }

    fn ensure_same(&self, other: &Context) -> Result<()> {
        if self.hdim != other.hdim {
            return Err(Error::ContextMismatch { left: self.hdim, right: other.hdim });
        }
        Ok(())
    }
}

/// A morphism `dom → cod` of `Hilb_H`.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrow {
    dom: Obj,
    cod: Obj,
    ctx: Context,
    mat: CMatrix,
}

impl Arrow {
    /// Wraps a matrix of shape `(cod.dim·hdim) × (dom.dim·hdim)`.
    pub fn new(dom: Obj, cod: Obj, ctx: Context, mat: CMatrix) -> Result<Self> {
        let (r, c) = (cod.dim * ctx.hdim, dom.dim * ctx.hdim);
        if mat.shape() != (r, c) {
            return Err(Error::ShapeMismatch {
                expected_rows: r,
                expected_cols: c,
                rows: mat.rows(),
                cols: mat.cols(),
            });
        }
        Ok(Arrow { dom, cod, ctx, mat })
    }

    pub fn identity(obj: &Obj, ctx: Context) -> Self {
        Arrow {
            dom: obj.clone(),
            cod: obj.clone(),
            ctx,
            mat: CMatrix::identity(obj.dim * ctx.hdim),
        }
    }

    pub fn zero(dom: &Obj, cod: &Obj, ctx: Context) -> Self {
        Arrow {
            dom: dom.clone(),
            cod: cod.clone(),
            ctx,
            mat: CMatrix::zeros(cod.dim * ctx.hdim, dom.dim * ctx.hdim),
        }
    }

    /// The arrow `f̂ ⊗ id_H` for a plain matrix `f̂: dom → cod`.
    pub fn central(hat: &CMatrix, dom: &Obj, cod: &Obj, ctx: Context) -> Result<Self> {
        if hat.shape() != (cod.dim, dom.dim) {
            return Err(Error::ShapeMismatch {
                expected_rows: cod.dim,
                expected_cols: dom.dim,
                rows: hat.rows(),
                cols: hat.cols(),
            });
        }
        Arrow::new(dom.clone(), cod.clone(), ctx, kron(hat, &CMatrix::identity(ctx.hdim)))
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

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_mat(self) -> CMatrix {
        self.mat
    }

    pub fn norm(&self) -> f64 {
        operator_norm(&self.mat)
    }

    /// Same arrow with its matrix replaced; the shape must not change.
    pub(crate) fn with_mat(&self, mat: CMatrix) -> Arrow {
        debug_assert_eq!(mat.shape(), self.mat.shape());
        Arrow { dom: self.dom.clone(), cod: self.cod.clone(), ctx: self.ctx, mat }
    }

    fn ensure_parallel(&self, other: &Arrow) -> Result<()> {
        self.ctx.ensure_same(&other.ctx)?;
        ensure_obj(&self.dom, &other.dom)?;
        ensure_obj(&self.cod, &other.cod)
    }

    pub fn add(&self, other: &Arrow) -> Result<Arrow> {
        self.ensure_parallel(other)?;
        Ok(self.with_mat(&self.mat + &other.mat))
    }

    pub fn sub(&self, other: &Arrow) -> Result<Arrow> {
        self.ensure_parallel(other)?;
        Ok(self.with_mat(&self.mat - &other.mat))
    }

    pub fn scale(&self, c: C64) -> Arrow {
        self.with_mat(self.mat.scale(c))
    }

    /// Arrow equality: `‖a − b‖ ≤ tol·max(1, ‖a‖, ‖b‖)`.
    pub fn approx_eq(&self, other: &Arrow, tol: f64) -> bool {
        if self.ensure_parallel(other).is_err() {
            return false;
        }
        let scale = self.norm().max(other.norm()).max(1.0);
        operator_norm(&(&self.mat - &other.mat)) <= tol * scale
    }
}

fn ensure_obj(expected: &Obj, found: &Obj) -> Result<()> {
    if expected != found {
        return Err(Error::ObjectMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        });
    }
    Ok(())
}

/// `g ∘ f`.
pub fn compose(g: &Arrow, f: &Arrow) -> Result<Arrow> {
    g.ctx.ensure_same(&f.ctx)?;
    ensure_obj(&g.dom, &f.cod)?;
    Ok(Arrow {
        dom: f.dom.clone(),
        cod: g.cod.clone(),
        ctx: f.ctx,
        mat: &g.mat * &f.mat,
    })
}

pub fn dagger(f: &Arrow) -> Arrow {
    Arrow {
        dom: f.cod.clone(),
        cod: f.dom.clone(),
        ctx: f.ctx,
        mat: f.mat.adjoint(),
    }
}

/// `a ⊗ f = id_a ⊗ f`.
pub fn whisker_left(a: &Obj, f: &Arrow) -> Arrow {
    Arrow {
        dom: a.tensor(&f.dom),
        cod: a.tensor(&f.cod),
        ctx: f.ctx,
        mat: kron(&CMatrix::identity(a.dim), &f.mat),
    }
}

/// `f ⊗ a`, the conjugate of `id_a ⊗ f` by the factor swaps. Entry
/// `((y·a + k)·h + j, (x·a + k)·h + i)` is `f[y·h + j, x·h + i]`.
pub fn whisker_right(f: &Arrow, a: &Obj) -> Arrow {
    let (h, ad) = (f.ctx.hdim, a.dim);
    let (rows, cols) = (f.cod.dim * ad * h, f.dom.dim * ad * h);
    let mut m = DMatrix::zeros(rows, cols);
    for x in 0..f.dom.dim {
        for y in 0..f.cod.dim {
            for k in 0..ad {
                for i in 0..h {
                    for j in 0..h {
                        m[((y * ad + k) * h + j, (x * ad + k) * h + i)] = f.mat.get(y * h + j, x * h + i);
                    }
                }
            }
        }
    }
    Arrow {
        dom: f.dom.tensor(a),
        cod: f.cod.tensor(a),
        ctx: f.ctx,
        mat: CMatrix::from_matrix_unchecked(m),
    }
}

/// `g ⋊ f = (g ⊗ C)(B ⊗ f)` for `f: A → C`, `g: B → D`.
pub fn rtimes(g: &Arrow, f: &Arrow) -> Result<Arrow> {
    g.ctx.ensure_same(&f.ctx)?;
    compose(&whisker_right(g, &f.cod), &whisker_left(&g.dom, f))
}

/// `g ⋉ f = (D ⊗ f)(g ⊗ A)` for `f: A → C`, `g: B → D`.
pub fn ltimes(g: &Arrow, f: &Arrow) -> Result<Arrow> {
    g.ctx.ensure_same(&f.ctx)?;
    compose(&whisker_left(&g.cod, f), &whisker_right(g, &f.dom))
}

/// `(‖f⋉g − f⋊g‖, ‖g⋉f − g⋊f‖)`; both vanish iff the pair interchanges.
pub fn interchange_residuals(f: &Arrow, g: &Arrow) -> Result<(f64, f64)> {
    let zeta = ltimes(f, g)?.sub(&rtimes(f, g)?)?;
    let eta = ltimes(g, f)?.sub(&rtimes(g, f)?)?;
    Ok((zeta.norm(), eta.norm()))
}

/// The symmetry `a ⊗ b → b ⊗ a`.
pub fn tau(a: &Obj, b: &Obj, ctx: Context) -> Arrow {
    Arrow {
        dom: a.tensor(b),
        cod: b.tensor(a),
        ctx,
        mat: kron(
            &swap_perm(a.dim, b.dim).expect("dims are positive"),
            &CMatrix::identity(ctx.hdim),
        ),
    }
}

/// The twisted projection `T_{a,b}` on `H ⊗ H`, as an arrow `H → H`:
/// `h_a⊗h_b ↦ h_b⊗h_a`, `h_b⊗h_a ↦ h_a⊗h_b`, every other basis vector to 0.
pub fn t_ab(a: usize, b: usize, ctx: Context) -> Result<Arrow> {
    let h = ctx.hdim;
    if h < 2 {
        return Err(Error::InvalidIndex(format!("T_(a,b) needs hdim >= 2, got {h}")));
    }
    if a == b || a >= h || b >= h {
        return Err(Error::InvalidIndex(format!("T_({a},{b}) with hdim {h}")));
    }
    let mut mat = nalgebra::DMatrix::zeros(h * h, h * h);
    mat[(b * h + a, a * h + b)] = ONE;
    mat[(a * h + b, b * h + a)] = ONE;
    let obj = Obj::hilbert(ctx);
    Arrow::new(obj.clone(), obj, ctx, CMatrix::from_matrix_unchecked(mat))
}

/// `{T_{a,b} : a < b}`. Each member is self-adjoint, so the family is
/// closed under dagger. Empty when `hdim = 1`.
pub fn t_family(ctx: Context) -> Vec<Arrow> {
    let h = ctx.hdim;
    let mut out = Vec::new();
    for a in 0..h {
        for b in a + 1..h {
            out.push(t_ab(a, b, ctx).expect("indices in range"));
        }
    }
    out
}

/// `f̂` with `f = f̂ ⊗ id_H`, when it exists.
pub fn central_factor(f: &Arrow, tol: f64) -> Option<CMatrix> {
    linalg::factor_out_identity(&f.mat, f.dom.dim, f.cod.dim, f.ctx.hdim, tol)
        .expect("arrow shape is consistent by construction")
}

/// Residuals of the C*-axioms for one arrow pair and whiskering object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CStarResiduals {
    pub submult: f64,
    pub cstar_id: f64,
    pub whisker_left_norm: f64,
    pub whisker_right_norm: f64,
}

impl CStarResiduals {
    pub fn max(&self) -> f64 {
        self.submult
            .max(self.cstar_id)
            .max(self.whisker_left_norm)
            .max(self.whisker_right_norm)
    }

    pub fn to_map(&self) -> BTreeMap<&'static str, f64> {
        BTreeMap::from([
            ("submult", self.submult),
            ("cstar_id", self.cstar_id),
            ("whisker_left_norm", self.whisker_left_norm),
            ("whisker_right_norm", self.whisker_right_norm),
        ])
    }
}

/// `‖s∘t‖ ≤ ‖s‖‖t‖`, `‖s*∘s‖ = ‖s‖²`, `‖a⊗s‖ = ‖s‖ = ‖s⊗a‖`, as residuals.
pub fn cstar_residuals(s: &Arrow, t: &Arrow, a: &Obj) -> Result<CStarResiduals> {
    let st = compose(s, t)?;
    let ns = s.norm();
    let nt = t.norm();
    let sds = compose(&dagger(s), s)?;
    Ok(CStarResiduals {
        submult: (st.norm() - ns * nt).max(0.0),
        cstar_id: (sds.norm() - ns * ns).abs(),
        whisker_left_norm: (whisker_left(a, s).norm() - ns).abs(),
        whisker_right_norm: (whisker_right(s, a).norm() - ns).abs(),
    })
}
