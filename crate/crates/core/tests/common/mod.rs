#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vncat::commutant::{GeneratorSet, ObjectUniverse};
use vncat::crossed::{FiniteGroup, UnitaryRep};
use vncat::hilb::{dagger, Arrow, Context, Obj};
use vncat::linalg::{kron, CMatrix, C64};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex(rng: &mut TestRng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Small Gaussian integers, so sums and products are exact.
pub fn integer_matrix(rng: &mut TestRng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(rng.gen_range(-4..=4) as f64, rng.gen_range(-4..=4) as f64))
}

pub fn matrix(rng: &mut TestRng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex(rng))
}

pub fn unitary(rng: &mut TestRng, n: usize) -> CMatrix {
    let m = DMatrix::from_fn(n, n, |_, _| complex(rng));
    CMatrix::from_matrix(m.qr().q()).unwrap()
}

pub fn arrow(rng: &mut TestRng, dom: &Obj, cod: &Obj, ctx: Context) -> Arrow {
    let h = ctx.hdim();
    Arrow::new(dom.clone(), cod.clone(), ctx, matrix(rng, cod.dim() * h, dom.dim() * h)).unwrap()
}

pub fn obj(dim: usize) -> Obj {
    if dim == 1 {
        Obj::unit()
    } else {
        Obj::new(format!("X{dim}"), dim).unwrap()
    }
}

/// A *-subalgebra `U·(⊕ₖ M_{nₖ} ⊗ I_{mₖ})·U†` of `M_h`.
#[derive(Debug, Clone)]
pub struct BlockAlgebra {
    pub h: usize,
    pub blocks: Vec<(usize, usize)>,
    pub u: CMatrix,
}

impl BlockAlgebra {
    pub fn random(rng: &mut TestRng, h: usize) -> Self {
        let mut blocks = Vec::new();
        let mut left = h;
        while left > 0 {
            let n = rng.gen_range(1..=left);
            let m = rng.gen_range(1..=left / n);
            blocks.push((n, m));
            left -= n * m;
        }
        BlockAlgebra { h, blocks, u: unitary(rng, h) }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|(n, _)| n * n).sum()
    }

    fn conjugate(&self, parts: Vec<CMatrix>) -> CMatrix {
        let mut m = CMatrix::zeros(self.h, self.h);
        let mut off = 0;
        for p in parts {
            let k = p.rows();
            let pad = CMatrix::from_fn(self.h, self.h, |i, j| {
                if (off..off + k).contains(&i) && (off..off + k).contains(&j) {
                    p.get(i - off, j - off)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            m = &m + &pad;
            off += k;
        }
        &(&self.u * &m) * &self.u.adjoint()
    }

    pub fn element(&self, rng: &mut TestRng) -> CMatrix {
        let parts = self
            .blocks
            .iter()
            .map(|&(n, m)| kron(&matrix(rng, n, n), &CMatrix::identity(m)))
            .collect();
        self.conjugate(parts)
    }
}

/// `f` and `f†` for each arrow.
pub fn with_adjoints(ctx: Context, arrows: Vec<Arrow>) -> GeneratorSet {
    let mut all = Vec::with_capacity(2 * arrows.len());
    for f in arrows {
        all.push(dagger(&f));
        all.push(f);
    }
    GeneratorSet::new(ctx, all).unwrap()
}

/// `Σⱼ f̂ⱼ ⊗ sⱼ` with random `f̂ⱼ` and `sⱼ` drawn from `alg`.
pub fn algebra_arrow(rng: &mut TestRng, alg: &BlockAlgebra, dom: &Obj, cod: &Obj, terms: usize) -> Arrow {
    let ctx = Context::new(alg.h).unwrap();
    let mut m = CMatrix::zeros(cod.dim() * alg.h, dom.dim() * alg.h);
    for _ in 0..terms {
        m = &m + &kron(&matrix(rng, cod.dim(), dom.dim()), &alg.element(rng));
    }
    Arrow::new(dom.clone(), cod.clone(), ctx, m).unwrap()
}

/// The `H` factors of `f` under operator-Schmidt realignment: the rows of
/// `R[(y,x),(i,j)] = f[y·h+i, x·h+j]`, each as an `h × h` matrix. Their
/// span is the span of the `H` parts of any decomposition of `f`.
pub fn h_parts(f: &Arrow) -> Vec<CMatrix> {
    let h = f.ctx().hdim();
    let (dy, dx) = (f.cod().dim(), f.dom().dim());
    let mut out = Vec::with_capacity(dy * dx);
    for y in 0..dy {
        for x in 0..dx {
            out.push(CMatrix::from_fn(h, h, |i, j| f.mat().get(y * h + i, x * h + j)));
        }
    }
    out
}

pub fn universe(ctx: Context, dims: &[usize]) -> ObjectUniverse {
    ObjectUniverse::with_dims(ctx, dims).unwrap()
}

/// `ℤ_n` acting through random characters, conjugated by a random unitary.
pub fn cyclic_rep(rng: &mut TestRng, n: usize, h: usize) -> UnitaryRep {
    let group = FiniteGroup::cyclic(n).unwrap();
    let charges: Vec<usize> = (0..h).map(|_| rng.gen_range(0..n)).collect();
    let u = unitary(rng, h);
    let mats = (0..n)
        .map(|k| {
            if k == 0 {
                return CMatrix::identity(h);
            }
            let phases: Vec<C64> = charges
                .iter()
                .map(|&q| C64::from_polar(1.0, std::f64::consts::TAU * (q * k) as f64 / n as f64))
                .collect();
            &(&u * &CMatrix::diag(&phases)) * &u.adjoint()
        })
        .collect();
    UnitaryRep::new(group, mats).unwrap()
}

/// Permutation matrices of `S_n` on `ℂⁿ`.
pub fn permutation_rep(group: &FiniteGroup) -> UnitaryRep {
    let mats = group
        .labels()
        .iter()
        .map(|l| {
            let p: Vec<usize> = l.bytes().map(|b| (b - b'0') as usize).collect();
            let n = p.len();
            CMatrix::from_fn(n, n, |i, j| if p[j] == i { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
        })
        .collect();
    UnitaryRep::new(group.clone(), mats).unwrap()
}

/// The sign character of `S_n`.
pub fn sign_rep(group: &FiniteGroup) -> UnitaryRep {
    let mats = group
        .labels()
        .iter()
        .map(|l| {
            let p: Vec<usize> = l.bytes().map(|b| (b - b'0') as usize).collect();
            let inversions = (0..p.len()).flat_map(|i| (i + 1..p.len()).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
            CMatrix::real_diag(&[if inversions % 2 == 0 { 1.0 } else { -1.0 }])
        })
        .collect();
    UnitaryRep::new(group.clone(), mats).unwrap()
}

/// `sign ⊕ permutation` of `S₃` on `ℂ⁴` (trivial ⊕ sign ⊕ standard),
/// conjugated by a random unitary.
pub fn s3_rep(rng: &mut TestRng) -> UnitaryRep {
    let g = FiniteGroup::symmetric(3).unwrap();
    let rep = sign_rep(&g).direct_sum(&permutation_rep(&g)).unwrap();
    rep.conjugated(&unitary(rng, 4)).unwrap()
}
