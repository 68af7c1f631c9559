//! Scenario files: a JSON description of a context, objects, generators and
//! optional group, representation and net data, plus the commands to run.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::causal::{Bounds, CausalNet, DoubleCone, Event, Region};
use crate::commutant::{GeneratorSet, ObjectUniverse};
use crate::crossed::{FiniteGroup, UnitaryRep};
use crate::hilb::{Arrow, Context, Obj, UNIT_NAME};
use crate::linalg::{CMatrix, C64, DEFAULT_TOL};

pub const SCHEMA: u32 = 1;

/// Row-major nested rows of `[re, im]` pairs.
pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub hdim: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub generators: Vec<ArrowSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub universe: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rep: Option<BTreeMap<String, MatrixSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub net: Option<NetSpec>,
    pub commands: Vec<CommandSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub name: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrowSpec {
    pub name: String,
    pub dom: String,
    pub cod: String,
    pub matrix: MatrixSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub elements: Vec<String>,
    /// `table[i][j]` is the label of `elements[i] · elements[j]`.
    pub table: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSpec {
    pub bounds: Bounds,
    pub cones: Vec<ConeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSpec {
    pub name: String,
    pub lo: Event,
    pub hi: Event,
    pub generators: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Centre,
    Commutant,
    DoubleCommutant,
    VnCheck,
    EndoAlgebra,
    CrossedProduct,
    Covariance,
    Causality,
    CstarCheck,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Centre => "centre",
            CommandKind::Commutant => "commutant",
            CommandKind::DoubleCommutant => "double-commutant",
            CommandKind::VnCheck => "vn-check",
            CommandKind::EndoAlgebra => "endo-algebra",
            CommandKind::CrossedProduct => "crossed-product",
            CommandKind::Covariance => "covariance",
            CommandKind::Causality => "causality",
            CommandKind::CstarCheck => "cstar-check",
        }
    }

    fn needs_dagger_closure(self) -> bool {
        matches!(
            self,
            CommandKind::Commutant
                | CommandKind::DoubleCommutant
                | CommandKind::EndoAlgebra
                | CommandKind::CrossedProduct
        )
    }

    fn needs_rep(self) -> bool {
        matches!(self, CommandKind::CrossedProduct | CommandKind::Covariance)
    }
}

/// Optional expected outcomes; a command fails when any stated value differs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    /// Hom-pair dimensions keyed by `"dom->cod"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<BTreeMap<String, usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endo_dim: Option<usize>,
    /// Expected verdict of `vn-check` and `causality`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holds: Option<bool>,
}

/// A command, written either as a bare name or as `{"run": name, "expect": …}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "CommandRepr")]
pub struct CommandSpec {
    pub run: CommandKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CommandRepr {
    Bare(CommandKind),
    Full {
        run: CommandKind,
        #[serde(default)]
        expect: Option<Expect>,
    },
}

impl From<CommandRepr> for CommandSpec {
    fn from(r: CommandRepr) -> Self {
        match r {
            CommandRepr::Bare(run) => CommandSpec { run, expect: None },
            CommandRepr::Full { run, expect } => CommandSpec { run, expect },
        }
    }
}

/// A parse or validation failure, anchored to a line of the source when the
/// offending value can be located.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub path: String,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: ")?,
            (Some(l), None) => write!(f, "line {l}: ")?,
            _ => {}
        }
        if !self.path.is_empty() {
            write!(f, "{}: ", self.path)?;
        }
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for ScenarioError {}

#[derive(Debug, Clone, PartialEq)]
enum Seg {
    Key(String),
    Index(usize),
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Path(Vec<Seg>);

impl Path {
    fn key(&self, k: &str) -> Path {
        let mut p = self.clone();
        p.0.push(Seg::Key(k.to_string()));
        p
    }

    fn index(&self, i: usize) -> Path {
        let mut p = self.clone();
        p.0.push(Seg::Index(i));
        p
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, s) in self.0.iter().enumerate() {
            match s {
                Seg::Key(k) if n == 0 => write!(f, "{k}")?,
                Seg::Key(k) => write!(f, ".{k}")?,
                Seg::Index(i) => write!(f, "[{i}]")?,
            }
        }
        Ok(())
    }
}

fn root() -> Path {
    Path::default()
}

/// Byte-offset lookup of the value at a path in JSON text.
struct Locator<'a> {
    b: &'a [u8],
    i: usize,
}

impl<'a> Locator<'a> {
    fn ws(&mut self) {
        while self.i < self.b.len() && self.b[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn eat(&mut self, c: u8) -> Option<()> {
        self.ws();
        if self.b.get(self.i) == Some(&c) {
            self.i += 1;
            Some(())
        } else {
            None
        }
    }

    fn string(&mut self) -> Option<String> {
        self.eat(b'"')?;
        let mut out = Vec::new();
        while let Some(&c) = self.b.get(self.i) {
            self.i += 1;
            match c {
                b'"' => return String::from_utf8(out).ok(),
                b'\\' => {
                    out.push(*self.b.get(self.i)?);
                    self.i += 1;
                }
                c => out.push(c),
            }
        }
        None
    }

    fn skip(&mut self) -> Option<()> {
        self.ws();
        match *self.b.get(self.i)? {
            b'"' => self.string().map(|_| ()),
            open @ (b'[' | b'{') => {
                let close = if open == b'[' { b']' } else { b'}' };
                self.i += 1;
                if self.eat(close).is_some() {
                    return Some(());
                }
                loop {
                    if open == b'{' {
                        self.string()?;
                        self.eat(b':')?;
                    }
                    self.skip()?;
                    if self.eat(b',').is_none() {
                        return self.eat(close);
                    }
                }
            }
            _ => {
                while self.i < self.b.len() && !b",]}".contains(&self.b[self.i]) && !self.b[self.i].is_ascii_whitespace() {
                    self.i += 1;
                }
                Some(())
            }
        }
    }

    /// Offset of the deepest prefix of `path` that exists.
    fn descend(&mut self, path: &[Seg]) -> usize {
        self.ws();
        let here = self.i;
        let Some(first) = path.first() else { return here };
        let found = match first {
            Seg::Key(k) => self.find_key(k),
            Seg::Index(n) => self.find_index(*n),
        };
        match found {
            Some(()) => self.descend(&path[1..]),
            None => here,
        }
    }

    fn find_key(&mut self, k: &str) -> Option<()> {
        self.eat(b'{')?;
        loop {
            let key = self.string()?;
            self.eat(b':')?;
            if key == k {
                return Some(());
            }
            self.skip()?;
            self.eat(b',')?;
        }
    }

    fn find_index(&mut self, n: usize) -> Option<()> {
        self.eat(b'[')?;
        for _ in 0..n {
            self.skip()?;
            self.eat(b',')?;
        }
        self.ws();
        (self.b.get(self.i) != Some(&b']')).then_some(())
    }
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, col)
}

fn anchored(src: &str, path: &Path, message: impl Into<String>) -> ScenarioError {
    let offset = Locator { b: src.as_bytes(), i: 0 }.descend(&path.0);
    let (line, col) = line_col(src, offset);
    ScenarioError { line: Some(line), column: Some(col), path: path.to_string(), message: message.into() }
}

/// A fully validated scenario with engine objects built.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub scenario: Scenario,
    pub ctx: Context,
    pub objects: BTreeMap<String, Obj>,
    pub gens: GeneratorSet,
    pub universe: ObjectUniverse,
    pub rep: Option<UnitaryRep>,
    pub net: Option<CausalNet>,
}

pub fn parse(src: &str) -> Result<Scenario, ScenarioError> {
    serde_json::from_str(src).map_err(|e| {
        let text = e.to_string();
        let message = match text.rfind(" at line ") {
            Some(p) => text[..p].to_string(),
            None => text,
        };
        ScenarioError { line: Some(e.line()), column: Some(e.column()), path: String::new(), message }
    })
}

/// Parses and validates; errors point at the offending value in `src`.
pub fn load(src: &str) -> Result<Loaded, ScenarioError> {
    let scenario = parse(src)?;
    validate(scenario, src)
}

/// Undeclared names `X<d>` stand for a `d`-dimensional object.
fn implicit_object(name: &str) -> Option<Obj> {
    let digits = name.strip_prefix('X')?;
    if digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let d: usize = digits.parse().ok()?;
    (d > 1).then(|| Obj::new(name, d).expect("positive dimension"))
}

pub fn matrix_from_spec(spec: &MatrixSpec) -> Result<CMatrix, String> {
    let rows = spec.len();
    let cols = spec.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err("matrix must be non-empty".into());
    }
    if let Some(r) = spec.iter().position(|row| row.len() != cols) {
        return Err(format!("row {r} has {} entries, expected {cols}", spec[r].len()));
    }
    let entries: Vec<C64> = spec.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect();
    CMatrix::from_row_major(rows, cols, &entries).map_err(|e| e.to_string())
}

pub fn matrix_to_spec(m: &CMatrix) -> MatrixSpec {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m.get(i, j).re, m.get(i, j).im]).collect())
        .collect()
}

pub fn validate(scenario: Scenario, src: &str) -> Result<Loaded, ScenarioError> {
    let err = |path: &Path, msg: String| anchored(src, path, msg);
    let r = root();

    if scenario.schema != SCHEMA {
        return Err(err(&r.key("schema"), format!("unsupported schema {}, expected {SCHEMA}", scenario.schema)));
    }
    let ctx = Context::new(scenario.hdim).map_err(|e| err(&r.key("hdim"), e.to_string()))?;
    if !(scenario.tol.is_finite() && scenario.tol > 0.0) {
        return Err(err(&r.key("tol"), "tolerance must be a positive number".into()));
    }

    let mut objects = BTreeMap::new();
    objects.insert(UNIT_NAME.to_string(), Obj::unit());
    for (i, o) in scenario.objects.iter().enumerate() {
        let p = r.key("objects").index(i);
        if objects.contains_key(&o.name) {
            return Err(err(&p.key("name"), format!("duplicate or reserved object name `{}`", o.name)));
        }
        let obj = Obj::new(o.name.clone(), o.dim).map_err(|e| err(&p.key("dim"), e.to_string()))?;
        if implicit_object(&o.name).is_some_and(|x| x.dim() != o.dim) {
            return Err(err(&p.key("dim"), format!("`{}` is reserved for an object of that dimension", o.name)));
        }
        objects.insert(o.name.clone(), obj);
    }
    let resolve = |name: &str, p: &Path| {
        objects
            .get(name)
            .cloned()
            .or_else(|| implicit_object(name))
            .ok_or_else(|| err(p, format!("unknown object `{name}`")))
    };

    let mut arrows = Vec::with_capacity(scenario.generators.len());
    let mut gen_index: HashMap<&str, usize> = HashMap::new();
    for (i, g) in scenario.generators.iter().enumerate() {
        let p = r.key("generators").index(i);
        if gen_index.insert(g.name.as_str(), i).is_some() {
            return Err(err(&p.key("name"), format!("duplicate generator name `{}`", g.name)));
        }
        let dom = resolve(&g.dom, &p.key("dom"))?;
        let cod = resolve(&g.cod, &p.key("cod"))?;
        let m = matrix_from_spec(&g.matrix).map_err(|e| err(&p.key("matrix"), e))?;
        let f = Arrow::new(dom, cod, ctx, m).map_err(|e| err(&p.key("matrix"), e.to_string()))?;
        arrows.push(f);
    }
    let gens = GeneratorSet::new(ctx, arrows).expect("arrows built over ctx");

    let closure_needed = scenario.commands.iter().enumerate().find(|(_, c)| c.run.needs_dagger_closure());
    if let Some((i, c)) = closure_needed {
        if let Err(crate::Error::NotDaggerClosed { index, residual, .. }) = gens.check_dagger_closed(1e-9) {
            return Err(err(
                &r.key("generators").index(index),
                format!(
                    "adjoint of this generator is not in the generator span (residual {residual:.3e}), required by command {i} `{}`",
                    c.run.name()
                ),
            ));
        }
    }

    let universe = match &scenario.universe {
        None => ObjectUniverse::default_for(ctx, &gens),
        Some(names) => {
            let mut objs = Vec::with_capacity(names.len());
            for (i, n) in names.iter().enumerate() {
                objs.push(resolve(n, &r.key("universe").index(i))?);
            }
            ObjectUniverse::new(ctx, objs).map_err(|e| err(&r.key("universe"), e.to_string()))?
        }
    };

    let group = match &scenario.group {
        None => None,
        Some(g) => {
            let p = r.key("group");
            let index: HashMap<&str, usize> = g.elements.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
            let mut table = Vec::with_capacity(g.table.len());
            for (i, row) in g.table.iter().enumerate() {
                let mut out = Vec::with_capacity(row.len());
                for (j, label) in row.iter().enumerate() {
                    let k = index
                        .get(label.as_str())
                        .ok_or_else(|| err(&p.key("table").index(i).index(j), format!("unknown element `{label}`")))?;
                    out.push(*k);
                }
                table.push(out);
            }
            Some(FiniteGroup::new(g.elements.clone(), table).map_err(|e| err(&p, e.to_string()))?)
        }
    };

    let rep = match (&scenario.rep, &group) {
        (None, _) => None,
        (Some(_), None) => return Err(err(&r.key("rep"), "a representation needs a `group`".into())),
        (Some(map), Some(group)) => {
            let p = r.key("rep");
            for key in map.keys() {
                if group.index_of(key).is_none() {
                    return Err(err(&p.key(key), format!("unknown element `{key}`")));
                }
            }
            let mut mats = Vec::with_capacity(group.order());
            for label in group.labels() {
                let spec = map.get(label).ok_or_else(|| err(&p, format!("missing matrix for element `{label}`")))?;
                let m = matrix_from_spec(spec).map_err(|e| err(&p.key(label), e))?;
                if m.shape() != (ctx.hdim(), ctx.hdim()) {
                    return Err(err(&p.key(label), format!("matrix must be {0}x{0}", ctx.hdim())));
                }
                mats.push(m);
            }
            Some(UnitaryRep::new(group.clone(), mats).map_err(|e| err(&p, e.to_string()))?)
        }
    };

    let net = match &scenario.net {
        None => None,
        Some(n) => {
            let p = r.key("net");
            let bounds = Bounds::new(n.bounds.t_min, n.bounds.t_max, n.bounds.x_min, n.bounds.x_max)
                .map_err(|e| err(&p.key("bounds"), e.to_string()))?;
            let mut regions = Vec::with_capacity(n.cones.len());
            for (i, c) in n.cones.iter().enumerate() {
                let cp = p.key("cones").index(i);
                let cone = DoubleCone::new(c.lo, c.hi).map_err(|e| err(&cp, e.to_string()))?;
                let mut local = Vec::with_capacity(c.generators.len());
                for (j, name) in c.generators.iter().enumerate() {
                    let k = gen_index
                        .get(name.as_str())
                        .ok_or_else(|| err(&cp.key("generators").index(j), format!("unknown generator `{name}`")))?;
                    local.push(gens.arrows()[*k].clone());
                }
                let local = GeneratorSet::new(ctx, local).expect("shared context");
                regions.push(Region { name: c.name.clone(), cone, gens: local });
            }
            let net = CausalNet::new(bounds, ctx, regions).map_err(|e| err(&p, e.to_string()))?;
            Some(net)
        }
    };

    for (i, c) in scenario.commands.iter().enumerate() {
        let p = r.key("commands").index(i);
        if c.run.needs_rep() && rep.is_none() {
            return Err(err(&p, format!("command `{}` needs `group` and `rep`", c.run.name())));
        }
        if c.run == CommandKind::Causality && net.is_none() {
            return Err(err(&p, "command `causality` needs a `net`".into()));
        }
    }

    Ok(Loaded { scenario, ctx, objects, gens, universe, rep, net })
}

#[cfg(test)]
mod tests {
    use super::*;

    const OK: &str = r#"{
  "schema": 1,
  "hdim": 2,
  "generators": [
    {"name": "p", "dom": "I", "cod": "I", "matrix": [[[1,0],[0,0]],[[0,0],[0,0]]]}
  ],
  "commands": ["commutant", {"run": "vn-check", "expect": {"holds": true}}]
}"#;

    #[test]
    fn parses_both_command_forms() {
        let l = load(OK).unwrap();
        assert_eq!(l.scenario.tol, DEFAULT_TOL);
        assert_eq!(l.scenario.commands[0], CommandSpec { run: CommandKind::Commutant, expect: None });
        assert_eq!(l.scenario.commands[1].expect.as_ref().unwrap().holds, Some(true));
        assert_eq!(l.universe.objects().len(), 3);
    }

    #[test]
    fn round_trips_through_json() {
        let s = parse(OK).unwrap();
        let text = serde_json::to_string_pretty(&s).unwrap();
        assert_eq!(parse(&text).unwrap(), s);
    }

    #[test]
    fn unknown_object_is_line_anchored() {
        let src = OK.replace(r#""cod": "I""#, r#""cod": "Y""#);
        let e = load(&src).unwrap_err();
        assert_eq!(e.line, Some(5));
        assert_eq!(e.path, "generators[0].cod");
        assert!(e.message.contains("`Y`"));
    }

    #[test]
    fn shape_error_points_at_matrix() {
        let src = OK.replace("[[[1,0],[0,0]],[[0,0],[0,0]]]", "[[[1,0]]]");
        let e = load(&src).unwrap_err();
        assert_eq!(e.path, "generators[0].matrix");
        assert_eq!(e.line, Some(5));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = load("{\n  \"schema\": 1,\n  \"hdim\": ,\n}").unwrap_err();
        assert_eq!(e.line, Some(3));
    }

    #[test]
    fn missing_rep_for_crossed_product() {
        let src = OK.replace(r#""commutant""#, r#""crossed-product""#);
        let e = load(&src).unwrap_err();
        assert_eq!(e.path, "commands[0]");
        assert_eq!(e.line, Some(7));
    }

    #[test]
    fn non_closed_generators_rejected_for_commutant() {
        let src = OK.replace("[[[1,0],[0,0]],[[0,0],[0,0]]]", "[[[0,0],[1,0]],[[0,0],[0,0]]]");
        let e = load(&src).unwrap_err();
        assert_eq!(e.path, "generators[0]");
    }

    #[test]
    fn locator_handles_nesting() {
        let src = "{\"a\": [1, {\"b\": \"x\"},\n  {\"c\": [0, 7]}]}";
        let p = root().key("a").index(2).key("c").index(1);
        let off = Locator { b: src.as_bytes(), i: 0 }.descend(&p.0);
        assert_eq!(&src[off..off + 1], "7");
        assert_eq!(line_col(src, off), (2, 13));
    }
}
