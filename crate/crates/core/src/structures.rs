//! Coherent system designs.
//!
//! A structure is a finite min/max expression tree over component lifetimes:
//! `Min` nodes are series blocks, `Max` nodes are parallel blocks. The module
//! evaluates system lifetimes, enumerates minimal cut sets, classifies each
//! component's censoring status at the system failure and derives the masked
//! candidate set of a failure.
//!
//! Component indices are 1-based in the text format and in every
//! user-facing rendering; internally they are 0-based.
//!
//! ```text
//! max(min(1,2), min(1,3), min(2,3))      2-out-of-3
//! min(max(1,2), max(min(3,4), 5))        series of two parallel blocks
//! ```

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use thiserror::Error;

/// Largest component count for which minimal cut sets are enumerated.
/// Enumeration visits all `2^m` subsets.
pub const MAX_CUT_ENUMERATION: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("component index must be >= 1")]
    ZeroIndex,
    #[error("{kind} node needs at least two children")]
    TooFewChildren { kind: &'static str },
    #[error("component {0} does not appear in the structure")]
    MissingComponent(usize),
    #[error("component {0} is irrelevant to the system state")]
    IrrelevantComponent(usize),
    #[error("expected {expected} component values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("component lifetimes must be positive and finite")]
    InvalidLifetime,
    #[error("cut set enumeration supports at most {MAX_CUT_ENUMERATION} components, structure has {0}")]
    TooManyComponents(usize),
    #[error("no minimal cut set explains the system failure")]
    NoFailingCut,
    #[error("invalid status pattern: {0}")]
    InvalidPattern(String),
}

/// Censoring status of a component at the moment the system fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CensorCode {
    /// The component caused the system failure; its lifetime is observed.
    Uncensored = 1,
    /// Still working at system failure.
    Right = 2,
    /// Failed before the system did.
    Left = 3,
}

impl CensorCode {
    pub const ALL: [CensorCode; 3] = [CensorCode::Uncensored, CensorCode::Right, CensorCode::Left];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(CensorCode::Uncensored),
            2 => Some(CensorCode::Right),
            3 => Some(CensorCode::Left),
            _ => None,
        }
    }

    /// Position in `[uncensored, right, left]` arrays.
    pub fn index(self) -> usize {
        self as usize - 1
    }
}

/// What is recorded for one component of one failed system: either the
/// censoring code, or the fact that the component was in the masked set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentStatus {
    Observed(CensorCode),
    Masked,
}

impl ComponentStatus {
    pub fn is_masked(self) -> bool {
        matches!(self, ComponentStatus::Masked)
    }

    pub fn censor_code(self) -> Option<CensorCode> {
        match self {
            ComponentStatus::Observed(code) => Some(code),
            ComponentStatus::Masked => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StructureNode {
    /// 0-based component index.
    Leaf(usize),
    Min(Vec<StructureNode>),
    Max(Vec<StructureNode>),
}

impl StructureNode {
    fn lifetime(&self, x: &[f64]) -> f64 {
        match self {
            StructureNode::Leaf(j) => x[*j],
            StructureNode::Min(children) => children.iter().map(|c| c.lifetime(x)).fold(f64::INFINITY, f64::min),
            StructureNode::Max(children) => children.iter().map(|c| c.lifetime(x)).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Whether the subtree still works when exactly the components in
    /// `dead` (bitmask) have failed.
    fn works(&self, dead: u64) -> bool {
        match self {
            StructureNode::Leaf(j) => dead & (1 << j) == 0,
            StructureNode::Min(children) => children.iter().all(|c| c.works(dead)),
            StructureNode::Max(children) => children.iter().any(|c| c.works(dead)),
        }
    }

    fn max_leaf(&self) -> usize {
        match self {
            StructureNode::Leaf(j) => *j,
            StructureNode::Min(c) | StructureNode::Max(c) => c.iter().map(StructureNode::max_leaf).max().unwrap_or(0),
        }
    }

    fn mark_leaves(&self, seen: &mut [bool]) {
        match self {
            StructureNode::Leaf(j) => seen[*j] = true,
            StructureNode::Min(c) | StructureNode::Max(c) => c.iter().for_each(|n| n.mark_leaves(seen)),
        }
    }

    fn validate(&self) -> Result<(), StructureError> {
        match self {
            StructureNode::Leaf(_) => Ok(()),
            StructureNode::Min(c) if c.len() < 2 => Err(StructureError::TooFewChildren { kind: "min" }),
            StructureNode::Max(c) if c.len() < 2 => Err(StructureError::TooFewChildren { kind: "max" }),
            StructureNode::Min(c) | StructureNode::Max(c) => c.iter().try_for_each(|n| n.validate()),
        }
    }
}

impl fmt::Display for StructureNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (name, children) = match self {
            StructureNode::Leaf(j) => return write!(f, "{}", j + 1),
            StructureNode::Min(c) => ("min", c),
            StructureNode::Max(c) => ("max", c),
        };
        write!(f, "{name}(")?;
        for (i, c) in children.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// A set of components whose joint failure fails the system.
///
/// Members are 0-based and sorted. Cut sets order by size first, then
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CutSet {
    members: Vec<usize>,
}

impl CutSet {
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        CutSet { members }
    }

    /// Builds a cut set from 1-based indices. Zero entries are rejected.
    pub fn from_one_based(indices: &[usize]) -> Result<Self, StructureError> {
        indices
            .iter()
            .map(|&j| j.checked_sub(1).ok_or(StructureError::ZeroIndex))
            .collect::<Result<Vec<_>, _>>()
            .map(CutSet::new)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.members.iter().map(|j| j + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.members.binary_search(&j).is_ok()
    }

    fn mask(&self) -> u64 {
        self.members.iter().fold(0, |acc, j| acc | (1 << j))
    }

    fn is_subset_of_mask(&self, mask: u64) -> bool {
        self.mask() & !mask == 0
    }
}

impl Ord for CutSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.members
            .len()
            .cmp(&other.members.len())
            .then_with(|| self.members.cmp(&other.members))
    }
}

impl PartialOrd for CutSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CutSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, j) in self.members.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", j + 1)?;
        }
        f.write_str("}")
    }
}

/// Result of classifying component lifetimes against a system failure.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub time: f64,
    /// 0-based index of the component with `Uncensored` status.
    pub cause: usize,
    pub codes: Vec<CensorCode>,
}

#[derive(Debug, Clone)]
pub struct SystemStructure {
    root: StructureNode,
    m: usize,
    cuts: OnceLock<Result<Vec<CutSet>, StructureError>>,
}

impl PartialEq for SystemStructure {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.root == other.root
    }
}

impl SystemStructure {
    /// Wraps a tree, checking that internal nodes have at least two
    /// children and that leaves cover exactly the indices `0..m`.
    pub fn new(root: StructureNode) -> Result<Self, StructureError> {
        root.validate()?;
        let m = root.max_leaf() + 1;
        let mut seen = vec![false; m];
        root.mark_leaves(&mut seen);
        if let Some(j) = seen.iter().position(|s| !s) {
            return Err(StructureError::MissingComponent(j + 1));
        }
        Ok(SystemStructure {
            root,
            m,
            cuts: OnceLock::new(),
        })
    }

    pub fn series(m: usize) -> Self {
        Self::block(m, StructureNode::Min)
    }

    pub fn parallel(m: usize) -> Self {
        Self::block(m, StructureNode::Max)
    }

    fn block(m: usize, node: fn(Vec<StructureNode>) -> StructureNode) -> Self {
        assert!(m >= 1, "a system needs at least one component");
        let root = if m == 1 {
            StructureNode::Leaf(0)
        } else {
            node((0..m).map(StructureNode::Leaf).collect())
        };
        SystemStructure::new(root).expect("block structures are valid")
    }

    /// The system works while at least `k` of its `n` components work:
    /// the maximum over all `k`-subsets of the subset minimum.
    pub fn k_out_of_n(k: usize, n: usize) -> Result<Self, StructureError> {
        if k == 0 || k > n {
            return Err(StructureError::InvalidPattern(format!("k={k} must be in 1..={n}")));
        }
        if k == 1 {
            return Ok(Self::parallel(n));
        }
        if k == n {
            return Ok(Self::series(n));
        }
        let paths = combinations(n, k)
            .into_iter()
            .map(|c| StructureNode::Min(c.into_iter().map(StructureNode::Leaf).collect()))
            .collect();
        SystemStructure::new(StructureNode::Max(paths))
    }

    /// Five-component bridge with paths {1,4}, {2,5}, {1,3,5}, {2,3,4}.
    pub fn bridge() -> Self {
        "max(min(1,4), min(2,5), min(1,3,5), min(2,3,4))"
            .parse()
            .expect("bridge expression is valid")
    }

    pub fn root(&self) -> &StructureNode {
        &self.root
    }

    pub fn component_count(&self) -> usize {
        self.m
    }

    fn check_dimension(&self, len: usize) -> Result<(), StructureError> {
        if len != self.m {
            return Err(StructureError::DimensionMismatch {
                expected: self.m,
                got: len,
            });
        }
        Ok(())
    }

    pub fn eval_lifetime(&self, x: &[f64]) -> Result<f64, StructureError> {
        self.check_dimension(x.len())?;
        Ok(self.root.lifetime(x))
    }

    /// Whether the system still works when the components in `dead`
    /// (0-based) have failed and all others work.
    pub fn works_with_dead(&self, dead: &[usize]) -> bool {
        let mask = dead.iter().fold(0u64, |acc, j| acc | (1 << j));
        self.root.works(mask)
    }

    /// All minimal cut sets, sorted by size then lexicographically.
    ///
    /// Brute force over all `2^m` subsets; the result is cached. Fails when
    /// `m` exceeds [`MAX_CUT_ENUMERATION`] or some component belongs to no
    /// minimal cut (the structure is then not coherent).
    pub fn minimal_cut_sets(&self) -> Result<&[CutSet], StructureError> {
        self.cuts
            .get_or_init(|| self.enumerate_cuts())
            .as_deref()
            .map_err(Clone::clone)
    }

    fn enumerate_cuts(&self) -> Result<Vec<CutSet>, StructureError> {
        if self.m > MAX_CUT_ENUMERATION {
            return Err(StructureError::TooManyComponents(self.m));
        }
        let total = 1u64 << self.m;
        let is_cut = |mask: u64| !self.root.works(mask);
        let mut cuts: Vec<CutSet> = (1..total)
            .filter(|&mask| is_cut(mask))
            .filter(|&mask| (0..self.m).all(|j| mask & (1 << j) == 0 || !is_cut(mask & !(1 << j))))
            .map(|mask| CutSet::new((0..self.m).filter(|j| mask & (1 << j) != 0).collect()))
            .collect();
        cuts.sort();
        let mut covered = vec![false; self.m];
        for c in &cuts {
            for &j in c.members() {
                covered[j] = true;
            }
        }
        if let Some(j) = covered.iter().position(|c| !c) {
            return Err(StructureError::IrrelevantComponent(j + 1));
        }
        Ok(cuts)
    }

    /// Minimal cuts all of whose members are dead by `time` and whose last
    /// member died exactly at `time`.
    fn failing_cuts<'a>(
        &'a self,
        x: &'a [f64],
        time: f64,
    ) -> Result<impl Iterator<Item = &'a CutSet> + 'a, StructureError> {
        Ok(self
            .minimal_cut_sets()?
            .iter()
            .filter(move |c| c.members().iter().map(|&j| x[j]).fold(f64::NEG_INFINITY, f64::max) == time))
    }

    /// System lifetime plus the censoring status of every component.
    ///
    /// With tied lifetimes the cause is the smallest index among the
    /// members of failing minimal cuts that died at the system time; other
    /// components tied at that time are left-censored.
    pub fn classify_components(&self, x: &[f64]) -> Result<Classification, StructureError> {
        self.check_dimension(x.len())?;
        if x.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(StructureError::InvalidLifetime);
        }
        let time = self.root.lifetime(x);
        let mut at_time = (0..self.m).filter(|&j| x[j] == time);
        let first = at_time.next().ok_or(StructureError::NoFailingCut)?;
        let cause = if at_time.next().is_none() {
            first
        } else {
            self.failing_cuts(x, time)?
                .flat_map(|c| c.members().iter().copied())
                .filter(|&j| x[j] == time)
                .min()
                .ok_or(StructureError::NoFailingCut)?
        };
        let codes = x
            .iter()
            .enumerate()
            .map(|(j, &v)| match v.partial_cmp(&time) {
                _ if j == cause => CensorCode::Uncensored,
                Some(Ordering::Greater) => CensorCode::Right,
                _ => CensorCode::Left,
            })
            .collect();
        Ok(Classification { time, cause, codes })
    }

    /// The minimal cut set responsible for the system failure.
    ///
    /// When several minimal cuts complete at the failure time, the smallest
    /// one containing the cause wins, ties broken lexicographically.
    pub fn masked_candidate_set(&self, x: &[f64]) -> Result<CutSet, StructureError> {
        let class = self.classify_components(x)?;
        self.failing_cuts(x, class.time)?
            .find(|c| c.contains(class.cause))
            .cloned()
            .ok_or(StructureError::NoFailingCut)
    }

    /// Checks that one system's recorded statuses are possible under this
    /// structure.
    ///
    /// * a fully observed row has exactly one uncensored component;
    /// * a masked row has no uncensored component outside the masked set,
    ///   and the masked set is a union of minimal cuts it contains;
    /// * the components known to have failed earlier (left-censored) do not
    ///   already contain a cut;
    /// * the failed-or-possibly-failed components contain a cut through the
    ///   cause (or through the masked set).
    pub fn validate_statuses(&self, statuses: &[ComponentStatus]) -> Result<(), StructureError> {
        self.check_dimension(statuses.len())?;
        let cuts = self.minimal_cut_sets()?;
        let bits = |pred: &dyn Fn(ComponentStatus) -> bool| {
            statuses
                .iter()
                .enumerate()
                .filter(|(_, s)| pred(**s))
                .fold(0u64, |acc, (j, _)| acc | (1 << j))
        };
        let masked = bits(&|s| s.is_masked());
        let uncensored = bits(&|s| s == ComponentStatus::Observed(CensorCode::Uncensored));
        let left = bits(&|s| s == ComponentStatus::Observed(CensorCode::Left));
        let invalid = |msg: &str| Err(StructureError::InvalidPattern(msg.to_string()));

        if cuts.iter().any(|c| c.is_subset_of_mask(left)) {
            return invalid("left-censored components already form a cut");
        }
        let dead = masked | uncensored | left;
        if masked == 0 {
            if uncensored.count_ones() != 1 {
                return invalid("an unmasked system needs exactly one uncensored component");
            }
            if !cuts
                .iter()
                .any(|c| c.is_subset_of_mask(dead) && c.mask() & uncensored != 0)
            {
                return invalid("no minimal cut through the uncensored component has failed");
            }
        } else {
            if uncensored != 0 {
                return invalid("a masked system cannot also report an uncensored component");
            }
            let covered = cuts
                .iter()
                .filter(|c| c.is_subset_of_mask(masked))
                .fold(0u64, |acc, c| acc | c.mask());
            if covered != masked {
                return invalid("masked set is not a union of minimal cut sets");
            }
        }
        Ok(())
    }
}

impl fmt::Display for SystemStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl FromStr for SystemStructure {
    type Err = StructureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parser = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let root = parser.expr()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(parser.error("trailing input"));
        }
        SystemStructure::new(root)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> StructureError {
        StructureError::Parse {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn take_while(&mut self, pred: fn(&u8) -> bool) -> &str {
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(pred) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn expect(&mut self, byte: u8) -> Result<(), StructureError> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", byte as char)))
        }
    }

    fn expr(&mut self) -> Result<StructureNode, StructureError> {
        self.skip_ws();
        match self.src.get(self.pos) {
            Some(b) if b.is_ascii_digit() => {
                let start = self.pos;
                let digits = self.take_while(u8::is_ascii_digit);
                let index: usize = digits.parse().map_err(|_| StructureError::Parse {
                    position: start,
                    message: "bad index".into(),
                })?;
                index
                    .checked_sub(1)
                    .map(StructureNode::Leaf)
                    .ok_or(StructureError::ZeroIndex)
            }
            Some(b) if b.is_ascii_alphabetic() => {
                let start = self.pos;
                let word = self.take_while(u8::is_ascii_alphabetic).to_ascii_lowercase();
                let ctor: fn(Vec<StructureNode>) -> StructureNode = match word.as_str() {
                    "min" | "series" => StructureNode::Min,
                    "max" | "parallel" => StructureNode::Max,
                    _ => {
                        return Err(StructureError::Parse {
                            position: start,
                            message: format!("unknown operator '{word}'"),
                        })
                    }
                };
                self.expect(b'(')?;
                let mut children = vec![self.expr()?];
                loop {
                    self.skip_ws();
                    match self.src.get(self.pos) {
                        Some(b',') => {
                            self.pos += 1;
                            children.push(self.expr()?);
                        }
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.error("expected ',' or ')'")),
                    }
                }
                Ok(ctor(children))
            }
            _ => Err(self.error("expected a component index or min/max")),
        }
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for j in start..n {
            current.push(j);
            rec(j + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}
