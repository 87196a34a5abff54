//! Z-gradations: grading operators, block structures and ad-q eigenspaces.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::cartan::cartan_matrix;
use crate::error::{Error, Result};
use crate::exact::{int, rat, rat_to_i64, Echelon};
use crate::liealg::{cartan_generators, DrAutomorphism, Series, SeriesTag};
use crate::{RatMatrix, Rational};

/// Nonnegative labels `q_1..q_r` attached to the simple roots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynkinLabels {
    tag: SeriesTag,
    labels: Vec<u64>,
}

impl DynkinLabels {
    pub fn new(tag: SeriesTag, labels: Vec<u64>) -> Result<Self> {
        let tag = SeriesTag::new(tag.series, tag.rank)?;
        if labels.len() != tag.rank {
            return Err(Error::Labels {
                tag,
                reason: format!("expected {} labels, got {}", tag.rank, labels.len()),
            });
        }
        if labels.iter().all(|&q| q == 0) {
            return Err(Error::DegenerateLabels);
        }
        Ok(Self { tag, labels })
    }

    pub fn tag(&self) -> SeriesTag {
        self.tag
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    /// For D, whether the fork labels must be exchanged to reach the
    /// `q_{r−1} ≤ q_r` representative.
    pub fn needs_sigma(&self) -> bool {
        let r = self.tag.rank;
        self.tag.series == Series::D && self.labels[r - 2] > self.labels[r - 1]
    }

    /// Labels with the D fork pair ordered so that `q_{r−1} ≤ q_r`.
    pub fn normalized(&self) -> DynkinLabels {
        let mut out = self.clone();
        if self.needs_sigma() {
            let r = self.tag.rank;
            out.labels.swap(r - 2, r - 1);
        }
        out
    }

    /// `x_j − x_{j+1}` for the diagonal `x` of the grading operator, `j = 1..n−1`.
    fn diagonal_steps(&self) -> Vec<u64> {
        let r = self.tag.rank;
        let n = self.tag.dim();
        let q = &self.labels;
        let mut steps = vec![0u64; n - 1];
        for j in 1..n {
            let mirror = n - j;
            let s = match self.tag.series {
                Series::A => q[j - 1],
                Series::B | Series::C if j.min(mirror) < r => q[j.min(mirror) - 1],
                Series::B | Series::C => q[r - 1],
                Series::D if j.min(mirror) < r => q[j.min(mirror) - 1],
                Series::D => q[r - 1] - q[r - 2],
            };
            steps[j - 1] = s;
        }
        steps
    }
}

/// Block partition `(p, k_1..k_p, m_1..m_{p−1})` of a gradation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    tag: SeriesTag,
    sizes: Vec<usize>,
    steps: Vec<u64>,
}

impl BlockStructure {
    pub fn new(tag: SeriesTag, sizes: Vec<usize>, steps: Vec<u64>) -> Result<Self> {
        let tag = SeriesTag::new(tag.series, tag.rank)?;
        let fail = |reason: String| Err(Error::Blocks(format!("{tag}: {reason}")));
        let p = sizes.len();
        if p < 2 {
            return fail("at least two blocks are required".into());
        }
        if sizes.contains(&0) {
            return fail("block sizes must be positive".into());
        }
        let total: usize = sizes.iter().sum();
        if total != tag.dim() {
            return fail(format!(
                "block sizes sum to {total}, ambient dimension is {}",
                tag.dim()
            ));
        }
        if steps.len() != p - 1 {
            return fail(format!(
                "{} blocks need {} steps, got {}",
                p,
                p - 1,
                steps.len()
            ));
        }
        if steps.contains(&0) {
            return fail("steps must be positive".into());
        }
        if tag.series != Series::A {
            if (0..p).any(|a| sizes[a] != sizes[p - 1 - a]) {
                return fail(format!("sizes {sizes:?} are not palindromic"));
            }
            if (0..p - 1).any(|a| steps[a] != steps[p - 2 - a]) {
                return fail(format!("steps {steps:?} are not palindromic"));
            }
            if tag.series == Series::C && p % 2 == 1 && sizes[p / 2] % 2 == 1 {
                return fail(format!("central block size {} must be even", sizes[p / 2]));
            }
        }
        Ok(Self { tag, sizes, steps })
    }

    /// All steps equal to one.
    pub fn unit_steps(tag: SeriesTag, sizes: Vec<usize>) -> Result<Self> {
        let steps = vec![1; sizes.len().saturating_sub(1)];
        Self::new(tag, sizes, steps)
    }

    pub fn tag(&self) -> SeriesTag {
        self.tag
    }

    pub fn p(&self) -> usize {
        self.sizes.len()
    }

    /// `s` with `p = 2s` or `p = 2s + 1`.
    pub fn s(&self) -> usize {
        self.p() / 2
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn steps(&self) -> &[u64] {
        &self.steps
    }

    /// 0-based offset of block `a` (1-based).
    pub fn offset(&self, a: usize) -> usize {
        self.sizes[..a - 1].iter().sum()
    }

    /// 1-based block containing the 1-based matrix index `i`.
    pub fn block_of(&self, i: usize) -> usize {
        let mut acc = 0;
        for (a, &k) in self.sizes.iter().enumerate() {
            acc += k;
            if i <= acc {
                return a + 1;
            }
        }
        self.p()
    }

    /// Minimum step, the integer `l` below which negative grades vanish.
    pub fn l(&self) -> u64 {
        self.steps.iter().copied().min().unwrap_or(1)
    }
}

impl fmt::Display for BlockStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k: Vec<String> = self.sizes.iter().map(|k| k.to_string()).collect();
        let m: Vec<String> = self.steps.iter().map(|m| m.to_string()).collect();
        write!(f, "p={} k=({}) m=({})", self.p(), k.join(","), m.join(","))
    }
}

/// Diagonal grading operator `q = diag(ρ_1 I_{k_1}, …, ρ_p I_{k_p})`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradingOperator {
    pub q: RatMatrix,
    pub blocks: BlockStructure,
    pub rho: Vec<Rational>,
}

impl GradingOperator {
    pub fn tag(&self) -> SeriesTag {
        self.blocks.tag()
    }

    fn from_rho(blocks: BlockStructure, rho: Vec<Rational>) -> Self {
        let mut diag = Vec::with_capacity(blocks.tag().dim());
        for (k, x) in blocks.sizes().iter().zip(&rho) {
            diag.extend(std::iter::repeat_n(x.clone(), *k));
        }
        Self {
            q: RatMatrix::from_diag(&diag),
            blocks,
            rho,
        }
    }
}

/// Result of the Cartan-formula route, keeping the raw operator for D.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelGrading {
    /// `Σ h_i (k⁻¹)_{ij} q_j` before any normalization.
    pub raw: RatMatrix,
    /// Whether `raw` was conjugated by σ to reach `operator`.
    pub sigma: bool,
    pub operator: GradingOperator,
}

/// Grading operator from Dynkin labels by the Cartan formula, with block
/// structure read off the runs of equal diagonal entries.
pub fn operator_from_labels(labels: &DynkinLabels) -> Result<GradingOperator> {
    Ok(operator_from_labels_detailed(labels)?.operator)
}

pub fn operator_from_labels_detailed(labels: &DynkinLabels) -> Result<LabelGrading> {
    let tag = labels.tag();
    let r = tag.rank;
    let n = tag.dim();
    let cm = cartan_matrix(&tag)?;
    let hs = cartan_generators(&tag);
    let mut raw = RatMatrix::zeros(n, n);
    for i in 0..r {
        let coef = (0..r).fold(Rational::zero(), |acc, j| {
            acc + &cm.kinv[(i, j)] * int(labels.labels()[j] as i64)
        });
        if !coef.is_zero() {
            raw = &raw + &hs[i].scale(&coef);
        }
    }
    let sigma = labels.needs_sigma();
    let q = if sigma {
        DrAutomorphism::new(r)?.apply(&raw)?
    } else {
        raw.clone()
    };

    let diag = q.diagonal();
    let mut sizes = Vec::new();
    let mut rho: Vec<Rational> = Vec::new();
    for x in &diag {
        match rho.last() {
            Some(last) if last == x => *sizes.last_mut().expect("run exists") += 1,
            _ => {
                rho.push(x.clone());
                sizes.push(1);
            }
        }
    }
    let mut steps = Vec::with_capacity(rho.len().saturating_sub(1));
    for w in rho.windows(2) {
        let d = &w[0] - &w[1];
        match rat_to_i64(&d) {
            Some(m) if m > 0 => steps.push(m as u64),
            _ => {
                return Err(Error::Internal(format!(
                    "{tag}: grading operator diagonal step {d} is not a positive integer"
                )))
            }
        }
    }
    let blocks = BlockStructure::new(tag, sizes, steps)?;
    Ok(LabelGrading {
        raw,
        sigma,
        operator: GradingOperator { q, blocks, rho },
    })
}

/// Block structure read combinatorially from the label pattern.
pub fn labels_to_block_structure(labels: &DynkinLabels) -> Result<BlockStructure> {
    let norm = labels.normalized();
    let mut sizes = vec![1usize];
    let mut steps = Vec::new();
    for s in norm.diagonal_steps() {
        if s == 0 {
            *sizes.last_mut().expect("nonempty") += 1;
        } else {
            steps.push(s);
            sizes.push(1);
        }
    }
    BlockStructure::new(labels.tag(), sizes, steps)
}

/// Grading operator in canonical block form from its block structure.
pub fn canonical_block_operator(blocks: &BlockStructure) -> Result<GradingOperator> {
    let blocks = BlockStructure::new(
        blocks.tag(),
        blocks.sizes().to_vec(),
        blocks.steps().to_vec(),
    )?;
    let p = blocks.p();
    let m: Vec<Rational> = blocks.steps().iter().map(|&x| int(x as i64)).collect();
    let rho: Vec<Rational> = match blocks.tag().series {
        Series::A => {
            let n = blocks.tag().dim() as i64;
            let k: Vec<Rational> = blocks.sizes().iter().map(|&x| int(x as i64)).collect();
            // Partial sums Σ_{c≤b} k_c and Σ_{c>b} k_c for b = 1..p−1.
            let below: Vec<Rational> = (1..p)
                .map(|b| k[..b].iter().fold(Rational::zero(), |acc, x| acc + x))
                .collect();
            let above: Vec<Rational> = (1..p)
                .map(|b| k[b..].iter().fold(Rational::zero(), |acc, x| acc + x))
                .collect();
            (1..=p)
                .map(|a| {
                    let mut acc = Rational::zero();
                    for b in 1..p {
                        if b < a {
                            acc -= &m[b - 1] * &below[b - 1];
                        } else {
                            acc += &m[b - 1] * &above[b - 1];
                        }
                    }
                    acc / int(n)
                })
                .collect()
        }
        _ => (1..=p)
            .map(|a| {
                let mut acc = Rational::zero();
                for b in 1..p {
                    if b < a {
                        acc -= &m[b - 1];
                    } else {
                        acc += &m[b - 1];
                    }
                }
                acc * rat(1, 2)
            })
            .collect(),
    };
    Ok(GradingOperator::from_rho(blocks, rho))
}

/// Signed degree of block `(a, b)` (1-based).
pub fn block_degree(a: usize, b: usize, blocks: &BlockStructure) -> Result<i64> {
    let p = blocks.p();
    if a == 0 || b == 0 || a > p || b > p {
        return Err(Error::Index(format!("block ({a},{b}) outside 1..={p}")));
    }
    let sum = |lo: usize, hi: usize| {
        blocks.steps()[lo - 1..hi - 1]
            .iter()
            .map(|&m| m as i64)
            .sum::<i64>()
    };
    Ok(match a.cmp(&b) {
        std::cmp::Ordering::Less => sum(a, b),
        std::cmp::Ordering::Greater => -sum(b, a),
        std::cmp::Ordering::Equal => 0,
    })
}

/// Deterministic basis of the ambient algebra: `e_ij` for gl, the
/// antisymmetrized pairs for o, the J̃-symmetrized pairs for sp.
pub fn algebra_basis(tag: &SeriesTag) -> Vec<RatMatrix> {
    let n = tag.dim();
    let mut out = Vec::with_capacity(tag.algebra_dim());
    let unit = |i: usize, j: usize| {
        RatMatrix::from_fn(n, n, |k, l| if k == i && l == j { int(1) } else { int(0) })
    };
    let eps = |i: usize| if i < tag.rank { 1i64 } else { -1 };
    for i in 0..n {
        for j in 0..n {
            let (ip, jp) = (n - 1 - i, n - 1 - j);
            match tag.series {
                Series::A => out.push(unit(i, j)),
                Series::B | Series::D if i + j < n - 1 => {
                    let mut x = unit(i, j);
                    x[(jp, ip)] = &x[(jp, ip)] - int(1);
                    out.push(x);
                }
                Series::C if i + j < n - 1 => {
                    let mut x = unit(i, j);
                    x[(jp, ip)] = &x[(jp, ip)] - int(eps(i) * eps(j));
                    out.push(x);
                }
                Series::C if i + j == n - 1 => out.push(unit(i, j)),
                _ => {}
            }
        }
    }
    out
}

/// `𝔤 = ⊕ 𝔤_m` as exact bases keyed by degree.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedDecomposition {
    pub tag: SeriesTag,
    pub spaces: BTreeMap<i64, Vec<RatMatrix>>,
}

impl GradedDecomposition {
    pub fn dim(&self, m: i64) -> usize {
        self.spaces.get(&m).map_or(0, Vec::len)
    }

    pub fn total_dim(&self) -> usize {
        self.spaces.values().map(Vec::len).sum()
    }

    /// Largest `N` with the degrees forming `−N..=N`.
    pub fn max_degree(&self) -> i64 {
        self.spaces.keys().next_back().copied().unwrap_or(0)
    }

    pub fn dims(&self) -> BTreeMap<i64, usize> {
        self.spaces.iter().map(|(&m, v)| (m, v.len())).collect()
    }

    /// Exact check of `[𝔤_m, 𝔤_n] ⊆ 𝔤_{m+n}` for every pair of degrees.
    /// Returns the first offending pair, if any.
    pub fn bracket_violation(&self) -> Option<(i64, i64)> {
        let n = self.tag.dim();
        let spans: BTreeMap<i64, Echelon> = self
            .spaces
            .iter()
            .map(|(&m, basis)| {
                let mut e = Echelon::new();
                for x in basis {
                    e.insert(
                        sparse(x)
                            .into_iter()
                            .map(|(i, j, v)| (i * n + j, v))
                            .collect(),
                    );
                }
                (m, e)
            })
            .collect();
        let sparse_spaces: BTreeMap<i64, Vec<Vec<(usize, usize, Rational)>>> = self
            .spaces
            .iter()
            .map(|(&m, b)| (m, b.iter().map(sparse).collect()))
            .collect();
        let empty = Echelon::new();
        for (&m, xs) in &sparse_spaces {
            for (&k, ys) in &sparse_spaces {
                let target = spans.get(&(m + k)).unwrap_or(&empty);
                for x in xs {
                    for y in ys {
                        let c = sparse_commutator(x, y, n);
                        if !target.contains(c) {
                            return Some((m, k));
                        }
                    }
                }
            }
        }
        None
    }
}

fn sparse(x: &RatMatrix) -> Vec<(usize, usize, Rational)> {
    let n = x.cols();
    x.entries()
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_zero())
        .map(|(k, v)| (k / n, k % n, v.clone()))
        .collect()
}

fn sparse_commutator(
    x: &[(usize, usize, Rational)],
    y: &[(usize, usize, Rational)],
    n: usize,
) -> BTreeMap<usize, Rational> {
    let mut out: BTreeMap<usize, Rational> = BTreeMap::new();
    let mut add = |key: usize, v: Rational| {
        let e = out.entry(key).or_insert_with(Rational::zero);
        *e += v;
    };
    for (i, j, a) in x {
        for (k, l, b) in y {
            if j == k {
                add(i * n + l, a * b);
            }
            if l == i {
                add(k * n + j, -(b * a));
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// Buckets the ambient basis by ad-q eigenvalue.
pub fn graded_decomposition(op: &GradingOperator) -> Result<GradedDecomposition> {
    let tag = op.tag();
    let diag = op.q.diagonal();
    let mut spaces: BTreeMap<i64, Vec<RatMatrix>> = BTreeMap::new();
    for x in algebra_basis(&tag) {
        let (i, j) = sparse(&x)
            .first()
            .map(|(i, j, _)| (*i, *j))
            .ok_or_else(|| Error::Internal("zero basis element".into()))?;
        let d = &diag[i] - &diag[j];
        let m = rat_to_i64(&d).ok_or_else(|| {
            Error::Internal(format!("non-integer degree {d} at ({},{})", i + 1, j + 1))
        })?;
        spaces.entry(m).or_default().push(x);
    }
    let top = spaces.keys().map(|m| m.abs()).max().unwrap_or(0);
    for m in -top..=top {
        spaces.entry(m).or_default();
    }
    Ok(GradedDecomposition { tag, spaces })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeviKind {
    GL,
    SO,
    Sp,
}

/// Factors of the block-diagonal subgroup `G₀`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeviType {
    pub factors: Vec<(LeviKind, usize)>,
}

impl fmt::Display for LeviType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|(kind, k)| {
                let name = match kind {
                    LeviKind::GL => "GL",
                    LeviKind::SO => "SO",
                    LeviKind::Sp => "Sp",
                };
                format!("{name}({k})")
            })
            .collect();
        f.write_str(&parts.join("×"))
    }
}

pub fn levi_type(blocks: &BlockStructure) -> LeviType {
    let sizes = blocks.sizes();
    let p = blocks.p();
    let s = blocks.s();
    let factors = match blocks.tag().series {
        Series::A => sizes.iter().map(|&k| (LeviKind::GL, k)).collect(),
        series => {
            let mut f: Vec<_> = sizes[..s].iter().map(|&k| (LeviKind::GL, k)).collect();
            if p % 2 == 1 {
                let kind = if series == Series::C {
                    LeviKind::Sp
                } else {
                    LeviKind::SO
                };
                f.push((kind, sizes[s]));
            }
            f
        }
    };
    LeviType { factors }
}

/// Whether every ρ difference is an integer and the operator lies in the algebra.
pub fn is_consistent(op: &GradingOperator) -> bool {
    let integral = op.rho.windows(2).all(|w| (&w[0] - &w[1]).is_integer());
    let member = match op.tag().series {
        Series::A => true,
        _ => crate::liealg::algebra_membership(&op.tag(), &op.q, &Rational::zero())
            .map(|m| m.member)
            .unwrap_or(false),
    };
    integral && member
}
