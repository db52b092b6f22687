//! Tree representations and symmetry statistics: canonical level
//! sequences for rooted trees, centered canonical codes for free trees,
//! automorphism group orders, vertex-orbit counts, and the polynomial
//! counting automorphisms by their number of fixed vertices.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::traits::{One, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("input is not a tree (disconnected or cyclic)")]
    NotATree,
    #[error("malformed level sequence: {0}")]
    BadLevelSequence(String),
}

/// Rooted unlabelled tree as a depth-first level sequence with root
/// level 1. Canonical form: at every vertex the child subtree blocks
/// appear in non-increasing lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RootedTree {
    levels: Vec<u32>,
}

impl RootedTree {
    pub fn from_levels(levels: Vec<u32>) -> Result<Self, TreeError> {
        if levels.is_empty() || levels[0] != 1 {
            return Err(TreeError::BadLevelSequence("root level must be 1".into()));
        }
        for w in levels.windows(2) {
            if w[1] < 2 || w[1] > w[0] + 1 {
                return Err(TreeError::BadLevelSequence(format!(
                    "level {} after {}",
                    w[1], w[0]
                )));
            }
        }
        Ok(RootedTree { levels })
    }

    pub fn single() -> Self {
        RootedTree { levels: vec![1] }
    }

    pub fn n(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    /// Adjacency list of the underlying graph; vertex 0 is the root.
    pub fn adjacency(&self) -> Adjacency {
        let mut adj = vec![Vec::new(); self.levels.len()];
        let mut stack: Vec<usize> = Vec::new();
        for (v, &lvl) in self.levels.iter().enumerate() {
            stack.truncate(lvl as usize - 1);
            if let Some(&p) = stack.last() {
                adj[p].push(v);
                adj[v].push(p);
            }
            stack.push(v);
        }
        Adjacency { lists: adj }
    }

    /// Child lists in level-sequence order; index 0 is the root.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.levels.len()];
        let mut stack: Vec<usize> = Vec::new();
        for (v, &lvl) in self.levels.iter().enumerate() {
            stack.truncate(lvl as usize - 1);
            if let Some(&p) = stack.last() {
                ch[p].push(v);
            }
            stack.push(v);
        }
        ch
    }

    /// Outdegree (number of children) of every vertex.
    pub fn outdegrees(&self) -> Vec<usize> {
        self.children().iter().map(|c| c.len()).collect()
    }

    pub fn is_canonical(&self) -> bool {
        canonicalize_rooted_adj(&self.adjacency(), 0)
            .map(|c| c == *self)
            .unwrap_or(false)
    }

    pub fn aut_size(&self) -> BigInt {
        let ch = self.children();
        rooted_aut(&ch, 0, &mut HashMap::new(), &self.subtree_codes(&ch))
    }

    pub fn fix_polynomial(&self) -> FixPolynomial {
        let ch = self.children();
        let codes = self.subtree_codes(&ch);
        let mut memo: HashMap<u64, (FixPolynomial, BigInt)> = HashMap::new();
        let (p, _) = rooted_fix(&ch, 0, &codes, &mut memo);
        p
    }

    /// Canonical subtree code id per vertex (AHU interning).
    fn subtree_codes(&self, ch: &[Vec<usize>]) -> Vec<u64> {
        let mut interner: HashMap<Vec<u64>, u64> = HashMap::new();
        let mut codes = vec![0u64; self.levels.len()];
        // level sequence is depth-first, so children precede no parent;
        // process vertices in reverse to see children before parents.
        for v in (0..self.levels.len()).rev() {
            let mut key: Vec<u64> = ch[v].iter().map(|&c| codes[c]).collect();
            key.sort_unstable();
            let next = interner.len() as u64;
            codes[v] = *interner.entry(key).or_insert(next);
        }
        codes
    }
}

impl fmt::Display for RootedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.levels.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl FromStr for RootedTree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, TreeError> {
        let levels: Result<Vec<u32>, _> = s.split_whitespace().map(|t| t.parse()).collect();
        let levels = levels.map_err(|e| TreeError::BadLevelSequence(format!("{}", e)))?;
        RootedTree::from_levels(levels)
    }
}

/// Undirected adjacency lists.
#[derive(Debug, Clone)]
pub struct Adjacency {
    pub lists: Vec<Vec<usize>>,
}

impl Adjacency {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut lists = vec![Vec::new(); n];
        for &(u, v) in edges {
            lists[u].push(v);
            lists[v].push(u);
        }
        Adjacency { lists }
    }

    pub fn n(&self) -> usize {
        self.lists.len()
    }

    pub fn edge_count(&self) -> usize {
        self.lists.iter().map(|l| l.len()).sum::<usize>() / 2
    }

    /// True when connected and acyclic.
    pub fn is_tree(&self) -> bool {
        let n = self.n();
        if n == 0 || self.edge_count() != n - 1 {
            return false;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.lists[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.lists.iter().map(|l| l.len()).collect()
    }
}

/// Centre of a tree: the vertex or edge surviving repeated removal of
/// all leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Center {
    Vertex(usize),
    Edge(usize, usize),
}

pub fn center(adj: &Adjacency) -> Result<Center, TreeError> {
    if !adj.is_tree() {
        return Err(TreeError::NotATree);
    }
    let n = adj.n();
    if n == 1 {
        return Ok(Center::Vertex(0));
    }
    let mut degree = adj.degrees();
    let mut removed = vec![false; n];
    let mut frontier: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut remaining = n;
    while remaining > 2 {
        let mut next = Vec::new();
        for &v in &frontier {
            removed[v] = true;
            remaining -= 1;
            for &w in &adj.lists[v] {
                if !removed[w] {
                    degree[w] -= 1;
                    if degree[w] == 1 {
                        next.push(w);
                    }
                }
            }
        }
        frontier = next;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| !removed[v]).collect();
    match rest.as_slice() {
        [v] => Ok(Center::Vertex(*v)),
        [u, v] => Ok(Center::Edge(*u, *v)),
        _ => unreachable!("leaf stripping leaves one or two vertices"),
    }
}

/// AHU canonical form of the tree rooted at `root`: child blocks sorted
/// in non-increasing lexicographic order.
pub fn canonicalize_rooted_adj(adj: &Adjacency, root: usize) -> Result<RootedTree, TreeError> {
    if !adj.is_tree() {
        return Err(TreeError::NotATree);
    }
    fn code(adj: &Adjacency, v: usize, parent: Option<usize>, depth: u32) -> Vec<u32> {
        let mut blocks: Vec<Vec<u32>> = adj.lists[v]
            .iter()
            .filter(|&&w| Some(w) != parent)
            .map(|&w| code(adj, w, Some(v), depth + 1))
            .collect();
        blocks.sort_unstable_by(|a, b| b.cmp(a));
        let mut out = vec![depth];
        for b in blocks {
            out.extend(b);
        }
        out
    }
    RootedTree::from_levels(code(adj, root, None, 1))
}

/// Canonical code of a free (unrooted) tree. The primary code is the
/// canonical level sequence rooted at the centre; for bicentral trees it
/// is rooted at the endpoint of the central edge carrying the
/// lexicographically larger half, and the two half codes are kept for
/// symmetry computations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FreeTree {
    code: RootedTree,
    halves: Option<(RootedTree, RootedTree)>,
}

impl FreeTree {
    pub fn n(&self) -> usize {
        self.code.n()
    }

    pub fn is_bicentral(&self) -> bool {
        self.halves.is_some()
    }

    /// Canonical rooted level sequence (rooted at the centre or at the
    /// heavy endpoint of the central edge).
    pub fn code(&self) -> &RootedTree {
        &self.code
    }

    pub fn halves(&self) -> Option<(&RootedTree, &RootedTree)> {
        self.halves.as_ref().map(|(a, b)| (a, b))
    }

    pub fn adjacency(&self) -> Adjacency {
        self.code.adjacency()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency().degrees()
    }

    pub fn aut_size(&self) -> BigInt {
        match &self.halves {
            None => self.code.aut_size(),
            Some((a, b)) => {
                let prod = a.aut_size() * b.aut_size();
                if a == b {
                    prod * 2
                } else {
                    prod
                }
            }
        }
    }

    /// Number of vertex orbits of the automorphism group = number of
    /// distinct rooted trees obtainable by rooting at each vertex.
    pub fn orbit_count(&self) -> usize {
        let adj = self.adjacency();
        let mut seen = std::collections::HashSet::new();
        for v in 0..adj.n() {
            seen.insert(canonicalize_rooted_adj(&adj, v).unwrap());
        }
        seen.len()
    }

    pub fn fix_polynomial(&self) -> FixPolynomial {
        match &self.halves {
            None => self.code.fix_polynomial(),
            Some((a, b)) => {
                let pa = a.fix_polynomial();
                let pb = b.fix_polynomial();
                let mut p = pa.mul(&pb);
                if a == b {
                    // flip symmetries: any pair of cross-isomorphisms,
                    // fixing no vertex at all
                    let aut = a.aut_size();
                    p.coeffs[0] += &aut * &aut;
                }
                p
            }
        }
    }
}

impl fmt::Display for FreeTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_bicentral() {
            write!(f, "bicentral: {}", self.code)
        } else {
            write!(f, "{}", self.code)
        }
    }
}

impl FromStr for FreeTree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, TreeError> {
        let body = s.trim().strip_prefix("bicentral:").unwrap_or(s).trim();
        let rooted = RootedTree::from_str(body)?;
        Ok(canonicalize_free_adj(&rooted.adjacency())?)
    }
}

pub fn canonicalize_free_adj(adj: &Adjacency) -> Result<FreeTree, TreeError> {
    match center(adj)? {
        Center::Vertex(c) => Ok(FreeTree {
            code: canonicalize_rooted_adj(adj, c)?,
            halves: None,
        }),
        Center::Edge(u, v) => {
            let half = |root: usize, other: usize| -> RootedTree {
                let cut = Adjacency {
                    lists: adj
                        .lists
                        .iter()
                        .enumerate()
                        .map(|(x, l)| {
                            l.iter()
                                .copied()
                                .filter(|&y| !(x == root && y == other) && !(x == other && y == root))
                                .collect()
                        })
                        .collect(),
                };
                // restrict to the component of `root`
                component_code(&cut, root)
            };
            let hu = half(u, v);
            let hv = half(v, u);
            let (ha, hb, heavy) = if hu >= hv { (hu, hv, u) } else { (hv, hu, v) };
            Ok(FreeTree {
                code: canonicalize_rooted_adj(adj, heavy)?,
                halves: Some((ha, hb)),
            })
        }
    }
}

/// Canonical code of the component containing `root` in a forest.
fn component_code(adj: &Adjacency, root: usize) -> RootedTree {
    fn code(adj: &Adjacency, v: usize, parent: Option<usize>, depth: u32) -> Vec<u32> {
        let mut blocks: Vec<Vec<u32>> = adj.lists[v]
            .iter()
            .filter(|&&w| Some(w) != parent)
            .map(|&w| code(adj, w, Some(v), depth + 1))
            .collect();
        blocks.sort_unstable_by(|a, b| b.cmp(a));
        let mut out = vec![depth];
        for b in blocks {
            out.extend(b);
        }
        out
    }
    RootedTree::from_levels(code(adj, root, None, 1)).expect("valid component code")
}

/// Integer polynomial in w whose k-th coefficient counts automorphisms
/// with exactly k fixed vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct FixPolynomial {
    pub coeffs: Vec<BigInt>,
}

impl FixPolynomial {
    pub fn constant(c: BigInt) -> Self {
        FixPolynomial { coeffs: vec![c] }
    }

    /// The monomial w (a single always-fixed vertex).
    pub fn w() -> Self {
        FixPolynomial { coeffs: vec![BigInt::zero(), BigInt::one()] }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut coeffs = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        FixPolynomial { coeffs }
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![BigInt::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            coeffs[i] += a;
        }
        for (i, b) in other.coeffs.iter().enumerate() {
            coeffs[i] += b;
        }
        FixPolynomial { coeffs }
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        FixPolynomial { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn pow(&self, mut e: usize) -> Self {
        let mut acc = FixPolynomial::constant(BigInt::one());
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Total number of automorphisms (sum of all coefficients).
    pub fn total(&self) -> BigInt {
        self.coeffs.iter().sum()
    }

    /// Coefficient at k, zero-padded.
    pub fn coeff(&self, k: usize) -> BigInt {
        self.coeffs.get(k).cloned().unwrap_or_else(BigInt::zero)
    }

    /// Burnside vertex-orbit count: (sum_sigma fix(sigma)) / |Aut|.
    pub fn burnside_orbits(&self) -> BigInt {
        let weighted: BigInt = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * BigInt::from(k))
            .sum();
        let total = self.total();
        assert!((&weighted % &total).is_zero(), "Burnside sum must divide evenly");
        weighted / total
    }
}

/// |Aut| of the subtree rooted at v: product over child-code classes of
/// m! times the child group orders.
fn rooted_aut(
    ch: &[Vec<usize>],
    v: usize,
    memo: &mut HashMap<u64, BigInt>,
    codes: &[u64],
) -> BigInt {
    if let Some(a) = memo.get(&codes[v]) {
        return a.clone();
    }
    let mut by_code: HashMap<u64, (usize, usize)> = HashMap::new(); // code -> (repr child, multiplicity)
    for &c in &ch[v] {
        by_code.entry(codes[c]).or_insert((c, 0)).1 += 1;
    }
    let mut aut = BigInt::one();
    for (_, (repr, m)) in by_code {
        let child_aut = rooted_aut(ch, repr, memo, codes);
        aut *= factorial(m);
        aut *= child_aut.pow(m as u32);
    }
    memo.insert(codes[v], aut.clone());
    aut
}

/// Fixed-point polynomial of the subtree rooted at v, together with its
/// automorphism count. For a class of m identical child subtrees with
/// polynomial P and group size a, the contribution is
/// sum_{j=0..m} C(m,j) D_{m-j} P^j a^{m-j} (rencontres over the
/// permuted copies; displaced copies contribute no fixed vertices and a
/// free isomorphism choice per copy).
fn rooted_fix(
    ch: &[Vec<usize>],
    v: usize,
    codes: &[u64],
    memo: &mut HashMap<u64, (FixPolynomial, BigInt)>,
) -> (FixPolynomial, BigInt) {
    if let Some(hit) = memo.get(&codes[v]) {
        return hit.clone();
    }
    let mut by_code: HashMap<u64, (usize, usize)> = HashMap::new();
    for &c in &ch[v] {
        by_code.entry(codes[c]).or_insert((c, 0)).1 += 1;
    }
    let mut poly = FixPolynomial::w();
    let mut aut = BigInt::one();
    for (_, (repr, m)) in by_code {
        let (p_child, a_child) = rooted_fix(ch, repr, codes, memo);
        let mut class_poly = FixPolynomial::constant(BigInt::zero());
        for j in 0..=m {
            let ways = binomial(m, j) * derangements(m - j) * a_child.pow((m - j) as u32);
            class_poly = class_poly.add(&p_child.pow(j).scale(&ways));
        }
        poly = poly.mul(&class_poly);
        aut *= factorial(m) * a_child.pow(m as u32);
    }
    memo.insert(codes[v], (poly.clone(), aut.clone()));
    (poly, aut)
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Derangement numbers D_0 = 1, D_1 = 0, D_n = (n-1)(D_{n-1} + D_{n-2}).
pub fn derangements(n: usize) -> BigInt {
    let (mut a, mut b) = (BigInt::one(), BigInt::zero()); // D_0, D_1
    if n == 0 {
        return a;
    }
    for k in 2..=n {
        let next = BigInt::from(k - 1) * (&a + &b);
        a = b;
        b = next;
    }
    b
}

/// Brute-force fixed-point polynomial: filter all n! vertex permutations
/// for automorphisms. Oracle for small n only.
pub fn fix_polynomial_brute(adj: &Adjacency) -> FixPolynomial {
    let n = adj.n();
    let edges: std::collections::HashSet<(usize, usize)> = (0..n)
        .flat_map(|u| adj.lists[u].iter().map(move |&v| (u, v)))
        .collect();
    let mut coeffs = vec![BigInt::zero(); n + 1];
    let mut perm: Vec<usize> = (0..n).collect();
    permute(&mut perm, 0, &mut |p| {
        let ok = edges.iter().all(|&(u, v)| edges.contains(&(p[u], p[v])));
        if ok {
            let fixed = p.iter().enumerate().filter(|&(i, &pi)| i == pi).count();
            coeffs[fixed] += 1;
        }
    });
    FixPolynomial { coeffs }
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

/// Orbit count and aut size packaged for callers that need both.
pub fn orbit_count_u64(t: &FreeTree) -> u64 {
    t.orbit_count() as u64
}

pub fn aut_size_u64(t: &FreeTree) -> u64 {
    t.aut_size().to_u64().expect("aut size fits u64 at desk scale")
}
