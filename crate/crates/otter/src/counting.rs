//! Exact counting sequences for trees: Polya trees a_n, free trees f_n,
//! labelled trees n^{n-2}, the dressed-atom series s(z), and the
//! decomposition of F(z) into fixed-point classes Sym_k.
//!
//! Two independent routes to f_n are provided: Otter's dissymmetry
//! equation and the symmetry decomposition F = Sym_0 + U(s).

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::io::Write as _;
use std::sync::{Arc, Mutex};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Zero};
use once_cell::sync::Lazy;
use thiserror::Error;

use crate::series::ExactSeries;
use crate::tree::factorial;

#[derive(Debug, Error)]
pub enum CountingError {
    #[error("coefficient at n={0} is not an integer: {1}")]
    NonIntegralCoefficient(usize, String),
    #[error("series error: {0}")]
    Series(#[from] crate::series::SeriesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CountKind {
    RootedUnlabelled,
    FreeUnlabelled,
    LabelledUnrooted,
    LabelledRooted,
}

impl CountKind {
    pub fn cache_key(self) -> &'static str {
        match self {
            CountKind::RootedUnlabelled => "rooted_unlabelled",
            CountKind::FreeUnlabelled => "free_unlabelled",
            CountKind::LabelledUnrooted => "labelled_unrooted",
            CountKind::LabelledRooted => "labelled_rooted",
        }
    }
}

/// Integer counting table indexed by n >= 1.
#[derive(Debug, Clone)]
pub struct CountTable {
    pub kind: CountKind,
    values: Vec<BigInt>,
}

impl CountTable {
    pub fn from_values(kind: CountKind, values: Vec<BigInt>) -> Self {
        CountTable { kind, values }
    }

    pub fn n_max(&self) -> usize {
        self.values.len()
    }

    /// Count at n (1-based).
    pub fn get(&self, n: usize) -> &BigInt {
        &self.values[n - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &BigInt)> {
        self.values.iter().enumerate().map(|(i, v)| (i + 1, v))
    }
}

/// Exact rational masses of Sym_k at a fixed n, k = 0..=n.
#[derive(Debug, Clone)]
pub struct SymTable {
    pub n: usize,
    pub entries: BTreeMap<usize, BigRational>,
}

impl SymTable {
    pub fn row_sum(&self) -> BigRational {
        self.entries.values().sum()
    }
}

/// The rooted-tree series A(z) to the given order. Production route:
/// the coefficient recurrence obtained by logarithmic differentiation of
/// A = z exp(sum_i A(z^i)/i), namely n a_{n+1} = sum_{k<=n} q_k a_{n+1-k}
/// with q_k = sum_{d|k} d a_d; all-integer arithmetic, O(n^2).
/// Integrality of every division is asserted, not assumed.
pub fn rooted_series(n_max: usize) -> Result<ExactSeries, CountingError> {
    if let Some(s) = cache_load("series_rooted", n_max) {
        return Ok(s);
    }
    let mut a = vec![BigInt::zero(); n_max + 1];
    let mut q = vec![BigInt::zero(); n_max + 1];
    if n_max >= 1 {
        a[1] = BigInt::one();
        for j in 1..=n_max {
            q[j] += &a[1] * 1; // d = 1 divisor updates
        }
    }
    for n in 1..n_max {
        let mut acc = BigInt::zero();
        for k in 1..=n {
            if !q[k].is_zero() && !a[n + 1 - k].is_zero() {
                acc += &q[k] * &a[n + 1 - k];
            }
        }
        let (quot, rem) = num::Integer::div_rem(&acc, &BigInt::from(n));
        if !rem.is_zero() {
            return Err(CountingError::NonIntegralCoefficient(n + 1, acc.to_string()));
        }
        a[n + 1] = quot;
        let d = n + 1;
        let da = BigInt::from(d) * &a[d];
        let mut m = d;
        while m <= n_max {
            q[m] += &da;
            m += d;
        }
    }
    let series = ExactSeries::from_integer_coeffs(&a, n_max);
    cache_store("series_rooted", n_max, &series);
    Ok(series)
}

/// Literal fixed-point iteration A <- z exp(sum_i A(z^i)/i), escalating
/// the working order one step at a time: once A is correct below order d,
/// a single application fixes the coefficient at d. Exact but much
/// slower than the recurrence; kept as an independent cross-check route.
pub fn rooted_series_fixed_point(n_max: usize) -> Result<ExactSeries, CountingError> {
    let mut a = ExactSeries::monomial_z(1);
    for ord in 2..=n_max.max(1) {
        if ord > n_max {
            break;
        }
        a = a.truncate(ord);
        a = a.polya_exp(1)?.mul_z();
    }
    check_integral(&a)?;
    Ok(a)
}

fn check_integral(s: &ExactSeries) -> Result<(), CountingError> {
    for (n, c) in s.coeffs().iter().enumerate() {
        if !c.is_integer() {
            return Err(CountingError::NonIntegralCoefficient(n, c.to_string()));
        }
    }
    Ok(())
}

fn table_from_series(kind: CountKind, s: &ExactSeries) -> Result<CountTable, CountingError> {
    check_integral(s)?;
    let values = s.coeffs()[1..].iter().map(|c| c.to_integer()).collect();
    Ok(CountTable { kind, values })
}

/// a_1..a_{n_max} via the functional-equation fixed point.
pub fn rooted_counts(n_max: usize) -> Result<CountTable, CountingError> {
    table_from_series(CountKind::RootedUnlabelled, &rooted_series(n_max)?)
}

/// f_1..f_{n_max} via Otter's dissymmetry equation
/// F = A - (A^2 - A(z^2))/2.
pub fn free_counts_dissymmetry(n_max: usize) -> Result<CountTable, CountingError> {
    let a = rooted_series(n_max)?;
    table_from_series(CountKind::FreeUnlabelled, &free_series_from(&a)?)
}

pub fn free_series_from(a: &ExactSeries) -> Result<ExactSeries, CountingError> {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let f = a.sub(&a.mul(a).sub(&a.substitute_power(2)?).scale(&half));
    Ok(f)
}

/// u_n = n^{n-2} (u_1 = 1 by the convention 1^{-1} = 1).
pub fn labelled_counts(n_max: usize) -> CountTable {
    let values = (1..=n_max)
        .map(|n| {
            if n == 1 {
                BigInt::one()
            } else {
                BigInt::from(n).pow(n as u32 - 2)
            }
        })
        .collect();
    CountTable { kind: CountKind::LabelledUnrooted, values }
}

/// s(z) = z exp(sum_{i>=2} A(z^i)/i), the series of fixed points dressed
/// with their permuted branch systems.
pub fn s_series(n_max: usize) -> Result<ExactSeries, CountingError> {
    let a = rooted_series(n_max)?;
    Ok(a.polya_exp(2)?.mul_z())
}

/// U(z) = sum n^{n-2}/n! z^n, the EGF of labelled unrooted trees.
pub fn u_series(n_max: usize) -> ExactSeries {
    egf_series(n_max, |n| {
        if n == 1 {
            BigInt::one()
        } else {
            BigInt::from(n).pow(n as u32 - 2)
        }
    })
}

/// T(z) = sum n^{n-1}/n! z^n, the EGF of labelled rooted trees.
pub fn t_series(n_max: usize) -> ExactSeries {
    egf_series(n_max, |n| {
        if n == 1 {
            BigInt::one()
        } else {
            BigInt::from(n).pow(n as u32 - 1)
        }
    })
}

fn egf_series(n_max: usize, num: impl Fn(usize) -> BigInt) -> ExactSeries {
    let mut coeffs = vec![BigRational::zero()];
    for n in 1..=n_max {
        coeffs.push(BigRational::new(num(n), factorial(n)));
    }
    ExactSeries::from_coeffs(coeffs, n_max)
}

/// The symmetry-decomposition route: U(s(z)) and Sym_0 = F - U(s),
/// together with the full Sym_k triangle.
///
/// Internally the triangle is held as the integers
/// W_{k,n} = n! [z^n] Sym_k = (k^{k-2}/k!) n! [z^n] s(z)^k,
/// the number of (labelled-slot) symmetric structures of each class;
/// rational coefficients are formed on demand as W_{k,n}/n!. Working in
/// integers sidesteps the gcd churn of multiplying out rational s-powers
/// and doubles as a structural check: every claimed division (n! s_n and
/// k^{k-2} P_{k,n}/k!) is asserted exact.
#[derive(Debug)]
pub struct SymDecomposition {
    pub order: usize,
    pub a: ExactSeries,
    pub f: ExactSeries,
    pub s: ExactSeries,
    /// w[k][n] = n! [z^n] Sym_k, for k = 0..=order, n = 0..=order.
    w: Vec<Vec<BigInt>>,
    /// n! for n = 0..=order.
    fact: Vec<BigInt>,
    pub u_of_s: ExactSeries,
    pub sym0: ExactSeries,
}

impl SymDecomposition {
    pub fn compute(order: usize) -> Result<Self, CountingError> {
        let a = rooted_series(order)?;
        let f = free_series_from(&a)?;
        let s = a.polya_exp(2)?.mul_z();

        let mut fact = vec![BigInt::one()];
        for n in 1..=order {
            let next = &fact[n - 1] * BigInt::from(n);
            fact.push(next);
        }
        // t_n = n! s_n: s is the EGF slot count of a single dressed fixed
        // point, so these must come out integral.
        let mut t = vec![BigInt::zero(); order + 1];
        for n in 1..=order {
            let tn = s.coeff(n) * BigRational::from_integer(fact[n].clone());
            if !tn.is_integer() {
                return Err(CountingError::NonIntegralCoefficient(n, tn.to_string()));
            }
            t[n] = tn.to_integer();
        }
        // Pascal triangle for the EGF product rule
        // P_{k,n} = sum_m C(n,m) t_m P_{k-1,n-m}, with P_{k,n} = n![z^n]s^k.
        let mut binom = vec![vec![BigInt::one()]];
        for n in 1..=order {
            let prev = &binom[n - 1];
            let mut row = vec![BigInt::one()];
            for m in 1..n {
                row.push(&prev[m - 1] + &prev[m]);
            }
            row.push(BigInt::one());
            binom.push(row);
        }

        let mut w: Vec<Vec<BigInt>> = Vec::with_capacity(order + 1);
        w.push(vec![BigInt::zero(); order + 1]); // Sym_0 row filled below
        let mut p_prev = vec![BigInt::zero(); order + 1]; // P_0 = 1
        p_prev[0] = BigInt::one();
        for k in 1..=order {
            let mut p = vec![BigInt::zero(); order + 1];
            for n in k..=order {
                let mut acc = BigInt::zero();
                for m in 1..=n - (k - 1) {
                    if !t[m].is_zero() && !p_prev[n - m].is_zero() {
                        acc += &binom[n][m] * &t[m] * &p_prev[n - m];
                    }
                }
                p[n] = acc;
            }
            // W_{k,n} = k^{k-2} P_{k,n} / k!; a symmetry count, so the
            // division must be exact.
            let knum = if k == 1 { BigInt::one() } else { BigInt::from(k).pow(k as u32 - 2) };
            let mut wk = vec![BigInt::zero(); order + 1];
            for n in k..=order {
                if p[n].is_zero() {
                    continue;
                }
                let num = &knum * &p[n];
                let (quot, rem) = num::Integer::div_rem(&num, &fact[k]);
                if !rem.is_zero() {
                    return Err(CountingError::NonIntegralCoefficient(n, num.to_string()));
                }
                wk[n] = quot;
            }
            w.push(wk);
            p_prev = p;
        }

        let mut u_of_s_coeffs = vec![BigRational::zero(); order + 1];
        for n in 1..=order {
            let mut total = BigInt::zero();
            for k in 1..=n {
                total += &w[k][n];
            }
            u_of_s_coeffs[n] = BigRational::new(total, fact[n].clone());
        }
        let u_of_s = ExactSeries::from_coeffs(u_of_s_coeffs, order);
        let sym0 = f.sub(&u_of_s);
        for n in 1..=order {
            let w0 = sym0.coeff(n) * BigRational::from_integer(fact[n].clone());
            if !w0.is_integer() {
                return Err(CountingError::NonIntegralCoefficient(n, w0.to_string()));
            }
            w[0][n] = w0.to_integer();
        }
        Ok(SymDecomposition { order, a, f, s, w, fact, u_of_s, sym0 })
    }

    /// [z^n] Sym_k.
    pub fn sym_k_coeff(&self, k: usize, n: usize) -> BigRational {
        if k > self.order || n > self.order {
            return BigRational::zero();
        }
        BigRational::new(self.w[k][n].clone(), self.fact[n].clone())
    }

    /// n! [z^n] Sym_k: the integer count of symmetric structures.
    pub fn sym_k_weight(&self, k: usize, n: usize) -> BigInt {
        if k > self.order || n > self.order {
            return BigInt::zero();
        }
        self.w[k][n].clone()
    }

    /// [z^n] s(z)^k, recovered from the triangle via
    /// [z^n]s^k = W_{k,n} k! / (k^{k-2} n!).
    pub fn s_power_coeff(&self, k: usize, n: usize) -> BigRational {
        assert!(k >= 1);
        if k > self.order || n > self.order {
            return BigRational::zero();
        }
        let knum = if k == 1 { BigInt::one() } else { BigInt::from(k).pow(k as u32 - 2) };
        BigRational::new(&self.w[k][n] * factorial(k), knum * &self.fact[n])
    }

    pub fn sym_k_series(&self, k: usize) -> ExactSeries {
        assert!(k >= 1 && k <= self.order);
        let coeffs = (0..=self.order)
            .map(|n| BigRational::new(self.w[k][n].clone(), self.fact[n].clone()))
            .collect();
        ExactSeries::from_coeffs(coeffs, self.order)
    }

    pub fn free_count(&self, n: usize) -> BigInt {
        self.f.coeff(n).to_integer()
    }

    pub fn rooted_count(&self, n: usize) -> BigInt {
        self.a.coeff(n).to_integer()
    }
}

/// Free counts via the symmetry route, with the Sym_0 remainder.
pub fn free_counts_symmetry(
    n_max: usize,
) -> Result<(CountTable, ExactSeries), CountingError> {
    let d = shared_decomposition(n_max)?;
    let table = table_from_series(CountKind::FreeUnlabelled, &d.f)?;
    Ok((table, d.sym0.clone()))
}

/// Sym_k slice as a series: (k^{k-2}/k!) s(z)^k.
pub fn sym_k_series(k: usize, n_max: usize) -> Result<ExactSeries, CountingError> {
    assert!(k >= 1, "sym_k_series requires k >= 1");
    let d = shared_decomposition(n_max)?;
    Ok(d.sym_k_series(k))
}

static DECOMPOSITIONS: Lazy<Mutex<HashMap<usize, Arc<SymDecomposition>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Process-wide cache of the (expensive) symmetry decomposition.
pub fn shared_decomposition(order: usize) -> Result<Arc<SymDecomposition>, CountingError> {
    if let Some(d) = DECOMPOSITIONS.lock().unwrap().get(&order) {
        return Ok(d.clone());
    }
    let d = Arc::new(SymDecomposition::compute(order)?);
    DECOMPOSITIONS.lock().unwrap().insert(order, d.clone());
    Ok(d)
}

static ROOTED_SERIES_CACHE: Lazy<Mutex<HashMap<usize, Arc<ExactSeries>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Process-wide cache of A(z) at a given order.
pub fn shared_rooted_series(order: usize) -> Result<Arc<ExactSeries>, CountingError> {
    {
        let map = ROOTED_SERIES_CACHE.lock().unwrap();
        if let Some(s) = map.get(&order) {
            return Ok(s.clone());
        }
        // a longer series restricts to a shorter one
        if let Some((_, s)) = map.iter().filter(|(&o, _)| o > order).min_by_key(|(&o, _)| o) {
            return Ok(Arc::new(s.truncate(order)));
        }
    }
    let s = Arc::new(rooted_series(order)?);
    ROOTED_SERIES_CACHE.lock().unwrap().insert(order, s.clone());
    Ok(s)
}

static FREE_SERIES_CACHE: Lazy<Mutex<HashMap<usize, Arc<ExactSeries>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Process-wide cache of F(z) at a given order; the dissymmetry product
/// is quadratic in the order, so repeated per-n callers share one run.
pub fn shared_free_series(order: usize) -> Result<Arc<ExactSeries>, CountingError> {
    {
        let map = FREE_SERIES_CACHE.lock().unwrap();
        if let Some(s) = map.get(&order) {
            return Ok(s.clone());
        }
        if let Some((_, s)) = map.iter().filter(|(&o, _)| o > order).min_by_key(|(&o, _)| o) {
            return Ok(Arc::new(s.truncate(order)));
        }
    }
    let s = Arc::new(free_series_from(shared_rooted_series(order)?.as_ref())?);
    FREE_SERIES_CACHE.lock().unwrap().insert(order, s.clone());
    Ok(s)
}

// ---- disk cache -------------------------------------------------------

/// Series cache directory, from OTTER_CACHE_DIR; caching is skipped when
/// the variable is unset.
fn cache_dir() -> Option<std::path::PathBuf> {
    std::env::var_os("OTTER_CACHE_DIR").map(std::path::PathBuf::from)
}

fn cache_path(key: &str, n_max: usize) -> Option<std::path::PathBuf> {
    cache_dir().map(|d| d.join(format!("{}_{}.tsv", key, n_max)))
}

fn cache_load(key: &str, n_max: usize) -> Option<ExactSeries> {
    let path = cache_path(key, n_max)?;
    let text = std::fs::read_to_string(path).ok()?;
    ExactSeries::from_text(&text).ok()
}

/// Atomic write (temp file + rename) so concurrent writers cannot leave
/// a torn cache entry.
fn cache_store(key: &str, n_max: usize, s: &ExactSeries) {
    let Some(path) = cache_path(key, n_max) else { return };
    let Some(dir) = path.parent() else { return };
    if std::fs::create_dir_all(dir).is_err() {
        return;
    }
    let tmp = dir.join(format!(
        ".{}_{}.tmp{}",
        key,
        n_max,
        std::process::id()
    ));
    let ok = std::fs::File::create(&tmp)
        .and_then(|mut f| f.write_all(s.to_text().as_bytes()))
        .is_ok();
    if ok {
        let _ = std::fs::rename(&tmp, &path);
    } else {
        let _ = std::fs::remove_file(&tmp);
    }
}
