//! Dense truncated multivariate power series.
//!
//! A series in `n` variables truncated at total degree `T` stores one
//! coefficient per multi-index of degree ≤ `T`, in graded-lex order. The
//! index layout is shared between all series with the same `(n, T)`.
//!
//! Monomials also get a mixed-radix code `Σ α_i (T+1)^i`. Codes are additive
//! as long as the sum stays within degree `T`, which turns the product's
//! index lookup into one table read.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::linalg::{Mat, FLOAT_RANK_TOL};
use crate::multi_index::{indices_up_to, MultiIndex};
use crate::scalar::{GaussRat, Scalar};

/// Truncation order used when callers do not choose one.
pub const DEFAULT_ORDER: u32 = 10;

const TABLE_LIMIT: usize = 1 << 22;

#[derive(Debug)]
pub struct Layout {
    nvars: usize,
    order: u32,
    monos: Vec<MultiIndex>,
    degs: Vec<u32>,
    codes: Vec<usize>,
    radix: usize,
    table: Option<Vec<u32>>,
    lookup: HashMap<usize, u32>,
    /// `deg_end[d]` is the number of monomials of degree ≤ d.
    deg_end: Vec<usize>,
}

impl Layout {
    fn build(nvars: usize, order: u32) -> Layout {
        let monos = indices_up_to(nvars, order);
        let radix = order as usize + 1;
        let degs: Vec<u32> = monos.iter().map(|m| m.degree()).collect();
        let codes: Vec<usize> = monos
            .iter()
            .map(|m| m.0.iter().rev().fold(0usize, |acc, &a| acc * radix + a as usize))
            .collect();
        let span = radix.checked_pow(nvars as u32).filter(|&s| s <= TABLE_LIMIT);
        let (table, lookup) = match span {
            Some(s) => {
                let mut t = vec![u32::MAX; s];
                for (i, &c) in codes.iter().enumerate() {
                    t[c] = i as u32;
                }
                (Some(t), HashMap::new())
            }
            None => (None, codes.iter().enumerate().map(|(i, &c)| (c, i as u32)).collect()),
        };
        let mut deg_end = vec![0; order as usize + 1];
        for &d in &degs {
            for e in deg_end.iter_mut().skip(d as usize) {
                *e += 1;
            }
        }
        Layout { nvars, order, monos, degs, codes, radix, table, lookup, deg_end }
    }

    pub fn get(nvars: usize, order: u32) -> Arc<Layout> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, u32), Arc<Layout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry((nvars, order))
            .or_insert_with(|| Arc::new(Layout::build(nvars, order)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.monos
    }

    pub fn degree_of(&self, idx: usize) -> u32 {
        self.degs[idx]
    }

    pub fn count_up_to(&self, d: u32) -> usize {
        self.deg_end[d.min(self.order) as usize]
    }

    fn by_code(&self, code: usize) -> Option<usize> {
        match &self.table {
            Some(t) => t.get(code).copied().filter(|&i| i != u32::MAX).map(|i| i as usize),
            None => self.lookup.get(&code).map(|&i| i as usize),
        }
    }

    pub fn index_of(&self, exps: &[u32]) -> Option<usize> {
        if exps.len() != self.nvars || exps.iter().sum::<u32>() > self.order {
            return None;
        }
        let code = exps.iter().rev().fold(0usize, |acc, &a| acc * self.radix + a as usize);
        self.by_code(code)
    }
}

#[derive(Clone)]
pub struct TruncatedSeries<S> {
    layout: Arc<Layout>,
    coeffs: Vec<S>,
}

impl<S: Scalar> PartialEq for TruncatedSeries<S> {
    fn eq(&self, other: &Self) -> bool {
        self.nvars() == other.nvars() && self.order() == other.order() && self.coeffs == other.coeffs
    }
}

fn bump<S: Scalar>(slot: &mut S, v: &S) {
    let cur = std::mem::replace(slot, S::zero());
    *slot = cur + v;
}

impl<S: Scalar> TruncatedSeries<S> {
    pub fn zero(nvars: usize, order: u32) -> Self {
        let layout = Layout::get(nvars, order);
        let coeffs = vec![S::zero(); layout.len()];
        TruncatedSeries { layout, coeffs }
    }

    pub fn constant(c: S, nvars: usize, order: u32) -> Self {
        let mut s = Self::zero(nvars, order);
        s.coeffs[0] = c;
        s
    }

    pub fn one(nvars: usize, order: u32) -> Self {
        Self::constant(S::one(), nvars, order)
    }

    /// The coordinate function `x_i`.
    pub fn var(i: usize, nvars: usize, order: u32) -> Self {
        assert!(i < nvars, "variable {i} out of range");
        let mut s = Self::zero(nvars, order);
        if order >= 1 {
            let mut e = vec![0; nvars];
            e[i] = 1;
            s.set_coeff(&e, S::one());
        }
        s
    }

    /// Builds a series from `(exponents, coefficient)` terms; terms above the
    /// order are dropped and repeated exponents accumulate.
    pub fn from_terms(nvars: usize, order: u32, terms: &[(Vec<u32>, S)]) -> Self {
        let mut s = Self::zero(nvars, order);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent length");
            if let Some(i) = s.layout.index_of(e) {
                bump(&mut s.coeffs[i], c);
            }
        }
        s
    }

    pub fn from_fn(nvars: usize, order: u32, mut f: impl FnMut(&MultiIndex) -> S) -> Self {
        let layout = Layout::get(nvars, order);
        let coeffs = layout.monos.iter().map(&mut f).collect();
        TruncatedSeries { layout, coeffs }
    }

    /// Univariate series from a coefficient list `c_0, c_1, …`.
    pub fn univariate(coeffs: &[S], order: u32) -> Self {
        let mut s = Self::zero(1, order);
        for (k, c) in coeffs.iter().enumerate().take(order as usize + 1) {
            s.coeffs[k] = c.clone();
        }
        s
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> u32 {
        self.layout.order
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &S)> {
        self.layout.monos.iter().zip(&self.coeffs)
    }

    /// Coefficient of `x^exps`; zero above the truncation order.
    pub fn coeff(&self, exps: &[u32]) -> S {
        self.layout
            .index_of(exps)
            .map_or_else(S::zero, |i| self.coeffs[i].clone())
    }

    pub fn set_coeff(&mut self, exps: &[u32], c: S) {
        let i = self.layout.index_of(exps).expect("exponent within order");
        self.coeffs[i] = c;
    }

    pub fn constant_term(&self) -> S {
        self.coeffs[0].clone()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Zero through total degree `d` (inclusive).
    pub fn is_zero_through(&self, d: u32) -> bool {
        let end = self.layout.count_up_to(d);
        self.coeffs[..end].iter().all(|c| c.is_zero())
    }

    /// Lowest degree with a nonzero coefficient.
    pub fn valuation(&self) -> Option<u32> {
        self.coeffs.iter().position(|c| !c.is_zero()).map(|i| self.layout.degs[i])
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.magnitude()).fold(0.0, f64::max)
    }

    /// Largest coefficient modulus among degrees ≤ `d`.
    pub fn max_abs_through(&self, d: u32) -> f64 {
        let end = self.layout.count_up_to(d);
        self.coeffs[..end].iter().map(|c| c.magnitude()).fold(0.0, f64::max)
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> TruncatedSeries<T> {
        TruncatedSeries { layout: self.layout.clone(), coeffs: self.coeffs.iter().map(f).collect() }
    }

    /// Drops every coefficient above `order`. Raising the order is refused.
    pub fn truncate(&self, order: u32) -> Self {
        if order >= self.order() {
            return self.clone();
        }
        let layout = Layout::get(self.nvars(), order);
        let coeffs = self.coeffs[..layout.len()].to_vec();
        TruncatedSeries { layout, coeffs }
    }

    /// Same coefficients at a higher order, padding with zeros. Only sound
    /// when the series is known to be a polynomial.
    pub fn extend_order(&self, order: u32) -> Self {
        if order <= self.order() {
            return self.truncate(order);
        }
        let mut out = Self::zero(self.nvars(), order);
        out.coeffs[..self.coeffs.len()].clone_from_slice(&self.coeffs);
        out
    }

    fn check_vars(&self, other: &Self) -> Result<()> {
        if self.nvars() != other.nvars() {
            return Err(Error::VarMismatch(self.nvars(), other.nvars()));
        }
        Ok(())
    }

    fn aligned(&self, other: &Self) -> Result<(Self, Self)> {
        self.check_vars(other)?;
        let t = self.order().min(other.order());
        Ok((self.truncate(t), other.truncate(t)))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        let (mut a, b) = self.aligned(other)?;
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            bump(x, y);
        }
        Ok(a)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        let (mut a, b) = self.aligned(other)?;
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            let cur = std::mem::replace(x, S::zero());
            *x = cur - y;
        }
        Ok(a)
    }

    pub fn neg(&self) -> Self {
        self.map(|c| -c.clone())
    }

    pub fn scale(&self, s: &S) -> Self {
        self.map(|c| c.clone() * s)
    }

    pub fn add_constant(&self, s: &S) -> Self {
        let mut out = self.clone();
        bump(&mut out.coeffs[0], s);
        out
    }

    /// Cauchy product truncated at the smaller order.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.aligned(other)?;
        let lay = a.layout.clone();
        let t = lay.order;
        let nz_a: Vec<usize> = (0..a.coeffs.len()).filter(|&i| !a.coeffs[i].is_zero()).collect();
        let nz_b: Vec<usize> = (0..b.coeffs.len()).filter(|&j| !b.coeffs[j].is_zero()).collect();
        let visit = |f: &mut dyn FnMut(usize, usize, usize)| {
            for &i in &nz_a {
                let limit = lay.deg_end[(t - lay.degs[i]) as usize];
                let ci = lay.codes[i];
                for &j in &nz_b {
                    if j >= limit {
                        break;
                    }
                    f(i, j, lay.by_code(ci + lay.codes[j]).expect("code within table"));
                }
            }
        };
        let out = S::product_sum(&a.coeffs, &b.coeffs, lay.len(), &visit);
        Ok(TruncatedSeries { layout: lay, coeffs: out })
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.nvars(), self.order());
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Formal partial derivative; the result is valid through order `T − 1`.
    pub fn diff(&self, var: usize) -> Result<Self> {
        if var >= self.nvars() {
            return Err(Error::VarOutOfRange { index: var, nvars: self.nvars() });
        }
        let t = self.order().saturating_sub(1);
        let mut out = Self::zero(self.nvars(), t);
        if self.order() == 0 {
            return Ok(out);
        }
        let mut e = vec![0u32; self.nvars()];
        for (i, m) in out.layout.clone().monos.iter().enumerate() {
            e.copy_from_slice(&m.0);
            e[var] += 1;
            let src = self.layout.index_of(&e).expect("raised index within order");
            let c = &self.coeffs[src];
            if !c.is_zero() {
                out.coeffs[i] = c.clone() * &S::from_i64(e[var] as i64);
            }
        }
        Ok(out)
    }

    /// Antiderivative in `var` with zero integration constant on `x_var = 0`.
    /// The result keeps the input order (the top degree is lost).
    pub fn integrate(&self, var: usize) -> Result<Self> {
        if var >= self.nvars() {
            return Err(Error::VarOutOfRange { index: var, nvars: self.nvars() });
        }
        let mut out = Self::zero(self.nvars(), self.order());
        let mut e = vec![0u32; self.nvars()];
        for (i, m) in self.layout.monos.iter().enumerate() {
            let c = &self.coeffs[i];
            if c.is_zero() {
                continue;
            }
            e.copy_from_slice(&m.0);
            e[var] += 1;
            if let Some(dst) = out.layout.index_of(&e) {
                out.coeffs[dst] = c.clone() * &S::from_ratio(1, e[var] as i64);
            }
        }
        Ok(out)
    }

    /// Multiplicative inverse by Newton iteration `g ← g(2 − f g)`.
    pub fn recip(&self) -> Result<Self> {
        let c0 = self.coeffs[0].inv().ok_or(Error::NotUnit)?;
        let n = self.nvars();
        let t = self.order();
        let two = S::from_i64(2);
        let mut g = Self::constant(c0, n, t);
        let mut valid = 0u32;
        while valid < t {
            let fg = self * &g;
            let corr = fg.neg().add_constant(&two);
            g = &g * &corr;
            valid = 2 * valid + 1;
        }
        Ok(g)
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        self.try_mul(&other.recip()?)
    }

    /// Part of the series homogeneous of degree `d` in the listed variables.
    pub fn part_in_vars(&self, vars: &[usize], d: u32) -> Self {
        let mut out = Self::zero(self.nvars(), self.order());
        for (i, m) in self.layout.monos.iter().enumerate() {
            let dm: u32 = vars.iter().map(|&v| m.0[v]).sum();
            if dm == d {
                out.coeffs[i] = self.coeffs[i].clone();
            }
        }
        out
    }

    /// Sets the listed variables to zero.
    pub fn restrict_zero(&self, vars: &[usize]) -> Self {
        self.part_in_vars(vars, 0)
    }

    /// `true` when no monomial involves any of the listed variables.
    pub fn independent_of(&self, vars: &[usize]) -> bool {
        self.layout
            .monos
            .iter()
            .zip(&self.coeffs)
            .all(|(m, c)| c.is_zero() || vars.iter().all(|&v| m.0[v] == 0))
    }

    /// Re-embeds into `nvars` variables, sending variable `i` to `map[i]`.
    pub fn embed(&self, nvars: usize, map: &[usize]) -> Self {
        assert_eq!(map.len(), self.nvars());
        let mut out = Self::zero(nvars, self.order());
        let mut e = vec![0u32; nvars];
        for (m, c) in self.layout.monos.iter().zip(&self.coeffs) {
            if c.is_zero() {
                continue;
            }
            e.iter_mut().for_each(|v| *v = 0);
            for (i, &a) in m.0.iter().enumerate() {
                e[map[i]] += a;
            }
            let k = out.layout.index_of(&e).expect("degree preserved");
            out.coeffs[k] = c.clone();
        }
        out
    }

    /// Drops variables by keeping only monomials supported on `keep`, which
    /// become the variables of the result in the listed order.
    pub fn project_vars(&self, keep: &[usize]) -> Self {
        let mut out = Self::zero(keep.len(), self.order());
        for (m, c) in self.layout.monos.iter().zip(&self.coeffs) {
            if c.is_zero() {
                continue;
            }
            let others = m.0.iter().enumerate().any(|(v, &a)| a > 0 && !keep.contains(&v));
            if others {
                continue;
            }
            let e: Vec<u32> = keep.iter().map(|&v| m.0[v]).collect();
            let k = out.layout.index_of(&e).expect("degree preserved");
            out.coeffs[k] = c.clone();
        }
        out
    }

    /// Evaluates the truncated polynomial at a point.
    pub fn eval(&self, point: &[S]) -> S {
        assert_eq!(point.len(), self.nvars());
        let t = self.order() as usize;
        let powers: Vec<Vec<S>> = point
            .iter()
            .map(|p| {
                let mut v = Vec::with_capacity(t + 1);
                v.push(S::one());
                for k in 1..=t {
                    let next = v[k - 1].clone() * p;
                    v.push(next);
                }
                v
            })
            .collect();
        let mut acc = S::zero();
        for (m, c) in self.layout.monos.iter().zip(&self.coeffs) {
            if c.is_zero() {
                continue;
            }
            let mut term = c.clone();
            for (v, &a) in m.0.iter().enumerate() {
                if a > 0 {
                    term = term * &powers[v][a as usize];
                }
            }
            acc = acc + &term;
        }
        acc
    }

    /// `f ∘ g` where every `g_i` vanishes at the origin. The result is valid
    /// through the smallest order among `f` and the `g_i`.
    pub fn compose(&self, g: &[Self]) -> Result<Self> {
        if g.iter().any(|gi| !gi.coeffs[0].is_zero()) {
            return Err(Error::ConstantTerm);
        }
        let t = g.iter().map(|gi| gi.order()).min().unwrap_or(self.order()).min(self.order());
        self.horner(g, t)
    }

    /// `f ∘ g` with `f` read as an exact polynomial, so `g` may have constant
    /// terms. The result is valid through the smallest order among the `g_i`.
    pub fn compose_polynomial(&self, g: &[Self]) -> Result<Self> {
        let t = g.iter().map(|gi| gi.order()).min().unwrap_or(self.order());
        self.horner(g, t)
    }

    fn horner(&self, g: &[Self], t: u32) -> Result<Self> {
        if g.len() != self.nvars() {
            return Err(Error::VarMismatch(self.nvars(), g.len()));
        }
        let m = match g.first() {
            Some(g0) => g0.nvars(),
            None => {
                return Err(Error::InvalidArgument("composition with zero variables".into()));
            }
        };
        for gi in g {
            if gi.nvars() != m {
                return Err(Error::VarMismatch(m, gi.nvars()));
            }
        }
        let g: Vec<Self> = g.iter().map(|gi| gi.truncate(t)).collect();
        let terms: Vec<(&[u32], &S)> = self
            .layout
            .monos
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| (m.0.as_slice(), c))
            .collect();
        Ok(horner_rec(&terms, 0, &g, m, t))
    }

    /// Compositional inverse of a map fixing the origin, by the fixed-point
    /// iteration `h ← L⁻¹(x − N∘h)` with `L` the linear part.
    pub fn invert_map(g: &[Self]) -> Result<Vec<Self>> {
        let n = g.len();
        if n == 0 || g.iter().any(|gi| gi.nvars() != n) {
            return Err(Error::DimensionMismatch("map must be square".into()));
        }
        if g.iter().any(|gi| !gi.coeffs[0].is_zero()) {
            return Err(Error::ConstantTerm);
        }
        let t = g.iter().map(|gi| gi.order()).min().unwrap();
        let jac = Mat::from_fn(n, n, |i, j| g[i].coeff(&unit(n, j)));
        let linv = jac
            .inverse(FLOAT_RANK_TOL)
            .map_err(|_| Error::Singular("Jacobian at the origin".into()))?;
        let nonlin: Vec<Self> = g
            .iter()
            .map(|gi| {
                let mut r = gi.truncate(t);
                for j in 0..n {
                    r.set_coeff(&unit(n, j), S::zero());
                }
                r
            })
            .collect();
        let xs: Vec<Self> = (0..n).map(|i| Self::var(i, n, t)).collect();
        let apply = |v: &[Self]| -> Vec<Self> {
            (0..n)
                .map(|i| {
                    let mut acc = Self::zero(n, t);
                    for j in 0..n {
                        if !linv[(i, j)].is_zero() {
                            acc = &acc + &v[j].scale(&linv[(i, j)]);
                        }
                    }
                    acc
                })
                .collect()
        };
        let mut h = apply(&xs);
        for _ in 1..t {
            let nh: Vec<Self> = nonlin
                .iter()
                .map(|ni| ni.compose(&h))
                .collect::<Result<_>>()?;
            let rhs: Vec<Self> = xs.iter().zip(&nh).map(|(x, v)| x - v).collect();
            h = apply(&rhs);
        }
        Ok(h)
    }
}

fn unit(n: usize, j: usize) -> Vec<u32> {
    let mut e = vec![0; n];
    e[j] = 1;
    e
}

fn horner_rec<S: Scalar>(
    terms: &[(&[u32], &S)],
    pos: usize,
    g: &[TruncatedSeries<S>],
    m: usize,
    t: u32,
) -> TruncatedSeries<S> {
    if terms.is_empty() {
        return TruncatedSeries::zero(m, t);
    }
    if pos == g.len() {
        let c = terms.iter().fold(S::zero(), |acc, (_, c)| acc + *c);
        return TruncatedSeries::constant(c, m, t);
    }
    let top = terms.iter().map(|(e, _)| e[pos]).max().unwrap();
    let mut buckets: Vec<Vec<(&[u32], &S)>> = vec![Vec::new(); top as usize + 1];
    for &(e, c) in terms {
        buckets[e[pos] as usize].push((e, c));
    }
    let mut acc = horner_rec(&buckets[top as usize], pos + 1, g, m, t);
    for k in (0..top as usize).rev() {
        acc = &acc * &g[pos];
        if !buckets[k].is_empty() {
            acc = &acc + &horner_rec(&buckets[k], pos + 1, g, m, t);
        }
    }
    acc
}

impl TruncatedSeries<GaussRat> {
    pub fn to_complex(&self) -> TruncatedSeries<num_complex::Complex64> {
        self.map(|c| c.to_complex())
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl<'a, S: Scalar> std::ops::$tr<&'a TruncatedSeries<S>> for &'a TruncatedSeries<S> {
            type Output = TruncatedSeries<S>;
            fn $m(self, rhs: &'a TruncatedSeries<S>) -> TruncatedSeries<S> {
                self.$f(rhs).expect("series variable counts agree")
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl<S: Scalar> std::ops::Neg for &TruncatedSeries<S> {
    type Output = TruncatedSeries<S>;
    fn neg(self) -> TruncatedSeries<S> {
        TruncatedSeries::neg(self)
    }
}

impl<S: Scalar> fmt::Debug for TruncatedSeries<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + O({})", self, self.order() + 1)
    }
}

impl<S: Scalar> fmt::Display for TruncatedSeries<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (m, c) in self.terms() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c:?})")?;
            for (v, &a) in m.0.iter().enumerate() {
                match a {
                    0 => {}
                    1 => write!(f, "*x{}", v + 1)?,
                    _ => write!(f, "*x{}^{}", v + 1, a)?,
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}
