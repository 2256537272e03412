//! The ring of k-jets on a coordinate chart.
//!
//! An element is stored either in the monomial-jet basis B1 = {d^k(x^𝐢)} or
//! in the ζ-basis B2 = {ζ^𝐢}, with one coefficient function per multi-index
//! of degree ≤ k. Multi-indices run over a chosen subset of the chart
//! variables: all of them for plain jets, the transverse ones for transverse
//! jets.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::multi_index::{indices_up_to, MultiIndex};
use crate::scalar::{GaussRat, Scalar};
use crate::series::TruncatedSeries;
use crate::series_matrix::SeriesMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// Monomial jets d^k(x^𝐢).
    B1,
    /// ζ-monomials ζ^𝐢 with ζ_v = d^k(x_v) − x_v.
    B2,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetRing {
    nvars: usize,
    k: u32,
    vars: Vec<usize>,
    indices: Vec<MultiIndex>,
}

impl JetRing {
    /// Jets in the variables `vars` of a chart with `nvars` variables.
    pub fn new(nvars: usize, k: u32, vars: &[usize]) -> Result<Self> {
        for (a, &v) in vars.iter().enumerate() {
            if v >= nvars {
                return Err(Error::VarOutOfRange { index: v, nvars });
            }
            if vars[..a].contains(&v) {
                return Err(Error::InvalidArgument(format!("variable {v} listed twice")));
            }
        }
        Ok(JetRing { nvars, k, vars: vars.to_vec(), indices: indices_up_to(vars.len(), k) })
    }

    /// Plain jets in all variables.
    pub fn full(nvars: usize, k: u32) -> Self {
        let vars: Vec<usize> = (0..nvars).collect();
        JetRing::new(nvars, k, &vars).expect("full variable set")
    }

    /// Transverse jets in the first `q` variables.
    pub fn transverse(nvars: usize, q: usize, k: u32) -> Result<Self> {
        let vars: Vec<usize> = (0..q).collect();
        JetRing::new(nvars, k, &vars)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn position(&self, i: &MultiIndex) -> Option<usize> {
        self.indices.iter().position(|m| m == i)
    }

    /// The same variables one order lower.
    pub fn lower(&self) -> Result<JetRing> {
        if self.k == 0 {
            return Err(Error::DimensionMismatch("no jets below order 0".into()));
        }
        JetRing::new(self.nvars, self.k - 1, &self.vars)
    }

    /// Chart exponent vector of `x^𝐢` for a ring multi-index.
    fn chart_exponent(&self, i: &MultiIndex) -> Vec<u32> {
        let mut e = vec![0; self.nvars];
        for (a, &v) in self.vars.iter().enumerate() {
            e[v] = i.0[a];
        }
        e
    }

    fn monomial<S: Scalar>(&self, i: &MultiIndex, coeff: S, order: u32) -> TruncatedSeries<S> {
        let e = self.chart_exponent(i);
        TruncatedSeries::from_terms(self.nvars, order, &[(e, coeff)])
    }

    /// Matrix taking B1 coordinates to B2 coordinates (or the reverse when
    /// `to == Basis::B1`). Columns are indexed by the source basis.
    pub fn change_matrix<S: Scalar>(&self, to: Basis, order: u32) -> SeriesMatrix<S> {
        let n = self.dim();
        SeriesMatrix::from_fn(n, n, |r, c| {
            let (row, col) = (&self.indices[r], &self.indices[c]);
            // B1 → B2: d^k(x^𝐢) = Σ_𝐣 (𝐢 choose 𝐣) x^{𝐢−𝐣} ζ^𝐣, so entry (𝐣, 𝐢).
            // B2 → B1: ζ^𝐢 = Σ_𝐣 (−1)^{|𝐢−𝐣|} (𝐢 choose 𝐣) x^{𝐢−𝐣} d^k(x^𝐣).
            match col.sub(row) {
                None => TruncatedSeries::zero(self.nvars, order),
                Some(diff) => {
                    let mut b = col.binomial(row);
                    if to == Basis::B1 && diff.degree() % 2 == 1 {
                        b = -b;
                    }
                    self.monomial(&diff, S::from_exact(&int(b)), order)
                }
            }
        })
    }
}

fn int(b: BigInt) -> GaussRat {
    GaussRat::real(BigRational::from_integer(b))
}

#[derive(Clone, Debug, PartialEq)]
pub struct JetElement<S: Scalar> {
    ring: JetRing,
    basis: Basis,
    coeffs: Vec<TruncatedSeries<S>>,
}

impl<S: Scalar> JetElement<S> {
    pub fn new(ring: JetRing, basis: Basis, coeffs: Vec<TruncatedSeries<S>>) -> Result<Self> {
        if coeffs.len() != ring.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a jet ring of dimension {}",
                coeffs.len(),
                ring.dim()
            )));
        }
        if let Some(c0) = coeffs.first() {
            if coeffs.iter().any(|c| c.nvars() != ring.nvars || c.order() != c0.order()) {
                return Err(Error::DimensionMismatch("jet coefficients disagree".into()));
            }
        }
        Ok(JetElement { ring, basis, coeffs })
    }

    pub fn zero(ring: &JetRing, basis: Basis, order: u32) -> Self {
        let coeffs = vec![TruncatedSeries::zero(ring.nvars, order); ring.dim()];
        JetElement { ring: ring.clone(), basis, coeffs }
    }

    /// The basis element with multi-index `i`.
    pub fn basis_element(ring: &JetRing, basis: Basis, i: &MultiIndex, order: u32) -> Result<Self> {
        let pos = ring
            .position(i)
            .ok_or_else(|| Error::InvalidArgument(format!("multi-index {:?} not in ring", i.0)))?;
        let mut e = Self::zero(ring, basis, order);
        e.coeffs[pos] = TruncatedSeries::one(ring.nvars, order);
        Ok(e)
    }

    /// A function `f` viewed through the left structure: f·ζ⁰.
    pub fn scalar(ring: &JetRing, f: &TruncatedSeries<S>) -> Self {
        let mut e = Self::zero(ring, Basis::B2, f.order());
        e.coeffs[0] = f.clone();
        e
    }

    pub fn ring(&self) -> &JetRing {
        &self.ring
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn coeffs(&self) -> &[TruncatedSeries<S>] {
        &self.coeffs
    }

    pub fn order(&self) -> u32 {
        self.coeffs.first().map_or(0, |c| c.order())
    }

    pub fn coeff(&self, i: &MultiIndex) -> Option<&TruncatedSeries<S>> {
        self.ring.position(i).map(|p| &self.coeffs[p])
    }

    pub fn truncate_order(&self, order: u32) -> Self {
        JetElement {
            ring: self.ring.clone(),
            basis: self.basis,
            coeffs: self.coeffs.iter().map(|c| c.truncate(order)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn check_ring(&self, other: &Self) -> Result<()> {
        if self.ring != other.ring {
            return Err(Error::DimensionMismatch("jet rings differ".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        let b = other.to_basis(self.basis);
        let coeffs = self.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x.try_add(y)).collect::<Result<_>>()?;
        Ok(JetElement { ring: self.ring.clone(), basis: self.basis, coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        let b = other.to_basis(self.basis);
        let coeffs = self.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x.try_sub(y)).collect::<Result<_>>()?;
        Ok(JetElement { ring: self.ring.clone(), basis: self.basis, coeffs })
    }

    /// Left-module action: multiplies every coefficient by `f`.
    pub fn scale(&self, f: &TruncatedSeries<S>) -> Self {
        JetElement {
            ring: self.ring.clone(),
            basis: self.basis,
            coeffs: self.coeffs.iter().map(|c| c * f).collect(),
        }
    }

    /// Same element expressed in `target`.
    pub fn to_basis(&self, target: Basis) -> Self {
        if target == self.basis {
            return self.clone();
        }
        let m = self.ring.change_matrix::<S>(target, self.order());
        let coeffs = m.mul_vec(&self.coeffs).expect("change matrix matches ring");
        JetElement { ring: self.ring.clone(), basis: target, coeffs }
    }

    /// Ring product; ζ-monomials above degree k vanish. The result is in the
    /// basis of `self`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_ring(other)?;
        let a = self.to_basis(Basis::B2);
        let b = other.to_basis(Basis::B2);
        let t = a.order().min(b.order());
        let mut coeffs = vec![TruncatedSeries::zero(self.ring.nvars, t); self.ring.dim()];
        for (p, i) in self.ring.indices.iter().enumerate() {
            if a.coeffs[p].is_zero() {
                continue;
            }
            for (r, j) in self.ring.indices.iter().enumerate() {
                if b.coeffs[r].is_zero() || i.degree() + j.degree() > self.ring.k {
                    continue;
                }
                let s = self.ring.position(&i.add(j)).expect("degree within k");
                coeffs[s] = &coeffs[s] + &(&a.coeffs[p] * &b.coeffs[r]);
            }
        }
        let out = JetElement { ring: self.ring.clone(), basis: Basis::B2, coeffs };
        Ok(out.to_basis(self.basis))
    }
}

/// d^k(f) in the ζ-basis: coefficient of ζ^𝐢 is (1/𝐢!) ∂^𝐢 f. Coefficients
/// are valid through order `T − k`.
pub fn jet_of_function<S: Scalar>(
    f: &TruncatedSeries<S>,
    k: u32,
    vars: &[usize],
) -> Result<JetElement<S>> {
    let ring = JetRing::new(f.nvars(), k, vars)?;
    if k > f.order() {
        return Err(Error::InvalidArgument(format!(
            "jet order {k} exceeds series order {}",
            f.order()
        )));
    }
    let out_order = f.order() - k;
    let mut coeffs = Vec::with_capacity(ring.dim());
    for i in &ring.indices {
        let mut d = f.clone();
        for (a, &v) in ring.vars.iter().enumerate() {
            for _ in 0..i.0[a] {
                d = d.diff(v)?;
            }
        }
        let inv_fact = S::from_exact(&GaussRat::real(BigRational::new(BigInt::from(1), i.factorial())));
        coeffs.push(d.truncate(out_order).scale(&inv_fact));
    }
    JetElement::new(ring, Basis::B2, coeffs)
}

/// Projection J^k → J^{k−1}: drops the ζ-monomials of degree k.
pub fn truncate_jet<S: Scalar>(e: &JetElement<S>) -> Result<JetElement<S>> {
    let lower = e.ring.lower()?;
    let b2 = e.to_basis(Basis::B2);
    let coeffs = lower
        .indices
        .iter()
        .map(|i| b2.coeff(i).expect("lower index present").clone())
        .collect();
    let out = JetElement::new(lower, Basis::B2, coeffs)?;
    Ok(out.to_basis(e.basis))
}

/// One term `c · ω₁⋯ω_k` of a symmetric tensor of 1-forms. Each 1-form lists
/// its coefficients on dx_v for the ring variables, in ring order.
#[derive(Clone, Debug)]
pub struct SymTerm<S: Scalar> {
    pub coeff: TruncatedSeries<S>,
    pub forms: Vec<Vec<TruncatedSeries<S>>>,
}

/// Inclusion Sym^k(Ω¹) → J^k sending ω₁⋯ω_k to ∏ ι(ω_i) with ι(dx_v) = ζ_v.
pub fn inject_symbol<S: Scalar>(ring: &JetRing, terms: &[SymTerm<S>]) -> Result<JetElement<S>> {
    let order = terms.first().map_or(0, |t| t.coeff.order());
    let mut acc = JetElement::zero(ring, Basis::B2, order);
    for t in terms {
        if t.forms.len() != ring.k as usize {
            return Err(Error::DimensionMismatch(format!(
                "symbol of degree {} in J^{}",
                t.forms.len(),
                ring.k
            )));
        }
        let mut prod = JetElement::scalar(ring, &t.coeff);
        for w in &t.forms {
            if w.len() != ring.vars.len() {
                return Err(Error::DimensionMismatch("1-form length".into()));
            }
            let mut lin = JetElement::zero(ring, Basis::B2, order);
            for (a, c) in w.iter().enumerate() {
                let unit = MultiIndex::unit(ring.vars.len(), a);
                let p = ring.position(&unit).expect("k ≥ 1 holds here");
                lin.coeffs[p] = c.truncate(order);
            }
            prod = prod.mul(&lin)?;
        }
        acc = acc.add(&prod)?;
    }
    Ok(acc)
}

/// ∏ (d^k(f_i) − f_i), the image of df₁⋯df_k.
pub fn inject_differentials<S: Scalar>(
    fs: &[TruncatedSeries<S>],
    vars: &[usize],
) -> Result<JetElement<S>> {
    let k = fs.len() as u32;
    let first = fs.first().ok_or_else(|| Error::InvalidArgument("empty product".into()))?;
    let ring = JetRing::new(first.nvars(), k, vars)?;
    let order = fs.iter().map(|f| f.order()).min().unwrap() - k;
    let mut acc = JetElement::scalar(&ring, &TruncatedSeries::one(ring.nvars, order));
    for f in fs {
        let dk = jet_of_function(f, k, vars)?.truncate_order(order);
        let fl = JetElement::scalar(&ring, &f.truncate(order));
        acc = acc.mul(&dk.sub(&fl)?)?;
    }
    Ok(acc)
}

/// Outcome of the rank check of exactness at a sample point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactnessCheck {
    pub image_rank: usize,
    pub kernel_dim: usize,
    pub composite_zero: bool,
}

impl ExactnessCheck {
    pub fn holds(&self) -> bool {
        self.composite_zero && self.image_rank == self.kernel_dim
    }
}

/// Checks `im ι = ker π` at `point` in B1 coordinates: ι of every symbol
/// dx^α (|α| = k) is killed by π, and these images span a space of dimension
/// dim ker π.
pub fn check_exactness(ring: &JetRing, point: &[GaussRat]) -> Result<ExactnessCheck> {
    if ring.k == 0 {
        return Err(Error::InvalidArgument("exactness needs k ≥ 1".into()));
    }
    let order = ring.k;
    let lower = ring.lower()?;
    let nv = ring.vars.len();
    let mut image_cols: Vec<Vec<GaussRat>> = Vec::new();
    let mut composite_zero = true;
    for alpha in ring.indices.iter().filter(|a| a.degree() == ring.k) {
        let mut forms = Vec::new();
        for (a, &m) in alpha.0.iter().enumerate() {
            for _ in 0..m {
                let mut w = vec![TruncatedSeries::zero(ring.nvars, order); nv];
                w[a] = TruncatedSeries::one(ring.nvars, order);
                forms.push(w);
            }
        }
        let term = SymTerm { coeff: TruncatedSeries::one(ring.nvars, order), forms };
        let img = inject_symbol(ring, &[term])?.to_basis(Basis::B1);
        image_cols.push(img.coeffs.iter().map(|c| c.eval(point)).collect());
        let back = truncate_jet(&img)?;
        composite_zero &= back.coeffs.iter().all(|c| c.eval(point).is_zero());
    }
    let img = Mat::from_fn(ring.dim(), image_cols.len(), |i, j| image_cols[j][i].clone());
    let image_rank = img.rank(0.0);
    // Matrix of π in B1 coordinates at the point.
    let mut pi_cols: Vec<Vec<GaussRat>> = Vec::new();
    for i in &ring.indices {
        let e = JetElement::<GaussRat>::basis_element(ring, Basis::B1, i, order)?;
        let p = truncate_jet(&e)?;
        pi_cols.push(p.coeffs.iter().map(|c| c.eval(point)).collect());
    }
    let pi = Mat::from_fn(lower.dim(), ring.dim(), |i, j| pi_cols[j][i].clone());
    let kernel_dim = ring.dim() - pi.rank(0.0);
    Ok(ExactnessCheck { image_rank, kernel_dim, composite_zero })
}

/// First prolongation of a local diffeomorphism φ acting on 1-jets of vector
/// fields, in coordinates (𝐱, 𝐳, 𝐰) with z_j = f_j and w_{j₁j₂} = ∂f_{j₂}/∂x_{j₁}.
///
/// The fiber part is linear: `fiber` acts on the stacked vector
/// (z₁..z_n, w₁₁, w₁₂, …, w_nn) and is block lower-triangular.
#[derive(Clone, Debug, PartialEq)]
pub struct ProlongedMapData<S: Scalar> {
    pub base: Vec<TruncatedSeries<S>>,
    pub fiber: SeriesMatrix<S>,
}

impl<S: Scalar> ProlongedMapData<S> {
    pub fn dim(&self) -> usize {
        self.base.len()
    }

    /// φ^(1): entries ∂φ_j/∂x_i.
    pub fn first_block(&self) -> SeriesMatrix<S> {
        let n = self.dim();
        self.fiber.block(0, 0, n, n)
    }

    /// w-linear part of φ^(2), rows (j₁,j₂), columns (i₁,i₂).
    pub fn w_block(&self) -> SeriesMatrix<S> {
        let n = self.dim();
        self.fiber.block(n, n, n * n, n * n)
    }

    /// z-linear part of φ^(2), rows (j₁,j₂), columns i.
    pub fn z_block(&self) -> SeriesMatrix<S> {
        let n = self.dim();
        self.fiber.block(n, 0, n * n, n)
    }

    /// `self ∘ other`; `other` must fix the origin.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let base = self.base.iter().map(|p| p.compose(&other.base)).collect::<Result<_>>()?;
        let outer = self.fiber.compose(&other.base)?;
        Ok(ProlongedMapData { base, fiber: outer.try_mul(&other.fiber)? })
    }

    /// Image of the point (𝐱, 𝐳, W).
    pub fn apply(&self, x: &[S], z: &[S], w: &Mat<S>) -> (Vec<S>, Vec<S>, Mat<S>) {
        let n = self.dim();
        let y = self.base.iter().map(|p| p.eval(x)).collect();
        let f = self.fiber.eval(x);
        let mut v: Vec<S> = z.to_vec();
        for j1 in 0..n {
            for j2 in 0..n {
                v.push(w[(j1, j2)].clone());
            }
        }
        let out = f.mul_vec(&v);
        let zp = out[..n].to_vec();
        let wp = Mat::from_fn(n, n, |a, b| out[n + a * n + b].clone());
        (y, zp, wp)
    }

    /// Applies the fiber map to the 1-jet of a vector field: returns the
    /// stacked (z′, w′) as series in 𝐱.
    pub fn apply_to_jet(&self, jet: &[TruncatedSeries<S>]) -> Result<Vec<TruncatedSeries<S>>> {
        self.fiber.mul_vec(jet)
    }
}

/// Computes φ^(1) and φ^(2) from φ and its compositional inverse.
pub fn prolong_map_1<S: Scalar>(phi: &[TruncatedSeries<S>]) -> Result<ProlongedMapData<S>> {
    let n = phi.len();
    if n == 0 || phi.iter().any(|p| p.nvars() != n) {
        return Err(Error::DimensionMismatch("prolongation needs a square map".into()));
    }
    let psi = TruncatedSeries::invert_map(phi)?;
    let jac = SeriesMatrix::from_fn(n, n, |j, i| phi[j].diff(i).expect("index in range"));
    let k = SeriesMatrix::from_fn(n, n, |i, j| {
        psi[i].diff(j).and_then(|d| d.compose(phi)).expect("inverse composes")
    });
    let hess: Vec<Vec<Vec<TruncatedSeries<S>>>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|a| (0..n).map(|b| phi[j].diff(a).and_then(|d| d.diff(b)).unwrap()).collect())
                .collect()
        })
        .collect();
    let t = hess[0][0][0].order();
    let nv = n;
    let dim = n + n * n;
    let mut fiber = SeriesMatrix::zeros(dim, dim, nv, t);
    for j in 0..n {
        for i in 0..n {
            fiber[(j, i)] = jac[(j, i)].truncate(t);
        }
    }
    for j1 in 0..n {
        for j2 in 0..n {
            let row = n + j1 * n + j2;
            for i1 in 0..n {
                for i2 in 0..n {
                    fiber[(row, n + i1 * n + i2)] = (&k[(i1, j1)] * &jac[(j2, i2)]).truncate(t);
                }
            }
            for i in 0..n {
                let mut acc = TruncatedSeries::zero(nv, t);
                for kk in 0..n {
                    acc = &acc + &(&k[(kk, j1)] * &hess[j2][kk][i]);
                }
                fiber[(row, i)] = acc;
            }
        }
    }
    Ok(ProlongedMapData { base: phi.iter().map(|p| p.truncate(t + 2)).collect(), fiber })
}

/// Stacked 1-jet (v, ∂_{j₁} v_{j₂}) of a vector field.
pub fn vector_field_jet<S: Scalar>(v: &[TruncatedSeries<S>]) -> Result<Vec<TruncatedSeries<S>>> {
    let n = v.len();
    let t = v.iter().map(|c| c.order()).min().unwrap_or(0).saturating_sub(1);
    let mut out: Vec<TruncatedSeries<S>> = v.iter().map(|c| c.truncate(t)).collect();
    for j1 in 0..n {
        for j2 in 0..n {
            out.push(v[j2].diff(j1)?.truncate(t));
        }
    }
    Ok(out)
}

/// Independent route to the transported jet: pushes `v` forward as
/// (Dφ·v)∘φ⁻¹, takes its 1-jet and pulls the result back along φ.
pub fn pushforward_jet<S: Scalar>(
    phi: &[TruncatedSeries<S>],
    v: &[TruncatedSeries<S>],
) -> Result<Vec<TruncatedSeries<S>>> {
    let n = phi.len();
    let psi = TruncatedSeries::invert_map(phi)?;
    let pushed: Vec<TruncatedSeries<S>> = (0..n)
        .map(|j| {
            let mut acc = TruncatedSeries::zero(n, phi[j].order());
            for (i, vi) in v.iter().enumerate() {
                acc = &acc + &(&phi[j].diff(i)? * vi);
            }
            acc.compose(&psi)
        })
        .collect::<Result<_>>()?;
    vector_field_jet(&pushed)?
        .into_iter()
        .map(|c| c.compose(phi))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    type S = TruncatedSeries<GaussRat>;

    fn uni(c: &[i64], t: u32) -> S {
        S::univariate(&c.iter().map(|&v| q(v, 1)).collect::<Vec<_>>(), t)
    }

    #[test]
    fn jet_of_square() {
        let f = uni(&[0, 0, 1], 6);
        let j = jet_of_function(&f, 2, &[0]).unwrap();
        assert_eq!(j.coeffs()[0], uni(&[0, 0, 1], 4));
        assert_eq!(j.coeffs()[1], uni(&[0, 2], 4));
        assert_eq!(j.coeffs()[2], uni(&[1], 4));
    }

    #[test]
    fn jet_of_x_in_b2() {
        let ring = JetRing::full(1, 1);
        let e = JetElement::<GaussRat>::basis_element(&ring, Basis::B1, &MultiIndex(vec![1]), 3).unwrap();
        let b2 = e.to_basis(Basis::B2);
        assert_eq!(b2.coeffs()[0], uni(&[0, 1], 3));
        assert_eq!(b2.coeffs()[1], uni(&[1], 3));
    }

    #[test]
    fn zeta_squared_in_b1() {
        let ring = JetRing::full(1, 2);
        let z2 = JetElement::<GaussRat>::basis_element(&ring, Basis::B2, &MultiIndex(vec![2]), 4).unwrap();
        let b1 = z2.to_basis(Basis::B1);
        assert_eq!(b1.coeffs()[0], uni(&[0, 0, 1], 4));
        assert_eq!(b1.coeffs()[1], uni(&[0, -2], 4));
        assert_eq!(b1.coeffs()[2], uni(&[1], 4));
    }

    #[test]
    fn truncated_square() {
        let ring = JetRing::full(1, 1);
        let x = JetElement::scalar(&ring, &uni(&[0, 1], 4));
        let z = JetElement::<GaussRat>::basis_element(&ring, Basis::B2, &MultiIndex(vec![1]), 4).unwrap();
        let s = x.add(&z).unwrap();
        let sq = s.mul(&s).unwrap();
        assert_eq!(sq.coeffs()[0], uni(&[0, 0, 1], 4));
        assert_eq!(sq.coeffs()[1], uni(&[0, 2], 4));
        let zk = z.mul(&z).unwrap();
        assert!(zk.is_zero());
    }

    #[test]
    fn symbol_of_dx() {
        let x = uni(&[0, 1], 4);
        let e = inject_differentials(&[x.clone()], &[0]).unwrap();
        assert!(e.coeffs()[0].is_zero());
        assert_eq!(e.coeffs()[1], uni(&[1], 3));
        let e2 = inject_differentials(&[x.clone(), x], &[0]).unwrap();
        assert!(truncate_jet(&e2).unwrap().is_zero());
    }

    #[test]
    fn prolong_of_doubling() {
        let phi = vec![uni(&[0, 2], 5)];
        let p = prolong_map_1(&phi).unwrap();
        assert_eq!(p.first_block()[(0, 0)].constant_term(), q(2, 1));
        assert!(p.first_block()[(0, 0)].valuation() == Some(0));
        assert_eq!(p.w_block()[(0, 0)], uni(&[1], 3));
        assert!(p.z_block().is_zero());
    }
}
