//! Monic linear transverse equations in one variable and the Schwarzian
//! calculus of second-order equations.
//!
//! An equation of order k and rank r is ∂^k f + Σ_{i<k} a_i ∂^i f = 0 with
//! r×r coefficient matrices a_i. Jet vectors are stacked by derivative
//! order: block i holds ∂^i f.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Scalar;
use crate::series::TruncatedSeries;
use crate::series_matrix::SeriesMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct TransverseEquation<S: Scalar> {
    rank: usize,
    coeffs: Vec<SeriesMatrix<S>>,
}

impl<S: Scalar> TransverseEquation<S> {
    /// Lower coefficients a_0..a_{k−1} of a monic equation.
    pub fn new(coeffs: Vec<SeriesMatrix<S>>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::InvalidArgument("order must be at least 1".into()))?;
        let (r, t) = (first.rows(), first.order());
        if r == 0 {
            return Err(Error::Degenerate("rank-0 equation".into()));
        }
        for c in &coeffs {
            if c.rows() != r || c.cols() != r || c.nvars() != 1 || c.order() != t {
                return Err(Error::DimensionMismatch(
                    "coefficients must be r×r univariate series of one order".into(),
                ));
            }
        }
        Ok(TransverseEquation { rank: r, coeffs })
    }

    /// Equation with an explicit leading coefficient, which must be the identity.
    pub fn with_leading(leading: &SeriesMatrix<S>, coeffs: Vec<SeriesMatrix<S>>) -> Result<Self> {
        let eq = Self::new(coeffs)?;
        let id = SeriesMatrix::identity(eq.rank, 1, leading.order());
        if leading.rows() != eq.rank || *leading != id {
            return Err(Error::NotMonic("leading coefficient is not the identity".into()));
        }
        Ok(eq)
    }

    /// Scalar equation f^(k) + Σ a_i f^(i) = 0.
    pub fn scalar(coeffs: &[TruncatedSeries<S>]) -> Result<Self> {
        Self::new(coeffs.iter().map(|c| SeriesMatrix::from_fn(1, 1, |_, _| c.clone())).collect())
    }

    /// f″ + a f′ + b f = 0.
    pub fn second_order(a: &TruncatedSeries<S>, b: &TruncatedSeries<S>) -> Result<Self> {
        Self::scalar(&[b.clone(), a.clone()])
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn series_order(&self) -> u32 {
        self.coeffs[0].order()
    }

    pub fn coeffs(&self) -> &[SeriesMatrix<S>] {
        &self.coeffs
    }

    /// Solution-space dimension r·k.
    pub fn solution_dim(&self) -> usize {
        self.rank * self.order()
    }

    /// E applied to a candidate solution.
    pub fn apply(&self, f: &[TruncatedSeries<S>]) -> Result<Vec<TruncatedSeries<S>>> {
        if f.len() != self.rank {
            return Err(Error::DimensionMismatch("solution has wrong rank".into()));
        }
        let k = self.order();
        let mut derivs = vec![f.to_vec()];
        for i in 0..k {
            let next = derivs[i].iter().map(|c| c.diff(0)).collect::<Result<Vec<_>>>()?;
            derivs.push(next);
        }
        let mut out = derivs[k].clone();
        for (i, a) in self.coeffs.iter().enumerate() {
            let t = a.order().min(derivs[i][0].order());
            let term = a.truncate(t).mul_vec(&derivs[i].iter().map(|c| c.truncate(t)).collect::<Vec<_>>())?;
            out = out.iter().zip(&term).map(|(o, s)| o.try_add(s)).collect::<Result<_>>()?;
        }
        Ok(out)
    }
}

fn falling(n: usize, i: usize) -> i64 {
    ((n - i + 1)..=n).map(|v| v as i64).product()
}

/// Series solution with ∂^i f_j(0) = `jets[i·r + j]`, valid through the
/// coefficient order T. Coefficients are fixed one degree at a time from
/// n!/(n−k)! c_n = −[Σ a_i f^(i)]_{n−k}.
pub fn solve_ode<S: Scalar>(eq: &TransverseEquation<S>, jets: &[S]) -> Result<Vec<TruncatedSeries<S>>> {
    let (k, r, t) = (eq.order(), eq.rank(), eq.series_order() as usize);
    if jets.len() != r * k {
        return Err(Error::DimensionMismatch(format!("{} initial values for r·k = {}", jets.len(), r * k)));
    }
    let mut c = vec![vec![S::zero(); t + 1]; r];
    for i in 0..k.min(t + 1) {
        let fact = S::from_i64(falling(i, i));
        for j in 0..r {
            c[j][i] = jets[i * r + j].div(&fact).expect("nonzero factorial");
        }
    }
    // Coefficient tables of the a_i entries.
    let a: Vec<Vec<Vec<S>>> = eq
        .coeffs
        .iter()
        .map(|m| m.entries().iter().map(|e| (0..=t).map(|p| e.coeff(&[p as u32])).collect()).collect())
        .collect();
    for n in k..=t {
        let m = n - k;
        let scale = S::from_i64(falling(n, k)).inv().expect("nonzero");
        for row in 0..r {
            let mut acc = S::zero();
            for (i, ai) in a.iter().enumerate() {
                for p in 0..=m {
                    let s = m - p;
                    let w = S::from_i64(falling(s + i, i));
                    for col in 0..r {
                        let e = &ai[row * r + col][p];
                        if !e.is_zero() && !c[col][s + i].is_zero() {
                            acc = acc + &(e.clone() * &c[col][s + i] * &w);
                        }
                    }
                }
            }
            c[row][n] = -acc * &scale;
        }
    }
    Ok(c.into_iter().map(|cs| TruncatedSeries::univariate(&cs, t as u32)).collect())
}

/// Solutions whose initial-jet matrix is the identity.
pub fn fundamental_basis<S: Scalar>(eq: &TransverseEquation<S>) -> Result<Vec<Vec<TruncatedSeries<S>>>> {
    let m = eq.solution_dim();
    (0..m)
        .map(|l| {
            let jets: Vec<S> = (0..m).map(|i| if i == l { S::one() } else { S::zero() }).collect();
            solve_ode(eq, &jets)
        })
        .collect()
}

/// Initial-jet matrix: column l holds ∂^i f_j(0) of the l-th solution.
pub fn initial_jet_matrix<S: Scalar>(eq: &TransverseEquation<S>, sols: &[Vec<TruncatedSeries<S>>]) -> Result<Mat<S>> {
    let (k, r) = (eq.order(), eq.rank());
    let mut cols = Vec::with_capacity(sols.len());
    for f in sols {
        let mut col = Vec::with_capacity(r * k);
        let mut cur = f.clone();
        for _ in 0..k {
            col.extend(cur.iter().map(|c| c.constant_term()));
            cur = cur.iter().map(|c| c.diff(0)).collect::<Result<_>>()?;
        }
        cols.push(col);
    }
    Ok(Mat::from_fn(r * k, sols.len(), |i, j| cols[j][i].clone()))
}

/// Connection on the (k−1)-jet bundle whose flat sections are the jet
/// vectors of solutions, written as v′ + N·v = 0. N is the block companion
/// matrix with −Id on the superdiagonal and a_0..a_{k−1} in the last block row;
/// for k = 2, r = 1 this is [[0, −1], [b, a]] with trace a.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionConnection<S: Scalar> {
    pub matrix: SeriesMatrix<S>,
}

impl<S: Scalar> ExtensionConnection<S> {
    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn trace(&self) -> TruncatedSeries<S> {
        self.matrix.trace()
    }

    /// v′ + N v for the jet vector v of `f`.
    pub fn kernel_residual(&self, f: &[TruncatedSeries<S>], k: usize) -> Result<Vec<TruncatedSeries<S>>> {
        let v = jet_vector(f, k)?;
        let t = self.matrix.order().min(v[0].order().saturating_sub(1));
        let dv: Vec<_> = v.iter().map(|c| c.diff(0).map(|d| d.truncate(t))).collect::<Result<_>>()?;
        let vt: Vec<_> = v.iter().map(|c| c.truncate(t)).collect();
        let nv = self.matrix.truncate(t).mul_vec(&vt)?;
        dv.iter().zip(&nv).map(|(a, b)| a.try_add(b)).collect()
    }
}

/// Stacked (f, f′, …, f^(k−1)).
pub fn jet_vector<S: Scalar>(f: &[TruncatedSeries<S>], k: usize) -> Result<Vec<TruncatedSeries<S>>> {
    let mut out = Vec::new();
    let mut cur = f.to_vec();
    let t = f.iter().map(|c| c.order()).min().unwrap_or(0);
    for _ in 0..k {
        out.extend(cur.iter().cloned());
        cur = cur.iter().map(|c| c.diff(0)).collect::<Result<_>>()?;
    }
    let tv = t.saturating_sub(k.saturating_sub(1) as u32);
    Ok(out.into_iter().map(|c| c.truncate(tv)).collect())
}

pub fn induced_extension<S: Scalar>(eq: &TransverseEquation<S>) -> ExtensionConnection<S> {
    let (k, r, t) = (eq.order(), eq.rank(), eq.series_order());
    let m = r * k;
    let mut n = SeriesMatrix::zeros(m, m, 1, t);
    for i in 0..k - 1 {
        for j in 0..r {
            n[(i * r + j, (i + 1) * r + j)] = TruncatedSeries::constant(-S::one(), 1, t);
        }
    }
    for (i, a) in eq.coeffs.iter().enumerate() {
        for row in 0..r {
            for col in 0..r {
                n[((k - 1) * r + row, i * r + col)] = a[(row, col)].clone();
            }
        }
    }
    ExtensionConnection { matrix: n }
}

fn require_univariate<S: Scalar>(f: &TruncatedSeries<S>) -> Result<()> {
    if f.nvars() != 1 {
        return Err(Error::VarMismatch(1, f.nvars()));
    }
    Ok(())
}

/// Θ(f) = (f′·f‴/6 − (f″/2)²)/(f′)², valid through order T − 3.
pub fn schwarzian<S: Scalar>(f: &TruncatedSeries<S>) -> Result<TruncatedSeries<S>> {
    require_univariate(f)?;
    if f.order() < 3 {
        return Err(Error::InvalidArgument("Schwarzian needs order at least 3".into()));
    }
    let d1 = f.diff(0)?;
    if d1.constant_term().is_zero() {
        return Err(Error::CriticalGerm);
    }
    let d2 = d1.diff(0)?;
    let d3 = d2.diff(0)?;
    let t = d3.order();
    let d1 = d1.truncate(t);
    let d2 = d2.truncate(t);
    let num = &(&d1 * &d3).scale(&S::from_ratio(1, 6)) - &(&d2 * &d2).scale(&S::from_ratio(1, 4));
    num.try_div(&(&d1 * &d1))
}

/// Θ(f₁ : f₂), the Schwarzian of the projective ratio of two functions
/// with independent 1-jets. Uses f₁/f₂, or f₂/f₁ when f₂(0) = 0.
pub fn schwarzian_ratio<S: Scalar>(f1: &TruncatedSeries<S>, f2: &TruncatedSeries<S>) -> Result<TruncatedSeries<S>> {
    require_univariate(f1)?;
    require_univariate(f2)?;
    let j = |f: &TruncatedSeries<S>| -> Result<(S, S)> { Ok((f.constant_term(), f.diff(0)?.constant_term())) };
    let ((a, b), (c, d)) = (j(f1)?, j(f2)?);
    let det = a.clone() * &d - b * &c;
    let tol = if S::EXACT { 0.0 } else { 1e-12 };
    if det.magnitude() <= tol {
        return Err(Error::DependentJets);
    }
    let ratio = if c.magnitude() > tol { f1.try_div(f2)? } else { f2.try_div(f1)? };
    schwarzian(&ratio)
}

/// Second-order data in projective form: the affine coefficient a and the
/// Schwarzian coefficient c of the charts.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveDatum<S: Scalar> {
    pub a: TruncatedSeries<S>,
    pub c: TruncatedSeries<S>,
}

/// c = b/3 − (a² + 2a′)/12, valid through min(T_b, T_a − 1).
pub fn ode_to_projective<S: Scalar>(a: &TruncatedSeries<S>, b: &TruncatedSeries<S>) -> Result<ProjectiveDatum<S>> {
    require_univariate(a)?;
    require_univariate(b)?;
    let da = a.diff(0)?;
    let t = da.order().min(b.order());
    let (at, bt) = (a.truncate(t), b.truncate(t));
    let inner = &(&at * &at) + &da.truncate(t).scale(&S::from_i64(2));
    let c = &bt.scale(&S::from_ratio(1, 3)) - &inner.scale(&S::from_ratio(1, 12));
    Ok(ProjectiveDatum { a: a.clone(), c })
}

/// b = 3c + (a² + 2a′)/4, the inverse of [`ode_to_projective`].
pub fn projective_to_ode<S: Scalar>(a: &TruncatedSeries<S>, c: &TruncatedSeries<S>) -> Result<TruncatedSeries<S>> {
    require_univariate(a)?;
    require_univariate(c)?;
    let da = a.diff(0)?;
    let t = da.order().min(c.order());
    let at = a.truncate(t);
    let inner = &(&at * &at) + &da.truncate(t).scale(&S::from_i64(2));
    Ok(&c.truncate(t).scale(&S::from_i64(3)) + &inner.scale(&S::from_ratio(1, 4)))
}

/// Θ(f₁∘f₂) − Θ(f₁)∘f₂·(f₂′)² − Θ(f₂), valid through order T − 3.
pub fn cocycle_defect<S: Scalar>(f1: &TruncatedSeries<S>, f2: &TruncatedSeries<S>) -> Result<TruncatedSeries<S>> {
    require_univariate(f1)?;
    require_univariate(f2)?;
    if !f2.constant_term().is_zero() {
        return Err(Error::ConstantTerm);
    }
    let comp = f1.compose(std::slice::from_ref(f2))?;
    let lhs = schwarzian(&comp)?;
    let t1 = schwarzian(f1)?;
    let t2 = schwarzian(f2)?;
    let d2 = f2.diff(0)?;
    let t = lhs.order().min(t1.order()).min(t2.order());
    let f2t = f2.truncate(t);
    let pulled = t1.truncate(t).compose(std::slice::from_ref(&f2t))?;
    let d2t = d2.truncate(t);
    let rhs = &(&pulled * &(&d2t * &d2t)) + &t2.truncate(t);
    Ok(&lhs.truncate(t) - &rhs)
}

/// Germ of (αx + β)/(γx + δ) at 0, δ ≠ 0.
pub fn mobius_germ<S: Scalar>(alpha: S, beta: S, gamma: S, delta: S, order: u32) -> Result<TruncatedSeries<S>> {
    if delta.is_zero() {
        return Err(Error::PoleLocus("Möbius germ has a pole at 0".into()));
    }
    if (alpha.clone() * &delta - beta.clone() * &gamma).is_zero() {
        return Err(Error::Singular("degenerate Möbius transformation".into()));
    }
    let x = TruncatedSeries::var(0, 1, order);
    let num = &x.scale(&alpha) + &TruncatedSeries::constant(beta, 1, order);
    let den = &x.scale(&gamma) + &TruncatedSeries::constant(delta, 1, order);
    num.try_div(&den)
}
