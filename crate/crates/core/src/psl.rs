//! The prolonged PSL(n+1) action on the second prolongation of projective
//! space, in the affine chart y_i = x_i/x_0 with fiber coordinates
//! z_j = f_j and w_{j₁j₂} = ∂f_{j₂}/∂y_{j₁} for 1-jets of vector fields.
//!
//! Exact routines are generic over [`Scalar`]. The Maurer–Cartan machinery
//! works in `Complex64` and takes tangent maps with [`Dual`] numbers.

use std::cell::RefCell;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jets::prolong_map_1;
use crate::linalg::{Mat, FLOAT_RANK_TOL};
use crate::scalar::{Dual, Scalar};
use crate::series::TruncatedSeries;

type C = Complex64;

fn tol<S: Scalar>() -> f64 {
    if S::EXACT {
        0.0
    } else {
        1e-12
    }
}

fn c0() -> C {
    C::new(0.0, 0.0)
}

/// Group element as an (n+1)×(n+1) matrix, scaled so that m₀₀ = 1 when
/// m₀₀ ≠ 0.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement<S: Scalar> {
    m: Mat<S>,
}

impl<S: Scalar> GroupElement<S> {
    pub fn new(m: Mat<S>) -> Result<Self> {
        if !m.is_square() || m.rows() < 2 {
            return Err(Error::DimensionMismatch("group element must be (n+1)×(n+1), n ≥ 1".into()));
        }
        if m.det().magnitude() <= tol::<S>() {
            return Err(Error::Singular("group element".into()));
        }
        let m00 = m[(0, 0)].clone();
        let m = match m00.inv() {
            Some(inv) if m00.magnitude() > tol::<S>() => m.scale(&inv),
            _ => m,
        };
        Ok(GroupElement { m })
    }

    pub fn identity(n: usize) -> Self {
        GroupElement { m: Mat::identity(n + 1) }
    }

    /// Isotropy element of the origin: [[1, Bᵀ], [0, A]].
    pub fn from_isotropy(a: &Mat<S>, b: &[S]) -> Result<Self> {
        let n = a.rows();
        if b.len() != n || !a.is_square() {
            return Err(Error::DimensionMismatch("isotropy blocks".into()));
        }
        let m = Mat::from_fn(n + 1, n + 1, |i, j| match (i, j) {
            (0, 0) => S::one(),
            (0, j) => b[j - 1].clone(),
            (_, 0) => S::zero(),
            (i, j) => a[(i - 1, j - 1)].clone(),
        });
        Self::new(m)
    }

    /// The translation y ↦ y + c.
    pub fn translation(c: &[S]) -> Self {
        let n = c.len();
        let m = Mat::from_fn(n + 1, n + 1, |i, j| {
            if i == j {
                S::one()
            } else if j == 0 {
                c[i - 1].clone()
            } else {
                S::zero()
            }
        });
        GroupElement { m }
    }

    pub fn n(&self) -> usize {
        self.m.rows() - 1
    }

    pub fn matrix(&self) -> &Mat<S> {
        &self.m
    }

    /// `self · other`, acting as L_self ∘ L_other.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        Self::new(self.m.mul(&other.m))
    }

    pub fn inverse(&self) -> Result<Self> {
        Self::new(self.m.inverse(FLOAT_RANK_TOL)?)
    }

    /// (A, B) when the element fixes the origin.
    pub fn isotropy_parts(&self) -> Option<(Mat<S>, Vec<S>)> {
        let n = self.n();
        let scale = self.m.max_abs().max(1.0);
        if (1..=n).any(|i| self.m[(i, 0)].magnitude() > tol::<S>() * scale) {
            return None;
        }
        let a = Mat::from_fn(n, n, |i, j| self.m[(i + 1, j + 1)].clone());
        let b = (1..=n).map(|j| self.m[(0, j)].clone()).collect();
        Some((a, b))
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> GroupElement<T> {
        GroupElement { m: self.m.map(f) }
    }
}

/// Point (y, Z, W) of the second prolongation over the affine chart.
#[derive(Clone, Debug, PartialEq)]
pub struct ProlongPoint<S: Scalar> {
    pub y: Vec<S>,
    pub z: Vec<S>,
    pub w: Mat<S>,
}

impl<S: Scalar> ProlongPoint<S> {
    pub fn new(y: Vec<S>, z: Vec<S>, w: Mat<S>) -> Result<Self> {
        let n = y.len();
        if n == 0 || z.len() != n || w.rows() != n || w.cols() != n {
            return Err(Error::DimensionMismatch("prolongation point blocks".into()));
        }
        Ok(ProlongPoint { y, z, w })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Total dimension 2n + n².
    pub fn dim(&self) -> usize {
        let n = self.n();
        2 * n + n * n
    }

    /// Z = 0, where isotropy is never trivial.
    pub fn is_degenerate(&self) -> bool {
        self.z.iter().all(|c| c.magnitude() <= tol::<S>())
    }

    /// (y, Z, W row-major).
    pub fn flatten(&self) -> Vec<S> {
        let mut v = self.y.clone();
        v.extend(self.z.iter().cloned());
        v.extend(self.w.data().iter().cloned());
        v
    }

    pub fn from_flat(n: usize, v: &[S]) -> Result<Self> {
        if v.len() != 2 * n + n * n {
            return Err(Error::DimensionMismatch("flattened point length".into()));
        }
        let w = Mat::from_fn(n, n, |i, j| v[2 * n + i * n + j].clone());
        Self::new(v[..n].to_vec(), v[n..2 * n].to_vec(), w)
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> ProlongPoint<T> {
        ProlongPoint {
            y: self.y.iter().map(&f).collect(),
            z: self.z.iter().map(&f).collect(),
            w: self.w.map(&f),
        }
    }
}

fn denominator<S: Scalar>(g: &GroupElement<S>, y: &[S]) -> Result<S> {
    let m = &g.m;
    let mut d = m[(0, 0)].clone();
    for (j, yj) in y.iter().enumerate() {
        d = d + &(m[(0, j + 1)].clone() * yj);
    }
    if d.magnitude() <= tol::<S>() {
        return Err(Error::ChartEscape);
    }
    Ok(d)
}

/// L_g(y)_i = (m_{i0} + Σ m_{ij} y_j)/(m₀₀ + Σ m₀ⱼ y_j).
pub fn affine_action<S: Scalar>(g: &GroupElement<S>, y: &[S]) -> Result<Vec<S>> {
    if y.len() != g.n() {
        return Err(Error::DimensionMismatch("point and group dimensions differ".into()));
    }
    let dinv = denominator(g, y)?.inv().ok_or(Error::ChartEscape)?;
    Ok((1..=g.n())
        .map(|i| {
            let mut num = g.m[(i, 0)].clone();
            for (j, yj) in y.iter().enumerate() {
                num = num + &(g.m[(i, j + 1)].clone() * yj);
            }
            num * &dinv
        })
        .collect())
}

/// Value, Jacobian ∂_j L_i = (m_{ij} − L_i m_{0j})/D and Hessians
/// ∂_j∂_k L_i = −(m_{0k} ∂_j L_i + m_{0j} ∂_k L_i)/D of the affine action.
pub fn affine_derivatives<S: Scalar>(g: &GroupElement<S>, y: &[S]) -> Result<(Vec<S>, Mat<S>, Vec<Mat<S>>)> {
    let n = g.n();
    let l = affine_action(g, y)?;
    let dinv = denominator(g, y)?.inv().ok_or(Error::ChartEscape)?;
    let m = &g.m;
    let jac = Mat::from_fn(n, n, |i, j| (m[(i + 1, j + 1)].clone() - l[i].clone() * &m[(0, j + 1)]) * &dinv);
    let hess = (0..n)
        .map(|i| {
            Mat::from_fn(n, n, |j, k| {
                -((m[(0, k + 1)].clone() * &jac[(i, j)] + m[(0, j + 1)].clone() * &jac[(i, k)]) * &dinv)
            })
        })
        .collect();
    Ok((l, jac, hess))
}

/// Prolongation of a local diffeomorphism with Jacobian J and Hessians
/// H_j = (∂²φ_j/∂y_k∂y_i) at a point: Z′ = JZ and
/// W′_{j₁j₂} = Σ K_{i₁j₁} W_{i₁i₂} J_{j₂i₂} + Σ K_{kj₁} (H_{j₂})_{ki} Z_i, K = J⁻¹.
pub fn prolong_fiber<S: Scalar>(jac: &Mat<S>, hess: &[Mat<S>], z: &[S], w: &Mat<S>) -> Result<(Vec<S>, Mat<S>)> {
    let n = jac.rows();
    let k = jac.inverse(FLOAT_RANK_TOL)?;
    let zp = jac.mul_vec(z);
    let mut wp = k.transpose().mul(w).mul(&jac.transpose());
    for j1 in 0..n {
        for j2 in 0..n {
            let hz = hess[j2].mul_vec(z);
            let mut acc = wp[(j1, j2)].clone();
            for kk in 0..n {
                acc = acc + &(k[(kk, j1)].clone() * &hz[kk]);
            }
            wp[(j1, j2)] = acc;
        }
    }
    Ok((zp, wp))
}

/// Action of the isotropy element (A, B) of the origin on the fiber:
/// (AZ, (Aᵀ)⁻¹ W Aᵀ − (BᵀZ) Id − (Aᵀ)⁻¹ B (AZ)ᵀ).
pub fn fiber_action<S: Scalar>(a: &Mat<S>, b: &[S], z: &[S], w: &Mat<S>) -> Result<(Vec<S>, Mat<S>)> {
    let n = a.rows();
    if b.len() != n || z.len() != n || w.rows() != n {
        return Err(Error::DimensionMismatch("fiber action blocks".into()));
    }
    let at = a.transpose();
    let ati = at.inverse(FLOAT_RANK_TOL).map_err(|_| Error::Singular("A block".into()))?;
    let az = a.mul_vec(z);
    let btz = dot(b, z);
    let atib = ati.mul_vec(b);
    let conj = ati.mul(w).mul(&at);
    let wp = Mat::from_fn(n, n, |i, j| {
        let mut v = conj[(i, j)].clone() - atib[i].clone() * &az[j];
        if i == j {
            v = v - &btz;
        }
        v
    });
    Ok((az, wp))
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (x, y)| acc + &(x.clone() * y))
}

/// g·(y, Z, W). The element is conjugated by translations to h fixing the
/// origin, h = T_{L_g(y)}⁻¹ g T_y, and h acts on the fiber by
/// [`fiber_action`]; translations act trivially on fibers.
pub fn prolonged_action<S: Scalar>(g: &GroupElement<S>, pt: &ProlongPoint<S>) -> Result<ProlongPoint<S>> {
    let n = pt.n();
    if g.n() != n {
        return Err(Error::DimensionMismatch("group and point dimensions differ".into()));
    }
    let ly = affine_action(g, &pt.y)?;
    let back: Vec<S> = ly.iter().map(|c| -c.clone()).collect();
    let h = GroupElement::translation(&back).m.mul(&g.m).mul(&GroupElement::translation(&pt.y).m);
    let h = GroupElement::new(h)?;
    let (a, b) = h
        .isotropy_parts()
        .ok_or_else(|| Error::InvalidArgument("conjugated element does not fix the origin".into()))?;
    let (z, w) = fiber_action(&a, &b, &pt.z, &pt.w)?;
    ProlongPoint::new(ly, z, w)
}

/// Same action computed from the series of u ↦ L_g(y+u) − L_g(y) and its
/// jet prolongation.
pub fn prolonged_action_jet<S: Scalar>(g: &GroupElement<S>, pt: &ProlongPoint<S>) -> Result<ProlongPoint<S>> {
    let n = pt.n();
    let ly = affine_action(g, &pt.y)?;
    let t = 3;
    let lin = |row: usize| {
        let mut s = TruncatedSeries::constant(g.m[(row, 0)].clone(), n, t);
        for j in 0..n {
            let c = g.m[(row, j + 1)].clone();
            s = &s + &TruncatedSeries::var(j, n, t).scale(&c);
            s = s.add_constant(&(c * &pt.y[j]));
        }
        s
    };
    let den = lin(0);
    let phi = (0..n)
        .map(|i| Ok(lin(i + 1).try_div(&den)?.add_constant(&-ly[i].clone())))
        .collect::<Result<Vec<_>>>()?;
    let data = prolong_map_1(&phi)?;
    let zero = vec![S::zero(); n];
    let (_, z, w) = data.apply(&zero, &pt.z, &pt.w);
    ProlongPoint::new(ly, z, w)
}

/// Matrix of the simplified isotropy system X·Z = 0, B·Zᵀ = W·Xᵀ − Xᵀ·W in
/// the unknowns (X row-major, B).
pub fn isotropy_system<S: Scalar>(z: &[S], w: &Mat<S>) -> Mat<S> {
    let n = z.len();
    let unknowns = n * n + n;
    let mut cols = Vec::with_capacity(unknowns);
    for u in 0..unknowns {
        let x = Mat::from_fn(n, n, |i, j| if i * n + j == u { S::one() } else { S::zero() });
        let b: Vec<S> = (0..n).map(|i| if n * n + i == u { S::one() } else { S::zero() }).collect();
        let xz = x.mul_vec(z);
        let xt = x.transpose();
        let comm = w.mul(&xt).sub(&xt.mul(w));
        let mut col = xz;
        for i in 0..n {
            for j in 0..n {
                col.push(b[i].clone() * &z[j] - &comm[(i, j)]);
            }
        }
        cols.push(col);
    }
    Mat::from_fn(n + n * n, unknowns, |r, c| cols[c][r].clone())
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsotropyNullspace<S: Scalar> {
    pub dimension: usize,
    /// Basis of solutions (X, B).
    pub basis: Vec<(Mat<S>, Vec<S>)>,
}

/// Nullspace of the simplified isotropy system at a point over the origin.
pub fn isotropy_nullspace<S: Scalar>(pt: &ProlongPoint<S>) -> Result<IsotropyNullspace<S>> {
    if pt.y.iter().any(|c| c.magnitude() > tol::<S>()) {
        return Err(Error::InvalidArgument("isotropy system is posed over the origin".into()));
    }
    let n = pt.n();
    let sys = isotropy_system(&pt.z, &pt.w);
    let t = if S::EXACT { 0.0 } else { FLOAT_RANK_TOL };
    let basis: Vec<_> = sys
        .nullspace(t)
        .into_iter()
        .map(|v| (Mat::from_fn(n, n, |i, j| v[i * n + j].clone()), v[n * n..].to_vec()))
        .collect();
    Ok(IsotropyNullspace { dimension: basis.len(), basis })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceIdentity<S: Scalar> {
    /// tr of (left side − W) in the unsimplified second equation.
    pub residual: S,
    /// −(n+1)·BᵀZ.
    pub expected: S,
    /// tr((Aᵀ)⁻¹WAᵀ) − tr(W).
    pub conjugation_defect: S,
}

pub fn trace_identity_residual<S: Scalar>(a: &Mat<S>, b: &[S], z: &[S], w: &Mat<S>) -> Result<TraceIdentity<S>> {
    let n = a.rows();
    let (_, wp) = fiber_action(a, b, z, w)?;
    let ati = a.transpose().inverse(FLOAT_RANK_TOL)?;
    let conj = ati.mul(w).mul(&a.transpose());
    Ok(TraceIdentity {
        residual: wp.sub(w).trace(),
        expected: dot(b, z) * &S::from_i64(-(n as i64 + 1)),
        conjugation_defect: conj.trace() - &w.trace(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Claim3Fiber<S: Scalar> {
    pub a: Mat<S>,
    pub b: Vec<S>,
    pub z: Vec<S>,
    /// w_{i1} = b_i/(1 − λ_i), all other entries zero.
    pub particular: Mat<S>,
    /// Dimension of the solution space in W, from an exact rank computation.
    pub dimension: usize,
    /// Kernel of W ↦ WAᵀ − AᵀW.
    pub kernel: Vec<Mat<S>>,
    /// The particular solution satisfies B·Zᵀ = W·Aᵀ − Aᵀ·W.
    pub consistent: bool,
}

/// W-solutions of the simplified system at A = diag(1, λ₂, …, λ_n),
/// Z = e₁ and B with b₁ = 0.
pub fn claim3_fiber<S: Scalar>(lambdas: &[S], b: &[S]) -> Result<Claim3Fiber<S>> {
    let n = lambdas.len() + 1;
    if b.len() != n {
        return Err(Error::DimensionMismatch("B must have n entries".into()));
    }
    if b[0].magnitude() > tol::<S>() {
        return Err(Error::InvalidArgument("b₁ must vanish".into()));
    }
    let mut diag = vec![S::one()];
    diag.extend(lambdas.iter().cloned());
    for i in 0..n {
        for j in 0..i {
            if (diag[i].clone() - &diag[j]).magnitude() <= tol::<S>() {
                return Err(Error::Eigenvalues("eigenvalues must be distinct and differ from 1".into()));
            }
        }
    }
    let a = Mat::from_fn(n, n, |i, j| if i == j { diag[i].clone() } else { S::zero() });
    let z: Vec<S> = (0..n).map(|i| if i == 0 { S::one() } else { S::zero() }).collect();
    let particular = Mat::from_fn(n, n, |i, j| {
        if j == 0 && i > 0 {
            b[i].div(&(S::one() - &diag[i])).expect("λ ≠ 1")
        } else {
            S::zero()
        }
    });
    let at = a.transpose();
    let ad = |w: &Mat<S>| w.mul(&at).sub(&at.mul(w));
    let lhs = Mat::from_fn(n, n, |i, j| b[i].clone() * &z[j]);
    let consistent = ad(&particular).sub(&lhs).max_abs() <= tol::<S>();
    let op = Mat::from_fn(n * n, n * n, |r, c| {
        let e = Mat::from_fn(n, n, |i, j| if i * n + j == c { S::one() } else { S::zero() });
        ad(&e).data()[r].clone()
    });
    let t = if S::EXACT { 0.0 } else { FLOAT_RANK_TOL };
    let kernel: Vec<Mat<S>> =
        op.nullspace(t).into_iter().map(|v| Mat::from_fn(n, n, |i, j| v[i * n + j].clone())).collect();
    Ok(Claim3Fiber { a, b: b.to_vec(), z, particular, dimension: kernel.len(), kernel, consistent })
}

/// Defining equations of the incidence variety: (AZ − Z, BZᵀ − WAᵀ + AᵀW).
pub fn incidence_equations<S: Scalar>(a: &Mat<S>, b: &[S], z: &[S], w: &Mat<S>) -> Vec<S> {
    let n = z.len();
    let at = a.transpose();
    let mut out: Vec<S> = a.mul_vec(z).into_iter().zip(z).map(|(x, y)| x - y).collect();
    let rhs = w.mul(&at).sub(&at.mul(w));
    for i in 0..n {
        for j in 0..n {
            out.push(b[i].clone() * &z[j] - &rhs[(i, j)]);
        }
    }
    out
}

/// Nullity of the Jacobian of the incidence equations in all 2n² + 2n
/// unknowns (A, B, Z, W), with A ranging over GL(n).
pub fn incidence_tangent_dim<S: Scalar>(a: &Mat<S>, b: &[S], z: &[S], w: &Mat<S>) -> Result<usize> {
    let n = z.len();
    if n < 2 {
        return Err(Error::InvalidArgument("incidence count is stated for n ≥ 2".into()));
    }
    let on = incidence_equations(a, b, z, w).iter().all(|e| e.magnitude() <= tol::<S>());
    let id = Mat::identity(n);
    if !on || z.iter().all(|c| c.magnitude() <= tol::<S>()) || a.sub(&id).max_abs() <= tol::<S>() {
        return Err(Error::NotOnIncidence);
    }
    let at = a.transpose();
    let nvar = 2 * n * n + 2 * n;
    let mut cols = Vec::with_capacity(nvar);
    for u in 0..nvar {
        let unit = |off: usize, len: usize| -> Vec<S> {
            (0..len).map(|i| if u >= off && u - off == i { S::one() } else { S::zero() }).collect()
        };
        let da = unit(0, n * n);
        let da = Mat::from_fn(n, n, |i, j| da[i * n + j].clone());
        let db = unit(n * n, n);
        let dz = unit(n * n + n, n);
        let dw = unit(n * n + 2 * n, n * n);
        let dw = Mat::from_fn(n, n, |i, j| dw[i * n + j].clone());
        let dat = da.transpose();
        // Directional derivative of the bilinear equations.
        let mut col: Vec<S> = da
            .mul_vec(z)
            .into_iter()
            .zip(a.mul_vec(&dz))
            .zip(&dz)
            .map(|((p, q), r)| p + &q - r)
            .collect();
        let d2 = dw.mul(&at).add(&w.mul(&dat)).sub(&dat.mul(w)).sub(&at.mul(&dw));
        for i in 0..n {
            for j in 0..n {
                col.push(db[i].clone() * &z[j] + &(b[i].clone() * &dz[j]) - &d2[(i, j)]);
            }
        }
        cols.push(col);
    }
    let jac = Mat::from_fn(n + n * n, nvar, |r, c| cols[c][r].clone());
    let t = if S::EXACT { 0.0 } else { FLOAT_RANK_TOL };
    Ok(nvar - jac.rank(t))
}

/// Traceless representative of an element of psl(n+1).
pub type LieAlgValue = Mat<C>;

/// Basis of sl(n+1): E_ij for i ≠ j, then E_ii − E_nn.
pub fn sl_basis(n: usize) -> Vec<Mat<C>> {
    let s = n + 1;
    let one = C::new(1.0, 0.0);
    let mut out = Vec::new();
    for i in 0..s {
        for j in 0..s {
            if i != j {
                out.push(Mat::from_fn(s, s, |a, b| if a == i && b == j { one } else { c0() }));
            }
        }
    }
    for i in 0..n {
        out.push(Mat::from_fn(s, s, |a, b| {
            if a == b && a == i {
                one
            } else if a == b && a == n {
                -one
            } else {
                c0()
            }
        }));
    }
    out
}

fn combine(basis: &[Mat<C>], coeffs: &[C]) -> Mat<C> {
    let s = basis[0].rows();
    basis.iter().zip(coeffs).fold(Mat::zeros(s, s), |acc, (e, c)| acc.add(&e.scale(c)))
}

fn norm(v: &[C]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring of a Taylor sum; terms are
/// added until they fall below 1e−16 relative to the partial sum.
pub fn expm(x: &Mat<C>) -> Mat<C> {
    let s = x.rows();
    let nrm = x.max_abs() * s as f64;
    let mut squarings = 0;
    let mut scale = 1.0;
    while nrm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let xs = x.scale(&C::new(scale, 0.0));
    let mut sum = Mat::identity(s);
    let mut term = Mat::identity(s);
    for k in 1..40 {
        term = term.mul(&xs).scale(&C::new(1.0 / k as f64, 0.0));
        sum = sum.add(&term);
        if term.max_abs() < 1e-17 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.mul(&sum);
    }
    sum
}

/// Ad(g)ξ = MξM⁻¹.
pub fn ad(g: &GroupElement<C>, xi: &Mat<C>) -> Result<Mat<C>> {
    Ok(g.m.mul(xi).mul(&g.m.inverse(FLOAT_RANK_TOL)?))
}

fn dual_vec(v: &[C]) -> Vec<Dual> {
    v.iter().map(|c| Dual::constant(*c)).collect()
}

/// Velocity of t ↦ (g·exp(tξ))·q at t = 0.
pub fn infinitesimal_action(g: &GroupElement<C>, q: &ProlongPoint<C>, xi: &Mat<C>) -> Result<Vec<C>> {
    let s = g.m.rows();
    let m = Mat::from_fn(s, s, |i, j| Dual::new(g.m[(i, j)], c0()));
    let e = Mat::from_fn(s, s, |i, j| {
        Dual::new(if i == j { C::new(1.0, 0.0) } else { c0() }, xi[(i, j)])
    });
    let gd = GroupElement::new(m.mul(&e))?;
    let out = prolonged_action(&gd, &q.map(|c| Dual::constant(*c)))?;
    Ok(out.flatten().iter().map(|d| d.eps).collect())
}

/// Jacobian of ξ ↦ d/dt (g·exp(tξ))·q in the [`sl_basis`] coordinates.
pub fn orbit_jacobian(g: &GroupElement<C>, q: &ProlongPoint<C>) -> Result<Mat<C>> {
    let basis = sl_basis(q.n());
    let cols = basis.iter().map(|e| infinitesimal_action(g, q, e)).collect::<Result<Vec<_>>>()?;
    Ok(Mat::from_fn(q.dim(), basis.len(), |r, c| cols[c][r]))
}

/// Differential of x ↦ g·x applied to v.
pub fn action_differential(g: &GroupElement<C>, x: &ProlongPoint<C>, v: &[C]) -> Result<Vec<C>> {
    let flat = x.flatten();
    let pt: Vec<Dual> = flat.iter().zip(v).map(|(a, b)| Dual::new(*a, *b)).collect();
    let pt = ProlongPoint::from_flat(x.n(), &pt)?;
    let out = prolonged_action(&g.map(|c| Dual::constant(*c)), &pt)?;
    Ok(out.flatten().iter().map(|d| d.eps).collect())
}

/// Velocity of the base point y under exp(tξ).
pub fn base_velocity(xi: &Mat<C>, y: &[C]) -> Result<Vec<C>> {
    let s = xi.rows();
    let e = Mat::from_fn(s, s, |i, j| Dual::new(if i == j { C::new(1.0, 0.0) } else { c0() }, xi[(i, j)]));
    let g = GroupElement::new(e)?;
    Ok(affine_action(&g, &dual_vec(y))?.iter().map(|d| d.eps).collect())
}

const NEWTON_TOL: f64 = 1e-13;
const ROUND_TRIP_TOL: f64 = 1e-10;

fn orbit_residual(g: &GroupElement<C>, q: &ProlongPoint<C>, x: &[C]) -> Result<Vec<C>> {
    let p = prolonged_action(g, q)?.flatten();
    Ok(p.iter().zip(x).map(|(a, b)| a - b).collect())
}

fn newton_start(q: &ProlongPoint<C>, x: &ProlongPoint<C>) -> GroupElement<C> {
    let n = q.n();
    let zz: f64 = q.z.iter().map(|c| c.norm_sqr()).sum();
    let a = Mat::from_fn(n, n, |i, j| {
        let id = if i == j { C::new(1.0, 0.0) } else { c0() };
        id + (x.z[i] - q.z[i]) * q.z[j].conj() / zz
    });
    let h = GroupElement::from_isotropy(&a, &vec![c0(); n]).unwrap_or_else(|_| GroupElement::identity(n));
    let back: Vec<C> = q.y.iter().map(|c| -c).collect();
    let m = GroupElement::translation(&x.y).m.mul(&h.m).mul(&GroupElement::translation(&back).m);
    GroupElement::new(m).unwrap_or_else(|_| GroupElement::identity(n))
}

/// g with g·q = x, by damped Newton on g ← g·exp(ξ). Any failure to
/// converge is reported as the pole locus of the orbit map.
pub fn orbit_invert(q: &ProlongPoint<C>, x: &ProlongPoint<C>, start: Option<&GroupElement<C>>) -> Result<GroupElement<C>> {
    if q.n() != x.n() {
        return Err(Error::DimensionMismatch("points over different dimensions".into()));
    }
    let target = x.flatten();
    let scale = 1.0 + norm(&target);
    let basis = sl_basis(q.n());
    let mut g = start.cloned().unwrap_or_else(|| newton_start(q, x));
    let mut r = match orbit_residual(&g, q, &target) {
        Ok(r) => r,
        Err(_) => {
            g = newton_start(q, x);
            orbit_residual(&g, q, &target).map_err(|_| Error::PoleLocus("start leaves the chart".into()))?
        }
    };
    for _ in 0..100 {
        let rn = norm(&r);
        if rn < NEWTON_TOL * scale {
            break;
        }
        let jac = orbit_jacobian(&g, q)?;
        let rhs: Vec<C> = r.iter().map(|c| -c).collect();
        let step = jac.solve(&rhs, FLOAT_RANK_TOL).map_err(|_| Error::PoleLocus("orbit map is singular".into()))?;
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let xi = combine(&basis, &step).scale(&C::new(alpha, 0.0));
            if let Ok(cand) = GroupElement::new(g.m.mul(&expm(&xi))) {
                if let Ok(rc) = orbit_residual(&cand, q, &target) {
                    if norm(&rc) < rn {
                        g = cand;
                        r = rc;
                        accepted = true;
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let err = norm(&r);
    if !(err < ROUND_TRIP_TOL * scale) {
        return Err(Error::PoleLocus(format!("orbit inversion stalled at residual {err:e}")));
    }
    Ok(g)
}

/// Pullback Ω_q of the left Maurer–Cartan form along the inverse orbit map.
/// The last inversion is kept as a warm start for nearby points.
#[derive(Debug)]
pub struct FormSampler {
    q: ProlongPoint<C>,
    basis: Vec<Mat<C>>,
    warm: RefCell<Option<(Vec<C>, GroupElement<C>)>>,
}

impl FormSampler {
    pub fn new(q: ProlongPoint<C>) -> Self {
        let basis = sl_basis(q.n());
        FormSampler { q, basis, warm: RefCell::new(None) }
    }

    pub fn basepoint(&self) -> &ProlongPoint<C> {
        &self.q
    }

    pub fn invert(&self, x: &ProlongPoint<C>) -> Result<GroupElement<C>> {
        let flat = x.flatten();
        let start = self.warm.borrow().as_ref().and_then(|(p, g)| {
            let d: Vec<C> = p.iter().zip(&flat).map(|(a, b)| a - b).collect();
            (norm(&d) < 0.1).then(|| g.clone())
        });
        let g = match orbit_invert(&self.q, x, start.as_ref()) {
            Ok(g) => g,
            Err(_) if start.is_some() => orbit_invert(&self.q, x, None)?,
            Err(e) => return Err(e),
        };
        *self.warm.borrow_mut() = Some((flat, g.clone()));
        Ok(g)
    }

    /// Ω_q(x)(v).
    pub fn value(&self, x: &ProlongPoint<C>, v: &[C]) -> Result<LieAlgValue> {
        let g = self.invert(x)?;
        self.value_at(&g, v)
    }

    /// Ω_q at g·q, given g.
    pub fn value_at(&self, g: &GroupElement<C>, v: &[C]) -> Result<LieAlgValue> {
        let jac = orbit_jacobian(g, &self.q)?;
        let c = jac.solve(v, FLOAT_RANK_TOL).map_err(|_| Error::PoleLocus("orbit map is singular".into()))?;
        Ok(combine(&self.basis, &c))
    }

    /// Ω_q(x) on every coordinate direction.
    pub fn frame_values(&self, x: &ProlongPoint<C>) -> Result<Vec<LieAlgValue>> {
        let g = self.invert(x)?;
        let jac = orbit_jacobian(&g, &self.q)?;
        let inv = jac.inverse(FLOAT_RANK_TOL).map_err(|_| Error::PoleLocus("orbit map is singular".into()))?;
        Ok((0..x.dim()).map(|a| combine(&self.basis, &inv.col(a))).collect())
    }
}

pub fn maurer_cartan(q: &ProlongPoint<C>, x: &ProlongPoint<C>, v: &[C]) -> Result<LieAlgValue> {
    FormSampler::new(q.clone()).value(x, v)
}

fn bracket(a: &Mat<C>, b: &Mat<C>) -> Mat<C> {
    a.mul(b).sub(&b.mul(a))
}

/// Max over coordinate pairs of ‖∂_aΩ_b − ∂_bΩ_a + [Ω_a, Ω_b]‖ with central
/// differences of step h, where Ω_a = Ω(e_a).
pub fn flatness_residual(
    dim: usize,
    field: &dyn Fn(&[C]) -> Result<Vec<LieAlgValue>>,
    at: &[C],
    h: f64,
) -> Result<f64> {
    let center = field(at)?;
    let mut diffs = Vec::with_capacity(dim);
    for b in 0..dim {
        let mut p = at.to_vec();
        let mut m = at.to_vec();
        p[b] += C::new(h, 0.0);
        m[b] -= C::new(h, 0.0);
        let (fp, fm) = (field(&p)?, field(&m)?);
        let inv2h = C::new(0.5 / h, 0.0);
        diffs.push(fp.iter().zip(&fm).map(|(u, v)| u.sub(v).scale(&inv2h)).collect::<Vec<_>>());
    }
    let mut worst: f64 = 0.0;
    for a in 0..dim {
        for b in (a + 1)..dim {
            // diffs[a][b] = ∂_a Ω_b
            let r = diffs[a][b].sub(&diffs[b][a]).add(&bracket(&center[a], &center[b]));
            worst = worst.max(r.max_abs());
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FormDiagnostics {
    pub flatness: f64,
    pub invariance: f64,
    pub verticality: f64,
    pub step: f64,
    pub samples: usize,
}

/// Flatness, G-invariance under `g` and verticality of Ω_q at the given
/// points.
pub fn form_diagnostics(
    q: &ProlongPoint<C>,
    points: &[ProlongPoint<C>],
    g: &GroupElement<C>,
    h: f64,
) -> Result<FormDiagnostics> {
    let sampler = FormSampler::new(q.clone());
    let n = q.n();
    let dim = q.dim();
    let mut out = FormDiagnostics { flatness: 0.0, invariance: 0.0, verticality: 0.0, step: h, samples: points.len() };
    for x in points {
        let field = |p: &[C]| sampler.frame_values(&ProlongPoint::from_flat(n, p)?);
        out.flatness = out.flatness.max(flatness_residual(dim, &field, &x.flatten(), h)?);
        let omega = sampler.frame_values(x)?;
        let gx = prolonged_action(g, x)?;
        let gi = sampler.invert(&gx)?;
        for (a, om) in omega.iter().enumerate() {
            let e: Vec<C> = (0..dim).map(|i| if i == a { C::new(1.0, 0.0) } else { c0() }).collect();
            let moved = action_differential(g, x, &e)?;
            let pulled = sampler.value_at(&gi, &moved)?;
            out.invariance = out.invariance.max(pulled.sub(om).max_abs());
            if a >= n {
                out.verticality = out.verticality.max(norm(&base_velocity(om, &q.y)?));
            }
        }
    }
    Ok(out)
}

/// Local submersion chart of a foliated patch with q transverse variables
/// x followed by d leaf variables y, and its transition to the first chart:
/// φ = L_g ∘ φ₀.
#[derive(Clone, Debug)]
pub struct AtlasChart {
    pub phi: Vec<TruncatedSeries<C>>,
    pub transition: GroupElement<C>,
}

/// Section of the prolonged space over the patch: (Z(p), W(p)) with W
/// row-major.
#[derive(Clone, Debug)]
pub struct ProlongSection {
    pub z: Vec<TruncatedSeries<C>>,
    pub w: Vec<TruncatedSeries<C>>,
}

fn eval_dual(s: &TruncatedSeries<C>, p: &[Dual]) -> Dual {
    s.map(|c| Dual::constant(*c)).eval(p)
}

/// Prolonged chart φ^(2) at (p, Z, W): the transverse jet at p is read along
/// the transversal through p, so φ^(2) is the prolongation of x ↦ φ(x, y).
pub fn prolonged_chart<S: Scalar>(
    q: usize,
    phi: &[TruncatedSeries<S>],
    p: &[S],
    z: &[S],
    w: &Mat<S>,
) -> Result<ProlongPoint<S>> {
    let base: Vec<S> = phi.iter().map(|f| f.eval(p)).collect();
    let mut jac = Mat::zeros(q, q);
    let mut hess = vec![Mat::zeros(q, q); q];
    for j in 0..q {
        for i in 0..q {
            let d = phi[j].diff(i)?;
            jac[(j, i)] = d.eval(p);
            for k in 0..q {
                hess[j][(k, i)] = d.diff(k)?.eval(p);
            }
        }
    }
    let (zp, wp) = prolong_fiber(&jac, &hess, z, w)?;
    ProlongPoint::new(base, zp, wp)
}

fn prolonged_chart_dual(q: usize, phi: &[TruncatedSeries<C>], pt: &[Dual]) -> Result<ProlongPoint<Dual>> {
    let nv = phi[0].nvars();
    let phid: Vec<TruncatedSeries<Dual>> = phi.iter().map(|s| s.map(|c| Dual::constant(*c))).collect();
    let p = &pt[..nv];
    let z = &pt[nv..nv + q];
    let w = Mat::from_fn(q, q, |i, j| pt[nv + q + i * q + j]);
    prolonged_chart(q, &phid, p, z, &w)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StructureReport {
    pub samples: usize,
    /// Max difference between pulled-back forms of different charts.
    pub overlap_residual: f64,
    /// Max |φ_i − L_{g_i}∘φ₀| at the samples.
    pub compatibility_residual: f64,
    /// Flatness of σ*Ω by central differences.
    pub section_flatness: Option<f64>,
    /// Max g/h-component of σ*Ω on leaf directions (the kernel of dφ₀).
    pub tangent_kernel: Option<f64>,
    /// Min |det| of the g/h-component on transverse directions.
    pub transverse_injectivity: Option<f64>,
    pub step: f64,
}

const COMPAT_TOL: f64 = 1e-8;

/// Samples (φ_i^(2))*Ω_q on each chart at points (p, Z, W) of the prolonged
/// patch, and σ*Ω for a section σ when given.
pub fn prolong_structure_pullback(
    q_dim: usize,
    charts: &[AtlasChart],
    q: &ProlongPoint<C>,
    samples: &[(Vec<C>, Vec<C>, Mat<C>)],
    section: Option<&ProlongSection>,
    h: f64,
) -> Result<StructureReport> {
    let first = charts.first().ok_or_else(|| Error::InvalidArgument("empty atlas".into()))?;
    if q.n() != q_dim || first.phi.len() != q_dim {
        return Err(Error::DimensionMismatch("chart target must match the basepoint".into()));
    }
    let nv = first.phi[0].nvars();
    let sampler = FormSampler::new(q.clone());
    let total = nv + q_dim + q_dim * q_dim;
    let mut report = StructureReport {
        samples: samples.len(),
        overlap_residual: 0.0,
        compatibility_residual: 0.0,
        section_flatness: None,
        tangent_kernel: None,
        transverse_injectivity: None,
        step: h,
    };
    // Pullback of Ω_q along a chart's prolongation, on every coordinate direction.
    let pullback = |chart: &AtlasChart, pt: &[C]| -> Result<Vec<LieAlgValue>> {
        let x0 = prolonged_chart_dual(q_dim, &chart.phi, &dual_vec(pt))?.map(|d| d.value);
        let g = sampler.invert(&x0)?;
        (0..total)
            .map(|a| {
                let ptd: Vec<Dual> =
                    pt.iter().enumerate().map(|(i, c)| Dual::new(*c, if i == a { C::new(1.0, 0.0) } else { c0() })).collect();
                let img = prolonged_chart_dual(q_dim, &chart.phi, &ptd)?;
                let v: Vec<C> = img.flatten().iter().map(|d| d.eps).collect();
                sampler.value_at(&g, &v)
            })
            .collect()
    };
    for (p, z, w) in samples {
        let base0: Vec<C> = first.phi.iter().map(|f| f.eval(p)).collect();
        let mut pt = p.clone();
        pt.extend(z.iter().cloned());
        pt.extend(w.data().iter().cloned());
        let reference = pullback(first, &pt)?;
        for chart in &charts[1..] {
            let expect = affine_action(&chart.transition, &base0)?;
            let got: Vec<C> = chart.phi.iter().map(|f| f.eval(p)).collect();
            let d: Vec<C> = expect.iter().zip(&got).map(|(a, b)| a - b).collect();
            report.compatibility_residual = report.compatibility_residual.max(norm(&d));
            if norm(&d) > COMPAT_TOL {
                return Err(Error::IncompatibleCharts(norm(&d)));
            }
            let other = pullback(chart, &pt)?;
            for (a, b) in reference.iter().zip(&other) {
                report.overlap_residual = report.overlap_residual.max(a.sub(b).max_abs());
            }
        }
    }
    if let Some(sigma) = section {
        let lift = |p: &[Dual]| -> Vec<Dual> {
            let mut out = p.to_vec();
            out.extend(sigma.z.iter().map(|s| eval_dual(s, p)));
            out.extend(sigma.w.iter().map(|s| eval_dual(s, p)));
            out
        };
        let field = |p: &[C]| -> Result<Vec<LieAlgValue>> {
            let x0 = prolonged_chart_dual(q_dim, &first.phi, &lift(&dual_vec(p)))?.map(|d| d.value);
            let g = sampler.invert(&x0)?;
            (0..nv)
                .map(|a| {
                    let pd: Vec<Dual> =
                        p.iter().enumerate().map(|(i, c)| Dual::new(*c, if i == a { C::new(1.0, 0.0) } else { c0() })).collect();
                    let img = prolonged_chart_dual(q_dim, &first.phi, &lift(&pd))?;
                    let v: Vec<C> = img.flatten().iter().map(|d| d.eps).collect();
                    sampler.value_at(&g, &v)
                })
                .collect()
        };
        let (mut flat, mut kern, mut inj) = (0.0f64, 0.0f64, f64::INFINITY);
        for (p, _, _) in samples {
            flat = flat.max(flatness_residual(nv, &field, p, h)?);
            let vals = field(p)?;
            let vel = vals.iter().map(|v| base_velocity(v, &q.y)).collect::<Result<Vec<_>>>()?;
            // Leaf directions ∂y_a − Σ_b (D_xφ⁻¹ D_yφ)_{ba} ∂x_b span ker dφ.
            let dphi = Mat::from_fn(q_dim, nv, |j, i| first.phi[j].diff(i).map(|d| d.eval(p)).unwrap_or_else(|_| c0()));
            let dx = Mat::from_fn(q_dim, q_dim, |j, i| dphi[(j, i)]);
            let dy = Mat::from_fn(q_dim, nv - q_dim, |j, a| dphi[(j, q_dim + a)]);
            let m = dx.inverse(FLOAT_RANK_TOL).map_err(|_| Error::Singular("x-Jacobian of the chart".into()))?.mul(&dy);
            for a in 0..nv - q_dim {
                let mut v = vel[q_dim + a].clone();
                for b in 0..q_dim {
                    for (vi, xi) in v.iter_mut().zip(&vel[b]) {
                        *vi -= m[(b, a)] * xi;
                    }
                }
                kern = kern.max(norm(&v));
            }
            let m = Mat::from_fn(q_dim, q_dim, |i, j| vel[j][i]);
            inj = inj.min(m.det().norm());
        }
        report.section_flatness = Some(flat);
        report.tangent_kernel = Some(kern);
        report.transverse_injectivity = Some(inj);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q as qq, GaussRat};

    fn mat(rows: Vec<Vec<GaussRat>>) -> Mat<GaussRat> {
        Mat::from_rows(rows)
    }

    #[test]
    fn scalar_fiber_action() {
        let (a, b) = (mat(vec![vec![qq(3, 1)]]), vec![qq(2, 1)]);
        let z = vec![qq(5, 1)];
        let w = mat(vec![vec![qq(7, 1)]]);
        let (zp, wp) = fiber_action(&a, &b, &z, &w).unwrap();
        assert_eq!(zp, vec![qq(15, 1)]);
        assert_eq!(wp[(0, 0)], qq(7 - 20, 1));
    }

    #[test]
    fn fast_path_matches_jet_oracle() {
        let g = GroupElement::new(mat(vec![
            vec![qq(1, 1), qq(1, 2), qq(-1, 3)],
            vec![qq(1, 4), qq(2, 1), qq(1, 1)],
            vec![qq(-1, 2), qq(0, 1), qq(3, 2)],
        ]))
        .unwrap();
        let pt = ProlongPoint::new(
            vec![qq(1, 3), qq(-1, 5)],
            vec![qq(2, 1), qq(1, 7)],
            mat(vec![vec![qq(1, 2), qq(-3, 1)], vec![qq(0, 1), qq(5, 4)]]),
        )
        .unwrap();
        assert_eq!(prolonged_action(&g, &pt).unwrap(), prolonged_action_jet(&g, &pt).unwrap());
    }

    #[test]
    fn isotropy_counts() {
        let pt = |z: i64| ProlongPoint::new(vec![qq(0, 1)], vec![qq(z, 1)], mat(vec![vec![qq(3, 1)]])).unwrap();
        assert_eq!(isotropy_nullspace(&pt(2)).unwrap().dimension, 0);
        assert_eq!(isotropy_nullspace(&pt(0)).unwrap().dimension, 2);
    }

    #[test]
    fn claim3_example() {
        let f = claim3_fiber(&[qq(2, 1)], &[qq(0, 1), qq(3, 1)]).unwrap();
        assert_eq!(f.particular[(1, 0)], qq(-3, 1));
        assert_eq!(f.particular[(0, 1)], qq(0, 1));
        assert_eq!(f.dimension, 2);
        assert!(f.consistent);
        assert!(matches!(claim3_fiber(&[qq(1, 1)], &[qq(0, 1), qq(1, 1)]), Err(Error::Eigenvalues(_))));
    }

    #[test]
    fn expm_of_nilpotent() {
        let x = Mat::from_rows(vec![vec![c0(), C::new(2.0, 0.0)], vec![c0(), c0()]]);
        let e = expm(&x);
        assert!((e[(0, 1)] - C::new(2.0, 0.0)).norm() < 1e-15);
        assert!((e[(0, 0)] - C::new(1.0, 0.0)).norm() < 1e-15);
    }
}
