//! Flat partial connections on a foliated chart, as matrix Pfaffian systems.
//!
//! Chart variables are ordered (x₁..x_q, y₁..y_d) with the leaves spanned by
//! the y-directions. A patch of rank r carries one r×r matrix per tangent
//! direction, and a section with coefficient vector f is flat when
//! `v_k f = A_k f` for every k. Usually v_k = ∂/∂y_k; a patch built from a
//! non-coordinate tangent frame keeps that frame and its structure functions.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::multi_index::{indices_up_to, MultiIndex};
use crate::scalar::{GaussRat, Scalar};
use crate::series::TruncatedSeries;
use crate::series_matrix::SeriesMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FoliationChart {
    pub q: usize,
    pub d: usize,
}

impl FoliationChart {
    pub fn new(q: usize, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Degenerate("chart without tangent directions".into()));
        }
        Ok(FoliationChart { q, d })
    }

    pub fn nvars(&self) -> usize {
        self.q + self.d
    }

    pub fn x_vars(&self) -> Vec<usize> {
        (0..self.q).collect()
    }

    pub fn y_vars(&self) -> Vec<usize> {
        (self.q..self.q + self.d).collect()
    }

    pub fn y(&self, k: usize) -> usize {
        self.q + k
    }
}

/// Vector field Σ c_i ∂/∂x_i with series components.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyVectorField<S: Scalar> {
    pub components: Vec<TruncatedSeries<S>>,
}

impl<S: Scalar> PolyVectorField<S> {
    pub fn new(components: Vec<TruncatedSeries<S>>) -> Result<Self> {
        let n = components.len();
        if components.iter().any(|c| c.nvars() != n) {
            return Err(Error::DimensionMismatch(
                "vector field needs one component per variable".into(),
            ));
        }
        Ok(PolyVectorField { components })
    }

    /// The coordinate field ∂/∂x_i.
    pub fn coordinate(i: usize, nvars: usize, order: u32) -> Self {
        let components = (0..nvars)
            .map(|j| {
                if j == i {
                    TruncatedSeries::one(nvars, order)
                } else {
                    TruncatedSeries::zero(nvars, order)
                }
            })
            .collect();
        PolyVectorField { components }
    }

    pub fn nvars(&self) -> usize {
        self.components.len()
    }

    pub fn order(&self) -> u32 {
        self.components.iter().map(|c| c.order()).min().unwrap_or(0)
    }

    /// Derivative of a function along the field; valid through order T − 1.
    pub fn apply(&self, f: &TruncatedSeries<S>) -> Result<TruncatedSeries<S>> {
        if f.nvars() != self.nvars() {
            return Err(Error::VarMismatch(self.nvars(), f.nvars()));
        }
        let t = self.order().min(f.order()).saturating_sub(1);
        let mut acc = TruncatedSeries::zero(f.nvars(), t);
        for (i, c) in self.components.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            acc = &acc + &(c * &f.diff(i)?);
        }
        Ok(acc)
    }

    pub fn apply_matrix(&self, m: &SeriesMatrix<S>) -> Result<SeriesMatrix<S>> {
        let mut out = Vec::with_capacity(m.rows() * m.cols());
        for e in m.entries() {
            out.push(self.apply(e)?);
        }
        Ok(SeriesMatrix::from_fn(m.rows(), m.cols(), |i, j| out[i * m.cols() + j].clone()))
    }

    /// `true` when this is exactly the coordinate field ∂/∂x_i.
    pub fn is_coordinate(&self, i: usize) -> bool {
        self.components.iter().enumerate().all(|(j, c)| {
            if j == i {
                c.constant_term() == S::one() && c.valuation() == Some(0) && {
                    let mut r = c.clone();
                    r.set_coeff(&vec![0; c.nvars()], S::zero());
                    r.is_zero()
                }
            } else {
                c.is_zero()
            }
        })
    }
}

/// [v, w] = v(w) − w(v), valid through order T − 1.
pub fn lie_bracket<S: Scalar>(
    v: &PolyVectorField<S>,
    w: &PolyVectorField<S>,
) -> Result<PolyVectorField<S>> {
    if v.nvars() != w.nvars() {
        return Err(Error::VarMismatch(v.nvars(), w.nvars()));
    }
    let components = v
        .components
        .iter()
        .zip(&w.components)
        .map(|(vi, wi)| Ok(&v.apply(wi)? - &w.apply(vi)?))
        .collect::<Result<_>>()?;
    Ok(PolyVectorField { components })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionPatch<S: Scalar> {
    chart: FoliationChart,
    rank: usize,
    matrices: Vec<SeriesMatrix<S>>,
    /// Tangent frame when it is not the coordinate one.
    directions: Option<Vec<PolyVectorField<S>>>,
    /// `structure[m][i][j]` is the v_m-coefficient of [v_i, v_j].
    structure: Option<Vec<Vec<Vec<TruncatedSeries<S>>>>>,
}

impl<S: Scalar> ConnectionPatch<S> {
    /// Patch along the coordinate directions ∂/∂y_k.
    pub fn new(chart: FoliationChart, matrices: Vec<SeriesMatrix<S>>) -> Result<Self> {
        if chart.d == 0 {
            return Err(Error::Degenerate("chart without tangent directions".into()));
        }
        if matrices.len() != chart.d {
            return Err(Error::DimensionMismatch(format!(
                "{} matrices for {} tangent directions",
                matrices.len(),
                chart.d
            )));
        }
        let rank = matrices[0].rows();
        if rank == 0 {
            return Err(Error::Degenerate("rank-0 patch".into()));
        }
        let (nv, t) = (matrices[0].nvars(), matrices[0].order());
        for m in &matrices {
            if m.rows() != rank || m.cols() != rank {
                return Err(Error::DimensionMismatch("connection matrices must be r×r".into()));
            }
            if m.nvars() != chart.nvars() || m.nvars() != nv || m.order() != t {
                return Err(Error::DimensionMismatch(
                    "connection matrices must share variables and order".into(),
                ));
            }
        }
        Ok(ConnectionPatch { chart, rank, matrices, directions: None, structure: None })
    }

    /// Patch along an explicit tangent frame with its structure functions.
    pub fn with_frame(
        chart: FoliationChart,
        matrices: Vec<SeriesMatrix<S>>,
        directions: Vec<PolyVectorField<S>>,
        structure: Vec<Vec<Vec<TruncatedSeries<S>>>>,
    ) -> Result<Self> {
        let mut p = Self::new(chart, matrices)?;
        if directions.len() != chart.d || structure.len() != chart.d {
            return Err(Error::DimensionMismatch("frame size".into()));
        }
        p.directions = Some(directions);
        p.structure = Some(structure);
        Ok(p)
    }

    pub fn chart(&self) -> FoliationChart {
        self.chart
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> u32 {
        self.matrices[0].order()
    }

    pub fn matrices(&self) -> &[SeriesMatrix<S>] {
        &self.matrices
    }

    pub fn directions(&self) -> Option<&[PolyVectorField<S>]> {
        self.directions.as_deref()
    }

    pub fn is_coordinate(&self) -> bool {
        self.directions.is_none()
    }

    fn derive(&self, k: usize, m: &SeriesMatrix<S>) -> Result<SeriesMatrix<S>> {
        match &self.directions {
            None => m.diff(self.chart.y(k)),
            Some(v) => v[k].apply_matrix(m),
        }
    }

    fn same_frame(&self, other: &Self) -> Result<()> {
        if self.chart != other.chart || self.directions != other.directions {
            return Err(Error::DimensionMismatch("patches live on different charts".into()));
        }
        Ok(())
    }

    fn map_matrices(&self, f: impl Fn(&SeriesMatrix<S>) -> SeriesMatrix<S>) -> Self {
        ConnectionPatch {
            chart: self.chart,
            rank: 0,
            matrices: self.matrices.iter().map(f).collect(),
            directions: self.directions.clone(),
            structure: self.structure.clone(),
        }
        .with_rank()
    }

    fn with_rank(mut self) -> Self {
        self.rank = self.matrices[0].rows();
        self
    }

    pub fn truncate(&self, order: u32) -> Self {
        self.map_matrices(|m| m.truncate(order))
    }
}

/// Index pairs (i, j), i > j, in the order the defects are listed.
pub fn defect_pairs(d: usize) -> Vec<(usize, usize)> {
    (0..d).flat_map(|i| (0..i).map(move |j| (i, j))).collect()
}

/// defect_ij = v_j A_i − v_i A_j − (A_j A_i − A_i A_j) − Σ_m c^m_{ji} A_m
/// for i > j; the last sum vanishes along coordinate directions.
pub fn flatness_defect<S: Scalar>(p: &ConnectionPatch<S>) -> Result<Vec<SeriesMatrix<S>>> {
    let a = &p.matrices;
    let mut out = Vec::new();
    for (i, j) in defect_pairs(p.chart.d) {
        let di = p.derive(j, &a[i])?;
        let dj = p.derive(i, &a[j])?;
        let comm = &(&a[j] * &a[i]) - &(&a[i] * &a[j]);
        let mut defect = &(&di - &dj) - &comm;
        if let Some(c) = &p.structure {
            for (m, am) in a.iter().enumerate() {
                let cm = &c[m][j][i];
                if !cm.is_zero() {
                    defect = &defect - &am.scale_series(cm);
                }
            }
        }
        out.push(defect);
    }
    Ok(out)
}

/// Flatness through the valid order of the defect (T − 1).
pub fn check_flat<S: Scalar>(p: &ConnectionPatch<S>, tol: f64) -> Result<()> {
    for (defect, pair) in flatness_defect(p)?.iter().zip(defect_pairs(p.chart.d)) {
        for e in defect.entries() {
            if let Some(pos) = e.coeffs().iter().position(|c| c.magnitude() > tol) {
                return Err(Error::NotFlat { pair, degree: e.layout().degree_of(pos) });
            }
        }
    }
    Ok(())
}

fn flat_tol<S: Scalar>() -> f64 {
    if S::EXACT {
        0.0
    } else {
        1e-9
    }
}

/// Unique solution of ∂f/∂y_k = A_k f with f(x, 0) = g(x), built degree by
/// degree in y from the Euler identity Σ y_k ∂f/∂y_k = (Σ y_k A_k) f.
pub fn solve_pfaffian<S: Scalar>(
    p: &ConnectionPatch<S>,
    g: &[TruncatedSeries<S>],
) -> Result<Vec<TruncatedSeries<S>>> {
    if !p.is_coordinate() {
        return Err(Error::NonCoordinate("solver needs the coordinate frame".into()));
    }
    if g.len() != p.rank {
        return Err(Error::DimensionMismatch(format!(
            "{} initial functions for rank {}",
            g.len(),
            p.rank
        )));
    }
    let chart = p.chart;
    let yv = chart.y_vars();
    for gi in g {
        if gi.nvars() != chart.nvars() {
            return Err(Error::VarMismatch(chart.nvars(), gi.nvars()));
        }
        if !gi.independent_of(&yv) {
            return Err(Error::LeafDependence);
        }
    }
    check_flat(p, flat_tol::<S>())?;
    let t = g.iter().map(|gi| gi.order()).min().unwrap().min(p.order());
    let g: Vec<TruncatedSeries<S>> = g.iter().map(|gi| gi.truncate(t)).collect();
    euler_solve(p, &[g], t).map(|mut v| v.pop().unwrap())
}

// Each step only needs the y-degree m part of E·f, and E raises y-degree, so
// the running product is updated with the new layer alone.
fn euler_solve<S: Scalar>(
    p: &ConnectionPatch<S>,
    cols: &[Vec<TruncatedSeries<S>>],
    t: u32,
) -> Result<Vec<Vec<TruncatedSeries<S>>>> {
    let chart = p.chart;
    let yv = chart.y_vars();
    let nv = chart.nvars();
    let mut euler = SeriesMatrix::zeros(p.rank, p.rank, nv, t);
    for (k, a) in p.matrices.iter().enumerate() {
        let yk = TruncatedSeries::var(chart.y(k), nv, t);
        euler = &euler + &a.truncate(t).scale_series(&yk);
    }
    let mut out = Vec::with_capacity(cols.len());
    for g in cols {
        let mut f = g.clone();
        let mut acc = euler.mul_vec(&f)?;
        for m in 1..=t {
            let inv = S::from_ratio(1, m as i64);
            let layer: Vec<TruncatedSeries<S>> =
                acc.iter().map(|ri| ri.part_in_vars(&yv, m).scale(&inv)).collect();
            if layer.iter().all(|l| l.is_zero()) {
                continue;
            }
            for (fi, li) in f.iter_mut().zip(&layer) {
                *fi = &*fi + li;
            }
            if m < t {
                let d = euler.mul_vec(&layer)?;
                for (ai, di) in acc.iter_mut().zip(&d) {
                    *ai = &*ai + di;
                }
            }
        }
        out.push(f);
    }
    Ok(out)
}

/// Fundamental matrix with F(x, 0) = Id; its columns are a flat frame.
pub fn flat_frame<S: Scalar>(p: &ConnectionPatch<S>) -> Result<SeriesMatrix<S>> {
    if !p.is_coordinate() {
        return Err(Error::NonCoordinate("solver needs the coordinate frame".into()));
    }
    check_flat(p, flat_tol::<S>())?;
    let (r, nv, t) = (p.rank, p.chart.nvars(), p.order());
    let ids: Vec<Vec<TruncatedSeries<S>>> = (0..r)
        .map(|l| {
            (0..r)
                .map(|i| {
                    if i == l {
                        TruncatedSeries::one(nv, t)
                    } else {
                        TruncatedSeries::zero(nv, t)
                    }
                })
                .collect()
        })
        .collect();
    let cols = euler_solve(p, &ids, t)?;
    Ok(SeriesMatrix::from_fn(r, r, |i, j| cols[j][i].clone()))
}

/// Residuals ∂F/∂y_k − A_k F of a candidate fundamental matrix.
pub fn pfaffian_residual<S: Scalar>(
    p: &ConnectionPatch<S>,
    f: &SeriesMatrix<S>,
) -> Result<Vec<SeriesMatrix<S>>> {
    p.matrices
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let lhs = p.derive(k, f)?;
            Ok(&lhs - &(a * f))
        })
        .collect()
}

/// A_k = (∂G/∂y_k)·G⁻¹, flat by construction. Valid through order T − 1.
pub fn gauge_connection<S: Scalar>(
    chart: FoliationChart,
    g: &SeriesMatrix<S>,
) -> Result<ConnectionPatch<S>> {
    if g.nvars() != chart.nvars() {
        return Err(Error::VarMismatch(chart.nvars(), g.nvars()));
    }
    let ginv = g.inverse()?;
    let matrices = (0..chart.d)
        .map(|k| Ok(&g.diff(chart.y(k))? * &ginv))
        .collect::<Result<_>>()?;
    ConnectionPatch::new(chart, matrices)
}

/// Bott connection in explicit frames. With ∇_{v_a} w_b = π[v_a, w_b] =
/// Σ_c Γ^a_{cb} w_c the patch matrix is A_a = (Γ^a)ᵀ, following the indexing
/// ω_{cb}(v_a) = (A_a)_{bc} of the connection forms.
pub fn bott_patch<S: Scalar>(
    chart: FoliationChart,
    tangent: &[PolyVectorField<S>],
    normal: &[PolyVectorField<S>],
) -> Result<ConnectionPatch<S>> {
    let (q, d, nv) = (chart.q, chart.d, chart.nvars());
    if tangent.len() != d || normal.len() != q {
        return Err(Error::DimensionMismatch("frame sizes must match the chart".into()));
    }
    if q == 0 {
        return Err(Error::Degenerate("rank-0 normal bundle".into()));
    }
    if tangent.iter().chain(normal).any(|v| v.nvars() != nv) {
        return Err(Error::VarMismatch(nv, 0));
    }
    let t = tangent.iter().chain(normal).map(|v| v.order()).min().unwrap();
    let frame = SeriesMatrix::from_fn(nv, nv, |i, j| {
        if j < q {
            normal[j].components[i].truncate(t)
        } else {
            tangent[j - q].components[i].truncate(t)
        }
    });
    if frame.constant_part().rank(crate::linalg::FLOAT_RANK_TOL) < nv {
        return Err(Error::DependentFrames);
    }
    let finv = frame.inverse()?;
    let to = t.saturating_sub(1);
    let tol = flat_tol::<S>();
    let mut structure = vec![vec![vec![TruncatedSeries::zero(nv, to); d]; d]; d];
    for a in 0..d {
        for b in 0..d {
            let br = lie_bracket(&tangent[a], &tangent[b])?;
            let coef = finv.mul_vec(&br.components)?;
            if coef[..q].iter().any(|c| c.max_abs() > tol) {
                return Err(Error::NonInvolutive(format!("[v{}, v{}] leaves the tangent span", a + 1, b + 1)));
            }
            for m in 0..d {
                structure[m][a][b] = coef[q + m].truncate(to);
            }
        }
    }
    let mut matrices = Vec::with_capacity(d);
    for v in tangent {
        let mut a = SeriesMatrix::zeros(q, q, nv, to);
        for (b, w) in normal.iter().enumerate() {
            let br = lie_bracket(v, w)?;
            let coef = finv.mul_vec(&br.components)?;
            for c in 0..q {
                a[(b, c)] = coef[c].truncate(to);
            }
        }
        matrices.push(a);
    }
    let coordinate = tangent.iter().enumerate().all(|(a, v)| v.is_coordinate(q + a));
    if coordinate {
        ConnectionPatch::new(chart, matrices)
    } else {
        ConnectionPatch::with_frame(chart, matrices, tangent.to_vec(), structure)
    }
}

/// Frames adapted to the foliation {φ = const} of a submersion whose
/// x-Jacobian is invertible: v_a = ∂y_a − Σ_b (D_xφ⁻¹ D_yφ)_{ba} ∂x_b and
/// w_b = ∂x_b. Valid through order T − 1.
pub fn frames_from_submersion<S: Scalar>(
    chart: FoliationChart,
    phi: &[TruncatedSeries<S>],
) -> Result<(Vec<PolyVectorField<S>>, Vec<PolyVectorField<S>>)> {
    let (q, d, nv) = (chart.q, chart.d, chart.nvars());
    if phi.len() != q || phi.iter().any(|f| f.nvars() != nv) {
        return Err(Error::DimensionMismatch("submersion needs q components on the chart".into()));
    }
    let t = phi.iter().map(|f| f.order()).min().unwrap_or(0).saturating_sub(1);
    let dx = SeriesMatrix::from_fn(q, q, |i, j| phi[i].diff(j).expect("x index"));
    let dy = SeriesMatrix::from_fn(q, d, |i, a| phi[i].diff(chart.y(a)).expect("y index"));
    let m = &dx
        .inverse()
        .map_err(|_| Error::Singular("x-Jacobian of the submersion".into()))?
        * &dy;
    let tangent = (0..d)
        .map(|a| {
            let comps = (0..nv)
                .map(|i| {
                    if i < q {
                        m[(i, a)].neg()
                    } else if i == chart.y(a) {
                        TruncatedSeries::one(nv, t)
                    } else {
                        TruncatedSeries::zero(nv, t)
                    }
                })
                .collect();
            PolyVectorField { components: comps }
        })
        .collect();
    let normal = (0..q).map(|b| PolyVectorField::coordinate(b, nv, t)).collect();
    Ok((tangent, normal))
}

/// Matrices A⊗Id + Id⊗A′.
pub fn tensor<S: Scalar>(p: &ConnectionPatch<S>, o: &ConnectionPatch<S>) -> Result<ConnectionPatch<S>> {
    p.same_frame(o)?;
    let (nv, t) = (p.chart.nvars(), p.order().min(o.order()));
    let ip = SeriesMatrix::identity(p.rank, nv, t);
    let io = SeriesMatrix::identity(o.rank, nv, t);
    let matrices = p
        .matrices
        .iter()
        .zip(&o.matrices)
        .map(|(a, b)| &a.truncate(t).kron(&io) + &ip.kron(&b.truncate(t)))
        .collect();
    Ok(ConnectionPatch { matrices, ..p.clone() }.with_rank())
}

/// Matrices −Aᵀ.
pub fn dual<S: Scalar>(p: &ConnectionPatch<S>) -> ConnectionPatch<S> {
    p.map_matrices(|a| a.transpose().neg())
}

/// Rank-one patch with entries tr A_k.
pub fn determinant<S: Scalar>(p: &ConnectionPatch<S>) -> ConnectionPatch<S> {
    p.map_matrices(|a| {
        let tr = a.trace();
        SeriesMatrix::from_fn(1, 1, |_, _| tr.clone())
    })
}

/// Basis ordering of the transverse jet patch: (multi-index, section index)
/// with multi-indices in graded-lex order.
pub fn transverse_jet_basis(q: usize, k: u32, r: usize) -> Vec<(MultiIndex, usize)> {
    indices_up_to(q, k)
        .into_iter()
        .flat_map(|a| (0..r).map(move |j| (a.clone(), j)))
        .collect()
}

/// The connection on transverse k-jets in the basis ζ^𝐚 ⊗ e_j. Block
/// (𝐚, 𝐛) is (1/(𝐚−𝐛)!) ∂_x^{𝐚−𝐛} A for 𝐛 ≤ 𝐚 and zero otherwise, so the
/// jet vector ((1/𝐚!) ∂_x^𝐚 f) of every flat f is flat. Valid through
/// order T − k.
pub fn transverse_jet_patch<S: Scalar>(p: &ConnectionPatch<S>, k: u32) -> Result<ConnectionPatch<S>> {
    if !p.is_coordinate() {
        return Err(Error::NonCoordinate("transverse jets need the coordinate frame".into()));
    }
    check_flat(p, flat_tol::<S>())?;
    let chart = p.chart;
    if k > p.order() {
        return Err(Error::InvalidArgument("jet order exceeds series order".into()));
    }
    let t = p.order() - k;
    let idx = indices_up_to(chart.q, k);
    let r = p.rank;
    let nv = chart.nvars();
    let mut matrices = Vec::with_capacity(chart.d);
    for a in &p.matrices {
        // ∂_x^γ A / γ! for every γ of degree ≤ k.
        let derivs: Vec<SeriesMatrix<S>> = idx
            .iter()
            .map(|g| {
                let mut m = a.clone();
                for (v, &e) in g.0.iter().enumerate() {
                    for _ in 0..e {
                        m = m.diff(v).expect("x index");
                    }
                }
                let f = S::from_exact(&GaussRat::real(BigRational::new(BigInt::from(1), g.factorial())));
                m.truncate(t).scale(&f)
            })
            .collect();
        let size = idx.len() * r;
        let mut big = SeriesMatrix::zeros(size, size, nv, t);
        for (ra, ia) in idx.iter().enumerate() {
            for (cb, ib) in idx.iter().enumerate() {
                if let Some(g) = ia.sub(ib) {
                    let pos = idx.iter().position(|m| *m == g).expect("difference in range");
                    for i in 0..r {
                        for j in 0..r {
                            big[(ra * r + i, cb * r + j)] = derivs[pos][(i, j)].clone();
                        }
                    }
                }
            }
        }
        matrices.push(big);
    }
    ConnectionPatch::new(chart, matrices)
}

/// Transverse jet vector ((1/𝐚!) ∂_x^𝐚 f_j) of a section, in the basis of
/// [`transverse_jet_basis`]. Valid through order T − k.
pub fn transverse_jet_vector<S: Scalar>(
    chart: FoliationChart,
    f: &[TruncatedSeries<S>],
    k: u32,
) -> Result<Vec<TruncatedSeries<S>>> {
    let xv = chart.x_vars();
    let mut out = Vec::new();
    let t = f.iter().map(|c| c.order()).min().unwrap_or(0);
    if k > t {
        return Err(Error::InvalidArgument("jet order exceeds series order".into()));
    }
    let per: Vec<crate::jets::JetElement<S>> = f
        .iter()
        .map(|fi| crate::jets::jet_of_function(&fi.truncate(t), k, &xv))
        .collect::<Result<_>>()?;
    let n_idx = per.first().map_or(0, |e| e.coeffs().len());
    for a in 0..n_idx {
        for e in &per {
            out.push(e.coeffs()[a].clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q as qq;

    type Sx = TruncatedSeries<GaussRat>;

    fn chart(q: usize, d: usize) -> FoliationChart {
        FoliationChart::new(q, d).unwrap()
    }

    #[test]
    fn scalar_defect_sign() {
        let c = chart(0, 2);
        let a1 = SeriesMatrix::from_fn(1, 1, |_, _| Sx::var(1, 2, 4));
        let a2 = SeriesMatrix::zeros(1, 1, 2, 4);
        let p = ConnectionPatch::new(c, vec![a1, a2]).unwrap();
        let d = flatness_defect(&p).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0][(0, 0)], Sx::constant(qq(-1, 1), 2, 3));
        assert!(matches!(check_flat(&p, 0.0), Err(Error::NotFlat { .. })));
    }

    #[test]
    fn exponential_solution() {
        let c = chart(0, 1);
        let a = SeriesMatrix::from_fn(1, 1, |_, _| Sx::one(1, 6));
        let p = ConnectionPatch::new(c, vec![a]).unwrap();
        let f = solve_pfaffian(&p, &[Sx::one(1, 6)]).unwrap();
        for k in 0..=6u32 {
            let fact: i64 = (1..=k as i64).product();
            assert_eq!(f[0].coeff(&[k]), qq(1, fact));
        }
    }

    #[test]
    fn nilpotent_system() {
        let c = chart(1, 1);
        let mut a = SeriesMatrix::zeros(2, 2, 2, 5);
        a[(0, 1)] = Sx::one(2, 5);
        let p = ConnectionPatch::new(c, vec![a]).unwrap();
        let g1 = Sx::from_terms(2, 5, &[(vec![2, 0], qq(3, 1))]);
        let g2 = Sx::from_terms(2, 5, &[(vec![0, 0], qq(1, 2)), (vec![1, 0], qq(1, 1))]);
        let f = solve_pfaffian(&p, &[g1.clone(), g2.clone()]).unwrap();
        let y = Sx::var(1, 2, 5);
        assert_eq!(f[0], &g1 + &(&y * &g2));
        assert_eq!(f[1], g2);
        let frame = flat_frame(&p).unwrap();
        assert_eq!(frame[(0, 1)], y);
        let dep = Sx::var(1, 2, 5);
        assert_eq!(solve_pfaffian(&p, &[dep, g1]), Err(Error::LeafDependence));
    }

    #[test]
    fn brackets() {
        let x = Sx::var(0, 2, 4);
        let y = Sx::var(1, 2, 4);
        let z = Sx::zero(2, 4);
        let v = PolyVectorField::new(vec![z.clone(), x.clone()]).unwrap();
        let w = PolyVectorField::new(vec![y.clone(), z.clone()]).unwrap();
        let b = lie_bracket(&v, &w).unwrap();
        assert_eq!(b.components[0], x.truncate(3));
        assert_eq!(b.components[1], y.neg().truncate(3));
        assert!(lie_bracket(&v, &v).unwrap().components.iter().all(|c| c.is_zero()));
    }

    #[test]
    fn bott_example() {
        let c = chart(1, 1);
        let one = Sx::one(2, 5);
        let x = Sx::var(0, 2, 5);
        let v = PolyVectorField::new(vec![x, one.clone()]).unwrap();
        let w = PolyVectorField::coordinate(0, 2, 5);
        let p = bott_patch(c, &[v], &[w]).unwrap();
        assert_eq!(p.matrices()[0][(0, 0)], Sx::constant(qq(-1, 1), 2, 4));
        assert!(!p.is_coordinate());
    }

    #[test]
    fn gauge_from_unipotent() {
        let c = chart(1, 1);
        let mut g = SeriesMatrix::identity(2, 2, 5);
        g[(0, 1)] = Sx::var(1, 2, 5);
        let p = gauge_connection(c, &g).unwrap();
        let a = &p.matrices()[0];
        assert_eq!(a[(0, 1)], Sx::one(2, 4));
        assert!(a[(0, 0)].is_zero() && a[(1, 0)].is_zero() && a[(1, 1)].is_zero());
    }
}
