//! Sparse and banded linear algebra behind [`super::linear_solve`].

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds from `(row, col, value)` triplets, summing duplicates and dropping exact zeros.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) outside a {n}x{n} matrix");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
                last = Some((r, c));
            }
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != 0.0 || r == c {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Csr {
            n,
            row_ptr,
            cols: keep_cols,
            vals: keep_vals,
        }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate().take(self.n) {
            *out = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_into(x, &mut y);
        y
    }

    /// Lower and upper bandwidths.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut lo = 0;
        let mut up = 0;
        for r in 0..self.n {
            for (c, _) in self.row(r) {
                if c < r {
                    lo = lo.max(r - c);
                } else {
                    up = up.max(c - r);
                }
            }
        }
        (lo, up)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|r| {
            self.row(r)
                .all(|(c, v)| (v - self.get(c, r)).abs() <= tol * v.abs().max(1.0))
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        d
    }
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Tridiagonal matrix with a reusable Thomas factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    /// `lower[0]` and `upper[n-1]` are ignored.
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), diag.len());
        assert_eq!(upper.len(), diag.len());
        Tridiagonal { lower, diag, upper }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    pub fn shifted(&self, shift: &[f64]) -> Self {
        let mut t = self.clone();
        for (d, s) in t.diag.iter_mut().zip(shift) {
            *d += s;
        }
        t
    }

    pub fn factor(&self) -> Result<TridiagonalLu> {
        let n = self.len();
        let mut inv_pivot = vec![0.0; n];
        let mut upper_mod = vec![0.0; n];
        let scale = self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(1e-300);
        let mut prev = 0.0;
        for i in 0..n {
            let pivot = self.diag[i] - if i > 0 { self.lower[i] * prev } else { 0.0 };
            if pivot.abs() <= 1e-14 * scale {
                return Err(Error::Breakdown {
                    what: "tridiagonal factorization",
                    iteration: i,
                    detail: format!("pivot {pivot:e} is numerically zero"),
                });
            }
            inv_pivot[i] = 1.0 / pivot;
            upper_mod[i] = if i + 1 < n { self.upper[i] * inv_pivot[i] } else { 0.0 };
            prev = upper_mod[i];
        }
        Ok(TridiagonalLu {
            lower: self.lower.clone(),
            inv_pivot,
            upper_mod,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    inv_pivot: Vec<f64>,
    upper_mod: Vec<f64>,
}

impl TridiagonalLu {
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.inv_pivot.len();
        let mut prev = 0.0;
        for i in 0..n {
            let v = (x[i] - if i > 0 { self.lower[i] * prev } else { 0.0 }) * self.inv_pivot[i];
            x[i] = v;
            prev = v;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.upper_mod[i] * x[i + 1];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Banded LU factorization without pivoting, for the diagonally dominant
/// operators of tensor grids (bandwidth = transverse unknown count).
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    lo: usize,
    up: usize,
    width: usize,
    band: Vec<f64>,
}

impl BandLu {
    pub fn factor(a: &Csr) -> Result<Self> {
        let (lo, up) = a.bandwidth();
        let n = a.n;
        let width = lo + up + 1;
        let mut band = vec![0.0; n * width];
        let mut row_scale = vec![0.0f64; n];
        for r in 0..n {
            for (c, v) in a.row(r) {
                band[r * width + c + lo - r] = v;
                row_scale[r] = row_scale[r].max(v.abs());
            }
        }
        for k in 0..n {
            let pivot = band[k * width + lo];
            if pivot.abs() <= 1e-13 * row_scale[k].max(1e-300) {
                return Err(Error::Breakdown {
                    what: "banded LU",
                    iteration: k,
                    detail: format!("pivot {pivot:e} is numerically zero (singular operator)"),
                });
            }
            let inv = 1.0 / pivot;
            let row_end = (k + up + 1).min(n);
            let (head, tail) = band.split_at_mut((k + 1) * width);
            let pivot_row = &head[k * width + lo + 1..k * width + lo + (row_end - k)];
            for i in k + 1..(k + lo + 1).min(n) {
                let base = (i - k - 1) * width;
                let off = k + lo - i;
                let l = tail[base + off] * inv;
                tail[base + off] = l;
                if l != 0.0 {
                    let row = &mut tail[base + off + 1..base + off + 1 + pivot_row.len()];
                    for (dst, src) in row.iter_mut().zip(pivot_row) {
                        *dst -= l * src;
                    }
                }
            }
        }
        Ok(BandLu {
            n,
            lo,
            up,
            width,
            band,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, lo, up, w) = (self.n, self.lo, self.up, self.width);
        for i in 0..n {
            let start = i.saturating_sub(lo);
            let row = &self.band[i * w..];
            let mut s = x[i];
            for (k, xv) in x.iter().enumerate().take(i).skip(start) {
                s -= row[k + lo - i] * xv;
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let end = (i + up + 1).min(n);
            let row = &self.band[i * w..];
            let mut s = x[i];
            for (k, xv) in x.iter().enumerate().take(end).skip(i + 1) {
                s -= row[k + lo - i] * xv;
            }
            x[i] = s / row[lo];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Banded LU with partial pivoting; the upper band grows by the lower bandwidth.
#[derive(Debug, Clone)]
pub struct PivotedBandLu {
    n: usize,
    lo: usize,
    up: usize,
    width: usize,
    band: Vec<f64>,
    swaps: Vec<usize>,
}

impl PivotedBandLu {
    pub fn factor(a: &Csr) -> Result<Self> {
        let (lo, up0) = a.bandwidth();
        let n = a.n;
        let up = up0 + lo;
        let width = lo + up + 1;
        // entry (i, j) sits at i * width + j + lo - i
        let mut band = vec![0.0; n * width];
        let mut scale = 0.0f64;
        for r in 0..n {
            for (c, v) in a.row(r) {
                band[r * width + c + lo - r] = v;
                scale = scale.max(v.abs());
            }
        }
        let mut swaps = vec![0; n];
        for k in 0..n {
            let last = (k + lo).min(n - 1);
            let mut p = k;
            let mut best = band[k * width + lo].abs();
            for i in k + 1..=last {
                let v = band[i * width + k + lo - i].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= 1e-300 || best <= 1e-15 * scale {
                return Err(Error::Breakdown {
                    what: "pivoted banded LU",
                    iteration: k,
                    detail: format!("no usable pivot in column {k}"),
                });
            }
            swaps[k] = p;
            let end = (k + up + 1).min(n);
            if p != k {
                for j in k..end {
                    band.swap(k * width + j + lo - k, p * width + j + lo - p);
                }
            }
            let inv = 1.0 / band[k * width + lo];
            for i in k + 1..=last {
                let l = band[i * width + k + lo - i] * inv;
                band[i * width + k + lo - i] = l;
                if l != 0.0 {
                    for j in k + 1..end {
                        let u = band[k * width + j + lo - k];
                        band[i * width + j + lo - i] -= l * u;
                    }
                }
            }
        }
        Ok(PivotedBandLu {
            n,
            lo,
            up,
            width,
            band,
            swaps,
        })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, lo, up, w) = (self.n, self.lo, self.up, self.width);
        for k in 0..n {
            x.swap(k, self.swaps[k]);
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..(k + lo + 1).min(n) {
                    x[i] -= self.band[i * w + k + lo - i] * xk;
                }
            }
        }
        for i in (0..n).rev() {
            let end = (i + up + 1).min(n);
            let mut s = x[i];
            for k in i + 1..end {
                s -= self.band[i * w + k + lo - i] * x[k];
            }
            x[i] = s / self.band[i * w + lo];
        }
    }
}

/// Zero-fill incomplete LU factorization on the sparsity pattern of `a`.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: Csr,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &Csr) -> Result<Self> {
        let mut lu = a.clone();
        let n = a.n;
        let mut diag_pos = vec![usize::MAX; n];
        for r in 0..n {
            for p in lu.row_ptr[r]..lu.row_ptr[r + 1] {
                if lu.cols[p] == r {
                    diag_pos[r] = p;
                }
            }
            if diag_pos[r] == usize::MAX {
                return Err(Error::invalid(format!("row {r} has no diagonal entry")));
            }
        }
        let mut col_pos = vec![usize::MAX; n];
        for i in 0..n {
            let (s, e) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in s..e {
                col_pos[lu.cols[p]] = p;
            }
            for p in s..e {
                let k = lu.cols[p];
                if k >= i {
                    break;
                }
                let pivot = lu.vals[diag_pos[k]];
                if pivot == 0.0 {
                    return Err(Error::Breakdown {
                        what: "ILU(0)",
                        iteration: k,
                        detail: "zero pivot".into(),
                    });
                }
                let l = lu.vals[p] / pivot;
                lu.vals[p] = l;
                for q in diag_pos[k] + 1..lu.row_ptr[k + 1] {
                    let j = lu.cols[q];
                    let pos = col_pos[j];
                    if pos != usize::MAX && pos >= s && pos < e {
                        lu.vals[pos] -= l * lu.vals[q];
                    }
                }
            }
            for p in s..e {
                col_pos[lu.cols[p]] = usize::MAX;
            }
        }
        Ok(Ilu0 { lu, diag_pos })
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.lu.n;
        for i in 0..n {
            let mut s = r[i];
            for p in self.lu.row_ptr[i]..self.diag_pos[i] {
                s -= self.lu.vals[p] * z[self.lu.cols[p]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for p in self.diag_pos[i] + 1..self.lu.row_ptr[i + 1] {
                s -= self.lu.vals[p] * z[self.lu.cols[p]];
            }
            z[i] = s / self.lu.vals[self.diag_pos[i]];
        }
    }
}

pub struct IterativeOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients.
pub fn conjugate_gradient(
    a: &Csr,
    b: &[f64],
    rtol: f64,
    max_iter: usize,
) -> Result<IterativeOutcome> {
    let n = a.n;
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(IterativeOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.mul_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Breakdown {
                what: "conjugate gradient",
                iteration: it,
                detail: format!("curvature p^T A p = {pap:e} (operator not positive definite)"),
            });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let res = norm2(&r);
        if res <= rtol * bnorm {
            return Ok(IterativeOutcome {
                x,
                iterations: it,
                residual: res / bnorm,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        what: "conjugate gradient",
        iterations: max_iter,
        residual: norm2(&r) / bnorm,
    })
}

/// Right-preconditioned BiCGSTAB with an ILU(0) preconditioner.
pub fn bicgstab_ilu0(a: &Csr, b: &[f64], rtol: f64, max_iter: usize) -> Result<IterativeOutcome> {
    let n = a.n;
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(IterativeOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let ilu = Ilu0::new(a)?;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 {
            return Err(Error::Breakdown {
                what: "BiCGSTAB",
                iteration: it,
                detail: "rho vanished".into(),
            });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        ilu.apply(&p, &mut p_hat);
        a.mul_into(&p_hat, &mut v);
        let rv = dot(&r_hat, &v);
        if rv.abs() < 1e-300 {
            return Err(Error::Breakdown {
                what: "BiCGSTAB",
                iteration: it,
                detail: "r_hat . v vanished".into(),
            });
        }
        alpha = rho / rv;
        for i in 0..n {
            r[i] -= alpha * v[i];
            x[i] += alpha * p_hat[i];
        }
        let res = norm2(&r);
        if res <= rtol * bnorm {
            return Ok(IterativeOutcome {
                x,
                iterations: it,
                residual: res / bnorm,
            });
        }
        ilu.apply(&r, &mut s_hat);
        a.mul_into(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(Error::Breakdown {
                what: "BiCGSTAB",
                iteration: it,
                detail: "t vanished".into(),
            });
        }
        omega = dot(&t, &r) / tt;
        for i in 0..n {
            x[i] += omega * s_hat[i];
            r[i] -= omega * t[i];
        }
        let res = norm2(&r);
        if res <= rtol * bnorm {
            return Ok(IterativeOutcome {
                x,
                iterations: it,
                residual: res / bnorm,
            });
        }
        if omega == 0.0 {
            return Err(Error::Breakdown {
                what: "BiCGSTAB",
                iteration: it,
                detail: "omega vanished".into(),
            });
        }
    }
    Err(Error::NoConvergence {
        what: "BiCGSTAB",
        iterations: max_iter,
        residual: norm2(&r) / bnorm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_2d(nx: usize, ny: usize, advect: f64) -> Csr {
        let mut t = Vec::new();
        let idx = |i: usize, j: usize| i * ny + j;
        for i in 0..nx {
            for j in 0..ny {
                let r = idx(i, j);
                t.push((r, r, 4.0 + 0.1));
                if i > 0 {
                    t.push((r, idx(i - 1, j), -1.0 + advect));
                }
                if i + 1 < nx {
                    t.push((r, idx(i + 1, j), -1.0 - advect));
                }
                if j > 0 {
                    t.push((r, idx(i, j - 1), -1.0));
                }
                if j + 1 < ny {
                    t.push((r, idx(i, j + 1), -1.0));
                }
            }
        }
        Csr::from_triplets(nx * ny, t)
    }

    #[test]
    fn pivoted_band_lu_handles_zero_diagonal() {
        // banded, with zero diagonal entries that need row exchanges
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n {
            if i % 3 != 0 {
                t.push((i, i, 2.0 + i as f64 * 0.01));
            }
            if i + 1 < n {
                t.push((i, i + 1, 1.0));
            }
            if i > 0 {
                t.push((i, i - 1, -1.5));
            }
            if i + 3 < n {
                t.push((i, i + 3, 0.25));
            }
        }
        let a = Csr::from_triplets(n, t);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let b = a.mul(&x);
        let lu = PivotedBandLu::factor(&a).unwrap();
        let mut y = b.clone();
        lu.solve_in_place(&mut y);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = Csr::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 0, -1.0), (1, 1, 4.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.bandwidth(), (1, 0));
    }

    #[test]
    fn band_lu_matches_iterative() {
        let a = poisson_2d(12, 7, 0.3);
        let b: Vec<f64> = (0..a.n).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let lu = BandLu::factor(&a).unwrap();
        let x = lu.solve(&b);
        let r: f64 = norm2(&a.mul(&x).iter().zip(&b).map(|(p, q)| p - q).collect::<Vec<_>>());
        assert!(r < 1e-10 * norm2(&b));
        let it = bicgstab_ilu0(&a, &b, 1e-12, 500).unwrap();
        let diff = x.iter().zip(&it.x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-9);
    }

    #[test]
    fn cg_on_symmetric() {
        let a = poisson_2d(9, 9, 0.0);
        assert!(a.is_symmetric(1e-15));
        let b = vec![1.0; a.n];
        let out = conjugate_gradient(&a, &b, 1e-12, 1000).unwrap();
        let lu = BandLu::factor(&a).unwrap().solve(&b);
        for (p, q) in out.x.iter().zip(&lu) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn thomas_matches_band() {
        let n = 20;
        let tri = Tridiagonal::new(vec![-1.0; n], vec![2.5; n], vec![-0.7; n]);
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 2.5));
            if i > 0 {
                trip.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                trip.push((i, i + 1, -0.7));
            }
        }
        let csr = Csr::from_triplets(n, trip);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x1 = tri.factor().unwrap().solve(&b);
        let x2 = BandLu::factor(&csr).unwrap().solve(&b);
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-12);
        }
        let back = tri.apply(&x1);
        for (p, q) in back.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
