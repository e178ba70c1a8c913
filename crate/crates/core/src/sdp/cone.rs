//! Cone vectors in `svec` form and Nesterov–Todd scaling.
//!
//! A PSD block of order `n` is stored as its upper triangle, column by column,
//! with off-diagonal entries multiplied by `√2` so the Euclidean inner product
//! of two `svec`s equals the trace inner product of the matrices.

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::numerics::{cholesky, lower_inverse, sym_eig};
use crate::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ConeKind {
    Psd(usize),
    Nonneg,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct ConeBlock {
    pub kind: ConeKind,
    pub offset: usize,
    pub len: usize,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct ConeLayout {
    pub blocks: Vec<ConeBlock>,
    pub len: usize,
}

#[inline]
pub(crate) fn svec_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    j * (j + 1) / 2 + i
}

pub(crate) fn mat(n: usize, v: &[f64]) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let x = v[svec_index(i, j)];
            if i == j {
                m[(i, i)] = x;
            } else {
                m[(i, j)] = x / SQRT_2;
                m[(j, i)] = x / SQRT_2;
            }
        }
    }
    m
}

pub(crate) fn svec_into(m: &Matrix, out: &mut [f64]) {
    let n = m.rows();
    for j in 0..n {
        for i in 0..=j {
            out[svec_index(i, j)] = if i == j {
                m[(i, i)]
            } else {
                SQRT_2 * 0.5 * (m[(i, j)] + m[(j, i)])
            };
        }
    }
}

impl ConeLayout {
    pub fn push(&mut self, kind: ConeKind, size: usize) -> usize {
        let len = match kind {
            ConeKind::Psd(n) => n * (n + 1) / 2,
            ConeKind::Nonneg => size,
        };
        self.blocks.push(ConeBlock {
            kind,
            offset: self.len,
            len,
        });
        self.len += len;
        self.blocks.len() - 1
    }

    /// Degree of the cone (sum of PSD orders plus non-negative entries).
    pub fn degree(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| match b.kind {
                ConeKind::Psd(n) => n,
                ConeKind::Nonneg => b.len,
            })
            .sum()
    }

    pub fn identity(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.len];
        for b in &self.blocks {
            match b.kind {
                ConeKind::Psd(n) => {
                    for i in 0..n {
                        e[b.offset + svec_index(i, i)] = 1.0;
                    }
                }
                ConeKind::Nonneg => e[b.offset..b.offset + b.len].fill(1.0),
            }
        }
        e
    }

    /// Jordan product `u ∘ v`.
    pub fn jordan(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for b in &self.blocks {
            let r = b.offset..b.offset + b.len;
            match b.kind {
                ConeKind::Psd(n) => {
                    let um = mat(n, &u[r.clone()]);
                    let vm = mat(n, &v[r.clone()]);
                    let p = um.matmul(&vm);
                    let sym = p.add(&p.transpose()).scale(0.5);
                    svec_into(&sym, &mut out[r]);
                }
                ConeKind::Nonneg => {
                    for k in r {
                        out[k] = u[k] * v[k];
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub(crate) enum BlockScaling {
    Psd {
        r: Matrix,
        rinv: Matrix,
        t: Matrix,
        lambda: Vec<f64>,
    },
    Nonneg {
        w: Vec<f64>,
        lambda: Vec<f64>,
    },
}

/// Nesterov–Todd scaling `W` with `W⁻ᵀ x = W z = λ`.
#[derive(Clone, Debug)]
pub(crate) struct Scaling {
    pub blocks: Vec<BlockScaling>,
}

impl Scaling {
    pub fn compute(layout: &ConeLayout, x: &[f64], z: &[f64]) -> Result<Self> {
        let mut blocks = Vec::with_capacity(layout.blocks.len());
        for b in &layout.blocks {
            let r = b.offset..b.offset + b.len;
            match b.kind {
                ConeKind::Psd(n) => {
                    let lx = cholesky(&mat(n, &x[r.clone()]))?;
                    let lz = cholesky(&mat(n, &z[r]))?;
                    let k = lz.transpose().matmul(&lx);
                    let (ev, v) = sym_eig(&k.transpose().matmul(&k).symmetrize())?;
                    if ev.iter().any(|&e| e <= 0.0) {
                        return Err(Error::Singular);
                    }
                    let lambda: Vec<f64> = ev.iter().map(|e| e.sqrt()).collect();
                    let isq: Vec<f64> = lambda.iter().map(|l| 1.0 / l.sqrt()).collect();
                    let sq: Vec<f64> = lambda.iter().map(|l| l.sqrt()).collect();
                    let r = lx.matmul(&v).matmul(&Matrix::from_diag(&isq));
                    let rinv = Matrix::from_diag(&sq)
                        .matmul(&v.transpose())
                        .matmul(&lower_inverse(&lx));
                    let t = r.matmul(&r.transpose()).symmetrize();
                    blocks.push(BlockScaling::Psd { r, rinv, t, lambda });
                }
                ConeKind::Nonneg => {
                    let mut w = Vec::with_capacity(b.len);
                    let mut lambda = Vec::with_capacity(b.len);
                    for k in r {
                        if x[k] <= 0.0 || z[k] <= 0.0 {
                            return Err(Error::Singular);
                        }
                        w.push((x[k] / z[k]).sqrt());
                        lambda.push((x[k] * z[k]).sqrt());
                    }
                    blocks.push(BlockScaling::Nonneg { w, lambda });
                }
            }
        }
        Ok(Self { blocks })
    }

    fn map(
        &self,
        layout: &ConeLayout,
        u: &[f64],
        psd: impl Fn(&Matrix, &Matrix, &Matrix, &Matrix) -> Matrix,
        nonneg: impl Fn(f64, f64) -> f64,
    ) -> Vec<f64> {
        let mut out = vec![0.0; layout.len];
        for (b, s) in layout.blocks.iter().zip(&self.blocks) {
            let rg = b.offset..b.offset + b.len;
            match (b.kind, s) {
                (ConeKind::Psd(n), BlockScaling::Psd { r, rinv, t, .. }) => {
                    let um = mat(n, &u[rg.clone()]);
                    svec_into(&psd(&um, r, rinv, t), &mut out[rg]);
                }
                (ConeKind::Nonneg, BlockScaling::Nonneg { w, .. }) => {
                    for (k, &wk) in rg.zip(w) {
                        out[k] = nonneg(u[k], wk);
                    }
                }
                _ => unreachable!("scaling does not match layout"),
            }
        }
        out
    }

    /// `W u = rᵀ U r`
    pub fn w(&self, layout: &ConeLayout, u: &[f64]) -> Vec<f64> {
        self.map(layout, u, |um, r, _, _| r.transpose().matmul(um).matmul(r), |x, w| x * w)
    }

    /// `Wᵀ u = r U rᵀ`
    pub fn wt(&self, layout: &ConeLayout, u: &[f64]) -> Vec<f64> {
        self.map(layout, u, |um, r, _, _| r.matmul(um).matmul(&r.transpose()), |x, w| x * w)
    }

    /// `W⁻ᵀ u = r⁻¹ U r⁻ᵀ`
    pub fn winv_t(&self, layout: &ConeLayout, u: &[f64]) -> Vec<f64> {
        self.map(
            layout,
            u,
            |um, _, rinv, _| rinv.matmul(um).matmul(&rinv.transpose()),
            |x, w| x / w,
        )
    }

    /// `WᵀW u = T U T`
    pub fn h(&self, layout: &ConeLayout, u: &[f64]) -> Vec<f64> {
        self.map(layout, u, |um, _, _, t| t.matmul(um).matmul(t), |x, w| x * w * w)
    }

    pub fn lambda(&self, layout: &ConeLayout) -> Vec<f64> {
        let mut out = vec![0.0; layout.len];
        for (b, s) in layout.blocks.iter().zip(&self.blocks) {
            match s {
                BlockScaling::Psd { lambda, .. } => {
                    for (i, &l) in lambda.iter().enumerate() {
                        out[b.offset + svec_index(i, i)] = l;
                    }
                }
                BlockScaling::Nonneg { lambda, .. } => {
                    out[b.offset..b.offset + b.len].copy_from_slice(lambda);
                }
            }
        }
        out
    }

    /// Solves `λ ∘ u = d` for `u`.
    pub fn lambda_solve(&self, layout: &ConeLayout, d: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; layout.len];
        for (b, s) in layout.blocks.iter().zip(&self.blocks) {
            match (b.kind, s) {
                (ConeKind::Psd(n), BlockScaling::Psd { lambda, .. }) => {
                    for j in 0..n {
                        for i in 0..=j {
                            let k = b.offset + svec_index(i, j);
                            out[k] = 2.0 * d[k] / (lambda[i] + lambda[j]);
                        }
                    }
                }
                (ConeKind::Nonneg, BlockScaling::Nonneg { lambda, .. }) => {
                    for (i, &l) in lambda.iter().enumerate() {
                        out[b.offset + i] = d[b.offset + i] / l;
                    }
                }
                _ => unreachable!("scaling does not match layout"),
            }
        }
        out
    }

    /// Largest `α` with `λ + α·d` in the cone (`∞` when unconstrained).
    pub fn max_step(&self, layout: &ConeLayout, d: &[f64]) -> Result<f64> {
        let mut alpha = f64::INFINITY;
        for (b, s) in layout.blocks.iter().zip(&self.blocks) {
            match (b.kind, s) {
                (ConeKind::Psd(n), BlockScaling::Psd { lambda, .. }) => {
                    let dm = mat(n, &d[b.offset..b.offset + b.len]);
                    let isq: Vec<f64> = lambda.iter().map(|l| 1.0 / l.sqrt()).collect();
                    let scaled = Matrix::from_fn(n, n, |i, j| isq[i] * dm[(i, j)] * isq[j]);
                    let lo = sym_eig(&scaled)?.0[0];
                    if lo < 0.0 {
                        alpha = alpha.min(-1.0 / lo);
                    }
                }
                (ConeKind::Nonneg, BlockScaling::Nonneg { lambda, .. }) => {
                    for (i, &l) in lambda.iter().enumerate() {
                        let di = d[b.offset + i];
                        if di < 0.0 {
                            alpha = alpha.min(-l / di);
                        }
                    }
                }
                _ => unreachable!("scaling does not match layout"),
            }
        }
        Ok(alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn layout() -> ConeLayout {
        let mut l = ConeLayout::default();
        l.push(ConeKind::Psd(3), 3);
        l.push(ConeKind::Nonneg, 2);
        l
    }

    fn interior(seed: f64) -> Vec<f64> {
        let m = Matrix::from_rows(&[
            [2.0 + seed, 0.3, -0.2],
            [0.3, 1.5, 0.1 * seed],
            [-0.2, 0.1 * seed, 1.0 + seed],
        ]);
        let mut v = vec![0.0; 8];
        svec_into(&m, &mut v[..6]);
        v[6] = 0.5 + seed;
        v[7] = 2.0;
        v
    }

    #[test]
    fn svec_preserves_inner_product() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, -1.0]]);
        let b = Matrix::from_rows(&[[0.5, -1.0], [-1.0, 3.0]]);
        let (mut va, mut vb) = (vec![0.0; 3], vec![0.0; 3]);
        svec_into(&a, &mut va);
        svec_into(&b, &mut vb);
        let trace: f64 = a.matmul(&b).diagonal().iter().sum();
        assert!((dot(&va, &vb) - trace).abs() < 1e-14);
        assert_eq!(mat(2, &va), a);
    }

    #[test]
    fn nt_scaling_identities() {
        let l = layout();
        let x = interior(0.7);
        let z = interior(0.1);
        let s = Scaling::compute(&l, &x, &z).unwrap();
        let lam = s.lambda(&l);
        let wz = s.w(&l, &z);
        let wx = s.winv_t(&l, &x);
        for k in 0..l.len {
            assert!((wz[k] - lam[k]).abs() < 1e-12, "{wz:?} {lam:?}");
            assert!((wx[k] - lam[k]).abs() < 1e-12);
        }
        // WᵀW = H and W⁻ᵀ inverts Wᵀ
        let u = interior(-0.3);
        let h1 = s.h(&l, &u);
        let h2 = s.wt(&l, &s.w(&l, &u));
        let back = s.winv_t(&l, &s.wt(&l, &u));
        for k in 0..l.len {
            assert!((h1[k] - h2[k]).abs() < 1e-12);
            assert!((back[k] - u[k]).abs() < 1e-12);
        }
        // λ ∘ (λ \ d) = d
        let d = interior(0.2);
        let sol = s.lambda_solve(&l, &d);
        let again = l.jordan(&lam, &sol);
        for k in 0..l.len {
            assert!((again[k] - d[k]).abs() < 1e-12);
        }
        assert!((dot(&x, &z) - dot(&lam, &lam)).abs() < 1e-12);
    }

    #[test]
    fn step_to_boundary() {
        let l = layout();
        let e = l.identity();
        let s = Scaling::compute(&l, &e, &e).unwrap();
        let d: Vec<f64> = e.iter().map(|v| -2.0 * v).collect();
        assert!((s.max_step(&l, &d).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(s.max_step(&l, &e).unwrap(), f64::INFINITY);
        assert_eq!(l.degree(), 5);
    }
}
