//! Primal–dual interior-point method on the homogeneous self-dual embedding
//! with Nesterov–Todd scaling and Mehrotra predictor–corrector steps.
//!
//! Standard form: `min cᵀx  s.t.  A x = b,  x_K ∈ K,  x_F free`, with dual
//! `max bᵀy  s.t.  c_K − A_Kᵀy = z ∈ K,  c_F − A_Fᵀy = 0`.

use std::f64::consts::SQRT_2;

use log::debug;

use super::cone::{mat, svec_index, ConeKind, ConeLayout, Scaling};
use super::presolve::{presolve, RANK_TOL};
use super::problem::{BlockKind, BlockValue, SdpProblem, SdpSolution, SdpStatus, Tolerances};
use crate::error::Result;
use crate::numerics::{cholesky, cholesky_solve, pivoted_qr_rank};
use crate::Matrix;

/// Compressed sparse rows.
#[derive(Clone, Debug, Default)]
struct Csr {
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
    cols: usize,
}

impl Csr {
    fn rows(&self) -> usize {
        self.ptr.len().saturating_sub(1)
    }

    fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.ptr[r], self.ptr[r + 1]);
        self.idx[a..b].iter().copied().zip(self.val[a..b].iter().copied())
    }

    fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows()).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    fn mul_t(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            if yr != 0.0 {
                for (c, v) in self.row(r) {
                    out[c] += v * yr;
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Cone(usize),
    Free(usize),
}

/// Problem data in standard form with equilibrated rows.
struct Form {
    layout: ConeLayout,
    slots: Vec<Slot>,
    m: usize,
    nf: usize,
    ak: Csr,
    af: Matrix,
    ck: Vec<f64>,
    cf: Vec<f64>,
    b: Vec<f64>,
    row_scale: Vec<f64>,
    /// Per cone block: the rows touching it with their symmetric-matrix entries
    /// `(p, q, a)` (`p ≤ q`, each off-diagonal standing for both triangles).
    psd_rows: Vec<Vec<(usize, Vec<(usize, usize, f64)>)>>,
    /// Per non-negative column: `(row, coefficient)`.
    nonneg_cols: Vec<(usize, Vec<(usize, f64)>)>,
    /// Retained free columns (indices into the full free vector).
    free_keep: Vec<usize>,
    free_total: usize,
    /// Directions over retained free columns with `A d = 0`, `cᵀd < 0`.
    free_ray: Option<Vec<(usize, f64)>>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

impl Form {
    fn build(prob: &SdpProblem) -> Form {
        let mut layout = ConeLayout::default();
        let mut slots = Vec::new();
        let mut free_total = 0;
        for b in prob.blocks() {
            match b.kind {
                BlockKind::Psd => slots.push(Slot::Cone(layout.push(ConeKind::Psd(b.size), b.size))),
                BlockKind::Nonneg => slots.push(Slot::Cone(layout.push(ConeKind::Nonneg, b.size))),
                BlockKind::Free => {
                    slots.push(Slot::Free(free_total));
                    free_total += b.size;
                }
            }
        }
        let nk = layout.len;
        // column of a term and the coefficient in svec coordinates
        let col = |t: &super::problem::Term| -> (bool, usize, f64) {
            match slots[t.block] {
                Slot::Cone(cb) => {
                    let blk = layout.blocks[cb];
                    match blk.kind {
                        ConeKind::Psd(_) => {
                            let s = if t.i == t.j { t.coef } else { t.coef / SQRT_2 };
                            (true, blk.offset + svec_index(t.i, t.j), s)
                        }
                        ConeKind::Nonneg => (true, blk.offset + t.i, t.coef),
                    }
                }
                Slot::Free(off) => (false, off + t.i, t.coef),
            }
        };
        let m = prob.constraints().len();
        let mut rows_k: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut af_full = Matrix::zeros(m, free_total);
        for (r, c) in prob.constraints().iter().enumerate() {
            for t in &c.terms {
                let (cone, j, v) = col(t);
                if cone {
                    rows_k[r].push((j, v));
                } else {
                    af_full[(r, j)] += v;
                }
            }
        }
        for row in &mut rows_k {
            row.sort_unstable_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for &(j, v) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += v,
                    _ => merged.push((j, v)),
                }
            }
            merged.retain(|e| e.1 != 0.0);
            *row = merged;
        }
        let mut ck = vec![0.0; nk];
        let mut cf_full = vec![0.0; free_total];
        for t in prob.objective() {
            let (cone, j, v) = col(t);
            if cone {
                ck[j] += v;
            } else {
                cf_full[j] += v;
            }
        }
        let mut b: Vec<f64> = prob.constraints().iter().map(|c| c.rhs).collect();

        // equilibrate rows
        let mut row_scale = vec![1.0; m];
        for r in 0..m {
            let n2: f64 = rows_k[r].iter().map(|e| e.1 * e.1).sum::<f64>()
                + (0..free_total).map(|j| af_full[(r, j)].powi(2)).sum::<f64>();
            if n2 > 0.0 {
                let d = 1.0 / n2.sqrt();
                row_scale[r] = d;
                rows_k[r].iter_mut().for_each(|e| e.1 *= d);
                af_full.row_mut(r).iter_mut().for_each(|v| *v *= d);
                b[r] *= d;
            }
        }

        // drop dependent free columns
        let (free_keep, free_ray) = if free_total > 0 && m > 0 {
            let (rank, perm) = pivoted_qr_rank(&af_full, RANK_TOL);
            let mut keep: Vec<usize> = perm[..rank].to_vec();
            keep.sort_unstable();
            let ray = free_ray(&af_full, &cf_full, &keep);
            (keep, ray)
        } else {
            let ray = (0..free_total)
                .find(|&j| cf_full[j] != 0.0)
                .map(|j| vec![(j, -cf_full[j].signum())]);
            (Vec::new(), ray)
        };
        let nf = free_keep.len();
        let af = Matrix::from_fn(m, nf, |r, c| af_full[(r, free_keep[c])]);
        let cf: Vec<f64> = free_keep.iter().map(|&j| cf_full[j]).collect();

        let mut ptr = vec![0];
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for row in &rows_k {
            for &(j, v) in row {
                idx.push(j);
                val.push(v);
            }
            ptr.push(idx.len());
        }
        let ak = Csr {
            ptr,
            idx,
            val,
            cols: nk,
        };

        let mut psd_rows = vec![Vec::new(); layout.blocks.len()];
        let mut nonneg_cols: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
        let mut nonneg_index = vec![usize::MAX; nk];
        for blk in &layout.blocks {
            if blk.kind == ConeKind::Nonneg {
                for k in blk.offset..blk.offset + blk.len {
                    nonneg_index[k] = nonneg_cols.len();
                    nonneg_cols.push((k, Vec::new()));
                }
            }
        }
        let block_of = |j: usize| {
            layout
                .blocks
                .iter()
                .position(|b| j >= b.offset && j < b.offset + b.len)
                .expect("column inside layout")
        };
        for (r, row) in rows_k.iter().enumerate() {
            let mut per_block: Vec<(usize, Vec<(usize, usize, f64)>)> = Vec::new();
            for &(j, v) in row {
                let bi = block_of(j);
                let blk = layout.blocks[bi];
                match blk.kind {
                    ConeKind::Psd(_) => {
                        let local = j - blk.offset;
                        // invert svec_index
                        let mut q = 0;
                        while (q + 1) * (q + 2) / 2 <= local {
                            q += 1;
                        }
                        let p = local - q * (q + 1) / 2;
                        let a = if p == q { v } else { v / SQRT_2 };
                        match per_block.iter_mut().find(|e| e.0 == bi) {
                            Some(e) => e.1.push((p, q, a)),
                            None => per_block.push((bi, vec![(p, q, a)])),
                        }
                    }
                    ConeKind::Nonneg => nonneg_cols[nonneg_index[j]].1.push((r, v)),
                }
            }
            for (bi, entries) in per_block {
                psd_rows[bi].push((r, entries));
            }
        }

        Form {
            layout,
            slots,
            m,
            nf,
            ak,
            af,
            ck,
            cf,
            b,
            row_scale,
            psd_rows,
            nonneg_cols,
            free_keep,
            free_total,
            free_ray,
        }
    }

    fn a_mul(&self, xk: &[f64], xf: &[f64]) -> Vec<f64> {
        let mut out = self.ak.mul(xk);
        if self.nf > 0 {
            axpy(&mut out, 1.0, &self.af.matvec(xf));
        }
        out
    }

    /// Schur complement `A_K H A_Kᵀ`.
    fn schur(&self, s: &Scaling) -> Matrix {
        let m = self.m;
        let mut mm = Matrix::zeros(m, m);
        for (bi, rows) in self.psd_rows.iter().enumerate() {
            if rows.is_empty() {
                continue;
            }
            let t = match &s.blocks[bi] {
                super::cone::BlockScaling::Psd { t, .. } => t,
                _ => unreachable!("PSD rows on a non-PSD block"),
            };
            let n = t.rows();
            let mut p = Matrix::zeros(n, n);
            for (jj, (rj, ej)) in rows.iter().enumerate() {
                // P = T A_j T
                p.as_mut_slice().fill(0.0);
                for &(a, bq, v) in ej {
                    for r in 0..n {
                        let ta = t[(r, a)] * v;
                        let tb = t[(r, bq)] * v;
                        let prow = p.row_mut(r);
                        if a == bq {
                            for (c, pc) in prow.iter_mut().enumerate() {
                                *pc += ta * t[(a, c)];
                            }
                        } else {
                            for (c, pc) in prow.iter_mut().enumerate() {
                                *pc += ta * t[(bq, c)] + tb * t[(a, c)];
                            }
                        }
                    }
                }
                for (ri, ei) in rows.iter().take(jj + 1) {
                    let mut acc = 0.0;
                    for &(a, bq, v) in ei {
                        acc += if a == bq { v * p[(a, a)] } else { v * (p[(a, bq)] + p[(bq, a)]) };
                    }
                    mm[(*ri, *rj)] += acc;
                    if ri != rj {
                        mm[(*rj, *ri)] += acc;
                    }
                }
            }
        }
        for (k, col) in &self.nonneg_cols {
            let h = match s_nonneg_h(&self.layout, s, *k) {
                Some(h) => h,
                None => continue,
            };
            for &(ri, vi) in col {
                for &(rj, vj) in col {
                    mm[(ri, rj)] += vi * vj * h;
                }
            }
        }
        mm
    }
}

fn s_nonneg_h(layout: &ConeLayout, s: &Scaling, k: usize) -> Option<f64> {
    for (blk, bs) in layout.blocks.iter().zip(&s.blocks) {
        if k >= blk.offset && k < blk.offset + blk.len {
            if let super::cone::BlockScaling::Nonneg { w, .. } = bs {
                let wk = w[k - blk.offset];
                return Some(wk * wk);
            }
        }
    }
    None
}

/// Direction over free columns in the null space of `A_F` with negative cost,
/// if one exists among the dropped dependent columns.
fn free_ray(af: &Matrix, cf: &[f64], keep: &[usize]) -> Option<Vec<(usize, f64)>> {
    let m = af.rows();
    let k = keep.len();
    let g = Matrix::from_fn(k, k, |i, j| (0..m).map(|r| af[(r, keep[i])] * af[(r, keep[j])]).sum());
    let l = if k > 0 { cholesky(&g).ok() } else { None };
    let cscale = 1.0 + cf.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
    for j in 0..af.cols() {
        if keep.contains(&j) {
            continue;
        }
        let w = match &l {
            Some(l) => {
                let rhs: Vec<f64> = keep.iter().map(|&c| (0..m).map(|r| af[(r, c)] * af[(r, j)]).sum()).collect();
                cholesky_solve(l, &rhs)
            }
            None => vec![0.0; k],
        };
        let cost = cf[j] - w.iter().zip(keep).map(|(wi, &c)| wi * cf[c]).sum::<f64>();
        if cost.abs() > 1e-9 * cscale {
            let s = -cost.signum();
            let mut d = vec![(j, s)];
            d.extend(keep.iter().zip(&w).map(|(&c, &wi)| (c, -s * wi)));
            return Some(d);
        }
    }
    None
}

/// Factorized reduced Newton system for one iteration.
struct Kkt {
    l: Matrix,
    omega: f64,
    /// `M̃⁻¹ A_F`
    y: Matrix,
    lf: Option<Matrix>,
}

fn regularized_cholesky(m: &Matrix) -> Option<Matrix> {
    if m.rows() == 0 {
        return Some(Matrix::zeros(0, 0));
    }
    if let Ok(l) = cholesky(m) {
        return Some(l);
    }
    let scale = m.diagonal().iter().fold(0.0f64, |a, &d| a.max(d.abs())).max(1e-300);
    for exp in [-14, -12, -10, -8] {
        let reg = scale * 10f64.powi(exp);
        let mut r = m.clone();
        for i in 0..r.rows() {
            r[(i, i)] += reg;
        }
        if let Ok(l) = cholesky(&r) {
            return Some(l);
        }
    }
    None
}

impl Kkt {
    fn factor(form: &Form, s: &Scaling) -> Option<Kkt> {
        let mut mt = form.schur(s);
        let m = form.m;
        let mut omega = 1.0;
        if form.nf > 0 {
            let dm = mt.diagonal().iter().fold(0.0f64, |a, &d| a.max(d));
            let aat: f64 = (0..m)
                .map(|r| form.af.row(r).iter().map(|v| v * v).sum::<f64>())
                .fold(0.0, f64::max);
            if dm > 0.0 && aat > 0.0 {
                omega = dm / aat;
            }
            for i in 0..m {
                for j in 0..=i {
                    let v: f64 = form.af.row(i).iter().zip(form.af.row(j)).map(|(a, b)| a * b).sum();
                    mt[(i, j)] += omega * v;
                    if i != j {
                        mt[(j, i)] += omega * v;
                    }
                }
            }
        }
        let l = regularized_cholesky(&mt)?;
        let nf = form.nf;
        let mut y = Matrix::zeros(m, nf);
        let mut lf = None;
        if nf > 0 {
            for c in 0..nf {
                let col = cholesky_solve(&l, &form.af.column(c));
                for r in 0..m {
                    y[(r, c)] = col[r];
                }
            }
            let f = form.af.transpose().matmul(&y).symmetrize();
            lf = Some(regularized_cholesky(&f)?);
        }
        Some(Kkt { l, omega, y, lf })
    }

    /// Solves `[M A_F; A_Fᵀ 0] [dy; dxf] = [r; q]`.
    fn solve(&self, form: &Form, r: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>) {
        if form.nf == 0 {
            return (cholesky_solve(&self.l, r), Vec::new());
        }
        let mut rr = r.to_vec();
        axpy(&mut rr, self.omega, &form.af.matvec(q));
        let t = cholesky_solve(&self.l, &rr);
        let mut g = form.af.matvec_t(&t);
        axpy(&mut g, -1.0, q);
        let dxf = cholesky_solve(self.lf.as_ref().expect("free factor"), &g);
        let mut dy = t;
        axpy(&mut dy, -1.0, &self.y.matvec(&dxf));
        (dy, dxf)
    }
}

#[derive(Clone, Debug)]
struct Dir {
    x: Vec<f64>,
    xf: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
}

/// Right-hand side of the linearized embedding.
struct Rhs {
    p: Vec<f64>,
    dk: Vec<f64>,
    df: Vec<f64>,
    g: f64,
    xi: Vec<f64>,
    dkappa: f64,
}

struct Newton<'a> {
    form: &'a Form,
    s: &'a Scaling,
    kkt: Kkt,
    v_y: Vec<f64>,
    v_f: Vec<f64>,
    p1: Vec<f64>,
    den: f64,
    tau: f64,
    kappa: f64,
}

impl<'a> Newton<'a> {
    fn new(form: &'a Form, s: &'a Scaling, tau: f64, kappa: f64) -> Option<Self> {
        let kkt = Kkt::factor(form, s)?;
        let l = &form.layout;
        let hc = s.h(l, &form.ck);
        let mut g1 = form.ak.mul(&hc);
        axpy(&mut g1, 1.0, &form.b);
        let (v_y, v_f) = kkt.solve(form, &g1, &form.cf);
        // p1 = H w with w = A_Kᵀv − c_K; the Δτ pivot equals ⟨w, H w⟩ + κ/τ
        let mut w = form.ak.mul_t(&v_y);
        axpy(&mut w, -1.0, &form.ck);
        let p1 = s.h(l, &w);
        let den = dot(&w, &p1).max(0.0) + kappa / tau;
        if !(den > 0.0) || !den.is_finite() {
            return None;
        }
        Some(Self {
            form,
            s,
            kkt,
            v_y,
            v_f,
            p1,
            den,
            tau,
            kappa,
        })
    }

    fn solve_once(&self, rhs: &Rhs) -> Dir {
        let f = self.form;
        let l = &f.layout;
        let mut t = rhs.xi.clone();
        axpy(&mut t, 1.0, &self.s.h(l, &rhs.dk));
        let mut r1 = rhs.p.clone();
        axpy(&mut r1, -1.0, &f.ak.mul(&t));
        let q: Vec<f64> = rhs.df.iter().map(|v| -v).collect();
        let (u_y, u_f) = self.kkt.solve(f, &r1, &q);
        let mut p0 = rhs.xi.clone();
        let mut w = rhs.dk.clone();
        axpy(&mut w, 1.0, &f.ak.mul_t(&u_y));
        axpy(&mut p0, 1.0, &self.s.h(l, &w));
        let inner = dot(&f.b, &u_y) - dot(&f.ck, &p0) - dot(&f.cf, &u_f) - rhs.dkappa / self.tau;
        let dtau = (rhs.g - inner) / self.den;
        let mut y = u_y;
        axpy(&mut y, dtau, &self.v_y);
        let mut xf = u_f;
        axpy(&mut xf, dtau, &self.v_f);
        let mut x = p0;
        axpy(&mut x, dtau, &self.p1);
        let mut z: Vec<f64> = f.ck.iter().map(|c| c * dtau).collect();
        axpy(&mut z, -1.0, &f.ak.mul_t(&y));
        axpy(&mut z, -1.0, &rhs.dk);
        let dkappa = (rhs.dkappa - self.kappa * dtau) / self.tau;
        Dir {
            x,
            xf,
            y,
            z,
            tau: dtau,
            kappa: dkappa,
        }
    }

    fn residual(&self, rhs: &Rhs, d: &Dir) -> Rhs {
        let f = self.form;
        let l = &f.layout;
        let mut p = rhs.p.clone();
        axpy(&mut p, -1.0, &f.a_mul(&d.x, &d.xf));
        axpy(&mut p, d.tau, &f.b);
        let mut dk = rhs.dk.clone();
        axpy(&mut dk, -d.tau, &f.ck);
        axpy(&mut dk, 1.0, &f.ak.mul_t(&d.y));
        axpy(&mut dk, 1.0, &d.z);
        let mut df = rhs.df.clone();
        axpy(&mut df, -d.tau, &f.cf);
        if f.nf > 0 {
            axpy(&mut df, 1.0, &f.af.matvec_t(&d.y));
        }
        let g = rhs.g - (dot(&f.b, &d.y) - dot(&f.ck, &d.x) - dot(&f.cf, &d.xf) - d.kappa);
        let mut xi = rhs.xi.clone();
        axpy(&mut xi, -1.0, &d.x);
        axpy(&mut xi, -1.0, &self.s.h(l, &d.z));
        let dkappa = rhs.dkappa - (self.tau * d.kappa + self.kappa * d.tau);
        Rhs {
            p,
            dk,
            df,
            g,
            xi,
            dkappa,
        }
    }

    fn solve(&self, rhs: &Rhs) -> Dir {
        let mut d = self.solve_once(rhs);
        let size = |r: &Rhs| {
            norm(&r.p) + norm(&r.dk) + norm(&r.df) + r.g.abs() + norm(&r.xi) + r.dkappa.abs()
        };
        let base = size(rhs).max(1e-300);
        for _ in 0..3 {
            let res = self.residual(rhs, &d);
            if size(&res) <= 1e-13 * base {
                break;
            }
            let c = self.solve_once(&res);
            axpy(&mut d.x, 1.0, &c.x);
            axpy(&mut d.xf, 1.0, &c.xf);
            axpy(&mut d.y, 1.0, &c.y);
            axpy(&mut d.z, 1.0, &c.z);
            d.tau += c.tau;
            d.kappa += c.kappa;
        }
        d
    }
}

#[derive(Clone, Debug)]
struct Iterate {
    x: Vec<f64>,
    xf: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    tau: f64,
    kappa: f64,
}

#[derive(Clone, Copy, Debug, Default)]
struct Metrics {
    pres: f64,
    dres: f64,
    pobj: f64,
    dobj: f64,
    gap: f64,
    relgap: f64,
}

impl Metrics {
    fn score(&self, tol: &Tolerances) -> f64 {
        (self.pres / tol.feasibility)
            .max(self.dres / tol.feasibility)
            .max(self.relgap / tol.gap)
    }
}

fn metrics(form: &Form, it: &Iterate) -> Metrics {
    let t = it.tau;
    let mut rp = form.a_mul(&it.x, &it.xf);
    axpy(&mut rp, -t, &form.b);
    // primal residual in the caller's row scaling
    let rp_orig: Vec<f64> = rp.iter().zip(&form.row_scale).map(|(r, d)| r / d).collect();
    let b_orig: Vec<f64> = form.b.iter().zip(&form.row_scale).map(|(b, d)| b / d).collect();
    let mut rdk: Vec<f64> = form.ck.iter().map(|c| c * t).collect();
    axpy(&mut rdk, -1.0, &form.ak.mul_t(&it.y));
    axpy(&mut rdk, -1.0, &it.z);
    let mut rdf: Vec<f64> = form.cf.iter().map(|c| c * t).collect();
    if form.nf > 0 {
        axpy(&mut rdf, -1.0, &form.af.matvec_t(&it.y));
    }
    let cnorm = (norm(&form.ck).powi(2) + norm(&form.cf).powi(2)).sqrt();
    let pobj = (dot(&form.ck, &it.x) + dot(&form.cf, &it.xf)) / t;
    let dobj = dot(&form.b, &it.y) / t;
    let gap = dot(&it.x, &it.z) / (t * t);
    let relgap = gap.abs().max((pobj - dobj).abs()) / (1.0 + pobj.abs().min(dobj.abs()));
    Metrics {
        pres: norm(&rp_orig) / t / (1.0 + norm(&b_orig)),
        dres: (norm(&rdk).powi(2) + norm(&rdf).powi(2)).sqrt() / t / (1.0 + cnorm),
        pobj,
        dobj,
        gap,
        relgap,
    }
}

/// Solves a block SDP. Invalid problem data is an error; every numerical
/// outcome is reported through [`SdpStatus`].
pub fn solve(prob: &SdpProblem, tol: &Tolerances) -> Result<SdpSolution> {
    prob.validate()?;
    let pre = presolve(prob);
    let m_orig = prob.constraints().len();
    if let Some(ray) = pre.inconsistency {
        return Ok(empty_solution(prob, SdpStatus::Infeasible, ray, 0));
    }
    let form = Form::build(&pre.problem);
    let layout = &form.layout;
    let nu = layout.degree() as f64;
    let e = layout.identity();
    let mut it = Iterate {
        x: e.clone(),
        xf: vec![0.0; form.nf],
        y: vec![0.0; form.m],
        z: e.clone(),
        tau: 1.0,
        kappa: 1.0,
    };
    let mut best: Option<(f64, Iterate, Metrics)> = None;
    let mut status = SdpStatus::NumericalFailure;
    let mut iterations = 0;
    let mut stalls = 0;
    let mut final_metrics = metrics(&form, &it);
    for iter in 0..=tol.max_iterations {
        iterations = iter;
        let mt = metrics(&form, &it);
        final_metrics = mt;
        let score = mt.score(tol);
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, it.clone(), mt));
        }
        if mt.pres <= tol.feasibility && mt.dres <= tol.feasibility && mt.relgap <= tol.gap {
            status = SdpStatus::Optimal;
            break;
        }
        // infeasibility certificates
        let by = dot(&form.b, &it.y);
        let cx = dot(&form.ck, &it.x) + dot(&form.cf, &it.xf);
        if by > 0.0 {
            let mut r = form.ak.mul_t(&it.y);
            axpy(&mut r, 1.0, &it.z);
            let rf = if form.nf > 0 { form.af.matvec_t(&it.y) } else { Vec::new() };
            let res = (norm(&r).powi(2) + norm(&rf).powi(2)).sqrt();
            if res <= tol.feasibility * by {
                status = SdpStatus::Infeasible;
                break;
            }
        }
        if cx < 0.0 {
            let res = norm(&form.a_mul(&it.x, &it.xf));
            if res <= tol.feasibility * (-cx) {
                status = SdpStatus::Unbounded;
                break;
            }
        }
        if iter == tol.max_iterations {
            break;
        }
        let mu = (dot(&it.x, &it.z) + it.tau * it.kappa) / (nu + 1.0);
        if !(mu > 1e-300) || stalls >= 5 {
            break;
        }
        let s = match Scaling::compute(layout, &it.x, &it.z) {
            Ok(s) => s,
            Err(_) => break,
        };
        let newton = match Newton::new(&form, &s, it.tau, it.kappa) {
            Some(n) => n,
            None => break,
        };
        let lambda = s.lambda(layout);

        let mut rp = form.a_mul(&it.x, &it.xf);
        axpy(&mut rp, -it.tau, &form.b);
        let mut rdk: Vec<f64> = form.ck.iter().map(|c| c * it.tau).collect();
        axpy(&mut rdk, -1.0, &form.ak.mul_t(&it.y));
        axpy(&mut rdk, -1.0, &it.z);
        let mut rdf: Vec<f64> = form.cf.iter().map(|c| c * it.tau).collect();
        if form.nf > 0 {
            axpy(&mut rdf, -1.0, &form.af.matvec_t(&it.y));
        }
        let rg = dot(&form.b, &it.y) - dot(&form.ck, &it.x) - dot(&form.cf, &it.xf) - it.kappa;
        let scaled = |eta: f64, xi: Vec<f64>, dkappa: f64| Rhs {
            p: rp.iter().map(|v| -eta * v).collect(),
            dk: rdk.iter().map(|v| -eta * v).collect(),
            df: rdf.iter().map(|v| -eta * v).collect(),
            g: -eta * rg,
            xi,
            dkappa,
        };

        // predictor
        let aff = newton.solve(&scaled(1.0, it.x.iter().map(|v| -v).collect(), -it.tau * it.kappa));
        let ws_a = s.winv_t(layout, &aff.x);
        let wz_a = s.w(layout, &aff.z);
        let alpha_a = match step_length(&s, layout, &ws_a, &wz_a, &it, &aff) {
            Some(a) => a.min(1.0),
            None => break,
        };
        let sigma = (1.0 - alpha_a).powi(3).clamp(0.0, 1.0);

        // corrector
        let mut ds = layout.jordan(&lambda, &lambda);
        ds.iter_mut().for_each(|v| *v = -*v);
        let corr = layout.jordan(&ws_a, &wz_a);
        axpy(&mut ds, -1.0, &corr);
        axpy(&mut ds, sigma * mu, &e);
        let xi = s.wt(layout, &s.lambda_solve(layout, &ds));
        let dkappa = -it.tau * it.kappa - aff.tau * aff.kappa + sigma * mu;
        let dir = newton.solve(&scaled(1.0 - sigma, xi, dkappa));
        let ws = s.winv_t(layout, &dir.x);
        let wz = s.w(layout, &dir.z);
        let alpha_max = match step_length(&s, layout, &ws, &wz, &it, &dir) {
            Some(a) => a,
            None => break,
        };
        let mut alpha = (0.99 * alpha_max).min(1.0);
        if alpha < 1e-8 {
            stalls += 1;
        } else {
            stalls = 0;
        }
        // keep the iterate strictly interior
        let mut next = advance(&it, &dir, alpha);
        let mut tries = 0;
        while Scaling::compute(layout, &next.x, &next.z).is_err() && tries < 20 {
            alpha *= 0.5;
            next = advance(&it, &dir, alpha);
            tries += 1;
        }
        debug!(
            "sdp it {iter:3} pres {:.2e} dres {:.2e} gap {:.2e} pobj {:.6e} dobj {:.6e} tau {:.2e} kappa {:.2e} alpha {:.3}",
            mt.pres, mt.dres, mt.relgap, mt.pobj, mt.dobj, it.tau, it.kappa, alpha
        );
        it = next;
    }

    if status == SdpStatus::NumericalFailure {
        if let Some((_, b, m)) = best {
            it = b;
            final_metrics = m;
        }
    }

    let mut sol = match status {
        SdpStatus::Infeasible => {
            let by = dot(&form.b, &it.y);
            let ray: Vec<f64> = it.y.iter().map(|v| v / by).collect();
            let mut s = empty_solution(prob, status, expand_dual(&form, &pre.kept, m_orig, &ray), iterations);
            s.dual_slack = unpack(&form, prob, &it.z.iter().map(|v| v / by).collect::<Vec<_>>(), &[], true);
            s
        }
        SdpStatus::Unbounded => {
            let cx = -(dot(&form.ck, &it.x) + dot(&form.cf, &it.xf));
            let xs: Vec<f64> = it.x.iter().map(|v| v / cx).collect();
            let xf: Vec<f64> = it.xf.iter().map(|v| v / cx).collect();
            let mut s = empty_solution(prob, status, vec![0.0; m_orig], iterations);
            s.primal = unpack(&form, prob, &xs, &xf, false);
            s
        }
        _ => {
            let t = it.tau;
            let xs: Vec<f64> = it.x.iter().map(|v| v / t).collect();
            let xf: Vec<f64> = it.xf.iter().map(|v| v / t).collect();
            let ys: Vec<f64> = it.y.iter().map(|v| v / t).collect();
            let zs: Vec<f64> = it.z.iter().map(|v| v / t).collect();
            SdpSolution {
                status,
                primal: unpack(&form, prob, &xs, &xf, false),
                dual_slack: unpack(&form, prob, &zs, &[], true),
                dual: expand_dual(&form, &pre.kept, m_orig, &ys),
                primal_objective: final_metrics.pobj,
                dual_objective: final_metrics.dobj,
                gap: final_metrics.gap,
                primal_residual: final_metrics.pres,
                dual_residual: final_metrics.dres,
                iterations,
            }
        }
    };
    if sol.status == SdpStatus::Optimal {
        if let Some(ray) = &form.free_ray {
            // feasible with a free descent direction
            sol.status = SdpStatus::Unbounded;
            let mut xf = vec![0.0; form.free_total];
            for &(j, v) in ray {
                xf[j] = v;
            }
            let zeros = vec![0.0; form.layout.len];
            sol.primal = unpack_full_free(&form, prob, &zeros, &xf);
        }
    }
    Ok(sol)
}

fn advance(it: &Iterate, d: &Dir, a: f64) -> Iterate {
    let mut n = it.clone();
    axpy(&mut n.x, a, &d.x);
    axpy(&mut n.xf, a, &d.xf);
    axpy(&mut n.y, a, &d.y);
    axpy(&mut n.z, a, &d.z);
    n.tau += a * d.tau;
    n.kappa += a * d.kappa;
    n
}

fn step_length(s: &Scaling, layout: &ConeLayout, ws: &[f64], wz: &[f64], it: &Iterate, d: &Dir) -> Option<f64> {
    let ax = s.max_step(layout, ws).ok()?;
    let az = s.max_step(layout, wz).ok()?;
    let mut a = ax.min(az);
    if d.tau < 0.0 {
        a = a.min(-it.tau / d.tau);
    }
    if d.kappa < 0.0 {
        a = a.min(-it.kappa / d.kappa);
    }
    if a.is_nan() {
        return None;
    }
    Some(a)
}

fn expand_dual(form: &Form, kept: &[usize], m_orig: usize, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m_orig];
    for (k, &r) in kept.iter().enumerate() {
        out[r] = y[k] * form.row_scale[k];
    }
    out
}

fn unpack(form: &Form, prob: &SdpProblem, cone: &[f64], free_kept: &[f64], dual: bool) -> Vec<BlockValue> {
    let mut xf = vec![0.0; form.free_total];
    if !dual {
        for (k, &j) in form.free_keep.iter().enumerate() {
            xf[j] = free_kept.get(k).copied().unwrap_or(0.0);
        }
    }
    unpack_full_free(form, prob, cone, &xf)
}

fn unpack_full_free(form: &Form, prob: &SdpProblem, cone: &[f64], xf: &[f64]) -> Vec<BlockValue> {
    prob.blocks()
        .iter()
        .zip(&form.slots)
        .map(|(b, slot)| match *slot {
            Slot::Cone(cb) => {
                let blk = form.layout.blocks[cb];
                let v = &cone[blk.offset..blk.offset + blk.len];
                match blk.kind {
                    ConeKind::Psd(n) => BlockValue::Matrix(mat(n, v)),
                    ConeKind::Nonneg => BlockValue::Vector(v.to_vec()),
                }
            }
            Slot::Free(off) => BlockValue::Vector(xf[off..off + b.size].to_vec()),
        })
        .collect()
}

fn empty_solution(prob: &SdpProblem, status: SdpStatus, dual: Vec<f64>, iterations: usize) -> SdpSolution {
    let zeros: Vec<BlockValue> = prob
        .blocks()
        .iter()
        .map(|b| match b.kind {
            BlockKind::Psd => BlockValue::Matrix(Matrix::zeros(b.size, b.size)),
            _ => BlockValue::Vector(vec![0.0; b.size]),
        })
        .collect();
    SdpSolution {
        status,
        primal: zeros.clone(),
        dual_slack: zeros,
        dual,
        primal_objective: f64::NAN,
        dual_objective: f64::NAN,
        gap: f64::NAN,
        primal_residual: f64::NAN,
        dual_residual: f64::NAN,
        iterations,
    }
}
