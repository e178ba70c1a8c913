use log::{debug, warn};

use super::bisect::bisect;
use super::programs::{
    composite_level_program, containment_program, derivative_program, is_sos, nu_program, row_program,
    solve_clean, SubspaceData,
};
use super::{PartialCertificate, PartialProblem, Schedule};
use crate::error::{Error, Result};
use crate::numerics::min_eigenvalue;
use crate::poly::Monomial;
use crate::{Matrix, Poly};

/// Witnesses of one feasible level.
#[derive(Clone, Debug)]
pub struct InnerResult {
    pub gamma: f64,
    pub s: Poly,
    pub y: Poly,
}

#[derive(Clone, Debug)]
pub struct NuStep {
    pub v: Poly,
    pub nu: f64,
    pub stalled: bool,
}

/// Upper end of the level search: `V` at the nearest known non-converging
/// point of the subspace.
fn level_ceiling(v: &Poly, probe: &[Vec<f64>], fallback: f64) -> f64 {
    probe.iter().map(|x| v.eval(x)).fold(f64::INFINITY, f64::min).min(fallback).max(0.0)
}

fn failed(prob: &PartialProblem<'_>, reason: impl Into<String>) -> Error {
    Error::SynthesisFailed {
        subset: prob.subset.label(),
        reason: reason.into(),
    }
}

/// Largest level `γ` for which `{V ≤ γ − ν|x|²}` is certified invariant and
/// inside the composite region, by bisection over feasibility programs.
///
/// `known` is a level already certified for this `V` (with witnesses); it is
/// accepted without re-solving.
pub fn inner_maximize_gamma(
    prob: &PartialProblem<'_>,
    data: &SubspaceData,
    v: &Poly,
    nu: f64,
    gamma_c: f64,
    known: Option<&InnerResult>,
    schedule: &Schedule,
) -> Result<Option<InnerResult>> {
    let lo = known.map_or(0.0, |k| k.gamma);
    let hi = level_ceiling(v, &prob.probe, 1e3 * gamma_c.max(1e-6)).max(lo);
    let tol = (schedule.tol_gamma_rel * hi).max(1e-12);
    let found = bisect(lo, hi, tol, |gamma| {
        if let Some(k) = known.filter(|k| k.gamma == gamma) {
            return Ok(Some(k.clone()));
        }
        let (prog, y) = derivative_program(data, v, gamma, schedule.eps);
        let Some(sol) = solve_clean(&prog, &schedule.sdp) else {
            return Ok(None);
        };
        let y = sol.poly(y).clone();
        let (prog, s) = containment_program(data, v, gamma, nu, gamma_c);
        let Some(sol) = solve_clean(&prog, &schedule.sdp) else {
            return Ok(None);
        };
        Ok(Some(InnerResult { gamma, s: sol.poly(s).clone(), y }))
    })?;
    Ok(found.map(|(_, w)| w))
}

/// `min ν` over `V` with `γ` and the multipliers fixed. An infeasible or failed
/// program keeps the previous function and reports a stall.
pub fn outer_minimize_nu(
    data: &SubspaceData,
    inner: &InnerResult,
    v: &Poly,
    nu: f64,
    gamma_c: f64,
    schedule: &Schedule,
) -> NuStep {
    let keep = |stalled| NuStep {
        v: v.clone(),
        nu,
        stalled,
    };
    if nu <= 0.0 {
        return keep(false);
    }
    let np = nu_program(data, schedule.degree, &inner.s, &inner.y, inner.gamma, gamma_c, schedule.eps);
    let Some(sol) = solve_clean(&np.prog, &schedule.sdp) else {
        return keep(true);
    };
    let new_nu = sol.scalar(np.nu).max(0.0);
    if new_nu > nu {
        return keep(true);
    }
    let mut out = Poly::zero(data.dim);
    for (c, m) in &np.coefficients {
        let val = sol.scalar(*c);
        if val != 0.0 {
            out.add_term(m.clone(), val);
        }
    }
    NuStep {
        v: out,
        nu: new_nu,
        stalled: false,
    }
}

/// Largest composite level up to `cap` whose derivative condition holds on the
/// subspace.
fn certify_gamma_c(data: &SubspaceData, cap: f64, schedule: &Schedule) -> Result<Option<(f64, Poly)>> {
    let solve = |g: f64| -> Result<Option<Poly>> {
        let (prog, l) = composite_level_program(data, g, schedule.eps);
        Ok(solve_clean(&prog, &schedule.sdp).map(|s| s.poly(l).clone()))
    };
    if let Some(l) = solve(cap)? {
        return Ok(Some((cap, l)));
    }
    let floor = 1e-3 * cap;
    let Some(l) = solve(floor)? else {
        return Ok(None);
    };
    let tol = schedule.tol_gamma_rel * cap;
    let found = bisect(floor, cap, tol, |g| if g == floor { Ok(Some(l.clone())) } else { solve(g) })?;
    Ok(found)
}

/// Smallest eigenvalue of the quadratic part of `v` over `vars`.
fn curvature(v: &Poly, vars: &[usize]) -> f64 {
    let dim = v.dim();
    let q = Matrix::from_fn(vars.len(), vars.len(), |a, b| {
        let mut e = vec![0u8; dim];
        e[vars[a]] += 1;
        e[vars[b]] += 1;
        let c = v.coefficient(&Monomial::from_exponents(e));
        if a == b {
            c
        } else {
            0.5 * c
        }
    });
    min_eigenvalue(&q).unwrap_or(0.0)
}

/// Alternates level maximization and slack minimization for one subset.
///
/// `v_init` is the starting function; only its subset part is used.
pub fn synthesize_partial(
    prob: &PartialProblem<'_>,
    v_init: &Poly,
    schedule: &Schedule,
) -> Result<PartialCertificate> {
    let data = SubspaceData::new(prob);
    let keep = |i: usize| prob.subset.contains_var(i);
    let mut v = v_init.restrict(keep);
    if v.is_zero() {
        return Err(failed(prob, "initial function vanishes on the subset"));
    }

    let mut gamma_c_cap = prob.gamma_c;
    let mut attempt = 0;
    let (gamma_c, l, mut inner) = loop {
        let Some((gamma_c, l)) = certify_gamma_c(&data, gamma_c_cap, schedule)? else {
            return Err(failed(prob, "composite derivative is not negative on any sub-level set"));
        };
        let nu0 = schedule.nu0_frac * curvature(&v, &data.vars).max(0.0);
        match inner_maximize_gamma(prob, &data, &v, nu0, gamma_c, None, schedule)? {
            Some(r) => break (gamma_c, l, (r, nu0)),
            None if attempt == 0 => {
                warn!("subset {}: no certified level, halving the composite level", prob.subset.label());
                gamma_c_cap *= 0.5;
                attempt += 1;
            }
            None => return Err(failed(prob, "no level set is certified at γ = 0")),
        }
    };
    let mut stalled = false;
    let mut history = vec![(inner.0.gamma, inner.1)];
    for sweep in 1..schedule.sweep_cap {
        let (result, nu) = &inner;
        let step = outer_minimize_nu(&data, result, &v, *nu, gamma_c, schedule);
        stalled |= step.stalled;
        if step.stalled {
            debug!("subset {}: slack step stalled at sweep {sweep}", prob.subset.label());
            break;
        }
        let prev = result.gamma;
        v = step.v;
        let known = InnerResult {
            gamma: prev,
            ..result.clone()
        };
        let next = inner_maximize_gamma(prob, &data, &v, step.nu, gamma_c, Some(&known), schedule)?
            .unwrap_or(known);
        history.push((next.gamma, step.nu));
        let converged = (next.gamma - prev).abs() <= schedule.tol_gamma_rel * next.gamma.max(1e-12)
            && step.nu <= schedule.tol_nu;
        inner = (next, step.nu);
        if converged {
            break;
        }
    }
    let (result, nu) = inner;

    let peer_gammas: Vec<f64> = prob.peers.iter().map(|p| p.gamma).collect();
    let rp = row_program(&data, prob.index, &v, result.gamma, &peer_gammas, schedule.eps);
    let Some(sol) = solve_clean(&rp.prog, &schedule.sdp) else {
        return Err(failed(prob, "comparison rows are infeasible at the certified level"));
    };
    let big_l = prob.n_subsets();
    let mut row_d = vec![0.0; big_l];
    for (r, d) in rp.d.iter().enumerate() {
        if let Some(d) = d {
            row_d[r] = sol.scalar(*d).max(0.0);
        }
    }
    let t = sol.scalar(rp.t).max(0.0);
    let beta = sol.scalar(rp.beta).max(0.0);
    row_d[prob.index] = -row_d.iter().sum::<f64>() - t;
    let mut row_b = vec![0.0; big_l];
    row_b[prob.index] = beta;
    let row_a: Vec<f64> = row_d.iter().zip(&row_b).map(|(d, b)| d + b).collect();

    let mut multipliers = vec![
        ("s".to_string(), result.s.clone()),
        ("q".to_string(), Poly::constant(data.dim, 1.0)),
        ("l".to_string(), l),
        ("y".to_string(), result.y.clone()),
    ];
    for (r, z) in rp.z.iter().enumerate() {
        if let Some(z) = z {
            multipliers.push((format!("z{}", r + 1), sol.poly(*z).clone()));
        }
    }

    let cert = PartialCertificate {
        index: prob.index,
        subset: prob.subset.clone(),
        v,
        gamma: result.gamma,
        nu,
        row_a,
        row_b,
        gamma_c,
        multipliers,
        stalled,
        history,
    };
    if !cert.rows_valid() {
        return Err(failed(prob, "row conditions violated"));
    }
    if !is_sos(&data, &cert.v, &schedule.sdp) {
        return Err(failed(prob, "partial function failed SOS re-verification"));
    }
    Ok(cert)
}
