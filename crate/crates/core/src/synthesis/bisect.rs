use crate::error::Result;

/// Largest `γ ∈ [lo, hi]` accepted by a downward-closed feasibility test, to
/// absolute tolerance `tol`, with the witness returned at that `γ`.
///
/// Returns `None` when `lo` itself is infeasible.
pub fn bisect<W>(
    lo: f64,
    hi: f64,
    tol: f64,
    mut feasible: impl FnMut(f64) -> Result<Option<W>>,
) -> Result<Option<(f64, W)>> {
    let Some(mut best) = feasible(lo)? else {
        return Ok(None);
    };
    let (mut lo, mut hi) = (lo, hi.max(lo));
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match feasible(mid)? {
            Some(w) => {
                lo = mid;
                best = w;
            }
            None => hi = mid,
        }
    }
    Ok(Some((lo, best)))
}
