//! Scale profiles and (k, α) order classification at query points.
//!
//! A distribution T is pointwise differentiable of order k at a when the
//! normalized residual r^{−n/q−k−i}|T−P|_{−i,q;a,r} vanishes as r → 0⁺ for
//! the best jet P of degree ≤ k, and of order (k, α) when the limsup with
//! the extra r^{−α} stays bounded. The classifier reads both off log-log
//! slopes of the residual over a dyadic scale ladder.

use serde::Serialize;

use crate::distribution::DistributionRep;
use crate::error::{JetscopeError, Result};
use crate::grid::Grid;
use crate::jet::Jet;
use crate::jets;
use crate::multi_index::enumerate_multiindices;
use crate::norms::NormSpec;
use crate::rescale::{scale_ladder, LADDER_DEPTH};

/// Decay-test threshold: an order-k residual counts as vanishing when its
/// log-log slope over the last four rungs is at least this.
pub const TAU_SLOPE: f64 = 0.25;
/// Default largest candidate degree.
pub const K_MAX: i64 = 4;
/// Minimum slope-fit quality before a classification is trusted.
pub const R2_MIN: f64 = 0.9;

/// Normalized residuals of the best degree-k jets along a scale ladder.
#[derive(Debug, Clone, Serialize)]
pub struct ScaleProfile {
    pub point: Vec<f64>,
    pub k: i64,
    pub i: usize,
    pub p: f64,
    pub ladder: Vec<f64>,
    /// |T−P_m|_{−i,q;a,r_m}.
    pub raw: Vec<f64>,
    /// r_m^{−n/q−k−i}·raw_m.
    pub normalized: Vec<f64>,
    #[serde(skip)]
    pub jets: Vec<Jet>,
}

/// One row of the per-scale classification table.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileRow {
    pub r: f64,
    pub k: i64,
    pub raw_residual: f64,
    pub normalized_residual: f64,
}

/// Classification outcome at one point.
#[derive(Debug, Clone, Serialize)]
pub struct OrderReport {
    pub point: Vec<f64>,
    pub k_star: i64,
    /// Hölder exponent in (0, 1]; always satisfies k_star + alpha_star ≥ 0.
    pub alpha_star: f64,
    /// Measured decay exceeded slope 1; α was clamped to 1.
    pub super_holder: bool,
    /// Slope fit R² below threshold — classification reported but not trusted.
    pub inconclusive: bool,
    pub r_squared: f64,
    /// Per-degree decay slope of the normalized residual (last four rungs).
    pub slopes: Vec<(i64, f64)>,
    pub table: Vec<ProfileRow>,
    #[serde(skip)]
    pub jet: Jet,
}

/// Dyadic ladder under B(a, ·) ⊂ box, truncated so the finest ball spans at
/// least 32 grid nodes per axis.
pub fn default_ladder(grid: &Grid, a: &[f64]) -> Result<Vec<f64>> {
    ladder_with_depth(grid, a, LADDER_DEPTH)
}

/// As [`default_ladder`], with an explicit number of dyadic halvings.
pub fn ladder_with_depth(grid: &Grid, a: &[f64], depth: usize) -> Result<Vec<f64>> {
    let h = (0..grid.dim)
        .map(|j| grid.spacing(j))
        .fold(f64::MIN, f64::max);
    let r0 = (0..grid.dim)
        .map(|j| (a[j] - grid.min[j]).min(grid.max[j] - a[j]))
        .fold(f64::INFINITY, f64::min);
    if r0 <= 0.0 {
        return Err(JetscopeError::BoundaryPoint);
    }
    let ladder: Vec<f64> = scale_ladder(r0, depth)
        .into_iter()
        .filter(|r| *r >= 16.0 * h)
        .collect();
    if ladder.len() < 5 {
        return Err(JetscopeError::NoConvergence(format!(
            "only {} resolvable ladder scales at a={a:?}, spacing {h:.3e}",
            ladder.len()
        )));
    }
    Ok(ladder)
}

/// Fit the best degree-k jet at every ladder scale and record the raw and
/// normalized dual-norm residuals.
pub fn residual_profile(
    t: &DistributionRep,
    a: &[f64],
    k: i64,
    spec: &NormSpec,
    ladder: &[f64],
) -> Result<ScaleProfile> {
    let n = t.grid.dim as f64;
    let q = spec.q();
    let mut raw = Vec::new();
    let mut normalized = Vec::new();
    let mut jets_out = Vec::new();
    for &r in ladder {
        let fit = jets::fit_jet_dual(t, a, r, k, spec)?;
        raw.push(fit.residual);
        normalized.push(r.powf(-n / q - k as f64 - spec.i as f64) * fit.residual);
        jets_out.push(fit.jet);
    }
    Ok(ScaleProfile {
        point: a.to_vec(),
        k,
        i: spec.i,
        p: spec.p,
        ladder: ladder.to_vec(),
        raw,
        normalized,
        jets: jets_out,
    })
}

/// Least-squares slope and R² of log v against log r over the last four
/// entries.
fn loglog_slope(rs: &[f64], vs: &[f64]) -> (f64, f64) {
    let n = rs.len().min(4);
    let rs = &rs[rs.len() - n..];
    let vs = &vs[vs.len() - n..];
    let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = vs.iter().map(|v| v.max(1e-300).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys.iter())
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, r2)
}

/// Residuals at or below this are quadrature noise; decay below the floor
/// counts as vanished regardless of the measured slope.
const RESIDUAL_FLOOR: f64 = 1e-9;

/// Pick (k_star, alpha_star) from per-degree profiles at one point. The
/// profiles must share the point and ladder and cover degrees −1..=k_max.
pub fn classify_order(profiles: &[ScaleProfile]) -> Result<OrderReport> {
    if profiles.is_empty() {
        return Err(JetscopeError::InvalidInput("no profiles supplied".into()));
    }
    let ladder = &profiles[0].ladder;
    if ladder.len() < 5 {
        return Err(JetscopeError::InvalidInput(format!(
            "classification needs ≥ 5 ladder points, got {}",
            ladder.len()
        )));
    }
    let a = profiles[0].point.clone();
    let n = a.len() as f64;
    let spec = NormSpec::new(profiles[0].i, profiles[0].p)?;
    let q = spec.q();

    let mut sorted: Vec<&ScaleProfile> = profiles.iter().collect();
    sorted.sort_by_key(|p| p.k);
    let mut slopes = Vec::new();
    let mut best: Option<&ScaleProfile> = None;
    for prof in &sorted {
        let (slope, _) = loglog_slope(&prof.ladder, &prof.normalized);
        let vanished = prof.normalized[prof.normalized.len() - 1] <= RESIDUAL_FLOOR;
        slopes.push((prof.k, slope));
        if slope >= TAU_SLOPE || vanished {
            best = Some(prof);
        }
    }

    let mut table = Vec::new();
    for prof in &sorted {
        for m in 0..prof.ladder.len() {
            table.push(ProfileRow {
                r: prof.ladder[m],
                k: prof.k,
                raw_residual: prof.raw[m],
                normalized_residual: prof.normalized[m],
            });
        }
    }

    let (k_star, alpha_raw, r_squared, jet) = match best {
        Some(prof) => {
            let (raw_slope, r2) = loglog_slope(&prof.ladder, &prof.raw);
            let alpha = raw_slope - (n / q + prof.k as f64 + spec.i as f64);
            let jet = prof.jets.last().unwrap().clone();
            // a residual at quadrature floor carries no slope information:
            // treat it as faster-than-Hölder decay
            let floored = prof.raw[prof.raw.len() - 1] <= RESIDUAL_FLOOR;
            (
                prof.k,
                if floored { 2.0 } else { alpha },
                if floored { 1.0 } else { r2 },
                jet,
            )
        }
        None => (-1, 1.0, 0.0, Jet::zero(a.clone())),
    };
    let super_holder = alpha_raw > 1.0;
    // Def-1.1 window: α ∈ (0,1] and k+α ≥ 0
    let lower = (-(k_star as f64)).max(f64::MIN_POSITIVE);
    let alpha_star = alpha_raw.clamp(lower, 1.0);
    let inconclusive = best.is_none() || r_squared < R2_MIN;
    Ok(OrderReport {
        point: a,
        k_star,
        alpha_star,
        super_holder,
        inconclusive,
        r_squared,
        slopes,
        table,
        jet,
    })
}

/// Convenience pipeline: profiles for k ∈ −1..=k_max at the default ladder,
/// then classify.
pub fn classify_at(
    t: &DistributionRep,
    a: &[f64],
    spec: &NormSpec,
    k_max: i64,
) -> Result<OrderReport> {
    classify_at_depth(t, a, spec, k_max, LADDER_DEPTH)
}

/// As [`classify_at`], with an explicit ladder depth.
pub fn classify_at_depth(
    t: &DistributionRep,
    a: &[f64],
    spec: &NormSpec,
    k_max: i64,
    depth: usize,
) -> Result<OrderReport> {
    let ladder = ladder_with_depth(&t.grid, a, depth)?;
    let mut profiles = Vec::new();
    for k in -1..=k_max {
        profiles.push(residual_profile(t, a, k, spec, &ladder)?);
    }
    classify_order(&profiles)
}

/// True when the order-k vanishing test passes for T at a.
pub fn order_at_least(t: &DistributionRep, a: &[f64], k: i64, spec: &NormSpec) -> Result<bool> {
    let ladder = default_ladder(&t.grid, a)?;
    let prof = residual_profile(t, a, k, spec, &ladder)?;
    let (slope, _) = loglog_slope(&prof.ladder, &prof.normalized);
    Ok(slope >= TAU_SLOPE || prof.normalized[prof.normalized.len() - 1] <= RESIDUAL_FLOOR)
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub point: Vec<f64>,
    pub m: usize,
    pub k: i64,
    /// Per top-order derivative D^ξT: whether order ≥ k was detected.
    pub derivative_orders: Vec<(String, bool)>,
    pub hypothesis_met: bool,
    /// Order ≥ k+m detected for T itself (only checked when the hypothesis
    /// holds).
    pub conclusion_holds: Option<bool>,
    pub pass: bool,
}

/// If every m-th derivative D^ξT has order ≥ k at a, T itself must have
/// order ≥ k+m there; when the hypothesis fails the report says so and makes
/// no assertion.
pub fn verify_criterion(
    t: &DistributionRep,
    a: &[f64],
    m: usize,
    k: i64,
    spec: &NormSpec,
) -> Result<CriterionReport> {
    let dim = t.grid.dim;
    let mut derivative_orders = Vec::new();
    let mut hypothesis_met = true;
    for xi in enumerate_multiindices(dim, m) {
        let mut d = t.clone();
        for (axis, &count) in xi.0.iter().enumerate() {
            for _ in 0..count {
                d = d.derivative(axis);
            }
        }
        let ok = order_at_least(&d, a, k, spec)?;
        hypothesis_met &= ok;
        derivative_orders.push((format!("{xi}"), ok));
    }
    let conclusion_holds = if hypothesis_met {
        Some(order_at_least(t, a, k + m as i64, spec)?)
    } else {
        None
    };
    let pass = conclusion_holds.unwrap_or(true);
    Ok(CriterionReport {
        point: a.to_vec(),
        m,
        k,
        derivative_orders,
        hypothesis_met,
        conclusion_holds,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RademacherReport {
    pub k: i64,
    pub sampled: usize,
    /// Points where order (k−1, 1) was detected.
    pub eligible: usize,
    /// Of those, points where order k was also detected.
    pub upgraded: usize,
    pub fraction: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Among sampled points where order (k−1, 1) holds, measure how often the
/// full order k holds too; almost-everywhere differentiability predicts a
/// fraction near one.
pub fn verify_rademacher(
    t: &DistributionRep,
    sample_points: &[Vec<f64>],
    k: i64,
    spec: &NormSpec,
    threshold: f64,
) -> Result<RademacherReport> {
    let _n = t.grid.dim as f64;
    let _q = spec.q();
    let mut eligible = 0usize;
    let mut upgraded = 0usize;
    for a in sample_points {
        let ladder = match default_ladder(&t.grid, a) {
            Ok(l) => l,
            Err(_) => continue,
        };
        // bounded (k−1, 1) limsup: the α=1-normalized residual must not grow
        let prof = residual_profile(t, a, k - 1, spec, &ladder)?;
        let with_alpha: Vec<f64> = prof
            .normalized
            .iter()
            .zip(prof.ladder.iter())
            .map(|(v, r)| v / r)
            .collect();
        let (slope_bounded, _) = loglog_slope(&prof.ladder, &with_alpha);
        let floored = prof.raw[prof.raw.len() - 1] <= RESIDUAL_FLOOR;
        if !(slope_bounded >= -TAU_SLOPE || floored) {
            continue;
        }
        eligible += 1;
        if order_at_least(t, a, k, spec)? {
            upgraded += 1;
        }
    }
    let fraction = if eligible == 0 {
        0.0
    } else {
        upgraded as f64 / eligible as f64
    };
    Ok(RademacherReport {
        k,
        sampled: sample_points.len(),
        eligible,
        upgraded,
        fraction,
        threshold,
        pass: eligible > 0 && fraction >= threshold,
    })
}

/// Seeded uniform sample of interior points with a margin from the box edge.
pub fn sample_interior_points(grid: &Grid, count: usize, seed: u64, margin: f64) -> Vec<Vec<f64>> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..grid.dim)
                .map(|j| rng.gen_range(grid.min[j] + margin..grid.max[j] - margin))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SampledField;

    fn dist_1d(n: usize, half: f64, f: impl Fn(f64) -> f64) -> DistributionRep {
        let g = Grid::symmetric(1, half, n).unwrap();
        DistributionRep::from_field(SampledField::from_fn(g, |x| f(x[0])).unwrap())
    }

    #[test]
    fn polynomial_profile_vanishes() {
        let t = dist_1d(1024, 1.0, |x| 1.0 + x - 2.0 * x * x);
        let spec = NormSpec::new(1, 2.0).unwrap();
        let ladder = default_ladder(&t.grid, &[0.0]).unwrap();
        let prof = residual_profile(&t, &[0.0], 2, &spec, &ladder).unwrap();
        for (m, eps) in prof.normalized.iter().enumerate() {
            assert!(*eps <= 1e-6, "m={m} eps={eps}");
        }
    }

    #[test]
    fn abs_profile_plateau_constant() {
        // k=0, i=0, p=2: normalized residual → r^{−1/2−0−0}·r^{3/2}/√6 at
        // the (0,1) normalization; with the extra r^{−1} it plateaus at 6^{−1/2}
        let t = dist_1d(4096, 1.0, |x| x.abs());
        let spec = NormSpec::new(0, 2.0).unwrap();
        let ladder = default_ladder(&t.grid, &[0.0]).unwrap();
        let prof = residual_profile(&t, &[0.0], 0, &spec, &ladder).unwrap();
        let last = prof.normalized.last().unwrap() / prof.ladder.last().unwrap();
        let expect = 1.0 / 6f64.sqrt();
        assert!(
            (last - expect).abs() < 0.05 * expect,
            "plateau {last} vs {expect}"
        );
    }

    #[test]
    fn smooth_classifies_top_order() {
        let t = dist_1d(2048, 1.0, |x| (1.3 * x).sin());
        let spec = NormSpec::new(1, 2.0).unwrap();
        let rep = classify_at(&t, &[0.1], &spec, 3).unwrap();
        assert_eq!(rep.k_star, 3, "slopes {:?}", rep.slopes);
        assert!((rep.alpha_star - 1.0).abs() < 1e-12);
        assert!(!rep.inconclusive, "r²={}", rep.r_squared);
    }

    #[test]
    fn abs_classifies_zero_one() {
        let t = dist_1d(4096, 1.0, |x| x.abs());
        let spec = NormSpec::new(0, 2.0).unwrap();
        let rep = classify_at(&t, &[0.0], &spec, 2).unwrap();
        assert_eq!(rep.k_star, 0, "slopes {:?}", rep.slopes);
        assert!((rep.alpha_star - 1.0).abs() < 0.1, "α={}", rep.alpha_star);
    }

    #[test]
    fn heaviside_classifies_minus_one_one() {
        let t = dist_1d(4096, 1.0, |x| if x < 0.0 { 0.0 } else { 1.0 });
        let spec = NormSpec::new(0, 2.0).unwrap();
        let rep = classify_at(&t, &[0.0], &spec, 2).unwrap();
        assert_eq!(rep.k_star, -1, "slopes {:?}", rep.slopes);
        assert!((rep.alpha_star - 1.0).abs() < 0.1, "α={}", rep.alpha_star);
    }

    #[test]
    fn downward_closure() {
        let t = dist_1d(4096, 1.0, |x| x * x.abs());
        let spec = NormSpec::new(0, 2.0).unwrap();
        let rep = classify_at(&t, &[0.0], &spec, 3).unwrap();
        assert!(rep.k_star >= 1, "slopes {:?}", rep.slopes);
        for k in -1..rep.k_star {
            assert!(
                order_at_least(&t, &[0.0], k, &spec).unwrap(),
                "order {k} failed below k_star={}",
                rep.k_star
            );
        }
    }

    #[test]
    fn i0_order_transfers_to_i1() {
        let spec0 = NormSpec::new(0, 2.0).unwrap();
        let spec1 = NormSpec::new(1, 2.0).unwrap();
        for f in [
            |x: f64| x.abs(),
            |x: f64| x * x.abs(),
            |x: f64| (2.0 * x).cos(),
        ] {
            let t = dist_1d(2048, 1.0, f);
            let rep0 = classify_at(&t, &[0.0], &spec0, 2).unwrap();
            if rep0.k_star >= 0 {
                assert!(
                    order_at_least(&t, &[0.0], rep0.k_star, &spec1).unwrap(),
                    "i=1 lost order {}",
                    rep0.k_star
                );
            }
        }
    }

    #[test]
    fn classification_is_scale_free() {
        let t = dist_1d(4096, 1.0, |x| x.abs());
        let spec = NormSpec::new(0, 2.0).unwrap();
        let full = default_ladder(&t.grid, &[0.0]).unwrap();
        let halved: Vec<f64> = full.iter().skip(1).copied().collect();
        let classify_with = |ladder: &[f64]| {
            let mut profiles = Vec::new();
            for k in -1..=2 {
                profiles.push(residual_profile(&t, &[0.0], k, &spec, ladder).unwrap());
            }
            classify_order(&profiles).unwrap()
        };
        let a = classify_with(&full);
        let b = classify_with(&halved);
        assert_eq!(a.k_star, b.k_star);
        assert!((a.alpha_star - b.alpha_star).abs() < 0.1);
    }

    #[test]
    fn criterion_xabsx_away_from_kink() {
        // D²(x|x|) = 2·sign has order 0 at a ≠ 0, so x|x| has order ≥ 2 there
        let t = dist_1d(2048, 2.0, |x| x * x.abs());
        let spec = NormSpec::new(1, 2.0).unwrap();
        let rep = verify_criterion(&t, &[0.8], 2, 0, &spec).unwrap();
        assert!(rep.hypothesis_met, "orders {:?}", rep.derivative_orders);
        assert_eq!(rep.conclusion_holds, Some(true));
        assert!(rep.pass);
    }

    #[test]
    fn criterion_abs_at_kink_hypothesis_unmet() {
        let t = dist_1d(2048, 1.0, |x| x.abs());
        let spec = NormSpec::new(1, 2.0).unwrap();
        let rep = verify_criterion(&t, &[0.0], 1, 0, &spec).unwrap();
        assert!(!rep.hypothesis_met, "orders {:?}", rep.derivative_orders);
        assert_eq!(rep.conclusion_holds, None);
        assert!(rep.pass, "no assertion is made when the hypothesis fails");
    }

    #[test]
    fn rademacher_abs() {
        let t = dist_1d(2048, 1.0, |x| x.abs());
        let spec = NormSpec::new(0, 2.0).unwrap();
        let pts = sample_interior_points(&t.grid, 60, 0x5eed, 0.5);
        let rep = verify_rademacher(&t, &pts, 1, &spec, 0.95).unwrap();
        assert!(rep.eligible > 0);
        assert!(rep.pass, "fraction {} of {}", rep.fraction, rep.eligible);
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = Grid::symmetric(1, 1.0, 64).unwrap();
        let a = sample_interior_points(&g, 10, 42, 0.1);
        let b = sample_interior_points(&g, 10, 42, 0.1);
        assert_eq!(a, b);
    }
}
