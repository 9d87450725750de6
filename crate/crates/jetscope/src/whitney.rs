//! Whitney-type cover of the complement of a closed set, a subordinate
//! partition of unity, and the gluing of local polyharmonic approximants
//! into a single comparison function.
//!
//! The scale function h(x) = (1/20) sup{ inf{1, dist(x, ℝⁿ∖T)} : T ∈ Φ }
//! with Φ = {ℝⁿ∖A} ∪ {U(a,δ) : a ∈ A} evaluates in closed form to
//! (1/20) max( min(1, dist(x,A)), min(1, (δ−dist(x,A))₊) ). It is
//! 1/20-Lipschitz, which forces the comparability 1/3 ≤ h(x)/h(s) ≤ 3
//! whenever B(s,10h(s)) meets B(x,10h(x)). Centers come from a greedy
//! Vitali selection on the grid lattice, radii descending, so the balls
//! B(s,h(s)) are pairwise disjoint and the dilates B(s,5h(s)) cover every
//! lattice node. Gluing forms w_δ = Σ_s ζ_s v_s with v_s the supplied local
//! solution on U(ξ(s), 120h(s)), for a decreasing δ-sequence, and reports
//! the measured decay of |D^j(u−v)|_{p;a,r} against the target exponent
//! n/p + λ + i − j.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{JetscopeError, Result};
use crate::field::SampledField;
use crate::grid::{Ball, Grid};
use crate::jets;
use crate::norms;
use crate::pde::{self, Rhs};
use crate::testfn::TestFunction;

/// Residuals below this count as identically zero when fitting decay slopes.
const ZERO_RESIDUAL: f64 = 1e-11;

/// The closed-form value of the defining sup/inf for the scale function.
pub fn scale_function(dist_to_a: f64, delta: f64) -> f64 {
    let inner = dist_to_a.min(1.0);
    let outer = (delta - dist_to_a).max(0.0).min(1.0);
    inner.max(outer) / 20.0
}

#[derive(Debug, Clone)]
pub struct WhitneyCover {
    pub grid: Grid,
    pub mask: Vec<bool>,
    pub delta: f64,
    /// Points of A (masked grid nodes).
    pub a_points: Vec<Vec<f64>>,
    /// dist(x, A) at every grid node.
    pub dist: SampledField,
    /// h(x) at every grid node.
    pub h: SampledField,
    /// Selected centers s ∈ S.
    pub centers: Vec<Vec<f64>>,
    /// Flat grid-node index of each center.
    pub center_nodes: Vec<usize>,
    /// h(s) per center.
    pub radii: Vec<f64>,
    /// Per grid node, the flat index of the nearest node of A.
    pub xi_node: Vec<usize>,
}

impl WhitneyCover {
    pub fn dist_to_a(&self, x: &[f64]) -> f64 {
        self.a_points
            .iter()
            .map(|a| dist(x, a))
            .fold(f64::INFINITY, f64::min)
    }

    /// h evaluated off-lattice, directly from the defining formula.
    pub fn h_at(&self, x: &[f64]) -> f64 {
        scale_function(self.dist_to_a(x), self.delta)
    }

    /// Nearest point of A to x.
    pub fn xi(&self, x: &[f64]) -> Vec<f64> {
        let mut best = 0usize;
        let mut bd = f64::INFINITY;
        for (k, a) in self.a_points.iter().enumerate() {
            let d = dist(x, a);
            if d < bd {
                bd = d;
                best = k;
            }
        }
        self.a_points[best].clone()
    }

    /// S_x = { s : B(s,10h(s)) ∩ B(x,10h(x)) ≠ ∅ }, as center indices.
    pub fn members_near(&self, x: &[f64]) -> Vec<usize> {
        let hx = self.h_at(x);
        (0..self.centers.len())
            .filter(|&k| dist(x, &self.centers[k]) <= 10.0 * (hx + self.radii[k]))
            .collect()
    }

    /// Centers and radii as CSV (one row per ball) for external plotting.
    pub fn to_csv(&self) -> String {
        let n = self.grid.dim;
        let mut out = String::new();
        for j in 0..n {
            out.push_str(&format!("center_{j},"));
        }
        out.push_str("radius\r\n");
        for (s, &r) in self.centers.iter().zip(self.radii.iter()) {
            for c in s {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!("{r}\r\n"));
        }
        out
    }
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Build the cover for the closed set given by `mask` (true = in A) at
/// parameter δ: the scale function h on the lattice, a greedy Vitali
/// selection of centers with radii h(s) descending, and the nearest-point
/// map ξ.
pub fn build_cover(grid: &Grid, mask: &[bool], delta: f64) -> Result<WhitneyCover> {
    if delta <= 0.0 {
        return Err(JetscopeError::InvalidInput(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let nn = grid.node_count();
    assert_eq!(mask.len(), nn, "mask length must match the grid");
    let a_flats: Vec<usize> = (0..nn).filter(|&f| mask[f]).collect();
    if a_flats.is_empty() {
        return Err(JetscopeError::EmptySet);
    }
    let a_points: Vec<Vec<f64>> = a_flats.iter().map(|&f| grid.point_flat(f)).collect();

    let mut dvals = vec![0.0f64; nn];
    let mut xi_node = vec![0usize; nn];
    for f in 0..nn {
        let x = grid.point_flat(f);
        let mut bd = f64::INFINITY;
        let mut ba = 0usize;
        for (k, a) in a_points.iter().enumerate() {
            let d = dist(&x, a);
            if d < bd {
                bd = d;
                ba = k;
            }
        }
        dvals[f] = bd;
        xi_node[f] = a_flats[ba];
    }
    let hvals: Vec<f64> = dvals.iter().map(|&d| scale_function(d, delta)).collect();

    // Greedy Vitali selection: lattice candidates by radius descending
    // (flat index breaks ties for determinism); accept a candidate iff its
    // ball B(c, h(c)) misses every accepted ball.
    let mut order: Vec<usize> = (0..nn).collect();
    order.sort_by(|&a, &b| hvals[b].total_cmp(&hvals[a]).then(a.cmp(&b)));
    let mut centers: Vec<Vec<f64>> = Vec::new();
    let mut center_nodes: Vec<usize> = Vec::new();
    let mut radii: Vec<f64> = Vec::new();
    for &c in &order {
        let x = grid.point_flat(c);
        let hc = hvals[c];
        let ok = centers
            .iter()
            .zip(radii.iter())
            .all(|(s, &hs)| dist(&x, s) >= hc + hs);
        if ok {
            centers.push(x);
            center_nodes.push(c);
            radii.push(hc);
        }
    }

    Ok(WhitneyCover {
        grid: grid.clone(),
        mask: mask.to_vec(),
        delta,
        a_points,
        dist: SampledField {
            grid: grid.clone(),
            values: dvals,
        },
        h: SampledField {
            grid: grid.clone(),
            values: hvals,
        },
        centers,
        center_nodes,
        radii,
        xi_node,
    })
}

#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    pub cover: WhitneyCover,
    /// Bump translates b_s supported exactly on B(s, 10h(s)).
    pub bumps: Vec<TestFunction>,
    /// Measured constants V_0, V_1, V_2 in |D^kζ_s(x)| ≤ V_k h(x)^{−k}.
    pub v_constants: Vec<f64>,
}

impl PartitionOfUnity {
    fn raw_sum(&self, x: &[f64]) -> f64 {
        self.bumps.iter().map(|b| b.eval(x)).sum()
    }

    /// ζ_s(x) = b_s(x) / Σ_t b_t(x).
    pub fn zeta(&self, s: usize, x: &[f64]) -> f64 {
        let b = self.bumps[s].eval(x);
        if b == 0.0 {
            return 0.0;
        }
        b / self.raw_sum(x)
    }

    /// Members with ζ_s(x) > 0, with their values; the values sum to 1
    /// wherever the local sum is nondegenerate.
    pub fn active(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let vals: Vec<(usize, f64)> = self
            .bumps
            .iter()
            .enumerate()
            .filter_map(|(k, b)| {
                let v = b.eval(x);
                (v > 0.0).then_some((k, v))
            })
            .collect();
        let total: f64 = vals.iter().map(|(_, v)| v).sum();
        vals.into_iter().map(|(k, v)| (k, v / total)).collect()
    }
}

/// Normalize bump translates on B(s, 10h(s)) into a partition of unity and
/// measure its derivative constants on a lattice subsample.
pub fn build_partition(cover: WhitneyCover) -> Result<PartitionOfUnity> {
    let grid = cover.grid.clone();
    let nn = grid.node_count();
    let bumps: Vec<TestFunction> = cover
        .centers
        .iter()
        .zip(cover.radii.iter())
        .map(|(s, &r)| TestFunction::bump_in(s.clone(), 10.0 * r))
        .collect();

    // Local sums at every node, accumulated per member over its support.
    let mut sums = vec![0.0f64; nn];
    for b in &bumps {
        for f in 0..nn {
            sums[f] += b.eval(&grid.point_flat(f));
        }
    }
    let min_sum = sums.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_sum < 1e-8 {
        return Err(JetscopeError::DegenerateSum(min_sum));
    }

    let part = PartitionOfUnity {
        cover,
        bumps,
        v_constants: Vec::new(),
    };
    let v_constants = measure_v_constants(&part);
    Ok(PartitionOfUnity {
        v_constants,
        ..part
    })
}

/// Max over sampled nodes and members of |D^kζ_s(x)| h(x)^k, k = 0, 1, 2,
/// with the usual multinomial-weighted derivative magnitude and central
/// differences at step h(x)/8.
fn measure_v_constants(part: &PartitionOfUnity) -> Vec<f64> {
    let grid = &part.cover.grid;
    let n = grid.dim;
    let nn = grid.node_count();
    let stride = (nn / 256).max(1);
    let mut v = vec![0.0f64; 3];
    for f in (0..nn).step_by(stride) {
        let x = grid.point_flat(f);
        let hx = part.cover.h.values[f];
        let e = hx / 8.0;
        for (s, _) in part.active(&x) {
            let z = |y: &[f64]| part.zeta(s, y);
            v[0] = v[0].max(z(&x).abs());
            let mut g2 = 0.0;
            for j in 0..n {
                let d1 = (z(&shift(&x, j, e)) - z(&shift(&x, j, -e))) / (2.0 * e);
                g2 += d1 * d1;
            }
            v[1] = v[1].max(g2.sqrt() * hx);
            let mut h2 = 0.0;
            for j in 0..n {
                let djj = (z(&shift(&x, j, e)) - 2.0 * z(&x) + z(&shift(&x, j, -e))) / (e * e);
                h2 += djj * djj;
                for l in (j + 1)..n {
                    let pp = z(&shift(&shift(&x, j, e), l, e));
                    let pm = z(&shift(&shift(&x, j, e), l, -e));
                    let mp = z(&shift(&shift(&x, j, -e), l, e));
                    let mm = z(&shift(&shift(&x, j, -e), l, -e));
                    let djl = (pp - pm - mp + mm) / (4.0 * e * e);
                    h2 += 2.0 * djl * djl;
                }
            }
            v[2] = v[2].max(h2.sqrt() * hx * hx);
        }
    }
    v
}

fn shift(x: &[f64], axis: usize, e: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[axis] += e;
    y
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeRow {
    pub j: usize,
    pub measured: f64,
    pub expected: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GlueReport {
    pub sample_point: Vec<f64>,
    pub deltas: Vec<f64>,
    pub ladder: Vec<f64>,
    /// residuals[j][m] = |D^j(u−v)|_{p; a, ladder[m]}.
    pub residuals: Vec<Vec<f64>>,
    pub slopes: Vec<SlopeRow>,
    pub empirical_delta: f64,
}

#[derive(Debug, Clone)]
pub struct GlueResult {
    pub v: SampledField,
    pub report: GlueReport,
}

/// A local-solution provider that replaces u inside each requested ball by
/// the polyharmonic function with the same boundary data: v = u − w where
/// Δ^i w = Δ^i u, w zero-boundary on the ball.
pub fn polyharmonic_replacements(
    u: &SampledField,
    i: usize,
) -> impl Fn(&[f64], f64) -> Result<SampledField> + '_ {
    let rhs = pde::fd_polylaplacian(u, i);
    move |a: &[f64], r: f64| {
        let ball = Ball::open(a.to_vec(), r);
        let w = pde::solve_polylaplacian(Rhs::Field(&rhs), &u.grid, &ball, i)?;
        Ok(u.add(&w.scale(-1.0)))
    }
}

/// A provider backed by a finite table of (center, radius, field) entries,
/// matched by nearest center within half a grid spacing and radius within
/// 10%. An empty table is an error on first use.
pub fn table_lookup(
    entries: Vec<(Vec<f64>, f64, SampledField)>,
    tol: f64,
) -> impl Fn(&[f64], f64) -> Result<SampledField> {
    move |a: &[f64], r: f64| {
        if entries.is_empty() {
            return Err(JetscopeError::EmptySet);
        }
        entries
            .iter()
            .find(|(c, rr, _)| dist(c, a) <= tol && (rr - r).abs() <= 0.1 * r)
            .map(|(_, _, f)| f.clone())
            .ok_or_else(|| {
                JetscopeError::InvalidInput(format!(
                    "no local solution tabulated for center {a:?}, radius {r}"
                ))
            })
    }
}

/// Glue local solutions v_{a,r} into one comparison function v near A.
///
/// Verifies the hypothesis inequalities at the sample point across a short
/// scale ladder — r^{−n/p−i}|u−P_a|_{p;a,r} ≤ γ for the best polynomial of
/// degree ≤ 2i+k−1, and r^{−n/p}|D^i(u−v_{a,r})|_{p;a,r} ≤ M r^λ — then
/// forms w_δ = Σ_s ζ_s v_s with v_s = v_{ξ(s),120h(s)} for a decreasing
/// δ-sequence, keeps the finest member as v, and reports the log-log decay
/// slope of |D^j(u−v)|_{p;a,r} against the target n/p+λ+i−j for j ≤ i.
pub fn glue(
    u: &SampledField,
    mask: &[bool],
    local: &dyn Fn(&[f64], f64) -> Result<SampledField>,
    kappa: f64,
    lambda: f64,
    i: usize,
    p: f64,
    m_bound: f64,
    gamma: f64,
) -> Result<GlueResult> {
    let grid = &u.grid;
    let n = grid.dim;
    if lambda < i as f64 || kappa <= 0.0 {
        return Err(JetscopeError::InvalidInput(format!(
            "need λ ≥ i and κ > 0, got λ={lambda}, i={i}, κ={kappa}"
        )));
    }
    let k = (lambda - i as f64).floor() as i64;
    let nn = grid.node_count();
    assert_eq!(mask.len(), nn, "mask length must match the grid");
    let a_flats: Vec<usize> = (0..nn).filter(|&f| mask[f]).collect();
    if a_flats.is_empty() {
        return Err(JetscopeError::EmptySet);
    }
    let sample = grid.point_flat(a_flats[a_flats.len() / 2]);

    // Hypothesis inequalities at the sample point, κ ladder.
    for m in 0..3 {
        let r = kappa / f64::powi(2.0, m);
        let ball = Ball::closed(sample.clone(), r);
        if !grid.contains_ball(&ball) {
            continue;
        }
        let fit = jets::fit_jet_lp(u, &sample, r, 2 * i as i64 + k - 1, p)?;
        let gm = r.powf(-(n as f64) / p - i as f64) * fit.residual;
        if gm > gamma * (1.0 + 1e-9) {
            return Err(JetscopeError::HypothesisUnverified {
                measured: gm,
                bound: gamma,
            });
        }
        let v_ar = local(&sample, r)?;
        let diff = u.add(&v_ar.scale(-1.0));
        let mm = r.powf(-(n as f64) / p - lambda) * norms::lp_norm_derivative(&diff, i, &ball, p)?;
        if mm > m_bound * 1.05 {
            return Err(JetscopeError::HypothesisUnverified {
                measured: mm,
                bound: m_bound,
            });
        }
    }

    // Decreasing δ-sequence, stopping when the lattice no longer resolves
    // the partition scale (bump widths are ~δ/2).
    let hmax = (0..n).map(|j| grid.spacing(j)).fold(0.0f64, f64::max);
    let mut deltas = Vec::new();
    let mut d = kappa / 18.0;
    while (d >= 20.0 * hmax || deltas.is_empty()) && deltas.len() < 8 {
        deltas.push(d);
        d /= 2.0;
    }
    let collar = kappa / 18.0;

    let mut v = u.clone();
    for &delta in &deltas {
        let cover = build_cover(grid, mask, delta)?;
        let part = build_partition(cover)?;
        let mut w = u.clone();
        let mut cache: HashMap<usize, SampledField> = HashMap::new();
        for f in 0..nn {
            if part.cover.dist.values[f] > collar {
                continue;
            }
            let x = grid.point_flat(f);
            let mut acc = 0.0;
            for (s, z) in part.active(&x) {
                if !cache.contains_key(&s) {
                    let xi = grid.point_flat(part.cover.xi_node[part.cover.center_nodes[s]]);
                    let r_s = 120.0 * part.cover.radii[s];
                    cache.insert(s, local(&xi, r_s)?);
                }
                acc += z * cache[&s].values[f];
            }
            w.values[f] = acc;
        }
        v = w;
    }

    // Decay report at the sample point: ladder below κ/72, clear of the
    // finest δ (the construction saturates at scale δ) and of the lattice.
    let delta_fine = *deltas.last().unwrap();
    let mut ladder = Vec::new();
    for m in 0..4 {
        let r = kappa / 72.0 * f64::powi(0.7, m);
        let ball = Ball::closed(sample.clone(), r);
        if grid.contains_ball(&ball) && r >= 6.0 * hmax {
            ladder.push(r);
        }
    }
    let diff = u.add(&v.scale(-1.0));
    let mut residuals = Vec::new();
    let mut slopes = Vec::new();
    let mut empirical_delta = 0.0f64;
    for j in 0..=i {
        let expected = n as f64 / p + lambda + i as f64 - j as f64;
        let mut row = Vec::new();
        for &r in &ladder {
            let ball = Ball::closed(sample.clone(), r);
            row.push(norms::lp_norm_derivative(&diff, j, &ball, p)?);
        }
        let clean: Vec<(f64, f64)> = ladder
            .iter()
            .zip(row.iter())
            .filter(|(&r, &v)| r >= 2.0 * delta_fine && v > ZERO_RESIDUAL)
            .map(|(&r, &v)| (r, v))
            .collect();
        let measured = if row.iter().all(|&v| v <= ZERO_RESIDUAL) {
            f64::INFINITY
        } else if clean.len() >= 2 {
            lsq_slope(&clean)
        } else {
            f64::NAN
        };
        for (r, val) in &clean {
            empirical_delta = empirical_delta.max(val / (m_bound * r.powf(expected)));
        }
        slopes.push(SlopeRow {
            j,
            measured,
            expected,
        });
        residuals.push(row);
    }

    Ok(GlueResult {
        v,
        report: GlueReport {
            sample_point: sample,
            deltas,
            ladder,
            residuals,
            slopes,
            empirical_delta,
        },
    })
}

fn lsq_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(r, v) in pts {
        let (x, y) = (r.ln(), v.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (m * sxy - sx * sy) / (m * sxx - sx * sx)
}
