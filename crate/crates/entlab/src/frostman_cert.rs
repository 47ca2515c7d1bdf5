//! Frostman constants of atomic grid laws, computed as exact suprema over
//! windows of consecutive cells, and the implications between the
//! marginal, joint and conditional conditions.
//!
//! A window of `k` cells at level `N` is a ball of radius `k 2^-N / 2`.
//! Windows whose ends are not atoms only lose mass and gain length, so the
//! supremum is attained on windows spanning two atoms and is computed by
//! enumerating atom pairs. Below half a cell the condition fails for
//! atoms, so every certificate records its smallest radius.

use std::collections::BTreeMap;

use num::traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::dyadic_measure::pow2;
use crate::entropy_core::{conditional_entropy, entropy, EXACT_TOL};
use crate::pushforward::{linear_pair_push, sum_of_axes, Coeff};
use crate::rational::{self, Q};
use crate::{Dist, Error, Report, Result};

/// Largest atom count accepted by the rectangle enumeration.
pub const JOINT_ATOM_LIMIT: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertKind {
    Marginal,
    Joint,
    Conditional,
    /// Square windows at the summed exponent.
    Square,
}

/// Frostman constant of a grid law on the radius range
/// `[min_radius, max_radius]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrostmanCert {
    pub kind: CertKind,
    pub exponents: Vec<f64>,
    pub constant: f64,
    pub level: u32,
    pub min_radius: f64,
    pub max_radius: f64,
    /// Measured axis of a conditional certificate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<usize>,
    /// Window attaining the supremum: `[lo, hi]` per axis, plus the
    /// conditioning cell for conditional certificates.
    pub witness: Vec<i64>,
    pub method: String,
}

fn check_exponent(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("exponent {s} must lie in [0, 1]")))
    }
}

/// `(max(k, min_cells) w / 2)^-s` for `k = 0..=len`, with entry 0 unused.
/// A window narrower than `min_cells` is measured at the smallest
/// admissible radius, which gives the sup over radii `>= min_cells w / 2`.
fn inverse_radius_powers(len: usize, w: f64, s: f64, min_cells: usize) -> Vec<f64> {
    (0..=len).map(|k| ((k.max(min_cells).max(1) as f64) * w / 2.0).powf(-s)).collect()
}

/// Sup of `mass / (k w/2)^s` over windows of sorted atoms; returns the
/// constant and the attaining window.
fn window_sup(atoms: &[(i64, f64)], w: f64, s: f64) -> (f64, i64, i64) {
    window_sup_above(atoms, w, s, 1)
}

fn window_sup_above(atoms: &[(i64, f64)], w: f64, s: f64, min_cells: usize) -> (f64, i64, i64) {
    if atoms.is_empty() {
        return (0.0, 0, 0);
    }
    let span = (atoms[atoms.len() - 1].0 - atoms[0].0 + 1) as usize;
    let inv = inverse_radius_powers(span, w, s, min_cells);
    let mut best = (0.0, atoms[0].0, atoms[0].0);
    for i in 0..atoms.len() {
        let mut mass = 0.0;
        for j in i..atoms.len() {
            mass += atoms[j].1;
            let k = (atoms[j].0 - atoms[i].0 + 1) as usize;
            let ratio = mass * inv[k];
            if ratio > best.0 {
                best = (ratio, atoms[i].0, atoms[j].0);
            }
        }
    }
    best
}

fn atoms_1d(d: &Dist) -> Vec<(i64, f64)> {
    d.iter().map(|(c, m)| (c[0], m)).collect()
}

fn max_radius_1d(atoms: &[(i64, f64)], w: f64) -> f64 {
    match (atoms.first(), atoms.last()) {
        (Some(a), Some(b)) => (b.0 - a.0 + 1) as f64 * w / 2.0,
        _ => 0.0,
    }
}

/// Smallest `C` with `mu(B(x, r)) <= C r^s` for all radii from half a
/// cell up to the support diameter.
pub fn frostman_constant_1d(d: &Dist, s: f64) -> Result<FrostmanCert> {
    frostman_constant_1d_above(d, s, 1)
}

/// As [`frostman_constant_1d`], for radii from `min_cells` half cells up.
pub fn frostman_constant_1d_above(d: &Dist, s: f64, min_cells: usize) -> Result<FrostmanCert> {
    check_exponent(s)?;
    if d.dim() != 1 {
        return Err(Error::InvalidParameter("expected a one-axis law".into()));
    }
    let w = d.grid().cell_width();
    let atoms = atoms_1d(d);
    let (constant, lo, hi) = window_sup_above(&atoms, w, s, min_cells);
    Ok(FrostmanCert {
        kind: CertKind::Marginal,
        exponents: vec![s],
        constant,
        level: d.level(),
        min_radius: min_cells.max(1) as f64 * w / 2.0,
        max_radius: max_radius_1d(&atoms, w),
        axis: None,
        witness: vec![lo, hi],
        method: "exact sup over atom-spanning windows".into(),
    })
}

/// Joint certificate at `(s1, s2)` and square-window certificate at
/// `s1 + s2`, from one enumeration of atom-spanning rectangles.
pub fn joint_and_square_constants(d: &Dist, s1: f64, s2: f64) -> Result<(FrostmanCert, FrostmanCert)> {
    joint_and_square_above(d, s1, s2, 1)
}

fn joint_and_square_above(d: &Dist, s1: f64, s2: f64, min_cells: usize) -> Result<(FrostmanCert, FrostmanCert)> {
    check_exponent(s1)?;
    check_exponent(s2)?;
    if d.dim() != 2 {
        return Err(Error::InvalidParameter("expected a two-axis law".into()));
    }
    if d.len() > JOINT_ATOM_LIMIT {
        return Err(Error::Precondition(format!(
            "{} atoms exceed the rectangle enumeration limit {JOINT_ATOM_LIMIT}",
            d.len()
        )));
    }
    let w = d.grid().cell_width();
    let mut columns: BTreeMap<i64, Vec<(i64, f64)>> = BTreeMap::new();
    for (c, m) in d.iter() {
        columns.entry(c[0]).or_default().push((c[1], m));
    }
    let xs: Vec<i64> = columns.keys().copied().collect();
    let ymin = d.iter().map(|(c, _)| c[1]).min().unwrap_or(0);
    let ymax = d.iter().map(|(c, _)| c[1]).max().unwrap_or(0);
    let xspan = (xs.last().copied().unwrap_or(0) - xs.first().copied().unwrap_or(0) + 1) as usize;
    let yspan = (ymax - ymin + 1) as usize;
    let inv_x = inverse_radius_powers(xspan, w, s1, min_cells);
    let inv_y = inverse_radius_powers(yspan, w, s2, min_cells);
    let inv_sq = inverse_radius_powers(xspan.max(yspan), w, s1 + s2, min_cells);

    let mut best_joint = (0.0, vec![0; 4]);
    let mut best_square = (0.0, vec![0; 4]);
    for i in 0..xs.len() {
        let mut strip: BTreeMap<i64, f64> = BTreeMap::new();
        for j in i..xs.len() {
            for &(y, m) in &columns[&xs[j]] {
                *strip.entry(y).or_insert(0.0) += m;
            }
            let kx = (xs[j] - xs[i] + 1) as usize;
            let ys: Vec<(i64, f64)> = strip.iter().map(|(&y, &m)| (y, m)).collect();
            for a in 0..ys.len() {
                let mut mass = 0.0;
                for b in a..ys.len() {
                    mass += ys[b].1;
                    let ky = (ys[b].0 - ys[a].0 + 1) as usize;
                    let joint = mass * inv_x[kx] * inv_y[ky];
                    if joint > best_joint.0 {
                        best_joint = (joint, vec![xs[i], xs[j], ys[a].0, ys[b].0]);
                    }
                    let square = mass * inv_sq[kx.max(ky)];
                    if square > best_square.0 {
                        best_square = (square, vec![xs[i], xs[j], ys[a].0, ys[b].0]);
                    }
                }
            }
        }
    }
    let max_radius = xspan.max(yspan) as f64 * w / 2.0;
    let cert = |kind, exponents, (constant, witness): (f64, Vec<i64>), method: &str| FrostmanCert {
        kind,
        exponents,
        constant,
        level: d.level(),
        min_radius: min_cells.max(1) as f64 * w / 2.0,
        max_radius,
        axis: None,
        witness,
        method: method.into(),
    };
    Ok((
        cert(CertKind::Joint, vec![s1, s2], best_joint, "exact sup over atom-spanning rectangles"),
        cert(
            CertKind::Square,
            vec![s1 + s2],
            best_square,
            "exact sup over squares, via the longer side of atom-spanning rectangles",
        ),
    ))
}

/// Smallest `C` with `P(X in B(x,r1), Y in B(y,r2)) <= C r1^s1 r2^s2`.
pub fn joint_frostman_constant(d: &Dist, s1: f64, s2: f64) -> Result<FrostmanCert> {
    Ok(joint_and_square_constants(d, s1, s2)?.0)
}

/// As [`joint_frostman_constant`], for both radii from `min_cells` half
/// cells up.
pub fn joint_frostman_constant_above(d: &Dist, s1: f64, s2: f64, min_cells: usize) -> Result<FrostmanCert> {
    Ok(joint_and_square_above(d, s1, s2, min_cells)?.0)
}

/// Smallest `C` with `P(X_axis in B | other = y) <= C r^s` for every
/// conditioning cell `y`. Single conditioning cells suffice because both
/// sides are additive in the conditioning event.
pub fn conditional_frostman_constant(d: &Dist, s: f64, axis: usize) -> Result<FrostmanCert> {
    check_exponent(s)?;
    if d.dim() != 2 {
        return Err(Error::InvalidParameter("expected a two-axis law".into()));
    }
    if axis > 1 {
        return Err(Error::AxisOutOfRange { axis, dim: 2 });
    }
    let other = 1 - axis;
    let w = d.grid().cell_width();
    let mut slices: BTreeMap<i64, Vec<(i64, f64)>> = BTreeMap::new();
    for (c, m) in d.iter() {
        slices.entry(c[other]).or_default().push((c[axis], m));
    }
    let mut best = (0.0, vec![0; 3]);
    let mut max_radius: f64 = 0.0;
    for (&y, slice) in slices.iter_mut() {
        slice.sort_unstable_by_key(|&(x, _)| x);
        let total: f64 = slice.iter().map(|&(_, m)| m).sum();
        let (c, lo, hi) = window_sup(slice, w, s);
        let c = c / total;
        max_radius = max_radius.max(max_radius_1d(slice, w));
        if c > best.0 {
            best = (c, vec![lo, hi, y]);
        }
    }
    Ok(FrostmanCert {
        kind: CertKind::Conditional,
        exponents: vec![s],
        constant: best.0,
        level: d.level(),
        min_radius: w / 2.0,
        max_radius,
        axis: Some(axis),
        witness: best.1,
        method: "exact sup over conditioning cells and atom-spanning windows".into(),
    })
}

/// Every certificate of a two-axis law at `(s1, s2)` and the implications
/// between them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hierarchy {
    pub marginal_x: FrostmanCert,
    pub marginal_y: FrostmanCert,
    pub conditional_x: FrostmanCert,
    pub conditional_y: FrostmanCert,
    pub joint: FrostmanCert,
    pub square: FrostmanCert,
    pub reports: Vec<Report>,
}

/// Relative tolerance for comparisons between window suprema.
const CERT_TOL: f64 = 1e-9;

fn le_rel(name: &str, lhs: f64, rhs: f64) -> Report {
    Report::le(name, lhs, rhs, CERT_TOL * rhs.abs().max(1.0))
}

/// Checks, on the common window family:
/// conditional implies joint with the product constant, conditional
/// implies marginal, joint implies marginal with `R^s` where `R` is half
/// the box width, and joint implies the square condition at `s1 + s2`.
pub fn hierarchy_report(d: &Dist, s1: f64, s2: f64) -> Result<Hierarchy> {
    let marginal_x = frostman_constant_1d(&d.marginal(&[0])?, s1)?;
    let marginal_y = frostman_constant_1d(&d.marginal(&[1])?, s2)?;
    let conditional_x = conditional_frostman_constant(d, s1, 0)?;
    let conditional_y = conditional_frostman_constant(d, s2, 1)?;
    let (joint, square) = joint_and_square_constants(d, s1, s2)?;
    let bounds = d.grid().bounds();
    let rx = (bounds[0].1 - bounds[0].0) / 2.0;
    let ry = (bounds[1].1 - bounds[1].0) / 2.0;
    let reports = vec![
        le_rel(
            "joint <= conditional product",
            joint.constant,
            conditional_x.constant * conditional_y.constant,
        ),
        le_rel("marginal x <= conditional x", marginal_x.constant, conditional_x.constant),
        le_rel("marginal y <= conditional y", marginal_y.constant, conditional_y.constant),
        le_rel("marginal x <= joint R^s2", marginal_x.constant, joint.constant * ry.powf(s2)),
        le_rel("marginal y <= joint R^s1", marginal_y.constant, joint.constant * rx.powf(s1)),
        le_rel("square at s1+s2 <= joint", square.constant, joint.constant),
    ];
    Ok(Hierarchy {
        marginal_x,
        marginal_y,
        conditional_x,
        conditional_y,
        joint,
        square,
        reports,
    })
}

fn absf(v: &Q) -> f64 {
    rational::to_f64(&v.abs())
}

/// Factor by which a window certificate must be inflated to bound an
/// arbitrary interval of radius `rho >= w/2`: the atoms inside it span a
/// window of radius at most `2 rho`.
pub const LATTICE_FACTOR: f64 = 2.0;

fn ceil_cells(v: f64) -> usize {
    (v - 1e-12).ceil().max(1.0) as usize
}

/// Certificates of `aX + bY` and `(aX + bY, cX + dY)` against the
/// explicit constants obtained from the conditional constants of `(X, Y)`
/// at `(s1, s2)`.
///
/// Grid laws are atomic, so the bounds are checked on the radii where the
/// hypotheses apply. For `aX + bY` at `s2`, a window of `k` image cells
/// pulls back to an interval of length `k w / |b|`, whose atoms span at
/// most `k/|b| + 1` cells; the `+2` in the bound absorbs that once
/// `k >= |b| / (|a| + 1)`. The pair bound has no such slack in its
/// second factor, so it is checked with [`LATTICE_FACTOR`]`^(s1+s2)` and
/// image windows wide enough that every pulled-back radius is at least
/// half a cell.
pub fn check_linear_transform_frostman(d: &Dist, coeffs: [&Q; 4], s1: f64, s2: f64) -> Result<Vec<Report>> {
    let [a, b, c, dd] = coeffs;
    let det = a * dd - b * c;
    if det.is_zero() {
        return Err(Error::Precondition("ad - bc = 0".into()));
    }
    let c1 = conditional_frostman_constant(d, s1, 0)?.constant;
    let c2 = conditional_frostman_constant(d, s2, 1)?.constant;
    let (fa, fb, fc, fd, fdet) = (absf(a), absf(b), absf(c), absf(dd), rational::to_f64(&det.abs()));
    let level = d.level();
    let u = sum_of_axes(d, &[Coeff::Rational(a.clone()), Coeff::Rational(b.clone())], level)?.dist;
    let mut out = Vec::new();
    if !b.is_zero() {
        let cert = frostman_constant_1d_above(&u, s2, ceil_cells(fb / (fa + 1.0)))?;
        out.push(le_rel("aX+bY at s2", cert.constant, c2 * ((fa + 2.0) / fb).powf(s2)));
    }
    if !a.is_zero() {
        let cert = frostman_constant_1d_above(&u, s1, ceil_cells(fa / (fb + 1.0)))?;
        out.push(le_rel("aX+bY at s1", cert.constant, c1 * ((fb + 2.0) / fa).powf(s1)));
    }
    let pair = linear_pair_push(d, &[a.clone(), b.clone()], &[c.clone(), dd.clone()], level)?;
    let largest = [fa, fb, fc, fd].into_iter().fold(1.0f64, f64::max);
    let smallest = [fa, fb, fc, fd].into_iter().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    let min_cells = ceil_cells(largest.max(fdet / smallest));
    let lattice = LATTICE_FACTOR.powf(s1 + s2);
    if !(a * dd).is_zero() {
        let bound = lattice
            * c1
            * c2
            * (((fb + 2.0) / fa).powf(s1) * ((fc + fa) / fdet).powf(s2))
                .max(((fc + 2.0) / fd).powf(s2) * ((fd + fb) / fdet).powf(s1));
        let cert = joint_frostman_constant_above(&pair, s1, s2, min_cells)?;
        out.push(le_rel("pair jointly at (s1, s2)", cert.constant, bound));
    } else {
        // bc != 0: the same bound with the roles of X and Y exchanged.
        let bound = lattice
            * c1
            * c2
            * (((fa + 2.0) / fb).powf(s2) * ((fd + fb) / fdet).powf(s1))
                .max(((fd + 2.0) / fc).powf(s1) * ((fc + fa) / fdet).powf(s2));
        let cert = joint_frostman_constant_above(&pair, s2, s1, min_cells)?;
        out.push(le_rel("pair jointly at (s2, s1)", cert.constant, bound));
    }
    Ok(out)
}

fn check_scale(cert: &FrostmanCert, n: u32) -> Result<()> {
    if n > cert.level {
        return Err(Error::ScaleRange(format!(
            "level {n} is finer than the certificate level {}",
            cert.level
        )));
    }
    Ok(())
}

/// `H_n(Z) >= n s - log2 C`: every level-`n` cell is a window of radius
/// `2^-n / 2`, so its mass is at most `C 2^-ns`.
pub fn check_entropy_lower_bound(d: &Dist, cert: &FrostmanCert, n: u32) -> Result<Report> {
    if cert.kind != CertKind::Marginal || d.dim() != 1 {
        return Err(Error::InvalidParameter("expected a one-axis law and a marginal certificate".into()));
    }
    check_scale(cert, n)?;
    let s = cert.exponents[0];
    let h = entropy(&d.change_level(n));
    Ok(Report::ge("entropy_lower_bound", h, n as f64 * s - cert.constant.log2(), EXACT_TOL))
}

/// `H_n(X | Y) >= n s - log2 C` for a conditional certificate of the
/// measured axis.
pub fn check_conditional_entropy_lower_bound(d: &Dist, cert: &FrostmanCert, n: u32) -> Result<Report> {
    let axis = match (cert.kind, cert.axis) {
        (CertKind::Conditional, Some(axis)) => axis,
        _ => return Err(Error::InvalidParameter("expected a conditional certificate".into())),
    };
    check_scale(cert, n)?;
    let s = cert.exponents[0];
    let h = conditional_entropy(&d.change_level(n), &[1 - axis])?;
    Ok(Report::ge("conditional_entropy_lower_bound", h, n as f64 * s - cert.constant.log2(), EXACT_TOL))
}

/// `P(|Z - Z'| < r) <= C r^s` for independent one-axis `Z ~ d1`,
/// `Z' ~ d2` and every dyadic `r` from one cell up to the diameter.
pub fn check_small_distance(d1: &Dist, d2: &Dist, cert: &FrostmanCert) -> Result<Vec<Report>> {
    if d1.dim() != 1 || d2.dim() != 1 || d1.level() != d2.level() || cert.level != d1.level() {
        return Err(Error::InvalidParameter("expected one-axis laws at the certificate level".into()));
    }
    let s = cert.exponents[0];
    let level = d1.level();
    let (a, b) = (atoms_1d(d1), atoms_1d(d2));
    let span = a.iter().chain(&b).map(|x| x.0).max().unwrap_or(0) - a.iter().chain(&b).map(|x| x.0).min().unwrap_or(0);
    let mut out = Vec::new();
    let mut j: i64 = 1;
    while j <= span.max(1) {
        // |Z - Z'| < j 2^-N  iff  the cell gap is below j.
        let p: f64 = a
            .iter()
            .flat_map(|&(x, mx)| b.iter().filter(move |&&(y, _)| (x - y).abs() < j).map(move |&(_, my)| mx * my))
            .sum();
        let r = j as f64 * pow2(-(level as i32));
        out.push(le_rel(&format!("P(|Z-Z'| < {r})"), p, cert.constant * r.powf(s)));
        j *= 2;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::GridSpec;

    #[test]
    fn point_mass_at_zero_exponent() {
        let d = Dist::point(GridSpec::unit(1, 4), vec![3]).unwrap();
        assert_eq!(frostman_constant_1d(&d, 0.0).unwrap().constant, 1.0);
    }

    #[test]
    fn uniform_line_has_constant_two() {
        let d = Dist::uniform(GridSpec::unit(1, 10), (0..1024).map(|k| vec![k])).unwrap();
        let c = frostman_constant_1d(&d, 1.0).unwrap();
        assert!((c.constant - 2.0).abs() < 1e-9);
        let r = check_entropy_lower_bound(&d, &c, 10).unwrap();
        assert!(r.pass && (r.slack - 1.0).abs() < 1e-9);
    }

    #[test]
    fn window_sup_matches_naive_windows() {
        let atoms = vec![(0, 0.25), (2, 0.5), (3, 0.125), (7, 0.125)];
        let w = 1.0 / 8.0;
        for s in [0.0, 0.3, 0.7, 1.0] {
            let mut naive: f64 = 0.0;
            for lo in -2..10i64 {
                for hi in lo..10 {
                    let m: f64 = atoms.iter().filter(|a| a.0 >= lo && a.0 <= hi).map(|a| a.1).sum();
                    naive = naive.max(m / ((hi - lo + 1) as f64 * w / 2.0).powf(s));
                }
            }
            assert!((window_sup(&atoms, w, s).0 - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn product_hierarchy() {
        let u = Dist::uniform(GridSpec::unit(1, 3), (0..8).map(|k| vec![k])).unwrap();
        let d = u.product(&u);
        let h = hierarchy_report(&d, 0.5, 0.5).unwrap();
        assert!(h.reports.iter().all(|r| r.pass), "{:?}", h.reports);
        assert!((h.conditional_x.constant - h.marginal_x.constant).abs() < 1e-12);
        assert!(h.joint.constant <= h.marginal_x.constant * h.marginal_y.constant * (1.0 + 1e-12));
    }

    #[test]
    fn conditional_of_diagonal_is_point_mass() {
        let d = Dist::uniform(GridSpec::unit(2, 3), (0..8).map(|k| vec![k, k])).unwrap();
        let c = conditional_frostman_constant(&d, 0.5, 0).unwrap();
        assert!((c.constant - (1.0f64 / 16.0).powf(-0.5)).abs() < 1e-9);
    }

    #[test]
    fn linear_transforms() {
        let u = Dist::uniform(GridSpec::unit(1, 3), (0..8).map(|k| vec![k])).unwrap();
        let d = u.product(&u);
        let (one, zero, m1) = (rational::int(1), rational::int(0), rational::int(-1));
        for r in check_linear_transform_frostman(&d, [&one, &zero, &zero, &one], 0.5, 0.5).unwrap() {
            assert!(r.pass, "{r:?}");
        }
        for r in check_linear_transform_frostman(&d, [&one, &one, &one, &m1], 0.5, 0.5).unwrap() {
            assert!(r.pass, "{r:?}");
        }
        assert!(check_linear_transform_frostman(&d, [&one, &zero, &one, &zero], 0.5, 0.5).is_err());
    }

    #[test]
    fn small_distance_identical_uniforms() {
        let u = Dist::uniform(GridSpec::unit(1, 5), (0..32).map(|k| vec![k])).unwrap();
        let c = frostman_constant_1d(&u, 1.0).unwrap();
        assert!(check_small_distance(&u, &u, &c).unwrap().iter().all(|r| r.pass));
        let a = Dist::point(GridSpec::unit(1, 2), vec![0]).unwrap();
        let b = Dist::point(GridSpec::unit(1, 2), vec![3]).unwrap();
        let c = frostman_constant_1d(&a, 0.5).unwrap();
        let reps = check_small_distance(&a, &b, &c).unwrap();
        assert!(reps.iter().all(|r| r.lhs == 0.0 && r.pass));
    }
}
