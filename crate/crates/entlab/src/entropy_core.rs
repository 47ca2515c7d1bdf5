//! Shannon entropies (base 2) of grid laws and verifiers for the discrete
//! entropy identities and inequalities used throughout the library.
//!
//! Every `O(1)` in an inequality is instantiated with an explicit constant
//! that only decides pass/fail; the raw slack is always reported.

use std::collections::{BTreeMap, BTreeSet};

use num::bigint::BigInt;
use num::traits::{Signed, ToPrimitive, Zero};

use crate::bsg_construct::conditional_iid_extend;
use crate::pushforward::{sum_of_axes, Coeff};
use crate::rational::{self, Q};
use crate::{Cell, Dist, Error, Event, Report, Result};

/// Absolute tolerance for exact identities.
pub const EXACT_TOL: f64 = 1e-9;

/// Constant standing in for the `O(1)` of the small-mass bound.
pub const SMALL_MASS_CONSTANT: f64 = 2.0;

/// Constant standing in for the `O(1)` of the sum inequalities for three
/// independent variables.
pub const PLUNNECKE_CONSTANT: f64 = 2.0;

/// `-sum p log2 p` over the positive entries.
pub fn entropy_of_masses<I: IntoIterator<Item = f64>>(masses: I) -> f64 {
    let h: f64 = masses.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum();
    // -0.0 for point masses
    h.max(0.0)
}

pub fn entropy(d: &Dist) -> f64 {
    entropy_of_masses(d.iter().map(|(_, m)| m))
}

/// Law of `key(cell)` under `d`.
pub fn law_by<K: Ord>(d: &Dist, key: impl Fn(&[i64]) -> K) -> BTreeMap<K, f64> {
    let mut out = BTreeMap::new();
    for (cell, m) in d.iter() {
        *out.entry(key(cell)).or_insert(0.0) += m;
    }
    out
}

/// Entropy of `key(cell)` under `d`.
pub fn entropy_by<K: Ord>(d: &Dist, key: impl Fn(&[i64]) -> K) -> f64 {
    entropy_of_masses(law_by(d, key).into_values())
}

pub fn entropy_of_axes(d: &Dist, axes: &[usize]) -> Result<f64> {
    Ok(entropy(&d.marginal(axes)?))
}

fn complement(dim: usize, axes: &[usize]) -> Result<Vec<usize>> {
    let set: BTreeSet<usize> = axes.iter().copied().collect();
    if set.len() != axes.len() {
        return Err(Error::InvalidParameter("repeated axis".into()));
    }
    if let Some(&axis) = axes.iter().find(|&&a| a >= dim) {
        return Err(Error::AxisOutOfRange { axis, dim });
    }
    Ok((0..dim).filter(|a| !set.contains(a)).collect())
}

/// `H(rest | given)` computed fiberwise as `sum_y P(y) H(rest | Y = y)`.
pub fn conditional_entropy(d: &Dist, given_axes: &[usize]) -> Result<f64> {
    let rest = complement(d.dim(), given_axes)?;
    if rest.is_empty() {
        return Ok(0.0);
    }
    let mut fibers: BTreeMap<Cell, BTreeMap<Cell, f64>> = BTreeMap::new();
    for (cell, m) in d.iter() {
        let y: Cell = given_axes.iter().map(|&a| cell[a]).collect();
        let x: Cell = rest.iter().map(|&a| cell[a]).collect();
        *fibers.entry(y).or_default().entry(x).or_insert(0.0) += m;
    }
    let mut h = 0.0;
    for fiber in fibers.values() {
        let p: f64 = fiber.values().sum();
        h += p * entropy_of_masses(fiber.values().map(|&m| m / p));
    }
    Ok(h)
}

/// `H(left) + H(right) - H(left, right)` for disjoint axis sets.
pub fn mutual_information(d: &Dist, left: &[usize], right: &[usize]) -> Result<f64> {
    if left.iter().any(|a| right.contains(a)) {
        return Err(Error::InvalidParameter("axis sets overlap".into()));
    }
    let both: Vec<usize> = left.iter().chain(right).copied().collect();
    Ok(entropy_of_axes(d, left)? + entropy_of_axes(d, right)? - entropy_of_axes(d, &both)?)
}

/// `I(A; B | C)` for arbitrary key functions of the cell.
pub fn conditional_mutual_information_by<A, B, C>(d: &Dist, a: A, b: B, c: C) -> f64
where
    A: Fn(&[i64]) -> Cell,
    B: Fn(&[i64]) -> Cell,
    C: Fn(&[i64]) -> Cell,
{
    let h_ac = entropy_by(d, |x| (a(x), c(x)));
    let h_bc = entropy_by(d, |x| (b(x), c(x)));
    let h_abc = entropy_by(d, |x| (a(x), b(x), c(x)));
    let h_c = entropy_by(d, &c);
    h_ac + h_bc - h_abc - h_c
}

/// Chain rule: fiberwise conditional entropy against `H(joint) - H(given)`.
pub fn check_chain_rule(d: &Dist, given_axes: &[usize]) -> Result<Report> {
    let lhs = conditional_entropy(d, given_axes)?;
    let rhs = entropy(d) - entropy_of_axes(d, given_axes)?;
    Ok(Report::eq("chain_rule", lhs, rhs, EXACT_TOL))
}

pub fn check_mutual_information_nonneg(d: &Dist, left: &[usize], right: &[usize]) -> Result<Report> {
    let i = mutual_information(d, left, right)?;
    Ok(Report::ge("mutual_information_nonneg", i, 0.0, EXACT_TOL))
}

/// `H(X) + H(Y) <= H(Z) + H(W)` when `X` is a function of both `Z` and
/// `W`, and `Y` is a function of `(Z, W)`.
pub fn check_submodularity<FZ, FW, FY>(
    joint: &Dist,
    z_axes: &[usize],
    w_axes: &[usize],
    x_of_z: FZ,
    x_of_w: FW,
    y_of_zw: FY,
) -> Result<Report>
where
    FZ: Fn(&[i64]) -> Cell,
    FW: Fn(&[i64]) -> Cell,
    FY: Fn(&[i64], &[i64]) -> Cell,
{
    let dim = joint.dim();
    for &axis in z_axes.iter().chain(w_axes) {
        if axis >= dim {
            return Err(Error::AxisOutOfRange { axis, dim });
        }
    }
    let pick = |cell: &[i64], axes: &[usize]| -> Cell { axes.iter().map(|&a| cell[a]).collect() };
    for (cell, _) in joint.iter() {
        let (z, w) = (pick(cell, z_axes), pick(cell, w_axes));
        if x_of_z(&z) != x_of_w(&w) {
            return Err(Error::Precondition(format!(
                "x_of_z and x_of_w disagree at support cell {cell:?}"
            )));
        }
    }
    let h_x = entropy_by(joint, |c| x_of_z(&pick(c, z_axes)));
    let h_y = entropy_by(joint, |c| y_of_zw(&pick(c, z_axes), &pick(c, w_axes)));
    let h_z = entropy_by(joint, |c| pick(c, z_axes));
    let h_w = entropy_by(joint, |c| pick(c, w_axes));
    Ok(Report::le("submodularity", h_x + h_y, h_z + h_w, EXACT_TOL))
}

/// `H(X', X'', Y) = 2 H(X, Y) - H(Y)` for `X''` conditionally i.i.d. with
/// `X` given `Y`. Axis 0 is `X`, axis 1 is `Y`.
pub fn check_cond_iid_identity(joint: &Dist) -> Result<Report> {
    if joint.dim() != 2 {
        return Err(Error::InvalidParameter("expected a two-axis law".into()));
    }
    let ext = conditional_iid_extend(joint, &[0], &[1], |z| z.to_vec())?;
    let lhs = entropy(&ext);
    let rhs = 2.0 * entropy(joint) - entropy_of_axes(joint, &[1])?;
    Ok(Report::eq("cond_iid_identity", lhs, rhs, EXACT_TOL))
}

/// `-sum p_i log p_i <= lambda log2 k + 2` for `sum p_i <= lambda <= 1/2`.
pub fn small_mass_bound(p: &[f64], lambda: f64) -> Result<Report> {
    if !(lambda > 0.0 && lambda <= 0.5) {
        return Err(Error::InvalidParameter(format!("lambda {lambda} must lie in (0, 1/2]")));
    }
    if p.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
        return Err(Error::InvalidParameter("masses must be nonnegative".into()));
    }
    let total: f64 = p.iter().sum();
    if total > lambda + 1e-12 {
        return Err(Error::Precondition(format!("sum of masses {total} exceeds lambda {lambda}")));
    }
    let k = p.len().max(1) as f64;
    let lhs = entropy_of_masses(p.iter().copied());
    let rhs = lambda * k.log2() + SMALL_MASS_CONSTANT;
    Ok(Report::le("small_mass_bound", lhs, rhs, EXACT_TOL))
}

/// Integers `k', l', t` with `k = k'/t`, `l = l'/t` and `t` the least
/// common denominator.
pub fn integer_coefficients(k: &Q, l: &Q) -> Result<(BigInt, BigInt, BigInt)> {
    if k.is_zero() || l.is_zero() {
        return Err(Error::InvalidParameter("coefficients must be nonzero".into()));
    }
    let t = rational::common_denominator([k, l]);
    let kk = (k * Q::from_integer(t.clone())).to_integer();
    let ll = (l * Q::from_integer(t.clone())).to_integer();
    Ok((kk, ll, t))
}

fn single_constants(k: &BigInt) -> Result<(u64, u64)> {
    let steps = k.abs().to_u64().ok_or(Error::Overflow)? - 1;
    let (d1, d2) = if k.is_positive() { (1u64, 0u64) } else { (3u64, 5u64) };
    let d1 = steps.checked_mul(4).and_then(|s| s.checked_add(d1)).ok_or(Error::Overflow)?;
    let d2 = steps.checked_mul(8).and_then(|s| s.checked_add(d2)).ok_or(Error::Overflow)?;
    Ok((d1, d2))
}

/// Multipliers `(d1, d2)` in the bound for `H(kX + lY)`.
///
/// `d1(1) = 1, d2(1) = 0`, `d1(-1) = 3, d2(-1) = 5`; each unit step in
/// `|k|` adds 4 to `d1` and 8 to `d2`. For a pair,
/// `d1(k,l) = d1(k) d1(l)` and `d2(k,l) = d1(k) d2(l) + d2(k)`, applied to
/// the integer numerators over the common denominator.
pub fn linear_constants(k: &Q, l: &Q) -> Result<(u64, u64)> {
    let (kk, ll, _) = integer_coefficients(k, l)?;
    let (a1, a2) = single_constants(&kk)?;
    let (b1, b2) = single_constants(&ll)?;
    let d1 = a1.checked_mul(b1).ok_or(Error::Overflow)?;
    let d2 = a1.checked_mul(b2).and_then(|v| v.checked_add(a2)).ok_or(Error::Overflow)?;
    Ok((d1, d2))
}

/// `H(kX+lY) - avg <= d1 (H(X+Y) - avg) + d2 I(X;Y) + c`, where `avg` is
/// `(H(X)+H(Y))/2` and `c = 8 (|k'| + |l'|)` bits.
pub fn check_linear_comb_bound(joint: &Dist, k: &Q, l: &Q) -> Result<Report> {
    if joint.dim() != 2 {
        return Err(Error::InvalidParameter("expected a two-axis law".into()));
    }
    let (kk, ll, _) = integer_coefficients(k, l)?;
    let (d1, d2) = linear_constants(k, l)?;
    let level = joint.level();
    let h_x = entropy_of_axes(joint, &[0])?;
    let h_y = entropy_of_axes(joint, &[1])?;
    let avg = (h_x + h_y) / 2.0;
    let h_comb = entropy(&sum_of_axes(joint, &[Coeff::Rational(k.clone()), Coeff::Rational(l.clone())], level)?.dist);
    let h_sum = entropy(&sum_of_axes(joint, &[Coeff::int(1), Coeff::int(1)], level)?.dist);
    let info = mutual_information(joint, &[0], &[1])?;
    let c = 8.0 * (kk.abs() + ll.abs()).to_f64().ok_or(Error::Overflow)?;
    let lhs = h_comb - avg;
    let rhs = d1 as f64 * (h_sum - avg) + d2 as f64 * info + c;
    Ok(Report::le("linear_combination_bound", lhs, rhs, EXACT_TOL)
        .with_note(format!("d1={d1} d2={d2} c={c}")))
}

fn convolve(a: &BTreeMap<i64, f64>, b: &BTreeMap<i64, f64>, sign: i64) -> BTreeMap<i64, f64> {
    let mut out = BTreeMap::new();
    for (&x, &p) in a {
        for (&y, &q) in b {
            *out.entry(x + sign * y).or_insert(0.0) += p * q;
        }
    }
    out
}

fn law_1d(d: &Dist) -> Result<BTreeMap<i64, f64>> {
    if d.dim() != 1 {
        return Err(Error::InvalidParameter("expected a one-axis law".into()));
    }
    Ok(d.iter().map(|(c, m)| (c[0], m)).collect())
}

/// For independent `X, Y, Z` at one level:
/// `H(X+Y+Z)`, `H(X+Y)` and `H(X-Y)` are each at most
/// `H(X+Z) + H(Y+Z) - H(Z) + 2`.
pub fn check_plunnecke_ruzsa(dx: &Dist, dy: &Dist, dz: &Dist) -> Result<Vec<Report>> {
    if dx.level() != dy.level() || dx.level() != dz.level() {
        return Err(Error::InvalidParameter("laws must share a level".into()));
    }
    let (x, y, z) = (law_1d(dx)?, law_1d(dy)?, law_1d(dz)?);
    let h = |m: &BTreeMap<i64, f64>| entropy_of_masses(m.values().copied());
    let rhs = h(&convolve(&x, &z, 1)) + h(&convolve(&y, &z, 1)) - h(&z) + PLUNNECKE_CONSTANT;
    let xy = convolve(&x, &y, 1);
    Ok(vec![
        Report::le("sum_of_three", h(&convolve(&xy, &z, 1)), rhs, EXACT_TOL),
        Report::le("sum_of_two", h(&xy), rhs, EXACT_TOL),
        Report::le("difference", h(&convolve(&x, &y, -1)), rhs, EXACT_TOL),
    ])
}

/// `H(X) >= sum_B P(B) H(X_B)` over a partition of the support.
pub fn check_concavity(d: &Dist, partition: &[Event]) -> Result<Report> {
    let mut owner: BTreeMap<&Cell, usize> = BTreeMap::new();
    for (i, e) in partition.iter().enumerate() {
        for cell in e.iter() {
            if owner.insert(cell, i).is_some() {
                return Err(Error::Precondition(format!("cell {cell:?} lies in two blocks")));
            }
        }
    }
    for (cell, _) in d.iter() {
        if !owner.contains_key(cell) {
            return Err(Error::Precondition(format!("support cell {cell:?} is not covered")));
        }
    }
    let mut rhs = 0.0;
    for e in partition {
        match d.condition_on_event(e) {
            Ok((cond, p)) => rhs += p * entropy(&cond),
            Err(Error::ZeroProbability) => {}
            Err(err) => return Err(err),
        }
    }
    Ok(Report::ge("concavity", entropy(d), rhs, EXACT_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_joint, rng};
    use crate::rational::{int, q};
    use crate::GridSpec;

    fn uniform_1d(level: u32, cells: impl IntoIterator<Item = i64>) -> Dist {
        Dist::uniform(GridSpec::unit(1, level), cells.into_iter().map(|k| vec![k])).unwrap()
    }

    #[test]
    fn basic_entropies() {
        assert_eq!(entropy(&uniform_1d(3, 0..8)), 3.0);
        let d = Dist::new(GridSpec::unit(1, 2), [(vec![0], 0.5), (vec![1], 0.25), (vec![2], 0.25)]).unwrap();
        assert_eq!(entropy(&d), 1.5);
        assert_eq!(entropy(&uniform_1d(2, [1])), 0.0);
    }

    #[test]
    fn conditional_and_mutual() {
        let u = uniform_1d(2, 0..4);
        let p = u.product(&u);
        assert!((conditional_entropy(&p, &[1]).unwrap() - 2.0).abs() < 1e-12);
        assert!(mutual_information(&p, &[0], &[1]).unwrap().abs() < 1e-12);
        let diag = Dist::uniform(GridSpec::unit(2, 2), (0..4).map(|k| vec![k, k])).unwrap();
        assert_eq!(conditional_entropy(&diag, &[1]).unwrap(), 0.0);
        assert_eq!(mutual_information(&diag, &[0], &[1]).unwrap(), 2.0);
        assert!(mutual_information(&diag, &[0], &[0]).is_err());
    }

    #[test]
    fn chain_rule_on_random() {
        let mut r = rng(7);
        for _ in 0..50 {
            let d = random_joint(&mut r, 3, 5);
            assert!(check_chain_rule(&d, &[1]).unwrap().pass);
            assert!(check_chain_rule(&d, &[0]).unwrap().pass);
        }
    }

    #[test]
    fn submodularity_examples() {
        let diag = Dist::uniform(GridSpec::unit(2, 2), (0..4).map(|k| vec![k, k])).unwrap();
        let r = check_submodularity(&diag, &[0], &[1], |z| z.to_vec(), |w| w.to_vec(), |z, _| z.to_vec()).unwrap();
        assert!(r.pass && r.slack.abs() < 1e-12);
        let mut g = rng(3);
        let d = random_joint(&mut g, 2, 4);
        let r = check_submodularity(&d, &[0, 1], &[0, 1], |z| z[..1].to_vec(), |w| w[..1].to_vec(), |z, _| z[1..].to_vec())
            .unwrap();
        assert!(r.pass);
        let bad = check_submodularity(&d, &[0], &[1], |z| z.to_vec(), |w| w.to_vec(), |z, _| z.to_vec());
        if d.iter().any(|(c, _)| c[0] != c[1]) {
            assert!(matches!(bad, Err(Error::Precondition(_))));
        }
    }

    #[test]
    fn cond_iid_identity_cases() {
        let u = uniform_1d(2, 0..4);
        assert!(check_cond_iid_identity(&u.product(&u)).unwrap().pass);
        let diag = Dist::uniform(GridSpec::unit(2, 2), (0..4).map(|k| vec![k, k])).unwrap();
        let r = check_cond_iid_identity(&diag).unwrap();
        assert!(r.pass);
        assert_eq!(r.lhs, 2.0);
    }

    #[test]
    fn small_mass_examples() {
        let r = small_mass_bound(&[0.1, 0.1, 0.1], 0.3).unwrap();
        assert!((r.lhs - 0.9965784284662087).abs() < 1e-12);
        assert!((r.rhs - (0.3 * 3f64.log2() + 2.0)).abs() < 1e-12);
        assert!(r.pass);
        assert!(small_mass_bound(&[0.0, 0.0], 0.1).unwrap().pass);
        let r = small_mass_bound(&[0.5], 0.5).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.5, 2.0));
        assert!(matches!(small_mass_bound(&[0.3, 0.3], 0.5), Err(Error::Precondition(_))));
        assert!(small_mass_bound(&[0.1], 0.7).is_err());
    }

    #[test]
    fn linear_constant_table() {
        assert_eq!(linear_constants(&int(1), &int(1)).unwrap(), (1, 0));
        assert_eq!(linear_constants(&int(-1), &int(1)).unwrap(), (3, 5));
        assert_eq!(linear_constants(&int(2), &int(1)).unwrap(), (5, 8));
        assert_eq!(linear_constants(&int(-2), &int(1)).unwrap(), (7, 13));
        assert_eq!(linear_constants(&int(1), &int(-1)).unwrap(), (3, 5));
        assert_eq!(linear_constants(&q(1, 2), &q(1, 2)).unwrap(), (1, 0));
        assert_eq!(linear_constants(&q(2, 3), &q(1, 3)).unwrap(), (5, 8));
        assert!(linear_constants(&int(0), &int(1)).is_err());
    }

    #[test]
    fn linear_comb_bound_equal_sides() {
        let mut g = rng(11);
        let d = random_joint(&mut g, 3, 5);
        let r = check_linear_comb_bound(&d, &int(1), &int(1)).unwrap();
        assert!((r.slack - 16.0).abs() < 1e-9);
        assert!(check_linear_comb_bound(&d, &int(1), &int(-1)).unwrap().pass);
        assert!(check_linear_comb_bound(&d, &q(1, 3), &int(2)).unwrap().pass);
    }

    #[test]
    fn difference_remark_for_independent() {
        // H(X-Y) <= 3H(X+Y) - H(X) - H(Y) + c for independent X, Y.
        let x = uniform_1d(3, [0, 1, 3]);
        let y = uniform_1d(3, [0, 2, 5, 6]);
        let p = x.product(&y);
        let r = check_linear_comb_bound(&p, &int(1), &int(-1)).unwrap();
        let h_diff = entropy(&sum_of_axes(&p, &[Coeff::int(1), Coeff::int(-1)], 3).unwrap().dist);
        let h_sum = entropy(&sum_of_axes(&p, &[Coeff::int(1), Coeff::int(1)], 3).unwrap().dist);
        let bound = 3.0 * h_sum - entropy(&x) - entropy(&y) + 16.0;
        assert!(h_diff <= bound);
        assert!(r.pass);
    }

    #[test]
    fn plunnecke_examples() {
        let pt = uniform_1d(2, [1]);
        let rs = check_plunnecke_ruzsa(&pt, &pt, &pt).unwrap();
        assert!(rs.iter().all(|r| r.pass && r.lhs == 0.0 && r.rhs == 2.0));
        let coin = uniform_1d(1, 0..2);
        let rs = check_plunnecke_ruzsa(&coin, &coin, &coin).unwrap();
        // X+Y+Z is binomial(3,1/2); X+Z and Y+Z are binomial(2,1/2).
        let h3 = entropy_of_masses([0.125, 0.375, 0.375, 0.125]);
        let h2 = 1.5;
        assert!((rs[0].lhs - h3).abs() < 1e-12);
        assert!((rs[0].rhs - (2.0 * h2 - 1.0 + 2.0)).abs() < 1e-12);
        assert!(rs.iter().all(|r| r.pass));
        assert!(check_plunnecke_ruzsa(&coin, &uniform_1d(2, [0]), &coin).is_err());
    }

    #[test]
    fn concavity_cases() {
        let mut g = rng(5);
        let d = random_joint(&mut g, 2, 4);
        let all = Event::from_predicate(&d, |_| true);
        let r = check_concavity(&d, &[all]).unwrap();
        assert!(r.pass && r.slack.abs() < 1e-12);
        let singles: Vec<Event> = d.iter().map(|(c, _)| Event::new([c.clone()])).collect();
        let r = check_concavity(&d, &singles).unwrap();
        assert_eq!(r.rhs, 0.0);
        let half = Event::from_predicate(&d, |c| c[0] < 2);
        let other = Event::from_predicate(&d, |c| c[0] >= 2);
        assert!(check_concavity(&d, &[half.clone(), other]).unwrap().pass);
        assert!(check_concavity(&d, std::slice::from_ref(&half)).is_err() || d.iter().all(|(c, _)| c[0] < 2));
        assert!(check_concavity(&d, &[half.clone(), half]).is_err());
    }
}
