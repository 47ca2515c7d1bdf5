//! Images of grid laws under sums, linear combinations, quadratic forms and
//! distance maps, plus rational diagonalization of binary quadratic forms
//! and Lipschitz bookkeeping.
//!
//! Maps are evaluated at left endpoints. Rational coefficients are handled
//! in integer arithmetic, so the output cell of every atom is exact; real
//! coefficients (such as `sqrt 2`) go through `f64` and the result is
//! flagged as inexact.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num::bigint::BigInt;
use num::traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic_measure::{cell_of, pow2};
use crate::entropy_core::entropy;
use crate::rational::{self, Q};
use crate::{Cell, Dist, Error, GridSpec, Report, Result};

/// Coefficient of a linear combination.
#[derive(Clone, Debug, PartialEq)]
pub enum Coeff {
    Rational(Q),
    Real(f64),
}

impl Coeff {
    pub fn int(n: i64) -> Coeff {
        Coeff::Rational(rational::int(n))
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, Coeff::Rational(_))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Coeff::Rational(q) => rational::to_f64(q),
            Coeff::Real(x) => *x,
        }
    }
}

/// Pushed law and whether every output cell was computed exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Pushed {
    pub dist: Dist,
    pub exact: bool,
}

/// Grid at `level` covering the given support cells, padded by one cell.
pub fn auto_grid(cells: &BTreeMap<Cell, f64>, dim: usize, level: u32) -> Result<GridSpec> {
    let w = pow2(-(level as i32));
    let bounds = (0..dim)
        .map(|axis| {
            let lo = cells.keys().map(|c| c[axis]).min().unwrap_or(0);
            let hi = cells.keys().map(|c| c[axis]).max().unwrap_or(0);
            ((lo - 1) as f64 * w, (hi + 2) as f64 * w)
        })
        .collect();
    GridSpec::new(level, bounds)
}

fn finish(map: BTreeMap<Cell, f64>, dim: usize, level: u32) -> Result<Dist> {
    let grid = auto_grid(&map, dim, level)?;
    let map = map.into_iter().filter(|(_, m)| *m > 0.0).collect();
    Ok(Dist::from_parts(grid, map))
}

fn finish_1d(map: BTreeMap<i64, f64>, level: u32) -> Result<Dist> {
    finish(map.into_iter().map(|(k, m)| (vec![k], m)).collect(), 1, level)
}

/// Law of `f(x)` with `x` the left endpoint of each support cell, bucketed
/// into `out_grid`.
pub fn push_map<F>(d: &Dist, f: F, out_grid: &GridSpec) -> Result<Dist>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut out: BTreeMap<Cell, f64> = BTreeMap::new();
    for (cell, m) in d.iter() {
        let image = f(&d.point_of(cell));
        let key: Cell = image.iter().map(|&v| cell_of(v, out_grid.level())).collect();
        if !out_grid.contains(&key) {
            return Err(Error::OutsideBox { cell: key });
        }
        *out.entry(key).or_insert(0.0) += m;
    }
    Ok(Dist::from_parts(out_grid.clone(), out))
}

/// [`push_map`] with an output grid sized to the image.
pub fn push_map_auto<F>(d: &Dist, f: F, out_dim: usize, out_level: u32) -> Result<Dist>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut out: BTreeMap<Cell, f64> = BTreeMap::new();
    for (cell, m) in d.iter() {
        let image = f(&d.point_of(cell));
        if image.len() != out_dim || image.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("map image has wrong arity or is not finite".into()));
        }
        let key: Cell = image.iter().map(|&v| cell_of(v, out_level)).collect();
        *out.entry(key).or_insert(0.0) += m;
    }
    finish(out, out_dim, out_level)
}

/// Law of an integer cell map, with an output grid sized to the image.
pub fn push_cells<F>(d: &Dist, f: F, out_dim: usize, out_level: u32) -> Result<Dist>
where
    F: Fn(&[i64]) -> Cell,
{
    let mut out: BTreeMap<Cell, f64> = BTreeMap::new();
    for (cell, m) in d.iter() {
        let key = f(cell);
        if key.len() != out_dim {
            return Err(Error::InvalidParameter("cell map has wrong arity".into()));
        }
        *out.entry(key).or_insert(0.0) += m;
    }
    finish(out, out_dim, out_level)
}

fn big_to_i128(v: &BigInt) -> Result<i128> {
    v.to_i128().ok_or(Error::Overflow)
}

/// `floor(num / (den * 2^(in_shift)) * 2^(out_level))`, computed exactly.
fn bucket(num: i128, den: i128, in_shift: u32, out_level: u32) -> Result<i64> {
    let (num, den) = if out_level >= in_shift {
        let f = 1i128.checked_shl(out_level - in_shift).ok_or(Error::Overflow)?;
        (num.checked_mul(f).ok_or(Error::Overflow)?, den)
    } else {
        let f = 1i128.checked_shl(in_shift - out_level).ok_or(Error::Overflow)?;
        (num, den.checked_mul(f).ok_or(Error::Overflow)?)
    };
    i64::try_from(num.div_euclid(den)).map_err(|_| Error::Overflow)
}

/// Integer numerators over a common denominator.
fn integer_form(coeffs: &[&Q]) -> Result<(Vec<i128>, i128)> {
    let t = rational::common_denominator(coeffs.iter().copied());
    let nums = coeffs
        .iter()
        .map(|c| big_to_i128(&(*c * Q::from_integer(t.clone())).to_integer()))
        .collect::<Result<Vec<_>>>()?;
    Ok((nums, big_to_i128(&t)?))
}

/// Law of `sum_i c_i X_i` at `out_level`.
pub fn sum_of_axes(d: &Dist, coeffs: &[Coeff], out_level: u32) -> Result<Pushed> {
    if coeffs.len() != d.dim() {
        return Err(Error::InvalidParameter(format!(
            "{} coefficients for a {}-axis law",
            coeffs.len(),
            d.dim()
        )));
    }
    let level = d.level();
    let mut out: BTreeMap<i64, f64> = BTreeMap::new();
    let exact = coeffs.iter().all(Coeff::is_rational);
    if exact {
        let qs: Vec<&Q> = coeffs
            .iter()
            .map(|c| match c {
                Coeff::Rational(q) => q,
                Coeff::Real(_) => unreachable!(),
            })
            .collect();
        let (nums, t) = integer_form(&qs)?;
        for (cell, m) in d.iter() {
            let mut s: i128 = 0;
            for (a, &k) in nums.iter().zip(cell) {
                s = a
                    .checked_mul(k as i128)
                    .and_then(|v| v.checked_add(s))
                    .ok_or(Error::Overflow)?;
            }
            *out.entry(bucket(s, t, level, out_level)?).or_insert(0.0) += m;
        }
    } else {
        let cs: Vec<f64> = coeffs.iter().map(Coeff::to_f64).collect();
        for (cell, m) in d.iter() {
            let v: f64 = cs.iter().zip(d.point_of(cell)).map(|(c, x)| c * x).sum();
            *out.entry(cell_of(v, out_level)).or_insert(0.0) += m;
        }
    }
    Ok(Pushed {
        dist: finish_1d(out, out_level)?,
        exact,
    })
}

/// Law of `(a.X, b.X)` for two rational coefficient vectors, exact.
pub fn linear_pair_push(d: &Dist, first: &[Q], second: &[Q], out_level: u32) -> Result<Dist> {
    if first.len() != d.dim() || second.len() != d.dim() {
        return Err(Error::InvalidParameter("coefficient count does not match the law".into()));
    }
    let all: Vec<&Q> = first.iter().chain(second).collect();
    let (nums, t) = integer_form(&all)?;
    let (na, nb) = nums.split_at(d.dim());
    let level = d.level();
    let dot = |coeffs: &[i128], cell: &[i64]| -> Result<i128> {
        let mut s: i128 = 0;
        for (a, &k) in coeffs.iter().zip(cell) {
            s = a
                .checked_mul(k as i128)
                .and_then(|v| v.checked_add(s))
                .ok_or(Error::Overflow)?;
        }
        Ok(s)
    };
    let mut out: BTreeMap<Cell, f64> = BTreeMap::new();
    for (cell, m) in d.iter() {
        let u = bucket(dot(na, cell)?, t, level, out_level)?;
        let v = bucket(dot(nb, cell)?, t, level, out_level)?;
        *out.entry(vec![u, v]).or_insert(0.0) += m;
    }
    finish(out, 2, out_level)
}

/// Rational diagonal representation `alpha (xi11 x + xi12 y)^2 + beta (xi21 x + xi22 y)^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagonalization {
    #[serde(with = "rational::as_string")]
    pub alpha: Q,
    #[serde(with = "rational::as_string")]
    pub beta: Q,
    #[serde(with = "rational::as_string")]
    pub xi11: Q,
    #[serde(with = "rational::as_string")]
    pub xi12: Q,
    #[serde(with = "rational::as_string")]
    pub xi21: Q,
    #[serde(with = "rational::as_string")]
    pub xi22: Q,
    /// Record of the free choices made.
    pub choice: String,
}

impl Diagonalization {
    /// Coefficients `(a1, a2, a3)` of the expanded form.
    pub fn expand(&self) -> (Q, Q, Q) {
        let two = rational::int(2);
        let a1 = &self.alpha * &self.xi11 * &self.xi11 + &self.beta * &self.xi21 * &self.xi21;
        let a2 = &two * (&self.alpha * &self.xi11 * &self.xi12 + &self.beta * &self.xi21 * &self.xi22);
        let a3 = &self.alpha * &self.xi12 * &self.xi12 + &self.beta * &self.xi22 * &self.xi22;
        (a1, a2, a3)
    }

    fn zero_count(&self) -> usize {
        [&self.xi11, &self.xi12, &self.xi21, &self.xi22].iter().filter(|v| v.is_zero()).count()
    }

    /// Determinant, sign and zero-pattern constraints.
    pub fn is_admissible(&self) -> bool {
        let det = &self.xi11 * &self.xi22 - &self.xi12 * &self.xi21;
        let zeros = self.zero_count();
        !self.alpha.is_zero()
            && !self.beta.is_zero()
            && !det.is_zero()
            && self.xi11 != -self.xi21.clone()
            && self.xi12 != -self.xi22.clone()
            && (zeros == 0 || zeros == 2)
    }
}

/// `a1 x^2 + a2 xy + a3 y^2` with rational coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadForm {
    #[serde(with = "rational::as_string")]
    pub a1: Q,
    #[serde(with = "rational::as_string")]
    pub a2: Q,
    #[serde(with = "rational::as_string")]
    pub a3: Q,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diag: Option<Diagonalization>,
}

impl QuadForm {
    pub fn new(a1: Q, a2: Q, a3: Q) -> QuadForm {
        QuadForm { a1, a2, a3, diag: None }
    }

    pub fn from_ints(a1: i64, a2: i64, a3: i64) -> QuadForm {
        QuadForm::new(rational::int(a1), rational::int(a2), rational::int(a3))
    }

    pub fn discriminant(&self) -> Q {
        &self.a2 * &self.a2 - rational::int(4) * &self.a1 * &self.a3
    }

    pub fn is_degenerate(&self) -> bool {
        self.discriminant().is_zero()
    }

    pub fn eval_f64(&self, x: f64, y: f64) -> f64 {
        let (a1, a2, a3) = (rational::to_f64(&self.a1), rational::to_f64(&self.a2), rational::to_f64(&self.a3));
        a1 * x * x + a2 * x * y + a3 * y * y
    }

    /// The polynomial identity of the stored diagonalization, exactly.
    pub fn identity_holds(&self) -> bool {
        match &self.diag {
            Some(d) => d.expand() == (self.a1.clone(), self.a2.clone(), self.a3.clone()),
            None => false,
        }
    }

    /// Exact output cell of `phi(x, y)` for integer cells at `level`.
    fn bucket_fn(&self, level: u32, out_level: u32) -> Result<impl Fn(i64, i64) -> Result<i64>> {
        let (nums, t) = integer_form(&[&self.a1, &self.a2, &self.a3])?;
        Ok(move |kx: i64, ky: i64| {
            let (x, y) = (kx as i128, ky as i128);
            let terms = [
                nums[0].checked_mul(x.checked_mul(x).ok_or(Error::Overflow)?),
                nums[1].checked_mul(x.checked_mul(y).ok_or(Error::Overflow)?),
                nums[2].checked_mul(y.checked_mul(y).ok_or(Error::Overflow)?),
            ];
            let mut s: i128 = 0;
            for term in terms {
                s = term.and_then(|v| v.checked_add(s)).ok_or(Error::Overflow)?;
            }
            bucket(s, t, 2 * level, out_level)
        })
    }

    /// Exact level-`out_level` cell of `phi(kx 2^-level, ky 2^-level)`.
    pub fn cell_of(&self, kx: i64, ky: i64, level: u32, out_level: u32) -> Result<i64> {
        (self.bucket_fn(level, out_level)?)(kx, ky)
    }
}

/// Law of `phi(X, Y)` at `out_level`, evaluated exactly at left endpoints.
pub fn quad_form_push(d: &Dist, form: &QuadForm, out_level: u32) -> Result<Dist> {
    if d.dim() != 2 {
        return Err(Error::InvalidParameter("quadratic forms act on two-axis laws".into()));
    }
    let f = form.bucket_fn(d.level(), out_level)?;
    let mut out: BTreeMap<i64, f64> = BTreeMap::new();
    for (cell, m) in d.iter() {
        *out.entry(f(cell[0], cell[1])?).or_insert(0.0) += m;
    }
    finish_1d(out, out_level)
}

/// Largest `r` with `r^2 <= n`.
pub fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// Output cell of a distance whose square is `s * 2^(-2 level)`.
fn distance_cell(s: u128, squared: bool, level: u32, out_level: u32) -> Result<i64> {
    let s = i128::try_from(s).map_err(|_| Error::Overflow)?;
    if squared {
        return bucket(s, 1, 2 * level, out_level);
    }
    let r = if out_level >= level {
        let f = 1i128.checked_shl(2 * (out_level - level)).ok_or(Error::Overflow)?;
        isqrt(s.checked_mul(f).ok_or(Error::Overflow)? as u128)
    } else {
        isqrt(s as u128) >> (level - out_level)
    };
    i64::try_from(r).map_err(|_| Error::Overflow)
}

fn squared_gap(a: &[i64], b: &[i64]) -> Result<u128> {
    let mut s: u128 = 0;
    for (x, y) in a.iter().zip(b) {
        let d = (*x as i128 - *y as i128).unsigned_abs();
        s = d.checked_mul(d).and_then(|v| v.checked_add(s)).ok_or(Error::Overflow)?;
    }
    Ok(s)
}

/// Law of `|(X1,Y1) - (X2,Y2)|` (or its square) for a four-axis law.
///
/// Square roots are taken in integer arithmetic, so output cells are exact.
pub fn distance_push(d: &Dist, squared: bool, out_level: u32) -> Result<Dist> {
    if d.dim() != 4 {
        return Err(Error::InvalidParameter("distance_push expects four axes".into()));
    }
    let mut out: BTreeMap<i64, f64> = BTreeMap::new();
    for (cell, m) in d.iter() {
        let s = squared_gap(&cell[..2], &cell[2..])?;
        *out.entry(distance_cell(s, squared, d.level(), out_level)?).or_insert(0.0) += m;
    }
    finish_1d(out, out_level)
}

const DISTANCE_CHUNK: usize = 64;

/// Law of `|W1 - W2|` (or its square) for independent `W1 ~ a`, `W2 ~ b`,
/// without materializing the product. Parallel over fixed chunks of `a`;
/// chunk results are merged in order, so the output does not depend on the
/// thread count.
pub fn distance_law(a: &Dist, b: &Dist, squared: bool, out_level: u32) -> Result<Dist> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidParameter("laws must have the same dimension".into()));
    }
    let level = a.level().max(b.level());
    let (a, b) = (a.change_level(level), b.change_level(level));
    let xs: Vec<(&Cell, f64)> = a.iter().collect();
    let ys: Vec<(&Cell, f64)> = b.iter().collect();
    let partials: Vec<Result<Vec<(i64, f64)>>> = xs
        .par_chunks(DISTANCE_CHUNK)
        .map(|chunk| {
            let mut local: HashMap<i64, f64> = HashMap::new();
            for &(cx, mx) in chunk {
                for &(cy, my) in &ys {
                    let s = squared_gap(cx, cy)?;
                    *local.entry(distance_cell(s, squared, level, out_level)?).or_insert(0.0) += mx * my;
                }
            }
            let mut v: Vec<(i64, f64)> = local.into_iter().collect();
            v.sort_unstable_by_key(|&(k, _)| k);
            Ok(v)
        })
        .collect();
    let mut out: BTreeMap<i64, f64> = BTreeMap::new();
    for part in partials {
        for (k, m) in part? {
            *out.entry(k).or_insert(0.0) += m;
        }
    }
    finish_1d(out, out_level)
}

/// Rationals of height exactly `h`, in a fixed order.
fn rationals_of_height(h: i64) -> Vec<Q> {
    let mut out = Vec::new();
    for den in 1..=h {
        for num in 1..=h {
            if num.max(den) != h || num::integer::gcd(num, den) != 1 {
                continue;
            }
            out.push(rational::q(num, den));
            out.push(rational::q(-num, den));
        }
    }
    out
}

const REPAIR_MAX_HEIGHT: i64 = 64;

/// For `alpha' u^2 + beta' (u + d' v)^2`, returns `(a, c, gamma, delta)` with
/// `gamma (a u + v)^2 + delta (c u + v)^2` equal to it, choosing the
/// admissible pair of smallest height. Also requires `a != -c`.
fn repair(alpha_p: &Q, beta_p: &Q, d_p: &Q) -> Result<(Q, Q, Q, Q)> {
    let rho = -(alpha_p / beta_p);
    let one = Q::one();
    let inv_d = &one / d_p;
    let mut best: Option<(BigInt, Q, Q)> = None;
    for h in 1..=REPAIR_MAX_HEIGHT {
        if let Some((bh, _, _)) = &best {
            if BigInt::from(h) > *bh {
                break;
            }
        }
        for a in rationals_of_height(h) {
            let u = d_p * &a - &one;
            if u.is_zero() {
                continue;
            }
            let c = (&rho / &u + &one) / d_p;
            if c.is_zero() || c == a || c == inv_d || a == -c.clone() {
                continue;
            }
            let ht = rational::height(&a).max(rational::height(&c));
            let better = match &best {
                None => true,
                Some((bh, _, _)) => ht < *bh,
            };
            if better {
                best = Some((ht, a, c));
            }
        }
    }
    let (_, a, c) = best.ok_or_else(|| Error::Precondition("no admissible repair parameters found".into()))?;
    let gamma = beta_p * d_p * (&one - &c * d_p) / (&a - &c);
    let delta = beta_p * d_p * (&a * d_p - &one) / (&a - &c);
    Ok((a, c, gamma, delta))
}

fn diagonalize_with_x_leading(a1: &Q, a2: &Q, a3: &Q) -> Result<Diagonalization> {
    // a1 != 0, a2 != 0: a1 (x + e y)^2 + b0 y^2 with e = a2 / 2a1.
    let two = rational::int(2);
    let e = a2 / (&two * a1);
    let b0 = a3 - a2 * a2 / (rational::int(4) * a1);
    // In (u, v) = (y, x): b0 u^2 + a1 e^2 (u + v / e)^2.
    let (a, c, gamma, delta) = repair(&b0, &(a1 * &e * &e), &(Q::one() / &e))?;
    Ok(Diagonalization {
        alpha: gamma,
        beta: delta,
        xi11: Q::one(),
        xi12: a.clone(),
        xi21: Q::one(),
        xi22: c.clone(),
        choice: format!(
            "completed square then repaired with a={}, c={}",
            rational::format(&a),
            rational::format(&c)
        ),
    })
}

/// Rational diagonalization of a non-degenerate form.
///
/// Diagonal inputs are returned as is. Otherwise the square is completed,
/// which leaves exactly one vanishing `xi`, and the zero is removed with
/// the smallest-height admissible repair. The pure `xy` form uses
/// `(x+y)^2 - (x-y)^2` over 4. A bracket is rescaled when needed so that
/// `xi11 != -xi21` and `xi12 != -xi22`.
pub fn diagonalize(a1: &Q, a2: &Q, a3: &Q) -> Result<QuadForm> {
    let mut form = QuadForm::new(a1.clone(), a2.clone(), a3.clone());
    if form.is_degenerate() {
        return Err(Error::DegenerateForm);
    }
    let (one, zero) = (Q::one(), Q::zero());
    let mut diag = if a2.is_zero() {
        Diagonalization {
            alpha: a1.clone(),
            beta: a3.clone(),
            xi11: one.clone(),
            xi12: zero.clone(),
            xi21: zero.clone(),
            xi22: one.clone(),
            choice: "already diagonal".into(),
        }
    } else if !a1.is_zero() {
        diagonalize_with_x_leading(a1, a2, a3)?
    } else if !a3.is_zero() {
        let d = diagonalize_with_x_leading(a3, a2, a1)?;
        Diagonalization {
            xi11: d.xi12,
            xi12: d.xi11,
            xi21: d.xi22,
            xi22: d.xi21,
            choice: format!("{} (variables swapped)", d.choice),
            ..d
        }
    } else {
        let quarter = a2 / rational::int(4);
        Diagonalization {
            alpha: quarter.clone(),
            beta: -quarter,
            xi11: one.clone(),
            xi12: one.clone(),
            xi21: one.clone(),
            xi22: -one.clone(),
            choice: "product form via (x+y)^2 - (x-y)^2".into(),
        }
    };
    if diag.xi11 == -diag.xi21.clone() || diag.xi12 == -diag.xi22.clone() {
        let two = rational::int(2);
        diag.xi21 = &diag.xi21 * &two;
        diag.xi22 = &diag.xi22 * &two;
        diag.beta = &diag.beta / rational::int(4);
        diag.choice.push_str("; second bracket scaled by 2");
    }
    debug_assert!(diag.is_admissible());
    form.diag = Some(diag);
    debug_assert!(form.identity_holds());
    Ok(form)
}

/// Kind of Lipschitz control.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LipschitzKind {
    Lipschitz,
    BiLipschitz,
    WeaklyBiLipschitz { pieces: u32 },
}

/// Lipschitz constant, normalized to at least 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzTag {
    pub kappa: f64,
    #[serde(flatten)]
    pub kind: LipschitzKind,
}

/// Maps with a closed-form Lipschitz constant.
#[derive(Clone, Debug, PartialEq)]
pub enum MapKind {
    Identity,
    /// `x -> sum c_i x_i`.
    Sum { coeffs: Vec<f64> },
    /// `x -> alpha x^2` on `[inner, outer]` and its mirror image.
    Square { alpha: f64, inner: f64, outer: f64 },
    /// C^1 map on `R^dim` with partial derivatives bounded by `derivative_bound`.
    C1 { derivative_bound: f64, dim: usize },
}

pub fn lipschitz_tag_for(kind: &MapKind) -> Result<LipschitzTag> {
    let floor = |k: f64| k.max(2.0);
    match kind {
        MapKind::Identity => Ok(LipschitzTag {
            kappa: 2.0,
            kind: LipschitzKind::BiLipschitz,
        }),
        MapKind::Sum { coeffs } => Ok(LipschitzTag {
            kappa: floor(coeffs.iter().map(|c| c.abs()).sum()),
            kind: LipschitzKind::Lipschitz,
        }),
        &MapKind::Square { alpha, inner, outer } => {
            if !(inner > 0.0 && inner < outer) {
                return Err(Error::Precondition(format!(
                    "square map needs 0 < inner < outer, got [{inner}, {outer}]"
                )));
            }
            if alpha == 0.0 {
                return Err(Error::InvalidParameter("alpha must be nonzero".into()));
            }
            let a = alpha.abs();
            Ok(LipschitzTag {
                kappa: floor((1.0 / (2.0 * a * inner)).max(2.0 * a * outer)),
                kind: LipschitzKind::WeaklyBiLipschitz { pieces: 2 },
            })
        }
        &MapKind::C1 { derivative_bound, dim } => Ok(LipschitzTag {
            kappa: floor(derivative_bound * (dim as f64).sqrt()),
            kind: LipschitzKind::Lipschitz,
        }),
    }
}

/// Real map on one coordinate, carrying its Lipschitz tag.
#[derive(Clone)]
pub struct ScalarMap {
    pub name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub tag: LipschitzTag,
}

impl std::fmt::Debug for ScalarMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarMap").field("name", &self.name).field("tag", &self.tag).finish()
    }
}

impl ScalarMap {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static, tag: LipschitzTag) -> Self {
        ScalarMap {
            name: name.into(),
            f: Arc::new(f),
            tag,
        }
    }

    pub fn identity() -> Self {
        ScalarMap::new("identity", |x| x, lipschitz_tag_for(&MapKind::Identity).expect("identity"))
    }

    /// `x -> alpha x^2` on `[inner, outer]` and its mirror image.
    pub fn square(alpha: f64, inner: f64, outer: f64) -> Result<Self> {
        let tag = lipschitz_tag_for(&MapKind::Square { alpha, inner, outer })?;
        Ok(ScalarMap::new(format!("{alpha}*x^2"), move |x| alpha * x * x, tag))
    }

    pub fn apply(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

/// `|H(after) - H(before)| <= m log2 kappa + 4` for a weakly bi-Lipschitz
/// push of an `m`-axis law.
pub fn check_weakly_bilipschitz_entropy(before: &Dist, after: &Dist, tag: &LipschitzTag) -> Report {
    let m = before.dim() as f64;
    let lhs = (entropy(after) - entropy(before)).abs();
    Report::le("weakly_bilipschitz_entropy", lhs, m * tag.kappa.log2() + 4.0, 1e-9).with_kappa(tag.kappa, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, q};

    fn coin_pair() -> Dist {
        let coin = Dist::uniform(GridSpec::unit(1, 1), [vec![0], vec![1]]).unwrap();
        coin.product(&coin)
    }

    #[test]
    fn identity_push() {
        let d = Dist::new(GridSpec::unit(1, 2), [(vec![0], 0.5), (vec![3], 0.5)]).unwrap();
        let p = push_map(&d, |x| x.to_vec(), d.grid()).unwrap();
        assert_eq!(p, d);
        let sq = push_map(&Dist::uniform(GridSpec::unit(1, 1), [vec![0], vec![1]]).unwrap(), |x| vec![x[0] * x[0]], &GridSpec::unit(1, 2))
            .unwrap();
        assert_eq!(sq.mass_of(&[0]), 0.5);
        assert_eq!(sq.mass_of(&[1]), 0.5);
        let escape = push_map(&d, |x| vec![x[0] + 0.5], d.grid());
        assert!(matches!(escape, Err(Error::OutsideBox { .. })));
    }

    #[test]
    fn coin_sums() {
        let p = sum_of_axes(&coin_pair(), &[Coeff::int(1), Coeff::int(1)], 1).unwrap();
        assert!(p.exact);
        assert_eq!(p.dist.mass_of(&[0]), 0.25);
        assert_eq!(p.dist.mass_of(&[1]), 0.5);
        assert_eq!(p.dist.mass_of(&[2]), 0.25);
        assert_eq!(entropy(&p.dist), 1.5);
        let m = sum_of_axes(&coin_pair(), &[Coeff::int(1), Coeff::int(0)], 1).unwrap();
        assert_eq!(m.dist.mass_of(&[0]), 0.5);
        assert_eq!(m.dist.mass_of(&[1]), 0.5);
        let irr = sum_of_axes(&coin_pair(), &[Coeff::int(1), Coeff::Real(2f64.sqrt())], 3).unwrap();
        assert!(!irr.exact);
        assert!(sum_of_axes(&coin_pair(), &[Coeff::int(1)], 1).is_err());
    }

    #[test]
    fn rational_sum_buckets_exactly() {
        // x = 3/4, y = 0: (1/3)*x = 1/4 exactly lands in cell 1 at level 2.
        let d = Dist::point(GridSpec::unit(2, 2), vec![3, 0]).unwrap();
        let p = sum_of_axes(&d, &[Coeff::Rational(q(1, 3)), Coeff::int(1)], 2).unwrap();
        assert_eq!(p.dist.mass_of(&[1]), 1.0);
    }

    #[test]
    fn quad_form_on_coins() {
        let p = quad_form_push(&coin_pair(), &QuadForm::from_ints(1, 0, 1), 2).unwrap();
        assert_eq!(p.mass_of(&[0]), 0.25);
        assert_eq!(p.mass_of(&[1]), 0.5);
        assert_eq!(p.mass_of(&[2]), 0.25);
    }

    #[test]
    fn distances() {
        let g = GridSpec::unit(4, 2);
        let d = Dist::point(g, vec![1, 1, 1, 1]).unwrap();
        assert_eq!(distance_push(&d, false, 2).unwrap().mass_of(&[0]), 1.0);
        let w = Dist::new(GridSpec::cube(2, 0, 0.0, 2.0).unwrap(), [(vec![0, 0], 0.5), (vec![1, 0], 0.5)]).unwrap();
        let law = distance_law(&w, &w, true, 0).unwrap();
        assert_eq!(law.mass_of(&[0]), 0.5);
        assert_eq!(law.mass_of(&[1]), 0.5);
        let four = w.product(&w);
        assert_eq!(distance_push(&four, true, 0).unwrap(), law);
    }

    #[test]
    fn isqrt_edges() {
        for n in [0u128, 1, 2, 3, 4, 15, 16, 17, 1 << 100, (1 << 100) - 1] {
            let r = isqrt(n);
            assert!(r * r <= n && (r + 1) * (r + 1) > n);
        }
    }

    #[test]
    fn diagonalize_examples() {
        let f = diagonalize(&int(1), &int(0), &int(1)).unwrap();
        let d = f.diag.as_ref().unwrap();
        assert_eq!((d.alpha.clone(), d.beta.clone()), (int(1), int(1)));
        assert_eq!((d.xi11.clone(), d.xi12.clone(), d.xi21.clone(), d.xi22.clone()), (int(1), int(0), int(0), int(1)));

        let f = diagonalize(&int(0), &int(1), &int(0)).unwrap();
        let d = f.diag.as_ref().unwrap();
        assert!(f.identity_holds() && d.is_admissible());
        assert_eq!(d.alpha, q(1, 4));
        assert_eq!((d.xi11.clone(), d.xi12.clone()), (int(1), int(1)));
        // Second bracket is proportional to x - y.
        assert_eq!(d.xi21.clone(), -d.xi22.clone());

        let f = diagonalize(&int(1), &int(1), &int(0)).unwrap();
        let d = f.diag.as_ref().unwrap();
        assert!(f.identity_holds() && d.is_admissible());
        assert!(!d.xi11.is_zero() && !d.xi12.is_zero() && !d.xi21.is_zero() && !d.xi22.is_zero());

        assert!(matches!(diagonalize(&int(1), &int(2), &int(1)), Err(Error::DegenerateForm)));
    }

    #[test]
    fn diagonalize_y_leading() {
        let f = diagonalize(&int(0), &int(3), &q(1, 2)).unwrap();
        assert!(f.identity_holds());
        assert!(f.diag.as_ref().unwrap().is_admissible());
    }

    #[test]
    fn lipschitz_tags() {
        let t = lipschitz_tag_for(&MapKind::Square { alpha: 1.0, inner: 0.5, outer: 1.0 }).unwrap();
        assert_eq!(t.kappa, 2.0);
        assert_eq!(t.kind, LipschitzKind::WeaklyBiLipschitz { pieces: 2 });
        assert_eq!(lipschitz_tag_for(&MapKind::Identity).unwrap().kappa, 2.0);
        assert_eq!(lipschitz_tag_for(&MapKind::C1 { derivative_bound: 1.0, dim: 2 }).unwrap().kappa, 2.0);
        assert_eq!(lipschitz_tag_for(&MapKind::Sum { coeffs: vec![3.0, -2.0] }).unwrap().kappa, 5.0);
        assert!(lipschitz_tag_for(&MapKind::Square { alpha: 1.0, inner: 0.0, outer: 1.0 }).is_err());
    }

    #[test]
    fn square_push_entropy_change_is_bounded() {
        let cells: Vec<Cell> = (32..64).map(|k| vec![k]).collect();
        let d = Dist::uniform(GridSpec::unit(1, 6), cells).unwrap();
        let map = ScalarMap::square(1.0, 0.5, 1.0).unwrap();
        let pushed = push_map_auto(&d, |x| vec![map.apply(x[0])], 1, 6).unwrap();
        assert!(check_weakly_bilipschitz_entropy(&d, &pushed, &map.tag).pass);
    }

    #[test]
    fn quad_form_serde() {
        let f = diagonalize(&int(1), &int(1), &int(0)).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        let back: QuadForm = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
    }
}
