//! Distance laws, Riesz energies, the annulus diagnostic, the threshold
//! function `phi`, the two-sided partition of a Frostman measure, and the
//! entropy transfer after cutting a neighbourhood of zero.

use serde::{Deserialize, Serialize};

use crate::dyadic_measure::{cell_of, pow2};
use crate::entropy_core::{entropy, entropy_of_masses, law_by, EXACT_TOL};
use crate::frostman_cert::frostman_constant_1d;
use crate::pushforward::distance_law;
use crate::{Dist, Error, Event, Report, Result};

/// Stand-in for the dimension-dependent `O(1)` of the cut-away transfer.
pub const CUT_AWAY_CONSTANT: f64 = 4.0;

/// Law of `|W - W'|` for independent `W ~ mu`, `W' ~ mu2` (default `mu`).
pub fn delta_measure(mu: &Dist, mu2: Option<&Dist>, out_level: u32) -> Result<Dist> {
    distance_law(mu, mu2.unwrap_or(mu), false, out_level)
}

/// Riesz energy over distinct atoms, with a warning when it is vacuous.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszEnergy {
    pub value: f64,
    pub atoms: usize,
    pub warning: Option<String>,
}

fn points(mu: &Dist) -> Vec<(Vec<f64>, f64)> {
    mu.iter().map(|(c, m)| (mu.point_of(c), m)).collect()
}

fn gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `sum_{i != j} m_i m_j |x_i - x_j|^-s` over left endpoints. The energy
/// of a true atom is infinite, so the diagonal is excluded.
pub fn riesz_energy(mu: &Dist, s: f64) -> Result<RieszEnergy> {
    if s <= 0.0 {
        return Err(Error::InvalidParameter(format!("s = {s} must be positive")));
    }
    let pts = points(mu);
    let mut value = 0.0;
    for (i, (x, mx)) in pts.iter().enumerate() {
        for (j, (y, my)) in pts.iter().enumerate() {
            if i != j {
                value += mx * my * gap(x, y).powf(-s);
            }
        }
    }
    let warning = (pts.len() < 2).then(|| "single atom: distinct-pair energy is 0".to_string());
    Ok(RieszEnergy {
        value,
        atoms: pts.len(),
        warning,
    })
}

/// Ratio `Delta(mu)([r, r+eta]) / (r^(1/2) eta^t I_{t+1/2}(mu))`; a
/// diagnostic with no verdict.
pub fn annulus_diagnostic(mu: &Dist, r: f64, eta: f64, t: f64) -> Result<Report> {
    if mu.dim() != 2 {
        return Err(Error::InvalidParameter("expected a planar law".into()));
    }
    let radius = mu
        .grid()
        .bounds()
        .iter()
        .map(|&(lo, hi)| lo.abs().max(hi.abs()).powi(2))
        .sum::<f64>()
        .sqrt();
    if !(eta > 0.0 && eta < r && r < 2.0 * radius && t > 0.0 && t <= 1.0) {
        return Err(Error::Precondition(format!(
            "need 0 < eta < r < 2R and 0 < t <= 1, got eta={eta} r={r} R={radius} t={t}"
        )));
    }
    let pts = points(mu);
    let mut annulus = 0.0;
    for (x, mx) in &pts {
        for (y, my) in &pts {
            let g = gap(x, y);
            if g >= r && g <= r + eta {
                annulus += mx * my;
            }
        }
    }
    let energy = riesz_energy(mu, t + 0.5)?;
    let scale = r.sqrt() * eta.powf(t) * energy.value;
    let ratio = if scale > 0.0 { annulus / scale } else { f64::INFINITY };
    let mut rep = Report::diagnostic("annulus_ratio", ratio, 0.0);
    rep.note = Some(format!("annulus mass {annulus}, energy {}", energy.value));
    Ok(rep)
}

/// `u/2 + (sqrt(4 + u^2) - 2)/2` on `(0, 1]`.
pub fn phi(u: f64) -> Result<f64> {
    if !(u > 0.0 && u <= 1.0) {
        return Err(Error::InvalidParameter(format!("phi is defined on (0, 1], got {u}")));
    }
    Ok(u / 2.0 + ((4.0 + u * u).sqrt() - 2.0) / 2.0)
}

/// Split of `[0,1)` at level `k` into a left part, a right part and the
/// single cell between them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub k: u32,
    pub i0: i64,
    pub gamma: f64,
    /// Level-`k` index ranges `[lo, hi)` of `U1`, `U2`, `U3`.
    pub ranges: [(i64, i64); 3],
    pub masses: [f64; 3],
    pub gap: f64,
    /// Conclusions (i)-(iii) and the Frostman constants of the two
    /// restrictions.
    pub reports: Vec<Report>,
}

impl PartitionResult {
    /// Events of the three parts on the cells of `grid_level`.
    pub fn events(&self, grid_level: u32) -> [Event; 3] {
        let shift = grid_level - self.k;
        self.ranges
            .map(|(lo, hi)| Event::new(((lo << shift)..(hi << shift)).map(|c| vec![c])))
    }
}

/// Partition of a measure on `[0,1)` with `(s, C)` window certificate into
/// two halves of mass in `[1/2 - gamma, 1/2]` separated by a cell of mass
/// at most `gamma`.
///
/// The level is `k = ceil(log2(C/gamma) / s)`, the smallest with
/// `C 2^-ks <= gamma`.
pub fn partition_frostman(mu: &Dist, gamma: f64, s: f64, c: f64) -> Result<PartitionResult> {
    if mu.dim() != 1 {
        return Err(Error::InvalidParameter("expected a one-axis law".into()));
    }
    if !(gamma > 0.0 && gamma < 1.0 / 3.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must lie in (0, 1/3)")));
    }
    if !(s > 0.0 && s <= 1.0 && c > 0.0) {
        return Err(Error::InvalidParameter(format!("need 0 < s <= 1 and C > 0, got s={s} C={c}")));
    }
    let bounds = mu.grid().bounds()[0];
    if bounds != (0.0, 1.0) {
        return Err(Error::Precondition("the measure must live on the box [0, 1)".into()));
    }
    let kf = ((c / gamma).log2() / s).ceil().max(0.0);
    let level = mu.level();
    if kf > level as f64 {
        return Err(Error::ScaleRange(format!(
            "partition level {kf} is finer than the measure level {level}"
        )));
    }
    let k = kf as u32;
    let coarse = mu.change_level(k);
    let cells = 1i64 << k;
    // q_i = mu([0, i 2^-k)); i0 is the last index with q_i < 1/2.
    let mut q = 0.0;
    let mut i0 = None;
    for i in 0..cells {
        if q < 0.5 {
            i0 = Some(i);
        }
        q += coarse.mass_of(&[i]);
    }
    let i0 = i0.ok_or_else(|| Error::Precondition("no cut index".into()))?;
    let ranges = [(0, i0), (i0 + 1, cells), (i0, i0 + 1)];
    let part_mass = |(lo, hi): (i64, i64)| (lo..hi).map(|i| coarse.mass_of(&[i])).sum::<f64>();
    let masses = ranges.map(part_mass);
    let width = pow2(-(k as i32));
    let gap = if i0 + 1 < cells && i0 > 0 { width } else { f64::INFINITY };
    let lo = 0.5 - gamma;
    let mut reports = vec![
        Report::ge("gap >= 2^-k", gap, width, 0.0),
        Report::within("mass of U1", masses[0], lo - EXACT_TOL, 0.5 + EXACT_TOL),
        Report::within("mass of U2", masses[1], lo - EXACT_TOL, 0.5 + EXACT_TOL),
        Report::le("mass of U3", masses[2], gamma, EXACT_TOL),
    ];
    let shift = level - k;
    for (idx, name) in [(0usize, "U1"), (1, "U2")] {
        let (a, b) = ranges[idx];
        let event = Event::from_predicate(mu, |cell| cell[0] >= a << shift && cell[0] < b << shift);
        match mu.condition_on_event(&event) {
            Ok((restricted, p)) => {
                let cert = frostman_constant_1d(&restricted, s)?;
                reports.push(Report::le(
                    format!("restriction to {name} is (s, C/mu({name}))-Frostman"),
                    cert.constant,
                    c / p,
                    EXACT_TOL * (c / p).max(1.0),
                ));
            }
            Err(Error::ZeroProbability) => reports.push(Report::ge(format!("mass of {name} positive"), 0.0, 1.0, 0.0)),
            Err(e) => return Err(e),
        }
    }
    Ok(PartitionResult {
        k,
        i0,
        gamma,
        ranges,
        masses,
        gap,
        reports,
    })
}

/// Outcome of [`cut_away_from_zero`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutAwayReport {
    pub p_event: f64,
    pub h_restricted: f64,
    pub h_full: f64,
    pub report: Report,
}

/// Compares `H_n(f(Z)_E)` with `H_n(f(Z)) / P(E)` for `E = {|Z| >= eta}`,
/// against `C (2 eta)^s n + 4`. The hypothesis `P(|f(Z)| < r) <= C r^s` is
/// supplied by the caller.
pub fn cut_away_from_zero<F>(d: &Dist, f: F, s: f64, c: f64, eta: f64, n: u32) -> Result<CutAwayReport>
where
    F: Fn(&[f64]) -> f64,
{
    if !(s > 0.0 && c > 0.0) {
        return Err(Error::InvalidParameter("need s > 0 and C > 0".into()));
    }
    let limit = (0.5 * (2.0 * c).powf(-1.0 / s)).min(0.5);
    if !(eta > 0.0 && eta <= limit) {
        return Err(Error::Precondition(format!("eta = {eta} must lie in (0, {limit}]")));
    }
    let norm = |cell: &[i64]| d.point_of(cell).iter().map(|x| x * x).sum::<f64>().sqrt();
    let event = Event::from_predicate(d, |cell| norm(cell) >= eta);
    let (restricted, p_event) = d.condition_on_event(&event)?;
    if p_event < 0.5 {
        return Err(Error::Precondition(format!("P(E) = {p_event} is below 1/2")));
    }
    let image = |law: &Dist| entropy_of_masses(law_by(law, |cell| cell_of(f(&law.point_of(cell)), n)).into_values());
    let h_restricted = image(&restricted);
    let h_full = image(d);
    let lhs = (h_restricted - h_full / p_event).abs();
    let rhs = c * (2.0 * eta).powf(s) * n as f64 + CUT_AWAY_CONSTANT;
    Ok(CutAwayReport {
        p_event,
        h_restricted,
        h_full,
        report: Report::le("cut_away_from_zero", lhs, rhs, EXACT_TOL),
    })
}

/// Which distance statement the report is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// `|W - W'|` for `W` that is `(2s, C)`-Frostman with `s > 1/2`.
    Distance,
    /// `|W - W'|` for `W` a product of two `(s, C_i)` marginals.
    DistanceSmallS,
    /// `|W - W'|^2`.
    Squared,
}

/// Measured entropy of the distance law against the admissible window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceEntropyReport {
    pub mode: DistanceMode,
    pub n: u32,
    pub s: f64,
    pub entropy: f64,
    /// `H_n / n - s`.
    pub excess: f64,
    /// Open interval of exponents the statement promises to exceed `s` by.
    pub window: (f64, f64),
    /// `(H_n + log2 C) / n - s`, when `C` is given.
    pub excess_log_c: Option<f64>,
    /// `(H_n + log2_+ C) / n - s`, when `C` is given.
    pub excess_log_plus_c: Option<f64>,
    pub degenerate: bool,
}

/// Admissible exponent window for `mode` at dimension parameter `s`.
pub fn admissible_window(mode: DistanceMode, s: f64) -> Result<(f64, f64)> {
    match mode {
        DistanceMode::Distance => {
            let hi = (2.0 * s - 0.5).min(1.0);
            if hi <= s {
                return Err(Error::EmptyRange(format!("s = {s}: need s < t < 2s - 1/2")));
            }
            Ok((s, hi))
        }
        DistanceMode::DistanceSmallS => {
            if !(s > 0.0 && s <= 0.5) {
                return Err(Error::EmptyRange(format!("s = {s}: small-s statement needs 0 < s <= 1/2")));
            }
            Ok((s, (s + phi(2.0 * s)?) / 2.0))
        }
        DistanceMode::Squared => {
            if !(s > 0.5 && s < 1.0) {
                return Err(Error::EmptyRange(format!("s = {s}: squared statement needs 1/2 < s < 1")));
            }
            let eps0 = if s <= 0.75 { (2.0 * s - 1.0) / 6.0 } else { (1.0 - s) / 3.0 };
            Ok((s, s + eps0))
        }
    }
}

/// Builds the i.i.d. pair, pushes it through the distance (or squared
/// distance) and reports `H_n` against `n s`.
pub fn distance_entropy_report(w: &Dist, mode: DistanceMode, s: f64, c: Option<f64>, n: u32) -> Result<DistanceEntropyReport> {
    if w.dim() != 2 {
        return Err(Error::InvalidParameter("expected a planar law".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let window = admissible_window(mode, s)?;
    let law = distance_law(w, w, mode == DistanceMode::Squared, n)?;
    let h = entropy(&law);
    let nf = n as f64;
    Ok(DistanceEntropyReport {
        mode,
        n,
        s,
        entropy: h,
        excess: h / nf - s,
        window,
        excess_log_c: c.map(|c| (h + c.log2()) / nf - s),
        excess_log_plus_c: c.map(|c| (h + c.log2().max(0.0)) / nf - s),
        degenerate: h == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::GridSpec;

    #[test]
    fn delta_of_simple_measures() {
        let p = Dist::point(GridSpec::unit(2, 3), vec![2, 5]).unwrap();
        let d = delta_measure(&p, None, 3).unwrap();
        assert_eq!(d.mass_of(&[0]), 1.0);
        let two = Dist::new(GridSpec::cube(2, 0, 0.0, 2.0).unwrap(), [(vec![0, 0], 0.5), (vec![1, 0], 0.5)]).unwrap();
        let d = delta_measure(&two, None, 0).unwrap();
        assert_eq!((d.mass_of(&[0]), d.mass_of(&[1])), (0.5, 0.5));
    }

    #[test]
    fn delta_is_symmetric() {
        let a = Dist::uniform(GridSpec::unit(2, 2), [vec![0, 1], vec![3, 3]]).unwrap();
        let b = Dist::new(GridSpec::unit(2, 2), [(vec![1, 0], 0.25), (vec![2, 2], 0.75)]).unwrap();
        assert_eq!(delta_measure(&a, Some(&b), 4).unwrap(), delta_measure(&b, Some(&a), 4).unwrap());
    }

    #[test]
    fn riesz_examples() {
        let two = Dist::uniform(GridSpec::cube(1, 0, 0.0, 2.0).unwrap(), [vec![0], vec![1]]).unwrap();
        assert!((riesz_energy(&two, 0.7).unwrap().value - 0.5).abs() < 1e-12);
        let three = Dist::uniform(GridSpec::cube(1, 0, 0.0, 4.0).unwrap(), [vec![0], vec![1], vec![2]]).unwrap();
        let expected = 2.0 / 9.0 * (1.0 + 1.0 + 0.5);
        assert!((riesz_energy(&three, 1.0).unwrap().value - expected).abs() < 1e-12);
        let one = Dist::point(GridSpec::unit(1, 2), vec![1]).unwrap();
        let e = riesz_energy(&one, 1.0).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.warning.is_some());
    }

    #[test]
    fn phi_values() {
        assert!((phi(1.0).unwrap() - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
        assert!((phi(0.5).unwrap() - 0.280776406).abs() < 1e-8);
        assert!(phi(0.0).is_err());
        let mut prev = 0.0;
        for i in 1..=100 {
            let u = i as f64 / 100.0;
            let v = phi(u).unwrap();
            assert!(v > u / 2.0 && v > prev);
            prev = v;
        }
    }

    #[test]
    fn partition_of_uniform() {
        let u = Dist::uniform(GridSpec::unit(1, 6), (0..64).map(|k| vec![k])).unwrap();
        let p = partition_frostman(&u, 0.25, 1.0, 2.0).unwrap();
        assert_eq!((p.k, p.i0), (3, 3));
        assert_eq!(p.masses, [0.375, 0.5, 0.125]);
        assert_eq!(p.gap, 0.125);
        assert!(p.reports.iter().all(|r| r.pass), "{:?}", p.reports);
    }

    #[test]
    fn partition_of_point_mass_fails() {
        let d = Dist::point(GridSpec::unit(1, 6), vec![5]).unwrap();
        let c = frostman_constant_1d(&d, 0.5).unwrap().constant;
        assert!(partition_frostman(&d, 0.1, 0.5, c).is_err());
    }

    #[test]
    fn cut_away_examples() {
        let u = Dist::uniform(GridSpec::unit(1, 8), (0..256).map(|k| vec![k])).unwrap();
        let r = cut_away_from_zero(&u, |z| z[0] * z[0], 0.5, 1.0, 0.125, 8).unwrap();
        assert!(r.report.pass, "{r:?}");
        let away = Dist::uniform(GridSpec::unit(1, 8), (128..256).map(|k| vec![k])).unwrap();
        let r = cut_away_from_zero(&away, |z| z[0] * z[0], 0.5, 1.0, 0.125, 8).unwrap();
        assert_eq!(r.p_event, 1.0);
        assert_eq!(r.report.lhs, 0.0);
        assert!(cut_away_from_zero(&u, |z| z[0] * z[0], 0.5, 1.0, 0.3, 8).is_err());
    }

    #[test]
    fn distance_report_edges() {
        let p = Dist::point(GridSpec::unit(2, 3), vec![1, 1]).unwrap();
        let r = distance_entropy_report(&p, DistanceMode::Squared, 0.75, None, 3).unwrap();
        assert!(r.degenerate);
        assert!(matches!(
            distance_entropy_report(&p, DistanceMode::Distance, 0.5, None, 3),
            Err(Error::EmptyRange(_))
        ));
        assert!(admissible_window(DistanceMode::DistanceSmallS, 0.25).unwrap().1 > 0.25);
    }

    #[test]
    fn annulus_diagnostic_runs() {
        let d = Dist::uniform(GridSpec::unit(2, 1), [vec![0, 0], vec![1, 0], vec![0, 1]]).unwrap();
        let r = annulus_diagnostic(&d, 0.5, 1.0 / 16.0, 0.75).unwrap();
        assert!(!r.normative && r.lhs.is_finite());
        assert!(annulus_diagnostic(&d, 0.1, 0.2, 0.75).is_err());
    }
}
