//! Seeded verification suites over random corpora and the example
//! fixtures. Each report is tagged with the check it belongs to, so the
//! summary has one row per check.

use std::collections::BTreeMap;

use entlab::bsg_construct::{bsg_entropy_report, verify_lemma_weak_bsg};
use entlab::distance_energy::partition_frostman;
use entlab::entropy_core::{
    check_chain_rule, check_concavity, check_cond_iid_identity, check_linear_comb_bound, check_mutual_information_nonneg,
    check_plunnecke_ruzsa, check_submodularity, small_mass_bound,
};
use entlab::examples_gallery::{pair, run_example_suite, ExampleSpec, Family};
use entlab::frostman_cert::{check_entropy_lower_bound, check_linear_transform_frostman, check_small_distance, frostman_constant_1d, hierarchy_report};
use entlab::pushforward::ScalarMap;
use entlab::random::{random_1d, random_cascade, random_joint, rng};
use entlab::rational::{q, Q};
use entlab::{Dist, Event, GridSpec, Report, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identities,
    Inequalities,
    Bsg,
    Examples,
    Frostman,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Inequalities => "inequalities",
            Suite::Bsg => "bsg",
            Suite::Examples => "examples",
            Suite::Frostman => "frostman",
            Suite::All => "all",
        }
    }
}

/// A report tagged with its check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tagged {
    pub check: String,
    pub report: Report,
}

fn tag(check: &str, report: Report) -> Tagged {
    Tagged {
        check: check.into(),
        report,
    }
}

/// Most atoms per axis in the random corpus.
pub const ATOMS_PER_AXIS: usize = 6;

/// Random joints at levels 3 to 5 with at most six values per axis.
pub fn random_corpus(seed: u64, trials: usize) -> Vec<Dist> {
    let mut r = rng(seed);
    (0..trials).map(|i| random_joint(&mut r, 3 + (i % 3) as u32, ATOMS_PER_AXIS)).collect()
}

/// Two-axis fixtures from the example families.
pub fn example_fixtures() -> Vec<(String, Dist)> {
    [
        ExampleSpec::new(Family::Ex1, 2, 2),
        ExampleSpec::new(Family::Ex1, 3, 1),
        ExampleSpec::new(Family::Ex2Dependent, 3, 0),
        ExampleSpec::new(Family::ExCond, 1, 0),
    ]
    .into_iter()
    .map(|spec| {
        let name = format!("{}(m={}, l={})", spec.family.name(), spec.m, spec.l);
        (name, pair(&spec).expect("fixture"))
    })
    .collect()
}

pub fn identities(corpus: &[Dist]) -> Result<Vec<Tagged>> {
    let mut out = Vec::new();
    for d in corpus {
        out.push(tag("chain_rule", check_chain_rule(d, &[1])?));
        out.push(tag("chain_rule", check_chain_rule(d, &[0])?));
        out.push(tag("mutual_information_nonneg", check_mutual_information_nonneg(d, &[0], &[1])?));
        out.push(tag("cond_iid_identity", check_cond_iid_identity(d)?));
    }
    Ok(out)
}

/// `(x, y, x + y)` on a box wide enough for the sum.
fn with_sum_axis(d: &Dist) -> Result<Dist> {
    let grid = GridSpec::new(d.level(), vec![(0.0, 1.0), (0.0, 1.0), (0.0, 2.0)])?;
    Dist::new(grid, d.iter().map(|(c, m)| (vec![c[0], c[1], c[0] + c[1]], m)))
}

const SMALL_RATIONALS: [(i64, i64); 8] = [(1, 1), (2, 1), (-1, 1), (1, 2), (3, 2), (-2, 3), (3, 1), (-5, 4)];

fn small_rational(r: &mut ChaCha8Rng) -> Q {
    let (a, b) = SMALL_RATIONALS[r.random_range(0..SMALL_RATIONALS.len())];
    q(a, b)
}

pub fn inequalities(corpus: &[Dist], seed: u64) -> Result<Vec<Tagged>> {
    let mut r = rng(seed ^ 0x1b87_3593);
    let mut out = Vec::new();
    for d in corpus {
        // X = x is read off both (x, y) and (x, x+y); Y = (y, x+y).
        let triple = with_sum_axis(d)?;
        out.push(tag(
            "submodularity",
            check_submodularity(&triple, &[0, 1], &[0, 2], |z| vec![z[0]], |w| vec![w[0]], |z, w| vec![z[1], w[1]])?,
        ));

        let parity = r.random_range(0..2i64);
        let even = Event::from_predicate(d, |c| c[0].rem_euclid(2) == parity);
        let odd = Event::from_predicate(d, |c| c[0].rem_euclid(2) != parity);
        out.push(tag("concavity", check_concavity(d, &[even, odd])?));

        let lambda = r.random_range(0.05..=0.5);
        let share = r.random_range(0.1..=1.0);
        let p: Vec<f64> = d.iter().map(|(_, m)| m * lambda * share).collect();
        out.push(tag("small_mass_bound", small_mass_bound(&p, lambda)?));

        let (k, l) = (small_rational(&mut r), small_rational(&mut r));
        out.push(tag("linear_combination_bound", check_linear_comb_bound(d, &k, &l)?));

        let level = d.level();
        let laws: Vec<Dist> = (0..3)
            .map(|_| {
                let atoms = r.random_range(1..=ATOMS_PER_AXIS);
                random_1d(&mut r, level, atoms)
            })
            .collect();
        for rep in check_plunnecke_ruzsa(&laws[0], &laws[1], &laws[2])? {
            out.push(tag("plunnecke_ruzsa", rep));
        }

        let x = d.marginal(&[0])?;
        let s = r.random_range(0.2..=1.0);
        let cert = frostman_constant_1d(&x, s)?;
        for n in 1..=level {
            out.push(tag("entropy_lower_bound", check_entropy_lower_bound(&x, &cert, n)?));
        }
    }
    Ok(out)
}

pub fn bsg(corpus: &[Dist], fixtures: &[Dist]) -> Result<Vec<Tagged>> {
    let id = ScalarMap::identity();
    let sq = ScalarMap::square(1.0, 0.25, 1.0)?;
    let mut out = Vec::new();
    for d in corpus.iter().chain(fixtures) {
        let level = d.level();
        for n in [level, level.saturating_sub(1).max(1)] {
            for (f, g) in [(&id, &id), (&sq, &id)] {
                let rep = bsg_entropy_report(d, n, f, g)?;
                for s in rep.structure {
                    out.push(tag("coupling_structure", s));
                }
                out.push(tag("conclusion_x", rep.conc1));
                out.push(tag("conclusion_y", rep.conc2));
                out.push(tag("sum_conclusion_tripwire", rep.conc3));
            }
            out.push(tag("weak_bsg", verify_lemma_weak_bsg(d, n, &id, &id)?));
        }
    }
    Ok(out)
}

/// Specs run by the examples suite.
pub fn example_specs() -> Vec<ExampleSpec> {
    let mut specs = Vec::new();
    for m in 2..=4 {
        for l in 0..=3 {
            specs.push(ExampleSpec::new(Family::Ex1, m, l));
        }
    }
    specs.extend([
        ExampleSpec::new(Family::Ex1Sqrt, 3, 3),
        ExampleSpec::new(Family::Ex1Degenerate, 3, 2),
        ExampleSpec::new(Family::Ex2, 3, 0),
        ExampleSpec::new(Family::Ex2Dependent, 3, 0),
        ExampleSpec::new(Family::ExCond, 2, 0),
        ExampleSpec::new(Family::ExCounterexample, 4, 6),
    ]);
    specs
}

pub fn examples() -> Result<Vec<Tagged>> {
    let mut out = Vec::new();
    for spec in example_specs() {
        let check = format!("{}(m={}, l={})", spec.family.name(), spec.m, spec.l);
        for rep in run_example_suite(&spec)? {
            out.push(tag(&check, rep));
        }
    }
    Ok(out)
}

/// Mass bounds `gamma` cycled through by the partition instances.
pub const PARTITION_GAMMAS: [f64; 3] = [0.1, 0.2, 0.3];

/// Partition lemma on `count` random cascades, each certified at a random
/// exponent with its measured constant.
pub fn partition(seed: u64, count: usize) -> Result<Vec<Tagged>> {
    let mut r = rng(seed ^ 0x5bd1_e995);
    let mut out = Vec::new();
    for i in 0..count {
        let mu = random_cascade(&mut r, 14, 0.3);
        let s = r.random_range(0.5..=0.9);
        let c = frostman_constant_1d(&mu, s)?.constant;
        let gamma = PARTITION_GAMMAS[i % PARTITION_GAMMAS.len()];
        for rep in partition_frostman(&mu, gamma, s, c)?.reports {
            out.push(tag("partition", rep));
        }
    }
    Ok(out)
}

pub fn frostman(corpus: &[Dist], fixtures: &[Dist], seed: u64) -> Result<Vec<Tagged>> {
    let mut r = rng(seed ^ 0x27d4_eb2f);
    let mut out = Vec::new();
    for d in corpus.iter().chain(fixtures) {
        let (s1, s2) = (r.random_range(0.1..=1.0), r.random_range(0.1..=1.0));
        for rep in hierarchy_report(d, s1, s2)?.reports {
            out.push(tag("hierarchy", rep));
        }
        let coeffs: Vec<Q> = loop {
            let c: Vec<Q> = (0..4).map(|_| small_rational(&mut r)).collect();
            if &c[0] * &c[3] != &c[1] * &c[2] {
                break c;
            }
        };
        for rep in check_linear_transform_frostman(d, [&coeffs[0], &coeffs[1], &coeffs[2], &coeffs[3]], s1, s2)? {
            out.push(tag("linear_transform", rep));
        }
        let (x, y) = (d.marginal(&[0])?, d.marginal(&[1])?);
        let cert = frostman_constant_1d(&x, s1)?;
        for rep in check_small_distance(&x, &y, &cert)? {
            out.push(tag("small_distance", rep));
        }
    }
    out.extend(partition(seed, 30)?);
    Ok(out)
}

/// Runs one suite (or all of them) with a seeded corpus plus extra
/// fixtures supplied by the caller.
pub fn run_suite(suite: Suite, seed: u64, trials: usize, extra: &[Dist]) -> Result<Vec<Tagged>> {
    let corpus = random_corpus(seed, trials);
    let mut fixtures: Vec<Dist> = example_fixtures().into_iter().map(|(_, d)| d).collect();
    fixtures.extend(extra.iter().cloned());
    // Extra fixtures join the random corpus for the identity checks too.
    let mut with_extra = corpus.clone();
    with_extra.extend(extra.iter().cloned());
    Ok(match suite {
        Suite::Identities => identities(&with_extra)?,
        Suite::Inequalities => inequalities(&with_extra, seed)?,
        Suite::Bsg => bsg(&corpus, &fixtures)?,
        Suite::Examples => examples()?,
        Suite::Frostman => frostman(&corpus, &fixtures, seed)?,
        Suite::All => {
            let mut v = identities(&with_extra)?;
            v.extend(inequalities(&with_extra, seed)?);
            v.extend(bsg(&corpus, &fixtures)?);
            v.extend(examples()?);
            v.extend(frostman(&corpus, &fixtures, seed)?);
            v
        }
    })
}

/// One summary row per check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub check: String,
    pub count: usize,
    pub failures: usize,
    pub normative: bool,
    pub min_slack: f64,
    pub median_slack: f64,
    pub max_slack: f64,
}

pub fn summarize(tagged: &[Tagged]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<&str, Vec<&Report>> = BTreeMap::new();
    for t in tagged {
        groups.entry(&t.check).or_default().push(&t.report);
    }
    groups
        .into_iter()
        .map(|(check, reps)| {
            let mut slacks: Vec<f64> = reps.iter().map(|r| r.slack).collect();
            slacks.sort_by(f64::total_cmp);
            SummaryRow {
                check: check.into(),
                count: reps.len(),
                failures: reps.iter().filter(|r| r.normative && !r.pass).count(),
                normative: reps.iter().any(|r| r.normative),
                min_slack: slacks[0],
                median_slack: slacks[slacks.len() / 2],
                max_slack: slacks[slacks.len() - 1],
            }
        })
        .collect()
}

/// Normative reports that failed.
pub fn failures(tagged: &[Tagged]) -> Vec<&Tagged> {
    tagged.iter().filter(|t| t.report.normative && !t.report.pass).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_reproducible_per_seed() {
        assert_eq!(random_corpus(7, 5), random_corpus(7, 5));
        assert_ne!(random_corpus(7, 5), random_corpus(8, 5));
        assert!(random_corpus(1, 20).iter().all(|d| d.dim() == 2));
    }

    #[test]
    fn summary_counts_only_normative_failures() {
        let tagged = vec![
            tag("a", Report::le("x", 1.0, 2.0, 0.0)),
            tag("a", Report::le("y", 3.0, 2.0, 0.0)),
            tag("b", Report::diagnostic("z", 5.0, 1.0)),
        ];
        let rows = summarize(&tagged);
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].count, rows[0].failures, rows[0].min_slack), (2, 1, -1.0));
        assert_eq!(rows[1].failures, 0);
        assert!(!rows[1].normative);
        assert_eq!(failures(&tagged).len(), 1);
    }

    #[test]
    fn identities_hold_on_a_small_corpus() {
        let tagged = run_suite(Suite::Identities, 3, 10, &[]).unwrap();
        assert_eq!(tagged.len(), 40);
        assert!(failures(&tagged).is_empty());
    }
}
