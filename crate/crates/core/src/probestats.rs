//! Analysis of categorised probe-response logs: filtering of irrelevant
//! answers and one-sample t-tests of binary outcomes against chance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActorKind {
    Animate,
    Inanimate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QuestionKind {
    #[serde(rename = "Q1_grasp")]
    Q1Grasp,
    #[serde(rename = "Q2_location")]
    Q2Location,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Correct,
    Incorrect,
    Irrelevant,
    Hallucinated,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [Outcome::Correct, Outcome::Incorrect, Outcome::Irrelevant, Outcome::Hallucinated];
}

fn parse_enum<T: Copy>(s: &str, table: &[(&str, T)]) -> Option<T> {
    table.iter().find(|(n, _)| n.eq_ignore_ascii_case(s.trim())).map(|&(_, v)| v)
}

impl FromStr for ActorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_enum(s, &[("animate", ActorKind::Animate), ("inanimate", ActorKind::Inanimate)])
            .ok_or_else(|| format!("unknown actor_kind {s:?}"))
    }
}

impl FromStr for QuestionKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_enum(s, &[("Q1_grasp", QuestionKind::Q1Grasp), ("Q2_location", QuestionKind::Q2Location)])
            .ok_or_else(|| format!("unknown question_kind {s:?}"))
    }
}

impl FromStr for Outcome {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_enum(
            s,
            &[
                ("correct", Outcome::Correct),
                ("incorrect", Outcome::Incorrect),
                ("irrelevant", Outcome::Irrelevant),
                ("hallucinated", Outcome::Hallucinated),
            ],
        )
        .ok_or_else(|| format!("unknown outcome {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub sequence_id: String,
    pub actor_kind: ActorKind,
    pub question_kind: QuestionKind,
    pub outcome: Outcome,
}

/// Counterbalancing of the probe protocol.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogMetadata {
    pub sequences_per_actor: usize,
    pub questions: usize,
}

impl Default for LogMetadata {
    fn default() -> LogMetadata {
        LogMetadata {
            sequences_per_actor: 4,
            questions: 2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseLog {
    pub records: Vec<ProbeRecord>,
    pub metadata: LogMetadata,
}

impl ResponseLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn counts(&self) -> BTreeMap<Outcome, usize> {
        let mut m: BTreeMap<Outcome, usize> = Outcome::ALL.iter().map(|&o| (o, 0)).collect();
        for r in &self.records {
            *m.get_mut(&r.outcome).expect("all outcomes present") += 1;
        }
        m
    }

    /// Checks that every (sequence, question) pair occurs once and that each
    /// sequence has the configured number of questions.
    pub fn audit(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        let mut per_seq: BTreeMap<&str, (ActorKind, usize)> = BTreeMap::new();
        for r in &self.records {
            if !seen.insert((r.sequence_id.as_str(), r.question_kind)) {
                return Err(Error::BadConfig(format!(
                    "sequence {} asked {:?} twice",
                    r.sequence_id, r.question_kind
                )));
            }
            let e = per_seq.entry(&r.sequence_id).or_insert((r.actor_kind, 0));
            if e.0 != r.actor_kind {
                return Err(Error::BadConfig(format!("sequence {} has mixed actor kinds", r.sequence_id)));
            }
            e.1 += 1;
        }
        if let Some((id, _)) = per_seq.iter().find(|(_, &(_, n))| n != self.metadata.questions) {
            return Err(Error::BadConfig(format!(
                "sequence {id} does not have {} questions",
                self.metadata.questions
            )));
        }
        let animate = per_seq.values().filter(|(k, _)| *k == ActorKind::Animate).count();
        if animate * 2 != per_seq.len() {
            return Err(Error::BadConfig(format!(
                "{animate} of {} sequences show animate actors",
                per_seq.len()
            )));
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct RawRecord {
    sequence_id: String,
    actor_kind: String,
    question_kind: String,
    outcome: String,
}

/// Parses a CSV log with header `sequence_id,actor_kind,question_kind,outcome`.
pub fn parse_log<R: Read>(reader: R) -> Result<ResponseLog> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    let want = ["sequence_id", "actor_kind", "question_kind", "outcome"];
    if !want.iter().all(|w| headers.iter().any(|h| h == *w)) {
        return Err(Error::Parse {
            line: 1,
            message: format!("header must contain {}", want.join(",")),
        });
    }
    let mut records = Vec::new();
    for row in rdr.deserialize::<RawRecord>() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = records.len() + 2;
        let bad = |message: String| Error::Parse { line, message };
        if row.sequence_id.is_empty() {
            return Err(bad("empty sequence_id".into()));
        }
        records.push(ProbeRecord {
            sequence_id: row.sequence_id,
            actor_kind: row.actor_kind.parse().map_err(bad)?,
            question_kind: row.question_kind.parse().map_err(bad)?,
            outcome: row.outcome.parse().map_err(bad)?,
        });
    }
    if records.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "log has no records".into(),
        });
    }
    Ok(ResponseLog {
        records,
        metadata: LogMetadata::default(),
    })
}

pub fn load_log(path: &Path) -> Result<ResponseLog> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_log(std::io::BufReader::new(file))
}

/// The protocol skeleton: `n_actors` actors per kind, each shown in
/// `sequences` sequences with both questions. Outcomes are left blank.
pub fn log_template(n_actors: usize, sequences: usize) -> String {
    let mut out = String::from("sequence_id,actor_kind,question_kind,outcome\n");
    for a in 0..2 * n_actors {
        let kind = if a < n_actors { "animate" } else { "inanimate" };
        for s in 0..sequences {
            for q in ["Q1_grasp", "Q2_location"] {
                let _ = writeln!(out, "a{a}_s{s},{kind},{q},");
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSummary {
    pub kept: usize,
    pub dropped: BTreeMap<Outcome, usize>,
    /// Set when nothing is left.
    pub empty: bool,
}

/// Removes records whose outcome is in `drop`.
pub fn filter_responses(log: &ResponseLog, drop: &BTreeSet<Outcome>) -> (ResponseLog, FilterSummary) {
    let mut dropped: BTreeMap<Outcome, usize> = drop.iter().map(|&o| (o, 0)).collect();
    let mut records = Vec::with_capacity(log.len());
    for r in &log.records {
        match dropped.get_mut(&r.outcome) {
            Some(n) => *n += 1,
            None => records.push(r.clone()),
        }
    }
    let summary = FilterSummary {
        kept: records.len(),
        dropped,
        empty: records.is_empty(),
    };
    (
        ResponseLog {
            records,
            metadata: log.metadata.clone(),
        },
        summary,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub n: usize,
    pub k_success: usize,
    pub fraction: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub comparison: String,
    /// All outcomes identical: the t statistic is infinite and p is 0.
    pub degenerate: bool,
}

const COMPARISON: &str = "one-sample t-test of binary outcomes vs mean 0.5";

/// One-sample t-test of `k` successes in `n` binary trials against mean 0.5,
/// with n−1 degrees of freedom and a two-sided p-value.
pub fn ttest_counts(n: usize, k: usize) -> Result<TestResult> {
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    assert!(k <= n, "k_success {k} exceeds n {n}");
    let nf = n as f64;
    let p_hat = k as f64 / nf;
    let var = nf / (nf - 1.0) * p_hat * (1.0 - p_hat);
    let degenerate = var == 0.0;
    let (t, p) = if degenerate {
        let t = if p_hat == 0.5 {
            0.0
        } else {
            f64::INFINITY.copysign(p_hat - 0.5)
        };
        (t, 0.0)
    } else {
        let t = (p_hat - 0.5) / (var / nf).sqrt();
        (t, t_two_sided_p(t, nf - 1.0))
    };
    Ok(TestResult {
        n,
        k_success: k,
        fraction: p_hat,
        t_statistic: t,
        p_value: p,
        comparison: COMPARISON.into(),
        degenerate,
    })
}

/// Binarises the log with `success` and tests against chance.
pub fn ttest_vs_chance(log: &ResponseLog, success: impl Fn(&ProbeRecord) -> bool) -> Result<TestResult> {
    let k = log.records.iter().filter(|r| success(r)).count();
    ttest_counts(log.len(), k)
}

pub fn is_correct(r: &ProbeRecord) -> bool {
    r.outcome == Outcome::Correct
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facet {
    ActorKind,
    QuestionKind,
}

impl FromStr for Facet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_enum(s, &[("actor_kind", Facet::ActorKind), ("question_kind", Facet::QuestionKind)])
            .ok_or_else(|| format!("unknown facet {s:?} (expected actor_kind or question_kind)"))
    }
}

fn facet_value(r: &ProbeRecord, facet: Facet) -> &'static str {
    match facet {
        Facet::ActorKind => match r.actor_kind {
            ActorKind::Animate => "animate",
            ActorKind::Inanimate => "inanimate",
        },
        Facet::QuestionKind => match r.question_kind {
            QuestionKind::Q1Grasp => "Q1_grasp",
            QuestionKind::Q2Location => "Q2_location",
        },
    }
}

/// Independent correct-vs-rest t-tests for every value of `facet`.
pub fn subgroup_analysis(log: &ResponseLog, facet: Facet) -> Result<BTreeMap<String, TestResult>> {
    let mut groups: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in &log.records {
        let g = groups.entry(facet_value(r, facet)).or_default();
        g.0 += 1;
        g.1 += is_correct(r) as usize;
    }
    groups.into_iter().map(|(name, (n, k))| Ok((name.to_string(), ttest_counts(n, k)?))).collect()
}

/// Plain-text table of named results.
pub fn format_table(rows: &[(String, TestResult)]) -> String {
    let mut out = format!("{:<24} {:>5} {:>5} {:>9} {:>9} {:>9}\n", "group", "n", "k", "fraction", "t", "p");
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{:<24} {:>5} {:>5} {:>9.3} {:>9.3} {:>9.3}{}",
            name,
            r.n,
            r.k_success,
            r.fraction,
            r.t_statistic,
            r.p_value,
            if r.degenerate { "  (degenerate)" } else { "" }
        );
    }
    out
}

/// Two-sided p-value of Student's t with `df` degrees of freedom:
/// `I_{df/(df+t²)}(df/2, 1/2)`.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    incomplete_beta(df / 2.0, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

/// Cumulative distribution function of Student's t.
pub fn t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * t_two_sided_p(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Natural log of the gamma function (Lanczos, g = 7, n = 9), for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularised incomplete beta function `I_x(a, b)`, evaluated with the
/// modified Lentz continued fraction and the symmetry
/// `I_x(a, b) = 1 − I_{1−x}(b, a)` when `x > (a+1)/(a+b+2)`.
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::distribution::{ContinuousCDF, StudentsT};
    use statrs::function::beta::beta_reg;
    use statrs::function::gamma::ln_gamma as sr_ln_gamma;

    fn oracle_p(t: f64, df: f64) -> f64 {
        let d = StudentsT::new(0.0, 1.0, df).unwrap();
        2.0 * d.cdf(-t.abs())
    }

    /// Two-sided tail by composite Simpson integration of the t density,
    /// after the substitution t = tan(θ) that maps the tail to a finite range.
    fn quadrature_p(t: f64, df: f64) -> f64 {
        let ln_c = sr_ln_gamma((df + 1.0) / 2.0) - sr_ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
        let f = |th: f64| {
            let x = th.tan();
            let jac = 1.0 + x * x;
            (ln_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp() * jac
        };
        let (a, b) = (t.abs().atan(), std::f64::consts::FRAC_PI_2);
        let n = 200_000;
        let h = (b - a) / n as f64;
        let mut s = f(a) + if df > 1.0 { 0.0 } else { f(b - 1e-12) };
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        2.0 * s * h / 3.0
    }

    fn log_with(counts: &[(ActorKind, QuestionKind, Outcome, usize)]) -> ResponseLog {
        let mut records = Vec::new();
        for &(a, q, o, n) in counts {
            for i in 0..n {
                records.push(ProbeRecord {
                    sequence_id: format!("{a:?}{q:?}{o:?}{i}"),
                    actor_kind: a,
                    question_kind: q,
                    outcome: o,
                });
            }
        }
        ResponseLog {
            records,
            metadata: LogMetadata::default(),
        }
    }

    #[test]
    fn first_table_p_value() {
        let r = ttest_counts(176, 73).unwrap();
        assert!((r.fraction - 73.0 / 176.0).abs() < 1e-15);
        assert!((r.p_value - 0.023).abs() < 0.002, "{}", r.p_value);
        assert!((r.p_value - oracle_p(r.t_statistic, 175.0)).abs() < 1e-10);
    }

    #[test]
    fn second_table_values() {
        let r = ttest_counts(147, 73).unwrap();
        assert!((r.fraction - 0.496).abs() < 0.001);
        assert!((r.p_value - 0.934).abs() < 0.005, "{}", r.p_value);
        assert!((r.p_value - oracle_p(r.t_statistic, 146.0)).abs() < 1e-10);
    }

    #[test]
    fn exact_chance() {
        let r = ttest_counts(100, 50).unwrap();
        assert_eq!(r.t_statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_tiny_samples() {
        let r = ttest_counts(10, 10).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 0.0);
        assert_eq!(r.t_statistic, f64::INFINITY);
        assert!(ttest_counts(10, 0).unwrap().t_statistic < 0.0);
        assert!(matches!(ttest_counts(1, 1), Err(Error::TooFewSamples(1))));
    }

    #[test]
    fn t_statistic_matches_raw_samples() {
        for (n, k) in [(176, 73), (147, 73), (20, 3), (9, 8)] {
            let xs: Vec<f64> = (0..n).map(|i| (i < k) as u8 as f64).collect();
            let m = xs.iter().sum::<f64>() / n as f64;
            let s = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
            let t = (m - 0.5) / (s / (n as f64).sqrt());
            assert!((ttest_counts(n, k).unwrap().t_statistic - t).abs() < 1e-12);
        }
    }

    #[test]
    fn p_values_match_independent_oracles() {
        for &df in &[1.0, 2.0, 5.0, 30.0, 146.0, 175.0] {
            for &t in &[0.0, 0.1, 0.5, 1.0, 2.2884, 3.0, 8.0] {
                let p = t_two_sided_p(t, df);
                assert!((p - oracle_p(t, df)).abs() < 1e-10, "df={df} t={t}");
                if df > 1.0 {
                    assert!((p - quadrature_p(t, df)).abs() < 1e-8, "df={df} t={t}");
                }
            }
        }
    }

    #[test]
    fn special_functions_match_reference() {
        for &x in &[0.1, 0.5, 1.0, 2.5, 10.0, 87.5, 170.3] {
            assert!((ln_gamma(x) - sr_ln_gamma(x)).abs() < 1e-12 * sr_ln_gamma(x).abs().max(1.0), "x={x}");
        }
        for &(a, b, x) in &[(0.5, 0.5, 0.3), (73.0, 0.5, 0.99), (2.0, 3.0, 0.6), (10.0, 0.5, 0.1)] {
            assert!((incomplete_beta(a, b, x) - beta_reg(a, b, x)).abs() < 1e-12);
        }
        assert!((t_cdf(0.0, 7.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn parse_rejects_unknown_outcome_with_line() {
        let text = "sequence_id,actor_kind,question_kind,outcome\na0_s0,animate,Q1_grasp,correct\na0_s0,animate,Q2_location,maybe\n";
        match parse_log(text.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("maybe"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_rejects_empty_input() {
        assert!(matches!(parse_log("".as_bytes()), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_log("sequence_id,actor_kind,question_kind,outcome\n".as_bytes()),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(parse_log("a,b\n1,2\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn filtering() {
        use ActorKind::*;
        use Outcome::*;
        use QuestionKind::*;
        let log = log_with(&[(Animate, Q1Grasp, Correct, 3), (Animate, Q1Grasp, Irrelevant, 2), (Inanimate, Q2Location, Hallucinated, 1)]);
        let (same, s) = filter_responses(&log, &BTreeSet::new());
        assert_eq!(same, log);
        assert_eq!(s.kept, 6);
        let (f, s) = filter_responses(&log, &[Irrelevant, Hallucinated].into());
        assert_eq!(f.len(), 3);
        assert_eq!(s.dropped[&Irrelevant], 2);
        let (none, s) = filter_responses(&log, &Outcome::ALL.into());
        assert!(none.is_empty() && s.empty);
    }

    #[test]
    fn subgroups() {
        use ActorKind::*;
        use Outcome::*;
        use QuestionKind::*;
        let log = log_with(&[
            (Animate, Q1Grasp, Correct, 5),
            (Animate, Q2Location, Incorrect, 5),
            (Inanimate, Q1Grasp, Correct, 5),
            (Inanimate, Q2Location, Correct, 5),
        ]);
        let by_q = subgroup_analysis(&log, Facet::QuestionKind).unwrap();
        assert_eq!(by_q.len(), 2);
        assert!(by_q["Q1_grasp"].degenerate);
        let by_a = subgroup_analysis(&log, Facet::ActorKind).unwrap();
        assert_eq!(by_a["animate"].k_success, 5);
        assert!(by_a["inanimate"].degenerate);
    }

    #[test]
    fn template_has_protocol_shape() {
        let t = log_template(11, 4);
        assert_eq!(t.lines().count(), 177);
        assert!(t.lines().nth(1).unwrap().starts_with("a0_s0,animate,Q1_grasp,"));
    }

    proptest! {
        #[test]
        fn swapping_labels_keeps_p(n in 2usize..400, frac in 0.0f64..=1.0) {
            let k = ((n as f64) * frac).round() as usize;
            let a = ttest_counts(n, k).unwrap();
            let b = ttest_counts(n, n - k).unwrap();
            prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
            prop_assert!((a.fraction + b.fraction - 1.0).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a.p_value));
        }
    }
}
