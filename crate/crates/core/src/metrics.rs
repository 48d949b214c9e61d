//! Composite narrativity metrics and the per-text orchestrator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_decay, DecayFit};
use crate::lexical::{Lexicons, SurfaceStats};
use crate::perturb::shuffles;
use crate::scoring::{cumulative_trajectory, text_perplexity, LogprobProvider, PerplexityTrajectory};
use crate::text::{ExplanationText, Segmenter};

/// Why a metric has no value. Undefined values are reported, never coerced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Undefined {
    TooFewSentences,
    FlatTrajectory,
    NonFinite,
    SingleSentence,
    TooFewWords,
    DegeneratePredictability,
    ZeroRatio,
    NoDefinedValues,
}

impl Undefined {
    pub fn reason(self) -> &'static str {
        match self {
            Undefined::TooFewSentences => "too few sentences to fit",
            Undefined::FlatTrajectory => "flat trajectory, r unidentifiable",
            Undefined::NonFinite => "non-finite trajectory",
            Undefined::SingleSentence => "nothing to shuffle",
            Undefined::TooFewWords => "fewer than two words",
            Undefined::DegeneratePredictability => "degenerate predictability",
            Undefined::ZeroRatio => "zero ratio",
            Undefined::NoDefinedValues => "no defined values",
        }
    }
}

impl fmt::Display for Undefined {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.reason())
    }
}

/// A metric value or the reason it is undefined.
///
/// Serializes as a bare number or as `{"undefined": "<reason>"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "MeasureRepr", into = "MeasureRepr")]
pub enum Measure {
    Defined(f64),
    Undefined(Undefined),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MeasureRepr {
    Value(f64),
    Undefined { undefined: Undefined },
}

impl From<MeasureRepr> for Measure {
    fn from(r: MeasureRepr) -> Self {
        match r {
            MeasureRepr::Value(v) => Measure::Defined(v),
            MeasureRepr::Undefined { undefined } => Measure::Undefined(undefined),
        }
    }
}

impl From<Measure> for MeasureRepr {
    fn from(m: Measure) -> Self {
        match m {
            Measure::Defined(v) => MeasureRepr::Value(v),
            Measure::Undefined(undefined) => MeasureRepr::Undefined { undefined },
        }
    }
}

impl From<std::result::Result<f64, Undefined>> for Measure {
    fn from(r: std::result::Result<f64, Undefined>) -> Self {
        match r {
            Ok(v) => Measure::Defined(v),
            Err(u) => Measure::Undefined(u),
        }
    }
}

impl Measure {
    pub fn value(self) -> Option<f64> {
        match self {
            Measure::Defined(v) => Some(v),
            Measure::Undefined(_) => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Measure::Defined(_))
    }

    pub fn and_then(self, f: impl FnOnce(f64) -> Measure) -> Measure {
        match self {
            Measure::Defined(v) => f(v),
            u => u,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Higher,
    Lower,
}

impl Direction {
    pub fn arrow(self) -> &'static str {
        match self {
            Direction::Higher => "↑",
            Direction::Lower => "↓",
        }
    }

    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Higher => a > b,
            Direction::Lower => a < b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricGroup {
    Standard,
    Narrativity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricId {
    Ppl,
    Dist2,
    Ttr,
    Vr,
    Cd,
    Fdr,
    Csr,
    Cecpr,
    Dcpr,
    Ccpr,
    Ttcpr,
    Vcpr,
}

impl MetricId {
    /// Summary-table column order.
    pub const ALL: [MetricId; 12] = [
        MetricId::Ppl,
        MetricId::Dist2,
        MetricId::Ttr,
        MetricId::Vr,
        MetricId::Cd,
        MetricId::Fdr,
        MetricId::Csr,
        MetricId::Cecpr,
        MetricId::Dcpr,
        MetricId::Ccpr,
        MetricId::Ttcpr,
        MetricId::Vcpr,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MetricId::Ppl => "PPL",
            MetricId::Dist2 => "Dist2",
            MetricId::Ttr => "TTR",
            MetricId::Vr => "VR",
            MetricId::Cd => "CD",
            MetricId::Fdr => "FDR",
            MetricId::Csr => "CSR",
            MetricId::Cecpr => "CECPR",
            MetricId::Dcpr => "DCPR",
            MetricId::Ccpr => "CCPR",
            MetricId::Ttcpr => "TTCPR",
            MetricId::Vcpr => "VCPR",
        }
    }

    /// Lowercase identifier used in CSV files.
    pub fn key(self) -> &'static str {
        match self {
            MetricId::Ppl => "ppl",
            MetricId::Dist2 => "dist2",
            MetricId::Ttr => "ttr",
            MetricId::Vr => "vr",
            MetricId::Cd => "cd",
            MetricId::Fdr => "fdr",
            MetricId::Csr => "csr",
            MetricId::Cecpr => "cecpr",
            MetricId::Dcpr => "dcpr",
            MetricId::Ccpr => "ccpr",
            MetricId::Ttcpr => "ttcpr",
            MetricId::Vcpr => "vcpr",
        }
    }

    /// Accepts the key or the label, case-insensitively.
    pub fn parse(s: &str) -> Option<MetricId> {
        let s = s.trim().to_lowercase();
        MetricId::ALL.into_iter().find(|m| m.key() == s)
    }

    pub fn direction(self) -> Direction {
        match self {
            MetricId::Dist2 | MetricId::Ttr | MetricId::Vr | MetricId::Cd | MetricId::Fdr | MetricId::Csr => {
                Direction::Higher
            }
            _ => Direction::Lower,
        }
    }

    pub fn group(self) -> MetricGroup {
        match self {
            MetricId::Ppl | MetricId::Dist2 | MetricId::Ttr | MetricId::Vr | MetricId::Cd => {
                MetricGroup::Standard
            }
            _ => MetricGroup::Narrativity,
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// FDR: `dist2² / ln(ppl)`.
pub fn fdr(dist2: f64, ppl: f64) -> Measure {
    if ppl <= 1.0 {
        return Measure::Undefined(Undefined::DegeneratePredictability);
    }
    Measure::Defined(dist2 * dist2 / ppl.ln())
}

/// CSR: relative perplexity increase under sentence shuffling.
pub fn csr(ppl_ordered: f64, ppl_shuffled: f64) -> f64 {
    (ppl_shuffled - ppl_ordered) / ppl_ordered
}

fn cpr(r: f64, ratio: f64) -> Measure {
    if ratio <= 0.0 {
        return Measure::Undefined(Undefined::ZeroRatio);
    }
    Measure::Defined(r / (ratio * ratio))
}

/// DCPR: `r / dist2²`.
pub fn dcpr(r: f64, dist2: f64) -> Measure {
    cpr(r, dist2)
}

/// CCPR: `r / cr²`.
pub fn ccpr(r: f64, cr: f64) -> Measure {
    cpr(r, cr)
}

/// CECPR: `r / cer²`.
pub fn cecpr(r: f64, cer: f64) -> Measure {
    cpr(r, cer)
}

/// TTCPR: `r / ttr²`.
pub fn ttcpr(r: f64, ttr: f64) -> Measure {
    cpr(r, ttr)
}

/// VCPR: `r / vr²`.
pub fn vcpr(r: f64, vr: f64) -> Measure {
    cpr(r, vr)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub ppl: Measure,
    pub dist2: Measure,
    pub ttr: Measure,
    pub vr: Measure,
    pub cd: Measure,
    pub fdr: Measure,
    pub csr: Measure,
    pub cecpr: Measure,
    pub dcpr: Measure,
    pub ccpr: Measure,
    pub ttcpr: Measure,
    pub vcpr: Measure,
}

impl MetricVector {
    /// Assembles all twelve metrics from their inputs.
    pub fn compose(
        ppl: f64,
        surface: &SurfaceStats,
        shuffled_ppl: Option<f64>,
        r: std::result::Result<f64, Undefined>,
    ) -> Self {
        let dist2: Measure = surface.dist2.ok_or(Undefined::TooFewWords).into();
        let r = Measure::from(r);
        MetricVector {
            ppl: Measure::Defined(ppl),
            dist2,
            ttr: Measure::Defined(surface.ttr),
            vr: Measure::Defined(surface.vr),
            cd: Measure::Defined(surface.cd),
            fdr: dist2.and_then(|d| fdr(d, ppl)),
            csr: match shuffled_ppl {
                Some(s) => Measure::Defined(csr(ppl, s)),
                None => Measure::Undefined(Undefined::SingleSentence),
            },
            cecpr: r.and_then(|r| cecpr(r, surface.cer)),
            dcpr: r.and_then(|r| dist2.and_then(|d| dcpr(r, d))),
            ccpr: r.and_then(|r| ccpr(r, surface.cr)),
            ttcpr: r.and_then(|r| ttcpr(r, surface.ttr)),
            vcpr: r.and_then(|r| vcpr(r, surface.vr)),
        }
    }

    pub fn get(&self, id: MetricId) -> Measure {
        match id {
            MetricId::Ppl => self.ppl,
            MetricId::Dist2 => self.dist2,
            MetricId::Ttr => self.ttr,
            MetricId::Vr => self.vr,
            MetricId::Cd => self.cd,
            MetricId::Fdr => self.fdr,
            MetricId::Csr => self.csr,
            MetricId::Cecpr => self.cecpr,
            MetricId::Dcpr => self.dcpr,
            MetricId::Ccpr => self.ccpr,
            MetricId::Ttcpr => self.ttcpr,
            MetricId::Vcpr => self.vcpr,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (MetricId, Measure)> + '_ {
        MetricId::ALL.into_iter().map(move |id| (id, self.get(id)))
    }
}

/// Shuffle policy for CSR.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Number of shuffled orders averaged per text.
    pub shuffles: usize,
    pub seed: u64,
    /// Use only the first shuffled order.
    pub single_shuffle: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            shuffles: 10,
            seed: 42,
            single_shuffle: false,
        }
    }
}

impl EvalConfig {
    pub fn shuffle_count(&self) -> usize {
        if self.single_shuffle {
            1
        } else {
            self.shuffles.max(1)
        }
    }
}

/// Everything computed for one text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextEvaluation {
    pub sentences: usize,
    pub words: usize,
    pub surface: SurfaceStats,
    pub ppl: f64,
    /// Mean perplexity over the shuffled orders.
    pub shuffled_ppl: Option<f64>,
    pub trajectory: Vec<f64>,
    pub fit: Option<DecayFit>,
    pub metrics: MetricVector,
}

/// Reusable evaluator holding the segmenter, lexicons and shuffle policy.
#[derive(Debug, Clone, Default)]
pub struct Evaluator {
    pub segmenter: Segmenter,
    pub lexicons: Lexicons,
    pub config: EvalConfig,
}

impl Evaluator {
    pub fn new(config: EvalConfig) -> Self {
        Evaluator {
            config,
            ..Default::default()
        }
    }

    pub fn evaluate(&self, raw: &str, provider: &dyn LogprobProvider) -> Result<TextEvaluation> {
        let text = ExplanationText::new(raw, &self.segmenter);
        if text.words.is_empty() {
            return Err(Error::EmptyText);
        }
        let surface = self.lexicons.surface_stats(&text.words)?;
        let ppl = text_perplexity(provider, raw)?;

        let shuffled_ppl = if text.sentence_count() >= 2 {
            let orders = shuffles(&text.sentences, self.config.seed, self.config.shuffle_count())?;
            let mut total = 0.0;
            for order in &orders {
                total += text_perplexity(provider, &order.join(" "))?;
            }
            Some(total / orders.len() as f64)
        } else {
            None
        };

        let (trajectory, fit) = if text.sentence_count() >= 3 {
            let PerplexityTrajectory { values } = cumulative_trajectory(provider, &text.sentences)?;
            let fit = fit_decay(&values);
            (values, fit)
        } else {
            (Vec::new(), Err(Undefined::TooFewSentences))
        };

        let metrics = MetricVector::compose(ppl, &surface, shuffled_ppl, fit.map(|f| f.r));
        Ok(TextEvaluation {
            sentences: text.sentence_count(),
            words: text.word_count(),
            surface,
            ppl,
            shuffled_ppl,
            trajectory,
            fit: fit.ok(),
            metrics,
        })
    }
}

/// All twelve metrics for `text` with the default segmenter and lexicons.
pub fn evaluate_text(
    text: &str,
    provider: &dyn LogprobProvider,
    config: &EvalConfig,
) -> Result<MetricVector> {
    Ok(Evaluator::new(config.clone()).evaluate(text, provider)?.metrics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::BigramCacheProvider;
    use proptest::prelude::*;

    fn close(m: Measure, want: f64, tol: f64) -> bool {
        m.value().is_some_and(|v| (v - want).abs() <= tol)
    }

    #[test]
    fn formula_examples() {
        assert!(close(fdr(0.92, 15.10), 0.31, 0.005));
        assert!(close(fdr(0.62, 4.65), 0.25, 0.005));
        assert!(close(fdr(1.0, std::f64::consts::E), 1.0, 1e-12));
        assert_eq!(fdr(0.5, 1.0), Measure::Undefined(Undefined::DegeneratePredictability));
        assert!((csr(15.10, 22.89) - 0.52).abs() < 0.005);
        assert!((csr(4.65, 6.49) - 0.40).abs() < 0.005);
        assert_eq!(csr(7.0, 7.0), 0.0);
        assert!(close(dcpr(0.15, 0.92), 0.18, 0.005));
        assert!(close(dcpr(0.13, 0.62), 0.34, 0.005));
        assert!(close(dcpr(0.37, 1.0), 0.37, 1e-12));
        assert!(close(cecpr(0.15, 0.026), 221.89, 0.01));
        assert_eq!(cecpr(0.13, 0.0), Measure::Undefined(Undefined::ZeroRatio));
        assert!(close(vcpr(0.15, 0.104), 13.87, 0.005));
        assert!(close(vcpr(0.13, 0.086), 17.58, 0.005));
    }

    #[test]
    fn measure_serialization() {
        let v = serde_json::to_string(&Measure::Defined(1.5)).unwrap();
        assert_eq!(v, "1.5");
        let u = serde_json::to_string(&Measure::Undefined(Undefined::ZeroRatio)).unwrap();
        assert_eq!(u, r#"{"undefined":"zero_ratio"}"#);
        let back: Measure = serde_json::from_str(&u).unwrap();
        assert_eq!(back, Measure::Undefined(Undefined::ZeroRatio));
    }

    #[test]
    fn metric_table_contract() {
        let labels: Vec<_> = MetricId::ALL.iter().map(|m| m.label()).collect();
        assert_eq!(
            labels,
            ["PPL", "Dist2", "TTR", "VR", "CD", "FDR", "CSR", "CECPR", "DCPR", "CCPR", "TTCPR", "VCPR"]
        );
        let higher: Vec<_> = MetricId::ALL
            .iter()
            .filter(|m| m.direction() == Direction::Higher)
            .map(|m| m.label())
            .collect();
        assert_eq!(higher, ["Dist2", "TTR", "VR", "CD", "FDR", "CSR"]);
        assert_eq!(MetricId::parse("CECPR"), Some(MetricId::Cecpr));
        assert_eq!(MetricId::parse("dist2"), Some(MetricId::Dist2));
    }

    #[test]
    fn single_sentence_text() {
        let m = evaluate_text("The model predicts a high risk.", &BigramCacheProvider::default(), &EvalConfig::default())
            .unwrap();
        for id in [MetricId::Ppl, MetricId::Dist2, MetricId::Ttr, MetricId::Vr, MetricId::Cd] {
            assert!(m.get(id).is_defined(), "{id}");
        }
        assert_eq!(m.csr, Measure::Undefined(Undefined::SingleSentence));
        for id in [MetricId::Cecpr, MetricId::Dcpr, MetricId::Ccpr, MetricId::Ttcpr, MetricId::Vcpr] {
            assert_eq!(m.get(id), Measure::Undefined(Undefined::TooFewSentences), "{id}");
        }
    }

    #[test]
    fn empty_text_is_an_error() {
        let p = BigramCacheProvider::default();
        assert!(matches!(evaluate_text("  ", &p, &EvalConfig::default()), Err(Error::EmptyText)));
    }

    proptest! {
        #[test]
        fn cpr_strictly_decreasing_in_ratio(r in 0.001f64..1.0, a in 0.001f64..1.0, b in 0.001f64..1.0) {
            prop_assume!(a < b);
            for f in [dcpr, ccpr, cecpr, ttcpr, vcpr] {
                prop_assert!(f(r, a).value().unwrap() > f(r, b).value().unwrap());
            }
        }

        #[test]
        fn fdr_monotone(d1 in 0.01f64..1.0, d2 in 0.01f64..1.0, p1 in 1.01f64..500.0, p2 in 1.01f64..500.0) {
            prop_assume!(d1 < d2 && p1 < p2);
            prop_assert!(fdr(d1, p1).value().unwrap() < fdr(d2, p1).value().unwrap());
            prop_assert!(fdr(d1, p1).value().unwrap() > fdr(d1, p2).value().unwrap());
        }
    }
}
