//! Coreference metrics: MUC, B³, CEAFe, their CoNLL average and mention
//! detection scores.
//!
//! Everything is computed in exact rational arithmetic. Corpus scores add up
//! numerators and denominators across documents instead of averaging
//! per-document F1, as the reference scorer does.

mod assignment;

use std::collections::{HashMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::corpus::Document;

pub use assignment::{assignment_max, Assignment};

pub type Span = (usize, usize);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("span [{0}, {1}) appears in more than one cluster")]
    Overlap(usize, usize),
    #[error("document {0} is missing from the predictions")]
    MissingDocument(String),
}

fn rat(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn ratio(num: &BigRational, den: &BigRational) -> BigRational {
    if den.is_zero() {
        BigRational::zero()
    } else {
        num / den
    }
}

/// A set of disjoint, non-empty mention clusters.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Clustering {
    clusters: Vec<Vec<Span>>,
}

impl Clustering {
    pub fn new(clusters: Vec<Vec<Span>>) -> Result<Self, MetricsError> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(clusters.len());
        for c in clusters {
            if c.is_empty() {
                continue;
            }
            for &s in &c {
                if !seen.insert(s) {
                    return Err(MetricsError::Overlap(s.0, s.1));
                }
            }
            out.push(c);
        }
        Ok(Clustering { clusters: out })
    }

    pub fn from_document(doc: &Document) -> Self {
        Clustering {
            clusters: doc
                .clusters()
                .unwrap_or_default()
                .iter()
                .map(|c| c.spans().collect())
                .collect(),
        }
    }

    pub fn clusters(&self) -> &[Vec<Span>] {
        &self.clusters
    }

    pub fn mentions(&self) -> impl Iterator<Item = Span> + '_ {
        self.clusters.iter().flatten().copied()
    }

    fn index(&self) -> HashMap<Span, usize> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().map(move |&s| (s, i)))
            .collect()
    }
}

/// Numerators and denominators of one metric; add them to aggregate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    pub recall_num: BigRational,
    pub recall_den: BigRational,
    pub precision_num: BigRational,
    pub precision_den: BigRational,
}

impl Default for Counts {
    fn default() -> Self {
        Counts {
            recall_num: BigRational::zero(),
            recall_den: BigRational::zero(),
            precision_num: BigRational::zero(),
            precision_den: BigRational::zero(),
        }
    }
}

impl Counts {
    fn from_sides(recall: (BigRational, BigRational), precision: (BigRational, BigRational)) -> Self {
        Counts {
            recall_num: recall.0,
            recall_den: recall.1,
            precision_num: precision.0,
            precision_den: precision.1,
        }
    }

    pub fn add(&mut self, other: &Counts) {
        self.recall_num += &other.recall_num;
        self.recall_den += &other.recall_den;
        self.precision_num += &other.precision_num;
        self.precision_den += &other.precision_den;
    }

    pub fn prf(&self) -> Prf {
        Prf::new(
            ratio(&self.precision_num, &self.precision_den),
            ratio(&self.recall_num, &self.recall_den),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prf {
    pub precision: BigRational,
    pub recall: BigRational,
    pub f1: BigRational,
}

impl Prf {
    pub fn new(precision: BigRational, recall: BigRational) -> Self {
        let sum = &precision + &recall;
        let f1 = if sum.is_zero() {
            BigRational::zero()
        } else {
            rat(2) * &precision * &recall / sum
        };
        Prf { precision, recall, f1 }
    }
}

/// Σ(|K| − p(K)) over Σ(|K| − 1), where p(K) counts the parts `other`
/// splits K into; mentions missing from `other` are parts of their own.
fn muc_side(key: &Clustering, other: &Clustering) -> (BigRational, BigRational) {
    let index = other.index();
    let (mut num, mut den) = (0usize, 0usize);
    for k in key.clusters() {
        let mut parts = HashSet::new();
        let mut unmatched = 0;
        for s in k {
            match index.get(s) {
                Some(&c) => {
                    parts.insert(c);
                }
                None => unmatched += 1,
            }
        }
        num += k.len() - (parts.len() + unmatched);
        den += k.len() - 1;
    }
    (rat(num), rat(den))
}

/// Σ over key mentions of |K(m) ∩ O(m)| / |K(m)|, over the key mention count.
fn b_cubed_side(key: &Clustering, other: &Clustering) -> (BigRational, BigRational) {
    let index = other.index();
    let mut num = BigRational::zero();
    let mut mentions = 0;
    for k in key.clusters() {
        let mut overlap: HashMap<usize, usize> = HashMap::new();
        for s in k {
            if let Some(&c) = index.get(s) {
                *overlap.entry(c).or_default() += 1;
            }
        }
        // each mention of k in other-cluster c contributes |k ∩ c| / |k|
        for &shared in overlap.values() {
            num += BigRational::new(BigInt::from(shared * shared), BigInt::from(k.len()));
        }
        mentions += k.len();
    }
    (num, rat(mentions))
}

pub fn muc_counts(gold: &Clustering, pred: &Clustering) -> Counts {
    Counts::from_sides(muc_side(gold, pred), muc_side(pred, gold))
}

pub fn b_cubed_counts(gold: &Clustering, pred: &Clustering) -> Counts {
    Counts::from_sides(b_cubed_side(gold, pred), b_cubed_side(pred, gold))
}

/// φ4 similarity 2|K ∩ R| / (|K| + |R|) for every gold/predicted pair.
pub fn phi4_matrix(gold: &Clustering, pred: &Clustering) -> Vec<Vec<BigRational>> {
    let pred_sets: Vec<HashSet<Span>> = pred.clusters().iter().map(|c| c.iter().copied().collect()).collect();
    gold.clusters()
        .iter()
        .map(|k| {
            pred.clusters()
                .iter()
                .zip(&pred_sets)
                .map(|(r, set)| {
                    let shared = k.iter().filter(|s| set.contains(s)).count();
                    BigRational::new(BigInt::from(2 * shared), BigInt::from(k.len() + r.len()))
                })
                .collect()
        })
        .collect()
}

pub fn ceaf_e_counts(gold: &Clustering, pred: &Clustering) -> Counts {
    let best = assignment_max(&phi4_matrix(gold, pred)).total;
    Counts::from_sides(
        (best.clone(), rat(gold.clusters().len())),
        (best, rat(pred.clusters().len())),
    )
}

pub fn mention_counts(gold: &Clustering, pred: &Clustering) -> Counts {
    let g: HashSet<Span> = gold.mentions().collect();
    let p: HashSet<Span> = pred.mentions().collect();
    let hit = rat(g.intersection(&p).count());
    Counts::from_sides((hit.clone(), rat(g.len())), (hit, rat(p.len())))
}

pub fn muc(gold: &Clustering, pred: &Clustering) -> Prf {
    muc_counts(gold, pred).prf()
}

pub fn b_cubed(gold: &Clustering, pred: &Clustering) -> Prf {
    b_cubed_counts(gold, pred).prf()
}

pub fn ceaf_e(gold: &Clustering, pred: &Clustering) -> Prf {
    ceaf_e_counts(gold, pred).prf()
}

pub fn mention_prf(gold: &Clustering, pred: &Clustering) -> Prf {
    mention_counts(gold, pred).prf()
}

pub fn conll_avg(muc: &Prf, b3: &Prf, ceafe: &Prf) -> BigRational {
    (&muc.f1 + &b3.f1 + &ceafe.f1) / rat(3)
}

/// Aggregated counts for all metrics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Scores {
    pub muc: Counts,
    pub b_cubed: Counts,
    pub ceaf_e: Counts,
    pub mentions: Counts,
}

impl Scores {
    pub fn for_pair(gold: &Clustering, pred: &Clustering) -> Self {
        Scores {
            muc: muc_counts(gold, pred),
            b_cubed: b_cubed_counts(gold, pred),
            ceaf_e: ceaf_e_counts(gold, pred),
            mentions: mention_counts(gold, pred),
        }
    }

    pub fn add(&mut self, other: &Scores) {
        self.muc.add(&other.muc);
        self.b_cubed.add(&other.b_cubed);
        self.ceaf_e.add(&other.ceaf_e);
        self.mentions.add(&other.mentions);
    }

    pub fn conll(&self) -> BigRational {
        conll_avg(&self.muc.prf(), &self.b_cubed.prf(), &self.ceaf_e.prf())
    }

    pub fn report(&self, with_mentions: bool) -> ScoreReport<'_> {
        ScoreReport {
            scores: self,
            with_mentions,
        }
    }
}

/// Scores every gold document against the prediction with the same id.
pub fn score_corpus(gold: &[Document], pred: &[Document]) -> Result<Scores, MetricsError> {
    let by_id: HashMap<&str, &Document> = pred.iter().map(|d| (d.doc_id(), d)).collect();
    let mut total = Scores::default();
    for g in gold {
        let p = by_id
            .get(g.doc_id())
            .ok_or_else(|| MetricsError::MissingDocument(g.doc_id().to_string()))?;
        total.add(&Scores::for_pair(
            &Clustering::from_document(g),
            &Clustering::from_document(p),
        ));
    }
    Ok(total)
}

/// Renders `value` with `decimals` digits, rounding half away from zero.
pub fn fixed(value: &BigRational, decimals: u32) -> String {
    let scale = BigInt::from(10u32).pow(decimals);
    let scaled = (value * BigRational::from_integer(scale.clone())).round().to_integer();
    let negative = scaled < BigInt::zero();
    let abs = if negative { -scaled } else { scaled };
    let int = &abs / &scale;
    let frac = &abs % &scale;
    let sign = if negative { "-" } else { "" };
    if decimals == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{:0>width$}", frac.to_string(), width = decimals as usize)
    }
}

pub fn percent(value: &BigRational) -> String {
    fixed(&(value * rat(100)), 2)
}

pub fn to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// `METRIC P R F1` lines in percent, then `CONLL F1`.
pub struct ScoreReport<'a> {
    scores: &'a Scores,
    with_mentions: bool,
}

impl fmt::Display for ScoreReport<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.scores;
        let mut rows = vec![("MUC", &s.muc), ("B3", &s.b_cubed), ("CEAFe", &s.ceaf_e)];
        if self.with_mentions {
            rows.insert(0, ("MENTIONS", &s.mentions));
        }
        for (name, counts) in rows {
            let prf = counts.prf();
            writeln!(
                f,
                "{name} {} {} {}",
                percent(&prf.precision),
                percent(&prf.recall),
                percent(&prf.f1)
            )?;
        }
        writeln!(f, "CONLL {}", percent(&s.conll()))
    }
}
