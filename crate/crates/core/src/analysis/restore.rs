use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use super::taxonomy::{antecedent_relation, categorize_mention, Category, Relation};
use super::{require_clusters, AnalysisError};
use crate::corpus::Document;

type Span = (usize, usize);

/// Class of gold mentions whose links are restored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RestoreStep {
    NeExact,
    NePartial,
    DefExact,
    DefPartial,
}

impl RestoreStep {
    pub const ALL: [RestoreStep; 4] = [
        RestoreStep::NeExact,
        RestoreStep::NePartial,
        RestoreStep::DefExact,
        RestoreStep::DefPartial,
    ];

    fn matches(self, category: Category, relation: Relation) -> bool {
        let (c, r) = match self {
            RestoreStep::NeExact => (Category::NamedEntity, Relation::ExactMatch),
            RestoreStep::NePartial => (Category::NamedEntity, Relation::PartialMatch),
            RestoreStep::DefExact => (Category::DefiniteNp, Relation::ExactMatch),
            RestoreStep::DefPartial => (Category::DefiniteNp, Relation::PartialMatch),
        };
        c == category && r == relation
    }
}

impl fmt::Display for RestoreStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RestoreStep::NeExact => "ne-exact",
            RestoreStep::NePartial => "ne-partial",
            RestoreStep::DefExact => "def-exact",
            RestoreStep::DefPartial => "def-partial",
        })
    }
}

impl FromStr for RestoreStep {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RestoreStep::ALL
            .into_iter()
            .find(|step| step.to_string() == s)
            .ok_or_else(|| AnalysisError::Unknown(s.to_string()))
    }
}

/// Adds gold mentions of the selected classes that the prediction missed,
/// linked the way gold links them.
///
/// A restored mention joins the predicted cluster holding its nearest
/// earlier gold mate (or, failing that, its nearest later one). When no mate
/// was predicted at all, it starts a new cluster together with its gold
/// antecedent.
pub fn restore_gold_links(pred: &Document, gold: &Document, steps: &[RestoreStep]) -> Result<Document, AnalysisError> {
    if steps.is_empty() {
        return Ok(pred.clone());
    }
    let gold_clusters = require_clusters(gold)?;
    let mut clusters: Vec<Vec<Span>> = pred
        .clusters()
        .map(|cs| cs.iter().map(|c| c.spans().collect()).collect())
        .unwrap_or_default();
    let mut home: HashMap<Span, usize> = clusters
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |&s| (s, i)))
        .collect();

    let mut order: Vec<(Span, usize)> = gold_clusters
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |&s| (s, i)))
        .collect();
    order.sort_unstable();

    for (span, gi) in order {
        if home.contains_key(&span) {
            continue;
        }
        let cluster = &gold_clusters[gi];
        let category = categorize_mention(gold, span)?;
        let relation = antecedent_relation(gold, span, cluster)?;
        if !steps.iter().any(|s| s.matches(category, relation)) {
            continue;
        }
        let earlier = cluster.iter().filter(|&&s| s < span).rev();
        let later = cluster.iter().filter(|&&s| s > span);
        let target = earlier.chain(later).find_map(|s| home.get(s).copied());
        match target {
            Some(ci) => {
                clusters[ci].push(span);
                home.insert(span, ci);
            }
            None => {
                // not a first mention, so an antecedent exists
                let antecedent = *cluster.iter().filter(|&&s| s < span).max().expect("antecedent");
                let ci = clusters.len();
                clusters.push(vec![antecedent, span]);
                home.insert(antecedent, ci);
                home.insert(span, ci);
            }
        }
    }
    Ok(pred.with_clusters(clusters)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{Clustering, Scores};

    fn gold() -> Document {
        let words = "John Doe met the keeper . John saw the keeper of the park and John thanked him in the park";
        let tags = "NNP NNP VBD DT NN . NNP VBD DT NN IN DT NN CC NNP VBD PRP IN DT NN";
        let d = Document::from_sentences("g", &[words]).unwrap();
        Document::new(
            "g",
            d.tokens().to_vec(),
            d.sentences().to_vec(),
            Some(tags.split(' ').map(str::to_string).collect()),
            None,
            Some(vec![
                vec![(0, 2), (6, 7), (14, 15)],
                vec![(3, 5), (8, 13), (16, 17)],
                vec![(11, 13), (18, 20)],
            ]),
        )
        .unwrap()
    }

    fn f1(gold: &Document, pred: &Document) -> Scores {
        Scores::for_pair(&Clustering::from_document(gold), &Clustering::from_document(pred))
    }

    #[test]
    fn step_names() {
        assert_eq!("def-partial".parse::<RestoreStep>().unwrap(), RestoreStep::DefPartial);
        assert!("ne".parse::<RestoreStep>().is_err());
    }

    #[test]
    fn empty_steps_leave_prediction_alone() {
        let g = gold();
        let p = g.with_clusters(vec![vec![(0, 2)]]).unwrap();
        assert_eq!(restore_gold_links(&p, &g, &[]).unwrap(), p);
    }

    #[test]
    fn all_steps_recover_gold_from_filtered_prediction() {
        let g = gold();
        // one mention of each restorable class removed
        let p = g
            .with_clusters(vec![vec![(0, 2)], vec![(3, 5), (16, 17)], vec![(11, 13)]])
            .unwrap();
        let restored = restore_gold_links(&p, &g, &RestoreStep::ALL).unwrap();
        assert_eq!(restored.clusters(), g.clusters());
        assert_eq!(
            f1(&g, &restored).conll(),
            num_rational::BigRational::from_integer(1.into())
        );
    }

    #[test]
    fn unpredicted_chain_is_seeded_with_antecedent() {
        let g = gold();
        let p = g
            .with_clusters(vec![vec![(3, 5), (8, 13), (16, 17)], vec![(11, 13), (18, 20)]])
            .unwrap();
        let restored = restore_gold_links(&p, &g, &[RestoreStep::NePartial]).unwrap();
        let spans: Vec<Vec<Span>> = restored
            .clusters()
            .unwrap()
            .iter()
            .map(|c| c.spans().collect())
            .collect();
        assert_eq!(
            spans,
            vec![
                vec![(0, 2), (6, 7)],
                vec![(3, 5), (8, 13), (16, 17)],
                vec![(11, 13), (18, 20)]
            ]
        );
    }

    #[test]
    fn more_steps_never_score_lower_here() {
        let g = gold();
        let p = g
            .with_clusters(vec![vec![(0, 2)], vec![(3, 5), (16, 17)], vec![(11, 13)]])
            .unwrap();
        let mut previous = f1(&g, &p).conll();
        for n in 1..=4 {
            let r = restore_gold_links(&p, &g, &RestoreStep::ALL[..n]).unwrap();
            let score = f1(&g, &r).conll();
            assert!(score >= previous);
            previous = score;
        }
    }
}
