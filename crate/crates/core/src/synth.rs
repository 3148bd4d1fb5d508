//! Seeded generator of small annotated news-style documents.
//!
//! Documents carry POS and NER layers and gold clusters with nesting up to
//! depth three ("the head of Acme 's board"). Singleton clusters are
//! dropped.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, NerSpan};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub docs: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    /// Probability that a noun-phrase slot refers to a tracked entity.
    pub mention_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            docs: 60,
            min_tokens: 400,
            max_tokens: 600,
            mention_rate: 0.45,
            seed: 2023,
        }
    }
}

const FIRST_NAMES: &[(&str, bool)] = &[
    ("John", true),
    ("Mary", false),
    ("Ahmed", true),
    ("Li", false),
    ("Sofia", false),
    ("Carlos", true),
    ("Anna", false),
    ("Peter", true),
    ("Grace", false),
    ("Omar", true),
    ("Yuki", false),
    ("Tomas", true),
];
const LAST_NAMES: &[&str] = &[
    "Doe", "Smith", "Chen", "Garcia", "Novak", "Okafor", "Tanaka", "Rossi", "Berg", "Silva", "Kowalski", "Haddad",
];
const ROLES: &[&str] = &[
    "manager",
    "mayor",
    "minister",
    "spokesman",
    "director",
    "lawyer",
    "engineer",
    "reporter",
];
const ORGS: &[(&[&str], &str)] = &[
    (&["Acme", "Corp"], "company"),
    (&["Globex"], "company"),
    (&["Initech"], "firm"),
    (&["Northwind", "Bank"], "bank"),
    (&["Blue", "River", "Group"], "group"),
    (&["Harbor", "Union"], "union"),
    (&["Vista", "Airlines"], "airline"),
];
const PLACES: &[&[&str]] = &[
    &["Hong", "Kong"],
    &["Lisbon"],
    &["New", "Delhi"],
    &["Oslo"],
    &["Nairobi"],
    &["Lima"],
    &["Cape", "Town"],
];
const THINGS: &[&str] = &[
    "report", "plan", "bridge", "contract", "budget", "factory", "proposal", "deal", "vote",
];
const PART_NOUNS: &[&str] = &["board", "office", "plant", "team", "council"];
const HEAD_NOUNS: &[&str] = &["head", "chair", "owner", "leader"];
const VERBS: &[&str] = &[
    "praised",
    "criticized",
    "visited",
    "joined",
    "met",
    "called",
    "helped",
    "questioned",
    "backed",
    "reviewed",
];
const SAY_VERBS: &[&str] = &["said", "announced", "reported", "argued", "claimed"];
const FILLER_NPS: &[(&str, &str)] = &[
    ("new", "policy"),
    ("local", "market"),
    ("small", "crowd"),
    ("long", "delay"),
    ("sharp", "rise"),
    ("quiet", "week"),
    ("public", "meeting"),
];
const PREPS: &[&str] = &["about", "with", "after", "before", "despite"];
const ADVERBS: &[&str] = &["again", "also", "quickly", "later", "openly"];
const DAYS: &[&str] = &["Monday", "Tuesday", "Wednesday", "Thursday", "Friday"];
const SOURCES: &[&str] = &["Reuters", "CNN", "Xinhua"];

#[derive(Debug, Clone)]
enum Kind {
    Person {
        first: &'static str,
        last: &'static str,
        male: bool,
        role: &'static str,
    },
    Org {
        name: &'static [&'static str],
        noun: &'static str,
    },
    Place {
        name: &'static [&'static str],
    },
    Thing {
        adjective: Option<&'static str>,
        noun: &'static str,
    },
}

#[derive(Debug, Clone)]
struct Entity {
    kind: Kind,
    mentions: usize,
    last_sentence: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Subject,
    Object,
}

struct Builder {
    tokens: Vec<String>,
    pos: Vec<String>,
    ner: Vec<NerSpan>,
    sentences: Vec<(usize, usize)>,
    mentions: Vec<((usize, usize), usize)>,
    entities: Vec<Entity>,
    sentence: usize,
}

impl Builder {
    fn push(&mut self, word: &str, tag: &str) {
        self.tokens.push(word.to_string());
        self.pos.push(tag.to_string());
    }

    fn push_name(&mut self, name: &[&str], category: &str) {
        let start = self.tokens.len();
        for w in name {
            self.push(w, "NNP");
        }
        self.ner.push(NerSpan {
            start,
            end: self.tokens.len(),
            category: category.to_string(),
        });
    }

    fn new_entity(&mut self, kind: Kind) -> usize {
        self.entities.push(Entity {
            kind,
            mentions: 0,
            last_sentence: None,
        });
        self.entities.len() - 1
    }

    fn record(&mut self, start: usize, entity: usize) {
        self.mentions.push(((start, self.tokens.len()), entity));
        let e = &mut self.entities[entity];
        e.mentions += 1;
        e.last_sentence = Some(self.sentence);
    }

    fn recent(&self, entity: usize) -> bool {
        self.entities[entity]
            .last_sentence
            .is_some_and(|s| self.sentence - s <= 1)
    }

    /// Writes one mention of `entity` in a form suited to its history.
    fn mention(&mut self, rng: &mut ChaCha8Rng, entity: usize, slot: Slot) {
        let start = self.tokens.len();
        let first = self.entities[entity].mentions == 0;
        let recent = self.recent(entity);
        match self.entities[entity].kind.clone() {
            Kind::Person {
                first: f,
                last,
                male,
                role,
            } => match (first, rng.gen_range(0..5)) {
                (true, _) | (false, 0) => self.push_name(&[f, last], "PERSON"),
                (false, 1) => self.push_name(&[last], "PERSON"),
                (false, 2) if recent => {
                    let word = match (male, slot) {
                        (true, Slot::Subject) => "he",
                        (true, Slot::Object) => "him",
                        (false, Slot::Subject) => "she",
                        (false, Slot::Object) => "her",
                    };
                    self.push(word, "PRP");
                }
                (false, 3) => {
                    self.push("the", "DT");
                    self.push(role, "NN");
                }
                _ => self.push_name(&[f], "PERSON"),
            },
            Kind::Org { name, noun } => match (first, rng.gen_range(0..4)) {
                (true, _) | (false, 0) => self.push_name(name, "ORG"),
                (false, 1) if name.len() > 1 => self.push_name(&name[..1], "ORG"),
                (false, 2) if recent => self.push("it", "PRP"),
                _ => {
                    self.push("the", "DT");
                    self.push(noun, "NN");
                }
            },
            Kind::Place { name } => match (first, rng.gen_range(0..3)) {
                (false, 0) => {
                    self.push("the", "DT");
                    self.push("city", "NN");
                }
                _ => self.push_name(name, "GPE"),
            },
            Kind::Thing { adjective, noun } => {
                if !first && recent && rng.gen_bool(0.3) {
                    self.push("it", "PRP");
                } else {
                    self.push(if first { "a" } else { "the" }, "DT");
                    if let Some(adj) = adjective.filter(|_| first || rng.gen_bool(0.5)) {
                        self.push(adj, "JJ");
                    }
                    self.push(noun, "NN");
                }
            }
        }
        self.record(start, entity);
    }

    /// `[[owner] 's noun]`, the outer mention being a thing of its own.
    fn possessive(&mut self, rng: &mut ChaCha8Rng, owner: usize) -> usize {
        let start = self.tokens.len();
        let pronoun = self.recent(owner) && rng.gen_bool(0.4);
        let noun = PART_NOUNS.choose(rng).expect("nouns");
        let thing = self.new_entity(Kind::Thing { adjective: None, noun });
        if pronoun {
            let inner = self.tokens.len();
            let word = match self.entities[owner].kind {
                Kind::Person { male: true, .. } => "his",
                Kind::Person { male: false, .. } => "her",
                _ => "its",
            };
            self.push(word, "PRP$");
            self.record(inner, owner);
        } else {
            self.mention(rng, owner, Slot::Object);
            self.push("'s", "POS");
        }
        self.push(noun, "NN");
        self.record(start, thing);
        thing
    }

    fn pick(&mut self, rng: &mut ChaCha8Rng) -> usize {
        // favour entities seen in the last couple of sentences
        let weights: Vec<f64> = self
            .entities
            .iter()
            .map(|e| match e.last_sentence {
                Some(s) if self.sentence - s <= 2 => 4.0,
                Some(_) => 1.5,
                None => 1.0,
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let mut x = rng.gen_range(0.0..total);
        for (i, w) in weights.iter().enumerate() {
            if x < *w {
                return i;
            }
            x -= w;
        }
        weights.len() - 1
    }

    fn noun_phrase(&mut self, rng: &mut ChaCha8Rng, rate: f64, slot: Slot) {
        if !rng.gen_bool(rate) {
            let (adj, noun) = FILLER_NPS.choose(rng).expect("fillers");
            self.push(if rng.gen_bool(0.5) { "a" } else { "the" }, "DT");
            self.push(adj, "JJ");
            self.push(noun, "NN");
            return;
        }
        match rng.gen_range(0..12) {
            0 => {
                let thing = self.new_entity(Kind::Thing {
                    adjective: Some(["new", "large", "draft"].choose(rng).expect("adjectives")),
                    noun: THINGS.choose(rng).expect("things"),
                });
                self.mention(rng, thing, slot);
            }
            1 => {
                let owner = self.pick(rng);
                self.possessive(rng, owner);
            }
            2 => {
                // [the head of [[X] 's board]]
                let start = self.tokens.len();
                let owner = self.pick(rng);
                let head = HEAD_NOUNS.choose(rng).expect("heads");
                let person = self.new_entity(Kind::Thing {
                    adjective: None,
                    noun: head,
                });
                self.push("the", "DT");
                self.push(head, "NN");
                self.push("of", "IN");
                self.possessive(rng, owner);
                self.record(start, person);
            }
            3 => {
                // [the mayor of [place]]
                let places: Vec<usize> = (0..self.entities.len())
                    .filter(|&i| matches!(self.entities[i].kind, Kind::Place { .. }))
                    .collect();
                let Some(&place) = places.choose(rng) else {
                    let e = self.pick(rng);
                    return self.mention(rng, e, slot);
                };
                let start = self.tokens.len();
                let role = self.new_entity(Kind::Thing {
                    adjective: None,
                    noun: "mayor",
                });
                self.push("the", "DT");
                self.push("mayor", "NN");
                self.push("of", "IN");
                self.mention(rng, place, Slot::Object);
                self.record(start, role);
            }
            _ => {
                let e = self.pick(rng);
                self.mention(rng, e, slot);
            }
        }
    }

    fn sentence(&mut self, rng: &mut ChaCha8Rng, rate: f64) {
        let start = self.tokens.len();
        if rng.gen_bool(0.2) {
            self.push("according", "VBG");
            self.push("to", "TO");
            self.push_name(&[SOURCES.choose(rng).expect("sources")], "ORG");
            self.push(",", ",");
        }
        self.noun_phrase(rng, rate, Slot::Subject);
        if rng.gen_bool(0.3) {
            self.push(SAY_VERBS.choose(rng).expect("verbs"), "VBD");
            self.push("that", "IN");
            self.noun_phrase(rng, rate, Slot::Subject);
        }
        self.push(VERBS.choose(rng).expect("verbs"), "VBD");
        self.noun_phrase(rng, rate, Slot::Object);
        if rng.gen_bool(0.6) {
            self.push(PREPS.choose(rng).expect("preps"), "IN");
            self.noun_phrase(rng, rate, Slot::Object);
        }
        if rng.gen_bool(0.3) {
            self.push("on", "IN");
            self.push_name(&[DAYS.choose(rng).expect("days")], "DATE");
        }
        if rng.gen_bool(0.3) {
            self.push(ADVERBS.choose(rng).expect("adverbs"), "RB");
        }
        self.push(".", ".");
        self.sentences.push((start, self.tokens.len()));
        self.sentence += 1;
    }
}

fn document(rng: &mut ChaCha8Rng, config: &SynthConfig, index: usize) -> Document {
    let mut b = Builder {
        tokens: Vec::new(),
        pos: Vec::new(),
        ner: Vec::new(),
        sentences: Vec::new(),
        mentions: Vec::new(),
        entities: Vec::new(),
        sentence: 0,
    };
    let mut firsts: Vec<&(&str, bool)> = FIRST_NAMES.iter().collect();
    firsts.shuffle(rng);
    for &&(first, male) in firsts.iter().take(rng.gen_range(2..=3)) {
        let kind = Kind::Person {
            first,
            last: LAST_NAMES.choose(rng).expect("names"),
            male,
            role: ROLES.choose(rng).expect("roles"),
        };
        b.new_entity(kind);
    }
    let n = rng.gen_range(1..=2);
    for &(name, noun) in ORGS.choose_multiple(rng, n) {
        b.new_entity(Kind::Org { name, noun });
    }
    let n = rng.gen_range(1..=2);
    for &name in PLACES.choose_multiple(rng, n) {
        b.new_entity(Kind::Place { name });
    }

    // longest sentence stays well under 40 tokens
    let target = rng.gen_range(config.min_tokens..=config.max_tokens.saturating_sub(40).max(config.min_tokens));
    while b.tokens.len() < target {
        b.sentence(rng, config.mention_rate);
    }

    let mut groups: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    for (span, e) in b.mentions {
        groups.entry(e).or_default().push(span);
    }
    let clusters: Vec<Vec<(usize, usize)>> = groups.into_values().filter(|g| g.len() > 1).collect();
    Document::new(
        format!("synth{index:03}_0"),
        b.tokens,
        b.sentences,
        Some(b.pos),
        Some(b.ner),
        Some(clusters),
    )
    .expect("generated documents are well formed")
}

pub fn synthetic_corpus(config: &SynthConfig) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.docs).map(|i| document(&mut rng, config, i)).collect()
}

/// Share of tokens covered by at least one gold mention.
pub fn mention_density(docs: &[Document]) -> f64 {
    let (mut covered, mut total) = (0usize, 0usize);
    for d in docs {
        let mut mask = vec![false; d.len()];
        for m in d.mentions() {
            mask[m.start..m.end].iter_mut().for_each(|x| *x = true);
        }
        covered += mask.iter().filter(|&&x| x).count();
        total += d.len();
    }
    if total == 0 {
        0.0
    } else {
        covered as f64 / total as f64
    }
}
