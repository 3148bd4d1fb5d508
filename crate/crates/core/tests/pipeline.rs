use increco_core::decode::{run_incremental, Action, ChooseRequest, OraclePredictor, Predictor, PredictorError};
use increco_core::state::{EntityOrder, Mode, PipelineConfig};
use increco_core::synth::{synthetic_corpus, SynthConfig};

/// Oracle that keeps the rendered input of every chunk it sees.
struct Inputs {
    oracle: OraclePredictor,
    seen: Vec<(usize, String)>,
}

impl Predictor for Inputs {
    fn choose(&mut self, request: &ChooseRequest<'_>) -> Result<Action, PredictorError> {
        if self.seen.last().map(|s| s.0) != Some(request.chunk_index) {
            self.seen.push((request.chunk_index, request.input.render(request.doc)));
        }
        self.oracle.choose(request)
    }
}

fn inputs(mode: Mode, context: usize, ordering: EntityOrder) -> Vec<String> {
    let doc = synthetic_corpus(&SynthConfig {
        docs: 1,
        ..SynthConfig::default()
    })
    .remove(0);
    let config = PipelineConfig {
        mode,
        context_budget: context,
        ordering,
        ..PipelineConfig::default()
    };
    let mut p = Inputs {
        oracle: OraclePredictor::new(&doc).unwrap(),
        seen: Vec::new(),
    };
    run_incremental(&doc, &config, &mut p, &[]).unwrap();
    p.seen.into_iter().map(|s| s.1).collect()
}

#[test]
fn zero_context_has_no_context_block() {
    let seen = inputs(Mode::EntityCentric, 0, EntityOrder::Recency);
    assert!(seen.len() >= 4);
    for input in &seen {
        assert!(!input.contains("<context>"), "{input}");
        assert!(input.ends_with("</target>"));
    }
    assert!(!seen[0].contains("<e>"));
    assert!(seen[1..].iter().all(|i| i.starts_with("<e> ")));
}

#[test]
fn context_follows_entities() {
    for input in inputs(Mode::EntityCentric, 50, EntityOrder::Recency).iter().skip(1) {
        let e = input.rfind("</e>").unwrap();
        let c = input.find("<context>").unwrap();
        let t = input.find("<target>").unwrap();
        assert!(e < c && c < t, "{input}");
    }
}

#[test]
fn full_prefix_input_grows_with_the_document() {
    let seen = inputs(Mode::FullPrefix, 0, EntityOrder::Recency);
    for pair in seen.windows(2) {
        let prefix = &pair[0][..pair[0].find("<target>").unwrap()];
        assert!(pair[1].starts_with(prefix));
        assert!(pair[1].len() > pair[0].len());
        assert!(!pair[1].contains("<e>"));
    }
}

fn block_ids(input: &str) -> Vec<u32> {
    input
        .split("</e>")
        .filter_map(|block| block.rsplit_once('|').map(|(_, id)| id.trim().parse().unwrap()))
        .collect()
}

#[test]
fn entity_blocks_follow_the_ordering() {
    for input in &inputs(Mode::EntityCentric, 0, EntityOrder::Document)[1..] {
        let ids = block_ids(input);
        assert_eq!(ids, (0..ids.len() as u32).collect::<Vec<_>>());
    }
    let mut reordered = false;
    for input in &inputs(Mode::EntityCentric, 0, EntityOrder::Recency)[1..] {
        let mut ids = block_ids(input);
        let before = ids.clone();
        ids.sort_unstable();
        reordered |= before != ids;
        assert_eq!(ids, (0..ids.len() as u32).collect::<Vec<_>>());
    }
    assert!(reordered);
}
