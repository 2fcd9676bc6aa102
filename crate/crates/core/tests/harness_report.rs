use crowdwise::aggregate::{AggregatorKind, AggregatorSpec};
use crowdwise::crowdsim::{generate_corpus, simulate_responses, CrowdSpec, SyntheticResponderSpec};
use crowdwise::dataset::{make_folds, Category};
use crowdwise::harness::{build_bias_report, ReportGroup};
use crowdwise::metrics::Band;

#[test]
fn planted_ethnicity_bias_is_flagged() {
    let spec = [AggregatorSpec::new(AggregatorKind::SimpleAverage)];
    let mut flagged = 0;
    for seed in 0..50 {
        let corpus = generate_corpus(200, seed).unwrap();
        let crowd = CrowdSpec::new(
            vec![SyntheticResponderSpec::with_accuracy(0.65).bias(Category::Ethnicity, 0.25).named("r")],
            seed,
        );
        let m = simulate_responses(&crowd, &corpus, seed).unwrap();
        let folds = make_folds(&corpus, 5, seed).unwrap();
        let groups = [ReportGroup {
            label: "solo".into(),
            members: vec!["r".into()],
        }];
        let rows = build_bias_report(&corpus, &m, &groups, &spec, &folds, true).unwrap();
        assert_eq!(rows[0].cells, rows[1].cells);
        let ethnicity: Vec<_> = rows[1].cells.iter().filter(|c| c.category == Category::Ethnicity).collect();
        flagged += usize::from(ethnicity.iter().all(|c| c.band == Some(Band::P01)));
    }
    assert!(flagged >= 45, "{flagged}/50");
}
