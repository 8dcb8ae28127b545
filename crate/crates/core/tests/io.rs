use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use regnet::inference::{summarize, EdgeCall, SummaryOptions};
use regnet::io::{
    edge_list_tsv, export_results, ingest_expression, ingest_scores, network_dot, write_expression, write_synthetic,
    ExportFormat, IngestOptions, ScoreSource,
};
use regnet::model::{normalize_scores, Hyperparams, ScoreOrientation};
use regnet::sampler::{run_chain, ChainConfig};
use regnet::simulate::{generate_synthetic, SyntheticSpec};

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn two_files(dir: &Path, y: &str, x: &str) -> (std::path::PathBuf, std::path::PathBuf) {
    let (yp, xp) = (dir.join("y.csv"), dir.join("x.csv"));
    write(&yp, y);
    write(&xp, x);
    (yp, xp)
}

#[test]
fn log2_then_center() {
    let dir = tempfile::tempdir().unwrap();
    let (y, x) = two_files(dir.path(), "sample_id,time,g\na,1,2\nb,1,4\nc,1,8\n", "sample_id,time,r\na,1,1\nb,1,2\nc,1,0\n");
    let opts = IngestOptions { log2_targets: true, ..IngestOptions::default() };
    let (data, report) = ingest_expression(&y, &x, &opts).unwrap();
    assert!(report.is_empty());
    assert_eq!(data.y.column(0).iter().copied().collect::<Vec<_>>(), vec![-1.0, 0.0, 1.0]);
}

#[test]
fn genes_with_bad_values_are_dropped_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let (y, x) = two_files(
        dir.path(),
        "sample_id,time,good,neg,gap\na,1,2,1,3\nb,1,4,-1,\nc,1,8,2,5\n",
        "sample_id,time,r\na,1,1\nb,1,2\nc,1,0\n",
    );
    let (data, report) = ingest_expression(&y, &x, &IngestOptions { log2_targets: true, ..IngestOptions::default() }).unwrap();
    assert_eq!(data.gene_names, vec!["good"]);
    let dropped: Vec<&str> = report.genes.iter().map(|e| e.name.as_str()).collect();
    assert_eq!(dropped, vec!["neg", "gap"]);
    assert_eq!(data.g() + report.genes.len(), 3);
}

#[test]
fn rows_are_joined_on_id_and_sorted_by_time() {
    let dir = tempfile::tempdir().unwrap();
    let (y, x) = two_files(
        dir.path(),
        "sample_id,time,g\nlate,3,1\nearly,1,2\nmid,2,3\n",
        "sample_id,time,r\nmid,2,30\nlate,3,10\nearly,1,20\n",
    );
    let (data, _) = ingest_expression(&y, &x, &IngestOptions { center_regulators: false, ..IngestOptions::default() }).unwrap();
    assert_eq!(data.sample_ids, vec!["early", "mid", "late"]);
    assert_eq!(data.time_labels, vec![1, 2, 3]);
    assert_eq!(data.x.column(0).iter().copied().collect::<Vec<_>>(), vec![20.0, 30.0, 10.0]);
}

#[test]
fn malformed_inputs_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let x = "sample_id,time,r\na,1,1\nb,1,2\n";
    let cases = [
        "sample_id,time,g\na,1,1\nc,1,2\n",    // unmatched id
        "sample_id,time,g\na,1,1\na,1,2\n",    // duplicate id
        "sample_id,time,g\na,1,1\nb,1,abc\n",  // non-numeric
        "sample_id,time,g\na,1,1\nb,7,2\n",    // bad time label
    ];
    for y in cases {
        let (yp, xp) = two_files(dir.path(), y, x);
        assert!(ingest_expression(&yp, &xp, &IngestOptions::default()).is_err(), "{y}");
    }
}

#[test]
fn expression_round_trip_is_exact() {
    let spec = SyntheticSpec { time_mode: true, seed: 2, ..SyntheticSpec::default() };
    let (data, _, _) = generate_synthetic(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (y, x) = (dir.path().join("y.csv"), dir.path().join("x.csv"));
    write_expression(&y, &x, &data).unwrap();
    let (back, report) = ingest_expression(&y, &x, &IngestOptions::default()).unwrap();
    assert!(report.is_empty());
    assert_eq!(back, data);
}

#[test]
fn scores_align_by_name_and_fill_gaps_with_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (y, x) = two_files(
        dir.path(),
        "sample_id,time,g1,g2\na,1,1,2\nb,1,2,1\nc,1,0,5\n",
        "sample_id,time,r1,r2\na,1,1,3\nb,1,2,1\nc,1,0,2\n",
    );
    let (data, _) = ingest_expression(&y, &x, &IngestOptions::default()).unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write(&a, "target,r2,r1\ng2,4,\ng1,2,1\n");
    write(&b, "target,r1,r2\ng1,1,2\ng2,,4\n");
    let sa = ingest_scores(&[ScoreSource::new(&a)], &data).unwrap();
    let sb = ingest_scores(&[ScoreSource::new(&b)], &data).unwrap();
    assert_eq!(sa.scores, sb.scores);
    assert_eq!(sa.scores[0][(1, 0)], 0.0);
    assert_eq!(sa.source_names, vec!["a"]);
    let two = ingest_scores(&[ScoreSource::new(&a), ScoreSource::new(&b)], &data).unwrap();
    assert_eq!(two.sources(), 2);

    write(&a, "target,r1\nmystery,1\n");
    assert!(ingest_scores(&[ScoreSource::new(&a)], &data).is_err());
    write(&a, "target,r1\ng1,-1\n");
    assert!(ingest_scores(&[ScoreSource::new(&a)], &data).is_err());
    let lower = ScoreSource { path: a.clone(), orientation: ScoreOrientation::LowerIsStronger };
    assert_eq!(ingest_scores(&[lower], &data).unwrap().scores[0][(0, 0)], 1.0);
}

fn small_summary() -> regnet::inference::PosteriorSummary {
    let (data, raw, _) = generate_synthetic(&SyntheticSpec { g: 6, m: 4, seed: 3, ..SyntheticSpec::default() }).unwrap();
    let scores = normalize_scores(&raw).unwrap();
    let hp = Hyperparams::default().with_e_sigma(0.5);
    let cfg = ChainConfig { iterations: 800, burn_in: 200, seed: 5, ..ChainConfig::default() };
    let trace = run_chain(&data, &scores, &hp, &cfg).unwrap();
    summarize(&data, &[&trace], &hp, &SummaryOptions::default()).unwrap()
}

#[test]
fn exports_are_byte_stable() {
    let s = small_summary();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = export_results(&s, &ExportFormat::ALL, a.path()).unwrap();
    let fb = export_results(&s, &ExportFormat::ALL, b.path()).unwrap();
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
    let json: serde_json::Value = serde_json::from_slice(&fs::read(a.path().join("summary.json")).unwrap()).unwrap();
    assert!(json["fdr_curve"].is_array() && json["tau"].is_array());
}

#[test]
fn empty_and_two_edge_exports() {
    let mut s = small_summary();
    s.edges.clear();
    assert_eq!(edge_list_tsv(&s).lines().count(), 1);
    assert_eq!(network_dot(&s).matches("->").count(), 0);
    s.edges = vec![EdgeCall { g: 0, m: 1, p: 0.9 }, EdgeCall { g: 2, m: 0, p: 0.85 }];
    let dot = network_dot(&s);
    assert_eq!(dot.matches("->").count(), 2);
    assert!(dot.contains("\"R:reg2\" -> \"T:gene1\""));
    assert_eq!(edge_list_tsv(&s).lines().count(), 3);
    let dir = tempfile::tempdir().unwrap();
    export_results(&s, &[ExportFormat::Matrix], dir.path()).unwrap();
    let p = regnet::io::read_gene_matrix(&dir.path().join("p_matrix.csv"), &s.gene_names, &s.regulator_names).unwrap();
    assert_eq!(p, s.p);
}

#[test]
fn synthetic_files_feed_the_ingest_path() {
    let spec = SyntheticSpec { seed: 12, ..SyntheticSpec::default() };
    let (data, raw, truth) = generate_synthetic(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = write_synthetic(dir.path(), &data, &raw, &truth).unwrap();
    let (back, _) = ingest_expression(&files.targets, &files.regulators, &IngestOptions::default()).unwrap();
    assert_eq!(back, data);
    let sources: Vec<ScoreSource> = files.scores.iter().map(ScoreSource::new).collect();
    assert_eq!(ingest_scores(&sources, &back).unwrap(), normalize_scores(&raw).unwrap());
    let beta = regnet::io::read_gene_matrix(&files.truth, &data.gene_names, &data.regulator_names).unwrap();
    assert_eq!(beta, truth.beta);
    let _: DMatrix<f64> = beta;
}
