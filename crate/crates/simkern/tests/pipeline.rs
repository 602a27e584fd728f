use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use simkern::config::{
    DatasetConfig, DistanceKind, ExperimentConfig, FeatureKind, GraphKind, Learner, Metric, ModalitySpec, Selection,
    SynthSpec,
};
use simkern::pipeline::{run_experiment, split, write_outputs, RunOptions};

/// Two 2-d modalities; the label is the sign of `u0 + v0`, so each modality
/// alone only sees half of the signal.
fn write_dense(dir: &Path, n: usize, seed: u64) -> Vec<bool> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut x = String::from("u0,u1,v0,v1\n");
    let mut y = String::from("target,aux\n");
    let mut labels = Vec::new();
    for i in 0..n {
        let row: Vec<f64> = (0..4).map(|_| r.random_range(-1.0..1.0)).collect();
        let pos = row[0] + row[2] > 0.0;
        labels.push(pos);
        x += &format!("{},{},{},{}\n", row[0], row[1], row[2], row[3]);
        y += &format!("{},{}\n", u8::from(pos), u8::from(i % 3 == 0));
    }
    std::fs::write(dir.join("x.csv"), x).unwrap();
    std::fs::write(dir.join("y.csv"), y).unwrap();
    labels
}

fn modality(name: &str, lo: usize) -> ModalitySpec {
    ModalitySpec {
        name: name.to_owned(),
        columns: [lo, lo + 2],
        distance: DistanceKind::L2,
        scale: 1.0,
    }
}

fn dense_config(dir: &Path, modalities: Vec<ModalitySpec>) -> ExperimentConfig {
    ExperimentConfig {
        dataset: DatasetConfig::Dense {
            features: dir.join("x.csv"),
            labels: dir.join("y.csv"),
            modalities,
        },
        graph: GraphKind::Pairwise,
        features: FeatureKind::Similarity,
        samples: Some(40),
        reps: None,
        selection: Selection::Random,
        learner: Learner::default(),
        train_fraction: 0.6,
        metrics: vec![Metric::Auc, Metric::Ap, Metric::Mae],
        seed: 4,
        output_dir: None,
    }
}

#[test]
fn combining_modalities_beats_either_alone() {
    let tmp = tempfile::tempdir().unwrap();
    write_dense(tmp.path(), 300, 1);
    let auc = |mods| {
        run_experiment(&dense_config(tmp.path(), mods), RunOptions::default())
            .unwrap()
            .report
            .per_concept["target"]["auc"]
    };
    let both = auc(vec![modality("u", 0), modality("v", 2)]);
    let u = auc(vec![modality("u", 0)]);
    let v = auc(vec![modality("v", 2)]);
    assert!(both >= u.max(v), "both {both} u {u} v {v}");
}

#[test]
fn test_labels_never_reach_the_features() {
    let tmp = tempfile::tempdir().unwrap();
    let labels = write_dense(tmp.path(), 120, 2);
    let mut cfg = dense_config(tmp.path(), vec![modality("u", 0), modality("v", 2)]);
    cfg.selection = Selection::Rarity { p: 0.2 };
    cfg.samples = None;
    let before = run_experiment(&cfg, RunOptions::default()).unwrap();

    let (_, test) = split(labels.len(), cfg.train_fraction, cfg.seed);
    let text = std::fs::read_to_string(tmp.path().join("y.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    for &i in &test {
        let flipped: Vec<&str> = lines[i + 1]
            .split(',')
            .map(|v| if v == "1" { "0" } else { "1" })
            .collect();
        lines[i + 1] = flipped.join(",");
    }
    std::fs::write(tmp.path().join("y.csv"), lines.join("\n") + "\n").unwrap();
    let after = run_experiment(&cfg, RunOptions::default()).unwrap();
    assert_eq!(before.feature_digest, after.feature_digest);
    assert_eq!(before.scores, after.scores);
    assert_ne!(before.report.per_concept, after.report.per_concept);
}

#[test]
fn reruns_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    write_dense(tmp.path(), 80, 3);
    let mut cfg = dense_config(tmp.path(), vec![modality("u", 0), modality("v", 2)]);
    cfg.samples = Some(10);
    cfg.learner = Learner::Logreg {
        eta: 0.5,
        epochs: 300,
        l2: 0.01,
    };
    let a = run_experiment(&cfg, RunOptions::default()).unwrap();
    let b = run_experiment(&cfg, RunOptions::default()).unwrap();
    assert_eq!(a, b);
    assert!(a.report.timings.is_empty());
    let timed = run_experiment(&cfg, RunOptions { timings: true }).unwrap();
    assert!(timed.report.timings.contains_key("learner"));

    let out = tmp.path().join("out");
    write_outputs(&a, &out).unwrap();
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config_digest"], a.report.config_digest);
    assert!(report["macro"]["auc"].is_number());
    let preds = std::fs::read_to_string(out.join("predictions.csv")).unwrap();
    assert!(preds.starts_with("instance,target,aux\n"));
    assert_eq!(preds.lines().count(), a.test_indices.len() + 1);
}

#[test]
fn session_graphs_report_their_dimensions() {
    for (graph, columns) in [(GraphKind::Pairwise, 7 * 6), (GraphKind::Class, 7 * 6 * 4)] {
        let cfg = ExperimentConfig {
            dataset: DatasetConfig::Sessions {
                synth: Some(SynthSpec {
                    n_drop: 30,
                    n_normal: 30,
                    min_len: 15,
                    max_len: 30,
                }),
                path: None,
                truncate_at: 2,
                min_reports: 15,
            },
            graph,
            features: FeatureKind::Similarity,
            samples: Some(6),
            reps: Some(4),
            selection: Selection::Random,
            learner: Learner::default(),
            train_fraction: 0.7,
            metrics: vec![Metric::Auc],
            seed: 8,
            output_dir: None,
        };
        let out = run_experiment(&cfg, RunOptions::default()).unwrap();
        let f = out.report.features.unwrap();
        assert_eq!(f.columns, columns);
        assert_eq!(f.modalities.len(), 7);
        assert!(out.report.macro_avg["auc"] > 0.5);
    }
}

#[test]
fn single_class_training_split_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    write_dense(tmp.path(), 30, 5);
    let text = std::fs::read_to_string(tmp.path().join("y.csv")).unwrap();
    let ones: String = text
        .lines()
        .enumerate()
        .map(|(i, l)| if i == 0 { format!("{l}\n") } else { "1,1\n".to_owned() })
        .collect();
    std::fs::write(tmp.path().join("y.csv"), ones).unwrap();
    let mut cfg = dense_config(tmp.path(), vec![modality("u", 0)]);
    cfg.samples = Some(5);
    let err = run_experiment(&cfg, RunOptions::default()).unwrap_err();
    assert_eq!(err.kind, simkern::ErrorKind::Data);
}
