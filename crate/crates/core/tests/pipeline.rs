use cdma::app;
use cdma::config::RunConfig;
use cdma::corpus::{Condition, Corpus};
use cdma::eeg::{load_epoch_dir, Group};
use cdma::eval::{run_repetitions, Confusion, MetricsReport, ResultsFile, Stream};
use cdma::segment::SegmentConfig;
use cdma::synth::{gen_eeg_epochs, EegSynthSpec, SpeechSynthSpec};

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.iterations = 2;
    cfg.cv.segment = SegmentConfig::with_length(32);
    cfg.cv.train.hidden_dim = 4;
    cfg.cv.train.epochs = 2;
    cfg.synth.speech = SpeechSynthSpec { speakers_per_class: 6, frames_per_recording: 40, ..Default::default() };
    cfg
}

#[test]
fn persisted_percentages_recompute_from_confusion_counts() {
    let cfg = small_config();
    let corpus = Corpus::synthetic(&cfg.synth.speech).unwrap();
    let dir = tempfile::tempdir().unwrap();
    app::crossval(&cfg, &corpus, dir.path(), 1).unwrap();
    for stream in Stream::ALL {
        let file: ResultsFile = app::read_json(&dir.path().join(format!("results_{stream}.json"))).unwrap();
        assert_eq!(file.config_hash, cfg.hash());
        for it in &file.iterations {
            let m = MetricsReport::from_confusion(it.confusion);
            assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (it.acc, it.prec, it.rec, it.f1));
            let c: Confusion = it.confusion;
            assert_eq!(c.tp + c.fp + c.tn + c.fn_, 12);
        }
    }
}

#[test]
fn identical_seeds_give_identical_iterations() {
    let cfg = small_config();
    let corpus = Corpus::synthetic(&cfg.synth.speech).unwrap();
    let a = run_repetitions(&cfg.cv, &corpus, 2, 42, 1).unwrap();
    let b = run_repetitions(&cfg.cv, &corpus, 2, 42, 2).unwrap();
    for stream in Stream::ALL {
        assert_eq!(a.metrics(stream), b.metrics(stream));
    }
    assert_eq!(a.iterations[0].predictions, b.iterations[0].predictions);
}

#[test]
fn mean_logits_cover_every_speaker_and_condition() {
    let cfg = small_config();
    let corpus = Corpus::synthetic(&cfg.synth.speech).unwrap();
    let report = run_repetitions(&cfg.cv, &corpus, 2, 0, 1).unwrap();
    let logits = app::mean_logits(&report);
    assert_eq!(logits.len(), 12);
    for by_cond in logits.values() {
        for c in Condition::EMOTIONAL {
            assert!((0.0..=1.0).contains(&by_cond[&c]));
        }
    }
}

#[test]
fn synthetic_epochs_round_trip_through_disk() {
    let spec = EegSynthSpec { n_mdd: 2, n_hc: 2, epochs_per_participant: 2, ..Default::default() };
    let study = gen_eeg_epochs(&spec).unwrap();
    let mut cfg = RunConfig::default();
    cfg.synth.eeg = spec;
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(app::synth_eeg(&cfg, dir.path()).unwrap(), 4);
    let dirs = app::epoch_dirs(dir.path()).unwrap();
    assert_eq!(dirs.len(), 4);
    for d in dirs {
        let loaded = load_epoch_dir(&d).unwrap();
        let original = study.sets.iter().find(|s| s.participant_id == loaded.participant_id).unwrap();
        assert_eq!(loaded.channels, original.channels);
        assert_eq!(loaded.t0_index, original.t0_index);
        for (x, y) in loaded.epochs.iter().zip(&original.epochs) {
            assert!(x.iter().zip(y).all(|(a, b)| (a - b).abs() <= 1e-9 * b.abs().max(1.0)));
        }
    }
    let logits: app::LogitTable = app::read_json(&dir.path().join("logits.json")).unwrap();
    assert_eq!(logits.len(), 4);
}

#[test]
fn band_powers_and_stats_from_conditioned_epochs() {
    let mut cfg = RunConfig::default();
    cfg.synth.eeg = EegSynthSpec { n_mdd: 3, n_hc: 3, epochs_per_participant: 2, ..Default::default() };
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    app::synth_eeg(&cfg, &raw).unwrap();
    let summary = app::eeg_condition_dir(&cfg, &raw, &dir.path().join("clean"), 1).unwrap();
    assert!(summary.iter().all(|s| s.valid));
    let powers = app::eeg_ersp_dir(&cfg, &dir.path().join("clean"), &dir.path().join("ersp"), 1).unwrap();
    assert_eq!(powers.len(), 6 * 2 * 4);
    let stats = app::eeg_stats(&cfg, &powers, None).unwrap();
    assert_eq!(stats.len(), 8);
    assert!(stats.iter().all(|s| s.n_mdd == 3 && s.n_hc == 3 && s.df == 4.0 && s.rho_tables.is_empty()));
    assert!(powers.iter().filter(|p| p.group == Group::Mdd).count() == 24);
}

#[test]
fn config_hash_tracks_content() {
    let a = small_config();
    let mut b = small_config();
    assert_eq!(a.hash(), b.hash());
    b.seed = 1;
    assert_ne!(a.hash(), b.hash());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    a.save(&path).unwrap();
    assert_eq!(RunConfig::load(&path).unwrap().hash(), a.hash());
}
