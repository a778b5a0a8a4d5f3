import pytest

from router_trainer.config import TrainerConfig
from router_trainer.data import LabeledQuestion, WordVocab, load_labeled
from router_trainer.train import train

from toy_data import toy_dataset

TOY_CONFIG = TrainerConfig(batch_size=4, lr_peak=0.01, seed=1)


def test_toy_set_two_epochs_full_accuracy():
    metrics = train(toy_dataset(), TOY_CONFIG)
    assert metrics.train_accuracy == 1.0
    assert metrics.fp == 0 and metrics.fn == 0
    assert metrics.epoch_losses[-1] < metrics.initial_loss


def test_two_epochs_exactly(monkeypatch):
    assert TOY_CONFIG.epochs == 2
    metrics = train(toy_dataset(), TOY_CONFIG)
    steps_per_epoch = (32 + TOY_CONFIG.batch_size - 1) // TOY_CONFIG.batch_size
    assert len(metrics.loss_curve) == 2 * steps_per_epoch


def test_reproducible_under_seed():
    first = train(toy_dataset(), TOY_CONFIG)
    second = train(toy_dataset(), TOY_CONFIG)
    assert first.loss_curve == pytest.approx(second.loss_curve, abs=1e-7)


def test_single_class_dataset_rejected():
    positives = [q for q in toy_dataset() if q.label == 1]
    with pytest.raises(ValueError, match="both classes"):
        train(positives, TOY_CONFIG)


def test_empty_dataset_rejected():
    with pytest.raises(ValueError, match="empty"):
        train([], TOY_CONFIG)


def test_artifact_saved(tmp_path):
    out = tmp_path / "ckpt"
    train(toy_dataset(), TOY_CONFIG, out_dir=str(out))
    assert (out / "vocab.json").exists()
    assert (out / "trainer_config.json").exists()
    assert (out / "config.json").exists()


def test_config_validation():
    with pytest.raises(ValueError, match="tversky_alpha"):
        TrainerConfig(tversky_alpha=0.0)
    with pytest.raises(ValueError, match="label_smoothing_eps"):
        TrainerConfig(label_smoothing_eps=1.0)
    cfg = TrainerConfig()
    assert (cfg.epochs, cfg.batch_size, cfg.max_seq_len) == (2, 32, 512)
    assert (cfg.tversky_alpha, cfg.tversky_beta) == (0.7, 0.3)
    assert cfg.label_smoothing_eps == 0.2
    assert cfg.lr_peak == 5e-5 and cfg.weight_decay == 0.01
    assert cfg.warmup_fraction == 0.01


def test_label_validation():
    with pytest.raises(ValueError, match="label"):
        LabeledQuestion(id="x", text="q", label=2)


def test_load_labeled_round_trip(tmp_path):
    path = tmp_path / "data.jsonl"
    path.write_text(
        '{"id": "a", "text": "Describe a park.", "label": 1}\n'
        '{"id": "b", "text": "Compute 2 plus 2.", "label": 0}\n')
    records = load_labeled(path)
    assert [r.id for r in records] == ["a", "b"]
    assert [r.label for r in records] == [1, 0]
    path.write_text('{"id": "a", "text": "x", "label": 1}\n'
                    '{"id": "a", "text": "y", "label": 0}\n')
    with pytest.raises(ValueError, match="duplicate id"):
        load_labeled(path)


def test_vocab_encode_pads_and_truncates(tmp_path):
    vocab = WordVocab.build(["Describe a park", "Compute sums"])
    ids = vocab.encode("describe a park", max_len=5)
    assert len(ids) == 5 and ids[3:] == [0, 0]
    assert vocab.encode("describe a park today now more", max_len=3)[2] != 0
    assert vocab.encode("zzz unknown", max_len=2)[0] == 1
    vocab.save(tmp_path / "vocab.json")
    again = WordVocab.load(tmp_path / "vocab.json")
    assert again.word_to_id == vocab.word_to_id
