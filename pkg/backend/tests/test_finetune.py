import json

import pytest

from hfbackend import FineTuneConfig, finetune
from hfbackend.corpusio import TrainingDataError, load_task_examples

from conftest import write_toy_corpus


def test_toy_run_completes_with_decreasing_loss(trained):
    model_dir, log = trained["informative"]
    assert len(log) >= 2  # starting loss plus one entry per step
    assert log[0] > log[-1]
    for name in ("model.safetensors", "config.json", "label_map.json",
                 "finetune_config.json", "loss_log.json", "word_vocab.json"):
        assert (model_dir / name).exists(), name
    assert json.loads((model_dir / "loss_log.json").read_text()) == log


def test_head_shapes(trained):
    from transformers import AutoConfig

    expected = {
        "informative": (2, "softmax", "single_label_classification"),
        "intent": (2, "sigmoid", "multi_label_classification"),
        "aid": (4, "sigmoid", "multi_label_classification"),
    }
    for task, (n_out, head, problem) in expected.items():
        model_dir, _ = trained[task]
        model_cfg = AutoConfig.from_pretrained(model_dir)
        label_map = json.loads((model_dir / "label_map.json").read_text())
        assert model_cfg.num_labels == n_out
        assert model_cfg.problem_type == problem
        assert label_map["head"] == head
        assert label_map["task"] == task
        assert label_map["threshold"] == 0.5


def test_same_seed_same_loss_log(toy_corpus, tmp_path):
    from conftest import TOY_TRAIN

    cfg = FineTuneConfig(task="informative", **{**TOY_TRAIN, "seed": 7})
    log_a = finetune(toy_corpus, cfg, tmp_path / "a")
    log_b = finetune(toy_corpus, cfg, tmp_path / "b")
    assert log_a == log_b


def test_label_matrix_layout(toy_corpus):
    texts, rows = load_task_examples(toy_corpus, "aid")
    assert len(texts) == len(rows) == 20  # informative half only
    assert all(len(r) == 4 for r in rows)  # food, shelter, health, wash
    texts, rows = load_task_examples(toy_corpus, "informative")
    assert len(texts) == 40
    assert {r[0] for r in rows} == {0.0, 1.0}


def test_missing_task_annotations_fail(tmp_path):
    path = tmp_path / "noneed.jsonl"
    with open(path, "w") as fh:
        fh.write(json.dumps({"id": "a", "text": "hi", "labels": {"informative": True,
                                                                 "intent": None,
                                                                 "aid": None}}) + "\n")
    with pytest.raises(TrainingDataError, match="no records carry 'intent'"):
        load_task_examples(path, "intent")


def test_broken_rows_fail_with_line_number(tmp_path):
    path = tmp_path / "broken.jsonl"
    path.write_text('{"id": "a", "text": "ok", "labels": {"informative": true}}\nnot json\n')
    with pytest.raises(TrainingDataError, match=":2"):
        load_task_examples(path, "informative")

    path.write_text(json.dumps(
        {"id": "a", "text": "x", "labels": {"aid": ["food", "puppies"]}}) + "\n")
    with pytest.raises(TrainingDataError, match="puppies"):
        load_task_examples(path, "aid")


def test_config_validation():
    with pytest.raises(ValueError, match="unknown task"):
        FineTuneConfig(task="sentiment")
    with pytest.raises(ValueError, match="epochs"):
        FineTuneConfig(task="aid", epochs=0)
    with pytest.raises(ValueError, match="threshold"):
        FineTuneConfig(task="aid", threshold=1.5)
    cfg = FineTuneConfig(task="intent")
    assert (cfg.epochs, cfg.batch_size, cfg.learning_rate, cfg.max_length) == \
        (3, 16, 2e-5, 128)
    assert cfg.multilabel and cfg.labels == ("need", "supply")
    assert FineTuneConfig.from_json_dict(cfg.to_json_dict()) == cfg


def test_unreachable_checkpoint_reports_cleanly(tmp_path):
    from hfbackend.finetune import FineTuneError

    corpus = tmp_path / "c.jsonl"
    write_toy_corpus(corpus, n=4)
    cfg = FineTuneConfig(task="informative", base_model="no-such/checkpoint", epochs=1)
    with pytest.raises(FineTuneError, match="tiny"):
        finetune(corpus, cfg, tmp_path / "m")
