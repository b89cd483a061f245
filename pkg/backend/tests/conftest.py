import json
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent.parent
PRIMARY_SRC = REPO_ROOT / "src"

CRISIS = ["flood water rising", "storm surge hit the coast", "need food and shelter",
          "medical help required", "water purification tablets needed",
          "roof torn off need tarps", "clinic is out of supplies",
          "sending bottled water to the shelter"]
CHATTER = ["lovely sunny afternoon", "new cafe opened downtown", "great game last night",
           "look at this cute dog", "weekend plans anyone", "trying a new recipe",
           "concert tickets on sale", "traffic was fine today"]
INTENTS = [["need"], ["supply"], ["need", "supply"], ["need"]]
AIDS = [["food"], ["shelter"], ["health"], ["wash"], ["food", "wash"]]


def write_toy_corpus(path: Path, n: int = 40) -> None:
    """Half informative with intent/aid labels, half plain chatter."""
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(n):
            informative = i % 2 == 0
            text = (CRISIS[i // 2 % len(CRISIS)] if informative
                    else CHATTER[i // 2 % len(CHATTER)]) + f" #{i}"
            labels = {
                "informative": informative,
                "intent": INTENTS[i // 2 % len(INTENTS)] if informative else None,
                "aid": AIDS[i // 2 % len(AIDS)] if informative else None,
            }
            fh.write(json.dumps({"id": f"x{i}", "text": text, "labels": labels}) + "\n")


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("data") / "toy40.jsonl"
    write_toy_corpus(path)
    return path


#: 40 examples, one epoch — full-batch plain gradient descent, because a
#: randomly initialized model has no warm features for adamw to exploit
TOY_TRAIN = dict(epochs=1, batch_size=40, learning_rate=1.0,
                 optimizer="sgd", dropout=0.0, seed=0)


@pytest.fixture(scope="session")
def trained(toy_corpus, tmp_path_factory):
    """One fine-tuned tiny model directory per task, plus its loss log."""
    from hfbackend import FineTuneConfig, finetune

    out = {}
    root = tmp_path_factory.mktemp("models")
    for task in ("informative", "intent", "aid"):
        cfg = FineTuneConfig(task=task, **TOY_TRAIN)
        model_dir = root / task
        log = finetune(toy_corpus, cfg, model_dir)
        out[task] = (model_dir, log)
    return out


@pytest.fixture(scope="session")
def primary_client_modules():
    """The core package's backend client, imported from the sibling tree."""
    sys.path.insert(0, str(PRIMARY_SRC))
    try:
        from crisistriage.backend import BackendClient, ExternalBackendRef
    except ImportError:
        pytest.skip("core package not available next to this one")
    return BackendClient, ExternalBackendRef


def serve_command(model_dir: Path) -> tuple[str, ...]:
    return (sys.executable, "-m", "hfbackend.cli", "serve", "--model-dir", str(model_dir))
