"""Binary classifiers over TF-IDF features and a one-vs-rest wrapper.

Multinomial Naive Bayes accepts fractional feature weights, so TF-IDF
vectors can be used directly. Logistic regression trains with full-batch
deterministic gradient descent; reproducibility matters more than speed
at this corpus scale. Trained models are immutable and shareable across
threads.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .vectorize import SparseVector

LOG_EPS = 1e-12  # clamp for log(sigmoid) in the LR loss


class ModelError(Exception):
    pass


class TrainingDiverged(ModelError):
    def __init__(self, iteration: int):
        super().__init__(f"loss became non-finite at iteration {iteration}")
        self.iteration = iteration


def _to_csr(X: list[SparseVector]) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Flatten sparse vectors into (data, col, rowptr, dim)."""
    if not X:
        raise ModelError("need at least one example")
    dim = X[0].dim
    rowptr = np.zeros(len(X) + 1, dtype=np.int64)
    cols: list[int] = []
    data: list[float] = []
    for r, x in enumerate(X):
        if x.dim != dim:
            raise ModelError(f"dimension mismatch: {x.dim} vs {dim}")
        cols.extend(x.indices)
        data.extend(x.values)
        rowptr[r + 1] = len(cols)
    return np.asarray(data, dtype=np.float64), np.asarray(cols, dtype=np.int64), rowptr, dim


def _dot_rows(data, cols, rowptr, w: np.ndarray) -> np.ndarray:
    """Row-wise dot products X @ w for the flattened representation."""
    n = len(rowptr) - 1
    if len(data) == 0:
        return np.zeros(n, dtype=np.float64)
    row_of = np.repeat(np.arange(n), np.diff(rowptr))
    return np.bincount(row_of, weights=data * w[cols], minlength=n)


def _rows_dot(data, cols, rowptr, coeff: np.ndarray, dim: int) -> np.ndarray:
    """X.T @ coeff for the flattened representation."""
    out = np.zeros(dim, dtype=np.float64)
    row_of = np.repeat(np.arange(len(rowptr) - 1), np.diff(rowptr))
    np.add.at(out, cols, data * coeff[row_of])
    return out


# --- Multinomial Naive Bayes ------------------------------------------------


@dataclass(frozen=True)
class MnbModel:
    """Class log-priors and smoothed per-class term log-likelihoods."""

    log_prior: tuple[float, float]
    log_likelihood: tuple[tuple[float, ...], tuple[float, ...]]  # [class][term]
    alpha: float
    n_features: int


def train_mnb(X: list[SparseVector], y: list[int], alpha: float = 1.0) -> MnbModel:
    """theta[c][t] = (alpha + S_ct) / (alpha*V + S_c) where S_ct sums the
    feature weight of term t over class-c examples; priors are class rates.
    """
    if alpha <= 0:
        raise ModelError("smoothing alpha must be positive")
    if len(X) != len(y):
        raise ModelError("X and y length mismatch")
    data, cols, rowptr, dim = _to_csr(X)
    yv = np.asarray(y, dtype=np.int64)
    if set(yv.tolist()) != {0, 1}:
        raise ModelError("training data must contain both classes (0 and 1)")

    log_prior = []
    log_lik = []
    for c in (0, 1):
        mask = yv == c
        s_ct = np.zeros(dim, dtype=np.float64)
        for r in np.nonzero(mask)[0]:
            lo, hi = rowptr[r], rowptr[r + 1]
            np.add.at(s_ct, cols[lo:hi], data[lo:hi])
        theta = (alpha + s_ct) / (alpha * dim + s_ct.sum())
        log_prior.append(math.log(mask.sum() / len(yv)))
        log_lik.append(tuple(np.log(theta).tolist()))
    return MnbModel(
        log_prior=(log_prior[0], log_prior[1]),
        log_likelihood=(log_lik[0], log_lik[1]),
        alpha=alpha,
        n_features=dim,
    )


def predict_mnb(m: MnbModel, x: SparseVector) -> tuple[int, tuple[float, float]]:
    """Argmax of log P(c) + sum_t x_t log theta[c][t]; ties go to class 0."""
    if x.dim != m.n_features:
        raise ModelError(f"dimension mismatch: {x.dim} vs {m.n_features}")
    scores = []
    for c in (0, 1):
        table = m.log_likelihood[c]
        scores.append(m.log_prior[c] + sum(v * table[i] for i, v in zip(x.indices, x.values)))
    label = 1 if scores[1] > scores[0] else 0
    return label, (scores[0], scores[1])


def mnb_positive_probability(m: MnbModel, x: SparseVector) -> float:
    """Posterior of class 1 via normalizing the two log-joints."""
    _, (s0, s1) = predict_mnb(m, x)
    hi = max(s0, s1)
    e0 = math.exp(s0 - hi)
    e1 = math.exp(s1 - hi)
    return e1 / (e0 + e1)


# --- Logistic regression ----------------------------------------------------


@dataclass(frozen=True)
class LrHyper:
    learning_rate: float = 0.1
    l2: float = 1e-4
    max_iter: int = 1000
    tolerance: float = 1e-6


@dataclass(frozen=True)
class LrModel:
    weights: tuple[float, ...]
    bias: float
    hyper: LrHyper
    n_iter: int = 0
    final_grad_norm: float = float("inf")
    final_loss: float = float("nan")
    loss_history: tuple[float, ...] = field(default=(), repr=False)


def sigmoid(z):
    """Numerically stable logistic function, scalar or ndarray."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.shape else float(out)


def lr_loss_grad(
    w: np.ndarray, b: float, X: list[SparseVector], y: list[int], l2: float
) -> tuple[float, np.ndarray, float]:
    """Mean cross-entropy plus l2*||w||^2 (bias unregularized), with its
    analytic gradient. Logs are clamped at LOG_EPS.
    """
    data, cols, rowptr, dim = _to_csr(X)
    yv = np.asarray(y, dtype=np.float64)
    n = len(X)
    z = _dot_rows(data, cols, rowptr, np.asarray(w, dtype=np.float64)) + b
    p = sigmoid(z)
    p_clipped = np.clip(p, LOG_EPS, 1.0 - LOG_EPS)
    loss = float(np.mean(-yv * np.log(p_clipped) - (1.0 - yv) * np.log(1.0 - p_clipped)))
    loss += l2 * float(np.dot(w, w))
    resid = (p - yv) / n
    grad_w = _rows_dot(data, cols, rowptr, resid, dim) + 2.0 * l2 * np.asarray(w)
    grad_b = float(np.sum(resid))
    return loss, grad_w, grad_b


def train_lr(X: list[SparseVector], y: list[int], hyper: LrHyper | None = None) -> LrModel:
    """Full-batch gradient descent from zero weights.

    Stops at max_iter or when the gradient's infinity norm drops below the
    tolerance; raises TrainingDiverged if the loss leaves the finite range.
    """
    hyper = hyper or LrHyper()
    if set(y) != {0, 1}:
        raise ModelError("training data must contain both classes (0 and 1)")
    dim = X[0].dim
    w = np.zeros(dim, dtype=np.float64)
    b = 0.0
    losses: list[float] = []
    grad_norm = float("inf")
    loss = float("nan")
    n_updates = 0
    for it in range(hyper.max_iter):
        loss, gw, gb = lr_loss_grad(w, b, X, y, hyper.l2)
        if not math.isfinite(loss):
            raise TrainingDiverged(it)
        losses.append(loss)
        grad_norm = max(float(np.max(np.abs(gw))) if dim else 0.0, abs(gb))
        if grad_norm < hyper.tolerance:
            break
        w -= hyper.learning_rate * gw
        b -= hyper.learning_rate * gb
        n_updates = it + 1
    return LrModel(
        weights=tuple(w.tolist()),
        bias=b,
        hyper=hyper,
        n_iter=n_updates,
        final_grad_norm=grad_norm,
        final_loss=loss,
        loss_history=tuple(losses),
    )


def predict_proba_lr(m: LrModel, x: SparseVector) -> float:
    if x.dim != len(m.weights):
        raise ModelError(f"dimension mismatch: {x.dim} vs {len(m.weights)}")
    z = m.bias + sum(v * m.weights[i] for i, v in zip(x.indices, x.values))
    return float(sigmoid(z))


# --- One-vs-rest multi-label wrapper ----------------------------------------


@dataclass(frozen=True)
class ConstantModel:
    """Stand-in for a degenerate label column (all-positive or all-negative)."""

    value: bool

    def probability(self) -> float:
        return 1.0 if self.value else 0.0


BinaryModel = MnbModel | LrModel | ConstantModel


@dataclass(frozen=True)
class OvrModel:
    """One independent binary model per label; a label is predicted when its
    positive probability exceeds that label's threshold.
    """

    labels: tuple[str, ...]
    models: dict[str, BinaryModel]
    thresholds: dict[str, float]

    def __post_init__(self):
        if set(self.labels) != set(self.models):
            raise ModelError("every label needs exactly one binary model")

    def threshold_for(self, label: str) -> float:
        return self.thresholds.get(label, 0.5)


def positive_probability(model: BinaryModel, x: SparseVector) -> float:
    if isinstance(model, ConstantModel):
        return model.probability()
    if isinstance(model, LrModel):
        return predict_proba_lr(model, x)
    return mnb_positive_probability(model, x)


def train_ovr(
    X: list[SparseVector],
    Y: dict[str, list[int]],
    base: str = "mnb",
    alpha: float = 1.0,
    hyper: LrHyper | None = None,
    thresholds: dict[str, float] | None = None,
) -> OvrModel:
    """Train one binary model per label column, independently.

    A column without both classes gets a constant majority predictor and a
    warning instead of a trained model.
    """
    if base not in ("mnb", "lr"):
        raise ModelError(f"unknown base model {base!r} (expected 'mnb' or 'lr')")
    models: dict[str, BinaryModel] = {}
    for label, column in Y.items():
        if len(column) != len(X):
            raise ModelError(f"label column {label!r} length mismatch")
        values = set(column)
        if values == {0, 1}:
            if base == "mnb":
                models[label] = train_mnb(X, column, alpha=alpha)
            else:
                models[label] = train_lr(X, column, hyper=hyper)
        else:
            value = bool(column[0]) if column else False
            warnings.warn(
                f"label {label!r} is constant in the training data; using a "
                f"constant predictor ({value})",
                stacklevel=2,
            )
            models[label] = ConstantModel(value)
    return OvrModel(
        labels=tuple(Y.keys()),
        models=models,
        thresholds=dict(thresholds or {}),
    )


def predict_ovr(
    m: OvrModel, x: SparseVector, thresholds: dict[str, float] | None = None
) -> tuple[frozenset[str], dict[str, float]]:
    """The predicted set is the union of independent binary decisions; it
    may be empty.
    """
    scores: dict[str, float] = {}
    predicted = set()
    for label in m.labels:
        p = positive_probability(m.models[label], x)
        scores[label] = p
        threshold = (thresholds or {}).get(label, m.threshold_for(label))
        if p > threshold:
            predicted.add(label)
    return frozenset(predicted), scores


# --- serialization ----------------------------------------------------------


def model_to_json_dict(model: BinaryModel | OvrModel, vocab_sha256: str) -> dict:
    if isinstance(model, MnbModel):
        return {
            "kind": "mnb",
            "alpha": model.alpha,
            "n_features": model.n_features,
            "log_prior": list(model.log_prior),
            "log_likelihood": [list(row) for row in model.log_likelihood],
            "vocab_sha256": vocab_sha256,
        }
    if isinstance(model, LrModel):
        return {
            "kind": "lr",
            "weights": list(model.weights),
            "bias": model.bias,
            "hyper": {
                "learning_rate": model.hyper.learning_rate,
                "l2": model.hyper.l2,
                "max_iter": model.hyper.max_iter,
                "tolerance": model.hyper.tolerance,
            },
            "n_iter": model.n_iter,
            "final_grad_norm": model.final_grad_norm,
            "final_loss": model.final_loss,
            "vocab_sha256": vocab_sha256,
        }
    if isinstance(model, ConstantModel):
        return {"kind": "constant", "value": model.value, "vocab_sha256": vocab_sha256}
    if isinstance(model, OvrModel):
        return {
            "kind": "ovr",
            "labels": list(model.labels),
            "thresholds": model.thresholds,
            "models": {
                label: model_to_json_dict(sub, vocab_sha256)
                for label, sub in model.models.items()
            },
            "vocab_sha256": vocab_sha256,
        }
    raise ModelError(f"cannot serialize {type(model).__name__}")


def model_from_json_dict(d: dict, expect_vocab_sha256: str | None = None) -> BinaryModel | OvrModel:
    if expect_vocab_sha256 is not None and d.get("vocab_sha256") != expect_vocab_sha256:
        raise ModelError(
            "model was trained against a different vocabulary "
            f"(hash {d.get('vocab_sha256')!r} != {expect_vocab_sha256!r})"
        )
    kind = d.get("kind")
    if kind == "mnb":
        return MnbModel(
            log_prior=tuple(d["log_prior"]),
            log_likelihood=tuple(tuple(row) for row in d["log_likelihood"]),
            alpha=d["alpha"],
            n_features=d["n_features"],
        )
    if kind == "lr":
        h = d["hyper"]
        return LrModel(
            weights=tuple(d["weights"]),
            bias=d["bias"],
            hyper=LrHyper(h["learning_rate"], h["l2"], h["max_iter"], h["tolerance"]),
            n_iter=d["n_iter"],
            final_grad_norm=d["final_grad_norm"],
            final_loss=d["final_loss"],
        )
    if kind == "constant":
        return ConstantModel(value=bool(d["value"]))
    if kind == "ovr":
        return OvrModel(
            labels=tuple(d["labels"]),
            models={
                label: model_from_json_dict(sub, expect_vocab_sha256)
                for label, sub in d["models"].items()
            },
            thresholds={k: float(v) for k, v in d["thresholds"].items()},
        )
    raise ModelError(f"unknown model kind {kind!r}")
