"""Linear maximum-margin classifier over target feature vectors.

Binary problems are solved in the dual with sequential minimal optimization
(SMO, maximal-violating-pair working sets, linear kernel, unregularized
bias). More than two classes are handled one-vs-rest.
"""
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .target_detect import FEATURE_NAMES, FeatureVector

MODEL_FORMAT = "irtarget-margin-model"
MODEL_VERSION = 1

_TAU = 1e-12


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledSample:
    features: FeatureVector
    label: str


@dataclass
class HyperplaneFit:
    """Result of one binary SMO solve."""

    w: np.ndarray
    b: float
    alpha: np.ndarray
    iterations: int
    converged: bool
    gap: float
    objective_history: list = field(repr=False, default_factory=list)

    def decision(self, X):
        return np.asarray(X, dtype=np.float64) @ self.w + self.b


def _dual_objective(alpha, grad):
    # f = 1/2 a'Qa - e'a with grad = Qa - e
    return 0.5 * float(alpha @ (grad - 1.0))


def fit_hyperplane(X, y, C=1.0, tol=1e-6, max_iterations=10_000, seed=0):
    """Soft-margin linear SVM on labels ``y`` in {-1, +1}.

    Minimizes ``1/2 ||w||^2 + C * sum(max(0, 1 - y (w.x + b)))`` through its
    dual. ``seed`` fixes the order in which samples are visited, which decides
    ties during working-set selection; the result is a pure function of
    ``(X, y, C, tol, max_iterations, seed)``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be (n, d) with one label per row")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ValueError("both classes must be present")
    if not C > 0:
        raise ValueError("C must be > 0")

    n = len(y)
    perm = np.random.default_rng(seed).permutation(n)
    Xp, yp = X[perm], y[perm]
    K = Xp @ Xp.T
    Q = (yp[:, None] * yp[None, :]) * K
    kdiag = np.diag(K).copy()

    alpha = np.zeros(n)
    grad = -np.ones(n)
    history = [0.0]
    gap = math.inf
    it = 0
    converged = False
    while True:
        up = np.where(yp > 0, alpha < C, alpha > 0)
        low = np.where(yp > 0, alpha > 0, alpha < C)
        score = -yp * grad
        m_up = np.where(up, score, -np.inf)
        m_low = np.where(low, score, np.inf)
        i = int(np.argmax(m_up))
        gap = float(m_up[i] - m_low.min())
        if gap < tol:
            converged = True
            break
        if it >= max_iterations:
            break

        # Second-order choice of j among violating partners of i.
        b_t = m_up[i] - score
        cand = low & (b_t > 0)
        a_t = kdiag[i] + kdiag - 2.0 * K[i]
        a_t = np.where(a_t > 0, a_t, _TAU)
        gain = np.where(cand, -(b_t * b_t) / a_t, np.inf)
        j = int(np.argmin(gain))

        ai_old, aj_old = alpha[i], alpha[j]
        quad = kdiag[i] + kdiag[j] - 2.0 * K[i, j]
        quad = quad if quad > 0 else _TAU
        if yp[i] != yp[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total

        grad += Q[:, i] * (alpha[i] - ai_old) + Q[:, j] * (alpha[j] - aj_old)
        it += 1
        history.append(_dual_objective(alpha, grad))

    b = _bias(alpha, grad, yp, C)
    coef = alpha * yp
    w = coef @ Xp
    out_alpha = np.empty(n)
    out_alpha[perm] = alpha
    return HyperplaneFit(w, b, out_alpha, it, converged, gap, history)


def _bias(alpha, grad, y, C):
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        rho = float(yg[free].mean())
    else:
        ub, lb = math.inf, -math.inf
        for a, t, v in zip(alpha, y, yg):
            at_upper, at_lower = a >= C, a <= 0
            if (at_upper and t < 0) or (at_lower and t > 0):
                ub = min(ub, v)
            else:
                lb = max(lb, v)
        rho = (ub + lb) / 2.0
    return -rho


def hinge_loss(fit, X, y):
    margins = np.asarray(y) * fit.decision(X)
    return float(np.maximum(0.0, 1.0 - margins).sum())


@dataclass(frozen=True)
class MarginModel:
    """Per-class hyperplanes over standardized feature vectors.

    ``weights[k]`` and ``bias[k]`` score class ``classes[k]``. A two-class
    model holds a single solved hyperplane ``(w, b)`` for ``classes[1]`` and
    its negation for ``classes[0]``.
    """

    classes: tuple
    mean: np.ndarray
    scale: np.ndarray
    weights: np.ndarray
    bias: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d = len(self.classes)
        if d < 2:
            raise ValueError("a model needs at least two classes")
        if self.weights.shape != (d, len(self.mean)) or self.bias.shape != (d,):
            raise ValueError("weights/bias shape does not match the class list")
        if np.any(self.scale <= 0):
            raise ValueError("standardization scale must be positive")

    @property
    def n_features(self):
        return len(self.mean)

    def standardize(self, x):
        return (x - self.mean) / self.scale


def _as_vector(features, n_features):
    x = features.as_array() if isinstance(features, FeatureVector) else np.asarray(
        features, dtype=np.float64)
    if x.shape != (n_features,):
        raise ValueError(f"expected {n_features} features, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite feature value")
    return x


def train_arrays(X, labels, C=1.0, tol=1e-6, max_iterations=10_000, seed=0):
    """Train from a feature matrix and a label sequence."""
    X = np.asarray(X, dtype=np.float64)
    labels = list(labels)
    if X.ndim != 2 or len(X) != len(labels) or len(X) == 0:
        raise ValueError("X must be a non-empty (n, d) matrix with one label per row")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature value in training data")
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise ValueError("training needs samples from at least two classes")

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    Z = (X - mean) / scale
    lab = np.array([classes.index(c) for c in labels])

    def solve(positive):
        y = np.where(lab == positive, 1.0, -1.0)
        fit = fit_hyperplane(Z, y, C=C, tol=tol, max_iterations=max_iterations, seed=seed)
        return fit, hinge_loss(fit, Z, y)

    runs = []
    if len(classes) == 2:
        fit, loss = solve(1)
        weights = np.stack([-fit.w, fit.w])
        bias = np.array([-fit.b, fit.b])
        runs.append((fit, loss))
    else:
        for k in range(len(classes)):
            runs.append(solve(k))
        weights = np.stack([f.w for f, _ in runs])
        bias = np.array([f.b for f, _ in runs])

    meta = {
        "C": float(C),
        "tolerance": float(tol),
        "max_iterations": int(max_iterations),
        "seed": int(seed),
        "iterations": [f.iterations for f, _ in runs],
        "converged": [bool(f.converged) for f, _ in runs],
        "gap": [float(f.gap) for f, _ in runs],
        "hinge_loss": [float(h) for _, h in runs],
        "n_samples": len(labels),
    }
    return MarginModel(classes, mean, scale, weights, bias, meta)


def train(samples, C=1.0, tol=1e-6, max_iterations=10_000, seed=0):
    """Train on :class:`LabeledSample` objects (features are standardized first)."""
    samples = list(samples)
    if not samples:
        raise ValueError("no training samples")
    X = np.stack([_as_vector(s.features, len(FEATURE_NAMES)) for s in samples])
    return train_arrays(X, [s.label for s in samples], C, tol, max_iterations, seed)


def decision_values(model, features):
    x = _as_vector(features, model.n_features)
    return model.weights @ model.standardize(x) + model.bias


def decision(model, features):
    """``(class, g)`` for every class, in model class order."""
    g = decision_values(model, features)
    return [(c, float(v)) for c, v in zip(model.classes, g)]


def predict(model, features):
    """Class with the largest decision value.

    Two classes: ``classes[1]`` iff its hyperplane value is strictly positive,
    so ``g == 0`` falls to ``classes[0]``. More classes: argmax, ties to the
    lower class index.
    """
    g = decision_values(model, features)
    if len(model.classes) == 2:
        return model.classes[1] if g[1] > 0 else model.classes[0]
    return model.classes[int(np.argmax(g))]


def training_error(model, X, labels):
    wrong = sum(predict(model, x) != c for x, c in zip(np.asarray(X), labels))
    return wrong / len(labels)


def model_to_dict(model):
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "classes": list(model.classes),
        "feature_names": list(FEATURE_NAMES[:model.n_features])
        if model.n_features == len(FEATURE_NAMES) else None,
        "mean": model.mean.tolist(),
        "scale": model.scale.tolist(),
        "weights": model.weights.tolist(),
        "bias": model.bias.tolist(),
        "meta": model.meta,
    }


def dumps(model):
    # json emits floats with repr(), which round-trips float64 exactly.
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n"


def loads(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError("not a margin model file")
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"unsupported model version {doc.get('version')!r} (expected {MODEL_VERSION})")
    try:
        return MarginModel(
            classes=tuple(doc["classes"]),
            mean=np.array(doc["mean"], dtype=np.float64),
            scale=np.array(doc["scale"], dtype=np.float64),
            weights=np.array(doc["weights"], dtype=np.float64),
            bias=np.array(doc["bias"], dtype=np.float64),
            meta=doc.get("meta", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt model file: {exc}") from exc


def save(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model))


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
