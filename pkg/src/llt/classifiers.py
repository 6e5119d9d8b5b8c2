"""Classifiers trained on law-residual features, implemented natively:
Chebyshev KNN, linear SVM (sub-gradient), RBF SVM (SMO), random forest
(CART/Gini bagging) and a one-hidden-layer network.

Every fit is deterministic given (features, labels, hyperparameters):
the seed drives all shuffling, bootstrapping and initialization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LINEAR_SVM_EPOCHS = 100
SMO_MAX_OUTER = 1000
SMO_TOL = 1e-3


@dataclass
class Hyperparams:
    knn_k: int = 4
    knn_metric: str = "chebyshev"  # or "euclidean"
    rf_estimators: int = 10
    rf_depth: int = 6
    svm_c: float = 1.0
    rbf_gamma: float | None = None  # None -> 1 / (dim * var(features))
    mlp_hidden: int = 8
    mlp_epochs: int = 500
    mlp_lr: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for name in ("knn_k", "rf_estimators", "rf_depth", "mlp_hidden", "mlp_epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.mlp_lr <= 0 or self.svm_c <= 0:
            raise ValueError("mlp_lr and svm_c must be positive")
        if self.knn_metric not in ("chebyshev", "euclidean"):
            raise ValueError(f"unknown metric {self.knn_metric!r}")


@dataclass
class TrainedModel:
    kind: str  # knn | svm-linear | svm-rbf | rf | mlp
    feature_dim: int
    labels: list[str]  # index -> label token, sorted
    params: dict
    train_meta: dict = field(default_factory=dict)


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2:
        raise ValueError("features must be a 2-D array")
    if len(X) != len(y):
        raise ValueError(f"{len(X)} feature rows vs {len(y)} labels")
    return X, y


def _label_index(y):
    labels = sorted(set(str(v) for v in y))
    idx = np.array([labels.index(str(v)) for v in y], dtype=int)
    return labels, idx


def _check_dim(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.feature_dim:
        raise ValueError(
            f"feature dimension mismatch: model expects {model.feature_dim}, "
            f"got {X.shape[1]}"
        )
    return X


def heuristic_k(n_train: int) -> int:
    """Square-root-of-N rule of thumb for the KNN neighbor count."""
    if n_train < 1:
        raise ValueError("need at least one training point")
    return max(1, round(np.sqrt(n_train)))


# ---------------------------------------------------------------- KNN

def knn_fit(X, y, hp: Hyperparams) -> TrainedModel:
    X, y = _check_xy(X, y)
    labels, yi = _label_index(y)
    if hp.knn_k > len(X):
        raise ValueError(f"k={hp.knn_k} exceeds training size {len(X)}")
    return TrainedModel(
        kind="knn",
        feature_dim=X.shape[1],
        labels=labels,
        params={"X": X, "y": yi, "k": hp.knn_k, "metric": hp.knn_metric},
        train_meta={"n_train": len(X), "seed": hp.seed},
    )


def _knn_predict_one(p, x):
    if p["metric"] == "chebyshev":
        d = np.max(np.abs(p["X"] - x), axis=1)
    else:
        d = np.sqrt(np.sum((p["X"] - x) ** 2, axis=1))
    order = np.argsort(d, kind="stable")[: p["k"]]
    votes = np.bincount(p["y"][order], minlength=0)
    best = np.flatnonzero(votes == votes.max())
    if len(best) == 1:
        return int(best[0])
    # tie: smallest summed distance, then label order
    sums = [d[order][p["y"][order] == lbl].sum() for lbl in best]
    return int(best[int(np.argmin(sums))])


# --------------------------------------------------------- linear SVM

def linear_svm_fit(X, y, hp: Hyperparams) -> TrainedModel:
    """Hinge loss + L2 regularization by per-sample sub-gradient descent
    (Pegasos-style schedule) with seeded shuffling."""
    X, y = _check_xy(X, y)
    labels, yi = _label_index(y)
    if len(labels) != 2:
        raise ValueError(f"linear SVM needs exactly 2 classes, got {len(labels)}")
    ys = np.where(yi == 1, 1.0, -1.0)
    n, d = X.shape
    lam = 1.0 / (hp.svm_c * n)
    rng = np.random.default_rng(hp.seed)
    w = np.zeros(d)
    b = 0.0
    t = 0
    for _ in range(LINEAR_SVM_EPOCHS):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            if ys[i] * (X[i] @ w + b) < 1.0:
                w = (1.0 - eta * lam) * w + eta * ys[i] * X[i]
                b = b + eta * ys[i] / n
            else:
                w = (1.0 - eta * lam) * w
    return TrainedModel(
        kind="svm-linear",
        feature_dim=d,
        labels=labels,
        params={"w": w, "b": b},
        train_meta={"n_train": n, "seed": hp.seed, "C": hp.svm_c},
    )


# ------------------------------------------------------------ RBF SVM

def _rbf_kernel(A, B, gamma):
    aa = np.sum(A * A, axis=1)[:, None]
    bb = np.sum(B * B, axis=1)[None, :]
    return np.exp(-gamma * np.maximum(aa + bb - 2.0 * (A @ B.T), 0.0))


def rbf_gamma_default(X: np.ndarray) -> float:
    v = X.var()
    return 1.0 / (X.shape[1] * v) if v > 0 else 1.0


def smo_dual_objective(alpha, ys, K):
    return float(alpha.sum() - 0.5 * (alpha * ys) @ K @ (alpha * ys))


def rbf_svm_fit(X, y, hp: Hyperparams) -> TrainedModel:
    """SMO over the dual with an RBF kernel. Deterministic: first index
    by scan order, second by largest |E_i - E_j|."""
    X, y = _check_xy(X, y)
    labels, yi = _label_index(y)
    if len(labels) != 2:
        raise ValueError(f"RBF SVM needs exactly 2 classes, got {len(labels)}")
    ys = np.where(yi == 1, 1.0, -1.0)
    n = len(X)
    C = hp.svm_c
    gamma = hp.rbf_gamma if hp.rbf_gamma is not None else rbf_gamma_default(X)
    K = _rbf_kernel(X, X, gamma)
    alpha = np.zeros(n)
    b = 0.0
    objective_history = [smo_dual_objective(alpha, ys, K)]

    def f_all():
        return (alpha * ys) @ K + b

    passes_without_change = 0
    outer = 0
    while passes_without_change < 1:
        outer += 1
        if outer > SMO_MAX_OUTER:
            E = f_all() - ys
            viol = int(np.sum((ys * E < -SMO_TOL) & (alpha < C))
                       + np.sum((ys * E > SMO_TOL) & (alpha > 0)))
            raise RuntimeError(
                f"SMO did not converge in {SMO_MAX_OUTER} passes "
                f"({viol} KKT violations remain)"
            )
        changed = 0
        E = f_all() - ys
        for i in range(n):
            Ei = float((alpha * ys) @ K[i] + b - ys[i])
            if not ((ys[i] * Ei < -SMO_TOL and alpha[i] < C)
                    or (ys[i] * Ei > SMO_TOL and alpha[i] > 0)):
                continue
            E = (alpha * ys) @ K + b - ys
            j = int(np.argmax(np.abs(E - Ei)))
            if j == i:
                continue
            Ej = float(E[j])
            ai_old, aj_old = alpha[i], alpha[j]
            if ys[i] != ys[j]:
                L, H = max(0.0, aj_old - ai_old), min(C, C + aj_old - ai_old)
            else:
                L, H = max(0.0, ai_old + aj_old - C), min(C, ai_old + aj_old)
            if L >= H:
                continue
            eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
            if eta >= 0:
                continue
            aj = np.clip(aj_old - ys[j] * (Ei - Ej) / eta, L, H)
            if abs(aj - aj_old) < 1e-8:
                continue
            ai = ai_old + ys[i] * ys[j] * (aj_old - aj)
            alpha[i], alpha[j] = ai, aj
            b1 = b - Ei - ys[i] * (ai - ai_old) * K[i, i] - ys[j] * (aj - aj_old) * K[i, j]
            b2 = b - Ej - ys[i] * (ai - ai_old) * K[i, j] - ys[j] * (aj - aj_old) * K[j, j]
            if 0 < ai < C:
                b = b1
            elif 0 < aj < C:
                b = b2
            else:
                b = 0.5 * (b1 + b2)
            changed += 1
        objective_history.append(smo_dual_objective(alpha, ys, K))
        passes_without_change = 0 if changed else passes_without_change + 1

    sv = alpha > 1e-12
    return TrainedModel(
        kind="svm-rbf",
        feature_dim=X.shape[1],
        labels=labels,
        params={
            "support_vectors": X[sv],
            "coef": alpha[sv] * ys[sv],  # alpha_i * y_i
            "b": b,
            "gamma": gamma,
        },
        train_meta={
            "n_train": n,
            "seed": hp.seed,
            "C": C,
            "n_support": int(sv.sum()),
            "objective_history": objective_history,
        },
    )


# ------------------------------------------------------- random forest

def _gini(counts):
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return 1.0 - np.sum(p * p)


def _build_tree(X, y, n_labels, depth_left, rng, n_sub):
    counts = np.bincount(y, minlength=n_labels)
    majority = int(np.argmax(counts))
    if depth_left == 0 or counts.max() == len(y):
        return {"leaf": majority}
    d = X.shape[1]
    feats = rng.permutation(d)[:n_sub]
    best = None  # (impurity, feature, threshold)
    for f in np.sort(feats):
        vals = np.unique(X[:, f])
        if len(vals) < 2:
            continue
        for thr in (vals[:-1] + vals[1:]) / 2.0:
            mask = X[:, f] < thr
            lc = np.bincount(y[mask], minlength=n_labels)
            rc = counts - lc
            nl, nr = lc.sum(), rc.sum()
            if nl == 0 or nr == 0:
                continue
            imp = (nl * _gini(lc) + nr * _gini(rc)) / len(y)
            if best is None or imp < best[0] - 1e-15:
                best = (imp, f, float(thr))
    if best is None:
        return {"leaf": majority}
    _, f, thr = best
    mask = X[:, f] < thr
    return {
        "feature": int(f),
        "threshold": thr,
        "left": _build_tree(X[mask], y[mask], n_labels, depth_left - 1, rng, n_sub),
        "right": _build_tree(X[~mask], y[~mask], n_labels, depth_left - 1, rng, n_sub),
    }


def rf_fit(X, y, hp: Hyperparams) -> TrainedModel:
    """Bagged CART trees: Gini splits, sqrt(d) feature subset per split,
    seeded bootstrap per tree."""
    X, y = _check_xy(X, y)
    labels, yi = _label_index(y)
    n, d = X.shape
    n_sub = max(1, round(np.sqrt(d)))
    trees = []
    for t in range(hp.rf_estimators):
        rng = np.random.default_rng([hp.seed, t])
        boot = rng.integers(0, n, n)
        trees.append(_build_tree(X[boot], yi[boot], len(labels), hp.rf_depth, rng, n_sub))
    return TrainedModel(
        kind="rf",
        feature_dim=d,
        labels=labels,
        params={"trees": trees},
        train_meta={"n_train": n, "seed": hp.seed,
                    "estimators": hp.rf_estimators, "depth": hp.rf_depth},
    )


def _tree_predict(node, x):
    while "leaf" not in node:
        node = node["left"] if x[node["feature"]] < node["threshold"] else node["right"]
    return node["leaf"]


def tree_depth(node) -> int:
    if "leaf" in node:
        return 0
    return 1 + max(tree_depth(node["left"]), tree_depth(node["right"]))


def select_rf_hyperparams(X, y, X_val, y_val, hp: Hyperparams,
                          estimator_grid=(5, 10, 20), depth_grid=(4, 6, 8)):
    """Grid selection balancing validation accuracy against the
    train/validation gap (overfit control)."""
    from dataclasses import replace

    best = None
    for ne in estimator_grid:
        for dep in depth_grid:
            cand = replace(hp, rf_estimators=ne, rf_depth=dep)
            model = rf_fit(X, y, cand)
            acc_t = float(np.mean(predict_batch(model, X) == np.asarray(y, dtype=str)))
            acc_v = float(np.mean(predict_batch(model, X_val) == np.asarray(y_val, dtype=str)))
            score = acc_v - 0.5 * abs(acc_t - acc_v)
            if best is None or score > best[0]:
                best = (score, ne, dep)
    return best[1], best[2]


# ---------------------------------------------------------------- MLP

def mlp_init(feature_dim: int, hidden: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    return {
        "W1": rng.standard_normal((feature_dim, hidden)) / np.sqrt(feature_dim),
        "b1": np.zeros(hidden),
        "W2": rng.standard_normal((hidden, 2)) / np.sqrt(hidden),
        "b2": np.zeros(2),
    }


def mlp_loss_grad(params: dict, X: np.ndarray, targets: np.ndarray):
    """Cross-entropy loss and analytic gradients for the tanh network.

    targets: integer class indices (0/1).
    """
    h = np.tanh(X @ params["W1"] + params["b1"])
    z = h @ params["W2"] + params["b2"]
    z = z - z.max(axis=1, keepdims=True)
    ez = np.exp(z)
    p = ez / ez.sum(axis=1, keepdims=True)
    n = len(X)
    loss = float(-np.mean(np.log(p[np.arange(n), targets] + 1e-300)))
    dz = p.copy()
    dz[np.arange(n), targets] -= 1.0
    dz /= n
    grads = {
        "W2": h.T @ dz,
        "b2": dz.sum(axis=0),
    }
    dh = (dz @ params["W2"].T) * (1.0 - h * h)
    grads["W1"] = X.T @ dh
    grads["b1"] = dh.sum(axis=0)
    return loss, grads


def mlp_fit(X, y, hp: Hyperparams) -> TrainedModel:
    """Full-batch gradient descent on cross-entropy; tanh hidden layer,
    two softmax outputs. Learning rate halves when the loss rises."""
    X, y = _check_xy(X, y)
    labels, yi = _label_index(y)
    if len(labels) != 2:
        raise ValueError(f"network expects exactly 2 classes, got {len(labels)}")
    params = mlp_init(X.shape[1], hp.mlp_hidden, hp.seed)
    lr = hp.mlp_lr
    prev = np.inf
    for _ in range(hp.mlp_epochs):
        loss, grads = mlp_loss_grad(params, X, yi)
        if not np.isfinite(loss):
            raise RuntimeError("training diverged (non-finite loss); lower mlp_lr")
        if loss > prev:
            lr *= 0.5
            if lr < 1e-6 * hp.mlp_lr:
                break
        prev = loss
        for k in params:
            params[k] = params[k] - lr * grads[k]
    return TrainedModel(
        kind="mlp",
        feature_dim=X.shape[1],
        labels=labels,
        params=params,
        train_meta={"n_train": len(X), "seed": hp.seed,
                    "hidden": hp.mlp_hidden, "final_loss": prev},
    )


# ----------------------------------------------------------- dispatch

def predict_batch(model: TrainedModel, X) -> np.ndarray:
    """Labels for a batch of feature vectors, any model kind."""
    X = _check_dim(model, X)
    p = model.params
    if model.kind == "knn":
        idx = np.array([_knn_predict_one(p, x) for x in X])
    elif model.kind == "svm-linear":
        idx = (X @ p["w"] + p["b"] >= 0).astype(int)
    elif model.kind == "svm-rbf":
        dec = _rbf_kernel(X, p["support_vectors"], p["gamma"]) @ p["coef"] + p["b"]
        idx = (dec >= 0).astype(int)
    elif model.kind == "rf":
        votes = np.array([[_tree_predict(t, x) for t in p["trees"]] for x in X])
        idx = np.array([np.bincount(v, minlength=len(model.labels)).argmax() for v in votes])
    elif model.kind == "mlp":
        h = np.tanh(X @ p["W1"] + p["b1"])
        idx = np.argmax(h @ p["W2"] + p["b2"], axis=1)
    else:
        raise ValueError(f"unknown model kind {model.kind!r}")
    return np.array([model.labels[i] for i in idx])


def predict(model: TrainedModel, fv) -> str:
    """Label for a single feature vector."""
    return str(predict_batch(model, np.atleast_2d(np.asarray(fv, dtype=float)))[0])
