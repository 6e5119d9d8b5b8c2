"""Disk formats and the split protocol.

All persisted artifacts are self-describing text: a key=value header
with a version tag and a sha256 checksum of the payload, then the
payload itself. Reals are written with 17 significant digits so that
parse(serialize(x)) reproduces every double bit-exactly.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .classifiers import TrainedModel
from .preprocess import Signal
from .types import Beat, Corpus, Label, LinearLaw, Role

FORMAT_VERSION = "1"


class ArtifactFileError(ValueError):
    """Malformed, tampered or version-incompatible artifact file."""


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


# ------------------------------------------------------------- corpus

def load_corpus(path, role: Role = Role.TRAIN) -> Corpus:
    """Beat CSV: one row per beat, leading label token (N/E/?), then the
    sample values. Row length fixes the corpus window length."""
    beats = []
    window_len = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            token, rest = fields[0].strip(), fields[1:]
            try:
                label = Label.from_token(token)
            except ValueError as e:
                raise ArtifactFileError(f"row {lineno}: {e}") from None
            if window_len is None:
                window_len = len(rest)
                if window_len < 2:
                    raise ArtifactFileError(f"row {lineno}: too few samples")
            elif len(rest) != window_len:
                raise ArtifactFileError(
                    f"row {lineno}: expected {window_len} samples, got {len(rest)}"
                )
            try:
                samples = np.array([float(v) for v in rest])
            except ValueError:
                bad = next(i for i, v in enumerate(rest) if not _is_float(v))
                raise ArtifactFileError(
                    f"row {lineno}: column {bad + 2} is not a number"
                ) from None
            beats.append(Beat(samples=samples, label=label))
    if window_len is None:
        raise ArtifactFileError(f"{path}: no beats found")
    return Corpus(beats=beats, window_len=window_len, role=role)


def _is_float(v: str) -> bool:
    try:
        float(v)
        return True
    except ValueError:
        return False


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for b in corpus.beats:
            f.write(b.label.value + "," + ",".join(_fmt(v) for v in b.samples) + "\n")


def load_raw_signals(path) -> list[Signal]:
    """Raw signal CSV: one record per line, "fs;v0,v1,..."."""
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                fs_part, vals_part = line.split(";", 1)
                out.append(Signal(values=[float(v) for v in vals_part.split(",")],
                                  fs=float(fs_part)))
            except ValueError as e:
                raise ArtifactFileError(f"row {lineno}: {e}") from None
    return out


# -------------------------------------------------------------- split

@dataclass
class SplitSpec:
    train_fraction: float = 0.40
    seed: int = 0
    stratify_by_label: bool = False

    def __post_init__(self):
        if not 0.0 < self.train_fraction <= 1.0:
            raise ValueError(
                f"train_fraction must be in (0, 1], got {self.train_fraction}"
            )


def split_train_validation(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Seeded uniform shuffle; the first floor(fraction * N) beats form
    the training part, the rest the validation part."""
    if corpus.role != Role.TRAIN:
        raise ValueError(f"can only split a train corpus, got role {corpus.role.value}")
    rng = np.random.default_rng(spec.seed)
    n = len(corpus.beats)
    if spec.stratify_by_label:
        train_idx: list[int] = []
        val_idx: list[int] = []
        for label in sorted({b.label for b in corpus.beats}, key=lambda l: l.value):
            idx = np.array([i for i, b in enumerate(corpus.beats) if b.label == label])
            perm = idx[rng.permutation(len(idx))]
            cut = math.floor(spec.train_fraction * len(idx))
            train_idx.extend(perm[:cut])
            val_idx.extend(perm[cut:])
    else:
        perm = rng.permutation(n)
        cut = math.floor(spec.train_fraction * n)
        train_idx, val_idx = list(perm[:cut]), list(perm[cut:])
    mk = lambda idx, role: Corpus(
        beats=[corpus.beats[i] for i in idx], window_len=corpus.window_len, role=role
    )
    return mk(train_idx, Role.TRAIN), mk(val_idx, Role.VALIDATION)


# ----------------------------------------------------------- law file

def save_law(law: LinearLaw, path) -> None:
    payload = "".join(_fmt(v) + "\n" for v in law.w)
    digest = hashlib.sha256(payload.encode()).hexdigest()
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"version={FORMAT_VERSION}\n")
        f.write(f"class={law.class_tag}\n")
        f.write(f"l={law.width}\n")
        f.write(f"lambda={_fmt(law.lam)}\n")
        f.write(f"rows={law.train_row_count}\n")
        f.write(f"checksum={digest}\n")
        f.write(payload)


def load_law(path) -> LinearLaw:
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    header = {}
    body_start = 0
    for i, line in enumerate(lines):
        if "=" not in line:
            body_start = i
            break
        k, v = line.split("=", 1)
        header[k] = v
        body_start = i + 1
    for key in ("version", "class", "l", "lambda", "checksum"):
        if key not in header:
            raise ArtifactFileError(f"{path}: missing header field {key!r}")
    if header["version"] != FORMAT_VERSION:
        raise ArtifactFileError(
            f"{path}: unsupported version {header['version']!r}"
        )
    coeff_lines = [l for l in lines[body_start:] if l.strip()]
    payload = "".join(l + "\n" for l in coeff_lines)
    if hashlib.sha256(payload.encode()).hexdigest() != header["checksum"]:
        raise ArtifactFileError(f"{path}: checksum mismatch")
    w = np.array([float(l) for l in coeff_lines])
    if len(w) != int(header["l"]):
        raise ArtifactFileError(
            f"{path}: expected {header['l']} coefficients, got {len(w)}"
        )
    norm = float(np.linalg.norm(w))
    if abs(norm - 1.0) > 1e-9:
        raise ArtifactFileError(f"{path}: coefficients not unit norm (norm={norm:.6g})")
    return LinearLaw(
        w=w,
        lam=float(header["lambda"]),
        class_tag=header["class"],
        train_row_count=int(header.get("rows", "0")),
    )


# --------------------------------------------------------- model file

def _write_array(f, name: str, arr: np.ndarray) -> list[str]:
    arr = np.atleast_2d(arr)
    lines = [f"matrix {name} {arr.shape[0]} {arr.shape[1]}"]
    for row in arr:
        lines.append(" ".join(_fmt(v) for v in row))
    return lines


def _tree_lines(tree: dict) -> list[str]:
    """Flatten a CART tree into numbered node lines, root first."""
    nodes: list[str] = []

    def visit(node) -> int:
        my_id = len(nodes)
        nodes.append("")  # placeholder
        if "leaf" in node:
            nodes[my_id] = f"node {my_id} leaf {node['leaf']}"
        else:
            left = visit(node["left"])
            right = visit(node["right"])
            nodes[my_id] = (
                f"node {my_id} split {node['feature']} "
                f"{_fmt(node['threshold'])} {left} {right}"
            )
        return my_id

    visit(tree)
    return nodes


def _model_payload(model: TrainedModel) -> list[str]:
    p = model.params
    lines: list[str] = []
    if model.kind == "knn":
        lines.append(f"param k={p['k']}")
        lines.append(f"param metric={p['metric']}")
        lines += _write_array(None, "X", p["X"])
        lines.append("ivector y " + " ".join(str(int(v)) for v in p["y"]))
    elif model.kind == "svm-linear":
        lines.append(f"param b={_fmt(p['b'])}")
        lines += _write_array(None, "w", p["w"])
    elif model.kind == "svm-rbf":
        lines.append(f"param b={_fmt(p['b'])}")
        lines.append(f"param gamma={_fmt(p['gamma'])}")
        lines += _write_array(None, "coef", p["coef"])
        lines += _write_array(None, "support_vectors", p["support_vectors"])
    elif model.kind == "rf":
        lines.append(f"param trees={len(p['trees'])}")
        for i, tree in enumerate(p["trees"]):
            tl = _tree_lines(tree)
            lines.append(f"tree {i} {len(tl)}")
            lines += tl
    elif model.kind == "mlp":
        for name in ("W1", "b1", "W2", "b2"):
            lines += _write_array(None, name, p[name])
    else:
        raise ValueError(f"unknown model kind {model.kind!r}")
    return lines


def save_model(model: TrainedModel, path) -> None:
    payload = "".join(l + "\n" for l in _model_payload(model))
    digest = hashlib.sha256(payload.encode()).hexdigest()
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"version={FORMAT_VERSION}\n")
        f.write(f"kind={model.kind}\n")
        f.write(f"feature_dim={model.feature_dim}\n")
        f.write("labels=" + ",".join(model.labels) + "\n")
        f.write(f"checksum={digest}\n")
        f.write(payload)


def _parse_arrays(lines: list[str]):
    params: dict[str, str] = {}
    arrays: dict[str, np.ndarray] = {}
    trees: list[dict] = []
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("param "):
            k, v = line[len("param "):].split("=", 1)
            params[k] = v
            i += 1
        elif line.startswith("matrix "):
            _, name, r, c = line.split()
            r, c = int(r), int(c)
            rows = [
                [float(v) for v in lines[i + 1 + j].split()] for j in range(r)
            ]
            arrays[name] = np.array(rows).reshape(r, c)
            i += 1 + r
        elif line.startswith("ivector "):
            parts = line.split()
            arrays[parts[1]] = np.array([int(v) for v in parts[2:]], dtype=int)
            i += 1
        elif line.startswith("tree "):
            _, _idx, n_nodes = line.split()
            n_nodes = int(n_nodes)
            node_specs = {}
            for j in range(n_nodes):
                parts = lines[i + 1 + j].split()
                nid = int(parts[1])
                if parts[2] == "leaf":
                    node_specs[nid] = {"leaf": int(parts[3])}
                else:
                    node_specs[nid] = {
                        "feature": int(parts[3]),
                        "threshold": float(parts[4]),
                        "left_id": int(parts[5]),
                        "right_id": int(parts[6]),
                    }

            def build(nid):
                spec = node_specs[nid]
                if "leaf" in spec:
                    return {"leaf": spec["leaf"]}
                return {
                    "feature": spec["feature"],
                    "threshold": spec["threshold"],
                    "left": build(spec["left_id"]),
                    "right": build(spec["right_id"]),
                }

            trees.append(build(0))
            i += 1 + n_nodes
        else:
            raise ArtifactFileError(f"unrecognized payload line: {line!r}")
    return params, arrays, trees


def load_model(path) -> TrainedModel:
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    header = {}
    body_start = 0
    for i, line in enumerate(lines):
        first = line.split(" ", 1)[0]
        if "=" not in line or first in ("param",):
            body_start = i
            break
        k, v = line.split("=", 1)
        header[k] = v
        body_start = i + 1
    for key in ("version", "kind", "feature_dim", "labels", "checksum"):
        if key not in header:
            raise ArtifactFileError(f"{path}: missing header field {key!r}")
    if header["version"] != FORMAT_VERSION:
        raise ArtifactFileError(f"{path}: unsupported version {header['version']!r}")
    body = [l for l in lines[body_start:] if l.strip()]
    payload = "".join(l + "\n" for l in body)
    if hashlib.sha256(payload.encode()).hexdigest() != header["checksum"]:
        raise ArtifactFileError(f"{path}: checksum mismatch")
    params_kv, arrays, trees = _parse_arrays(body)
    kind = header["kind"]
    if kind == "knn":
        params = {"X": arrays["X"], "y": arrays["y"],
                  "k": int(params_kv["k"]), "metric": params_kv["metric"]}
    elif kind == "svm-linear":
        params = {"w": arrays["w"].ravel(), "b": float(params_kv["b"])}
    elif kind == "svm-rbf":
        params = {"support_vectors": arrays["support_vectors"],
                  "coef": arrays["coef"].ravel(),
                  "b": float(params_kv["b"]), "gamma": float(params_kv["gamma"])}
    elif kind == "rf":
        params = {"trees": trees}
    elif kind == "mlp":
        params = {"W1": arrays["W1"], "b1": arrays["b1"].ravel(),
                  "W2": arrays["W2"], "b2": arrays["b2"].ravel()}
    else:
        raise ArtifactFileError(f"{path}: unknown model kind {kind!r}")
    return TrainedModel(
        kind=kind,
        feature_dim=int(header["feature_dim"]),
        labels=header["labels"].split(","),
        params=params,
    )


# ------------------------------------------------------- feature file

def save_features(path, X: np.ndarray, labels: list[str],
                  layout: list[tuple[str, int]]) -> None:
    layout_str = ";".join(f"{tag}:{n}" for tag, n in layout)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# layout={layout_str}\n")
        for lbl, row in zip(labels, X):
            f.write(str(lbl) + "," + ",".join(_fmt(v) for v in row) + "\n")


def load_features(path) -> tuple[np.ndarray, list[str], list[tuple[str, int]]]:
    layout: list[tuple[str, int]] = []
    X = []
    labels = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("# layout="):
                for part in line[len("# layout="):].split(";"):
                    tag, n = part.rsplit(":", 1)
                    layout.append((tag, int(n)))
                continue
            if line.startswith("#"):
                continue
            fields = line.split(",")
            labels.append(fields[0])
            X.append([float(v) for v in fields[1:]])
    return np.array(X), labels, layout
