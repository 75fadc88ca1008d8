"""MLP / GCN / SGC with hand-written backward passes, full-batch training.

A model is a set of branches followed by a linear classifier. A branch holds
everything that touches a graph; with one graph there is one branch and the
result is the ordinary model:

    MLP  emb = relu(... relu(X W0 + b0) ...)              logits = emb Wc + bc
    GCN  emb = Â relu(... relu(Â X W0 + b0) ...)          logits = emb Wc + bc
    SGC  emb = Â^k X                                      logits = emb Wc + bc

so a 2-layer GCN computes Â relu(Â X W0 + b0) W1 + b1 as usual. With two
graphs the branch embeddings are averaged (shared weights) or concatenated
(separate weights) before the classifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import NumericError, ValidationError
from .graph import Graph, normalized_adjacency, spmm

KINDS = ("mlp", "gcn", "sgc")


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "gcn"
    layers: int = 2
    hidden: int = 64
    activation: str = "relu"
    dropout: float = 0.5
    hops: int = 2  # sgc only

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown model kind {self.kind!r}")
        if self.layers not in (1, 2, 3):
            raise ValidationError(f"layers must be 1, 2 or 3, got {self.layers}")
        if self.kind == "sgc" and self.hops < 1:
            raise ValidationError("sgc needs hops >= 1")
        if self.activation != "relu":
            raise ValidationError(f"unsupported activation {self.activation!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError(f"dropout must lie in [0, 1), got {self.dropout}")

    @classmethod
    def parse(cls, text: str, **kw) -> "ModelSpec":
        """``mlp`` | ``gcn`` | ``sgc`` | ``sgc:K``"""
        kind, _, arg = text.partition(":")
        if kind == "sgc" and arg:
            kw["hops"] = int(arg)
        elif arg:
            raise ValidationError(f"unexpected argument in model {text!r}")
        return cls(kind=kind, **kw)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 1000
    learning_rate: float = 1e-2
    weight_decay: float = 5e-4
    optimizer: str = "adam"
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be > 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ValidationError(f"unknown optimizer {self.optimizer!r}")


@dataclass(frozen=True)
class DataSplit:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        for name in ("train", "val", "test"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        parts = np.concatenate([self.train, self.val, self.test])
        if len(np.unique(parts)) != len(parts):
            raise ValidationError("train/val/test sets overlap")

    @classmethod
    def random(cls, num_nodes: int, seed: int, fractions=(0.5, 0.25, 0.25)) -> "DataSplit":
        perm = np.random.default_rng(seed).permutation(num_nodes)
        n_train = int(round(fractions[0] * num_nodes))
        n_val = int(round(fractions[1] * num_nodes))
        return cls(np.sort(perm[:n_train]), np.sort(perm[n_train:n_train + n_val]),
                   np.sort(perm[n_train + n_val:]))


@dataclass
class TrainReport:
    train_acc: float
    val_acc: float
    test_acc: float
    best_epoch: int
    best_val_acc: float
    best_test_acc: float
    losses: list = field(default_factory=list)


def _branch_name(s: int, what: str, layer: int) -> str:
    return f"branch{s}.{what}{layer}"


class Model:
    """Trained (or freshly initialized) parameters plus the wiring to run them."""

    def __init__(self, spec: ModelSpec, params: dict, num_branches: int = 1,
                 combine: str = "single", share_params: bool = True):
        self.spec = spec
        self.params = params
        self.num_branches = num_branches
        self.combine = combine
        self.share_params = share_params

    # ---- wiring -------------------------------------------------------------

    def branch_param_set(self, b: int) -> int:
        return 0 if self.share_params else b

    def num_params(self, prefix: str = "") -> int:
        return sum(p.size for k, p in self.params.items() if k.startswith(prefix))

    def prepare(self, inputs: np.ndarray, graphs: Sequence[Graph]):
        """Per-branch inputs and propagation operators (None for graph-free)."""
        x = np.asarray(inputs, dtype=np.float64)
        if self.spec.kind == "mlp":
            return [x], [None]
        if len(graphs) != self.num_branches:
            raise ValidationError(
                f"model expects {self.num_branches} graph(s), got {len(graphs)}")
        ops = [normalized_adjacency(g) for g in graphs]
        for g in graphs:
            if g.num_nodes != x.shape[0]:
                raise ValidationError(
                    f"input has {x.shape[0]} rows but graph has {g.num_nodes} nodes")
        if self.spec.kind == "sgc":
            xs = []
            for a in ops:
                h = x
                for _ in range(self.spec.hops):
                    h = spmm(a, h)
                xs.append(h)
            return xs, [None] * len(ops)
        return [x] * len(ops), ops

    # ---- forward / backward -------------------------------------------------

    def _branch_forward(self, b, x, a, rng):
        s = self.branch_param_set(b)
        h = x
        cache = []
        for l in range(self.spec.layers - 1 if self.spec.kind != "sgc" else 0):
            hw = h @ self.params[_branch_name(s, "W", l)]
            z = (spmm(a, hw) if a is not None else hw) + self.params[_branch_name(s, "b", l)]
            out = np.maximum(z, 0.0)
            mask = None
            if rng is not None and self.spec.dropout > 0:
                keep = 1.0 - self.spec.dropout
                mask = (rng.random(out.shape) < keep) / keep
                out = out * mask
            cache.append((h, z, mask))
            h = out
        emb = spmm(a, h) if self.spec.kind == "gcn" else h
        return emb, h, cache

    def _merge(self, embs):
        if len(embs) == 1:
            return embs[0]
        if self.combine == "mean":
            return sum(embs) / len(embs)
        return np.concatenate(embs, axis=1)

    def forward(self, xs, ops, rng=None):
        embs, caches = [], []
        for b, (x, a) in enumerate(zip(xs, ops)):
            emb, _, cache = self._branch_forward(b, x, a, rng)
            embs.append(emb)
            caches.append(cache)
        merged = self._merge(embs)
        logits = merged @ self.params["out.W"] + self.params["out.b"]
        return logits, (xs, ops, embs, merged, caches)

    def backward(self, dlogits, state) -> dict:
        xs, ops, embs, merged, caches = state
        grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        grads["out.W"] = merged.T @ dlogits
        grads["out.b"] = dlogits.sum(axis=0)
        demb = dlogits @ self.params["out.W"].T
        if len(embs) == 1:
            parts = [demb]
        elif self.combine == "mean":
            parts = [demb / len(embs)] * len(embs)
        else:
            cuts = np.cumsum([e.shape[1] for e in embs])[:-1]
            parts = np.split(demb, cuts, axis=1)
        for b, (d, a, cache) in enumerate(zip(parts, ops, caches)):
            s = self.branch_param_set(b)
            dh = spmm(a.T, d) if self.spec.kind == "gcn" else d
            for l in reversed(range(len(cache))):
                h_in, z, mask = cache[l]
                if mask is not None:
                    dh = dh * mask
                dz = dh * (z > 0)
                grads[_branch_name(s, "b", l)] += dz.sum(axis=0)
                dhw = spmm(a.T, dz) if a is not None else dz
                w = self.params[_branch_name(s, "W", l)]
                grads[_branch_name(s, "W", l)] += h_in.T @ dhw
                dh = dhw @ w.T
        return grads

    # ---- conveniences -------------------------------------------------------

    def logits(self, inputs, graphs=()) -> np.ndarray:
        xs, ops = self.prepare(inputs, graphs)
        return self.forward(xs, ops)[0]

    def hidden(self, inputs, graphs=()) -> np.ndarray:
        """Last hidden-layer activations of the first branch (no dropout).

        For a 2-layer MLP/GCN this is the output of the first nonlinearity;
        for SGC or 1-layer models it is the branch input.
        """
        xs, ops = self.prepare(inputs, graphs)
        return self._branch_forward(0, xs[0], ops[0], None)[1]

    def loss(self, inputs, graphs, labels, nodes) -> float:
        return cross_entropy(self.logits(inputs, graphs), labels, nodes)[0]


def cross_entropy(logits: np.ndarray, labels, nodes):
    """Mean cross-entropy over ``nodes`` and its gradient w.r.t. all logits."""
    nodes = np.asarray(nodes)
    z = logits[nodes]
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    y = np.asarray(labels)[nodes]
    loss = -logp[np.arange(len(nodes)), y].mean()
    grad = np.zeros_like(logits)
    p = np.exp(logp)
    p[np.arange(len(nodes)), y] -= 1.0
    grad[nodes] = p / len(nodes)
    return float(loss), grad


def _glorot(rng, fan_in, fan_out):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_model(spec: ModelSpec, in_dim: int, num_classes: int, rng: np.random.Generator,
               num_branches: int = 1, combine: str = "single",
               share_params: bool = True) -> Model:
    if num_branches > 1 and combine not in ("mean", "concat"):
        raise ValidationError(f"{num_branches} branches need combine mean|concat, got {combine!r}")
    if num_branches > 1 and share_params and combine != "mean":
        raise ValidationError("shared branch weights require combine='mean'")
    params = {}
    n_sets = 1 if share_params else num_branches
    depth = 0 if spec.kind == "sgc" else spec.layers - 1
    for s in range(n_sets):
        d = in_dim
        for l in range(depth):
            params[_branch_name(s, "W", l)] = _glorot(rng, d, spec.hidden)
            params[_branch_name(s, "b", l)] = np.zeros(spec.hidden)
            d = spec.hidden
    emb = spec.hidden if depth else in_dim
    width = emb * num_branches if combine == "concat" else emb
    params["out.W"] = _glorot(rng, width, num_classes)
    params["out.b"] = np.zeros(num_classes)
    return Model(spec, params, num_branches, "single" if num_branches == 1 else combine,
                 share_params)


class Adam:
    def __init__(self, params, lr, weight_decay, betas=(0.9, 0.999), eps=1e-8):
        self.lr, self.wd, self.betas, self.eps = lr, weight_decay, betas, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        b1, b2 = self.betas
        c1, c2 = 1 - b1 ** self.t, 1 - b2 ** self.t
        for k, p in params.items():
            g = grads[k] + self.wd * p
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            p -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


class Sgd:
    def __init__(self, params, lr, weight_decay):
        self.lr, self.wd = lr, weight_decay

    def step(self, params, grads):
        for k, p in params.items():
            p -= self.lr * (grads[k] + self.wd * p)


def accuracy(logits: np.ndarray, labels, nodes) -> float:
    nodes = np.asarray(nodes)
    if nodes.size == 0:
        raise ValidationError("accuracy over an empty node set")
    pred = np.argmax(logits[nodes], axis=1)  # first max wins: lowest class id
    return float(np.mean(pred == np.asarray(labels)[nodes]))


def evaluate(model: Model, inputs, graphs, labels, node_set) -> float:
    return accuracy(model.logits(inputs, graphs), labels, node_set)


def train(spec: ModelSpec, inputs, graphs: Sequence[Graph], labels, split: DataSplit,
          cfg: TrainConfig = TrainConfig(), combine: Optional[str] = None,
          share_params: bool = True, num_classes: Optional[int] = None):
    """Full-batch cross-entropy training; returns ``(model, report)``.

    With more than one graph, ``combine``/``share_params`` come from a fusion
    plan. The report's ``best_test_acc`` is the test accuracy at the epoch
    with the highest validation accuracy (earliest on ties).
    """
    x = np.asarray(inputs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    graphs = list(graphs)
    if len(split.train) == 0:
        raise ValidationError("empty train split")
    if spec.kind == "mlp" and graphs:
        raise ValidationError("an MLP takes no graphs")
    if spec.kind != "mlp" and not graphs:
        raise ValidationError(f"{spec.kind} needs at least one graph")
    if len(graphs) > 1 and combine is None:
        raise ValidationError("several graphs need a fusion plan (combine=mean|concat)")
    c = num_classes or int(labels.max()) + 1
    rng = np.random.default_rng(cfg.seed)
    model = init_model(spec, x.shape[1], c, rng, max(len(graphs), 1),
                       combine or "single", share_params)
    xs, ops = model.prepare(x, graphs)
    opt = (Adam if cfg.optimizer == "adam" else Sgd)(model.params, cfg.learning_rate,
                                                      cfg.weight_decay)
    val = split.val if len(split.val) else split.train
    test = split.test if len(split.test) else val

    losses = []
    best = (-1.0, -1, 0.0)
    for epoch in range(cfg.epochs):
        logits, state = model.forward(xs, ops, rng)
        loss, dlogits = cross_entropy(logits, labels, split.train)
        if not math.isfinite(loss):
            raise NumericError(f"non-finite loss {loss} at epoch {epoch}")
        losses.append(loss)
        opt.step(model.params, model.backward(dlogits, state))
        eval_logits = model.forward(xs, ops)[0]
        va = accuracy(eval_logits, labels, val)
        if va > best[0]:
            best = (va, epoch, accuracy(eval_logits, labels, test))
    eval_logits = model.forward(xs, ops)[0]
    report = TrainReport(
        train_acc=accuracy(eval_logits, labels, split.train),
        val_acc=accuracy(eval_logits, labels, val),
        test_acc=accuracy(eval_logits, labels, test),
        best_epoch=best[1], best_val_acc=best[0], best_test_acc=best[2], losses=losses)
    return model, report


def tiny_instance(seed: int, num_nodes: int = 10, feature_dim: int = 4, num_classes: int = 3,
                  edge_prob: float = 0.3):
    """Random small graph with Gaussian features, for gradient checks."""
    from .graph import build_graph

    rng = np.random.default_rng(seed)
    iu = np.triu_indices(num_nodes, 1)
    mask = rng.random(len(iu[0])) < edge_prob
    edges = np.stack([iu[0][mask], iu[1][mask]], axis=1)
    x = rng.standard_normal((num_nodes, feature_dim))
    y = rng.integers(num_classes, size=num_nodes)
    return build_graph(edges, num_nodes, x, y, num_classes)


def gradient_check(spec: ModelSpec, g: Graph, seed: int, graphs: Optional[Sequence[Graph]] = None,
                   combine: str = "single", share_params: bool = True,
                   step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Loss is the mean cross-entropy over all nodes, without weight decay or
    dropout. Relative error is |a - n| / max(|a|, |n|, 1e-8).
    """
    if spec.dropout:
        spec = ModelSpec(spec.kind, spec.layers, spec.hidden, spec.activation, 0.0, spec.hops)
    if graphs is None:
        graphs = [] if spec.kind == "mlp" else [g]
    rng = np.random.default_rng(seed)
    model = init_model(spec, g.feature_dim, g.num_classes, rng, max(len(graphs), 1),
                       combine, share_params)
    for k in model.params:
        if k.startswith("branch") and ".b" in k or k == "out.b":
            model.params[k] = rng.normal(scale=0.1, size=model.params[k].shape)
    xs, ops = model.prepare(g.features, graphs)
    nodes = np.arange(g.num_nodes)

    def loss_now():
        return cross_entropy(model.forward(xs, ops)[0], g.labels, nodes)[0]

    logits, state = model.forward(xs, ops)
    analytic = model.backward(cross_entropy(logits, g.labels, nodes)[1], state)
    if model.num_params() > 2000:
        raise ValidationError("instance too large for a finite-difference check")
    worst = 0.0
    for k, p in model.params.items():
        flat = p.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_now()
            flat[i] = orig - step
            down = loss_now()
            flat[i] = orig
            num = (up - down) / (2 * step)
            a = analytic[k].reshape(-1)[i]
            rel = abs(a - num) / max(abs(a), abs(num), 1e-8)
            worst = max(worst, rel)
    return worst
