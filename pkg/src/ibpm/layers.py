"""Parameters, the GRU cell, Adam, and checkpoint files."""

from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

CHECKPOINT_VERSION = 1


class UnknownParameter(KeyError):
    pass


class CheckpointError(ValueError):
    pass


def glorot(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    fan_in, fan_out = (shape[0], shape[1]) if len(shape) == 2 else (shape[0], shape[0])
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=shape)


class ParamStore:
    """Named trainable tensors plus Adam moment buffers."""

    def __init__(self, seed: int = 0):
        self.params: OrderedDict[str, Tensor] = OrderedDict()
        self.rng = np.random.default_rng(seed)
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.step = 0

    def register(self, name: str, shape, init: str = "glorot") -> Tensor:
        if name in self.params:
            raise ValueError(f"parameter {name!r} already registered")
        shape = tuple(shape)
        data = glorot(self.rng, shape) if init == "glorot" else np.zeros(shape)
        t = Tensor(data, requires_grad=True, name=name)
        self.params[name] = t
        self.m[name] = np.zeros(shape)
        self.v[name] = np.zeros(shape)
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __iter__(self):
        return iter(self.params)

    def items(self):
        return self.params.items()

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None

    def gradients(self) -> dict[str, np.ndarray]:
        """Current gradients; parameters the loss never touched get zeros."""
        return {k: (np.zeros_like(t.data) if t.grad is None else t.grad) for k, t in self.params.items()}

    def set(self, name: str, value) -> None:
        value = np.asarray(value, dtype=np.float64)
        if value.shape != self.params[name].shape:
            raise ValueError(f"shape of {name!r} is fixed at {self.params[name].shape}, got {value.shape}")
        self.params[name].data = value.copy()

    def state(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self.params.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for k, v in state.items():
            self.set(k, v)

    def count(self) -> int:
        return sum(t.data.size for t in self.params.values())


def adam_step(store: ParamStore, grads: dict[str, np.ndarray], lr: float = 1e-3,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> ParamStore:
    """One Adam update with bias correction, applied in place."""
    for name in grads:
        if name not in store.params:
            raise UnknownParameter(name)
    store.step += 1
    t = store.step
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for name, g in grads.items():
        m = store.m[name] = beta1 * store.m[name] + (1.0 - beta1) * g
        v = store.v[name] = beta2 * store.v[name] + (1.0 - beta2) * g * g
        p = store.params[name]
        p.data = p.data - lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return store


@dataclass(frozen=True)
class GruCell:
    """Gated recurrent unit: reset gate, update gate, candidate state."""

    prefix: str
    input_dim: int
    hidden_dim: int

    @classmethod
    def create(cls, store: ParamStore, prefix: str, input_dim: int, hidden_dim: int) -> "GruCell":
        store.register(f"{prefix}.W", (input_dim, 3 * hidden_dim))
        store.register(f"{prefix}.U", (hidden_dim, 2 * hidden_dim))
        store.register(f"{prefix}.Uc", (hidden_dim, hidden_dim))
        store.register(f"{prefix}.b", (3 * hidden_dim,), init="zeros")
        return cls(prefix, input_dim, hidden_dim)

    def step(self, store: ParamStore, x: Tensor, h: Tensor) -> Tensor:
        return gru_step(self, store, x, h)


def gru_step(cell: GruCell, store: ParamStore, x: Tensor, h: Tensor) -> Tensor:
    """``(1 - z) * h + z * tanh(x Wc + (r * h) Uc + bc)`` for a batch of rows."""
    if x.shape[-1] != cell.input_dim or h.shape[-1] != cell.hidden_dim:
        raise ad.ShapeError(f"gru_step: input {x.shape} / state {h.shape} vs cell "
                            f"({cell.input_dim} -> {cell.hidden_dim})")
    H = cell.hidden_dim
    p = cell.prefix
    gx = x @ store[f"{p}.W"] + store[f"{p}.b"]
    gh = h @ store[f"{p}.U"]
    z = ad.sigmoid(gx[:, :H] + gh[:, :H])
    r = ad.sigmoid(gx[:, H:2 * H] + gh[:, H:])
    cand = ad.tanh(gx[:, 2 * H:] + (r * h) @ store[f"{p}.Uc"])
    return h + z * (cand - h)


def save_checkpoint(path, store: ParamStore, meta: dict | None = None) -> None:
    doc = {
        "version": CHECKPOINT_VERSION,
        "meta": meta or {},
        "params": {k: {"shape": list(t.shape), "data": t.data.ravel().tolist()} for k, t in store.items()},
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")))


def read_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: malformed checkpoint ({exc})") from None
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {doc.get('version')!r}")
    state = {k: np.asarray(v["data"], dtype=np.float64).reshape(v["shape"]) for k, v in doc["params"].items()}
    return state, doc.get("meta", {})
