"""Define-by-run reverse-mode tape over a flat real parameter vector.

Complex parameters are stored as interleaved ``(re, im)`` pairs. ``backward``
returns ``dL/d(values)`` coordinate by coordinate, so for a complex parameter
``w = x + iy`` the pair it reports is ``(dL/dx, dL/dy) = 2 * dL/d(conj w)``
read as (re, im). Only that real-pair gradient is ever consumed by the
optimizer; ``conj_wirtinger`` converts back when the complex form is wanted.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ContractError(RuntimeError):
    """A tape or store was used outside its contract."""


@dataclass(frozen=True)
class ParamEntry:
    name: str
    kind: str  # "real" | "complex"
    offset: int
    length: int
    shape: tuple

    @property
    def stop(self) -> int:
        return self.offset + self.length


class ParamStore:
    """Flat float64 vector plus a named layout of disjoint windows."""

    def __init__(self):
        self.values = np.zeros(0)
        self.layout: list[ParamEntry] = []
        self.step = 0
        self._index: dict[str, ParamEntry] = {}

    def add(self, name: str, value) -> ParamEntry:
        if name in self._index:
            raise ContractError(f"duplicate parameter name {name!r}")
        value = np.asarray(value)
        if np.iscomplexobj(value):
            flat = np.stack([value.real, value.imag], axis=-1).ravel()
            kind = "complex"
        else:
            flat = value.astype(float).ravel()
            kind = "real"
        if not np.all(np.isfinite(flat)):
            raise ContractError(f"non-finite initial value for {name!r}")
        entry = ParamEntry(name, kind, self.values.size, flat.size, tuple(value.shape))
        self.values = np.concatenate([self.values, flat])
        self.layout.append(entry)
        self._index[name] = entry
        return entry

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def entry(self, name: str) -> ParamEntry:
        return self._index[name]

    @property
    def size(self) -> int:
        return self.values.size

    def get(self, name: str, values=None):
        e = self._index[name]
        v = (self.values if values is None else values)[e.offset:e.stop]
        if e.kind == "complex":
            v = v.reshape(e.shape + (2,))
            return v[..., 0] + 1j * v[..., 1]
        return v.reshape(e.shape).copy()

    def set(self, name: str, value) -> None:
        e = self._index[name]
        value = np.asarray(value)
        if e.kind == "complex":
            value = np.broadcast_to(value, e.shape)
            flat = np.stack([value.real, value.imag], axis=-1).ravel()
        else:
            flat = np.broadcast_to(value, e.shape).astype(float).ravel()
        self.values[e.offset:e.stop] = flat

    def named_slices(self):
        return [(e.name, slice(e.offset, e.stop)) for e in self.layout]

    def copy(self) -> "ParamStore":
        out = ParamStore()
        out.values = self.values.copy()
        out.layout = list(self.layout)
        out._index = dict(self._index)
        out.step = self.step
        return out

    def validate(self) -> None:
        seen = np.zeros(self.values.size, dtype=int)
        for e in self.layout:
            if e.kind == "complex" and e.length % 2:
                raise ContractError(f"complex entry {e.name!r} has odd length")
            if e.offset < 0 or e.stop > self.values.size:
                raise ContractError(f"entry {e.name!r} out of bounds")
            seen[e.offset:e.stop] += 1
        if np.any(seen > 1):
            raise ContractError("overlapping parameter windows")


class Var:
    """One node on a tape: a real ndarray value and a vector-Jacobian product."""

    __slots__ = ("tape", "value", "parents", "vjp", "idx", "slot")

    def __init__(self, tape, value, parents=(), vjp=None, slot=None):
        self.tape = tape
        self.value = value
        self.parents = parents
        self.vjp = vjp
        self.slot = slot
        self.idx = len(tape.nodes)
        tape.nodes.append(self)

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var(shape={self.value.shape}, idx={self.idx})"


@dataclass
class CVar:
    """A complex tensor carried as two real tape nodes."""

    re: Var
    im: Var

    @property
    def shape(self):
        return self.re.shape

    def complex_value(self) -> np.ndarray:
        return self.re.value + 1j * self.im.value


@dataclass
class Tape:
    nodes: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)

    def constant(self, value) -> Var:
        return Var(self, np.asarray(value, dtype=float))

    def complex_constant(self, z) -> CVar:
        z = np.asarray(z)
        return CVar(self.constant(z.real), self.constant(z.imag))

    def param(self, store: ParamStore, name: str):
        """Leaf node(s) for a stored parameter; complex ones come back as ``CVar``."""
        e = store.entry(name)
        window = store.values[e.offset:e.stop]
        if e.kind == "complex":
            pair = window.reshape(e.shape + (2,))
            return CVar(
                Var(self, pair[..., 0].copy(), slot=(e, 0)),
                Var(self, pair[..., 1].copy(), slot=(e, 1)),
            )
        return Var(self, window.reshape(e.shape).copy(), slot=(e, None))

    def params(self, store: ParamStore) -> dict:
        return {e.name: self.param(store, e.name) for e in store.layout}


def backward(tape: Tape, params: ParamStore, loss: Var | None = None) -> np.ndarray:
    """Reverse sweep from the scalar loss; returns ``dL/d(params.values)``."""
    if not tape.nodes:
        raise ContractError("empty tape")
    loss = tape.nodes[-1] if loss is None else loss
    lv = np.asarray(loss.value)
    if lv.shape != () or np.iscomplexobj(lv):
        raise ContractError("backward needs a real scalar loss")
    grads: dict[int, np.ndarray] = {loss.idx: np.ones(())}
    out = np.zeros(params.size)
    for node in reversed(tape.nodes[: loss.idx + 1]):
        g = grads.pop(node.idx, None)
        if g is None:
            continue
        if node.slot is not None:
            e, comp = node.slot
            if comp is None:
                out[e.offset:e.stop] += g.ravel()
            else:
                view = out[e.offset:e.stop].reshape(e.shape + (2,))
                view[..., comp] += g
            continue
        if node.vjp is None:
            continue
        for parent, pg in zip(node.parents, node.vjp(g)):
            if pg is None:
                continue
            if parent.idx in grads:
                grads[parent.idx] = grads[parent.idx] + pg
            else:
                grads[parent.idx] = pg
    return out


def conj_wirtinger(params: ParamStore, grad: np.ndarray, name: str) -> np.ndarray:
    """``dL/d(conj w)`` for complex parameter ``name`` from a real-coordinate gradient."""
    e = params.entry(name)
    if e.kind != "complex":
        raise ContractError(f"{name!r} is not a complex parameter")
    pair = grad[e.offset:e.stop].reshape(e.shape + (2,))
    return 0.5 * (pair[..., 0] + 1j * pair[..., 1])
