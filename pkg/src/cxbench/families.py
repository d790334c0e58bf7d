"""Model families for the protocol, parameter/FLOP accounting, and width matching.

Reference architecture, shared by every family::

    conv(k=5, stride 2) -> activation -> conv(k=5, stride 2) -> activation
    -> global average pool -> dense(HIDDEN) -> ReLU -> dense(n_classes)

Complex families run complex convolutions and complex activations and hand
``(re, im)`` of the pooled channels to the real head. Real families use real
convolutions with ReLU. The head has a fixed number of hidden units
(``HIDDEN``) so every family shares the same readout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import activations as A
from . import layers as L
from .views import apply_view, check_view, output_channels
from .wirtinger import CVar, ParamStore, Tape, backward
from .wirtinger import ops

FAMILIES = (
    "complex",
    "real_stacked",
    "real_param_matched",
    "real_flop_matched",
    "real_polar",
    "real_phase",
    "real_magnitude",
)
REAL_FAMILIES = FAMILIES[1:]
FAMILY_VIEW = {
    "complex": "complex_native",
    "real_stacked": "cartesian",
    "real_param_matched": "cartesian",
    "real_flop_matched": "cartesian",
    "real_polar": "polar",
    "real_phase": "phase_only",
    "real_magnitude": "magnitude_only",
}
KERNEL = 5
STRIDE = 2
HIDDEN = 16  # head hidden units, same for every family and width
WIDTH_BOUNDS = (4, 1024)
PARAM_MATCH_TOL = 0.05
FLOP_MATCH_TOL = 0.10
# guard bands for finite-difference checks: kinks, and ComplexTanh poles
FD_GUARD = {"ctanh": 0.5}


class ConfigError(ValueError):
    pass


@dataclass
class FamilySpec:
    family: str
    view: str | None = None
    activation: str = "crelu"
    width: int = 32
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        expected = FAMILY_VIEW[self.family]
        if self.view is None:
            self.view = expected
        check_view(self.view)
        if self.view != expected:
            raise ConfigError(f"family {self.family!r} requires view {expected!r}, got {self.view!r}")
        A.check_id(self.activation)
        if self.family == "complex" and self.activation == "real_relu":
            raise ConfigError("the complex family needs a complex activation")
        if self.width < 1:
            raise ConfigError("width must be positive")

    @property
    def is_complex(self) -> bool:
        return self.family == "complex"

    @property
    def effective_activation(self) -> str:
        return self.activation if self.is_complex else "real_relu"


@dataclass(frozen=True)
class CostReport:
    param_count: int
    flops_per_forward: int

    def as_dict(self) -> dict:
        return {"param_count": self.param_count, "flops": self.flops_per_forward}


def conv_len(T: int, k: int = KERNEL, stride: int = STRIDE) -> int:
    if T < k:
        raise L.ShapeError(f"sequence length {T} is shorter than kernel size {k}")
    return (T - k) // stride + 1


def min_seq_len(k: int = KERNEL, stride: int = STRIDE) -> int:
    return k + stride * (k - 1)


def closed_form_params(is_complex: bool, width: int, in_ch: int, n_classes: int, k: int = KERNEL,
                       modrelu: bool = False, hidden: int = HIDDEN) -> int:
    """Real-scalar parameter count; ``in_ch`` counts model input channels."""
    conv = (width * in_ch * k + width) + (width * width * k + width)
    feat = width
    if is_complex:
        conv *= 2
        feat = 2 * width
        if modrelu:
            conv += 2 * width
    return conv + (feat * hidden + hidden) + (hidden * n_classes + n_classes)


def closed_form_flops(is_complex: bool, width: int, in_ch: int, n_classes: int, T: int,
                      k: int = KERNEL, stride: int = STRIDE, hidden: int = HIDDEN) -> int:
    """Multiply-accumulates per example; one complex tap costs 4 real MACs."""
    t1 = conv_len(T, k, stride)
    t2 = conv_len(t1, k, stride)
    mult = 4 if is_complex else 1
    conv = mult * (width * in_ch * k * t1 + width * width * k * t2)
    feat = 2 * width if is_complex else width
    return conv + feat * hidden + hidden * n_classes


def match_width(target: int, cost_fn, bounds=WIDTH_BOUNDS) -> int:
    """Width in ``bounds`` minimizing ``|cost_fn(width) - target|``; ties go to the smaller width."""
    lo, hi = bounds
    if not cost_fn(lo) <= target <= cost_fn(hi):
        raise ConfigError(f"target cost {target} unreachable for widths in [{lo}, {hi}]")
    best, best_err = lo, abs(cost_fn(lo) - target)
    for w in range(lo + 1, hi + 1):
        err = abs(cost_fn(w) - target)
        if err < best_err:
            best, best_err = w, err
        elif cost_fn(w) > target:
            break
    return best


class Model:
    """A built family member: parameters in a :class:`ParamStore` plus a forward pass."""

    def __init__(self, spec: FamilySpec, width: int, n_classes: int, raw_channels: int,
                 seq_len: int, rng: np.random.Generator):
        self.spec = spec
        self.family = spec.family
        self.view = spec.view
        self.activation = spec.effective_activation
        self.width = width
        self.n_classes = n_classes
        self.raw_channels = raw_channels
        self.in_channels = output_channels(self.view, raw_channels)
        self.seq_len = seq_len
        self.k = int(spec.overrides.get("kernel", KERNEL))
        self.stride = int(spec.overrides.get("stride", STRIDE))
        self.hidden = int(spec.overrides.get("hidden", HIDDEN))
        if seq_len < min_seq_len(self.k, self.stride):
            raise L.ShapeError(f"sequence length {seq_len} too short for the reference architecture")
        self.params = ParamStore()
        self._init(rng)

    @property
    def is_complex(self) -> bool:
        return self.family == "complex"

    def _init(self, rng):
        W, k, C = self.width, self.k, self.in_channels
        p = self.params
        if self.is_complex:
            for name, cin in (("conv1", C), ("conv2", W)):
                s = L.init_std(cin, k)
                p.add(f"{name}.weight", s * (rng.standard_normal((W, cin, k)) + 1j * rng.standard_normal((W, cin, k))))
                p.add(f"{name}.bias", np.zeros(W, dtype=complex))
                if self.activation == "modrelu":
                    p.add(f"{name}.act_bias", np.zeros(W))
            feat = 2 * W
        else:
            for name, cin in (("conv1", C), ("conv2", W)):
                s = L.init_std(cin, k)
                p.add(f"{name}.weight", s * rng.standard_normal((W, cin, k)))
                p.add(f"{name}.bias", np.zeros(W))
            feat = W
        H = self.hidden
        p.add("fc.weight", rng.standard_normal((H, feat)) / np.sqrt(feat))
        p.add("fc.bias", np.zeros(H))
        p.add("head.weight", rng.standard_normal((self.n_classes, H)) / np.sqrt(H))
        p.add("head.bias", np.zeros(self.n_classes))
        p.validate()

    # -- forward ---------------------------------------------------------
    def prepare(self, z: np.ndarray) -> np.ndarray:
        """Materialize this family's view of raw complex data ``[N, C, T]``."""
        return apply_view(self.view, z)

    def forward(self, tape: Tape, x: np.ndarray, sites: list | None = None):
        P = tape.params(self.params)
        if self.is_complex:
            h = tape.complex_constant(x)
            jac = A._JAC[self.activation]
            for name in ("conv1", "conv2"):
                h = ops.cconv1d(h, P[f"{name}.weight"], self.stride)
                b = P[f"{name}.bias"]
                h = CVar(ops.bias_channels(h.re, b.re), ops.bias_channels(h.im, b.im))
                ab = P.get(f"{name}.act_bias")
                if sites is not None:
                    sites.append((self.activation, h.complex_value(), None if ab is None else ab.value[None, :, None]))
                h = ops.complex_map(jac, h, ab)
            feat = ops.concat([ops.mean(h.re, 2), ops.mean(h.im, 2)], axis=1)
        else:
            h = tape.constant(x)
            for name in ("conv1", "conv2"):
                h = ops.bias_channels(ops.conv1d(h, P[f"{name}.weight"], self.stride), P[f"{name}.bias"])
                if sites is not None:
                    sites.append(("real_relu", h.value, None))
                h = ops.relu(h)
            feat = ops.mean(h, 2)
        hid = ops.add(ops.linear(feat, P["fc.weight"]), P["fc.bias"])
        if sites is not None:
            sites.append(("real_relu", hid.value, None))
        hid = ops.relu(hid)
        return ops.add(ops.linear(hid, P["head.weight"]), P["head.bias"])

    def loss_and_grad(self, x, y):
        tape = Tape()
        logits = self.forward(tape, x)
        loss = ops.softmax_cross_entropy(logits, y)
        return float(loss.value), backward(tape, self.params, loss)

    def loss_at(self, values, x, y) -> float:
        saved = self.params.values
        self.params.values = values
        try:
            tape = Tape()
            return float(ops.softmax_cross_entropy(self.forward(tape, x), y).value)
        finally:
            self.params.values = saved

    def logits(self, x, batch: int = 256) -> np.ndarray:
        out = []
        for i in range(0, len(x), batch):
            out.append(self.forward(Tape(), x[i:i + batch]).value)
        return np.concatenate(out) if out else np.zeros((0, self.n_classes))

    def kink_clearance(self, x) -> float:
        """Smallest (distance to kink / guard band) over all activation inputs."""
        sites = []
        self.forward(Tape(), x, sites)
        worst = np.inf
        for act, pre, bias in sites:
            guard = FD_GUARD.get(act, A.KINK_GUARD)
            if act == "real_relu" and not np.iscomplexobj(pre):
                d = np.abs(pre)
            else:
                d = A.kink_distance(act, pre, 0.0 if bias is None else bias)
            worst = min(worst, float(np.min(d)) / guard)
        return worst

    def witness_logits(self, x) -> np.ndarray:
        """Logits via the ``aI + bJ``-constrained stacked-real path (complex family only)."""
        if not self.is_complex:
            raise ConfigError("the constrained-real witness exists only for the complex family")
        h = L.stack_channels(x)
        for name in ("conv1", "conv2"):
            w = self.params.get(f"{name}.weight")
            h = L.constrained_real_forward((w.real, w.imag), h, self.params.get(f"{name}.bias"), self.stride)
            zc = L.unstack_channels(h)
            ab = self.params.get(f"{name}.act_bias")[None, :, None] if f"{name}.act_bias" in self.params else None
            h = L.stack_channels(A.evaluate(self.activation, zc, ab))
        pooled = L.global_avg_pool(L.unstack_channels(h))
        head = L.Head(self.params.get("fc.weight"), self.params.get("fc.bias"),
                      self.params.get("head.weight"), self.params.get("head.bias"))
        return L.head_forward(head, pooled)

    def cost(self) -> CostReport:
        return CostReport(count_params(self), count_flops(self, self.seq_len))


def count_params(model: Model) -> int:
    total = 0
    for e in model.params.layout:
        n = int(np.prod(e.shape)) if e.shape else 1
        total += 2 * n if e.kind == "complex" else n
    return total


def count_flops(model: Model, T: int) -> int:
    return closed_form_flops(model.is_complex, model.width, model.in_channels, model.n_classes, T,
                             model.k, model.stride, model.hidden)


def resolve_width(spec: FamilySpec, n_classes: int, raw_channels: int, seq_len: int) -> int:
    """Width actually used for ``spec``; matched families scan against the complex model."""
    if spec.family not in ("real_param_matched", "real_flop_matched"):
        return spec.width
    cin_c = raw_channels
    cin_r = output_channels("cartesian", raw_channels)
    mod = spec.activation == "modrelu"
    h = int(spec.overrides.get("hidden", HIDDEN))
    if spec.family == "real_param_matched":
        target = closed_form_params(True, spec.width, cin_c, n_classes, modrelu=mod, hidden=h)
        w = match_width(target, lambda w: closed_form_params(False, w, cin_r, n_classes, hidden=h))
        got, tol = closed_form_params(False, w, cin_r, n_classes, hidden=h), PARAM_MATCH_TOL
    else:
        target = closed_form_flops(True, spec.width, cin_c, n_classes, seq_len, hidden=h)
        w = match_width(target, lambda w: closed_form_flops(False, w, cin_r, n_classes, seq_len, hidden=h))
        got, tol = closed_form_flops(False, w, cin_r, n_classes, seq_len, hidden=h), FLOP_MATCH_TOL
    if abs(got - target) / target > tol:
        raise ConfigError(f"{spec.family}: matched cost {got} misses target {target} by more than {tol:.0%}")
    return w


def build(spec: FamilySpec, n_classes: int, in_channels: int = 1, seq_len: int = 128, seed=0) -> Model:
    """Build one family member. ``in_channels`` counts raw complex channels."""
    rng = np.random.default_rng(seed)
    width = resolve_width(spec, n_classes, in_channels, seq_len)
    return Model(spec, width, n_classes, in_channels, seq_len, rng)
