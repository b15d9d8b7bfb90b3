"""Differentiable components and their plumbing.

Five components: phonetic encoder, speaker encoder, decoder, speaker
discriminator, and the refinement transform. Forward passes are built on
the autodiff tape; batched forms concatenate all frames of a batch and use
constant pooling / repetition matrices so one batch costs a handful of
matmuls. Also houses the seeded optimizer, checkpoint serialization, and
finite-difference gradient verification.

Default encoder: per-frame affine + tanh, temporal mean pooling, affine to
the embedding dimension. A unidirectional recurrent encoder is available as
``encoder_mode="rnn"``.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DataError, DimensionError, NumericError

COMPONENT_NAMES = ("E_p", "E_s", "Dec", "D_s", "refine")


@dataclass(frozen=True)
class ModelDims:
    """Architecture sizes shared by all components of one model."""

    feature_dim: int = 39
    embed_dim: int = 256
    enc_hidden: int = 128
    dec_hidden: int = 128
    disc_hidden: int = 128
    refine_hidden: int = 128
    encoder_mode: str = "pool"  # "pool" | "rnn"

    def __post_init__(self):
        if self.encoder_mode not in ("pool", "rnn"):
            raise DataError(f"unknown encoder_mode {self.encoder_mode!r}")


class ComponentParams:
    """Named parameter arrays (float64) for one component."""

    def __init__(self, name: str, arrays: dict):
        self.name = name
        self.arrays = {}
        for key, arr in arrays.items():
            arr = np.asarray(arr, dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise NumericError(f"{name}.{key}: non-finite parameter values")
            self.arrays[key] = arr

    def tensors(self, requires_grad: bool = False) -> dict:
        return {
            k: Tensor(v, requires_grad=requires_grad) for k, v in self.arrays.items()
        }

    def copy(self) -> "ComponentParams":
        return ComponentParams(self.name, {k: v.copy() for k, v in self.arrays.items()})

    def __repr__(self):
        shapes = {k: v.shape for k, v in self.arrays.items()}
        return f"ComponentParams({self.name!r}, {shapes})"


def _uniform_init(rng, fan_in: int, shape) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_encoder(dims: ModelDims, seed: int) -> ComponentParams:
    rng = np.random.default_rng(seed)
    f, h, d = dims.feature_dim, dims.enc_hidden, dims.embed_dim
    arrays = {
        "w_in": _uniform_init(rng, f, (f, h)),
        "b_in": _uniform_init(rng, f, (h,)),
    }
    if dims.encoder_mode == "rnn":
        arrays["w_rec"] = _uniform_init(rng, h, (h, h))
    arrays["w_out"] = _uniform_init(rng, h, (h, d))
    arrays["b_out"] = _uniform_init(rng, h, (d,))
    return ComponentParams("encoder", arrays)


def init_decoder(dims: ModelDims, seed: int) -> ComponentParams:
    rng = np.random.default_rng(seed)
    d, h, f = dims.embed_dim, dims.dec_hidden, dims.feature_dim
    n_in = 2 * d + 1  # [v_p; v_s; position]
    return ComponentParams(
        "decoder",
        {
            "w1": _uniform_init(rng, n_in, (n_in, h)),
            "b1": _uniform_init(rng, n_in, (h,)),
            "w2": _uniform_init(rng, h, (h, h)),
            "b2": _uniform_init(rng, h, (h,)),
            "w_out": _uniform_init(rng, h, (h, f)),
            "b_out": _uniform_init(rng, h, (f,)),
        },
    )


def init_discriminator(dims: ModelDims, seed: int) -> ComponentParams:
    rng = np.random.default_rng(seed)
    d, h = dims.embed_dim, dims.disc_hidden
    return ComponentParams(
        "discriminator",
        {
            "w1": _uniform_init(rng, 2 * d, (2 * d, h)),
            "b1": _uniform_init(rng, 2 * d, (h,)),
            "w2": _uniform_init(rng, h, (h, h)),
            "b2": _uniform_init(rng, h, (h,)),
            "w_out": _uniform_init(rng, h, (h, 1)),
            "b_out": _uniform_init(rng, h, (1,)),
        },
    )


def init_refine(dims: ModelDims, seed: int, identity: bool = True) -> ComponentParams:
    """Refinement transform parameters.

    With identity=True the output layer starts at zero, so the transform is
    exactly the identity map at step 0 (the residual path carries the input
    through unchanged).
    """
    rng = np.random.default_rng(seed)
    d, h = dims.embed_dim, dims.refine_hidden
    if identity:
        w2 = np.zeros((h, d))
        b2 = np.zeros(d)
    else:
        w2 = _uniform_init(rng, h, (h, d))
        b2 = _uniform_init(rng, h, (d,))
    return ComponentParams(
        "refine",
        {
            "w1": _uniform_init(rng, d, (d, h)),
            "b1": _uniform_init(rng, d, (h,)),
            "w2": w2,
            "b2": b2,
        },
    )


# -- batched forward passes (tape-building) ------------------------------


def pack_sequences(xs):
    """Concatenate variable-length (T_i, F) matrices -> (frames, lengths)."""
    lengths = [int(x.shape[0]) for x in xs]
    return np.concatenate([np.asarray(x, np.float64) for x in xs], axis=0), lengths


def _pool_matrix(lengths) -> np.ndarray:
    """(B, sum T) matrix averaging each segment's frame rows."""
    total = sum(lengths)
    pool = np.zeros((len(lengths), total))
    offset = 0
    for i, n in enumerate(lengths):
        pool[i, offset : offset + n] = 1.0 / n
        offset += n
    return pool


def _repeat_matrix(lengths) -> np.ndarray:
    """(sum T, B) matrix replicating one row per frame of each segment."""
    total = sum(lengths)
    rep = np.zeros((total, len(lengths)))
    offset = 0
    for i, n in enumerate(lengths):
        rep[offset : offset + n, i] = 1.0
        offset += n
    return rep


def _position_column(lengths) -> np.ndarray:
    """(sum T, 1) column of normalized frame positions t/T, t = 1..T."""
    cols = [np.arange(1, n + 1, dtype=np.float64) / n for n in lengths]
    return np.concatenate(cols).reshape(-1, 1)


def encoder_forward(pt: dict, frames, lengths, mode: str = "pool") -> Tensor:
    """Encode a packed batch -> (B, d) embedding tensor."""
    frames = ad.as_tensor(frames)
    if mode == "pool":
        hidden = ad.tanh(frames @ pt["w_in"] + pt["b_in"])
        pooled = ad.constant(_pool_matrix(lengths)) @ hidden
    elif mode == "rnn":
        finals = []
        offset = 0
        for n in lengths:
            state = ad.constant(np.zeros((1, pt["b_in"].shape[0])))
            for t in range(offset, offset + n):
                x_t = ad.take_rows(frames, [t])
                state = ad.tanh(x_t @ pt["w_in"] + state @ pt["w_rec"] + pt["b_in"])
            finals.append(state)
            offset += n
        pooled = ad.concat(finals, axis=0)
    else:
        raise DataError(f"unknown encoder mode {mode!r}")
    return pooled @ pt["w_out"] + pt["b_out"]


def decoder_forward(pt: dict, v_p, v_s, lengths) -> Tensor:
    """Reconstruct a packed batch -> (sum T, F) tensor."""
    v_p, v_s = ad.as_tensor(v_p), ad.as_tensor(v_s)
    rep = ad.constant(_repeat_matrix(lengths))
    inputs = ad.concat(
        [rep @ v_p, rep @ v_s, ad.constant(_position_column(lengths))], axis=1
    )
    h1 = ad.tanh(inputs @ pt["w1"] + pt["b1"])
    h2 = ad.tanh(h1 @ pt["w2"] + pt["b2"])
    return h2 @ pt["w_out"] + pt["b_out"]


def discriminator_forward(pt: dict, v_a, v_b) -> Tensor:
    """Pairs of phonetic vectors -> (P,) logits tensor."""
    inputs = ad.concat([ad.as_tensor(v_a), ad.as_tensor(v_b)], axis=1)
    h1 = ad.tanh(inputs @ pt["w1"] + pt["b1"])
    h2 = ad.tanh(h1 @ pt["w2"] + pt["b2"])
    return ad.tsum(h2 @ pt["w_out"] + pt["b_out"], axis=1)


def refine_forward(pt: dict, v) -> Tensor:
    """Residual refinement map v -> z (same dimension)."""
    v = ad.as_tensor(v)
    return v + ad.tanh(v @ pt["w1"] + pt["b1"]) @ pt["w2"] + pt["b2"]


# -- single-input operations (the public contract) ------------------------


def _check_vector(v, dim: int, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != dim:
        raise DimensionError(f"{what}: expected vector of length {dim}, got {v.shape}")
    return v


def _encode_one(params: ComponentParams, x, mode: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    f_dim = params.arrays["w_in"].shape[0]
    if x.ndim != 2 or x.shape[1] != f_dim:
        raise DimensionError(
            f"encoder: expected (T, {f_dim}) feature matrix, got {x.shape}"
        )
    if x.shape[0] < 1:
        raise DataError("encoder: empty feature sequence")
    out = encoder_forward(params.tensors(), x, [x.shape[0]], mode=mode)
    return out.data[0]


def encode_phonetic(params: ComponentParams, x, mode: str = "pool") -> np.ndarray:
    """Variable-length feature matrix -> phonetic vector of length d."""
    return _encode_one(params, x, mode)


def encode_speaker(params: ComponentParams, x, mode: str = "pool") -> np.ndarray:
    """Variable-length feature matrix -> speaker vector of length d."""
    return _encode_one(params, x, mode)


def decode(params: ComponentParams, v_p, v_s, n_frames: int) -> np.ndarray:
    """Reconstruct a (n_frames, F) feature matrix from one embedding pair."""
    if n_frames < 1:
        raise DataError(f"decode: n_frames must be >= 1, got {n_frames}")
    d = (params.arrays["w1"].shape[0] - 1) // 2
    v_p = _check_vector(v_p, d, "decode v_p")
    v_s = _check_vector(v_s, d, "decode v_s")
    out = decoder_forward(
        params.tensors(), v_p.reshape(1, -1), v_s.reshape(1, -1), [int(n_frames)]
    )
    return out.data


def discriminate(params: ComponentParams, v_p_i, v_p_j) -> float:
    """Probability in (0, 1) that two phonetic vectors share a speaker."""
    d = params.arrays["w1"].shape[0] // 2
    v_i = _check_vector(v_p_i, d, "discriminate v_p_i")
    v_j = _check_vector(v_p_j, d, "discriminate v_p_j")
    logit = discriminator_forward(
        params.tensors(), v_i.reshape(1, -1), v_j.reshape(1, -1)
    )
    return float(ad.sigmoid(logit).data[0])


def transform_refine(params: ComponentParams, v_p) -> np.ndarray:
    """Map a phonetic vector to its refined vector z."""
    d = params.arrays["w1"].shape[0]
    v = _check_vector(v_p, d, "transform_refine v_p")
    return refine_forward(params.tensors(), v.reshape(1, -1)).data[0]


# -- optimizer -------------------------------------------------------------


@dataclass(frozen=True)
class OptimState:
    """Adaptive-moment (or plain gradient) optimizer state for one component."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    mode: str = "adam"  # "adam" | "sgd"
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def init_optim(params: ComponentParams, learning_rate: float = 1e-3,
               mode: str = "adam") -> OptimState:
    if mode not in ("adam", "sgd"):
        raise DataError(f"unknown optimizer mode {mode!r}")
    zeros = {k: np.zeros_like(a) for k, a in params.arrays.items()}
    return OptimState(
        learning_rate=learning_rate,
        mode=mode,
        m=zeros,
        v={k: z.copy() for k, z in zeros.items()},
    )


def grad_step(params: ComponentParams, grads: dict, state: OptimState):
    """One optimizer update -> (new ComponentParams, new OptimState)."""
    for key, arr in params.arrays.items():
        g = grads.get(key)
        if g is None:
            raise DataError(f"missing gradient for {params.name}.{key}")
        if np.asarray(g).shape != arr.shape:
            raise DimensionError(
                f"gradient shape {np.asarray(g).shape} != parameter shape "
                f"{arr.shape} for {params.name}.{key}"
            )
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for {params.name}.{key}")
    step = state.step + 1
    new_arrays, new_m, new_v = {}, {}, {}
    for key, arr in params.arrays.items():
        g = np.asarray(grads[key], dtype=np.float64)
        if state.mode == "sgd":
            new_arrays[key] = arr - state.learning_rate * g
            new_m[key] = state.m[key]
            new_v[key] = state.v[key]
        else:
            m = state.beta1 * state.m[key] + (1.0 - state.beta1) * g
            v = state.beta2 * state.v[key] + (1.0 - state.beta2) * g * g
            m_hat = m / (1.0 - state.beta1**step)
            v_hat = v / (1.0 - state.beta2**step)
            new_arrays[key] = arr - state.learning_rate * m_hat / (
                np.sqrt(v_hat) + state.eps
            )
            new_m[key] = m
            new_v[key] = v
    return (
        ComponentParams(params.name, new_arrays),
        replace(state, step=step, m=new_m, v=new_v),
    )


# -- checkpoints -----------------------------------------------------------


def save_checkpoint(path, components: dict, meta: dict | None = None) -> None:
    """Single JSON document: component name -> named arrays with shapes.

    Round-trips bit-exactly: floats are serialized in their shortest
    round-tripping decimal form.
    """
    doc = {"meta": meta or {}, "components": {}}
    for name, params in components.items():
        doc["components"][name] = {
            key: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for key, arr in params.arrays.items()
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_checkpoint(path):
    """Inverse of save_checkpoint -> (components dict, meta dict)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    components = {}
    for name, arrays in doc["components"].items():
        parsed = {}
        for key, entry in arrays.items():
            arr = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
            parsed[key] = arr
        components[name] = ComponentParams(name, parsed)
    return components, doc.get("meta", {})


# -- gradient verification ---------------------------------------------


def _probe_setup(component: str, seed: int, dims: ModelDims):
    """Build params, a forward closure, and a scalar probe loss."""
    rng = np.random.default_rng(np.random.default_rng(seed).integers(2**63))
    lengths = [3, 2]
    if component in ("E_p", "E_s"):
        params = init_encoder(dims, seed)
        frames = rng.normal(size=(sum(lengths), dims.feature_dim))
        target = rng.normal(size=(len(lengths), dims.embed_dim))

        def forward(pt):
            return encoder_forward(pt, frames, lengths, mode=dims.encoder_mode)

    elif component == "Dec":
        params = init_decoder(dims, seed)
        v_p = rng.normal(size=(len(lengths), dims.embed_dim))
        v_s = rng.normal(size=(len(lengths), dims.embed_dim))
        target = rng.normal(size=(sum(lengths), dims.feature_dim))

        def forward(pt):
            return decoder_forward(pt, v_p, v_s, lengths)

    elif component == "D_s":
        params = init_discriminator(dims, seed)
        v_a = rng.normal(size=(3, dims.embed_dim))
        v_b = rng.normal(size=(3, dims.embed_dim))
        target = rng.normal(size=3)

        def forward(pt):
            return ad.sigmoid(discriminator_forward(pt, v_a, v_b))

    elif component == "refine":
        params = init_refine(dims, seed, identity=False)
        v = rng.normal(size=(3, dims.embed_dim))
        target = rng.normal(size=(3, dims.embed_dim))

        def forward(pt):
            return refine_forward(pt, v)

    else:
        raise DataError(f"unknown component {component!r}")

    def loss(pt):
        return ad.tmean(ad.square(forward(pt) - ad.constant(target)))

    return params, loss


def gradient_check(
    component: str,
    seed: int,
    dims: ModelDims | None = None,
    fd_step: float = 1e-5,
) -> float:
    """Compare analytic gradients of a probe loss against central finite
    differences over every parameter entry; return the max relative error.
    """
    if dims is None:
        dims = ModelDims(
            feature_dim=4, embed_dim=6, enc_hidden=5, dec_hidden=5,
            disc_hidden=5, refine_hidden=5,
        )
    params, loss_fn = _probe_setup(component, seed, dims)

    tensors = params.tensors(requires_grad=True)
    loss_fn(tensors).backward()
    analytic = {k: t.grad for k, t in tensors.items()}

    def eval_loss(arrays):
        return loss_fn({k: Tensor(a) for k, a in arrays.items()}).item()

    worst = 0.0
    arrays = {k: a.copy() for k, a in params.arrays.items()}
    for key, arr in arrays.items():
        flat = arr.ravel()
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + fd_step
            up = eval_loss(arrays)
            flat[idx] = original - fd_step
            down = eval_loss(arrays)
            flat[idx] = original
            numeric = (up - down) / (2.0 * fd_step)
            a = analytic[key].ravel()[idx]
            err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
