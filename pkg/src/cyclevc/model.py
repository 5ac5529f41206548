"""Cycle voice-conversion model core.

Two framewise converters share one parameter store: `f` maps normalized
source features to normalized target mel-cepstra (source-to-target) and `g`
maps normalized target features back toward the source domain
(target-to-source). Each converter is a stack of causal 1-D convolutions,
a GRU whose input is the conv features concatenated with the converter's
own previous output frame (autoregressive feedback; zeros at the first
frame), and causal output convolutions with a linear last layer.

The joint training objective is

    total = mean|f(X) - Y_mcep|  +  rho * mean|f(splice(g(Y), Y)) - Y_mcep|

where the second term runs target features through g, re-attaches the
target prosody dims (re-normalized into source scaling), and converts back
with f: the self-conversion cycle. Gradients are computed analytically in
closed form (no autodiff dependency) with backpropagation through time,
including the feedback path from each frame's output into the next frame's
GRU input.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FormatError, InputError, PairingError, ShapeError
from .features import MCEP_DIM, N_DIMS, NormStats

RHO_DEFAULT = 1e-8

CHECKPOINT_FORMAT = "cyclevc-checkpoint-v1"

_NETS = ("f", "g")


@dataclass(frozen=True)
class ModelArch:
    """Layer sizes shared by both converters."""

    in_dim: int = N_DIMS
    out_dim: int = MCEP_DIM
    in_conv_layers: int = 2
    conv_channels: int = 128
    kernel: int = 3
    gru_hidden: int = 256
    out_conv_layers: int = 2

    def __post_init__(self):
        for name in (
            "in_dim",
            "out_dim",
            "in_conv_layers",
            "conv_channels",
            "kernel",
            "gru_hidden",
            "out_conv_layers",
        ):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")


def param_shapes(arch):
    """Parameter name -> shape, in the canonical declaration order."""
    shapes = {}
    for net in _NETS:
        cin = arch.in_dim
        for layer in range(arch.in_conv_layers):
            shapes[f"{net}.in{layer}.W"] = (arch.conv_channels, arch.kernel * cin)
            shapes[f"{net}.in{layer}.b"] = (arch.conv_channels,)
            cin = arch.conv_channels
        gin = arch.conv_channels + arch.out_dim
        shapes[f"{net}.gru.Wg"] = (3 * arch.gru_hidden, gin)
        shapes[f"{net}.gru.bW"] = (3 * arch.gru_hidden,)
        shapes[f"{net}.gru.Ug"] = (3 * arch.gru_hidden, arch.gru_hidden)
        shapes[f"{net}.gru.bU"] = (3 * arch.gru_hidden,)
        cin = arch.gru_hidden
        for layer in range(arch.out_conv_layers):
            cout = arch.out_dim if layer == arch.out_conv_layers - 1 else arch.conv_channels
            shapes[f"{net}.out{layer}.W"] = (cout, arch.kernel * cin)
            shapes[f"{net}.out{layer}.b"] = (cout,)
            cin = cout
    return shapes


def param_order(arch):
    """Canonical parameter ordering used by the checkpoint blob."""
    return list(param_shapes(arch))


@dataclass
class CycleVCModel:
    arch: ModelArch
    params: dict
    norm_src: NormStats
    norm_tgt: NormStats
    dtype: np.dtype = np.float32

    @classmethod
    def init(cls, arch, norm_src, norm_tgt, seed, dtype=np.float32):
        """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) init, seeded."""
        rng = np.random.Generator(np.random.PCG64(seed))
        shapes = param_shapes(arch)
        params = {}
        for name, shape in shapes.items():
            if name.endswith(".b"):
                fan_in = shapes[name[:-2] + ".W"][-1]
            elif name.endswith(".bW"):
                fan_in = shapes[name[:-2] + "Wg"][-1]
            elif name.endswith(".bU"):
                fan_in = shapes[name[:-2] + "Ug"][-1]
            else:
                fan_in = shape[-1]
            bound = 1.0 / np.sqrt(fan_in)
            params[name] = rng.uniform(-bound, bound, size=shape).astype(dtype)
        return cls(arch=arch, params=params, norm_src=norm_src, norm_tgt=norm_tgt, dtype=dtype)

    @property
    def n_parameters(self):
        return sum(p.size for p in self.params.values())

    def zero_like_params(self):
        return {k: np.zeros_like(v) for k, v in self.params.items()}


def _validate_seq(x, dim, what):
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[1] != dim:
        raise ShapeError(f"{what} must be (n_frames, {dim}), got {x.shape}")
    if x.shape[0] < 1:
        raise ShapeError(f"{what} must have at least one frame")
    if not np.all(np.isfinite(x)):
        raise InputError(f"{what} contains non-finite values")
    return x


def _unfold_rows(pad, n, k):
    """Causal windows: row t = [x_(t-k+1) ... x_t] flattened, oldest first."""
    if k == 1:
        return pad[:n]
    return np.concatenate([pad[i : i + n] for i in range(k)], axis=1)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _net_forward(model, net, x, want_cache=False, teacher=None):
    """Run one converter over a normalized sequence.

    `teacher`, when given, replaces the autoregressive feedback with the
    provided target frames (teacher forcing); frame t consumes teacher[t-1].
    """
    arch = model.arch
    params = model.params
    dtype = model.dtype
    k = arch.kernel
    h_dim = arch.gru_hidden
    out_dim = arch.out_dim
    n = x.shape[0]

    a = np.ascontiguousarray(x, dtype=dtype)
    in_cache = []
    for layer in range(arch.in_conv_layers):
        w = params[f"{net}.in{layer}.W"]
        b = params[f"{net}.in{layer}.b"]
        pad = np.concatenate([np.zeros((k - 1, a.shape[1]), dtype=dtype), a])
        u = _unfold_rows(pad, n, k)
        z = u @ w.T + b
        if want_cache:
            in_cache.append((u, z))
        a = np.maximum(z, 0.0)

    wg = params[f"{net}.gru.Wg"]
    ug = params[f"{net}.gru.Ug"]
    wg_x = wg[:, : arch.conv_channels]
    wg_y = wg[:, arch.conv_channels :]
    gi_x = a @ wg_x.T + params[f"{net}.gru.bW"]
    bu = params[f"{net}.gru.bU"]

    out_w = [params[f"{net}.out{layer}.W"] for layer in range(arch.out_conv_layers)]
    out_b = [params[f"{net}.out{layer}.b"] for layer in range(arch.out_conv_layers)]
    out_dims = [wm.shape[0] for wm in out_w]

    h_pad = np.zeros((n + k - 1, h_dim), dtype=dtype)
    h_prev_rows = np.zeros((n, h_dim), dtype=dtype)
    ar_rows = np.zeros((n, out_dim), dtype=dtype)
    gates_z = np.zeros((n, h_dim), dtype=dtype)
    gates_r = np.zeros((n, h_dim), dtype=dtype)
    gates_n = np.zeros((n, h_dim), dtype=dtype)
    gh_n_rows = np.zeros((n, h_dim), dtype=dtype)
    out_pre = [np.zeros((n, d), dtype=dtype) for d in out_dims]
    out_pads = [np.zeros((n + k - 1, d), dtype=dtype) for d in out_dims]

    h_prev = np.zeros(h_dim, dtype=dtype)
    y_prev = np.zeros(out_dim, dtype=dtype)
    last = arch.out_conv_layers - 1
    for t in range(n):
        if t > 0:
            ar = teacher[t - 1] if teacher is not None else y_prev
        else:
            ar = np.zeros(out_dim, dtype=dtype)
        ar_rows[t] = ar
        h_prev_rows[t] = h_prev
        gi = gi_x[t] + wg_y @ ar
        gh = ug @ h_prev + bu
        z = _sigmoid(gi[:h_dim] + gh[:h_dim])
        r = _sigmoid(gi[h_dim : 2 * h_dim] + gh[h_dim : 2 * h_dim])
        nc = np.tanh(gi[2 * h_dim :] + r * gh[2 * h_dim :])
        h = (1.0 - z) * nc + z * h_prev
        gates_z[t], gates_r[t], gates_n[t] = z, r, nc
        gh_n_rows[t] = gh[2 * h_dim :]
        h_pad[t + k - 1] = h

        cur_pad = h_pad
        for layer in range(arch.out_conv_layers):
            window = cur_pad[t : t + k].reshape(-1)
            pre = out_w[layer] @ window + out_b[layer]
            out_pre[layer][t] = pre
            val = pre if layer == last else np.maximum(pre, 0.0)
            out_pads[layer][t + k - 1] = val
            cur_pad = out_pads[layer]
        y_prev = out_pads[last][t + k - 1]
        h_prev = h

    y = out_pads[last][k - 1 :].copy() if k > 1 else out_pads[last].copy()
    if not want_cache:
        return y, None
    cache = {
        "x": np.ascontiguousarray(x, dtype=dtype),
        "in": in_cache,
        "a_top": a,
        "ar": ar_rows,
        "h_prev": h_prev_rows,
        "h_pad": h_pad,
        "z": gates_z,
        "r": gates_r,
        "nc": gates_n,
        "gh_n": gh_n_rows,
        "out_pre": out_pre,
        "out_pads": out_pads,
        "teacher": teacher is not None,
    }
    return y, cache


def _net_backward(model, net, cache, d_y):
    """Gradients of a scalar loss through one converter.

    `d_y` is the loss gradient w.r.t. the converter output; the returned
    pair is (parameter gradients for this net, gradient w.r.t. the input
    sequence). Autoregressive feedback is handled by adding each frame's
    GRU-input gradient onto the previous frame's output gradient, skipped
    under teacher forcing where the feedback came from constants.
    """
    arch = model.arch
    params = model.params
    dtype = model.dtype
    k = arch.kernel
    h_dim = arch.gru_hidden
    n = d_y.shape[0]
    last = arch.out_conv_layers - 1

    wg = params[f"{net}.gru.Wg"]
    ug = params[f"{net}.gru.Ug"]
    wg_x = wg[:, : arch.conv_channels]
    wg_y = wg[:, arch.conv_channels :]
    out_w = [params[f"{net}.out{layer}.W"] for layer in range(arch.out_conv_layers)]

    d_y = np.array(d_y, dtype=dtype)
    out_pads = cache["out_pads"]
    out_pre = cache["out_pre"]
    h_pad = cache["h_pad"]
    d_out_pads = [np.zeros_like(p) for p in out_pads]
    d_h_pad = np.zeros_like(h_pad)
    d_pre = [np.zeros_like(p) for p in out_pre]
    d_gi = np.zeros((n, 3 * h_dim), dtype=dtype)
    d_gh = np.zeros((n, 3 * h_dim), dtype=dtype)

    z, r, nc = cache["z"], cache["r"], cache["nc"]
    gh_n = cache["gh_n"]
    h_prev_rows = cache["h_prev"]
    free_running = not cache["teacher"]

    for t in range(n - 1, -1, -1):
        d_out_pads[last][t + k - 1] += d_y[t]
        for layer in range(last, -1, -1):
            d_val = d_out_pads[layer][t + k - 1]
            if layer == last:
                dp = d_val
            else:
                dp = d_val * (out_pre[layer][t] > 0)
            d_pre[layer][t] = dp
            d_window = (out_w[layer].T @ dp).reshape(k, -1)
            if layer == 0:
                d_h_pad[t : t + k] += d_window
            else:
                d_out_pads[layer - 1][t : t + k] += d_window

        dh = d_h_pad[t + k - 1]
        zt, rt, nt = z[t], r[t], nc[t]
        dz = dh * (h_prev_rows[t] - nt)
        dnc = dh * (1.0 - zt)
        dan = dnc * (1.0 - nt * nt)
        dr = dan * gh_n[t]
        daz = dz * zt * (1.0 - zt)
        dar = dr * rt * (1.0 - rt)
        d_gi[t, :h_dim] = daz
        d_gi[t, h_dim : 2 * h_dim] = dar
        d_gi[t, 2 * h_dim :] = dan
        d_gh[t, :h_dim] = daz
        d_gh[t, h_dim : 2 * h_dim] = dar
        d_gh[t, 2 * h_dim :] = dan * rt
        if t > 0:
            d_h_pad[t + k - 2] += dh * zt + ug.T @ d_gh[t]
            if free_running:
                d_y[t - 1] += wg_y.T @ d_gi[t]

    grads = {}
    cur_pad = h_pad
    for layer in range(arch.out_conv_layers):
        u = _unfold_rows(cur_pad, n, k)
        grads[f"{net}.out{layer}.W"] = d_pre[layer].T @ u
        grads[f"{net}.out{layer}.b"] = d_pre[layer].sum(axis=0)
        cur_pad = out_pads[layer]

    u_gru = np.concatenate([cache["a_top"], cache["ar"]], axis=1)
    grads[f"{net}.gru.Wg"] = d_gi.T @ u_gru
    grads[f"{net}.gru.bW"] = d_gi.sum(axis=0)
    grads[f"{net}.gru.Ug"] = d_gh.T @ h_prev_rows
    grads[f"{net}.gru.bU"] = d_gh.sum(axis=0)

    d_a = d_gi @ wg_x
    for layer in range(arch.in_conv_layers - 1, -1, -1):
        u, zpre = cache["in"][layer]
        d_z = d_a * (zpre > 0)
        grads[f"{net}.in{layer}.W"] = d_z.T @ u
        grads[f"{net}.in{layer}.b"] = d_z.sum(axis=0)
        w = params[f"{net}.in{layer}.W"]
        d_u = d_z @ w
        cin = w.shape[1] // k
        d_pad = np.zeros((n + k - 1, cin), dtype=dtype)
        for i in range(k):
            d_pad[i : i + n] += d_u[:, i * cin : (i + 1) * cin]
        d_a = d_pad[k - 1 :]

    return grads, d_a


def stot_forward(model, x_norm):
    """Source-to-target conversion on a normalized source sequence."""
    x = _validate_seq(x_norm, model.arch.in_dim, "source sequence")
    y, _ = _net_forward(model, "f", x)
    return y


def ttos_forward(model, y_norm):
    """Target-to-source conversion on a normalized target sequence."""
    y = _validate_seq(y_norm, model.arch.in_dim, "target sequence")
    out, _ = _net_forward(model, "g", y)
    return out


def splice_prosody(mcep_norm, y_norm, norm_src, norm_tgt):
    """Attach the prosody dims of a target-normalized sequence to converted
    mel-cepstra, re-expressing them in source normalization so the spliced
    frames are a valid source-domain input."""
    prosody = y_norm[:, MCEP_DIM:].astype(np.float64)
    raw = prosody * norm_tgt.std[MCEP_DIM:] + norm_tgt.mean[MCEP_DIM:]
    as_src = (raw - norm_src.mean[MCEP_DIM:]) / norm_src.std[MCEP_DIM:]
    return np.concatenate([mcep_norm, as_src.astype(mcep_norm.dtype)], axis=1)


def cycle_path(model, y_norm):
    """Self-conversion f(splice(g(Y), Y)) of a normalized target sequence."""
    y = _validate_seq(y_norm, model.arch.in_dim, "target sequence")
    back = ttos_forward(model, y)
    spliced = splice_prosody(back, y, model.norm_src, model.norm_tgt)
    out, _ = _net_forward(model, "f", spliced)
    return out


@dataclass(frozen=True)
class LossBreakdown:
    """Joint objective terms; `total` is always stot_l1 + rho * cycle_l1."""

    stot_l1: float
    cycle_l1: float
    rho: float
    total: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", self.stot_l1 + self.rho * self.cycle_l1)


def _check_pair(model, x_norm, y_norm):
    x = _validate_seq(x_norm, model.arch.in_dim, "source sequence")
    y = _validate_seq(y_norm, model.arch.in_dim, "target sequence")
    if x.shape[0] != y.shape[0]:
        raise PairingError(
            f"paired sequences must have equal frame counts, got {x.shape[0]} vs {y.shape[0]}"
        )
    return x, y


def cycle_loss(model, x_norm, y_norm, rho=RHO_DEFAULT):
    """Joint objective on one normalized pair (no gradients)."""
    x, y = _check_pair(model, x_norm, y_norm)
    y_mc = np.asarray(y, dtype=model.dtype)[:, :MCEP_DIM]
    f_x, _ = _net_forward(model, "f", x)
    y_cycle = cycle_path(model, y)
    stot = float(np.mean(np.abs(f_x.astype(np.float64) - y_mc.astype(np.float64))))
    cyc = float(np.mean(np.abs(y_cycle.astype(np.float64) - y_mc.astype(np.float64))))
    return LossBreakdown(stot_l1=stot, cycle_l1=cyc, rho=rho)


def loss_gradients(model, x_norm, y_norm, rho=RHO_DEFAULT, teacher_forcing=False):
    """Joint objective and analytic parameter gradients for one pair."""
    x, y = _check_pair(model, x_norm, y_norm)
    if rho < 0:
        raise ConfigError("rho must be non-negative")
    n = x.shape[0]
    y = np.ascontiguousarray(y, dtype=model.dtype)
    y_mc = y[:, :MCEP_DIM]

    teacher = y_mc if teacher_forcing else None
    f_x, cache_f1 = _net_forward(model, "f", x, want_cache=True, teacher=teacher)
    g_y, cache_g = _net_forward(model, "g", y, want_cache=True)
    spliced = splice_prosody(g_y, y, model.norm_src, model.norm_tgt)
    y_cycle, cache_f2 = _net_forward(model, "f", spliced, want_cache=True)

    r1 = f_x.astype(np.float64) - y_mc.astype(np.float64)
    r2 = y_cycle.astype(np.float64) - y_mc.astype(np.float64)
    breakdown = LossBreakdown(
        stot_l1=float(np.mean(np.abs(r1))),
        cycle_l1=float(np.mean(np.abs(r2))),
        rho=rho,
    )

    scale = 1.0 / (n * MCEP_DIM)
    d1 = (np.sign(r1) * scale).astype(model.dtype)
    grads, _ = _net_backward(model, "f", cache_f1, d1)
    if rho > 0.0:
        d2 = (np.sign(r2) * (rho * scale)).astype(model.dtype)
        g_f2, d_spliced = _net_backward(model, "f", cache_f2, d2)
        for name, g in g_f2.items():
            grads[name] += g
        # prosody dims of the spliced input are constants w.r.t. parameters
        g_g, _ = _net_backward(model, "g", cache_g, d_spliced[:, :MCEP_DIM])
        grads.update(g_g)
    else:
        for name, p in model.params.items():
            if name.startswith("g."):
                grads[name] = np.zeros_like(p)
    return breakdown, grads


# ----- checkpoint I/O -------------------------------------------------------

_ARCH_FIELDS = (
    "in_dim",
    "out_dim",
    "in_conv_layers",
    "conv_channels",
    "kernel",
    "gru_hidden",
    "out_conv_layers",
)


def _format_vector(vec):
    return " ".join(repr(float(v)) for v in vec)


def _parse_vector(text, what):
    try:
        vec = np.array([float(tok) for tok in text.split()], dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"checkpoint header: bad float in {what}") from exc
    if vec.size != N_DIMS:
        raise FormatError(f"checkpoint header: {what} has {vec.size} values, expected {N_DIMS}")
    return vec


def save_checkpoint(model, path):
    """Write arch + normalization header and the float32 parameter blob."""
    lines = [f"format={CHECKPOINT_FORMAT}"]
    for name in _ARCH_FIELDS:
        lines.append(f"{name}={getattr(model.arch, name)}")
    lines.append(f"src_mean={_format_vector(model.norm_src.mean)}")
    lines.append(f"src_std={_format_vector(model.norm_src.std)}")
    lines.append(f"tgt_mean={_format_vector(model.norm_tgt.mean)}")
    lines.append(f"tgt_std={_format_vector(model.norm_tgt.std)}")
    lines.append(f"param_count={model.n_parameters}")
    header = "\n".join(lines) + "\n\n"
    blob = np.concatenate(
        [model.params[name].ravel() for name in param_order(model.arch)]
    ).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8"))
        fh.write(blob.tobytes())


def load_checkpoint(path):
    """Read a checkpoint back into a float32 CycleVCModel."""
    with open(path, "rb") as fh:
        raw = fh.read()
    sep = raw.find(b"\n\n")
    if sep < 0:
        raise FormatError("checkpoint has no header/blob separator")
    try:
        header = raw[:sep].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError("checkpoint header is not valid UTF-8") from exc
    fields = {}
    for lineno, line in enumerate(header.splitlines(), 1):
        if "=" not in line:
            raise FormatError(f"checkpoint header line {lineno} is not key=value: {line!r}")
        key, _, value = line.partition("=")
        fields[key] = value
    if fields.get("format") != CHECKPOINT_FORMAT:
        raise FormatError(f"unsupported checkpoint format {fields.get('format')!r}")
    missing = [k for k in (*_ARCH_FIELDS, "src_mean", "src_std", "tgt_mean", "tgt_std") if k not in fields]
    if missing:
        raise FormatError(f"checkpoint header missing fields: {', '.join(missing)}")
    try:
        arch = ModelArch(**{k: int(fields[k]) for k in _ARCH_FIELDS})
    except ValueError as exc:
        raise FormatError(f"checkpoint header: bad architecture field ({exc})") from exc
    norm_src = NormStats(
        mean=_parse_vector(fields["src_mean"], "src_mean"),
        std=_parse_vector(fields["src_std"], "src_std"),
        domain_tag="source",
    )
    norm_tgt = NormStats(
        mean=_parse_vector(fields["tgt_mean"], "tgt_mean"),
        std=_parse_vector(fields["tgt_std"], "tgt_std"),
        domain_tag="target",
    )
    shapes = param_shapes(arch)
    expected = sum(int(np.prod(s)) for s in shapes.values())
    blob = raw[sep + 2 :]
    if len(blob) != 4 * expected:
        raise FormatError(
            f"parameter blob has {len(blob)} bytes, expected {4 * expected} "
            f"({expected} float32 values for the declared architecture)"
        )
    if "param_count" in fields and int(fields["param_count"]) != expected:
        raise FormatError(
            f"checkpoint declares {fields['param_count']} parameters, "
            f"architecture requires {expected}"
        )
    flat = np.frombuffer(blob, dtype="<f4")
    params = {}
    offset = 0
    for name, shape in shapes.items():
        size = int(np.prod(shape))
        params[name] = flat[offset : offset + size].reshape(shape).copy()
        offset += size
    return CycleVCModel(arch=arch, params=params, norm_src=norm_src, norm_tgt=norm_tgt)
