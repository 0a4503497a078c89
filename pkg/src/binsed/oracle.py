"""Slow, obviously-correct reference implementations used as ground truth.

Nothing here shares convolution or transform code with the fast kernels; the
geometry arithmetic is deliberately re-derived so that an agreement between
the two paths actually means something.  These exist to be trusted, not fast.
"""

from __future__ import annotations

import numpy as np

from .tensors import FixedTensor, unpack_weights


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _pad_begin(size: int, kernel: int, stride: int) -> int:
    out = _ceil_div(size, stride)
    total = max((out - 1) * stride + kernel - size, 0)
    return total // 2


def naive_binary_conv(inp: np.ndarray, wts: np.ndarray, stride: int = 1) -> np.ndarray:
    """Textbook triple-loop +-1 convolution ("same" geometry, border taps excluded).

    inp: [H][W][C] of -1/+1, wts: [out][ky][kx][C] of -1/+1.  Returns the raw
    integer accumulator tensor [H'][W'][out].
    """
    inp = np.asarray(inp, dtype=np.int64)
    wts = np.asarray(wts, dtype=np.int64)
    h, w, c = inp.shape
    n_out, ky, kx, c2 = wts.shape
    if c != c2:
        raise ValueError(f"channel mismatch: input {c}, weights {c2}")
    out_h = _ceil_div(h, stride)
    out_w = _ceil_div(w, stride)
    pad_t = _pad_begin(h, ky, stride)
    pad_l = _pad_begin(w, kx, stride)

    out = np.zeros((out_h, out_w, n_out), dtype=np.int32)
    for oy in range(out_h):
        for ox in range(out_w):
            ys = oy * stride - pad_t
            xs = ox * stride - pad_l
            y0, y1 = max(0, -ys), min(ky, h - ys)
            x0, x1 = max(0, -xs), min(kx, w - xs)
            patch = inp[ys + y0:ys + y1, xs + x0:xs + x1, :].ravel()
            for k in range(n_out):
                out[oy, ox, k] = int(wts[k, y0:y1, x0:x1, :].ravel() @ patch)
    return out


def naive_binary_conv_scalar(inp, wts, stride: int = 1) -> np.ndarray:
    """Fully scalar re-derivation of naive_binary_conv, for tiny cross-checks."""
    inp = np.asarray(inp)
    wts = np.asarray(wts)
    h, w, c = inp.shape
    n_out, ky, kx, _ = wts.shape
    out_h = _ceil_div(h, stride)
    out_w = _ceil_div(w, stride)
    pad_t = _pad_begin(h, ky, stride)
    pad_l = _pad_begin(w, kx, stride)
    out = np.zeros((out_h, out_w, n_out), dtype=np.int32)
    for oy in range(out_h):
        for ox in range(out_w):
            for k in range(n_out):
                acc = 0
                for dy in range(ky):
                    iy = oy * stride + dy - pad_t
                    if iy < 0 or iy >= h:
                        continue
                    for dx in range(kx):
                        ix = ox * stride + dx - pad_l
                        if ix < 0 or ix >= w:
                            continue
                        for n in range(c):
                            acc += int(inp[iy, ix, n]) * int(wts[k, dy, dx, n])
                out[oy, ox, k] = acc
    return out


def naive_fixed_conv(inp: np.ndarray, wts: np.ndarray, bias: np.ndarray,
                     output_shift: int, stride: int = 1) -> np.ndarray:
    """Loop-based integer conv with zero "same" padding and rounding shift."""
    inp = np.asarray(inp, dtype=np.int64)
    wts = np.asarray(wts, dtype=np.int64)
    h, w, c = inp.shape
    n_out, ky, kx, _ = wts.shape
    out_h = _ceil_div(h, stride)
    out_w = _ceil_div(w, stride)
    pad_t = _pad_begin(h, ky, stride)
    pad_l = _pad_begin(w, kx, stride)
    out = np.zeros((out_h, out_w, n_out), dtype=np.int64)
    half = (1 << (output_shift - 1)) if output_shift > 0 else 0
    for oy in range(out_h):
        for ox in range(out_w):
            ys = oy * stride - pad_t
            xs = ox * stride - pad_l
            y0, y1 = max(0, -ys), min(ky, h - ys)
            x0, x1 = max(0, -xs), min(kx, w - xs)
            patch = inp[ys + y0:ys + y1, xs + x0:xs + x1, :].ravel()
            for k in range(n_out):
                acc = int(wts[k, y0:y1, x0:x1, :].ravel() @ patch) + int(bias[k])
                out[oy, ox, k] = (acc + half) >> output_shift if output_shift else acc
    return out


def _fold_bits(values: np.ndarray, polarity: np.ndarray, threshold: np.ndarray) -> np.ndarray:
    v = values.astype(np.int64)
    return v * polarity.astype(np.int64) >= threshold.astype(np.int64)


def reference_network_run(net, x: FixedTensor):
    """Run a whole network through the naive kernels: unpacked +-1 convs and
    plain integer threshold comparisons.  Returns (score sums, divisor).
    """
    dense_bits = None  # +-1 activations between binary layers
    for layer in net.layers:
        if layer.kind == "fixed_conv":
            acc = naive_fixed_conv(x.values, layer.fixed.weights, layer.fixed.bias,
                                   layer.fixed.output_shift, layer.stride)
            bits = _fold_bits(acc, layer.fold.polarity, layer.fold.threshold)
            dense_bits = bits.astype(np.int8) * 2 - 1
        elif layer.kind == "binary_conv":
            acc = naive_binary_conv(dense_bits, unpack_weights(layer.weights), layer.stride)
            bits = _fold_bits(acc, layer.fold.polarity, layer.fold.threshold)
            dense_bits = bits.astype(np.int8) * 2 - 1
        elif layer.kind == "final_conv":
            acc = naive_fixed_conv(dense_bits.astype(np.int64), layer.fixed.weights,
                                   layer.fixed.bias, layer.fixed.output_shift, layer.stride)
            sums = acc.astype(np.int64).sum(axis=(0, 1))
            return sums, acc.shape[0] * acc.shape[1]
        else:
            raise ValueError(f"unknown layer kind {layer.kind!r}")
    raise ValueError("network has no final layer")


# ---------------------------------------------------------------------------
# float reference network
# ---------------------------------------------------------------------------


def _float_conv(inp, wts, stride, exclude_border):
    """Float "same" conv; padding either contributes zeros or is excluded."""
    h, w, c = inp.shape
    n_out, ky, kx, _ = wts.shape
    out_h = _ceil_div(h, stride)
    out_w = _ceil_div(w, stride)
    pad_t = _pad_begin(h, ky, stride)
    pad_l = _pad_begin(w, kx, stride)
    out = np.zeros((out_h, out_w, n_out))
    pad = np.zeros((h + ky, w + kx, c))
    pad[pad_t:pad_t + h, pad_l:pad_l + w] = inp
    for dy in range(ky):
        for dx in range(kx):
            win = pad[dy:dy + (out_h - 1) * stride + 1:stride,
                      dx:dx + (out_w - 1) * stride + 1:stride]
            term = np.tensordot(win, wts[:, dy, dx, :], axes=([2], [1]))
            if exclude_border:
                oy = np.arange(out_h) * stride + dy - pad_t
                ox = np.arange(out_w) * stride + dx - pad_l
                term[(oy < 0) | (oy >= h), :, :] = 0.0
                term[:, (ox < 0) | (ox >= w), :] = 0.0
            out += term
    return out


def _float_sign(x):
    # sign with sign(0) = +1, the convention used everywhere in this package
    return np.where(x >= 0.0, 1.0, -1.0)


def float_reference_inference(float_model, mel: np.ndarray) -> np.ndarray:
    """Float-arithmetic network: float convs, float batch norm, sign, mean pool.

    ``mel`` is the real-valued [64][400] (or [64][400][1]) log-Mel patch.
    Used for quantization-drift studies, not bit-exactness.
    """
    x = np.asarray(mel, dtype=np.float64)
    if x.ndim == 2:
        x = x[:, :, None]
    for layer in float_model.layers:
        if layer.kind in ("fixed_conv", "binary_conv"):
            wts = layer.weights if layer.kind == "fixed_conv" else _float_sign(layer.weights)
            acc = _float_conv(x, wts, layer.stride, exclude_border=layer.kind == "binary_conv")
            if layer.bias is not None:
                acc = acc + layer.bias
            bn = layer.gamma * (acc - layer.mu) / layer.sigma + layer.beta
            x = _float_sign(bn)
        elif layer.kind == "final_conv":
            acc = _float_conv(x, layer.weights, layer.stride, exclude_border=False)
            if layer.bias is not None:
                acc = acc + layer.bias
            return acc.mean(axis=(0, 1))
        else:
            raise ValueError(f"unknown layer kind {layer.kind!r}")
    raise ValueError("model has no final layer")


# ---------------------------------------------------------------------------
# direct DFT
# ---------------------------------------------------------------------------


def direct_dft(frame: np.ndarray) -> np.ndarray:
    """O(N^2) definition-based one-sided DFT: 512 samples -> 257 complex bins."""
    frame = np.asarray(frame, dtype=np.float64)
    n = frame.shape[-1]
    bins = n // 2 + 1
    k = np.arange(bins)[:, None]
    t = np.arange(n)[None, :]
    basis = np.exp(-2j * np.pi * k * t / n)
    return frame @ basis.T
