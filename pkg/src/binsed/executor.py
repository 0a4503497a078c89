"""Network descriptors and end-to-end execution: monolithic, and tiled along
the time axis with a derived halo so tiled output is bit-exact against the
monolithic run.  Also MAC accounting, memory footprint reporting, and the
per-layer benchmark harness.
"""

from __future__ import annotations

import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, field

import numpy as np

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # parallelism still correct, just potentially oversubscribed
    def threadpool_limits(*_args, **_kwargs):
        return nullcontext()

from . import oracle
from .errors import ShapeMismatchError
from .kernels import (
    BnFold,
    ColRegion,
    FixedConvParams,
    binarize_sign,
    conv2d_binary,
    conv2d_fixed,
    global_avg_pool,
    predict,
    resolve_popcount_name,
    same_pad,
    threshold_activation,
)
from .tensors import (
    BinaryTensor,
    FixedTensor,
    PackedBinaryWeights,
    unpack,
    unpack_weights,
    words_per_pixel,
)

FIXED_CONV = "fixed_conv"
BINARY_CONV = "binary_conv"
FINAL_CONV = "final_conv"

# Reference 7-layer topology: (kind, ky, kx, out_channels, stride).
REFERENCE_TABLE = (
    (FIXED_CONV, 3, 3, 32, 1),
    (BINARY_CONV, 3, 3, 64, 2),
    (BINARY_CONV, 3, 3, 128, 1),
    (BINARY_CONV, 3, 3, 128, 2),
    (BINARY_CONV, 3, 3, 128, 1),
    (BINARY_CONV, 1, 1, 128, 1),
    (FINAL_CONV, 1, 1, 28, 1),
)
REFERENCE_INPUT_SHAPE = (64, 400, 1)
REFERENCE_CLASSES = 28

# Per-layer MAC budget published for the reference firmware (millions), used
# only to report deltas next to this artifact's own counts.
PUBLISHED_MACS = (7e6, 109e6, 405e6, 186e6, 154e6, 17e6, 6e6)
PUBLISHED_TOTAL_MACS = 884e6


@dataclass(frozen=True)
class LayerSpec:
    """One layer: descriptor plus its quantized parameters."""

    kind: str
    kernel: tuple[int, int]
    in_channels: int
    out_channels: int
    stride: int
    fixed: FixedConvParams | None = None
    weights: PackedBinaryWeights | None = None
    fold: BnFold | None = None

    def __post_init__(self):
        if self.kind not in (FIXED_CONV, BINARY_CONV, FINAL_CONV):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.stride not in (1, 2):
            raise ValueError(f"stride must be 1 or 2, got {self.stride}")
        if self.kind == BINARY_CONV:
            if self.weights is None or self.fold is None:
                raise ValueError("binary layer needs packed weights and a fold")
            w = self.weights
            if (w.out_channels, w.in_channels, (w.ky, w.kx)) != \
                    (self.out_channels, self.in_channels, self.kernel):
                raise ValueError("packed weights do not match layer descriptor")
        else:
            if self.fixed is None:
                raise ValueError(f"{self.kind} layer needs fixed-point parameters")
            p = self.fixed
            if (p.out_channels, p.in_channels, p.kernel) != \
                    (self.out_channels, self.in_channels, self.kernel):
                raise ValueError("fixed-point weights do not match layer descriptor")
            if self.kind == FIXED_CONV and self.fold is None:
                raise ValueError("binarizing fixed layer needs a fold")
        if self.fold is not None and self.fold.channels != self.out_channels:
            raise ValueError("fold channel count does not match layer")

    @property
    def name(self) -> str:
        return {FIXED_CONV: "First Layer", BINARY_CONV: "Bin Layer",
                FINAL_CONV: "Last Layer"}[self.kind]

    def weight_bytes(self, mode: str = "binary") -> int:
        """Nominal weight storage: packed bits for binary layers, int16 otherwise.

        mode='fixed16' prices every layer at 2 bytes/weight (the non-binary
        variant of the same topology).
        """
        ky, kx = self.kernel
        n = self.out_channels * ky * kx * self.in_channels
        if self.kind == BINARY_CONV and mode == "binary":
            return self.out_channels * ky * kx * words_per_pixel(self.in_channels) * 4
        return n * 2

    def bookkeeping_bytes(self) -> int:
        """Thresholds (4 B/channel, polarity rides in the word) and biases."""
        total = 0
        if self.fold is not None:
            total += 4 * self.out_channels
        if self.fixed is not None:
            total += 4 * self.out_channels
        return total


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layers plus input contract."""

    layers: tuple[LayerSpec, ...]
    input_shape: tuple[int, int, int] = REFERENCE_INPUT_SHAPE
    input_qformat: int = 10
    classes: int = REFERENCE_CLASSES

    def __post_init__(self):
        if not self.layers:
            raise ValueError("network needs at least one layer")
        c = self.input_shape[2]
        for i, layer in enumerate(self.layers):
            if layer.in_channels != c:
                raise ValueError(
                    f"layer {i} expects {layer.in_channels} input channels, gets {c}")
            c = layer.out_channels
        if self.layers[-1].kind != FINAL_CONV:
            raise ValueError("last layer must be the final fixed-point conv")
        if c != self.classes:
            raise ValueError(f"final layer emits {c} channels, expected {self.classes} classes")

    def shape_chain(self) -> list[tuple[int, int, int]]:
        """[input shape, shape after layer 0, ...] under same padding."""
        h, w, c = self.input_shape
        chain = [(h, w, c)]
        for layer in self.layers:
            h = -(-h // layer.stride)
            w = -(-w // layer.stride)
            chain.append((h, w, layer.out_channels))
        return chain

    def layer_names(self) -> list[str]:
        names = []
        bin_index = 0
        for layer in self.layers:
            if layer.kind == BINARY_CONV:
                bin_index += 1
                names.append(f"{bin_index}. Bin Layer")
            else:
                names.append(layer.name)
        return names


def is_reference_topology(net: NetworkSpec) -> bool:
    if net.input_shape != REFERENCE_INPUT_SHAPE or len(net.layers) != len(REFERENCE_TABLE):
        return False
    for layer, (kind, ky, kx, out_c, stride) in zip(net.layers, REFERENCE_TABLE):
        if (layer.kind, layer.kernel, layer.out_channels, layer.stride) != \
                (kind, (ky, kx), out_c, stride):
            return False
    return True


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InferenceResult:
    """Division-free class scores: integer sums over the final feature map."""

    scores: np.ndarray  # int64 [classes]
    divisor: int
    prediction: int
    score_qformat: int

    def real_scores(self) -> np.ndarray:
        return self.scores * 2.0 ** (-self.score_qformat) / self.divisor


def _run_layer(layer: LayerSpec, x, region: ColRegion | None,
               threads: int, popcount: str | None):
    if layer.kind == FIXED_CONV:
        t = conv2d_fixed(x, layer.fixed, layer.stride, region)
        return binarize_sign(t, layer.fold)
    if layer.kind == BINARY_CONV:
        acc = conv2d_binary(x, layer.weights, layer.stride, region,
                            popcount=popcount, threads=threads)
        return threshold_activation(acc, layer.fold)
    # final layer: +-1 activations become fixed-point values at qformat 0
    dense = unpack(x).astype(np.int32)
    ft = FixedTensor(x.height, x.width, x.channels, dense, 0, 32)
    return conv2d_fixed(ft, layer.fixed, layer.stride, region)


def _check_input(x: FixedTensor, net: NetworkSpec) -> None:
    if x.shape != net.input_shape:
        raise ShapeMismatchError(
            f"input shape {x.shape} does not match network input {net.input_shape}")
    if x.qformat != net.input_qformat:
        raise ShapeMismatchError(
            f"input qformat {x.qformat} does not match network input qformat "
            f"{net.input_qformat}")


def _final_qformat(net: NetworkSpec) -> int:
    p = net.layers[-1].fixed
    return p.weights_qformat - p.output_shift  # final conv input is qformat 0


def _concat_width(pieces):
    first = pieces[0]
    if isinstance(first, BinaryTensor):
        words = np.concatenate([p.words for p in pieces], axis=1)
        return BinaryTensor(first.height, words.shape[1], first.channels, words)
    values = np.concatenate([p.values for p in pieces], axis=1)
    return FixedTensor(first.height, values.shape[1], first.channels, values,
                       first.qformat, first.bitwidth)


def _run_layer_parallel(layer: LayerSpec, x, full_width: int, workers: int,
                        popcount: str | None):
    """Column-chunked layer execution: each worker computes a disjoint slice of
    the monolithic output through the offset-aware kernels, so the
    concatenation is bit-identical to the single-threaded run."""
    out_w = same_pad(full_width, layer.kernel[1], layer.stride)[0]
    bounds = np.linspace(0, out_w, workers + 1).astype(int)
    regions = [ColRegion(full_width, 0, int(a), int(b))
               for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if len(regions) == 1:
        return _run_layer(layer, x, None, 1, popcount)
    with ThreadPoolExecutor(max_workers=len(regions)) as pool_exec:
        futures = [pool_exec.submit(_run_layer, layer, x, r, 1, popcount)
                   for r in regions]
        return _concat_width([f.result() for f in futures])


def run_layers(x: FixedTensor, net: NetworkSpec, threads: int = 1,
               popcount: str | None = None) -> list:
    """Forward pass returning every layer output (last one is the class map).

    threads > 1 splits every layer's output columns across a worker pool;
    results are bit-identical to the sequential run.
    """
    _check_input(x, net)
    workers = min(max(1, threads), os.cpu_count() or 1)
    outs = []
    cur = x
    with threadpool_limits(limits=1, user_api="blas"):
        for i, layer in enumerate(net.layers):
            if cur.channels != layer.in_channels:
                raise ShapeMismatchError(
                    f"layer {i} ({layer.name}) expects {layer.in_channels} channels, "
                    f"got {cur.channels}")
            if workers == 1:
                cur = _run_layer(layer, cur, None, 1, popcount)
            else:
                cur = _run_layer_parallel(layer, cur, cur.width, workers, popcount)
            outs.append(cur)
    return outs


def run_monolithic(x: FixedTensor, net: NetworkSpec, threads: int = 1,
                   popcount: str | None = None) -> InferenceResult:
    """Run the whole network on the full feature map."""
    final = run_layers(x, net, threads, popcount)[-1]
    pool = global_avg_pool(final.values)
    return InferenceResult(pool.sums, pool.count, predict(pool.sums),
                           _final_qformat(net))


# ---------------------------------------------------------------------------
# tiling
# ---------------------------------------------------------------------------


def receptive_field_halo(net: NetworkSpec) -> int:
    """Cumulative receptive-field extension along the time axis.

    Sum over conv layers of (k-1) * jump, where jump is the product of the
    strides of all earlier layers.  This equals the overlap two adjacent tile
    input ranges need for the tiled run to be bit-exact.
    """
    halo = 0
    jump = 1
    for layer in net.layers:
        halo += (layer.kernel[1] - 1) * jump
        jump *= layer.stride
    return halo


@dataclass(frozen=True)
class TilePlan:
    """Column tiling along the time axis; the mel axis is never split."""

    tile_count: int
    halo: int
    out_ranges: tuple[tuple[int, int], ...]  # final-feature-map columns per tile
    in_ranges: tuple[tuple[int, int], ...]  # input columns per tile (with halo)
    axis: str = "width"


def plan_tiles(net: NetworkSpec, tile_count: int, halo: int | None = None) -> TilePlan:
    """Balance output columns over tiles and extend each input range by halo/2.

    The default halo is derived from the receptive field; adjacent tile input
    ranges then overlap by exactly halo pixels (away from the image edges).
    """
    chain = net.shape_chain()
    final_w = chain[-1][1]
    input_w = chain[0][1]
    if not (1 <= tile_count <= final_w):
        raise ValueError(f"tile count must be in [1, {final_w}], got {tile_count}")
    if halo is None:
        halo = receptive_field_halo(net)
    jump = 1
    for layer in net.layers:
        jump *= layer.stride

    base, extra = divmod(final_w, tile_count)
    out_ranges = []
    lo = 0
    for t in range(tile_count):
        hi = lo + base + (1 if t < extra else 0)
        out_ranges.append((lo, hi))
        lo = hi
    in_ranges = [
        (max(0, olo * jump - halo // 2), min(input_w, ohi * jump + (halo + 1) // 2))
        for olo, ohi in out_ranges
    ]
    return TilePlan(tile_count, halo, tuple(out_ranges), tuple(in_ranges))


def _backward_intervals(net: NetworkSpec, out_lo: int, out_hi: int) -> list[tuple[int, int]]:
    """Column interval each layer boundary must cover to produce final columns
    [out_lo, out_hi), clamped to the valid width at every boundary."""
    widths = [s[1] for s in net.shape_chain()]
    intervals = [(out_lo, out_hi)]
    lo, hi = out_lo, out_hi
    for l in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[l]
        kx, s = layer.kernel[1], layer.stride
        _, pl, _ = same_pad(widths[l], kx, s)
        lo = lo * s - pl
        hi = (hi - 1) * s - pl + kx
        lo = max(0, lo)
        hi = min(widths[l], hi)
        intervals.append((lo, hi))
    intervals.reverse()
    return intervals


def _run_tile(x: FixedTensor, net: NetworkSpec, widths, intervals, popcount) -> np.ndarray:
    need_lo, need_hi = intervals[0]
    cur = FixedTensor(x.height, need_hi - need_lo, x.channels,
                      x.values[:, need_lo:need_hi, :].copy(),
                      x.qformat, x.bitwidth)
    offset = need_lo
    for l, layer in enumerate(net.layers):
        region = ColRegion(widths[l], offset, *intervals[l + 1])
        cur = _run_layer(layer, cur, region, 1, popcount)
        offset = intervals[l + 1][0]
    return cur.values


def run_tiled(x: FixedTensor, net: NetworkSpec, plan: TilePlan, threads: int = 1,
              popcount: str | None = None) -> InferenceResult:
    """Run the network tile by tile; bit-exact equal to run_monolithic.

    With threads > 1 the tiles themselves run in parallel (each one
    single-threaded inside); tiles are independent and concatenated in plan
    order, so the result does not depend on scheduling.
    """
    _check_input(x, net)
    chain = net.shape_chain()
    final_w = chain[-1][1]
    covered = 0
    for olo, ohi in plan.out_ranges:
        if olo != covered or ohi <= olo:
            raise ValueError("tile output ranges must cover every column exactly once")
        covered = ohi
    if covered != final_w:
        raise ValueError(f"tile output ranges cover {covered} columns, expected {final_w}")

    widths = [s[1] for s in chain]
    tile_intervals = []
    for (olo, ohi), (ilo, ihi) in zip(plan.out_ranges, plan.in_ranges):
        intervals = _backward_intervals(net, olo, ohi)
        need_lo, need_hi = intervals[0]
        if need_lo < ilo or need_hi > ihi:
            raise ValueError(
                f"tile halo too small: output columns [{olo},{ohi}) need input "
                f"columns [{need_lo},{need_hi}) but the plan provides [{ilo},{ihi})")
        tile_intervals.append(intervals)

    workers = min(max(1, threads), os.cpu_count() or 1, plan.tile_count)
    with threadpool_limits(limits=1, user_api="blas"):
        if workers == 1:
            pieces = [_run_tile(x, net, widths, iv, popcount) for iv in tile_intervals]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool_exec:
                futures = [pool_exec.submit(_run_tile, x, net, widths, iv, popcount)
                           for iv in tile_intervals]
                pieces = [f.result() for f in futures]

    final = np.concatenate(pieces, axis=1)
    pool = global_avg_pool(final)
    return InferenceResult(pool.sums, pool.count, predict(pool.sums),
                           _final_qformat(net))


def tile_working_sets(net: NetworkSpec, plan: TilePlan,
                      double_buffer_weights: bool = True) -> list[dict]:
    """Per-tile peak working set: activation slabs plus resident weights.

    Double buffering prices the next layer's weights as resident while the
    current layer runs (the loading overlaps compute).
    """
    chain = net.shape_chain()
    heights = [s[0] for s in chain]
    reports = []
    for olo, ohi in plan.out_ranges:
        intervals = _backward_intervals(net, olo, ohi)
        peak = 0
        peak_layer = 0
        for l, layer in enumerate(net.layers):
            in_w = intervals[l][1] - intervals[l][0]
            out_w = intervals[l + 1][1] - intervals[l + 1][0]
            in_bytes = _boundary_bytes(net, l, heights[l], in_w)
            out_bytes = _boundary_bytes(net, l + 1, heights[l + 1], out_w)
            wbytes = layer.weight_bytes() + layer.bookkeeping_bytes()
            if double_buffer_weights and l + 1 < len(net.layers):
                nxt = net.layers[l + 1]
                wbytes += nxt.weight_bytes() + nxt.bookkeeping_bytes()
            total = in_bytes + out_bytes + wbytes
            if total > peak:
                peak, peak_layer = total, l
        reports.append({"out_columns": (olo, ohi), "peak_bytes": peak,
                        "peak_layer": peak_layer})
    return reports


def _boundary_bytes(net: NetworkSpec, boundary: int, h: int, w: int,
                    mode: str = "binary") -> int:
    """Nominal storage for the activation map at a layer boundary."""
    if boundary == 0:
        c = net.input_shape[2]
        return h * w * c * 2  # int16 features
    layer = net.layers[boundary - 1]
    if mode == "binary" and layer.fold is not None:
        return h * w * words_per_pixel(layer.out_channels) * 4  # packed bits
    if mode == "binary" and layer.kind == FINAL_CONV:
        return h * w * layer.out_channels * 4  # int32 class map
    return h * w * layer.out_channels * 2  # dense int16


# ---------------------------------------------------------------------------
# MAC accounting
# ---------------------------------------------------------------------------


def _valid_chain(net: NetworkSpec) -> list[tuple[int, int]]:
    """Spatial sizes under no-padding (valid) convolution, layer by layer."""
    h, w, _ = net.input_shape
    chain = [(h, w)]
    for layer in net.layers:
        ky, kx = layer.kernel
        h = (h - ky) // layer.stride + 1 if h >= ky else 0
        w = (w - kx) // layer.stride + 1 if w >= kx else 0
        chain.append((h, w))
    return chain


def count_macs(net: NetworkSpec) -> dict:
    """Per-layer MAC counts under both counting conventions.

    'same_pad' prices what this engine executes (every output position pays
    the full kernel).  'valid' prices only positions where the kernel fits
    entirely inside the map; the published per-layer budget follows this
    convention, so deltas are reported against both.
    """
    chain = net.shape_chain()
    valid = _valid_chain(net)
    names = net.layer_names()
    reference = is_reference_topology(net)
    rows = []
    total_same = 0
    total_valid = 0
    for i, layer in enumerate(net.layers):
        ky, kx = layer.kernel
        oh, ow, _ = chain[i + 1]
        vh, vw = valid[i + 1]
        macs_same = oh * ow * layer.out_channels * ky * kx * layer.in_channels
        macs_valid = vh * vw * layer.out_channels * ky * kx * layer.in_channels
        published = PUBLISHED_MACS[i] if reference else None
        rows.append({
            "name": names[i],
            "kind": layer.kind,
            "kernel": layer.kernel,
            "stride": layer.stride,
            "in_channels": layer.in_channels,
            "out_channels": layer.out_channels,
            "macs_same_pad": macs_same,
            "macs_valid": macs_valid,
            "macs_published": published,
            "delta_same_pad_pct": None if published is None
            else 100.0 * (macs_same - published) / published,
            "delta_valid_pct": None if published is None
            else 100.0 * (macs_valid - published) / published,
        })
        total_same += macs_same
        total_valid += macs_valid
    return {
        "layers": rows,
        "total_same_pad": total_same,
        "total_valid": total_valid,
        "total_published": PUBLISHED_TOTAL_MACS if reference else None,
        "total_delta_same_pad_pct": None if not reference
        else 100.0 * (total_same - PUBLISHED_TOTAL_MACS) / PUBLISHED_TOTAL_MACS,
        "total_delta_valid_pct": None if not reference
        else 100.0 * (total_valid - PUBLISHED_TOTAL_MACS) / PUBLISHED_TOTAL_MACS,
    }


# ---------------------------------------------------------------------------
# memory footprint
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MemoryBudget:
    l1_bytes: int = 65536
    l2_bytes: int = 524288
    double_buffer_weights: bool = True


def footprint(net: NetworkSpec, budget: MemoryBudget | None = None,
              plan: TilePlan | None = None, weight_mode: str = "binary") -> dict:
    """Weight, bookkeeping, and activation storage, with budget verdicts.

    weight_mode='fixed16' prices the non-binary 16-bit variant of the same
    topology (dense int16 weights and activations) for comparison.
    """
    if weight_mode not in ("binary", "fixed16"):
        raise ValueError(f"unknown weight mode {weight_mode!r}")
    budget = budget or MemoryBudget()
    chain = net.shape_chain()

    rows = []
    weight_bytes = 0
    bookkeeping = 0
    names = net.layer_names()
    for i, layer in enumerate(net.layers):
        wb = layer.weight_bytes(weight_mode)
        kb = layer.bookkeeping_bytes()
        rows.append({"name": names[i], "weight_bytes": wb, "bookkeeping_bytes": kb})
        weight_bytes += wb
        bookkeeping += kb

    boundary = [
        _boundary_bytes(net, b, h, w, weight_mode)
        for b, (h, w, _) in enumerate(chain)
    ]
    act_peak = max(boundary[l] + boundary[l + 1] for l in range(len(net.layers)))

    result = {
        "layers": rows,
        "weight_bytes": weight_bytes,
        "bookkeeping_bytes": bookkeeping,
        "weight_total_bytes": weight_bytes + bookkeeping,
        "activation_peak_bytes": act_peak,
        "total_bytes": weight_bytes + bookkeeping + act_peak,
        "l2_budget_bytes": budget.l2_bytes,
        "fits_l2": weight_bytes + bookkeeping + act_peak <= budget.l2_bytes,
        "weight_mode": weight_mode,
    }
    if plan is not None:
        tiles = tile_working_sets(net, plan, budget.double_buffer_weights)
        tile_peak = max(t["peak_bytes"] for t in tiles)
        result["tiles"] = tiles
        result["tile_peak_bytes"] = tile_peak
        result["l1_budget_bytes"] = budget.l1_bytes
        result["fits_l1"] = tile_peak <= budget.l1_bytes
    return result


# ---------------------------------------------------------------------------
# benchmark harness
# ---------------------------------------------------------------------------


@dataclass
class BenchReport:
    rows: list[dict] = field(default_factory=list)
    comparisons: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_json_lines(self) -> str:
        import json

        lines = [json.dumps({"meta": self.meta})]
        lines += [json.dumps(row) for row in self.rows]
        for key, value in self.comparisons.items():
            lines.append(json.dumps({"comparison": key, **value}))
        return "\n".join(lines)

    def to_text(self) -> str:
        out = [f"{'Layer':<14} {'MACs':>12} {'Time [ms]':>10} {'MAC/s':>12}"]
        for r in self.rows:
            macs = f"{r['macs']:,}" if r["macs"] is not None else "-"
            rate = f"{r['mac_per_s']:.3g}" if r["mac_per_s"] is not None else "-"
            out.append(f"{r['row']:<14} {macs:>12} {r['time_s'] * 1e3:>10.2f} {rate:>12}")
        for key, value in self.comparisons.items():
            pretty = ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                               for k, v in value.items())
            out.append(f"[{key}] {pretty}")
        return "\n".join(out)


def _median_time(fn, repetitions: int) -> float:
    fn()  # warm-up, discarded
    times = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def bench(net: NetworkSpec, frontend_cfg=None, audio=None, repetitions: int = 3,
          threads: int = 1, popcount: str | None = None,
          include_naive: bool = True, include_popcount_compare: bool = True) -> BenchReport:
    """Per-layer timing report plus packed-vs-naive and popcount comparisons.

    Timing fields vary run to run; everything else (MACs, row structure) is
    deterministic.  The naive comparison runs the triple-loop oracle once per
    binary layer, so it dominates the wall time of the benchmark itself.
    """
    from .frontend import FrontendConfig, mel_spectrogram

    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    cfg = frontend_cfg or FrontendConfig()
    if audio is None:
        rng = np.random.default_rng(0)
        audio = (rng.uniform(-0.5, 0.5, cfg.patch_samples) * 32767).astype(np.int16)

    mel_time = _median_time(lambda: mel_spectrogram(audio, cfg), repetitions)
    x = mel_spectrogram(audio, cfg)

    macs = count_macs(net)
    names = net.layer_names()
    outs = run_layers(x, net, threads, popcount)
    inputs = [x] + outs[:-1]

    rows = [{"row": "Mel bins", "group": "Mel bins", "macs": None,
             "time_s": mel_time, "mac_per_s": None}]
    layer_times = []
    with threadpool_limits(limits=1, user_api="blas"):
        for i, layer in enumerate(net.layers):
            t = _median_time(
                lambda layer=layer, xin=inputs[i]: _run_layer(layer, xin, None, threads, popcount),
                repetitions)
            layer_times.append(t)
            m = macs["layers"][i]["macs_same_pad"]
            group = names[i]
            if is_reference_topology(net) and i >= len(net.layers) - 2:
                group = "5./6. Layer"  # last two layers are merged in firmware reports
            rows.append({"row": names[i], "group": group, "macs": m,
                         "time_s": t, "mac_per_s": m / t if t > 0 else None})

    total_macs = macs["total_same_pad"]
    total_time = mel_time + sum(layer_times)
    rows.append({"row": "Total", "group": "Total", "macs": total_macs,
                 "time_s": total_time,
                 "mac_per_s": total_macs / total_time if total_time > 0 else None})

    comparisons = {}
    with threadpool_limits(limits=1, user_api="blas"):
        if include_naive:
            for i, layer in enumerate(net.layers):
                if layer.kind != BINARY_CONV:
                    continue
                xin = inputs[i]
                packed_t = _median_time(
                    lambda xin=xin, layer=layer: conv2d_binary(
                        xin, layer.weights, layer.stride, popcount=popcount, threads=1),
                    repetitions)
                dense_in = unpack(xin)
                dense_w = unpack_weights(layer.weights)
                t0 = time.perf_counter()
                oracle.naive_binary_conv(dense_in, dense_w, layer.stride)
                naive_t = time.perf_counter() - t0
                comparisons[f"packed_vs_naive/{names[i]}"] = {
                    "packed_s": packed_t, "naive_s": naive_t,
                    "speedup": naive_t / packed_t if packed_t > 0 else float("inf"),
                }
        if include_popcount_compare:
            biggest = max(
                (i for i, l in enumerate(net.layers) if l.kind == BINARY_CONV),
                key=lambda i: macs["layers"][i]["macs_same_pad"],
                default=None)
            if biggest is not None:
                layer = net.layers[biggest]
                xin = inputs[biggest]
                times = {}
                for backend in ("native", "portable"):
                    try:
                        times[backend] = _median_time(
                            lambda b=backend, xin=xin, layer=layer: conv2d_binary(
                                xin, layer.weights, layer.stride, popcount=b, threads=1),
                            repetitions)
                    except ValueError:
                        times[backend] = None
                comparisons["popcount_native_vs_portable"] = {
                    "layer": names[biggest],
                    "native_s": times["native"],
                    "portable_s": times["portable"],
                }

    meta = {"threads": threads, "repetitions": repetitions,
            "popcount": resolve_popcount_name(popcount), "rows": len(rows)}
    return BenchReport(rows=rows, comparisons=comparisons, meta=meta)
