"""Binary convolution from first principles: +-1 products become xor +
popcount on 32-channel words.

Walks one dot product by hand, then checks the packed kernel against the
trusted triple-loop oracle and times both.
"""

import time

import numpy as np

from binsed import conv2d_binary, pack, pack_weights, unpack
from binsed.kernels import get_popcount
from binsed.oracle import naive_binary_conv

rng = np.random.default_rng(42)

# --- one pixel, 32 channels, by hand -----------------------------------------
x = rng.choice([-1, 1], (1, 1, 32)).astype(np.int8)
w = rng.choice([-1, 1], (1, 1, 1, 32)).astype(np.int8)
dot = int((x[0, 0] * w[0, 0, 0]).sum())

xw = int(pack(x).words[0, 0, 0])
ww = int(pack_weights(w).words[0, 0, 0, 0])
popcount = get_popcount()
mismatches = int(popcount(np.array(xw ^ ww, dtype=np.uint32)))
print(f"input word  0x{xw:08X}")
print(f"weight word 0x{ww:08X}")
print(f"xor popcount = {mismatches} mismatching channels")
print(f"dot product  = 32 - 2*{mismatches} = {32 - 2 * mismatches} "
      f"(naive sum: {dot})")
assert 32 - 2 * mismatches == dot

# --- -1 is stored as bit 0, so packing is lossless ----------------------------
assert (unpack(pack(x)) == x).all()
print("\nbit encoding: +1 -> 1, -1 -> 0; round trip exact")

# --- whole feature maps: packed kernel vs triple-loop oracle ------------------
h, wid, cin, cout = 32, 200, 64, 128
feat = rng.choice([-1, 1], (h, wid, cin)).astype(np.int8)
filt = rng.choice([-1, 1], (cout, 3, 3, cin)).astype(np.int8)

t0 = time.perf_counter()
fast = conv2d_binary(pack(feat), pack_weights(filt), stride=1)
t_fast = time.perf_counter() - t0

t0 = time.perf_counter()
slow = naive_binary_conv(feat, filt, stride=1)
t_slow = time.perf_counter() - t0

assert (fast == slow).all()
print(f"\n{h}x{wid}x{cin} -> {cout} channels, 3x3 kernel:")
print(f"  packed xor+popcount: {t_fast * 1e3:7.1f} ms")
print(f"  triple-loop oracle : {t_slow * 1e3:7.1f} ms")
print(f"  bit-exact equal, {t_slow / t_fast:.0f}x faster")

# --- channel counts that do not divide 32 still work --------------------------
feat37 = rng.choice([-1, 1], (5, 9, 37)).astype(np.int8)
filt37 = rng.choice([-1, 1], (4, 3, 3, 37)).astype(np.int8)
assert (conv2d_binary(pack(feat37), pack_weights(filt37), 2)
        == naive_binary_conv(feat37, filt37, 2)).all()
print("\n37 channels (5 padding bits per word): still bit-exact "
      "(padding bits stay zero and the channel count replaces 32*words)")
