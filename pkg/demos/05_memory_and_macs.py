"""Memory footprint and workload accounting for the reference network.

Shows why the binary network fits a 512 kB budget while its 16-bit twin does
not, how the 4-tile plan bounds the per-tile working set, and how the two MAC
counting conventions differ.
"""

from binsed import (
    MemoryBudget,
    count_macs,
    footprint,
    gen_random_model,
    plan_tiles,
    tile_working_sets,
)

net = gen_random_model(1).network
budget = MemoryBudget()

# --- weights: 1 bit each for binary layers ------------------------------------
report = footprint(net, budget)
print("weight storage per layer:")
for row in report["layers"]:
    print(f"  {row['name']:<14} {row['weight_bytes']:>8,} B "
          f"(+{row['bookkeeping_bytes']} B thresholds/biases)")
print(f"total weights {report['weight_bytes']:,} B = "
      f"{report['weight_bytes'] / 1000:.1f} kB")
print(f"total with activations: {report['total_bytes']:,} B -> "
      f"{'fits' if report['fits_l2'] else 'exceeds'} the "
      f"{budget.l2_bytes // 1024} KiB budget")

fixed16 = footprint(net, budget, weight_mode="fixed16")
print(f"\nsame topology at 16-bit everywhere: {fixed16['weight_bytes']:,} B of "
      f"weights ({fixed16['weight_bytes'] / 1000:.0f} kB) -> "
      f"{'fits' if fixed16['fits_l2'] else 'exceeds'} the budget")

# --- tiling bounds the live working set ----------------------------------------
plan = plan_tiles(net, 4)
print(f"\n4 tiles along time, halo {plan.halo} "
      f"(receptive-field extension; adjacent tile inputs overlap by {plan.halo})")
for entry, (olo, ohi) in zip(tile_working_sets(net, plan), plan.out_ranges):
    print(f"  output cols [{olo:3d},{ohi:3d}): peak working set "
          f"{entry['peak_bytes']:>7,} B at layer {entry['peak_layer']}")

# --- MAC accounting --------------------------------------------------------------
macs = count_macs(net)
print("\nMACs per layer (same-pad = what this engine executes; "
      "valid = published counting convention):")
for row in macs["layers"]:
    pub = f"{row['macs_published'] / 1e6:6.0f}M" if row["macs_published"] else "     -"
    print(f"  {row['name']:<14} same-pad {row['macs_same_pad'] / 1e6:7.1f}M   "
          f"valid {row['macs_valid'] / 1e6:7.1f}M   published {pub}")
print(f"totals: same-pad {macs['total_same_pad'] / 1e6:.0f}M, "
      f"valid {macs['total_valid'] / 1e6:.0f}M, "
      f"published {macs['total_published'] / 1e6:.0f}M")
