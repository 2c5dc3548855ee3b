"""A small outage sweep comparing all four receivers, written to CSV.

Frame counts here are kept small so the script finishes in about a minute;
the acceptance suite runs the same comparisons at study scale.  Expect the
unquantized centralized detector in front, the network-coded schemes close
behind it with a quarter of the quantized baseline's backhaul, and the
lookup-table variant trailing its live-search parent slightly.
"""
from pnclab.sim import ExperimentConfig, emit_results, run_experiment

records = []
for scheme, extra in [
    ("comp_ideal", {}),
    ("bmas", {}),
    ("rbmas", {}),
    ("comp_nonideal", {"quantizer_bits": 4}),
    ("comp_nonideal", {"quantizer_bits": 2}),
]:
    cfg = ExperimentConfig(
        modulation="qam4",
        scheme=scheme,
        ebn0_db=(10.0, 14.0, 18.0),
        frames_per_point=1500,
        frame_len=120,
        seed=2024,
        rank_trials=100_000,
        **extra,
    )
    label = scheme + (f" q={extra['quantizer_bits']}" if extra else "")
    for rec in run_experiment(cfg):
        records.append(rec)
        print(f"{label:>18s} @ {rec.ebn0_db:4.1f} dB: outage {rec.outage:.4f}, "
              f"backhaul {rec.backhaul_bits:g} bits/use")

emit_results(records, "outage_sweep.csv")
print("results written to outage_sweep.csv")
