"""End-to-end experiment harness at toy scale.

Drives the full protocol on a shrunken problem: build per-SNR and mixed
training sets, train one emulator per set, then sweep the test SNRs under
the matched-SNR and raw-baseline cases and write the CSV tables the CLI
would produce.  Everything is derived from one seed, so rerunning this
script reproduces the output files byte for byte.

Run:  python3 demos/04_snr_sweep.py
"""

import os

from arrayemu import ArrayConfig, ExperimentConfig, Harness, TrainConfig, write_results

out_dir = os.path.join(os.path.dirname(__file__), "out_snr_sweep")

config = ExperimentConfig(
    low=ArrayConfig(2, 2),
    high=ArrayConfig(3, 3),
    angle_ranges_deg=[(0.0, 25.0)],
    num_targets=2,
    snr_train_db=[-10.0, 0.0, 10.0],
    snr_test_db=[-10.0, 0.0, 10.0],
    samples_per_set=600,
    m1_samples=1800,
    m2_samples=300,
    test_samples=600,
    snapshots=30,
    train=TrainConfig(epochs=30, batch_size=60, split=(0.75, 0.25, 0.0)),
    grid_step_deg=0.2,
    seed=2024,
    output_dir=out_dir,
)
harness = Harness(config)

print("building datasets...")
paths = harness.build_datasets()
print(f"  {len(paths)} dataset files under {out_dir}/datasets")

print("training one emulator per set...")
for set_id in config.set_ids:
    harness.ensure_model(0, set_id)
print(f"  models under {out_dir}/models")

os.makedirs(os.path.join(out_dir, "results"), exist_ok=True)
for case in ("raw_low", "raw_high", "matched_snr"):
    result = harness.run_case_sweep(case)
    path = os.path.join(out_dir, "results", f"sweep_{case}.csv")
    write_results(result, path)
    print(f"\n{case}  ({path})")
    for row in result.rows:
        print(f"  test snr {row.test_snr_db:6.1f} dB  "
              f"doa mse {row.doa_mse_rad2:.3e} rad^2  crb(high) {row.crb_high:.3e}")
