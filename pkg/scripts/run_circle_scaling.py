#!/usr/bin/env python3
"""Training-pool scaling sweep on the circle toy task.

Runs the retrieval policy and the random baseline over nested pool sizes,
prints the per-size median error for both, and fits the error-vs-size power
law for the retrieval policy.
"""
import argparse
import json
from pathlib import Path

from tabctx import cli, dataset as ds, synthgen as sg
from tabctx.util import dump_json


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--noise", type=float, default=0.1)
    ap.add_argument("--pool", type=int, default=4096)
    ap.add_argument("--sizes", default="64,128,256,512,1024,2048,4096")
    ap.add_argument("--quota", type=int, default=16)
    ap.add_argument("--seeds", type=int, default=3, help="number of toy datasets")
    ap.add_argument("-o", "--output-dir", default="scaling_out")
    args = ap.parse_args()

    out = Path(args.output_dir)
    data_dir = out / "data"
    data_dir.mkdir(parents=True, exist_ok=True)

    entries = []
    for seed in range(args.seeds):
        d = sg.generate_toy(sg.ToySpec("circle", args.noise, args.pool + 1024, seed=seed))
        ds.save_table(d, data_dir / f"circle{seed}.csv")
        ds.save_schema(d.schema, d.task, data_dir / f"circle{seed}.schema.json")
        entries.append({"id": f"circle{seed}", "table": str(data_dir / f"circle{seed}.csv"),
                        "schema": str(data_dir / f"circle{seed}.schema.json"),
                        "split": {"ratios": [0.8, 0.0, 0.2], "seed": seed}})

    config = cli.RunConfig(
        datasets=[cli.DatasetEntry(**e) for e in entries],
        predictors=[{"id": "knn", "type": "knn"}],
        retrieval={"importance_mode": "dual"},
        context_sizes=[args.quota],
        seed=0,
    )
    sizes = [int(s) for s in args.sizes.split(",")]
    run_dir = cli.scaling(config, sizes, out / "run")

    fits = json.loads((run_dir / "fits.json").read_text())
    for key, fit in fits.items():
        print(f"\n{key}:")
        if "alpha" in fit:
            print(f"  alpha = {fit['alpha']:.4f}  scale constant = {fit['d_c']}")
            print(f"  log-log r^2 = {fit['r_squared']:.4f}")
        for d_size, err in fit.get("points", []):
            print(f"  pool {int(d_size):>6}: median error {err:.5f}")
    dump_json(out / "fits.json", fits)
    print(f"\noutputs in {out}")


if __name__ == "__main__":
    main()
