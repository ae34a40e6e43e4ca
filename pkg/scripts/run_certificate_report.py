#!/usr/bin/env python3
"""Certificate sweep: run the sampling-based verifier over every registry
model and evaluate the all-ones bound audit.  The zero and expansive models
carry no inward drift and are expected to fail dissipativity; the rest
pass all four checks.
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

from ulakit.cli import main as cli_main
from ulakit.drift_models import registered_models

CONSTANTS = {
    "L1": 1.0, "L2": 1.0, "A0": 1.0, "sigma0": 1.0,
    "h0": 1.0, "entropy0": 1.0, "mu": 1.0, "beta": 1.0, "f0": 1.0,
}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/certificates")
    ap.add_argument("--dim", type=int, default=2)
    args = ap.parse_args()
    out_root = Path(args.out)

    for name in registered_models():
        config = {
            "model": {"name": name, "params": {"dim": args.dim}},
            "init": {"mean": [0.0] * args.dim, "sigma0": 1.0},
            "seed": 0,
        }
        with tempfile.TemporaryDirectory() as tmp:
            cfg = Path(tmp) / "cfg.json"
            cfg.write_text(json.dumps(config))
            code = cli_main(["verify", "--config", str(cfg), "--out", str(out_root / name)])
        rep = json.loads((out_root / name / "verify.json").read_text())
        flags = {k: v["pass"] for k, v in rep["assumptions"].items()}
        print(f"{name:<12} exit={code} {flags}")

    with tempfile.TemporaryDirectory() as tmp:
        consts = Path(tmp) / "constants.json"
        consts.write_text(json.dumps(CONSTANTS))
        code = cli_main([
            "bound-eval", "--theorem", "1", "--eta", "0.1", "--horizon", "1.0",
            "--dim", "1", "--constants", str(consts), "--out", str(out_root / "bound_audit"),
        ])
    rep = json.loads((out_root / "bound_audit" / "bound_eval.json").read_text())
    print(f"all-ones bound audit: value={rep['value']} (exit={code})")
    print(f"artifacts in: {out_root}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
