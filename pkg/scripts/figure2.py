"""Risk against box radius for QOP, LOP and LOP-Clip (10 runs per kappa).

    python3 scripts/figure2.py [--out-dir results/figure2] [--workers 4]
"""
import argparse
import sys

from qop.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="results/figure2")
    ap.add_argument("--workers", default="1")
    a = ap.parse_args()
    sys.exit(main(["sweep-kappa", "--out-dir", a.out_dir, "--workers", a.workers, "--check"]))
