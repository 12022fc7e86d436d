"""Optimised QOP utility bound over an (epsilon, delta) grid, exact and inexact solves.

    python3 scripts/figure1.py [--out-dir results/figure1]
"""
import argparse
import sys

from qop.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="results/figure1")
    a = ap.parse_args()
    sys.exit(main(["optimize-bound", "--out-dir", a.out_dir, "--check"]))
