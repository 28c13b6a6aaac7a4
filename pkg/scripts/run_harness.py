#!/usr/bin/env python3
"""Run the soundness harness over the shipped corpus and summarize.

Prints one JSON line per (derivation, algebra) pair followed by a
summary line; exits nonzero if any pair is violated.
"""

import json
import sys
from collections import Counter

from qlam.corpus import harness_corpus
from qlam.finite_models import soundness_harness


def main() -> None:
    counts: Counter = Counter()
    for th, derivs, algs in harness_corpus():
        for record in soundness_harness(th, derivs, algs):
            print(json.dumps(record, sort_keys=True))
            counts[record["status"].split(":")[0]] += 1
    print(json.dumps({"summary": dict(counts)}, sort_keys=True), file=sys.stderr)
    sys.exit(1 if counts["violated"] else 0)


if __name__ == "__main__":
    main()
