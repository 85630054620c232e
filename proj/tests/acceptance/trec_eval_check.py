#!/usr/bin/env python3
"""Evaluate a run against qrels with trec_eval; print map, recip_rank, P_1 as JSON.

Uses a trec_eval binary on PATH if present, else pytrec_eval.
Exit status 77 means neither is available.
"""
import json
import shutil
import subprocess
import sys

MEASURES = ("map", "recip_rank", "P_1")


def with_binary(binary, qrels, run):
    out = subprocess.run(
        [binary, "-m", "map", "-m", "recip_rank", "-m", "P.1", qrels, run],
        check=True, capture_output=True, text=True).stdout
    result = {"tool": binary}
    for line in out.splitlines():
        name, scope, value = line.split()
        if scope == "all" and name in MEASURES:
            result[name] = float(value)
    return result


def with_pytrec_eval(qrels, run):
    import pytrec_eval

    with open(qrels) as f:
        judged = pytrec_eval.parse_qrel(f)
    with open(run) as f:
        ranked = pytrec_eval.parse_run(f)
    evaluator = pytrec_eval.RelevanceEvaluator(judged, {"map", "recip_rank", "P.1"})
    per_query = evaluator.evaluate(ranked)
    result = {"tool": "pytrec_eval"}
    for m in MEASURES:
        result[m] = pytrec_eval.compute_aggregated_measure(m, [q[m] for q in per_query.values()])
    return result


def main():
    if len(sys.argv) != 3:
        print("usage: trec_eval_check.py QRELS RUN", file=sys.stderr)
        return 2
    qrels, run = sys.argv[1:]
    binary = shutil.which("trec_eval")
    if binary:
        result = with_binary(binary, qrels, run)
    else:
        try:
            result = with_pytrec_eval(qrels, run)
        except ImportError:
            print("no trec_eval binary and no pytrec_eval module", file=sys.stderr)
            return 77
    print(json.dumps(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
