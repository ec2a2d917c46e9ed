"""Result records, the fixed CSV schema, and content-hash memoization."""

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass

RESULT_HEADER = ["exp_id", "N", "d", "qlist", "mc", "seed", "dist", "dist_se",
                 "delta0", "delta1", "delta_n", "kappa4_max", "minf_max",
                 "composite", "wall_ms"]

CHECK_HEADER = ["check", "case", "lhs", "rhs", "residual", "tol", "passed"]


@dataclass
class ResultRecord:
    exp_id: str
    n: int
    d: int
    qlist: str
    mc: int
    seed: int
    dist: float = math.nan
    dist_se: float = math.nan
    delta0: float = math.nan
    delta1: float = math.nan
    delta_n: float = math.nan
    kappa4_max: float = math.nan
    minf_max: float = math.nan
    composite: float = math.nan
    wall_ms: float = 0.0

    def row(self):
        def fmt(x):
            return f"{x:.12g}" if isinstance(x, float) else str(x)
        return [self.exp_id, str(self.n), str(self.d), self.qlist, str(self.mc),
                str(self.seed)] + [fmt(v) for v in (
                    self.dist, self.dist_se, self.delta0, self.delta1,
                    self.delta_n, self.kappa4_max, self.minf_max,
                    self.composite, self.wall_ms)]


def write_results_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_HEADER)
        for r in records:
            w.writerow(r.row())


def write_checks_csv(path, rows):
    """rows: iterables (check, case, lhs, rhs, residual, tol, passed)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CHECK_HEADER)
        for row in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, float) else str(v) for v in row])


def qlist_str(degrees):
    return ";".join(str(q) for q in degrees)


# -- content-hash cache (HOMSUM_CACHE_DIR) ---------------------------------------

def system_fingerprint(system, extra=""):
    parts = []
    for f in system.kernels:
        parts.append(f"q={f.degree};N={f.dim};" + ",".join(
            f"{t}:{v!r}" for t, v in f.items()))
    parts.append("|".join(str(s) for s in system.specs))
    parts.append(extra)
    return "\n".join(parts)


def cached_scalar(tag, payload, compute):
    """Memoize a float under HOMSUM_CACHE_DIR, keyed by content hash."""
    cache_dir = os.environ.get("HOMSUM_CACHE_DIR")
    if not cache_dir:
        return compute()
    key = hashlib.sha256(payload.encode()).hexdigest()[:32]
    path = os.path.join(cache_dir, f"{tag}-{key}.json")
    if os.path.exists(path):
        with open(path) as fh:
            return json.load(fh)["value"]
    value = float(compute())
    os.makedirs(cache_dir, exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump({"tag": tag, "value": value}, fh)
    os.replace(tmp, path)
    return value
