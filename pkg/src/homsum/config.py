"""Experiment configuration: strict JSON parsing, canonical serialization,
and system construction from kernel files or named families."""

import json
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ConfigError
from .distributions import parse_law
from .kernels import (read_kernel, banded_kernel, banded_spike_family,
                      banded_loo_family, random_sparse_kernel)
from .moments import HomSumSystem

_FAMILY_NAMES = ("banded", "banded-spike", "banded-loo", "random")


@dataclass(frozen=True)
class FamilySpec:
    name: str
    sizes: tuple
    q: int = 2
    count: int = 1
    nnz: int = 8

    def __post_init__(self):
        if self.name not in _FAMILY_NAMES:
            raise ConfigError(f"unknown kernel family {self.name!r}; "
                              f"choose from {', '.join(_FAMILY_NAMES)}")
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes:
            raise ConfigError("family sizes must be nonempty")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigError("family size ladder must be strictly increasing")
        object.__setattr__(self, "sizes", sizes)


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    kernels: tuple = ()
    family: FamilySpec = None
    laws: tuple = ("gaussian",)
    covariance: object = "gram"
    mc: int = 100_000
    alpha: float = 1.0
    threads: int = 1
    out: str = "results"
    format: str = "csv"
    distance: str = "orthant"
    anchors: int = 512
    corpus_pairs: int = 200
    corpus_kernels: int = 200
    corpus_contexts: int = 100
    corpus_max_dim: int = 8
    corpus_max_degree: int = 3

    def __post_init__(self):
        if self.format not in ("csv", "csv+svg"):
            raise ConfigError(f"format must be csv or csv+svg, got {self.format!r}")
        if self.distance not in ("orthant", "max"):
            raise ConfigError(f"distance must be orthant or max, got {self.distance!r}")
        if self.mc < 1:
            raise ConfigError("mc must be >= 1")
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if not self.kernels and self.family is None:
            raise ConfigError("config needs `kernels` files or a `family`")
        for law in self.laws:
            parse_law(law)
        object.__setattr__(self, "kernels", tuple(self.kernels))
        object.__setattr__(self, "laws", tuple(self.laws))


_TOP_KEYS = {
    "seed", "kernels", "family", "laws", "covariance", "mc", "alpha",
    "threads", "out", "format", "distance", "anchors", "corpus",
}
_FAMILY_KEYS = {"name", "sizes", "q", "count", "nnz"}
_CORPUS_KEYS = {"pairs", "kernels", "contexts", "max_dim", "max_degree"}


def config_from_dict(raw, base_dir="."):
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config key {sorted(unknown)[0]!r}")
    if "seed" not in raw:
        raise ConfigError("config key 'seed' is mandatory")
    fam = None
    if raw.get("family") is not None:
        fraw = raw["family"]
        bad = set(fraw) - _FAMILY_KEYS
        if bad:
            raise ConfigError(f"unknown family key {sorted(bad)[0]!r}")
        fam = FamilySpec(**fraw)
    corpus = raw.get("corpus", {})
    bad = set(corpus) - _CORPUS_KEYS
    if bad:
        raise ConfigError(f"unknown corpus key {sorted(bad)[0]!r}")
    laws = raw.get("laws", "gaussian")
    if isinstance(laws, str):
        laws = (laws,)
    kernels = tuple(raw.get("kernels", ()))
    for path in kernels:
        full = path if os.path.isabs(path) else os.path.join(base_dir, path)
        if not os.path.exists(full):
            raise ConfigError(f"kernel file not found: {full}")
    cov = raw.get("covariance", "gram")
    if not (cov == "gram" or isinstance(cov, list)):
        raise ConfigError("covariance must be \"gram\" or an explicit matrix")
    if isinstance(cov, list):
        cov = tuple(tuple(float(x) for x in row) for row in cov)
    return ExperimentConfig(
        seed=int(raw["seed"]),
        kernels=kernels,
        family=fam,
        laws=tuple(laws),
        covariance=cov,
        mc=int(raw.get("mc", 100_000)),
        alpha=float(raw.get("alpha", 1.0)),
        threads=int(raw.get("threads", 1)),
        out=str(raw.get("out", "results")),
        format=str(raw.get("format", "csv")),
        distance=str(raw.get("distance", "orthant")),
        anchors=int(raw.get("anchors", 512)),
        corpus_pairs=int(corpus.get("pairs", 200)),
        corpus_kernels=int(corpus.get("kernels", 200)),
        corpus_contexts=int(corpus.get("contexts", 100)),
        corpus_max_dim=int(corpus.get("max_dim", 8)),
        corpus_max_degree=int(corpus.get("max_degree", 3)),
    )


def load_config(path):
    """Strict parse: unknown keys are rejected, referenced files must exist."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def config_to_dict(cfg):
    out = {
        "seed": cfg.seed,
        "laws": list(cfg.laws),
        "covariance": ("gram" if cfg.covariance == "gram"
                       else [list(r) for r in cfg.covariance]),
        "mc": cfg.mc,
        "alpha": cfg.alpha,
        "threads": cfg.threads,
        "out": cfg.out,
        "format": cfg.format,
        "distance": cfg.distance,
        "anchors": cfg.anchors,
        "corpus": {
            "pairs": cfg.corpus_pairs,
            "kernels": cfg.corpus_kernels,
            "contexts": cfg.corpus_contexts,
            "max_dim": cfg.corpus_max_dim,
            "max_degree": cfg.corpus_max_degree,
        },
    }
    if cfg.kernels:
        out["kernels"] = list(cfg.kernels)
    if cfg.family is not None:
        out["family"] = {
            "name": cfg.family.name,
            "sizes": list(cfg.family.sizes),
            "q": cfg.family.q,
            "count": cfg.family.count,
            "nnz": cfg.family.nnz,
        }
    return out


def write_config(cfg, path):
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _laws_for(cfg, n):
    if len(cfg.laws) == 1:
        return [parse_law(cfg.laws[0]) for _ in range(n)]
    if len(cfg.laws) != n:
        raise ConfigError(f"got {len(cfg.laws)} laws for dimension {n}")
    return [parse_law(s) for s in cfg.laws]


def _family_kernels(fam, n, rng):
    if fam.name == "banded":
        return [banded_kernel(n)]
    if fam.name == "banded-spike":
        return banded_spike_family(n)
    if fam.name == "banded-loo":
        return banded_loo_family(n)
    return [random_sparse_kernel(n, fam.q, fam.nnz, rng) for _ in range(fam.count)]


def build_systems(cfg, base_dir="."):
    """Systems described by the config: one per ladder size, or a single one
    assembled from kernel files."""
    cov = None if cfg.covariance == "gram" else np.array(cfg.covariance)
    systems = []
    if cfg.family is not None:
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
        for n in cfg.family.sizes:
            kernels = _family_kernels(cfg.family, n, rng)
            systems.append(HomSumSystem(kernels, _laws_for(cfg, n), cov))
    if cfg.kernels:
        kernels = []
        for path in cfg.kernels:
            full = path if os.path.isabs(path) else os.path.join(base_dir, path)
            kernels.append(read_kernel(full))
        n = kernels[0].dim
        for k in kernels:
            if k.dim != n:
                raise ConfigError("kernel dim mismatch")
        systems.append(HomSumSystem(kernels, _laws_for(cfg, n), cov))
    return systems
