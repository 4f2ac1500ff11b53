"""Flat ``key = value`` experiment configuration.

One setting per line, ``#`` starts a comment, dotted keys group settings::

    problem = primary1d        # primary1d | forced1d | cd2d
    epsilon = 1e-4
    net.dims = 1, 20, 1
    transform.a = [1]
    transform.b = [-1]
    adam.epochs = 10000
    adam.lr = 1e-3
    lbfgs.epochs = 10000
    seeds = 0..19

Lists accept ``[1, 2]`` or ``1, 2``; integer ranges accept ``lo..hi`` (inclusive).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ConfigError
from .problems import FORCED, PRIMARY, Problem1D, Problem2D
from .transform import AffineTransform
from .trainer import Schedule

PROBLEMS = {"primary1d": PRIMARY, "forced1d": FORCED, "cd2d": "2d"}


def _float(v):
    return float(Fraction(v)) if "/" in v else float(v)


def _list(v, conv):
    v = v.strip()
    if v.startswith("[") and v.endswith("]"):
        v = v[1:-1]
    out = []
    for part in v.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part and conv is int:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(conv(part))
    return out


def _bool(v):
    v = v.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(v)


# key -> (attribute, parser)
KEYS = {
    "problem": ("problem", str),
    "epsilon": ("epsilon", _float),
    "net.dims": ("dims", lambda v: _list(v, int)),
    "transform.a": ("transform_a", lambda v: _list(v, _float)),
    "transform.b": ("transform_b", lambda v: _list(v, _float)),
    "adam.epochs": ("adam_epochs", int),
    "adam.lr": ("adam_lr", _float),
    "lbfgs.epochs": ("lbfgs_epochs", int),
    "lbfgs.history": ("lbfgs_history", int),
    "samples.res_step": ("res_step", lambda v: Fraction(v)),
    "samples.n2d": ("n2d", int),
    "fdm.N": ("fdm_N", int),
    "correct.iterations": ("iterations", int),
    "seed": ("seed", int),
    "seeds": ("seeds", lambda v: _list(v, int)),
    "ntk.k": ("ntk_k", int),
    "ntk.trained": ("ntk_trained", _bool),
    "ntk.samples": ("ntk_samples", str),
}


@dataclass
class ExperimentConfig:
    problem: str = "primary1d"
    epsilon: float | None = None
    dims: list | None = None
    transform_a: list | None = None
    transform_b: list | None = None
    adam_epochs: int = 10000
    adam_lr: float = 1e-3
    lbfgs_epochs: int = 10000
    lbfgs_history: int = 10
    res_step: Fraction = Fraction(1, 128)
    n2d: int = 129
    fdm_N: int = 32
    iterations: int = 3
    seed: int = 0
    seeds: list = field(default_factory=lambda: list(range(20)))
    ntk_k: int = 6
    ntk_trained: bool = False
    ntk_samples: str = "reduced"
    text: str = ""

    @property
    def dim(self):
        return 2 if self.problem == "cd2d" else 1

    def make_problem(self):
        if self.epsilon is None:
            raise ConfigError("missing required key: epsilon")
        kind = PROBLEMS.get(self.problem)
        if kind is None:
            raise ConfigError(f"unknown problem {self.problem!r}; expected one of {sorted(PROBLEMS)}")
        if kind == "2d":
            return Problem2D(self.epsilon)
        return Problem1D(self.epsilon, kind)

    def make_transform(self):
        d = self.dim
        a = self.transform_a if self.transform_a is not None else [1.0] * d
        b = self.transform_b if self.transform_b is not None else [0.0] * d
        if len(a) != d or len(b) != d:
            raise ConfigError(f"transform.a and transform.b need {d} entries each")
        return AffineTransform(tuple(a), tuple(b))

    def net_dims(self):
        dims = self.dims if self.dims is not None else [self.dim, 20, 1]
        if dims[0] != self.dim:
            raise ConfigError(f"net.dims must start with the input width {self.dim}")
        return tuple(dims)

    def schedule(self):
        return Schedule(self.adam_epochs, self.lbfgs_epochs, self.adam_lr, self.lbfgs_history)


def parse_config(text, required=("problem", "epsilon")):
    cfg = ExperimentConfig(text=text)
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key: {key}")
        attr, conv = KEYS[key]
        try:
            setattr(cfg, attr, conv(value))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
        seen.add(key)
    for key in required:
        if key not in seen:
            raise ConfigError(f"missing required key: {key}")
    return cfg


def load_config(path, required=("problem", "epsilon")):
    with open(path) as fh:
        return parse_config(fh.read(), required)
