"""Run configuration: INI file, environment and command-line overrides.

Precedence, lowest first: built-in defaults, the ``[section]`` of the config
file, ``HETEROFLOW_SEED`` (seed only), explicit command-line values.
"""

import configparser
import os

from .errors import InvalidConfig

SEED_ENV = "HETEROFLOW_SEED"

DEFAULTS = {
    "run": {"seed": 0, "out": "out", "jobs": 1},
    "gen": {
        "quadrants": "hom-hom,hom-het,het-hom,het-het",
        "backbone_count": 200,
        "motif_variants": 5,
        "backbone_n_range": "20,50",
        "motif_n_range": "5,7",
        "noise_sigma": 0.05,
        "feature_dim": 8,
        "num_classes": 3,
        "edge_mode": "sampled",
        "embedding_seed": "",
        "ratios": "0.8,0.1,0.1",
    },
    "simulate": {
        "graph": "barbell:10,5",
        "weight": "neg-identity",
        "dim": 1,
        "tau": 0.05,
        "steps": 2000,
        "variant": "simplified",
        "renormalize": True,
        "eps": 1e-2,
    },
    "train": {
        "families": "gcn,gf_gcn,adaptive_mix",
        "seeds": "0,1,2",
        "epochs": 300,
        "learning_rate": 0.01,
        "layers": 4,
        "hidden": "",
        "tau": 0.2,
        "task": "binary_classification",
        "dtype": "float32",
    },
    "eval": {"bandwidth": "", "subsample": ""},
}


def _coerce(raw, default, key):
    if isinstance(default, bool):
        if isinstance(raw, bool):
            return raw
        low = str(raw).strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise InvalidConfig(f"{key}: expected a boolean, got {raw!r}")
    try:
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(f"{key}: cannot parse {raw!r}") from exc
    return str(raw)


def load(path=None, overrides=None, env=None):
    """Resolve the configuration into ``{section: {key: value}}``.

    ``overrides`` maps ``"section.key"`` to a value; ``None`` values are
    ignored so argparse defaults can be passed straight through.
    """
    env = os.environ if env is None else env
    resolved = {s: dict(v) for s, v in DEFAULTS.items()}
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise InvalidConfig(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise InvalidConfig(f"bad config file {path}: {exc}") from exc
        for section in parser.sections():
            if section not in resolved:
                raise InvalidConfig(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                if key not in resolved[section]:
                    raise InvalidConfig(f"unknown key {section}.{key}")
                resolved[section][key] = _coerce(raw, DEFAULTS[section][key], f"{section}.{key}")
    if env.get(SEED_ENV, "") != "":
        resolved["run"]["seed"] = _coerce(env[SEED_ENV], 0, SEED_ENV)
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, key = dotted.partition(".")
        if section not in resolved or key not in resolved[section]:
            raise InvalidConfig(f"unknown setting {dotted}")
        resolved[section][key] = _coerce(value, DEFAULTS[section][key], dotted)
    if resolved["run"]["jobs"] < 1:
        raise InvalidConfig("jobs must be >= 1")
    return resolved


def parse_list(text, kind=str):
    text = str(text).strip()
    if not text:
        return []
    try:
        return [kind(part.strip()) for part in text.split(",")]
    except ValueError as exc:
        raise InvalidConfig(f"cannot parse list {text!r}") from exc


def parse_optional(text, kind):
    text = str(text).strip()
    if not text:
        return None
    try:
        return kind(text)
    except ValueError as exc:
        raise InvalidConfig(f"cannot parse {text!r}") from exc
