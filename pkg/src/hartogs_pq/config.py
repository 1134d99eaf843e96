"""Experiment configuration: defaults, schema validation, overrides, hashing."""
import copy
import hashlib
import json
import os
import re
from importlib import resources

import jsonschema

from .geometry import domain_from_dict
from .weights import weight_from_dict

DEFAULTS = {
    "name": "custom",
    "domain": {"kind": "disk", "params": [0.0, 0.0, 1.0]},
    "weight": {"family": "polynomial", "terms": [[2, 0, 1.0], [0, 2, 1.0]]},
    "grid": {"h": 1 / 64},
    "sweep": {"m_values": [0, 1, 2, 4, 8, 16, 32]},
    "solver": {"tol": 1e-8, "max_iter": 500, "seed": 0, "magnetic_block": 3},
    "diagnostics": {
        "widths": [0.2, 0.1, 0.05],
        "tau": 1e-10,
        "samples": 256,
        "radii": [0.1, 0.05, 0.025],
        "scan_points": 16,
        "n_values": [1, 2, 3],
        "boundary_points": 200,
        "margin": 0.05,
        "trials": 8,
        "hardy_h": [1 / 32, 1 / 64, 1 / 128],
        "hardy_domain": {"kind": "rectangle", "params": [0.0, 1.0, 0.0, 1.0]},
        "thresholds": {"growth_factor": 10.0, "bounded_ratio": 1.1, "bounded_exponent": 0.5,
                       "fine_interior": 0.99, "levi": 1e-8, "laplacian": 1e-10,
                       "hardy_tolerance": 1.5},
    },
    "oracles": {"samples": 1000000, "n_max": 12, "m_max": 12, "pairs": 20, "seed": 0,
                "sigmas": 3.0},
    "outputs": {"directory": "out", "formats": ["csv", "json"]},
}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is a dotted path, ``line`` the source line if known."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        loc = ""
        if field:
            loc += f"field '{field}'"
        if line:
            loc += f" (line {line})"
        super().__init__(f"{loc}: {message}" if loc else message)


def schema():
    return json.loads(resources.files("hartogs_pq").joinpath("data/config.schema.json")
                      .read_text(encoding="utf-8"))


REPLACED_BLOCKS = ("domain", "weight", "hardy_domain")


def deep_merge(base, over):
    """Recursive dict update; domain and weight blocks are replaced whole."""
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict) and k not in REPLACED_BLOCKS:
            deep_merge(base[k], v)
        else:
            base[k] = v
    return base


def _line_of(text, path):
    """Best-effort source line for a JSON path (keys searched in nesting order)."""
    if text is None:
        return None
    pos, line = 0, None
    for part in path:
        if isinstance(part, int):
            continue
        m = re.compile(r'"%s"\s*:' % re.escape(str(part))).search(text, pos)
        if not m:
            break
        pos = m.end()
        line = text.count("\n", 0, m.start()) + 1
    return line


def _dotted(path):
    return ".".join(str(p) for p in path)


def parse_value(raw):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(cfg, overrides):
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value", field=item)
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = cfg
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                node[p] = {}
            node = node[p]
        node[parts[-1]] = parse_value(raw.strip())
    return cfg


def validate(cfg, text=None):
    v = jsonschema.Draft202012Validator(schema())
    errors = sorted(v.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = list(e.absolute_path)
        raise ConfigError(e.message, field=_dotted(path) or "<root>", line=_line_of(text, path))
    for key, build in (("domain", domain_from_dict), ("weight", weight_from_dict)):
        try:
            build(cfg[key])
        except (ValueError, TypeError, KeyError, OSError) as exc:
            raise ConfigError(str(exc), field=key, line=_line_of(text, [key])) from None
    return cfg


def is_bundled(source):
    from .presets import PRESETS
    return str(source) in PRESETS and not os.path.exists(str(source))


def bundled_config_text(name):
    return resources.files("hartogs_pq").joinpath(f"data/configs/{name}.json") \
        .read_text(encoding="utf-8")


def load_config(source=None, overrides=()):
    """Load a config from a path or a bundled preset name, merged over the defaults."""
    text = None
    if source is None:
        user = {}
    else:
        try:
            text = bundled_config_text(source) if is_bundled(source) else \
                open(source, encoding="utf-8").read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        try:
            user = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(exc.msg, field="<json>", line=exc.lineno) from None
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object", field="<root>", line=1)
    cfg = deep_merge(copy.deepcopy(DEFAULTS), user)
    apply_overrides(cfg, overrides)
    return validate(cfg, text)


def dumps_pretty(cfg):
    """Indented JSON with short scalar lists kept on one line."""
    text = json.dumps(cfg, indent=2, allow_nan=False)
    return re.sub(r"\[[^\[\]{}]*\]",
                  lambda m: "[" + ", ".join(x.strip() for x in m.group(0)[1:-1].split(",")
                                            if x.strip()) + "]", text) + "\n"


def canonical(cfg):
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(cfg):
    return hashlib.sha256(canonical(cfg).encode("utf-8")).hexdigest()
