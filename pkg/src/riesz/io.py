"""Configuration files, named configurations and CSV output.

Configuration files are JSON::

    {"d": 2, "alpha": "1", "points": [["1", "0", "0"], ...], "meta": {...}}

Reals are written as shortest round-trip decimal strings (``repr`` of a
float); plain JSON numbers are accepted on input as well.
"""

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .manifold import Configuration, random_configuration

log = logging.getLogger(__name__)

RENORM_WARN = 1e-6
RENORM_ERROR = 1e-3
KEEP_TOL = 1e-14

NAMED = ("antipodal", "simplex", "cross-polytope", "ngon", "random")


class ConfigFileError(ValueError):
    """Malformed or inconsistent configuration file."""


def fmt_real(x):
    return repr(float(x))


@dataclass
class ConfigFile:
    d: int
    alpha: float
    points: np.ndarray
    meta: dict = field(default_factory=dict)

    def configuration(self):
        return Configuration(self.points)

    def to_dict(self):
        return {
            "d": int(self.d),
            "alpha": fmt_real(self.alpha),
            "points": [[fmt_real(v) for v in row] for row in np.asarray(self.points)],
            "meta": {str(k): str(v) for k, v in self.meta.items()},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def from_config(cls, config, alpha, meta=None):
        return cls(config.d, float(alpha), np.array(config.points), dict(meta or {}))


def _real(v, what):
    if isinstance(v, bool):
        raise ConfigFileError(f"{what}: expected a decimal, got {v!r}")
    try:
        x = float(v)
    except (TypeError, ValueError):
        raise ConfigFileError(f"{what}: expected a decimal, got {v!r}") from None
    if not math.isfinite(x):
        raise ConfigFileError(f"{what}: not finite")
    return x


def parse_config(data):
    """Parse configuration-file bytes or text into a :class:`ConfigFile`.

    Points are renormalized (rows within ``KEEP_TOL`` of unit norm are left
    untouched). A norm defect above ``RENORM_WARN`` is logged as
    a warning; above ``RENORM_ERROR`` it is an error.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigFileError(f"invalid UTF-8 at byte offset {exc.start}") from None
    else:
        text = data
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[:exc.pos].encode("utf-8"))
        raise ConfigFileError(f"malformed JSON at byte offset {offset}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ConfigFileError("top level must be a JSON object")
    for key in ("d", "points"):
        if key not in obj:
            raise ConfigFileError(f"missing field {key!r}")
    d = obj["d"]
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise ConfigFileError(f"d must be a positive integer, got {d!r}")
    alpha = _real(obj["alpha"], "alpha") if obj.get("alpha") is not None else None
    pts = obj["points"]
    if not isinstance(pts, list) or len(pts) < 2:
        raise ConfigFileError("points must be a list of at least two vectors")
    rows = []
    for k, row in enumerate(pts):
        if not isinstance(row, list) or len(row) != d + 1:
            raise ConfigFileError(f"point {k} must have {d + 1} coordinates")
        rows.append([_real(v, f"point {k}") for v in row])
    P = np.array(rows)
    norms = np.linalg.norm(P, axis=1)
    defect = np.abs(norms - 1.0)
    worst = int(np.argmax(defect))
    if defect[worst] > RENORM_ERROR:
        raise ConfigFileError(f"point {worst} is far from unit norm (norm={norms[worst]!r})")
    if defect[worst] > RENORM_WARN:
        log.warning("point %d renormalized (norm was %r)", worst, float(norms[worst]))
    # rows already unit to within a few ulps are kept bit-for-bit so that
    # written files read back exactly
    fix = defect > KEEP_TOL
    P[fix] = P[fix] / norms[fix, None]
    meta = obj.get("meta") or {}
    if not isinstance(meta, dict):
        raise ConfigFileError("meta must be an object")
    return ConfigFile(d, alpha, P, {str(k): str(v) for k, v in meta.items()})


def read_config(path):
    with open(path, "rb") as fh:
        return parse_config(fh.read())


def regular_simplex(d):
    """``d + 2`` unit vectors in R^(d+1) with mutual inner product ``-1/(d+1)``."""
    m = d + 2
    E = np.eye(m) - 1.0 / m
    # orthonormal basis of the hyperplane sum(v) = 0, then coordinates in it
    Q, _ = np.linalg.qr(E[:, : m - 1])
    V = E @ Q
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def generate_named(name, d=None, n=None, seed=None):
    """Build one of the named test configurations.

    ``antipodal`` is ``+-e_1``; ``ngon`` places ``n`` points at angles
    ``2 pi k / n`` on the circle; ``simplex`` and ``cross-polytope`` are the
    regular polytopes on S^d; ``random`` draws ``n`` i.i.d. uniform points.
    """
    if name not in NAMED:
        raise ConfigFileError(f"unknown configuration {name!r}; choose from {', '.join(NAMED)}")
    if name == "ngon":
        if d not in (None, 1):
            raise ConfigFileError("ngon requires d = 1")
        if n is None or n < 2:
            raise ConfigFileError("ngon requires n >= 2")
        ang = 2.0 * np.pi * np.arange(n) / n
        return Configuration.from_vectors(np.c_[np.cos(ang), np.sin(ang)])
    if d is None or d < 1:
        raise ConfigFileError(f"{name} requires d >= 1")
    if name == "antipodal":
        if n not in (None, 2):
            raise ConfigFileError("antipodal has exactly 2 points")
        X = np.zeros((2, d + 1))
        X[0, 0], X[1, 0] = 1.0, -1.0
        return Configuration(X)
    if name == "simplex":
        if n not in (None, d + 2):
            raise ConfigFileError(f"simplex on S^{d} requires n = {d + 2}")
        return Configuration.from_vectors(regular_simplex(d))
    if name == "cross-polytope":
        if n not in (None, 2 * (d + 1)):
            raise ConfigFileError(f"cross-polytope on S^{d} requires n = {2 * (d + 1)}")
        I = np.eye(d + 1)
        return Configuration(np.concatenate([I, -I]))
    if n is None or n < 2:
        raise ConfigFileError("random requires n >= 2")
    return random_configuration(d, n, np.random.default_rng(seed))


def write_csv(path_or_file, header, rows, metadata=()):
    """CSV with ``#``-prefixed metadata lines, a header row and data rows."""
    buf = io.StringIO()
    for line in metadata:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_real(v) if isinstance(v, (float, np.floating)) else v for v in row])
    text = buf.getvalue()
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", newline="") as fh:
            fh.write(text)
    return text


def read_csv(path):
    """Return ``(metadata_lines, header, rows)`` of a file from :func:`write_csv`."""
    meta, body = [], []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                meta.append(line[1:].strip())
            else:
                body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    return meta, header, list(reader)
