"""Text specifications of norms and domains.

Norms: ``euclidean``, ``quadratic:a11,a12,a21,a22``, ``pnorm:q`` or
``pnorm:q,eps``.  A TOML table ``{family = "quadratic", matrix = [[4, 0], [0, 1]]}``
is accepted as well.

Domains: ``square[:side]``, ``rect:w,h``, ``triangle[:area]``,
``ellipse:a,b[,m]``, ``disk[:R[,m]]``, ``regular:k[,R]``, ``wulff[:R[,m]]``
(Wulff polygon of the selected norm) and ``file:PATH``.
"""

import numpy as np

from . import geometry
from .errors import InputError
from .norms import Euclidean, Quadratic, SmoothedPNorm

__all__ = ["parse_norm", "parse_domain", "norm_label"]


def _numbers(text, what):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"malformed {what} parameters {text!r}") from None


def parse_norm(spec):
    if isinstance(spec, dict):
        family = spec.get("family")
        extra = set(spec) - {"family", "matrix", "q", "eps_reg", "dim"}
        if extra:
            raise InputError(f"unknown norm key(s): {', '.join(sorted(extra))}")
        if family == "euclidean":
            return Euclidean(int(spec.get("dim", 2)))
        if family == "quadratic":
            if "matrix" not in spec:
                raise InputError("quadratic norm needs 'matrix'")
            return Quadratic(spec["matrix"])
        if family == "pnorm":
            if "q" not in spec:
                raise InputError("pnorm needs 'q'")
            return SmoothedPNorm(spec["q"], spec.get("eps_reg", 0.0), int(spec.get("dim", 2)))
        raise InputError(f"unknown norm family {family!r} (expected euclidean, quadratic or pnorm)")

    if not isinstance(spec, str):
        raise InputError(f"norm must be a string or table, got {type(spec).__name__}")
    name, _, args = spec.strip().partition(":")
    name = name.lower()
    if name == "euclidean" and not args:
        return Euclidean()
    if name == "quadratic":
        vals = _numbers(args, "quadratic")
        k = int(round(np.sqrt(len(vals))))
        if k * k != len(vals) or k < 2:
            raise InputError(f"quadratic norm needs k*k matrix entries, got {len(vals)}")
        return Quadratic(np.reshape(vals, (k, k)))
    if name == "pnorm":
        vals = _numbers(args, "pnorm")
        if len(vals) not in (1, 2):
            raise InputError("pnorm takes q or q,eps")
        return SmoothedPNorm(*vals)
    raise InputError(f"malformed norm spec {spec!r} (expected euclidean, quadratic:a,b,c,d or pnorm:q)")


def norm_label(H):
    cfg = H.to_config()
    if cfg["family"] == "euclidean":
        return "euclidean"
    if cfg["family"] == "quadratic":
        return "quadratic:" + ",".join(f"{v:g}" for v in np.ravel(cfg["matrix"]))
    eps = f",{cfg['eps_reg']:g}" if cfg["eps_reg"] else ""
    return f"pnorm:{cfg['q']:g}{eps}"


def parse_domain(spec, H=None):
    if not isinstance(spec, str):
        raise InputError("domain must be a string")
    name, _, args = spec.strip().partition(":")
    name = name.lower()
    if name == "file":
        if not args:
            raise InputError("file domain needs a path")
        return geometry.read_domain(args)
    vals = _numbers(args, name)

    def need(lo, hi):
        if not lo <= len(vals) <= hi:
            raise InputError(f"domain {name!r} takes {lo}..{hi} parameters, got {len(vals)}")

    if name == "square":
        need(0, 1)
        return geometry.square(*vals)
    if name in ("rect", "rectangle"):
        need(2, 2)
        return geometry.rectangle(*vals)
    if name == "triangle":
        need(0, 1)
        return geometry.equilateral_triangle(*vals)
    if name == "ellipse":
        need(2, 3)
        m = int(vals[2]) if len(vals) == 3 else 512
        return geometry.ellipse(vals[0], vals[1], m)
    if name == "disk":
        need(0, 2)
        R = vals[0] if vals else 1.0
        m = int(vals[1]) if len(vals) == 2 else 512
        return geometry.ellipse(R, R, m)
    if name == "regular":
        need(1, 2)
        return geometry.regular_polygon(int(vals[0]), *vals[1:])
    if name == "wulff":
        need(0, 2)
        if H is None:
            raise InputError("wulff domain needs a norm")
        R = vals[0] if vals else 1.0
        m = int(vals[1]) if len(vals) == 2 else 512
        return geometry.wulff_polygon(H, R, m=m)
    raise InputError(f"unknown domain {spec!r}")
