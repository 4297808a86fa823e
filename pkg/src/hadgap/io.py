"""JSON formats for point sets, gap series and witness families.

Floats are written with ``repr`` precision by the json module, so every
round trip is bit-exact.  Points are stored as flat rows of ``2n`` reals
``(Re z1, Im z1, Re z2, ...)``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .polyseries import GapSeries, GapTerm, Polynomial, ZonalPolynomial
from .sphere import SeparatedSet, to_real_rows
from .witness import Level, WitnessFamily, WitnessParams


def _rows_to_complex(rows, dim):
    arr = np.asarray(rows, dtype=float).reshape(-1, 2 * dim)
    return arr[:, 0::2] + 1j * arr[:, 1::2]


def separated_set_to_dict(g: SeparatedSet):
    return {"dim": g.dim, "separation": g.separation, "maximal": g.maximal, "seed": g.seed,
            "degenerate": g.degenerate, "meta": g.meta,
            "points": to_real_rows(g.points).tolist() if len(g) else []}


def separated_set_from_dict(d):
    dim = int(d["dim"])
    return SeparatedSet(_rows_to_complex(d["points"], dim), float(d["separation"]), dim,
                        maximal=bool(d.get("maximal", False)), seed=d.get("seed"),
                        degenerate=bool(d.get("degenerate", False)), meta=dict(d.get("meta") or {}))


def dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())


# -- series --------------------------------------------------------------------------------


def poly_from_config(cfg, dim):
    kind = cfg.get("kind", "zonal")
    if kind == "zonal":
        centers = _rows_to_complex(cfg["centers"], dim)
        coeffs = cfg.get("coeffs")
        if coeffs is not None:
            coeffs = np.array([complex(*c) if isinstance(c, (list, tuple)) else complex(c)
                               for c in coeffs])
        return ZonalPolynomial(int(cfg["degree"]), centers, coeffs)
    if kind == "monomial":
        return Polynomial.from_config(cfg["terms"], dim)
    raise ValueError(f"unknown polynomial kind {kind!r}")


def series_from_config(cfg):
    """``{"dim": n, "terms": [{"kind": "zonal", "degree": k, "centers": [...]}, ...]}``."""
    dim = int(cfg["dim"])
    terms = []
    for t in cfg["terms"]:
        poly = poly_from_config(t, dim)
        terms.append(GapTerm(poly.degree, poly, t.get("supnorm_hint")))
    return GapSeries(tuple(terms), gap_ratio=cfg.get("gap_ratio"),
                     continuation_sup=cfg.get("continuation_sup"))


# -- witness families ---------------------------------------------------------------------------


def _level_name(kind, j, v):
    return f"{kind}_j{j}_v{v}.json"


def save_family(fam: WitnessFamily, out_dir):
    out = Path(out_dir)
    (out / "levels").mkdir(parents=True, exist_ok=True)
    dump_json({"params": fam.params.to_config(), "seed": fam.seed, "budget": fam.budget},
              out / "params.json")
    series = []
    for (kind, j, v), lv in sorted(fam.levels.items()):
        d = {"kind": kind, "j": j, "v": v, "exponent": lv.exponent, "degree": str(lv.degree),
             "delta": lv.delta, "status": lv.status, "under_separated": lv.under_separated,
             "coarse": lv.coarse, "sampled_sup": list(lv.sampled_sup)}
        if lv.constructed:
            d["union"] = separated_set_to_dict(lv.union)
            d["labels"] = lv.labels.tolist()
        dump_json(d, out / "levels" / _level_name(kind, j, v))
    M = fam.params.M
    for kind in ("g", "h"):
        for i in range(1, M + 1):
            for j in range(1, M + 1):
                l = fam.class_index(i, j)
                rows = []
                for v in range(fam.params.depth + 1):
                    lv = fam.levels[(kind, j, v)]
                    rows.append({"v": v, "degree": str(lv.degree), "status": lv.status,
                                 "log_coefficient": fam.coefficient_log(lv.degree),
                                 "class": l,
                                 "class_size": lv.class_size(l) if lv.constructed else None,
                                 "level_file": f"levels/{_level_name(kind, j, v)}"})
                series.append({"series": f"{kind}[{i},{j}]", "kind": kind, "i": i, "j": j,
                               "terms": rows})
    dump_json({"series": series}, out / "manifest.json")
    return out


def load_family(in_dir):
    src = Path(in_dir)
    head = load_json(src / "params.json")
    params = WitnessParams.from_config(head["params"])
    levels = {}
    for kind in ("g", "h"):
        for v in range(params.depth + 1):
            for j in range(1, params.M + 1):
                d = load_json(src / "levels" / _level_name(kind, j, v))
                union = separated_set_from_dict(d["union"]) if "union" in d else None
                labels = np.asarray(d["labels"], dtype=int) if "labels" in d else None
                levels[(kind, j, v)] = Level(
                    kind=kind, j=j, v=v, exponent=int(d["exponent"]), degree=int(d["degree"]),
                    delta=float(d["delta"]), union=union, labels=labels, status=d["status"],
                    under_separated=bool(d["under_separated"]), coarse=bool(d["coarse"]),
                    sampled_sup=tuple(d.get("sampled_sup", ())))
    return WitnessFamily(params, levels, seed=int(head["seed"]), budget=int(head["budget"]))
