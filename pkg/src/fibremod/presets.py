"""Shipped parameter families, operator systems and main-example data."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .coupling import IntersectionData, fibre_seed
from .periods import ModelParams
from .series import rat
from .weyl import (OperatorError, PFSystemPreset, ShiftOp, holomorphic_solution, restrict)


class PresetError(KeyError):
    pass


@lru_cache(maxsize=1)
def raw_data() -> dict:
    text = resources.files("fibremod").joinpath("data/presets.json").read_text(encoding="utf-8")
    return json.loads(text)


@dataclass(frozen=True)
class ModelPreset:
    name: str
    params: ModelParams
    level: str
    description: str


@lru_cache(maxsize=1)
def model_presets() -> dict:
    """Each family for each shipped dimension, keyed ``<family><n>`` (e.g. ``main4``)."""
    data = raw_data()
    out = {}
    for fam in data["families"]:
        for n in data["dimensions"]:
            name = f"{fam['key']}{n}"
            out[name] = ModelPreset(name, ModelParams(n, fam["a0"], fam["a1"], fam["a2"]),
                                    fam["level"], fam["description"])
    return out


def get_model(name: str) -> ModelPreset:
    presets = model_presets()
    if name not in presets:
        raise PresetError(f"unknown preset {name!r}; available: {', '.join(sorted(presets))}")
    return presets[name]


# -- operator systems ---------------------------------------------------------------------------

@lru_cache(maxsize=1)
def operator_systems() -> tuple[PFSystemPreset, ...]:
    out = []
    for row in raw_data()["operator_systems"]:
        h = row["h"]
        names = list(row["generators"])
        gens = tuple(ShiftOp.parse(row["generators"][k], h) for k in names)
        limits = []
        for lim in row["limits"]:
            corrected = lim.get("corrected")
            limits.append((names.index(lim["generator"]), lim["keep"], ShiftOp.parse(lim["printed"], h),
                           ShiftOp.parse(corrected, h) if corrected else None))
        params = None
        if "model" in row:
            m = row["model"]
            params = (m["n"], rat(m["a0"]), rat(m["a1"]), rat(m["a2"]))
        notes = tuple(lim["note"] for lim in row["limits"] if "note" in lim)
        desc = f"{row['fold']}-fold, base {row['base']}, fibre {row['fibre']}"
        out.append(PFSystemPreset(f"row{row['row']}:{row['name']}", h, gens, tuple(limits), params, desc, notes))
    return tuple(out)


def operator_system(row: int) -> PFSystemPreset:
    systems = operator_systems()
    if not 0 <= row < len(systems):
        raise PresetError(f"operator system row {row} does not exist")
    return systems[row]


@dataclass
class LimitCheck:
    system: str
    generator: int
    keep: int
    restricted: ShiftOp
    printed_matches: bool
    corrected_matches: bool | None
    printed_annihilates: bool
    corrected_annihilates: bool | None

    @property
    def ok(self) -> bool:
        """The restriction agrees with the listed limit, or with its recorded correction."""
        if self.printed_matches:
            return self.printed_annihilates
        return bool(self.corrected_matches and self.corrected_annihilates)

    def to_json(self):
        return {"system": self.system, "generator": self.generator, "keep": self.keep,
                "restricted": self.restricted.to_text(), "printed_matches": self.printed_matches,
                "corrected_matches": self.corrected_matches, "printed_annihilates": self.printed_annihilates,
                "corrected_annihilates": self.corrected_annihilates, "ok": self.ok}


def _axis_series(coeffs: dict, h: int, keep: int, order: int) -> list:
    out = []
    for k in range(order + 1):
        e = tuple(k if i == keep - 1 else 0 for i in range(h))
        out.append(coeffs.get(e, rat(0)))
    return out


def _annihilates_univariate(op: ShiftOp, keep: int, series: list) -> bool:
    uni = op
    for axis in sorted((a for a in range(1, op.h + 1) if a != keep), reverse=True):
        uni = uni.drop_variable(axis)
    image = uni.apply_dense({(k,): c for k, c in enumerate(series) if c}, (len(series) - 1,))
    return not image


def limit_checks(system: PFSystemPreset, order: int = 10) -> list[LimitCheck]:
    """Restrict each generator to its own variable and compare with the listed limit.

    The listed (and corrected) limit must also annihilate the holomorphic
    solution of the full system along that variable.
    """
    out = []
    for gi, keep, printed, corrected in system.limits:
        others = [a for a in range(1, system.h + 1) if a != keep]
        r = restrict(system.generators[gi], others)
        caps = tuple(order if i == keep - 1 else 0 for i in range(system.h))
        try:
            series = _axis_series(holomorphic_solution(list(system.generators), caps), system.h, keep, order)
        except OperatorError:
            series = None

        def ann(op):
            if op is None:
                return None
            if series is None:
                return False
            try:
                return _annihilates_univariate(op, keep, series)
            except OperatorError:
                return False
        out.append(LimitCheck(system.name, gi, keep, r, r.equal_up_to_scale(printed),
                              None if corrected is None else r.equal_up_to_scale(corrected),
                              ann(printed), ann(corrected)))
    return out


# -- main-example data -----------------------------------------------------------------------

def intersection_data(name: str = "main4") -> IntersectionData:
    d = raw_data()["intersections"].get(name)
    if d is None:
        raise PresetError(f"no intersection data for {name!r}")
    quartic = {tuple(int(c) for c in k): v for k, v in d["quartic"].items()}
    basis = {g: {(int(k[0]), int(k[1])): rat(v) for k, v in b.items()} for g, b in d["gamma_basis"].items()}
    return IntersectionData(quartic, tuple(basis), basis, tuple(tuple(r) for r in d["pairing_inverse"]))


def seed_info(name: str = "main4") -> dict:
    d = raw_data()["seeds"].get(name)
    if d is None:
        raise PresetError(f"no three-point seeds for {name!r}")
    return d


def fibre_bps_rule(entry: dict):
    rule = entry["rule"]
    if rule == "zero":
        return lambda d: 0
    if rule == "linear":
        slope = rat(entry["slope"])
        return lambda d: slope * d
    raise PresetError(f"unknown fibre rule {rule!r}")


def three_point_seeds(name: str, order: int) -> dict:
    """``q2^0`` three-point functions ``seeds[gamma][(a, b)]`` as q1-series."""
    inter = intersection_data(name)
    info = seed_info(name)
    return {g: fibre_seed(inter, g, fibre_bps_rule(info[g]["fibre_bps"]), order) for g in inter.gamma_names}
