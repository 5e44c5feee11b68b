"""Command-line interface: ``fibremod {periods,gw,verify,fit,certify} ...``.

Exit codes: 0 success, 1 a mathematical check failed, 2 usage error.
All numbers are printed as exact rational strings.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

from .certify import certify
from .coupling import YUK_INDICES, CouplingError, main_example_yukawa
from .modular import LEVEL_OF_A0, LEVELS, FitError, UnderdeterminedFit, fit
from .periods import ModelParams, PeriodError, cached_periods, slice_constants
from .pipeline import (YUKAWA_SOURCES, PipelineError, fit_q2_row, fit_report, q2_row, run_couplings,
                       verify_suite)
from .presets import ModelPreset, PresetError, get_model, model_presets
from .series import QExp, SeriesError, rat, rat_str

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2
FORMATS = ("json", "csv", "text")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    preset: str | None = "main4"
    n: int | None = None
    a0: str | None = None
    a1: str | None = None
    a2: str | None = None
    d1: int = 12
    d2: int = 3
    q_order: int = 12
    t_order: int = 2
    gamma: str = "gamma1"
    yukawa: str = "derived"
    format: str | None = None
    out: str | None = None
    slice_constants: int | None = None
    certify_order: int | None = None
    perturb: str | None = None
    input: str | None = None
    source: str | None = None
    k: int = 1
    weight: list = field(default_factory=list)
    level: str | None = None
    eta_power: int = 0
    q_shift: int = 0
    max_e2: int = 0
    margin: int = 3

    def validate(self):
        for name in ("d1", "d2", "q_order", "t_order"):
            if int(getattr(self, name)) < 1:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        if self.format is not None and self.format not in FORMATS:
            raise UsageError(f"unknown format {self.format!r}")
        if self.yukawa not in YUKAWA_SOURCES:
            raise UsageError(f"unknown coupling source {self.yukawa!r}")
        if self.preset is not None and self.preset not in model_presets():
            raise UsageError(f"unknown preset {self.preset!r}; available: {', '.join(sorted(model_presets()))}")

    def model(self) -> ModelPreset:
        inline = [self.n, self.a0, self.a1, self.a2]
        if self.preset is None and any(v is None for v in inline):
            raise UsageError("give --preset or all of --n --a0 --a1 --a2")
        base = get_model(self.preset) if self.preset else None
        if all(v is None for v in inline):
            return base
        try:
            p = ModelParams(self.n if self.n is not None else base.params.n,
                            rat(self.a0) if self.a0 is not None else base.params.a0,
                            rat(self.a1) if self.a1 is not None else base.params.a1,
                            rat(self.a2) if self.a2 is not None else base.params.a2)
        except (ValueError, ZeroDivisionError, PeriodError) as exc:
            raise UsageError(f"invalid model parameters: {exc}") from exc
        for shipped in model_presets().values():
            if shipped.params == p:
                return shipped
        level = LEVEL_OF_A0.get(int(p.a0)) if p.a0.denominator == 1 else None
        return ModelPreset("custom", p, level or "unknown", "inline parameters")


# -- output helpers --------------------------------------------------------------------------

def _dump_json(data) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def _emit(cfg: RunConfig, text: str):
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _fmt(cfg: RunConfig, default: str) -> str:
    return cfg.format or default


# -- commands -----------------------------------------------------------------------------------

def cmd_periods(cfg: RunConfig) -> int:
    mp = cfg.model()
    caps = (cfg.d1, cfg.d2)
    if cfg.slice_constants is not None:
        caps = (max(cfg.d1, mp.params.n * cfg.slice_constants + 4), max(cfg.d2, cfg.slice_constants, 1))
    ps = cached_periods(mp.params, caps)
    slices = []
    if cfg.slice_constants is not None:
        if cfg.slice_constants < 0:
            raise UsageError("--slice-constants must be non-negative")
        slices = [slice_constants(mp.params, i, ps, with_field=False) for i in range(cfg.slice_constants + 1)]
    fmt = _fmt(cfg, "json")
    row = [rat_str(v) for v in ps.pi0.row(0)[: cfg.d1 + 1]]
    if fmt == "json":
        data = {"preset": mp.name, **ps.truncate((cfg.d1, cfg.d2)).to_json(), "Pi0_z1_row": row}
        if slices:
            data["slices"] = [s.to_json() for s in slices]
        _emit(cfg, _dump_json(data))
    elif fmt == "csv":
        lines = ["i\\j," + ",".join(str(j) for j in range(cfg.d2 + 1))]
        for i in range(cfg.d1 + 1):
            lines.append(f"{i}," + ",".join(rat_str(ps.pi0.c[i][j]) for j in range(cfg.d2 + 1)))
        if slices:
            lines.append("")
            lines.append("slice,c0,c1,c1_tilde")
            lines += [f"{s.i},{rat_str(s.c0)},{rat_str(s.c1)},{rat_str(s.c1_tilde)}" for s in slices]
        _emit(cfg, "\n".join(lines) + "\n")
    else:
        out = [f"preset {mp.name}: n={mp.params.n} a=({', '.join(rat_str(x) for x in mp.params.triple)})",
               "Pi0(z1, 0) = " + ", ".join(row)]
        out += [f"slice {s.i}: c0={rat_str(s.c0)} c1={rat_str(s.c1)} c1~={rat_str(s.c1_tilde)}" for s in slices]
        _emit(cfg, "\n".join(out) + "\n")
    return EXIT_OK


def cmd_gw(cfg: RunConfig) -> int:
    mp = cfg.model()
    if mp.name == "custom":
        raise UsageError("GW tables need intersection data; use --preset main4")
    run = run_couplings(mp, (cfg.d1, cfg.d2), cfg.yukawa)
    if cfg.gamma not in run.tables:
        raise UsageError(f"unknown class {cfg.gamma!r}; available: {', '.join(run.tables)}")
    table = run.tables[cfg.gamma]
    fmt = _fmt(cfg, "csv")
    if fmt == "json":
        _emit(cfg, _dump_json({"preset": mp.name, "caps": [cfg.d1, cfg.d2], "couplings": cfg.yukawa,
                               **table.to_json()}))
    else:
        text = table.to_csv(cfg.d1, cfg.d2)
        if fmt == "text":
            text = f"# n^0_(d1,d2)({cfg.gamma}), preset {mp.name}; row d2=0 from seed data\n" + text
        _emit(cfg, text)
    return EXIT_OK if table.multicover_ok() else EXIT_FAILED


def _parse_perturbation(text: str):
    """``i,j:a,b:delta`` adds ``delta z1^a z2^b`` to the numerator of ``W^(i,j)``."""
    try:
        m, mono, delta = text.split(":")
        m = tuple(int(x) for x in m.split(","))
        mono = tuple(int(x) for x in mono.split(","))
        delta = rat(delta)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad --perturb {text!r}; expected i,j:a,b:delta") from exc
    if m not in YUK_INDICES or len(mono) != 2 or min(mono) < 0:
        raise UsageError(f"bad --perturb {text!r}; index must be one of {YUK_INDICES}")
    return m, mono, delta


def cmd_verify(cfg: RunConfig) -> int:
    mp = cfg.model()
    if mp.name == "custom":
        raise UsageError("verify runs on shipped presets")
    yuk = None
    if cfg.perturb:
        if mp.name != "main4":
            raise UsageError("--perturb applies to the main4 couplings")
        m, mono, delta = _parse_perturbation(cfg.perturb)
        yuk = main_example_yukawa(corrected=True).perturb(m, mono, delta)
    report = verify_suite(mp.name, (cfg.d1, cfg.d2), modrep_order=cfg.q_order, certify_order=cfg.certify_order,
                          yukawa=yuk)
    fmt = _fmt(cfg, "text")
    if fmt == "json":
        _emit(cfg, _dump_json(report.to_json()))
    elif fmt == "csv":
        _emit(cfg, "check,ok,detail\n" + "".join(f"\"{c.name}\",{int(c.ok)},\"{c.detail}\"\n" for c in report.checks))
    else:
        _emit(cfg, report.to_text())
    return EXIT_OK if report.ok else EXIT_FAILED


def _read_series(path: str) -> QExp:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not JSON: {exc}") from exc
    try:
        if "coefficients" in data:
            return QExp([rat(v) for v in data["coefficients"]], int(data.get("min_exp", 0)),
                        int(data.get("base_den", 1)))
        return QExp.from_json(data)
    except (KeyError, TypeError, ValueError, ZeroDivisionError, SeriesError) as exc:
        raise UsageError(f"{path}: expected {{'coefficients': [...]}} or a serialized q-series ({exc})") from exc


def cmd_fit(cfg: RunConfig) -> int:
    if (cfg.input is None) == (cfg.source is None):
        raise UsageError("fit needs exactly one of --input FILE or --source {C2222,gamma1,gamma2}")
    if cfg.input is not None:
        if not cfg.weight:
            raise UsageError("--weight is required with --input")
        level = cfg.level or "SL2Z"
        if level not in LEVELS:
            raise UsageError(f"unknown level {level!r}; expected one of {LEVELS}")
        weight = cfg.weight if len(cfg.weight) > 1 else cfg.weight[0]
        result = fit(_read_series(cfg.input), weight, level, cfg.eta_power, cfg.q_shift, cfg.max_e2, cfg.margin)
    else:
        mp = cfg.model()
        if cfg.k < 1 or cfg.k > cfg.d2:
            raise UsageError(f"--k must lie in 1..{cfg.d2}")
        run = run_couplings(mp, (cfg.d1, cfg.d2), cfg.yukawa, t_order=cfg.k)
        if cfg.source == "C2222":
            row, weight = q2_row(run.C4[(2, 2, 2, 2)], cfg.k), (cfg.weight or [-2])
        elif cfg.source in run.solution.potential_rows:
            row = q2_row(run.solution.potential_rows[cfg.source][cfg.k], 0)
            weight = cfg.weight or ([-2, 0] if cfg.source == "gamma2" else [-2])
        else:
            raise UsageError(f"unknown --source {cfg.source!r}")
        result = fit_q2_row(row, cfg.k, mp.params.n, weight if len(weight) > 1 else weight[0],
                            max_E2_degree=max(cfg.max_e2, 1), margin=cfg.margin)
    fmt = _fmt(cfg, "text")
    if fmt == "json":
        _emit(cfg, _dump_json(result.to_json()))
    elif fmt == "csv":
        names = ["E2"] + result.generator_names
        lines = [",".join(names) + ",coefficient"]
        lines += [",".join(str(e) for e in b) + f",{rat_str(c)}" for b, c in result.terms().items()]
        _emit(cfg, "\n".join(lines) + "\n")
    else:
        _emit(cfg, str(result) + "\n")
    return EXIT_OK


def cmd_certify(cfg: RunConfig) -> int:
    mp = cfg.model()
    if mp.level not in LEVELS:
        raise UsageError("certification needs one of the four shipped parameter rows")
    cert = certify(mp.params, mp.level, cfg.certify_order or 32, cfg.t_order)
    fmt = _fmt(cfg, "text")
    if fmt == "json":
        _emit(cfg, _dump_json({"preset": mp.name, **cert.to_json()}))
    else:
        lines = [f"{'PASS' if e.ok else 'FAIL'} t^{e.i}: weight {e.weight}: " + (str(e.fit) if e.ok else e.error)
                 for e in cert.entries]
        _emit(cfg, "\n".join(lines) + "\n")
    if cert.ok:
        return EXIT_OK
    if all(e.underdetermined for e in cert.entries if not e.ok):
        print("error: too few q-coefficients for the fit; raise --certify-order", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_FAILED


COMMANDS = {"periods": cmd_periods, "gw": cmd_gw, "verify": cmd_verify, "fit": cmd_fit, "certify": cmd_certify}


# -- argument handling -------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("--preset", help="shipped model, e.g. main4, x643")
    p.add_argument("--n", type=int)
    p.add_argument("--a0")
    p.add_argument("--a1")
    p.add_argument("--a2")
    p.add_argument("--d1", type=int, help="z1 / q1 cap")
    p.add_argument("--d2", type=int, help="z2 / q2 cap")
    p.add_argument("--q-order", type=int, help="q-order of the modular identity checks (verify)")
    p.add_argument("--t-order", type=int)
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--out", help="write to this file instead of stdout")
    p.add_argument("--yukawa", choices=YUKAWA_SOURCES, help="source of the four-point couplings")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fibremod", description="Exact periods, couplings and modular fits "
                                     "for elliptically fibred Calabi-Yau families.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("periods", help="Frobenius periods and slice constants")
    _common(p)
    p.add_argument("--slice-constants", type=int, metavar="I", help="also report slice constants for i <= I")
    p = sub.add_parser("gw", help="genus-zero invariants as a d1 x d2 table")
    _common(p)
    p.add_argument("--gamma", help="middle-cohomology class (gamma1, gamma2)")
    p = sub.add_parser("verify", help="run the invariant suite")
    _common(p)
    p.add_argument("--certify-order", type=int, help="also certify the t-expansion to this q1-order")
    p.add_argument("--perturb", metavar="i,j:a,b:delta", help="perturb a numerator coefficient of W^(i,j)")
    p = sub.add_parser("fit", help="fit a q-series by quasi-modular forms")
    _common(p)
    p.add_argument("--input", help="JSON series file")
    p.add_argument("--source", help="fit a computed row: C2222, gamma1 or gamma2")
    p.add_argument("--k", type=int, help="q2-order of the computed row")
    p.add_argument("--weight", type=int, action="append", help="weight (repeat for mixed weights)")
    p.add_argument("--level", choices=LEVELS)
    p.add_argument("--eta-power", type=int)
    p.add_argument("--q-shift", type=int)
    p.add_argument("--max-e2", type=int)
    p.add_argument("--margin", type=int)
    p = sub.add_parser("certify", help="quasi-modularity of the t-expansion coefficients")
    _common(p)
    p.add_argument("--certify-order", type=int, help="q1-order of the fits (default 32)")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        try:
            values = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(values, dict):
            raise UsageError("config file must hold a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key, val in vars(args).items():
        if key in known and val is not None:
            values[key] = val
    # fully inline parameters replace the default preset
    if args.preset is None and "preset" not in values and all(values.get(k) is not None for k in ("n", "a0", "a1", "a2")):
        values["preset"] = None
    values["command"] = args.command
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except (UsageError, PresetError, UnderdeterminedFit, PipelineError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (FitError, CouplingError, PeriodError, SeriesError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
