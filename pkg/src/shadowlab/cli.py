"""Command-line front end.

Every artifact embeds the run configuration and carries no timestamps, so a
repeated run with the same configuration and seed is byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import ConfigError, InvalidArgument, ShadowlabError

SCHEMA = "shadowlab/1"
SUBCOMMANDS = ("entropy", "mdim", "chainrec", "construct", "audit", "shadow")


class IOFailure(ShadowlabError, OSError):
    code = "io-error"


@dataclass
class RunConfig:
    command: str
    system: Any = "builtin:full_shift2"
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str | None = None
    format: str = "json"

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("out")  # the destination does not affect the content
        return d


def threads() -> int:
    """Parallelism cap from ``SHADOWLAB_THREADS`` (default 1)."""
    raw = os.environ.get("SHADOWLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError("SHADOWLAB_THREADS must be a positive integer", value=raw) from None
    if n < 1:
        raise ConfigError("SHADOWLAB_THREADS must be a positive integer", value=raw)
    return n


# --------------------------------------------------------------------------
# emission
# --------------------------------------------------------------------------


def _plain(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (tuple, set, frozenset)):
        return list(x)
    return str(x)


def _finite(obj):
    """Replace non-finite floats by strings so the JSON stays standard."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def render_json(config: RunConfig, result: dict) -> str:
    doc = {"schema": SCHEMA, "config": config.to_json(), "result": result}
    doc = json.loads(json.dumps(doc, default=_plain))
    return json.dumps(_finite(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def render_csv(config: RunConfig, columns: Sequence[str], rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    header = json.dumps(config.to_json(), sort_keys=True, default=_plain)
    buf.write(f"# schema: {SCHEMA}\n# config: {header}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c, "")) for c in columns])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (np.floating, np.integer)):
        return _cell(v.item())
    return v


def emit(config: RunConfig, result: dict, columns: Sequence[str], rows: Sequence[dict]) -> str:
    """Render in the configured format and write to ``config.out`` (or return for stdout)."""
    if config.format == "csv":
        text = render_csv(config, columns, rows)
    elif config.format == "json":
        text = render_json(config, result)
    else:
        raise InvalidArgument(f"unknown format {config.format!r}")
    if config.out:
        path = Path(config.out)
        try:
            path.mkdir(parents=True, exist_ok=True)
            (path / f"{config.command}.{config.format}").write_text(text)
        except OSError as exc:
            raise IOFailure(f"cannot write to {config.out}: {exc.strerror}", path=str(config.out)) from exc
    return text


# --------------------------------------------------------------------------
# subcommands: each returns (result, csv columns, csv rows)
# --------------------------------------------------------------------------


def _eps_list(p: dict) -> list[float]:
    eps = p.get("eps_list") or ([p["eps"]] if p.get("eps") is not None else None)
    if not eps:
        raise InvalidArgument("give --eps or --eps-list")
    out = [float(e) for e in eps]
    if any(not e > 0 for e in out):
        raise InvalidArgument("eps must be positive", eps=out)
    return out


def _n_range(p: dict) -> list[int]:
    lo, hi = int(p.get("n_min", 1)), int(p.get("n_max", 8))
    if not 1 <= lo <= hi:
        raise InvalidArgument("need 1 <= n_min <= n_max", n_min=lo, n_max=hi)
    return list(range(lo, hi + 1))


PROFILE_COLUMNS = ("eps", "n", "separated", "cover", "rate", "ratio", "mode")


def cmd_entropy(cfg: RunConfig) -> tuple:
    from .core_spaces import load_system
    from .entropy_mdim import entropy_profile

    system = load_system(cfg.system)
    p = cfg.params
    prof = entropy_profile(system, _eps_list(p), _n_range(p), p.get("mode", "exact"))
    rows = prof.table()
    result = {"rows": rows, "h": {repr(e): h for e, h in sorted(prof.h.items(), reverse=True)}}
    return result, PROFILE_COLUMNS, rows


def cmd_mdim(cfg: RunConfig) -> tuple:
    from .core_spaces import load_system
    from .entropy_mdim import box_shift_for, entropy_profile, matched_profile, mdim_profile

    p = cfg.params
    ns = _n_range(p)
    if p.get("matched"):
        # one box shift per scale, levels matched to eps
        if load_system(cfg.system).kind != "box_shift":
            raise InvalidArgument("matched profiles are defined for box shifts")
        prof = matched_profile(box_shift_for, _eps_list(p), ns, p.get("mode", "exact"))
    else:
        prof = entropy_profile(load_system(cfg.system), _eps_list(p), ns, p.get("mode", "exact"), with_cover=False)
    upper, lower, table = mdim_profile(prof)
    mode = p.get("mode", "exact")
    rows = [{**r, "n": ns[-1], "mode": mode} for r in table]
    return {"upper": upper, "lower": lower, "table": rows}, ("eps", "n", "h", "ratio", "mode"), rows


def cmd_chainrec(cfg: RunConfig) -> tuple:
    from .chain_recurrence import build_chain_graph, chain_classes, classes_json
    from .core_spaces import load_system

    system = load_system(cfg.system)
    p = cfg.params
    eps = _eps_list(p)[0]
    res = float(p.get("resolution", eps / 2))
    graph = build_chain_graph(system, res, eps)
    dec = chain_classes(graph)
    doc = classes_json(graph, system, dec)
    rows = [
        {"eps": eps, "resolution": res, "class": c, "node": system.point_to_json(graph.nodes[i])}
        for c, cls in enumerate(dec.classes)
        for i in cls
    ]
    result = {**doc, "class_count": len(dec), "nodes": graph.size, "recurrent": len(dec.recurrent_nodes)}
    return result, ("eps", "resolution", "class", "node"), rows


def _construction(cfg: RunConfig):
    from .core_spaces import load_system, parse_shift_point
    from .irregular_construction import PRESETS, setup_construction, symbol_values
    from .measures_birkhoff import PointMassGenerator, bernoulli, coordinate, parry

    p = cfg.params
    preset = PRESETS.get(p.get("preset", "toy_full_shift2"))
    if preset is None:
        raise InvalidArgument(f"unknown preset {p.get('preset')!r}", known=sorted(PRESETS))
    spec = {**preset, **{k: v for k, v in p.items() if k in preset}}
    system = load_system(spec["system"])
    obs = coordinate(0, system)

    def gen(s):
        kind = s.get("kind")
        if kind == "bernoulli":
            return bernoulli(system, s.get("probs"))
        if kind == "parry":
            return parry(system)
        if kind == "point":
            return PointMassGenerator(system, parse_shift_point(s["point"]))
        raise InvalidArgument(f"unknown measure kind {kind!r}")

    mu1, mu2 = gen(spec["mu1"]), gen(spec["mu2"])
    alpha, beta = float(mu1.integral(obs)), float(mu2.integral(obs))
    eps = float(p.get("eps", spec["eps_profile"][0]))
    config = setup_construction(
        system, symbol_values(system, obs), alpha, beta, mu2.x, eps, float(spec["gamma"]),
        float(spec["eta"]), float(spec["xi0"]), float(spec["tau"]), float(obs.bound) + abs(beta),
    )
    return spec, config


def cmd_construct(cfg: RunConfig) -> tuple:
    from .irregular_construction import _averages, build_family, child_seed, miniature, verify_claims_BC

    p = cfg.params
    spec, config = _construction(cfg)
    if p.get("miniature"):
        config = miniature(config, *p.get("miniature_sizes", (2, 3)))
    k_max = int(p.get("k_max", 2))
    fam = build_family(config, k_max, mode=p.get("family_mode", "auto"), sample_size=int(p.get("sample_size", 4)),
                       seed=child_seed(cfg.seed, "family"))
    claims = verify_claims_BC(fam, tol=float(p.get("tol", 0.05)))
    horizon = claims["window"][1]
    stride = int(p.get("stride", 16))
    phi = config.ingredients.E_L.words.phi
    rows = []
    for k, lv in sorted(fam.levels.items()):
        for i in range(len(lv)):
            A = _averages(lv.symbols[i], phi, horizon)
            for n in range(stride, horizon + 1, stride):
                rows.append({"eps": config.eps, "n": n, "mode": fam.mode, "level": k, "member": i, "average": float(A[n - 1])})
    result = {
        "constants": config.constants(),
        "invariants": config.invariants(),
        "ingredients": config.ingredients.summary(),
        "family": fam.to_json(),
        "claims_bc": claims,
    }
    return result, ("eps", "n", "mode", "level", "member", "average"), rows


def cmd_audit(cfg: RunConfig) -> tuple:
    from .irregular_construction import audit_preset

    p = dict(cfg.params)
    name = p.pop("preset", "toy_full_shift2")
    if "eps_list" in p:
        p["eps_profile"] = p.pop("eps_list")
    p.pop("eps", None)
    p["seed"] = cfg.seed
    report = audit_preset(name, p)
    rows = [
        {**{k: v for k, v in s.items()}, "n": report["config"]["n_range"][1], "mode": "exact"}
        for s in report["verdicts"]["per_scale"]
    ]
    cols = ("eps", "n", "mode", "h_est_Y_4eps", "certified_family_eps_over_2", "slack", "a",
            "unique_chain_class", "irregular", "refutes_s10")
    return report, cols, rows


def cmd_shadow(cfg: RunConfig) -> tuple:
    from .core_spaces import load_system
    from .shadowing import PseudoOrbit, minimal_shadow, shadow_point, traces, unroll, validate_pseudo_orbit

    system = load_system(cfg.system)
    p = cfg.params
    if "points" not in p or "delta" not in p:
        raise InvalidArgument("shadow needs 'points' and 'delta' in the config")
    po = PseudoOrbit.from_json(system, p)
    eps = _eps_list(p)[0]
    if not validate_pseudo_orbit(system, po.points, po.delta, po.period):
        raise InvalidArgument("input is not a delta-pseudo-orbit", delta=po.delta)
    if po.period is not None:
        y = minimal_shadow(system, po, eps)
        ok = traces(system, y, unroll(po, 2 * po.period), eps)
    else:
        y = shadow_point(system, po, eps)
        ok = traces(system, y, po.points, eps)
    result = {"shadow": system.point_to_json(y), "traces": ok, "eps": eps, "delta": po.delta}
    return result, ("eps", "n", "mode", "shadow", "traces"), [
        {"eps": eps, "n": len(po), "mode": "periodic" if po.period else "finite", "shadow": result["shadow"], "traces": ok}
    ]


COMMANDS = {
    "entropy": cmd_entropy, "mdim": cmd_mdim, "chainrec": cmd_chainrec,
    "construct": cmd_construct, "audit": cmd_audit, "shadow": cmd_shadow,
}


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidArgument(message)


def _parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="shadowlab", description="Desk-scale entropy, shadowing and irregular-set experiments.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--system")
        sp.add_argument("--config", help="JSON file with parameters; flags override it")
        sp.add_argument("--eps", type=float)
        sp.add_argument("--eps-list", type=lambda s: [float(x) for x in s.split(",") if x])
        sp.add_argument("--n-min", type=int)
        sp.add_argument("--n-max", type=int)
        sp.add_argument("--mode", choices=("exact", "greedy"))
        sp.add_argument("--resolution", type=float)
        sp.add_argument("--preset")
        sp.add_argument("--matched", action="store_true", default=None,
                        help="mdim on box shifts: match the level count to each eps")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("csv", "json"))
    return ap


def _load_config_file(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}", path="") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc.msg}", path="", line=exc.lineno) from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object", path="")
    return doc


def build_run_config(argv: Sequence[str]) -> RunConfig:
    args = _parser().parse_args(list(argv))
    doc = _load_config_file(args.config) if args.config else {}
    params = dict(doc.get("params", {}))
    params.update({k: v for k, v in doc.items() if k not in ("params", "system", "seed", "format", "out")})
    for key in ("eps", "eps_list", "n_min", "n_max", "mode", "resolution", "preset", "matched"):
        v = getattr(args, key)
        if v is not None:
            params[key] = v
    seed = args.seed if args.seed is not None else doc.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be a 64-bit nonnegative integer", path="/seed")
    system = args.system or doc.get("system", "builtin:full_shift2")
    if args.command in ("construct", "audit"):
        from .irregular_construction import PRESETS

        name = params.get("preset", "toy_full_shift2")
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}", path="/preset", known=sorted(PRESETS))
        if (args.system or doc.get("system")) and system != PRESETS[name]["system"]:
            raise ConfigError("the system of a construction is fixed by its preset", path="/system")
        system = PRESETS[name]["system"]
    return RunConfig(
        command=args.command,
        system=system,
        params=params,
        seed=seed,
        out=args.out or doc.get("out"),
        format=args.format or doc.get("format", "json"),
    )


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    """Execute one subcommand; 0 on success, 2 on validation errors (JSON on stderr)."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    argv = sys.argv[1:] if argv is None else argv
    try:
        threads()
        cfg = build_run_config(argv)
        result, columns, rows = COMMANDS[cfg.command](cfg)
        text = emit(cfg, result, columns, rows)
    except ShadowlabError as exc:
        stderr.write(json.dumps(exc.to_dict(), sort_keys=True, default=_plain) + "\n")
        return 2
    except (ValueError, KeyError, TypeError) as exc:
        stderr.write(json.dumps({"error": "invalid-argument", "message": str(exc)}, sort_keys=True) + "\n")
        return 2
    if not cfg.out:
        stdout.write(text)
    return 0


def main() -> None:
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream reader closed early (e.g. `| head`); not an error of ours
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 0
    sys.exit(code)


if __name__ == "__main__":
    main()
