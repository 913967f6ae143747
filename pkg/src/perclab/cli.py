"""Command line front end: ``perclab <command> [flags]``.

Commands: generate, embed, resolvent, slab, walk and experiment:<name> with
name in martingale, diffusion, slab-exit, heat-kernel, axis, time-change.
Values come from defaults, then an optional ``--config`` file of
``key = value`` lines, then flags; later sources win.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, fields

from . import experiments as ex
from . import persist
from .cluster import label_clusters
from .corrector import solve_dirichlet, solve_periodic, solve_resolvent, solve_slab
from .errors import BadValue, DataError, MissingSeed, NumericError, PerclabError, UnknownFlag, UsageError
from .lattice import BOUNDARIES, FREE, PERIODIC, SLAB, BoxGeometry, sample_config
from .svg import SvgStyle, render_embedding_svg, render_slab_svg
from .walks import run_agile, run_ctrw, run_lazy

EXPERIMENTS = ("martingale", "diffusion", "slab-exit", "heat-kernel", "axis", "time-change")
COMMANDS = ("generate", "embed", "resolvent", "slab", "walk") + tuple(f"experiment:{e}" for e in EXPERIMENTS)

DEFAULT_BOUNDARY = {
    "generate": FREE, "embed": FREE, "resolvent": PERIODIC, "slab": SLAB, "walk": PERIODIC,
    "experiment:martingale": PERIODIC, "experiment:diffusion": PERIODIC, "experiment:slab-exit": SLAB,
    "experiment:heat-kernel": PERIODIC, "experiment:axis": FREE, "experiment:time-change": PERIODIC,
}


@dataclass
class RunSpec:
    command: str
    d: int = 2
    side: int = 64
    boundary: str | None = None
    p: float = 0.75
    seed: int | None = None
    eps: float = 0.01
    tol: float = 1e-10
    replicates: int = 1000
    steps: int = 1000
    threads: int = 1
    out: str | None = None
    environments: int = 20
    mode: str = "exact"
    kind: str = "lazy"
    stroke_width: float = 0.15
    scale: float = 6.0

    def provenance(self) -> dict:
        """Serialized form embedded in artifacts; leaves out settings that cannot change results."""
        d = asdict(self)
        d.pop("threads")
        d.pop("out")
        return d

    @property
    def geometry(self) -> BoxGeometry:
        if self.boundary == SLAB:
            return BoxGeometry.slab(self.d, self.side // 2)
        return BoxGeometry(self.d, self.side, self.boundary)


_INT = {"d", "side", "seed", "replicates", "steps", "threads", "environments"}
_FLOAT = {"p", "eps", "tol", "stroke_width", "scale"}
_CHOICES = {"boundary": BOUNDARIES, "mode": ("exact", "tail"), "kind": ("lazy", "agile", "ctrw")}
_KEYS = [f.name for f in fields(RunSpec) if f.name != "command"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser() -> _Parser:
    ap = _Parser(prog="perclab", add_help=True, allow_abbrev=False,
                 description="Percolation clusters, correctors and random walks.")
    ap.add_argument("command", nargs="+", help="command, e.g. generate or experiment:diffusion")
    ap.add_argument("--config", help="file of key = value lines")
    ap.add_argument("-d", dest="d")
    ap.add_argument("-p", dest="p")
    for k in _KEYS:
        if k not in ("d", "p"):
            ap.add_argument("--" + k.replace("_", "-"), dest=k)
    return ap


def read_config_file(path) -> dict:
    vals = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise BadValue(line, f"line {n} of {path} is not key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            key = k.replace("-", "_")
            if key not in _KEYS:
                raise UnknownFlag(f"unknown key {k!r} in {path}")
            vals[key] = v
    return vals


def _convert(key, raw):
    if raw is None:
        return None
    try:
        if key in _INT:
            val = int(raw)
        elif key in _FLOAT:
            val = float(raw)
        else:
            val = str(raw)
    except ValueError:
        raise BadValue(raw, f"{key} expects a {'integer' if key in _INT else 'number'}") from None
    if key in _CHOICES and val not in _CHOICES[key]:
        raise BadValue(raw, f"{key} must be one of {', '.join(_CHOICES[key])}")
    if key == "p" and not 0.0 <= val <= 1.0:
        raise BadValue(raw, "p must lie in [0, 1]")
    if key in ("d", "side", "replicates", "threads", "environments") and val < 1:
        raise BadValue(raw, f"{key} must be positive")
    if key in ("steps", "seed") and val < 0:
        raise BadValue(raw, f"{key} must be non-negative")
    if key in ("eps", "tol", "scale", "stroke_width") and not val > 0:
        raise BadValue(raw, f"{key} must be positive")
    return val


def parse_run_spec(argv, config_file=None) -> RunSpec:
    """Build a RunSpec from command-line tokens and an optional config file."""
    args, extra = _parser().parse_known_args(list(argv))
    if extra:
        raise UnknownFlag(f"unknown flag {extra[0]!r}")
    words = args.command
    cmd = words[0] if len(words) == 1 else ":".join(words)
    if cmd not in COMMANDS:
        raise BadValue(cmd, f"unknown command; choose from {', '.join(COMMANDS)}")
    vals = {}
    for path in (config_file, args.config):
        if path:
            vals.update(read_config_file(path))
    for k in _KEYS:
        v = getattr(args, k)
        if v is not None:
            vals[k] = v
    if "out" not in vals and os.environ.get("PERCLAB_OUT"):
        vals["out"] = os.environ["PERCLAB_OUT"]
    spec = RunSpec(cmd, **{k: _convert(k, v) for k, v in vals.items()})
    if spec.boundary is None:
        spec.boundary = DEFAULT_BOUNDARY[cmd]
    if spec.seed is None:
        if cmd.startswith("experiment:"):
            raise MissingSeed(f"{cmd} needs an explicit --seed")
        spec.seed = 0
    return spec


# commands -----------------------------------------------------------------

def _emit(spec, name, text):
    path = persist.output_dir(spec.out) / name
    path.write_text(text)
    return path


def _style(spec):
    return SvgStyle(stroke_width=spec.stroke_width, scale=spec.scale)


def _environment(spec):
    if spec.boundary == SLAB:
        cfg, cl, _ = ex.sample_slab_environment(spec.d, spec.side // 2, spec.p, spec.seed, 0)
    else:
        cfg, cl, _ = ex.sample_environment(spec.geometry, spec.p, spec.seed, 0)
    return cfg, cl


def _field(spec, cfg, cl):
    if spec.boundary == PERIODIC:
        return solve_periodic(cfg, tol=spec.tol, cluster=cl)
    return solve_dirichlet(cl, tol=spec.tol)


def cmd_generate(spec):
    cfg = sample_config(spec.geometry, spec.p, spec.seed, threads=spec.threads)
    cl = label_clusters(cfg)
    out = persist.output_dir(spec.out)
    prov = spec.provenance()
    persist.save_config(out / "config.perc", cfg, prov)
    persist.export_cluster(out / "cluster.csv", cl, prov)
    persist.export_edges(out / "edges.csv", cl, prov)
    print(f"open bonds {cfg.open_count} of {cfg.geometry.bond_count}; giant cluster {cl.size} sites")


def _write_field(spec, cl, field):
    out = persist.output_dir(spec.out)
    prov = spec.provenance()
    persist.export_field(out / "field.csv", field, prov)
    if cl.d == 2:
        _emit(spec, "embedding.svg", render_embedding_svg(cl, field, _style(spec), prov))
    print(f"{field.method} corrector on {cl.size} sites, harmonicity residual {field.residual:.3e}")


def cmd_embed(spec):
    cfg = sample_config(spec.geometry, spec.p, spec.seed, threads=spec.threads)
    cl = label_clusters(cfg)
    _write_field(spec, cl, solve_dirichlet(cl, tol=spec.tol))


def cmd_resolvent(spec):
    cfg, cl = _environment(spec)
    _write_field(spec, cl, solve_resolvent(cfg, spec.eps, tol=spec.tol, cluster=cl))


def cmd_slab(spec):
    if spec.boundary != SLAB:
        raise DataError("slab needs --boundary slab")
    cfg, cl = _environment(spec)
    pot = solve_slab(cfg, cluster=cl)
    out = persist.output_dir(spec.out)
    prov = spec.provenance()
    persist.export_potential(out / "potential.csv", pot, prov)
    if cl.d == 2:
        _emit(spec, "slab.svg", render_slab_svg(pot, _style(spec), prov))
    summary = {"format_version": ex.FORMAT_VERSION, "run_spec": prov,
               "origin_potential": pot.origin_value, "top_probability": pot.top_probability}
    _emit(spec, "slab.json", json.dumps(summary, indent=2) + "\n")
    print(f"u(0) = {pot.origin_value!r}, P(top first) = {pot.top_probability!r}")


def cmd_walk(spec):
    cfg, cl = _environment(spec)
    if spec.kind == "lazy":
        path = run_lazy(cl, None, spec.steps, spec.seed)
    elif spec.kind == "agile":
        path = run_agile(cl, None, spec.steps, spec.seed)
    else:
        path = run_ctrw(cl, None, float(spec.steps), spec.seed)
    persist.export_path(persist.output_dir(spec.out) / "path.csv", path, spec.provenance())
    print(f"{spec.kind} walk: {len(path.sites) - 1} steps, {len(path.move_times) - 1} moves")


def run_experiment(spec) -> ex.ExperimentReport:
    name = spec.command.split(":", 1)[1]
    if name == "axis":
        g = BoxGeometry(spec.d, spec.side, spec.boundary)
        return ex.axis_statistics(g, spec.p, spec.environments, spec.seed, tol=spec.tol)
    cfg, cl = _environment(spec)
    if name == "slab-exit":
        return ex.slab_exit(cfg, spec.replicates, spec.seed, threads=spec.threads, cluster=cl)
    if name == "heat-kernel":
        if spec.mode == "tail":
            return ex.heat_kernel_tail(cl, spec.steps, spec.replicates, spec.seed, threads=spec.threads)
        n_list = sorted({max(1, spec.steps >> k) for k in range(5)})
        return ex.heat_kernel(cl, n_list)
    field = _field(spec, cfg, cl)
    if name == "martingale":
        return ex.martingale_check(cl, field)
    if name == "diffusion":
        return ex.estimate_diffusion(cl, field, spec.steps, spec.replicates, spec.seed, threads=spec.threads)
    return ex.time_change_check(cl, field, spec.steps, spec.replicates, spec.seed, threads=spec.threads)


def cmd_experiment(spec):
    rep = run_experiment(spec)
    rep.run_spec = spec.provenance()
    stem = spec.command.replace(":", "-")
    persist.save_report(persist.output_dir(spec.out) / f"{stem}.json", rep)
    _emit(spec, f"{stem}.txt", rep.to_text() + "\n")
    print(rep.to_text())


def execute(spec: RunSpec):
    if spec.command.startswith("experiment:"):
        return cmd_experiment(spec)
    return {"generate": cmd_generate, "embed": cmd_embed, "resolvent": cmd_resolvent,
            "slab": cmd_slab, "walk": cmd_walk}[spec.command](spec)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        spec = parse_run_spec(argv)
        execute(spec)
    except UsageError as exc:
        print(f"perclab: usage error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"perclab: numeric failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, PerclabError) as exc:
        print(f"perclab: data error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:      # geometry or parameter rejected by the library
        print(f"perclab: usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:      # --help
        return int(exc.code or 0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
