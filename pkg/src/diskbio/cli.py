"""Batch command-line front end: ``diskbio {eigs,mesh,assemble,verify,precond}``.

Exit codes: 0 success, 1 an identity check exceeded its tolerance, 2 usage
or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2

SUITES = ("kernels", "wolfe", "krenk", "vbar", "wbar", "wbar1", "calderon")
DEFAULT_TOL = {"kernels": None, "wolfe": 1e-4, "krenk": 1e-3, "vbar": 1e-3, "wbar": 1e-3,
               "wbar1": 1e-8, "calderon": 0.10}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Run parameters; every field can be set in a ``key = value`` file."""

    subcommand: str | None = None
    a: float = 1.0
    levels: list[int] = field(default_factory=lambda: [2, 3, 4, 5])
    level: int = 3
    regular_order: int = 4
    singular_order: int = 5
    n_r: int = 64
    n_theta: int = 128
    l_max: int = 10
    tol: float | None = None
    out: str | None = None

    def validate(self):
        if not self.a > 0:
            raise ConfigError("a must be positive")
        if not 1 <= self.regular_order <= 10:
            raise ConfigError("regular_order must lie in 1..10")
        if not 2 <= self.singular_order <= 8:
            raise ConfigError("singular_order must lie in 2..8")
        if self.n_r < 1 or self.n_theta < 1:
            raise ConfigError("n_r and n_theta must be positive")
        if self.level < 0 or any(lv < 0 for lv in self.levels):
            raise ConfigError("levels must be non-negative")
        if not 0 <= self.l_max <= 10_000:
            raise ConfigError("l_max must lie in 0..10000")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError("tol must be positive")
        return self


def _parse_levels(text: str) -> list[int]:
    text = text.strip()
    if "-" in text and "," not in text:
        lo, hi = text.split("-")
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.replace(" ", "").split(",") if t]


_PARSERS = {
    "a": float, "levels": _parse_levels, "level": int, "regular_order": int,
    "singular_order": int, "n_r": int, "n_theta": int, "l_max": int,
    "tol": float, "out": str,
}


def load_config(path) -> RunConfig:
    """Parse a ``key = value`` file (``#`` starts a comment); unknown keys are errors."""
    cfg = RunConfig()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in _PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
            try:
                setattr(cfg, key, _PARSERS[key](value))
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for '{key}': {value!r}") from exc
    return cfg.validate()


def _g(x) -> str:
    return format(float(x), ".17g")


def _apply_threads():
    env = os.environ.get("DISKBIO_THREADS", "").strip()
    if not env:
        return
    try:
        n = int(env)
    except ValueError as exc:
        raise ConfigError(f"DISKBIO_THREADS must be an integer, got {env!r}") from exc
    if n < 0:
        raise ConfigError("DISKBIO_THREADS must be >= 0")
    if n > 0:
        import numba
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _writer(path):
    if path in (None, "-"):
        return sys.stdout, False
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return open(path, "w", newline="", encoding="utf-8"), True


# ------------------------------------------------------------------ commands


def cmd_eigs(cfg: RunConfig, args) -> int:
    from .specfun import DomainError, lam, lambda_recursion_residual

    fh, close = _writer(cfg.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["l", "m", "lambda", "recursion_residual"])
        for l in range(cfg.l_max + 1):
            for m in range(-l, l + 1):
                try:
                    res = _g(lambda_recursion_residual((l, m)))
                except DomainError:
                    res = "nan"
                w.writerow([l, m, _g(lam((l, m))), res])
    finally:
        if close:
            fh.close()
    return EXIT_OK


def cmd_mesh(cfg: RunConfig, args) -> int:
    from .diskgeom import mesh_disk

    mesh = mesh_disk(cfg.a, cfg.level)
    out = Path(cfg.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "vertices.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "x", "y", "boundary"])
        for i, ((x, y), b) in enumerate(zip(mesh.vertices, mesh.boundary_vertex)):
            w.writerow([i, _g(x), _g(y), int(b)])
    with open(out / "triangles.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "v0", "v1", "v2"])
        for i, t in enumerate(mesh.triangles):
            w.writerow([i, *map(int, t)])
    return EXIT_OK


def _quad(cfg):
    from .assembly import QuadConfig
    return QuadConfig(regular_order=cfg.regular_order, singular_order=cfg.singular_order,
                      n_r=cfg.n_r, n_theta=cfg.n_theta)


def cmd_assemble(cfg: RunConfig, args) -> int:
    from . import assembly as asm
    from .diskgeom import mesh_disk

    if cfg.out is None:
        raise ConfigError("assemble needs --out")
    mesh = mesh_disk(cfg.a, cfg.level)
    quad = _quad(cfg)
    op = args.operator
    default_space = {"V": "P0", "Vbar": "P0", "W": "P1_0", "Wbar": "P1", "mass": "P1"}[op]
    space = asm.FunctionSpace(args.space or default_space, mesh)
    if op == "V":
        G = asm.assemble_single_layer(mesh, space, quad)
    elif op == "Vbar":
        G = asm.assemble_mod_single_layer(mesh, space, quad)
    elif op == "W":
        G = asm.assemble_hypersingular(mesh, space, quad)
    elif op == "Wbar":
        G = asm.assemble_mod_hypersingular(mesh, space, quad)
    else:
        G = asm.GalerkinMatrix("mass", space, space, asm.assemble_mass(mesh, space, space),
                               mesh.level, mesh.a)
    asm.write_matrix(cfg.out, G)
    return EXIT_OK


# verify ---------------------------------------------------------------------

KERNEL_PAIRS = [((0.2, 0.0), (0.6, np.pi / 2)), ((0.1, 1.0), (0.5, 3.0)), ((0.4, 0.2), (0.3, 4.0)),
                ((0.5, 5.0), (0.7, 2.0)), ((0.0, 0.0), (0.6, 1.0))]
ORACLE_PAIRS = [((0.3, 0.0), (0.5, 1.0)), ((0.0, 0.0), (0.4, 2.0)), ((0.2, 0.0), (0.4, 2.0)),
                ((0.45, 0.3), (0.45, 2.5)), ((0.7, 1.0), (0.1, 4.0))]
EVAL_POINTS = [(0.3, 0.9), (0.5, 2.0), (0.7, 4.0)]
WOLFE_MODES = [(0, 0), (2, 0), (2, 2), (3, 1), (4, 0)]
VBAR_MODES = [(l, m) for l in range(5) for m in range(-l, l + 1) if (l + m) % 2]
KRENK_PAIRS = [((1, 0), (1, 0)), ((1, 0), (2, 1)), ((1, 0), (3, 0)), ((2, 1), (2, 1)),
               ((3, 0), (3, 0)), ((3, 2), (3, 2)), ((4, 1), (4, 1)), ((4, 3), (4, 3)), ((5, 0), (5, 0))]
WBAR_PAIRS = [((0, 0), (0, 0)), ((2, 0), (2, 0)), ((2, 0), (0, 0)), ((3, 1), (3, 1)),
              ((4, 0), (4, 0)), ((4, 2), (4, 2)), ((1, 1), (1, 1)), ((2, 2), (2, 2))]


def _kernel_rows():
    from .kernels import KernelConfig, kernel_eval, kernel_series_abel, li_rong_alpha1, primitive_check_vbar
    from .specfun import PolarPoint

    cfg = KernelConfig()
    rows = []
    for xp, yp in KERNEL_PAIRS:
        x, y = PolarPoint(*xp), PolarPoint(*yp)
        for kind in ("V", "Vbar"):
            ref = kernel_eval(kind, cfg, x, y)
            val = kernel_series_abel(kind, x, y)
            rows.append((f"series_{kind}", x, y, val, ref, abs(val - ref) / abs(ref), 1e-3))
    for xp, yp in ORACLE_PAIRS:
        x, y = PolarPoint(*xp), PolarPoint(*yp)
        ref = kernel_eval("V", cfg, x, y)
        val = li_rong_alpha1(x, y)
        rows.append(("li_rong", x, y, val, ref, abs(val - ref) / ref, 1e-6))
        res = primitive_check_vbar(1.0, x, y)
        d = float(np.hypot(*(x.xy - y.xy)))
        from .kernels import s_fun
        ref2 = s_fun(1.0, x, y) / (2 * np.pi * d)
        rows.append(("primitive_vbar", x, y, ref2 + res, ref2, abs(res) / ref2, 1e-5))
    return rows


def _spectral_rows(suite, cfg, args):
    """Rows ``(identity, l, m, l2, m2, computed, reference, rel_err)``."""
    from . import spectral as sp
    from .specfun import lam, psh_rt

    rows = []
    if suite in ("wolfe", "vbar"):
        modes = WOLFE_MODES if suite == "wolfe" else VBAR_MODES
        fn = sp.verify_wolfe if suite == "wolfe" else sp.verify_vbar
        for mode in modes:
            rep = fn(mode, EVAL_POINTS)
            ref_eig = lam(mode) / 4 if suite == "wolfe" else lam(mode)
            for (r, t), c in zip(EVAL_POINTS, np.atleast_1d(rep.computed)):
                est = (c / complex(psh_rt(mode[0], mode[1], r, t))).real
                rows.append((f"{suite}@({r},{t})", *mode, "", "", est, ref_eig, abs(est - ref_eig) / ref_eig))
    elif suite in ("krenk", "wbar"):
        pairs = KRENK_PAIRS if suite == "krenk" else WBAR_PAIRS
        fn = sp.verify_krenk if suite == "krenk" else sp.verify_wbar_modes
        for m1, m2 in pairs:
            rep = fn(m1, m2)
            rows.append((suite, *m1, *m2, complex(rep.computed).real, complex(rep.reference).real, rep.rel_err))
    elif suite == "wbar1":
        for rep in sp.verify_wbar_one(cfg.n_r, cfg.n_theta):
            rows.append((rep.identity, 0, 0, "", "", rep.computed, rep.reference, rep.rel_err))
    elif suite == "calderon":
        from .solve import precond_study
        levels = cfg.levels if args.levels_given else [2, 3, 4]
        for pair in (("V", "Wbar"), ("W", "Vbar")):
            res = precond_study(levels, pair, a=cfg.a, quad=_quad(cfg))
            kap = res.column("kappa_pre")
            base = kap[0]
            for row in res.rows:
                rows.append((f"calderon:{pair[0]}-{pair[1]}:level{row.level}", "", "", "", "",
                             row.kappa_pre, base, abs(row.kappa_pre - base) / base))
    return rows


def cmd_verify(cfg: RunConfig, args) -> int:
    suite = args.suite
    tol = cfg.tol if cfg.tol is not None else DEFAULT_TOL[suite]
    fh, close = _writer(cfg.out)
    failed = False
    try:
        w = csv.writer(fh, lineterminator="\n")
        if suite == "kernels":
            w.writerow(["check", "x_r", "x_theta", "y_r", "y_theta", "value", "reference", "rel_err"])
            for name, x, y, val, ref, err, own_tol in _kernel_rows():
                w.writerow([name, _g(x.r), _g(x.theta), _g(y.r), _g(y.theta), _g(val), _g(ref), _g(err)])
                failed |= err > (tol if tol is not None else own_tol)
        else:
            w.writerow(["identity", "l", "m", "l2", "m2", "computed", "reference", "rel_err"])
            for row in _spectral_rows(suite, cfg, args):
                name, l, m, l2, m2, c, r, err = row
                w.writerow([name, l, m, l2, m2, _g(c), _g(r), _g(err)])
                failed |= err > tol
    finally:
        if close:
            fh.close()
    return EXIT_CHECK if failed else EXIT_OK


def cmd_precond(cfg: RunConfig, args) -> int:
    from .solve import precond_study

    pair = tuple(args.pair.split(","))
    res = precond_study(cfg.levels, pair, a=cfg.a, quad=_quad(cfg))
    text = json.dumps([r.as_dict() for r in res.rows], indent=2)
    if cfg.out in (None, "-"):
        print(text)
    else:
        Path(cfg.out).write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--a", type=float, help="disk radius")
    common.add_argument("--level", type=int, help="mesh refinement level")
    common.add_argument("--levels", type=_parse_levels, help="levels, e.g. 2,3,4 or 2-5")
    common.add_argument("--regular-order", dest="regular_order", type=int)
    common.add_argument("--singular-order", dest="singular_order", type=int)
    common.add_argument("--n-r", dest="n_r", type=int)
    common.add_argument("--n-theta", dest="n_theta", type=int)
    common.add_argument("--lmax", dest="l_max", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--out", help="output file or directory ('-' for stdout)")

    p = argparse.ArgumentParser(prog="diskbio", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True)
    sub.add_parser("eigs", parents=[common], help="lambda table as CSV")
    sub.add_parser("mesh", parents=[common], help="write vertices.csv and triangles.csv")
    pa = sub.add_parser("assemble", parents=[common], help="write a Galerkin matrix (DBIO1)")
    pa.add_argument("--operator", required=True, choices=["V", "W", "Vbar", "Wbar", "mass"])
    pa.add_argument("--space", choices=["P0", "P1", "P1_0"])
    pv = sub.add_parser("verify", parents=[common], help="run an identity suite, CSV report")
    pv.add_argument("--suite", required=True, choices=SUITES)
    pp = sub.add_parser("precond", parents=[common], help="preconditioning study as JSON")
    pp.add_argument("--pair", default="V,Wbar", choices=["V,Wbar", "W,Vbar"])
    return p


COMMANDS = {"eigs": cmd_eigs, "mesh": cmd_mesh, "assemble": cmd_assemble, "verify": cmd_verify,
            "precond": cmd_precond}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        for f in dataclasses.fields(RunConfig):
            val = getattr(args, f.name, None)
            if val is not None and f.name != "subcommand":
                setattr(cfg, f.name, val)
        cfg.subcommand = args.subcommand
        args.levels_given = args.levels is not None or (args.config is not None and _has_key(args.config, "levels"))
        cfg.validate()
        _apply_threads()
        return COMMANDS[args.subcommand](cfg, args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"diskbio: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def _has_key(path, key) -> bool:
    with open(path, encoding="utf-8") as fh:
        return any(line.split("#", 1)[0].split("=", 1)[0].strip() == key for line in fh)


def main():  # pragma: no cover
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
