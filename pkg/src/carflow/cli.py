"""Command-line front end: ``carflow {classify,cabatif,distinguish,verify,sweep}``.

Exit status: 0 when every verdict is decided, 2 when something is
Inconclusive, 1 on errors (bad input, cap violations, failed oracle suites).
"""

from __future__ import annotations

import argparse
import ast
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, car_oracle, classify, opdisc, quad, spectral, suites
from .symbol import Symbol, SymbolError, load_sampled, make_constant, make_loglog, make_nu

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2
COMMANDS = ("classify", "cabatif", "distinguish", "verify", "sweep")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    symbol: Optional[str] = None
    mus: list = field(default_factory=list)
    nus: list = field(default_factory=list)
    nu1: Optional[float] = None
    nu2: Optional[float] = None
    grid_L: Optional[float] = None
    grid_M: Optional[int] = None
    xmax: float = spectral.DEFAULT_WINDOW
    step: float = spectral.DEFAULT_STEP
    shells: Optional[int] = None
    eta: Optional[float] = None
    jobs: int = 1
    seed: int = 0
    suite: str = "all"
    out: Optional[str] = None
    plot_data: Optional[str] = None
    full_matrix: bool = False
    no_spectral: bool = False

    def quad_config(self) -> quad.QuadConfig:
        cfg = quad.DEFAULT
        if self.shells is not None:
            if self.shells < cfg.min_shells:
                raise UsageError(f"--shells must be at least {cfg.min_shells}")
            cfg = replace(cfg, small=(-4 - self.shells, -4), large=(4, 4 + self.shells))
        if self.eta is not None:
            if not self.eta > 0:
                raise UsageError("--eta must be positive")
            cfg = replace(cfg, eta=self.eta)
        return cfg

    def grid(self) -> Optional[opdisc.Grid]:
        if self.grid_L is None and self.grid_M is None:
            return None
        return opdisc.Grid(self.grid_L if self.grid_L is not None else 200.0,
                           self.grid_M if self.grid_M is not None else 2**12)

    def echo(self) -> dict:
        out = {"command": self.command, "xmax": self.xmax, "step": self.step, "quad": self.quad_config().echo()}
        for k in ("symbol", "nu1", "nu2", "grid_L", "grid_M", "seed", "suite"):
            v = getattr(self, k)
            if v is not None:
                out[k] = v
        if self.mus:
            out["mu"] = self.mus
        if self.nus:
            out["nu"] = self.nus
        return out


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------


def parse_symbol(spec: str) -> Symbol:
    """``constant:<matrix literal>``, ``powers-nu:<float>``, ``powers-loglog`` or ``sampled:<path>``."""
    family, _, arg = spec.partition(":")
    if family == "constant":
        try:
            m = np.array(ast.literal_eval(arg), dtype=complex)
        except (ValueError, SyntaxError) as e:
            raise UsageError(f"bad matrix literal {arg!r}") from e
        return make_constant(m)
    if family == "powers-nu":
        try:
            nu = float(arg)
        except ValueError as e:
            raise UsageError(f"bad nu {arg!r}") from e
        return make_nu(nu)
    if family == "powers-loglog" and not arg:
        return make_loglog()
    if family == "sampled":
        try:
            return load_sampled(arg)
        except OSError as e:
            raise UsageError(f"cannot read {arg}: {e.strerror}") from e
    raise UsageError(f"unknown symbol family {family!r}")


def parse_values(texts) -> list:
    """Floats from a mix of single values and inclusive ranges ``start:stop:step``."""
    out = []
    for text in texts or []:
        for part in str(text).split(","):
            part = part.strip()
            if not part:
                continue
            if ":" in part:
                try:
                    a, b, d = (float(x) for x in part.split(":"))
                except ValueError as e:
                    raise UsageError(f"bad range {part!r}; use start:stop:step") from e
                if not d > 0:
                    raise UsageError("range step must be positive")
                n = int(math.floor((b - a) / d + 1e-9)) + 1
                out += [round(a + k * d, 12) for k in range(max(n, 0))]
            else:
                try:
                    out.append(float(part))
                except ValueError as e:
                    raise UsageError(f"bad number {part!r}") from e
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="carflow", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"carflow {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--symbol", help="constant:<matrix>, powers-nu:<nu>, powers-loglog, sampled:<path>")
    ap.add_argument("--mu", action="append", help="value, comma list or start:stop:step (repeatable)")
    ap.add_argument("--nu", action="append", help="sweep nu values, same syntax as --mu")
    ap.add_argument("--nu1", type=float)
    ap.add_argument("--nu2", type=float)
    ap.add_argument("--grid-L", dest="grid_L", type=float, help="discretization window length")
    ap.add_argument("--grid-M", dest="grid_M", type=int, help="discretization cells (power of two)")
    ap.add_argument("--xmax", type=float, default=spectral.DEFAULT_WINDOW, help="regular-part window")
    ap.add_argument("--step", type=float, default=spectral.DEFAULT_STEP, help="regular-part grid step")
    ap.add_argument("--shells", type=int, help="dyadic shells per singular end")
    ap.add_argument("--eta", type=float, help="half-width of the Inconclusive band on the shell slope")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--suite", default="all", help=f"verify suite: {', '.join(suites.SUITES)} or all")
    ap.add_argument("--out", help="report path (default stdout)")
    ap.add_argument("--plot-data", dest="plot_data", help="directory for CSV plot data")
    ap.add_argument("--full-matrix", dest="full_matrix", action="store_true",
                    help="write full regular-part entries with the plot data")
    ap.add_argument("--no-spectral", dest="no_spectral", action="store_true",
                    help="skip the regular-part cross-checks")
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(
        command=ns.command, symbol=ns.symbol, mus=parse_values(ns.mu), nus=parse_values(ns.nu),
        nu1=ns.nu1, nu2=ns.nu2, grid_L=ns.grid_L, grid_M=ns.grid_M, xmax=ns.xmax, step=ns.step,
        shells=ns.shells, eta=ns.eta, jobs=ns.jobs, seed=ns.seed, suite=ns.suite, out=ns.out,
        plot_data=ns.plot_data, full_matrix=ns.full_matrix, no_spectral=ns.no_spectral,
    )
    if cfg.jobs < 1:
        raise UsageError("--jobs must be positive")
    return cfg


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (tuple, set)):
        return list(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _write_shells(dirpath: Path, verdicts: list) -> None:
    dirpath.mkdir(parents=True, exist_ok=True)
    for i, v in enumerate(verdicts):
        (dirpath / f"shells-{i:02d}-{v.name or 'integral'}.csv").write_text(v.shell_csv(), encoding="utf-8")


def _discretization(s: Symbol, g: opdisc.Grid) -> dict:
    g.check_cap(s.dimension)
    quarter = g.L / 4
    return {
        "L": g.L,
        "M": g.M,
        "hankel_hs_unit_interval": opdisc.hankel_hs(s, (0.0, 1.0), g),
        "toeplitz_defect_trace": opdisc.toeplitz_defect_trace(s, g),
        "shift_defect_t1": opdisc.shift_defect(s, min(1.0, quarter / 2), g).value,
    }


def cmd_classify(cfg: RunConfig) -> int:
    if not cfg.symbol:
        raise UsageError("classify needs --symbol")
    s = parse_symbol(cfg.symbol)
    qc = cfg.quad_config()
    mus = cfg.mus if s.parity == "even" else []
    rep = classify.classify(s, mus, qc, use_spectral=not cfg.no_spectral, window=cfg.xmax, step=cfg.step)
    out = rep.to_dict()
    out["params"] = cfg.echo()
    if cfg.mus and s.parity != "even":
        out["cabatif_skipped"] = "CABATIF criteria need an even symbol"
    g = cfg.grid()
    if g is not None:
        out["discretization"] = _discretization(s, g)
    _emit(dumps(out), cfg.out)
    if cfg.plot_data:
        d = Path(cfg.plot_data)
        _write_shells(d, rep.diagnostics)
        if not cfg.no_spectral:
            try:
                r = spectral.regular_part(s, cfg.xmax, cfg.step)
                r.to_csv(d / "regular_part.csv", full=cfg.full_matrix, every=max(1, len(r.xs) // 20000))
            except SymbolError:
                pass
    return EXIT_OK if rep.decided else EXIT_INCONCLUSIVE


def cmd_cabatif(cfg: RunConfig) -> int:
    if not cfg.symbol or not cfg.mus:
        raise UsageError("cabatif needs --symbol and at least one --mu")
    s = parse_symbol(cfg.symbol)
    qc = cfg.quad_config()
    regular = None
    if not cfg.no_spectral:
        try:
            regular = spectral.regular_part(s, cfg.xmax, cfg.step)
        except SymbolError:
            regular = None
    verdicts = [classify.cabatif(s, mu, qc, regular) for mu in cfg.mus]
    out = {"symbol": s.label, "cabatif": {repr(v.mu): v.to_dict() for v in verdicts},
           "diagnostics": [d.to_dict() for v in verdicts for d in v.verdicts.values()],
           "params": cfg.echo()}
    _emit(dumps(out), cfg.out)
    if cfg.plot_data:
        _write_shells(Path(cfg.plot_data), [d for v in verdicts for d in v.verdicts.values()])
    return EXIT_OK if all(v.status != quad.INCONCLUSIVE for v in verdicts) else EXIT_INCONCLUSIVE


def cmd_distinguish(cfg: RunConfig) -> int:
    if cfg.nu1 is None or cfg.nu2 is None:
        raise UsageError("distinguish needs --nu1 and --nu2")
    d = classify.distinguish_pair(cfg.nu1, cfg.nu2, cfg.quad_config())
    out = d.to_dict()
    out["params"] = cfg.echo()
    _emit(dumps(out), cfg.out)
    if cfg.plot_data:
        _write_shells(Path(cfg.plot_data), list(d.first.verdicts.values()) + list(d.second.verdicts.values()))
    undecided = quad.INCONCLUSIVE in (d.first.status, d.second.status)
    return EXIT_INCONCLUSIVE if undecided else EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    names = "all" if cfg.suite == "all" else [x.strip() for x in cfg.suite.split(",")]
    try:
        results = suites.run_suites(names, cfg.seed)
    except KeyError as e:
        raise UsageError(e.args[0]) from e
    out = {"seed": cfg.seed, "suites": [r.to_dict() for r in results],
           "passed": all(r.passed for r in results)}
    _emit(dumps(out), cfg.out)
    for r in results:
        print(f"{r.name}: {'pass' if r.passed else 'FAIL'} ({r.seconds:.1f} s)", file=sys.stderr)
    return EXIT_OK if out["passed"] else EXIT_ERROR


def sweep_row(args) -> list:
    """CABATIF verdicts of the nu-symbol for every mu; one worker task per nu."""
    nu, mus, qc = args
    s = make_nu(nu)
    rows = []
    for mu in mus:
        v = classify.cabatif(s, mu, qc)
        rows.append((nu, mu, v.status, v.fitted_exponent))
    return rows


def sweep_csv(rows) -> str:
    lines = ["nu,mu,cabatif_verdict,fitted_exponent"]
    for nu, mu, status, exp in rows:
        e = "" if not math.isfinite(exp) else f"{exp:.6f}"
        lines.append(f"{nu!r},{mu!r},{status},{e}")
    return "\n".join(lines) + "\n"


def run_sweep(nus, mus, qc: quad.QuadConfig = quad.DEFAULT, jobs: int = 1) -> list:
    for mu in mus:
        if not 0 < mu < 1:
            raise UsageError(f"mu must lie in (0, 1), got {mu}")
    for nu in nus:
        if not nu > 0:
            raise UsageError(f"nu must be positive, got {nu}")
    tasks = [(nu, list(mus), qc) for nu in nus]
    if not tasks or not mus:
        return []
    if jobs == 1 or len(tasks) == 1:
        parts = [sweep_row(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as ex:
            parts = list(ex.map(sweep_row, tasks))  # map keeps submission order
    return [row for part in parts for row in part]


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.symbol not in (None, "powers-nu"):
        raise UsageError("sweep supports the powers-nu family only")
    rows = run_sweep(cfg.nus, cfg.mus, cfg.quad_config(), cfg.jobs)
    text = sweep_csv(rows)
    _emit(text, cfg.out)
    if cfg.plot_data:
        d = Path(cfg.plot_data)
        d.mkdir(parents=True, exist_ok=True)
        (d / "sweep.csv").write_text(text, encoding="utf-8")
    return EXIT_INCONCLUSIVE if any(r[2] == quad.INCONCLUSIVE for r in rows) else EXIT_OK


HANDLERS = {
    "classify": cmd_classify,
    "cabatif": cmd_cabatif,
    "distinguish": cmd_distinguish,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def run(cfg: RunConfig) -> int:
    try:
        return HANDLERS[cfg.command](cfg)
    except (UsageError, SymbolError, opdisc.GridError, car_oracle.CarError,
            classify.ClassificationError, ValueError) as e:
        print(f"carflow: error: {e}", file=sys.stderr)
        return EXIT_ERROR


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except UsageError as e:
        print(f"carflow: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
