"""Command-line interface.

Every command prints one JSON document

    {"command": ..., "inputs": {...}, "results": {...}, "diagnostics": {...}, "version": ...}

except ``landscape``, which prints CSV.  Exit codes: 0 success, 1 usage
error, 2 domain error, 3 accuracy failure (including a failed ``verify``),
4 refusal (theorem hypotheses not satisfied).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .errors import AccuracyError, CritsysError, DomainError, Refusal

CONFIG_ENV = "CRITSYS_CONFIG"
EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_ACCURACY, EXIT_REFUSAL = 0, 1, 2, 3, 4


class UsageError(CritsysError):
    exit_code = EXIT_USAGE


# -- configuration ---------------------------------------------------------------

_RANGES = {
    "ode_tol": (1e-14, 1e-6),
    "quad_rel_tol": (1e-14, 1e-4),
    "geometry_tol": (1e-14, 1e-4),
}


@dataclass
class RunConfig:
    """Run settings; read from a ``key = value`` file, overridden by flags.

    ``cache_dir`` is also overridden by the ``CRITSYS_CACHE_DIR`` environment
    variable (flags win over both).
    """

    cache_dir: Path = field(default_factory=lambda: _default_cache_dir())
    ode_tol: float = 1e-13
    quad_rel_tol: float = 1e-11
    geometry_tol: float = 1e-9
    output_format: str = "json"
    verbosity: int = 0

    def validate(self) -> "RunConfig":
        for key, (lo, hi) in _RANGES.items():
            v = getattr(self, key)
            if not lo <= v <= hi:
                raise DomainError(f"{key} = {v!r} outside the admissible range [{lo:g}, {hi:g}]")
        if self.output_format not in ("json", "csv"):
            raise DomainError(f"output_format must be json or csv, got {self.output_format!r}")
        return self

    def ensure_cache(self) -> Path:
        try:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise DomainError(f"cache_dir {self.cache_dir} is not writable: {exc}") from None
        if not os.access(self.cache_dir, os.W_OK):
            raise DomainError(f"cache_dir {self.cache_dir} is not writable")
        return self.cache_dir

    def as_dict(self) -> dict:
        return {"cache_dir": str(self.cache_dir), "ode_tol": self.ode_tol, "quad_rel_tol": self.quad_rel_tol,
                "geometry_tol": self.geometry_tol, "output_format": self.output_format, "verbosity": self.verbosity}


def _default_cache_dir() -> Path:
    from .cache import default_cache_dir

    return default_cache_dir()


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file (``#`` starts a comment)."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        if k not in RunConfig.__dataclass_fields__:
            raise DomainError(f"{path}:{n}: unknown key {k!r}")
        out[k] = v
    return out


def load_config(path=None, overrides: Optional[dict] = None) -> RunConfig:
    values = {}
    path = path or os.environ.get(CONFIG_ENV)
    if path:
        values.update(read_config(path))
    env_cache = os.environ.get("CRITSYS_CACHE_DIR")
    if env_cache:
        values["cache_dir"] = env_cache
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    cfg = RunConfig()
    for k, v in values.items():
        if k == "cache_dir":
            cfg.cache_dir = Path(v)
        elif k in ("ode_tol", "quad_rel_tol", "geometry_tol"):
            setattr(cfg, k, float(v))
        elif k == "verbosity":
            cfg.verbosity = int(v)
        else:
            setattr(cfg, k, str(v))
    return cfg.validate()


# -- output helpers --------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def render(command: str, inputs: dict, results, diagnostics: dict) -> str:
    doc = {"command": command, "inputs": inputs, "results": results, "diagnostics": diagnostics,
           "version": __version__}
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def _floats(text: str, n: Optional[int] = None, name: str = "value") -> list:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise UsageError(f"{name}: expected {n} numbers, got {len(vals)}")
    return vals


def _points_file(path, N: int) -> np.ndarray:
    """Points from a JSON list of lists or a text file with one comma-separated point per line."""
    text = Path(path).read_text()
    try:
        pts = np.array(json.loads(text), dtype=float)
    except ValueError:
        rows = [_floats(line, N, str(path)) for line in text.splitlines() if line.strip() and not line.startswith("#")]
        pts = np.array(rows, dtype=float)
    pts = np.atleast_2d(pts)
    if pts.shape[1] != N:
        raise DomainError(f"{path}: points must have {N} coordinates")
    return pts


# -- commands ----------------------------------------------------------------------------


def cmd_hyperbola(args, cfg):
    from .hyperbola import summary

    return summary(args.N, args.p, args.q), {}


def _solve(args, cfg):
    from .cache import BubbleCache
    from .hyperbola import classify, q_from_p

    q = args.q if args.q is not None else q_from_p(args.N, args.p)
    pair = classify(args.N, args.p, q).require_critical()
    tol = args.tol if args.tol is not None else cfg.ode_tol
    if args.no_cache:
        from .bubble import solve_ground_state

        return solve_ground_state(pair, tol=tol, r_max=args.r_max, n_grid=args.n_grid), "disabled", None
    cache = BubbleCache(cfg.ensure_cache())
    return cache.get_or_solve(pair, tol, args.r_max, args.n_grid)


def _bubble_summary(sol) -> dict:
    return {
        "N": sol.N, "p": sol.pair.p, "q": sol.pair.q,
        "beta_star": sol.beta_star,
        "r_max": sol.r_max,
        "n_nodes": int(sol.profile.r.size),
        "ode_residual": sol.ode_residual,
        "tail": sol.tail.as_dict(),
    }


def cmd_bubble_solve(args, cfg):
    from .cache import save_solution

    sol, status, path = _solve(args, cfg)
    diag = {"cache": status}
    if path is not None:
        diag["cache_file"] = path.name
    if args.out:
        save_solution(sol, args.out)
    res = _bubble_summary(sol)
    res["bisection_steps"] = sol.solver_meta.get("iterations")
    return res, diag


def _load_bubble(path):
    from .cache import load_solution

    return load_solution(path)


def cmd_bubble_show(args, cfg):
    from .bubble import log_derivative_check

    path = args.bubble or args.file
    if not path:
        raise UsageError("bubble show: a bubble file is required")
    sol = _load_bubble(path)
    res = _bubble_summary(sol)
    lim_U, lim_V = log_derivative_check(sol)
    res["log_derivative_limits"] = {"U": lim_U, "V": lim_V, "expected_U": -sol.tail.k_U,
                                    "expected_V": -sol.tail.k_V, "printed_limit": 1.0}
    if args.radii:
        r = np.array(_floats(args.radii, name="--radii"))
        res["samples"] = {"r": r, "U": sol.U(r), "V": sol.V(r), "dU": sol.dU(r), "dV": sol.dV(r)}
    return res, {}


def cmd_constants(args, cfg):
    from .constants import energy_constants

    sol = _load_bubble(args.bubble)
    ec = energy_constants(sol, lam=args.lam, rel_tol=cfg.quad_rel_tol)
    d = ec.as_dict()
    quad = d.pop("quadrature")
    return d, {"quadrature": quad}


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    note: str = ""


@dataclass
class VerificationReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.__dict__ for c in self.checks]}


def verify(sol, quad_rel_tol: float = 1e-11) -> VerificationReport:
    """Identity, positivity, decay and corrector checks for one ground state."""
    from . import constants as K
    from . import halfspace as hs
    from .bubble import closed_form_symmetric
    from .hyperbola import CRITICAL_TOL
    from .reduced_energy import d_star, theta

    checks = []

    def add(name, value, threshold, ok=None, note=""):
        passed = bool(value <= threshold) if ok is None else bool(ok)
        checks.append(Check(name, float(value), float(threshold), passed, note))

    N, p, q = sol.N, sol.pair.p, sol.pair.q
    add("ode_residual", sol.ode_residual, 1e-8)
    ec = K.energy_constants(sol, rel_tol=quad_rel_tol)
    add("mass_consistency", abs(ec.S_pow - ec.S_pow_V) / ec.S_pow, K.MASS_TOL)
    add("identity_residual", ec.identity_residual, K.IDENTITY_TOL)
    add("radial_decomposition", K.radial_decomposition(sol, quad_rel_tol)["relative"], K.IDENTITY_TOL)
    lo, hi = K.lambda_window(p, q)
    l1, l2 = lo + 0.25 * (hi - lo), lo + 0.75 * (hi - lo)
    c4a, c4b = ec.c4_at(l1), ec.c4_at(l2)
    add("c4_lambda_independence", abs(c4a - c4b) / abs(c4a), 1e-6, note=f"lambda = {l1!r}, {l2!r}")
    add("c2_positive", ec.c2, 0.0, ok=ec.c2 > 0)
    add("c4_positive", ec.c4, 0.0, ok=ec.c4 > 0)
    t = sol.tail
    add("tail_slope_U", abs(t.slope_U - t.k_U), 0.02, note=f"expected {t.k_U!r}")
    add("tail_slope_V", abs(t.slope_V - t.k_V), 0.02, note=f"expected {t.k_V!r}")
    if abs(p - q) <= CRITICAL_TOL * p:
        exact = closed_form_symmetric(N)
        r = np.linspace(0.0, 50.0, 2001)
        add("symmetric_bubble_oracle", float(np.max(np.abs(sol.U(r) - exact.U(r)))), 1e-6)
        add("symmetric_beta_star", abs(sol.beta_star - 1.0), 1e-8)
    if N >= 4:
        rho = (0.5,) * (N - 1)
        phi0 = hs.build_corrector(sol, rho, hs.PHI0)
        psi0 = hs.build_corrector(sol, rho, hs.PSI0)
        add("neumann_residual", hs.neumann_residual(phi0, hs.default_probes(N)), 1e-3)
        s_phi, s_psi = hs.decay_fit(phi0), hs.decay_fit(psi0)
        add("phi0_decay_slope", abs(s_phi + phi0.expected_decay), 0.1, ok=abs(s_phi + phi0.expected_decay) <= 0.1,
            note=f"slope {s_phi!r}, expected {-phi0.expected_decay!r}")
        add("psi0_decay_slope", abs(s_psi + psi0.expected_decay), 0.1, ok=abs(s_psi + psi0.expected_decay) <= 0.1,
            note=f"slope {s_psi!r}, expected {-psi0.expected_decay!r}")
        lhs, rhs = hs.c3_crosscheck(sol, rho, ec.C3)
        add("c3_crosscheck", abs(lhs - rhs) / abs(rhs), 1e-3)
    H = -1.0
    d0, _ = d_star(ec, H)
    # Theta'(d0) = -c4 H - c2/d0, relative to the size of either term
    add("stationarity", abs(-ec.c4 * H - ec.c2 / d0) / abs(ec.c4 * H), 1e-12)
    h = 1e-3 * d0
    curv = (theta(ec, H, d0 + h) - 2 * theta(ec, H, d0) + theta(ec, H, d0 - h)) / h**2
    add("stationary_minimum", abs(curv * d0**2 / ec.c2 - 1.0), 1e-4, ok=curv > 0)
    return VerificationReport(checks)


def cmd_verify(args, cfg):
    sol = _load_bubble(args.bubble)
    rep = verify(sol, cfg.quad_rel_tol)
    if not rep.passed:
        failed = [c.name for c in rep.checks if not c.passed]
        return rep.as_dict(), {"failed": failed}, EXIT_ACCURACY
    return rep.as_dict(), {}


def cmd_corrector(args, cfg):
    from . import halfspace as hs

    sol = _load_bubble(args.bubble)
    rho = _floats(args.rho, sol.N - 1, "--rho")
    f = hs.build_corrector(sol, rho, args.kind, order=args.order)
    res = {"kind": args.kind, "rho": rho, "H_local": f.rho.H_local, "c_N": f.c_N}
    if args.probes:
        pts = _points_file(args.probes, sol.N)
        res["probes"] = pts
        res["values"] = [f(x) for x in pts]
    res["neumann_residual"] = hs.neumann_residual(f, hs.default_probes(sol.N))
    res["decay_slope"] = hs.decay_fit(f)
    res["expected_decay"] = -f.expected_decay
    order = hs.expansion_order(sol.N, sol.pair.p, sol.pair.q)
    res["order_flags"] = order.flags()
    res["expansion_order"] = order.as_dict()
    return res, {"neumann_probes": hs.default_probes(sol.N)}


def cmd_geometry_curvature(args, cfg):
    from .geometry import load_surface, mean_curvature

    surf = load_surface(args.surface)
    x = np.array(_floats(args.point, surf.dimension, "--point"))
    rep = mean_curvature(surf, x, derivatives=True)
    return {"point": x, **rep.as_dict()}, {}


def _critical_list(items):
    return [{"x": pt.x, "nu": pt.nu, "H": rep.H, "kappa": rep.kappa, "rho": rep.rho,
             "nondegenerate": rep.nondegenerate, "kind": rep.kind,
             "grad_norm": float(np.linalg.norm(rep.tangent_grad_H)),
             "hess_eigenvalues": rep.hess_eigenvalues} for pt, rep in items]


def cmd_geometry_critical(args, cfg):
    from .geometry import find_critical_points, load_surface

    surf = load_surface(args.surface)
    seeds = _points_file(args.seeds, surf.dimension) if args.seeds else None
    search = find_critical_points(surf, seeds, return_search=True)
    return {"critical_points": _critical_list(search.points)}, {
        "runs": search.n_seeds, "converged": search.n_converged, "messages": search.diagnostics}


def cmd_predict(args, cfg):
    from .constants import energy_constants
    from .geometry import load_surface
    from .reduced_energy import predict_blowup

    surf = load_surface(args.surface)
    sol = _load_bubble(args.bubble)
    if surf.dimension != sol.N:
        raise DomainError(f"surface dimension {surf.dimension} != bubble dimension {sol.N}")
    ec = energy_constants(sol, rel_tol=cfg.quad_rel_tol)
    eps = _floats(args.eps, name="--eps")
    pred = predict_blowup(surf, ec, sol.pair, eps, mu=args.mu, index=args.index)
    return pred.as_dict(), {"c2": ec.c2, "c4": ec.c4}


def _d_range(text):
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise UsageError(f"--d-range: expected lo:hi:n, got {text!r}") from None
    if not (0 < lo < hi and n >= 2):
        raise DomainError("--d-range needs 0 < lo < hi and n >= 2")
    return np.geomspace(lo, hi, n)


def cmd_landscape(args, cfg):
    from .constants import energy_constants
    from .geometry import load_surface
    from .reduced_energy import landscape

    surf = load_surface(args.surface)
    sol = _load_bubble(args.bubble)
    ec = energy_constants(sol, rel_tol=cfg.quad_rel_tol)
    parts = args.chart.split(":")
    center = _floats(parts[0], surf.dimension, "--chart")
    radius = float(parts[1]) if len(parts) > 1 else 0.2
    n = int(parts[2]) if len(parts) > 2 else 5
    land = landscape(surf, ec, center, _d_range(args.d_range), radius, n)
    return land.to_csv(), {}


# -- parser ------------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def build_parser() -> argparse.ArgumentParser:
    P = _Parser(prog="critsys", description="Bubbles, energy constants and blow-up prediction "
                "for critical Hamiltonian Lane-Emden systems.")
    P.add_argument("--config", help="key = value configuration file")
    P.add_argument("--cache-dir", help="cache directory (overrides config and environment)")
    P.add_argument("--quad-rel-tol", type=float)
    P.add_argument("--timing", action="store_true", help="add elapsed time to diagnostics")
    P.add_argument("--version", action="version", version=f"critsys {__version__}")
    sub = P.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    h = sub.add_parser("hyperbola", help="classify (N, p, q) and report exponents")
    h.add_argument("--N", type=int, required=True)
    h.add_argument("--p", type=float, required=True)
    h.add_argument("--q", type=float, help="defaults to the critical partner of p")
    h.set_defaults(func=cmd_hyperbola)

    b = sub.add_parser("bubble", help="solve or inspect ground states")
    bsub = b.add_subparsers(dest="action", parser_class=_Parser)
    bsub.required = True
    bs = bsub.add_parser("solve")
    bs.add_argument("--N", type=int, required=True)
    bs.add_argument("--p", type=float, required=True)
    bs.add_argument("--q", type=float)
    bs.add_argument("--tol", type=float)
    bs.add_argument("--r-max", "--rmax", dest="r_max", type=float, default=1e3)
    bs.add_argument("--n-grid", type=int, default=4000)
    bs.add_argument("--out", help="write the solution file here")
    bs.add_argument("--no-cache", action="store_true")
    bs.set_defaults(func=cmd_bubble_solve)
    bw = bsub.add_parser("show")
    bw.add_argument("file", nargs="?", help="bubble file (or use --bubble)")
    bw.add_argument("--bubble")
    bw.add_argument("--radii", help="comma-separated radii to sample")
    bw.set_defaults(func=cmd_bubble_show)

    c = sub.add_parser("constants", help="energy constants of a ground state")
    c.add_argument("--bubble", required=True)
    c.add_argument("--lambda", dest="lam", type=float)
    c.set_defaults(func=cmd_constants)

    v = sub.add_parser("verify", help="run the identity and accuracy checks")
    v.add_argument("--bubble", required=True)
    v.set_defaults(func=cmd_verify)

    k = sub.add_parser("corrector", help="half-space boundary corrector")
    k.add_argument("--bubble", required=True)
    k.add_argument("--rho", required=True, help="r1,...,r_{N-1}")
    k.add_argument("--kind", choices=("phi0", "psi0"), default="phi0")
    k.add_argument("--probes", help="points to evaluate (JSON list or one point per line)")
    k.add_argument("--order", type=int, default=8)
    k.set_defaults(func=cmd_corrector)

    g = sub.add_parser("geometry", help="curvature of boundary surfaces")
    gsub = g.add_subparsers(dest="action", parser_class=_Parser)
    gsub.required = True
    gc = gsub.add_parser("curvature")
    gc.add_argument("--surface", required=True)
    gc.add_argument("--point", required=True)
    gc.set_defaults(func=cmd_geometry_curvature)
    gk = gsub.add_parser("critical")
    gk.add_argument("--surface", required=True)
    gk.add_argument("--seeds")
    gk.set_defaults(func=cmd_geometry_critical)

    pr = sub.add_parser("predict", help="blow-up point and scale")
    pr.add_argument("--surface", required=True)
    pr.add_argument("--bubble", required=True)
    pr.add_argument("--eps", default="1e-2,1e-3,1e-4")
    pr.add_argument("--mu", type=float, default=1.0)
    pr.add_argument("--index", type=int)
    pr.set_defaults(func=cmd_predict)

    la = sub.add_parser("landscape", help="CSV of Theta over a boundary chart")
    la.add_argument("--surface", required=True)
    la.add_argument("--bubble", required=True)
    la.add_argument("--d-range", required=True, help="lo:hi:n (log-spaced)")
    la.add_argument("--chart", required=True, help="x1,...,xN[:radius[:n]]")
    la.set_defaults(func=cmd_landscape, csv=True)
    return P


def _command_name(args) -> str:
    action = getattr(args, "action", None)
    return f"{args.command} {action}" if action else args.command


def _inputs(args) -> dict:
    skip = {"func", "command", "action", "csv", "timing"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        stderr.write(str(exc))
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    command = _command_name(args)
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        cfg = load_config(args.config, {"cache_dir": args.cache_dir, "quad_rel_tol": args.quad_rel_tol})
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            out = args.func(args, cfg)
        if len(out) == 3:
            results, diag, code = out
        else:
            results, diag = out
        if caught:
            diag = dict(diag, warnings=sorted({str(w.message) for w in caught}))
    except CritsysError as exc:
        code = exc.exit_code
        results, diag = None, {"error": type(exc).__name__, "message": str(exc)}
        stderr.write(f"critsys {command}: {exc}\n")
    except (ValueError, OSError) as exc:
        code = EXIT_DOMAIN
        results, diag = None, {"error": type(exc).__name__, "message": str(exc)}
        stderr.write(f"critsys {command}: {exc}\n")
    if args.timing:
        diag = dict(diag, elapsed_seconds=time.perf_counter() - t0)
    if getattr(args, "csv", False) and code == EXIT_OK:
        stdout.write(results)
    else:
        stdout.write(render(command, _inputs(args), results, diag))
    return code


def main() -> None:
    sys.exit(run())


__all__ = ["run", "main", "RunConfig", "VerificationReport", "verify", "load_config", "read_config",
           "AccuracyError", "Refusal"]
