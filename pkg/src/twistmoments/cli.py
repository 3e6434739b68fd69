"""Command-line front end: configuration, orchestration, reports, verification.

Commands
--------
lvalue   : one twisted central value, against the Hurwitz oracle
moment1  : empirical first moment for one family
moment2  : empirical second moment for one family
predict  : all predicted constants/coefficients with their components
compare  : an X-sweep of empirical vs predicted, with residual-trend checks
verify   : the oracle-equivalence suites, with a two-run determinism check

Reports are JSON with a deterministic `body` (hashed) and a `meta` section
holding wall-clock data; `--csv` appends flat rows for plotting.  Exit codes:
0 pass, 1 tolerance failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    q: int = 17
    char_label: str = "quartic"  # "quartic", "trivial", or comma-separated exponents
    r: int = 34
    h: int = 1
    l: int = 1
    d: int = 3
    X: float = 65536.0
    x_list: list[float] = field(default_factory=list)
    Y: float = -1.0  # -1 means floor(X^(1/8))
    delta: float = 0.05
    workers: int = 1
    out: str | None = None
    csv: str | None = None
    tol_scale: float = 1.0
    gauss_smax: int = 300
    quartic: bool = False
    prefactor_convention: str = "an02"

    def resolved_Y(self, X: float) -> float:
        return max(1.0, float(math.floor(X**0.125))) if self.Y < 0 else self.Y


def parse_config_file(path: str) -> dict:
    """Flat `key = value` lines; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"bad config line: {line!r}")
            k, v = (t.strip() for t in line.split("=", 1))
            out[k] = v
    return out


def build_config(argv: list[str]) -> RunConfig:
    ap = argparse.ArgumentParser(prog="twistmoments", description=__doc__)
    ap.add_argument("command", choices=["lvalue", "moment1", "moment2", "predict", "compare", "verify"])
    ap.add_argument("--config", help="flat key=value config file")
    ap.add_argument("--q", type=int)
    ap.add_argument("--char-label", dest="char_label")
    ap.add_argument("--r", type=int)
    ap.add_argument("--h", type=int)
    ap.add_argument("--l", type=int)
    ap.add_argument("--d", type=int)
    ap.add_argument("--X", type=float)
    ap.add_argument("--X-list", dest="x_list", help="comma-separated X sweep")
    ap.add_argument("--Y", type=float)
    ap.add_argument("--delta", type=float)
    ap.add_argument("--workers", type=int)
    ap.add_argument("--out")
    ap.add_argument("--csv")
    ap.add_argument("--tol-scale", dest="tol_scale", type=float)
    ap.add_argument("--gauss-smax", dest="gauss_smax", type=int)
    ap.add_argument("--quartic", action="store_true", default=None)
    ap.add_argument("--prefactor-convention", dest="prefactor_convention",
                    choices=["an02", "ant"])
    ns = ap.parse_args(argv)
    values: dict = {}
    if ns.config:
        values.update(parse_config_file(ns.config))
    for k, v in vars(ns).items():
        if k in ("config",) or v is None:
            continue
        values[k] = v
    cfg = RunConfig(command=values.pop("command"))
    for k, v in values.items():
        if not hasattr(cfg, k):
            raise ConfigError(f"unknown config key {k!r}")
        cur = getattr(cfg, k)
        if k == "x_list":
            v = [float(t) for t in str(v).split(",") if t]
        elif isinstance(cur, bool):
            v = str(v).lower() in ("1", "true", "yes")
        elif isinstance(cur, int):
            v = int(v)
        elif isinstance(cur, float):
            v = float(v)
        setattr(cfg, k, v)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    from .arith import factorize

    if cfg.q < 1 or cfg.q % 2 == 0:
        raise ConfigError("q must be an odd positive integer")
    if cfg.command in ("moment1", "moment2", "compare", "predict"):
        if cfg.r % 2:
            raise ConfigError("r must be even and squarefree")
        if not factorize(cfg.r).is_squarefree():
            raise ConfigError("r must be even and squarefree")
        if cfg.r % cfg.q:
            raise ConfigError("q must divide r")
        if cfg.h % 2 == 0 or math.gcd(cfg.h, cfg.r) != 1:
            raise ConfigError("h must be odd and coprime to r")
        if cfg.l < 1:
            raise ConfigError("l must be a positive integer")


def select_character(cfg: RunConfig):
    from .characters import DirichletCharacter, character_group, find_character, principal_character

    if cfg.q == 1 or cfg.char_label == "trivial":
        return principal_character(1)
    if cfg.char_label == "quartic":
        return find_character(cfg.q, order=4, even=True, primitive=True)
    exps = tuple(int(t) for t in cfg.char_label.split(","))
    return DirichletCharacter(character_group(cfg.q), exps)


def _set_workers(n: int) -> None:
    import numba

    n = max(1, min(n, numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)


def report_body_hash(body: dict) -> str:
    data = json.dumps(body, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(data).hexdigest()


def write_report(cfg: RunConfig, body: dict, meta: dict) -> dict:
    report = {"body": body, "body_sha256": report_body_hash(body), "meta": meta}
    text = json.dumps(report, indent=1, sort_keys=True)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return report


CSV_COLUMNS = [
    "q", "r", "h", "l", "X", "Y",
    "empirical_re", "empirical_im", "predicted", "residual", "envelope", "seconds",
]


def append_csv(path: str, row: dict) -> None:
    new = False
    try:
        with open(path) as fh:
            new = not fh.readline()
    except FileNotFoundError:
        new = True
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        if new:
            w.writeheader()
        w.writerow({k: row.get(k, "") for k in CSV_COLUMNS})


# -- commands ---------------------------------------------------------------------


def cmd_lvalue(cfg: RunConfig) -> int:
    from .lvalues import TwistSpec, central_value, central_value_sq, reference_central_value

    psi = select_character(cfg)
    spec = TwistSpec(psi, cfg.d)
    t0 = time.time()
    cv = central_value(spec)
    sq = central_value_sq(spec)
    ref = reference_central_value(spec)
    body = {
        "q": cfg.q, "d": cfg.d,
        "central_value": [repr(cv.real), repr(cv.imag)],
        "central_value_sq": repr(sq),
        "oracle": [repr(ref.real), repr(ref.imag)],
        "oracle_rel_err": repr(abs(cv - ref) / (1 + abs(ref))),
        "sq_consistency_rel": repr(abs(sq - abs(cv) ** 2) / abs(cv) ** 2),
    }
    write_report(cfg, body, {"seconds": time.time() - t0})
    ok = abs(cv - ref) <= 1e-8 * (1 + abs(ref)) * cfg.tol_scale
    return 0 if ok else 1


def _one_moment(cfg: RunConfig, X: float, kind: str):
    from .moments import (FamilySpec, empirical_first_moment, empirical_second_moment,
                          envelope_first, envelope_second)
    from .predictions import (first_moment_constant, first_moment_poly_trivial,
                              nondiag_constant, second_moment_diag_poly)

    psi = select_character(cfg)
    Y = cfg.resolved_Y(X)
    spec = FamilySpec(psi, cfg.r, cfg.h, cfg.l, X, Y, cfg.delta)
    t0 = time.time()
    if kind == "moment1":
        emp, meta = empirical_first_moment(spec)
        if cfg.q == 1:
            poly = first_moment_poly_trivial(cfg.h, cfg.l, cfg.r)
            pred = poly(math.log(X))
        else:
            pred = first_moment_constant(psi, cfg.h, cfg.l, cfg.r).c0
        env = envelope_first(X, Y, cfg.l, cfg.r)
    else:
        emp, meta = empirical_second_moment(spec)
        emp = complex(emp)
        poly = second_moment_diag_poly(
            psi, cfg.h, cfg.l, cfg.r, prefactor_convention=cfg.prefactor_convention
        )
        nd = nondiag_constant(psi, cfg.h, cfg.l, cfg.r) if math.gcd(cfg.l, cfg.r) == 1 else 0.0
        pred = poly(math.log(X)) + nd
        env = envelope_second(X, Y, cfg.l, cfg.r)
    res = abs(emp - pred)
    row = {
        "q": cfg.q, "r": cfg.r, "h": cfg.h, "l": cfg.l, "X": X, "Y": Y,
        "empirical_re": repr(complex(emp).real), "empirical_im": repr(complex(emp).imag),
        "predicted": repr(complex(pred).real), "residual": repr(res),
        "envelope": repr(env), "seconds": round(time.time() - t0, 3),
    }
    return emp, pred, res, env, row, spec


def cmd_moment(cfg: RunConfig, kind: str) -> int:
    _set_workers(cfg.workers)
    emp, pred, res, env, row, spec = _one_moment(cfg, cfg.X, kind)
    body = {k: v for k, v in row.items() if k != "seconds"}
    body["regime_valid"] = spec.regime_valid
    write_report(cfg, body, {"seconds": row["seconds"]})
    if cfg.csv:
        append_csv(cfg.csv, row)
    return 0


def cmd_predict(cfg: RunConfig) -> int:
    from .predictions import (first_moment_constant, first_moment_poly_trivial,
                              nondiag_constant, quartic_closed_form,
                              second_moment_diag_poly)
    from .characters import classify

    psi = select_character(cfg)
    t0 = time.time()

    def render(x):
        if isinstance(x, complex):
            return [repr(x.real), repr(x.imag)]
        if isinstance(x, dict):
            return {k: render(v) for k, v in x.items()}
        return repr(x)

    body: dict = {"q": cfg.q, "r": cfg.r, "h": cfg.h, "l": cfg.l}
    if cfg.q == 1:
        p1 = first_moment_poly_trivial(cfg.h, cfg.l, cfg.r)
        body["first_moment_poly"] = {
            "c0": render(p1.c0), "c1": render(p1.c1),
            "components": render(p1.components),
        }
    else:
        c = first_moment_constant(psi, cfg.h, cfg.l, cfg.r)
        body["first_moment_constant"] = {
            "value": render(c.c0), "components": render(c.components)
        }
        p2 = second_moment_diag_poly(
            psi, cfg.h, cfg.l, cfg.r, prefactor_convention=cfg.prefactor_convention
        )
        body["second_moment_diag_poly"] = {
            "c0": render(p2.c0), "c1": render(p2.c1), "components": render(p2.components)
        }
        if math.gcd(cfg.l, cfg.r) == 1:
            nd = nondiag_constant(psi, cfg.h, cfg.l, cfg.r)
            body["nondiag_constant"] = render(complex(nd))
            if classify(psi).order == 4 and cfg.r == 2 * cfg.q and cfg.l == 1:
                val, comps = quartic_closed_form(psi, cfg.h)
                body["quartic_closed_form"] = {
                    "value": render(complex(val)), "components": render(comps)
                }
    write_report(cfg, body, {"seconds": round(time.time() - t0, 3)})
    return 0


def cmd_compare(cfg: RunConfig) -> int:
    _set_workers(cfg.workers)
    xs = cfg.x_list or [float(2**e) for e in range(10, 17)]
    rows1, rows2 = [], []
    t0 = time.time()
    for X in xs:
        _, _, res1, env1, row1, _ = _one_moment(cfg, X, "moment1")
        _, _, res2, env2, row2, _ = _one_moment(cfg, X, "moment2")
        rows1.append((X, res1, env1, row1))
        rows2.append((X, res2, env2, row2))
        if cfg.csv:
            append_csv(cfg.csv, row1)
            append_csv(cfg.csv, row2)
    upper = len(xs) // 2
    gcd_case = math.gcd(cfg.l, cfg.r) > 1
    checks = {}
    if gcd_case:
        checks["first_below_envelope"] = all(r <= 10.0 * e for _, r, e, _ in rows1)
        checks["second_below_envelope"] = all(r <= 10.0 * e for _, r, e, _ in rows2)
    else:
        tail1 = [r for _, r, _, _ in rows1[upper - 1 :]]
        tail2 = [r for _, r, _, _ in rows2[upper - 1 :]]
        checks["first_residual_decreasing"] = all(
            a > b for a, b in zip(tail1, tail1[1:])
        )
        checks["second_residual_decreasing"] = all(
            a > b for a, b in zip(tail2, tail2[1:])
        )
    body = {
        "sweep_X": [repr(x) for x in xs],
        "first": [r[3] for r in rows1],
        "second": [r[3] for r in rows2],
        "checks": checks,
    }
    write_report(cfg, body, {"seconds": round(time.time() - t0, 1)})
    return 0 if all(checks.values()) else 1


# -- verification suites ------------------------------------------------------------


def _suite_gauss(cfg) -> dict:
    from .gauss_sums import oracle_max_error

    err = oracle_max_error(cfg.gauss_smax, -20, 20)
    return {"max_scaled_error": repr(err), "pass": bool(err <= 1e-9 * cfg.tol_scale)}


def _suite_poisson(cfg) -> dict:
    from .moments import poisson_lhs, poisson_rhs

    tuples = [
        (3, 2, 1, 50.0, 7.0), (9, 2, 1, 80.0, 5.0), (15, 34, 3, 200.0, 3.0),
        (7, 10, 5, 90.0, 6.0), (25, 2, 1, 60.0, 4.0), (5, 34, 1, 100.0, 4.0),
    ]
    worst = 0.0
    for s, r, h, X, Y in tuples:
        lhs = poisson_lhs(h, r, X, Y, s)
        rhs = poisson_rhs(h, r, X, Y, s)
        worst = max(worst, abs(lhs - rhs) / (1 + abs(lhs)))
    return {"worst_rel_error": repr(worst), "pass": bool(worst <= 1e-8 * cfg.tol_scale)}


def _suite_afe(cfg) -> dict:
    from .lvalues import TwistSpec, central_value, central_value_sq, reference_central_value

    psi = select_character(cfg)
    worst = worst_sq = 0.0
    for d in (3, 7, 11, 21, 33):
        if math.gcd(d, 2 * cfg.q) != 1:
            continue
        spec = TwistSpec(psi, d)
        cv = central_value(spec)
        ref = reference_central_value(spec)
        worst = max(worst, abs(cv - ref) / (1 + abs(ref)))
        worst_sq = max(worst_sq, abs(central_value_sq(spec) - abs(cv) ** 2) / abs(cv) ** 2)
    return {
        "worst_afe_vs_oracle": repr(worst),
        "worst_sq_consistency": repr(worst_sq),
        "pass": bool(worst <= 1e-8 * cfg.tol_scale and worst_sq <= 1e-7 * cfg.tol_scale),
    }


def _suite_functional_equation(cfg) -> dict:
    import random

    from .characters import classify, enumerate_characters, tau
    from .lvalues import completed_xi

    rng = random.Random(1)
    worst = 0.0
    count = 0
    mods = list(range(3, 201))
    rng.shuffle(mods)
    for N in mods:
        evens = [c for c in enumerate_characters(N)
                 if classify(c).is_primitive and classify(c).is_even and not c.is_principal()]
        if not evens:
            continue
        chi = rng.choice(evens)
        for s in (0.3 + 0.7j, 0.5, 0.9 - 1.3j):
            lhs = completed_xi(chi.conj(), 1 - s)
            rhs = math.sqrt(N) / tau(chi) * completed_xi(chi, s)
            worst = max(worst, abs(lhs - rhs) / abs(rhs))
        count += 1
        if count >= 6:
            break
    return {"worst_rel_residual": repr(worst), "pass": bool(worst <= 1e-8 * cfg.tol_scale)}


def _suite_euler(cfg) -> dict:
    from .characters import find_character
    from .predictions import (H_star_factor, H_star_raw_generic, K_closed,
                              K_star_alpha_product, eta_factor, eta_local_series)

    psi = select_character(cfg) if cfg.q > 1 else find_character(17, order=4, even=True, primitive=True)
    q = psi.group.N
    r = 2 * q
    chi = (psi * psi).conj()
    worst_eta = max(
        abs(eta_factor(psi, p, s, 1, r) - eta_local_series(psi, p, s))
        for p in (3, 5, 19) if q % p
        for s in (1.0, 1.2)
    )
    kc = K_closed(chi, 0.25, 1, r, q)
    ka = (chi(2) * 2 ** (1 - 0.5) - 1.0) * K_star_alpha_product(chi, 0.25, 1, r, q)
    k_rel = abs(kc - ka) / abs(kc)
    h_raw = abs(
        H_star_raw_generic(chi(3), 3, 0.3) - H_star_factor(chi, 3, 0.3, 1, 35, 1, q)
    )
    return {
        "worst_eta_local": repr(worst_eta),
        "K_closed_vs_alpha_rel": repr(k_rel),
        "H_star_raw_abs": repr(h_raw),
        "pass": bool(worst_eta <= 1e-10 and k_rel <= 1e-8 * cfg.tol_scale and h_raw <= 1e-10),
    }


def _suite_orthogonality(cfg) -> dict:
    from .predictions import orthogonality_average

    psi = select_character(cfg)
    worst = max(abs(orthogonality_average(psi, cfg.r, m)) for m in (1, cfg.r // 2))
    return {"worst_abs": repr(worst), "pass": bool(worst <= 1e-12)}


def _suite_quartic(cfg) -> dict:
    from .predictions import nondiag_constant, quartic_closed_form

    psi = select_character(cfg)
    nd = nondiag_constant(psi, cfg.h, 1, 2 * cfg.q)
    qc, _ = quartic_closed_form(psi, cfg.h)
    rel = abs(nd - qc) / abs(qc)
    return {"cross_method_rel": repr(rel), "pass": bool(rel <= 1e-6 * cfg.tol_scale)}


VERIFY_SUITES = {
    "gauss_sums": _suite_gauss,
    "poisson": _suite_poisson,
    "afe_vs_oracle": _suite_afe,
    "functional_equation": _suite_functional_equation,
    "euler_products": _suite_euler,
    "orthogonality": _suite_orthogonality,
}


def cmd_verify(cfg: RunConfig, fault_inject: str | None = None) -> int:
    suites = dict(VERIFY_SUITES)
    if cfg.quartic:
        suites["quartic_cross_check"] = _suite_quartic

    def run_all() -> dict:
        out = {}
        for name, fn in suites.items():
            res = fn(cfg)
            if fault_inject == name:
                res = dict(res, pass_=False)
                res["pass"] = False
                res["fault_injected"] = True
            out[name] = res
        return out

    t0 = time.time()
    _set_workers(1)
    first = run_all()
    _set_workers(cfg.workers)
    second = run_all()
    determinism = report_body_hash(first) == report_body_hash(second)
    body = {"suites": first, "determinism_two_runs": determinism}
    write_report(cfg, body, {"seconds": round(time.time() - t0, 1), "workers": cfg.workers})
    failing = [n for n, r in first.items() if not r["pass"]]
    if not determinism:
        failing.append("determinism")
    if failing:
        print(f"FAILED suites: {', '.join(failing)}", file=sys.stderr)
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = build_config(argv)
    except (ConfigError, SystemExit) as e:
        if isinstance(e, SystemExit):
            return int(e.code or 0)
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    try:
        if cfg.command == "lvalue":
            return cmd_lvalue(cfg)
        if cfg.command == "moment1":
            return cmd_moment(cfg, "moment1")
        if cfg.command == "moment2":
            return cmd_moment(cfg, "moment2")
        if cfg.command == "predict":
            return cmd_predict(cfg)
        if cfg.command == "compare":
            return cmd_compare(cfg)
        if cfg.command == "verify":
            return cmd_verify(cfg)
    except (ConfigError, ValueError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
