"""Command-line front end: ``bergman coeffs | verify | growth | repro-test``.

Reports are JSON with exact rationals written as ``"p/q"`` strings. Exit
codes: 0 success, 2 invalid spec, 3 insufficient input order, 4 oracle
failure.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass

import click
import numpy as np

from . import potentials
from .asymptotics import growth_fit, loglog_slope, optimal_truncation, remainder_scan
from .errors import (DegenerateMetric, DomainError, InsufficientInputOrder,
                     NonIntegrableWeight, PreconditionViolated, QuadratureNotConverged,
                     SpecError, TailNotConverged, TruncationUnreliable)
from .geometry import PotentialJet, polarize
from .jets import Jet, key_degree
from .oracles import KernelModel, reproducing_test
from .recursion import CoefficientTable, compute_all, required_order
from .scalars import EXACT, FLOAT, MODES, conj, exact, format_exact

EXIT_OK, EXIT_SPEC, EXIT_ORDER, EXIT_ORACLE = 0, 2, 3, 4
# a model evaluated outside its domain or an uncertified jet also means no usable oracle value
ORACLE_ERRORS = (QuadratureNotConverged, TailNotConverged, NonIntegrableWeight, DomainError,
                 TruncationUnreliable)
BUILTIN_NAMES = ("fock", "fubini_study", "hyperbolic")


# ---------------------------------------------------------------------------
# potential specification files


@dataclass
class PotentialSpec:
    n: int
    mode: str
    builtin: str | None = None
    radial: list | None = None
    monomials: list | None = None      # [(alpha, beta, value)] sorted, Hermitian-closed
    order: int | None = None

    def canonical(self) -> dict:
        out = {"n": self.n, "mode": self.mode}
        if self.builtin is not None:
            out["builtin"] = self.builtin
        elif self.radial is not None:
            out["builtin"] = {"radial": [_num_out(c, self.mode) for c in self.radial]}
        else:
            out["monomials"] = [_monomial_out(a, b, v, self.mode) for a, b, v in self.monomials]
        if self.order is not None:
            out["order"] = self.order
        return out

    def digest(self) -> str:
        return hashlib.sha256(_dumps(self.canonical()).encode()).hexdigest()

    def potential(self, order: int) -> PotentialJet:
        """The potential jet known to ``order`` (polynomial specs are exact
        at every order unless the file pins ``order``)."""
        if self.order is not None and self.order < order:
            raise InsufficientInputOrder(
                f"spec gives the potential to order {self.order}, need {order}")
        if self.builtin is not None:
            return potentials.BUILTINS[self.builtin](self.n, order, self.mode)
        if self.radial is not None:
            return potentials.radial(self.radial, self.n, max(order, 2 * len(self.radial)), self.mode)
        top = max((sum(a) + sum(b) for a, b, _ in self.monomials), default=2)
        return potentials.from_monomials(self.n, self.monomials, max(order, top), self.mode)


def _num_in(value, mode: str, im=None):
    if mode == EXACT:
        if isinstance(value, float) or isinstance(im, float):
            raise SpecError(f"exact mode needs rational strings, got {value!r}")
        try:
            return exact(str(value), str(im) if im is not None else 0)
        except (ValueError, ZeroDivisionError) as e:
            raise SpecError(f"bad rational {value!r}") from e
    return complex(float(value), float(im or 0))


def _num_out(value, mode: str):
    if mode == EXACT:
        re, im = format_exact(value)
        return re if im == "0" else {"re": re, "im": im}
    c = complex(value)
    return c.real if c.imag == 0 else {"re": c.real, "im": c.imag}


def _monomial_out(alpha, beta, value, mode):
    if mode == EXACT:
        re, im = format_exact(value)
    else:
        c = complex(value)
        re, im = c.real, c.imag
    return {"alpha": list(alpha), "beta": list(beta), "re": re, "im": im}


def parse_spec(data: dict) -> PotentialSpec:
    """Validate a decoded spec file; raises :class:`SpecError`."""
    if not isinstance(data, dict):
        raise SpecError("spec must be a JSON object")
    mode = data.get("mode", EXACT)
    if mode not in MODES:
        raise SpecError(f"mode must be one of {MODES}")
    n = data.get("n", 1)
    if not isinstance(n, int) or n < 1:
        raise SpecError("n must be a positive integer")
    order = data.get("order")
    if order is not None and (not isinstance(order, int) or order < 2):
        raise SpecError("order must be an integer >= 2")
    b = data.get("builtin")
    if b is not None:
        if "monomials" in data:
            raise SpecError("give either builtin or monomials, not both")
        if isinstance(b, str):
            if b not in BUILTIN_NAMES:
                raise SpecError(f"unknown builtin {b!r}")
            return PotentialSpec(n, mode, builtin=b, order=order)
        if isinstance(b, dict) and set(b) == {"radial"} and isinstance(b["radial"], list) and b["radial"]:
            vals = [_num_in(v, mode) for v in b["radial"]]
            return PotentialSpec(n, mode, radial=vals, order=order)
        raise SpecError(f"bad builtin entry {b!r}")
    mons = data.get("monomials")
    if not isinstance(mons, list) or not mons:
        raise SpecError("spec needs a builtin or a non-empty monomial list")
    given = {}
    for m in mons:
        try:
            alpha = tuple(int(x) for x in m["alpha"])
            beta = tuple(int(x) for x in m["beta"])
        except (KeyError, TypeError, ValueError) as e:
            raise SpecError(f"bad monomial entry {m!r}") from e
        if len(alpha) != n or len(beta) != n or min(alpha + beta) < 0:
            raise SpecError(f"multi-indices of {m!r} must be {n} non-negative integers")
        value = _num_in(m.get("re", 0), mode, m.get("im", 0))
        if (alpha, beta) in given:
            raise SpecError(f"duplicate monomial alpha={list(alpha)} beta={list(beta)}")
        given[(alpha, beta)] = value
    zero = tuple([0] * n)
    if given.get((zero, zero), 0) != 0:
        raise SpecError("constant term must be absent or zero")
    closed = dict(given)
    for (alpha, beta), value in given.items():
        partner = (beta, alpha)
        if partner in given:
            other = given[partner]
            ok = other == conj(value) if mode == EXACT else abs(other - np.conj(value)) <= 1e-12
            if not ok:
                raise SpecError(f"Hermitian conflict at alpha={list(alpha)} beta={list(beta)}: "
                                f"{_num_out(value, mode)} vs {_num_out(other, mode)}")
        else:
            closed[partner] = conj(value)
    entries = sorted((a, b, v) for (a, b), v in closed.items() if v != 0)
    return PotentialSpec(n, mode, monomials=entries, order=order)


def load_spec(path: str) -> PotentialSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise SpecError(f"cannot read spec {path}: {e}") from e
    return parse_spec(data)


# ---------------------------------------------------------------------------
# serialization


def _plain(obj):
    """JSON-safe copy: numpy scalars become Python ones, non-finite floats
    become the strings ``"inf"``, ``"-inf"`` and ``"nan"``."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def _dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False)


def jet_records(jet: Jet) -> list:
    n = jet.layout.groups[0].n
    rows = []
    for key in sorted(jet.terms, key=lambda kk: (key_degree(kk), jet.layout.unpack(kk))):
        e = jet.layout.unpack(key)
        rows.append(_monomial_out(e[:n], e[n:], jet.terms[key], jet.mode))
    return rows


def table_records(table: CoefficientTable) -> list:
    return [{"m": m, "terms": jet_records(b)} for m, b in enumerate(table.b)]


def write_atomic(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(report: dict, out: str | None, csv_path: str | None, header=None, rows=None):
    text = _dumps(report) + "\n"
    if out:
        write_atomic(out, text)
    else:
        click.echo(text, nl=False)
    if csv_path and header is not None:
        write_atomic(csv_path, _csv_text(header, rows))


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as e:
        raise click.BadParameter(f"expected a comma-separated list, got {text!r}") from e


def _ints(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as e:
        raise click.BadParameter(f"expected a comma-separated integer list, got {text!r}") from e


def _fail(code: int, msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _run_guarded(fn):
    """Map library errors onto the exit-code contract."""
    try:
        return fn()
    except (SpecError, PreconditionViolated, DegenerateMetric) as e:
        _fail(EXIT_SPEC, str(e))
    except InsufficientInputOrder as e:
        _fail(EXIT_ORDER, str(e))
    except ORACLE_ERRORS as e:
        _fail(EXIT_ORACLE, str(e))


# ---------------------------------------------------------------------------
# commands


@click.group()
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed recorded in reports; randomized checks derive from it.")
@click.pass_context
def main(ctx, seed):
    """Bergman kernel coefficients and asymptotic checks."""
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed


def _table_for(spec: PotentialSpec, M: int, D: int, threads: int | None = None) -> CoefficientTable:
    p = spec.potential(required_order(M, D))
    return compute_all(p, M, D, workers=threads)


@main.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(dir_okay=False))
@click.option("--order", "M", required=True, type=click.IntRange(0))
@click.option("--cap", "D", default=4, show_default=True, type=click.IntRange(0))
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None,
              help="Also write the coefficient table as CSV.")
@click.pass_context
def coeffs(ctx, spec_path, M, D, out, csv_path):
    """Compute b_0..b_M as jets of degree D."""

    def run():
        spec = load_spec(spec_path)
        table = _table_for(spec, M, D)
        report = {
            "command": {"name": "coeffs", "order": M, "cap": D, "seed": ctx.obj["seed"]},
            "spec": spec.canonical(),
            "input_hash": spec.digest(),
            "mode": spec.mode,
            "required_order": required_order(M, D),
            "tables": {"b": table_records(table)},
        }
        rows = [[r["m"], " ".join(map(str, t["alpha"])), " ".join(map(str, t["beta"])), t["re"], t["im"]]
                for r in report["tables"]["b"] for t in r["terms"]]
        _emit(report, out, csv_path, ["m", "alpha", "beta", "re", "im"], rows)

    _run_guarded(run)


MODEL_NAMES = ("fock", "fubini_study", "hyperbolic", "quartic")
EXACT_SYMBOL_DEGREE = {"fock": 0, "fubini_study": 1, "hyperbolic": 1}


def _model(name: str, lam: str) -> KernelModel:
    if name == "quartic":
        return KernelModel.quartic(exact(lam))
    return KernelModel(name)


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError as e:
        raise click.BadParameter(f"bad complex number {text!r}") from e


@main.command()
@click.option("--model", type=click.Choice(MODEL_NAMES), required=True)
@click.option("--k", "k_text", default="20,30,40,60,80", show_default=True)
@click.option("--n-trunc", "n_text", default="0,1,2,3", show_default=True)
@click.option("--x", "x_text", default="0", show_default=True)
@click.option("--y", "y_text", default="0", show_default=True)
@click.option("--lam", default="1/10", show_default=True, help="Quartic coefficient.")
@click.option("--slope-tol", default=0.5, show_default=True)
@click.option("--exact-tol", default=1e-9, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def verify(ctx, model, k_text, n_text, x_text, y_text, lam, slope_tol, exact_tol, out, csv_path):
    """Remainders of the truncated expansion against a model kernel."""
    ks, Ns = _floats(k_text), _ints(n_text)
    x, y = _complex(x_text), _complex(y_text)

    def run():
        m = _model(model, lam)
        M = max(Ns + [1])
        p = m.potential(required_order(M, 4))
        table = compute_all(p, M, 4)
        scan = remainder_scan(m, table, polarize(p), ks, Ns, x, y)
        checks = []
        for N, row in zip(Ns, scan.errors):
            if model in EXACT_SYMBOL_DEGREE:
                if N >= EXACT_SYMBOL_DEGREE[model]:
                    ok = max(row) <= exact_tol
                    checks.append({"N": N, "kind": "exact", "max_error": max(row), "pass": ok})
            else:
                s = scan.slopes[N]
                ok = math.isfinite(s) and abs(s + (N + 1)) <= slope_tol
                checks.append({"N": N, "kind": "slope", "slope": s, "target": -(N + 1), "pass": ok})
        report = {
            "command": {"name": "verify", "model": model, "k": ks, "n_trunc": Ns,
                        "x": [x.real, x.imag], "y": [y.real, y.imag], "seed": ctx.obj["seed"]},
            "mode": FLOAT,
            "errors": [{"N": N, "R": row} for N, row in zip(Ns, scan.errors)],
            "fits": [{"N": N, "slope": scan.slopes[N], "residual": scan.residuals[N]} for N in Ns],
            "checks": checks,
            "pass": all(c["pass"] for c in checks),
        }
        rows = [[N, k, e] for N, row in zip(Ns, scan.errors) for k, e in zip(ks, row)]
        _emit(report, out, csv_path, ["N", "k", "R"], rows)

    _run_guarded(run)


@main.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(dir_okay=False))
@click.option("--m-max", "M", required=True, type=click.IntRange(2))
@click.option("--radius", "r", default=0.25, show_default=True, type=float)
@click.option("--k", "k_opt", default=None, type=float, help="Also report N* for this k.")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def growth(ctx, spec_path, M, r, k_opt, out, csv_path):
    """Sup-norm bounds S_m and the ratios (S_m/m!)^(1/(m+1))."""
    if r <= 0:
        raise click.BadParameter("radius must be positive")

    def run():
        spec = load_spec(spec_path)
        table = _table_for(spec, M, 4)
        rep = growth_fit(table, r)
        report = {
            "command": {"name": "growth", "m_max": M, "radius": r, "seed": ctx.obj["seed"]},
            "spec": spec.canonical(),
            "input_hash": spec.digest(),
            "mode": spec.mode,
            "growth": {"S": rep.sup_norms, "ratios": rep.ratios, "argmax": rep.argmax,
                       "plateau_factor": rep.plateau_factor, "reference_m": rep.reference_m,
                       "bounded": rep.bounded},
        }
        if k_opt is not None:
            report["optimal_truncation"] = {"k": k_opt, "N": optimal_truncation(k_opt, rep)}
        rows = [[m, s, q] for m, (s, q) in enumerate(zip(rep.sup_norms, rep.ratios))]
        _emit(report, out, csv_path, ["m", "S", "ratio"], rows)

    _run_guarded(run)


REPRO_FUNCTIONS = {"1": [1], "z": [0, 1], "z2": [0, 0, 1]}


@main.command("repro-test")
@click.option("--model", type=click.Choice(MODEL_NAMES), required=True)
@click.option("--k", "k_text", default="20,40,80", show_default=True)
@click.option("--trunc", "N", default=0, show_default=True, type=click.IntRange(0))
@click.option("--lam", default="1/10", show_default=True)
@click.option("--slope-tol", default=0.5, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def repro_test(ctx, model, k_text, N, lam, slope_tol, out, csv_path):
    """Local reproducing property at x = 0 for u in {1, z, z^2}, N vs N+1."""
    ks = _floats(k_text)

    def run():
        m = _model(model, lam)
        p = m.potential(required_order(N + 1, 4))
        table = compute_all(p, N + 1, 4)
        results = []
        rows = []
        for name, u in REPRO_FUNCTIONS.items():
            errs = {N: [], N + 1: []}
            for k in ks:
                norm = math.sqrt(sum(abs(c) ** 2 * m.monomial_norm(j, k) for j, c in enumerate(u) if c))
                for nn in (N, N + 1):
                    e = reproducing_test(p, table, k, nn, u, norm=norm, profile=m.profile).error
                    errs[nn].append(e)
                    rows.append([name, k, nn, e])
            ratio = [b / a if a > 0 else float("nan") for a, b in zip(errs[N], errs[N + 1])]
            s, res = loglog_slope(ks, ratio)
            results.append({"u": name, "errors": {str(kk): v for kk, v in errs.items()},
                            "ratio": ratio, "slope": s, "residual": res,
                            "pass": math.isfinite(s) and abs(s + 1) <= slope_tol})
        report = {
            "command": {"name": "repro-test", "model": model, "k": ks, "trunc": N,
                        "seed": ctx.obj["seed"]},
            "mode": FLOAT,
            "results": results,
            "pass": all(r["pass"] for r in results),
        }
        _emit(report, out, csv_path, ["u", "k", "N", "error"], rows)

    _run_guarded(run)


if __name__ == "__main__":  # pragma: no cover
    main()
