"""Command-line front end: deterministic CSV artifacts for the spectrum,
discretization, cross-validation and sweep surfaces.

All subcommands accept `--config FILE` with plain `key = value` lines
(`#` comments); explicit flags override file values.  Every output
directory receives a `run-manifest.txt` (the fully resolved configuration
plus the tool version), and identical inputs with the same seed reproduce
byte-identical files.  Exit codes: 0 success, 1 usage error, 2 validation
failure under `--check`.
"""

from __future__ import annotations

import csv
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import __version__
from .analysis import (
    ErrorReport,
    Measure,
    fit_scaling_exponent,
    formulation_from_name,
    frequency_sweep,
    resonance_locator,
)
from .bem import Mesh, assemble, circulant_eigs, eig_at
from .discretization import BasisSpec, discrete_eig_elementary, spectral_error
from .errors import CylbemError
from .spectra import (
    Composite,
    FormulationId,
    OperatorId,
    OperatorKind,
    Polarization,
    ProblemConfig,
    WavenumberTag,
    eig_elementary,
    mesh_count_for,
)
from .specfun import generate_reference_table
from .bem import qmax_for

_OP_NAMES = {
    "S": OperatorKind.SINGLE_LAYER,
    "D": OperatorKind.DOUBLE_LAYER,
    "DSTAR": OperatorKind.ADJ_DOUBLE_LAYER,
    "D*": OperatorKind.ADJ_DOUBLE_LAYER,
    "N": OperatorKind.HYPERSINGULAR,
    "I": OperatorKind.IDENTITY,
}


class CheckFailure(Exception):
    """An acceptance-grade invariant failed under --check."""


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def parse_config_file(path: str | Path) -> dict[str, str]:
    """`key = value` lines; `#` starts a comment; later keys win."""
    out: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.UsageError(f"bad config line: {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _merged(ctx_config: dict, **flags):
    """Flag values win over config-file values; None means unset."""
    out = dict(ctx_config)
    for key, val in flags.items():
        if val is not None:
            out[key] = val
    return out


class _OutputSet:
    """Collects output files in memory; writes all-or-nothing."""

    def __init__(self, outdir: str | Path):
        self.outdir = Path(outdir)
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str) -> None:
        self.files[name] = text

    def add_csv(self, name: str, header: list[str], rows) -> None:
        import io

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)
        self.files[name] = buf.getvalue()

    def write_all(self, manifest: dict) -> list[Path]:
        self.outdir.mkdir(parents=True, exist_ok=True)
        lines = [f"version = {__version__}"]
        for key in sorted(manifest):
            lines.append(f"{key} = {manifest[key]}")
        self.files["run-manifest.txt"] = "\n".join(lines) + "\n"
        written = []
        try:
            for name, text in sorted(self.files.items()):
                p = self.outdir / name
                p.write_text(text)
                written.append(p)
        except BaseException:
            for p in written:
                p.unlink(missing_ok=True)
            raise
        return written


def _parse_ops(spec: str) -> list[OperatorKind]:
    kinds = []
    for tok in spec.split(","):
        tok = tok.strip().upper()
        if tok not in _OP_NAMES:
            raise click.UsageError(f"unknown operator {tok!r} (expect S,D,Dstar,N,I)")
        kinds.append(_OP_NAMES[tok])
    return kinds


def _parse_range(spec: str) -> tuple[float, float]:
    try:
        lo, hi = spec.split(":")
        return float(lo), float(hi)
    except ValueError as exc:
        raise click.UsageError(f"bad range {spec!r}, expected LO:HI") from exc


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="key = value configuration file; flags override it.")
@click.pass_context
def cli(ctx, config_path):
    """Spectral-error prediction and BEM measurement on the circular cylinder."""
    ctx.ensure_object(dict)
    ctx.obj["config"] = parse_config_file(config_path) if config_path else {}


@cli.command()
@click.option("--ka", type=float, default=None)
@click.option("--a", type=float, default=None)
@click.option("--eta", type=float, default=None)
@click.option("--ops", default=None, help="comma list of S,D,Dstar,N,I")
@click.option("--wavenumber", type=click.Choice(["k", "ktilde"]), default=None)
@click.option("--qmax", type=int, default=None)
@click.option("--outdir", default=None)
@click.pass_context
def spectrum(ctx, ka, a, eta, ops, wavenumber, qmax, outdir):
    """Continuous operator eigenvalues: CSV of q, operator, Re/Im(lambda)."""
    cfgd = _merged(ctx.obj["config"], ka=ka, a=a, eta=eta, ops=ops,
                   wavenumber=wavenumber, qmax=qmax, outdir=outdir)
    ka = float(cfgd.get("ka", 10.0))
    a = float(cfgd.get("a", 1.0))
    eta = float(cfgd.get("eta", 1.0))
    kinds = _parse_ops(str(cfgd.get("ops", "S,D,Dstar,N,I")))
    tag = WavenumberTag.K if str(cfgd.get("wavenumber", "k")) == "k" else WavenumberTag.K_TILDE
    qm = int(cfgd.get("qmax", qmax_for(ka)))
    outdir = str(cfgd.get("outdir", "out-spectrum"))

    cfg = ProblemConfig(a=a, k=ka / a, eta=eta, N=max(4, 2 * qm), p=1)
    rows = []
    for kind in kinds:
        op = OperatorId(kind, tag)
        for q in range(-qm, qm + 1):
            lam = eig_elementary(op, q, cfg)
            rows.append([q, str(op), _fmt(lam.real), _fmt(lam.imag)])
    out = _OutputSet(outdir)
    out.add_csv("spectrum.csv", ["q", "operator", "re_lambda", "im_lambda"], rows)
    out.write_all({"command": "spectrum", "ka": _fmt(ka), "a": _fmt(a), "eta": _fmt(eta),
                   "ops": ",".join(k.value for k in kinds), "wavenumber": tag.value,
                   "qmax": qm})
    click.echo(f"wrote {len(rows)} rows to {outdir}/spectrum.csv")


@cli.command("discrete-spectrum")
@click.option("--ka", type=float, default=None)
@click.option("--a", type=float, default=None)
@click.option("--n", "n_elems", type=int, default=None, help="element count (default 2*round(2 ka))")
@click.option("--p", type=int, default=None)
@click.option("--smax", type=int, default=None)
@click.option("--ops", default=None)
@click.option("--outdir", default=None)
@click.pass_context
def discrete_spectrum(ctx, ka, a, n_elems, p, smax, ops, outdir):
    """Folded eigenvalues and error split: q, lambda, lambda_hat, E^P, E^A."""
    cfgd = _merged(ctx.obj["config"], ka=ka, a=a, n=n_elems, p=p, smax=smax,
                   ops=ops, outdir=outdir)
    ka = float(cfgd.get("ka", 10.0))
    a = float(cfgd.get("a", 1.0))
    p = int(cfgd.get("p", 1))
    N = int(cfgd.get("n", mesh_count_for(ka)))
    smax = int(cfgd.get("smax", 64))
    default_ops = "S,D,Dstar,N,I" if p >= 1 else "S,D,Dstar,I"
    kinds = _parse_ops(str(cfgd.get("ops", default_ops)))
    outdir = str(cfgd.get("outdir", "out-discrete-spectrum"))

    cfg = ProblemConfig(a=a, k=ka / a, N=N, p=p)
    b = BasisSpec(p, N)
    rows = []
    for kind in kinds:
        op = OperatorId(kind)
        for q in range(-N // 2, N // 2):
            r = spectral_error(op, q, cfg, b, smax)
            rows.append([q, str(op),
                         _fmt(r.lambda_cont.real), _fmt(r.lambda_cont.imag),
                         _fmt(r.lambda_disc.real), _fmt(r.lambda_disc.imag),
                         _fmt(r.proj_err.real), _fmt(r.proj_err.imag),
                         _fmt(r.alias_err.real), _fmt(r.alias_err.imag),
                         int(r.resonant)])
    out = _OutputSet(outdir)
    out.add_csv("discrete_spectrum.csv",
                ["q", "operator", "re_lambda", "im_lambda", "re_lambda_hat",
                 "im_lambda_hat", "re_proj_err", "im_proj_err",
                 "re_alias_err", "im_alias_err", "resonant"], rows)
    out.write_all({"command": "discrete-spectrum", "ka": _fmt(ka), "a": _fmt(a),
                   "N": N, "p": p, "smax": smax,
                   "ops": ",".join(k.value for k in kinds)})
    click.echo(f"wrote {len(rows)} rows to {outdir}/discrete_spectrum.csv")


@cli.command("bem-validate")
@click.option("--ka", type=float, default=None)
@click.option("--a", type=float, default=None)
@click.option("--n", "n_elems", type=int, default=None)
@click.option("--p", type=int, default=None)
@click.option("--smax", type=int, default=None)
@click.option("--ops", default=None)
@click.option("--outdir", default=None)
@click.option("--check", is_flag=True, default=False,
              help="exit 2 unless every relative deviation is <= 1e-6")
@click.pass_context
def bem_validate(ctx, ka, a, n_elems, p, smax, ops, outdir, check):
    """Quadrature-assembled eigenvalues against folded-sum predictions."""
    cfgd = _merged(ctx.obj["config"], ka=ka, a=a, n=n_elems, p=p, smax=smax,
                   ops=ops, outdir=outdir)
    ka = float(cfgd.get("ka", 10.0))
    a = float(cfgd.get("a", 1.0))
    p = int(cfgd.get("p", 1))
    N = int(cfgd.get("n", mesh_count_for(ka)))
    smax = int(cfgd.get("smax", 0)) or _validation_smax(N)
    default_ops = "S,D,Dstar,N,I" if p >= 1 else "S,D,Dstar,I"
    kinds = _parse_ops(str(cfgd.get("ops", default_ops)))
    outdir = str(cfgd.get("outdir", "out-bem-validate"))

    cfg = ProblemConfig(a=a, k=ka / a, N=N, p=p)
    b = BasisSpec(p, N)
    mesh = Mesh(N, a)
    rows = []
    worst = 0.0
    import warnings as _warnings

    for kind in kinds:
        op = OperatorId(kind)
        mat = assemble(op, mesh, b, cfg)
        lam_meas = circulant_eigs(mat)
        with _warnings.catch_warnings():
            _warnings.simplefilter("ignore")
            for q in range(-N // 2, N // 2):
                pred = discrete_eig_elementary(op, q, cfg, b, smax)
                meas = eig_at(lam_meas, q)
                dev = abs(meas - pred) / abs(pred)
                worst = max(worst, dev)
                rows.append([q, str(op), _fmt(pred.real), _fmt(pred.imag),
                             _fmt(meas.real), _fmt(meas.imag), _fmt(dev)])
    out = _OutputSet(outdir)
    out.add_csv("bem_validate.csv",
                ["q", "operator", "re_lambda_hat_predicted", "im_lambda_hat_predicted",
                 "re_lambda_hat_measured", "im_lambda_hat_measured",
                 "relative_deviation"], rows)
    out.write_all({"command": "bem-validate", "ka": _fmt(ka), "a": _fmt(a), "N": N,
                   "p": p, "smax": smax, "ops": ",".join(k.value for k in kinds)})
    click.echo(f"max relative deviation {worst:.3e} over {len(rows)} rows -> {outdir}/")
    if check and not worst <= 1e-6:
        raise CheckFailure(f"max relative deviation {worst:.3e} exceeds 1e-6")


def _validation_smax(N: int) -> int:
    """Largest fold count keeping required orders inside the table cap."""
    from .specfun import MAX_ORDER

    return max(64, (MAX_ORDER - N) // N)


_MEASURES = {"L2": Measure.L2, "HS": Measure.HS, "HKS": Measure.HKS}


@cli.command("error-sweep")
@click.option("--pol", type=click.Choice(["TM", "TE"]), default=None)
@click.option("--formulations", default=None, help="comma list of EFIE,MFIE,CCFIE")
@click.option("--ka", "ka_range", default=None, help="range LO:HI")
@click.option("--points", type=int, default=None)
@click.option("--measure", default=None, type=click.Choice(["L2", "Hs", "Hks"], case_sensitive=False))
@click.option("--p", type=int, default=None)
@click.option("--a", type=float, default=None)
@click.option("--eta", type=float, default=None)
@click.option("--smax", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--jitter", type=float, default=None)
@click.option("--mask-radius", type=float, default=None)
@click.option("--predicted-only", is_flag=True, default=False,
              help="skip the BEM solves (fast, prediction columns only)")
@click.option("--outdir", default=None)
@click.option("--check", is_flag=True, default=False,
              help="exit 2 on closure/slope/resonance-immunity violations")
@click.pass_context
def error_sweep(ctx, pol, formulations, ka_range, points, measure, p, a, eta, smax,
                seed, jitter, mask_radius, predicted_only, outdir, check):
    """Fixed points-per-wavelength frequency sweep of current errors."""
    cfgd = _merged(ctx.obj["config"], pol=pol, formulations=formulations,
                   ka=ka_range, points=points, measure=measure, p=p, a=a, eta=eta,
                   smax=smax, seed=seed, jitter=jitter, mask_radius=mask_radius,
                   outdir=outdir)
    pol = Polarization[str(cfgd.get("pol", "TM")).upper()]
    names = [s.strip().upper() for s in str(cfgd.get("formulations", "EFIE,MFIE,CCFIE")).split(",")]
    lo, hi = _parse_range(str(cfgd.get("ka", "5:100")))
    points = int(cfgd.get("points", 24))
    meas = _MEASURES[str(cfgd.get("measure", "Hks")).upper()]
    p = int(cfgd.get("p", 1))
    a = float(cfgd.get("a", 1.0))
    eta = float(cfgd.get("eta", 1.0))
    smax = int(cfgd.get("smax", 64))
    seed = int(cfgd.get("seed", 0))
    jitter = float(cfgd.get("jitter", 0.25))
    mask_radius = float(cfgd.get("mask_radius", 0.05))
    outdir = str(cfgd.get("outdir", "out-error-sweep"))
    with_measured = not predicted_only

    threads = max(1, int(os.environ.get("CYLBEM_THREADS", "1")))

    def run_one(name: str) -> list[ErrorReport]:
        f = formulation_from_name(name, pol)
        return frequency_sweep(f, meas, (lo, hi), points, a=a, eta=eta, p=p,
                               smax=smax, seed=seed, jitter=jitter,
                               mask_radius=mask_radius, with_measured=with_measured)

    if threads > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sweeps = list(pool.map(run_one, names))
    else:
        sweeps = [run_one(name) for name in names]

    rows = []
    for name, reps in zip(names, sweeps):
        for rep in reps:
            rows.append([_fmt(rep.ka), rep.N, rep.formulation, rep.polarization,
                         rep.measure, _fmt(rep.r_predicted),
                         "" if rep.r_measured is None else _fmt(rep.r_measured),
                         str(rep.resonance_flag).lower()])
    out = _OutputSet(outdir)
    out.add_csv("error_sweep.csv",
                ["ka", "N", "formulation", "polarization", "measure",
                 "r_predicted", "r_measured", "resonance_flag"], rows)
    out.add("plot_sweep.py", _PLOT_SCRIPT)
    out.write_all({"command": "error-sweep", "pol": pol.value,
                   "formulations": ",".join(names), "ka": f"{_fmt(lo)}:{_fmt(hi)}",
                   "points": points, "measure": meas.value, "p": p, "a": _fmt(a),
                   "eta": _fmt(eta), "smax": smax, "seed": seed,
                   "jitter": _fmt(jitter), "mask_radius": _fmt(mask_radius),
                   "measured": str(with_measured).lower()})
    click.echo(f"wrote {len(rows)} sweep rows to {outdir}/error_sweep.csv")

    if check:
        _check_sweeps(names, sweeps, pol, with_measured, lo, hi)


def _check_sweeps(names, sweeps, pol, with_measured, lo, hi):
    problems = []
    slopes = {}
    for name, reps in zip(names, sweeps):
        kas = np.array([r.ka for r in reps])
        rp = np.array([r.r_predicted for r in reps])
        rm = np.array([math.nan if r.r_measured is None else r.r_measured for r in reps])
        flags = np.array([r.resonance_flag for r in reps])
        ok = np.isfinite(rp)
        if with_measured:
            use = ok & np.isfinite(rm) & ~flags
            gaps = np.abs(rp[use] - rm[use]) / rm[use]
            if gaps.size and np.max(gaps) > 0.05:
                problems.append(f"{name}: predicted/measured gap {np.max(gaps):.3f} > 5%")
        if name == "CCFIE":
            vals = rp[ok]
            if vals.size and np.nanmax(vals) / np.nanmedian(vals) >= 3.0:
                problems.append(f"CCFIE max/median {np.nanmax(vals)/np.nanmedian(vals):.2f} >= 3")
        if hi / max(lo, 1e-9) >= 10:
            try:
                fit = fit_scaling_exponent(reps, mask=(kas >= max(lo, hi / 10.0)))
                slopes[name] = fit.slope
            except CylbemError:
                pass
    flat = {"TM": ("EFIE", "MFIE", "CCFIE"), "TE": ("MFIE",)}[pol.value]
    for name in flat:
        if name in slopes and not (-0.1 <= slopes[name] <= 0.1):
            problems.append(f"{pol.value}-{name} slope {slopes[name]:.3f} outside [-0.1, 0.1]")
    if pol is Polarization.TE and "EFIE" in slopes:
        if not (0.2 <= slopes["EFIE"] <= 0.45):
            problems.append(f"TE-EFIE slope {slopes['EFIE']:.3f} outside [0.2, 0.45]")
        if "CCFIE" in slopes and not slopes["CCFIE"] <= slopes["EFIE"] - 0.1:
            problems.append("TE-CCFIE slope not below TE-EFIE slope - 0.1")
    if problems:
        raise CheckFailure("; ".join(problems))
    click.echo("all sweep checks passed")


@cli.command("fit-scaling")
@click.option("--input", "input_csv", required=True, type=click.Path(exists=True))
@click.option("--formulation", default=None)
@click.option("--pol", default=None)
@click.option("--use", type=click.Choice(["predicted", "measured"]), default="predicted")
@click.option("--ka-min", type=float, default=None)
@click.option("--ka-max", type=float, default=None)
def fit_scaling(input_csv, formulation, pol, use, ka_min, ka_max):
    """OLS scaling exponent from an error-sweep CSV."""
    reps = []
    with open(input_csv, newline="") as fh:
        for rec in csv.DictReader(fh):
            if formulation and rec["formulation"].upper() != formulation.upper():
                continue
            if pol and rec["polarization"].upper() != pol.upper():
                continue
            reps.append(ErrorReport(
                ka=float(rec["ka"]), N=int(rec["N"]), formulation=rec["formulation"],
                polarization=rec["polarization"], measure=rec["measure"],
                r_predicted=float(rec["r_predicted"]),
                r_measured=float(rec["r_measured"]) if rec["r_measured"] else None,
                resonance_flag=rec["resonance_flag"] == "true"))
    if not reps:
        raise click.UsageError("no matching rows in sweep CSV")
    kas = np.array([r.ka for r in reps])
    mask = np.ones(len(reps), dtype=bool)
    if ka_min is not None:
        mask &= kas >= ka_min
    if ka_max is not None:
        mask &= kas <= ka_max
    fit = fit_scaling_exponent(reps, mask=mask, use_measured=(use == "measured"))
    click.echo(f"slope = {fit.slope:.6f} +- {fit.half_width_95:.6f} (95%), n = {fit.n_used}")


@cli.command("oracle-gen")
@click.option("--out", default=None, type=click.Path())
@click.option("--dps", type=int, default=50)
def oracle_gen(out, dps):
    """Regenerate the high-precision cylinder-function reference table."""
    kwargs = {"dps": dps}
    if out is not None:
        kwargs["path"] = out
    n = generate_reference_table(**kwargs)
    click.echo(f"wrote {n} oracle rows")


_PLOT_SCRIPT = '''\
"""Plot an error sweep CSV: predicted (circles) vs measured (crosses)
against ka, one series per formulation.  Usage:

    python plot_sweep.py [error_sweep.csv]
"""
import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "error_sweep.csv"
series = defaultdict(lambda: ([], [], []))
measure = ""
with open(path, newline="") as fh:
    for rec in csv.DictReader(fh):
        key = f"{rec['polarization']}-{rec['formulation']}"
        ka = float(rec["ka"])
        measure = rec["measure"]
        series[key][0].append(ka)
        series[key][1].append(float(rec["r_predicted"]))
        series[key][2].append(float(rec["r_measured"]) if rec["r_measured"] else float("nan"))

fig, ax = plt.subplots(figsize=(7, 5))
for key, (ka, rp, rm) in sorted(series.items()):
    line, = ax.loglog(ka, rp, "o-", ms=4, lw=0.8, label=f"{key} (p.)")
    ax.loglog(ka, rm, "x", ms=6, color=line.get_color(), label=f"{key} (n.)")
ax.set_xlabel("ka")
ax.set_ylabel(f"relative current error, {measure}")
ax.grid(True, which="both", alpha=0.3)
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig("error_sweep.png", dpi=160)
print("wrote error_sweep.png")
'''


def main(argv=None) -> int:
    """Entry point with the documented exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False, obj={})
        return 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 1
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        return 1
    except CheckFailure as exc:
        click.echo(f"check failed: {exc}", err=True)
        return 2
    except CylbemError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
