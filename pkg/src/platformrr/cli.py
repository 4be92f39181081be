"""Command-line front end.

Subcommands wire file-based inputs (records CSV, design/coarsening/
scenario JSON) to the estimation, testing, simulation, and study
modules, and emit tables as CSV or JSON. Every subcommand is pure
given its inputs and ``--seed``: repeated runs produce byte-identical
output regardless of ``--threads``.

Exit codes: 0 on success, 2 on usage errors (bad flags or malformed
values, raised by the argument parser), 3 on computation errors
(anything raised as a PlatformRRError, printed to stderr).
"""

from __future__ import annotations

import functools
import json
import sys

import click

from .contrasts import contrast_estimate_platform, estimate_separate, get_contrast
from .data import load_dataset, validate
from .errors import PlatformRRError
from .influence import JointRREstimate, covariance_rr
from .noninferiority import NITestConfig, intersection_test, lrt_test
from .repro import STUDIES, width_ratio_bins
from .simulate import (
    Scenario,
    load_preset,
    monte_carlo,
    resample_shared_controls,
    simulate_platform,
    simulate_separate,
    true_rr,
    _generator,
)

__all__ = ["main"]


def _fail_on_module_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PlatformRRError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)

    return wrapper


def _write(ctx, text, out):
    if out is None:
        click.echo(text, nl=not text.endswith("\n"))
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _emit(ctx, obj, out):
    """Write a result object honoring --format where it has both forms."""
    fmt = ctx.obj["format"]
    text = obj.to_csv() if fmt == "csv" and hasattr(obj, "to_csv") else obj.to_json()
    _write(ctx, text, out)


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Master RNG seed.")
@click.option("--threads", type=int, default=1, show_default=True, help="Monte Carlo worker threads.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True, help="Table output format where both are supported.")
@click.pass_context
def main(ctx, seed, threads, fmt):
    """Relative-risk estimation and testing for shared-control platform trials."""
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, threads=threads, format=fmt)


def _dataset_options(fn):
    fn = click.option("--records", required=True, type=click.Path(exists=True),
                      help="Participant records CSV (id,x,delta,arm,window,z).")(fn)
    fn = click.option("--design", required=True, type=click.Path(exists=True),
                      help="Trial design JSON.")(fn)
    fn = click.option("--coarsening", type=click.Path(exists=True), default=None,
                      help="Coarsening JSON mapping z to v; default maps all z to 'all'.")(fn)
    return fn


def _parse_arms(text):
    try:
        arms = tuple(int(x) for x in str(text).split(",") if x.strip() != "")
    except ValueError:
        raise click.BadParameter(f"arms must be comma-separated integers, got {text!r}")
    if not arms:
        raise click.BadParameter("at least one arm is required")
    return arms


@main.command()
@_dataset_options
@click.option("--arms", required=True, help="Comma-separated intervention arms, e.g. 1,2,3.")
@click.option("--t", "t", required=True, type=float, help="Evaluation time.")
@click.option("--v", "v", default="all", show_default=True, help="Coarsened covariate level.")
@click.option("--survival", type=click.Choice(["na", "km"]), default="na", show_default=True,
              help="Survival transform for the plug-in.")
@click.option("--out", type=click.Path(), default=None, help="Output path (default stdout).")
@click.pass_context
@_fail_on_module_errors
def estimate(ctx, records, design, coarsening, arms, t, v, survival, out):
    """Joint relative-risk estimate with influence-function covariance (JSON)."""
    ds = load_dataset(records, design, coarsening)
    est = covariance_rr(ds, _parse_arms(arms), v, t, survival=survival)
    _write(ctx, est.to_json(), out)


@main.command()
@_dataset_options
@click.option("--arms", required=True, help="Exactly two arms, e.g. 1,2.")
@click.option("--t", "t", required=True, type=float)
@click.option("--v", "v", default="all", show_default=True)
@click.option("--contrast", "contrast_id", default="additive", show_default=True,
              help="additive, multiplicative, or log-ratio.")
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--separate-records", multiple=True, type=click.Path(exists=True),
              help="Treat inputs as separate trials: one records CSV per trial (repeatable); "
                   "--records is then ignored.")
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
@_fail_on_module_errors
def contrast(ctx, records, design, coarsening, arms, t, v, contrast_id, alpha,
             separate_records, out):
    """Relative-efficacy contrast with a delta-method Wald interval (JSON)."""
    a1, a2 = _require_two(arms)
    c = get_contrast(contrast_id)
    if separate_records:
        datasets = [load_dataset(p, design, coarsening) for p in separate_records]
        result = estimate_separate(datasets, a1, a2, v, t, c, alpha=alpha)
    else:
        ds = load_dataset(records, design, coarsening)
        est = covariance_rr(ds, (a1, a2), v, t)
        result = contrast_estimate_platform(est, a1, a2, c, alpha=alpha)
    _write(ctx, result.to_json(), out)


def _require_two(arms):
    arms = _parse_arms(arms)
    if len(arms) != 2 or arms[0] == arms[1]:
        raise click.BadParameter("exactly two distinct arms are required")
    return arms


@main.command("ni-test")
@click.option("--estimate-json", "estimate_json", type=click.Path(exists=True), default=None,
              help="Precomputed joint estimate JSON; otherwise supply dataset inputs.")
@click.option("--records", type=click.Path(exists=True), default=None)
@click.option("--design", type=click.Path(exists=True), default=None)
@click.option("--coarsening", type=click.Path(exists=True), default=None)
@click.option("--arms", default=None, help="Arms to include when estimating from a dataset.")
@click.option("--method", type=click.Choice(["intersection", "lrt"]), default="intersection",
              show_default=True)
@click.option("--ref-arm", required=True, type=int, help="Candidate arm under evaluation.")
@click.option("--delta", required=True, type=float, help="Efficacy threshold.")
@click.option("--epsilon", required=True, type=float, help="Noninferiority margin.")
@click.option("--alpha", type=float, default=0.025, show_default=True)
@click.option("--t", "t", type=float, default=None, help="Required with dataset inputs.")
@click.option("--v", "v", default="all", show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
@_fail_on_module_errors
def ni_test(ctx, estimate_json, records, design, coarsening, arms, method,
            ref_arm, delta, epsilon, alpha, t, v, out):
    """Adaptive noninferiority test against the best active comparator (JSON)."""
    if estimate_json is not None:
        with open(estimate_json, "r", encoding="utf-8") as fh:
            est = JointRREstimate.from_json(fh.read())
        t = est.t if t is None else t
        v = est.v
    else:
        if records is None or design is None or arms is None or t is None:
            raise click.UsageError("dataset inputs need --records, --design, --arms, and --t")
        ds = load_dataset(records, design, coarsening)
        est = covariance_rr(ds, _parse_arms(arms), v, t)
    cfg = NITestConfig(ref_arm=ref_arm, delta=delta, epsilon=epsilon, alpha=alpha, t=t, v=v)
    test = intersection_test if method == "intersection" else lrt_test
    _write(ctx, test(est, cfg).to_json(), out)


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), default=None,
              help="Scenario JSON; alternative to --preset.")
@click.option("--preset", "preset_name", default=None,
              help="Shipped scenario: table3, section6, or appendixF.")
@click.option("--design", "design_kind", type=click.Choice(["platform", "separate"]),
              default="platform", show_default=True)
@click.option("--scale", type=float, default=1.0, show_default=True,
              help="Multiplier on per-arm enrollment.")
@click.option("--out-prefix", required=True,
              help="Writes <prefix>.records.csv, <prefix>.design.json, <prefix>.coarsening.json "
                   "(separate trials get an .arm<k> infix).")
@click.pass_context
@_fail_on_module_errors
def simulate(ctx, scenario_path, preset_name, design_kind, scale, out_prefix):
    """Simulate one seeded dataset (or one per separate trial)."""
    sc = _load_scenario(scenario_path, preset_name)
    if scale != 1.0:
        sc = sc.scale(scale)
    seed = ctx.obj["seed"]
    if design_kind == "platform":
        written = _write_dataset_files(simulate_platform(sc, seed), out_prefix)
    else:
        written = []
        for a, ds in enumerate(simulate_separate(sc, seed), start=1):
            written += _write_dataset_files(ds, f"{out_prefix}.arm{a}")
    click.echo("\n".join(written))


def _load_scenario(scenario_path, preset_name):
    if (scenario_path is None) == (preset_name is None):
        raise click.UsageError("provide exactly one of --scenario or --preset")
    if preset_name is not None:
        return load_preset(preset_name)
    with open(scenario_path, "r", encoding="utf-8") as fh:
        return Scenario.from_json(fh.read())


def _write_dataset_files(ds, prefix):
    paths = []
    for suffix, text in (
        ("records.csv", ds.to_csv()),
        ("design.json", ds.design.to_json() + "\n"),
        ("coarsening.json", ds.coarsening.to_json() + "\n"),
    ):
        path = f"{prefix}.{suffix}"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        paths.append(path)
    return paths


@main.command()
@_dataset_options
@click.option("--target-share", required=True, type=float,
              help="Desired shared-control fraction of kept controls.")
@click.option("--typing", required=True,
              help="JSON object mapping each window to L, H, B_all, or B_sub "
                   "(literal or a file path).")
@click.option("--out-prefix", required=True)
@click.pass_context
@_fail_on_module_errors
def resample(ctx, records, design, coarsening, target_share, typing, out_prefix):
    """Subsample a two-arm dataset to a target shared-control fraction."""
    ds = load_dataset(records, design, coarsening)
    try:
        with open(typing, "r", encoding="utf-8") as fh:
            typing = fh.read()
    except OSError:
        pass
    try:
        typing_map = {int(w): str(kind) for w, kind in json.loads(typing).items()}
    except (json.JSONDecodeError, ValueError, AttributeError):
        raise click.BadParameter("--typing must be a JSON object of window:type")
    sub = resample_shared_controls(ds, target_share, typing_map, _generator(ctx.obj["seed"]))
    click.echo("\n".join(_write_dataset_files(sub, out_prefix)))


@main.command()
@click.option("--scenario", "scenario_path", type=click.Path(exists=True), default=None)
@click.option("--preset", "preset_name", default=None)
@click.option("--scale", type=float, default=1.0, show_default=True)
@click.option("--analysis", type=click.Choice(["rr", "coverage"]), default="rr",
              show_default=True, help="Per-replication metrics: plug-in RR and SE per arm, "
                                      "or Wald CI coverage of the true RR.")
@click.option("--arms", required=True)
@click.option("--t", "t", required=True, type=float)
@click.option("--v", "v", default="all", show_default=True)
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--reps", type=int, default=100, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
@_fail_on_module_errors
def mc(ctx, scenario_path, preset_name, scale, analysis, arms, t, v, alpha, reps, out):
    """Seeded Monte Carlo over platform simulations (MCSummary CSV/JSON)."""
    from scipy.special import ndtri

    sc = _load_scenario(scenario_path, preset_name)
    if scale != 1.0:
        sc = sc.scale(scale)
    arms = _parse_arms(arms)
    z = float(ndtri(1.0 - alpha / 2.0))
    truth = {a: true_rr(sc, a, v, t) for a in arms} if analysis == "coverage" else {}

    def analyze(scn, ss):
        est = covariance_rr(simulate_platform(scn, ss), arms, v, t)
        outm = {}
        for a in arms:
            i = est.arm_index(a)
            if analysis == "rr":
                outm[f"rr_{a}"] = float(est.gamma[i])
                outm[f"se_{a}"] = est.se(a)
            else:
                outm[f"cover_{a}"] = float(abs(est.gamma[i] - truth[a]) <= z * est.se(a))
        return outm

    summary = monte_carlo(sc, analyze, reps, ctx.obj["seed"], threads=ctx.obj["threads"])
    _emit(ctx, summary, out)


@main.command()
@click.argument("study", type=click.Choice(sorted(STUDIES)))
@click.option("--reps", type=int, default=None, help="Replications (study-specific default).")
@click.option("--scale", type=float, default=None, help="Enrollment scale (study-specific default).")
@click.option("--layout", type=click.Choice(["bins", "table"]), default="bins",
              show_default=True, help="section6-efficiency: histogram bins or the per-pair table.")
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
@_fail_on_module_errors
def repro(ctx, study, reps, scale, layout, out):
    """Run a named reproduction study and write its summary table."""
    kwargs = {"seed": ctx.obj["seed"], "threads": ctx.obj["threads"]}
    if reps is not None:
        kwargs["reps"] = reps
    if scale is not None:
        kwargs["scale"] = scale
    result = STUDIES[study](**kwargs)
    if study == "section6-efficiency" and layout == "bins":
        result = width_ratio_bins(result)
    _emit(ctx, result, out)


@main.command("validate")
@_dataset_options
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
@_fail_on_module_errors
def validate_cmd(ctx, records, design, coarsening, out):
    """Structural health report for a dataset (JSON)."""
    ds = load_dataset(records, design, coarsening)
    _write(ctx, validate(ds).to_json(), out)


if __name__ == "__main__":
    main()
