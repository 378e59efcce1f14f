"""Command-line interface.

Four subcommands: ``simulate`` writes synthetic prediction matrices,
``aggregate`` turns a predictions CSV into per-question labels,
``verify`` runs the built-in check suites, and ``report`` reproduces the
two standard experiment artifacts. Exit codes: 0 success, 2 usage error,
3 malformed input file, 4 computation over budget, 5 verification
failure.
"""

from __future__ import annotations

import datetime
import json
import sys

import click
import numpy as np

from . import verify as verify_mod
from .aggregate import TIE_LOWEST, TIE_UNIFORM, TiePolicy
from .core import (
    DimensionError,
    DomainError,
    FormatError,
    ResourceError,
    shuffle_apply,
    shuffle_invert,
)
from .dataio import read_predictions_csv, write_json, write_labels_csv, write_predictions_csv
from .estimate import METHODS, ErmConfig, run_pipeline
from .oracle import DifficultyMixture
from .simulate import (
    CiSimSpec,
    DifficultySimSpec,
    run_accuracy_table,
    run_gap_curve,
    simulate_ci,
    simulate_difficulty,
)

_TIE_CHOICES = {"uniform": TIE_UNIFORM, "lowest": TIE_LOWEST}


def _fail_format(exc: Exception) -> "SystemExit":
    click.echo(f"error: {exc}", err=True)
    return SystemExit(3)


def _fail_resource(exc: Exception) -> "SystemExit":
    click.echo(f"error: {exc}", err=True)
    return SystemExit(4)


def _parse_floats(text: str, flag: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in text.split(","))
    except ValueError:
        raise click.UsageError(f"{flag}: expected comma-separated numbers, got {text!r}")
    if not values:
        raise click.UsageError(f"{flag}: empty list")
    return values


def _parse_ints(text: str, flag: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise click.UsageError(f"{flag}: expected comma-separated integers, got {text!r}")


def _parse_mixture(text: str) -> DifficultyMixture:
    try:
        if text.startswith("loguniform:"):
            _, lo, hi = text.split(":")
            return DifficultyMixture.log_uniform(float(lo), float(hi))
        pairs = []
        for part in text.split(","):
            alpha, weight = part.split(":")
            pairs.append((float(alpha), float(weight)))
        return DifficultyMixture.atoms(pairs)
    except (ValueError, DomainError, DimensionError) as exc:
        raise click.UsageError(
            f"--mixture: expected 'alpha:weight,...' or 'loguniform:lo:hi' ({exc})"
        )


def _check_unit_interval(values: tuple[float, ...], flag: str, lo_open: float = 0.0) -> None:
    for v in values:
        if not (lo_open < v <= 1.0):
            raise click.UsageError(f"{flag}: value {v} outside ({lo_open}, 1]")


def _apply_config(ctx: click.Context, config_path: str | None, params: dict) -> dict:
    """Fill defaults from a JSON config file; explicit flags win."""

    if not config_path:
        return params
    try:
        with open(config_path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise _fail_format(FormatError(f"cannot open {config_path}: {exc}"))
    except json.JSONDecodeError as exc:
        raise _fail_format(FormatError(f"{config_path}: invalid JSON ({exc})"))
    if not isinstance(cfg, dict):
        raise _fail_format(FormatError(f"{config_path}: config must be a JSON object"))
    for key, value in cfg.items():
        name = key.replace("-", "_")
        if name not in params:
            raise click.UsageError(f"--config: unknown key {key!r}")
        source = ctx.get_parameter_source(name)
        if source is None or source.name == "DEFAULT":
            params[name] = value
    return params


def _timestamp() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


@click.group()
@click.version_option(package_name="quorum")
def main() -> None:
    """Aggregate categorical answers from heterogeneous agents."""


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


@main.command()
@click.option("--model", type=click.Choice(["ci", "difficulty"]), default="ci", show_default=True)
@click.option("--accuracies", default=None, help="Per-agent accuracies (ci model), e.g. 0.6,0.7.")
@click.option("--abilities", default=None, help="Per-agent abilities (difficulty model).")
@click.option(
    "--mixture",
    default=None,
    help="Difficulty mixture: 'alpha:weight,...' or 'loguniform:lo:hi'.",
)
@click.option("--k", type=int, default=None, help="Number of labels.")
@click.option("--questions", "-m", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--no-truth", is_flag=True, help="Omit the truth column.")
@click.option("--config", "config_path", type=click.Path(exists=False), default=None)
@click.pass_context
def simulate(ctx, model, accuracies, abilities, mixture, k, questions, seed, out, no_truth, config_path):
    """Write a synthetic predictions CSV."""

    params = _apply_config(
        ctx,
        config_path,
        {
            "model": model,
            "accuracies": accuracies,
            "abilities": abilities,
            "mixture": mixture,
            "k": k,
            "questions": questions,
            "seed": seed,
            "out": out,
            "no_truth": no_truth,
        },
    )
    if params["k"] is None:
        raise click.UsageError("--k is required")
    try:
        if params["model"] == "ci":
            if params["accuracies"] is None:
                raise click.UsageError("--accuracies is required for the ci model")
            acc = _parse_floats(str(params["accuracies"]), "--accuracies")
            spec = CiSimSpec(acc, int(params["k"]), int(params["questions"]), int(params["seed"]))
            pm = simulate_ci(spec)
        else:
            if params["abilities"] is None or params["mixture"] is None:
                raise click.UsageError("--abilities and --mixture are required for the difficulty model")
            beta = _parse_floats(str(params["abilities"]), "--abilities")
            mix = _parse_mixture(str(params["mixture"]))
            spec = DifficultySimSpec(
                beta, mix, int(params["k"]), int(params["questions"]), int(params["seed"])
            )
            pm = simulate_difficulty(spec)
    except (DomainError, DimensionError) as exc:
        raise click.UsageError(str(exc))
    write_predictions_csv(str(params["out"]), pm, include_truth=not params["no_truth"])
    click.echo(f"wrote {pm.m} questions x {pm.n} agents (K={pm.k}) to {params['out']}")


# ---------------------------------------------------------------------------
# aggregate
# ---------------------------------------------------------------------------


@main.command()
@click.option("--input", "input_path", type=click.Path(dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--method", type=click.Choice(list(METHODS)), default="isp", show_default=True)
@click.option("--tie", type=click.Choice(sorted(_TIE_CHOICES)), default="uniform", show_default=True)
@click.option("--tie-seed", type=int, default=0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Estimator seed.")
@click.option("--starts", type=int, default=8, show_default=True, help="Fit restarts.")
@click.option("--max-iters", type=int, default=2000, show_default=True)
@click.option("--smoothing", type=float, default=0.0, show_default=True)
@click.option("--eps", type=float, default=1e-6, show_default=True, help="Accuracy clamp epsilon.")
@click.option("--threads", type=int, default=1, show_default=True)
@click.option("--accuracies", default=None, help="True accuracies for --method ow-oracle.")
@click.option("--abilities", default=None, help="Per-agent abilities for --method eow.")
@click.option("--labels", default=None, help="Comma-separated label space override.")
@click.option("--agents", default=None, help="Comma-separated agent subset, in order.")
@click.option("--drop-incomplete", is_flag=True, help="Skip questions with empty cells.")
@click.option("--shuffle-seed", type=int, default=None, help="Shuffle labels per question on ingest.")
@click.option("--summary", "summary_path", type=click.Path(dir_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(exists=False), default=None)
@click.pass_context
def aggregate(
    ctx,
    input_path,
    out,
    method,
    tie,
    tie_seed,
    seed,
    starts,
    max_iters,
    smoothing,
    eps,
    threads,
    accuracies,
    abilities,
    labels,
    agents,
    drop_incomplete,
    shuffle_seed,
    summary_path,
    config_path,
):
    """Aggregate a predictions CSV into one label per question.

    The truth column, when present, is used only for the accuracy summary,
    never for aggregation.
    """

    params = _apply_config(
        ctx,
        config_path,
        {
            "input": input_path,
            "out": out,
            "method": method,
            "tie": tie,
            "tie_seed": tie_seed,
            "seed": seed,
            "starts": starts,
            "max_iters": max_iters,
            "smoothing": smoothing,
            "eps": eps,
            "threads": threads,
            "accuracies": accuracies,
            "abilities": abilities,
            "labels": labels,
            "agents": agents,
            "drop_incomplete": drop_incomplete,
            "shuffle_seed": shuffle_seed,
            "summary": summary_path,
        },
    )
    if params["tie"] not in _TIE_CHOICES:
        raise click.UsageError(f"--tie: expected one of {sorted(_TIE_CHOICES)}")
    if params["method"] not in METHODS:
        raise click.UsageError(f"--method: expected one of {METHODS}")
    acc = abil = None
    if params["accuracies"] is not None:
        acc = _parse_floats(str(params["accuracies"]), "--accuracies")
        _check_unit_interval(acc, "--accuracies")
    if params["abilities"] is not None:
        abil = _parse_floats(str(params["abilities"]), "--abilities")
        for v in abil:
            if v < 0:
                raise click.UsageError(f"--abilities: value {v} must be nonnegative")
    if params["method"] == "ow-oracle" and acc is None:
        raise click.UsageError("--method ow-oracle requires --accuracies")
    if params["method"] == "eow" and abil is None:
        raise click.UsageError("--method eow requires --abilities")
    if params["threads"] < 1:
        raise click.UsageError("--threads must be >= 1")
    if params["smoothing"] < 0:
        raise click.UsageError("--smoothing must be nonnegative")

    label_list = str(params["labels"]).split(",") if params["labels"] else None
    agent_list = str(params["agents"]).split(",") if params["agents"] else None
    try:
        pm, meta = read_predictions_csv(
            str(params["input"]),
            agents=agent_list,
            labels=label_list,
            drop_incomplete=bool(params["drop_incomplete"]),
        )
    except FormatError as exc:
        raise _fail_format(exc)
    except (DomainError, DimensionError) as exc:
        raise _fail_format(FormatError(str(exc)))

    work = pm
    smap = None
    if params["shuffle_seed"] is not None:
        work, smap = shuffle_apply(pm.with_truth(None), int(params["shuffle_seed"]))

    tie_policy = TiePolicy(_TIE_CHOICES[params["tie"]], int(params["tie_seed"]))
    erm = ErmConfig(
        starts=int(params["starts"]),
        max_iters=int(params["max_iters"]),
        eps=float(params["eps"]),
        seed=int(params["seed"]),
        threads=int(params["threads"]),
    )
    try:
        result = run_pipeline(
            work,
            str(params["method"]),
            tie=tie_policy,
            erm=erm,
            accuracies=acc,
            abilities=abil,
            smoothing=float(params["smoothing"]),
            eps=float(params["eps"]),
        )
    except (DomainError, DimensionError) as exc:
        raise click.UsageError(str(exc))
    except ResourceError as exc:
        raise _fail_resource(exc)

    idx = result.labels
    if smap is not None:
        idx = shuffle_invert(idx, smap)
    label_strings = [pm.space.labels[i] for i in idx]
    write_labels_csv(str(params["out"]), meta["question_ids"], label_strings)
    click.echo(f"wrote {pm.m} aggregated labels to {params['out']}")

    want_summary = pm.truth is not None or params["summary"] is not None
    if want_summary:
        path = params["summary"] or str(params["out"]) + ".summary.json"
        payload = {
            "command": "aggregate",
            "timestamp": _timestamp(),
            "config": {k: params[k] for k in sorted(params)},
            "m": pm.m,
            "n": pm.n,
            "k": pm.k,
            "labels": list(pm.space.labels),
            "agent_names": meta["agent_names"],
            "dropped_questions": meta["dropped"],
            "method": params["method"],
            "fit": _sanitize_fit(result.fit),
        }
        if pm.truth is not None:
            correct = idx == pm.truth
            disagree = ~(pm.answers == pm.answers[:, :1]).all(axis=1)
            payload["overall_accuracy"] = float(correct.mean())
            payload["disagreement_count"] = int(disagree.sum())
            payload["disagreement_accuracy"] = (
                float(correct[disagree].mean()) if disagree.any() else None
            )
            payload["per_agent_accuracy"] = {
                name: float((pm.answers[:, i] == pm.truth).mean())
                for i, name in enumerate(meta["agent_names"])
            }
        write_json(path, payload)
        click.echo(f"wrote summary to {path}")


def _sanitize_fit(fit) -> dict | None:
    if fit is None:
        return None
    doc = fit.to_dict()
    doc["accuracies"] = [None if not np.isfinite(v) else v for v in doc["accuracies"]]
    total = sum(abs(w) for w in doc["weights"])
    doc["weights_normalized"] = [w / total if total > 0 else 0.0 for w in doc["weights"]]
    return doc


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


@main.command()
@click.option(
    "--suite",
    type=click.Choice(("all",) + verify_mod.SUITES),
    default="all",
    show_default=True,
    help="examples: pencil-and-paper fixtures; thm1/thm2: posterior consistency "
    "and gap formulas under independent errors; thm4/thm5: the shared-difficulty "
    "model; props: structural invariants.",
)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--budget", type=int, default=10_000_000, show_default=True, help="Enumeration cap.")
def verify(suite, seed, budget):
    """Re-derive the package's key claims from scratch and report pass/fail."""

    try:
        results = verify_mod.run_suites(suite, seed=seed, budget=budget)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    except ResourceError as exc:
        raise _fail_resource(exc)
    failed = 0
    for res in results:
        status = "SKIP" if res.skipped else ("PASS" if res.passed else "FAIL")
        if not res.passed and not res.skipped:
            failed += 1
        click.echo(f"[{status}] {res.suite}:{res.name}" + (f" ({res.detail})" if res.detail else ""))
    total = len(results)
    click.echo(f"{total - failed}/{total} checks passed")
    if failed:
        sys.exit(5)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@main.command()
@click.option("--table2", "table_flag", is_flag=True, help="Accuracy-by-K table for all rules.")
@click.option("--gap-curve", "gap_flag", is_flag=True, help="Rule accuracy gaps versus K.")
@click.option("--out", default="report", show_default=True, help="Output base path.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--questions", "-m", type=int, default=10_000, show_default=True)
@click.option("--replications", type=int, default=1, show_default=True)
@click.option("--k-values", default="2,4,6,8,10", show_default=True)
@click.option("--accuracies", default="0.6,0.7,0.8,0.9", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=False), default=None)
@click.pass_context
def report(ctx, table_flag, gap_flag, out, seed, questions, replications, k_values, accuracies, config_path):
    """Reproduce a standard experiment and write .txt/.csv/.json artifacts."""

    params = _apply_config(
        ctx,
        config_path,
        {
            "table2": table_flag,
            "gap_curve": gap_flag,
            "out": out,
            "seed": seed,
            "questions": questions,
            "replications": replications,
            "k_values": k_values,
            "accuracies": accuracies,
        },
    )
    if bool(params["table2"]) == bool(params["gap_curve"]):
        raise click.UsageError("choose exactly one of --table2 or --gap-curve")
    ks = _parse_ints(str(params["k_values"]), "--k-values")
    acc = _parse_floats(str(params["accuracies"]), "--accuracies")
    _check_unit_interval(acc, "--accuracies")
    for k in ks:
        if k < 2:
            raise click.UsageError(f"--k-values: {k} < 2")
        for v in acc:
            if v < 1.0 / k:
                raise click.UsageError(f"--accuracies: {v} below chance level 1/{k}")
    if params["replications"] < 1:
        raise click.UsageError("--replications must be >= 1")
    if params["questions"] < 1:
        raise click.UsageError("--questions must be >= 1")

    base = str(params["out"])
    resolved = {k: params[k] for k in sorted(params)}
    if params["table2"]:
        table = run_accuracy_table(int(params["seed"]), int(params["questions"]), ks, acc)
        header = "k," + ",".join(table.methods)
        csv_lines = [header] + [
            ",".join([str(k)] + [f"{v:.4f}" for v in row])
            for k, row in zip(table.ks, table.values)
        ]
        _write_report_files(
            base,
            text="config: " + json.dumps(resolved, sort_keys=True) + "\n\n" + table.to_text(),
            csv_text="\n".join(csv_lines) + "\n",
            payload={
                "command": "report",
                "kind": "accuracy_table",
                "timestamp": _timestamp(),
                "config": resolved,
                "rows": table.to_rows(),
            },
        )
    else:
        curve = run_gap_curve(
            int(params["seed"]), int(params["questions"]), ks, acc, int(params["replications"])
        )
        rows = curve.to_rows()
        csv_lines = ["k,gap_isp_mv,gap_mv_sp,stderr"] + [
            f"{r['k']},{r['gap_isp_mv']:.6f},{r['gap_mv_sp']:.6f},{r['stderr']:.6f}" for r in rows
        ]
        _write_report_files(
            base,
            text=None,
            csv_text="\n".join(csv_lines) + "\n",
            payload={
                "command": "report",
                "kind": "gap_curve",
                "timestamp": _timestamp(),
                "config": resolved,
                "rows": rows,
            },
        )
    click.echo(f"wrote report to {base}.csv / {base}.json" + (f" / {base}.txt" if params["table2"] else ""))


def _write_report_files(base: str, text: str | None, csv_text: str, payload: dict) -> None:
    from .dataio import atomic_write_text

    if text is not None:
        atomic_write_text(base + ".txt", text)
    atomic_write_text(base + ".csv", csv_text)
    write_json(base + ".json", payload)


if __name__ == "__main__":
    main()
