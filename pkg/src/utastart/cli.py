"""Command line front end: ``utastart fit | postopt | simulate``.

Every command reads a tensor CSV and a ranking file, optionally a JSON config
whose keys mirror the long flag names (``scale_policy`` for
``--scale-policy`` and so on); flags win over the config file.

Exit codes: 0 success, 2 input/validation error, 3 I/O error, 4 solver failure.
Errors are printed to stderr as ``{"error": {"code": ..., "message": ...}}``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .disagg import (
    SCHEMA_VERSION,
    UTASTAR_T,
    DisaggConfig,
    FitError,
    RankingChain,
    RankingParseError,
    ValueModel,
    WeightLayout,
    compare_rankings,
    fit,
    rank_alternatives,
)
from .plots import model_plots
from .postopt import (
    SimulationError,
    SolutionEnsemble,
    classical_minmax,
    mo_simulate,
    parse_order,
)
from .timeseries import (
    MAXIMIZE,
    MINIMIZE,
    MeasureTensor,
    ScaleError,
    ScalePolicy,
    TensorError,
    extract_measures,
    load_tensor,
)

EXIT_OK, EXIT_INPUT, EXIT_IO, EXIT_SOLVER = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, code: str, message: str, exit_code: int = EXIT_INPUT, **extra):
        super().__init__(message)
        self.code = code
        self.exit_code = exit_code
        self.extra = extra

    def to_dict(self) -> dict:
        return {"error": {"code": self.code, "message": str(self), **self.extra}}


@dataclass
class RunConfig:
    tensor: Path
    ranking: Path
    out: Path
    measures: list[str] = field(default_factory=lambda: ["mean", "slope"])
    scale_policy: ScalePolicy = field(default_factory=ScalePolicy)
    delta: float = 0.05
    epsilon: float = 1e-6
    gamma: float = 0.01
    variant: str = UTASTAR_T
    iterations: int = 1000
    seed: int = 42
    criteria_order: list[str] | None = None
    directions: dict[str, str] = field(default_factory=dict)
    plots: bool = False
    raw: bool = False
    workers: int = 1
    model: Path | None = None

    def disagg(self) -> DisaggConfig:
        try:
            return DisaggConfig(self.delta, self.epsilon, self.gamma, self.variant)
        except ValueError as exc:
            raise CliError("validation-error", str(exc)) from None


def _parse_directions(text: str) -> dict[str, str]:
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise CliError("validation-error", f"bad direction {part!r}; expected id=max or id=min")
        cid, d = (s.strip() for s in part.split("=", 1))
        if d not in (MAXIMIZE, MINIMIZE):
            raise CliError("validation-error", f"direction for {cid!r} must be max or min")
        out[cid] = d
    return out


def _parse_list(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def build_run_config(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise CliError("input-not-found", f"config file not found: {path}")
        try:
            base = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise CliError("parse-error", f"config is not valid JSON: {exc}") from None
        if not isinstance(base, dict):
            raise CliError("parse-error", "config must be a JSON object")

    def pick(name, default=None):
        val = getattr(args, name, None)
        return val if val is not None else base.get(name, default)

    missing = [n for n in ("tensor", "ranking", "out") if pick(n) is None]
    if missing:
        raise CliError("validation-error", f"missing required setting(s): {', '.join(missing)}")

    measures = pick("measures", ["mean", "slope"])
    if isinstance(measures, str):
        measures = _parse_list(measures)
    policy = pick("scale_policy", "observed")
    try:
        policy = ScalePolicy.parse(policy) if isinstance(policy, str) else policy
    except ValueError as exc:
        raise CliError("validation-error", str(exc)) from None
    directions = pick("directions", {})
    if isinstance(directions, str):
        directions = _parse_directions(directions)
    order = pick("criteria_order")
    if isinstance(order, str):
        order = [s.strip() for s in order.split(">")]
    model = pick("model")

    cfg = RunConfig(
        tensor=Path(pick("tensor")),
        ranking=Path(pick("ranking")),
        out=Path(pick("out")),
        measures=list(measures),
        scale_policy=policy,
        delta=float(pick("delta", 0.05)),
        epsilon=float(pick("epsilon", 1e-6)),
        gamma=float(pick("gamma", 0.01)),
        variant=pick("variant", UTASTAR_T),
        iterations=int(pick("iterations", 1000)),
        seed=int(pick("seed", 42)),
        criteria_order=order,
        directions=dict(directions),
        plots=bool(pick("plots", False)),
        raw=bool(pick("raw", False)),
        workers=int(pick("workers", 1)),
        model=Path(model) if model else None,
    )
    if cfg.iterations < 1:
        raise CliError("validation-error", "iterations must be >= 1")
    if cfg.workers < 1:
        raise CliError("validation-error", "workers must be >= 1")
    if not 0 <= cfg.seed < 2**64:
        raise CliError("validation-error", "seed must be a non-negative 64-bit integer")
    for p in (cfg.tensor, cfg.ranking) + ((cfg.model,) if cfg.model else ()):
        if not p.exists():
            raise CliError("input-not-found", f"input file not found: {p}")
    cfg.disagg()
    return cfg


def load_inputs(cfg: RunConfig) -> tuple[MeasureTensor, RankingChain]:
    try:
        tensor = load_tensor(cfg.tensor, cfg.directions)
    except TensorError as exc:
        raise CliError("invalid-tensor", str(exc)) from None
    except OSError as exc:
        raise CliError("io-error", str(exc), EXIT_IO) from None
    try:
        ranking = RankingChain.parse(cfg.ranking.read_text())
    except RankingParseError as exc:
        raise CliError("parse-error", str(exc), column=exc.column) from None
    try:
        measures = extract_measures(tensor, cfg.measures, cfg.scale_policy)
    except (ScaleError, ValueError) as exc:
        raise CliError("invalid-measures", str(exc)) from None
    unknown = [a for a in ranking.alternatives if a not in measures.alternatives]
    if unknown:
        raise CliError("validation-error", f"ranking names unknown alternatives: {unknown}")
    if cfg.criteria_order is not None:
        try:
            parse_order(cfg.criteria_order, measures.criteria)
        except ValueError as exc:
            raise CliError("validation-error", str(exc)) from None
    return measures, ranking


def _fit(measures: MeasureTensor, ranking: RankingChain, cfg: RunConfig) -> ValueModel:
    try:
        return fit(measures, ranking, cfg.disagg())
    except FitError as exc:
        raise CliError("solver-failure", str(exc), EXIT_SOLVER) from None
    except ValueError as exc:
        raise CliError("validation-error", str(exc)) from None


def _load_or_fit(measures: MeasureTensor, ranking: RankingChain, cfg: RunConfig) -> ValueModel:
    if cfg.model is None:
        return _fit(measures, ranking, cfg)
    try:
        model = ValueModel.from_json(cfg.model.read_text())
    except (KeyError, ValueError, TypeError) as exc:
        raise CliError("parse-error", f"bad model file: {exc}") from None
    if model.measures != measures.measures or model.criteria != measures.criteria:
        raise CliError("validation-error", "model does not match the measures/criteria of the input")
    if any(
        g.breakpoints != h.breakpoints for row_g, row_h in zip(model.scales, measures.scales) for g, h in zip(row_g, row_h)
    ):
        raise CliError("validation-error", "model scales do not match the input data")
    return model


def write_outputs(out: Path, files: dict[str, str]) -> None:
    """Write every file via a temp file + rename; on failure nothing new remains."""
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError("io-error", f"cannot create output directory {out}: {exc}", EXIT_IO) from None
    temps = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out)
            temps.append((tmp, out / name))
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
        for tmp, final in temps:
            os.replace(tmp, final)
    except OSError as exc:
        for tmp, _ in temps:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise CliError("io-error", f"cannot write to {out}: {exc}", EXIT_IO) from None


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def weight_rows(measures: Sequence[str], criteria: Sequence[str], nested, tol: float = 1e-9) -> list[dict]:
    rows = []
    for k, row in enumerate(nested):
        for j, ws in enumerate(row):
            for l, v in enumerate(ws):
                if abs(v) > tol:
                    rows.append(
                        {"name": f"w{k + 1}{j + 1}{l + 1}", "measure": measures[k], "criterion": criteria[j], "step": l + 1, "value": v}
                    )
    return rows


def cmd_fit(cfg: RunConfig) -> dict:
    measures, ranking = load_inputs(cfg)
    t0 = time.perf_counter()
    model = _fit(measures, ranking, cfg)
    elapsed = time.perf_counter() - t0
    values = model.global_values(measures)
    classes = rank_alternatives(model, measures)
    cmp = compare_rankings(ranking, rank_alternatives(model, measures, ranking.alternatives))
    report = {
        "schema_version": SCHEMA_VERSION,
        "z": model.z,
        "weights": weight_rows(model.measures, model.criteria, model.nested_weights()),
        "global_values": [{"alternative": a, "value": values[a]} for a in sorted(values, key=lambda a: -values[a])],
        "model_ranking": classes,
        "dm_ranking": str(ranking),
        "kendall_tau": cmp.tau,
        "ties": cmp.ties,
        "sigma_plus": model.sigma_plus,
        "sigma_minus": model.sigma_minus,
        "config": cfg.disagg().to_dict(),
        "measures": list(measures.measures),
        "scale_policy": str(cfg.scale_policy),
        "fit_seconds": elapsed,
    }
    files = {"model.json": model.to_json() + "\n", "report.json": _dump(report)}
    if cfg.plots:
        files.update(model_plots(model, normalized=not cfg.raw))
    write_outputs(cfg.out, files)
    return report


def cmd_postopt(cfg: RunConfig) -> dict:
    measures, ranking = load_inputs(cfg)
    model = _load_or_fit(measures, ranking, cfg)
    try:
        rep = classical_minmax(measures, ranking, cfg.disagg(), model)
    except FitError as exc:
        raise CliError("solver-failure", str(exc), EXIT_SOLVER) from None
    doc = rep.to_dict(WeightLayout.of(measures))
    doc["z_star"] = model.z
    doc["gamma"] = cfg.gamma
    write_outputs(cfg.out, {"postopt.json": _dump(doc)})
    return doc


def summary_table(ensemble: SolutionEnsemble, measures: MeasureTensor) -> str:
    """Nonzero weights per distinct solution with occurrences and the weighted average."""
    nested = [ensemble.layout.nest(e.w) for e in ensemble.entries]
    wa = ensemble.layout.nest(ensemble.weighted_average)
    names = sorted(
        {r["name"]: r for n in nested for r in weight_rows(measures.measures, measures.criteria, n, tol=1e-6)}.values(),
        key=lambda r: (measures.measures.index(r["measure"]), measures.criteria.index(r["criterion"]), r["step"]),
    )
    lines = [" ".join(["occur."] + [f"{e.count:>7d}" for e in ensemble.entries] + ["     WA"])]
    for r in names:
        k, j, l = measures.measures.index(r["measure"]), measures.criteria.index(r["criterion"]), r["step"] - 1
        cells = [f"{n[k][j][l]:7.3f}" for n in nested]
        lines.append(" ".join([r["name"].ljust(6)] + cells + [f"{wa[k][j][l]:7.3f}"]))
    return "\n".join(lines) + "\n"


def cmd_simulate(cfg: RunConfig) -> dict:
    measures, ranking = load_inputs(cfg)
    model = _load_or_fit(measures, ranking, cfg)
    order = None if cfg.criteria_order is None else parse_order(cfg.criteria_order, measures.criteria)
    try:
        ens = mo_simulate(measures, ranking, cfg.disagg(), model, cfg.iterations, cfg.seed, order, cfg.workers)
    except SimulationError as exc:
        raise CliError("solver-failure", str(exc), EXIT_SOLVER, iteration=exc.iteration) from None
    doc = ens.to_dict()
    files = {"ensemble.json": _dump(doc)}
    if cfg.plots:
        wa_model = ValueModel(
            model.measures, model.criteria, model.scales, ens.weighted_average, model.sigma_plus, model.sigma_minus, model.z, model.config
        )
        files.update(model_plots(wa_model, normalized=not cfg.raw))
    write_outputs(cfg.out, files)
    summary = summary_table(ens, measures)
    return {"ensemble": doc, "summary": summary, "classes": ens.objective_classes()}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--tensor", help="tensor CSV (alternative,criterion,t,value)")
    p.add_argument("--ranking", help="ranking file, e.g. 'A > B ~ C'")
    p.add_argument("--out", help="output directory")
    p.add_argument("--measures", help="comma-separated measures (default mean,slope)")
    p.add_argument("--scale-policy", dest="scale_policy", help="observed | equal:<alpha>")
    p.add_argument("--delta", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--variant", choices=["UTA", "UTASTAR", "UTASTAR-T"])
    p.add_argument("--directions", help="e.g. c1=max,c2=min")
    p.add_argument("--plots", action="store_true", default=None, help="emit SVG value-function plots")
    p.add_argument("--raw", action="store_true", default=None, help="plot unnormalised values")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="utastart", description="Preference disaggregation over criteria time series.")
    sub = parser.add_subparsers(dest="cmd", required=True)
    p_fit = sub.add_parser("fit", help="fit a value model to the ranking")
    _add_common(p_fit)
    p_post = sub.add_parser("postopt", help="classical min/max post-optimisation")
    _add_common(p_post)
    p_post.add_argument("--model", help="model.json from a previous fit (otherwise fit on the fly)")
    p_sim = sub.add_parser("simulate", help="Monte Carlo weighted-sum simulation")
    _add_common(p_sim)
    p_sim.add_argument("--model", help="model.json from a previous fit (otherwise fit on the fly)")
    p_sim.add_argument("--iterations", type=int)
    p_sim.add_argument("--seed", type=int)
    p_sim.add_argument("--criteria-order", dest="criteria_order", help="e.g. c1>c3>c2")
    p_sim.add_argument("--workers", type=int)
    return parser


COMMANDS = {"fit": cmd_fit, "postopt": cmd_postopt, "simulate": cmd_simulate}


def run(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_run_config(args)
        result = COMMANDS[args.cmd](cfg)
    except CliError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # pragma: no cover - last resort, keep the contract
        err = CliError("internal-error", f"{type(exc).__name__}: {exc}", EXIT_SOLVER)
        print(json.dumps(err.to_dict()), file=sys.stderr)
        return err.exit_code
    if args.cmd == "fit":
        print(f"z* = {result['z']:.6g}   kendall tau = {result['kendall_tau']:.4f}")
        for row in result["global_values"]:
            print(f"  u[{row['alternative']}] = {row['value']:.4f}")
    elif args.cmd == "postopt":
        bounds = {(b["measure"], b["criterion"], b["sense"]): b["value"] for b in result["bounds"]}
        for row in result["averages"]:
            key = (row["measure"], row["criterion"])
            print(
                f"  {key[0]:>6} {key[1]:>4}  min {bounds[key + ('min',)]:.4f}  "
                f"max {bounds[key + ('max',)]:.4f}  avg {row['average']:.4f}"
            )
    else:
        print(result["summary"], end="")
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
