"""Seeded end-to-end experiment drivers behind the CLI.

Every run writes a ``manifest.json`` (resolved config, per-replication
seeds, package version) plus ``results.csv`` in a shared schema and an
aggregated ``summary.csv``; reruns with the same manifest reproduce the
CSVs byte for byte.  Replications are independent tasks and may run in
parallel processes; rows are emitted in task order either way.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .adaptive_estimator import RotatedTreeMember, fit_ahte
from .baselines import KdeModel
from .datapipe import Dataset, load_csv, normalize_unit, pca_reduce, prune_correlated
from .errors import ConfigError, DataError
from .grid_estimator import EnsembleModel, GridEstimator, fit_ensemble
from .metrics import CSV_COLUMNS, anll, fit_power_law, report_from_values
from .rng import replication_seed, subseed, substream
from .synth import KINDS, make_type
from .transform import StretchConfig

# Stream tags: fixed offsets under each replication seed, so adding a
# consumer never shifts the draws of another.
_TRAIN, _TEST, _SPLIT, _FIT, _REFIT = 1, 2, 3, 4, 5
_METHOD_KEY = {"ahte": 0, "nhte": 1}

SUMMARY_COLUMNS = (
    "dataset",
    "method",
    "d",
    "n",
    "T",
    "m",
    "replications",
    "anll_mean",
    "anll_std",
    "mae_mean",
    "mae_std",
)

SELECTION_COLUMNS = ("dataset", "method", "seed", "parameter", "value")

SLOPE_COLUMNS = ("arm", "slope", "stderr", "intercept", "points", "n_min", "n_max")


# ---------------------------------------------------------------------------
# config plumbing


def _tuplify(value):
    if isinstance(value, list):
        return tuple(_tuplify(v) for v in value)
    return value


def build_config(cls, data: dict | None, **overrides):
    """Instantiate a config dataclass from JSON data plus CLI overrides."""
    merged = dict(data or {})
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    allowed = {f.name for f in fields(cls)}
    unknown = sorted(set(merged) - allowed)
    if unknown:
        raise ConfigError(f"unknown config keys for {cls.__name__}: {unknown}")
    kwargs = {key: _tuplify(value) for key, value in merged.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {cls.__name__}: {exc}") from None


def _require(condition: bool, message: str):
    if not condition:
        raise ConfigError(message)


def _check_common(replications: int, seed):
    _require(replications >= 1, f"replications must be >= 1, got {replications}")
    _require(isinstance(seed, int), "seed must be an integer")


# ---------------------------------------------------------------------------
# output plumbing


def _fmt(value):
    """CSV cell formatting: floats via repr so reruns are byte-stable."""
    if isinstance(value, float):
        return repr(value)
    return value


def _write_csv(path: Path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def _write_manifest(out_dir: Path, experiment: str, cfg, rep_seeds, extra: dict | None = None):
    manifest = {
        "experiment": experiment,
        "config": dataclasses.asdict(cfg),
        "package_version": __version__,
        "replication_seeds": list(rep_seeds),
    }
    if extra:
        manifest.update(extra)
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _map_tasks(fn, tasks, threads: int):
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, tasks))
    return [fn(task) for task in tasks]


def _summarize(rows, group_keys=("dataset", "method", "d", "n", "T", "m")):
    """Mean and sample std of anll/mae per group, in first-seen group order."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in group_keys), []).append(row)
    out = []
    for key, members in groups.items():
        anlls = np.array([float(r["anll"]) for r in members])
        maes = [r["mae"] for r in members if r["mae"] != ""]
        summary = dict(zip(group_keys, key))
        summary["replications"] = len(members)
        summary["anll_mean"] = float(anlls.mean())
        summary["anll_std"] = float(anlls.std(ddof=1)) if len(anlls) > 1 else 0.0
        if maes:
            mae_vals = np.array([float(v) for v in maes])
            summary["mae_mean"] = float(mae_vals.mean())
            summary["mae_std"] = float(mae_vals.std(ddof=1)) if len(mae_vals) > 1 else 0.0
        else:
            summary["mae_mean"] = ""
            summary["mae_std"] = ""
        out.append(summary)
    return out


def _finish_run(out_dir: Path, experiment: str, cfg, rep_seeds, rows, extra_manifest=None):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_manifest(out_dir, experiment, cfg, rep_seeds, extra_manifest)
    _write_csv(out_dir / "results.csv", CSV_COLUMNS, rows)
    summary = _summarize(rows)
    _write_csv(out_dir / "summary.csv", SUMMARY_COLUMNS, summary)
    return summary


# ---------------------------------------------------------------------------
# ensemble-gap


@dataclass(frozen=True)
class EnsembleGapConfig:
    spec: str = "beta-toy"
    d: int = 2
    n_grid: tuple[int, ...] = (10, 20, 50, 100, 200, 500, 1000)
    T_grid: tuple[int, ...] = (1, 2, 5, 20)
    n_test: int = 1000
    s_min_exp: float = 0.0
    s_max_exp: float = 1.0
    replications: int = 50
    seed: int = 0

    def __post_init__(self):
        _check_common(self.replications, self.seed)
        _require(len(self.n_grid) > 0 and all(n >= 2 for n in self.n_grid), "n_grid needs sizes >= 2")
        _require(len(self.T_grid) > 0 and all(t >= 1 for t in self.T_grid), "T_grid needs sizes >= 1")
        _require(self.n_test >= 1, "n_test must be >= 1")


def _ensemble_gap_task(task):
    cfg, rep = task
    rep_seed = replication_seed(cfg.seed, rep)
    spec = make_type(cfg.spec, cfg.d)
    test = spec.sample(cfg.n_test, substream(rep_seed, _TEST))
    truth = spec.pdf(test)
    t_max = max(cfg.T_grid)
    stretch = StretchConfig(cfg.s_min_exp, cfg.s_max_exp)
    rows = []
    for ni, n in enumerate(cfg.n_grid):
        train = spec.sample(n, substream(rep_seed, _TRAIN, ni))
        model = fit_ensemble(train, t_max, stretch, subseed(rep_seed, _FIT, ni))
        member_values = model.member_values(test)
        for T in cfg.T_grid:
            report = report_from_values(member_values[:T].mean(axis=0), truth)
            rows.append(
                report.csv_row(
                    dataset=spec.name, method="nhte", d=cfg.d, n=n, T=T, seed=rep_seed
                )
            )
    return rows


def run_ensemble_gap(cfg: EnsembleGapConfig, out_dir, threads: int = 1):
    """Mean-MAE sweep over (n, T): the ensemble-versus-single comparison."""
    rep_seeds = [replication_seed(cfg.seed, r) for r in range(cfg.replications)]
    tasks = [(cfg, rep) for rep in range(cfg.replications)]
    rows = [row for chunk in _map_tasks(_ensemble_gap_task, tasks, threads) for row in chunk]
    return _finish_run(out_dir, "ensemble-gap", cfg, rep_seeds, rows)


# ---------------------------------------------------------------------------
# shared validated fitting (synth-bench and real-bench)


def _fit_ahte_validated(train, fit_part, val_part, T, m_grid, base_seed, key):
    """Grid-search min_samples_split by validated ANLL, then refit on all of train."""
    best_m = None
    best_score = math.inf
    for mi, m in enumerate(m_grid):
        model = fit_ahte(fit_part, T, m, subseed(base_seed, _FIT, *key, _METHOD_KEY["ahte"], mi))
        score = anll(model.evaluate, val_part)
        if score < best_score:
            best_score = score
            best_m = m
    model = fit_ahte(train, T, best_m, subseed(base_seed, _REFIT, *key, _METHOD_KEY["ahte"]))
    return model, best_m


def _fit_nhte_validated(train, fit_part, val_part, T, s_grid, base_seed, key):
    """Grid-search the (s_min, s_max) window by validated ANLL, refit on train."""
    best_range = None
    best_score = math.inf
    for si, (s_min_exp, s_max_exp) in enumerate(s_grid):
        stretch = StretchConfig(s_min_exp, s_max_exp)
        model = fit_ensemble(
            fit_part, T, stretch, subseed(base_seed, _FIT, *key, _METHOD_KEY["nhte"], si)
        )
        score = anll(model.evaluate, val_part)
        if score < best_score:
            best_score = score
            best_range = (s_min_exp, s_max_exp)
    model = fit_ensemble(
        train,
        T,
        StretchConfig(*best_range),
        subseed(base_seed, _REFIT, *key, _METHOD_KEY["nhte"]),
    )
    return model, best_range


def _validation_split(train: np.ndarray, fraction: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """(fit_part, val_part): a seeded random split of the training set."""
    n = train.shape[0]
    n_val = int(round(fraction * n))
    if not 0 < n_val < n:
        raise ConfigError(
            f"validation fraction {fraction} leaves an empty part for n={n}"
        )
    perm = rng.permutation(n)
    return train[perm[n_val:]], train[perm[:n_val]]


def _run_methods(cfg, train, test, truth, base_seed, key, dataset, d):
    """Score every configured method on one (train, test) replication."""
    fit_part = val_part = None
    if any(method in ("ahte", "nhte") for method in cfg.methods):
        fit_part, val_part = _validation_split(
            train, cfg.validation_fraction, substream(base_seed, _SPLIT, *key)
        )
    rows = []
    selections = []
    for method in cfg.methods:
        if method == "ahte":
            model, chosen_m = _fit_ahte_validated(
                train, fit_part, val_part, cfg.T, cfg.m_grid, base_seed, key
            )
            T_label, m_label = cfg.T, chosen_m
            selections.append(
                {
                    "dataset": dataset,
                    "method": method,
                    "seed": base_seed,
                    "parameter": "min_samples_split",
                    "value": chosen_m,
                }
            )
        elif method == "nhte":
            model, chosen_range = _fit_nhte_validated(
                train, fit_part, val_part, cfg.T, cfg.s_grid, base_seed, key
            )
            T_label, m_label = cfg.T, ""
            selections.append(
                {
                    "dataset": dataset,
                    "method": method,
                    "seed": base_seed,
                    "parameter": "s_range",
                    "value": f"({chosen_range[0]:g},{chosen_range[1]:g})",
                }
            )
        elif method == "kde":
            model = KdeModel.fit(train)
            T_label, m_label = "", ""
        else:
            raise ConfigError(f"unknown method {method!r}")
        report = report_from_values(model.evaluate(test), truth)
        rows.append(
            report.csv_row(
                dataset=dataset,
                method=method,
                d=d,
                n=train.shape[0],
                T=T_label,
                m=m_label,
                seed=base_seed,
            )
        )
    return rows, selections


# ---------------------------------------------------------------------------
# synth-bench


_DEFAULT_S_GRID = ((0.0, 1.0), (-0.5, 0.5), (0.0, 0.5), (0.5, 1.0), (-1.0, 1.0))


@dataclass(frozen=True)
class SynthBenchConfig:
    types: tuple[str, ...] = ("type-i", "type-ii", "type-iii", "type-iv")
    dims: tuple[int, ...] = (2, 5)
    methods: tuple[str, ...] = ("nhte", "kde", "ahte")
    n_train: int = 2000
    n_test: int = 10000
    T: int = 100
    m_grid: tuple[int, ...] = (1, 3, 10, 20, 40)
    s_grid: tuple[tuple[float, float], ...] = _DEFAULT_S_GRID
    validation_fraction: float = 0.3
    replications: int = 20
    seed: int = 0

    def __post_init__(self):
        _check_common(self.replications, self.seed)
        unknown = sorted(set(self.types) - set(KINDS))
        _require(not unknown, f"unknown synthetic types: {unknown}")
        _require(all(d >= 1 for d in self.dims), "dims must be positive")
        unknown_methods = sorted(set(self.methods) - {"nhte", "kde", "ahte"})
        _require(not unknown_methods, f"unknown methods: {unknown_methods}")
        _require(self.T >= 1, "T must be >= 1")
        _require(len(self.m_grid) > 0 and all(m >= 1 for m in self.m_grid), "bad m_grid")
        _require(0.0 < self.validation_fraction < 1.0, "validation_fraction must be in (0,1)")


def _synth_bench_task(task):
    cfg, type_name, d, rep = task
    rep_seed = replication_seed(cfg.seed, rep)
    key = (KINDS.index(type_name), d)
    spec = make_type(type_name, d)
    train = spec.sample(cfg.n_train, substream(rep_seed, _TRAIN, *key))
    test = spec.sample(cfg.n_test, substream(rep_seed, _TEST, *key))
    truth = spec.pdf(test)
    return _run_methods(cfg, train, test, truth, rep_seed, key, spec.name, d)


def run_synth_bench(cfg: SynthBenchConfig, out_dir, threads: int = 1):
    """Table-style benchmark on the synthetic families with hyper-search."""
    rep_seeds = [replication_seed(cfg.seed, r) for r in range(cfg.replications)]
    tasks = [
        (cfg, type_name, d, rep)
        for type_name in cfg.types
        for d in cfg.dims
        for rep in range(cfg.replications)
    ]
    results = _map_tasks(_synth_bench_task, tasks, threads)
    rows = [row for chunk, _ in results for row in chunk]
    selections = [sel for _, chunk in results for sel in chunk]
    summary = _finish_run(out_dir, "synth-bench", cfg, rep_seeds, rows)
    _write_csv(Path(out_dir) / "selection.csv", SELECTION_COLUMNS, selections)
    return summary


# ---------------------------------------------------------------------------
# param-study


@dataclass(frozen=True)
class ParamStudyConfig:
    types: tuple[str, ...] = ("type-i", "type-ii", "type-iii", "type-iv")
    dims: tuple[int, ...] = (2, 5)
    T_grid: tuple[int, ...] = (5, 20, 100)
    m_grid: tuple[int, ...] = (1, 3, 5, 10, 20, 30)
    n_train: int = 2000
    n_test: int = 10000
    replications: int = 1
    seed: int = 0

    def __post_init__(self):
        _check_common(self.replications, self.seed)
        unknown = sorted(set(self.types) - set(KINDS))
        _require(not unknown, f"unknown synthetic types: {unknown}")
        _require(all(t >= 1 for t in self.T_grid), "T_grid must be positive")
        _require(all(m >= 1 for m in self.m_grid), "m_grid must be positive")


def _param_study_task(task):
    cfg, type_name, d, rep = task
    rep_seed = replication_seed(cfg.seed, rep)
    key = (KINDS.index(type_name), d)
    spec = make_type(type_name, d)
    train = spec.sample(cfg.n_train, substream(rep_seed, _TRAIN, *key))
    test = spec.sample(cfg.n_test, substream(rep_seed, _TEST, *key))
    truth = spec.pdf(test)
    rows = []
    for ti, T in enumerate(cfg.T_grid):
        for mi, m in enumerate(cfg.m_grid):
            model = fit_ahte(train, T, m, subseed(rep_seed, _FIT, *key, ti, mi))
            report = report_from_values(model.evaluate(test), truth)
            rows.append(
                report.csv_row(
                    dataset=spec.name, method="ahte", d=d, n=cfg.n_train, T=T, m=m, seed=rep_seed
                )
            )
    return rows


def run_param_study(cfg: ParamStudyConfig, out_dir, threads: int = 1):
    """ANLL/MAE surfaces over the (T, m) grid for the adaptive ensemble."""
    rep_seeds = [replication_seed(cfg.seed, r) for r in range(cfg.replications)]
    tasks = [
        (cfg, type_name, d, rep)
        for type_name in cfg.types
        for d in cfg.dims
        for rep in range(cfg.replications)
    ]
    rows = [row for chunk in _map_tasks(_param_study_task, tasks, threads) for row in chunk]
    return _finish_run(out_dir, "param-study", cfg, rep_seeds, rows)


# ---------------------------------------------------------------------------
# rate-study


@dataclass(frozen=True)
class RateStudyConfig:
    spec: str = "beta-toy"
    d: int = 2
    n_grid: tuple[int, ...] = (250, 500, 1000, 2000, 4000, 8000, 16000)
    n_test: int = 1000
    alpha: float = 1.0
    replications: int = 20
    seed: int = 0

    def __post_init__(self):
        _check_common(self.replications, self.seed)
        _require(len(self.n_grid) >= 3, "rate study needs >= 3 sample sizes")
        _require(all(n >= 8 for n in self.n_grid), "n_grid sizes must be >= 8")
        _require(0.0 < self.alpha <= 1.0, "alpha must be in (0, 1]")


def rate_schedules(n: int, d: int, alpha: float, anchor_n: int) -> tuple[float, float, int]:
    """Deterministic stretch offsets and ensemble size for one sample size.

    Offsets are log-scale shifts relative to the data-driven reference
    scale s_hat, whose bandwidth already follows the single-estimator
    order n^(-1/(2+d)) with the 3.5-sigma constant; the single arm uses
    it as-is (offset 0).  The ensemble arm follows the
    (n/log n)^(-1/(2(1+alpha)+d)) order with
    T = round(n^(2 alpha/(2(1+alpha)+d))) members.  Both schedules share
    the same bandwidth at ``anchor_n``, so the sweep compares orders, not
    constants (which the asymptotics leave free).
    """
    ensemble_exp = 1.0 / (2.0 * (1.0 + alpha) + d)
    log_sched = lambda k: math.log(k) - math.log(math.log(k))  # noqa: E731
    ensemble_offset = (math.log(anchor_n) - math.log(n)) / (2.0 + d) + ensemble_exp * (
        log_sched(n) - log_sched(anchor_n)
    )
    ensemble_T = max(1, round(n ** (2.0 * alpha * ensemble_exp)))
    return 0.0, ensemble_offset, ensemble_T


def _rate_study_task(task):
    cfg, rep = task
    rep_seed = replication_seed(cfg.seed, rep)
    spec = make_type(cfg.spec, cfg.d)
    test = spec.sample(cfg.n_test, substream(rep_seed, _TEST))
    truth = spec.pdf(test)
    rows = []
    measurements = []
    anchor_n = min(cfg.n_grid)
    for ni, n in enumerate(cfg.n_grid):
        train = spec.sample(n, substream(rep_seed, _TRAIN, ni))
        single_off, ensemble_off, ensemble_T = rate_schedules(n, cfg.d, cfg.alpha, anchor_n)
        for arm_index, (arm, offset, T) in enumerate(
            (("single", single_off, 1), ("ensemble", ensemble_off, ensemble_T))
        ):
            # Degenerate stretch window: fixed bandwidth per the schedule.
            model = fit_ensemble(
                train,
                T,
                StretchConfig(offset, offset),
                subseed(rep_seed, _FIT, ni, arm_index),
            )
            report = report_from_values(model.evaluate(test), truth)
            rows.append(
                report.csv_row(
                    dataset=spec.name, method="nhte", d=cfg.d, n=n, T=T, seed=rep_seed
                )
            )
            measurements.append({"arm": arm, "n": n, "rep": rep, "mae": report.mae})
    return rows, measurements


def run_rate_study(cfg: RateStudyConfig, out_dir, threads: int = 1):
    """Log-log MAE slopes for the single and ensemble bandwidth schedules."""
    rep_seeds = [replication_seed(cfg.seed, r) for r in range(cfg.replications)]
    tasks = [(cfg, rep) for rep in range(cfg.replications)]
    results = _map_tasks(_rate_study_task, tasks, threads)
    rows = [row for chunk, _ in results for row in chunk]
    measurements = [m for _, chunk in results for m in chunk]

    slopes = []
    for arm in ("single", "ensemble"):
        mean_mae = []
        for n in cfg.n_grid:
            values = [m["mae"] for m in measurements if m["arm"] == arm and m["n"] == n]
            mean_mae.append((n, float(np.mean(values))))
        slope, intercept, stderr = fit_power_law(mean_mae)
        slopes.append(
            {
                "arm": arm,
                "slope": slope,
                "stderr": stderr,
                "intercept": intercept,
                "points": len(mean_mae),
                "n_min": min(cfg.n_grid),
                "n_max": max(cfg.n_grid),
            }
        )
    _finish_run(out_dir, "rate-study", cfg, rep_seeds, rows)
    _write_csv(Path(out_dir) / "slopes.csv", SLOPE_COLUMNS, slopes)
    return {entry["arm"]: entry for entry in slopes}


# ---------------------------------------------------------------------------
# real-bench


@dataclass(frozen=True)
class RealBenchConfig:
    csv_path: str = ""
    delimiter: str = ","
    header: bool = True
    drop_columns: tuple[str, ...] = ()
    prune_threshold: float = 0.98
    pca_dims: tuple[int, ...] = ()
    test_fraction: float = 0.3
    validation_fraction: float = 0.3
    methods: tuple[str, ...] = ("nhte", "kde", "ahte")
    T: int = 100
    m_grid: tuple[int, ...] = (1, 3, 10, 20, 40)
    s_grid: tuple[tuple[float, float], ...] = _DEFAULT_S_GRID
    replications: int = 20
    seed: int = 0

    def __post_init__(self):
        _check_common(self.replications, self.seed)
        _require(bool(self.csv_path), "real-bench needs csv_path")
        _require(0.0 < self.test_fraction < 1.0, "test_fraction must be in (0,1)")
        _require(0.0 < self.validation_fraction < 1.0, "validation_fraction must be in (0,1)")
        _require(self.T >= 1, "T must be >= 1")
        unknown_methods = sorted(set(self.methods) - {"nhte", "kde", "ahte"})
        _require(not unknown_methods, f"unknown methods: {unknown_methods}")


def _real_bench_task(task):
    cfg, dataset_name, variant_index, rows_matrix, rep = task
    rep_seed = replication_seed(cfg.seed, rep)
    key = (variant_index,)
    perm = substream(rep_seed, _SPLIT, *key, 0).permutation(rows_matrix.shape[0])
    n_test = int(round(cfg.test_fraction * rows_matrix.shape[0]))
    if not 0 < n_test < rows_matrix.shape[0]:
        raise ConfigError(f"test_fraction {cfg.test_fraction} leaves an empty part")
    test = rows_matrix[perm[:n_test]]
    train = rows_matrix[perm[n_test:]]
    return _run_methods(cfg, train, test, None, rep_seed, key, dataset_name, rows_matrix.shape[1])


def _preprocess_real(cfg: RealBenchConfig) -> list[tuple[str, Dataset]]:
    base = load_csv(
        cfg.csv_path,
        delimiter=cfg.delimiter,
        header=cfg.header,
        drop_columns=cfg.drop_columns,
    )
    pruned = prune_correlated(base, cfg.prune_threshold)
    normalized = normalize_unit(pruned)
    stem = Path(cfg.csv_path).stem
    if not cfg.pca_dims:
        return [(f"{stem}-d{normalized.d}", normalized)]
    variants = []
    for k in cfg.pca_dims:
        if k > normalized.d:
            raise ConfigError(
                f"pca dimension {k} exceeds {normalized.d} available columns"
            )
        variants.append((f"{stem}-d{k}", pca_reduce(normalized, k)))
    return variants


def run_real_bench(cfg: RealBenchConfig, out_dir, threads: int = 1):
    """ANLL benchmark on a user CSV after prune/normalize/PCA preprocessing."""
    variants = _preprocess_real(cfg)
    rep_seeds = [replication_seed(cfg.seed, r) for r in range(cfg.replications)]
    tasks = [
        (cfg, name, vi, ds.rows, rep)
        for vi, (name, ds) in enumerate(variants)
        for rep in range(cfg.replications)
    ]
    results = _map_tasks(_real_bench_task, tasks, threads)
    rows = [row for chunk, _ in results for row in chunk]
    selections = [sel for _, chunk in results for sel in chunk]
    provenance = {name: list(ds.provenance) for name, ds in variants}
    summary = _finish_run(
        out_dir, "real-bench", cfg, rep_seeds, rows, {"preprocessing": provenance}
    )
    _write_csv(Path(out_dir) / "selection.csv", SELECTION_COLUMNS, selections)
    return summary


# ---------------------------------------------------------------------------
# fit / score


def _load_fit_data(data_cfg: dict, seed: int) -> np.ndarray:
    if not isinstance(data_cfg, dict):
        raise ConfigError("fit config needs a 'data' object")
    if "csv" in data_cfg:
        csv_cfg = data_cfg["csv"]
        ds = load_csv(
            csv_cfg.get("path", ""),
            delimiter=csv_cfg.get("delimiter", ","),
            header=csv_cfg.get("header", True),
            drop_columns=tuple(csv_cfg.get("drop_columns", ())),
        )
        return ds.rows
    if "spec" in data_cfg:
        spec_cfg = data_cfg["spec"]
        spec = make_type(spec_cfg.get("kind", ""), int(spec_cfg.get("d", 0)))
        n = int(spec_cfg.get("n", 0))
        _require(n >= 1, "synthetic fit data needs n >= 1")
        return spec.sample(n, substream(seed, _TRAIN))
    raise ConfigError("fit data must specify either 'csv' or 'spec'")


def run_fit(config: dict, out_path) -> dict:
    """Fit one model per the config and write it as JSON; returns the dict."""
    method = config.get("method")
    seed = int(config.get("seed", 0))
    data = _load_fit_data(config.get("data"), seed)
    if method == "nhte":
        stretch = StretchConfig(
            float(config.get("s_min_exp", 0.0)), float(config.get("s_max_exp", 1.0))
        )
        model = fit_ensemble(data, int(config.get("T", 1)), stretch, subseed(seed, _FIT))
    elif method == "ahte":
        model = fit_ahte(
            data,
            int(config.get("T", 1)),
            int(config.get("min_samples_split", 1)),
            subseed(seed, _FIT),
        )
    elif method == "kde":
        model = KdeModel.fit(data)
    else:
        raise ConfigError(f"fit method must be one of nhte/ahte/kde, got {method!r}")
    obj = model.to_json_dict()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(obj, sort_keys=True) + "\n")
    return obj


def load_model_json(obj: dict):
    """Reconstruct a fitted model from its JSON dict."""
    fmt = obj.get("format")
    if fmt == "kde-v1":
        return KdeModel.from_json_dict(obj)
    if "members" in obj:
        if fmt == "nhte-v1":
            members = [GridEstimator.from_json_dict(m) for m in obj["members"]]
        elif fmt == "ahte-v1":
            members = [RotatedTreeMember.from_json_dict(m) for m in obj["members"]]
        else:
            raise ConfigError(f"unsupported ensemble format {fmt!r}")
        return EnsembleModel(members)
    if fmt == "nhte-v1":
        return GridEstimator.from_json_dict(obj)
    raise ConfigError(f"unsupported model format {fmt!r}")


def run_score(model_path, data_path, out_path, delimiter: str = ",", header: bool = False):
    """Evaluate a stored model on a CSV of query points; write densities."""
    try:
        obj = json.loads(Path(model_path).read_text())
    except OSError as exc:
        raise DataError(f"cannot read model {model_path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"model {model_path} is not valid JSON: {exc}") from None
    model = load_model_json(obj)
    queries = load_csv(data_path, delimiter=delimiter, header=header)
    if queries.d != model.dim:
        raise DataError(
            f"query dimension {queries.d} does not match model dimension {model.dim}"
        )
    values = model.evaluate(queries.rows)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["density"])
        for v in values:
            writer.writerow([repr(float(v))])
    return values
