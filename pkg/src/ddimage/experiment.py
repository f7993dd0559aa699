"""End-to-end identification experiments: configuration, seeding, pipeline runs, sweeps and file output.

One run draws a random spline input, simulates the system, corrupts the
output with Gaussian noise, estimates derivatives with algebraic
differentiators, identifies the image representation and predicts a
trajectory from an analytic latent signal. The prediction is benchmarked
against a simulation of the true system driven by the predicted input.
"""

from __future__ import annotations

import csv
import json
import os
import traceback
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
from scipy import linalg

from .algdiff import DifferentiatorSpec, estimate_derivatives
from .excitation import SplineInputSpec, generate_pe_spline
from .gramian import (
    DataGramian,
    build_gramian,
    build_pencil,
    build_stack,
    compress_rows,
    numerical_rank,
    truncate_rank,
)
from .imagerep import ImageRepresentation, behavior_membership_residual, build_image_representation, predict_trajectory
from .lti import StateSpaceModel, example_system, output_derivatives, reconstruct_state, simulate
from .metrics import NoiseSpec, add_noise, relative_error, snr_db
from .pencil import RankDecisionWarning, UnimodularEmbedding, embed_unimodular, staircase_reduce
from .signals import AnalyticSignal, SampledSignal

#: Noise standard deviations of the SNR sweep.
SWEEP_NOISE_STDS = (1e-4, 5e-4, 1e-3, 5e-3, 1e-2, 2e-2)

# purpose tags keep spline, noise and latent draws independent
_TAG_SPLINE, _TAG_NOISE, _TAG_LATENT = 1, 2, 3

STAGES = ("config", "input", "simulate", "noise", "derivatives", "gramian", "pencil", "staircase",
          "embedding", "representation", "predict", "reconstruct", "reference", "metrics")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class RunConfig:
    """Every knob of an identification run; defaults reproduce the benchmark setup.

    ``L = None`` picks the Gramian depth ``n + 1``. ``window_samples`` is the
    differentiator window in multiples of ``dt``. ``derivatives`` is
    ``"filtered"`` (algebraic differentiators) or ``"exact"`` (analytic,
    noiseless runs only). ``truncate_gramian`` replaces the Gramian by its
    best rank ``L m + n`` approximation before the pencil is formed.
    ``staircase_tol`` applies to noiseless runs, ``staircase_tol_noisy`` to
    runs with ``noise_std > 0``; ``None`` is the machine-precision default.
    """

    A: tuple | None = None
    B: tuple | None = None
    C: tuple | None = None
    D: tuple | None = None
    dt: float = 1e-3
    t_min: float = 0.0
    t_max: float = 3 * np.pi
    spline_degree: int = 7
    knots: int = 14
    amplitude: float = 0.9
    alpha: float = 8.0
    beta: float = 8.0
    n_diff: int = 0
    window_samples: int = 84
    theta: float = 0.0
    L: int | None = None
    lambda_reg: float = 1e-8
    max_degree: int | None = None
    noise_stds: tuple = (2e-2,)
    seeds: tuple = (0,)
    latent_seed: int | None = None
    latent_freqs: tuple = (1.0, 2.0, 0.5)
    horizon: tuple = (0.0, 16.0)
    ic: str = "reconstructed"
    derivatives: str = "filtered"
    truncate_gramian: bool = True
    staircase_tol: float | None = None
    staircase_tol_noisy: float | None = None
    substeps: int = 10
    workers: int = 1
    output_dir: str | None = None
    write_runs: bool = False

    def __post_init__(self):
        # an integer seed count expands to 0..count-1
        if isinstance(self.seeds, (int, np.integer)):
            object.__setattr__(self, "seeds", tuple(range(int(self.seeds))))
        for name in ("noise_stds", "seeds", "latent_freqs", "horizon"):
            val = getattr(self, name)
            if isinstance(val, (int, float)):
                val = (val,)
            object.__setattr__(self, name, tuple(val))
        # matrices become nested tuples so the frozen config stays hashable
        for name in ("A", "B", "C", "D"):
            val = getattr(self, name)
            if val is not None:
                rows = tuple(tuple(float(v) for v in np.atleast_1d(row)) for row in np.atleast_2d(np.asarray(val, dtype=float)))
                object.__setattr__(self, name, rows)

    def validate(self) -> None:
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_min < self.t_max:
            raise ValueError("t_min must be smaller than t_max")
        if self.spline_degree >= self.knots:
            raise ValueError(f"spline degree ({self.spline_degree}) must be smaller than the knot count ({self.knots})")
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if self.window_samples < 1:
            raise ValueError("differentiator window must span at least one sample")
        if self.L is not None and self.L < 2:
            raise ValueError("Gramian depth L must be at least 2")
        if self.lambda_reg < 0:
            raise ValueError("lambda_reg must be non-negative")
        if any(s < 0 for s in self.noise_stds):
            raise ValueError("noise standard deviations must be non-negative")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if len(self.horizon) != 2 or not self.horizon[0] < self.horizon[1]:
            raise ValueError("horizon must be an increasing pair (t_start, t_stop)")
        if self.ic not in ("reconstructed", "zero"):
            raise ValueError("ic must be 'reconstructed' or 'zero'")
        if self.derivatives not in ("filtered", "exact"):
            raise ValueError("derivatives must be 'filtered' or 'exact'")
        if self.derivatives == "filtered" and self.window_samples * self.dt >= self.t_max - self.t_min:
            raise ValueError("differentiator window is longer than the data interval")
        if self.substeps < 1 or self.workers < 1:
            raise ValueError("substeps and workers must be positive")
        model = self.model()
        if model.p != 1:
            raise ValueError("identification requires a single-output system")
        if self.gramian_depth(model) < model.n + 1 and self.L is not None:
            warnings.warn(f"L = {self.L} <= n: the identified image does not constrain the behavior", stacklevel=2)
        spec = self.differentiator()
        if self.derivatives == "filtered" and spec.max_order() < self.gramian_depth(model) - 1:
            raise ValueError("differentiator weights too small for the requested derivative orders")

    def model(self) -> StateSpaceModel:
        if self.A is None:
            return example_system()
        D = [] if self.D is None else self.D
        return StateSpaceModel(np.array(self.A, dtype=float), np.array(self.B, dtype=float),
                               np.array(self.C, dtype=float), np.array(D, dtype=float))

    def gramian_depth(self, model: StateSpaceModel | None = None) -> int:
        model = self.model() if model is None else model
        return model.n + 1 if self.L is None else self.L

    def differentiator(self) -> DifferentiatorSpec:
        return DifferentiatorSpec(self.alpha, self.beta, self.n_diff, self.window_samples * self.dt, self.theta)

    def spline_spec(self, m: int, seed: int) -> SplineInputSpec:
        return SplineInputSpec(m, self.spline_degree, self.knots, self.t_min, self.t_max, self.amplitude, seed)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class RunResult:
    seed: int
    noise_std: float
    run_index: int = 0
    status: str = "ok"
    stage: str | None = None
    message: str = ""
    snr_db: float = np.nan
    rel_error: float = np.nan
    residual: float = np.nan
    gamma_rank: int = -1
    gamma_size: int = 0
    gamma_gap: float = np.nan
    nilpotency_index: int = -1
    det_spread: float = np.nan
    M_degree: int = -1
    rank_warnings: int = 0
    representation: ImageRepresentation | None = field(default=None, repr=False)
    signals: dict = field(default_factory=dict, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def record(self) -> dict:
        return {k: getattr(self, k) for k in ("seed", "noise_std", "run_index", "status", "stage", "message",
                                               "snr_db", "rel_error", "residual", "gamma_rank", "gamma_size",
                                               "gamma_gap", "nilpotency_index", "det_spread", "M_degree",
                                               "rank_warnings")}


def seed_stream(seed: int, run_index: int, tag: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(run_index), int(tag)])


def _int_seed(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, np.uint64)[0])


def default_latent(n_channels: int, freqs, rng: np.random.Generator) -> AnalyticSignal:
    """Sum of sines and cosines at ``freqs`` with Unif([-1, 1]) coefficients per channel."""
    a = rng.uniform(-1.0, 1.0, (n_channels, len(freqs)))
    b = rng.uniform(-1.0, 1.0, (n_channels, len(freqs)))
    return AnalyticSignal.trigonometric(a, b, freqs)


def det_spread(emb: UnimodularEmbedding, points=(0.0, 1.0, -2.5, 1j, 3.0 - 2.0j)) -> float:
    """Relative spread of ``det(s E3 - A3)`` over sample points (zero for a unimodular pencil)."""
    dets = np.array([np.linalg.det(emb.pencil(s)) for s in points])
    ref = np.max(np.abs(dets))
    if ref == 0:
        return np.inf
    return float(np.max(np.abs(dets - dets[0])) / ref)


@dataclass
class Identification:
    """Intermediate products of the identification half of a run."""

    model: StateSpaceModel
    u_data: SampledSignal
    y_clean: SampledSignal
    y_noisy: SampledSignal
    noise: SampledSignal
    gramian: DataGramian
    embedding: UnimodularEmbedding
    representation: ImageRepresentation


class _Stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def identify(config: RunConfig, seed: int, noise_std: float, run_index: int = 0,
             diagnostics: RunResult | None = None) -> Identification:
    """Data generation through the image representation. Raises :class:`StageError`."""
    diag = diagnostics if diagnostics is not None else RunResult(seed, noise_std, run_index)
    with _Stage("config"):
        config.validate()
        if config.derivatives == "exact" and noise_std > 0:
            raise ValueError("exact derivatives are only available for noiseless runs")
        model = config.model()
        L = config.gramian_depth(model)
        n_data = int(round((config.t_max - config.t_min) / config.dt)) + 1
    with _Stage("input"):
        spline = generate_pe_spline(config.spline_spec(model.m, _int_seed(seed_stream(seed, run_index, _TAG_SPLINE))))
        u_stack = spline.sample_stack(config.t_min, config.dt, n_data, max(L - 1, model.n))
    with _Stage("simulate"):
        x, y = simulate(model, u_stack.channels(slice(0, model.m)), substeps=config.substeps)
    with _Stage("noise"):
        y_noisy, noise = add_noise(y, NoiseSpec(noise_std, _int_seed(seed_stream(seed, run_index, _TAG_NOISE))))
        diag.snr_db = snr_db(y, noise)
    with _Stage("derivatives"):
        if config.derivatives == "exact":
            u_d = SampledSignal(u_stack.t0, u_stack.dt, u_stack.values[:L * model.m])
            y_d = SampledSignal(y.t0, y.dt, output_derivatives(model, x.values, u_stack.values, L - 1))
        else:
            spec = config.differentiator()
            u_d = estimate_derivatives(u_stack.channels(slice(0, model.m)), spec, L - 1)
            y_d = estimate_derivatives(y_noisy, spec, L - 1)
    with _Stage("gramian"):
        g = build_gramian(build_stack(u_d, y_d, L, model.m, model.p))
        rank, gap, _ = numerical_rank(g.Gamma)
        diag.gamma_rank, diag.gamma_size, diag.gamma_gap = rank, g.size, gap
        if config.truncate_gramian:
            g = truncate_rank(g, min(L * model.m + model.n, g.size))
    with _Stage("pencil"):
        pen = compress_rows(build_pencil(g))
    with _Stage("staircase"):
        tol = config.staircase_tol_noisy if noise_std > 0 else config.staircase_tol
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RankDecisionWarning)
            sc = staircase_reduce(pen.E0, pen.A0, tol)
        diag.rank_warnings = sum(issubclass(w.category, RankDecisionWarning) for w in caught)
    with _Stage("embedding"):
        emb = embed_unimodular(sc)
        diag.nilpotency_index = emb.nilpotency_index
        diag.det_spread = det_spread(emb)
    with _Stage("representation"):
        rep = build_image_representation(g, emb, config.lambda_reg, config.max_degree,
                                         provenance={"seed": seed, "noise_std": noise_std, "run_index": run_index,
                                                     "staircase_tol": sc.threshold})
        diag.M_degree = rep.degree
    return Identification(model, u_stack.channels(slice(0, model.m)), y, y_noisy, noise, g, emb, rep)


def _latent_for(config: RunConfig, rep: ImageRepresentation, seed: int, run_index: int) -> AnalyticSignal:
    ss = (np.random.SeedSequence(config.latent_seed) if config.latent_seed is not None
          else seed_stream(seed, run_index, _TAG_LATENT))
    return default_latent(rep.latent_dim, config.latent_freqs, np.random.default_rng(ss))


def evaluate_prediction(config: RunConfig, model: StateSpaceModel, rep: ImageRepresentation, ell: AnalyticSignal,
                        result: RunResult) -> dict:
    """Predict from ``ell``, reconstruct states and compare against a simulation of ``model``."""
    t_start, t_stop = config.horizon
    n_pred = int(round((t_stop - t_start) / config.dt)) + 1
    with _Stage("predict"):
        pred = predict_trajectory(rep, ell, t_start, config.dt, n_pred, max_order=model.n)
    with _Stage("reconstruct"):
        x_hat = reconstruct_state(model, pred.u_derivs, pred.y_derivs)
        result.residual = behavior_membership_residual(model, pred.u_derivs, pred.y_derivs)
    with _Stage("reference"):
        if config.ic == "reconstructed":
            x_ref, y_ref = simulate(model, pred.u, x_hat.values[:, 0], substeps=config.substeps)
            x_cmp = x_hat
        else:
            x_ref, y_ref = simulate(model, pred.u, np.zeros(model.n), substeps=config.substeps)
            tau = x_hat.times - x_hat.t0
            free = np.stack([linalg.expm(model.A * t) @ x_hat.values[:, 0] for t in tau], axis=1)
            x_cmp = SampledSignal(x_hat.t0, x_hat.dt, x_hat.values - free)
    with _Stage("metrics"):
        result.rel_error = relative_error(x_ref, x_cmp)
    return {"prediction": pred, "x_hat": x_cmp, "x_ref": x_ref, "y_ref": y_ref}


def run_single(config: RunConfig, seed: int, noise_std: float, run_index: int = 0,
               keep_signals: bool = False) -> RunResult:
    """Full pipeline for one (seed, noise level); stage failures are recorded, never raised."""
    result = RunResult(int(seed), float(noise_std), int(run_index))
    try:
        ident = identify(config, seed, noise_std, run_index, result)
        result.representation = ident.representation
        ell = _latent_for(config, ident.representation, seed, run_index)
        out = evaluate_prediction(config, ident.model, ident.representation, ell, result)
        if keep_signals or (config.output_dir and config.write_runs):
            result.signals = {"u": ident.u_data, "y_clean": ident.y_clean, "y_noisy": ident.y_noisy, **out}
    except StageError as exc:
        result.status = "failed"
        result.stage = exc.stage
        result.message = f"{type(exc.cause).__name__}: {exc.cause}"
        if exc.stage == "config":
            raise ValueError(result.message) from exc.cause
    except Exception as exc:  # noqa: BLE001 - a sweep must survive any run
        result.status = "failed"
        result.stage = "unknown"
        result.message = "".join(traceback.format_exception_only(type(exc), exc)).strip()
    if config.output_dir and config.write_runs:
        write_run_artifacts(result, os.path.join(config.output_dir, f"run_{run_index:02d}_seed_{seed}"))
    return result


def sweep_grid(config: RunConfig):
    """``(seed, noise_std, run_index)`` triples; the run index is the noise-level index."""
    return [(s, std, k) for k, std in enumerate(config.noise_stds) for s in config.seeds]


def _run_task(args):
    config, seed, std, k = args
    return run_single(config, seed, std, k)


def aggregate(results) -> list[dict]:
    """Per noise level: run counts and median/quartiles of ``rel_error`` and ``snr_db`` over successful runs."""
    rows = []
    for std in sorted({r.noise_std for r in results}):
        group = [r for r in results if r.noise_std == std]
        ok = [r for r in group if r.ok]
        row = {"noise_std": std, "runs": len(group), "ok": len(ok)}
        for key in ("rel_error", "snr_db"):
            vals = np.array([getattr(r, key) for r in ok], dtype=float)
            vals = vals[np.isfinite(vals)]
            q = np.percentile(vals, [25, 50, 75]) if vals.size else [np.nan] * 3
            row.update({f"{key}_q25": float(q[0]), f"{key}_median": float(q[1]), f"{key}_q75": float(q[2])})
        rows.append(row)
    return rows


def run_sweep(config: RunConfig):
    """Run every (seed, noise level) pair; returns ``(results, aggregates)`` in grid order."""
    config.validate()
    grid = sweep_grid(config)
    if not grid:
        raise ValueError("empty sweep grid")
    tasks = [(config, s, std, k) for s, std, k in grid]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    agg = aggregate(results)
    if config.output_dir:
        os.makedirs(config.output_dir, exist_ok=True)
        write_summary(results, os.path.join(config.output_dir, "summary.csv"))
        write_json(agg, os.path.join(config.output_dir, "aggregates.json"))
    return results, agg


# ---------------------------------------------------------------- file output

def fmt(x) -> str:
    return format(float(x), ".17g")


def write_dat(path: str, columns: dict) -> None:
    """Whitespace-separated columns under a ``# column: name ...`` header."""
    names = list(columns)
    data = np.column_stack([np.asarray(columns[k], dtype=float).ravel() for k in names])
    with open(path, "w") as fh:
        fh.write("# column: " + " ".join(names) + "\n")
        for row in data:
            fh.write(" ".join(fmt(v) for v in row) + "\n")


def read_dat(path: str) -> dict:
    with open(path) as fh:
        header = fh.readline()
    if not header.startswith("# column:"):
        raise ValueError(f"{path}: missing '# column:' header")
    names = header[len("# column:"):].split()
    data = np.loadtxt(path, comments="#", ndmin=2)
    return {k: data[:, i] for i, k in enumerate(names)}


def _json_text(obj, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_text(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_json_text(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _json_text(v, indent + 1) for v in obj) + "\n" + "  " * indent + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if np.isnan(v):
            return "NaN"
        if np.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return fmt(v)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def write_json(obj, path: str) -> None:
    """JSON with every float written to 17 significant digits."""
    with open(path, "w") as fh:
        fh.write(_json_text(obj) + "\n")


def representation_dict(rep: ImageRepresentation) -> dict:
    return {
        "shape": list(rep.M.shape),
        "degree": rep.degree,
        "m": rep.m,
        "p": rep.p,
        "coefficients": [rep.M[j].tolist() for j in range(rep.degree + 1)],
        "provenance": rep.provenance,
    }


def representation_from_dict(data: dict) -> ImageRepresentation:
    from .pencil import PolynomialMatrix
    coeffs = np.array(data["coefficients"], dtype=float)
    return ImageRepresentation(PolynomialMatrix(coeffs), int(data["m"]), int(data["p"]), dict(data["provenance"]))


def write_summary(results, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "noise_std", "snr_db", "rel_error", "status", "stage", "gamma_rank", "nilpotency_index"])
        for r in results:
            w.writerow([r.seed, fmt(r.noise_std), fmt(r.snr_db), fmt(r.rel_error), r.status, r.stage or "",
                        r.gamma_rank, r.nilpotency_index])


def write_run_artifacts(result: RunResult, directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    sig = result.signals
    if "y_clean" in sig:
        y, yn, u = sig["y_clean"], sig["y_noisy"], sig["u"]
        write_dat(os.path.join(directory, "pe_output.dat"), {"t": y.times, "y_noisy": yn.values[0], "y_clean": y.values[0]})
        write_dat(os.path.join(directory, "pe_input.dat"), {"t": u.times, **{f"u{i + 1}": u.values[i] for i in range(u.n_channels)}})
    if "x_hat" in sig:
        xh, xr = sig["x_hat"], sig["x_ref"]
        cols = {"t": xh.times}
        cols.update({f"xhat{i + 1}": xh.values[i] for i in range(xh.n_channels)})
        cols.update({f"x{i + 1}": xr.values[i] for i in range(xr.n_channels)})
        write_dat(os.path.join(directory, "traj_state.dat"), cols)
    payload = {"result": result.record()}
    if result.representation is not None:
        payload["representation"] = representation_dict(result.representation)
    write_json(payload, os.path.join(directory, "M_coeffs.json"))


def with_overrides(config: RunConfig, **kw) -> RunConfig:
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
