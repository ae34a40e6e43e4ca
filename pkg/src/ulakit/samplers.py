"""Forward-Euler Langevin chains with reproducible counter-based noise.

The chain is X_{k+1} = X_k + eta b(X_k) + sqrt(eta) xi_k with i.i.d. standard
Gaussian xi_k, run as an ensemble of independent chains.  Noise is derived
from a Philox counter so that the draw for (chain i, step k, coordinate j) is
a pure function of (master_seed, i, k, j): each (step, substream) pair owns a
disjoint 2^120-block slice of the counter space, uniforms consume exactly one
64-bit word per value, and normals come from the inverse CDF.  Results are
therefore bitwise reproducible and independent of chain count, scheduling,
or execution order.
"""

from __future__ import annotations

import dataclasses
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from .drift_models import DriftModel
from .errors import ConfigurationError, DivergenceError, InputError
from .gaussian_analytics import GaussianMoments

DIVERGENCE_LIMIT = 1e12

NUM_SUBSTREAMS = 16
SUB_EM = 0
SUB_INIT = 1
SUB_QUAD_BASE = 2
MAX_QUAD_POINTS = NUM_SUBSTREAMS - SUB_QUAD_BASE


def noise_block(master_seed: int, step: int, substream: int, n: int, dim: int) -> np.ndarray:
    """Standard-normal block of shape (n, dim) for one (step, substream).

    Entry (i, j) is a pure function of (master_seed, step, substream, i, j);
    in particular it does not depend on n.
    """
    seed = _check_seed(master_seed)
    if step < -1:
        raise InputError("step index must be >= -1")
    if not 0 <= substream < NUM_SUBSTREAMS:
        raise InputError(f"substream must be in [0, {NUM_SUBSTREAMS})")
    offset = ((step + 1) * NUM_SUBSTREAMS + substream) << 120
    gen = np.random.Generator(np.random.Philox(key=np.uint64(seed), counter=offset))
    u = gen.random((n, dim)) + 2.0**-54
    return ndtri(u)


def _check_seed(master_seed) -> int:
    seed = int(master_seed)
    if seed != master_seed or not 0 <= seed < 2**64:
        raise InputError("master_seed must be an integer in [0, 2^64)")
    return seed


@dataclass(frozen=True)
class InitDensity:
    """Isotropic Gaussian initialization N(m0, sigma0^2 I).

    Carries its quadratic-tail certificate h0 and closed-form entropy, the
    two initialization quantities the bound evaluators consume.
    """

    mean: np.ndarray
    sigma0: float

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        if mean.ndim != 1 or not np.all(np.isfinite(mean)):
            raise InputError("mean must be a finite vector")
        if not (np.isfinite(self.sigma0) and self.sigma0 > 0):
            raise InputError("sigma0 must be positive")
        mean = mean.copy()
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sigma0", float(self.sigma0))

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def h0(self) -> float:
        s2 = self.sigma0**2
        return 0.5 * self.dim * math.log(2.0 * math.pi * s2) + float(self.mean @ self.mean) / s2

    @property
    def entropy(self) -> float:
        return 0.5 * self.dim * (1.0 + math.log(2.0 * math.pi * self.sigma0**2))

    def moments(self) -> GaussianMoments:
        return GaussianMoments(self.mean, self.sigma0**2 * np.eye(self.dim))

    def log_density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d2 = np.sum((x - self.mean) ** 2, axis=-1)
        return -0.5 * self.dim * math.log(2.0 * math.pi * self.sigma0**2) - d2 / (2.0 * self.sigma0**2)

    def sample(self, n: int, master_seed: int) -> np.ndarray:
        return self.mean + self.sigma0 * noise_block(master_seed, -1, SUB_INIT, n, self.dim)


@dataclass(frozen=True)
class SampleEnsemble:
    """n i.i.d. chain states at a fixed time, with seed lineage."""

    time: float
    eta: float
    points: np.ndarray
    master_seed: int
    label: str = "em"

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def chain_count(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def step_size_window(model: DriftModel) -> tuple[float, float]:
    """Admissible step sizes (0, 1/(2 L1)); unbounded for L1 = 0."""
    L1 = model.constants.L1
    return (0.0, math.inf if L1 == 0 else 1.0 / (2.0 * L1))


def _require_step(model: DriftModel, eta: float, enforce_window: bool) -> None:
    if not (np.isfinite(eta) and eta > 0):
        raise ConfigurationError("step size must be positive")
    lo, hi = step_size_window(model)
    if enforce_window and eta >= hi:
        raise ConfigurationError(
            f"step size {eta} outside the admissible window (0, {hi}) for L1={model.constants.L1}; "
            "pass enforce_window=False to run anyway"
        )


def _guard(points: np.ndarray, step: int, time: float) -> None:
    bad = ~np.isfinite(points) | (np.abs(points) > DIVERGENCE_LIMIT)
    if bad.any():
        chain = int(np.argwhere(bad.any(axis=1))[0, 0])
        raise DivergenceError(
            f"chain {chain} diverged at step {step} (t={time:g})",
            chain=chain,
            step=step,
            state=np.array(points[chain]),
        )


def em_step(x, model: DriftModel, eta: float, noise) -> np.ndarray:
    """One forward-Euler update x + eta b(x) + sqrt(eta) noise at one point."""
    if eta <= 0:
        raise InputError("step size must be positive")
    x = np.asarray(x, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if x.shape != (model.dim,) or noise.shape != (model.dim,):
        raise InputError(f"point and noise must have shape ({model.dim},)")
    out = x + eta * model.drift(x) + math.sqrt(eta) * noise
    if not np.all(np.isfinite(out)) or np.any(np.abs(out) > DIVERGENCE_LIMIT):
        raise DivergenceError(f"state diverged at {x.tolist()}", state=out)
    return out


def _grid_steps(eta: float, T: float) -> int:
    if T <= 0:
        raise ConfigurationError("horizon must be positive")
    steps = int(math.floor(T / eta + 1e-9))
    if abs(steps * eta - T) > 1e-9 * max(1.0, T):
        warnings.warn(
            f"horizon {T} is not a multiple of eta={eta}; rounded down to {steps} steps",
            stacklevel=3,
        )
    return steps


def simulate_ensemble(
    model: DriftModel,
    init: InitDensity,
    eta: float,
    T: float,
    n: int,
    master_seed: int,
    snapshot_times=None,
    enforce_window: bool = True,
):
    """Run n independent chains for floor(T/eta) steps.

    Returns the final SampleEnsemble, or (final, snapshots) when
    snapshot_times is given.  Snapshots land on grid times only (requested
    times are rounded down, with a warning when off-grid).
    """
    _require_step(model, eta, enforce_window)
    if init.dim != model.dim:
        raise InputError("init dimension does not match model")
    if n < 1:
        raise InputError("need at least one chain")
    seed = _check_seed(master_seed)
    steps = _grid_steps(eta, T)

    snap_index: dict[int, float] = {}
    if snapshot_times is not None:
        for t_req in snapshot_times:
            k = int(math.floor(t_req / eta + 1e-9))
            if abs(k * eta - t_req) > 1e-9 * max(1.0, abs(t_req)):
                warnings.warn(f"snapshot time {t_req} is off-grid; using {k * eta}", stacklevel=2)
            snap_index[min(max(k, 0), steps)] = min(max(k, 0), steps) * eta

    x = init.sample(n, seed)
    snapshots = []

    def take(k, pts):
        snapshots.append(
            SampleEnsemble(time=k * eta, eta=eta, points=pts, master_seed=seed)
        )

    if 0 in snap_index:
        take(0, x)
    for k in range(steps):
        x = x + eta * model.drift(x) + math.sqrt(eta) * noise_block(seed, k, SUB_EM, n, model.dim)
        _guard(x, step=k + 1, time=(k + 1) * eta)
        if (k + 1) in snap_index:
            take(k + 1, x)
    final = SampleEnsemble(time=steps * eta, eta=eta, points=x, master_seed=seed)
    if snapshot_times is None:
        return final
    return final, snapshots


def interpolated_sample(x_grid, model: DriftModel, tau: float, noise, eta: float | None = None) -> np.ndarray:
    """Within-step bridge state x + tau b(x) + sqrt(tau) noise.

    Holds the drift at its grid value; at tau = eta this is exactly the next
    forward-Euler state for the same noise draw.
    """
    if tau < 0 or (eta is not None and tau > eta * (1 + 1e-12)):
        raise InputError("interpolation offset must lie in [0, eta]")
    x = np.asarray(x_grid, dtype=float)
    noise = np.asarray(noise, dtype=float)
    return x + tau * model.drift(x) + math.sqrt(tau) * noise


def fine_reference_ensemble(
    model: DriftModel,
    init: InitDensity,
    eta_fine: float,
    T: float,
    n: int,
    master_seed: int,
    coarse_eta: float | None = None,
    snapshot_times=None,
    enforce_window: bool = True,
):
    """Fine-step chain standing in for the continuous-time law.

    Requires eta_fine <= coarse_eta / 32 when the coarse step it serves is
    given.  The reference carries its own second-order KL bias in eta_fine,
    which the step ratio makes negligible next to the coarse run's error.
    """
    if coarse_eta is not None and eta_fine > coarse_eta / 32.0 * (1 + 1e-12):
        raise ConfigurationError(
            f"reference step {eta_fine} must be at most coarse step / 32 = {coarse_eta / 32.0}"
        )
    out = simulate_ensemble(
        model, init, eta_fine, T, n, master_seed,
        snapshot_times=snapshot_times, enforce_window=enforce_window,
    )
    if snapshot_times is None:
        return dataclasses.replace(out, label="reference")
    final, snaps = out
    return (
        dataclasses.replace(final, label="reference"),
        [dataclasses.replace(s, label="reference") for s in snaps],
    )


# ---------------------------------------------------------------------------
# On-disk format: columnar CSV  chain,coord0..coord{d-1},time  plus a JSON
# sidecar carrying seed lineage and model identity.
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return "%.17g" % float(x)


def write_ensemble_csv(ensemble: SampleEnsemble, path) -> None:
    path = Path(path)
    d = ensemble.dim
    header = "chain," + ",".join(f"coord{j}" for j in range(d)) + ",time"
    lines = [header]
    t = _fmt(ensemble.time)
    for i in range(ensemble.chain_count):
        coords = ",".join(_fmt(v) for v in ensemble.points[i])
        lines.append(f"{i},{coords},{t}")
    path.write_text("\n".join(lines) + "\n")


def write_ensemble_sidecar(ensemble: SampleEnsemble, path, model: DriftModel | None = None, extra: dict | None = None) -> None:
    payload = {
        "master_seed": ensemble.master_seed,
        "eta": ensemble.eta,
        "time": ensemble.time,
        "chain_count": ensemble.chain_count,
        "dim": ensemble.dim,
        "label": ensemble.label,
    }
    if model is not None:
        payload["model"] = {"name": model.name, "params": model.params}
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def read_ensemble_csv(path, sidecar_path=None) -> SampleEnsemble:
    path = Path(path)
    rows = path.read_text().strip().split("\n")
    header = rows[0].split(",")
    if header[0] != "chain" or header[-1] != "time":
        raise InputError(f"{path} is not an ensemble CSV")
    d = len(header) - 2
    data = np.array([[float(v) for v in row.split(",")] for row in rows[1:]])
    points = data[:, 1 : 1 + d]
    time = float(data[0, -1]) if len(data) else 0.0
    meta = {}
    sidecar = Path(sidecar_path) if sidecar_path else path.with_suffix(".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
    return SampleEnsemble(
        time=meta.get("time", time),
        eta=meta.get("eta", float("nan")),
        points=points,
        master_seed=meta.get("master_seed", 0),
        label=meta.get("label", "em"),
    )
