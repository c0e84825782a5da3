"""Config-driven experiment runner: Monte Carlo audits of the closed-form
probabilities and of the scaling limits, with machine-readable reports.

Every report embeds the full config and seed; re-running a config reproduces
the numbers exactly.  Pass/fail thresholds live in the config, not in code.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from . import analytics
from .circle import CircleModel, build_model, derived_killing
from .numerics import (
    QuadratureSpec,
    chi_square_pvalue,
    hausdorff,
    integrate,
    ks_distance_two_sample,
)
from .sampler import SoupEnsemble, conditional_experiment
from .scaling import ConditionedBridgeLaw, SubordinatorLaw, sample_conditioned_renewal


@dataclass(frozen=True)
class ScheduleEntry:
    n: int
    p: float
    c: float

    def model(self, alpha: float) -> CircleModel:
        return build_model(self.n, self.p, self.c, alpha)


def symmetric_schedule(kappa: float, ns) -> list[ScheduleEntry]:
    """p = 1/2, c = kappa/(2 n^2): hits the kappa target with epsilon = kappa/2."""
    return [ScheduleEntry(n=n, p=0.5, c=kappa / (2.0 * n * n)) for n in ns]


def asymmetric_schedule(kappa: float, epsilon: float, ns) -> list[ScheduleEntry]:
    """Drifted walk p = 1/2 - sqrt(kappa-2 eps)/(2n), c = eps/n^2 (eps < kappa/2)."""
    drift = math.sqrt(kappa - 2.0 * epsilon)
    return [ScheduleEntry(n=n, p=0.5 - drift / (2.0 * n), c=epsilon / (n * n))
            for n in ns]


DEFAULT_THRESHOLDS = {
    "z_max": 4.0,                # edge-audit z-score gate
    "gap_allowance": 0.02,       # discretization allowance for limit gaps
    "chi2_min_p": 1e-3,          # chi-square acceptance for histograms
    "stability": 0.10,           # relative spread gate for scaled cluster counts
    "jk_gap": 0.03,              # pointwise gate for the through-1 extent cdf
    "drift_rel": 0.05,           # schedule-vs-target relative drift bound
    "min_cell_prob": 0.005,      # simplex cells below this merge into the rest
}


@dataclass
class ExperimentConfig:
    """Declarative experiment description; JSON(de)serializable."""

    name: str
    alpha: float
    schedule: list[ScheduleEntry]
    replicates: int
    seed: int
    kappa: float | None = None    # target of n^2 kappa_n, when a limit is compared
    epsilon: float | None = None  # target of n^2 c_n
    out_dir: str | None = None
    bridge_resolution: int = 2000
    bridge_paths: int = 1000
    comparison_n: int | None = None       # schedule entry used for law comparisons
    comparison_replicates: int = 3000
    histogram_replicates: int = 2000      # power-calibrated histogram subsample
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))

    def validate(self) -> None:
        """Check the schedule drifts toward the declared limit targets."""
        if self.kappa is None:
            return
        rel = self.thresholds.get("drift_rel", 0.05)
        for entry in self.schedule:
            kap_n, _ = derived_killing(entry.p, entry.c)
            if abs(entry.n ** 2 * kap_n - self.kappa) > rel * max(self.kappa, 1e-12):
                raise ValueError(f"schedule entry n={entry.n} misses kappa target")
            if self.epsilon is not None:
                if abs(entry.n ** 2 * entry.c - self.epsilon) > rel * max(self.epsilon, 1e-12):
                    raise ValueError(f"schedule entry n={entry.n} misses epsilon target")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schedule"] = [asdict(e) for e in self.schedule]
        return d

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        d = dict(d)
        d["schedule"] = [ScheduleEntry(**e) for e in d["schedule"]]
        return ExperimentConfig(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "ExperimentConfig":
        return ExperimentConfig.from_dict(json.loads(text))


def default_edge_audit_config(out_dir=None) -> ExperimentConfig:
    return ExperimentConfig(
        name="edge-audit", alpha=0.7,
        schedule=[ScheduleEntry(n=12, p=0.55, c=0.4)],
        replicates=100_000, seed=20240801, out_dir=out_dir)


def default_single_partition_config(out_dir=None) -> ExperimentConfig:
    kappa, epsilon = 1.0, 0.5
    return ExperimentConfig(
        name="single-partition", alpha=0.5, kappa=kappa, epsilon=epsilon,
        schedule=symmetric_schedule(kappa, (50, 100, 200)),
        replicates=20_000, seed=20240802, out_dir=out_dir)


def default_cluster_scaling_config(out_dir=None) -> ExperimentConfig:
    kappa = 1.0
    return ExperimentConfig(
        name="cluster-scaling", alpha=0.5, kappa=kappa, epsilon=kappa / 2.0,
        schedule=symmetric_schedule(kappa, (100, 400, 1600)),
        replicates=2000, seed=20240803, out_dir=out_dir,
        bridge_resolution=2000, bridge_paths=1000,
        comparison_n=400, comparison_replicates=3000)


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------

def _jsonable(obj):
    """Recursively convert numpy scalars/arrays to builtin types."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _write_outputs(config: ExperimentConfig, report: dict, rows: list[dict],
                   replicate_lines: list[dict] | None) -> None:
    if config.out_dir is None:
        return
    os.makedirs(config.out_dir, exist_ok=True)
    with open(os.path.join(config.out_dir, "config.json"), "w") as fh:
        fh.write(config.to_json())
    with open(os.path.join(config.out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    if rows:
        with open(os.path.join(config.out_dir, "summary.csv"), "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            writer.writerows(rows)
    if replicate_lines is not None:
        with open(os.path.join(config.out_dir, "replicates.jsonl"), "w") as fh:
            for line in replicate_lines:
                fh.write(json.dumps(line, sort_keys=True) + "\n")


def ensemble_records(ensemble: SoupEnsemble) -> list[dict]:
    """Per-replicate JSON-able records (one line per replicate).

    Extent fields are -1 / null when their defining event does not hold
    (origin extents need a closed edge; through extents additionally need a
    replicate free of loops avoiding vertex 1).
    """
    out = []
    for i in range(ensemble.replicates):
        through_defined = (ensemble.avoiding_count[i] == 0
                           and ensemble.closed_edge_count[i] >= 1)
        rec = {
            "replicate": i,
            "loops": int(ensemble.loop_count[i]),
            "clusters": int(ensemble.cluster_count[i]),
            "closed_edges": int(ensemble.closed_edge_count[i]),
            "origin_left": int(ensemble.origin_left[i]),
            "origin_right": int(ensemble.origin_right[i]),
            "through_left": int(ensemble.origin_left[i]) if through_defined else None,
            "through_right": int(ensemble.origin_right[i]) if through_defined else None,
            "lift_left": int(ensemble.lift_left[i]),
            "lift_right": int(ensemble.lift_right[i]),
        }
        if ensemble.closed_edges is not None:
            rec["closed_left_endpoints"] = [int(e) + 1 for e in ensemble.closed_edges[i]]
        out.append(rec)
    return out


# ---------------------------------------------------------------------------
# experiment 1: per-edge closure probabilities
# ---------------------------------------------------------------------------

def run_edge_probability_audit(config: ExperimentConfig, *, workers: int = 1) -> dict:
    """MC vs closed-form closure probability for every edge, gated at z_max."""
    config.validate()
    entry = config.schedule[0]
    model = entry.model(config.alpha)
    ens = conditional_experiment(model, config.seed, "unconditioned",
                                 config.replicates, workers=workers)
    total = analytics.mass_inside(model, range(1, model.n + 1))
    rows = []
    z_max = config.thresholds["z_max"]
    all_pass = True
    for e in range(model.n):
        u = e + 1
        v = (e + 1) % model.n + 1
        avoid = analytics.mass_avoiding_edges(model, [(u, v), (v, u)])
        p_closed = math.exp(-config.alpha * (total - avoid))
        p_hat = ens.closed_edge_totals[e] / config.replicates
        se = math.sqrt(max(p_closed * (1 - p_closed), 1e-30) / config.replicates)
        z = (p_hat - p_closed) / se if se > 0 else 0.0
        ok = abs(z) <= z_max
        all_pass &= ok
        rows.append({"edge": u, "analytic": p_closed, "mc": p_hat,
                     "z": z, "pass": ok})
    report = _jsonable({
        "experiment": config.name,
        "config": config.to_dict(),
        "edges": rows,
        "passed": bool(all_pass),
    })
    _write_outputs(config, report, report["edges"], ensemble_records(ens))
    return report


# ---------------------------------------------------------------------------
# experiment 2: single-partition probability and extent histogram
# ---------------------------------------------------------------------------

def _simplex_cell_probs(kappa: float, alpha: float, bins: int) -> np.ndarray:
    """Integral of the extent limit density over each cell of a bins x bins grid.

    The density depends on x + y only, so each cell integral reduces to a 1-D
    integral of density(z) times the overlap width of the anti-diagonal line
    x + y = z with the cell.
    """
    edges = np.linspace(0.0, 1.0, bins + 1)
    probs = np.zeros((bins, bins))

    def density_z(z):
        return analytics.cluster_extent_limit_density(kappa, alpha, z / 2.0, z / 2.0)

    for i in range(bins):
        for j in range(bins):
            a1, a2 = edges[i], edges[i + 1]
            b1, b2 = edges[j], edges[j + 1]
            z_lo, z_hi = a1 + b1, min(a2 + b2, 1.0)
            if z_hi <= z_lo:
                continue

            def integrand(z):
                width = min(a2, z - b1) - max(a1, z - b2)
                return density_z(z) * max(width, 0.0)

            breaks = [t for t in (a1 + b2, a2 + b1) if z_lo < t < z_hi]
            val, _ = integrate(integrand, z_lo, z_hi,
                               QuadratureSpec(tol=1e-9, limit=300),
                               points=breaks or None)
            probs[i, j] = val
    return probs


def extent_histogram_pvalue(ensemble: SoupEnsemble, kappa: float, alpha: float,
                            bins: int = 6, min_cell_prob: float = 0.005,
                            max_replicates: int | None = None) -> tuple[float, float]:
    """Chi-square p-value of the scaled extent histogram against the limit density.

    Cells with tiny expected probability are merged into a single rest bucket.
    `max_replicates` restricts the test to a deterministic leading subsample:
    the extent law converges without a proven rate, so the histogram test is
    run at a declared power below which lattice bias stays within noise.
    """
    n = int(ensemble.model["n"])
    upto = ensemble.replicates if max_replicates is None else min(
        max_replicates, ensemble.replicates)
    split = ensemble.closed_edge_count[:upto] >= 1
    gx = ensemble.origin_left[:upto][split] / n
    gy = ensemble.origin_right[:upto][split] / n
    probs = _simplex_cell_probs(kappa, alpha, bins)
    edges = np.linspace(0.0, 1.0, bins + 1)
    ix = np.clip(np.searchsorted(edges, gx, side="right") - 1, 0, bins - 1)
    iy = np.clip(np.searchsorted(edges, gy, side="right") - 1, 0, bins - 1)
    counts = np.zeros((bins, bins))
    np.add.at(counts, (ix, iy), 1.0)

    keep = probs >= min_cell_prob
    obs = list(counts[keep])
    exp = list(probs[keep])
    rest_p = probs[~keep].sum()
    rest_c = counts[~keep].sum()
    if rest_p > 0:
        obs.append(rest_c)
        exp.append(rest_p)
    return chi_square_pvalue(obs, exp)


def run_single_partition_convergence(config: ExperimentConfig, *, workers: int = 1) -> dict:
    """MC split probability per n against the limit law, plus the extent histogram."""
    config.validate()
    if not 0.0 < config.alpha < 1.0:
        raise ValueError("needs 0 < alpha < 1")
    limit = analytics.prob_not_single_partition_limit(config.kappa, config.epsilon,
                                                      config.alpha)
    rows = []
    last_ens = None
    for entry in config.schedule:
        model = entry.model(config.alpha)
        ens = conditional_experiment(model, config.seed, "unconditioned",
                                     config.replicates, workers=workers)
        frac = ens.split_fraction
        se = math.sqrt(max(frac * (1 - frac), 1e-30) / config.replicates)
        rows.append({"n": entry.n, "mc_split": frac, "limit": limit,
                     "gap": abs(frac - limit), "se": se})
        last_ens = ens

    allowance = config.thresholds["gap_allowance"]
    final = rows[-1]
    gap_ok = final["gap"] < allowance + 3.0 * final["se"]
    stat, pval = extent_histogram_pvalue(last_ens, config.kappa, config.alpha,
                                         min_cell_prob=config.thresholds["min_cell_prob"],
                                         max_replicates=config.histogram_replicates)
    chi_ok = pval > config.thresholds["chi2_min_p"]
    report = _jsonable({
        "experiment": config.name,
        "config": config.to_dict(),
        "per_n": rows,
        "limit": limit,
        "final_gap_ok": bool(gap_ok),
        "extent_chi2_stat": stat,
        "extent_chi2_p": pval,
        "extent_chi2_ok": bool(chi_ok),
        "passed": bool(gap_ok and chi_ok),
    })
    _write_outputs(config, report, report["per_n"], ensemble_records(last_ens))
    return report


# ---------------------------------------------------------------------------
# experiment 3: cluster scaling, Hausdorff comparison with the bridge
# ---------------------------------------------------------------------------

def sample_limit_extents(kappa: float, alpha: float, count: int, rng) -> np.ndarray:
    """(G, D) pairs from the extent limit density, by exact rejection.

    The density depends on g + d only; the sum z has density proportional to
    z sinh(s z)^(alpha-2) sinh(s(1-z))^(-alpha), whose ratio against a
    Beta(alpha, 1-alpha) proposal is bounded and smooth, so a constant
    envelope gives exact samples.  Given z, g is uniform on (0, z).
    """
    s = math.sqrt(kappa)

    def log_ratio(z):
        # log of target/proposal = (2-alpha) log(z/sinh(sz)) + alpha log((1-z)/sinh(s(1-z)))
        return ((2.0 - alpha) * (np.log(z) - np.log(np.sinh(s * z)))
                + alpha * (np.log(1.0 - z) - np.log(np.sinh(s * (1.0 - z)))))

    grid = np.linspace(1e-9, 1.0 - 1e-9, 20_001)
    log_env = float(np.max(log_ratio(grid))) + 1e-9
    out = np.empty(0)
    while out.size < count:
        need = count - out.size
        z = rng.beta(alpha, 1.0 - alpha, size=2 * need + 64)
        z = z[(z > 0.0) & (z < 1.0)]
        accept = np.log(rng.random(z.size)) < log_ratio(z) - log_env
        out = np.concatenate([out, z[accept]])
    z = out[:count]
    g = rng.random(count) * z
    return np.column_stack([g, z - g])


def run_cluster_scaling(config: ExperimentConfig, *, workers: int = 1) -> dict:
    """Scaled cluster-count stability plus law comparisons against the bridge.

    Three parts: (1) mean of (closed edges)/n^(1-alpha) across the schedule
    under the no-loops-through-1 conditioning, gated on relative spread;
    (2) at the comparison n, the scaled closed-endpoint sets of split
    unconditioned soups against extent-mixed bridge ranges (KS on the leftmost
    point and on the scaled cluster count, matched-quantile mean Hausdorff);
    (3) the through-1-only extent cdf against its scaling limit on a grid.
    """
    config.validate()
    alpha, kappa = config.alpha, config.kappa
    comparison_n = config.comparison_n or config.schedule[-1].n
    entry_by_n = {entry.n: entry for entry in config.schedule}
    if comparison_n not in entry_by_n:
        raise ValueError("comparison_n must be one of the schedule sizes")

    # part 1: scaled cluster-count stability (conditioned = cut at vertex 1)
    rows = []
    for entry in config.schedule:
        ens = conditional_experiment(entry.model(alpha), config.seed,
                                     "avoiding-1-only", config.replicates,
                                     workers=workers)
        k_scaled = ens.closed_edge_count / entry.n ** (1.0 - alpha)
        rows.append({"n": entry.n,
                     "k_scaled_mean": float(np.mean(k_scaled)),
                     "k_scaled_se": float(np.std(k_scaled) / math.sqrt(len(k_scaled)))})
    means = np.array([r["k_scaled_mean"] for r in rows])
    spread = float((means.max() - means.min()) / means.mean())
    stable = spread <= config.thresholds["stability"]

    # part 2: split unconditioned soups vs the extent-mixed bridge
    model_c = entry_by_n[comparison_n].model(alpha)
    ens_u = conditional_experiment(model_c, config.seed + 1, "unconditioned",
                                   config.comparison_replicates, workers=workers,
                                   keep_closed_edges=True)
    split_idx = np.flatnonzero(ens_u.closed_edge_count >= 1)
    soup_sets = [ens_u.closed_edges[i] / comparison_n for i in split_idx]
    soup_left = np.array([s[0] for s in soup_sets])
    soup_k = ens_u.closed_edge_count[split_idx] / comparison_n ** (1.0 - alpha)

    rng = np.random.default_rng(config.seed + 2)
    extents = sample_limit_extents(kappa, alpha, config.bridge_paths, rng)
    res = config.bridge_resolution
    mix_sets, mix_left, mix_k = [], [], []
    for g, d in extents:
        k_eff = kappa * (1.0 - g - d) ** 2
        bridge = ConditionedBridgeLaw(SubordinatorLaw(kappa=k_eff, alpha=alpha))
        pts = bridge.sample_bridge_path(res, rng)
        s = g + (1.0 - g - d) * pts
        mix_sets.append(s)
        mix_left.append(s[0])
        mix_k.append((pts.size - 1) / res ** (1.0 - alpha) * (1.0 - g - d) ** (1.0 - alpha))
    ks_left = ks_distance_two_sample(soup_left, mix_left)
    ks_k = ks_distance_two_sample(soup_k, mix_k)

    soup_sorted = sorted(soup_sets, key=lambda s: s[0])
    mix_sorted = sorted(mix_sets, key=lambda s: s[0])
    picks = np.linspace(0.0, 1.0, 101)
    hd = [hausdorff(soup_sorted[int(q * (len(soup_sorted) - 1))],
                    mix_sorted[int(q * (len(mix_sorted) - 1))]) for q in picks]
    # reference scale: the same statistic between two halves of the mixture
    half_a = sorted(mix_sets[0::2], key=lambda s: s[0])
    half_b = sorted(mix_sets[1::2], key=lambda s: s[0])
    hd_ref = [hausdorff(half_a[int(q * (len(half_a) - 1))],
                        half_b[int(q * (len(half_b) - 1))]) for q in picks]

    # part 3: through-1-only scaled extent cdf against the limit formula
    ens_t = conditional_experiment(model_c, config.seed + 3, "through-1-only",
                                   config.comparison_replicates, workers=workers)
    grid = [(0.1, 0.1), (0.1, 0.3), (0.3, 0.1), (0.2, 0.2), (0.3, 0.3),
            (0.2, 0.5), (0.5, 0.2), (0.4, 0.4)]
    jk_rows, jk_gap = [], 0.0
    for a, b in grid:
        emp = float(np.mean((ens_t.closed_edge_count >= 1)
                            & (ens_t.origin_left <= a * comparison_n)
                            & (ens_t.origin_right <= b * comparison_n)))
        lim = analytics.through1_extent_cdf_limit(kappa, config.epsilon, alpha, a, b)
        jk_rows.append({"a": a, "b": b, "mc": emp, "limit": lim,
                        "gap": abs(emp - lim)})
        jk_gap = max(jk_gap, abs(emp - lim))
    jk_ok = jk_gap < config.thresholds["jk_gap"]

    report = {
        "experiment": config.name,
        "config": config.to_dict(),
        "per_n": rows,
        "k_scaled_spread": spread,
        "k_scaled_stable": bool(stable),
        "comparison_n": comparison_n,
        "ks_leftmost": ks_left,
        "ks_cluster_count": ks_k,
        "mean_hausdorff": float(np.mean(hd)),
        "mean_hausdorff_reference": float(np.mean(hd_ref)),
        "through1_extent_grid": jk_rows,
        "through1_extent_max_gap": jk_gap,
        "through1_extent_ok": bool(jk_ok),
        "passed": bool(stable and jk_ok),
    }
    report = _jsonable(report)
    _write_outputs(config, report, report["per_n"], None)
    return report


RUNNERS = {
    "edge-audit": run_edge_probability_audit,
    "single-partition": run_single_partition_convergence,
    "cluster-scaling": run_cluster_scaling,
}
