"""Experiment drivers behind the command line.

Each driver takes a validated ``ExperimentConfig`` and returns an
``Outcome``: the CSV tables to write plus named pass/fail checks. All
randomness derives from the config seed: sweep point ``k`` and replication
``r`` use ``Stream(seed).child(k, r)``, so results do not depend on how
replications are spread over worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .adversary import adversary_lipschitz, build_adversary
from .config import ExperimentConfig, build_box, build_learner, build_oracle
from .domain import Box, Stream
from .harness import (
    ROUND_COLUMNS,
    SUMMARY_COLUMNS,
    play,
    rate_fit,
    regret,
    replicate,
    round_rows,
    stability_bound,
    summarize,
)
from .oracle import GridLeader, OracleQuery, PWL1DOracle, contract_check, pwl1d_minimize
from .probes import probe_btl, random_instance, run_suite
from .saddle import (
    SUMMARY_COLUMNS as SADDLE_SUMMARY_COLUMNS,
    BilinearPayoff,
    FunctionPayoff,
    HingePayoff,
    duality_gap,
    saddle_round_rows,
    self_play_regrets,
    solve_saddle,
)

PAIRED_COLUMNS = ("experiment_id", "baseline", "T", "mean_diff", "ci", "n")
PROBE_COLUMNS = ("suite", "n", "passed", "not_applicable", "failed")
AUDIT_COLUMNS = ("check", "h", "n", "passed", "max_excess")


@dataclass
class Outcome:
    tables: dict = field(default_factory=dict)  # file name -> (header, rows)
    checks: list = field(default_factory=list)  # (name, passed, detail)
    seeds: list = field(default_factory=list)  # (label, stream string)

    @property
    def ok(self) -> bool:
        return all(c[1] for c in self.checks)


def _l1_diameter(box: Box) -> float:
    return float(box.edges.sum())


def _reference(raw: dict, box: Box):
    spec = raw.get("reference_oracle")
    if spec is not None:
        return build_oracle(spec)
    if box.d == 1:
        return PWL1DOracle()
    raise ValueError("d >= 2 needs an explicit reference_oracle")


# -- single games ---------------------------------------------------------------


def _game(raw: dict, spec: dict, T: int, stream: Stream, keep_rounds: bool, label: str, replication: int,
          frozen: bool = False, eta: float | None = None) -> dict:
    box = build_box(raw["box"])
    L = adversary_lipschitz(raw["adversary"])
    spec = dict(spec)
    if frozen:
        spec["perturbation_mode"] = "frozen"
    if eta is not None:
        spec["eta"] = eta
    cfg = build_learner(spec, L, box.d, T, stream.child(2))
    adversary = build_adversary(raw["adversary"], box, T, stream.child(1), cfg)
    trace = play(cfg, adversary, box, T, stream)
    rep = regret(trace, _reference(raw, box), per_round=keep_rounds)
    out = {
        "avg_regret": rep.avg_regret,
        "stability_mean": rep.stability_mean,
        "learner_cum_loss": rep.learner_cum_loss,
        "best_value": rep.best_value,
        "eta": cfg.eta,
        "seed": str(stream),
    }
    if keep_rounds:
        out["rows"] = round_rows(label, replication, trace, rep)
    return out


def _sweep_one(raw, spec, T, k, label, keep, r):
    return _game(raw, spec, T, Stream(raw["seed"]).child(k, r), r < keep, label, r)


def _fmt_fit(points):
    if len({p[0] for p in points}) < 4 or any(p[1] <= 0 for p in points):
        return None
    return rate_fit(points)


def _bound_for(raw: dict, spec: dict, eta: float) -> float | None:
    box = build_box(raw["box"])
    if spec["variant"] == "ftl" or math.isinf(eta):
        return None
    oracle = build_oracle(spec["oracle"])
    if not oracle.exact:
        return None
    L = adversary_lipschitz(raw["adversary"])
    return stability_bound(eta, L, box.d, raw.get("diameter", _l1_diameter(box)))


def run_regret_sweep(cfg: ExperimentConfig, workers: int = 1) -> Outcome:
    raw = cfg.raw
    n = raw["replications"]
    keep = raw.get("round_replications", n)
    learners = raw.get("learners") or {cfg.experiment_id: raw["learner"]}
    outcome = Outcome()
    rounds, summary, paired = [], [], []
    per_label_regrets: dict = {}
    for label, spec in learners.items():
        points, rows = [], []
        for k, T in enumerate(raw["T_list"]):
            agg = replicate(partial(_sweep_one, raw, spec, T, k, label, keep), n, workers)
            for res in agg.results:
                rounds.extend(res.get("rows", ()))
            reg = agg["avg_regret"]
            points.append((T, reg.mean, reg.ci))
            per_label_regrets[(label, T)] = reg.values
            rows.append([label, T, reg.mean, reg.ci, agg["stability_mean"].mean,
                         _bound_for(raw, spec, agg.results[0]["eta"]), None, None, None,
                         agg["learner_cum_loss"].mean, agg["best_value"].mean])
            if label == next(iter(learners)):
                outcome.seeds.extend((f"T={T}/replication={r}", res["seed"]) for r, res in enumerate(agg.results))
        fit = _fmt_fit(points)
        for row in rows:
            if fit is not None:
                row[6:9] = [fit.slope, fit.intercept, fit.r2]
            summary.append(tuple(row))
        if fit is not None and "slope_range" in raw:
            lo, hi = raw["slope_range"]
            outcome.checks.append((f"{label}: slope in [{lo}, {hi}]", lo <= fit.slope <= hi, f"slope={fit.slope!r}"))
        if fit is not None and "min_r2" in raw:
            outcome.checks.append((f"{label}: r2 >= {raw['min_r2']}", fit.r2 >= raw["min_r2"], f"r2={fit.r2!r}"))
    labels = list(learners)
    for label in labels[1:]:
        for T in raw["T_list"]:
            diff = summarize(per_label_regrets[(label, T)] - per_label_regrets[(labels[0], T)])
            paired.append((label, labels[0], T, diff.mean, diff.ci, diff.n))
            if raw.get("paired_check"):
                outcome.checks.append((f"{label} - {labels[0]} at T={T}: upper CI <= 0", diff.upper <= 0,
                                       f"mean_diff={diff.mean!r} ci={diff.ci!r}"))
    outcome.tables["rounds.csv"] = (ROUND_COLUMNS, rounds)
    outcome.tables["summary.csv"] = (SUMMARY_COLUMNS, summary)
    if paired:
        outcome.tables["paired.csv"] = (PAIRED_COLUMNS, paired)
    return outcome


def _killer_one(raw, r):
    return _game(raw, raw["learner"], raw["T"], Stream(raw["seed"]).child(0, r), True, raw.get("experiment_id", "killer"), r)


def run_killer(cfg: ExperimentConfig, workers: int = 1) -> Outcome:
    raw = cfg.raw
    T = raw["T"]
    agg = replicate(partial(_killer_one, raw), raw["replications"], workers)
    D = raw["adversary"].get("D", build_box(raw["box"]).linf_diameter / 2)
    rounds = [row for res in agg.results for row in res["rows"]]
    reg, cum, best = agg["avg_regret"], agg["learner_cum_loss"], agg["best_value"]
    summary = [(cfg.experiment_id, T, reg.mean, reg.ci, agg["stability_mean"].mean, None, None, None, None,
                cum.mean, best.mean)]
    outcome = Outcome({"rounds.csv": (ROUND_COLUMNS, rounds), "summary.csv": (SUMMARY_COLUMNS, summary)})
    outcome.seeds = [(f"replication={r}", res["seed"]) for r, res in enumerate(agg.results)]
    outcome.checks += [
        ("learner loss = DT/2", abs(cum.mean - D * T / 2) <= 1e-9, f"learner_cum_loss={cum.mean!r}"),
        ("best in hindsight <= DT/4", best.mean <= D * T / 4 + 1e-9, f"best_value={best.mean!r}"),
        ("avg regret >= D/4", reg.mean >= D / 4 - 1e-12, f"avg_regret={reg.mean!r}"),
    ]
    return outcome


def _stability_one(raw, j, eta, label, keep, r):
    return _game(raw, raw["learner"], raw["T"], Stream(raw["seed"]).child(j, r), r < keep, label, r,
                 frozen=True, eta=eta)


def run_stability(cfg: ExperimentConfig, workers: int = 1) -> Outcome:
    raw = cfg.raw
    n = raw["replications"]
    keep = raw.get("round_replications", 1)
    box = build_box(raw["box"])
    L = adversary_lipschitz(raw["adversary"])
    D = raw.get("diameter", _l1_diameter(box))
    outcome = Outcome()
    rounds, summary = [], []
    for j, eta in enumerate(raw["eta_list"]):
        label = f"{cfg.experiment_id}@eta={eta!r}"
        agg = replicate(partial(_stability_one, raw, j, float(eta), label, keep), n, workers)
        for res in agg.results:
            rounds.extend(res.get("rows", ()))
        s = agg["stability_mean"]
        bound = stability_bound(float(eta), L, box.d, D)
        summary.append((label, raw["T"], agg["avg_regret"].mean, agg["avg_regret"].ci, s.mean, bound,
                        None, None, None, agg["learner_cum_loss"].mean, agg["best_value"].mean))
        outcome.checks.append((f"eta={eta!r}: stability CI upper <= bound", s.upper <= bound,
                               f"mean={s.mean!r} ci={s.ci!r} bound={bound!r}"))
        outcome.seeds.extend((f"eta={eta!r}/replication={r}", res["seed"]) for r, res in enumerate(agg.results))
    outcome.tables["rounds.csv"] = (ROUND_COLUMNS, rounds)
    outcome.tables["summary.csv"] = (SUMMARY_COLUMNS, summary)
    return outcome


# -- probes -----------------------------------------------------------------------


def _btl_traces(raw: dict, variant_spec: dict, label: str, k: int):
    from .adversary import ObliviousAdversary, oblivious_hinge_sequence

    box = build_box(raw["box"])
    btl = raw["btl"]
    T, eta = btl["T"], btl["eta"]
    D = raw.get("D", box.linf_diameter / 2)
    grid = np.linspace(box.lo[0], box.hi[0], btl.get("grid_points", 201))
    failures = 0
    for r in range(btl["traces"]):
        s = Stream(raw["seed"]).child(100 + k, r)
        adv = ObliviousAdversary(oblivious_hinge_sequence(box, T, s.child(1), D))
        lc = build_learner({**variant_spec, "eta": eta, "perturbation_mode": "frozen", "oracle": raw["oracle"]},
                           1.0, box.d, T)
        trace = play(lc, adv, box, T, s)
        if not probe_btl(trace, grid, PWL1DOracle()).passed:
            failures += 1
    n = btl["traces"]
    return (label, n, n - failures, 0, failures)


def run_probe_suite(cfg: ExperimentConfig, workers: int = 1) -> Outcome:
    raw = cfg.raw
    box = build_box(raw["box"])
    oracle = build_oracle(raw["oracle"])
    exact = PWL1DOracle() if box.d == 1 else None
    D = raw.get("D", box.linf_diameter / 2)
    rows = []
    outcome = Outcome()
    for k, kind in enumerate(raw["suites"]):
        stream = Stream(cfg.seed).child(k)
        res = run_suite(kind, raw["n"], oracle, stream, box, D, exact_oracle=exact)
        rows.append((kind, res.n, res.passed, res.not_applicable, res.failed))
        outcome.checks.append((f"{kind}: no failures", res.ok, f"{res.passed}/{res.n} passed"))
        outcome.seeds.append((kind, str(stream)))
    if "btl" in raw:
        if box.d != 1:
            raise ValueError("the be-the-leader probe uses a 1-d comparator grid")
        variants = {"btl_ftpl": {"variant": "ftpl"}, "btl_oftpl": {"variant": "oftpl", "guess_strategy": "last_loss"}}
        for k, (label, spec) in enumerate(variants.items()):
            row = _btl_traces(raw, spec, label, k)
            rows.append(row)
            outcome.checks.append((f"{label}: no failures", row[4] == 0, f"{row[2]}/{row[1]} passed"))
    outcome.tables["probes.csv"] = (PROBE_COLUMNS, rows)
    return outcome


# -- saddle -------------------------------------------------------------------------


def build_payoff(raw: dict):
    spec = raw["payoff"]
    bx, by = build_box(raw["box_x"]), build_box(raw["box_y"])
    if spec["name"] == "bilinear":
        return BilinearPayoff(spec["A"], bx, by)
    if spec["name"] == "hinge":
        return HingePayoff(spec["D"], bx)
    return FunctionPayoff(lambda x, y: 0.0, 0.0, 0.0, bx, by, "zero")


def _saddle_one(raw, keep, r):
    M = build_payoff(raw)
    T = raw["T"]
    stream = Stream(raw["seed"]).child(0, r)
    cx = build_learner(raw["learner_x"], max(M.L_x, 1e-12), M.box_x.d, T, stream.child(3))
    cy = build_learner(raw["learner_y"], max(M.L_y, 1e-12), M.box_y.d, T, stream.child(4))
    res = solve_saddle(M, T, cx, cy, stream)
    ref = build_oracle(raw["reference_oracle"])
    gap = duality_gap(M, res.mix_x, res.mix_y, ref)
    rx, ry, band = self_play_regrets(M, res, ref)
    out = {"gap": gap.gap, "gap_alpha_band": gap.alpha_band, "regret_x": rx, "regret_y": ry, "seed": str(stream)}
    if r < keep:
        out["rounds"] = saddle_round_rows(res)
    return out


def run_saddle(cfg: ExperimentConfig, workers: int = 1) -> Outcome:
    raw = cfg.raw
    keep = raw.get("round_replications", 1)
    agg = replicate(partial(_saddle_one, raw, keep), raw["replications"], workers)
    outcome = Outcome()
    summary = []
    for r, res in enumerate(agg.results):
        summary.append((raw["T"], res["gap"], res["gap_alpha_band"], res["regret_x"], res["regret_y"]))
        slack = res["regret_x"] + res["regret_y"] + 2 * res["gap_alpha_band"] + 1e-9
        outcome.checks.append((f"replication {r}: gap <= regret_x + regret_y + 2 alpha", res["gap"] <= slack,
                               f"gap={res['gap']!r}"))
        if "max_gap" in raw:
            outcome.checks.append((f"replication {r}: gap <= {raw['max_gap']}", res["gap"] <= raw["max_gap"],
                                   f"gap={res['gap']!r}"))
        if "rounds" in res:
            header, rows = res["rounds"]
            outcome.tables[f"rounds_{r}.csv"] = (header, rows)
        outcome.seeds.append((f"replication={r}", res["seed"]))
    outcome.tables["summary.csv"] = (SADDLE_SUMMARY_COLUMNS, summary)
    return outcome


# -- oracle audit ---------------------------------------------------------------------


def quantized_instance(rng: np.random.Generator, box: Box, D: float, lattice: float, max_t: int = 20):
    """Random tent history whose kinks all lie on multiples of ``lattice`` from ``box.lo``."""
    history, sigma = random_instance(rng, box, D, max_t=max_t)
    snapped = []
    for f in history:
        a = box.lo + np.round((f.a - box.lo) / lattice) * lattice
        snapped.append(type(f)(box.clip(a), f.D))
    return snapped, sigma


def run_oracle_audit(cfg: ExperimentConfig, workers: int = 1) -> Outcome:
    raw = cfg.raw
    box = build_box(raw["box"])
    D = raw.get("D", box.linf_diameter / 2)
    n = raw["n"]
    fine_h = raw.get("fine_h", 1e-4)
    outcome = Outcome()
    rows = []
    for k, h in enumerate(raw["grid_h"]):
        stream = Stream(cfg.seed).child(k)
        rng = stream.generator()
        grid = build_oracle({"name": "grid", "h": h})
        passed, worst = 0, -math.inf
        for _ in range(n):
            history, sigma = random_instance(rng, box, D)
            q = OracleQuery(history, sigma, box)
            ref = pwl1d_minimize(q).value
            ans = grid.minimize(q)
            passed += contract_check(ans, q, ref)
            worst = max(worst, ans.value - ref - ans.guarantee.gamma(sigma))
        rows.append(("grid_contract", h, n, passed, worst))
        outcome.checks.append((f"grid h={h!r}: contract holds", passed == n, f"{passed}/{n}"))
        outcome.seeds.append((f"grid h={h!r}", str(stream)))
    # exact oracle against brute force on a lattice fine enough to contain every kink
    stream = Stream(cfg.seed).child(len(raw["grid_h"]))
    rng = stream.generator()
    lattice = raw.get("kink_lattice", 0.01)
    fine = GridLeader(box, fine_h, budget=max(10_000_000, int(box.edges.sum() / fine_h) + 2))
    passed, worst = 0, 0.0
    for _ in range(n):
        history, sigma = quantized_instance(rng, box, D, lattice)
        q = OracleQuery(history, sigma, box)
        exact = pwl1d_minimize(q).value
        vals = fine.points[:, 0] * 0.0
        for f in history:
            vals += f.values(fine.points)
        brute = float((vals - fine.points[:, 0] * sigma[0]).min())
        diff = abs(exact - brute)
        passed += diff <= 1e-9
        worst = max(worst, diff)
    rows.append(("pwl1d_vs_fine_grid", fine_h, n, passed, worst))
    outcome.checks.append((f"pwl1d matches h={fine_h!r} brute force", passed == n, f"{passed}/{n}"))
    outcome.seeds.append(("pwl1d_vs_fine_grid", str(stream)))
    outcome.tables["audit.csv"] = (AUDIT_COLUMNS, rows)
    return outcome


RUNNERS = {
    "regret-sweep": run_regret_sweep,
    "killer": run_killer,
    "stability": run_stability,
    "probe-suite": run_probe_suite,
    "saddle": run_saddle,
    "oracle-audit": run_oracle_audit,
}


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> Outcome:
    return RUNNERS[cfg.kind](cfg, workers)
