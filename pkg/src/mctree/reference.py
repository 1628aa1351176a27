"""Reference values and a harness that recomputes and checks them.

Each row names a job (a hashable description of a computation), the field of
the job's result to compare, the expected value and an acceptance window.
Jobs are cached, so rows sharing a computation run it once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from mctree.baselines import black_scholes, crr_price, jr_price, lsm_american, mc_gbm_european
from mctree.cva import DefaultModel, mc_tree_cva
from mctree.pricing import RunConfig, mc_tree_american, mc_tree_european_many, put_call_parity_report
from mctree.tree import MarketParams

BASE = MarketParams(s0=100.0, strike=95.0, maturity=1.0, rate=0.03, sigma=0.2)
CVA_MARKET = MarketParams(s0=80.0, strike=100.0, maturity=1.0, rate=0.03, sigma=0.2)
CVA_DEFAULT = DefaultModel(intensity=0.03, recovery=0.4)
TRUE_DEPTH = 5000
AMERICAN_LATTICE_DEPTH = 100
MSE_DEPTHS = range(1, 101)
MSE_DRAWS = 2000
TABLES = ("1", "2", "3", "4", "5", "6", "7", "8", "9", "mse")


@dataclass(frozen=True)
class ReferenceRow:
    table: str
    label: str
    job: tuple
    field: str
    value: float
    lo: float | None
    hi: float | None
    heavy: bool = False

    @property
    def checkable(self) -> bool:
        return self.lo is not None


def _tol(table, label, job, fld, value, tol, heavy=False) -> ReferenceRow:
    return ReferenceRow(table, label, job, fld, value, value - tol, value + tol, heavy)


def _win(table, label, job, fld, value, lo, hi, heavy=False) -> ReferenceRow:
    return ReferenceRow(table, label, job, fld, value, lo, hi, heavy)


def _rel(table, label, job, fld, value, frac) -> ReferenceRow:
    return _tol(table, label, job, fld, value, frac * abs(value))


def _european_rows(table: str, kind: str, table_values: dict) -> list[ReferenceRow]:
    rows = []
    for s0, entries in table_values.items():
        for (method, n), (mean, sd) in entries.items():
            if method == "MC":
                job = ("mc", s0, kind, 100_000)
                rows.append(_tol(table, f"MC {kind} S0={s0:g} mean", job, "mean", mean, 0.2))
                rows.append(_tol(table, f"MC {kind} S0={s0:g} sd", job, "sd", sd, 0.5))
                continue
            if method == "AS":
                rows.append(_tol(table, f"AS {kind} S0={s0:g}", ("bs", s0, kind), "value", mean, 5e-5))
                continue
            job = ("mctree", method, n, 100_000)
            key = f"{kind}{s0:g}"
            mean_tol = 0.002 if method == "Corr" else 0.005
            rows.append(_tol(table, f"{method} {kind} S0={s0:g} N={n} mean", job, key + ".mean", mean, mean_tol))
            rows.append(_rel(table, f"{method} {kind} S0={s0:g} N={n} sd", job, key + ".sd", sd, 0.25))
    return rows


CALL_TABLE = {
    100.0: {("Corr", 50): (12.1798, 0.025), ("Bias", 50): (12.1905, 0.0279),
            ("Corr", 100): (12.1797, 0.0123), ("Bias", 100): (12.1851, 0.0155),
            ("MC", 0): (12.1867, 15.6215), ("AS", 0): (12.1797, None)},
    90.0: {("Corr", 50): (6.2125, 0.071), ("Bias", 50): (6.2230, 0.0596),
           ("Corr", 100): (6.2125, 0.0463), ("Bias", 100): (6.2177, 0.0401),
           ("MC", 0): (6.2143, 11.1305), ("AS", 0): (6.2125, None)},
}
PUT_TABLE = {
    100.0: {("Corr", 50): (4.3720, 0.0324), ("Bias", 50): (4.3828, 0.0279),
            ("Corr", 100): (4.3720, 0.0185), ("Bias", 100): (4.3774, 0.0155),
            ("MC", 0): (4.4107, 7.6584), ("AS", 0): (4.3720, None)},
    90.0: {("Corr", 50): (8.4048, 0.0503), ("Bias", 50): (8.4153, 0.0596),
           ("Corr", 100): (8.4048, 0.0345), ("Bias", 100): (8.4101, 0.0401),
           ("MC", 0): (8.4352, 10.1748), ("AS", 0): (8.4048, None)},
}
LATTICE_CALLS = {(100.0, "CRR", 50): 12.1733, (100.0, "CRR", 100): 12.1923,
                 (100.0, "JR", 50): 12.1677, (100.0, "JR", 100): 12.1984,
                 (90.0, "CRR", 50): 6.1912, (90.0, "CRR", 100): 6.2283,
                 (90.0, "JR", 50): 6.2281, (90.0, "JR", 100): 6.2084}
LATTICE_PUTS = {(100.0, "CRR", 50): 4.3657, (100.0, "CRR", 100): 4.3846,
                (100.0, "JR", 50): 4.3600, (100.0, "JR", 100): 4.3907,
                (90.0, "CRR", 50): 8.3835, (90.0, "CRR", 100): 8.4206,
                (90.0, "JR", 50): 8.4204, (90.0, "JR", 100): 8.4008}
AMERICAN_PRICES = {95.0: (6.4140, 6.3966, 6.4141, 6.4058),
                   97.0: (5.6058, 5.6148, 5.6080, 5.5973),
                   100.0: (4.5484, 4.5511, 4.5583, 4.5415),
                   102.0: (3.9409, 3.9433, 3.9240, 3.9338),
                   104.0: (3.4007, 3.4034, 3.4111, 3.3960)}
AMERICAN_ERRORS = {95.0: (0.0081, 0.0093, 0.0083), 97.0: (0.0084, 0.0175, 0.0107),
                   100.0: (0.0080, 0.0096, 0.0168), 102.0: (0.0070, 0.0095, 0.0098),
                   104.0: (0.0047, 0.0073, 0.0150)}
CVA_TABLE = [(50, 100, 0.2447), (75, 150, 0.3013), (100, 250, 0.3104), (250, 700, 0.3282),
             (250, 10_000, 0.3392), (250, 100_000, 0.3440), (2000, 700, 0.3414), (4000, 700, 0.3414)]
MSE_TABLE = {"MC-Tree": 0.00015354, "CRR": 0.001074532, "JR": 0.001015309}


def _lattice_rows(table: str, kind: str, table_values: dict) -> list[ReferenceRow]:
    return [_tol(table, f"{model} {kind} S0={s0:g} N={n}", (model.lower(), s0, kind, n, "european"),
                 "value", v, 1e-4)
            for (s0, model, n), v in table_values.items()]


def _american_rows() -> dict[str, list[ReferenceRow]]:
    amer = ("amer", 100.0, 50, 2000)
    t5 = [_tol("5", "MC-Tree American put mean", amer, "mean", 4.5483, 0.03),
          _win("5", "MC-Tree American put sd", amer, "sd", 0.0319, 0.01, 0.08),
          _tol("5", "LSM M=2000 mean", ("lsm", 100.0, 2000, 50), "mean", 4.5782, 0.5),
          _win("5", "LSM M=2000 per-path sd", ("lsm", 100.0, 2000, 50), "sd", 7.1828, 5.0, 10.0)]
    t6 = [_tol("6", "MC-Tree American put mean", amer, "mean", 4.5483, 0.03),
          _win("6", "MC-Tree American put sd", amer, "sd", 0.0319, 0.01, 0.08),
          _win("6", "MC-Tree error vs true", amer, "error", 0.0068, 0.0, 0.03),
          _tol("6", "LSM M=120000 mean", ("lsm", 100.0, 120_000, 50), "mean", 4.5274, 0.05),
          # the stored figure is not a per-path sd and its definition is not recoverable
          ReferenceRow("6", "LSM M=120000 sd", ("lsm", 100.0, 120_000, 50), "sd", 0.8465, None, None),
          _win("6", "LSM M=120000 error vs true", ("lsm", 100.0, 120_000, 50), "error", 0.0141, 0.0, 0.05)]
    t7, t8 = [], []
    for s0, (mct, crr, jr, true) in AMERICAN_PRICES.items():
        t7.append(_tol("7", f"MC-Tree S0={s0:g}", ("amer", s0, 50, 2000), "mean", mct, 0.03))
        t7.append(_tol("7", f"CRR S0={s0:g}", ("crr", s0, "put", AMERICAN_LATTICE_DEPTH, "american"), "value", crr, 0.005))
        t7.append(_tol("7", f"JR S0={s0:g}", ("jr", s0, "put", AMERICAN_LATTICE_DEPTH, "american"), "value", jr, 0.005))
        t7.append(_tol("7", f"true S0={s0:g}", ("true", s0), "value", true, 0.002))
    for s0, (mct, crr, jr) in AMERICAN_ERRORS.items():
        t8.append(_win("8", f"MC-Tree error S0={s0:g}", ("amer", s0, 50, 2000), "error", mct, 0.0, 0.03))
        t8.append(_tol("8", f"CRR error S0={s0:g}", ("crr", s0, "put", AMERICAN_LATTICE_DEPTH, "american"), "error", crr, 0.005))
        t8.append(_tol("8", f"JR error S0={s0:g}", ("jr", s0, "put", AMERICAN_LATTICE_DEPTH, "american"), "error", jr, 0.005))
    return {"5": t5, "6": t6, "7": t7, "8": t8}


def _cva_rows() -> list[ReferenceRow]:
    rows = []
    for n, m, v in CVA_TABLE:
        if (n, m) == (250, 10_000):
            rows.append(_win("9", f"CVA N={n} M={m}", ("cva", n, m), "mean", v, 0.329, 0.349))
        else:
            rows.append(_tol("9", f"CVA N={n} M={m}", ("cva", n, m), "mean", v, 0.02, heavy=n >= 2000 or m >= 100_000))
    return rows


def _mse_rows() -> list[ReferenceRow]:
    rows = [_win("mse", "MSE MC-Tree", ("mse", "MC-Tree"), "value", MSE_TABLE["MC-Tree"], 0.0, 0.001)]
    rows += [_rel("mse", f"MSE {m}", ("mse", m), "value", MSE_TABLE[m], 0.5) for m in ("CRR", "JR")]
    rows += [_win("mse", f"MSE MC-Tree < {m}", ("mse-order", m), "value", 1.0, 1.0, 1.0) for m in ("CRR", "JR")]
    return rows


def reference_rows(table: str | None = None) -> list[ReferenceRow]:
    groups = {
        "1": _european_rows("1", "call", CALL_TABLE),
        "2": _european_rows("2", "put", PUT_TABLE),
        "3": _lattice_rows("3", "call", LATTICE_CALLS),
        "4": _lattice_rows("4", "put", LATTICE_PUTS),
        **_american_rows(),
        "9": _cva_rows(),
        "mse": _mse_rows(),
    }
    if table is None or table == "all":
        return [r for t in TABLES for r in groups[t]]
    if table not in groups:
        raise KeyError(table)
    return groups[table]


@dataclass
class Runner:
    """Evaluates jobs with a shared seed; ``draws`` overrides every MC-Tree draw count."""

    seed: int = 42
    workers: int = 1
    mix: int = 9
    draws: int | None = None
    cache: dict = field(default_factory=dict)

    def _m(self, m: int) -> int:
        return self.draws if self.draws is not None else m

    def run(self, job: tuple) -> dict:
        if job not in self.cache:
            self.cache[job] = getattr(self, "_job_" + job[0].replace("-", "_"))(*job[1:])
        return self.cache[job]

    def value(self, row: ReferenceRow) -> float:
        return self.run(row.job)[row.field]

    def _job_bs(self, s0, kind):
        return {"value": black_scholes(BASE.replace(s0=s0), kind)}

    def _lattice(self, fn, s0, kind, n, style):
        market = BASE.replace(s0=s0)
        v = fn(market, kind, n, style)
        out = {"value": v}
        if style == "american":
            out["error"] = abs(v - self.run(("true", s0))["value"])
        return out

    def _job_crr(self, s0, kind, n, style):
        return self._lattice(crr_price, s0, kind, n, style)

    def _job_jr(self, s0, kind, n, style):
        return self._lattice(jr_price, s0, kind, n, style)

    def _job_true(self, s0):
        return {"value": crr_price(BASE.replace(s0=s0), "put", TRUE_DEPTH, "american")}

    def _job_mctree(self, method, n, m):
        instruments = [(BASE.replace(s0=s), k) for s in (100.0, 90.0) for k in ("call", "put")]
        cfg = RunConfig(depth=n, draws=self._m(m), mix=self.mix, seed=self.seed, method=method)
        out = {}
        for (market, kind), res in zip(instruments, mc_tree_european_many(instruments, cfg, self.workers)):
            out[f"{kind}{market.s0:g}.mean"] = res.mean
            out[f"{kind}{market.s0:g}.sd"] = res.sd
        return out

    def _job_mc(self, s0, kind, m):
        q = mc_gbm_european(BASE.replace(s0=s0), kind, m, self.seed, self.workers)
        return {"mean": q.price, "sd": q.sd}

    def _job_amer(self, s0, n, m):
        cfg = RunConfig(depth=n, draws=self._m(m), mix=self.mix, seed=self.seed)
        res = mc_tree_american(BASE.replace(s0=s0), "put", cfg, self.workers)
        return {"mean": res.mean, "sd": res.sd, "error": abs(res.mean - self.run(("true", s0))["value"])}

    def _job_lsm(self, s0, m, steps):
        q = lsm_american(BASE.replace(s0=s0), "put", m, steps, self.seed)
        return {"mean": q.price, "sd": q.sd, "error": abs(q.price - self.run(("true", s0))["value"])}

    def _job_cva(self, n, m):
        cfg = RunConfig(depth=n, draws=self._m(m), mix=self.mix, seed=self.seed)
        res = mc_tree_cva(CVA_MARKET, cfg, CVA_DEFAULT, self.workers)
        return {"mean": res.mean, "sd": res.sd}

    def price_curve(self, model: str, depths: Iterable[int] = MSE_DEPTHS, kind: str = "call") -> np.ndarray:
        """Price against depth for the S0=100 instrument, one entry per depth."""
        if model == "CRR":
            return np.array([crr_price(BASE, kind, n) for n in depths])
        if model == "JR":
            return np.array([jr_price(BASE, kind, n) for n in depths])
        method = "Corr" if model == "MC-Tree" else model
        out = []
        for n in depths:
            cfg = RunConfig(depth=n, draws=self._m(MSE_DRAWS), mix=self.mix, seed=self.seed, method=method)
            out.append(mc_tree_european_many([(BASE, kind)], cfg, self.workers)[0].mean)
        return np.array(out)

    def _job_mse(self, model):
        err = self.price_curve(model) - black_scholes(BASE, "call")
        return {"value": math.fsum((err * err).tolist()) / err.size}

    def _job_mse_order(self, model):
        ours = self.run(("mse", "MC-Tree"))["value"]
        return {"value": 1.0 if ours < self.run(("mse", model))["value"] else 0.0}

    def parity_curve(self, depths: Iterable[int] = (10, 25, 50, 100), draws: int = 20_000):
        cfg = RunConfig(depth=1, draws=self._m(draws), mix=self.mix, seed=self.seed)
        return put_call_parity_report(BASE, cfg, tuple(depths), self.workers)


@dataclass(frozen=True)
class RowOutcome:
    row: ReferenceRow
    computed: float | None
    status: str

    def as_dict(self) -> dict:
        return {"table": self.row.table, "label": self.row.label, "expected": self.row.value,
                "computed": self.computed, "lo": self.row.lo, "hi": self.row.hi, "status": self.status}


def check_rows(rows: Iterable[ReferenceRow], runner: Runner, include_heavy: bool = False) -> list[RowOutcome]:
    out = []
    for row in rows:
        if row.heavy and not include_heavy:
            out.append(RowOutcome(row, None, "SKIP"))
            continue
        v = runner.value(row)
        if not row.checkable:
            out.append(RowOutcome(row, v, "INFO"))
            continue
        out.append(RowOutcome(row, v, "PASS" if row.lo <= v <= row.hi else "FAIL"))
    return out
