"""The full verification suite behind ``predsynth verify``.

Every check draws its inputs from a generator derived from the master seed
and a fixed task number, recorded in the report, so any failing record can
be reproduced in isolation.  Reports are written as blocks of ``key = value``
lines headed by ``[section]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._rng import task_rng
from .consistency import (
    brute_force_equivalence,
    check_coefficient_invariance,
    check_consistency,
    dependent_mixture_prior,
    dirichlet_prior,
    random_pool,
    two_point_prior,
)
from .discrete import LinearPool, validity_check

EQUIVALENCE_SHAPES = [(K, n) for K in (1, 2, 3) for n in (1, 2, 3, 4)]
CONSISTENCY_SHAPES = [(1, 1), (2, 2), (3, 3)]
INVARIANCE_POOLS = 100

# task-number offsets keep every check on its own stream
_CONSISTENCY_TASK = 10_000
_INVARIANCE_TASK = 20_000
_VALIDITY_TASK = 30_000


@dataclass
class Record:
    section: str
    fields: dict
    passed: bool


@dataclass
class SuiteResult:
    seed: int
    trials: int
    draws: int
    records: list[Record] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failures(self) -> list[Record]:
        return [r for r in self.records if not r.passed]

    def to_text(self) -> str:
        lines = ["# predsynth verification report", f"seed = {self.seed}", f"trials = {self.trials}", f"draws = {self.draws}", ""]
        for r in self.records:
            lines.append(f"[{r.section}]")
            lines.extend(f"{k} = {_fmt(v)}" for k, v in r.fields.items())
            lines.append("")
        lines.append("[summary]")
        lines.append(f"checks = {len(self.records)}")
        fails = self.failures()
        lines.append(f"failed = {len(fails)}")
        for r in fails:
            lines.append(f"failure = {r.section} {_fmt(r.fields.get('case', ''))}")
        lines.append(f"status = {'pass' if self.passed else 'fail'}")
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (tuple, list)):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    return str(v)


def _record(section: str, case: str, rep, extra: dict | None = None) -> Record:
    fields = {"case": case, **(extra or {}), **rep.records()}
    return Record(section, fields, bool(rep.passed))


def run_suite(trials: int = 1000, seed: int = 0, draws: int = 100_000, inject_invalid: bool = False, invariance_pools: int = INVARIANCE_POOLS) -> SuiteResult:
    """Run equivalence, validity, consistency and invariance checks."""
    out = SuiteResult(seed, trials, draws)

    for K, n in EQUIVALENCE_SHAPES:
        rep = brute_force_equivalence(K, n, trials, seed)
        out.records.append(_record("equivalence", f"K={K} n={n}", rep))

    for i, (K, n) in enumerate(EQUIVALENCE_SHAPES):
        task = _VALIDITY_TASK + i
        pool = random_pool(K, n, task_rng(seed, task))
        out.records.append(_record("validity_check", f"K={K} n={n}", validity_check(pool), {"task": task}))
    if inject_invalid:
        bad = LinearPool(0.5, [[1.2, 0.0]], [[0.5, 0.5]], check=False)
        out.records.append(_record("validity_check", "injected K=1 n=1 p=0.5 lambda=(1.2, 0)", validity_check(bad)))

    for i, (K, n) in enumerate(CONSISTENCY_SHAPES):
        task = _CONSISTENCY_TASK + i
        pool = random_pool(K, n, task_rng(seed, task))
        families = [
            two_point_prior(pool.mu),
            dependent_mixture_prior(pool.mu, base="two-point"),
            dirichlet_prior(pool.mu),
            dependent_mixture_prior(pool.mu, base="dirichlet"),
        ]
        for j, fam in enumerate(families):
            mc_task = task * 10 + j
            rep = check_consistency(pool, fam, draws, int(task_rng(seed, mc_task).integers(2**31)))
            attempts = 1
            if not rep.passed and not rep.exact:
                # one documented rerun on a fresh stream for Monte-Carlo checks
                rep = check_consistency(pool, fam, draws, int(task_rng(seed, mc_task + 5).integers(2**31)))
                attempts = 2
            out.records.append(_record("consistency", f"K={K} n={n} {fam.kind}", rep, {"task": task, "attempts": attempts}))

    for K in (2, 3):
        worst, worst_case, ok = 0.0, "", True
        for t in range(invariance_pools):
            task = _INVARIANCE_TASK + 1000 * K + t
            rng = task_rng(seed, task)
            n = int(rng.integers(1, 5))
            pool = random_pool(K, n, rng)
            for d in range(K):
                rep = check_coefficient_invariance(pool, d)
                ok &= rep.passed
                if rep.max_deviation >= worst:
                    worst, worst_case = rep.max_deviation, f"task={task} n={n} drop={d}"
        out.records.append(
            Record(
                "coefficient_invariance",
                {"case": f"K={K}", "pools": invariance_pools, "max_deviation": worst, "worst": worst_case, "status": "pass" if ok else "fail"},
                ok,
            )
        )
    return out
