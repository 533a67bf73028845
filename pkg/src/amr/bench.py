"""Fixture access, the AFS1 extensions and the timing harness."""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass
from importlib import resources

from .ctl import parse_ctl
from .models import KripkeStructure

AFS1_PROPERTY = "AG (!p | q)"
AFS1_TARGET = "s11"

# Extension k widens the domain of k variables.  A variable's value is
# visible in the flat model only as which member of a twin pair of states
# is taken, so a wider domain means cloning one twin.  Four clones per
# level give 30, 34 and 38 states; see fixtures/README.md.
EXTENSION_CLONES = (
    ("s12", "s18", "s20", "s26"),
    ("s4", "s2", "s8", "s10"),
    ("s14", "s24", "s16", "s17"),
)


def fixture_path(name: str):
    return resources.files("amr") / "fixtures" / name


def load_fixture(name: str):
    from .formats import parse_model
    return parse_model(fixture_path(name).read_text(encoding="utf-8"))


def clone_state(m: KripkeStructure, s: str, new: str) -> KripkeStructure:
    """Add ``new`` as a copy of ``s``: same label, same successors, same
    predecessors, and initial iff ``s`` is.  A self-loop on ``s`` becomes a
    self-loop on the copy."""
    trans = set(m.trans)
    for a, b in m.trans:
        if a == s and b == s:
            trans.add((new, new))
        elif a == s:
            trans.add((new, b))
        elif b == s:
            trans.add((a, new))
    labels = dict(m.labels)
    labels[new] = m.labels[s]
    initial = set(m.initial) | ({new} if s in m.initial else set())
    return KripkeStructure(m.props, m.states + (new,), initial, trans, labels)


def afs1_extension(m: KripkeStructure, level: int) -> KripkeStructure:
    n = len(m.states)
    for group in EXTENSION_CLONES[:level]:
        for s in group:
            n += 1
            m = clone_state(m, s, f"s{n}")
    return m


@dataclass
class BenchRow:
    model: str
    states: int
    baseline_time: float
    amr_time: float
    ratio: float
    baseline_d: int | None
    amr_d: int | None

    def as_dict(self):
        return {"model": self.model, "states": self.states,
                "baseline_time_s": round(self.baseline_time, 6), "amr_time_s": round(self.amr_time, 6),
                "ratio": round(self.ratio, 3), "baseline_d": self.baseline_d, "amr_d": self.amr_d}


def _timed(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def bench_models(extensions: int = 3):
    base = load_fixture("afs1.ks")
    out = [("AFS1", base)]
    for level in range(1, extensions + 1):
        out.append((f"AFS1-ext{level}", load_fixture(f"afs1_ext{level}.ks")))
    return out


def run_bench(extensions: int = 3, repeat: int = 5) -> list[BenchRow]:
    from .repair import run_pipeline
    phi = parse_ctl(AFS1_PROPERTY)
    rows = []
    for name, m in bench_models(extensions):
        tb, base = _timed(lambda: run_pipeline(m, AFS1_TARGET, phi, baseline=True), repeat)
        ta, amr = _timed(lambda: run_pipeline(m, AFS1_TARGET, phi), repeat)
        rows.append(BenchRow(name, len(m.states), tb, ta, tb / ta if ta > 0 else float("inf"),
                             base.best_distance, amr.best_distance))
    return rows


def rows_to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    fields = ["model", "states", "baseline_time_s", "amr_time_s", "ratio", "baseline_d", "amr_d"]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r.as_dict())
    return buf.getvalue()
