"""Exhaustive automaton-vs-semantics agreement on bounded lassos.

Enumerating every lasso separately costs |prefixes| x |cycles| runs.  Both
verdicts factor through small summaries instead: the automaton only needs the
configuration set reached after the prefix, and the semantics only needs the
truth vector at the start of the cycle.  So each prefix and each cycle is
processed once and the cross product is compared with numpy indexing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .automata import Ldba, advance_configs, configs_accept, translate_fragment
from .ltl import LassoTrace, LtlFormula, atoms, closure, cycle_truth, truth_step


@dataclass
class AgreementReport:
    formula: str
    n_aps: int
    n_lassos: int
    mismatches: list = field(default_factory=list)  # LassoTrace counterexamples

    @property
    def agree(self) -> bool:
        return not self.mismatches


def words(letters, max_len, min_len=0):
    for n in range(min_len, max_len + 1):
        yield from product(letters, repeat=n)


def lasso_agreement(f: LtlFormula, a: Ldba | None = None, max_prefix: int = 4, max_cycle: int = 3,
                    max_report: int = 5) -> AgreementReport:
    """Compare ``run_lasso`` and ``eval_lasso`` on every lasso over the
    formula's APs with |prefix| <= max_prefix and 1 <= |cycle| <= max_cycle."""
    a = a or translate_fragment(f)
    names = sorted({ap.name for ap in atoms(f)})
    letters = [frozenset(n for n, bit in zip(names, bits) if bit) for bits in product((0, 1), repeat=len(names))]
    prefixes = list(words(letters, max_prefix))
    cycles = list(words(letters, max_cycle, 1))
    index = {w: i for i, w in enumerate(prefixes)}

    # automaton side: configuration set after each prefix (built along the trie)
    start = frozenset({(a.initial, False)})
    conf = {(): start}
    for w in prefixes[1:]:
        conf[w] = advance_configs(a, conf[w[:-1]], w[-1])
    classes: dict = {}
    cls = np.array([classes.setdefault(conf[w], len(classes)) for w in prefixes])
    class_list = list(classes)

    # semantic side: truth vector at the cycle start, folded back over prefixes
    sub = closure(f)
    sem_by_vec: dict = {}
    vec_id = np.zeros(len(cycles), dtype=int)
    for ci, c in enumerate(cycles):
        v0 = cycle_truth(sub, c)[0]
        key = tuple(v0[g] for g in sub)
        if key not in sem_by_vec:
            vecs = {(): v0}
            for w in prefixes[1:]:
                vecs[w] = truth_step(sub, w[0], vecs[w[1:]])
            sem_by_vec[key] = np.array([vecs[w][f] for w in prefixes])
        vec_id[ci] = list(sem_by_vec).index(key)
    sem = list(sem_by_vec.values())

    rep = AgreementReport(str(f), len(names), len(prefixes) * len(cycles))
    for ci, c in enumerate(cycles):
        acc = np.array([configs_accept(a, k, c) for k in class_list])
        bad = np.nonzero(acc[cls] != sem[vec_id[ci]])[0]
        for pi in bad[: max_report - len(rep.mismatches)]:
            rep.mismatches.append(LassoTrace(prefixes[pi], c))
        if len(rep.mismatches) >= max_report:
            break
    return rep


def load_corpus(text: str) -> list[str]:
    """One formula per line; blank lines and ``#`` comments are skipped."""
    out = []
    for line in text.splitlines():
        s = line.strip()
        if s and not s.startswith("#"):
            out.append(s)
    return out
