"""
Constraint coverage tracking for constrained search.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CoverageState:
    targets: tuple  # target token ids of each constraint
    progress: tuple  # leading tokens of each constraint matched contiguously so far
    met: tuple

    @classmethod
    def start(cls, targets):
        targets = tuple(tuple(t) for t in targets)
        return cls(targets, (0,) * len(targets), (False,) * len(targets))

    @property
    def met_token_count(self):
        return sum(len(t) if met else p for t, p, met in zip(self.targets, self.progress, self.met))

    @property
    def total_tokens(self):
        return sum(len(t) for t in self.targets)

    @property
    def all_met(self):
        return all(self.met)

    def forced_tokens(self, mid_word=False):
        """Next token of every unmet constraint, continuing its current match or starting it.
        No constraint starts in the middle of a word."""
        tokens = (t[p] for t, p, met in zip(self.targets, self.progress, self.met)
                  if not met and not (mid_word and p == 0))
        return tuple(dict.fromkeys(tokens))


def update_coverage(state: CoverageState, token, mid_word=False) -> CoverageState:
    """`mid_word`: the previous token was a word-internal piece, so no match may start here."""
    progress = []
    met = []
    for target, done, already in zip(state.targets, state.progress, state.met):
        if already:
            progress.append(done)
            met.append(True)
            continue
        if target[done] == token and (done or not mid_word):
            done += 1
        else:
            done = 1 if target[0] == token and not mid_word else 0
        progress.append(done)
        met.append(done == len(target))
    return CoverageState(state.targets, tuple(progress), tuple(met))
