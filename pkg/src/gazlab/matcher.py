"""Exhaustive multi-pattern lexeme matching (Aho-Corasick over characters).

Every occurrence of every lexeme is reported, overlapping and nested ones
included. Masking is a query-time filter so one automaton serves every
masked evaluation.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import AbstractSet, Sequence

from .gazetteer import Gazetteer


@dataclass(frozen=True, order=True)
class MatchSpan:
    start: int
    end: int
    lexeme_id: int
    surface: str


class LexemeMatcher:
    """Aho-Corasick automaton over a gazetteer's lexemes.

    States are integers; ``_goto[s]`` maps a character to the next state,
    ``_fail[s]`` is the failure link and ``_out[s]`` lists the ids of all
    lexemes that end at ``s`` (its own plus those reachable via failure links).
    """

    def __init__(self, gazetteer: Gazetteer) -> None:
        if not gazetteer.lexemes:
            raise ValueError("cannot build a matcher from an empty gazetteer")
        self.gazetteer = gazetteer
        self.lexemes: tuple[str, ...] = gazetteer.lexemes
        self.lexeme_ids = {lex: i for i, lex in enumerate(self.lexemes)}
        self._goto: list[dict[str, int]] = [{}]
        self._out: list[tuple[int, ...]] = [()]
        for lid, lex in enumerate(self.lexemes):
            self._insert(lex, lid)
        self._fail = [0] * len(self._goto)
        self._link()

    def _insert(self, lexeme: str, lid: int) -> None:
        state = 0
        for ch in lexeme:
            nxt = self._goto[state].get(ch)
            if nxt is None:
                nxt = len(self._goto)
                self._goto[state][ch] = nxt
                self._goto.append({})
                self._out.append(())
            state = nxt
        self._out[state] = self._out[state] + (lid,)

    def _link(self) -> None:
        queue: deque[int] = deque(self._goto[0].values())
        while queue:
            state = queue.popleft()
            for ch, child in self._goto[state].items():
                queue.append(child)
                fb = self._fail[state]
                while fb and ch not in self._goto[fb]:
                    fb = self._fail[fb]
                target = self._goto[fb].get(ch, 0)
                self._fail[child] = target if target != child else 0
                self._out[child] = self._out[child] + self._out[self._fail[child]]

    def __len__(self) -> int:
        return len(self.lexemes)

    def match_all(
        self, chars: Sequence[str] | str, mask: AbstractSet[str] | None = None
    ) -> list[MatchSpan]:
        """All lexeme occurrences in ``chars``, sorted by (start, end, lexeme_id).

        Lexemes whose string is in ``mask`` are dropped from the result.
        """
        goto, fail, out, lexemes = self._goto, self._fail, self._out, self.lexemes
        text = "".join(chars)
        spans: list[MatchSpan] = []
        state = 0
        for i, ch in enumerate(text):
            while state and ch not in goto[state]:
                state = fail[state]
            state = goto[state].get(ch, 0)
            for lid in out[state]:
                lex = lexemes[lid]
                if mask and lex in mask:
                    continue
                spans.append(MatchSpan(i + 1 - len(lex), i + 1, lid, lex))
        spans.sort()
        return spans

    def matched_lexemes(self, chars: Sequence[str] | str) -> set[str]:
        return {m.surface for m in self.match_all(chars)}


def build_matcher(g: Gazetteer) -> LexemeMatcher:
    return LexemeMatcher(g)


def match_all(
    matcher: LexemeMatcher, chars: Sequence[str] | str, mask: AbstractSet[str] | None = None
) -> list[MatchSpan]:
    return matcher.match_all(chars, mask)

