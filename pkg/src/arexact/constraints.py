"""Sequence constraints and their compiled automaton form.

Every constraint family compiles to a :class:`ConstraintAutomaton`: a
deterministic acceptor over token indices, optionally paired with additive
integer token weights and an exact weight target, and optionally with a
hard cap on sequence length. A complete sequence is feasible when the run
over all of its tokens, eos included, never leaves the transition table,
finishes in an accepting state, spends exactly the target weight (when
weighted) and respects the length cap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from .armodel import MarkovModel, Seq, Vocabulary, is_complete


class ConstraintError(ValueError):
    """Malformed or infeasible-by-construction constraint."""


# run configuration: (automaton state, weight spent, tokens consumed)
Config = tuple[int, int, int]


@dataclass(frozen=True, eq=False)
class ConstraintAutomaton:
    num_tokens: int
    eos: int
    num_states: int
    initial: int
    delta: tuple[dict[int, int], ...]
    accepting: frozenset[int]
    weights: tuple[int, ...] | None = None
    target: int | None = None
    max_length: int | None = None
    name: str = field(default="dfa", compare=False)

    def __post_init__(self):
        if len(self.delta) != self.num_states:
            raise ConstraintError("one transition map per state required")
        if not 0 <= self.initial < self.num_states:
            raise ConstraintError("initial state out of range")
        for s, arcs in enumerate(self.delta):
            for tok, nxt in arcs.items():
                if not 0 <= tok < self.num_tokens or not 0 <= nxt < self.num_states:
                    raise ConstraintError(f"bad arc from state {s}")
        if any(not 0 <= s < self.num_states for s in self.accepting):
            raise ConstraintError("accepting state out of range")
        if (self.weights is None) != (self.target is None):
            raise ConstraintError("weights and target must be given together")
        if self.weights is not None:
            if len(self.weights) != self.num_tokens or min(self.weights) < 0:
                raise ConstraintError("weights must be nonnegative, one per token")
            if self.target < 0:
                raise ConstraintError("target must be nonnegative")
        if self.max_length is not None and self.max_length < 1:
            raise ConstraintError("max_length must be >= 1")

    @property
    def has_budget(self) -> bool:
        return self.weights is not None

    def start(self) -> Config:
        return (self.initial, 0, 0)

    def advance(self, config: Config, tok: int) -> Config | None:
        """One-step admissibility: the next configuration, or None if ``tok`` is rejected.

        Rejection uses only information available at this step: a missing
        arc, weight overshoot, the length cap, and for eos the final
        acceptance test.
        """
        state, spent, length = config
        nxt = self.delta[state].get(tok)
        if nxt is None:
            return None
        length += 1
        if self.max_length is not None and length > self.max_length:
            return None
        if self.weights is not None:
            spent += self.weights[tok]
            if spent > self.target:
                return None
        if tok == self.eos:
            if nxt not in self.accepting:
                return None
            if self.weights is not None and spent != self.target:
                return None
        return (nxt, spent, length)

    def implied_horizon(self) -> int | None:
        """Longest feasible length when the constraint itself bounds it."""
        bounds = []
        if self.max_length is not None:
            bounds.append(self.max_length)
        if self.weights is not None:
            non_eos = [w for t, w in enumerate(self.weights) if t != self.eos]
            if non_eos and min(non_eos) >= 1:
                bounds.append(self.target // min(non_eos) + 1)
        acyclic = self._acyclic_bound()
        if acyclic is not None:
            bounds.append(acyclic)
        return max(1, min(bounds)) if bounds else None

    def _acyclic_bound(self) -> int | None:
        # longest path over non-eos arcs plus the final eos, if the arc graph is acyclic
        depth: dict[int, int] = {}
        on_stack: set[int] = set()

        def longest(s: int) -> int | None:
            if s in depth:
                return depth[s]
            if s in on_stack:
                return None
            on_stack.add(s)
            best = 1 if self.eos in self.delta[s] else 0
            for tok, nxt in self.delta[s].items():
                if tok == self.eos:
                    continue
                sub = longest(nxt)
                if sub is None:
                    return None
                if sub:
                    best = max(best, sub + 1)
            on_stack.discard(s)
            depth[s] = best
            return best

        return longest(self.initial) if self.num_states <= 500 else None


def accepts(automaton: ConstraintAutomaton, x: Sequence[int]) -> bool:
    if not x or x[-1] != automaton.eos or automaton.eos in x[:-1]:
        return False
    config = automaton.start()
    for tok in x:
        if not 0 <= tok < automaton.num_tokens:
            return False
        config = automaton.advance(config, tok)
        if config is None:
            return False
    return True


# ---------------------------------------------------------------- families


@dataclass(frozen=True)
class UnaryConstraint:
    allowed_sets: tuple[frozenset[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "allowed_sets", tuple(frozenset(s) for s in self.allowed_sets))
        if not self.allowed_sets:
            raise ConstraintError("unary constraint needs at least one position")
        if any(not s for s in self.allowed_sets):
            raise ConstraintError("every allowed set must be nonempty")

    @property
    def length(self) -> int:
        return len(self.allowed_sets)


@dataclass(frozen=True)
class FixedLengthConstraint:
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise ConstraintError("length must be >= 1")


@dataclass(frozen=True)
class MetricalConstraint:
    weights: tuple[int, ...]
    target: int

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(self.weights))
        if any(w < 0 for w in self.weights):
            raise ConstraintError("weights must be nonnegative")
        if self.target < 0:
            raise ConstraintError("target must be nonnegative")


@dataclass(frozen=True)
class InpaintingSpec:
    """Prefix ``u``, blank, suffix ``v``.

    If ``v`` does not end in eos, eos is implied right after it. With
    ``total_length`` set the whole sequence (eos included) has exactly that
    many tokens; otherwise the length is free, optionally capped by
    ``max_length``.
    """

    prefix: tuple[int, ...]
    suffix: tuple[int, ...]
    total_length: int | None = None
    max_length: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "suffix", tuple(self.suffix))
        if self.total_length is not None and self.max_length is not None:
            raise ConstraintError("give total_length or max_length, not both")


Constraint = Union[UnaryConstraint, FixedLengthConstraint, MetricalConstraint, InpaintingSpec, ConstraintAutomaton]


def compile_constraint(constraint: Constraint, vocab: Vocabulary) -> ConstraintAutomaton:
    n, eos = len(vocab), vocab.eos
    non_eos = vocab.non_eos

    if isinstance(constraint, ConstraintAutomaton):
        if constraint.num_tokens != n or constraint.eos != eos:
            raise ConstraintError("automaton alphabet does not match the vocabulary")
        return constraint

    if isinstance(constraint, FixedLengthConstraint):
        L = constraint.length
        delta = [dict.fromkeys(non_eos, i + 1) for i in range(L - 1)]
        delta += [{eos: L}, {}]
        return ConstraintAutomaton(n, eos, L + 1, 0, tuple(delta), frozenset({L}), name=f"fixedlen({L})")

    if isinstance(constraint, UnaryConstraint):
        sets = constraint.allowed_sets
        for s in sets:
            if any(not 0 <= t < n for t in s):
                raise ConstraintError("allowed set mentions a token outside the vocabulary")
        k = len(sets)
        delta = [{t: i + 1 for t in sorted(sets[i]) if t != eos} for i in range(k - 1)]
        delta += [{eos: k} if eos in sets[-1] else {}, {}]
        return ConstraintAutomaton(n, eos, k + 1, 0, tuple(delta), frozenset({k}), name=f"unary({k})")

    if isinstance(constraint, MetricalConstraint):
        if len(constraint.weights) != n:
            raise ConstraintError(f"need {n} weights, got {len(constraint.weights)}")
        # one state, accepting; the run only ends after eos, the budget does the work
        delta = ({t: 0 for t in range(n)},)
        return ConstraintAutomaton(
            n, eos, 1, 0, delta, frozenset({0}),
            weights=constraint.weights, target=constraint.target,
            name=f"metrical({constraint.target})",
        )

    if isinstance(constraint, InpaintingSpec):
        return _compile_inpaint(constraint, vocab)

    raise TypeError(f"cannot compile {type(constraint).__name__}")


def _compile_inpaint(spec: InpaintingSpec, vocab: Vocabulary) -> ConstraintAutomaton:
    n, eos = len(vocab), vocab.eos
    u, v = spec.prefix, spec.suffix
    if any(not 0 <= t < n for t in u + v):
        raise ConstraintError("inpainting prefix/suffix mentions an unknown token")
    if eos in u:
        raise ConstraintError("inpainting prefix may not contain eos")
    if eos in v[:-1]:
        raise ConstraintError("eos may appear in the suffix only as its last token")
    body = v[:-1] if v and v[-1] == eos else v
    tail = body + (eos,)
    need = len(u) + len(tail)
    cap = spec.total_length if spec.total_length is not None else spec.max_length
    if cap is not None and need > cap:
        raise ConstraintError(f"prefix and suffix need {need} tokens, more than the length {cap}")
    name = f"inpaint({vocab.render(u)}|{vocab.render(v)}|{cap})"

    if spec.total_length is not None:
        L = spec.total_length
        start_tail = L - len(tail)
        delta = []
        for i in range(L):
            if i < len(u):
                allowed = [u[i]]
            elif i >= start_tail:
                allowed = [tail[i - start_tail]]
            else:
                allowed = vocab.non_eos
            delta.append({t: i + 1 for t in allowed})
        delta.append({})
        return ConstraintAutomaton(n, eos, L + 1, 0, tuple(delta), frozenset({L}), name=name)

    # free length: read u, then track the longest suffix matching a prefix of body (KMP)
    k = len(body)
    fail = [0] * (k + 1)
    for i in range(1, k):
        j = fail[i]
        while j and body[i] != body[j]:
            j = fail[j]
        fail[i + 1] = j + 1 if body[i] == body[j] else 0

    def kmp(j: int, t: int) -> int:
        while True:
            if j < k and body[j] == t:
                return j + 1
            if j == 0:
                return 0
            j = fail[j]

    base = len(u)
    final = base + k + 1
    delta = [{u[i]: i + 1} for i in range(base)]
    for j in range(k + 1):
        arcs = {t: base + kmp(j, t) for t in vocab.non_eos}
        if j == k:
            arcs[eos] = final
        delta.append(arcs)
    delta.append({})
    return ConstraintAutomaton(
        n, eos, final + 1, 0, tuple(delta), frozenset({final}),
        max_length=spec.max_length, name=name,
    )


def product_size(automaton: ConstraintAutomaton, model: MarkovModel) -> int:
    if automaton.num_tokens != len(model.vocab) or automaton.eos != model.vocab.eos:
        raise ConstraintError("automaton and model vocabularies differ")
    size = len(model.reachable_states()) * automaton.num_states
    if automaton.has_budget:
        size *= automaton.target + 1
    return size


# ---------------------------------------------------------------- text format


def _labels(vocab: Vocabulary, words: Iterable[str], lineno: int) -> list[int]:
    out = []
    for w in words:
        if w == "*":
            out.extend(range(len(vocab)))
        else:
            try:
                out.append(vocab.index(w))
            except ValueError as exc:
                raise ConstraintError(f"line {lineno}: {exc}") from None
    return out


def _int(word: str, lineno: int) -> int:
    try:
        return int(word)
    except ValueError:
        raise ConstraintError(f"line {lineno}: expected an integer, got {word!r}") from None


def parse_constraint(text: str, vocab: Vocabulary) -> Constraint:
    """Read a constraint file; token labels are resolved against ``vocab``.

    See the README for the line-oriented grammar of each tag.
    """
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line.split()))
    if not lines:
        raise ConstraintError("empty constraint file")
    (lineno, head), body = lines[0], lines[1:]
    tag = head[0]
    if len(head) != 1:
        raise ConstraintError(f"line {lineno}: header is a single tag")

    def expect(key: str, words: list[str], lineno: int, count: int | None = None) -> list[str]:
        if words[0] != key:
            raise ConstraintError(f"line {lineno}: expected '{key}', got '{words[0]}'")
        if count is not None and len(words) != count + 1:
            raise ConstraintError(f"line {lineno}: '{key}' takes {count} value(s)")
        return words[1:]

    if tag == "fixedlen":
        if len(body) != 1:
            raise ConstraintError("fixedlen takes exactly one 'length' line")
        lineno, words = body[0]
        return FixedLengthConstraint(_int(expect("length", words, lineno, 1)[0], lineno))

    if tag == "unary":
        sets = []
        for lineno, words in body:
            toks = _labels(vocab, expect("pos", words, lineno), lineno)
            if not toks:
                raise ConstraintError(f"line {lineno}: empty allowed set")
            sets.append(frozenset(toks))
        return UnaryConstraint(tuple(sets))

    if tag == "metrical":
        target = None
        weights: dict[int, int] = {}
        for lineno, words in body:
            if words[0] == "target":
                target = _int(expect("target", words, lineno, 1)[0], lineno)
            else:
                label, w = expect("weight", words, lineno, 2)
                (tok,) = _labels(vocab, [label], lineno)
                weights[tok] = _int(w, lineno)
        if target is None:
            raise ConstraintError("metrical constraint needs a 'target' line")
        missing = [vocab.tokens[t] for t in range(len(vocab)) if t not in weights]
        if missing:
            raise ConstraintError(f"no weight for token(s) {', '.join(missing)}")
        return MetricalConstraint(tuple(weights[t] for t in range(len(vocab))), target)

    if tag == "inpaint":
        fields: dict[str, tuple[int, list[str]]] = {}
        for lineno, words in body:
            if words[0] not in ("prefix", "suffix", "length", "maxlength"):
                raise ConstraintError(f"line {lineno}: unknown inpaint field '{words[0]}'")
            if words[0] in fields:
                raise ConstraintError(f"line {lineno}: duplicate '{words[0]}'")
            if words[0] in ("length", "maxlength") and len(words) != 2:
                raise ConstraintError(f"line {lineno}: '{words[0]}' takes 1 value")
            fields[words[0]] = (lineno, words[1:])

        def seq(key):
            lineno, words = fields.get(key, (0, []))
            return tuple(_labels(vocab, words, lineno))

        def num(key):
            if key not in fields:
                return None
            lineno, words = fields[key]
            return _int(words[0], lineno)

        return InpaintingSpec(seq("prefix"), seq("suffix"), num("length"), num("maxlength"))

    if tag == "dfa":
        num_states = initial = max_length = target = None
        accepting: list[int] = []
        arcs: list[tuple[int, int, int, int]] = []
        weights = {}
        for lineno, words in body:
            key = words[0]
            if key == "states":
                num_states = _int(expect(key, words, lineno, 1)[0], lineno)
            elif key == "initial":
                initial = _int(expect(key, words, lineno, 1)[0], lineno)
            elif key == "accepting":
                accepting = [_int(w, lineno) for w in words[1:]]
            elif key == "arc":
                src, label, dst = expect(key, words, lineno, 3)
                (tok,) = _labels(vocab, [label], lineno)
                arcs.append((lineno, _int(src, lineno), tok, _int(dst, lineno)))
            elif key == "maxlength":
                max_length = _int(expect(key, words, lineno, 1)[0], lineno)
            elif key == "target":
                target = _int(expect(key, words, lineno, 1)[0], lineno)
            elif key == "weight":
                label, w = expect(key, words, lineno, 2)
                (tok,) = _labels(vocab, [label], lineno)
                weights[tok] = _int(w, lineno)
            else:
                raise ConstraintError(f"line {lineno}: unknown dfa field '{key}'")
        if num_states is None or initial is None:
            raise ConstraintError("dfa needs 'states' and 'initial' lines")
        delta: list[dict[int, int]] = [{} for _ in range(num_states)]
        for lineno, src, tok, dst in arcs:
            if not 0 <= src < num_states:
                raise ConstraintError(f"line {lineno}: source state {src} out of range")
            if tok in delta[src]:
                raise ConstraintError(f"line {lineno}: second arc on the same token (nondeterministic)")
            delta[src][tok] = dst
        wt = None
        if target is not None:
            missing = [vocab.tokens[t] for t in range(len(vocab)) if t not in weights]
            if missing:
                raise ConstraintError(f"no weight for token(s) {', '.join(missing)}")
            wt = tuple(weights[t] for t in range(len(vocab)))
        elif weights:
            raise ConstraintError("weights given without a 'target'")
        return ConstraintAutomaton(
            len(vocab), vocab.eos, num_states, initial, tuple(delta), frozenset(accepting),
            weights=wt, target=target, max_length=max_length,
        )

    raise ConstraintError(f"line {lineno}: unknown constraint tag '{tag}'")


def dump_constraint(constraint: Constraint, vocab: Vocabulary) -> str:
    r = vocab.render
    if isinstance(constraint, FixedLengthConstraint):
        out = ["fixedlen", f"length {constraint.length}"]
    elif isinstance(constraint, UnaryConstraint):
        out = ["unary"] + [f"pos {r(sorted(s))}" for s in constraint.allowed_sets]
    elif isinstance(constraint, MetricalConstraint):
        out = ["metrical", f"target {constraint.target}"]
        out += [f"weight {vocab.tokens[t]} {w}" for t, w in enumerate(constraint.weights)]
    elif isinstance(constraint, InpaintingSpec):
        out = ["inpaint", f"prefix {r(constraint.prefix)}".rstrip(), f"suffix {r(constraint.suffix)}".rstrip()]
        if constraint.total_length is not None:
            out.append(f"length {constraint.total_length}")
        if constraint.max_length is not None:
            out.append(f"maxlength {constraint.max_length}")
    elif isinstance(constraint, ConstraintAutomaton):
        a = constraint
        out = ["dfa", f"states {a.num_states}", f"initial {a.initial}",
               f"accepting {' '.join(map(str, sorted(a.accepting)))}".rstrip()]
        for s, arcs in enumerate(a.delta):
            out += [f"arc {s} {vocab.tokens[t]} {d}" for t, d in sorted(arcs.items())]
        if a.max_length is not None:
            out.append(f"maxlength {a.max_length}")
        if a.weights is not None:
            out.append(f"target {a.target}")
            out += [f"weight {vocab.tokens[t]} {w}" for t, w in enumerate(a.weights)]
    else:
        raise TypeError(f"cannot dump {type(constraint).__name__}")
    return "\n".join(out) + "\n"


def feasible_by_definition(constraint: Constraint, x: Seq, vocab: Vocabulary) -> bool:
    """Direct membership test from the constraint's own definition (no automaton)."""
    if not is_complete(x, vocab):
        return False
    if isinstance(constraint, FixedLengthConstraint):
        return len(x) == constraint.length
    if isinstance(constraint, UnaryConstraint):
        return len(x) == constraint.length and all(t in s for t, s in zip(x, constraint.allowed_sets))
    if isinstance(constraint, MetricalConstraint):
        return sum(constraint.weights[t] for t in x) == constraint.target
    if isinstance(constraint, InpaintingSpec):
        u, v = constraint.prefix, constraint.suffix
        tail = v if v and v[-1] == vocab.eos else v + (vocab.eos,)
        if constraint.total_length is not None and len(x) != constraint.total_length:
            return False
        if constraint.max_length is not None and len(x) > constraint.max_length:
            return False
        return len(x) >= len(u) + len(tail) and x[:len(u)] == u and x[len(x) - len(tail):] == tail
    if isinstance(constraint, ConstraintAutomaton):
        return accepts(constraint, x)
    raise TypeError(f"unknown constraint {type(constraint).__name__}")
