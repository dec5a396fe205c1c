"""Static fault trees with complex basic events.

Document format (UTF-8, one declaration per line, ``#`` starts a comment)::

    top      <id>
    gate     <id> <AND|OR> children=<id>,<id>,... [label="..."]
    event    <id> rate=<per hour> [label="..."] [source=...]
    cbe      <id> model=<battery|propulsion|processor|markov> [chain=<name>]
             [start=<state>] [symptoms=<name>,...] [label="..."]
    markov   <name> states=<s>,<s>,... absorbing=<s>,...
    transition <name> <src> <dst> rate=<per hour>

Declarations may appear in any order.  Values containing spaces are
double-quoted.
"""

from __future__ import annotations

import itertools
import math
import re
import warnings
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Iterable, Mapping

import numpy as np
from scipy.integrate import trapezoid

from .errors import HorizonCapWarning, ParseError, ReliabilityError
from .markov import MarkovModel, build_markov_model, transient_curve

CBE_MODELS = ("battery", "propulsion", "processor", "markov")
DEFAULT_SYMPTOMS = {
    "battery": ("battery_pct",),
    "propulsion": ("motor_status", "config"),
    "processor": ("temp_c",),
    "markov": (),
}


@dataclass(frozen=True)
class Gate:
    id: str
    kind: str  # "AND" | "OR"
    children: tuple[str, ...]
    label: str = ""


@dataclass(frozen=True)
class BasicEvent:
    id: str
    rate: float
    label: str = ""
    attrs: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ComplexBasicEvent:
    id: str
    model: str
    symptoms: tuple[str, ...] = ()
    chain: MarkovModel | None = None
    start: str | None = None
    label: str = ""
    attrs: Mapping[str, str] = field(default_factory=dict)


Node = Gate | BasicEvent | ComplexBasicEvent


@dataclass(frozen=True)
class ComponentProbability:
    leaf: str
    probability: float
    mttf: float = math.inf  # inf marks a zero-rate leaf

    def __post_init__(self):
        if not 0 <= self.probability <= 1:
            raise ReliabilityError("INVALID_PROBABILITY", f"{self.leaf}: {self.probability} not in [0, 1]")
        if not self.mttf >= 0:
            raise ReliabilityError("INVALID_MTTF", f"{self.leaf}: MTTF {self.mttf} < 0")


@dataclass(frozen=True)
class FaultTree:
    nodes: Mapping[str, Node]
    root: str

    @property
    def leaves(self) -> list[Node]:
        return [n for n in self.nodes.values() if not isinstance(n, Gate)]

    @property
    def gates(self) -> list[Gate]:
        return [n for n in self.nodes.values() if isinstance(n, Gate)]

    def cbes(self, model=None) -> list[ComplexBasicEvent]:
        return [
            n
            for n in self.nodes.values()
            if isinstance(n, ComplexBasicEvent) and (model is None or n.model == model)
        ]

    def category_gates(self) -> list[Gate]:
        """Gates directly under the root."""
        root = self.nodes[self.root]
        if not isinstance(root, Gate):
            return []
        return [self.nodes[c] for c in root.children if isinstance(self.nodes[c], Gate)]


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r'[^\s=]+="[^"]*"|"[^"]*"|\S+')
_ID = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")


@dataclass
class _Tok:
    text: str
    col: int


def _tokenize(line):
    body = line
    # Strip a trailing comment that is not inside quotes.
    in_quote = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_quote = not in_quote
        elif ch == "#" and not in_quote:
            body = line[:i]
            break
    return [_Tok(m.group(0), m.start() + 1) for m in _TOKEN.finditer(body)]


def _split_kv(tokens, lineno, allowed):
    out = {}
    for tok in tokens:
        if "=" not in tok.text:
            raise ParseError("PARSE_ERROR", f"expected key=value, got {tok.text!r}", lineno, tok.col)
        key, value = tok.text.split("=", 1)
        if key not in allowed:
            raise ParseError("PARSE_ERROR", f"unknown attribute {key!r}", lineno, tok.col)
        if value.startswith('"') and value.endswith('"') and len(value) >= 2:
            value = value[1:-1]
        out[key] = (value, tok.col)
    return out


def _float(value, lineno, col, what):
    try:
        x = float(value)
    except ValueError:
        raise ParseError("PARSE_ERROR", f"{what} must be a number, got {value!r}", lineno, col) from None
    if not math.isfinite(x) or x < 0:
        raise ParseError("NEGATIVE_RATE", f"{what} must be finite and >= 0, got {value}", lineno, col)
    return x


def _ident(tok, lineno):
    if not _ID.match(tok.text):
        raise ParseError("PARSE_ERROR", f"invalid identifier {tok.text!r}", lineno, tok.col)
    return tok.text


def parse_fault_tree(text: str) -> FaultTree:
    """Parse and validate a fault-tree document."""
    gates, leaves, chains, pending_cbe = {}, {}, {}, []
    chain_transitions = {}
    positions = {}
    root = None

    def claim(ident, lineno, col):
        if ident in positions:
            prev = positions[ident][0]
            raise ParseError("DUPLICATE_ID", f"id {ident!r} already declared on line {prev}", lineno, col)
        positions[ident] = (lineno, col)

    for lineno, line in enumerate(text.splitlines(), start=1):
        toks = _tokenize(line)
        if not toks:
            continue
        keyword = toks[0].text
        if keyword == "top":
            if len(toks) != 2:
                raise ParseError("PARSE_ERROR", "usage: top <id>", lineno, toks[0].col)
            if root is not None:
                raise ParseError("PARSE_ERROR", "top declared more than once", lineno, toks[0].col)
            root = (_ident(toks[1], lineno), lineno, toks[1].col)
        elif keyword == "gate":
            if len(toks) < 4:
                raise ParseError("PARSE_ERROR", "usage: gate <id> <AND|OR> children=...", lineno, toks[0].col)
            ident = _ident(toks[1], lineno)
            kind = toks[2].text.upper()
            if kind not in ("AND", "OR"):
                raise ParseError("PARSE_ERROR", f"gate type must be AND or OR, got {toks[2].text!r}", lineno, toks[2].col)
            kv = _split_kv(toks[3:], lineno, {"children", "label"})
            if "children" not in kv:
                raise ParseError("PARSE_ERROR", "gate needs children=", lineno, toks[0].col)
            children = tuple(c.strip() for c in kv["children"][0].split(",") if c.strip())
            if not children:
                raise ParseError("PARSE_ERROR", "gate has no children", lineno, kv["children"][1])
            claim(ident, lineno, toks[1].col)
            gates[ident] = (Gate(ident, kind, children, kv.get("label", ("",))[0]), lineno, kv["children"][1])
        elif keyword == "event":
            if len(toks) < 3:
                raise ParseError("PARSE_ERROR", "usage: event <id> rate=<r>", lineno, toks[0].col)
            ident = _ident(toks[1], lineno)
            kv = _split_kv(toks[2:], lineno, {"rate", "label", "source"})
            if "rate" not in kv:
                raise ParseError("PARSE_ERROR", "event needs rate=", lineno, toks[0].col)
            rate = _float(kv["rate"][0], lineno, kv["rate"][1], "rate")
            claim(ident, lineno, toks[1].col)
            attrs = {k: v for k, (v, _) in kv.items() if k not in ("rate", "label")}
            leaves[ident] = BasicEvent(ident, rate, kv.get("label", ("",))[0], attrs)
        elif keyword == "cbe":
            if len(toks) < 3:
                raise ParseError("PARSE_ERROR", "usage: cbe <id> model=<kind>", lineno, toks[0].col)
            ident = _ident(toks[1], lineno)
            kv = _split_kv(toks[2:], lineno, {"model", "chain", "start", "symptoms", "label", "source"})
            if "model" not in kv:
                raise ParseError("PARSE_ERROR", "cbe needs model=", lineno, toks[0].col)
            claim(ident, lineno, toks[1].col)
            pending_cbe.append((ident, kv, lineno))
        elif keyword == "markov":
            if len(toks) < 4:
                raise ParseError("PARSE_ERROR", "usage: markov <name> states=... absorbing=...", lineno, toks[0].col)
            name = _ident(toks[1], lineno)
            kv = _split_kv(toks[2:], lineno, {"states", "absorbing"})
            if "states" not in kv or "absorbing" not in kv:
                raise ParseError("PARSE_ERROR", "markov needs states= and absorbing=", lineno, toks[0].col)
            if name in chains:
                raise ParseError("DUPLICATE_ID", f"chain {name!r} declared twice", lineno, toks[1].col)
            chains[name] = (
                [s.strip() for s in kv["states"][0].split(",") if s.strip()],
                [s.strip() for s in kv["absorbing"][0].split(",") if s.strip()],
                lineno,
            )
            chain_transitions.setdefault(name, [])
        elif keyword == "transition":
            if len(toks) != 5:
                raise ParseError(
                    "PARSE_ERROR", "usage: transition <chain> <src> <dst> rate=<r>", lineno, toks[0].col
                )
            kv = _split_kv(toks[4:], lineno, {"rate"})
            if "rate" not in kv:
                raise ParseError("PARSE_ERROR", "transition needs rate=", lineno, toks[4].col)
            rate = _float(kv["rate"][0], lineno, kv["rate"][1], "rate")
            chain_transitions.setdefault(toks[1].text, []).append(
                (toks[2].text, toks[3].text, rate, lineno, toks[1].col)
            )
        else:
            raise ParseError("PARSE_ERROR", f"unknown declaration {keyword!r}", lineno, toks[0].col)

    models = {}
    for name, items in chain_transitions.items():
        if name not in chains:
            lineno, col = items[0][3], items[0][4]
            raise ParseError("UNRESOLVED_BINDING", f"transition for undeclared chain {name!r}", lineno, col)
        states, absorbing, lineno = chains[name]
        try:
            models[name] = build_markov_model(states, [(a, b, r) for a, b, r, _, _ in items], absorbing)
        except ReliabilityError as exc:
            raise ParseError(exc.code, f"chain {name!r}: {exc.detail}", lineno, 1) from None

    for ident, kv, lineno in pending_cbe:
        model, col = kv["model"]
        if model not in CBE_MODELS:
            raise ParseError("UNRESOLVED_BINDING", f"unknown model {model!r} for {ident!r}", lineno, col)
        chain = start = None
        if model == "markov":
            if "chain" not in kv:
                raise ParseError("UNRESOLVED_BINDING", f"markov cbe {ident!r} needs chain=", lineno, col)
            name, ccol = kv["chain"]
            if name not in models:
                raise ParseError("UNRESOLVED_BINDING", f"chain {name!r} is not declared", lineno, ccol)
            chain = models[name]
            start = kv.get("start", (chain.states[0],))[0]
            if start not in chain.states:
                raise ParseError("UNRESOLVED_BINDING", f"start state {start!r} not in chain {name!r}", lineno, col)
        if "symptoms" in kv:
            symptoms = tuple(s.strip() for s in kv["symptoms"][0].split(",") if s.strip())
        else:
            symptoms = DEFAULT_SYMPTOMS[model]
        attrs = {k: v for k, (v, _) in kv.items() if k in ("source",)}
        leaves[ident] = ComplexBasicEvent(
            ident, model, symptoms, chain, start, kv.get("label", ("",))[0], attrs
        )

    if root is None:
        raise ParseError("PARSE_ERROR", "missing top declaration", None, None)
    root_id, root_line, root_col = root
    nodes = {**leaves, **{g: entry[0] for g, entry in gates.items()}}
    if root_id not in nodes:
        raise ParseError("UNRESOLVED_BINDING", f"top event {root_id!r} is not declared", root_line, root_col)
    for gid, (gate, lineno, col) in gates.items():
        for child in gate.children:
            if child not in nodes:
                raise ParseError("UNRESOLVED_BINDING", f"gate {gid!r} references unknown {child!r}", lineno, col)

    _check_acyclic(nodes, gates, root_id)
    reachable = _reachable(nodes, root_id)
    orphans = [n for n in nodes if n not in reachable]
    if orphans:
        lineno, col = positions[orphans[0]]
        raise ParseError("UNREACHABLE_NODE", f"{orphans[0]!r} is not reachable from {root_id!r}", lineno, col)
    ordered = {k: nodes[k] for k in positions if k in nodes}
    return FaultTree(ordered, root_id)


def _check_acyclic(nodes, gates, root):
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {k: WHITE for k in nodes}

    def visit(n, trail):
        colour[n] = GREY
        node = nodes[n]
        if isinstance(node, Gate):
            for c in node.children:
                if colour[c] == GREY:
                    lineno, col = gates[n][1], gates[n][2]
                    cycle = " -> ".join(trail + [n, c])
                    raise ParseError("CYCLE_DETECTED", f"cycle {cycle}", lineno, col)
                if colour[c] == WHITE:
                    visit(c, trail + [n])
        colour[n] = BLACK

    for start in [root] + list(gates):
        if colour[start] == WHITE:
            visit(start, [])


def _reachable(nodes, root):
    seen, stack = {root}, [root]
    while stack:
        node = nodes[stack.pop()]
        if isinstance(node, Gate):
            for c in node.children:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
    return seen


def load_fault_tree(path) -> FaultTree:
    with open(path, encoding="utf-8") as fh:
        return parse_fault_tree(fh.read())


def default_tree_text(name="small_uav") -> str:
    """Text of a shipped document: ``"small_uav"`` or ``"generic_uav"``."""
    return resources.files("uavrel").joinpath("data").joinpath(f"{name}.ft").read_text(encoding="utf-8")


def default_tree(name="small_uav") -> FaultTree:
    return parse_fault_tree(default_tree_text(name))


# ---------------------------------------------------------------------------
# Quantification
# ---------------------------------------------------------------------------


def _leaf_map(leaf_probs):
    if isinstance(leaf_probs, Mapping):
        return leaf_probs
    return {cp.leaf: cp.probability for cp in leaf_probs}


def shared_leaves(tree: FaultTree) -> list[str]:
    """Leaves reachable from the top along more than one path."""
    order, seen = [], set()

    def topo(nid):
        if nid in seen:
            return
        seen.add(nid)
        node = tree.nodes[nid]
        if isinstance(node, Gate):
            for c in node.children:
                topo(c)
        order.append(nid)

    topo(tree.root)
    # Number of distinct root-to-node paths, pushed top-down.
    incoming = {nid: 0 for nid in order}
    incoming[tree.root] = 1
    for nid in reversed(order):
        node = tree.nodes[nid]
        if isinstance(node, Gate):
            for c in node.children:
                incoming[c] += incoming[nid]
    return [nid for nid in order if not isinstance(tree.nodes[nid], Gate) and incoming[nid] > 1]


def _evaluate_independent(tree, probs):
    memo = {}

    def value(nid):
        if nid in memo:
            return memo[nid]
        node = tree.nodes[nid]
        if isinstance(node, Gate):
            vals = [value(c) for c in node.children]
            if node.kind == "AND":
                out = vals[0]
                for v in vals[1:]:
                    out = out * v
            else:
                # q + v - q*v keeps precision for tiny probabilities, where
                # 1 - prod(1 - p) would cancel to zero.
                out = vals[0]
                for v in vals[1:]:
                    out = out + v - out * v
        else:
            out = probs[nid]
        memo[nid] = out
        return out

    return value(tree.root)


MAX_SHARED_LEAVES = 20


def evaluate_top(tree: FaultTree, leaf_probs) -> float | np.ndarray:
    """Top-event probability assuming independent leaves.

    ``leaf_probs`` maps leaf ids to probabilities (scalars or equally
    shaped arrays) or is an iterable of :class:`ComponentProbability`.
    OR gates give 1 - prod(1 - p), AND gates prod(p).  A leaf that feeds
    several gates is handled exactly by conditioning on its state.
    """
    given = _leaf_map(leaf_probs)
    probs = {}
    for leaf in tree.leaves:
        if leaf.id not in given:
            raise ReliabilityError("MISSING_LEAF_PROBABILITY", f"no probability for leaf {leaf.id!r}")
        arr = np.asarray(given[leaf.id], dtype=float)
        if np.any(arr < 0) or np.any(arr > 1) or np.any(np.isnan(arr)):
            raise ReliabilityError("INVALID_PROBABILITY", f"leaf {leaf.id!r} probability outside [0, 1]")
        probs[leaf.id] = given[leaf.id]

    shared = shared_leaves(tree)
    if len(shared) > MAX_SHARED_LEAVES:
        raise ReliabilityError(
            "TOO_MANY_SHARED_EVENTS", f"{len(shared)} repeated leaves; at most {MAX_SHARED_LEAVES} supported"
        )
    if not shared:
        top = _evaluate_independent(tree, probs)
    else:
        top = 0.0
        for states in itertools.product((0.0, 1.0), repeat=len(shared)):
            weight = 1.0
            fixed = dict(probs)
            for leaf, x in zip(shared, states):
                p = probs[leaf]
                weight = weight * (p if x else 1.0 - p)
                fixed[leaf] = x
            top = top + weight * _evaluate_independent(tree, fixed)
    if np.ndim(top) == 0:
        return float(min(max(top, 0.0), 1.0))
    return np.clip(top, 0.0, 1.0)


ReliabilityFn = Callable[[np.ndarray], np.ndarray]


def exponential_reliability(rate: float) -> ReliabilityFn:
    return lambda t: np.exp(-rate * np.asarray(t, dtype=float))


def markov_reliability(model: MarkovModel, start) -> ReliabilityFn:
    """R(t) = probability of still being operational ``t`` hours after ``start``."""
    absorbing = sorted(model.absorbing)

    def reliability(t):
        curve = transient_curve(model, start, t)
        return 1.0 - curve[:, absorbing].sum(axis=1)

    return reliability


def system_reliability(tree: FaultTree, leaf_reliability: Mapping[str, ReliabilityFn], t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    fail = {}
    for leaf in tree.leaves:
        if leaf.id not in leaf_reliability:
            raise ReliabilityError("MISSING_LEAF_PROBABILITY", f"no reliability function for {leaf.id!r}")
        fail[leaf.id] = np.clip(1.0 - np.asarray(leaf_reliability[leaf.id](t), dtype=float), 0.0, 1.0)
    return 1.0 - evaluate_top(tree, fail)


def system_mttf(
    tree: FaultTree,
    leaf_reliability: Mapping[str, ReliabilityFn],
    horizon: float = 1000.0,
    step: float | None = None,
    tol: float = 1e-6,
    cap: float = 1e7,
) -> float:
    """Integral of system reliability over [0, horizon], trapezoid rule.

    The horizon doubles (same step) until R_sys falls below ``tol`` or
    reaches ``cap``; hitting the cap emits :class:`HorizonCapWarning` and
    the returned value is a lower bound.
    """
    if not horizon > 0:
        raise ReliabilityError("BAD_GRID", "horizon must be > 0")
    step = horizon / 4096 if step is None else float(step)
    if not step > 0:
        raise ReliabilityError("BAD_GRID", "step must be > 0")
    while True:
        n = int(math.ceil(horizon / step))
        t = np.arange(n + 1) * step
        R = system_reliability(tree, leaf_reliability, t)
        if R[-1] < tol:
            break
        if horizon >= cap:
            warnings.warn(
                f"system reliability still {R[-1]:.3g} at the {cap:g} h cap; MTTF is a lower bound",
                HorizonCapWarning,
                stacklevel=2,
            )
            break
        horizon = min(2.0 * horizon, cap)
    return float(trapezoid(R, t))
