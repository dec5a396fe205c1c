"""Independent reference computations used only by the tests."""

import itertools

import numpy as np

from uavrel.faulttree import Gate


def brute_force_top(tree, probs):
    """Expectation of the top indicator over every joint leaf state."""
    leaves = [leaf.id for leaf in tree.leaves]

    def fires(nid, state):
        node = tree.nodes[nid]
        if isinstance(node, Gate):
            hits = (fires(c, state) for c in node.children)
            return all(hits) if node.kind == "AND" else any(hits)
        return state[nid]

    total = 0.0
    for bits in itertools.product((False, True), repeat=len(leaves)):
        state = dict(zip(leaves, bits))
        w = 1.0
        for leaf, b in state.items():
            w *= probs[leaf] if b else 1.0 - probs[leaf]
        if fires(tree.root, state):
            total += w
    return total


def random_tree_text(rng, max_leaves=10, share=False):
    """A random AND/OR document; with ``share`` some leaves feed two gates."""
    n_leaves = int(rng.integers(1, max_leaves + 1))
    pool = [f"e{i}" for i in range(n_leaves)]
    lines = [f"event {e} rate=0.001" for e in pool]
    g = 0
    while len(pool) > 1:
        k = int(rng.integers(2, min(4, len(pool)) + 1))
        picks = sorted(rng.choice(len(pool), size=k, replace=False), reverse=True)
        children = [pool.pop(i) for i in picks]
        if share and g > 0 and rng.random() < 0.5:
            extra = f"e{int(rng.integers(0, n_leaves))}"
            if extra not in children:
                children.append(extra)
        kind = "AND" if rng.random() < 0.5 else "OR"
        gid = f"g{g}"
        g += 1
        lines.append(f"gate {gid} {kind} children={','.join(children)}")
        pool.append(gid)
    lines.insert(0, f"top {pool[0]}")
    return "\n".join(lines) + "\n"


def random_ctmc(rng, n_min=2, n_max=7):
    """Random absorbing CTMC: a spine towards the absorbing state plus random extra edges."""
    n = int(rng.integers(n_min, n_max + 1))
    states = [f"s{i}" for i in range(n)]
    rates = {}
    for i in range(n - 1):
        rates[(states[i], states[i + 1])] = float(rng.uniform(0.01, 2.0))
        for j in range(n):
            if j != i and (states[i], states[j]) not in rates and rng.random() < 0.3:
                rates[(states[i], states[j])] = float(rng.uniform(0.01, 2.0))
    return states, rates, [states[-1]]


def random_distribution(rng, n):
    p = rng.random(n)
    return p / p.sum()


def trapezoid_mttf(reliability, step, tol=1e-6):
    horizon = step * 1024
    while True:
        t = np.arange(0.0, horizon + step / 2, step)
        r = reliability(t)
        if r[-1] < tol:
            return float(np.sum((r[1:] + r[:-1]) * step / 2)), r
        horizon *= 2
