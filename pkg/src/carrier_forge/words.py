"""Words in free groups.

Generator ``i`` is the letter ``chr(ord('a') + i)``; its inverse is the
upper-case letter. A word is a plain string, the empty string is the identity.
"""

from __future__ import annotations

import string

IDENTITY = ""


def letter(i: int) -> str:
    return string.ascii_lowercase[i]


def letter_index(ch: str) -> tuple[int, int]:
    """(generator index, exponent)."""
    if ch.islower():
        return ord(ch) - ord("a"), 1
    return ord(ch) - ord("A"), -1


def inverse(w: str) -> str:
    return w[::-1].swapcase()


def reduce(w: str) -> str:
    out: list[str] = []
    for ch in w:
        if out and out[-1] == ch.swapcase():
            out.pop()
        else:
            out.append(ch)
    return "".join(out)


def multiply(*words: str) -> str:
    return reduce("".join(words))


def cyclic_reduce(w: str) -> str:
    w = reduce(w)
    while len(w) > 1 and w[0] == w[-1].swapcase():
        w = w[1:-1]
    return w


def parse(text: str, k: int | None = None) -> str:
    """Parse ``"a b A"`` (or ``"1"`` for the identity)."""
    tokens = text.split()
    if tokens in ([], ["1"]):
        return IDENTITY
    for t in tokens:
        if len(t) != 1 or t not in string.ascii_letters:
            raise ValueError(f"bad generator token {t!r}")
        if k is not None and letter_index(t)[0] >= k:
            raise ValueError(f"generator {t!r} out of range for rank {k}")
    return reduce("".join(tokens))


def format_word(w: str) -> str:
    return " ".join(w) if w else "1"


def generates_free_group(words, k: int) -> bool:
    """Whether ``words`` generate the free group on the first ``k`` letters.

    Builds the Stallings graph of the subgroup (a rose of petals folded until
    deterministic, hairs trimmed) and compares it with the rose on ``k`` letters.
    """
    parent: dict[int, int] = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = set()
    n = 1
    for w in words:
        w = reduce(w)
        if not w:
            continue
        cur = 0
        for i, ch in enumerate(w):
            nxt = 0 if i == len(w) - 1 else n
            if nxt:
                n += 1
            if ch.islower():
                edges.add((cur, ch, nxt))
            else:
                edges.add((nxt, ch.lower(), cur))
            cur = nxt

    changed = True
    while changed:
        changed = False
        edges = {(find(a), ch, find(b)) for a, ch, b in edges}
        out: dict[tuple[int, str], int] = {}
        inn: dict[tuple[int, str], int] = {}
        for a, ch, b in sorted(edges):
            for table, key, val in ((out, (a, ch), b), (inn, (b, ch), a)):
                prev = table.setdefault(key, val)
                if find(prev) != find(val):
                    parent[find(val)] = find(prev)
                    changed = True

    # trim hairs away from the base point
    while True:
        deg: dict[int, int] = {}
        for a, _, b in edges:
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        leaves = {v for v, d in deg.items() if d == 1 and v != find(0)}
        if not leaves:
            break
        edges = {e for e in edges if e[0] not in leaves and e[2] not in leaves}

    verts = {a for a, _, _ in edges} | {b for _, _, b in edges}
    labels = sorted(ch for _, ch, _ in edges)
    return len(verts) == 1 and labels == [letter(i) for i in range(k)]
