"""Maximum bipartite matching (Hopcroft-Karp)."""

from __future__ import annotations

from collections import deque
from typing import Sequence

_UNMATCHED = -1
_INF = float("inf")


def hopcroft_karp(adjacency: Sequence[Sequence[int]], n_right: int) -> list[int]:
    """Maximum matching of a bipartite graph given as left-to-right adjacency lists.

    Returns ``match`` with ``match[u]`` the right vertex paired with left
    vertex ``u``, or -1. Neighbour lists are scanned in the given order, so
    the result is deterministic.
    """
    n_left = len(adjacency)
    match_left = [_UNMATCHED] * n_left
    match_right = [_UNMATCHED] * n_right
    layer = [_INF] * n_left

    def bfs() -> bool:
        queue = deque()
        for u in range(n_left):
            if match_left[u] == _UNMATCHED:
                layer[u] = 0
                queue.append(u)
            else:
                layer[u] = _INF
        found = False
        while queue:
            u = queue.popleft()
            for v in adjacency[u]:
                w = match_right[v]
                if w == _UNMATCHED:
                    found = True
                elif layer[w] == _INF:
                    layer[w] = layer[u] + 1
                    queue.append(w)
        return found

    def dfs(u: int) -> bool:
        # iterative DFS along layered augmenting paths
        stack = [(u, iter(adjacency[u]))]
        path: list[tuple[int, int]] = []
        while stack:
            node, it = stack[-1]
            advanced = False
            for v in it:
                w = match_right[v]
                if w == _UNMATCHED:
                    path.append((node, v))
                    for a, b in path:
                        match_left[a] = b
                        match_right[b] = a
                    return True
                if layer[w] == layer[node] + 1:
                    path.append((node, v))
                    stack.append((w, iter(adjacency[w])))
                    advanced = True
                    break
            if not advanced:
                layer[node] = _INF
                stack.pop()
                if path:
                    path.pop()
        return False

    while bfs():
        for u in range(n_left):
            if match_left[u] == _UNMATCHED:
                dfs(u)
    return match_left


def matching_size(match: Sequence[int]) -> int:
    return sum(1 for v in match if v != _UNMATCHED)
