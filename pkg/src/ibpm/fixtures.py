"""Small reference inputs used by the CLI, the demos and the tests."""

from __future__ import annotations

from .graph import Graph

# The seven-node flow graph whose derived sequence is drawn in the interval figure:
# a loop 3-4-5-6 nested inside a loop headed at 2 that also passes through 7.
FIGURE4_EDGES = [(1, 2), (2, 3), (2, 7), (3, 4), (4, 5), (5, 6), (6, 3), (6, 7), (7, 2)]

# Expected node sets of each derived level, lowest first.
FIGURE4_LEVELS = [
    [{1}, {2}, {3, 4, 5, 6}, {7}],
    [{1}, {2, 7, 8}],
    [{1, 9}],
    [{10}],
]


def figure4() -> Graph:
    return Graph(range(1, 8), FIGURE4_EDGES, 1)


# Naive substring search: an inner comparison loop nested in a scan over start
# positions. Its flow graph needs several derivation steps, inner loop first.
SUBSTRING_SEARCH = """\
def int indexOf(int[] hay, int[] needle) {
    int i = 0;
    while (i < hay.length - needle.length + 1) {
        int j = 0;
        int ok = 1;
        while (j < needle.length) {
            if (hay[i + j] != needle[j]) {
                ok = 0;
            }
            j = j + 1;
        }
        if (ok == 1) {
            return i;
        }
        i = i + 1;
    }
    return -1;
}
"""

NULL_GUARD_EXAMPLE = """\
class Node {
    int val;
}

def int read(Node p) {
    int x = 0;
    if (p != null) {
        x = p.val;
    }
    return x;
}
"""
