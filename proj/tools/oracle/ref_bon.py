#!/usr/bin/env python3
"""Best-of-n reference: brute-force enumeration over draw profiles vs the
divide-and-conquer bracket convolution, plus the KL bound ln n - (n-1)/n.

The bracket is single elimination over n i.i.d. draws; the match between slots
(u earlier, v later) is won by u iff rank(u, v) >= 0.5 (ties toward the earlier
slot). Winner of profile (a_1..a_n) = fold of matches up the tree.
"""
import itertools
import math
import random


def bracket_winner(profile, rank):
    layer = list(profile)
    while len(layer) > 1:
        nxt = []
        for i in range(0, len(layer), 2):
            u, v = layer[i], layer[i + 1]
            nxt.append(u if rank[u][v] >= 0.5 else v)
        layer = nxt
    return layer[0]


def bon_enumerate(main, rank, n):
    k = len(main)
    out = [0.0] * k
    for profile in itertools.product(range(k), repeat=n):
        w = 1.0
        for a in profile:
            w *= main[a]
        out[bracket_winner(profile, rank)] += w
    return out


def bon_convolve(main, rank, n):
    k = len(main)
    W = list(main)
    rounds = n.bit_length() - 1
    for _ in range(rounds):
        nxt = [0.0] * k
        for u in range(k):
            for v in range(k):
                w = W[u] * W[v]
                nxt[u if rank[u][v] >= 0.5 else v] += w
        W = nxt
    return W


def main():
    rng = random.Random(11)
    for k, n in [(2, 2), (2, 4), (3, 4), (4, 4), (5, 2), (3, 8)]:
        m = [rng.random() + 0.05 for _ in range(k)]
        z = sum(m)
        m = [x / z for x in m]
        rewards = rng.sample(range(100), k)
        rank = [[1 / (1 + math.exp(-(rewards[a] - rewards[b]))) for b in range(k)] for a in range(k)]
        e = bon_enumerate(m, rank, n)
        c = bon_convolve(m, rank, n)
        d = max(abs(x - y) for x, y in zip(e, c))
        print(f"k={k} n={n}: max|enum-conv| = {d:.3e}")
        kl = sum(w * math.log(w / p) for w, p in zip(c, m) if w > 0)
        bound = math.log(n) - (n - 1) / n
        print(f"      KL = {kl:.6f}  bound = {bound:.6f}  ok = {kl <= bound}")

    # Two actions, reward order a0 > a1, main = (p, 1-p): winner dist closed form
    # (1 - (1-p)^n, (1-p)^n).
    p, n = 0.3, 8
    c = bon_convolve([p, 1 - p], [[0.5, 0.9], [0.1, 0.5]], n)
    print(f"two-action closed form: conv = {c[0]:.17g}  expect = {1 - (1 - p) ** n:.17g}")


if __name__ == "__main__":
    main()
