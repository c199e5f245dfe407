#!/usr/bin/env python3
"""Reference values for the regularized game objective, frozen into tests/test_game.cpp.

Everything here is evaluated directly from the definitions (double sums and
explicit KL), independent of the C++ code paths.
"""
import math


def sigma(z):
    return 1.0 / (1.0 + math.exp(-z))


def kl(p, q):
    return sum(pi * math.log(pi / qi) for pi, qi in zip(p, q) if pi > 0.0)


def expected_pref(P, p1, p2):
    return sum(p1[a] * p2[b] * P[a][b] for a in range(len(p1)) for b in range(len(p2)))


def game_value(P, p1, p2, pi0, eta):
    return expected_pref(P, p1, p2) - kl(p1, pi0) / eta + kl(p2, pi0) / eta


def gibbs(pi0, score, eta, sign):
    w = [math.log(p0) + sign * eta * s for p0, s in zip(pi0, score)]
    m = max(w)
    e = [math.exp(x - m) for x in w]
    z = sum(e)
    return [x / z for x in e]


def main():
    # 1 prompt, 2 actions, uniform pi0, eta = 1, Bradley-Terry rewards (1, 0).
    s1 = sigma(1.0)
    P = [[0.5, s1], [1.0 - s1, 0.5]]
    pi0 = [0.5, 0.5]
    eta = 1.0

    v = game_value(P, [1.0, 0.0], pi0, pi0, eta)
    print(f"game_value(delta(a0), pi0)          = {v:.17g}")
    print(f"  closed form sigma(1)/2+1/4-ln2    = {s1 / 2 + 0.25 - math.log(2):.17g}")

    # Gibbs response of the max player to a uniform opponent.
    score = [expected_pref(P, [1.0 if a == b else 0.0 for b in range(2)], pi0, ) if False else None for a in range(2)]
    score = [sum(pi0[b] * P[a][b] for b in range(2)) for a in range(2)]
    g = gibbs(pi0, score, eta, +1.0)
    print(f"scores vs uniform opponent          = ({score[0]:.17g}, {score[1]:.17g})")
    print(f"gibbs max response p(a0)            = {g[0]:.17g}")
    print(f"  closed form sigma(score0-score1)  = {sigma(score[0] - score[1]):.17g}")

    # Duality gap of the pair (delta(a0), pi0): J(dagger, pi0) - J(delta, dagger).
    br1 = gibbs(pi0, score, eta, +1.0)                       # best response to pi0
    j_up = game_value(P, br1, pi0, pi0, eta)
    score2 = [sum(1.0 * P[0][b] if a == b else 0.0 for b in range(2)) for a in range(2)]
    score2 = [P[0][b] for b in range(2)]                     # opponent of delta(a0)
    br2 = gibbs(pi0, score2, eta, -1.0)
    j_dn = game_value(P, [1.0, 0.0], br2, pi0, eta)
    print(f"duality_gap(delta(a0), pi0)         = {j_up - j_dn:.17g}")

    # Nash by 1e-5 grid on p = pi(a0), minimizing the duality gap of (p, p).
    best_p, best_gap = None, float("inf")
    n = 100000
    for i in range(n + 1):
        p = i / n
        pol = [p, 1.0 - p]
        sc = [sum(pol[b] * P[a][b] for b in range(2)) for a in range(2)]
        b1 = gibbs(pi0, sc, eta, +1.0)
        up = game_value(P, b1, pol, pi0, eta)
        sc2 = [sum(pol[a] * P[a][b] for a in range(2)) for b in range(2)]
        b2 = gibbs(pi0, sc2, eta, -1.0)
        dn = game_value(P, pol, b2, pi0, eta)
        if up - dn < best_gap:
            best_gap, best_p = up - dn, p
    print(f"grid nash p(a0)                     = {best_p:.17g}  (gap {best_gap:.3g})")


if __name__ == "__main__":
    main()
