#!/usr/bin/env python3
"""Convergence envelope for the Nash solver design.

Probes (a) the damped Gibbs fixed-point iteration pi <- (1-g) pi + g BR(pi)
and (b) the composite mirror-descent fallback, on the cyclic 3-action game and
random skew-symmetric tables, across eta in {0.5, 1, 5, 10}. Reports iterations
to duality gap <= 1e-8.
"""
import math
import random


def gibbs(pi0, score, eta, sign):
    w = [math.log(p) + sign * eta * s for p, s in zip(pi0, score)]
    m = max(w)
    e = [math.exp(x - m) for x in w]
    z = sum(e)
    return [x / z for x in e]


def kl(p, q):
    return sum(pi * math.log(pi / qi) for pi, qi in zip(p, q) if pi > 0)


def gap(P, pi, pi0, eta):
    k = len(pi)
    s1 = [sum(pi[b] * P[a][b] for b in range(k)) for a in range(k)]
    b1 = gibbs(pi0, s1, eta, +1)
    up = sum(b1[a] * pi[b] * P[a][b] for a in range(k) for b in range(k)) - kl(b1, pi0) / eta + kl(pi, pi0) / eta
    s2 = [sum(pi[a] * P[a][b] for a in range(k)) for b in range(k)]
    b2 = gibbs(pi0, s2, eta, -1)
    dn = sum(pi[a] * b2[b] * P[a][b] for a in range(k) for b in range(k)) - kl(pi, pi0) / eta + kl(b2, pi0) / eta
    return up - dn


def damped(P, pi0, eta, gamma=0.5, tol=1e-8, cap=100000):
    pi = list(pi0)
    for it in range(cap):
        if gap(P, pi, pi0, eta) <= tol:
            return it, pi
        k = len(pi)
        s = [sum(pi[b] * P[a][b] for b in range(k)) for a in range(k)]
        g = gibbs(pi0, s, eta, +1)
        pi = [(1 - gamma) * x + gamma * y for x, y in zip(pi, g)]
    return None, pi


def mirror(P, pi0, eta, alpha, tol=1e-8, cap=100000):
    """Composite MD: pi_{k+1} prop pi_k^(1/(1+r)) pi0^(r/(1+r)) exp(alpha s/(1+r)), r = alpha/eta."""
    pi = list(pi0)
    r = alpha / eta
    for it in range(cap):
        if gap(P, pi, pi0, eta) <= tol:
            return it, pi
        k = len(pi)
        s = [sum(pi[b] * P[a][b] for b in range(k)) for a in range(k)]
        w = [(math.log(pi[a]) + r * math.log(pi0[a]) + alpha * s[a]) / (1 + r) for a in range(k)]
        m = max(w)
        e = [math.exp(x - m) for x in w]
        z = sum(e)
        pi = [x / z for x in e]
    return None, pi


def random_instance(rng, k):
    P = [[0.5] * k for _ in range(k)]
    for a in range(k):
        for b in range(a + 1, k):
            p = rng.random()
            P[a][b], P[b][a] = p, 1 - p
    w = [rng.random() + 0.1 for _ in range(k)]
    z = sum(w)
    pi0 = [x / z for x in w]
    return P, pi0


def main():
    rps = [[0.5, 0.75, 0.25], [0.25, 0.5, 0.75], [0.75, 0.25, 0.5]]
    u3 = [1 / 3] * 3
    rng = random.Random(123)
    for eta in [0.5, 1.0, 5.0, 10.0]:
        it, pi = damped(rps, u3, eta)
        print(f"rps eta={eta:4}: damped iters={it}  pi={[f'{x:.6f}' for x in pi]}")
    worst = {0.5: 0, 1.0: 0, 5.0: 0, 10.0: 0}
    fails = 0
    for trial in range(30):
        P, pi0 = random_instance(rng, 5)
        for eta in worst:
            it, _ = damped(P, pi0, eta)
            if it is None:
                fails += 1
                it2, _ = mirror(P, pi0, eta, alpha=min(eta, 1.0))
                print(f"  damped FAILED eta={eta} trial={trial}; mirror iters={it2}")
            else:
                worst[eta] = max(worst[eta], it)
    print("worst damped iters by eta:", worst, " fails:", fails)
    it_m, _ = mirror(rps, u3, 5.0, alpha=1.0)
    print("mirror on rps eta=5: iters =", it_m)


if __name__ == "__main__":
    main()
