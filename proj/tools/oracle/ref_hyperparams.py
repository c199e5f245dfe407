#!/usr/bin/env python3
"""Exact values for the online hyperparameter schedule, frozen into tests.

  T    = min{ n >= 1 : n >= 2 * d_est(n) }
  m    = ceil(18 T ln(2 T |C| / delta) / eps^2)
  beta = sqrt(2 T ln(2 T |C| / delta) / m)
  lam  = 2 T ln(2 T |C| / delta) / m
"""
import math


def schedule(class_size, delta, eps, d_est, cap=1 << 20):
    T = next(n for n in range(1, cap) if n >= 2 * d_est(n))
    L = math.log(2 * T * class_size / delta)
    m = math.ceil(18 * T * L / eps**2)
    beta = math.sqrt(2 * T * L / m)
    lam = 2 * T * L / m
    return T, m, beta, lam


def main():
    T, m, beta, lam = schedule(8, 0.1, 0.1, lambda n: 1)
    print(f"T={T} m={m} beta={beta:.17g} lambda={lam:.17g}")
    print(f"  raw 18*T*ln(320)/eps^2 = {18 * T * math.log(320) / 0.01:.6f}")
    print(f"  beta^2 == lambda: {abs(beta * beta - lam):.3g}")
    T2, m2, *_ = schedule(4, 0.1, 0.2, lambda n: max(1, n // 4))
    print(f"d_est=n//4: T={T2} m={m2}")


if __name__ == "__main__":
    main()
