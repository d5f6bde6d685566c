"""Exponent bookkeeping on the critical hyperbola.

Run: python3 demos/01_hyperbola.py
"""
from critsys.hyperbola import classify, decay_exponent, q_from_p, regime_sign, remainder_ledger, threshold_q

# Pick p and read off the critical partner q.
N, p = 5, 2.75
q = q_from_p(N, p)
pair = classify(N, p, q)
print(f"N={N}, p={p}: critical q = {q:.12g} ({pair.criticality})")

# The slower-decaying component sets gamma, which drives every later order.
dec = decay_exponent(N, p, q)
print(f"decay regime {dec.regime}, gamma = {dec.gamma:g}")

# The remainder ledger collects the exponents behind eps^(1/2 + sigma).
led = remainder_ledger(N, p, q)
print(f"sigma = {led.sigma:g}, threshold_q({N}) = {threshold_q(N):g}, hypotheses hold: {led.hypotheses_ok}")

# Perturbing the exponents fixes which sign of mean curvature can host blow-up.
for s in ((-1, -1), (1, 1), (1, -1), (-1, 1)):
    r = regime_sign(*s, p, q)
    print(f"exponents (q{'+-'[s[0] < 0]}eps, p{'+-'[s[1] < 0]}eps): c2 sign {r.c2_sign:+d}, needs H sign {r.admissible_H_sign:+d}")
