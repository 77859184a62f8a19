"""
Link gains and their first two moments
======================================

The analysis only sees a fading link through m = E[h] and s = E[h^2].
Here we compare the closed forms with sampled gains.
"""

import numpy as np

from fading_ilms import channels as ch

rng = np.random.default_rng(0)

# A Rayleigh link is usually specified by its mean gain.  Convert to the
# scale parameter and check the moments against one million draws.
links = {
    "ideal": ch.ideal(),
    "deterministic 0.5": ch.deterministic(0.5),
    "rayleigh, mean 0.7071": ch.rayleigh_from_mean(np.sqrt(2) / 2),
    "rician, nu=0.8 sigma=0.4": ch.rician(0.8, 0.4),
}

print(f"{'link':28s} {'m':>9s} {'m sampled':>10s} {'s':>9s} {'s sampled':>10s}")
for name, link in links.items():
    m, s = ch.moments(link)
    h = ch.sample_gains(link, rng, 1_000_000)
    print(f"{name:28s} {m:9.5f} {h.mean():10.5f} {s:9.5f} {(h * h).mean():10.5f}")

# The gap s - m^2 is the variance of the gain.  It is what makes a fading
# link worse than a deterministic one with the same mean.
m, s = ch.moments(links["rayleigh, mean 0.7071"])
print(f"\nRayleigh gain variance s - m^2 = {s - m * m:.5f}")
