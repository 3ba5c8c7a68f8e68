"""Kasten-Young relative air mass evaluated at 50 significant digits."""
import mpmath as mp
mp.mp.dps = 50
def km(z):
    z = mp.mpf(z)
    return 1 / (mp.cos(mp.radians(z)) + mp.mpf("0.50572") * (mp.mpf("96.07995") - z) ** mp.mpf("-1.6364"))
for z in ["0", "60", "30", "85", "89.9"]:
    print(z, mp.nstr(km(z), 15))
