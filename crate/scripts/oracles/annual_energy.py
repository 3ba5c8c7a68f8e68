"""Annual DC energy of a 200 W array on the bundled clear-sky weather year.

Independent model chain from pvlib: NREL SPA sun position, Kasten-Young air
mass, Perez transposition, Faiman temperature, ADR efficiency.
"""
import sys

import pandas as pd
import pvlib

path = sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/fixtures/tmy_clearsky_zurich.csv"
lat, lon = 47.37, 8.54
with open(path) as fh:
    lines = fh.read().splitlines()
start = next(i for i, l in enumerate(lines) if l.startswith("time(UTC)"))
rows = [l.split(",") for l in lines[start + 1:] if l[:1].isdigit()]
df = pd.DataFrame(rows, columns=lines[start].split(","))
times = pd.DatetimeIndex(pd.to_datetime(df["time(UTC)"], format="%Y%m%d:%H%M", utc=True))
df = df.drop(columns="time(UTC)").astype(float)
df.index = times

sp = pvlib.solarposition.get_solarposition(times, lat, lon, method="nrel_numpy")
am = pvlib.atmosphere.get_relative_airmass(sp["apparent_zenith"], "kastenyoung1989")
dni_extra = pvlib.irradiance.get_extra_radiation(times)
poa = pvlib.irradiance.get_total_irradiance(
    lat, 180, sp["apparent_zenith"], sp["azimuth"], df["Gb(n)"], df["G(h)"], df["Gd(h)"],
    dni_extra=dni_extra, airmass=am, model="perez", albedo=0.2,
)
g = poa["poa_global"].fillna(0).clip(lower=0)
g[sp["apparent_zenith"] >= 90] = 0
t = pvlib.temperature.faiman(g, df["T2m"], df["WS10m"], 25.0, 6.84)
eta = pvlib.pvarray.pvefficiency_adr(g, t, 0.99924, -5.49097, 0.01918, 0.06999, 0.26144)
p = (200 * eta * g / 1000).clip(lower=0)
print(f"annual energy Wh: {p.sum():.6f}")
print(f"capacity factor: {p.sum() / (200 * 8760):.6f}")
