"""Reference solar positions from NREL SPA (pvlib 'nrel_numpy').

Writes CSV: lat,lon,time,apparent_elevation_deg,azimuth_deg.

    python3 solar_position.py > ../../crates/core/tests/fixtures/spa_reference.csv
"""
import pandas as pd
import pvlib

CASES = [
    (47.37, 8.54, "2020-06-21T12:00:00Z"),
    (47.37, 8.54, "2020-12-21T11:00:00Z"),
    (47.519, 8.540, "2023-03-20T09:30:00Z"),
    (0.0, 0.0, "2021-03-20T12:00:00Z"),
    (-33.87, 151.21, "2019-01-15T02:00:00Z"),
    (40.71, -74.01, "2022-07-04T16:00:00Z"),
    (64.15, -21.94, "2018-06-21T23:30:00Z"),
    (35.68, 139.69, "2024-02-29T03:00:00Z"),
    (-23.55, -46.63, "2015-11-11T15:45:00Z"),
    (51.48, 0.0, "2000-01-01T12:00:00Z"),
    (19.43, -99.13, "1995-05-17T18:20:00Z"),
    (-54.8, -68.3, "2049-12-01T17:00:00Z"),
]

print("lat,lon,time,apparent_elevation_deg,azimuth_deg")
for lat, lon, ts in CASES:
    t = pd.DatetimeIndex([pd.Timestamp(ts)])
    sp = pvlib.solarposition.get_solarposition(t, lat, lon, method="nrel_numpy")
    print(f'{lat:.3f},{lon:.3f},{ts},{sp["apparent_elevation"].iloc[0]:.4f},{sp["azimuth"].iloc[0]:.4f}')
