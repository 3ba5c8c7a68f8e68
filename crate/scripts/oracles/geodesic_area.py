"""WGS84 polygon areas from GeographicLib (Karney)."""
from geographiclib.geodesic import Geodesic
def area(ring):
    p = Geodesic.WGS84.Polygon()
    for lat, lon in ring[:-1]:
        p.AddPoint(lat, lon)
    return abs(p.Compute()[2])
d = 0.0001
for lat0 in [0.0, 47.0]:
    ring = [(lat0, 0), (lat0, d), (lat0 + d, d), (lat0 + d, 0), (lat0, 0)]
    print(lat0, repr(area(ring)))
