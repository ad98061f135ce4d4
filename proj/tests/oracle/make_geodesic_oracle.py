import random, math
from geographiclib.geodesic import Geodesic
g = Geodesic.WGS84
rng = random.Random(20240611)
lat0, lon0 = 53.54, 9.95
def rnd_pt():
    az = rng.uniform(0, 360); d = 100000*math.sqrt(rng.random())
    r = g.Direct(lat0, lon0, az, d)
    return r['lat2'], r['lon2']
import pathlib
out_path = pathlib.Path(__file__).resolve().parent.parent / "data" / "geodesic_oracle.csv"
with open(out_path, "w") as f:
    f.write("lat1,lon1,lat2,lon2,azi1_deg,s12_m\n")
    for i in range(1000):
        a = rnd_pt(); b = rnd_pt()
        # store coordinates at 12 decimals so C++ parses exactly what oracle saw
        a = tuple(float("%.12f" % v) for v in a); b = tuple(float("%.12f" % v) for v in b)
        r = g.Inverse(a[0], a[1], b[0], b[1])
        az = r['azi1'] % 360.0
        f.write("%.12f,%.12f,%.12f,%.12f,%.15f,%.9f\n" % (a[0],a[1],b[0],b[1],az,r['s12']))
r = g.Inverse(53.54553, 9.96957, 53.54387, 9.94275)
print("example", repr(r['azi1'] % 360), repr(r['s12']))
r = g.Inverse(53.0, 9.0, 53.0, 9.0001); print("east", r['azi1'])
