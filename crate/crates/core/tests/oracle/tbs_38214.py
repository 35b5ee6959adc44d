"""Standalone transport block size calculation (3GPP TS 38.214, 5.1.3.2).

Written independently of the Rust implementation and used to freeze
tbs_golden.csv. Run: python3 tbs_38214.py > tbs_golden.csv
"""
from fractions import Fraction
import math
MCS = [(2,120),(2,157),(2,193),(2,251),(2,308),(2,379),(2,449),(2,526),(2,602),(2,679),
       (4,340),(4,378),(4,434),(4,490),(4,553),(4,616),(4,658),
       (6,438),(6,466),(6,517),(6,567),(6,616),(6,666),(6,719),(6,772),(6,822),(6,873),(6,910),(6,948)]
TAB = [24,32,40,48,56,64,72,80,88,96,104,112,120,128,136,144,152,160,168,176,184,192,208,224,240,256,272,288,304,320,336,352,368,384,408,432,456,480,504,528,552,576,608,640,672,704,736,768,808,848,888,928,984,1032,1064,1128,1160,1192,1224,1256,1288,1320,1352,1416,1480,1544,1608,1672,1736,1800,1864,1928,2024,2088,2152,2216,2280,2408,2472,2536,2600,2664,2728,2792,2856,2976,3104,3240,3368,3496,3624,3752,3824]
assert len(TAB)==93
def tbs_bits(mcs, nrb, nre=144):
    if nrb==0: return 0
    qm, r = MCS[mcs]
    R = Fraction(r,1024)
    ninfo = Fraction(min(156,nre)*nrb) * R * qm
    if ninfo <= 3824:
        n = max(3, (ninfo.numerator // ninfo.denominator).bit_length()-1 - 6)
        p = 2**n
        nprime = max(24, p * math.floor(ninfo / p))
        return next(t for t in TAB if t >= nprime)
    x = ninfo - 24
    n = (x.numerator//x.denominator).bit_length()-1 - 5
    p = 2**n
    q = x / p
    rnd = math.floor(q + Fraction(1,2))
    nprime = max(3840, p*rnd)
    if R <= Fraction(1,4):
        C = math.ceil(Fraction(nprime+24,3816))
        return 8*C*math.ceil(Fraction(nprime+24, 8*C)) - 24
    if nprime > 8424:
        C = math.ceil(Fraction(nprime+24,8424))
        return 8*C*math.ceil(Fraction(nprime+24, 8*C)) - 24
    return 8*math.ceil(Fraction(nprime+24,8)) - 24


if __name__ == "__main__":
    print("mcs,n_rb,bytes")
    for m in range(29):
        for k in range(0, 107):
            print(f"{m},{k},{tbs_bits(m, k) // 8}")
