#!/usr/bin/env python3
"""Generate frozen high-precision reference constants for the Rust test suites.

Everything here is recomputable from first principles with mpmath; the outputs
are pasted into the Rust sources as string literals with ~25 significant
digits (f64 consumes ~17). Run: python3 tools/gen_oracles.py
"""
import mpmath as mp

mp.mp.dps = 50


def f075_integral(k: int) -> mp.mpf:
    """I(pi k) = int_0^1 t^(1/4) cos(pi k t) dt.

    For large k the real-line integral is too oscillatory for mp.quad, so
    rotate the contour: with b = pi k,
      int_0^1 t^(1/4) e^(ibt) dt
        = i e^(i pi/8) Gamma(5/4) b^(-5/4)
          - i e^(ib) int_0^inf (1+iy)^(1/4) e^(-by) dy,
    both pieces smooth and exponentially damped. I(b) is the real part.
    """
    if k == 0:
        return mp.mpf(4) / 5
    b = mp.pi * k
    if k <= 50:
        return mp.quad(
            lambda t: t ** mp.mpf("0.25") * mp.cos(b * t),
            [mp.mpf(j) / k for j in range(k + 1)],
        )
    lead = mp.mpc(0, 1) * mp.expjpi(mp.mpf(1) / 8) * mp.gamma(mp.mpf(5) / 4) / b ** mp.mpf("1.25")
    tail = mp.quad(lambda y: (1 + mp.mpc(0, 1) * y) ** mp.mpf("0.25") * mp.exp(-b * y), [0, mp.inf])
    return mp.re(lead - mp.mpc(0, 1) * mp.expj(b) * tail)


def main() -> None:
    print("== f075 univariate integrals I(pi k) ==")
    for k in [0, 1, 2, 3, 5, 10, 23, 24, 25, 50, 100, 1000, 12345, 200000]:
        print(f"k={k:7d}  {mp.nstr(f075_integral(k), 25)}")

    print("\n== Gamma(5/4) ==")
    print(mp.nstr(mp.gamma(mp.mpf(5) / 4), 25))

    print("\n== kink univariate coefficients (quadrature check) ==")
    # g(t) = (15/(4 sqrt 3)) 5^(3/4) * max(1/5 - (t - 1/2)^2, 0), t in [0,1],
    # Fourier coefficient ghat(k) = int_0^1 g(t) exp(-2 pi i k t) dt (real by symmetry).
    c = mp.mpf(15) / (4 * mp.sqrt(3)) * mp.power(5, mp.mpf(3) / 4)
    a = 1 / mp.sqrt(5)

    def kink_hat(k):
        lo, hi = mp.mpf(1) / 2 - a, mp.mpf(1) / 2 + a
        return mp.quad(
            lambda t: c * (mp.mpf(1) / 5 - (t - mp.mpf(1) / 2) ** 2)
            * mp.cos(2 * mp.pi * k * t),
            [lo, hi],
        )

    for k in [0, 1, 2, 7, 40]:
        print(f"k={k:3d}  {mp.nstr(kink_hat(k), 25)}")
    nrm = mp.quad(
        lambda t: (c * (mp.mpf(1) / 5 - (t - mp.mpf(1) / 2) ** 2)) ** 2,
        [mp.mpf(1) / 2 - a, mp.mpf(1) / 2 + a],
    )
    print("norm^2 =", mp.nstr(nrm, 25))

    print("\n== cube_bspline2 univariate Chebyshev coefficients ==")
    # g(x) = c2 * ((5+2x) on [-1,-1/2), (3-2x) on [-1/2,1]), Chebyshev measure
    # dx/(pi sqrt(1-x^2)); coefficients against eta_h = sqrt(2)^min(h,1) T_h.
    c2 = mp.sqrt(3 * mp.pi / (49 * mp.pi - 48 * mp.sqrt(3)))

    def piece(x):
        return 5 + 2 * x if x < -mp.mpf(1) / 2 else 3 - 2 * x

    def cheb_hat(h):
        scale = 1 if h == 0 else mp.sqrt(2)
        # substitute x = cos(theta): integral over theta in [0, pi] of
        # g(cos theta) scale cos(h theta) / pi.
        return mp.quad(
            lambda th: c2 * piece(mp.cos(th)) * scale * mp.cos(h * th) / mp.pi,
            [0, mp.mpf(2) / 3 * mp.pi, mp.pi],
        )

    for h in [0, 1, 2, 3, 4, 5, 6]:
        print(f"h={h}  {mp.nstr(cheb_hat(h), 25)}")
    nrm2 = mp.quad(
        lambda th: (c2 * piece(mp.cos(th))) ** 2 / mp.pi,
        [0, mp.mpf(2) / 3 * mp.pi, mp.pi],
    )
    print("norm^2 =", mp.nstr(nrm2, 25))
    print("lebesgue integral / c2 =", mp.nstr(
        mp.quad(lambda x: piece(x), [-1, -mp.mpf(1) / 2]) +
        mp.quad(lambda x: piece(x), [-mp.mpf(1) / 2, 1]), 25))

    print("\n== bspline6 normalizer ==")
    # N6 = 6th-order cardinal B-spline on [0,6]; g = c6 N6(6x) on [0,1].
    # ||N6(6 .)||_2^2 = (1/6)||N6||_2^2, and ||N6||_2^2 = N_{12}(6) by the
    # autocorrelation identity; compute directly by quadrature too.
    def bspline(p, t):
        if p == 1:
            return mp.mpf(1) if 0 <= t < 1 else mp.mpf(0)
        return (t * bspline(p - 1, t) + (p - t) * bspline(p - 1, t - 1)) / (p - 1)

    n6sq = mp.quad(lambda t: bspline(6, t) ** 2, list(range(7)))
    print("||N6||_2^2 =", mp.nstr(n6sq, 25))
    print("c6 = sqrt(6)/||N6|| =", mp.nstr(mp.sqrt(6 / n6sq), 25))
    # Fourier check: ghat(k) = c6/6 (-1)^k sinc^6(k/6) for a few k.
    c6 = mp.sqrt(6 / n6sq)
    for k in [0, 1, 5, 6, 12]:
        if k == 0:
            sinc6 = mp.mpf(1)
        else:
            x = mp.pi * k / 6
            sinc6 = (mp.sin(x) / x) ** 6
        direct = mp.quad(
            lambda t: c6 * bspline(6, 6 * t) * mp.cos(2 * mp.pi * k * t),
            [mp.mpf(j)/6 for j in range(7)],
        )
        formula = c6 / 6 * (-1) ** k * sinc6
        print(f"k={k:2d} direct {mp.nstr(direct, 20)}  formula {mp.nstr(formula, 20)}")

    print("\n== Daubechies filters (orthonormal, sum h = sqrt 2) ==")
    # Spectral factorization: P(y) = sum_{k<p} C(p-1+k, k) y^k; roots of
    # P((2 - z - 1/z)/4) inside unit disk -> minimum-phase factor.
    for p in range(1, 6):
        if p == 1:
            h = [1 / mp.sqrt(2), 1 / mp.sqrt(2)]
        else:
            # Build Laurent polynomial Q(z) = P((2-z-1/z)/4), then factor the
            # ordinary polynomial z^(p-1) Q(z) of degree 2p-2 and keep the
            # minimum-phase roots. Laurent polys as dict{power: coeff}.
            def lmul(a, b):
                out = {}
                for i, ca in a.items():
                    for j, cb in b.items():
                        out[i + j] = out.get(i + j, mp.mpf(0)) + ca * cb
                return out
            base = {0: mp.mpf(2) / 4, 1: mp.mpf(-1) / 4, -1: mp.mpf(-1) / 4}
            acc = {0: mp.mpf(1)}
            q = {}
            for k in range(p):
                coeff = mp.binomial(p - 1 + k, k)
                for pw, cv in acc.items():
                    q[pw] = q.get(pw, mp.mpf(0)) + coeff * cv
                acc = lmul(acc, base)
            # shift to ordinary polynomial of degree 2p-2
            lo = min(q)
            coeffs = [q.get(i + lo, mp.mpf(0)) for i in range(2 * p - 1)]
            roots = mp.polyroots(list(reversed(coeffs)), maxsteps=200, extraprec=200)
            inside = [r for r in roots if abs(r) < 1]
            assert len(inside) == p - 1, (p, [mp.nstr(abs(r), 8) for r in roots])
            # Build h by convolving ((1+z)/2)^p with the minimal-phase factor
            # prod (z - r) over the inside roots, then normalize sum h = sqrt 2.
            poly = [mp.mpf(1)]
            for r in inside:
                new = [mp.mpf(0)] * (len(poly) + 1)
                for i, cv in enumerate(poly):
                    new[i + 1] += cv          # z * poly
                    new[i] -= r * cv          # -r * poly
                poly = new
            # ((1+z)/2)^p coefficients
            lowpass = [mp.binomial(p, i) / 2 ** p for i in range(p + 1)]
            h = [mp.mpf(0)] * (len(poly) + len(lowpass) - 1)
            for i, a_ in enumerate(lowpass):
                for j, b_ in enumerate(poly):
                    h[i + j] += a_ * b_
            # normalize: sum h = sqrt(2); roots pair up conjugate so the
            # product is real up to roundoff in the root finder
            ssum = sum(h)
            h = [mp.re(mp.sqrt(2) * v / ssum) for v in h]
            # canonical sign/orientation: pick the variant whose energy leans
            # to the front (standard Daubechies extremal-phase convention:
            # |h0| maximal among (h, reversed h))? Use reversed if needed so
            # that h matches the published db tables (h0 > 0, energy front).
            if sum(i * v * v for i, v in enumerate(h)) > sum(
                i * v * v for i, v in enumerate(reversed(h))
            ):
                h = list(reversed(h))
            if h[0] < 0:
                h = [-v for v in h]
        print(f"db{p}:")
        for v in h:
            print("   ", mp.nstr(v, 25))
        # identities
        print("    sum =", mp.nstr(sum(h), 20), " sumsq =", mp.nstr(sum(v * v for v in h), 20))
        for shift in range(1, p):
            dot = sum(h[i] * h[i + 2 * shift] for i in range(len(h) - 2 * shift))
            print(f"    <h, h(.+{2*shift})> =", mp.nstr(dot, 8))

    print("\n== chebyshev b_h = int_{-1}^{1} eta_h dx ==")
    for h in [0, 1, 2, 3, 4, 6, 8]:
        scale = 1 if h == 0 else mp.sqrt(2)
        v = mp.quad(lambda x: scale * mp.cos(h * mp.acos(x)), [-1, 1])
        formula = (mp.mpf(2) if h == 0 else
                   (mp.mpf(0) if h % 2 == 1 else 2 * mp.sqrt(2) / (1 - h * h)))
        print(f"h={h}  quad {mp.nstr(v, 20)}  formula {mp.nstr(formula, 20)}")

    print("\n== closed-form vs quadrature: cube_bspline2 factors ==")
    # Candidate closed forms for the unnormalized Chebyshev factors
    # ghat_h / c2: k=0: 11/3 - 2 sqrt3/pi; k=1: -(3 sqrt6 + 2 sqrt2 pi)/(6 pi);
    # k>=2: 4 (sqrt3 k cos(2 pi k/3) + sin(2 pi k/3)) / (sqrt2 (k^3 - k) pi).
    print("c2 =", mp.nstr(c2, 25))
    forms = {
        0: mp.mpf(11) / 3 - 2 * mp.sqrt(3) / mp.pi,
        1: -(3 * mp.sqrt(6) + 2 * mp.sqrt(2) * mp.pi) / (6 * mp.pi),
    }
    for h in range(2, 7):
        forms[h] = (4 * (mp.sqrt(3) * h * mp.cos(2 * mp.pi * h / 3)
                         + mp.sin(2 * mp.pi * h / 3))
                    / (mp.sqrt(2) * (h ** 3 - h) * mp.pi))
    for h in range(0, 7):
        q = cheb_hat(h)
        print(f"h={h}  quad/c2 {mp.nstr(q / c2, 22)}  form {mp.nstr(forms[h], 22)}  "
              f"diff {mp.nstr(q / c2 - forms[h], 6)}")

    print("\n== closed-form vs quadrature: kink factors ==")
    # Candidate: (5^(5/4) sqrt3 / 8) (-1)^k (sqrt5 sin(2 pi k/sqrt5)
    #            - 2 pi k cos(2 pi k/sqrt5)) / (pi^3 k^3), k != 0;
    # k = 0: 5^(1/4)/sqrt(3).
    print("k=0 form", mp.nstr(mp.power(5, mp.mpf(1) / 4) / mp.sqrt(3), 22),
          " quad", mp.nstr(kink_hat(0), 22))
    for k in [1, 2, 7, 40]:
        arg = 2 * mp.pi * k / mp.sqrt(5)
        form = (mp.power(5, mp.mpf(5) / 4) * mp.sqrt(3) / 8 * (-1) ** k
                * (mp.sqrt(5) * mp.sin(arg) - 2 * mp.pi * k * mp.cos(arg))
                / (mp.pi ** 3 * k ** 3))
        q = kink_hat(k)
        print(f"k={k}  quad {mp.nstr(q, 22)}  form {mp.nstr(form, 22)}  "
              f"diff {mp.nstr(q - form, 6)}")

    print("\n== f075 hybrid-evaluation remainder sanity (k = 24) ==")
    # Asymptotic expansion with J = 10 terms evaluated in f64-like precision
    # must sit within the certified remainder of the true value.
    b = 24 * mp.pi
    lead = mp.re(mp.expjpi(mp.mpf(5) / 8) * mp.gamma(mp.mpf(5) / 4) / b ** mp.mpf("1.25"))
    series = mp.mpc(0)
    fall = mp.mpf(1)  # (1/4)(1/4 - 1)...(1/4 - j + 1)
    for j in range(10):
        if j > 0:
            fall *= mp.mpf(1) / 4 - (j - 1)
        series += fall * (mp.mpc(0, 1) / b) ** (j + 1)
    approx = lead - mp.re(mp.expj(b) * series)
    print("true  ", mp.nstr(f075_integral(24), 22))
    print("approx", mp.nstr(approx, 22))
    print("diff  ", mp.nstr(approx - f075_integral(24), 6))
    print("remainder bound |fall_10|/b^11 =",
          mp.nstr(abs(fall * (mp.mpf(1) / 4 - 9)) / b ** 11, 6))

    print("\n== legendre eta values for eval oracle ==")
    # eta_deg(x) = sqrt(2 deg + 1) P_deg(x), orthonormal wrt dx/2 on [-1,1].
    for (deg, x) in [(0, 0.3), (1, 0.3), (2, -0.7), (5, 0.911), (17, 0.2), (40, -0.99)]:
        v = mp.sqrt(2 * deg + 1) * mp.legendre(deg, mp.mpf(x))
        print(f"deg={deg:3d} x={x:6.3f}  {mp.nstr(v, 22)}")

    print("\n== hermitian eigen oracle (4x4) ==")
    a = mp.matrix([
        [mp.mpf(2), mp.mpc(0.3, -0.4), mp.mpc(0, 0.1), mp.mpf(0.5)],
        [mp.mpc(0.3, 0.4), mp.mpf(1), mp.mpc(-0.2, 0.6), mp.mpc(0.1, 0.1)],
        [mp.mpc(0, -0.1), mp.mpc(-0.2, -0.6), mp.mpf(3), mp.mpc(0.7, 0)],
        [mp.mpf(0.5), mp.mpc(0.1, -0.1), mp.mpc(0.7, 0), mp.mpf(0.8)],
    ])
    ev = mp.eigh(a, eigvals_only=True)
    for v in ev:
        print("  ", mp.nstr(v, 22))


if __name__ == "__main__":
    main()
