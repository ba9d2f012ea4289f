"""Independent sympy derivations of the reference values frozen into the tests.

Run with ``python3 scripts/symbolic_oracle.py``. Nothing here imports the
package's numerics; every number printed is exact or computed symbolically.
"""

from __future__ import annotations

import sympy as sp

I = sp.I


def quadratic_gradient(phi, n):
    s = sum(p**2 for p in phi[: n - 2])
    last = phi[n - 2]
    return [s - last**2, I * (s + last**2)] + [2 * phi[j] * last for j in range(n - 2)]


def trilinear_gradient(p):
    p1, p2, p3, p4, p5, p6 = p
    half = sp.Rational(1, 2)
    return [
        I * (p1 * p2 + p3 * p4) * p5 - half * (p1**2 + p2**2 - p3**2 - p4**2) * p6,
        I * (-p1 * p3 + p2 * p4) * p5 + (p2 * p3 - p1 * p4) * p6,
        (-p1 * p2 + p3 * p4) * p5 - I * half * (p1**2 + p2**2 + p3**2 + p4**2) * p6,
        (p1 * p3 + p2 * p4) * p5,
        (p1 * p3 + p2 * p4) * p6,
    ]


def trilinear_x_system(p, pt):
    p1, p2, p3, p4, p5, p6 = p
    x, y, z, t, u = pt
    half = sp.Rational(1, 2)
    return [
        p3 * p5 * (t - I * y) - (p1 * p6 - I * p2 * p5) * (x + I * z) - p4 * p6 * y + p3 * p6 * u,
        p4 * p5 * (t + I * y) - (p2 * p6 - I * p1 * p5) * (x + I * z) + p3 * p6 * y + p4 * p6 * u,
        p1 * p5 * (t - I * y) + (p3 * p6 + I * p4 * p5) * (x - I * z) + p2 * p6 * y + p1 * p6 * u,
        p2 * p5 * (t + I * y) + (p4 * p6 + I * p3 * p5) * (x - I * z) - p1 * p6 * y + p2 * p6 * u,
        p1 * p3 * (t - I * y) + p2 * p4 * (t + I * y) + I * p1 * p2 * (x + I * z) + I * p3 * p4 * (x - I * z),
        -half * (p1**2 + p2**2) * (x + I * z) + half * (p3**2 + p4**2) * (x - I * z)
        + (p2 * p3 - p1 * p4) * y + (p1 * p3 + p2 * p4) * u,
    ]


def main() -> None:
    # null identities
    for n in range(3, 9):
        phi = sp.symbols(f"p1:{n}")
        g = quadratic_gradient(phi, n)
        print(f"quadratic n={n}: sum g^2 =", sp.expand(sum(v**2 for v in g)))
    p = sp.symbols("p1:7")
    pt = sp.symbols("x y z t u", real=True)
    g5 = trilinear_gradient(p)
    print("trilinear: sum g^2 =", sp.expand(sum(v**2 for v in g5)))

    # the trilinear X-system is the phi-gradient of x . grad_h
    X = trilinear_x_system(p, pt)
    dot = sum(a * b for a, b in zip(pt, g5))
    print("trilinear X - d(x.g)/dphi:", [sp.expand(e - sp.diff(dot, v)) for e, v in zip(X, p)])
    sub = dict(zip(p, (1, 0, 0, 0, 1, 1))) | dict(zip(pt, (1, 0, 0, 0, 0)))
    print("trilinear X at phi=(1,0,0,0,1,1), x=e1:", [sp.simplify(e.subs(sub)) for e in X])
    print("trilinear grad at phi=(1,0,0,0,1,1):", [sp.simplify(e.subs(sub)) for e in g5])

    # quadratic X-system for n=3 and the F = phi1 linear solve at (1,1,1)
    x, y, z = sp.symbols("x y z", real=True)
    J = sp.Matrix([[x + I * y, z], [z, -(x - I * y)]])
    print("n=3 det:", sp.factor(J.det()))
    sol = J.subs({x: 1, y: 1, z: 1}).LUsolve(sp.Matrix([1, 0]))
    print("n=3 F=phi1 at (1,1,1):", [sp.nsimplify(sp.simplify(v)) for v in sol])
    print("n=3 X at phi=(1,2), x=(1,0,3):", list(J.subs({x: 1, y: 0, z: 3}) * sp.Matrix([1, 2])))

    # closed-form potential: h = x . g(phi) - 2 F(phi) along solutions (quadratic map)
    q1, q2 = sp.symbols("q1 q2")
    g3 = quadratic_gradient((q1, q2), 3)
    Fsym = sp.Function("F")(q1, q2)
    h = x * g3[0] + y * g3[1] + z * g3[2] - 2 * Fsym
    dh_dphi = [sp.diff(h, q) for q in (q1, q2)]
    X3 = list(J * sp.Matrix([q1, q2]))
    print("d(x.g - 2F)/dphi - 2(X - F_i):", [sp.simplify(a - 2 * (b - sp.diff(Fsym, q))) for a, b, q in zip(dh_dphi, X3, (q1, q2))])

    # M3: substituting F_i = X_i gives a real expression
    a1, b1, a2, b2 = sp.symbols("a1 b1 a2 b2", real=True)
    split = {q1: a1 + I * b1, q2: a2 + I * b2}
    m3 = (X3[0] * sp.conjugate(q2) - X3[1] * sp.conjugate(q1)).subs(split)
    print("M3 on the solution set, Im part:", sp.simplify(sp.im(sp.expand(m3))))

    # n=3, F = phi1^3 / 3: closed-form solution for a cubic test problem
    r2 = x**2 + y**2 + z**2
    phi1 = r2 / (x - I * y)
    phi2 = z * phi1 / (x - I * y)
    res = [sp.simplify(phi1**2 - X3[0].subs({q1: phi1, q2: phi2})), sp.simplify(-X3[1].subs({q1: phi1, q2: phi2}))]
    print("F=phi1^3/3 closed form residual:", res)


if __name__ == "__main__":
    main()
