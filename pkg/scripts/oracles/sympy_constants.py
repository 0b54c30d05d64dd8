"""Formula-substitution oracle for the moment-inequality constants.

Transcribes the constants directly as symbolic expressions and substitutes
the default kernel (d = 2, gamma2 = gamma3 = 1, theta3 = 0, b2 = phi = 1)
with m0 = m2 = 1. The cutoff norms are exact (2 pi and 2 pi^2), the binary
coercive value at order 4 is exact (3 pi / 2, attained at V parallel to u in
the high-energy limit), and the ternary coercive value is frozen at the
value below so the check isolates the algebra. Evaluated with 40 digits.
"""

import sympy as sp

from _store import save

LAMBDA_4 = sp.Float("13.415230744338189", 40)


def odi(q, g2, g3, th, m0, m2, nb2, nb3, alpha, lam):
    r = q / 2
    Cg2 = sp.Max(1, 2 ** (g2 - 1))
    Cg3 = 2 ** g3 * sp.Max(1, 3 ** (g3 - 1))
    C2r = r * sp.Max(1, 2 ** (r - 3))
    C3r = C2r + r * (r - 1) / 2 * sp.Max(1, 3 ** (r - 4))
    theta = lambda g: (q - 2) / (q + g) + g / (q + g - 2)
    Bexp = lambda g: ((g + 2) * (q + g - 2) + (q - 2) * (q + g)) / (2 * (q - 2))
    eps2 = (nb2 - alpha) * 2 ** (-g2 / 2) * m0 / (2 * alpha * C2r * Cg2 * theta(g2))
    eps3 = (sp.Rational(1, 2) * (nb3 - lam) * 3 ** (-th / 2) * sp.Rational(2, 3) ** (g3 / 2)
            * m0 ** 2 / (2 * lam * C3r * Cg3 * theta(g3)))
    E = (alpha * C2r * Cg2 * eps2 ** (-theta(g2) / (1 - theta(g2))) * m2 ** Bexp(g2)
         + lam * C3r * Cg3 * eps3 ** (-theta(g3) / (1 - theta(g3))) * m2 ** Bexp(g3))
    D = (alpha * C2r * Cg2 * m2 + (nb2 - alpha) * m2 + 2 * lam * C3r * Cg3 * m2 ** 2
         + (nb3 - lam) * 3 ** (-th / 2) * m2 ** 2)
    C = E / m0 + D
    Cp = sp.Min((nb2 - alpha) * 2 ** (-1 - g2 / 2) * m0,
                sp.Rational(1, 4) * (nb3 - lam) * 3 ** (-th / 2) * sp.Rational(2, 3) ** (g3 / 2)
                * m0 ** 2)
    Ct = Cp * (m2 ** (-g2 / (q - 2)) + m2 ** (-g3 / (q - 2)))
    K1 = 2 ** (1 - g2 / 2) * m0 * (nb2 - alpha)
    K2 = 3 * sp.Rational(2, 3) ** (g3 / 2) * m0 ** 2 * (nb3 - lam)
    K3 = 2 * m2 * (nb2 - alpha) + 6 * m0 * m2 * (nb3 - lam)
    return {"C": C, "C_prime": Cp, "C_tilde": Ct, "E": E, "D": D, "K1": K1, "K2": K2, "K3": K3}


def main():
    one = sp.Integer(1)
    q = sp.Integer(4)
    vals = odi(q, one, one, sp.Integer(0), one, one, 2 * sp.pi, 2 * sp.pi ** 2,
               3 * sp.pi / 2, LAMBDA_4)
    C, Ct = vals["C"], vals["C_tilde"]
    gamma = one
    x_star = (4 * C / Ct) ** 2
    L = lambda x: 2 * C * x - Ct / 2 * x ** sp.Rational(3, 2)
    L_star = sp.Rational(8, 27) * x_star * C
    A = (4 * C / Ct) ** 2 * (1 + sp.Rational(8, 27) * C)
    out = {k: float(sp.N(v, 40)) for k, v in vals.items()}
    out.update({"order_wellposed": float(2 + 2 * gamma), "x_star": float(sp.N(x_star, 40)),
                "L_star": float(sp.N(L_star, 40)), "A": float(sp.N(A, 40)),
                "L_at_x_star": float(sp.N(L(x_star), 40)),
                "L_at_critical": float(sp.N(L(sp.Rational(64, 9) * C ** 2 / Ct ** 2), 40)),
                "frozen": {"alpha_4": float(sp.N(3 * sp.pi / 2, 30)), "lambda_4": float(LAMBDA_4),
                           "norm2": float(sp.N(2 * sp.pi, 30)),
                           "norm3": float(sp.N(2 * sp.pi ** 2, 30))}})
    save("constants_q4_default", out)


if __name__ == "__main__":
    main()
