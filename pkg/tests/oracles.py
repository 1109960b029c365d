"""Reference values frozen before the corresponding code paths were written.

Each entry notes how it was obtained; none of them is produced by the package itself
except where the entry says so (the cross-method checks then compare two routes).
"""
# mpmath, 30 digits: positive root of y^3 + y = E
YTILDE = {0.352268: 0.319617395597708438256673604073,
          0.3849001794597505: 0.344142120645971838937475833997}

# mpmath: exp(-5i pi/4) 3^(-5/4)
BETA_PLUS_1 = complex(-0.179094988637256986592223026118, 0.179094988637256986592223026118)
# mpmath: -(0.0558)^(-4/5)
ALPHA_00558 = -10.0621929468052575762297792688

# mpmath quad + findroot: real E where Re of the straight I_- -> I_0 integral of sqrt(V - E) vanishes
E_CRITICAL = 0.352268459209307250631641091631

# shooting oracle (two inward WKB-initialized Taylor integrations, secant on the Wronskian);
# agrees with the literature ground state of p^2 + i x^3 to all quoted digits
E0_K0 = 1.1562670719883317

# symbolic ladder algebra: <0| x^3 |3> in the omega = 1 Hermite basis
X3_03 = (1 * 2 * 3) ** 0.5 / (2 * 2 ** 0.5)
