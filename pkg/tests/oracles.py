"""Reference values computed once with 30-digit mpmath quadrature and frozen.

Landscape: quartic with a = 1, omega = 2, v0 = 1 (V = (t^2 - 1)^2 / 2 + 1), E = 1.
"""

L_CLASSICAL = 2.24548025250703137
T_DET = 0.895094655389063895
TAIL_LEFT = 1.50358081907103607
B_ZERO_PLUS = 2.00991737280072942
T_HIT = {(1.0, 1): 6.28127306546215244, (1.0, -1): 7.78485388453318851,
         (0.5, 1): 3.58818386042560817}
L_Y = 4.79735094892019993
I_WELLS = 1.79018931077812779

XE1_ARGMAX = 0.434818204384903760
HIT_CONSTANT = 4.45237122242277002
E1 = {1e-8: 17.8434650890508326, 0.1: 1.82292395841939062, 1.0: 0.219383934395520274,
      2.0: 0.0489005107080611196, 5.0: 0.00114829559127532580, 30.0: 3.02155201068881254e-15,
      700.0: 1.40651876623403292e-307}
