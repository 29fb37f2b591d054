"""cataleq: solve polynomial functional equations with one catalytic variable.

The library expands the Puiseux roots of the kernel/discriminant of a
catalytic functional equation, builds the polynomial systems they satisfy,
eliminates down to an annihilating polynomial for the target series, and
certifies the result by exact division plus high-order residual vanishing.
"""

__version__ = "0.1.0"
