"""Reference values for tests/unit/test_baseline.cpp (scipy)."""
import math

from scipy.stats import mannwhitneyu, norm

a = [3.1, 4.5, 2.2, 6.7, 5.5, 4.5, 8.1, 3.3, 7.0, 2.9, 6.1, 5.0]
b = [4.0, 6.6, 7.7, 9.2, 5.5, 8.8, 10.1, 6.9, 7.5, 4.5]
print("ties", mannwhitneyu(a, b, method="asymptotic", use_continuity=True))
print("heavy ties", mannwhitneyu([1, 2, 2, 3, 3, 3, 4], [2, 3, 4, 4, 5, 5, 6, 6],
                                 method="asymptotic", use_continuity=True))
print("exact", mannwhitneyu([1.5, 3.2, 0.4, 2.8, 5.1], [2.0, 4.4, 6.3, 3.9, 7.7, 5.6], method="exact"))

x1, n1, x2, n2 = 18, 60, 12, 22
p = (x1 + x2) / (n1 + n2)
z = (x1 / n1 - x2 / n2) / math.sqrt(p * (1 - p) * (1 / n1 + 1 / n2))
print("two proportion", z, 2 * norm.sf(abs(z)))
