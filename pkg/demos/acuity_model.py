"""Acuity model: how much detail the eye resolves at each eccentricity.

Run: python3 demos/acuity_model.py
"""
from vafr import acuity

model = acuity.default_model()
print("pivots (deg, cpd):", model.pivots)
for e in (0, 2, 5, 10, 20, 40, 59.9):
    print(f"  e={e:5.1f} deg  acuity={float(acuity.acuity(model, e)):6.2f} cpd  MAR={float(acuity.mar(model, e)):.4f} deg")

# a display that resolves only 9 cycles per degree does not need more samples than that
capped = acuity.adapt_to_device(model, 9.0)
print("device-capped pivots:", capped.pivots)
