"""Screen <-> log-polar mapping, and the constant buffer size it implies.

Run: python3 demos/mapping_roundtrip.py
"""
import numpy as np

from vafr import mapping
from vafr.mapping import ConstantDelta, MappingContext

ctx = MappingContext()  # 1920x1080, c_r = 1/1080, gaze at the centre
print("buffer dims (u, v):", mapping.derive_buffer_dims(ctx.model, ctx.delta))
print("peak shading height (e*, l):", mapping.max_shading_height(ctx))

rng = np.random.default_rng(0)
x, y = rng.uniform(0, 1920, 5), rng.uniform(0, 1080, 5)
u, v, inside = mapping.forward_many(ctx, x, y)
xb, yb = mapping.inverse_many(ctx, u, v)
for row in zip(x, y, u, v, xb - x, yb - y):
    print("  ({:7.2f}, {:7.2f}) -> (u={:7.2f}, v={:7.2f})  error ({:.1e}, {:.1e})".format(*row))

# with half the tangential resolution the buffer is half as tall
half = MappingContext(delta=ConstantDelta(0.5))
print("delta=0.5 dims:", mapping.derive_buffer_dims(half.model, half.delta))
print("tangential/radial rate at 30 deg:",
      float(mapping.tangential_rate(ctx, 30.0) / mapping.radial_rate(ctx, 30.0)))
