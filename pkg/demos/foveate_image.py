"""Foveate a photograph: sharp at the gaze point, progressively coarser outwards.

Run: python3 demos/foveate_image.py [image] [x,y]
Writes demos/out/foveated.png and demos/out/lp_buffer.png.
"""
import sys
from pathlib import Path

import numpy as np

from vafr import foveate, lpbuffer
from vafr.mapping import MappingContext

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

if len(sys.argv) > 1:
    img = foveate.read_image(sys.argv[1])
else:
    # a synthetic test card: fine stripes everywhere make the falloff visible
    ys, xs = np.mgrid[0:1080, 0:1920]
    stripes = ((xs // 2 + ys // 2) % 2) * 255
    img = np.stack([stripes, (xs * 255) // 1919, (ys * 255) // 1079], axis=-1).astype(np.uint8)

h, w = img.shape[:2]
gaze = tuple(float(c) for c in sys.argv[2].split(",")) if len(sys.argv) > 2 else None
ctx = MappingContext(c_r=1.0 / h, display_w=w, display_h=h, gaze=gaze)
fov = foveate.Foveator(ctx, threads=4)
result = fov(img)
foveate.write_image(out_dir / "foveated.png", result)
lpbuffer.dump_png(fov.last_lp, out_dir / "lp_buffer.png")
print(f"{w}x{h} image -> {fov.buffer.valid_count:,} LP texels ({fov.buffer.width}x{fov.buffer.height})")
print("wrote", out_dir / "foveated.png", "and", out_dir / "lp_buffer.png")
