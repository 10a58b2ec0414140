"""Foveated ray casting: one primary ray per LP texel instead of one per pixel.

Run: python3 demos/raycast_render.py [lights]
Writes demos/out/render_vafr.png and demos/out/render_gt.png.
"""
import sys
from pathlib import Path

from vafr import foveate, raycast

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

n_lights = int(sys.argv[1]) if len(sys.argv) > 1 else 3
scene, cam = raycast.fixture_scene(n_lights, 640, 360)
ctx = cam.context()

img, st = raycast.render_vafr(scene, cam, ctx, threads=4)
foveate.write_image(out_dir / "render_vafr.png", img)
print("foveated:", st.as_dict())

gt, st_gt = raycast.render_gt(scene, cam, threads=4)
foveate.write_image(out_dir / "render_gt.png", gt)
print("full resolution:", st_gt.as_dict())
# at this small size the LP buffer holds more texels than the screen has pixels;
# the saving appears from roughly 1 megapixel upwards and grows with resolution
