"""Compare the acuity-driven shading rate with log-polar baselines.

Run: python3 demos/baseline_curves.py
Writes demos/out/curves.csv (all presets, centre and corner gaze).
"""
from pathlib import Path

from vafr import acuity, baselines
from vafr.errors import DomainError
from vafr.baselines import BaselineParams, SweepSpec

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

model = acuity.default_model()
lmfr = BaselineParams(method="LMFR", W=2560, H=1440)
lafr = BaselineParams(W=2560, H=1440)
print(f"{'e':>5} {'acuity':>8} {'LMFR':>8} {'LaFR':>8}")
for e in (1, 3, 4.89, 10, 20, 30, 45, 55):
    print(f"{e:5.2f} {float(acuity.shading_rate(model, e)):8.2f} "
          f"{float(baselines.sr_lmfr(lmfr, e)):8.2f} {float(baselines.sr_lafr(lafr, e)):8.2f}")

left, right = baselines.sr_lafr_limits(BaselineParams())
print(f"LaFR jumps from {left:.3f} to {right:.3f} cpd at the foveal boundary")

try:
    baselines.sr_lafr_limits(BaselineParams(a=0.85))
except DomainError as exc:
    print("a=0.85:", exc)

rows = baselines.analyze(SweepSpec(gazes=("center", "corner")))
with open(out_dir / "curves.csv", "w") as fh:
    baselines.write_csv(rows, fh)
print(f"wrote {len(rows)} rows to {out_dir / 'curves.csv'}")
