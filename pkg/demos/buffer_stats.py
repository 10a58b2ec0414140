"""Shading points per eye: the LP buffer stays the same size as displays grow.

Run: python3 demos/buffer_stats.py
"""
from vafr import cli

for row in cli.buffer_table():
    print(f"{row['preset']:>8} {row['resolution']:>11}  VaFR {row['VaFR']:>10,}  "
          f"LaFR(1.8) {row['LaFR(1.8)']:>11,}  full {row['GT']:>11,}  "
          f"saving x{row['GT'] / row['VaFR']:.1f}")
