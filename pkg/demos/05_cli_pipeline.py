"""
Command-line pipeline
=====================

The same steps through the ``linea`` command: make a synthetic scene,
interpolate it, score it, and compare against a do-nothing baseline.
"""

import shutil
import tempfile
from pathlib import Path

from linea.cli import main

work = Path(tempfile.mkdtemp())

# a ring translating by (12, 0) with 5 ground-truth inbetweens
main(["synth", "translate", "--size", "128", "--gap", "5", "-o", str(work / "scene")])

# TPS-only inbetweening from the exact correspondences
main(["interp", str(work / "scene" / "frame0.png"), str(work / "scene" / "frame1.png"),
      "--corr", str(work / "scene" / "corr.json"), "--gap", "5", "--emit", "blend", "-o", str(work / "tps")])

# per-frame metrics
main(["eval", "--pred", str(work / "tps"), "--gt", str(work / "scene" / "gt"), "-o", str(work / "tps.csv")])
print((work / "tps.csv").read_text())

# a static baseline: frame 0 repeated
(work / "static").mkdir()
for k in range(1, 6):
    shutil.copy(work / "scene" / "frame0.png", work / "static" / f"t{k}.png")

main(["bench", "--gt", str(work / "scene" / "gt"),
      "--methods", f"tps={work / 'tps'},static={work / 'static'}", "-o", str(work / "table.md")])
print((work / "table.md").read_text())

shutil.rmtree(work)
