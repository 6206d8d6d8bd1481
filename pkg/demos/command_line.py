"""
The full pipeline from the command line
=======================================

Runs every subcommand on the bundled toy workspace. The same sequence works
from a shell::

    charstyle --config config.json lexicon
    charstyle --config config.json syntax
    ...
"""

import tempfile
from pathlib import Path

from charstyle.cli import main
from charstyle.toy import write_toy_workspace

root = Path(tempfile.mkdtemp(prefix="charstyle-cli-"))
config = write_toy_workspace(root, seed=0)

for cmd in ("lexicon", "syntax", "refine", "assemble", "stability", "dataset", "eval"):
    code = main(["--config", str(config), cmd])
    assert code == 0, cmd

out = root / "out"
print("\nartifacts:", sorted(p.name for p in out.iterdir()))
print((out / "report.csv").read_text("utf-8"))
print((out / "frontier.csv").read_text("utf-8"))
