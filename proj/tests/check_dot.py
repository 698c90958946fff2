"""Parses every dot file written by `meltlite dump-match` with pydot."""
import pathlib
import shutil
import subprocess
import sys

try:
    import pydot
except ImportError:
    print("pydot unavailable")
    sys.exit(77)

cli, source, out = sys.argv[1:4]
shutil.rmtree(out, ignore_errors=True)
subprocess.run([cli, "dump-match", "--work-dir", out, source], check=True)
files = sorted(pathlib.Path(out).glob("*.dot"))
if not files:
    sys.exit("no dot file written")
for f in files:
    graphs = pydot.graph_from_dot_data(f.read_text())
    if not graphs or not graphs[0].get_nodes():
        sys.exit(f"{f}: does not parse")
print(f"{len(files)} dot files parse")
