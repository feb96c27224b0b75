"""plotkit command line: render every recognizable figure from a directory
of kerrosc runs."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import render_all


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plotkit")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render-all", help="render figures from kerrosc run outputs")
    p.add_argument("run_dir", help="directory containing kerrosc run folders")
    p.add_argument("--format", default="png,svg", help="comma list: png,svg")
    p.add_argument("--out", default=None, help="figure output directory (default: <run_dir>/figures)")
    args = parser.parse_args(argv)

    formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
    bad = [f for f in formats if f not in ("png", "svg")]
    if bad:
        print(f"error: unsupported format(s): {', '.join(bad)}", file=sys.stderr)
        return 2
    status = render_all(Path(args.run_dir), Path(args.out) if args.out else None, formats)
    if not status:
        print("no recognizable figure inputs found", file=sys.stderr)
        return 1
    width = max(len(fid) for fid in status)
    for fid in sorted(status):
        entry = status[fid]
        line = f"{fid:<{width}}  {entry['status']}"
        if entry.get("error"):
            line += f"  {entry['error']}"
        print(line)
    return 0 if all(e["status"] == "ok" for e in status.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
