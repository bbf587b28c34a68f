#!/usr/bin/env python3
"""Convert ``opt -debug-pass=Arguments`` output into a pipeline file.

    opt -O2 -debug-pass=Arguments -disable-output < /dev/null 2> args.txt
    python3 scripts/structure_to_pipeline.py args.txt --source "llvm 5.0 opt -O2" > O2.txt

Every ``Pass Arguments:`` line is read in order and concatenated. A pass is
tagged ``T`` (a cut point) when it is one of the documented transformation
passes below, ``A`` otherwise. ``--only-last`` keeps just the last line,
which for ``opt -O2`` is the module pipeline.
"""

import argparse
import sys

from passprefix.pipeline import PassPipeline, serialize_pipeline

# transformation passes listed in the LLVM pass documentation
DOCUMENTED_TRANSFORMATIONS = frozenset("""
adce always-inline argpromotion bb-vectorize block-placement break-crit-edges
codegenprepare constmerge constprop dce deadargelim deadtypeelim die dse
functionattrs globaldce globalopt gvn indvars inline instcombine internalize
ipconstprop ipsccp jump-threading lcssa licm loop-deletion loop-extract
loop-extract-single loop-reduce loop-rotate loop-simplify loop-unroll
loop-unswitch loweratomic lowerinvoke lowerswitch mem2reg memcpyopt mergefunc
mergereturn partial-inliner prune-eh reassociate reg2mem sroa sccp simplifycfg
sink strip strip-dead-debug-info strip-dead-prototypes strip-debug-declare
strip-nondebug tailcallelim
""".split())


def argument_lines(text):
    out = []
    for line in text.splitlines():
        _, sep, rest = line.partition("Pass Arguments:")
        if sep:
            out.append([tok.lstrip("-") for tok in rest.split()])
    return out


def to_pipeline(text, source="", level="", only_last=False, transformations=DOCUMENTED_TRANSFORMATIONS):
    lines = argument_lines(text)
    if not lines:
        raise ValueError("no 'Pass Arguments:' lines found")
    if only_last:
        lines = lines[-1:]
    names = [name for line in lines for name in line]
    kinds = ["T" if n in transformations else "A" for n in names]
    return PassPipeline.from_passes(zip(names, kinds), source_label=source, level=level)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("input", nargs="?", type=argparse.FileType("r"), default=sys.stdin)
    ap.add_argument("--source", default="")
    ap.add_argument("--level", default="-O2")
    ap.add_argument("--only-last", action="store_true")
    args = ap.parse_args(argv)
    try:
        p = to_pipeline(args.input.read(), args.source, args.level, args.only_last)
    except ValueError as exc:
        ap.error(str(exc))
    sys.stdout.write(serialize_pipeline(p))
    print(f"{len(p)} passes, {p.transformation_count} transformations", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
