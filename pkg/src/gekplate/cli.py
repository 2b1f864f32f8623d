"""Command-line entry point for convergence studies.

Values come from built-in defaults, then an optional ``key = value`` config
file, then flags, with later sources overriding earlier ones. Exit status is
0 when every grid point solved and 2 otherwise.
"""

import argparse
import importlib
import sys
from pathlib import Path

from .study import StudyConfig, format_tables, run_study, write_csv, write_json

_LIST_KEYS = {"n": int, "iota": float, "eta": float}
_SCALAR_KEYS = {
    "example": str,
    "quad-volume": int,
    "quad-error": int,
    "quad-edge": int,
    "solver": str,
    "mesh-file": str,
    "out": str,
    "format": str,
    "threads": int,
    "problem": str,
    "dump-system": str,
}


def _parse_list(text: str, cast):
    return tuple(cast(tok) for tok in str(text).split(",") if tok.strip())


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment, blank lines skip."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("_", "-")
        value = value.strip()
        if key in _LIST_KEYS:
            values[key] = _parse_list(value, _LIST_KEYS[key])
        elif key in _SCALAR_KEYS:
            values[key] = _SCALAR_KEYS[key](value)
        else:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return values


def _resolve_problem(spec_text: str):
    """Import 'package.module:factory' (or dotted) -> callable(iota)."""
    module_name, sep, attr = spec_text.partition(":")
    if not sep:
        module_name, _, attr = spec_text.rpartition(".")
    module = importlib.import_module(module_name)
    factory = getattr(module, attr)
    if not callable(factory):
        raise TypeError(f"{spec_text} is not callable")
    return factory


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gekplate-study",
        description="Convergence studies for the sixth-order plate solver.",
    )
    parser.add_argument("--config", help="key = value file; flags override it")
    parser.add_argument("--example", choices=("1", "2", "custom"))
    parser.add_argument("--n", help="comma-separated mesh sizes, e.g. 4,8,16,32,64")
    parser.add_argument("--iota", help="comma-separated size parameters (0 allowed)")
    parser.add_argument("--eta", help="comma-separated penalty parameters")
    parser.add_argument("--quad-volume", type=int, help="volume quadrature degree")
    parser.add_argument("--quad-error", type=int, help="error quadrature degree")
    parser.add_argument("--quad-edge", type=int, help="edge quadrature points")
    parser.add_argument("--solver", choices=("direct", "cg"))
    parser.add_argument("--mesh-file", help="read the mesh from FILE (custom runs)")
    parser.add_argument("--out", help="write results to FILE")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--threads", type=int, help="concurrent grid points")
    parser.add_argument(
        "--problem",
        help="factory 'module:name' mapping iota to a problem (example=custom)",
    )
    parser.add_argument(
        "--dump-system", metavar="PREFIX", help="dump assembled systems for debugging"
    )
    return parser


def config_from_args(args: argparse.Namespace) -> StudyConfig:
    merged = {}
    if args.config:
        merged.update(read_config_file(args.config))
    for key in list(_LIST_KEYS) + list(_SCALAR_KEYS):
        flag = getattr(args, key.replace("-", "_"))
        if flag is not None:
            merged[key] = _parse_list(flag, _LIST_KEYS[key]) if key in _LIST_KEYS else flag

    kwargs = {}
    if "example" in merged:
        kwargs["example"] = str(merged["example"])
    if "n" in merged:
        kwargs["ns"] = merged["n"]
    if "iota" in merged:
        kwargs["iotas"] = merged["iota"]
    if "eta" in merged:
        kwargs["etas"] = merged["eta"]
    for src, dst in (
        ("quad-volume", "quad_volume"),
        ("quad-error", "quad_error"),
        ("quad-edge", "quad_edge"),
        ("solver", "solver"),
        ("mesh-file", "mesh_file"),
        ("out", "out"),
        ("format", "format"),
        ("threads", "threads"),
        ("dump-system", "dump"),
    ):
        if src in merged:
            kwargs[dst] = merged[src]
    if "problem" in merged:
        kwargs["problem_factory"] = _resolve_problem(merged["problem"])
    return StudyConfig(**kwargs)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except (ValueError, TypeError, OSError, ImportError, AttributeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    result = run_study(config)
    print(format_tables(result))
    for failure in result.failures:
        print(f"FAILED {failure}", file=sys.stderr)

    if config.out:
        text = write_json(result) if config.format == "json" else write_csv(result)
        Path(config.out).write_text(text)
        print(f"wrote {config.out}")
    return 0 if result.ok else 2


if __name__ == "__main__":
    sys.exit(main())
