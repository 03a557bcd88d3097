"""Programmatic entry point: run(argv) returns the command's exit code."""

import sys
from importlib import import_module

COMMANDS = ('gen', 'prep', 'train', 'eval', 'simulate', 'compare')
USAGE = f"usage: uplift_rank {{{','.join(COMMANDS)}}} [options]\n"


def run(argv, stdout=None, stderr=None):
    """Run one command from `argv` (without the program name); 0 ok, 1 usage, 2 data error."""
    err = stderr or sys.stderr
    if not argv or argv[0] not in COMMANDS:
        err.write(USAGE)
        if argv:
            err.write(f"unknown command '{argv[0]}'\n")
        return 1
    command = import_module(f"runs.management.commands.{argv[0]}").Command(stdout=stdout, stderr=stderr)
    try:
        command.run_from_argv(["uplift_rank", *argv])
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    return 0

