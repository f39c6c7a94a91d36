#!/usr/bin/env python3
"""
Test runner script for confmorph.

Wraps pytest with the selections used during development: the fast unit
suite, the end-to-end command line workflows, the slow acceptance-size
meshes and coverage over the ``confmorph`` package.
"""

import argparse
import os
import subprocess
import sys
from pathlib import Path


def run_command(command: list[str], description: str, env: dict[str, str]) -> int:
    """
    Run a command and return its exit code.

    Args:
        command: Command to run as list of strings
        description: Description of what the command does
        env: Environment for the child process
    """
    print(f"\n{'=' * 60}")
    print(f"Running: {description}")
    print(f"Command: {' '.join(command)}")
    print(f"{'=' * 60}")

    result = subprocess.run(command, cwd=Path(__file__).parent, env=env, check=False)
    return result.returncode


def main() -> None:
    """Main function for the test runner."""
    parser = argparse.ArgumentParser(description="confmorph Test Runner")
    parser.add_argument(
        "test_type",
        choices=["all", "unit", "integration", "slow", "coverage", "quick", "ci"],
        help="Type of tests to run",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Run tests in verbose mode")
    parser.add_argument("--fail-fast", "-x", action="store_true", help="Stop on first failure")
    parser.add_argument("--coverage-html", action="store_true", help="Generate HTML coverage report")
    parser.add_argument("-k", dest="keyword", default=None, help="Only run tests matching this expression")
    parser.add_argument(
        "--log",
        choices=["error", "info", "debug"],
        default="error",
        help="MORPH_LOG level inside the tests (numerical progress is very chatty at debug)",
    )

    args = parser.parse_args()

    base_cmd = ["poetry", "run", "pytest"]
    if args.verbose:
        base_cmd.append("-v")
    if args.fail_fast:
        base_cmd.append("-x")
    if args.keyword:
        base_cmd += ["-k", args.keyword]

    coverage_cmd = [*base_cmd, "--cov=confmorph", "--cov-report=term-missing"]
    if args.coverage_html:
        coverage_cmd.append("--cov-report=html")

    commands = {
        "all": [*base_cmd, "tests/"],
        "unit": [*base_cmd, "tests/unit/", "-m", "not slow"],
        "integration": [*base_cmd, "tests/integration/"],
        "slow": [*base_cmd, "tests/", "-m", "slow"],
        "coverage": [*coverage_cmd, "tests/"],
        "quick": [*base_cmd, "tests/unit/", "-m", "not slow and not integration", "-q"],
        "ci": [*base_cmd, "tests/", "--tb=short", "--strict-markers", "--disable-warnings", "--durations=10"],
    }

    env = {**os.environ, "MORPH_LOG": args.log}
    exit_code = run_command(commands[args.test_type], f"Running {args.test_type} tests", env)

    if exit_code == 0:
        print(f"\n✅ {args.test_type.title()} tests passed!")
    else:
        print(f"\n❌ {args.test_type.title()} tests failed!")
        sys.exit(exit_code)


if __name__ == "__main__":
    main()
