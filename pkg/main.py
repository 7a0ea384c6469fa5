#!/usr/bin/env python3
import sys


def main():
    from sear_hub.cli.interface import main as run
    sys.exit(run())

if __name__ == "__main__":
    main()
