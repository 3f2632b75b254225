#! /bin/python3

import sys

from gp2run import gp2_cli

if __name__ == "__main__":
    sys.exit(gp2_cli.main())
