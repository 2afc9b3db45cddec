import sys

from couplinglab.cli import main

sys.exit(main())
