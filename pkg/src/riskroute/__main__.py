import sys

from riskroute.cli import main

sys.exit(main())
