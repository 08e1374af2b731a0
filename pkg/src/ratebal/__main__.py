import sys

from ratebal.cli import main

sys.exit(main())
