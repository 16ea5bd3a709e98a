import sys

from coinforge.cli import main

sys.exit(main())
