import sys

from ofqr.cli import main

sys.exit(main())
