import sys

from tristoch.cli import main

sys.exit(main())
