import sys

from quartop.cli import main

sys.exit(main())
