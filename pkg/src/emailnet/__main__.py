import sys

from emailnet.cli import main

sys.exit(main())
