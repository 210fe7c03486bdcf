import sys

from privchain.cli import main

sys.exit(main())
