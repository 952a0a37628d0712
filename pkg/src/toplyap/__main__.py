import sys

from toplyap.cli import main

sys.exit(main())
