import sys

from treecoder.cli import main

sys.exit(main())
