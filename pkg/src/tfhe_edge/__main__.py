import sys

from tfhe_edge.cli import main

sys.exit(main())
